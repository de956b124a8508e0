//! The `fracfield` command line.
//!
//! Exit codes: 0 success, 1 input or file error, 2 a computation finished but
//! did not meet its tolerance (non-stationary solve, failed check, stalled
//! extraction).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::decomposition::{self, ExtractConfig};
use crate::error::{Error, Result};
use crate::extension::{self, ExtensionGrid};
use crate::fractional::{self, FracParams};
use crate::grid::{Field, GridSpec};
use crate::io::{self, scalar, RunReport};
use crate::nonlinearity::{self, Nonlinearity, Quadrature};
use crate::parallel;
use crate::variational::{self, LevelsReport, SolverConfig};

/// Relative tolerance for the Pohozaev and Nehari checks.
pub const IDENTITY_TOL: f64 = 1e-2;
const SELFSIM_TOL: f64 = 1e-10;
const ENERGY_IDENTITY_TOL: f64 = 0.03;
const NEUMANN_TOL: f64 = 0.05;
const BUDGET_SLACK: f64 = 0.05;

#[derive(Parser, Debug)]
#[command(name = "fracfield", version, about = "Spectral solver toolkit for (-Delta)^s u = f(u) on periodic grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximize Phi on a D-sphere and rescale the maximizer into a solution.
    Solve(SolveArgs),
    /// Evaluate an identity or bound on a stored field.
    Check(CheckArgs),
    /// Extract dilation/translation profiles from a sequence of fields.
    Decompose(DecomposeArgs),
    /// Harmonic extension residuals of a stored field.
    Extend(ExtendArgs),
    /// Levels S_1, S_l, l_0, c(I), inf I and beta, optionally over several grids.
    Levels(LevelsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum NlChoice {
    Critical,
    Logcos,
}

#[derive(Args, Debug, Default)]
struct ProblemArgs {
    /// TOML file with problem and solver settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    s: Option<f64>,
    /// Box side L.
    #[arg(long = "box")]
    box_length: Option<f64>,
    #[arg(long)]
    nonlinearity: Option<NlChoice>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Relative stationarity tolerance of the solver.
    #[arg(long)]
    tol: Option<f64>,
    /// Oversampling factor for integrals of F (0 for the plain grid rule).
    #[arg(long)]
    oversample: Option<usize>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Points per axis M.
    #[arg(long)]
    grid: Option<usize>,
    /// Sphere radius l.
    #[arg(long)]
    level: Option<f64>,
    /// Field file for the solution.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckKind {
    Pohozaev,
    Nehari,
    Sobolev,
    Selfsim,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Field file.
    input: PathBuf,
    #[arg(long)]
    check: CheckKind,
    #[arg(long, value_enum, default_value = "critical")]
    nonlinearity: NlChoice,
    /// Pass threshold; defaults to 1e-2 (1e-10 for selfsim).
    #[arg(long)]
    tol: Option<f64>,
    /// Dilation factor for selfsim; defaults to the nonlinearity's own or 2.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 2)]
    oversample: usize,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    /// Sequence manifest, or a single field file.
    input: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    gamma: f64,
    /// Stop once the final residual's critical norm is below this.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = 4)]
    max_profiles: usize,
    /// Final indices averaged per weak-limit estimate.
    #[arg(long, default_value_t = 2)]
    tail: usize,
    #[arg(long, default_value_t = -8, allow_hyphen_values = true)]
    min_level: i32,
    #[arg(long, default_value_t = 8)]
    max_level: i32,
    /// Directory for the extracted profiles and their manifest.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExtendArgs {
    /// Field file.
    input: PathBuf,
    /// Extension height; defaults to L/2.
    #[arg(long)]
    ymax: Option<f64>,
    #[arg(long, default_value_t = 128)]
    ynodes: usize,
    /// Node grading exponent toward y = 0.
    #[arg(long, default_value_t = 2.0)]
    grading: f64,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LevelsArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Points per axis; a comma list gives one row per grid.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<usize>,
    /// Extra sphere radii l for S_l.
    #[arg(long, value_delimiter = ',')]
    extra: Vec<f64>,
    /// CSV table of levels against resolution.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    dim: Option<usize>,
    s: Option<f64>,
    #[serde(rename = "box")]
    box_length: Option<f64>,
    grid: Option<usize>,
    nonlinearity: Option<NlChoice>,
    level: Option<f64>,
    solver: Option<SolverConfig>,
}

struct Problem {
    params: FracParams,
    box_length: f64,
    nl_choice: NlChoice,
    nl: Nonlinearity,
    solver: SolverConfig,
}

fn read_config(path: &Option<PathBuf>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn quadrature(k: usize) -> Quadrature {
    if k == 0 {
        Quadrature::Grid
    } else {
        Quadrature::Oversampled(k)
    }
}

fn nonlinearity(choice: NlChoice, params: FracParams) -> Nonlinearity {
    match choice {
        NlChoice::Critical => Nonlinearity::critical(params),
        NlChoice::Logcos => Nonlinearity::log_cos(params),
    }
}

fn problem(a: &ProblemArgs, file: &FileConfig) -> Result<Problem> {
    let dim = a.dim.or(file.dim).unwrap_or(2);
    let s = a.s.or(file.s).unwrap_or(0.5);
    // Validated before anything else is read or computed.
    let params = FracParams::new(dim, s)?;
    let box_length = a.box_length.or(file.box_length).unwrap_or(80.0);
    let nl_choice = a.nonlinearity.or(file.nonlinearity).unwrap_or(NlChoice::Critical);
    let mut solver = file.solver.clone().unwrap_or_default();
    if let Some(v) = a.seed {
        solver.seed = v;
    }
    if let Some(v) = a.max_iters {
        solver.max_iters = v;
    }
    if let Some(v) = a.tol {
        solver.tol = v;
    }
    if let Some(v) = a.oversample {
        solver.quadrature = quadrature(v);
    }
    solver.validate()?;
    Ok(Problem { params, box_length, nl_choice, nl: nonlinearity(nl_choice, params), solver })
}

fn parameters(p: &FracParams, gamma: Option<f64>, g: Option<&GridSpec>, grids: &[usize]) -> Value {
    json!({
        "N": p.dim(),
        "s": p.s(),
        "gamma": gamma,
        "L": g.map(|g| g.length()),
        "M": if grids.len() == 1 || grids.is_empty() { json!(g.map(|g| g.points())) } else { json!(grids) },
    })
}

fn emit(report: &RunReport, path: &Option<PathBuf>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, report.to_json() + "\n")?,
        None => println!("{}", report.to_json()),
    }
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn tol_of(cfg: &SolverConfig) -> Option<f64> {
    Some(cfg.tol)
}

fn levels_json(r: &LevelsReport, cfg: &SolverConfig) -> Value {
    let t = tol_of(cfg);
    let sl: Map<String, Value> = r.sl.iter().map(|(k, v)| (k.clone(), scalar(*v, t))).collect();
    json!({
        "S1": scalar(r.s1, t),
        "Sl": sl,
        "l0": scalar(r.l0, t),
        "ground_level": scalar(r.ground_level, t),
        "cI": scalar(r.c_i, t),
        "infimum_I": scalar(r.infimum_i, t),
        "beta": scalar(r.beta, t),
        "residuals": {
            "pohozaev": scalar(r.pohozaev_residual, Some(IDENTITY_TOL)),
            "nehari": scalar(r.nehari_residual, Some(IDENTITY_TOL)),
            "pohozaev_grid": scalar(r.pohozaev_residual_grid, Some(IDENTITY_TOL)),
            "stationarity": scalar(r.stationarity, t),
        },
        "converged": r.converged,
    })
}

fn solve(a: SolveArgs) -> Result<i32> {
    let file = read_config(&a.problem.config)?;
    let pr = problem(&a.problem, &file)?;
    let grid = GridSpec::new(pr.params.dim(), a.grid.or(file.grid).unwrap_or(256), pr.box_length)?;
    let level = a.level.or(file.level).unwrap_or(1.0);
    if !(level > 0.0 && level.is_finite()) {
        return Err(Error::InvalidArgument(format!("level must be positive, got {level}")));
    }
    let mut report = RunReport::new(
        "solve",
        parameters(&pr.params, pr.nl.natural_gamma(), Some(&grid), &[]),
        json!({ "nonlinearity": pr.nl_choice, "level": level, "solver": pr.solver }),
        &[],
    );
    let start = Instant::now();
    let sol = variational::maximize_s(level, &pr.nl, grid, &pr.solver)?;
    let solve_secs = start.elapsed().as_secs_f64();
    let quad = pr.solver.quadrature;
    let t = tol_of(&pr.solver);
    let mut results = json!({
        "Sl": scalar(sol.value, t),
        "iterations": sol.iterations,
        "converged": sol.converged,
        "stationarity": scalar(sol.stationarity, t),
        "sobolev_constant_formula": scalar(fractional::sobolev_constant(&pr.params), None),
        "sobolev_constant_sharp": scalar(fractional::sharp_sobolev_constant(&pr.params), None),
    });
    let out_field = match variational::rescale_to_solution(&sol.field, &pr.nl, quad) {
        Ok((u, mu, beta, res)) => {
            results["multiplier"] = scalar(mu, t);
            results["beta"] = scalar(beta, t);
            results["equation_residual"] = scalar(res, Some(IDENTITY_TOL));
            results["residuals"] = json!({
                "pohozaev": scalar(variational::pohozaev_relative_with(&u, &pr.nl, &pr.params, quad)?, Some(IDENTITY_TOL)),
                "nehari": scalar(variational::nehari_relative_with(&u, &pr.nl, &pr.params, quad)?, Some(IDENTITY_TOL)),
                "stationarity": scalar(sol.stationarity, t),
            });
            results["energy"] = scalar(variational::energy_with(&u, &pr.nl, &pr.params, quad)?, t);
            results["written"] = json!("solution");
            u
        }
        Err(e) => {
            results["written"] = json!("maximizer");
            results["rescale_error"] = json!(e.to_string());
            sol.field.clone()
        }
    };
    if let Some(out) = &a.out {
        io::save_field(out, &out_field, pr.params.s())?;
    }
    report.results = results;
    report.timings = json!({ "solve_seconds": solve_secs, "total_seconds": start.elapsed().as_secs_f64() });
    emit(&report, &a.report)?;
    if sol.converged {
        Ok(0)
    } else {
        eprintln!("solver stopped before reaching tolerance (stationarity {:.3e}); best effort written", sol.stationarity);
        Ok(2)
    }
}

fn check(a: CheckArgs) -> Result<i32> {
    let bytes = fs::read(&a.input)?;
    let (u, s) = io::decode_field(&bytes)?;
    let params = FracParams::new(u.grid().dim(), s)?;
    let nl = nonlinearity(a.nonlinearity, params);
    let quad = quadrature(a.oversample);
    let (name, residual, default_tol) = match a.check {
        CheckKind::Pohozaev => ("pohozaev", variational::pohozaev_relative_with(&u, &nl, &params, quad)?, IDENTITY_TOL),
        CheckKind::Nehari => ("nehari", variational::nehari_relative_with(&u, &nl, &params, quad)?, IDENTITY_TOL),
        CheckKind::Sobolev => {
            // Excess of the embedding quotient over the sharp constant.
            let r = match fractional::sobolev_quotient(&u, &params) {
                Ok(q) => (q / fractional::sharp_sobolev_constant(&params) - 1.0).max(0.0),
                Err(Error::ZeroSeminorm) => 0.0,
                Err(e) => return Err(e),
            };
            ("sobolev", r, IDENTITY_TOL)
        }
        CheckKind::Selfsim => {
            let gamma = a.gamma.or(nl.natural_gamma()).unwrap_or(2.0);
            if !(gamma > 1.0) {
                return Err(Error::InvalidArgument(format!("dilation factor must exceed 1, got {gamma}")));
            }
            let stride = (u.grid().len() / 1000).max(1);
            let mut worst: f64 = 0.0;
            for &t in u.values().iter().step_by(stride) {
                for j in -3..=3 {
                    let scale = nl.primitive(t).abs().max(1e-300);
                    worst = worst.max(nonlinearity::selfsim_residual(&nl, gamma, t, j) / scale);
                }
            }
            ("selfsim", worst, SELFSIM_TOL)
        }
    };
    let tol = a.tol.unwrap_or(default_tol);
    let ok = residual.abs() <= tol;
    println!("{name} residual = {residual:.6e} (tol {tol:.1e}): {}", verdict(ok));
    if a.report.is_some() {
        let mut report = RunReport::new(
            "check",
            parameters(&params, a.gamma, Some(u.grid()), &[]),
            json!({ "check": name, "nonlinearity": a.nonlinearity, "oversample": a.oversample }),
            &[&bytes],
        );
        report.results = json!({ name: scalar(residual, Some(tol)), "pass": ok });
        emit(&report, &a.report)?;
    }
    Ok(if ok { 0 } else { 2 })
}

fn is_field_file(path: &Path) -> Result<bool> {
    let bytes = fs::read(path)?;
    Ok(bytes.starts_with(io::MAGIC))
}

fn decompose(a: DecomposeArgs) -> Result<i32> {
    let (seq, s, inputs) = if is_field_file(&a.input)? {
        let bytes = fs::read(&a.input)?;
        let (u, s) = io::decode_field(&bytes)?;
        (vec![u], s, vec![bytes])
    } else {
        let (seq, s) = io::load_sequence(&a.input)?;
        let inputs = io::read_manifest(&a.input)?.iter().map(fs::read).collect::<std::io::Result<Vec<_>>>()?;
        (seq, s, inputs)
    };
    let g = *seq[0].grid();
    let params = FracParams::new(g.dim(), s)?;
    let cfg = ExtractConfig { tol: a.tol, max_profiles: a.max_profiles, tail: a.tail, levels: (a.min_level, a.max_level) };
    let input_refs: Vec<&[u8]> = inputs.iter().map(|v| v.as_slice()).collect();
    let mut report = RunReport::new(
        "decompose",
        parameters(&params, Some(a.gamma), Some(&g), &[]),
        serde_json::to_value(&cfg)?,
        &input_refs,
    );
    let start = Instant::now();
    let (masses, norms) = decomposition::cocompactness_indicator(&seq, a.gamma, &params)?;
    let rep = match decomposition::extract(&seq, a.gamma, &params, &cfg) {
        Ok(r) => r,
        Err(Error::Stalled(msg)) => {
            eprintln!("extraction stalled: {msg}");
            report.results = json!({ "stalled": msg, "cocompactness": { "mass": masses, "crit_norm": norms } });
            emit(&report, &a.report)?;
            return Ok(2);
        }
        Err(e) => return Err(e),
    };
    let profiles: Vec<Value> = rep
        .profiles
        .iter()
        .map(|p| {
            json!({
                "class": p.class,
                "levels": p.elements.iter().map(|e| e.level).collect::<Vec<_>>(),
                "shifts": p.elements.iter().map(|e| e.shift.clone()).collect::<Vec<_>>(),
                "norm_sq": scalar(fractional::dnorm_sq(&p.w, &params), None),
            })
        })
        .collect();
    let b = &rep.norm_budget;
    let budget_ok = b.sum <= b.limsup * (1.0 + BUDGET_SLACK);
    let separations: Vec<Value> =
        rep.separations.iter().map(|((n, m), v)| json!({ "pair": [n, m], "values": v })).collect();
    report.results = json!({
        "count": rep.profiles.len(),
        "profiles": profiles,
        "norm_budget": { "sum": b.sum, "limsup": b.limsup, "max": b.max, "tol": BUDGET_SLACK, "pass": budget_ok },
        "separations": separations,
        "remainder_crit_norms": rep.remainder_crit_norms.iter().map(|v| scalar(*v, Some(a.tol))).collect::<Vec<_>>(),
        "remainder_history": rep.remainder_history,
        "cocompactness": { "mass": masses, "crit_norm": norms },
    });
    if let Some(dir) = &a.out_dir {
        let ws: Vec<Field> = rep.profiles.iter().map(|p| p.w.clone()).collect();
        io::save_sequence(dir, "profile", &ws, s)?;
    }
    report.timings = json!({ "total_seconds": start.elapsed().as_secs_f64() });
    emit(&report, &a.report)?;
    Ok(if budget_ok { 0 } else { 2 })
}

fn extend(a: ExtendArgs) -> Result<i32> {
    let bytes = fs::read(&a.input)?;
    let (u, s) = io::decode_field(&bytes)?;
    let params = FracParams::new(u.grid().dim(), s)?;
    let g = *u.grid();
    let ymax = a.ymax.unwrap_or(g.length() / 2.0);
    let eg = ExtensionGrid::new(g, a.ynodes, ymax, a.grading)?;
    let mut report = RunReport::new(
        "extend",
        parameters(&params, None, Some(&g), &[]),
        json!({ "ymax": ymax, "ynodes": a.ynodes, "grading": a.grading }),
        &[&bytes],
    );
    let start = Instant::now();
    // The identities concern the zero-mean part; constants extend trivially.
    let mean = u.mean();
    let u = u.zero_mean();
    let energy = extension::energy_identity_residual(&u, s, &eg)?;
    let neumann = extension::neumann_trace_residual(&u, s, &eg)?;
    let ok = energy.abs() < ENERGY_IDENTITY_TOL && neumann.abs() < NEUMANN_TOL;
    report.results = json!({
        "kappa": scalar(extension::kappa(s)?, None),
        "mean_removed": mean,
        "energy_identity_residual": scalar(energy, Some(ENERGY_IDENTITY_TOL)),
        "neumann_trace_residual": scalar(neumann, Some(NEUMANN_TOL)),
        "pass": ok,
    });
    report.timings = json!({ "total_seconds": start.elapsed().as_secs_f64() });
    emit(&report, &a.report)?;
    Ok(if ok { 0 } else { 2 })
}

fn levels(a: LevelsArgs) -> Result<i32> {
    let file = read_config(&a.problem.config)?;
    let pr = problem(&a.problem, &file)?;
    let grids = if a.grid.is_empty() { vec![file.grid.unwrap_or(256)] } else { a.grid.clone() };
    if let Some(bad) = a.extra.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument(format!("extra level must be positive, got {bad}")));
    }
    let specs = grids
        .iter()
        .map(|&m| GridSpec::new(pr.params.dim(), m, pr.box_length))
        .collect::<Result<Vec<_>>>()?;
    let mut report = RunReport::new(
        "levels",
        parameters(&pr.params, pr.nl.natural_gamma(), specs.first(), &grids),
        json!({ "nonlinearity": pr.nl_choice, "extra": a.extra, "solver": pr.solver }),
        &[],
    );
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut per_grid = Map::new();
    let mut timings = Map::new();
    for g in &specs {
        let t0 = Instant::now();
        let r = variational::levels_with(&pr.nl, *g, &pr.solver, &a.extra)?;
        timings.insert(g.points().to_string(), json!(t0.elapsed().as_secs_f64()));
        per_grid.insert(g.points().to_string(), levels_json(&r, &pr.solver));
        rows.push((g.points(), r));
    }
    let all_converged = rows.iter().all(|(_, r)| r.converged);
    report.results = if rows.len() == 1 { per_grid.into_iter().next().expect("one row").1 } else { Value::Object(per_grid) };
    timings.insert("total_seconds".into(), json!(start.elapsed().as_secs_f64()));
    report.timings = Value::Object(timings);
    if let Some(path) = &a.csv {
        let mut csv = String::from("M,S1,l0,ground_level,cI,infimum_I,beta,pohozaev,nehari,stationarity,converged\n");
        for (m, r) in &rows {
            csv.push_str(&format!(
                "{m},{},{},{},{},{},{},{},{},{},{}\n",
                r.s1, r.l0, r.ground_level, r.c_i, r.infimum_i, r.beta, r.pohozaev_residual, r.nehari_residual, r.stationarity, r.converged
            ));
        }
        fs::write(path, csv)?;
    }
    emit(&report, &a.report)?;
    Ok(if all_converged { 0 } else { 2 })
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Err(e) = parallel::max_threads() {
        eprintln!("error: {e}");
        return 1;
    }
    let outcome = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Check(a) => check(a),
        Command::Decompose(a) => decompose(a),
        Command::Extend(a) => extend(a),
        Command::Levels(a) => levels(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e @ Error::Solver(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
