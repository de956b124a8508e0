//! Energy, Pohozaev and Nehari residuals, the mountain-pass path, the levels
//! `S_l`, `l_0`, `I`, `c(I)`, constrained solvers and ground-state assembly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fractional::{dinner, dnorm_sq, frac_laplacian, relative_mean, FracParams};
use crate::grid::{integrate, to_spectral, Field, GridSpec, SpectralField};
use crate::nonlinearity::{
    nonlinear_term, phi, phi_and_gradient_with, phi_gradient, phi_with, Nonlinearity, NonlinearityKind, Quadrature,
};
use crate::resample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Initial step, in units of the current iterate.
    pub step: f64,
    pub max_iters: usize,
    /// Relative stationarity tolerance.
    pub tol: f64,
    pub seed: u64,
    /// Step reduction factor on a rejected step.
    pub backtracking: f64,
    /// Relative amplitude of the seeded perturbation added to the initial bump.
    pub perturbation: f64,
    pub quadrature: Quadrature,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step: 0.5,
            max_iters: 2000,
            tol: 1e-6,
            seed: 0,
            backtracking: 0.5,
            perturbation: 0.05,
            quadrature: Quadrature::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.step > 0.0
            && self.step.is_finite()
            && self.max_iters >= 1
            && self.tol > 0.0
            && self.backtracking > 0.0
            && self.backtracking < 1.0
            && self.perturbation >= 0.0
            && self.perturbation.is_finite();
        if !ok {
            return Err(Error::Config(format!("invalid solver settings: {self:?}")));
        }
        if let Quadrature::Oversampled(k) = self.quadrature {
            if k == 0 || !k.is_power_of_two() {
                return Err(Error::Config(format!("oversampling factor must be a power of two, got {k}")));
            }
        }
        Ok(())
    }
}

/// Output of a constrained solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub field: Field,
    /// `Phi(w)` for [`maximize_s`], the quotient for [`minimize_quotient`].
    pub value: f64,
    pub iterations: usize,
    /// Final relative stationarity measure.
    pub stationarity: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelsReport {
    #[serde(rename = "S1")]
    pub s1: f64,
    /// `S_l` keyed by the decimal form of `l`.
    #[serde(rename = "Sl")]
    pub sl: BTreeMap<String, f64>,
    pub l0: f64,
    /// Sphere radius `(2* S_1)^{-(N-2s)/(2s)}` whose maximizer solves the
    /// equation with multiplier one.
    pub ground_level: f64,
    #[serde(rename = "cI")]
    pub c_i: f64,
    #[serde(rename = "infimum_I")]
    pub infimum_i: f64,
    pub beta: f64,
    /// Relative residuals under the solver's quadrature.
    pub pohozaev_residual: f64,
    pub nehari_residual: f64,
    /// Relative Pohozaev residual under the plain grid rule.
    pub pohozaev_residual_grid: f64,
    pub stationarity: f64,
    pub converged: bool,
}

/// `I(u) = ||u||^2 / 2 - Phi(u)`.
pub fn energy(u: &Field, nl: &Nonlinearity, p: &FracParams) -> f64 {
    0.5 * dnorm_sq(u, p) - phi(u, nl)
}

/// `D^{s,2}` gradient `u - (-Delta)^{-s} f(u)` of [`energy`].
pub fn energy_gradient(u: &Field, nl: &Nonlinearity, p: &FracParams) -> Result<Field> {
    let mean = relative_mean(&to_spectral(u));
    if mean > 1e-12 {
        return Err(Error::NonZeroMean { mean });
    }
    let _ = p;
    Ok(u.sub(&phi_gradient(u, nl)?))
}

/// `||u||^2 - 2* Phi(u)`.
pub fn pohozaev_residual(u: &Field, nl: &Nonlinearity, p: &FracParams) -> f64 {
    dnorm_sq(u, p) - p.crit() * phi(u, nl)
}

/// [`pohozaev_residual`] divided by `max(||u||^2, 1e-300)`.
pub fn pohozaev_relative(u: &Field, nl: &Nonlinearity, p: &FracParams) -> f64 {
    pohozaev_residual(u, nl, p) / dnorm_sq(u, p).max(1e-300)
}

/// `||u||^2 - int f(u) u`.
pub fn nehari_residual(u: &Field, nl: &Nonlinearity, p: &FracParams) -> f64 {
    dnorm_sq(u, p) - integrate(&u.map(|t| nl.derivative(t) * t))
}

pub fn nehari_relative(u: &Field, nl: &Nonlinearity, p: &FracParams) -> f64 {
    nehari_residual(u, nl, p) / dnorm_sq(u, p).max(1e-300)
}

/// [`energy`] with the integral of `F(u)` taken under `quad`.
pub fn energy_with(u: &Field, nl: &Nonlinearity, p: &FracParams, quad: Quadrature) -> Result<f64> {
    Ok(0.5 * dnorm_sq(u, p) - phi_with(u, nl, quad)?)
}

/// [`pohozaev_relative`] under `quad`.
pub fn pohozaev_relative_with(u: &Field, nl: &Nonlinearity, p: &FracParams, quad: Quadrature) -> Result<f64> {
    let d = dnorm_sq(u, p);
    Ok((d - p.crit() * phi_with(u, nl, quad)?) / d.max(1e-300))
}

/// [`nehari_relative`] under `quad`.
pub fn nehari_relative_with(u: &Field, nl: &Nonlinearity, p: &FracParams, quad: Quadrature) -> Result<f64> {
    let d = dnorm_sq(u, p);
    let pairing = match quad {
        Quadrature::Grid => integrate(&u.map(|t| nl.derivative(t) * t)),
        Quadrature::Oversampled(k) => integrate(&resample::upsample(u, k)?.map(|t| nl.derivative(t) * t)),
    };
    Ok((d - pairing) / d.max(1e-300))
}

/// `I(zeta_u(t)) = t^{N-2s} ||u||^2 / 2 - t^N Phi(u)` from precomputed values.
pub fn path_energy_closed(norm_sq: f64, phi_u: f64, p: &FracParams, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("path parameter must be positive, got {t}")));
    }
    let n = p.dim() as f64;
    Ok(0.5 * t.powf(n - 2.0 * p.s()) * norm_sq - t.powf(n) * phi_u)
}

pub fn path_energy(u: &Field, nl: &Nonlinearity, p: &FracParams, t: f64) -> Result<f64> {
    path_energy_closed(dnorm_sq(u, p), phi(u, nl), p, t)
}

/// Maximizer and maximum of `t -> I(zeta_u(t))`.
pub fn path_max(norm_sq: f64, phi_u: f64, p: &FracParams) -> Result<(f64, f64)> {
    if !(phi_u > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "the path is not admissible unless Phi(u) > 0, got {phi_u}"
        )));
    }
    if !(norm_sq > 0.0) {
        return Err(Error::InvalidArgument(format!("norm must be positive, got {norm_sq}")));
    }
    let n = p.dim() as f64;
    let s = p.s();
    let base = norm_sq / (p.crit() * phi_u);
    let tstar = base.powf(1.0 / (2.0 * s));
    let maxval = 0.5 * base.powf((n - 2.0 * s) / (2.0 * s)) * norm_sq - base.powf(n / (2.0 * s)) * phi_u;
    Ok((tstar, maxval))
}

/// `(l0, ground_level, c(I))` from `S_1`.
pub fn level_formulas(s1: f64, p: &FracParams) -> (f64, f64, f64) {
    let n = p.dim() as f64;
    let s = p.s();
    let q = p.crit();
    let e = -(n - 2.0 * s) / (2.0 * s);
    let l0 = (0.5 * q * s1).powf(e);
    let ground = (q * s1).powf(e);
    let ci = 0.5 * (q * s1).powf(e) - s1 * (q * s1).powf(-n / (2.0 * s));
    (l0, ground, ci)
}

/// Whether `F` takes a positive value somewhere on a log-spaced sample.
pub fn has_positive_values(nl: &Nonlinearity) -> bool {
    (-400..=400).any(|k| {
        let t = 10f64.powf(k as f64 / 50.0);
        nl.primitive(t) > 0.0 || nl.primitive(-t) > 0.0
    })
}

/// Positive bump `exp(-|x|^2 / sigma^2)`, `sigma = L / 10`, plus a seeded
/// smooth perturbation, projected to zero mean.
pub fn initial_bump(grid: GridSpec, seed: u64, perturbation: f64) -> Field {
    let sigma = grid.length() / 10.0;
    let base = Field::from_fn(grid, |x| (-x.iter().map(|v| v * v).sum::<f64>() / (sigma * sigma)).exp());
    if perturbation == 0.0 {
        return base.zero_mean();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let bumps: Vec<(Vec<f64>, f64, f64)> = (0..4)
        .map(|_| {
            let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5) * sigma).collect();
            (c, rng.gen_range(-1.0..1.0), rng.gen_range(0.5..1.0) * sigma)
        })
        .collect();
    let noise = Field::from_fn(grid, |x| {
        bumps
            .iter()
            .map(|(c, a, w)| {
                let r2: f64 = x.iter().zip(c).map(|(v, cv)| (v - cv).powi(2)).sum();
                a * (-r2 / (w * w)).exp()
            })
            .sum()
    });
    base.axpy(perturbation, &noise).zero_mean()
}

fn scale_to_sphere(u: &Field, l: f64, p: &FracParams) -> Result<Field> {
    let d = dnorm_sq(u, p);
    if !(d > 0.0) {
        return Err(Error::ZeroSeminorm);
    }
    Ok(u.scaled((l / d).sqrt()))
}

/// Global sign flip so the largest-magnitude value is positive.
pub fn normalize_sign(u: &Field) -> Field {
    let peak = u.values().iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    if peak < 0.0 {
        u.scaled(-1.0)
    } else {
        u.clone()
    }
}

/// `S_l = sup { Phi(u) : ||u||^2 = l }` by projected gradient ascent from the
/// default initialization.
pub fn maximize_s(l: f64, nl: &Nonlinearity, grid: GridSpec, cfg: &SolverConfig) -> Result<Solution> {
    maximize_s_from(l, nl, &initial_bump(grid, cfg.seed, cfg.perturbation), cfg)
}

/// Objective value, its `D^{s,2}` gradient tangent to the constraint, and the
/// relative stationarity measure; `None` marks an inadmissible point.
type Probe = Option<(f64, Field, f64)>;

/// Nonmonotone Barzilai-Borwein iteration along `sign * gradient` followed by
/// `retract`. Returns the best iterate seen.
fn bb_iterate(
    init: Field,
    p: &FracParams,
    sign: f64,
    cfg: &SolverConfig,
    initial_scale: f64,
    eval: impl Fn(&Field) -> Result<Probe>,
    retract: impl Fn(Field) -> Result<Field>,
) -> Result<Solution> {
    const MEMORY: usize = 10;
    let (mut val, mut grad, mut stat) =
        eval(&init)?.ok_or_else(|| Error::Solver("initial iterate is not admissible".into()))?;
    let mut u = init;
    let mut best = (u.clone(), val, stat);
    let mut recent = vec![val];
    let mut tau = cfg.step * initial_scale;
    let mut prev: Option<(Field, Field)> = None;
    for it in 0..cfg.max_iters {
        if stat < cfg.tol {
            return Ok(Solution { field: u, value: val, iterations: it, stationarity: stat, converged: true });
        }
        if let Some((pu, pg)) = &prev {
            let s = u.sub(pu);
            let y = grad.sub(pg);
            let sy = dinner(&s, &y, p).abs();
            let ss = dinner(&s, &s, p);
            if sy > 0.0 && ss > 0.0 {
                tau = ss / sy;
            }
        }
        let slope = dinner(&grad, &grad, p);
        // Reference for acceptance: the worst of the recent values.
        let reference = recent.iter().fold(f64::NAN, |m: f64, v| if sign > 0.0 { m.min(*v) } else { m.max(*v) });
        let mut accepted = None;
        while tau * initial_scale.recip() > 1e-16 {
            let cand = retract(u.axpy(sign * tau, &grad))?;
            if let Some((cv, cg, cs)) = eval(&cand)? {
                if sign * (cv - reference) >= 1e-4 * tau * slope {
                    accepted = Some((cand, cv, cg, cs));
                    break;
                }
            }
            tau *= cfg.backtracking;
        }
        let Some((cand, cv, cg, cs)) = accepted else {
            let (field, value, stationarity) = best;
            return Ok(Solution { field, value, iterations: it, stationarity, converged: false });
        };
        prev = Some((std::mem::replace(&mut u, cand), std::mem::replace(&mut grad, cg)));
        val = cv;
        stat = cs;
        if stat < best.2 {
            best = (u.clone(), val, stat);
        }
        recent.push(val);
        if recent.len() > MEMORY {
            recent.remove(0);
        }
    }
    if stat < cfg.tol {
        return Ok(Solution { field: u, value: val, iterations: cfg.max_iters, stationarity: stat, converged: true });
    }
    let (field, value, stationarity) = best;
    Ok(Solution { field, value, iterations: cfg.max_iters, stationarity, converged: false })
}

pub fn maximize_s_from(l: f64, nl: &Nonlinearity, init: &Field, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidArgument(format!("sphere radius must be positive, got {l}")));
    }
    if !has_positive_values(nl) {
        return Err(Error::InvalidArgument("F is nowhere positive; the supremum is not attained".into()));
    }
    let p = nl.params;
    let quad = cfg.quadrature;
    let u0 = scale_to_sphere(&init.zero_mean(), l, &p)?;
    let (v0, g0) = phi_and_gradient_with(&u0, nl, quad)?;
    if !(v0 > 0.0) {
        return Err(Error::Solver(format!("initial iterate has Phi = {v0:e} <= 0")));
    }
    let lam0 = dinner(&g0, &u0, &p) / l;
    let eval = |u: &Field| -> Result<Probe> {
        let (val, g) = phi_and_gradient_with(u, nl, quad)?;
        let lam = dinner(&g, u, &p) / l;
        let gt = g.axpy(-lam, u);
        let stat = (dnorm_sq(&gt, &p) / dnorm_sq(&g, &p).max(1e-300)).sqrt();
        Ok(Some((val, gt, stat)))
    };
    let scale = if lam0 > 0.0 { 1.0 / lam0 } else { 1.0 };
    let mut sol = bb_iterate(u0, &p, 1.0, cfg, scale, eval, |u| scale_to_sphere(&u, l, &p))?;
    sol.field = normalize_sign(&sol.field);
    Ok(sol)
}

/// `R(u) = ||u||^2 / Phi(u)^{(N-2s)/N}` on `{Phi > 0}`.
pub fn quotient(u: &Field, nl: &Nonlinearity, quad: Quadrature) -> Result<f64> {
    let p = nl.params;
    let ph = phi_with(u, nl, quad)?;
    if !(ph > 0.0) {
        return Err(Error::InvalidArgument(format!("quotient needs Phi > 0, got {ph:e}")));
    }
    Ok(dnorm_sq(u, &p) / ph.powf(quotient_exponent(&p)))
}

fn quotient_exponent(p: &FracParams) -> f64 {
    let n = p.dim() as f64;
    (n - 2.0 * p.s()) / n
}

/// `I = inf R` by gradient descent; for the critical power the minimizer is
/// returned scaled to `Phi = 1`.
pub fn minimize_quotient(nl: &Nonlinearity, grid: GridSpec, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    if !has_positive_values(nl) {
        return Err(Error::InvalidArgument("F is nowhere positive; the quotient is undefined".into()));
    }
    let mut last = None;
    for restart in 0..4u64 {
        let pert = if restart == 0 { cfg.perturbation } else { cfg.perturbation + 0.25 * restart as f64 };
        let init = initial_bump(grid, cfg.seed.wrapping_add(restart), pert);
        match minimize_quotient_from(nl, &init, cfg) {
            Ok(sol) => return Ok(sol),
            Err(e @ Error::Solver(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Solver("quotient minimization failed".into())))
}

pub fn minimize_quotient_from(nl: &Nonlinearity, init: &Field, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    let p = nl.params;
    let quad = cfg.quadrature;
    let a = quotient_exponent(&p);
    let homogeneous = nl.kind == NonlinearityKind::CriticalPower;
    let eval = |u: &Field| -> Result<Probe> {
        let (ph, g) = phi_and_gradient_with(u, nl, quad)?;
        if !(ph > 0.0) {
            return Ok(None);
        }
        let d = dnorm_sq(u, &p);
        let r = d / ph.powf(a);
        // Gradient of R is (2 / Phi^a) (u - (a d / 2 Phi) G).
        let dir = u.axpy(-0.5 * a * d / ph, &g);
        let stat = (dnorm_sq(&dir, &p) / d).sqrt();
        Ok(Some((r, dir.scaled(2.0 / ph.powf(a)), stat)))
    };
    let mut u0 = init.zero_mean();
    if homogeneous {
        u0 = scale_to_sphere(&u0, 1.0, &p)?;
    }
    let ph0 = phi_with(&u0, nl, quad)?;
    if !(ph0 > 0.0) {
        return Err(Error::Solver("initial iterate has Phi <= 0".into()));
    }
    let r0 = dnorm_sq(&u0, &p) / ph0.powf(a);
    let retract = |u: Field| if homogeneous { scale_to_sphere(&u, 1.0, &p) } else { Ok(u) };
    let mut sol = bb_iterate(u0, &p, -1.0, cfg, 0.5 / r0, eval, retract)?;
    if homogeneous {
        let ph = phi_with(&sol.field, nl, quad)?;
        sol.field = sol.field.scaled(ph.powf(-1.0 / p.crit()));
    }
    sol.field = normalize_sign(&sol.field);
    Ok(sol)
}

/// Least-squares multiplier `mu` in `(-Delta)^s w = f(w) / mu` and the
/// relative residual of that equation.
pub fn multiplier(w: &Field, nl: &Nonlinearity, quad: Quadrature) -> Result<(f64, f64)> {
    let p = nl.params;
    let lw = frac_laplacian(w, p.s())?;
    let f = nonlinear_term(w, nl, quad)?.zero_mean();
    let ff = f.dot(&f);
    if !(ff > 0.0) {
        return Err(Error::Solver("f(w) vanishes; no multiplier".into()));
    }
    let kappa = lw.dot(&f) / ff;
    let norm = lw.dot(&lw).sqrt();
    let res = lw.axpy(-kappa, &f).dot(&lw.axpy(-kappa, &f)).sqrt() / norm.max(1e-300);
    Ok((1.0 / kappa, res))
}

#[derive(Debug, Clone)]
pub struct GroundState {
    /// `w(. / beta)`, solving the equation with multiplier one.
    pub u: Field,
    pub multiplier: f64,
    pub beta: f64,
    /// Relative residual of the multiplier equation at `w`.
    pub residual: f64,
    pub report: LevelsReport,
}

/// Amplitude degree `q` with `F(c t) = c^q F(t)`, when there is one.
fn homogeneity(nl: &Nonlinearity) -> Option<f64> {
    match nl.kind {
        NonlinearityKind::CriticalPower => Some(nl.params.crit()),
        NonlinearityKind::Power { exponent, .. } if exponent != 2.0 => Some(exponent),
        _ => None,
    }
}

/// Turns a constrained critical point `w` with `(-Delta)^s w = f(w) / mu`
/// into a solution of `(-Delta)^s u = f(u)`.
///
/// `u = w(. / beta)`, `beta = mu^{-1/(2s)}`. For homogeneous `F` the same
/// solution up to the critical dilation is `mu^{-1/(q-2)} w`, which needs no
/// resampling and is used instead; otherwise the dilation must fit the grid.
pub fn rescale_to_solution(w: &Field, nl: &Nonlinearity, quad: Quadrature) -> Result<(Field, f64, f64, f64)> {
    let (mu, res) = multiplier(w, nl, quad)?;
    if !(mu > 0.0) {
        return Err(Error::Solver(format!("multiplier {mu:e} is not positive")));
    }
    let beta = mu.powf(-1.0 / (2.0 * nl.params.s()));
    let u = match homogeneity(nl) {
        Some(q) => w.scaled(mu.powf(-1.0 / (q - 2.0))),
        None => {
            let leak = crate::group::dilation_leakage(w, 1.0 / beta);
            if leak > 1e-3 {
                return Err(Error::OutOfRange(format!(
                    "rescaling by beta = {beta} loses {leak:.2e} of the field on this grid"
                )));
            }
            resample::dilate(w, 1.0 / beta).zero_mean()
        }
    };
    Ok((u, mu, beta, res))
}

struct LevelsRun {
    report: LevelsReport,
    quotient_minimizer: Field,
    ground_maximizer: Field,
}

fn run_levels(nl: &Nonlinearity, grid: GridSpec, cfg: &SolverConfig, extra: &[f64]) -> Result<LevelsRun> {
    let p = nl.params;
    let first = maximize_s(1.0, nl, grid, cfg)?;
    let s1 = first.value;
    let (l0, ground_level, c_i) = level_formulas(s1, &p);
    let mut sl = BTreeMap::new();
    sl.insert(format!("{}", 1.0), s1);
    let ground = maximize_s_from(ground_level, nl, &first.field, cfg)?;
    sl.insert(format!("{ground_level}"), ground.value);
    for &l in extra {
        let sol = maximize_s_from(l, nl, &first.field, cfg)?;
        sl.insert(format!("{l}"), sol.value);
    }
    let quot = minimize_quotient(nl, grid, cfg)?;
    let (mu, _) = multiplier(&quot.field, nl, cfg.quadrature)?;
    let beta = mu.powf(-1.0 / (2.0 * p.s()));
    let report = LevelsReport {
        s1,
        sl,
        l0,
        ground_level,
        c_i,
        infimum_i: quot.value,
        beta,
        pohozaev_residual: pohozaev_relative_with(&ground.field, nl, &p, cfg.quadrature)?,
        nehari_residual: nehari_relative_with(&ground.field, nl, &p, cfg.quadrature)?,
        pohozaev_residual_grid: pohozaev_relative(&ground.field, nl, &p),
        stationarity: first.stationarity.max(ground.stationarity).max(quot.stationarity),
        converged: first.converged && ground.converged && quot.converged,
    };
    Ok(LevelsRun { report, quotient_minimizer: quot.field, ground_maximizer: ground.field })
}

/// Solver levels plus closed-form `l_0` and `c(I)`; residuals are measured at
/// the maximizer on the sphere of radius `ground_level`.
pub fn levels(nl: &Nonlinearity, grid: GridSpec, cfg: &SolverConfig) -> Result<LevelsReport> {
    Ok(run_levels(nl, grid, cfg, &[])?.report)
}

pub fn levels_with(nl: &Nonlinearity, grid: GridSpec, cfg: &SolverConfig, extra: &[f64]) -> Result<LevelsReport> {
    Ok(run_levels(nl, grid, cfg, extra)?.report)
}

/// Ground state from the quotient minimizer, plus the maximizer-route
/// solution for comparison.
pub fn ground_state(nl: &Nonlinearity, grid: GridSpec, cfg: &SolverConfig) -> Result<(GroundState, Field)> {
    let run = run_levels(nl, grid, cfg, &[])?;
    let (u, multiplier, beta, residual) = rescale_to_solution(&run.quotient_minimizer, nl, cfg.quadrature)?;
    let (other, _, _, _) = rescale_to_solution(&run.ground_maximizer, nl, cfg.quadrature)?;
    Ok((GroundState { u, multiplier, beta, residual, report: run.report }, other))
}

/// Relative `L^2` distance between `a` and `b` after optimal global sign and
/// lattice shift.
pub fn aligned_distance(a: &Field, b: &Field) -> Result<f64> {
    a.grid().ensure_same(b.grid())?;
    let g = *a.grid();
    // Circular cross-correlation sum_x a(x + k) b(x) through the spectrum.
    let fa = to_spectral(a);
    let fb = to_spectral(b);
    let prod: Vec<_> = fa.coeffs().iter().zip(fb.coeffs()).map(|(x, y)| x * y.conj()).collect();
    let corr = SpectralField::from_raw(g, prod).to_field();
    let best = corr
        .values()
        .iter()
        .enumerate()
        .fold((0usize, 0.0f64), |(bi, bv), (i, v)| if v.abs() > bv.abs() { (i, *v) } else { (bi, bv) });
    let sign = if best.1 < 0.0 { -1.0 } else { 1.0 };
    let idx = g.unflatten(best.0);
    let shift: Vec<i64> = (0..g.dim()).map(|axis| g.frequency_index(idx[axis])).collect();
    let diff = a.sub(&b.shifted(&shift).scaled(sign));
    Ok((diff.dot(&diff) / a.dot(a).max(1e-300)).sqrt())
}
