//! Sequences with planted dilation/translation profiles, and iterative
//! extraction of those profiles by cube-wise mass localization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractional::FracParams;
use crate::grid::{lp_norm, Field, GridSpec};
use crate::group::{self, GroupElement};
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileClass {
    /// Bounded levels, renormalized to `j = 0`.
    N0,
    /// Levels increasing: the profile concentrates.
    Nplus,
    /// Levels decreasing: the profile spreads.
    Nminus,
}

impl ProfileClass {
    /// Class of a level sequence, or `None` if it is neither constant nor
    /// strictly monotone.
    pub fn of_levels(levels: &[i32]) -> Option<Self> {
        if levels.windows(2).all(|w| w[0] == w[1]) {
            Some(ProfileClass::N0)
        } else if levels.windows(2).all(|w| w[1] > w[0]) {
            Some(ProfileClass::Nplus)
        } else if levels.windows(2).all(|w| w[1] < w[0]) {
            Some(ProfileClass::Nminus)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedProfile {
    pub w: Field,
    pub elements: Vec<GroupElement>,
    pub class: ProfileClass,
}

impl PlantedProfile {
    pub fn new(w: Field, elements: Vec<GroupElement>, class: ProfileClass) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidArgument("a planted profile needs at least one element".into()));
        };
        if let Some(e) = elements.iter().find(|e| e.gamma != first.gamma) {
            return Err(Error::GammaMismatch(first.gamma, e.gamma));
        }
        let levels: Vec<i32> = elements.iter().map(|e| e.level).collect();
        let consistent = match class {
            ProfileClass::N0 => levels.iter().all(|&j| j == 0),
            other => ProfileClass::of_levels(&levels) == Some(other),
        };
        if !consistent {
            return Err(Error::InvalidArgument(format!("levels {levels:?} do not match class {class:?}")));
        }
        Ok(Self { w, elements, class })
    }
}

/// `u_k = sum_n d_k^{(n)} w^{(n)} + noise_k`, where `noise_k` is a seeded
/// zero-mean random field with `L^{2*}` norm `noise_amp[k]`.
pub fn synthesize(profiles: &[PlantedProfile], noise_amp: &[f64], count: usize, grid: GridSpec, p: &FracParams) -> Result<Vec<Field>> {
    if noise_amp.len() < count {
        return Err(Error::InvalidArgument(format!("need {count} noise amplitudes, got {}", noise_amp.len())));
    }
    for pr in profiles {
        if pr.elements.len() < count {
            return Err(Error::InvalidArgument(format!(
                "profile has {} elements, sequence length is {count}",
                pr.elements.len()
            )));
        }
        pr.w.grid().ensure_same(&grid)?;
    }
    for (a, pa) in profiles.iter().enumerate() {
        for pb in &profiles[a + 1..] {
            let seps = (0..count)
                .map(|k| group::separation(&pa.elements[k], &pb.elements[k]))
                .collect::<Result<Vec<_>>>()?;
            if seps.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidArgument(format!("planted profiles do not separate: {seps:?}")));
            }
        }
    }
    let q = p.crit();
    (0..count)
        .map(|k| {
            let mut u = Field::zeros(grid);
            for pr in profiles {
                u = u.add(&group::apply(&pr.elements[k], &pr.w, p)?);
            }
            if noise_amp[k] > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f_6973_6500 + k as u64);
                let noise = Field::new(grid, (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())?.zero_mean();
                let norm = lp_norm(&noise, q)?;
                u = u.axpy(noise_amp[k] / norm, &noise);
            }
            Ok(u)
        })
        .collect()
}

/// Result of [`locate_mass`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassLocation {
    pub level: i32,
    /// Location of the largest `|u|` inside the heaviest cube, refined
    /// below the grid spacing.
    pub shift: Vec<f64>,
    pub mass: f64,
}

/// Periodic sums of `v` over windows of `width` cells along every axis,
/// anchored at the window's first cell.
fn box_sums(g: &GridSpec, v: &[f64], width: usize) -> Vec<f64> {
    let m = g.points();
    let mut data = v.to_vec();
    let total = data.len();
    let mut line = vec![0.0; m];
    for axis in 0..g.dim() {
        let stride = m.pow((g.dim() - 1 - axis) as u32);
        let block = m * stride;
        for outer in 0..total / block {
            for inner in 0..stride {
                let base = outer * block + inner;
                let mut acc: f64 = (0..width).map(|k| data[base + (k % m) * stride]).sum();
                for (i, l) in line.iter_mut().enumerate() {
                    *l = acc;
                    acc += data[base + ((i + width) % m) * stride] - data[base + i * stride];
                }
                for (i, l) in line.iter().enumerate() {
                    data[base + i * stride] = *l;
                }
            }
        }
    }
    data
}

/// Heaviest rescaled unit cube over levels `j` in `levels`: at level `j` the
/// cube has side `gamma^{-j}` in original coordinates and its `L^2` mass is
/// weighted by `gamma^{2sj}`, which equals the unit-cube mass of `delta_{-j} u`.
/// Levels whose cube is wider than the box or narrower than a cell are skipped.
pub fn locate_mass(u: &Field, gamma: f64, levels: (i32, i32), p: &FracParams) -> Result<MassLocation> {
    let g = *u.grid();
    if !(gamma > 1.0) {
        return Err(Error::InvalidArgument(format!("dilation factor must exceed 1, got {gamma}")));
    }
    let cap = group::max_level(gamma, g.points());
    let (lo, hi) = (levels.0.max(-cap), levels.1.min(cap));
    if lo > hi {
        return Err(Error::InvalidArgument(format!("empty level range {levels:?} on this grid (|j| <= {cap})")));
    }
    let h = g.spacing();
    let sq: Vec<f64> = u.values().iter().map(|v| v * v).collect();
    let mut best: Option<(i32, usize, usize, f64)> = None;
    for j in lo..=hi {
        let side = gamma.powi(-j);
        if side > g.length() || side < h {
            continue;
        }
        let cells = ((side / h).round() as usize).clamp(1, g.points());
        let correction = (side / (cells as f64 * h)).powi(g.dim() as i32);
        let weight = gamma.powf(2.0 * p.s() * j as f64) * correction * g.cell_volume();
        let sums = box_sums(&g, &sq, cells);
        let (k, m) = sums.iter().enumerate().fold((0, f64::MIN), |(bk, bm), (k, &m)| if m > bm { (k, m) } else { (bk, bm) });
        let mass = m * weight;
        if best.is_none_or(|b| mass > b.3) {
            best = Some((j, k, cells, mass));
        }
    }
    let Some((level, anchor, cells, mass)) = best else {
        return Err(Error::InvalidArgument(format!("no level in {levels:?} has a cube between the grid spacing and the box")));
    };
    // Peak of |u| inside the winning cube.
    let m = g.points();
    let start = g.unflatten(anchor);
    let mut peak = (anchor, 0.0f64);
    let mut idx = [0usize; 3];
    let count = cells.pow(g.dim() as u32);
    for c in 0..count {
        let mut rem = c;
        for axis in (0..g.dim()).rev() {
            idx[axis] = (start[axis] + rem % cells) % m;
            rem /= cells;
        }
        let flat = g.flatten(&idx[..g.dim()]);
        let v = u.values()[flat].abs();
        if v > peak.1 {
            peak = (flat, v);
        }
    }
    let pos = g.position(peak.0);
    let at = g.unflatten(peak.0);
    let mut shift = pos[..g.dim()].to_vec();
    for (axis, y) in shift.iter_mut().enumerate() {
        let mut near = at;
        let mut sample = |d: usize| {
            near[axis] = (at[axis] + d) % m;
            u.values()[g.flatten(&near[..g.dim()])].abs()
        };
        let (l, c, r) = (sample(m - 1), sample(0), sample(1));
        *y += h * vertex_offset(l, c, r);
    }
    Ok(MassLocation { level, shift, mass })
}

/// Sub-cell vertex of the parabola through three samples around a maximum,
/// fitted to logarithms when all are positive (exact for Gaussians).
fn vertex_offset(l: f64, c: f64, r: f64) -> f64 {
    let (l, c, r) = if l > 0.0 && c > 0.0 && r > 0.0 { (l.ln(), c.ln(), r.ln()) } else { (l, c, r) };
    let curv = l - 2.0 * c + r;
    if curv < 0.0 {
        (0.5 * (l - r) / curv).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractConfig {
    /// Stop once the final-index residual `L^{2*}` norm is below this.
    pub tol: f64,
    pub max_profiles: usize,
    /// Number of final indices averaged for each weak-limit estimate.
    pub tail: usize,
    /// Candidate levels, clamped to the grid.
    pub levels: (i32, i32),
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self { tol: 1e-3, max_profiles: 4, tail: 2, levels: (-8, 8) }
    }
}

#[derive(Debug, Clone)]
pub struct ExtractedProfile {
    pub w: Field,
    pub elements: Vec<GroupElement>,
    pub class: ProfileClass,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormBudget {
    /// `sum_n ||w^{(n)}||^2`.
    pub sum: f64,
    /// Largest `||u_k||^2` over the averaging tail.
    pub limsup: f64,
    /// Largest `||u_k||^2` over the whole sequence.
    pub max: f64,
}

#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub profiles: Vec<ExtractedProfile>,
    pub norm_budget: NormBudget,
    /// `separations[(n, m)][k]` for every extracted pair `n < m`.
    pub separations: Vec<((usize, usize), Vec<f64>)>,
    /// `L^{2*}` norm of the final residual at every index.
    pub remainder_crit_norms: Vec<f64>,
    /// Final-index residual norm before extraction and after each profile.
    pub remainder_history: Vec<f64>,
}

/// Smooth cutoff equal to 1 on the central cube of side `L/4` shrunk by a
/// quarter, tapering to 0 at its edge.
fn window(g: GridSpec) -> Field {
    let half = g.length() / 8.0;
    let flat = 0.75 * half;
    Field::from_fn(g, |x| {
        x.iter()
            .map(|v| {
                let a = v.abs();
                if a <= flat {
                    1.0
                } else if a >= half {
                    0.0
                } else {
                    let t = (a - flat) / (half - flat);
                    (0.5 * std::f64::consts::PI * t).cos().powi(2)
                }
            })
            .product()
    })
}

fn dnorm_sq(u: &Field, p: &FracParams) -> f64 {
    crate::fractional::dnorm_sq(u, p)
}

/// Iteratively extracts profiles: locate, pull back, tail-average in a
/// window, push forward and subtract.
pub fn extract(seq: &[Field], gamma: f64, p: &FracParams, cfg: &ExtractConfig) -> Result<DecompositionReport> {
    let count = seq.len();
    if cfg.tail == 0 || count < 2 * cfg.tail {
        return Err(Error::InvalidArgument(format!(
            "sequence of length {count} is too short for a tail of {}",
            cfg.tail
        )));
    }
    let g = *seq[0].grid();
    for u in seq {
        u.grid().ensure_same(&g)?;
    }
    let q = p.crit();
    let win = window(g);
    let mut residuals: Vec<Field> = seq.to_vec();
    let mut profiles = Vec::new();
    let mut history = vec![lp_norm(&residuals[count - 1], q)?];
    while profiles.len() < cfg.max_profiles && *history.last().expect("history") >= cfg.tol {
        let locs = parallel::par_map(&residuals, |r| locate_mass(r, gamma, cfg.levels, p))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let elements: Vec<GroupElement> = locs
            .iter()
            .map(|l| GroupElement::new(gamma, l.shift.clone(), l.level))
            .collect::<Result<_>>()?;
        let mut w = Field::zeros(g);
        for k in count - cfg.tail..count {
            w = w.add(&group::apply_inverse_unchecked(&elements[k], &residuals[k], p).mul(&win));
        }
        let w = w.scaled(1.0 / cfg.tail as f64);
        let before = *history.last().expect("history");
        let next: Vec<Field> =
            residuals.iter().zip(&elements).map(|(r, e)| r.sub(&group::apply_unchecked(e, &w, p))).collect();
        let after = lp_norm(&next[count - 1], q)?;
        if !(after <= 0.99 * before) {
            return Err(Error::Stalled(format!(
                "profile {} reduced the final residual only from {before:.4e} to {after:.4e}; profiles may not be separated",
                profiles.len() + 1
            )));
        }
        residuals = next;
        history.push(after);
        let levels: Vec<i32> = elements.iter().map(|e| e.level).collect();
        let (class, w, elements) = match ProfileClass::of_levels(&levels) {
            Some(ProfileClass::Nplus) => (ProfileClass::Nplus, w, elements),
            Some(ProfileClass::Nminus) => (ProfileClass::Nminus, w, elements),
            _ => {
                // Bounded levels: move the final level into the profile.
                let jf = levels[count - 1];
                let w = group::apply_unchecked(&GroupElement::dilation(gamma, g.dim(), jf), &w, p);
                let elements = elements
                    .into_iter()
                    .map(|e| GroupElement { level: e.level - jf, ..e })
                    .collect();
                (ProfileClass::N0, w, elements)
            }
        };
        profiles.push(ExtractedProfile { w, elements, class });
    }
    let tail_start = count - cfg.tail;
    let norms: Vec<f64> = seq.iter().map(|u| dnorm_sq(u, p)).collect();
    let norm_budget = NormBudget {
        sum: profiles.iter().map(|pr| dnorm_sq(&pr.w, p)).sum(),
        limsup: norms[tail_start..].iter().cloned().fold(0.0, f64::max),
        max: norms.iter().cloned().fold(0.0, f64::max),
    };
    let mut separations = Vec::new();
    for a in 0..profiles.len() {
        for b in a + 1..profiles.len() {
            let seps = (0..count)
                .map(|k| group::separation(&profiles[a].elements[k], &profiles[b].elements[k]))
                .collect::<Result<Vec<_>>>()?;
            separations.push(((a, b), seps));
        }
    }
    let remainder_crit_norms = residuals.iter().map(|r| lp_norm(r, q)).collect::<Result<Vec<_>>>()?;
    Ok(DecompositionReport { profiles, norm_budget, separations, remainder_crit_norms, remainder_history: history })
}

/// Per index: the heaviest rescaled-cube mass over all grid levels, and the
/// `L^{2*}` norm.
pub fn cocompactness_indicator(seq: &[Field], gamma: f64, p: &FracParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut masses = Vec::with_capacity(seq.len());
    let mut norms = Vec::with_capacity(seq.len());
    for u in seq {
        let cap = group::max_level(gamma, u.grid().points());
        masses.push(locate_mass(u, gamma, (-cap, cap), p)?.mass);
        norms.push(lp_norm(u, p.crit())?);
    }
    Ok((masses, norms))
}
