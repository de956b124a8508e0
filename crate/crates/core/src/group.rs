//! The dilation-translation group
//! `d_{y,j} u(x) = gamma^{(N-2s) j / 2} u(gamma^j (x - y))`.
//!
//! On a power-of-two grid with `gamma = 2` and grid-lattice shifts the action
//! is exact: concentration (`j > 0`) is sampling, spreading (`j < 0`) is
//! trigonometric interpolation of a band-limited field. Other factors and
//! off-lattice shifts go through spectral interpolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractional::FracParams;
use crate::grid::Field;
use crate::resample;

/// Relative L^2 leakage above which [`apply`] refuses an action.
pub const LEAKAGE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub gamma: f64,
    pub shift: Vec<f64>,
    pub level: i32,
}

impl GroupElement {
    pub fn new(gamma: f64, shift: Vec<f64>, level: i32) -> Result<Self> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("dilation factor must exceed 1, got {gamma}")));
        }
        if shift.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite shift".into()));
        }
        Ok(Self { gamma, shift, level })
    }

    pub fn identity(gamma: f64, dim: usize) -> Self {
        Self { gamma, shift: vec![0.0; dim], level: 0 }
    }

    pub fn translation(gamma: f64, shift: Vec<f64>) -> Self {
        Self { gamma, shift, level: 0 }
    }

    pub fn dilation(gamma: f64, dim: usize, level: i32) -> Self {
        Self { gamma, shift: vec![0.0; dim], level }
    }

    pub fn is_identity(&self) -> bool {
        self.level == 0 && self.shift.iter().all(|&v| v == 0.0)
    }

    /// `gamma^level`.
    pub fn scale(&self) -> f64 {
        self.gamma.powi(self.level)
    }
}

fn same_gamma(g1: &GroupElement, g2: &GroupElement) -> Result<()> {
    if g1.gamma != g2.gamma {
        return Err(Error::GammaMismatch(g1.gamma, g2.gamma));
    }
    Ok(())
}

/// `d_{y1,j1} o d_{y2,j2} = d_{y1 + gamma^{-j1} y2, j1 + j2}`.
pub fn compose(g1: &GroupElement, g2: &GroupElement) -> Result<GroupElement> {
    same_gamma(g1, g2)?;
    let inv = g1.gamma.powi(-g1.level);
    let shift = g1.shift.iter().zip(&g2.shift).map(|(a, b)| a + inv * b).collect();
    Ok(GroupElement { gamma: g1.gamma, shift, level: g1.level + g2.level })
}

/// `(d_{y,j})^{-1} = d_{-gamma^j y, -j}`.
pub fn inverse(g: &GroupElement) -> GroupElement {
    let sc = g.scale();
    GroupElement { gamma: g.gamma, shift: g.shift.iter().map(|v| -sc * v).collect(), level: -g.level }
}

/// `|j1 - j2| + gamma^{j1} |y1 - y2|`.
pub fn separation(g1: &GroupElement, g2: &GroupElement) -> Result<f64> {
    same_gamma(g1, g2)?;
    let dist = g1.shift.iter().zip(&g2.shift).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok((g1.level - g2.level).abs() as f64 + g1.scale() * dist)
}

/// Largest `|j|` for which `gamma^|j| <= M / 8`.
pub fn max_level(gamma: f64, points: usize) -> i32 {
    let budget = (points as f64).log2() - 3.0;
    (budget / gamma.log2() + 1e-12).floor() as i32
}

fn check_range(g: &GroupElement, u: &Field) -> Result<()> {
    let limit = max_level(g.gamma, u.grid().points());
    if g.level.abs() > limit {
        return Err(Error::OutOfRange(format!(
            "level {} exceeds the representable range |j| <= {limit}",
            g.level
        )));
    }
    if g.shift.len() != u.grid().dim() {
        return Err(Error::InvalidArgument(format!(
            "shift has {} components, grid dimension is {}",
            g.shift.len(),
            u.grid().dim()
        )));
    }
    Ok(())
}

/// Fraction of L^2 norm the dilation `u -> u(scale x)` cannot represent.
pub fn dilation_leakage(u: &Field, scale: f64) -> f64 {
    if scale > 1.0 {
        // Frequencies are stretched by `scale`.
        let cutoff = u.grid().points() as f64 / (2.0 * scale);
        resample::spectral_tail_fraction(u, cutoff).sqrt()
    } else if scale < 1.0 {
        // Only the central `scale` fraction of the box stays visible.
        let half = scale * u.grid().length() / 2.0;
        resample::spatial_tail_fraction(u, half).sqrt()
    } else {
        0.0
    }
}

/// `delta_j u = gamma^{(N-2s) j / 2} u(gamma^j x)` without range checks.
pub(crate) fn dilate(u: &Field, gamma: f64, level: i32, p: &FracParams) -> Field {
    if level == 0 {
        return u.clone();
    }
    let amp = gamma.powf(p.dilation_exponent() * level as f64);
    resample::dilate(u, gamma.powi(level)).scaled(amp)
}

/// Translation by `y`; cyclic permutation when `y` lies on the grid lattice.
pub(crate) fn translate(u: &Field, y: &[f64]) -> Field {
    if y.iter().all(|&v| v == 0.0) {
        return u.clone();
    }
    let h = u.grid().spacing();
    let steps: Vec<f64> = y.iter().map(|v| v / h).collect();
    if steps.iter().all(|s| (s - s.round()).abs() < 1e-9) {
        let shift: Vec<i64> = steps.iter().map(|s| s.round() as i64).collect();
        return u.shifted(&shift);
    }
    resample::translate_spectral(u, y)
}

/// Snaps a shift to the nearest grid lattice point.
pub fn snap_to_lattice(y: &[f64], h: f64) -> Vec<f64> {
    y.iter().map(|v| (v / h).round() * h).collect()
}

/// `d_{y,j} u`, rejecting levels outside the grid range and actions that would
/// lose more than [`LEAKAGE_TOL`] of the field.
pub fn apply(g: &GroupElement, u: &Field, p: &FracParams) -> Result<Field> {
    check_range(g, u)?;
    let leak = dilation_leakage(u, g.scale());
    if leak > LEAKAGE_TOL {
        return Err(Error::OutOfRange(format!(
            "dilation by {} loses {leak:.2e} of the field (resolution or box exceeded)",
            g.scale()
        )));
    }
    Ok(apply_unchecked(g, u, p))
}

/// `d_{y,j} u` truncating whatever leaves the box; used for windowed pull-backs.
pub fn apply_unchecked(g: &GroupElement, u: &Field, p: &FracParams) -> Field {
    translate(&dilate(u, g.gamma, g.level, p), &g.shift)
}

/// `(d_{y,j})^{-1} u = delta_{-j}(u(. + y))`, translation first so lattice
/// shifts stay exact.
pub fn apply_inverse_unchecked(g: &GroupElement, u: &Field, p: &FracParams) -> Field {
    let back: Vec<f64> = g.shift.iter().map(|v| -v).collect();
    dilate(&translate(u, &back), g.gamma, -g.level, p)
}
