//! Scalar nonlinearities `F` with `f = F'`, the self-similar class, and the
//! functional `Phi(u) = int F(u)` with its `D^{s,2}` gradient.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fractional::{inverse_frac_laplacian, FracParams};
use crate::grid::{integrate, Field};
use crate::group::{self, GroupElement};
use crate::resample;

/// Built-in nonlinearity families, as named in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearityKind {
    /// `F(t) = |t|^{2*}`.
    CriticalPower,
    /// `F(t) = cos(ln|t|) |t|^{2*}`, `F(0) = 0`.
    LogCosPower,
    /// `F(t) = coeff |t|^exponent`, `exponent > 1`.
    Power { exponent: f64, coeff: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    pub params: FracParams,
}

/// Below this magnitude the log-cosine family evaluates to zero.
const LOGCOS_FLOOR: f64 = 1e-300;

impl Nonlinearity {
    pub fn new(kind: NonlinearityKind, params: FracParams) -> Result<Self> {
        if let NonlinearityKind::Power { exponent, coeff } = kind {
            if !(exponent > 1.0 && exponent.is_finite() && coeff.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "power nonlinearity needs a finite exponent > 1 and finite coefficient, got {exponent}, {coeff}"
                )));
            }
        }
        Ok(Self { kind, params })
    }

    pub fn critical(params: FracParams) -> Self {
        Self { kind: NonlinearityKind::CriticalPower, params }
    }

    pub fn log_cos(params: FracParams) -> Self {
        Self { kind: NonlinearityKind::LogCosPower, params }
    }

    pub fn power(params: FracParams, exponent: f64, coeff: f64) -> Result<Self> {
        Self::new(NonlinearityKind::Power { exponent, coeff }, params)
    }

    /// `F(t)`.
    pub fn primitive(&self, t: f64) -> f64 {
        let q = self.params.crit();
        match self.kind {
            NonlinearityKind::CriticalPower => t.abs().powf(q),
            NonlinearityKind::LogCosPower => {
                let a = t.abs();
                if a < LOGCOS_FLOOR {
                    0.0
                } else {
                    a.ln().cos() * a.powf(q)
                }
            }
            NonlinearityKind::Power { exponent, coeff } => coeff * t.abs().powf(exponent),
        }
    }

    /// `f(t) = F'(t)`.
    pub fn derivative(&self, t: f64) -> f64 {
        let q = self.params.crit();
        let a = t.abs();
        match self.kind {
            NonlinearityKind::CriticalPower => q * a.powf(q - 2.0) * t,
            NonlinearityKind::LogCosPower => {
                if a < LOGCOS_FLOOR {
                    0.0
                } else {
                    let l = a.ln();
                    (q * l.cos() - l.sin()) * a.powf(q - 2.0) * t
                }
            }
            NonlinearityKind::Power { exponent, coeff } => coeff * exponent * a.powf(exponent - 2.0) * t,
        }
    }

    /// The smallest factor for which `F` is self-similar, if the family has one;
    /// `None` means every `gamma > 1` works or none does.
    pub fn natural_gamma(&self) -> Option<f64> {
        match self.kind {
            NonlinearityKind::LogCosPower => {
                let n = self.params.dim() as f64;
                Some((4.0 * PI / (n - 2.0 * self.params.s())).exp())
            }
            _ => None,
        }
    }

    /// Whether `F` is self-similar with factor `gamma` (exactly, by construction).
    pub fn is_self_similar_with(&self, gamma: f64) -> bool {
        match self.kind {
            NonlinearityKind::CriticalPower => true,
            NonlinearityKind::LogCosPower => {
                let base = self.natural_gamma().expect("log-cos factor").ln();
                let ratio = gamma.ln() / base;
                ratio >= 1.0 - 1e-12 && (ratio - ratio.round()).abs() < 1e-9
            }
            NonlinearityKind::Power { exponent, .. } => exponent == self.params.crit(),
        }
    }
}

/// `|F(t) - gamma^{-N j} F(gamma^{(N-2s) j / 2} t)|`.
pub fn selfsim_residual(nl: &Nonlinearity, gamma: f64, t: f64, j: i32) -> f64 {
    let p = nl.params;
    let n = p.dim() as f64;
    let ln_g = gamma.ln();
    let scaled = (p.dilation_exponent() * j as f64 * ln_g).exp() * t;
    let weight = (-n * j as f64 * ln_g).exp();
    (nl.primitive(t) - weight * nl.primitive(scaled)).abs()
}

/// Sampled supremum of `|F(t)| / |t|^{2*}` over log-spaced `|t| in [1e-8, 1e8]`.
pub fn growth_constant(nl: &Nonlinearity) -> Result<f64> {
    let q = nl.params.crit();
    let mut sup: f64 = 0.0;
    for k in -8000..=8000 {
        let t = 10f64.powf(k as f64 / 1000.0);
        for sign in [1.0, -1.0] {
            let ratio = nl.primitive(sign * t).abs() / t.powf(q);
            if !ratio.is_finite() {
                return Err(Error::Overflow(format!("growth ratio at t = {}", sign * t)));
            }
            sup = sup.max(ratio);
        }
    }
    Ok(sup)
}

/// `(|F(a+b) - F(a) - F(b)|, defect / (|a||b|^{2*-1} + |a|^{2*-1}|b|))`.
pub fn additivity_defect(nl: &Nonlinearity, a: f64, b: f64) -> Result<(f64, f64)> {
    if a == 0.0 && b == 0.0 {
        return Err(Error::InvalidArgument("additivity defect needs (a, b) != (0, 0)".into()));
    }
    let q = nl.params.crit();
    let defect = (nl.primitive(a + b) - nl.primitive(a) - nl.primitive(b)).abs();
    let bound = a.abs() * b.abs().powf(q - 1.0) + a.abs().powf(q - 1.0) * b.abs();
    let ratio = if bound == 0.0 { 0.0 } else { defect / bound };
    Ok((defect, ratio))
}

/// Largest `bound_ratio` of [`additivity_defect`] over a log-spaced sample of
/// `(a, b)` pairs of both signs.
pub fn measured_additivity_constant(nl: &Nonlinearity) -> f64 {
    let mags: Vec<f64> = (-40..=40).map(|k| 10f64.powf(k as f64 / 10.0)).collect();
    let mut sup: f64 = 0.0;
    for &a in &mags {
        for &b in &mags {
            for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                if let Ok((_, r)) = additivity_defect(nl, sa * a, sb * b) {
                    sup = sup.max(r);
                }
            }
        }
    }
    sup
}

/// How integrals of `F(u)` are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Rectangle rule on the field's own grid.
    Grid,
    /// Rectangle rule on the trigonometric interpolant sampled `factor` times
    /// finer per axis; exact for polynomial `F` of degree up to `2 factor`
    /// applied to band-limited fields.
    Oversampled(usize),
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::Oversampled(2)
    }
}

/// `Phi(u) = int F(u)` by the grid rectangle rule.
pub fn phi(u: &Field, nl: &Nonlinearity) -> f64 {
    integrate(&u.map(|v| nl.primitive(v)))
}

pub fn phi_with(u: &Field, nl: &Nonlinearity, quad: Quadrature) -> Result<f64> {
    match quad {
        Quadrature::Grid => Ok(phi(u, nl)),
        Quadrature::Oversampled(k) => Ok(phi(&resample::upsample(u, k)?, nl)),
    }
}

/// `f(u)` as the `L^2` Riesz representative on `u`'s grid, consistent with `quad`.
pub fn nonlinear_term(u: &Field, nl: &Nonlinearity, quad: Quadrature) -> Result<Field> {
    match quad {
        Quadrature::Grid => Ok(u.map(|v| nl.derivative(v))),
        Quadrature::Oversampled(k) => {
            let fine = resample::upsample(u, k)?;
            Ok(resample::project(&fine.map(|v| nl.derivative(v)), u.grid()))
        }
    }
}

/// The `D^{s,2}` gradient `(-Delta)^{-s} P_0 f(u)` of [`phi`].
pub fn phi_gradient(u: &Field, nl: &Nonlinearity) -> Result<Field> {
    phi_gradient_with(u, nl, Quadrature::Grid)
}

pub fn phi_gradient_with(u: &Field, nl: &Nonlinearity, quad: Quadrature) -> Result<Field> {
    let f = nonlinear_term(u, nl, quad)?.zero_mean();
    inverse_frac_laplacian(&f, nl.params.s())
}

/// [`phi_with`] and [`phi_gradient_with`] sharing one resampling.
pub fn phi_and_gradient_with(u: &Field, nl: &Nonlinearity, quad: Quadrature) -> Result<(f64, Field)> {
    let (value, f) = match quad {
        Quadrature::Grid => (phi(u, nl), u.map(|v| nl.derivative(v))),
        Quadrature::Oversampled(k) => {
            let fine = resample::upsample(u, k)?;
            (phi(&fine, nl), resample::project(&fine.map(|v| nl.derivative(v)), u.grid()))
        }
    };
    Ok((value, inverse_frac_laplacian(&f.zero_mean(), nl.params.s())?))
}

/// `|Phi(d_g u) - Phi(u)| / max(|Phi(u)|, 1e-30)` for a self-similar `F`.
pub fn phi_dilation_invariance(u: &Field, nl: &Nonlinearity, g: &GroupElement) -> Result<f64> {
    if !nl.is_self_similar_with(g.gamma) {
        return Err(Error::InvalidArgument(format!(
            "nonlinearity is not self-similar with factor {}",
            g.gamma
        )));
    }
    let moved = group::apply(g, u, &nl.params)?;
    let base = phi(u, nl);
    Ok((phi(&moved, nl) - base).abs() / base.abs().max(1e-30))
}
