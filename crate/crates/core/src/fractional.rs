//! Fractional Laplacian powers as Fourier multipliers, the homogeneous
//! `D^{s,2}` inner product, the Gamma function and Sobolev constants.
//!
//! The zero-frequency mode is annihilated by every multiplier `|xi|^{2 alpha}`,
//! so all seminorm computations live on the zero-mean subspace.

use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::f64::consts::PI;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::grid::{integrate, to_spectral, Field, GridSpec, SpectralField};

/// The pair `(N, s)` with `0 < s < min(1, N/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct FracParams {
    dim: usize,
    s: f64,
}

impl FracParams {
    pub fn new(dim: usize, s: f64) -> Result<Self> {
        let upper = 1f64.min(dim as f64 / 2.0);
        if !(1..=3).contains(&dim) || !(s > 0.0 && s < upper) {
            return Err(Error::InvalidOrder { dim, s });
        }
        Ok(Self { dim, s })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Critical exponent `2N / (N - 2s)`.
    pub fn crit(&self) -> f64 {
        let n = self.dim as f64;
        2.0 * n / (n - 2.0 * self.s)
    }

    /// Amplitude exponent `(N - 2s) / 2` of the dilation group.
    pub fn dilation_exponent(&self) -> f64 {
        (self.dim as f64 - 2.0 * self.s) / 2.0
    }
}

#[derive(Deserialize)]
struct RawParams {
    dim: usize,
    s: f64,
}

impl TryFrom<RawParams> for FracParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        FracParams::new(r.dim, r.s)
    }
}

type WeightKey = (usize, usize, u64, u64);

thread_local! {
    static WEIGHTS: RefCell<Vec<(WeightKey, Rc<Vec<f64>>)>> = const { RefCell::new(Vec::new()) };
}

/// `|xi_m|^{2 alpha}` per mode (zero at the zero mode), cached per thread.
pub(crate) fn multiplier_weights(g: &GridSpec, alpha: f64) -> Rc<Vec<f64>> {
    let key = (g.dim(), g.points(), g.length().to_bits(), alpha.to_bits());
    WEIGHTS.with(|cache| {
        let mut cache = cache.borrow_mut();
        if let Some((_, w)) = cache.iter().find(|(k, _)| *k == key) {
            return w.clone();
        }
        let w: Rc<Vec<f64>> = Rc::new(
            (0..g.len())
                .map(|k| {
                    let xi2 = g.wavevector_norm_sq(k);
                    if xi2 == 0.0 {
                        0.0
                    } else {
                        xi2.powf(alpha)
                    }
                })
                .collect(),
        );
        if cache.len() >= 8 {
            cache.remove(0);
        }
        cache.push((key, w.clone()));
        w
    })
}

fn spectral_power(u: &Field, alpha: f64) -> SpectralField {
    let mut c = to_spectral(u);
    let w = multiplier_weights(u.grid(), alpha);
    c.coeffs_mut().iter_mut().zip(w.iter()).for_each(|(z, w)| *z *= *w);
    c
}

/// `(-Delta)^alpha u`: multiplies each coefficient by `|xi|^{2 alpha}`.
pub fn frac_laplacian(u: &Field, alpha: f64) -> Result<Field> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("power must be positive, got {alpha}")));
    }
    Ok(spectral_power(u, alpha).to_field())
}

/// `||u||^2 = sum |xi_m|^{2s} |c_m|^2`.
pub fn dnorm_sq(u: &Field, p: &FracParams) -> f64 {
    let c = to_spectral(u);
    let w = multiplier_weights(u.grid(), p.s());
    c.coeffs().iter().zip(w.iter()).map(|(z, w)| w * z.norm_sqr()).sum()
}

/// The `D^{s,2}` inner product `sum |xi|^{2s} Re(c_m conj(d_m))`.
pub fn dinner(u: &Field, v: &Field, p: &FracParams) -> f64 {
    let cu = to_spectral(u);
    let cv = to_spectral(v);
    let w = multiplier_weights(u.grid(), p.s());
    cu.coeffs().iter().zip(cv.coeffs()).zip(w.iter()).map(|((a, b), w)| w * (a * b.conj()).re).sum()
}

/// Relative size of the zero mode, `|c_0| / ||c||`.
pub(crate) fn relative_mean(c: &SpectralField) -> f64 {
    let total = c.l2_norm_sq().sqrt();
    if total == 0.0 {
        0.0
    } else {
        c.coeffs()[0].norm() / total
    }
}

/// Divides each nonzero mode by `|xi|^{2 alpha}`; requires a zero-mean input.
pub fn inverse_frac_laplacian(u: &Field, alpha: f64) -> Result<Field> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("power must be positive, got {alpha}")));
    }
    let mut c = to_spectral(u);
    let mean = relative_mean(&c);
    if mean > 1e-12 {
        return Err(Error::NonZeroMean { mean });
    }
    let w = multiplier_weights(u.grid(), alpha);
    c.coeffs_mut().iter_mut().zip(w.iter()).for_each(|(z, w)| *z *= if *w == 0.0 { 0.0 } else { 1.0 / w });
    Ok(c.to_field())
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * lanczos(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Gamma function for positive arguments (Lanczos on `(0, 10]`, recurrence above).
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma requires x > 0, got {x}")));
    }
    let mut scale = 1.0;
    let mut y = x;
    while y > 10.0 {
        y -= 1.0;
        scale *= y;
    }
    let value = scale * lanczos(y);
    if !value.is_finite() {
        return Err(Error::Overflow(format!("gamma({x})")));
    }
    Ok(value)
}

fn gamma(x: f64) -> f64 {
    gamma_fn(x).expect("gamma of a positive argument")
}

/// The constant of the embedding `int |u|^{2*} <= K (||u||^2)^{2*/2}` in the
/// closed form
/// `K = [2^{-2s} G((N-2s)/2) / G((N+2s)/2) (G(N)/G(N/2))^{2s/N}]^{2*/2}`.
///
/// This expression omits the factor `pi^{-s}` inside the bracket; see
/// [`sharp_sobolev_constant`] for the optimal constant under the unitary
/// Fourier normalization used throughout the crate.
pub fn sobolev_constant(p: &FracParams) -> f64 {
    let n = p.dim() as f64;
    let s = p.s();
    let bracket = 2f64.powf(-2.0 * s) * gamma((n - 2.0 * s) / 2.0) / gamma((n + 2.0 * s) / 2.0)
        * (gamma(n) / gamma(n / 2.0)).powf(2.0 * s / n);
    bracket.powf(p.crit() / 2.0)
}

/// Optimal embedding constant: [`sobolev_constant`] with the bracket multiplied by `pi^{-s}`.
pub fn sharp_sobolev_constant(p: &FracParams) -> f64 {
    sobolev_constant(p) * PI.powf(-p.s() * p.crit() / 2.0)
}

/// `int |u|^{2*} / (||u||^2)^{2*/2}`.
pub fn sobolev_quotient(u: &Field, p: &FracParams) -> Result<f64> {
    let d = dnorm_sq(u, p);
    let scale = u.max_abs().powi(2) * u.grid().volume();
    if !(d > 1e-24 * scale) {
        return Err(Error::ZeroSeminorm);
    }
    let q = p.crit();
    Ok(integrate(&u.map(|v| v.abs().powf(q))) / d.powf(q / 2.0))
}
