//! The s-harmonic extension of a periodic field to the half-space slab
//! `{y > 0}`, its weighted Dirichlet energy and Neumann trace.
//!
//! Each Fourier mode extends as `u_hat(xi) phi(|xi| y)` where `phi` decays and
//! solves `phi'' + ((1 - 2s) / z) phi' - phi = 0`, `phi(0) = 1`. The profile is
//! integrated once per `s` and shared by every frequency.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::fractional::gamma_fn;
use crate::grid::{to_spectral, Field, GridSpec, SpectralField};

fn check_order(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!("extension order must satisfy 0 < s < 1, got {s}")));
    }
    Ok(())
}

/// `kappa_s = 2^{1-2s} Gamma(1-s) / Gamma(s)`.
pub fn kappa(s: f64) -> Result<f64> {
    check_order(s)?;
    Ok(2f64.powf(1.0 - 2.0 * s) * gamma_fn(1.0 - s)? / gamma_fn(s)?)
}

/// Adaptive Simpson rule with an absolute tolerance.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::Quadrature(format!("no convergence on [{a}, {b}]")));
        }
        Ok(rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)? + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `int_{R^N} (|x|^2 + 1)^{-(N+2s)/2} dx` by radial quadrature on `[0, cutoff]`
/// plus the binomial tail series beyond.
pub fn poisson_mass(dim: usize, s: f64, cutoff: f64) -> Result<f64> {
    check_order(s)?;
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidArgument(format!("dimension must be 1, 2 or 3, got {dim}")));
    }
    if !(cutoff > 1.0) {
        return Err(Error::InvalidArgument(format!("radial cutoff must exceed 1, got {cutoff}")));
    }
    let n = dim as f64;
    let a = (n + 2.0 * s) / 2.0;
    let f = |r: f64| r.powf(n - 1.0) * (r * r + 1.0).powf(-a);
    let inner = adaptive_simpson(&f, 0.0, cutoff, 1e-13)?;
    // r^{N-1} (r^2 + 1)^{-a} = r^{-1-2s} sum_k binom(-a, k) r^{-2k}.
    let mut tail = 0.0;
    let mut binom = 1.0;
    for k in 0..400 {
        let term = binom * cutoff.powf(-2.0 * s - 2.0 * k as f64) / (2.0 * s + 2.0 * k as f64);
        tail += term;
        if term.abs() < 1e-18 * tail.abs() {
            let sphere = 2.0 * PI.powf(n / 2.0) / gamma_fn(n / 2.0)?;
            return Ok(sphere * (inner + tail));
        }
        binom *= (-a - k as f64) / (k as f64 + 1.0);
    }
    Err(Error::Quadrature("tail series did not converge".into()))
}

/// `beta(N, s)` normalizing `P_s(x, y) = beta y^{2s} / (|x|^2 + y^2)^{(N+2s)/2}`.
pub fn poisson_beta(dim: usize, s: f64) -> Result<f64> {
    Ok(1.0 / poisson_mass(dim, s, 10.0)?)
}

/// The decaying profile `phi` with `phi(0) = 1`.
#[derive(Debug, Clone)]
pub struct ExtensionProfile {
    s: f64,
    z0: f64,
    zmax: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
    /// Coefficient `c` in `phi(z) = 1 + c z^{2s} + O(z^2)`.
    trace: f64,
}

const PROFILE_Z0: f64 = 0.25;
const PROFILE_ZMAX: f64 = 40.0;
const PROFILE_STEP: f64 = 1e-3;

/// Power series of the two Frobenius solutions and their derivatives at `z`:
/// `y1 = sum a_k z^{2k}` and `y2 = z^{2s} sum b_k z^{2k}`.
fn frobenius(s: f64, z: f64) -> (f64, f64, f64, f64) {
    let (mut y1, mut d1, mut y2, mut d2) = (0.0, 0.0, 0.0, 0.0);
    let (mut a, mut b) = (1.0, 1.0);
    for k in 0..60 {
        let kf = k as f64;
        if k > 0 {
            a /= 2.0 * kf * (2.0 * kf - 2.0 * s);
            b /= (2.0 * s + 2.0 * kf) * 2.0 * kf;
        }
        let e1 = 2.0 * kf;
        let e2 = 2.0 * kf + 2.0 * s;
        y1 += a * z.powf(e1);
        if k > 0 {
            d1 += a * e1 * z.powf(e1 - 1.0);
        }
        y2 += b * z.powf(e2);
        d2 += b * e2 * z.powf(e2 - 1.0);
        if a * z.powf(e1) < 1e-20 && b * z.powf(e2) < 1e-20 {
            break;
        }
    }
    (y1, d1, y2, d2)
}

/// `z^{s - 1/2} e^{-z} S(z)` with the large-argument Bessel series `S` and its
/// derivative; proportional to `z^s K_s(z)`.
fn asymptotic(s: f64, z: f64) -> (f64, f64) {
    let mu = 4.0 * s * s;
    let (mut sum, mut dsum, mut term) = (1.0, 0.0, 1.0);
    for k in 1..8 {
        let kf = k as f64;
        term *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * z);
        sum += term;
        dsum += -kf * term / z;
    }
    let pre = z.powf(s - 0.5) * (-z).exp();
    let value = pre * sum;
    let slope = pre * ((s - 0.5) / z * sum - sum + dsum);
    (value, slope)
}

impl ExtensionProfile {
    /// Integrates the profile ODE backward from large `z` (where the decaying
    /// solution is dominant going inward) and matches to the Frobenius basis.
    pub fn new(s: f64) -> Result<Self> {
        check_order(s)?;
        let n = ((PROFILE_ZMAX - PROFILE_Z0) / PROFILE_STEP).round() as usize;
        let h = (PROFILE_ZMAX - PROFILE_Z0) / n as f64;
        let rhs = |z: f64, phi: f64, psi: f64| (psi, phi - (1.0 - 2.0 * s) / z * psi);
        let (mut phi, mut psi) = asymptotic(s, PROFILE_ZMAX);
        let mut values = vec![0.0; n + 1];
        let mut slopes = vec![0.0; n + 1];
        values[n] = phi;
        slopes[n] = psi;
        for i in (0..n).rev() {
            let z = PROFILE_Z0 + (i + 1) as f64 * h;
            let dt = -h;
            let k1 = rhs(z, phi, psi);
            let k2 = rhs(z + 0.5 * dt, phi + 0.5 * dt * k1.0, psi + 0.5 * dt * k1.1);
            let k3 = rhs(z + 0.5 * dt, phi + 0.5 * dt * k2.0, psi + 0.5 * dt * k2.1);
            let k4 = rhs(z + dt, phi + dt * k3.0, psi + dt * k3.1);
            phi += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            psi += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            if !(phi.is_finite() && psi.is_finite()) {
                return Err(Error::Solver(format!("profile integration diverged at z = {z}")));
            }
            values[i] = phi;
            slopes[i] = psi;
        }
        let (y1, d1, y2, d2) = frobenius(s, PROFILE_Z0);
        let det = y1 * d2 - y2 * d1;
        let a = (values[0] * d2 - slopes[0] * y2) / det;
        let b = (y1 * slopes[0] - d1 * values[0]) / det;
        if !(a.is_finite() && a != 0.0) {
            return Err(Error::Solver("profile matching is singular".into()));
        }
        values.iter_mut().for_each(|v| *v /= a);
        slopes.iter_mut().for_each(|v| *v /= a);
        Ok(Self { s, z0: PROFILE_Z0, zmax: PROFILE_ZMAX, step: h, values, slopes, trace: b / a })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Coefficient `c` of `z^{2s}` near the origin; `-2 s c = kappa_s`.
    pub fn trace_coefficient(&self) -> f64 {
        self.trace
    }

    /// `(phi(z), phi'(z))`, `z >= 0`.
    pub fn eval(&self, z: f64) -> (f64, f64) {
        if z <= self.z0 {
            if z == 0.0 {
                return (1.0, if self.s < 0.5 { f64::NEG_INFINITY } else { 0.0 });
            }
            let (y1, d1, y2, d2) = frobenius(self.s, z);
            return (y1 + self.trace * y2, d1 + self.trace * d2);
        }
        if z >= self.zmax {
            let last = self.values.len() - 1;
            let (g0, _) = asymptotic(self.s, self.zmax);
            let (g, dg) = asymptotic(self.s, z);
            let c = self.values[last] / g0;
            return (c * g, c * dg);
        }
        // Cubic Hermite on the integration table, with the ODE for phi''.
        let t = (z - self.z0) / self.step;
        let i = (t.floor() as usize).min(self.values.len() - 2);
        let u = t - i as f64;
        let h = self.step;
        let (p0, p1, m0, m1) = (self.values[i], self.values[i + 1], self.slopes[i] * h, self.slopes[i + 1] * h);
        let (u2, u3) = (u * u, u * u * u);
        let value = (2.0 * u3 - 3.0 * u2 + 1.0) * p0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * p1 + (u3 - u2) * m1;
        let slope = ((6.0 * u2 - 6.0 * u) * p0 + (3.0 * u2 - 4.0 * u + 1.0) * m0 + (-6.0 * u2 + 6.0 * u) * p1 + (3.0 * u2 - 2.0 * u) * m1) / h;
        (value, slope)
    }

    pub fn value(&self, z: f64) -> f64 {
        self.eval(z).0
    }

    /// Whether the tabulated profile is strictly decreasing.
    pub fn is_monotone(&self) -> bool {
        self.slopes.iter().all(|&d| d < 0.0) && self.values.windows(2).all(|w| w[1] < w[0])
    }
}

thread_local! {
    static PROFILES: RefCell<Vec<(u64, Rc<ExtensionProfile>)>> = const { RefCell::new(Vec::new()) };
}

/// Cached [`ExtensionProfile`] for order `s`.
pub fn profile(s: f64) -> Result<Rc<ExtensionProfile>> {
    let key = s.to_bits();
    if let Some(p) = PROFILES.with(|c| c.borrow().iter().find(|(k, _)| *k == key).map(|(_, p)| p.clone())) {
        return Ok(p);
    }
    let p = Rc::new(ExtensionProfile::new(s)?);
    PROFILES.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() >= 8 {
            c.remove(0);
        }
        c.push((key, p.clone()));
    });
    Ok(p)
}

/// The periodic base grid with graded heights `y_i = y_max (i/n)^q`, `i = 1..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionGrid {
    pub base: GridSpec,
    pub y_nodes: Vec<f64>,
    pub grading: f64,
}

impl ExtensionGrid {
    pub fn new(base: GridSpec, nodes: usize, y_max: f64, grading: f64) -> Result<Self> {
        if nodes < 32 {
            return Err(Error::InvalidArgument(format!("need at least 32 y-nodes, got {nodes}")));
        }
        if !(y_max > 0.0 && y_max.is_finite() && grading >= 1.0 && grading.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid y_max {y_max} or grading {grading}")));
        }
        let y_nodes = (1..=nodes).map(|i| y_max * (i as f64 / nodes as f64).powf(grading)).collect();
        Ok(Self { base, y_nodes, grading })
    }

    /// 128 nodes up to `y_max = L / 2` with quadratic grading.
    pub fn default_for(base: GridSpec) -> Self {
        Self::new(base, 128, base.length() / 2.0, 2.0).expect("default extension grid")
    }

    pub fn from_nodes(base: GridSpec, y_nodes: Vec<f64>) -> Result<Self> {
        if y_nodes.len() < 32 {
            return Err(Error::InvalidArgument(format!("need at least 32 y-nodes, got {}", y_nodes.len())));
        }
        if !(y_nodes[0] > 0.0) || y_nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("y-nodes must be positive and strictly increasing".into()));
        }
        Ok(Self { base, y_nodes, grading: f64::NAN })
    }

    pub fn y_max(&self) -> f64 {
        *self.y_nodes.last().expect("non-empty nodes")
    }
}

/// `w(x, y_i)` for every node of an [`ExtensionGrid`].
#[derive(Debug, Clone)]
pub struct HalfSpaceField {
    pub grid: ExtensionGrid,
    pub layers: Vec<Field>,
}

fn ensure_zero_mean(c: &SpectralField) -> Result<()> {
    let mean = crate::fractional::relative_mean(c);
    if mean > 1e-12 {
        return Err(Error::NonZeroMean { mean });
    }
    Ok(())
}

fn check_base(u: &Field, eg: &ExtensionGrid) -> Result<()> {
    u.grid().ensure_same(&eg.base)
}

/// Spectral extension `w_hat(xi, y) = u_hat(xi) phi(|xi| y)`. The mean is
/// carried unchanged to every height.
pub fn extend(u: &Field, s: f64, eg: &ExtensionGrid) -> Result<HalfSpaceField> {
    check_base(u, eg)?;
    let prof = profile(s)?;
    let c = to_spectral(u);
    let norms = eg.base.wavevector_norms();
    let layers = eg
        .y_nodes
        .iter()
        .map(|&y| {
            let coeffs = c.coeffs().iter().zip(&norms).map(|(z, &k)| z * prof.value(k * y)).collect();
            SpectralField::from_raw(eg.base, coeffs).to_field()
        })
        .collect();
    Ok(HalfSpaceField { grid: eg.clone(), layers })
}

/// Moments `int_a^b y^alpha y^j dy`, `j = 0, 1, 2`.
fn weighted_moments(alpha: f64, a: f64, b: f64) -> [f64; 3] {
    let m = |j: f64| (b.powf(alpha + j + 1.0) - a.powf(alpha + j + 1.0)) / (alpha + j + 1.0);
    [m(0.0), m(1.0), m(2.0)]
}

/// `int_0^{y_max} y^{1-2s} (k^2 phi(ky)^2 + (d/dy phi(ky))^2) dy` with the
/// profile sampled at the nodes (and 1 at y = 0), interpolated linearly and
/// differentiated by first differences.
fn mode_energy(prof: &ExtensionProfile, k: f64, nodes: &[f64]) -> f64 {
    let alpha = 1.0 - 2.0 * prof.s();
    let mut total = 0.0;
    let (mut a, mut pa) = (0.0, 1.0);
    for &b in nodes {
        let pb = prof.value(k * b);
        let c1 = (pb - pa) / (b - a);
        let c0 = pa - c1 * a;
        let [m0, m1, m2] = weighted_moments(alpha, a, b);
        total += c1 * c1 * m0 + k * k * (c0 * c0 * m0 + 2.0 * c0 * c1 * m1 + c1 * c1 * m2);
        a = b;
        pa = pb;
    }
    total
}

/// Relative deviation of the discrete weighted Dirichlet energy of the
/// extension from `kappa_s ||u||^2`.
pub fn energy_identity_residual(u: &Field, s: f64, eg: &ExtensionGrid) -> Result<f64> {
    check_base(u, eg)?;
    let c = to_spectral(u);
    ensure_zero_mean(&c)?;
    let prof = profile(s)?;
    let kap = kappa(s)?;
    let norms = eg.base.wavevector_norms();
    let mut cache: Vec<(f64, f64)> = Vec::new();
    let (mut discrete, mut exact) = (0.0, 0.0);
    for (z, &k) in c.coeffs().iter().zip(&norms) {
        let w = z.norm_sqr();
        if k == 0.0 || w == 0.0 {
            continue;
        }
        let e = match cache.iter().find(|(kk, _)| *kk == k) {
            Some((_, e)) => *e,
            None => {
                let e = mode_energy(&prof, k, &eg.y_nodes);
                cache.push((k, e));
                e
            }
        };
        discrete += w * e;
        exact += w * kap * k.powf(2.0 * s);
    }
    if exact == 0.0 {
        return Ok(0.0);
    }
    Ok((discrete - exact).abs() / exact)
}

/// `-lim y^{1-2s} w_y` estimated from the first two layers, per mode: the
/// one-sided quotients `2s (w(y_i) - u) / y_i^{2s}` are extrapolated linearly
/// in `y^{2-2s}` to `y = 0`.
pub fn neumann_trace(u: &Field, s: f64, eg: &ExtensionGrid) -> Result<Field> {
    check_base(u, eg)?;
    let c = to_spectral(u);
    ensure_zero_mean(&c)?;
    let prof = profile(s)?;
    let (y1, y2) = (eg.y_nodes[0], eg.y_nodes[1]);
    let (t1, t2) = (y1.powf(2.0 - 2.0 * s), y2.powf(2.0 - 2.0 * s));
    let norms = eg.base.wavevector_norms();
    let coeffs = c
        .coeffs()
        .iter()
        .zip(&norms)
        .map(|(z, &k)| {
            let q1 = 2.0 * s * (prof.value(k * y1) - 1.0) / y1.powf(2.0 * s);
            let q2 = 2.0 * s * (prof.value(k * y2) - 1.0) / y2.powf(2.0 * s);
            let q0 = q1 - (q2 - q1) / (t2 - t1) * t1;
            z * (-q0)
        })
        .collect();
    Ok(SpectralField::from_raw(eg.base, coeffs).to_field())
}

/// Relative `L^2` deviation of [`neumann_trace`] from `kappa_s (-Delta)^s u`.
pub fn neumann_trace_residual(u: &Field, s: f64, eg: &ExtensionGrid) -> Result<f64> {
    let est = neumann_trace(u, s, eg)?;
    let target = crate::fractional::frac_laplacian(u, s)?.scaled(kappa(s)?);
    let norm = target.dot(&target);
    if norm == 0.0 {
        return Ok(0.0);
    }
    let diff = est.sub(&target);
    Ok((diff.dot(&diff) / norm).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional::dnorm_sq;

    /// `K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt` by the trapezoid rule.
    fn bessel_k(nu: f64, z: f64) -> f64 {
        let h = 1e-3;
        let mut sum = 0.5 * (-z).exp();
        let mut t: f64 = h;
        loop {
            let v = (-z * t.cosh()).exp() * (nu * t).cosh();
            sum += v;
            if v < 1e-300 || t > 50.0 {
                break;
            }
            t += h;
        }
        sum * h
    }

    fn profile_oracle(s: f64, z: f64) -> f64 {
        z.powf(s) * bessel_k(s, z) * 2f64.powf(1.0 - s) / gamma_fn(s).unwrap()
    }

    #[test]
    fn half_order_profile_is_exponential() {
        let p = ExtensionProfile::new(0.5).unwrap();
        assert!((p.value(1.0) - (-1f64).exp()).abs() < 1e-8);
        for z in [0.0, 0.01, 0.2, 0.25, 0.7, 3.0, 12.5, 39.9, 45.0] {
            let (v, d) = p.eval(z);
            assert!((v - (-z).exp()).abs() < 1e-8 * (1.0f64).max((-z).exp()), "z = {z}: {v}");
            if z > 0.0 {
                assert!((d + (-z).exp()).abs() < 1e-7, "z = {z}: {d}");
            }
        }
        assert!((p.trace_coefficient() + 1.0).abs() < 1e-8);
    }

    #[test]
    fn profiles_match_bessel_oracle() {
        for s in [0.2, 0.25, 0.5, 0.75, 0.9] {
            let p = ExtensionProfile::new(s).unwrap();
            for z in [0.05, 0.3, 1.0, 2.5, 7.0] {
                let expect = profile_oracle(s, z);
                assert!((p.value(z) - expect).abs() < 1e-7, "s = {s}, z = {z}: {} vs {expect}", p.value(z));
            }
            assert!(p.is_monotone());
            assert_eq!(p.value(0.0), 1.0);
            // phi = 1 + c z^{2s} + ..., and -2 s c is the Neumann constant.
            assert!((-2.0 * s * p.trace_coefficient() - kappa(s).unwrap()).abs() < 1e-7, "s = {s}");
        }
    }

    #[test]
    fn kappa_values() {
        assert!((kappa(0.5).unwrap() - 1.0).abs() < 1e-14);
        assert!((kappa(0.25).unwrap() - 0.4780).abs() < 1e-4);
        assert!((kappa(0.75).unwrap() - 2.0920).abs() < 1e-4);
        for s in [0.1, 0.3, 0.45, 0.8] {
            assert!((kappa(s).unwrap() * kappa(1.0 - s).unwrap() - 1.0).abs() < 1e-10);
        }
        assert!(kappa(1.0).is_err() && kappa(0.0).is_err());
    }

    #[test]
    fn poisson_normalization() {
        assert!((poisson_beta(1, 0.5).unwrap() - 1.0 / PI).abs() < 1e-9);
        for (n, s) in [(1, 0.5), (1, 0.3), (2, 0.5), (2, 0.75), (3, 0.25), (3, 0.9)] {
            let nf = n as f64;
            let oracle = gamma_fn((nf + 2.0 * s) / 2.0).unwrap() / (PI.powf(nf / 2.0) * gamma_fn(s).unwrap());
            let b = poisson_beta(n, s).unwrap();
            assert!((b - oracle).abs() / oracle < 1e-8, "N = {n}, s = {s}: {b} vs {oracle}");
            let doubled = 1.0 / poisson_mass(n, s, 20.0).unwrap();
            assert!((doubled - b).abs() / b < 1e-8);
            assert!((b * poisson_mass(n, s, 10.0).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    fn odd_bump(g: GridSpec) -> Field {
        Field::from_fn(g, |x| x[0] * (-x.iter().map(|v| v * v).sum::<f64>() / 2.0).exp())
    }

    #[test]
    fn single_mode_extends_separably() {
        let l = 10.0;
        let g = GridSpec::new(1, 64, l).unwrap();
        let xi = 2.0 * PI * 3.0 / l;
        let u = Field::from_fn(g, |x| (xi * x[0]).cos());
        for s in [0.3, 0.5, 0.8] {
            let eg = ExtensionGrid::new(g, 40, 5.0, 2.0).unwrap();
            let w = extend(&u, s, &eg).unwrap();
            let p = profile(s).unwrap();
            for (layer, &y) in w.layers.iter().zip(&eg.y_nodes) {
                let expect = u.scaled(p.value(xi * y));
                assert!(layer.sub(&expect).max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn extension_matches_direct_kernel() {
        // Slow oracle: the Poisson convolution on the line, by the trapezoid
        // rule on a fine auxiliary mesh.
        let g = GridSpec::new(1, 256, 40.0).unwrap();
        let s = 0.3;
        let u = odd_bump(g);
        let eg = ExtensionGrid::from_nodes(g, (1..=32).map(|i| 0.05 * i as f64).collect()).unwrap();
        let w = extend(&u, s, &eg).unwrap();
        let beta = poisson_beta(1, s).unwrap();
        let a = (1.0 + 2.0 * s) / 2.0;
        for (layer_idx, y) in [(3usize, 0.2f64), (19, 1.0), (31, 1.6)] {
            for i in [100usize, 128, 140, 160] {
                let x = g.coordinate(i);
                let hq = 1e-3;
                let mut acc = 0.0;
                let mut xi: f64 = -20.0;
                while xi < 20.0 {
                    let uv = xi * (-xi * xi / 2.0).exp();
                    acc += beta * y.powf(2.0 * s) * ((x - xi).powi(2) + y * y).powf(-a) * uv * hq;
                    xi += hq;
                }
                let got = w.layers[layer_idx].values()[i];
                assert!((got - acc).abs() < 1e-4, "y = {y}, x = {x}: {got} vs {acc}");
            }
        }
    }

    #[test]
    fn nonnegative_data_extends_nonnegatively() {
        let g = GridSpec::new(2, 64, 20.0).unwrap();
        let u = Field::from_fn(g, |x| (-x.iter().map(|v| v * v).sum::<f64>() / 3.0).exp());
        for s in [0.25, 0.5, 0.75] {
            let w = extend(&u, s, &ExtensionGrid::default_for(g)).unwrap();
            for layer in &w.layers {
                assert!(layer.values().iter().all(|&v| v > -1e-12));
            }
        }
    }

    #[test]
    fn trace_is_recovered_at_first_node() {
        let g = GridSpec::new(1, 128, 20.0).unwrap();
        let u = odd_bump(g);
        for s in [0.3, 0.5, 0.8] {
            let mut prev = f64::INFINITY;
            for n in [32, 64, 128] {
                let eg = ExtensionGrid::new(g, n, 10.0, 2.0).unwrap();
                let w = extend(&u, s, &eg).unwrap();
                let d = w.layers[0].sub(&u);
                let err = (d.dot(&d) / u.dot(&u)).sqrt();
                // |phi(k y) - 1| <= |c| (k y)^{2s} for the dominant modes.
                let kmax = PI / g.spacing();
                let bound = profile(s).unwrap().trace_coefficient().abs() * (kmax * eg.y_nodes[0]).powf(2.0 * s);
                assert!(err <= bound && err < prev, "s = {s}, n = {n}: {err} vs {bound}");
                prev = err;
            }
        }
    }

    #[test]
    fn energy_identity() {
        let g = GridSpec::new(1, 128, 20.0).unwrap();
        assert_eq!(energy_identity_residual(&Field::zeros(g), 0.5, &ExtensionGrid::default_for(g)).unwrap(), 0.0);
        // Single mode, s = 1/2.
        let l = 20.0;
        let u = Field::from_fn(g, |x| (2.0 * PI * 2.0 * x[0] / l).sin());
        let eg = ExtensionGrid::new(g, 128, 20.0, 2.0).unwrap();
        assert!(energy_identity_residual(&u, 0.5, &eg).unwrap() < 1e-3);
        // Smooth bump, 128 graded nodes to y_max = 20.
        let b = odd_bump(g);
        let r = energy_identity_residual(&b, 0.5, &eg).unwrap();
        assert!(r < 0.03, "{r}");
        let fine = ExtensionGrid::new(g, 256, 20.0, 2.0).unwrap();
        assert!(energy_identity_residual(&b, 0.5, &fine).unwrap() < r);
        let shifted = b.add(&Field::constant(g, 1.0));
        assert!(matches!(energy_identity_residual(&shifted, 0.5, &eg), Err(Error::NonZeroMean { .. })));
        // The residual is relative to kappa ||u||^2.
        let p = crate::FracParams::new(1, 0.25).unwrap();
        assert!(dnorm_sq(&b, &p) > 0.0);
    }

    #[test]
    fn energy_identity_refines() {
        let mut prev = f64::INFINITY;
        for (m, n) in [(64, 64), (128, 128), (256, 256)] {
            let g = GridSpec::new(1, m, 20.0).unwrap();
            let eg = ExtensionGrid::new(g, n, 20.0, 2.0).unwrap();
            let r = energy_identity_residual(&odd_bump(g), 0.5, &eg).unwrap();
            assert!(r < prev, "M = {m}: {r} vs {prev}");
            prev = r;
        }
    }

    #[test]
    fn neumann_trace() {
        let g = GridSpec::new(1, 128, 20.0).unwrap();
        let eg = ExtensionGrid::default_for(g);
        assert_eq!(neumann_trace_residual(&Field::zeros(g), 0.5, &eg).unwrap(), 0.0);
        let u = Field::from_fn(g, |x| (2.0 * PI * 2.0 * x[0] / 20.0).cos());
        assert!(neumann_trace_residual(&u, 0.5, &eg).unwrap() < 1e-3);
        let b = odd_bump(g);
        for s in [0.25, 0.5, 0.75] {
            let coarse = ExtensionGrid::new(g, 64, 10.0, 2.0).unwrap();
            let fine = ExtensionGrid::new(g, 128, 10.0, 2.0).unwrap();
            let rc = neumann_trace_residual(&b, s, &coarse).unwrap();
            let rf = neumann_trace_residual(&b, s, &fine).unwrap();
            assert!(rc < 0.05, "s = {s}: {rc}");
            assert!(rf <= 0.5 * rc, "s = {s}: {rf} vs {rc}");
        }
    }
}
