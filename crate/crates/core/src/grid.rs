//! Periodic grids on a centered box, real fields sampled on them, and the
//! unitary-normalized spectral transform.
//!
//! The box is `[-L/2, L/2)^N` sampled at `M` points per axis, point `i` sitting
//! at `(i - M/2) h`. Values are stored row-major (last axis fastest).
//!
//! Spectral coefficients are scaled so that the discrete Parseval identity
//! `sum |c_m|^2 = h^N sum |u_k|^2` holds, which makes the coefficient at
//! wavevector `xi_m` a sample of the continuum transform
//! `(2 pi)^{-N/2} int u(x) e^{-i xi x} dx` times `(2 pi / L)^{-N/2}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fft;

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    points: usize,
    length: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, length: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {points}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {length}")));
        }
        Ok(Self { dim, points, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    /// Total number of samples, `M^N`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Spacing of the frequency lattice, `2 pi / L`.
    pub fn frequency_spacing(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Physical coordinate of grid index `i` along any axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 - (self.points / 2) as f64) * self.spacing()
    }

    /// Signed frequency index `m in [-M/2, M/2)` of storage index `k`.
    pub fn frequency_index(&self, k: usize) -> i64 {
        let m = self.points;
        if k < m / 2 {
            k as i64
        } else {
            k as i64 - m as i64
        }
    }

    pub fn wavenumber(&self, k: usize) -> f64 {
        self.frequency_spacing() * self.frequency_index(k) as f64
    }

    /// Splits a flat row-major index into per-axis indices.
    pub fn unflatten(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0usize; MAX_DIM];
        for axis in (0..self.dim).rev() {
            idx[axis] = flat % self.points;
            flat /= self.points;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().take(self.dim).fold(0, |acc, &i| acc * self.points + i)
    }

    pub fn position(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.unflatten(flat);
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            x[axis] = self.coordinate(idx[axis]);
        }
        x
    }

    /// `|xi_m|^2` for the flat spectral index.
    pub fn wavevector_norm_sq(&self, flat: usize) -> f64 {
        let idx = self.unflatten(flat);
        (0..self.dim).map(|a| self.wavenumber(idx[a]).powi(2)).sum()
    }

    /// All `|xi_m|` in storage order.
    pub fn wavevector_norms(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.wavevector_norm_sq(k).sqrt()).collect()
    }

    /// Same box, `factor` times as many points per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.dim, self.points * factor, self.length)
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self.dim != other.dim || self.points != other.points || self.length != other.length {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// A real field sampled on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at index {pos}")));
        }
        Ok(Self { grid, values })
    }

    /// Builds a field without validation. Callers guarantee finiteness and length.
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    /// Samples `f` at every grid point; `f` receives the first `N` coordinates.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let values = (0..grid.len())
            .map(|k| {
                let x = grid.position(k);
                f(&x[..dim])
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Field) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect();
        Field::from_raw(self.grid, values)
    }

    pub fn add(&self, other: &Field) -> Field {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.axpy(-1.0, other)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Field) -> Field {
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x * y).collect();
        Field::from_raw(self.grid, values)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Projection onto the zero-mean subspace.
    pub fn zero_mean(&self) -> Field {
        let m = self.mean();
        self.map(|v| v - m)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Grid `L^2` inner product `h^N sum u v`.
    pub fn dot(&self, other: &Field) -> f64 {
        self.grid.cell_volume() * self.values.iter().zip(&other.values).map(|(x, y)| x * y).sum::<f64>()
    }

    /// Cyclic shift by whole grid points along each axis.
    pub fn shifted(&self, shift: &[i64]) -> Field {
        let g = self.grid;
        let m = g.points() as i64;
        let mut out = vec![0.0; g.len()];
        for (k, v) in self.values.iter().enumerate() {
            let mut idx = g.unflatten(k);
            for axis in 0..g.dim() {
                let s = shift.get(axis).copied().unwrap_or(0);
                idx[axis] = (idx[axis] as i64 + s).rem_euclid(m) as usize;
            }
            out[g.flatten(&idx)] = *v;
        }
        Field::from_raw(g, out)
    }
}

/// Unitary-normalized spectral coefficients of a real field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub(crate) fn from_raw(grid: GridSpec, coeffs: Vec<Complex64>) -> Self {
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// `sum |c_m|^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Multiplies each coefficient by `f(|xi_m|)`.
    pub fn apply_radial_multiplier(&mut self, f: impl Fn(f64) -> f64) {
        let g = self.grid;
        for (k, c) in self.coeffs.iter_mut().enumerate() {
            *c *= f(g.wavevector_norm_sq(k).sqrt());
        }
    }

    /// Inverse transform; the imaginary residue of roundoff is dropped.
    pub fn to_field(&self) -> Field {
        let g = self.grid;
        let mut data = self.coeffs.clone();
        fft::transform(&g, &mut data, fft::Direction::Inverse);
        let scale = 1.0 / (g.len() as f64 * normalization(&g));
        Field::from_raw(g, data.into_iter().map(|c| c.re * scale).collect())
    }
}

fn normalization(g: &GridSpec) -> f64 {
    (g.cell_volume() / g.len() as f64).sqrt()
}

pub fn to_spectral(u: &Field) -> SpectralField {
    let g = *u.grid();
    let mut data: Vec<Complex64> = u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::transform(&g, &mut data, fft::Direction::Forward);
    let scale = normalization(&g);
    data.iter_mut().for_each(|c| *c *= scale);
    SpectralField::from_raw(g, data)
}

pub fn to_field(spec: &SpectralField) -> Field {
    spec.to_field()
}

/// Rectangle rule on the torus, `h^N sum u_k`. The sum is correctly rounded,
/// so it does not depend on the order of the values.
pub fn integrate(u: &Field) -> f64 {
    u.grid().cell_volume() * exact_sum(u.values())
}

/// Shewchuk's non-overlapping partials; the result is the correctly rounded
/// sum for finite input.
pub(crate) fn exact_sum(v: &[f64]) -> f64 {
    let mut partials: Vec<f64> = Vec::with_capacity(8);
    for &x in v {
        let mut x = x;
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    // Round the expansion once, with the half-way correction.
    let Some(mut hi) = partials.pop() else { return 0.0 };
    let mut lo = 0.0;
    while let Some(y) = partials.pop() {
        let x = hi;
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    if let Some(&next) = partials.last() {
        if (lo < 0.0 && next < 0.0) || (lo > 0.0 && next > 0.0) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
    }
    hi
}

pub fn lp_norm(u: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("L^p norm requires finite p >= 1, got {p}")));
    }
    let sum: f64 = u.values().iter().map(|v| v.abs().powf(p)).sum();
    Ok((u.grid().cell_volume() * sum).powf(1.0 / p))
}
