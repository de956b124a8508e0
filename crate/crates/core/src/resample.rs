//! Band-limited resampling: spectral zero-padding between grids on the same
//! box, trigonometric interpolation for dilations, and phase-shift translation.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::Result;
use crate::grid::{to_spectral, Field, GridSpec, SpectralField};

fn remap_index(m: i64, points: usize) -> usize {
    m.rem_euclid(points as i64) as usize
}

/// Trigonometric interpolant of `u` sampled on a grid with `factor` times more
/// points per axis.
pub fn upsample(u: &Field, factor: usize) -> Result<Field> {
    let coarse = *u.grid();
    let fine = coarse.refined(factor)?;
    if factor == 1 {
        return Ok(u.clone());
    }
    let c = to_spectral(u);
    let mut d = vec![Complex64::default(); fine.len()];
    for (k, z) in c.coeffs().iter().enumerate() {
        let idx = coarse.unflatten(k);
        let mut fidx = [0usize; 3];
        for axis in 0..coarse.dim() {
            fidx[axis] = remap_index(coarse.frequency_index(idx[axis]), fine.points());
        }
        d[fine.flatten(&fidx)] = *z;
    }
    Ok(SpectralField::from_raw(fine, d).to_field())
}

/// L^2-orthogonal projection of a fine-grid field onto the modes of `coarse`;
/// the adjoint of [`upsample`].
pub fn project(v: &Field, coarse: &GridSpec) -> Field {
    let fine = *v.grid();
    let d = to_spectral(v);
    let mut c = vec![Complex64::default(); coarse.len()];
    for (k, z) in c.iter_mut().enumerate() {
        let idx = coarse.unflatten(k);
        let mut fidx = [0usize; 3];
        for axis in 0..coarse.dim() {
            fidx[axis] = remap_index(coarse.frequency_index(idx[axis]), fine.points());
        }
        *z = d.coeffs()[fine.flatten(&fidx)];
    }
    SpectralField::from_raw(*coarse, c).to_field()
}

/// Weight of sample `k` in the trigonometric interpolant evaluated at `t`,
/// with the Nyquist mode split symmetrically.
fn interp_weight(grid: &GridSpec, t: f64, k: usize) -> f64 {
    let m = grid.points() as f64;
    let theta = 2.0 * PI * (t - grid.coordinate(k)) / grid.length();
    let half = 0.5 * theta;
    let sh = half.sin();
    if sh.abs() < 1e-9 {
        // theta is a multiple of 2 pi: the kernel equals cos(M theta / 2) there.
        return (m * half).cos();
    }
    (m * half).sin() * half.cos() / (sh * m)
}

/// Row-major dense matrix mapping samples along one axis to the values of the
/// interpolant at `factor * x_i`; rows whose target falls outside the box are zero.
fn dilation_matrix(grid: &GridSpec, factor: f64) -> Vec<f64> {
    let m = grid.points();
    let half = grid.length() / 2.0;
    let mut w = vec![0.0; m * m];
    for i in 0..m {
        let t = factor * grid.coordinate(i);
        if t < -half || t >= half {
            continue;
        }
        for k in 0..m {
            w[i * m + k] = interp_weight(grid, t, k);
        }
    }
    w
}

fn apply_along_axes(u: &Field, matrix: &[f64]) -> Field {
    let g = *u.grid();
    let m = g.points();
    let mut data = u.values().to_vec();
    let total = data.len();
    let mut line = vec![0.0; m];
    for axis in 0..g.dim() {
        let stride = m.pow((g.dim() - 1 - axis) as u32);
        let block = m * stride;
        for outer in 0..total / block {
            for inner in 0..stride {
                let base = outer * block + inner;
                for (k, l) in line.iter_mut().enumerate() {
                    *l = data[base + k * stride];
                }
                for i in 0..m {
                    let row = &matrix[i * m..(i + 1) * m];
                    data[base + i * stride] = row.iter().zip(&line).map(|(a, b)| a * b).sum();
                }
            }
        }
    }
    Field::from_raw(g, data)
}

/// `x -> u(factor * x)` on the same grid, treating `u` as zero outside the box.
/// Exact for band-limited fields whose dilate remains band-limited.
pub fn dilate(u: &Field, factor: f64) -> Field {
    let g = *u.grid();
    if factor == 1.0 {
        return u.clone();
    }
    let stride_ratio = factor.log2();
    if factor > 1.0 && stride_ratio.fract() == 0.0 {
        return dilate_by_sampling(u, factor as usize);
    }
    apply_along_axes(u, &dilation_matrix(&g, factor))
}

/// Sampling at `step * x_i` for integer `step`; exact, no interpolation.
fn dilate_by_sampling(u: &Field, step: usize) -> Field {
    let g = *u.grid();
    let m = g.points() as i64;
    let center = m / 2;
    let mut out = vec![0.0; g.len()];
    'outer: for (k, o) in out.iter_mut().enumerate() {
        let idx = g.unflatten(k);
        let mut src = [0usize; 3];
        for axis in 0..g.dim() {
            let j = center + step as i64 * (idx[axis] as i64 - center);
            if j < 0 || j >= m {
                continue 'outer;
            }
            src[axis] = j as usize;
        }
        *o = u.values()[g.flatten(&src)];
    }
    Field::from_raw(g, out)
}

/// Torus endomorphism `x -> step * x (mod L)`: maps mode `m` to mode `step * m`.
pub fn dilate_periodic(u: &Field, step: usize) -> Field {
    let g = *u.grid();
    let m = g.points();
    let center = m / 2;
    let mut out = vec![0.0; g.len()];
    for (k, o) in out.iter_mut().enumerate() {
        let idx = g.unflatten(k);
        let mut src = [0usize; 3];
        for axis in 0..g.dim() {
            let j = center as i64 + step as i64 * (idx[axis] as i64 - center as i64);
            src[axis] = j.rem_euclid(m as i64) as usize;
        }
        *o = u.values()[g.flatten(&src)];
    }
    Field::from_raw(g, out)
}

/// Translation `x -> u(x - y)` by an arbitrary vector via spectral phase shift.
pub fn translate_spectral(u: &Field, y: &[f64]) -> Field {
    let g = *u.grid();
    let mut c = to_spectral(u);
    for (k, z) in c.coeffs_mut().iter_mut().enumerate() {
        let idx = g.unflatten(k);
        let phase: f64 = (0..g.dim()).map(|a| -g.wavenumber(idx[a]) * y[a]).sum();
        *z *= Complex64::from_polar(1.0, phase);
    }
    c.to_field()
}

/// Fraction of `u`'s spectral energy carried by modes with some
/// `|m_axis| >= cutoff`.
pub fn spectral_tail_fraction(u: &Field, cutoff: f64) -> f64 {
    let g = *u.grid();
    let c = to_spectral(u);
    let total = c.l2_norm_sq();
    if total == 0.0 {
        return 0.0;
    }
    let tail: f64 = c
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let idx = g.unflatten(*k);
            (0..g.dim()).any(|a| (g.frequency_index(idx[a]) as f64).abs() >= cutoff)
        })
        .map(|(_, z)| z.norm_sqr())
        .sum();
    tail / total
}

/// Fraction of `u`'s L^2 mass outside the centered cube of half-width `half`.
pub fn spatial_tail_fraction(u: &Field, half: f64) -> f64 {
    let g = *u.grid();
    let total: f64 = u.values().iter().map(|v| v * v).sum();
    if total == 0.0 {
        return 0.0;
    }
    let tail: f64 = u
        .values()
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let x = g.position(*k);
            x[..g.dim()].iter().any(|c| c.abs() >= half)
        })
        .map(|(_, v)| v * v)
        .sum();
    tail / total
}
