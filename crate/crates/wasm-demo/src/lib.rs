//! Browser bindings for a few fracfield computations. Every function returns a
//! flat `Float64Array`; errors come back as JS strings.

use fracfield::extension;
use fracfield::variational::{self, SolverConfig};
use fracfield::{FracParams, GridSpec, Nonlinearity};
use wasm_bindgen::prelude::*;

fn js(e: fracfield::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Samples of the shared extension profile `phi_s(z)` on `[0, z_max]`,
/// interleaved as `z0, phi0, z1, phi1, ...`.
#[wasm_bindgen]
pub fn extension_profile(s: f64, z_max: f64, samples: usize) -> Result<Vec<f64>, JsValue> {
    if !(z_max > 0.0) || samples < 2 {
        return Err(JsValue::from_str("need z_max > 0 and at least 2 samples"));
    }
    let prof = extension::profile(s).map_err(js)?;
    Ok((0..samples)
        .flat_map(|i| {
            let z = z_max * i as f64 / (samples - 1) as f64;
            [z, prof.value(z)]
        })
        .collect())
}

/// The mountain-pass path `t -> I(zeta_u(t))` for given `||u||^2` and `Phi(u)`.
/// Returns `[t_star, I_max, t0, I0, t1, I1, ...]`.
#[wasm_bindgen]
pub fn path_energy_curve(dim: usize, s: f64, norm_sq: f64, phi_u: f64, t_max: f64, samples: usize) -> Result<Vec<f64>, JsValue> {
    let p = FracParams::new(dim, s).map_err(js)?;
    let (tstar, imax) = variational::path_max(norm_sq, phi_u, &p).map_err(js)?;
    if !(t_max > 0.0) || samples < 2 {
        return Err(JsValue::from_str("need t_max > 0 and at least 2 samples"));
    }
    let mut out = vec![tstar, imax];
    for i in 1..=samples {
        let t = t_max * i as f64 / samples as f64;
        out.push(t);
        out.push(variational::path_energy_closed(norm_sq, phi_u, &p, t).map_err(js)?);
    }
    Ok(out)
}

/// Constrained maximizer of `Phi` on `||u||^2 = l` in one dimension with the
/// critical power. Returns `[S_l, iterations, stationarity, x0, u0, x1, u1, ...]`.
#[wasm_bindgen]
pub fn maximizer_1d(s: f64, l: f64, points: usize, length: f64) -> Result<Vec<f64>, JsValue> {
    let p = FracParams::new(1, s).map_err(js)?;
    let grid = GridSpec::new(1, points, length).map_err(js)?;
    let cfg = SolverConfig { max_iters: 500, ..SolverConfig::default() };
    let sol = variational::maximize_s(l, &Nonlinearity::critical(p), grid, &cfg).map_err(js)?;
    let mut out = vec![sol.value, sol.iterations as f64, sol.stationarity];
    for (i, v) in sol.field.values().iter().enumerate() {
        out.push(grid.coordinate(i));
        out.push(*v);
    }
    Ok(out)
}
