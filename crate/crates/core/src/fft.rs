//! Unnormalized multi-dimensional complex FFTs over row-major grids.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

use crate::grid::GridSpec;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// In-place transform along every axis of `grid`. No scaling is applied.
pub(crate) fn transform(grid: &GridSpec, data: &mut [Complex64], dir: Direction) {
    transform_dims(grid.dim(), grid.points(), data, dir);
}

pub(crate) fn transform_dims(dim: usize, m: usize, data: &mut [Complex64], dir: Direction) {
    debug_assert_eq!(data.len(), m.pow(dim as u32));
    let fft = PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        match dir {
            Direction::Forward => planner.plan_fft_forward(m),
            Direction::Inverse => planner.plan_fft_inverse(m),
        }
    });
    let total = data.len();
    let mut buf: Vec<Complex64> = Vec::new();
    for axis in 0..dim {
        let stride = m.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            fft.process(data);
            continue;
        }
        if buf.is_empty() {
            buf = vec![Complex64::default(); total];
        }
        let block = m * stride;
        let mut line = 0;
        for outer in 0..total / block {
            for inner in 0..stride {
                let base = outer * block + inner;
                let dst = &mut buf[line * m..(line + 1) * m];
                for (k, d) in dst.iter_mut().enumerate() {
                    *d = data[base + k * stride];
                }
                line += 1;
            }
        }
        fft.process(&mut buf);
        let mut line = 0;
        for outer in 0..total / block {
            for inner in 0..stride {
                let base = outer * block + inner;
                let src = &buf[line * m..(line + 1) * m];
                for (k, s) in src.iter().enumerate() {
                    data[base + k * stride] = *s;
                }
                line += 1;
            }
        }
    }
}
