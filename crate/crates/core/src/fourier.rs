//! Unnormalized 3D discrete Fourier transforms on cubic arrays.
//!
//! Arrays are x-major (`((ix * n) + iy) * n + iz`). Plans are cached per
//! edge length and shared across threads.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Kernel `e^{-2πi jk/n}`.
    Forward,
    /// Kernel `e^{+2πi jk/n}`, no `1/n` factor.
    Inverse,
}

struct Plan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plan(n: usize) -> Arc<Plan> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plan>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plan {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

fn transform_rows(fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64], n: usize) {
    // a few rows per task keeps scratch allocation amortized
    let rows_per_task = (4096 / n).max(1);
    data.par_chunks_mut(n * rows_per_task).for_each(|block| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(block, &mut scratch);
    });
}

/// Cyclic axis rotation: `out[(b, c, a)] = src[(a, b, c)]`.
fn rotate(src: &[Complex64], out: &mut [Complex64], n: usize) {
    let n2 = n * n;
    out.par_chunks_mut(n).enumerate().for_each(|(row, line)| {
        // row = b * n + c, line runs over a
        let b = row / n;
        let c = row % n;
        for (a, z) in line.iter_mut().enumerate() {
            *z = src[a * n2 + b * n + c];
        }
    });
}

/// In-place 3D transform of an `n × n × n` x-major array.
pub fn fft3(data: &mut [Complex64], n: usize, direction: Direction) {
    assert_eq!(data.len(), n * n * n, "array is not n^3");
    let p = plan(n);
    let fft = match direction {
        Direction::Forward => &p.forward,
        Direction::Inverse => &p.inverse,
    };
    let mut tmp = vec![Complex64::new(0.0, 0.0); data.len()];
    // three rounds of (transform the contiguous axis, rotate axes) bring
    // every axis to the contiguous position once and restore the layout
    transform_rows(fft, data, n);
    rotate(data, &mut tmp, n);
    transform_rows(fft, &mut tmp, n);
    rotate(&tmp, data, n);
    transform_rows(fft, data, n);
    rotate(data, &mut tmp, n);
    data.copy_from_slice(&tmp);
}
