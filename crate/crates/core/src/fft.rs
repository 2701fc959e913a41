//! Thread-local FFT plan cache shared by the modems and the channel.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Unnormalized forward DFT in place.
pub(crate) fn forward(buf: &mut [Complex64]) {
    if !buf.is_empty() {
        plan(buf.len(), false).process(buf);
    }
}

/// Unnormalized inverse DFT in place.
pub(crate) fn inverse(buf: &mut [Complex64]) {
    if !buf.is_empty() {
        plan(buf.len(), true).process(buf);
    }
}

/// Frequency in cycles/sample of DFT bin `k` of a length-`len` transform,
/// mapped to [-1/2, 1/2).
pub(crate) fn bin_frequency(k: usize, len: usize) -> f64 {
    let k = k as f64;
    let n = len as f64;
    if k >= n / 2.0 {
        (k - n) / n
    } else {
        k / n
    }
}
