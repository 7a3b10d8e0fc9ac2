//! Flat smooth switches built from `exp(-1/t)`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Derivative orders certified for flatness.
pub const K_MAX: usize = 6;
/// Threshold on finite-difference derivatives for a "flat" certificate.
pub const TOL_FLAT: f64 = 1e-8;

fn flat_kernel(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// C-infinity switch: 0 on `[0, a]`, 1 on `[b, 1]`, flat at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothSwitch {
    pub a: f64,
    pub b: f64,
}

impl SmoothSwitch {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a < 0.0 || a >= b {
            return Err(LabError::Domain(format!(
                "smooth transition needs 0 <= a < b, got a = {a}, b = {b}"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= self.a {
            return 0.0;
        }
        if r >= self.b {
            return 1.0;
        }
        // Rescale to [0,1] so the kernel does not underflow for narrow windows.
        let w = self.b - self.a;
        let t = (r - self.a) / w;
        let p = flat_kernel(t);
        let q = flat_kernel(1.0 - t);
        p / (p + q)
    }
}

/// `smooth_transition(a, b)`.
pub fn smooth_transition(a: f64, b: f64) -> Result<SmoothSwitch> {
    SmoothSwitch::new(a, b)
}

/// Forward finite-difference derivative of order `k` at `x0` with step `h`.
pub fn forward_derivative(f: impl Fn(f64) -> f64, x0: f64, k: usize, h: f64) -> f64 {
    let mut sum = 0.0;
    let mut binom = 1.0;
    for i in 0..=k {
        let sign = if (k - i).is_multiple_of(2) { 1.0 } else { -1.0 };
        sum += sign * binom * f(x0 + i as f64 * h);
        binom = binom * (k - i) as f64 / (i + 1) as f64;
    }
    sum / h.powi(k as i32)
}

/// Backward finite-difference derivative of order `k` at `x0`.
pub fn backward_derivative(f: impl Fn(f64) -> f64, x0: f64, k: usize, h: f64) -> f64 {
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * forward_derivative(|x| f(2.0 * x0 - x), x0, k, h)
}
