//! Univariate minimisation: a uniform bracketing scan followed by
//! golden-section refinement.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for the minimum of `f` on `[a, b]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64, max_evals: usize) -> Minimum {
    const PHI: f64 = 1.618_033_988_749_895;
    const RESP: f64 = 2.0 - PHI;

    let mut x1 = a + RESP * (b - a);
    let mut x2 = b - RESP * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evals = 2;

    while evals < max_evals && (b - a).abs() > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + RESP * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - RESP * (b - a);
            f2 = f(x2);
        }
        evals += 1;
    }

    let (x, value) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    Minimum {
        x,
        value,
        evaluations: evals,
    }
}

/// Scan `n` equispaced points of `[a, b]`, then refine around the best one.
pub fn scan_then_golden(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Minimum {
    let n = n.max(3);
    let xs: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
    let (best, _) = xs
        .iter()
        .map(|&x| f(x))
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let lo = xs[best.saturating_sub(1)];
    let hi = xs[(best + 1).min(n - 1)];
    let mut m = golden_section(&f, lo, hi, 1e-13, 500);
    // Endpoint minima are not interior to the bracket.
    for &x in &[lo, hi] {
        let v = f(x);
        if v < m.value {
            m.x = x;
            m.value = v;
        }
    }
    m.evaluations += n + 2;
    m
}

/// Maximum of `f` via `scan_then_golden` on `-f`.
pub fn scan_then_golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Minimum {
    let m = scan_then_golden(|x| -f(x), a, b, n);
    Minimum { value: -m.value, ..m }
}
