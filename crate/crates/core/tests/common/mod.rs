#![allow(dead_code)]

use std::collections::BTreeSet;

use hartogs_lab::hypothesis::chirka_condition_margin;
use hartogs_lab::polar::{PolarGrid, Profile, ProfileExpr, RadialModeSeries};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `sum_k coeffs[k] r^{power + 2k}`.
pub fn poly(power: usize, coeffs: &[Complex64]) -> Profile {
    let mut v = vec![c(0.0, 0.0); power + 2 * coeffs.len()];
    for (k, &a) in coeffs.iter().enumerate() {
        v[power + 2 * k] = a;
    }
    Profile::Expr(ProfileExpr::Polynomial { coeffs: v })
}

pub fn random_grid() -> PolarGrid {
    PolarGrid::chebyshev(64, 512).unwrap()
}

/// Random polynomial map in `(z, zbar)` with modes `|n| <= 5`, scaled so the
/// mode condition margin is uniform in `[0.1, 0.6]`.
pub fn random_admissible(seed: u64) -> RadialModeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.gen_range(1..=4);
    let mut modes = BTreeSet::new();
    while modes.len() < count {
        modes.insert(rng.gen_range(-5i32..=5));
    }
    let mut unit = || c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let raw: Vec<(i32, Vec<Complex64>)> = modes.iter().map(|&n| (n, vec![unit(), unit()])).collect();
    let build = |t: f64| {
        RadialModeSeries::scalar(
            random_grid(),
            raw.iter().map(|(n, cs)| {
                let scaled: Vec<Complex64> = cs.iter().map(|&a| a * t).collect();
                (*n, poly(n.unsigned_abs() as usize, &scaled))
            }),
        )
        .unwrap()
    };
    let unscaled = 1.0 - chirka_condition_margin(&build(1.0))[0];
    let target = rng.gen_range(0.1..0.6);
    build((1.0 - target) / unscaled)
}

/// Twenty smooth profiles for the limit-graph consistency check: pure
/// `c r^n` terms, higher-order perturbations, negative modes and flat cutoffs.
pub fn hand_made_profiles() -> Vec<RadialModeSeries> {
    let grid = PolarGrid::chebyshev(32, 64).unwrap();
    let mut out = Vec::new();
    for i in 0..20 {
        let n = 1 + (i % 3);
        let a = c(0.2 + 0.01 * i as f64, 0.05 * (i % 4) as f64 - 0.05);
        let mut modes = vec![(n, poly(n as usize, &[a]))];
        if i % 2 == 1 {
            modes[0] = (n, poly(n as usize, &[a, c(-0.1, 0.07)]));
        }
        if i % 4 == 2 {
            modes.push((-1, poly(1, &[c(0.1, -0.05), c(0.05, 0.0)])));
        }
        if i % 5 == 3 {
            modes.push((0, poly(0, &[c(0.1, 0.1), c(-0.05, 0.0)])));
        }
        if i % 7 == 6 {
            modes.push((
                n + 1,
                Profile::Expr(ProfileExpr::Cutoff {
                    start: 0.3,
                    end: 0.6,
                    scale: c(0.1, 0.0),
                    power: n + 1,
                }),
            ));
        }
        out.push(RadialModeSeries::scalar(grid.clone(), modes).unwrap());
    }
    out
}
