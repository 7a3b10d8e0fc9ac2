mod common;

use common::{c, poly, random_admissible};
use hartogs_lab::approximant::{build_smooth_approximant, ModeSign};
use hartogs_lab::extension::{builtin, cauchy_slice_extend, default_rho};
use hartogs_lab::fourier::{fejer_sup_error, fejer_uniform_degree, modes_from_samples, samples_from_modes};
use hartogs_lab::hypothesis::chirka_condition_margin;
use hartogs_lab::polar::{evaluate, tube_contains, PolarGrid, RadialModeSeries, TubeNeighborhood};
use hartogs_lab::pseudoconvexity::{
    bs_pseudoconvexity_slack, bs_slack_constant_u, wermer_delta_star_bound_with, WirtingerField,
};
use hartogs_lab::report::{format_f64, to_json_string, RunReport};
use hartogs_lab::smooth::smooth_transition;
use hartogs_lab::worked::{cutoff_example, rosay_example, wermer_example};
use num_complex::Complex64;
use proptest::prelude::*;

fn small_grid() -> PolarGrid {
    PolarGrid::chebyshev(24, 64).unwrap()
}

fn scaled(f: &RadialModeSeries, t: f64, grid: PolarGrid) -> RadialModeSeries {
    let comps = f.components[0].keys().map(|&n| {
        let coeffs: Vec<Complex64> = match &f.components[0][&n] {
            hartogs_lab::polar::Profile::Expr(hartogs_lab::polar::ProfileExpr::Polynomial { coeffs }) => {
                coeffs.iter().map(|&a| a * t).collect()
            }
            _ => unreachable!("random inputs are polynomial"),
        };
        (
            n,
            hartogs_lab::polar::Profile::Expr(hartogs_lab::polar::ProfileExpr::Polynomial { coeffs }),
        )
    });
    RadialModeSeries::scalar(grid, comps).unwrap()
}

fn seed() -> impl Strategy<Value = u64> {
    0u64..10_000
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fft_round_trip_recovers_profiles(s in seed()) {
        let f = scaled(&random_admissible(s), 1.0, small_grid());
        let back = modes_from_samples(&samples_from_modes(&f, &f.grid), 8).unwrap();
        for &r in f.grid.radii() {
            for n in -8..=8 {
                let d = (back.coefficient(0, n, r) - f.coefficient(0, n, r)).norm();
                prop_assert!(d < 1e-12, "mode {} at r = {}: {}", n, r, d);
            }
        }
    }

    #[test]
    fn sampled_modes_vanish_at_origin(s in seed()) {
        let f = scaled(&random_admissible(s), 1.0, small_grid());
        let back = modes_from_samples(&samples_from_modes(&f, &f.grid), 8).unwrap();
        for &n in back.components[0].keys().filter(|&&n| n != 0) {
            prop_assert_eq!(back.raw_origin_value(0, n), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn evaluate_at_origin_ignores_angle(s in seed(), theta in 0.0..6.3f64) {
        let f = scaled(&random_admissible(s), 1.0, small_grid());
        let v = evaluate(&f, 0.0, theta, 0).unwrap();
        prop_assert!((v - f.coefficient(0, 0, 0.0)).norm() < 1e-15);
        prop_assert!(evaluate(&f, 1.0 + 1e-9, theta, 0).is_err());
    }

    #[test]
    fn tube_membership_is_monotone(
        s in seed(),
        rg in 0.01..0.5f64,
        rb in 0.01..0.5f64,
        grow_g in 0.0..0.3f64,
        grow_b in 0.0..0.3f64,
        z in (0.0..1.4f64, 0.0..6.3f64),
        w in (-1.5..1.5f64, -1.5..1.5f64),
    ) {
        let f = scaled(&random_admissible(s), 1.0, small_grid());
        let small = TubeNeighborhood::new(rg, rb, f.clone()).unwrap();
        let big = TubeNeighborhood::new(rg + grow_g, rb + grow_b, f).unwrap();
        let z = Complex64::from_polar(z.0, z.1);
        let w = [c(w.0, w.1)];
        if tube_contains(&small, z, &w) {
            prop_assert!(tube_contains(&big, z, &w));
        }
    }

    #[test]
    fn cesaro_profiles_are_damped(s in seed(), target in 0.02..0.2f64) {
        let f = random_admissible(s);
        let fej = fejer_uniform_degree(&f, target).unwrap();
        prop_assert!(fej.achieved_sup_error < target);
        for (&n, a) in &fej.cesaro_profiles[0] {
            for (&r, v) in fej.radii.iter().zip(a) {
                prop_assert!(v.norm() <= f.coefficient(0, n, r).norm() + 1e-15);
            }
        }
    }

    #[test]
    fn fejer_error_decreases_past_the_degree(s in seed()) {
        let f = scaled(&random_admissible(s), 1.0, small_grid());
        let start = f.degree_bound();
        let errs: Vec<f64> = (start..start + 6).map(|d| fejer_sup_error(&f, d)).collect();
        for pair in errs.windows(2) {
            prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "{:?}", errs);
        }
    }

    #[test]
    fn margin_scales_affinely(s in seed(), t in 0.1..3.0f64) {
        let f = scaled(&random_admissible(s), 1.0, small_grid());
        let m1 = chirka_condition_margin(&f)[0];
        let mt = chirka_condition_margin(&scaled(&f, t, small_grid()))[0];
        prop_assert!((mt - (1.0 - t * (1.0 - m1))).abs() < 1e-12);
    }

    #[test]
    fn constant_mode_margin_is_one_minus_modulus(a in (-0.9..0.9f64, -0.9..0.9f64), b in (-0.5..0.5f64, -0.5..0.5f64)) {
        let f = RadialModeSeries::scalar(small_grid(), [(0, poly(0, &[c(a.0, a.1), c(b.0, b.1)]))]).unwrap();
        let want = f.grid.radii().iter().map(|&r| 1.0 - f.coefficient(0, 0, r).norm()).fold(f64::INFINITY, f64::min);
        prop_assert!((chirka_condition_margin(&f)[0] - want).abs() < 1e-15);
    }

    #[test]
    fn nonneg_approximant_has_no_negative_modes(a in (-0.3..0.3f64, -0.3..0.3f64), b in (-0.3..0.3f64, -0.3..0.3f64)) {
        let f = RadialModeSeries::scalar(
            small_grid(),
            [(1, poly(1, &[c(a.0, a.1)])), (2, poly(2, &[c(b.0, b.1)]))],
        ).unwrap();
        let g = build_smooth_approximant(&f, 0.1, Some(ModeSign::Nonneg)).unwrap();
        prop_assert!(g.series.components[0].keys().all(|&n| n >= 0));
    }

    #[test]
    fn constant_u_slack_matches_general_formula(
        coeffs in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 6),
        u0 in -1.0..1.0f64,
    ) {
        let g = |z: Complex64| {
            let zb = z.conj();
            let terms = [z, zb, z * zb, zb * zb, z * z * zb, zb * zb * zb];
            terms.iter().zip(&coeffs).map(|(t, &(re, im))| t * c(re, im)).sum::<Complex64>()
        };
        let field = WirtingerField::sample(&PolarGrid::chebyshev(16, 16).unwrap(), g, |_| u0);
        let general = bs_pseudoconvexity_slack(&field);
        let special = bs_slack_constant_u(&field, u0);
        prop_assert!((general - special).abs() < 1e-6, "{} vs {}", general, special);
    }

    #[test]
    fn cauchy_extension_converges_and_ignores_z_for_w_poles(
        zr in 0.0..0.8f64, zt in 0.0..6.3f64, wr in 0.0..1.0f64, wt in 0.0..6.3f64,
    ) {
        let rho = default_rho(0.1);
        let z = Complex64::from_polar(zr * rho, zt);
        let w = [Complex64::from_polar(wr, wt)];
        let f = builtin("inv3").unwrap();
        let want = f.extension(z, &w).unwrap();
        let e128 = (cauchy_slice_extend(&f, rho, z, &w, 128).unwrap() - want).norm();
        let e512 = (cauchy_slice_extend(&f, rho, z, &w, 512).unwrap() - want).norm();
        prop_assert!(e512 <= e128 || e512 < 1e-14);
        let pole = builtin("w-pole").unwrap();
        let at_z = cauchy_slice_extend(&pole, rho, z, &w, 512).unwrap();
        let at_0 = cauchy_slice_extend(&pole, rho, c(0.0, 0.0), &w, 512).unwrap();
        prop_assert!((at_z - at_0).norm() < 1e-12);
    }

    #[test]
    fn switch_is_monotone_between_zero_and_one(a in 0.0..0.5f64, width in 0.01..0.5f64, x in 0.0..1.0f64, dx in 0.0..0.1f64) {
        let s = smooth_transition(a, a + width).unwrap();
        let (v, v2) = (s.value(x), s.value(x + dx));
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!(v2 >= v);
    }

    #[test]
    fn float_format_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        let text = format_f64(x);
        let back: f64 = text.parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
        let json = to_json_string(&x).unwrap();
        let parsed: f64 = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(parsed.to_bits(), x.to_bits());
    }

    #[test]
    fn report_round_trips(command in "[a-z]{1,10}", bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
        let rep = RunReport::new(&command).with_input(&bytes);
        let back = RunReport::from_json(&rep.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, rep);
    }
}

#[test]
fn delta_star_is_stable_under_denser_scan() {
    let a = wermer_delta_star_bound_with(1000);
    let b = wermer_delta_star_bound_with(2000);
    assert!((a.minimum - b.minimum).abs() < 1e-9);
    assert!((a.argmin - b.argmin).abs() < 1e-4);
}

#[test]
fn worked_examples_are_deterministic() {
    let a = to_json_string(&wermer_example().unwrap()).unwrap();
    let b = to_json_string(&wermer_example().unwrap()).unwrap();
    assert_eq!(a, b);
    let a = to_json_string(&rosay_example(0.1, 0.05, None, None).unwrap()).unwrap();
    let b = to_json_string(&rosay_example(0.1, 0.05, None, None).unwrap()).unwrap();
    assert_eq!(a, b);
    let a = to_json_string(&cutoff_example(1).unwrap()).unwrap();
    let b = to_json_string(&cutoff_example(1).unwrap()).unwrap();
    assert_eq!(a, b);
}
