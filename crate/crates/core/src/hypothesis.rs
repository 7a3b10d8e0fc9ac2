//! Which extension theorem a configuration satisfies, with margins.

use serde::{Deserialize, Serialize};

use crate::polar::{RadialModeSeries, TOL_FFT};

/// Tolerance on the origin values `A_n(0)`, `n != 0`.
pub const TOL_FACT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "Thm1.1")]
    Thm11,
    #[serde(rename = "Thm1.2")]
    Thm12,
    #[serde(rename = "Thm1.3")]
    Thm13,
    #[serde(rename = "none")]
    None,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Thm11 => "Thm1.1",
            Verdict::Thm12 => "Thm1.2",
            Verdict::Thm13 => "Thm1.3",
            Verdict::None => "none",
        }
    }

    pub fn holds(self) -> bool {
        self != Verdict::None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub boundary_sup: Vec<f64>,
    pub condition_margin: Vec<f64>,
    /// Radius where each margin is attained.
    pub margin_radius: Vec<f64>,
    pub has_negative_modes: Vec<bool>,
    pub fact_violation: f64,
    pub verdict: Verdict,
    pub smallest_radius_flag: bool,
}

/// `max_theta |F_j(e^{i theta})|` per component.
pub fn boundary_sup(series: &RadialModeSeries) -> Vec<f64> {
    let g = &series.grid;
    (0..series.m())
        .map(|j| {
            (0..g.n_theta())
                .map(|k| series.value_at(1.0, g.theta(k), j).norm())
                .fold(0.0, f64::max)
        })
        .collect()
}

/// `sum_n |A_{jn}(r)| / r^n`.
pub fn mode_sum(series: &RadialModeSeries, j: usize, r: f64) -> f64 {
    series.components[j].keys().map(|&n| series.ratio(j, n, r).norm()).sum()
}

/// `(min_r 1 - sum_n |A_{jn}(r)|/r^n, argmin)` over the grid radii.
pub fn chirka_margin_with_radius(series: &RadialModeSeries, j: usize) -> (f64, f64) {
    series
        .grid
        .radii()
        .iter()
        .map(|&r| (1.0 - mode_sum(series, j, r), r))
        .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a })
}

pub fn chirka_condition_margin(series: &RadialModeSeries) -> Vec<f64> {
    (0..series.m())
        .map(|j| chirka_margin_with_radius(series, j).0)
        .collect()
}

pub fn classify(series: &RadialModeSeries) -> HypothesisReport {
    let m = series.m();
    let boundary_sup = boundary_sup(series);
    let (condition_margin, margin_radius): (Vec<f64>, Vec<f64>) =
        (0..m).map(|j| chirka_margin_with_radius(series, j)).unzip();
    let has_negative_modes: Vec<bool> = series.components.iter().map(|c| c.keys().any(|&n| n < 0)).collect();
    let fact_violation = (0..m)
        .flat_map(|j| {
            series.components[j]
                .keys()
                .filter(|&&n| n != 0)
                .map(move |&n| series.raw_origin_value(j, n).norm())
        })
        .fold(0.0, f64::max);
    let r_min = series.grid.r_min();
    let smallest_radius_flag = (0..m).any(|j| (1.0 - mode_sum(series, j, r_min)).abs() <= 10.0 * TOL_FFT);

    let bsup_ok = boundary_sup.iter().all(|&b| b < 1.0);
    let margin_ok = condition_margin.iter().all(|&c| c > 0.0);
    let verdict = if fact_violation > TOL_FACT || !bsup_ok {
        Verdict::None
    } else if m == 1 && !has_negative_modes[0] {
        Verdict::Thm12
    } else if margin_ok {
        if m == 1 {
            Verdict::Thm11
        } else {
            Verdict::Thm13
        }
    } else {
        Verdict::None
    };

    HypothesisReport {
        boundary_sup,
        condition_margin,
        margin_radius,
        has_negative_modes,
        fact_violation,
        verdict,
        smallest_radius_flag,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar::{PolarGrid, Profile, ProfileExpr};
    use num_complex::Complex64;

    const ZERO: Complex64 = Complex64::new(0.0, 0.0);

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn poly(coeffs: &[Complex64]) -> Profile {
        Profile::Expr(ProfileExpr::Polynomial {
            coeffs: coeffs.to_vec(),
        })
    }

    fn cutoff(big_n: f64) -> RadialModeSeries {
        let expr = ProfileExpr::Cutoff {
            start: 1.0 / (4.0 * (big_n + 1.0)),
            end: 1.0 / (big_n + 1.0),
            scale: c((big_n + 0.5) / (big_n + 1.0), 0.0),
            power: -1,
        };
        RadialModeSeries::scalar(PolarGrid::default(), [(-1, Profile::Expr(expr))]).unwrap()
    }

    #[test]
    fn linear_map() {
        let s = RadialModeSeries::scalar(PolarGrid::default(), [(1, poly(&[ZERO, c(0.5, 0.0)]))]).unwrap();
        let rep = classify(&s);
        assert!((rep.boundary_sup[0] - 0.5).abs() < 1e-15);
        assert!((rep.condition_margin[0] - 0.5).abs() < 1e-15);
        assert_eq!(rep.verdict, Verdict::Thm12);
        assert_eq!(rep.fact_violation, 0.0);
    }

    #[test]
    fn cutoff_example() {
        for big_n in [1.0, 3.0, 10.0] {
            let rep = classify(&cutoff(big_n));
            let plateau = (big_n + 0.5) / (big_n + 1.0);
            assert!((rep.boundary_sup[0] - plateau).abs() < 1e-14);
            assert!((rep.condition_margin[0] - 1.0 / (2.0 * (big_n + 1.0))).abs() < 1e-14);
            assert_eq!(rep.verdict, Verdict::Thm11);
        }
    }

    #[test]
    fn wermer_boundary_vanishes() {
        let s = RadialModeSeries::scalar(
            PolarGrid::default(),
            [(-1, poly(&[ZERO, c(1.0, 1.0), ZERO, c(0.0, -1.0), ZERO, c(-1.0, 0.0)]))],
        )
        .unwrap();
        assert!(boundary_sup(&s)[0] < 1e-15);
    }

    #[test]
    fn scaled_wermer_fails() {
        let scale = 1.0 / 0.0061;
        let coeffs: Vec<Complex64> = [ZERO, c(1.0, 1.0), ZERO, c(0.0, -1.0), ZERO, c(-1.0, 0.0)]
            .iter()
            .map(|z| z * scale)
            .collect();
        let s = RadialModeSeries::scalar(PolarGrid::default(), [(-1, poly(&coeffs))]).unwrap();
        let rep = classify(&s);
        assert!(rep.condition_margin[0] < -70.0);
        assert_eq!(rep.verdict, Verdict::None);
    }

    #[test]
    fn constant_mode_only_margin() {
        let s = RadialModeSeries::scalar(PolarGrid::default(), [(0, poly(&[c(0.1, 0.0), c(0.3, 0.0)]))]).unwrap();
        let rep = classify(&s);
        assert!((rep.condition_margin[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn fact_violation_forces_none() {
        let s = RadialModeSeries::scalar(PolarGrid::default(), [(1, poly(&[c(0.1, 0.0), c(0.2, 0.0)]))]).unwrap();
        let rep = classify(&s);
        assert!((rep.fact_violation - 0.1).abs() < 1e-15);
        assert_eq!(rep.verdict, Verdict::None);
    }

    #[test]
    fn two_components() {
        let s = RadialModeSeries::new(
            PolarGrid::default(),
            vec![
                [(1, poly(&[ZERO, c(0.3, 0.0)]))].into_iter().collect(),
                [(-1, poly(&[ZERO, c(0.2, 0.0)]))].into_iter().collect(),
            ],
        )
        .unwrap();
        assert_eq!(classify(&s).verdict, Verdict::Thm13);
    }
}
