//! Wirtinger derivatives by finite differences, total reality of graphs and
//! the pseudoconvexity inequality for surfaces `|w - G(z)| = e^{-u(z)}`.

use num_complex::Complex64;
use serde::Serialize;

use crate::optimize::{scan_then_golden, scan_then_golden_max, Minimum};
use crate::polar::PolarGrid;

/// Step for first derivatives.
pub const H_FIRST: f64 = 1e-4;
/// Step for the Laplacian (second derivatives).
pub const H_SECOND: f64 = 1e-3;
/// Published bounds bracketing the Wermer constant.
pub const DELTA_STAR_LOWER: f64 = 0.0061;
pub const DELTA_STAR_UPPER: f64 = 0.0063;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn d1<T>(f: impl Fn(f64) -> T, h: f64) -> T
where
    T: std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    (f(-2.0 * h) + f(-h) * -8.0 + f(h) * 8.0 - f(2.0 * h)) * (1.0 / (12.0 * h))
}

fn d2<T>(f: impl Fn(f64) -> T, h: f64) -> T
where
    T: std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    (f(-2.0 * h) * -1.0 + f(-h) * 16.0 + f(0.0) * -30.0 + f(h) * 16.0 - f(2.0 * h)) * (1.0 / (12.0 * h * h))
}

/// `(G_z, G_zbar, G_zzbar)` at `z`.
pub fn wirtinger(g: impl Fn(Complex64) -> Complex64, z: Complex64) -> (Complex64, Complex64, Complex64) {
    let gx = d1(|t| g(z + t), H_FIRST);
    let gy = d1(|t| g(z + I * t), H_FIRST);
    let lap = d2(|t| g(z + t), H_SECOND) + d2(|t| g(z + I * t), H_SECOND);
    ((gx - I * gy) * 0.5, (gx + I * gy) * 0.5, lap * 0.25)
}

/// `(u_z, u_zzbar)` for real `u`.
pub fn real_wirtinger(u: impl Fn(Complex64) -> f64, z: Complex64) -> (Complex64, f64) {
    let ux = d1(|t| u(z + t), H_FIRST);
    let uy = d1(|t| u(z + I * t), H_FIRST);
    let lap = d2(|t| u(z + t), H_SECOND) + d2(|t| u(z + I * t), H_SECOND);
    (Complex64::new(ux, -uy) * 0.5, lap * 0.25)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WirtingerField {
    pub points: Vec<Complex64>,
    pub g_z: Vec<Complex64>,
    pub g_zbar: Vec<Complex64>,
    pub g_zzbar: Vec<Complex64>,
    pub u: Vec<f64>,
    pub u_z: Vec<Complex64>,
    pub u_zzbar: Vec<f64>,
}

impl WirtingerField {
    /// Sample on the grid nodes and the origin.
    pub fn sample(grid: &PolarGrid, g: impl Fn(Complex64) -> Complex64, u: impl Fn(Complex64) -> f64) -> Self {
        let mut points = vec![Complex64::new(0.0, 0.0)];
        for &r in grid.radii() {
            for k in 0..grid.n_theta() {
                points.push(Complex64::from_polar(r, grid.theta(k)));
            }
        }
        let mut f = WirtingerField {
            points: Vec::new(),
            g_z: Vec::new(),
            g_zbar: Vec::new(),
            g_zzbar: Vec::new(),
            u: Vec::new(),
            u_z: Vec::new(),
            u_zzbar: Vec::new(),
        };
        for &z in &points {
            let (gz, gzb, gzzb) = wirtinger(&g, z);
            let (uz, uzzb) = real_wirtinger(&u, z);
            f.g_z.push(gz);
            f.g_zbar.push(gzb);
            f.g_zzbar.push(gzzb);
            f.u.push(u(z));
            f.u_z.push(uz);
            f.u_zzbar.push(uzzb);
        }
        f.points = points;
        f
    }
}

/// `min |G_zbar|` over the sampled points.
pub fn total_reality_margin(field: &WirtingerField) -> f64 {
    field.g_zbar.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
}

/// `e^{2u}|G_zbar|^2 - e^u |G_zzbar + 2 u_z G_zbar| + u_zzbar` at point `i`.
pub fn bs_slack_at(field: &WirtingerField, i: usize) -> f64 {
    let u = field.u[i];
    (2.0 * u).exp() * field.g_zbar[i].norm_sqr()
        - u.exp() * (field.g_zzbar[i] + field.u_z[i] * field.g_zbar[i] * 2.0).norm()
        + field.u_zzbar[i]
}

/// Minimum slack of the pseudoconvexity inequality; nonnegative means pseudoconvex on the grid.
pub fn bs_pseudoconvexity_slack(field: &WirtingerField) -> f64 {
    (0..field.points.len())
        .map(|i| bs_slack_at(field, i))
        .fold(f64::INFINITY, f64::min)
}

/// The same slack for constant `u = u0`: `e^{2u0}|G_zbar|^2 - e^{u0}|G_zzbar|`.
pub fn bs_slack_constant_u(field: &WirtingerField, u0: f64) -> f64 {
    field
        .g_zbar
        .iter()
        .zip(&field.g_zzbar)
        .map(|(a, b)| (2.0 * u0).exp() * a.norm_sqr() - u0.exp() * b.norm())
        .fold(f64::INFINITY, f64::min)
}

/// `g(z) = zbar (1 - |z|^4) + i zbar (1 - |z|^2)`.
pub fn wermer_g(z: Complex64) -> Complex64 {
    let r2 = z.norm_sqr();
    z.conj() * Complex64::new(1.0 - r2 * r2, 1.0 - r2)
}

/// `((1 - 3r^4)^2 + (1 - 2r^2)^2) / (r sqrt(36 r^4 + 4))`.
pub fn wermer_objective(r: f64) -> f64 {
    let r2 = r * r;
    ((1.0 - 3.0 * r2 * r2).powi(2) + (1.0 - 2.0 * r2).powi(2)) / (r * (36.0 * r2 * r2 + 4.0).sqrt())
}

/// `r^2 sqrt((1 - r^4)^2 + (1 - r^2)^2)`, the profile `r |A_{-1}(r)|` of `g`.
pub fn wermer_mode_profile(r: f64) -> f64 {
    let r2 = r * r;
    r2 * ((1.0 - r2 * r2).powi(2) + (1.0 - r2).powi(2)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaStarBound {
    pub minimum: f64,
    pub argmin: f64,
    pub lower_bound: f64,
    pub upper_edge: f64,
    pub evaluations: usize,
}

/// Minimum of `wermer_objective` on `[1e-3, 1]` from a scan of `scan` points plus golden-section.
pub fn wermer_delta_star_bound_with(scan: usize) -> DeltaStarBound {
    let Minimum { x, value, evaluations } = scan_then_golden(wermer_objective, 1e-3, 1.0, scan);
    DeltaStarBound {
        minimum: value,
        argmin: x,
        lower_bound: DELTA_STAR_LOWER,
        upper_edge: DELTA_STAR_UPPER,
        evaluations,
    }
}

pub fn wermer_delta_star_bound() -> DeltaStarBound {
    wermer_delta_star_bound_with(1000)
}

/// `max_r r^2 sqrt((1-r^4)^2 + (1-r^2)^2)` and its argmax.
pub fn wermer_mode_max() -> Minimum {
    scan_then_golden_max(wermer_mode_profile, 0.0, 1.0, 1000)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn wermer_total_reality_matches_closed_form() {
        let grid = PolarGrid::chebyshev(32, 64).unwrap();
        let field = WirtingerField::sample(&grid, wermer_g, |_| 0.0);
        for (z, gzb) in field.points.iter().zip(&field.g_zbar) {
            let r2 = z.norm_sqr();
            let want = c(1.0 - 3.0 * r2 * r2, 1.0 - 2.0 * r2);
            assert!((gzb - want).norm() < 1e-6);
        }
        // Closed-form minimum of |g_zbar| over a dense radius scan.
        let dense = (0..=100_000)
            .map(|i| {
                let r2 = (i as f64 / 100_000.0).powi(2);
                ((1.0 - 3.0 * r2 * r2).powi(2) + (1.0 - 2.0 * r2).powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        let margin = total_reality_margin(&field);
        assert!(margin > 0.0);
        assert!(margin >= dense - 1e-6);
    }

    #[test]
    fn trivial_margins() {
        let grid = PolarGrid::chebyshev(16, 16).unwrap();
        let f = WirtingerField::sample(&grid, |z| z.conj(), |_| 0.0);
        assert!((total_reality_margin(&f) - 1.0).abs() < 1e-9);
        assert!((bs_pseudoconvexity_slack(&f) - 1.0).abs() < 1e-8);
        let f = WirtingerField::sample(&grid, |z| z * z, |_| 0.0);
        assert!(total_reality_margin(&f) < 1e-9);
        let f = WirtingerField::sample(&grid, |_| c(0.0, 0.0), |_| 0.0);
        assert!(bs_pseudoconvexity_slack(&f).abs() < 1e-12);
    }

    #[test]
    fn wermer_second_derivative() {
        for &(x, y) in &[(0.3, 0.1), (0.7, -0.2), (0.0, 0.9)] {
            let z = c(x, y);
            let (_, _, gzzb) = wirtinger(wermer_g, z);
            let r = z.norm();
            assert!((gzzb.norm() - r * (36.0 * r.powi(4) + 4.0).sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_u_paths_agree() {
        let grid = PolarGrid::chebyshev(16, 32).unwrap();
        let u0 = -(0.005f64).ln();
        let f = WirtingerField::sample(&grid, wermer_g, |_| u0);
        let a = bs_pseudoconvexity_slack(&f);
        let b = bs_slack_constant_u(&f, u0);
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn wermer_slack_sign_follows_delta_star() {
        let grid = PolarGrid::chebyshev(64, 64).unwrap();
        let bound = wermer_delta_star_bound();
        for (delta, nonneg) in [(0.005f64, true), (0.02, false)] {
            let f = WirtingerField::sample(&grid, wermer_g, |_| -delta.ln());
            assert_eq!(bs_pseudoconvexity_slack(&f) >= 0.0, nonneg);
            assert_eq!(delta <= bound.minimum, nonneg);
        }
    }

    #[test]
    fn delta_star_values() {
        assert!((wermer_objective(1.0) - 5.0 / 40f64.sqrt()).abs() < 1e-15);
        let b = wermer_delta_star_bound();
        assert!(b.minimum > DELTA_STAR_LOWER && b.minimum < DELTA_STAR_UPPER);
        assert!(b.argmin > 0.70 && b.argmin < 0.78);
        let b2 = wermer_delta_star_bound_with(2000);
        assert!((b.minimum - b2.minimum).abs() < 1e-9);
        let m = wermer_mode_max();
        assert!((m.value - 0.456).abs() < 1e-3);
    }
}
