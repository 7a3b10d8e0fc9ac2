//! Maps on the closed unit disc in polar form: grids, samples, radial mode
//! series and the tube neighbourhood of a graph.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::mollify::SmoothProfile;
use crate::smooth::SmoothSwitch;

/// Relative round-trip tolerance of the angular DFT.
pub const TOL_FFT: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Radii in `(0, 1]` (ending at 1) times `n_theta` equispaced angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    radii: Vec<f64>,
    n_theta: usize,
}

impl PolarGrid {
    pub fn new(radii: Vec<f64>, n_theta: usize) -> Result<Self> {
        if !n_theta.is_power_of_two() || n_theta < 4 {
            return Err(LabError::Grid(format!(
                "n_theta = {n_theta} is not a power of two >= 4"
            )));
        }
        if radii.len() < 16 {
            return Err(LabError::Grid(format!("need >= 16 radii, got {}", radii.len())));
        }
        if radii.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(LabError::Grid("radii must be strictly increasing".into()));
        }
        let (first, last) = (radii[0], *radii.last().unwrap());
        if !(first > 0.0 && first <= 0.05) {
            return Err(LabError::Grid(format!("r_min = {first} not in (0, 0.05]")));
        }
        if last != 1.0 {
            return Err(LabError::Grid("radii must end at 1".into()));
        }
        Ok(Self { radii, n_theta })
    }

    /// Chebyshev-clustered radii `(1 - cos(pi i / n)) / 2`, `i = 1..=n`.
    pub fn chebyshev(n_radii: usize, n_theta: usize) -> Result<Self> {
        let radii = (1..=n_radii)
            .map(|i| {
                if i == n_radii {
                    1.0
                } else {
                    0.5 * (1.0 - (PI * i as f64 / n_radii as f64).cos())
                }
            })
            .collect();
        Self::new(radii, n_theta)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn r_min(&self) -> f64 {
        self.radii[0]
    }

    pub fn theta(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.n_theta as f64
    }

    /// Largest mode index the grid tracks with anti-aliasing headroom.
    pub fn max_tracked_mode(&self) -> usize {
        (self.n_theta - 4) / 4
    }

    /// Radii with the origin prepended.
    pub fn nodes_with_origin(&self) -> Vec<f64> {
        std::iter::once(0.0).chain(self.radii.iter().copied()).collect()
    }
}

impl Default for PolarGrid {
    fn default() -> Self {
        Self::chebyshev(64, 256).expect("default grid is valid")
    }
}

/// Closed-form radial profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ProfileExpr {
    /// `sum_k coeffs[k] r^k`.
    Polynomial { coeffs: Vec<Complex64> },
    /// `scale * S(start, end)(r) * r^power`, zero on `[0, start]`.
    Cutoff {
        start: f64,
        end: f64,
        scale: Complex64,
        power: i32,
    },
}

impl ProfileExpr {
    fn validate(&self) -> Result<()> {
        if let ProfileExpr::Cutoff { start, end, power, .. } = self {
            SmoothSwitch::new(*start, *end)?;
            if *power < 0 && *start <= 0.0 {
                return Err(LabError::Parse("cutoff with negative power needs start > 0".into()));
            }
        }
        Ok(())
    }

    /// `A(r) / r^n`.
    pub fn value_over_power(&self, r: f64, n: i32) -> Complex64 {
        match self {
            ProfileExpr::Polynomial { coeffs } => {
                if r == 0.0 {
                    // Limit of A(r)/r^n is only meaningful for n <= 0.
                    return if n <= 0 {
                        coeffs.first().copied().unwrap_or(ZERO) * if n == 0 { 1.0 } else { 0.0 }
                    } else {
                        coeffs.get(n as usize).copied().unwrap_or(ZERO)
                    };
                }
                coeffs.iter().enumerate().map(|(k, &c)| c * r.powi(k as i32 - n)).sum()
            }
            ProfileExpr::Cutoff {
                start,
                end,
                scale,
                power,
            } => {
                if r <= *start {
                    return ZERO;
                }
                let s = SmoothSwitch { a: *start, b: *end }.value(r);
                scale * (s * r.powi(power - n))
            }
        }
    }
}

/// Samples on `[0, r_1, ..., 1]` with shape-preserving cubic interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledProfile {
    pub radii: Vec<f64>,
    pub values: Vec<Complex64>,
}

fn pchip_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    if d0 == 0.0 || d1 == 0.0 || d0.signum() != d1.signum() {
        return 0.0;
    }
    let w1 = 2.0 * h1 + h0;
    let w2 = h1 + 2.0 * h0;
    (w1 + w2) / (w1 / d0 + w2 / d1)
}

impl SampledProfile {
    pub fn new(radii: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(LabError::Parse(
                "sampled profile needs matching radii/values (>= 2)".into(),
            ));
        }
        if radii.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(LabError::Parse("sampled profile radii must increase".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::Parse("sampled profile has non-finite values".into()));
        }
        Ok(Self { radii, values })
    }

    fn slope(&self, i: usize, part: impl Fn(Complex64) -> f64) -> f64 {
        let n = self.radii.len();
        let secant = |k: usize| (part(self.values[k + 1]) - part(self.values[k])) / (self.radii[k + 1] - self.radii[k]);
        if i == 0 {
            secant(0)
        } else if i == n - 1 {
            secant(n - 2)
        } else {
            pchip_slope(
                self.radii[i] - self.radii[i - 1],
                self.radii[i + 1] - self.radii[i],
                secant(i - 1),
                secant(i),
            )
        }
    }

    pub fn value(&self, r: f64) -> Complex64 {
        let n = self.radii.len();
        if r <= self.radii[0] {
            return self.values[0];
        }
        if r >= self.radii[n - 1] {
            return self.values[n - 1];
        }
        let i = self.radii.partition_point(|&x| x <= r) - 1;
        let (x0, x1) = (self.radii[i], self.radii[i + 1]);
        let h = x1 - x0;
        let t = (r - x0) / h;
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        let interp = |part: fn(Complex64) -> f64| {
            h00 * part(self.values[i])
                + h10 * h * self.slope(i, part)
                + h01 * part(self.values[i + 1])
                + h11 * h * self.slope(i + 1, part)
        };
        Complex64::new(interp(|c| c.re), interp(|c| c.im))
    }
}

/// One radial coefficient profile `A_n(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Profile {
    Expr(ProfileExpr),
    Samples(SampledProfile),
    Smooth(SmoothProfile),
}

impl Profile {
    pub fn value(&self, r: f64) -> Complex64 {
        self.value_over_power(r, 0)
    }

    /// `A(r) / r^n`.
    pub fn value_over_power(&self, r: f64, n: i32) -> Complex64 {
        match self {
            Profile::Expr(e) => e.value_over_power(r, n),
            Profile::Samples(s) => {
                let v = s.value(r);
                if n == 0 {
                    v
                } else {
                    v / r.powi(n)
                }
            }
            Profile::Smooth(s) => s.value_over_power(r, n),
        }
    }

    pub fn feature_scale(&self) -> Option<f64> {
        match self {
            Profile::Expr(ProfileExpr::Cutoff { start, .. }) => Some(*start),
            Profile::Smooth(s) => s.feature_scale(),
            _ => None,
        }
    }
}

/// `F_j(r e^{i theta}) = sum_n A_{jn}(r) e^{i n theta}` for `j = 0..m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialModeSeries {
    pub grid: PolarGrid,
    pub components: Vec<BTreeMap<i32, Profile>>,
}

impl RadialModeSeries {
    pub fn new(grid: PolarGrid, components: Vec<BTreeMap<i32, Profile>>) -> Result<Self> {
        if components.is_empty() {
            return Err(LabError::Parse("series needs at least one component".into()));
        }
        for comp in &components {
            for p in comp.values() {
                if let Profile::Expr(e) = p {
                    e.validate()?;
                }
            }
        }
        Ok(Self { grid, components })
    }

    /// Single-component series from `(n, profile)` pairs.
    pub fn scalar(grid: PolarGrid, modes: impl IntoIterator<Item = (i32, Profile)>) -> Result<Self> {
        Self::new(grid, vec![modes.into_iter().collect()])
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn degree_bound(&self) -> usize {
        self.components
            .iter()
            .flat_map(|c| c.keys())
            .map(|n| n.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// `A_{jn}(r)`, with the origin value forced to zero for `n != 0`.
    pub fn coefficient(&self, j: usize, n: i32, r: f64) -> Complex64 {
        if r == 0.0 && n != 0 {
            return ZERO;
        }
        self.components[j].get(&n).map_or(ZERO, |p| p.value(r))
    }

    /// Raw stored origin value, used to measure violations of `A_n(0) = 0`.
    pub fn raw_origin_value(&self, j: usize, n: i32) -> Complex64 {
        self.components[j].get(&n).map_or(ZERO, |p| p.value(0.0))
    }

    /// `A_{jn}(r) / r^n` for `r > 0`.
    pub fn ratio(&self, j: usize, n: i32, r: f64) -> Complex64 {
        self.components[j].get(&n).map_or(ZERO, |p| p.value_over_power(r, n))
    }

    /// `(n, [A_{jn}(r) for r in radii])` per component.
    pub fn tabulate(&self, radii: &[f64]) -> Vec<Vec<(i32, Vec<Complex64>)>> {
        (0..self.m())
            .map(|j| {
                self.components[j]
                    .keys()
                    .map(|&n| (n, radii.iter().map(|&r| self.coefficient(j, n, r)).collect()))
                    .collect()
            })
            .collect()
    }

    /// Sum over modes without the domain check.
    pub fn value_at(&self, r: f64, theta: f64, j: usize) -> Complex64 {
        self.components[j]
            .keys()
            .map(|&n| self.coefficient(j, n, r) * Complex64::from_polar(1.0, n as f64 * theta))
            .sum()
    }

    /// `F_j(z)` for a point of the closed disc.
    pub fn value_at_point(&self, z: Complex64, j: usize) -> Complex64 {
        self.value_at(z.norm(), z.arg(), j)
    }

    pub fn values_at_point(&self, z: Complex64) -> Vec<Complex64> {
        (0..self.m()).map(|j| self.value_at_point(z, j)).collect()
    }

    pub fn feature_scale(&self) -> Option<f64> {
        self.components
            .iter()
            .flat_map(|c| c.values())
            .filter_map(Profile::feature_scale)
            .filter(|s| *s > 0.0)
            .reduce(f64::min)
    }

    /// Sup of `|F|` over grid radii and angles (max over components).
    pub fn sup_modulus(&self) -> f64 {
        let mut sup: f64 = 0.0;
        for &r in self.grid.radii() {
            for k in 0..self.grid.n_theta() {
                let th = self.grid.theta(k);
                for j in 0..self.m() {
                    sup = sup.max(self.value_at(r, th, j).norm());
                }
            }
        }
        sup
    }
}

/// `sum_n A_{jn}(r) e^{i n theta}`.
pub fn evaluate(series: &RadialModeSeries, r: f64, theta: f64, j: usize) -> Result<Complex64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(LabError::Domain(format!("radius {r} outside [0, 1]")));
    }
    if j >= series.m() {
        return Err(LabError::Domain(format!(
            "component {j} out of range (m = {})",
            series.m()
        )));
    }
    Ok(series.value_at(r, theta, j))
}

/// Values on a polar grid, indexed by (radius, angle, component).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscSample {
    pub grid: PolarGrid,
    pub m: usize,
    values: Vec<Complex64>,
}

impl DiscSample {
    pub fn new(grid: PolarGrid, m: usize, values: Vec<Complex64>) -> Result<Self> {
        if m == 0 {
            return Err(LabError::Parse("component count must be >= 1".into()));
        }
        if values.len() != grid.radii().len() * grid.n_theta() * m {
            return Err(LabError::Parse("sample table has the wrong size".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::Parse("sample values must be finite".into()));
        }
        Ok(Self { grid, m, values })
    }

    /// Sample a closure `f(z) -> [F_1(z), ..]` on the grid.
    pub fn from_fn(grid: PolarGrid, m: usize, f: impl Fn(Complex64) -> Vec<Complex64>) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.radii().len() * grid.n_theta() * m);
        for &r in grid.radii() {
            for k in 0..grid.n_theta() {
                let v = f(Complex64::from_polar(r, grid.theta(k)));
                values.extend_from_slice(&v[..m]);
            }
        }
        Self::new(grid, m, values)
    }

    pub fn get(&self, i: usize, k: usize, j: usize) -> Complex64 {
        self.values[(i * self.grid.n_theta() + k) * self.m + j]
    }

    pub fn slice(&self, i: usize, j: usize) -> Vec<Complex64> {
        (0..self.grid.n_theta()).map(|k| self.get(i, k, j)).collect()
    }
}

/// Graph tube of radius `graph_radius` around the centre map plus the
/// collar `{1 - collar_width < |z| < 1 + collar_width} x D^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeNeighborhood {
    pub graph_radius: f64,
    pub collar_width: f64,
    pub center: RadialModeSeries,
}

impl TubeNeighborhood {
    pub fn new(graph_radius: f64, collar_width: f64, center: RadialModeSeries) -> Result<Self> {
        if !(graph_radius > 0.0) || collar_width < 0.0 {
            return Err(LabError::Domain("tube radii must be positive".into()));
        }
        Ok(Self {
            graph_radius,
            collar_width,
            center,
        })
    }

    /// Fiber distance minus `graph_radius`; negative inside. `None` off the disc.
    pub fn graph_signed_distance(&self, z: Complex64, w: &[Complex64]) -> Option<f64> {
        if z.norm() > 1.0 {
            return None;
        }
        let d = w
            .iter()
            .enumerate()
            .map(|(j, &wj)| (wj - self.center.value_at_point(z, j)).norm())
            .fold(0.0, f64::max);
        Some(d - self.graph_radius)
    }

    /// Signed distance to the collar; negative inside.
    pub fn collar_signed_distance(&self, z: Complex64, w: &[Complex64]) -> f64 {
        let radial = (z.norm() - 1.0).abs() - self.collar_width;
        let fiber = w.iter().map(|x| x.norm()).fold(0.0, f64::max) - 1.0;
        radial.max(fiber)
    }

    pub fn signed_distance(&self, z: Complex64, w: &[Complex64]) -> f64 {
        let c = self.collar_signed_distance(z, w);
        match self.graph_signed_distance(z, w) {
            Some(g) => g.min(c),
            None => c,
        }
    }

    pub fn contains(&self, z: Complex64, w: &[Complex64]) -> bool {
        self.signed_distance(z, w) < 0.0
    }

    /// Largest grid radius `rho` with `sup_{|z| <= rho} |F(z) - F(0)| <= graph_radius / 2`.
    pub fn delta0(&self) -> f64 {
        let grid = &self.center.grid;
        let origin: Vec<Complex64> = (0..self.center.m())
            .map(|j| self.center.value_at(0.0, 0.0, j))
            .collect();
        let mut best = 0.0;
        for &r in grid.radii() {
            let dev = (0..grid.n_theta())
                .flat_map(|k| {
                    let th = grid.theta(k);
                    (0..self.center.m()).map(move |j| (j, th))
                })
                .map(|(j, th)| (self.center.value_at(r, th, j) - origin[j]).norm())
                .fold(0.0, f64::max);
            if dev > self.graph_radius / 2.0 {
                break;
            }
            best = r;
        }
        best
    }
}

/// `tube_contains`.
pub fn tube_contains(tube: &TubeNeighborhood, z: Complex64, w: &[Complex64]) -> bool {
    tube.contains(z, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn poly(coeffs: &[Complex64]) -> Profile {
        Profile::Expr(ProfileExpr::Polynomial {
            coeffs: coeffs.to_vec(),
        })
    }

    #[test]
    fn grid_validation() {
        assert!(PolarGrid::chebyshev(64, 256).is_ok());
        assert!(matches!(PolarGrid::chebyshev(64, 100), Err(LabError::Grid(_))));
        assert!(matches!(PolarGrid::chebyshev(8, 256), Err(LabError::Grid(_))));
        let g = PolarGrid::default();
        assert!(g.r_min() > 0.0 && g.r_min() <= 0.05);
        assert_eq!(*g.radii().last().unwrap(), 1.0);
    }

    #[test]
    fn evaluate_constant_and_linear() {
        let g = PolarGrid::default();
        let s = RadialModeSeries::scalar(g.clone(), [(0, poly(&[c(0.3, 0.0)]))]).unwrap();
        for (r, th) in [(0.0, 0.0), (0.4, 1.0), (1.0, 3.0)] {
            assert!((evaluate(&s, r, th, 0).unwrap() - c(0.3, 0.0)).norm() < 1e-15);
        }
        let s = RadialModeSeries::scalar(g, [(1, poly(&[c(0.0, 0.0), c(0.5, 0.0)]))]).unwrap();
        let v = evaluate(&s, 1.0, PI / 2.0, 0).unwrap();
        assert!((v - c(0.0, 0.5)).norm() < 1e-15);
        assert!(matches!(evaluate(&s, 1.5, 0.0, 0), Err(LabError::Domain(_))));
        assert!(matches!(evaluate(&s, -0.1, 0.0, 0), Err(LabError::Domain(_))));
    }

    #[test]
    fn evaluate_cutoff_plateau() {
        let big_n = 3.0;
        let plateau = (big_n + 0.5) / (big_n + 1.0);
        let expr = ProfileExpr::Cutoff {
            start: 1.0 / (4.0 * (big_n + 1.0)),
            end: 1.0 / (big_n + 1.0),
            scale: c(plateau, 0.0),
            power: -1,
        };
        let s = RadialModeSeries::scalar(PolarGrid::default(), [(-1, Profile::Expr(expr))]).unwrap();
        for r in [0.3, 0.5, 0.9, 1.0] {
            let v = evaluate(&s, r, 0.0, 0).unwrap();
            assert!((v - c(plateau / r, 0.0)).norm() < 1e-14);
        }
        assert_eq!(evaluate(&s, 0.0, 0.0, 0).unwrap(), ZERO);
    }

    #[test]
    fn pchip_does_not_overshoot() {
        let p = SampledProfile::new(
            vec![0.0, 0.1, 0.2, 0.3, 1.0],
            vec![c(0.0, 0.0), c(0.0, 1.0), c(1.0, 1.0), c(1.0, 1.0), c(1.0, 0.0)],
        )
        .unwrap();
        for i in 0..=1000 {
            let v = p.value(i as f64 / 1000.0);
            assert!(v.re >= -1e-15 && v.re <= 1.0 + 1e-15);
            assert!(v.im >= -1e-15 && v.im <= 1.0 + 1e-15);
        }
        assert_eq!(p.value(0.2), c(1.0, 1.0));
    }

    #[test]
    fn origin_value_only_from_zero_mode() {
        let s = RadialModeSeries::scalar(
            PolarGrid::default(),
            [
                (0, poly(&[c(0.2, 0.1)])),
                (2, poly(&[c(0.0, 0.0), c(0.0, 0.0), c(0.4, 0.0)])),
            ],
        )
        .unwrap();
        assert_eq!(s.value_at(0.0, 1.3, 0), c(0.2, 0.1));
    }

    fn linear_tube(rg: f64, rb: f64) -> TubeNeighborhood {
        let s = RadialModeSeries::scalar(PolarGrid::default(), [(1, poly(&[ZERO, c(0.5, 0.0)]))]).unwrap();
        TubeNeighborhood::new(rg, rb, s).unwrap()
    }

    #[test]
    fn tube_membership_examples() {
        let t = linear_tube(0.2, 0.1);
        let z = c(0.3, 0.4);
        assert!(tube_contains(&t, z, &[z * 0.5]));
        assert!(tube_contains(&t, c(1.0, 0.0), &[ZERO]));
        assert!(!tube_contains(&t, ZERO, &[c(0.4, 0.0)]));
        assert!(t.delta0() > 0.0);
    }

    #[test]
    fn tube_membership_monotone() {
        let pts = [
            (c(0.2, 0.0), c(0.25, 0.0)),
            (c(0.95, 0.0), c(0.9, 0.0)),
            (c(0.0, 0.5), c(0.0, 0.1)),
            (c(1.05, 0.0), c(0.3, 0.3)),
        ];
        for &(z, w) in &pts {
            let mut prev = false;
            for k in 1..20 {
                let t = linear_tube(0.02 * k as f64, 0.01 * k as f64);
                let now = t.contains(z, &[w]);
                assert!(!prev || now);
                prev = now;
            }
        }
    }
}
