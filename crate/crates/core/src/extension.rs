//! Cauchy-slice extension on the classical Hartogs figure.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::families::LimitGraph;
use crate::polar::TubeNeighborhood;

pub const TOL_EXT: f64 = 1e-8;
pub const MIN_QUAD_NODES: usize = 64;

type Eval = Arc<dyn Fn(Complex64, &[Complex64]) -> Complex64 + Send + Sync>;
type Regular = Arc<dyn Fn(&[Complex64], f64) -> bool + Send + Sync>;

/// A function on the figure together with its known continuation, if any.
#[derive(Clone)]
pub struct ReferenceFunction {
    pub name: String,
    pub m: usize,
    pub singularity: String,
    eval: Eval,
    extension: Option<Eval>,
    regular_in_z: Regular,
}

impl fmt::Debug for ReferenceFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReferenceFunction")
            .field("name", &self.name)
            .field("m", &self.m)
            .field("singularity", &self.singularity)
            .field("has_extension", &self.extension.is_some())
            .finish()
    }
}

impl ReferenceFunction {
    /// `regular_in_z(w, rho)` reports whether `f(., w)` is holomorphic on `|zeta| <= rho`.
    pub fn new(
        name: &str,
        m: usize,
        singularity: &str,
        eval: impl Fn(Complex64, &[Complex64]) -> Complex64 + Send + Sync + 'static,
        extension: Option<Eval>,
        regular_in_z: impl Fn(&[Complex64], f64) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            m,
            singularity: singularity.into(),
            eval: Arc::new(eval),
            extension,
            regular_in_z: Arc::new(regular_in_z),
        }
    }

    /// A function that is its own global extension.
    pub fn global(
        name: &str,
        m: usize,
        singularity: &str,
        eval: impl Fn(Complex64, &[Complex64]) -> Complex64 + Send + Sync + 'static,
        regular_in_z: impl Fn(&[Complex64], f64) -> bool + Send + Sync + 'static,
    ) -> Self {
        let eval: Eval = Arc::new(eval);
        Self {
            name: name.into(),
            m,
            singularity: singularity.into(),
            eval: eval.clone(),
            extension: Some(eval),
            regular_in_z: Arc::new(regular_in_z),
        }
    }

    pub fn eval(&self, z: Complex64, w: &[Complex64]) -> Complex64 {
        (self.eval)(z, w)
    }

    pub fn extension(&self, z: Complex64, w: &[Complex64]) -> Option<Complex64> {
        self.extension.as_ref().map(|e| e(z, w))
    }

    pub fn regular_in_z(&self, w: &[Complex64], rho: f64) -> bool {
        (self.regular_in_z)(w, rho)
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 7] = [
    "inv3",
    "monomial",
    "w-pole",
    "product",
    "quadric",
    "shifted",
    "double-pole",
];

/// Built-in references on `C x C`.
///
/// * `inv3`: `1/(3 - z - w)`, pole on `z + w = 3`
/// * `monomial`: `z^2 w^3`, entire
/// * `w-pole`: `1/(w - 2)`, pole on `w = 2`
/// * `product`: `1/((2 - z)(2 + w))`, poles on `z = 2` and `w = -2`
/// * `quadric`: `1/(4 - z^2 - w^2)`, pole on `z^2 + w^2 = 4`
/// * `shifted`: `(1 + z w)/(z - 3i - w)`, pole on `z = w + 3i`
/// * `double-pole`: `w/(2.5 - z)^2`, double pole on `z = 2.5`
pub fn builtin(name: &str) -> Option<ReferenceFunction> {
    let f = match name {
        "inv3" => ReferenceFunction::global(
            name,
            1,
            "simple pole on z + w = 3",
            |z, w| 1.0 / (3.0 - z - w[0]),
            |w, rho| (3.0 - w[0]).norm() > rho,
        ),
        "monomial" => ReferenceFunction::global(name, 1, "entire", |z, w| z * z * w[0].powi(3), |_, _| true),
        "w-pole" => ReferenceFunction::global(
            name,
            1,
            "simple pole on w = 2",
            |_, w| 1.0 / (w[0] - 2.0),
            |w, _| w[0] != c(2.0, 0.0),
        ),
        "product" => ReferenceFunction::global(
            name,
            1,
            "simple poles on z = 2 and w = -2",
            |z, w| 1.0 / ((2.0 - z) * (2.0 + w[0])),
            |w, rho| rho < 2.0 && w[0] != c(-2.0, 0.0),
        ),
        "quadric" => ReferenceFunction::global(
            name,
            1,
            "simple pole on z^2 + w^2 = 4",
            |z, w| 1.0 / (4.0 - z * z - w[0] * w[0]),
            |w, rho| (4.0 - w[0] * w[0]).sqrt().norm() > rho,
        ),
        "shifted" => ReferenceFunction::global(
            name,
            1,
            "simple pole on z = w + 3i",
            |z, w| (1.0 + z * w[0]) / (z - c(0.0, 3.0) - w[0]),
            |w, rho| (w[0] + c(0.0, 3.0)).norm() > rho,
        ),
        "double-pole" => ReferenceFunction::global(
            name,
            1,
            "double pole on z = 2.5",
            |z, w| w[0] / ((2.5 - z) * (2.5 - z)),
            |_, rho| rho < 2.5,
        ),
        _ => return None,
    };
    Some(f)
}

pub fn builtins() -> Vec<ReferenceFunction> {
    BUILTIN_NAMES.iter().filter_map(|n| builtin(n)).collect()
}

/// Default Cauchy radius: the middle of the collar.
pub fn default_rho(collar_width: f64) -> f64 {
    1.0 - collar_width / 2.0
}

/// `(2 pi i)^{-1} \oint_{|zeta|=rho} f(zeta, w)/(zeta - z) d zeta` by the trapezoid rule.
pub fn cauchy_slice_extend(
    f: &ReferenceFunction,
    rho: f64,
    z: Complex64,
    w: &[Complex64],
    quad_nodes: usize,
) -> Result<Complex64> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(LabError::Parameter(format!("rho must lie in (0, 1], got {rho}")));
    }
    if quad_nodes < MIN_QUAD_NODES {
        return Err(LabError::Parameter(format!(
            "quad_nodes must be >= {MIN_QUAD_NODES}, got {quad_nodes}"
        )));
    }
    if w.len() != f.m {
        return Err(LabError::Parameter(format!(
            "w has {} components, expected {}",
            w.len(),
            f.m
        )));
    }
    if z.norm() >= rho {
        return Err(LabError::Domain(format!(
            "|z| = {} must be below rho = {rho}",
            z.norm()
        )));
    }
    // With zeta = rho e^{it}, d zeta/(2 pi i) = zeta dt/(2 pi).
    let sum: Complex64 = (0..quad_nodes)
        .map(|k| {
            let zeta = Complex64::from_polar(rho, 2.0 * PI * k as f64 / quad_nodes as f64);
            f.eval(zeta, w) * zeta / (zeta - z)
        })
        .sum();
    Ok(sum / quad_nodes as f64)
}

/// Node count for which the trapezoid error bound `max(|z|/rho, rho)^n` is
/// below `1e-14`, at least `base`. Assumes `f(., w)` is holomorphic on the
/// closed unit disc.
pub fn adaptive_nodes(z_abs: f64, rho: f64, base: usize) -> usize {
    let ratio = (z_abs / rho).max(rho).max(1e-3);
    let need = (14.0 * 10f64.ln() / -ratio.ln()).ceil() as usize;
    need.max(base).next_power_of_two()
}

/// Deterministic spiral sample of `count` points in `|z| <= radius`.
pub fn spiral_sample(count: usize, radius: f64, phase: f64) -> Vec<Complex64> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let r = radius * (i as f64 + 0.5) / count as f64;
            Complex64::from_polar(r, golden * i as f64 + phase)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionReport {
    pub function: String,
    pub rho: f64,
    pub collar_points: usize,
    pub collar_max_deviation: f64,
    pub graph_points: usize,
    pub graph_max_deviation: f64,
    /// Samples skipped because `f(., w)` is singular in the closed unit disc.
    pub skipped_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interior_max_deviation: Option<f64>,
    pub interior_skipped: bool,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares the Cauchy-slice extension with `f` on the collar and along
/// translated limit graphs inside the tube, and with the global
/// continuation when one is known.
pub fn extension_consistency(
    f: &ReferenceFunction,
    tube: &TubeNeighborhood,
    psi: &LimitGraph,
    sample_count: usize,
) -> Result<ExtensionReport> {
    let m = tube.center.m();
    if f.m != m || psi.coefficients.len() != m {
        return Err(LabError::Parameter(format!(
            "dimension mismatch: f has m = {}, tube m = {m}, psi m = {}",
            f.m,
            psi.coefficients.len()
        )));
    }
    let rb = tube.collar_width;
    if !(rb > 0.0) {
        return Err(LabError::Parameter("collar width must be positive".into()));
    }
    let rho = default_rho(rb);
    let n = sample_count.max(1);
    let mut skipped = 0;

    // Collar: |z| in [1 - rb, 1 - 3 rb / 4], w over the closed polydisc.
    let mut collar_dev: f64 = 0.0;
    let mut collar_points = 0;
    let ws = spiral_sample(n, 1.0, 0.3);
    for i in 0..n {
        let t = (i as f64 + 0.5) / n as f64;
        let z = Complex64::from_polar(1.0 - rb + 0.25 * rb * t, 2.0 * PI * t * 7.0);
        for wk in &ws {
            let w = vec![*wk; m];
            if !f.regular_in_z(&w, 1.0) {
                skipped += 1;
                continue;
            }
            let nodes = adaptive_nodes(z.norm(), rho, 256);
            let ext = cauchy_slice_extend(f, rho, z, &w, nodes)?;
            collar_dev = collar_dev.max(relative(ext, f.eval(z, &w)));
            collar_points += 1;
        }
    }

    // Graph points (z, psi(z) + eta) that lie in the tube.
    let mut graph_dev: f64 = 0.0;
    let mut graph_points = 0;
    let eta_r = tube.graph_radius / 4.0;
    let etas = [
        c(0.0, 0.0),
        c(eta_r, 0.0),
        c(0.0, eta_r),
        c(-eta_r, 0.0),
        c(0.0, -eta_r),
    ];
    for z in spiral_sample(n * n, 0.9 * rho, 0.0) {
        for eta in etas {
            let w: Vec<Complex64> = (0..m).map(|j| psi.value(z, j) + eta).collect();
            if !tube.contains(z, &w) {
                continue;
            }
            if !f.regular_in_z(&w, 1.0) {
                skipped += 1;
                continue;
            }
            let nodes = adaptive_nodes(z.norm(), rho, 256);
            let ext = cauchy_slice_extend(f, rho, z, &w, nodes)?;
            graph_dev = graph_dev.max(relative(ext, f.eval(z, &w)));
            graph_points += 1;
        }
    }

    // Interior comparison only when a global continuation is known.
    let interior = if f.extension.is_some() {
        let mut dev: f64 = 0.0;
        for z in spiral_sample(n, 0.8 * rho, 0.1) {
            for wk in spiral_sample(n, 1.0, 0.7) {
                let w = vec![wk; m];
                if !f.regular_in_z(&w, 1.0) {
                    continue;
                }
                let nodes = adaptive_nodes(z.norm(), rho, 256);
                let ext = cauchy_slice_extend(f, rho, z, &w, nodes)?;
                dev = dev.max(relative(ext, f.extension(z, &w).unwrap_or_default()));
            }
        }
        Some(dev)
    } else {
        None
    };

    let pass =
        collar_dev <= TOL_EXT && graph_dev <= TOL_EXT && collar_points > 0 && interior.is_none_or(|d| d <= TOL_EXT);
    Ok(ExtensionReport {
        function: f.name.clone(),
        rho,
        collar_points,
        collar_max_deviation: collar_dev,
        graph_points,
        graph_max_deviation: graph_dev,
        skipped_points: skipped,
        interior_max_deviation: interior,
        interior_skipped: interior.is_none(),
        tolerance: TOL_EXT,
        pass,
    })
}

fn relative(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

/// Winding number of `zeta -> h(zeta)` around 0 on `|zeta| = rho`.
pub fn winding_number(h: impl Fn(Complex64) -> Complex64, rho: f64, samples: usize) -> Option<i64> {
    let mut total = 0.0;
    let mut prev = h(Complex64::new(rho, 0.0));
    if prev.norm() == 0.0 {
        return None;
    }
    for k in 1..=samples {
        let cur = h(Complex64::from_polar(rho, 2.0 * PI * k as f64 / samples as f64));
        if cur.norm() == 0.0 {
            return None;
        }
        total += (cur / prev).arg();
        prev = cur;
    }
    Some((total / (2.0 * PI)).round() as i64)
}

/// `1/(w - psi(z) - c)` for scalar `psi`; no global continuation is recorded.
pub fn graph_pole_reference(psi: LimitGraph, offset: Complex64) -> ReferenceFunction {
    let p1 = psi.clone();
    ReferenceFunction::new(
        "graph-pole",
        1,
        "simple pole on w = psi(z) + c",
        move |z, w| 1.0 / (w[0] - p1.value(z, 0) - offset),
        None,
        move |w, rho| winding_number(|zeta| w[0] - psi.value(zeta, 0) - offset, rho, 2048) == Some(0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{limit_graph, FamilyKind};
    use crate::polar::{PolarGrid, Profile, ProfileExpr, RadialModeSeries};

    fn half_z() -> RadialModeSeries {
        let p = Profile::Expr(ProfileExpr::Polynomial {
            coeffs: vec![c(0.0, 0.0), c(0.5, 0.0)],
        });
        RadialModeSeries::scalar(PolarGrid::chebyshev(32, 64).unwrap(), [(1, p)]).unwrap()
    }

    #[test]
    fn inv3_at_origin() {
        let f = builtin("inv3").unwrap();
        let v = cauchy_slice_extend(&f, 0.95, c(0.0, 0.0), &[c(0.0, 0.0)], 256).unwrap();
        assert!(((v - 1.0 / 3.0) / (1.0 / 3.0)).norm() < 1e-10);
    }

    #[test]
    fn monomial_and_w_only() {
        let f = builtin("monomial").unwrap();
        let (z, w) = (c(0.3, -0.2), c(0.5, 0.4));
        let v = cauchy_slice_extend(&f, 0.95, z, &[w], 128).unwrap();
        assert!((v - z * z * w.powi(3)).norm() < 1e-14);

        let g = builtin("w-pole").unwrap();
        let w = [c(0.2, 0.7)];
        let a = cauchy_slice_extend(&g, 0.95, c(0.0, 0.0), &w, 64).unwrap();
        let b = cauchy_slice_extend(&g, 0.95, c(0.6, 0.3), &w, 512).unwrap();
        assert!((a - b).norm() < 1e-14);
        assert!((a - 1.0 / (w[0] - 2.0)).norm() < 1e-14);
    }

    #[test]
    fn domain_and_parameter_errors() {
        let f = builtin("inv3").unwrap();
        let w = [c(0.0, 0.0)];
        assert!(matches!(
            cauchy_slice_extend(&f, 0.9, c(0.9, 0.0), &w, 64),
            Err(LabError::Domain(_))
        ));
        assert!(matches!(
            cauchy_slice_extend(&f, 0.9, c(0.0, 0.0), &w, 32),
            Err(LabError::Parameter(_))
        ));
        assert!(builtin("nope").is_none());
    }

    #[test]
    fn consistency_on_half_z() {
        let center = half_z();
        let tube = TubeNeighborhood::new(0.2, 0.1, center.clone()).unwrap();
        let psi = limit_graph(&center, FamilyKind::Annulus, &[c(0.0, 0.0)]).unwrap();
        for f in builtins() {
            let rep = extension_consistency(&f, &tube, &psi, 6).unwrap();
            assert!(rep.pass, "{rep:?}");
            assert!(
                rep.collar_max_deviation < 1e-9 && rep.graph_max_deviation < 1e-9,
                "{rep:?}"
            );
            assert!(rep.graph_points > 0);
        }
    }

    #[test]
    fn graph_pole_skips_interior_oracle() {
        let center = half_z();
        let tube = TubeNeighborhood::new(0.2, 0.1, center.clone()).unwrap();
        let psi = limit_graph(&center, FamilyKind::Annulus, &[c(0.0, 0.0)]).unwrap();
        // Pole graph w = z/2 + 0.6 meets the bidisc but stays outside the tube.
        let f = graph_pole_reference(psi.clone(), c(0.6, 0.0));
        let rep = extension_consistency(&f, &tube, &psi, 6).unwrap();
        assert!(rep.interior_skipped && rep.interior_max_deviation.is_none());
        assert!(rep.skipped_points > 0);
        assert!(
            rep.collar_max_deviation < 1e-9 && rep.graph_max_deviation < 1e-9,
            "{rep:?}"
        );
        assert!(rep.pass);
    }

    #[test]
    fn winding_counts_zeros() {
        assert_eq!(winding_number(|z| z - 0.3, 0.9, 512), Some(1));
        assert_eq!(winding_number(|z| z * z - 0.25, 0.9, 512), Some(2));
        assert_eq!(winding_number(|z| z - 2.0, 0.9, 512), Some(0));
    }
}
