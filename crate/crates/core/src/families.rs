//! Continuous families of analytic annuli and discs attached to a graph,
//! their limit graph and the continuity-principle certificate.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fourier::values_on_grid;
use crate::hypothesis::{boundary_sup, chirka_condition_margin, mode_sum};
use crate::polar::{PolarGrid, Profile, ProfileExpr, RadialModeSeries, TubeNeighborhood};
use crate::smooth::forward_derivative;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Agreement required between the limit-graph formula and extrapolation.
pub const TOL_PSI: f64 = 1e-6;
/// Attachment and Laurent-fingerprint tolerance used by the certificate.
pub const TOL_ATTACH: f64 = 1e-9;
/// Radial sample rows per slice (odd, so there is a middle circle).
pub const SLICE_ROWS: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Annulus,
    Disc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attachment {
    /// Sup deviation from `G + eta` on the attached circle `|zeta| = r`.
    pub inner_deviation: f64,
    /// Sup modulus on `|zeta| = 1` (annulus only).
    pub outer_modulus: Option<f64>,
    /// `sum_n |b_n(r)|/r^n + |eta|` (annulus only).
    pub outer_bound: Option<f64>,
    /// Laurent fingerprint residual on the middle circle.
    pub laurent_residual: f64,
}

/// One member of the family, sampled on `SLICE_ROWS` circles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilySlice {
    pub kind: FamilyKind,
    pub r: f64,
    pub eta: Vec<Complex64>,
    pub moduli: Vec<f64>,
    pub n_angles: usize,
    /// `values[j][row][k]` at `moduli[row] * e^{2 pi i k / n_angles}`.
    pub values: Vec<Vec<Vec<Complex64>>>,
    pub attachment: Attachment,
}

impl FamilySlice {
    pub fn zeta(&self, row: usize, k: usize) -> Complex64 {
        Complex64::from_polar(self.moduli[row], 2.0 * PI * k as f64 / self.n_angles as f64)
    }

    pub fn point(&self, row: usize, k: usize) -> Vec<Complex64> {
        self.values.iter().map(|c| c[row][k]).collect()
    }
}

/// Angle count for slices of a series with `max_mode`.
pub fn slice_angles(max_mode: usize) -> usize {
    (4 * max_mode + 4).next_power_of_two().max(64)
}

/// `b_n(r) / r^n` for every mode and component, with `eta` added to `n = 0`.
fn scaled_coefficients(
    g: &RadialModeSeries,
    r: f64,
    eta: &[Complex64],
    kind: FamilyKind,
) -> Vec<BTreeMap<i32, Complex64>> {
    (0..g.m())
        .map(|j| {
            let mut out: BTreeMap<i32, Complex64> = g.components[j]
                .keys()
                .filter(|&&n| kind == FamilyKind::Annulus || n >= 0)
                .map(|&n| (n, g.ratio(j, n, r)))
                .collect();
            *out.entry(0).or_insert(ZERO) += eta.get(j).copied().unwrap_or(ZERO);
            out
        })
        .collect()
}

fn laurent_value(coeffs: &BTreeMap<i32, Complex64>, zeta: Complex64) -> Complex64 {
    coeffs
        .iter()
        .map(|(&n, &k)| if n == 0 { k } else { k * zeta.powi(n) })
        .sum()
}

fn build_slice(g: &RadialModeSeries, r: f64, eta: &[Complex64], kind: FamilyKind) -> Result<FamilySlice> {
    if !(r > 0.0 && r < 1.0) {
        return Err(LabError::Domain(format!("slice radius {r} not in (0, 1)")));
    }
    if eta.len() != g.m() {
        return Err(LabError::Parameter(format!(
            "eta has {} components, map has {}",
            eta.len(),
            g.m()
        )));
    }
    let n_angles = slice_angles(g.degree_bound());
    let moduli: Vec<f64> = (0..SLICE_ROWS)
        .map(|i| {
            let t = i as f64 / (SLICE_ROWS - 1) as f64;
            match kind {
                FamilyKind::Annulus => r + (1.0 - r) * t,
                FamilyKind::Disc => r * t,
            }
        })
        .collect();
    let coeffs = scaled_coefficients(g, r, eta, kind);
    let angle = |k: usize| 2.0 * PI * k as f64 / n_angles as f64;
    let values: Vec<Vec<Vec<Complex64>>> = coeffs
        .iter()
        .map(|cj| {
            moduli
                .iter()
                .map(|&rho| {
                    (0..n_angles)
                        .map(|k| laurent_value(cj, Complex64::from_polar(rho, angle(k))))
                        .collect()
                })
                .collect()
        })
        .collect();

    let attached_row = match kind {
        FamilyKind::Annulus => 0,
        FamilyKind::Disc => SLICE_ROWS - 1,
    };
    let mut inner_deviation: f64 = 0.0;
    for j in 0..g.m() {
        for k in 0..n_angles {
            let want = g.value_at(r, angle(k), j) + eta[j];
            inner_deviation = inner_deviation.max((values[j][attached_row][k] - want).norm());
        }
    }

    // Laurent fingerprint on the middle circle.
    let mid = SLICE_ROWS / 2;
    let rho = moduli[mid];
    let fft = FftPlanner::new().plan_fft_forward(n_angles);
    let mut laurent_residual: f64 = 0.0;
    for (j, cj) in coeffs.iter().enumerate() {
        let mut buf = values[j][mid].clone();
        fft.process(&mut buf);
        for (slot, c) in buf.iter().enumerate() {
            let n = if slot <= n_angles / 2 {
                slot as i32
            } else {
                slot as i32 - n_angles as i32
            };
            let expected = cj.get(&n).map_or(ZERO, |&k| if n == 0 { k } else { k * rho.powi(n) });
            laurent_residual = laurent_residual.max((c / n_angles as f64 - expected).norm());
        }
    }

    let (outer_modulus, outer_bound) = match kind {
        FamilyKind::Annulus => {
            let outer = values
                .iter()
                .map(|c| c[SLICE_ROWS - 1].iter().map(|v| v.norm()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            let bound = (0..g.m())
                .map(|j| mode_sum(g, j, r) + eta[j].norm())
                .fold(0.0, f64::max);
            (Some(outer), Some(bound))
        }
        FamilyKind::Disc => (None, None),
    };

    Ok(FamilySlice {
        kind,
        r,
        eta: eta.to_vec(),
        moduli,
        n_angles,
        values,
        attachment: Attachment {
            inner_deviation,
            outer_modulus,
            outer_bound,
            laurent_residual,
        },
    })
}

/// `A_r(zeta) = sum_n b_n(r) (zeta/r)^n + eta` on `r <= |zeta| <= 1`.
pub fn annulus_map(g: &RadialModeSeries, r: f64, eta: &[Complex64]) -> Result<FamilySlice> {
    let slice = build_slice(g, r, eta, FamilyKind::Annulus)?;
    let outer = slice.attachment.outer_modulus.unwrap_or(0.0);
    if outer >= 1.0 {
        return Err(LabError::Certificate(format!(
            "annulus at r = {r:.6e} has outer boundary modulus {outer:.6} >= 1"
        )));
    }
    Ok(slice)
}

/// `D_r(zeta) = sum_{n >= 0} b_n(r) (zeta/r)^n + eta` on `|zeta| <= r`.
pub fn disc_map(g: &RadialModeSeries, r: f64, eta: &[Complex64]) -> Result<FamilySlice> {
    if g.components.iter().any(|c| c.keys().any(|&n| n < 0)) {
        return Err(LabError::Parameter(
            "disc family needs a map without negative modes".into(),
        ));
    }
    build_slice(g, r, eta, FamilyKind::Disc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitGraph {
    pub kind: FamilyKind,
    /// `psi_j(zeta) = sum_n c_{jn} zeta^n`, `n >= 0`.
    pub coefficients: Vec<BTreeMap<i32, Complex64>>,
    /// `(r, sup_zeta |family_r(zeta) - psi(zeta)|)` on the probe points.
    pub convergence_rate: Vec<(f64, f64)>,
    /// Largest difference between the coefficient formula and extrapolation.
    pub discrepancy: f64,
}

impl LimitGraph {
    pub fn value(&self, zeta: Complex64, j: usize) -> Complex64 {
        laurent_value(&self.coefficients[j], zeta)
    }

    /// `psi` as a mode series (profile `c_n r^n`).
    pub fn as_series(&self, grid: PolarGrid) -> Result<RadialModeSeries> {
        let comps = self
            .coefficients
            .iter()
            .map(|cj| {
                cj.iter()
                    .map(|(&n, &c)| {
                        let mut coeffs = vec![ZERO; n as usize + 1];
                        coeffs[n as usize] = c;
                        (n, Profile::Expr(ProfileExpr::Polynomial { coeffs }))
                    })
                    .collect()
            })
            .collect();
        RadialModeSeries::new(grid, comps)
    }
}

/// Richardson table for samples at `h, h/2, h/4, ...` with error in integer
/// powers of `h`; returns the entry whose change from its predecessor is smallest.
pub fn richardson(samples: &[Complex64]) -> Complex64 {
    let mut prev: Vec<Complex64> = samples.to_vec();
    let mut best = *samples.last().unwrap_or(&ZERO);
    let mut best_change = if samples.len() >= 2 {
        (samples[samples.len() - 1] - samples[samples.len() - 2]).norm()
    } else {
        f64::INFINITY
    };
    let mut m = 1;
    while prev.len() > 1 {
        let f = 2f64.powi(m);
        let next: Vec<Complex64> = prev.windows(2).map(|w| (w[1] * f - w[0]) / (f - 1.0)).collect();
        for (k, v) in next.iter().enumerate() {
            let change = (v - prev[k + 1]).norm();
            if change < best_change {
                best_change = change;
                best = *v;
            }
        }
        prev = next;
        m += 1;
    }
    best
}

/// `(1/n!) d^n b / dr^n (0)` by forward differences at four step sizes plus Richardson.
fn taylor_coefficient(b: impl Fn(f64) -> Complex64, n: usize, h0: f64) -> Complex64 {
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let samples: Vec<Complex64> = (0..4)
        .map(|l| {
            let h = h0 / 2f64.powi(l);
            let re = forward_derivative(|r| b(r).re, 0.0, n, h);
            let im = forward_derivative(|r| b(r).im, 0.0, n, h);
            Complex64::new(re, im) / fact
        })
        .collect();
    richardson(&samples)
}

fn probe_points() -> Vec<Complex64> {
    let mut pts = Vec::new();
    for &rho in &[0.3, 0.5, 0.8] {
        for k in 0..4 {
            pts.push(Complex64::from_polar(rho, 0.4 + PI * k as f64 / 2.0));
        }
    }
    pts
}

/// Limit of the family as `r -> 0` (annulus) or `r -> 1` (disc).
pub fn limit_graph(g: &RadialModeSeries, kind: FamilyKind, eta: &[Complex64]) -> Result<LimitGraph> {
    if eta.len() != g.m() {
        return Err(LabError::Parameter(format!(
            "eta has {} components, map has {}",
            eta.len(),
            g.m()
        )));
    }
    let probes = probe_points();
    match kind {
        FamilyKind::Disc => {
            if g.components.iter().any(|c| c.keys().any(|&n| n < 0)) {
                return Err(LabError::Parameter(
                    "disc family needs a map without negative modes".into(),
                ));
            }
            let coefficients: Vec<BTreeMap<i32, Complex64>> = (0..g.m())
                .map(|j| {
                    let mut c: BTreeMap<i32, Complex64> =
                        g.components[j].keys().map(|&n| (n, g.coefficient(j, n, 1.0))).collect();
                    *c.entry(0).or_insert(ZERO) += eta[j];
                    c
                })
                .collect();
            let psi = LimitGraph {
                kind,
                coefficients,
                convergence_rate: Vec::new(),
                discrepancy: 0.0,
            };
            let convergence_rate = (1..=8)
                .map(|k| {
                    let r = 1.0 - 0.5f64.powi(k);
                    let coeffs = scaled_coefficients(g, r, eta, kind);
                    let dev = probes
                        .iter()
                        .filter(|z| z.norm() < r)
                        .flat_map(|&z| (0..g.m()).map(move |j| (z, j)))
                        .map(|(z, j)| (laurent_value(&coeffs[j], z) - psi.value(z, j)).norm())
                        .fold(0.0, f64::max);
                    (r, dev)
                })
                .collect();
            Ok(LimitGraph {
                convergence_rate,
                ..psi
            })
        }
        FamilyKind::Annulus => {
            let feature = g.feature_scale().unwrap_or(1.0).min(1.0);
            let coefficients: Vec<BTreeMap<i32, Complex64>> = (0..g.m())
                .map(|j| {
                    let mut c = BTreeMap::new();
                    for &n in g.components[j].keys().filter(|&&n| n >= 0) {
                        let v = if n == 0 {
                            g.coefficient(j, 0, 0.0)
                        } else {
                            let h0 = (0.05f64).min(feature / 2.0) / n as f64;
                            taylor_coefficient(|r| g.coefficient(j, n, r), n as usize, h0)
                        };
                        c.insert(n, v);
                    }
                    *c.entry(0).or_insert(ZERO) += eta[j];
                    c
                })
                .collect();
            let psi = LimitGraph {
                kind,
                coefficients,
                convergence_rate: Vec::new(),
                discrepancy: 0.0,
            };

            let mut discrepancy: f64 = 0.0;
            let mut rate: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
            for &z in &probes {
                let r_start = (z.norm() / 4.0).min(feature / 2.0);
                for j in 0..g.m() {
                    let samples: Vec<Complex64> = (0..8)
                        .map(|k| {
                            let r = r_start / 2f64.powi(k);
                            let coeffs = scaled_coefficients(g, r, eta, kind);
                            let v = laurent_value(&coeffs[j], z);
                            let e = rate.entry(k as usize).or_insert((r, 0.0));
                            e.1 = e.1.max((v - psi.value(z, j)).norm());
                            v
                        })
                        .collect();
                    let extrapolated = richardson(&samples);
                    discrepancy = discrepancy.max((extrapolated - psi.value(z, j)).norm());
                }
            }
            let lg = LimitGraph {
                convergence_rate: rate.into_values().collect(),
                discrepancy,
                ..psi
            };
            if discrepancy > TOL_PSI {
                return Err(LabError::Inconsistent(discrepancy));
            }
            Ok(lg)
        }
    }
}

/// Geometric schedule: 0.95 down to `r_min` (annulus) or 0.05 up to 0.95 (disc).
pub fn default_r_schedule(kind: FamilyKind, r_min: f64, slices: usize) -> Vec<f64> {
    let (a, b) = match kind {
        FamilyKind::Annulus => (0.95, r_min),
        FamilyKind::Disc => (0.05, 0.95),
    };
    let n = slices.max(2);
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

/// `points_per_axis^2` translates on the square inscribed in `|eta| <= radius`,
/// applied to every component at once, plus zero.
pub fn eta_grid(m: usize, radius: f64, points_per_axis: usize) -> Vec<Vec<Complex64>> {
    let mut out = vec![vec![ZERO; m]];
    if radius <= 0.0 || points_per_axis == 0 {
        return out;
    }
    let half = radius * FRAC_1_SQRT_2;
    let coord = |i: usize| {
        if points_per_axis == 1 {
            0.0
        } else {
            -half + 2.0 * half * i as f64 / (points_per_axis - 1) as f64
        }
    };
    for a in 0..points_per_axis {
        for b in 0..points_per_axis {
            let e = Complex64::new(coord(a), coord(b));
            if e != ZERO {
                out.push(vec![e; m]);
            }
        }
    }
    out
}

/// Translate radius `1/2 min(slack, rho_g/2 - sup|F - G|)`, where `slack` is
/// `min(1 - sup_{dD}|G|, margin_G)` for annuli and `1 - sup_{dD}|G|` for discs.
pub fn default_eta_radius(
    f: &RadialModeSeries,
    g: &RadialModeSeries,
    tube: &TubeNeighborhood,
    kind: FamilyKind,
) -> f64 {
    let bsup = boundary_sup(g).into_iter().fold(0.0, f64::max);
    let mut slack = 1.0 - bsup;
    if kind == FamilyKind::Annulus {
        slack = slack.min(chirka_condition_margin(g).into_iter().fold(f64::INFINITY, f64::min));
    }
    let nodes = f.grid.nodes_with_origin();
    let fv = values_on_grid(f, &nodes, f.grid.n_theta());
    let gv = values_on_grid(g, &nodes, f.grid.n_theta());
    let mut err: f64 = 0.0;
    for j in 0..fv.len().min(gv.len()) {
        for (fr, gr) in fv[j].iter().zip(&gv[j]) {
            for (a, b) in fr.iter().zip(gr) {
                err = err.max((a - b).norm());
            }
        }
    }
    (0.5 * slack.min(tube.graph_radius / 2.0 - err)).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KontinuitaetssatzCertificate {
    pub kind: FamilyKind,
    pub graph_radius: f64,
    pub collar_width: f64,
    pub r_schedule: Vec<f64>,
    pub eta_grid: Vec<Vec<Complex64>>,
    /// Worst signed distance of slice boundaries to the tube (negative = inside).
    pub boundary_containment: f64,
    /// Largest (annulus) or smallest (disc) scheduled r whose slices lie in the tube for every eta.
    pub initial_containment: Option<f64>,
    pub continuity_modulus: f64,
    pub inner_attachment: f64,
    pub outer_modulus: Option<f64>,
    /// Smallest `outer_bound - outer_modulus` over annulus slices.
    pub outer_bound_slack: Option<f64>,
    pub laurent_residual: f64,
    pub kset_points: usize,
    pub kset_bound: f64,
    pub kset_bound_limit: f64,
    pub kset_inner_radius: Option<f64>,
    pub delta0: f64,
    pub limit_discrepancy: f64,
    pub pass: bool,
    pub first_failure: Option<String>,
}

struct SliceScan {
    boundary: f64,
    inside: bool,
    inner: f64,
    outer: Option<f64>,
    outer_slack: Option<f64>,
    laurent: f64,
    attached_sup: f64,
    kset: Vec<(f64, f64)>,
}

fn scan_slice(slice: &FamilySlice, tube: &TubeNeighborhood, f_vals: &[Vec<Vec<Complex64>>]) -> SliceScan {
    let m = slice.values.len();
    let mut boundary = f64::NEG_INFINITY;
    let mut inside = true;
    let mut kset = Vec::new();
    let attached_row = match slice.kind {
        FamilyKind::Annulus => 0,
        FamilyKind::Disc => SLICE_ROWS - 1,
    };
    let mut attached_sup: f64 = 0.0;
    for row in 0..SLICE_ROWS {
        let modulus = slice.moduli[row];
        for k in 0..slice.n_angles {
            let mut graph: f64 = 0.0;
            let mut fiber: f64 = 0.0;
            for j in 0..m {
                let w = slice.values[j][row][k];
                graph = graph.max((w - f_vals[j][row][k]).norm());
                fiber = fiber.max(w.norm());
            }
            let graph = graph - tube.graph_radius;
            let collar = ((modulus - 1.0).abs() - tube.collar_width).max(fiber - 1.0);
            let d = graph.min(collar);
            if row == attached_row {
                attached_sup = attached_sup.max(fiber - slice.eta.iter().map(|e| e.norm()).fold(0.0, f64::max));
                boundary = boundary.max(graph);
            }
            if slice.kind == FamilyKind::Annulus && row == SLICE_ROWS - 1 {
                boundary = boundary.max(collar);
            }
            if d >= 0.0 {
                inside = false;
                kset.push((modulus, fiber));
            }
        }
    }
    let a = &slice.attachment;
    SliceScan {
        boundary,
        inside,
        inner: a.inner_deviation,
        outer: a.outer_modulus,
        outer_slack: a.outer_bound.zip(a.outer_modulus).map(|(b, o)| b - o),
        laurent: a.laurent_residual,
        attached_sup,
        kset,
    }
}

/// Centre values `F_j` on the slice sample points, shared by all translates.
fn center_values(tube: &TubeNeighborhood, template: &FamilySlice) -> Vec<Vec<Vec<Complex64>>> {
    (0..tube.center.m())
        .map(|j| {
            (0..SLICE_ROWS)
                .map(|row| {
                    (0..template.n_angles)
                        .map(|k| tube.center.value_at_point(template.zeta(row, k), j))
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn fmax(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn fmin(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Scan `r_schedule x eta_grid` and collect the certificate fields.
pub fn certify_family(
    g: &RadialModeSeries,
    tube: &TubeNeighborhood,
    kind: FamilyKind,
    eta_grid: &[Vec<Complex64>],
    r_schedule: &[f64],
) -> Result<KontinuitaetssatzCertificate> {
    if r_schedule.is_empty() || eta_grid.is_empty() {
        return Err(LabError::Parameter("empty schedule or eta grid".into()));
    }
    if kind == FamilyKind::Disc && g.components.iter().any(|c| c.keys().any(|&n| n < 0)) {
        return Err(LabError::Parameter(
            "disc family needs a map without negative modes".into(),
        ));
    }
    let max_eta = eta_grid
        .iter()
        .flat_map(|e| e.iter().map(|x| x.norm()))
        .fold(0.0, f64::max);

    struct PerRadius {
        r: f64,
        scans: Vec<SliceScan>,
        failure: Option<String>,
    }
    let per_radius: Vec<PerRadius> = r_schedule
        .par_iter()
        .map(|&r| {
            let mut scans = Vec::with_capacity(eta_grid.len());
            let mut failure = None;
            let mut f_vals = None;
            for eta in eta_grid {
                let slice = match kind {
                    FamilyKind::Annulus => annulus_map(g, r, eta),
                    FamilyKind::Disc => disc_map(g, r, eta),
                };
                match slice {
                    Ok(s) => {
                        let fv = f_vals.get_or_insert_with(|| center_values(tube, &s));
                        scans.push(scan_slice(&s, tube, fv));
                    }
                    Err(e) => {
                        failure = Some(e.to_string());
                        break;
                    }
                }
            }
            PerRadius { r, scans, failure }
        })
        .collect();

    // Continuity between consecutive schedule radii on their common domain.
    let eta0 = &eta_grid[0];
    let probes_for = |r1: f64, r2: f64| -> Vec<Complex64> {
        let (lo, hi) = match kind {
            FamilyKind::Annulus => (r1.max(r2), 1.0),
            FamilyKind::Disc => (0.0, r1.min(r2)),
        };
        (0..9)
            .flat_map(|i| {
                let rho = lo + (hi - lo) * i as f64 / 8.0;
                (0..16).map(move |k| Complex64::from_polar(rho, PI * k as f64 / 8.0))
            })
            .collect()
    };
    let continuity_modulus = r_schedule
        .windows(2)
        .map(|w| {
            let c1 = scaled_coefficients(g, w[0], eta0, kind);
            let c2 = scaled_coefficients(g, w[1], eta0, kind);
            probes_for(w[0], w[1])
                .iter()
                .flat_map(|&z| (0..g.m()).map(move |j| (z, j)))
                .map(|(z, j)| (laurent_value(&c1[j], z) - laurent_value(&c2[j], z)).norm())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);

    let mut first_failure: Option<String> = None;
    let mut boundary_containment = f64::NEG_INFINITY;
    let mut inner_attachment: f64 = 0.0;
    let mut outer_modulus = None;
    let mut outer_bound_slack = None;
    let mut laurent_residual: f64 = 0.0;
    let mut attached_sup: f64 = 0.0;
    let mut kset: Vec<(f64, f64)> = Vec::new();
    let mut fully_inside: Vec<(f64, bool)> = Vec::new();
    for pr in &per_radius {
        if let Some(msg) = &pr.failure {
            first_failure.get_or_insert_with(|| format!("outer_modulus: {msg}"));
        }
        let mut all_in = pr.failure.is_none();
        for s in &pr.scans {
            boundary_containment = boundary_containment.max(s.boundary);
            inner_attachment = inner_attachment.max(s.inner);
            outer_modulus = fmax(outer_modulus, s.outer);
            outer_bound_slack = fmin(outer_bound_slack, s.outer_slack);
            laurent_residual = laurent_residual.max(s.laurent);
            attached_sup = attached_sup.max(s.attached_sup);
            kset.extend_from_slice(&s.kset);
            all_in &= s.inside;
        }
        fully_inside.push((pr.r, all_in));
    }
    let initial_containment = match kind {
        FamilyKind::Annulus => fully_inside.iter().filter(|p| p.1).map(|p| p.0).reduce(f64::max),
        FamilyKind::Disc => fully_inside.iter().filter(|p| p.1).map(|p| p.0).reduce(f64::min),
    };

    // Sup of |G| on the closed disc, from the grid and from every attached circle.
    let nodes = g.grid.nodes_with_origin();
    let grid_sup = values_on_grid(g, &nodes, g.grid.n_theta())
        .iter()
        .flat_map(|c| c.iter().flat_map(|row| row.iter().map(|v| v.norm())))
        .fold(0.0, f64::max);
    let g_sup = grid_sup.max(attached_sup);
    let kset_bound_limit = (g_sup + max_eta).max(1.0) * (1.0 + 1e-12);

    // Limit graphs for every translate; their points outside the tube join the K-set.
    let mut limit_discrepancy: f64 = 0.0;
    let psi_probe: Vec<Complex64> = (1..=16)
        .flat_map(|i| {
            let rho = i as f64 / 16.0;
            (0..64).map(move |k| Complex64::from_polar(rho, PI * k as f64 / 32.0))
        })
        .collect();
    let f_at_probe: Vec<Vec<Complex64>> = psi_probe.iter().map(|&z| tube.center.values_at_point(z)).collect();
    for eta in eta_grid {
        match limit_graph(g, kind, eta) {
            Ok(lg) => {
                limit_discrepancy = limit_discrepancy.max(lg.discrepancy);
                for (z, fz) in psi_probe.iter().zip(&f_at_probe) {
                    let w: Vec<Complex64> = (0..g.m()).map(|j| lg.value(*z, j)).collect();
                    let graph = w.iter().zip(fz).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) - tube.graph_radius;
                    let fiber = w.iter().map(|x| x.norm()).fold(0.0, f64::max);
                    let collar = ((z.norm() - 1.0).abs() - tube.collar_width).max(fiber - 1.0);
                    if graph.min(collar) >= 0.0 {
                        kset.push((z.norm(), fiber));
                    }
                }
            }
            Err(e) => {
                if let LabError::Inconsistent(d) = e {
                    limit_discrepancy = limit_discrepancy.max(d);
                }
                first_failure.get_or_insert_with(|| format!("limit_graph: {e}"));
            }
        }
    }
    let kset_bound = kset.iter().map(|p| p.1).fold(0.0, f64::max);
    let kset_inner_radius = kset.iter().map(|p| p.0).reduce(f64::min);
    let delta0 = tube.delta0();

    let checks: [(&str, bool); 7] = [
        ("boundary_containment", boundary_containment < 0.0),
        ("initial_containment", initial_containment.is_some()),
        ("inner_attachment", inner_attachment < TOL_ATTACH),
        ("outer_bound", outer_bound_slack.is_none_or(|s| s >= -1e-12)),
        ("laurent_residual", laurent_residual < TOL_ATTACH),
        ("kset_bound", kset_bound <= kset_bound_limit),
        ("kset_inner_radius", kset_inner_radius.is_none_or(|r| r >= delta0)),
    ];
    for (name, ok) in checks {
        if !ok {
            first_failure.get_or_insert_with(|| name.to_string());
        }
    }
    Ok(KontinuitaetssatzCertificate {
        kind,
        graph_radius: tube.graph_radius,
        collar_width: tube.collar_width,
        r_schedule: r_schedule.to_vec(),
        eta_grid: eta_grid.to_vec(),
        boundary_containment,
        initial_containment,
        continuity_modulus,
        inner_attachment,
        outer_modulus,
        outer_bound_slack,
        laurent_residual,
        kset_points: kset.len(),
        kset_bound,
        kset_bound_limit,
        kset_inner_radius,
        delta0,
        limit_discrepancy,
        pass: first_failure.is_none(),
        first_failure,
    })
}

/// Write slices as CSV rows `r,eta_index,abs_zeta,arg_zeta,component,re,im`.
pub fn write_slices_csv<W: Write>(out: W, slices: &[(usize, FamilySlice)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "eta_index", "abs_zeta", "arg_zeta", "component", "re", "im"])
        .map_err(|e| LabError::Io(e.into()))?;
    for (eta_index, s) in slices {
        for row in 0..SLICE_ROWS {
            for k in 0..s.n_angles {
                let z = s.zeta(row, k);
                for (j, comp) in s.values.iter().enumerate() {
                    let v = comp[row][k];
                    w.write_record(&[
                        format!("{:.17e}", s.r),
                        eta_index.to_string(),
                        format!("{:.17e}", z.norm()),
                        format!("{:.17e}", z.arg()),
                        j.to_string(),
                        format!("{:.17e}", v.re),
                        format!("{:.17e}", v.im),
                    ])
                    .map_err(|e| LabError::Io(e.into()))?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
