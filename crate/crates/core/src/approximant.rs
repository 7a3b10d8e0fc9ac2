//! Smooth trigonometric-polynomial approximants with certified budgets.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fourier::{cesaro_weight, fejer_uniform_degree, values_on_grid};
use crate::hypothesis::{classify, mode_sum, Verdict};
use crate::mollify::{check_points, exact_profile, mollify_against, MollifiedProfile, SmoothProfile};
use crate::polar::{Profile, RadialModeSeries};
use crate::smooth::{forward_derivative, SmoothSwitch, K_MAX, TOL_FLAT};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Round-off allowance in the inequality checks.
const SLACK_TOL: f64 = 1e-13;
/// Points per decade when scanning `(0, R0]` below the grid.
const DENSE_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSign {
    TwoSided,
    Nonneg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: String,
    pub achieved: f64,
    pub allowed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub epsilon: f64,
    pub eta: f64,
    pub delta: f64,
    #[serde(rename = "N")]
    pub degree: usize,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub per_mode_budget: f64,
    pub flat_order_checked: usize,
    pub achieved: Vec<StepRecord>,
}

impl BudgetLedger {
    /// Mollifier budget `delta / (4(2N+1))`.
    pub fn mollify_budget(&self) -> f64 {
        self.per_mode_budget / 2.0
    }

    pub fn within_budget(&self) -> bool {
        self.achieved.iter().all(|s| s.achieved <= s.allowed)
    }
}

/// Largest finite-difference derivative at 0 (orders `1..=K_MAX`) of a flat profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessRecord {
    pub component: usize,
    pub n: i32,
    /// Order-by-order estimates, `derivatives[k-1]` for order `k`.
    pub derivatives: Vec<f64>,
}

impl FlatnessRecord {
    pub fn max_derivative(&self) -> f64 {
        self.derivatives.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothApproximant {
    pub series: RadialModeSeries,
    pub ledger: BudgetLedger,
    pub mode_sign: ModeSign,
    pub flatness: Vec<FlatnessRecord>,
}

impl SmoothApproximant {
    pub fn flatness_ok(&self) -> bool {
        self.flatness.iter().all(|f| f.max_derivative() < TOL_FLAT)
    }
}

/// Resolve `auto` against the verdict and check the preconditions.
pub fn resolve_mode_sign(series: &RadialModeSeries, requested: Option<ModeSign>) -> Result<ModeSign> {
    let rep = classify(series);
    if rep.fact_violation > crate::hypothesis::TOL_FACT {
        return Err(LabError::Hypothesis(format!(
            "A_n(0) != 0 for some n != 0 (violation {:.3e})",
            rep.fact_violation
        )));
    }
    let bsup_ok = rep.boundary_sup.iter().all(|&b| b < 1.0);
    let margin_ok = rep.condition_margin.iter().all(|&c| c > 0.0);
    let nonneg_ok = series.m() == 1 && !rep.has_negative_modes[0];
    match requested {
        None => match rep.verdict {
            Verdict::Thm12 => Ok(ModeSign::Nonneg),
            Verdict::Thm11 | Verdict::Thm13 => Ok(ModeSign::TwoSided),
            Verdict::None => Err(LabError::Hypothesis(format!(
                "no theorem applies (boundary sup {:?}, margin {:?})",
                rep.boundary_sup, rep.condition_margin
            ))),
        },
        Some(ModeSign::TwoSided) if bsup_ok && margin_ok => Ok(ModeSign::TwoSided),
        Some(ModeSign::Nonneg) if bsup_ok && nonneg_ok => Ok(ModeSign::Nonneg),
        Some(sign) => Err(LabError::Hypothesis(format!(
            "{sign:?} construction needs boundary sup < 1 and {}",
            if sign == ModeSign::TwoSided {
                "a positive mode condition margin"
            } else {
                "m = 1 with no negative modes"
            }
        ))),
    }
}

/// Dense radii in `(0, top]`, geometric over six decades.
fn dense_radii(top: f64) -> Vec<f64> {
    let n = 6 * DENSE_POINTS;
    (0..=n)
        .map(|i| top * 10f64.powf(-6.0 * (1.0 - i as f64 / n as f64)))
        .collect()
}

/// Smallest `rho` (halving from 1/4) with `|g(r)| <= budget` on `[0, 2 rho]`.
fn quiet_radius(g: impl Fn(f64) -> f64, budget: f64) -> Result<f64> {
    let mut rho = 0.25;
    while rho > 1e-12 {
        let ok = (0..=256).all(|i| g(2.0 * rho * i as f64 / 256.0) <= budget);
        if ok {
            return Ok(rho);
        }
        rho *= 0.5;
    }
    Err(LabError::Resolution("no flat neighbourhood of 0 within budget".into()))
}

fn flat_profile(fit: MollifiedProfile, switch: SmoothSwitch, power: u32, anchor: Complex64) -> Profile {
    Profile::Smooth(SmoothProfile {
        fit,
        switch: Some(switch),
        power,
        anchor,
    })
}

fn derivative_estimates(f: impl Fn(f64) -> Complex64, h: f64) -> Vec<f64> {
    (1..=K_MAX)
        .map(|k| {
            let re = forward_derivative(|r| f(r).re, 0.0, k, h);
            let im = forward_derivative(|r| f(r).im, 0.0, k, h);
            re.hypot(im)
        })
        .collect()
}

/// Smooth fit of `weight * A(r) / r^power` on `nodes`: the closed form itself
/// when the input profile is one, otherwise a kernel fit checked between nodes.
fn fit_mode(
    src: &Profile,
    weight: f64,
    power: i32,
    nodes: &[f64],
    values: &[Complex64],
    budget: f64,
) -> Result<MollifiedProfile> {
    match src {
        Profile::Expr(e) => Ok(exact_profile(nodes, e.clone(), weight, power)),
        _ => mollify_against(nodes, values, |r| src.value_over_power(r, power) * weight, budget),
    }
}

/// The construction pipeline: Fejer means, then per-mode smoothing.
pub fn build_smooth_approximant(
    series: &RadialModeSeries,
    epsilon: f64,
    mode_sign: Option<ModeSign>,
) -> Result<SmoothApproximant> {
    if !(epsilon > 0.0) {
        return Err(LabError::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let sign = resolve_mode_sign(series, mode_sign)?;
    let rep = classify(series);
    let bsup = rep.boundary_sup.iter().copied().fold(0.0, f64::max);
    let eta = match sign {
        ModeSign::TwoSided => {
            let margin = rep.condition_margin.iter().copied().fold(f64::INFINITY, f64::min);
            0.5 * (1.0 - bsup).min(margin)
        }
        ModeSign::Nonneg => 0.5 * (1.0 - bsup),
    };
    let delta = epsilon.min(eta);
    let fejer = fejer_uniform_degree(series, delta / 2.0)?;
    let big_n = fejer.degree;
    let per_mode_budget = delta / (2.0 * (2 * big_n + 1) as f64);
    let b = per_mode_budget / 2.0;
    let r0 = b;
    let nodes = &fejer.radii;
    let dense = check_points(nodes);

    let mut components = Vec::with_capacity(series.m());
    let mut flatness = Vec::new();
    let mut err_neg: f64 = 0.0;
    let mut err_pos_inner: f64 = 0.0;
    let mut err_pos_outer: f64 = 0.0;
    let mut err_zero: f64 = 0.0;

    for (j, modes) in fejer.cesaro_profiles.iter().enumerate() {
        let mut out: BTreeMap<i32, Profile> = BTreeMap::new();
        for (&n, a) in modes {
            if a.iter().all(|v| *v == ZERO) {
                continue;
            }
            let k = n.unsigned_abs();
            let src = &series.components[j][&n];
            let w = fejer.weight(n);
            let reference = |r: f64| series.coefficient(j, n, r) * w;
            let achieved = |p: &Profile| {
                dense
                    .iter()
                    .map(|&r| (p.value(r) - reference(r)).norm())
                    .fold(0.0, f64::max)
            };
            let split = |p: &Profile, inner: &mut f64, outer: &mut f64| {
                for &r in &dense {
                    let e = (p.value(r) - reference(r)).norm();
                    if r <= r0 {
                        *inner = inner.max(e);
                    } else {
                        *outer = outer.max(e);
                    }
                }
            };
            if n < 0 {
                let fit = fit_mode(src, w, 0, nodes, a, b)?;
                // Largest grid radius below which |a_{-j}| stays under b.
                let mut r_flat = 0.0;
                for (&r, v) in nodes.iter().zip(a).skip(1) {
                    if v.norm() >= b {
                        break;
                    }
                    r_flat = r;
                }
                if r_flat == 0.0 {
                    r_flat = 0.5 * nodes[1] * (b / a[1].norm()).min(1.0);
                }
                let switch = SmoothSwitch::new(0.0, r_flat)?;
                let p = flat_profile(fit, switch, 0, ZERO);
                err_neg = err_neg.max(achieved(&p));
                flatness.push(FlatnessRecord {
                    component: j,
                    n,
                    derivatives: derivative_estimates(|r| p.value(r), r_flat / 1000.0),
                });
                out.insert(n, p);
            } else if n == 0 {
                let fit = fit_mode(src, w, 0, nodes, a, b)?;
                let origin = fit.value(0.0);
                let rho = quiet_radius(|r| (fit.value(r) - origin).norm(), b)?;
                let p = flat_profile(fit, SmoothSwitch::new(rho, 2.0 * rho)?, 0, origin);
                err_zero = err_zero.max(achieved(&p));
                flatness.push(FlatnessRecord {
                    component: j,
                    n,
                    derivatives: derivative_estimates(|r| p.value(r) - origin, rho / 1000.0),
                });
                out.insert(n, p);
            } else if sign == ModeSign::TwoSided {
                // Smooth alpha_j = a_j / r^j, glued in over [R0/2, R0], shrunk by
                // (1 - kappa) so the ratio bound below R0 holds strictly.
                let sup_a = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
                let kappa = (b / (4.0 * sup_a)).min(0.5);
                let inner: Vec<f64> = nodes[1..].to_vec();
                let alpha: Vec<Complex64> = inner
                    .iter()
                    .zip(&a[1..])
                    .map(|(&r, &v)| v * (1.0 - kappa) / r.powi(k as i32))
                    .collect();
                let fit = fit_mode(src, w * (1.0 - kappa), k as i32, &inner, &alpha, b)?;
                let switch = SmoothSwitch::new(r0 / 2.0, r0)?;
                let p = flat_profile(fit, switch, k, ZERO);
                split(&p, &mut err_pos_inner, &mut err_pos_outer);
                flatness.push(FlatnessRecord {
                    component: j,
                    n,
                    derivatives: derivative_estimates(|r| p.value_over_power(r.max(1e-300), n), r0 / 2000.0),
                });
                out.insert(n, p);
            } else {
                let fit = fit_mode(src, w, 0, nodes, a, b)?;
                let rho = quiet_radius(|r| fit.value(r).norm(), b)?;
                let p = flat_profile(fit, SmoothSwitch::new(rho, 2.0 * rho)?, 0, ZERO);
                split(&p, &mut err_pos_inner, &mut err_pos_outer);
                out.insert(n, p);
            }
        }
        components.push(out);
    }

    let ledger = BudgetLedger {
        epsilon,
        eta,
        delta,
        degree: big_n,
        r0,
        per_mode_budget,
        flat_order_checked: K_MAX,
        achieved: vec![
            StepRecord {
                step: "fejer".into(),
                achieved: fejer.achieved_sup_error,
                allowed: delta / 2.0,
            },
            StepRecord {
                step: "negative_modes".into(),
                achieved: err_neg,
                allowed: per_mode_budget,
            },
            StepRecord {
                step: "positive_inner".into(),
                achieved: err_pos_inner,
                allowed: per_mode_budget,
            },
            StepRecord {
                step: "positive_outer".into(),
                achieved: err_pos_outer,
                allowed: per_mode_budget,
            },
            StepRecord {
                step: "zero_mode".into(),
                achieved: err_zero,
                allowed: per_mode_budget,
            },
        ],
    };
    let approx = SmoothApproximant {
        series: RadialModeSeries::new(series.grid.clone(), components)?,
        ledger,
        mode_sign: sign,
        flatness,
    };
    if let Some(step) = approx.ledger.achieved.iter().find(|s| s.achieved > s.allowed) {
        return Err(LabError::Construction {
            budget: step.step.clone(),
            slack: step.allowed - step.achieved,
        });
    }
    let report = verify_approximant(series, &approx);
    if let Some(fam) = report.worst() {
        if !report.pass {
            return Err(LabError::Construction {
                budget: fam.name.clone(),
                slack: fam.worst_slack,
            });
        }
    }
    if !approx.flatness_ok() {
        return Err(LabError::Construction {
            budget: "flatness".into(),
            slack: -1.0,
        });
    }
    Ok(approx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyCheck {
    pub name: String,
    /// Smallest (bound - value) over the checked points; negative means violated.
    pub worst_slack: f64,
    pub applicable: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub families: Vec<FamilyCheck>,
    pub sup_error: f64,
    pub boundary_sup: f64,
    pub pass: bool,
}

impl VerifyReport {
    pub fn family(&self, name: &str) -> Option<&FamilyCheck> {
        self.families.iter().find(|f| f.name == name)
    }

    /// Family with the smallest slack.
    pub fn worst(&self) -> Option<&FamilyCheck> {
        self.families
            .iter()
            .min_by(|a, b| a.worst_slack.total_cmp(&b.worst_slack))
    }
}

struct Tally {
    name: &'static str,
    slack: f64,
    applicable: bool,
}

impl Tally {
    fn new(name: &'static str, applicable: bool) -> Self {
        Self {
            name,
            slack: f64::INFINITY,
            applicable,
        }
    }

    fn push(&mut self, bound: f64, value: f64) {
        self.slack = self.slack.min(bound - value);
    }

    fn finish(self) -> FamilyCheck {
        let pass = !self.applicable || self.slack >= -SLACK_TOL;
        FamilyCheck {
            name: self.name.into(),
            worst_slack: self.slack,
            applicable: self.applicable,
            pass,
        }
    }
}

/// Check the eight inequality families and the two global conditions.
pub fn verify_approximant(f: &RadialModeSeries, g: &SmoothApproximant) -> VerifyReport {
    let ledger = &g.ledger;
    let big_n = ledger.degree;
    let r0 = ledger.r0;
    let half_n_budget = ledger.delta * big_n as f64 / (2.0 * (2 * big_n + 1) as f64);
    let two_sided = g.mode_sign == ModeSign::TwoSided;
    let gs = &g.series;

    let nodes = f.grid.nodes_with_origin();
    let inner_nodes: Vec<f64> = nodes.iter().copied().filter(|&r| r <= r0).collect();
    let mut inner_dense: Vec<f64> = dense_radii(r0);
    inner_dense.extend(inner_nodes.iter().copied().filter(|&r| r > 0.0));
    let outer_nodes: Vec<f64> = nodes.iter().copied().filter(|&r| r >= r0).collect();

    let mut negbeer = Tally::new("negbeer", true);
    let mut negbee = Tally::new("negbee", true);
    let mut posbeer1 = Tally::new("posbeer1", true);
    let mut posbee1 = Tally::new("posbee1", two_sided);
    let mut posbeer2 = Tally::new("posbeer2", true);
    let mut posbee2 = Tally::new("posbee2", two_sided);
    let mut posbird1 = Tally::new("posbird1", two_sided);
    let mut posbird2 = Tally::new("posbird2", two_sided);

    for j in 0..f.m().min(gs.m()) {
        let a = |n: i32, r: f64| f.coefficient(j, n, r) * cesaro_weight(n, big_n);
        let modes: Vec<i32> = f.components[j]
            .keys()
            .chain(gs.components[j].keys())
            .copied()
            .filter(|n| n.unsigned_abs() as usize <= big_n || gs.components[j].contains_key(n))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let neg: Vec<i32> = modes.iter().copied().filter(|&n| n < 0).collect();
        let pos: Vec<i32> = modes.iter().copied().filter(|&n| n > 0).collect();

        if !two_sided && gs.components[j].keys().any(|&n| n < 0) {
            negbeer.push(0.0, f64::INFINITY);
        }
        for &r in &nodes {
            let (mut lhs, mut lhs2, mut rhs2) = (0.0, 0.0, 0.0);
            for &n in &neg {
                let bn = gs.coefficient(j, n, r);
                let an = a(n, r);
                let p = r.powi(-n);
                lhs += (bn - an).norm();
                lhs2 += bn.norm() * p;
                rhs2 += an.norm() * p;
            }
            if !neg.is_empty() {
                negbeer.push(half_n_budget, lhs);
                negbee.push(rhs2 + half_n_budget, lhs2);
            }
        }

        // sup_s |a_j(s)| / s^j over the grid radii and the dense points below R0.
        let sup_alpha: f64 = pos
            .iter()
            .map(|&n| {
                f.grid
                    .radii()
                    .iter()
                    .chain(&inner_dense)
                    .map(|&r| a(n, r).norm() / r.powi(n))
                    .fold(0.0, f64::max)
            })
            .sum();
        // Sums over an empty set of modes are vacuous and give no slack.
        let has_pos = !pos.is_empty();
        for &r in inner_nodes.iter().filter(|_| has_pos) {
            let lhs: f64 = pos.iter().map(|&n| (gs.coefficient(j, n, r) - a(n, r)).norm()).sum();
            posbeer1.push(half_n_budget, lhs);
        }
        for &r in &outer_nodes {
            if has_pos {
                let lhs: f64 = pos.iter().map(|&n| (gs.coefficient(j, n, r) - a(n, r)).norm()).sum();
                posbeer2.push(half_n_budget, lhs);
            }
            if two_sided {
                let gb: f64 = pos.iter().map(|&n| gs.ratio(j, n, r).norm()).sum();
                let ab: f64 = pos.iter().map(|&n| a(n, r).norm() / r.powi(n)).sum();
                if has_pos {
                    posbee2.push(ab + half_n_budget, gb);
                }
                posbird2.push(1.0, mode_sum(gs, j, r));
            }
        }
        if two_sided {
            for &r in &inner_dense {
                if has_pos {
                    let gb: f64 = pos.iter().map(|&n| gs.ratio(j, n, r).norm()).sum();
                    posbee1.push(sup_alpha, gb);
                }
                posbird1.push(1.0, mode_sum(gs, j, r));
            }
        }
    }

    // |F - G| on the grid and at the origin; sup of |G| on the boundary circle.
    let n_theta = f.grid.n_theta();
    let fv = values_on_grid(f, &nodes, n_theta);
    let gv = values_on_grid(gs, &nodes, n_theta);
    let mut sup_error: f64 = 0.0;
    let mut boundary_sup: f64 = 0.0;
    let last = nodes.len() - 1;
    for j in 0..fv.len().min(gv.len()) {
        for i in 0..nodes.len() {
            for k in 0..n_theta {
                sup_error = sup_error.max((fv[j][i][k] - gv[j][i][k]).norm());
            }
        }
        boundary_sup = gv[j][last].iter().map(|v| v.norm()).fold(boundary_sup, f64::max);
    }

    let mut families: Vec<FamilyCheck> = [
        negbeer, negbee, posbeer1, posbee1, posbeer2, posbee2, posbird1, posbird2,
    ]
    .into_iter()
    .map(Tally::finish)
    .collect();
    let mut sup_tally = Tally::new("sup_error", true);
    sup_tally.push(ledger.epsilon, sup_error);
    let mut sup_fc = sup_tally.finish();
    sup_fc.pass = sup_error < ledger.epsilon;
    let mut bd = Tally::new("boundary_sup", true);
    bd.push(1.0, boundary_sup);
    let mut bd_fc = bd.finish();
    bd_fc.pass = boundary_sup < 1.0;
    families.push(sup_fc);
    families.push(bd_fc);
    let pass = families.iter().all(|f| f.pass);
    VerifyReport {
        families,
        sup_error,
        boundary_sup,
        pass,
    }
}
