//! Angular DFT per radius and uniform Fejer summation.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::polar::{DiscSample, PolarGrid, Profile, RadialModeSeries, SampledProfile, TOL_FFT};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn mode_slot(n: i32, n_theta: usize) -> usize {
    n.rem_euclid(n_theta as i32) as usize
}

/// Angular DFT at every grid radius; modes `|n| <= max_mode`.
///
/// Modes whose sup over the grid is below `TOL_FFT * max(1, sup|F|)` are
/// dropped, so DFT round-off never enters later ratios `A_n(r)/r^n`.
pub fn modes_from_samples(sample: &DiscSample, max_mode: usize) -> Result<RadialModeSeries> {
    let grid = &sample.grid;
    let n_theta = grid.n_theta();
    let limit = n_theta / 2 - 1;
    if max_mode > limit {
        return Err(LabError::Aliasing { max_mode, limit });
    }
    let fft = FftPlanner::new().plan_fft_forward(n_theta);
    let scale = 1.0 / n_theta as f64;
    let nodes = grid.nodes_with_origin();

    let mut components = Vec::with_capacity(sample.m);
    for j in 0..sample.m {
        let spectra: Vec<Vec<Complex64>> = (0..grid.radii().len())
            .into_par_iter()
            .map(|i| {
                let mut buf = sample.slice(i, j);
                fft.process(&mut buf);
                buf.iter_mut().for_each(|c| *c *= scale);
                buf
            })
            .collect();
        let sup_f = (0..grid.radii().len())
            .flat_map(|i| (0..n_theta).map(move |k| (i, k)))
            .map(|(i, k)| sample.get(i, k, j).norm())
            .fold(0.0, f64::max);
        let floor = TOL_FFT * sup_f.max(1.0);

        let mut modes = BTreeMap::new();
        let max = max_mode as i32;
        for n in -max..=max {
            let slot = mode_slot(n, n_theta);
            let col: Vec<Complex64> = spectra.iter().map(|s| s[slot]).collect();
            if col.iter().all(|c| c.norm() < floor) {
                continue;
            }
            // Origin value: zero by the Fact for n != 0; for n = 0 the
            // mean at the smallest radius.
            let origin = if n == 0 { col[0] } else { ZERO };
            let values: Vec<Complex64> = std::iter::once(origin).chain(col).collect();
            modes.insert(n, Profile::Samples(SampledProfile::new(nodes.clone(), values)?));
        }
        components.push(modes);
    }
    RadialModeSeries::new(grid.clone(), components)
}

/// Evaluate a series on every node of `grid`.
pub fn samples_from_modes(series: &RadialModeSeries, grid: &PolarGrid) -> DiscSample {
    let m = series.m();
    let rows: Vec<Vec<Complex64>> = grid
        .radii()
        .par_iter()
        .map(|&r| {
            let mut row = Vec::with_capacity(grid.n_theta() * m);
            for k in 0..grid.n_theta() {
                let th = grid.theta(k);
                for j in 0..m {
                    row.push(series.value_at(r, th, j));
                }
            }
            row
        })
        .collect();
    DiscSample::new(grid.clone(), m, rows.concat()).expect("series values are finite")
}

/// Outcome of the Fejer degree search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FejerResult {
    pub degree: usize,
    /// Radii of the sampled Cesaro profiles (origin first).
    pub radii: Vec<f64>,
    /// `a_{jn}(r) = (1 - |n|/(N+1)) A_{jn}(r)` per component and mode.
    pub cesaro_profiles: Vec<BTreeMap<i32, Vec<Complex64>>>,
    pub achieved_sup_error: f64,
    pub target: f64,
}

impl FejerResult {
    pub fn weight(&self, n: i32) -> f64 {
        cesaro_weight(n, self.degree)
    }
}

pub fn cesaro_weight(n: i32, degree: usize) -> f64 {
    let k = n.unsigned_abs() as f64;
    let d = degree as f64 + 1.0;
    if k >= d {
        0.0
    } else {
        1.0 - k / d
    }
}

/// Tabulated `A_{jn}(r)` at the grid radii (origin excluded).
struct ModeTable {
    /// Per component: (n, values at grid radii).
    cols: Vec<Vec<(i32, Vec<Complex64>)>>,
}

impl ModeTable {
    fn new(series: &RadialModeSeries) -> Self {
        Self {
            cols: series.tabulate(series.grid.radii()),
        }
    }
}

/// Values `F_j(r_i e^{i theta_k})` as `[j][i][k]` by inverse FFT.
///
/// Modes must satisfy `|n| < n_theta / 2`.
pub fn values_on_grid(series: &RadialModeSeries, radii: &[f64], n_theta: usize) -> Vec<Vec<Vec<Complex64>>> {
    let fft = FftPlanner::new().plan_fft_inverse(n_theta);
    series
        .tabulate(radii)
        .into_iter()
        .map(|col| {
            (0..radii.len())
                .into_par_iter()
                .map(|i| {
                    let mut buf = vec![ZERO; n_theta];
                    for (n, vals) in &col {
                        buf[mode_slot(*n, n_theta)] += vals[i];
                    }
                    fft.process(&mut buf);
                    buf
                })
                .collect()
        })
        .collect()
}

/// `sup |F - sigma_N F|` over grid radii and angles.
pub fn fejer_sup_error(series: &RadialModeSeries, degree: usize) -> f64 {
    fejer_error_on_table(series, &ModeTable::new(series), degree)
}

fn fejer_error_on_table(series: &RadialModeSeries, table: &ModeTable, degree: usize) -> f64 {
    let n_theta = series.grid.n_theta();
    let fft = FftPlanner::new().plan_fft_inverse(n_theta);
    let n_radii = series.grid.radii().len();
    (0..n_radii)
        .into_par_iter()
        .map(|i| {
            let mut sup: f64 = 0.0;
            for col in &table.cols {
                let mut buf = vec![ZERO; n_theta];
                for (n, vals) in col {
                    buf[mode_slot(*n, n_theta)] += vals[i] * (1.0 - cesaro_weight(*n, degree));
                }
                fft.process(&mut buf);
                sup = buf.iter().map(|c| c.norm()).fold(sup, f64::max);
            }
            sup
        })
        .reduce(|| 0.0, f64::max)
}

/// Smallest Fejer degree (doubling, then bisection) meeting `target` uniformly on the grid.
pub fn fejer_uniform_degree(series: &RadialModeSeries, target: f64) -> Result<FejerResult> {
    if !(target > 0.0) {
        return Err(LabError::Domain(format!("Fejer target must be positive, got {target}")));
    }
    let limit = series.grid.n_theta() / 2 - 1;
    if series.degree_bound() > limit {
        return Err(LabError::Aliasing {
            max_mode: series.degree_bound(),
            limit,
        });
    }
    let table = ModeTable::new(series);
    let err = |n: usize| fejer_error_on_table(series, &table, n);

    let mut best = (0, err(0));
    if best.1 >= target {
        let mut lo = 0;
        let mut hi = 1;
        loop {
            let e = err(hi);
            if e < target {
                best = (hi, e);
                break;
            }
            if hi >= limit {
                return Err(LabError::Resolution(format!(
                    "Fejer degree exceeds n_theta/2 - 1 = {limit} before reaching target {target:e} \
                     (error {e:e}); refine the angular grid"
                )));
            }
            lo = hi;
            hi = (hi * 2).min(limit);
        }
        while best.0 - lo > 1 {
            let mid = (lo + best.0) / 2;
            let e = err(mid);
            if e < target {
                best = (mid, e);
            } else {
                lo = mid;
            }
        }
    }

    let degree = best.0;
    let radii = series.grid.nodes_with_origin();
    let cesaro_profiles = (0..series.m())
        .map(|j| {
            series.components[j]
                .keys()
                .filter(|n| n.unsigned_abs() as usize <= degree)
                .map(|&n| {
                    let w = cesaro_weight(n, degree);
                    let vals = radii.iter().map(|&r| series.coefficient(j, n, r) * w).collect();
                    (n, vals)
                })
                .collect()
        })
        .collect();
    Ok(FejerResult {
        degree,
        radii,
        cesaro_profiles,
        achieved_sup_error: best.1,
        target,
    })
}
