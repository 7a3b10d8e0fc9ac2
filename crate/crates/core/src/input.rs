//! Input formats: mode-form JSON and polar sample CSV.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::approximant::{BudgetLedger, FlatnessRecord, ModeSign, SmoothApproximant};
use crate::error::{LabError, Result};
use crate::fourier::modes_from_samples;
use crate::polar::{DiscSample, PolarGrid, Profile, RadialModeSeries};

/// Grid block of the mode form; defaults to 64 Chebyshev radii by 256 angles.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_radii: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_theta: Option<usize>,
}

impl GridSpec {
    pub fn build(&self) -> Result<PolarGrid> {
        let n_theta = self.n_theta.unwrap_or(256);
        match (&self.radii, self.n_radii) {
            (Some(_), Some(_)) => Err(LabError::Parse("grid: give either radii or n_radii, not both".into())),
            (Some(r), None) => PolarGrid::new(r.clone(), n_theta),
            (None, n) => PolarGrid::chebyshev(n.unwrap_or(64), n_theta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub n: i32,
    pub profile: Profile,
}

/// The mode-form document. Approximant files add `mode_sign`, `ledger`
/// and `flatness`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeForm {
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    pub components: Vec<Vec<ModeEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_sign: Option<ModeSign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ledger: Option<BudgetLedger>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flatness: Option<Vec<FlatnessRecord>>,
}

impl ModeForm {
    pub fn from_series(series: &RadialModeSeries) -> Self {
        let grid = series.grid.clone();
        Self {
            m: series.m(),
            grid: Some(GridSpec {
                n_radii: None,
                radii: Some(grid.radii().to_vec()),
                n_theta: Some(grid.n_theta()),
            }),
            components: series
                .components
                .iter()
                .map(|c| c.iter().map(|(&n, p)| ModeEntry { n, profile: p.clone() }).collect())
                .collect(),
            mode_sign: None,
            ledger: None,
            flatness: None,
        }
    }

    pub fn from_approximant(g: &SmoothApproximant) -> Self {
        Self {
            mode_sign: Some(g.mode_sign),
            ledger: Some(g.ledger.clone()),
            flatness: Some(g.flatness.clone()),
            ..Self::from_series(&g.series)
        }
    }

    pub fn series(&self) -> Result<RadialModeSeries> {
        if self.m == 0 {
            return Err(LabError::Parse("field `m`: must be >= 1".into()));
        }
        if self.components.len() != self.m {
            return Err(LabError::Parse(format!(
                "field `components`: expected {} components, found {}",
                self.m,
                self.components.len()
            )));
        }
        let grid = self.grid.clone().unwrap_or_default().build()?;
        let mut comps = Vec::with_capacity(self.m);
        for (j, entries) in self.components.iter().enumerate() {
            let mut map = BTreeMap::new();
            for (i, e) in entries.iter().enumerate() {
                if map.insert(e.n, e.profile.clone()).is_some() {
                    return Err(LabError::Parse(format!(
                        "field `components[{j}][{i}].n`: duplicate mode {}",
                        e.n
                    )));
                }
            }
            comps.push(map);
        }
        RadialModeSeries::new(grid, comps)
    }

    /// The approximant stored in this document, if it carries a ledger.
    pub fn approximant(&self) -> Result<SmoothApproximant> {
        let ledger = self
            .ledger
            .clone()
            .ok_or_else(|| LabError::Parse("field `ledger`: missing (not an approximant file)".into()))?;
        Ok(SmoothApproximant {
            series: self.series()?,
            ledger,
            mode_sign: self.mode_sign.unwrap_or(ModeSign::TwoSided),
            flatness: self.flatness.clone().unwrap_or_default(),
        })
    }
}

pub fn parse_mode_form(text: &str) -> Result<ModeForm> {
    serde_json::from_str(text).map_err(|e| LabError::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
}

/// Angle tolerance when matching CSV angles to `2 pi k / n_theta`.
const THETA_TOL: f64 = 1e-9;

/// Parses the sample CSV (`r,theta,j,re,im`) into a [`DiscSample`].
pub fn parse_sample_csv(text: &str) -> Result<DiscSample> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| LabError::Parse(format!("line 1: {e}")))?
        .clone();
    let want = ["r", "theta", "j", "re", "im"];
    if headers.len() != want.len() || headers.iter().zip(want).any(|(h, w)| h != w) {
        return Err(LabError::Parse(format!(
            "line 1: header must be r,theta,j,re,im, found {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows: Vec<(f64, f64, usize, Complex64, u64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            LabError::Parse(format!("line {line}: {e}"))
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            let v: f64 = rec[i].parse().map_err(|_| {
                LabError::Parse(format!("line {line}, field `{}`: not a number: {:?}", want[i], &rec[i]))
            })?;
            if !v.is_finite() {
                return Err(LabError::Parse(format!("line {line}, field `{}`: not finite", want[i])));
            }
            Ok(v)
        };
        let j: usize = rec[2]
            .parse()
            .map_err(|_| LabError::Parse(format!("line {line}, field `j`: not a component index: {:?}", &rec[2])))?;
        rows.push((num(0)?, num(1)?, j, Complex64::new(num(3)?, num(4)?), line));
    }
    if rows.is_empty() {
        return Err(LabError::Parse("no sample rows".into()));
    }

    let mut radii: Vec<f64> = rows.iter().map(|r| r.0).collect();
    radii.sort_by(|a, b| a.total_cmp(b));
    radii.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    let m = rows.iter().map(|r| r.2).max().unwrap_or(0) + 1;
    let mut thetas: Vec<f64> = rows.iter().map(|r| r.1.rem_euclid(2.0 * PI)).collect();
    thetas.sort_by(|a, b| a.total_cmp(b));
    thetas.dedup_by(|a, b| (*a - *b).abs() <= THETA_TOL);
    let n_theta = thetas.len();
    let grid = PolarGrid::new(radii.clone(), n_theta)?;

    let mut table = vec![None; radii.len() * n_theta * m];
    for &(r, theta, j, v, line) in &rows {
        let i = radii
            .binary_search_by(|x| {
                if (x - r).abs() <= 1e-12 {
                    std::cmp::Ordering::Equal
                } else {
                    x.total_cmp(&r)
                }
            })
            .map_err(|_| LabError::Parse(format!("line {line}, field `r`: unmatched radius {r}")))?;
        let pos = theta.rem_euclid(2.0 * PI) * n_theta as f64 / (2.0 * PI);
        let k = pos.round() as usize % n_theta;
        if (pos - pos.round()).abs() * 2.0 * PI / n_theta as f64 > THETA_TOL {
            return Err(LabError::Parse(format!(
                "line {line}, field `theta`: {theta} is not on the equispaced grid of {n_theta} angles"
            )));
        }
        let slot = &mut table[(i * n_theta + k) * m + j];
        if slot.is_some() {
            return Err(LabError::Parse(format!(
                "line {line}: duplicate sample (r = {r}, theta = {theta}, j = {j})"
            )));
        }
        *slot = Some(v);
    }
    let values = table
        .into_iter()
        .enumerate()
        .map(|(idx, v)| {
            v.ok_or_else(|| {
                let (i, rest) = (idx / (n_theta * m), idx % (n_theta * m));
                LabError::Parse(format!(
                    "missing sample at r = {}, theta index {}, j = {}",
                    radii[i],
                    rest / m,
                    rest % m
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DiscSample::new(grid, m, values)
}

pub fn write_sample_csv<W: std::io::Write>(out: W, sample: &DiscSample) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "theta", "j", "re", "im"]).map_err(csv_io)?;
    let g = &sample.grid;
    for (i, &r) in g.radii().iter().enumerate() {
        for k in 0..g.n_theta() {
            for j in 0..sample.m {
                let v = sample.get(i, k, j);
                w.write_record([
                    format!("{r:.17e}"),
                    format!("{:.17e}", g.theta(k)),
                    j.to_string(),
                    format!("{:.17e}", v.re),
                    format!("{:.17e}", v.im),
                ])
                .map_err(csv_io)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> LabError {
    LabError::Io(std::io::Error::other(e.to_string()))
}

/// What an input file turned out to be.
#[derive(Debug, Clone)]
pub enum LoadedInput {
    Modes(ModeForm),
    Samples(DiscSample),
}

impl LoadedInput {
    /// JSON if the first non-blank byte is `{`, sample CSV otherwise.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Ok(Self::Modes(parse_mode_form(text)?))
        } else {
            Ok(Self::Samples(parse_sample_csv(text)?))
        }
    }

    pub fn series(&self) -> Result<RadialModeSeries> {
        match self {
            Self::Modes(f) => f.series(),
            Self::Samples(s) => modes_from_samples(s, s.grid.max_tracked_mode()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HALF_Z: &str = r#"{"m": 1, "components": [[
        {"n": 1, "profile": {"kind": "expr", "type": "polynomial", "coeffs": [[0, 0], [0.5, 0]]}}
    ]]}"#;

    #[test]
    fn mode_form_parses() {
        let f = parse_mode_form(HALF_Z).unwrap();
        let s = f.series().unwrap();
        assert_eq!(s.m(), 1);
        assert_eq!(s.grid.n_theta(), 256);
        let z = Complex64::new(0.3, 0.4);
        assert!((s.value_at_point(z, 0) - 0.5 * z).norm() < 1e-15);
    }

    #[test]
    fn mode_form_errors_carry_context() {
        let bad = HALF_Z.replace("\"n\": 1", "\"n\": \"one\"");
        let e = parse_mode_form(&bad).unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        let dup = r#"{"m": 1, "components": [[
            {"n": 1, "profile": {"kind": "expr", "type": "polynomial", "coeffs": [[0, 0]]}},
            {"n": 1, "profile": {"kind": "expr", "type": "polynomial", "coeffs": [[0, 0]]}}
        ]]}"#;
        let e = parse_mode_form(dup).unwrap().series().unwrap_err().to_string();
        assert!(e.contains("components[0][1].n"), "{e}");
        let wrong_m = HALF_Z.replace("\"m\": 1", "\"m\": 2");
        assert!(parse_mode_form(&wrong_m)
            .unwrap()
            .series()
            .unwrap_err()
            .to_string()
            .contains("components"));
    }

    #[test]
    fn csv_round_trip() {
        let grid = PolarGrid::chebyshev(16, 8).unwrap();
        let sample = DiscSample::from_fn(grid, 2, |z| vec![0.5 * z, z.conj() * 0.25]).unwrap();
        let mut buf = Vec::new();
        write_sample_csv(&mut buf, &sample).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back = parse_sample_csv(&text).unwrap();
        assert_eq!(back.grid, sample.grid);
        for i in 0..16 {
            for j in 0..2 {
                for (a, b) in back.slice(i, j).iter().zip(sample.slice(i, j)) {
                    assert!((a - b).norm() < 1e-15);
                }
            }
        }
        assert!(matches!(LoadedInput::parse(&text).unwrap(), LoadedInput::Samples(_)));
    }

    #[test]
    fn csv_errors_carry_line() {
        let e = parse_sample_csv("r,theta,x,re,im\n").unwrap_err().to_string();
        assert!(e.contains("line 1"), "{e}");
        let e = parse_sample_csv("r,theta,j,re,im\n0.5,0,0,abc,0\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("line 2") && e.contains("re"), "{e}");
        let grid = PolarGrid::chebyshev(16, 8).unwrap();
        let sample = DiscSample::from_fn(grid, 1, |z| vec![z]).unwrap();
        let mut buf = Vec::new();
        write_sample_csv(&mut buf, &sample).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated: String = text
            .lines()
            .take(text.lines().count() - 1)
            .map(|l| format!("{l}\n"))
            .collect();
        let e = parse_sample_csv(&truncated).unwrap_err().to_string();
        assert!(e.contains("missing sample"), "{e}");
    }
}
