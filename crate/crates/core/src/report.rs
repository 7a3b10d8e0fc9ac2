//! Machine-readable run reports.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

pub const SCHEMA: &str = "hartogs-lab/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatus {
    pub pass: bool,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub tool_version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ledger: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kontinuitaetssatz: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pseudoconvexity: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub examples: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension: Option<Value>,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            schema: SCHEMA.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            input_digest: None,
            hypothesis: None,
            ledger: None,
            verify: None,
            kontinuitaetssatz: None,
            pseudoconvexity: None,
            examples: None,
            extension: None,
            status: RunStatus {
                pass: true,
                exit_code: 0,
                failure: None,
            },
            timings: None,
        }
    }

    pub fn with_input(mut self, bytes: &[u8]) -> Self {
        self.input_digest = Some(digest(bytes));
        self
    }

    pub fn fail(&mut self, err: &LabError) {
        self.status = RunStatus {
            pass: false,
            exit_code: err.exit_code(),
            failure: Some(err.to_string()),
        };
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rep: Self = serde_json::from_str(text)
            .map_err(|e| LabError::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        if rep.schema != SCHEMA {
            return Err(LabError::Parse(format!(
                "field `schema`: expected {SCHEMA}, found {}",
                rep.schema
            )));
        }
        Ok(rep)
    }
}

/// Any serializable block as a JSON value.
pub fn block<T: Serialize>(value: &T) -> Result<Value> {
    serde_json::to_value(value).map_err(|e| LabError::Parse(format!("serialize: {e}")))
}

/// `sha256:<hex>` of the raw input bytes.
pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

/// Pretty JSON writer that prints every float with 17 significant digits.
pub struct Fixed17<'a>(PrettyFormatter<'a>);

impl Default for Fixed17<'_> {
    fn default() -> Self {
        Fixed17(PrettyFormatter::new())
    }
}

impl Formatter for Fixed17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", format_f64(value))
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// `d.dddddddddddddddde±x`: 17 significant digits, exact round trip.
pub fn format_f64(value: f64) -> String {
    if value == 0.0 {
        return if value.is_sign_negative() {
            "-0.0".into()
        } else {
            "0.0".into()
        };
    }
    format!("{value:.16e}")
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17::default());
    value
        .serialize(&mut ser)
        .map_err(|e| LabError::Parse(format!("serialize: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Named wall-clock sections, reported only on request.
#[derive(Debug, Default)]
pub struct Timings {
    sections: BTreeMap<String, f64>,
}

impl Timings {
    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.sections.entry(name.into()).or_default() += start.elapsed().as_secs_f64();
        out
    }

    pub fn into_map(self) -> BTreeMap<String, f64> {
        self.sections
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_17_digits_and_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 123456.789, f64::MIN_POSITIVE, 1e300] {
            let s = format_f64(v);
            let digits = s
                .split('e')
                .next()
                .unwrap()
                .chars()
                .filter(|c| c.is_ascii_digit())
                .count();
            assert_eq!(digits, 17, "{s}");
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_f64(0.0), "0.0");
    }

    #[test]
    fn report_round_trips() {
        let mut rep = RunReport::new("analyze").with_input(b"abc");
        rep.hypothesis = Some(serde_json::json!({"margin": 0.125, "values": [1.0 / 3.0, 2.0]}));
        rep.fail(&LabError::Hypothesis("no theorem".into()));
        let text = rep.to_json().unwrap();
        let back = RunReport::from_json(&text).unwrap();
        assert_eq!(back, rep);
        assert_eq!(back.to_json().unwrap(), text);
        assert!(text.contains("\"schema\": \"hartogs-lab/1\""));
        assert_eq!(
            rep.input_digest.as_deref(),
            Some("sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad")
        );
        assert_eq!(back.status.exit_code, 3);
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let text = RunReport::new("x")
            .to_json()
            .unwrap()
            .replace("hartogs-lab/1", "other/2");
        assert!(matches!(RunReport::from_json(&text), Err(LabError::Parse(_))));
    }
}
