//! JSON and CSV output. Every float is written as `{:.16e}`: 17 significant
//! digits, dot decimal, no locale, exact round trip.

use std::io::{self, Write};

use infogeo_core::linalg::{CMatrix, Matrix};
use infogeo_core::spectral::HermitianMatrix;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Map, Value};

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON with fixed-precision floats. Non-finite floats become `null`.
struct FixedPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FixedPrecision<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
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

pub fn write_json(value: &Value, out: &mut dyn Write) -> io::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(&mut *out, FixedPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(io::Error::other)?;
    out.write_all(b"\n")
}

pub fn to_json_string(value: &Value) -> String {
    let mut buf = Vec::new();
    write_json(value, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// A numeric table written as CSV with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn write_csv(&self, out: &mut dyn Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| fmt_f64(*x)))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Column names `prefix_0 .. prefix_{n-1}`.
pub fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}_{i}"))
}

pub fn matrix(m: &Matrix) -> Value {
    json!(m.to_rows())
}

pub fn cmatrix(m: &CMatrix) -> Value {
    let re: Vec<Vec<f64>> = (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)].re).collect()).collect();
    let im: Vec<Vec<f64>> = (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)].im).collect()).collect();
    json!({ "re": re, "im": im })
}

pub fn hermitian(h: &HermitianMatrix) -> Value {
    cmatrix(h.as_cmatrix())
}

/// One tolerance entry for the metadata block.
#[derive(Debug, Clone)]
pub struct Tolerance {
    pub name: &'static str,
    pub value: f64,
    pub default: f64,
}

impl Tolerance {
    pub fn new(name: &'static str, value: Option<f64>, default: f64) -> Self {
        Self { name, value: value.unwrap_or(default), default }
    }
}

/// Metadata recorded with every report: the command, the seed if any, the
/// tolerances in force (flagging overrides) and convention notes.
#[derive(Debug, Clone, Default)]
pub struct Metadata {
    pub command: &'static str,
    pub seed: Option<u64>,
    pub tolerances: Vec<Tolerance>,
    pub notes: Vec<(&'static str, &'static str)>,
}

impl Metadata {
    pub fn new(command: &'static str) -> Self {
        Self { command, ..Self::default() }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn tolerance(mut self, name: &'static str, value: Option<f64>, default: f64) -> Self {
        self.tolerances.push(Tolerance::new(name, value, default));
        self
    }

    pub fn note(mut self, key: &'static str, text: &'static str) -> Self {
        self.notes.push((key, text));
        self
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), json!(self.command));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        if let Some(seed) = self.seed {
            m.insert("seed".into(), json!(seed));
        }
        let tol: Map<String, Value> = self
            .tolerances
            .iter()
            .map(|t| {
                (
                    t.name.to_string(),
                    json!({ "value": t.value, "default": t.default, "overridden": t.value != t.default }),
                )
            })
            .collect();
        m.insert("tolerances".into(), Value::Object(tol));
        let overridden: Vec<&str> = self.tolerances.iter().filter(|t| t.value != t.default).map(|t| t.name).collect();
        m.insert("overridden".into(), json!(overridden));
        for (k, v) in &self.notes {
            m.insert((*k).into(), json!(v));
        }
        Value::Object(m)
    }

    /// Attaches this metadata to a report object under `"metadata"`.
    pub fn wrap(&self, mut body: Value) -> Value {
        if let Value::Object(ref mut m) = body {
            m.insert("metadata".into(), self.to_json());
        }
        body
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        let s = to_json_string(&json!({ "x": 1.0 / 3.0, "n": 3 }));
        assert!(s.contains("3.3333333333333331e-1"), "{s}");
        assert!(s.contains("\"n\": 3"), "{s}");
    }

    #[test]
    fn printed_floats_round_trip() {
        for x in [0.1, 1e-300, 123456.789, -7.5e22, f64::MIN_POSITIVE, 2.0f64.sqrt()] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn non_finite_json_is_null() {
        assert!(to_json_string(&json!({ "x": f64::NAN })).contains("null"));
    }

    #[test]
    fn csv_has_header_and_dot_decimals() {
        let t = Table { header: vec!["t".into(), "x".into()], rows: vec![vec![0.0, 0.5], vec![1.0, -0.25]] };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next().unwrap(), "t,x");
        assert_eq!(s.lines().nth(2).unwrap(), "1.0000000000000000e0,-2.5000000000000000e-1");
    }

    #[test]
    fn overrides_are_recorded() {
        let m = Metadata::new("x").tolerance("tol", Some(1e-6), 1e-10).tolerance("other", None, 1.0).to_json();
        assert_eq!(m["overridden"], json!(["tol"]));
        assert_eq!(m["tolerances"]["other"]["overridden"], json!(false));
    }
}
