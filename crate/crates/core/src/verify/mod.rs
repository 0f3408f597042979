//! Pass/fail checks of the classical and quantum scattering properties.
//!
//! Every check takes a config whose `Default` is the acceptance setting and
//! whose `control` flag switches to a deliberately broken variant that must fail.

mod classical;
mod quantum_checks;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use classical::*;
pub use quantum_checks::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Max,
    StrictMax,
    Min,
    StrictMin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub label: String,
    #[serde(with = "lenient_f64")]
    pub value: f64,
    #[serde(with = "lenient_f64")]
    pub tolerance: f64,
    pub bound: Bound,
}

impl Measurement {
    pub fn passes(&self) -> bool {
        match self.bound {
            Bound::Max => self.value <= self.tolerance,
            Bound::StrictMax => self.value < self.tolerance,
            Bound::Min => self.value >= self.tolerance,
            Bound::StrictMin => self.value > self.tolerance,
        }
    }
}

/// JSON has no infinities or NaN; those are written as the strings `inf`, `-inf`, `nan`.
mod lenient_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(serde::de::Error::custom(format!("expected a number, got '{t}'"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

/// A plot-ready series emitted next to a report.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v:e}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub status: Status,
    pub measured: Vec<Measurement>,
    pub artifacts: Vec<String>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl CheckReport {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            status: Status::Fail,
            measured: Vec::new(),
            artifacts: Vec::new(),
            notes: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn measure(&mut self, label: impl Into<String>, value: f64, tolerance: f64, bound: Bound) {
        self.measured.push(Measurement {
            label: label.into(),
            value,
            tolerance,
            bound,
        });
        self.refresh();
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// `Pass` iff there is at least one measurement and all of them hold.
    pub fn refresh(&mut self) {
        self.status = if !self.measured.is_empty() && self.measured.iter().all(Measurement::passes) {
            Status::Pass
        } else {
            Status::Fail
        };
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Loosens (`factor > 1`) or tightens every tolerance.
    pub fn scale_tolerances(&mut self, factor: f64) {
        for m in &mut self.measured {
            match m.bound {
                Bound::Max | Bound::StrictMax => m.tolerance *= factor,
                Bound::Min | Bound::StrictMin => m.tolerance /= factor,
            }
        }
        self.refresh();
    }

    /// One line per measurement.
    pub fn summary(&self) -> String {
        let mut out = format!("{} [{}]", self.name, if self.passed() { "pass" } else { "fail" });
        for m in &self.measured {
            let op = match m.bound {
                Bound::Max => "<=",
                Bound::StrictMax => "<",
                Bound::Min => ">=",
                Bound::StrictMin => ">",
            };
            let _ = write!(
                out,
                "\n  {} {}: {:.3e} {} {:.3e}",
                if m.passes() { "ok  " } else { "FAIL" },
                m.label,
                m.value,
                op,
                m.tolerance
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_follows_measurements() {
        let mut r = CheckReport::new("x");
        assert!(!r.passed());
        r.measure("a", 1.0, 2.0, Bound::Max);
        assert!(r.passed());
        r.measure("b", 1.0, 1.0, Bound::StrictMin);
        assert!(!r.passed());
        r.scale_tolerances(2.0);
        assert!(r.passed());
        r.measure("nan", f64::NAN, 1.0, Bound::Max);
        assert!(!r.passed());
    }

    #[test]
    fn non_finite_measurements_round_trip() {
        let mut r = CheckReport::new("x");
        r.measure("a", f64::INFINITY, 1.0, Bound::Max);
        r.measure("b", f64::NEG_INFINITY, 1.0, Bound::Max);
        let back: CheckReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back.measured[0].value, f64::INFINITY);
        assert_eq!(back.measured[1].value, f64::NEG_INFINITY);
    }

    #[test]
    fn table_csv() {
        let mut t = Table::new("s", &["h", "e"]);
        t.push(vec![0.1, 2.5]);
        assert_eq!(t.to_csv(), "h,e\n1e-1,2.5e0\n");
    }
}
