//! Machine-readable verification reports.
//!
//! Serialization is byte-stable: fields serialize in declaration order,
//! auxiliary values live in a `BTreeMap`, and checks keep insertion order.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// How a residual is compared against its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    /// Pass iff `residual <= tolerance`.
    #[serde(rename = "<=")]
    AtMost,
    /// Pass iff `residual > tolerance`.
    #[serde(rename = ">")]
    Exceeds,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
    pub anchor: String,
    pub samples: usize,
}

impl Check {
    pub fn new(
        name: &str,
        residual: f64,
        tolerance: f64,
        comparison: Comparison,
        anchor: &str,
        samples: usize,
    ) -> Self {
        let pass = match comparison {
            Comparison::AtMost => residual <= tolerance,
            Comparison::Exceeds => residual > tolerance,
        };
        Check {
            name: name.to_string(),
            residual,
            tolerance,
            comparison,
            pass,
            anchor: anchor.to_string(),
            samples,
        }
    }

    pub fn at_most(name: &str, residual: f64, tolerance: f64, anchor: &str, samples: usize) -> Self {
        Self::new(name, residual, tolerance, Comparison::AtMost, anchor, samples)
    }

    pub fn exceeds(name: &str, residual: f64, tolerance: f64, anchor: &str, samples: usize) -> Self {
        Self::new(name, residual, tolerance, Comparison::Exceeds, anchor, samples)
    }

    /// A boolean expectation recorded as residual 0 (met) or 1 (not met).
    pub fn expect(name: &str, ok: bool, anchor: &str, samples: usize) -> Self {
        Self::at_most(name, if ok { 0.0 } else { 1.0 }, 0.0, anchor, samples)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub version: String,
    pub spec: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, serde_json::Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Hex SHA-256 of the text that defines the metric (file contents or
/// builtin name).
pub fn digest(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut out, b| {
            let _ = write!(out, "{b:02x}");
            out
        })
}

impl Report {
    pub fn new(spec_text: &str, seed: u64) -> Self {
        Report {
            version: TOOL_VERSION.to_string(),
            spec: digest(spec_text),
            seed,
            checks: Vec::new(),
            values: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        self.checks.extend(checks);
    }

    pub fn value(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.values.insert(key.to_string(), v);
    }

    pub fn note(&mut self, text: &str) {
        self.notes.push(text.to_string());
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "twistor {}  spec {}  seed {}",
            self.version,
            &self.spec[..12],
            self.seed
        );
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let op = match c.comparison {
                Comparison::AtMost => "<=",
                Comparison::Exceeds => "> ",
            };
            let _ = writeln!(
                out,
                "{} {:width$}  {:>11.3e} {op} {:<9.1e} n={:<4} {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.tolerance,
                c.samples,
                c.anchor,
            );
        }
        for (k, v) in &self.values {
            let _ = writeln!(out, "  {k} = {v}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons() {
        assert!(Check::at_most("a", 1e-9, 1e-8, "", 1).pass);
        assert!(!Check::at_most("a", f64::NAN, 1e-8, "", 1).pass);
        assert!(Check::exceeds("b", 1e-2, 1e-3, "", 1).pass);
        assert!(!Check::exceeds("b", 1e-4, 1e-3, "", 1).pass);
        assert!(Check::expect("c", true, "", 1).pass);
    }

    #[test]
    fn digest_is_hex_sha256() {
        assert_eq!(
            digest("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn json_is_stable() {
        let mut r = Report::new("flat", 42);
        r.push(Check::at_most("x", 0.0, 1e-8, "anchor", 3));
        r.value("tau", 12.0);
        assert_eq!(r.to_json(), r.clone().to_json());
        assert!(r.to_json().contains("\"comparison\": \"<=\""));
    }
}
