//! Audit reports and the plain-text serializations shared by every module.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Relative slack granted to one-sided inequality audits for floating-point rounding.
pub const INEQUALITY_SLACK: f64 = 1e-12;

/// Structured outcome of checking `lhs <= rhs`.
///
/// Every audit is oriented so that it passes when the left side does not exceed the
/// right side; `margin = rhs - lhs`. Identity audits use the same fields but require
/// two-sided agreement within their stated tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    #[serde(with = "extended")]
    pub lhs: f64,
    #[serde(with = "extended")]
    pub rhs: f64,
    #[serde(with = "extended")]
    pub constant: f64,
    #[serde(with = "extended")]
    pub margin: f64,
    pub passed: bool,
    pub context: String,
    pub seed: Option<u64>,
}

impl AuditReport {
    /// One-sided audit `lhs <= rhs`, up to [`INEQUALITY_SLACK`].
    pub fn upper_bound(lhs: f64, rhs: f64, constant: f64, context: impl Into<String>) -> Self {
        let slack = INEQUALITY_SLACK * lhs.abs().max(rhs.abs()) + 1e-300;
        let passed = lhs.is_finite() && !rhs.is_nan() && lhs <= rhs + slack;
        AuditReport { lhs, rhs, constant, margin: rhs - lhs, passed, context: context.into(), seed: None }
    }

    /// Two-sided audit `|lhs - rhs| <= rel_tol * max(|lhs|, |rhs|) + abs_tol`.
    pub fn identity(lhs: f64, rhs: f64, rel_tol: f64, abs_tol: f64, context: impl Into<String>) -> Self {
        let tol = rel_tol * lhs.abs().max(rhs.abs()) + abs_tol;
        AuditReport {
            lhs,
            rhs,
            constant: 1.0,
            margin: rhs - lhs,
            passed: (lhs - rhs).abs() <= tol,
            context: context.into(),
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// Shortest round-trip decimal rendering used in every CSV body.
pub fn fmt_num(x: f64) -> String {
    format!("{x}")
}

/// Renders a CSV document (header + rows) to a string.
pub fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

/// Hex SHA-256 of a byte string (used for config fingerprints).
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Serde adapter for extended reals: non-finite values travel as the strings
/// `"inf"`, `"-inf"` and `"nan"` since JSON has no literal for them.
pub mod extended {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not an extended real: {other}"))),
            },
        }
    }
}
