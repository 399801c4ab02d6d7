//! JSON file formats for polynomials, factor chains, solvent sets and
//! matrix fraction descriptions, plus a deterministic writer that prints
//! every float with 17 significant digits.
//!
//! ```json
//! { "format_version": "1", "order": 2, "degree": 1,
//!   "coefficients": [ [[1, 0], [0, 1]], [[-3, 0], [0, -1]] ] }
//! ```
//!
//! Coefficients are listed leading coefficient first and each matrix is
//! row-major.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::poly::{MatrixPolynomial, Side, SolventSet, SpectralFactorChain};

pub const FORMAT_VERSION: &str = "1";

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialFile {
    pub format_version: String,
    pub order: usize,
    pub degree: usize,
    pub coefficients: Vec<Rows>,
    /// Optional starting matrix for the iterative solvers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_guess: Option<Rows>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorsFile {
    pub format_version: String,
    pub kind: String,
    pub order: usize,
    pub degree: usize,
    /// Always `rightmost_first`.
    pub ordering: String,
    pub factors: Vec<Rows>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolventsFile {
    pub format_version: String,
    pub kind: String,
    pub side: Side,
    pub order: usize,
    pub solvents: Vec<Rows>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MfdFile {
    pub format_version: String,
    pub kind: String,
    pub order: usize,
    /// Leading coefficient first.
    pub numerator: Vec<Rows>,
    /// Leading coefficient (the identity) first.
    pub denominator: Vec<Rows>,
}

fn to_matrices(blocks: &[Rows], order: usize, what: &str) -> Result<Vec<Matrix>> {
    blocks
        .iter()
        .enumerate()
        .map(|(i, rows)| {
            if rows.len() != order {
                return Err(Error::Format(format!(
                    "{what} {i}: {} rows, expected {order}",
                    rows.len()
                )));
            }
            for (r, row) in rows.iter().enumerate() {
                if row.len() != order {
                    return Err(Error::Format(format!(
                        "{what} {i}: row {r} has {} entries, expected {order}",
                        row.len()
                    )));
                }
            }
            Matrix::try_from_rows(rows).map_err(|e| Error::Format(format!("{what} {i}: {e}")))
        })
        .collect()
}

fn check_version(v: &str) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format_version '{v}'")));
    }
    Ok(())
}

fn check_kind(found: &str, want: &str) -> Result<()> {
    if found != want {
        return Err(Error::Format(format!("expected kind '{want}', found '{found}'")));
    }
    Ok(())
}

impl PolynomialFile {
    pub fn to_polynomial(&self) -> Result<MatrixPolynomial> {
        check_version(&self.format_version)?;
        if self.coefficients.len() != self.degree + 1 {
            return Err(Error::Format(format!(
                "degree {} needs {} coefficients, found {}",
                self.degree,
                self.degree + 1,
                self.coefficients.len()
            )));
        }
        MatrixPolynomial::new(to_matrices(&self.coefficients, self.order, "coefficient")?)
    }

    pub fn from_polynomial(p: &MatrixPolynomial) -> Self {
        Self {
            format_version: FORMAT_VERSION.into(),
            order: p.order(),
            degree: p.degree(),
            coefficients: p.coeffs().iter().map(Matrix::to_rows).collect(),
            initial_guess: None,
        }
    }

    pub fn initial_guess(&self) -> Result<Option<Matrix>> {
        self.initial_guess
            .as_ref()
            .map(|rows| {
                to_matrices(std::slice::from_ref(rows), self.order, "initial_guess")
                    .map(|mut v| v.remove(0))
            })
            .transpose()
    }
}

impl FactorsFile {
    pub fn to_chain(&self) -> Result<SpectralFactorChain> {
        check_version(&self.format_version)?;
        check_kind(&self.kind, "spectral_factors")?;
        if self.ordering != "rightmost_first" {
            return Err(Error::Format(format!("unsupported ordering '{}'", self.ordering)));
        }
        SpectralFactorChain::new(to_matrices(&self.factors, self.order, "factor")?)
    }

    pub fn from_chain(c: &SpectralFactorChain) -> Self {
        Self {
            format_version: FORMAT_VERSION.into(),
            kind: "spectral_factors".into(),
            order: c.order(),
            degree: c.degree(),
            ordering: "rightmost_first".into(),
            factors: c.factors().iter().map(Matrix::to_rows).collect(),
        }
    }
}

impl SolventsFile {
    pub fn to_set(&self) -> Result<SolventSet> {
        check_version(&self.format_version)?;
        check_kind(&self.kind, "solvents")?;
        Ok(SolventSet::new(self.side, to_matrices(&self.solvents, self.order, "solvent")?))
    }

    pub fn from_set(s: &SolventSet) -> Self {
        Self {
            format_version: FORMAT_VERSION.into(),
            kind: "solvents".into(),
            side: s.side,
            order: s.solvents.first().map_or(0, Matrix::rows),
            solvents: s.solvents.iter().map(Matrix::to_rows).collect(),
        }
    }
}

impl MfdFile {
    pub fn to_polynomials(&self) -> Result<(MatrixPolynomial, MatrixPolynomial)> {
        check_version(&self.format_version)?;
        check_kind(&self.kind, "mfd")?;
        let n = MatrixPolynomial::new(to_matrices(&self.numerator, self.order, "numerator coefficient")?)?;
        let d = MatrixPolynomial::new(to_matrices(&self.denominator, self.order, "denominator coefficient")?)?;
        Ok((n, d))
    }
}

/// Reads and deserializes a JSON file.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn read_polynomial(path: &Path) -> Result<MatrixPolynomial> {
    read_json::<PolynomialFile>(path)?.to_polynomial()
}

/// Serializes `value` with sorted-as-declared keys, two-space indentation,
/// numeric arrays on one line and floats in `{:.16e}` form.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

/// Formats a float with 17 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

fn write_number(out: &mut String, n: &serde_json::Number) {
    if n.is_f64() {
        out.push_str(&format_float(n.as_f64().unwrap()));
    } else {
        let _ = write!(out, "{n}");
    }
}

fn is_flat(items: &[Value]) -> bool {
    items.iter().all(|x| !x.is_array() && !x.is_object())
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if is_flat(items) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, x, indent);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, x, indent + 1);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push_str(": ");
                write_value(out, x, indent + 1);
                if i + 1 < map.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}
