//! Plain-text matrices: a `rows cols` header line followed by one line per row
//! of whitespace-separated values. Values round-trip exactly.
//!
//! Instances add a leading parameter line (`pca μ r` or
//! `cca μ₁ μ₂ r ridge metric`) before their data matrices.

use std::fmt::Write as _;

use crate::manifold::SgMetric;
use crate::problems::{CcaInstance, PcaInstance};
use crate::{Error, Mat, Result};

pub fn write_matrix(m: &Mat) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:?}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

pub fn read_matrix(text: &str) -> Result<Mat> {
    let mut tokens = text.split_whitespace();
    let mut dim = |what: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {what} in header")))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad {what}: {e}")))
    };
    let rows = dim("row count")?;
    let cols = dim("column count")?;
    let values = tokens
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad value {t:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != rows * cols {
        return Err(Error::Parse(format!(
            "expected {} values for a {rows}×{cols} matrix, found {}",
            rows * cols,
            values.len()
        )));
    }
    Ok(Mat::from_row_slice(rows, cols, &values))
}

/// Splits off the first line and the remaining `count` matrices.
fn split_matrices(text: &str, count: usize) -> Result<(&str, Vec<Mat>)> {
    let (head, mut rest) = text.split_once('\n').unwrap_or((text, ""));
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut header = rest.split_whitespace();
        let dim = |t: Option<&str>| -> Result<usize> {
            t.ok_or_else(|| Error::Parse("missing matrix header".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad matrix header: {e}")))
        };
        let rows = dim(header.next())?;
        dim(header.next())?;
        // Header line plus one line per row.
        let mut end = 0;
        for _ in 0..=rows {
            end += rest[end..].find('\n').map_or(rest.len() - end, |i| i + 1);
        }
        out.push(read_matrix(&rest[..end])?);
        rest = &rest[end..];
    }
    if !rest.trim().is_empty() {
        return Err(Error::Parse("trailing data after the last matrix".into()));
    }
    Ok((head, out))
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad {what}: {e}")))
}

impl PcaInstance {
    pub fn to_text(&self) -> String {
        format!("pca {:?} {}\n{}", self.mu, self.r, write_matrix(&self.data))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (head, mut m) = split_matrices(text, 1)?;
        let mut t = head.split_whitespace();
        if t.next() != Some("pca") {
            return Err(Error::Parse("expected a `pca` parameter line".into()));
        }
        let mu = parse_field(t.next(), "μ")?;
        let r = parse_field(t.next(), "r")?;
        PcaInstance::new(m.remove(0), mu, r)
    }
}

impl CcaInstance {
    pub fn to_text(&self) -> String {
        let ridge = self
            .ridge
            .map_or("default".to_string(), |d| format!("{d:?}"));
        let metric = match self.metric {
            SgMetric::G => "g",
            SgMetric::Euclidean => "euclidean",
        };
        format!(
            "cca {:?} {:?} {} {ridge} {metric}\n{}{}",
            self.mu1,
            self.mu2,
            self.r,
            write_matrix(&self.a),
            write_matrix(&self.b)
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (head, mut m) = split_matrices(text, 2)?;
        let mut t = head.split_whitespace();
        if t.next() != Some("cca") {
            return Err(Error::Parse("expected a `cca` parameter line".into()));
        }
        let mu1 = parse_field(t.next(), "μ₁")?;
        let mu2 = parse_field(t.next(), "μ₂")?;
        let r = parse_field(t.next(), "r")?;
        let ridge = match t.next() {
            Some("default") => None,
            tok => Some(parse_field(tok, "ridge")?),
        };
        let metric = match t.next() {
            Some("g") => SgMetric::G,
            Some("euclidean") => SgMetric::Euclidean,
            other => return Err(Error::Parse(format!("bad metric {other:?}"))),
        };
        let b = m.pop().expect("two matrices");
        let a = m.pop().expect("two matrices");
        let mut inst = CcaInstance::new(a, b, mu1, mu2, r)?;
        inst.ridge = ridge;
        inst.metric = metric;
        inst.validate_shapes()?;
        Ok(inst)
    }
}
