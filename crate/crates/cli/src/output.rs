use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::{CliError, Result};

/// Header plus string rows, written as CSV with an optional leading `#`
/// comment line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub comment: Option<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            comment: None,
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_comment(mut self, comment: impl Into<String>) -> Self {
        self.comment = Some(comment.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        if let Some(c) = &self.comment {
            for line in c.lines() {
                out.extend_from_slice(format!("# {line}\n").as_bytes());
            }
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        // Writing into a Vec cannot fail.
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        w.flush().expect("in-memory write");
        drop(w);
        out
    }
}

pub fn emit_csv(table: &Table, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&table.to_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

/// Decimal with 6 significant digits and trailing zeros dropped; scientific
/// notation outside `[1e-4, 1e15)`.
pub fn format_sig(v: f64) -> String {
    const DIGITS: i32 = 6;
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-4..15).contains(&exp) {
        let s = format!("{:.*e}", (DIGITS - 1) as usize, v);
        let (mantissa, e) = s.split_once('e').expect("scientific format");
        return format!("{}e{e}", trim_zeros(mantissa));
    }
    let decimals = (DIGITS - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig(410.357911), "410.358");
        assert_eq!(format_sig(18725.0), "18725");
        assert_eq!(format_sig(-0.000123456789), "-0.000123457");
        assert_eq!(format_sig(1.5e-7), "1.5e-7");
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(2.0), "2");
        assert_eq!(format_sig(f64::NAN), "NaN");
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(["a", "b"]);
        assert_eq!(String::from_utf8(t.to_bytes()).unwrap(), "a,b\n");
    }

    #[test]
    fn commas_are_quoted_and_comments_prefixed() {
        let mut t = Table::new(["x", "y"]).with_comment("two\nlines");
        t.push(vec!["1,2".into(), "3".into()]);
        assert_eq!(
            String::from_utf8(t.to_bytes()).unwrap(),
            "# two\n# lines\nx,y\n\"1,2\",3\n"
        );
    }

    #[test]
    fn io_failure_names_the_path() {
        let err = emit_csv(&Table::new(["a"]), Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
