//! Deterministic CSV output: header first, comma-separated, minimal
//! RFC-4180 quoting, floats printed with 17 significant digits so parsing
//! them back reproduces the exact f64.

use std::borrow::Cow;
use std::io::{self, Write};

/// 17 significant digits, scientific notation; round-trips any finite f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn escape(field: &str) -> Cow<'_, str> {
    if field.contains([',', '"', '\n', '\r']) {
        Cow::Owned(format!("\"{}\"", field.replace('"', "\"\"")))
    } else {
        Cow::Borrowed(field)
    }
}

fn write_line<W: Write>(w: &mut W, fields: &[impl AsRef<str>]) -> io::Result<()> {
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            w.write_all(b",")?;
        }
        w.write_all(escape(f.as_ref()).as_bytes())?;
    }
    w.write_all(b"\n")
}

/// Emit header and rows; every row must match the header width.
pub fn write_csv<W: Write>(w: &mut W, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    write_line(w, header)?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len(), "ragged CSV row");
        write_line(w, row)?;
    }
    Ok(())
}
