//! Canonical serialization of reports.
//!
//! Every float is printed through the same fixed-width scientific
//! format, so identical analyses produce byte-identical output across
//! runs and platforms. Intermediate arithmetic is deterministic; this
//! module makes the *printing* deterministic too.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

use crate::report::{Report, WindowRow};

/// JSON formatter printing every `f64` as `{:.16e}`.
///
/// 17 significant digits round-trip any finite double, and the fixed
/// exponent form never depends on the shortest-representation search
/// of the default formatter.
struct SciFormatter;

impl Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes a report to its canonical JSON byte form.
pub fn to_canonical_json(report: &Report) -> Vec<u8> {
    let mut out = Vec::with_capacity(4096);
    let mut ser = Serializer::with_formatter(&mut out, SciFormatter);
    report
        .serialize(&mut ser)
        .expect("report serialization cannot fail");
    out.push(b'\n');
    out
}

/// Writes the per-window diagnostic rows as CSV.
///
/// The trailing column is empty where the Cauchy step is undefined
/// (the first window has no predecessor).
pub fn rows_to_csv(rows: &[WindowRow]) -> Vec<u8> {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str("n,sigma_k_log,sigma_k1_log,ratio,cauchy_dist\n");
    for row in rows {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},",
            row.n, row.sigma_k_log, row.sigma_k1_log, row.ratio
        ));
        if let Some(d) = row.cauchy_dist {
            out.push_str(&format!("{d:.16e}"));
        }
        out.push('\n');
    }
    out.into_bytes()
}
