//! Matrix CSV, 17-digit JSON and output sinks.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use cfa_core::SymMatrix;
use log::warn;
use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, Serializer};

use crate::error::{CliError, CliResult};

/// Relative asymmetry averaged away without comment.
pub const ASYM_SILENT: f64 = 1e-8;
/// Relative asymmetry above which the input is rejected.
pub const ASYM_REJECT: f64 = 1e-6;

/// `%.17g`-equivalent: 17 significant digits, exact round trip.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Reads a headerless `p x p` CSV and symmetrizes it.
pub fn read_matrix(path: &Path) -> CliResult<SymMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, s)| {
                s.parse::<f64>()
                    .map_err(|_| CliError::input(format!("{}: entry ({}, {}) is not a number: {s:?}", path.display(), i + 1, j + 1)))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    symmetrize(&rows, &path.display().to_string())
}

/// Applies the asymmetry policy and averages `(A + A') / 2`.
pub fn symmetrize(rows: &[Vec<f64>], name: &str) -> CliResult<SymMatrix> {
    let p = rows.len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != p) {
        return Err(CliError::input(format!(
            "{name}: row {} has {} entries, expected {p} (matrix must be square)",
            i + 1,
            r.len()
        )));
    }
    let scale = rows.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    let rel = SymMatrix::max_asymmetry(rows) / scale;
    if rel > ASYM_REJECT {
        return Err(CliError::input(format!(
            "{name}: matrix is not symmetric (relative asymmetry {rel:.3e} > {ASYM_REJECT:e})"
        )));
    }
    if rel > ASYM_SILENT {
        warn!("{name}: averaging asymmetric input (relative asymmetry {rel:.3e})");
    }
    Ok(SymMatrix::from_rows(rows)?)
}

pub fn write_matrix(path: &Path, m: &SymMatrix) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in m.to_rows() {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Compact JSON with every float printed to 17 significant digits.
struct Digits17;

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt_f64(v).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        CompactFormatter.write_f32(w, v)
    }
}

/// Writes one JSON document (or JSONL record) followed by a newline.
pub fn write_json<W: Write, T: Serialize>(w: &mut W, value: &T) -> CliResult<()> {
    let mut ser = Serializer::with_formatter(&mut *w, Digits17);
    value.serialize(&mut ser)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// A file when `path` is given, stdout otherwise.
pub fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}
