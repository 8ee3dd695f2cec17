use std::io::{Read, Write};

use super::GazeSample;
use crate::error::{Error, Result};

pub const SAMPLE_HEADER: &str = "timestamp_ms,x,y,pupil_mm,valid";

/// Writes samples in the raw-sample CSV format.
pub fn write_samples<W: Write>(mut out: W, samples: &[GazeSample]) -> Result<()> {
    writeln!(out, "{SAMPLE_HEADER}")?;
    for s in samples {
        writeln!(
            out,
            "{},{},{},{},{}",
            s.timestamp_ms,
            s.x,
            s.y,
            s.pupil_mm,
            u8::from(s.valid)
        )?;
    }
    Ok(())
}

/// Parses the raw-sample CSV format; the header must match exactly.
pub fn read_samples<R: Read>(input: R) -> Result<Vec<GazeSample>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != SAMPLE_HEADER {
        return Err(Error::CsvFormat { line: 1, msg: format!("unexpected header {header:?}") });
    }
    let mut samples = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |msg: String| Error::CsvFormat { line, msg };
        if row.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", row.len())));
        }
        let float = |k: usize| row[k].parse::<f64>().map_err(|e| bad(format!("field {k}: {e}")));
        let valid = match &row[4] {
            "0" => false,
            "1" => true,
            other => return Err(bad(format!("valid must be 0 or 1, found {other:?}"))),
        };
        samples.push(GazeSample {
            timestamp_ms: row[0].parse().map_err(|e| bad(format!("timestamp: {e}")))?,
            x: float(1)?,
            y: float(2)?,
            pupil_mm: float(3)?,
            valid,
        });
    }
    Ok(samples)
}
