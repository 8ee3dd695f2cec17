use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::ZoneFeatures;
use crate::error::{Error, Result};
use crate::gaze::{Rect, ZoneIndex, ZONE_COUNT};

pub const RECORD_HEADER: &str = "subject,screen,r,g,b,trans,trans_rank,trans_pop,trans_norm,\
time_ms,time_rank,time_pop_ms,time_norm,mean_dp,mean_dp_rank,ref_dp,cognitive_dp,max_dp_var,\
max_dp_var_rank,sum_dp_var,sum_dp_var_rank,selected,m1,m1_rank,m2,m2_rank,ms,ms_rank,x0,y0,x1,y1";

const COLUMNS: usize = 32;

/// One colored square of one screen evaluated by one subject.
///
/// `zone` is not a CSV column; rows of a screen are written in zone order and
/// the index is recovered from the row position when reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub subject: u32,
    pub screen: u32,
    pub zone: ZoneIndex,
    pub r: u8,
    pub g: u8,
    pub b: u8,
    #[serde(flatten)]
    pub features: ZoneFeatures,
}

impl EvaluationRecord {
    pub fn to_csv_line(&self) -> String {
        let f = &self.features;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.subject,
            self.screen,
            self.r,
            self.g,
            self.b,
            f.trans,
            f.trans_rank,
            f.trans_pop,
            f.trans_norm,
            f.time_ms,
            f.time_rank,
            f.time_pop_ms,
            f.time_norm,
            f.mean_dp_mm,
            f.mean_dp_rank,
            f.ref_dp_mm,
            f.cognitive_dp_mm,
            f.max_dp_var_mm,
            f.max_dp_var_rank,
            f.sum_dp_var_mm,
            f.sum_dp_var_rank,
            u8::from(f.selected),
            f.m1,
            f.m1_rank,
            f.m2,
            f.m2_rank,
            f.ms,
            f.ms_rank,
            f.rect.x0,
            f.rect.y0,
            f.rect.x1,
            f.rect.y1,
        )
    }

    fn from_fields(fields: &csv::StringRecord, zone: ZoneIndex, line: usize) -> Result<Self> {
        let bad = |msg: String| Error::CsvFormat { line, msg };
        if fields.len() != COLUMNS {
            return Err(bad(format!("expected {COLUMNS} fields, found {}", fields.len())));
        }
        let names: Vec<&str> = RECORD_HEADER.split(',').collect();
        let mut col = 0;
        let mut next = || {
            let k = col;
            col += 1;
            (names[k], &fields[k])
        };
        macro_rules! parse {
            ($t:ty) => {{
                let (name, raw) = next();
                raw.parse::<$t>().map_err(|e| bad(format!("{name}: {e}")))?
            }};
        }
        let subject = parse!(u32);
        let screen = parse!(u32);
        let (r, g, b) = (parse!(u8), parse!(u8), parse!(u8));
        let trans = parse!(u32);
        let trans_rank = parse!(u32);
        let trans_pop = parse!(u32);
        let trans_norm = parse!(f64);
        let time_ms = parse!(i64);
        let time_rank = parse!(u32);
        let time_pop_ms = parse!(i64);
        let time_norm = parse!(f64);
        let mean_dp_mm = parse!(f64);
        let mean_dp_rank = parse!(u32);
        let ref_dp_mm = parse!(f64);
        let cognitive_dp_mm = parse!(f64);
        let max_dp_var_mm = parse!(f64);
        let max_dp_var_rank = parse!(u32);
        let sum_dp_var_mm = parse!(f64);
        let sum_dp_var_rank = parse!(u32);
        let selected = match next() {
            (_, "0") => false,
            (_, "1") => true,
            (name, other) => return Err(bad(format!("{name} must be 0 or 1, found {other:?}"))),
        };
        let m1 = parse!(f64);
        let m1_rank = parse!(u32);
        let m2 = parse!(f64);
        let m2_rank = parse!(u32);
        let ms = parse!(f64);
        let ms_rank = parse!(u32);
        let rect = Rect::new(parse!(f64), parse!(f64), parse!(f64), parse!(f64));
        Ok(Self {
            subject,
            screen,
            zone,
            r,
            g,
            b,
            features: ZoneFeatures {
                trans,
                trans_rank,
                trans_pop,
                trans_norm,
                time_ms,
                time_rank,
                time_pop_ms,
                time_norm,
                mean_dp_mm,
                mean_dp_rank,
                ref_dp_mm,
                cognitive_dp_mm,
                max_dp_var_mm,
                max_dp_var_rank,
                sum_dp_var_mm,
                sum_dp_var_rank,
                selected,
                m1,
                m1_rank,
                m2,
                m2_rank,
                ms,
                ms_rank,
                rect,
            },
        })
    }
}

/// Writes the header and one line per record.
pub fn write_records<W: Write>(mut out: W, records: &[EvaluationRecord]) -> Result<()> {
    writeln!(out, "{RECORD_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.to_csv_line())?;
    }
    Ok(())
}

/// Parses an evaluation-record CSV. Zone indices are assigned by row position
/// within each run of rows sharing `(subject, screen)`.
pub fn read_records<R: Read>(input: R) -> Result<Vec<EvaluationRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != RECORD_HEADER {
        return Err(Error::CsvFormat { line: 1, msg: "header does not match the record schema".into() });
    }
    let mut records: Vec<EvaluationRecord> = Vec::new();
    let mut zone = 0;
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row?;
        let mut rec = EvaluationRecord::from_fields(&row, 0, line)?;
        zone = match records.last() {
            Some(prev) if (prev.subject, prev.screen) == (rec.subject, rec.screen) => zone + 1,
            _ => 0,
        };
        if zone >= ZONE_COUNT {
            return Err(Error::CsvFormat {
                line,
                msg: format!("more than {ZONE_COUNT} rows for subject {} screen {}", rec.subject, rec.screen),
            });
        }
        rec.zone = zone;
        records.push(rec);
    }
    Ok(records)
}
