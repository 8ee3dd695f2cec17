use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;

use super::log::{read_manifest, read_screen_log, samples_path, RECORDS_FILE};
use super::{screen_records, selected_zone_at, ScreenSummary};
use crate::error::{Error, Result};
use crate::etea::{score_zones, ScorerMode};
use crate::features::RECORD_HEADER;
use crate::gaze::{read_samples, ScreenLayout, ZONE_COUNT};

/// A stored record line that the recomputation does not reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordDiff {
    /// 1-based data row in the records file (the header is row 0).
    pub row: usize,
    pub screen: u32,
    pub zone: usize,
    pub stored: Option<String>,
    pub recomputed: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ReplayReport {
    pub session_id: String,
    pub screens: usize,
    pub records: usize,
    pub diffs: Vec<RecordDiff>,
    /// Record lines as recomputed from the sample logs, without header.
    pub recomputed: Vec<String>,
    /// Per-screen summaries rebuilt from the logs; absent for model-scored
    /// sessions, whose tree is not persisted.
    pub history: Option<Vec<ScreenSummary>>,
}

impl ReplayReport {
    pub fn is_clean(&self) -> bool {
        self.diffs.is_empty()
    }
}

/// Recomputes every screen of a persisted session from its raw sample logs
/// and compares the result with the stored records, line by line.
pub fn replay_session(dir: &Path) -> Result<ReplayReport> {
    let manifest = read_manifest(dir)?;
    let entries = read_screen_log(dir)?;
    let layout = ScreenLayout::grid(manifest.aspect)?;
    let stored_text = fs::read_to_string(dir.join(RECORDS_FILE))?;
    let mut stored_lines = stored_text.lines();
    if stored_lines.next() != Some(RECORD_HEADER) {
        return Err(Error::CsvFormat { line: 1, msg: "records header does not match the schema".into() });
    }
    let stored: Vec<&str> = stored_lines.filter(|l| !l.is_empty()).collect();

    let mut diffs = Vec::new();
    let mut recomputed = Vec::new();
    let mut history = Vec::with_capacity(entries.len());
    let mut row = 0;
    for entry in &entries {
        let samples = read_samples(BufReader::new(File::open(samples_path(dir, entry.screen))?))?;
        let selected = entry.press_ms.and_then(|t| selected_zone_at(&samples, t, &layout));
        let features =
            manifest.pipeline.screen_features(&samples, &layout, &entry.genomes, entry.ref_dp_mm, selected);
        for record in screen_records(manifest.subject, entry.screen, &features, &entry.genomes) {
            let line = record.to_csv_line();
            let kept = stored.get(row).copied();
            if kept != Some(line.as_str()) {
                diffs.push(RecordDiff {
                    row: row + 1,
                    screen: entry.screen,
                    zone: record.zone,
                    stored: kept.map(str::to_string),
                    recomputed: Some(line.clone()),
                });
            }
            recomputed.push(line);
            row += 1;
        }
        if manifest.scorer.mode == ScorerMode::Linear {
            let m1: Vec<f64> = entry.genomes.iter().map(|g| g.m1()).collect();
            history.push(ScreenSummary {
                screen: entry.screen,
                generation: entry.screen,
                best_m1: m1.iter().copied().fold(f64::MIN, f64::max),
                mean_m1: m1.iter().sum::<f64>() / ZONE_COUNT as f64,
                selected_zone: selected,
                scores: score_zones(&features, &manifest.scorer)?,
            });
        }
    }
    for (extra, line) in stored.iter().enumerate().skip(row) {
        diffs.push(RecordDiff {
            row: extra + 1,
            screen: line.split(',').nth(1).and_then(|s| s.parse().ok()).unwrap_or(u32::MAX),
            zone: extra % ZONE_COUNT,
            stored: Some(line.to_string()),
            recomputed: None,
        });
    }
    Ok(ReplayReport {
        session_id: manifest.session_id,
        screens: entries.len(),
        records: stored.len(),
        diffs,
        recomputed,
        history: (manifest.scorer.mode == ScorerMode::Linear).then_some(history),
    })
}
