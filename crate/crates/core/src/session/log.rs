use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::SessionMode;
use crate::error::{Error, Result};
use crate::etea::{GaParams, ScorerConfig, ScorerMode};
use crate::features::{ColorGenome, EvaluationRecord, RECORD_HEADER};
use crate::gaze::{write_samples, FixationParams, GazeSample, ZoneIndex, ZONE_COUNT};
use crate::pipeline::GazePipeline;

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const SCREENS_FILE: &str = "screens.csv";
pub const RECORDS_FILE: &str = "records.csv";

const MANIFEST_FORMAT: &str = "etea-session 1";
const SCREENS_HEADER: &str = "screen,ref_dp,selected,press_ms,genome_hex_0,genome_hex_1,genome_hex_2,\
genome_hex_3,genome_hex_4,genome_hex_5,genome_hex_6,genome_hex_7";

/// Everything needed to recompute a session's records from its sample logs.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub session_id: String,
    pub subject: u32,
    pub seed: u64,
    pub mode: SessionMode,
    pub aspect: f64,
    pub pipeline: GazePipeline,
    pub scorer: ScorerConfig,
    pub ga: GaParams,
}

impl Manifest {
    fn to_text(&self) -> String {
        let mode = match self.mode {
            SessionMode::Human => "human",
            SessionMode::Synthetic => "synthetic",
        };
        let scorer_mode = match self.scorer.mode {
            ScorerMode::Linear => "linear",
            ScorerMode::Model => "model",
        };
        let pairs: Vec<(&str, String)> = vec![
            ("format", MANIFEST_FORMAT.into()),
            ("session_id", self.session_id.clone()),
            ("subject", self.subject.to_string()),
            ("seed", self.seed.to_string()),
            ("mode", mode.into()),
            ("aspect", self.aspect.to_string()),
            ("max_speed", self.pipeline.max_speed.to_string()),
            ("dispersion_threshold", self.pipeline.fixation.dispersion_threshold.to_string()),
            ("min_duration_ms", self.pipeline.fixation.min_duration_ms.to_string()),
            ("w_time", self.scorer.w_time.to_string()),
            ("w_trans", self.scorer.w_trans.to_string()),
            ("w_cog", self.scorer.w_cog.to_string()),
            ("selected_bonus", self.scorer.selected_bonus.to_string()),
            ("scorer_mode", scorer_mode.into()),
            ("parents", self.ga.parents.to_string()),
            ("elites", self.ga.elites.to_string()),
            ("mutation_rate", self.ga.mutation_rate.to_string()),
        ];
        pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    fn parse(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::CsvFormat { line: i + 1, msg: format!("expected key=value, found {line:?}") })?;
            map.insert(k.trim(), v.trim());
        }
        let get = |k: &str| map.get(k).copied().ok_or_else(|| Error::InvalidInput(format!("manifest lacks {k}")));
        fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::InvalidInput(format!("manifest {k}={v:?} is not a number")))
        }
        if get("format")? != MANIFEST_FORMAT {
            return Err(Error::InvalidInput(format!("unsupported manifest format {:?}", get("format")?)));
        }
        let mode = match get("mode")? {
            "human" => SessionMode::Human,
            "synthetic" => SessionMode::Synthetic,
            other => return Err(Error::InvalidInput(format!("unknown session mode {other:?}"))),
        };
        let scorer_mode = match get("scorer_mode")? {
            "linear" => ScorerMode::Linear,
            "model" => ScorerMode::Model,
            other => return Err(Error::InvalidInput(format!("unknown scorer mode {other:?}"))),
        };
        let f = |k: &str| -> Result<f64> { num(k, get(k)?) };
        Ok(Self {
            session_id: get("session_id")?.to_string(),
            subject: num("subject", get("subject")?)?,
            seed: num("seed", get("seed")?)?,
            mode,
            aspect: f("aspect")?,
            pipeline: GazePipeline {
                max_speed: f("max_speed")?,
                fixation: FixationParams {
                    dispersion_threshold: f("dispersion_threshold")?,
                    min_duration_ms: num("min_duration_ms", get("min_duration_ms")?)?,
                },
            },
            scorer: ScorerConfig {
                w_time: f("w_time")?,
                w_trans: f("w_trans")?,
                w_cog: f("w_cog")?,
                selected_bonus: f("selected_bonus")?,
                mode: scorer_mode,
                model: None,
            },
            ga: GaParams {
                parents: num("parents", get("parents")?)?,
                elites: num("elites", get("elites")?)?,
                mutation_rate: f("mutation_rate")?,
            },
        })
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    Manifest::parse(&fs::read_to_string(dir.join(MANIFEST_FILE))?)
}

/// One line of the screen log.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenLogEntry {
    pub screen: u32,
    pub ref_dp_mm: f64,
    pub selected_zone: Option<ZoneIndex>,
    /// Key press time; absent when the screen ended without samples.
    pub press_ms: Option<i64>,
    pub genomes: [ColorGenome; ZONE_COUNT],
}

impl ScreenLogEntry {
    fn to_line(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let genomes: Vec<String> = self.genomes.iter().map(ToString::to_string).collect();
        format!(
            "{},{},{},{},{}",
            self.screen,
            self.ref_dp_mm,
            opt(self.selected_zone.map(|z| z.to_string())),
            opt(self.press_ms.map(|t| t.to_string())),
            genomes.join(",")
        )
    }

    fn parse(line: &str, n: usize) -> Result<Self> {
        let bad = |msg: String| Error::CsvFormat { line: n, msg };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 + ZONE_COUNT {
            return Err(bad(format!("expected {} fields, found {}", 4 + ZONE_COUNT, fields.len())));
        }
        fn optional(s: &str) -> Option<&str> {
            (!s.is_empty()).then_some(s)
        }
        let selected_zone = optional(fields[2])
            .map(|s| s.parse::<ZoneIndex>().map_err(|e| bad(format!("selected: {e}"))))
            .transpose()?;
        if selected_zone.is_some_and(|z| z >= ZONE_COUNT) {
            return Err(bad("selected zone out of range".into()));
        }
        let genomes: Vec<ColorGenome> = fields[4..]
            .iter()
            .map(|s| s.parse::<ColorGenome>().map_err(|e| bad(e.to_string())))
            .collect::<Result<_>>()?;
        Ok(Self {
            screen: fields[0].parse().map_err(|e| bad(format!("screen: {e}")))?,
            ref_dp_mm: fields[1].parse().map_err(|e| bad(format!("ref_dp: {e}")))?,
            selected_zone,
            press_ms: optional(fields[3]).map(|s| s.parse().map_err(|e| bad(format!("press_ms: {e}")))).transpose()?,
            genomes: genomes.try_into().expect("length checked"),
        })
    }
}

pub fn read_screen_log(dir: &Path) -> Result<Vec<ScreenLogEntry>> {
    let text = fs::read_to_string(dir.join(SCREENS_FILE))?;
    let mut lines = text.lines();
    if lines.next() != Some(SCREENS_HEADER) {
        return Err(Error::CsvFormat { line: 1, msg: "screen log header mismatch".into() });
    }
    lines.enumerate().filter(|(_, l)| !l.is_empty()).map(|(i, l)| ScreenLogEntry::parse(l, i + 2)).collect()
}

pub fn samples_path(dir: &Path, screen: u32) -> PathBuf {
    dir.join(format!("samples_{screen:05}.csv"))
}

/// Append-only on-disk record of a session: manifest, screen log, one sample
/// file per screen and the evaluation records.
#[derive(Debug)]
pub struct SessionLog {
    dir: PathBuf,
}

impl SessionLog {
    pub fn create(dir: &Path, manifest: &Manifest) -> Result<Self> {
        fs::create_dir_all(dir)?;
        if dir.join(MANIFEST_FILE).exists() {
            return Err(Error::InvalidInput(format!("{} already holds a session", dir.display())));
        }
        fs::write(dir.join(MANIFEST_FILE), manifest.to_text())?;
        fs::write(dir.join(SCREENS_FILE), format!("{SCREENS_HEADER}\n"))?;
        fs::write(dir.join(RECORDS_FILE), format!("{RECORD_HEADER}\n"))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn append(&self, file: &str, text: &str) -> Result<()> {
        let mut f = OpenOptions::new().append(true).open(self.dir.join(file))?;
        f.write_all(text.as_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn append_screen(&mut self, entry: &ScreenLogEntry, samples: &[GazeSample], records: &[EvaluationRecord]) -> Result<()> {
        let mut out = BufWriter::new(File::create(samples_path(&self.dir, entry.screen))?);
        write_samples(&mut out, samples)?;
        out.flush()?;
        let lines: String = records.iter().map(|r| r.to_csv_line() + "\n").collect();
        self.append(RECORDS_FILE, &lines)?;
        self.append(SCREENS_FILE, &(entry.to_line() + "\n"))
    }
}
