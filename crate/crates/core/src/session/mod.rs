//! Live sessions: the cross-fixation / evaluation protocol driven one request
//! at a time, persisted so every screen can be replayed offline.

mod log;
mod replay;
mod store;
mod wire;

use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use log::{read_manifest, read_screen_log, Manifest, ScreenLogEntry, SessionLog, MANIFEST_FILE, RECORDS_FILE, SCREENS_FILE};
pub use replay::{replay_session, RecordDiff, ReplayReport};
pub use store::{is_valid_session_id, SessionStore};
pub use wire::{CreateRequest, CreateResponse, SamplesRequest, SamplesResponse, SpaceRequest, SpaceResponse, WireSample};

use crate::error::{Error, Result};
use crate::etea::{
    init_population, score_zones, step_generation, synthesize_gaze, EteaConfig, EteaRng, GaParams, Population,
    ScorerConfig, SyntheticUser,
};
use crate::features::{EvaluationRecord, ZoneFeatures};
use crate::gaze::{GazeSample, Rect, ScreenLayout, ZoneIndex, SAMPLE_PERIOD_MS, ZONE_COUNT};
use crate::mining::DecisionTree;
use crate::pipeline::GazePipeline;

/// Cumulative time the gaze must rest on the cross before colors appear.
pub const CROSS_DWELL_MS: i64 = 500;

/// A press with no valid sample this close before it selects nothing.
pub const SELECTION_WINDOW_MS: i64 = 100;

/// Region around the fixation cross, normalized screen coordinates.
pub const CROSS_RECT: Rect = Rect { x0: 0.45, y0: 0.45, x1: 0.55, y1: 0.55 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    CrossFixation,
    Evaluation,
    Finished,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::CrossFixation => "cross_fixation",
            Phase::Evaluation => "evaluation",
            Phase::Finished => "finished",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionMode {
    #[default]
    Human,
    /// Gaze comes from a [`SyntheticUser`]; screens advance on their own.
    Synthetic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub mode: SessionMode,
    pub scorer: ScorerConfig,
    pub ga: GaParams,
    pub pipeline: GazePipeline,
    /// Window width over height; shapes the zone rectangles.
    pub aspect: f64,
    /// Screens after which the session finishes; unlimited when absent.
    pub max_screens: Option<u32>,
    pub user: SyntheticUser,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            mode: SessionMode::Human,
            scorer: ScorerConfig::default(),
            ga: GaParams::default(),
            pipeline: GazePipeline::default(),
            aspect: 1.0,
            max_screens: None,
            user: SyntheticUser::default(),
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        self.ga.validate()?;
        self.scorer.validate()?;
        if self.mode == SessionMode::Synthetic {
            self.user.validate()?;
        }
        if self.max_screens == Some(0) {
            return Err(Error::InvalidConfig("max_screens must be at least 1".into()));
        }
        ScreenLayout::grid(self.aspect)?;
        Ok(())
    }

    fn etea(&self) -> EteaConfig {
        EteaConfig { scorer: self.scorer.clone(), ga: self.ga }
    }
}

/// Per-screen summary kept in the session history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenSummary {
    pub screen: u32,
    /// Generation of the population shown on this screen.
    pub generation: u32,
    pub best_m1: f64,
    pub mean_m1: f64,
    pub selected_zone: Option<ZoneIndex>,
    pub scores: [f64; ZONE_COUNT],
}

/// Result of ending a screen.
#[derive(Debug, Clone)]
pub struct ScreenOutcome {
    pub records: [EvaluationRecord; ZONE_COUNT],
    pub summary: ScreenSummary,
    pub phase: Phase,
}

/// Outcome of posting a batch of samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleUpdate {
    pub phase: Phase,
    /// True when this batch completed the cross fixation.
    pub entered_evaluation: bool,
}

/// Zone under the last valid sample taken at most [`SELECTION_WINDOW_MS`]
/// before `press_ms`.
pub fn selected_zone_at(samples: &[GazeSample], press_ms: i64, layout: &ScreenLayout) -> Option<ZoneIndex> {
    samples
        .iter()
        .rev()
        .filter(|s| s.valid && s.timestamp_ms <= press_ms)
        .take_while(|s| press_ms - s.timestamp_ms <= SELECTION_WINDOW_MS)
        .next()
        .and_then(|s| layout.assign_zone(s.x, s.y))
}

/// Tracks the cross-fixation phase. Time accrues between consecutive valid
/// samples that both lie on the cross.
#[derive(Debug, Clone, Default)]
struct CrossWindow {
    dwell_ms: i64,
    pupils: Vec<f64>,
    previous_on_cross: Option<i64>,
}

impl CrossWindow {
    /// Feeds one sample; returns true once the dwell is long enough.
    fn push(&mut self, s: &GazeSample) -> bool {
        if s.valid && CROSS_RECT.contains(s.x, s.y) {
            if let Some(t) = self.previous_on_cross {
                self.dwell_ms += s.timestamp_ms - t;
            }
            self.pupils.push(s.pupil_mm);
            self.previous_on_cross = Some(s.timestamp_ms);
        } else {
            self.previous_on_cross = None;
        }
        self.dwell_ms >= CROSS_DWELL_MS
    }

    fn mean_pupil(&self) -> f64 {
        self.pupils.iter().sum::<f64>() / self.pupils.len() as f64
    }
}

/// One subject's run through successive screens.
pub struct Session {
    id: String,
    subject: u32,
    seed: u64,
    config: SessionConfig,
    model: Option<Arc<DecisionTree>>,
    phase: Phase,
    population: Population,
    layout: ScreenLayout,
    rng: EteaRng,
    cross: CrossWindow,
    buffer: Vec<GazeSample>,
    last_t: Option<i64>,
    ref_dp_mm: Option<f64>,
    screen: u32,
    history: Vec<ScreenSummary>,
    records: Vec<EvaluationRecord>,
    log: Option<SessionLog>,
}

impl Session {
    pub fn new(id: String, subject: u32, seed: u64, config: SessionConfig) -> Result<Self> {
        config.validate()?;
        let layout = ScreenLayout::grid(config.aspect)?;
        let mut rng = EteaRng::seed_from_u64(seed);
        rng.set_stream(1);
        Ok(Self {
            id,
            subject,
            seed,
            model: config.scorer.model.clone(),
            config,
            phase: Phase::CrossFixation,
            population: init_population(seed),
            layout,
            rng,
            cross: CrossWindow::default(),
            buffer: Vec::new(),
            last_t: None,
            ref_dp_mm: None,
            screen: 0,
            history: Vec::new(),
            records: Vec::new(),
            log: None,
        })
    }

    /// Starts persisting into `dir`, which must not already hold a session.
    pub fn persist_to(&mut self, dir: &Path) -> Result<()> {
        let manifest = Manifest {
            session_id: self.id.clone(),
            subject: self.subject,
            seed: self.seed,
            mode: self.config.mode,
            aspect: self.config.aspect,
            pipeline: self.config.pipeline,
            scorer: self.config.scorer.clone(),
            ga: self.config.ga,
        };
        self.log = Some(SessionLog::create(dir, &manifest)?);
        Ok(())
    }

    /// Supplies the tree used when the scorer runs in model mode.
    pub fn set_model(&mut self, model: Arc<DecisionTree>) {
        self.model = Some(model);
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn subject(&self) -> u32 {
        self.subject
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn mode(&self) -> SessionMode {
        self.config.mode
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn layout(&self) -> &ScreenLayout {
        &self.layout
    }

    pub fn ref_dp_mm(&self) -> Option<f64> {
        self.ref_dp_mm
    }

    pub fn screens_completed(&self) -> u32 {
        self.screen
    }

    pub fn history(&self) -> &[ScreenSummary] {
        &self.history
    }

    pub fn records(&self) -> &[EvaluationRecord] {
        &self.records
    }

    pub fn buffered_samples(&self) -> &[GazeSample] {
        &self.buffer
    }

    fn check_order(&self, samples: &[GazeSample]) -> Result<()> {
        let mut last = self.last_t;
        for s in samples {
            if last.is_some_and(|t| s.timestamp_ms <= t) {
                return Err(Error::InvalidInput(format!(
                    "sample timestamps must increase; {} follows {}",
                    s.timestamp_ms,
                    last.unwrap_or_default()
                )));
            }
            if s.valid && !(s.x.is_finite() && s.y.is_finite() && s.pupil_mm.is_finite()) {
                return Err(Error::InvalidInput("valid samples need finite coordinates and pupil".into()));
            }
            last = Some(s.timestamp_ms);
        }
        Ok(())
    }

    /// Ingests gaze samples. During the cross fixation, samples after the one
    /// completing the dwell are discarded: they were recorded while the cross
    /// was still on screen.
    pub fn post_samples(&mut self, samples: &[GazeSample]) -> Result<SampleUpdate> {
        if self.phase == Phase::Finished {
            return Err(Error::WrongPhase { phase: self.phase.name(), msg: "session is finished".into() });
        }
        self.check_order(samples)?;
        if let Some(s) = samples.last() {
            self.last_t = Some(s.timestamp_ms);
        }
        match self.phase {
            Phase::CrossFixation => {
                for s in samples {
                    if self.cross.push(s) {
                        self.ref_dp_mm = Some(self.cross.mean_pupil());
                        self.phase = Phase::Evaluation;
                        return Ok(SampleUpdate { phase: self.phase, entered_evaluation: true });
                    }
                }
            }
            Phase::Evaluation => self.buffer.extend_from_slice(samples),
            Phase::Finished => unreachable!(),
        }
        Ok(SampleUpdate { phase: self.phase, entered_evaluation: false })
    }

    /// Ends the evaluation screen on a key press at `press_ms` (defaults to
    /// the last sample received), breeds the next generation and returns to
    /// the cross.
    pub fn end_screen(&mut self, press_ms: Option<i64>) -> Result<ScreenOutcome> {
        if self.phase != Phase::Evaluation {
            return Err(Error::WrongPhase { phase: self.phase.name(), msg: "no evaluation screen to end".into() });
        }
        let ref_dp = self.ref_dp_mm.expect("set on entering evaluation");
        let press = press_ms.or(self.last_t);
        let selected = press.and_then(|t| selected_zone_at(&self.buffer, t, &self.layout));
        let genomes = self.population.genomes;
        let features = self.config.pipeline.screen_features(&self.buffer, &self.layout, &genomes, ref_dp, selected);
        let records = screen_records(self.subject, self.screen, &features, &genomes);

        let mut etea = self.config.etea();
        etea.scorer.model = self.model.clone();
        let scores = score_zones(&features, &etea.scorer)?;
        let next = step_generation(&self.population, &features, &etea, &mut self.rng)?;

        if let Some(log) = &mut self.log {
            log.append_screen(
                &ScreenLogEntry { screen: self.screen, ref_dp_mm: ref_dp, selected_zone: selected, press_ms: press, genomes },
                &self.buffer,
                &records,
            )?;
        }

        let summary = ScreenSummary {
            screen: self.screen,
            generation: self.population.generation,
            best_m1: self.population.best_m1(),
            mean_m1: self.population.mean_m1(),
            selected_zone: selected,
            scores,
        };
        self.history.push(summary.clone());
        self.records.extend_from_slice(&records);
        self.population = next;
        self.screen += 1;
        self.buffer.clear();
        self.cross = CrossWindow::default();
        self.ref_dp_mm = None;
        self.phase = match self.config.max_screens {
            Some(max) if self.screen >= max => Phase::Finished,
            _ => Phase::CrossFixation,
        };
        Ok(ScreenOutcome { records, summary, phase: self.phase })
    }

    /// Runs one whole screen with synthetic gaze: cross fixation, evaluation
    /// and key press.
    pub fn auto_advance(&mut self) -> Result<ScreenOutcome> {
        if self.config.mode != SessionMode::Synthetic {
            return Err(Error::InvalidConfig("automatic advance needs a synthetic session".into()));
        }
        if self.phase == Phase::Finished {
            return Err(Error::WrongPhase { phase: self.phase.name(), msg: "session is finished".into() });
        }
        let user = self.config.user;
        let mut t = self.last_t.map_or(0, |t| t + SAMPLE_PERIOD_MS);
        if self.phase == Phase::CrossFixation {
            let noise = Normal::new(0.0, user.pupil_noise_mm).expect("validated sd");
            let n = (CROSS_DWELL_MS / SAMPLE_PERIOD_MS) as usize + 1;
            let cross: Vec<GazeSample> = (0..n)
                .map(|k| GazeSample::new(t + k as i64 * SAMPLE_PERIOD_MS, 0.5, 0.5, user.pupil_base_mm + noise.sample(&mut self.rng)))
                .collect();
            t += n as i64 * SAMPLE_PERIOD_MS;
            self.post_samples(&cross)?;
        }
        let gaze = synthesize_gaze(&self.layout, &self.population.genomes, &user, &mut self.rng)?;
        let shifted: Vec<GazeSample> =
            gaze.samples.iter().map(|s| GazeSample { timestamp_ms: s.timestamp_ms + t, ..*s }).collect();
        self.post_samples(&shifted)?;
        self.end_screen(None)
    }
}

/// The eight records of one screen, in zone order.
pub fn screen_records(
    subject: u32,
    screen: u32,
    features: &[ZoneFeatures; ZONE_COUNT],
    genomes: &[crate::features::ColorGenome; ZONE_COUNT],
) -> [EvaluationRecord; ZONE_COUNT] {
    std::array::from_fn(|zone| {
        let (r, g, b) = genomes[zone].rgb();
        EvaluationRecord { subject, screen, zone, r, g, b, features: features[zone] }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn on_cross(t0: i64, n: usize, pupil: f64) -> Vec<GazeSample> {
        (0..n).map(|k| GazeSample::new(t0 + k as i64 * 20, 0.5, 0.5, pupil + k as f64 * 0.01)).collect()
    }

    fn session() -> Session {
        Session::new("t".into(), 1, 7, SessionConfig::default()).unwrap()
    }

    #[test]
    fn starts_on_the_cross() {
        let s = session();
        assert_eq!(s.phase(), Phase::CrossFixation);
        assert_eq!(s.population(), &init_population(7));
        assert!(s.history().is_empty());
    }

    #[test]
    fn centered_dwell_enters_evaluation() {
        let mut s = session();
        let samples = on_cross(0, 30, 4.0);
        let update = s.post_samples(&samples).unwrap();
        assert!(update.entered_evaluation);
        assert_eq!(s.phase(), Phase::Evaluation);
        // the 26th sample completes 500 ms; the offline mean covers samples 0..=25
        let expected = samples[..26].iter().map(|s| s.pupil_mm).sum::<f64>() / 26.0;
        assert_eq!(s.ref_dp_mm(), Some(expected));
        assert!(s.buffered_samples().is_empty());
    }

    #[test]
    fn dwell_accumulates_across_batches_and_breaks() {
        let mut s = session();
        let mut samples = on_cross(0, 20, 4.0);
        samples.push(GazeSample::new(400, 0.9, 0.9, 4.0));
        s.post_samples(&samples).unwrap();
        assert_eq!(s.phase(), Phase::CrossFixation);
        s.post_samples(&on_cross(420, 5, 4.0)).unwrap();
        assert_eq!(s.phase(), Phase::CrossFixation);
        // 380 ms + 80 ms so far, the break earns nothing
        s.post_samples(&on_cross(520, 1, 4.0)).unwrap();
        assert_eq!(s.phase(), Phase::CrossFixation);
        s.post_samples(&on_cross(540, 1, 4.0)).unwrap();
        assert_eq!(s.phase(), Phase::Evaluation);
    }

    #[test]
    fn off_center_gaze_never_transitions() {
        let mut s = session();
        let samples: Vec<_> = (0..100).map(|k| GazeSample::new(k * 20, 0.2, 0.5, 4.0)).collect();
        s.post_samples(&samples).unwrap();
        let invalid: Vec<_> = (100..200).map(|k| GazeSample::invalid(k * 20)).collect();
        s.post_samples(&invalid).unwrap();
        assert_eq!(s.phase(), Phase::CrossFixation);
        assert!(s.end_screen(None).is_err());
    }

    #[test]
    fn out_of_order_samples_are_rejected() {
        let mut s = session();
        s.post_samples(&on_cross(0, 3, 4.0)).unwrap();
        assert!(matches!(s.post_samples(&on_cross(20, 2, 4.0)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn empty_screen_still_breeds() {
        let mut s = session();
        s.post_samples(&on_cross(0, 26, 4.0)).unwrap();
        let out = s.end_screen(None).unwrap();
        assert!(out.records.iter().all(|r| r.features.trans == 0 && r.features.time_ms == 0 && !r.features.selected));
        assert_eq!(out.phase, Phase::CrossFixation);
        assert_eq!(s.screens_completed(), 1);
        assert_eq!(s.population().generation, 1);
        assert_eq!(s.history().len(), 1);
        assert_eq!(s.ref_dp_mm(), None);
    }

    #[test]
    fn features_match_direct_pipeline() {
        let mut s = session();
        s.post_samples(&on_cross(0, 26, 4.0)).unwrap();
        let ref_dp = s.ref_dp_mm().unwrap();
        let genomes = s.population().genomes;
        let layout = s.layout().clone();
        let mut rng = EteaRng::seed_from_u64(3);
        let gaze = synthesize_gaze(&layout, &genomes, &SyntheticUser::default(), &mut rng).unwrap();
        let samples: Vec<_> =
            gaze.samples.iter().map(|g| GazeSample { timestamp_ms: g.timestamp_ms + 1000, ..*g }).collect();
        for chunk in samples.chunks(7) {
            s.post_samples(chunk).unwrap();
        }
        let out = s.end_screen(None).unwrap();
        let direct = GazePipeline::default().screen_features(&samples, &layout, &genomes, ref_dp, gaze.selected_zone);
        assert_eq!(out.records.map(|r| r.features), direct);
        assert_eq!(out.summary.selected_zone, gaze.selected_zone);
    }

    #[test]
    fn selection_needs_a_recent_valid_sample() {
        let layout = ScreenLayout::default();
        let (x, y) = layout.zone(2).center();
        let samples = vec![GazeSample::new(0, x, y, 4.0), GazeSample::invalid(60), GazeSample::invalid(120)];
        assert_eq!(selected_zone_at(&samples, 100, &layout), Some(2));
        assert_eq!(selected_zone_at(&samples, 101, &layout), None);
        assert_eq!(selected_zone_at(&samples, 0, &layout), Some(2));
        assert_eq!(selected_zone_at(&[GazeSample::new(0, 0.5, 0.5, 4.0)], 10, &layout), None);
    }

    #[test]
    fn finishes_after_max_screens() {
        let config = SessionConfig { mode: SessionMode::Synthetic, max_screens: Some(2), ..SessionConfig::default() };
        let mut s = Session::new("t".into(), 1, 5, config).unwrap();
        assert_eq!(s.auto_advance().unwrap().phase, Phase::CrossFixation);
        assert_eq!(s.auto_advance().unwrap().phase, Phase::Finished);
        assert!(s.auto_advance().is_err());
        assert!(s.post_samples(&on_cross(1_000_000, 1, 4.0)).is_err());
        assert_eq!(s.records().len(), 16);
        assert!(s.records().chunks(8).all(|screen| screen.iter().filter(|r| r.features.selected).count() <= 1));
    }

    #[test]
    fn synthetic_sessions_are_deterministic() {
        let config = SessionConfig { mode: SessionMode::Synthetic, ..SessionConfig::default() };
        let run = || {
            let mut s = Session::new("t".into(), 1, 9, config.clone()).unwrap();
            for _ in 0..3 {
                s.auto_advance().unwrap();
            }
            s.records().to_vec()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn human_sessions_cannot_auto_advance() {
        assert!(session().auto_advance().is_err());
    }
}
