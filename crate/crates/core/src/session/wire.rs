//! Request and response bodies of the session protocol. Feature fields use the
//! record CSV column names; coordinates are normalized to [0, 1].

use serde::{Deserialize, Serialize};

use super::{Phase, ScreenOutcome, ScreenSummary, Session, SessionConfig, SessionMode, CROSS_RECT};
use crate::features::EvaluationRecord;
use crate::gaze::{GazeSample, Rect};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateRequest {
    pub subject_id: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub config: Option<SessionConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateResponse {
    pub session_id: String,
    pub phase: Phase,
    pub mode: SessionMode,
    pub cross_rect: Rect,
}

/// One gaze sample as sent by a client.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireSample {
    pub t: i64,
    pub x: f64,
    pub y: f64,
    pub pupil: f64,
    #[serde(default = "default_valid")]
    pub valid: bool,
}

fn default_valid() -> bool {
    true
}

impl From<WireSample> for GazeSample {
    fn from(w: WireSample) -> Self {
        GazeSample { timestamp_ms: w.t, x: w.x, y: w.y, pupil_mm: w.pupil, valid: w.valid }
    }
}

impl From<GazeSample> for WireSample {
    fn from(s: GazeSample) -> Self {
        WireSample { t: s.timestamp_ms, x: s.x, y: s.y, pupil: s.pupil_mm, valid: s.valid }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplesRequest {
    pub samples: Vec<WireSample>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplesResponse {
    pub phase: Phase,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ref_dp: Option<f64>,
    /// Zone rectangles, present while colors are on screen.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layout: Option<Vec<Rect>>,
    /// `#rrggbb` per zone, aligned with `layout`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub colors: Option<Vec<String>>,
}

impl SamplesResponse {
    pub fn for_session(session: &Session) -> Self {
        let showing = session.phase() == Phase::Evaluation;
        SamplesResponse {
            phase: session.phase(),
            ref_dp: session.ref_dp_mm(),
            layout: showing.then(|| session.layout().zones().to_vec()),
            colors: showing.then(|| session.population().genomes.iter().map(|g| format!("#{g}")).collect()),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SpaceRequest {
    /// Time of the key press, on the sample clock.
    #[serde(default)]
    pub t: Option<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceResponse {
    pub phase: Phase,
    pub features: Vec<EvaluationRecord>,
    pub generation_summary: ScreenSummary,
    /// Cross region of the next screen; absent once the session is finished.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub next_cross: Option<Rect>,
}

impl From<ScreenOutcome> for SpaceResponse {
    fn from(o: ScreenOutcome) -> Self {
        SpaceResponse {
            phase: o.phase,
            features: o.records.to_vec(),
            generation_summary: o.summary,
            next_cross: (o.phase != Phase::Finished).then_some(CROSS_RECT),
        }
    }
}
