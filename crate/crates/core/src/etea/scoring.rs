use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::ZoneFeatures;
use crate::gaze::ZONE_COUNT;
use crate::mining::DecisionTree;

/// Dilation, in millimeters, that moves the squashed cognitive term from
/// 0.5 to about 0.73.
pub const COG_SCALE_MM: f64 = 0.5;

/// Logistic squashing of a pupil dilation into (0, 1); 0 mm maps to 0.5.
pub fn cognitive_squash(dilation_mm: f64) -> f64 {
    1.0 / (1.0 + (-dilation_mm / COG_SCALE_MM).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerMode {
    /// Weighted sum of normalized time, transitions and squashed dilation.
    #[default]
    Linear,
    /// Ordinal class (1 darkest .. 5 lightest) predicted by a decision tree.
    Model,
}

/// How gaze features combine into a per-zone fitness.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerConfig {
    pub w_time: f64,
    pub w_trans: f64,
    /// May be negative: the direction of the pupil response is not settled.
    pub w_cog: f64,
    pub selected_bonus: f64,
    #[serde(default)]
    pub mode: ScorerMode,
    #[serde(skip)]
    pub model: Option<Arc<DecisionTree>>,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self { w_time: 0.5, w_trans: 0.3, w_cog: 0.2, selected_bonus: 0.25, mode: ScorerMode::Linear, model: None }
    }
}

impl ScorerConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.w_time, self.w_trans, self.w_cog, self.selected_bonus];
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidConfig("scorer weights must be finite".into()));
        }
        if self.mode == ScorerMode::Linear && self.w_time + self.w_trans + self.w_cog <= 0.0 {
            return Err(Error::InvalidConfig("linear scorer weights must sum to a positive value".into()));
        }
        Ok(())
    }
}

/// Fitness of each zone of one screen.
pub fn score_zones(features: &[ZoneFeatures; ZONE_COUNT], config: &ScorerConfig) -> Result<[f64; ZONE_COUNT]> {
    config.validate()?;
    let bonus = |f: &ZoneFeatures| if f.selected { config.selected_bonus } else { 0.0 };
    match config.mode {
        ScorerMode::Linear => Ok(features.map(|f| {
            config.w_time * f.time_norm
                + config.w_trans * f.trans_norm
                + config.w_cog * cognitive_squash(f.cognitive_dp_mm)
                + bonus(&f)
        })),
        ScorerMode::Model => {
            let tree = config.model.as_ref().ok_or(Error::MissingModel)?;
            let mut scores = [0.0; ZONE_COUNT];
            for (s, f) in scores.iter_mut().zip(features) {
                *s = f64::from(tree.predict(f)?.ordinal()) + bonus(f);
            }
            Ok(scores)
        }
    }
}
