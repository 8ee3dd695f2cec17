//! The end-of-screen processing chain shared by simulation, live sessions and
//! replay: jerk filter, fixation detection, per-zone aggregation.

use serde::{Deserialize, Serialize};

use crate::features::{compute_zone_features, ColorGenome, ZoneFeatures};
use crate::gaze::{
    detect_fixations, filter_jerks, Fixation, FixationParams, GazeSample, ScreenLayout, ZoneIndex,
    DEFAULT_MAX_SPEED, ZONE_COUNT,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GazePipeline {
    /// Jerk threshold, normalized units per second.
    pub max_speed: f64,
    pub fixation: FixationParams,
}

impl Default for GazePipeline {
    fn default() -> Self {
        Self { max_speed: DEFAULT_MAX_SPEED, fixation: FixationParams::default() }
    }
}

impl GazePipeline {
    pub fn fixations(&self, samples: &[GazeSample], layout: &ScreenLayout) -> Vec<Fixation> {
        let filtered = filter_jerks(samples, self.max_speed);
        detect_fixations(&filtered, layout, &self.fixation)
    }

    pub fn screen_features(
        &self,
        samples: &[GazeSample],
        layout: &ScreenLayout,
        genomes: &[ColorGenome; ZONE_COUNT],
        ref_dp_mm: f64,
        selected_zone: Option<ZoneIndex>,
    ) -> [ZoneFeatures; ZONE_COUNT] {
        let fixations = self.fixations(samples, layout);
        compute_zone_features(&fixations, layout, genomes, ref_dp_mm, selected_zone)
    }
}
