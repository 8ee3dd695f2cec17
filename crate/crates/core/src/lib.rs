//! Gaze-driven interactive evolution of colors.
//!
//! Raw gaze samples are filtered and grouped into fixations ([`gaze`]),
//! aggregated into per-square features ([`features`]), scored to drive a
//! small genetic algorithm ([`etea`]), and mined for a lightness predictor
//! ([`mining`]). [`session`] runs the live protocol on top of all of it.

pub mod error;
pub mod etea;
pub mod features;
pub mod gaze;
pub mod mining;
pub mod pipeline;
pub mod session;

pub use error::{Error, Result};
pub use etea::{
    init_population, run_simulation, score_zones, step_generation, synthesize_gaze, EteaConfig, EteaRng,
    GenerationSummary, Population, ScorerConfig, ScorerMode, SyntheticUser,
};
pub use features::{compute_zone_features, ColorGenome, EvaluationRecord, ZoneFeatures};
pub use gaze::{detect_fixations, filter_jerks, Fixation, FixationParams, GazeSample, Rect, ScreenLayout};
pub use mining::{BinEdges, Class, CoincidenceMatrix, Dataset, DecisionTree, TreeParams, Variant};
pub use pipeline::GazePipeline;
pub use session::{Phase, Session, SessionConfig, SessionMode, SessionStore};
