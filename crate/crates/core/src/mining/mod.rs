//! Learning to predict a square's lightness class from gaze features:
//! equal-frequency discretization of m1, attribute projections, a gain-ratio
//! decision tree, cross-validation and coincidence-matrix evaluation.

mod dataset;
mod discretize;
mod evaluation;
mod tree;

pub use dataset::{build_dataset, split_half, Attribute, AttributeSource, Dataset, Row, Variant};
pub use discretize::{equal_frequency_bins, equal_frequency_cuts, label_m1, BinEdges, Class, CLASS_COUNT};
pub use evaluation::{
    accuracy, coincidence_matrix, cross_validate, fold_indices, format_matrix, format_report, run_pipeline, BinsChoice, CoincidenceMatrix,
    CvReport, MiningConfig, MiningReport, ModelEvaluation,
};
pub use tree::{train_tree, CostMatrix, DecisionTree, Node, TreeParams, MODEL_MAGIC};
