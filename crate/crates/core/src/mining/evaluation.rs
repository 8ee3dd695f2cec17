use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{build_dataset, split_half, Dataset, Variant};
use super::discretize::{equal_frequency_bins, BinEdges, Class, CLASS_COUNT};
use super::tree::{train_tree, DecisionTree, TreeParams};
use crate::error::{Error, Result};
use crate::features::EvaluationRecord;

/// Real class in rows, predicted class in columns.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoincidenceMatrix {
    pub counts: [[u64; CLASS_COUNT]; CLASS_COUNT],
}

impl CoincidenceMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..CLASS_COUNT).map(|i| self.counts[i][i]).sum()
    }

    pub fn add(&mut self, actual: Class, predicted: Class) {
        self.counts[actual.index()][predicted.index()] += 1;
    }

    pub fn merge(&mut self, other: &CoincidenceMatrix) {
        for (row, o) in self.counts.iter_mut().zip(&other.counts) {
            for (c, v) in row.iter_mut().zip(o) {
                *c += v;
            }
        }
    }
}

pub fn coincidence_matrix(actuals: &[Class], predictions: &[Class]) -> Result<CoincidenceMatrix> {
    if actuals.len() != predictions.len() {
        return Err(Error::InvalidConfig(format!(
            "{} actual classes but {} predictions",
            actuals.len(),
            predictions.len()
        )));
    }
    let mut m = CoincidenceMatrix::default();
    for (&a, &p) in actuals.iter().zip(predictions) {
        m.add(a, p);
    }
    Ok(m)
}

/// Share of the diagonal; 0 for an empty matrix.
pub fn accuracy(m: &CoincidenceMatrix) -> f64 {
    match m.total() {
        0 => 0.0,
        total => m.trace() as f64 / total as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    /// Held-out predictions of every fold pooled together.
    pub matrix: CoincidenceMatrix,
}

/// Shuffles `0..n` with a seeded generator, then cuts it into `folds`
/// contiguous runs whose sizes differ by at most one.
pub fn fold_indices(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / folds, n % folds);
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        out.push(order[start..start + len].to_vec());
        start += len;
    }
    out
}

fn evaluate_fold(dataset: &Dataset, held_out: &[usize], params: &TreeParams) -> Result<CoincidenceMatrix> {
    let mut is_held = vec![false; dataset.len()];
    for &i in held_out {
        is_held[i] = true;
    }
    let train: Vec<usize> = (0..dataset.len()).filter(|&i| !is_held[i]).collect();
    let tree = train_tree(&dataset.subset(&train), params)?;
    let mut m = CoincidenceMatrix::default();
    for &i in held_out {
        let row = &dataset.rows[i];
        m.add(row.class, tree.predict_values(&row.values));
    }
    Ok(m)
}

/// K-fold cross-validation; folds are trained in parallel and collected in
/// fold order, so the result does not depend on scheduling.
pub fn cross_validate(dataset: &Dataset, folds: usize, params: &TreeParams, seed: u64) -> Result<CvReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if folds < 2 || folds > dataset.len() {
        return Err(Error::InvalidConfig(format!("{folds} folds over {} rows", dataset.len())));
    }
    let partition = fold_indices(dataset.len(), folds, seed);
    let matrices: Vec<CoincidenceMatrix> =
        partition.par_iter().map(|held| evaluate_fold(dataset, held, params)).collect::<Result<_>>()?;
    let fold_accuracies: Vec<f64> = matrices.iter().map(accuracy).collect();
    let mean = fold_accuracies.iter().sum::<f64>() / folds as f64;
    let mut matrix = CoincidenceMatrix::default();
    for m in &matrices {
        matrix.merge(m);
    }
    Ok(CvReport { fold_accuracies, mean, matrix })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinsChoice {
    /// Fixed edges 81, 112, 141, 172.
    Preset,
    /// Equal-frequency edges recomputed from the records.
    Auto,
}

impl FromStr for BinsChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "preset" | "paper" => Ok(BinsChoice::Preset),
            "auto" => Ok(BinsChoice::Auto),
            other => Err(format!("unknown bins choice {other:?} (expected preset, paper or auto)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub bins: BinsChoice,
    pub variants: Vec<Variant>,
    pub folds: usize,
    pub seed: u64,
    pub tree: TreeParams,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self { bins: BinsChoice::Auto, variants: Variant::ALL.to_vec(), folds: 15, seed: 0, tree: TreeParams::default() }
    }
}

#[derive(Debug, Clone)]
pub struct ModelEvaluation {
    pub variant: Variant,
    pub cv: CvReport,
    /// Tree trained on the whole learning half.
    pub tree: DecisionTree,
    pub validation: CoincidenceMatrix,
}

impl ModelEvaluation {
    pub fn validation_accuracy(&self) -> f64 {
        accuracy(&self.validation)
    }
}

#[derive(Debug, Clone)]
pub struct MiningReport {
    pub bins: BinsChoice,
    pub edges: BinEdges,
    pub learning_rows: usize,
    pub validation_rows: usize,
    pub folds: usize,
    pub models: Vec<ModelEvaluation>,
}

/// Discretize, split in halves, then per variant: cross-validate on the
/// learning half, train on all of it and score the validation half.
pub fn run_pipeline(records: &[EvaluationRecord], config: &MiningConfig) -> Result<MiningReport> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let edges = match config.bins {
        BinsChoice::Preset => BinEdges::preset(),
        BinsChoice::Auto => equal_frequency_bins(&records.iter().map(|r| r.features.m1).collect::<Vec<_>>())?,
    };
    let (learning, validation) = split_half(records);
    let mut models = Vec::with_capacity(config.variants.len());
    for &variant in &config.variants {
        let learn = build_dataset(&learning, variant, &edges);
        let cv = cross_validate(&learn, config.folds, &config.tree, config.seed)?;
        let tree = train_tree(&learn, &config.tree)?;
        let check = build_dataset(&validation, variant, &edges);
        let mut matrix = CoincidenceMatrix::default();
        for row in &check.rows {
            matrix.add(row.class, tree.predict_values(&row.values));
        }
        models.push(ModelEvaluation { variant, cv, tree, validation: matrix });
    }
    Ok(MiningReport {
        bins: config.bins,
        edges,
        learning_rows: learning.len(),
        validation_rows: validation.len(),
        folds: config.folds,
        models,
    })
}

fn percent(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

pub fn format_matrix(m: &CoincidenceMatrix) -> String {
    let mut out = String::new();
    write!(out, "{:<20}", "Real \\ Predicted").unwrap();
    for c in Class::ALL {
        write!(out, "{:>10}", c.name()).unwrap();
    }
    out.push('\n');
    for (c, row) in Class::ALL.iter().zip(&m.counts) {
        write!(out, "{:<20}", c.name()).unwrap();
        for v in row {
            write!(out, "{v:>10}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Plain-text report: an accuracy table across variants, then one
/// coincidence matrix per model.
pub fn format_report(report: &MiningReport) -> String {
    let mut out = String::new();
    let cuts: Vec<String> = report.edges.cuts().iter().map(|c| c.to_string()).collect();
    let bins = match report.bins {
        BinsChoice::Preset => "preset",
        BinsChoice::Auto => "auto",
    };
    writeln!(out, "m1 cuts ({bins}): {}", cuts.join(" ")).unwrap();
    writeln!(out, "learning rows: {}  validation rows: {}", report.learning_rows, report.validation_rows).unwrap();
    out.push('\n');
    write!(out, "{:<24}", "").unwrap();
    for m in &report.models {
        write!(out, "{:>10}", m.variant.name()).unwrap();
    }
    out.push('\n');
    write!(out, "{:<24}", "Correctly classified").unwrap();
    for m in &report.models {
        write!(out, "{:>10}", percent(m.validation_accuracy())).unwrap();
    }
    out.push('\n');
    write!(out, "{:<24}", format!("CV mean ({} folds)", report.folds)).unwrap();
    for m in &report.models {
        write!(out, "{:>10}", percent(m.cv.mean)).unwrap();
    }
    out.push('\n');
    for m in &report.models {
        writeln!(out, "\nCoincidence matrix for model {} (validation half)", m.variant.name()).unwrap();
        out.push_str(&format_matrix(&m.validation));
    }
    out
}
