use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::discretize::{label_m1, BinEdges, Class};
use crate::features::{EvaluationRecord, ZoneFeatures};

/// Predictive attributes available to the mining step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Attribute {
    TransNorm,
    TimeNorm,
    CognitiveDp,
    TransRank,
    TimeRank,
    MeanDpRank,
    MaxDpVarRank,
    SumDpVarRank,
    Selected,
}

impl Attribute {
    pub const ALL: [Attribute; 9] = [
        Attribute::TransNorm,
        Attribute::TimeNorm,
        Attribute::CognitiveDp,
        Attribute::TransRank,
        Attribute::TimeRank,
        Attribute::MeanDpRank,
        Attribute::MaxDpVarRank,
        Attribute::SumDpVarRank,
        Attribute::Selected,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attribute::TransNorm => "TransNorm",
            Attribute::TimeNorm => "TimeNorm",
            Attribute::CognitiveDp => "CognitiveDP",
            Attribute::TransRank => "TransRank",
            Attribute::TimeRank => "TimeRank",
            Attribute::MeanDpRank => "MeanDPRank",
            Attribute::MaxDpVarRank => "MaxDPVarRank",
            Attribute::SumDpVarRank => "SumDPVarRank",
            Attribute::Selected => "Selected",
        }
    }

    /// Binary attributes split into their two values rather than at a threshold.
    pub fn is_binary(self) -> bool {
        self == Attribute::Selected
    }

    pub fn of(self, f: &ZoneFeatures) -> f64 {
        match self {
            Attribute::TransNorm => f.trans_norm,
            Attribute::TimeNorm => f.time_norm,
            Attribute::CognitiveDp => f.cognitive_dp_mm,
            Attribute::TransRank => f64::from(f.trans_rank),
            Attribute::TimeRank => f64::from(f.time_rank),
            Attribute::MeanDpRank => f64::from(f.mean_dp_rank),
            Attribute::MaxDpVarRank => f64::from(f.max_dp_var_rank),
            Attribute::SumDpVarRank => f64::from(f.sum_dp_var_rank),
            Attribute::Selected => f64::from(u8::from(f.selected)),
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Attribute {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| format!("unknown attribute {s:?}"))
    }
}

/// Anything a tree can read attribute values from.
pub trait AttributeSource {
    fn attribute(&self, a: Attribute) -> Option<f64>;
}

impl AttributeSource for ZoneFeatures {
    fn attribute(&self, a: Attribute) -> Option<f64> {
        Some(a.of(self))
    }
}

impl AttributeSource for EvaluationRecord {
    fn attribute(&self, a: Attribute) -> Option<f64> {
        Some(a.of(&self.features))
    }
}

impl AttributeSource for [(Attribute, f64)] {
    fn attribute(&self, a: Attribute) -> Option<f64> {
        self.iter().find(|(k, _)| *k == a).map(|(_, v)| *v)
    }
}

/// The four attribute sets a tree can be trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    A,
    APrime,
    B,
    BPrime,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::A, Variant::APrime, Variant::B, Variant::BPrime];

    pub fn attributes(self) -> Vec<Attribute> {
        use Attribute::*;
        let relative = [TransNorm, TimeNorm, CognitiveDp];
        let ranks = [TransRank, TimeRank, MeanDpRank, MaxDpVarRank, SumDpVarRank];
        match self {
            Variant::A => relative.to_vec(),
            Variant::APrime => [&relative[..], &[Selected]].concat(),
            Variant::B => ranks.to_vec(),
            Variant::BPrime => [&ranks[..], &[Selected]].concat(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::A => "A",
            Variant::APrime => "A'",
            Variant::B => "B",
            Variant::BPrime => "B'",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(Variant::A),
            "A'" | "a'" | "Ap" | "ap" => Ok(Variant::APrime),
            "B" | "b" => Ok(Variant::B),
            "B'" | "b'" | "Bp" | "bp" => Ok(Variant::BPrime),
            other => Err(format!("unknown dataset variant {other:?} (expected A, A', B or B')")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub values: Vec<f64>,
    pub class: Class,
}

/// Rows projected onto a variant's attributes, labeled by lightness class.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub attributes: Vec<Attribute>,
    pub rows: Vec<Row>,
}

impl Dataset {
    pub fn new(attributes: Vec<Attribute>, rows: Vec<Row>) -> Self {
        debug_assert!(rows.iter().all(|r| r.values.len() == attributes.len()));
        Self { attributes, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Pairs each value of row `i` with its attribute.
    pub fn named_row(&self, i: usize) -> Vec<(Attribute, f64)> {
        self.attributes.iter().copied().zip(self.rows[i].values.iter().copied()).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset { attributes: self.attributes.clone(), rows: indices.iter().map(|&i| self.rows[i].clone()).collect() }
    }
}

/// Projects records onto `variant` and labels them through `edges`.
pub fn build_dataset(records: &[EvaluationRecord], variant: Variant, edges: &BinEdges) -> Dataset {
    let attributes = variant.attributes();
    let rows = records
        .iter()
        .map(|r| Row {
            values: attributes.iter().map(|a| a.of(&r.features)).collect(),
            class: label_m1(r.features.m1, edges),
        })
        .collect();
    Dataset { attributes, rows }
}

/// Alternates records ordered by (subject, screen, zone): even positions
/// form the learning set, odd positions the validation set.
pub fn split_half(records: &[EvaluationRecord]) -> (Vec<EvaluationRecord>, Vec<EvaluationRecord>) {
    let mut sorted = records.to_vec();
    sorted.sort_by_key(|r| (r.subject, r.screen, r.zone));
    let (mut learning, mut validation) = (Vec::new(), Vec::new());
    for (i, r) in sorted.into_iter().enumerate() {
        if i % 2 == 0 {
            learning.push(r);
        } else {
            validation.push(r);
        }
    }
    (learning, validation)
}
