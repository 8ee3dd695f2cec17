use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CLASS_COUNT: usize = 5;

/// Lightness class of a square, ordered from darkest to lightest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Class {
    Darker,
    Dark,
    Undefined,
    Light,
    Lighter,
}

impl Class {
    pub const ALL: [Class; CLASS_COUNT] = [Class::Darker, Class::Dark, Class::Undefined, Class::Light, Class::Lighter];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// 1 for `Darker` up to 5 for `Lighter`.
    pub fn ordinal(self) -> u8 {
        self as u8 + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Class::Darker => "Darker",
            Class::Dark => "Dark",
            Class::Undefined => "Undefined",
            Class::Light => "Light",
            Class::Lighter => "Lighter",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Class {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown class {s:?}"))
    }
}

/// Four increasing cut points splitting m1 into five left-closed intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinEdges {
    cuts: [f64; CLASS_COUNT - 1],
}

impl BinEdges {
    pub fn new(cuts: [f64; CLASS_COUNT - 1]) -> Result<Self> {
        let increasing = cuts.windows(2).all(|w| w[0] < w[1]);
        if !increasing || cuts.iter().any(|c| !c.is_finite()) {
            return Err(Error::DegenerateBins { k: CLASS_COUNT, reason: format!("cuts {cuts:?} are not strictly increasing") });
        }
        Ok(Self { cuts })
    }

    /// Fixed lightness edges: `[1,81[`, `[81,112[`, `[112,141[`, `[141,172[`,
    /// `[172,251]`.
    pub fn preset() -> Self {
        Self { cuts: [81.0, 112.0, 141.0, 172.0] }
    }

    pub fn cuts(&self) -> &[f64; CLASS_COUNT - 1] {
        &self.cuts
    }
}

/// Cut points at the `k - 1` empirical quantiles: after a stable sort, cut `j`
/// is the value at position `floor(j * n / k)`.
pub fn equal_frequency_cuts(values: &[f64], k: usize) -> Result<Vec<f64>> {
    let degenerate = |reason: String| Error::DegenerateBins { k, reason };
    if k < 2 {
        return Err(degenerate("need at least two bins".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(degenerate("values must be finite".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() < k {
        return Err(degenerate(format!("only {} distinct values", distinct.len())));
    }
    let n = sorted.len();
    let cuts: Vec<f64> = (1..k).map(|j| sorted[j * n / k]).collect();
    if cuts.windows(2).any(|w| w[0] >= w[1]) || cuts[0] <= sorted[0] {
        return Err(degenerate("ties collapse two quantiles onto one value".into()));
    }
    Ok(cuts)
}

/// Five equal-frequency bins over m1 values.
pub fn equal_frequency_bins(values: &[f64]) -> Result<BinEdges> {
    let cuts = equal_frequency_cuts(values, CLASS_COUNT)?;
    BinEdges::new(cuts.try_into().expect("k - 1 cuts"))
}

/// Class of an m1 value; values below the first cut are `Darker` and values
/// at or above the last are `Lighter`.
pub fn label_m1(m1: f64, edges: &BinEdges) -> Class {
    let bin = edges.cuts.iter().filter(|&&c| c <= m1).count();
    Class::from_index(bin).expect("at most four cuts")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ColorGenome;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bin_counts(values: &[f64], edges: &BinEdges) -> [usize; 5] {
        let mut counts = [0; 5];
        for &v in values {
            counts[label_m1(v, edges).index()] += 1;
        }
        counts
    }

    #[test]
    fn preset_edges_label_examples() {
        let e = BinEdges::preset();
        assert_eq!(label_m1(90.0, &e), Class::Dark);
        assert_eq!(label_m1(172.0, &e), Class::Lighter);
        assert_eq!(label_m1(0.0, &e), Class::Darker);
        assert_eq!(label_m1(255.0, &e), Class::Lighter);
        assert_eq!(label_m1(80.999, &e), Class::Darker);
        assert_eq!(label_m1(81.0, &e), Class::Dark);
        assert_eq!(label_m1(140.0, &e), Class::Undefined);
        assert_eq!(label_m1(141.0, &e), Class::Light);
    }

    #[test]
    fn one_to_hundred_in_fives() {
        let values: Vec<f64> = (1..=100).map(f64::from).collect();
        let edges = equal_frequency_bins(&values).unwrap();
        assert_eq!(bin_counts(&values, &edges), [20; 5]);
    }

    #[test]
    fn constant_values_are_degenerate() {
        assert!(matches!(equal_frequency_bins(&[3.0; 50]), Err(Error::DegenerateBins { .. })));
        assert!(equal_frequency_bins(&[1.0, 2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn uniform_values_match_sort_and_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let values: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>() * 255.0).collect();
        let edges = equal_frequency_bins(&values).unwrap();
        let counts = bin_counts(&values, &edges);
        // oracle: slice the sorted values into five consecutive blocks
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let blocks: Vec<&[f64]> = sorted.chunks(2000).collect();
        for (j, block) in blocks.iter().enumerate() {
            assert!(block.iter().all(|&v| label_m1(v, &edges).index() == j));
        }
        for c in counts {
            assert!(c.abs_diff(2000) <= 1);
        }
    }

    #[test]
    fn random_genome_m1_bins_are_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let values: Vec<f64> = (0..100_000).map(|_| ColorGenome::random(&mut rng).m1()).collect();
        let edges = equal_frequency_bins(&values).unwrap();
        for c in bin_counts(&values, &edges) {
            let share = c as f64 / values.len() as f64;
            assert!((share - 0.2).abs() <= 0.01, "share {share}");
        }
    }

    proptest! {
        #[test]
        fn labels_are_monotone(a in -10.0f64..300.0, b in -10.0f64..300.0) {
            let e = BinEdges::preset();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(label_m1(lo, &e) <= label_m1(hi, &e));
        }

        #[test]
        fn distinct_values_give_near_equal_bins(n in 5usize..400, seed: u64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f64> = (0..n).map(|i| i as f64 + rng.random::<f64>() * 0.5).collect();
            let edges = equal_frequency_bins(&values).unwrap();
            let counts = bin_counts(&values, &edges);
            let (min, max) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            prop_assert!(max - min <= 1);
        }
    }
}
