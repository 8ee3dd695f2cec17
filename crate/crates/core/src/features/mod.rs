//! Per-zone gaze features and objective lightness distances.

mod genome;
mod record;

pub use genome::{ColorGenome, ParseGenomeError, GENOME_BITS};
pub use record::{read_records, write_records, EvaluationRecord, RECORD_HEADER};

use serde::{Deserialize, Serialize};

use crate::gaze::{Fixation, Rect, ScreenLayout, ZoneIndex, ZONE_COUNT};

/// Luminance-weighted lightness, 0 for black and 255 for white.
pub fn m1(r: u8, g: u8, b: u8) -> f64 {
    0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b)
}

/// Plain channel sum; superseded by [`m1`] but kept for reference.
pub fn m1_sum(r: u8, g: u8, b: u8) -> f64 {
    f64::from(r) + f64::from(g) + f64::from(b)
}

/// `255·√3` minus the euclidean distance to white.
pub fn m2(r: u8, g: u8, b: u8) -> f64 {
    let d = |c: u8| 255.0 - f64::from(c);
    255.0 * 3f64.sqrt() - (d(r).powi(2) + d(g).powi(2) + d(b).powi(2)).sqrt()
}

/// Darkest channel.
pub fn ms(r: u8, g: u8, b: u8) -> f64 {
    f64::from(r.min(g).min(b))
}

/// Competition ranking, rank 1 for the largest value; tied values share the
/// smallest rank and the following ranks are skipped.
pub fn assign_ranks(values: &[f64; ZONE_COUNT]) -> [u32; ZONE_COUNT] {
    let mut ranks = [0; ZONE_COUNT];
    for (rank, v) in ranks.iter_mut().zip(values) {
        *rank = 1 + values.iter().filter(|&&o| o > *v).count() as u32;
    }
    ranks
}

/// The stored record for one colored square of one screen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneFeatures {
    pub trans: u32,
    pub trans_rank: u32,
    pub trans_pop: u32,
    pub trans_norm: f64,
    pub time_ms: i64,
    pub time_rank: u32,
    pub time_pop_ms: i64,
    pub time_norm: f64,
    #[serde(rename = "mean_dp")]
    pub mean_dp_mm: f64,
    pub mean_dp_rank: u32,
    #[serde(rename = "ref_dp")]
    pub ref_dp_mm: f64,
    #[serde(rename = "cognitive_dp")]
    pub cognitive_dp_mm: f64,
    #[serde(rename = "max_dp_var")]
    pub max_dp_var_mm: f64,
    pub max_dp_var_rank: u32,
    #[serde(rename = "sum_dp_var")]
    pub sum_dp_var_mm: f64,
    pub sum_dp_var_rank: u32,
    pub selected: bool,
    pub m1: f64,
    pub m1_rank: u32,
    pub m2: f64,
    pub m2_rank: u32,
    pub ms: f64,
    pub ms_rank: u32,
    #[serde(flatten)]
    pub rect: Rect,
}

#[derive(Default, Clone, Copy)]
struct ZoneAccumulator {
    trans: u32,
    time_ms: i64,
    weighted_pupil: f64,
    pupil_sum: f64,
    fixations: u32,
    max_var: f64,
    sum_var: f64,
}

impl ZoneAccumulator {
    fn mean_dp(&self) -> f64 {
        match (self.fixations, self.time_ms) {
            (0, _) => 0.0,
            (n, 0) => self.pupil_sum / f64::from(n),
            (_, t) => self.weighted_pupil / t as f64,
        }
    }
}

fn ratio(part: f64, total: f64) -> f64 {
    if total > 0.0 {
        part / total
    } else {
        0.0
    }
}

/// Aggregates one screen's fixations into the eight per-zone records.
///
/// A transition is an entry into a zone: a fixation whose zone differs from
/// the previous fixation's zone, the first fixation included. Mean pupil size
/// is weighted by fixation duration. Unvisited zones carry zero pupil
/// features, including a zero cognitive dilation.
pub fn compute_zone_features(
    fixations: &[Fixation],
    layout: &ScreenLayout,
    genomes: &[ColorGenome; ZONE_COUNT],
    ref_dp_mm: f64,
    selected_zone: Option<ZoneIndex>,
) -> [ZoneFeatures; ZONE_COUNT] {
    let mut acc = [ZoneAccumulator::default(); ZONE_COUNT];
    let mut previous: Option<ZoneIndex> = None;
    for f in fixations {
        let a = &mut acc[f.zone];
        if previous != Some(f.zone) {
            a.trans += 1;
        }
        previous = Some(f.zone);
        a.time_ms += f.duration_ms;
        a.weighted_pupil += f.pupil_mean_mm * f.duration_ms as f64;
        a.pupil_sum += f.pupil_mean_mm;
        a.fixations += 1;
        a.max_var = a.max_var.max(f.pupil_max_variation_mm);
        a.sum_var += f.pupil_sum_variation_mm;
    }

    let trans_pop: u32 = acc.iter().map(|a| a.trans).sum();
    let time_pop_ms: i64 = acc.iter().map(|a| a.time_ms).sum();
    let column = |f: &dyn Fn(usize) -> f64| -> [f64; ZONE_COUNT] { std::array::from_fn(f) };

    let trans = column(&|i| f64::from(acc[i].trans));
    let time = column(&|i| acc[i].time_ms as f64);
    let mean_dp = column(&|i| acc[i].mean_dp());
    let max_var = column(&|i| acc[i].max_var);
    let sum_var = column(&|i| acc[i].sum_var);
    let m1s = column(&|i| genomes[i].m1());
    let m2s = column(&|i| {
        let (r, g, b) = genomes[i].rgb();
        m2(r, g, b)
    });
    let mss = column(&|i| {
        let (r, g, b) = genomes[i].rgb();
        ms(r, g, b)
    });

    let trans_rank = assign_ranks(&trans);
    let time_rank = assign_ranks(&time);
    let mean_dp_rank = assign_ranks(&mean_dp);
    let max_var_rank = assign_ranks(&max_var);
    let sum_var_rank = assign_ranks(&sum_var);
    let m1_rank = assign_ranks(&m1s);
    let m2_rank = assign_ranks(&m2s);
    let ms_rank = assign_ranks(&mss);

    std::array::from_fn(|i| ZoneFeatures {
        trans: acc[i].trans,
        trans_rank: trans_rank[i],
        trans_pop,
        trans_norm: ratio(trans[i], f64::from(trans_pop)),
        time_ms: acc[i].time_ms,
        time_rank: time_rank[i],
        time_pop_ms,
        time_norm: ratio(time[i], time_pop_ms as f64),
        mean_dp_mm: mean_dp[i],
        mean_dp_rank: mean_dp_rank[i],
        ref_dp_mm,
        cognitive_dp_mm: if acc[i].fixations > 0 { mean_dp[i] - ref_dp_mm } else { 0.0 },
        max_dp_var_mm: max_var[i],
        max_dp_var_rank: max_var_rank[i],
        sum_dp_var_mm: sum_var[i],
        sum_dp_var_rank: sum_var_rank[i],
        selected: selected_zone == Some(i),
        m1: m1s[i],
        m1_rank: m1_rank[i],
        m2: m2s[i],
        m2_rank: m2_rank[i],
        ms: mss[i],
        ms_rank: ms_rank[i],
        rect: *layout.zone(i),
    })
}
