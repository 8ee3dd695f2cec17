//! Gaze-stream processing: jerk filtering and dispersion-threshold fixation
//! detection over 20 ms eye-tracker samples.

mod io;
mod layout;

pub use io::{read_samples, write_samples, SAMPLE_HEADER};
pub use layout::{assign_zone, Rect, ScreenLayout, ZoneIndex, ZONE_COUNT};

use serde::{Deserialize, Serialize};

/// Nominal eye-tracker sampling period.
pub const SAMPLE_PERIOD_MS: i64 = 20;

/// Default jerk speed threshold, normalized units per second.
pub const DEFAULT_MAX_SPEED: f64 = 3.0;

/// Minimum number of samples making up a fixation.
pub const MIN_FIXATION_SAMPLES: usize = 5;

/// One binocular gaze reading reduced to a single point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    /// Milliseconds since screen onset.
    pub timestamp_ms: i64,
    pub x: f64,
    pub y: f64,
    /// Mean pupil diameter of the captured eyes, millimeters.
    pub pupil_mm: f64,
    pub valid: bool,
}

/// A single eye's reading as delivered by the tracker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeReading {
    pub x: f64,
    pub y: f64,
    pub pupil_mm: f64,
    pub valid: bool,
}

impl GazeSample {
    pub fn new(timestamp_ms: i64, x: f64, y: f64, pupil_mm: f64) -> Self {
        Self { timestamp_ms, x, y, pupil_mm, valid: true }
    }

    pub fn invalid(timestamp_ms: i64) -> Self {
        Self { timestamp_ms, x: 0.0, y: 0.0, pupil_mm: 0.0, valid: false }
    }

    /// Collapses both eyes into one sample: position is the midpoint of the
    /// valid eyes and pupil size their mean.
    pub fn from_binocular(timestamp_ms: i64, left: EyeReading, right: EyeReading) -> Self {
        match (left.valid, right.valid) {
            (true, true) => Self::new(
                timestamp_ms,
                (left.x + right.x) / 2.0,
                (left.y + right.y) / 2.0,
                (left.pupil_mm + right.pupil_mm) / 2.0,
            ),
            (true, false) => Self::new(timestamp_ms, left.x, left.y, left.pupil_mm),
            (false, true) => Self::new(timestamp_ms, right.x, right.y, right.pupil_mm),
            (false, false) => Self::invalid(timestamp_ms),
        }
    }

    /// Speed from `prev` to `self` in normalized units per second.
    pub fn speed_from(&self, prev: &GazeSample) -> f64 {
        let dt = (self.timestamp_ms - prev.timestamp_ms) as f64 / 1000.0;
        let dist = (self.x - prev.x).hypot(self.y - prev.y);
        if dt > 0.0 {
            dist / dt
        } else if dist == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// A dwell event attributed to one zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub cx: f64,
    pub cy: f64,
    pub start_ms: i64,
    pub duration_ms: i64,
    pub zone: ZoneIndex,
    pub pupil_mean_mm: f64,
    pub pupil_begin_mm: f64,
    pub pupil_end_mm: f64,
    pub pupil_max_variation_mm: f64,
    pub pupil_sum_variation_mm: f64,
    pub sample_count: usize,
}

impl Fixation {
    pub fn end_ms(&self) -> i64 {
        self.start_ms + self.duration_ms
    }
}

/// Dispersion-threshold fixation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixationParams {
    /// Maximum bounding-box width + height of a fixation, normalized units.
    pub dispersion_threshold: f64,
    pub min_duration_ms: i64,
}

impl Default for FixationParams {
    fn default() -> Self {
        Self { dispersion_threshold: 0.03, min_duration_ms: 100 }
    }
}

/// Drops invalid samples and samples moving faster than `max_speed` away
/// from the last sample kept.
///
/// Measuring speed against the last kept sample (rather than the raw
/// predecessor) makes the filter idempotent.
pub fn filter_jerks(stream: &[GazeSample], max_speed: f64) -> Vec<GazeSample> {
    let mut out: Vec<GazeSample> = Vec::with_capacity(stream.len());
    for s in stream.iter().filter(|s| s.valid) {
        match out.last() {
            Some(prev) if s.speed_from(prev) > max_speed => {}
            _ => out.push(*s),
        }
    }
    out
}

#[derive(Clone, Copy)]
struct BBox {
    min_x: f64,
    max_x: f64,
    min_y: f64,
    max_y: f64,
}

impl BBox {
    fn of(s: &GazeSample) -> Self {
        Self { min_x: s.x, max_x: s.x, min_y: s.y, max_y: s.y }
    }

    fn extended(mut self, s: &GazeSample) -> Self {
        self.min_x = self.min_x.min(s.x);
        self.max_x = self.max_x.max(s.x);
        self.min_y = self.min_y.min(s.y);
        self.max_y = self.max_y.max(s.y);
        self
    }

    fn dispersion(&self) -> f64 {
        (self.max_x - self.min_x) + (self.max_y - self.min_y)
    }
}

/// I-DT fixation detection.
///
/// Scanning left to right, the window starting at the current sample grows
/// while its dispersion stays within the threshold. A window spanning at
/// least `min_duration_ms` with at least five samples becomes a fixation and
/// the scan resumes after it; otherwise the scan advances by one sample.
/// Fixations whose centroid falls outside every zone are discarded.
pub fn detect_fixations(
    stream: &[GazeSample],
    layout: &ScreenLayout,
    params: &FixationParams,
) -> Vec<Fixation> {
    let mut fixations = Vec::new();
    if stream.len() < MIN_FIXATION_SAMPLES {
        return fixations;
    }
    let mut start = 0;
    while start < stream.len() {
        let mut bbox = BBox::of(&stream[start]);
        let mut end = start;
        while end + 1 < stream.len() {
            let grown = bbox.extended(&stream[end + 1]);
            if grown.dispersion() > params.dispersion_threshold {
                break;
            }
            bbox = grown;
            end += 1;
        }
        let run = &stream[start..=end];
        let span = run[run.len() - 1].timestamp_ms - run[0].timestamp_ms;
        if run.len() >= MIN_FIXATION_SAMPLES && span >= params.min_duration_ms {
            if let Some(fixation) = summarize_run(run, layout) {
                fixations.push(fixation);
            }
            start = end + 1;
        } else {
            start += 1;
        }
    }
    fixations
}

fn summarize_run(run: &[GazeSample], layout: &ScreenLayout) -> Option<Fixation> {
    let n = run.len() as f64;
    let cx = run.iter().map(|s| s.x).sum::<f64>() / n;
    let cy = run.iter().map(|s| s.y).sum::<f64>() / n;
    let zone = layout.assign_zone(cx, cy)?;
    let (max_var, sum_var) = run
        .windows(2)
        .map(|w| (w[1].pupil_mm - w[0].pupil_mm).abs())
        .fold((0.0_f64, 0.0_f64), |(mx, sm), d| (mx.max(d), sm + d));
    let first = run[0];
    let last = run[run.len() - 1];
    Some(Fixation {
        cx,
        cy,
        start_ms: first.timestamp_ms,
        duration_ms: last.timestamp_ms - first.timestamp_ms,
        zone,
        pupil_mean_mm: run.iter().map(|s| s.pupil_mm).sum::<f64>() / n,
        pupil_begin_mm: first.pupil_mm,
        pupil_end_mm: last.pupil_mm,
        pupil_max_variation_mm: max_var,
        pupil_sum_variation_mm: sum_var,
        sample_count: run.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn still(n: usize, x: f64, y: f64, pupil: f64) -> Vec<GazeSample> {
        (0..n).map(|i| GazeSample::new(i as i64 * SAMPLE_PERIOD_MS, x, y, pupil)).collect()
    }

    #[test]
    fn empty_stream_filters_to_empty() {
        assert!(filter_jerks(&[], DEFAULT_MAX_SPEED).is_empty());
    }

    #[test]
    fn invalid_samples_are_dropped() {
        let mut stream = still(10, 0.5, 0.5, 4.0);
        for s in stream.iter_mut() {
            s.timestamp_ms *= 2;
        }
        stream.insert(4, GazeSample::invalid(7));
        let out = filter_jerks(&stream, DEFAULT_MAX_SPEED);
        assert_eq!(out.len(), 10);
        assert!(out.iter().all(|s| s.valid));
    }

    #[test]
    fn teleport_is_removed() {
        let mut stream = still(6, 0.2, 0.2, 4.0);
        stream[3].x = 0.9;
        let out = filter_jerks(&stream, DEFAULT_MAX_SPEED);
        assert_eq!(out.len(), 5);
        assert!(out.iter().all(|s| s.x == 0.2));
    }

    #[test]
    fn binocular_reduction() {
        let l = EyeReading { x: 0.2, y: 0.4, pupil_mm: 3.0, valid: true };
        let r = EyeReading { x: 0.4, y: 0.6, pupil_mm: 5.0, valid: true };
        let s = GazeSample::from_binocular(40, l, r);
        assert!((s.x - 0.3).abs() < 1e-12 && (s.y - 0.5).abs() < 1e-12);
        assert_eq!(s.pupil_mm, 4.0);
        let one = GazeSample::from_binocular(40, l, EyeReading { valid: false, ..r });
        assert_eq!((one.x, one.pupil_mm), (0.2, 3.0));
        assert!(!GazeSample::from_binocular(40, EyeReading { valid: false, ..l }, EyeReading { valid: false, ..r }).valid);
    }

    #[test]
    fn no_fixation_in_empty_or_short_stream() {
        let layout = ScreenLayout::default();
        assert!(detect_fixations(&[], &layout, &FixationParams::default()).is_empty());
        let (cx, cy) = layout.zone(0).center();
        assert!(detect_fixations(&still(4, cx, cy, 4.0), &layout, &FixationParams::default()).is_empty());
    }

    #[test]
    fn degenerate_cluster_is_one_fixation() {
        let layout = ScreenLayout::default();
        let (cx, cy) = layout.zone(3).center();
        let fx = detect_fixations(&still(10, cx, cy, 4.0), &layout, &FixationParams::default());
        assert_eq!(fx.len(), 1);
        let f = fx[0];
        assert_eq!(f.zone, 3);
        assert_eq!(f.duration_ms, 180);
        assert_eq!(f.sample_count, 10);
        assert_eq!(f.pupil_mean_mm, 4.0);
        assert_eq!(f.pupil_max_variation_mm, 0.0);
        assert_eq!(f.pupil_sum_variation_mm, 0.0);
    }

    #[test]
    fn dwell_in_center_is_not_a_fixation() {
        let layout = ScreenLayout::default();
        assert!(detect_fixations(&still(20, 0.5, 0.5, 4.0), &layout, &FixationParams::default()).is_empty());
    }

    #[test]
    fn short_dwell_is_not_a_fixation() {
        let layout = ScreenLayout::default();
        let (cx, cy) = layout.zone(1).center();
        // five samples span only 80 ms
        assert!(detect_fixations(&still(5, cx, cy, 4.0), &layout, &FixationParams::default()).is_empty());
        assert_eq!(detect_fixations(&still(6, cx, cy, 4.0), &layout, &FixationParams::default()).len(), 1);
    }

    #[test]
    fn pupil_statistics() {
        let layout = ScreenLayout::default();
        let (cx, cy) = layout.zone(6).center();
        let pupils = [4.0, 4.2, 4.1, 4.5, 4.4, 4.0];
        let stream: Vec<_> = pupils
            .iter()
            .enumerate()
            .map(|(i, &p)| GazeSample::new(i as i64 * 20, cx, cy, p))
            .collect();
        let f = detect_fixations(&stream, &layout, &FixationParams::default())[0];
        assert_eq!(f.pupil_begin_mm, 4.0);
        assert_eq!(f.pupil_end_mm, 4.0);
        assert!((f.pupil_max_variation_mm - 0.4).abs() < 1e-12);
        assert!((f.pupil_sum_variation_mm - 1.2).abs() < 1e-12);
        assert!((f.pupil_mean_mm - 25.2 / 6.0).abs() < 1e-12);
    }

    fn arb_stream() -> impl Strategy<Value = Vec<GazeSample>> {
        prop::collection::vec(
            (1i64..60, 0.0f64..1.0, 0.0f64..1.0, 2.0f64..7.0, prop::bool::weighted(0.9)),
            0..120,
        )
        .prop_map(|raw| {
            let mut t = 0;
            raw.into_iter()
                .map(|(dt, x, y, p, valid)| {
                    t += dt;
                    GazeSample { timestamp_ms: t, x, y, pupil_mm: p, valid }
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn filter_is_idempotent_subsequence(stream in arb_stream(), max_speed in 0.5f64..20.0) {
            let once = filter_jerks(&stream, max_speed);
            let twice = filter_jerks(&once, max_speed);
            prop_assert_eq!(&once, &twice);
            let mut it = stream.iter();
            for s in &once {
                prop_assert!(it.any(|x| x == s));
            }
        }

        #[test]
        fn fixations_are_ordered_and_long_enough(stream in arb_stream(), thr in 0.01f64..0.5) {
            let layout = ScreenLayout::default();
            let params = FixationParams { dispersion_threshold: thr, min_duration_ms: 100 };
            let fx = detect_fixations(&filter_jerks(&stream, 50.0), &layout, &params);
            for f in &fx {
                prop_assert!(f.duration_ms >= 100);
                prop_assert!(f.sample_count >= MIN_FIXATION_SAMPLES);
                prop_assert!(f.pupil_max_variation_mm <= f.pupil_sum_variation_mm);
                prop_assert!(f.zone < ZONE_COUNT);
            }
            for w in fx.windows(2) {
                prop_assert!(w[0].end_ms() < w[1].start_ms);
            }
        }

        #[test]
        fn sum_variation_zero_iff_constant_pupil(pupils in prop::collection::vec(prop_oneof![Just(4.0f64), 3.0f64..5.0], 6..20)) {
            let layout = ScreenLayout::default();
            let (cx, cy) = layout.zone(2).center();
            let stream: Vec<_> = pupils.iter().enumerate()
                .map(|(i, &p)| GazeSample::new(i as i64 * 20, cx, cy, p)).collect();
            let f = detect_fixations(&stream, &layout, &FixationParams::default())[0];
            let constant = pupils.iter().all(|&p| p == pupils[0]);
            prop_assert_eq!(f.pupil_sum_variation_mm == 0.0, constant);
        }
    }
}
