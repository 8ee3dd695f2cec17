use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::ColorGenome;
use crate::gaze::{GazeSample, ScreenLayout, ZoneIndex, SAMPLE_PERIOD_MS, ZONE_COUNT};

/// Largest move between two consecutive samples while travelling between
/// zones; at 20 ms this stays under the default jerk threshold.
const TRANSIT_STEP: f64 = 0.045;

/// Samples spent on the central cross before the first saccade.
const LEAD_IN_SAMPLES: usize = 4;

const MIN_DWELL_MS: f64 = 120.0;

/// Position jitter must keep a dwell's bounding box (width + height) under
/// the default 0.03 dispersion threshold.
const MAX_POSITION_NOISE: f64 = 0.0075;

/// A simulated viewer who prefers lighter colors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticUser {
    /// Inverse softmax temperature over `m1 / 255`.
    pub beta: f64,
    pub dwell_ms_mean: f64,
    /// Spread of per-zone dwell; zero keeps every dwell at the mean.
    pub dwell_ms_sd: f64,
    pub min_visits: usize,
    pub max_visits: usize,
    pub pupil_base_mm: f64,
    /// Dilation for a fully white square (normalized m1 of 1).
    pub pupil_gain_mm: f64,
    /// Half-width of the uniform jitter around a zone center.
    pub position_noise: f64,
    pub pupil_noise_mm: f64,
}

impl Default for SyntheticUser {
    fn default() -> Self {
        Self {
            beta: 8.0,
            dwell_ms_mean: 300.0,
            dwell_ms_sd: 0.0,
            min_visits: 5,
            max_visits: 6,
            pupil_base_mm: 4.0,
            pupil_gain_mm: 1.2,
            position_noise: 0.004,
            pupil_noise_mm: 0.05,
        }
    }
}

impl SyntheticUser {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("synthetic user: {msg}")));
        if self.beta.is_nan() || self.beta < 0.0 {
            return bad("beta must be non-negative");
        }
        if !(100.0..).contains(&self.dwell_ms_mean) || !(0.0..).contains(&self.dwell_ms_sd) {
            return bad("dwell mean must be at least 100 ms and its sd non-negative");
        }
        if self.min_visits == 0 || self.min_visits > self.max_visits || self.max_visits > ZONE_COUNT {
            return bad("visit counts must satisfy 1 <= min <= max <= 8");
        }
        if !(0.0..=MAX_POSITION_NOISE).contains(&self.position_noise) {
            return bad("position noise must be in [0, 0.0075]");
        }
        if !(0.0..).contains(&self.pupil_noise_mm) || self.pupil_base_mm.is_nan() || self.pupil_base_mm <= 0.0 || !self.pupil_gain_mm.is_finite() {
            return bad("pupil parameters out of range");
        }
        Ok(())
    }
}

/// Gaze for one evaluation screen.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScreen {
    pub samples: Vec<GazeSample>,
    pub ref_dp_mm: f64,
    pub selected_zone: Option<ZoneIndex>,
    /// Zones in the order they were looked at.
    pub visits: Vec<ZoneIndex>,
}

struct StreamBuilder {
    samples: Vec<GazeSample>,
    t: i64,
    pos: (f64, f64),
}

impl StreamBuilder {
    fn push(&mut self, x: f64, y: f64, pupil: f64) {
        self.samples.push(GazeSample::new(self.t, x, y, pupil.clamp(0.5, 11.5)));
        self.t += SAMPLE_PERIOD_MS;
        self.pos = (x, y);
    }
}

/// Index drawn with probability proportional to `exp(utility)`.
fn pick_softmax<R: Rng + ?Sized>(utility: &[f64], rng: &mut R) -> usize {
    let top = utility.iter().copied().fold(f64::MIN, f64::max);
    let weights: Vec<f64> = utility.iter().map(|u| (u - top).exp()).collect();
    let mut u = rng.random::<f64>() * weights.iter().sum::<f64>();
    for (k, w) in weights.iter().enumerate() {
        if u < *w {
            return k;
        }
        u -= w;
    }
    utility.len() - 1
}

/// Draws `count` distinct zones, each step sampling the remaining zones with
/// probability proportional to `exp(beta * m1 / 255)`.
fn visit_order<R: Rng + ?Sized>(genomes: &[ColorGenome; ZONE_COUNT], beta: f64, count: usize, rng: &mut R) -> Vec<ZoneIndex> {
    let utility: Vec<f64> = genomes.iter().map(|g| beta * g.m1() / 255.0).collect();
    let mut remaining: Vec<ZoneIndex> = (0..ZONE_COUNT).collect();
    let mut order = Vec::with_capacity(count);
    while order.len() < count {
        let u: Vec<f64> = remaining.iter().map(|&z| utility[z]).collect();
        order.push(remaining.remove(pick_softmax(&u, rng)));
    }
    order
}

/// Simulates a viewer's gaze over one screen, sampled every 20 ms.
///
/// The gaze starts on the central cross, then visits a random number of
/// zones in softmax order, travelling between them slowly enough to survive
/// jerk filtering and dwelling on each long enough to form a fixation. The
/// pupil dilates with the lightness of the fixated color. The last zone
/// visited is the one under the gaze when the screen ends.
pub fn synthesize_gaze<R: Rng + ?Sized>(
    layout: &ScreenLayout,
    genomes: &[ColorGenome; ZONE_COUNT],
    user: &SyntheticUser,
    rng: &mut R,
) -> Result<SyntheticScreen> {
    user.validate()?;
    let pupil_noise = Normal::new(0.0, user.pupil_noise_mm).expect("validated sd");
    let dwell = Normal::new(user.dwell_ms_mean, user.dwell_ms_sd).expect("validated sd");
    let jitter = |rng: &mut R| {
        if user.position_noise > 0.0 {
            rng.random_range(-user.position_noise..=user.position_noise)
        } else {
            0.0
        }
    };

    let ref_dp_mm = user.pupil_base_mm + pupil_noise.sample(rng);
    let count = rng.random_range(user.min_visits..=user.max_visits);
    let visits = visit_order(genomes, user.beta, count, rng);

    let mut stream = StreamBuilder { samples: Vec::new(), t: 0, pos: (0.5, 0.5) };
    for _ in 0..LEAD_IN_SAMPLES {
        let p = user.pupil_base_mm + pupil_noise.sample(rng);
        let (x, y) = (0.5 + jitter(rng), 0.5 + jitter(rng));
        stream.push(x, y, p);
    }
    for &zone in &visits {
        let (tx, ty) = layout.zone(zone).center();
        let (sx, sy) = stream.pos;
        let dist = (tx - sx).hypot(ty - sy);
        let steps = (dist / TRANSIT_STEP).ceil() as usize;
        for k in 1..steps {
            let f = k as f64 / steps as f64;
            let p = user.pupil_base_mm + pupil_noise.sample(rng);
            stream.push(sx + (tx - sx) * f, sy + (ty - sy) * f, p);
        }
        let dilation = user.pupil_gain_mm * genomes[zone].m1() / 255.0;
        let dwell_ms = dwell.sample(rng).max(MIN_DWELL_MS);
        let n = (dwell_ms / SAMPLE_PERIOD_MS as f64).floor() as usize + 1;
        for _ in 0..n {
            let p = user.pupil_base_mm + dilation + pupil_noise.sample(rng);
            let (x, y) = (tx + jitter(rng), ty + jitter(rng));
            stream.push(x, y, p);
        }
    }
    Ok(SyntheticScreen { samples: stream.samples, ref_dp_mm, selected_zone: visits.last().copied(), visits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::etea::{init_population, EteaRng};
    use crate::gaze::{detect_fixations, filter_jerks, FixationParams, DEFAULT_MAX_SPEED};
    use rand::SeedableRng;

    #[test]
    fn uniform_visits_when_indifferent() {
        let user = SyntheticUser { beta: 0.0, ..SyntheticUser::default() };
        let layout = ScreenLayout::default();
        let mut rng = EteaRng::seed_from_u64(4);
        let mut first = [0u32; ZONE_COUNT];
        let mut all = [0u32; ZONE_COUNT];
        let runs = 10_000;
        for seed in 0..runs {
            let genomes = init_population(seed).genomes;
            let s = synthesize_gaze(&layout, &genomes, &user, &mut rng).unwrap();
            first[s.visits[0]] += 1;
            for &z in &s.visits {
                all[z] += 1;
            }
        }
        let chi2 = |counts: &[u32; 8]| {
            let total: u32 = counts.iter().sum();
            let e = f64::from(total) / 8.0;
            counts.iter().map(|&c| (f64::from(c) - e).powi(2) / e).sum::<f64>()
        };
        // 7 degrees of freedom, 0.999 quantile
        assert!(chi2(&first) < 24.32, "first-visit chi2 {}", chi2(&first));
        assert!(chi2(&all) < 24.32, "visit chi2 {}", chi2(&all));
    }

    #[test]
    fn greedy_user_looks_at_lightest_first() {
        let user = SyntheticUser { beta: 1e6, ..SyntheticUser::default() };
        let layout = ScreenLayout::default();
        let mut rng = EteaRng::seed_from_u64(5);
        let runs = 2000;
        let mut hits = 0;
        for seed in 0..runs {
            let genomes = init_population(seed).genomes;
            let best = (0..8).fold(0, |b, i| if genomes[i].m1() > genomes[b].m1() { i } else { b });
            let s = synthesize_gaze(&layout, &genomes, &user, &mut rng).unwrap();
            hits += u32::from(s.visits[0] == best);
        }
        assert!(f64::from(hits) / f64::from(runs as u32) >= 0.99);
    }

    #[test]
    fn every_visit_yields_a_fixation() {
        let layout = ScreenLayout::default();
        let user = SyntheticUser { dwell_ms_mean: 100.0, dwell_ms_sd: 200.0, position_noise: MAX_POSITION_NOISE, ..SyntheticUser::default() };
        let mut rng = EteaRng::seed_from_u64(6);
        for seed in 0..500 {
            let genomes = init_population(seed).genomes;
            let s = synthesize_gaze(&layout, &genomes, &user, &mut rng).unwrap();
            let filtered = filter_jerks(&s.samples, DEFAULT_MAX_SPEED);
            assert_eq!(filtered.len(), s.samples.len(), "synthetic samples must not be jerks");
            let fx = detect_fixations(&filtered, &layout, &FixationParams::default());
            for z in &s.visits {
                assert!(fx.iter().any(|f| f.zone == *z), "zone {z} has no fixation");
            }
            let zones: Vec<_> = fx.iter().map(|f| f.zone).collect();
            assert_eq!(zones, s.visits);
            assert_eq!(s.selected_zone, s.visits.last().copied());
            let last = s.samples.last().unwrap();
            assert_eq!(layout.assign_zone(last.x, last.y), s.selected_zone);
        }
    }

    #[test]
    fn rejects_bad_user() {
        let layout = ScreenLayout::default();
        let genomes = init_population(0).genomes;
        let mut rng = EteaRng::seed_from_u64(0);
        for user in [
            SyntheticUser { beta: -1.0, ..SyntheticUser::default() },
            SyntheticUser { dwell_ms_mean: 50.0, ..SyntheticUser::default() },
            SyntheticUser { position_noise: 0.02, ..SyntheticUser::default() },
            SyntheticUser { min_visits: 0, ..SyntheticUser::default() },
        ] {
            assert!(synthesize_gaze(&layout, &genomes, &user, &mut rng).is_err());
        }
    }
}
