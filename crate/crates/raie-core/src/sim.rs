//! Synthetic preference-drift streams with ground-truth interest labels.
//!
//! Each interest owns a disjoint item pool with a fixed successor order,
//! so a sequence model can provably learn per-interest transitions and a
//! router can be scored against known labels. Users hold an interest for
//! a run of events (resampling from the scheduled mixture at run
//! boundaries and whenever the drift regime changes), which keeps
//! context windows interest-coherent.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config;
use crate::derive_seed;
use crate::error::SimError;
use crate::pipeline::{InteractionEvent, WindowExample};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DriftKind {
    None,
    Step,
    Ramp,
    Spike,
}

impl DriftKind {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "none" => Some(Self::None),
            "step" => Some(Self::Step),
            "ramp" => Some(Self::Ramp),
            "spike" => Some(Self::Spike),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Step => "step",
            Self::Ramp => "ramp",
            Self::Spike => "spike",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftScenario {
    pub interests: usize,
    pub items_per_interest: usize,
    pub users: usize,
    pub events_per_user: usize,
    /// Events a user stays on one interest before resampling.
    pub run_length: usize,
    pub drift: DriftKind,
    /// Fraction of the global timeline at which step/spike drift fires.
    pub switch_frac: f64,
    pub spike_width_frac: f64,
    /// Per-event probability of replacing the run's interest with a
    /// uniformly random one.
    pub noise: f64,
    pub mixture_pre: Vec<f64>,
    pub mixture_post: Vec<f64>,
    pub rating: f64,
    pub seed: u64,
}

impl Default for DriftScenario {
    fn default() -> Self {
        let uniform = vec![1.0 / 3.0; 3];
        Self {
            interests: 3,
            items_per_interest: 8,
            users: 12,
            events_per_user: 60,
            run_length: 8,
            drift: DriftKind::None,
            switch_frac: 0.5,
            spike_width_frac: 0.1,
            noise: 0.0,
            mixture_pre: uniform.clone(),
            mixture_post: uniform,
            rating: 5.0,
            seed: 0,
        }
    }
}

fn check_mixture(name: &str, m: &[f64], interests: usize) -> Result<(), SimError> {
    if m.len() != interests {
        return Err(SimError::InvalidScenario(format!(
            "{name} has {} entries but interests = {interests}",
            m.len()
        )));
    }
    if m.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(SimError::InvalidScenario(format!(
            "{name} entries must be finite and non-negative"
        )));
    }
    let sum: f64 = m.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(SimError::InvalidScenario(format!(
            "{name} sums to {sum}, expected 1"
        )));
    }
    Ok(())
}

impl DriftScenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |msg: &str| Err(SimError::InvalidScenario(msg.to_string()));
        if self.interests == 0 {
            return fail("interests must be >= 1");
        }
        if self.items_per_interest == 0 {
            return fail("items_per_interest must be >= 1");
        }
        if self.users == 0 || self.events_per_user == 0 {
            return fail("users and events_per_user must be >= 1");
        }
        if self.run_length == 0 {
            return fail("run_length must be >= 1");
        }
        for (key, v) in [
            ("switch_frac", self.switch_frac),
            ("spike_width_frac", self.spike_width_frac),
            ("noise", self.noise),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::InvalidScenario(format!(
                    "{key} must lie in [0, 1], got {v}"
                )));
            }
        }
        if !self.rating.is_finite() {
            return fail("rating must be finite");
        }
        check_mixture("mixture_pre", &self.mixture_pre, self.interests)?;
        check_mixture("mixture_post", &self.mixture_post, self.interests)?;
        Ok(())
    }

    /// Builds a scenario from `key = value` text. Mixtures default to
    /// uniform over `interests`; `mixture_post` defaults to
    /// `mixture_pre` when omitted.
    pub fn from_kv_text(text: &str) -> Result<Self, SimError> {
        let map = config::parse_kv_map(text).map_err(|e| SimError::InvalidScenario(e.to_string()))?;
        let mut sc = Self::default();
        let mut pre: Option<Vec<f64>> = None;
        let mut post: Option<Vec<f64>> = None;
        let ce = |e: crate::error::ConfigError| SimError::InvalidScenario(e.to_string());
        for (key, value) in &map {
            match key.as_str() {
                "interests" => sc.interests = config::parse_value(key, value).map_err(ce)?,
                "items_per_interest" => {
                    sc.items_per_interest = config::parse_value(key, value).map_err(ce)?
                }
                "users" => sc.users = config::parse_value(key, value).map_err(ce)?,
                "events_per_user" => {
                    sc.events_per_user = config::parse_value(key, value).map_err(ce)?
                }
                "run_length" => sc.run_length = config::parse_value(key, value).map_err(ce)?,
                "drift" => {
                    sc.drift = DriftKind::from_name(value).ok_or_else(|| {
                        SimError::InvalidScenario(format!(
                            "drift must be none|step|ramp|spike, got `{value}`"
                        ))
                    })?
                }
                "switch_frac" => sc.switch_frac = config::parse_value(key, value).map_err(ce)?,
                "spike_width_frac" => {
                    sc.spike_width_frac = config::parse_value(key, value).map_err(ce)?
                }
                "noise" => sc.noise = config::parse_value(key, value).map_err(ce)?,
                "mixture_pre" => pre = Some(config::parse_f64_list(key, value).map_err(ce)?),
                "mixture_post" => post = Some(config::parse_f64_list(key, value).map_err(ce)?),
                "rating" => sc.rating = config::parse_value(key, value).map_err(ce)?,
                "seed" => sc.seed = config::parse_value(key, value).map_err(ce)?,
                other => {
                    return Err(SimError::InvalidScenario(format!(
                        "unknown key `{other}`"
                    )))
                }
            }
        }
        let uniform = vec![1.0 / sc.interests.max(1) as f64; sc.interests.max(1)];
        sc.mixture_pre = pre.unwrap_or(uniform);
        sc.mixture_post = post.unwrap_or_else(|| sc.mixture_pre.clone());
        sc.validate()?;
        Ok(sc)
    }

    fn total_events(&self) -> usize {
        self.users * self.events_per_user
    }

    /// Timestamp at which step/spike drift fires; chosen as the
    /// nearest-rank cutoff so `switch_frac = q_S` aligns the switch
    /// exactly with the S/F boundary.
    fn switch_ts(&self) -> i64 {
        (self.switch_frac * self.total_events() as f64).ceil() as i64
    }

    fn spike_end_ts(&self) -> i64 {
        self.switch_ts() + (self.spike_width_frac * self.total_events() as f64).ceil() as i64
    }

    fn mixture_at(&self, ts: i64) -> Vec<f64> {
        match self.drift {
            DriftKind::None => self.mixture_pre.clone(),
            DriftKind::Step => {
                if ts < self.switch_ts() {
                    self.mixture_pre.clone()
                } else {
                    self.mixture_post.clone()
                }
            }
            DriftKind::Spike => {
                if (self.switch_ts()..self.spike_end_ts()).contains(&ts) {
                    self.mixture_post.clone()
                } else {
                    self.mixture_pre.clone()
                }
            }
            DriftKind::Ramp => {
                let total = self.total_events();
                let alpha = if total > 1 {
                    (ts - 1) as f64 / (total - 1) as f64
                } else {
                    0.0
                };
                self.mixture_pre
                    .iter()
                    .zip(&self.mixture_post)
                    .map(|(a, b)| (1.0 - alpha) * a + alpha * b)
                    .collect()
            }
        }
    }

    /// Coarse regime id; a change forces an immediate interest
    /// resample so hard switches are exact, not lagged by run length.
    fn regime_at(&self, ts: i64) -> u8 {
        match self.drift {
            DriftKind::None | DriftKind::Ramp => 0,
            DriftKind::Step => u8::from(ts >= self.switch_ts()),
            DriftKind::Spike => u8::from((self.switch_ts()..self.spike_end_ts()).contains(&ts)),
        }
    }
}

fn sample_categorical(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let r: f64 = rng.random();
    let mut cum = 0.0;
    for (i, w) in weights.iter().enumerate() {
        cum += w;
        if r < cum {
            return i;
        }
    }
    weights.len() - 1
}

/// Generates the interleaved event stream plus one ground-truth
/// interest label per event. Timestamps are 1..=users*events_per_user,
/// round-robin across users, strictly increasing.
pub fn generate_stream(
    scenario: &DriftScenario,
) -> Result<(Vec<InteractionEvent>, Vec<usize>), SimError> {
    scenario.validate()?;
    let g = scenario.interests;
    let p = scenario.items_per_interest;
    let pools: Vec<Vec<usize>> = (0..g)
        .map(|gi| {
            let mut order: Vec<usize> = (0..p).collect();
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(scenario.seed, "sim-pool", gi as u64));
            order.shuffle(&mut rng);
            order
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(scenario.seed, "sim-stream", 0));
    let mut pos = vec![vec![0usize; g]; scenario.users];
    for row in &mut pos {
        for slot in row.iter_mut() {
            *slot = rng.random_range(0..p);
        }
    }
    let mut current: Vec<Option<usize>> = vec![None; scenario.users];
    let mut since_resample = vec![0usize; scenario.users];
    let mut last_regime = vec![0u8; scenario.users];
    let mut events = Vec::with_capacity(scenario.total_events());
    let mut labels = Vec::with_capacity(scenario.total_events());
    for e in 0..scenario.events_per_user {
        for u in 0..scenario.users {
            let ts = 1 + (e * scenario.users + u) as i64;
            let regime = scenario.regime_at(ts);
            if current[u].is_none()
                || since_resample[u] >= scenario.run_length
                || regime != last_regime[u]
            {
                let m = scenario.mixture_at(ts);
                current[u] = Some(sample_categorical(&m, &mut rng));
                since_resample[u] = 0;
                last_regime[u] = regime;
            }
            let mut gi = current[u].expect("just set");
            if scenario.noise > 0.0 && rng.random::<f64>() < scenario.noise {
                gi = rng.random_range(0..g);
            }
            let slot = pos[u][gi];
            pos[u][gi] = (slot + 1) % p;
            events.push(InteractionEvent {
                user: format!("u{u:04}"),
                item: format!("g{gi}_i{}", pools[gi][slot]),
                rating: scenario.rating,
                timestamp: ts,
            });
            labels.push(gi);
            since_resample[u] += 1;
        }
    }
    Ok((events, labels))
}

/// Best-permutation agreement between region assignments and interest
/// labels: the maximum over injective region-to-interest mappings of
/// the fraction of positions where the mapped assignment equals the
/// label. Exhaustive for up to 8 distinct ids, greedy beyond that.
/// Empty input scores 0 (conservative: nothing was routed correctly).
pub fn routing_accuracy(assignments: &[u64], labels: &[usize]) -> Result<f64, SimError> {
    if assignments.len() != labels.len() {
        return Err(SimError::LengthMismatch {
            left: assignments.len(),
            right: labels.len(),
        });
    }
    if assignments.is_empty() {
        return Ok(0.0);
    }
    let mut region_index: BTreeMap<u64, usize> = BTreeMap::new();
    for &a in assignments {
        let next = region_index.len();
        region_index.entry(a).or_insert(next);
    }
    let mut label_index: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        let next = label_index.len();
        label_index.entry(l).or_insert(next);
    }
    let m = region_index.len().max(label_index.len());
    let mut confusion = vec![vec![0usize; m]; m];
    for (&a, &l) in assignments.iter().zip(labels) {
        confusion[region_index[&a]][label_index[&l]] += 1;
    }
    let best = if m <= 8 {
        let mut used = vec![false; m];
        best_assignment(&confusion, &mut used, 0)
    } else {
        greedy_assignment(&confusion)
    };
    Ok(best as f64 / assignments.len() as f64)
}

fn best_assignment(c: &[Vec<usize>], used: &mut [bool], row: usize) -> usize {
    if row == c.len() {
        return 0;
    }
    let mut best = 0;
    for col in 0..c.len() {
        if used[col] {
            continue;
        }
        used[col] = true;
        best = best.max(c[row][col] + best_assignment(c, used, row + 1));
        used[col] = false;
    }
    best
}

fn greedy_assignment(c: &[Vec<usize>]) -> usize {
    let m = c.len();
    let mut row_used = vec![false; m];
    let mut col_used = vec![false; m];
    let mut total = 0;
    for _ in 0..m {
        let mut best = (0usize, 0usize, 0usize);
        for (i, row) in c.iter().enumerate() {
            if row_used[i] {
                continue;
            }
            for (j, &v) in row.iter().enumerate() {
                if !col_used[j] && v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        if best.2 == 0 {
            break;
        }
        row_used[best.0] = true;
        col_used[best.1] = true;
        total += best.2;
    }
    total
}

/// Ground-truth label for each window: the label of its target event,
/// located by (user, target timestamp).
pub fn label_windows(
    examples: &[WindowExample],
    events: &[InteractionEvent],
    labels: &[usize],
) -> Result<Vec<usize>, SimError> {
    if events.len() != labels.len() {
        return Err(SimError::LengthMismatch {
            left: events.len(),
            right: labels.len(),
        });
    }
    let by_key: BTreeMap<(&str, i64), usize> = events
        .iter()
        .zip(labels)
        .map(|(e, &l)| ((e.user.as_str(), e.timestamp), l))
        .collect();
    examples
        .iter()
        .map(|ex| {
            by_key
                .get(&(ex.user.as_str(), ex.target_ts))
                .copied()
                .ok_or_else(|| {
                    SimError::InvalidScenario(format!(
                        "window target (user {}, ts {}) not found in the stream",
                        ex.user, ex.target_ts
                    ))
                })
        })
        .collect()
}

pub fn format_labels(labels: &[usize]) -> String {
    let mut s = String::with_capacity(labels.len() * 2);
    for l in labels {
        s.push_str(&l.to_string());
        s.push('\n');
    }
    s
}

pub fn parse_labels(text: &str) -> Result<Vec<usize>, SimError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, l)| {
            l.trim().parse().map_err(|e| SimError::MalformedLabel {
                line: idx + 1,
                reason: format!("{e}"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{segment_windows, temporal_split, Phase};
    use proptest::prelude::*;

    fn freq(labels: &[usize], g: usize) -> Vec<f64> {
        let mut counts = vec![0usize; g];
        for &l in labels {
            counts[l] += 1;
        }
        counts
            .into_iter()
            .map(|c| c as f64 / labels.len() as f64)
            .collect()
    }

    #[test]
    fn single_interest_labels_everything_zero_and_walks_the_pool() {
        let sc = DriftScenario {
            interests: 1,
            items_per_interest: 5,
            users: 2,
            events_per_user: 12,
            mixture_pre: vec![1.0],
            mixture_post: vec![1.0],
            ..DriftScenario::default()
        };
        let (events, labels) = generate_stream(&sc).unwrap();
        assert_eq!(events.len(), 24);
        assert!(labels.iter().all(|&l| l == 0));
        // Each user's items follow the pool's successor order cyclically.
        let user_items: Vec<&str> = events
            .iter()
            .filter(|e| e.user == "u0000")
            .map(|e| e.item.as_str())
            .collect();
        let pool: Vec<String> = {
            // Recover the walk from the first full cycle.
            user_items.iter().take(5).map(|s| s.to_string()).collect()
        };
        for (i, item) in user_items.iter().enumerate() {
            assert_eq!(*item, pool[i % 5], "cyclic successor order broken at {i}");
        }
    }

    #[test]
    fn hard_switch_aligns_exactly_with_the_split_cutoff() {
        let sc = DriftScenario {
            interests: 2,
            users: 6,
            events_per_user: 40,
            run_length: 7,
            drift: DriftKind::Step,
            switch_frac: 0.5,
            mixture_pre: vec![1.0, 0.0],
            mixture_post: vec![0.0, 1.0],
            ..DriftScenario::default()
        };
        let (events, labels) = generate_stream(&sc).unwrap();
        let (_, tagged) = temporal_split(events, 0.5, 0.8).unwrap();
        for ((_, phase), &label) in tagged.iter().zip(&labels) {
            match phase {
                Phase::S => assert_eq!(label, 0),
                Phase::F | Phase::T => assert_eq!(label, 1),
            }
        }
    }

    #[test]
    fn label_frequencies_track_the_scheduled_mixture() {
        let sc = DriftScenario {
            interests: 3,
            users: 10,
            events_per_user: 1000,
            run_length: 1,
            mixture_pre: vec![0.5, 0.3, 0.2],
            mixture_post: vec![0.5, 0.3, 0.2],
            seed: 13,
            ..DriftScenario::default()
        };
        let (_, labels) = generate_stream(&sc).unwrap();
        let f = freq(&labels, 3);
        for (got, want) in f.iter().zip([0.5, 0.3, 0.2]) {
            assert!((got - want).abs() < 0.02, "freq {got} vs {want}");
        }
    }

    #[test]
    fn noise_blends_toward_uniform() {
        let sc = DriftScenario {
            interests: 3,
            users: 10,
            events_per_user: 1000,
            run_length: 1,
            noise: 0.3,
            mixture_pre: vec![1.0, 0.0, 0.0],
            mixture_post: vec![1.0, 0.0, 0.0],
            seed: 5,
            ..DriftScenario::default()
        };
        let (_, labels) = generate_stream(&sc).unwrap();
        let f = freq(&labels, 3);
        // Expected: 0.7 + 0.3/3 = 0.8 for interest 0, 0.1 each for the rest.
        assert!((f[0] - 0.8).abs() < 0.02, "freq {f:?}");
        assert!((f[1] - 0.1).abs() < 0.02, "freq {f:?}");
        assert!((f[2] - 0.1).abs() < 0.02, "freq {f:?}");
    }

    #[test]
    fn ramp_moves_mass_gradually() {
        let sc = DriftScenario {
            interests: 2,
            users: 5,
            events_per_user: 2000,
            run_length: 4,
            drift: DriftKind::Ramp,
            mixture_pre: vec![1.0, 0.0],
            mixture_post: vec![0.0, 1.0],
            seed: 3,
            ..DriftScenario::default()
        };
        let (_, labels) = generate_stream(&sc).unwrap();
        let n = labels.len();
        let head = &labels[..n / 10];
        let tail = &labels[n - n / 10..];
        let head0 = head.iter().filter(|&&l| l == 0).count() as f64 / head.len() as f64;
        let tail1 = tail.iter().filter(|&&l| l == 1).count() as f64 / tail.len() as f64;
        assert!(head0 > 0.9, "head0 {head0}");
        assert!(tail1 > 0.9, "tail1 {tail1}");
    }

    #[test]
    fn spike_is_transient_and_exact() {
        let sc = DriftScenario {
            interests: 2,
            users: 4,
            events_per_user: 50,
            drift: DriftKind::Spike,
            switch_frac: 0.5,
            spike_width_frac: 0.1,
            mixture_pre: vec![1.0, 0.0],
            mixture_post: vec![0.0, 1.0],
            ..DriftScenario::default()
        };
        let (events, labels) = generate_stream(&sc).unwrap();
        let lo = sc.switch_ts();
        let hi = sc.spike_end_ts();
        for (e, &l) in events.iter().zip(&labels) {
            let in_spike = (lo..hi).contains(&e.timestamp);
            assert_eq!(l == 1, in_spike, "ts {}", e.timestamp);
        }
        assert!(labels.iter().any(|&l| l == 1));
    }

    #[test]
    fn streams_are_deterministic_per_seed() {
        let sc = DriftScenario {
            noise: 0.2,
            drift: DriftKind::Step,
            mixture_post: vec![0.1, 0.2, 0.7],
            mixture_pre: vec![0.7, 0.2, 0.1],
            ..DriftScenario::default()
        };
        let a = generate_stream(&sc).unwrap();
        let b = generate_stream(&sc).unwrap();
        assert_eq!(a, b);
        let c = generate_stream(&DriftScenario { seed: 1, ..sc }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn scenario_kv_round_trip_and_errors() {
        let text = "\
# drift scenario
interests = 2
items_per_interest = 4
users = 3
events_per_user = 10
run_length = 2
drift = step
switch_frac = 0.5
noise = 0.1
mixture_pre = 1,0
mixture_post = 0,1
rating = 4
seed = 9
";
        let sc = DriftScenario::from_kv_text(text).unwrap();
        assert_eq!(sc.interests, 2);
        assert_eq!(sc.drift, DriftKind::Step);
        assert_eq!(sc.mixture_post, vec![0.0, 1.0]);
        assert_eq!(sc.rating, 4.0);

        assert!(matches!(
            DriftScenario::from_kv_text("bogus_key = 1\n"),
            Err(SimError::InvalidScenario(_))
        ));
        assert!(matches!(
            DriftScenario::from_kv_text("drift = sideways\n"),
            Err(SimError::InvalidScenario(_))
        ));
        assert!(matches!(
            DriftScenario::from_kv_text("interests = 3\nmixture_pre = 1,0\n"),
            Err(SimError::InvalidScenario(_))
        ));
        // Omitted mixtures default to uniform; omitted post copies pre.
        let sc2 = DriftScenario::from_kv_text("interests = 4\n").unwrap();
        assert_eq!(sc2.mixture_pre, vec![0.25; 4]);
        assert_eq!(sc2.mixture_post, vec![0.25; 4]);
        let sc3 = DriftScenario::from_kv_text("interests = 2\nmixture_pre = 0.9,0.1\n").unwrap();
        assert_eq!(sc3.mixture_post, vec![0.9, 0.1]);
    }

    #[test]
    fn routing_accuracy_is_permutation_invariant() {
        let labels = vec![0usize, 0, 1, 1, 2, 2];
        let renamed = vec![7u64, 7, 3, 3, 5, 5];
        assert_eq!(routing_accuracy(&renamed, &labels).unwrap(), 1.0);
    }

    #[test]
    fn routing_accuracy_hand_case_five_of_six() {
        // One mismatch under the best mapping (7->0, 3->1, 5->2).
        let labels = vec![0usize, 0, 1, 1, 2, 2];
        let assigned = vec![7u64, 7, 3, 5, 5, 5];
        let acc = routing_accuracy(&assigned, &labels).unwrap();
        assert!((acc - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn routing_accuracy_chance_level_for_random_assignments() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 10_000;
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let assigned: Vec<u64> = (0..n).map(|_| rng.random_range(0..4u64)).collect();
        let acc = routing_accuracy(&assigned, &labels).unwrap();
        assert!((acc - 0.25).abs() < 0.02, "acc {acc}");
    }

    #[test]
    fn routing_accuracy_handles_unequal_id_counts() {
        // Three regions chasing two labels: the extra region matches
        // nothing under an injective mapping.
        let labels = vec![0usize, 0, 1, 1];
        let assigned = vec![1u64, 1, 2, 3];
        let acc = routing_accuracy(&assigned, &labels).unwrap();
        assert!((acc - 0.75).abs() < 1e-12);
        assert!(matches!(
            routing_accuracy(&[1], &[0, 1]),
            Err(SimError::LengthMismatch { left: 1, right: 2 })
        ));
        assert_eq!(routing_accuracy(&[], &[]).unwrap(), 0.0);
    }

    #[test]
    fn window_labels_follow_target_events() {
        let sc = DriftScenario {
            interests: 2,
            users: 3,
            events_per_user: 30,
            run_length: 5,
            mixture_pre: vec![0.5, 0.5],
            mixture_post: vec![0.5, 0.5],
            seed: 2,
            ..DriftScenario::default()
        };
        let (events, labels) = generate_stream(&sc).unwrap();
        let (_, tagged) = temporal_split(events.clone(), 0.5, 0.8).unwrap();
        let windows = segment_windows(&tagged, 4, 1);
        assert!(!windows.is_empty());
        let wl = label_windows(&windows, &events, &labels).unwrap();
        for (ex, &l) in windows.iter().zip(&wl) {
            // The target item's pool prefix is the ground-truth label.
            let want: usize = ex.target[1..ex.target.find('_').unwrap()].parse().unwrap();
            assert_eq!(l, want);
        }
    }

    #[test]
    fn label_file_round_trip() {
        let labels = vec![0usize, 2, 1, 2];
        let text = format_labels(&labels);
        assert_eq!(text, "0\n2\n1\n2\n");
        assert_eq!(parse_labels(&text).unwrap(), labels);
        assert!(matches!(
            parse_labels("0\nx\n"),
            Err(SimError::MalformedLabel { line: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn generated_streams_are_well_formed(
            interests in 1usize..4,
            items in 1usize..5,
            users in 1usize..4,
            events in 1usize..30,
            run in 1usize..5,
            drift_pick in 0u8..4,
            noise in 0.0f64..0.5,
            seed in 0u64..50,
        ) {
            let drift = match drift_pick {
                0 => DriftKind::None,
                1 => DriftKind::Step,
                2 => DriftKind::Ramp,
                _ => DriftKind::Spike,
            };
            let uniform = vec![1.0 / interests as f64; interests];
            let sc = DriftScenario {
                interests,
                items_per_interest: items,
                users,
                events_per_user: events,
                run_length: run,
                drift,
                noise,
                mixture_pre: uniform.clone(),
                mixture_post: uniform,
                seed,
                ..DriftScenario::default()
            };
            let (stream, labels) = generate_stream(&sc).unwrap();
            prop_assert_eq!(stream.len(), users * events);
            prop_assert_eq!(stream.len(), labels.len());
            for pair in stream.windows(2) {
                prop_assert!(pair[0].timestamp < pair[1].timestamp);
            }
            for (e, &l) in stream.iter().zip(&labels) {
                prop_assert!(l < interests);
                // Item names carry their pool: g<label>_i<slot>.
                let sep = e.item.find('_').unwrap();
                let pool: usize = e.item[1..sep].parse().unwrap();
                prop_assert_eq!(pool, l);
            }
        }
    }
}
