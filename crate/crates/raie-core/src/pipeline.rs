//! Interaction-log ingestion and the temporal S/F/T protocol.
//!
//! The stages run in a fixed order: parse, binarize, k-core filter,
//! quantile split, per-segment windowing. Binarization precedes the
//! k-core filter, quantiles use the nearest-rank convention, and the
//! segment intervals are half-open so cutoff ties land in the later
//! segment.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::PipelineError;

#[derive(Clone, Debug, PartialEq)]
pub struct InteractionEvent {
    pub user: String,
    pub item: String,
    pub rating: f64,
    pub timestamp: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputFormat {
    MovieLensDat,
    GenericTsv,
}

impl InputFormat {
    pub fn from_name(name: &str) -> Result<Self, PipelineError> {
        match name.to_ascii_lowercase().as_str() {
            "movielens" | "movielens-dat" | "dat" => Ok(Self::MovieLensDat),
            "tsv" | "generic-tsv" => Ok(Self::GenericTsv),
            other => Err(PipelineError::UnknownFormat(other.to_string())),
        }
    }
}

/// Which temporal segment an event or example belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    S,
    F,
    T,
}

impl Phase {
    pub fn from_letter(s: &str) -> Option<Self> {
        match s {
            "S" => Some(Self::S),
            "F" => Some(Self::F),
            "T" => Some(Self::T),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::S => "S",
            Phase::F => "F",
            Phase::T => "T",
        })
    }
}

/// Timestamp cutoffs separating setup, finetune, and test segments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TemporalSplit {
    pub t_s: i64,
    pub t_f: i64,
    pub q_s: f64,
    pub q_f: f64,
}

impl TemporalSplit {
    /// S: t < t_s; F: t_s <= t < t_f; T: t >= t_f.
    pub fn phase_of(&self, timestamp: i64) -> Phase {
        if timestamp < self.t_s {
            Phase::S
        } else if timestamp < self.t_f {
            Phase::F
        } else {
            Phase::T
        }
    }
}

/// A context window and the in-segment event that follows it.
///
/// `target_ts` is carried in memory so downstream phases can process
/// examples in stream order; the on-disk format does not store it —
/// files are written pre-sorted instead.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowExample {
    pub user: String,
    pub context: Vec<String>,
    pub target: String,
    pub phase: Phase,
    pub target_ts: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IngestReport {
    pub events: Vec<InteractionEvent>,
    pub skipped: usize,
}

pub fn ingest(path: &Path, format: InputFormat) -> Result<IngestReport, PipelineError> {
    let text = fs::read_to_string(path)
        .map_err(|e| PipelineError::UnreadableInput(format!("{}: {e}", path.display())))?;
    Ok(parse_events(&text, format))
}

/// Parses raw log text. Malformed lines are counted and skipped, never
/// fatal. For GenericTsv an unparseable first line is taken to be a
/// header and is not counted.
pub fn parse_events(text: &str, format: InputFormat) -> IngestReport {
    let mut events = Vec::new();
    let mut skipped = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line, format) {
            Some(ev) => events.push(ev),
            None => {
                if format == InputFormat::GenericTsv && idx == 0 {
                    continue;
                }
                skipped += 1;
            }
        }
    }
    IngestReport { events, skipped }
}

fn parse_line(line: &str, format: InputFormat) -> Option<InteractionEvent> {
    let fields: Vec<&str> = match format {
        InputFormat::MovieLensDat => line.split("::").collect(),
        InputFormat::GenericTsv => line.split('\t').collect(),
    };
    if fields.len() != 4 {
        return None;
    }
    let user = fields[0].trim();
    let item = fields[1].trim();
    if user.is_empty() || item.is_empty() {
        return None;
    }
    let rating: f64 = fields[2].trim().parse().ok()?;
    let timestamp: i64 = fields[3].trim().parse().ok()?;
    if !rating.is_finite() || timestamp < 0 {
        return None;
    }
    Some(InteractionEvent {
        user: user.to_string(),
        item: item.to_string(),
        rating,
        timestamp,
    })
}

/// Keeps events whose rating clears the positive-feedback threshold.
pub fn binarize(events: Vec<InteractionEvent>, threshold: f64) -> Vec<InteractionEvent> {
    events
        .into_iter()
        .filter(|e| e.rating >= threshold)
        .collect()
}

/// Iteratively removes users and items with fewer than `k` interactions
/// until every survivor has at least `k`. Input order is preserved.
pub fn k_core_filter(mut events: Vec<InteractionEvent>, k: usize) -> Vec<InteractionEvent> {
    if k <= 1 {
        return events;
    }
    loop {
        let keep: Vec<bool> = {
            let mut user_counts: HashMap<&str, usize> = HashMap::new();
            let mut item_counts: HashMap<&str, usize> = HashMap::new();
            for e in &events {
                *user_counts.entry(e.user.as_str()).or_default() += 1;
                *item_counts.entry(e.item.as_str()).or_default() += 1;
            }
            events
                .iter()
                .map(|e| user_counts[e.user.as_str()] >= k && item_counts[e.item.as_str()] >= k)
                .collect()
        };
        if keep.iter().all(|&x| x) {
            return events;
        }
        let mut it = keep.into_iter();
        events.retain(|_| it.next().unwrap());
    }
}

/// Nearest-rank quantile: the ceil(q*n)-th smallest value (1-based).
fn nearest_rank(sorted: &[i64], q: f64) -> i64 {
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Computes the S/F/T cutoffs over the global timestamp multiset and
/// tags every event, preserving input order.
pub fn temporal_split(
    events: Vec<InteractionEvent>,
    q_s: f64,
    q_f: f64,
) -> Result<(TemporalSplit, Vec<(InteractionEvent, Phase)>), PipelineError> {
    if !(q_s > 0.0 && q_s < q_f && q_f <= 1.0) {
        return Err(PipelineError::InvalidQuantiles { q_s, q_f });
    }
    if events.is_empty() {
        return Err(PipelineError::EmptyEvents);
    }
    let mut stamps: Vec<i64> = events.iter().map(|e| e.timestamp).collect();
    stamps.sort_unstable();
    let split = TemporalSplit {
        t_s: nearest_rank(&stamps, q_s),
        t_f: nearest_rank(&stamps, q_f),
        q_s,
        q_f,
    };
    let tagged = events
        .into_iter()
        .map(|e| {
            let phase = split.phase_of(e.timestamp);
            (e, phase)
        })
        .collect();
    Ok((split, tagged))
}

/// Builds right-aligned sliding windows per user and per segment.
///
/// Within one user-segment of length m (chronological), targets sit at
/// indices m-1, m-1-stride, … while the index stays >= 1; the context is
/// the up-to-`l_w` items immediately before the target. No window
/// crosses a segment boundary. Output is sorted by (phase, target
/// timestamp, user) so that slice order is stream order.
pub fn segment_windows(
    tagged: &[(InteractionEvent, Phase)],
    l_w: usize,
    stride: usize,
) -> Vec<WindowExample> {
    assert!(l_w >= 1, "window length must be >= 1");
    assert!(stride >= 1, "stride must be >= 1");
    let mut groups: BTreeMap<(&str, Phase), Vec<&InteractionEvent>> = BTreeMap::new();
    for (e, phase) in tagged {
        groups.entry((e.user.as_str(), *phase)).or_default().push(e);
    }
    let mut out = Vec::new();
    for ((user, phase), mut seg) in groups {
        seg.sort_by_key(|e| e.timestamp);
        let m = seg.len();
        if m < 2 {
            continue;
        }
        let mut targets = Vec::new();
        let mut t = m - 1;
        loop {
            targets.push(t);
            if t < 1 + stride {
                break;
            }
            t -= stride;
        }
        targets.reverse();
        for t in targets {
            let start = t.saturating_sub(l_w);
            out.push(WindowExample {
                user: user.to_string(),
                context: seg[start..t].iter().map(|e| e.item.clone()).collect(),
                target: seg[t].item.clone(),
                phase,
                target_ts: seg[t].timestamp,
            });
        }
    }
    out.sort_by(|a, b| {
        (a.phase, a.target_ts, &a.user)
            .cmp(&(b.phase, b.target_ts, &b.user))
    });
    out
}

/// Distinct-user/distinct-item/interaction counts for one stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StageStats {
    pub users: usize,
    pub items: usize,
    pub interactions: usize,
}

pub fn stage_stats<'a>(events: impl IntoIterator<Item = &'a InteractionEvent>) -> StageStats {
    let mut users = std::collections::HashSet::new();
    let mut items = std::collections::HashSet::new();
    let mut n = 0usize;
    for e in events {
        users.insert(e.user.as_str());
        items.insert(e.item.as_str());
        n += 1;
    }
    StageStats {
        users: users.len(),
        items: items.len(),
        interactions: n,
    }
}

/// Per-phase stats in S, F, T order.
pub fn split_stage_stats(tagged: &[(InteractionEvent, Phase)]) -> [StageStats; 3] {
    [Phase::S, Phase::F, Phase::T].map(|p| {
        stage_stats(
            tagged
                .iter()
                .filter(move |(_, ph)| *ph == p)
                .map(|(e, _)| e),
        )
    })
}

/// Serializes events as tab-separated `user item rating timestamp`, the
/// generic TSV shape `ingest` reads back.
pub fn format_events(events: &[InteractionEvent]) -> String {
    let mut s = String::new();
    for e in events {
        s.push_str(&format!("{}\t{}\t{}\t{}\n", e.user, e.item, e.rating, e.timestamp));
    }
    s
}

pub fn write_events(path: &Path, events: &[InteractionEvent]) -> Result<(), PipelineError> {
    fs::write(path, format_events(events))
        .map_err(|e| PipelineError::UnwritableOutput(format!("{}: {e}", path.display())))
}

/// Serializes examples as tab-separated `user phase context target` with
/// the context comma-joined.
pub fn format_examples(examples: &[WindowExample]) -> String {
    let mut s = String::new();
    for ex in examples {
        s.push_str(&ex.user);
        s.push('\t');
        s.push_str(&ex.phase.to_string());
        s.push('\t');
        s.push_str(&ex.context.join(","));
        s.push('\t');
        s.push_str(&ex.target);
        s.push('\n');
    }
    s
}

pub fn write_examples(path: &Path, examples: &[WindowExample]) -> Result<(), PipelineError> {
    fs::write(path, format_examples(examples))
        .map_err(|e| PipelineError::UnwritableOutput(format!("{}: {e}", path.display())))
}

/// Parses an examples file. Strict: these files are artifact-internal,
/// so any malformed line is an error, not a skip. `target_ts` is not
/// stored on disk; line order carries the stream order instead.
pub fn parse_examples(text: &str) -> Result<Vec<WindowExample>, PipelineError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let bad = |reason: &str| PipelineError::MalformedExample {
            line: idx + 1,
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(bad("expected 4 tab-separated fields"));
        }
        if fields[0].is_empty() {
            return Err(bad("empty user"));
        }
        let phase = Phase::from_letter(fields[1]).ok_or_else(|| bad("phase must be S, F or T"))?;
        let context: Vec<String> = fields[2].split(',').map(str::to_string).collect();
        if context.iter().any(String::is_empty) {
            return Err(bad("empty context item"));
        }
        if fields[3].is_empty() {
            return Err(bad("empty target"));
        }
        out.push(WindowExample {
            user: fields[0].to_string(),
            context,
            target: fields[3].to_string(),
            phase,
            target_ts: 0,
        });
    }
    Ok(out)
}

pub fn read_examples(path: &Path) -> Result<Vec<WindowExample>, PipelineError> {
    let text = fs::read_to_string(path)
        .map_err(|e| PipelineError::UnreadableInput(format!("{}: {e}", path.display())))?;
    parse_examples(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(user: &str, item: &str, rating: f64, ts: i64) -> InteractionEvent {
        InteractionEvent {
            user: user.to_string(),
            item: item.to_string(),
            rating,
            timestamp: ts,
        }
    }

    #[test]
    fn parses_movielens_line() {
        let rep = parse_events("1::122::5::838985046\n", InputFormat::MovieLensDat);
        assert_eq!(rep.skipped, 0);
        assert_eq!(rep.events, vec![ev("1", "122", 5.0, 838985046)]);
    }

    #[test]
    fn event_files_round_trip_through_generic_tsv() {
        let events = vec![ev("u1", "i9", 4.5, 100), ev("u2", "i3", 5.0, 101)];
        let text = format_events(&events);
        assert_eq!(text, "u1\ti9\t4.5\t100\nu2\ti3\t5\t101\n");
        let rep = parse_events(&text, InputFormat::GenericTsv);
        assert_eq!(rep.skipped, 0);
        assert_eq!(rep.events, events);
    }

    #[test]
    fn parses_tsv_line() {
        let rep = parse_events("u1\ti9\t4\t100\n", InputFormat::GenericTsv);
        assert_eq!(rep.events, vec![ev("u1", "i9", 4.0, 100)]);
    }

    #[test]
    fn skips_malformed_lines_with_count() {
        let mut text = String::new();
        for i in 0..9 {
            text.push_str(&format!("{i}::10::4::100\n"));
        }
        text.push_str("garbage line\n");
        let rep = parse_events(&text, InputFormat::MovieLensDat);
        assert_eq!(rep.events.len(), 9);
        assert_eq!(rep.skipped, 1);
    }

    #[test]
    fn tsv_header_is_tolerated_but_only_on_the_first_line() {
        let rep = parse_events(
            "user\titem\trating\ttimestamp\nu1\ti1\t5\t3\n",
            InputFormat::GenericTsv,
        );
        assert_eq!(rep.skipped, 0);
        assert_eq!(rep.events.len(), 1);
        let rep2 = parse_events(
            "u1\ti1\t5\t3\nuser\titem\trating\ttimestamp\n",
            InputFormat::GenericTsv,
        );
        assert_eq!(rep2.skipped, 1);
    }

    #[test]
    fn rejects_negative_timestamps_and_non_finite_ratings() {
        let rep = parse_events("u::i::4::-5\nu::i::inf::5\n", InputFormat::MovieLensDat);
        assert_eq!(rep.events.len(), 0);
        assert_eq!(rep.skipped, 2);
    }

    #[test]
    fn format_names_resolve() {
        assert_eq!(
            InputFormat::from_name("MovieLens-Dat").unwrap(),
            InputFormat::MovieLensDat
        );
        assert_eq!(
            InputFormat::from_name("tsv").unwrap(),
            InputFormat::GenericTsv
        );
        assert!(matches!(
            InputFormat::from_name("csv"),
            Err(PipelineError::UnknownFormat(_))
        ));
    }

    #[test]
    fn binarize_keeps_threshold_and_above() {
        let events = vec![ev("u", "a", 3.0, 1), ev("u", "b", 4.0, 2), ev("u", "c", 5.0, 3)];
        let kept = binarize(events.clone(), 4.0);
        assert_eq!(
            kept.iter().map(|e| e.item.as_str()).collect::<Vec<_>>(),
            ["b", "c"]
        );
        assert!(binarize(events.clone(), 6.0).is_empty());
        assert_eq!(binarize(events.clone(), 0.0), events);
    }

    /// Independent fixpoint oracle: removes one under-degree entity at a
    /// time, in an order driven by `order_seed`, until none remain.
    fn k_core_oracle(mut events: Vec<InteractionEvent>, k: usize, order_seed: u64) -> Vec<InteractionEvent> {
        use rand::seq::IteratorRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(order_seed);
        loop {
            let mut user_counts: HashMap<String, usize> = HashMap::new();
            let mut item_counts: HashMap<String, usize> = HashMap::new();
            for e in &events {
                *user_counts.entry(e.user.clone()).or_default() += 1;
                *item_counts.entry(e.item.clone()).or_default() += 1;
            }
            let weak_users: Vec<String> = user_counts
                .iter()
                .filter(|(_, &c)| c < k)
                .map(|(u, _)| u.clone())
                .collect();
            let weak_items: Vec<String> = item_counts
                .iter()
                .filter(|(_, &c)| c < k)
                .map(|(i, _)| i.clone())
                .collect();
            let total = weak_users.len() + weak_items.len();
            if total == 0 {
                return events;
            }
            // Remove exactly one randomly chosen weak entity per round.
            let choice = (0..total).choose(&mut rng).unwrap();
            if choice < weak_users.len() {
                let u = &weak_users[choice];
                events.retain(|e| &e.user != u);
            } else {
                let i = &weak_items[choice - weak_users.len()];
                events.retain(|e| &e.item != i);
            }
        }
    }

    #[test]
    fn k_core_matches_one_at_a_time_oracle_on_toy_graph() {
        // 5 users, 5 items, uneven degrees; b's only item is shared.
        let events = vec![
            ev("a", "i1", 5.0, 1),
            ev("a", "i2", 5.0, 2),
            ev("a", "i3", 5.0, 3),
            ev("b", "i1", 5.0, 4),
            ev("c", "i1", 5.0, 5),
            ev("c", "i2", 5.0, 6),
            ev("d", "i4", 5.0, 7),
            ev("d", "i5", 5.0, 8),
            ev("e", "i4", 5.0, 9),
            ev("e", "i5", 5.0, 10),
            ev("e", "i2", 5.0, 11),
        ];
        let got = k_core_filter(events.clone(), 2);
        for seed in 0..10 {
            let oracle = k_core_oracle(events.clone(), 2, seed);
            let mut a: Vec<_> = got.iter().map(|e| (e.user.clone(), e.item.clone())).collect();
            let mut b: Vec<_> = oracle.iter().map(|e| (e.user.clone(), e.item.clone())).collect();
            a.sort();
            b.sort();
            assert_eq!(a, b, "oracle order seed {seed}");
        }
        // b had a single interaction and must be gone.
        assert!(got.iter().all(|e| e.user != "b"));
    }

    #[test]
    fn k_core_identity_when_degrees_suffice() {
        let events = vec![
            ev("a", "x", 5.0, 1),
            ev("a", "y", 5.0, 2),
            ev("b", "x", 5.0, 3),
            ev("b", "y", 5.0, 4),
        ];
        assert_eq!(k_core_filter(events.clone(), 2), events);
        assert_eq!(k_core_filter(events.clone(), 1), events);
    }

    #[test]
    fn temporal_split_matches_nearest_rank_worked_example() {
        let events: Vec<_> = (1..=10).map(|t| ev("u", &format!("i{t}"), 5.0, t)).collect();
        let (split, tagged) = temporal_split(events, 0.5, 0.8).unwrap();
        assert_eq!(split.t_s, 5);
        assert_eq!(split.t_f, 8);
        let of = |p: Phase| -> Vec<i64> {
            tagged
                .iter()
                .filter(|(_, ph)| *ph == p)
                .map(|(e, _)| e.timestamp)
                .collect()
        };
        assert_eq!(of(Phase::S), vec![1, 2, 3, 4]);
        assert_eq!(of(Phase::F), vec![5, 6, 7]);
        assert_eq!(of(Phase::T), vec![8, 9, 10]);
    }

    #[test]
    fn equal_timestamps_put_everything_in_t() {
        let events: Vec<_> = (0..5).map(|i| ev("u", &format!("i{i}"), 5.0, 42)).collect();
        let (split, tagged) = temporal_split(events, 0.5, 0.8).unwrap();
        assert_eq!(split.t_s, split.t_f);
        assert!(tagged.iter().all(|(_, p)| *p == Phase::T));
    }

    #[test]
    fn qf_one_puts_only_the_maximum_in_t() {
        let events: Vec<_> = (1..=4).map(|t| ev("u", "i", 5.0, t)).collect();
        let (split, tagged) = temporal_split(events, 0.5, 1.0).unwrap();
        assert_eq!(split.t_f, 4);
        let in_t: Vec<i64> = tagged
            .iter()
            .filter(|(_, p)| *p == Phase::T)
            .map(|(e, _)| e.timestamp)
            .collect();
        assert_eq!(in_t, vec![4]);
    }

    #[test]
    fn split_validates_inputs() {
        assert!(matches!(
            temporal_split(vec![], 0.5, 0.8),
            Err(PipelineError::EmptyEvents)
        ));
        let events = vec![ev("u", "i", 5.0, 1)];
        assert!(matches!(
            temporal_split(events.clone(), 0.8, 0.5),
            Err(PipelineError::InvalidQuantiles { .. })
        ));
        assert!(matches!(
            temporal_split(events, 0.0, 0.8),
            Err(PipelineError::InvalidQuantiles { .. })
        ));
    }

    fn tag_all(events: Vec<InteractionEvent>, phase: Phase) -> Vec<(InteractionEvent, Phase)> {
        events.into_iter().map(|e| (e, phase)).collect()
    }

    #[test]
    fn windows_are_right_aligned_with_stride_one() {
        let seg = tag_all(
            vec![
                ev("u", "a", 5.0, 1),
                ev("u", "b", 5.0, 2),
                ev("u", "c", 5.0, 3),
                ev("u", "d", 5.0, 4),
            ],
            Phase::S,
        );
        let got = segment_windows(&seg, 2, 1);
        let view: Vec<(Vec<&str>, &str)> = got
            .iter()
            .map(|e| (e.context.iter().map(String::as_str).collect(), e.target.as_str()))
            .collect();
        assert_eq!(
            view,
            vec![
                (vec!["a"], "b"),
                (vec!["a", "b"], "c"),
                (vec!["b", "c"], "d"),
            ]
        );
    }

    #[test]
    fn stride_two_walks_back_from_the_segment_end() {
        let seg = tag_all(
            vec![
                ev("u", "a", 5.0, 1),
                ev("u", "b", 5.0, 2),
                ev("u", "c", 5.0, 3),
                ev("u", "d", 5.0, 4),
                ev("u", "e", 5.0, 5),
            ],
            Phase::F,
        );
        let got = segment_windows(&seg, 3, 2);
        let view: Vec<(Vec<&str>, &str)> = got
            .iter()
            .map(|e| (e.context.iter().map(String::as_str).collect(), e.target.as_str()))
            .collect();
        // Targets at indices 4 and 2 (right-aligned, stepping back 2).
        assert_eq!(view, vec![(vec!["a", "b"], "c"), (vec!["b", "c", "d"], "e")]);
    }

    #[test]
    fn short_segments_yield_nothing() {
        let seg = tag_all(vec![ev("u", "a", 5.0, 1)], Phase::S);
        assert!(segment_windows(&seg, 3, 1).is_empty());
    }

    #[test]
    fn windows_never_cross_the_cutoff() {
        // One user active on both sides of t_s.
        let events: Vec<_> = (1..=10).map(|t| ev("u", &format!("i{t}"), 5.0, t)).collect();
        let (_, tagged) = temporal_split(events, 0.5, 0.8).unwrap();
        let got = segment_windows(&tagged, 4, 1);
        for ex in &got {
            let nums: Vec<i64> = ex
                .context
                .iter()
                .chain(std::iter::once(&ex.target))
                .map(|i| i[1..].parse().unwrap())
                .collect();
            let all_s = nums.iter().all(|&t| t < 5);
            let all_f = nums.iter().all(|&t| (5..8).contains(&t));
            let all_t = nums.iter().all(|&t| t >= 8);
            assert!(all_s || all_f || all_t, "mixed-phase window {nums:?}");
        }
    }

    #[test]
    fn examples_round_trip_through_the_file_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ex.tsv");
        let examples = vec![
            WindowExample {
                user: "u1".into(),
                context: vec!["a".into(), "b".into()],
                target: "c".into(),
                phase: Phase::S,
                target_ts: 3,
            },
            WindowExample {
                user: "u2".into(),
                context: vec!["x".into()],
                target: "y".into(),
                phase: Phase::F,
                target_ts: 9,
            },
        ];
        write_examples(&path, &examples).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "u1\tS\ta,b\tc\nu2\tF\tx\ty\n");
        let back = read_examples(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].context, vec!["a", "b"]);
        assert_eq!(back[1].phase, Phase::F);
        assert_eq!(back[1].target_ts, 0);
    }

    #[test]
    fn example_parser_rejects_malformed_rows() {
        assert!(matches!(
            parse_examples("u\tS\ta,b\n"),
            Err(PipelineError::MalformedExample { line: 1, .. })
        ));
        assert!(matches!(
            parse_examples("u\tQ\ta\tb\n"),
            Err(PipelineError::MalformedExample { .. })
        ));
        assert!(matches!(
            parse_examples("u\tS\ta,,b\tc\n"),
            Err(PipelineError::MalformedExample { .. })
        ));
        assert!(parse_examples("").unwrap().is_empty());
    }

    #[test]
    fn full_pipeline_is_byte_deterministic() {
        let mut text = String::new();
        for u in 0..6 {
            for t in 0..8 {
                text.push_str(&format!("u{u}::i{}::{}::{}\n", (u * 3 + t * 7) % 9, 3 + (t % 3), 100 + t * 10 + u));
            }
        }
        let run = || {
            let rep = parse_events(&text, InputFormat::MovieLensDat);
            let events = k_core_filter(binarize(rep.events, 4.0), 2);
            let (_, tagged) = temporal_split(events, 0.5, 0.8).unwrap();
            format_examples(&segment_windows(&tagged, 3, 1))
        };
        let a = run();
        assert!(!a.is_empty());
        assert_eq!(a, run());
    }

    proptest! {
        #[test]
        fn k_core_postcondition_and_idempotence(
            pairs in proptest::collection::vec((0u8..6, 0u8..6), 1..60),
            k in 1usize..4,
        ) {
            let events: Vec<_> = pairs
                .iter()
                .enumerate()
                .map(|(i, (u, it))| ev(&format!("u{u}"), &format!("i{it}"), 5.0, i as i64))
                .collect();
            let filtered = k_core_filter(events, k);
            let mut user_counts: HashMap<&str, usize> = HashMap::new();
            let mut item_counts: HashMap<&str, usize> = HashMap::new();
            for e in &filtered {
                *user_counts.entry(e.user.as_str()).or_default() += 1;
                *item_counts.entry(e.item.as_str()).or_default() += 1;
            }
            prop_assert!(user_counts.values().all(|&c| c >= k));
            prop_assert!(item_counts.values().all(|&c| c >= k));
            prop_assert_eq!(&k_core_filter(filtered.clone(), k), &filtered);
        }

        #[test]
        fn split_partitions_every_event(
            stamps in proptest::collection::vec(0i64..1000, 1..80),
            q in (0.05f64..0.9, 0.05f64..0.9),
        ) {
            let (a, b) = q;
            let (q_s, q_f) = if a < b { (a, b) } else { (b, a + 1e-6) };
            prop_assume!(q_s > 0.0 && q_s < q_f && q_f <= 1.0);
            let events: Vec<_> = stamps
                .iter()
                .enumerate()
                .map(|(i, &t)| ev(&format!("u{}", i % 5), &format!("i{i}"), 5.0, t))
                .collect();
            let n = events.len();
            let (split, tagged) = temporal_split(events, q_s, q_f).unwrap();
            prop_assert!(split.t_s <= split.t_f);
            prop_assert_eq!(tagged.len(), n);
            for (e, p) in &tagged {
                prop_assert_eq!(*p, split.phase_of(e.timestamp));
            }
        }

        #[test]
        fn windows_obey_ordering_and_leakage_rules(
            stamps in proptest::collection::vec((0u8..4, 0i64..50), 2..60),
            l_w in 1usize..5,
            stride in 1usize..4,
        ) {
            let events: Vec<_> = stamps
                .iter()
                .enumerate()
                .map(|(i, (u, t))| ev(&format!("u{u}"), &format!("it{i}"), 5.0, *t))
                .collect();
            let (_, tagged) = temporal_split(events, 0.5, 0.8).unwrap();
            let examples = segment_windows(&tagged, l_w, stride);
            // Rebuild each user-phase segment to check every example
            // against it: the context must be the items immediately
            // before the target, all inside one segment.
            let mut groups: BTreeMap<(String, Phase), Vec<&InteractionEvent>> = BTreeMap::new();
            for (e, p) in &tagged {
                groups.entry((e.user.clone(), *p)).or_default().push(e);
            }
            for seg in groups.values_mut() {
                seg.sort_by_key(|e| e.timestamp);
            }
            for ex in &examples {
                prop_assert!(ex.context.len() <= l_w);
                prop_assert!(!ex.context.is_empty());
                let seg = &groups[&(ex.user.clone(), ex.phase)];
                let t = seg
                    .iter()
                    .position(|e| e.item == ex.target && e.timestamp == ex.target_ts)
                    .expect("target must sit in its own segment");
                let start = t - ex.context.len();
                for (off, c) in ex.context.iter().enumerate() {
                    prop_assert_eq!(c, &seg[start + off].item);
                    prop_assert!(seg[start + off].timestamp <= ex.target_ts);
                }
            }
            // Stream order within the slice.
            for pair in examples.windows(2) {
                prop_assert!(
                    (pair[0].phase, pair[0].target_ts) <= (pair[1].phase, pair[1].target_ts)
                );
            }
        }
    }
}
