//! Preference regions on the unit hypersphere and the incremental editing
//! rules that maintain them.
//!
//! A region is a spherical cap: a unit center `c` plus an angular radius
//! `R`. A [`RegionSet`] owns the regions, an [`EditConfig`], and a buffer
//! pool of vectors that matched no region. For an incoming vector the set
//! computes per-region confidences (softmax over cosine scores), picks one
//! of three actions — update the best region, expand it, or buffer the
//! vector for later region creation — and applies it.

use crate::error::EditError;
use crate::kmeans::spherical_kmeans;
use crate::vector::{softmax, UnitVector};

/// Lloyd iteration cap used whenever a RegionSet runs clustering itself.
pub const KMEANS_MAX_ITER: usize = 100;
/// Restart count used whenever a RegionSet runs clustering itself.
pub const KMEANS_RESTARTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionId(pub u64);

impl std::fmt::Display for RegionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which lifecycle phase created a region: the initial clustering pass or
/// a later buffer flush.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CreatedPhase {
    Setup,
    Finetune,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub id: RegionId,
    pub center: UnitVector,
    /// Angular radius in radians, always within [0, r_max].
    pub radius: f64,
    pub member_count: u64,
    pub edit_count: u64,
    pub created_at_phase: CreatedPhase,
}

impl Region {
    /// True when `v` lies within the region's angular radius.
    pub fn contains(&self, v: &UnitVector) -> bool {
        self.center.angle_to(v) <= self.radius
    }

    /// Confident in-region edit: exponential moving averages pull the
    /// radius toward the observed angle and the center toward `v`.
    ///
    /// R ← (1−β)·R + β·arccos(c·v), clipped to [0, r_max];
    /// c ← normalize((1−γ)·c + γ·v). The angle is measured against the
    /// center *before* it moves. Fails with `DegenerateCenter` when the
    /// blended center has vanishing norm (antipodal v at γ = 0.5); the
    /// region is returned unchanged in state by the caller in that case.
    pub fn apply_update(&self, v: &UnitVector, config: &EditConfig) -> Result<Region, EditError> {
        if v.dim() != self.center.dim() {
            return Err(EditError::DimensionMismatch {
                expected: self.center.dim(),
                got: v.dim(),
            });
        }
        let theta = self.center.angle_to(v);
        let radius =
            ((1.0 - config.beta) * self.radius + config.beta * theta).clamp(0.0, config.r_max);
        let center = blend(&self.center, v, config.gamma)?;
        Ok(Region {
            id: self.id,
            center,
            radius,
            member_count: self.member_count + 1,
            edit_count: self.edit_count + 1,
            created_at_phase: self.created_at_phase,
        })
    }

    /// Ambiguous in-region edit: grow the radius toward the observed angle
    /// (never shrinking it) and nudge the center.
    ///
    /// R ← min(R + λ·max(arccos(c·v) − R, 0), r_max);
    /// c ← normalize((1−α)·c + α·v).
    pub fn apply_expand(&self, v: &UnitVector, config: &EditConfig) -> Result<Region, EditError> {
        if v.dim() != self.center.dim() {
            return Err(EditError::DimensionMismatch {
                expected: self.center.dim(),
                got: v.dim(),
            });
        }
        let theta = self.center.angle_to(v);
        let radius = (self.radius + config.lambda_expand * (theta - self.radius).max(0.0))
            .min(config.r_max);
        let center = blend(&self.center, v, config.alpha_expand)?;
        Ok(Region {
            id: self.id,
            center,
            radius,
            member_count: self.member_count + 1,
            edit_count: self.edit_count + 1,
            created_at_phase: self.created_at_phase,
        })
    }
}

/// normalize((1−w)·a + w·b), rejecting blends whose norm falls below
/// 1e-9 (near-antipodal inputs at w ≈ 0.5).
fn blend(a: &UnitVector, b: &UnitVector, w: f64) -> Result<UnitVector, EditError> {
    let mixed: Vec<f64> = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (1.0 - w) * x + w * y)
        .collect();
    let n = crate::vector::norm(&mixed);
    if n < 1e-9 {
        return Err(EditError::DegenerateCenter { norm: n });
    }
    UnitVector::normalize(mixed)
}

/// How the separation penalty measures the distance between two centers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OverlapDistanceMode {
    /// arccos(c_i·c_j): same angular units as the radii.
    Angular,
    /// ‖c_i − c_j‖₂: chord length, mixing units with the angular radii.
    EuclideanLiteral,
}

/// All knobs of the editing state machine. See field docs for ranges;
/// [`EditConfig::validate`] enforces them.
#[derive(Clone, Debug, PartialEq)]
pub struct EditConfig {
    /// Confidence threshold τ ∈ [0, 1]: below it the vector is buffered.
    pub tau: f64,
    /// Margin threshold δ_min ≥ 0 separating update from expand.
    pub delta_min: f64,
    /// Radius EMA coefficient β ∈ [0, 1] for updates.
    pub beta: f64,
    /// Center EMA coefficient γ ∈ [0, 1] for updates.
    pub gamma: f64,
    /// Expansion rate λ > 0.
    pub lambda_expand: f64,
    /// Center coefficient α ∈ (0, 1) for expands.
    pub alpha_expand: f64,
    /// Radius cap in radians, in (0, π].
    pub r_max: f64,
    /// Quantile q ∈ (0, 1] of member angles used as a fresh region's radius.
    pub radius_quantile: f64,
    /// Buffer size that triggers a flush; at least 1 and ≥ k_add.
    pub buffer_threshold: u32,
    /// Regions created per buffer flush, at least 1.
    pub k_add: u32,
    /// Separation penalty weight λ_sep ≥ 0.
    pub lambda_sep: f64,
    /// Distance convention for the separation penalty.
    pub overlap_distance_mode: OverlapDistanceMode,
}

impl Default for EditConfig {
    fn default() -> Self {
        Self {
            tau: 0.45,
            delta_min: 0.05,
            beta: 0.1,
            gamma: 0.1,
            lambda_expand: 0.5,
            alpha_expand: 0.1,
            r_max: std::f64::consts::FRAC_PI_2,
            radius_quantile: 0.9,
            buffer_threshold: 32,
            k_add: 1,
            lambda_sep: 0.1,
            overlap_distance_mode: OverlapDistanceMode::EuclideanLiteral,
        }
    }
}

impl EditConfig {
    pub fn validate(&self) -> Result<(), EditError> {
        let fail = |msg: &str| Err(EditError::InvalidConfig(msg.to_string()));
        // τ = 0 and τ = 1 are allowed on purpose: they are the degenerate
        // regimes where add never / always fires.
        if !(0.0..=1.0).contains(&self.tau) || self.tau.is_nan() {
            return fail("tau must lie in [0, 1]");
        }
        if !(self.delta_min >= 0.0) {
            return fail("delta_min must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return fail("beta must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail("gamma must lie in [0, 1]");
        }
        if !(self.lambda_expand > 0.0) {
            return fail("lambda_expand must be > 0");
        }
        if !(self.alpha_expand > 0.0 && self.alpha_expand < 1.0) {
            return fail("alpha_expand must lie in (0, 1)");
        }
        if !(self.r_max > 0.0 && self.r_max <= std::f64::consts::PI) {
            return fail("r_max must lie in (0, pi]");
        }
        if !(self.radius_quantile > 0.0 && self.radius_quantile <= 1.0) {
            return fail("radius_quantile must lie in (0, 1]");
        }
        if self.buffer_threshold == 0 {
            return fail("buffer_threshold must be >= 1");
        }
        if self.k_add == 0 {
            return fail("k_add must be >= 1");
        }
        if self.buffer_threshold < self.k_add {
            return fail("buffer_threshold must be >= k_add");
        }
        if !(self.lambda_sep >= 0.0) {
            return fail("lambda_sep must be >= 0");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EditAction {
    Update,
    Expand,
    Add,
}

impl std::fmt::Display for EditAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EditAction::Update => "update",
            EditAction::Expand => "expand",
            EditAction::Add => "add",
        };
        f.write_str(s)
    }
}

/// The gating rule on its own: update when confident with a clear margin,
/// expand when confident but ambiguous, add (buffer) when unconfident.
/// Both comparisons are inclusive.
pub fn edit_action(p_star: f64, delta: f64, tau: f64, delta_min: f64) -> EditAction {
    if p_star >= tau {
        if delta >= delta_min {
            EditAction::Update
        } else {
            EditAction::Expand
        }
    } else {
        EditAction::Add
    }
}

#[derive(Clone, Debug)]
pub struct EditDecision {
    pub action: EditAction,
    /// The argmax region for update/expand; `None` exactly for add.
    pub target_region: Option<RegionId>,
    /// Highest softmax confidence.
    pub p_star: f64,
    /// p_star − second-highest confidence; p_star itself when K = 1.
    pub margin_delta: f64,
    pub probs: Vec<f64>,
}

/// Result of a buffer flush: the regions just created and, per flushed
/// vector in arrival order, the region it was assigned to.
#[derive(Clone, Debug)]
pub struct FlushReport {
    pub new_region_ids: Vec<RegionId>,
    pub assignments: Vec<RegionId>,
}

#[derive(Clone, Debug)]
pub struct RegionSet {
    regions: Vec<Region>,
    dim: usize,
    config: EditConfig,
    buffer: Vec<UnitVector>,
}

impl RegionSet {
    /// Clusters `vectors` into `k` regions. Region radii are the
    /// configured quantile of member angles, clipped to r_max.
    pub fn build(
        vectors: &[UnitVector],
        k: usize,
        config: EditConfig,
        seed: u64,
    ) -> Result<RegionSet, EditError> {
        config.validate()?;
        let result = spherical_kmeans(vectors, k, KMEANS_MAX_ITER, KMEANS_RESTARTS, seed)?;
        let dim = vectors[0].dim();
        let mut regions = Vec::with_capacity(k);
        for (j, center) in result.centers.into_iter().enumerate() {
            let members: Vec<UnitVector> = vectors
                .iter()
                .zip(&result.assignments)
                .filter(|(_, &a)| a == j)
                .map(|(v, _)| v.clone())
                .collect();
            // An empty cluster (possible but rare: restarts favor using
            // every cluster) still yields a region so K stays predictable.
            let radius = if members.is_empty() {
                0.0
            } else {
                compute_radius(&members, &center, config.radius_quantile)?.min(config.r_max)
            };
            regions.push(Region {
                id: RegionId(j as u64),
                center,
                radius,
                member_count: members.len() as u64,
                edit_count: 0,
                created_at_phase: CreatedPhase::Setup,
            });
        }
        Ok(RegionSet {
            regions,
            dim,
            config,
            buffer: Vec::new(),
        })
    }

    /// Reassembles a set from parts (snapshot restore). Validates the
    /// config and dimensions but trusts counters.
    pub fn from_parts(
        regions: Vec<Region>,
        dim: usize,
        config: EditConfig,
        buffer: Vec<UnitVector>,
    ) -> Result<RegionSet, EditError> {
        config.validate()?;
        for r in &regions {
            if r.center.dim() != dim {
                return Err(EditError::DimensionMismatch {
                    expected: dim,
                    got: r.center.dim(),
                });
            }
        }
        for v in &buffer {
            if v.dim() != dim {
                return Err(EditError::DimensionMismatch {
                    expected: dim,
                    got: v.dim(),
                });
            }
        }
        let mut ids: Vec<u64> = regions.iter().map(|r| r.id.0).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != regions.len() {
            return Err(EditError::InvalidConfig("duplicate region ids".to_string()));
        }
        Ok(RegionSet {
            regions,
            dim,
            config,
            buffer,
        })
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, id: RegionId) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    pub fn k(&self) -> usize {
        self.regions.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn config(&self) -> &EditConfig {
        &self.config
    }

    pub fn buffer(&self) -> &[UnitVector] {
        &self.buffer
    }

    /// Raw-score routing: the region whose center has the highest
    /// cosine with `v`, ties toward the lowest region id. No softmax,
    /// no gate — this is the inference-time rule; gating is for edits.
    pub fn route(&self, v: &UnitVector) -> Result<RegionId, EditError> {
        if self.regions.is_empty() {
            return Err(EditError::EmptyRegionSet);
        }
        if v.dim() != self.dim {
            return Err(EditError::DimensionMismatch {
                expected: self.dim,
                got: v.dim(),
            });
        }
        let mut best = 0;
        let mut best_score = self.regions[0].center.dot(v);
        for (i, r) in self.regions.iter().enumerate().skip(1) {
            let score = r.center.dot(v);
            if score > best_score || (score == best_score && r.id < self.regions[best].id) {
                best = i;
                best_score = score;
            }
        }
        Ok(self.regions[best].id)
    }

    /// Cosine scores c_k·v and their softmax, in region order.
    pub fn confidence(&self, v: &UnitVector) -> Result<(Vec<f64>, Vec<f64>), EditError> {
        if self.regions.is_empty() {
            return Err(EditError::EmptyRegionSet);
        }
        if v.dim() != self.dim {
            return Err(EditError::DimensionMismatch {
                expected: self.dim,
                got: v.dim(),
            });
        }
        let scores: Vec<f64> = self.regions.iter().map(|r| r.center.dot(v)).collect();
        let probs = softmax(&scores);
        Ok((scores, probs))
    }

    /// Applies the gating rule to a confidence distribution. Ties on the
    /// argmax break toward the lowest region id.
    pub fn decide_edit(&self, probs: &[f64]) -> Result<EditDecision, EditError> {
        if self.regions.is_empty() || probs.is_empty() {
            return Err(EditError::EmptyRegionSet);
        }
        if probs.len() != self.regions.len() {
            return Err(EditError::DimensionMismatch {
                expected: self.regions.len(),
                got: probs.len(),
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(EditError::InvalidDistribution { sum });
        }
        let mut best = 0;
        for i in 1..probs.len() {
            if probs[i] > probs[best]
                || (probs[i] == probs[best] && self.regions[i].id < self.regions[best].id)
            {
                best = i;
            }
        }
        let p_star = probs[best];
        let margin_delta = if probs.len() == 1 {
            p_star
        } else {
            let second = probs
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != best)
                .map(|(_, &p)| p)
                .fold(f64::NEG_INFINITY, f64::max);
            p_star - second
        };
        let action = edit_action(p_star, margin_delta, self.config.tau, self.config.delta_min);
        let target_region = match action {
            EditAction::Add => None,
            _ => Some(self.regions[best].id),
        };
        Ok(EditDecision {
            action,
            target_region,
            p_star,
            margin_delta,
            probs: probs.to_vec(),
        })
    }

    /// Full edit step: score, decide, mutate. A degenerate-center error
    /// leaves the set untouched so callers can log and move on.
    pub fn apply(&mut self, v: &UnitVector) -> Result<(EditDecision, Option<FlushReport>), EditError> {
        let (_, probs) = self.confidence(v)?;
        let decision = self.decide_edit(&probs)?;
        let flush = match decision.action {
            EditAction::Update | EditAction::Expand => {
                let id = decision.target_region.expect("update/expand target");
                let idx = self
                    .regions
                    .iter()
                    .position(|r| r.id == id)
                    .ok_or(EditError::UnknownRegion(id.0))?;
                let edited = match decision.action {
                    EditAction::Update => self.regions[idx].apply_update(v, &self.config)?,
                    _ => self.regions[idx].apply_expand(v, &self.config)?,
                };
                self.regions[idx] = edited;
                None
            }
            EditAction::Add => self.buffer_add(v.clone())?,
        };
        Ok((decision, flush))
    }

    /// Buffers `v`; when the buffer reaches the threshold it is clustered
    /// into up to k_add fresh regions and cleared.
    pub fn buffer_add(&mut self, v: UnitVector) -> Result<Option<FlushReport>, EditError> {
        if v.dim() != self.dim {
            return Err(EditError::DimensionMismatch {
                expected: self.dim,
                got: v.dim(),
            });
        }
        self.buffer.push(v);
        if self.buffer.len() < self.config.buffer_threshold as usize {
            return Ok(None);
        }
        self.flush().map(Some)
    }

    /// Clusters whatever is buffered regardless of the threshold (used
    /// at the end of an editing pass so no buffered pattern is lost).
    /// Returns `None` when the buffer is empty.
    pub fn flush_pending(&mut self) -> Result<Option<FlushReport>, EditError> {
        if self.buffer.is_empty() {
            return Ok(None);
        }
        self.flush().map(Some)
    }

    fn flush(&mut self) -> Result<FlushReport, EditError> {
        let pending = std::mem::take(&mut self.buffer);
        // Seed the clustering from the buffer contents themselves: the
        // flush stays deterministic without carrying generator state.
        let seed = hash_vector_bits(&pending);
        // A buffer of near-duplicates may hold fewer distinct vectors
        // than k_add; clamp rather than fail mid-stream.
        let distinct = count_distinct(&pending);
        let k = (self.config.k_add as usize).min(distinct);
        let result = spherical_kmeans(&pending, k, KMEANS_MAX_ITER, KMEANS_RESTARTS, seed)?;
        let mut next_id = self.regions.iter().map(|r| r.id.0 + 1).max().unwrap_or(0);
        let mut new_ids = Vec::with_capacity(k);
        let mut cluster_to_id = Vec::with_capacity(k);
        for (j, center) in result.centers.into_iter().enumerate() {
            let members: Vec<UnitVector> = pending
                .iter()
                .zip(&result.assignments)
                .filter(|(_, &a)| a == j)
                .map(|(v, _)| v.clone())
                .collect();
            let radius = if members.is_empty() {
                0.0
            } else {
                compute_radius(&members, &center, self.config.radius_quantile)?
                    .min(self.config.r_max)
            };
            let id = RegionId(next_id);
            next_id += 1;
            self.regions.push(Region {
                id,
                center,
                radius,
                member_count: members.len() as u64,
                edit_count: 0,
                created_at_phase: CreatedPhase::Finetune,
            });
            new_ids.push(id);
            cluster_to_id.push(id);
        }
        let assignments = result
            .assignments
            .iter()
            .map(|&a| cluster_to_id[a])
            .collect();
        Ok(FlushReport {
            new_region_ids: new_ids,
            assignments,
        })
    }

    /// λ_sep · Σ_{i<j} max(R_i + R_j − dist(c_i, c_j), 0)².
    pub fn separation_penalty(&self) -> f64 {
        let radii: Vec<f64> = self.regions.iter().map(|r| r.radius).collect();
        self.penalty_with_radii(&radii)
    }

    fn penalty_with_radii(&self, radii: &[f64]) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.regions.len() {
            for j in (i + 1)..self.regions.len() {
                let d = (radii[i] + radii[j] - self.center_distance(i, j)).max(0.0);
                sum += d * d;
            }
        }
        self.config.lambda_sep * sum
    }

    fn center_distance(&self, i: usize, j: usize) -> f64 {
        let a = &self.regions[i].center;
        let b = &self.regions[j].center;
        match self.config.overlap_distance_mode {
            OverlapDistanceMode::Angular => a.angle_to(b),
            OverlapDistanceMode::EuclideanLiteral => {
                let sq: f64 = a
                    .as_slice()
                    .iter()
                    .zip(b.as_slice())
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                sq.sqrt()
            }
        }
    }

    /// Shrinks radii by gradient descent on the separation penalty,
    /// centers held fixed. Backtracking halves the step until the penalty
    /// does not increase, so the penalty is non-increasing across steps.
    pub fn repair_overlap(&mut self, steps: usize, step_size: f64) {
        for _ in 0..steps {
            let before = self.separation_penalty();
            if before == 0.0 {
                return;
            }
            let k = self.regions.len();
            let mut grad = vec![0.0; k];
            for i in 0..k {
                for j in (i + 1)..k {
                    let d = (self.regions[i].radius + self.regions[j].radius
                        - self.center_distance(i, j))
                    .max(0.0);
                    if d > 0.0 {
                        grad[i] += 2.0 * self.config.lambda_sep * d;
                        grad[j] += 2.0 * self.config.lambda_sep * d;
                    }
                }
            }
            let mut step = step_size;
            loop {
                let candidate: Vec<f64> = self
                    .regions
                    .iter()
                    .zip(&grad)
                    .map(|(r, g)| (r.radius - step * g).clamp(0.0, self.config.r_max))
                    .collect();
                if self.penalty_with_radii(&candidate) <= before {
                    for (r, &radius) in self.regions.iter_mut().zip(&candidate) {
                        r.radius = radius;
                    }
                    break;
                }
                step *= 0.5;
                if step < 1e-15 {
                    return;
                }
            }
        }
    }
}

/// Nearest-rank quantile (1-based index ceil(q·n)) of the member angles
/// to `center`.
pub fn compute_radius(
    members: &[UnitVector],
    center: &UnitVector,
    q: f64,
) -> Result<f64, EditError> {
    if members.is_empty() {
        return Err(EditError::EmptyMembers);
    }
    let mut angles: Vec<f64> = members.iter().map(|m| center.angle_to(m)).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).expect("angles are finite"));
    let rank = (q * angles.len() as f64).ceil() as usize;
    Ok(angles[rank.clamp(1, angles.len()) - 1])
}

fn count_distinct(vectors: &[UnitVector]) -> usize {
    let mut seen: Vec<Vec<u64>> = Vec::new();
    for v in vectors {
        let bits: Vec<u64> = v.as_slice().iter().map(|x| x.to_bits()).collect();
        if !seen.contains(&bits) {
            seen.push(bits);
        }
    }
    seen.len()
}

/// FNV-1a over the raw f64 bits of every vector, in order.
fn hash_vector_bits(vectors: &[UnitVector]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in vectors {
        for x in v.as_slice() {
            for b in x.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
    }
    h
}
