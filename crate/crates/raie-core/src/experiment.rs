//! End-to-end experiment runner over the S/F/T protocol.
//!
//! Setup trains and freezes the backbone on S windows, clusters their
//! embeddings into regions, and hands every region a zero-initialized
//! adapter. Finetune runs per comparison arm on clones of that state:
//! the region-aware arm edits regions over the F stream and then trains
//! each region's adapter on its own S/F pools; the baselines train a
//! single global adapter (on F, or on F plus a replay sample of S) or
//! nothing at all. Evaluation routes by raw center score and reports
//! Recall@k / NDCG@k per split, forgetting deltas, and region-geometry
//! changes.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::derive_seed;
use crate::error::{ExperimentError, ModelError};
use crate::metrics::{mean, ndcg_at_k, recall_at_k};
use crate::model::adapter::AdapterRegistry;
use crate::model::{
    train_region_adapter, train_setup_backbone, Backbone, ItemVocab, LowRankAdapter, TrainConfig,
    TrainExample,
};
use crate::pipeline::{Phase, WindowExample};
use crate::region::{EditAction, EditConfig, FlushReport, RegionId, RegionSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Arm {
    Raie,
    GlobalAdapter,
    Replay,
    FrozenBase,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::Raie, Arm::GlobalAdapter, Arm::Replay, Arm::FrozenBase];

    pub fn from_name(name: &str) -> Result<Self, ExperimentError> {
        match name.to_ascii_lowercase().as_str() {
            "raie" => Ok(Self::Raie),
            "global" | "globaladapter" | "global-adapter" => Ok(Self::GlobalAdapter),
            "replay" => Ok(Self::Replay),
            "frozen" | "frozenbase" | "frozen-base" => Ok(Self::FrozenBase),
            other => Err(ExperimentError::UnknownArm(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Raie => "RAIE",
            Self::GlobalAdapter => "GlobalAdapter",
            Self::Replay => "Replay",
            Self::FrozenBase => "FrozenBase",
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Backbone and adapter shape parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub dim: usize,
    pub rho: f64,
    pub lora_rank: usize,
    pub lora_alpha: f64,
    pub lora_dropout: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            dim: 16,
            rho: 0.9,
            lora_rank: 8,
            lora_alpha: 16.0,
            lora_dropout: 0.05,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |msg: &str| Err(ExperimentError::InvalidConfig(msg.to_string()));
        if self.dim == 0 {
            return fail("model dim must be >= 1");
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return fail("rho must lie in (0, 1]");
        }
        if self.lora_rank == 0 {
            return fail("lora_rank must be >= 1");
        }
        if !(self.lora_alpha > 0.0 && self.lora_alpha.is_finite()) {
            return fail("lora_alpha must be positive and finite");
        }
        if !(0.0..1.0).contains(&self.lora_dropout) {
            return fail("lora_dropout must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub k_regions: usize,
    pub window_len: usize,
    pub stride: usize,
    pub edit: EditConfig,
    pub train: TrainConfig,
    pub model: ModelParams,
    pub eval_k: usize,
    pub arms: Vec<Arm>,
    pub seed: u64,
    /// Whether the F-phase editing pass runs at all (the region-aware
    /// arm with editing off reduces to routed adapters over frozen
    /// regions).
    pub edit_enabled: bool,
    pub repair_steps: usize,
    pub repair_step_size: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k_regions: 3,
            window_len: 8,
            stride: 1,
            edit: EditConfig::default(),
            train: TrainConfig::default(),
            model: ModelParams::default(),
            eval_k: 10,
            arms: Arm::ALL.to_vec(),
            seed: 0,
            edit_enabled: true,
            repair_steps: 25,
            repair_step_size: 0.05,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |msg: &str| Err(ExperimentError::InvalidConfig(msg.to_string()));
        if self.k_regions == 0 {
            return fail("k_regions must be >= 1");
        }
        if self.window_len == 0 || self.stride == 0 {
            return fail("window_len and stride must be >= 1");
        }
        if self.eval_k == 0 {
            return fail("eval_k must be >= 1");
        }
        if self.arms.is_empty() {
            return fail("at least one arm is required");
        }
        self.edit
            .validate()
            .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        self.train
            .validate()
            .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        self.model.validate()
    }
}

/// Everything produced by the setup phase. The backbone is frozen; the
/// S-phase training pool and its region assignments are kept so the
/// finetune phase can build per-region pools and replay samples.
pub struct SetupState {
    pub backbone: Backbone,
    pub vocab: ItemVocab,
    pub regions: RegionSet,
    pub adapters: AdapterRegistry,
    pub s_train: Vec<TrainExample>,
    pub s_assignments: Vec<RegionId>,
}

/// One F-phase routing/edit decision, in stream order.
#[derive(Clone, Debug, PartialEq)]
pub struct EditRecord {
    pub window: usize,
    pub p_star: f64,
    pub margin_delta: f64,
    pub action: EditAction,
    pub region: Option<RegionId>,
}

/// Post-finetune state of one arm. Baseline arms carry the untouched
/// region set and either one global adapter (under region id 0) or an
/// empty registry.
pub struct ArmOutcome {
    pub arm: Arm,
    pub regions: RegionSet,
    pub adapters: AdapterRegistry,
    pub edit_log: Vec<EditRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitMetrics {
    pub recall: f64,
    pub ndcg: f64,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmEval {
    pub arm: Arm,
    pub s: SplitMetrics,
    pub t: SplitMetrics,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForgettingRow {
    pub arm: Arm,
    pub before: SplitMetrics,
    pub after: SplitMetrics,
}

impl ForgettingRow {
    /// Positive drop = the arm got worse on S after finetuning.
    pub fn drop_recall(&self) -> f64 {
        self.before.recall - self.after.recall
    }

    pub fn drop_ndcg(&self) -> f64 {
        self.before.ndcg - self.after.ndcg
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryRow {
    pub region: RegionId,
    /// arccos(c_pre · c_post); `None` for regions that did not exist
    /// before finetuning.
    pub delta_center: Option<f64>,
    /// 100 · (R_post² − R_pre²) / R_pre²; `None` (reported as "new")
    /// when the region is new or had zero radius before.
    pub delta_area_pct: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryReport {
    pub rows: Vec<GeometryRow>,
    pub s_pre: f64,
    pub s_post: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub k_regions: usize,
    pub eval_k: usize,
    pub seed: u64,
    pub arms: Vec<ArmEval>,
    pub forgetting: Vec<ForgettingRow>,
    pub geometry: Option<GeometryReport>,
}

pub struct RunArtifacts {
    pub setup: SetupState,
    pub outcomes: Vec<(Arm, ArmOutcome)>,
    pub report: EvalReport,
}

/// Maps window items to vocab indices.
pub fn windows_to_train(
    examples: &[WindowExample],
    vocab: &ItemVocab,
) -> Result<Vec<TrainExample>, ExperimentError> {
    examples
        .iter()
        .map(|ex| {
            let window = ex
                .context
                .iter()
                .map(|item| {
                    vocab
                        .index(item)
                        .ok_or_else(|| ModelError::InvalidVocab(format!("unknown item `{item}`")))
                })
                .collect::<Result<Vec<usize>, _>>()?;
            let target = vocab
                .index(&ex.target)
                .ok_or_else(|| ModelError::InvalidVocab(format!("unknown item `{}`", ex.target)))?;
            Ok(TrainExample { window, target })
        })
        .collect()
}

fn phase_slice(examples: &[WindowExample], phase: Phase) -> Vec<WindowExample> {
    examples
        .iter()
        .filter(|e| e.phase == phase)
        .cloned()
        .collect()
}

fn init_adapter(config: &ExperimentConfig, id: RegionId) -> Result<LowRankAdapter, ExperimentError> {
    Ok(LowRankAdapter::init(
        config.model.dim,
        config.model.lora_rank,
        config.model.lora_alpha,
        config.model.lora_dropout,
        derive_seed(config.seed, "adapter-init", id.0),
    )?)
}

/// Trains and freezes the backbone on the S windows, builds the region
/// set from their embeddings, and creates one zero-initialized adapter
/// per region. The vocabulary covers every phase so later-phase items
/// have (untrained) embedding rows.
pub fn run_setup(
    examples: &[WindowExample],
    config: &ExperimentConfig,
) -> Result<SetupState, ExperimentError> {
    config.validate()?;
    let vocab = ItemVocab::from_items(
        examples
            .iter()
            .flat_map(|ex| ex.context.iter().chain(std::iter::once(&ex.target))),
    );
    let s_windows = phase_slice(examples, Phase::S);
    if s_windows.is_empty() {
        return Err(ExperimentError::NoSetupExamples);
    }
    let s_train = windows_to_train(&s_windows, &vocab)?;
    let mut backbone = Backbone::new(
        vocab.size(),
        config.model.dim,
        config.model.rho,
        derive_seed(config.seed, "backbone-init", 0),
    )?;
    // The experiment seed is the sole randomness root: it overrides the
    // training config's own seed for the setup shuffle.
    let mut setup_train = config.train.clone();
    setup_train.seed = derive_seed(config.seed, "setup-train", 0);
    train_setup_backbone(&mut backbone, &s_train, &setup_train)?;
    let embeddings = s_train
        .iter()
        .map(|ex| backbone.encode_subsequence(&ex.window))
        .collect::<Result<Vec<_>, _>>()?;
    let regions = RegionSet::build(
        &embeddings,
        config.k_regions,
        config.edit.clone(),
        derive_seed(config.seed, "setup-kmeans", 0),
    )?;
    // Assign S windows by the inference routing rule against the final
    // centers; these assignments seed the per-region training pools.
    let s_assignments = embeddings
        .iter()
        .map(|e| regions.route(e))
        .collect::<Result<Vec<_>, _>>()?;
    let mut adapters = AdapterRegistry::new();
    for region in regions.regions() {
        adapters.insert(region.id, init_adapter(config, region.id)?);
    }
    Ok(SetupState {
        backbone,
        vocab,
        regions,
        adapters,
        s_train,
        s_assignments,
    })
}

fn train_global_adapter(
    setup: &SetupState,
    pool: &[TrainExample],
    config: &ExperimentConfig,
) -> Result<AdapterRegistry, ExperimentError> {
    let id = RegionId(0);
    let mut adapter = init_adapter(config, id)?;
    if !pool.is_empty() {
        train_region_adapter(
            &setup.backbone,
            &mut adapter,
            &[],
            pool,
            &config.train,
            derive_seed(config.seed, "adapter-train", id.0),
        )?;
    }
    let mut registry = AdapterRegistry::new();
    registry.insert(id, adapter);
    Ok(registry)
}

/// Uniform sample without replacement of `frac` of the pool (rounded,
/// at least one element when the pool is nonempty and frac > 0).
fn replay_sample(pool: &[TrainExample], frac: f64, seed: u64) -> Vec<TrainExample> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    if pool.is_empty() || frac <= 0.0 {
        return Vec::new();
    }
    let take = ((pool.len() as f64 * frac).round() as usize).clamp(1, pool.len());
    let mut order: Vec<usize> = (0..pool.len()).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    order[..take].iter().map(|&i| pool[i].clone()).collect()
}

/// Fraction of S replayed alongside F in the replay baseline.
pub const REPLAY_FRACTION: f64 = 0.1;

struct RaiePools {
    f_pools: BTreeMap<RegionId, Vec<TrainExample>>,
    edit_log: Vec<EditRecord>,
}

/// The F-phase editing pass: route every window in stream order, apply
/// the gated edit (when enabled), and collect per-region F pools. Add
/// decisions pool into the buffer; flushed windows join the pools of
/// the regions the flush created.
fn edit_pass(
    regions: &mut RegionSet,
    adapters: &mut AdapterRegistry,
    setup: &SetupState,
    f_train: &[TrainExample],
    config: &ExperimentConfig,
) -> Result<RaiePools, ExperimentError> {
    let mut f_pools: BTreeMap<RegionId, Vec<TrainExample>> = BTreeMap::new();
    let mut edit_log = Vec::with_capacity(f_train.len());
    let mut buffered: Vec<usize> = Vec::new();
    let absorb_flush = |report: &FlushReport,
                            buffered: &mut Vec<usize>,
                            f_pools: &mut BTreeMap<RegionId, Vec<TrainExample>>,
                            adapters: &mut AdapterRegistry|
     -> Result<(), ExperimentError> {
        debug_assert_eq!(report.assignments.len(), buffered.len());
        for (&window_idx, &rid) in buffered.iter().zip(&report.assignments) {
            f_pools.entry(rid).or_default().push(f_train[window_idx].clone());
        }
        buffered.clear();
        for &rid in &report.new_region_ids {
            adapters.insert(rid, init_adapter(config, rid)?);
        }
        Ok(())
    };
    for (i, ex) in f_train.iter().enumerate() {
        let embedding = setup.backbone.encode_subsequence(&ex.window)?;
        if config.edit_enabled {
            let (decision, flush) = regions.apply(&embedding)?;
            edit_log.push(EditRecord {
                window: i,
                p_star: decision.p_star,
                margin_delta: decision.margin_delta,
                action: decision.action,
                region: decision.target_region,
            });
            match decision.action {
                EditAction::Update | EditAction::Expand => {
                    let rid = decision.target_region.expect("gated edit has a target");
                    f_pools.entry(rid).or_default().push(ex.clone());
                }
                EditAction::Add => buffered.push(i),
            }
            if let Some(report) = flush {
                absorb_flush(&report, &mut buffered, &mut f_pools, adapters)?;
            }
        } else {
            // Editing disabled: plain routing, and no edit-log entries
            // since nothing was edited.
            let rid = regions.route(&embedding)?;
            f_pools.entry(rid).or_default().push(ex.clone());
        }
    }
    if config.edit_enabled {
        if let Some(report) = regions.flush_pending()? {
            absorb_flush(&report, &mut buffered, &mut f_pools, adapters)?;
        }
    }
    Ok(RaiePools { f_pools, edit_log })
}

/// Finetunes one arm on the F windows against a completed setup. The
/// setup state itself is never mutated; each arm works on clones.
/// With no F windows at all, the arm state is returned unchanged.
pub fn finetune_arm(
    arm: Arm,
    setup: &SetupState,
    f_windows: &[WindowExample],
    config: &ExperimentConfig,
) -> Result<ArmOutcome, ExperimentError> {
    config.validate()?;
    let f_train = windows_to_train(f_windows, &setup.vocab)?;
    match arm {
        Arm::FrozenBase => Ok(ArmOutcome {
            arm,
            regions: setup.regions.clone(),
            adapters: AdapterRegistry::new(),
            edit_log: Vec::new(),
        }),
        Arm::GlobalAdapter => Ok(ArmOutcome {
            arm,
            regions: setup.regions.clone(),
            adapters: train_global_adapter(setup, &f_train, config)?,
            edit_log: Vec::new(),
        }),
        Arm::Replay => {
            let mut pool = f_train;
            if !pool.is_empty() {
                pool.extend(replay_sample(
                    &setup.s_train,
                    REPLAY_FRACTION,
                    derive_seed(config.seed, "replay-sample", 0),
                ));
            }
            Ok(ArmOutcome {
                arm,
                regions: setup.regions.clone(),
                adapters: train_global_adapter(setup, &pool, config)?,
                edit_log: Vec::new(),
            })
        }
        Arm::Raie => {
            let mut regions = setup.regions.clone();
            let mut adapters = setup.adapters.clone();
            if f_train.is_empty() {
                return Ok(ArmOutcome {
                    arm,
                    regions,
                    adapters,
                    edit_log: Vec::new(),
                });
            }
            let pools = edit_pass(&mut regions, &mut adapters, setup, &f_train, config)?;
            regions.repair_overlap(config.repair_steps, config.repair_step_size);
            let mut s_pools: BTreeMap<RegionId, Vec<TrainExample>> = BTreeMap::new();
            for (ex, &rid) in setup.s_train.iter().zip(&setup.s_assignments) {
                s_pools.entry(rid).or_default().push(ex.clone());
            }
            let empty: Vec<TrainExample> = Vec::new();
            let mut jobs: Vec<(RegionId, LowRankAdapter, &[TrainExample], &[TrainExample])> =
                Vec::new();
            for region in regions.regions() {
                let id = region.id;
                let s_pool = s_pools.get(&id).unwrap_or(&empty).as_slice();
                let f_pool = pools.f_pools.get(&id).map_or(&empty[..], Vec::as_slice);
                if s_pool.is_empty() && f_pool.is_empty() {
                    continue;
                }
                let adapter = adapters
                    .get(id)
                    .expect("every region has an adapter")
                    .clone();
                jobs.push((id, adapter, s_pool, f_pool));
            }
            let backbone = &setup.backbone;
            let trained: Vec<(RegionId, LowRankAdapter)> = jobs
                .into_par_iter()
                .map(|(id, mut adapter, s_pool, f_pool)| {
                    train_region_adapter(
                        backbone,
                        &mut adapter,
                        s_pool,
                        f_pool,
                        &config.train,
                        derive_seed(config.seed, "adapter-train", id.0),
                    )
                    .map(|_| (id, adapter))
                })
                .collect::<Result<_, _>>()?;
            for (id, adapter) in trained {
                adapters.insert(id, adapter);
            }
            Ok(ArmOutcome {
                arm,
                regions,
                adapters,
                edit_log: pools.edit_log,
            })
        }
    }
}

/// Top-k predictions for each window under one arm's state. Pure: no
/// region, adapter, or backbone state changes.
pub fn run_inference(
    setup: &SetupState,
    outcome: &ArmOutcome,
    examples: &[WindowExample],
    k: usize,
) -> Result<Vec<Vec<usize>>, ExperimentError> {
    let windows = windows_to_train(examples, &setup.vocab)?;
    windows
        .par_iter()
        .map(|ex| -> Result<Vec<usize>, ExperimentError> {
            let adapter = match outcome.arm {
                Arm::FrozenBase => None,
                Arm::GlobalAdapter | Arm::Replay => outcome.adapters.get(RegionId(0)),
                Arm::Raie => {
                    let embedding = setup.backbone.encode_subsequence(&ex.window)?;
                    let rid = outcome.regions.route(&embedding)?;
                    outcome.adapters.get(rid)
                }
            };
            Ok(setup.backbone.predict_topk(adapter, &ex.window, k)?)
        })
        .collect()
}

/// Mean Recall@k / NDCG@k of one arm over one example set.
pub fn evaluate_arm(
    setup: &SetupState,
    outcome: &ArmOutcome,
    examples: &[WindowExample],
    eval_k: usize,
) -> Result<SplitMetrics, ExperimentError> {
    let windows = windows_to_train(examples, &setup.vocab)?;
    let predictions = run_inference(setup, outcome, examples, eval_k)?;
    let recalls: Vec<f64> = predictions
        .iter()
        .zip(&windows)
        .map(|(ranked, ex)| recall_at_k(ranked, ex.target, eval_k))
        .collect();
    let ndcgs: Vec<f64> = predictions
        .iter()
        .zip(&windows)
        .map(|(ranked, ex)| ndcg_at_k(ranked, ex.target, eval_k))
        .collect();
    Ok(SplitMetrics {
        recall: mean(&recalls),
        ndcg: mean(&ndcgs),
        n: examples.len(),
    })
}

/// Assembles per-arm forgetting rows from a shared pre-finetune
/// baseline. Before finetuning every adapter is zero-initialized (an
/// exact no-op on the logits), so all arms share one baseline.
pub fn forgetting_report(
    baseline_s: Option<SplitMetrics>,
    post_s: &[(Arm, SplitMetrics)],
) -> Result<Vec<ForgettingRow>, ExperimentError> {
    let before = baseline_s.ok_or(ExperimentError::MissingBaseline)?;
    Ok(post_s
        .iter()
        .map(|&(arm, after)| ForgettingRow { arm, before, after })
        .collect())
}

/// Mean over region pairs of arccos(c_i·c_j) − R_i − R_j. Single-region
/// sets score 0 (no pairs).
pub fn separability(set: &RegionSet) -> f64 {
    let regions = set.regions();
    if regions.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..regions.len() {
        for j in i + 1..regions.len() {
            total += regions[i].center.angle_to(&regions[j].center)
                - regions[i].radius
                - regions[j].radius;
            pairs += 1;
        }
    }
    total / pairs as f64
}

/// Per-region center displacement and relative boundary-area change
/// between two region sets, plus whole-set separability before and
/// after. Regions without a pre-finetune counterpart (or with zero
/// prior radius) report "new" for the area change.
pub fn region_geometry_report(pre: &RegionSet, post: &RegionSet) -> GeometryReport {
    let mut rows: Vec<GeometryRow> = post
        .regions()
        .iter()
        .map(|r_post| match pre.region(r_post.id) {
            Some(r_pre) => GeometryRow {
                region: r_post.id,
                delta_center: Some(r_pre.center.angle_to(&r_post.center)),
                delta_area_pct: if r_pre.radius > 0.0 {
                    Some(
                        100.0 * (r_post.radius * r_post.radius - r_pre.radius * r_pre.radius)
                            / (r_pre.radius * r_pre.radius),
                    )
                } else {
                    None
                },
            },
            None => GeometryRow {
                region: r_post.id,
                delta_center: None,
                delta_area_pct: None,
            },
        })
        .collect();
    rows.sort_by_key(|r| r.region);
    GeometryReport {
        rows,
        s_pre: separability(pre),
        s_post: separability(post),
    }
}

/// Runs setup, finetunes every configured arm on clones, and evaluates
/// S and T splits plus forgetting and geometry reports.
pub fn run_experiment(
    examples: &[WindowExample],
    config: &ExperimentConfig,
) -> Result<RunArtifacts, ExperimentError> {
    config.validate()?;
    let setup = run_setup(examples, config)?;
    let s_ex = phase_slice(examples, Phase::S);
    let f_ex = phase_slice(examples, Phase::F);
    let t_ex = phase_slice(examples, Phase::T);
    // Pre-finetune S baseline: adapters are zero-initialized no-ops, so
    // the frozen backbone alone is every arm's "before" state.
    let baseline_outcome = ArmOutcome {
        arm: Arm::FrozenBase,
        regions: setup.regions.clone(),
        adapters: AdapterRegistry::new(),
        edit_log: Vec::new(),
    };
    let baseline_s = evaluate_arm(&setup, &baseline_outcome, &s_ex, config.eval_k)?;
    let mut outcomes = Vec::new();
    let mut arm_evals = Vec::new();
    let mut post_s = Vec::new();
    for &arm in &config.arms {
        let outcome = finetune_arm(arm, &setup, &f_ex, config)?;
        let s = evaluate_arm(&setup, &outcome, &s_ex, config.eval_k)?;
        let t = evaluate_arm(&setup, &outcome, &t_ex, config.eval_k)?;
        arm_evals.push(ArmEval { arm, s, t });
        post_s.push((arm, s));
        outcomes.push((arm, outcome));
    }
    let forgetting = forgetting_report(Some(baseline_s), &post_s)?;
    let geometry = outcomes
        .iter()
        .find(|(arm, _)| *arm == Arm::Raie)
        .map(|(_, outcome)| region_geometry_report(&setup.regions, &outcome.regions));
    let report = EvalReport {
        k_regions: config.k_regions,
        eval_k: config.eval_k,
        seed: config.seed,
        arms: arm_evals,
        forgetting,
        geometry,
    };
    Ok(RunArtifacts {
        setup,
        outcomes,
        report,
    })
}

fn fmt_f(x: f64) -> String {
    format!("{x:.6}")
}

/// Tab-separated edit log: window, p*, δ, action, region (or `-`).
pub fn render_edit_log(log: &[EditRecord]) -> String {
    let mut s = String::new();
    for rec in log {
        let region = rec
            .region
            .map_or_else(|| "-".to_string(), |r| r.0.to_string());
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            rec.window,
            fmt_f(rec.p_star),
            fmt_f(rec.margin_delta),
            rec.action,
            region
        ));
    }
    s
}

/// Tab-separated geometry rows: region, Δ center, ΔA% (or `new`).
pub fn render_geometry_tsv(report: &GeometryReport) -> String {
    let mut s = String::new();
    for row in &report.rows {
        let delta = row
            .delta_center
            .map_or_else(|| "new".to_string(), fmt_f);
        let area = row
            .delta_area_pct
            .map_or_else(|| "new".to_string(), fmt_f);
        s.push_str(&format!("{}\t{}\t{}\n", row.region, delta, area));
    }
    s
}

/// Machine-readable flat key-value report. Deliberately contains no
/// wall-clock so identical config + seed gives identical bytes.
pub fn render_report_kv(report: &EvalReport) -> String {
    let mut s = String::new();
    s.push_str(&format!("config.k_regions = {}\n", report.k_regions));
    s.push_str(&format!("config.eval_k = {}\n", report.eval_k));
    s.push_str(&format!("config.seed = {}\n", report.seed));
    for eval in &report.arms {
        for (split, m) in [("s", eval.s), ("t", eval.t)] {
            s.push_str(&format!(
                "arm.{}.{split}.recall = {}\n",
                eval.arm,
                fmt_f(m.recall)
            ));
            s.push_str(&format!(
                "arm.{}.{split}.ndcg = {}\n",
                eval.arm,
                fmt_f(m.ndcg)
            ));
            s.push_str(&format!("arm.{}.{split}.n = {}\n", eval.arm, m.n));
        }
    }
    for row in &report.forgetting {
        s.push_str(&format!(
            "forgetting.{}.before.recall = {}\n",
            row.arm,
            fmt_f(row.before.recall)
        ));
        s.push_str(&format!(
            "forgetting.{}.after.recall = {}\n",
            row.arm,
            fmt_f(row.after.recall)
        ));
        s.push_str(&format!(
            "forgetting.{}.drop.recall = {}\n",
            row.arm,
            fmt_f(row.drop_recall())
        ));
        s.push_str(&format!(
            "forgetting.{}.drop.ndcg = {}\n",
            row.arm,
            fmt_f(row.drop_ndcg())
        ));
    }
    if let Some(geo) = &report.geometry {
        s.push_str(&format!("geometry.s_pre = {}\n", fmt_f(geo.s_pre)));
        s.push_str(&format!("geometry.s_post = {}\n", fmt_f(geo.s_post)));
        for row in &geo.rows {
            let delta = row
                .delta_center
                .map_or_else(|| "new".to_string(), fmt_f);
            let area = row
                .delta_area_pct
                .map_or_else(|| "new".to_string(), fmt_f);
            s.push_str(&format!(
                "geometry.region.{}.delta_center = {delta}\n",
                row.region
            ));
            s.push_str(&format!(
                "geometry.region.{}.delta_area_pct = {area}\n",
                row.region
            ));
        }
    }
    s
}

/// Human-readable report; the only place wall-clock time appears.
pub fn render_report_text(report: &EvalReport, wall_clock: Option<std::time::Duration>) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "experiment: K={} eval_k={} seed={}\n",
        report.k_regions, report.eval_k, report.seed
    ));
    s.push_str("\narm              split  recall@k  ndcg@k    n\n");
    for eval in &report.arms {
        for (split, m) in [("S", eval.s), ("T", eval.t)] {
            s.push_str(&format!(
                "{:<16} {:<6} {:<9.4} {:<9.4} {}\n",
                eval.arm.name(),
                split,
                m.recall,
                m.ndcg,
                m.n
            ));
        }
    }
    if !report.forgetting.is_empty() {
        s.push_str("\nforgetting (S split)   before    after     drop\n");
        for row in &report.forgetting {
            s.push_str(&format!(
                "{:<22} {:<9.4} {:<9.4} {:+.4}\n",
                row.arm.name(),
                row.before.recall,
                row.after.recall,
                row.drop_recall()
            ));
        }
    }
    if let Some(geo) = &report.geometry {
        s.push_str(&format!(
            "\nregion geometry: separability {:.4} -> {:.4}\n",
            geo.s_pre, geo.s_post
        ));
        s.push_str("region  d_center  d_area_pct\n");
        for row in &geo.rows {
            let delta = row
                .delta_center
                .map_or_else(|| "new".to_string(), |v| format!("{v:.4}"));
            let area = row
                .delta_area_pct
                .map_or_else(|| "new".to_string(), |v| format!("{v:.2}"));
            s.push_str(&format!("{:<7} {:<9} {}\n", row.region.0, delta, area));
        }
    }
    if let Some(d) = wall_clock {
        s.push_str(&format!("\nwall clock: {:.2}s\n", d.as_secs_f64()));
    }
    s
}
