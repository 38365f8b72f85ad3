//! Region-aware incremental preference editing for sequential recommendation.
//!
//! User interaction subsequences are embedded on the unit hypersphere,
//! clustered into preference regions (a center plus an angular radius),
//! and kept current under a confidence-gated Update/Expand/Add edit rule
//! while a dedicated low-rank adapter per region adapts a frozen
//! sequence-scoring backbone. At inference a subsequence is routed to the
//! best-matching region and scored through that region's adapter.
//!
//! The crate is organized around the phases of the temporal protocol:
//!
//! - [`pipeline`]: ingestion, binarization, k-core filtering, quantile
//!   cutoffs, and leakage-free window construction (Set-up / Finetune /
//!   Test segments).
//! - [`region`] and [`kmeans`]: spherical clustering and the editable
//!   region state machine, with binary snapshots in [`snapshot`].
//! - [`model`]: the desk-scale frozen backbone, per-region low-rank
//!   adapters, and their training loops.
//! - [`sim`]: synthetic drift streams with ground-truth interest labels.
//! - [`experiment`]: the end-to-end setup/finetune/inference runner,
//!   comparison arms, and reports.

pub mod config;
pub mod error;
pub mod experiment;
pub mod kmeans;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod region;
pub mod sim;
pub mod snapshot;
pub mod vector;
mod wire;

pub use error::{
    ConfigError, EditError, ExperimentError, KmeansError, ModelError, PipelineError, SimError,
    SnapshotError,
};
pub use experiment::{
    finetune_arm, run_experiment, run_inference, run_setup, Arm, ArmOutcome, EvalReport,
    ExperimentConfig, ModelParams, SetupState,
};
pub use model::{Backbone, ItemVocab, LowRankAdapter, TrainConfig, TrainExample};
pub use pipeline::{InputFormat, InteractionEvent, Phase, TemporalSplit, WindowExample};
pub use region::{
    CreatedPhase, EditAction, EditConfig, EditDecision, FlushReport, OverlapDistanceMode, Region,
    RegionId, RegionSet,
};
pub use vector::UnitVector;

/// Derives a child RNG seed from a base seed, a role tag, and an index.
///
/// All randomness in the crate flows through seeds produced here so that
/// independent components (k-means restarts, adapter init, batch
/// sampling) get decorrelated but fully reproducible streams.
pub fn derive_seed(base: u64, tag: &str, index: u64) -> u64 {
    // FNV-1a over the base seed, tag bytes, and index.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in base
        .to_le_bytes()
        .iter()
        .chain(tag.as_bytes())
        .chain(index.to_le_bytes().iter())
    {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
