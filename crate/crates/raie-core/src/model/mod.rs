//! Sequence model: frozen desk-scale backbone, low-rank region adapters,
//! prompt formatting, and the training loops that produce both.

pub mod adapter;
pub mod backbone;
pub mod mat;
pub mod optim;
pub mod prompt;
pub mod train;
pub mod vocab;

pub use adapter::{AdapterRegistry, LowRankAdapter};
pub use backbone::Backbone;
pub use mat::Mat;
pub use prompt::{build_prompt, parse_prompt};
pub use train::{
    next_item_loss, train_region_adapter, train_setup_backbone, AdapterGrads, AdapterTrainReport,
    TrainConfig, TrainExample,
};
pub use vocab::ItemVocab;
