//! The experiment-config schema: every key of the plain-text config
//! file ("key = value" lines, '#' comments) and its command-line twin.
//! One parse/render pair per key keeps file keys and flags one-to-one
//! by construction.

use std::path::Path;

use raie_core::config::{parse_value, read_kv_file};
use raie_core::experiment::{Arm, ExperimentConfig};
use raie_core::region::OverlapDistanceMode;
use raie_core::ConfigError;

use crate::error::CliError;

pub struct SchemaKey {
    pub key: &'static str,
    pub help: &'static str,
    pub apply: fn(&mut ExperimentConfig, &str) -> Result<(), ConfigError>,
    pub render: fn(&ExperimentConfig) -> String,
}

macro_rules! cfg_key {
    ($key:literal, $t:ty, $help:literal, $($path:tt).+) => {
        SchemaKey {
            key: $key,
            help: $help,
            apply: |c, v| {
                c.$($path).+ = parse_value::<$t>($key, v)?;
                Ok(())
            },
            render: |c| c.$($path).+.to_string(),
        }
    };
}

fn apply_arms(c: &mut ExperimentConfig, v: &str) -> Result<(), ConfigError> {
    let mut arms = Vec::new();
    for part in v.split(',') {
        let name = part.trim();
        if name.is_empty() {
            continue;
        }
        arms.push(Arm::from_name(name).map_err(|e| ConfigError::InvalidValue {
            key: "arms".to_string(),
            reason: e.to_string(),
        })?);
    }
    if arms.is_empty() {
        return Err(ConfigError::InvalidValue {
            key: "arms".to_string(),
            reason: "no arms listed".to_string(),
        });
    }
    c.arms = arms;
    Ok(())
}

fn render_arms(c: &ExperimentConfig) -> String {
    c.arms
        .iter()
        .map(|a| a.name())
        .collect::<Vec<_>>()
        .join(",")
}

fn apply_overlap_mode(c: &mut ExperimentConfig, v: &str) -> Result<(), ConfigError> {
    c.edit.overlap_distance_mode = match v.to_ascii_lowercase().as_str() {
        "angular" => OverlapDistanceMode::Angular,
        "euclidean" | "euclidean-literal" => OverlapDistanceMode::EuclideanLiteral,
        other => {
            return Err(ConfigError::InvalidValue {
                key: "edit.overlap_distance_mode".to_string(),
                reason: format!("`{other}` is not `angular` or `euclidean`"),
            })
        }
    };
    Ok(())
}

fn render_overlap_mode(c: &ExperimentConfig) -> String {
    match c.edit.overlap_distance_mode {
        OverlapDistanceMode::Angular => "angular".to_string(),
        OverlapDistanceMode::EuclideanLiteral => "euclidean".to_string(),
    }
}

pub fn schema() -> Vec<SchemaKey> {
    vec![
        cfg_key!("k_regions", usize, "number of preference regions K", k_regions),
        cfg_key!("window_len", usize, "context window length (windowing commands only)", window_len),
        cfg_key!("stride", usize, "window stride (windowing commands only)", stride),
        cfg_key!("eval_k", usize, "top-k cutoff for recall/ndcg", eval_k),
        cfg_key!("seed", u64, "master random seed; all randomness derives from it", seed),
        SchemaKey {
            key: "arms",
            help: "comma-separated arms: RAIE, GlobalAdapter, Replay, FrozenBase",
            apply: apply_arms,
            render: render_arms,
        },
        cfg_key!("edit_enabled", bool, "run the F-phase region editing pass", edit_enabled),
        cfg_key!("repair_steps", usize, "overlap-repair gradient steps after editing", repair_steps),
        cfg_key!("repair_step_size", f64, "overlap-repair step size", repair_step_size),
        cfg_key!("edit.tau", f64, "confidence threshold for in-region edits", edit.tau),
        cfg_key!("edit.delta_min", f64, "margin separating update from expand", edit.delta_min),
        cfg_key!("edit.beta", f64, "radius EMA coefficient for updates", edit.beta),
        cfg_key!("edit.gamma", f64, "center EMA coefficient for updates", edit.gamma),
        cfg_key!("edit.lambda_expand", f64, "radius expansion rate", edit.lambda_expand),
        cfg_key!("edit.alpha_expand", f64, "center coefficient for expands", edit.alpha_expand),
        cfg_key!("edit.r_max", f64, "radius cap in radians", edit.r_max),
        cfg_key!("edit.radius_quantile", f64, "member-angle quantile for fresh radii", edit.radius_quantile),
        cfg_key!("edit.buffer_threshold", u32, "buffered vectors that trigger a flush", edit.buffer_threshold),
        cfg_key!("edit.k_add", u32, "regions created per buffer flush", edit.k_add),
        cfg_key!("edit.lambda_sep", f64, "separation penalty weight", edit.lambda_sep),
        SchemaKey {
            key: "edit.overlap_distance_mode",
            help: "center distance for the separation penalty: angular or euclidean",
            apply: apply_overlap_mode,
            render: render_overlap_mode,
        },
        cfg_key!("train.learning_rate", f64, "AdamW learning rate", train.learning_rate),
        cfg_key!("train.setup_epochs", u32, "backbone training epochs in phase S", train.setup_epochs),
        cfg_key!("train.finetune_epochs", u32, "adapter training epochs in phase F", train.finetune_epochs),
        cfg_key!("train.batch_size", u32, "training batch size", train.batch_size),
        cfg_key!("train.mixing_ratio", f64, "probability a finetune batch slot replays setup data", train.mixing_ratio),
        cfg_key!("train.weight_decay", f64, "AdamW decoupled weight decay", train.weight_decay),
        cfg_key!("train.grad_clip", f64, "global gradient-norm clip", train.grad_clip),
        cfg_key!("model.dim", usize, "embedding dimension", model.dim),
        cfg_key!("model.rho", f64, "recency decay of the subsequence pooling", model.rho),
        cfg_key!("model.lora_rank", usize, "adapter rank", model.lora_rank),
        cfg_key!("model.lora_alpha", f64, "adapter scale numerator (scale = alpha/rank)", model.lora_alpha),
        cfg_key!("model.lora_dropout", f64, "adapter-input dropout during training", model.lora_dropout),
    ]
}

/// `edit.tau` ↔ `--edit-tau`, `k_regions` ↔ `--k-regions`.
pub fn flag_name(key: &str) -> String {
    key.replace(['.', '_'], "-")
}

pub fn apply_key(config: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), ConfigError> {
    for k in schema() {
        if k.key == key {
            return (k.apply)(config, value);
        }
    }
    Err(ConfigError::UnknownKey(key.to_string()))
}

/// Applies every key of a config file on top of `config`. Unknown keys
/// are errors so typos never pass silently.
pub fn load_config_file(config: &mut ExperimentConfig, path: &Path) -> Result<(), CliError> {
    let map = read_kv_file(path)?;
    for (key, value) in &map {
        apply_key(config, key, value)?;
    }
    Ok(())
}

/// Renders the full effective config, one line per schema key, itself
/// loadable as a config file.
pub fn render_config(config: &ExperimentConfig) -> String {
    let mut s = String::new();
    for k in schema() {
        s.push_str(&format!("{} = {}\n", k.key, (k.render)(config)));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_key_round_trips_through_render() {
        let mut config = ExperimentConfig::default();
        config.k_regions = 5;
        config.edit.tau = 0.3;
        config.train.learning_rate = 0.01;
        config.model.dim = 24;
        config.arms = vec![Arm::Raie, Arm::FrozenBase];
        config.edit.overlap_distance_mode = OverlapDistanceMode::Angular;
        let rendered = render_config(&config);
        let mut reparsed = ExperimentConfig::default();
        for line in rendered.lines() {
            let (k, v) = line.split_once(" = ").unwrap();
            apply_key(&mut reparsed, k, v).unwrap();
        }
        assert_eq!(reparsed, config);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let mut config = ExperimentConfig::default();
        assert!(matches!(
            apply_key(&mut config, "k_reigons", "3"),
            Err(ConfigError::UnknownKey(_))
        ));
    }

    #[test]
    fn bad_value_names_the_key() {
        let mut config = ExperimentConfig::default();
        let err = apply_key(&mut config, "edit.tau", "a lot").unwrap_err();
        assert!(err.to_string().contains("edit.tau"));
    }

    #[test]
    fn flag_names_use_dashes() {
        assert_eq!(flag_name("edit.overlap_distance_mode"), "edit-overlap-distance-mode");
        assert_eq!(flag_name("k_regions"), "k-regions");
    }
}
