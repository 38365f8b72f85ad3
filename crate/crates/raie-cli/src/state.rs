//! State-directory layout shared by setup, finetune, eval, and inspect:
//!
//! ```text
//! state/
//!   config.kv           effective experiment config at setup time
//!   backbone.rabb       frozen backbone checkpoint
//!   vocab.tsv           item vocabulary
//!   regions.raie        setup-era region snapshot
//!   assignments.tsv     per-S-window region id, one per line, file order
//!   baseline_s.kv       pre-finetune S metrics (forgetting baseline)
//!   adapters/           zero-initialized per-region adapter checkpoints
//!   arms/<arm>/         post-finetune regions, adapters, edit log per arm
//! ```
//!
//! Everything is a plain file so the phases can run on different
//! machines; nothing here keeps background state.

use std::fs;
use std::path::{Path, PathBuf};

use raie_core::config::{parse_kv_map, parse_value};
use raie_core::experiment::{
    render_edit_log, windows_to_train, Arm, ArmOutcome, ExperimentConfig, SetupState, SplitMetrics,
};
use raie_core::model::adapter::AdapterRegistry;
use raie_core::model::{Backbone, ItemVocab, LowRankAdapter};
use raie_core::pipeline::{Phase, WindowExample};
use raie_core::region::RegionId;
use raie_core::snapshot;

use crate::error::CliError;
use crate::schema;

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::runtime(format!("cannot read {}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("cannot read {}: {e}", path.display())))
}

fn make_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", path.display())))
}

pub fn arm_dir(state: &Path, arm: Arm) -> PathBuf {
    state.join("arms").join(arm.name())
}

fn write_adapters(dir: &Path, adapters: &AdapterRegistry) -> Result<(), CliError> {
    make_dir(dir)?;
    for (id, adapter) in adapters.iter() {
        write_file(&dir.join(format!("region_{}.ralo", id.0)), adapter.to_bytes(id))?;
    }
    Ok(())
}

/// Loads every `*.ralo` in `dir` (sorted by file name for determinism),
/// keyed by the region id embedded in each checkpoint. A missing
/// directory is an empty registry: the frozen-base arm has no adapters.
/// Checkpoints do not store the dropout rate, so training-time loads
/// rebind it from the config.
fn load_adapters(dir: &Path, dropout: f64) -> Result<AdapterRegistry, CliError> {
    let mut registry = AdapterRegistry::new();
    let entries = match fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(_) => return Ok(registry),
    };
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "ralo"))
        .collect();
    paths.sort();
    for path in paths {
        let (id, adapter) = LowRankAdapter::from_bytes(&read_bytes(&path)?)?;
        let adapter = if dropout > 0.0 {
            let scale = adapter.scale();
            LowRankAdapter::from_parts(adapter.a, adapter.b, scale, dropout)?
        } else {
            adapter
        };
        registry.insert(id, adapter);
    }
    Ok(registry)
}

pub fn write_setup(
    dir: &Path,
    setup: &SetupState,
    config: &ExperimentConfig,
    baseline: SplitMetrics,
) -> Result<(), CliError> {
    make_dir(dir)?;
    write_file(&dir.join("config.kv"), schema::render_config(config))?;
    write_file(&dir.join("backbone.rabb"), setup.backbone.to_bytes())?;
    write_file(&dir.join("vocab.tsv"), setup.vocab.to_tsv())?;
    write_file(&dir.join("regions.raie"), snapshot::snapshot(&setup.regions))?;
    let mut assignments = String::new();
    for id in &setup.s_assignments {
        assignments.push_str(&id.0.to_string());
        assignments.push('\n');
    }
    write_file(&dir.join("assignments.tsv"), assignments)?;
    write_file(
        &dir.join("baseline_s.kv"),
        format!(
            "recall = {}\nndcg = {}\nn = {}\n",
            baseline.recall, baseline.ndcg, baseline.n
        ),
    )?;
    write_adapters(&dir.join("adapters"), &setup.adapters)
}

/// Restores the setup phase from a state directory. With `examples`
/// given, the S-phase training pools and assignments are rebuilt (the
/// assignment file is positional against the S windows of that file);
/// without them the state serves evaluation only.
pub fn load_setup(
    dir: &Path,
    config: &ExperimentConfig,
    examples: Option<&[WindowExample]>,
) -> Result<SetupState, CliError> {
    let backbone = Backbone::from_bytes(&read_bytes(&dir.join("backbone.rabb"))?)?;
    let vocab = ItemVocab::from_tsv(&read_text(&dir.join("vocab.tsv"))?)?;
    let regions = snapshot::restore(&read_bytes(&dir.join("regions.raie"))?)
        .map_err(|e| CliError::runtime(format!("{}: {e}", dir.join("regions.raie").display())))?;
    let adapters = load_adapters(&dir.join("adapters"), config.model.lora_dropout)?;
    let (s_train, s_assignments) = match examples {
        Some(examples) => {
            let s_windows: Vec<WindowExample> = examples
                .iter()
                .filter(|e| e.phase == Phase::S)
                .cloned()
                .collect();
            let s_train = windows_to_train(&s_windows, &vocab)?;
            let path = dir.join("assignments.tsv");
            let mut assignments = Vec::new();
            for (n, line) in read_text(&path)?.lines().enumerate() {
                let id: u64 = line.trim().parse().map_err(|_| {
                    CliError::runtime(format!("{}: bad region id on line {}", path.display(), n + 1))
                })?;
                assignments.push(RegionId(id));
            }
            if assignments.len() != s_train.len() {
                return Err(CliError::runtime(format!(
                    "{} assignments but {} S windows; state was set up from different data",
                    assignments.len(),
                    s_train.len()
                )));
            }
            (s_train, assignments)
        }
        None => (Vec::new(), Vec::new()),
    };
    Ok(SetupState {
        backbone,
        vocab,
        regions,
        adapters,
        s_train,
        s_assignments,
    })
}

pub fn write_arm(state: &Path, outcome: &ArmOutcome) -> Result<(), CliError> {
    let dir = arm_dir(state, outcome.arm);
    make_dir(&dir)?;
    write_file(&dir.join("regions.raie"), snapshot::snapshot(&outcome.regions))?;
    write_file(&dir.join("edit_log.tsv"), render_edit_log(&outcome.edit_log))?;
    write_adapters(&dir.join("adapters"), &outcome.adapters)
}

/// Loads one arm's post-finetune state. A missing frozen-base directory
/// is synthesized from the setup regions (nothing trains in that arm);
/// any other missing arm means finetune has not run.
pub fn load_arm(state: &Path, arm: Arm, setup: &SetupState) -> Result<ArmOutcome, CliError> {
    let dir = arm_dir(state, arm);
    if !dir.exists() {
        if arm == Arm::FrozenBase {
            return Ok(ArmOutcome {
                arm,
                regions: setup.regions.clone(),
                adapters: AdapterRegistry::new(),
                edit_log: Vec::new(),
            });
        }
        return Err(CliError::runtime(format!(
            "no {} state under {}; run `raie finetune` first",
            arm.name(),
            state.display()
        )));
    }
    let regions = snapshot::restore(&read_bytes(&dir.join("regions.raie"))?)
        .map_err(|e| CliError::runtime(format!("{}: {e}", dir.join("regions.raie").display())))?;
    // Dropout stays 0 here: loaded arms are evaluated, never trained.
    let adapters = load_adapters(&dir.join("adapters"), 0.0)?;
    Ok(ArmOutcome {
        arm,
        regions,
        adapters,
        edit_log: Vec::new(),
    })
}

pub fn read_baseline(state: &Path) -> Result<SplitMetrics, CliError> {
    let path = state.join("baseline_s.kv");
    let map = parse_kv_map(&read_text(&path)?)
        .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    let get = |key: &str| -> Result<&String, CliError> {
        map.get(key)
            .ok_or_else(|| CliError::runtime(format!("{}: missing `{key}`", path.display())))
    };
    Ok(SplitMetrics {
        recall: parse_value::<f64>("recall", get("recall")?)
            .map_err(|e| CliError::runtime(e.to_string()))?,
        ndcg: parse_value::<f64>("ndcg", get("ndcg")?)
            .map_err(|e| CliError::runtime(e.to_string()))?,
        n: parse_value::<usize>("n", get("n")?).map_err(|e| CliError::runtime(e.to_string()))?,
    })
}
