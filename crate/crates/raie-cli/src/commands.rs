//! The seven subcommands. Each is a thin deterministic wrapper over the
//! library: all randomness comes from the config seed, and identical
//! config + seed gives byte-identical report files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use raie_core::experiment::{
    evaluate_arm, finetune_arm, forgetting_report, region_geometry_report, render_geometry_tsv,
    render_report_kv, render_report_text, run_experiment, run_setup, Arm, ArmEval, ArmOutcome,
    EvalReport, ExperimentConfig, GeometryReport, SplitMetrics,
};
use raie_core::model::adapter::AdapterRegistry;
use raie_core::model::Mat;
use raie_core::pipeline::{
    self, segment_windows, split_stage_stats, temporal_split, InputFormat, Phase, StageStats,
    WindowExample,
};
use raie_core::region::{CreatedPhase, EditAction, RegionSet};
use raie_core::sim::{format_labels, generate_stream, DriftScenario};
use raie_core::snapshot;

use crate::error::CliError;
use crate::state;

fn phase_slice(examples: &[WindowExample], phase: Phase) -> Vec<WindowExample> {
    examples
        .iter()
        .filter(|e| e.phase == phase)
        .cloned()
        .collect()
}

fn stage_block(name: &str, stats: &StageStats) -> String {
    format!(
        "{:<13} users          {}\n{:<13} items          {}\n{:<13} interactions   {}\n",
        name, stats.users, "", stats.items, "", stats.interactions
    )
}

/// Three-block stage table: per stage, distinct users, distinct items,
/// and interaction counts.
fn stage_table(stats: &[StageStats; 3]) -> String {
    let mut s = String::from("stage         metric         count\n");
    s.push_str(&stage_block("Set-up (S)", &stats[0]));
    s.push_str(&stage_block("Finetune (F)", &stats[1]));
    s.push_str(&stage_block("Test (T)", &stats[2]));
    s
}

fn window_counts(examples: &[WindowExample]) -> [usize; 3] {
    let mut counts = [0usize; 3];
    for ex in examples {
        match ex.phase {
            Phase::S => counts[0] += 1,
            Phase::F => counts[1] += 1,
            Phase::T => counts[2] += 1,
        }
    }
    counts
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_ingest(
    input: &Path,
    format_name: &str,
    binarize_threshold: f64,
    k_core: usize,
    q_s: f64,
    q_f: f64,
    window_len: usize,
    stride: usize,
    out: &Path,
) -> Result<(), CliError> {
    let format = InputFormat::from_name(format_name)?;
    let report = pipeline::ingest(input, format)?;
    println!(
        "ingest: {} events read from {} ({} lines skipped)",
        report.events.len(),
        input.display(),
        report.skipped
    );
    let events = pipeline::binarize(report.events, binarize_threshold);
    println!("binarize: {} events at rating >= {binarize_threshold}", events.len());
    let events = pipeline::k_core_filter(events, k_core);
    println!("{k_core}-core: {} events", events.len());
    let (split, tagged) = temporal_split(events, q_s, q_f)?;
    println!(
        "split: t_S = {} (q = {}), t_F = {} (q = {})\n",
        split.t_s, q_s, split.t_f, q_f
    );
    print!("{}", stage_table(&split_stage_stats(&tagged)));
    let windows = segment_windows(&tagged, window_len, stride);
    let [s, f, t] = window_counts(&windows);
    pipeline::write_examples(out, &windows)?;
    println!(
        "\nwindows (len {window_len}, stride {stride}): S {s}  F {f}  T {t}\nwrote {}",
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_simulate(
    scenario_path: &Path,
    seed: Option<u64>,
    q_s: f64,
    q_f: f64,
    window_len: usize,
    stride: usize,
    out_prefix: &Path,
) -> Result<(), CliError> {
    let mut scenario = DriftScenario::from_kv_text(&state::read_text(scenario_path)?)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let (events, labels) = generate_stream(&scenario)?;
    if let Some(parent) = out_prefix.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    let with_ext = |ext: &str| -> PathBuf {
        let mut name = out_prefix.as_os_str().to_os_string();
        name.push(ext);
        PathBuf::from(name)
    };
    let events_path = with_ext(".events.tsv");
    let labels_path = with_ext(".labels.tsv");
    let examples_path = with_ext(".examples.tsv");
    pipeline::write_events(&events_path, &events)?;
    state::write_file(&labels_path, format_labels(&labels))?;
    let (split, tagged) = temporal_split(events, q_s, q_f)?;
    let windows = segment_windows(&tagged, window_len, stride);
    pipeline::write_examples(&examples_path, &windows)?;
    let [s, f, t] = window_counts(&windows);
    println!(
        "simulated {} events over {} users, {} interests (seed {})",
        tagged.len(),
        scenario.users,
        scenario.interests,
        scenario.seed
    );
    println!("split: t_S = {} (q = {q_s}), t_F = {} (q = {q_f})", split.t_s, split.t_f);
    println!("windows (len {window_len}, stride {stride}): S {s}  F {f}  T {t}");
    println!("wrote {}", events_path.display());
    println!("wrote {}", labels_path.display());
    println!("wrote {}", examples_path.display());
    Ok(())
}

fn created_name(phase: CreatedPhase) -> &'static str {
    match phase {
        CreatedPhase::Setup => "setup",
        CreatedPhase::Finetune => "finetune",
    }
}

fn region_table(set: &RegionSet) -> String {
    let mut s = String::from("region  radius   members  edits  created\n");
    for r in set.regions() {
        s.push_str(&format!(
            "{:<7} {:<8.4} {:<8} {:<6} {}\n",
            r.id.0,
            r.radius,
            r.member_count,
            r.edit_count,
            created_name(r.created_at_phase)
        ));
    }
    s
}

fn baseline_outcome(setup: &raie_core::experiment::SetupState) -> ArmOutcome {
    ArmOutcome {
        arm: Arm::FrozenBase,
        regions: setup.regions.clone(),
        adapters: AdapterRegistry::new(),
        edit_log: Vec::new(),
    }
}

pub fn cmd_setup(
    config: &ExperimentConfig,
    data: &Path,
    out_state: &Path,
) -> Result<(), CliError> {
    let started = Instant::now();
    let examples = pipeline::read_examples(data)?;
    let setup = run_setup(&examples, config)?;
    let s_examples = phase_slice(&examples, Phase::S);
    // Pre-finetune S metrics, kept as the forgetting baseline. Fresh
    // adapters are exact no-ops, so the bare backbone is every arm's
    // "before" state.
    let baseline = evaluate_arm(&setup, &baseline_outcome(&setup), &s_examples, config.eval_k)?;
    state::write_setup(out_state, &setup, config, baseline)?;
    let [s, f, t] = window_counts(&examples);
    println!(
        "setup: trained on {s} S windows ({f} F / {t} T held), vocab {} items, dim {}",
        setup.vocab.item_count(),
        config.model.dim
    );
    print!("{}", region_table(&setup.regions));
    println!(
        "baseline S: recall@{} {:.4}, ndcg@{} {:.4} over {} windows",
        config.eval_k, baseline.recall, config.eval_k, baseline.ndcg, baseline.n
    );
    println!("state written to {}", out_state.display());
    println!("wall clock: {:.2}s", started.elapsed().as_secs_f64());
    Ok(())
}

fn action_counts(outcome: &ArmOutcome) -> (usize, usize, usize) {
    let mut update = 0;
    let mut expand = 0;
    let mut add = 0;
    for rec in &outcome.edit_log {
        match rec.action {
            EditAction::Update => update += 1,
            EditAction::Expand => expand += 1,
            EditAction::Add => add += 1,
        }
    }
    (update, expand, add)
}

pub fn cmd_finetune(
    config: &ExperimentConfig,
    state_dir: &Path,
    data: &Path,
) -> Result<(), CliError> {
    let started = Instant::now();
    let examples = pipeline::read_examples(data)?;
    let setup = state::load_setup(state_dir, config, Some(&examples))?;
    let f_examples = phase_slice(&examples, Phase::F);
    println!("finetune: {} F windows, arms: {}", f_examples.len(), {
        config
            .arms
            .iter()
            .map(|a| a.name())
            .collect::<Vec<_>>()
            .join(", ")
    });
    for &arm in &config.arms {
        let outcome = finetune_arm(arm, &setup, &f_examples, config)?;
        state::write_arm(state_dir, &outcome)?;
        match arm {
            Arm::Raie => {
                let (update, expand, add) = action_counts(&outcome);
                println!(
                    "{}: update {update}, expand {expand}, add {add}; K {} -> {}; {} adapters",
                    arm.name(),
                    setup.regions.k(),
                    outcome.regions.k(),
                    outcome.adapters.len()
                );
            }
            _ => println!("{}: {} adapters", arm.name(), outcome.adapters.len()),
        }
    }
    println!("wall clock: {:.2}s", started.elapsed().as_secs_f64());
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum SplitChoice {
    S,
    T,
    Both,
}

impl SplitChoice {
    pub fn from_name(name: &str) -> Result<Self, CliError> {
        match name.to_ascii_lowercase().as_str() {
            "s" => Ok(Self::S),
            "t" => Ok(Self::T),
            "both" => Ok(Self::Both),
            other => Err(CliError::usage(format!(
                "--split must be s, t, or both, not `{other}`"
            ))),
        }
    }

    fn wants_s(self) -> bool {
        matches!(self, Self::S | Self::Both)
    }

    fn wants_t(self) -> bool {
        matches!(self, Self::T | Self::Both)
    }
}

const EMPTY_SPLIT: SplitMetrics = SplitMetrics {
    recall: 0.0,
    ndcg: 0.0,
    n: 0,
};

pub fn cmd_eval(
    config: &ExperimentConfig,
    state_dir: &Path,
    data: &Path,
    split: SplitChoice,
    out_report: Option<&Path>,
) -> Result<(), CliError> {
    let started = Instant::now();
    let examples = pipeline::read_examples(data)?;
    let setup = state::load_setup(state_dir, config, None)?;
    let s_examples = phase_slice(&examples, Phase::S);
    let t_examples = phase_slice(&examples, Phase::T);
    let mut arm_evals: Vec<ArmEval> = Vec::new();
    let mut post_s: Vec<(Arm, SplitMetrics)> = Vec::new();
    let mut geometry: Option<GeometryReport> = None;
    for &arm in &config.arms {
        let outcome = state::load_arm(state_dir, arm, &setup)?;
        let s = if split.wants_s() {
            evaluate_arm(&setup, &outcome, &s_examples, config.eval_k)?
        } else {
            EMPTY_SPLIT
        };
        let t = if split.wants_t() {
            evaluate_arm(&setup, &outcome, &t_examples, config.eval_k)?
        } else {
            EMPTY_SPLIT
        };
        if arm == Arm::Raie {
            geometry = Some(region_geometry_report(&setup.regions, &outcome.regions));
        }
        arm_evals.push(ArmEval { arm, s, t });
        post_s.push((arm, s));
    }
    let forgetting = if split.wants_s() {
        forgetting_report(Some(state::read_baseline(state_dir)?), &post_s)?
    } else {
        Vec::new()
    };
    let report = EvalReport {
        k_regions: config.k_regions,
        eval_k: config.eval_k,
        seed: config.seed,
        arms: arm_evals,
        forgetting,
        geometry,
    };
    let prefix = out_report
        .map(Path::to_path_buf)
        .unwrap_or_else(|| state_dir.join("report"));
    let kv_path = prefix.with_extension("kv");
    let txt_path = prefix.with_extension("txt");
    // Written reports carry no wall clock so identical config + seed
    // gives identical bytes; the clock goes to stdout only.
    state::write_file(&kv_path, render_report_kv(&report))?;
    state::write_file(&txt_path, render_report_text(&report, None))?;
    if let Some(geo) = &report.geometry {
        state::write_file(&prefix.with_extension("geometry.tsv"), render_geometry_tsv(geo))?;
    }
    print!("{}", render_report_text(&report, Some(started.elapsed())));
    println!("\nwrote {}", kv_path.display());
    println!("wrote {}", txt_path.display());
    Ok(())
}

fn parse_sweep_values(spec: &str) -> Result<Vec<String>, CliError> {
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: i64 = lo
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("bad sweep range start `{lo}`")))?;
        let hi: i64 = hi
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| CliError::usage(format!("bad sweep range end `{hi}`")))?;
        if hi < lo {
            return Err(CliError::usage(format!("empty sweep range {lo}..{hi}")));
        }
        return Ok((lo..=hi).map(|v| v.to_string()).collect());
    }
    let values: Vec<String> = spec
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(str::to_string)
        .collect();
    if values.is_empty() {
        return Err(CliError::usage("no sweep values given"));
    }
    Ok(values)
}

/// Reruns the full experiment once per value of one config key,
/// reporting the region-aware arm. Sweeps retrain from scratch, so only
/// training/eval keys make sense against pre-windowed data.
pub fn cmd_sweep(
    config: &ExperimentConfig,
    data: &Path,
    param: &str,
    values_spec: &str,
) -> Result<(), CliError> {
    let started = Instant::now();
    if !crate::schema::schema().iter().any(|k| k.key == param) {
        return Err(CliError::usage(format!("unknown config key `{param}`")));
    }
    let examples = pipeline::read_examples(data)?;
    let values = parse_sweep_values(values_spec)?;
    println!("{param}\ts_recall\ts_ndcg\tt_recall\tt_ndcg\tk_post");
    for value in &values {
        let mut swept = config.clone();
        crate::schema::apply_key(&mut swept, param, value)?;
        swept.arms = vec![Arm::Raie];
        swept.validate().map_err(CliError::from)?;
        let run = run_experiment(&examples, &swept)?;
        let eval = &run.report.arms[0];
        let k_post = run.outcomes[0].1.regions.k();
        println!(
            "{value}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{k_post}",
            eval.s.recall, eval.s.ndcg, eval.t.recall, eval.t.ndcg
        );
    }
    eprintln!("wall clock: {:.2}s", started.elapsed().as_secs_f64());
    Ok(())
}

fn frobenius(m: &Mat) -> f64 {
    m.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn adapter_table(adapters: &AdapterRegistry) -> String {
    if adapters.is_empty() {
        return "  (no adapters)\n".to_string();
    }
    let mut s = String::from("region  |A|_F      |B|_F      |dW|_F\n");
    for (id, adapter) in adapters.iter() {
        s.push_str(&format!(
            "{:<7} {:<10.4} {:<10.4} {:.6}\n",
            id.0,
            frobenius(&adapter.a),
            frobenius(&adapter.b),
            frobenius(&adapter.effective_delta())
        ));
    }
    s
}

/// Prints the region table, adapter norms, and — for every finetuned
/// arm on disk — the geometry deltas against the setup-era regions.
pub fn cmd_inspect(state_dir: &Path) -> Result<(), CliError> {
    let regions = snapshot::restore(&state::read_bytes(&state_dir.join("regions.raie"))?)
        .map_err(|e| CliError::runtime(format!("{}: {e}", state_dir.display())))?;
    println!("setup regions (K = {}, dim {}):", regions.k(), regions.dim());
    print!("{}", region_table(&regions));
    let config = ExperimentConfig::default();
    let setup = state::load_setup(state_dir, &config, None)?;
    println!("\nsetup adapters:");
    print!("{}", adapter_table(&setup.adapters));
    for arm in Arm::ALL {
        let dir = state::arm_dir(state_dir, arm);
        if !dir.exists() {
            continue;
        }
        let outcome = state::load_arm(state_dir, arm, &setup)?;
        println!("\narm {} (K = {}):", arm.name(), outcome.regions.k());
        print!("{}", region_table(&outcome.regions));
        print!("{}", adapter_table(&outcome.adapters));
        let geo = region_geometry_report(&regions, &outcome.regions);
        println!("geometry vs setup (separability {:.4} -> {:.4}):", geo.s_pre, geo.s_post);
        println!("region\td_center\td_area_pct");
        print!("{}", render_geometry_tsv(&geo));
    }
    Ok(())
}
