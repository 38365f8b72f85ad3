//! `raie`: data prep, drift simulation, region setup, finetune-phase
//! editing and adapter training, evaluation, sweeps, and state
//! inspection — one static binary, state passed via explicit files.

mod commands;
mod error;
mod schema;
mod state;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};

use commands::SplitChoice;
use error::CliError;
use raie_core::experiment::ExperimentConfig;

fn threads_arg() -> Arg {
    Arg::new("threads")
        .long("threads")
        .value_name("N")
        .value_parser(value_parser!(usize))
        .help("worker threads (default: RAIE_THREADS env var, else all cores)")
}

fn config_arg() -> Arg {
    Arg::new("config")
        .long("config")
        .value_name("FILE")
        .help("experiment config file, one `key = value` per line, '#' comments")
}

fn data_arg() -> Arg {
    Arg::new("data")
        .long("data")
        .value_name("FILE")
        .required(true)
        .help("tagged examples file produced by `ingest` or `simulate`")
}

fn state_arg() -> Arg {
    Arg::new("state")
        .long("state")
        .value_name("DIR")
        .required(true)
        .help("state directory written by `setup`")
}

fn qs_arg() -> Arg {
    Arg::new("qs")
        .long("qs")
        .value_name("Q")
        .value_parser(value_parser!(f64))
        .default_value("0.5")
        .help("timestamp quantile ending the set-up phase")
}

fn qf_arg() -> Arg {
    Arg::new("qf")
        .long("qf")
        .value_name("Q")
        .value_parser(value_parser!(f64))
        .default_value("0.8")
        .help("timestamp quantile ending the finetune phase")
}

fn window_len_arg() -> Arg {
    Arg::new("window-len")
        .long("window-len")
        .value_name("N")
        .value_parser(value_parser!(usize))
        .default_value("8")
        .help("context window length")
}

fn stride_arg() -> Arg {
    Arg::new("stride")
        .long("stride")
        .value_name("N")
        .value_parser(value_parser!(usize))
        .default_value("1")
        .help("window stride")
}

/// Adds one flag per experiment-config key (`edit.tau` ↔ `--edit-tau`).
fn with_schema_flags(mut cmd: Command) -> Command {
    for key in schema::schema() {
        cmd = cmd.arg(
            Arg::new(key.key)
                .long(schema::flag_name(key.key))
                .value_name("VALUE")
                .help(key.help),
        );
    }
    cmd
}

fn build_cli() -> Command {
    Command::new("raie")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Region-aware incremental preference editing over a frozen sequence backbone")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            Command::new("ingest")
                .about("Parse an interaction log, filter it, split S/F/T, and write windows")
                .arg(
                    Arg::new("input")
                        .long("input")
                        .value_name("FILE")
                        .required(true)
                        .help("raw interaction log"),
                )
                .arg(
                    Arg::new("format")
                        .long("format")
                        .value_name("NAME")
                        .default_value("tsv")
                        .help("input format: movielens (:: separated) or tsv"),
                )
                .arg(
                    Arg::new("binarize-threshold")
                        .long("binarize-threshold")
                        .value_name("R")
                        .value_parser(value_parser!(f64))
                        .default_value("4")
                        .help("keep events with rating >= threshold"),
                )
                .arg(
                    Arg::new("k-core")
                        .long("k-core")
                        .value_name("K")
                        .value_parser(value_parser!(usize))
                        .default_value("5")
                        .help("iterative k-core filter on users and items (<= 1 disables)"),
                )
                .arg(qs_arg())
                .arg(qf_arg())
                .arg(window_len_arg())
                .arg(stride_arg())
                .arg(
                    Arg::new("out")
                        .long("out")
                        .value_name("FILE")
                        .required(true)
                        .help("examples file to write"),
                ),
        )
        .subcommand(
            Command::new("simulate")
                .about("Generate a synthetic drift stream with ground-truth interest labels")
                .arg(
                    Arg::new("scenario")
                        .long("scenario")
                        .value_name("FILE")
                        .required(true)
                        .help("scenario file, `key = value` lines"),
                )
                .arg(
                    Arg::new("seed")
                        .long("seed")
                        .value_name("SEED")
                        .value_parser(value_parser!(u64))
                        .help("override the scenario's seed"),
                )
                .arg(qs_arg())
                .arg(qf_arg())
                .arg(window_len_arg())
                .arg(stride_arg())
                .arg(
                    Arg::new("out")
                        .long("out")
                        .value_name("PREFIX")
                        .required(true)
                        .help("output prefix; writes PREFIX.events.tsv, .labels.tsv, .examples.tsv"),
                ),
        )
        .subcommand(with_schema_flags(
            Command::new("setup")
                .about("Train and freeze the backbone on S windows, build regions and adapters")
                .arg(config_arg())
                .arg(data_arg())
                .arg(
                    Arg::new("out-state")
                        .long("out-state")
                        .value_name("DIR")
                        .required(true)
                        .help("state directory to create"),
                )
                .arg(threads_arg()),
        ))
        .subcommand(with_schema_flags(
            Command::new("finetune")
                .about("Run the F-phase edit pass and per-region adapter training for each arm")
                .arg(config_arg())
                .arg(state_arg())
                .arg(data_arg())
                .arg(threads_arg()),
        ))
        .subcommand(with_schema_flags(
            Command::new("eval")
                .about("Evaluate arms on the S and T splits; write report files")
                .arg(config_arg())
                .arg(state_arg())
                .arg(data_arg())
                .arg(
                    Arg::new("split")
                        .long("split")
                        .value_name("WHICH")
                        .default_value("both")
                        .help("which splits to score: s, t, or both"),
                )
                .arg(
                    Arg::new("out-report")
                        .long("out-report")
                        .value_name("PREFIX")
                        .help("report path prefix (default: STATE/report)"),
                )
                .arg(threads_arg()),
        ))
        .subcommand(with_schema_flags(
            Command::new("sweep")
                .about("Rerun the experiment across values of one config key (region-aware arm)")
                .arg(config_arg())
                .arg(data_arg())
                .arg(
                    Arg::new("param")
                        .long("param")
                        .value_name("KEY")
                        .required(true)
                        .help("config key to sweep, e.g. k_regions"),
                )
                .arg(
                    Arg::new("values")
                        .long("values")
                        .value_name("SPEC")
                        .required(true)
                        .help("values: inclusive range `1..8` or comma list `1,3,5`"),
                )
                .arg(threads_arg()),
        ))
        .subcommand(
            Command::new("inspect")
                .about("Print region tables, adapter norms, and geometry deltas for a state")
                .arg(state_arg())
                .arg(
                    Arg::new("verbose")
                        .long("verbose")
                        .action(ArgAction::SetTrue)
                        .help("reserved; inspect output is always full"),
                ),
        )
}

/// Effective config: defaults, then the config file, then flag
/// overrides; validated at the end.
fn build_config(matches: &ArgMatches) -> Result<ExperimentConfig, CliError> {
    let mut config = ExperimentConfig::default();
    if let Some(path) = matches.get_one::<String>("config") {
        schema::load_config_file(&mut config, Path::new(path))?;
    }
    for key in schema::schema() {
        if let Some(value) = matches.get_one::<String>(key.key) {
            schema::apply_key(&mut config, key.key, value)?;
        }
    }
    config.validate().map_err(CliError::from)?;
    Ok(config)
}

/// --threads beats RAIE_THREADS; unset means rayon's default. Honored
/// only where the library parallelizes (adapter training, inference).
fn init_threads(matches: &ArgMatches) {
    let n = matches
        .get_one::<usize>("threads")
        .copied()
        .or_else(|| std::env::var("RAIE_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn path_of(matches: &ArgMatches, id: &str) -> PathBuf {
    PathBuf::from(matches.get_one::<String>(id).expect("required arg"))
}

fn run(matches: &ArgMatches) -> Result<(), CliError> {
    match matches.subcommand() {
        Some(("ingest", m)) => commands::cmd_ingest(
            &path_of(m, "input"),
            m.get_one::<String>("format").expect("defaulted"),
            *m.get_one::<f64>("binarize-threshold").expect("defaulted"),
            *m.get_one::<usize>("k-core").expect("defaulted"),
            *m.get_one::<f64>("qs").expect("defaulted"),
            *m.get_one::<f64>("qf").expect("defaulted"),
            *m.get_one::<usize>("window-len").expect("defaulted"),
            *m.get_one::<usize>("stride").expect("defaulted"),
            &path_of(m, "out"),
        ),
        Some(("simulate", m)) => commands::cmd_simulate(
            &path_of(m, "scenario"),
            m.get_one::<u64>("seed").copied(),
            *m.get_one::<f64>("qs").expect("defaulted"),
            *m.get_one::<f64>("qf").expect("defaulted"),
            *m.get_one::<usize>("window-len").expect("defaulted"),
            *m.get_one::<usize>("stride").expect("defaulted"),
            &path_of(m, "out"),
        ),
        Some(("setup", m)) => {
            init_threads(m);
            let config = build_config(m)?;
            commands::cmd_setup(&config, &path_of(m, "data"), &path_of(m, "out-state"))
        }
        Some(("finetune", m)) => {
            init_threads(m);
            let config = build_config(m)?;
            commands::cmd_finetune(&config, &path_of(m, "state"), &path_of(m, "data"))
        }
        Some(("eval", m)) => {
            init_threads(m);
            let config = build_config(m)?;
            let split = SplitChoice::from_name(m.get_one::<String>("split").expect("defaulted"))?;
            let out_report = m.get_one::<String>("out-report").map(PathBuf::from);
            commands::cmd_eval(
                &config,
                &path_of(m, "state"),
                &path_of(m, "data"),
                split,
                out_report.as_deref(),
            )
        }
        Some(("sweep", m)) => {
            init_threads(m);
            let config = build_config(m)?;
            commands::cmd_sweep(
                &config,
                &path_of(m, "data"),
                m.get_one::<String>("param").expect("required"),
                m.get_one::<String>("values").expect("required"),
            )
        }
        Some(("inspect", m)) => commands::cmd_inspect(&path_of(m, "state")),
        _ => unreachable!("subcommand required"),
    }
}

fn main() -> ExitCode {
    // Die quietly on a closed pipe (`raie inspect | head`) instead of
    // panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let matches = build_cli().get_matches();
    match run(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("raie: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        build_cli().debug_assert();
    }

    #[test]
    fn schema_flags_cover_every_key() {
        let cmd = build_cli();
        let setup = cmd
            .get_subcommands()
            .find(|c| c.get_name() == "setup")
            .unwrap();
        for key in schema::schema() {
            assert!(
                setup
                    .get_arguments()
                    .any(|a| a.get_long() == Some(schema::flag_name(key.key).as_str())),
                "no flag for config key {}",
                key.key
            );
        }
    }
}
