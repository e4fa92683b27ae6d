//! Command-line experiment runner: train agents, evaluate checkpoints,
//! sweep mission durations, run baselines, export figures, and verify the
//! numerical oracles.

use anyhow::{bail, Context, Result};
use antijam_core::agents::AgentCheckpoint;
use antijam_core::config::Config;
use antijam_core::harness::{self, export, verify, TrainAlgorithm};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "antijam",
    version,
    about = "RIS-assisted anti-jamming UAV link simulator and RL toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    Ddpg,
    Td3,
    Td3NoRis,
    Td3CsiBaseline,
}

impl From<AlgorithmArg> for TrainAlgorithm {
    fn from(a: AlgorithmArg) -> TrainAlgorithm {
        match a {
            AlgorithmArg::Ddpg => TrainAlgorithm::Ddpg,
            AlgorithmArg::Td3 => TrainAlgorithm::Td3,
            AlgorithmArg::Td3NoRis => TrainAlgorithm::Td3NoRis,
            AlgorithmArg::Td3CsiBaseline => TrainAlgorithm::Td3CsiBaseline,
        }
    }
}

#[derive(Args)]
struct ConfigArgs {
    /// Scenario/hyperparameter file (TOML). Defaults to the built-in
    /// full-scale configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override (also settable via ANTIJAM_MASTER_SEED).
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<(Config, u64)> {
        let mut cfg = match &self.config {
            Some(path) => Config::load_from_path(path)
                .with_context(|| format!("loading {}", path.display()))?,
            None => Config::full_scale(),
        };
        if let Some(seed) = self.seed {
            cfg.set_master_seed(seed);
        }
        let seed = cfg.master_seed;
        Ok((cfg, seed))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write checkpoint + per-episode metrics.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum)]
        algorithm: AlgorithmArg,
        /// Output directory (created if missing).
        #[arg(long, default_value = "runs/train")]
        out: PathBuf,
    },
    /// Evaluate a checkpoint with exploration noise disabled.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Number of test episodes.
        #[arg(long, default_value_t = 500)]
        episodes: u64,
        #[arg(long, default_value = "runs/eval")]
        out: PathBuf,
        /// Also record one zero-noise episode slot by slot.
        #[arg(long)]
        trace: bool,
        /// Also dump the first reset channel snapshot (debug aid).
        #[arg(long)]
        dump_snapshot: bool,
    },
    /// Train + evaluate across a set of mission durations.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum)]
        algorithm: AlgorithmArg,
        /// Comma-separated mission durations in seconds.
        #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,25,30,35,40")]
        durations: Vec<f64>,
        /// Test episodes per duration.
        #[arg(long, default_value_t = 100)]
        eval_episodes: u64,
        #[arg(long, default_value = "runs/sweep")]
        out: PathBuf,
    },
    /// Shorthand for training the reference schemes.
    Baseline {
        #[command(flatten)]
        config: ConfigArgs,
        /// Which baseline: the no-RIS learner or the perfect-CSI scheme.
        #[arg(long, value_enum)]
        which: BaselineArg,
        #[arg(long, default_value = "runs/baseline")]
        out: PathBuf,
    },
    /// Re-plot stored artifacts as CSV/JSON/SVG.
    Export {
        #[command(subcommand)]
        what: ExportCommand,
    },
    /// Run the numerical verification suites.
    Verify {
        #[command(flatten)]
        config: ConfigArgs,
        /// Include the 20-episode determinism check (about a minute).
        #[arg(long)]
        determinism: bool,
        /// Include the desk-scale learning study (minutes, trains agents).
        #[arg(long)]
        full: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BaselineArg {
    NoRis,
    Csi,
}

#[derive(Subcommand)]
enum ExportCommand {
    /// Average-reward curves from one or more training metrics CSVs.
    RewardCurves {
        /// metrics.csv files; the legend uses each file's algorithm stamp.
        #[arg(long, value_delimiter = ',', required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean rate vs. mission duration from sweep CSVs.
    RateVsDuration {
        #[arg(long, value_delimiter = ',', required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean finishing distance vs. mission duration from sweep CSVs.
    DistanceVsDuration {
        #[arg(long, value_delimiter = ',', required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Finishing-distance CDF from eval-episode CSVs.
    Cdf {
        #[arg(long, value_delimiter = ',', required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the step table next to the figure.
        #[arg(long)]
        csv: bool,
    },
    /// Rate-vs-finishing-distance scatter from sweep detail CSVs.
    RateVsDistance {
        #[arg(long, value_delimiter = ',', required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match Cli::parse().command {
        Command::Train { config, algorithm, out } => {
            let (cfg, seed) = config.load()?;
            run_training(&cfg, algorithm.into(), seed, &out)
        }
        Command::Eval {
            config,
            checkpoint,
            episodes,
            out,
            trace,
            dump_snapshot,
        } => {
            let (cfg, seed) = config.load()?;
            let cp = load_checkpoint(&checkpoint)?;
            std::fs::create_dir_all(&out)?;
            let report = harness::evaluate(&cp, &cfg, episodes, seed)?;
            export::write_eval_report_json(&report, &out.join("eval_report.json"))?;
            export::write_eval_episodes_csv(&report, &out.join("eval_episodes.csv"))?;
            println!(
                "{}: rate {:.3} ± {:.3} bit/s/Hz, finishing distance {:.2} ± {:.2} m over {} episodes",
                report.algorithm,
                report.mean_rate,
                report.std_rate,
                report.mean_finishing_distance,
                report.std_finishing_distance,
                report.n_episodes
            );
            if trace {
                let rows = harness::trace_episode(&cp, &cfg, seed)?;
                export::write_trace_csv(&rows, &out.join("trace.csv"))?;
            }
            if dump_snapshot {
                let env = antijam_core::env::Env::new(&cfg, TrainAlgorithm::parse(&cp.algorithm)
                    .map(TrainAlgorithm::ris_mode)
                    .unwrap_or(antijam_core::env::RisMode::Learned));
                let (state, _) = env.reset(antijam_core::rng::rng_stream(seed, "eval/episode/0"))?;
                export::write_snapshot_csv(&state.snapshot, &out.join("snapshot.csv"))?;
            }
            Ok(())
        }
        Command::Sweep {
            config,
            algorithm,
            durations,
            eval_episodes,
            out,
        } => {
            let (cfg, seed) = config.load()?;
            let algorithm: TrainAlgorithm = algorithm.into();
            std::fs::create_dir_all(&out)?;
            let sweep = harness::sweep_mission_duration(&cfg, algorithm, &durations, seed, eval_episodes)?;
            export::write_sweep_csv(&sweep, &out.join("sweep.csv"))?;
            export::write_sweep_detail_csv(&sweep, &out.join("sweep_detail.csv"))?;
            for row in &sweep.rows {
                println!(
                    "T = {:>5.1}s: rate {:.3} ± {:.3}, finishing distance {:.2} ± {:.2} m",
                    row.duration_s, row.mean_rate, row.std_rate, row.mean_finishing_distance,
                    row.std_finishing_distance
                );
            }
            Ok(())
        }
        Command::Baseline { config, which, out } => {
            let (cfg, seed) = config.load()?;
            let algorithm = match which {
                BaselineArg::NoRis => TrainAlgorithm::Td3NoRis,
                BaselineArg::Csi => TrainAlgorithm::Td3CsiBaseline,
            };
            run_training(&cfg, algorithm, seed, &out)
        }
        Command::Export { what } => run_export(what),
        Command::Verify { config, determinism, full } => {
            let (cfg, _) = config.load()?;
            let mut results = verify::run_quick(&cfg);
            if determinism {
                results.push(verify::check_metrics_determinism());
            }
            if full {
                let desk = Config::desk_scale();
                results.extend(verify::check_desk_scale_learning(&desk, &[0, 1, 2]));
            }
            let mut all_ok = true;
            for r in &results {
                println!("{}", r.line());
                all_ok &= r.passed;
            }
            if !all_ok {
                bail!("verification failed");
            }
            Ok(())
        }
    }
}

fn run_training(cfg: &Config, algorithm: TrainAlgorithm, seed: u64, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let result = harness::train(cfg, algorithm, seed)?;
    export::write_train_metrics_csv(&result, cfg, &out.join("metrics.csv"))?;
    let checkpoint_json =
        serde_json::to_string(&result.checkpoint).context("checkpoint serialization")?;
    std::fs::write(out.join("checkpoint.json"), checkpoint_json)?;
    if let Some(reason) = &result.aborted {
        println!("training aborted early: {reason} (checkpoint holds the last good parameters)");
    }
    let last = result.average_rewards.last().copied().unwrap_or(f64::NAN);
    println!(
        "{} seed {seed}: {} episodes, final average reward {last:.3}; artifacts in {}",
        algorithm.name(),
        result.episode_rewards.len(),
        out.display()
    );
    Ok(())
}

fn load_checkpoint(path: &Path) -> Result<AgentCheckpoint> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn label_from_meta(meta: &std::collections::BTreeMap<String, String>, path: &Path) -> String {
    let algo = meta.get("algorithm").cloned().unwrap_or_else(|| {
        path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    });
    match meta.get("seed") {
        Some(seed) => format!("{algo} (seed {seed})"),
        None => algo,
    }
}

fn run_export(what: ExportCommand) -> Result<()> {
    match what {
        ExportCommand::RewardCurves { inputs, out } => {
            let mut curves = Vec::new();
            for path in &inputs {
                let (meta, rows) = export::load_train_metrics_csv(path)?;
                curves.push((label_from_meta(&meta, path), rows));
            }
            std::fs::write(&out, export::reward_curves_svg(&curves))?;
        }
        ExportCommand::RateVsDuration { inputs, out } => {
            let mut tables = Vec::new();
            for path in &inputs {
                let loaded = export::load_sweep_csv(path)?;
                tables.push((label_from_meta(&loaded.meta, path), loaded.rows));
            }
            std::fs::write(&out, export::rate_vs_duration_svg(&tables))?;
        }
        ExportCommand::DistanceVsDuration { inputs, out } => {
            let mut tables = Vec::new();
            for path in &inputs {
                let loaded = export::load_sweep_csv(path)?;
                tables.push((label_from_meta(&loaded.meta, path), loaded.rows));
            }
            std::fs::write(&out, export::finishing_distance_vs_duration_svg(&tables))?;
        }
        ExportCommand::Cdf { inputs, out, csv } => {
            let mut groups = Vec::new();
            for path in &inputs {
                let (meta, rows) = export::load_eval_episodes_csv(path)?;
                let values: Vec<f64> = rows.iter().map(|e| e.finishing_distance).collect();
                groups.push((label_from_meta(&meta, path), values));
            }
            std::fs::write(&out, export::finishing_distance_cdf_svg(&groups)?)?;
            if csv {
                for (label, values) in &groups {
                    let table = export::render_cdf_csv(values, label)?;
                    let path = out.with_extension(format!("{}.cdf.csv", sanitize(label)));
                    std::fs::write(path, table)?;
                }
            }
        }
        ExportCommand::RateVsDistance { inputs, out } => {
            let mut groups = Vec::new();
            for path in &inputs {
                let (meta, detail) = export::load_sweep_detail_csv(path)?;
                groups.push((label_from_meta(&meta, path), detail));
            }
            std::fs::write(&out, export::rate_vs_distance_svg(&groups))?;
        }
    }
    Ok(())
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect()
}
