use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{CommandFactory, Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;

use socnav::baselines::{Cadrl, External, GreedyPolicy};
use socnav::config::FileConfig;
use socnav::eval::{self, export, EpisodeLog, ExportFormat, Suite};
use socnav::geometry::{Pose, Shape};
use socnav::policy::train::config_hash;
use socnav::policy::{self, ActorPolicy, Checkpoint, CurveRecord, Policy, PolicyError, Stage, TrainSink};
use socnav::world::Env;

#[derive(Parser)]
#[command(name = "socnav", version, about = "Train and evaluate socially aware laser-scan navigation policies")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed for all randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run on one thread (results are identical either way).
    #[arg(long)]
    single_thread: bool,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train the ego stage, or the social stage from an ego checkpoint.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        stage: Stage,
        #[arg(long)]
        warm_start: Option<PathBuf>,
        /// Permit the social stage without a warm start.
        #[arg(long)]
        allow_cold_social: bool,
    },
    /// Run a scenario suite and write logs and metrics.
    Eval {
        #[command(flatten)]
        common: Common,
        /// `greedy`, `cadrl`, or a checkpoint path.
        #[arg(long)]
        policy: String,
        /// mapless | crowd:<kind>:<count> | combined:<kind>:<count>
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        #[arg(long, default_value_t = 10)]
        runs: usize,
    },
    /// Write the initial maps and crowds of a suite without running it.
    ScenarioGen {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        #[arg(long, default_value_t = 10)]
        runs: usize,
    },
    /// Convert an episode-log file into tables.
    ReplayExport {
        /// A `*.logs.json` file written by `eval`.
        #[arg(long)]
        logs: PathBuf,
        /// trajectory-table | metrics-table | curve-series
        #[arg(long, value_parser = parse_format)]
        format: ExportFormat,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: eval::EvalError| e.to_string())
}

fn parse_format(s: &str) -> Result<ExportFormat, String> {
    s.parse().map_err(|e: eval::EvalError| e.to_string())
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    Ok(match path {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    })
}

fn setup_threads(common: &Common) -> Result<bool> {
    let threads = if common.single_thread { Some(1) } else { common.threads };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    Ok(!common.single_thread)
}

struct FileSink {
    dir: PathBuf,
    stage: Stage,
    curve: BufWriter<File>,
}

impl TrainSink for FileSink {
    fn record(&mut self, r: &CurveRecord) -> Result<(), PolicyError> {
        serde_json::to_writer(&mut self.curve, r).map_err(std::io::Error::from)?;
        self.curve.write_all(b"\n")?;
        Ok(())
    }

    fn checkpoint(&mut self, ckpt: &Checkpoint) -> Result<(), PolicyError> {
        let path = self
            .dir
            .join(format!("{}-step{:09}.ckpt", self.stage, ckpt.meta.env_steps));
        ckpt.save(&path)?;
        info!("checkpoint {}", path.display());
        Ok(())
    }
}

fn cmd_train(common: Common, stage: Stage, warm_start: Option<PathBuf>, allow_cold_social: bool) -> Result<ExitCode> {
    let cfg = load_config(common.config.as_deref())?;
    if stage == Stage::Social && warm_start.is_none() && !(allow_cold_social || cfg.train.allow_cold_social) {
        Cli::command()
            .error(
                clap::error::ErrorKind::MissingRequiredArgument,
                "--stage social requires --warm-start <ego checkpoint> (or --allow-cold-social)",
            )
            .exit();
    }
    let parallel = setup_threads(&common)?;
    let mut tcfg = cfg.train.clone();
    tcfg.seed = common.seed;
    tcfg.allow_cold_social |= allow_cold_social;
    let warm = warm_start
        .as_deref()
        .map(|p| Checkpoint::load(p).with_context(|| format!("loading warm start {}", p.display())))
        .transpose()?;
    if let Some(w) = &warm {
        if w.meta.stage != Stage::Ego {
            warn!("warm start was trained in the {} stage", w.meta.stage);
        }
    }
    fs::create_dir_all(&common.out)?;
    let curve_path = common.out.join(format!("{stage}-curve.jsonl"));
    let mut sink = FileSink {
        dir: common.out.clone(),
        stage,
        curve: BufWriter::new(File::create(&curve_path)?),
    };
    let result = policy::train(&tcfg, stage, &cfg.env, warm.as_ref(), parallel, &mut sink);
    sink.curve.flush()?;
    match result {
        Ok(outcome) => {
            let path = common.out.join(format!("{stage}.ckpt"));
            outcome.checkpoint.save(&path)?;
            println!("wrote {} and {}", path.display(), curve_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Err(e @ PolicyError::Diverged { .. }) => {
            eprintln!("training aborted: {e}");
            Ok(ExitCode::from(3))
        }
        Err(e) => Err(e.into()),
    }
}

fn build_policy(name: &str, cfg: &FileConfig) -> Result<(Box<dyn Policy>, String)> {
    match name {
        "greedy" => Ok((
            Box::new(GreedyPolicy {
                params: cfg.greedy.clone(),
                lidar: cfg.env.lidar.clone(),
            }),
            "greedy".into(),
        )),
        "cadrl" => Ok((Box::new(External(Cadrl)), "cadrl".into())),
        path => {
            let path = Path::new(path);
            let ckpt = Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
            let [rows, beams] = ckpt.meta.input;
            if rows != cfg.env.lidar.history || beams != cfg.env.lidar.beams {
                bail!(
                    "checkpoint expects {rows}x{beams} motion features but the configuration produces {}x{}",
                    cfg.env.lidar.history,
                    cfg.env.lidar.beams
                );
            }
            if ckpt.meta.config_hash != config_hash(&cfg.train, &cfg.env) {
                warn!("checkpoint was trained under a different configuration (hash {})", ckpt.meta.config_hash);
            }
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("policy").to_string();
            Ok((Box::new(ActorPolicy::from_checkpoint(stem.clone(), &ckpt)?), stem))
        }
    }
}

fn cmd_eval(common: Common, policy: String, suite: Suite, runs: usize) -> Result<ExitCode> {
    let cfg = load_config(common.config.as_deref())?;
    let parallel = setup_threads(&common)?;
    let (policy, pname) = build_policy(&policy, &cfg)?;
    let logs = eval::run_suite(policy.as_ref(), &suite, &cfg.env, runs, common.seed, parallel)?;
    fs::create_dir_all(&common.out)?;
    let stem = format!("{}__{}__seed{}", suite.slug(), pname, common.seed);
    let log_path = common.out.join(format!("{stem}.logs.json"));
    fs::write(&log_path, serde_json::to_vec(&logs)?)?;
    let mut written = vec![log_path];
    for format in [ExportFormat::TrajectoryTable, ExportFormat::MetricsTable, ExportFormat::CurveSeries] {
        written.extend(export(&logs, format, &common.out, &stem)?);
    }
    let metrics = eval::compute_metrics(&logs)?;
    println!("{}", serde_json::to_string(&metrics)?);
    for p in written {
        info!("wrote {}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ScenarioRecord {
    episode: u64,
    map_seed: u64,
    crowd_seed: u64,
    start: Pose,
    goal: socnav::Vec2,
    obstacles: Vec<Shape>,
    pedestrians: Vec<socnav::crowd::Pedestrian>,
}

fn cmd_scenario_gen(common: Common, suite: Suite, runs: usize) -> Result<ExitCode> {
    let cfg = load_config(common.config.as_deref())?;
    let template = suite.env_config(&cfg.env);
    let mut records = Vec::with_capacity(runs);
    for i in 0..runs as u64 {
        let c = template.for_episode(common.seed, i);
        let env = Env::new(c.clone())?;
        records.push(ScenarioRecord {
            episode: i,
            map_seed: c.map_seed,
            crowd_seed: c.crowd.seed,
            start: env.robot().pose,
            goal: env.goal(),
            obstacles: env.obstacles().to_vec(),
            pedestrians: env.pedestrians().to_vec(),
        });
    }
    fs::create_dir_all(&common.out)?;
    let path = common
        .out
        .join(format!("{}__seed{}.scenarios.json", suite.slug(), common.seed));
    fs::write(&path, serde_json::to_vec_pretty(&records)?)?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_replay_export(logs: PathBuf, format: ExportFormat, out: PathBuf) -> Result<ExitCode> {
    let parsed: Vec<EpisodeLog> =
        serde_json::from_slice(&fs::read(&logs).with_context(|| format!("reading {}", logs.display()))?)?;
    let name = logs.file_name().and_then(|s| s.to_str()).unwrap_or("replay");
    let stem = name.strip_suffix(".logs.json").unwrap_or(name);
    for p in export(&parsed, format, &out, stem)? {
        println!("wrote {}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Train {
            common,
            stage,
            warm_start,
            allow_cold_social,
        } => cmd_train(common, stage, warm_start, allow_cold_social),
        Cmd::Eval {
            common,
            policy,
            suite,
            runs,
        } => cmd_eval(common, policy, suite, runs),
        Cmd::ScenarioGen { common, suite, runs } => cmd_scenario_gen(common, suite, runs),
        Cmd::ReplayExport { logs, format, out } => cmd_replay_export(logs, format, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
