use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scene_inpaint::config::PipelineConfig;
use scene_inpaint::pipeline::{self, RunOptions, StageStatus};
use scene_inpaint::synth::SceneSpec;
use scene_inpaint::{Error, Result};

#[derive(Parser)]
#[command(name = "scene-inpaint", version, about = "Unseen-region masks, guided depth alignment and point lifting for object removal")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config (a scene description for `synth`)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recompute cached stages
    #[arg(long)]
    force: bool,
    /// Worker threads
    #[arg(long)]
    workers: Option<usize>,
    /// Seed, overriding the config
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic dataset (default: 8-view ring around a box)
    Synth(Common),
    /// Compute per-view unseen masks and bbox prompts
    Unseen(Common),
    /// Align the reference view's depth prior to the incomplete depth
    Align(Common),
    /// Lift the aligned unseen depth into a PLY point set
    Unproject(Common),
    /// Write the evaluation report
    Eval(Common),
    /// Run unseen, align, unproject and eval in order
    Pipeline(Common),
}

fn pipeline_config(c: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &c.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(o) = &c.out {
        cfg.output = o.clone();
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if c.workers.is_some() {
        cfg.workers = c.workers;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(stage: &str, status: StageStatus) {
    match status {
        StageStatus::Ran => log::info!("{stage}: done"),
        StageStatus::Cached => log::info!("{stage}: cached, skipped (use --force to rerun)"),
    }
}

fn run(cli: Cli) -> Result<()> {
    let (stage, c) = match &cli.command {
        Command::Synth(c) => {
            let scene = match &c.config {
                Some(p) => pipeline::load_scene(p)?,
                None => SceneSpec::default_ring(),
            };
            let out = c.out.clone().unwrap_or_else(|| PathBuf::from("dataset"));
            if c.workers == Some(0) {
                return Err(Error::Config("workers must be >= 1".into()));
            }
            return pipeline::with_workers(c.workers, || pipeline::cmd_synth(&scene, &out)).map(|_| ());
        }
        Command::Unseen(c) => ("unseen", c),
        Command::Align(c) => ("align", c),
        Command::Unproject(c) => ("unproject", c),
        Command::Eval(c) => ("eval", c),
        Command::Pipeline(c) => ("pipeline", c),
    };
    let cfg = pipeline_config(c)?;
    let opts = RunOptions { force: c.force };
    pipeline::with_workers(cfg.workers, || {
        let single = |f: fn(&PipelineConfig, RunOptions) -> Result<StageStatus>| {
            f(&cfg, opts).map(|s| report(stage, s)).map_err(|e| e.in_stage(stage))
        };
        match stage {
            "unseen" => single(pipeline::cmd_unseen),
            "align" => single(pipeline::cmd_align),
            "unproject" => single(pipeline::cmd_unproject),
            "eval" => single(pipeline::cmd_eval),
            _ => {
                for (name, status) in pipeline::cmd_pipeline(&cfg, opts)? {
                    report(name, status);
                }
                Ok(())
            }
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::new().filter_level(log::LevelFilter::Info).format_timestamp(None).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
