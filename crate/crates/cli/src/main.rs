//! `attgrasp`: saliency, grasp detection, planning and evaluation from the
//! command line.
//!
//! Exit codes: 0 success, 2 no ROI or grasp point, 3 planning failed, 1 any
//! other error.

mod commands;
mod overlay;

use std::path::PathBuf;
use std::process::ExitCode;

use attgrasp::experiment::RunConfig;
use attgrasp::planner::HandKind;
use attgrasp::Error;
use clap::{Parser, Subcommand};

/// Attention-guided grasp detection and planning on synthetic scenes.
///
/// Every global option can also be set through an `ATTGRASP_*` environment
/// variable; command-line flags take precedence.
#[derive(Parser, Debug)]
#[command(name = "attgrasp", version)]
struct Cli {
    /// JSON run configuration: camera, pipeline parameters, hand and suite.
    #[arg(long, global = true, env = "ATTGRASP_CONFIG")]
    config: Option<PathBuf>,
    /// Seed for trial perturbations and the random baseline.
    #[arg(long, global = true, env = "ATTGRASP_SEED")]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, env = "ATTGRASP_OUT", default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Saliency map and ROIs of an RGB image.
    Saliency { image: PathBuf },
    /// Grasp type and point from PMAP probability maps.
    Detect {
        maps: PathBuf,
        /// RGB image to take ROIs from (and draw the overlay on).
        #[arg(long)]
        image: Option<PathBuf>,
        /// Explicit ROI rectangle `x,y,w,h`; overrides `--image` ROIs.
        #[arg(long, value_parser = parse_rect)]
        roi: Option<[usize; 4]>,
    },
    /// Full pipeline on a scene file: render, saliency, detection, planning.
    Plan {
        scene: PathBuf,
        #[arg(long, env = "ATTGRASP_HAND")]
        hand: Option<HandKind>,
    },
    /// Informed planner versus random baseline over the object suite.
    Eval {
        #[arg(long, env = "ATTGRASP_TRIALS")]
        trials: Option<usize>,
        #[arg(long, env = "ATTGRASP_HAND")]
        hand: Option<HandKind>,
    },
    /// Per-type IoU and confusion matrix of predicted maps against masks.
    Metrics { pred: PathBuf, gt: PathBuf },
    /// RGB, depth, synthetic probability maps and their generating masks.
    Render { scene: PathBuf },
}

fn parse_rect(s: &str) -> Result<[usize; 4], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, w, h] if w > 0 && h > 0 => Ok([x, y, w, h]),
        _ => Err("expected x,y,w,h with w, h > 0".into()),
    }
}

fn load_config(cli: &Cli) -> attgrasp::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> attgrasp::Result<()> {
    let mut cfg = load_config(&cli)?;
    std::fs::create_dir_all(&cli.out)?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Saliency { image } => commands::saliency(&cfg, out, &image),
        Command::Detect { maps, image, roi } => commands::detect(&cfg, out, &maps, image.as_deref(), roi),
        Command::Plan { scene, hand } => {
            if let Some(h) = hand {
                cfg.hand = h;
            }
            commands::plan(&cfg, out, &scene)
        }
        Command::Eval { trials, hand } => {
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(h) = hand {
                cfg.hand = h;
            }
            commands::eval(&cfg, out)
        }
        Command::Metrics { pred, gt } => commands::metrics(out, &pred, &gt),
        Command::Render { scene } => commands::render(&cfg, out, &scene),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NoRoi | Error::NoGraspPoint => 2,
        Error::PlanningFailed { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("attgrasp: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
