use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use panoqa_cli::commands::{self, JudgeMode};
use panoqa_cli::CliResult;
use panoqa_core::geom::Sampling;
use panoqa_core::grpo::StageKind;

/// Geometry-grounded panoramic VQA pipeline: cubemap stitching, 3D scene
/// analytics, QA generation, routed reward grading, deterministic judging,
/// and GRPO advantage/curriculum reports.
#[derive(Parser)]
#[command(name = "panoqa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplingArg {
    Nearest,
    Bilinear,
}

impl From<SamplingArg> for Sampling {
    fn from(arg: SamplingArg) -> Sampling {
        match arg {
            SamplingArg::Nearest => Sampling::Nearest,
            SamplingArg::Bilinear => Sampling::Bilinear,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum JudgeModeArg {
    Deterministic,
    EmitPrompts,
    IngestReplies,
}

impl From<JudgeModeArg> for JudgeMode {
    fn from(arg: JudgeModeArg) -> JudgeMode {
        match arg {
            JudgeModeArg::Deterministic => JudgeMode::Deterministic,
            JudgeModeArg::EmitPrompts => JudgeMode::EmitPrompts,
            JudgeModeArg::IngestReplies => JudgeMode::IngestReplies,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Structured,
    Balanced,
}

impl From<StageArg> for StageKind {
    fn from(arg: StageArg) -> StageKind {
        match arg {
            StageArg::Structured => StageKind::Structured,
            StageArg::Balanced => StageKind::Balanced,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Stitch six cubemap faces (front/back/left/right/top/bottom .png)
    /// into an ERP panorama
    Stitch {
        /// Directory holding the six face images
        #[arg(long)]
        faces: PathBuf,
        #[arg(long, default_value_t = 1024)]
        width: u32,
        #[arg(long, default_value_t = 512)]
        height: u32,
        /// Output ERP PNG path
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "bilinear")]
        sampling: SamplingArg,
    },
    /// Analyze one scene bundle and print per-object 3D properties
    Analyze {
        /// Scene bundle directory
        #[arg(long)]
        scene: PathBuf,
        /// Pipeline config (defaults apply when omitted)
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Generate the QA dataset (JSONL + stats sidecar) from the configured
    /// scene roots
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Dataset output path (defaults to <output_root>/dataset.jsonl)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print category/type shares, unique answers, answer length, and the
    /// yes/no ratio of a dataset
    Stats {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Grade model responses against a dataset with the routed reward
    Grade {
        #[arg(long)]
        dataset: PathBuf,
        /// JSONL of {record_id, response_text}
        #[arg(long)]
        responses: PathBuf,
        /// Output JSONL of reward breakdowns
        #[arg(long)]
        out: PathBuf,
    },
    /// Score responses with the 0-10 rubric, emit judge transcripts, or
    /// ingest external judge replies
    Judge {
        #[arg(long)]
        dataset: PathBuf,
        /// JSONL of {record_id, response_text} (deterministic/emit-prompts)
        #[arg(long)]
        responses: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: JudgeModeArg,
        /// JSONL of {record_id, reply} (ingest-replies)
        #[arg(long)]
        replies: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute group-relative advantages and clipped-surrogate/KL
    /// objectives for rollout groups
    Advantage {
        /// JSONL of rollout groups
        #[arg(long)]
        rollouts: PathBuf,
        /// Pipeline config providing the [grpo] section
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit deterministic curriculum batch manifests for a training stage
    Curriculum {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        stage: StageArg,
        #[arg(long, default_value_t = 1)]
        epochs: usize,
        #[arg(long, default_value_t = 8)]
        batch_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic toy scene corpus (for demos and tests)
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 6)]
        scenes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 512)]
        width: u32,
        #[arg(long, default_value_t = 256)]
        height: u32,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Stitch {
            faces,
            width,
            height,
            out,
            sampling,
        } => commands::cmd_stitch(&faces, width, height, &out, sampling.into()),
        Command::Analyze { scene, config } => commands::cmd_analyze(&scene, config.as_deref()),
        Command::Generate { config, out } => commands::cmd_generate(&config, out.as_deref()),
        Command::Stats { dataset } => commands::cmd_stats(&dataset),
        Command::Grade {
            dataset,
            responses,
            out,
        } => commands::cmd_grade(&dataset, &responses, &out),
        Command::Judge {
            dataset,
            responses,
            mode,
            replies,
            out,
        } => commands::cmd_judge(
            &dataset,
            responses.as_deref(),
            mode.into(),
            replies.as_deref(),
            &out,
        ),
        Command::Advantage {
            rollouts,
            config,
            out,
        } => commands::cmd_advantage(&rollouts, config.as_deref(), &out),
        Command::Curriculum {
            dataset,
            stage,
            epochs,
            batch_size,
            seed,
            out,
        } => commands::cmd_curriculum(&dataset, stage.into(), epochs, batch_size, seed, &out),
        Command::Synth {
            out,
            scenes,
            seed,
            width,
            height,
        } => commands::cmd_synth(&out, scenes, seed, width, height),
    }
}

fn main() {
    // Die quietly when a downstream pipe (head, grep) closes stdout.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
