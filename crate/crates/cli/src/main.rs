use std::path::PathBuf;
use std::process::ExitCode;

use cenn::cost::CpuFigures;
use cenn_cli::io::FrameRange;
use cenn_cli::{commands, CliResult, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cenn", version, about = "CeNN co-processor simulator, tracker and cost model")]
struct Cli {
    /// Run configuration JSON; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Range {
    /// Index of the first frame to use (0-based, in sorted order).
    #[arg(long, default_value_t = 0)]
    first: usize,
    /// Number of frames to use; defaults to all remaining.
    #[arg(long)]
    count: Option<usize>,
}

impl From<Range> for FrameRange {
    fn from(r: Range) -> Self {
        FrameRange { first: r.first, count: r.count }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic sequence (frames + groundtruth.txt).
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on the first frame and its ground-truth box.
    Train {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        range: Range,
    },
    /// Track a sequence with a trained model.
    Track {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Take the initial box from this ground-truth file instead of the model.
        #[arg(long)]
        gt: Option<PathBuf>,
        /// Directory for per-frame location masks.
        #[arg(long)]
        masks: Option<PathBuf>,
        #[command(flatten)]
        range: Range,
    },
    /// Success curve and AUC of a results CSV against ground truth.
    Score {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Where to write the 101-point success curve CSV.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Time/energy report for a CeNN pipeline.
    Cost {
        /// Pipeline JSON; defaults to the built-in 14-step tracking pipeline.
        #[arg(long)]
        pipeline: Option<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// CPU baseline `ENERGY_J,DELAY_S` for the energy-delay ratio.
        #[arg(long, value_parser = commands::parse_cpu)]
        cpu: Option<CpuFigures>,
    },
    /// Print the default configuration JSON.
    Defaults,
    /// Print the built-in pipeline JSON.
    Pipeline,
}

fn run(cli: Cli) -> CliResult<String> {
    let cfg = || RunConfig::load(cli.config.as_deref());
    match cli.command {
        Command::Synth { out } => commands::synth(&cfg()?, &out),
        Command::Train { frames, gt, out, range } => commands::train(&cfg()?, &frames, &gt, range.into(), &out),
        Command::Track {
            frames,
            model,
            out,
            gt,
            masks,
            range,
        } => commands::track(&cfg()?, &frames, &model, gt.as_deref(), range.into(), &out, masks.as_deref()),
        Command::Score { results, gt, curve } => commands::score(&results, &gt, curve.as_deref()),
        Command::Cost { pipeline, csv, cpu } => commands::cost(&cfg()?, pipeline.as_deref(), csv.as_deref(), cpu),
        Command::Defaults => Ok(commands::defaults()),
        Command::Pipeline => Ok(commands::default_pipeline()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
