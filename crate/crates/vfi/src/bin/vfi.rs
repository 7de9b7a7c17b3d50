use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vfi::commands::{self, RunOptions};
use vfi::CliError;
use vfi_core::pipeline::PipelineMethod;

/// Depth-gated vector flow imaging on simulated plane-wave ultrasound data.
#[derive(Parser)]
#[command(name = "vfi", version)]
struct Cli {
    /// Worker threads for the data-parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Desk,
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Directional,
    Stdmr,
    Fusion,
}

impl From<Method> for PipelineMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Directional => PipelineMethod::Directional,
            Method::Stdmr => PipelineMethod::Stdmr,
            Method::Fusion => PipelineMethod::Fusion,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Flat TOML configuration; overrides --preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// two_vessel, shallow_only or deep_only.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ensembles: Option<usize>,
    /// Frames per ensemble.
    #[arg(long)]
    frames: Option<usize>,
    /// Receive steering angles in degrees, e.g. 6,9,12,15.
    #[arg(long, value_delimiter = ',')]
    angles: Option<Vec<f64>>,
}

impl From<RunArgs> for RunOptions {
    fn from(a: RunArgs) -> Self {
        RunOptions {
            config: a.config,
            preset: a.preset.map(|p| match p {
                Preset::Desk => "desk".into(),
                Preset::Paper => "paper".into(),
            }),
            scenario: a.scenario,
            seed: a.seed,
            ensembles: a.ensembles,
            frames: a.frames,
            angles: a.angles,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize channel data for every ensemble.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write the initial scatterer positions of each ensemble as CSV.
        #[arg(long)]
        dump_phantom: bool,
    },
    /// Beamform, estimate and score channel data written by `simulate`.
    Estimate {
        #[command(flatten)]
        run: RunArgs,
        /// Directory written by `simulate`.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "fusion")]
        method: Method,
        /// Score directional-only, triangulation-only and fusion.
        #[arg(long)]
        compare_all: bool,
    },
    /// Comparison table and profile CSV from metrics files.
    Report {
        metrics: Vec<PathBuf>,
        /// Directory for table.txt and profile.csv (default: next to the first file).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// simulate, estimate with every method, then report.
    Reproduce {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate { run, out, dump_phantom } => {
            let m = commands::simulate(&run.into(), &out, dump_phantom)?;
            println!("wrote {} files to {}", m.outputs.len(), out.display());
        }
        Command::Estimate {
            run,
            input,
            out,
            method,
            compare_all,
        } => {
            let methods: Vec<PipelineMethod> = if compare_all {
                PipelineMethod::ALL.to_vec()
            } else {
                vec![method.into()]
            };
            commands::estimate(&run.into(), &input, &out, &methods)?;
            let r = commands::report(&[out.join(commands::METRICS_FILE)], Some(&out))?;
            print!("{}", r.table);
        }
        Command::Report { metrics, out } => {
            let r = commands::report(&metrics, out.as_deref())?;
            print!("{}", r.table);
        }
        Command::Reproduce { run, out } => {
            let r = commands::reproduce(&run.into(), &out)?;
            print!("{}", r.table);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vfi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
