//! `tiqf`: simulated active tactile pose estimation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tiqf_core::sim::fixtures::export_fixtures;
use tiqf_core::sim::{run_sweep, summarize, write_csv, write_summary, CriterionSpec, ExperimentConfig, Model};
use tiqf_core::Error;

#[derive(Parser)]
#[command(name = "tiqf", version, about = "Active tactile pose estimation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One run per configured criterion.
    Run(RunArgs),
    /// Repeated runs per criterion with per-touch statistics.
    Sweep {
        #[command(flatten)]
        common: RunArgs,
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Parse and check a config file, then print it with defaults filled in.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the bundled meshes to a directory.
    ExportFixtures {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; defaults are used for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// kl, renyi, fisher, bhattacharyya, wasserstein, random or all.
    #[arg(long)]
    criterion: Option<String>,
    /// Order of the Rényi divergence.
    #[arg(long)]
    alpha: Option<f64>,
    /// Directory receiving the CSV and summary files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig, Error> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(c) = &self.criterion {
            config.criterion = CriterionSpec::One(c.clone());
        }
        if let Some(alpha) = self.alpha {
            config.alpha = alpha;
        }
        Ok(config)
    }
}

fn sweep(config: ExperimentConfig, out: &Path) -> Result<(), Error> {
    config.validate()?;
    let model = Model::from_config(&config)?;
    let result = run_sweep(&config, &model)?;
    std::fs::create_dir_all(out)?;
    let (csv, json) = (out.join(&config.csv_path), out.join(&config.summary_path));
    write_csv(&result.records, &csv)?;
    let summary = summarize(&config, &result);
    write_summary(&summary, &json)?;

    let probe = 15.min(config.max_touches);
    for c in &summary.criteria {
        let at = |t: usize| c.touches.iter().find(|s| s.touch == t);
        let last = c.touches.last();
        if let (Some(mid), Some(last)) = (at(probe), last) {
            println!(
                "{:<14} runs {:>2}  median ADI @{probe}: {:.4} m  @{}: {:.4} m",
                c.criterion, mid.runs, mid.adi_m.q50, last.touch, last.adi_m.q50
            );
        }
    }
    for f in &result.failures {
        eprintln!("warning: {} run {} failed: {}", f.criterion, f.run, f.message);
    }
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(args) => {
            let mut config = args.config()?;
            config.runs = 1;
            sweep(config, &args.out)
        }
        Command::Sweep { common, runs } => {
            let mut config = common.config()?;
            if let Some(r) = runs {
                config.runs = r;
            }
            sweep(config, &common.out)
        }
        Command::ValidateConfig { config } => {
            let c = ExperimentConfig::load(&config)?;
            println!("{}", c.to_json());
            Ok(())
        }
        Command::ExportFixtures { out } => {
            for path in export_fixtures(&out)? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidAlpha(_) | Error::RenyiAlphaOne => 1,
        Error::Io(_) | Error::Mesh(_) | Error::Csv(_) | Error::Json(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    // usage errors count as config errors; help and version exit cleanly
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
