use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use germ_reconstruct::cli::{run, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "germ-reconstruct", version, about = "Reconstruction of coherent germs and related norm estimators")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Moments, telescoping and annihilation checks of the kernels.
    TweakCheck(Common),
    /// Coherence tables, m-sequences and norms of a germ.
    Coherence(Common),
    /// Reconstruct a germ and report series diagnostics and bounds.
    Reconstruct(Common),
    /// Young product of a distribution and a function.
    Young(Common),
    /// Besov norm by local means and by Taylor remainders.
    Besov(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; all cores by default.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::TweakCheck(a) => (Command::TweakCheck, a),
        Sub::Coherence(a) => (Command::Coherence, a),
        Sub::Reconstruct(a) => (Command::Reconstruct, a),
        Sub::Young(a) => (Command::Young, a),
        Sub::Besov(a) => (Command::Besov, a),
    };
    if let Some(jobs) = args.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = ExperimentConfig::load(&args.config).and_then(|mut config| {
        if let Some(seed) = args.seed {
            config.seed = seed;
        }
        run(command, &config, &args.out)
    });
    match outcome {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
