use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ghrs::config::RunConfig;
use ghrs::stages::Stages;

#[derive(Parser)]
#[command(
    name = "ghrs",
    version,
    about = "Graph-based hybrid recommender on MovieLens"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed, overriding `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Build the user similarity graph.
    Graph,
    /// Graph centralities, categorization scheme and binary features.
    Features,
    /// Train the autoencoder on the features.
    TrainAe,
    /// Elbow and silhouette curves and the final clustering.
    Cluster,
    /// Cross-validated RMSE, precision and recall.
    Evaluate,
    /// RMSE on users whose ratings are all hidden.
    Coldstart,
    /// Cross-validation over the configured alphas.
    SweepAlpha,
    /// Autoencoder losses for every optimizer.
    SweepOptimizer,
    /// Print the effective configuration.
    PrintConfig,
}

fn run(cli: Cli) -> Result<String, Box<dyn std::error::Error>> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(o) = &cli.out {
        config.output.dir = o.clone();
    }
    config.validate()?;
    if let Command::PrintConfig = cli.command {
        return Ok(config.to_toml());
    }
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()?;
    }
    let out = config.output.dir.clone();
    let stages = Stages::new(config, out)?;
    Ok(match cli.command {
        Command::Graph => stages.graph()?,
        Command::Features => stages.features()?,
        Command::TrainAe => stages.train_ae()?,
        Command::Cluster => stages.cluster()?,
        Command::Evaluate => stages.evaluate()?,
        Command::Coldstart => stages.coldstart()?,
        Command::SweepAlpha => stages.sweep_alpha()?,
        Command::SweepOptimizer => stages.sweep_optimizer()?,
        Command::PrintConfig => unreachable!(),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
