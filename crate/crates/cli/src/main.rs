use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use knollset::experiments::{
    run_build_dict, run_compose_demo, run_ct_recon, run_ct_sim, run_segmentation, ExperimentConfig, RunSummary,
};

#[derive(Parser)]
#[command(name = "knollset", version, about = "Sparse shape composition experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the configured dictionary and write it as dictionary.txt
    BuildDict(RunArgs),
    /// Fit dictionary knolls to a known target mask
    ComposeDemo(RunArgs),
    /// Segment a (partially observed) image
    Segment(RunArgs),
    /// Simulate transmission counts and the FBP baseline
    CtSim(RunArgs),
    /// Reconstruct attenuation from counts
    CtRecon(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> knollset::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = std::path::absolute(out)?;
        }
        Ok(cfg)
    }
}

type Runner = fn(&ExperimentConfig) -> knollset::Result<RunSummary>;

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs, Runner) {
        match self {
            Command::BuildDict(a) => ("build-dict", a, run_build_dict),
            Command::ComposeDemo(a) => ("compose-demo", a, run_compose_demo),
            Command::Segment(a) => ("segment", a, run_segmentation),
            Command::CtSim(a) => ("ct-sim", a, run_ct_sim),
            Command::CtRecon(a) => ("ct-recon", a, run_ct_recon),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args, run) = cli.command.parts();
    match args.load().and_then(|cfg| run(&cfg)) {
        Ok(s) => {
            println!(
                "{name} seed={} status={} energy={:.6e} iterations={} active={} time={:.2}s",
                s.seed,
                s.status,
                s.final_energy,
                s.iterations,
                s.active_set,
                s.wall_time_s
            );
            for (name, value) in &s.metrics {
                println!("  {name} = {value:.6}");
            }
            if let Some(path) = s.artifacts.get("summary") {
                println!("  summary: {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("knollset {name}: {e}");
            ExitCode::FAILURE
        }
    }
}
