use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use gber::checkpoint::Checkpoint;
use gber::config::parse_config;
use gber::maze::MazeSpec;
use gber::replay::StrategyRatios;
use gber::trainer::{self, stream_rng, Stream};

#[derive(Parser)]
#[command(name = "gber", version, about = "Goal-conditioned DDPG with relabeled replay on 2D point mazes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run and write progress.csv and checkpoint.json.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to `<output.dir>/<run_id>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint greedily on a maze.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train every strategy with a shared set of seeds and aggregate.
    Suite {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// Ratio strings, comma or space separated. Defaults to the config's strategy.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        strategies: Vec<StrategyRatios>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Plot success curves from run or aggregate CSVs into an SVG.
    Plot {
        /// Glob of input CSV files.
        #[arg(long = "in")]
        input: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a maze as ASCII.
    MazeShow {
        #[arg(long)]
        env: String,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config, seed, out } => {
            let mut cfg = parse_config(&config)?;
            if let Some(s) = seed {
                cfg.train.seed = s;
            }
            let out = out.unwrap_or_else(|| cfg.output.dir.join(cfg.run_id()));
            let art = trainer::train(&cfg, &out)?;
            let last = art.rows.last().context("run produced no evaluation rows")?;
            println!(
                "{}: final success {:.2} at step {} -> {}",
                cfg.run_id(),
                last.success_rate,
                last.timestep,
                out.display()
            );
        }
        Command::Eval { checkpoint, env, episodes, horizon, seed } => {
            if episodes == 0 {
                bail!("--episodes must be at least 1");
            }
            let ck = Checkpoint::load(&checkpoint).with_context(|| format!("loading {}", checkpoint.display()))?;
            let agent = ck.to_agent()?;
            let maze = load_env(&env, ck.config.env.success_radius)?;
            let horizon = horizon.unwrap_or(ck.config.train.horizon);
            let mut rng = stream_rng(seed, Stream::Eval);
            let s = trainer::evaluate(&maze, &agent, episodes, horizon, &mut rng);
            println!("success_rate {:.4} mean_return {:.4} over {episodes} episodes", s.success_rate, s.mean_return);
        }
        Command::Suite { config, seeds, strategies, out, jobs } => {
            let base = parse_config(&config)?;
            let strategies = if strategies.is_empty() { vec![base.strategy.ratios] } else { strategies };
            let out = out.unwrap_or_else(|| base.output.dir.clone());
            let configs = trainer::suite_configs(&base, &strategies, seeds);
            let report = trainer::run_suite(&configs, Some(&out), jobs)?;
            let failed = report.runs.iter().filter(|r| r.result.is_err()).count();
            for r in &report.runs {
                if let Err(e) = &r.result {
                    eprintln!("{} failed: {e}", r.config.run_id());
                }
            }
            println!(
                "{} runs, {} failed; aggregate at {}",
                report.runs.len(),
                failed,
                report.aggregate_path.as_deref().map(Path::display).map(|d| d.to_string()).unwrap_or_default()
            );
            if failed == report.runs.len() {
                bail!("every run failed");
            }
        }
        Command::Plot { input, out } => {
            let n = gber::plot::plot_glob(&input, &out)?;
            println!("plotted {n} file(s) to {}", out.display());
        }
        Command::MazeShow { env } => {
            let maze = load_env(&env, gber::maze::DEFAULT_SUCCESS_RADIUS)?;
            print!("{}", maze.render());
        }
    }
    Ok(())
}

fn load_env(name: &str, radius: f64) -> Result<MazeSpec> {
    let env = gber::config::EnvConfig { name: name.to_string(), success_radius: radius };
    env.load().map_err(anyhow::Error::msg).with_context(|| format!("unknown or invalid maze `{name}`"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GBER_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
