use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use predprey::config::RunConfig;
use predprey::run::{self, EvolveOptions, RunDir};
use predprey::{tournament, trajectory, ArenaConfig};

mod serve;

/// Environment variable that sets the worker thread count when `--jobs` is
/// absent.
const JOBS_ENV: &str = "PREDPREY_JOBS";

#[derive(Parser)]
#[command(name = "predprey", version, about = "Predator-prey coevolution arena")]
struct Cli {
    /// Worker threads for evaluation (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve predators and prey, writing a run directory.
    Evolve(EvolveArgs),
    /// Play every generation's best trio against every generation's best prey.
    Tournament(TournamentArgs),
    /// Validate a trajectory file and print its outcome.
    Replay(ReplayArgs),
    /// Serve live human-vs-controller trials over WebSocket.
    Serve(serve::ServeArgs),
}

#[derive(Args)]
struct EvolveArgs {
    /// TOML config file.
    #[arg(long, conflicts_with = "profile")]
    config: Option<PathBuf>,
    /// Built-in profile: default or smoke.
    #[arg(long)]
    profile: Option<String>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Continue an interrupted run.
    #[arg(long)]
    resume: bool,
    /// Stop after this many rounds; the run stays resumable.
    #[arg(long)]
    max_rounds: Option<usize>,
}

#[derive(Args)]
struct TournamentArgs {
    /// Run directory.
    #[arg(long)]
    run: PathBuf,
    /// Episodes per cell.
    #[arg(long, default_value_t = 3)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (default: <run>/tournament).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also export trajectories of one cell, as PREDATOR_GEN:PREY_GEN.
    #[arg(long, value_parser = parse_cell)]
    export: Option<(usize, usize)>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Trajectory file.
    path: PathBuf,
    /// Take arena settings from this run instead of the defaults.
    #[arg(long)]
    run: Option<PathBuf>,
}

fn parse_cell(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected PREDATOR_GEN:PREY_GEN")?;
    Ok((
        a.parse().map_err(|_| format!("bad generation {a:?}"))?,
        b.parse().map_err(|_| format!("bad generation {b:?}"))?,
    ))
}

#[derive(Debug)]
pub enum CliError {
    Core(predprey::Error),
    Usage(String),
    PortInUse(String),
}

impl CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Usage(_) => "E_USAGE",
            CliError::PortInUse(_) => "E_PORT_IN_USE",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => f.write_str(m),
            CliError::PortInUse(addr) => write!(f, "address {addr} is already in use"),
        }
    }
}

impl From<predprey::Error> for CliError {
    fn from(e: predprey::Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn configure_threads(jobs: Option<usize>) -> CliResult<()> {
    let jobs = match jobs {
        Some(j) => Some(j),
        None => match std::env::var(JOBS_ENV) {
            Ok(v) => Some(v.trim().parse().map_err(|_| CliError::Usage(format!("{JOBS_ENV}={v:?} is not a number")))?),
            Err(_) => None,
        },
    };
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn evolve(args: EvolveArgs) -> CliResult<()> {
    let mut config = match (&args.config, &args.profile) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(name)) => {
            RunConfig::profile(name).ok_or_else(|| CliError::Usage(format!("unknown profile {name:?}")))?
        }
        // resuming without a config reuses the run's own snapshot
        (None, None) if args.resume => {
            let out = args.out.as_ref().ok_or_else(|| CliError::Usage("--resume needs --config or --out".into()))?;
            RunDir::new(out).read_config()?
        }
        (None, None) => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.run.seed = seed;
    }
    if let Some(out) = args.out {
        config.run.output_dir = out;
    }
    let manifest = run::evolve(
        &config,
        EvolveOptions {
            resume: args.resume,
            max_rounds: args.max_rounds,
        },
    )?;
    println!(
        "run {}: {}/{} generations{}",
        config.run.output_dir.display(),
        manifest.generations_completed,
        manifest.total_generations,
        if manifest.complete { ", complete" } else { "" }
    );
    Ok(())
}

fn tournament(args: TournamentArgs) -> CliResult<()> {
    let dir = RunDir::new(&args.run);
    let out = args.out.unwrap_or_else(|| args.run.join("tournament"));
    let matrix = tournament::master_tournament(&dir, args.episodes, args.seed)?;
    let scores = tournament::write_outputs(&matrix, &out)?;
    print!("{}", tournament::summary(&matrix, &scores));
    if let Some((i, j)) = args.export {
        let target = out.join(format!("trajectories_pred{i}_prey{j}"));
        let eps = tournament::export_trajectories(i, j, &dir, args.episodes, args.seed, &target)?;
        println!("exported {} trajectories to {}", eps.len(), target.display());
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn arena_for(run: Option<&Path>) -> CliResult<ArenaConfig> {
    Ok(match run {
        Some(r) => RunDir::new(r).read_config()?.arena,
        None => ArenaConfig::default(),
    })
}

fn replay(args: ReplayArgs) -> CliResult<()> {
    let arena = arena_for(args.run.as_deref())?;
    let summary = trajectory::replay_file(&args.path, &arena)?;
    println!("{summary}");
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads(cli.jobs)?;
    match cli.command {
        Command::Evolve(a) => evolve(a),
        Command::Tournament(a) => tournament(a),
        Command::Replay(a) => replay(a),
        Command::Serve(a) => serve::serve(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
            eprintln!("error[E_USAGE]: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {message}", e.code());
            ExitCode::FAILURE
        }
    }
}
