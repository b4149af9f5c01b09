use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use policy_gnn::experiment::{self, RunConfig};
use policy_gnn::graph::HopMode;
use policy_gnn::Error;

#[global_allocator]
static ALLOC: mimalloc::MiMalloc = mimalloc::MiMalloc;

/// Train and evaluate per-node depth policies for GCNs.
#[derive(Parser, Debug)]
#[command(name = "policy-gnn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Learned depth policy, one run per seed.
    Train(RunArgs),
    /// Fixed-depth GCN baseline.
    FixedGcn {
        #[command(flatten)]
        run: RunArgs,
        /// Depth for every node; defaults to `fixed_depth`.
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Uniformly random depths without agent updates.
    Random(RunArgs),
    /// Per-node correctness across repeated fixed-depth trainings.
    Probe(RunArgs),
    /// Render plots and a summary table for one run directory.
    Report {
        run_dir: PathBuf,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML file, or JSON when the extension is `.json`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated depths, e.g. `2,3,4,5`.
    #[arg(long, value_delimiter = ',')]
    actions: Option<Vec<usize>>,
    /// Comma-separated Q-network hidden widths.
    #[arg(long, value_delimiter = ',')]
    dqn_hidden: Option<Vec<usize>>,
    #[command(flatten)]
    overrides: Overrides,
}

fn parse_hop_mode(s: &str) -> Result<HopMode, String> {
    match s {
        "within" => Ok(HopMode::Within),
        "exact" => Ok(HopMode::Exact),
        _ => Err(format!("expected `within` or `exact`, got `{s}`")),
    }
}

macro_rules! overrides {
    ($($(#[$meta:meta])* $field:ident: $ty:ty),* $(,)?) => {
        /// Per-field overrides applied on top of the config file.
        #[derive(Args, Debug, Default)]
        struct Overrides {
            $($(#[$meta])* #[arg(long)] $field: Option<$ty>,)*
        }

        impl Overrides {
            fn apply(self, c: &mut RunConfig) {
                $(if let Some(v) = self.$field { c.$field = v.into(); })*
            }
        }
    };
}

overrides! {
    dataset: PathBuf,
    seed: u64,
    seeds: usize,
    max_depth: usize,
    slots: usize,
    gnn_batch_size: usize,
    gnn_learning_rate: f32,
    weight_decay: f32,
    dropout: f32,
    hidden_dim: usize,
    row_normalize_features: bool,
    memory_size: usize,
    dqn_batch_size: usize,
    gamma: f32,
    target_update_period: u64,
    epsilon_start: f64,
    epsilon_end: f64,
    epsilon_every: u64,
    epsilon_decay_fraction: f64,
    dqn_learning_rate: f32,
    normalizer_window: usize,
    normalizer_clip: f32,
    reward_window: usize,
    reward_strength: f64,
    iterations: usize,
    dqn_steps_per_iteration: usize,
    #[arg(value_parser = parse_hop_mode)]
    hop_mode: HopMode,
    evaluate_every_step: bool,
    fixed_depth: usize,
    fixed_epochs: usize,
    probe_nodes: usize,
    probe_runs: usize,
    probe_epochs: usize,
    parallel: bool,
}

fn build_config(args: RunArgs) -> Result<(RunConfig, Option<PathBuf>), Error> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    args.overrides.apply(&mut config);
    if let Some(a) = args.actions {
        config.actions = policy_gnn::env::ActionSet::new(a)?;
    }
    if let Some(h) = args.dqn_hidden {
        config.dqn_hidden = h;
    }
    config.validate()?;
    Ok((config, args.out))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Load { .. } | Error::Validation(_) => 3,
        _ => 1,
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    match serde_json::to_string_pretty(value) {
        Ok(s) => println!("{s}"),
        Err(e) => log::warn!("could not print summary: {e}"),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let default_out = |name: &str| PathBuf::from("runs").join(name);
    match cli.command {
        Command::Train(args) => {
            let (config, out) = build_config(args)?;
            let out = out.unwrap_or_else(|| default_out("train"));
            print_json(&experiment::cmd_train(&config, &out)?);
        }
        Command::Random(args) => {
            let (config, out) = build_config(args)?;
            let out = out.unwrap_or_else(|| default_out("random"));
            print_json(&experiment::cmd_random(&config, &out)?);
        }
        Command::FixedGcn { run, depth } => {
            let (mut config, out) = build_config(run)?;
            if let Some(d) = depth {
                config.fixed_depth = d;
                config.validate()?;
            }
            let out = out.unwrap_or_else(|| default_out("fixed-gcn"));
            print_json(&experiment::cmd_fixed_gcn(&config, &out)?);
        }
        Command::Probe(args) => {
            let (config, out) = build_config(args)?;
            let out = out.unwrap_or_else(|| default_out("probe"));
            let table = experiment::cmd_probe(&config, &out)?;
            for (i, node) in table.nodes.iter().enumerate() {
                println!("node {node}: best depth {}", table.best_depth(i));
            }
        }
        Command::Report { run_dir } => {
            let files = experiment::cmd_report(&run_dir)?;
            println!("{}", files.learning_curve.display());
            println!("{}", files.layer_distribution.display());
            println!("{}", files.summary.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
