use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dibom::datagen::{gen_dataset_with_inputs, InputKind, IntrinsicSpec};
use dibom::RngSeed;
use dibom_cli::{run, CliError, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "dibom", version, about = "Train and analyse deep Ising Born machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model family on a synthetic dataset.
    Train(RunArgs),
    /// Train several model families on shared datasets.
    Compare(RunArgs),
    /// Fidelity-based expressibility sweep over circuit depth.
    Fbe(RunArgs),
    /// Loss over a two-parameter grid.
    Landscape(RunArgs),
    /// Conditional models on the teleportation task.
    Teleport(RunArgs),
    /// Label-corruption sweep.
    Corrupt(RunArgs),
    /// Local and global loss trajectories across qubit counts.
    Barren(RunArgs),
    /// Parameter counts per family.
    Params(RunArgs),
    /// Dataset utilities.
    Dataset {
        #[command(subcommand)]
        command: DatasetCommand,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Reduced FBE sample sizes.
    #[arg(long)]
    fast: bool,
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Generate a dataset and write it as JSON.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Intrinsic {
    SingleQubitOnQ2,
    GczLayer,
    SingleQubitTimesGcz,
    ProductThenGcz,
    DibomShape,
    AlternatingStack,
    HaarRandom,
    Teleportation,
}

#[derive(Clone, Copy, ValueEnum)]
enum Inputs {
    Haar,
    ProductForm,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    intrinsic: Intrinsic,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    count: usize,
    /// Depth for the circuit-shaped intrinsic unitaries.
    #[arg(long, default_value_t = 3)]
    layers: usize,
    #[arg(long, value_enum, default_value_t = Inputs::Haar)]
    inputs: Inputs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn expected_kind(command: &Command) -> &'static str {
    match command {
        Command::Train(_) => "train",
        Command::Compare(_) => "compare",
        Command::Fbe(_) => "fbe",
        Command::Landscape(_) => "landscape",
        Command::Teleport(_) => "teleport",
        Command::Corrupt(_) => "corruption-sweep",
        Command::Barren(_) => "barren",
        Command::Params(_) => "params-table",
        Command::Dataset { .. } => "dataset",
    }
}

fn run_experiment(kind: &str, args: &RunArgs) -> Result<(), CliError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if config.experiment.kind() != kind {
        return Err(CliError::Config(format!(
            "config describes a `{}` experiment, not `{kind}`",
            config.experiment.kind()
        )));
    }
    Overrides {
        seed: args.seed,
        max_iters: args.max_iters,
        fast: args.fast,
    }
    .apply(&mut config);
    let out = args.out_dir.clone().unwrap_or_else(|| config.out_dir.clone());
    let job = || run(&config, &out).map(|_| ());
    match args.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(job),
        None => job(),
    }?;
    println!("wrote {}", out.display());
    Ok(())
}

fn generate(args: &GenArgs) -> Result<(), CliError> {
    let spec = match args.intrinsic {
        Intrinsic::SingleQubitOnQ2 => IntrinsicSpec::SingleQubitOnQ2,
        Intrinsic::GczLayer => IntrinsicSpec::GczLayer,
        Intrinsic::SingleQubitTimesGcz => IntrinsicSpec::SingleQubitTimesGcz,
        Intrinsic::ProductThenGcz => IntrinsicSpec::ProductThenGcz,
        Intrinsic::DibomShape => IntrinsicSpec::DibomShape {
            layers: args.layers,
        },
        Intrinsic::AlternatingStack => IntrinsicSpec::AlternatingStack {
            layers: args.layers,
        },
        Intrinsic::HaarRandom => IntrinsicSpec::HaarRandom,
        Intrinsic::Teleportation => IntrinsicSpec::TeleportationTask,
    };
    let inputs = match args.inputs {
        Inputs::Haar => InputKind::Haar,
        Inputs::ProductForm => InputKind::ProductForm,
    };
    let data = gen_dataset_with_inputs(spec, args.n, args.count, inputs, RngSeed(args.seed))?;
    dibom_cli::output::write_atomic(&args.out, data.to_json()?.as_bytes())?;
    println!("wrote {} samples to {}", data.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let kind = expected_kind(&cli.command);
    let result = match &cli.command {
        Command::Dataset {
            command: DatasetCommand::Gen(args),
        } => generate(args),
        Command::Train(a)
        | Command::Compare(a)
        | Command::Fbe(a)
        | Command::Landscape(a)
        | Command::Teleport(a)
        | Command::Corrupt(a)
        | Command::Barren(a)
        | Command::Params(a) => run_experiment(kind, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
