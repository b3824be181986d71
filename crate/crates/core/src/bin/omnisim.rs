use clap::{Parser, Subcommand};
use omnisim::scenario::{
    builtin_scenario, parse_config_file, run, write_outputs, ConfigError, ScenarioConfig,
    BUILTIN_NAMES,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(
    name = "omnisim",
    version,
    about = "Tilt-rotor hexacopter flight simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario, or several with --batch.
    Run(RunArgs),
    /// Print the names of the built-in scenarios.
    ListScenarios,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario config file; repeat with --batch to run several in parallel.
    #[arg(long)]
    config: Vec<PathBuf>,
    /// Built-in scenario to run when no config is given.
    #[arg(long, conflicts_with = "config")]
    scenario: Option<String>,
    /// Output directory for log.csv and metrics.txt.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated time, s.
    #[arg(long)]
    duration: Option<f64>,
    /// Physics step, s.
    #[arg(long)]
    dt_phys: Option<f64>,
    /// Control period, s.
    #[arg(long)]
    dt_ctrl: Option<f64>,
    /// Run every --config concurrently, writing into <out-dir>/<config stem>/.
    #[arg(long)]
    batch: bool,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

fn apply_overrides(config: &mut ScenarioConfig, args: &RunArgs) -> Result<(), ConfigError> {
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(d) = args.duration {
        config.duration = d;
    }
    if let Some(dt) = args.dt_phys {
        config.settings.dt_phys = dt;
    }
    if let Some(dt) = args.dt_ctrl {
        config.settings.dt_ctrl = dt;
    }
    config.validate()
}

fn load(path: Option<&Path>, args: &RunArgs) -> Result<ScenarioConfig, Failure> {
    let describe = |e: ConfigError| match path {
        Some(p) => Failure::Config(format!("{}: {e}", p.display())),
        None => Failure::Config(e.to_string()),
    };
    let mut config = match (path, &args.scenario) {
        (Some(p), _) => parse_config_file(p).map_err(describe)?,
        (None, Some(name)) => builtin_scenario(name).map_err(describe)?,
        (None, None) => ScenarioConfig {
            name: "hover".into(),
            ..builtin_scenario("hover").map_err(describe)?
        },
    };
    apply_overrides(&mut config, args).map_err(describe)?;
    Ok(config)
}

fn execute(config: &ScenarioConfig, out_dir: &Path) -> Result<(), Failure> {
    let csv = config
        .csv_path
        .clone()
        .unwrap_or_else(|| out_dir.join("log.csv"));
    let metrics = config
        .metrics_path
        .clone()
        .unwrap_or_else(|| out_dir.join("metrics.txt"));
    let output = run(config);
    write_outputs(&output.records, &output.metrics, &csv, &metrics)
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    match output.fault {
        Some(fault) => Err(Failure::Runtime(format!("{}: {fault}", config.name))),
        None => {
            println!(
                "{}: pos_rmse_m = {:.6}, att_rmse_rad = {:.6}, final_pos_err_m = {:.6}",
                config.name,
                output.metrics.pos_rmse_m,
                output.metrics.att_rmse_rad,
                output.metrics.final_pos_err_m
            );
            Ok(())
        }
    }
}

fn run_command(args: &RunArgs) -> Result<(), Failure> {
    if !args.batch {
        if args.config.len() > 1 {
            return Err(Failure::Config(
                "several --config files need --batch".into(),
            ));
        }
        let config = load(args.config.first().map(PathBuf::as_path), args)?;
        return execute(&config, &args.out_dir);
    }
    if args.config.is_empty() {
        return Err(Failure::Config(
            "--batch needs at least one --config".into(),
        ));
    }
    // parse everything up front so a bad file stops the batch before any run
    let jobs = args
        .config
        .iter()
        .map(|p| {
            let stem = p
                .file_stem()
                .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
            load(Some(p), args).map(|c| (c, args.out_dir.join(stem)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let results: Vec<Result<(), Failure>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(config, dir)| scope.spawn(move || execute(config, dir)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Failure::Runtime("worker panicked".into())))
            })
            .collect()
    });
    let mut worst: Option<Failure> = None;
    for failure in results.into_iter().filter_map(Result::err) {
        eprintln!("error: {}", failure.message());
        if worst.as_ref().is_none_or(|w| failure.code() > w.code()) {
            worst = Some(failure);
        }
    }
    worst.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OMNISIM_LOG_LEVEL", "warn"))
        .init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::ListScenarios => {
            for name in BUILTIN_NAMES {
                println!("{name}");
            }
            Ok(())
        }
        Command::Run(args) => run_command(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            if !(args_batch(&cli) && matches!(failure, Failure::Runtime(_))) {
                eprintln!("error: {}", failure.message());
            }
            ExitCode::from(failure.code())
        }
    }
}

fn args_batch(cli: &Cli) -> bool {
    matches!(&cli.command, Command::Run(a) if a.batch)
}
