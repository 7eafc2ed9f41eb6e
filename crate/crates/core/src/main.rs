use bipartite_holonomy::cli::{parse_scenario, run, to_json, CliError, Command, Scenario};
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "holonomy",
    version,
    about = "Correlation-induced holonomies of bipartite states"
)]
struct Args {
    #[command(subcommand)]
    verb: Verb,

    /// Scenario JSON file.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the scenario n_steps.
    #[arg(long, global = true)]
    steps: Option<usize>,

    /// Adds wall-clock time to the report (breaks byte-for-byte reproducibility).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Coincidence intensity of a single (U, V) pair, in both forms.
    Intensity,
    /// Parallel V for a given U.
    Maximize,
    /// Iterated parallel transport along a path.
    Transport,
    /// Holonomies of closed loops and their commutators.
    Holonomy,
    /// Quaternionic rule against the interferometric maximizer.
    LevayCompare,
    /// Runs the acceptance suite.
    Selftest,
}

impl Verb {
    fn command(self) -> Command {
        match self {
            Verb::Intensity => Command::Intensity,
            Verb::Maximize => Command::Maximize,
            Verb::Transport => Command::Transport,
            Verb::Holonomy => Command::Holonomy,
            Verb::LevayCompare => Command::LevayCompare,
            Verb::Selftest => Command::Selftest,
        }
    }
}

fn load(args: &Args, command: Command) -> Result<Scenario, CliError> {
    let mut scenario = match &args.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
            parse_scenario(&text)?
        }
        None if command == Command::Selftest => Scenario::with_seed(0),
        None => {
            return Err(CliError::schema(
                "scenario",
                "--scenario is required for this command",
            ))
        }
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(steps) = args.steps {
        scenario.n_steps = Some(steps);
    }
    Ok(scenario)
}

fn write(path: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", p.display()))),
        None => print_stdout(text),
    }
}

/// A closed pipe (`holonomy ... | head`) is not an error.
fn print_stdout(text: &str) -> Result<(), CliError> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::io(format!("cannot write stdout: {e}")))
        }
        _ => Ok(()),
    }
}

fn execute(args: &Args) -> Result<bool, CliError> {
    let command = args.verb.command();
    let scenario = load(args, command)?;
    log::info!("running {} with seed {}", command.name(), scenario.seed);
    let start = Instant::now();
    let mut report = run(command, &scenario)?;
    if args.timing {
        report.wall_clock_seconds = Some(start.elapsed().as_secs_f64());
    }
    write(&args.out, &to_json(&report))?;
    if let (Some(csv_path), Some(csv)) = (&scenario.outputs.csv, report.csv()) {
        write(&Some(PathBuf::from(csv_path)), &csv)?;
    }
    if let Some(selftest) = &report.selftest {
        for c in &selftest.criteria {
            eprintln!(
                "criterion {:>2} {}  {}  [{}]",
                c.id,
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        return Ok(selftest.all_passed());
    }
    Ok(true)
}

fn main() -> ExitCode {
    let args = Args::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HOLONOMY_LOG_LEVEL", "warn"))
        .format_timestamp(None)
        .init();
    match execute(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            log::error!("{e}");
            let _ = print_stdout(&e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
