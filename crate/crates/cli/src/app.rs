use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::csv;
use crate::report::{self, RunReport};
use crate::scenario::{self, Scenario, ScenarioBody};

pub const EXIT_OK: u8 = 0;
pub const EXIT_SCENARIO: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "exsim",
    version,
    about = "Simulate exchanges under motivation and power imbalances"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario file and write its report.
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Replace the scenario's seed (society scenarios only).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Suppress the summary line on the diagnostic stream.
    #[arg(long)]
    pub quiet: bool,
}

/// Applies `--seed`; returns false when the scenario has no seed to replace.
pub fn override_seed(scenario: &mut Scenario, seed: u64) -> bool {
    match &mut scenario.body {
        ScenarioBody::Society(cfg) => {
            cfg.seed = seed;
            true
        }
        _ => false,
    }
}

/// Renders a report in the requested format.
pub fn render(report: &RunReport, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Csv => {
            let (graph, adversary) = match &report.scenario.body {
                ScenarioBody::PowerChain(b) => (b.graph().ok(), b.adversary.as_str()),
                _ => (None, ""),
            };
            csv::outcome_csv(&report.outcome, graph.as_ref(), adversary)
        }
    }
}

/// Runs the `run` command, returning the process exit code.
pub fn run(args: &RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8 {
    let mut scenario = match scenario::load_scenario(&args.scenario) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_SCENARIO;
        }
    };
    if let Some(seed) = args.seed {
        if !override_seed(&mut scenario, seed) && !args.quiet {
            let _ = writeln!(stderr, "warning: --seed ignored, scenario kind has no seed");
        }
    }
    let report = match report::execute(&scenario) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_RUNTIME;
        }
    };
    let text = render(&report, args.format);
    let written = match &args.out {
        Some(path) => std::fs::write(path, text.as_bytes()),
        None => stdout
            .write_all(text.as_bytes())
            .and_then(|_| stdout.flush()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: cannot write report: {e}");
        return EXIT_RUNTIME;
    }
    if !args.quiet {
        let _ = writeln!(
            stderr,
            "{}: {}",
            args.scenario.display(),
            report.outcome.summary()
        );
    }
    EXIT_OK
}

/// Parses `argv` and dispatches. Usage errors exit with the scenario-error
/// code; `--help` and `--version` exit 0.
pub fn main_with_args<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_SCENARIO
            } else {
                EXIT_OK
            };
            let target: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match &cli.command {
        Command::Run(args) => run(args, stdout, stderr),
    }
}
