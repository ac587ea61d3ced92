//! `mess-restore`: solve, compare, validate and generate restoration
//! scenarios from the command line.
//!
//! Exit status is 0 on success, 1 when the search stopped at a time or node
//! limit (artifacts are still written and flagged as partial), and 2 for
//! anything wrong with the input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use mess_restore::formulation::{compile_static, CompiledModel};
use mess_restore::mip::MipSettings;
use mess_restore::report::{self, SolveOutcome};
use mess_restore::scenario::validate;
use mess_restore::{compile, instances, Error, Scenario};

#[derive(Parser)]
#[command(name = "mess-restore", version, about = "Load restoration with mobile energy storage routing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and write plan.json, schedule.csv, traces.csv and summary.json.
    Solve {
        scenario: PathBuf,
        /// Output directory.
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        /// Pin every trip count to zero (stationary storage only).
        #[arg(long = "static")]
        static_only: bool,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Solve with and without routing and write paired traces.
    Compare {
        scenario: PathBuf,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Check a scenario file against the data model and print the report.
    Validate { scenario: PathBuf },
    /// Write one of the built-in scenarios as JSON.
    Generate {
        #[arg(value_enum)]
        instance: Instance,
        /// Seed for the synthetic parts of the instance.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Instance {
    /// 123-bus feeder with the Table I parameters.
    Table1,
    /// Two-island desk instance.
    Desk,
    /// Small random instance sized for exhaustive enumeration.
    Tiny,
}

#[derive(Args)]
struct SearchArgs {
    /// Relative optimality gap at which the search stops.
    #[arg(long)]
    gap: Option<f64>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Node limit.
    #[arg(long)]
    nodes: Option<usize>,
    /// Nodes evaluated in parallel.
    #[arg(long)]
    workers: Option<usize>,
    /// Write the compiled conic program as JSON to this file before solving.
    #[arg(long, value_name = "FILE")]
    dump_program: Option<PathBuf>,
    /// Accepted for symmetry with `generate`; the solve is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

impl SearchArgs {
    fn settings(&self) -> MipSettings {
        let mut s = MipSettings::default();
        if let Some(gap) = self.gap {
            s.gap = gap;
        }
        if let Some(t) = self.time_limit {
            s.time_limit = t;
        }
        if let Some(n) = self.nodes {
            s.node_limit = n;
        }
        if let Some(w) = self.workers {
            s.workers = w.max(1);
        }
        s
    }
}

/// How a command ended, mapped onto the exit status.
enum Failure {
    Input(Error),
    Solver(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } | Error::Json(_) | Error::Invalid(_) | Error::Structural(_) => Failure::Input(e),
            other => Failure::Solver(other),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(limited) => ExitCode::from(u8::from(limited)),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Returns whether a solver limit was hit.
fn run(command: Command) -> Result<bool, Failure> {
    match command {
        Command::Solve {
            scenario,
            out,
            static_only,
            search,
        } => {
            let scenario = Scenario::load_validated(&scenario)?;
            let model = if static_only { compile_static(&scenario)? } else { compile(&scenario)? };
            dump_program(&search, &model)?;
            let outcome = report::solve_model(model, &search.settings())?;
            report::write_artifacts(&out, &outcome)?;
            print_outcome(&outcome, &out);
            Ok(outcome.hit_limit())
        }
        Command::Compare { scenario, out, search } => {
            let scenario = Scenario::load_validated(&scenario)?;
            if search.dump_program.is_some() {
                dump_program(&search, &compile(&scenario)?)?;
            }
            let (routed, stat, comparison) = report::compare(&scenario, &search.settings())?;
            report::write_comparison(&out, &routed, &stat, &comparison)?;
            println!(
                "routed {:.9} vs static {:.9} (margin {:.3e}); restored energy {:.6} vs {:.6} MWh; routed not worse at {}/{} steps",
                comparison.routed_objective,
                comparison.static_objective,
                comparison.margin,
                comparison.routed_energy_mwh,
                comparison.static_energy_mwh,
                comparison.steps_not_worse,
                comparison.steps.len()
            );
            println!("wrote {}", out.display());
            Ok(routed.hit_limit() || stat.hit_limit())
        }
        Command::Validate { scenario } => {
            let scenario = Scenario::load(&scenario)?;
            let report = validate(&scenario);
            if report.is_pass() {
                let model = compile(&scenario)?;
                let c = model.counts;
                println!(
                    "{}: pass ({} columns, {} equalities, {} inequalities, {} cones, {} binaries, {} trip slots)",
                    scenario.name, c.columns, c.equalities, c.inequalities, c.cones, c.binaries, c.trip_slots
                );
                Ok(false)
            } else {
                Err(Failure::Input(Error::Invalid(report)))
            }
        }
        Command::Generate { instance, seed, out } => {
            let scenario = match instance {
                Instance::Table1 => instances::table1(seed),
                Instance::Desk => instances::desk(),
                Instance::Tiny => instances::tiny(seed),
            };
            let mut text = scenario.to_json_pretty();
            text.push('\n');
            match out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
            Ok(false)
        }
    }
}

fn dump_program(search: &SearchArgs, model: &CompiledModel) -> Result<(), Error> {
    if let Some(path) = &search.dump_program {
        let text = serde_json::to_string(&model.program)?;
        write(path, &text)?;
        info!("program written to {}", path.display());
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn print_outcome(outcome: &SolveOutcome, out: &Path) {
    let s = outcome.summary();
    match s.objective {
        Some(obj) => println!(
            "{:?}: objective {:.9}, bound {:.9}, gap {:.3e}, {} nodes, {:.2}s, {} trips",
            s.status,
            obj.total,
            s.best_bound.unwrap_or(f64::NAN),
            s.gap.unwrap_or(f64::NAN),
            s.nodes,
            s.runtime_seconds,
            s.trips
        ),
        None => println!("{:?}: no feasible plan after {} nodes", s.status, s.nodes),
    }
    if s.partial {
        println!("search stopped at a limit; outputs are partial");
    }
    println!("wrote {}", out.display());
}
