use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pmm_cli::check::check_projection;
use pmm_cli::config::RunConfig;
use pmm_cli::gen::{generate, write_instance, Dims, Kind};
use pmm_cli::run::run;
use pmm_cli::CliError;

#[derive(Parser)]
#[command(name = "pmm", version, about = "Polyak minorant method experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured experiment and write traces, a summary and plots.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare the dual and primal projection routes on random instances.
    CheckProjection {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a generated instance as JSON.
    Gen {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// SOCP: number of primal variables.
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// SOCP: number of equality rows.
        #[arg(long, default_value_t = 40)]
        p: usize,
        /// SOCP: number of equal cones.
        #[arg(long, default_value_t = 5)]
        cones: usize,
        /// LMI: matrix order.
        #[arg(long, default_value_t = 10)]
        q: usize,
        /// LMI: number of Lyapunov constraints.
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::load(&config)?;
            let (summary, ok) = run(&cfg)?;
            for r in &summary.runs {
                println!(
                    "M={} status={} iterations={} final_violation={} wall_ms={:.1}",
                    r.memory,
                    r.status.map_or("error".to_string(), |s| format!("{s:?}")),
                    r.iterations,
                    r.final_violation.map_or("inf".to_string(), |v| format!("{v:e}")),
                    r.wall_ms
                );
            }
            if ok {
                Ok(())
            } else {
                Err(CliError::Solver("at least one run failed; see summary.json".into()))
            }
        }
        Command::CheckProjection { trials, seed } => {
            if trials == 0 {
                return Err(CliError::Usage("--trials must be at least 1".into()));
            }
            let report = check_projection(trials, seed);
            println!("{}", report.line());
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Solver("projection routes disagree".into()))
            }
        }
        Command::Gen { kind, seed, out, n, p, cones, q, k } => {
            let inst = generate(kind, seed, Dims { n, p, cones, q, k })?;
            write_instance(&inst, &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
