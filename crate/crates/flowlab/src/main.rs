use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flowlab::config::{parse_config, KEY_HELP};
use flowlab::manifest::write_manifest;
use flowlab::run::{default_output_dir, run_experiment, write_failure_status};
use flowlab::stability::analyze_stability;
use flowlab::sweep::{sweep, worker_threads};
use flowlab::HarnessError;

#[derive(Parser)]
#[command(name = "flowlab", version, about = "Volume-preserving curve flows on the flat torus", after_help = KEY_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write run.csv, snapshots and status.json.
    #[command(after_help = KEY_HELP)]
    Run { config: PathBuf },
    /// Spectrum of the second variation of the initial boundary.
    #[command(after_help = KEY_HELP)]
    Stability { config: PathBuf },
    /// Compute the oracle manifest.
    Oracles {
        #[arg(short, long, default_value = "oracles.json")]
        output: PathBuf,
    },
    /// Run every *.cfg in a directory; FLOWLAB_THREADS caps the workers.
    Sweep { dir: PathBuf },
}

fn fail(err: &HarnessError) -> ExitCode {
    eprintln!("flowlab: {err}");
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = worker_threads();
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    match cli.command {
        Command::Run { config } => {
            let cfg = match parse_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    let err = HarnessError::from(e);
                    let _ = write_failure_status(&default_output_dir(&config), &err);
                    return fail(&err);
                }
            };
            match run_experiment(&cfg) {
                Ok(bundle) => {
                    let s = &bundle.status;
                    println!(
                        "{}: {} after {} steps, t = {:.6e}, volume drift {:.3e}",
                        bundle.dir.display(),
                        s.stop_reason.as_deref().unwrap_or(&s.status),
                        s.steps,
                        s.t,
                        s.max_volume_drift
                    );
                    match &bundle.failure {
                        Some(e) => fail(e),
                        None => ExitCode::SUCCESS,
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::Stability { config } => match parse_config(&config)
            .map_err(HarnessError::from)
            .and_then(|c| analyze_stability(&c))
        {
            Ok((path, file)) => {
                let r = &file.report;
                let verdict = r
                    .verdict
                    .map_or_else(|| "none".to_string(), |v| v.to_string());
                println!("{}: verdict {verdict}", path.display());
                if let Some(w) = &r.warning {
                    println!("warning: {w}");
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Oracles { output } => match write_manifest(&output) {
            Ok(m) => {
                for c in &m.comparisons {
                    println!(
                        "{} {} = {:.3e} (tolerance {:.0e})",
                        if c.pass { "ok  " } else { "FAIL" },
                        c.name,
                        c.value,
                        c.tolerance
                    );
                }
                if m.all_pass() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => fail(&e),
        },
        Command::Sweep { dir } => match sweep(&dir, threads) {
            Ok(entries) => {
                for e in &entries {
                    println!("{} {} {}", e.status, e.exit_code, e.config.display());
                }
                if entries.iter().all(|e| e.exit_code == 0) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => fail(&e),
        },
    }
}
