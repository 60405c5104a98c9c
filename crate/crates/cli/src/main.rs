use std::io::Write;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use phtel::analysis::{power_totals, PowerBudget};
use phtel::report::render_report;
use phtel::{analyze, AnalysisOptions, DaqHost, Metrics, Rig, Scenario, Session};
use phtel_server::AppState;

#[derive(Debug, Parser)]
#[command(name = "phtel", version, about = "Intraoral pH telemetry twin")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario on the virtual clock and write the session as JSONL.
    Simulate {
        /// Scenario file (TOML).
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute drift, calibration, response and stability metrics.
    Analyze {
        session: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Settling band half-width in pH.
        #[arg(long, default_value_t = 0.05)]
        band_ph: f64,
        /// Measurement-chain delay subtracted from settling times.
        #[arg(long)]
        delay_ms: Option<f64>,
        /// Rescale the slope to the recorded mean temperature.
        #[arg(long)]
        temperature_compensation: bool,
        /// Power table to include in the metrics.
        #[arg(long)]
        budget: Option<PathBuf>,
    },
    /// Render a self-contained HTML report.
    Report {
        session: PathBuf,
        metrics: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the power budget totals.
    Power {
        /// Power table (TOML). Defaults to the reference parts list.
        #[arg(long)]
        budget: Option<PathBuf>,
    },
    /// Serve the live session endpoints.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
        bind: IpAddr,
        /// Virtual seconds per wall-clock second for simulated devices.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        /// Directory for crash-recovery journals.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Write `bytes` to `path` through a temporary file in the same directory so
/// a failure never leaves a partial file behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn load_session(path: &Path) -> Result<Session> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Session::from_jsonl(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn load_budget(path: Option<&Path>) -> Result<PowerBudget> {
    match path {
        Some(p) => {
            Ok(PowerBudget::from_toml(&read_text(p)?).with_context(|| p.display().to_string())?)
        }
        None => Ok(PowerBudget::table_i()),
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate {
            scenario,
            out,
            seed,
        } => {
            let mut s = Scenario::from_toml(&read_text(&scenario)?)
                .with_context(|| scenario.display().to_string())?;
            if let Some(seed) = seed {
                s = s.with_seed(seed);
            }
            let run = Rig::run(&s)?;
            write_atomic(&out, &run.session.to_jsonl())?;
            eprintln!(
                "{}: {} samples, {} missing",
                out.display(),
                run.session.stored_count(),
                run.session.missing_count()
            );
        }
        Command::Analyze {
            session,
            out,
            band_ph,
            delay_ms,
            temperature_compensation,
            budget,
        } => {
            if !(band_ph > 0.0) {
                bail!("--band-ph must be positive");
            }
            let session = load_session(&session)?;
            let opts = AnalysisOptions {
                band_ph,
                delay_ms,
                temperature_compensation,
                power: load_budget(budget.as_deref())?,
                ..AnalysisOptions::default()
            };
            let metrics = analyze(&session, &opts)?;
            for w in &metrics.warnings {
                eprintln!("warning: {w}");
            }
            write_atomic(&out, metrics.to_json().as_bytes())?;
        }
        Command::Report {
            session,
            metrics,
            out,
        } => {
            let session = load_session(&session)?;
            let metrics = Metrics::from_json(&read_text(&metrics)?)
                .with_context(|| format!("parsing {}", metrics.display()))?;
            write_atomic(&out, render_report(&session, &metrics)?.as_bytes())?;
        }
        Command::Power { budget } => {
            let budget = load_budget(budget.as_deref())?;
            let t = power_totals(&budget);
            for e in &budget.entries {
                let flag = if e.optional { " (optional)" } else { "" };
                println!(
                    "{:<20} {:<20} {:>8.3} mW{flag}",
                    e.component, e.part, e.power_mw
                );
            }
            println!("total                {:.2} mW", t.total_mw);
            println!("without optional     {:.2} mW", t.total_without_optional_mw);
            println!("intraoral            {:.2} mW", t.intraoral_mw);
        }
        Command::Serve {
            port,
            bind,
            speed,
            data_dir,
        } => {
            if !(speed > 0.0 && speed.is_finite()) {
                bail!("--speed must be positive");
            }
            tracing_subscriber::fmt()
                .with_writer(std::io::stderr)
                .with_ansi(false)
                .init();
            let host = match data_dir {
                Some(d) => {
                    std::fs::create_dir_all(&d).with_context(|| d.display().to_string())?;
                    DaqHost::with_journal_dir(d)
                }
                None => DaqHost::new(),
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(phtel_server::serve(
                SocketAddr::new(bind, port),
                AppState::new(host, speed),
            ))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
