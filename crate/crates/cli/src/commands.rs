//! Subcommand dispatch: `simulate`, `certify` and `align`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use lislam::analysis::{align_estimate, total_error, StabilityCertificate};
use lislam::observer::{init_auxiliary, Gains};
use lislam::slam::{apply_frame_action, build_structural, DEFAULT_GRAVITY};

use crate::config::{parse_config, parse_config_str, preset_config, RunConfig};
use crate::csvlog::{emit_csv, read_csv};
use crate::error::CliError;
use crate::report::{certificate_summary, fmt_float, simulation_summary};

#[derive(Debug, Parser)]
#[command(name = "lislam", version, about = "Landmark-inertial SLAM observer simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write the trajectory CSV and summary.
    Simulate {
        /// Run configuration (TOML).
        config: Option<PathBuf>,
        /// Output directory (overrides `[output] dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base every missing value on a named preset.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Print the stability certificate for a configuration.
    Certify {
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
    },
    /// Remove the unobservable yaw and translation from a finished log.
    Align {
        /// Trajectory CSV written by `simulate`.
        csv: PathBuf,
        /// Configuration the log was produced with (defaults to the paper_default preset).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output path (defaults to `<stem>_aligned.csv` next to the input).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(config: Option<&Path>, preset: Option<&str>) -> Result<RunConfig, CliError> {
    match (config, preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            parse_config_str(&text, preset)
        }
        (None, Some(name)) => preset_config(name),
        (None, None) => Err(CliError::Usage(
            "a configuration file or --preset is required".into(),
        )),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn simulate(run: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let s = &run.scenario;
    let sm = build_structural(s.n, s.g)?;
    let cert = StabilityCertificate::new(&s.gains, &sm)?;

    let started = Instant::now();
    let log = lislam::sim::run_simulation(s)?;
    log::info!(
        "simulated {} steps in {:.3} s",
        log.len() - 1,
        started.elapsed().as_secs_f64()
    );

    std::fs::create_dir_all(&run.output.dir).map_err(io_err(&run.output.dir))?;
    let csv_path = run.output.csv_path();
    emit_csv(&log, &csv_path)?;
    let summary_path = run.output.summary_path();
    std::fs::write(&summary_path, simulation_summary(run, &cert, &log)).map_err(io_err(&summary_path))?;

    let _ = writeln!(out, "trajectory: {}", csv_path.display());
    let _ = writeln!(out, "summary: {}", summary_path.display());
    Ok(())
}

fn certify(run: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let s = &run.scenario;
    let sm = build_structural(s.n, s.g)?;
    let cert = StabilityCertificate::new(&s.gains, &sm)?;
    let _ = out.write_all(certificate_summary(run, &cert).as_bytes());
    Ok(())
}

fn default_aligned_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map_or_else(|| "trajectory".into(), |s| s.to_string_lossy().into_owned());
    csv.with_file_name(format!("{stem}_aligned.csv"))
}

fn align(csv: &Path, config: Option<&Path>, dest: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let file = File::open(csv).map_err(io_err(csv))?;
    let mut table = read_csv(BufReader::new(file))?;
    if table.is_empty() {
        return Err(CliError::Schema("log has no data rows".into()));
    }
    let (gains, g) = match config {
        Some(path) => {
            let run = parse_config(path)?;
            if run.scenario.n != table.n {
                return Err(CliError::Validation {
                    field: "n".into(),
                    constraint: format!(
                        "configuration has {} landmarks but the log has {}",
                        run.scenario.n, table.n
                    ),
                });
            }
            (run.scenario.gains, run.scenario.g)
        }
        None => (Gains::REFERENCE, DEFAULT_GRAVITY),
    };
    gains.validate(table.n).map_err(|e| CliError::Validation {
        field: "gains".into(),
        constraint: e.to_string(),
    })?;
    let sm = build_structural(table.n, g)?;
    let z = init_auxiliary(&gains, &sm)?;

    let last = table.len() - 1;
    let e_bar = total_error(&table.true_state(last), &table.est_state(last), &z)?;
    let (transform, _) = align_estimate(&table.est_state(last), &e_bar)?;
    let inverse = transform.frame().inverse();
    for k in 0..table.len() {
        let aligned = apply_frame_action(&inverse, &table.est_state(k));
        table.set_est_state(k, &aligned);
    }

    let dest = dest.map_or_else(|| default_aligned_path(csv), Path::to_path_buf);
    let file = File::create(&dest).map_err(io_err(&dest))?;
    table.write(BufWriter::new(file)).map_err(|e| match e {
        CliError::Io { source, .. } => io_err(&dest)(source),
        other => other,
    })?;

    let _ = writeln!(out, "theta = {}", fmt_float(transform.theta));
    let _ = writeln!(
        out,
        "translation = [{}, {}, {}]",
        fmt_float(transform.t.x),
        fmt_float(transform.t.y),
        fmt_float(transform.t.z)
    );
    let _ = writeln!(out, "aligned: {}", dest.display());
    Ok(())
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Simulate { config, out: dir, preset } => {
            let mut run = load(config.as_deref(), preset.as_deref())?;
            if let Some(dir) = dir {
                run.output.dir = dir;
            }
            simulate(&run, out)
        }
        Command::Certify { config, preset } => {
            let run = load(config.as_deref(), preset.as_deref())?;
            certify(&run, out)
        }
        Command::Align { csv, config, out: dest } => align(&csv, config.as_deref(), dest.as_deref(), out),
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code: 0 on success, 1 for usage or validation
/// errors, 2 for numerical failures.
pub fn run_command<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_command(args.iter().copied(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_one() {
        let (code, _, err) = run(&["lislam", "frobnicate"]);
        assert_eq!(code, 1);
        assert!(err.contains("Usage"), "{err}");
        assert_eq!(run(&["lislam"]).0, 1);
        assert_eq!(run(&["lislam", "certify"]).0, 1);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run(&["lislam", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("simulate"));
    }

    #[test]
    fn certify_with_preset() {
        let (code, out, _) = run(&["lislam", "certify", "--preset", "paper_default"]);
        assert_eq!(code, 0);
        assert!(out.contains("eigenvalue_count = 6"));
    }

    #[test]
    fn aligned_path_default() {
        assert_eq!(
            default_aligned_path(Path::new("a/b/run.csv")),
            PathBuf::from("a/b/run_aligned.csv")
        );
    }
}
