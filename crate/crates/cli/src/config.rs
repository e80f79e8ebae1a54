//! TOML run configuration.
//!
//! A run file mirrors [`ScenarioConfig`] plus output locations:
//!
//! ```toml
//! preset = "paper_default"     # optional base for every missing value
//! n = 5
//! g = 9.81
//! duration_s = 10.0
//! rate_hz = 500.0
//! integrator = "euler"         # euler | geometric_euler | rk4
//! reorthonormalize = true
//! check_auxiliary = true
//!
//! [gains]
//! k_r = 2.0
//! k_v = 2.0
//! k_x = 1.0
//! k_p = 4.0
//!
//! [true_init]
//! rotation = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
//! # or: rotation_vector = [0.0, 0.0, 0.0]
//! v = [0.0, 1.0, 0.0]
//! x = [1.0, 0.0, 1.0]
//! landmarks = [[0.5, 0.5, 0.0], ...]
//!
//! [est_init]                   # same keys as true_init
//!
//! [input]
//! profile = "circular"         # circular | constant | table
//! # constant: omega = [..], accel = [..]
//! # table:    [[input.samples]] t = .., omega = [..], accel = [..]
//!
//! [output]
//! dir = "out"
//! csv = "trajectory.csv"
//! summary = "summary.toml"
//! ```
//!
//! Unknown keys are rejected. Without a preset the gains and both initial
//! states are required; scalar settings fall back to defaults with a warning.

use std::path::{Path, PathBuf};

use lislam::groups::{so3_exp, Block, ExtendedPose, Rotation};
use lislam::observer::Gains;
use lislam::sim::{Integrator, InputProfile, InputTable, ScenarioConfig};
use lislam::slam::{ImuInput, DEFAULT_GRAVITY};
use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;

use crate::error::CliError;

pub const DEFAULT_PRESET: &str = "paper_default";

pub const DEFAULT_DURATION_S: f64 = 10.0;
pub const DEFAULT_RATE_HZ: f64 = 500.0;
pub const DEFAULT_OUT_DIR: &str = "out";
pub const DEFAULT_CSV_NAME: &str = "trajectory.csv";
pub const DEFAULT_SUMMARY_NAME: &str = "summary.toml";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    n: Option<usize>,
    g: Option<f64>,
    duration_s: Option<f64>,
    rate_hz: Option<f64>,
    integrator: Option<String>,
    reorthonormalize: Option<bool>,
    check_auxiliary: Option<bool>,
    gains: Option<RawGains>,
    true_init: Option<RawPose>,
    est_init: Option<RawPose>,
    input: Option<RawInput>,
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGains {
    k_r: Option<f64>,
    k_v: Option<f64>,
    k_x: Option<f64>,
    k_p: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPose {
    rotation: Option<[[f64; 3]; 3]>,
    rotation_vector: Option<[f64; 3]>,
    v: Option<[f64; 3]>,
    x: Option<[f64; 3]>,
    landmarks: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInput {
    profile: Option<String>,
    omega: Option<[f64; 3]>,
    accel: Option<[f64; 3]>,
    samples: Option<Vec<RawSample>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSample {
    t: f64,
    omega: [f64; 3],
    accel: [f64; 3],
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    csv: Option<String>,
    summary: Option<String>,
}

/// Where a run writes its artefacts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub dir: PathBuf,
    pub csv: String,
    pub summary: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            dir: PathBuf::from(DEFAULT_OUT_DIR),
            csv: DEFAULT_CSV_NAME.to_string(),
            summary: DEFAULT_SUMMARY_NAME.to_string(),
        }
    }
}

impl OutputPaths {
    pub fn csv_path(&self) -> PathBuf {
        self.dir.join(&self.csv)
    }

    pub fn summary_path(&self) -> PathBuf {
        self.dir.join(&self.summary)
    }
}

/// A validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub scenario: ScenarioConfig,
    pub output: OutputPaths,
    /// Defaults that were filled in, one message each (also logged).
    pub warnings: Vec<String>,
}

fn validation(field: &str, constraint: impl Into<String>) -> CliError {
    CliError::Validation {
        field: field.to_string(),
        constraint: constraint.into(),
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |i| offset - i - 1) + 1;
    (line, column)
}

/// Reads and validates a run file.
pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text, None)
}

/// Parses run-file text. `preset_override` (from the command line) takes
/// precedence over a `preset` key in the document.
pub fn parse_config_str(text: &str, preset_override: Option<&str>) -> Result<RunConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        CliError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    resolve(raw, preset_override)
}

/// The `paper_default` preset with no overrides.
pub fn preset_config(name: &str) -> Result<RunConfig, CliError> {
    resolve(RawConfig::default(), Some(name))
}

fn resolve(raw: RawConfig, preset_override: Option<&str>) -> Result<RunConfig, CliError> {
    let preset = preset_override.map(str::to_string).or(raw.preset);
    let base = match preset.as_deref() {
        None => None,
        Some(DEFAULT_PRESET) => Some(ScenarioConfig::paper_default()),
        Some(other) => {
            return Err(validation(
                "preset",
                format!("unknown preset `{other}` (expected `{DEFAULT_PRESET}`)"),
            ))
        }
    };
    let mut warnings = Vec::new();
    let mut warn = |msg: String| {
        log::warn!("{msg}");
        warnings.push(msg);
    };

    let n = match (raw.n, raw.true_init.as_ref().and_then(|p| p.landmarks.as_ref()), &base) {
        (Some(n), _, _) => n,
        (None, Some(lms), _) => lms.len(),
        (None, None, Some(b)) => b.n,
        (None, None, None) => return Err(validation("n", "required (or give true_init.landmarks)")),
    };
    if n == 0 {
        return Err(validation("n", "at least one landmark is required"));
    }
    let g = match (raw.g, &base) {
        (Some(g), _) => g,
        (None, Some(b)) => b.g,
        (None, None) => {
            warn(format!("g not set, using {DEFAULT_GRAVITY}"));
            DEFAULT_GRAVITY
        }
    };
    if !(g > 0.0 && g.is_finite()) {
        return Err(validation("g", format!("must be positive and finite, got {g}")));
    }

    let duration_s = match (raw.duration_s, &base) {
        (Some(d), _) => d,
        (None, Some(b)) => b.duration_s,
        (None, None) => {
            warn(format!("duration_s not set, using {DEFAULT_DURATION_S} s"));
            DEFAULT_DURATION_S
        }
    };
    if !(duration_s >= 0.0 && duration_s.is_finite()) {
        return Err(validation(
            "duration_s",
            format!("must be non-negative and finite, got {duration_s}"),
        ));
    }

    let rate_hz = match (raw.rate_hz, &base) {
        (Some(r), _) => r,
        (None, Some(b)) => b.rate_hz,
        (None, None) => {
            warn(format!("rate_hz not set, using {DEFAULT_RATE_HZ} Hz"));
            DEFAULT_RATE_HZ
        }
    };
    if !(rate_hz > 0.0 && rate_hz.is_finite()) {
        return Err(validation("rate_hz", format!("must be positive and finite, got {rate_hz}")));
    }

    let integrator = match (raw.integrator.as_deref(), &base) {
        (Some(s), _) => Integrator::parse(s).ok_or_else(|| {
            validation("integrator", format!("unknown method `{s}` (euler, geometric_euler, rk4)"))
        })?,
        (None, Some(b)) => b.integrator,
        (None, None) => {
            warn("integrator not set, using euler".to_string());
            Integrator::Euler
        }
    };

    let reorthonormalize = match (raw.reorthonormalize, &base) {
        (Some(v), _) => v,
        (None, Some(b)) => b.reorthonormalize,
        (None, None) => {
            warn("reorthonormalize not set, using true".to_string());
            true
        }
    };
    let check_auxiliary = match (raw.check_auxiliary, &base) {
        (Some(v), _) => v,
        (None, Some(b)) => b.check_auxiliary,
        (None, None) => {
            warn("check_auxiliary not set, using true".to_string());
            true
        }
    };

    let gains = resolve_gains(raw.gains, base.as_ref().map(|b| b.gains))?;
    gains
        .validate(n)
        .map_err(|e| validation("gains", e.to_string()))?;

    let true_init = resolve_pose("true_init", raw.true_init, base.as_ref().map(|b| &b.true_init), n)?;
    let est_init = resolve_pose("est_init", raw.est_init, base.as_ref().map(|b| &b.est_init), n)?;

    let input = match raw.input {
        Some(input) => resolve_input(input)?,
        None => match &base {
            Some(b) => b.input.clone(),
            None => {
                warn("input not set, using the circular profile".to_string());
                InputProfile::Circular
            }
        },
    };

    let output = match raw.output {
        Some(o) => OutputPaths {
            dir: o.dir.map_or_else(|| PathBuf::from(DEFAULT_OUT_DIR), PathBuf::from),
            csv: o.csv.unwrap_or_else(|| DEFAULT_CSV_NAME.to_string()),
            summary: o.summary.unwrap_or_else(|| DEFAULT_SUMMARY_NAME.to_string()),
        },
        None => OutputPaths::default(),
    };
    for (field, name) in [("output.csv", &output.csv), ("output.summary", &output.summary)] {
        if name.is_empty() {
            return Err(validation(field, "must not be empty"));
        }
    }

    let scenario = ScenarioConfig {
        n,
        g,
        duration_s,
        rate_hz,
        integrator,
        reorthonormalize,
        check_auxiliary,
        gains,
        true_init,
        est_init,
        input,
    };
    scenario
        .validate()
        .map_err(|e| validation("scenario", e.to_string()))?;

    Ok(RunConfig {
        preset,
        scenario,
        output,
        warnings,
    })
}

fn resolve_gains(raw: Option<RawGains>, base: Option<Gains>) -> Result<Gains, CliError> {
    let raw = raw.unwrap_or_default();
    let pick = |value: Option<f64>, from_base: Option<f64>, field: &str| {
        value
            .or(from_base)
            .ok_or_else(|| validation(field, "required (no preset given)"))
    };
    Ok(Gains {
        k_r: pick(raw.k_r, base.map(|b| b.k_r), "gains.k_r")?,
        k_v: pick(raw.k_v, base.map(|b| b.k_v), "gains.k_v")?,
        k_x: pick(raw.k_x, base.map(|b| b.k_x), "gains.k_x")?,
        k_p: pick(raw.k_p, base.map(|b| b.k_p), "gains.k_p")?,
    })
}

fn resolve_pose(
    section: &str,
    raw: Option<RawPose>,
    base: Option<&ExtendedPose>,
    n: usize,
) -> Result<ExtendedPose, CliError> {
    let raw = raw.unwrap_or_default();
    let field = |key: &str| format!("{section}.{key}");

    let r = match (raw.rotation, raw.rotation_vector) {
        (Some(_), Some(_)) => {
            return Err(validation(
                &field("rotation"),
                "give either rotation or rotation_vector, not both",
            ))
        }
        (Some(rows), None) => {
            let m = Matrix3::from_fn(|i, j| rows[i][j]);
            Rotation::new(m)
                .map_err(|e| validation(&field("rotation"), e.to_string()))?
                .into_inner()
        }
        (None, Some(w)) => {
            let w = Vector3::from(w);
            if !w.iter().all(|c| c.is_finite()) {
                return Err(validation(&field("rotation_vector"), "must be finite"));
            }
            so3_exp(&w)
        }
        (None, None) => base
            .map(|b| b.r)
            .ok_or_else(|| validation(&field("rotation"), "required (no preset given)"))?,
    };

    let vec_or_base = |value: Option<[f64; 3]>, col: usize, key: &str| -> Result<Vector3<f64>, CliError> {
        match value {
            Some(a) => Ok(Vector3::from(a)),
            None => base
                .map(|b| b.v.column(col).into_owned())
                .ok_or_else(|| validation(&field(key), "required (no preset given)")),
        }
    };
    let v = vec_or_base(raw.v, 0, "v")?;
    let x = vec_or_base(raw.x, 1, "x")?;

    let mut block = Block::zeros(n + 2);
    block.set_column(0, &v);
    block.set_column(1, &x);
    match raw.landmarks {
        Some(lms) => {
            if lms.len() != n {
                return Err(validation(
                    &field("landmarks"),
                    format!("expected {n} landmarks, found {}", lms.len()),
                ));
            }
            for (i, p) in lms.iter().enumerate() {
                block.set_column(i + 2, &Vector3::from(*p));
            }
        }
        None => {
            // Preset landmarks only apply when the count agrees.
            let b = base.filter(|b| b.cols() == n + 2).ok_or_else(|| {
                validation(&field("landmarks"), format!("required ({n} landmarks, not from the preset)"))
            })?;
            block.columns_mut(2, n).copy_from(&b.v.columns(2, n));
        }
    }
    let pose = ExtendedPose::new(r, block);
    if !pose.is_finite() {
        return Err(validation(section, "all entries must be finite"));
    }
    Ok(pose)
}

fn resolve_input(raw: RawInput) -> Result<InputProfile, CliError> {
    let profile = raw.profile.as_deref().unwrap_or("circular");
    let unused = |key: &str, present: bool| {
        if present {
            Err(validation(
                &format!("input.{key}"),
                format!("not used by the `{profile}` profile"),
            ))
        } else {
            Ok(())
        }
    };
    match profile {
        "circular" => {
            unused("omega", raw.omega.is_some())?;
            unused("accel", raw.accel.is_some())?;
            unused("samples", raw.samples.is_some())?;
            Ok(InputProfile::Circular)
        }
        "constant" => {
            unused("samples", raw.samples.is_some())?;
            let omega = raw
                .omega
                .ok_or_else(|| validation("input.omega", "required for the constant profile"))?;
            let accel = raw
                .accel
                .ok_or_else(|| validation("input.accel", "required for the constant profile"))?;
            Ok(InputProfile::Constant(ImuInput {
                omega: Vector3::from(omega),
                accel: Vector3::from(accel),
            }))
        }
        "table" => {
            unused("omega", raw.omega.is_some())?;
            unused("accel", raw.accel.is_some())?;
            let samples = raw
                .samples
                .ok_or_else(|| validation("input.samples", "required for the table profile"))?;
            let times = samples.iter().map(|s| s.t).collect();
            let inputs = samples
                .iter()
                .map(|s| ImuInput {
                    omega: Vector3::from(s.omega),
                    accel: Vector3::from(s.accel),
                })
                .collect();
            let table = InputTable::new(times, inputs)
                .map_err(|e| validation("input.samples", e.to_string()))?;
            Ok(InputProfile::Table(table))
        }
        other => Err(validation(
            "input.profile",
            format!("unknown profile `{other}` (circular, constant, table)"),
        )),
    }
}
