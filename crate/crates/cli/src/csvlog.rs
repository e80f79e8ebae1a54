//! Trajectory CSV schema.
//!
//! One header row, then one row per sample:
//!
//! * `t`
//! * true state: `R00..R22` (row-major), `vx,vy,vz`, `x1,x2,x3`, `p{i}_1..p{i}_3`
//! * estimate: the same names with a `hat_` prefix
//! * metrics: `err_att_reduced`, `err_vel_body`, `err_lm{i}_body`, `lyap_V`,
//!   `lyap_L`, `roll_err`, `pitch_err`, `yaw_err`, `err_pos_inertial`,
//!   `err_lm{i}_inertial`
//!
//! Floats are written as the shortest decimal that round-trips; lines end in LF.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use lislam::groups::{Block, ExtendedPose};
use lislam::sim::TrajectoryLog;
use nalgebra::Matrix3;

use crate::error::CliError;

fn state_columns(prefix: &str, n: usize) -> Vec<String> {
    let mut cols = Vec::with_capacity(15 + 3 * n);
    for i in 0..3 {
        for j in 0..3 {
            cols.push(format!("{prefix}R{i}{j}"));
        }
    }
    for c in ["vx", "vy", "vz", "x1", "x2", "x3"] {
        cols.push(format!("{prefix}{c}"));
    }
    for i in 1..=n {
        for k in 1..=3 {
            cols.push(format!("{prefix}p{i}_{k}"));
        }
    }
    cols
}

fn metric_columns(n: usize) -> Vec<String> {
    let mut cols = vec!["err_att_reduced".to_string(), "err_vel_body".to_string()];
    cols.extend((1..=n).map(|i| format!("err_lm{i}_body")));
    for c in ["lyap_V", "lyap_L", "roll_err", "pitch_err", "yaw_err", "err_pos_inertial"] {
        cols.push(c.to_string());
    }
    cols.extend((1..=n).map(|i| format!("err_lm{i}_inertial")));
    cols
}

/// Column names for `n` landmarks, in file order.
pub fn header(n: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    cols.extend(state_columns("", n));
    cols.extend(state_columns("hat_", n));
    cols.extend(metric_columns(n));
    cols
}

/// Number of columns for `n` landmarks.
pub fn column_count(n: usize) -> usize {
    39 + 8 * n
}

fn push_state(row: &mut Vec<f64>, x: &ExtendedPose) {
    for i in 0..3 {
        for j in 0..3 {
            row.push(x.r[(i, j)]);
        }
    }
    row.extend(x.v.iter().copied());
}

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

fn csv_err(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io {
            path: Default::default(),
            source,
        },
        other => CliError::Schema(format!("{other:?}")),
    }
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Writes a log in the trajectory schema.
pub fn write_csv<W: Write>(log: &TrajectoryLog, out: W) -> Result<(), CliError> {
    if log.is_empty() {
        return Err(CliError::Validation {
            field: "log".into(),
            constraint: "must contain at least one sample".into(),
        });
    }
    let n = log.n();
    let mut w = writer(out);
    w.write_record(header(n)).map_err(csv_err)?;
    let mut row = Vec::with_capacity(column_count(n));
    for k in 0..log.len() {
        row.clear();
        row.push(log.times[k]);
        push_state(&mut row, &log.true_states[k]);
        push_state(&mut row, &log.est_states[k]);
        let m = &log.metrics[k];
        let (lyap_v, lyap_l) = log.lyapunov[k];
        row.extend([m.att_reduced, m.vel_body]);
        row.extend(m.lm_body.iter().copied());
        row.extend([lyap_v, lyap_l, m.roll, m.pitch, m.yaw, m.pos_inertial]);
        row.extend(m.lm_inertial.iter().copied());
        debug_assert_eq!(row.len(), column_count(n));
        w.write_record(row.iter().map(|&x| fmt(x))).map_err(csv_err)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: Default::default(),
        source,
    })
}

/// Writes a log to `path`, creating or truncating the file.
pub fn emit_csv(log: &TrajectoryLog, path: &Path) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    write_csv(log, BufWriter::new(file)).map_err(|e| match e {
        CliError::Io { source, .. } => io(source),
        other => other,
    })
}

/// A trajectory CSV read back into memory.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    fn pose_at(&self, row: usize, offset: usize) -> ExtendedPose {
        let r = &self.rows[row];
        let rot = Matrix3::from_fn(|i, j| r[offset + 3 * i + j]);
        let k = self.n + 2;
        let v = Block::from_column_slice(&r[offset + 9..offset + 9 + 3 * k]);
        ExtendedPose::new(rot, v)
    }

    fn hat_offset(&self) -> usize {
        1 + 15 + 3 * self.n
    }

    pub fn true_state(&self, row: usize) -> ExtendedPose {
        self.pose_at(row, 1)
    }

    pub fn est_state(&self, row: usize) -> ExtendedPose {
        self.pose_at(row, self.hat_offset())
    }

    /// Replaces the estimate columns of `row`.
    pub fn set_est_state(&mut self, row: usize, x: &ExtendedPose) {
        let off = self.hat_offset();
        let mut vals = Vec::with_capacity(15 + 3 * self.n);
        push_state(&mut vals, x);
        self.rows[row][off..off + vals.len()].copy_from_slice(&vals);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = writer(out);
        w.write_record(header(self.n)).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&x| fmt(x))).map_err(csv_err)?;
        }
        w.flush().map_err(|source| CliError::Io {
            path: Default::default(),
            source,
        })
    }
}

/// Parses a trajectory CSV, inferring `n` from the header and checking every
/// column name.
pub fn read_csv<R: Read>(input: R) -> Result<CsvTable, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let names: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let width = names.len();
    if width < column_count(1) || !(width - 39).is_multiple_of(8) {
        return Err(CliError::Schema(format!("unexpected column count {width}")));
    }
    let n = (width - 39) / 8;
    let expected = header(n);
    if let Some((i, (got, want))) = names.iter().zip(&expected).enumerate().find(|(_, (a, b))| a != b) {
        return Err(CliError::Schema(format!(
            "column {} is `{got}`, expected `{want}`",
            i + 1
        )));
    }
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = record
            .iter()
            .enumerate()
            .map(|(j, s)| {
                s.trim().parse::<f64>().map_err(|_| {
                    CliError::Schema(format!(
                        "row {}, column `{}`: cannot parse `{s}`",
                        line + 2,
                        expected[j]
                    ))
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok(CsvTable { n, rows })
}
