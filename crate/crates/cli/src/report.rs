//! Deterministic TOML-style summary of a run or certificate.
//!
//! Keys are emitted in a fixed order and every float uses 17 significant
//! digits in scientific notation, so identical inputs give identical bytes.
//! Wall-clock time is deliberately left out for the same reason; it is
//! logged instead.

use std::fmt::Write as _;

use lislam::analysis::StabilityCertificate;
use lislam::groups::ExtendedPose;
use lislam::sim::{InputProfile, ScenarioConfig, TrajectoryLog};
use nalgebra::Vector3;

use crate::config::RunConfig;

/// `x` with 17 significant digits, e.g. `-4.0000000000000000e0`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_list<I: IntoIterator<Item = f64>>(xs: I) -> String {
    let items: Vec<String> = xs.into_iter().map(fmt_float).collect();
    format!("[{}]", items.join(", "))
}

fn fmt_vec3(v: &Vector3<f64>) -> String {
    fmt_list(v.iter().copied())
}

fn fmt_str(s: &str) -> String {
    format!("{s:?}")
}

/// Accumulates `key = value` lines under section headers.
#[derive(Debug, Default)]
struct Doc {
    text: String,
}

impl Doc {
    fn section(&mut self, name: &str) {
        if !self.text.is_empty() {
            self.text.push('\n');
        }
        let _ = writeln!(self.text, "[{name}]");
    }

    fn kv(&mut self, key: &str, value: impl AsRef<str>) {
        let _ = writeln!(self.text, "{key} = {}", value.as_ref());
    }

    fn float(&mut self, key: &str, x: f64) {
        self.kv(key, fmt_float(x));
    }
}

fn write_pose(doc: &mut Doc, name: &str, x: &ExtendedPose) {
    doc.section(name);
    let rows: Vec<String> = (0..3)
        .map(|i| fmt_list((0..3).map(|j| x.r[(i, j)])))
        .collect();
    doc.kv("rotation", format!("[{}]", rows.join(", ")));
    doc.kv("v", fmt_vec3(&x.v.column(0).into_owned()));
    doc.kv("x", fmt_vec3(&x.v.column(1).into_owned()));
    let lms: Vec<String> = (2..x.cols())
        .map(|j| fmt_vec3(&x.v.column(j).into_owned()))
        .collect();
    doc.kv("landmarks", format!("[{}]", lms.join(", ")));
}

fn write_config(doc: &mut Doc, run: &RunConfig) {
    let s: &ScenarioConfig = &run.scenario;
    doc.section("config");
    doc.kv("preset", fmt_str(run.preset.as_deref().unwrap_or("none")));
    doc.kv("n", s.n.to_string());
    doc.float("g", s.g);
    doc.float("duration_s", s.duration_s);
    doc.float("rate_hz", s.rate_hz);
    doc.kv("integrator", fmt_str(s.integrator.name()));
    doc.kv("reorthonormalize", s.reorthonormalize.to_string());
    doc.kv("check_auxiliary", s.check_auxiliary.to_string());

    doc.section("config.gains");
    doc.float("k_r", s.gains.k_r);
    doc.float("k_v", s.gains.k_v);
    doc.float("k_x", s.gains.k_x);
    doc.float("k_p", s.gains.k_p);

    write_pose(doc, "config.true_init", &s.true_init);
    write_pose(doc, "config.est_init", &s.est_init);

    doc.section("config.input");
    doc.kv("profile", fmt_str(s.input.name()));
    match &s.input {
        InputProfile::Circular => {}
        InputProfile::Constant(u) => {
            doc.kv("omega", fmt_vec3(&u.omega));
            doc.kv("accel", fmt_vec3(&u.accel));
        }
        InputProfile::Table(table) => {
            let (times, samples) = (table.times(), table.samples());
            doc.kv("times", fmt_list(times.iter().copied()));
            let om: Vec<String> = samples.iter().map(|u| fmt_vec3(&u.omega)).collect();
            let ac: Vec<String> = samples.iter().map(|u| fmt_vec3(&u.accel)).collect();
            doc.kv("omega", format!("[{}]", om.join(", ")));
            doc.kv("accel", format!("[{}]", ac.join(", ")));
        }
    }

    doc.section("config.output");
    doc.kv("dir", fmt_str(&run.output.dir.to_string_lossy()));
    doc.kv("csv", fmt_str(&run.output.csv));
    doc.kv("summary", fmt_str(&run.output.summary));
}

fn write_certificate(doc: &mut Doc, cert: &StabilityCertificate) {
    doc.section("certificate");
    doc.kv("eigenvalue_count", cert.eigenvalues.len().to_string());
    let eig: Vec<String> = cert
        .eigenvalues
        .iter()
        .map(|z| fmt_list([z.re, z.im]))
        .collect();
    doc.kv("eigenvalues", format!("[{}]", eig.join(", ")));
    doc.float("lyapunov_residual", cert.lyapunov_residual());
    doc.float("p_min_eigenvalue", cert.p_min_eigenvalue());
    doc.float("q", cert.q);
    doc.float("local_rate", cert.local_rate);
    let rows: Vec<String> = (0..cert.a_mat.nrows())
        .map(|i| fmt_list(cert.a_mat.row(i).iter().copied()))
        .collect();
    doc.kv("a_matrix", format!("[{}]", rows.join(", ")));
    let rows: Vec<String> = (0..cert.p_mat.nrows())
        .map(|i| fmt_list(cert.p_mat.row(i).iter().copied()))
        .collect();
    doc.kv("p_matrix", format!("[{}]", rows.join(", ")));
}

fn write_run(doc: &mut Doc, log: &TrajectoryLog) {
    doc.section("run");
    doc.kv("steps", (log.len() - 1).to_string());
    doc.kv("samples", log.len().to_string());
    let max_increase = log
        .lyapunov
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::NEG_INFINITY, f64::max);
    if log.len() > 1 {
        doc.float("max_lyap_L_increase", max_increase);
    }
    if let Some(max_aux) = log.aux_rate_norms.iter().copied().reduce(f64::max) {
        doc.float("max_aux_rate", max_aux);
    }

    let k = log.len() - 1;
    let m = &log.metrics[k];
    doc.section("final");
    doc.float("t", log.times[k]);
    doc.float("err_att_reduced", m.att_reduced);
    doc.float("err_vel_body", m.vel_body);
    doc.kv("err_lm_body", fmt_list(m.lm_body.iter().copied()));
    doc.float("lyap_V", log.lyapunov[k].0);
    doc.float("lyap_L", log.lyapunov[k].1);
    doc.float("roll_err", m.roll);
    doc.float("pitch_err", m.pitch);
    doc.float("yaw_err", m.yaw);
    doc.float("err_pos_inertial", m.pos_inertial);
    doc.kv("err_lm_inertial", fmt_list(m.lm_inertial.iter().copied()));
}

/// Summary of a finished simulation: config echo, certificate, final metrics.
pub fn simulation_summary(run: &RunConfig, cert: &StabilityCertificate, log: &TrajectoryLog) -> String {
    let mut doc = Doc::default();
    write_config(&mut doc, run);
    write_certificate(&mut doc, cert);
    if !log.is_empty() {
        write_run(&mut doc, log);
    }
    doc.text
}

/// Summary of a stability certificate alone.
pub fn certificate_summary(run: &RunConfig, cert: &StabilityCertificate) -> String {
    let mut doc = Doc::default();
    write_config(&mut doc, run);
    write_certificate(&mut doc, cert);
    doc.text
}
