//! Scenario generation, fixed-step integration and the coupled
//! system/observer simulation loop.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::analysis::{error_metrics, ErrorMetrics, StabilityCertificate};
use crate::error::{Error, Result};
use crate::groups::{orthonormalize, so3_exp, vee, AutomorphismState, Block, ExtendedPose};
use crate::observer::{AuxiliaryRate, Gains, Observer};
use crate::slam::{build_structural, measure, system_derivative, ImuInput, PoseRate, DEFAULT_GRAVITY};

/// Bound on `|Z'|` enforced when auxiliary checking is enabled.
pub const AUX_RATE_TOL: f64 = 1e-10;

/// Landmarks of the circular reference scenario.
pub const REFERENCE_LANDMARKS: [[f64; 3]; 5] = [
    [0.5, 0.5, 0.0],
    [0.5, -0.5, 0.0],
    [-1.0, 0.5, 0.0],
    [1.0, 1.0, 0.0],
    [-1.2, -1.2, 0.0],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Entrywise explicit Euler.
    #[default]
    Euler,
    /// Exponential update of the rotation, Euler for the translations.
    GeometricEuler,
    /// Classic four-stage Runge-Kutta on the matrix entries.
    Rk4,
}

impl Integrator {
    pub fn name(&self) -> &'static str {
        match self {
            Integrator::Euler => "euler",
            Integrator::GeometricEuler => "geometric_euler",
            Integrator::Rk4 => "rk4",
        }
    }

    pub fn parse(s: &str) -> Option<Integrator> {
        match s {
            "euler" => Some(Integrator::Euler),
            "geometric_euler" => Some(Integrator::GeometricEuler),
            "rk4" => Some(Integrator::Rk4),
            _ => None,
        }
    }
}

/// A state that can be advanced by a fixed-step integrator.
pub trait Flow: Clone {
    type Rate;

    /// `self + h * rate`, entrywise.
    fn euler(&self, rate: &Self::Rate, h: f64) -> Result<Self>;

    /// Euler step with rotations advanced on SO(3).
    fn geometric(&self, rate: &Self::Rate, h: f64) -> Result<Self>;

    fn reorthonormalize(&mut self);

    /// `sum_i w_i * rates_i`.
    fn blend(rates: [&Self::Rate; 4], weights: [f64; 4]) -> Self::Rate;
}

impl Flow for ExtendedPose {
    type Rate = PoseRate;

    fn euler(&self, rate: &PoseRate, h: f64) -> Result<Self> {
        Ok(ExtendedPose {
            r: self.r + rate.r_dot * h,
            v: &self.v + &rate.v_dot * h,
        })
    }

    fn geometric(&self, rate: &PoseRate, h: f64) -> Result<Self> {
        // body-frame rate of the combined rotation vector field
        let body = vee(&(self.r.transpose() * rate.r_dot));
        Ok(ExtendedPose {
            r: self.r * so3_exp(&(body * h)),
            v: &self.v + &rate.v_dot * h,
        })
    }

    fn reorthonormalize(&mut self) {
        self.r = orthonormalize(&self.r);
    }

    fn blend(rates: [&PoseRate; 4], weights: [f64; 4]) -> PoseRate {
        let mut out = PoseRate::zeros(rates[0].v_dot.ncols());
        for (r, w) in rates.iter().zip(weights) {
            out.r_dot += r.r_dot * w;
            out.v_dot += &r.v_dot * w;
        }
        out
    }
}

impl Flow for AutomorphismState {
    type Rate = AuxiliaryRate;

    fn euler(&self, rate: &AuxiliaryRate, h: f64) -> Result<Self> {
        AutomorphismState::new(
            self.r() + rate.r_dot * h,
            self.v() + &rate.v_dot * h,
            self.a() + &rate.a_dot * h,
        )
    }

    fn geometric(&self, rate: &AuxiliaryRate, h: f64) -> Result<Self> {
        let body = vee(&(self.r().transpose() * rate.r_dot));
        AutomorphismState::new(
            self.r() * so3_exp(&(body * h)),
            self.v() + &rate.v_dot * h,
            self.a() + &rate.a_dot * h,
        )
    }

    fn reorthonormalize(&mut self) {
        if let Ok(z) = AutomorphismState::new(orthonormalize(self.r()), self.v().clone(), self.a().clone()) {
            *self = z;
        }
    }

    fn blend(rates: [&AuxiliaryRate; 4], weights: [f64; 4]) -> AuxiliaryRate {
        let k = rates[0].v_dot.ncols();
        let mut out = AuxiliaryRate {
            r_dot: Matrix3::zeros(),
            v_dot: Block::zeros(k),
            a_dot: nalgebra::DMatrix::zeros(k, k),
        };
        for (r, w) in rates.iter().zip(weights) {
            out.r_dot += r.r_dot * w;
            out.v_dot += &r.v_dot * w;
            out.a_dot += &r.a_dot * w;
        }
        out
    }
}

impl<A: Flow, B: Flow> Flow for (A, B) {
    type Rate = (A::Rate, B::Rate);

    fn euler(&self, rate: &Self::Rate, h: f64) -> Result<Self> {
        Ok((self.0.euler(&rate.0, h)?, self.1.euler(&rate.1, h)?))
    }

    fn geometric(&self, rate: &Self::Rate, h: f64) -> Result<Self> {
        Ok((self.0.geometric(&rate.0, h)?, self.1.geometric(&rate.1, h)?))
    }

    fn reorthonormalize(&mut self) {
        self.0.reorthonormalize();
        self.1.reorthonormalize();
    }

    fn blend(rates: [&Self::Rate; 4], weights: [f64; 4]) -> Self::Rate {
        (
            A::blend(rates.map(|r| &r.0), weights),
            B::blend(rates.map(|r| &r.1), weights),
        )
    }
}

/// Advances `state` by one step of length `dt`.
///
/// Raw Euler and RK4 act on matrix entries; with `reorthonormalize` set
/// the rotations are pulled back onto SO(3) afterwards.
pub fn step<S, F>(state: &S, mut deriv: F, dt: f64, method: Integrator, reorthonormalize: bool) -> Result<S>
where
    S: Flow,
    F: FnMut(&S) -> Result<S::Rate>,
{
    let mut next = match method {
        Integrator::Euler => state.euler(&deriv(state)?, dt)?,
        Integrator::GeometricEuler => return state.geometric(&deriv(state)?, dt),
        Integrator::Rk4 => {
            let k1 = deriv(state)?;
            let k2 = deriv(&state.euler(&k1, 0.5 * dt)?)?;
            let k3 = deriv(&state.euler(&k2, 0.5 * dt)?)?;
            let k4 = deriv(&state.euler(&k3, dt)?)?;
            let slope = S::blend([&k1, &k2, &k3, &k4], [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]);
            state.euler(&slope, dt)?
        }
    };
    if reorthonormalize {
        next.reorthonormalize();
    }
    Ok(next)
}

/// Inputs of the circular reference trajectory: yaw rate 1 rad/s and
/// a centripetal proper acceleration.
pub fn circular_input(g: f64) -> ImuInput {
    ImuInput::new(Vector3::z(), Vector3::new(-1.0, 0.0, -g))
}

/// Closed-form solution of the kinematics under [`circular_input`]:
/// a unit circle at height 1 m traversed at 1 m/s, with the reference landmarks.
pub fn circular_reference(t: f64, g: f64) -> (ExtendedPose, ImuInput) {
    let (s, c) = t.sin_cos();
    let mut v = Block::zeros(2 + REFERENCE_LANDMARKS.len());
    v.set_column(0, &Vector3::new(-s, c, 0.0));
    v.set_column(1, &Vector3::new(c, s, 1.0));
    for (i, p) in REFERENCE_LANDMARKS.iter().enumerate() {
        v.set_column(2 + i, &Vector3::from(*p));
    }
    (
        ExtendedPose::new(so3_exp(&Vector3::new(0.0, 0.0, t)), v),
        circular_input(g),
    )
}

/// Initial estimate of the reference scenario: attitude `exp(pi/4 (1,1,1)^)`,
/// all translations zero.
pub fn reference_estimate(n: usize) -> ExtendedPose {
    ExtendedPose::new(so3_exp(&(0.25 * PI * Vector3::new(1.0, 1.0, 1.0))), Block::zeros(n + 2))
}

/// Zero-order-hold table of IMU samples.
#[derive(Debug, Clone, PartialEq)]
pub struct InputTable {
    times: Vec<f64>,
    samples: Vec<ImuInput>,
}

impl InputTable {
    pub fn new(times: Vec<f64>, samples: Vec<ImuInput>) -> Result<Self> {
        if times.is_empty() || times.len() != samples.len() {
            return Err(Error::InvalidScenario(
                "input table needs one sample per time and at least one row".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidScenario(
                "input table times must be strictly increasing".into(),
            ));
        }
        Ok(InputTable { times, samples })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn samples(&self) -> &[ImuInput] {
        &self.samples
    }

    /// Sample with the largest time not after `t` (the first sample before the table starts).
    pub fn at(&self, t: f64) -> ImuInput {
        let idx = self.times.partition_point(|&s| s <= t + 1e-12);
        self.samples[idx.saturating_sub(1)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputProfile {
    Circular,
    Constant(ImuInput),
    Table(InputTable),
}

impl InputProfile {
    pub fn at(&self, t: f64, g: f64) -> ImuInput {
        match self {
            InputProfile::Circular => circular_input(g),
            InputProfile::Constant(u) => *u,
            InputProfile::Table(table) => table.at(t),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InputProfile::Circular => "circular",
            InputProfile::Constant(_) => "constant",
            InputProfile::Table(_) => "table",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n: usize,
    pub g: f64,
    pub duration_s: f64,
    pub rate_hz: f64,
    pub integrator: Integrator,
    pub reorthonormalize: bool,
    /// Evaluate `Z'` every step and fail if it leaves [`AUX_RATE_TOL`].
    pub check_auxiliary: bool,
    pub gains: Gains,
    pub true_init: ExtendedPose,
    pub est_init: ExtendedPose,
    pub input: InputProfile,
}

impl ScenarioConfig {
    /// Circular flight over five ground landmarks, 10 s of Euler at 500 Hz.
    pub fn paper_default() -> Self {
        let n = REFERENCE_LANDMARKS.len();
        ScenarioConfig {
            n,
            g: DEFAULT_GRAVITY,
            duration_s: 10.0,
            rate_hz: 500.0,
            integrator: Integrator::Euler,
            reorthonormalize: true,
            check_auxiliary: true,
            gains: Gains::REFERENCE,
            true_init: circular_reference(0.0, DEFAULT_GRAVITY).0,
            est_init: reference_estimate(n),
            input: InputProfile::Circular,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "duration_s must be non-negative, got {}",
                self.duration_s
            )));
        }
        if !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "rate_hz must be positive, got {}",
                self.rate_hz
            )));
        }
        for (name, pose) in [("true_init", &self.true_init), ("est_init", &self.est_init)] {
            if pose.cols() != self.n + 2 {
                return Err(Error::InvalidScenario(format!(
                    "{name} has {} landmarks, expected {}",
                    pose.cols().saturating_sub(2),
                    self.n
                )));
            }
            if !pose.is_finite() {
                return Err(Error::InvalidScenario(format!("{name} is not finite")));
            }
        }
        self.gains.validate(self.n)
    }

    pub fn steps(&self) -> usize {
        (self.duration_s * self.rate_hz + 1e-9).floor() as usize
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.rate_hz
    }
}

/// Sampled output of [`run_simulation`]; every list has one entry per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub times: Vec<f64>,
    pub true_states: Vec<ExtendedPose>,
    pub est_states: Vec<ExtendedPose>,
    pub metrics: Vec<ErrorMetrics>,
    /// `(L_V, L)` per sample.
    pub lyapunov: Vec<(f64, f64)>,
    /// `|Z'|` per sample when auxiliary checking is enabled, empty otherwise.
    pub aux_rate_norms: Vec<f64>,
}

impl TrajectoryLog {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n(&self) -> usize {
        self.true_states.first().map_or(0, |x| x.cols() - 2)
    }
}

/// Integrates the true system and the observer on a shared clock.
pub fn run_simulation(cfg: &ScenarioConfig) -> Result<TrajectoryLog> {
    cfg.validate()?;
    let sm = build_structural(cfg.n, cfg.g)?;
    let observer = Observer::new(cfg.gains, sm.clone())?;
    let cert = StabilityCertificate::new(&cfg.gains, &sm)?;
    let z = observer.auxiliary().clone();

    let steps = cfg.steps();
    let dt = cfg.dt();
    let mut log = TrajectoryLog {
        times: Vec::with_capacity(steps + 1),
        true_states: Vec::with_capacity(steps + 1),
        est_states: Vec::with_capacity(steps + 1),
        metrics: Vec::with_capacity(steps + 1),
        lyapunov: Vec::with_capacity(steps + 1),
        aux_rate_norms: Vec::new(),
    };

    let record = |log: &mut TrajectoryLog, t: f64, x: &ExtendedPose, x_hat: &ExtendedPose| -> Result<()> {
        let m = error_metrics(x, x_hat, &z, &sm, &cert)?;
        log.times.push(t);
        log.true_states.push(x.clone());
        log.est_states.push(x_hat.clone());
        log.lyapunov.push((m.lyap_v, m.lyap_l));
        log.metrics.push(m);
        Ok(())
    };

    let aux_check = |step_idx: usize, log: &mut TrajectoryLog| -> Result<()> {
        if cfg.check_auxiliary {
            let norm = observer.auxiliary_rate().norm();
            log.aux_rate_norms.push(norm);
            if !(norm < AUX_RATE_TOL) {
                return Err(Error::AuxiliaryDrift { step: step_idx, norm });
            }
        }
        Ok(())
    };

    let mut state = (cfg.true_init.clone(), cfg.est_init.clone());
    record(&mut log, 0.0, &state.0, &state.1)?;
    aux_check(0, &mut log)?;

    for k in 0..steps {
        let t = k as f64 * dt;
        let u = cfg.input.at(t, cfg.g);
        state = step(
            &state,
            |(x, x_hat): &(ExtendedPose, ExtendedPose)| {
                let y = measure(x, &sm)?;
                Ok((system_derivative(x, &u, &sm)?, observer.derivative(x_hat, &u, &y)?))
            },
            dt,
            cfg.integrator,
            cfg.reorthonormalize,
        )?;
        if !state.0.is_finite() || !state.1.is_finite() {
            return Err(Error::NonFiniteState(k + 1));
        }
        record(&mut log, (k + 1) as f64 * dt, &state.0, &state.1)?;
        aux_check(k + 1, &mut log)?;
    }
    Ok(log)
}
