//! The landmark-inertial SLAM system: structural matrices, kinematics,
//! landmark measurements, the reference-frame symmetry and the projection
//! onto the observable base space.

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::groups::{skew, Block, ExtendedPose, SimTangent, ROTATION_TOL};

/// Default gravitational acceleration [m/s^2].
pub const DEFAULT_GRAVITY: f64 = 9.81;

/// Gyroscope and accelerometer sample in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuInput {
    /// Angular velocity [rad/s].
    pub omega: Vector3<f64>,
    /// Proper acceleration [m/s^2].
    pub accel: Vector3<f64>,
}

impl ImuInput {
    pub fn new(omega: Vector3<f64>, accel: Vector3<f64>) -> Self {
        ImuInput { omega, accel }
    }
}

/// Body-frame landmark positions, one column per landmark [m].
pub type MeasurementSet = Block;

/// Time derivative of an [`ExtendedPose`], stored by blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseRate {
    pub r_dot: Matrix3<f64>,
    pub v_dot: Block,
}

impl PoseRate {
    pub fn zeros(k: usize) -> Self {
        PoseRate {
            r_dot: Matrix3::zeros(),
            v_dot: Block::zeros(k),
        }
    }

    /// Dense `(k+3)x(k+3)` form with a zero bottom block.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let k = self.v_dot.ncols();
        let mut m = DMatrix::zeros(k + 3, k + 3);
        m.view_mut((0, 0), (3, 3)).copy_from(&self.r_dot);
        m.view_mut((0, 3), (3, k)).copy_from(&self.v_dot);
        m
    }

    pub fn max_abs_diff(&self, other: &PoseRate) -> f64 {
        (self.r_dot - other.r_dot)
            .amax()
            .max((&self.v_dot - &other.v_dot).amax())
    }
}

/// Element of SE_{e3}(3): a yaw rotation and a translation of the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTransform {
    r_s: Matrix3<f64>,
    x_s: Vector3<f64>,
}

impl FrameTransform {
    pub fn new(r_s: Matrix3<f64>, x_s: Vector3<f64>) -> Result<Self> {
        crate::groups::Rotation::new(r_s)?;
        let dev = (r_s * Vector3::z() - Vector3::z()).norm();
        if dev > ROTATION_TOL {
            return Err(Error::NotIsotropy(dev));
        }
        Ok(FrameTransform { r_s, x_s })
    }

    pub fn identity() -> Self {
        FrameTransform {
            r_s: Matrix3::identity(),
            x_s: Vector3::zeros(),
        }
    }

    /// `(exp(yaw e3^), t)`.
    pub fn from_yaw(yaw: f64, t: Vector3<f64>) -> Self {
        let (s, c) = yaw.sin_cos();
        FrameTransform {
            r_s: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            x_s: t,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.r_s
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.x_s
    }

    /// Composition in SE(3): `(R1 R2, R1 x2 + x1)`.
    pub fn compose(&self, other: &FrameTransform) -> FrameTransform {
        FrameTransform {
            r_s: self.r_s * other.r_s,
            x_s: self.r_s * other.x_s + self.x_s,
        }
    }

    pub fn inverse(&self) -> FrameTransform {
        let rt = self.r_s.transpose();
        FrameTransform {
            r_s: rt,
            x_s: -(rt * self.x_s),
        }
    }
}

/// A point of the base space S^2 x (R^3)^{n+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseState {
    /// Gravity direction in the body frame.
    pub eta: Vector3<f64>,
    /// Body-frame velocity followed by the n body-frame relative landmark positions.
    pub v_o: Block,
}

impl BaseState {
    pub fn origin(n: usize) -> Self {
        BaseState {
            eta: Vector3::z(),
            v_o: Block::zeros(n + 1),
        }
    }
}

/// Constant matrices of the Lie-group form of the system for `n` landmarks.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralMatrices {
    pub n: usize,
    pub g: f64,
    /// Measurement selector, (n+2) x n.
    pub c: DMatrix<f64>,
    /// Base-space projector, (n+2) x (n+1).
    pub pi_mat: DMatrix<f64>,
    /// Measurement selector on base coordinates, (n+1) x n.
    pub c_prime: DMatrix<f64>,
    /// (n+2) x (n+2).
    pub s_n: DMatrix<f64>,
    /// (n+1) x (n+1).
    pub s_n_prime: DMatrix<f64>,
    /// Gravity block `(g e3, 0)`, 3 x (n+2).
    pub w_g: Block,
    /// `N = (0, 0, S_N)` as an element of sim_{n+2}(3).
    pub n_mat: SimTangent,
}

pub fn build_structural(n: usize, g: f64) -> Result<StructuralMatrices> {
    if n == 0 {
        return Err(Error::InvalidDimension(
            "at least one landmark is required".into(),
        ));
    }
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::InvalidScenario(format!("gravity must be positive, got {g}")));
    }
    let k = n + 2;

    let mut c = DMatrix::zeros(k, n);
    for i in 0..n {
        c[(1, i)] = 1.0;
        c[(2 + i, i)] = -1.0;
    }

    let mut pi_mat = DMatrix::zeros(k, n + 1);
    pi_mat[(0, 0)] = -1.0;
    for i in 0..n {
        pi_mat[(1, 1 + i)] = 1.0;
        pi_mat[(2 + i, 1 + i)] = -1.0;
    }

    let mut c_prime = DMatrix::zeros(n + 1, n);
    for i in 0..n {
        c_prime[(1 + i, i)] = 1.0;
    }

    let mut s_n = DMatrix::zeros(k, k);
    s_n[(0, 1)] = -1.0;

    let mut s_n_prime = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        s_n_prime[(0, 1 + i)] = 1.0;
    }

    let mut w_g = Block::zeros(k);
    w_g[(2, 0)] = g;

    let n_mat = SimTangent {
        omega: Vector3::zeros(),
        w: Block::zeros(k),
        s: s_n.clone(),
    };

    Ok(StructuralMatrices {
        n,
        g,
        c,
        pi_mat,
        c_prime,
        s_n,
        s_n_prime,
        w_g,
        n_mat,
    })
}

impl StructuralMatrices {
    /// Number of translation columns, n + 2.
    pub fn cols(&self) -> usize {
        self.n + 2
    }

    pub fn check_pose(&self, x: &ExtendedPose) -> Result<()> {
        if x.cols() != self.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                found: x.cols(),
            });
        }
        Ok(())
    }

    /// Dense input matrix `U = [[Omega^, (a 0)], [0, 0]]`.
    pub fn input_matrix(&self, u: &ImuInput) -> DMatrix<f64> {
        let k = self.cols();
        let mut m = DMatrix::zeros(k + 3, k + 3);
        m.view_mut((0, 0), (3, 3)).copy_from(&skew(&u.omega));
        m.view_mut((0, 3), (3, 1)).copy_from(&u.accel);
        m
    }

    /// Dense gravity matrix `G = [[0, W_G], [0, 0]]`.
    pub fn gravity_matrix(&self) -> DMatrix<f64> {
        let k = self.cols();
        let mut m = DMatrix::zeros(k + 3, k + 3);
        m.view_mut((0, 3), (3, k)).copy_from(&self.w_g);
        m
    }

    /// Dense `N = [[0, 0], [0, S_N]]`.
    pub fn n_matrix(&self) -> DMatrix<f64> {
        self.n_mat.to_matrix()
    }
}

/// Kinematics `R' = R Omega^, v' = R a + g e3, x' = v, p_i' = 0`.
pub fn system_derivative(
    x: &ExtendedPose,
    u: &ImuInput,
    sm: &StructuralMatrices,
) -> Result<PoseRate> {
    sm.check_pose(x)?;
    let mut v_dot = Block::zeros(sm.cols());
    v_dot.set_column(0, &(x.r * u.accel + Vector3::new(0.0, 0.0, sm.g)));
    v_dot.set_column(1, &x.v.column(0));
    Ok(PoseRate {
        r_dot: x.r * skew(&u.omega),
        v_dot,
    })
}

/// Matrix form `X U + G X + [N, X]` of the kinematics.
pub fn system_derivative_matrix(
    x: &ExtendedPose,
    u: &ImuInput,
    sm: &StructuralMatrices,
) -> Result<DMatrix<f64>> {
    sm.check_pose(x)?;
    let xm = x.to_matrix();
    let n = sm.n_matrix();
    Ok(&xm * sm.input_matrix(u) + sm.gravity_matrix() * &xm + &n * &xm - &xm * &n)
}

/// Landmark measurements `y_i = R^T (p_i - x)`.
pub fn measure(x: &ExtendedPose, sm: &StructuralMatrices) -> Result<MeasurementSet> {
    sm.check_pose(x)?;
    let rt = x.r.transpose();
    let pos = x.v.column(1);
    Ok(MeasurementSet::from_fn(sm.n, |row, i| {
        (rt * (x.v.column(2 + i) - pos))[row]
    }))
}

/// Right action of SE_{e3}(3) on the total space (change of inertial frame).
pub fn apply_frame_action(s: &FrameTransform, x: &ExtendedPose) -> ExtendedPose {
    let rt = s.r_s.transpose();
    let mut v = x.v.clone();
    for j in 1..x.cols() {
        let shifted = v.column(j) - s.x_s;
        v.set_column(j, &shifted);
    }
    ExtendedPose {
        r: rt * x.r,
        v: rt * v,
    }
}

/// Projection `pi(X) = (R^T e3, -R^T V Pi)` onto the base space.
pub fn project_base(x: &ExtendedPose, sm: &StructuralMatrices) -> Result<BaseState> {
    sm.check_pose(x)?;
    let rt = x.r.transpose();
    Ok(BaseState {
        eta: rt * Vector3::z(),
        v_o: -(rt * &x.v * &sm.pi_mat),
    })
}
