//! Synchronous observer with a constant auxiliary state.
//!
//! The observer integrates only the estimate `X_hat`. The auxiliary state
//! `Z = (I, V_Z, I)` is fixed at construction and the correction `Gamma`
//! is chosen so that `Z' = 0`; [`auxiliary_derivative`] evaluates `Z'`
//! so that constancy can be checked rather than assumed.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::groups::{skew, AutomorphismState, Block, ExtendedPose, SeTangent, SimTangent};
use crate::slam::{measure, ImuInput, MeasurementSet, PoseRate, StructuralMatrices};

/// Observer gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub k_r: f64,
    pub k_v: f64,
    pub k_x: f64,
    pub k_p: f64,
}

impl Gains {
    pub const REFERENCE: Gains = Gains {
        k_r: 2.0,
        k_v: 2.0,
        k_x: 1.0,
        k_p: 4.0,
    };

    /// Checks `k_r > 0`, `k_v > 0`, `k_p > 0` and `k_p + n k_x > 0`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let fields = [("k_r", self.k_r), ("k_v", self.k_v), ("k_x", self.k_x), ("k_p", self.k_p)];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::GainConditionViolated(format!("{name} must be finite")));
            }
        }
        for (name, value) in [("k_r", self.k_r), ("k_v", self.k_v), ("k_p", self.k_p)] {
            if value <= 0.0 {
                return Err(Error::GainConditionViolated(format!(
                    "{name} > 0 required, got {value}"
                )));
            }
        }
        let sum = self.k_p + n as f64 * self.k_x;
        if sum <= 0.0 {
            return Err(Error::GainConditionViolated(format!(
                "k_p + n*k_x > 0 required, got {sum} for n = {n}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrices {
    /// `(-k_v 1_n, -k_x 1_n, k_p I_n)`, n x (n+2).
    pub k: DMatrix<f64>,
    /// (n+2) x (n+2), nonzero only in its second row.
    pub k_z: DMatrix<f64>,
}

impl GainMatrices {
    pub fn new(gains: &Gains, n: usize) -> Result<Self> {
        gains.validate(n)?;
        let mut k = DMatrix::zeros(n, n + 2);
        let mut k_z = DMatrix::zeros(n + 2, n + 2);
        for i in 0..n {
            k[(i, 0)] = -gains.k_v;
            k[(i, 1)] = -gains.k_x;
            k[(i, 2 + i)] = gains.k_p;
        }
        for j in 1..n + 2 {
            k_z[(1, j)] = -gains.k_p;
        }
        Ok(GainMatrices { k, k_z })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionTerms {
    pub omega_delta: Vector3<f64>,
    pub w_delta: Block,
    pub w_gamma: Block,
}

impl CorrectionTerms {
    pub fn delta(&self) -> SeTangent {
        SeTangent {
            omega: self.omega_delta,
            w: self.w_delta.clone(),
        }
    }
}

/// Time derivative of an [`AutomorphismState`].
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryRate {
    pub r_dot: Matrix3<f64>,
    pub v_dot: Block,
    pub a_dot: DMatrix<f64>,
}

impl AuxiliaryRate {
    pub fn norm(&self) -> f64 {
        (self.r_dot.norm_squared() + self.v_dot.norm_squared() + self.a_dot.norm_squared()).sqrt()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let k = self.v_dot.ncols();
        let mut m = DMatrix::zeros(k + 3, k + 3);
        m.view_mut((0, 0), (3, 3)).copy_from(&self.r_dot);
        m.view_mut((0, 3), (3, k)).copy_from(&self.v_dot);
        m.view_mut((3, 3), (k, k)).copy_from(&self.a_dot);
        m
    }
}

/// Constant auxiliary state `Z = (I, V_Z, I)` with
/// `V_Z = -W_G (C K + K_Z - S_N)^-1`.
///
/// The linear solve is cross-checked against the closed form
/// `v_Z = (k_p + n k_x) g / (n k_v) e3`, `x_Z = g / (n k_v) e3`.
pub fn init_auxiliary(gains: &Gains, sm: &StructuralMatrices) -> Result<AutomorphismState> {
    let gm = GainMatrices::new(gains, sm.n)?;
    let k = sm.cols();
    let m = &sm.c * &gm.k + &gm.k_z - &sm.s_n;
    // V_Z M = -W_G  <=>  M^T V_Z^T = -W_G^T
    let rhs = -sm.w_g.transpose();
    let solved = m
        .transpose()
        .lu()
        .solve(&rhs)
        .ok_or(Error::Singular)?
        .transpose();
    let v_z = Block::from_iterator(k, solved.iter().copied());

    let closed = closed_form_v_z(gains, sm);
    let gap = (&v_z - &closed).amax();
    if gap > 1e-9 {
        return Err(Error::GainConditionViolated(format!(
            "auxiliary solve disagrees with closed form by {gap:e}"
        )));
    }
    AutomorphismState::new(Matrix3::identity(), v_z, DMatrix::identity(k, k))
}

fn closed_form_v_z(gains: &Gains, sm: &StructuralMatrices) -> Block {
    let n = sm.n as f64;
    let mut v_z = Block::zeros(sm.cols());
    v_z[(2, 0)] = (gains.k_p + n * gains.k_x) * sm.g / (n * gains.k_v);
    v_z[(2, 1)] = sm.g / (n * gains.k_v);
    v_z
}

/// Residual `W_G + V_Z (C K + K_Z - S_N)`, zero when `V_Z` is a rest point.
pub fn auxiliary_residual(z: &AutomorphismState, gm: &GainMatrices, sm: &StructuralMatrices) -> Block {
    let m = &sm.c * &gm.k + &gm.k_z - &sm.s_n;
    &sm.w_g + z.v() * m
}

/// `W_Gamma = -V_Z (C K + K_Z)`.
pub fn gamma_translation(z: &AutomorphismState, gm: &GainMatrices, sm: &StructuralMatrices) -> Block {
    -(z.v() * (&sm.c * &gm.k + &gm.k_z))
}

/// Correction terms for measurements `y` and estimate `x_hat`.
///
/// `Omega_Delta = k_R e3^ R_hat (Y - Y_hat) 1_n` and
/// `W_Delta = R_hat (Y - Y_hat) K`; the estimated measurements are
/// recomputed from `x_hat`.
pub fn correction_terms(
    y: &MeasurementSet,
    x_hat: &ExtendedPose,
    z: &AutomorphismState,
    gm: &GainMatrices,
    gains: &Gains,
    sm: &StructuralMatrices,
) -> Result<CorrectionTerms> {
    if y.ncols() != sm.n {
        return Err(Error::DimensionMismatch {
            expected: sm.n,
            found: y.ncols(),
        });
    }
    let y_hat = measure(x_hat, sm)?;
    let innovation = x_hat.r * (y - y_hat);
    let ones = DVector::from_element(sm.n, 1.0);
    let omega_delta = gains.k_r * skew(&Vector3::z()) * (&innovation * ones);
    Ok(CorrectionTerms {
        omega_delta: Vector3::new(omega_delta[0], omega_delta[1], omega_delta[2]),
        w_delta: &innovation * &gm.k,
        w_gamma: gamma_translation(z, gm, sm),
    })
}

/// Observer vector field `X_hat U + G X_hat + [N, X_hat] + Z Delta Z^-1 X_hat`
/// evaluated by blocks.
pub fn observer_derivative(
    x_hat: &ExtendedPose,
    u: &ImuInput,
    ct: &CorrectionTerms,
    z: &AutomorphismState,
    sm: &StructuralMatrices,
) -> Result<PoseRate> {
    let mut rate = crate::slam::system_derivative(x_hat, u, sm)?;
    if ct.w_delta.ncols() != sm.cols() {
        return Err(Error::DimensionMismatch {
            expected: sm.cols(),
            found: ct.w_delta.ncols(),
        });
    }
    // Z Delta Z^-1 = [[(R_Z w)^, (R_Z W - (R_Z w)^ V_Z) A_Z^-1], [0, 0]]
    let w = skew(&(z.r() * ct.omega_delta));
    let trans = (z.r() * &ct.w_delta - w * z.v()) * z.a_inv();
    rate.r_dot += w * x_hat.r;
    rate.v_dot += w * &x_hat.v + trans;
    Ok(rate)
}

/// Dense matrix form of [`observer_derivative`].
pub fn observer_derivative_matrix(
    x_hat: &ExtendedPose,
    u: &ImuInput,
    ct: &CorrectionTerms,
    z: &AutomorphismState,
    sm: &StructuralMatrices,
) -> Result<DMatrix<f64>> {
    let base = crate::slam::system_derivative_matrix(x_hat, u, sm)?;
    let conj = z.to_matrix() * ct.delta().to_matrix() * z.inverse().to_matrix();
    Ok(base + conj * x_hat.to_matrix())
}

/// `Z' = (G + N) Z - Z Gamma` for an arbitrary correction `Gamma`.
pub fn auxiliary_derivative_with(
    z: &AutomorphismState,
    gamma: &SimTangent,
    sm: &StructuralMatrices,
) -> Result<AuxiliaryRate> {
    if z.cols() != sm.cols() || gamma.w.ncols() != sm.cols() {
        return Err(Error::DimensionMismatch {
            expected: sm.cols(),
            found: z.cols().min(gamma.w.ncols()),
        });
    }
    Ok(AuxiliaryRate {
        r_dot: -(z.r() * skew(&gamma.omega)),
        v_dot: &sm.w_g * z.a() - z.r() * &gamma.w - z.v() * &gamma.s,
        a_dot: &sm.s_n * z.a() - z.a() * &gamma.s,
    })
}

/// `Z'` under the constant-Z correction `Gamma = (0, W_Gamma, S_N)`.
pub fn auxiliary_derivative(
    z: &AutomorphismState,
    ct: &CorrectionTerms,
    sm: &StructuralMatrices,
) -> Result<AuxiliaryRate> {
    let gamma = SimTangent {
        omega: Vector3::zeros(),
        w: ct.w_gamma.clone(),
        s: sm.s_n.clone(),
    };
    auxiliary_derivative_with(z, &gamma, sm)
}

/// Immutable observer configuration: gains, structural matrices and the
/// constant auxiliary state.
#[derive(Debug, Clone)]
pub struct Observer {
    gains: Gains,
    sm: StructuralMatrices,
    gm: GainMatrices,
    z: AutomorphismState,
    w_gamma: Block,
}

impl Observer {
    pub fn new(gains: Gains, sm: StructuralMatrices) -> Result<Self> {
        let gm = GainMatrices::new(&gains, sm.n)?;
        let z = init_auxiliary(&gains, &sm)?;
        let w_gamma = gamma_translation(&z, &gm, &sm);
        Ok(Observer {
            gains,
            sm,
            gm,
            z,
            w_gamma,
        })
    }

    pub fn gains(&self) -> &Gains {
        &self.gains
    }

    pub fn structural(&self) -> &StructuralMatrices {
        &self.sm
    }

    pub fn gain_matrices(&self) -> &GainMatrices {
        &self.gm
    }

    pub fn auxiliary(&self) -> &AutomorphismState {
        &self.z
    }

    pub fn w_gamma(&self) -> &Block {
        &self.w_gamma
    }

    /// Correction terms, reusing the cached `W_Gamma`.
    pub fn correction(&self, y: &MeasurementSet, x_hat: &ExtendedPose) -> Result<CorrectionTerms> {
        if y.ncols() != self.sm.n {
            return Err(Error::DimensionMismatch {
                expected: self.sm.n,
                found: y.ncols(),
            });
        }
        let innovation = x_hat.r * (y - measure(x_hat, &self.sm)?);
        let sum: Vector3<f64> = innovation.column_sum();
        Ok(CorrectionTerms {
            omega_delta: self.gains.k_r * Vector3::z().cross(&sum),
            w_delta: &innovation * &self.gm.k,
            w_gamma: self.w_gamma.clone(),
        })
    }

    pub fn derivative(
        &self,
        x_hat: &ExtendedPose,
        u: &ImuInput,
        y: &MeasurementSet,
    ) -> Result<PoseRate> {
        let ct = self.correction(y, x_hat)?;
        observer_derivative(x_hat, u, &ct, &self.z, &self.sm)
    }

    pub fn auxiliary_rate(&self) -> AuxiliaryRate {
        let ct = CorrectionTerms {
            omega_delta: Vector3::zeros(),
            w_delta: Block::zeros(self.sm.cols()),
            w_gamma: self.w_gamma.clone(),
        };
        auxiliary_derivative(&self.z, &ct, &self.sm).expect("dimensions fixed at construction")
    }
}
