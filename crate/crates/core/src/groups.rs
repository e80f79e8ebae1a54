//! Dense kernels for SO(3), the extended pose group SE_k(3) and the
//! similarity-type group SIM_k(3) used as automorphisms of SE_k(3).
//!
//! Elements are stored by blocks. A pose `(R, V)` stands for the
//! `(k+3)x(k+3)` matrix `[[R, V], [0, I_k]]` and an automorphism
//! `(R, V, A)` for `[[R, V], [0, A]]`. The block formulas are checked
//! against dense multiplication in the tests.

use nalgebra::{DMatrix, Matrix3, Matrix3xX, Vector3};

use crate::error::{Error, Result};

/// 3 x k block of column vectors (velocities, positions).
pub type Block = Matrix3xX<f64>;

/// Tolerance used when validating rotation matrices.
pub const ROTATION_TOL: f64 = 1e-9;

/// Rodrigues switches to the truncated series below this angle.
pub const SMALL_ANGLE: f64 = 1e-8;

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

pub fn unskew(m: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let asym = (m + m.transpose()).norm();
    if asym >= 1e-9 {
        return Err(Error::NotAntisymmetric(asym));
    }
    Ok(vee(m))
}

/// Vector part of the antisymmetric projection of `m`.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Rotation matrix `exp(v^)` by the Rodrigues formula.
pub fn so3_exp(v: &Vector3<f64>) -> Matrix3<f64> {
    let theta = v.norm();
    let k = skew(v);
    let k2 = k * k;
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - theta * theta / 6.0, 0.5 - theta * theta / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    };
    Matrix3::identity() + k * a + k2 * b
}

/// Pulls a near-rotation back onto SO(3) with three Newton steps of the
/// polar iteration `R <- (R + R^-T) / 2`.
pub fn orthonormalize(r: &Matrix3<f64>) -> Matrix3<f64> {
    let mut out = *r;
    for _ in 0..3 {
        match out.try_inverse() {
            Some(inv) => out = 0.5 * (out + inv.transpose()),
            None => break,
        }
    }
    out
}

/// Frobenius distance of `r` from orthonormality, `|R^T R - I|`.
pub fn orthonormality_residual(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).norm()
}

/// Validated element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let res = orthonormality_residual(&m);
        let det = m.determinant();
        if !m.iter().all(|x| x.is_finite()) || res > ROTATION_TOL || (det - 1.0).abs() > ROTATION_TOL
        {
            return Err(Error::NotRotation(res.max((det - 1.0).abs())));
        }
        Ok(Rotation(m))
    }

    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    pub fn exp(v: &Vector3<f64>) -> Self {
        Rotation(so3_exp(v))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Matrix3<f64> {
        self.0
    }
}

/// Element `(R, V)` of SE_k(3) with `V` of shape 3 x k.
///
/// For the SLAM state `k = n + 2` and the columns of `V` are
/// `(v, x, p_1, .., p_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedPose {
    pub r: Matrix3<f64>,
    pub v: Block,
}

impl ExtendedPose {
    pub fn new(r: Matrix3<f64>, v: Block) -> Self {
        ExtendedPose { r, v }
    }

    pub fn identity(k: usize) -> Self {
        ExtendedPose {
            r: Matrix3::identity(),
            v: Block::zeros(k),
        }
    }

    /// Number of translation columns.
    pub fn cols(&self) -> usize {
        self.v.ncols()
    }

    pub fn compose(&self, other: &ExtendedPose) -> Result<ExtendedPose> {
        check_dim(self.cols(), other.cols())?;
        Ok(ExtendedPose {
            r: self.r * other.r,
            v: self.r * &other.v + &self.v,
        })
    }

    pub fn inverse(&self) -> ExtendedPose {
        let rt = self.r.transpose();
        ExtendedPose {
            v: -(rt * &self.v),
            r: rt,
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let k = self.cols();
        let mut m = DMatrix::identity(k + 3, k + 3);
        m.view_mut((0, 0), (3, 3)).copy_from(&self.r);
        m.view_mut((0, 3), (3, k)).copy_from(&self.v);
        m
    }

    /// Reads the rotation and translation blocks of a dense group matrix.
    /// The bottom rows are not inspected.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<ExtendedPose> {
        if m.nrows() != m.ncols() || m.nrows() < 3 {
            return Err(Error::InvalidDimension(format!(
                "expected square matrix of size >= 3, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let k = m.nrows() - 3;
        Ok(ExtendedPose {
            r: m.fixed_view::<3, 3>(0, 0).into_owned(),
            v: Block::from_iterator(k, m.view((0, 3), (3, k)).iter().copied()),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.r.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }

    /// Frobenius distance between two poses of the same size.
    pub fn distance(&self, other: &ExtendedPose) -> f64 {
        ((self.r - other.r).norm_squared() + (&self.v - &other.v).norm_squared()).sqrt()
    }
}

/// Element `(Omega, W)` of the Lie algebra se_k(3).
#[derive(Debug, Clone, PartialEq)]
pub struct SeTangent {
    pub omega: Vector3<f64>,
    pub w: Block,
}

impl SeTangent {
    pub fn zero(k: usize) -> Self {
        SeTangent {
            omega: Vector3::zeros(),
            w: Block::zeros(k),
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let k = self.w.ncols();
        let mut m = DMatrix::zeros(k + 3, k + 3);
        m.view_mut((0, 0), (3, 3)).copy_from(&skew(&self.omega));
        m.view_mut((0, 3), (3, k)).copy_from(&self.w);
        m
    }
}

/// Element `(R_Z, V_Z, A_Z)` of SIM_k(3).
#[derive(Debug, Clone, PartialEq)]
pub struct AutomorphismState {
    r: Matrix3<f64>,
    v: Block,
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
}

impl AutomorphismState {
    pub fn new(r: Matrix3<f64>, v: Block, a: DMatrix<f64>) -> Result<Self> {
        let k = v.ncols();
        if a.nrows() != k || a.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: a.nrows(),
            });
        }
        if a.determinant().abs() <= 1e-12 {
            return Err(Error::Singular);
        }
        let a_inv = a.clone().lu().try_inverse().ok_or(Error::Singular)?;
        Ok(AutomorphismState { r, v, a, a_inv })
    }

    pub fn identity(k: usize) -> Self {
        AutomorphismState {
            r: Matrix3::identity(),
            v: Block::zeros(k),
            a: DMatrix::identity(k, k),
            a_inv: DMatrix::identity(k, k),
        }
    }

    pub fn r(&self) -> &Matrix3<f64> {
        &self.r
    }

    pub fn v(&self) -> &Block {
        &self.v
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn a_inv(&self) -> &DMatrix<f64> {
        &self.a_inv
    }

    pub fn cols(&self) -> usize {
        self.v.ncols()
    }

    pub fn compose(&self, other: &AutomorphismState) -> Result<AutomorphismState> {
        check_dim(self.cols(), other.cols())?;
        AutomorphismState::new(
            self.r * other.r,
            self.r * &other.v + &self.v * &other.a,
            &self.a * &other.a,
        )
    }

    pub fn inverse(&self) -> AutomorphismState {
        let rt = self.r.transpose();
        AutomorphismState {
            v: -(rt * &self.v * &self.a_inv),
            r: rt,
            a: self.a_inv.clone(),
            a_inv: self.a.clone(),
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let k = self.cols();
        let mut m = DMatrix::zeros(k + 3, k + 3);
        m.view_mut((0, 0), (3, 3)).copy_from(&self.r);
        m.view_mut((0, 3), (3, k)).copy_from(&self.v);
        m.view_mut((3, 3), (k, k)).copy_from(&self.a);
        m
    }

    /// The automorphism `sigma_Z(X) = Z X Z^-1` of SE_k(3).
    pub fn conjugate(&self, x: &ExtendedPose) -> Result<ExtendedPose> {
        check_dim(self.cols(), x.cols())?;
        let r = self.r * x.r * self.r.transpose();
        let v = (self.r * &x.v + &self.v - r * &self.v) * &self.a_inv;
        Ok(ExtendedPose { r, v })
    }

    pub fn is_finite(&self) -> bool {
        self.r
            .iter()
            .chain(self.v.iter())
            .chain(self.a.iter())
            .all(|x| x.is_finite())
    }
}

/// Element `(Omega, W, S)` of the Lie algebra sim_k(3).
#[derive(Debug, Clone, PartialEq)]
pub struct SimTangent {
    pub omega: Vector3<f64>,
    pub w: Block,
    pub s: DMatrix<f64>,
}

impl SimTangent {
    pub fn zero(k: usize) -> Self {
        SimTangent {
            omega: Vector3::zeros(),
            w: Block::zeros(k),
            s: DMatrix::zeros(k, k),
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let k = self.w.ncols();
        let mut m = DMatrix::zeros(k + 3, k + 3);
        m.view_mut((0, 0), (3, 3)).copy_from(&skew(&self.omega));
        m.view_mut((0, 3), (3, k)).copy_from(&self.w);
        m.view_mut((3, 3), (k, k)).copy_from(&self.s);
        m
    }
}

/// Weighted squared norm `|A|_P^2 = tr(A P A^T)` for symmetric positive
/// definite `P`.
pub fn weighted_norm_sq(a: &Block, p: &DMatrix<f64>) -> Result<f64> {
    if p.nrows() != a.ncols() || p.ncols() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            found: p.nrows(),
        });
    }
    if (p - p.transpose()).norm() > 1e-9 || p.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(weighted_norm_sq_unchecked(a, p))
}

pub(crate) fn weighted_norm_sq_unchecked(a: &Block, p: &DMatrix<f64>) -> f64 {
    (a * p * a.transpose()).trace()
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
