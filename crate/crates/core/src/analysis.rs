//! Error coordinates, stability certificates and reporting metrics.

use nalgebra::linalg::Schur;
use nalgebra::{Complex, DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::groups::{weighted_norm_sq_unchecked, AutomorphismState, Block, ExtendedPose};
use crate::observer::{GainMatrices, Gains};
use crate::slam::{apply_frame_action, project_base, BaseState, FrameTransform, StructuralMatrices};

/// Eigenvalues must have real part below this to count as stable.
pub const HURWITZ_MARGIN: f64 = -1e-9;

/// Constant data certifying exponential stability of the translational error.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCertificate {
    /// `A = C' K Pi - S'_N`, (n+1) x (n+1).
    pub a_mat: DMatrix<f64>,
    /// Solution of `A P + P A^T = -I`.
    pub p_mat: DMatrix<f64>,
    /// Weight `2 n k_v k_R / g` of the translational term in the full Lyapunov function.
    pub q: f64,
    /// Eigenvalues of `A`, sorted by real then imaginary part.
    pub eigenvalues: Vec<Complex<f64>>,
    /// Linearised decay rate `k_R g / k_v` of the reduced attitude.
    pub local_rate: f64,
}

impl StabilityCertificate {
    pub fn new(gains: &Gains, sm: &StructuralMatrices) -> Result<Self> {
        let gm = GainMatrices::new(gains, sm.n)?;
        let a_mat = stability_matrix(&gm, sm);
        let eigenvalues = eigenvalues(&a_mat)?;
        let p_mat = solve_lyapunov(&a_mat)?;
        Ok(StabilityCertificate {
            a_mat,
            p_mat,
            q: 2.0 * sm.n as f64 * gains.k_v * gains.k_r / sm.g,
            eigenvalues,
            local_rate: gains.k_r * sm.g / gains.k_v,
        })
    }

    /// `|A P + P A^T + I|_F`.
    pub fn lyapunov_residual(&self) -> f64 {
        lyapunov_residual(&self.a_mat, &self.p_mat)
    }

    pub fn p_min_eigenvalue(&self) -> f64 {
        self.p_mat.clone().symmetric_eigen().eigenvalues.min()
    }
}

/// `A = C' K Pi - S'_N`.
pub fn stability_matrix(gm: &GainMatrices, sm: &StructuralMatrices) -> DMatrix<f64> {
    &sm.c_prime * &gm.k * &sm.pi_mat - &sm.s_n_prime
}

/// Deflation tolerances tried in turn by [`eigenvalues`]. Machine epsilon
/// alone can stall the QR iteration on clusters of repeated eigenvalues,
/// which `A` has by construction.
const SCHUR_TOLERANCES: [f64; 4] = [f64::EPSILON, 1e-14, 1e-12, 1e-10];
const SCHUR_MAX_ITER: usize = 10_000;

/// Eigenvalues of a real square matrix, sorted by (re, im).
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if a.ncols() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if !a.iter().all(|x| x.is_finite()) {
        return Err(Error::EigenNoConvergence);
    }
    let schur = SCHUR_TOLERANCES
        .iter()
        .find_map(|&eps| Schur::try_new(a.clone(), eps, SCHUR_MAX_ITER))
        .ok_or(Error::EigenNoConvergence)?;
    let mut eig: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|l, r| l.re.total_cmp(&r.re).then(l.im.total_cmp(&r.im)));
    Ok(eig)
}

/// Whether every eigenvalue has real part below [`HURWITZ_MARGIN`].
pub fn is_hurwitz(a: &DMatrix<f64>) -> Result<bool> {
    Ok(max_real_part(a)? < HURWITZ_MARGIN)
}

fn max_real_part(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Coefficients of `det(sI - A)`, highest degree first (leading 1).
///
/// `A` is first reduced to upper Hessenberg form by orthogonal similarity;
/// the determinant of `sI - H` is then expanded along the last column with
/// the usual recurrence over leading principal minors.
pub fn characteristic_polynomial(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    if n == 0 {
        return vec![1.0];
    }
    let h = a.clone().hessenberg().h();
    // p[i] holds det(sI - H[..i, ..i]) with coefficients lowest degree first.
    let mut p: Vec<Vec<f64>> = vec![vec![1.0]];
    for i in 0..n {
        // (s - h_ii) p_i
        let prev = &p[i];
        let mut next = vec![0.0; i + 2];
        for (d, c) in prev.iter().enumerate() {
            next[d + 1] += c;
            next[d] -= h[(i, i)] * c;
        }
        // - sum_m h_{i-m,i} (prod of subdiagonal) p_{i-m}
        let mut sub = 1.0;
        for m in 1..=i {
            sub *= h[(i - m + 1, i - m)];
            let w = h[(i - m, i)] * sub;
            if w != 0.0 {
                for (d, c) in p[i - m].iter().enumerate() {
                    next[d] -= w * c;
                }
            }
        }
        p.push(next);
    }
    let mut coeffs = p.pop().unwrap_or_else(|| vec![1.0]);
    coeffs.reverse();
    coeffs
}

/// Solves `A P + P A^T = -I` for Hurwitz `A`.
///
/// The equation is vectorised as `(I (x) A + A (x) I) vec(P) = -vec(I)` and
/// solved by LU; the result is symmetrised.
pub fn solve_lyapunov(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    let max_re = max_real_part(a)?;
    if !(max_re < HURWITZ_MARGIN) {
        return Err(Error::NotHurwitz(max_re));
    }
    let id = DMatrix::<f64>::identity(n, n);
    let op = id.kronecker(a) + a.kronecker(&id);
    let rhs = -DVector::from_column_slice(id.as_slice());
    let vec_p = op.lu().solve(&rhs).ok_or(Error::Singular)?;
    let p = DMatrix::from_column_slice(n, n, vec_p.as_slice());
    Ok((&p + p.transpose()) * 0.5)
}

pub fn lyapunov_residual(a: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    (a * p + p * a.transpose() + DMatrix::<f64>::identity(n, n)).norm()
}

/// Total-space error `E = Z^-1 X X_hat^-1 Z`.
pub fn total_error(x: &ExtendedPose, x_hat: &ExtendedPose, z: &AutomorphismState) -> Result<ExtendedPose> {
    let rel = x.compose(&x_hat.inverse())?;
    z.inverse().conjugate(&rel)
}

/// Base-space error `pi(E) = (eta_e, V_e^o)`.
pub fn base_error(e_bar: &ExtendedPose, sm: &StructuralMatrices) -> Result<BaseState> {
    project_base(e_bar, sm)
}

/// Translational Lyapunov function `|V_e^o|_P^2`.
pub fn lyapunov_translation(v_o: &Block, cert: &StabilityCertificate) -> f64 {
    weighted_norm_sq_unchecked(v_o, &cert.p_mat)
}

/// Full Lyapunov function `1/2 |eta_e - e3|^2 + q |V_e^o|_P^2`.
pub fn lyapunov_full(base: &BaseState, cert: &StabilityCertificate) -> Result<f64> {
    let norm = base.eta.norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::NotUnitVector(norm));
    }
    Ok(0.5 * (base.eta - Vector3::z()).norm_squared() + cert.q * lyapunov_translation(&base.v_o, cert))
}

/// Yaw and translation that undo the unobservable frame offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentTransform {
    /// Yaw in `[0, 2 pi)` [rad].
    pub theta: f64,
    pub t: Vector3<f64>,
}

impl AlignmentTransform {
    pub fn frame(&self) -> FrameTransform {
        FrameTransform::from_yaw(self.theta, self.t)
    }
}

/// Re-expresses `x_hat` in the true frame using the yaw and position offset
/// carried by the total error `e_bar`.
pub fn align_estimate(
    x_hat: &ExtendedPose,
    e_bar: &ExtendedPose,
) -> Result<(AlignmentTransform, ExtendedPose)> {
    let (c, s) = (e_bar.r[(0, 0)], e_bar.r[(1, 0)]);
    if c * c + s * s < 1e-12 {
        return Err(Error::YawDegenerate);
    }
    let mut theta = s.atan2(c);
    if theta < 0.0 {
        theta += std::f64::consts::TAU;
    }
    if theta >= std::f64::consts::TAU {
        theta = 0.0;
    }
    let align = AlignmentTransform {
        theta,
        t: e_bar.v.column(1).into_owned(),
    };
    let aligned = apply_frame_action(&align.frame().inverse(), x_hat);
    Ok((align, aligned))
}

/// ZYX Euler angles `(roll, pitch, yaw)` of a rotation matrix.
pub fn euler_zyx(r: &Matrix3<f64>) -> (f64, f64, f64) {
    let pitch = (-r[(2, 0)]).clamp(-1.0, 1.0).asin();
    let roll = r[(2, 1)].atan2(r[(2, 2)]);
    let yaw = r[(1, 0)].atan2(r[(0, 0)]);
    (roll, pitch, yaw)
}

/// Per-sample error summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMetrics {
    /// `arccos(e3 . eta_e)` [rad].
    pub att_reduced: f64,
    /// `|R^T v - R_hat^T v_hat|` [m/s].
    pub vel_body: f64,
    /// `|R^T (p_i - x) - R_hat^T (p_hat_i - x_hat)|` [m].
    pub lm_body: Vec<f64>,
    pub lyap_v: f64,
    pub lyap_l: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    /// `|x - R_E x_hat|` [m].
    pub pos_inertial: f64,
    /// `|p_i - R_E p_hat_i|` [m].
    pub lm_inertial: Vec<f64>,
}

pub fn error_metrics(
    x: &ExtendedPose,
    x_hat: &ExtendedPose,
    z: &AutomorphismState,
    sm: &StructuralMatrices,
    cert: &StabilityCertificate,
) -> Result<ErrorMetrics> {
    let e_bar = total_error(x, x_hat, z)?;
    let base = base_error(&e_bar, sm)?;
    let lyap_v = lyapunov_translation(&base.v_o, cert);
    let lyap_l = 0.5 * (base.eta - Vector3::z()).norm_squared() + cert.q * lyap_v;

    let rt = x.r.transpose();
    let rht = x_hat.r.transpose();
    let vel_body = (rt * x.v.column(0) - rht * x_hat.v.column(0)).norm();
    let lm_body = (0..sm.n)
        .map(|i| {
            (rt * (x.v.column(2 + i) - x.v.column(1))
                - rht * (x_hat.v.column(2 + i) - x_hat.v.column(1)))
            .norm()
        })
        .collect();

    let r_e = e_bar.r;
    let (roll, pitch, yaw) = euler_zyx(&r_e);
    let pos_inertial = (x.v.column(1) - r_e * x_hat.v.column(1)).norm();
    let lm_inertial = (0..sm.n)
        .map(|i| (x.v.column(2 + i) - r_e * x_hat.v.column(2 + i)).norm())
        .collect();

    Ok(ErrorMetrics {
        att_reduced: base.eta.z.clamp(-1.0, 1.0).acos(),
        vel_body,
        lm_body,
        lyap_v,
        lyap_l,
        roll,
        pitch,
        yaw,
        pos_inertial,
        lm_inertial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{so3_exp, Rotation};
    use crate::observer::init_auxiliary;
    use crate::slam::build_structural;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn rand_vec(rng: &mut impl Rng, s: f64) -> Vector3<f64> {
        Vector3::new(rng.gen_range(-s..s), rng.gen_range(-s..s), rng.gen_range(-s..s))
    }

    fn rand_state(rng: &mut impl Rng, n: usize) -> ExtendedPose {
        ExtendedPose::new(
            so3_exp(&rand_vec(rng, PI)),
            Block::from_fn(n + 2, |_, _| rng.gen_range(-5.0..5.0)),
        )
    }

    fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    #[test]
    fn n_one_stability_matrix() {
        let gains = Gains {
            k_r: 1.0,
            k_v: 1.5,
            k_x: 0.7,
            k_p: 2.5,
        };
        let sm = build_structural(1, 9.81).unwrap();
        let gm = GainMatrices::new(&gains, 1).unwrap();
        let a = stability_matrix(&gm, &sm);
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.5, -(0.7 + 2.5)]);
        assert_eq!(a, expected);
        let poly = characteristic_polynomial(&a);
        assert_relative_eq!(poly[1], 3.2, epsilon = 1e-14);
        assert_relative_eq!(poly[2], 1.5, epsilon = 1e-14);
    }

    #[test]
    fn reference_eigenvalues() {
        let sm = build_structural(5, 9.81).unwrap();
        let gm = GainMatrices::new(&Gains::REFERENCE, 5).unwrap();
        let a = stability_matrix(&gm, &sm);
        let eig = eigenvalues(&a).unwrap();
        assert_eq!(eig.len(), 6);
        // roots of s^2 + 9 s + 10
        let lo = (-9.0 - 41f64.sqrt()) / 2.0;
        let hi = (-9.0 + 41f64.sqrt()) / 2.0;
        assert!((eig[0].re - lo).abs() < 1e-9);
        assert!((eig[5].re - hi).abs() < 1e-9);
        for e in &eig[1..5] {
            assert!((e.re + 4.0).abs() < 1e-9 && e.im.abs() < 1e-9);
        }
        assert!(is_hurwitz(&a).unwrap());
    }

    #[test]
    fn char_poly_matches_factored_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for n in 1..=8 {
            let sm = build_structural(n, 9.81).unwrap();
            for _ in 0..10 {
                let k_p: f64 = rng.gen_range(0.1..5.0);
                let gains = Gains {
                    k_r: 1.0,
                    k_v: rng.gen_range(0.1..5.0),
                    k_x: rng.gen_range(-0.9 * k_p / n as f64..5.0),
                    k_p,
                };
                let gm = GainMatrices::new(&gains, n).unwrap();
                let a = stability_matrix(&gm, &sm);
                let mut oracle = vec![1.0, gains.k_p + n as f64 * gains.k_x, n as f64 * gains.k_v];
                for _ in 0..n - 1 {
                    oracle = poly_mul(&oracle, &[1.0, gains.k_p]);
                }
                let poly = characteristic_polynomial(&a);
                for (c, o) in poly.iter().zip(&oracle) {
                    assert!((c - o).abs() <= 1e-9 * o.abs(), "n={n} {c} vs {o} rel {:e}", (c - o).abs() / o.abs());
                }
            }
        }
    }

    #[test]
    fn eigenvalues_of_clustered_spectrum() {
        // Seven-fold eigenvalue -k_p; plain machine-epsilon deflation stalls here.
        let gains = Gains {
            k_r: 4.762310780774556,
            k_v: 4.273178904601828,
            k_x: 2.170713231992506,
            k_p: 4.434259301318175,
        };
        let n = 7;
        let sm = build_structural(n, 9.81).unwrap();
        let a = stability_matrix(&GainMatrices::new(&gains, n).unwrap(), &sm);
        let eig = eigenvalues(&a).unwrap();
        assert_eq!(eig.len(), n + 1);
        let at_kp = eig.iter().filter(|z| (z.re + gains.k_p).abs() < 1e-9 && z.im.abs() < 1e-9).count();
        assert_eq!(at_kp, n - 1);
        let (b, c) = (gains.k_p + n as f64 * gains.k_x, n as f64 * gains.k_v);
        let disc = (b * b - 4.0 * c).sqrt();
        for root in [(-b - disc) / 2.0, (-b + disc) / 2.0] {
            assert!(eig.iter().any(|z| (z.re - root).abs() < 1e-9 && z.im.abs() < 1e-12));
        }
        assert!(matches!(
            eigenvalues(&DMatrix::from_element(2, 2, f64::NAN)),
            Err(Error::EigenNoConvergence)
        ));
    }

    #[test]
    fn lyapunov_examples() {
        let a = -DMatrix::<f64>::identity(2, 2);
        let p = solve_lyapunov(&a).unwrap();
        assert!((p - DMatrix::<f64>::identity(2, 2) * 0.5).amax() < 1e-15);

        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, -1.0]);
        let p = solve_lyapunov(&a).unwrap();
        assert!(lyapunov_residual(&a, &p) < 1e-10);

        let unstable = DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.0, -1.0]);
        assert!(matches!(solve_lyapunov(&unstable), Err(Error::NotHurwitz(_))));
        let marginal = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(matches!(solve_lyapunov(&marginal), Err(Error::NotHurwitz(_))));
    }

    #[test]
    fn lyapunov_random_hurwitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for size in 1..=6 {
            for _ in 0..10 {
                let m = DMatrix::from_fn(size, size, |_, _| rng.gen_range(-1.0..1.0));
                let shift = max_real_part(&m).unwrap() + rng.gen_range(0.1..2.0);
                let a = m - DMatrix::<f64>::identity(size, size) * shift;
                let p = solve_lyapunov(&a).unwrap();
                assert!(lyapunov_residual(&a, &p) < 1e-9);
                assert!(p.clone().symmetric_eigen().eigenvalues.min() > 0.0);
                assert_eq!(p, p.transpose());
            }
        }
    }

    #[test]
    fn lyapunov_function_values() {
        let sm = build_structural(2, 9.81).unwrap();
        let mut cert = StabilityCertificate::new(&Gains::REFERENCE, &sm).unwrap();
        assert_eq!(lyapunov_full(&BaseState::origin(2), &cert).unwrap(), 0.0);
        let flipped = BaseState {
            eta: -Vector3::z(),
            v_o: Block::zeros(3),
        };
        assert_relative_eq!(lyapunov_full(&flipped, &cert).unwrap(), 2.0);
        let side = BaseState {
            eta: Vector3::x(),
            v_o: Block::zeros(3),
        };
        assert_relative_eq!(lyapunov_full(&side, &cert).unwrap(), 1.0);
        let bad = BaseState {
            eta: Vector3::new(0.0, 0.0, 1.1),
            v_o: Block::zeros(3),
        };
        assert!(matches!(lyapunov_full(&bad, &cert), Err(Error::NotUnitVector(_))));

        cert.p_mat = DMatrix::<f64>::identity(3, 3) * 0.5;
        let mut v = Block::zeros(3);
        assert_eq!(lyapunov_translation(&v, &cert), 0.0);
        v[(1, 2)] = 1.0;
        assert_relative_eq!(lyapunov_translation(&v, &cert), 0.5);
    }

    #[test]
    fn total_error_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let sm = build_structural(3, 9.81).unwrap();
        let z = init_auxiliary(&Gains::REFERENCE, &sm).unwrap();
        let x = rand_state(&mut rng, 3);
        let e = total_error(&x, &x, &z).unwrap();
        assert!(e.distance(&ExtendedPose::identity(5)) < 1e-12);

        let d = Block::from_fn(5, |_, _| rng.gen_range(-1.0..1.0));
        let x_hat = ExtendedPose::new(x.r, &x.v - &d);
        let e = total_error(&x, &x_hat, &z).unwrap();
        assert!((e.r - Matrix3::identity()).amax() < 1e-12);
        assert!((e.v - d).amax() < 1e-12);
    }

    #[test]
    fn total_and_base_error_component_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for n in 1..=6 {
            let sm = build_structural(n, 9.81).unwrap();
            let z = init_auxiliary(&Gains::REFERENCE, &sm).unwrap();
            for _ in 0..20 {
                let x = rand_state(&mut rng, n);
                let x_hat = rand_state(&mut rng, n);
                let e = total_error(&x, &x_hat, &z).unwrap();
                let r_e = x.r * x_hat.r.transpose();
                let v_e = (&x.v - r_e * &x_hat.v) - (Matrix3::identity() - r_e) * z.v();
                assert!((e.r - r_e).amax() < 1e-11);
                assert!((&e.v - v_e).amax() < 1e-11);

                let base = base_error(&e, &sm).unwrap();
                let ret = r_e.transpose();
                let v_o = -((ret * &x.v - &x_hat.v) * &sm.pi_mat)
                    + (ret - Matrix3::identity()) * z.v() * &sm.pi_mat;
                assert!((base.eta - ret * Vector3::z()).amax() < 1e-11);
                assert!((base.v_o - v_o).amax() < 1e-11);
            }
        }
    }

    #[test]
    fn base_error_examples() {
        let sm = build_structural(2, 9.81).unwrap();
        assert_eq!(base_error(&ExtendedPose::identity(4), &sm).unwrap(), BaseState::origin(2));
        let flip = ExtendedPose::new(so3_exp(&Vector3::new(PI, 0.0, 0.0)), Block::zeros(4));
        let b = base_error(&flip, &sm).unwrap();
        assert!((b.eta + Vector3::z()).amax() < 1e-15);
    }

    #[test]
    fn alignment_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let sm = build_structural(4, 9.81).unwrap();
        let z = init_auxiliary(&Gains::REFERENCE, &sm).unwrap();
        let x = rand_state(&mut rng, 4);

        let (a, aligned) = align_estimate(&x, &ExtendedPose::identity(6)).unwrap();
        assert_eq!(a.theta, 0.0);
        assert_eq!(a.t, Vector3::zeros());
        assert!(aligned.distance(&x) < 1e-15);

        for _ in 0..50 {
            let psi = rng.gen_range(-PI..PI);
            let s = FrameTransform::from_yaw(psi, Vector3::zeros());
            let x_hat = apply_frame_action(&s, &x);
            let e = total_error(&x, &x_hat, &z).unwrap();
            let (a, aligned) = align_estimate(&x_hat, &e).unwrap();
            assert!((0.0..TAU).contains(&a.theta));
            assert!(aligned.distance(&x) < 1e-10);
        }
    }

    #[test]
    fn alignment_degenerate_yaw() {
        let e = ExtendedPose::new(so3_exp(&Vector3::new(0.0, PI / 2.0, 0.0)), Block::zeros(3));
        let res = align_estimate(&ExtendedPose::identity(3), &e);
        assert_eq!(res.unwrap_err(), Error::YawDegenerate);
    }

    #[test]
    fn euler_angles_round_trip() {
        let (roll, pitch, yaw) = (0.3, -0.4, 2.0);
        let r = so3_exp(&Vector3::new(0.0, 0.0, yaw))
            * so3_exp(&Vector3::new(0.0, pitch, 0.0))
            * so3_exp(&Vector3::new(roll, 0.0, 0.0));
        let (r2, p2, y2) = euler_zyx(&r);
        assert_relative_eq!(r2, roll, epsilon = 1e-12);
        assert_relative_eq!(p2, pitch, epsilon = 1e-12);
        assert_relative_eq!(y2, yaw, epsilon = 1e-12);
        assert!(Rotation::new(r).is_ok());
    }

    #[test]
    fn metrics_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let sm = build_structural(3, 9.81).unwrap();
        let z = init_auxiliary(&Gains::REFERENCE, &sm).unwrap();
        let cert = StabilityCertificate::new(&Gains::REFERENCE, &sm).unwrap();
        let x = rand_state(&mut rng, 3);
        let m = error_metrics(&x, &x, &z, &sm, &cert).unwrap();
        assert!(m.att_reduced < 1e-7);
        for v in [m.vel_body, m.lyap_v, m.lyap_l, m.roll, m.pitch, m.yaw, m.pos_inertial] {
            assert!(v.abs() < 1e-12);
        }
        assert!(m.lm_body.iter().chain(&m.lm_inertial).all(|v| v.abs() < 1e-12));

        // eta_e = -e3 gives the maximal reduced attitude error
        let flip = so3_exp(&Vector3::new(PI, 0.0, 0.0));
        let x_hat = ExtendedPose::new(flip.transpose() * x.r, x.v.clone());
        let m = error_metrics(&x, &x_hat, &z, &sm, &cert).unwrap();
        assert_relative_eq!(m.att_reduced, PI, epsilon = 1e-7);
    }

    #[test]
    fn certificate_fields() {
        let sm = build_structural(5, 9.81).unwrap();
        let cert = StabilityCertificate::new(&Gains::REFERENCE, &sm).unwrap();
        assert_relative_eq!(cert.q, 2.0 * 5.0 * 2.0 * 2.0 / 9.81);
        assert_relative_eq!(cert.local_rate, 9.81);
        assert!(cert.lyapunov_residual() < 1e-9);
        assert!(cert.p_min_eigenvalue() > 0.0);
    }
}
