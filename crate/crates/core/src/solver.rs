//! Regularised solvers for `A x = C` with `A` symmetric positive semidefinite
//! (up to sampling noise).

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA_MIN: f64 = 1e-4;
pub const DEFAULT_LAMBDA_MAX: f64 = 1e-2;
pub const DEFAULT_TSVD_CUTOFF: f64 = 1e-8;
/// Eigenvalues at or below this are treated as null directions by the pseudo-inverse.
pub const PINV_THRESHOLD: f64 = 1e-12;
/// Points on the L-curve grid used to locate its corner.
pub const LCURVE_POINTS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SolverSpec {
    /// `argmin ||C - A x||^2 + lambda^2 ||x||^2`, lambda from the L-curve corner clamped to the bounds.
    Tikhonov { lambda_min: f64, lambda_max: f64 },
    /// Pseudo-inverse keeping singular values `>= cutoff * sigma_max`.
    Tsvd { cutoff: f64 },
    /// Inverts eigenvalues above [`PINV_THRESHOLD`] and zeroes the rest.
    EigenPinv,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec::Tikhonov { lambda_min: DEFAULT_LAMBDA_MIN, lambda_max: DEFAULT_LAMBDA_MAX }
    }
}

impl SolverSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SolverSpec::Tikhonov { lambda_min, lambda_max } => {
                if !(lambda_min > 0.0 && lambda_min <= lambda_max && lambda_max.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "Tikhonov bounds need 0 < lambda_min <= lambda_max, got [{lambda_min}, {lambda_max}]"
                    )));
                }
            }
            SolverSpec::Tsvd { cutoff } => {
                if !(cutoff > 0.0 && cutoff < 1.0) {
                    return Err(Error::InvalidConfig(format!("TSVD cutoff {cutoff} outside (0, 1)")));
                }
            }
            SolverSpec::EigenPinv => {}
        }
        Ok(())
    }
}

fn check_dims(a: &DMatrix<f64>, c: &DVector<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
    }
    if c.len() != a.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: c.len() });
    }
    Ok(())
}

pub fn solve_theta_dot(a: &DMatrix<f64>, c: &DVector<f64>, solver: &SolverSpec) -> Result<DVector<f64>> {
    solver.validate()?;
    check_dims(a, c)?;
    if a.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    Ok(match *solver {
        SolverSpec::EigenPinv => eigen_pinv_solve(a, c),
        SolverSpec::Tsvd { cutoff } => tsvd_solve(a, c, cutoff),
        SolverSpec::Tikhonov { lambda_min, lambda_max } => tikhonov_solve(a, c, lambda_min, lambda_max).0,
    })
}

fn eigen_pinv_solve(a: &DMatrix<f64>, c: &DVector<f64>) -> DVector<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let projected = eig.eigenvectors.transpose() * c;
    let scaled = DVector::from_iterator(
        projected.len(),
        projected
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(&p, &e)| if e > PINV_THRESHOLD { p / e } else { 0.0 }),
    );
    eig.eigenvectors * scaled
}

fn tsvd_solve(a: &DMatrix<f64>, c: &DVector<f64>, cutoff: f64) -> DVector<f64> {
    let svd = SVD::new(a.clone(), true, true);
    let s_max = svd.singular_values.max();
    let keep = cutoff * s_max;
    filtered_solve(&svd, c, |s| if s > 0.0 && s >= keep { 1.0 / s } else { 0.0 })
}

/// `V diag(g(s_i)) U^T c`.
fn filtered_solve(svd: &SVD<f64, nalgebra::Dyn, nalgebra::Dyn>, c: &DVector<f64>, g: impl Fn(f64) -> f64) -> DVector<f64> {
    let u = svd.u.as_ref().expect("U requested");
    let v_t = svd.v_t.as_ref().expect("V^T requested");
    let beta = u.transpose() * c;
    let scaled = DVector::from_iterator(
        beta.len(),
        beta.iter().zip(svd.singular_values.iter()).map(|(&b, &s)| b * g(s)),
    );
    v_t.transpose() * scaled
}

/// Residual and solution norms of the Tikhonov solution at `lambda`, from the SVD coefficients.
fn lcurve_point(singular: &[f64], beta: &[f64], outside: f64, lambda: f64) -> (f64, f64) {
    let mut res = outside;
    let mut sol = 0.0;
    for (&s, &b) in singular.iter().zip(beta) {
        let l2 = lambda * lambda;
        let d = s * s + l2;
        res += (l2 * b / d).powi(2);
        sol += (s * b / d).powi(2);
    }
    (res.sqrt(), sol.sqrt())
}

/// Signed Menger curvature of three points; positive at a convex L-curve corner.
fn menger_curvature(p1: (f64, f64), p2: (f64, f64), p3: (f64, f64)) -> f64 {
    let d12 = ((p2.0 - p1.0).powi(2) + (p2.1 - p1.1).powi(2)).sqrt();
    let d23 = ((p3.0 - p2.0).powi(2) + (p3.1 - p2.1).powi(2)).sqrt();
    let d13 = ((p3.0 - p1.0).powi(2) + (p3.1 - p1.1).powi(2)).sqrt();
    let cross = (p2.0 - p1.0) * (p3.1 - p2.1) - (p2.1 - p1.1) * (p3.0 - p2.0);
    let denom = d12 * d23 * d13;
    if denom > 0.0 && denom.is_finite() {
        2.0 * cross / denom
    } else {
        f64::NEG_INFINITY
    }
}

/// Regularisation strength at the L-curve corner, before clamping.
///
/// The curve `(log ||C - A x||, log ||x||)` is sampled on a geometric grid of
/// `lambda` spanning the singular values of `A`; the corner is the grid
/// point of maximum three-point curvature. Returns `None` when the curve is degenerate.
pub fn lcurve_corner(a: &DMatrix<f64>, c: &DVector<f64>) -> Option<f64> {
    let svd = SVD::new(a.clone(), true, false);
    lcurve_corner_svd(&svd, c)
}

fn lcurve_corner_svd(svd: &SVD<f64, nalgebra::Dyn, nalgebra::Dyn>, c: &DVector<f64>) -> Option<f64> {
    let u = svd.u.as_ref()?;
    let beta: Vec<f64> = (u.transpose() * c).iter().copied().collect();
    let singular: Vec<f64> = svd.singular_values.iter().copied().collect();
    let s_max = singular.iter().copied().fold(0.0, f64::max);
    if s_max <= 0.0 {
        return None;
    }
    let s_min = singular.iter().copied().fold(f64::INFINITY, f64::min).max(s_max * 16.0 * f64::EPSILON);
    let outside = (c.norm_squared() - beta.iter().map(|b| b * b).sum::<f64>()).max(0.0);

    // geometric from s_max down to s_min
    let ratio = (s_min / s_max).powf(1.0 / (LCURVE_POINTS - 1) as f64);
    let lambdas: Vec<f64> = (0..LCURVE_POINTS)
        .map(|k| s_max * ratio.powi(k as i32))
        .rev()
        .collect();
    let points: Vec<(f64, f64)> = lambdas
        .iter()
        .map(|&l| {
            let (r, x) = lcurve_point(&singular, &beta, outside, l);
            (r.max(f64::MIN_POSITIVE).ln(), x.max(f64::MIN_POSITIVE).ln())
        })
        .collect();

    let mut best: Option<(f64, f64)> = None;
    for k in 1..points.len() - 1 {
        let kappa = menger_curvature(points[k - 1], points[k], points[k + 1]);
        if kappa.is_finite() && best.map_or(true, |(b, _)| kappa > b) {
            best = Some((kappa, lambdas[k]));
        }
    }
    best.map(|(_, l)| l)
}

/// Tikhonov solution and the `lambda` used.
pub fn tikhonov_solve(a: &DMatrix<f64>, c: &DVector<f64>, lambda_min: f64, lambda_max: f64) -> (DVector<f64>, f64) {
    let svd = SVD::new(a.clone(), true, true);
    let lambda = lcurve_corner_svd(&svd, c)
        .unwrap_or(lambda_min)
        .clamp(lambda_min, lambda_max);
    let x = filtered_solve(&svd, c, |s| s / (s * s + lambda * lambda));
    (x, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(a: &[&[f64]], c: &[f64], spec: SolverSpec) -> Vec<f64> {
        let n = a.len();
        let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
        solve_theta_dot(&m, &DVector::from_column_slice(c), &spec)
            .unwrap()
            .iter()
            .copied()
            .collect()
    }

    #[test]
    fn pinv_examples() {
        assert!((solve(&[&[1.0]], &[1.0], SolverSpec::EigenPinv)[0] - 1.0).abs() < 1e-15);
        assert_eq!(solve(&[&[0.0]], &[1.0], SolverSpec::EigenPinv)[0], 0.0);
        let x = solve(&[&[0.25]], &[0.5], SolverSpec::EigenPinv);
        assert!((x[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tsvd_drops_small_singular_values() {
        let x = solve(&[&[2.0, 0.0], &[0.0, 1e-15]], &[1.0, 1.0], SolverSpec::Tsvd { cutoff: 1e-8 });
        assert!((x[0] - 0.5).abs() < 1e-14);
        assert_eq!(x[1], 0.0);
    }

    #[test]
    fn tikhonov_matches_normal_equations() {
        // for symmetric A, x = (A^T A + lambda^2 I)^{-1} A^T C at the clamped lambda
        let a = DMatrix::from_row_slice(3, 3, &[0.3, 0.1, 0.0, 0.1, 0.2, 0.05, 0.0, 0.05, 1e-5]);
        let c = DVector::from_column_slice(&[0.2, -0.1, 0.01]);
        let (x, lambda) = tikhonov_solve(&a, &c, 1e-4, 1e-2);
        assert!((1e-4..=1e-2).contains(&lambda));
        let normal = a.transpose() * &a + DMatrix::identity(3, 3) * (lambda * lambda);
        let expect = normal.lu().solve(&(a.transpose() * &c)).unwrap();
        assert!((x - expect).norm() < 1e-10);
    }

    #[test]
    fn tikhonov_lambda_respects_bounds() {
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 1e-3, 1e-6, 1e-9]));
        let c = DVector::from_column_slice(&[1.0, 1.0, 1.0, 1.0]);
        for (lo, hi) in [(1e-4, 1e-2), (1e-8, 1e-8), (0.5, 0.7)] {
            let (_, l) = tikhonov_solve(&a, &c, lo, hi);
            assert!(l >= lo && l <= hi);
        }
        let corner = lcurve_corner(&a, &c).unwrap();
        assert!(corner > 0.0);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let c = DVector::zeros(2);
        for spec in [SolverSpec::default(), SolverSpec::Tsvd { cutoff: 1e-6 }, SolverSpec::EigenPinv] {
            assert_eq!(solve_theta_dot(&a, &c, &spec).unwrap().norm(), 0.0);
        }
        let zero = DMatrix::zeros(2, 2);
        let c = DVector::from_column_slice(&[1.0, 1.0]);
        assert_eq!(solve_theta_dot(&zero, &c, &SolverSpec::default()).unwrap().norm(), 0.0);
    }

    #[test]
    fn errors() {
        let a = DMatrix::zeros(2, 3);
        let c = DVector::zeros(2);
        assert!(solve_theta_dot(&a, &c, &SolverSpec::EigenPinv).is_err());
        let a = DMatrix::zeros(2, 2);
        let c = DVector::zeros(3);
        assert!(solve_theta_dot(&a, &c, &SolverSpec::EigenPinv).is_err());
        let c = DVector::zeros(2);
        let bad = SolverSpec::Tikhonov { lambda_min: 1e-2, lambda_max: 1e-4 };
        assert!(solve_theta_dot(&a, &c, &bad).is_err());
        assert!(solve_theta_dot(&a, &c, &SolverSpec::Tsvd { cutoff: 1.5 }).is_err());
    }

    #[test]
    fn curvature_sign() {
        // down then right is a convex corner
        assert!(menger_curvature((0.0, 1.0), (0.0, 0.0), (1.0, 0.0)) > 0.0);
        assert!(menger_curvature((0.0, 0.0), (1.0, 0.0), (0.0, 1.0)).is_finite());
    }
}
