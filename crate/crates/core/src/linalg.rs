//! Dense square solves with a least-squares fallback for ill-conditioned systems.

use nalgebra::{DMatrix, DVector};

/// Above this 1-norm condition number the direct solution is replaced by least squares.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Relative residual a least-squares solution must reach to count as a solution.
pub const CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    LeastSquares,
}

#[derive(Debug, Clone)]
pub struct LinearSolve {
    pub x: DVector<f64>,
    pub condition: f64,
    pub rank: usize,
    pub method: Method,
}

/// Why a system had no acceptable solution.
#[derive(Debug, Clone, Copy)]
pub struct Inconsistent {
    pub rank: usize,
    pub condition: f64,
    pub residual: f64,
}

fn norm_one(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn relative_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let scale = b.amax().max(f64::MIN_POSITIVE);
    (a * x - b).amax() / scale
}

/// Solves `a x = b` by partial-pivot LU.
///
/// When a pivot falls below `1e2·ε·‖a‖₁` or the condition number exceeds
/// [`CONDITION_LIMIT`], the minimum-norm least-squares solution is returned instead.
/// If even that leaves a relative residual above [`CONSISTENCY_TOL`], the system is
/// reported as inconsistent.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<LinearSolve, Inconsistent> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "solve needs a square matrix");
    assert_eq!(n, b.len(), "right-hand side length mismatch");
    let anorm = norm_one(a);
    let pivot_floor = 1e2 * f64::EPSILON * anorm;

    let lu = a.clone().lu();
    let u = lu.u();
    let min_pivot = u
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |m, p| m.min(p.abs()));

    let mut condition = f64::INFINITY;
    if min_pivot > pivot_floor {
        if let Some(inv) = lu.try_inverse() {
            condition = anorm * norm_one(&inv);
            if condition <= CONDITION_LIMIT {
                if let Some(x) = lu.solve(b) {
                    return Ok(LinearSolve {
                        x,
                        condition,
                        rank: n,
                        method: Method::Direct,
                    });
                }
            }
        }
    }

    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = 1e2 * f64::EPSILON * smax.max(anorm);
    let rank = svd.singular_values.iter().filter(|s| **s > cutoff).count();
    let residual_floor = |x: &DVector<f64>| relative_residual(a, x, b);
    match svd.solve(b, cutoff) {
        Ok(x) => {
            let residual = residual_floor(&x);
            if residual <= CONSISTENCY_TOL && x.iter().all(|v| v.is_finite()) {
                Ok(LinearSolve {
                    x,
                    condition,
                    rank,
                    method: Method::LeastSquares,
                })
            } else {
                Err(Inconsistent {
                    rank,
                    condition,
                    residual,
                })
            }
        }
        Err(_) => Err(Inconsistent {
            rank,
            condition,
            residual: f64::INFINITY,
        }),
    }
}
