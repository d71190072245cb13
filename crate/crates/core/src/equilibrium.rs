//! Discrete distance-equilibrium measures, the Gross constant and magnitude.
//!
//! On a space with nodes `x_i`, distances `D` and quadrature weights `w`, the solver
//! looks for densities `ρ` with `Σ_j D_ij w_j ρ_j` independent of `i`. Node masses are
//! `m_j = w_j ρ_j` normalized to total one, and the common potential value is `r`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Method};
use crate::space::{FiniteMetricSpace, KernelKind};

/// Relative constancy residual accepted for a converged solve.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Masses above `−NEGATIVE_MASS_TOL·max|m|` count as non-negative.
pub const NEGATIVE_MASS_TOL: f64 = 1e-8;

/// Right-hand side of the discretized system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rhs {
    /// `b = 1`: the potential is constant on the nodes.
    #[default]
    Ones,
    /// `b_k = w_k`, the arclength element at node `k`, as written for the curve scheme.
    /// The system `D·diag(w)·x = w` has the same solution as the speed-scaled form.
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    /// The direct solve was replaced by minimum-norm least squares.
    IllConditioned,
    /// The potential `D·m` is not constant to [`RESIDUAL_TOL`] (only with [`Rhs::Paper`]).
    NonConstant,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumSolution {
    pub status: SolveStatus,
    pub r: f64,
    pub residual: f64,
    pub variation: f64,
    pub min_mass: f64,
    pub is_probability: bool,
    pub masses: Vec<f64>,
    pub densities: Vec<f64>,
    pub condition: f64,
    pub rank: usize,
    pub rhs: Rhs,
}

pub fn solve_equilibrium(space: &FiniteMetricSpace) -> Result<EquilibriumSolution> {
    solve_equilibrium_with(space, Rhs::Ones)
}

pub fn solve_equilibrium_with(space: &FiniteMetricSpace, rhs: Rhs) -> Result<EquilibriumSolution> {
    let n = space.len();
    if n < 2 {
        return Err(Error::invalid(
            "solve_equilibrium",
            "need at least 2 nodes (the 1-node distance matrix is singular)",
        ));
    }
    let d = space.distances();
    let w = space.weights();
    let a = DMatrix::from_fn(n, n, |i, j| d[(i, j)] * w[j]);
    let b = match rhs {
        Rhs::Ones => DVector::from_element(n, 1.0),
        Rhs::Paper => DVector::from_column_slice(w),
    };
    let solved = linalg::solve(&a, &b).map_err(|e| Error::SingularSystem {
        op: "solve_equilibrium",
        rank: e.rank,
        n,
        condition: e.condition,
    })?;

    let raw: Vec<f64> = solved.x.iter().zip(w).map(|(x, w)| x * w).collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NoPositiveNormalization { total });
    }
    let mut masses: Vec<f64> = raw.iter().map(|m| m / total).collect();
    let sum: f64 = masses.iter().sum();
    masses.iter_mut().for_each(|m| *m /= sum);

    let potential = potential(d, &masses);
    let r = match rhs {
        Rhs::Ones => 1.0 / total,
        Rhs::Paper => potential.iter().sum::<f64>() / n as f64,
    };
    let (lo, hi) = extent(&potential);
    let residual = potential.iter().map(|g| (g - r).abs()).fold(0.0, f64::max) / r;
    let min_mass = masses.iter().copied().fold(f64::INFINITY, f64::min);
    let max_abs = masses.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let status = if residual > RESIDUAL_TOL {
        SolveStatus::NonConstant
    } else if solved.method == Method::LeastSquares {
        SolveStatus::IllConditioned
    } else {
        SolveStatus::Converged
    };

    Ok(EquilibriumSolution {
        status,
        r,
        residual,
        variation: hi - lo,
        min_mass,
        is_probability: min_mass >= -NEGATIVE_MASS_TOL * max_abs,
        densities: masses.iter().zip(w).map(|(m, w)| m / w).collect(),
        masses,
        condition: solved.condition,
        rank: solved.rank,
        rhs,
    })
}

pub(crate) fn potential(d: &DMatrix<f64>, masses: &[f64]) -> Vec<f64> {
    (d * DVector::from_column_slice(masses))
        .iter()
        .copied()
        .collect()
}

fn extent(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstancyReport {
    pub mean: f64,
    pub variation: f64,
}

/// Mean and spread of the potential `x ↦ Σ_j d(x, x_j) m_j` over the nodes.
pub fn constancy_report(space: &FiniteMetricSpace, masses: &[f64]) -> Result<ConstancyReport> {
    if masses.len() != space.len() {
        return Err(Error::invalid(
            "constancy_report",
            format!("{} masses for {} nodes", masses.len(), space.len()),
        ));
    }
    let total: f64 = masses.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(
            "constancy_report",
            format!("masses sum to {total}, not 1"),
        ));
    }
    let g = potential(space.distances(), masses);
    let (lo, hi) = extent(&g);
    Ok(ConstancyReport {
        mean: g.iter().sum::<f64>() / g.len() as f64,
        variation: hi - lo,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrossConstant {
    /// `None` when the equilibrium solution is signed.
    pub value: Option<f64>,
    pub diameter: f64,
    pub warning: Option<String>,
}

/// The rendezvous value `r`, defined when the equilibrium solution is a probability measure.
pub fn gross_constant(solution: &EquilibriumSolution, space: &FiniteMetricSpace) -> GrossConstant {
    let diameter = space.diameter();
    if !solution.is_probability {
        return GrossConstant {
            value: None,
            diameter,
            warning: None,
        };
    }
    let r = solution.r;
    let slack = 1e-12 * diameter;
    let warning = (r < diameter / 2.0 - slack || r > diameter + slack).then(|| {
        format!(
            "r = {r} lies outside [diam/2, diam] = [{}, {diameter}]",
            diameter / 2.0
        )
    });
    GrossConstant {
        value: Some(r),
        diameter,
        warning,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MagnitudeResult {
    pub weights: Vec<f64>,
    pub magnitude: f64,
}

/// Weight measure of the kernel `e^{−d}` and its total mass.
pub fn solve_magnitude(space: &FiniteMetricSpace) -> Result<MagnitudeResult> {
    let n = space.len();
    let k = space.apply_kernel(KernelKind::ExpNegDistance);
    let solved =
        linalg::solve(&k, &DVector::from_element(n, 1.0)).map_err(|e| Error::SingularSystem {
            op: "solve_magnitude",
            rank: e.rank,
            n,
            condition: e.condition,
        })?;
    let weights: Vec<f64> = solved.x.iter().copied().collect();
    Ok(MagnitudeResult {
        magnitude: weights.iter().sum(),
        weights,
    })
}
