//! Maximization of the average-distance energy `I(μ) = μᵀDμ` over the probability simplex.
//!
//! The optimizer is Frank–Wolfe with away steps and exact line search. Along any
//! feasible direction the objective is a quadratic, so the step is closed form. The
//! Frank–Wolfe gap `max_i (Dμ)_i − I(μ)` is the stopping rule and, at the optimum, the
//! first-order condition that the potential is maximal on the support.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::equilibrium::{potential, EquilibriumSolution};
use crate::error::{Error, Result};
use crate::space::FiniteMetricSpace;

/// Entries above this belong to the support.
pub const SUPPORT_TOL: f64 = 1e-7;

/// Certification tolerance as a multiple of the optimizer tolerance.
pub const CERTIFICATION_FACTOR: f64 = 10.0;

const REFRESH_EVERY: usize = 512;
const DIRICHLET_STARTS: usize = 3;
const PAIR_STARTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        EnergyOptions {
            max_iters: 200_000,
            tol: 1e-10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StartKind {
    Uniform,
    Dirichlet { draw: usize },
    PairMidpoint { first: usize, second: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct StartOutcome {
    pub start: StartKind,
    pub energy: f64,
    pub gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyResult {
    pub measure: Vec<f64>,
    pub energy: f64,
    #[serde(rename = "support_indices")]
    pub support: Vec<usize>,
    #[serde(rename = "gap")]
    pub optimality_gap: f64,
    pub iterations: usize,
    pub tol: f64,
    pub starts: Vec<StartOutcome>,
}

impl EnergyResult {
    /// Evaluates energy, support and gap of an arbitrary simplex point.
    pub fn from_measure(space: &FiniteMetricSpace, measure: Vec<f64>, tol: f64) -> Result<Self> {
        check_simplex("EnergyResult::from_measure", &measure, space.len())?;
        let g = potential(space.distances(), &measure);
        let energy = dot(&measure, &g);
        Ok(EnergyResult {
            support: support_of(&measure),
            optimality_gap: g.iter().copied().fold(f64::NEG_INFINITY, f64::max) - energy,
            energy,
            measure,
            iterations: 0,
            tol,
            starts: Vec::new(),
        })
    }

    pub fn certification_tol(&self) -> f64 {
        CERTIFICATION_FACTOR * self.tol
    }
}

/// State handed to an observer after every Frank–Wolfe iteration.
#[derive(Debug)]
pub struct Iterate<'a> {
    pub iteration: usize,
    pub measure: &'a [f64],
    pub energy: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct FrankWolfeRun {
    pub measure: Vec<f64>,
    pub energy: f64,
    pub gap: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn support_of(measure: &[f64]) -> Vec<usize> {
    (0..measure.len())
        .filter(|&i| measure[i] > SUPPORT_TOL)
        .collect()
}

fn check_simplex(op: &'static str, measure: &[f64], n: usize) -> Result<()> {
    if measure.len() != n {
        return Err(Error::invalid(
            op,
            format!("{} entries for {n} nodes", measure.len()),
        ));
    }
    if measure.iter().any(|m| !(*m >= 0.0)) {
        return Err(Error::invalid(op, "measure has negative entries"));
    }
    let total: f64 = measure.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(op, format!("measure sums to {total}")));
    }
    Ok(())
}

/// Away-step Frank–Wolfe for `max μᵀDμ` from `start`.
///
/// Stops as soon as the gap is at most `tol` or after `max_iters` iterations.
pub fn frank_wolfe(
    d: &DMatrix<f64>,
    start: &[f64],
    max_iters: usize,
    tol: f64,
    mut observer: impl FnMut(&Iterate<'_>),
) -> FrankWolfeRun {
    let n = d.nrows();
    let total: f64 = start.iter().sum();
    let mut mu: Vec<f64> = start.iter().map(|m| m / total).collect();
    let mut g = potential(d, &mu);
    let mut iterations = 0;
    loop {
        let energy = dot(&mu, &g);
        let (k, gk) = argmax(&g);
        let gap = gk - energy;
        if gap <= tol || iterations >= max_iters {
            // final values from a fresh potential
            g = potential(d, &mu);
            let energy = dot(&mu, &g);
            let gap = argmax(&g).1 - energy;
            return FrankWolfeRun {
                measure: mu,
                energy,
                gap,
                iterations,
            };
        }

        // away vertex: the supported node with the smallest potential
        let (j, gj) = (0..n).filter(|&i| mu[i] > 0.0).map(|i| (i, g[i])).fold(
            (usize::MAX, f64::INFINITY),
            |best, c| if c.1 < best.1 { c } else { best },
        );
        let away_gain = energy - gj;

        if gap >= away_gain || mu[j] >= 1.0 {
            // toward e_k: slope 2·gap, curvature I − 2 g_k
            let q = energy - 2.0 * gk;
            let step = if q < 0.0 { (gap / -q).min(1.0) } else { 1.0 };
            for i in 0..n {
                mu[i] *= 1.0 - step;
                g[i] = (1.0 - step) * g[i] + step * d[(i, k)];
            }
            mu[k] += step;
        } else {
            // away from e_j: slope 2·(I − g_j), curvature I − 2 g_j
            let max_step = mu[j] / (1.0 - mu[j]);
            let q = energy - 2.0 * gj;
            let step = if q < 0.0 {
                (away_gain / -q).min(max_step)
            } else {
                max_step
            };
            for i in 0..n {
                mu[i] *= 1.0 + step;
                g[i] = (1.0 + step) * g[i] - step * d[(i, j)];
            }
            mu[j] -= step;
            if step >= max_step || mu[j] < 0.0 {
                mu[j] = 0.0;
            }
        }
        iterations += 1;

        let sum: f64 = mu.iter().sum();
        for (m, p) in mu.iter_mut().zip(g.iter_mut()) {
            *m /= sum;
            *p /= sum;
        }
        if iterations % REFRESH_EVERY == 0 {
            g = potential(d, &mu);
        }
        let energy = dot(&mu, &g);
        observer(&Iterate {
            iteration: iterations,
            measure: &mu,
            energy,
            gap: argmax(&g).1 - energy,
        });
    }
}

fn argmax(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
}

// Energies within rounding of each other count as ties, broken by the smaller gap.
fn better(run: &FrankWolfeRun, best: &FrankWolfeRun) -> bool {
    let slack = 8.0 * f64::EPSILON * best.energy.abs().max(1.0);
    if (run.energy - best.energy).abs() <= slack {
        run.gap < best.gap
    } else {
        run.energy > best.energy
    }
}

fn starting_points(space: &FiniteMetricSpace, seed: u64) -> Vec<(StartKind, Vec<f64>)> {
    let n = space.len();
    let mut starts = vec![(StartKind::Uniform, vec![1.0 / n as f64; n])];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for draw in 0..DIRICHLET_STARTS {
        let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = raw.iter().sum();
        starts.push((
            StartKind::Dirichlet { draw },
            raw.iter().map(|x| x / total).collect(),
        ));
    }

    let d = space.distances();
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    pairs.sort_by(|a, b| d[(b.0, b.1)].total_cmp(&d[(a.0, a.1)]).then(a.cmp(b)));
    for &(first, second) in pairs.iter().take(PAIR_STARTS) {
        let mut mu = vec![0.0; n];
        mu[first] = 0.5;
        mu[second] = 0.5;
        starts.push((StartKind::PairMidpoint { first, second }, mu));
    }
    starts
}

pub fn maximize_energy(
    space: &FiniteMetricSpace,
    max_iters: usize,
    tol: f64,
) -> Result<EnergyResult> {
    maximize_energy_with(
        space,
        &EnergyOptions {
            max_iters,
            tol,
            ..EnergyOptions::default()
        },
    )
}

/// Multi-start maximization; returns the start with the highest energy.
pub fn maximize_energy_with(
    space: &FiniteMetricSpace,
    options: &EnergyOptions,
) -> Result<EnergyResult> {
    let n = space.len();
    if n < 2 {
        return Err(Error::invalid("maximize_energy", "need at least 2 nodes"));
    }
    if !(options.tol > 0.0) {
        return Err(Error::invalid(
            "maximize_energy",
            "tolerance must be positive",
        ));
    }
    let d = space.distances();
    let mut outcomes = Vec::new();
    let mut best: Option<FrankWolfeRun> = None;
    for (kind, start) in starting_points(space, options.seed) {
        let run = frank_wolfe(d, &start, options.max_iters, options.tol, |_| {});
        outcomes.push(StartOutcome {
            start: kind,
            energy: run.energy,
            gap: run.gap,
            iterations: run.iterations,
        });
        if best.as_ref().is_none_or(|b| better(&run, b)) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one start");
    let result = EnergyResult {
        support: support_of(&best.measure),
        measure: best.measure,
        energy: best.energy,
        optimality_gap: best.gap,
        iterations: best.iterations,
        tol: options.tol,
        starts: outcomes,
    };
    if result.optimality_gap > options.tol {
        return Err(Error::NotConverged {
            best: Box::new(result),
        });
    }
    Ok(result)
}

#[derive(Debug, Clone, Serialize)]
pub struct BjorckReport {
    /// `max_{i ∈ supp} |(Dμ)_i − I|`
    pub support_deviation: f64,
    /// `max_{i ∉ supp} (Dμ)_i − I`; `None` when the support is everything.
    pub complement_excess: Option<f64>,
    pub tolerance: f64,
    pub passes: bool,
}

/// First-order optimality: the potential equals the energy on the support and does
/// not exceed it elsewhere.
pub fn check_bjorck_conditions(space: &FiniteMetricSpace, result: &EnergyResult) -> BjorckReport {
    let g = potential(space.distances(), &result.measure);
    let energy = dot(&result.measure, &g);
    let mut support_deviation: f64 = 0.0;
    let mut complement_excess: Option<f64> = None;
    for (i, &gi) in g.iter().enumerate() {
        if result.measure[i] > SUPPORT_TOL {
            support_deviation = support_deviation.max((gi - energy).abs());
        } else {
            complement_excess = Some(complement_excess.map_or(gi - energy, |c| c.max(gi - energy)));
        }
    }
    let tolerance = result.certification_tol();
    BjorckReport {
        support_deviation,
        complement_excess,
        tolerance,
        passes: support_deviation <= tolerance && complement_excess.is_none_or(|c| c <= tolerance),
    }
}

/// Mass the measure places on nodes flagged in `boundary_mask`.
pub fn boundary_support_fraction(
    space: &FiniteMetricSpace,
    result: &EnergyResult,
    boundary_mask: &[bool],
) -> Result<f64> {
    if boundary_mask.len() != space.len() || result.measure.len() != space.len() {
        return Err(Error::MaskLengthMismatch {
            expected: space.len(),
            got: boundary_mask.len(),
        });
    }
    let on: f64 = result
        .measure
        .iter()
        .zip(boundary_mask)
        .filter(|(_, b)| **b)
        .map(|(m, _)| m)
        .sum();
    Ok(on.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossValidation {
    pub comparable: bool,
    pub note: String,
    pub measure_distance: Option<f64>,
    pub value_distance: Option<f64>,
    pub tolerance: f64,
    pub agrees: Option<bool>,
}

/// Compares the energy maximizer with the equilibrium solution on the same space.
///
/// Only meaningful when the equilibrium masses are non-negative and the maximizer
/// charges every node; otherwise the report says so and makes no claim.
pub fn cross_validate_equilibrium(
    space: &FiniteMetricSpace,
    energy: &EnergyResult,
    equilibrium: &EquilibriumSolution,
    tolerance: f64,
) -> CrossValidation {
    let n = space.len();
    let skip = |note: &str| CrossValidation {
        comparable: false,
        note: note.to_string(),
        measure_distance: None,
        value_distance: None,
        tolerance,
        agrees: None,
    };
    if energy.measure.len() != n || equilibrium.masses.len() != n {
        return skip("not comparable: node counts differ");
    }
    if !equilibrium.is_probability {
        return skip("not comparable: equilibrium solution is signed");
    }
    if energy.support.len() != n {
        return skip("not comparable: energy maximizer does not have full support");
    }
    let measure_distance = energy
        .measure
        .iter()
        .zip(&equilibrium.masses)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let value_distance = (energy.energy - equilibrium.r).abs();
    CrossValidation {
        comparable: true,
        note: "full-support maximizer compared with equilibrium masses".to_string(),
        measure_distance: Some(measure_distance),
        value_distance: Some(value_distance),
        tolerance,
        agrees: Some(measure_distance <= tolerance && value_distance <= tolerance),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::SupportCurve;
    use crate::equilibrium::solve_equilibrium;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn segment3() -> FiniteMetricSpace {
        FiniteMetricSpace::from_point_cloud(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).unwrap()
    }

    fn circle(n: usize) -> FiniteMetricSpace {
        FiniteMetricSpace::from_curve(&SupportCurve::circle(1.0).unwrap(), n).unwrap()
    }

    #[test]
    fn segment_endpoints() {
        let r = maximize_energy(&segment3(), 10_000, 1e-12).unwrap();
        // midpoint mass b only raises the gap by b², so the measure is good to √tol
        assert_abs_diff_eq!(r.measure[0], 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(r.measure[1], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.measure[2], 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(r.energy, 1.0, epsilon = 1e-9);
        assert!(r.optimality_gap <= 1e-12);
        assert_eq!(r.starts.len(), 7);
    }

    #[test]
    fn two_points() {
        let s = FiniteMetricSpace::from_point_cloud(&[[0.0, 0.0], [0.0, 3.0]]).unwrap();
        let r = maximize_energy(&s, 1000, 1e-12).unwrap();
        assert_abs_diff_eq!(r.measure[0], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(r.energy, 1.5, epsilon = 1e-9);
    }

    #[test]
    fn circle_is_uniform() {
        let n = 64;
        let space = circle(n);
        let r = maximize_energy(&space, 200_000, 1e-10).unwrap();
        for m in &r.measure {
            assert_abs_diff_eq!(*m, 1.0 / n as f64, epsilon = 1e-6);
        }
        assert!((r.energy - 4.0 / PI).abs() < 1e-3);
        let eq = solve_equilibrium(&space).unwrap();
        let cv = cross_validate_equilibrium(&space, &r, &eq, 1e-6);
        assert_eq!(cv.agrees, Some(true), "{cv:?}");
    }

    #[test]
    fn bjorck_conditions() {
        let space = segment3();
        let r = EnergyResult::from_measure(&space, vec![0.5, 0.0, 0.5], 1e-10).unwrap();
        let rep = check_bjorck_conditions(&space, &r);
        assert_eq!(rep.support_deviation, 0.0);
        assert_eq!(rep.complement_excess, Some(0.0));
        assert!(rep.passes);

        let n = 64;
        let space = circle(n);
        let uniform = EnergyResult::from_measure(&space, vec![1.0 / n as f64; n], 1e-10).unwrap();
        assert!(check_bjorck_conditions(&space, &uniform).passes);

        let mut point = vec![0.0; n];
        point[0] = 1.0;
        let r = EnergyResult::from_measure(&space, point, 1e-10).unwrap();
        let rep = check_bjorck_conditions(&space, &r);
        assert_abs_diff_eq!(r.optimality_gap, 2.0, epsilon = 1e-12);
        assert!(!rep.passes);
        assert_abs_diff_eq!(rep.complement_excess.unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn boundary_fraction() {
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let space = FiniteMetricSpace::from_polygon_grid(&square, 0.25).unwrap();
        let mask = space.boundary_mask().unwrap().to_vec();
        let n = space.len();
        let uniform = EnergyResult::from_measure(&space, vec![1.0 / n as f64; n], 1e-10).unwrap();
        let expected = mask.iter().filter(|b| **b).count() as f64 / n as f64;
        assert_abs_diff_eq!(
            boundary_support_fraction(&space, &uniform, &mask).unwrap(),
            expected,
            epsilon = 1e-14
        );
        assert!(matches!(
            boundary_support_fraction(&space, &uniform, &mask[1..]),
            Err(Error::MaskLengthMismatch { .. })
        ));

        let c = circle(16);
        let r = maximize_energy(&c, 10_000, 1e-10).unwrap();
        let all = vec![true; 16];
        assert_abs_diff_eq!(
            boundary_support_fraction(&c, &r, &all).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn signed_equilibrium_is_not_comparable() {
        let space = segment3();
        let r = maximize_energy(&space, 1000, 1e-12).unwrap();
        let mut eq = solve_equilibrium(&space).unwrap();
        eq.is_probability = false;
        let cv = cross_validate_equilibrium(&space, &r, &eq, 1e-6);
        assert!(!cv.comparable);
        assert!(cv.note.contains("not comparable"));
    }

    #[test]
    fn non_convergence_returns_best_iterate() {
        let space =
            FiniteMetricSpace::from_curve(&SupportCurve::cosine_perturbation(3, 0.05).unwrap(), 64)
                .unwrap();
        match maximize_energy(&space, 3, 1e-14) {
            Err(Error::NotConverged { best }) => {
                assert!(best.optimality_gap > 1e-14);
                assert!((best.measure.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(maximize_energy(&segment3(), 10, 0.0).is_err());
    }

    fn cloud() -> impl Strategy<Value = FiniteMetricSpace> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..25).prop_filter_map(
            "distinct",
            |pts| {
                let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
                FiniteMetricSpace::from_point_cloud(&pts).ok()
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn ascent_and_feasibility(space in cloud(), seed in any::<u64>()) {
            use rand::SeedableRng;
            let n = space.len();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let start: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
            let mut last = f64::NEG_INFINITY;
            let mut ok = true;
            frank_wolfe(space.distances(), &start, 2000, 1e-13, |it| {
                let sum: f64 = it.measure.iter().sum();
                ok &= (sum - 1.0).abs() <= 1e-14;
                ok &= it.measure.iter().all(|m| *m >= 0.0);
                ok &= it.energy >= last - 1e-12;
                last = it.energy;
            });
            prop_assert!(ok);
        }

        #[test]
        fn beats_uniform(space in cloud()) {
            let n = space.len();
            let uniform = EnergyResult::from_measure(&space, vec![1.0 / n as f64; n], 1e-10).unwrap();
            let best = match maximize_energy(&space, 100_000, 1e-10) {
                Ok(r) => r,
                Err(Error::NotConverged { best }) => *best,
                Err(e) => panic!("{e}"),
            };
            prop_assert!(best.energy >= uniform.energy - 1e-12);
            prop_assert!(best.optimality_gap >= -1e-12);
        }
    }
}
