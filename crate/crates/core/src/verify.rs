//! Quantitative checks on convex curves: near-constancy of the curvature measure,
//! density against curvature, curvature sweeps and a low-curvature construction.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::curve::SupportCurve;
use crate::equilibrium::solve_equilibrium;
use crate::error::{Error, Result};
use crate::space::FiniteMetricSpace;

const GRID: usize = 4096;

#[derive(Debug, Clone, Serialize)]
pub struct Prop3Report {
    /// `max_t V(t) − min_t V(t)` for `V(t) = (1/2π)∫‖γ(t) − γ(s)‖ ds`.
    pub variation: f64,
    pub mean: f64,
    /// `4·max(|h − 1| + |h'|)`.
    pub bound: f64,
    /// `4π·max(|h − 1| + |h'|)`.
    pub bound_wide: f64,
    /// 4, or 4π when the tighter bound was violated.
    pub constant_used: f64,
    pub passes: bool,
    pub discrepancy: Option<String>,
    pub samples: usize,
}

/// Spread of the potential of the normalized curvature measure `κ dσ / 2π`.
///
/// With `κ·(h + h'') = 1` the measure is `dt / 2π` in the support parameter, so the
/// potential is a parameter-uniform average of distances.
pub fn curvature_measure_variation(curve: &SupportCurve, n: usize) -> Result<Prop3Report> {
    if n < 64 {
        return Err(Error::invalid(
            "curvature_measure_variation",
            format!("need at least 64 samples, got {n}"),
        ));
    }
    let space = FiniteMetricSpace::from_curve(curve, n)?;
    let d = space.distances();
    let v: Vec<f64> = (0..n).map(|i| d.row(i).sum() / n as f64).collect();
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
            (lo.min(*x), hi.max(*x))
        });
    let variation = hi - lo;

    let params = space.parameters().expect("curve spaces carry parameters");
    let grid = (0..GRID).map(|j| TAU * j as f64 / GRID as f64);
    let deviation = grid
        .chain(params.iter().copied())
        .map(|t| {
            let s = curve.eval_support(t);
            (s.h - 1.0).abs() + s.dh.abs()
        })
        .fold(0.0, f64::max);
    let bound = 4.0 * deviation;
    let bound_wide = 4.0 * PI * deviation;
    let slack = 1e-12;
    let (constant_used, passes, discrepancy) = if variation <= bound + slack {
        (4.0, true, None)
    } else {
        let note = format!("variation {variation:.6e} exceeds 4·max = {bound:.6e}; using 4π");
        (4.0 * PI, variation <= bound_wide + slack, Some(note))
    };
    Ok(Prop3Report {
        variation,
        mean: v.iter().sum::<f64>() / n as f64,
        bound,
        bound_wide,
        constant_used,
        passes,
        discrepancy,
        samples: n,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityRow {
    pub t: f64,
    pub arclength: f64,
    pub density: f64,
    pub curvature: f64,
    pub rescaled_curvature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum Correlation {
    /// Both columns constant and equal.
    ExactMatch,
    /// At least one column constant, so Pearson's coefficient is undefined.
    Undefined,
    Value(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityComparison {
    pub rows: Vec<DensityRow>,
    pub correlation: Correlation,
    /// `max_i |ρ_i − κ_i/2π|`.
    pub sup_distance: f64,
    pub density_argmax: usize,
    pub curvature_argmax: usize,
    /// For each local maximum of κ, the cyclic index distance to the nearest local maximum of ρ.
    pub peak_offsets: Vec<usize>,
}

impl DensityComparison {
    pub fn max_peak_offset(&self) -> Option<usize> {
        self.peak_offsets.iter().copied().max()
    }
}

fn cyclic_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b) % n;
    d.min(n - d)
}

fn argmax(values: &[f64]) -> usize {
    (0..values.len()).fold(0, |best, i| if values[i] > values[best] { i } else { best })
}

/// Indices that are no smaller than both cyclic neighbours and strictly above one.
fn local_maxima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    (0..n)
        .filter(|&i| {
            let prev = values[(i + n - 1) % n];
            let next = values[(i + 1) % n];
            values[i] >= prev && values[i] >= next && (values[i] > prev || values[i] > next)
        })
        .collect()
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    let scale = |s: f64, m: f64| s.sqrt() <= 1e-12 * m.abs().max(f64::MIN_POSITIVE) * n.sqrt();
    if scale(sxx, mx) || scale(syy, my) {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Equilibrium density along the curve next to the rescaled curvature `κ/2π`.
pub fn density_vs_curvature(curve: &SupportCurve, n: usize) -> Result<DensityComparison> {
    let space = FiniteMetricSpace::from_curve(curve, n)?;
    let solution = solve_equilibrium(&space)?;
    if !solution.is_probability {
        return Err(Error::NotProbability {
            min_mass: solution.min_mass,
        });
    }
    let params = space.parameters().expect("curve spaces carry parameters");
    let rows: Vec<DensityRow> = params
        .iter()
        .zip(&solution.densities)
        .map(|(&t, &density)| {
            let curvature = 1.0 / curve.speed(t);
            DensityRow {
                t,
                arclength: curve.arclength_at(t),
                density,
                curvature,
                rescaled_curvature: curvature / TAU,
            }
        })
        .collect();
    let rho: Vec<f64> = rows.iter().map(|r| r.density).collect();
    let kappa: Vec<f64> = rows.iter().map(|r| r.rescaled_curvature).collect();
    let sup_distance = rho
        .iter()
        .zip(&kappa)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let correlation = match pearson(&rho, &kappa) {
        Some(c) => Correlation::Value(c),
        None if sup_distance <= 1e-10 => Correlation::ExactMatch,
        None => Correlation::Undefined,
    };
    let rho_peaks = local_maxima(&rho);
    let peak_offsets = local_maxima(&kappa)
        .into_iter()
        .filter_map(|k| rho_peaks.iter().map(|&p| cyclic_distance(k, p, n)).min())
        .collect();
    Ok(DensityComparison {
        density_argmax: argmax(&rho),
        curvature_argmax: argmax(&kappa),
        rows,
        correlation,
        sup_distance,
        peak_offsets,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub a: f64,
    pub roundness_min: Option<f64>,
    pub roundness_max: Option<f64>,
    pub min_mass: Option<f64>,
    pub is_probability: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub samples: usize,
    pub entries: Vec<SweepEntry>,
    /// Linear interpolation of the first zero crossing of `min_mass`.
    pub sign_change: Option<f64>,
}

/// Solves every member of a one-parameter family and locates where `min_mass` changes sign.
///
/// Members that fail (e.g. lose convexity) are recorded and skipped.
pub fn curvature_sweep<F>(family: F, a_values: &[f64], n: usize) -> Result<SweepReport>
where
    F: Fn(f64) -> Result<SupportCurve>,
{
    if a_values.is_empty() {
        return Err(Error::invalid("curvature_sweep", "no parameter values"));
    }
    if a_values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(
            "curvature_sweep",
            "parameter values must be strictly increasing",
        ));
    }
    let entries: Vec<SweepEntry> = a_values
        .iter()
        .map(|&a| {
            let attempt = || -> Result<(f64, f64, f64, bool)> {
                let curve = family(a)?;
                let (lo, hi) = curve.roundness(GRID)?;
                let sol = solve_equilibrium(&FiniteMetricSpace::from_curve(&curve, n)?)?;
                Ok((lo, hi, sol.min_mass, sol.is_probability))
            };
            match attempt() {
                Ok((lo, hi, m, p)) => SweepEntry {
                    a,
                    roundness_min: Some(lo),
                    roundness_max: Some(hi),
                    min_mass: Some(m),
                    is_probability: Some(p),
                    error: None,
                },
                Err(e) => SweepEntry {
                    a,
                    roundness_min: None,
                    roundness_max: None,
                    min_mass: None,
                    is_probability: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let sign_change = entries
        .windows(2)
        .find_map(|w| match (w[0].min_mass, w[1].min_mass) {
            (Some(m0), Some(m1)) if (m0 > 0.0) != (m1 > 0.0) => {
                Some(w[0].a + (w[1].a - w[0].a) * m0 / (m0 - m1))
            }
            _ => None,
        });
    Ok(SweepReport {
        samples: n,
        entries,
        sign_change,
    })
}

/// `h = 1 + Σ_{k=2}^{N} c_k cos kθ` with `h + h'' = 1 + 2β·Σ_{k=2}^{N} (1 − k/(N+1)) cos kθ`.
///
/// The arclength element is a Fejér kernel with its first harmonic removed, so it peaks
/// at `θ = 0` (the flat point) and stays above `1 − 3β`. Strictly convex for `β < 1/3`.
pub fn flat_spot_curve(degree: usize, beta: f64) -> Result<SupportCurve> {
    if degree < 2 {
        return Err(Error::invalid(
            "flat_spot_curve",
            "degree must be at least 2",
        ));
    }
    let mut cos = vec![0.0; degree + 1];
    cos[0] = 1.0;
    for (k, c) in cos.iter_mut().enumerate().skip(2) {
        let kf = k as f64;
        *c = 2.0 * beta * (1.0 - kf / (degree as f64 + 1.0)) / (1.0 - kf * kf);
    }
    SupportCurve::new(cos, Vec::new())
}

pub const FLAT_CURVATURE_TARGET: f64 = 1e-4;
pub const FLAT_ANNULUS_TARGET: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct FlatCurveReport {
    pub curve: SupportCurve,
    pub degree: usize,
    pub beta: f64,
    pub samples: usize,
    pub annulus_inner: f64,
    pub annulus_outer: f64,
    pub annulus_target_met: bool,
    pub curvature_min: f64,
    pub curvature_target_met: bool,
    /// Parameter of the flattest point.
    pub flat_t: f64,
    pub is_probability: bool,
    pub min_mass: f64,
    pub most_negative_index: usize,
    pub most_negative_t: f64,
    /// Cyclic parameter distance between the most negative density and the flat point.
    pub offset_from_flat: f64,
    pub in_lowest_curvature_quartile: bool,
}

struct Candidate {
    curve: SupportCurve,
    degree: usize,
    beta: f64,
    half_width: f64,
    inner: f64,
    outer: f64,
    kappa_min: f64,
}

/// Searches the flat-spot family for a curve close to the unit circle with a point of very
/// low curvature, then solves on it.
///
/// Degrees up to `n/4` keep the flat region resolved by the samples. The annulus
/// `1 ± 0.001` is tried first and widened by factors of two until a candidate with a
/// signed solution appears; the lowest-curvature candidate is used if none does.
pub fn prop2_flat_curve_demo(n: usize) -> Result<FlatCurveReport> {
    if n < 256 {
        return Err(Error::invalid(
            "prop2_flat_curve_demo",
            format!("need n ≥ 256, got {n}"),
        ));
    }
    let mut candidates = Vec::new();
    let mut degree = 8;
    while degree <= n / 4 {
        for step in 1..=8 {
            let beta = 0.04 * step as f64;
            let raw = flat_spot_curve(degree, beta)?;
            if !raw.is_strictly_convex() {
                continue;
            }
            let (lo, hi) = raw.radial_range(GRID);
            let curve = raw.scaled(2.0 / (lo + hi))?;
            let (inner, outer) = curve.radial_range(GRID);
            let (kappa_min, _) = curve.min_max_curvature(GRID)?;
            if curve.roundness(GRID)?.0 >= 0.5 {
                continue;
            }
            candidates.push(Candidate {
                curve,
                degree,
                beta,
                half_width: (outer - inner) / 2.0,
                inner,
                outer,
                kappa_min,
            });
        }
        degree *= 2;
    }
    if candidates.is_empty() {
        return Err(Error::SearchBudgetExceeded(format!(
            "no strictly convex candidate with roundness below 1/2 at n = {n}"
        )));
    }
    candidates.sort_by(|a, b| a.kappa_min.total_cmp(&b.kappa_min));

    let mut level = FLAT_ANNULUS_TARGET;
    let mut tried = vec![false; candidates.len()];
    while level < 1.0 {
        for (i, c) in candidates.iter().enumerate() {
            if tried[i] || c.half_width > level {
                continue;
            }
            tried[i] = true;
            let report = flat_report(c, n)?;
            if !report.is_probability {
                return Ok(report);
            }
        }
        level *= 2.0;
    }
    flat_report(&candidates[0], n)
}

fn flat_report(c: &Candidate, n: usize) -> Result<FlatCurveReport> {
    let space = FiniteMetricSpace::from_curve(&c.curve, n)?;
    let sol = solve_equilibrium(&space)?;
    let params = space.parameters().expect("curve spaces carry parameters");
    let curvature: Vec<f64> = params.iter().map(|&t| 1.0 / c.curve.speed(t)).collect();
    let flat_index = (0..n).fold(0, |b, i| if curvature[i] < curvature[b] { i } else { b });
    let most_negative_index = (0..n).fold(0, |b, i| {
        if sol.densities[i] < sol.densities[b] {
            i
        } else {
            b
        }
    });
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| curvature[i].total_cmp(&curvature[j]));
    let quartile = &order[..n.div_ceil(4)];
    Ok(FlatCurveReport {
        curve: c.curve.clone(),
        degree: c.degree,
        beta: c.beta,
        samples: n,
        annulus_inner: c.inner,
        annulus_outer: c.outer,
        annulus_target_met: c.inner >= 1.0 - FLAT_ANNULUS_TARGET
            && c.outer <= 1.0 + FLAT_ANNULUS_TARGET,
        curvature_min: c.kappa_min,
        curvature_target_met: c.kappa_min <= FLAT_CURVATURE_TARGET,
        flat_t: params[flat_index],
        is_probability: sol.is_probability,
        min_mass: sol.min_mass,
        most_negative_index,
        most_negative_t: params[most_negative_index],
        offset_from_flat: cyclic_distance(most_negative_index, flat_index, n) as f64 * TAU
            / n as f64,
        in_lowest_curvature_quartile: quartile.contains(&most_negative_index),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn circle_variation_vanishes() {
        let r = curvature_measure_variation(&SupportCurve::circle(1.0).unwrap(), 256).unwrap();
        assert!(r.variation <= 1e-10, "{}", r.variation);
        assert_eq!(r.bound, 0.0);
        assert!(r.passes);
        // κ dσ / 2π is the uniform measure on the circle, so the potential is r = 4/π
        assert_abs_diff_eq!(r.mean, 4.0 / PI, epsilon = 1e-4);
    }

    #[test]
    fn trefoil_bound() {
        let curve = SupportCurve::cosine_perturbation(3, 0.05).unwrap();
        let r = curvature_measure_variation(&curve, 256).unwrap();
        assert!(r.variation > 0.0);
        assert!(r.variation <= r.bound);
        assert_eq!(r.constant_used, 4.0);
        // max of 0.05|cos 3θ| + 0.15|sin 3θ| is √(0.05² + 0.15²)
        assert_abs_diff_eq!(r.bound, 4.0 * (0.05f64.hypot(0.15)), epsilon = 1e-6);
    }

    #[test]
    fn variation_is_at_most_linear() {
        let v: Vec<f64> = [0.01, 0.02, 0.05]
            .iter()
            .map(|&e| {
                curvature_measure_variation(&SupportCurve::cosine_perturbation(2, e).unwrap(), 256)
                    .unwrap()
                    .variation
            })
            .collect();
        let slope = |i: usize, j: usize, ei: f64, ej: f64| (v[j] / v[i]).ln() / (ej / ei).ln();
        assert!(slope(0, 1, 0.01, 0.02) <= 1.2);
        assert!(slope(1, 2, 0.02, 0.05) <= 1.2);
    }

    #[test]
    fn rejects_coarse_grid() {
        assert!(curvature_measure_variation(&SupportCurve::circle(1.0).unwrap(), 32).is_err());
    }

    #[test]
    fn circle_density_matches_curvature() {
        let c = density_vs_curvature(&SupportCurve::circle(1.0).unwrap(), 128).unwrap();
        assert_eq!(c.correlation, Correlation::ExactMatch);
        assert!(c.sup_distance <= 1e-10);
        for row in &c.rows {
            assert_abs_diff_eq!(row.density, 1.0 / TAU, epsilon = 1e-10);
        }
    }

    #[test]
    fn trefoil_density_follows_curvature() {
        let c = density_vs_curvature(&SupportCurve::cosine_perturbation(3, 0.05).unwrap(), 256)
            .unwrap();
        match c.correlation {
            Correlation::Value(r) => assert!(r > 0.0),
            other => panic!("{other:?}"),
        }
        assert_eq!(c.peak_offsets.len(), 3);
        assert!(c.max_peak_offset().unwrap() <= 1);
    }

    #[test]
    fn rotation_shifts_table() {
        let n = 96;
        let curve = SupportCurve::cosine_perturbation(3, 0.05).unwrap();
        let shift = 5;
        let rotated = curve.rotated(TAU * shift as f64 / n as f64).unwrap();
        let a = density_vs_curvature(&curve, n).unwrap();
        let b = density_vs_curvature(&rotated, n).unwrap();
        for i in 0..n {
            let j = (i + shift) % n;
            assert_abs_diff_eq!(a.rows[i].density, b.rows[j].density, epsilon = 1e-9);
            assert_abs_diff_eq!(a.rows[i].curvature, b.rows[j].curvature, epsilon = 1e-9);
        }
    }

    #[test]
    fn signed_solution_is_rejected() {
        let curve = flat_spot_curve(32, 0.3).unwrap();
        assert!(matches!(
            density_vs_curvature(&curve, 256),
            Err(Error::NotProbability { .. })
        ));
    }

    #[test]
    fn single_harmonic_sweep_decreases() {
        let a: Vec<f64> = (0..=6).map(|i| 0.05 * i as f64).collect();
        let r = curvature_sweep(|a| SupportCurve::cosine_perturbation(2, a), &a, 256).unwrap();
        let m: Vec<f64> = r.entries.iter().map(|e| e.min_mass.unwrap()).collect();
        assert_abs_diff_eq!(m[0], 1.0 / 256.0, epsilon = 1e-12);
        assert!(m.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(r.entries[0].is_probability, Some(true));
    }

    #[test]
    fn flat_sweep_changes_sign() {
        let betas: Vec<f64> = (0..=8).map(|i| 0.04 * i as f64).collect();
        let r = curvature_sweep(|b| flat_spot_curve(32, b), &betas, 256).unwrap();
        let b = r.sign_change.expect("sign change");
        assert!(b > 0.0 && b < 0.32);
        let first_signed = r
            .entries
            .iter()
            .position(|e| e.is_probability == Some(false))
            .unwrap();
        assert!(r.entries[..first_signed]
            .iter()
            .all(|e| e.is_probability == Some(true)));
    }

    #[test]
    fn sweep_records_failures() {
        let r = curvature_sweep(
            |a| SupportCurve::cosine_perturbation(2, a),
            &[0.1, 0.4],
            128,
        )
        .unwrap();
        assert!(r.entries[0].error.is_none());
        assert!(r.entries[1].error.is_some());
        assert!(curvature_sweep(
            |a| SupportCurve::cosine_perturbation(2, a),
            &[0.1, 0.1],
            128
        )
        .is_err());
    }

    #[test]
    fn flat_family_is_convex_below_one_third() {
        for degree in [4, 16, 64] {
            assert!(flat_spot_curve(degree, 0.32).unwrap().is_strictly_convex());
        }
    }

    #[test]
    fn flat_demo() {
        let r = prop2_flat_curve_demo(256).unwrap();
        assert!(!r.is_probability);
        assert!(r.in_lowest_curvature_quartile);
        let (lo, hi) = r.curve.radial_range(4096);
        assert!(lo >= r.annulus_inner - 1e-15 && hi <= r.annulus_outer + 1e-15);
        assert!(prop2_flat_curve_demo(128).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn variation_bound_holds(coeffs in prop::collection::vec(-0.03f64..0.03, 2..8)) {
            let mut cos = vec![1.0, 0.0];
            let sin = vec![0.0];
            cos.extend(coeffs);
            let curve = SupportCurve::new(cos, sin).unwrap();
            prop_assume!(curve.is_strictly_convex());
            let r = curvature_measure_variation(&curve, 128).unwrap();
            prop_assert!(r.variation <= r.bound, "{} > {}", r.variation, r.bound);
        }
    }
}
