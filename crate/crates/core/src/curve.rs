//! Closed strictly convex plane curves described by their support function.
//!
//! A curve is encoded by a trigonometric polynomial
//! `h(θ) = a_0 + Σ_k (a_k cos kθ + b_k sin kθ)`. The boundary point with outward
//! normal `(cos t, sin t)` is `γ(t) = h(t)·(cos t, sin t) + h'(t)·(−sin t, cos t)`,
//! the arclength element is `h + h''` and the curvature is its reciprocal.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Number of parameter values used by the dense strict-convexity check.
pub const CONVEXITY_GRID: usize = 4096;

/// `h + h''` must exceed this on the check grid.
pub const CONVEXITY_TOL: f64 = 1e-9;

/// Support function value and its first two derivatives at one angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportValue {
    pub h: f64,
    pub dh: f64,
    pub d2h: f64,
}

impl SupportValue {
    /// Arclength element `h + h''`.
    pub fn speed(&self) -> f64 {
        self.h + self.d2h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveFile", into = "CurveFile")]
pub struct SupportCurve {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

/// On-disk form: `{"cos": [a_0, a_1, ...], "sin": [b_1, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveFile {
    cos: Vec<f64>,
    #[serde(default)]
    sin: Vec<f64>,
}

impl TryFrom<CurveFile> for SupportCurve {
    type Error = Error;

    fn try_from(file: CurveFile) -> Result<Self> {
        SupportCurve::new(file.cos, file.sin)
    }
}

impl From<SupportCurve> for CurveFile {
    fn from(curve: SupportCurve) -> Self {
        CurveFile {
            cos: curve.cos,
            sin: curve.sin,
        }
    }
}

/// One node of a parameter-uniform discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    pub t: f64,
    pub point: Point,
    pub speed: f64,
    pub curvature: f64,
    pub weight: f64,
}

impl SupportCurve {
    /// `cos` holds `a_0..a_K`, `sin` holds `b_1..b_K`; either may be shorter than the other.
    pub fn new(cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        if cos.is_empty() {
            return Err(Error::invalid(
                "SupportCurve",
                "cosine coefficients must include a_0",
            ));
        }
        if cos.iter().chain(&sin).any(|c| !c.is_finite()) {
            return Err(Error::invalid(
                "SupportCurve",
                "coefficients must be finite",
            ));
        }
        Ok(SupportCurve { cos, sin })
    }

    pub fn circle(radius: f64) -> Result<Self> {
        Self::new(vec![radius], Vec::new())
    }

    /// `h(θ) = 1 + amplitude·cos(harmonic·θ)`.
    pub fn cosine_perturbation(harmonic: usize, amplitude: f64) -> Result<Self> {
        if harmonic == 0 {
            return Self::new(vec![1.0 + amplitude], Vec::new());
        }
        let mut cos = vec![0.0; harmonic + 1];
        cos[0] = 1.0;
        cos[harmonic] = amplitude;
        Self::new(cos, Vec::new())
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    pub fn degree(&self) -> usize {
        (self.cos.len() - 1).max(self.sin.len())
    }

    /// The constant term `a_0`; the curve length is `2π·a_0`.
    pub fn mean_radius(&self) -> f64 {
        self.cos[0]
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.cos.iter().map(|c| c * factor).collect(),
            self.sin.iter().map(|c| c * factor).collect(),
        )
    }

    /// Curve rotated counter-clockwise by `angle`: `h_new(θ) = h(θ − angle)`.
    pub fn rotated(&self, angle: f64) -> Result<Self> {
        let degree = self.degree();
        let mut cos = vec![0.0; degree + 1];
        let mut sin = vec![0.0; degree];
        cos[0] = self.cos[0];
        for k in 1..=degree {
            let a = self.cos.get(k).copied().unwrap_or(0.0);
            let b = self.sin.get(k - 1).copied().unwrap_or(0.0);
            let (s, c) = (k as f64 * angle).sin_cos();
            cos[k] = a * c - b * s;
            sin[k - 1] = a * s + b * c;
        }
        Self::new(cos, sin)
    }

    /// Exact `(h, h', h'')` at `t`.
    pub fn eval_support(&self, t: f64) -> SupportValue {
        let mut value = SupportValue {
            h: self.cos[0],
            dh: 0.0,
            d2h: 0.0,
        };
        for (k, &a) in self.cos.iter().enumerate().skip(1) {
            let kf = k as f64;
            let (s, c) = (kf * t).sin_cos();
            value.h += a * c;
            value.dh -= kf * a * s;
            value.d2h -= kf * kf * a * c;
        }
        for (i, &b) in self.sin.iter().enumerate() {
            let kf = (i + 1) as f64;
            let (s, c) = (kf * t).sin_cos();
            value.h += b * s;
            value.dh += kf * b * c;
            value.d2h -= kf * kf * b * s;
        }
        value
    }

    pub fn point(&self, t: f64) -> Point {
        let v = self.eval_support(t);
        point_from(t, &v)
    }

    pub fn speed(&self, t: f64) -> f64 {
        self.eval_support(t).speed()
    }

    pub fn curvature_at(&self, t: f64) -> Result<f64> {
        let speed = self.speed(t);
        if speed <= 0.0 {
            return Err(Error::NotStrictlyConvex { t, speed });
        }
        Ok(1.0 / speed)
    }

    /// Arclength from parameter 0 to `t`, integrated in closed form.
    pub fn arclength_at(&self, t: f64) -> f64 {
        // ∫₀ᵗ (h + h'') = ∫₀ᵗ h + h'(t) − h'(0)
        let mut integral = self.cos[0] * t;
        for (k, &a) in self.cos.iter().enumerate().skip(1) {
            integral += a * (k as f64 * t).sin() / k as f64;
        }
        for (i, &b) in self.sin.iter().enumerate() {
            let kf = (i + 1) as f64;
            integral += b * (1.0 - (kf * t).cos()) / kf;
        }
        integral + self.eval_support(t).dh - self.eval_support(0.0).dh
    }

    /// Verifies `h + h'' > CONVEXITY_TOL` on the dense grid and at every `extra` parameter.
    pub fn check_strict_convexity(&self, extra: &[f64]) -> Result<()> {
        let grid = (0..CONVEXITY_GRID).map(|j| TAU * j as f64 / CONVEXITY_GRID as f64);
        for t in grid.chain(extra.iter().copied()) {
            let speed = self.speed(t);
            if !(speed > CONVEXITY_TOL) {
                return Err(Error::NotStrictlyConvex { t, speed });
            }
        }
        Ok(())
    }

    pub fn is_strictly_convex(&self) -> bool {
        self.check_strict_convexity(&[]).is_ok()
    }

    /// `∫₀^{2π} (h + h'') dt = 2π·a_0`.
    pub fn length(&self) -> Result<f64> {
        self.check_strict_convexity(&[])?;
        Ok(TAU * self.cos[0])
    }

    /// Samples at `t_j = 2πj/n` carrying periodic-trapezoid arclength weights.
    pub fn sample_uniform_parameter(&self, n: usize) -> Result<Vec<CurveSample>> {
        if n < 3 {
            return Err(Error::invalid(
                "sample_uniform_parameter",
                format!("need at least 3 samples, got {n}"),
            ));
        }
        let ts: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
        self.check_strict_convexity(&ts)?;
        let step = TAU / n as f64;
        Ok(ts
            .into_iter()
            .map(|t| {
                let v = self.eval_support(t);
                let speed = v.speed();
                CurveSample {
                    t,
                    point: point_from(t, &v),
                    speed,
                    curvature: 1.0 / speed,
                    weight: speed * step,
                }
            })
            .collect())
    }

    /// Extremes of the curvature over `grid` parameter-uniform points.
    pub fn min_max_curvature(&self, grid: usize) -> Result<(f64, f64)> {
        if grid < 64 {
            return Err(Error::invalid(
                "min_max_curvature",
                format!("grid must have at least 64 points, got {grid}"),
            ));
        }
        self.check_strict_convexity(&[])?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..grid {
            let t = TAU * j as f64 / grid as f64;
            let speed = self.speed(t);
            if speed <= 0.0 {
                return Err(Error::NotStrictlyConvex { t, speed });
            }
            let kappa = 1.0 / speed;
            lo = lo.min(kappa);
            hi = hi.max(kappa);
        }
        Ok((lo, hi))
    }

    /// Normalized curvature extremes `(length/2π)·(κ_min, κ_max)`.
    pub fn roundness(&self, grid: usize) -> Result<(f64, f64)> {
        let (lo, hi) = self.min_max_curvature(grid)?;
        let scale = self.length()? / TAU;
        Ok((lo * scale, hi * scale))
    }

    /// Smallest and largest `‖γ(t)‖` over `grid` parameter-uniform points.
    pub fn radial_range(&self, grid: usize) -> (f64, f64) {
        (0..grid.max(1))
            .map(|j| {
                let [x, y] = self.point(TAU * j as f64 / grid.max(1) as f64);
                x.hypot(y)
            })
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r), hi.max(r))
            })
    }
}

fn point_from(t: f64, v: &SupportValue) -> Point {
    let (s, c) = t.sin_cos();
    [v.h * c - v.dh * s, v.h * s + v.dh * c]
}
