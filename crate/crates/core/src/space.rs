//! Finite metric spaces with quadrature weights: the common input of every solver.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curve::{Point, SupportCurve};
use crate::error::{Error, Result};

/// Coordinates closer than this in both axes are treated as the same point.
pub const DUPLICATE_TOL: f64 = 1e-12;

/// Distance from the polygon boundary within which a grid point counts as inside.
pub const BOUNDARY_SNAP: f64 = 1e-9;

const EXHAUSTIVE_TRIANGLE_LIMIT: usize = 200;
const SAMPLED_TRIANGLES: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Curve,
    Cloud,
    PolygonGrid,
    Graph,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Distance,
    ExpNegDistance,
}

#[derive(Debug, Clone)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    coords: Option<Vec<Point>>,
    distances: DMatrix<f64>,
    weights: Vec<f64>,
    source: Source,
    boundary: Option<Vec<bool>>,
    params: Option<Vec<f64>>,
}

impl FiniteMetricSpace {
    /// Builds a space from an explicit distance matrix after checking the metric axioms.
    pub fn new(
        labels: Vec<String>,
        coords: Option<Vec<Point>>,
        distances: DMatrix<f64>,
        weights: Vec<f64>,
        source: Source,
    ) -> Result<Self> {
        let space = FiniteMetricSpace {
            labels,
            coords,
            distances,
            weights,
            source,
            boundary: None,
            params: None,
        };
        space.validate()?;
        Ok(space)
    }

    /// Checks symmetry, zero diagonal, positivity, the triangle inequality and weights.
    pub fn validate(&self) -> Result<()> {
        const OP: &str = "FiniteMetricSpace";
        let n = self.len();
        let d = &self.distances;
        if n == 0 {
            return Err(Error::invalid(OP, "space has no points"));
        }
        if d.nrows() != n || d.ncols() != n {
            return Err(Error::invalid(
                OP,
                format!(
                    "distance matrix is {}x{}, expected {n}x{n}",
                    d.nrows(),
                    d.ncols()
                ),
            ));
        }
        if self.weights.len() != n {
            return Err(Error::invalid(OP, "weights length does not match labels"));
        }
        if self.coords.as_ref().is_some_and(|c| c.len() != n) {
            return Err(Error::invalid(OP, "coords length does not match labels"));
        }
        if let Some(i) = self
            .weights
            .iter()
            .position(|w| !(*w > 0.0 && w.is_finite()))
        {
            return Err(Error::invalid(OP, format!("weight {i} is not positive")));
        }
        let scale = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let slack = 1e-12 * scale.max(1.0);
        for i in 0..n {
            if d[(i, i)] != 0.0 {
                return Err(Error::invalid(OP, format!("d({i},{i}) is not zero")));
            }
            for j in (i + 1)..n {
                let dij = d[(i, j)];
                if !(dij > 0.0 && dij.is_finite()) {
                    return Err(Error::invalid(
                        OP,
                        format!("d({i},{j}) = {dij} is not positive"),
                    ));
                }
                if (dij - d[(j, i)]).abs() > slack {
                    return Err(Error::invalid(OP, format!("d({i},{j}) != d({j},{i})")));
                }
            }
        }
        let violates = |i: usize, j: usize, k: usize| d[(i, j)] > d[(i, k)] + d[(k, j)] + slack;
        if n <= EXHAUSTIVE_TRIANGLE_LIMIT {
            for i in 0..n {
                for j in (i + 1)..n {
                    for k in 0..n {
                        if violates(i, j, k) {
                            return Err(Error::invalid(
                                OP,
                                format!("triangle inequality fails for ({i},{j}) via {k}"),
                            ));
                        }
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            for _ in 0..SAMPLED_TRIANGLES {
                let (i, j, k) = (
                    rng.random_range(0..n),
                    rng.random_range(0..n),
                    rng.random_range(0..n),
                );
                if violates(i, j, k) {
                    return Err(Error::invalid(
                        OP,
                        format!("triangle inequality fails for ({i},{j}) via {k}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Samples `curve` at `n` parameter-uniform nodes with arclength weights.
    pub fn from_curve(curve: &SupportCurve, n: usize) -> Result<Self> {
        let samples = curve.sample_uniform_parameter(n)?;
        let coords: Vec<Point> = samples.iter().map(|s| s.point).collect();
        Ok(FiniteMetricSpace {
            labels: (0..n).map(|j| format!("t{j}")).collect(),
            distances: euclidean_matrix(&coords),
            coords: Some(coords),
            weights: samples.iter().map(|s| s.weight).collect(),
            source: Source::Curve,
            boundary: Some(vec![true; n]),
            params: Some(samples.iter().map(|s| s.t).collect()),
        })
    }

    /// Unit-weight Euclidean space on distinct planar points.
    pub fn from_point_cloud(points: &[Point]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid(
                "from_point_cloud",
                format!("need at least 2 points, got {}", points.len()),
            ));
        }
        if let Some(p) = points.iter().flatten().find(|x| !x.is_finite()) {
            return Err(Error::invalid(
                "from_point_cloud",
                format!("non-finite coordinate {p}"),
            ));
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if (points[i][0] - points[j][0]).abs() <= DUPLICATE_TOL
                    && (points[i][1] - points[j][1]).abs() <= DUPLICATE_TOL
                {
                    return Err(Error::DuplicatePoints {
                        first: i,
                        second: j,
                    });
                }
            }
        }
        let n = points.len();
        Ok(FiniteMetricSpace {
            labels: (0..n).map(|i| format!("p{i}")).collect(),
            distances: euclidean_matrix(points),
            coords: Some(points.to_vec()),
            weights: vec![1.0; n],
            source: Source::Cloud,
            boundary: None,
            params: None,
        })
    }

    /// Axis-aligned grid anchored at the bounding-box corner, clipped to the polygon.
    ///
    /// Every retained node carries weight `spacing²`. A node is marked as boundary when
    /// one of its four grid neighbours falls outside the region.
    pub fn from_polygon_grid(vertices: &[Point], spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid(
                "from_polygon_grid",
                "spacing must be positive",
            ));
        }
        check_simple_polygon(vertices)?;
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in vertices {
            for a in 0..2 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        let steps = |a: usize| ((hi[a] - lo[a]) / spacing + 1e-9).floor() as i64;
        let (nx, ny) = (steps(0), steps(1));
        let at = |i: i64, j: i64| [lo[0] + i as f64 * spacing, lo[1] + j as f64 * spacing];
        let inside = |i: i64, j: i64| {
            i >= 0 && j >= 0 && i <= nx && j <= ny && contains_or_touches(vertices, at(i, j))
        };

        let mut coords = Vec::new();
        let mut labels = Vec::new();
        let mut boundary = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                if inside(i, j) {
                    coords.push(at(i, j));
                    labels.push(format!("g{i}_{j}"));
                    let edge = [(1, 0), (-1, 0), (0, 1), (0, -1)]
                        .iter()
                        .any(|(di, dj)| !inside(i + di, j + dj));
                    boundary.push(edge);
                }
            }
        }
        if coords.len() < 4 {
            return Err(Error::TooCoarse {
                points: coords.len(),
            });
        }
        let n = coords.len();
        Ok(FiniteMetricSpace {
            labels,
            distances: euclidean_matrix(&coords),
            coords: Some(coords),
            weights: vec![spacing * spacing; n],
            source: Source::PolygonGrid,
            boundary: Some(boundary),
            params: None,
        })
    }

    pub(crate) fn from_parts_unchecked(
        labels: Vec<String>,
        distances: DMatrix<f64>,
        weights: Vec<f64>,
        source: Source,
    ) -> Self {
        FiniteMetricSpace {
            labels,
            coords: None,
            distances,
            weights,
            source,
            boundary: None,
            params: None,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn coords(&self) -> Option<&[Point]> {
        self.coords.as_deref()
    }

    pub fn distances(&self) -> &DMatrix<f64> {
        &self.distances
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn source(&self) -> Source {
        self.source
    }

    /// Boundary flags for grid and curve spaces.
    pub fn boundary_mask(&self) -> Option<&[bool]> {
        self.boundary.as_deref()
    }

    /// Curve parameters `t_j` for spaces sampled from a curve.
    pub fn parameters(&self) -> Option<&[f64]> {
        self.params.as_deref()
    }

    pub fn diameter(&self) -> f64 {
        self.distances.iter().fold(0.0, |m: f64, x| m.max(*x))
    }

    /// Entrywise kernel transform of the distance matrix.
    pub fn apply_kernel(&self, kind: KernelKind) -> DMatrix<f64> {
        match kind {
            KernelKind::Distance => self.distances.clone(),
            KernelKind::ExpNegDistance => self.distances.map(|d| (-d).exp()),
        }
    }

    /// Same space with every node's label, coordinate and weight moved to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::invalid(
                "permuted",
                "not a permutation of the node indices",
            ));
        }
        let mut inverse = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        let pick = |v: &[f64]| inverse.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Ok(FiniteMetricSpace {
            labels: inverse.iter().map(|&i| self.labels[i].clone()).collect(),
            coords: self
                .coords
                .as_ref()
                .map(|c| inverse.iter().map(|&i| c[i]).collect()),
            distances: DMatrix::from_fn(n, n, |a, b| self.distances[(inverse[a], inverse[b])]),
            weights: pick(&self.weights),
            source: self.source,
            boundary: self
                .boundary
                .as_ref()
                .map(|m| inverse.iter().map(|&i| m[i]).collect()),
            params: self.params.as_ref().map(|t| pick(t)),
        })
    }
}

fn euclidean_matrix(points: &[Point]) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1])
        }
    })
}

fn check_simple_polygon(vertices: &[Point]) -> Result<()> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::DegeneratePolygon(format!("{n} vertices")));
    }
    if vertices.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::DegeneratePolygon("non-finite vertex".into()));
    }
    let area: f64 = (0..n)
        .map(|i| {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0;
    if area.abs() <= 1e-14 {
        return Err(Error::DegeneratePolygon("zero area".into()));
    }
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        if a == b {
            return Err(Error::DegeneratePolygon(format!("vertex {i} repeats")));
        }
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (c, d) = (vertices[j], vertices[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return Err(Error::DegeneratePolygon(format!("edges {i} and {j} cross")));
            }
        }
    }
    Ok(())
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Point, q: Point, r: Point| {
        r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    (d1 == 0.0 && on(c, d, a))
        || (d2 == 0.0 && on(c, d, b))
        || (d3 == 0.0 && on(a, b, c))
        || (d4 == 0.0 && on(a, b, d))
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (vx, vy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = vx * vx + vy * vy;
    let s = (((p[0] - a[0]) * vx + (p[1] - a[1]) * vy) / len2).clamp(0.0, 1.0);
    (p[0] - a[0] - s * vx).hypot(p[1] - a[1] - s * vy)
}

/// Even-odd containment with a boundary snap of [`BOUNDARY_SNAP`].
fn contains_or_touches(vertices: &[Point], p: Point) -> bool {
    let n = vertices.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        if segment_distance(p, a, b) <= BOUNDARY_SNAP {
            return true;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}
