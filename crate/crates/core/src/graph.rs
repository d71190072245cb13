//! Curvature of finite connected graphs from the hop-distance matrix.
//!
//! The curvature vector `x` solves `D·x = (1/n)·1` where `D` holds shortest-path hop
//! counts. It is left unnormalized.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Method};
use crate::space::{FiniteMetricSpace, Source};

/// Undirected, unweighted simple graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSpec {
    n: usize,
    edges: Vec<(usize, usize)>,
    labels: Vec<String>,
    adjacency: Vec<Vec<usize>>,
}

impl GraphSpec {
    /// Validates the edge list. Labels default to the vertex id.
    pub fn new(n: usize, edges: Vec<(usize, usize)>, labels: Option<Vec<String>>) -> Result<Self> {
        const OP: &str = "GraphSpec::new";
        if n == 0 {
            return Err(Error::invalid(OP, "graph has no vertices"));
        }
        let labels = match labels {
            Some(l) if l.len() != n => {
                return Err(Error::invalid(
                    OP,
                    format!("{} labels for {n} vertices", l.len()),
                ))
            }
            Some(l) => l,
            None => (0..n).map(|i| i.to_string()).collect(),
        };
        let mut seen = BTreeSet::new();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            if u >= n || v >= n {
                return Err(Error::invalid(
                    OP,
                    format!("edge ({u}, {v}) out of range for {n} vertices"),
                ));
            }
            if u == v {
                return Err(Error::invalid(OP, format!("self-loop at vertex {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::invalid(OP, format!("duplicate edge ({u}, {v})")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(GraphSpec {
            n,
            edges,
            labels,
            adjacency,
        })
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        GraphSpec::new(n, edges, None)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid(
                "GraphSpec::cycle",
                "cycle needs at least 3 vertices",
            ));
        }
        GraphSpec::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect(), None)
    }

    pub fn path(n: usize) -> Result<Self> {
        GraphSpec::new(n, (1..n).map(|i| (i - 1, i)).collect(), None)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Same graph with vertex `i` moved to position `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let mut check = perm.to_vec();
        check.sort_unstable();
        if perm.len() != self.n || check.iter().enumerate().any(|(i, &p)| i != p) {
            return Err(Error::invalid("GraphSpec::relabeled", "not a permutation"));
        }
        let edges = self
            .edges
            .iter()
            .map(|&(u, v)| (perm[u], perm[v]))
            .collect();
        let mut labels = vec![String::new(); self.n];
        for (i, l) in self.labels.iter().enumerate() {
            labels[perm[i]] = l.clone();
        }
        GraphSpec::new(self.n, edges, Some(labels))
    }

    fn bfs(&self, source: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.n];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("queued vertices are reached");
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut assigned = vec![false; self.n];
        let mut out = Vec::new();
        for s in 0..self.n {
            if assigned[s] {
                continue;
            }
            let comp: Vec<usize> = self
                .bfs(s)
                .iter()
                .enumerate()
                .filter_map(|(i, d)| d.map(|_| i))
                .collect();
            for &i in &comp {
                assigned[i] = true;
            }
            out.push(comp);
        }
        out
    }
}

/// Hop-count distances by breadth-first search from every vertex.
pub fn all_pairs_distances(g: &GraphSpec) -> Result<Vec<Vec<u32>>> {
    let mut rows = Vec::with_capacity(g.n);
    for s in 0..g.n {
        let row: Option<Vec<u32>> = g.bfs(s).into_iter().collect();
        match row {
            Some(r) => rows.push(r),
            None => {
                return Err(Error::Disconnected {
                    components: g.components(),
                })
            }
        }
    }
    Ok(rows)
}

fn to_real(d: &[Vec<u32>]) -> DMatrix<f64> {
    let n = d.len();
    DMatrix::from_fn(n, n, |i, j| d[i][j] as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphCurvature {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
    pub total: f64,
    pub rank: usize,
    /// False when `D` is singular and the minimum-norm solution is reported.
    pub unique: bool,
    pub condition: f64,
}

/// Solves `D·x = (1/n)·1`.
///
/// A singular but consistent system yields the minimum-norm solution with
/// `unique = false`; an inconsistent one is an error.
pub fn graph_curvature(g: &GraphSpec) -> Result<GraphCurvature> {
    let d = to_real(&all_pairs_distances(g)?);
    let n = g.n;
    if n == 1 {
        return Err(Error::SingularDistanceMatrix { rank: 0, n });
    }
    let rhs = DVector::from_element(n, 1.0 / n as f64);
    let sol =
        linalg::solve(&d, &rhs).map_err(|e| Error::SingularDistanceMatrix { rank: e.rank, n })?;
    let values: Vec<f64> = sol.x.iter().copied().collect();
    Ok(GraphCurvature {
        labels: g.labels.clone(),
        total: values.iter().sum(),
        values,
        rank: sol.rank,
        unique: sol.method == Method::Direct,
        condition: sol.condition,
    })
}

/// Hop-distance metric space with unit weights.
pub fn graph_to_metric_space(g: &GraphSpec) -> Result<FiniteMetricSpace> {
    let d = to_real(&all_pairs_distances(g)?);
    Ok(FiniteMetricSpace::from_parts_unchecked(
        g.labels.clone(),
        d,
        vec![1.0; g.n],
        Source::Graph,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{gross_constant, solve_equilibrium};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn small_distances() {
        let k3 = all_pairs_distances(&GraphSpec::complete(3).unwrap()).unwrap();
        assert_eq!(k3, vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]);
        let p3 = all_pairs_distances(&GraphSpec::path(3).unwrap()).unwrap();
        assert_eq!(p3[0][2], 2);
    }

    #[test]
    fn cycle_rows_are_rotations() {
        let d = all_pairs_distances(&GraphSpec::cycle(5).unwrap()).unwrap();
        for (i, row) in d.iter().enumerate() {
            for j in 0..5 {
                let k = (j + 5 - i) % 5;
                let hops = k.min(5 - k) as u32;
                assert_eq!(row[j], hops);
                assert_eq!(row[j], d[0][k]);
            }
        }
    }

    #[test]
    fn disconnected_lists_components() {
        let g = GraphSpec::new(5, vec![(0, 1), (2, 3)], None).unwrap();
        match all_pairs_distances(&g) {
            Err(Error::Disconnected { components }) => {
                assert_eq!(components, vec![vec![0, 1], vec![2, 3], vec![4]]);
            }
            other => panic!("{other:?}"),
        }
        assert!(graph_to_metric_space(&g).is_err());
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(GraphSpec::new(3, vec![(0, 0)], None).is_err());
        assert!(GraphSpec::new(3, vec![(0, 1), (1, 0)], None).is_err());
        assert!(GraphSpec::new(3, vec![(0, 3)], None).is_err());
        assert!(GraphSpec::new(2, vec![(0, 1)], Some(vec!["a".into()])).is_err());
    }

    #[test]
    fn complete_graphs() {
        for n in 2..10 {
            let c = graph_curvature(&GraphSpec::complete(n).unwrap()).unwrap();
            let expected = 1.0 / (n * (n - 1)) as f64;
            for x in &c.values {
                assert_abs_diff_eq!(*x, expected, epsilon = 1e-12);
            }
            assert!(c.unique);
        }
    }

    #[test]
    fn four_cycle_is_singular_but_consistent() {
        let g = GraphSpec::cycle(4).unwrap();
        let c = graph_curvature(&g).unwrap();
        for x in &c.values {
            assert_abs_diff_eq!(*x, 1.0 / 16.0, epsilon = 1e-12);
        }
        assert_eq!(c.rank, 3);
        assert!(!c.unique);
        let space = graph_to_metric_space(&g).unwrap();
        let eq = solve_equilibrium(&space).unwrap();
        for m in &eq.masses {
            assert_abs_diff_eq!(*m, 0.25, epsilon = 1e-12);
        }
        let gc = gross_constant(&eq, &space);
        assert_abs_diff_eq!(gc.value.unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn path_of_three() {
        let g = GraphSpec::path(3).unwrap();
        let c = graph_curvature(&g).unwrap();
        assert_abs_diff_eq!(c.values[0], 1.0 / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.values[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.values[2], 1.0 / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.total, 1.0 / 3.0, epsilon = 1e-14);
        let eq = solve_equilibrium(&graph_to_metric_space(&g).unwrap()).unwrap();
        assert_abs_diff_eq!(eq.masses[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(eq.masses[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eq.r, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn k2_space() {
        let s = graph_to_metric_space(&GraphSpec::complete(2).unwrap()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.distances()[(0, 1)], 1.0);
        assert_eq!(s.source(), Source::Graph);
    }

    #[test]
    fn inconsistent_singular_matrix_is_reported() {
        let edges = vec![
            (0, 3),
            (0, 4),
            (0, 5),
            (1, 3),
            (1, 4),
            (1, 5),
            (2, 3),
            (2, 4),
            (2, 5),
            (3, 4),
            (3, 5),
            (3, 6),
            (4, 5),
            (4, 6),
            (5, 6),
        ];
        let g = GraphSpec::new(7, edges, None).unwrap();
        match graph_curvature(&g) {
            Err(Error::SingularDistanceMatrix { rank, n }) => assert_eq!((rank, n), (6, 7)),
            other => panic!("{other:?}"),
        }
        assert!(solve_equilibrium(&graph_to_metric_space(&g).unwrap()).is_err());
    }

    #[test]
    fn cycles_are_constant() {
        for n in 3..16 {
            let c = graph_curvature(&GraphSpec::cycle(n).unwrap()).unwrap();
            let first = c.values[0];
            for x in &c.values {
                assert_abs_diff_eq!(*x, first, epsilon = 1e-12);
            }
        }
    }

    fn connected_graph() -> impl Strategy<Value = GraphSpec> {
        (3usize..12)
            .prop_flat_map(|n| {
                let tree = prop::collection::vec(any::<prop::sample::Index>(), n - 1);
                let extra = prop::collection::vec((0..n, 0..n), 0..2 * n);
                (Just(n), tree, extra)
            })
            .prop_map(|(n, tree, extra)| {
                let mut set = BTreeSet::new();
                for (i, parent) in tree.iter().enumerate() {
                    let v = i + 1;
                    set.insert((parent.index(v), v));
                }
                for (u, v) in extra {
                    if u != v {
                        set.insert((u.min(v), u.max(v)));
                    }
                }
                GraphSpec::new(n, set.into_iter().collect(), None).unwrap()
            })
    }

    proptest! {
        #[test]
        fn triangle_inequality(g in connected_graph()) {
            let d = all_pairs_distances(&g).unwrap();
            let n = g.len();
            for i in 0..n {
                prop_assert_eq!(d[i][i], 0);
                for j in 0..n {
                    prop_assert_eq!(d[i][j], d[j][i]);
                    for k in 0..n {
                        prop_assert!(d[i][k] <= d[i][j] + d[j][k]);
                    }
                }
            }
        }

        #[test]
        fn relabeling_permutes_curvature(g in connected_graph(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let n = g.len();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let h = g.relabeled(&perm).unwrap();
            match (graph_curvature(&g), graph_curvature(&h)) {
                (Ok(a), Ok(b)) => {
                    for i in 0..n {
                        prop_assert!((a.values[i] - b.values[perm[i]]).abs() <= 1e-10);
                    }
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
            }
        }

        #[test]
        fn equilibrium_is_rescaled_curvature(g in connected_graph()) {
            let space = graph_to_metric_space(&g).unwrap();
            if let (Ok(c), Ok(eq)) = (graph_curvature(&g), solve_equilibrium(&space)) {
                if eq.is_probability && c.unique {
                    let scale = c.total;
                    prop_assert!(scale > 0.0);
                    for i in 0..g.len() {
                        prop_assert!((eq.masses[i] - c.values[i] / scale).abs() <= 1e-10);
                    }
                }
            }
        }
    }
}
