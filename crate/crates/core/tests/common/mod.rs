//! Independent reference computations shared by the integration tests.
//!
//! Nothing here goes through the library's factorizations: determinants are expanded
//! by cofactors and the simplex is searched exhaustively.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub type Matrix = Vec<Vec<f64>>;

pub fn euclidean(points: &[[f64; 2]]) -> Matrix {
    points
        .iter()
        .map(|p| {
            points
                .iter()
                .map(|q| (p[0] - q[0]).hypot(p[1] - q[1]))
                .collect()
        })
        .collect()
}

/// Cofactor expansion along the first row.
pub fn det(a: &Matrix) -> f64 {
    let n = a.len();
    match n {
        0 => 1.0,
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        _ => (0..n)
            .filter(|&j| a[0][j] != 0.0)
            .map(|j| {
                let minor: Matrix = a[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(k, _)| *k != j)
                            .map(|(_, v)| *v)
                            .collect()
                    })
                    .collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * a[0][j] * det(&minor)
            })
            .sum(),
    }
}

/// Cramer's rule; `None` when the determinant vanishes.
pub fn cramer(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let d = det(a);
    let scale: f64 = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if d.abs() <= 1e-13 * scale.powi(a.len() as i32) {
        return None;
    }
    Some(
        (0..a.len())
            .map(|i| {
                let mut ai = a.clone();
                for (row, bv) in ai.iter_mut().zip(b) {
                    row[i] = *bv;
                }
                det(&ai) / d
            })
            .collect(),
    )
}

/// Equilibrium masses for unit weights: `D x = 1`, `m = x / Σx`, `r = 1 / Σx`.
pub fn equilibrium_by_inversion(d: &Matrix) -> Option<(Vec<f64>, f64)> {
    let x = cramer(d, &vec![1.0; d.len()])?;
    let total: f64 = x.iter().sum();
    Some((x.iter().map(|v| v / total).collect(), 1.0 / total))
}

pub fn energy(d: &Matrix, mu: &[f64]) -> f64 {
    let n = mu.len();
    (0..n)
        .map(|i| (0..n).map(|j| d[i][j] * mu[i] * mu[j]).sum::<f64>())
        .sum()
}

/// Best energy over the lattice `{μ : μ_i ∈ {0, 1/m, …, 1}, Σμ = 1}`.
pub fn grid_search(d: &Matrix, m: usize) -> (f64, Vec<f64>) {
    let n = d.len();
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let mut counts = vec![0usize; n];
    fn rec(
        d: &Matrix,
        m: usize,
        i: usize,
        left: usize,
        counts: &mut Vec<usize>,
        best: &mut (f64, Vec<f64>),
    ) {
        let n = counts.len();
        if i == n - 1 {
            counts[i] = left;
            let mu: Vec<f64> = counts.iter().map(|c| *c as f64 / m as f64).collect();
            let e = energy(d, &mu);
            if e > best.0 {
                *best = (e, mu);
            }
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(d, m, i + 1, left - c, counts, best);
        }
    }
    rec(d, m, 0, m, &mut counts, &mut best);
    best
}

/// Exact stationary points on every face: `D_SS μ_S = c·1`, `Σ μ_S = 1`, `μ_S ≥ 0`.
/// Returns the best energy among feasible ones.
pub fn support_enumeration(d: &Matrix) -> (f64, Vec<f64>) {
    let n = d.len();
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let k = support.len();
        let mut a = vec![vec![0.0; k + 1]; k + 1];
        for (r, &i) in support.iter().enumerate() {
            for (c, &j) in support.iter().enumerate() {
                a[r][c] = d[i][j];
            }
            a[r][k] = -1.0;
            a[k][r] = 1.0;
        }
        let mut b = vec![0.0; k + 1];
        b[k] = 1.0;
        let Some(x) = cramer(&a, &b) else { continue };
        if x[..k].iter().any(|v| *v < -1e-12) {
            continue;
        }
        let mut mu = vec![0.0; n];
        for (r, &i) in support.iter().enumerate() {
            mu[i] = x[r].max(0.0);
        }
        let total: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|v| *v /= total);
        let e = energy(d, &mu);
        if e > best.0 {
            best = (e, mu);
        }
    }
    best
}

/// Grid resolution keeping the lattice below a few hundred thousand points.
pub fn grid_resolution(n: usize) -> usize {
    match n {
        0..=3 => 200,
        4 => 100,
        5 => 40,
        6 => 24,
        _ => 16,
    }
}

/// Composite Simpson rule on `[a, b]` with `2k` panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, k: usize) -> f64 {
    let m = 2 * k;
    let h = (b - a) / m as f64;
    let inner: f64 = (1..m)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

pub fn schema(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../schemas")
        .join(format!("{name}.schema.json"))
}

pub fn run_cli(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_equimeasure"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("EQUIMEASURE_OUT")
        .output()
        .expect("binary runs")
}

/// One invocation per command with inputs from `data/`.
pub fn cli_suite() -> Vec<(&'static str, Vec<String>)> {
    let p = |n: &str| data(n).display().to_string();
    vec![
        (
            "curve",
            vec![
                "curve".into(),
                "--spec".into(),
                p("circle.json"),
                "--n".into(),
                "256".into(),
            ],
        ),
        (
            "cloud",
            vec!["cloud".into(), "--points".into(), p("lobed_cloud.csv")],
        ),
        (
            "polygon",
            vec![
                "polygon".into(),
                "--vertices".into(),
                p("unit_square.csv"),
                "--spacing".into(),
                "0.125".into(),
            ],
        ),
        ("graph", vec!["graph".into(), "--edges".into(), p("k3.txt")]),
        (
            "energy",
            vec![
                "energy".into(),
                "--spec".into(),
                p("near_round.json"),
                "--n".into(),
                "64".into(),
            ],
        ),
        (
            "magnitude",
            vec!["magnitude".into(), "--edges".into(), p("c4.txt")],
        ),
        (
            "sweep",
            vec![
                "sweep".into(),
                "--values".into(),
                "0,0.1,0.2".into(),
                "--n".into(),
                "128".into(),
            ],
        ),
        (
            "prop3",
            vec![
                "prop3".into(),
                "--spec".into(),
                p("trefoil.json"),
                "--n".into(),
                "128".into(),
            ],
        ),
        (
            "demo-flat",
            vec!["demo-flat".into(), "--n".into(), "256".into()],
        ),
    ]
}
