//! Command-line front end.
//!
//! Every command writes `<out>/<command>.{json,csv,svg}` for the requested formats.
//! Exit codes: 0 on success, 1 on I/O or validation errors, 2 when the mathematics did
//! not resolve (singular system, no convergence, ...); in that case
//! `<out>/diagnostics.json` describes the failure.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::curve::Point;
use crate::curve::SupportCurve;
use crate::energy::{
    boundary_support_fraction, check_bjorck_conditions, cross_validate_equilibrium,
    maximize_energy_with, EnergyOptions, EnergyResult,
};
use crate::equilibrium::{
    gross_constant, solve_equilibrium, solve_equilibrium_with, solve_magnitude, Rhs,
};
use crate::error::{Error, Result};
use crate::graph::{graph_curvature, graph_to_metric_space};
use crate::io;
use crate::report::render_svg;
use crate::space::FiniteMetricSpace;
use crate::verify::{
    curvature_measure_variation, curvature_sweep, flat_spot_curve, prop2_flat_curve_demo,
};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "equimeasure",
    version,
    about = "Distance-equilibrium measures on curves, point clouds, gridded regions and graphs"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Output directory
    #[arg(long, global = true, env = "EQUIMEASURE_OUT", default_value = ".")]
    pub out: PathBuf,

    /// Comma-separated subset of csv, json, svg
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        default_value = "json,csv,svg"
    )]
    pub formats: Vec<Format>,

    /// Seed for the random starts of the energy maximizer
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RhsArg {
    /// Constant right-hand side
    Ones,
    /// Right-hand side equal to the sample speeds
    Paper,
}

impl From<RhsArg> for Rhs {
    fn from(r: RhsArg) -> Self {
        match r {
            RhsArg::Ones => Rhs::Ones,
            RhsArg::Paper => Rhs::Paper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// h = 1 + a·cos(kθ)
    Cosine,
    /// flat-spot family of the given degree, parameter β
    Flat,
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("source").required(true)))]
pub struct SpaceInput {
    /// Support-function JSON
    #[arg(long, group = "source")]
    pub spec: Option<PathBuf>,
    /// Point CSV with columns x,y
    #[arg(long, group = "source")]
    pub points: Option<PathBuf>,
    /// Polygon vertex CSV with columns x,y
    #[arg(long, group = "source", requires = "spacing")]
    pub vertices: Option<PathBuf>,
    /// Edge list
    #[arg(long, group = "source")]
    pub edges: Option<PathBuf>,
    /// Samples along a curve
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Grid spacing for polygons
    #[arg(long)]
    pub spacing: Option<f64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Equilibrium measure on a sampled support-function curve
    Curve {
        /// Support-function JSON
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, value_enum, default_value = "ones")]
        rhs: RhsArg,
    },
    /// Equilibrium measure on a point cloud
    Cloud {
        /// Point CSV with columns x,y
        #[arg(long)]
        points: PathBuf,
        #[arg(long, value_enum, default_value = "ones")]
        rhs: RhsArg,
    },
    /// Equilibrium measure on a polygon sampled by a square grid
    Polygon {
        /// Polygon vertex CSV with columns x,y
        #[arg(long)]
        vertices: PathBuf,
        #[arg(long)]
        spacing: f64,
        #[arg(long, value_enum, default_value = "ones")]
        rhs: RhsArg,
    },
    /// Graph curvature from hop distances
    Graph {
        /// Edge list
        #[arg(long)]
        edges: PathBuf,
    },
    /// Energy maximizer with first-order certificate
    Energy {
        #[command(flatten)]
        input: SpaceInput,
        #[arg(long, default_value_t = 200_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Magnitude weight measure of the kernel e^{-d}
    Magnitude {
        #[command(flatten)]
        input: SpaceInput,
    },
    /// Minimum mass across a one-parameter curve family
    Sweep {
        #[arg(long, value_enum, default_value = "cosine")]
        family: Family,
        /// Harmonic k of the cosine family
        #[arg(long, default_value_t = 2)]
        harmonic: usize,
        /// Degree of the flat-spot family
        #[arg(long, default_value_t = 32)]
        degree: usize,
        /// Strictly increasing parameter values
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_negative_numbers = true
        )]
        values: Vec<f64>,
        #[arg(long, default_value_t = 512)]
        n: usize,
    },
    /// Spread of the curvature-measure potential against its bound
    Prop3 {
        /// Support-function JSON
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 256)]
        n: usize,
    },
    /// Search for a near-circular curve with a very flat point and solve on it
    DemoFlat {
        #[arg(long, default_value_t = 512)]
        n: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Curve { .. } => "curve",
            Command::Cloud { .. } => "cloud",
            Command::Polygon { .. } => "polygon",
            Command::Graph { .. } => "graph",
            Command::Energy { .. } => "energy",
            Command::Magnitude { .. } => "magnitude",
            Command::Sweep { .. } => "sweep",
            Command::Prop3 { .. } => "prop3",
            Command::DemoFlat { .. } => "demo-flat",
        }
    }

    fn input(&self) -> Option<String> {
        let path = match self {
            Command::Curve { spec, .. } | Command::Prop3 { spec, .. } => Some(spec),
            Command::Cloud { points, .. } => Some(points),
            Command::Polygon { vertices, .. } => Some(vertices),
            Command::Graph { edges } => Some(edges),
            Command::Energy { input, .. } | Command::Magnitude { input } => input.path(),
            Command::Sweep { .. } | Command::DemoFlat { .. } => None,
        };
        path.map(|p| p.display().to_string())
    }
}

impl SpaceInput {
    fn path(&self) -> Option<&PathBuf> {
        self.spec
            .as_ref()
            .or(self.points.as_ref())
            .or(self.vertices.as_ref())
            .or(self.edges.as_ref())
    }

    fn build(&self) -> Result<FiniteMetricSpace> {
        if let Some(p) = &self.spec {
            FiniteMetricSpace::from_curve(&io::read_curve(p)?, self.n)
        } else if let Some(p) = &self.points {
            FiniteMetricSpace::from_point_cloud(&io::read_points(p)?)
        } else if let Some(p) = &self.vertices {
            let spacing = self.spacing.ok_or_else(|| {
                Error::invalid("polygon", "--spacing is required with --vertices")
            })?;
            FiniteMetricSpace::from_polygon_grid(&io::read_points(p)?, spacing)
        } else if let Some(p) = &self.edges {
            graph_to_metric_space(&io::read_edge_list(p)?)
        } else {
            Err(Error::invalid(
                "input",
                "one of --spec, --points, --vertices, --edges is required",
            ))
        }
    }
}

/// Everything one command produces before it is written out.
struct Outputs {
    json: Value,
    csv: Option<(Vec<&'static str>, Vec<Vec<String>>)>,
    svg: Option<(Vec<Point>, Vec<f64>)>,
}

fn num(v: f64) -> String {
    v.to_string()
}

fn coord_cells(space: &FiniteMetricSpace, i: usize) -> [String; 2] {
    match space.coords() {
        Some(c) => [num(c[i][0]), num(c[i][1])],
        None => [String::new(), String::new()],
    }
}

/// Coordinates for drawing: the node positions, or a circle layout for abstract spaces.
fn layout(space: &FiniteMetricSpace) -> Vec<Point> {
    match space.coords() {
        Some(c) => c.to_vec(),
        None => {
            let n = space.len() as f64;
            (0..space.len())
                .map(|i| {
                    let t = TAU * i as f64 / n;
                    [t.cos(), t.sin()]
                })
                .collect()
        }
    }
}

fn equilibrium_outputs(space: &FiniteMetricSpace, rhs: Rhs, mut json: Value) -> Result<Outputs> {
    let solution = solve_equilibrium_with(space, rhs)?;
    let gross = gross_constant(&solution, space);
    let rows = (0..space.len())
        .map(|i| {
            let [x, y] = coord_cells(space, i);
            vec![
                space.labels()[i].clone(),
                x,
                y,
                num(solution.masses[i]),
                num(solution.densities[i]),
            ]
        })
        .collect();
    let svg = (layout(space), solution.densities.clone());
    json["nodes"] = json!(space.len());
    json["solution"] = serde_json::to_value(&solution).expect("serializable");
    json["gross_constant"] = serde_json::to_value(&gross).expect("serializable");
    Ok(Outputs {
        json,
        csv: Some((vec!["label", "x", "y", "mass", "density"], rows)),
        svg: Some(svg),
    })
}

fn execute(config: &RunConfig) -> Result<Outputs> {
    let command = config.command.name();
    let mut json = json!({ "command": command });
    if let Some(input) = config.command.input() {
        json["input"] = json!(input);
    }
    match &config.command {
        Command::Curve { spec, n, rhs } => {
            let curve = io::read_curve(spec)?;
            let space = FiniteMetricSpace::from_curve(&curve, *n)?;
            let (lo, hi) = curve.roundness(4096)?;
            json["length"] = json!(curve.length()?);
            json["roundness"] = json!([lo, hi]);
            equilibrium_outputs(&space, (*rhs).into(), json)
        }
        Command::Cloud { points, rhs } => {
            let space = FiniteMetricSpace::from_point_cloud(&io::read_points(points)?)?;
            equilibrium_outputs(&space, (*rhs).into(), json)
        }
        Command::Polygon {
            vertices,
            spacing,
            rhs,
        } => {
            let space =
                FiniteMetricSpace::from_polygon_grid(&io::read_points(vertices)?, *spacing)?;
            let boundary = space
                .boundary_mask()
                .map_or(0, |m| m.iter().filter(|b| **b).count());
            json["spacing"] = json!(spacing);
            json["boundary_nodes"] = json!(boundary);
            equilibrium_outputs(&space, (*rhs).into(), json)
        }
        Command::Graph { edges } => {
            let g = io::read_edge_list(edges)?;
            let curvature = graph_curvature(&g)?;
            let space = graph_to_metric_space(&g)?;
            let solution = solve_equilibrium(&space)?;
            let rows = (0..g.len())
                .map(|i| {
                    vec![
                        g.labels()[i].clone(),
                        num(curvature.values[i]),
                        num(solution.masses[i]),
                    ]
                })
                .collect();
            json["nodes"] = json!(g.len());
            json["curvature"] = serde_json::to_value(&curvature).expect("serializable");
            json["solution"] = serde_json::to_value(&solution).expect("serializable");
            json["gross_constant"] =
                serde_json::to_value(gross_constant(&solution, &space)).expect("serializable");
            Ok(Outputs {
                json,
                csv: Some((vec!["label", "curvature", "mass"], rows)),
                svg: Some((layout(&space), curvature.values.clone())),
            })
        }
        Command::Energy {
            input,
            max_iters,
            tol,
        } => {
            let space = input.build()?;
            let options = EnergyOptions {
                max_iters: *max_iters,
                tol: *tol,
                seed: config.seed,
            };
            let result = maximize_energy_with(&space, &options)?;
            energy_outputs(&space, &result, json)
        }
        Command::Magnitude { input } => {
            let space = input.build()?;
            let result = solve_magnitude(&space)?;
            let rows = (0..space.len())
                .map(|i| {
                    let [x, y] = coord_cells(&space, i);
                    vec![space.labels()[i].clone(), x, y, num(result.weights[i])]
                })
                .collect();
            json["nodes"] = json!(space.len());
            json["result"] = serde_json::to_value(&result).expect("serializable");
            Ok(Outputs {
                json,
                csv: Some((vec!["label", "x", "y", "weight"], rows)),
                svg: Some((layout(&space), result.weights.clone())),
            })
        }
        Command::Sweep {
            family,
            harmonic,
            degree,
            values,
            n,
        } => {
            let report = match family {
                Family::Cosine => curvature_sweep(
                    |a| SupportCurve::cosine_perturbation(*harmonic, a),
                    values,
                    *n,
                )?,
                Family::Flat => curvature_sweep(|b| flat_spot_curve(*degree, b), values, *n)?,
            };
            json["family"] = json!(family);
            match family {
                Family::Cosine => json["harmonic"] = json!(harmonic),
                Family::Flat => json["degree"] = json!(degree),
            }
            let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
            let rows = report
                .entries
                .iter()
                .map(|e| {
                    vec![
                        num(e.a),
                        opt(e.roundness_min),
                        opt(e.roundness_max),
                        opt(e.min_mass),
                        e.is_probability.map(|p| p.to_string()).unwrap_or_default(),
                        e.error.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            json["report"] = serde_json::to_value(&report).expect("serializable");
            Ok(Outputs {
                json,
                csv: Some((
                    vec![
                        "a",
                        "roundness_min",
                        "roundness_max",
                        "min_mass",
                        "is_probability",
                        "error",
                    ],
                    rows,
                )),
                svg: None,
            })
        }
        Command::Prop3 { spec, n } => {
            let curve = io::read_curve(spec)?;
            let report = curvature_measure_variation(&curve, *n)?;
            let row = vec![
                num(report.samples as f64),
                num(report.variation),
                num(report.mean),
                num(report.bound),
                num(report.bound_wide),
                num(report.constant_used),
                report.passes.to_string(),
            ];
            json["report"] = serde_json::to_value(&report).expect("serializable");
            Ok(Outputs {
                json,
                csv: Some((
                    vec![
                        "samples",
                        "variation",
                        "mean",
                        "bound",
                        "bound_wide",
                        "constant_used",
                        "passes",
                    ],
                    vec![row],
                )),
                svg: None,
            })
        }
        Command::DemoFlat { n } => {
            let report = prop2_flat_curve_demo(*n)?;
            let space = FiniteMetricSpace::from_curve(&report.curve, *n)?;
            let solution = solve_equilibrium(&space)?;
            let params = space.parameters().expect("curve spaces carry parameters");
            let coords = space.coords().expect("curve spaces carry coordinates");
            let rows = (0..*n)
                .map(|i| {
                    vec![
                        num(params[i]),
                        num(coords[i][0]),
                        num(coords[i][1]),
                        num(1.0 / report.curve.speed(params[i])),
                        num(solution.densities[i]),
                    ]
                })
                .collect();
            json["report"] = serde_json::to_value(&report).expect("serializable");
            Ok(Outputs {
                json,
                csv: Some((vec!["t", "x", "y", "curvature", "density"], rows)),
                svg: Some((coords.to_vec(), solution.densities)),
            })
        }
    }
}

fn energy_outputs(
    space: &FiniteMetricSpace,
    result: &EnergyResult,
    mut json: Value,
) -> Result<Outputs> {
    let bjorck = check_bjorck_conditions(space, result);
    let boundary = match space.boundary_mask() {
        Some(mask) => Some(boundary_support_fraction(space, result, mask)?),
        None => None,
    };
    let cross = solve_equilibrium(space)
        .ok()
        .map(|eq| cross_validate_equilibrium(space, result, &eq, 1e-4));
    let rows = (0..space.len())
        .map(|i| {
            let [x, y] = coord_cells(space, i);
            vec![space.labels()[i].clone(), x, y, num(result.measure[i])]
        })
        .collect();
    json["nodes"] = json!(space.len());
    json["result"] = serde_json::to_value(result).expect("serializable");
    json["bjorck"] = serde_json::to_value(&bjorck).expect("serializable");
    json["boundary_fraction"] = json!(boundary);
    json["cross_validation"] = serde_json::to_value(&cross).expect("serializable");
    Ok(Outputs {
        json,
        csv: Some((vec!["label", "x", "y", "mass"], rows)),
        svg: Some((layout(space), result.measure.clone())),
    })
}

fn write_outputs(config: &RunConfig, outputs: &Outputs) -> Result<Vec<PathBuf>> {
    let stem = config.command.name();
    let mut written = Vec::new();
    let mut path = |ext: &str| {
        let p = config.out.join(format!("{stem}.{ext}"));
        written.push(p.clone());
        p
    };
    let mut formats = config.formats.clone();
    formats.sort_by_key(|f| *f as u8);
    formats.dedup();
    for format in formats {
        match format {
            Format::Json => io::write_json(&path("json"), &outputs.json)?,
            Format::Csv => {
                if let Some((header, rows)) = &outputs.csv {
                    io::write_csv(&path("csv"), header, rows)?;
                }
            }
            Format::Svg => {
                if let Some((points, values)) = &outputs.svg {
                    io::write_text(&path("svg"), &render_svg(points, values)?)?;
                }
            }
        }
    }
    Ok(written)
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    command: &'a str,
    input: Option<String>,
    kind: &'static str,
    message: String,
    exit_code: i32,
    best_iterate: Option<&'a EnergyResult>,
}

fn write_diagnostics(config: &RunConfig, error: &Error, exit_code: i32) -> Result<PathBuf> {
    let diagnostics = Diagnostics {
        command: config.command.name(),
        input: config.command.input(),
        kind: error.kind(),
        message: error.to_string(),
        exit_code,
        best_iterate: match error {
            Error::NotConverged { best } => Some(best),
            _ => None,
        },
    };
    let path = config.out.join("diagnostics.json");
    io::write_json(&path, &diagnostics)?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

/// Runs one command and returns the process exit code.
pub fn run(config: &RunConfig) -> i32 {
    let name = config.command.name();
    let context = match config.command.input() {
        Some(input) => format!("equimeasure {name} ({input})"),
        None => format!("equimeasure {name}"),
    };
    if let Err(e) = ensure_dir(&config.out) {
        eprintln!("{context}: {e}");
        return 1;
    }
    match execute(config).and_then(|outputs| write_outputs(config, &outputs)) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{context}: {e}");
            if e.is_numerical() {
                match write_diagnostics(config, &e, 2) {
                    Ok(p) => eprintln!("diagnostics in {}", p.display()),
                    Err(w) => eprintln!("{context}: could not write diagnostics: {w}"),
                }
                2
            } else {
                1
            }
        }
    }
}

/// Parses `std::env::args`, runs, and exits. Usage errors exit with 1.
pub fn main_exit() -> ! {
    let code = match RunConfig::try_parse() {
        Ok(config) => run(&config),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                1
            } else {
                0
            }
        }
    };
    std::process::exit(code)
}
