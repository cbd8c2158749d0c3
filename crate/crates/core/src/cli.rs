//! The `fplab` command line.
//!
//! Artifacts go to `--out-csv` / `--out-json` when given and to the supplied
//! writer (stdout in the binary) otherwise. Output depends only on the
//! arguments, so repeated runs write identical bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::bridge_report;
use crate::contraction::{classify, DEFAULT_P_MAX};
use crate::error::{Error, Result};
use crate::maps::{gallery, FiniteTable, PiecewiseLinear, SelfMap};
use crate::report::ReportDocument;
use crate::solver::{picard, uniqueness_probe, Status, StopMode, StopRule};
use crate::space::{format_real, verify_metric_axioms, MetricSpace, Point, SamplePlan, SpaceKind};

/// Classify contraction maps and locate their fixed points.
#[derive(Debug, Clone, Parser)]
#[command(name = "fplab", version)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Estimate contraction constants for every class and find the minimal p.
    Classify {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long = "p-max", default_value_t = DEFAULT_P_MAX)]
        p_max: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run Picard iteration on T^p from one start.
    Solve {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run Picard iteration from several starts and compare the endpoints.
    Sweep {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        starts: Vec<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Minimal p at which a Banach contraction becomes Singh-Chatterjea.
    Pmin {
        #[arg(long)]
        lambda: f64,
        /// Optional map to classify alongside the closed form.
        #[arg(long)]
        map: Option<String>,
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        value: Option<String>,
        #[command(flatten)]
        sample: SampleArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Check the metric axioms on a sample.
    VerifyMetric {
        /// Distance-matrix file of a finite space.
        #[arg(long, conflicts_with_all = ["interval", "map"])]
        matrix: Option<PathBuf>,
        /// Interval bounds `lo,hi`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "map")]
        interval: Option<Vec<f64>>,
        /// Use the space of a gallery map or map file.
        #[arg(long)]
        map: Option<String>,
        #[command(flatten)]
        sample: SampleArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct MapArgs {
    /// Gallery name (`paper-piecewise`, `linear-scale`, `constant`) or a map
    /// file: piecewise-linear, or a map table when `--matrix` is given.
    #[arg(long)]
    pub map: String,
    /// Scale factor for `linear-scale`.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Value of `constant`.
    #[arg(long, allow_hyphen_values = true)]
    pub value: Option<String>,
    /// Distance-matrix file; makes `--map` a map table on that finite space.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    /// Grid sample with N points (default 101).
    #[arg(long, value_name = "N", conflicts_with = "random")]
    pub grid: Option<usize>,
    /// Seeded pseudorandom sample with N points.
    #[arg(long, value_name = "N")]
    pub random: Option<usize>,
    #[arg(long, env = "FPLAB_SEED", default_value_t = 42)]
    pub seed: u64,
}

impl SampleArgs {
    pub fn plan(&self) -> SamplePlan {
        match (self.grid, self.random) {
            (_, Some(n)) => SamplePlan::random(n, self.seed),
            (Some(n), None) => SamplePlan::grid(n),
            (None, None) => SamplePlan::grid(101),
        }
    }

    fn given(&self) -> bool {
        self.grid.is_some() || self.random.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Displacement,
    Bound,
    Cap,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Iterate of T to run Picard iteration on.
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub eps: f64,
    #[arg(long = "max-iters", default_value_t = 10_000)]
    pub max_iters: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Displacement)]
    pub mode: ModeArg,
    /// Known Singh-Chatterjea constant of T^p; enables the bound columns.
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl SolverArgs {
    fn stop_rule(&self) -> StopRule {
        StopRule {
            eps: self.eps,
            max_iters: self.max_iters,
            mode: match self.mode {
                ModeArg::Displacement => StopMode::Displacement,
                ModeArg::Bound => StopMode::Bound,
                ModeArg::Cap => StopMode::CapOnly,
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    #[arg(long = "out-csv", value_name = "PATH")]
    pub out_csv: Option<PathBuf>,
    #[arg(long = "out-json", value_name = "PATH")]
    pub out_json: Option<PathBuf>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn emit(target: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match target {
        Some(path) => write_file(path, bytes),
        None => stdout.write_all(bytes).map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text.into_bytes()
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn parse_point(text: &str, space: &MetricSpace, field: &'static str) -> Result<Point> {
    let text = text.trim();
    let point = match space.kind() {
        SpaceKind::Finite(_) => Point::Index(
            text.parse()
                .map_err(|_| Error::param(field, format!("`{text}` is not a point index")))?,
        ),
        SpaceKind::Interval { .. } => Point::Scalar(
            text.parse()
                .map_err(|_| Error::param(field, format!("`{text}` is not a real number")))?,
        ),
        SpaceKind::Box { .. } => Point::Vector(
            text.split(';')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::param(field, format!("`{text}` is not a `;`-separated vector")))?,
        ),
    };
    if !space.contains(&point) {
        return Err(Error::param(field, format!("{text} is not a point of the {}", space.describe())));
    }
    Ok(point)
}

/// Resolves a gallery name or map file.
pub fn resolve_map(
    name: &str,
    lambda: Option<f64>,
    value: Option<&str>,
    matrix: Option<&Path>,
) -> Result<SelfMap> {
    if let Some(matrix) = matrix {
        let space = MetricSpace::load_finite(matrix)?;
        if name == "constant" {
            let value = value.ok_or(Error::MissingParameter("value"))?;
            let c = parse_point(value, &space, "value")?;
            return gallery::constant(space, c);
        }
        let path = Path::new(name);
        let table = FiniteTable::load(path, &space)?;
        return Ok(table.into_map(file_stem(path), space));
    }
    match name {
        "paper-piecewise" | "half-fold" => Ok(gallery::half_fold()),
        "linear-scale" => gallery::linear_scale(lambda.ok_or(Error::MissingParameter("lambda"))?),
        "constant" => {
            let space = MetricSpace::unit_interval();
            let value = value.ok_or(Error::MissingParameter("value"))?;
            let c = parse_point(value, &space, "value")?;
            gallery::constant(space, c)
        }
        path => {
            let path = Path::new(path);
            if !path.exists() {
                return Err(Error::param(
                    "map",
                    format!("`{name}` is neither a gallery map nor an existing file"),
                ));
            }
            Ok(PiecewiseLinear::load(path)?.into_map(file_stem(path)))
        }
    }
}

impl MapArgs {
    fn resolve(&self) -> Result<SelfMap> {
        resolve_map(&self.map, self.lambda, self.value.as_deref(), self.matrix.as_deref())
    }
}

#[derive(Serialize)]
struct SweepStart<'a> {
    start: &'a Point,
    final_point: &'a Point,
    iterations: usize,
    status: Status,
    final_delta: f64,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    map: &'a str,
    p: usize,
    stop: StopRule,
    spread: f64,
    starts: Vec<SweepStart<'a>>,
}

fn per_start_path(combined: &Path, k: usize) -> PathBuf {
    let stem = file_stem(combined);
    let ext = combined
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    combined.with_file_name(format!("{stem}_start{k}.{ext}"))
}

/// Executes one command.
pub fn run(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    match &config.command {
        Command::Classify {
            map,
            sample,
            p_max,
            out,
        } => {
            let map = map.resolve()?;
            let report = classify(&map, &sample.plan(), *p_max)?;
            let doc = ReportDocument {
                contraction: Some(report),
                bridge: None,
            };
            emit(out.out_json.as_deref(), doc.to_json().as_bytes(), stdout)
        }
        Command::Solve {
            map,
            solver,
            x0,
            out,
        } => {
            let map = map.resolve()?;
            let x0 = parse_point(x0, map.space(), "x0")?;
            let trace = picard(&map, solver.p, &x0, &solver.stop_rule(), solver.alpha)?;
            let mut csv = Vec::new();
            trace.write_csv(&mut csv).expect("writing to memory");
            emit(out.out_csv.as_deref(), &csv, stdout)?;
            emit(out.out_json.as_deref(), &to_json(&trace.summary()), stdout)
        }
        Command::Sweep {
            map,
            solver,
            starts,
            out,
        } => {
            let map = map.resolve()?;
            let starts = starts
                .iter()
                .map(|s| parse_point(s, map.space(), "starts"))
                .collect::<Result<Vec<_>>>()?;
            let probe = uniqueness_probe(&map, solver.p, &starts, &solver.stop_rule(), solver.alpha)?;

            let mut combined = b"start,n,x,delta\n".to_vec();
            for (start, trace) in starts.iter().zip(&probe.traces) {
                for row in &trace.rows {
                    writeln!(combined, "{start},{},{},{}", row.n, row.x, format_real(row.delta))
                        .expect("writing to memory");
                }
            }
            if let Some(path) = &out.out_csv {
                for (k, trace) in probe.traces.iter().enumerate() {
                    let mut csv = Vec::new();
                    trace.write_csv(&mut csv).expect("writing to memory");
                    write_file(&per_start_path(path, k), &csv)?;
                }
            }
            emit(out.out_csv.as_deref(), &combined, stdout)?;

            let summary = SweepSummary {
                map: map.name(),
                p: solver.p,
                stop: solver.stop_rule(),
                spread: probe.spread,
                starts: starts
                    .iter()
                    .zip(&probe.traces)
                    .map(|(start, t)| SweepStart {
                        start,
                        final_point: &t.final_point,
                        iterations: t.iterations,
                        status: t.status,
                        final_delta: t.final_delta(),
                    })
                    .collect(),
            };
            emit(out.out_json.as_deref(), &to_json(&summary), stdout)
        }
        Command::Pmin {
            lambda,
            map,
            matrix,
            value,
            sample,
            out,
        } => {
            let map = map
                .as_deref()
                .map(|name| resolve_map(name, Some(*lambda), value.as_deref(), matrix.as_deref()))
                .transpose()?;
            let plan = sample.given().then(|| sample.plan());
            let bridge = bridge_report(*lambda, map.as_ref(), plan.as_ref())?;
            let doc = ReportDocument {
                contraction: None,
                bridge: Some(bridge),
            };
            emit(out.out_json.as_deref(), doc.to_json().as_bytes(), stdout)
        }
        Command::VerifyMetric {
            matrix,
            interval,
            map,
            sample,
            out,
        } => {
            let space = match (matrix, interval, map) {
                (Some(path), _, _) => MetricSpace::load_finite(path)?,
                (None, Some(bounds), _) => match bounds[..] {
                    [lo, hi] => MetricSpace::interval(lo, hi)?,
                    _ => return Err(Error::param("interval", "expected `lo,hi`")),
                },
                (None, None, Some(name)) => resolve_map(name, None, None, None)?.space().clone(),
                (None, None, None) => return Err(Error::MissingParameter("matrix")),
            };
            // A finite carrier smaller than the default grid is enumerated.
            let plan = match (space.kind(), sample.given()) {
                (SpaceKind::Finite(m), false) => SamplePlan::grid(m.size().min(101)),
                _ => sample.plan(),
            };
            let report = verify_metric_axioms(&space, &plan)?;
            emit(out.out_json.as_deref(), &to_json(&report), stdout)
        }
    }
}
