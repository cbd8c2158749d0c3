//! Metric spaces, points, and deterministic sampling.
//!
//! Every contraction condition in this crate quantifies over all pairs of
//! points in a space. Numerically we replace "for all" by "for every point of
//! a sample", so the sampling here has to be reproducible bit for bit: the same
//! [`SamplePlan`] on the same [`MetricSpace`] always yields the same points.
//!
//! Grid and pseudorandom points on intervals and boxes are placed on a binary
//! lattice whose spacing is the resolution of the widest magnitude in the
//! bounds. On that lattice the difference of two sample points is computed
//! without rounding, so `|x - y|` is exact and the absolute-difference metric
//! satisfies its axioms with no floating-point slack at all.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute tolerance for metric axiom checks.
pub const METRIC_TOLERANCE: f64 = 1e-12;

/// Above this many ordered triples the triangle check draws a seeded subsample.
pub const TRIPLE_BUDGET: usize = 1_000_000;

/// Seed used for subsampling when the plan itself is a grid.
pub const DEFAULT_SUBSAMPLE_SEED: u64 = 42;

/// A point in one of the supported carriers.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Point {
    Scalar(f64),
    Vector(Vec<f64>),
    /// Index into a finite carrier.
    Index(usize),
}

impl Point {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Point::Scalar(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_index(&self) -> Option<usize> {
        match self {
            Point::Index(i) => Some(*i),
            _ => None,
        }
    }
}

/// Formats a real with 17 significant digits, enough to round-trip an `f64`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Decimal scalar, semicolon-joined vector, or integer index.
impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Scalar(x) => f.write_str(&format_real(*x)),
            Point::Vector(v) => {
                for (k, x) in v.iter().enumerate() {
                    if k > 0 {
                        f.write_str(";")?;
                    }
                    f.write_str(&format_real(*x))?;
                }
                Ok(())
            }
            Point::Index(i) => write!(f, "{i}"),
        }
    }
}

/// Row-major symmetric (in intent) distance matrix of a finite carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    size: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::param("matrix", "empty distance matrix"));
        }
        let mut data = Vec::with_capacity(size * size);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != size {
                return Err(Error::param(
                    "matrix",
                    format!("row {i} has {} entries, expected {size}", row.len()),
                ));
            }
            if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::param("matrix", format!("row {i} has non-finite entry {bad}")));
            }
            data.extend(row);
        }
        Ok(DistanceMatrix { size, data })
    }

    /// Parses the plain-text format: a line with `m`, then `m` rows of `m`
    /// whitespace-separated reals.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (first_no, first) = lines
            .next()
            .ok_or_else(|| Error::parse(source_name, 1, "empty file"))?;
        let size: usize = first
            .trim()
            .parse()
            .map_err(|_| Error::parse(source_name, first_no + 1, "expected matrix size"))?;
        if size == 0 {
            return Err(Error::parse(source_name, first_no + 1, "matrix size must be positive"));
        }
        let mut rows = Vec::with_capacity(size);
        for (no, line) in lines {
            if rows.len() == size {
                return Err(Error::parse(source_name, no + 1, "trailing data after matrix"));
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|_| Error::parse(source_name, no + 1, format!("bad number `{tok}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != size {
                return Err(Error::parse(
                    source_name,
                    no + 1,
                    format!("expected {size} entries, found {}", row.len()),
                ));
            }
            rows.push(row);
        }
        if rows.len() != size {
            return Err(Error::parse(
                source_name,
                text.lines().count(),
                format!("expected {size} rows, found {}", rows.len()),
            ));
        }
        DistanceMatrix::new(rows)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }
}

/// The carrier and its metric.
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceKind {
    /// `[lo, hi]` with `d(x, y) = |x - y|`.
    Interval { lo: f64, hi: f64 },
    /// Axis-aligned box with the Euclidean metric.
    Box { bounds: Vec<(f64, f64)> },
    /// Finite carrier `{0, .., m-1}` with a tabulated metric.
    Finite(DistanceMatrix),
}

/// A metric space. Completeness is assumed: it holds for closed intervals,
/// closed boxes and finite carriers, and cannot be checked on samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace {
    kind: SpaceKind,
}

impl MetricSpace {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::param("interval", format!("bad bounds [{lo}, {hi}]")));
        }
        Ok(MetricSpace {
            kind: SpaceKind::Interval { lo, hi },
        })
    }

    pub fn unit_interval() -> Self {
        MetricSpace {
            kind: SpaceKind::Interval { lo: 0.0, hi: 1.0 },
        }
    }

    pub fn euclidean_box(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::param("box", "at least one axis required"));
        }
        for (axis, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(Error::param("box", format!("axis {axis}: bad bounds [{lo}, {hi}]")));
            }
        }
        Ok(MetricSpace {
            kind: SpaceKind::Box { bounds },
        })
    }

    pub fn finite(matrix: DistanceMatrix) -> Self {
        MetricSpace {
            kind: SpaceKind::Finite(matrix),
        }
    }

    /// Loads a finite space from a distance-matrix file.
    pub fn load_finite(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(MetricSpace::finite(DistanceMatrix::parse(
            &text,
            &path.display().to_string(),
        )?))
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    /// Short description used in reports.
    pub fn describe(&self) -> String {
        match &self.kind {
            SpaceKind::Interval { lo, hi } => format!("interval [{lo}, {hi}]"),
            SpaceKind::Box { bounds } => format!("box of dimension {}", bounds.len()),
            SpaceKind::Finite(m) => format!("finite space of size {}", m.size()),
        }
    }

    pub fn contains(&self, point: &Point) -> bool {
        match (&self.kind, point) {
            (SpaceKind::Interval { lo, hi }, Point::Scalar(x)) => *lo <= *x && *x <= *hi,
            (SpaceKind::Box { bounds }, Point::Vector(v)) => {
                v.len() == bounds.len()
                    && v.iter()
                        .zip(bounds)
                        .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi)
            }
            (SpaceKind::Finite(m), Point::Index(i)) => *i < m.size(),
            _ => false,
        }
    }

    /// The metric.
    ///
    /// Panics if a point does not belong to this kind of carrier; maps and
    /// samplers only ever produce matching points.
    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        match (&self.kind, x, y) {
            (SpaceKind::Interval { .. }, Point::Scalar(a), Point::Scalar(b)) => (a - b).abs(),
            (SpaceKind::Box { bounds }, Point::Vector(a), Point::Vector(b)) => {
                assert!(
                    a.len() == bounds.len() && b.len() == bounds.len(),
                    "point dimension does not match the box"
                );
                a.iter()
                    .zip(b)
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    .sqrt()
            }
            (SpaceKind::Finite(m), Point::Index(i), Point::Index(j)) => m.get(*i, *j),
            _ => panic!("point kind does not match {}", self.describe()),
        }
    }

    /// Largest distance between any two of `points` (0 for fewer than two).
    pub fn max_pairwise_distance(&self, points: &[Point]) -> f64 {
        let mut best: f64 = 0.0;
        for (i, x) in points.iter().enumerate() {
            for y in &points[i + 1..] {
                best = best.max(self.distance(x, y));
            }
        }
        best
    }
}

/// Grid or seeded pseudorandom sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    Grid,
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SamplePlan {
    pub mode: SampleMode,
    pub count: usize,
}

impl SamplePlan {
    pub fn grid(count: usize) -> Self {
        SamplePlan {
            mode: SampleMode::Grid,
            count,
        }
    }

    pub fn random(count: usize, seed: u64) -> Self {
        SamplePlan {
            mode: SampleMode::Random { seed },
            count,
        }
    }

    /// Seed for any subsampling derived from this plan.
    pub fn subsample_seed(&self) -> u64 {
        match self.mode {
            SampleMode::Grid => DEFAULT_SUBSAMPLE_SEED,
            SampleMode::Random { seed } => seed,
        }
    }
}

/// Spacing of the binary lattice for `[lo, hi]`: the smallest power of two
/// at which every lattice point in the interval, and every difference of two
/// of them, is an exact `f64`.
fn lattice_quantum(lo: f64, hi: f64) -> Option<f64> {
    let scale = lo.abs().max(hi.abs()).max(hi - lo);
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    let exp = scale.log2().ceil() as i32;
    Some(2f64.powi(exp - 53))
}

fn snap(v: f64, lo: f64, hi: f64, quantum: Option<f64>) -> f64 {
    match quantum {
        Some(q) => ((v / q).round() * q).clamp(lo, hi),
        None => v.clamp(lo, hi),
    }
}

/// `count` endpoint-inclusive equally spaced points of `[lo, hi]`.
fn axis_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let q = lattice_quantum(lo, hi);
    if count == 1 {
        return vec![lo];
    }
    let last = count - 1;
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == last {
                hi
            } else {
                snap(lo + (hi - lo) * (i as f64 / last as f64), lo, hi, q)
            }
        })
        .collect()
}

/// `count` indices spread evenly over `0..total`, both ends included.
fn spread_indices(total: usize, count: usize) -> Vec<usize> {
    if count == 1 {
        return vec![0];
    }
    (0..count)
        .map(|i| {
            let num = i as u128 * (total as u128 - 1);
            let den = count as u128 - 1;
            ((num + den / 2) / den) as usize
        })
        .collect()
}

/// Draws the sample described by `plan`. Pure in `(space, plan)`.
pub fn sample_points(space: &MetricSpace, plan: &SamplePlan) -> Result<Vec<Point>> {
    if plan.count == 0 {
        return Err(Error::InvalidPlan("count must be at least 1".into()));
    }
    let n = plan.count;
    match (&space.kind, plan.mode) {
        (SpaceKind::Interval { lo, hi }, SampleMode::Grid) => {
            Ok(axis_grid(*lo, *hi, n).into_iter().map(Point::Scalar).collect())
        }
        (SpaceKind::Box { bounds }, SampleMode::Grid) => {
            let dim = bounds.len() as u32;
            let mut per_axis = 1usize;
            while per_axis.checked_pow(dim).is_none_or(|total| total < n) {
                per_axis += 1;
            }
            let axes: Vec<Vec<f64>> = bounds
                .iter()
                .map(|&(lo, hi)| axis_grid(lo, hi, per_axis))
                .collect();
            let total = per_axis.pow(dim);
            Ok(spread_indices(total, n)
                .into_iter()
                .map(|flat| {
                    // Last axis varies fastest.
                    let mut rem = flat;
                    let mut coords = vec![0.0; axes.len()];
                    for (axis, values) in axes.iter().enumerate().rev() {
                        coords[axis] = values[rem % per_axis];
                        rem /= per_axis;
                    }
                    Point::Vector(coords)
                })
                .collect())
        }
        (SpaceKind::Finite(m), SampleMode::Grid) => {
            if n > m.size() {
                return Err(Error::InvalidPlan(format!(
                    "grid of {n} points requested on a finite space of size {}",
                    m.size()
                )));
            }
            Ok(spread_indices(m.size(), n).into_iter().map(Point::Index).collect())
        }
        (SpaceKind::Interval { lo, hi }, SampleMode::Random { seed }) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = lattice_quantum(*lo, *hi);
            Ok((0..n)
                .map(|_| Point::Scalar(snap(lo + rng.gen::<f64>() * (hi - lo), *lo, *hi, q)))
                .collect())
        }
        (SpaceKind::Box { bounds }, SampleMode::Random { seed }) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let quanta: Vec<_> = bounds.iter().map(|&(lo, hi)| lattice_quantum(lo, hi)).collect();
            Ok((0..n)
                .map(|_| {
                    Point::Vector(
                        bounds
                            .iter()
                            .zip(&quanta)
                            .map(|(&(lo, hi), &q)| snap(lo + rng.gen::<f64>() * (hi - lo), lo, hi, q))
                            .collect(),
                    )
                })
                .collect())
        }
        (SpaceKind::Finite(m), SampleMode::Random { seed }) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..n).map(|_| Point::Index(rng.gen_range(0..m.size()))).collect())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    Identity,
    Symmetry,
    Triangle,
    Separation,
}

/// Outcome of one axiom over the sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomResult {
    pub axiom: Axiom,
    pub passed: bool,
    /// Largest violation magnitude seen (0 if none).
    pub max_violation: f64,
    /// Number of witnesses whose violation exceeds the tolerance.
    pub violations: usize,
    /// Points achieving `max_violation`, empty when it is 0.
    pub witness: Vec<Point>,
    /// Indices of the witness points in the sample.
    pub witness_indices: Vec<usize>,
    pub checked: usize,
}

impl AxiomResult {
    fn new(axiom: Axiom) -> Self {
        AxiomResult {
            axiom,
            passed: true,
            max_violation: 0.0,
            violations: 0,
            witness: Vec::new(),
            witness_indices: Vec::new(),
            checked: 0,
        }
    }

    fn record(&mut self, violation: f64, indices: &[usize], sample: &[Point]) {
        self.checked += 1;
        if violation > METRIC_TOLERANCE {
            self.violations += 1;
        }
        if violation > self.max_violation {
            self.max_violation = violation;
            self.witness_indices = indices.to_vec();
            self.witness = indices.iter().map(|&i| sample[i].clone()).collect();
        }
    }

    fn finish(mut self) -> Self {
        self.passed = self.violations == 0;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub space: String,
    pub plan: SamplePlan,
    pub tolerance: f64,
    pub points: usize,
    pub triples_subsampled: bool,
    pub identity: AxiomResult,
    pub symmetry: AxiomResult,
    pub triangle: AxiomResult,
    pub separation: AxiomResult,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.results().iter().all(|r| r.passed)
    }

    pub fn results(&self) -> [&AxiomResult; 4] {
        [&self.identity, &self.symmetry, &self.triangle, &self.separation]
    }
}

/// Checks the metric axioms on the sample drawn by `plan`.
///
/// Violation magnitudes: identity `|d(x,x)|`, symmetry `|d(x,y) - d(y,x)|`,
/// triangle `max(0, d(x,z) - d(x,y) - d(y,z))`, and for separation the
/// shortfall `max(0, tol - d(x,y))` over pairs of distinct points, so a
/// separation witness is a pair of distinct points at distance below `tol`.
/// An axiom passes when no witness exceeds the tolerance.
pub fn verify_metric_axioms(space: &MetricSpace, plan: &SamplePlan) -> Result<AxiomReport> {
    let sample = sample_points(space, plan)?;
    let n = sample.len();
    let d = |i: usize, j: usize| space.distance(&sample[i], &sample[j]);

    let mut identity = AxiomResult::new(Axiom::Identity);
    for i in 0..n {
        identity.record(d(i, i).abs(), &[i], &sample);
    }

    let mut symmetry = AxiomResult::new(Axiom::Symmetry);
    let mut separation = AxiomResult::new(Axiom::Separation);
    for i in 0..n {
        for j in i + 1..n {
            symmetry.record((d(i, j) - d(j, i)).abs(), &[i, j], &sample);
            if sample[i] != sample[j] {
                let shortfall = (METRIC_TOLERANCE - d(i, j)).max(0.0);
                separation.checked += 1;
                if shortfall > 0.0 {
                    separation.violations += 1;
                }
                if shortfall > separation.max_violation {
                    separation.max_violation = shortfall;
                    separation.witness_indices = vec![i, j];
                    separation.witness = vec![sample[i].clone(), sample[j].clone()];
                }
            }
        }
    }

    let mut triangle = AxiomResult::new(Axiom::Triangle);
    let excess = |i: usize, j: usize, k: usize| (d(i, k) - d(i, j) - d(j, k)).max(0.0);
    let total = n.checked_pow(3);
    let subsampled = total.is_none_or(|t| t > TRIPLE_BUDGET);
    if subsampled {
        let mut rng = ChaCha8Rng::seed_from_u64(plan.subsample_seed());
        for _ in 0..TRIPLE_BUDGET {
            let (i, j, k) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
            triangle.record(excess(i, j, k), &[i, j, k], &sample);
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    triangle.record(excess(i, j, k), &[i, j, k], &sample);
                }
            }
        }
    }

    Ok(AxiomReport {
        space: space.describe(),
        plan: *plan,
        tolerance: METRIC_TOLERANCE,
        points: n,
        triples_subsampled: subsampled,
        identity: identity.finish(),
        symmetry: symmetry.finish(),
        triangle: triangle.finish(),
        separation: separation.finish(),
    })
}
