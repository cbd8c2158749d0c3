//! Self-maps and a small gallery of maps with known behaviour.

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{sample_points, MetricSpace, Point, SamplePlan, SpaceKind};

type ApplyFn = dyn Fn(&Point) -> Point + Send + Sync;

/// Ground truth attached to a map, when known.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MapMetadata {
    pub fixed_point: Option<Point>,
    pub banach_constant: Option<f64>,
    pub notes: Option<String>,
}

/// A map `T: X -> X`.
///
/// `apply` must be pure: the estimators and the solver call it many times
/// on the same point and assume the same answer.
#[derive(Clone)]
pub struct SelfMap {
    name: String,
    space: MetricSpace,
    apply: Arc<ApplyFn>,
    metadata: MapMetadata,
}

impl fmt::Debug for SelfMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SelfMap")
            .field("name", &self.name)
            .field("space", &self.space)
            .field("metadata", &self.metadata)
            .finish_non_exhaustive()
    }
}

impl SelfMap {
    pub fn new<F>(name: impl Into<String>, space: MetricSpace, apply: F) -> Self
    where
        F: Fn(&Point) -> Point + Send + Sync + 'static,
    {
        SelfMap {
            name: name.into(),
            space,
            apply: Arc::new(apply),
            metadata: MapMetadata::default(),
        }
    }

    pub fn with_metadata(mut self, metadata: MapMetadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn metadata(&self) -> &MapMetadata {
        &self.metadata
    }

    pub fn apply(&self, x: &Point) -> Point {
        (self.apply)(x)
    }

    /// `T^p x`. `p = 0` is the identity.
    pub fn iterate(&self, x: &Point, p: usize) -> Point {
        let mut y = x.clone();
        for _ in 0..p {
            y = self.apply(&y);
        }
        y
    }

    /// The map `x -> T^p x` as a self-map in its own right.
    pub fn power(&self, p: usize) -> SelfMap {
        let inner = self.clone();
        let banach_constant = self
            .metadata
            .banach_constant
            .map(|l| l.powi(p as i32));
        SelfMap::new(format!("{}^{p}", self.name), self.space.clone(), move |x| {
            inner.iterate(x, p)
        })
        .with_metadata(MapMetadata {
            fixed_point: self.metadata.fixed_point.clone(),
            banach_constant,
            notes: None,
        })
    }

    /// First sampled point whose image leaves the space, if any.
    pub fn closure_violation(&self, plan: &SamplePlan) -> Result<Option<Point>> {
        let sample = sample_points(&self.space, plan)?;
        Ok(sample
            .into_iter()
            .find(|x| !self.space.contains(&self.apply(x))))
    }
}

/// Built-in maps.
pub mod gallery {
    use super::*;

    /// `T(x) = 1 - x` on `[0, 1/2]` and `T(x) = 1/2` on `(1/2, 1]`.
    ///
    /// `T` has Lipschitz constant 1, so it is not a Banach contraction, but
    /// `T^2` is the constant `1/2`. The point `1/2` itself takes the first
    /// branch.
    pub fn half_fold() -> SelfMap {
        SelfMap::new("half-fold", MetricSpace::unit_interval(), |x| match x {
            Point::Scalar(v) if *v <= 0.5 => Point::Scalar(1.0 - v),
            Point::Scalar(_) => Point::Scalar(0.5),
            other => panic!("half-fold applied to non-scalar point {other:?}"),
        })
        .with_metadata(MapMetadata {
            fixed_point: Some(Point::Scalar(0.5)),
            banach_constant: None,
            notes: Some("Singh-Chatterjea for p = 2, not Banach".into()),
        })
    }

    /// `T(x) = lambda * x` on `[-1, 1]`.
    pub fn linear_scale(lambda: f64) -> Result<SelfMap> {
        linear_scale_on(lambda, -1.0, 1.0)
    }

    /// `T(x) = lambda * x` on `[lo, hi]`; the interval must contain 0 so
    /// that it is invariant.
    pub fn linear_scale_on(lambda: f64, lo: f64, hi: f64) -> Result<SelfMap> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::param("lambda", format!("{lambda} is outside [0, 1)")));
        }
        if !(lo <= 0.0 && 0.0 <= hi) {
            return Err(Error::param("interval", "must contain 0 to be invariant under scaling"));
        }
        let space = MetricSpace::interval(lo, hi)?;
        Ok(
            SelfMap::new(format!("linear-scale({lambda})"), space, move |x| match x {
                Point::Scalar(v) => Point::Scalar(lambda * v),
                other => panic!("linear-scale applied to non-scalar point {other:?}"),
            })
            .with_metadata(MapMetadata {
                fixed_point: Some(Point::Scalar(0.0)),
                banach_constant: Some(lambda),
                notes: None,
            }),
        )
    }

    /// The constant map `x -> c`.
    pub fn constant(space: MetricSpace, c: Point) -> Result<SelfMap> {
        if !space.contains(&c) {
            return Err(Error::param("value", format!("{c} is not a point of the {}", space.describe())));
        }
        let value = c.clone();
        Ok(SelfMap::new(format!("constant({c})"), space, move |_| value.clone())
            .with_metadata(MapMetadata {
                fixed_point: Some(c),
                banach_constant: Some(0.0),
                notes: None,
            }))
    }
}

/// One affine piece `slope * x + intercept` on `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl Piece {
    fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Slack allowed when checking that piece images stay inside the interval.
const CLOSURE_SLACK: f64 = 1e-12;

/// A piecewise-linear self-map of an interval.
///
/// Text format: a first line `interval a b`, then one line
/// `x_lo x_hi slope intercept` per piece. Pieces are half-open `[x_lo, x_hi)`
/// except the last, which is closed, and together they tile `[a, b]`.
/// Blank lines and lines starting with `#` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    lo: f64,
    hi: f64,
    pieces: Vec<Piece>,
}

impl PiecewiseLinear {
    pub fn new(lo: f64, hi: f64, pieces: Vec<Piece>) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::param("interval", format!("bad bounds [{lo}, {hi}]")));
        }
        let first = pieces
            .first()
            .ok_or_else(|| Error::param("pieces", "at least one piece required"))?;
        if first.lo != lo {
            return Err(Error::param("pieces", format!("first piece starts at {} instead of {lo}", first.lo)));
        }
        for (k, piece) in pieces.iter().enumerate() {
            let finite = [piece.lo, piece.hi, piece.slope, piece.intercept]
                .iter()
                .all(|v| v.is_finite());
            if !finite || piece.lo >= piece.hi {
                return Err(Error::param("pieces", format!("piece {k} is empty or not finite")));
            }
            if let Some(next) = pieces.get(k + 1) {
                if next.lo != piece.hi {
                    return Err(Error::param(
                        "pieces",
                        format!("gap or overlap between pieces {k} and {}", k + 1),
                    ));
                }
            }
            for end in [piece.eval(piece.lo), piece.eval(piece.hi)] {
                if end < lo - CLOSURE_SLACK || end > hi + CLOSURE_SLACK {
                    return Err(Error::param(
                        "pieces",
                        format!("piece {k} maps outside [{lo}, {hi}] (value {end})"),
                    ));
                }
            }
        }
        let last = pieces.last().map(|p| p.hi);
        if last != Some(hi) {
            return Err(Error::param("pieces", format!("last piece ends at {last:?} instead of {hi}")));
        }
        Ok(PiecewiseLinear { lo, hi, pieces })
    }

    /// Builds the map through the points `(knots[k], values[k])`.
    pub fn through_points(knots: &[f64], values: &[f64]) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::param("knots", "need at least two knots and one value per knot"));
        }
        let lo = knots[0];
        let hi = knots[knots.len() - 1];
        let pieces = knots
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, y)| {
                let slope = (y[1] - y[0]) / (x[1] - x[0]);
                Piece {
                    lo: x[0],
                    hi: x[1],
                    slope,
                    intercept: y[0] - slope * x[0],
                }
            })
            .collect();
        PiecewiseLinear::new(lo, hi, pieces)
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut header: Option<(f64, f64)> = None;
        let mut pieces = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let nums = |toks: &[&str]| -> Result<Vec<f64>> {
                toks.iter()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| Error::parse(source_name, no + 1, format!("bad number `{t}`")))
                    })
                    .collect()
            };
            match header {
                None => {
                    if toks.len() != 3 || toks[0] != "interval" {
                        return Err(Error::parse(source_name, no + 1, "expected `interval a b`"));
                    }
                    let v = nums(&toks[1..])?;
                    header = Some((v[0], v[1]));
                }
                Some(_) => {
                    if toks.len() != 4 {
                        return Err(Error::parse(
                            source_name,
                            no + 1,
                            "expected `x_lo x_hi slope intercept`",
                        ));
                    }
                    let v = nums(&toks)?;
                    pieces.push(Piece {
                        lo: v[0],
                        hi: v[1],
                        slope: v[2],
                        intercept: v[3],
                    });
                }
            }
        }
        let (lo, hi) = header.ok_or_else(|| Error::parse(source_name, 1, "missing `interval a b` line"))?;
        PiecewiseLinear::new(lo, hi, pieces).map_err(|e| Error::parse(source_name, 0, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        PiecewiseLinear::parse(&text, &path.display().to_string())
    }

    /// Serializes back to the text format; parsing the result gives an
    /// identical map.
    pub fn to_text(&self) -> String {
        let mut out = format!("interval {} {}\n", self.lo, self.hi);
        for p in &self.pieces {
            out.push_str(&format!("{} {} {} {}\n", p.lo, p.hi, p.slope, p.intercept));
        }
        out
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn eval(&self, x: f64) -> f64 {
        // Last piece whose left end is <= x; points left of the domain use
        // the first piece.
        let k = self.pieces.partition_point(|p| p.lo <= x).saturating_sub(1);
        self.pieces[k].eval(x).clamp(self.lo, self.hi)
    }

    pub fn into_map(self, name: impl Into<String>) -> SelfMap {
        let space = MetricSpace::interval(self.lo, self.hi).expect("bounds validated on construction");
        SelfMap::new(name, space, move |x| match x {
            Point::Scalar(v) => Point::Scalar(self.eval(*v)),
            other => panic!("piecewise-linear map applied to non-scalar point {other:?}"),
        })
    }
}

/// A map on a finite space given by the image index of every element.
///
/// Text format: `m` whitespace-separated indices, the `i`-th being `T(i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteTable {
    images: Vec<usize>,
}

impl FiniteTable {
    pub fn new(images: Vec<usize>, space: &MetricSpace) -> Result<Self> {
        let size = match space.kind() {
            SpaceKind::Finite(m) => m.size(),
            _ => return Err(Error::param("map", "a map table needs a finite space")),
        };
        if images.len() != size {
            return Err(Error::param(
                "map",
                format!("table has {} entries, space has {size} points", images.len()),
            ));
        }
        if let Some((i, bad)) = images.iter().enumerate().find(|(_, &t)| t >= size) {
            return Err(Error::param("map", format!("image of {i} is {bad}, outside the space")));
        }
        Ok(FiniteTable { images })
    }

    pub fn parse(text: &str, source_name: &str, space: &MetricSpace) -> Result<Self> {
        let mut images = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.starts_with('#') {
                continue;
            }
            for tok in line.split_whitespace() {
                images.push(
                    tok.parse::<usize>()
                        .map_err(|_| Error::parse(source_name, no + 1, format!("bad index `{tok}`")))?,
                );
            }
        }
        FiniteTable::new(images, space).map_err(|e| Error::parse(source_name, 0, e.to_string()))
    }

    pub fn load(path: &Path, space: &MetricSpace) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        FiniteTable::parse(&text, &path.display().to_string(), space)
    }

    pub fn into_map(self, name: impl Into<String>, space: MetricSpace) -> SelfMap {
        SelfMap::new(name, space, move |x| match x {
            Point::Index(i) => Point::Index(self.images[*i]),
            other => panic!("table map applied to non-index point {other:?}"),
        })
    }
}
