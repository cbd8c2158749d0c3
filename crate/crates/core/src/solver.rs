//! Picard iteration on `S = T^p`.
//!
//! With a Singh-Chatterjea constant `alpha` for `T^p`, successive
//! displacements `delta_n = d(x_{n+1}, x_n)` shrink geometrically with rate
//! `r = alpha / (1 - alpha)`:
//!
//! ```text
//! delta_n <= r^n delta_0,        d(x_m, x_n) <= delta_0 r^n / (1 - r)  (m > n)
//! ```
//!
//! The trace records both bounds next to the observed values so they can be
//! checked row by row.

use std::io::{self, Write};

use serde::Serialize;

use crate::contraction::DENOMINATOR_TOLERANCE;
use crate::error::{Error, Result};
use crate::maps::SelfMap;
use crate::space::{format_real, Point};

/// Absolute slack on every bound check.
pub const FP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopMode {
    /// Stop once `delta_n <= eps`.
    Displacement,
    /// Stop once the tail bound `delta_0 r^n / (1 - r) <= eps`.
    Bound,
    /// Run until `max_iters`.
    CapOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StopRule {
    pub eps: f64,
    pub max_iters: usize,
    pub mode: StopMode,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            eps: 1e-10,
            max_iters: 10_000,
            mode: StopMode::Displacement,
        }
    }
}

impl StopRule {
    pub fn displacement(eps: f64, max_iters: usize) -> Self {
        StopRule {
            eps,
            max_iters,
            mode: StopMode::Displacement,
        }
    }

    pub fn bound(eps: f64, max_iters: usize) -> Self {
        StopRule {
            eps,
            max_iters,
            mode: StopMode::Bound,
        }
    }

    pub fn cap_only(max_iters: usize) -> Self {
        StopRule {
            eps: 0.0,
            max_iters,
            mode: StopMode::CapOnly,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.mode != StopMode::CapOnly && !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::param("eps", format!("{} is not a positive real", self.eps)));
        }
        Ok(())
    }
}

/// `r = alpha / (1 - alpha)` for `alpha` in `[0, 1/2)`.
pub fn rate_from_alpha(alpha: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&alpha) {
        return Err(Error::param("alpha", format!("{alpha} is outside [0, 1/2)")));
    }
    Ok(alpha / (1.0 - alpha))
}

/// `delta_0 r^n / (1 - r)`.
pub fn tail_bound(delta0: f64, r: f64, n: usize) -> f64 {
    delta0 * powi(r, n) / (1.0 - r)
}

fn powi(r: f64, n: usize) -> f64 {
    r.powi(n.min(i32::MAX as usize) as i32)
}

/// Smallest `n >= 0` with `delta_0 r^n / (1 - r) <= eps`.
pub fn iterations_needed(delta0: f64, r: f64, eps: f64) -> Result<usize> {
    if !(delta0 >= 0.0 && delta0.is_finite()) {
        return Err(Error::param("delta0", format!("{delta0} is not a nonnegative real")));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::param("r", format!("{r} is outside [0, 1)")));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::param("eps", format!("{eps} is not positive")));
    }
    if tail_bound(delta0, r, 0) <= eps {
        return Ok(0);
    }
    if r == 0.0 {
        return Ok(1);
    }
    // Solve delta0 r^n / (1 - r) = eps, then settle the boundary by evaluation.
    let guess = ((eps * (1.0 - r) / delta0).ln() / r.ln()).ceil();
    let mut n = if guess.is_finite() && guess >= 1.0 {
        guess as usize
    } else {
        1
    };
    while tail_bound(delta0, r, n) > eps {
        n += 1;
    }
    while n > 1 && tail_bound(delta0, r, n - 1) <= eps {
        n -= 1;
    }
    Ok(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    CapReached,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub n: usize,
    pub x: Point,
    /// `d(x_{n+1}, x_n)`
    pub delta: f64,
    /// `delta_n / delta_{n-1}` when `delta_{n-1}` is not negligible.
    pub ratio: Option<f64>,
    /// `r^n delta_0` when `alpha` is known.
    pub bound: Option<f64>,
    /// `delta_n <= r^n delta_0 + FP_SLACK`, when `alpha` is known.
    pub bound_holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub map: String,
    pub p: usize,
    pub alpha: Option<f64>,
    pub rate: Option<f64>,
    pub stop: StopRule,
    pub rows: Vec<TraceRow>,
    pub status: Status,
    pub final_point: Point,
    pub iterations: usize,
}

impl IterationTrace {
    pub fn delta0(&self) -> f64 {
        self.rows[0].delta
    }

    pub fn final_delta(&self) -> f64 {
        self.rows[self.rows.len() - 1].delta
    }

    /// Median of the defined step ratios, a rough rate when `alpha` is
    /// unknown.
    pub fn empirical_rate(&self) -> Option<f64> {
        let mut ratios: Vec<f64> = self.rows.iter().filter_map(|r| r.ratio).collect();
        if ratios.is_empty() {
            return None;
        }
        ratios.sort_by(f64::total_cmp);
        let mid = ratios.len() / 2;
        Some(if ratios.len() % 2 == 1 {
            ratios[mid]
        } else {
            0.5 * (ratios[mid - 1] + ratios[mid])
        })
    }

    /// Whether every row satisfied the a priori bound (`None` without alpha).
    pub fn bounds_hold(&self) -> Option<bool> {
        self.alpha?;
        Some(self.rows.iter().all(|r| r.bound_holds == Some(true)))
    }

    /// Writes the trace as CSV with header `n,x,delta,ratio,bound`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n,x,delta,ratio,bound")?;
        let opt = |v: Option<f64>| v.map(format_real).unwrap_or_default();
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                row.n,
                row.x,
                format_real(row.delta),
                opt(row.ratio),
                opt(row.bound)
            )?;
        }
        Ok(())
    }

    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            map: self.map.clone(),
            p: self.p,
            status: self.status,
            iterations: self.iterations,
            final_point: self.final_point.clone(),
            final_delta: self.final_delta(),
            delta0: self.delta0(),
            alpha: self.alpha,
            rate: self.rate,
            empirical_rate: self.empirical_rate(),
            bounds_hold: self.bounds_hold(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub map: String,
    pub p: usize,
    pub status: Status,
    pub iterations: usize,
    pub final_point: Point,
    pub final_delta: f64,
    pub delta0: f64,
    pub alpha: Option<f64>,
    pub rate: Option<f64>,
    pub empirical_rate: Option<f64>,
    pub bounds_hold: Option<bool>,
}

/// Iterates `S = T^p` from `x0` until `stop` fires.
///
/// Row `n` holds `x_n` and `delta_n = d(S x_n, x_n)`; the final point is the
/// `x_n` of the last row, so at convergence its residual under `S` is that
/// row's `delta`. `CapOnly` runs to `max_iters` and reports `Converged` only
/// if the last displacement is zero.
pub fn picard(
    map: &SelfMap,
    p: usize,
    x0: &Point,
    stop: &StopRule,
    alpha: Option<f64>,
) -> Result<IterationTrace> {
    if p == 0 {
        return Err(Error::param("p", "iterate count must be at least 1"));
    }
    stop.validate()?;
    if !map.space().contains(x0) {
        return Err(Error::param("x0", format!("{x0} is not a point of the {}", map.space().describe())));
    }
    let rate = alpha.map(rate_from_alpha).transpose()?;
    if stop.mode == StopMode::Bound && rate.is_none() {
        return Err(Error::MissingParameter("alpha"));
    }

    let space = map.space();
    let mut rows = Vec::new();
    let mut x = x0.clone();
    let mut prev_delta: Option<f64> = None;
    let mut delta0 = 0.0;
    let mut n = 0;
    let status = loop {
        let next = map.iterate(&x, p);
        let delta = space.distance(&next, &x);
        if n == 0 {
            delta0 = delta;
        }
        let ratio = prev_delta
            .filter(|&d| d > DENOMINATOR_TOLERANCE)
            .map(|d| delta / d);
        let bound = rate.map(|r| powi(r, n) * delta0);
        rows.push(TraceRow {
            n,
            x: x.clone(),
            delta,
            ratio,
            bound,
            bound_holds: bound.map(|b| delta <= b + FP_SLACK),
        });
        let done = match stop.mode {
            StopMode::Displacement => delta <= stop.eps,
            StopMode::Bound => tail_bound(delta0, rate.expect("checked above"), n) <= stop.eps,
            StopMode::CapOnly => false,
        };
        if done {
            break Status::Converged;
        }
        if n >= stop.max_iters {
            break if stop.mode == StopMode::CapOnly && delta == 0.0 {
                Status::Converged
            } else {
                Status::CapReached
            };
        }
        prev_delta = Some(delta);
        x = next;
        n += 1;
    };

    Ok(IterationTrace {
        map: map.name().to_string(),
        p,
        alpha,
        rate,
        stop: *stop,
        final_point: x,
        iterations: n,
        rows,
        status,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitCheck {
    /// `limits[r]` is the end of the `S`-orbit of `T^r x0`.
    pub limits: Vec<Point>,
    pub spread: f64,
}

/// Follows each residue subsequence `T^(pn + r) x0 = S^n (T^r x0)`,
/// `r = 0..p`, for `n_steps` applications of `S`.
pub fn full_orbit_check(map: &SelfMap, p: usize, x0: &Point, n_steps: usize) -> Result<OrbitCheck> {
    if n_steps == 0 {
        return Err(Error::param("n_steps", "must be at least 1"));
    }
    let rule = StopRule::cap_only(n_steps);
    let limits = (0..p.max(1))
        .map(|r| {
            let start = map.iterate(x0, r);
            picard(map, p, &start, &rule, None).map(|t| t.final_point)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OrbitCheck {
        spread: map.space().max_pairwise_distance(&limits),
        limits,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessProbe {
    pub traces: Vec<IterationTrace>,
    pub spread: f64,
}

impl UniquenessProbe {
    pub fn finals(&self) -> Vec<&Point> {
        self.traces.iter().map(|t| &t.final_point).collect()
    }
}

/// Runs [`picard`] from every start and measures how far apart the
/// endpoints are.
pub fn uniqueness_probe(
    map: &SelfMap,
    p: usize,
    starts: &[Point],
    stop: &StopRule,
    alpha: Option<f64>,
) -> Result<UniquenessProbe> {
    if starts.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: starts.len(),
        });
    }
    let traces = starts
        .iter()
        .map(|x0| picard(map, p, x0, stop, alpha))
        .collect::<Result<Vec<_>>>()?;
    let finals: Vec<Point> = traces.iter().map(|t| t.final_point.clone()).collect();
    Ok(UniquenessProbe {
        spread: map.space().max_pairwise_distance(&finals),
        traces,
    })
}
