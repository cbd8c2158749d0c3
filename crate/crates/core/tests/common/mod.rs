//! Reference computations shared by the integration tests. Everything here
//! works straight from the definitions and does not call into the
//! estimators or the solver it is used to check.

#![allow(dead_code)]

use fplab::contraction::{DENOMINATOR_TOLERANCE, NUMERATOR_TOLERANCE};
use fplab::maps::{PiecewiseLinear, SelfMap};
use fplab::space::{DistanceMatrix, MetricSpace, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Banach,
    Kannan,
    Chatterjea,
}

/// Tightest constant by direct definition over all ordered pairs, including
/// `x = y`. `None` means some pair rules out every finite constant.
pub fn brute_alpha(map: &SelfMap, p: usize, condition: Condition, samples: &[Point]) -> Option<f64> {
    let space = map.space();
    let d = |a: &Point, b: &Point| space.distance(a, b);
    let power = |x: &Point| {
        let mut y = x.clone();
        for _ in 0..p {
            y = map.apply(&y);
        }
        y
    };
    let mut best = 0.0f64;
    for x in samples {
        for y in samples {
            let (tx, ty) = (power(x), power(y));
            let num = d(&tx, &ty);
            let den = match condition {
                Condition::Banach => d(x, y),
                Condition::Kannan => d(x, &tx) + d(y, &ty),
                Condition::Chatterjea => d(x, &ty) + d(y, &tx),
            };
            if den <= DENOMINATOR_TOLERANCE {
                if num > NUMERATOR_TOLERANCE {
                    return None;
                }
                continue;
            }
            best = best.max(num / den);
        }
    }
    Some(best)
}

/// Smallest `n` with `delta0 r^n / (1 - r) <= eps`, by repeated multiplication.
pub fn brute_iterations_needed(delta0: f64, r: f64, eps: f64) -> usize {
    let mut bound = delta0 / (1.0 - r);
    let mut n = 0;
    while bound > eps {
        bound *= r;
        n += 1;
    }
    n
}

/// Smallest `p >= 1` with `lambda^p <= 1/3`, by repeated multiplication.
pub fn brute_minimal_p(lambda: f64) -> u32 {
    let mut power = lambda;
    let mut p = 1;
    while power > 1.0 / 3.0 {
        power *= lambda;
        p += 1;
    }
    p
}

/// A random continuous piecewise-linear self-map of `[0, 1]`.
pub fn random_piecewise(rng: &mut ChaCha8Rng) -> SelfMap {
    let pieces = rng.gen_range(1..6);
    let mut knots: Vec<f64> = (0..pieces - 1).map(|_| rng.gen_range(0.05..0.95)).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots.insert(0, 0.0);
    knots.push(1.0);
    let values: Vec<f64> = knots.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
    PiecewiseLinear::through_points(&knots, &values)
        .expect("valid tiling")
        .into_map("random")
}

/// A finite metric space from random points in the plane.
pub fn random_planar_metric(rng: &mut ChaCha8Rng, size: usize) -> MetricSpace {
    let pts: Vec<(f64, f64)> = (0..size)
        .map(|_| (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)))
        .collect();
    let rows = pts
        .iter()
        .map(|a| {
            pts.iter()
                .map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
                .collect()
        })
        .collect();
    MetricSpace::finite(DistanceMatrix::new(rows).unwrap())
}

/// A random self-map of a finite space given by its image table.
pub fn random_table_map(rng: &mut ChaCha8Rng, space: MetricSpace, size: usize) -> SelfMap {
    let table: Vec<usize> = (0..size).map(|_| rng.gen_range(0..size)).collect();
    SelfMap::new("random-table", space, move |x| match x {
        Point::Index(i) => Point::Index(table[*i]),
        _ => unreachable!(),
    })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn s(x: f64) -> Point {
    Point::Scalar(x)
}
