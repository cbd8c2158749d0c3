//! Empirical contraction constants.
//!
//! Each condition has the shape `d(T^p x, T^p y) <= alpha * D(x, y)` for some
//! denominator `D`. The tightest `alpha` on a sample is the largest quotient
//! `d(T^p x, T^p y) / D(x, y)` over sampled pairs. A pair with `D = 0` and a
//! zero numerator constrains nothing and is skipped; a pair with `D = 0` and
//! a positive numerator rules out every finite `alpha`.
//!
//! Estimates are sound only with respect to the sample: a failing witness is
//! a genuine counterexample, a passing estimate is evidence.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::{Serialize, Serializer};
use serde::Serialize as DeriveSerialize;

use crate::analysis::minimal_p_for_banach;
use crate::error::{Error, Result};
use crate::maps::SelfMap;
use crate::space::{sample_points, MetricSpace, Point, SamplePlan, DEFAULT_SUBSAMPLE_SEED};

/// Denominators at or below this are treated as zero.
pub const DENOMINATOR_TOLERANCE: f64 = 1e-12;
/// Numerators at or below this are treated as zero.
pub const NUMERATOR_TOLERANCE: f64 = 1e-12;
/// A class holds when `alpha < threshold - VERDICT_MARGIN`.
pub const VERDICT_MARGIN: f64 = 1e-9;
/// Largest number of unordered pairs evaluated before subsampling.
pub const PAIR_BUDGET: usize = 5_000_000;
pub const DEFAULT_P_MAX: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConditionClass {
    /// `d(Tx,Ty) <= a d(x,y)`
    Banach,
    /// `d(Tx,Ty) <= a (d(x,Tx) + d(y,Ty))`
    Kannan,
    /// `d(Tx,Ty) <= a (d(x,Ty) + d(y,Tx))`
    Chatterjea,
    /// Kannan's condition on `T^p`.
    Singh(usize),
    /// Chatterjea's condition on `T^p`.
    SinghChatterjea(usize),
}

impl ConditionClass {
    pub fn label(&self) -> &'static str {
        match self {
            ConditionClass::Banach => "banach",
            ConditionClass::Kannan => "kannan",
            ConditionClass::Chatterjea => "chatterjea",
            ConditionClass::Singh(_) => "singh",
            ConditionClass::SinghChatterjea(_) => "singh_chatterjea",
        }
    }

    pub fn iterate(&self) -> usize {
        match self {
            ConditionClass::Singh(p) | ConditionClass::SinghChatterjea(p) => *p,
            _ => 1,
        }
    }

    /// Open upper bound on admissible constants.
    pub fn threshold(&self) -> f64 {
        match self {
            ConditionClass::Banach => 1.0,
            _ => 0.5,
        }
    }

    fn denominator(&self) -> Denominator {
        match self {
            ConditionClass::Banach => Denominator::Distance,
            ConditionClass::Kannan | ConditionClass::Singh(_) => Denominator::Displacements,
            ConditionClass::Chatterjea | ConditionClass::SinghChatterjea(_) => Denominator::Cross,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Denominator {
    /// `d(x, y)`
    Distance,
    /// `d(x, Sx) + d(y, Sy)`
    Displacements,
    /// `d(x, Sy) + d(y, Sx)`
    Cross,
}

/// Tightest constant on a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    Finite(f64),
    /// Some pair has a zero denominator but a positive numerator.
    Infeasible,
}

impl Alpha {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Alpha::Finite(a) => Some(*a),
            Alpha::Infeasible => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaEstimate {
    pub class: ConditionClass,
    pub value: Alpha,
    /// Pair achieving the supremum, or the first infeasible pair.
    pub witness: Option<(Point, Point)>,
    pub witness_indices: Option<(usize, usize)>,
    pub pairs_evaluated: usize,
    pub pairs_skipped_vacuous: usize,
    pub subsampled: bool,
}

impl AlphaEstimate {
    /// Whether the sample certifies the class.
    pub fn holds(&self) -> bool {
        self.value
            .finite()
            .is_some_and(|a| a < self.class.threshold() - VERDICT_MARGIN)
    }
}

/// Unordered pairs `i <= j` of `0..n`, all of them or a seeded subsample.
fn pair_indices(n: usize, seed: u64) -> (Box<dyn Iterator<Item = (usize, usize)>>, bool) {
    let total = n.checked_mul(n + 1).map(|t| t / 2);
    match total {
        Some(t) if t <= PAIR_BUDGET => (
            Box::new((0..n).flat_map(move |i| (i..n).map(move |j| (i, j)))),
            false,
        ),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (
                Box::new((0..PAIR_BUDGET).map(move |_| {
                    let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
                    (a.min(b), a.max(b))
                })),
                true,
            )
        }
    }
}

/// Core scan. `images[i]` is `S x_i` where `S = T^p`.
fn estimate(
    space: &MetricSpace,
    class: ConditionClass,
    samples: &[Point],
    images: &[Point],
    seed: u64,
) -> AlphaEstimate {
    debug_assert_eq!(samples.len(), images.len());
    let d = |a: &Point, b: &Point| space.distance(a, b);
    let denominator = class.denominator();

    let mut best: Option<(f64, (usize, usize))> = None;
    let mut infeasible: Option<(usize, usize)> = None;
    let mut evaluated = 0;
    let mut vacuous = 0;

    let (pairs, subsampled) = pair_indices(samples.len(), seed);
    for (i, j) in pairs {
        let (x, y, sx, sy) = (&samples[i], &samples[j], &images[i], &images[j]);
        let num = d(sx, sy);
        let den = match denominator {
            Denominator::Distance => d(x, y),
            Denominator::Displacements => d(x, sx) + d(y, sy),
            Denominator::Cross => d(x, sy) + d(y, sx),
        };
        if den <= DENOMINATOR_TOLERANCE {
            if num <= NUMERATOR_TOLERANCE {
                vacuous += 1;
            } else if infeasible.is_none_or(|w| (i, j) < w) {
                infeasible = Some((i, j));
            }
            continue;
        }
        evaluated += 1;
        let ratio = num / den;
        let better = match best {
            None => true,
            Some((b, w)) => match ratio.partial_cmp(&b) {
                Some(Ordering::Greater) => true,
                Some(Ordering::Equal) => (i, j) < w,
                _ => false,
            },
        };
        if better {
            best = Some((ratio, (i, j)));
        }
    }

    let (value, witness_indices) = match (infeasible, best) {
        (Some(w), _) => (Alpha::Infeasible, Some(w)),
        (None, Some((ratio, w))) => (Alpha::Finite(ratio), Some(w)),
        (None, None) => (Alpha::Finite(0.0), None),
    };
    AlphaEstimate {
        class,
        value,
        witness: witness_indices.map(|(i, j)| (samples[i].clone(), samples[j].clone())),
        witness_indices,
        pairs_evaluated: evaluated,
        pairs_skipped_vacuous: vacuous,
        subsampled,
    }
}

fn images(map: &SelfMap, samples: &[Point], p: usize) -> Vec<Point> {
    samples.iter().map(|x| map.iterate(x, p)).collect()
}

fn require_nonempty(samples: &[Point]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    Ok(())
}

fn require_iterate(p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::param("p", "iterate count must be at least 1"));
    }
    Ok(())
}

/// Tightest Banach (Lipschitz) constant on the sample.
pub fn alpha_banach(map: &SelfMap, samples: &[Point]) -> Result<AlphaEstimate> {
    let distinct = samples.iter().any(|x| *x != samples[0]);
    if samples.len() < 2 || !distinct {
        let got = if samples.is_empty() { 0 } else { 1 };
        return Err(Error::InsufficientSamples { needed: 2, got });
    }
    Ok(estimate(
        map.space(),
        ConditionClass::Banach,
        samples,
        &images(map, samples, 1),
        DEFAULT_SUBSAMPLE_SEED,
    ))
}

pub fn alpha_kannan(map: &SelfMap, samples: &[Point]) -> Result<AlphaEstimate> {
    require_nonempty(samples)?;
    Ok(estimate(
        map.space(),
        ConditionClass::Kannan,
        samples,
        &images(map, samples, 1),
        DEFAULT_SUBSAMPLE_SEED,
    ))
}

pub fn alpha_chatterjea(map: &SelfMap, samples: &[Point]) -> Result<AlphaEstimate> {
    require_nonempty(samples)?;
    Ok(estimate(
        map.space(),
        ConditionClass::Chatterjea,
        samples,
        &images(map, samples, 1),
        DEFAULT_SUBSAMPLE_SEED,
    ))
}

/// Kannan's quotient for `T^p`.
pub fn alpha_singh(map: &SelfMap, p: usize, samples: &[Point]) -> Result<AlphaEstimate> {
    require_iterate(p)?;
    require_nonempty(samples)?;
    Ok(estimate(
        map.space(),
        ConditionClass::Singh(p),
        samples,
        &images(map, samples, p),
        DEFAULT_SUBSAMPLE_SEED,
    ))
}

/// Chatterjea's quotient for `T^p`:
/// `d(T^p x, T^p y) / (d(x, T^p y) + d(y, T^p x))`.
pub fn alpha_singh_chatterjea(map: &SelfMap, p: usize, samples: &[Point]) -> Result<AlphaEstimate> {
    require_iterate(p)?;
    require_nonempty(samples)?;
    Ok(estimate(
        map.space(),
        ConditionClass::SinghChatterjea(p),
        samples,
        &images(map, samples, p),
        DEFAULT_SUBSAMPLE_SEED,
    ))
}

/// Every estimator run on one shared sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub map: String,
    pub space: String,
    pub plan: SamplePlan,
    pub p_max: usize,
    pub banach: AlphaEstimate,
    pub kannan: AlphaEstimate,
    pub chatterjea: AlphaEstimate,
    /// `singh[k]` is the estimate for `p = k + 1`.
    pub singh: Vec<AlphaEstimate>,
    /// `singh_chatterjea[k]` is the estimate for `p = k + 1`.
    pub singh_chatterjea: Vec<AlphaEstimate>,
    /// Smallest `p` whose Singh-Chatterjea estimate holds.
    pub minimal_p_singh_chatterjea: Option<usize>,
    /// Worst-case `p` from the Banach estimate, when it is below 1.
    pub banach_p_min: Option<u32>,
}

impl ContractionReport {
    pub fn singh_chatterjea_at(&self, p: usize) -> Option<&AlphaEstimate> {
        p.checked_sub(1).and_then(|k| self.singh_chatterjea.get(k))
    }

    pub fn singh_at(&self, p: usize) -> Option<&AlphaEstimate> {
        p.checked_sub(1).and_then(|k| self.singh.get(k))
    }

    pub fn subsampled(&self) -> bool {
        self.entries().iter().any(|e| e.subsampled)
    }

    pub fn entries(&self) -> Vec<&AlphaEstimate> {
        let mut out = vec![&self.banach, &self.kannan, &self.chatterjea];
        out.extend(&self.singh);
        out.extend(&self.singh_chatterjea);
        out
    }

    pub fn verdicts(&self) -> Verdicts {
        fn first_p(list: &[AlphaEstimate]) -> Option<usize> {
            list.iter().position(AlphaEstimate::holds).map(|k| k + 1)
        }
        let simple = |e: &AlphaEstimate, name: &str| {
            if e.holds() {
                name.to_string()
            } else {
                format!("not {name}")
            }
        };
        let iterated = |p: Option<usize>, name: &str| match p {
            Some(p) => format!("{name} for p = {p}"),
            None => format!("not {name} for any p <= {}", self.p_max),
        };
        Verdicts {
            banach: simple(&self.banach, "Banach"),
            kannan: simple(&self.kannan, "Kannan"),
            chatterjea: simple(&self.chatterjea, "Chatterjea"),
            singh: iterated(first_p(&self.singh), "Singh"),
            singh_chatterjea: iterated(self.minimal_p_singh_chatterjea, "Singh-Chatterjea"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, DeriveSerialize)]
pub struct Verdicts {
    pub banach: String,
    pub kannan: String,
    pub chatterjea: String,
    pub singh: String,
    pub singh_chatterjea: String,
}

#[derive(DeriveSerialize)]
struct Entry<'a> {
    class: &'static str,
    p: usize,
    alpha: Option<f64>,
    feasible: bool,
    holds: bool,
    witness: Option<[&'a Point; 2]>,
    pairs: usize,
    vacuous: usize,
}

impl<'a> From<&'a AlphaEstimate> for Entry<'a> {
    fn from(e: &'a AlphaEstimate) -> Self {
        Entry {
            class: e.class.label(),
            p: e.class.iterate(),
            alpha: e.value.finite(),
            feasible: e.value.finite().is_some(),
            holds: e.holds(),
            witness: e.witness.as_ref().map(|(x, y)| [x, y]),
            pairs: e.pairs_evaluated,
            vacuous: e.pairs_skipped_vacuous,
        }
    }
}

#[derive(DeriveSerialize)]
struct Document<'a> {
    map: &'a str,
    space: &'a str,
    plan: &'a SamplePlan,
    p_max: usize,
    subsampled: bool,
    minimal_p_singh_chatterjea: Option<usize>,
    banach_p_min: Option<u32>,
    verdicts: Verdicts,
    entries: Vec<Entry<'a>>,
}

impl Serialize for ContractionReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        Document {
            map: &self.map,
            space: &self.space,
            plan: &self.plan,
            p_max: self.p_max,
            subsampled: self.subsampled(),
            minimal_p_singh_chatterjea: self.minimal_p_singh_chatterjea,
            banach_p_min: self.banach_p_min,
            verdicts: self.verdicts(),
            entries: self.entries().into_iter().map(Entry::from).collect(),
        }
        .serialize(serializer)
    }
}

/// Runs every estimator on the sample drawn by `plan`, for `p = 1..=p_max`.
pub fn classify(map: &SelfMap, plan: &SamplePlan, p_max: usize) -> Result<ContractionReport> {
    if p_max == 0 {
        return Err(Error::param("p-max", "must be at least 1"));
    }
    let samples = sample_points(map.space(), plan)?;
    let seed = plan.subsample_seed();
    let space = map.space();

    // Orbit images T^p x for p = 1..=p_max, built incrementally.
    let mut orbit: Vec<Vec<Point>> = Vec::with_capacity(p_max);
    let mut current = samples.clone();
    for _ in 0..p_max {
        current = current.iter().map(|x| map.apply(x)).collect();
        orbit.push(current.clone());
    }

    if samples.iter().all(|x| *x == samples[0]) {
        return Err(Error::InsufficientSamples { needed: 2, got: 1 });
    }
    let banach = estimate(space, ConditionClass::Banach, &samples, &orbit[0], seed);
    let kannan = estimate(space, ConditionClass::Kannan, &samples, &orbit[0], seed);
    let chatterjea = estimate(space, ConditionClass::Chatterjea, &samples, &orbit[0], seed);
    let singh: Vec<_> = (1..=p_max)
        .map(|p| estimate(space, ConditionClass::Singh(p), &samples, &orbit[p - 1], seed))
        .collect();
    let singh_chatterjea: Vec<_> = (1..=p_max)
        .map(|p| estimate(space, ConditionClass::SinghChatterjea(p), &samples, &orbit[p - 1], seed))
        .collect();
    let minimal_p_singh_chatterjea = singh_chatterjea
        .iter()
        .position(AlphaEstimate::holds)
        .map(|k| k + 1);
    let banach_p_min = match banach.value {
        Alpha::Finite(l) if l < 1.0 - VERDICT_MARGIN => Some(if l == 0.0 {
            1
        } else {
            minimal_p_for_banach(l)?
        }),
        _ => None,
    };

    Ok(ContractionReport {
        map: map.name().to_string(),
        space: space.describe(),
        plan: *plan,
        p_max,
        banach,
        kannan,
        chatterjea,
        singh,
        singh_chatterjea,
        minimal_p_singh_chatterjea,
        banach_p_min,
    })
}
