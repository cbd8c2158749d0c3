//! From Banach constants to Singh-Chatterjea iterates.
//!
//! If `T` is Banach with constant `lambda`, then `T^p` is Banach with
//! constant `lambda^p`, and once `lambda^p <= 1/3` the iterate satisfies the
//! Chatterjea cross condition. The smallest such `p` is
//! `ceil(ln 3 / -ln lambda)`.

use serde::Serialize;

use crate::contraction::{alpha_banach, classify, Alpha, DEFAULT_P_MAX, VERDICT_MARGIN};
use crate::error::{Error, Result};
use crate::maps::SelfMap;
use crate::space::{sample_points, SamplePlan};

pub const ONE_THIRD: f64 = 1.0 / 3.0;

/// Default plan used by [`bridge_report`] when a map is given without one.
pub const DEFAULT_BRIDGE_PLAN: SamplePlan = SamplePlan {
    mode: crate::space::SampleMode::Grid,
    count: 101,
};

/// Smallest `p >= 1` with `lambda^p <= 1/3`.
///
/// The logarithmic formula gives the candidate; direct powering then decides
/// the boundary, so the result satisfies `lambda^p <= 1/3 < lambda^(p-1)`
/// in floating point. `lambda = 0` gives 1.
pub fn minimal_p_for_banach(lambda: f64) -> Result<u32> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::param("lambda", format!("{lambda} is outside (0, 1)")));
    }
    if lambda == 0.0 {
        return Ok(1);
    }
    let estimate = (3f64.ln() / -lambda.ln()).ceil();
    let mut p = if estimate.is_finite() && estimate >= 1.0 {
        estimate.min(i32::MAX as f64) as u32
    } else {
        1
    };
    while lambda.powi(p as i32) > ONE_THIRD {
        p += 1;
    }
    while p > 1 && lambda.powi(p as i32 - 1) <= ONE_THIRD {
        p -= 1;
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeReport {
    pub lambda: f64,
    /// `ln 3 / -ln lambda` before rounding up.
    pub log_ratio: f64,
    pub p_min_formula: u32,
    /// `lambda^p_min`
    pub power_at_pmin: f64,
    /// `lambda^(p_min - 1)`; equals 1 when `p_min = 1`.
    pub power_before: f64,
    /// Smallest `p` certified on samples of the supplied map.
    pub empirical_p: Option<usize>,
    /// Chatterjea (`p = 1`) estimate on the supplied map; `None` when no
    /// map was given or the estimate is infeasible.
    pub chatterjea_alpha_at_p1: Option<f64>,
    pub map: Option<String>,
}

/// Closed-form minimal `p` together with, when a map is supplied, what the
/// estimators certify on samples of it.
///
/// A supplied map must either record `lambda` as its Banach constant or
/// have a sampled Banach estimate no larger than `lambda`.
pub fn bridge_report(
    lambda: f64,
    map: Option<&SelfMap>,
    plan: Option<&SamplePlan>,
) -> Result<BridgeReport> {
    let p_min = minimal_p_for_banach(lambda)?;
    let mut report = BridgeReport {
        lambda,
        log_ratio: 3f64.ln() / -lambda.ln(),
        p_min_formula: p_min,
        power_at_pmin: lambda.powi(p_min as i32),
        power_before: lambda.powi(p_min as i32 - 1),
        empirical_p: None,
        chatterjea_alpha_at_p1: None,
        map: None,
    };
    let Some(map) = map else {
        return Ok(report);
    };
    let plan = plan.copied().unwrap_or(DEFAULT_BRIDGE_PLAN);

    let recorded = map
        .metadata()
        .banach_constant
        .is_some_and(|known| (known - lambda).abs() <= VERDICT_MARGIN);
    if !recorded {
        let samples = sample_points(map.space(), &plan)?;
        match alpha_banach(map, &samples)?.value {
            Alpha::Finite(a) if a <= lambda + VERDICT_MARGIN => {}
            other => {
                return Err(Error::Inconsistent(format!(
                    "map `{}` has sampled Banach constant {other:?}, above lambda = {lambda}",
                    map.name()
                )))
            }
        }
    }

    let p_max = DEFAULT_P_MAX.max(p_min as usize);
    let classified = classify(map, &plan, p_max)?;
    report.empirical_p = classified.minimal_p_singh_chatterjea;
    report.chatterjea_alpha_at_p1 = classified.chatterjea.value.finite();
    report.map = Some(map.name().to_string());
    Ok(report)
}
