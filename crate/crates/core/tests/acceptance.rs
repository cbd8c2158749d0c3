//! Acceptance suite. Every criterion is evaluated, one line is printed per
//! criterion, and the test fails at the end if any of them failed.
//!
//! Run with `cargo test -p fplab --test acceptance -- --nocapture`.

mod common;

use std::fs;
use std::process::Command;

use fplab::analysis::{bridge_report, minimal_p_for_banach, ONE_THIRD};
use fplab::contraction::{
    alpha_banach, alpha_chatterjea, alpha_kannan, alpha_singh, alpha_singh_chatterjea, classify, Alpha,
};
use fplab::maps::gallery::{half_fold, linear_scale};
use fplab::solver::{full_orbit_check, iterations_needed, picard, rate_from_alpha, uniqueness_probe, StopRule};
use fplab::space::{
    sample_points, verify_metric_axioms, DistanceMatrix, MetricSpace, Point, SamplePlan, METRIC_TOLERANCE,
};
use rand::Rng;

use common::{brute_alpha, brute_iterations_needed, rng, s, Condition};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn grid(n: usize) -> Vec<Point> {
    sample_points(&MetricSpace::unit_interval(), &SamplePlan::grid(n)).unwrap()
}

fn t_squared_constant() -> Outcome {
    let map = half_fold();
    let points = grid(10_001);
    let off: Vec<&Point> = points.iter().filter(|x| map.iterate(x, 2) != s(0.5)).collect();
    check(
        off.is_empty(),
        format!("{} grid points, {} with T^2 x != 0.5", points.len(), off.len()),
    )
}

fn non_banach_witness() -> Outcome {
    let map = half_fold();
    let lower: Vec<Point> = grid(10_001)
        .into_iter()
        .filter(|x| x.as_scalar().unwrap() <= 0.5)
        .collect();
    let samples = [grid(3), grid(5), grid(101), grid(1001), lower, vec![s(0.0), s(0.25)]];
    let mut details = Vec::new();
    let mut ok = true;
    for sample in &samples {
        let est = alpha_banach(&map, sample).map_err(|e| e.to_string())?;
        ok &= est.value == Alpha::Finite(1.0) && !est.holds();
        details.push(format!("{:?}", est.value.finite()));
    }
    let report = classify(&map, &SamplePlan::grid(101), 2).map_err(|e| e.to_string())?;
    let verdict = report.verdicts().banach;
    ok &= verdict == "not Banach";
    check(ok, format!("alpha = [{}], verdict {verdict:?}", details.join(", ")))
}

fn singh_chatterjea_two() -> Outcome {
    let map = half_fold();
    let sc2 = alpha_singh_chatterjea(&map, 2, &grid(1001)).map_err(|e| e.to_string())?;
    let report = classify(&map, &SamplePlan::grid(101), 4).map_err(|e| e.to_string())?;
    check(
        sc2.value == Alpha::Finite(0.0) && report.minimal_p_singh_chatterjea == Some(2),
        format!("SC(2) alpha = {:?}, minimal p = {:?}", sc2.value, report.minimal_p_singh_chatterjea),
    )
}

fn unique_fixed_point() -> Outcome {
    let starts: Vec<Point> = [0.0, 0.1, 0.25, 0.75, 1.0].into_iter().map(s).collect();
    let probe = uniqueness_probe(&half_fold(), 2, &starts, &StopRule::default(), None)
        .map_err(|e| e.to_string())?;
    let all_half = probe.finals().iter().all(|x| **x == s(0.5));
    let steps: Vec<usize> = probe.traces.iter().map(|t| t.iterations).collect();
    check(
        all_half && probe.spread == 0.0 && steps.iter().all(|&n| n <= 2),
        format!("finals all 0.5: {all_half}, spread {}, S-steps {steps:?}", probe.spread),
    )
}

fn minimal_p() -> Outcome {
    let p = minimal_p_for_banach(0.9).map_err(|e| e.to_string())?;
    let r = bridge_report(0.9, None, None).map_err(|e| e.to_string())?;
    check(
        p == 11
            && (0.3486..=0.3488).contains(&r.power_before)
            && (0.3137..=0.3139).contains(&r.power_at_pmin),
        format!(
            "p_min = {p}, ln3/-ln0.9 = {:.4}, 0.9^10 = {:.6}, 0.9^11 = {:.6}",
            r.log_ratio, r.power_before, r.power_at_pmin
        ),
    )
}

fn chatterjea_fails_at_one() -> Outcome {
    let map = linear_scale(0.9).map_err(|e| e.to_string())?;
    let mut sample = vec![s(0.0), s(1.0)];
    sample.extend(grid(11));
    let est = alpha_singh_chatterjea(&map, 1, &sample).map_err(|e| e.to_string())?;
    let a = est.value.finite().unwrap_or(f64::INFINITY);
    check(
        a >= 0.9 / 1.9 - 1e-9,
        format!("SC(1) alpha = {a:.6} (0.9/1.9 = {:.6}), above 1/3: {}", 0.9 / 1.9, a > ONE_THIRD),
    )
}

fn rate_and_bounds() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for lambda in [0.3, 0.5, 0.9] {
        let map = linear_scale(lambda).map_err(|e| e.to_string())?;
        let samples = sample_points(map.space(), &SamplePlan::grid(101)).map_err(|e| e.to_string())?;
        let alpha = alpha_chatterjea(&map, &samples)
            .map_err(|e| e.to_string())?
            .value
            .finite()
            .filter(|a| *a < 0.5)
            .ok_or(format!("lambda {lambda}: no Chatterjea constant below 1/2"))?;
        let r = rate_from_alpha(alpha).map_err(|e| e.to_string())?;
        let trace = picard(&map, 1, &s(1.0), &StopRule::displacement(1e-12, 10_000), Some(alpha))
            .map_err(|e| e.to_string())?;
        let d0 = trace.delta0();
        let xf = trace.final_point.as_scalar().unwrap();
        let mut worst_step = f64::NEG_INFINITY;
        let mut worst_tail = f64::NEG_INFINITY;
        for row in &trace.rows {
            let n = row.n as i32;
            worst_step = worst_step.max(row.delta - r.powi(n) * d0);
            let tail = (row.x.as_scalar().unwrap() - xf).abs();
            worst_tail = worst_tail.max(tail - d0 * r.powi(n) / (1.0 - r));
        }
        ok &= worst_step <= 1e-9 && worst_tail <= 1e-9;
        details.push(format!(
            "lambda {lambda}: alpha {alpha:.4}, r {r:.4}, {} rows, max excess {worst_step:.1e}/{worst_tail:.1e}",
            trace.rows.len()
        ));
    }
    check(ok, details.join("; "))
}

fn iterations_oracle() -> Outcome {
    let mut g = rng(8);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let d0 = 10f64.powf(g.gen_range(-6.0..3.0));
        let r = g.gen_range(0.0..0.999);
        let eps = 10f64.powf(g.gen_range(-14.0..-1.0));
        let got = iterations_needed(d0, r, eps).map_err(|e| e.to_string())?;
        if got != brute_iterations_needed(d0, r, eps) {
            mismatches += 1;
        }
    }
    check(mismatches == 0, format!("1000 triples, {mismatches} mismatches"))
}

fn full_orbit() -> Outcome {
    let map = linear_scale(0.9).map_err(|e| e.to_string())?;
    let orbit = full_orbit_check(&map, 3, &s(1.0), 50).map_err(|e| e.to_string())?;
    let limits: Vec<f64> = orbit.limits.iter().map(|x| x.as_scalar().unwrap()).collect();
    check(
        limits.len() == 3 && limits.iter().all(|x| x.abs() <= 1e-6),
        format!("residue limits {limits:?}, spread {:.3e}", orbit.spread),
    )
}

fn metric_axioms() -> Outcome {
    let plan = SamplePlan::random(200, 42);
    let interval = verify_metric_axioms(&MetricSpace::unit_interval(), &plan).map_err(|e| e.to_string())?;
    let interval_grid = verify_metric_axioms(&MetricSpace::interval(-1.0, 1.0).unwrap(), &SamplePlan::grid(200))
        .map_err(|e| e.to_string())?;
    let boxed = verify_metric_axioms(
        &MetricSpace::euclidean_box(vec![(0.0, 1.0), (-1.0, 1.0), (0.0, 2.0)]).unwrap(),
        &plan,
    )
    .map_err(|e| e.to_string())?;
    let interval_magnitude = interval
        .results()
        .iter()
        .chain(interval_grid.results().iter())
        .map(|r| r.max_violation)
        .fold(0.0, f64::max);
    let box_magnitude = boxed.results().iter().map(|r| r.max_violation).fold(0.0, f64::max);
    let box_violations: usize = boxed.results().iter().map(|r| r.violations).sum();

    let corrupted = MetricSpace::finite(
        DistanceMatrix::new(vec![vec![0.0, 1.0, 2.0], vec![2.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap(),
    );
    let bad = verify_metric_axioms(&corrupted, &SamplePlan::grid(3)).map_err(|e| e.to_string())?;
    let witness_ok = !bad.symmetry.passed
        && bad.symmetry.witness_indices == [0, 1]
        && bad.symmetry.max_violation == 1.0;
    check(
        interval.all_passed()
            && interval_grid.all_passed()
            && interval_magnitude == 0.0
            && boxed.all_passed()
            && box_violations == 0
            && box_magnitude <= METRIC_TOLERANCE
            && witness_ok,
        format!(
            "interval max violation {interval_magnitude:e}; box 0 violations beyond tol, max {box_magnitude:.1e}; \
             corrupted symmetry witness {:?} violation {}",
            bad.symmetry.witness_indices, bad.symmetry.max_violation
        ),
    )
}

fn collapse_identities() -> Outcome {
    let mut g = rng(11);
    let mut mismatches = Vec::new();
    for k in 0..50 {
        let map = common::random_piecewise(&mut g);
        let samples = grid(41);
        let f = |r: fplab::Result<fplab::contraction::AlphaEstimate>| r.map(|e| e.value.finite());
        let sc1 = f(alpha_singh_chatterjea(&map, 1, &samples)).map_err(|e| e.to_string())?;
        let ch = f(alpha_chatterjea(&map, &samples)).map_err(|e| e.to_string())?;
        let singh1 = f(alpha_singh(&map, 1, &samples)).map_err(|e| e.to_string())?;
        let ka = f(alpha_kannan(&map, &samples)).map_err(|e| e.to_string())?;
        let ch_def = brute_alpha(&map, 1, Condition::Chatterjea, &samples);
        let ka_def = brute_alpha(&map, 1, Condition::Kannan, &samples);
        let bits = |x: Option<f64>| x.map(f64::to_bits);
        if bits(sc1) != bits(ch_def) || bits(ch) != bits(ch_def) || bits(singh1) != bits(ka_def) || bits(ka) != bits(ka_def)
        {
            mismatches.push(k);
        }
    }
    check(
        mismatches.is_empty(),
        format!("50 random maps, mismatching maps {mismatches:?}"),
    )
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |tag: &str| -> Result<Vec<Vec<u8>>, String> {
        let path = |name: &str| dir.path().join(format!("{tag}_{name}"));
        let invocations: [Vec<String>; 2] = [
            vec![
                "classify".into(), "--map".into(), "paper-piecewise".into(), "--random".into(), "300".into(),
                "--seed".into(), "7".into(), "--out-json".into(), path("classify.json").display().to_string(),
            ],
            vec![
                "sweep".into(), "--map".into(), "linear-scale".into(), "--lambda".into(), "0.9".into(),
                "--p".into(), "11".into(), "--starts".into(), "-1,-0.3,0.2,1".into(),
                "--out-csv".into(), path("sweep.csv").display().to_string(),
                "--out-json".into(), path("sweep.json").display().to_string(),
            ],
        ];
        for args in &invocations {
            let out = Command::new(env!("CARGO_BIN_EXE_fplab"))
                .args(args)
                .env_remove("FPLAB_SEED")
                .output()
                .map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(String::from_utf8_lossy(&out.stderr).into_owned());
            }
        }
        let mut files = vec!["classify.json".to_string(), "sweep.csv".into(), "sweep.json".into()];
        files.extend((0..4).map(|k| format!("sweep_start{k}.csv")));
        files
            .iter()
            .map(|f| fs::read(path(f)).map_err(|e| format!("{f}: {e}")))
            .collect()
    };
    let first = run("a")?;
    let second = run("b")?;
    let bytes: usize = first.iter().map(Vec::len).sum();
    check(
        first == second,
        format!("{} output files, {bytes} bytes, identical: {}", first.len(), first == second),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 12] = [
        ("T^2 is constant 1/2 on a 10001-point grid", t_squared_constant),
        ("half-fold has Banach ratio exactly 1", non_banach_witness),
        ("Singh-Chatterjea holds at p = 2", singh_chatterjea_two),
        ("unique fixed point 1/2 from every start", unique_fixed_point),
        ("minimal p for lambda = 0.9", minimal_p),
        ("Chatterjea fails at p = 1 for 0.9x", chatterjea_fails_at_one),
        ("displacement and tail bounds", rate_and_bounds),
        ("iterations_needed matches brute force", iterations_oracle),
        ("all residue subsequences converge", full_orbit),
        ("metric axiom checks", metric_axioms),
        ("p = 1 collapses to Chatterjea and Kannan", collapse_identities),
        ("CLI output is deterministic", cli_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed.push(i + 1);
                ("FAIL", d)
            }
        };
        println!("[{tag}] {}. {name}: {detail}", i + 1);
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
