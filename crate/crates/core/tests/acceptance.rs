//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeSet;
use std::time::Instant;

use adl_core::closed_form::*;
use adl_core::diffusion::*;
use adl_core::estimators::*;
use adl_core::experiments::*;
use adl_core::oracle::{exact_success, DEFAULT_OUTCOME_CAP};
use adl_core::protocol::*;
use adl_core::rng::{mix_seed, seeded, uniform_index};
use adl_core::tree::{TreeContext, VertexLabel};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

/// Float comparisons against exact rationals.
const FLOAT_TOL: f64 = 1e-12;
/// Monte Carlo criteria use three standard deviations.
const SIGMAS: f64 = 3.0;
/// 1 - 4 exp(-6.25), computed independently.
const K_SNAPSHOT_TARGET: f64 = 0.992_278_183_455;
/// Even-even two-snapshot MLE success at d = 3, t = 12.
const EVEN_EVEN_12: f64 = 0.211_420;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn uniform_hop_law() -> Outcome {
    for d in 3..=5 {
        let p = Protocol::uniform(d).map_err(e)?;
        let exact = hop_distribution_exact(&p, 60).map_err(e)?;
        let float = hop_distribution(&p, 60).map_err(e)?;
        for t in (2..=60).step_by(2) {
            for h in 1..=t / 2 {
                ensure(exact.p(t, h).map_err(e)? == q(2, t as i64), format!("d={d} t={t} h={h} exact"))?;
                let f = float.p(t, h).map_err(e)?;
                ensure((f - 2.0 / t as f64).abs() <= FLOAT_TOL, format!("d={d} t={t} h={h} float {f}"))?;
            }
        }
    }
    Ok("p(t,h) = 2/t exactly for even t <= 60, d = 3..5".into())
}

fn perfect_protocol() -> Outcome {
    for d in 3..=5u32 {
        let p = Protocol::perfect(d).map_err(e)?;
        let exact = hop_distribution_exact(&p, 30).map_err(e)?;
        let float = hop_distribution(&p, 30).map_err(e)?;
        for t in (2..=30).step_by(2) {
            let n1 = infected_count_even(d, t) - 1;
            for h in 1..=t / 2 {
                let shell = BigInt::from(d) * num_traits::pow(BigInt::from(d - 1), h as usize - 1);
                let lhs = exact.p(t, h).map_err(e)? * BigRational::from_integer(BigInt::from(n1));
                ensure(lhs == BigRational::from_integer(shell), format!("d={d} t={t} h={h}"))?;
            }
            let s = single_mle_success_probability(&p, &float, t).map_err(e)?;
            let want = 1.0 / n1 as f64;
            ensure((s - want).abs() <= FLOAT_TOL * want, format!("d={d} t={t} success {s} vs {want}"))?;
        }
    }
    let o = exact_success(&EstimatorSpec::SingleMle, &Protocol::perfect(3).map_err(e)?, &[6], DEFAULT_OUTCOME_CAP)
        .map_err(e)?;
    ensure(o == q(1, 21), format!("oracle at d=3 t=6 gave {o}"))?;
    Ok("p(t,h)(N_t-1) = d(d-1)^(h-1) for t <= 30; MLE success 1/(N_t-1); oracle 1/21 at t=6".into())
}

fn stay_half() -> Outcome {
    for d in 3..=5 {
        let p = Protocol::uniform(d).map_err(e)?;
        let hop = hop_distribution_exact(&p, 40).map_err(e)?;
        for t in (5..=41).step_by(2) {
            let s = stay_probability_exact(&p, t, &hop).map_err(e)?;
            ensure(s == q(1, 2), format!("d={d} t={t}: {s}"))?;
        }
    }
    Ok("stay probability = 1/2 exactly for odd t = 5..41, d = 3..5".into())
}

fn path_sums() -> Outcome {
    for t in 1..=30 {
        for s in 1..=t {
            ensure(path_sum(s, t).map_err(e)? == path_sum_closed(s, t), format!("s={s} t={t}"))?;
        }
    }
    Ok("path sum = s + t - 1 exactly for 1 <= s <= t <= 30".into())
}

fn mc_line(r: &ExperimentReport) -> Result<String, String> {
    let mut parts = Vec::new();
    for est in &r.estimators {
        for tv in &est.targets {
            parts.push(format!(
                "{} freq {:.5} vs {} {:.5} (3 sigma {:.5}): {:?}",
                est.estimator.method().as_str(),
                est.frequency,
                match tv.target.kind {
                    TargetKind::Exact => "exact",
                    TargetKind::LowerBound => "lower",
                    TargetKind::UpperBound => "upper",
                },
                tv.target.value,
                SIGMAS * tv.sigma,
                tv.verdict
            ));
        }
    }
    let line = format!("[{}] {}", r.name, parts.join("; "));
    if r.verdict == Verdict::Pass && r.estimators.iter().all(|x| x.precondition_failures == 0) {
        Ok(line)
    } else {
        Err(line)
    }
}

fn run(json: &str) -> Result<ExperimentReport, String> {
    let cfg: ExperimentConfig = serde_json::from_str(json).map_err(e)?;
    run_experiment(&cfg, None).map_err(e)
}

fn three_snapshot() -> Outcome {
    let mut lines = Vec::new();
    for d in [3, 4] {
        let r = run(&format!(
            r#"{{"name":"d={d}","d":{d},"protocol":{{"kind":"uniform"}},"times":[8,8,8],"trials":100000,"seed":5,
                "estimators":[{{"method":"three_obs_intersection","targets":[{{"formula":"three_snapshot_lower"}}]}}]}}"#
        ))?;
        lines.push(mc_line(&r)?);
    }
    Ok(lines.join(" | "))
}

fn k_snapshot() -> Outcome {
    let target = k_snapshot_lower(4, 50).map_err(e)?;
    ensure((target.value - K_SNAPSHOT_TARGET).abs() < 1e-11, format!("formula gives {}", target.value))?;
    let times = vec![10; 50];
    let r = run(&format!(
        r#"{{"name":"d=4 k=50","d":4,"protocol":{{"kind":"uniform"}},"times":{times:?},"trials":20000,"seed":6,
            "estimators":[{{"method":"k_obs_subtree","targets":[{{"kind":"lower_bound","value":{K_SNAPSHOT_TARGET}}}]}}]}}"#
    ))?;
    mc_line(&r)
}

fn two_path() -> Outcome {
    let mut lines = Vec::new();
    for kind in ["uniform", "perfect"] {
        let r = run(&format!(
            r#"{{"name":"{kind}","d":3,"protocol":{{"kind":"{kind}"}},"times":[12,12],"trials":100000,"seed":7,
                "estimators":[{{"method":"two_obs_path","targets":[{{"formula":"detection_lower_bound"}}]}}]}}"#
        ))?;
        let v = r.estimators[0].targets[0].target.value;
        ensure((v - 1.0 / 9.0).abs() < FLOAT_TOL, format!("lower bound {v}"))?;
        lines.push(mc_line(&r)?);
    }
    Ok(lines.join(" | "))
}

fn uniform_cases_rate() -> Outcome {
    let exact = even_even_mle_exact(3, 12, 12).map_err(e)?.value;
    ensure((exact - EVEN_EVEN_12).abs() < 5e-7, format!("formula gives {exact}"))?;
    let upper = uniform_two_snapshot_upper(3, 12, 12).map_err(e)?.value;
    ensure((upper - 7.0 / 18.0).abs() < FLOAT_TOL, format!("upper bound {upper}"))?;
    let r = run(
        r#"{"name":"d=3 t=12,12","d":3,"protocol":{"kind":"uniform"},"times":[12,12],"trials":100000,"seed":8,
            "estimators":[{"method":"uniform_mle_cases","targets":[{"formula":"even_even_mle_exact"},{"formula":"uniform_two_snapshot_upper"}]}]}"#,
    )?;
    mc_line(&r)
}

fn oracle_checks() -> Outcome {
    let u = Protocol::uniform(3).map_err(e)?;
    let mle = EstimatorSpec::GenericMle { search_depth: DEFAULT_SEARCH_DEPTH };
    let ee = exact_success(&mle, &u, &[4, 4], DEFAULT_OUTCOME_CAP).map_err(e)?;
    ensure(ee == q(41, 72), format!("even-even (4,4): {ee}"))?;
    let eo = exact_success(&mle, &u, &[4, 5], DEFAULT_OUTCOME_CAP).map_err(e)?.to_f64().unwrap_or(f64::NAN);
    let eo_formula = even_odd_mle_exact(3, 4, 5).map_err(e)?.value;
    ensure((eo - eo_formula).abs() <= FLOAT_TOL, format!("even-odd (4,5): {eo} vs {eo_formula}"))?;
    let oo = exact_success(&mle, &u, &[5, 5], DEFAULT_OUTCOME_CAP).map_err(e)?;
    let oo_bound = odd_odd_mle_upper_exact(3, 5, 5).map_err(e)?;
    ensure(oo <= oo_bound, format!("odd-odd (5,5): {oo} above {oo_bound}"))?;
    Ok(format!(
        "(4,4) = 41/72; (4,5) = {eo:.12} = formula; (5,5) = {:.6} <= {:.6}",
        oo.to_f64().unwrap_or(f64::NAN),
        oo_bound.to_f64().unwrap_or(f64::NAN)
    ))
}

fn cases_equal_search() -> Outcome {
    let per_combo = 10_000u64;
    let mut checked = 0u64;
    let mut by_case: BTreeSet<String> = BTreeSet::new();
    for d in 3..=5u32 {
        let u = Protocol::uniform(d).map_err(e)?;
        let hop = hop_distribution(&u, 14).map_err(e)?;
        let tree = TreeContext::new(d).map_err(e)?;
        for (combo, (even1, even2)) in [(true, true), (true, false), (false, true), (false, false)].into_iter().enumerate() {
            let slot = (d as u64) * 10 + combo as u64;
            for i in 0..per_combo {
                let mut rng = seeded(mix_seed(10, i, slot));
                let mut pick = |even: bool| if even { 4 + 2 * uniform_index(&mut rng, 5) as u32 } else { 5 + 2 * uniform_index(&mut rng, 5) as u32 };
                let (t1, t2) = (pick(even1), pick(even2));
                let s1 = snapshot_at(&simulate(&u, t1, mix_seed(11, i, slot)).map_err(e)?, t1).map_err(e)?;
                let s2 = snapshot_at(&simulate(&u, t2, mix_seed(12, i, slot)).map_err(e)?, t2).map_err(e)?;
                let snaps = [s1, s2];
                let g = candidate_distribution(&EstimatorSpec::GenericMle { search_depth: DEFAULT_SEARCH_DEPTH }, &snaps, Some(Model { protocol: &u, hop: &hop })).map_err(e)?;
                let c = uniform_mle_cases(&snaps[0], &snaps[1], &mut seeded(0)).map_err(e)?;
                by_case.insert(format!("{}", c.diagnostics["case"]));
                let a = g[0].1.materialize(&tree, 1 << 20);
                let b = c.candidates.materialize(&tree, 1 << 20);
                ensure(a == b, format!("d={d} t=({t1},{t2}) {:?} {:?}: case {}", snaps[0], snaps[1], c.diagnostics["case"]))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} instances, 0 mismatches, {} distinct cases reached", by_case.len()))
}

fn local_spreading() -> Outcome {
    let (d, gamma) = (3u32, 0.5);
    let p = Protocol::local_spreading(d, gamma).map_err(e)?;
    let hop = hop_distribution(&p, 40).map_err(e)?;
    for seed in 0..500 {
        let tr = simulate(&p, 40, seed).map_err(e)?;
        for t in (6..=40).step_by(2) {
            let want = floor_half_gamma_t(gamma, t);
            ensure(tr.hop(t) == want, format!("seed {seed} t={t}: hop {} vs {want}", tr.hop(t)))?;
            let r = local_radius(&tr, t).map_err(e)?;
            ensure(r as f64 >= (1.0 - gamma) * t as f64 / 2.0, format!("t={t}: radius {r}"))?;
        }
    }
    for t in (6..=40).step_by(2) {
        let h = floor_half_gamma_t(gamma, t);
        let s = single_mle_success_probability(&p, &hop, t).map_err(e)?;
        let want = 1.0 / (d as f64 * ((d - 1) as f64).powi(h as i32 - 1));
        ensure((s - want).abs() <= FLOAT_TOL * want, format!("t={t}: success {s} vs {want}"))?;
        let bound = local_spreading_targets(d, t, gamma).map_err(e)?.detection_upper;
        ensure(s <= bound, format!("t={t}: success {s} above {bound}"))?;
    }
    Ok("gamma=0.5 d=3: h_t = floor(gamma t/2) on 500 trajectories, t = 6..40; radius and detection bounds hold".into())
}

fn radius_bound() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for d in 3..=5u32 {
        let mut protocols = vec![Protocol::uniform(d).map_err(e)?, Protocol::perfect(d).map_err(e)?];
        for g in [0.25, 0.5, 0.75] {
            protocols.push(Protocol::local_spreading(d, g).map_err(e)?);
        }
        for p in &protocols {
            let hop = hop_distribution(p, 40).map_err(e)?;
            let gammas: Vec<f64> = match p.rule() {
                AlphaRule::LocalSpreading { gamma } => vec![*gamma],
                _ => vec![0.25, 0.5, 0.75],
            };
            for gamma in gammas {
                for t in (2..=40).step_by(2) {
                    let success = single_mle_success_probability(p, &hop, t).map_err(e)?;
                    let c = success * (infected_count_even(d, t) as f64).powf(gamma);
                    let mean_r: f64 =
                        hop.row(t).map_err(e)?.iter().enumerate().map(|(i, q)| q * (t / 2 - 1 - i as u32) as f64).sum();
                    let bound = radius_upper_bound(d, t, gamma, c).map_err(e)?;
                    ensure(mean_r <= bound, format!("{} d={d} gamma={gamma} t={t}: E[R]={mean_r} > {bound}", p.name()))?;
                    worst = worst.min(bound - mean_r);
                    count += 1;
                }
            }
        }
    }
    Ok(format!("{count} (protocol, d, gamma, t) cases with tightest C; smallest slack {worst:.4}"))
}

fn radius_brute_force() -> Outcome {
    let mut n = 0;
    for d in [3u32, 4] {
        let tree = TreeContext::new(d).map_err(e)?;
        let ball = tree.neighborhood_layers(&[VertexLabel::root()].into(), 7);
        for (k, p) in [Protocol::uniform(d).map_err(e)?, Protocol::perfect(d).map_err(e)?].iter().enumerate() {
            for seed in 0..500u64 {
                let tr = simulate(p, 12, mix_seed(13, seed, (d * 2) as u64 + k as u64)).map_err(e)?;
                for t in (2..=12).step_by(2) {
                    let s = snapshot_at(&tr, t).map_err(e)?;
                    let mut r = 0;
                    while ball[r + 1].iter().all(|v| contains(&s, v)) {
                        r += 1;
                    }
                    let got = local_radius(&tr, t).map_err(e)?;
                    ensure(got == r as u32, format!("d={d} seed={seed} t={t}: {got} vs brute force {r}"))?;
                }
                n += 1;
            }
        }
    }
    Ok(format!("{n} trajectories, even t <= 12, d = 3, 4: local radius = brute force"))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("uniform hop law", uniform_hop_law),
        ("perfect protocol", perfect_protocol),
        ("odd-time stay probability", stay_half),
        ("path-sum identity", path_sums),
        ("three-snapshot intersection", three_snapshot),
        ("k-snapshot subtree", k_snapshot),
        ("two-snapshot path estimator", two_path),
        ("two-snapshot MLE rate", uniform_cases_rate),
        ("exhaustive oracle", oracle_checks),
        ("case analysis = likelihood search", cases_equal_search),
        ("local spreading", local_spreading),
        ("radius upper bound", radius_bound),
        ("local radius brute force", radius_brute_force),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = f();
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("criterion {:>2} PASS  {name} ({secs:.1}s): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.1}s): {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
