//! Monte Carlo runs of estimators against their analytic targets.
//!
//! Trial `i` simulates diffusion `j` from seed `mix_seed(seed, i, j)` and
//! runs estimator `e` with generator `mix_seed(seed, i, k + e)`, where `k` is
//! the number of diffusions. Trials share nothing else, so reports do not
//! depend on the thread count.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_form::{self, Target, TargetKind};
use crate::diffusion::{simulate_with, snapshot_at, Trajectory};
use crate::error::{Error, Result};
use crate::estimators::{estimate, single_mle_success_probability, EstimatorSpec, Model};
use crate::oracle::{exact_success, DEFAULT_OUTCOME_CAP};
use crate::protocol::{hop_distribution, AlphaRule, Protocol, ProtocolSpec};
use crate::rng::{mix_seed, seeded};
use crate::tree::VertexLabel;

/// Named analytic value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    DetectionLowerBound,
    UniformTwoSnapshotUpper,
    EvenEvenMleExact,
    EvenOddMleExact,
    OddOddMleUpper,
    ThreeSnapshotLower,
    KSnapshotLower,
    SingleMleExact,
}

/// Where a target value comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Formula { formula: Formula },
    /// Exhaustive enumeration; feasible only for small times.
    Oracle { oracle: bool },
    Fixed {
        kind: TargetKind,
        value: f64,
        #[serde(default)]
        label: Option<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorEntry {
    #[serde(flatten)]
    pub spec: EstimatorSpec,
    #[serde(default)]
    pub targets: Vec<TargetSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub d: u32,
    pub protocol: ProtocolSpec,
    /// One observation time per independent diffusion.
    pub times: Vec<u32>,
    pub trials: u64,
    pub seed: u64,
    pub estimators: Vec<EstimatorEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Informational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetVerdict {
    pub target: Target,
    pub sigma: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub estimator: EstimatorSpec,
    pub successes: u64,
    /// Trials on which the estimator ran.
    pub evaluated: u64,
    pub precondition_failures: u64,
    pub frequency: f64,
    pub ci95: [f64; 2],
    pub targets: Vec<TargetVerdict>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub d: u32,
    pub protocol: String,
    pub times: Vec<u32>,
    pub trials: u64,
    pub seed: u64,
    pub estimators: Vec<EstimatorReport>,
    pub verdict: Verdict,
    pub wall_time_secs: f64,
}

impl ExperimentReport {
    /// One row per estimator and target.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("method,successes,evaluated,frequency,ci_low,ci_high,target,kind,value,sigma,verdict\n");
        for e in &self.estimators {
            let head = format!(
                "{},{},{},{},{},{}",
                e.estimator.method().as_str(),
                e.successes,
                e.evaluated,
                e.frequency,
                e.ci95[0],
                e.ci95[1]
            );
            if e.targets.is_empty() {
                out.push_str(&format!("{head},,,,,{}\n", verdict_str(e.verdict)));
            }
            for tv in &e.targets {
                out.push_str(&format!(
                    "{head},\"{}\",{},{},{},{}\n",
                    tv.target.label,
                    kind_str(tv.target.kind),
                    tv.target.value,
                    tv.sigma,
                    verdict_str(tv.verdict)
                ));
            }
        }
        out
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Informational => "informational",
    }
}

fn kind_str(k: TargetKind) -> &'static str {
    match k {
        TargetKind::Exact => "exact",
        TargetKind::LowerBound => "lower_bound",
        TargetKind::UpperBound => "upper_bound",
    }
}

/// 95% Wilson score interval.
pub fn wilson_interval(successes: u64, n: u64) -> [f64; 2] {
    if n == 0 {
        return [0.0, 1.0];
    }
    let z = 1.959_963_984_540_054_f64;
    let n = n as f64;
    let p = successes as f64 / n;
    let den = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / den;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / den;
    [(center - half).max(0.0), (center + half).min(1.0)]
}

/// Three-sigma comparison. Exact targets take sigma from the target value,
/// bounds from the observed frequency.
pub fn judge(target: &Target, successes: u64, n: u64) -> TargetVerdict {
    let nf = n.max(1) as f64;
    let freq = successes as f64 / nf;
    let (sigma, verdict) = match target.kind {
        TargetKind::Exact => {
            let s = (target.value * (1.0 - target.value) / nf).sqrt();
            (s, (freq - target.value).abs() <= 3.0 * s)
        }
        TargetKind::LowerBound => {
            let s = (freq * (1.0 - freq) / nf).sqrt();
            (s, freq >= target.value - 3.0 * s)
        }
        TargetKind::UpperBound => {
            let s = (freq * (1.0 - freq) / nf).sqrt();
            (s, freq <= target.value + 3.0 * s)
        }
    };
    let verdict = if n == 0 {
        Verdict::Informational
    } else if verdict {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    TargetVerdict { target: target.clone(), sigma, verdict }
}

/// Lists every problem with `cfg` instead of stopping at the first.
pub fn validate(cfg: &ExperimentConfig) -> Result<()> {
    let mut errs = Vec::new();
    if cfg.d < 3 {
        errs.push(format!("d must be at least 3, got {}", cfg.d));
    }
    if cfg.times.is_empty() {
        errs.push("times must not be empty".into());
    }
    if cfg.times.iter().any(|&t| t < 2) {
        errs.push("every observation time must be at least 2".into());
    }
    if cfg.trials == 0 {
        errs.push("trials must be positive".into());
    }
    if cfg.estimators.is_empty() {
        errs.push("no estimators listed".into());
    }
    for e in &cfg.estimators {
        let name = e.spec.method().as_str();
        if let Err(err) = e.spec.check_arity(cfg.times.len()) {
            errs.push(err.to_string());
        }
        if matches!(e.spec, EstimatorSpec::UniformMleCases) {
            if cfg.protocol != ProtocolSpec::Uniform {
                errs.push(format!("{name} assumes the uniform protocol"));
            }
            if cfg.times.iter().any(|&t| t < if t % 2 == 0 { 4 } else { 5 }) {
                errs.push(format!("{name} needs even times >= 4 and odd times >= 5"));
            }
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(errs.join("; ")))
    }
}

fn resolve_target(
    spec: &TargetSpec,
    est: &EstimatorSpec,
    cfg: &ExperimentConfig,
    p: &Protocol,
) -> Result<Target> {
    let ts = &cfg.times;
    let d = cfg.d;
    let two = || -> Result<(u32, u32)> {
        if ts.len() == 2 {
            Ok((ts[0], ts[1]))
        } else {
            Err(Error::Config("formula needs exactly two times".into()))
        }
    };
    match spec {
        TargetSpec::Fixed { kind, value, label } => {
            Ok(Target::new(*kind, *value, label.clone().unwrap_or_else(|| "fixed".into())))
        }
        TargetSpec::Oracle { .. } => {
            let v = exact_success(est, p, ts, DEFAULT_OUTCOME_CAP)?;
            let v = num_traits::ToPrimitive::to_f64(&v).unwrap_or(f64::NAN);
            Ok(Target::new(TargetKind::Exact, v, "exhaustive enumeration"))
        }
        TargetSpec::Formula { formula } => match formula {
            Formula::DetectionLowerBound => {
                let (a, b) = two()?;
                closed_form::detection_lower_bound(d, a, b)
            }
            Formula::UniformTwoSnapshotUpper => {
                let (a, b) = two()?;
                closed_form::uniform_two_snapshot_upper(d, a, b)
            }
            Formula::EvenEvenMleExact => {
                let (a, b) = two()?;
                closed_form::even_even_mle_exact(d, a, b)
            }
            Formula::EvenOddMleExact => {
                let (a, b) = two()?;
                let (e, o) = if a % 2 == 0 { (a, b) } else { (b, a) };
                closed_form::even_odd_mle_exact(d, e, o)
            }
            Formula::OddOddMleUpper => {
                let (a, b) = two()?;
                closed_form::odd_odd_mle_upper(d, a, b)
            }
            Formula::ThreeSnapshotLower => closed_form::three_snapshot_lower(d),
            Formula::KSnapshotLower => closed_form::k_snapshot_lower(d, ts.len() as u32),
            Formula::SingleMleExact => {
                if ts.len() != 1 {
                    return Err(Error::Config("single_mle_exact needs one time".into()));
                }
                let t = ts[0];
                let hop = hop_distribution(p, t + t % 2)?;
                Ok(Target::new(
                    TargetKind::Exact,
                    single_mle_success_probability(p, &hop, t)?,
                    "single-snapshot MLE",
                ))
            }
        },
    }
}

/// Runs `cfg` on `threads` workers (all cores when `None`).
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentReport> {
    validate(cfg)?;
    let start = Instant::now();
    let p = cfg.protocol.build(cfg.d)?;
    if let AlphaRule::Table(_) = p.rule() {
        let need = cfg.times.iter().max().copied().unwrap_or(0);
        if p.horizon().is_some_and(|h| need > h + 1) {
            return Err(Error::HorizonExceeded { t: need, horizon: p.horizon().unwrap_or(0) });
        }
    }
    let max_t = *cfg.times.iter().max().expect("validated");
    let hop = hop_distribution(&p, max_t + max_t % 2)?;
    let model = Model { protocol: &p, hop: &hop };
    let k = cfg.times.len() as u64;
    let n_est = cfg.estimators.len();
    let source = VertexLabel::root();

    let trial = |i: u64| -> Result<Vec<[u64; 2]>> {
        let mut snaps = Vec::with_capacity(k as usize);
        for (j, &t) in cfg.times.iter().enumerate() {
            let mut rng = seeded(mix_seed(cfg.seed, i, j as u64));
            let vs = simulate_with(&p, t, &mut rng)?;
            let tr = Trajectory { d: cfg.d, protocol: String::new(), seed: 0, vs };
            snaps.push(snapshot_at(&tr, t)?);
        }
        let mut out = vec![[0u64; 2]; n_est];
        for (e, entry) in cfg.estimators.iter().enumerate() {
            let mut rng = seeded(mix_seed(cfg.seed, i, k + e as u64));
            match estimate(&entry.spec, &snaps, Some(model), &mut rng) {
                Ok(est) => out[e][0] = (est.chosen == source) as u64,
                Err(Error::Precondition(_)) => out[e][1] = 1,
                Err(err) => return Err(err),
            }
        }
        Ok(out)
    };
    let run = || {
        (0..cfg.trials).into_par_iter().map(trial).try_reduce(
            || vec![[0u64; 2]; n_est],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    x[0] += y[0];
                    x[1] += y[1];
                }
                Ok(a)
            },
        )
    };
    let counts = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(run)?,
        None => run()?,
    };

    let mut reports = Vec::with_capacity(n_est);
    for (entry, [successes, failures]) in cfg.estimators.iter().zip(counts) {
        let evaluated = cfg.trials - failures;
        let targets: Vec<TargetVerdict> = entry
            .targets
            .iter()
            .map(|ts| resolve_target(ts, &entry.spec, cfg, &p).map(|t| judge(&t, successes, evaluated)))
            .collect::<Result<_>>()?;
        let verdict = if targets.is_empty() {
            Verdict::Informational
        } else if targets.iter().any(|t| t.verdict == Verdict::Fail) {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
        reports.push(EstimatorReport {
            estimator: entry.spec.clone(),
            successes,
            evaluated,
            precondition_failures: failures,
            frequency: if evaluated == 0 { 0.0 } else { successes as f64 / evaluated as f64 },
            ci95: wilson_interval(successes, evaluated),
            targets,
            verdict,
        });
    }
    let verdict = if reports.iter().any(|r| r.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if reports.iter().all(|r| r.verdict == Verdict::Informational) {
        Verdict::Informational
    } else {
        Verdict::Pass
    };
    Ok(ExperimentReport {
        name: cfg.name.clone(),
        d: cfg.d,
        protocol: p.name(),
        times: cfg.times.clone(),
        trials: cfg.trials,
        seed: cfg.seed,
        estimators: reports,
        verdict,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}
