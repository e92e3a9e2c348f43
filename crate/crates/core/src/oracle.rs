//! Exact success probabilities by exhaustive enumeration.
//!
//! Every reachable `(vs_{t-1}, vs_t)` pair is listed with its exact
//! probability, each joint outcome of independent diffusions is scored
//! exactly, and the results are summed. Desk-scale parameters only.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::diffusion::Snapshot;
use crate::error::{domain, Error, Result};
use crate::estimators::{exact_success_weight, EstimatorSpec, Model};
use crate::protocol::{hop_distribution, Protocol};
use crate::tree::{TreeContext, VertexLabel};

pub const DEFAULT_OUTCOME_CAP: u128 = 10_000_000;

/// One observable outcome of a diffusion at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedOutcome {
    pub vs_prev: VertexLabel,
    pub vs_now: VertexLabel,
    pub prob: BigRational,
}

/// Splits every position by the even-time move rule at time `t`.
fn step(
    p: &Protocol,
    tree: &TreeContext,
    t: u32,
    from: &BTreeMap<VertexLabel, BigRational>,
    mut emit: impl FnMut(&VertexLabel, VertexLabel, BigRational),
) -> Result<()> {
    let branch = BigRational::from_integer(BigInt::from(p.d() - 1));
    for (v, q) in from {
        let a = p.alpha_exact(t, v.depth())?;
        if !a.is_zero() {
            emit(v, v.clone(), q * &a);
        }
        let moving = (BigRational::one() - &a) * q / &branch;
        if moving.is_zero() {
            continue;
        }
        // Away from the source: every neighbor except the one toward it.
        let back = tree.step_toward(v, &VertexLabel::root());
        for w in tree.neighbors(v) {
            if Some(&w) != back.as_ref() {
                emit(v, w, moving.clone());
            }
        }
    }
    Ok(())
}

/// All `(vs_{t-1}, vs_t)` pairs with positive probability, `t >= 1`.
pub fn enumerate_single(p: &Protocol, t: u32, cap: u128) -> Result<Vec<WeightedOutcome>> {
    if t < 1 {
        return domain("enumeration needs t >= 1");
    }
    let tree = TreeContext::new(p.d())?;
    let root = VertexLabel::root();
    let first = BigRational::new(BigInt::one(), BigInt::from(p.d()));
    if t == 1 {
        return Ok(tree
            .neighbors(&root)
            .into_iter()
            .map(|w| WeightedOutcome { vs_prev: root.clone(), vs_now: w, prob: first.clone() })
            .collect());
    }
    let mut dist: BTreeMap<VertexLabel, BigRational> =
        tree.neighbors(&root).into_iter().map(|w| (w, first.clone())).collect();
    // dist holds the law of vs_s; advance to s = t - 1.
    for s in 1..t - 1 {
        if s % 2 == 0 {
            let budget = dist.len() as u128 * p.d() as u128;
            if budget > cap {
                return Err(Error::BudgetExceeded { needed: budget, cap });
            }
            let mut next: BTreeMap<VertexLabel, BigRational> = BTreeMap::new();
            step(p, &tree, s, &dist, |_, w, q| *next.entry(w).or_insert_with(BigRational::zero) += q)?;
            dist = next;
        }
    }
    let mut out = Vec::new();
    if (t - 1) % 2 == 0 {
        step(p, &tree, t - 1, &dist, |v, w, q| {
            out.push(WeightedOutcome { vs_prev: v.clone(), vs_now: w, prob: q })
        })?;
    } else {
        out.extend(dist.into_iter().map(|(v, q)| WeightedOutcome { vs_prev: v.clone(), vs_now: v, prob: q }));
    }
    if out.len() as u128 > cap {
        return Err(Error::BudgetExceeded { needed: out.len() as u128, cap });
    }
    Ok(out)
}

/// Exact probability that the estimator returns the source when one
/// independent diffusion is observed at each of `times`.
pub fn exact_success(spec: &EstimatorSpec, p: &Protocol, times: &[u32], cap: u128) -> Result<BigRational> {
    spec.check_arity(times.len())?;
    let per: Vec<Vec<WeightedOutcome>> = times.iter().map(|&t| enumerate_single(p, t, cap)).collect::<Result<_>>()?;
    let total = per.iter().try_fold(1u128, |acc, o| acc.checked_mul(o.len() as u128)).unwrap_or(u128::MAX);
    if total > cap {
        return Err(Error::BudgetExceeded { needed: total, cap });
    }
    let hop = if spec.needs_model() {
        let max_t = times.iter().copied().max().unwrap_or(2);
        Some(hop_distribution(p, (max_t + max_t % 2).max(2))?)
    } else {
        None
    };
    let model = hop.as_ref().map(|h| Model { protocol: p, hop: h });
    let source = VertexLabel::root();
    let d = p.d();

    (0..total as u64)
        .into_par_iter()
        .map(|joint| -> Result<BigRational> {
            let mut rest = joint as usize;
            let mut prob = BigRational::one();
            let mut snaps = Vec::with_capacity(times.len());
            for (o, &t) in per.iter().zip(times) {
                let w = &o[rest % o.len()];
                rest /= o.len();
                prob *= &w.prob;
                snaps.push(Snapshot::new(d, t, w.vs_prev.clone(), w.vs_now.clone())?);
            }
            let hit = exact_success_weight(spec, &snaps, model, &source)?;
            Ok(if hit.is_zero() { hit } else { hit * prob })
        })
        .try_reduce(BigRational::zero, |a, b| Ok(a + b))
}
