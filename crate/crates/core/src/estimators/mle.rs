use std::collections::BTreeSet;

use rand::RngCore;
use serde_json::{json, Value};

use super::{common_degree, finish, CandidateSet, Diagnostics, Estimate, Method};
use crate::diffusion::Snapshot;
use crate::error::{precondition, Error, Result};
use crate::protocol::{HopDistribution, Protocol};
use crate::tree::VertexLabel;

/// Default fringe around the virtual sources searched by [`generic_mle`].
pub const DEFAULT_SEARCH_DEPTH: u32 = 3;

/// Log-likelihoods closer than this are ties. Float round-off in the hop
/// recurrence is far smaller; distinct values produced by the built-in
/// protocols at desk-scale times are far larger.
pub const LOG_TIE_TOLERANCE: f64 = 1e-9;

fn check_model(d: u32, hop: &HopDistribution, p: &Protocol) -> Result<()> {
    if hop.d() != d {
        return Err(Error::DegreeMismatch { expected: d, found: hop.d() });
    }
    if p.d() != d {
        return Err(Error::DegreeMismatch { expected: d, found: p.d() });
    }
    Ok(())
}

/// Hop row that governs a snapshot at time `t`.
fn governing_time(t: u32) -> u32 {
    if t % 2 == 0 {
        t
    } else {
        t - 1
    }
}

fn ln_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// `log L(x)` for `x = 1..=radius` up to an additive constant that depends
/// only on the snapshot. Index 0 is unused.
fn log_likelihood_table(s: &Snapshot, hop: &HopDistribution, p: &Protocol) -> Result<Vec<f64>> {
    let t = s.t();
    if t < 2 {
        return precondition("likelihood needs t >= 2");
    }
    let tg = governing_time(t);
    if !hop.covers(tg) {
        return precondition(format!("hop distribution does not cover t = {tg}"));
    }
    let lnb = ((s.d() - 1) as f64).ln();
    let mut out = vec![f64::NEG_INFINITY; s.radius() as usize + 1];
    for x in 1..=s.radius() {
        let mut v = ln_or_neg_inf(hop.p(tg, x)?) - (x - 1) as f64 * lnb;
        if t % 2 == 1 {
            let a = p.alpha(tg, x)?;
            v += ln_or_neg_inf(if s.is_ball() { a } else { 1.0 - a });
        }
        out[x as usize] = v;
    }
    Ok(out)
}

/// Per-vertex probability, divided by shell size, of seeing this snapshot
/// shape with the source at distance `x`, for `x = 1..=radius`.
fn per_vertex_weights(t: u32, ball: bool, d: u32, hop: &HopDistribution, p: &Protocol) -> Result<Vec<f64>> {
    let tg = governing_time(t);
    let b = (d - 1) as f64;
    let radius = t / 2;
    (1..=radius)
        .map(|x| {
            let q = hop.p(tg, x)?;
            Ok(if t % 2 == 0 {
                q / (d as f64 * b.powi(x as i32 - 1))
            } else if ball {
                q * p.alpha(tg, x)? / (d as f64 * b.powi(x as i32 - 1))
            } else {
                q * (1.0 - p.alpha(tg, x)?) / (2.0 * b.powi(x as i32))
            })
        })
        .collect()
}

fn near_max(values: &[f64]) -> (f64, Vec<usize>) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let idx = if max == f64::NEG_INFINITY {
        Vec::new()
    } else {
        (0..values.len()).filter(|&i| values[i] >= max - LOG_TIE_TOLERANCE).collect()
    };
    (max, idx)
}

pub(crate) fn single_mle_candidates(
    s: &Snapshot,
    hop: &HopDistribution,
    p: &Protocol,
) -> Result<(CandidateSet, Diagnostics)> {
    check_model(s.d(), hop, p)?;
    let ll = log_likelihood_table(s, hop, p)?;
    let (max, best) = near_max(&ll);
    if best.is_empty() {
        return precondition("snapshot has zero likelihood under the protocol");
    }
    let radii: Vec<u32> = best.iter().map(|&i| i as u32).collect();
    let mut diag = Diagnostics::new();
    diag.insert("argmax_hops".into(), json!(radii));
    diag.insert("log_likelihood".into(), json!(max));
    Ok((CandidateSet::Shells { centers: s.virtual_sources(), radii, d: s.d() }, diag))
}

/// Single-snapshot maximum-likelihood estimate.
///
/// The likelihood depends on a vertex only through its distance to the
/// virtual sources, so the maximizers are whole shells. The candidate set is
/// kept in that form and a member is drawn by walking a random direction.
pub fn single_mle<R: RngCore + ?Sized>(
    s: &Snapshot,
    hop: &HopDistribution,
    p: &Protocol,
    rng: &mut R,
) -> Result<Estimate> {
    let (c, mut diag) = single_mle_candidates(s, hop, p)?;
    let tree = s.tree();
    diag.insert("success_probability".into(), json!(single_mle_success_probability(p, hop, s.t())?));
    Ok(finish(Method::SingleMle, c, diag, &tree, rng))
}

/// Probability that [`single_mle`] returns the source at time `t >= 2`.
///
/// Even `t`: `max_h p(t,h) / (d (d-1)^(h-1))`. Odd `t`: the same maximum
/// taken separately over ball and two-center observations, then summed.
pub fn single_mle_success_probability(p: &Protocol, hop: &HopDistribution, t: u32) -> Result<f64> {
    if t < 2 {
        return precondition("single-snapshot success needs t >= 2");
    }
    check_model(p.d(), hop, p)?;
    let max = |w: Vec<f64>| w.into_iter().fold(0.0, f64::max);
    if t % 2 == 0 {
        Ok(max(per_vertex_weights(t, true, p.d(), hop, p)?))
    } else {
        Ok(max(per_vertex_weights(t, true, p.d(), hop, p)?) + max(per_vertex_weights(t, false, p.d(), hop, p)?))
    }
}

pub(crate) fn generic_mle_candidates(
    snaps: &[Snapshot],
    hop: &HopDistribution,
    p: &Protocol,
    search_depth: u32,
) -> Result<(CandidateSet, Diagnostics)> {
    let d = common_degree(snaps)?;
    check_model(d, hop, p)?;
    let tree = snaps[0].tree();
    let tables: Vec<Vec<f64>> = snaps.iter().map(|s| log_likelihood_table(s, hop, p)).collect::<Result<_>>()?;
    let vss: Vec<Vec<VertexLabel>> = snaps.iter().map(|s| s.virtual_sources()).collect();
    let all_vs: Vec<VertexLabel> = vss.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let core = tree.steiner_tree(&all_vs)?;
    let layers = tree.neighborhood_layers(&core, search_depth);

    let mut domain_size = 0usize;
    let mut scored: Vec<(f64, usize, VertexLabel)> = Vec::new();
    for (layer, vertices) in layers.iter().enumerate() {
        'vertex: for v in vertices {
            let mut ll = 0.0;
            for (vs, tab) in vss.iter().zip(&tables) {
                let x = tree.distance_to_set(v, vs) as usize;
                if x == 0 || x >= tab.len() {
                    continue 'vertex;
                }
                ll += tab[x];
            }
            domain_size += 1;
            scored.push((ll, layer, v.clone()));
        }
    }
    let lls: Vec<f64> = scored.iter().map(|s| s.0).collect();
    let (max, best) = near_max(&lls);

    let mut diag = Diagnostics::new();
    diag.insert("search_depth".into(), json!(search_depth));
    diag.insert("domain_size".into(), json!(domain_size));
    if best.is_empty() {
        // No vertex in the search domain is consistent with every snapshot.
        let excluded: BTreeSet<&VertexLabel> = all_vs.iter().collect();
        let fallback: Vec<VertexLabel> = layers
            .get(1)
            .map(|l| l.iter().filter(|v| !excluded.contains(v)).cloned().collect())
            .unwrap_or_default();
        diag.insert("fallback".into(), Value::Bool(true));
        let c = if fallback.is_empty() {
            CandidateSet::Shells { centers: vss[0].clone(), radii: vec![1], d }
        } else {
            CandidateSet::explicit(fallback)
        };
        return Ok((c, diag));
    }
    let boundary = search_depth > 0 && best.iter().any(|&i| scored[i].1 == search_depth as usize);
    diag.insert("fallback".into(), Value::Bool(false));
    diag.insert("boundary_hit".into(), Value::Bool(boundary));
    diag.insert("log_likelihood".into(), json!(max));
    Ok((CandidateSet::explicit(best.into_iter().map(|i| scored[i].2.clone()).collect()), diag))
}

/// Maximum-likelihood estimate from any number of snapshots.
///
/// The search covers the smallest subtree spanning all virtual sources plus
/// every vertex within `search_depth` of it, restricted to vertices infected
/// in every snapshot and excluding the virtual sources. `boundary_hit` in the
/// diagnostics reports a maximizer on the outermost layer.
pub fn generic_mle<R: RngCore + ?Sized>(
    snaps: &[Snapshot],
    hop: &HopDistribution,
    p: &Protocol,
    search_depth: u32,
    rng: &mut R,
) -> Result<Estimate> {
    let (c, diag) = generic_mle_candidates(snaps, hop, p, search_depth)?;
    let tree = snaps[0].tree();
    Ok(finish(Method::GenericMle, c, diag, &tree, rng))
}

