use std::collections::BTreeSet;

use rand::RngCore;
use serde_json::{json, Value};

use super::{common_degree, finish, pick_uniform, CandidateSet, Diagnostics, Estimate, Method};
use crate::diffusion::{contains, Snapshot};
use crate::error::{precondition, Result};
use crate::tree::{TreeContext, VertexLabel};

fn require_min_time(snaps: &[Snapshot], min: u32) -> Result<()> {
    for s in snaps {
        if s.t() < min {
            return precondition(format!("observation time {} is below {min}", s.t()));
        }
    }
    Ok(())
}

pub(crate) fn two_obs_candidates(s1: &Snapshot, s2: &Snapshot) -> Result<(CandidateSet, Diagnostics)> {
    common_degree(&[s1.clone(), s2.clone()])?;
    require_min_time(&[s1.clone(), s2.clone()], 2)?;
    let tree = s1.tree();
    let vs: Vec<VertexLabel> = s1.virtual_sources().into_iter().chain(s2.virtual_sources()).collect();
    let excluded: BTreeSet<VertexLabel> = vs.iter().cloned().collect();
    let span = tree.steiner_tree(&vs)?;
    let infected = |v: &VertexLabel| contains(s1, v) && contains(s2, v);
    let on_path: Vec<VertexLabel> =
        span.iter().filter(|v| !excluded.contains(*v) && infected(v)).cloned().collect();

    let mut diag = Diagnostics::new();
    diag.insert("path_vertices".into(), json!(span.len()));
    if !on_path.is_empty() {
        diag.insert("fallback".into(), Value::Bool(false));
        return Ok((CandidateSet::explicit(on_path), diag));
    }
    // Virtual sources coincide or touch: take the infected vertices next to them.
    diag.insert("fallback".into(), Value::Bool(true));
    let ring: Vec<VertexLabel> = tree.neighborhood_layers(&span, 1).swap_remove(1);
    let inside: Vec<VertexLabel> = ring.iter().filter(|v| infected(v)).cloned().collect();
    Ok((CandidateSet::explicit(if inside.is_empty() { ring } else { inside }), diag))
}

/// Uniform pick among infected vertices strictly between the two
/// virtual-source sets.
///
/// When no such vertex exists the pick is uniform among the infected
/// neighbors of the virtual sources and `fallback` is set.
pub fn two_obs_path<R: RngCore + ?Sized>(s1: &Snapshot, s2: &Snapshot, rng: &mut R) -> Result<Estimate> {
    let (c, diag) = two_obs_candidates(s1, s2)?;
    Ok(finish(Method::TwoObsPath, c, diag, &s1.tree(), rng))
}

fn representatives<R: RngCore + ?Sized>(snaps: &[Snapshot], rng: &mut R) -> Vec<VertexLabel> {
    snaps.iter().map(|s| pick_uniform(&s.virtual_sources(), rng).clone()).collect()
}

pub(crate) fn three_obs_candidates(tree: &TreeContext, reps: &[VertexLabel]) -> Result<(CandidateSet, Diagnostics)> {
    let path = |a: &VertexLabel, b: &VertexLabel| -> BTreeSet<VertexLabel> {
        tree.path_between(a, b).into_iter().collect()
    };
    let p12 = path(&reps[0], &reps[1]);
    let p13 = path(&reps[0], &reps[2]);
    let p23 = path(&reps[1], &reps[2]);
    let meet: Vec<VertexLabel> = p12.iter().filter(|v| p13.contains(*v) && p23.contains(*v)).cloned().collect();
    let mut diag = Diagnostics::new();
    diag.insert("intersection_size".into(), json!(meet.len()));
    Ok((CandidateSet::explicit(meet), diag))
}

/// Common vertex of the three pairwise paths between virtual sources.
///
/// A two-center snapshot contributes one of its centers, chosen uniformly.
pub fn three_obs_intersection<R: RngCore + ?Sized>(
    s1: &Snapshot,
    s2: &Snapshot,
    s3: &Snapshot,
    rng: &mut R,
) -> Result<Estimate> {
    let snaps = [s1.clone(), s2.clone(), s3.clone()];
    common_degree(&snaps)?;
    require_min_time(&snaps, 2)?;
    let reps = representatives(&snaps, rng);
    let tree = s1.tree();
    let (c, diag) = three_obs_candidates(&tree, &reps)?;
    Ok(finish(Method::ThreeObsIntersection, c, diag, &tree, rng))
}

pub(crate) fn k_obs_candidates(tree: &TreeContext, reps: &[VertexLabel]) -> Result<(CandidateSet, Diagnostics)> {
    let span = tree.steiner_tree(reps)?;
    let sub = tree.index_subtree(&span)?;
    let n = sub.nodes.len();
    let k = reps.len();
    let mut below = vec![0usize; n];
    for r in reps {
        below[sub.index[r]] += 1;
    }
    for &i in sub.order.iter().rev() {
        if let Some(p) = sub.parent[i] {
            below[p] += below[i];
        }
    }
    // Largest count of representatives in one component after removing v.
    let worst: Vec<usize> = (0..n)
        .map(|i| sub.children[i].iter().map(|&c| below[c]).max().unwrap_or(0).max(k - below[i]))
        .collect();
    let best = *worst.iter().min().expect("non-empty");
    let arg: Vec<VertexLabel> = (0..n).filter(|&i| worst[i] == best).map(|i| sub.nodes[i].clone()).collect();
    let mut diag = Diagnostics::new();
    diag.insert("min_max_count".into(), json!(best));
    diag.insert("ill_defined".into(), Value::Bool(arg.len() > 1));
    Ok((CandidateSet::explicit(arg), diag))
}

/// Vertex whose removal leaves the fewest virtual sources in any one component.
///
/// Only vertices on paths between virtual sources are searched; any other
/// vertex has all of them in one component. With a single snapshot the
/// answer is its virtual source.
pub fn k_obs_subtree<R: RngCore + ?Sized>(snaps: &[Snapshot], rng: &mut R) -> Result<Estimate> {
    common_degree(snaps)?;
    require_min_time(snaps, 2)?;
    let reps = representatives(snaps, rng);
    let tree = snaps[0].tree();
    let (c, diag) = k_obs_candidates(&tree, &reps)?;
    Ok(finish(Method::KObsSubtree, c, diag, &tree, rng))
}
