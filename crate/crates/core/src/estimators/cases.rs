//! Closed-form maximum-likelihood estimate from two snapshots under the
//! uniform protocol.
//!
//! Under that protocol the likelihood of a vertex depends only on its
//! distances to the two virtual-source sets. The maximizer then falls into
//! a short list of configurations, decided by the parities of the times, the
//! shapes of the snapshots and how far apart the virtual sources are.

use std::collections::BTreeSet;

use rand::RngCore;
use serde_json::json;

use super::{common_degree, finish, CandidateSet, Diagnostics, Estimate, Method};
use crate::diffusion::{contains, Snapshot};
use crate::error::{precondition, Result};
use crate::tree::{TreeContext, VertexLabel};

struct Pair<'a> {
    tree: TreeContext,
    a: &'a Snapshot,
    b: &'a Snapshot,
    excluded: BTreeSet<VertexLabel>,
}

impl Pair<'_> {
    fn neighbors_except(&self, centers: &[&VertexLabel]) -> Vec<VertexLabel> {
        centers
            .iter()
            .flat_map(|c| self.tree.neighbors(c))
            .filter(|v| !self.excluded.contains(v))
            .collect()
    }

    fn infected(&self, v: &VertexLabel) -> bool {
        contains(self.a, v) && contains(self.b, v)
    }

    /// Infected vertices strictly inside the path `from -> to`, ordered from `from`.
    fn inner_path(&self, from: &VertexLabel, to: &VertexLabel) -> Result<Vec<VertexLabel>> {
        let p = self.tree.path_between(from, to);
        let inner: Vec<VertexLabel> = p[1..p.len() - 1]
            .iter()
            .filter(|v| !self.excluded.contains(*v) && self.infected(v))
            .cloned()
            .collect();
        if inner.is_empty() {
            return precondition("snapshots admit no common source");
        }
        Ok(inner)
    }

    /// Vertices at distance 1 or 2 from `centers`, excluding the virtual sources.
    fn within_two(&self, centers: &[&VertexLabel]) -> Vec<VertexLabel> {
        let core = centers.iter().map(|c| (*c).clone()).collect();
        self.tree
            .neighborhood_of_set(&core, 2)
            .into_iter()
            .filter(|v| !self.excluded.contains(v) && !core.contains(v))
            .collect()
    }

    /// Members of `vs` closest to `target`.
    fn closest<'v>(&self, vs: &'v [VertexLabel], target: &VertexLabel) -> &'v VertexLabel {
        vs.iter().min_by_key(|v| self.tree.distance(v, target)).expect("non-empty")
    }

    fn x(&self, s: &Snapshot, v: &VertexLabel) -> u32 {
        self.tree.distance_to_set(v, &s.virtual_sources())
    }
}

fn check_times(s: &Snapshot) -> Result<()> {
    let min = if s.t() % 2 == 0 { 4 } else { 5 };
    if s.t() < min {
        return precondition(format!("closed-form cases need even t >= 4 and odd t >= 5, got t = {}", s.t()));
    }
    Ok(())
}

pub(crate) fn uniform_cases_candidates(s1: &Snapshot, s2: &Snapshot) -> Result<(CandidateSet, Diagnostics)> {
    common_degree(&[s1.clone(), s2.clone()])?;
    check_times(s1)?;
    check_times(s2)?;
    let d = s1.d();
    // Even before odd; among odd, ball before two-center.
    let rank = |s: &Snapshot| (s.t() % 2, !s.is_ball());
    let (a, b) = if rank(s2) < rank(s1) { (s2, s1) } else { (s1, s2) };
    let excluded = a.virtual_sources().into_iter().chain(b.virtual_sources()).collect();
    let pr = Pair { tree: s1.tree(), a, b, excluded };
    let tree = &pr.tree;
    let (ea, eb) = (a.virtual_sources(), b.virtual_sources());

    let (family, case, cands): (&str, u32, Vec<VertexLabel>) = match (a.t() % 2, b.t() % 2) {
        (0, 0) => {
            let (va, vb) = (&ea[0], &eb[0]);
            match tree.distance(va, vb) {
                0 => ("even-even", 1, pr.neighbors_except(&[va])),
                1 => ("even-even", 2, pr.neighbors_except(&[va, vb])),
                _ => ("even-even", 3, pr.inner_path(va, vb)?),
            }
        }
        (0, _) => {
            let va = &ea[0];
            let x = tree.distance_to_set(va, &eb);
            match (b.is_ball(), x) {
                (true, 0) => ("even-odd", 1, pr.neighbors_except(&[va])),
                (false, 0) => ("even-odd", 2, pr.neighbors_except(&[va])),
                (true, 1) => ("even-odd", 3, pr.neighbors_except(&[&eb[0]])),
                (false, 1) => ("even-odd", 4, pr.neighbors_except(&[va])),
                (true, _) => {
                    let inner = pr.inner_path(va, &eb[0])?;
                    ("even-odd", 5, vec![inner.last().expect("non-empty").clone()])
                }
                (false, _) => {
                    let near = pr.closest(&eb, va);
                    let inner = pr.inner_path(va, near)?;
                    ("even-odd", 6, vec![inner[0].clone()])
                }
            }
        }
        _ => odd_odd(&pr, d, &ea, &eb)?,
    };

    let mut diag = Diagnostics::new();
    diag.insert("case".into(), json!(format!("{family} {case}")));
    Ok((CandidateSet::explicit(cands), diag))
}

fn odd_odd(
    pr: &Pair<'_>,
    d: u32,
    ea: &[VertexLabel],
    eb: &[VertexLabel],
) -> Result<(&'static str, u32, Vec<VertexLabel>)> {
    let tree = &pr.tree;
    let (a, b) = (pr.a, pr.b);
    let fam = "odd-odd";
    Ok(match (a.is_ball(), b.is_ball()) {
        (true, true) => {
            let (va, vb) = (&ea[0], &eb[0]);
            match tree.distance(va, vb) {
                0 => (fam, 1, pr.neighbors_except(&[va])),
                1 => {
                    let c = match a.t().cmp(&b.t()) {
                        std::cmp::Ordering::Equal => pr.neighbors_except(&[va, vb]),
                        std::cmp::Ordering::Greater => pr.neighbors_except(&[vb]),
                        std::cmp::Ordering::Less => pr.neighbors_except(&[va]),
                    };
                    (fam, 2, c)
                }
                _ => {
                    let inner = pr.inner_path(va, vb)?;
                    let score = |v: &VertexLabel| {
                        (a.t() + 1 - 2 * pr.x(a, v)) as u64 * (b.t() + 1 - 2 * pr.x(b, v)) as u64
                    };
                    (fam, 3, argmax(inner, score))
                }
            }
        }
        (true, false) => {
            let va = &ea[0];
            match tree.distance_to_set(va, eb) {
                0 => (fam, 4, pr.neighbors_except(&[va])),
                1 => (fam, 5, pr.neighbors_except(&[va])),
                _ => {
                    let near = pr.closest(eb, va);
                    let inner = pr.inner_path(va, near)?;
                    (fam, 6, vec![inner[0].clone()])
                }
            }
        }
        (false, false) => {
            let shared: Vec<&VertexLabel> = ea.iter().filter(|v| eb.contains(v)).collect();
            if shared.len() == 2 {
                let c = if d == 3 { pr.within_two(&[&ea[0], &ea[1]]) } else { pr.neighbors_except(&[&ea[0], &ea[1]]) };
                (fam, 7, c)
            } else if shared.len() == 1 {
                let c = if d == 3 { pr.within_two(&[shared[0]]) } else { pr.neighbors_except(&[shared[0]]) };
                (fam, 8, c)
            } else {
                let (n1, n2) = ea
                    .iter()
                    .flat_map(|u| eb.iter().map(move |w| (u, w)))
                    .min_by_key(|(u, w)| tree.distance(u, w))
                    .expect("non-empty");
                let gap = tree.distance(n1, n2);
                if gap == 1 {
                    (fam, 9, pr.neighbors_except(&[n1, n2]))
                } else if d == 3 && gap == 2 {
                    let mid = tree.path_between(n1, n2)[1].clone();
                    let mut c = pr.neighbors_except(&[&mid]);
                    c.push(mid);
                    (fam, 10, c)
                } else {
                    let inner = pr.inner_path(n1, n2)?;
                    let score = |v: &VertexLabel| pr.x(a, v) as u64 * pr.x(b, v) as u64;
                    (fam, 10, argmax(inner, score))
                }
            }
        }
        (false, true) => unreachable!("ball snapshots are ordered first"),
    })
}

fn argmax(items: Vec<VertexLabel>, score: impl Fn(&VertexLabel) -> u64) -> Vec<VertexLabel> {
    let best = items.iter().map(&score).max().expect("non-empty");
    items.into_iter().filter(|v| score(v) == best).collect()
}

/// Maximum-likelihood estimate from two snapshots generated under the
/// uniform protocol, by case analysis. Needs even times `>= 4` and odd times
/// `>= 5`. The diagnostics name the case that applied.
pub fn uniform_mle_cases<R: RngCore + ?Sized>(s1: &Snapshot, s2: &Snapshot, rng: &mut R) -> Result<Estimate> {
    let (c, diag) = uniform_cases_candidates(s1, s2)?;
    Ok(finish(Method::UniformMleCases, c, diag, &s1.tree(), rng))
}
