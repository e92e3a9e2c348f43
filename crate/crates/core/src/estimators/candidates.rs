use rand::RngCore;

use crate::rng::{uniform_index, uniform_index_u128};
use crate::tree::{pow_u128, TreeContext, VertexLabel};

/// The set an estimator draws its answer from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CandidateSet {
    /// Sorted, without repeats, non-empty.
    Explicit(Vec<VertexLabel>),
    /// Vertices whose distance to `centers` lies in `radii`.
    ///
    /// `centers` holds one vertex or two adjacent ones, and every radius is
    /// at least 1, so the centers themselves are never members.
    Shells { centers: Vec<VertexLabel>, radii: Vec<u32>, d: u32 },
}

impl CandidateSet {
    pub fn explicit(mut v: Vec<VertexLabel>) -> Self {
        v.sort();
        v.dedup();
        assert!(!v.is_empty(), "candidate sets are never empty");
        CandidateSet::Explicit(v)
    }

    fn shell_size(d: u32, centers: usize, r: u32) -> u128 {
        let d = d as u128;
        if centers == 1 {
            d * pow_u128(d - 1, r - 1)
        } else {
            2 * pow_u128(d - 1, r)
        }
    }

    pub fn len(&self) -> u128 {
        match self {
            CandidateSet::Explicit(v) => v.len() as u128,
            CandidateSet::Shells { centers, radii, d } => {
                radii.iter().map(|&r| Self::shell_size(*d, centers.len(), r)).sum()
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, tree: &TreeContext, v: &VertexLabel) -> bool {
        match self {
            CandidateSet::Explicit(list) => list.binary_search(v).is_ok(),
            CandidateSet::Shells { centers, radii, .. } => radii.contains(&tree.distance_to_set(v, centers)),
        }
    }

    /// Every member, if there are at most `limit`.
    pub fn materialize(&self, tree: &TreeContext, limit: u128) -> Option<Vec<VertexLabel>> {
        if self.len() > limit {
            return None;
        }
        match self {
            CandidateSet::Explicit(list) => Some(list.clone()),
            CandidateSet::Shells { centers, radii, .. } => {
                let core = centers.iter().cloned().collect();
                let max = *radii.iter().max().expect("non-empty");
                let layers = tree.neighborhood_layers(&core, max);
                let mut out: Vec<VertexLabel> =
                    radii.iter().flat_map(|&r| layers[r as usize].iter().cloned()).collect();
                out.sort();
                Some(out)
            }
        }
    }

    /// Uniform member.
    pub fn sample<R: RngCore + ?Sized>(&self, tree: &TreeContext, rng: &mut R) -> VertexLabel {
        match self {
            CandidateSet::Explicit(list) => list[uniform_index(rng, list.len())].clone(),
            CandidateSet::Shells { centers, radii, d } => {
                let mut k = uniform_index_u128(rng, self.len());
                let mut radius = radii[0];
                for &r in radii {
                    let n = Self::shell_size(*d, centers.len(), r);
                    if k < n {
                        radius = r;
                        break;
                    }
                    k -= n;
                }
                let (mut prev, mut cur) = if centers.len() == 1 {
                    let c = &centers[0];
                    (c.clone(), tree.neighbor(c, uniform_index(rng, *d as usize) as u32))
                } else {
                    let side = uniform_index(rng, 2);
                    let (c, other) = (&centers[side], &centers[1 - side]);
                    (c.clone(), tree.neighbor_avoiding(c, other, uniform_index(rng, *d as usize - 1) as u32))
                };
                for _ in 1..radius {
                    let next = tree.neighbor_avoiding(&cur, &prev, uniform_index(rng, *d as usize - 1) as u32);
                    prev = std::mem::replace(&mut cur, next);
                }
                cur
            }
        }
    }
}
