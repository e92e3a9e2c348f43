//! Geometry of the infinite d-regular tree.
//!
//! A vertex is named by the walk that reaches it from a fixed root: the first
//! step picks one of `d` neighbors, and every later step picks one of the
//! `d - 1` neighbors other than the one just left. The empty walk is the root.
//! Estimators never read label entries directly; they go through the
//! operations on [`TreeContext`], which makes them invariant under relabeling.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};

/// Path from the root: `entries[0] < d` and `entries[i] < d - 1` for `i > 0`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexLabel(Vec<u32>);

impl VertexLabel {
    pub fn root() -> Self {
        VertexLabel(Vec::new())
    }

    /// Checked constructor.
    pub fn new(entries: Vec<u32>, d: u32) -> Result<Self> {
        let v = VertexLabel(entries);
        TreeContext::new(d)?.validate(&v)?;
        Ok(v)
    }

    pub(crate) fn from_entries_unchecked(entries: Vec<u32>) -> Self {
        VertexLabel(entries)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// Distance from the root.
    pub fn depth(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    fn parent(&self) -> Option<VertexLabel> {
        if self.0.is_empty() {
            None
        } else {
            Some(VertexLabel(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    fn child(&self, j: u32) -> VertexLabel {
        let mut e = Vec::with_capacity(self.0.len() + 1);
        e.extend_from_slice(&self.0);
        e.push(j);
        VertexLabel(e)
    }

    fn prefix(&self, len: usize) -> VertexLabel {
        VertexLabel(self.0[..len].to_vec())
    }

    fn is_prefix_of(&self, other: &VertexLabel) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }
}

impl fmt::Display for VertexLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("/");
        }
        for e in &self.0 {
            write!(f, "/{e}")?;
        }
        Ok(())
    }
}

impl FromStr for VertexLabel {
    type Err = Error;

    /// Parses `/` or `/a/b/c`. Range checks need `d` and happen elsewhere.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::LabelParse(s.to_string());
        let rest = s.strip_prefix('/').ok_or_else(bad)?;
        if rest.is_empty() {
            return Ok(VertexLabel::root());
        }
        rest.split('/')
            .map(|p| p.parse::<u32>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()
            .map(VertexLabel)
    }
}

impl Serialize for VertexLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VertexLabel {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Operations on the d-regular tree for a fixed `d >= 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeContext {
    d: u32,
}

impl TreeContext {
    pub fn new(d: u32) -> Result<Self> {
        if d < 3 {
            return Err(Error::InvalidDegree(d));
        }
        Ok(TreeContext { d })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn validate(&self, v: &VertexLabel) -> Result<()> {
        for (i, &e) in v.0.iter().enumerate() {
            let limit = if i == 0 { self.d } else { self.d - 1 };
            if e >= limit {
                return Err(Error::LabelOutOfRange { position: i, entry: e, d: self.d });
            }
        }
        Ok(())
    }

    fn lcp(u: &VertexLabel, v: &VertexLabel) -> usize {
        u.0.iter().zip(&v.0).take_while(|(a, b)| a == b).count()
    }

    pub fn distance(&self, u: &VertexLabel, v: &VertexLabel) -> u32 {
        let l = Self::lcp(u, v);
        (u.0.len() + v.0.len() - 2 * l) as u32
    }

    /// Smallest distance from `v` to any member of `set`.
    pub fn distance_to_set(&self, v: &VertexLabel, set: &[VertexLabel]) -> u32 {
        set.iter().map(|s| self.distance(v, s)).min().expect("distance to an empty set")
    }

    /// All `d` neighbors in a fixed order.
    pub fn neighbors(&self, v: &VertexLabel) -> Vec<VertexLabel> {
        let mut out = Vec::with_capacity(self.d as usize);
        match v.parent() {
            None => out.extend((0..self.d).map(|j| v.child(j))),
            Some(p) => {
                out.push(p);
                out.extend((0..self.d - 1).map(|j| v.child(j)));
            }
        }
        out
    }

    /// Neighbor number `k < d` in the order of [`Self::neighbors`].
    pub fn neighbor(&self, v: &VertexLabel, k: u32) -> VertexLabel {
        debug_assert!(k < self.d);
        if v.is_root() {
            v.child(k)
        } else if k == 0 {
            v.parent().expect("non-root has a parent")
        } else {
            v.child(k - 1)
        }
    }

    /// Neighbor number `k < d - 1` among the neighbors of `v` other than `from`.
    pub fn neighbor_avoiding(&self, v: &VertexLabel, from: &VertexLabel, k: u32) -> VertexLabel {
        debug_assert!(k < self.d - 1);
        let mut seen = 0;
        for j in 0..self.d {
            let w = self.neighbor(v, j);
            if &w == from {
                continue;
            }
            if seen == k {
                return w;
            }
            seen += 1;
        }
        unreachable!("`from` must be a neighbor of `v`")
    }

    /// First vertex after `from` on the path to `to`; `None` when equal.
    pub fn step_toward(&self, from: &VertexLabel, to: &VertexLabel) -> Option<VertexLabel> {
        if from == to {
            None
        } else if from.is_prefix_of(to) {
            Some(from.child(to.0[from.0.len()]))
        } else {
            from.parent()
        }
    }

    /// Vertices of the unique path from `u` to `v`, both ends included, in order.
    pub fn path_between(&self, u: &VertexLabel, v: &VertexLabel) -> Vec<VertexLabel> {
        let l = Self::lcp(u, v);
        let mut out = Vec::with_capacity(u.0.len() + v.0.len() - 2 * l + 1);
        for len in (l..=u.0.len()).rev() {
            out.push(u.prefix(len));
        }
        for len in l + 1..=v.0.len() {
            out.push(v.prefix(len));
        }
        out
    }

    /// Whether `x` and `y` lie in the same component of the tree with `root` removed.
    pub fn same_subtree(&self, root: &VertexLabel, x: &VertexLabel, y: &VertexLabel) -> Result<bool> {
        if x == root || y == root {
            return domain("same_subtree: a query vertex coincides with the removed vertex");
        }
        Ok(self.step_toward(root, x) == self.step_toward(root, y))
    }

    /// Smallest connected vertex set containing all terminals.
    pub fn steiner_tree(&self, terminals: &[VertexLabel]) -> Result<BTreeSet<VertexLabel>> {
        let Some(first) = terminals.first() else {
            return domain("steiner_tree of an empty terminal set");
        };
        let mut out = BTreeSet::new();
        out.insert(first.clone());
        for t in &terminals[1..] {
            out.extend(self.path_between(first, t));
        }
        Ok(out)
    }

    /// Vertices within distance `depth` of `core`, in breadth-first layers.
    /// `layers[0]` is `core` itself.
    pub fn neighborhood_layers(&self, core: &BTreeSet<VertexLabel>, depth: u32) -> Vec<Vec<VertexLabel>> {
        let mut seen: HashSet<VertexLabel> = core.iter().cloned().collect();
        let mut layers = vec![core.iter().cloned().collect::<Vec<_>>()];
        for _ in 0..depth {
            let mut next = Vec::new();
            for v in layers.last().expect("non-empty") {
                for w in self.neighbors(v) {
                    if seen.insert(w.clone()) {
                        next.push(w);
                    }
                }
            }
            layers.push(next);
        }
        layers
    }

    /// Vertices within distance `depth` of `core`.
    pub fn neighborhood_of_set(&self, core: &BTreeSet<VertexLabel>, depth: u32) -> BTreeSet<VertexLabel> {
        self.neighborhood_layers(core, depth).into_iter().flatten().collect()
    }

    /// `|B_r(v)| = 1 + d((d-1)^r - 1)/(d-2)`.
    pub fn ball_size(&self, r: u32) -> u128 {
        let d = self.d as u128;
        1 + d * (pow_u128(d - 1, r) - 1) / (d - 2)
    }

    /// Number of vertices at exactly distance `r >= 1` from a vertex.
    pub fn sphere_size(&self, r: u32) -> u128 {
        if r == 0 {
            1
        } else {
            self.d as u128 * pow_u128(self.d as u128 - 1, r - 1)
        }
    }

    /// Connected set indexed for tree dynamic programming.
    pub fn index_subtree(&self, nodes: &BTreeSet<VertexLabel>) -> Result<IndexedSubtree> {
        let list: Vec<VertexLabel> = nodes.iter().cloned().collect();
        let index: HashMap<VertexLabel, usize> =
            list.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let mut parent = vec![None; list.len()];
        let mut children = vec![Vec::new(); list.len()];
        let mut root = None;
        for (i, v) in list.iter().enumerate() {
            match v.parent().and_then(|p| index.get(&p).copied()) {
                Some(p) => {
                    parent[i] = Some(p);
                    children[p].push(i);
                }
                None if root.is_none() => root = Some(i),
                None => return domain("index_subtree: vertex set is not connected"),
            }
        }
        let Some(root) = root else {
            return domain("index_subtree: empty vertex set");
        };
        let mut order = Vec::with_capacity(list.len());
        order.push(root);
        let mut k = 0;
        while k < order.len() {
            order.extend(children[order[k]].iter().copied());
            k += 1;
        }
        Ok(IndexedSubtree { nodes: list, index, parent, children, order })
    }
}

pub(crate) fn pow_u128(base: u128, exp: u32) -> u128 {
    base.checked_pow(exp).expect("tree count overflows u128")
}

/// A finite connected vertex set with parent/child links and a top-down order.
#[derive(Clone, Debug)]
pub struct IndexedSubtree {
    pub nodes: Vec<VertexLabel>,
    pub index: HashMap<VertexLabel, usize>,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    /// Every node appears after its parent.
    pub order: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(s: &str) -> VertexLabel {
        s.parse().unwrap()
    }

    #[test]
    fn distance_examples() {
        let t = TreeContext::new(3).unwrap();
        assert_eq!(t.distance(&l("/0/1"), &l("/0/0")), 2);
        assert_eq!(t.distance(&l("/"), &l("/2/0/1")), 3);
        assert_eq!(t.distance(&l("/1"), &l("/2")), 2);
    }

    #[test]
    fn validation_rejects_out_of_range() {
        assert!(VertexLabel::new(vec![2, 1], 3).is_ok());
        assert!(VertexLabel::new(vec![3], 3).is_err());
        assert!(VertexLabel::new(vec![0, 2], 3).is_err());
        assert!(TreeContext::new(2).is_err());
    }

    #[test]
    fn text_round_trip() {
        for s in ["/", "/0", "/2/0/1"] {
            assert_eq!(l(s).to_string(), s);
        }
        assert!("2/0".parse::<VertexLabel>().is_err());
        assert!("/a".parse::<VertexLabel>().is_err());
    }

    #[test]
    fn neighbors_have_distance_one_and_are_distinct() {
        let t = TreeContext::new(4).unwrap();
        for v in [l("/"), l("/3"), l("/1/2/0")] {
            let n = t.neighbors(&v);
            assert_eq!(n.len(), 4);
            let set: BTreeSet<_> = n.iter().cloned().collect();
            assert_eq!(set.len(), 4);
            for w in &n {
                assert_eq!(t.distance(&v, w), 1);
                t.validate(w).unwrap();
            }
        }
    }

    #[test]
    fn same_subtree_examples() {
        let t = TreeContext::new(3).unwrap();
        assert!(t.same_subtree(&l("/0"), &l("/0/1"), &l("/0/1/0")).unwrap());
        assert!(!t.same_subtree(&l("/0"), &l("/0/1"), &l("/0/0")).unwrap());
        assert!(t.same_subtree(&l("/0"), &l("/"), &l("/1/1")).unwrap());
        assert!(t.same_subtree(&l("/0"), &l("/0"), &l("/1")).is_err());
    }

    #[test]
    fn path_is_ordered_and_adjacent() {
        let t = TreeContext::new(3).unwrap();
        let p = t.path_between(&l("/0/1/1"), &l("/0/0"));
        assert_eq!(p, vec![l("/0/1/1"), l("/0/1"), l("/0"), l("/0/0")]);
        assert_eq!(t.path_between(&l("/1"), &l("/1")), vec![l("/1")]);
    }

    #[test]
    fn ball_sizes() {
        let t = TreeContext::new(3).unwrap();
        assert_eq!(t.ball_size(0), 1);
        assert_eq!(t.ball_size(1), 4);
        assert_eq!(t.ball_size(2), 10);
        let core: BTreeSet<_> = [l("/1/0")].into_iter().collect();
        assert_eq!(t.neighborhood_of_set(&core, 3).len() as u128, t.ball_size(3));
    }

    #[test]
    fn index_subtree_orders_parents_first() {
        let t = TreeContext::new(3).unwrap();
        let s = t.steiner_tree(&[l("/0/1"), l("/1/0"), l("/2")]).unwrap();
        let idx = t.index_subtree(&s).unwrap();
        let mut pos = vec![0; idx.nodes.len()];
        for (k, &i) in idx.order.iter().enumerate() {
            pos[i] = k;
        }
        for i in 0..idx.nodes.len() {
            if let Some(p) = idx.parent[i] {
                assert!(pos[p] < pos[i]);
            }
        }
        let bad: BTreeSet<_> = [l("/0"), l("/1")].into_iter().collect();
        assert!(t.index_subtree(&bad).is_err());
    }
}
