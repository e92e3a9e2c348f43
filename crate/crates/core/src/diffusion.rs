//! Virtual-source trajectories and the infected sets they determine.
//!
//! Labels are rooted at the true source, so the hop distance of a virtual
//! source is its label depth.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::protocol::Protocol;
use crate::rng::{seeded, uniform_f64, uniform_index};
use crate::tree::{pow_u128, TreeContext, VertexLabel};

/// Virtual-source positions `vs[0..=T]`; `vs[0]` is the source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub d: u32,
    pub protocol: String,
    pub seed: u64,
    pub vs: Vec<VertexLabel>,
}

impl Trajectory {
    pub fn horizon(&self) -> u32 {
        self.vs.len() as u32 - 1
    }

    /// Hop distance of the virtual source at time `t`.
    pub fn hop(&self, t: u32) -> u32 {
        self.vs[t as usize].depth()
    }
}

/// Runs the virtual-source chain to time `horizon` from a fresh seeded generator.
pub fn simulate(p: &Protocol, horizon: u32, seed: u64) -> Result<Trajectory> {
    let mut rng = seeded(seed);
    let vs = simulate_with(p, horizon, &mut rng)?;
    Ok(Trajectory { d: p.d(), protocol: p.name(), seed, vs })
}

/// Chain driven by `rng`. Step `0 -> 1` uses one draw; every even step uses
/// two (stay test, then direction) whether or not they matter.
pub fn simulate_with<R: RngCore + ?Sized>(p: &Protocol, horizon: u32, rng: &mut R) -> Result<Vec<VertexLabel>> {
    if horizon < 1 {
        return domain("simulation horizon must be at least 1");
    }
    if let Some(h) = p.horizon() {
        // alpha is consulted at even t < horizon.
        if horizon > h + 1 {
            return Err(Error::HorizonExceeded { t: horizon, horizon: h });
        }
    }
    let d = p.d();
    let mut entries: Vec<u32> = vec![uniform_index(rng, d as usize) as u32];
    let mut vs = Vec::with_capacity(horizon as usize + 1);
    vs.push(VertexLabel::root());
    vs.push(VertexLabel::from_entries_unchecked(entries.clone()));
    for t in 1..horizon {
        if t % 2 == 0 {
            let stay = uniform_f64(rng) < p.alpha(t, entries.len() as u32)?;
            let dir = uniform_index(rng, d as usize - 1) as u32;
            if !stay {
                entries.push(dir);
            }
        }
        vs.push(VertexLabel::from_entries_unchecked(entries.clone()));
    }
    Ok(vs)
}

/// What an observer sees at time `t`: the virtual source at `t - 1` and `t`.
/// At even `t` both are the same vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SnapshotRepr", into = "SnapshotRepr")]
pub struct Snapshot {
    d: u32,
    t: u32,
    vs_prev: VertexLabel,
    vs_now: VertexLabel,
}

#[derive(Serialize, Deserialize)]
struct SnapshotRepr {
    d: u32,
    t: u32,
    vs_prev: VertexLabel,
    vs_now: VertexLabel,
}

impl TryFrom<SnapshotRepr> for Snapshot {
    type Error = Error;
    fn try_from(r: SnapshotRepr) -> Result<Self> {
        Snapshot::new(r.d, r.t, r.vs_prev, r.vs_now)
    }
}

impl From<Snapshot> for SnapshotRepr {
    fn from(s: Snapshot) -> Self {
        SnapshotRepr { d: s.d, t: s.t, vs_prev: s.vs_prev, vs_now: s.vs_now }
    }
}

impl Snapshot {
    pub fn new(d: u32, t: u32, vs_prev: VertexLabel, vs_now: VertexLabel) -> Result<Self> {
        let tree = TreeContext::new(d)?;
        tree.validate(&vs_prev)?;
        tree.validate(&vs_now)?;
        if t < 1 {
            return domain("snapshot time must be at least 1");
        }
        let gap = tree.distance(&vs_prev, &vs_now);
        if t % 2 == 0 && gap != 0 {
            return domain(format!("even-time snapshot at t = {t} must have equal virtual sources"));
        }
        if gap > 1 {
            return domain(format!("virtual sources {vs_prev} and {vs_now} are not adjacent"));
        }
        Ok(Snapshot { d, t, vs_prev, vs_now })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn vs_prev(&self) -> &VertexLabel {
        &self.vs_prev
    }

    pub fn vs_now(&self) -> &VertexLabel {
        &self.vs_now
    }

    /// Whether the infected set is a ball around a single virtual source.
    pub fn is_ball(&self) -> bool {
        self.vs_prev == self.vs_now
    }

    /// Largest allowed distance from the virtual-source set.
    pub fn radius(&self) -> u32 {
        self.t / 2
    }

    /// The one or two virtual sources the observer sees, in label order.
    /// Callers must not treat the order as information.
    pub fn virtual_sources(&self) -> Vec<VertexLabel> {
        if self.is_ball() {
            vec![self.vs_now.clone()]
        } else {
            let mut v = vec![self.vs_prev.clone(), self.vs_now.clone()];
            v.sort();
            v
        }
    }

    pub fn tree(&self) -> TreeContext {
        TreeContext::new(self.d).expect("validated at construction")
    }
}

/// Snapshot of `tr` at `1 <= t <= T`.
pub fn snapshot_at(tr: &Trajectory, t: u32) -> Result<Snapshot> {
    if t < 1 || t > tr.horizon() {
        return domain(format!("snapshot time {t} outside 1..={}", tr.horizon()));
    }
    let now = tr.vs[t as usize].clone();
    let prev = if t % 2 == 0 { now.clone() } else { tr.vs[t as usize - 1].clone() };
    Snapshot::new(tr.d, t, prev, now)
}

/// Whether `v` is infected at the snapshot time.
///
/// Even `t`: within `t/2` of the virtual source. Odd `t`: within `(t-1)/2`
/// of either virtual source.
pub fn contains(s: &Snapshot, v: &VertexLabel) -> bool {
    let tree = s.tree();
    let r = s.t / 2;
    tree.distance(v, &s.vs_now) <= r || tree.distance(v, &s.vs_prev) <= r
}

/// `|V_t|`.
pub fn infected_count(s: &Snapshot) -> u128 {
    let d = s.d as u128;
    let r = s.t / 2;
    if s.is_ball() {
        1 + d * (pow_u128(d - 1, r) - 1) / (d - 2)
    } else {
        2 * (pow_u128(d - 1, r + 1) - 1) / (d - 2)
    }
}

/// `N_t = |V_t|` at even `t`.
pub fn infected_count_even(d: u32, t: u32) -> u128 {
    let d = d as u128;
    1 + d * (pow_u128(d - 1, t / 2) - 1) / (d - 2)
}

/// Radius of the largest ball around the source inside `V_t`, for even `t`.
pub fn local_radius(tr: &Trajectory, t: u32) -> Result<u32> {
    if t % 2 == 1 {
        return domain("local radius is defined at even times only");
    }
    if t < 2 || t > tr.horizon() {
        return domain(format!("local radius time {t} outside 2..={}", tr.horizon()));
    }
    Ok(t / 2 - tr.hop(t))
}
