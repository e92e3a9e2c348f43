//! Source estimators.
//!
//! Each estimator sees only snapshots: the sets of one or two virtual sources
//! and the observation times. It never sees the true source. Ties are broken
//! uniformly with the caller's generator, and every estimator reports its
//! full candidate set so that success can be scored as `1 / |ties|`.

mod candidates;
mod cases;
mod geometric;
mod mle;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::diffusion::Snapshot;
use crate::error::{precondition, Error, Result};
use crate::protocol::{HopDistribution, Protocol};
use crate::tree::{TreeContext, VertexLabel};

pub use candidates::CandidateSet;
pub use cases::uniform_mle_cases;
pub use geometric::{k_obs_subtree, three_obs_intersection, two_obs_path};
pub use mle::{generic_mle, single_mle, single_mle_success_probability, DEFAULT_SEARCH_DEPTH, LOG_TIE_TOLERANCE};

pub type Diagnostics = BTreeMap<String, Value>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SingleMle,
    TwoObsPath,
    ThreeObsIntersection,
    KObsSubtree,
    GenericMle,
    UniformMleCases,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::SingleMle => "single_mle",
            Method::TwoObsPath => "two_obs_path",
            Method::ThreeObsIntersection => "three_obs_intersection",
            Method::KObsSubtree => "k_obs_subtree",
            Method::GenericMle => "generic_mle",
            Method::UniformMleCases => "uniform_mle_cases",
        }
    }
}

/// Result of one estimator call.
#[derive(Clone, Debug)]
pub struct Estimate {
    pub method: Method,
    pub candidates: CandidateSet,
    pub chosen: VertexLabel,
    pub diagnostics: Diagnostics,
}

impl Estimate {
    /// Size of the tie set the choice was drawn from.
    pub fn ties(&self) -> u128 {
        self.candidates.len()
    }

    /// Probability, over the tie-break, that the choice is `source`.
    pub fn success_weight(&self, tree: &TreeContext, source: &VertexLabel) -> f64 {
        if self.candidates.contains(tree, source) {
            1.0 / self.ties() as f64
        } else {
            0.0
        }
    }
}

#[derive(Serialize)]
struct EstimateView<'a> {
    method: Method,
    chosen: &'a VertexLabel,
    ties: u128,
    diagnostics: &'a Diagnostics,
}

impl Serialize for Estimate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        EstimateView { method: self.method, chosen: &self.chosen, ties: self.ties(), diagnostics: &self.diagnostics }
            .serialize(s)
    }
}

/// Estimator choice with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum EstimatorSpec {
    SingleMle,
    TwoObsPath,
    ThreeObsIntersection,
    KObsSubtree,
    GenericMle {
        #[serde(default = "default_depth")]
        search_depth: u32,
    },
    UniformMleCases,
}

fn default_depth() -> u32 {
    DEFAULT_SEARCH_DEPTH
}

impl EstimatorSpec {
    pub fn method(&self) -> Method {
        match self {
            EstimatorSpec::SingleMle => Method::SingleMle,
            EstimatorSpec::TwoObsPath => Method::TwoObsPath,
            EstimatorSpec::ThreeObsIntersection => Method::ThreeObsIntersection,
            EstimatorSpec::KObsSubtree => Method::KObsSubtree,
            EstimatorSpec::GenericMle { .. } => Method::GenericMle,
            EstimatorSpec::UniformMleCases => Method::UniformMleCases,
        }
    }

    /// Whether the estimator needs the protocol and its hop distribution.
    pub fn needs_model(&self) -> bool {
        matches!(self, EstimatorSpec::SingleMle | EstimatorSpec::GenericMle { .. })
    }

    /// Checks the snapshot count this estimator accepts.
    pub fn check_arity(&self, k: usize) -> Result<()> {
        let ok = match self {
            EstimatorSpec::SingleMle => k == 1,
            EstimatorSpec::TwoObsPath | EstimatorSpec::UniformMleCases => k == 2,
            EstimatorSpec::ThreeObsIntersection => k == 3,
            EstimatorSpec::KObsSubtree | EstimatorSpec::GenericMle { .. } => k >= 1,
        };
        if ok {
            Ok(())
        } else {
            precondition(format!("{} cannot take {k} snapshots", self.method().as_str()))
        }
    }
}

/// Protocol and hop distribution for likelihood-based estimators.
#[derive(Clone, Copy, Debug)]
pub struct Model<'a> {
    pub protocol: &'a Protocol,
    pub hop: &'a HopDistribution,
}

fn need_model<'a>(m: Option<Model<'a>>, spec: &EstimatorSpec) -> Result<Model<'a>> {
    m.ok_or_else(|| Error::Precondition(format!("{} needs a protocol", spec.method().as_str())))
}

/// Runs the estimator named by `spec`.
pub fn estimate<R: RngCore + ?Sized>(
    spec: &EstimatorSpec,
    snaps: &[Snapshot],
    model: Option<Model<'_>>,
    rng: &mut R,
) -> Result<Estimate> {
    spec.check_arity(snaps.len())?;
    match spec {
        EstimatorSpec::SingleMle => {
            let m = need_model(model, spec)?;
            single_mle(&snaps[0], m.hop, m.protocol, rng)
        }
        EstimatorSpec::TwoObsPath => two_obs_path(&snaps[0], &snaps[1], rng),
        EstimatorSpec::ThreeObsIntersection => three_obs_intersection(&snaps[0], &snaps[1], &snaps[2], rng),
        EstimatorSpec::KObsSubtree => k_obs_subtree(snaps, rng),
        EstimatorSpec::GenericMle { search_depth } => {
            let m = need_model(model, spec)?;
            generic_mle(snaps, m.hop, m.protocol, *search_depth, rng)
        }
        EstimatorSpec::UniformMleCases => uniform_mle_cases(&snaps[0], &snaps[1], rng),
    }
}

/// Candidate sets the estimator can produce on `snaps`, weighted by the
/// probability of its internal choices. Tie-breaking is not expanded.
pub fn candidate_distribution(
    spec: &EstimatorSpec,
    snaps: &[Snapshot],
    model: Option<Model<'_>>,
) -> Result<Vec<(BigRational, CandidateSet)>> {
    spec.check_arity(snaps.len())?;
    let one = |c: CandidateSet| Ok(vec![(BigRational::one(), c)]);
    match spec {
        EstimatorSpec::SingleMle => {
            let m = need_model(model, spec)?;
            one(mle::single_mle_candidates(&snaps[0], m.hop, m.protocol)?.0)
        }
        EstimatorSpec::TwoObsPath => one(geometric::two_obs_candidates(&snaps[0], &snaps[1])?.0),
        EstimatorSpec::GenericMle { search_depth } => {
            let m = need_model(model, spec)?;
            one(mle::generic_mle_candidates(snaps, m.hop, m.protocol, *search_depth)?.0)
        }
        EstimatorSpec::UniformMleCases => one(cases::uniform_cases_candidates(&snaps[0], &snaps[1])?.0),
        EstimatorSpec::ThreeObsIntersection | EstimatorSpec::KObsSubtree => {
            let sets: Vec<Vec<VertexLabel>> = snaps.iter().map(|s| s.virtual_sources()).collect();
            let total: usize = sets.iter().map(|s| s.len()).product();
            let w = BigRational::new(BigInt::one(), BigInt::from(total));
            let mut out = Vec::with_capacity(total);
            for pick in 0..total {
                let mut rest = pick;
                let reps: Vec<VertexLabel> = sets
                    .iter()
                    .map(|s| {
                        let r = s[rest % s.len()].clone();
                        rest /= s.len();
                        r
                    })
                    .collect();
                let c = if matches!(spec, EstimatorSpec::ThreeObsIntersection) {
                    geometric::three_obs_candidates(&snaps[0].tree(), &reps)?.0
                } else {
                    geometric::k_obs_candidates(&snaps[0].tree(), &reps)?.0
                };
                out.push((w.clone(), c));
            }
            Ok(out)
        }
    }
}

/// Exact probability that the estimator returns `source`, integrating its
/// internal choices and the uniform tie-break.
pub fn exact_success_weight(
    spec: &EstimatorSpec,
    snaps: &[Snapshot],
    model: Option<Model<'_>>,
    source: &VertexLabel,
) -> Result<BigRational> {
    let tree = snaps.first().ok_or_else(|| Error::Precondition("no snapshots".into()))?.tree();
    let mut s = BigRational::zero();
    for (w, c) in candidate_distribution(spec, snaps, model)? {
        if c.contains(&tree, source) {
            s += w / BigRational::from_integer(BigInt::from(c.len()));
        }
    }
    Ok(s)
}

/// All snapshots must share `d`.
pub(crate) fn common_degree(snaps: &[Snapshot]) -> Result<u32> {
    let d = snaps.first().ok_or_else(|| Error::Precondition("no snapshots".into()))?.d();
    for s in snaps {
        if s.d() != d {
            return Err(Error::DegreeMismatch { expected: d, found: s.d() });
        }
    }
    Ok(d)
}

pub(crate) fn pick_uniform<'a, T, R: RngCore + ?Sized>(items: &'a [T], rng: &mut R) -> &'a T {
    &items[crate::rng::uniform_index(rng, items.len())]
}

pub(crate) fn finish<R: RngCore + ?Sized>(
    method: Method,
    candidates: CandidateSet,
    mut diagnostics: Diagnostics,
    tree: &TreeContext,
    rng: &mut R,
) -> Estimate {
    let chosen = candidates.sample(tree, rng);
    diagnostics.insert("tie_broken".into(), Value::Bool(candidates.len() > 1));
    Estimate { method, candidates, chosen, diagnostics }
}
