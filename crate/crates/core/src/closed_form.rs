//! Analytic success probabilities and bounds that experiments are checked against.
//!
//! Rational-valued formulas also come in exact form so that the floating
//! versions and the exhaustive oracle can be cross-checked bit for bit.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::diffusion::infected_count_even;
use crate::error::{domain, precondition, Result};
use crate::protocol::ratio;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Exact,
    LowerBound,
    UpperBound,
}

/// A value an empirical frequency is compared with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub kind: TargetKind,
    /// Clipped to `[0, 1]`.
    pub value: f64,
    pub raw: f64,
    /// The bound carries no information after clipping.
    pub vacuous: bool,
    pub label: String,
}

impl Target {
    pub fn new(kind: TargetKind, raw: f64, label: impl Into<String>) -> Self {
        let value = raw.clamp(0.0, 1.0);
        let vacuous = match kind {
            TargetKind::Exact => false,
            TargetKind::LowerBound => raw <= 0.0,
            TargetKind::UpperBound => raw >= 1.0,
        };
        Target { kind, value, raw, vacuous, label: label.into() }
    }
}

fn check_d(d: u32) -> Result<()> {
    if d < 3 {
        return domain(format!("degree must be at least 3, got {d}"));
    }
    Ok(())
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn f(x: &BigRational) -> f64 {
    x.to_f64().expect("finite")
}

/// `(d-1)/d * 2 / min(t1, t2)`: no estimator beats this for every protocol.
pub fn detection_lower_bound_exact(d: u32, t1: u32, t2: u32) -> Result<BigRational> {
    check_d(d)?;
    if t1.min(t2) < 1 {
        return domain("times must be positive");
    }
    Ok(ratio(d as i64 - 1, d as i64) * ratio(2, t1.min(t2) as i64))
}

pub fn detection_lower_bound(d: u32, t1: u32, t2: u32) -> Result<Target> {
    let v = detection_lower_bound_exact(d, t1, t2)?;
    Ok(Target::new(TargetKind::LowerBound, f(&v), "two-snapshot lower bound"))
}

/// `(d-1)/d * 7 / min(t1, t2)`: the uniform protocol's two-snapshot MLE stays below this.
pub fn uniform_two_snapshot_upper_exact(d: u32, t1: u32, t2: u32) -> Result<BigRational> {
    check_d(d)?;
    if t1.min(t2) < 1 {
        return domain("times must be positive");
    }
    Ok(ratio(d as i64 - 1, d as i64) * ratio(7, t1.min(t2) as i64))
}

pub fn uniform_two_snapshot_upper(d: u32, t1: u32, t2: u32) -> Result<Target> {
    let v = uniform_two_snapshot_upper_exact(d, t1, t2)?;
    Ok(Target::new(TargetKind::UpperBound, f(&v), "two-snapshot MLE upper bound, uniform protocol"))
}

/// Two-snapshot MLE success under the uniform protocol at even times, split
/// by whether the virtual sources sit in different subtrees of the source.
#[derive(Clone, Debug, PartialEq)]
pub struct EvenEvenParts {
    /// Success given different subtrees: `(2 t1 + 2 t2 - 4) / (t1 t2)`.
    pub apart: BigRational,
    /// Success given the same subtree: `4 / (t1 t2) * (1/d + 1/(d-1))`.
    pub together: BigRational,
    pub total: BigRational,
}

pub fn even_even_parts(d: u32, t1: u32, t2: u32) -> Result<EvenEvenParts> {
    check_d(d)?;
    if t1 < 2 || t2 < 2 || t1 % 2 == 1 || t2 % 2 == 1 {
        return domain("even-even formula needs even t1, t2 >= 2");
    }
    let (d, a, b) = (d as i64, t1 as i64, t2 as i64);
    let apart = ratio(2 * a + 2 * b - 4, a * b);
    let together = ratio(4, a * b) * (ratio(1, d) + ratio(1, d - 1));
    let total = ratio(d - 1, d) * apart.clone() + ratio(1, d) * together.clone();
    Ok(EvenEvenParts { apart, together, total })
}

pub fn even_even_mle_exact(d: u32, t1: u32, t2: u32) -> Result<Target> {
    let p = even_even_parts(d, t1, t2)?;
    Ok(Target::new(TargetKind::Exact, f(&p.total), "two-snapshot MLE, uniform protocol, even times"))
}

/// Exact two-snapshot MLE success under the uniform protocol with `t1` even and `t2` odd.
pub fn even_odd_mle_rational(d: u32, t1: u32, t2: u32) -> Result<BigRational> {
    check_d(d)?;
    if t1 < 2 || t1 % 2 == 1 || t2 < 3 || t2 % 2 == 0 {
        return domain("even-odd formula needs even t1 >= 2 and odd t2 >= 3");
    }
    let (d, a, b) = (d as i64, t1 as i64, t2 as i64);
    let apart = ratio(2, a) + ratio(4, b + 1) - ratio(8, a * (b + 1));
    let together = ratio(4, a * (b + 1)) * (ratio(1, d) + ratio(1, d - 1) + ratio(6, (b - 1) * (d - 1)));
    Ok(ratio(d - 1, d) * apart + ratio(1, d) * together)
}

pub fn even_odd_mle_exact(d: u32, t1: u32, t2: u32) -> Result<Target> {
    let v = even_odd_mle_rational(d, t1, t2)?;
    Ok(Target::new(TargetKind::Exact, f(&v), "two-snapshot MLE, uniform protocol, even and odd times"))
}

/// `(d-1)/d * (20/3) / (min(t1, t2) + 1)`, for odd times.
pub fn odd_odd_mle_upper_exact(d: u32, t1: u32, t2: u32) -> Result<BigRational> {
    check_d(d)?;
    if t1 % 2 == 0 || t2 % 2 == 0 {
        return domain("odd-odd bound needs odd times");
    }
    Ok(ratio(d as i64 - 1, d as i64) * ratio(20, 3 * (t1.min(t2) as i64 + 1)))
}

pub fn odd_odd_mle_upper(d: u32, t1: u32, t2: u32) -> Result<Target> {
    let v = odd_odd_mle_upper_exact(d, t1, t2)?;
    Ok(Target::new(TargetKind::UpperBound, f(&v), "two-snapshot MLE upper bound, uniform protocol, odd times"))
}

/// `(d-1)(d-2)/d^2`: three-snapshot path intersection succeeds at least this often.
pub fn three_snapshot_lower_exact(d: u32) -> Result<BigRational> {
    check_d(d)?;
    let d = d as i64;
    Ok(ratio((d - 1) * (d - 2), d * d))
}

pub fn three_snapshot_lower(d: u32) -> Result<Target> {
    let v = three_snapshot_lower_exact(d)?;
    Ok(Target::new(TargetKind::LowerBound, f(&v), "three-snapshot intersection lower bound"))
}

/// `1 - d exp(-(d-2)^2 k / (2 d^2))`, clipped at 0.
pub fn k_snapshot_lower(d: u32, k: u32) -> Result<Target> {
    check_d(d)?;
    let df = d as f64;
    let raw = 1.0 - df * (-(df - 2.0).powi(2) * k as f64 / (2.0 * df * df)).exp();
    Ok(Target::new(TargetKind::LowerBound, raw, "k-snapshot subtree lower bound"))
}

/// `(1-gamma) t/2 + log(C t)/log(d-1) + 2`: expected local radius under any
/// protocol whose single-snapshot MLE succeeds with probability at most `C / N_t^gamma`.
pub fn radius_upper_bound(d: u32, t: u32, gamma: f64, c: f64) -> Result<f64> {
    check_d(d)?;
    if !(gamma > 0.0 && gamma < 1.0) || c <= 0.0 || t == 0 {
        return domain("radius bound needs 0 < gamma < 1, C > 0, t > 0");
    }
    Ok((1.0 - gamma) * t as f64 / 2.0 + (c * t as f64).ln() / ((d - 1) as f64).ln() + 2.0)
}

/// Guarantees of the local-spreading protocol at even `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalSpreadingTargets {
    /// Lower bound on `E[R_t]`; exact in the start-up phase `t <= 2/gamma`.
    pub radius_lower: f64,
    pub radius_exact: bool,
    /// `2(d-1) / N_t^gamma`.
    pub detection_upper: f64,
}

pub fn local_spreading_targets(d: u32, t: u32, gamma: f64) -> Result<LocalSpreadingTargets> {
    check_d(d)?;
    if t < 2 || t % 2 == 1 || !(gamma > 0.0 && gamma < 1.0) {
        return domain("local-spreading targets need even t >= 2 and 0 < gamma < 1");
    }
    let startup = gamma * t as f64 <= 2.0;
    let radius_lower = if startup { t as f64 / 2.0 - 1.0 } else { (1.0 - gamma) * t as f64 / 2.0 };
    let n = infected_count_even(d, t) as f64;
    Ok(LocalSpreadingTargets {
        radius_lower,
        radius_exact: startup,
        detection_upper: 2.0 * (d - 1) as f64 / n.powf(gamma),
    })
}

/// `sum_{j<=s} sum_{l<=t} 1 / (1 + min(j-1, t-l) + min(l-1, s-j))`, which equals `s + t - 1`.
pub fn path_sum(s: u32, t: u32) -> Result<BigRational> {
    if s < 1 || t < 1 {
        return precondition("path sum needs s, t >= 1");
    }
    let mut acc = BigRational::zero();
    for j in 1..=s as i64 {
        for l in 1..=t as i64 {
            let den = 1 + (j - 1).min(t as i64 - l) + (l - 1).min(s as i64 - j);
            acc += ratio(1, den);
        }
    }
    Ok(acc)
}

/// `s + t - 1`.
pub fn path_sum_closed(s: u32, t: u32) -> BigRational {
    int(s as i64 + t as i64 - 1)
}

/// `1 / (N_t - 1)`: single-snapshot detection under the perfect protocol at even `t`.
pub fn perfect_single_detection(d: u32, t: u32) -> Result<BigRational> {
    check_d(d)?;
    if t < 2 || t % 2 == 1 {
        return domain("needs even t >= 2");
    }
    let n = infected_count_even(d, t);
    Ok(BigRational::new(BigInt::one(), BigInt::from(n - 1)))
}
