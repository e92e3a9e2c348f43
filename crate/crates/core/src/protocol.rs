//! Spreading protocols and the hop-distance distribution they induce.
//!
//! A protocol is a rule `alpha(t, h)` defined for even `t >= 2` and
//! `1 <= h <= t/2`. It gives the probability that the virtual source, at hop
//! distance `h` from the true source at time `t`, keeps its position through
//! `t + 1`.

use std::fmt;
use std::io::Read;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Dense `alpha` table for even `t` in `2..=horizon`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaTable {
    horizon: u32,
    /// `rows[t/2 - 1][h - 1]`.
    rows: Vec<Vec<f64>>,
}

impl AlphaTable {
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// Reads CSV with header `t,h,alpha`. Every `(t, h)` with even
    /// `2 <= t <= max t` and `1 <= h <= t/2` must appear exactly once.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "h", "alpha"] {
            return Err(Error::Table(format!("header must be t,h,alpha, found {:?}", headers)));
        }
        let mut entries = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = line + 2;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let t: u32 = field(0).parse().map_err(|_| Error::Table(format!("row {row}: bad t")))?;
            let h: u32 = field(1).parse().map_err(|_| Error::Table(format!("row {row}: bad h")))?;
            let a: f64 = field(2).parse().map_err(|_| Error::Table(format!("row {row}: bad alpha")))?;
            if t < 2 || t % 2 == 1 {
                return Err(Error::Table(format!("row {row}: t = {t} must be even and >= 2")));
            }
            if h < 1 || h > t / 2 {
                return Err(Error::Table(format!("row {row}: h = {h} outside 1..={}", t / 2)));
            }
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Table(format!("row {row}: alpha = {a} outside [0, 1]")));
            }
            entries.push((t, h, a));
        }
        let horizon = entries.iter().map(|e| e.0).max().ok_or_else(|| Error::Table("no rows".into()))?;
        let mut rows: Vec<Vec<Option<f64>>> = (1..=horizon / 2).map(|k| vec![None; k as usize]).collect();
        for (t, h, a) in entries {
            let slot = &mut rows[(t / 2 - 1) as usize][(h - 1) as usize];
            if slot.is_some() {
                return Err(Error::Table(format!("duplicate entry for t = {t}, h = {h}")));
            }
            *slot = Some(a);
        }
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(k, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(j, a)| {
                        a.ok_or_else(|| Error::Table(format!("missing entry for t = {}, h = {}", 2 * k + 2, j + 1)))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AlphaTable { horizon, rows })
    }

    fn get(&self, t: u32, h: u32) -> Result<f64> {
        if t > self.horizon {
            return Err(Error::HorizonExceeded { t, horizon: self.horizon });
        }
        Ok(self.rows[(t / 2 - 1) as usize][(h - 1) as usize])
    }
}

/// The families of `alpha` rules.
#[derive(Clone, Debug, PartialEq)]
pub enum AlphaRule {
    /// `(t - 2h + 2) / (t + 2)`: the hop distance is uniform on `1..=t/2`.
    Uniform,
    /// Every infected vertex is equally likely to be the source.
    Perfect,
    /// Keeps the hop distance at `floor(gamma t / 2)` once `t > 2 / gamma`.
    LocalSpreading { gamma: f64 },
    /// The same `alpha` everywhere.
    Constant(f64),
    Table(AlphaTable),
}

/// A protocol on the `d`-regular tree.
#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    d: u32,
    rule: AlphaRule,
}

impl Protocol {
    pub fn new(d: u32, rule: AlphaRule) -> Result<Self> {
        if d < 3 {
            return Err(Error::InvalidDegree(d));
        }
        match &rule {
            AlphaRule::LocalSpreading { gamma } if !(*gamma > 0.0 && *gamma < 1.0) => {
                return domain(format!("local spreading needs 0 < gamma < 1, got {gamma}"))
            }
            AlphaRule::Constant(a) if !(0.0..=1.0).contains(a) => {
                return domain(format!("constant alpha {a} outside [0, 1]"))
            }
            _ => {}
        }
        Ok(Protocol { d, rule })
    }

    pub fn uniform(d: u32) -> Result<Self> {
        Self::new(d, AlphaRule::Uniform)
    }

    pub fn perfect(d: u32) -> Result<Self> {
        Self::new(d, AlphaRule::Perfect)
    }

    pub fn local_spreading(d: u32, gamma: f64) -> Result<Self> {
        Self::new(d, AlphaRule::LocalSpreading { gamma })
    }

    pub fn constant(d: u32, alpha: f64) -> Result<Self> {
        Self::new(d, AlphaRule::Constant(alpha))
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn rule(&self) -> &AlphaRule {
        &self.rule
    }

    /// Last even time for which `alpha` is defined, if bounded.
    pub fn horizon(&self) -> Option<u32> {
        match &self.rule {
            AlphaRule::Table(tab) => Some(tab.horizon),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match &self.rule {
            AlphaRule::Uniform => "uniform".into(),
            AlphaRule::Perfect => "perfect".into(),
            AlphaRule::LocalSpreading { gamma } => format!("local(gamma={gamma})"),
            AlphaRule::Constant(a) => format!("constant(alpha={a})"),
            AlphaRule::Table(tab) => format!("table(horizon={})", tab.horizon),
        }
    }

    fn check_domain(t: u32, h: u32) -> Result<()> {
        if t < 2 || t % 2 == 1 {
            return domain(format!("alpha is defined only for even t >= 2, got t = {t}"));
        }
        if h < 1 || h > t / 2 {
            return domain(format!("alpha({t}, h) needs 1 <= h <= {}, got h = {h}", t / 2));
        }
        Ok(())
    }

    /// Stay probability at even time `t` and hop distance `h`.
    pub fn alpha(&self, t: u32, h: u32) -> Result<f64> {
        Self::check_domain(t, h)?;
        Ok(match &self.rule {
            AlphaRule::Uniform => (t - 2 * h + 2) as f64 / (t + 2) as f64,
            AlphaRule::Perfect => {
                // ((d-1)^(n-h) - 1) / ((d-1)^n - 1) with n = t/2 + 1, written to avoid overflow.
                let b = (self.d - 1) as f64;
                let n = (t / 2 + 1) as i32;
                let m = n - h as i32;
                b.powi(-(h as i32)) * (-(b.powi(-m)) + 1.0) / (-(b.powi(-n)) + 1.0)
            }
            AlphaRule::LocalSpreading { gamma } => local_stay(*gamma, t),
            AlphaRule::Constant(a) => *a,
            AlphaRule::Table(tab) => tab.get(t, h)?,
        })
    }

    /// [`Self::alpha`] as an exact rational. Float-backed rules convert their
    /// stored binary value exactly.
    pub fn alpha_exact(&self, t: u32, h: u32) -> Result<BigRational> {
        Self::check_domain(t, h)?;
        Ok(match &self.rule {
            AlphaRule::Uniform => ratio((t - 2 * h + 2) as i64, (t + 2) as i64),
            AlphaRule::Perfect => {
                let b = BigInt::from(self.d - 1);
                let one = BigInt::one();
                let num = num_traits::pow(b.clone(), (t / 2 + 1 - h) as usize) - &one;
                let den = num_traits::pow(b, (t / 2 + 1) as usize) - &one;
                BigRational::new(num, den)
            }
            AlphaRule::LocalSpreading { gamma } => {
                if local_stay(*gamma, t) == 1.0 {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }
            AlphaRule::Constant(a) => exact_f64(*a),
            AlphaRule::Table(tab) => exact_f64(tab.get(t, h)?),
        })
    }

    /// The full table for even `t <= horizon` as CSV with header `t,h,alpha`.
    pub fn to_csv(&self, horizon: u32) -> Result<String> {
        let mut out = String::from("t,h,alpha\n");
        for t in (2..=horizon).step_by(2) {
            for h in 1..=t / 2 {
                out.push_str(&format!("{t},{h},{}\n", self.alpha(t, h)?));
            }
        }
        Ok(out)
    }
}

pub(crate) fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub(crate) fn exact_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite alpha")
}

/// `floor(gamma * t / 2)` evaluated exactly on the binary value of `gamma`.
pub fn floor_half_gamma_t(gamma: f64, t: u32) -> u32 {
    let v = exact_f64(gamma) * ratio(t as i64, 2);
    v.floor().to_integer().to_u32().expect("non-negative")
}

/// Local-spreading stay decision: stay through the start-up phase
/// `gamma t <= 2`, then move exactly when `floor(gamma t / 2)` is about to
/// increase, so that the hop distance at even `t > 2 / gamma` equals
/// `floor(gamma t / 2)`.
fn local_stay(gamma: f64, t: u32) -> f64 {
    let startup = exact_f64(gamma) * ratio(t as i64, 1) <= ratio(2, 1);
    if startup || floor_half_gamma_t(gamma, t) == floor_half_gamma_t(gamma, t + 2) {
        1.0
    } else {
        0.0
    }
}

/// Serializable description of a protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProtocolSpec {
    Uniform,
    Perfect,
    Local { gamma: f64 },
    Constant { alpha: f64 },
    Table { path: String },
}

impl ProtocolSpec {
    pub fn build(&self, d: u32) -> Result<Protocol> {
        match self {
            ProtocolSpec::Uniform => Protocol::uniform(d),
            ProtocolSpec::Perfect => Protocol::perfect(d),
            ProtocolSpec::Local { gamma } => Protocol::local_spreading(d, *gamma),
            ProtocolSpec::Constant { alpha } => Protocol::constant(d, *alpha),
            ProtocolSpec::Table { path } => load_protocol_table(path, d),
        }
    }
}

/// Reads a table-backed protocol from a CSV file.
pub fn load_protocol_table(path: impl AsRef<std::path::Path>, d: u32) -> Result<Protocol> {
    let f = std::fs::File::open(path)?;
    Protocol::new(d, AlphaRule::Table(AlphaTable::from_csv(f)?))
}

/// Arithmetic the hop recurrence needs.
pub trait ProbValue: Clone + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {}

impl<T> ProbValue for T where T: Clone + Zero + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T> {}

/// Law of the hop distance `h_t` for even `t` in `2..=horizon`.
#[derive(Clone, Debug, PartialEq)]
pub struct HopTable<T> {
    d: u32,
    protocol: String,
    horizon: u32,
    /// `rows[t/2 - 1][h - 1] = P(h_t = h)`.
    rows: Vec<Vec<T>>,
}

pub type HopDistribution = HopTable<f64>;
pub type ExactHopDistribution = HopTable<BigRational>;

impl<T: ProbValue> HopTable<T> {
    fn build(p: &Protocol, horizon: u32, alpha: impl Fn(u32, u32) -> Result<T>) -> Result<Self> {
        if horizon < 2 || horizon % 2 == 1 {
            return domain(format!("hop distribution horizon must be even and >= 2, got {horizon}"));
        }
        let mut rows: Vec<Vec<T>> = vec![vec![T::one()]];
        for t in (2..horizon).step_by(2) {
            let prev = rows.last().expect("non-empty");
            let stay: Vec<T> = (1..=t / 2).map(|h| alpha(t, h)).collect::<Result<_>>()?;
            let mut next = vec![T::zero(); (t / 2 + 1) as usize];
            for (i, p) in prev.iter().enumerate() {
                next[i] = next[i].clone() + stay[i].clone() * p.clone();
                next[i + 1] = next[i + 1].clone() + (T::one() - stay[i].clone()) * p.clone();
            }
            rows.push(next);
        }
        Ok(HopTable { d: p.d(), protocol: p.name(), horizon, rows })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn protocol(&self) -> &str {
        &self.protocol
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn covers(&self, t: u32) -> bool {
        t >= 2 && t % 2 == 0 && t <= self.horizon
    }

    /// `P(h_t = h)`, zero outside `1..=t/2`.
    pub fn p(&self, t: u32, h: u32) -> Result<T> {
        if !self.covers(t) {
            return domain(format!("hop distribution covers even t in 2..={}, asked t = {t}", self.horizon));
        }
        if h < 1 || h > t / 2 {
            return Ok(T::zero());
        }
        Ok(self.rows[(t / 2 - 1) as usize][(h - 1) as usize].clone())
    }

    /// `P(h_t = h)` for `h = 1..=t/2`.
    pub fn row(&self, t: u32) -> Result<&[T]> {
        if !self.covers(t) {
            return domain(format!("hop distribution covers even t in 2..={}, asked t = {t}", self.horizon));
        }
        Ok(&self.rows[(t / 2 - 1) as usize])
    }
}

impl<T: ProbValue + fmt::Display> HopTable<T> {
    /// CSV with header `t,h,p`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,h,p\n");
        for (k, row) in self.rows.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", 2 * k + 2, j + 1, p));
            }
        }
        out
    }
}

impl ExactHopDistribution {
    pub fn to_f64(&self) -> HopDistribution {
        HopTable {
            d: self.d,
            protocol: self.protocol.clone(),
            horizon: self.horizon,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect())
                .collect(),
        }
    }
}

/// Hop distribution up to even `horizon`, in floating point.
pub fn hop_distribution(p: &Protocol, horizon: u32) -> Result<HopDistribution> {
    HopTable::build(p, horizon, |t, h| p.alpha(t, h))
}

/// Hop distribution up to even `horizon`, in exact rationals.
pub fn hop_distribution_exact(p: &Protocol, horizon: u32) -> Result<ExactHopDistribution> {
    HopTable::build(p, horizon, |t, h| p.alpha_exact(t, h))
}

/// Probability that the virtual source does not move between `t - 1` and `t`, for odd `t >= 3`.
pub fn stay_probability_at(p: &Protocol, t: u32, hop: &HopDistribution) -> Result<f64> {
    check_odd(t)?;
    let mut s = 0.0;
    for (i, q) in hop.row(t - 1)?.iter().enumerate() {
        s += q * p.alpha(t - 1, i as u32 + 1)?;
    }
    Ok(s)
}

/// Exact form of [`stay_probability_at`].
pub fn stay_probability_exact(p: &Protocol, t: u32, hop: &ExactHopDistribution) -> Result<BigRational> {
    check_odd(t)?;
    let mut s = BigRational::zero();
    for (i, q) in hop.row(t - 1)?.iter().enumerate() {
        s += q * p.alpha_exact(t - 1, i as u32 + 1)?;
    }
    Ok(s)
}

fn check_odd(t: u32) -> Result<()> {
    if t < 3 || t % 2 == 0 {
        return domain(format!("stay probability needs odd t >= 3, got {t}"));
    }
    Ok(())
}
