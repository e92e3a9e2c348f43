//! Named non-Monte-Carlo verification suites.

use adl_core::closed_form::{
    even_even_parts, even_odd_mle_rational, odd_odd_mle_upper_exact, path_sum, path_sum_closed,
};
use adl_core::estimators::{EstimatorSpec, DEFAULT_SEARCH_DEPTH};
use adl_core::oracle::{exact_success, DEFAULT_OUTCOME_CAP};
use adl_core::protocol::{hop_distribution_exact, stay_probability_exact, Protocol};
use adl_core::diffusion::infected_count_even;
use num_rational::BigRational;

pub const SUITES: [&str; 5] = ["identities", "oracle-even-even", "oracle-even-odd", "oracle-odd-odd", "all"];

/// One row of the pass/fail table.
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn q(n: u64, d: u64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn check(name: String, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn identities() -> anyhow::Result<Vec<Check>> {
    let mut out = Vec::new();
    for d in 3..=5u32 {
        let u = Protocol::uniform(d)?;
        let hop = hop_distribution_exact(&u, 30)?;
        let ok = (2..=30).step_by(2).all(|t| (1..=t / 2).all(|h| hop.p(t, h).ok() == Some(q(2, t as u64))));
        out.push(check(format!("uniform p(t,h) = 2/t, d={d}, t<=30"), ok, String::new()));

        let stay = (5..=29).step_by(2).all(|t| stay_probability_exact(&u, t, &hop).ok() == Some(q(1, 2)));
        out.push(check(format!("uniform odd-time stay = 1/2, d={d}, t<=29"), stay, String::new()));

        let p = Protocol::perfect(d)?;
        let hop = hop_distribution_exact(&p, 20)?;
        let ok = (2..=20).step_by(2).all(|t| {
            let n1 = (infected_count_even(d, t) - 1) as u64;
            (1..=t / 2).all(|h| {
                let shell = d as u64 * (d as u64 - 1).pow(h - 1);
                hop.p(t, h).ok() == Some(q(shell, n1))
            })
        });
        out.push(check(format!("perfect p(t,h) = d(d-1)^(h-1)/(N_t-1), d={d}, t<=20"), ok, String::new()));
    }
    for t in [1u32, 2, 5, 10, 20, 30] {
        for s in [1u32, t / 2 + 1, t] {
            let got = path_sum(s, t)?;
            let want = path_sum_closed(s, t);
            out.push(check(format!("sum 1/(1+min(...)) = s+t-1, s={s} t={t}"), got == want, format!("{got}")));
        }
    }
    Ok(out)
}

fn mle() -> EstimatorSpec {
    EstimatorSpec::GenericMle { search_depth: DEFAULT_SEARCH_DEPTH }
}

fn oracle_pair(d: u32, t1: u32, t2: u32) -> anyhow::Result<Vec<Check>> {
    let u = Protocol::uniform(d)?;
    let mut out = Vec::new();
    for (label, spec) in [("generic_mle", mle()), ("uniform_mle_cases", EstimatorSpec::UniformMleCases)] {
        let got = exact_success(&spec, &u, &[t1, t2], DEFAULT_OUTCOME_CAP)?;
        let name = format!("oracle {label} d={d} t=({t1},{t2})");
        let row = match (t1 % 2, t2 % 2) {
            (0, 0) => {
                let want = even_even_parts(d, t1, t2)?.total;
                check(name + " = closed form", got == want, format!("{got} vs {want}"))
            }
            (0, 1) => {
                let want = even_odd_mle_rational(d, t1, t2)?;
                check(name + " = closed form", got == want, format!("{got} vs {want}"))
            }
            _ => {
                let bound = odd_odd_mle_upper_exact(d, t1, t2)?;
                check(name + " <= bound", got <= bound, format!("{got} vs {bound}"))
            }
        };
        out.push(row);
    }
    Ok(out)
}

fn oracle_even_even() -> anyhow::Result<Vec<Check>> {
    let u = Protocol::uniform(3)?;
    let got = exact_success(&mle(), &u, &[4, 4], DEFAULT_OUTCOME_CAP)?;
    let mut out = vec![check("oracle d=3 t=(4,4) = 41/72".into(), got == q(41, 72), format!("{got}"))];
    for (d, t1, t2) in [(3, 4, 4), (3, 4, 6), (3, 6, 6), (4, 4, 4), (4, 4, 6)] {
        out.extend(oracle_pair(d, t1, t2)?);
    }
    Ok(out)
}

fn oracle_even_odd() -> anyhow::Result<Vec<Check>> {
    let mut out = Vec::new();
    for (d, t1, t2) in [(3, 4, 5), (3, 6, 5), (3, 4, 7), (4, 4, 5)] {
        out.extend(oracle_pair(d, t1, t2)?);
    }
    Ok(out)
}

fn oracle_odd_odd() -> anyhow::Result<Vec<Check>> {
    let mut out = Vec::new();
    for (d, t1, t2) in [(3, 5, 5), (3, 5, 7), (4, 5, 5)] {
        out.extend(oracle_pair(d, t1, t2)?);
    }
    Ok(out)
}

/// Runs a suite by name; unknown names list the valid ones.
pub fn run_suite(name: &str) -> anyhow::Result<Vec<Check>> {
    match name {
        "identities" => identities(),
        "oracle-even-even" => oracle_even_even(),
        "oracle-even-odd" => oracle_even_odd(),
        "oracle-odd-odd" => oracle_odd_odd(),
        "all" => {
            let mut out = identities()?;
            out.extend(oracle_even_even()?);
            out.extend(oracle_even_odd()?);
            out.extend(oracle_odd_odd()?);
            Ok(out)
        }
        other => anyhow::bail!("unknown suite '{other}'; valid suites: {}", SUITES.join(", ")),
    }
}
