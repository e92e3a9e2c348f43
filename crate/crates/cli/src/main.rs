//! `adl`: simulate adaptive diffusion, compute hop laws, run estimators and
//! experiments from the command line.
//!
//! Exit codes: 0 on success or a passing run, 1 when a verdict fails, 2 on
//! usage or input errors.

mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adl_core::diffusion::{simulate, snapshot_at, Snapshot};
use adl_core::estimators::{estimate, EstimatorSpec, Model, DEFAULT_SEARCH_DEPTH};
use adl_core::experiments::{run_experiment, ExperimentConfig, Verdict};
use adl_core::protocol::{hop_distribution, hop_distribution_exact, Protocol, ProtocolSpec};
use adl_core::rng::seeded;
use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "adl", version, about = "Adaptive diffusion simulation and source estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolKind {
    Uniform,
    Perfect,
    Local,
    Constant,
    Table,
}

#[derive(Args)]
struct ProtocolArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    protocol: ProtocolKind,
    /// Spreading exponent for `--protocol local`, in (0, 1).
    #[arg(long)]
    gamma: Option<f64>,
    /// Stay probability for `--protocol constant`.
    #[arg(long)]
    alpha: Option<f64>,
    /// CSV file `t,h,alpha` for `--protocol table`.
    #[arg(long)]
    table: Option<PathBuf>,
}

impl ProtocolArgs {
    fn spec(&self) -> anyhow::Result<ProtocolSpec> {
        Ok(match self.protocol {
            ProtocolKind::Uniform => ProtocolSpec::Uniform,
            ProtocolKind::Perfect => ProtocolSpec::Perfect,
            ProtocolKind::Local => ProtocolSpec::Local { gamma: self.gamma.context("--protocol local needs --gamma")? },
            ProtocolKind::Constant => {
                ProtocolSpec::Constant { alpha: self.alpha.context("--protocol constant needs --alpha")? }
            }
            ProtocolKind::Table => ProtocolSpec::Table {
                path: self.table.as_ref().context("--protocol table needs --table")?.display().to_string(),
            },
        })
    }

    fn build(&self, d: u32) -> anyhow::Result<Protocol> {
        Ok(self.spec()?.build(d)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum MethodArg {
    #[value(alias = "single")]
    SingleMle,
    #[value(alias = "path")]
    TwoObsPath,
    #[value(alias = "intersection")]
    ThreeObsIntersection,
    #[value(alias = "subtree")]
    KObsSubtree,
    #[value(alias = "mle")]
    GenericMle,
    #[value(alias = "cases")]
    UniformMleCases,
}

#[derive(Subcommand)]
enum Command {
    /// Run the virtual-source chain and print the trajectory as JSON.
    Simulate {
        #[arg(long)]
        d: u32,
        #[command(flatten)]
        protocol: ProtocolArgs,
        /// Last time step.
        #[arg(short = 't', long = "time")]
        t: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the snapshot at time `t` instead of the trajectory.
        #[arg(long)]
        snapshot: bool,
    },
    /// Print the hop-distance law as CSV `t,h,p`.
    Hopdist {
        #[arg(long)]
        d: u32,
        #[command(flatten)]
        protocol: ProtocolArgs,
        /// Even horizon.
        #[arg(short = 'T', long = "horizon")]
        horizon: u32,
        /// Exact rationals instead of floats.
        #[arg(long)]
        exact: bool,
    },
    /// Run an estimator on a JSON array of snapshots and print the estimate.
    Estimate {
        #[arg(long)]
        snapshots: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Layers searched around the observations by `generic_mle`.
        #[arg(long, default_value_t = DEFAULT_SEARCH_DEPTH)]
        search_depth: u32,
    },
    /// Run an experiment config; JSON report to `--out` (CSV alongside) or stdout.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to all cores.
        #[arg(long, env = "ADL_THREADS")]
        threads: Option<usize>,
    },
    /// Run a named exact verification suite and print a pass/fail table.
    Verify {
        #[arg(long)]
        suite: String,
    },
    /// Print the stay probabilities of a protocol as CSV `t,h,alpha`.
    ProtocolDump {
        #[arg(long)]
        d: u32,
        #[command(flatten)]
        protocol: ProtocolArgs,
        /// Largest even time to list.
        #[arg(short = 'T', long = "horizon")]
        horizon: u32,
    },
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn method_spec(m: MethodArg, search_depth: u32) -> EstimatorSpec {
    match m {
        MethodArg::SingleMle => EstimatorSpec::SingleMle,
        MethodArg::TwoObsPath => EstimatorSpec::TwoObsPath,
        MethodArg::ThreeObsIntersection => EstimatorSpec::ThreeObsIntersection,
        MethodArg::KObsSubtree => EstimatorSpec::KObsSubtree,
        MethodArg::GenericMle => EstimatorSpec::GenericMle { search_depth },
        MethodArg::UniformMleCases => EstimatorSpec::UniformMleCases,
    }
}

fn read_config(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Returns whether the command passed.
fn run(cmd: Command) -> anyhow::Result<bool> {
    match cmd {
        Command::Simulate { d, protocol, t, seed, snapshot } => {
            let p = protocol.build(d)?;
            let tr = simulate(&p, t, seed)?;
            if snapshot {
                print_json(&snapshot_at(&tr, t)?)?;
            } else {
                print_json(&tr)?;
            }
        }
        Command::Hopdist { d, protocol, horizon, exact } => {
            let p = protocol.build(d)?;
            if exact {
                print!("{}", hop_distribution_exact(&p, horizon)?.to_csv());
            } else {
                print!("{}", hop_distribution(&p, horizon)?.to_csv());
            }
        }
        Command::Estimate { snapshots, method, protocol, seed, search_depth } => {
            let text = std::fs::read_to_string(&snapshots)
                .with_context(|| format!("reading {}", snapshots.display()))?;
            let snaps: Vec<Snapshot> = serde_json::from_str(&text).context("parsing snapshots")?;
            let Some(first) = snaps.first() else { bail!("snapshot file is empty") };
            let spec = method_spec(method, search_depth);
            let (p, hop);
            let model = if spec.needs_model() {
                let max_t = snaps.iter().map(|s| s.t()).max().unwrap_or(2);
                p = protocol.build(first.d())?;
                hop = hop_distribution(&p, (max_t + max_t % 2).max(2))?;
                Some(Model { protocol: &p, hop: &hop })
            } else {
                None
            };
            print_json(&estimate(&spec, &snaps, model, &mut seeded(seed))?)?;
        }
        Command::Experiment { config, out, threads } => {
            let cfg = read_config(&config)?;
            let report = run_experiment(&cfg, threads)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, serde_json::to_string_pretty(&report)?)
                        .with_context(|| format!("writing {}", path.display()))?;
                    let csv = path.with_extension("csv");
                    std::fs::write(&csv, report.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
                    eprintln!("{}: {:?}", report.name, report.verdict);
                }
                None => print_json(&report)?,
            }
            return Ok(report.verdict != Verdict::Fail);
        }
        Command::Verify { suite } => {
            let checks = verify::run_suite(&suite)?;
            let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
            for c in &checks {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                println!("{mark}  {:width$}  {}", c.name, c.detail);
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} checks, {failed} failed", checks.len());
            return Ok(failed == 0);
        }
        Command::ProtocolDump { d, protocol, horizon } => {
            print!("{}", protocol.build(d)?.to_csv(horizon)?);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
