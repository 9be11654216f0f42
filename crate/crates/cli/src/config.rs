//! Flag parsing and resolution into a fully specified [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jcm_rg::branch_id::{BranchIdRequest, Measurement};
use jcm_rg::continuation::default_e_max;
use jcm_rg::coupling::DEFAULT_N_MAX;
use jcm_rg::operators::OperatorName;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable naming the directory for outputs without `--output`.
pub const OUTPUT_DIR_VAR: &str = "JCM_RG_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "jcm-rg",
    version,
    about = "Exact evolution, coupling flow and effective S-matrix flow of the Jaynes-Cummings model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Probability spectra P_j of every coupling branch.
    Spectrum(SpectrumArgs),
    /// Exact branch beta-functions and the 1-loop one on a g_r grid.
    Beta(BetaArgs),
    /// Coupling trajectory through turning points, with the c-function.
    Flow(FlowArgs),
    /// Solution branches e_k(k) of the effective renormalisation condition.
    EffectiveFlow(EffectiveFlowArgs),
    /// Birth points of solution pairs of the effective condition.
    Bifurcations(BifurcationArgs),
    /// Branches consistent with measured probabilities.
    BranchId(BranchIdArgs),
    /// Matrix of a model operator on the truncated basis.
    DumpOperator(DumpOperatorArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output file; defaults to <subcommand>.<format> in $JCM_RG_OUTPUT_DIR or the working directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Observed probability P_0 fixing the renormalised coupling.
    #[arg(long)]
    pub p_obs: Option<f64>,
    #[arg(long)]
    pub n_max: Option<u32>,
    #[arg(long)]
    pub j_max: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BetaArgs {
    #[arg(long)]
    pub n_max: Option<u32>,
    /// Number of g_r values on [-1, 1].
    #[arg(long)]
    pub points: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    /// Coupling phase at t = 0, so that g_r(t) = sin(g0 e^t).
    #[arg(long)]
    pub g0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t1: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also write the 1-loop trajectory through g_r(t0).
    #[arg(long)]
    pub one_loop: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EffectiveFlowArgs {
    #[arg(long)]
    pub g_r: Option<f64>,
    #[arg(long)]
    pub k_min: Option<f64>,
    #[arg(long)]
    pub k_max: Option<f64>,
    /// Largest IR branch to cover; sets e_max = (n_max + 1)π.
    #[arg(long)]
    pub n_max: Option<u32>,
    #[arg(long)]
    pub e_max: Option<f64>,
    /// Number of log-spaced k values.
    #[arg(long)]
    pub points: Option<usize>,
    /// Also write the condition's right-hand side on a (k, e) grid.
    #[arg(long)]
    pub contours: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BifurcationArgs {
    #[arg(long)]
    pub g_r: Option<f64>,
    #[arg(long)]
    pub k_min: Option<f64>,
    #[arg(long)]
    pub k_max: Option<f64>,
    #[arg(long)]
    pub n_max: Option<u32>,
    #[arg(long)]
    pub e_max: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BranchIdArgs {
    /// JSON request {measurements: [{j, p, tol}], n_max}.
    #[arg(long, conflicts_with_all = ["p_obs", "j", "p_j"])]
    pub input: Option<PathBuf>,
    /// Measured P_0.
    #[arg(long)]
    pub p_obs: Option<f64>,
    /// Photon index of the second measurement.
    #[arg(long)]
    pub j: Option<u64>,
    /// Measured P_j.
    #[arg(long)]
    pub p_j: Option<f64>,
    /// Tolerance applied to both measurements.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub n_max: Option<u32>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DumpOperatorArgs {
    /// One of a, a_dagger, number, tau_plus, tau_minus, tau_3, V, H0.
    #[arg(long)]
    pub operator: Option<String>,
    #[arg(long)]
    pub lambda_cutoff: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

/// A subcommand with every parameter resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Job {
    Spectrum {
        p_obs: f64,
        n_max: u32,
        j_max: usize,
    },
    Beta {
        n_max: u32,
        points: usize,
    },
    Flow {
        g0: f64,
        t0: f64,
        t1: f64,
        tol: f64,
        one_loop: bool,
    },
    EffectiveFlow {
        g_r: f64,
        k_min: f64,
        k_max: f64,
        e_max: f64,
        points: usize,
        contours: bool,
    },
    Bifurcations {
        g_r: f64,
        k_min: f64,
        k_max: f64,
        e_max: f64,
    },
    BranchId {
        measurements: Vec<Measurement>,
        n_max: u32,
    },
    DumpOperator {
        operator: OperatorName,
        lambda_cutoff: usize,
        delta: f64,
        omega: f64,
    },
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::Spectrum { .. } => "spectrum",
            Job::Beta { .. } => "beta",
            Job::Flow { .. } => "flow",
            Job::EffectiveFlow { .. } => "effective-flow",
            Job::Bifurcations { .. } => "bifurcations",
            Job::BranchId { .. } => "branch-id",
            Job::DumpOperator { .. } => "dump-operator",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub job: Job,
    pub output: PathBuf,
    pub format: Format,
}

fn required<T>(value: Option<T>, flag: &'static str) -> Result<T, CliError> {
    value.ok_or(CliError::Flag {
        flag,
        constraint: "required".into(),
    })
}

fn check(ok: bool, flag: &'static str, constraint: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Flag {
            flag,
            constraint: constraint.into(),
        })
    }
}

fn probability(value: f64, flag: &'static str) -> Result<f64, CliError> {
    check((0.0..=1.0).contains(&value), flag, "must lie in [0, 1]")?;
    Ok(value)
}

fn positive(value: f64, flag: &'static str) -> Result<f64, CliError> {
    check(
        value.is_finite() && value > 0.0,
        flag,
        "must be finite and > 0",
    )?;
    Ok(value)
}

fn k_range(k_min: f64, k_max: f64) -> Result<(), CliError> {
    check(
        k_min.is_finite() && k_min >= 0.0,
        "--k-min",
        "must be finite and >= 0",
    )?;
    check(k_max.is_finite(), "--k-max", "must be finite")?;
    check(k_min < k_max, "--k-min", "k_min < k_max")
}

fn coupling(g_r: Option<f64>) -> Result<f64, CliError> {
    let g_r = required(g_r, "--g-r")?;
    check(
        g_r.is_finite() && g_r >= 0.0,
        "--g-r",
        "must be finite and >= 0",
    )?;
    Ok(g_r)
}

fn window(n_max: Option<u32>, e_max: Option<f64>) -> Result<f64, CliError> {
    match e_max {
        Some(e) => positive(e, "--e-max"),
        None => Ok(default_e_max(
            n_max.unwrap_or(jcm_rg::continuation::DEFAULT_N_MAX),
        )),
    }
}

fn finish(job: Job, common: Common) -> RunConfig {
    let format = common.format.unwrap_or_default();
    let output = common.output.unwrap_or_else(|| {
        let dir = std::env::var_os(OUTPUT_DIR_VAR)
            .map(PathBuf::from)
            .unwrap_or_default();
        dir.join(format!("{}.{}", job.name(), format.extension()))
    });
    RunConfig {
        job,
        output,
        format,
    }
}

/// Fills defaults and rejects missing or contradictory flags.
pub fn validate_and_echo(command: Command) -> Result<(RunConfig, bool), CliError> {
    let (job, common) = match command {
        Command::Spectrum(a) => {
            let p_obs = probability(required(a.p_obs, "--p-obs")?, "--p-obs")?;
            let job = Job::Spectrum {
                p_obs,
                n_max: a.n_max.unwrap_or(DEFAULT_N_MAX),
                j_max: a.j_max.unwrap_or(9),
            };
            (job, a.common)
        }
        Command::Beta(a) => {
            let points = a.points.unwrap_or(201);
            check(points >= 2, "--points", "must be >= 2")?;
            (
                Job::Beta {
                    n_max: a.n_max.unwrap_or(4),
                    points,
                },
                a.common,
            )
        }
        Command::Flow(a) => {
            let g0 = required(a.g0, "--g0")?;
            check(
                g0.is_finite() && g0 >= 0.0,
                "--g0",
                "must be finite and >= 0",
            )?;
            let t0 = a.t0.unwrap_or(-2.0);
            let t1 = a.t1.unwrap_or(1.5);
            check(
                t0.is_finite() && t1.is_finite(),
                "--t0",
                "t0 and t1 must be finite",
            )?;
            check(t0 < t1, "--t1", "t0 < t1")?;
            let tol = positive(a.tol.unwrap_or(1e-9), "--tol")?;
            let job = Job::Flow {
                g0,
                t0,
                t1,
                tol,
                one_loop: a.one_loop,
            };
            (job, a.common)
        }
        Command::EffectiveFlow(a) => {
            let g_r = coupling(a.g_r)?;
            let k_min = a.k_min.unwrap_or(1e-3);
            let k_max = a.k_max.unwrap_or(20.0);
            k_range(k_min, k_max)?;
            let points = a.points.unwrap_or(400);
            check(points >= 2, "--points", "must be >= 2")?;
            let job = Job::EffectiveFlow {
                g_r,
                k_min,
                k_max,
                e_max: window(a.n_max, a.e_max)?,
                points,
                contours: a.contours,
            };
            (job, a.common)
        }
        Command::Bifurcations(a) => {
            let g_r = coupling(a.g_r)?;
            let k_min = a.k_min.unwrap_or(1e-3);
            let k_max = a.k_max.unwrap_or(20.0);
            k_range(k_min, k_max)?;
            let job = Job::Bifurcations {
                g_r,
                k_min,
                k_max,
                e_max: window(a.n_max, a.e_max)?,
            };
            (job, a.common)
        }
        Command::BranchId(a) => {
            let job = match a.input {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
                        path: path.clone(),
                        source,
                    })?;
                    let request: BranchIdRequest =
                        serde_json::from_str(&text).map_err(|e| CliError::Flag {
                            flag: "--input",
                            constraint: format!("invalid request: {e}"),
                        })?;
                    Job::BranchId {
                        measurements: request.measurements,
                        n_max: a.n_max.unwrap_or(request.n_max),
                    }
                }
                None => {
                    let tol = positive(a.tol.unwrap_or(1e-9), "--tol")?;
                    let p_obs = probability(required(a.p_obs, "--p-obs")?, "--p-obs")?;
                    let j = required(a.j, "--j")?;
                    let p_j = probability(required(a.p_j, "--p-j")?, "--p-j")?;
                    Job::BranchId {
                        measurements: vec![
                            Measurement::new(0, p_obs, tol)?,
                            Measurement::new(j, p_j, tol)?,
                        ],
                        n_max: a.n_max.unwrap_or(DEFAULT_N_MAX),
                    }
                }
            };
            (job, a.common)
        }
        Command::DumpOperator(a) => {
            let name = required(a.operator, "--operator")?;
            let operator: OperatorName = name.parse().map_err(|_| CliError::Flag {
                flag: "--operator",
                constraint: format!(
                    "must be one of {}",
                    OperatorName::ALL.map(|o| o.as_str()).join(", ")
                ),
            })?;
            let lambda_cutoff = a.lambda_cutoff.unwrap_or(8);
            check(lambda_cutoff >= 2, "--lambda-cutoff", "must be >= 2")?;
            let job = Job::DumpOperator {
                operator,
                lambda_cutoff,
                delta: a.delta.unwrap_or(0.0),
                omega: a.omega.unwrap_or(0.0),
            };
            (job, a.common)
        }
    };
    let dry_run = common.dry_run;
    Ok((finish(job, common), dry_run))
}
