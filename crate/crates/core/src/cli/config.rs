//! Command-line flags and the TOML run configuration that overrides them.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::h2::{linear_schedule, log_schedule, AdmmOptions};

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "SPARSEWAC_OUT_DIR";

/// Fills every `None` field of `self` from `base`; `self` wins.
macro_rules! overlay {
    ($name:ident { $($field:ident),* $(,)? }) => {
        impl $name {
            pub fn overlay(self, base: Self) -> Self {
                Self { $($field: self.$field.or(base.$field)),* }
            }
        }
    };
}

#[derive(Debug, Parser)]
#[command(name = "sparsewac", version, about = "Sparsity-promoting wide-area control design")]
pub struct Cli {
    /// TOML run configuration; its values override command-line flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default `out`; the SPARSEWAC_OUT_DIR variable wins).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// RNG seed for simulation noise.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Linearize a network file into a plant + cost model file.
    BuildModel {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        cost: CostArgs,
    },
    /// Run the γ homotopy and write per-γ gains, patterns and margins.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[command(flatten)]
        cost: CostArgs,
        #[command(flatten)]
        admm: AdmmArgs,
    },
    /// Mode table, disk margins, channel margins and pattern of a gain.
    Analyze {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Time-domain simulation with noise and delayed channels.
    Simulate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Optimize a gain over its own sparsity pattern.
    Polish {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        cost: CostArgs,
    },
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputArgs {
    /// Model file with [plant] and optionally [cost]/[network] sections.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Network file (build-model); the bundled two-area system if omitted.
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// File with a [gain] section.
    #[arg(long)]
    pub gain: Option<PathBuf>,
    /// Output file name inside the output directory.
    #[arg(long)]
    pub output: Option<String>,
}
overlay!(InputArgs { model, network, gain, output });

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Log,
    Lin,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleArgs {
    /// Smallest nonzero γ (default 1e-4).
    #[arg(long)]
    pub gamma_min: Option<f64>,
    /// Largest γ (default 1).
    #[arg(long)]
    pub gamma_max: Option<f64>,
    /// Number of γ values (default 40).
    #[arg(long)]
    pub gamma_count: Option<usize>,
    /// Spacing of the schedule (default log).
    #[arg(long, value_enum)]
    pub gamma_spacing: Option<Spacing>,
    /// Prepend γ = 0 (the centralized gain) to the schedule.
    #[arg(long)]
    pub include_zero: Option<bool>,
}
overlay!(ScheduleArgs { gamma_min, gamma_max, gamma_count, gamma_spacing, include_zero });

impl ScheduleArgs {
    pub fn schedule(&self) -> Result<Vec<f64>> {
        let min = self.gamma_min.unwrap_or(1e-4);
        let max = self.gamma_max.unwrap_or(1.0);
        let count = self.gamma_count.unwrap_or(40);
        let mut out = match self.gamma_spacing.unwrap_or(Spacing::Log) {
            Spacing::Log => log_schedule(min, max, count)?,
            Spacing::Lin => linear_schedule(min, max, count)?,
        };
        if self.include_zero.unwrap_or(false) && out.first() != Some(&0.0) {
            out.insert(0, 0.0);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostBuilder {
    Average,
    TwoArea,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostArgs {
    /// Cost builder used when the model has no [cost] section (build-model
    /// always builds one).
    #[arg(long, value_enum)]
    pub cost: Option<CostBuilder>,
    /// Weight on angle differences from the area average (default 2).
    #[arg(long)]
    pub ell: Option<f64>,
    /// Weight on frequencies (default 2).
    #[arg(long)]
    pub m: Option<f64>,
    /// Small multiple of the identity on the angle block (default 0.1).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Coherent areas for the two-area cost, e.g. `0,1;2,3`.
    #[arg(long)]
    pub areas: Option<String>,
}
overlay!(CostArgs { cost, ell, m, eps, areas });

impl CostArgs {
    pub fn params(&self) -> (f64, f64, f64) {
        (self.ell.unwrap_or(2.0), self.m.unwrap_or(2.0), self.eps.unwrap_or(0.1))
    }

    /// Parses `0,1;2,3` into generator groups.
    pub fn parse_areas(&self) -> Result<Option<Vec<Vec<usize>>>> {
        let Some(text) = &self.areas else {
            return Ok(None);
        };
        text.split(';')
            .map(|area| {
                area.split(',')
                    .map(|g| {
                        g.trim().parse::<usize>().map_err(|_| {
                            Error::InvalidParameter(format!("bad generator index {g:?} in areas {text:?}"))
                        })
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmmArgs {
    /// ADMM penalty (default 100).
    #[arg(long)]
    pub rho: Option<f64>,
    /// Primal residual tolerance.
    #[arg(long)]
    pub primal_tol: Option<f64>,
    /// Dual residual tolerance.
    #[arg(long)]
    pub dual_tol: Option<f64>,
    /// ADMM iteration cap per γ.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Reweighted-ℓ1 rounds per γ; 0 disables reweighting.
    #[arg(long)]
    pub reweight_steps: Option<usize>,
    /// Offset in the reweighting 1/(|K|+ε).
    #[arg(long)]
    pub reweight_eps: Option<f64>,
    /// Relative gradient tolerance of the F-step.
    #[arg(long)]
    pub inner_tol: Option<f64>,
}
overlay!(AdmmArgs { rho, primal_tol, dual_tol, max_iters, reweight_steps, reweight_eps, inner_tol });

impl AdmmArgs {
    pub fn options(&self) -> AdmmOptions {
        let d = AdmmOptions::default();
        AdmmOptions {
            rho: self.rho.unwrap_or(d.rho),
            primal_tol: self.primal_tol.unwrap_or(d.primal_tol),
            dual_tol: self.dual_tol.unwrap_or(d.dual_tol),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            reweight_steps: self.reweight_steps.unwrap_or(d.reweight_steps),
            reweight_eps: self.reweight_eps.unwrap_or(d.reweight_eps),
            inner_tol: self.inner_tol.unwrap_or(d.inner_tol),
            inner_max_iters: d.inner_max_iters,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimArgs {
    /// Simulated time in seconds (default 10).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Integrator step in seconds (default 0.01).
    #[arg(long)]
    pub step: Option<f64>,
    /// Noise standard deviation, one value or one per disturbance input.
    #[arg(long, value_delimiter = ',')]
    pub noise_std: Option<Vec<f64>>,
    /// Delayed channel `input:state:seconds`; repeatable.
    #[arg(long = "delay")]
    pub delays: Option<Vec<String>>,
    /// Padé order for delays; 0 ignores delays (default 2).
    #[arg(long)]
    pub pade_order: Option<usize>,
    /// `zero`, `mode` (least-damped oscillatory open-loop mode) or `mode:<k>`.
    #[arg(long)]
    pub initial: Option<String>,
}
overlay!(SimArgs { horizon, step, noise_std, delays, pade_order, initial });

/// The TOML configuration file. Every key is optional and overrides the
/// matching flag.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub input: InputArgs,
    #[serde(default)]
    pub schedule: ScheduleArgs,
    #[serde(default)]
    pub cost: CostArgs,
    #[serde(default)]
    pub admm: AdmmArgs,
    #[serde(default)]
    pub sim: SimArgs,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: format!("cannot read file: {e}"),
        })?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Flags merged with the configuration file, ready to execute.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub command: Command,
}

impl Cli {
    pub fn resolve(self) -> Result<Resolved> {
        let cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let out_dir = std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .or(cfg.out_dir.clone())
            .or(self.out_dir)
            .unwrap_or_else(|| PathBuf::from("out"));
        let seed = cfg.seed.or(self.seed).unwrap_or(crate::analysis::DEFAULT_SEED);
        let command = match self.command {
            Command::BuildModel { input, cost } => Command::BuildModel {
                input: cfg.input.overlay(input),
                cost: cfg.cost.overlay(cost),
            },
            Command::Sweep {
                input,
                schedule,
                cost,
                admm,
            } => Command::Sweep {
                input: cfg.input.overlay(input),
                schedule: cfg.schedule.overlay(schedule),
                cost: cfg.cost.overlay(cost),
                admm: cfg.admm.overlay(admm),
            },
            Command::Analyze { input } => Command::Analyze {
                input: cfg.input.overlay(input),
            },
            Command::Simulate { input, sim } => Command::Simulate {
                input: cfg.input.overlay(input),
                sim: cfg.sim.overlay(sim),
            },
            Command::Polish { input, cost } => Command::Polish {
                input: cfg.input.overlay(input),
                cost: cfg.cost.overlay(cost),
            },
        };
        Ok(Resolved { out_dir, seed, command })
    }
}
