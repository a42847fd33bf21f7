//! Run configuration: flags over config file over defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use xysim::disentangler::EigenIndex;
use xysim::optics::NoiseSpec;
use xysim::quench::DEFAULT_STEPS_PER_UNIT;
use xysim::spin_model::{Boundary, CouplingParams};
use xysim::tomography::DEFAULT_SHOTS;

pub const SEED_ENV: &str = "XYSIM_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Exact,
    Trotter,
}

/// Flags shared by every command. Unset flags fall through to the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub jx: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub jy: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Mixing angle; sets (jx, jy, b) = (sin w, 0, cos w).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub w: Option<f64>,
    /// Number of sites.
    #[arg(long = "L", global = true)]
    pub num_sites: Option<usize>,
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub idx: Option<u8>,
    /// Quasi-particle excitation pattern for chains, e.g. 0110.
    #[arg(long, global = true)]
    pub occupation: Option<String>,
    #[arg(long, global = true, value_parser = ["open", "periodic"])]
    pub boundary: Option<String>,
    /// Shorthand for --boundary periodic.
    #[arg(long, global = true, conflicts_with = "boundary")]
    pub periodic: bool,
    /// Use the noisy photonic pipeline where applicable.
    #[arg(long, global = true)]
    pub noise: bool,
    #[arg(long, global = true)]
    pub noise_input: Option<f64>,
    #[arg(long, global = true)]
    pub noise_process: Option<f64>,
    /// Shots per measurement setting.
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    /// RNG seed; falls back to the config file, then XYSIM_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    pub show_config: bool,
    /// Field along X added to the evolving Hamiltonian.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub hx: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub evolve_jx: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub evolve_jy: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub evolve_b: Option<f64>,
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    #[arg(long, global = true)]
    pub points: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, global = true)]
    pub steps_per_unit: Option<u32>,
}

/// Config file contents; every field optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub jx: Option<f64>,
    pub jy: Option<f64>,
    pub b: Option<f64>,
    pub w: Option<f64>,
    #[serde(rename = "L")]
    pub num_sites: Option<usize>,
    pub idx: Option<u8>,
    pub occupation: Option<String>,
    pub boundary: Option<Boundary>,
    pub noise: Option<bool>,
    pub noise_input: Option<f64>,
    pub noise_process: Option<f64>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub w_grid: Option<Vec<f64>>,
    pub hx: Option<f64>,
    pub evolve_jx: Option<f64>,
    pub evolve_jy: Option<f64>,
    pub evolve_b: Option<f64>,
    pub t_max: Option<f64>,
    pub points: Option<usize>,
    pub method: Option<MethodArg>,
    pub steps_per_unit: Option<u32>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Fully resolved settings handed to the commands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: CouplingParams,
    pub w: Option<f64>,
    #[serde(rename = "L")]
    pub num_sites: usize,
    pub idx: EigenIndex,
    pub occupation: Option<String>,
    pub boundary: Boundary,
    pub noise_enabled: bool,
    pub noise: NoiseSpec,
    pub shots: u64,
    pub seed: u64,
    pub format: Format,
    pub w_grid: Option<Vec<f64>>,
    pub evolve_params: CouplingParams,
    pub hx: f64,
    pub t_max: f64,
    pub points: usize,
    pub method: MethodArg,
    pub steps_per_unit: u32,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs, env_seed: Option<String>) -> Result<Self> {
        let file = match &args.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let w = args.w.or(file.w);
        let params = match w {
            Some(w) => CouplingParams::from_angle(w)?,
            None => CouplingParams::new(
                args.jx.or(file.jx).unwrap_or(1.0),
                args.jy.or(file.jy).unwrap_or(0.0),
                args.b.or(file.b).unwrap_or(1.0),
            )?,
        };
        let boundary = if args.periodic {
            Boundary::Periodic
        } else {
            match &args.boundary {
                Some(s) => s.parse()?,
                None => file.boundary.unwrap_or(Boundary::Periodic),
            }
        };
        let env_seed = match env_seed {
            Some(s) => Some(s.trim().parse::<u64>().with_context(|| format!("{SEED_ENV}={s:?} is not a u64"))?),
            None => None,
        };
        let noise = NoiseSpec {
            input_fidelity: args.noise_input.or(file.noise_input).unwrap_or(NoiseSpec::default().input_fidelity),
            process_fidelity: args.noise_process.or(file.noise_process).unwrap_or(NoiseSpec::default().process_fidelity),
            seed: None,
        };
        noise.validate()?;
        let evolve_params = CouplingParams::new(
            args.evolve_jx.or(file.evolve_jx).unwrap_or(params.jx),
            args.evolve_jy.or(file.evolve_jy).unwrap_or(params.jy),
            args.evolve_b.or(file.evolve_b).unwrap_or(params.b),
        )?;
        let cfg = RunConfig {
            params,
            w,
            num_sites: args.num_sites.or(file.num_sites).unwrap_or(2),
            idx: EigenIndex::new(args.idx.or(file.idx).unwrap_or(1))?,
            occupation: args.occupation.clone().or(file.occupation),
            boundary,
            noise_enabled: args.noise || file.noise.unwrap_or(false),
            noise,
            shots: args.shots.or(file.shots).unwrap_or(DEFAULT_SHOTS),
            seed: args.seed.or(file.seed).or(env_seed).unwrap_or(0),
            format: args.format.or(file.format).unwrap_or(Format::Csv),
            w_grid: file.w_grid,
            evolve_params,
            hx: args.hx.or(file.hx).unwrap_or(0.0),
            t_max: args.t_max.or(file.t_max).unwrap_or(10.0),
            points: args.points.or(file.points).unwrap_or(101),
            method: args.method.or(file.method).unwrap_or(MethodArg::Exact),
            steps_per_unit: args.steps_per_unit.or(file.steps_per_unit).unwrap_or(DEFAULT_STEPS_PER_UNIT),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.num_sites < 2 {
            bail!("--L must be at least 2, got {}", self.num_sites);
        }
        if self.shots == 0 {
            bail!("--shots must be at least 1");
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            bail!("--t-max must be finite and non-negative");
        }
        if self.points == 0 {
            bail!("--points must be at least 1");
        }
        if self.steps_per_unit == 0 {
            bail!("--steps-per-unit must be at least 1");
        }
        if !self.hx.is_finite() {
            bail!("--hx must be finite");
        }
        if let Some(grid) = &self.w_grid {
            if grid.is_empty() || grid.iter().any(|w| !w.is_finite()) {
                bail!("w_grid must be a non-empty list of finite angles");
            }
        }
        Ok(())
    }
}
