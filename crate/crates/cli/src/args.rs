//! Command-line flags, the optional config file, and their resolution.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use maxproc::grid_calc::LevyMethod;
use maxproc::verify::Profile;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const DEFAULT_A: f64 = 1.0;
pub const DEFAULT_B: f64 = 1.0;
pub const DEFAULT_DT: f64 = 1.0 / 512.0;
pub const DEFAULT_HORIZON: f64 = 200.0;
pub const DEFAULT_PATHS: usize = 200;
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_THETAS: [f64; 4] = [0.5, 1.0, 2.0, 5.0];

#[derive(Debug, Parser)]
#[command(
    name = "maxproc",
    version,
    about = "Local maxima of Brownian motion with prescribed reach: tables, solvers, simulation and checks",
    after_help = "Flags override values from --config (a TOML file of `key = value` lines using the flag names). \
                  MAXPROC_THREADS caps the number of worker threads.\n\
                  Exit codes: 0 success, 2 validation error, 3 verification failure, 4 IO error."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotTarget {
    /// G_a on [0, rmax]
    G1,
    /// ln G_a with its exponential asymptote
    LnG1,
    /// the pair kernel h
    H,
    /// the gap density
    GapDensity,
    /// simulated pair correlation over h
    PairCorrOverlay,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write `r,h` rows of the pair kernel [rmax default: 5]
    TabulateH,
    /// Solve for the Levy tail G_a by one or all methods [rmax default: 5; b default: a]
    SolveG,
    /// Write `r,g,cdf` rows of the gap density [rmax default: 20]
    GapDensity,
    /// Compare numeric Laplace transforms of G_a with the closed form [rmax default: 5]
    LaplaceCheck,
    /// Print the first zero of M(-1/2; 1/2; x) and the tail constants of G_a
    Rho,
    /// Simulate paths and report estimators against their targets
    Simulate {
        /// Also write the pooled gaps as CSV
        #[arg(long)]
        gaps_out: Option<PathBuf>,
    },
    /// Run the acceptance suite and write the JSON report
    Verify,
    /// Write an SVG plot [rmax default: 5 for G, 1.5 (a+b) for h, 20 for the gap density, a+3b for the overlay]
    Plot {
        #[arg(value_enum)]
        target: PlotTarget,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Series,
    Volterra,
    Recursion,
    All,
}

impl MethodArg {
    pub fn methods(self) -> Vec<LevyMethod> {
        match self {
            MethodArg::Series => vec![LevyMethod::Series],
            MethodArg::Volterra => vec![LevyMethod::VolterraAbel],
            MethodArg::Recursion => vec![LevyMethod::RecursionHb],
            MethodArg::All => LevyMethod::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileArg {
    Fast,
    Full,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Fast => Profile::Fast,
            ProfileArg::Full => Profile::Full,
        }
    }
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Opts {
    /// Left reach a [default: 1]
    #[arg(long = "a", global = true)]
    pub a: Option<f64>,
    /// Right reach b <= a [default: 1]
    #[arg(long = "b", global = true)]
    pub b: Option<f64>,
    /// Grid step of the deterministic solvers [default: a/400 for G, b/400 otherwise]
    #[arg(long, global = true)]
    pub dx: Option<f64>,
    /// Right end of the computed window (default depends on the command)
    #[arg(long, global = true)]
    pub rmax: Option<f64>,
    /// Time step of simulated paths [default: 0.001953125]
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// One-sided path length T; paths cover [-T, T] [default: 200]
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    /// Number of simulated paths [default: 200]
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Random seed [default: 20240601]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Solver for G_a [default: all]
    #[arg(long, value_enum, global = true)]
    pub method: Option<MethodArg>,
    /// Verification profile [default: fast]
    #[arg(long, value_enum, global = true)]
    pub profile: Option<ProfileArg>,
    /// Output file (stdout when omitted, except for plots)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated Laplace arguments [default: 0.5,1,2,5]
    #[arg(long, value_delimiter = ',', global = true)]
    pub theta: Option<Vec<f64>>,
    /// TOML file with defaults for any of the flags above
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Opts {
    /// Field-wise `self`, falling back to `base`.
    pub fn or(self, base: Opts) -> Opts {
        Opts {
            a: self.a.or(base.a),
            b: self.b.or(base.b),
            dx: self.dx.or(base.dx),
            rmax: self.rmax.or(base.rmax),
            dt: self.dt.or(base.dt),
            horizon: self.horizon.or(base.horizon),
            paths: self.paths.or(base.paths),
            seed: self.seed.or(base.seed),
            method: self.method.or(base.method),
            profile: self.profile.or(base.profile),
            out: self.out.or(base.out),
            theta: self.theta.or(base.theta),
            config: self.config,
        }
    }
}

pub fn load_config(path: &Path) -> CliResult<Opts> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Flags merged over the config file, with defaults applied.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub a: f64,
    pub b: Option<f64>,
    pub dx: Option<f64>,
    pub rmax: Option<f64>,
    pub dt: f64,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    pub method: MethodArg,
    pub profile: Profile,
    pub out: Option<PathBuf>,
    pub thetas: Vec<f64>,
}

impl RunConfig {
    pub fn resolve(flags: Opts) -> CliResult<Self> {
        let merged = match &flags.config {
            Some(path) => {
                let base = load_config(path)?;
                flags.or(base)
            }
            None => flags,
        };
        Ok(RunConfig {
            a: merged.a.unwrap_or(DEFAULT_A),
            b: merged.b,
            dx: merged.dx,
            rmax: merged.rmax,
            dt: merged.dt.unwrap_or(DEFAULT_DT),
            horizon: merged.horizon.unwrap_or(DEFAULT_HORIZON),
            paths: merged.paths.unwrap_or(DEFAULT_PATHS),
            seed: merged.seed.unwrap_or(DEFAULT_SEED),
            method: merged.method.unwrap_or(MethodArg::All),
            profile: merged.profile.unwrap_or(ProfileArg::Fast).into(),
            out: merged.out,
            thetas: merged.theta.unwrap_or_else(|| DEFAULT_THETAS.to_vec()),
        })
    }

    /// `b`, defaulting to 1.
    pub fn b_or_default(&self) -> f64 {
        self.b.unwrap_or(DEFAULT_B)
    }

    pub fn rmax_or(&self, default: f64) -> f64 {
        self.rmax.unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "a = 4.0\nb = 2.0\nmethod = \"series\"\ntheta = [1.0, 3.0]\n").unwrap();
        let flags = Opts {
            b: Some(1.0),
            config: Some(path),
            ..Opts::default()
        };
        let cfg = RunConfig::resolve(flags).unwrap();
        assert_eq!(cfg.a, 4.0);
        assert_eq!(cfg.b, Some(1.0));
        assert_eq!(cfg.method, MethodArg::Series);
        assert_eq!(cfg.thetas, vec![1.0, 3.0]);
        assert_eq!(cfg.seed, DEFAULT_SEED);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "alpha = 1.0\n").unwrap();
        let err = RunConfig::resolve(Opts {
            config: Some(path),
            ..Opts::default()
        })
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let missing = Opts {
            config: Some("/nonexistent.toml".into()),
            ..Opts::default()
        };
        assert_eq!(RunConfig::resolve(missing).unwrap_err().exit_code(), 4);
    }

    #[test]
    fn cli_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let cli = Cli::try_parse_from(["maxproc", "solve-g", "--a", "2", "--method", "series"]).unwrap();
        assert!(matches!(cli.command, Command::SolveG));
        assert_eq!(cli.opts.a, Some(2.0));
    }
}
