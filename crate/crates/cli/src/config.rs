//! Run configuration: a JSON file merged under command-line flags.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Every option any command accepts. Unset fields fall back to the config
/// file, then to per-command defaults.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Set from the subcommand; a config file may name it too.
    #[arg(skip)]
    pub command: Option<String>,

    /// JSON file with any of these options; flags override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Preset (identity2, identity3, hexagonal, identity<d>) or a JSON file
    /// `{"dim": d, "basis": [row-major A]}`; bases are normalized to covolume 1.
    #[arg(long)]
    pub lattice: Option<String>,

    /// uniform, jittered, sublattice or dpp.
    #[arg(long)]
    pub generator: Option<String>,

    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,

    /// Grid resolution for jittered and sublattice sets.
    #[arg(long)]
    pub m: Option<usize>,

    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub r: Option<f64>,

    /// Point counts for scans, comma separated.
    #[arg(long = "Ns", value_delimiter = ',')]
    #[serde(rename = "Ns")]
    pub ns: Option<Vec<usize>>,

    /// Threshold multipliers `t` with `R = t N^{-1/d}`, comma separated.
    #[arg(long = "t-grid", value_delimiter = ',')]
    #[serde(alias = "t-grid")]
    pub t_grid: Option<Vec<f64>>,

    /// Small-ball scans use `R_N = R (N / N_1)^{-exponent}`.
    #[arg(long = "R-exponent")]
    #[serde(rename = "R_exponent", alias = "R-exponent")]
    pub r_exponent: Option<f64>,

    #[arg(long)]
    pub alpha: Option<f64>,

    /// Certified tolerance for dual-lattice tails.
    #[arg(long)]
    pub tol: Option<f64>,

    /// Fixed dual truncation radius; overrides --tol.
    #[arg(long = "W")]
    #[serde(rename = "W")]
    pub w: Option<f64>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub stream: Option<u64>,

    #[arg(long)]
    pub replicates: Option<usize>,

    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,

    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,

    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,

    /// Point-set CSV written by `gen`.
    #[arg(long)]
    pub points: Option<PathBuf>,

    /// spectral, realspace, montecarlo or all (variance); spectral or closed
    /// (dpp-expected).
    #[arg(long)]
    pub method: Option<String>,

    /// large, small, threshold or qmc.
    #[arg(long)]
    pub regime: Option<String>,

    /// Monte Carlo centers, or samples per cell for jittered-expected.
    #[arg(long)]
    pub samples: Option<usize>,

    #[arg(long = "quad-tol")]
    #[serde(alias = "quad-tol")]
    pub quad_tol: Option<f64>,

    /// Regime threshold slack.
    #[arg(long)]
    pub delta: Option<f64>,

    /// Omit the timestamp so reruns are byte-identical.
    #[arg(long = "no-timestamp", default_missing_value = "true", num_args = 0)]
    #[serde(alias = "no-timestamp")]
    pub no_timestamp: Option<bool>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunConfig {
    /// Loads `--config` if given and lays the flags over it.
    pub fn resolve(flags: RunConfig) -> Result<RunConfig, CliError> {
        let mut cfg = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Precondition(format!("{}: {e}", path.display())))?;
                serde_json::from_str::<RunConfig>(&text)
                    .map_err(|e| CliError::Precondition(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        overlay!(
            cfg, flags, lattice, generator, n, m, r, ns, t_grid, r_exponent, alpha, tol, w, seed, stream, replicates,
            threads, format, output, points, method, regime, samples, quad_tol, delta, no_timestamp
        );
        Ok(cfg)
    }

    pub fn timestamp(&self) -> bool {
        !self.no_timestamp.unwrap_or(false)
    }
}
