//! Run configuration: built-in defaults, then an optional TOML file, then
//! command-line flags, each layer overriding the previous one key by key.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

use gsocp::solver::DEFAULT_CONTROL_SAMPLES;
use gsocp::{BuiltinParams, FamilyKind, Interp, SolverConfig};

pub const DEFAULT_N_LIST: [usize; 5] = [16, 32, 64, 128, 256];
pub const DEFAULT_GH_ORDER: usize = 6;
pub const DEFAULT_PATHS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Solve,
    Converge,
    Residual,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeName {
    Trinomial,
    GaussHermite,
}

impl std::str::FromStr for SchemeName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "trinomial" | "tr" => Ok(SchemeName::Trinomial),
            "gauss_hermite" | "gauss-hermite" | "gh" => Ok(SchemeName::GaussHermite),
            other => Err(format!(
                "unknown scheme {other:?} (trinomial | gauss_hermite)"
            )),
        }
    }
}

/// Everything a run needs, fully resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub problem: String,
    pub params: BuiltinParams,
    pub scheme: FamilyKind,
    pub n_list: Vec<usize>,
    pub x0: f64,
    pub control_samples: usize,
    pub grid_factor: f64,
    pub interp: Interp,
    pub strict_domain: bool,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub paths: usize,
    /// Volatility of the simulated paths; `None` means `sigma_hi`.
    pub theta: Option<f64>,
    /// Record real wall times instead of zeros (breaks byte-identical output).
    pub timing: bool,
}

impl RunConfig {
    pub fn new(mode: Mode, problem: &str) -> Self {
        Self {
            mode,
            problem: problem.to_string(),
            params: BuiltinParams::default(),
            scheme: FamilyKind::Trinomial,
            n_list: DEFAULT_N_LIST.to_vec(),
            x0: 0.0,
            control_samples: DEFAULT_CONTROL_SAMPLES,
            grid_factor: 1.0,
            interp: Interp::Linear,
            strict_domain: false,
            out: None,
            seed: 0,
            paths: DEFAULT_PATHS,
            theta: None,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            bail!("n_list is empty");
        }
        if self.n_list.contains(&0) {
            bail!("n_list entries must be >= 1");
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            bail!("n_list must be strictly increasing, got {:?}", self.n_list);
        }
        if !self.x0.is_finite() {
            bail!("x0 must be finite");
        }
        Ok(())
    }

    pub fn solver_config(&self, steps: usize) -> SolverConfig {
        SolverConfig {
            steps,
            scheme: self.scheme,
            control_samples: self.control_samples,
            grid_factor: self.grid_factor,
            interp: self.interp,
            strict_domain: self.strict_domain,
            ..SolverConfig::default()
        }
    }
}

/// Keys accepted in a config file; each one mirrors a flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<String>,
    pub scheme: Option<String>,
    pub gh_order: Option<usize>,
    pub sigma_lo: Option<f64>,
    pub sigma_hi: Option<f64>,
    pub kappa: Option<f64>,
    pub r0: Option<f64>,
    pub n_list: Option<Vec<usize>>,
    pub x0: Option<f64>,
    pub controls: Option<usize>,
    pub grid_factor: Option<f64>,
    pub interp: Option<String>,
    pub strict_domain: Option<bool>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub theta: Option<f64>,
    pub timing: Option<bool>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// Built-in problem: gheat, lq or sine.
    #[arg(long, global = true)]
    pub problem: Option<String>,
    /// trinomial | gauss_hermite
    #[arg(long, global = true)]
    pub scheme: Option<SchemeName>,
    /// Gauss-Hermite order L.
    #[arg(long, global = true)]
    pub gh_order: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub sigma_lo: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub sigma_hi: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub r0: Option<f64>,
    /// Comma-separated step counts, e.g. 16,32,64.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    /// Number of sampled controls M.
    #[arg(long, global = true)]
    pub controls: Option<usize>,
    /// Grid spacing as a multiple of the time step.
    #[arg(long, global = true)]
    pub grid_factor: Option<f64>,
    /// linear | cubic
    #[arg(long, global = true)]
    pub interp: Option<String>,
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub strict_domain: Option<bool>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Write measured wall times instead of zeros.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub timing: Option<bool>,
}

macro_rules! pick {
    ($flags:expr, $file:expr, $field:ident) => {
        $flags.$field.clone().or($file.$field.clone())
    };
}

/// Layers `flags` over `file` over the defaults.
pub fn resolve(mode: Mode, flags: &Flags, file: &FileConfig) -> Result<RunConfig> {
    let problem = pick!(flags, file, problem).unwrap_or_else(|| "gheat".into());
    let mut cfg = RunConfig::new(mode, &problem);
    cfg.params = BuiltinParams {
        kappa: pick!(flags, file, kappa),
        r0: pick!(flags, file, r0),
        sigma_lo: pick!(flags, file, sigma_lo),
        sigma_hi: pick!(flags, file, sigma_hi),
    };
    let scheme = match (flags.scheme, &file.scheme) {
        (Some(s), _) => s,
        (None, Some(s)) => s.parse().map_err(anyhow::Error::msg)?,
        (None, None) => SchemeName::Trinomial,
    };
    let gh_order = pick!(flags, file, gh_order).unwrap_or(DEFAULT_GH_ORDER);
    cfg.scheme = match scheme {
        SchemeName::Trinomial => FamilyKind::Trinomial,
        SchemeName::GaussHermite => FamilyKind::GaussHermite(gh_order),
    };
    if let Some(n) = pick!(flags, file, n_list) {
        cfg.n_list = n;
    }
    if let Some(v) = pick!(flags, file, x0) {
        cfg.x0 = v;
    }
    if let Some(v) = pick!(flags, file, controls) {
        cfg.control_samples = v;
    }
    if let Some(v) = pick!(flags, file, grid_factor) {
        cfg.grid_factor = v;
    }
    if let Some(v) = pick!(flags, file, interp) {
        cfg.interp = v.parse()?;
    }
    if let Some(v) = pick!(flags, file, strict_domain) {
        cfg.strict_domain = v;
    }
    cfg.out = pick!(flags, file, out);
    if let Some(v) = pick!(flags, file, seed) {
        cfg.seed = v;
    }
    if let Some(v) = pick!(flags, file, paths) {
        cfg.paths = v;
    }
    cfg.theta = pick!(flags, file, theta);
    if let Some(v) = pick!(flags, file, timing) {
        cfg.timing = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = resolve(Mode::Converge, &Flags::default(), &FileConfig::default()).unwrap();
        assert_eq!(cfg.problem, "gheat");
        assert_eq!(cfg.scheme, FamilyKind::Trinomial);
        assert_eq!(cfg.n_list, DEFAULT_N_LIST);
        assert_eq!(cfg.control_samples, 65);
        assert!(!cfg.timing);
    }

    #[test]
    fn flags_override_file() {
        let file = FileConfig::parse(
            "problem = \"lq\"\nscheme = \"gh\"\ngh_order = 8\nn_list = [4, 8]\nkappa = 0.7\n",
        )
        .unwrap();
        let flags = Flags {
            gh_order: Some(10),
            n_list: Some(vec![2, 3]),
            ..Flags::default()
        };
        let cfg = resolve(Mode::Solve, &flags, &file).unwrap();
        assert_eq!(cfg.problem, "lq");
        assert_eq!(cfg.scheme, FamilyKind::GaussHermite(10));
        assert_eq!(cfg.n_list, vec![2, 3]);
        assert_eq!(cfg.params.kappa, Some(0.7));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(FileConfig::parse("colour = 3").is_err());
        let bad = |n: Vec<usize>| {
            let flags = Flags {
                n_list: Some(n),
                ..Flags::default()
            };
            resolve(Mode::Converge, &flags, &FileConfig::default())
        };
        assert!(bad(vec![]).is_err());
        assert!(bad(vec![32, 16]).is_err());
        assert!(bad(vec![16, 16]).is_err());
        let file = FileConfig::parse("scheme = \"binomial\"").unwrap();
        assert!(resolve(Mode::Solve, &Flags::default(), &file).is_err());
        let file = FileConfig::parse("interp = \"spline\"").unwrap();
        assert!(resolve(Mode::Solve, &Flags::default(), &file).is_err());
    }
}
