//! Run configuration: one TOML file per run, every section optional.
//!
//! ```toml
//! version = 1
//! seed = 7
//! output_dir = "runs/ratio"
//!
//! [game]              # overrides on top of the command's preset
//! m = 30
//!
//! [ratio]
//! dims = [8, 12, 16]
//! ```
//!
//! Unknown keys are rejected in every section. Relative CSV paths are
//! resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::Rng;
use repgame::data::{self, SpectrumKind, SpectrumSpec};
use repgame::game::GameConfig;
use repgame::SpdMatrix;
use serde::Deserialize;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub problem: Option<ProblemSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub game: Option<toml::Table>,
    #[serde(default)]
    pub ratio: Option<RatioSection>,
    #[serde(default)]
    pub logistic: Option<LogisticSection>,
    #[serde(default)]
    pub shapes: Option<ShapesSection>,
    #[serde(default)]
    pub curve: Option<CurveSection>,
}

/// Where a `d x d` covariance comes from.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixSource {
    Identity { dim: usize },
    PowerLaw { dim: usize, alpha: f64 },
    LogNormal { dim: usize, sigma0: f64 },
    Diagonal { values: Vec<f64> },
    /// Headerless CSV holding the full matrix.
    Csv { path: PathBuf },
}

impl MatrixSource {
    pub fn build(&self, rng: &mut impl Rng) -> Result<SpdMatrix> {
        let spec = |kind, dim| SpectrumSpec { kind, dim };
        let m = match self {
            Self::Identity { dim } => {
                if *dim == 0 {
                    bail!("identity dimension must be positive");
                }
                SpdMatrix::identity(*dim)
            }
            Self::PowerLaw { dim, alpha } => data::make_covariance(&spec(SpectrumKind::PowerLaw { alpha: *alpha }, *dim), rng)?,
            Self::LogNormal { dim, sigma0 } => {
                data::make_covariance(&spec(SpectrumKind::LogNormalDiag { sigma0: *sigma0 }, *dim), rng)?
            }
            Self::Diagonal { values } => data::make_covariance(
                &spec(SpectrumKind::Explicit { values: values.clone() }, values.len()),
                rng,
            )?,
            Self::Csv { path } => {
                let m = data::read_matrix_csv(path).with_context(|| format!("reading {}", path.display()))?;
                SpdMatrix::new(m)?
            }
        };
        Ok(m)
    }

    fn resolve(&mut self, base: &Path) {
        if let Self::Csv { path } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

/// A single closed-form instance for `solve-pure` / `solve-mixed`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub r: usize,
    pub sigma_x: MatrixSource,
    /// Defaults to the identity.
    #[serde(default)]
    pub s: Option<MatrixSource>,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self {
            r: 2,
            sigma_x: MatrixSource::Identity { dim: 4 },
            s: None,
        }
    }
}

/// Power-law spectra against `S = diag(i^s_exponent)`, written by
/// `solve-mixed` as `spectrum.csv`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub d: usize,
    pub r: usize,
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub s_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatioSection {
    pub r: usize,
    pub dims: Vec<usize>,
    pub trials: u64,
    pub sigma0: f64,
}

impl Default for RatioSection {
    fn default() -> Self {
        Self {
            r: 5,
            dims: (8..=20).step_by(2).collect(),
            trials: 3,
            sigma0: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticSection {
    pub d: usize,
    pub r: usize,
    pub b: usize,
    pub ms: Vec<usize>,
}

impl Default for LogisticSection {
    fn default() -> Self {
        Self {
            d: 15,
            r: 3,
            b: 1000,
            ms: vec![1, 2, 4, 8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapesSection {
    pub n_train: usize,
    pub n_test: usize,
    pub ranks: Vec<usize>,
    /// Extra PCA-only ranks.
    pub pca_ranks: Vec<usize>,
}

impl Default for ShapesSection {
    fn default() -> Self {
        Self {
            n_train: 1000,
            n_test: 1000,
            ranks: vec![3],
            pca_ranks: vec![12],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSection {
    pub d: usize,
    pub r: usize,
    pub sigma0: f64,
    pub m: usize,
}

impl Default for CurveSection {
    fn default() -> Self {
        Self {
            d: 20,
            r: 3,
            sigma0: 1.0,
            m: 20,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(p) = &mut cfg.problem {
            p.sigma_x.resolve(base);
            if let Some(s) = &mut p.s {
                s.resolve(base);
            }
        }
        if let Some(dir) = &cfg.output_dir {
            if dir.is_relative() {
                cfg.output_dir = Some(base.join(dir));
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        if cfg.version != FORMAT_VERSION {
            bail!("config version {} is not supported (expected {FORMAT_VERSION})", cfg.version);
        }
        Ok(cfg)
    }

    /// Defaults used when no config file is given.
    pub fn empty() -> Self {
        Self {
            version: FORMAT_VERSION,
            ..Self::default()
        }
    }

    /// The preset with the `[game]` table applied on top. The merged table
    /// is re-validated, so misspelled keys fail here.
    pub fn game(&self, preset: GameConfig) -> Result<GameConfig> {
        let Some(overrides) = &self.game else {
            return Ok(preset);
        };
        let mut table = toml::Table::try_from(&preset)?;
        for (k, v) in overrides {
            table.insert(k.clone(), v.clone());
        }
        let cfg: GameConfig = table.try_into().context("invalid [game] section")?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys_and_versions() {
        assert!(RunConfig::parse("version = 1\nbogus = 3").is_err());
        assert!(RunConfig::parse("version = 2").is_err());
        assert!(RunConfig::parse("version = 1\n[ratio]\ndim = [8]").is_err());
        let cfg = RunConfig::parse("version = 1\n[game]\nmm = 3").unwrap();
        assert!(cfg.game(GameConfig::mse(5, 0)).is_err());
    }

    #[test]
    fn game_overrides_apply_on_preset() {
        let cfg = RunConfig::parse("version = 1\n[game]\nm = 3\neta_rep = 0.5").unwrap();
        let g = cfg.game(GameConfig::mse(25, 9)).unwrap();
        assert_eq!(g.m, 3);
        assert_eq!(g.eta_rep, 0.5);
        assert_eq!(g.t_rep, 100);
        assert_eq!(g.seed, 9);
    }

    #[test]
    fn matrix_sources_parse() {
        let cfg = RunConfig::parse(
            "version = 1\n[problem]\nr = 1\nsigma_x = { kind = \"power_law\", dim = 3, alpha = 1.0 }\ns = { kind = \"diagonal\", values = [1.0, 2.0, 3.0] }",
        )
        .unwrap();
        let p = cfg.problem.unwrap();
        assert_eq!(p.sigma_x, MatrixSource::PowerLaw { dim: 3, alpha: 1.0 });
        let mut rng = repgame::rng::stream(0, 0, 0);
        let s = p.s.unwrap().build(&mut rng).unwrap();
        assert_eq!(s.matrix()[(2, 2)], 3.0);
    }
}
