//! TOML run configuration. Every section is optional; unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use ppd_core::simulate::{ExperimentConfig, NoiseModel};
use ppd_core::{
    AlignConfig, BootstrapConfig, EstimateConfig, FitConfig, Grid, PpdConfig, SlopeSet, Step,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Number of grid points `T`.
    pub grid_points: usize,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub align: AlignSection,
    pub ppd: PpdConfig,
    pub fit: FitConfig,
    pub bootstrap: BootstrapSection,
    pub noise: NoiseSection,
    pub simulate: SimulateSection,
    pub compare: CompareSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid_points: 100,
            seed: 0,
            output_dir: None,
            align: AlignSection::default(),
            ppd: PpdConfig::default(),
            fit: FitConfig::default(),
            bootstrap: BootstrapSection::default(),
            noise: NoiseSection::default(),
            simulate: SimulateSection::default(),
            compare: CompareSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlignSection {
    pub lambda: f64,
    /// Largest lattice step; the move set is every reduced `(a, b)` with
    /// `a, b <= dp_max_step`.
    pub dp_max_step: usize,
    /// Explicit move set, overriding `dp_max_step`.
    pub dp_slope_set: Option<Vec<[usize; 2]>>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for AlignSection {
    fn default() -> Self {
        let base = AlignConfig::default();
        Self {
            lambda: base.lambda,
            dp_max_step: 7,
            dp_slope_set: None,
            tol: base.tol,
            max_iter: base.max_iter,
        }
    }
}

impl AlignSection {
    pub fn to_config(&self) -> Result<AlignConfig> {
        let slopes = match &self.dp_slope_set {
            Some(pairs) => SlopeSet::new(pairs.iter().map(|&[a, b]| Step::new(a, b)).collect())?,
            None => SlopeSet::standard(self.dp_max_step)?,
        };
        let cfg = AlignConfig {
            lambda: self.lambda,
            slopes,
            tol: self.tol,
            max_iter: self.max_iter,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapSection {
    #[serde(rename = "B")]
    pub replicates: usize,
    pub alpha: f64,
}

impl Default for BootstrapSection {
    fn default() -> Self {
        let base = BootstrapConfig::default();
        Self {
            replicates: base.replicates,
            alpha: base.alpha,
        }
    }
}

/// Noise magnitudes. The additive-noise amplitude is given relative to the
/// range of the true signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub sigma_a: f64,
    pub sigma_eps_relative: f64,
    pub eps_modes: usize,
    pub warp_strength: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let base = NoiseModel::default_for_range(1.0);
        Self {
            sigma_a: base.sigma_a,
            sigma_eps_relative: base.sigma_eps,
            eps_modes: base.eps_modes,
            warp_strength: base.warp_strength,
        }
    }
}

impl NoiseSection {
    pub fn to_model(&self, range: f64) -> NoiseModel {
        NoiseModel {
            sigma_a: self.sigma_a,
            sigma_eps: self.sigma_eps_relative * range,
            eps_modes: self.eps_modes,
            warp_strength: self.warp_strength,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    /// Curves per dataset.
    pub n: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self { n: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    pub kappa_grid: Vec<f64>,
    pub l2_tol: f64,
    pub l2_max_iter: usize,
}

impl Default for CompareSection {
    fn default() -> Self {
        let base = ExperimentConfig::default();
        Self {
            kappa_grid: base.kappa_grid,
            l2_tol: base.l2_tol,
            l2_max_iter: base.l2_max_iter,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Defaults when no file is given.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.align.to_config()?;
        self.ppd.validate()?;
        self.fit.validate()?;
        self.bootstrap_config().validate()?;
        self.noise.to_model(1.0).validate()?;
        if self.simulate.n == 0 {
            return Err(CliError::Config("simulate.n must be >= 1".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid_points).map_err(|e| CliError::Config(format!("grid_points: {e}")))
    }

    pub fn estimate_config(&self) -> Result<EstimateConfig> {
        Ok(EstimateConfig {
            align: self.align.to_config()?,
            ppd: self.ppd.clone(),
            fit: self.fit.clone(),
        })
    }

    pub fn bootstrap_config(&self) -> BootstrapConfig {
        BootstrapConfig {
            replicates: self.bootstrap.replicates,
            alpha: self.bootstrap.alpha,
            seed: self.seed,
        }
    }

    pub fn experiment_config(&self, replications: usize) -> Result<ExperimentConfig> {
        let cfg = ExperimentConfig {
            replications,
            estimate: self.estimate_config()?,
            kappa_grid: self.compare.kappa_grid.clone(),
            l2_tol: self.compare.l2_tol,
            l2_max_iter: self.compare.l2_max_iter,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn sections_override_defaults() {
        let cfg = RunConfig::parse(
            r#"
            grid_points = 50
            seed = 9
            [align]
            dp_slope_set = [[1, 1], [1, 2], [2, 1]]
            [ppd]
            lambda_grid = [0.0, 0.1]
            [bootstrap]
            B = 20
            alpha = 0.1
            "#,
        )
        .unwrap();
        assert_eq!(cfg.grid().unwrap().len(), 50);
        assert_eq!(cfg.align.to_config().unwrap().slopes.steps().len(), 3);
        assert_eq!(cfg.ppd.lambda_grid, [0.0, 0.1]);
        let b = cfg.bootstrap_config();
        assert_eq!((b.replicates, b.alpha, b.seed), (20, 0.1, 9));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::parse("grid_pionts = 50").is_err());
        assert!(RunConfig::parse("[align]\nlamda = 1.0").is_err());
        assert!(RunConfig::parse("[ppd]\nlambda_grid = []").is_err());
        assert!(RunConfig::parse("[align]\ndp_slope_set = [[1, 2]]").is_err());
        assert!(RunConfig::parse("[bootstrap]\nalpha = 2.0").is_err());
        assert!(RunConfig::parse("grid_points = 2").is_err());
    }
}
