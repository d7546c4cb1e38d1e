use std::path::{Path, PathBuf};

use rial_core::{DualMode, OuterConfig, SgMetric};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Pca,
    Cca,
    Nonlinear,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Pca => "pca",
            Family::Cca => "cca",
            Family::Nonlinear => "nonlinear",
        }
    }
}

/// One point of the dimension grid. PCA reads `d` (variables) and `n`
/// (samples), CCA reads `d` (samples), `p` and `q`, the nonlinear problem
/// reads `p`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    pub d: Option<usize>,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub q: Option<usize>,
}

impl Dims {
    pub fn pca(d: usize, n: usize) -> Self {
        Dims {
            d: Some(d),
            n: Some(n),
            ..Dims::default()
        }
    }

    pub fn cca(d: usize, p: usize, q: usize) -> Self {
        Dims {
            d: Some(d),
            p: Some(p),
            q: Some(q),
            ..Dims::default()
        }
    }

    pub fn nonlinear(p: usize) -> Self {
        Dims {
            p: Some(p),
            ..Dims::default()
        }
    }

    /// Compact label such as `d200n50`, used in CSV rows and file names.
    pub fn label(&self) -> String {
        let mut s = String::new();
        for (k, v) in [("d", self.d), ("n", self.n), ("p", self.p), ("q", self.q)] {
            if let Some(v) = v {
                s.push_str(&format!("{k}{v}"));
            }
        }
        s
    }

    fn validate(&self, family: Family) -> Result<()> {
        let (need, forbid): (&[(&str, Option<usize>)], &[(&str, Option<usize>)]) = match family {
            Family::Pca => (
                &[("d", self.d), ("n", self.n)],
                &[("p", self.p), ("q", self.q)],
            ),
            Family::Cca => (
                &[("d", self.d), ("p", self.p), ("q", self.q)],
                &[("n", self.n)],
            ),
            Family::Nonlinear => (
                &[("p", self.p)],
                &[("d", self.d), ("n", self.n), ("q", self.q)],
            ),
        };
        for (name, v) in need {
            match v {
                Some(0) => return Err(CliError::config(format!("dims.{name} must be positive"))),
                None => {
                    return Err(CliError::config(format!(
                        "{} dims need `{name}` (got {self:?})",
                        family.name()
                    )))
                }
                _ => {}
            }
        }
        if let Some((name, _)) = forbid.iter().find(|(_, v)| v.is_some()) {
            return Err(CliError::config(format!(
                "`{name}` is not a {} dimension",
                family.name()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Classical,
    Damped,
}

impl Arm {
    pub fn name(self) -> &'static str {
        match self {
            Arm::Classical => "classical",
            Arm::Damped => "damped",
        }
    }

    pub fn dual_mode(self) -> DualMode {
        match self {
            Arm::Classical => DualMode::Classical,
            Arm::Damped => DualMode::Damped,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ArmSelection {
    Classical,
    Damped,
    #[default]
    Both,
}

impl ArmSelection {
    pub fn arms(self) -> Vec<Arm> {
        match self {
            ArmSelection::Classical => vec![Arm::Classical],
            ArmSelection::Damped => vec![Arm::Damped],
            ArmSelection::Both => vec![Arm::Classical, Arm::Damped],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CcaMetric {
    G,
    #[default]
    Euclidean,
}

impl From<CcaMetric> for SgMetric {
    fn from(m: CcaMetric) -> Self {
        match m {
            CcaMetric::G => SgMetric::G,
            CcaMetric::Euclidean => SgMetric::Euclidean,
        }
    }
}

/// Optional replacements for [`OuterConfig`] defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub eps: Option<f64>,
    pub eps1: Option<f64>,
    pub sigma1: Option<f64>,
    pub b: Option<f64>,
    pub max_outer: Option<usize>,
    pub beta0: Option<f64>,
    pub check_invariants: Option<bool>,
    pub inner_max_iters: Option<usize>,
    pub armijo: Option<f64>,
    pub shrink: Option<f64>,
    pub step_min: Option<f64>,
    pub step_max: Option<f64>,
    pub nonmonotone_window: Option<usize>,
    pub max_halvings: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, base: &OuterConfig) -> OuterConfig {
        let mut c = base.clone();
        macro_rules! set {
            ($($field:ident => $($target:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$field { c.$($target).+ = v; })*
            };
        }
        set!(
            eps => eps, eps1 => eps1, sigma1 => sigma1, b => b, max_outer => max_outer,
            beta0 => beta0, check_invariants => check_invariants,
            inner_max_iters => inner.max_iters, armijo => inner.armijo, shrink => inner.shrink,
            step_min => inner.step_min, step_max => inner.step_max,
            nonmonotone_window => inner.nonmonotone_window, max_halvings => inner.max_halvings,
        );
        c
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmOverrides {
    #[serde(default)]
    pub classical: Overrides,
    #[serde(default)]
    pub damped: Overrides,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    pub dims: Vec<Dims>,
    pub mu: Vec<f64>,
    pub r: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub arms: ArmSelection,
    /// Applied to both arms before the per-arm overrides.
    #[serde(default)]
    pub common: Overrides,
    #[serde(default)]
    pub overrides: ArmOverrides,
    #[serde(default)]
    pub cca_metric: CcaMetric,
    pub output_dir: Option<PathBuf>,
    /// Parallel cells; 0 or absent uses all cores.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.mu.is_empty() || self.r.is_empty() || self.seeds.is_empty()
        {
            return Err(CliError::config("dims, mu, r and seeds must be nonempty"));
        }
        for d in &self.dims {
            d.validate(self.family)?;
        }
        if let Some(mu) = self.mu.iter().find(|m| !(**m >= 0.0 && m.is_finite())) {
            return Err(CliError::config(format!(
                "μ must be finite and ≥ 0, got {mu}"
            )));
        }
        if self.r.contains(&0) {
            return Err(CliError::config("r must be positive"));
        }
        for arm in self.arms.arms() {
            self.outer_config(arm, 0)
                .validate()
                .map_err(|e| CliError::config(format!("{} arm: {e}", arm.name())))?;
        }
        Ok(())
    }

    /// Solver settings for one cell.
    pub fn outer_config(&self, arm: Arm, seed: u64) -> OuterConfig {
        let base = OuterConfig {
            dual_mode: arm.dual_mode(),
            seed,
            ..OuterConfig::default()
        };
        let per_arm = match arm {
            Arm::Classical => &self.overrides.classical,
            Arm::Damped => &self.overrides.damped,
        };
        per_arm.apply(&self.common.apply(&base))
    }
}
