use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use advlin_core::learn::SvmConfig;
use advlin_core::{GaussianMixtureSpec, MeanLayout, NormOrder, PerturbationBudget};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Rates,
    Sweep,
    Figure2,
    Figure3,
    Figure4,
    LpNoise,
    Image,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Rates,
        Scenario::Sweep,
        Scenario::Figure2,
        Scenario::Figure3,
        Scenario::Figure4,
        Scenario::LpNoise,
        Scenario::Image,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Rates => "rates",
            Scenario::Sweep => "sweep",
            Scenario::Figure2 => "figure2",
            Scenario::Figure3 => "figure3",
            Scenario::Figure4 => "figure4",
            Scenario::LpNoise => "lp_noise",
            Scenario::Image => "image",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown scenario '{s}'")))
    }
}

fn default_mu_grid() -> Vec<f64> {
    (1..=10).map(|k| 0.5 * k as f64).collect()
}

/// One experiment. Every field except `scenario` has a default, so a config
/// file may be as small as `{"scenario": "figure2"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,

    /// Signal norm `||mu||` for single-mixture scenarios.
    pub mu: f64,
    /// Signal norms swept by the figure and rates scenarios.
    pub mu_grid: Vec<f64>,
    pub d: usize,
    pub sigma: f64,
    pub mean_layout: MeanLayout,

    /// `eps = eta_a sqrt(d) sigma`.
    pub eta_a: f64,
    /// `delta = eta_s ||mu||`.
    pub eta_s: f64,
    /// Values of `eta = eta_a = eta_s` swept by the figure scenarios.
    pub eta_grid: Vec<f64>,
    pub p: NormOrder,
    pub p_grid: Vec<NormOrder>,
    /// Dimensions swept by `lp_noise`.
    pub d_grid: Vec<usize>,

    pub n_train: usize,
    pub n_test: usize,
    /// Monte Carlo draws for closed-form checks and noise moments.
    pub n_mc: usize,
    pub replicates: usize,
    pub seed: u64,

    /// Retained weights of the sparse SVM.
    pub sparsity: usize,
    pub svm: SvmConfig,

    /// Output directory.
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: Scenario::Rates,
            mu: 4.0,
            mu_grid: default_mu_grid(),
            d: 361,
            sigma: 1.0,
            mean_layout: MeanLayout::Axis,
            eta_a: 0.3,
            eta_s: 0.3,
            eta_grid: vec![0.05, 0.1, 0.3],
            p: NormOrder::L2,
            p_grid: vec![
                NormOrder::L1,
                NormOrder::Finite(1.5),
                NormOrder::L2,
                NormOrder::Finite(3.0),
                NormOrder::Infinity,
            ],
            d_grid: vec![100, 361, 1000, 10_000],
            n_train: 4000,
            n_test: 1000,
            n_mc: 100_000,
            replicates: 50,
            seed: 20_190_101,
            sparsity: 10,
            svm: SvmConfig::default(),
            output: PathBuf::from("out"),
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        ensure(self.replicates >= 1, || "replicates must be >= 1".into())?;
        ensure(self.d >= 1, || "d must be >= 1".into())?;
        ensure(positive(self.sigma), || format!("sigma must be positive, got {}", self.sigma))?;
        ensure(positive(self.mu), || format!("mu must be positive, got {}", self.mu))?;
        ensure(!self.mu_grid.is_empty() && self.mu_grid.iter().all(|&m| positive(m)), || {
            "mu_grid must be a nonempty list of positive values".into()
        })?;
        ensure(nonneg(self.eta_a) && nonneg(self.eta_s), || "eta values must be >= 0".into())?;
        ensure(!self.eta_grid.is_empty() && self.eta_grid.iter().all(|&e| nonneg(e)), || {
            "eta_grid must be a nonempty list of values >= 0".into()
        })?;
        ensure(!self.p_grid.is_empty(), || "p_grid must not be empty".into())?;
        ensure(!self.d_grid.is_empty() && self.d_grid.iter().all(|&d| d >= 1), || {
            "d_grid must be a nonempty list of positive dimensions".into()
        })?;
        ensure(self.n_train >= 2 && self.n_test >= 1 && self.n_mc >= 1, || {
            "n_train must be >= 2 and n_test, n_mc >= 1".into()
        })?;
        ensure(self.sparsity >= 1 && self.sparsity <= self.d, || {
            format!("sparsity must lie in 1..={}", self.d)
        })?;
        self.svm.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.scenario == Scenario::Image {
            ensure(self.d == advlin_core::visual::IMAGE_DIM, || {
                format!("image scenario needs d = 361, got {}", self.d)
            })?;
        }
        Ok(())
    }

    pub fn mixture(&self, mu: f64) -> CliResult<GaussianMixtureSpec> {
        Ok(GaussianMixtureSpec::symmetric(self.mean_layout, mu, self.d, self.sigma)?)
    }

    pub fn budget(&self, mix: &GaussianMixtureSpec, eta_a: f64, eta_s: f64, p: NormOrder) -> CliResult<PerturbationBudget> {
        Ok(PerturbationBudget::from_eta(mix, eta_a, eta_s, p)?)
    }

    pub fn csv_path(&self) -> PathBuf {
        self.output.join(format!("{}.csv", self.scenario))
    }
}
