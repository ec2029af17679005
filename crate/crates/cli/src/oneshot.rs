use advlin_core::learn::{bayes_classifier, train_svm, SvmConfig};
use advlin_core::rates::closed_form_report;
use advlin_core::simulate::{empirical_rates, sample};
use advlin_core::{GaussianMixtureSpec, MeanLayout, NormOrder, PerturbationBudget, RateReport};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Bayes,
    Svm,
}

impl std::str::FromStr for ClassifierKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "bayes" => Ok(ClassifierKind::Bayes),
            "svm" => Ok(ClassifierKind::Svm),
            other => Err(CliError::Config(format!("unknown classifier '{other}'"))),
        }
    }
}

/// A single rate query.
#[derive(Debug, Clone, PartialEq)]
pub struct RateQuery {
    pub mu: f64,
    pub eta_a: f64,
    pub eta_s: f64,
    pub p: NormOrder,
    pub d: usize,
    pub sigma: f64,
    pub layout: MeanLayout,
    pub classifier: ClassifierKind,
    pub n_train: usize,
    /// Draws for a Monte Carlo report; closed form when `None`.
    pub monte_carlo: Option<usize>,
    pub seed: u64,
}

impl Default for RateQuery {
    fn default() -> Self {
        RateQuery {
            mu: 4.0,
            eta_a: 0.3,
            eta_s: 0.3,
            p: NormOrder::L2,
            d: 361,
            sigma: 1.0,
            layout: MeanLayout::Axis,
            classifier: ClassifierKind::Bayes,
            n_train: 4000,
            monte_carlo: None,
            seed: 1,
        }
    }
}

pub fn rate_report(q: &RateQuery) -> CliResult<RateReport> {
    if !(q.eta_a >= 0.0 && q.eta_s >= 0.0) {
        return Err(CliError::Config("eta values must be >= 0".into()));
    }
    let mix = GaussianMixtureSpec::symmetric(q.layout, q.mu, q.d, q.sigma)?;
    let budget = PerturbationBudget::from_eta(&mix, q.eta_a, q.eta_s, q.p)?;
    let clf = match q.classifier {
        ClassifierKind::Bayes => bayes_classifier(&mix),
        ClassifierKind::Svm => {
            let data = sample(&mix, q.n_train, q.seed)?;
            train_svm(&data, &SvmConfig { seed: q.seed, ..SvmConfig::default() })?.classifier
        }
    };
    Ok(match q.monte_carlo {
        Some(n) => empirical_rates(&clf, &mix, &budget, n, q.seed.wrapping_add(1))?,
        None => closed_form_report(&clf, &mix, &budget)?,
    })
}
