use advlin_core::geometry::decompose;
use advlin_core::learn::bayes_classifier;
use advlin_core::rates::closed_form_report;
use advlin_core::simulate::count_statuses_streamed;
use advlin_core::{GaussianMixtureSpec, LinearClassifier, NormOrder, PerturbationBudget, RateReport};

use super::{par_map, stream_key, train_replicate, EVAL_STREAM};
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::table::{Cell, Table};

const RATE_COLUMNS: [&str; 21] = [
    "classifier",
    "theta",
    "b_prime",
    "cf_p_m",
    "cf_p_adv",
    "cf_p_err",
    "cf_p_s_adv",
    "cf_p_s_err",
    "mc_p_m",
    "mc_p_adv",
    "mc_p_err",
    "mc_p_s_adv",
    "mc_p_s_err",
    "mc_se_p_m",
    "mc_se_p_adv",
    "mc_se_p_err",
    "mc_se_p_s_adv",
    "mc_se_p_s_err",
    "mc_n",
    "epsilon",
    "delta",
];

fn header<'a>(lead: &[&'a str]) -> Vec<&'a str> {
    let mut h = lead.to_vec();
    h.extend(RATE_COLUMNS);
    h
}

struct RateRow {
    classifier: &'static str,
    theta: f64,
    b_prime: f64,
    cf: RateReport,
    mc: RateReport,
    epsilon: f64,
    delta: f64,
}

impl RateRow {
    fn cells(self) -> Vec<Cell> {
        let se = self.mc.std_err.expect("Monte Carlo report carries standard errors");
        let opt = |p: Option<advlin_core::Probability>| p.map_or(f64::NAN, |p| p.value());
        vec![
            self.classifier.into(),
            self.theta.into(),
            self.b_prime.into(),
            self.cf.p_m.value().into(),
            self.cf.p_adv.value().into(),
            self.cf.p_err.value().into(),
            opt(self.cf.p_s_adv).into(),
            opt(self.cf.p_s_err).into(),
            self.mc.p_m.value().into(),
            self.mc.p_adv.value().into(),
            self.mc.p_err.value().into(),
            opt(self.mc.p_s_adv).into(),
            opt(self.mc.p_s_err).into(),
            se.p_m.into(),
            se.p_adv.into(),
            se.p_err.into(),
            se.p_s_adv.unwrap_or(f64::NAN).into(),
            se.p_s_err.unwrap_or(f64::NAN).into(),
            self.mc.n_samples.unwrap_or(0).into(),
            self.epsilon.into(),
            self.delta.into(),
        ]
    }
}

fn evaluate(
    cfg: &ExperimentConfig,
    name: &'static str,
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    budget: &PerturbationBudget,
    stream: u64,
) -> CliResult<RateRow> {
    let cf = closed_form_report(clf, mix, budget)?;
    let counts = count_statuses_streamed(clf, mix, budget, cfg.n_mc, cfg.seed, stream)?;
    let mc = RateReport::from_counts(&counts, budget.delta().is_some())?;
    Ok(RateRow {
        classifier: name,
        theta: decompose(clf, mix)?.theta,
        b_prime: clf.centered_bias(mix)? / clf.weight_norm(),
        cf,
        mc,
        epsilon: budget.epsilon(),
        delta: budget.delta().unwrap_or(f64::NAN),
    })
}

/// Bayes and trained-SVM classifiers, one row each per `mu` in `mu_grid`, at
/// the configured `(eta_a, eta_s, p)`.
pub(super) fn rates(cfg: &ExperimentConfig) -> CliResult<Table> {
    let rows = par_map(cfg.mu_grid.len(), |i| {
        let mu = cfg.mu_grid[i];
        let mix = cfg.mixture(mu)?;
        let budget = cfg.budget(&mix, cfg.eta_a, cfg.eta_s, cfg.p)?;
        let svm = train_replicate(cfg, &mix, i, 0)?.clf;
        let bayes = bayes_classifier(&mix);
        Ok(vec![
            (mu, evaluate(cfg, "bayes", &bayes, &mix, &budget, stream_key(i, EVAL_STREAM))?),
            (mu, evaluate(cfg, "svm", &svm, &mix, &budget, stream_key(i, EVAL_STREAM + 1))?),
        ])
    })?;
    let mut table = Table::new(&header(&["mu", "p"]));
    for (mu, row) in rows.into_iter().flatten() {
        let mut cells: Vec<Cell> = vec![mu.into(), cfg.p.to_string().into()];
        cells.extend(row.cells());
        table.push(cells);
    }
    Ok(table)
}

/// Rates over `p_grid x eta_grid` at `mu`, with `eta_a = eta_s = eta`.
pub(super) fn sweep(cfg: &ExperimentConfig) -> CliResult<Table> {
    let mix = cfg.mixture(cfg.mu)?;
    let svm = train_replicate(cfg, &mix, 0, 0)?.clf;
    let bayes = bayes_classifier(&mix);
    let grid: Vec<(NormOrder, f64)> = cfg
        .p_grid
        .iter()
        .flat_map(|&p| cfg.eta_grid.iter().map(move |&eta| (p, eta)))
        .collect();
    let rows = par_map(grid.len(), |k| {
        let (p, eta) = grid[k];
        let budget = cfg.budget(&mix, eta, eta, p)?;
        let a = evaluate(cfg, "bayes", &bayes, &mix, &budget, stream_key(k, EVAL_STREAM))?;
        let b = evaluate(cfg, "svm", &svm, &mix, &budget, stream_key(k, EVAL_STREAM + 1))?;
        Ok([(p, eta, a), (p, eta, b)])
    })?;
    let mut table = Table::new(&header(&["mu", "p", "eta"]));
    for (p, eta, row) in rows.into_iter().flatten() {
        let mut cells: Vec<Cell> = vec![cfg.mu.into(), p.to_string().into(), eta.into()];
        cells.extend(row.cells());
        table.push(cells);
    }
    Ok(table)
}
