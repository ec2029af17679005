use advlin_core::geometry::decompose;
use advlin_core::learn::sparsify;
use advlin_core::rates::{
    asymptotic_svm_angle, bayes_rates, closed_form_report, small_bias_rates, AsymptoticAngleParams,
};
use advlin_core::simulate::empirical_rates_on;
use advlin_core::NormOrder;

use super::{error_triple, mean_se, par_map, train_replicate};
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::table::{Cell, Table};

/// Per-replicate outcome at one `eta`.
struct Outcome {
    formula: [f64; 3],
    empirical: [f64; 3],
}

struct ReplicateRun {
    theta: f64,
    b_prime: f64,
    converged: bool,
    by_eta: Vec<Outcome>,
}

fn asymptotic_theta(cfg: &ExperimentConfig, mu: f64) -> CliResult<f64> {
    let params = AsymptoticAngleParams {
        n_train: cfg.n_train,
        d: cfg.d,
        mu,
        sigma: cfg.sigma,
    };
    Ok(asymptotic_svm_angle(&params)?.theta)
}

/// Formula vs simulation over `mu_grid x eta_grid`. Each `(mu, replicate)`
/// trains one SVM, which is then evaluated at every `eta`.
pub(super) fn figure2(cfg: &ExperimentConfig) -> CliResult<Table> {
    let n_mu = cfg.mu_grid.len();
    let reps = cfg.replicates;
    let runs = par_map(n_mu * reps, |k| {
        let (i, r) = (k / reps, k % reps);
        let mix = cfg.mixture(cfg.mu_grid[i])?;
        let trained = train_replicate(cfg, &mix, i, r)?;
        let mut by_eta = Vec::with_capacity(cfg.eta_grid.len());
        for &eta in &cfg.eta_grid {
            let budget = cfg.budget(&mix, eta, eta, NormOrder::L2)?;
            let cf = closed_form_report(&trained.clf, &mix, &budget)?;
            let mc = empirical_rates_on(&trained.clf, &mix, &budget, &trained.test)?;
            by_eta.push(Outcome {
                formula: error_triple(&cf),
                empirical: error_triple(&mc),
            });
        }
        Ok(ReplicateRun {
            theta: decompose(&trained.clf, &mix)?.theta,
            b_prime: trained.clf.centered_bias(&mix)? / trained.clf.weight_norm(),
            converged: trained.converged,
            by_eta,
        })
    })?;

    let mut table = Table::new(&[
        "eta",
        "mu",
        "replicates",
        "theta_mean",
        "b_prime_mean",
        "converged_fraction",
        "formula_p_m",
        "formula_p_err",
        "formula_p_s_err",
        "empirical_p_m",
        "empirical_p_err",
        "empirical_p_s_err",
        "empirical_se_p_m",
        "empirical_se_p_err",
        "empirical_se_p_s_err",
        "asymptotic_theta",
        "asymptotic_p_m",
        "asymptotic_p_err",
        "asymptotic_p_s_err",
        "bayes_p_m",
        "bayes_p_err",
        "bayes_p_s_err",
    ]);
    let thetas: Vec<f64> = cfg
        .mu_grid
        .iter()
        .map(|&mu| asymptotic_theta(cfg, mu))
        .collect::<CliResult<_>>()?;
    for (e, &eta) in cfg.eta_grid.iter().enumerate() {
        for (i, &mu) in cfg.mu_grid.iter().enumerate() {
            let group = &runs[i * reps..(i + 1) * reps];
            let mix = cfg.mixture(mu)?;
            let budget = cfg.budget(&mix, eta, eta, NormOrder::L2)?;
            let (eps, delta) = (budget.epsilon(), budget.delta().unwrap_or(0.0));
            let asym = error_triple(&small_bias_rates(&mix, thetas[i], eps, delta)?);
            let bayes = error_triple(&bayes_rates(&mix, eps, delta)?);
            let mut row: Vec<Cell> = vec![
                eta.into(),
                mu.into(),
                reps.into(),
                mean_se(group.iter().map(|g| g.theta)).mean.into(),
                mean_se(group.iter().map(|g| g.b_prime)).mean.into(),
                (group.iter().filter(|g| g.converged).count() as f64 / reps as f64).into(),
            ];
            for j in 0..3 {
                row.push(mean_se(group.iter().map(|g| g.by_eta[e].formula[j])).mean.into());
            }
            let empirical: Vec<_> = (0..3)
                .map(|j| mean_se(group.iter().map(|g| g.by_eta[e].empirical[j])))
                .collect();
            row.extend(empirical.iter().map(|m| Cell::from(m.mean)));
            row.extend(empirical.iter().map(|m| Cell::from(m.se)));
            row.push(thetas[i].into());
            row.extend(asym.iter().map(|&v| Cell::from(v)));
            row.extend(bayes.iter().map(|&v| Cell::from(v)));
            table.push(row);
        }
    }
    Ok(table)
}

/// The three panels of the small-bias comparison: the SVM at its asymptotic
/// angle vs `mu`, the Bayes classifier vs `mu`, and an unbiased classifier vs
/// `cos(theta)` at `mu`.
pub(super) fn figure3(cfg: &ExperimentConfig) -> CliResult<Table> {
    let mut table = Table::new(&["panel", "x", "theta", "p_m", "p_err", "p_s_err"]);
    let push = |table: &mut Table, panel: &str, x: f64, theta: f64, r: [f64; 3]| {
        table.push(vec![
            panel.into(),
            x.into(),
            theta.into(),
            r[0].into(),
            r[1].into(),
            r[2].into(),
        ]);
    };
    for &mu in &cfg.mu_grid {
        let mix = cfg.mixture(mu)?;
        let budget = cfg.budget(&mix, cfg.eta_a, cfg.eta_s, NormOrder::L2)?;
        let (eps, delta) = (budget.epsilon(), budget.delta().unwrap_or(0.0));
        let theta = asymptotic_theta(cfg, mu)?;
        push(&mut table, "svm_vs_mu", mu, theta, error_triple(&small_bias_rates(&mix, theta, eps, delta)?));
        push(&mut table, "bayes_vs_mu", mu, 0.0, error_triple(&bayes_rates(&mix, eps, delta)?));
    }
    let mix = cfg.mixture(cfg.mu)?;
    let budget = cfg.budget(&mix, cfg.eta_a, cfg.eta_s, NormOrder::L2)?;
    let (eps, delta) = (budget.epsilon(), budget.delta().unwrap_or(0.0));
    let steps = 200;
    for k in 0..=steps {
        let cos = k as f64 / steps as f64;
        let theta = cos.acos();
        let r = small_bias_rates(&mix, theta, eps, delta)?;
        push(&mut table, "unbiased_vs_cos_theta", cos, theta, error_triple(&r));
    }
    Ok(table)
}

/// Sparse-SVM defense: the SVM, its top-`sparsity` truncation and the Bayes
/// rule, averaged over replicates for every `mu` in `mu_grid`.
pub(super) fn figure4(cfg: &ExperimentConfig) -> CliResult<Table> {
    let n_mu = cfg.mu_grid.len();
    let reps = cfg.replicates;
    let runs = par_map(n_mu * reps, |k| {
        let (i, r) = (k / reps, k % reps);
        let mix = cfg.mixture(cfg.mu_grid[i])?;
        let budget = cfg.budget(&mix, cfg.eta_a, cfg.eta_s, NormOrder::L2)?;
        let trained = train_replicate(cfg, &mix, i, r)?;
        let sparse = sparsify(&trained.clf, cfg.sparsity)?;
        Ok((
            error_triple(&closed_form_report(&trained.clf, &mix, &budget)?),
            error_triple(&closed_form_report(&sparse, &mix, &budget)?),
            error_triple(&empirical_rates_on(&sparse, &mix, &budget, &trained.test)?),
        ))
    })?;
    let mut table = Table::new(&[
        "mu",
        "replicates",
        "layout",
        "sparsity",
        "svm_p_m",
        "svm_p_err",
        "svm_p_s_err",
        "sparse_p_m",
        "sparse_p_err",
        "sparse_p_s_err",
        "sparse_empirical_p_s_err",
        "sparse_empirical_se_p_s_err",
        "bayes_p_m",
        "bayes_p_err",
        "bayes_p_s_err",
    ]);
    let layout = serde_json::to_value(cfg.mean_layout)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    for (i, &mu) in cfg.mu_grid.iter().enumerate() {
        let group = &runs[i * reps..(i + 1) * reps];
        let mix = cfg.mixture(mu)?;
        let budget = cfg.budget(&mix, cfg.eta_a, cfg.eta_s, NormOrder::L2)?;
        let bayes = error_triple(&bayes_rates(&mix, budget.epsilon(), budget.delta().unwrap_or(0.0))?);
        let mut row: Vec<Cell> = vec![mu.into(), reps.into(), layout.clone().into(), cfg.sparsity.into()];
        for j in 0..3 {
            row.push(mean_se(group.iter().map(|g| g.0[j])).mean.into());
        }
        for j in 0..3 {
            row.push(mean_se(group.iter().map(|g| g.1[j])).mean.into());
        }
        let emp = mean_se(group.iter().map(|g| g.2[2]));
        row.push(emp.mean.into());
        row.push(emp.se.into());
        row.extend(bayes.iter().map(|&v| Cell::from(v)));
        table.push(row);
    }
    Ok(table)
}
