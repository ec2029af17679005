use advlin_core::numerics::abs_moment;
use advlin_core::rates::required_snr_order;
use advlin_core::simulate::{empirical_linf_noise, empirical_lp_noise};
use advlin_core::NormOrder;

use super::par_map;
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::table::Table;

/// Noise norms over `p_grid x d_grid`. Finite `p` compares the mean of
/// `||x||_p^p` with `m_p d sigma^p`; `p = inf` compares the mean of `||x||_inf`
/// with `sigma sqrt(log d)`.
pub(super) fn lp_noise(cfg: &ExperimentConfig) -> CliResult<Table> {
    let grid: Vec<(NormOrder, usize)> = cfg
        .p_grid
        .iter()
        .flat_map(|&p| cfg.d_grid.iter().map(move |&d| (p, d)))
        .collect();
    let rows = par_map(grid.len(), |k| {
        let (p, d) = grid[k];
        let seed = cfg.seed.wrapping_add(k as u64);
        let (statistic, empirical, theory) = match p {
            NormOrder::Finite(pv) => (
                "mean_norm_pow_p",
                empirical_lp_noise(p, d, cfg.sigma, cfg.n_mc, seed)?,
                abs_moment(pv)? * d as f64 * cfg.sigma.powf(pv),
            ),
            NormOrder::Infinity => (
                "mean_max_abs",
                empirical_linf_noise(d, cfg.sigma, cfg.n_mc, seed)?,
                cfg.sigma * (d as f64).ln().sqrt(),
            ),
        };
        Ok((p, d, statistic, empirical, theory))
    })?;
    let mut table = Table::new(&[
        "p",
        "d",
        "n",
        "statistic",
        "empirical",
        "reference",
        "ratio",
        "required_snr_order",
    ]);
    for (p, d, statistic, empirical, theory) in rows {
        table.push(vec![
            p.to_string().into(),
            d.into(),
            cfg.n_mc.into(),
            statistic.into(),
            empirical.into(),
            theory.into(),
            (empirical / theory).into(),
            required_snr_order(p, d).into(),
        ]);
    }
    Ok(table)
}
