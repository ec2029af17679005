use std::fs;
use std::path::Path;

use advlin_core::geometry::{normal_direction, strong_perturbation_l2};
use advlin_core::learn::bayes_classifier;
use advlin_core::model::{dot, l2_norm};
use advlin_core::simulate::{stream_rng, MixtureSampler};
use advlin_core::visual::{pgm_bytes, IMAGE_DIM, IMAGE_SIDE};
use advlin_core::{Class, GaussianMixtureSpec, NormOrder};
use rand::Rng;
use rand_distr::StandardNormal;

use super::train_replicate;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::table::Table;

/// Means `+-mu e_c` on the center cell `c` of the 19x19 grid.
pub fn figure1_mixture(mu: f64, sigma: f64) -> CliResult<GaussianMixtureSpec> {
    let center = (IMAGE_SIDE / 2) * IMAGE_SIDE + IMAGE_SIDE / 2;
    let mut plus = vec![0.0; IMAGE_DIM];
    plus[center] = mu;
    let minus = plus.iter().map(|v| -v).collect();
    Ok(GaussianMixtureSpec::new(plus, minus, sigma)?)
}

/// Writes a length-361 vector as a 19x19 PGM.
pub fn render_vector(x: &[f64], path: &Path) -> CliResult<()> {
    let bytes = pgm_bytes(x)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// A clean `+` sample and three perturbations of size `eps` (random,
/// adversarial, strong-adversarial against a trained SVM), each written as a
/// PGM next to the CSV.
pub(super) fn figure1(cfg: &ExperimentConfig) -> CliResult<Table> {
    let mix = figure1_mixture(cfg.mu, cfg.sigma)?;
    let budget = cfg.budget(&mix, cfg.eta_a, cfg.eta_s, NormOrder::L2)?;
    let eps = budget.epsilon();
    let svm = train_replicate(cfg, &mix, 0, 0)?.clf;
    let bayes = bayes_classifier(&mix);

    let mut sampler = MixtureSampler::new(&mix, cfg.seed, 1);
    let mut x = vec![0.0; IMAGE_DIM];
    while sampler.next_into(&mut x) != Class::Plus {}

    let mut rng = stream_rng(cfg.seed, 2);
    let noise: Vec<f64> = (0..IMAGE_DIM).map(|_| rng.sample(StandardNormal)).collect();
    let scale = eps / l2_norm(&noise);
    let random: Vec<f64> = noise.iter().map(|v| v * scale).collect();
    let adversarial: Vec<f64> = normal_direction(&svm).iter().map(|v| -eps * v).collect();
    let strong: Vec<f64> = strong_perturbation_l2(&svm, &mix, &budget)?
        .direction
        .iter()
        .map(|v| -v)
        .collect();

    let mut table = Table::new(&[
        "image",
        "file",
        "svm_label",
        "svm_score",
        "bayes_label",
        "perturbation_l2",
        "signal_component",
    ]);
    let zero = vec![0.0; IMAGE_DIM];
    for (name, v) in [
        ("clean", &zero),
        ("random", &random),
        ("adversarial", &adversarial),
        ("strong", &strong),
    ] {
        let image: Vec<f64> = x.iter().zip(v.iter()).map(|(a, b)| a + b).collect();
        let file = format!("figure1_{name}.pgm");
        render_vector(&image, &cfg.output.join(&file))?;
        let label = |c: Class| if c == Class::Plus { "+" } else { "-" };
        table.push(vec![
            name.into(),
            file.into(),
            label(svm.classify(&image)).into(),
            svm.score(&image).into(),
            label(bayes.classify(&image)).into(),
            l2_norm(v).into(),
            dot(v, mix.signal_direction()).into(),
        ]);
    }
    Ok(table)
}
