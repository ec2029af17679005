#![allow(dead_code)]

use advlin_core::{Class, GaussianMixtureSpec, LinearClassifier, NormOrder, PerturbationBudget};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const ORDERS: [f64; 6] = [1.0, 1.5, 2.0, 3.0, 7.0, f64::INFINITY];

pub fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn random_mixture(rng: &mut ChaCha8Rng, d: usize) -> GaussianMixtureSpec {
    let center = gaussian_vec(rng, d);
    let half = gaussian_vec(rng, d);
    let scale = rng.random_range(0.3..2.0);
    let plus = center.iter().zip(&half).map(|(c, h)| c + scale * h).collect();
    let minus = center.iter().zip(&half).map(|(c, h)| c - scale * h).collect();
    GaussianMixtureSpec::new(plus, minus, rng.random_range(0.5..2.0)).unwrap()
}

/// A classifier tilted away from the signal by a random amount, with a
/// random bias around the midpoint.
pub fn random_classifier(rng: &mut ChaCha8Rng, mix: &GaussianMixtureSpec) -> LinearClassifier {
    let d = mix.dim();
    let noise = gaussian_vec(rng, d);
    let tilt = rng.random_range(0.0..2.0);
    let w: Vec<f64> = mix
        .signal_direction()
        .iter()
        .zip(&noise)
        .map(|(s, n)| s + tilt * n / (d as f64).sqrt())
        .collect();
    let mid: f64 = w.iter().zip(mix.center()).map(|(a, b)| a * b).sum();
    LinearClassifier::new(w, -mid + rng.random_range(-0.5..0.5)).unwrap()
}

pub fn random_order(rng: &mut ChaCha8Rng) -> NormOrder {
    NormOrder::new(ORDERS[rng.random_range(0..ORDERS.len())]).unwrap()
}

pub fn random_budget(rng: &mut ChaCha8Rng, p: NormOrder) -> PerturbationBudget {
    let eps = rng.random_range(0.05..2.5);
    let delta = rng.random_range(0.0..1.2) * eps;
    PerturbationBudget::new(p, eps, Some(delta)).unwrap()
}

pub fn random_label(rng: &mut ChaCha8Rng) -> Class {
    if rng.random::<bool>() {
        Class::Plus
    } else {
        Class::Minus
    }
}
