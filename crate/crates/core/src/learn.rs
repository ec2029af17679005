//! Linear soft-margin SVM, the Bayes rule, and top-k weight sparsification.

use log::warn;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dot, Class, GaussianMixtureSpec, LinearClassifier};
use crate::simulate::{stream_rng, LabeledDataset};

/// Hyperparameters of the dual coordinate descent trainer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// Soft-margin penalty.
    pub c: f64,
    /// Bound on the projected-gradient spread at termination.
    pub tol: f64,
    pub max_epochs: usize,
    /// Seeds the per-epoch coordinate order.
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            tol: 1e-4,
            max_epochs: 1000,
            seed: 0,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::Domain(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Domain(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_epochs == 0 {
            return Err(Error::Domain("max_epochs must be positive".into()));
        }
        Ok(())
    }
}

/// A trained SVM and its optimization record.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmFit {
    pub classifier: LinearClassifier,
    /// False when `max_epochs` ran out before the tolerance was met.
    pub converged: bool,
    pub epochs: usize,
    /// Dual variables, one per training point, each in `[0, C]`.
    pub alphas: Vec<f64>,
    /// Dual objective `0.5 ||w||^2 - sum(alpha)` after each epoch.
    pub dual_objective: Vec<f64>,
}

/// `0.5 ||(w, b)||^2 + C sum max(0, 1 - y (w . x + b))`, the objective the
/// trainer minimizes (the bias is regularized through the constant feature).
pub fn primal_objective(clf: &LinearClassifier, data: &LabeledDataset, c: f64) -> f64 {
    let reg = 0.5 * (dot(clf.weights(), clf.weights()) + clf.bias() * clf.bias());
    let hinge: f64 = data
        .iter()
        .map(|(x, y)| (1.0 - y.sign() * clf.score(x)).max(0.0))
        .sum();
    reg + c * hinge
}

/// Trains an L1-loss linear SVM by dual coordinate descent with shrinking.
/// The bias is learned as the weight of an appended constant feature.
pub fn train_svm(data: &LabeledDataset, cfg: &SvmConfig) -> Result<SvmFit> {
    cfg.validate()?;
    let has_plus = data.labels().contains(&Class::Plus);
    let has_minus = data.labels().contains(&Class::Minus);
    if !(has_plus && has_minus) {
        return Err(Error::Domain("training data must contain both classes".into()));
    }
    let n = data.len();
    let d = data.dim();
    let c = cfg.c;
    let y: Vec<f64> = data.labels().iter().map(|l| l.sign()).collect();
    let q_diag: Vec<f64> = (0..n)
        .map(|i| dot(data.point(i), data.point(i)) + 1.0)
        .collect();

    // w[d] is the bias weight.
    let mut w = vec![0.0; d + 1];
    let mut alpha = vec![0.0; n];
    let mut rng = stream_rng(cfg.seed, 0);
    let mut active: Vec<usize> = (0..n).collect();
    let mut upper_old = f64::INFINITY;
    let mut lower_old = f64::NEG_INFINITY;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut epochs = 0;

    while epochs < cfg.max_epochs {
        epochs += 1;
        active.shuffle(&mut rng);
        let mut upper = f64::NEG_INFINITY;
        let mut lower = f64::INFINITY;
        let mut s = 0;
        while s < active.len() {
            let i = active[s];
            let x = data.point(i);
            let g = y[i] * (dot(&w[..d], x) + w[d]) - 1.0;
            let pg = if alpha[i] == 0.0 {
                if g > upper_old {
                    active.swap_remove(s);
                    continue;
                }
                g.min(0.0)
            } else if alpha[i] == c {
                if g < lower_old {
                    active.swap_remove(s);
                    continue;
                }
                g.max(0.0)
            } else {
                g
            };
            upper = upper.max(pg);
            lower = lower.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / q_diag[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * y[i];
                for (wj, xj) in w[..d].iter_mut().zip(x) {
                    *wj += step * xj;
                }
                w[d] += step;
            }
            s += 1;
        }
        trace.push(0.5 * dot(&w, &w) - alpha.iter().sum::<f64>());

        if upper - lower < cfg.tol {
            if active.len() == n {
                converged = true;
                break;
            }
            active = (0..n).collect();
            upper_old = f64::INFINITY;
            lower_old = f64::NEG_INFINITY;
            continue;
        }
        upper_old = if upper > 0.0 { upper } else { f64::INFINITY };
        lower_old = if lower < 0.0 { lower } else { f64::NEG_INFINITY };
    }
    if !converged {
        warn!("SVM training stopped after {epochs} epochs without meeting tol {}", cfg.tol);
    }
    let b = w.pop().expect("bias weight");
    let classifier = LinearClassifier::new(w, b)
        .map_err(|_| Error::Numerical("SVM produced a zero weight vector".into()))?;
    Ok(SvmFit {
        classifier,
        converged,
        epochs,
        alphas: alpha,
        dual_objective: trace,
    })
}

/// The optimal rule `mu . (x - center) > 0`.
pub fn bayes_classifier(mix: &GaussianMixtureSpec) -> LinearClassifier {
    let w = mix.signal().to_vec();
    let b = -dot(&w, mix.center());
    LinearClassifier::new(w, b).expect("mixture means are distinct")
}

/// Keeps the `k` largest-magnitude weights (lowest index wins ties) and zeroes
/// the rest. The bias is unchanged.
pub fn sparsify(clf: &LinearClassifier, k: usize) -> Result<LinearClassifier> {
    let w = clf.weights();
    if k == 0 || k > w.len() {
        return Err(Error::Domain(format!("k must lie in 1..={}, got {k}", w.len())));
    }
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[b].abs().total_cmp(&w[a].abs()).then(a.cmp(&b)));
    let mut kept = vec![0.0; w.len()];
    for &i in &order[..k] {
        kept[i] = w[i];
    }
    LinearClassifier::new(kept, clf.bias())
        .map_err(|_| Error::Domain("sparsified weight vector is zero".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::decompose;
    use crate::model::MeanLayout;
    use crate::numerics::phi;
    use crate::rates::misclassification_rate;
    use crate::simulate::sample;

    #[test]
    fn symmetric_pair() {
        let data = LabeledDataset::from_rows(
            vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
            vec![Class::Plus, Class::Minus],
        )
        .unwrap();
        let cfg = SvmConfig { c: 1e3, ..SvmConfig::default() };
        let fit = train_svm(&data, &cfg).unwrap();
        assert!(fit.converged);
        let clf = &fit.classifier;
        assert!(clf.weights()[0] > 0.0);
        assert!(clf.weights()[1].abs() < 1e-9);
        assert!(clf.bias().abs() < 1e-6);
        assert_eq!(clf.classify(&[1.0, 0.0]), Class::Plus);
        assert_eq!(clf.classify(&[-1.0, 0.0]), Class::Minus);
    }

    #[test]
    fn rejects_single_class() {
        let data = LabeledDataset::from_rows(vec![vec![1.0], vec![2.0]], vec![Class::Plus; 2]).unwrap();
        assert!(matches!(train_svm(&data, &SvmConfig::default()), Err(Error::Domain(_))));
        let bad = SvmConfig { c: 0.0, ..SvmConfig::default() };
        let ok = LabeledDataset::from_rows(vec![vec![1.0], vec![-1.0]], vec![Class::Plus, Class::Minus]).unwrap();
        assert!(train_svm(&ok, &bad).is_err());
    }

    #[test]
    fn dual_decreases_and_stays_feasible() {
        let m = GaussianMixtureSpec::symmetric(MeanLayout::Axis, 1.0, 20, 1.0).unwrap();
        let data = sample(&m, 800, 5).unwrap();
        let cfg = SvmConfig::default();
        let fit = train_svm(&data, &cfg).unwrap();
        for pair in fit.dual_objective.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9, "{pair:?}");
        }
        assert!(fit.alphas.iter().all(|a| (0.0..=cfg.c).contains(a)));
        // Weak duality: primal >= -dual; the gap is small at convergence.
        let primal = primal_objective(&fit.classifier, &data, cfg.c);
        let dual = -fit.dual_objective.last().unwrap();
        assert!(primal >= dual - 1e-9);
        assert!((primal - dual) / primal < 1e-2, "{primal} vs {dual}");
    }

    #[test]
    fn training_is_deterministic() {
        let m = GaussianMixtureSpec::symmetric(MeanLayout::Axis, 2.0, 10, 1.0).unwrap();
        let data = sample(&m, 300, 1).unwrap();
        let cfg = SvmConfig { seed: 9, ..SvmConfig::default() };
        assert_eq!(train_svm(&data, &cfg).unwrap(), train_svm(&data, &cfg).unwrap());
    }

    #[test]
    fn symmetric_mixture_gives_small_centered_bias() {
        let m = GaussianMixtureSpec::symmetric(MeanLayout::Axis, 3.0, 50, 1.0).unwrap();
        let data = sample(&m, 4000, 2).unwrap();
        let clf = train_svm(&data, &SvmConfig::default()).unwrap().classifier;
        let b_prime = clf.centered_bias(&m).unwrap() / clf.weight_norm();
        assert!(b_prime.abs() < 0.1, "{b_prime}");
    }

    #[test]
    fn feature_permutation_preserves_predictions() {
        let m = GaussianMixtureSpec::new(vec![1.0, 0.5, -0.3, 0.0], vec![-1.0, 0.0, 0.3, 0.2], 1.0).unwrap();
        let data = sample(&m, 400, 4).unwrap();
        let perm = [2usize, 0, 3, 1];
        let permute = |x: &[f64]| perm.iter().map(|&j| x[j]).collect::<Vec<f64>>();
        let rows: Vec<Vec<f64>> = data.iter().map(|(x, _)| permute(x)).collect();
        let permuted = LabeledDataset::from_rows(rows, data.labels().to_vec()).unwrap();
        let cfg = SvmConfig::default();
        let a = train_svm(&data, &cfg).unwrap().classifier;
        let b = train_svm(&permuted, &cfg).unwrap().classifier;
        let test = sample(&m, 500, 8).unwrap();
        let agree = test.iter().filter(|(x, _)| a.classify(x) == b.classify(&permute(x))).count();
        assert!(agree >= 498, "{agree}");
        for (j, &src) in perm.iter().enumerate() {
            assert!((b.weights()[j] - a.weights()[src]).abs() < 1e-2);
        }
    }

    #[test]
    fn bayes_rule() {
        let m = GaussianMixtureSpec::symmetric(MeanLayout::Uniform, 3.0, 9, 1.0).unwrap();
        let clf = bayes_classifier(&m);
        assert_eq!(clf.bias(), 0.0);
        assert_eq!(decompose(&clf, &m).unwrap().theta, 0.0);
        let pm = misclassification_rate(&clf, &m).unwrap().value();
        assert!((pm - (1.0 - phi(3.0))).abs() < 1e-15);

        let shifted = GaussianMixtureSpec::new(vec![3.0, 1.0], vec![1.0, 1.0], 1.0).unwrap();
        let clf = bayes_classifier(&shifted);
        assert_eq!(clf.weights(), &[1.0, 0.0]);
        assert_eq!(clf.bias(), -2.0);
        assert_eq!(clf.centered_bias(&shifted).unwrap(), 0.0);
    }

    #[test]
    fn sparsify_examples() {
        let clf = LinearClassifier::new(vec![5.0, 1.0, -3.0], 0.7).unwrap();
        assert_eq!(sparsify(&clf, 1).unwrap().weights(), &[5.0, 0.0, 0.0]);
        assert_eq!(sparsify(&clf, 2).unwrap().weights(), &[5.0, 0.0, -3.0]);
        assert_eq!(sparsify(&clf, 3).unwrap(), clf);
        assert_eq!(sparsify(&clf, 1).unwrap().bias(), 0.7);
        let tied = LinearClassifier::new(vec![-2.0, 2.0, 2.0], 0.0).unwrap();
        assert_eq!(sparsify(&tied, 2).unwrap().weights(), &[-2.0, 2.0, 0.0]);
        assert!(sparsify(&clf, 0).is_err());
        assert!(sparsify(&clf, 4).is_err());
    }

    proptest::proptest! {
        #[test]
        fn sparsify_keeps_exactly_k(
            w in proptest::collection::vec(0.1f64..5.0, 1..12),
            signs in proptest::collection::vec(proptest::bool::ANY, 12),
            k_frac in 0.0f64..1.0,
        ) {
            let w: Vec<f64> = w.iter().zip(&signs).map(|(v, s)| if *s { *v } else { -v }).collect();
            let k = 1 + ((w.len() - 1) as f64 * k_frac) as usize;
            let clf = LinearClassifier::new(w.clone(), 0.0).unwrap();
            let s = sparsify(&clf, k).unwrap();
            let zeros = s.weights().iter().filter(|v| **v == 0.0).count();
            proptest::prop_assert_eq!(zeros, w.len() - k);
            for (a, b) in s.weights().iter().zip(&w) {
                proptest::prop_assert!(*a == 0.0 || a.to_bits() == b.to_bits());
            }
        }
    }
}
