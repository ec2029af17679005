//! Optimal perturbations for linear classifiers and per-point membership in
//! the adversarial and strong-adversarial defining sets.
//!
//! A point `x` has an adversarial example inside a symmetric convex budget
//! set `D` iff one of `x + v*` or `x - v*` changes class, where `v*`
//! maximizes `w . v` over `D`. Everything here reduces to computing `v*`:
//!
//! * plain lp ball: the Hoelder-dual direction `sgn(w_i) (|w_i| / ||w||_q)^(q-1)`;
//! * l2 ball cut by the slab `|v . mu0| <= delta`: the closed form
//!   `beta mu0 + sqrt(eps^2 - beta^2) n0` with `beta = min(eps cos(theta), delta)`;
//! * general lp ball cut by the slab: Lagrangian relaxation of the slab
//!   constraint, bisecting the multiplier until the slab is met with equality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::model::{
    dot, l2_norm, lp_norm, Class, GaussianMixtureSpec, LinearClassifier, NormOrder, Perturbation,
    PerturbationBudget,
};

/// Slack allowed on budget constraints of returned perturbations.
pub const FEASIBILITY_SLACK: f64 = 1e-9;
/// Relative duality gap accepted from the lp strong-perturbation solver.
pub const OBJECTIVE_TOLERANCE: f64 = 1e-8;
/// Iteration cap of the multiplier bisection.
pub const MAX_BISECTION_STEPS: usize = 200;

/// `||n|| / ||w||` below which the classifier counts as parallel to the signal.
const PARALLEL_TOLERANCE: f64 = 1e-12;

/// Unit normal of the decision boundary, `w / ||w||_2`.
pub fn normal_direction(clf: &LinearClassifier) -> Vec<f64> {
    let norm = clf.weight_norm();
    clf.weights().iter().map(|w| w / norm).collect()
}

/// `v0 = cos(theta) mu0 + sin(theta) n0`, with `mu0` oriented so that
/// `theta` lies in `[0, pi/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleDecomposition {
    pub theta: f64,
    /// Unit vector orthogonal to `mu0` in `span{mu0, w}`; absent when `theta = 0`.
    pub n0: Option<Vec<f64>>,
    /// Signal direction after orientation (`w . mu0 >= 0`).
    pub mu0: Vec<f64>,
    /// Whether `mu0` was negated relative to the mixture's signal direction.
    pub flipped: bool,
}

impl AngleDecomposition {
    pub fn cos_theta(&self) -> f64 {
        self.theta.cos()
    }

    pub fn sin_theta(&self) -> f64 {
        self.theta.sin()
    }
}

pub fn decompose(clf: &LinearClassifier, mix: &GaussianMixtureSpec) -> Result<AngleDecomposition> {
    clf.check_dim(mix)?;
    let v0 = normal_direction(clf);
    let mut mu0 = mix.signal_direction().to_vec();
    let mut along = dot(&v0, &mu0);
    let flipped = along < 0.0;
    if flipped {
        mu0.iter_mut().for_each(|m| *m = -*m);
        along = -along;
    }
    let n: Vec<f64> = v0.iter().zip(&mu0).map(|(v, m)| v - along * m).collect();
    let n_norm = l2_norm(&n);
    if n_norm <= PARALLEL_TOLERANCE {
        return Ok(AngleDecomposition {
            theta: 0.0,
            n0: None,
            mu0,
            flipped,
        });
    }
    Ok(AngleDecomposition {
        theta: n_norm.atan2(along),
        n0: Some(n.iter().map(|x| x / n_norm).collect()),
        mu0,
        flipped,
    })
}

/// Some unit vector orthogonal to `u`, or `None` in one dimension.
fn orthogonal_unit(u: &[f64]) -> Option<Vec<f64>> {
    if u.len() < 2 {
        return None;
    }
    let k = (0..u.len())
        .min_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()))
        .expect("non-empty");
    let mut e: Vec<f64> = u.iter().map(|x| -u[k] * x).collect();
    e[k] += 1.0;
    let norm = l2_norm(&e);
    Some(e.into_iter().map(|x| x / norm).collect())
}

fn require_delta(budget: &PerturbationBudget) -> Result<f64> {
    budget
        .delta()
        .ok_or_else(|| Error::Domain("strong perturbation needs a signal budget delta".into()))
}

/// Maximizer of `w . v` over `{||v||_2 <= eps, |v . mu0| <= delta}`.
///
/// When `w` is parallel to the signal the orthogonal part is taken along an
/// arbitrary unit vector orthogonal to `mu0`; in one dimension no such vector
/// exists and the result is `delta mu0` with norm below `eps`.
pub fn strong_perturbation_l2(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    budget: &PerturbationBudget,
) -> Result<Perturbation> {
    if !budget.p().is_two() {
        return Err(Error::Domain(format!(
            "closed-form strong perturbation needs p = 2, got p = {}",
            budget.p()
        )));
    }
    let delta = require_delta(budget)?;
    let eps = budget.epsilon();
    let dec = decompose(clf, mix)?;
    let beta = (eps * dec.cos_theta()).min(delta);
    let side = (eps * eps - beta * beta).max(0.0).sqrt();
    let across = dec.n0.clone().or_else(|| orthogonal_unit(&dec.mu0));
    let direction: Vec<f64> = match across {
        Some(n0) => dec
            .mu0
            .iter()
            .zip(&n0)
            .map(|(m, n)| beta * m + side * n)
            .collect(),
        None => dec.mu0.iter().map(|m| beta * m).collect(),
    };
    Ok(Perturbation::measure(direction, NormOrder::L2, mix.signal_direction()))
}

/// Unit-lp vector maximizing `w . v`: `sgn(w_i) (|w_i| / ||w||_q)^(q-1)`.
///
/// `p = inf` gives the sign vector and `p = 1` puts all mass on the largest
/// `|w_i|`, lowest index first on ties. A zero `w` yields the zero vector.
pub fn lp_direction(w: &[f64], p: NormOrder) -> Vec<f64> {
    match p {
        NormOrder::Infinity => w
            .iter()
            .map(|&x| if x == 0.0 { 0.0 } else { x.signum() })
            .collect(),
        NormOrder::Finite(1.0) => {
            let mut v = vec![0.0; w.len()];
            let mut best: Option<usize> = None;
            for (i, x) in w.iter().enumerate() {
                if best.is_none_or(|b| x.abs() > w[b].abs()) {
                    best = Some(i);
                }
            }
            if let Some(k) = best.filter(|&k| w[k] != 0.0) {
                v[k] = w[k].signum();
            }
            v
        }
        NormOrder::Finite(2.0) => {
            let norm = l2_norm(w);
            if norm == 0.0 {
                return vec![0.0; w.len()];
            }
            w.iter().map(|x| x / norm).collect()
        }
        NormOrder::Finite(_) => {
            let q = p.dual();
            let qv = q.as_f64();
            let wq = lp_norm(w, q);
            if wq == 0.0 {
                return vec![0.0; w.len()];
            }
            w.iter()
                .map(|&x| {
                    if x == 0.0 {
                        0.0
                    } else {
                        x.signum() * (x.abs() / wq).powf(qv - 1.0)
                    }
                })
                .collect()
        }
    }
}

/// `eps * lp_direction(w)`, the maximizer of `w . v` over the lp ball.
pub fn lp_perturbation(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    budget: &PerturbationBudget,
) -> Result<Perturbation> {
    clf.check_dim(mix)?;
    let eps = budget.epsilon();
    let direction = lp_direction(clf.weights(), budget.p())
        .into_iter()
        .map(|v| eps * v)
        .collect();
    Ok(Perturbation::measure(direction, budget.p(), mix.signal_direction()))
}

/// Maximizer of `w . v` over `{||v||_p <= eps, |v . mu0| <= delta}`.
///
/// For a multiplier `lambda` the lp-ball maximizer of `(w - lambda mu0) . v`
/// is [`lp_direction`] applied to `w - lambda mu0`, and its signal component
/// is nonincreasing in `lambda`. If the unconstrained optimum violates the
/// slab, the multiplier is bisected until the signal component brackets
/// `+-delta`, and the two bracketing maximizers are mixed so that the slab
/// holds with equality. The result is certified against the dual bound
/// `eps ||w - lambda mu0||_q + |lambda| delta`.
pub fn lp_strong_perturbation(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    budget: &PerturbationBudget,
) -> Result<Perturbation> {
    let delta = require_delta(budget)?;
    let eps = budget.epsilon();
    let p = budget.p();
    let dec = decompose(clf, mix)?;
    let mu0 = mix.signal_direction();
    let w = clf.weights();

    if eps == 0.0 {
        return Ok(Perturbation::measure(vec![0.0; w.len()], p, mu0));
    }

    if dec.n0.is_none() {
        // Objective is proportional to v . mu0: any feasible point with the
        // largest signal component is optimal, and delta mu0 is preferred.
        let oriented = &dec.mu0;
        let direction = if delta * lp_norm(oriented, p) <= eps {
            oriented.iter().map(|m| delta * m).collect()
        } else {
            let reach = eps * lp_norm(oriented, p.dual());
            let scale = eps * (delta / reach).min(1.0);
            lp_direction(oriented, p).into_iter().map(|v| scale * v).collect()
        };
        return Ok(Perturbation::measure(direction, p, mu0));
    }

    let candidate = |lambda: f64| -> (Vec<f64>, f64) {
        let shifted: Vec<f64> = w.iter().zip(mu0).map(|(a, m)| a - lambda * m).collect();
        let v: Vec<f64> = lp_direction(&shifted, p).into_iter().map(|x| eps * x).collect();
        let s = dot(&v, mu0);
        (v, s)
    };

    let (v0, s0) = candidate(0.0);
    if s0.abs() <= delta {
        return Ok(Perturbation::measure(v0, p, mu0));
    }

    // Work with kappa >= 0 on the side of the violated slab face.
    let side = s0.signum();
    let target = side * delta;
    let beyond = |s: f64| side * (s - target) > 0.0;

    let mut lo = 0.0;
    let (mut v_lo, mut s_lo) = (v0, s0);
    let mut hi = l2_norm(w);
    let (mut v_hi, mut s_hi) = candidate(side * hi);
    let mut grow = 0;
    while beyond(s_hi) {
        lo = hi;
        v_lo = v_hi;
        s_lo = s_hi;
        hi *= 2.0;
        (v_hi, s_hi) = candidate(side * hi);
        grow += 1;
        if grow > 1000 {
            return Err(Error::NoConvergence {
                iterations: grow,
                detail: format!("no multiplier bracket found; signal component {s_hi}"),
            });
        }
    }

    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (v, s) = candidate(side * mid);
        if beyond(s) {
            lo = mid;
            v_lo = v;
            s_lo = s;
        } else {
            hi = mid;
            v_hi = v;
            s_hi = s;
        }
    }

    let span = s_lo - s_hi;
    let t = if span.abs() > 0.0 { (s_lo - target) / span } else { 1.0 };
    let t = t.clamp(0.0, 1.0);
    let direction: Vec<f64> = v_lo
        .iter()
        .zip(&v_hi)
        .map(|(a, b)| (1.0 - t) * a + t * b)
        .collect();

    let objective = dot(w, &direction);
    let lambda = side * 0.5 * (lo + hi);
    let shifted: Vec<f64> = w.iter().zip(mu0).map(|(a, m)| a - lambda * m).collect();
    let dual = eps * lp_norm(&shifted, p.dual()) + lambda.abs() * delta;
    let gap = dual - objective;
    if gap > OBJECTIVE_TOLERANCE * dual.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NoConvergence {
            iterations: MAX_BISECTION_STEPS,
            detail: format!(
                "duality gap {gap:e} (primal {objective}, dual {dual}, multiplier {lambda})"
            ),
        });
    }
    Ok(Perturbation::measure(direction, p, mu0))
}

/// The classical budget's optimal perturbation, `eps * v0|p`.
pub fn adversarial_perturbation(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    budget: &PerturbationBudget,
) -> Result<Perturbation> {
    lp_perturbation(clf, mix, budget)
}

/// The strong budget's optimal perturbation: the closed form for `p = 2`,
/// the multiplier solver otherwise.
pub fn strong_perturbation(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    budget: &PerturbationBudget,
) -> Result<Perturbation> {
    if budget.p().is_two() {
        strong_perturbation_l2(clf, mix, budget)
    } else {
        lp_strong_perturbation(clf, mix, budget)
    }
}

/// Where a labeled point falls relative to the defining sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Misclassified,
    StrongAdversarial,
    AdversarialOnly,
    Robust,
}

/// The optimal perturbations of one (classifier, mixture, budget) triple,
/// reused across many membership queries.
#[derive(Debug, Clone)]
pub struct DefiningSets {
    pub adversarial: Perturbation,
    pub strong: Option<Perturbation>,
}

fn shifted_score(clf: &LinearClassifier, x: &[f64], v: &[f64], sign: f64) -> f64 {
    clf.weights()
        .iter()
        .zip(x)
        .zip(v)
        .map(|((w, xi), vi)| w * (xi + sign * vi))
        .sum::<f64>()
        + clf.bias()
}

fn flips(clf: &LinearClassifier, x: &[f64], predicted: Class, v: &[f64]) -> bool {
    Class::from_score(shifted_score(clf, x, v, 1.0)) != predicted
}

fn flips_either_way(clf: &LinearClassifier, x: &[f64], predicted: Class, v: &[f64]) -> bool {
    flips(clf, x, predicted, v)
        || Class::from_score(shifted_score(clf, x, v, -1.0)) != predicted
}

impl DefiningSets {
    pub fn new(
        clf: &LinearClassifier,
        mix: &GaussianMixtureSpec,
        budget: &PerturbationBudget,
    ) -> Result<Self> {
        let adversarial = adversarial_perturbation(clf, mix, budget)?;
        let strong = match budget.delta() {
            Some(_) => Some(strong_perturbation(clf, mix, budget)?),
            None => None,
        };
        Ok(DefiningSets {
            adversarial,
            strong,
        })
    }

    pub fn status(&self, clf: &LinearClassifier, x: &[f64], label: Class) -> PointStatus {
        let predicted = clf.classify(x);
        if predicted != label {
            return PointStatus::Misclassified;
        }
        if let Some(strong) = &self.strong {
            if flips_either_way(clf, x, predicted, &strong.direction) {
                return PointStatus::StrongAdversarial;
            }
        }
        if flips_either_way(clf, x, predicted, &self.adversarial.direction) {
            PointStatus::AdversarialOnly
        } else {
            PointStatus::Robust
        }
    }
}

pub fn point_status(
    x: &[f64],
    label: Class,
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    budget: &PerturbationBudget,
) -> Result<PointStatus> {
    ensure_dim(clf.dim(), x.len())?;
    Ok(DefiningSets::new(clf, mix, budget)?.status(clf, x, label))
}

/// Random search for any budget-feasible perturbation that changes the class
/// of `x`. Candidates are the constructive optimum (both signs) followed by
/// `trials` Gaussian directions scaled onto the lp sphere and, when a signal
/// budget is present, shrunk back into the slab.
pub fn brute_force_adversarial_search(
    x: &[f64],
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    budget: &PerturbationBudget,
    trials: usize,
    seed: u64,
) -> Result<Option<Perturbation>> {
    ensure_dim(clf.dim(), x.len())?;
    clf.check_dim(mix)?;
    let p = budget.p();
    let mu0 = mix.signal_direction();
    let predicted = clf.classify(x);

    let constructive = match budget.delta() {
        Some(_) => strong_perturbation(clf, mix, budget)?,
        None => adversarial_perturbation(clf, mix, budget)?,
    };
    let negated: Vec<f64> = constructive.direction.iter().map(|v| -v).collect();
    for v in [&constructive.direction, &negated] {
        if flips(clf, x, predicted, v) {
            return Ok(Some(Perturbation::measure(v.clone(), p, mu0)));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0.0; x.len()];
    for _ in 0..trials {
        v.iter_mut().for_each(|t| *t = rng.sample(StandardNormal));
        let norm = lp_norm(&v, p);
        if norm == 0.0 {
            continue;
        }
        let scale = budget.epsilon() / norm;
        v.iter_mut().for_each(|t| *t *= scale);
        if let Some(delta) = budget.delta() {
            let s = dot(&v, mu0).abs();
            if s > delta {
                let shrink = delta / s;
                v.iter_mut().for_each(|t| *t *= shrink);
            }
        }
        if flips(clf, x, predicted, &v) {
            return Ok(Some(Perturbation::measure(v, p, mu0)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MeanLayout;
    use std::f64::consts::FRAC_PI_2;

    fn axis_mix(d: usize) -> GaussianMixtureSpec {
        GaussianMixtureSpec::symmetric(MeanLayout::Axis, 1.0, d, 1.0).unwrap()
    }

    fn clf(w: &[f64], b: f64) -> LinearClassifier {
        LinearClassifier::new(w.to_vec(), b).unwrap()
    }

    #[test]
    fn normal_direction_examples() {
        assert_eq!(normal_direction(&clf(&[3.0, 4.0], 0.0)), vec![0.6, 0.8]);
        assert_eq!(normal_direction(&clf(&[1.0, 0.0], 0.0)), vec![1.0, 0.0]);
        let v = normal_direction(&clf(&[0.3, -2.0, 7.0], 1.0));
        assert!((l2_norm(&v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decompose_examples() {
        let mix = axis_mix(3);
        let aligned = decompose(&clf(&[2.0, 0.0, 0.0], 0.0), &mix).unwrap();
        assert_eq!(aligned.theta, 0.0);
        assert!(aligned.n0.is_none());

        let orth = decompose(&clf(&[0.0, 1.0, 0.0], 0.0), &mix).unwrap();
        assert!((orth.theta - FRAC_PI_2).abs() < 1e-12);

        let diag = decompose(&clf(&[1.0, 0.0, 1.0], 0.0), &mix).unwrap();
        assert!((diag.theta - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        let n0 = diag.n0.unwrap();
        assert!(dot(&n0, &diag.mu0).abs() < 1e-12);
        assert!((l2_norm(&n0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decompose_orients_signal() {
        let mix = axis_mix(2);
        let dec = decompose(&clf(&[-1.0, 1.0], 0.0), &mix).unwrap();
        assert!(dec.flipped);
        assert_eq!(dec.mu0, vec![-1.0, 0.0]);
        assert!(dec.theta <= FRAC_PI_2);
        let v0 = normal_direction(&clf(&[-1.0, 1.0], 0.0));
        let n0 = dec.n0.unwrap();
        for i in 0..2 {
            let rebuilt = dec.theta.cos() * dec.mu0[i] + dec.theta.sin() * n0[i];
            assert!((rebuilt - v0[i]).abs() < 1e-12);
        }
        assert!((dec.theta.cos() - dot(&v0, mix.signal_direction()).abs()).abs() < 1e-12);
    }

    #[test]
    fn strong_l2_unconstrained_reproduces_normal() {
        let mix = axis_mix(2);
        let c = clf(&[1.0, 1.0], 0.0);
        let budget = PerturbationBudget::l2(2.0, Some(5.0)).unwrap();
        let u = strong_perturbation_l2(&c, &mix, &budget).unwrap();
        let v0 = normal_direction(&c);
        for (a, b) in u.direction.iter().zip(&v0) {
            assert!((a - 2.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn strong_l2_orthogonal_classifier() {
        let mix = axis_mix(2);
        let c = clf(&[0.0, 3.0], 0.0);
        let budget = PerturbationBudget::l2(1.5, Some(0.2)).unwrap();
        let u = strong_perturbation_l2(&c, &mix, &budget).unwrap();
        assert!(u.direction[0].abs() < 1e-12);
        assert!((u.direction[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn strong_l2_worked_value() {
        // theta = 0.2: beta = min(5.7 cos 0.2, 1.2) = 1.2 and
        // g = 1.2 cos 0.2 + sqrt(5.7^2 - 1.2^2) sin 0.2, evaluated by hand.
        let mix = axis_mix(2);
        let c = clf(&[0.2f64.cos(), 0.2f64.sin()], 0.0);
        let budget = PerturbationBudget::l2(5.7, Some(1.2)).unwrap();
        let u = strong_perturbation_l2(&c, &mix, &budget).unwrap();
        let g = u.reach(&c) / c.weight_norm();
        assert!((g - 2.2831).abs() < 5e-5, "g = {g}");
        assert!((u.achieved_norm - 5.7).abs() < 1e-12);
        assert!((u.signal_component - 1.2).abs() < 1e-12);
    }

    #[test]
    fn strong_l2_parallel_classifier() {
        let budget = PerturbationBudget::l2(2.0, Some(0.5)).unwrap();
        let mix = axis_mix(3);
        let u = strong_perturbation_l2(&clf(&[1.0, 0.0, 0.0], 0.0), &mix, &budget).unwrap();
        assert!((u.achieved_norm - 2.0).abs() < 1e-12);
        assert!((u.signal_component - 0.5).abs() < 1e-12);

        let line = axis_mix(1);
        let u = strong_perturbation_l2(&clf(&[1.0], 0.0), &line, &budget).unwrap();
        assert_eq!(u.direction, vec![0.5]);
        assert_eq!(u.achieved_norm, 0.5);
    }

    #[test]
    fn strong_l2_requires_delta_and_p2() {
        let mix = axis_mix(2);
        let c = clf(&[1.0, 1.0], 0.0);
        assert!(strong_perturbation_l2(&c, &mix, &PerturbationBudget::l2(1.0, None).unwrap()).is_err());
        let linf = PerturbationBudget::new(NormOrder::Infinity, 1.0, Some(0.1)).unwrap();
        assert!(strong_perturbation_l2(&c, &mix, &linf).is_err());
    }

    #[test]
    fn lp_direction_examples() {
        let w = [2.0, -1.0];
        let v2 = lp_direction(&w, NormOrder::L2);
        let n = 5f64.sqrt();
        assert!((v2[0] - 2.0 / n).abs() < 1e-15 && (v2[1] + 1.0 / n).abs() < 1e-15);
        assert_eq!(lp_direction(&w, NormOrder::Infinity), vec![1.0, -1.0]);
        assert_eq!(lp_direction(&w, NormOrder::L1), vec![1.0, 0.0]);
        assert_eq!(lp_direction(&[1.0, -1.0, 1.0], NormOrder::L1), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn l1_direction_matches_vertex_enumeration() {
        // Maximizing a linear function over the l1 ball is attained at a vertex +-e_k.
        let w = [0.3, -2.5, 2.5, 1.0];
        let best = (0..w.len())
            .flat_map(|k| [(k, 1.0), (k, -1.0)])
            .map(|(k, s)| (s * w[k], k, s))
            .fold((f64::NEG_INFINITY, 0, 0.0), |acc, c| if c.0 > acc.0 { c } else { acc });
        let v = lp_direction(&w, NormOrder::L1);
        assert_eq!(dot(&v, &w), best.0);
        assert_eq!(v[best.1], best.2);
    }

    #[test]
    fn lp_direction_is_unit_and_attains_dual_norm() {
        let w = [0.7, -1.3, 2.2, 0.0, -0.4];
        for p in [1.0, 1.3, 2.0, 3.0, 7.5] {
            let order = NormOrder::new(p).unwrap();
            let v = lp_direction(&w, order);
            assert!((lp_norm(&v, order) - 1.0).abs() < 1e-12, "p={p}");
            assert!((dot(&w, &v) - lp_norm(&w, order.dual())).abs() < 1e-12, "p={p}");
        }
        let v = lp_direction(&w, NormOrder::Infinity);
        assert!((dot(&w, &v) - lp_norm(&w, NormOrder::L1)).abs() < 1e-12);
    }

    #[test]
    fn lp_strong_inactive_constraint() {
        let mix = axis_mix(3);
        let c = clf(&[0.1, 1.0, -0.5], 0.0);
        let budget = PerturbationBudget::new(NormOrder::Finite(3.0), 1.0, Some(10.0)).unwrap();
        let u = lp_strong_perturbation(&c, &mix, &budget).unwrap();
        let plain = lp_perturbation(&c, &mix, &budget).unwrap();
        assert_eq!(u.direction, plain.direction);
    }

    #[test]
    fn lp_strong_matches_closed_form_at_p2() {
        let mix = GaussianMixtureSpec::new(vec![0.5, 1.0, -0.3], vec![-0.5, 0.0, 0.1], 1.0).unwrap();
        let c = clf(&[1.0, 0.4, -0.7], 0.3);
        let budget = PerturbationBudget::l2(2.0, Some(0.3)).unwrap();
        let closed = strong_perturbation_l2(&c, &mix, &budget).unwrap();
        let dual = lp_strong_perturbation(&c, &mix, &budget).unwrap();
        let (a, b) = (closed.reach(&c), dual.reach(&c));
        assert!(((a - b) / a).abs() < 1e-9, "{a} vs {b}");
        assert!(dual.within(&budget, FEASIBILITY_SLACK));
    }

    #[test]
    fn lp_strong_bayes_is_signal_scaled() {
        let mix = GaussianMixtureSpec::symmetric(MeanLayout::Uniform, 2.0, 5, 1.0).unwrap();
        let c = clf(mix.signal(), 0.0);
        for p in [NormOrder::Finite(1.5), NormOrder::L2, NormOrder::Finite(3.0), NormOrder::Infinity] {
            let budget = PerturbationBudget::new(p, 3.0, Some(0.4)).unwrap();
            let u = lp_strong_perturbation(&c, &mix, &budget).unwrap();
            for (a, m) in u.direction.iter().zip(mix.signal_direction()) {
                assert!((a - 0.4 * m).abs() < 1e-12, "p={p}");
            }
        }
    }

    #[test]
    fn lp_strong_lower_face_active() {
        // Unconstrained l1 optimum points to e_1 whose signal component is negative.
        let mu0 = [-0.05, 1.0];
        let norm = l2_norm(&mu0);
        let mix = GaussianMixtureSpec::new(
            mu0.iter().map(|m| m / norm).collect(),
            mu0.iter().map(|m| -m / norm).collect(),
            1.0,
        )
        .unwrap();
        let c = clf(&[1.0, 0.1], 0.0);
        let budget = PerturbationBudget::new(NormOrder::Finite(1.2), 1.0, Some(0.01)).unwrap();
        let plain = lp_perturbation(&c, &mix, &budget).unwrap();
        assert!(plain.signal_component < -0.01);
        let u = lp_strong_perturbation(&c, &mix, &budget).unwrap();
        assert!((u.signal_component + 0.01).abs() < 1e-9);
        assert!(u.within(&budget, FEASIBILITY_SLACK));
    }

    #[test]
    fn signal_component_is_monotone_in_multiplier() {
        let mix = GaussianMixtureSpec::new(vec![0.8, 0.6, 0.0], vec![-0.8, -0.6, 0.0], 1.0).unwrap();
        let w = [1.0, -0.2, 0.5];
        let mu0 = mix.signal_direction();
        for p in [NormOrder::L1, NormOrder::Finite(1.5), NormOrder::L2, NormOrder::Finite(4.0), NormOrder::Infinity] {
            let mut prev = f64::INFINITY;
            for k in 0..400 {
                let lambda = -5.0 + 0.025 * k as f64;
                let shifted: Vec<f64> = w.iter().zip(mu0).map(|(a, m)| a - lambda * m).collect();
                let s = dot(&lp_direction(&shifted, p), mu0);
                assert!(s <= prev + 1e-12, "p={p} lambda={lambda}");
                prev = s;
            }
        }
    }

    #[test]
    fn point_status_examples() {
        let mix = axis_mix(2);
        let c = clf(&[1.0, 0.0], 0.0);
        let budget = PerturbationBudget::l2(1.0, Some(0.5)).unwrap();
        let far = point_status(&[2.0, 0.0], Class::Plus, &c, &mix, &budget).unwrap();
        assert_eq!(far, PointStatus::Robust);
        let near = point_status(&[0.3, 0.0], Class::Plus, &c, &mix, &budget).unwrap();
        assert_eq!(near, PointStatus::StrongAdversarial);
        let mid = point_status(&[0.7, 0.0], Class::Plus, &c, &mix, &budget).unwrap();
        assert_eq!(mid, PointStatus::AdversarialOnly);
        let wrong = point_status(&[0.7, 0.0], Class::Minus, &c, &mix, &budget).unwrap();
        assert_eq!(wrong, PointStatus::Misclassified);
        assert!(point_status(&[0.7], Class::Minus, &c, &mix, &budget).is_err());
    }

    #[test]
    fn strong_status_uses_deflected_perturbation() {
        // theta = pi/4, eps = 1, delta = 0.1: reach g = 0.1 cos + sqrt(0.99) sin.
        let mix = axis_mix(2);
        let c = clf(&[1.0, 1.0], 0.0);
        let budget = PerturbationBudget::l2(1.0, Some(0.1)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let g = 0.1 * s + 0.99f64.sqrt() * s;
        let at = |margin: f64| {
            let x = [margin * s, margin * s];
            point_status(&x, Class::Plus, &c, &mix, &budget).unwrap()
        };
        assert_eq!(at(g - 1e-6), PointStatus::StrongAdversarial);
        assert_eq!(at(g + 1e-6), PointStatus::AdversarialOnly);
        assert_eq!(at(1.0 + 1e-6), PointStatus::Robust);
    }

    #[test]
    fn brute_force_examples() {
        let mix = axis_mix(3);
        let c = clf(&[1.0, 0.5, -0.2], 0.1);
        let budget = PerturbationBudget::l2(0.5, None).unwrap();
        let near = [0.1, 0.0, 0.0];
        assert_eq!(
            point_status(&near, Class::Plus, &c, &mix, &budget).unwrap(),
            PointStatus::AdversarialOnly
        );
        assert!(brute_force_adversarial_search(&near, &c, &mix, &budget, 10, 1).unwrap().is_some());

        let far = [3.0, 0.0, 0.0];
        assert!(brute_force_adversarial_search(&far, &c, &mix, &budget, 100_000, 2).unwrap().is_none());

        let zero = PerturbationBudget::l2(0.0, None).unwrap();
        assert!(brute_force_adversarial_search(&near, &c, &mix, &zero, 1000, 3).unwrap().is_none());
    }
}
