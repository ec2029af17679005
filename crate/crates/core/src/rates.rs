//! Closed-form misclassification, adversarial and strong-adversarial rates of
//! a linear classifier on the balanced mixture.
//!
//! Under class `+` the score `w . x + b` is normal with mean `w . mu + b'` and
//! standard deviation `||w|| sigma` (symmetrically for class `-`), so every
//! rate is a sum of two normal interval probabilities. A perturbation with
//! reach `r = w . v / ||w||` turns a correctly classified point into an
//! adversarial one exactly when its margin lies in `(0, r)`. The formulas
//! differ only in the reach:
//!
//! | rate                 | reach `r`                      |
//! |----------------------|--------------------------------|
//! | l2 adversarial       | `eps`                          |
//! | l2 strong            | `g(eps, delta, theta)`         |
//! | lp adversarial       | `eps ||w||_q / ||w||_2`        |
//! | lp strong            | `w . u_p / ||w||_2`            |

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{decompose, lp_strong_perturbation};
use crate::model::{
    dot, lp_norm, GaussianMixtureSpec, LinearClassifier, NormOrder, PerturbationBudget,
    RateReport,
};
use crate::numerics::{
    first_truncated_moment, normal_interval, phi_upper, second_truncated_moment, Probability,
};

/// Standardized margins `(w . mu +- b') / (||w|| sigma)` of the two classes.
#[derive(Debug, Clone, Copy)]
struct Margins {
    plus: f64,
    minus: f64,
    sigma: f64,
}

impl Margins {
    fn new(clf: &LinearClassifier, mix: &GaussianMixtureSpec) -> Result<Self> {
        let b_prime = clf.centered_bias(mix)?;
        let wn = clf.weight_norm();
        let along = dot(clf.weights(), mix.signal());
        let sigma = mix.sigma();
        Ok(Margins {
            plus: (along + b_prime) / (wn * sigma),
            minus: (along - b_prime) / (wn * sigma),
            sigma,
        })
    }

    fn misclassification(&self) -> f64 {
        0.5 * (phi_upper(self.plus) + phi_upper(self.minus))
    }

    /// Probability of a correct prediction whose margin is below `reach`.
    fn within_reach(&self, reach: f64) -> f64 {
        let r = reach / self.sigma;
        0.5 * (normal_interval(self.plus - r, self.plus)
            + normal_interval(self.minus - r, self.minus))
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps.is_finite() && eps >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("epsilon must be >= 0, got {eps}")))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("delta must be >= 0, got {delta}")))
    }
}

/// `p_m = 1 - 0.5 [Phi((w.mu + b')/(||w|| sigma)) + Phi((w.mu - b')/(||w|| sigma))]`.
pub fn misclassification_rate(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
) -> Result<Probability> {
    Probability::from_computed(Margins::new(clf, mix)?.misclassification())
}

/// Probability that a correctly classified point has an l2 adversarial example.
pub fn adversarial_rate(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    eps: f64,
) -> Result<Probability> {
    check_epsilon(eps)?;
    Probability::from_computed(Margins::new(clf, mix)?.within_reach(eps))
}

/// `p_err = p_m + p_adv`.
pub fn adversarial_error_rate(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    eps: f64,
) -> Result<Probability> {
    check_epsilon(eps)?;
    let m = Margins::new(clf, mix)?;
    Probability::from_computed(m.misclassification() + m.within_reach(eps))
}

/// Classifier-free lower bound `1 - Phi((||mu|| - eps) / sigma)` on `p_err`,
/// valid whenever `w . mu > eps ||w||`.
pub fn adv_error_lower_bound(mix: &GaussianMixtureSpec, eps: f64) -> Result<Probability> {
    check_epsilon(eps)?;
    Probability::from_computed(phi_upper((mix.signal_norm() - eps) / mix.sigma()))
}

/// Reach of the strong l2 budget along the boundary normal:
/// `beta cos(theta) + sqrt(eps^2 - beta^2) sin(theta)`, `beta = min(eps cos(theta), delta)`.
pub fn g_effective(eps: f64, delta: f64, theta: f64) -> f64 {
    let (sin, cos) = theta.sin_cos();
    let beta = (eps * cos).min(delta);
    beta * cos + (eps * eps - beta * beta).max(0.0).sqrt() * sin
}

fn clamp_delta(eps: f64, delta: f64) -> f64 {
    if delta > eps {
        warn!("delta {delta} exceeds epsilon {eps}; using delta = epsilon");
        eps
    } else {
        delta
    }
}

fn strong_reach(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    eps: f64,
    delta: f64,
) -> Result<f64> {
    check_epsilon(eps)?;
    check_delta(delta)?;
    let delta = clamp_delta(eps, delta);
    let theta = decompose(clf, mix)?.theta;
    Ok(g_effective(eps, delta, theta))
}

/// Strong-adversarial rate for the l2 budget `(eps, delta)`. A `delta` above
/// `eps` is clamped to `eps` with a warning.
pub fn strong_adversarial_rate(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    eps: f64,
    delta: f64,
) -> Result<Probability> {
    let reach = strong_reach(clf, mix, eps, delta)?;
    Probability::from_computed(Margins::new(clf, mix)?.within_reach(reach))
}

/// `p_s_err = p_m + p_s_adv`.
pub fn strong_error_rate(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    eps: f64,
    delta: f64,
) -> Result<Probability> {
    let reach = strong_reach(clf, mix, eps, delta)?;
    let m = Margins::new(clf, mix)?;
    Probability::from_computed(m.misclassification() + m.within_reach(reach))
}

fn lp_reach(clf: &LinearClassifier, eps: f64, p: NormOrder) -> f64 {
    eps * lp_norm(clf.weights(), p.dual()) / clf.weight_norm()
}

/// Adversarial rate for the lp ball of radius `eps`.
pub fn lp_adversarial_rate(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    eps: f64,
    p: NormOrder,
) -> Result<Probability> {
    check_epsilon(eps)?;
    Probability::from_computed(Margins::new(clf, mix)?.within_reach(lp_reach(clf, eps, p)))
}

pub fn lp_adversarial_error_rate(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    eps: f64,
    p: NormOrder,
) -> Result<Probability> {
    check_epsilon(eps)?;
    let m = Margins::new(clf, mix)?;
    Probability::from_computed(m.misclassification() + m.within_reach(lp_reach(clf, eps, p)))
}

fn lp_strong_reach(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    eps: f64,
    delta: f64,
    p: NormOrder,
) -> Result<f64> {
    let budget = PerturbationBudget::new(p, eps, Some(delta))?;
    let u = lp_strong_perturbation(clf, mix, &budget)?;
    Ok(u.reach(clf) / clf.weight_norm())
}

/// Strong-adversarial rate for the lp budget. Unlike the l2 form, `delta > eps`
/// is not clamped: the lp ball's extent along `mu0` is `eps ||mu0||_q`.
pub fn lp_strong_adversarial_rate(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    eps: f64,
    delta: f64,
    p: NormOrder,
) -> Result<Probability> {
    let reach = lp_strong_reach(clf, mix, eps, delta, p)?;
    Probability::from_computed(Margins::new(clf, mix)?.within_reach(reach))
}

pub fn lp_strong_error_rate(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    eps: f64,
    delta: f64,
    p: NormOrder,
) -> Result<Probability> {
    let reach = lp_strong_reach(clf, mix, eps, delta, p)?;
    let m = Margins::new(clf, mix)?;
    Probability::from_computed(m.misclassification() + m.within_reach(reach))
}

/// All closed-form rates for one budget. The strong rates are present only
/// when the budget carries `delta`.
pub fn closed_form_report(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    budget: &PerturbationBudget,
) -> Result<RateReport> {
    let m = Margins::new(clf, mix)?;
    let eps = budget.epsilon();
    let p = budget.p();
    let adv_reach = if p.is_two() { eps } else { lp_reach(clf, eps, p) };
    let strong = match budget.delta() {
        None => None,
        Some(delta) if p.is_two() => Some(m.within_reach(strong_reach(clf, mix, eps, delta)?)),
        Some(delta) => Some(m.within_reach(lp_strong_reach(clf, mix, eps, delta, p)?)),
    };
    RateReport::closed_form(m.misclassification(), m.within_reach(adv_reach), strong)
}

/// Rates of an unbiased (`b' = 0`) classifier deflected by `theta` from the
/// signal:
///
/// * `p_m   = 1 - Phi(||mu|| cos(theta) / sigma)`
/// * `p_err = 1 - Phi((||mu|| cos(theta) - eps) / sigma)`
/// * `p_s_err ~ 1 - Phi(((||mu|| - delta) cos(theta) - eps sin(theta)) / sigma)`
///
/// The first two are exact; the third replaces the strong reach `g` by
/// `delta cos(theta) + eps sin(theta)`, accurate when `delta << eps`.
pub fn small_bias_rates(
    mix: &GaussianMixtureSpec,
    theta: f64,
    eps: f64,
    delta: f64,
) -> Result<RateReport> {
    check_epsilon(eps)?;
    check_delta(delta)?;
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::Domain(format!("theta must lie in [0, pi/2], got {theta}")));
    }
    let (sin, cos) = theta.sin_cos();
    let snr = mix.snr();
    let sigma = mix.sigma();
    let clean = snr * cos;
    let adv = snr * cos - eps / sigma;
    let strong = (snr - delta / sigma) * cos - eps / sigma * sin;
    RateReport::closed_form(
        phi_upper(clean),
        normal_interval(adv, clean),
        Some(normal_interval(strong, clean)),
    )
}

/// Optimal rates of the Bayes classifier (`theta = 0`).
pub fn bayes_rates(mix: &GaussianMixtureSpec, eps: f64, delta: f64) -> Result<RateReport> {
    small_bias_rates(mix, 0.0, eps, delta)
}

/// Inputs of the large-sample SVM angle system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticAngleParams {
    /// Training-set size.
    pub n_train: usize,
    pub d: usize,
    /// `||mu||`.
    pub mu: f64,
    pub sigma: f64,
}

/// Solution `(theta, t)` of the angle system and its residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticAngle {
    pub theta: f64,
    pub t: f64,
    /// `sin^2(theta) - (N/d) int (t-z)^2 phi`.
    pub residual_sin: f64,
    /// `cos(theta) - (N/d)(mu/sigma) int (t-z) phi`.
    pub residual_cos: f64,
}

pub const ANGLE_RESIDUAL_TOLERANCE: f64 = 1e-8;
const THETA_BOX: (f64, f64) = (1e-6, std::f64::consts::FRAC_PI_2 - 1e-6);
const T_BOX: (f64, f64) = (-10.0, 10.0);

fn angle_residuals(ratio: f64, snr: f64, theta: f64, t: f64) -> [f64; 2] {
    [
        theta.sin().powi(2) - ratio * second_truncated_moment(t),
        theta.cos() - ratio * snr * first_truncated_moment(t),
    ]
}

/// Newton steps with a central-difference Jacobian, projected onto the search box.
fn newton_polish(ratio: f64, snr: f64, mut theta: f64, mut t: f64) -> (f64, f64, [f64; 2]) {
    let mut res = angle_residuals(ratio, snr, theta, t);
    for _ in 0..50 {
        if res[0].abs().max(res[1].abs()) <= 1e-14 {
            break;
        }
        let h = 1e-7;
        let dth = {
            let a = angle_residuals(ratio, snr, theta + h, t);
            let b = angle_residuals(ratio, snr, theta - h, t);
            [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)]
        };
        let dt = {
            let a = angle_residuals(ratio, snr, theta, t + h);
            let b = angle_residuals(ratio, snr, theta, t - h);
            [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)]
        };
        let det = dth[0] * dt[1] - dt[0] * dth[1];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let step_theta = (res[0] * dt[1] - dt[0] * res[1]) / det;
        let step_t = (dth[0] * res[1] - res[0] * dth[1]) / det;
        let next_theta = (theta - step_theta).clamp(THETA_BOX.0, THETA_BOX.1);
        let next_t = (t - step_t).clamp(T_BOX.0, T_BOX.1);
        let next = angle_residuals(ratio, snr, next_theta, next_t);
        if next[0].abs().max(next[1].abs()) >= res[0].abs().max(res[1].abs()) {
            break;
        }
        theta = next_theta;
        t = next_t;
        res = next;
    }
    (theta, t, res)
}

/// Coarse-to-fine grid search over the search box, minimizing the residual norm.
fn grid_start(ratio: f64, snr: f64) -> (f64, f64) {
    let (mut th_lo, mut th_hi) = THETA_BOX;
    let (mut t_lo, mut t_hi) = T_BOX;
    let mut best = (0.5 * (th_lo + th_hi), 0.0);
    for _ in 0..6 {
        let mut best_res = f64::INFINITY;
        let n = 200;
        for i in 0..=n {
            let th = th_lo + (th_hi - th_lo) * i as f64 / n as f64;
            for j in 0..=n {
                let t = t_lo + (t_hi - t_lo) * j as f64 / n as f64;
                let r = angle_residuals(ratio, snr, th, t);
                let norm = r[0] * r[0] + r[1] * r[1];
                if norm < best_res {
                    best_res = norm;
                    best = (th, t);
                }
            }
        }
        let (dth, dt) = ((th_hi - th_lo) / 20.0, (t_hi - t_lo) / 20.0);
        th_lo = (best.0 - dth).max(THETA_BOX.0);
        th_hi = (best.0 + dth).min(THETA_BOX.1);
        t_lo = (best.1 - dt).max(T_BOX.0);
        t_hi = (best.1 + dt).min(T_BOX.1);
    }
    best
}

/// Solves `sin^2(theta) = (N/d) int_{-inf}^t (t-z)^2 phi(z) dz` and
/// `cos(theta) = (N/d)(mu/sigma) int_{-inf}^t (t-z) phi(z) dz`.
///
/// Adding the squared equations eliminates `theta` and leaves an increasing
/// function of `t`, which is bracketed and bisected; Newton then polishes both
/// equations jointly. A grid search restarts Newton if that fails.
pub fn asymptotic_svm_angle(params: &AsymptoticAngleParams) -> Result<AsymptoticAngle> {
    if params.n_train == 0 || params.d == 0 {
        return Err(Error::Domain("training size and dimension must be positive".into()));
    }
    if !(params.mu > 0.0 && params.sigma > 0.0) {
        return Err(Error::Domain("mu and sigma must be positive".into()));
    }
    let ratio = params.n_train as f64 / params.d as f64;
    let snr = params.mu / params.sigma;

    let eliminated = |t: f64| {
        let c = ratio * snr * first_truncated_moment(t);
        ratio * second_truncated_moment(t) + c * c - 1.0
    };
    let (mut lo, mut hi) = T_BOX;
    let mut start = None;
    if eliminated(lo) < 0.0 && eliminated(hi) > 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if eliminated(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        let cos = (ratio * snr * first_truncated_moment(t)).clamp(0.0, 1.0);
        start = Some((cos.acos().clamp(THETA_BOX.0, THETA_BOX.1), t));
    }

    let mut attempts = Vec::new();
    if let Some((theta, t)) = start {
        attempts.push(newton_polish(ratio, snr, theta, t));
    }
    let converged = |r: &[f64; 2]| r[0].abs().max(r[1].abs()) <= ANGLE_RESIDUAL_TOLERANCE;
    if !attempts.iter().any(|a| converged(&a.2)) {
        let (theta, t) = grid_start(ratio, snr);
        attempts.push(newton_polish(ratio, snr, theta, t));
    }
    let best = attempts
        .into_iter()
        .min_by(|a, b| {
            let na = a.2[0].abs().max(a.2[1].abs());
            let nb = b.2[0].abs().max(b.2[1].abs());
            na.total_cmp(&nb)
        })
        .expect("at least one attempt");
    if !converged(&best.2) {
        return Err(Error::NoConvergence {
            iterations: 50,
            detail: format!(
                "no root in the search box; residuals ({:e}, {:e}) at theta={}, t={}",
                best.2[0], best.2[1], best.0, best.1
            ),
        });
    }
    Ok(AsymptoticAngle {
        theta: best.0,
        t: best.1,
        residual_sin: best.2[0],
        residual_cos: best.2[1],
    })
}

/// Order of the SNR needed for lp-adversarial robustness: `d^min(1/p, 1/2)`
/// for finite `p`, `sqrt(log d)` for `p = inf` (unit constant).
pub fn required_snr_order(p: NormOrder, d: usize) -> f64 {
    let d = d as f64;
    match p {
        NormOrder::Infinity => d.ln().sqrt(),
        NormOrder::Finite(p) => d.powf((1.0 / p).min(0.5)),
    }
}

/// Interval containing `||w||_q / ||w||_2` for any nonzero `w` in dimension `d`.
pub fn dual_norm_ratio_bounds(p: NormOrder, d: usize) -> (f64, f64) {
    let d = d as f64;
    let q_inv = p.dual().reciprocal();
    let spread = d.powf(q_inv - 0.5);
    if q_inv >= 0.5 {
        (1.0, spread)
    } else {
        (spread, 1.0)
    }
}

/// Smallest SNR at which the Bayes adversarial-error bound
/// `1 - Phi(snr - eps/sigma)` drops to `target`, found by bisection.
pub fn min_snr_for_error_bound(eps_over_sigma: f64, target: f64) -> Result<f64> {
    check_epsilon(eps_over_sigma)?;
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Domain(format!("target must lie in (0, 1), got {target}")));
    }
    let bound = |snr: f64| phi_upper(snr - eps_over_sigma);
    let mut lo = 0.0;
    let mut hi = eps_over_sigma + 1.0;
    let mut steps = 0;
    while bound(hi) > target {
        hi *= 2.0;
        steps += 1;
        if steps > 200 {
            return Err(Error::NoConvergence {
                iterations: steps,
                detail: "no SNR bracket".into(),
            });
        }
    }
    if bound(lo) <= target {
        return Ok(lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if bound(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}
