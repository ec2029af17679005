//! WebAssembly bindings for the browser demo.
//!
//! Each export takes plain numbers and returns a JSON string. The typed
//! functions behind them are ordinary Rust and are tested natively.

use advlin_core::geometry::decompose;
use advlin_core::learn::bayes_classifier;
use advlin_core::rates::{closed_form_report, g_effective};
use advlin_core::simulate::empirical_rates;
use advlin_core::{GaussianMixtureSpec, LinearClassifier, MeanLayout, NormOrder, PerturbationBudget, RateReport};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest Monte Carlo size accepted from the page.
pub const MAX_DRAWS: usize = 2_000_000;

type DemoResult<T> = Result<T, String>;

fn text<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Axis-aligned mixture and an unbiased classifier tilted by `theta` away
/// from the signal axis.
fn tilted_setup(mu: f64, d: usize, theta: f64) -> DemoResult<(GaussianMixtureSpec, LinearClassifier)> {
    if d < 2 {
        return Err("dimension must be at least 2".into());
    }
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(format!("theta must lie in [0, pi/2], got {theta}"));
    }
    let mix = GaussianMixtureSpec::symmetric(MeanLayout::Axis, mu, d, 1.0).map_err(text)?;
    let mut w = vec![0.0; d];
    w[0] = theta.cos();
    w[1] = theta.sin();
    let clf = LinearClassifier::new(w, 0.0).map_err(text)?;
    Ok((mix, clf))
}

#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct RateCurve {
    pub p_m: Vec<f64>,
    pub p_err: Vec<f64>,
    pub p_s_err: Vec<f64>,
}

impl RateCurve {
    fn push(&mut self, r: &RateReport) {
        self.p_m.push(r.p_m.value());
        self.p_err.push(r.p_err.value());
        self.p_s_err.push(r.p_s_err.map_or(f64::NAN, |p| p.value()));
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RateCurves {
    pub mu: Vec<f64>,
    pub bayes: RateCurve,
    pub tilted: RateCurve,
}

/// Closed-form rates of the Bayes rule and of a classifier tilted by
/// `theta`, for `steps` signal strengths in `(0, mu_max]`.
pub fn rate_curves(d: usize, eta_a: f64, eta_s: f64, theta: f64, mu_max: f64, steps: usize) -> DemoResult<RateCurves> {
    if steps == 0 || steps > 10_000 {
        return Err("steps must lie in 1..=10000".into());
    }
    let mut out = RateCurves {
        mu: Vec::with_capacity(steps),
        bayes: RateCurve::default(),
        tilted: RateCurve::default(),
    };
    for k in 1..=steps {
        let mu = mu_max * k as f64 / steps as f64;
        let (mix, clf) = tilted_setup(mu, d, theta)?;
        let budget = PerturbationBudget::from_eta(&mix, eta_a, eta_s, NormOrder::L2).map_err(text)?;
        out.mu.push(mu);
        out.bayes.push(&closed_form_report(&bayes_classifier(&mix), &mix, &budget).map_err(text)?);
        out.tilted.push(&closed_form_report(&clf, &mix, &budget).map_err(text)?);
    }
    Ok(out)
}

/// Perturbations drawn in the plane of the signal axis (first coordinate)
/// and the in-plane normal (second coordinate).
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct StrongGeometry {
    pub normal: [f64; 2],
    pub adversarial: [f64; 2],
    pub strong: [f64; 2],
    pub reach: f64,
    pub strong_reach: f64,
    /// The signal budget actually used (capped at `eps`).
    pub delta: f64,
}

pub fn strong_geometry(eps: f64, delta: f64, theta: f64) -> DemoResult<StrongGeometry> {
    if !(eps >= 0.0 && delta >= 0.0 && eps.is_finite() && delta.is_finite()) {
        return Err("budgets must be finite and >= 0".into());
    }
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(format!("theta must lie in [0, pi/2], got {theta}"));
    }
    let delta = delta.min(eps);
    let (sin, cos) = theta.sin_cos();
    let beta = (eps * cos).min(delta);
    Ok(StrongGeometry {
        normal: [cos, sin],
        adversarial: [eps * cos, eps * sin],
        strong: [beta, (eps * eps - beta * beta).max(0.0).sqrt()],
        reach: eps,
        strong_reach: g_effective(eps, delta, theta),
        delta,
    })
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MonteCarloCheck {
    pub theta: f64,
    pub closed_form: RateReport,
    pub empirical: RateReport,
}

/// Closed form vs simulation for the tilted classifier.
pub fn monte_carlo_check(
    mu: f64,
    d: usize,
    eta_a: f64,
    eta_s: f64,
    theta: f64,
    draws: usize,
    seed: u64,
) -> DemoResult<MonteCarloCheck> {
    if draws == 0 || draws > MAX_DRAWS {
        return Err(format!("draws must lie in 1..={MAX_DRAWS}"));
    }
    let (mix, clf) = tilted_setup(mu, d, theta)?;
    let budget = PerturbationBudget::from_eta(&mix, eta_a, eta_s, NormOrder::L2).map_err(text)?;
    Ok(MonteCarloCheck {
        theta: decompose(&clf, &mix).map_err(text)?.theta,
        closed_form: closed_form_report(&clf, &mix, &budget).map_err(text)?,
        empirical: empirical_rates(&clf, &mix, &budget, draws, seed).map_err(text)?,
    })
}

fn to_js<T: Serialize>(r: DemoResult<T>) -> Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = rateCurves)]
pub fn rate_curves_js(d: usize, eta_a: f64, eta_s: f64, theta: f64, mu_max: f64, steps: usize) -> Result<String, JsError> {
    to_js(rate_curves(d, eta_a, eta_s, theta, mu_max, steps))
}

#[wasm_bindgen(js_name = strongGeometry)]
pub fn strong_geometry_js(eps: f64, delta: f64, theta: f64) -> Result<String, JsError> {
    to_js(strong_geometry(eps, delta, theta))
}

#[wasm_bindgen(js_name = monteCarloCheck)]
pub fn monte_carlo_check_js(
    mu: f64,
    d: usize,
    eta_a: f64,
    eta_s: f64,
    theta: f64,
    draws: usize,
    seed: u64,
) -> Result<String, JsError> {
    to_js(monte_carlo_check(mu, d, eta_a, eta_s, theta, draws, seed))
}
