//! Value types shared across the crate: the balanced mixture, the linear
//! classifier, perturbation budgets and rate reports.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ensure_dim, Error, Result};
use crate::numerics::Probability;

/// Inner product over the common prefix, accumulated in eight lanes so the
/// loop vectorizes.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 8];
    let chunks_a = a.chunks_exact(8);
    let chunks_b = b.chunks_exact(8);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for k in 0..8 {
            acc[k] += ca[k] * cb[k];
        }
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

pub fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Class label of a mixture component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Class {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Class {
    pub fn sign(self) -> f64 {
        match self {
            Class::Plus => 1.0,
            Class::Minus => -1.0,
        }
    }

    pub fn from_score(score: f64) -> Class {
        if score > 0.0 {
            Class::Plus
        } else {
            Class::Minus
        }
    }
}

/// How the class means are laid out in feature space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanLayout {
    /// `mu_+ = -mu_- = (mu, 0, ..., 0)`.
    #[default]
    Axis,
    /// `mu_+ = -mu_- = (mu, ..., mu) / sqrt(d)`.
    Uniform,
}

impl FromStr for MeanLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "axis" => Ok(MeanLayout::Axis),
            "uniform" => Ok(MeanLayout::Uniform),
            other => Err(Error::Domain(format!("unknown mean layout {other:?}"))),
        }
    }
}

/// Balanced two-class isotropic Gaussian mixture
/// `0.5 N(mu_+, sigma^2 I) + 0.5 N(mu_-, sigma^2 I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMixture", into = "RawMixture")]
pub struct GaussianMixtureSpec {
    mu_plus: Vec<f64>,
    mu_minus: Vec<f64>,
    sigma: f64,
    signal: Vec<f64>,
    center: Vec<f64>,
    signal_norm: f64,
    signal_direction: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMixture {
    mu_plus: Vec<f64>,
    mu_minus: Vec<f64>,
    sigma: f64,
    d: usize,
}

impl TryFrom<RawMixture> for GaussianMixtureSpec {
    type Error = Error;

    fn try_from(raw: RawMixture) -> Result<Self> {
        ensure_dim(raw.d, raw.mu_plus.len())?;
        GaussianMixtureSpec::new(raw.mu_plus, raw.mu_minus, raw.sigma)
    }
}

impl From<GaussianMixtureSpec> for RawMixture {
    fn from(m: GaussianMixtureSpec) -> Self {
        RawMixture {
            d: m.mu_plus.len(),
            mu_plus: m.mu_plus,
            mu_minus: m.mu_minus,
            sigma: m.sigma,
        }
    }
}

impl GaussianMixtureSpec {
    pub fn new(mu_plus: Vec<f64>, mu_minus: Vec<f64>, sigma: f64) -> Result<Self> {
        if mu_plus.is_empty() {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        ensure_dim(mu_plus.len(), mu_minus.len())?;
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidModel(format!("sigma must be > 0, got {sigma}")));
        }
        if mu_plus.iter().chain(&mu_minus).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("means must be finite".into()));
        }
        let signal: Vec<f64> = mu_plus
            .iter()
            .zip(&mu_minus)
            .map(|(p, m)| 0.5 * (p - m))
            .collect();
        let center = mu_plus
            .iter()
            .zip(&mu_minus)
            .map(|(p, m)| 0.5 * (p + m))
            .collect();
        let signal_norm = l2_norm(&signal);
        if signal_norm == 0.0 {
            return Err(Error::InvalidModel("class means coincide".into()));
        }
        let signal_direction = signal.iter().map(|v| v / signal_norm).collect();
        Ok(GaussianMixtureSpec {
            mu_plus,
            mu_minus,
            sigma,
            signal,
            center,
            signal_norm,
            signal_direction,
        })
    }

    /// Symmetric mixture `mu_+ = -mu_-` with `||mu|| = mu` in the given layout.
    pub fn symmetric(layout: MeanLayout, mu: f64, d: usize, sigma: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidModel(format!("signal strength must be positive, got {mu}")));
        }
        let mu_plus = match layout {
            MeanLayout::Axis => {
                let mut v = vec![0.0; d];
                v[0] = mu;
                v
            }
            MeanLayout::Uniform => vec![mu / (d as f64).sqrt(); d],
        };
        let mu_minus = mu_plus.iter().map(|v| -v).collect();
        GaussianMixtureSpec::new(mu_plus, mu_minus, sigma)
    }

    pub fn dim(&self) -> usize {
        self.mu_plus.len()
    }

    pub fn mu_plus(&self) -> &[f64] {
        &self.mu_plus
    }

    pub fn mu_minus(&self) -> &[f64] {
        &self.mu_minus
    }

    pub fn mean(&self, class: Class) -> &[f64] {
        match class {
            Class::Plus => &self.mu_plus,
            Class::Minus => &self.mu_minus,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Half the mean difference, `mu = (mu_+ - mu_-) / 2`.
    pub fn signal(&self) -> &[f64] {
        &self.signal
    }

    /// Mixture center `(mu_+ + mu_-) / 2`.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn signal_norm(&self) -> f64 {
        self.signal_norm
    }

    /// Unit vector `mu / ||mu||`.
    pub fn signal_direction(&self) -> &[f64] {
        &self.signal_direction
    }

    pub fn snr(&self) -> f64 {
        self.signal_norm / self.sigma
    }
}

/// `C(x) = sign(w . x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawClassifier")]
pub struct LinearClassifier {
    w: Vec<f64>,
    b: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClassifier {
    w: Vec<f64>,
    b: f64,
}

impl TryFrom<RawClassifier> for LinearClassifier {
    type Error = Error;

    fn try_from(raw: RawClassifier) -> Result<Self> {
        LinearClassifier::new(raw.w, raw.b)
    }
}

impl LinearClassifier {
    pub fn new(w: Vec<f64>, b: f64) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(Error::InvalidModel("classifier must be finite".into()));
        }
        if l2_norm(&w) == 0.0 {
            return Err(Error::Domain("weight vector is zero".into()));
        }
        Ok(LinearClassifier { w, b })
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn bias(&self) -> f64 {
        self.b
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn weight_norm(&self) -> f64 {
        l2_norm(&self.w)
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) + self.b
    }

    pub fn classify(&self, x: &[f64]) -> Class {
        Class::from_score(self.score(x))
    }

    /// Bias measured from the mixture center, `b' = w . mu_bar + b`.
    pub fn centered_bias(&self, mix: &GaussianMixtureSpec) -> Result<f64> {
        ensure_dim(mix.dim(), self.dim())?;
        Ok(dot(&self.w, mix.center()) + self.b)
    }

    pub(crate) fn check_dim(&self, mix: &GaussianMixtureSpec) -> Result<()> {
        ensure_dim(mix.dim(), self.dim())
    }
}

/// Free-function form of [`LinearClassifier::centered_bias`].
pub fn centered_bias(clf: &LinearClassifier, mix: &GaussianMixtureSpec) -> Result<f64> {
    clf.centered_bias(mix)
}

pub fn snr(mix: &GaussianMixtureSpec) -> f64 {
    mix.snr()
}

/// Order `p` of an lp norm, `1 <= p <= inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormOrder {
    Finite(f64),
    Infinity,
}

impl NormOrder {
    pub const L1: NormOrder = NormOrder::Finite(1.0);
    pub const L2: NormOrder = NormOrder::Finite(2.0);

    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(NormOrder::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(NormOrder::Finite(p))
        } else {
            Err(Error::Domain(format!("norm order must lie in [1, inf], got {p}")))
        }
    }

    /// The dual exponent `q` with `1/p + 1/q = 1`.
    pub fn dual(self) -> NormOrder {
        match self {
            NormOrder::Infinity => NormOrder::Finite(1.0),
            NormOrder::Finite(1.0) => NormOrder::Infinity,
            NormOrder::Finite(p) => NormOrder::Finite(p / (p - 1.0)),
        }
    }

    /// `1/p`, with `1/inf = 0`.
    pub fn reciprocal(self) -> f64 {
        match self {
            NormOrder::Infinity => 0.0,
            NormOrder::Finite(p) => 1.0 / p,
        }
    }

    pub fn is_two(self) -> bool {
        self == NormOrder::L2
    }

    pub fn as_f64(self) -> f64 {
        match self {
            NormOrder::Infinity => f64::INFINITY,
            NormOrder::Finite(p) => p,
        }
    }

    pub fn norm(self, v: &[f64]) -> f64 {
        lp_norm(v, self)
    }
}

pub fn lp_norm(v: &[f64], p: NormOrder) -> f64 {
    match p {
        NormOrder::Infinity => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        NormOrder::Finite(1.0) => v.iter().map(|x| x.abs()).sum(),
        NormOrder::Finite(2.0) => l2_norm(v),
        NormOrder::Finite(p) => {
            // Scale by the max entry so large p does not overflow.
            let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if scale == 0.0 {
                return 0.0;
            }
            scale * v.iter().map(|x| (x.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

impl fmt::Display for NormOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormOrder::Infinity => f.write_str("inf"),
            NormOrder::Finite(p) => p.fmt(f),
        }
    }
}

impl FromStr for NormOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" => Ok(NormOrder::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::Domain(format!("invalid norm order {other:?}")))?;
                NormOrder::new(p)
            }
        }
    }
}

impl Serialize for NormOrder {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NormOrder::Infinity => s.serialize_str("inf"),
            NormOrder::Finite(p) => s.serialize_f64(*p),
        }
    }
}

impl<'de> Deserialize<'de> for NormOrder {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        let parsed = match Repr::deserialize(d)? {
            Repr::Num(p) => NormOrder::new(p),
            Repr::Str(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Perturbation budget: `||v||_p <= epsilon` and, when `delta` is present,
/// `|v . mu0| <= delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBudget", into = "RawBudget")]
pub struct PerturbationBudget {
    p: NormOrder,
    epsilon: f64,
    delta: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBudget {
    p: NormOrder,
    epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
}

impl TryFrom<RawBudget> for PerturbationBudget {
    type Error = Error;

    fn try_from(raw: RawBudget) -> Result<Self> {
        PerturbationBudget::new(raw.p, raw.epsilon, raw.delta)
    }
}

impl From<PerturbationBudget> for RawBudget {
    fn from(b: PerturbationBudget) -> Self {
        RawBudget {
            p: b.p,
            epsilon: b.epsilon,
            delta: b.delta,
        }
    }
}

impl PerturbationBudget {
    pub fn new(p: NormOrder, epsilon: f64, delta: Option<f64>) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::Domain(format!("epsilon must be >= 0, got {epsilon}")));
        }
        if let Some(d) = delta {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::Domain(format!("delta must be >= 0, got {d}")));
            }
        }
        Ok(PerturbationBudget { p, epsilon, delta })
    }

    pub fn l2(epsilon: f64, delta: Option<f64>) -> Result<Self> {
        Self::new(NormOrder::L2, epsilon, delta)
    }

    /// Budget in relative units: `epsilon = eta_a sqrt(d) sigma`, `delta = eta_s ||mu||`.
    pub fn from_eta(
        mix: &GaussianMixtureSpec,
        eta_a: f64,
        eta_s: f64,
        p: NormOrder,
    ) -> Result<Self> {
        let epsilon = eta_a * (mix.dim() as f64).sqrt() * mix.sigma();
        Self::new(p, epsilon, Some(eta_s * mix.signal_norm()))
    }

    pub fn p(&self) -> NormOrder {
        self.p
    }

    pub fn q(&self) -> NormOrder {
        self.p.dual()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> Option<f64> {
        self.delta
    }

    pub fn without_delta(&self) -> Self {
        PerturbationBudget {
            delta: None,
            ..*self
        }
    }
}

/// A perturbation vector together with its measured size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub direction: Vec<f64>,
    /// `||direction||_p` for the budget's norm.
    pub achieved_norm: f64,
    /// `direction . mu0`.
    pub signal_component: f64,
}

impl Perturbation {
    pub fn measure(direction: Vec<f64>, p: NormOrder, mu0: &[f64]) -> Self {
        Perturbation {
            achieved_norm: lp_norm(&direction, p),
            signal_component: dot(&direction, mu0),
            direction,
        }
    }

    /// Reach of the perturbation along the classifier, `w . v`.
    pub fn reach(&self, clf: &LinearClassifier) -> f64 {
        dot(clf.weights(), &self.direction)
    }

    pub fn within(&self, budget: &PerturbationBudget, slack: f64) -> bool {
        self.achieved_norm <= budget.epsilon() + slack
            && budget
                .delta()
                .is_none_or(|d| self.signal_component.abs() <= d + slack)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    MonteCarlo,
}

/// Standard errors of Monte Carlo rate estimates, `sqrt(p (1 - p) / n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateStdErr {
    pub p_m: f64,
    pub p_adv: f64,
    pub p_err: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_s_adv: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_s_err: Option<f64>,
}

/// Misclassification, adversarial and strong-adversarial rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub p_m: Probability,
    pub p_adv: Probability,
    pub p_err: Probability,
    pub p_s_adv: Option<Probability>,
    pub p_s_err: Option<Probability>,
    pub provenance: Provenance,
    pub n_samples: Option<u64>,
    pub std_err: Option<RateStdErr>,
}

/// Outcome counts of a Monte Carlo run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub misclassified: u64,
    pub strong_adversarial: u64,
    pub adversarial_only: u64,
    pub robust: u64,
}

impl StatusCounts {
    pub fn total(&self) -> u64 {
        self.misclassified + self.strong_adversarial + self.adversarial_only + self.robust
    }

    pub fn merge(&mut self, other: &StatusCounts) {
        self.misclassified += other.misclassified;
        self.strong_adversarial += other.strong_adversarial;
        self.adversarial_only += other.adversarial_only;
        self.robust += other.robust;
    }
}

fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

impl RateReport {
    /// Builds a closed-form report; `p_err` and `p_s_err` are the sums
    /// `p_m + p_adv` and `p_m + p_s_adv`.
    pub fn closed_form(p_m: f64, p_adv: f64, p_s_adv: Option<f64>) -> Result<Self> {
        let p_m = Probability::from_computed(p_m)?;
        let p_adv = Probability::from_computed(p_adv)?;
        let p_err = Probability::from_computed(p_m.value() + p_adv.value())?;
        let (p_s_adv, p_s_err) = match p_s_adv {
            Some(s) => {
                let s = Probability::from_computed(s)?;
                (
                    Some(s),
                    Some(Probability::from_computed(p_m.value() + s.value())?),
                )
            }
            None => (None, None),
        };
        Ok(RateReport {
            p_m,
            p_adv,
            p_err,
            p_s_adv,
            p_s_err,
            provenance: Provenance::ClosedForm,
            n_samples: None,
            std_err: None,
        })
    }

    /// Builds a Monte Carlo report from status counts. The strong rates are
    /// reported only when the budget carried a signal limit.
    pub fn from_counts(counts: &StatusCounts, strong: bool) -> Result<Self> {
        let n = counts.total();
        if n == 0 {
            return Err(Error::Domain("no samples".into()));
        }
        let frac = |k: u64| k as f64 / n as f64;
        let p_m = frac(counts.misclassified);
        let p_adv = frac(counts.strong_adversarial + counts.adversarial_only);
        let p_err = frac(counts.misclassified + counts.strong_adversarial + counts.adversarial_only);
        let p_s_adv = strong.then(|| frac(counts.strong_adversarial));
        let p_s_err = strong.then(|| frac(counts.misclassified + counts.strong_adversarial));
        Ok(RateReport {
            p_m: Probability::new(p_m)?,
            p_adv: Probability::new(p_adv)?,
            p_err: Probability::new(p_err)?,
            p_s_adv: p_s_adv.map(Probability::new).transpose()?,
            p_s_err: p_s_err.map(Probability::new).transpose()?,
            provenance: Provenance::MonteCarlo,
            n_samples: Some(n),
            std_err: Some(RateStdErr {
                p_m: binomial_se(p_m, n),
                p_adv: binomial_se(p_adv, n),
                p_err: binomial_se(p_err, n),
                p_s_adv: p_s_adv.map(|p| binomial_se(p, n)),
                p_s_err: p_s_err.map(|p| binomial_se(p, n)),
            }),
        })
    }
}
