//! Seeded sampling from the mixture and Monte Carlo rate estimates.
//!
//! Every random stream is a ChaCha8 generator keyed by `(seed, stream)`, so
//! replicate `k` of an experiment can be regenerated on its own and parallel
//! runs reproduce serial ones exactly.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure_dim, Error, Result};
use crate::geometry::DefiningSets;
use crate::model::{
    Class, GaussianMixtureSpec, LinearClassifier, NormOrder, PerturbationBudget, RateReport,
    StatusCounts,
};
use crate::geometry::PointStatus;

/// Generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws labeled points one at a time: a fair coin for the class, then
/// `mean + sigma z` with `z` standard normal.
pub struct MixtureSampler<'a> {
    mix: &'a GaussianMixtureSpec,
    rng: ChaCha8Rng,
}

impl<'a> MixtureSampler<'a> {
    pub fn new(mix: &'a GaussianMixtureSpec, seed: u64, stream: u64) -> Self {
        MixtureSampler {
            mix,
            rng: stream_rng(seed, stream),
        }
    }

    /// Writes the next point into `buf` and returns its class.
    pub fn next_into(&mut self, buf: &mut [f64]) -> Class {
        let label = if self.rng.random::<bool>() {
            Class::Plus
        } else {
            Class::Minus
        };
        let sigma = self.mix.sigma();
        for (x, m) in buf.iter_mut().zip(self.mix.mean(label)) {
            let z: f64 = self.rng.sample(StandardNormal);
            *x = m + sigma * z;
        }
        label
    }
}

/// `n` labeled points stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    points: Vec<f64>,
    labels: Vec<Class>,
    dim: usize,
    seed: u64,
}

impl LabeledDataset {
    /// Builds a dataset from explicit rows; `seed` is recorded as 0.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<Class>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Domain("dataset must contain at least one point".into()));
        }
        ensure_dim(rows.len(), labels.len())?;
        let dim = rows[0].len();
        let mut points = Vec::with_capacity(rows.len() * dim);
        for row in &rows {
            ensure_dim(dim, row.len())?;
            points.extend_from_slice(row);
        }
        Ok(LabeledDataset {
            points,
            labels,
            dim,
            seed: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> Class {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Class] {
        &self.labels
    }

    /// Row-major point matrix.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], Class)> + '_ {
        self.points
            .chunks_exact(self.dim)
            .zip(self.labels.iter().copied())
    }

    /// Splits into the first `k` points and the rest. Points are i.i.d., so
    /// this is a uniformly random split.
    pub fn split_at(&self, k: usize) -> Result<(LabeledDataset, LabeledDataset)> {
        if k == 0 || k >= self.len() {
            return Err(Error::Domain(format!(
                "split point {k} must lie strictly inside 0..{}",
                self.len()
            )));
        }
        let cut = k * self.dim;
        let head = LabeledDataset {
            points: self.points[..cut].to_vec(),
            labels: self.labels[..k].to_vec(),
            dim: self.dim,
            seed: self.seed,
        };
        let tail = LabeledDataset {
            points: self.points[cut..].to_vec(),
            labels: self.labels[k..].to_vec(),
            dim: self.dim,
            seed: self.seed,
        };
        Ok((head, tail))
    }

    /// CSV with header `label,x0,...,x{d-1}`; labels are `+`/`-`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "label")?;
        for j in 0..self.dim {
            write!(out, ",x{j}")?;
        }
        writeln!(out)?;
        for (x, label) in self.iter() {
            out.write_all(match label {
                Class::Plus => b"+",
                Class::Minus => b"-",
            })?;
            for v in x {
                write!(out, ",{}", format_real(*v))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// `n` points from stream 0 of `seed`.
pub fn sample(mix: &GaussianMixtureSpec, n: usize, seed: u64) -> Result<LabeledDataset> {
    sample_stream(mix, n, seed, 0)
}

/// `n` points from stream `stream` of `seed`.
pub fn sample_stream(
    mix: &GaussianMixtureSpec,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<LabeledDataset> {
    if n == 0 {
        return Err(Error::Domain("sample size must be positive".into()));
    }
    let dim = mix.dim();
    let mut sampler = MixtureSampler::new(mix, seed, stream);
    let mut points = vec![0.0; n * dim];
    let labels = points
        .chunks_exact_mut(dim)
        .map(|row| sampler.next_into(row))
        .collect();
    Ok(LabeledDataset {
        points,
        labels,
        dim,
        seed,
    })
}

fn tally(counts: &mut StatusCounts, status: PointStatus) {
    match status {
        PointStatus::Misclassified => counts.misclassified += 1,
        PointStatus::StrongAdversarial => counts.strong_adversarial += 1,
        PointStatus::AdversarialOnly => counts.adversarial_only += 1,
        PointStatus::Robust => counts.robust += 1,
    }
}

/// Status counts over an existing dataset.
pub fn count_statuses(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    budget: &PerturbationBudget,
    data: &LabeledDataset,
) -> Result<StatusCounts> {
    ensure_dim(clf.dim(), data.dim())?;
    let sets = DefiningSets::new(clf, mix, budget)?;
    let mut counts = StatusCounts::default();
    for (x, label) in data.iter() {
        tally(&mut counts, sets.status(clf, x, label));
    }
    Ok(counts)
}

/// Status counts over `n` fresh points of stream `stream`. The points are the
/// ones [`sample_stream`] would return, generated without storing them.
pub fn count_statuses_streamed(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    budget: &PerturbationBudget,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<StatusCounts> {
    if n == 0 {
        return Err(Error::Domain("sample size must be positive".into()));
    }
    clf.check_dim(mix)?;
    let sets = DefiningSets::new(clf, mix, budget)?;
    let mut sampler = MixtureSampler::new(mix, seed, stream);
    let mut x = vec![0.0; mix.dim()];
    let mut counts = StatusCounts::default();
    for _ in 0..n {
        let label = sampler.next_into(&mut x);
        tally(&mut counts, sets.status(clf, &x, label));
    }
    Ok(counts)
}

/// Monte Carlo rates over `n` fresh points drawn with `seed`.
pub fn empirical_rates(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    budget: &PerturbationBudget,
    n: usize,
    seed: u64,
) -> Result<RateReport> {
    let counts = count_statuses_streamed(clf, mix, budget, n, seed, 0)?;
    RateReport::from_counts(&counts, budget.delta().is_some())
}

/// Monte Carlo rates over an existing dataset.
pub fn empirical_rates_on(
    clf: &LinearClassifier,
    mix: &GaussianMixtureSpec,
    budget: &PerturbationBudget,
    data: &LabeledDataset,
) -> Result<RateReport> {
    let counts = count_statuses(clf, mix, budget, data)?;
    RateReport::from_counts(&counts, budget.delta().is_some())
}

fn noise_mean(
    d: usize,
    sigma: f64,
    n: usize,
    seed: u64,
    stat: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    if n == 0 || d == 0 {
        return Err(Error::Domain("sample size and dimension must be positive".into()));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    let mut rng = stream_rng(seed, 0);
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    for _ in 0..n {
        for v in x.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = sigma * z;
        }
        total += stat(&x);
    }
    Ok(total / n as f64)
}

/// Mean of `||x||_p^p` over `n` draws of `x ~ N(0, sigma^2 I_d)`.
pub fn empirical_lp_noise(p: NormOrder, d: usize, sigma: f64, n: usize, seed: u64) -> Result<f64> {
    let p = match p {
        NormOrder::Finite(p) => p,
        NormOrder::Infinity => {
            return Err(Error::Domain(
                "p = inf has no p-th power moment; use empirical_linf_noise".into(),
            ))
        }
    };
    noise_mean(d, sigma, n, seed, |x| x.iter().map(|v| v.abs().powf(p)).sum())
}

/// Mean of `||x||_inf` over `n` draws of `x ~ N(0, sigma^2 I_d)`.
pub fn empirical_linf_noise(d: usize, sigma: f64, n: usize, seed: u64) -> Result<f64> {
    noise_mean(d, sigma, n, seed, |x| x.iter().fold(0.0, |m, v| m.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MeanLayout;
    use crate::numerics::abs_moment;
    use crate::rates::{closed_form_report, misclassification_rate};

    fn mix(mu: f64, d: usize) -> GaussianMixtureSpec {
        GaussianMixtureSpec::symmetric(MeanLayout::Axis, mu, d, 1.0).unwrap()
    }

    #[test]
    fn rejects_empty_sample() {
        assert!(matches!(sample(&mix(1.0, 2), 0, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn class_balance_and_moments() {
        let m = GaussianMixtureSpec::new(vec![1.0, -2.0, 0.5], vec![-1.0, 0.0, 3.0], 1.5).unwrap();
        let n = 100_000;
        let data = sample(&m, n, 7).unwrap();
        let plus = data.labels().iter().filter(|c| **c == Class::Plus).count();
        let frac = plus as f64 / n as f64;
        assert!((frac - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());

        for class in [Class::Plus, Class::Minus] {
            let rows: Vec<&[f64]> = data.iter().filter(|(_, c)| *c == class).map(|(x, _)| x).collect();
            let k = rows.len() as f64;
            for j in 0..3 {
                let mean = rows.iter().map(|x| x[j]).sum::<f64>() / k;
                assert!((mean - m.mean(class)[j]).abs() < 3.0 * 1.5 / (n as f64 / 2.0).sqrt());
                let var = rows.iter().map(|x| (x[j] - mean).powi(2)).sum::<f64>() / (k - 1.0);
                assert!((var / 2.25 - 1.0).abs() < 0.02);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let m = mix(2.0, 5);
        assert_eq!(sample(&m, 50, 3).unwrap(), sample(&m, 50, 3).unwrap());
        assert_ne!(sample(&m, 50, 3).unwrap(), sample(&m, 50, 4).unwrap());
        assert_ne!(
            sample_stream(&m, 50, 3, 0).unwrap(),
            sample_stream(&m, 50, 3, 1).unwrap()
        );
    }

    #[test]
    fn streamed_counts_match_stored_sample() {
        let m = mix(1.0, 4);
        let clf = LinearClassifier::new(vec![1.0, 0.2, -0.1, 0.0], 0.05).unwrap();
        let budget = PerturbationBudget::l2(0.8, Some(0.3)).unwrap();
        let data = sample_stream(&m, 2000, 11, 5).unwrap();
        let stored = count_statuses(&clf, &m, &budget, &data).unwrap();
        let streamed = count_statuses_streamed(&clf, &m, &budget, 2000, 11, 5).unwrap();
        assert_eq!(stored, streamed);
        assert_eq!(stored.total(), 2000);
    }

    #[test]
    fn zero_budget_has_no_adversarial_points() {
        let m = mix(1.0, 3);
        let clf = LinearClassifier::new(vec![1.0, 0.5, 0.1], 0.2).unwrap();
        let budget = PerturbationBudget::l2(0.0, Some(0.0)).unwrap();
        let r = empirical_rates(&clf, &m, &budget, 20_000, 1).unwrap();
        assert_eq!(r.p_adv.value(), 0.0);
        assert_eq!(r.p_s_adv.unwrap().value(), 0.0);
    }

    #[test]
    fn misclassification_matches_closed_form() {
        let m = mix(1.0, 5);
        let clf = LinearClassifier::new(vec![1.0, 0.4, 0.0, -0.3, 0.2], -0.1).unwrap();
        let budget = PerturbationBudget::l2(0.5, None).unwrap();
        let r = empirical_rates(&clf, &m, &budget, 100_000, 2).unwrap();
        let exact = misclassification_rate(&clf, &m).unwrap().value();
        assert!((r.p_m.value() - exact).abs() < 3.0 * r.std_err.unwrap().p_m);
        assert!(r.p_s_adv.is_none());
    }

    #[test]
    fn strong_rate_matches_closed_form_at_snr_four() {
        let m = mix(4.0, 361);
        // A deflected classifier with theta about 0.1.
        let mut w = m.signal().to_vec();
        w[1] = 0.4;
        let clf = LinearClassifier::new(w, 0.0).unwrap();
        let budget = PerturbationBudget::from_eta(&m, 0.3, 0.3, NormOrder::L2).unwrap();
        let mc = empirical_rates(&clf, &m, &budget, 100_000, 3).unwrap();
        let cf = closed_form_report(&clf, &m, &budget).unwrap();
        let se = mc.std_err.unwrap();
        let tol = |s: f64| 3.0 * s.max(1.0 / 100_000.0);
        assert!((mc.p_s_adv.unwrap().value() - cf.p_s_adv.unwrap().value()).abs() <= tol(se.p_s_adv.unwrap()));
        assert!((mc.p_adv.value() - cf.p_adv.value()).abs() <= tol(se.p_adv));
        assert!(mc.p_s_adv.unwrap() <= mc.p_adv);
    }

    #[test]
    fn csv_export() {
        let data = LabeledDataset::from_rows(
            vec![vec![1.5, -0.25], vec![0.0, 2.0]],
            vec![Class::Plus, Class::Minus],
        )
        .unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("label,x0,x1"));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "+");
        assert_eq!(first[1].parse::<f64>().unwrap(), 1.5);
        assert_eq!(first[2].parse::<f64>().unwrap(), -0.25);
        assert!(lines.next().unwrap().starts_with("-,"));
    }

    #[test]
    fn format_real_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, std::f64::consts::PI] {
            assert_eq!(format_real(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn split_preserves_order() {
        let data = sample(&mix(1.0, 2), 10, 1).unwrap();
        let (a, b) = data.split_at(7).unwrap();
        assert_eq!((a.len(), b.len()), (7, 3));
        assert_eq!(b.point(0), data.point(7));
        assert!(data.split_at(10).is_err());
    }

    #[test]
    fn lp_noise_moments() {
        let cases = [(2.0, 361.0), (1.0, 288.0), (3.0, 576.1)];
        for (p, expected) in cases {
            let got = empirical_lp_noise(NormOrder::new(p).unwrap(), 361, 1.0, 20_000, 9).unwrap();
            let theory = abs_moment(p).unwrap() * 361.0;
            assert!((theory - expected).abs() / expected < 1e-3);
            assert!((got / theory - 1.0).abs() < 0.02, "p={p}: {got} vs {theory}");
        }
        assert!(empirical_lp_noise(NormOrder::Infinity, 3, 1.0, 10, 1).is_err());
    }

    #[test]
    fn linf_noise_order() {
        for d in [100, 1000] {
            let m = empirical_linf_noise(d, 2.0, 2000, 4).unwrap();
            let ratio = m / (2.0 * (d as f64).ln().sqrt());
            assert!((1.0..=2.5).contains(&ratio), "d={d}: {ratio}");
        }
    }
}
