//! Exact posterior computation, restricted mixture densities and
//! hierarchical sampling from ball-restricted priors.
//!
//! All weight arithmetic runs in log space with a single max-shift; sums are
//! reduced in ascending index order so results are bit-reproducible across
//! thread counts.

use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::model::{log_likelihood_hist, sample_index, DataSample, ModelFamily, Prior};
use crate::rng::{CounterRng, STREAM_COMPONENT, STREAM_DATA};

/// Normalized posterior weights over family indices.
#[derive(Debug, Clone)]
pub struct Posterior {
    pub weights: Vec<f64>,
    /// log of the evidence sum_t nu(t) f_t(X).
    pub log_evidence: f64,
}

/// Max-shifted exponentiation of log weights.
///
/// Entries of -inf contribute exactly zero mass and are excluded from the
/// shifted sum. Returns the normalized weights and the log of the sum.
pub fn normalize_log_weights(log_weights: &[f64]) -> Result<(Vec<f64>, f64)> {
    let max = log_weights
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateEvidence);
    }
    let mut shifted: Vec<f64> = log_weights
        .iter()
        .map(|&v| if v == f64::NEG_INFINITY { 0.0 } else { (v - max).exp() })
        .collect();
    let sum: f64 = shifted.iter().sum();
    for w in &mut shifted {
        *w /= sum;
    }
    Ok((shifted, max + sum.ln()))
}

/// Posterior weights proportional to nu(t) f_t(X), via log-sum-exp.
pub fn compute_posterior(
    prior: &Prior,
    family: &ModelFamily,
    data: &DataSample,
) -> Result<Posterior> {
    if prior.len() != family.len() {
        return Err(Error::Dimension {
            left: prior.len(),
            right: family.len(),
        });
    }
    let hist = data.histogram(family.sample_space_size());
    let log_weights: Vec<f64> = (0..family.len())
        .map(|t| {
            let p = prior.get(t);
            if p == 0.0 {
                f64::NEG_INFINITY
            } else {
                p.ln() + log_likelihood_hist(family, t, &hist)
            }
        })
        .collect();
    let (weights, log_evidence) = normalize_log_weights(&log_weights)?;
    Ok(Posterior {
        weights,
        log_evidence,
    })
}

/// Posterior mass of the closed Hellinger ball around `center`.
pub fn posterior_ball_mass(
    posterior: &Posterior,
    family: &ModelFamily,
    center: usize,
    radius: f64,
) -> f64 {
    let mut mass = 0.0;
    for (t, &w) in posterior.weights.iter().enumerate() {
        if family.hellinger(center, t) <= radius {
            mass += w;
        }
    }
    mass
}

/// Prior conditioned on an index set B with nu(B) > 0.
#[derive(Debug, Clone)]
pub struct RestrictedMixture {
    indices: Vec<usize>,
    cond_weights: Vec<f64>,
    prior_mass: f64,
}

impl RestrictedMixture {
    pub fn new(prior: &Prior, index_set: &[usize]) -> Result<Self> {
        let mut indices = index_set.to_vec();
        indices.sort_unstable();
        indices.dedup();
        let mass: f64 = indices.iter().map(|&t| prior.get(t)).sum();
        if !(mass > 0.0) {
            return Err(Error::EmptyRestriction);
        }
        let cond_weights = indices.iter().map(|&t| prior.get(t) / mass).collect();
        Ok(Self {
            indices,
            cond_weights,
            prior_mass: mass,
        })
    }

    /// All indices within `radius` of `center`.
    pub fn ball(prior: &Prior, metric: &impl Metric, center: usize, radius: f64) -> Result<Self> {
        Self::new(prior, &metric.ball(center, radius))
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn cond_weights(&self) -> &[f64] {
        &self.cond_weights
    }

    pub fn prior_mass(&self) -> f64 {
        self.prior_mass
    }
}

/// log g_B(X): log of the conditional-prior-weighted average of the
/// likelihoods over B, computed with a max shift.
pub fn log_mixture_density(
    mix: &RestrictedMixture,
    family: &ModelFamily,
    data: &DataSample,
) -> f64 {
    let hist = data.histogram(family.sample_space_size());
    let terms: Vec<f64> = mix
        .indices
        .iter()
        .zip(&mix.cond_weights)
        .map(|(&t, &w)| {
            if w == 0.0 {
                f64::NEG_INFINITY
            } else {
                w.ln() + log_likelihood_hist(family, t, &hist)
            }
        })
        .collect();
    let max = terms
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = terms
        .iter()
        .map(|&v| if v == f64::NEG_INFINITY { 0.0 } else { (v - max).exp() })
        .sum();
    max + sum.ln()
}

/// Hierarchical draw from P_B: an index from the conditional prior, then n
/// i.i.d. observations from its density. Deterministic given the seed; a
/// singleton B reproduces `sample_iid` of that density bit for bit.
pub fn sample_from_restricted_mixture(
    mix: &RestrictedMixture,
    family: &ModelFamily,
    n: usize,
    seed: u64,
) -> DataSample {
    let mut cum = 0.0;
    let cdf: Vec<f64> = mix
        .cond_weights
        .iter()
        .map(|&w| {
            cum += w;
            cum
        })
        .collect();
    let u = CounterRng::new(seed, STREAM_COMPONENT).f64_at(0);
    let component = mix.indices[sample_index(&cdf, u) as usize];
    let density = family.density(component);
    let obs_cdf = density.cumulative();
    let rng = CounterRng::new(seed, STREAM_DATA);
    let observations = (0..n)
        .map(|i| sample_index(&obs_cdf, rng.f64_at(i as u64)))
        .collect();
    DataSample { observations, seed }
}
