//! Indexed model families over finite sample spaces, priors, true
//! distributions and i.i.d. sampling.
//!
//! A family realizes the abstract model {P_t : t in S} as a finite grid: one
//! density per index, a parameter point per index, and a distinguished center
//! index s that stays fixed throughout an experiment. The index-to-density
//! map must be injective, which is checked at construction through pairwise
//! Hellinger distances.

use crate::error::{Error, Result};
use crate::hellinger::{affinity, ProbabilityTable};
use crate::metric::Metric;
use crate::rng::{CounterRng, STREAM_DATA};
use crate::NORM_TOL;

/// Finite indexed family with a distinguished center index.
#[derive(Debug, Clone)]
pub struct ModelFamily {
    sample_space_size: usize,
    parameter_points: Vec<Vec<f64>>,
    densities: Vec<ProbabilityTable>,
    log_densities: Vec<Vec<f64>>,
    center_index: usize,
    /// Pairwise Hellinger distances, row-major.
    dist: Vec<f64>,
}

impl ModelFamily {
    pub fn new(
        parameter_points: Vec<Vec<f64>>,
        densities: Vec<ProbabilityTable>,
        center_index: usize,
    ) -> Result<Self> {
        if densities.is_empty() {
            return Err(Error::domain("family must contain at least one index"));
        }
        if parameter_points.len() != densities.len() {
            return Err(Error::Dimension {
                left: parameter_points.len(),
                right: densities.len(),
            });
        }
        let sample_space_size = densities[0].support_size();
        for d in &densities {
            if d.support_size() != sample_space_size {
                return Err(Error::Dimension {
                    left: d.support_size(),
                    right: sample_space_size,
                });
            }
        }
        if center_index >= densities.len() {
            return Err(Error::domain(format!(
                "center index {center_index} out of range for {} indices",
                densities.len()
            )));
        }
        let dim = parameter_points[0].len();
        if dim == 0 || parameter_points.iter().any(|p| p.len() != dim) {
            return Err(Error::domain("parameter points must share a dimension >= 1"));
        }

        let k = densities.len();
        let mut dist = vec![0.0; k * k];
        for i in 0..k {
            for j in (i + 1)..k {
                let h = affinity(&densities[i], &densities[j])?.h;
                if h == 0.0 {
                    return Err(Error::Injectivity { first: i, second: j });
                }
                dist[i * k + j] = h;
                dist[j * k + i] = h;
            }
        }

        let log_densities = densities
            .iter()
            .map(|d| {
                d.weights()
                    .iter()
                    .map(|&w| if w > 0.0 { w.ln() } else { f64::NEG_INFINITY })
                    .collect()
            })
            .collect();

        Ok(Self {
            sample_space_size,
            parameter_points,
            densities,
            log_densities,
            center_index,
            dist,
        })
    }

    pub fn len(&self) -> usize {
        self.densities.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample_space_size(&self) -> usize {
        self.sample_space_size
    }

    pub fn center_index(&self) -> usize {
        self.center_index
    }

    pub fn density(&self, index: usize) -> &ProbabilityTable {
        &self.densities[index]
    }

    pub fn parameter_point(&self, index: usize) -> &[f64] {
        &self.parameter_points[index]
    }

    pub fn hellinger(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.densities.len() + j]
    }

    /// Euclidean distance between parameter points.
    pub fn parameter_distance(&self, i: usize, j: usize) -> f64 {
        self.parameter_points[i]
            .iter()
            .zip(&self.parameter_points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn log_density(&self, index: usize) -> &[f64] {
        &self.log_densities[index]
    }
}

impl Metric for ModelFamily {
    fn len(&self) -> usize {
        self.densities.len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.hellinger(i, j)
    }
}

/// Prior weights over family indices.
#[derive(Debug, Clone)]
pub struct Prior {
    weights: Vec<f64>,
}

impl Prior {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite { index: i, value: w });
            }
            if w < 0.0 {
                return Err(Error::Negative { index: i, value: w });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::Normalization { sum });
        }
        Ok(Self { weights })
    }

    pub fn normalized(raw: Vec<f64>) -> Result<Self> {
        let sum: f64 = raw.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::domain("cannot normalize prior: sum <= 0"));
        }
        Self::new(raw.into_iter().map(|w| w / sum).collect())
    }

    pub fn uniform(len: usize) -> Self {
        Self {
            weights: vec![1.0 / len as f64; len],
        }
    }

    pub fn point_mass(len: usize, index: usize) -> Self {
        let mut weights = vec![0.0; len];
        weights[index] = 1.0;
        Self { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, index: usize) -> f64 {
        self.weights[index]
    }
}

/// An i.i.d. sample of sample-space point indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSample {
    pub observations: Vec<u32>,
    pub seed: u64,
}

impl DataSample {
    pub fn n(&self) -> usize {
        self.observations.len()
    }

    /// Occurrence counts per sample-space point.
    pub fn histogram(&self, sample_space_size: usize) -> Vec<u64> {
        let mut hist = vec![0u64; sample_space_size];
        for &x in &self.observations {
            hist[x as usize] += 1;
        }
        hist
    }
}

/// The data-generating distribution, possibly outside the family.
#[derive(Debug, Clone)]
pub struct TrueDistribution {
    pub density: ProbabilityTable,
    /// Hellinger distance to the center density when tracked, stored as
    /// kappa / sqrt(2n).
    pub kappa_over_sqrt2n: Option<f64>,
}

impl TrueDistribution {
    pub fn in_family(family: &ModelFamily, index: usize) -> Result<Self> {
        if index >= family.len() {
            return Err(Error::domain(format!("true-distribution index {index} out of range")));
        }
        Ok(Self {
            density: family.density(index).clone(),
            kappa_over_sqrt2n: Some(family.hellinger(family.center_index(), index)),
        })
    }

    pub fn explicit(density: ProbabilityTable, kappa_over_sqrt2n: Option<f64>) -> Self {
        Self {
            density,
            kappa_over_sqrt2n,
        }
    }
}

/// Draws `n` i.i.d. observations from `density`, keyed by `seed`.
///
/// Inverse-CDF over the ascending outcome order; bit-reproducible.
pub fn sample_iid(density: &ProbabilityTable, n: usize, seed: u64) -> DataSample {
    let cdf = density.cumulative();
    let rng = CounterRng::new(seed, STREAM_DATA);
    let observations = (0..n)
        .map(|i| {
            let u = rng.f64_at(i as u64);
            sample_index(&cdf, u)
        })
        .collect();
    DataSample { observations, seed }
}

pub(crate) fn sample_index(cdf: &[f64], u: f64) -> u32 {
    // First index with cdf >= u; the final index absorbs rounding of the
    // cumulative sum.
    match cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
        Ok(i) | Err(i) => i.min(cdf.len() - 1) as u32,
    }
}

/// Log-likelihood sum log f_t(X) = sum_i log f_t(X_i); -inf as soon as an
/// observation has zero density.
pub fn log_likelihood(family: &ModelFamily, index: usize, data: &DataSample) -> f64 {
    let hist = data.histogram(family.sample_space_size());
    log_likelihood_hist(family, index, &hist)
}

/// Same, from a precomputed histogram (ascending outcome order).
pub fn log_likelihood_hist(family: &ModelFamily, index: usize, hist: &[u64]) -> f64 {
    let logf = family.log_density(index);
    let mut sum = 0.0;
    for (x, &count) in hist.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let lf = logf[x];
        if lf == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        sum += count as f64 * lf;
    }
    sum
}

/// Fitted polynomial envelope a |t-u|^alpha <= h(t,u) <= A |t-u|^alpha.
#[derive(Debug, Clone)]
pub struct EnvelopeFit {
    pub alpha: f64,
    pub a: f64,
    pub big_a: f64,
    /// Pairs violating the fitted envelope; empty by construction.
    pub violations: Vec<(usize, usize)>,
}

/// Fits the tightest envelope constants over all index pairs.
pub fn fit_hellinger_euclidean_envelope(family: &ModelFamily, alpha: f64) -> Result<EnvelopeFit> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("envelope exponent {alpha} must be > 0")));
    }
    if family.len() < 2 {
        return Err(Error::domain("envelope fit needs at least two parameter points"));
    }
    let mut coincident = Vec::new();
    let mut a = f64::INFINITY;
    let mut big_a: f64 = 0.0;
    for i in 0..family.len() {
        for j in (i + 1)..family.len() {
            let e = family.parameter_distance(i, j);
            if e == 0.0 {
                coincident.push((i, j));
                continue;
            }
            let ratio = family.hellinger(i, j) / e.powf(alpha);
            a = a.min(ratio);
            big_a = big_a.max(ratio);
        }
    }
    if !coincident.is_empty() {
        return Err(Error::domain(format!(
            "coincident parameter points make the envelope ratio undefined for pairs {coincident:?}"
        )));
    }
    Ok(EnvelopeFit {
        alpha,
        a,
        big_a,
        violations: Vec::new(),
    })
}

/// Declarative family constructors; realized by [`build_grid_family`].
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    /// Two-point sample space, density [1-t, t] per grid value t.
    BernoulliGrid { params: Vec<f64>, center: usize },
    /// Densities base + step * direction per grid step.
    MultinomialPerturbation {
        base: Vec<f64>,
        direction: Vec<f64>,
        steps: Vec<f64>,
        center: usize,
    },
    /// Discretized location family: density(i) proportional to
    /// exp(-(u_i - loc)^2 / (2 sigma^2)) on m equispaced points u_i.
    GaussianLocationGrid {
        sample_space_size: usize,
        locations: Vec<f64>,
        sigma: f64,
        center: usize,
    },
    /// Uniform center plus `per_shell` points at each prescribed Hellinger
    /// radius, built by rotating the square-root density toward coordinate
    /// vertices. Radii must satisfy 1 - r^2 >= 1/sqrt(m).
    HellingerShells {
        sample_space_size: usize,
        radii: Vec<f64>,
        per_shell: usize,
    },
    /// Explicit densities and parameter points.
    Explicit {
        points: Vec<Vec<f64>>,
        densities: Vec<Vec<f64>>,
        center: usize,
    },
}

/// Builds a concrete family from its specification.
pub fn build_grid_family(spec: &FamilySpec) -> Result<ModelFamily> {
    match spec {
        FamilySpec::BernoulliGrid { params, center } => {
            let mut points = Vec::with_capacity(params.len());
            let mut densities = Vec::with_capacity(params.len());
            for &t in params {
                if !(0.0..=1.0).contains(&t) {
                    return Err(Error::domain(format!("Bernoulli parameter {t} outside [0,1]")));
                }
                points.push(vec![t]);
                densities.push(ProbabilityTable::new(vec![1.0 - t, t])?);
            }
            ModelFamily::new(points, densities, *center)
        }
        FamilySpec::MultinomialPerturbation {
            base,
            direction,
            steps,
            center,
        } => {
            if base.len() != direction.len() {
                return Err(Error::Dimension {
                    left: base.len(),
                    right: direction.len(),
                });
            }
            let mut points = Vec::with_capacity(steps.len());
            let mut densities = Vec::with_capacity(steps.len());
            for &s in steps {
                let w: Vec<f64> = base
                    .iter()
                    .zip(direction)
                    .map(|(&b, &d)| b + s * d)
                    .collect();
                points.push(vec![s]);
                densities.push(ProbabilityTable::new(w)?);
            }
            ModelFamily::new(points, densities, *center)
        }
        FamilySpec::GaussianLocationGrid {
            sample_space_size,
            locations,
            sigma,
            center,
        } => {
            if !(*sigma > 0.0) {
                return Err(Error::domain("location-family sigma must be > 0"));
            }
            let m = *sample_space_size;
            let mut points = Vec::with_capacity(locations.len());
            let mut densities = Vec::with_capacity(locations.len());
            for &loc in locations {
                let raw: Vec<f64> = (0..m)
                    .map(|i| {
                        let u = (i as f64 + 0.5) / m as f64;
                        (-(u - loc) * (u - loc) / (2.0 * sigma * sigma)).exp()
                    })
                    .collect();
                points.push(vec![loc]);
                densities.push(ProbabilityTable::normalized(raw)?);
            }
            ModelFamily::new(points, densities, *center)
        }
        FamilySpec::HellingerShells {
            sample_space_size,
            radii,
            per_shell,
        } => build_shell_family(*sample_space_size, radii, *per_shell),
        FamilySpec::Explicit {
            points,
            densities,
            center,
        } => {
            let tables = densities
                .iter()
                .map(|w| ProbabilityTable::new(w.clone()))
                .collect::<Result<Vec<_>>>()?;
            ModelFamily::new(points.clone(), tables, *center)
        }
    }
}

/// Center = uniform density; each shell point is a rotation of the uniform
/// square-root vector toward a coordinate vertex, which places it at the
/// requested Hellinger radius exactly (up to round-off).
fn build_shell_family(m: usize, radii: &[f64], per_shell: usize) -> Result<ModelFamily> {
    if m < 2 {
        return Err(Error::domain("shell family needs a sample space of size >= 2"));
    }
    if per_shell == 0 || per_shell > m - 1 {
        return Err(Error::domain(format!(
            "per_shell must be in [1, {}] for sample-space size {m}",
            m - 1
        )));
    }
    let root_m = (m as f64).sqrt();
    let mut points = vec![vec![0.0, 0.0]];
    let mut densities = vec![ProbabilityTable::uniform(m)];
    for (si, &r) in radii.iter().enumerate() {
        let cos_t = 1.0 - r * r;
        if !(r > 0.0) || cos_t < 1.0 / root_m {
            return Err(Error::domain(format!(
                "shell radius {r} not representable with nonnegative densities on {m} points"
            )));
        }
        let sin_t = (1.0 - cos_t * cos_t).sqrt();
        let w_self = (1.0 - 1.0 / m as f64).sqrt();
        let w_other = -(1.0 / m as f64) / w_self;
        for k in 0..per_shell {
            let vertex = k + 1;
            let raw: Vec<f64> = (0..m)
                .map(|j| {
                    let w = if j == vertex { w_self } else { w_other };
                    let v = cos_t / root_m + sin_t * w;
                    v * v
                })
                .collect();
            points.push(vec![r, (si * per_shell + k + 1) as f64]);
            densities.push(ProbabilityTable::normalized(raw)?);
        }
    }
    ModelFamily::new(points, densities, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bernoulli_grid(params: &[f64], center: usize) -> ModelFamily {
        build_grid_family(&FamilySpec::BernoulliGrid {
            params: params.to_vec(),
            center,
        })
        .unwrap()
    }

    #[test]
    fn grid_family_basics() {
        let fam = bernoulli_grid(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9], 4);
        assert_eq!(fam.len(), 9);
        assert_eq!(fam.sample_space_size(), 2);
        assert_eq!(fam.center_index(), 4);
        assert_abs_diff_eq!(fam.hellinger(4, 3), 0.07116071243935135, epsilon = 1e-12);
    }

    #[test]
    fn singleton_family_allowed() {
        let fam = bernoulli_grid(&[0.5], 0);
        assert_eq!(fam.len(), 1);
    }

    #[test]
    fn duplicate_densities_rejected() {
        let spec = FamilySpec::Explicit {
            points: vec![vec![0.0], vec![1.0]],
            densities: vec![vec![0.4, 0.6], vec![0.4, 0.6]],
            center: 0,
        };
        assert!(matches!(
            build_grid_family(&spec),
            Err(Error::Injectivity { first: 0, second: 1 })
        ));
    }

    #[test]
    fn injectivity_minimum_distance_positive() {
        let fam = bernoulli_grid(&[0.1, 0.3, 0.5, 0.7, 0.9], 2);
        let mut min = f64::INFINITY;
        for i in 0..fam.len() {
            for j in (i + 1)..fam.len() {
                min = min.min(fam.hellinger(i, j));
            }
        }
        assert!(min > 0.0);
    }

    #[test]
    fn sampling_determinism_and_empty() {
        let d = ProbabilityTable::new(vec![0.25, 0.25, 0.5]).unwrap();
        let a = sample_iid(&d, 1000, 99);
        let b = sample_iid(&d, 1000, 99);
        assert_eq!(a, b);
        assert_ne!(a, sample_iid(&d, 1000, 100));
        assert_eq!(sample_iid(&d, 0, 1).n(), 0);
    }

    #[test]
    fn sampling_marginal_frequencies() {
        let d = ProbabilityTable::new(vec![0.5, 0.5]).unwrap();
        let n = 100_000;
        let s = sample_iid(&d, n, 31);
        let freq = s.histogram(2)[0] as f64 / n as f64;
        // 3-sigma binomial band
        assert!((freq - 0.5).abs() <= 3.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn log_likelihood_values() {
        let fam = build_grid_family(&FamilySpec::Explicit {
            points: vec![vec![0.0], vec![1.0]],
            densities: vec![vec![0.5, 0.5], vec![0.8, 0.2]],
            center: 0,
        })
        .unwrap();
        let data = DataSample {
            observations: vec![0, 1, 0, 1, 1],
            seed: 0,
        };
        assert_abs_diff_eq!(
            log_likelihood(&fam, 0, &data),
            -5.0 * 2.0f64.ln(),
            epsilon = 1e-12
        );
        let data = DataSample {
            observations: vec![0, 0, 1],
            seed: 0,
        };
        assert_abs_diff_eq!(log_likelihood(&fam, 1, &data), -2.05572501506252, epsilon = 1e-12);
    }

    #[test]
    fn log_likelihood_zero_density() {
        let fam = build_grid_family(&FamilySpec::BernoulliGrid {
            params: vec![0.0, 0.5],
            center: 1,
        })
        .unwrap();
        let data = DataSample {
            observations: vec![1],
            seed: 0,
        };
        assert_eq!(log_likelihood(&fam, 0, &data), f64::NEG_INFINITY);
    }

    #[test]
    fn log_likelihood_additive_over_concatenation() {
        let fam = bernoulli_grid(&[0.3, 0.6], 0);
        let d1 = sample_iid(fam.density(0), 400, 5);
        let d2 = sample_iid(fam.density(1), 300, 6);
        let mut obs = d1.observations.clone();
        obs.extend_from_slice(&d2.observations);
        let cat = DataSample {
            observations: obs,
            seed: 0,
        };
        for t in 0..fam.len() {
            let lhs = log_likelihood(&fam, t, &cat);
            let rhs = log_likelihood(&fam, t, &d1) + log_likelihood(&fam, t, &d2);
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
        }
    }

    #[test]
    fn envelope_single_pair() {
        // Two points at parameter distance 0.6 and Hellinger distance 0.3
        // (the second density solved by bisection): a = A = 0.5.
        let target = 0.3;
        let p = ProbabilityTable::new(vec![0.5, 0.5]).unwrap();
        let (mut lo, mut hi) = (0.5, 0.999);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let cand = ProbabilityTable::new(vec![mid, 1.0 - mid]).unwrap();
            if crate::hellinger::hellinger_distance(&p, &cand).unwrap() < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let fam = ModelFamily::new(
            vec![vec![0.0], vec![0.6]],
            vec![p, ProbabilityTable::new(vec![lo, 1.0 - lo]).unwrap()],
            0,
        )
        .unwrap();
        let fit = fit_hellinger_euclidean_envelope(&fam, 1.0).unwrap();
        assert_abs_diff_eq!(fit.a, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.big_a, 0.5, epsilon = 1e-6);
        assert!(fit.violations.is_empty());
    }

    #[test]
    fn envelope_near_linear_bernoulli_regime() {
        let fam = bernoulli_grid(&[0.3, 0.4, 0.5, 0.6, 0.7], 2);
        let fit = fit_hellinger_euclidean_envelope(&fam, 1.0).unwrap();
        assert!(fit.a > 0.0 && fit.big_a >= fit.a);
        assert!(fit.big_a / fit.a <= 1.1, "ratio {}", fit.big_a / fit.a);
    }

    #[test]
    fn envelope_rejects_alpha_zero_and_coincident() {
        let fam = bernoulli_grid(&[0.3, 0.6], 0);
        assert!(fit_hellinger_euclidean_envelope(&fam, 0.0).is_err());
        let fam = ModelFamily::new(
            vec![vec![1.0], vec![1.0]],
            vec![
                ProbabilityTable::new(vec![0.3, 0.7]).unwrap(),
                ProbabilityTable::new(vec![0.4, 0.6]).unwrap(),
            ],
            0,
        )
        .unwrap();
        assert!(fit_hellinger_euclidean_envelope(&fam, 1.0).is_err());
    }

    #[test]
    fn shell_family_radii_are_exact() {
        let radii: Vec<f64> = (1..=6).map(|l| (l as f64 + 0.5) / 10.0).collect();
        let fam = build_grid_family(&FamilySpec::HellingerShells {
            sample_space_size: 4,
            radii: radii.clone(),
            per_shell: 2,
        })
        .unwrap();
        assert_eq!(fam.len(), 13);
        for (si, &r) in radii.iter().enumerate() {
            for k in 0..2 {
                let idx = 1 + si * 2 + k;
                assert_abs_diff_eq!(fam.hellinger(0, idx), r, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn shell_family_rejects_too_large_radius() {
        let spec = FamilySpec::HellingerShells {
            sample_space_size: 4,
            radii: vec![0.8],
            per_shell: 1,
        };
        assert!(build_grid_family(&spec).is_err());
    }

    #[test]
    fn true_distribution_in_family() {
        let fam = bernoulli_grid(&[0.4, 0.5, 0.6], 1);
        let t = TrueDistribution::in_family(&fam, 1).unwrap();
        assert_eq!(t.kappa_over_sqrt2n, Some(0.0));
        assert!(TrueDistribution::in_family(&fam, 9).is_err());
    }
}
