//! Exact Hellinger/Kullback-Leibler kernels on finite sample spaces and the
//! closed-form inequalities relating them.
//!
//! With counting measure as dominating measure, the affinity of two tables is
//! rho(P,Q) = sum_i sqrt(p_i q_i), the squared Hellinger distance is
//! h^2 = 1 - rho and K(P,Q) = sum_i p_i log(p_i/q_i) with the conventions
//! 0 log(0/q) = 0 and p log(p/0) = +inf.

use crate::error::{Error, Result};
use crate::{CMP_TOL, NORM_TOL};

/// A density over a finite sample space (w.r.t. counting measure).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    weights: Vec<f64>,
}

impl ProbabilityTable {
    /// Validates non-negativity and normalization to within 1e-12.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("probability table must be nonempty"));
        }
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

    /// Rescales a nonnegative vector to sum to one, then validates.
    pub fn normalized(raw: Vec<f64>) -> Result<Self> {
        let sum: f64 = raw.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::domain("cannot normalize: sum <= 0"));
        }
        Self::new(raw.into_iter().map(|w| w / sum).collect())
    }

    pub fn uniform(support_size: usize) -> Self {
        let w = 1.0 / support_size as f64;
        Self {
            weights: vec![w; support_size],
        }
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Cumulative sums for inverse-CDF sampling (ascending outcome order).
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.weights
            .iter()
            .map(|&w| {
                acc += w;
                acc
            })
            .collect()
    }
}

fn check_same_support(p: &ProbabilityTable, q: &ProbabilityTable) -> Result<()> {
    if p.support_size() != q.support_size() {
        return Err(Error::Dimension {
            left: p.support_size(),
            right: q.support_size(),
        });
    }
    Ok(())
}

/// Affinity and distance computed along a single arithmetic path:
/// `rho` is the affinity sum, `h2 = 1 - rho` and `h = sqrt(h2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinityResult {
    pub rho: f64,
    pub h2: f64,
    pub h: f64,
}

/// Computes rho, h^2 and h together so the identity rho = 1 - h^2 holds
/// exactly as computed.
pub fn affinity(p: &ProbabilityTable, q: &ProbabilityTable) -> Result<AffinityResult> {
    check_same_support(p, q)?;
    let mut rho = 0.0;
    for (&pi, &qi) in p.weights().iter().zip(q.weights()) {
        rho += (pi * qi).sqrt();
    }
    let rho = rho.clamp(0.0, 1.0);
    let h2 = 1.0 - rho;
    Ok(AffinityResult {
        rho,
        h2,
        h: h2.sqrt(),
    })
}

/// Hellinger affinity rho(P,Q) = sum_i sqrt(p_i q_i), in [0, 1].
pub fn hellinger_affinity(p: &ProbabilityTable, q: &ProbabilityTable) -> Result<f64> {
    Ok(affinity(p, q)?.rho)
}

/// Hellinger distance h = sqrt(1 - rho), in [0, 1].
pub fn hellinger_distance(p: &ProbabilityTable, q: &ProbabilityTable) -> Result<f64> {
    Ok(affinity(p, q)?.h)
}

/// Product affinity rho^n together with its certified upper bound
/// exp(-n(1-rho)).
#[derive(Debug, Clone, Copy)]
pub struct ProductAffinity {
    pub value: f64,
    pub bound: f64,
}

/// Affinity of n-fold product measures: rho(P^n, Q^n) = rho^n <= exp(-n(1-rho)).
pub fn product_affinity(rho: f64, n: u32) -> Result<ProductAffinity> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::domain(format!("affinity {rho} outside [0,1]")));
    }
    if n == 0 {
        return Err(Error::domain("product exponent must be >= 1"));
    }
    let value = rho.powi(n as i32);
    let bound = (-(n as f64) * (1.0 - rho)).exp();
    debug_assert!(value <= bound + CMP_TOL);
    Ok(ProductAffinity { value, bound })
}

/// Squared Hellinger distance of n-fold products: 1 - (1 - h^2)^n <= min(1, n h^2).
pub fn product_hellinger_sq(h2: f64, n: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&h2) {
        return Err(Error::domain(format!("squared distance {h2} outside [0,1]")));
    }
    if n == 0 {
        return Err(Error::domain("product exponent must be >= 1"));
    }
    let value = 1.0 - (1.0 - h2).powi(n as i32);
    debug_assert!(value <= (n as f64 * h2).min(1.0) + CMP_TOL);
    Ok(value)
}

/// K(P,Q) = sum_i p_i log(p_i/q_i); +inf as soon as some p_i > 0 has q_i = 0.
pub fn kl_divergence(p: &ProbabilityTable, q: &ProbabilityTable) -> Result<f64> {
    check_same_support(p, q)?;
    let mut sum = 0.0;
    for (&pi, &qi) in p.weights().iter().zip(q.weights()) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Ok(f64::INFINITY);
        }
        sum += pi * (pi / qi).ln();
    }
    Ok(sum)
}

/// The ratio bound K(z) = (z(log z - 1) + 1) / ((z+1)/2 - sqrt(z)).
///
/// Continuous and increasing on [0, inf) with K(0) = 2 and the removable
/// singularity at z = 1 filled by its limit 4. Near z = 1 both numerator and
/// denominator vanish to second order, so the ratio is evaluated there from
/// the series
///   numerator / (u^2/2)  = 1 - u/3 + u^2/6 - u^3/10 + u^4/15 - ...
///   denominator / (u^2/8) = 1 - u/2 + 5u^2/16 - 7u^3/32 + 21u^4/128 - ...
/// with u = z - 1.
pub fn kl_ratio_bound(m: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::domain(format!("ratio argument {m} must be >= 0")));
    }
    let value = if m == 0.0 {
        2.0
    } else {
        let u = m - 1.0;
        if u.abs() <= 1e-4 {
            let num = 1.0 + u * (-1.0 / 3.0 + u * (1.0 / 6.0 + u * (-0.1 + u / 15.0)));
            let den = 1.0 + u * (-0.5 + u * (5.0 / 16.0 + u * (-7.0 / 32.0 + u * 21.0 / 128.0)));
            4.0 * num / den
        } else {
            // (z+1)/2 - sqrt(z) = (sqrt(z) - 1)^2 / 2 avoids cancellation.
            let num = m * m.ln() - u;
            let s = m.sqrt() - 1.0;
            num / (0.5 * s * s)
        }
    };
    if m >= 1.0 {
        debug_assert!(value <= 4.0 + 2.0 * m.ln() + CMP_TOL);
    }
    Ok(value)
}

/// Joint report for the chain K >= -2 log rho >= 2 h^2 and the two-sided
/// ratio 2 <= K/h^2 <= K(M) with M = max_i p_i/q_i.
#[derive(Debug, Clone)]
pub struct KlSandwichReport {
    pub kl: f64,
    pub neg_two_log_rho: f64,
    pub two_h_squared: f64,
    /// max_i p_i/q_i over the support of p; `None` when p is not absolutely
    /// continuous w.r.t. q.
    pub density_ratio_max: Option<f64>,
    /// K(M) when M is finite.
    pub ratio_bound: Option<f64>,
    /// K/h^2 when h^2 is bounded away from zero.
    pub kl_ratio: Option<f64>,
    /// K >= -2 log rho >= 2 h^2 within 1e-10.
    pub chain_holds: bool,
    /// 2 <= K/h^2 <= K(M) within 1e-10, when defined.
    pub ratio_holds: Option<bool>,
}

pub fn check_kl_hellinger_sandwich(
    p: &ProbabilityTable,
    q: &ProbabilityTable,
) -> Result<KlSandwichReport> {
    let aff = affinity(p, q)?;
    let kl = kl_divergence(p, q)?;
    let neg_two_log_rho = if aff.rho > 0.0 {
        -2.0 * aff.rho.ln()
    } else {
        f64::INFINITY
    };
    let two_h_squared = 2.0 * aff.h2;

    let mut m: f64 = 0.0;
    let mut absolutely_continuous = true;
    for (&pi, &qi) in p.weights().iter().zip(q.weights()) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            absolutely_continuous = false;
            break;
        }
        m = m.max(pi / qi);
    }
    let density_ratio_max = absolutely_continuous.then_some(m);
    let ratio_bound = match density_ratio_max {
        Some(m) => Some(kl_ratio_bound(m)?),
        None => None,
    };

    let chain_holds = kl + CMP_TOL >= neg_two_log_rho && neg_two_log_rho + CMP_TOL >= two_h_squared;

    let kl_ratio = (aff.h2 > 1e-15 && kl.is_finite()).then(|| kl / aff.h2);
    let ratio_holds = match (kl_ratio, ratio_bound) {
        (Some(r), Some(b)) => Some(r + CMP_TOL >= 2.0 && r <= b + CMP_TOL),
        _ => None,
    };

    Ok(KlSandwichReport {
        kl,
        neg_two_log_rho,
        two_h_squared,
        density_ratio_max,
        ratio_bound,
        kl_ratio,
        chain_holds,
        ratio_holds,
    })
}

/// Affinity between `p` and a finite mixture whose components all lie within
/// Hellinger distance `r` of `p`; certified to satisfy rho >= 1 - r^2.
pub fn mixture_affinity(
    p: &ProbabilityTable,
    components: &[(f64, ProbabilityTable)],
    r: f64,
) -> Result<f64> {
    if components.is_empty() {
        return Err(Error::domain("mixture needs at least one component"));
    }
    let wsum: f64 = components.iter().map(|(w, _)| *w).sum();
    if (wsum - 1.0).abs() > NORM_TOL {
        return Err(Error::Normalization { sum: wsum });
    }
    for (i, (w, c)) in components.iter().enumerate() {
        if *w < 0.0 {
            return Err(Error::Negative { index: i, value: *w });
        }
        let d = hellinger_distance(p, c)?;
        if d > r + CMP_TOL {
            return Err(Error::domain(format!(
                "component {i} at Hellinger distance {d} exceeds radius {r}"
            )));
        }
    }
    let m = p.support_size();
    let mut mix = vec![0.0; m];
    for (w, c) in components {
        for (acc, &ci) in mix.iter_mut().zip(c.weights()) {
            *acc += w * ci;
        }
    }
    let mut rho = 0.0;
    for (&pi, &mi) in p.weights().iter().zip(&mix) {
        rho += (pi * mi).sqrt();
    }
    let rho = rho.clamp(0.0, 1.0);
    debug_assert!(rho + CMP_TOL >= 1.0 - r * r);
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tb(w: &[f64]) -> ProbabilityTable {
        ProbabilityTable::new(w.to_vec()).unwrap()
    }

    #[test]
    fn table_validation() {
        assert!(ProbabilityTable::new(vec![0.5, 0.5]).is_ok());
        assert!(matches!(
            ProbabilityTable::new(vec![0.5, 0.6]),
            Err(Error::Normalization { .. })
        ));
        assert!(matches!(
            ProbabilityTable::new(vec![-0.1, 1.1]),
            Err(Error::Negative { .. })
        ));
        assert!(ProbabilityTable::new(vec![]).is_err());
    }

    #[test]
    fn affinity_identical_and_disjoint() {
        assert_eq!(hellinger_affinity(&tb(&[0.5, 0.5]), &tb(&[0.5, 0.5])).unwrap(), 1.0);
        assert_eq!(hellinger_affinity(&tb(&[1.0, 0.0]), &tb(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(hellinger_distance(&tb(&[0.5, 0.5]), &tb(&[0.5, 0.5])).unwrap(), 0.0);
        assert_eq!(hellinger_distance(&tb(&[1.0, 0.0]), &tb(&[0.0, 1.0])).unwrap(), 1.0);
    }

    #[test]
    fn affinity_closed_form() {
        // 2 sqrt(0.09) = 0.6
        let rho = hellinger_affinity(&tb(&[0.1, 0.9]), &tb(&[0.9, 0.1])).unwrap();
        assert_abs_diff_eq!(rho, 0.6, epsilon = 1e-15);
        let h = hellinger_distance(&tb(&[0.1, 0.9]), &tb(&[0.9, 0.1])).unwrap();
        assert_abs_diff_eq!(h, 0.4f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn affinity_same_arithmetic_path() {
        let a = affinity(&tb(&[0.3, 0.2, 0.5]), &tb(&[0.1, 0.6, 0.3])).unwrap();
        assert_eq!(a.h2, 1.0 - a.rho);
        assert_eq!(a.h, a.h2.sqrt());
    }

    #[test]
    fn mismatched_supports_rejected() {
        let e = hellinger_affinity(&tb(&[1.0]), &tb(&[0.5, 0.5]));
        assert!(matches!(e, Err(Error::Dimension { left: 1, right: 2 })));
    }

    #[test]
    fn product_affinity_values() {
        let r = product_affinity(1.0, 7).unwrap();
        assert_eq!(r.value, 1.0);
        let r = product_affinity(0.6, 3).unwrap();
        assert_abs_diff_eq!(r.value, 0.216, epsilon = 1e-15);
        assert_abs_diff_eq!(r.bound, (-1.2f64).exp(), epsilon = 1e-15);
        assert!(r.value <= r.bound);
        let r = product_affinity(0.0, 1).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(product_affinity(1.5, 1).is_err());
        assert!(product_affinity(-0.1, 1).is_err());
    }

    #[test]
    fn product_hellinger_values() {
        assert_eq!(product_hellinger_sq(0.0, 5).unwrap(), 0.0);
        assert_eq!(product_hellinger_sq(0.37, 1).unwrap(), 0.37);
        let v = product_hellinger_sq(0.4, 3).unwrap();
        assert_abs_diff_eq!(v, 0.784, epsilon = 1e-15);
        assert!(v <= 1.2);
        assert!(product_hellinger_sq(1.1, 1).is_err());
    }

    #[test]
    fn kl_values() {
        let p = tb(&[0.5, 0.5]);
        let q = tb(&[0.25, 0.75]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        // 0.5 ln 2 + 0.5 ln(2/3)
        assert_abs_diff_eq!(kl_divergence(&p, &q).unwrap(), 0.14384103622589042, epsilon = 1e-14);
        assert_eq!(
            kl_divergence(&tb(&[1.0, 0.0]), &tb(&[0.0, 1.0])).unwrap(),
            f64::INFINITY
        );
        // 0 log(0/q) = 0 convention
        assert!(kl_divergence(&tb(&[0.0, 1.0]), &tb(&[0.5, 0.5])).unwrap().is_finite());
    }

    #[test]
    fn ratio_bound_values() {
        assert_eq!(kl_ratio_bound(0.0).unwrap(), 2.0);
        assert_abs_diff_eq!(kl_ratio_bound(1.0).unwrap(), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(kl_ratio_bound(4.0).unwrap(), 5.090354888959125, epsilon = 1e-12);
        assert!(kl_ratio_bound(-1.0).is_err());
        // values around the series cutoff pinned by a high-precision oracle
        assert_abs_diff_eq!(kl_ratio_bound(1.0001).unwrap(), 4.000066664166808, epsilon = 1e-11);
        assert_abs_diff_eq!(kl_ratio_bound(0.9999).unwrap(), 3.9999333308331915, epsilon = 1e-11);
        assert_abs_diff_eq!(kl_ratio_bound(1.001).unwrap(), 4.000666416808238, epsilon = 1e-10);
    }

    #[test]
    fn ratio_bound_monotone_and_dominated() {
        let mut prev = kl_ratio_bound(0.0).unwrap();
        for i in 1..=1000 {
            let z = i as f64 * 0.1;
            let v = kl_ratio_bound(z).unwrap();
            assert!(v + 1e-12 >= prev, "not nondecreasing at z={z}");
            if z >= 1.0 {
                assert!(v <= 4.0 + 2.0 * z.ln() + 1e-10);
            }
            prev = v;
        }
    }

    #[test]
    fn sandwich_identical() {
        let p = tb(&[0.5, 0.5]);
        let rep = check_kl_hellinger_sandwich(&p, &p).unwrap();
        assert_eq!(rep.kl, 0.0);
        assert_eq!(rep.two_h_squared, 0.0);
        assert!(rep.chain_holds);
        assert!(rep.kl_ratio.is_none());
    }

    #[test]
    fn sandwich_values() {
        let rep = check_kl_hellinger_sandwich(&tb(&[0.5, 0.5]), &tb(&[0.25, 0.75])).unwrap();
        assert_abs_diff_eq!(rep.kl, 0.14384103622589042, epsilon = 1e-14);
        assert_abs_diff_eq!(rep.neg_two_log_rho, 0.06933646419507408, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.two_h_squared, 0.0681483474218636, epsilon = 1e-12);
        assert_eq!(rep.density_ratio_max, Some(2.0));
        assert_abs_diff_eq!(rep.kl_ratio.unwrap(), 4.221409371395639, epsilon = 1e-10);
        assert_abs_diff_eq!(rep.ratio_bound.unwrap(), 4.5029770649753456, epsilon = 1e-12);
        assert!(rep.chain_holds);
        assert_eq!(rep.ratio_holds, Some(true));

        let rep = check_kl_hellinger_sandwich(&tb(&[1.0, 0.0]), &tb(&[0.5, 0.5])).unwrap();
        assert_eq!(rep.density_ratio_max, Some(2.0));
        assert_abs_diff_eq!(rep.kl, 2.0f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(rep.kl_ratio.unwrap(), 2.366552504588438, epsilon = 1e-10);
        assert_eq!(rep.ratio_holds, Some(true));
    }

    #[test]
    fn sandwich_infinite_kl_reported() {
        let rep = check_kl_hellinger_sandwich(&tb(&[0.5, 0.5]), &tb(&[1.0, 0.0])).unwrap();
        assert_eq!(rep.kl, f64::INFINITY);
        assert!(rep.density_ratio_max.is_none());
        assert!(rep.chain_holds);
        assert!(rep.ratio_holds.is_none());
    }

    #[test]
    fn mixture_affinity_cases() {
        let p = tb(&[0.5, 0.5]);
        // single component equal to p, r = 0
        let rho = mixture_affinity(&p, &[(1.0, p.clone())], 0.0).unwrap();
        assert_eq!(rho, 1.0);

        // single component at distance exactly r: equality rho = 1 - r^2
        let q = tb(&[0.25, 0.75]);
        let r = hellinger_distance(&p, &q).unwrap();
        let rho = mixture_affinity(&p, &[(1.0, q.clone())], r).unwrap();
        assert_abs_diff_eq!(rho, 1.0 - r * r, epsilon = 1e-12);

        // a component farther than r is rejected
        assert!(mixture_affinity(&p, &[(1.0, q)], r / 2.0).is_err());
    }

    #[test]
    fn mixture_affinity_two_bernoulli_components() {
        // Components at Hellinger distance 0.1 from p = Be(0.5), solved by bisection.
        let p = tb(&[0.5, 0.5]);
        let solve = |target: f64, lo: f64, hi: f64| -> ProbabilityTable {
            let (mut lo, mut hi) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let cand = tb(&[mid, 1.0 - mid]);
                if hellinger_distance(&p, &cand).unwrap() < target {
                    if mid < 0.5 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                } else if mid < 0.5 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            tb(&[lo, 1.0 - lo])
        };
        let c1 = solve(0.1, 0.2, 0.5);
        let c2 = solve(0.1, 0.5, 0.8);
        let rho = mixture_affinity(&p, &[(0.5, c1), (0.5, c2)], 0.1 + 1e-9).unwrap();
        assert!(rho >= 0.99 - 1e-10);
    }
}
