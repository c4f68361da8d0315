//! Seeded Monte Carlo and exhaustive verification of each probabilistic
//! statement against its closed-form bound.
//!
//! Monte Carlo paths use at least 10^4 replications and report a 3-sigma
//! binomial slack 3 sqrt(p(1-p)/R); exact paths (full enumeration, finite
//! sums) report zero slack. Per-replication seeds come from the counter
//! generator keyed by (master seed, replication index), replications may run
//! in parallel, and reductions happen in replication order, so every report
//! is bit-reproducible from (inputs, seed) at any thread count.

use rayon::prelude::*;

use crate::bounds::{
    barron_bound, bayesconv_radius, theorem1_bound_curve, theorem2_bound_curve, toy_k, JPair,
};
use crate::error::{Error, Result};
use crate::hellinger::{
    check_kl_hellinger_sandwich, hellinger_distance, kl_divergence, mixture_affinity,
    ProbabilityTable,
};
use crate::loss::{argmin_expected_loss, bayes_point_estimate, LossSpec};
use crate::metric::Metric;
use crate::model::{sample_iid, ModelFamily, Prior};
use crate::posterior::{
    compute_posterior, log_mixture_density, posterior_ball_mass, sample_from_restricted_mixture,
    RestrictedMixture,
};
use crate::rng::{replication_seed, CounterRng};
use crate::CMP_TOL;

const MIN_REPS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Pass when empirical <= bound + slack.
    UpperTail,
    /// Pass when empirical >= bound - slack.
    LowerMass,
}

/// Outcome of one verified statement.
#[derive(Debug, Clone, serde::Serialize)]
pub struct VerificationReport {
    pub statement_id: String,
    pub detail: String,
    pub replications: u64,
    pub empirical: f64,
    pub bound: f64,
    pub mc_slack: f64,
    pub direction: Direction,
    pub passed: bool,
    pub vacuous: bool,
    pub seed: u64,
}

/// 3-sigma binomial slack for an empirical frequency.
pub fn mc_slack(p_hat: f64, reps: u64) -> f64 {
    3.0 * (p_hat * (1.0 - p_hat) / reps as f64).sqrt()
}

impl VerificationReport {
    fn upper(
        id: &str,
        detail: String,
        reps: u64,
        empirical: f64,
        bound: f64,
        slack: f64,
        seed: u64,
    ) -> Self {
        Self {
            statement_id: id.to_string(),
            detail,
            replications: reps,
            empirical,
            bound,
            mc_slack: slack,
            direction: Direction::UpperTail,
            passed: empirical <= bound + slack,
            vacuous: false,
            seed,
        }
    }

    fn lower(
        id: &str,
        detail: String,
        reps: u64,
        empirical: f64,
        bound: f64,
        slack: f64,
        seed: u64,
    ) -> Self {
        Self {
            statement_id: id.to_string(),
            detail,
            replications: reps,
            empirical,
            bound,
            mc_slack: slack,
            direction: Direction::LowerMass,
            passed: empirical >= bound - slack,
            vacuous: false,
            seed,
        }
    }
}

fn require_reps(reps: u64) -> Result<()> {
    if reps < MIN_REPS {
        return Err(Error::domain(format!(
            "Monte Carlo paths need at least {MIN_REPS} replications, got {reps}"
        )));
    }
    Ok(())
}

/// Log-likelihood-ratio tail: the frequency of
/// sum_i log(q(X_i)/p(X_i)) >= y under P^n stays below e^(-y/2) rho^n(P,Q).
pub fn verify_tail_inequality(
    p: &ProbabilityTable,
    q: &ProbabilityTable,
    n: usize,
    y_grid: &[f64],
    reps: u64,
    seed: u64,
) -> Result<Vec<VerificationReport>> {
    require_reps(reps)?;
    let rho = crate::hellinger::hellinger_affinity(p, q)?;
    let log_ratio: Vec<f64> = p
        .weights()
        .iter()
        .zip(q.weights())
        .map(|(&pi, &qi)| {
            if qi == 0.0 {
                f64::NEG_INFINITY
            } else if pi == 0.0 {
                f64::INFINITY // unreachable under P
            } else {
                (qi / pi).ln()
            }
        })
        .collect();

    let sums: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let s = sample_iid(p, n, replication_seed(seed, rep));
            s.observations
                .iter()
                .map(|&x| log_ratio[x as usize])
                .sum::<f64>()
        })
        .collect();

    Ok(y_grid
        .iter()
        .map(|&y| {
            let count = sums.iter().filter(|&&t| t >= y).count() as u64;
            let freq = count as f64 / reps as f64;
            let bound = (-y / 2.0).exp() * rho.powi(n as i32);
            VerificationReport::upper(
                "lemma1_tail",
                format!("y={y}"),
                reps,
                freq,
                bound,
                mc_slack(freq, reps),
                seed,
            )
        })
        .collect())
}

/// Shell counts N_l = #{t : l/sqrt(n) < h(s,t) <= (l+1)/sqrt(n)} measured
/// from the family.
pub fn measure_shell_counts(family: &ModelFamily, n: usize) -> Vec<u64> {
    let s = family.center_index();
    let sqrt_n = (n as f64).sqrt();
    let max_l = sqrt_n.ceil() as usize + 1;
    let mut counts = vec![0u64; max_l];
    for t in 0..family.len() {
        if t == s {
            continue;
        }
        let h = family.hellinger(s, t);
        let l = (h * sqrt_n).ceil() as usize;
        // h in (l-1, l]/sqrt(n) belongs to shell l-1... shells are indexed by
        // their inner radius: l/sqrt(n) < h <= (l+1)/sqrt(n) is shell l.
        let shell = if l == 0 { 0 } else { l - 1 };
        if shell >= 1 && shell < counts.len() {
            counts[shell] += 1;
        }
    }
    counts.remove(0);
    counts
}

pub struct ToyConcentration {
    pub report: VerificationReport,
    pub k: u32,
    pub shell_counts: Vec<u64>,
}

/// Countable-model concentration: with P = P_s, the posterior mass of
/// B(s, k/sqrt(n)) reaches 1 - delta with frequency at least 1 - epsilon.
pub fn verify_toy_concentration(
    family: &ModelFamily,
    prior: &Prior,
    n: usize,
    epsilon: f64,
    delta: f64,
    reps: u64,
    seed: u64,
) -> Result<ToyConcentration> {
    require_reps(reps)?;
    let s = family.center_index();
    let nu_s = prior.get(s);
    let shell_counts = measure_shell_counts(family, n);
    let rule = toy_k(&shell_counts, epsilon, delta, nu_s)?;
    let radius = rule.k as f64 / (n as f64).sqrt();

    let hits: Vec<bool> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let data = sample_iid(family.density(s), n, replication_seed(seed, rep));
            let post = compute_posterior(prior, family, &data)
                .expect("posterior under P_s is never degenerate");
            posterior_ball_mass(&post, family, s, radius) >= 1.0 - delta
        })
        .collect();
    let freq = hits.iter().filter(|&&b| b).count() as f64 / reps as f64;
    let report = VerificationReport::lower(
        "prop1_toy",
        format!("k={}, radius={radius}", rule.k),
        reps,
        freq,
        1.0 - epsilon,
        mc_slack(freq, reps),
        seed,
    );
    Ok(ToyConcentration {
        report,
        k: rule.k,
        shell_counts,
    })
}

/// Ball-restricted concentration: under X ~ P_{B(J1)}, the probability that
/// some level j <= J misses its posterior-mass threshold stays below
/// 1.05 exp(-4^-(J+3) n).
pub fn verify_theorem1(
    family: &ModelFamily,
    prior: &Prior,
    n: usize,
    plan: &JPair,
    reps: u64,
    seed: u64,
) -> Result<VerificationReport> {
    require_reps(reps)?;
    let s = family.center_index();
    let mix = RestrictedMixture::ball(prior, family, s, 0.5f64.powi(plan.j1 as i32))?;
    let curve = theorem1_bound_curve(n as u64, plan.j);
    let radii: Vec<f64> = (0..=plan.j).map(|j| 0.5f64.powi(j as i32)).collect();

    let bad: Vec<bool> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let data =
                sample_from_restricted_mixture(&mix, family, n, replication_seed(seed, rep));
            let post = compute_posterior(prior, family, &data)
                .expect("posterior under a family member is never degenerate");
            curve
                .thresholds
                .iter()
                .any(|&(j, thr)| posterior_ball_mass(&post, family, s, radii[j as usize]) < thr)
        })
        .collect();
    let freq = bad.iter().filter(|&&b| b).count() as f64 / reps as f64;
    Ok(VerificationReport::upper(
        "thm1_concentration",
        format!("J1={}, J={}", plan.j1, plan.j),
        reps,
        freq,
        curve.outer_bound,
        mc_slack(freq, reps),
        seed,
    ))
}

/// True-model concentration: under X ~ P^n the full bound curve at levels
/// k >= J2(c) holds with probability at least 1 - (kappa + c).
pub fn verify_theorem2(
    family: &ModelFamily,
    prior: &Prior,
    p_true: &ProbabilityTable,
    n: usize,
    c: f64,
    kappa: f64,
    j2_of_c: u32,
    reps: u64,
    seed: u64,
) -> Result<VerificationReport> {
    require_reps(reps)?;
    let s = family.center_index();
    let curve = theorem2_bound_curve(n as u64, c, kappa, j2_of_c)?;

    let hits: Vec<bool> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let data = sample_iid(p_true, n, replication_seed(seed, rep));
            match compute_posterior(prior, family, &data) {
                Ok(post) => curve
                    .levels
                    .iter()
                    .all(|&(_, radius, thr)| posterior_ball_mass(&post, family, s, radius) >= thr),
                Err(_) => false,
            }
        })
        .collect();
    let freq = hits.iter().filter(|&&b| b).count() as f64 / reps as f64;
    let mut report = VerificationReport::lower(
        "thm2_truemodel",
        format!("c={c}, kappa={kappa}, J2={j2_of_c}, levels={}", curve.levels.len()),
        reps,
        freq,
        1.0 - curve.failure_budget,
        mc_slack(freq, reps),
        seed,
    );
    if curve.vacuous {
        report.vacuous = true;
        report.passed = true;
    }
    Ok(report)
}

pub struct RiskOutcome {
    pub report: VerificationReport,
    pub mean_h2: f64,
    pub bracket: f64,
    /// Empirical ratio mean h^2 / bracket; the universal constant is
    /// reported, never certified.
    pub c_hat: f64,
}

/// Risk of the Bayes point estimate: reports the empirical ratio between
/// mean h^2(u~, s) under P^n and the bracket Delta^2 (4^-J1 + K_n).
#[allow(clippy::too_many_arguments)]
pub fn verify_theorem3(
    family: &ModelFamily,
    prior: &Prior,
    p_true: &ProbabilityTable,
    n: usize,
    loss: &LossSpec,
    j1: u32,
    kn_value: f64,
    kappa_gate: f64,
    reps: u64,
    seed: u64,
) -> Result<RiskOutcome> {
    require_reps(reps)?;
    if !kn_value.is_finite() {
        return Err(Error::domain(format!("risk bracket needs finite K_n, got {kn_value}")));
    }
    if loss.b_prime > (kappa_gate - 1.0) / 4.0 {
        return Err(Error::hypothesis(format!(
            "B' = {} exceeds (kappa-1)/4 = {}",
            loss.b_prime,
            (kappa_gate - 1.0) / 4.0
        )));
    }
    let s = family.center_index();
    let candidates: Vec<usize> = (0..family.len()).collect();
    let delta = crate::bounds::delta_constant(loss);
    let bracket = delta * delta * (4.0f64.powi(-(j1 as i32)) + kn_value);

    let losses: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let data = sample_iid(p_true, n, replication_seed(seed, rep));
            let post = compute_posterior(prior, family, &data)
                .expect("posterior with positive prior mass and finite data");
            let u = bayes_point_estimate(&post, family, loss, &candidates)
                .expect("candidate set is nonempty");
            let h = family.hellinger(u, s);
            h * h
        })
        .collect();
    let mean_h2 = losses.iter().sum::<f64>() / reps as f64;
    let c_hat = mean_h2 / bracket;

    let report = VerificationReport {
        statement_id: "thm3_risk".to_string(),
        detail: format!("J1={j1}, Kn={kn_value}, Delta={delta}"),
        replications: reps,
        empirical: c_hat,
        bound: f64::INFINITY, // no certified universal constant exists
        mc_slack: 0.0,
        direction: Direction::UpperTail,
        passed: c_hat.is_finite(),
        vacuous: false,
        seed,
    };
    Ok(RiskOutcome {
        report,
        mean_h2,
        bracket,
        c_hat,
    })
}

/// Exhaustive minimizer check on a finite metric space: under the
/// concentration hypothesis, any expected-loss minimizer stays within the
/// certified radius of the center, and the innermost ball carries mass 4/5.
pub fn verify_bayesconv(
    metric: &impl Metric,
    center: usize,
    q_weights: &[f64],
    loss: &LossSpec,
    j: u32,
    a: f64,
    big_b: f64,
) -> Result<VerificationReport> {
    if q_weights.len() != metric.len() {
        return Err(Error::Dimension {
            left: q_weights.len(),
            right: metric.len(),
        });
    }
    let radius = bayesconv_radius(a, big_b, loss, j)?;
    // concentration hypothesis at every level j' < j
    for lvl in 0..j {
        let r = 2.0f64.powi(lvl as i32 - j as i32);
        let mass: f64 = (0..metric.len())
            .filter(|&t| metric.dist(center, t) <= r)
            .map(|t| q_weights[t])
            .sum();
        let need = 1.0 - a * (-big_b * 4.0f64.powi(lvl as i32)).exp();
        if mass < need - CMP_TOL {
            return Err(Error::hypothesis(format!(
                "concentration fails at level {lvl}: mass {mass} < {need}"
            )));
        }
    }
    let inner_mass: f64 = (0..metric.len())
        .filter(|&t| metric.dist(center, t) <= 0.5f64.powi(j as i32))
        .map(|t| q_weights[t])
        .sum();
    if inner_mass < 0.8 - CMP_TOL {
        return Err(Error::hypothesis(format!(
            "innermost ball mass {inner_mass} below 4/5"
        )));
    }
    let candidates: Vec<usize> = (0..metric.len()).collect();
    let u = argmin_expected_loss(metric, q_weights, loss, &candidates)?;
    let d = metric.dist(u, center);
    Ok(VerificationReport::upper(
        "prop3_minimizer",
        format!("J={j}, a={a}, B={big_b}, minimizer={u}"),
        0,
        d,
        radius,
        0.0,
        0,
    ))
}

/// Exponential-tail mean bound: T has a certified tail under Q; the exact
/// mean of T under R stays below the closed-form bound.
pub fn verify_barron(
    t_values: &[f64],
    r: &ProbabilityTable,
    q: &ProbabilityTable,
    z0: f64,
    a: f64,
    b: f64,
) -> Result<VerificationReport> {
    if t_values.len() != r.support_size() || t_values.len() != q.support_size() {
        return Err(Error::Dimension {
            left: t_values.len(),
            right: r.support_size(),
        });
    }
    let k = kl_divergence(r, q)?;
    if !k.is_finite() {
        return Err(Error::domain("mean bound needs K(R,Q) < inf".to_string()));
    }
    // Certify P_Q[T >= z] <= a e^(-bz) for z >= z0 at the binding points,
    // the distinct values of T at or above z0.
    let mut values: Vec<f64> = t_values.to_vec();
    values.sort_by(|x, y| x.partial_cmp(y).unwrap());
    values.dedup();
    for &v in values.iter().filter(|&&v| v >= z0) {
        let tail: f64 = t_values
            .iter()
            .zip(q.weights())
            .filter(|(&t, _)| t >= v)
            .map(|(_, &w)| w)
            .sum();
        if tail > a * (-b * v).exp() + CMP_TOL {
            return Err(Error::hypothesis(format!(
                "tail certificate fails at z={v}: {tail} > a e^-bz"
            )));
        }
    }
    let mean: f64 = t_values.iter().zip(r.weights()).map(|(&t, &w)| t * w).sum();
    let bound = barron_bound(z0, a, b, k)?;
    Ok(VerificationReport::upper(
        "prop4_barron",
        format!("z0={z0}, a={a}, b={b}, K={k}"),
        0,
        mean,
        bound,
        0.0,
        0,
    ))
}

/// Enclosing Hellinger ball for a restricted prior support.
#[derive(Debug, Clone, Copy)]
pub struct BallSpec {
    pub center: usize,
    pub radius: f64,
}

fn check_enclosed(
    family: &ModelFamily,
    mix: &RestrictedMixture,
    ball: &BallSpec,
) -> Result<()> {
    for &t in mix.indices() {
        let d = family.hellinger(ball.center, t);
        if d > ball.radius + CMP_TOL {
            return Err(Error::domain(format!(
                "index {t} at distance {d} escapes its ball of radius {}",
                ball.radius
            )));
        }
    }
    Ok(())
}

/// Effective separation h(c1, c2) - r1 - r2 between the enclosing balls; the
/// continuum ball distance certified by the triangle inequality.
fn ball_gap(family: &ModelFamily, b1: &BallSpec, b2: &BallSpec) -> Result<f64> {
    let h = family.hellinger(b1.center, b2.center);
    let gap = h - b1.radius - b2.radius;
    if !(gap > 0.0) {
        return Err(Error::hypothesis(format!(
            "enclosing balls overlap: h = {h} <= r1 + r2 = {}",
            b1.radius + b2.radius
        )));
    }
    Ok(gap)
}

/// Exact mixture-affinity bound on a tiny space: rho(R1, R2) computed by
/// full enumeration stays below [1 - gap^2]^n.
pub fn verify_prop5_affinity(
    family: &ModelFamily,
    prior: &Prior,
    b1: &[usize],
    ball1: BallSpec,
    b2: &[usize],
    ball2: BallSpec,
    n: usize,
) -> Result<VerificationReport> {
    let mix1 = RestrictedMixture::new(prior, b1)?;
    let mix2 = RestrictedMixture::new(prior, b2)?;
    check_enclosed(family, &mix1, &ball1)?;
    check_enclosed(family, &mix2, &ball2)?;
    let gap = ball_gap(family, &ball1, &ball2)?;
    let bound = crate::bounds::lecam_affinity_bound(
        family.hellinger(ball1.center, ball2.center),
        ball1.radius,
        ball2.radius,
        n as u32,
    )?;

    let m = family.sample_space_size();
    let total = (m as u64).checked_pow(n as u32).filter(|&t| t <= 1_000_000);
    let Some(total) = total else {
        return Err(Error::domain(format!(
            "exact affinity enumeration limited to 10^6 tuples, got {m}^{n}"
        )));
    };
    let mut rho = 0.0;
    let mut tuple = vec![0u32; n];
    for code in 0..total {
        decode_tuple(code, m as u64, &mut tuple);
        let g1 = mixture_product_density(family, &mix1, &tuple);
        let g2 = mixture_product_density(family, &mix2, &tuple);
        rho += (g1 * g2).sqrt();
    }
    let _ = gap;
    Ok(VerificationReport::upper(
        "prop5_lecam",
        format!("n={n}, gap={gap}"),
        0,
        rho,
        bound,
        0.0,
        0,
    ))
}

fn decode_tuple(mut code: u64, base: u64, out: &mut [u32]) {
    for slot in out.iter_mut() {
        *slot = (code % base) as u32;
        code /= base;
    }
}

fn mixture_product_density(family: &ModelFamily, mix: &RestrictedMixture, x: &[u32]) -> f64 {
    let mut g = 0.0;
    for (&t, &w) in mix.indices().iter().zip(mix.cond_weights()) {
        let mut prod = w;
        for &xi in x {
            prod *= family.density(t).get(xi as usize);
        }
        g += prod;
    }
    g
}

/// Tail of the log mixture-density ratio between separated prior balls:
/// P_{B1}[log(g_{B2}/g_{B1}) >= y] <= exp(-y/2 - n gap^2).
///
/// On tiny spaces (at most 10^6 tuples) the tail is computed exactly by
/// full enumeration with zero slack; otherwise by seeded Monte Carlo.
#[allow(clippy::too_many_arguments)]
pub fn verify_lecam(
    family: &ModelFamily,
    prior: &Prior,
    b1: &[usize],
    ball1: BallSpec,
    b2: &[usize],
    ball2: BallSpec,
    n: usize,
    y_grid: &[f64],
    reps: u64,
    seed: u64,
) -> Result<Vec<VerificationReport>> {
    let mix1 = RestrictedMixture::new(prior, b1)?;
    let mix2 = RestrictedMixture::new(prior, b2)?;
    check_enclosed(family, &mix1, &ball1)?;
    check_enclosed(family, &mix2, &ball2)?;
    let gap = ball_gap(family, &ball1, &ball2)?;

    let m = family.sample_space_size() as u64;
    let exact_total = m.checked_pow(n as u32).filter(|&t| t <= 1_000_000);

    if let Some(total) = exact_total {
        // exact path: P_{B1}[log ratio >= y] as a finite sum
        let mut stats: Vec<(f64, f64)> = Vec::with_capacity(total as usize); // (g1, log ratio)
        let mut tuple = vec![0u32; n];
        for code in 0..total {
            decode_tuple(code, m, &mut tuple);
            let g1 = mixture_product_density(family, &mix1, &tuple);
            let g2 = mixture_product_density(family, &mix2, &tuple);
            let lr = if g1 > 0.0 {
                (g2 / g1).ln()
            } else {
                f64::NEG_INFINITY // zero P_{B1}-mass tuple; never contributes
            };
            stats.push((g1, lr));
        }
        return Ok(y_grid
            .iter()
            .map(|&y| {
                let prob: f64 = stats
                    .iter()
                    .filter(|&&(_, lr)| lr >= y)
                    .map(|&(g1, _)| g1)
                    .sum();
                let bound = (-y / 2.0 - n as f64 * gap * gap).exp();
                VerificationReport::upper(
                    "eq18_corollary",
                    format!("y={y}, exact, gap={gap}"),
                    0,
                    prob,
                    bound,
                    0.0,
                    seed,
                )
            })
            .collect());
    }

    require_reps(reps)?;
    let ratios: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let data =
                sample_from_restricted_mixture(&mix1, family, n, replication_seed(seed, rep));
            log_mixture_density(&mix2, family, &data) - log_mixture_density(&mix1, family, &data)
        })
        .collect();
    Ok(y_grid
        .iter()
        .map(|&y| {
            let freq = ratios.iter().filter(|&&t| t >= y).count() as f64 / reps as f64;
            let bound = (-y / 2.0 - n as f64 * gap * gap).exp();
            VerificationReport::upper(
                "eq18_corollary",
                format!("y={y}, mc, gap={gap}"),
                reps,
                freq,
                bound,
                mc_slack(freq, reps),
                seed,
            )
        })
        .collect())
}

/// Random-pair scan of the divergence sandwich
/// K >= -2 log rho >= 2 h^2 and 2 <= K/h^2 <= K(M): reports the worst
/// signed violation across `pairs` seeded random table pairs.
pub fn scan_kl_sandwich(pairs: u64, support: usize, seed: u64) -> Result<VerificationReport> {
    let rng = CounterRng::new(seed, 7);
    let mut worst: f64 = f64::NEG_INFINITY;
    for i in 0..pairs {
        let p = random_table(&rng, 2 * i, support, false);
        let q = random_table(&rng, 2 * i + 1, support, true);
        let rep = check_kl_hellinger_sandwich(&p, &q)?;
        let viol_chain = (rep.neg_two_log_rho - rep.kl).max(rep.two_h_squared - rep.neg_two_log_rho);
        worst = worst.max(viol_chain);
        if let (Some(ratio), Some(bound)) = (rep.kl_ratio, rep.ratio_bound) {
            worst = worst.max(2.0 - ratio).max(ratio - bound);
        }
        if let Some(m) = rep.density_ratio_max {
            if m >= 1.0 {
                worst = worst.max(rep.ratio_bound.unwrap() - (4.0 + 2.0 * m.ln()));
            }
        }
    }
    Ok(VerificationReport::upper(
        "lemma4_kl_sandwich",
        format!("pairs={pairs}, support={support}"),
        pairs,
        worst,
        0.0,
        CMP_TOL,
        seed,
    ))
}

/// Random scan of the mixture-affinity bound rho(p, mixture) >= 1 - r^2 for
/// mixtures of densities within Hellinger radius r of p.
pub fn scan_mixture_affinity(trials: u64, support: usize, seed: u64) -> Result<VerificationReport> {
    let rng = CounterRng::new(seed, 8);
    let wrng = CounterRng::new(seed, 9);
    let mut worst: f64 = f64::NEG_INFINITY;
    for i in 0..trials {
        let p = random_table(&rng, 3 * i, support, true);
        let c1 = random_table(&rng, 3 * i + 1, support, true);
        let c2 = random_table(&rng, 3 * i + 2, support, true);
        let r = hellinger_distance(&p, &c1)?
            .max(hellinger_distance(&p, &c2)?);
        let w = 0.25 + 0.5 * wrng.f64_at(i);
        let rho = mixture_affinity(&p, &[(w, c1), (1.0 - w, c2)], r + 1e-12)?;
        worst = worst.max(1.0 - r * r - rho);
    }
    Ok(VerificationReport::upper(
        "lemma3_mixture",
        format!("trials={trials}, support={support}"),
        trials,
        worst,
        0.0,
        CMP_TOL,
        seed,
    ))
}

/// Seeded random probability table on up to 64 outcomes; `positive` adds a
/// floor so every outcome keeps strictly positive mass.
pub fn random_table(rng: &CounterRng, block: u64, support: usize, positive: bool) -> ProbabilityTable {
    assert!(support <= 64, "random tables draw from 64-counter blocks");
    let floor = if positive { 1e-3 } else { 0.0 };
    let raw: Vec<f64> = (0..support)
        .map(|j| floor + rng.f64_at(block * 64 + j as u64))
        .collect();
    ProbabilityTable::normalized(raw).expect("positive raw weights always normalize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::make_power_loss;
    use crate::metric::DistanceMatrix;
    use crate::model::{build_grid_family, FamilySpec};
    use approx::assert_abs_diff_eq;

    fn bernoulli(params: &[f64], center: usize) -> ModelFamily {
        build_grid_family(&FamilySpec::BernoulliGrid {
            params: params.to_vec(),
            center,
        })
        .unwrap()
    }

    #[test]
    fn slack_halves_when_reps_quadruple() {
        let s1 = mc_slack(0.3, 10_000);
        let s2 = mc_slack(0.3, 40_000);
        assert_abs_diff_eq!(s2, s1 / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn tail_inequality_identical_distributions() {
        let p = ProbabilityTable::new(vec![0.5, 0.5]).unwrap();
        let reports = verify_tail_inequality(&p, &p, 10, &[0.0], 10_000, 1).unwrap();
        // log ratio identically zero: frequency 1, bound 1, equality pass
        assert_eq!(reports[0].empirical, 1.0);
        assert_eq!(reports[0].bound, 1.0);
        assert!(reports[0].passed);
    }

    #[test]
    fn tail_inequality_reports_reproducible() {
        let p = ProbabilityTable::new(vec![0.6, 0.4]).unwrap();
        let q = ProbabilityTable::new(vec![0.4, 0.6]).unwrap();
        let a = verify_tail_inequality(&p, &q, 20, &[-1.0, 0.0, 1.0], 10_000, 5).unwrap();
        let b = verify_tail_inequality(&p, &q, 20, &[-1.0, 0.0, 1.0], 10_000, 5).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.empirical.to_bits(), y.empirical.to_bits());
            assert!(x.passed);
        }
        assert!(verify_tail_inequality(&p, &q, 20, &[0.0], 100, 5).is_err());
    }

    #[test]
    fn tail_inequality_large_y_vanishes() {
        let p = ProbabilityTable::new(vec![0.6, 0.4]).unwrap();
        let q = ProbabilityTable::new(vec![0.4, 0.6]).unwrap();
        let reports = verify_tail_inequality(&p, &q, 20, &[50.0], 10_000, 5).unwrap();
        assert_eq!(reports[0].empirical, 0.0);
        assert!(reports[0].bound < 1e-8);
        assert!(reports[0].passed);
    }

    #[test]
    fn shell_counts_measured() {
        let radii: Vec<f64> = (1..=6).map(|l| (l as f64 + 0.5) / 10.0).collect();
        let fam = build_grid_family(&FamilySpec::HellingerShells {
            sample_space_size: 4,
            radii,
            per_shell: 2,
        })
        .unwrap();
        let counts = measure_shell_counts(&fam, 100);
        assert_eq!(&counts[0..6], &[2, 2, 2, 2, 2, 2]);
        assert!(counts[6..].iter().all(|&c| c == 0));
    }

    #[test]
    fn toy_concentration_singleton_family() {
        let fam = bernoulli(&[0.5], 0);
        let prior = Prior::uniform(1);
        let out = verify_toy_concentration(&fam, &prior, 50, 0.1, 0.1, 10_000, 3).unwrap();
        assert_eq!(out.report.empirical, 1.0);
        assert!(out.report.passed);
    }

    #[test]
    fn theorem1_degenerate_family_never_bad() {
        let fam = bernoulli(&[0.5], 0);
        let prior = Prior::uniform(1);
        let plan = JPair {
            j1: 3,
            j: 1,
            closure_ok: true,
        };
        let rep = verify_theorem1(&fam, &prior, 256, &plan, 10_000, 9).unwrap();
        assert_eq!(rep.empirical, 0.0);
        assert!(rep.passed);
    }

    #[test]
    fn theorem2_vacuous_budget_flagged() {
        let fam = bernoulli(&[0.4, 0.5, 0.6], 1);
        let prior = Prior::uniform(3);
        let rep = verify_theorem2(
            &fam,
            &prior,
            fam.density(1),
            64,
            0.5,
            0.499,
            20, // all radii exceed 1: trivially true events
            10_000,
            4,
        )
        .unwrap();
        assert!(rep.passed);
    }

    #[test]
    fn bayesconv_point_mass_at_center() {
        let m = DistanceMatrix::from_points_1d(&[0.0, 0.25, 0.5, 1.0]);
        let mut q = vec![0.0; 4];
        q[0] = 1.0;
        let loss = make_power_loss(1.0, 0.25).unwrap();
        let rep = verify_bayesconv(&m, 0, &q, &loss, 2, 1.0, 5.0).unwrap();
        assert_eq!(rep.empirical, 0.0);
        assert!(rep.passed);
    }

    #[test]
    fn bayesconv_rejects_bad_hypotheses() {
        let m = DistanceMatrix::from_points_1d(&[0.0, 0.5]);
        let q = vec![0.5, 0.5]; // concentration fails for the tight levels
        let loss = make_power_loss(1.0, 0.25).unwrap();
        assert!(verify_bayesconv(&m, 0, &q, &loss, 3, 0.5, 5.0).is_err());
    }

    #[test]
    fn barron_exact_cases() {
        // T = 0 under R = Q
        let q = ProbabilityTable::new(vec![0.5, 0.5]).unwrap();
        let rep = verify_barron(&[0.0, 0.0], &q, &q, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(rep.empirical, 0.0);
        assert!(rep.passed);

        // geometric-type tail with a = b = 1, z0 = 0: E[T] = sum e^-k
        let levels = 12usize;
        let mut qw: Vec<f64> = (0..levels)
            .map(|k| (-(k as f64)).exp() - (-(k as f64 + 1.0)).exp())
            .collect();
        let taken: f64 = qw.iter().sum();
        qw.push(1.0 - taken); // residual mass at the top value
        let t: Vec<f64> = (0..=levels).map(|k| k as f64).collect();
        let qt = ProbabilityTable::new(qw).unwrap();
        let rep = verify_barron(&t, &qt, &qt, 0.0, 1.0, 1.0).unwrap();
        assert!(rep.passed);
        assert!(rep.empirical <= 2.87055720307542 + 1e-12);

        // R != Q with finite K: mean shifts but stays below the larger bound
        let rw = {
            let mut w = vec![0.0; levels + 1];
            w[0] = 0.6;
            w[1] = 0.4;
            ProbabilityTable::new(w).unwrap()
        };
        let rep2 = verify_barron(&t, &rw, &qt, 0.0, 1.0, 1.0).unwrap();
        assert!(rep2.passed);

        // infinite K rejected
        let bad_r = ProbabilityTable::new(vec![1.0, 0.0]).unwrap();
        let bad_q = ProbabilityTable::new(vec![0.0, 1.0]).unwrap();
        assert!(verify_barron(&[0.0, 1.0], &bad_r, &bad_q, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn lecam_exact_two_outcomes() {
        let fam = bernoulli(&[0.1, 0.2, 0.8, 0.9], 0);
        let prior = Prior::uniform(4);
        let r1 = fam.hellinger(0, 1);
        let r2 = fam.hellinger(3, 2);
        let y: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.5).collect();
        let reports = verify_lecam(
            &fam,
            &prior,
            &[0, 1],
            BallSpec { center: 0, radius: r1 },
            &[2, 3],
            BallSpec { center: 3, radius: r2 },
            4,
            &y,
            10_000,
            2,
        )
        .unwrap();
        assert_eq!(reports.len(), 21);
        for r in &reports {
            assert_eq!(r.replications, 0, "exact path expected");
            assert_eq!(r.mc_slack, 0.0);
            assert!(r.passed, "failed at {}", r.detail);
        }
    }

    #[test]
    fn lecam_rejects_overlapping_balls() {
        let fam = bernoulli(&[0.3, 0.4, 0.6], 0);
        let prior = Prior::uniform(3);
        let e = verify_lecam(
            &fam,
            &prior,
            &[0],
            BallSpec { center: 0, radius: 0.0 },
            &[0],
            BallSpec { center: 0, radius: 0.0 },
            2,
            &[0.0],
            10_000,
            2,
        );
        assert!(e.is_err());
    }

    #[test]
    fn lecam_singletons_reduce_to_product_bound() {
        let fam = bernoulli(&[0.2, 0.8], 0);
        let prior = Prior::uniform(2);
        let h = fam.hellinger(0, 1);
        let reports = verify_lecam(
            &fam,
            &prior,
            &[0],
            BallSpec { center: 0, radius: 0.0 },
            &[1],
            BallSpec { center: 1, radius: 0.0 },
            3,
            &[0.0, 1.0],
            10_000,
            2,
        )
        .unwrap();
        for (i, &y) in [0.0, 1.0].iter().enumerate() {
            let expect = (-y / 2.0 - 3.0 * h * h).exp();
            assert_abs_diff_eq!(reports[i].bound, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn prop5_exact_affinity_bound() {
        let fam = bernoulli(&[0.1, 0.2, 0.8, 0.9], 0);
        let prior = Prior::uniform(4);
        let r1 = fam.hellinger(0, 1);
        let r2 = fam.hellinger(3, 2);
        let rep = verify_prop5_affinity(
            &fam,
            &prior,
            &[0, 1],
            BallSpec { center: 0, radius: r1 },
            &[2, 3],
            BallSpec { center: 3, radius: r2 },
            4,
        )
        .unwrap();
        assert!(rep.passed, "rho {} vs bound {}", rep.empirical, rep.bound);
    }

    #[test]
    fn sandwich_and_mixture_scans_pass() {
        let rep = scan_kl_sandwich(500, 5, 11).unwrap();
        assert!(rep.passed, "worst violation {}", rep.empirical);
        let rep = scan_mixture_affinity(300, 4, 12).unwrap();
        assert!(rep.passed, "worst violation {}", rep.empirical);
    }
}
