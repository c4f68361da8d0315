//! Explicit constants and thresholds instantiated from fitted diagnostics.
//!
//! Every gate inequality is evaluated with exact comparisons on computed
//! doubles; boundary equality counts as satisfied. The universal risk
//! constant of the risk theorem is never produced here: consumers divide
//! empirical risk by the computed bracket and report the ratio.

use crate::error::{Error, Result};
use crate::geometry::{ball_mass, DimensionTable, PriorMassProfile};
use crate::hellinger::kl_divergence;
use crate::loss::LossSpec;
use crate::model::{ModelFamily, Prior};
use crate::posterior::RestrictedMixture;

/// Instantiated plan for one scenario: the integers and constants that
/// parameterize the concentration statements. Fields are populated as the
/// scenario's statements require them; when (J1, J) is populated it
/// satisfies 1 <= J <= J1 - 2.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct ConcentrationPlan {
    pub n: u64,
    pub j1: Option<u32>,
    pub j: Option<u32>,
    pub j2_of_c: Option<u32>,
    pub kappa: f64,
    pub c: Option<f64>,
    pub delta_constant: Option<f64>,
    pub kn: Option<f64>,
    pub toy_k: Option<u32>,
    /// Per-level posterior-mass thresholds (j, 1 - 1.05 exp(-4^-(j+3) n)).
    pub bound_curve: Vec<(u32, f64)>,
    /// Outer failure-probability bound 1.05 exp(-4^-(J+3) n).
    pub outer_bound: Option<f64>,
}

/// Tail rule of the countable toy model: the smallest j >= 1 whose tail
/// sum_{l >= j} N_l e^{-l^2} drops to epsilon sqrt(delta nu_s).
#[derive(Debug, Clone)]
pub struct ToyK {
    pub k: u32,
    pub threshold: f64,
    /// tail_sums[i] = sum_{l >= i+1} N_l e^{-l^2}.
    pub tail_sums: Vec<f64>,
}

/// `shell_counts[i]` is N_{i+1}, the number of family points in shell l=i+1.
///
/// Terms are summed back to front (smallest first). Empty shells contribute
/// zero without ending the series; the sum truncates once e^(-l^2) alone
/// pushes every further term below 1e-300 regardless of its count. A table
/// that ends while its terms are still growing above that floor cannot be
/// certified convergent and is rejected.
pub fn toy_k(shell_counts: &[u64], epsilon: f64, delta: f64, nu_s: f64) -> Result<ToyK> {
    if !(epsilon > 0.0 && epsilon < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!(
            "toy rule needs epsilon, delta in (0,1), got ({epsilon}, {delta})"
        )));
    }
    if !(nu_s > 0.0) {
        return Err(Error::domain(format!("toy rule needs nu(s) > 0, got {nu_s}")));
    }
    const FLOOR: f64 = 1e-300;
    // e^(-l^2) * N underflows FLOOR for every u64 count once l >= 29.
    const TRUNCATE_AT: usize = 29;
    let mut terms: Vec<f64> = Vec::with_capacity(shell_counts.len());
    for (i, &count) in shell_counts.iter().enumerate() {
        let l = (i + 1) as f64;
        if i + 1 >= TRUNCATE_AT {
            break;
        }
        terms.push(count as f64 * (-l * l).exp());
    }
    if terms.len() == shell_counts.len() && terms.len() >= 2 {
        let last = terms[terms.len() - 1];
        let prev = terms[terms.len() - 2];
        if last >= prev && last >= FLOOR {
            return Err(Error::Divergent(format!(
                "shell terms still nondecreasing at the end of the table (t_{} = {last})",
                terms.len()
            )));
        }
    }
    let mut tail_sums = vec![0.0; terms.len() + 1];
    for i in (0..terms.len()).rev() {
        tail_sums[i] = tail_sums[i + 1] + terms[i];
    }
    tail_sums.pop();
    let threshold = epsilon * (delta * nu_s).sqrt();
    let mut k = tail_sums.len() as u32 + 1;
    for (i, &t) in tail_sums.iter().enumerate() {
        if t <= threshold {
            k = (i + 1) as u32;
            break;
        }
    }
    Ok(ToyK {
        k,
        threshold,
        tail_sums,
    })
}

/// Base feasibility gate: n >= 4^4 (gamma^3 beta(3)/3 v D(1/4)).
pub fn base_feasibility(
    n: u64,
    dims: &DimensionTable,
    profile: &PriorMassProfile,
) -> Result<()> {
    let gamma = profile.gamma;
    let need = (gamma.powi(3) * profile.beta(3)? / 3.0).max(dims.eval(0.25)?);
    let required = 256.0 * need;
    if (n as f64) < required {
        return Err(Error::Infeasible {
            gate: "sample-size feasibility",
            detail: format!("n = {n} < required {required}"),
        });
    }
    Ok(())
}

/// The admissible pair (J1, J) maximizing J, then minimizing J1, under
/// 1 <= J <= J1 - 2 and 4^-(J+3) n >= (gamma^(J1-J+1) beta(J1)/3) v D(2^-(J+1)).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct JPair {
    pub j1: u32,
    pub j: u32,
    /// Downward closure re-checked for all 1 <= J' <= J.
    pub closure_ok: bool,
}

pub fn find_j_pair(
    n: u64,
    dims: &DimensionTable,
    profile: &PriorMassProfile,
) -> Result<JPair> {
    base_feasibility(n, dims, profile)?;
    let gamma = profile.gamma;
    let j_upper = ((n as f64).ln() / 4.0f64.ln()).floor() as u32;
    for j in (1..=j_upper.max(1)).rev() {
        let lhs = 4.0f64.powi(-(j as i32 + 3)) * n as f64;
        let d_term = match dims.eval(0.5f64.powi(j as i32 + 1)) {
            Ok(d) => d,
            Err(_) => continue,
        };
        for j1 in (j + 2)..=profile.j_max() {
            let rhs = (gamma.powi((j1 - j + 1) as i32) * profile.beta(j1)? / 3.0).max(d_term);
            if lhs >= rhs {
                let closure_ok = downward_closure(n, dims, profile, j1, j)?;
                return Ok(JPair { j1, j, closure_ok });
            }
        }
    }
    Err(Error::Infeasible {
        gate: "plan admissibility",
        detail: format!("no pair (J1, J) admissible at n = {n} within the profile depth"),
    })
}

fn downward_closure(
    n: u64,
    dims: &DimensionTable,
    profile: &PriorMassProfile,
    j1: u32,
    j: u32,
) -> Result<bool> {
    for jp in 1..=j {
        let lhs = 4.0f64.powi(-(jp as i32 + 3)) * n as f64;
        let rhs = (profile.gamma.powi((j1 - jp + 1) as i32) * profile.beta(j1)? / 3.0)
            .max(dims.eval(0.5f64.powi(jp as i32 + 1))?);
        if lhs < rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Smallest positive integer j with
/// 4^(j-4) x^2 >= (gamma^(j+2) beta_bar / 3) v d_bar v log(8/x).
///
/// Requires gamma < 4, which makes the left side eventually dominate.
pub fn j2(x: f64, gamma: f64, beta_bar: f64, d_bar: f64) -> Result<u32> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("radius factor x = {x} must be > 0")));
    }
    if !(gamma < 4.0) {
        return Err(Error::hypothesis(format!("gamma = {gamma} must be < 4")));
    }
    let log_term = (8.0 / x).ln();
    for j in 1..=1000u32 {
        let lhs = 4.0f64.powi(j as i32 - 4) * x * x;
        let rhs = (gamma.powi(j as i32 + 2) * beta_bar / 3.0)
            .max(d_bar)
            .max(log_term);
        if lhs >= rhs {
            return Ok(j);
        }
    }
    Err(Error::domain("no feasible level below 1000".to_string()))
}

/// Self-referential gate of the true-model theorem, evaluated as written:
/// n >= 4^4 ([ (16 c^-2 n)^(log gamma / log 4) beta_bar / 3 ] v d_bar v log(8/c)).
pub fn truemodel_n_gate(n: u64, c: f64, gamma: f64, beta_bar: f64, d_bar: f64) -> Result<bool> {
    if !(c > 0.0 && c <= 0.5) {
        return Err(Error::domain(format!("c = {c} outside (0, 1/2]")));
    }
    if !(gamma < 4.0) {
        return Err(Error::hypothesis(format!("gamma = {gamma} must be < 4")));
    }
    let exponent = gamma.ln() / 4.0f64.ln();
    let growth = (16.0 * n as f64 / (c * c)).powf(exponent);
    let need = (growth * beta_bar / 3.0).max(d_bar).max((8.0 / c).ln());
    Ok(n as f64 >= 256.0 * need)
}

/// Delta = 4 ([ (5/4)(1 + a'/2) ]^(1/delta) + 1); always > 4.
pub fn delta_constant(loss: &LossSpec) -> f64 {
    4.0 * ((1.25 * (1.0 + loss.a_prime / 2.0)).powf(1.0 / loss.delta) + 1.0)
}

/// Conditional-prior-averaged divergence K_n over the ball B(s, 2^-J1);
/// +inf as soon as a positively weighted term is infinite.
pub fn kn(
    prior: &Prior,
    family: &ModelFamily,
    p_true: &crate::hellinger::ProbabilityTable,
    center: usize,
    j1: u32,
) -> Result<f64> {
    let radius = 0.5f64.powi(j1 as i32);
    if ball_mass(prior, family, center, radius) <= 0.0 {
        return Err(Error::EmptyBall);
    }
    let mix = RestrictedMixture::ball(prior, family, center, radius)?;
    let mut acc = 0.0;
    for (&t, &w) in mix.indices().iter().zip(mix.cond_weights()) {
        if w == 0.0 {
            continue;
        }
        let k = kl_divergence(p_true, family.density(t))?;
        if k.is_infinite() {
            return Ok(f64::INFINITY);
        }
        acc += w * k;
    }
    Ok(acc)
}

/// Mean bound z0 + b^-1 (1 + A + sqrt(2A)) with
/// A = log(1 + a e^(-b z0)) + K for a variable with a certified
/// exponential tail under the reference measure.
pub fn barron_bound(z0: f64, a: f64, b: f64, k: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain(format!("tail constants must be positive, got a={a}, b={b}")));
    }
    if !(z0 >= 0.0) || !(k >= 0.0) {
        return Err(Error::domain(format!("z0 and K must be >= 0, got z0={z0}, K={k}")));
    }
    let a_term = (a * (-b * z0).exp()).ln_1p() + k;
    Ok(z0 + (1.0 + a_term + (2.0 * a_term).sqrt()) / b)
}

/// Radius certified for any expected-loss minimizer under the concentration
/// hypothesis Q[B(s, 2^(j-J))] >= 1 - a exp(-B 4^j):
/// ([ (5/4)(1 + 0.4 a a') ]^(1/delta) + 1) 2^-J.
///
/// Hypotheses checked: B >= 2, a e^-B <= 1/5, B' <= (B-1)/4.
pub fn bayesconv_radius(a: f64, big_b: f64, loss: &LossSpec, j: u32) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::hypothesis(format!("a = {a} must be > 0")));
    }
    if !(big_b >= 2.0) {
        return Err(Error::hypothesis(format!("B = {big_b} must be >= 2")));
    }
    let tail = a * (-big_b).exp();
    if tail > 0.2 {
        return Err(Error::hypothesis(format!("a e^-B = {tail} exceeds 1/5")));
    }
    if loss.b_prime > (big_b - 1.0) / 4.0 {
        return Err(Error::hypothesis(format!(
            "B' = {} exceeds (B-1)/4 = {}",
            loss.b_prime,
            (big_b - 1.0) / 4.0
        )));
    }
    if j == 0 {
        return Err(Error::domain("level J must be >= 1".to_string()));
    }
    Ok(((1.25 * (1.0 + 0.4 * a * loss.a_prime)).powf(1.0 / loss.delta) + 1.0)
        * 0.5f64.powi(j as i32))
}

/// Mixture affinity bound [1 - (h - r1 - r2)^2]^n for ball-supported
/// mixtures whose centers are h apart; requires h > r1 + r2.
pub fn lecam_affinity_bound(h: f64, r1: f64, r2: f64, n: u32) -> Result<f64> {
    if !(r1 >= 0.0 && r2 >= 0.0) {
        return Err(Error::domain(format!("radii must be >= 0, got ({r1}, {r2})")));
    }
    if !(h > r1 + r2) {
        return Err(Error::hypothesis(format!(
            "separation h = {h} must exceed r1 + r2 = {}",
            r1 + r2
        )));
    }
    let gap = h - r1 - r2;
    Ok((1.0 - gap * gap).max(0.0).powi(n as i32))
}

/// Per-level posterior-mass thresholds 1 - 1.05 exp(-4^-(j+3) n) for
/// j = 0..=J and the outer failure bound 1.05 exp(-4^-(J+3) n).
pub struct Theorem1Curve {
    pub thresholds: Vec<(u32, f64)>,
    pub outer_bound: f64,
}

pub fn theorem1_bound_curve(n: u64, j: u32) -> Theorem1Curve {
    let thresholds = (0..=j)
        .map(|lvl| {
            let e = 4.0f64.powi(-(lvl as i32 + 3)) * n as f64;
            (lvl, 1.0 - 1.05 * (-e).exp())
        })
        .collect();
    let outer_bound = 1.05 * (-(4.0f64.powi(-(j as i32 + 3)) * n as f64)).exp();
    Theorem1Curve {
        thresholds,
        outer_bound,
    }
}

/// Radii 2^k c / sqrt(n) and thresholds 1 - 1.05 exp(-4^(k-4) c^2) for
/// k >= J2(c) while the radius stays at most 1, plus the failure budget
/// kappa + c.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Theorem2Curve {
    /// (k, radius, threshold)
    pub levels: Vec<(u32, f64, f64)>,
    pub failure_budget: f64,
    /// kappa + c >= 1 makes the statement vacuous.
    pub vacuous: bool,
}

pub fn theorem2_bound_curve(n: u64, c: f64, kappa: f64, j2_of_c: u32) -> Result<Theorem2Curve> {
    if !(c > 0.0 && c <= 0.5) {
        return Err(Error::domain(format!("c = {c} outside (0, 1/2]")));
    }
    if !(kappa >= 0.0 && kappa < 0.5) {
        return Err(Error::hypothesis(format!("kappa = {kappa} outside [0, 1/2)")));
    }
    let sqrt_n = (n as f64).sqrt();
    let mut levels = Vec::new();
    let mut k = j2_of_c;
    loop {
        let radius = 2.0f64.powi(k as i32) * c / sqrt_n;
        if radius > 1.0 {
            break;
        }
        let threshold = 1.0 - 1.05 * (-(4.0f64.powi(k as i32 - 4) * c * c)).exp();
        levels.push((k, radius, threshold));
        k += 1;
    }
    let failure_budget = kappa + c;
    Ok(Theorem2Curve {
        levels,
        failure_budget,
        vacuous: failure_budget >= 1.0,
    })
}

/// Gate for the risk theorem: J1 >= 3 and
/// 4^-(J1+1) n >= (gamma^3 beta(J1)/3) v D(2^(1-J1)) v kappa for some
/// kappa > 1. Returns the largest usable kappa, 4^-(J1+1) n.
pub fn theorem3_gate(
    n: u64,
    j1: u32,
    dims: &DimensionTable,
    profile: &PriorMassProfile,
) -> Result<f64> {
    if j1 < 3 {
        return Err(Error::Infeasible {
            gate: "risk-theorem level",
            detail: format!("J1 = {j1} must be >= 3"),
        });
    }
    let lhs = 4.0f64.powi(-(j1 as i32 + 1)) * n as f64;
    let other = (profile.gamma.powi(3) * profile.beta(j1)? / 3.0)
        .max(dims.eval(0.5f64.powi(j1 as i32 - 1))?);
    if lhs < other {
        return Err(Error::Infeasible {
            gate: "risk-theorem sample size",
            detail: format!("4^-(J1+1) n = {lhs} below {other}"),
        });
    }
    if !(lhs > 1.0) {
        return Err(Error::Infeasible {
            gate: "risk-theorem margin",
            detail: format!("largest usable kappa {lhs} must exceed 1"),
        });
    }
    Ok(lhs)
}

/// Risk bracket Delta^2 (4^-J1 + K_n) and the misspecification add-on
/// 2 h^2(P_s, P); the universal constant multiplying the bracket is
/// reported empirically by consumers, never produced here.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RiskTerms {
    pub bracket: f64,
    pub misspecification_addon: f64,
    pub kn_infinite: bool,
}

pub fn theorem3_risk_terms(j1: u32, kn_value: f64, delta: f64, h_center_true: f64) -> RiskTerms {
    let bracket = delta * delta * (4.0f64.powi(-(j1 as i32)) + kn_value);
    RiskTerms {
        bracket,
        misspecification_addon: 2.0 * h_center_true * h_center_true,
        kn_infinite: kn_value.is_infinite(),
    }
}
