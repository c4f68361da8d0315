//! Metric-entropy machinery: separated sets, covering numbers, the dimension
//! function D(x) and the prior-mass profile (beta, gamma).
//!
//! D and beta are fitted from the concrete family and prior rather than
//! assumed, then re-verifiable by independent scans; the bound calculator
//! instantiates the concentration statements with the fitted witnesses.

use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::model::Prior;
use crate::CMP_TOL;

/// An x-separated subset of family indices: pairwise distances strictly
/// greater than `separation`, maximal within the subset it was built from.
#[derive(Debug, Clone)]
pub struct SeparatedSet {
    pub indices: Vec<usize>,
    pub separation: f64,
}

/// Greedy maximal x-separated subset, scanning indices in ascending order.
///
/// Any maximal separated set works for the covering sandwich; the ascending
/// scan fixes the tie-breaks so the construction is deterministic.
pub fn greedy_maximal_separated(
    metric: &impl Metric,
    subset: &[usize],
    x: f64,
) -> Result<SeparatedSet> {
    if subset.is_empty() {
        return Err(Error::domain("separated-set construction needs a nonempty subset"));
    }
    if !(x > 0.0) {
        return Err(Error::domain(format!("separation {x} must be > 0")));
    }
    let mut order = subset.to_vec();
    order.sort_unstable();
    order.dedup();
    let mut kept: Vec<usize> = Vec::new();
    for &p in &order {
        if kept.iter().all(|&q| metric.dist(p, q) > x) {
            kept.push(p);
        }
    }
    Ok(SeparatedSet {
        indices: kept,
        separation: x,
    })
}

/// Exhaustive post-check used by tests: separation and maximality.
pub fn is_maximal_separated(metric: &impl Metric, subset: &[usize], set: &SeparatedSet) -> bool {
    let x = set.separation;
    for (a, &i) in set.indices.iter().enumerate() {
        for &j in set.indices.iter().skip(a + 1) {
            if metric.dist(i, j) <= x {
                return false;
            }
        }
    }
    subset
        .iter()
        .all(|&p| set.indices.iter().any(|&q| metric.dist(p, q) <= x))
}

/// Greedy cover by balls of radius `x` centered at subset points, lowest
/// uncovered index first. The chosen centers coincide with the greedy
/// maximal x-separated set.
pub fn greedy_cover(metric: &impl Metric, subset: &[usize], x: f64) -> Result<Vec<usize>> {
    Ok(greedy_maximal_separated(metric, subset, x)?.indices)
}

const EXACT_COVER_NODE_BUDGET: u64 = 50_000_000;

/// Exact minimal number of radius-x balls covering `targets`, with centers
/// drawn from `centers` (the ambient space may be richer than the covered
/// set). Branch and bound with dominance pruning.
///
/// Returns `None` when the target set exceeds 128 points or the node budget
/// is exhausted; callers then fall back to the greedy upper bound.
pub fn exact_min_cover(
    metric: &impl Metric,
    targets: &[usize],
    centers: &[usize],
    x: f64,
) -> Result<Option<usize>> {
    if targets.is_empty() || centers.is_empty() {
        return Err(Error::domain("cover search needs nonempty targets and centers"));
    }
    if !(x > 0.0) {
        return Err(Error::domain(format!("cover radius {x} must be > 0")));
    }
    let mut order = targets.to_vec();
    order.sort_unstable();
    order.dedup();
    let k = order.len();
    if k > 128 {
        return Ok(None);
    }
    let full: u128 = if k == 128 { u128::MAX } else { (1u128 << k) - 1 };
    let masks: Vec<u128> = centers
        .iter()
        .map(|&c| {
            let mut m = 0u128;
            for (p, &ip) in order.iter().enumerate() {
                if metric.dist(c, ip) <= x {
                    m |= 1u128 << p;
                }
            }
            m
        })
        .collect();
    if masks.iter().fold(0u128, |acc, m| acc | m) != full {
        return Err(Error::domain(
            "some target is not reachable from any candidate center".to_string(),
        ));
    }

    // Seed with a greedy set cover over the candidate centers.
    let mut best = {
        let mut covered = 0u128;
        let mut count = 0usize;
        while covered != full {
            let (_, gain_mask) = masks
                .iter()
                .map(|&m| {
                    let gain = (m & !covered).count_ones();
                    (gain, m)
                })
                .max_by_key(|&(gain, _)| gain)
                .unwrap();
            covered |= gain_mask;
            count += 1;
        }
        count
    };
    let mut nodes: u64 = 0;
    let exhausted =
        !search_cover(&masks, full, 0u128, 0, &mut best, &mut nodes, EXACT_COVER_NODE_BUDGET);
    if exhausted {
        return Ok(None);
    }
    Ok(Some(best))
}

/// Depth-first search for a smaller cover; returns false when the node
/// budget ran out (result not certified).
fn search_cover(
    masks: &[u128],
    full: u128,
    covered: u128,
    used: usize,
    best: &mut usize,
    nodes: &mut u64,
    budget: u64,
) -> bool {
    *nodes += 1;
    if *nodes > budget {
        return false;
    }
    if covered == full {
        *best = (*best).min(used);
        return true;
    }
    if used + 1 >= *best {
        return true;
    }
    let p = (!covered & full).trailing_zeros() as usize;
    let bit = 1u128 << p;
    let mut cands: Vec<(usize, u128)> = masks
        .iter()
        .enumerate()
        .filter(|(_, m)| *m & bit != 0)
        .map(|(c, m)| (c, m & !covered))
        .collect();
    // Dominance: drop candidates whose effective coverage is contained in
    // another candidate's (swap never increases the cover size).
    let mut keep = vec![true; cands.len()];
    for i in 0..cands.len() {
        if !keep[i] {
            continue;
        }
        for j in 0..cands.len() {
            if i == j || !keep[j] {
                continue;
            }
            let (ci, cj) = (cands[i].1, cands[j].1);
            if ci & cj == ci && (ci != cj || j < i) {
                keep[i] = false;
                break;
            }
        }
    }
    let mut it = 0;
    cands.retain(|_| {
        let k = keep[it];
        it += 1;
        k
    });
    cands.sort_by_key(|(c, m)| (std::cmp::Reverse(m.count_ones()), *c));
    for (_, eff) in cands {
        if !search_cover(masks, full, covered | eff, used + 1, best, nodes, budget) {
            return false;
        }
    }
    true
}

/// Report for the covering sandwich N_A(x) <= |N| <= N_A(x/2).
#[derive(Debug, Clone)]
pub struct CoverSandwichReport {
    pub x: f64,
    pub separated_size: usize,
    pub greedy_cover_x: usize,
    pub greedy_cover_half_x: usize,
    pub exact_cover_x: Option<usize>,
    pub exact_cover_half_x: Option<usize>,
    /// The testable chain with exact covers when certified; greedy covers
    /// only certify upper bounds on the covering numbers.
    pub chain_holds: bool,
}

/// Computes the sandwich quantities; exact minimal covers are attempted only
/// for subsets of at most `exact_limit` points, with candidate centers drawn
/// from the whole metric space (which may be richer than the subset).
pub fn covering_sandwich_check(
    metric: &impl Metric,
    subset: &[usize],
    x: f64,
    exact_limit: usize,
) -> Result<CoverSandwichReport> {
    let sep = greedy_maximal_separated(metric, subset, x)?;
    let greedy_x = greedy_cover(metric, subset, x)?.len();
    let greedy_half = greedy_cover(metric, subset, x / 2.0)?.len();
    let all_centers: Vec<usize> = (0..metric.len()).collect();
    let (exact_x, exact_half) = if subset.len() <= exact_limit {
        (
            exact_min_cover(metric, subset, &all_centers, x)?,
            exact_min_cover(metric, subset, &all_centers, x / 2.0)?,
        )
    } else {
        (None, None)
    };
    let s = sep.indices.len();
    // Centers of a maximal separated set form a cover, so any certified
    // cover size at radius x is at most s.
    let mut chain = greedy_x <= s;
    if let Some(e) = exact_x {
        chain = chain && e <= s;
    }
    if let Some(e) = exact_half {
        chain = chain && s <= e;
    }
    Ok(CoverSandwichReport {
        x,
        separated_size: s,
        greedy_cover_x: greedy_x,
        greedy_cover_half_x: greedy_half,
        exact_cover_x: exact_x,
        exact_cover_half_x: exact_half,
        chain_holds: chain,
    })
}

/// Tabulated dimension function: x-separated subsets of balls of radius 4x
/// have log-cardinality at most D(x). Values are >= 1 and nonincreasing in x.
#[derive(Debug, Clone)]
pub struct DimensionTable {
    x_grid: Vec<f64>,
    d_values: Vec<f64>,
}

impl DimensionTable {
    /// `x_grid` strictly decreasing within (0, 1/4]; values >= 1 and
    /// nondecreasing along the grid (i.e. D nonincreasing in x).
    pub fn from_parts(x_grid: Vec<f64>, d_values: Vec<f64>) -> Result<Self> {
        if x_grid.is_empty() || x_grid.len() != d_values.len() {
            return Err(Error::Dimension {
                left: x_grid.len(),
                right: d_values.len(),
            });
        }
        for w in x_grid.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::domain("dimension grid must be strictly decreasing"));
            }
        }
        if !(x_grid[0] <= 0.25 && *x_grid.last().unwrap() > 0.0) {
            return Err(Error::domain("dimension grid must lie in (0, 1/4]"));
        }
        for (i, &d) in d_values.iter().enumerate() {
            if !(d >= 1.0) {
                return Err(Error::domain(format!("dimension value {d} at row {i} below 1")));
            }
            if i > 0 && d < d_values[i - 1] {
                return Err(Error::domain("dimension values must be nonincreasing in x"));
            }
        }
        Ok(Self { x_grid, d_values })
    }

    pub fn x_grid(&self) -> &[f64] {
        &self.x_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.d_values
    }

    /// D evaluated at the largest tabulated point <= x, a valid upper bound
    /// for D(x) since D is nonincreasing.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x > self.x_grid[0] {
            return Err(Error::domain(format!(
                "dimension table starts at {}, got {x}",
                self.x_grid[0]
            )));
        }
        for (i, &g) in self.x_grid.iter().enumerate() {
            if g <= x {
                return Ok(self.d_values[i]);
            }
        }
        Err(Error::domain(format!(
            "dimension table ends at {}, got {x}",
            self.x_grid.last().unwrap()
        )))
    }

    /// sup of the tabulated values.
    pub fn max_value(&self) -> f64 {
        *self.d_values.last().unwrap()
    }
}

/// Fits D(x) = max over centers of the log-cardinality of the greedy maximal
/// x-separated subset of the ball of radius 4x, clamped below at 1 and
/// monotonized to be nonincreasing in x.
pub fn estimate_dimension_function(
    metric: &impl Metric,
    x_grid: &[f64],
) -> Result<DimensionTable> {
    if x_grid.is_empty() {
        return Err(Error::domain("dimension grid must be nonempty"));
    }
    let all: Vec<usize> = (0..metric.len()).collect();
    if all.is_empty() {
        return Err(Error::domain("dimension fit needs a nonempty family"));
    }
    let mut values = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        if !(x > 0.0 && x <= 0.25) {
            return Err(Error::domain(format!("dimension grid point {x} outside (0, 1/4]")));
        }
        let mut raw: f64 = 0.0;
        for &c in &all {
            let ball = metric.ball(c, 4.0 * x);
            let sep = greedy_maximal_separated(metric, &ball, x)?;
            raw = raw.max((sep.indices.len() as f64).ln());
        }
        values.push(raw.max(1.0));
    }
    // Monotonize: nonincreasing in x means nondecreasing along the
    // decreasing grid.
    for i in 1..values.len() {
        values[i] = values[i].max(values[i - 1]);
    }
    DimensionTable::from_parts(x_grid.to_vec(), values)
}

/// Independent re-scan: every greedy separated set of every 4x-ball stays
/// within exp(D(x)).
pub fn satisfies_dimension_assumption(metric: &impl Metric, table: &DimensionTable) -> bool {
    let all: Vec<usize> = (0..metric.len()).collect();
    for (&x, &d) in table.x_grid().iter().zip(table.values()) {
        for &c in &all {
            let ball = metric.ball(c, 4.0 * x);
            let sep = greedy_maximal_separated(metric, &ball, x).unwrap();
            if (sep.indices.len() as f64).ln() > d + CMP_TOL {
                return false;
            }
        }
    }
    true
}

/// Global covering bound exp(j D(4^-j)) with the recursion check
/// N(4^-k) <= N(4^-(k-1)) exp(D(4^-k)) evaluated on greedy covers.
#[derive(Debug, Clone)]
pub struct GlobalCoveringBound {
    pub j: u32,
    pub bound: f64,
    pub recursion_ok: bool,
    /// Greedy cover sizes at radii 4^-k for k = 0..=j.
    pub greedy_cover_sizes: Vec<usize>,
}

pub fn global_covering_bound(
    metric: &impl Metric,
    table: &DimensionTable,
    j: u32,
) -> Result<GlobalCoveringBound> {
    if j == 0 {
        return Err(Error::domain("covering bound needs j >= 1"));
    }
    let x_j = 0.25f64.powi(j as i32);
    let d_j = table.eval(x_j)?;
    let bound = (j as f64 * d_j).exp();

    let all: Vec<usize> = (0..metric.len()).collect();
    let mut sizes = Vec::with_capacity(j as usize + 1);
    for k in 0..=j {
        let r = 0.25f64.powi(k as i32);
        sizes.push(greedy_cover(metric, &all, r)?.len());
    }
    let mut recursion_ok = true;
    for k in 1..=j as usize {
        let d_k = table.eval(0.25f64.powi(k as i32))?;
        if (sizes[k] as f64) > sizes[k - 1] as f64 * d_k.exp() + CMP_TOL {
            recursion_ok = false;
        }
    }
    Ok(GlobalCoveringBound {
        j,
        bound,
        recursion_ok,
        greedy_cover_sizes: sizes,
    })
}

/// Prior mass of the closed ball of radius `radius` around `center`.
pub fn ball_mass(prior: &Prior, metric: &impl Metric, center: usize, radius: f64) -> f64 {
    let mut mass = 0.0;
    for j in 0..metric.len() {
        if metric.dist(center, j) <= radius {
            mass += prior.get(j);
        }
    }
    mass
}

/// Fitted prior-mass profile: ball masses nu(B(s, 2^-j)) for j = 0..=j_max
/// and the smallest nondecreasing beta >= 1 with
/// nu(B(j-k)) <= exp(gamma^k beta(j)) nu(B(j)) for all j >= 3, 3 <= k <= j.
#[derive(Debug, Clone)]
pub struct PriorMassProfile {
    pub gamma: f64,
    /// nu(B(s, 2^-j)) for j = 0..=j_max.
    pub ball_masses: Vec<f64>,
    /// beta(j) for j = 3..=j_max.
    pub beta_values: Vec<f64>,
}

impl PriorMassProfile {
    pub fn from_parts(gamma: f64, ball_masses: Vec<f64>, beta_values: Vec<f64>) -> Result<Self> {
        if !(1.0..=4.0).contains(&gamma) {
            return Err(Error::domain(format!("gamma {gamma} outside [1,4]")));
        }
        if ball_masses.len() < 4 || beta_values.len() != ball_masses.len() - 3 {
            return Err(Error::Dimension {
                left: ball_masses.len(),
                right: beta_values.len() + 3,
            });
        }
        for w in ball_masses.windows(2) {
            if w[1] > w[0] + CMP_TOL {
                return Err(Error::domain("ball masses must be nonincreasing in j"));
            }
        }
        for (i, &b) in beta_values.iter().enumerate() {
            if !(b >= 1.0) {
                return Err(Error::domain(format!("beta value {b} at j={} below 1", i + 3)));
            }
            if i > 0 && b < beta_values[i - 1] {
                return Err(Error::domain("beta must be nondecreasing in j"));
            }
        }
        Ok(Self {
            gamma,
            ball_masses,
            beta_values,
        })
    }

    pub fn j_max(&self) -> u32 {
        (self.ball_masses.len() - 1) as u32
    }

    pub fn mass(&self, j: u32) -> f64 {
        self.ball_masses[j as usize]
    }

    /// beta(j), defined for 3 <= j <= j_max.
    pub fn beta(&self, j: u32) -> Result<f64> {
        if j < 3 || j > self.j_max() {
            return Err(Error::domain(format!(
                "beta defined for 3 <= j <= {}, got {j}",
                self.j_max()
            )));
        }
        Ok(self.beta_values[(j - 3) as usize])
    }

    pub fn beta_bar(&self) -> f64 {
        *self.beta_values.last().unwrap()
    }

    /// Independent re-check of the fitted profile against its own masses.
    pub fn satisfies_prior_assumption(&self) -> bool {
        for j in 3..=self.j_max() {
            let beta_j = self.beta(j).unwrap();
            for k in 3..=j {
                let lhs = self.mass(j - k);
                let rhs_log = self.gamma.powi(k as i32) * beta_j;
                if self.mass(j) == 0.0 {
                    return false;
                }
                if (lhs / self.mass(j)).ln() > rhs_log + CMP_TOL {
                    return false;
                }
            }
        }
        true
    }
}

pub fn estimate_prior_mass_profile(
    prior: &Prior,
    metric: &impl Metric,
    center: usize,
    j_max: u32,
    gamma: f64,
) -> Result<PriorMassProfile> {
    if !(1.0..=4.0).contains(&gamma) {
        return Err(Error::domain(format!("gamma {gamma} outside [1,4]")));
    }
    if j_max < 3 {
        return Err(Error::domain(format!("profile depth j_max={j_max} must be >= 3")));
    }
    let masses: Vec<f64> = (0..=j_max)
        .map(|j| ball_mass(prior, metric, center, 0.5f64.powi(j as i32)))
        .collect();
    if masses[j_max as usize] <= 0.0 {
        return Err(Error::EmptyBall);
    }
    let mut beta = Vec::with_capacity((j_max - 2) as usize);
    for j in 3..=j_max {
        let mut b: f64 = 1.0;
        for k in 3..=j {
            let ratio = masses[(j - k) as usize] / masses[j as usize];
            b = b.max(gamma.powi(-(k as i32)) * ratio.ln());
        }
        beta.push(b);
    }
    for i in 1..beta.len() {
        beta[i] = beta[i].max(beta[i - 1]);
    }
    PriorMassProfile::from_parts(gamma, masses, beta)
}
