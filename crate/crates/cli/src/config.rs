//! Scenario configuration: a single JSON file describing the family, prior,
//! true distribution, sample size, loss, profile parameters and the list of
//! statements to verify.

use bcl_core::hellinger::{hellinger_distance, ProbabilityTable};
use bcl_core::loss::{make_exp_loss, make_power_loss, LossSpec};
use bcl_core::model::{build_grid_family, FamilySpec, ModelFamily, Prior, TrueDistribution};
use serde::Deserialize;

use crate::RunError;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorConfig {
    Uniform,
    Explicit { weights: Vec<f64> },
    PointMass { index: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrueDistConfig {
    /// The density of a family index; kappa is derived from its distance
    /// to the center.
    InFamily { index: usize },
    /// Arbitrary density; `kappa` optionally asserts h(P_s, P) sqrt(2n).
    Explicit {
        density: Vec<f64>,
        #[serde(default)]
        kappa: Option<f64>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossConfig {
    Power { delta: f64, b_prime: f64 },
    Exponential { theta: f64, delta: f64 },
}

#[derive(Debug, Clone, Deserialize)]
pub struct VerificationConfig {
    pub statement: String,
    #[serde(default)]
    pub reps: Option<u64>,
    /// lemma1_tail: the family index whose density plays Q.
    #[serde(default)]
    pub q_index: Option<usize>,
    /// lemma1_tail / eq18_corollary: thresholds for the tail events.
    #[serde(default)]
    pub y_grid: Option<Vec<f64>>,
    /// eq18_corollary / prop5_lecam: product length of the tiny-space path.
    #[serde(default)]
    pub product_n: Option<usize>,
    /// lemma4 / lemma3 scans: number of random cases.
    #[serde(default)]
    pub trials: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub family: FamilySpec,
    pub prior: PriorConfig,
    #[serde(default)]
    pub true_distribution: Option<TrueDistConfig>,
    pub n: u64,
    pub gamma: f64,
    #[serde(default)]
    pub loss: Option<LossConfig>,
    /// Budget split of the true-model statement.
    #[serde(default)]
    pub c: Option<f64>,
    /// Countable-model statement parameters.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Depth of the prior-mass profile (levels j = 0..=j_max).
    #[serde(default)]
    pub j_max: Option<u32>,
    /// Dimension-table grid; defaults to 2^-2 .. 2^-10.
    #[serde(default)]
    pub x_grid: Option<Vec<f64>>,
    pub verifications: Vec<VerificationConfig>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out_dir: Option<String>,
}

pub const STATEMENT_IDS: [&str; 11] = [
    "lemma1_tail",
    "prop1_toy",
    "thm1_concentration",
    "thm2_truemodel",
    "thm3_risk",
    "prop3_minimizer",
    "prop4_barron",
    "prop5_lecam",
    "lemma4_kl_sandwich",
    "lemma3_mixture",
    "eq18_corollary",
];

/// Statements that sample and therefore need at least 10^4 replications.
const MC_STATEMENTS: [&str; 5] = [
    "lemma1_tail",
    "prop1_toy",
    "thm1_concentration",
    "thm2_truemodel",
    "thm3_risk",
];

/// Fully built scenario inputs.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub family: ModelFamily,
    pub prior: Prior,
    pub p_true: TrueDistribution,
    pub kappa: f64,
    pub loss: Option<LossSpec>,
    pub seed: u64,
}

pub fn load_config(path: &str) -> Result<ScenarioConfig, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("cannot read {path}: {e}")))?;
    let config: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| RunError::Config(format!("{path}: {e}")))?;
    Ok(config)
}

pub fn build_scenario(
    config: ScenarioConfig,
    seed_override: Option<u64>,
    reps_override: Option<u64>,
) -> Result<Scenario, RunError> {
    let mut config = config;
    if config.n == 0 {
        return Err(RunError::Config("n must be >= 1".to_string()));
    }
    if let Some(reps) = reps_override {
        for v in &mut config.verifications {
            if v.reps.is_some() {
                v.reps = Some(reps);
            }
        }
    }
    for v in &config.verifications {
        if !STATEMENT_IDS.contains(&v.statement.as_str()) {
            return Err(RunError::Config(format!(
                "unknown statement id `{}`; see `bcl list-statements`",
                v.statement
            )));
        }
        if MC_STATEMENTS.contains(&v.statement.as_str()) {
            let reps = v.reps.ok_or_else(|| {
                RunError::Config(format!("statement `{}` needs a reps field", v.statement))
            })?;
            if reps < 10_000 {
                return Err(RunError::Config(format!(
                    "statement `{}` needs reps >= 10000, got {reps}",
                    v.statement
                )));
            }
        }
    }

    let family = build_grid_family(&config.family)
        .map_err(|e| RunError::Config(format!("family: {e}")))?;
    let prior = match &config.prior {
        PriorConfig::Uniform => Prior::uniform(family.len()),
        PriorConfig::Explicit { weights } => {
            if weights.len() != family.len() {
                return Err(RunError::Config(format!(
                    "prior has {} weights for {} indices",
                    weights.len(),
                    family.len()
                )));
            }
            Prior::new(weights.clone()).map_err(|e| RunError::Config(format!("prior: {e}")))?
        }
        PriorConfig::PointMass { index } => {
            if *index >= family.len() {
                return Err(RunError::Config(format!("prior point-mass index {index} out of range")));
            }
            Prior::point_mass(family.len(), *index)
        }
    };

    let p_true = match &config.true_distribution {
        None => TrueDistribution::in_family(&family, family.center_index())
            .map_err(|e| RunError::Config(e.to_string()))?,
        Some(TrueDistConfig::InFamily { index }) => TrueDistribution::in_family(&family, *index)
            .map_err(|e| RunError::Config(e.to_string()))?,
        Some(TrueDistConfig::Explicit { density, kappa }) => {
            let table = ProbabilityTable::new(density.clone())
                .map_err(|e| RunError::Config(format!("true density: {e}")))?;
            if table.support_size() != family.sample_space_size() {
                return Err(RunError::Config(format!(
                    "true density on {} outcomes vs sample space {}",
                    table.support_size(),
                    family.sample_space_size()
                )));
            }
            let h = hellinger_distance(&table, family.density(family.center_index()))
                .map_err(|e| RunError::Config(e.to_string()))?;
            if let Some(kappa) = kappa {
                let implied = kappa / (2.0 * config.n as f64).sqrt();
                if (h - implied).abs() > 1e-8 {
                    return Err(RunError::Config(format!(
                        "declared kappa {kappa} implies h(P_s,P) = {implied}, measured {h}"
                    )));
                }
            }
            TrueDistribution::explicit(table, Some(h))
        }
    };
    let kappa = p_true.kappa_over_sqrt2n.unwrap_or(0.0) * (2.0 * config.n as f64).sqrt();

    let loss = match &config.loss {
        None => None,
        Some(LossConfig::Power { delta, b_prime }) => Some(
            make_power_loss(*delta, *b_prime).map_err(|e| RunError::Config(e.to_string()))?,
        ),
        Some(LossConfig::Exponential { theta, delta }) => Some(
            make_exp_loss(*theta, *delta).map_err(|e| RunError::Config(e.to_string()))?,
        ),
    };

    let seed = seed_override
        .or(config.seed)
        .or_else(|| {
            std::env::var("BCL_SEED")
                .ok()
                .and_then(|s| s.parse::<u64>().ok())
        })
        .ok_or_else(|| {
            RunError::Config("no seed: pass --seed, set `seed` in the config, or export BCL_SEED".to_string())
        })?;

    Ok(Scenario {
        config,
        family,
        prior,
        p_true,
        kappa,
        loss,
        seed,
    })
}
