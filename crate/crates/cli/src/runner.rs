//! Orchestration: fit diagnostics, instantiate the plan, dispatch the
//! configured statements and write the report files.

use std::path::Path;

use bcl_core::bounds::{
    self, find_j_pair, theorem1_bound_curve, ConcentrationPlan, JPair,
};
use bcl_core::geometry::{
    estimate_dimension_function, estimate_prior_mass_profile, DimensionTable, PriorMassProfile,
};
use bcl_core::loss::LossSpec;
use bcl_core::metric::DistanceMatrix;
use bcl_core::verify::{self, BallSpec, VerificationReport};

use crate::config::{Scenario, VerificationConfig, STATEMENT_IDS};
use crate::report;
use crate::{core_gate_error, RunError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "both" => Ok(Self::Both),
            other => Err(format!("unknown format `{other}` (csv|json|both)")),
        }
    }
}

pub struct RunOutcome {
    pub reports: Vec<VerificationReport>,
    pub all_passed: bool,
}

/// Scenario-wide fitted context shared across statements.
struct Context<'a> {
    sc: &'a Scenario,
    dims: DimensionTable,
    profile: PriorMassProfile,
    j_pair: Option<JPair>,
    plan: ConcentrationPlan,
}

fn default_x_grid() -> Vec<f64> {
    (2..=10).map(|k| 0.5f64.powi(k)).collect()
}

impl<'a> Context<'a> {
    fn new(sc: &'a Scenario) -> Result<Self, RunError> {
        let grid = sc.config.x_grid.clone().unwrap_or_else(default_x_grid);
        let dims =
            estimate_dimension_function(&sc.family, &grid).map_err(core_gate_error)?;
        let j_max = sc.config.j_max.unwrap_or(8);
        let profile = estimate_prior_mass_profile(
            &sc.prior,
            &sc.family,
            sc.family.center_index(),
            j_max,
            sc.config.gamma,
        )
        .map_err(core_gate_error)?;
        let plan = ConcentrationPlan {
            n: sc.config.n,
            kappa: sc.kappa,
            c: sc.config.c,
            delta_constant: sc.loss.as_ref().map(bounds::delta_constant),
            ..ConcentrationPlan::default()
        };
        Ok(Self {
            sc,
            dims,
            profile,
            j_pair: None,
            plan,
        })
    }

    /// The admissible (J1, J) pair, computed once on first use.
    fn j_pair(&mut self) -> Result<JPair, RunError> {
        if let Some(p) = self.j_pair {
            return Ok(p);
        }
        let pair =
            find_j_pair(self.sc.config.n, &self.dims, &self.profile).map_err(core_gate_error)?;
        let curve = theorem1_bound_curve(self.sc.config.n, pair.j);
        self.plan.j1 = Some(pair.j1);
        self.plan.j = Some(pair.j);
        self.plan.bound_curve = curve.thresholds;
        self.plan.outer_bound = Some(curve.outer_bound);
        self.j_pair = Some(pair);
        Ok(pair)
    }

    fn loss(&self, statement: &str) -> Result<LossSpec, RunError> {
        self.sc.loss.ok_or_else(|| {
            RunError::Config(format!("statement `{statement}` needs a loss in the config"))
        })
    }
}

fn run_statement(
    ctx: &mut Context<'_>,
    v: &VerificationConfig,
) -> Result<Vec<VerificationReport>, RunError> {
    let sc = ctx.sc;
    let n = sc.config.n as usize;
    let seed = sc.seed;
    let reps = v.reps.unwrap_or(10_000);
    match v.statement.as_str() {
        "lemma1_tail" => {
            if sc.family.len() < 2 {
                return Err(RunError::Config(
                    "lemma1_tail needs at least two family indices".to_string(),
                ));
            }
            let q_index = v.q_index.unwrap_or(if sc.family.center_index() == 0 { 1 } else { 0 });
            if q_index >= sc.family.len() {
                return Err(RunError::Config(format!("q_index {q_index} out of range")));
            }
            let y_grid = v
                .y_grid
                .clone()
                .unwrap_or_else(|| vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
            verify::verify_tail_inequality(
                &sc.p_true.density,
                sc.family.density(q_index),
                n,
                &y_grid,
                reps,
                seed,
            )
            .map_err(core_gate_error)
        }
        "prop1_toy" => {
            let center = sc.family.center_index();
            if sc.p_true.kappa_over_sqrt2n.unwrap_or(1.0) != 0.0
                && sc.p_true.density != *sc.family.density(center)
            {
                return Err(RunError::Config(
                    "prop1_toy requires the true distribution to equal the center density"
                        .to_string(),
                ));
            }
            let epsilon = sc.config.epsilon.unwrap_or(0.1);
            let delta = sc.config.delta.unwrap_or(0.1);
            let out = verify::verify_toy_concentration(
                &sc.family, &sc.prior, n, epsilon, delta, reps, seed,
            )
            .map_err(core_gate_error)?;
            ctx.plan.toy_k = Some(out.k);
            Ok(vec![out.report])
        }
        "thm1_concentration" => {
            let pair = ctx.j_pair()?;
            let rep = verify::verify_theorem1(&sc.family, &sc.prior, n, &pair, reps, seed)
                .map_err(core_gate_error)?;
            Ok(vec![rep])
        }
        "thm2_truemodel" => {
            let c = sc
                .config
                .c
                .ok_or_else(|| RunError::Config("thm2_truemodel needs `c` in the config".to_string()))?;
            let gamma = sc.config.gamma;
            let beta_bar = ctx.profile.beta_bar();
            let d_bar = ctx.dims.max_value();
            let ok = bounds::truemodel_n_gate(sc.config.n, c, gamma, beta_bar, d_bar)
                .map_err(core_gate_error)?;
            if !ok {
                return Err(RunError::Gate(format!(
                    "true-model sample-size gate fails at n = {}, c = {c}",
                    sc.config.n
                )));
            }
            let j2 = bounds::j2(c, gamma, beta_bar, d_bar).map_err(core_gate_error)?;
            ctx.plan.j2_of_c = Some(j2);
            let rep = verify::verify_theorem2(
                &sc.family,
                &sc.prior,
                &sc.p_true.density,
                n,
                c,
                sc.kappa,
                j2,
                reps,
                seed,
            )
            .map_err(core_gate_error)?;
            Ok(vec![rep])
        }
        "thm3_risk" => {
            let loss = ctx.loss("thm3_risk")?;
            let pair = ctx.j_pair()?;
            let kappa_gate =
                bounds::theorem3_gate(sc.config.n, pair.j1, &ctx.dims, &ctx.profile)
                    .map_err(core_gate_error)?;
            let kn = bounds::kn(
                &sc.prior,
                &sc.family,
                &sc.p_true.density,
                sc.family.center_index(),
                pair.j1,
            )
            .map_err(core_gate_error)?;
            ctx.plan.kn = Some(kn);
            let out = verify::verify_theorem3(
                &sc.family,
                &sc.prior,
                &sc.p_true.density,
                n,
                &loss,
                pair.j1,
                kn,
                kappa_gate,
                reps,
                seed,
            )
            .map_err(core_gate_error)?;
            Ok(vec![out.report])
        }
        "prop3_minimizer" => {
            let loss = ctx.loss("prop3_minimizer")?;
            let (metric, center, weights, j, a, big_b) = engineered_concentration_case(&loss);
            let rep = verify::verify_bayesconv(&metric, center, &weights, &loss, j, a, big_b)
                .map_err(core_gate_error)?;
            Ok(vec![rep])
        }
        "prop4_barron" => Ok(engineered_barron_reports()?),
        "prop5_lecam" => {
            let (b1, ball1, b2, ball2) = separated_ball_pair(sc)?;
            let product_n = v.product_n.unwrap_or(4);
            let rep = verify::verify_prop5_affinity(
                &sc.family, &sc.prior, &b1, ball1, &b2, ball2, product_n,
            )
            .map_err(core_gate_error)?;
            Ok(vec![rep])
        }
        "eq18_corollary" => {
            let (b1, ball1, b2, ball2) = separated_ball_pair(sc)?;
            let product_n = v.product_n.unwrap_or(4);
            let y_grid = v
                .y_grid
                .clone()
                .unwrap_or_else(|| (-10..=10).map(|i| i as f64 * 0.5).collect());
            verify::verify_lecam(
                &sc.family, &sc.prior, &b1, ball1, &b2, ball2, product_n, &y_grid, reps, seed,
            )
            .map_err(core_gate_error)
        }
        "lemma4_kl_sandwich" => {
            let trials = v.trials.unwrap_or(1000);
            let rep = verify::scan_kl_sandwich(trials, 5, seed).map_err(core_gate_error)?;
            Ok(vec![rep])
        }
        "lemma3_mixture" => {
            let trials = v.trials.unwrap_or(1000);
            let rep = verify::scan_mixture_affinity(trials, 4, seed).map_err(core_gate_error)?;
            Ok(vec![rep])
        }
        other => Err(RunError::Config(format!("unknown statement id `{other}`"))),
    }
}

/// Shell-engineered concentration measure on the line for the minimizer
/// check: mass exactly 1 - a e^(-B 4^j) inside each level-j ball, plus
/// zero-mass candidate points between the shells.
fn engineered_concentration_case(
    loss: &LossSpec,
) -> (DistanceMatrix, usize, Vec<f64>, u32, f64, f64) {
    let j = 3u32;
    let a = 1.05;
    let big_b = (4.0 * loss.b_prime + 1.0).max(2.0);
    let mut points = vec![0.0];
    let mut masses = vec![1.0 - a * (-big_b).exp()];
    for lvl in 0..(j - 1) {
        points.push(2.0f64.powi(lvl as i32 + 1 - j as i32));
        masses.push(
            a * ((-big_b * 4.0f64.powi(lvl as i32)).exp()
                - (-big_b * 4.0f64.powi(lvl as i32 + 1)).exp()),
        );
    }
    points.push(1.0);
    masses.push(a * (-big_b * 4.0f64.powi(j as i32 - 1)).exp());
    // zero-mass candidates near the certified radius
    points.push(1.5 * 0.5f64.powi(j as i32));
    masses.push(0.0);
    points.push(3.0 * 0.5f64.powi(j as i32));
    masses.push(0.0);
    (DistanceMatrix::from_points_1d(&points), 0, masses, j, a, big_b)
}

/// Geometric-tail mean-bound cases: T with P_Q[T >= z] = e^-z exactly at
/// integer levels, compared under R = Q and under a shifted R.
fn engineered_barron_reports() -> Result<Vec<VerificationReport>, RunError> {
    let levels = 12usize;
    let mut q = Vec::with_capacity(levels + 1);
    for k in 0..levels {
        q.push((-(k as f64)).exp() - (-(k as f64 + 1.0)).exp());
    }
    q.push(1.0 - q.iter().sum::<f64>());
    let t: Vec<f64> = (0..=levels).map(|k| k as f64).collect();
    let q = bcl_core::ProbabilityTable::new(q).map_err(|e| RunError::Config(e.to_string()))?;

    let mut r_raw = vec![0.0; levels + 1];
    r_raw[0] = 0.7;
    r_raw[1] = 0.2;
    r_raw[2] = 0.1;
    let r = bcl_core::ProbabilityTable::new(r_raw).map_err(|e| RunError::Config(e.to_string()))?;

    let same = verify::verify_barron(&t, &q, &q, 0.0, 1.0, 1.0).map_err(core_gate_error)?;
    let shifted = verify::verify_barron(&t, &r, &q, 0.0, 1.0, 1.0).map_err(core_gate_error)?;
    Ok(vec![same, shifted])
}

/// Two prior balls at the low and high ends of the family index range.
fn separated_ball_pair(
    sc: &Scenario,
) -> Result<(Vec<usize>, BallSpec, Vec<usize>, BallSpec), RunError> {
    let k = sc.family.len();
    if k < 2 {
        return Err(RunError::Config(
            "ball-separation statements need at least two family indices".to_string(),
        ));
    }
    if sc.family.sample_space_size() > 12 {
        return Err(RunError::Config(
            "exact ball-separation statements need a sample space of at most 12 outcomes"
                .to_string(),
        ));
    }
    if k < 4 {
        let b1 = vec![0];
        let b2 = vec![k - 1];
        return Ok((
            b1,
            BallSpec { center: 0, radius: 0.0 },
            b2,
            BallSpec {
                center: k - 1,
                radius: 0.0,
            },
        ));
    }
    let b1 = vec![0, 1];
    let b2 = vec![k - 2, k - 1];
    let ball1 = BallSpec {
        center: 0,
        radius: sc.family.hellinger(0, 1),
    };
    let ball2 = BallSpec {
        center: k - 1,
        radius: sc.family.hellinger(k - 1, k - 2),
    };
    Ok((b1, ball1, b2, ball2))
}

/// Runs every configured statement, writes the report files and returns the
/// conjunction of the non-vacuous passed flags.
pub fn run_scenario(
    sc: &Scenario,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<RunOutcome, RunError> {
    let mut ctx = Context::new(sc)?;
    let mut reports = Vec::new();
    for v in &sc.config.verifications {
        reports.extend(run_statement(&mut ctx, v)?);
    }
    let all_passed = reports.iter().filter(|r| !r.vacuous).all(|r| r.passed);

    std::fs::create_dir_all(out_dir)
        .map_err(|e| RunError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let write = |name: &str, content: String| -> Result<(), RunError> {
        std::fs::write(out_dir.join(name), content)
            .map_err(|e| RunError::Io(format!("cannot write {name}: {e}")))
    };
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        write(
            "diagnostics.csv",
            report::diagnostics_csv(&ctx.dims, &ctx.profile),
        )?;
        write("plan.csv", report::plan_csv(&sc.config.name, &ctx.plan))?;
        write(
            "verification.csv",
            report::verification_csv(&sc.config.name, &reports),
        )?;
    }
    if matches!(format, OutputFormat::Json | OutputFormat::Both) {
        write(
            "verification.json",
            report::verification_json(&sc.config.name, sc.seed, &reports),
        )?;
    }
    Ok(RunOutcome {
        reports,
        all_passed,
    })
}

/// The fixed statement registry: stable id plus a one-line description.
pub fn statement_table() -> Vec<(&'static str, &'static str)> {
    STATEMENT_IDS
        .iter()
        .map(|&id| {
            let desc = match id {
                "lemma1_tail" => "likelihood-ratio tail kept below e^(-y/2) rho^n for i.i.d. products",
                "prop1_toy" => "countable-model posterior concentration via the shell tail rule",
                "thm1_concentration" => "ball-restricted posterior concentration at every level j <= J",
                "thm2_truemodel" => "posterior concentration at radius scale c/sqrt(n) under the true model",
                "thm3_risk" => "point-estimate risk ratio against the bracket Delta^2 (4^-J1 + K_n)",
                "prop3_minimizer" => "expected-loss minimizer within the certified radius of the center",
                "prop4_barron" => "mean bound under a certified exponential tail and finite divergence",
                "prop5_lecam" => "mixture affinity of separated prior balls below [1 - gap^2]^n",
                "lemma4_kl_sandwich" => "divergence sandwich K >= -2 log rho >= 2 h^2 with ratio bound",
                "lemma3_mixture" => "mixture affinity rho(p, mix) >= 1 - r^2 for ball-supported mixtures",
                "eq18_corollary" => "log mixture-density ratio tail below exp(-y/2 - n gap^2)",
                _ => unreachable!(),
            };
            (id, desc)
        })
        .collect()
}
