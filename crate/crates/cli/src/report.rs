//! Deterministic report writers: CSV with `.` decimals, `,` separators, LF
//! line endings and 17 significant digits for reals (lossless f64
//! round-trip), plus a JSON dump of the full verification records.

use bcl_core::bounds::ConcentrationPlan;
use bcl_core::geometry::{DimensionTable, PriorMassProfile};
use bcl_core::verify::VerificationReport;

/// 17 significant digits; infinities and NaN spelled out.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn diagnostics_csv(dims: &DimensionTable, profile: &PriorMassProfile) -> String {
    let mut out = String::from("table,arg,value,extra\n");
    for (&x, &d) in dims.x_grid().iter().zip(dims.values()) {
        out.push_str(&format!("dimension,{},{},\n", fmt_real(x), fmt_real(d)));
    }
    for j in 0..=profile.j_max() {
        let beta = if j >= 3 {
            fmt_real(profile.beta(j).expect("beta defined for j >= 3"))
        } else {
            String::new()
        };
        out.push_str(&format!(
            "prior,{j},{},{beta}\n",
            fmt_real(profile.mass(j))
        ));
    }
    out
}

pub fn plan_csv(scenario: &str, plan: &ConcentrationPlan) -> String {
    let mut out = String::from("scenario,quantity,value\n");
    let mut push = |q: &str, v: String| {
        out.push_str(&format!("{scenario},{q},{v}\n"));
    };
    push("n", plan.n.to_string());
    if let Some(j1) = plan.j1 {
        push("j1", j1.to_string());
    }
    if let Some(j) = plan.j {
        push("j", j.to_string());
    }
    push("kappa", fmt_real(plan.kappa));
    if let Some(c) = plan.c {
        push("c", fmt_real(c));
    }
    if let Some(j2) = plan.j2_of_c {
        push("j2_of_c", j2.to_string());
    }
    if let Some(d) = plan.delta_constant {
        push("delta_constant", fmt_real(d));
    }
    if let Some(kn) = plan.kn {
        push("kn", fmt_real(kn));
    }
    if let Some(k) = plan.toy_k {
        push("toy_k", k.to_string());
    }
    for &(j, thr) in &plan.bound_curve {
        push(&format!("threshold_j{j}"), fmt_real(thr));
    }
    if let Some(outer) = plan.outer_bound {
        push("outer_bound", fmt_real(outer));
    }
    out
}

pub fn verification_csv(scenario: &str, reports: &[VerificationReport]) -> String {
    let mut out = String::from("scenario,statement_id,quantity,value,bound,slack,passed\n");
    for r in reports {
        let quantity = if r.vacuous {
            format!("{};vacuous", sanitize(&r.detail))
        } else {
            sanitize(&r.detail)
        };
        out.push_str(&format!(
            "{scenario},{},{quantity},{},{},{},{}\n",
            r.statement_id,
            fmt_real(r.empirical),
            fmt_real(r.bound),
            fmt_real(r.mc_slack),
            r.passed
        ));
    }
    out
}

fn sanitize(detail: &str) -> String {
    detail.replace(',', ";")
}

#[derive(serde::Serialize)]
pub struct JsonReport<'a> {
    pub scenario: &'a str,
    pub seed: u64,
    pub reports: &'a [VerificationReport],
}

pub fn verification_json(scenario: &str, seed: u64, reports: &[VerificationReport]) -> String {
    let mut s = serde_json::to_string_pretty(&JsonReport {
        scenario,
        seed,
        reports,
    })
    .expect("reports serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_formatting_round_trips() {
        for &x in &[
            0.0,
            1.0,
            -1.5,
            0.1,
            1.0986122886681098,
            f64::MIN_POSITIVE,
            1e300,
        ] {
            let s = fmt_real(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_real(f64::INFINITY), "inf");
        assert_eq!(fmt_real(f64::NAN), "nan");
    }

    #[test]
    fn detail_commas_never_break_columns() {
        assert_eq!(sanitize("a,b"), "a;b");
    }
}
