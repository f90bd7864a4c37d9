//! Harnesses for the structural statements: each checks its premises on a
//! scheme, then its conclusion on the same scheme.
//!
//! A conclusion violated while every premise held is a falsification event.

use serde::{Deserialize, Serialize};

use super::checks::{
    check_condition_a, check_geodesic_invex_set, check_invex_function, check_preinvex, Setting,
};
use super::report::{CheckReport, Premise};
use super::scheme::SampleScheme;
use super::sets::SetPredicate;
use crate::error::Result;
use crate::maps::{FieldExpr, ScalarField};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarnessMode {
    /// Premises gate the conclusion; violations are falsification events.
    #[default]
    Enforce,
    /// The conclusion runs regardless of the premises and never falsifies.
    Demonstrate,
}

/// Combines premise reports and a conclusion into one harness report.
pub(crate) fn conclude<F>(
    name: &str,
    premises: Vec<(&str, CheckReport)>,
    mode: HarnessMode,
    conclusion: F,
) -> Result<CheckReport>
where
    F: FnOnce() -> Result<CheckReport>,
{
    let failed: Vec<String> = premises
        .iter()
        .filter(|(_, r)| !r.holds())
        .map(|(label, r)| format!("{label}: {:?}", r.verdict))
        .collect();
    let held = failed.is_empty();
    let parts: Vec<CheckReport> = premises.into_iter().map(|(_, r)| r).collect();
    if !held && mode == HarnessMode::Enforce {
        return Ok(CheckReport::premise_failed(name, failed.join("; "), parts));
    }
    let mut report = conclusion()?;
    let inner = std::mem::replace(&mut report.check, name.to_string());
    report
        .notes
        .push(format!("conclusion evaluated by {inner}"));
    report.parts = parts;
    report.premise = Some(match mode {
        HarnessMode::Enforce => Premise::Held,
        HarnessMode::Demonstrate => Premise::NotEnforced { held },
    });
    report.falsification = mode == HarnessMode::Enforce && report.violated();
    Ok(report)
}

/// Nonnegative combinations of preinvex fields are preinvex.
pub fn check_sum_preinvex(
    setting: &Setting,
    terms: &[(f64, ScalarField)],
    sch: &SampleScheme,
    mode: HarnessMode,
) -> Result<CheckReport> {
    let mut premises = Vec::with_capacity(terms.len());
    for (i, (w, h)) in terms.iter().enumerate() {
        if !(*w >= 0.0) {
            return Err(crate::error::Error::InvalidDescriptor(format!(
                "term {i} has negative weight {w}"
            )));
        }
        premises.push(("term preinvex", check_preinvex(setting, h, sch, false)?));
    }
    let sum = ScalarField::new(FieldExpr::WeightedSum(
        terms.iter().map(|(w, h)| (*w, h.expr.clone())).collect(),
    ));
    conclude("check_sum_preinvex", premises, mode, || {
        check_preinvex(setting, &sum, sch, false)
    })
}

/// Lower level sets of a preinvex field on a geodesic invex domain are geodesic invex.
pub fn check_level_set_invex(
    setting: &Setting,
    h: &ScalarField,
    level: f64,
    sch: &SampleScheme,
    mode: HarnessMode,
) -> Result<CheckReport> {
    let m = &setting.manifold;
    let premises = vec![
        (
            "domain geodesic invex",
            check_geodesic_invex_set(m, &setting.domain, &setting.maps, sch)?,
        ),
        ("field preinvex", check_preinvex(setting, h, sch, false)?),
    ];
    let level_set = SetPredicate::Intersection(vec![
        setting.domain.clone(),
        SetPredicate::sublevel(h.expr.clone(), level),
    ]);
    conclude("check_level_set_invex", premises, mode, || {
        check_geodesic_invex_set(m, &level_set, &setting.maps, sch)
    })
}

/// Differentiable preinvex fields are invex.
pub fn theorem_preinvex_implies_invex(
    setting: &Setting,
    h: &ScalarField,
    sch: &SampleScheme,
    mode: HarnessMode,
) -> Result<CheckReport> {
    let premises = vec![("field preinvex", check_preinvex(setting, h, sch, false)?)];
    conclude("theorem_preinvex_implies_invex", premises, mode, || {
        check_invex_function(setting, h, sch)
    })
}

/// Invex fields whose bi-map satisfies Condition A are preinvex.
pub fn theorem_invex_plus_a_implies_preinvex(
    setting: &Setting,
    h: &ScalarField,
    sch: &SampleScheme,
    mode: HarnessMode,
) -> Result<CheckReport> {
    let premises = vec![
        ("field invex", check_invex_function(setting, h, sch)?),
        (
            "condition A",
            check_condition_a(&setting.manifold, &setting.maps, sch)?,
        ),
    ];
    conclude(
        "theorem_invex_plus_a_implies_preinvex",
        premises,
        mode,
        || check_preinvex(setting, h, sch, false),
    )
}
