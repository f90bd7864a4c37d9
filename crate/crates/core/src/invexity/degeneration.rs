//! Coherence of the flat checkers with their degenerate classical forms.
//!
//! With `G(a, b) = a − b` the flat invex-set check must agree with the
//! directly coded `(E,F)`-convex-set check, and with identity maps both must
//! agree with classical convexity. The same holds for preinvexity versus
//! classical convexity of a function.

use super::checks::{
    check_convex_function, check_convex_set, check_ef_convex_set, check_invex_set_flat,
    check_preinvex, MapTriple, Setting,
};
use super::report::{CheckReport, Verdict, Witness};
use super::scheme::SampleScheme;
use super::sets::SetPredicate;
use crate::error::{Error, Result};
use crate::geometry::Manifold;
use crate::maps::{BiMap, ScalarField};

/// Relative agreement required between witness gaps computed by different
/// arithmetic for the same sample.
pub const GAP_AGREEMENT: f64 = 1e-12;

fn same_witness(a: &Witness, b: &Witness) -> bool {
    a.pair_index == b.pair_index
        && a.r1 == b.r1
        && a.s1 == b.s1
        && a.s == b.s
        && (a.gap - b.gap).abs() <= GAP_AGREEMENT * a.gap.abs().max(1.0)
}

/// Same verdict, same counters and witness-for-witness agreement.
pub fn reports_agree(a: &CheckReport, b: &CheckReport) -> bool {
    a.verdict == b.verdict
        && a.n_evaluated == b.n_evaluated
        && a.n_violations == b.n_violations
        && a.witnesses.len() == b.witnesses.len()
        && a.witnesses
            .iter()
            .zip(&b.witnesses)
            .all(|(x, y)| same_witness(x, y))
}

/// Runs every applicable degenerate pair and reports whether they agree.
///
/// The verdict is `HOLDS_ON_SAMPLES` when all compared reports agree and
/// `VIOLATED` otherwise; the compared reports are attached as parts.
pub fn check_degeneration(
    m: &Manifold,
    set: &SetPredicate,
    maps: &MapTriple,
    field: Option<&ScalarField>,
    sch: &SampleScheme,
) -> Result<CheckReport> {
    if maps.g != BiMap::EuclideanDifference {
        return Err(Error::InvalidDescriptor(
            "degeneration needs G = euclidean_difference".into(),
        ));
    }
    let identity = maps.e.is_identity() && maps.f.is_identity();
    let mut parts = vec![
        check_invex_set_flat(m, set, maps, sch)?,
        check_ef_convex_set(m, set, &maps.e, &maps.f, sch)?,
    ];
    let mut pairs = vec![(0, 1, "invex set vs (E,F)-convex set")];
    if identity {
        parts.push(check_convex_set(m, set, sch)?);
        pairs.push((0, 2, "invex set vs convex set"));
    }
    if let Some(h) = field {
        let setting = Setting::new(m.clone(), maps.clone()).with_domain(set.clone());
        let i = parts.len();
        parts.push(check_preinvex(&setting, h, sch, false)?);
        if identity {
            parts.push(check_convex_function(m, set, h, sch)?);
            pairs.push((i, i + 1, "preinvex vs convex function"));
        }
    }

    let mut report = CheckReport::empty("check_degeneration");
    let mut disagreements = 0usize;
    for &(a, b, what) in &pairs {
        if reports_agree(&parts[a], &parts[b]) {
            report.notes.push(format!("agree: {what}"));
        } else {
            disagreements += 1;
            report.notes.push(format!("disagree: {what}"));
        }
    }
    report.n_evaluated = pairs.len();
    report.n_violations = disagreements;
    report.set_metric("comparisons", pairs.len() as f64);
    report.set_metric("disagreements", disagreements as f64);
    if disagreements > 0 {
        report.verdict = Verdict::Violated;
    }
    report.parts = parts;
    report.scheme = Some(sch.clone());
    Ok(report)
}
