//! Sampling predicates for invex sets, preinvex and invex functions, Condition A,
//! and the theorem harnesses built on them.
//!
//! Verdicts are `HOLDS_ON_SAMPLES`, never a proof: the definitions quantify over
//! every point and sampling can only falsify.

pub mod checks;
pub mod degeneration;
pub mod report;
pub mod scheme;
pub mod sets;
pub mod theorems;

pub use checks::{
    check_condition_a, check_convex_function, check_convex_set, check_ef_convex_set,
    check_geodesic_invex_set, check_invex_function, check_invex_set_flat, check_preinvex, chord,
    MapTriple, Setting,
};
pub use degeneration::{check_degeneration, reports_agree};
pub use report::{CheckReport, Premise, Verdict, Witness};
pub use scheme::{SampleScheme, Sampler};
pub use sets::{SetDesc, SetPredicate};
pub use theorems::{
    check_level_set_invex, check_sum_preinvex, theorem_invex_plus_a_implies_preinvex,
    theorem_preinvex_implies_invex, HarnessMode,
};
