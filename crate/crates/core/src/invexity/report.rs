use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scheme::SampleScheme;
use crate::error::Result;
use crate::geometry::Point;

/// Maximum number of witnesses and inconclusive samples kept per report.
pub const MAX_WITNESSES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    HoldsOnSamples,
    Violated,
    Inconclusive,
}

/// Serde for reals that may be infinite or NaN; non-finite values become strings.
pub mod ext_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a real: {other}"))),
            },
        }
    }
}

/// A real that serializes through [`ext_f64`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Real(#[serde(with = "ext_f64")] pub f64);

/// One sample at which the checked inequality or membership failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub pair_index: usize,
    pub r1: Vec<f64>,
    pub s1: Vec<f64>,
    pub s: f64,
    #[serde(with = "ext_f64")]
    pub lhs: f64,
    #[serde(with = "ext_f64")]
    pub rhs: f64,
    #[serde(with = "ext_f64")]
    pub gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InconclusiveSample {
    pub pair_index: usize,
    pub r1: Vec<f64>,
    pub s1: Vec<f64>,
    pub s: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Premise {
    Held,
    Failed {
        reason: String,
    },
    /// Demonstration mode: the premise was evaluated but not enforced.
    NotEnforced {
        held: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub verdict: Verdict,
    pub n_evaluated: usize,
    pub n_skipped: usize,
    pub n_inconclusive: usize,
    pub n_violations: usize,
    #[serde(with = "ext_f64")]
    pub max_gap: f64,
    pub witnesses: Vec<Witness>,
    pub inconclusive: Vec<InconclusiveSample>,
    pub metrics: BTreeMap<String, Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premise: Option<Premise>,
    pub falsification: bool,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<CheckReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SampleScheme>,
}

impl CheckReport {
    pub fn empty(check: &str) -> Self {
        Self {
            check: check.to_string(),
            verdict: Verdict::HoldsOnSamples,
            n_evaluated: 0,
            n_skipped: 0,
            n_inconclusive: 0,
            n_violations: 0,
            max_gap: f64::NEG_INFINITY,
            witnesses: Vec::new(),
            inconclusive: Vec::new(),
            metrics: BTreeMap::new(),
            premise: None,
            falsification: false,
            notes: Vec::new(),
            parts: Vec::new(),
            scheme: None,
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::HoldsOnSamples
    }

    pub fn violated(&self) -> bool {
        self.verdict == Verdict::Violated
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).map(|r| r.0)
    }

    pub fn set_metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), Real(value));
    }

    /// Report for a theorem harness whose premise did not hold.
    pub fn premise_failed(check: &str, reason: String, parts: Vec<CheckReport>) -> Self {
        let mut r = Self::empty(check);
        r.verdict = Verdict::Inconclusive;
        r.premise = Some(Premise::Failed { reason });
        r.parts = parts;
        r
    }

    /// Any falsification event in this report or its parts.
    pub fn any_falsification(&self) -> bool {
        self.falsification || self.parts.iter().any(|p| p.any_falsification())
    }
}

/// One evaluated side-by-side comparison inside a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub violated: bool,
    pub label: Option<&'static str>,
}

impl Outcome {
    /// Outcome of `lhs ≤ rhs` with gap `lhs − rhs`, violated when the gap exceeds `tol`.
    pub fn at_most(lhs: f64, rhs: f64, tol: f64) -> Self {
        let gap = ext_sub(lhs, rhs);
        Self {
            lhs,
            rhs,
            gap,
            violated: gap > tol,
            label: None,
        }
    }

    pub fn labelled(mut self, label: &'static str) -> Self {
        self.label = Some(label);
        self
    }
}

/// `a − b` on the extended reals with `x − ∞ = −∞` and `∞ − ∞ = −∞` (nothing exceeds `+∞`).
pub fn ext_sub(a: f64, b: f64) -> f64 {
    if b == f64::INFINITY {
        f64::NEG_INFINITY
    } else {
        a - b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampleResult {
    /// The sample lies outside the quantified domain.
    Skipped,
    Inconclusive(String),
    Values(Vec<Outcome>),
}

/// A check that is a conjunction over sampled `(r₁, s₁, s)` triples.
pub trait SampledCheck: Sync {
    fn kind(&self) -> &'static str;

    /// Whether the `s` parameter grid is used; otherwise each pair is sampled once at `s = 0`.
    fn uses_grid(&self) -> bool {
        true
    }

    fn sample(&self, r1: &Point, s1: &Point, s: f64) -> Result<SampleResult>;
}

/// Evaluates `check` on every pair and grid value and reduces in sample order.
///
/// Pairs are processed in parallel; the reduction is by `(pair, s)` index so the
/// report does not depend on scheduling.
pub fn run_sampled<C: SampledCheck + ?Sized>(
    check: &C,
    pairs: &[(Point, Point)],
    grid: &[f64],
) -> Result<CheckReport> {
    let single = [0.0];
    let grid: &[f64] = if check.uses_grid() { grid } else { &single };
    let results: Vec<Vec<Result<SampleResult>>> = pairs
        .par_iter()
        .map(|(r1, s1)| grid.iter().map(|&s| check.sample(r1, s1, s)).collect())
        .collect();

    let mut report = CheckReport::empty(check.kind());
    for (i, (per_pair, (r1, s1))) in results.into_iter().zip(pairs).enumerate() {
        for (res, &s) in per_pair.into_iter().zip(grid) {
            match res? {
                SampleResult::Skipped => report.n_skipped += 1,
                SampleResult::Inconclusive(reason) => {
                    report.n_inconclusive += 1;
                    if report.inconclusive.len() < MAX_WITNESSES {
                        report.inconclusive.push(InconclusiveSample {
                            pair_index: i,
                            r1: r1.coords().to_vec(),
                            s1: s1.coords().to_vec(),
                            s,
                            reason,
                        });
                    }
                }
                SampleResult::Values(outcomes) => {
                    report.n_evaluated += 1;
                    for o in outcomes {
                        if o.gap > report.max_gap || report.max_gap.is_nan() {
                            report.max_gap = o.gap;
                        }
                        if let Some(label) = o.label {
                            let key = format!("max_gap_{label}");
                            let cur = report.metric(&key).unwrap_or(f64::NEG_INFINITY);
                            if o.gap > cur {
                                report.set_metric(&key, o.gap);
                            }
                        }
                        if o.violated {
                            report.n_violations += 1;
                            if report.witnesses.len() < MAX_WITNESSES {
                                report.witnesses.push(Witness {
                                    pair_index: i,
                                    r1: r1.coords().to_vec(),
                                    s1: s1.coords().to_vec(),
                                    s,
                                    lhs: o.lhs,
                                    rhs: o.rhs,
                                    gap: o.gap,
                                    label: o.label.map(str::to_string),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    report.verdict = if report.n_violations > 0 {
        Verdict::Violated
    } else if report.n_inconclusive > 0 {
        Verdict::Inconclusive
    } else {
        Verdict::HoldsOnSamples
    };
    if report.n_evaluated == 0 && report.n_inconclusive == 0 {
        report.notes.push("vacuous: no admissible samples".into());
    }
    Ok(report)
}
