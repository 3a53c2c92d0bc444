//! The criterion engine: one checker per stability theorem or corollary.
//!
//! Every checker returns a [`Certificate`]; structural mismatches (wrong
//! equation form, non-constant coefficients where constants are required)
//! produce an inapplicable certificate rather than an error.

// Checkers bail out early with a finished inapplicable certificate.
#![allow(clippy::result_large_err)]

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::certificate::{Certificate, Exactness, NormReport, Relation};
use crate::eqspec::{
    ess_inf, ess_sup, lag_bounds, one_over_e_check, ratio_norm, sup_norm, CoefficientFn, DelayFn,
    EquationForm, EquationSpec, NormSettings, SpecError,
};
use crate::odebounds::{classify, lemma2_bounds, lemma7_bounds, lemma7_gate, DampingCase, OdeBounds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CriterionId {
    TheoremA,
    Theorem1,
    Corollary1,
    Theorem2,
    Corollary2,
    Corollary3,
    Theorem3,
    Theorem4,
    Corollary4,
    Corollary5,
    Theorem5,
    Corollary6,
    Theorem6,
    Corollary7,
}

impl CriterionId {
    /// Evaluation and report order.
    pub const ALL: [CriterionId; 14] = [
        CriterionId::TheoremA,
        CriterionId::Theorem1,
        CriterionId::Corollary1,
        CriterionId::Theorem2,
        CriterionId::Corollary2,
        CriterionId::Corollary3,
        CriterionId::Theorem3,
        CriterionId::Theorem4,
        CriterionId::Corollary4,
        CriterionId::Corollary5,
        CriterionId::Theorem5,
        CriterionId::Corollary6,
        CriterionId::Theorem6,
        CriterionId::Corollary7,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CriterionId::TheoremA => "ThmA",
            CriterionId::Theorem1 => "Thm1",
            CriterionId::Corollary1 => "Cor1",
            CriterionId::Theorem2 => "Thm2",
            CriterionId::Corollary2 => "Cor2",
            CriterionId::Corollary3 => "Cor3",
            CriterionId::Theorem3 => "Thm3",
            CriterionId::Theorem4 => "Thm4",
            CriterionId::Corollary4 => "Cor4",
            CriterionId::Corollary5 => "Cor5",
            CriterionId::Theorem5 => "Thm5",
            CriterionId::Corollary6 => "Cor6",
            CriterionId::Theorem6 => "Thm6",
            CriterionId::Corollary7 => "Cor7",
        }
    }

    /// The equation form the criterion is stated for.
    pub fn form(self) -> EquationForm {
        use CriterionId::*;
        match self {
            TheoremA | Theorem2 | Corollary2 | Corollary3 | Theorem3 | Theorem5 | Corollary6 => {
                EquationForm::PureDelay
            }
            Theorem1 | Corollary1 | Theorem4 | Corollary4 | Corollary5 | Theorem6 | Corollary7 => {
                EquationForm::Mixed
            }
        }
    }

    pub fn check(self, an: &Analysis) -> Certificate {
        use CriterionId::*;
        match self {
            TheoremA => check_theorem_a(an),
            Theorem1 => check_theorem_1(an),
            Corollary1 => check_corollary_1(an),
            Theorem2 => check_theorem_2(an),
            Corollary2 => check_corollary_2(an),
            Corollary3 => check_corollary_3(an),
            Theorem3 => check_theorem_3(an),
            Theorem4 => check_theorem_4(an),
            Corollary4 => check_corollary_4(an),
            Corollary5 => check_corollary_5(an),
            Theorem5 => check_theorem_5(an),
            Corollary6 => check_corollary_6(an),
            Theorem6 => check_theorem_6(an),
            Corollary7 => check_corollary_7(an),
        }
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CriterionId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CriterionId::ALL
            .iter()
            .copied()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                let known: Vec<&str> = CriterionId::ALL.iter().map(|c| c.as_str()).collect();
                format!("unknown criterion `{s}` (known: {})", known.join(", "))
            })
    }
}

impl Serialize for CriterionId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// Certified `Y`, `Y'` of the comparison equation, or why there are none.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub bounds: Option<OdeBounds>,
    pub prerequisites: Vec<Certificate>,
    pub reason: String,
}

/// A spec with its resolved sampling settings and comparison bounds, shared by
/// all checkers.
#[derive(Debug, Clone)]
pub struct Analysis<'a> {
    pub spec: &'a EquationSpec,
    pub settings: NormSettings,
    pub comparison: Comparison,
}

impl<'a> Analysis<'a> {
    pub fn new(spec: &'a EquationSpec) -> Result<Self, SpecError> {
        Self::with_settings(spec, NormSettings::resolve(spec)?)
    }

    pub fn with_settings(spec: &'a EquationSpec, settings: NormSettings) -> Result<Self, SpecError> {
        let comparison = comparison_bounds(spec, &settings)?;
        Ok(Analysis {
            spec,
            settings,
            comparison,
        })
    }

    fn norm(&self, f: &CoefficientFn, name: &str, from: f64) -> Result<NormReport, SpecError> {
        sup_norm(f, name, from, self.settings.window, self.settings.grid)
    }

    fn inf(&self, f: &CoefficientFn, name: &str, from: f64) -> Result<NormReport, SpecError> {
        ess_inf(f, name, from, self.settings.window, self.settings.grid)
    }

    fn ratio(&self, num: &CoefficientFn, den: &CoefficientFn, name: &str, from: f64) -> Result<NormReport, SpecError> {
        ratio_norm(num, den, name, from, self.settings.window, self.settings.grid)
    }

    fn lag(&self, d: &DelayFn, name: &str) -> Result<NormReport, SpecError> {
        let mut r = lag_bounds(d, self.spec.t0, self.settings.window, self.settings.grid)?;
        r.quantity = name.into();
        Ok(r)
    }

    fn lemma6(&self) -> Certificate {
        one_over_e_check(&self.spec.a, &self.spec.g, self.spec.t0, self.settings.window, self.settings.grid)
    }

    fn lemma7(&self) -> Result<Certificate, SpecError> {
        lemma7_gate(self.spec, &self.settings, self.spec.t0)
    }
}

/// Lemma 2 closed forms for constant `a, b > 0`; otherwise the `(inf a)² ≥ 4 sup b`
/// route, which certifies `Y` only.
pub fn comparison_bounds(spec: &EquationSpec, settings: &NormSettings) -> Result<Comparison, SpecError> {
    if let (Some(a), Some(b)) = (spec.a.as_constant(), spec.b.as_constant()) {
        return Ok(match lemma2_bounds(a, b) {
            Ok(bounds) => Comparison {
                reason: format!("constant comparison coefficients, {:?} case", bounds.case),
                bounds: Some(bounds),
                prerequisites: vec![],
            },
            Err(e) => Comparison {
                bounds: None,
                prerequisites: vec![],
                reason: e.to_string(),
            },
        });
    }
    let gate = lemma7_gate(spec, settings, spec.t0)?;
    Ok(match lemma7_bounds(&gate) {
        Some(bounds) => Comparison {
            bounds: Some(bounds),
            prerequisites: vec![gate],
            reason: "time-varying comparison coefficients with a positive kernel".into(),
        },
        None => Comparison {
            bounds: None,
            prerequisites: vec![gate],
            reason: "no certified comparison bound: coefficients are not constant and (inf a)² ≥ 4 sup b fails".into(),
        },
    })
}

type Outcome = Result<Certificate, Certificate>;

fn id(c: CriterionId) -> &'static str {
    c.as_str()
}

fn spec_err(c: CriterionId) -> impl Fn(SpecError) -> Certificate {
    move |e| Certificate::inapplicable(id(c), format!("norm evaluation failed: {e}"))
}

fn require_form(an: &Analysis, c: CriterionId) -> Result<(), Certificate> {
    if an.spec.form != c.form() {
        return Err(Certificate::inapplicable(
            id(c),
            format!("stated for form {}, spec is {}", c.form().as_str(), an.spec.form.as_str()),
        ));
    }
    Ok(())
}

fn require_bounds<'b>(an: &'b Analysis, c: CriterionId) -> Result<&'b OdeBounds, Certificate> {
    an.comparison.bounds.as_ref().ok_or_else(|| {
        let mut cert = Certificate::inapplicable(id(c), an.comparison.reason.clone());
        cert.prerequisites = an.comparison.prerequisites.clone();
        cert
    })
}

fn require_constants(an: &Analysis, c: CriterionId) -> Result<(f64, f64), Certificate> {
    match (an.spec.a.as_constant(), an.spec.b.as_constant()) {
        (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Ok((a, b)),
        (Some(_), Some(_)) => Err(Certificate::inapplicable(id(c), "requires constant a > 0, b > 0")),
        _ => Err(Certificate::inapplicable(id(c), "requires constant a and b")),
    }
}

fn require_positive_inf_a(an: &Analysis, c: CriterionId) -> Result<NormReport, Certificate> {
    let r = an.inf(&an.spec.a, "inf a", an.spec.t0).map_err(spec_err(c))?;
    if r.value > 0.0 {
        Ok(r)
    } else {
        let mut cert = Certificate::inapplicable(id(c), format!("requires inf a > 0, got {}", r.value));
        cert.inputs = vec![r];
        Err(cert)
    }
}

fn discriminant_gate(c: CriterionId, a: f64, b: f64) -> Certificate {
    let case = classify(a, b);
    let mut cert = Certificate::evaluate(
        format!("{}.a²≥4b", id(c)),
        4.0 * b,
        a * a,
        Relation::LessEq,
        vec![NormReport::exact("a", a), NormReport::exact("b", b)],
        vec![],
        format!("discriminant: 4b = {} vs a² = {}", 4.0 * b, a * a),
    );
    // the tie band counts as a² = 4b
    if case == DampingCase::Critical {
        cert.satisfied = true;
        cert.margin = 0.0;
    }
    cert
}

fn strict_gate(name: String, lhs: f64, rhs: f64, inputs: Vec<NormReport>, narrative: String) -> Certificate {
    Certificate::evaluate(name, lhs, rhs, Relation::Less, inputs, vec![], narrative)
}

fn finish(o: Outcome) -> Certificate {
    o.unwrap_or_else(|c| c)
}

/// Theorem A: `max(δ, τ) < 1 / (a²Y' + abY + bY')` for the pure-delay form,
/// where `a` (resp. `b`) is zeroed when its delay is the identity.
pub fn check_theorem_a(an: &Analysis) -> Certificate {
    finish((|| -> Outcome {
        let c = CriterionId::TheoremA;
        require_form(an, c)?;
        let bounds = require_bounds(an, c)?;
        let yp = bounds.yp.ok_or_else(|| {
            Certificate::inapplicable(id(c), "inapplicable: no certified Y' (time-varying comparison coefficients)")
        })?;
        let t0 = an.spec.t0;
        let inf_a = an.inf(&an.spec.a, "inf a", t0).map_err(spec_err(c))?;
        let inf_b = an.inf(&an.spec.b, "inf b", t0).map_err(spec_err(c))?;
        if inf_a.value < 0.0 || inf_b.value < 0.0 {
            return Err(Certificate::inapplicable(id(c), "requires a(t) ≥ 0 and b(t) ≥ 0"));
        }
        let w = (an.settings.window, an.settings.grid);
        let a_bar = if an.spec.g.is_identity() {
            NormReport::exact("a (g ≡ t)", 0.0)
        } else {
            ess_sup(&an.spec.a, "sup a", t0, w.0, w.1).map_err(spec_err(c))?
        };
        // Expanding ẋ(t) - ẋ(g(t)) through the equation brings in b·x(h) even
        // when h ≡ t, so the cross term keeps sup b; only the bY' term drops it.
        let sup_b = ess_sup(&an.spec.b, "sup b", t0, w.0, w.1).map_err(spec_err(c))?;
        let b_bar = if an.spec.h.is_identity() {
            NormReport::exact("b (h ≡ t)", 0.0)
        } else {
            sup_b.clone()
        };
        let delta = an.lag(&an.spec.g, "δ").map_err(spec_err(c))?;
        let tau = an.lag(&an.spec.h, "τ").map_err(spec_err(c))?;
        let (a, b, b_cross, y) = (a_bar.value, b_bar.value, sup_b.value, bounds.y);
        let lhs = delta.value.max(tau.value);
        let denom = a * a * yp + a * b_cross * y + b * yp;
        let rhs = if denom == 0.0 { f64::INFINITY } else { 1.0 / denom };
        let mut inputs = vec![a_bar, b_bar, sup_b, delta, tau, inf_a, inf_b];
        inputs.extend(bounds.reports());
        Ok(Certificate::evaluate(
            id(c),
            lhs,
            rhs,
            Relation::Less,
            inputs,
            an.comparison.prerequisites.clone(),
            format!(
                "max(δ, τ) = {lhs} vs 1/(a²Y' + a·sup b·Y + bY') with a = {a}, b = {b}, sup b = {b_cross}, Y = {y}, Y' = {yp}"
            ),
        ))
    })())
}

/// Theorem 1: `‖a1‖Y' + ‖b1‖Y < 1` for the mixed form.
pub fn check_theorem_1(an: &Analysis) -> Certificate {
    finish((|| -> Outcome {
        let c = CriterionId::Theorem1;
        require_form(an, c)?;
        let bounds = require_bounds(an, c)?;
        let t0 = an.spec.t0;
        let a1 = an.norm(&an.spec.a1_or_zero(), "‖a1‖", t0).map_err(spec_err(c))?;
        let b1 = an.norm(&an.spec.b1_or_zero(), "‖b1‖", t0).map_err(spec_err(c))?;
        let y = bounds.y;
        let lhs = if an.spec.a1_vanishes() {
            b1.value * y
        } else {
            let yp = bounds.yp.ok_or_else(|| {
                Certificate::inapplicable(id(c), "inapplicable: no certified Y' and a1 ≢ 0")
            })?;
            a1.value * yp + b1.value * y
        };
        let mut inputs = vec![a1, b1];
        inputs.extend(bounds.reports());
        Ok(Certificate::evaluate(
            id(c),
            lhs,
            1.0,
            Relation::Less,
            inputs,
            an.comparison.prerequisites.clone(),
            format!("‖a1‖Y' + ‖b1‖Y = {lhs} vs 1 ({})", bounds.provenance),
        ))
    })())
}

/// Corollary 1: Theorem 1 with the closed-form bounds, dispatched on the
/// discriminant of constant `a, b`.
pub fn check_corollary_1(an: &Analysis) -> Certificate {
    finish((|| -> Outcome {
        let c = CriterionId::Corollary1;
        require_form(an, c)?;
        let (a, b) = require_constants(an, c)?;
        let bounds = lemma2_bounds(a, b).map_err(|e| Certificate::inapplicable(id(c), e.to_string()))?;
        let yp = bounds.yp.expect("closed-form bounds carry Y'");
        let t0 = an.spec.t0;
        let a1 = an.norm(&an.spec.a1_or_zero(), "‖a1‖", t0).map_err(spec_err(c))?;
        let b1 = an.norm(&an.spec.b1_or_zero(), "‖b1‖", t0).map_err(spec_err(c))?;
        let lhs = a1.value * yp + b1.value * bounds.y;
        let case = match bounds.case {
            DampingCase::Overdamped => "case a² > 4b: 2a/(√(a²−4b)(a−√(a²−4b)))‖a1‖ + (1/b)‖b1‖",
            DampingCase::Underdamped => "case a² < 4b: 2(a+√(4b−a²))/(a√(4b−a²))‖a1‖ + 4/(a√(4b−a²))‖b1‖",
            _ => "case a² = 4b: (2/√b)‖a1‖ + (1/b)‖b1‖",
        };
        let mut inputs = vec![NormReport::exact("a", a), NormReport::exact("b", b), a1, b1];
        inputs.extend(bounds.reports());
        Ok(Certificate::evaluate(
            id(c),
            lhs,
            1.0,
            Relation::Less,
            inputs,
            vec![],
            format!("{case} = {lhs} vs 1"),
        ))
    })())
}

/// Theorem 2: `Y[δ‖a‖(‖a‖‖b/a‖ + ‖b‖) + τ‖b‖‖b/a‖] < 1`, norms from `t0 + δ`,
/// given a positive fundamental function of `x' + a(t)x(g(t)) = 0`.
pub fn check_theorem_2(an: &Analysis) -> Certificate {
    finish((|| -> Outcome {
        let c = CriterionId::Theorem2;
        require_form(an, c)?;
        let bounds = require_bounds(an, c)?;
        let inf_a = require_positive_inf_a(an, c)?;
        let delta = an.lag(&an.spec.g, "δ").map_err(spec_err(c))?;
        let tau = an.lag(&an.spec.h, "τ").map_err(spec_err(c))?;
        let t1 = an.spec.t0 + delta.value;
        let (sa, sb) = (&an.spec.a, &an.spec.b);
        let na = an.norm(sa, "‖a‖", t1).map_err(spec_err(c))?;
        let nb = an.norm(sb, "‖b‖", t1).map_err(spec_err(c))?;
        let nba = an.ratio(sb, sa, "‖b/a‖", t1).map_err(spec_err(c))?;
        let (d, t, a, b, ba, y) = (delta.value, tau.value, na.value, nb.value, nba.value, bounds.y);
        let lhs = y * (d * a * (a * ba + b) + t * b * ba);
        let mut prereqs = an.comparison.prerequisites.clone();
        prereqs.push(an.lemma6());
        let mut inputs = vec![delta, tau, na, nb, nba, inf_a];
        inputs.extend(bounds.reports());
        Ok(Certificate::evaluate(
            id(c),
            lhs,
            1.0,
            Relation::Less,
            inputs,
            prereqs,
            format!("Y[δ‖a‖(‖a‖‖b/a‖+‖b‖) + τ‖b‖‖b/a‖] = {lhs} vs 1, norms from t1 = {t1}"),
        ))
    })())
}

/// Corollary 2: constant `a, b`; `aδ ≤ 1/e` and either `2δa + τb/a < 1`
/// (`a² ≥ 4b`) or `2δab + τb²/a < a√(4b−a²)/4` (`a² < 4b`).
pub fn check_corollary_2(an: &Analysis) -> Certificate {
    finish((|| -> Outcome {
        let c = CriterionId::Corollary2;
        require_form(an, c)?;
        let (a, b) = require_constants(an, c)?;
        let delta = an.lag(&an.spec.g, "δ").map_err(spec_err(c))?;
        let tau = an.lag(&an.spec.h, "τ").map_err(spec_err(c))?;
        let (d, t) = (delta.value, tau.value);
        let (lhs, rhs, case) = match classify(a, b) {
            DampingCase::Underdamped => (
                2.0 * d * a * b + t * b * b / a,
                a * (4.0 * b - a * a).sqrt() / 4.0,
                "case a² < 4b: 2δab + τb²/a < a√(4b−a²)/4",
            ),
            _ => (2.0 * d * a + t * b / a, 1.0, "case a² ≥ 4b: 2δa + τb/a < 1"),
        };
        Ok(Certificate::evaluate(
            id(c),
            lhs,
            rhs,
            Relation::Less,
            vec![NormReport::exact("a", a), NormReport::exact("b", b), delta, tau],
            vec![an.lemma6()],
            format!("{case}: {lhs} vs {rhs}"),
        ))
    })())
}

/// Corollary 3: `g ≡ t`, `a² ≥ 4b`, `τb < a`.
pub fn check_corollary_3(an: &Analysis) -> Certificate {
    finish((|| -> Outcome {
        let c = CriterionId::Corollary3;
        require_form(an, c)?;
        if !an.spec.g.is_identity() {
            return Err(Certificate::inapplicable(id(c), "requires g(t) ≡ t"));
        }
        let (a, b) = require_constants(an, c)?;
        let tau = an.lag(&an.spec.h, "τ").map_err(spec_err(c))?;
        let lhs = tau.value * b;
        Ok(Certificate::evaluate(
            id(c),
            lhs,
            a,
            Relation::Less,
            vec![NormReport::exact("a", a), NormReport::exact("b", b), tau],
            vec![discriminant_gate(c, a, b)],
            format!("τb = {lhs} vs a = {a}"),
        ))
    })())
}

/// Theorem 3: `δ‖a‖ < 1` and
/// `Y[(δ‖a‖² + τ‖b‖)(‖b/a‖ + δ‖b‖)/(1 − δ‖a‖) + δ‖b‖] < 1`.
pub fn check_theorem_3(an: &Analysis) -> Certificate {
    finish((|| -> Outcome {
        let c = CriterionId::Theorem3;
        require_form(an, c)?;
        let bounds = require_bounds(an, c)?;
        let inf_a = require_positive_inf_a(an, c)?;
        let t0 = an.spec.t0;
        let delta = an.lag(&an.spec.g, "δ").map_err(spec_err(c))?;
        let tau = an.lag(&an.spec.h, "τ").map_err(spec_err(c))?;
        let (sa, sb) = (&an.spec.a, &an.spec.b);
        let na = an.norm(sa, "‖a‖", t0).map_err(spec_err(c))?;
        let nb = an.norm(sb, "‖b‖", t0).map_err(spec_err(c))?;
        let nba = an.ratio(sb, sa, "‖b/a‖", t0).map_err(spec_err(c))?;
        let (d, t, a, b, ba, y) = (delta.value, tau.value, na.value, nb.value, nba.value, bounds.y);
        let gate = strict_gate(
            format!("{}.δ‖a‖<1", id(c)),
            d * a,
            1.0,
            vec![delta.clone(), na.clone()],
            format!("δ‖a‖ = {}", d * a),
        );
        let lhs = if d * a < 1.0 {
            y * ((d * a * a + t * b) * (ba + d * b) / (1.0 - d * a) + d * b)
        } else {
            f64::INFINITY
        };
        let mut prereqs = an.comparison.prerequisites.clone();
        prereqs.push(gate);
        let mut inputs = vec![delta, tau, na, nb, nba, inf_a];
        inputs.extend(bounds.reports());
        Ok(Certificate::evaluate(
            id(c),
            lhs,
            1.0,
            Relation::Less,
            inputs,
            prereqs,
            format!("Y[(δ‖a‖²+τ‖b‖)(‖b/a‖+δ‖b‖)/(1−δ‖a‖) + δ‖b‖] = {lhs} vs 1"),
        ))
    })())
}

/// Theorem 4: `‖a1/a‖ < 1` and `Y[‖a1‖(‖b/a‖ + ‖b1/a‖)/(1 − ‖a1/a‖) + ‖b1‖] < 1`.
pub fn check_theorem_4(an: &Analysis) -> Certificate {
    finish((|| -> Outcome {
        let c = CriterionId::Theorem4;
        require_form(an, c)?;
        let bounds = require_bounds(an, c)?;
        let inf_a = require_positive_inf_a(an, c)?;
        let t0 = an.spec.t0;
        let (sa, sb, sa1, sb1) = (&an.spec.a, &an.spec.b, an.spec.a1_or_zero(), an.spec.b1_or_zero());
        let na1 = an.norm(&sa1, "‖a1‖", t0).map_err(spec_err(c))?;
        let nb1 = an.norm(&sb1, "‖b1‖", t0).map_err(spec_err(c))?;
        let nba = an.ratio(sb, sa, "‖b/a‖", t0).map_err(spec_err(c))?;
        let nb1a = an.ratio(&sb1, sa, "‖b1/a‖", t0).map_err(spec_err(c))?;
        let na1a = an.ratio(&sa1, sa, "‖a1/a‖", t0).map_err(spec_err(c))?;
        let (a1, b1, ba, b1a, a1a, y) = (na1.value, nb1.value, nba.value, nb1a.value, na1a.value, bounds.y);
        let gate = strict_gate(
            format!("{}.‖a1/a‖<1", id(c)),
            a1a,
            1.0,
            vec![na1a.clone()],
            format!("‖a1/a‖ = {a1a}"),
        );
        let lhs = if a1a < 1.0 {
            y * (a1 * (ba + b1a) / (1.0 - a1a) + b1)
        } else {
            f64::INFINITY
        };
        let mut prereqs = an.comparison.prerequisites.clone();
        prereqs.push(gate);
        let mut inputs = vec![na1, nb1, nba, nb1a, na1a, inf_a];
        inputs.extend(bounds.reports());
        Ok(Certificate::evaluate(
            id(c),
            lhs,
            1.0,
            Relation::Less,
            inputs,
            prereqs,
            format!("Y[‖a1‖(‖b/a‖+‖b1/a‖)/(1−‖a1/a‖) + ‖b1‖] = {lhs} vs 1"),
        ))
    })())
}

/// Corollary 4: constant `a, b` with `a² ≥ 4b`, `a > ‖a1‖` and
/// `‖a1‖(b + ‖b1‖) < (a − ‖a1‖)(b − ‖b1‖)`.
pub fn check_corollary_4(an: &Analysis) -> Certificate {
    finish((|| -> Outcome {
        let c = CriterionId::Corollary4;
        require_form(an, c)?;
        let (a, b) = require_constants(an, c)?;
        let t0 = an.spec.t0;
        let na1 = an.norm(&an.spec.a1_or_zero(), "‖a1‖", t0).map_err(spec_err(c))?;
        let nb1 = an.norm(&an.spec.b1_or_zero(), "‖b1‖", t0).map_err(spec_err(c))?;
        let (a1, b1) = (na1.value, nb1.value);
        let gate = strict_gate(
            format!("{}.‖a1‖<a", id(c)),
            a1,
            a,
            vec![na1.clone()],
            format!("‖a1‖ = {a1} vs a = {a}"),
        );
        let lhs = a1 * (b + b1);
        let rhs = (a - a1) * (b - b1);
        Ok(Certificate::evaluate(
            id(c),
            lhs,
            rhs,
            Relation::Less,
            vec![NormReport::exact("a", a), NormReport::exact("b", b), na1, nb1],
            vec![discriminant_gate(c, a, b), gate],
            format!("‖a1‖(b+‖b1‖) = {lhs} vs (a−‖a1‖)(b−‖b1‖) = {rhs}"),
        ))
    })())
}

/// Corollary 5: `a1 ≡ 0`, constant `a, b` with `a² ≥ 4b`, `‖b1‖ < b`.
pub fn check_corollary_5(an: &Analysis) -> Certificate {
    finish((|| -> Outcome {
        let c = CriterionId::Corollary5;
        require_form(an, c)?;
        if !an.spec.a1_vanishes() {
            return Err(Certificate::inapplicable(id(c), "requires a1(t) ≡ 0"));
        }
        let (a, b) = require_constants(an, c)?;
        let nb1 = an.norm(&an.spec.b1_or_zero(), "‖b1‖", an.spec.t0).map_err(spec_err(c))?;
        let lhs = nb1.value;
        Ok(Certificate::evaluate(
            id(c),
            lhs,
            b,
            Relation::Less,
            vec![NormReport::exact("a", a), NormReport::exact("b", b), nb1],
            vec![discriminant_gate(c, a, b)],
            format!("‖b1‖ = {lhs} vs b = {b}"),
        ))
    })())
}

/// Theorem 5: under `(inf a)² ≥ 4 sup b` and `∫_{g(t)}^t a ≤ 1/e`,
/// `δ‖a/b‖(‖a‖‖b/a‖ + ‖b‖) + τ‖b/a‖ < 1`, norms from `t0 + δ`.
pub fn check_theorem_5(an: &Analysis) -> Certificate {
    finish((|| -> Outcome {
        let c = CriterionId::Theorem5;
        require_form(an, c)?;
        let gate = an.lemma7().map_err(spec_err(c))?;
        let delta = an.lag(&an.spec.g, "δ").map_err(spec_err(c))?;
        let tau = an.lag(&an.spec.h, "τ").map_err(spec_err(c))?;
        let t1 = an.spec.t0 + delta.value;
        let (sa, sb) = (&an.spec.a, &an.spec.b);
        let nab = an.ratio(sa, sb, "‖a/b‖", t1).map_err(spec_err(c))?;
        let na = an.norm(sa, "‖a‖", t1).map_err(spec_err(c))?;
        let nba = an.ratio(sb, sa, "‖b/a‖", t1).map_err(spec_err(c))?;
        let nb = an.norm(sb, "‖b‖", t1).map_err(spec_err(c))?;
        let (d, t) = (delta.value, tau.value);
        let lhs = d * nab.value * (na.value * nba.value + nb.value) + t * nba.value;
        Ok(Certificate::evaluate(
            id(c),
            lhs,
            1.0,
            Relation::Less,
            vec![delta, tau, nab, na, nba, nb],
            vec![gate, an.lemma6()],
            format!("δ‖a/b‖(‖a‖‖b/a‖+‖b‖) + τ‖b/a‖ = {lhs} vs 1, norms from t1 = {t1}"),
        ))
    })())
}

/// Corollary 6: `g ≡ t`, `(inf a)² ≥ 4 sup b`, `τ‖b/a‖ < 1`.
pub fn check_corollary_6(an: &Analysis) -> Certificate {
    finish((|| -> Outcome {
        let c = CriterionId::Corollary6;
        require_form(an, c)?;
        if !an.spec.g.is_identity() {
            return Err(Certificate::inapplicable(id(c), "requires g(t) ≡ t"));
        }
        let gate = an.lemma7().map_err(spec_err(c))?;
        let tau = an.lag(&an.spec.h, "τ").map_err(spec_err(c))?;
        let nba = an.ratio(&an.spec.b, &an.spec.a, "‖b/a‖", an.spec.t0).map_err(spec_err(c))?;
        let lhs = tau.value * nba.value;
        Ok(Certificate::evaluate(
            id(c),
            lhs,
            1.0,
            Relation::Less,
            vec![tau, nba],
            vec![gate],
            format!("τ‖b/a‖ = {lhs} vs 1"),
        ))
    })())
}

/// Theorem 6: under `(inf a)² ≥ 4 sup b` and `‖a1/a‖ < 1`,
/// `‖a1/b‖(‖b/a‖ + ‖b1/a‖)/(1 − ‖a1/a‖) + ‖b1/b‖ < 1`.
pub fn check_theorem_6(an: &Analysis) -> Certificate {
    finish((|| -> Outcome {
        let c = CriterionId::Theorem6;
        require_form(an, c)?;
        let gate = an.lemma7().map_err(spec_err(c))?;
        let t0 = an.spec.t0;
        let (sa, sb, sa1, sb1) = (&an.spec.a, &an.spec.b, an.spec.a1_or_zero(), an.spec.b1_or_zero());
        let na1b = an.ratio(&sa1, sb, "‖a1/b‖", t0).map_err(spec_err(c))?;
        let nba = an.ratio(sb, sa, "‖b/a‖", t0).map_err(spec_err(c))?;
        let nb1a = an.ratio(&sb1, sa, "‖b1/a‖", t0).map_err(spec_err(c))?;
        let na1a = an.ratio(&sa1, sa, "‖a1/a‖", t0).map_err(spec_err(c))?;
        let nb1b = an.ratio(&sb1, sb, "‖b1/b‖", t0).map_err(spec_err(c))?;
        let a1a = na1a.value;
        let ratio_gate = strict_gate(
            format!("{}.‖a1/a‖<1", id(c)),
            a1a,
            1.0,
            vec![na1a.clone()],
            format!("‖a1/a‖ = {a1a}"),
        );
        let lhs = if a1a < 1.0 {
            na1b.value * (nba.value + nb1a.value) / (1.0 - a1a) + nb1b.value
        } else {
            f64::INFINITY
        };
        Ok(Certificate::evaluate(
            id(c),
            lhs,
            1.0,
            Relation::Less,
            vec![na1b, nba, nb1a, na1a, nb1b],
            vec![gate, ratio_gate],
            format!("‖a1/b‖(‖b/a‖+‖b1/a‖)/(1−‖a1/a‖) + ‖b1/b‖ = {lhs} vs 1"),
        ))
    })())
}

/// Corollary 7: `a1 ≡ 0`, `(inf a)² ≥ 4 sup b`, `‖b1/b‖ < 1`.
pub fn check_corollary_7(an: &Analysis) -> Certificate {
    finish((|| -> Outcome {
        let c = CriterionId::Corollary7;
        require_form(an, c)?;
        if !an.spec.a1_vanishes() {
            return Err(Certificate::inapplicable(id(c), "requires a1(t) ≡ 0"));
        }
        let gate = an.lemma7().map_err(spec_err(c))?;
        let nb1b = an
            .ratio(&an.spec.b1_or_zero(), &an.spec.b, "‖b1/b‖", an.spec.t0)
            .map_err(spec_err(c))?;
        let lhs = nb1b.value;
        Ok(Certificate::evaluate(
            id(c),
            lhs,
            1.0,
            Relation::Less,
            vec![nb1b],
            vec![gate],
            format!("‖b1/b‖ = {lhs} vs 1"),
        ))
    })())
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub certified: bool,
    pub verdict: &'static str,
    pub satisfied: Vec<String>,
    pub best_criterion: Option<String>,
    /// `None` with `best_margin_unbounded` set when the best margin is infinite.
    pub best_margin: Option<f64>,
    pub best_margin_unbounded: bool,
    /// False when the best certificate rests on sampled norms only.
    pub rigorous: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub certificates: Vec<Certificate>,
    pub summary: Summary,
}

/// Run every checker (or the filtered subset) in the fixed order.
pub fn check_all(an: &Analysis, filter: Option<&[CriterionId]>) -> CheckReport {
    let certificates: Vec<Certificate> = CriterionId::ALL
        .iter()
        .filter(|c| filter.is_none_or(|f| f.contains(c)))
        .map(|c| c.check(an))
        .collect();
    let summary = summarize(&certificates);
    CheckReport { certificates, summary }
}

pub fn summarize(certificates: &[Certificate]) -> Summary {
    let satisfied: Vec<&Certificate> = certificates.iter().filter(|c| c.satisfied).collect();
    let best = satisfied
        .iter()
        .copied()
        .max_by(|x, y| x.margin.partial_cmp(&y.margin).unwrap_or(std::cmp::Ordering::Equal));
    let certified = best.is_some();
    Summary {
        certified,
        verdict: if certified { "certified stable" } else { "not certified" },
        satisfied: satisfied.iter().map(|c| c.criterion_id.clone()).collect(),
        best_criterion: best.map(|c| c.criterion_id.clone()),
        best_margin: best.and_then(|c| c.margin.is_finite().then_some(c.margin)),
        best_margin_unbounded: best.is_some_and(|c| c.margin == f64::INFINITY),
        rigorous: best.is_some_and(|c| c.exactness == Exactness::Exact),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pure(a: f64, b: f64, delta: f64, tau: f64) -> EquationSpec {
        EquationSpec::constant_pure(a, b, delta, tau).unwrap()
    }

    fn mixed(a: f64, b: f64, a1: f64, b1: f64) -> EquationSpec {
        EquationSpec::constant_mixed(a, b, a1, b1, 0.1, 0.2).unwrap()
    }

    fn run(spec: &EquationSpec, c: CriterionId) -> Certificate {
        c.check(&Analysis::new(spec).unwrap())
    }

    fn close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol
    }

    #[test]
    fn theorem_a_examples() {
        let s = EquationSpec::pure_delay(
            CoefficientFn::constant(3.0),
            CoefficientFn::constant(2.0),
            DelayFn::identity(),
            DelayFn::constant_lag(0.1).unwrap(),
        );
        let c = run(&s, CriterionId::TheoremA);
        assert!(c.satisfied);
        assert!(close(c.rhs, 1.0 / 6.0, 1e-15));

        let c = run(&pure(3.0, 2.0, 0.0, 0.0), CriterionId::TheoremA);
        assert!(c.satisfied && c.unbounded_rhs);
        assert_eq!(c.margin, f64::INFINITY);

        let c = run(&pure(3.0, 2.0, 0.2, 0.2), CriterionId::TheoremA);
        assert!(c.applicable && !c.satisfied);
        assert!(close(c.rhs, 1.0 / 36.0, 1e-15));
        assert_eq!(c.lhs, 0.2);
    }

    #[test]
    fn theorem_a_keeps_b_in_cross_term_without_position_lag() {
        // ẍ + 3ẋ(t - δ) + 2x = 0: denominator 9·3 + 3·2·0.5 = 30, not 27
        let c = run(&pure(3.0, 2.0, 0.01, 0.0), CriterionId::TheoremA);
        assert!(close(c.rhs, 1.0 / 30.0, 1e-15));
        // lightly damped case with a characteristic root at ≈ 0.0043 + 1.694i
        let c = run(&pure(0.23237247754355805, 2.4789268508290747, 0.9474454975110355, 0.0), CriterionId::TheoremA);
        assert!(c.applicable && !c.satisfied);
    }

    #[test]
    fn theorem_1_and_corollary_1_examples() {
        let c = run(&mixed(3.0, 2.0, 0.1, 0.5), CriterionId::Theorem1);
        assert!(c.satisfied);
        assert!(close(c.lhs, 0.55, 1e-15));
        let c = run(&mixed(3.0, 2.5, 0.25, 0.2), CriterionId::Theorem1);
        assert!(c.satisfied);
        assert!(close(c.lhs, 0.7 / 0.75, 1e-12));
        let c = run(&mixed(3.0, 2.0, 0.0, 0.0), CriterionId::Theorem1);
        assert!(c.satisfied && c.lhs == 0.0);

        let c = run(&mixed(3.0, 2.0, 0.2, 0.2), CriterionId::Corollary1);
        assert!(c.satisfied && close(c.lhs, 0.7, 1e-15));
        let c = run(&mixed(3.0, 2.5, 0.3, 0.2), CriterionId::Corollary1);
        assert!(c.applicable && !c.satisfied);
        assert!(close(c.lhs, 0.8 + 0.8 / 3.0, 1e-12));
        let c = run(&mixed(2.0, 1.0, 0.0, 0.5), CriterionId::Corollary1);
        assert!(c.satisfied && close(c.lhs, 0.5, 1e-15));
        assert!(c.narrative.contains("a² = 4b"));
    }

    #[test]
    fn theorem_1_time_varying_needs_yp() {
        let mut s = mixed(4.0, 1.0, 0.1, 0.1);
        s.b = CoefficientFn::parse("1.5 + 0.5*sin(t)").unwrap().with_declared(Some(2.0), Some(1.0));
        let c = run(&s, CriterionId::Theorem1);
        assert!(!c.applicable);
        assert!(c.narrative.contains("Y'"));
        s.a1 = Some(CoefficientFn::zero());
        let c = run(&s, CriterionId::Theorem1);
        assert!(c.satisfied && close(c.lhs, 0.1, 1e-15));
        assert!(!run(&s, CriterionId::Corollary1).applicable);
    }

    #[test]
    fn theorem_2_examples() {
        let c = run(&pure(3.0, 2.0, 0.05, 0.2), CriterionId::Theorem2);
        assert!(c.satisfied);
        assert!(close(c.lhs, 0.5 * (0.6 + 0.4 * 2.0 / 3.0), 1e-14));
        assert!(close(c.lhs, 0.4333, 1e-4));
        let c = run(&pure(3.0, 2.0, 0.0, 0.0), CriterionId::Theorem2);
        assert!(c.satisfied && c.lhs == 0.0);
        let c = run(&pure(3.0, 2.0, 0.1, 0.5), CriterionId::Theorem2);
        assert!(c.satisfied && close(c.lhs, 0.9333, 1e-4));
        // the 1/e positivity prerequisite
        let c = run(&pure(3.0, 2.0, 0.2, 0.0), CriterionId::Theorem2);
        assert!(!c.applicable && !c.satisfied);
        assert!(c.narrative.contains("Lem6"));
    }

    #[test]
    fn corollary_2_examples() {
        // (3, 2): 6δ + (2/3)τ < 1
        let c = run(&pure(3.0, 2.0, 0.1, 0.5), CriterionId::Corollary2);
        assert!(c.satisfied && close(c.lhs, 0.6 + 1.0 / 3.0, 1e-14) && c.rhs == 1.0);
        // (3, 2.5): 20δ + (25/9)τ < 1, scaled by the case-2 rhs 3/4
        let c = run(&pure(3.0, 2.5, 0.02, 0.1), CriterionId::Corollary2);
        assert!(close(c.lhs / c.rhs, 20.0 * 0.02 + 25.0 / 9.0 * 0.1, 1e-14));
        assert!(c.satisfied);
        let c = run(&pure(3.0, 2.0, 0.0, 0.0), CriterionId::Corollary2);
        assert!(c.satisfied);
        // gate aδ ≤ 1/e
        let c = run(&pure(3.0, 2.0, 0.13, 0.0), CriterionId::Corollary2);
        assert!(!c.satisfied && !c.applicable);
        assert!(c.region_margin() < 0.0);
    }

    #[test]
    fn corollary_3_examples() {
        let bf = pure(1.0 / 3.0, 1.0 / 48.0, 0.0, 16.0);
        let c = run(&bf, CriterionId::Corollary3);
        assert!(c.applicable && !c.satisfied);
        assert_eq!(c.margin, 0.0);
        assert!(run(&pure(1.0 / 3.0, 1.0 / 48.0, 0.0, 15.0), CriterionId::Corollary3).satisfied);
        assert!(run(&pure(1.0 / 3.0, 1.0 / 48.0, 0.0, 0.0), CriterionId::Corollary3).satisfied);
        assert!(!run(&pure(3.0, 2.0, 0.1, 0.1), CriterionId::Corollary3).applicable);
        // discriminant gate
        assert!(!run(&pure(3.0, 2.5, 0.0, 0.1), CriterionId::Corollary3).applicable);
    }

    #[test]
    fn theorem_3_examples() {
        let c = run(&pure(3.0, 2.0, 0.05, 0.1), CriterionId::Theorem3);
        assert!(c.satisfied);
        assert!(close(c.lhs, 0.5 * (0.65 * (2.0 / 3.0 + 0.1) / 0.85 + 0.1), 1e-14));
        assert!(close(c.lhs, 0.3431, 1e-4));
        assert!(run(&pure(3.0, 2.0, 0.0, 0.0), CriterionId::Theorem3).satisfied);
        let c = run(&pure(3.0, 2.0, 0.3, 0.0), CriterionId::Theorem3);
        assert!(c.applicable && !c.satisfied && c.lhs >= 17.0);
        let c = run(&pure(3.0, 2.0, 0.4, 0.0), CriterionId::Theorem3);
        assert!(!c.applicable);
    }

    #[test]
    fn theorem_4_examples() {
        let c = run(&mixed(3.0, 2.0, 0.3, 0.3), CriterionId::Theorem4);
        assert!(c.satisfied && close(c.lhs, 0.5 * (0.3 * (2.0 / 3.0 + 0.1) / 0.9 + 0.3), 1e-14));
        assert!(close(c.lhs, 0.2778, 1e-4));
        let c4 = run(&mixed(3.0, 2.0, 0.0, 0.5), CriterionId::Theorem4);
        let c1 = run(&mixed(3.0, 2.0, 0.0, 0.5), CriterionId::Theorem1);
        assert_eq!(c4.lhs, 0.25);
        assert_eq!((c4.satisfied, c4.margin), (c1.satisfied, c1.margin));
        let c = run(&mixed(3.0, 2.0, 2.9, 1.9), CriterionId::Theorem4);
        assert!(c.applicable && !c.satisfied && c.lhs > 10.0);
    }

    #[test]
    fn corollary_4_and_5_examples() {
        let c = run(&mixed(3.0, 2.0, 0.5, 1.0), CriterionId::Corollary4);
        assert!(c.satisfied);
        assert!(run(&mixed(3.0, 2.0, 0.0, 0.0), CriterionId::Corollary4).satisfied);
        let c = run(&mixed(3.0, 2.0, 1.5, 0.0), CriterionId::Corollary4);
        assert!(c.applicable && !c.satisfied && c.margin == 0.0);
        assert!(!run(&mixed(3.0, 2.5, 0.1, 0.1), CriterionId::Corollary4).applicable);

        assert!(run(&mixed(3.0, 2.0, 0.0, 1.9), CriterionId::Corollary5).satisfied);
        assert!(run(&mixed(3.0, 2.0, 0.0, 0.0), CriterionId::Corollary5).satisfied);
        let c = run(&mixed(3.0, 2.0, 0.0, 2.0), CriterionId::Corollary5);
        assert!(c.applicable && !c.satisfied);
        assert!(!run(&mixed(3.0, 2.0, 0.1, 0.0), CriterionId::Corollary5).applicable);
    }

    #[test]
    fn theorem_5_and_corollary_6_examples() {
        let c = run(&pure(3.0, 2.0, 0.05, 0.1), CriterionId::Theorem5);
        assert!(c.satisfied && close(c.lhs, 0.3 + 0.1 * 2.0 / 3.0, 1e-14));
        assert!(run(&pure(3.0, 2.0, 0.0, 0.0), CriterionId::Theorem5).satisfied);
        let c = run(&pure(3.0, 2.0, 0.1, 1.2), CriterionId::Theorem5);
        assert!(c.applicable && !c.satisfied && close(c.lhs, 1.4, 1e-14));
        // (38a) fails for (3, 2.5)
        assert!(!run(&pure(3.0, 2.5, 0.05, 0.1), CriterionId::Theorem5).applicable);

        let c = run(&pure(3.0, 2.0, 0.0, 1.4), CriterionId::Corollary6);
        assert!(c.satisfied && close(c.lhs, 1.4 * 2.0 / 3.0, 1e-15));
        assert!(run(&pure(3.0, 2.0, 0.0, 0.0), CriterionId::Corollary6).satisfied);
        let c = run(&pure(3.0, 2.0, 0.0, 1.5), CriterionId::Corollary6);
        assert!(c.applicable && !c.satisfied && c.margin == 0.0);
        assert!(!run(&pure(3.0, 2.0, 0.1, 1.0), CriterionId::Corollary6).applicable);
    }

    #[test]
    fn theorem_6_and_corollary_7_examples() {
        let c = run(&mixed(3.0, 2.0, 0.3, 0.4), CriterionId::Theorem6);
        assert!(c.satisfied && close(c.lhs, 1.0 / 3.0, 1e-14));
        assert!(run(&mixed(3.0, 2.0, 0.0, 0.0), CriterionId::Theorem6).satisfied);
        let c = run(&mixed(3.0, 2.0, 0.0, 2.2), CriterionId::Theorem6);
        assert!(c.applicable && !c.satisfied && c.lhs >= 1.1);

        assert!(run(&mixed(3.0, 2.0, 0.0, 1.5), CriterionId::Corollary7).satisfied);
        assert!(run(&mixed(3.0, 2.0, 0.0, 0.0), CriterionId::Corollary7).satisfied);
        let c = run(&mixed(3.0, 2.0, 0.0, 2.0), CriterionId::Corollary7);
        assert!(c.applicable && !c.satisfied && c.margin == 0.0);
        assert!(!run(&mixed(3.0, 2.0, 0.1, 0.0), CriterionId::Corollary7).applicable);
    }

    #[test]
    fn check_all_order_and_summary() {
        let spec = pure(1.0 / 3.0, 1.0 / 48.0, 0.0, 16.0);
        let report = check_all(&Analysis::new(&spec).unwrap(), None);
        let ids: Vec<&str> = report.certificates.iter().map(|c| c.criterion_id.as_str()).collect();
        let expected: Vec<&str> = CriterionId::ALL.iter().map(|c| c.as_str()).collect();
        assert_eq!(ids, expected);
        assert!(!report.summary.certified, "{:?}", report.summary);
        assert_eq!(report.summary.verdict, "not certified");

        let spec = pure(3.0, 2.0, 0.0, 0.0);
        let report = check_all(&Analysis::new(&spec).unwrap(), None);
        assert!(report.summary.satisfied.len() > 3);
        assert!(report.summary.best_margin_unbounded);

        let spec = mixed(3.0, 2.0, 0.1, 0.5);
        let report = check_all(&Analysis::new(&spec).unwrap(), Some(&[CriterionId::Theorem1, CriterionId::Corollary1]));
        assert_eq!(report.certificates.len(), 2);
        assert!(report.summary.certified && report.summary.rigorous);
    }

    #[test]
    fn wrong_form_is_inapplicable() {
        let p = pure(3.0, 2.0, 0.1, 0.1);
        for c in CriterionId::ALL.iter().filter(|c| c.form() == EquationForm::Mixed) {
            assert!(!run(&p, *c).applicable, "{c}");
        }
    }

    #[test]
    fn sampled_norms_mark_certificates_heuristic() {
        let mut s = pure(3.0, 2.0, 0.05, 0.1);
        s.b = CoefficientFn::parse("1.5 + 0.5*sin(t)").unwrap();
        s.norm_window = Some(50.0);
        s.norm_grid = Some(20_001);
        let c = run(&s, CriterionId::Theorem5);
        assert!(c.satisfied);
        assert!(!c.exactness.is_exact());
        let report = check_all(&Analysis::new(&s).unwrap(), None);
        assert!(report.summary.certified && !report.summary.rigorous);
    }

    #[test]
    fn criterion_ids_parse() {
        assert_eq!("cor4".parse::<CriterionId>().unwrap(), CriterionId::Corollary4);
        assert_eq!("ThmA".parse::<CriterionId>().unwrap(), CriterionId::TheoremA);
        assert!("Thm9".parse::<CriterionId>().is_err());
    }
}
