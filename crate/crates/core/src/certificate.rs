//! Certificates: the structured outcome of evaluating one stability criterion.

use serde::{Serialize, Serializer};

/// Relative band inside which `lhs` and `rhs` count as equal. Strict criteria
/// never certify inside it.
pub const BOUNDARY_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Exactness {
    Exact,
    Sampled { window: [f64; 2], grid_points: usize },
}

impl Exactness {
    pub fn is_exact(&self) -> bool {
        matches!(self, Exactness::Exact)
    }

    /// Exact only if both are.
    pub fn combine(&self, other: &Exactness) -> Exactness {
        match (self, other) {
            (Exactness::Exact, o) => o.clone(),
            (s, _) => s.clone(),
        }
    }
}

/// A named, evaluated norm-like quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub quantity: String,
    #[serde(serialize_with = "finite_or_null")]
    pub value: f64,
    pub exactness: Exactness,
}

impl NormReport {
    pub fn exact(quantity: impl Into<String>, value: f64) -> Self {
        NormReport {
            quantity: quantity.into(),
            value,
            exactness: Exactness::Exact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = "<=")]
    LessEq,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub criterion_id: String,
    pub applicable: bool,
    pub satisfied: bool,
    pub relation: Relation,
    #[serde(serialize_with = "finite_or_null")]
    pub lhs: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub rhs: f64,
    /// `rhs - lhs`; zero on the boundary band.
    #[serde(serialize_with = "finite_or_null")]
    pub margin: f64,
    /// Set when the right-hand side is infinite (no delayed terms left).
    pub unbounded_rhs: bool,
    pub inputs: Vec<NormReport>,
    pub prerequisites: Vec<Certificate>,
    pub exactness: Exactness,
    pub narrative: String,
}

pub(crate) fn finite_or_null<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

/// Compare with the boundary band applied. Returns `(holds, margin)`.
pub fn compare(lhs: f64, rhs: f64, relation: Relation) -> (bool, f64) {
    if rhs == f64::INFINITY && lhs.is_finite() {
        return (true, f64::INFINITY);
    }
    if !lhs.is_finite() || rhs.is_nan() {
        return (false, f64::NAN);
    }
    let scale = 1.0f64.max(lhs.abs()).max(rhs.abs());
    let diff = rhs - lhs;
    if diff.abs() <= BOUNDARY_RTOL * scale {
        return (relation == Relation::LessEq, 0.0);
    }
    (diff > 0.0, diff)
}

impl Certificate {
    pub fn inapplicable(id: impl Into<String>, reason: impl Into<String>) -> Self {
        Certificate {
            criterion_id: id.into(),
            applicable: false,
            satisfied: false,
            relation: Relation::Less,
            lhs: f64::NAN,
            rhs: f64::NAN,
            margin: f64::NAN,
            unbounded_rhs: false,
            inputs: Vec::new(),
            prerequisites: Vec::new(),
            exactness: Exactness::Exact,
            narrative: reason.into(),
        }
    }

    /// Evaluate `lhs (relation) rhs`. The certificate is applicable only if all
    /// prerequisites are satisfied; the inequality is still evaluated so that
    /// consumers can see how far off it was.
    pub fn evaluate(
        id: impl Into<String>,
        lhs: f64,
        rhs: f64,
        relation: Relation,
        inputs: Vec<NormReport>,
        prerequisites: Vec<Certificate>,
        narrative: impl Into<String>,
    ) -> Self {
        let (holds, margin) = compare(lhs, rhs, relation);
        let applicable = prerequisites.iter().all(|p| p.satisfied);
        let exactness = inputs
            .iter()
            .map(|r| &r.exactness)
            .chain(prerequisites.iter().map(|p| &p.exactness))
            .fold(Exactness::Exact, |acc, e| acc.combine(e));
        let mut narrative = narrative.into();
        if !applicable {
            let failed: Vec<&str> = prerequisites
                .iter()
                .filter(|p| !p.satisfied)
                .map(|p| p.criterion_id.as_str())
                .collect();
            narrative = format!("{narrative}; prerequisite(s) not met: {}", failed.join(", "));
        }
        Certificate {
            criterion_id: id.into(),
            applicable,
            satisfied: applicable && holds,
            relation,
            lhs,
            rhs,
            margin,
            unbounded_rhs: rhs == f64::INFINITY,
            inputs,
            prerequisites,
            exactness,
            narrative,
        }
    }

    /// Signed distance to the certified region: the main margin, capped by the
    /// margins of any prerequisite gates. `NaN` when structurally inapplicable.
    pub fn region_margin(&self) -> f64 {
        let mut m = self.margin;
        for p in &self.prerequisites {
            let pm = p.region_margin();
            if pm.is_nan() {
                return f64::NAN;
            }
            m = m.min(pm);
        }
        m
    }
}
