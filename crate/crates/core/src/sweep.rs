//! Two-parameter stability-region sweeps and their zero-margin contours.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index::sample;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::certificate::{finite_or_null, Exactness};
use crate::criteria::{check_all, Analysis, CriterionId};
use crate::eqspec::{CoefficientFn, DelayFn, EquationForm, EquationSpec, SpecError};
use crate::solver::{default_horizon, default_step, estimate_decay, fundamental_function, DecayVerdict};

/// Seed for the random interior points of the simulation overlay.
pub const DEFAULT_SEED: u64 = 0x5eed_d0e5;
pub const DEFAULT_INTERIOR_SAMPLES: usize = 100;
/// Environment variable capping the number of sweep worker threads.
pub const THREADS_ENV: &str = "DDESTAB_THREADS";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("invalid sweep plan: {0}")]
    Invalid(String),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    A1,
    B1,
    Delta,
    Tau,
}

impl Param {
    pub fn as_str(self) -> &'static str {
        match self {
            Param::A1 => "a1",
            Param::B1 => "b1",
            Param::Delta => "delta",
            Param::Tau => "tau",
        }
    }

    /// Set this parameter to a constant on `spec`.
    pub fn apply(self, spec: &mut EquationSpec, value: f64) -> Result<(), SpecError> {
        match self {
            Param::A1 | Param::B1 if spec.form != EquationForm::Mixed => {
                return Err(SpecError::Invalid(format!(
                    "{} only exists in the mixed form",
                    self.as_str()
                )))
            }
            Param::A1 => spec.a1 = Some(CoefficientFn::constant(value)),
            Param::B1 => spec.b1 = Some(CoefficientFn::constant(value)),
            Param::Delta => spec.g = DelayFn::constant_lag(value)?,
            Param::Tau => spec.h = DelayFn::constant_lag(value)?,
        }
        Ok(())
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Param {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a1" => Ok(Param::A1),
            "b1" => Ok(Param::B1),
            "delta" | "δ" => Ok(Param::Delta),
            "tau" | "τ" => Ok(Param::Tau),
            _ => Err(SweepError::Invalid(format!(
                "unknown sweep parameter `{s}` (expected a1, b1, delta or tau)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub param: Param,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(param: Param, min: f64, max: f64, count: usize) -> Self {
        Axis { param, min, max, count }
    }

    /// `min + (max − min)·k/(count − 1)`.
    pub fn value(&self, k: usize) -> f64 {
        if k + 1 == self.count {
            return self.max;
        }
        self.min + (self.max - self.min) * k as f64 / (self.count - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.value(k)).collect()
    }

    fn from_json(v: &Value, name: &str) -> Result<Self, SweepError> {
        let obj = v
            .as_object()
            .ok_or_else(|| SweepError::Invalid(format!("`{name}` must be an object")))?;
        for key in obj.keys() {
            if !["param", "min", "max", "count"].contains(&key.as_str()) {
                return Err(SweepError::Invalid(format!("unknown key `{name}.{key}`")));
            }
        }
        let num = |k: &str| {
            obj.get(k)
                .and_then(Value::as_f64)
                .ok_or_else(|| SweepError::Invalid(format!("`{name}.{k}` must be a number")))
        };
        let param = obj
            .get("param")
            .and_then(Value::as_str)
            .ok_or_else(|| SweepError::Invalid(format!("`{name}.param` must be a string")))?
            .parse()?;
        let count = obj
            .get("count")
            .and_then(Value::as_u64)
            .ok_or_else(|| SweepError::Invalid(format!("`{name}.count` must be a non-negative integer")))?;
        Ok(Axis {
            param,
            min: num("min")?,
            max: num("max")?,
            count: count as usize,
        })
    }

    fn to_json(self) -> Value {
        json!({"param": self.param.as_str(), "min": self.min, "max": self.max, "count": self.count})
    }
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub base: EquationSpec,
    /// Outer (row) axis.
    pub axis1: Axis,
    pub axis2: Axis,
    /// `None` runs every criterion.
    pub criteria: Option<Vec<CriterionId>>,
    pub simulate: bool,
    pub seed: u64,
    pub interior_samples: usize,
}

impl SweepPlan {
    pub fn new(base: EquationSpec, axis1: Axis, axis2: Axis) -> Self {
        SweepPlan {
            base,
            axis1,
            axis2,
            criteria: None,
            simulate: false,
            seed: DEFAULT_SEED,
            interior_samples: DEFAULT_INTERIOR_SAMPLES,
        }
    }

    pub fn with_criteria(mut self, criteria: &[CriterionId]) -> Self {
        self.criteria = Some(criteria.to_vec());
        self
    }

    pub fn from_json_str(text: &str) -> Result<Self, SweepError> {
        let v: Value = serde_json::from_str(text)?;
        Self::from_json(&v)
    }

    pub fn from_json(v: &Value) -> Result<Self, SweepError> {
        let obj = v
            .as_object()
            .ok_or_else(|| SweepError::Invalid("plan must be a JSON object".into()))?;
        const KEYS: [&str; 7] = ["base", "axis1", "axis2", "criteria", "simulate", "seed", "interior_samples"];
        for key in obj.keys() {
            if !KEYS.contains(&key.as_str()) {
                return Err(SweepError::Invalid(format!("unknown key `{key}`")));
            }
        }
        let base = EquationSpec::from_json(
            obj.get("base")
                .ok_or_else(|| SweepError::Invalid("missing `base` spec".into()))?,
        )?;
        let axis = |k: &str| {
            Axis::from_json(
                obj.get(k)
                    .ok_or_else(|| SweepError::Invalid(format!("missing `{k}`")))?,
                k,
            )
        };
        let mut plan = SweepPlan::new(base, axis("axis1")?, axis("axis2")?);
        if let Some(c) = obj.get("criteria") {
            let list = c
                .as_array()
                .ok_or_else(|| SweepError::Invalid("`criteria` must be an array of ids".into()))?;
            let ids = list
                .iter()
                .map(|x| {
                    x.as_str()
                        .ok_or_else(|| SweepError::Invalid("criterion ids must be strings".into()))?
                        .parse::<CriterionId>()
                        .map_err(SweepError::Invalid)
                })
                .collect::<Result<Vec<_>, _>>()?;
            plan.criteria = Some(ids);
        }
        if let Some(s) = obj.get("simulate") {
            plan.simulate = s
                .as_bool()
                .ok_or_else(|| SweepError::Invalid("`simulate` must be a boolean".into()))?;
        }
        if let Some(s) = obj.get("seed") {
            plan.seed = s
                .as_u64()
                .ok_or_else(|| SweepError::Invalid("`seed` must be a non-negative integer".into()))?;
        }
        if let Some(n) = obj.get("interior_samples") {
            plan.interior_samples = n
                .as_u64()
                .ok_or_else(|| SweepError::Invalid("`interior_samples` must be a non-negative integer".into()))?
                as usize;
        }
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("base".into(), self.base.to_json());
        m.insert("axis1".into(), self.axis1.to_json());
        m.insert("axis2".into(), self.axis2.to_json());
        if let Some(c) = &self.criteria {
            m.insert("criteria".into(), json!(c.iter().map(|c| c.as_str()).collect::<Vec<_>>()));
        }
        m.insert("simulate".into(), json!(self.simulate));
        m.insert("seed".into(), json!(self.seed));
        m.insert("interior_samples".into(), json!(self.interior_samples));
        Value::Object(m)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        for (name, ax) in [("axis1", &self.axis1), ("axis2", &self.axis2)] {
            if ax.count < 2 {
                return Err(SweepError::Invalid(format!("{name}: count must be at least 2")));
            }
            if !(ax.min.is_finite() && ax.max.is_finite()) || ax.min > ax.max {
                return Err(SweepError::Invalid(format!("{name}: need finite min ≤ max")));
            }
            // form compatibility only; bad values are per-point failures
            let mut probe = self.base.clone();
            ax.param.apply(&mut probe, 0.0)?;
        }
        if self.axis1.param == self.axis2.param {
            return Err(SweepError::Invalid("axis parameters must differ".into()));
        }
        if matches!(&self.criteria, Some(c) if c.is_empty()) {
            return Err(SweepError::Invalid("criteria filter is empty".into()));
        }
        Ok(())
    }

    pub fn criteria_list(&self) -> Vec<CriterionId> {
        self.criteria.clone().unwrap_or_else(|| CriterionId::ALL.to_vec())
    }

    /// Spec at grid point `(i, j)`.
    pub fn spec_at(&self, i: usize, j: usize) -> Result<EquationSpec, SpecError> {
        let mut spec = self.base.clone();
        self.axis1.param.apply(&mut spec, self.axis1.value(i))?;
        self.axis2.param.apply(&mut spec, self.axis2.value(j))?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointSummary {
    pub axis1: f64,
    pub axis2: f64,
    pub certified: bool,
    /// Satisfied criterion with the largest margin.
    pub best_criterion: Option<String>,
    /// Largest region margin over the evaluated criteria; `NaN` if none applies.
    #[serde(serialize_with = "finite_or_null")]
    pub margin: f64,
    /// All certifying norms were exact.
    pub exact: bool,
    pub lambda_hat: Option<f64>,
    pub verdict: Option<DecayVerdict>,
    pub error: Option<String>,
}

/// Per-criterion fields over the grid, row-major with `axis1` outer.
#[derive(Debug, Clone)]
pub struct CriterionField {
    pub criterion: CriterionId,
    pub satisfied: Vec<bool>,
    pub margin: Vec<f64>,
}

pub type Polyline = Vec<(f64, f64)>;

#[derive(Debug, Clone)]
pub struct Boundary {
    pub criterion: CriterionId,
    pub polylines: Vec<Polyline>,
}

#[derive(Debug, Clone)]
pub struct RegionSweep {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    /// Row-major, `axis1` outer.
    pub points: Vec<PointSummary>,
    pub fields: Vec<CriterionField>,
    pub boundaries: Vec<Boundary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepStats {
    pub points: usize,
    pub certified: usize,
    pub errors: usize,
    pub simulated: usize,
    pub decaying: usize,
    /// Points certified with exact norms whose simulation did not decay.
    pub soundness_violations: usize,
}

impl RegionSweep {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.axis2.len() + j
    }

    pub fn field(&self, c: CriterionId) -> Option<&CriterionField> {
        self.fields.iter().find(|f| f.criterion == c)
    }

    pub fn stats(&self) -> SweepStats {
        let simulated: Vec<&PointSummary> = self.points.iter().filter(|p| p.verdict.is_some()).collect();
        SweepStats {
            points: self.points.len(),
            certified: self.points.iter().filter(|p| p.certified).count(),
            errors: self.points.iter().filter(|p| p.error.is_some()).count(),
            simulated: simulated.len(),
            decaying: simulated
                .iter()
                .filter(|p| p.verdict == Some(DecayVerdict::Decaying))
                .count(),
            soundness_violations: simulated
                .iter()
                .filter(|p| p.certified && p.exact && p.verdict == Some(DecayVerdict::NotDecaying))
                .count(),
        }
    }

    /// CSV `axis1,axis2,best_criterion,margin,lambda_hat`; empty cells for
    /// missing values.
    pub fn write_grid_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["axis1", "axis2", "best_criterion", "margin", "lambda_hat"])?;
        for p in &self.points {
            let margin = p.margin.is_finite().then_some(p.margin);
            let lambda = p.lambda_hat.map(|l| if l.is_finite() { l.to_string() } else { "inf".into() });
            w.serialize((p.axis1, p.axis2, p.best_criterion.as_deref(), margin, lambda))?;
        }
        w.flush()?;
        Ok(())
    }

    /// CSV `criterion,segment_id,x,y`, one row per polyline vertex.
    pub fn write_boundary_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["criterion", "segment_id", "x", "y"])?;
        for b in &self.boundaries {
            for (id, line) in b.polylines.iter().enumerate() {
                for &(x, y) in line {
                    w.serialize((b.criterion.as_str(), id, x, y))?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

struct PointEval {
    summary: PointSummary,
    satisfied: Vec<bool>,
    margins: Vec<f64>,
}

fn evaluate_point(plan: &SweepPlan, criteria: &[CriterionId], i: usize, j: usize) -> PointEval {
    let (x, y) = (plan.axis1.value(i), plan.axis2.value(j));
    let mut summary = PointSummary {
        axis1: x,
        axis2: y,
        certified: false,
        best_criterion: None,
        margin: f64::NAN,
        exact: false,
        lambda_hat: None,
        verdict: None,
        error: None,
    };
    let failed = |mut summary: PointSummary, e: String| {
        summary.error = Some(e);
        PointEval {
            summary,
            satisfied: vec![false; criteria.len()],
            margins: vec![f64::NAN; criteria.len()],
        }
    };
    let spec = match plan.spec_at(i, j) {
        Ok(s) => s,
        Err(e) => return failed(summary, e.to_string()),
    };
    let an = match Analysis::new(&spec) {
        Ok(a) => a,
        Err(e) => return failed(summary, e.to_string()),
    };
    let report = check_all(&an, Some(criteria));
    let satisfied: Vec<bool> = report.certificates.iter().map(|c| c.satisfied).collect();
    let margins: Vec<f64> = report.certificates.iter().map(|c| c.region_margin()).collect();
    summary.margin = margins.iter().cloned().filter(|m| !m.is_nan()).fold(f64::NAN, f64::max);
    summary.certified = report.summary.certified;
    summary.best_criterion = report.summary.best_criterion.clone();
    summary.exact = report
        .certificates
        .iter()
        .any(|c| c.satisfied && c.exactness == Exactness::Exact);
    PointEval {
        summary,
        satisfied,
        margins,
    }
}

fn simulate_point(plan: &SweepPlan, i: usize, j: usize, p: &mut PointSummary) {
    let run = || -> Result<_, String> {
        let spec = plan.spec_at(i, j).map_err(|e| e.to_string())?;
        let traj = fundamental_function(&spec, spec.t0, default_horizon(&spec), default_step(&spec))
            .map_err(|e| e.to_string())?;
        Ok(estimate_decay(&traj))
    };
    match run() {
        Ok(d) => {
            p.lambda_hat = Some(d.lambda_hat);
            p.verdict = Some(d.verdict);
        }
        Err(e) => p.error = Some(e),
    }
}

/// Evaluate the plan on its full grid. Per-point failures are recorded in the
/// point summaries; only plan-level problems are errors.
pub fn run_sweep(plan: &SweepPlan) -> Result<RegionSweep, SweepError> {
    plan.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    pool.install(|| run_sweep_inner(plan))
}

fn run_sweep_inner(plan: &SweepPlan) -> Result<RegionSweep, SweepError> {
    let criteria = plan.criteria_list();
    let (n1, n2) = (plan.axis1.count, plan.axis2.count);
    let evals: Vec<PointEval> = (0..n1 * n2)
        .into_par_iter()
        .map(|idx| evaluate_point(plan, &criteria, idx / n2, idx % n2))
        .collect();

    let mut points = Vec::with_capacity(evals.len());
    let mut fields: Vec<CriterionField> = criteria
        .iter()
        .map(|&c| CriterionField {
            criterion: c,
            satisfied: Vec::with_capacity(evals.len()),
            margin: Vec::with_capacity(evals.len()),
        })
        .collect();
    for e in evals {
        for (f, (s, m)) in fields.iter_mut().zip(e.satisfied.into_iter().zip(e.margins)) {
            f.satisfied.push(s);
            f.margin.push(m);
        }
        points.push(e.summary);
    }

    let axis1 = plan.axis1.values();
    let axis2 = plan.axis2.values();
    let boundaries = fields
        .iter()
        .map(|f| Boundary {
            criterion: f.criterion,
            polylines: extract_boundary(&axis1, &axis2, &f.margin),
        })
        .collect();

    if plan.simulate {
        let targets = overlay_targets(plan, &points);
        let sims: Vec<(usize, PointSummary)> = targets
            .into_par_iter()
            .map(|idx| {
                let mut p = points[idx].clone();
                simulate_point(plan, idx / n2, idx % n2, &mut p);
                (idx, p)
            })
            .collect();
        for (idx, p) in sims {
            points[idx] = p;
        }
    }

    Ok(RegionSweep {
        axis1,
        axis2,
        points,
        fields,
        boundaries,
    })
}

/// Corners of cells whose certified status is mixed, plus a seeded random
/// sample of the remaining certified points. Sorted indices.
fn overlay_targets(plan: &SweepPlan, points: &[PointSummary]) -> Vec<usize> {
    let (n1, n2) = (plan.axis1.count, plan.axis2.count);
    let mut chosen = vec![false; points.len()];
    for i in 0..n1 - 1 {
        for j in 0..n2 - 1 {
            let corners = [i * n2 + j, (i + 1) * n2 + j, (i + 1) * n2 + j + 1, i * n2 + j + 1];
            let certified = corners.iter().filter(|&&k| points[k].certified).count();
            if certified > 0 && certified < 4 {
                for k in corners {
                    chosen[k] = true;
                }
            }
        }
    }
    let interior: Vec<usize> = (0..points.len())
        .filter(|&k| points[k].certified && !chosen[k])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let take = plan.interior_samples.min(interior.len());
    for pick in sample(&mut rng, interior.len(), take).into_iter() {
        chosen[interior[pick]] = true;
    }
    (0..points.len()).filter(|&k| chosen[k]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    /// Edge from `(i, j)` to `(i + 1, j)`.
    Along1(usize, usize),
    /// Edge from `(i, j)` to `(i, j + 1)`.
    Along2(usize, usize),
}

/// Zero-level contour of `field` (row-major, `xs` outer) by marching squares
/// with linear interpolation along cell edges. Cells touching a `NaN` are
/// skipped. Segments are chained into polylines; closed loops repeat their
/// first vertex.
pub fn extract_boundary(xs: &[f64], ys: &[f64], field: &[f64]) -> Vec<Polyline> {
    let (n1, n2) = (xs.len(), ys.len());
    assert_eq!(field.len(), n1 * n2, "field does not match the grid");
    let val = |i: usize, j: usize| field[i * n2 + j];
    let inside = |v: f64| v > 0.0;
    let mut points: HashMap<EdgeKey, (f64, f64)> = HashMap::new();
    let mut crossing = |key: EdgeKey| -> EdgeKey {
        points.entry(key).or_insert_with(|| {
            let ((i0, j0), (i1, j1)) = match key {
                EdgeKey::Along1(i, j) => ((i, j), (i + 1, j)),
                EdgeKey::Along2(i, j) => ((i, j), (i, j + 1)),
            };
            let (v0, v1) = (val(i0, j0), val(i1, j1));
            let t = if v0 == v1 { 0.5 } else { v0 / (v0 - v1) };
            (
                xs[i0] + t * (xs[i1] - xs[i0]),
                ys[j0] + t * (ys[j1] - ys[j0]),
            )
        });
        key
    };

    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for i in 0..n1.saturating_sub(1) {
        for j in 0..n2.saturating_sub(1) {
            let c = [val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1)];
            if c.iter().any(|v| v.is_nan()) {
                continue;
            }
            let bits: Vec<bool> = c.iter().map(|&v| inside(v)).collect();
            // edges: bottom (c0-c1), right (c1-c2), top (c3-c2), left (c0-c3)
            let edges = [
                EdgeKey::Along1(i, j),
                EdgeKey::Along2(i + 1, j),
                EdgeKey::Along1(i, j + 1),
                EdgeKey::Along2(i, j),
            ];
            let ends = [(0, 1), (1, 2), (3, 2), (0, 3)];
            let crossed: Vec<usize> = (0..4).filter(|&e| bits[ends[e].0] != bits[ends[e].1]).collect();
            match crossed.len() {
                2 => segments.push((crossing(edges[crossed[0]]), crossing(edges[crossed[1]]))),
                4 => {
                    let center = inside(c.iter().sum::<f64>() / 4.0);
                    // pair edges around the corners cut off from the center
                    let isolate_c0_c2 = center != bits[0];
                    let pairs = if isolate_c0_c2 { [(0, 3), (1, 2)] } else { [(0, 1), (2, 3)] };
                    for (e0, e1) in pairs {
                        segments.push((crossing(edges[e0]), crossing(edges[e1])));
                    }
                }
                _ => {}
            }
        }
    }
    chain(&segments, &points)
}

fn chain(segments: &[(EdgeKey, EdgeKey)], points: &HashMap<EdgeKey, (f64, f64)>) -> Vec<Polyline> {
    let mut incident: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        incident.entry(a).or_default().push(s);
        incident.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let walk = |start_seg: usize, start_key: EdgeKey, used: &mut Vec<bool>| {
        let mut line = vec![points[&start_key]];
        let (mut seg, mut key) = (start_seg, start_key);
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            key = if a == key { b } else { a };
            line.push(points[&key]);
            match incident[&key].iter().find(|&&s| !used[s]) {
                Some(&next) => seg = next,
                None => break,
            }
        }
        line
    };
    // open chains first, from their loose ends, then closed loops
    for s in 0..segments.len() {
        if used[s] {
            continue;
        }
        let (a, b) = segments[s];
        if incident[&a].len() == 1 {
            lines.push(walk(s, a, &mut used));
        } else if incident[&b].len() == 1 {
            lines.push(walk(s, b, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            lines.push(walk(s, segments[s].0, &mut used));
        }
    }
    lines
}
