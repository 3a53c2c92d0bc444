//! Equation data model: coefficient and delay functions, the JSON spec file
//! format, and norm extraction over a finite sampling window.
//!
//! Norms over `[t0, ∞)` are approximated by sampling `[from, from + window]` on
//! a uniform grid. Constant (or declared) quantities are reported as exact;
//! everything else carries the window and grid it was sampled on.

use std::fmt;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::certificate::{Certificate, Exactness, NormReport, Relation};
use crate::expr::{BinOp, EvalError, Expr, ParseError};
use crate::quadrature::adaptive_simpson;

pub const DEFAULT_NORM_GRID: usize = 100_000;
/// Number of characteristic times `1 / inf a` covered by the default window.
pub const DEFAULT_WINDOW_TIMES: f64 = 100.0;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("field `{field}`: {source}")]
    Parse {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("delay `{delay}` points to the future at t = {t}: {value} > t")]
    FutureDelay { delay: String, t: f64, value: f64 },
    #[error("invalid spec: {0}")]
    Invalid(String),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoefForm {
    Constant(f64),
    Expression(Expr),
}

/// A coefficient `a(t)`, either constant or given by an expression, with
/// optional declared bounds on its range.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFn {
    form: CoefForm,
    declared_sup: Option<f64>,
    declared_inf: Option<f64>,
}

impl CoefficientFn {
    pub fn constant(value: f64) -> Self {
        CoefficientFn {
            form: CoefForm::Constant(value),
            declared_sup: Some(value),
            declared_inf: Some(value),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// Parse an expression; variable-free expressions fold to constants.
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        let ast = Expr::parse(source)?;
        Ok(match ast.constant_value() {
            Some(v) => Self::constant(v),
            None => CoefficientFn {
                form: CoefForm::Expression(ast),
                declared_sup: None,
                declared_inf: None,
            },
        })
    }

    /// Attach declared range bounds. Ignored for constants.
    pub fn with_declared(mut self, sup: Option<f64>, inf: Option<f64>) -> Self {
        if let CoefForm::Expression(_) = self.form {
            self.declared_sup = sup;
            self.declared_inf = inf;
        }
        self
    }

    pub fn form(&self) -> &CoefForm {
        &self.form
    }

    pub fn declared_sup(&self) -> Option<f64> {
        self.declared_sup
    }

    pub fn declared_inf(&self) -> Option<f64> {
        self.declared_inf
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.form {
            CoefForm::Constant(v) => Some(v),
            CoefForm::Expression(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    #[inline]
    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        match &self.form {
            CoefForm::Constant(v) => Ok(*v),
            CoefForm::Expression(e) => e.eval(t),
        }
    }

    fn to_json(&self) -> Value {
        match &self.form {
            CoefForm::Constant(v) => json!(v),
            CoefForm::Expression(e) => {
                if self.declared_sup.is_none() && self.declared_inf.is_none() {
                    json!(e.to_string())
                } else {
                    let mut m = Map::new();
                    m.insert("expr".into(), json!(e.to_string()));
                    if let Some(s) = self.declared_sup {
                        m.insert("sup".into(), json!(s));
                    }
                    if let Some(i) = self.declared_inf {
                        m.insert("inf".into(), json!(i));
                    }
                    Value::Object(m)
                }
            }
        }
    }

    fn from_json(field: &str, v: &Value) -> Result<Self, SpecError> {
        let parse = |src: &str| {
            CoefficientFn::parse(src).map_err(|source| SpecError::Parse {
                field: field.to_string(),
                source,
            })
        };
        match v {
            Value::Number(n) => Ok(Self::constant(finite_number(field, n.as_f64())?)),
            Value::String(s) => parse(s),
            Value::Object(m) => {
                let src = m.get("expr").and_then(Value::as_str).ok_or_else(|| {
                    SpecError::Invalid(format!("`{field}` object needs a string `expr`"))
                })?;
                let bound = |k: &str| -> Result<Option<f64>, SpecError> {
                    match m.get(k) {
                        None | Some(Value::Null) => Ok(None),
                        Some(Value::Number(n)) => finite_number(field, n.as_f64()).map(Some),
                        Some(_) => Err(SpecError::Invalid(format!("`{field}.{k}` must be a number"))),
                    }
                };
                let (sup, inf) = (bound("sup")?, bound("inf")?);
                if let (Some(s), Some(i)) = (sup, inf) {
                    if i > s {
                        return Err(SpecError::Invalid(format!("`{field}`: declared inf {i} > sup {s}")));
                    }
                }
                Ok(parse(src)?.with_declared(sup, inf))
            }
            _ => Err(SpecError::Invalid(format!(
                "`{field}` must be a number, an expression string or an object"
            ))),
        }
    }
}

impl fmt::Display for CoefficientFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            CoefForm::Constant(v) => write!(f, "{v}"),
            CoefForm::Expression(e) => write!(f, "{e}"),
        }
    }
}

fn finite_number(field: &str, v: Option<f64>) -> Result<f64, SpecError> {
    match v {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(SpecError::Invalid(format!("`{field}` is not a finite number"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DelayForm {
    Identity,
    ConstantLag(f64),
    Expression(Expr),
}

/// A delayed argument `g(t) ≤ t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayFn {
    form: DelayForm,
    lag_sup: Option<f64>,
}

impl DelayFn {
    pub fn identity() -> Self {
        DelayFn {
            form: DelayForm::Identity,
            lag_sup: Some(0.0),
        }
    }

    /// `g(t) = t - lag`. A zero lag is the identity.
    pub fn constant_lag(lag: f64) -> Result<Self, SpecError> {
        if !(lag.is_finite() && lag >= 0.0) {
            return Err(SpecError::Invalid(format!("lag must be finite and ≥ 0, got {lag}")));
        }
        if lag == 0.0 {
            return Ok(Self::identity());
        }
        Ok(DelayFn {
            form: DelayForm::ConstantLag(lag),
            lag_sup: Some(lag),
        })
    }

    /// Parse a delay expression in `t`. `t` is the identity and `t - c` with a
    /// variable-free `c` becomes a constant lag.
    pub fn parse(source: &str) -> Result<Self, SpecError> {
        let ast = Expr::parse(source).map_err(|source| SpecError::Parse {
            field: "delay".into(),
            source,
        })?;
        match &ast {
            Expr::Var => return Ok(Self::identity()),
            Expr::Bin(BinOp::Sub, l, r) if **l == Expr::Var => {
                if let Some(c) = r.constant_value() {
                    return Self::constant_lag(c);
                }
            }
            _ => {}
        }
        if let Some(c) = ast.constant_value() {
            return Err(SpecError::Invalid(format!(
                "delay `{source}` is constant ({c}); delays must depend on t"
            )));
        }
        Ok(DelayFn {
            form: DelayForm::Expression(ast),
            lag_sup: None,
        })
    }

    pub fn form(&self) -> &DelayForm {
        &self.form
    }

    pub fn is_identity(&self) -> bool {
        self.form == DelayForm::Identity
    }

    /// Certified bound on `t - g(t)`: exact for constant lags, otherwise set
    /// by [`EquationSpec::validate`] from sampling.
    pub fn lag_sup(&self) -> Option<f64> {
        self.lag_sup
    }

    /// Smallest positive lag when it is known exactly.
    pub fn constant_lag_value(&self) -> Option<f64> {
        match self.form {
            DelayForm::Identity => Some(0.0),
            DelayForm::ConstantLag(l) => Some(l),
            DelayForm::Expression(_) => None,
        }
    }

    /// `g(t)` without the causality check.
    #[inline]
    pub fn eval_raw(&self, t: f64) -> Result<f64, EvalError> {
        match &self.form {
            DelayForm::Identity => Ok(t),
            DelayForm::ConstantLag(l) => Ok(t - l),
            DelayForm::Expression(e) => e.eval(t),
        }
    }

    /// `g(t)`, rejecting arguments in the future.
    #[inline]
    pub fn eval(&self, t: f64) -> Result<f64, SpecError> {
        let v = self.eval_raw(t)?;
        if v > t + 1e-12 * t.abs().max(1.0) {
            return Err(SpecError::FutureDelay {
                delay: self.to_string(),
                t,
                value: v,
            });
        }
        Ok(v.min(t))
    }

    fn to_json(&self) -> Value {
        match &self.form {
            DelayForm::Identity => json!("t"),
            DelayForm::ConstantLag(l) => json!(l),
            DelayForm::Expression(e) => json!(e.to_string()),
        }
    }

    fn from_json(field: &str, v: Option<&Value>) -> Result<Self, SpecError> {
        match v {
            None | Some(Value::Null) => Ok(Self::identity()),
            Some(Value::Number(n)) => Self::constant_lag(finite_number(field, n.as_f64())?),
            Some(Value::String(s)) => Self::parse(s).map_err(|e| match e {
                SpecError::Parse { source, .. } => SpecError::Parse {
                    field: field.to_string(),
                    source,
                },
                other => other,
            }),
            Some(_) => Err(SpecError::Invalid(format!(
                "`{field}` must be a lag (number) or an expression in t"
            ))),
        }
    }
}

impl fmt::Display for DelayFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            DelayForm::Identity => f.write_str("t"),
            DelayForm::ConstantLag(l) => write!(f, "t - {l}"),
            DelayForm::Expression(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquationForm {
    /// `x'' + a(t) x'(g(t)) + b(t) x(h(t)) = 0`
    PureDelay,
    /// `x'' + a x' + b x + a1(t) x'(g(t)) + b1(t) x(h(t)) = 0`
    Mixed,
}

impl EquationForm {
    pub fn as_str(self) -> &'static str {
        match self {
            EquationForm::PureDelay => "pure_delay",
            EquationForm::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquationSpec {
    pub form: EquationForm,
    pub a: CoefficientFn,
    pub b: CoefficientFn,
    pub a1: Option<CoefficientFn>,
    pub b1: Option<CoefficientFn>,
    pub g: DelayFn,
    pub h: DelayFn,
    pub t0: f64,
    pub norm_window: Option<f64>,
    pub norm_grid: Option<usize>,
}

impl EquationSpec {
    pub fn pure_delay(a: CoefficientFn, b: CoefficientFn, g: DelayFn, h: DelayFn) -> Self {
        EquationSpec {
            form: EquationForm::PureDelay,
            a,
            b,
            a1: None,
            b1: None,
            g,
            h,
            t0: 0.0,
            norm_window: None,
            norm_grid: None,
        }
    }

    pub fn mixed(
        a: CoefficientFn,
        b: CoefficientFn,
        a1: CoefficientFn,
        b1: CoefficientFn,
        g: DelayFn,
        h: DelayFn,
    ) -> Self {
        EquationSpec {
            form: EquationForm::Mixed,
            a,
            b,
            a1: Some(a1),
            b1: Some(b1),
            g,
            h,
            t0: 0.0,
            norm_window: None,
            norm_grid: None,
        }
    }

    /// Constant-coefficient convenience constructor for `x'' + a x'(t-δ) + b x(t-τ) = 0`.
    pub fn constant_pure(a: f64, b: f64, delta: f64, tau: f64) -> Result<Self, SpecError> {
        Ok(Self::pure_delay(
            CoefficientFn::constant(a),
            CoefficientFn::constant(b),
            DelayFn::constant_lag(delta)?,
            DelayFn::constant_lag(tau)?,
        ))
    }

    /// Constant-coefficient convenience constructor for the mixed form.
    pub fn constant_mixed(a: f64, b: f64, a1: f64, b1: f64, delta: f64, tau: f64) -> Result<Self, SpecError> {
        Ok(Self::mixed(
            CoefficientFn::constant(a),
            CoefficientFn::constant(b),
            CoefficientFn::constant(a1),
            CoefficientFn::constant(b1),
            DelayFn::constant_lag(delta)?,
            DelayFn::constant_lag(tau)?,
        ))
    }

    pub fn a1_or_zero(&self) -> CoefficientFn {
        self.a1.clone().unwrap_or_else(CoefficientFn::zero)
    }

    pub fn b1_or_zero(&self) -> CoefficientFn {
        self.b1.clone().unwrap_or_else(CoefficientFn::zero)
    }

    pub fn a1_vanishes(&self) -> bool {
        self.a1.as_ref().is_none_or(CoefficientFn::is_zero)
    }

    /// True when every coefficient is constant and every delay a constant lag.
    pub fn is_autonomous(&self) -> bool {
        let coefs_const = [Some(&self.a), Some(&self.b), self.a1.as_ref(), self.b1.as_ref()]
            .into_iter()
            .flatten()
            .all(|c| c.as_constant().is_some());
        coefs_const && self.g.constant_lag_value().is_some() && self.h.constant_lag_value().is_some()
    }

    pub fn from_json_str(text: &str) -> Result<Self, SpecError> {
        let v: Value = serde_json::from_str(text)?;
        Self::from_json(&v)
    }

    pub fn from_json(v: &Value) -> Result<Self, SpecError> {
        let obj = v
            .as_object()
            .ok_or_else(|| SpecError::Invalid("spec must be a JSON object".into()))?;
        const KNOWN: [&str; 10] = ["form", "a", "b", "a1", "b1", "g", "h", "t0", "norm_window", "norm_grid"];
        if let Some(k) = obj.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(SpecError::Invalid(format!("unknown key `{k}`")));
        }
        let form = match obj.get("form").and_then(Value::as_str) {
            Some("pure_delay") => EquationForm::PureDelay,
            Some("mixed") => EquationForm::Mixed,
            Some(other) => return Err(SpecError::Invalid(format!("unknown form `{other}`"))),
            None => return Err(SpecError::Invalid("missing `form` (\"pure_delay\" | \"mixed\")".into())),
        };
        let required = |k: &str| {
            obj.get(k)
                .ok_or_else(|| SpecError::Invalid(format!("missing coefficient `{k}`")))
                .and_then(|v| CoefficientFn::from_json(k, v))
        };
        let optional = |k: &str| match obj.get(k) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => CoefficientFn::from_json(k, v).map(Some),
        };
        let t0 = match obj.get("t0") {
            None => 0.0,
            Some(v) => finite_number("t0", v.as_f64())?,
        };
        let norm_window = match obj.get("norm_window") {
            None | Some(Value::Null) => None,
            Some(v) => Some(finite_number("norm_window", v.as_f64())?),
        };
        let norm_grid = match obj.get("norm_grid") {
            None | Some(Value::Null) => None,
            Some(v) => Some(
                v.as_u64()
                    .ok_or_else(|| SpecError::Invalid("`norm_grid` must be a positive integer".into()))?
                    as usize,
            ),
        };
        let mut spec = EquationSpec {
            form,
            a: required("a")?,
            b: required("b")?,
            a1: optional("a1")?,
            b1: optional("b1")?,
            g: DelayFn::from_json("g", obj.get("g"))?,
            h: DelayFn::from_json("h", obj.get("h"))?,
            t0,
            norm_window,
            norm_grid,
        };
        if form == EquationForm::Mixed {
            spec.a1.get_or_insert_with(CoefficientFn::zero);
            spec.b1.get_or_insert_with(CoefficientFn::zero);
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Canonical JSON echo of the parsed spec. Keys are sorted.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("form".into(), json!(self.form.as_str()));
        m.insert("a".into(), self.a.to_json());
        m.insert("b".into(), self.b.to_json());
        if let Some(a1) = &self.a1 {
            m.insert("a1".into(), a1.to_json());
        }
        if let Some(b1) = &self.b1 {
            m.insert("b1".into(), b1.to_json());
        }
        m.insert("g".into(), self.g.to_json());
        m.insert("h".into(), self.h.to_json());
        m.insert("t0".into(), json!(self.t0));
        if let Some(w) = self.norm_window {
            m.insert("norm_window".into(), json!(w));
        }
        if let Some(n) = self.norm_grid {
            m.insert("norm_grid".into(), json!(n));
        }
        Value::Object(m)
    }

    /// Check structural invariants and certify expression lags by sampling.
    pub fn validate(&mut self) -> Result<(), SpecError> {
        if !(self.t0.is_finite() && self.t0 >= 0.0) {
            return Err(SpecError::Invalid(format!("t0 must be ≥ 0, got {}", self.t0)));
        }
        match self.form {
            EquationForm::PureDelay if self.a1.is_some() || self.b1.is_some() => {
                return Err(SpecError::Invalid(
                    "form pure_delay takes no a1/b1 terms; use form mixed".into(),
                ));
            }
            EquationForm::Mixed if self.a1.is_none() || self.b1.is_none() => {
                return Err(SpecError::Invalid("form mixed needs a1 and b1".into()));
            }
            _ => {}
        }
        if let Some(w) = self.norm_window {
            if w.is_nan() || w <= 0.0 {
                return Err(SpecError::Invalid("norm_window must be > 0".into()));
            }
        }
        if let Some(n) = self.norm_grid {
            if n < 2 {
                return Err(SpecError::Invalid("norm_grid must be ≥ 2".into()));
            }
        }
        let settings = NormSettings::resolve(self)?;
        for d in [&mut self.g, &mut self.h] {
            if d.lag_sup.is_none() {
                let r = lag_bounds(d, self.t0, settings.window, settings.grid)?;
                d.lag_sup = Some(r.value);
            }
        }
        Ok(())
    }
}

/// Sampling window and resolution used for every norm of one spec.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSettings {
    pub window: f64,
    pub grid: usize,
}

impl NormSettings {
    /// Spec overrides if present; otherwise `grid = 10⁵` and a window of 100
    /// characteristic times `1 / inf a` (or 100 when `inf a ≤ 0`).
    pub fn resolve(spec: &EquationSpec) -> Result<Self, SpecError> {
        let grid = spec.norm_grid.unwrap_or(DEFAULT_NORM_GRID);
        let window = match spec.norm_window {
            Some(w) => w,
            None => {
                let inf_a = ess_inf(&spec.a, "inf a", spec.t0, DEFAULT_WINDOW_TIMES, grid)?.value;
                if inf_a > 0.0 {
                    DEFAULT_WINDOW_TIMES / inf_a
                } else {
                    DEFAULT_WINDOW_TIMES
                }
            }
        };
        Ok(NormSettings { window, grid })
    }
}

fn check_window(window: f64, grid: usize) -> Result<(), SpecError> {
    if !(window > 0.0 && window.is_finite()) || grid < 2 {
        return Err(SpecError::Invalid(format!(
            "sampling needs window > 0 and grid ≥ 2 (got {window}, {grid})"
        )));
    }
    Ok(())
}

/// Uniform grid of `grid` points on `[from, from + window]`.
pub fn sample_points(from: f64, window: f64, grid: usize) -> impl Iterator<Item = f64> {
    let n = (grid - 1) as f64;
    (0..grid).map(move |i| from + window * (i as f64) / n)
}

fn sampled(from: f64, window: f64, grid: usize) -> Exactness {
    Exactness::Sampled {
        window: [from, from + window],
        grid_points: grid,
    }
}

fn sample_fold<F>(from: f64, window: f64, grid: usize, init: f64, mut f: F) -> Result<f64, SpecError>
where
    F: FnMut(f64, f64) -> Result<f64, SpecError>,
{
    let mut acc = init;
    for t in sample_points(from, window, grid) {
        acc = f(acc, t)?;
    }
    Ok(acc)
}

/// `ess sup |f|` over `[from, ∞)`.
pub fn sup_norm(
    f: &CoefficientFn,
    name: &str,
    from: f64,
    window: f64,
    grid: usize,
) -> Result<NormReport, SpecError> {
    check_window(window, grid)?;
    if let (Some(s), Some(i)) = (f.declared_sup, f.declared_inf) {
        return Ok(NormReport::exact(name, s.abs().max(i.abs())));
    }
    let v = sample_fold(from, window, grid, 0.0, |acc, t| Ok(acc.max(f.eval(t)?.abs())))?;
    Ok(NormReport {
        quantity: name.into(),
        value: v,
        exactness: sampled(from, window, grid),
    })
}

/// `ess sup f` (signed).
pub fn ess_sup(
    f: &CoefficientFn,
    name: &str,
    from: f64,
    window: f64,
    grid: usize,
) -> Result<NormReport, SpecError> {
    check_window(window, grid)?;
    if let Some(s) = f.declared_sup {
        return Ok(NormReport::exact(name, s));
    }
    let v = sample_fold(from, window, grid, f64::NEG_INFINITY, |acc, t| Ok(acc.max(f.eval(t)?)))?;
    Ok(NormReport {
        quantity: name.into(),
        value: v,
        exactness: sampled(from, window, grid),
    })
}

/// `ess inf f` (signed).
pub fn ess_inf(
    f: &CoefficientFn,
    name: &str,
    from: f64,
    window: f64,
    grid: usize,
) -> Result<NormReport, SpecError> {
    check_window(window, grid)?;
    if let Some(i) = f.declared_inf {
        return Ok(NormReport::exact(name, i));
    }
    let v = sample_fold(from, window, grid, f64::INFINITY, |acc, t| Ok(acc.min(f.eval(t)?)))?;
    Ok(NormReport {
        quantity: name.into(),
        value: v,
        exactness: sampled(from, window, grid),
    })
}

/// `ess sup |num / den|`, the norm of the quotient function. Infinite if `den`
/// vanishes at a sample where `num` does not.
pub fn ratio_norm(
    num: &CoefficientFn,
    den: &CoefficientFn,
    name: &str,
    from: f64,
    window: f64,
    grid: usize,
) -> Result<NormReport, SpecError> {
    check_window(window, grid)?;
    let ratio = |n: f64, d: f64| {
        if n == 0.0 {
            0.0
        } else {
            (n / d).abs()
        }
    };
    if let (Some(n), Some(d)) = (num.as_constant(), den.as_constant()) {
        return Ok(NormReport::exact(name, ratio(n, d)));
    }
    if num.is_zero() {
        return Ok(NormReport::exact(name, 0.0));
    }
    let v = sample_fold(from, window, grid, 0.0, |acc, t| {
        Ok(acc.max(ratio(num.eval(t)?, den.eval(t)?)))
    })?;
    Ok(NormReport {
        quantity: name.into(),
        value: v,
        exactness: sampled(from, window, grid),
    })
}

/// Certified bound on `t - d(t)` over the window; rejects `d(t) > t`.
pub fn lag_bounds(d: &DelayFn, from: f64, window: f64, grid: usize) -> Result<NormReport, SpecError> {
    check_window(window, grid)?;
    match d.form {
        DelayForm::Identity => Ok(NormReport::exact("lag", 0.0)),
        DelayForm::ConstantLag(l) => Ok(NormReport::exact("lag", l)),
        DelayForm::Expression(_) => {
            let v = sample_fold(from, window, grid, 0.0, |acc, t| Ok(acc.max(t - d.eval(t)?)))?;
            Ok(NormReport {
                quantity: "lag".into(),
                value: v,
                exactness: sampled(from, window, grid),
            })
        }
    }
}

pub const LEMMA6_ID: &str = "Lem6";

/// Sufficient condition for a positive fundamental function of
/// `x'(t) + a(t) x(g(t)) = 0`: `sup_t ∫_{g(t)}^t a(s) ds ≤ 1/e` with `a ≥ 0`.
pub fn one_over_e_check(a: &CoefficientFn, g: &DelayFn, from: f64, window: f64, grid: usize) -> Certificate {
    let rhs = (-1.0f64).exp();
    let name = "sup ∫_{g(t)}^t a(s)ds";
    if let (Some(c), Some(lag)) = (a.as_constant(), g.constant_lag_value()) {
        if c < 0.0 {
            return Certificate::inapplicable(LEMMA6_ID, format!("a = {c} is negative"));
        }
        let lhs = c * lag;
        return Certificate::evaluate(
            LEMMA6_ID,
            lhs,
            rhs,
            Relation::LessEq,
            vec![NormReport::exact(name, lhs)],
            vec![],
            format!("constant case: a·δ = {c}·{lag} = {lhs} vs 1/e"),
        );
    }
    if let Err(e) = check_window(window, grid) {
        return Certificate::inapplicable(LEMMA6_ID, e.to_string());
    }
    let mut worst = (f64::NEG_INFINITY, from);
    for t in sample_points(from, window, grid) {
        let at = match (a.eval(t), g.eval(t)) {
            (Ok(at), Ok(gt)) => (at, gt),
            (Err(e), _) => return Certificate::inapplicable(LEMMA6_ID, e.to_string()),
            (_, Err(e)) => return Certificate::inapplicable(LEMMA6_ID, e.to_string()),
        };
        let (a_t, g_t) = at;
        if a_t < 0.0 {
            return Certificate::inapplicable(LEMMA6_ID, format!("a({t}) = {a_t} is negative"));
        }
        let integral = if g_t == t {
            0.0
        } else {
            let f = |s: f64| a.eval(s).unwrap_or(f64::NAN);
            match adaptive_simpson(&f, g_t, t, 1e-10) {
                Some(v) => v,
                None => {
                    return Certificate::inapplicable(LEMMA6_ID, format!("a not integrable on [{g_t}, {t}]"))
                }
            }
        };
        if integral > worst.0 {
            worst = (integral, t);
        }
    }
    let exactness = sampled(from, window, grid);
    Certificate::evaluate(
        LEMMA6_ID,
        worst.0,
        rhs,
        Relation::LessEq,
        vec![NormReport {
            quantity: name.into(),
            value: worst.0,
            exactness,
        }],
        vec![],
        format!("sampled; worst t = {} with integral {}", worst.1, worst.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_constant_and_expressions() {
        let c = CoefficientFn::parse("3").unwrap();
        assert_eq!(c.as_constant(), Some(3.0));
        assert_eq!(c.declared_sup(), Some(3.0));
        assert_eq!(c.declared_inf(), Some(3.0));
        let e = CoefficientFn::parse("2 + 0.5*sin(t)").unwrap();
        assert!(e.as_constant().is_none());
        assert_eq!(e.declared_sup(), None);

        let d = DelayFn::parse("t - 0.1").unwrap();
        assert_eq!(d.form(), &DelayForm::ConstantLag(0.1));
        assert_eq!(d.lag_sup(), Some(0.1));
        assert!(DelayFn::parse("t").unwrap().is_identity());
        assert!(DelayFn::parse("t - 0").unwrap().is_identity());
        assert!(matches!(DelayFn::parse("t - (0.1 + 0.05*sin(t))").unwrap().form(), DelayForm::Expression(_)));
        assert!(DelayFn::parse("t + 1").is_ok());
        assert!(DelayFn::parse("t - -1").is_err());
        assert!(DelayFn::parse("5").is_err());
    }

    #[test]
    fn sup_norm_constant_and_sampled() {
        let r = sup_norm(&CoefficientFn::constant(3.0), "‖a‖", 0.0, 10.0, 10).unwrap();
        assert_eq!(r.value, 3.0);
        assert!(r.exactness.is_exact());
        let r = sup_norm(&CoefficientFn::zero(), "‖a‖", 0.0, 10.0, 10).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.exactness.is_exact());

        let f = CoefficientFn::parse("2 + 0.5*sin(t)").unwrap();
        let r = sup_norm(&f, "‖a‖", 0.0, 100.0, 100_000).unwrap();
        // grid spacing 1e-3: second-order error 0.5 * (5e-4)^2 / 2
        assert!(r.value <= 2.5 && r.value > 2.5 - 1e-7, "{}", r.value);
        assert_eq!(r.exactness, Exactness::Sampled { window: [0.0, 100.0], grid_points: 100_000 });
        let i = ess_inf(&f, "inf a", 0.0, 100.0, 100_000).unwrap();
        assert!((i.value - 1.5).abs() < 1e-7);

        assert!(sup_norm(&f, "x", 0.0, 0.0, 10).is_err());
        assert!(sup_norm(&f, "x", 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn declared_bounds_are_exact() {
        let b = CoefficientFn::parse("1.5 + 0.5*sin(t)").unwrap().with_declared(Some(2.0), Some(1.0));
        let r = sup_norm(&b, "‖b‖", 0.0, 10.0, 10).unwrap();
        assert_eq!(r.value, 2.0);
        assert!(r.exactness.is_exact());
        assert_eq!(ess_inf(&b, "inf b", 0.0, 10.0, 10).unwrap().value, 1.0);
    }

    #[test]
    fn ratio_is_norm_of_quotient() {
        let a = CoefficientFn::parse("2 + sin(t)").unwrap();
        let b = CoefficientFn::parse("2 + sin(t)").unwrap();
        let r = ratio_norm(&b, &a, "‖b/a‖", 0.0, 50.0, 10_000).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
        let r = ratio_norm(&CoefficientFn::constant(2.0), &CoefficientFn::constant(3.0), "‖b/a‖", 0.0, 1.0, 2)
            .unwrap();
        assert_eq!(r.value, 2.0 / 3.0);
        assert!(r.exactness.is_exact());
    }

    #[test]
    fn lag_bounds_cases() {
        let r = lag_bounds(&DelayFn::constant_lag(0.1).unwrap(), 0.0, 1.0, 10).unwrap();
        assert_eq!(r.value, 0.1);
        assert!(r.exactness.is_exact());
        let r = lag_bounds(&DelayFn::identity(), 0.0, 1.0, 10).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.exactness.is_exact());
        let d = DelayFn::parse("t - (0.1 + 0.05*sin(t))").unwrap();
        let r = lag_bounds(&d, 0.0, 100.0, 100_000).unwrap();
        assert!(r.value <= 0.15 && r.value > 0.15 - 1e-7);
        assert!(!r.exactness.is_exact());
        let bad = DelayFn::parse("t + 0.01*sin(t)").unwrap();
        assert!(matches!(lag_bounds(&bad, 0.0, 10.0, 1000), Err(SpecError::FutureDelay { .. })));
    }

    #[test]
    fn lemma6_examples() {
        let c = one_over_e_check(&CoefficientFn::constant(3.0), &DelayFn::constant_lag(0.1).unwrap(), 0.0, 1.0, 2);
        assert!(c.satisfied && c.exactness.is_exact());
        assert!((c.lhs - 0.3).abs() < 1e-15);
        assert!((c.margin - ((-1.0f64).exp() - 0.3)).abs() < 1e-15);
        assert!((c.margin - 0.0679).abs() < 1e-4);
        let c = one_over_e_check(&CoefficientFn::constant(3.0), &DelayFn::constant_lag(0.2).unwrap(), 0.0, 1.0, 2);
        assert!(c.applicable && !c.satisfied);
        let c = one_over_e_check(&CoefficientFn::zero(), &DelayFn::constant_lag(5.0).unwrap(), 0.0, 1.0, 2);
        assert!(c.satisfied);
        let c = one_over_e_check(&CoefficientFn::constant(-1.0), &DelayFn::constant_lag(0.1).unwrap(), 0.0, 1.0, 2);
        assert!(!c.applicable);
    }

    #[test]
    fn lemma6_sampled_agrees_with_closed_form() {
        // ∫_{t-0.1}^t (1 + 0.5 sin s) ds = 0.1 + 0.5 (cos(t-0.1) - cos t), max = 0.1 + sin(0.05)
        let a = CoefficientFn::parse("1 + 0.5*sin(t)").unwrap();
        let g = DelayFn::parse("t - 0.1").unwrap();
        let c = one_over_e_check(&a, &g, 0.0, 20.0, 20_001);
        let exact = 0.1 + (0.05f64).sin();
        assert!(c.satisfied);
        assert!(!c.exactness.is_exact());
        assert!(c.lhs <= exact + 1e-9 && c.lhs > exact - 1e-6, "{} vs {}", c.lhs, exact);
        let neg = CoefficientFn::parse("sin(t)").unwrap();
        assert!(!one_over_e_check(&neg, &g, 0.0, 20.0, 2001).applicable);
    }

    #[test]
    fn json_parse_and_dump() {
        let text = r#"{"form":"mixed","a":3,"b":"2","a1":0.1,"b1":"0.5*cos(t)","g":0.1,"h":"t - 0.2","t0":0}"#;
        let spec = EquationSpec::from_json_str(text).unwrap();
        assert_eq!(spec.form, EquationForm::Mixed);
        assert_eq!(spec.b.as_constant(), Some(2.0));
        assert_eq!(spec.h.form(), &DelayForm::ConstantLag(0.2));
        let dumped = spec.to_json();
        let again = EquationSpec::from_json(&dumped).unwrap();
        assert_eq!(again, spec);
        assert_eq!(again.to_json().to_string(), dumped.to_string());

        let pure = EquationSpec::from_json_str(r#"{"form":"pure_delay","a":3,"b":2,"h":16}"#).unwrap();
        assert!(pure.g.is_identity());
        assert_eq!(pure.h.lag_sup(), Some(16.0));

        for bad in [
            "",
            "[]",
            r#"{"form":"pure_delay","a":3}"#,
            r#"{"form":"pure_delay","a":3,"b":2,"a1":1}"#,
            r#"{"form":"odd","a":3,"b":2}"#,
            r#"{"form":"mixed","a":"3 +","b":2}"#,
            r#"{"form":"mixed","a":3,"b":2,"g":-1}"#,
            r#"{"form":"mixed","a":3,"b":2,"zzz":1}"#,
            r#"{"form":"pure_delay","a":3,"b":2,"g":"t + 1"}"#,
        ] {
            assert!(EquationSpec::from_json_str(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn declared_object_round_trips() {
        let text = r#"{"form":"pure_delay","a":4,"b":{"expr":"1.5 + 0.5*sin(t)","sup":2,"inf":1}}"#;
        let spec = EquationSpec::from_json_str(text).unwrap();
        assert_eq!(spec.b.declared_sup(), Some(2.0));
        let again = EquationSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn default_window_uses_inf_a() {
        let spec = EquationSpec::constant_pure(4.0, 1.0, 0.1, 0.1).unwrap();
        let s = NormSettings::resolve(&spec).unwrap();
        assert_eq!(s.window, 25.0);
        assert_eq!(s.grid, DEFAULT_NORM_GRID);
        let spec = EquationSpec::constant_pure(0.0, 1.0, 0.1, 0.1).unwrap();
        assert_eq!(NormSettings::resolve(&spec).unwrap().window, 100.0);
    }

    proptest! {
        #[test]
        fn sup_norm_monotone_under_nested_refinement(
            amp in 0.1f64..3.0, freq in 0.1f64..20.0, shift in 0.0f64..6.0, n in 2usize..400
        ) {
            let src = format!("1 + {amp}*sin({freq}*t + {shift})");
            let f = CoefficientFn::parse(&src).unwrap();
            let coarse = sup_norm(&f, "x", 0.0, 10.0, n).unwrap().value;
            let fine = sup_norm(&f, "x", 0.0, 10.0, 2 * n - 1).unwrap().value;
            prop_assert!(fine >= coarse);
        }

        #[test]
        fn constant_norms_are_exact(c in -10.0f64..10.0) {
            let f = CoefficientFn::constant(c);
            let r = sup_norm(&f, "x", 0.0, 5.0, 50).unwrap();
            prop_assert!(r.exactness.is_exact());
            prop_assert_eq!(r.value, c.abs());
            prop_assert_eq!(ess_inf(&f, "x", 0.0, 5.0, 50).unwrap().value, c);
            prop_assert_eq!(ess_sup(&f, "x", 0.0, 5.0, 50).unwrap().value, c);
        }

        #[test]
        fn zero_coefficient_passes_lemma6(lag in 0.0f64..100.0) {
            let c = one_over_e_check(&CoefficientFn::zero(), &DelayFn::constant_lag(lag).unwrap(), 0.0, 1.0, 2);
            prop_assert!(c.satisfied);
        }
    }
}
