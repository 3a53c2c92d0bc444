//! Method-of-steps integration of the delay equations, fundamental functions
//! and empirical decay rates.
//!
//! The scheme is classical fixed-step RK4 on `(x, x')`. Delayed values are
//! read from a cubic Hermite interpolant of the solution built so far (the
//! history functions before the start time). A delayed argument that lands
//! inside the step being taken is resolved by fixed-point iteration on the
//! step's end state.

use std::cell::Cell;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::certificate::finite_or_null;
use crate::eqspec::{lag_bounds, CoefficientFn, DelayFn, EquationForm, EquationSpec, SpecError};
use crate::expr::EvalError;
use crate::odebounds::dominant_rate;

pub const DEFAULT_MAX_STEP: f64 = 1e-2;
/// Default step is at most this fraction of the smallest positive lag.
pub const LAG_STEP_FRACTION: f64 = 0.25;
/// Smaller lags are left to the in-step iteration instead of shrinking the step.
pub const MIN_DEFAULT_STEP: f64 = 1e-4;
/// Expression lags whose sampled minimum is below this fraction of their
/// maximum are treated as vanishing.
const VANISHING_LAG_RATIO: f64 = 0.1;
/// Upper bound on the number of steps of one integration.
pub const MAX_STEPS: usize = 20_000_000;
pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const FIXED_POINT_MAX_ITER: usize = 10;
/// `lambda_hat` must exceed this, per characteristic time unit, for a
/// decaying verdict. See [`decay_threshold`].
pub const DECAY_THRESHOLD: f64 = 1e-3;
/// RMS residual of the log-envelope fit above which the fit is not trusted.
pub const RESIDUAL_MAX: f64 = 1.0;
/// Spans shorter than this many characteristic times are inconclusive.
pub const MIN_SPAN_TIMES: f64 = 20.0;
pub const DEFAULT_HORIZON_TIMES: f64 = 40.0;
/// Envelope samples below this fraction of the peak are dropped from the fit.
const ENVELOPE_FLOOR: f64 = 1e-200;
const MAX_FIT_SAMPLES: usize = 2000;
const MAX_TIME_SCALE: f64 = 1e4;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("fixed-point iteration for an in-step delayed value did not converge at t = {t}")]
    FixedPoint { t: f64 },
    #[error("step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("{steps} steps requested, more than the limit of {MAX_STEPS}; increase the step or shorten the horizon")]
    TooManySteps { steps: f64 },
    #[error("horizon {horizon} must exceed the start time {start}")]
    InvalidHorizon { horizon: f64, start: f64 },
}

/// Initial data and forcing for one run, integrated from `spec.t0` to `horizon`.
#[derive(Debug, Clone)]
pub struct InitialValueProblem {
    pub spec: EquationSpec,
    /// `x` before the start time.
    pub phi: CoefficientFn,
    /// `x'` before the start time; need not be the derivative of `phi`.
    pub psi: CoefficientFn,
    pub x0: f64,
    pub x0p: f64,
    pub forcing: CoefficientFn,
    pub horizon: f64,
}

impl InitialValueProblem {
    /// History `phi ≡ x0`, `psi ≡ 0`, no forcing.
    pub fn new(spec: EquationSpec, x0: f64, x0p: f64, horizon: f64) -> Self {
        InitialValueProblem {
            spec,
            phi: CoefficientFn::constant(x0),
            psi: CoefficientFn::zero(),
            x0,
            x0p,
            forcing: CoefficientFn::zero(),
            horizon,
        }
    }

    pub fn with_history(mut self, phi: CoefficientFn, psi: CoefficientFn) -> Self {
        self.phi = phi;
        self.psi = psi;
        self
    }

    pub fn with_forcing(mut self, forcing: CoefficientFn) -> Self {
        self.forcing = forcing;
        self
    }
}

/// Uniform node grid; the last node is the horizon exactly.
#[derive(Debug, Clone, Copy)]
struct Grid {
    start: f64,
    end: f64,
    h: f64,
    steps: usize,
}

impl Grid {
    fn node(&self, k: usize) -> f64 {
        if k >= self.steps {
            self.end
        } else {
            self.start + k as f64 * self.h
        }
    }
}

#[inline]
fn hermite(theta: f64, h: f64, y0: f64, d0: f64, y1: f64, d1: f64) -> f64 {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Dense value on `[start, node(last)]` from stored node data.
fn dense_eval(grid: &Grid, x: &[f64], v: &[f64], acc: &[f64], t: f64) -> (f64, f64) {
    let last = x.len() - 1;
    if last == 0 {
        return (x[0], v[0]);
    }
    let r = ((t - grid.start) / grid.h).floor();
    let k = if r <= 0.0 { 0 } else { (r as usize).min(last - 1) };
    let (ta, tb) = (grid.node(k), grid.node(k + 1));
    if t == tb {
        return (x[k + 1], v[k + 1]);
    }
    if t == ta {
        return (x[k], v[k]);
    }
    let dt = tb - ta;
    let theta = (t - ta) / dt;
    (
        hermite(theta, dt, x[k], v[k], x[k + 1], v[k + 1]),
        hermite(theta, dt, v[k], acc[k], v[k + 1], acc[k + 1]),
    )
}

/// A computed solution with its dense output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Grid,
    x: Vec<f64>,
    v: Vec<f64>,
    acc: Vec<f64>,
    phi: CoefficientFn,
    psi: CoefficientFn,
    time_scale: f64,
}

impl Trajectory {
    pub fn start(&self) -> f64 {
        self.grid.start
    }

    pub fn end(&self) -> f64 {
        self.grid.end
    }

    pub fn step(&self) -> f64 {
        self.grid.h
    }

    /// Number of nodes, including both endpoints.
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn node(&self, k: usize) -> f64 {
        self.grid.node(k)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn dx(&self) -> &[f64] {
        &self.v
    }

    /// Characteristic time of the equation, used to judge whether the span is
    /// long enough for a decay estimate.
    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    /// `(x(t), x'(t))`; the history functions before the start, `None` past
    /// the end or if a history function fails to evaluate.
    pub fn eval(&self, t: f64) -> Option<(f64, f64)> {
        if t < self.grid.start {
            return Some((self.phi.eval(t).ok()?, self.psi.eval(t).ok()?));
        }
        if t > self.grid.end || t.is_nan() {
            return None;
        }
        Some(dense_eval(&self.grid, &self.x, &self.v, &self.acc, t))
    }

    /// CSV with header `t,x,dx`, one row per node.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "dx"])?;
        for k in 0..self.len() {
            w.serialize((self.node(k), self.x[k], self.v[k]))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Slot {
    X,
    V,
}

struct Term<'a> {
    coef: &'a CoefficientFn,
    delay: &'a DelayFn,
    slot: Slot,
}

/// `x'' = f - a0 x' - b0 x - Σ c_i · (x or x')(d_i(t))`.
struct Rhs<'a> {
    a0: Option<&'a CoefficientFn>,
    b0: Option<&'a CoefficientFn>,
    terms: Vec<Term<'a>>,
    forcing: &'a CoefficientFn,
}

impl<'a> Rhs<'a> {
    fn new(spec: &'a EquationSpec, forcing: &'a CoefficientFn) -> Self {
        let mut terms = Vec::new();
        let (a0, b0) = match spec.form {
            EquationForm::PureDelay => {
                terms.push(Term { coef: &spec.a, delay: &spec.g, slot: Slot::V });
                terms.push(Term { coef: &spec.b, delay: &spec.h, slot: Slot::X });
                (None, None)
            }
            EquationForm::Mixed => {
                if let Some(a1) = spec.a1.as_ref() {
                    terms.push(Term { coef: a1, delay: &spec.g, slot: Slot::V });
                }
                if let Some(b1) = spec.b1.as_ref() {
                    terms.push(Term { coef: b1, delay: &spec.h, slot: Slot::X });
                }
                (Some(&spec.a), Some(&spec.b))
            }
        };
        terms.retain(|t| !t.coef.is_zero());
        Rhs {
            a0: a0.filter(|c| !c.is_zero()),
            b0: b0.filter(|c| !c.is_zero()),
            terms,
            forcing,
        }
    }

    fn accel<L>(&self, t: f64, x: f64, v: f64, lookup: &L) -> Result<f64, SolverError>
    where
        L: Fn(f64) -> Result<(f64, f64), SolverError>,
    {
        let mut acc = self.forcing.eval(t)?;
        if let Some(a) = self.a0 {
            acc -= a.eval(t)? * v;
        }
        if let Some(b) = self.b0 {
            acc -= b.eval(t)? * x;
        }
        for term in &self.terms {
            let (xd, vd) = if term.delay.is_identity() {
                (x, v)
            } else {
                let td = term.delay.eval(t)?;
                if td == t {
                    (x, v)
                } else {
                    lookup(td)?
                }
            };
            let val = match term.slot {
                Slot::X => xd,
                Slot::V => vd,
            };
            acc -= term.coef.eval(t)? * val;
        }
        Ok(acc)
    }
}

/// Predicted end state of the step in progress.
#[derive(Clone, Copy)]
struct Guess {
    x: f64,
    v: f64,
    acc: f64,
}

struct Builder<'a> {
    grid: Grid,
    x: Vec<f64>,
    v: Vec<f64>,
    acc: Vec<f64>,
    phi: &'a CoefficientFn,
    psi: &'a CoefficientFn,
    in_step: Cell<bool>,
}

impl Builder<'_> {
    fn lookup(&self, td: f64, guess: Option<&Guess>) -> Result<(f64, f64), SolverError> {
        if td < self.grid.start {
            return Ok((self.phi.eval(td)?, self.psi.eval(td)?));
        }
        let n = self.x.len() - 1;
        let tn = self.grid.node(n);
        if td <= tn {
            return Ok(dense_eval(&self.grid, &self.x, &self.v, &self.acc, td));
        }
        self.in_step.set(true);
        let g = guess.expect("in-step lookups only happen while stepping");
        let dt = self.grid.node(n + 1) - tn;
        let theta = ((td - tn) / dt).min(1.0);
        Ok((
            hermite(theta, dt, self.x[n], self.v[n], g.x, g.v),
            hermite(theta, dt, self.v[n], self.acc[n], g.v, g.acc),
        ))
    }
}

fn check_step(step: f64) -> Result<(), SolverError> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(SolverError::InvalidStep(step))
    }
}

/// Integrate the initial value problem with steps of at most `step`.
///
/// The step is shrunk so that a whole number of steps ends exactly at the
/// horizon.
pub fn integrate(ivp: &InitialValueProblem, step: f64) -> Result<Trajectory, SolverError> {
    check_step(step)?;
    let start = ivp.spec.t0;
    if ivp.horizon.is_nan() || ivp.horizon <= start || !ivp.horizon.is_finite() {
        return Err(SolverError::InvalidHorizon { horizon: ivp.horizon, start });
    }
    let steps = ((ivp.horizon - start) / step).ceil().max(1.0);
    if steps > MAX_STEPS as f64 {
        return Err(SolverError::TooManySteps { steps });
    }
    let steps = steps as usize;
    let grid = Grid {
        start,
        end: ivp.horizon,
        h: (ivp.horizon - start) / steps as f64,
        steps,
    };
    let rhs = Rhs::new(&ivp.spec, &ivp.forcing);
    let mut b = Builder {
        grid,
        x: Vec::with_capacity(steps + 1),
        v: Vec::with_capacity(steps + 1),
        acc: Vec::with_capacity(steps + 1),
        phi: &ivp.phi,
        psi: &ivp.psi,
        in_step: Cell::new(false),
    };
    b.x.push(ivp.x0);
    b.v.push(ivp.x0p);
    b.acc.push(0.0);
    let a_start = rhs.accel(start, ivp.x0, ivp.x0p, &|td| b.lookup(td, None))?;
    b.acc[0] = a_start;

    for n in 0..steps {
        let (t, t1) = (grid.node(n), grid.node(n + 1));
        let h = t1 - t;
        let (xn, vn, an) = (b.x[n], b.v[n], b.acc[n]);
        let mut guess = Guess {
            x: xn + h * vn + 0.5 * h * h * an,
            v: vn + h * an,
            acc: an,
        };
        let mut accepted = None;
        for _ in 0..FIXED_POINT_MAX_ITER {
            b.in_step.set(false);
            let g = guess;
            let look = |td: f64| b.lookup(td, Some(&g));
            let tm = t + 0.5 * h;
            let (x2, v2) = (xn + 0.5 * h * vn, vn + 0.5 * h * an);
            let a2 = rhs.accel(tm, x2, v2, &look)?;
            let (x3, v3) = (xn + 0.5 * h * v2, vn + 0.5 * h * a2);
            let a3 = rhs.accel(tm, x3, v3, &look)?;
            let (x4, v4) = (xn + h * v3, vn + h * a3);
            let a4 = rhs.accel(t1, x4, v4, &look)?;
            let x1 = xn + h / 6.0 * (vn + 2.0 * v2 + 2.0 * v3 + v4);
            let v1 = vn + h / 6.0 * (an + 2.0 * a2 + 2.0 * a3 + a4);
            let a1 = rhs.accel(t1, x1, v1, &look)?;
            let next = Guess { x: x1, v: v1, acc: a1 };
            if !b.in_step.get() {
                accepted = Some(next);
                break;
            }
            let scale = x1.abs() + v1.abs();
            let converged = (x1 - g.x).abs() + (v1 - g.v).abs() <= FIXED_POINT_TOL * scale + f64::MIN_POSITIVE
                && (a1 - g.acc).abs() <= FIXED_POINT_TOL * scale.max(a1.abs()) + f64::MIN_POSITIVE;
            guess = next;
            if converged {
                accepted = Some(next);
                break;
            }
        }
        let s = accepted.ok_or(SolverError::FixedPoint { t })?;
        b.x.push(s.x);
        b.v.push(s.v);
        b.acc.push(s.acc);
    }

    Ok(Trajectory {
        grid,
        x: b.x,
        v: b.v,
        acc: b.acc,
        phi: ivp.phi.clone(),
        psi: ivp.psi.clone(),
        time_scale: characteristic_time(&ivp.spec),
    })
}

/// `X(·, s)`: zero before `s`, `X(s, s) = 0`, `X'(s, s) = 1`.
pub fn fundamental_function(spec: &EquationSpec, s: f64, horizon: f64, step: f64) -> Result<Trajectory, SolverError> {
    if s.is_nan() || s < spec.t0 {
        return Err(SpecError::Invalid(format!("fundamental function needs s ≥ t0 = {}, got {s}", spec.t0)).into());
    }
    let mut shifted = spec.clone();
    shifted.t0 = s;
    let ivp = InitialValueProblem::new(shifted, 0.0, 1.0, horizon).with_history(CoefficientFn::zero(), CoefficientFn::zero());
    integrate(&ivp, step)
}

fn mean_over(f: &CoefficientFn, from: f64) -> Option<f64> {
    if let Some(c) = f.as_constant() {
        return Some(c);
    }
    let n = 1001;
    let mut sum = 0.0;
    for k in 0..n {
        sum += f.eval(from + 100.0 * k as f64 / (n - 1) as f64).ok()?;
    }
    Some(sum / n as f64)
}

fn lag_sup(d: &DelayFn, from: f64) -> f64 {
    d.lag_sup()
        .or_else(|| lag_bounds(d, from, 100.0, 1001).ok().map(|r| r.value))
        .unwrap_or(0.0)
}

/// Rough characteristic time: the slowest mode of the undelayed equation with
/// averaged coefficients, or the largest lag if that is longer.
pub fn characteristic_time(spec: &EquationSpec) -> f64 {
    let t0 = spec.t0;
    let mean = |f: &CoefficientFn| mean_over(f, t0).unwrap_or(0.0);
    let (mut a, mut b) = (mean(&spec.a), mean(&spec.b));
    if spec.form == EquationForm::Mixed {
        a += mean(&spec.a1_or_zero());
        b += mean(&spec.b1_or_zero());
    }
    let modal = if a > 0.0 && b > 0.0 {
        1.0 / dominant_rate(a, b).abs()
    } else {
        1.0
    };
    let lag = lag_sup(&spec.g, t0).max(lag_sup(&spec.h, t0));
    modal.max(lag).min(MAX_TIME_SCALE)
}

pub fn default_horizon(spec: &EquationSpec) -> f64 {
    spec.t0 + DEFAULT_HORIZON_TIMES * characteristic_time(spec)
}

/// `min(10⁻², smallest positive lag / 4)`, never below [`MIN_DEFAULT_STEP`].
///
/// Expression lags that come close to zero do not count: those are handled
/// by the in-step iteration.
pub fn default_step(spec: &EquationSpec) -> f64 {
    let mut step = DEFAULT_MAX_STEP;
    for d in [&spec.g, &spec.h] {
        let lag = match d.constant_lag_value() {
            Some(l) => l,
            None => {
                // lag range on a sample of the first 100 time units
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for k in 0..=1000 {
                    let t = spec.t0 + 0.1 * k as f64;
                    if let Ok(g) = d.eval_raw(t) {
                        lo = lo.min(t - g);
                        hi = hi.max(t - g);
                    }
                }
                if lo < VANISHING_LAG_RATIO * hi {
                    0.0
                } else {
                    lo
                }
            }
        };
        if lag > 0.0 && lag.is_finite() {
            step = step.min(LAG_STEP_FRACTION * lag);
        }
    }
    step.max(MIN_DEFAULT_STEP)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayVerdict {
    Decaying,
    NotDecaying,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayEstimate {
    /// Fitted exponential rate; `+∞` (serialized as null with
    /// `lambda_unbounded`) for the zero solution.
    #[serde(serialize_with = "finite_or_null")]
    pub lambda_hat: f64,
    pub lambda_unbounded: bool,
    #[serde(serialize_with = "finite_or_null")]
    pub m_hat: f64,
    pub fit_window: [f64; 2],
    /// RMS residual of the fit to `ln(|x| + |x'|)`.
    pub residual: f64,
    pub envelope_points: usize,
    /// Rate `lambda_hat` had to beat.
    pub threshold: f64,
    pub verdict: DecayVerdict,
}

/// Least-squares fit of `ln(|x| + |x'|)` over the last half of the span, on
/// local maxima when there are enough of them and on all samples otherwise.
/// Rate threshold for a trajectory with the given characteristic time:
/// [`DECAY_THRESHOLD`] for time scales up to 1, shrinking in proportion
/// beyond that so slow but genuine decay is not reported as stagnation.
pub fn decay_threshold(time_scale: f64) -> f64 {
    DECAY_THRESHOLD / time_scale.max(1.0)
}

pub fn estimate_decay(traj: &Trajectory) -> DecayEstimate {
    let threshold = decay_threshold(traj.time_scale);
    let n = traj.len();
    let e: Vec<f64> = (0..n).map(|k| traj.x[k].abs() + traj.v[k].abs()).collect();
    let peak = e.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return DecayEstimate {
            lambda_hat: f64::INFINITY,
            lambda_unbounded: true,
            m_hat: 0.0,
            fit_window: [traj.start(), traj.end()],
            residual: 0.0,
            envelope_points: 0,
            threshold,
            verdict: DecayVerdict::Decaying,
        };
    }
    let span = traj.end() - traj.start();
    let conclusive_span = span >= MIN_SPAN_TIMES * traj.time_scale;

    let floor = peak * ENVELOPE_FLOOR;
    let last = e.iter().rposition(|&v| v >= floor).unwrap_or(0);
    let t_end = traj.node(last);
    let t_mid = traj.start() + 0.5 * (t_end - traj.start());
    let first = (0..=last).find(|&k| traj.node(k) >= t_mid).unwrap_or(0);

    let mut pts: Vec<(f64, f64)> = (first.max(1)..last.min(n - 2) + 1)
        .filter(|&k| e[k] > e[k - 1] && e[k] >= e[k + 1] && e[k] > 0.0)
        .map(|k| (traj.node(k), e[k].ln()))
        .collect();
    if pts.len() < 4 {
        let count = last + 1 - first;
        let stride = count.div_ceil(MAX_FIT_SAMPLES).max(1);
        pts = (first..=last)
            .step_by(stride)
            .filter(|&k| e[k] > 0.0)
            .map(|k| (traj.node(k), e[k].ln()))
            .collect();
    }
    if pts.len() < 2 {
        // collapsed below the floor almost at once
        pts = (0..=last.max(1).min(n - 1))
            .filter(|&k| e[k] > 0.0)
            .map(|k| (traj.node(k), e[k].ln()))
            .collect();
    }
    let (slope, residual) = line_fit(&pts);
    let lambda = -slope;
    let m_hat = (0..n)
        .map(|k| e[k] * (lambda * (traj.node(k) - traj.start())).exp())
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let verdict = if !conclusive_span || !lambda.is_finite() {
        DecayVerdict::Inconclusive
    } else if lambda <= threshold {
        DecayVerdict::NotDecaying
    } else if residual < RESIDUAL_MAX {
        DecayVerdict::Decaying
    } else {
        DecayVerdict::Inconclusive
    };
    DecayEstimate {
        lambda_hat: lambda,
        lambda_unbounded: false,
        m_hat,
        fit_window: [pts.first().map_or(t_mid, |p| p.0), pts.last().map_or(t_end, |p| p.0)],
        residual,
        envelope_points: pts.len(),
        threshold,
        verdict,
    }
}

/// `(slope, rms residual)`.
fn line_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut sty) = (0.0, 0.0);
    for &(t, y) in pts {
        stt += (t - mt) * (t - mt);
        sty += (t - mt) * (y - my);
    }
    let slope = sty / stt;
    let intercept = my - slope * mt;
    let ss: f64 = pts.iter().map(|&(t, y)| (y - intercept - slope * t).powi(2)).sum();
    (slope, (ss / n).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct VocReport {
    pub max_residual: f64,
    pub check_points: usize,
    pub spacing: f64,
}

/// Default spacing of the check grid for [`verify_variation_of_constants`].
pub const VOC_SPACING: f64 = 0.01;

/// Compare the forced solution with zero data against `∫ X(t, s) f(s) ds`
/// (composite Simpson over a check grid of columns `X(·, s_k)`). Returns the
/// largest discrepancy on the check grid.
pub fn verify_variation_of_constants(
    spec: &EquationSpec,
    forcing: &CoefficientFn,
    horizon: f64,
    step: f64,
) -> Result<VocReport, SolverError> {
    check_step(step)?;
    let t0 = spec.t0;
    let ivp = InitialValueProblem::new(spec.clone(), 0.0, 0.0, horizon)
        .with_history(CoefficientFn::zero(), CoefficientFn::zero())
        .with_forcing(forcing.clone());
    let forced = integrate(&ivp, step)?;
    let intervals = ((horizon - t0) / VOC_SPACING.max(step)).ceil().max(1.0) as usize;
    let spacing = (horizon - t0) / intervals as f64;
    let s_grid: Vec<f64> = (0..=intervals)
        .map(|k| if k == intervals { horizon } else { t0 + k as f64 * spacing })
        .collect();
    let fs: Vec<f64> = s_grid.iter().map(|&s| forcing.eval(s)).collect::<Result<_, _>>()?;

    // x_conv[j] accumulates Σ_k w_jk X(t_j, s_k) f(s_k)
    let mut conv = vec![0.0; intervals + 1];
    for k in 0..intervals {
        if fs[k] == 0.0 {
            continue;
        }
        let col = fundamental_function(spec, s_grid[k], horizon, step)?;
        for j in k + 1..=intervals {
            let w = simpson_weight(j, k);
            if w != 0.0 {
                let (xv, _) = col.eval(s_grid[j]).expect("inside the column span");
                conv[j] += w * spacing * xv * fs[k];
            }
        }
    }
    let mut max_residual: f64 = 0.0;
    for j in 0..=intervals {
        let (x, _) = forced.eval(s_grid[j]).expect("inside the forced span");
        max_residual = max_residual.max((x - conv[j]).abs());
    }
    Ok(VocReport {
        max_residual,
        check_points: intervals + 1,
        spacing,
    })
}

/// Weight (in units of the spacing) of node `k` in a composite rule over
/// nodes `0..=j`: Simpson, closing with 3/8 when `j` is odd, trapezoid for `j = 1`.
fn simpson_weight(j: usize, k: usize) -> f64 {
    if j == 1 {
        return 0.5;
    }
    let (simpson_end, tail) = if j.is_multiple_of(2) { (j, false) } else { (j - 3, true) };
    let mut w = 0.0;
    if k <= simpson_end && simpson_end > 0 {
        w += if k == 0 || k == simpson_end {
            1.0 / 3.0
        } else if k % 2 == 1 {
            4.0 / 3.0
        } else {
            2.0 / 3.0
        };
    }
    if tail && k >= simpson_end {
        let i = k - simpson_end;
        w += if i == 0 || i == 3 { 3.0 / 8.0 } else { 9.0 / 8.0 };
    }
    w
}

/// Empirical positivity check for the fundamental function `Z(t, s)` of
/// `z'(t) + a(t) z(g(t)) = 0`, at `s = t0 + k (T − t0)/4`, `k = 0..3`.
///
/// `Z` is computed as the derivative of the fundamental function of
/// `x'' + a(t) x'(g(t)) = 0`. Values that have decayed below `10⁻²⁰⁰` of the
/// initial unit are not inspected.
pub fn first_order_positivity_probe(
    a: &CoefficientFn,
    g: &DelayFn,
    t0: f64,
    horizon: f64,
    step: f64,
) -> Result<bool, SolverError> {
    let mut spec = EquationSpec::pure_delay(a.clone(), CoefficientFn::zero(), g.clone(), DelayFn::identity());
    spec.t0 = t0;
    for k in 0..4 {
        let s = t0 + k as f64 * (horizon - t0) / 4.0;
        let z = fundamental_function(&spec, s, horizon, step)?;
        for &v in z.dx() {
            if v.abs() < ENVELOPE_FLOOR {
                break;
            }
            if v <= 0.0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
