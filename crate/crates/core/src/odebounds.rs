//! Integral bounds for the fundamental function `Y(t,s)` of the undelayed
//! comparison equation `x'' + a(t) x' + b(t) x = 0`:
//!
//! ```text
//! Y  ≥ sup_t ∫ |Y(t,s)| ds        Y' ≥ sup_t ∫ |∂_t Y(t,s)| ds
//! ```
//!
//! Closed forms cover constant `a, b > 0` in the three discriminant cases; for
//! time-varying coefficients with `(inf a)² ≥ 4 sup b` the kernel is positive
//! and `∫ Y(t,s) b(s) ds ≤ 1` yields `Y = 1 / inf b` (no `Y'` available).

use serde::Serialize;
use thiserror::Error;

use crate::certificate::{Certificate, NormReport, Relation};
use crate::eqspec::{ess_inf, ess_sup, EquationSpec, NormSettings, SpecError};

/// Relative width of the band around `a² = 4b` treated as critical damping.
pub const DISCRIMINANT_RTOL: f64 = 1e-12;

pub const LEMMA7_ID: &str = "Lem7";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingCase {
    /// `a² > 4b`
    Overdamped,
    /// `a² < 4b`
    Underdamped,
    /// `a² = 4b`
    Critical,
    /// Time-varying coefficients under `(inf a)² ≥ 4 sup b`.
    Lemma7,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeBounds {
    pub y: f64,
    /// Absent for [`DampingCase::Lemma7`].
    pub yp: Option<f64>,
    pub case: DampingCase,
    pub provenance: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum OdeBoundsError {
    #[error("comparison coefficients must be positive (a = {a}, b = {b})")]
    NonPositive { a: f64, b: f64 },
    #[error("horizon {horizon} is shorter than 20 decay times ({needed})")]
    HorizonTooShort { horizon: f64, needed: f64 },
    #[error("tail beyond the horizon is not negligible (estimate {tail:e})")]
    TailTooLarge { tail: f64 },
    #[error("integration failed: {0}")]
    Integration(String),
}

pub fn classify(a: f64, b: f64) -> DampingCase {
    let d = a * a - 4.0 * b;
    if d.abs() <= DISCRIMINANT_RTOL * (a * a).max(4.0 * b) {
        DampingCase::Critical
    } else if d > 0.0 {
        DampingCase::Overdamped
    } else {
        DampingCase::Underdamped
    }
}

/// Closed-form bounds for constant `a, b > 0`.
pub fn lemma2_bounds(a: f64, b: f64) -> Result<OdeBounds, OdeBoundsError> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(OdeBoundsError::NonPositive { a, b });
    }
    let case = classify(a, b);
    let (y, yp, provenance) = match case {
        DampingCase::Overdamped => {
            let s = (a * a - 4.0 * b).sqrt();
            (1.0 / b, 2.0 * a / (s * (a - s)), "Y = 1/b, Y' = 2a/(√(a²−4b)(a−√(a²−4b)))")
        }
        DampingCase::Underdamped => {
            let s = (4.0 * b - a * a).sqrt();
            (4.0 / (a * s), 2.0 * (a + s) / (a * s), "Y = 4/(a√(4b−a²)), Y' = 2(a+√(4b−a²))/(a√(4b−a²))")
        }
        DampingCase::Critical => (1.0 / b, 2.0 / b.sqrt(), "Y = 1/b, Y' = 2/√b"),
        DampingCase::Lemma7 => unreachable!(),
    };
    Ok(OdeBounds {
        y,
        yp: Some(yp),
        case,
        provenance: provenance.into(),
    })
}

/// The `(inf a)² ≥ 4 sup b` gate with `inf a > 0`, `inf b > 0`, on `[from, ∞)`.
pub fn lemma7_gate(spec: &EquationSpec, settings: &NormSettings, from: f64) -> Result<Certificate, SpecError> {
    let (w, n) = (settings.window, settings.grid);
    let inf_a = ess_inf(&spec.a, "inf a", from, w, n)?;
    let inf_b = ess_inf(&spec.b, "inf b", from, w, n)?;
    let sup_b = ess_sup(&spec.b, "sup b", from, w, n)?;
    let narrative = format!(
        "positive comparison kernel needs inf a > 0, inf b > 0, (inf a)² ≥ 4 sup b: inf a = {}, inf b = {}, sup b = {}",
        inf_a.value, inf_b.value, sup_b.value
    );
    if !(inf_a.value > 0.0 && inf_b.value > 0.0) {
        let mut c = Certificate::inapplicable(LEMMA7_ID, narrative);
        c.inputs = vec![inf_a, inf_b, sup_b];
        return Ok(c);
    }
    let lhs = 4.0 * sup_b.value;
    let rhs = inf_a.value * inf_a.value;
    Ok(Certificate::evaluate(
        LEMMA7_ID,
        lhs,
        rhs,
        Relation::LessEq,
        vec![inf_a, inf_b, sup_b],
        vec![],
        narrative,
    ))
}

/// `Y = 1 / inf b` when the gate holds: `Y ≥ 0` and `∫ Y b ≤ 1` with
/// `b ≥ inf b` give `∫ Y ≤ 1 / inf b`.
pub fn lemma7_bounds(gate: &Certificate) -> Option<OdeBounds> {
    if !gate.satisfied {
        return None;
    }
    let inf_b = gate.inputs.iter().find(|r| r.quantity == "inf b")?.value;
    Some(OdeBounds {
        y: 1.0 / inf_b,
        yp: None,
        case: DampingCase::Lemma7,
        provenance: "Y(t,s) ≥ 0 and ∫Y(t,s)b(s)ds ≤ 1 with b ≥ inf b give Y = 1/inf b".into(),
    })
}

impl OdeBounds {
    pub fn reports(&self) -> Vec<NormReport> {
        let mut v = vec![NormReport::exact("Y", self.y)];
        if let Some(yp) = self.yp {
            v.push(NormReport::exact("Y'", yp));
        }
        v
    }
}

/// Numerically integrated `∫|Y(u)|du` and `∫|Y'(u)|du` for constant coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelIntegrals {
    pub y: f64,
    pub yp: f64,
    pub horizon: f64,
    pub tail_estimate: f64,
}

const QUAD_ATOL: f64 = 1e-9;
const TAIL_TOL: f64 = 1e-7;

/// Real part of the rightmost root of `s² + a s + b`.
pub fn dominant_rate(a: f64, b: f64) -> f64 {
    let d = a * a - 4.0 * b;
    if d > 0.0 {
        // (-a + √d)/2 written to avoid cancellation
        -2.0 * b / (a + d.sqrt())
    } else {
        -0.5 * a
    }
}

/// Integrate `y'' + a y' + b y = 0`, `y(0) = 0`, `y'(0) = 1` to `horizon` with
/// an adaptive Dormand–Prince scheme and accumulate `∫|y|`, `∫|y'|`.
///
/// `∫|y|` is the sum of `|Δz|` over sign-constant segments of `y`, where
/// `z' = y` is integrated alongside; `∫|y'|` is the total variation of `y`,
/// the sum of `|Δy|` between its extrema.
pub fn quadrature_y(a: f64, b: f64, horizon: f64) -> Result<KernelIntegrals, OdeBoundsError> {
    if !(a > 0.0 && b > 0.0) {
        return Err(OdeBoundsError::NonPositive { a, b });
    }
    let rate = dominant_rate(a, b).abs();
    let needed = 20.0 / rate;
    if horizon.is_nan() || horizon < needed {
        return Err(OdeBoundsError::HorizonTooShort { horizon, needed });
    }
    let rhs = |s: &[f64; 3]| [s[1], -a * s[1] - b * s[0], s[0]];
    let mut t = 0.0;
    let mut state = [0.0, 1.0, 0.0];
    let mut deriv = rhs(&state);
    let mut h = (0.01 / rate).min(0.01 / b.sqrt()).min(0.1);

    // running segment anchors
    let mut int_y = 0.0;
    let mut z_anchor = 0.0;
    let mut int_yp = 0.0;
    let mut y_anchor = 0.0;

    let mut steps = 0usize;
    while t < horizon {
        steps += 1;
        if steps > 50_000_000 {
            return Err(OdeBoundsError::Integration("step budget exhausted".into()));
        }
        let h_try = h.min(horizon - t);
        let (next, err) = dopri_step(&rhs, &state, &deriv, h_try);
        // slow modes amplify per-step noise in the tail estimate by 1/rate²
        let scale = QUAD_ATOL * rate.min(1.0).powi(2);
        let err_norm = err.iter().map(|e| e.abs() / scale).fold(0.0, f64::max);
        if err_norm > 1.0 {
            h = h_try * (0.9 * err_norm.powf(-0.2)).max(0.2);
            if h < 1e-14 {
                return Err(OdeBoundsError::Integration("step size underflow".into()));
            }
            continue;
        }
        let next_deriv = rhs(&next);
        let interp = Hermite {
            t0: t,
            h: h_try,
            s0: state,
            d0: deriv,
            s1: next,
            d1: next_deriv,
        };
        // zero of y closes a segment of ∫|y|
        if sign_change(state[0], next[0]) {
            let tz = interp.root(0);
            let z = interp.eval(2, tz);
            int_y += (z - z_anchor).abs();
            z_anchor = z;
        }
        // zero of y' closes a segment of ∫|y'|
        if sign_change(state[1], next[1]) {
            let tz = interp.root(1);
            let y = interp.eval(0, tz);
            int_yp += (y - y_anchor).abs();
            y_anchor = y;
        }
        t += h_try;
        state = next;
        deriv = next_deriv;
        let grow = if err_norm == 0.0 { 5.0 } else { (0.9 * err_norm.powf(-0.2)).min(5.0) };
        h = h_try * grow;
    }
    int_y += (state[2] - z_anchor).abs();
    int_yp += (state[0] - y_anchor).abs();

    let tail = 2.0 * (state[0].abs() + state[1].abs()) * (1.0 + 1.0 / rate) / rate;
    if tail > TAIL_TOL {
        return Err(OdeBoundsError::TailTooLarge { tail });
    }
    Ok(KernelIntegrals {
        y: int_y,
        yp: int_yp,
        horizon,
        tail_estimate: tail,
    })
}

/// Default horizon for [`quadrature_y`]: 60 decay times.
pub fn default_quadrature_horizon(a: f64, b: f64) -> f64 {
    60.0 / dominant_rate(a, b).abs()
}

fn sign_change(u: f64, v: f64) -> bool {
    (u > 0.0 && v <= 0.0) || (u < 0.0 && v >= 0.0)
}

struct Hermite {
    t0: f64,
    h: f64,
    s0: [f64; 3],
    d0: [f64; 3],
    s1: [f64; 3],
    d1: [f64; 3],
}

impl Hermite {
    fn eval(&self, k: usize, t: f64) -> f64 {
        let s = (t - self.t0) / self.h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.s0[k] + h10 * self.h * self.d0[k] + h01 * self.s1[k] + h11 * self.h * self.d1[k]
    }

    /// Root of component `k` inside the step by bisection.
    fn root(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = (self.t0, self.t0 + self.h);
        let f_lo = self.s0[k];
        if self.s1[k] == 0.0 {
            return hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (self.eval(k, mid) > 0.0) == (f_lo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// One Dormand–Prince 5(4) step; returns the 5th-order state and the error
/// estimate.
fn dopri_step<F>(f: &F, y: &[f64; 3], k1: &[f64; 3], h: f64) -> ([f64; 3], [f64; 3])
where
    F: Fn(&[f64; 3]) -> [f64; 3],
{
    let add = |coeffs: &[(f64, &[f64; 3])]| {
        let mut out = *y;
        for (c, k) in coeffs {
            for i in 0..3 {
                out[i] += h * c * k[i];
            }
        }
        out
    };
    let k2 = f(&add(&[(1.0 / 5.0, k1)]));
    let k3 = f(&add(&[(3.0 / 40.0, k1), (9.0 / 40.0, &k2)]));
    let k4 = f(&add(&[(44.0 / 45.0, k1), (-56.0 / 15.0, &k2), (32.0 / 9.0, &k3)]));
    let k5 = f(&add(&[
        (19372.0 / 6561.0, k1),
        (-25360.0 / 2187.0, &k2),
        (64448.0 / 6561.0, &k3),
        (-212.0 / 729.0, &k4),
    ]));
    let k6 = f(&add(&[
        (9017.0 / 3168.0, k1),
        (-355.0 / 33.0, &k2),
        (46732.0 / 5247.0, &k3),
        (49.0 / 176.0, &k4),
        (-5103.0 / 18656.0, &k5),
    ]));
    let y5 = add(&[
        (35.0 / 384.0, k1),
        (500.0 / 1113.0, &k3),
        (125.0 / 192.0, &k4),
        (-2187.0 / 6784.0, &k5),
        (11.0 / 84.0, &k6),
    ]);
    let k7 = f(&y5);
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let ks = [k1, &k2, &k3, &k4, &k5, &k6, &k7];
    let mut err = [0.0; 3];
    for i in 0..3 {
        err[i] = h * ks.iter().zip(E).map(|(k, e)| e * k[i]).sum::<f64>();
    }
    (y5, err)
}
