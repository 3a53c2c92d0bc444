//! Exponential stability certificates for second-order linear delay
//! differential equations with damping,
//!
//! ```text
//! x''(t) + a(t) x'(g(t)) + b(t) x(h(t)) = 0
//! x''(t) + a(t) x'(t) + b(t) x(t) + a1(t) x'(g(t)) + b1(t) x(h(t)) = 0
//! ```
//!
//! together with a method-of-steps integrator used to cross-check every
//! verdict numerically.

pub mod certificate;
pub mod cli;
pub mod criteria;
pub mod eqspec;
pub mod expr;
pub mod quadrature;
pub mod solver;
pub mod sweep;
pub mod odebounds;
