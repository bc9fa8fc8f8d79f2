//! Upper bounds for the initial value of a nonnegative function obeying
//! `ζ(t) ≥ c1 + c2 ∫_{t_*}^t s^{-α} ζ(s)^β ds` on `[t_*, T)`.
//!
//! The bounds come from comparison with the ODE `ζ' = c2 t^{-α} ζ^β`,
//! `ζ(t_*) = c1`, which blows up at the time where
//! `c1^{1-β}/(β-1) = c2 ∫_{t_*}^{t} s^{-α} ds`.

use crate::error::{domain, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegralInequalityInstance {
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub t_star: f64,
    pub horizon: f64,
}

impl IntegralInequalityInstance {
    pub fn new(c1: f64, c2: f64, alpha: f64, beta: f64, t_star: f64, horizon: f64) -> Result<Self> {
        if !(beta > 1.0) {
            return domain(format!("β must exceed 1, got {beta}"));
        }
        if !(c1 > 0.0 && c2 > 0.0) {
            return domain("c1 and c2 must be positive");
        }
        if !(alpha >= 0.0) {
            return domain(format!("α must be nonnegative, got {alpha}"));
        }
        if !(horizon > 0.0 && t_star > 0.0 && t_star < 0.5 * horizon) {
            return domain(format!("need 0 < t_* < T/2, got t_* = {t_star}, T = {horizon}"));
        }
        Ok(IntegralInequalityInstance { c1, c2, alpha, beta, t_star, horizon })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InequalityBound {
    /// `C(α,β) c2^{-1/(β-1)} t_*^{(α-1)/(β-1)}`.
    pub general: f64,
    /// `(c2(β-1))^{-1/(β-1)} [log(T/(2t_*))]^{-1/(β-1)}`, only for `α = 1`.
    pub log_form: Option<f64>,
}

/// `∫_{t_*}^{t} s^{-α} ds`.
fn weight_integral(alpha: f64, t_star: f64, t: f64) -> f64 {
    if (alpha - 1.0).abs() < 1e-12 {
        (t / t_star).ln()
    } else {
        (t.powf(1.0 - alpha) - t_star.powf(1.0 - alpha)) / (1.0 - alpha)
    }
}

/// `C(α,β) = [(β-1)(2^{1-α}-1)/(1-α)]^{-1/(β-1)}`, from comparison on `[t_*, 2t_*]`;
/// the `α = 1` value is the limit `[(β-1) log 2]^{-1/(β-1)}`.
pub fn general_constant(alpha: f64, beta: f64) -> f64 {
    let g = weight_integral(alpha, 1.0, 2.0);
    ((beta - 1.0) * g).powf(-1.0 / (beta - 1.0))
}

pub fn integral_inequality_bound(inst: &IntegralInequalityInstance) -> Result<InequalityBound> {
    let IntegralInequalityInstance { c2, alpha, beta, t_star, horizon, .. } = *inst;
    if !(beta > 1.0) {
        return domain(format!("β must exceed 1, got {beta}"));
    }
    let e = -1.0 / (beta - 1.0);
    let general = general_constant(alpha, beta) * c2.powf(e) * t_star.powf((alpha - 1.0) / (beta - 1.0));
    let log_form = ((alpha - 1.0).abs() < 1e-12)
        .then(|| (c2 * (beta - 1.0)).powf(e) * (horizon / (2.0 * t_star)).ln().powf(e));
    Ok(InequalityBound { general, log_form })
}

/// Blow-up time of the comparison ODE, or `None` if it stays finite forever.
pub fn comparison_blowup_time(inst: &IntegralInequalityInstance) -> Option<f64> {
    let IntegralInequalityInstance { c1, c2, alpha, beta, t_star, .. } = *inst;
    let need = c1.powf(1.0 - beta) / ((beta - 1.0) * c2);
    if (alpha - 1.0).abs() < 1e-12 {
        return Some(t_star * need.exp());
    }
    // t^{1-α} = t_*^{1-α} + (1-α) need
    let v = t_star.powf(1.0 - alpha) + (1.0 - alpha) * need;
    if v <= 0.0 {
        return None;
    }
    Some(v.powf(1.0 / (1.0 - alpha)))
}
