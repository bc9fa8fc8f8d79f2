//! Free fractional heat kernel: the density of the rotationally symmetric
//! θ-stable process, `exp(-t|ξ|^θ)` in Fourier variables.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::quad::{integrate_pts, Tolerance};
use crate::special::{gamma, ln_gamma, sphere_area};

/// Radius (in units of `t^{1/θ}`) beyond which the heavy-tail series is used.
pub const FAR_FIELD_SWITCH: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StableParams {
    dim: usize,
    order: f64,
    c_const: f64,
}

/// Constant `c(N,θ)` in the singular-integral form of `(-Δ)^{θ/2}`.
pub fn normalizing_constant(dim: usize, order: f64) -> f64 {
    let n = dim as f64;
    order * 2f64.powf(order - 1.0) * gamma(0.5 * (n + order)) / (PI.powf(0.5 * n) * gamma(1.0 - 0.5 * order))
}

impl StableParams {
    pub fn new(dim: usize, order: f64) -> Result<Self> {
        if dim == 0 {
            return domain("dimension must be at least 1");
        }
        if !(order > 0.0 && order < 2.0) {
            return domain(format!("order must lie in (0,2), got {order}"));
        }
        Ok(StableParams { dim, order, c_const: normalizing_constant(dim, order) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn c_const(&self) -> f64 {
        self.c_const
    }

    fn check_supported(&self) -> Result<()> {
        match self.dim {
            1 | 3 => Ok(()),
            n => Err(Error::Unsupported(format!("kernel evaluation in dimension {n} (only 1 and 3)"))),
        }
    }
}

/// Evaluation route for the kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// Closed form where one exists, contour integral near, series far.
    Auto,
    /// Rotated-contour Fourier inversion at every radius.
    Fourier,
    /// Heavy-tail series only (meaningful for large radius).
    Series,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Series coefficients `a_k` of the 1-D tail `g(ρ) ~ (1/π) Σ a_k ρ^{-kθ-1}`.
fn tail_coeff(k: usize, theta: f64) -> f64 {
    let kf = k as f64;
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    let s = (0.5 * kf * PI * theta).sin();
    if s.abs() < 1e-12 {
        return 0.0;
    }
    sign * (ln_gamma(kf * theta + 1.0) - ln_gamma(kf + 1.0)).exp() * s
}

/// Sums `Σ a_k w_k q^k` with optimal truncation for the asymptotic case.
fn tail_sum(theta: f64, q: f64, weight: impl Fn(usize) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut qk = 1.0;
    for k in 1..400 {
        qk *= q;
        let term = tail_coeff(k, theta) * weight(k) * qk;
        let mag = term.abs();
        // sin(kπθ/2) can vanish; only compare nonzero terms
        if mag == 0.0 {
            continue;
        }
        if mag > prev && theta > 1.0 {
            break;
        }
        prev = mag;
        sum += term;
        if mag < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn contour_angle(rho: f64, theta: f64) -> f64 {
    if theta > 1.0 {
        PI / (4.0 * theta)
    } else if theta < 1.0 {
        if rho > 1.0 { 0.5 * PI } else { PI / (4.0 * theta.max(0.5)) }
    } else {
        0.25 * PI
    }
}

/// `(1/π) ∫_0^∞ Re[ e^{iφ} exp(i s r e^{iφ} - t s^θ e^{iθφ}) · m(s e^{iφ}) ] ds`
/// for the multiplier `s^mpow` folded into a phase shift `shift`.
fn contour(r: f64, t: f64, theta: f64, mpow: i32, shift: f64) -> Result<f64> {
    let rho = r * t.powf(-1.0 / theta);
    let phi = contour_angle(rho, theta);
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = (theta * phi).sin_cos();
    let s_cut_a = if r > 0.0 { 42.0 / (r * sp) } else { f64::INFINITY };
    let s_cut_b = (42.0 / (t * ct)).powf(1.0 / theta);
    let s_max = s_cut_a.min(s_cut_b);
    let phase0 = (mpow as f64 + 1.0) * phi + shift;
    let f = |s: f64| {
        if s == 0.0 {
            return if mpow == 0 { phase0.cos() } else { 0.0 };
        }
        let st_pow = t * s.powf(theta);
        let amp = (-s * r * sp - st_pow * ct).exp();
        amp * s.powi(mpow) * (phase0 + s * r * cp - st_pow * st).cos()
    };
    let scale = t.powf(-1.0 / theta).min(if r > 0.0 { 1.0 / r } else { f64::INFINITY });
    let pts = [scale * 0.1, scale, scale * 10.0];
    let tol = Tolerance { abs: 1e-300, rel: 1e-14, max_intervals: 4000 };
    let est = integrate_pts(f, 0.0, s_max, &pts, tol).or_else(|_| {
        integrate_pts(f, 0.0, s_max, &pts, Tolerance { rel: 1e-10, ..tol })
    })?;
    Ok(est.value / PI)
}

fn gamma_1d(r: f64, t: f64, theta: f64, route: Route) -> Result<f64> {
    let rho = r * t.powf(-1.0 / theta);
    let use_series = match route {
        Route::Series => true,
        Route::Fourier => false,
        Route::Auto => rho >= FAR_FIELD_SWITCH,
    };
    if route == Route::Auto && theta == 1.0 {
        return Ok(t / (PI * (r * r + t * t)));
    }
    if use_series {
        if r == 0.0 {
            return domain("series route needs nonzero radius");
        }
        let q = t * r.powf(-theta);
        return Ok(tail_sum(theta, q, |_| 1.0) / (PI * r));
    }
    if r == 0.0 {
        return Ok(t.powf(-1.0 / theta) * gamma(1.0 + 1.0 / theta) / PI);
    }
    contour(r, t, theta, 0, 0.0)
}

fn gamma_3d(r: f64, t: f64, theta: f64, route: Route) -> Result<f64> {
    let rho = r * t.powf(-1.0 / theta);
    let use_series = match route {
        Route::Series => true,
        Route::Fourier => false,
        Route::Auto => rho >= FAR_FIELD_SWITCH,
    };
    let c = 1.0 / (2.0 * PI * PI);
    if use_series {
        if r == 0.0 {
            return domain("series route needs nonzero radius");
        }
        let q = t * r.powf(-theta);
        return Ok(c * tail_sum(theta, q, |k| k as f64 * theta + 1.0) / r.powi(3));
    }
    if rho < 1e-4 {
        // Taylor expansion of sin(kr)/r inside the radial inversion
        let s = t.powf(-1.0 / theta);
        let m = |j: f64| gamma(j / theta) / theta * s.powf(j);
        return Ok(c * (m(3.0) - r * r * m(5.0) / 6.0 + r.powi(4) * m(7.0) / 120.0));
    }
    // Γ_3(r) = -(1/(2π r)) dΓ_1/dr, and dΓ_1/dr = -(1/π)∫ s e^A sin(2φ+B) ds
    let d = contour(r, t, theta, 1, -0.5 * PI)?;
    Ok(d / (2.0 * PI * r))
}

/// Γ_θ(x,t) through the chosen route.
pub fn eval_gamma_with(params: &StableParams, x: &[f64], t: f64, route: Route) -> Result<f64> {
    params.check_supported()?;
    if !(t > 0.0) {
        return domain(format!("time must be positive, got {t}"));
    }
    if x.len() != params.dim {
        return domain(format!("point has {} coordinates, expected {}", x.len(), params.dim));
    }
    let r = norm(x);
    let v = match params.dim {
        1 => gamma_1d(r, t, params.order, route)?,
        _ => gamma_3d(r, t, params.order, route)?,
    };
    Ok(v.max(0.0))
}

/// Γ_θ(x,t).
pub fn eval_gamma(params: &StableParams, x: &[f64], t: f64) -> Result<f64> {
    eval_gamma_with(params, x, t, Route::Auto)
}

/// Γ_θ at radius `r` (convenience for the radial kernel).
pub fn eval_gamma_radial(params: &StableParams, r: f64, t: f64) -> Result<f64> {
    let mut x = vec![0.0; params.dim];
    x[0] = r.abs();
    eval_gamma(params, &x, t)
}

/// `min(t^{-N/θ}, t/|x|^{N+θ})`.
pub fn eval_envelope(params: &StableParams, x: &[f64], t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return domain(format!("time must be positive, got {t}"));
    }
    let n = params.dim as f64;
    let r = norm(x);
    let near = t.powf(-n / params.order);
    if r == 0.0 {
        return Ok(near);
    }
    Ok(near.min(t / r.powf(n + params.order)))
}

/// Fitted two-sided constants `c1·env ≤ Γ ≤ c2·env`.
#[derive(Clone, Copy, Debug)]
pub struct EnvelopeFit {
    pub c1: f64,
    pub c2: f64,
}

impl EnvelopeFit {
    pub fn ratio(&self) -> f64 {
        self.c2 / self.c1
    }
}

#[derive(Clone, Copy, Debug)]
pub struct KernelValue {
    pub value: f64,
    pub envelope_low: f64,
    pub envelope_high: f64,
}

pub fn eval_bracketed(params: &StableParams, x: &[f64], t: f64, fit: &EnvelopeFit) -> Result<KernelValue> {
    let value = eval_gamma(params, x, t)?;
    let env = eval_envelope(params, x, t)?;
    Ok(KernelValue { value, envelope_low: fit.c1 * env, envelope_high: fit.c2 * env })
}

/// Sample Γ/envelope over a log grid in `|x|` and `t`.
pub fn fit_envelope(params: &StableParams, radii: &[f64], times: &[f64]) -> Result<EnvelopeFit> {
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    for &t in times {
        for &r in radii {
            let g = eval_gamma_radial(params, r, t)?;
            let e = eval_envelope(params, &radial_point(params.dim, r), t)?;
            let q = g / e;
            c1 = c1.min(q);
            c2 = c2.max(q);
        }
    }
    Ok(EnvelopeFit { c1, c2 })
}

fn radial_point(dim: usize, r: f64) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    x[0] = r;
    x
}

/// Log-spaced points from `10^lo` to `10^hi`, `per_decade` per decade.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi - lo) * per_decade as f64).round() as usize;
    (0..=n).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / n as f64)).collect()
}

/// Total mass `∫Γ(x,t)dx` with the far tail integrated in closed form.
pub fn total_mass(params: &StableParams, t: f64, tol: Tolerance) -> Result<f64> {
    params.check_supported()?;
    let theta = params.order;
    let ts = t.powf(1.0 / theta);
    let x_cut = FAR_FIELD_SWITCH * ts;
    let pts: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|f| f * ts).collect();
    let q = t * x_cut.powf(-theta);
    let ktheta = |k: usize| k as f64 * theta;
    match params.dim {
        1 => {
            let inner = integrate_pts(|x| eval_gamma_radial(params, x, t).unwrap_or(f64::NAN), 0.0, x_cut, &pts, tol)?;
            let tail = tail_sum(theta, q, |k| 1.0 / ktheta(k)) / PI;
            Ok(2.0 * (inner.value + tail))
        }
        _ => {
            let inner = integrate_pts(
                |r| 4.0 * PI * r * r * eval_gamma_radial(params, r, t).unwrap_or(f64::NAN),
                0.0,
                x_cut,
                &pts,
                tol,
            )?;
            let tail = 4.0 * PI / (2.0 * PI * PI) * tail_sum(theta, q, |k| (ktheta(k) + 1.0) / ktheta(k));
            Ok(inner.value + tail)
        }
    }
}

/// Ratio of the contour value to the series value at the switch radius.
pub fn switch_match_ratio(params: &StableParams) -> Result<f64> {
    let x = radial_point(params.dim, FAR_FIELD_SWITCH);
    let a = eval_gamma_with(params, &x, 1.0, Route::Fourier)?;
    let b = eval_gamma_with(params, &x, 1.0, Route::Series)?;
    Ok(a / b)
}

/// `Γ(0,1) = |S^{N-1}| Γ(N/θ) / (θ (2π)^N)`.
pub fn peak_value(params: &StableParams) -> f64 {
    let n = params.dim as f64;
    sphere_area(params.dim) * gamma(n / params.order) / (params.order * (2.0 * PI).powf(n))
}

#[derive(Clone, Debug)]
pub struct DiagnosticRow {
    pub t: f64,
    pub mass: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_residual: f64,
}

#[derive(Clone, Debug)]
pub struct StableDiagnostics {
    pub rows: Vec<DiagnosticRow>,
    pub fit: EnvelopeFit,
    pub switch_ratio: f64,
    pub incomplete: bool,
}

/// Mass, envelope fit and self-similarity residual per time.
pub fn kernel_diagnostics(params: &StableParams, t_grid: &[f64], tol: Tolerance) -> Result<StableDiagnostics> {
    if t_grid.iter().any(|&t| !(t > 0.0)) {
        return domain("diagnostic times must be positive");
    }
    let theta = params.order;
    let mut rows = Vec::new();
    let mut incomplete = false;
    let mut fit = EnvelopeFit { c1: f64::INFINITY, c2: 0.0 };
    for &t in t_grid {
        let mass = match total_mass(params, t, tol) {
            Ok(m) => m,
            Err(Error::Accuracy { .. }) => {
                incomplete = true;
                f64::NAN
            }
            Err(e) => return Err(e),
        };
        let ts = t.powf(1.0 / theta);
        let radii: Vec<f64> = log_grid(-2.0, 2.0, 4).into_iter().map(|r| r * ts).collect();
        let local = fit_envelope(params, &radii, &[t])?;
        fit.c1 = fit.c1.min(local.c1);
        fit.c2 = fit.c2.max(local.c2);
        let mut res = 0.0f64;
        for &r in &radii {
            let direct = eval_gamma_radial(params, r, t)?;
            let scaled = t.powf(-(params.dim as f64) / theta) * eval_gamma_radial(params, r / ts, 1.0)?;
            res = res.max((direct - scaled).abs() / scaled.abs().max(f64::MIN_POSITIVE));
        }
        rows.push(DiagnosticRow { t, mass, c1: local.c1, c2: local.c2, max_residual: res });
    }
    let switch_ratio = switch_match_ratio(params)?;
    Ok(StableDiagnostics { rows, fit, switch_ratio, incomplete })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cauchy_constant() {
        let p = StableParams::new(1, 1.0).unwrap();
        assert!((p.c_const() - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_order() {
        assert!(StableParams::new(1, 2.0).is_err());
        assert!(StableParams::new(1, 0.0).is_err());
        assert!(StableParams::new(0, 1.0).is_err());
    }

    #[test]
    fn contour_matches_cauchy() {
        let p = StableParams::new(1, 1.0).unwrap();
        for &x in &[0.0, 1e-3, 0.3, 1.0, 5.0, 40.0, 900.0] {
            let c = 1.0 / (PI * (1.0 + x * x));
            let v = eval_gamma_with(&p, &[x], 1.0, Route::Fourier).unwrap();
            assert!(((v - c) / c).abs() < 1e-12, "x={x} v={v} c={c}");
        }
    }

    #[test]
    fn dimension_two_unsupported() {
        let p = StableParams::new(2, 1.0).unwrap();
        assert!(matches!(eval_gamma(&p, &[0.0, 0.0], 1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn three_d_cauchy() {
        // Γ_3 for θ=1 is t/(π²(r²+t²)²)
        let p = StableParams::new(3, 1.0).unwrap();
        for &r in &[0.0f64, 1e-5, 0.2, 1.0, 3.0, 20.0] {
            let e = 1.0 / (PI * PI * (r * r + 1.0).powi(2));
            let v = eval_gamma_radial(&p, r, 1.0).unwrap();
            assert!(((v - e) / e).abs() < 1e-9, "r={r} v={v} e={e}");
        }
    }

    #[test]
    fn envelope_branches() {
        let p = StableParams::new(1, 1.0).unwrap();
        assert_eq!(eval_envelope(&p, &[0.0], 2.0).unwrap(), 0.5);
        assert!((eval_envelope(&p, &[10.0], 1.0).unwrap() - 0.01).abs() < 1e-15);
        assert!((eval_envelope(&p, &[3.0], 3.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }
}
