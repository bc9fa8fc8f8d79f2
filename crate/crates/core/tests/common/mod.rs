#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use fracshe::dirichlet::DirichletKernelGrid;
use fracshe::geometry::Domain;
use fracshe::stable::StableParams;

/// Grids on (0,1), assembled once per `(M, θ)` and shared by the tests of a binary.
pub fn unit_grid(m: usize, theta: f64) -> &'static DirichletKernelGrid {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), &'static DirichletKernelGrid>>> = OnceLock::new();
    let mut map = CACHE.get_or_init(Default::default).lock().unwrap();
    map.entry((m, theta.to_bits())).or_insert_with(|| {
        let g = DirichletKernelGrid::assemble(&Domain::unit_interval(), m, StableParams::new(1, theta).unwrap()).unwrap();
        Box::leak(Box::new(g))
    })
}

/// `(1/π) ∫_0^∞ cos(x s) e^{-t s^θ} ds` by composite Simpson on the real axis,
/// after `s = u²` to smooth the origin.
pub fn cosine_transform(x: f64, t: f64, theta: f64) -> f64 {
    let s_max = (40.0 / t).powf(1.0 / theta);
    let n = 400_000usize;
    let h = s_max.sqrt() / n as f64;
    let f = |u: f64| 2.0 * u * (x * u * u).cos() * (-t * u.powf(2.0 * theta)).exp();
    let mut acc = f(0.0) + f(s_max.sqrt());
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    acc * h / 3.0 / std::f64::consts::PI
}

/// Time at which `ζ' = c2 t^{-α} ζ^β`, `ζ(t_*) = c1` exceeds `cap`, by
/// step-doubling RK4; `None` if `t_end` is reached first.
pub fn ode_blowup(c1: f64, c2: f64, alpha: f64, beta: f64, t_star: f64, t_end: f64, cap: f64) -> Option<f64> {
    let f = |t: f64, z: f64| c2 * t.powf(-alpha) * z.powf(beta);
    let rk4 = |t: f64, z: f64, h: f64| {
        let k1 = f(t, z);
        let k2 = f(t + 0.5 * h, z + 0.5 * h * k1);
        let k3 = f(t + 0.5 * h, z + 0.5 * h * k2);
        let k4 = f(t + h, z + h * k3);
        z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };
    let (mut t, mut z) = (t_star, c1);
    let mut h = 1e-3 * t_star;
    while t < t_end {
        h = h.min(t_end - t);
        let full = rk4(t, z, h);
        let half = rk4(t + 0.5 * h, rk4(t, z, 0.5 * h), 0.5 * h);
        let err = (full - half).abs() / half.abs().max(1e-300);
        if !half.is_finite() || err > 1e-8 {
            h *= 0.5;
            if h < 1e-15 * t {
                return Some(t);
            }
            continue;
        }
        t += h;
        z = half;
        if z > cap {
            return Some(t);
        }
        if err < 1e-10 {
            h *= 2.0;
        }
    }
    None
}
