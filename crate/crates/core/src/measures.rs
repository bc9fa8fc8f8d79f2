//! Initial data: `μ = κ (w(y) f(y) dy + h ⊗ δ(∂Ω) + atoms)`, with `w = d^{θ/2}`
//! for the weighted form or `w = 1` for plain densities.

use crate::error::{domain, Error, Result};
use crate::geometry::{BallPieces, Domain, DomainKind};
use crate::quad::{integrate, integrate_pts, Tolerance};
use crate::special::{gamma, sphere_area};

/// `p_α(d, l) = 1 + α/(d + l)`.
pub fn critical_exponent(alpha: f64, d: usize, l: f64) -> f64 {
    1.0 + alpha / (d as f64 + l)
}

/// Equality of exponents up to rounding.
pub fn same_exponent(p: f64, q: f64) -> bool {
    (p - q).abs() <= 1e-12 * q.abs()
}

/// `|x - z|^{-a} |log|x - z||^{-b}` on `B(z, R)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularProfile {
    pub center: f64,
    pub a: f64,
    pub b: f64,
    pub radius: f64,
}

/// Optimal interior singularity for the exponent `p`.
pub fn interior_profile(z: f64, p: f64, theta: f64, n: usize) -> Result<SingularProfile> {
    let pc = critical_exponent(theta, n, 0.0);
    let nf = n as f64;
    if same_exponent(p, pc) {
        Ok(SingularProfile { center: z, a: nf, b: nf / theta + 1.0, radius: 0.5 })
    } else if p > pc {
        Ok(SingularProfile { center: z, a: theta / (p - 1.0), b: 0.0, radius: 1.0 })
    } else {
        domain(format!("p = {p} is below the critical exponent {pc}: every measure is admissible, no profile needed"))
    }
}

/// Optimal boundary singularity for the exponent `p`.
pub fn boundary_profile(z: f64, p: f64, theta: f64, n: usize) -> Result<SingularProfile> {
    let pc = critical_exponent(theta, n, 0.5 * theta);
    let nf = n as f64;
    if same_exponent(p, pc) {
        Ok(SingularProfile { center: z, a: nf + 0.5 * theta, b: (2.0 * nf + theta) / (2.0 * theta) + 1.0, radius: 0.5 })
    } else if p > pc {
        Ok(SingularProfile { center: z, a: theta / (p - 1.0), b: 0.0, radius: 1.0 })
    } else {
        domain(format!("p = {p} is below the boundary critical exponent {pc}: every measure is admissible"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Density {
    Zero,
    Uniform(f64),
    Power(SingularProfile),
    /// Piecewise-linear through `(x_i, f_i)`, zero outside the table.
    Table(Vec<(f64, f64)>),
}

/// Pointwise map applied to the density before integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Transform {
    Identity,
    Power(f64),
    /// `v ↦ Φ(c v)` with `Φ(τ) = τ [log(L + τ)]^r`.
    LogRefined { r: f64, scale: f64, shift: f64 },
}

impl Transform {
    /// `ln F(v)` from `ln v`.
    fn ln_apply(&self, ln_v: f64) -> f64 {
        match *self {
            Transform::Identity => ln_v,
            Transform::Power(q) => q * ln_v,
            Transform::LogRefined { r, scale, shift } => {
                let lt = scale.ln() + ln_v;
                // ln(shift + τ) with τ = e^{lt}, stable for large and small τ
                let ll = if lt > 0.0 { lt + (shift * (-lt).exp()).ln_1p() } else { (shift + lt.exp()).ln() };
                lt + r * ll.ln()
            }
        }
    }

    fn apply(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        self.ln_apply(v.ln()).exp()
    }
}

/// Weight multiplying the density, as a function of `d(y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weight {
    One,
    /// `d^e`.
    DistPow(f64),
    /// `D(y,t) = d^{θ/2}/(d^{θ/2} + √t)`.
    Factor { theta: f64, t: f64 },
    /// `d^{θ}/(d^{θ/2} + √t)`: the factor `D` on a `d^{θ/2}`-weighted density.
    WeightedFactor { theta: f64, t: f64 },
    /// `1/(d^{θ/2} + √t)`.
    Shifted { theta: f64, t: f64 },
}

impl Weight {
    /// Order of vanishing at the boundary.
    fn order(&self) -> f64 {
        match *self {
            Weight::One => 0.0,
            Weight::DistPow(e) => e,
            Weight::Factor { theta, .. } => 0.5 * theta,
            Weight::WeightedFactor { theta, .. } => theta,
            Weight::Shifted { .. } => 0.0,
        }
    }

    fn ln_eval(&self, d: f64) -> f64 {
        if d <= 0.0 {
            return match *self {
                _ if self.order() > 0.0 => f64::NEG_INFINITY,
                Weight::Shifted { t, .. } => -t.sqrt().ln(),
                _ => 0.0,
            };
        }
        match *self {
            Weight::One => 0.0,
            Weight::DistPow(e) => e * d.ln(),
            Weight::Factor { theta, t } => {
                let s = d.powf(0.5 * theta);
                s.ln() - (s + t.sqrt()).ln()
            }
            Weight::WeightedFactor { theta, t } => {
                let s = d.powf(0.5 * theta);
                2.0 * s.ln() - (s + t.sqrt()).ln()
            }
            Weight::Shifted { theta, t } => -(d.powf(0.5 * theta) + t.sqrt()).ln(),
        }
    }

    fn eval(&self, d: f64) -> f64 {
        self.ln_eval(d).exp()
    }
}

impl Density {
    pub fn value(&self, y: f64) -> f64 {
        match self {
            Density::Zero => 0.0,
            Density::Uniform(v) => *v,
            Density::Power(p) => {
                let u = (y - p.center).abs();
                if u >= p.radius {
                    return 0.0;
                }
                if u == 0.0 {
                    return f64::INFINITY;
                }
                u.powf(-p.a) * if p.b != 0.0 { u.ln().abs().powf(-p.b) } else { 1.0 }
            }
            Density::Table(t) => table_value(t, y),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Density::Power(p) => vec![p.center - p.radius, p.center, p.center + p.radius],
            Density::Table(t) => t.iter().map(|e| e.0).collect(),
            _ => Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Density::Zero => true,
            Density::Uniform(v) => *v == 0.0,
            Density::Table(t) => t.iter().all(|e| e.1 == 0.0),
            Density::Power(_) => false,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Density::Uniform(v) if *v < 0.0 => domain("uniform density must be nonnegative"),
            Density::Table(t) => {
                if t.iter().any(|e| e.1 < 0.0) {
                    return domain("table density must be nonnegative");
                }
                if t.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return domain("table abscissae must increase");
                }
                Ok(())
            }
            Density::Power(p) => {
                if !(p.radius > 0.0) || p.a < 0.0 || p.b < 0.0 {
                    return domain("power profile needs a ≥ 0, b ≥ 0, R > 0");
                }
                if p.b > 0.0 && p.radius >= 1.0 {
                    return domain("log-corrected profile needs support radius below 1");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn table_value(t: &[(f64, f64)], y: f64) -> f64 {
    if t.is_empty() || y < t[0].0 || y > t[t.len() - 1].0 {
        return 0.0;
    }
    let k = t.partition_point(|e| e.0 <= y);
    if k == 0 {
        return t[0].1;
    }
    if k == t.len() {
        return t[k - 1].1;
    }
    let (x0, f0) = t[k - 1];
    let (x1, f1) = t[k];
    f0 + (f1 - f0) * (y - x0) / (x1 - x0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    /// Interior part `f(y) dy`.
    Plain,
    /// Interior part `d(y)^{θ/2} f(y) dy`.
    Distance,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSpec {
    pub theta: f64,
    pub interior: Density,
    pub weighting: Weighting,
    /// Surface density at boundary points `(b, h(b))`.
    pub boundary: Vec<(f64, f64)>,
    pub atoms: Vec<(f64, f64)>,
    pub amplitude: f64,
}

/// `∫_{B_Ω(z,σ)} φ dμ` test functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TestFn {
    One,
    /// `1/(d(y)^{θ/2} + √t)`.
    InvShifted { t: f64 },
}

/// Quadrature settings for measure integrals.
#[derive(Clone, Copy, Debug)]
pub struct MassTolerance {
    pub tol: Tolerance,
    /// Extent of the numeric range in the logarithmic variable.
    pub log_span: f64,
}

impl Default for MassTolerance {
    fn default() -> Self {
        MassTolerance { tol: Tolerance { abs: 1e-300, rel: 1e-10, max_intervals: 4000 }, log_span: 200.0 }
    }
}

impl MeasureSpec {
    pub fn zero(theta: f64) -> Self {
        MeasureSpec {
            theta,
            interior: Density::Zero,
            weighting: Weighting::Distance,
            boundary: Vec::new(),
            atoms: Vec::new(),
            amplitude: 1.0,
        }
    }

    /// `κ d^{θ/2} φ` for a singular profile.
    pub fn from_profile(profile: SingularProfile, kappa: f64, theta: f64) -> Self {
        MeasureSpec { interior: Density::Power(profile), amplitude: kappa, ..Self::zero(theta) }
    }

    pub fn plain(density: Density, theta: f64) -> Self {
        MeasureSpec { interior: density, weighting: Weighting::Plain, ..Self::zero(theta) }
    }

    pub fn weighted(density: Density, theta: f64) -> Self {
        MeasureSpec { interior: density, ..Self::zero(theta) }
    }

    pub fn atom(location: f64, mass: f64, theta: f64) -> Self {
        MeasureSpec { atoms: vec![(location, mass)], ..Self::zero(theta) }
    }

    pub fn with_amplitude(&self, kappa: f64) -> Self {
        MeasureSpec { amplitude: kappa, ..self.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0
            || (self.interior.is_zero() && self.boundary.iter().all(|b| b.1 == 0.0) && self.atoms.is_empty())
    }

    pub fn has_boundary_part(&self) -> bool {
        self.boundary.iter().any(|b| b.1 != 0.0)
    }

    /// Structural checks plus the rule `h ≡ 0` for `p ≥ p_θ(1,θ/2)`.
    pub fn validate(&self, dom: &Domain, p: Option<f64>) -> Result<()> {
        if self.amplitude < 0.0 {
            return domain("amplitude must be nonnegative");
        }
        self.interior.validate()?;
        let bpts = dom.boundary_points();
        for &(b, h) in &self.boundary {
            if h < 0.0 {
                return domain("boundary density must be nonnegative");
            }
            if !bpts.contains(&b) {
                return domain(format!("boundary density given at {b}, which is not a boundary point"));
            }
        }
        for &(x, m) in &self.atoms {
            if !(m > 0.0) {
                return domain("atoms must have positive mass");
            }
            if dom.dim() == 1 && !dom.in_closure(&[x]) {
                return domain(format!("atom at {x} lies outside the closure of the domain"));
            }
        }
        if let (Some(p), true) = (p, self.has_boundary_part()) {
            let pc = critical_exponent(self.theta, 1, 0.5 * self.theta);
            if p >= pc {
                return domain(format!(
                    "a nonzero boundary density h requires p < p_θ(1,θ/2) = {pc} (sufficient q-norm condition hypothesis); got p = {p}"
                ));
            }
        }
        Ok(())
    }

    /// Warnings for data that cannot have a local solution.
    pub fn admissibility_flags(&self, dom: &Domain, p: f64) -> Vec<String> {
        let pc = critical_exponent(self.theta, dom.dim(), 0.5 * self.theta);
        let mut out = Vec::new();
        if p >= pc {
            for &(x, _) in &self.atoms {
                if dom.dim() == 1 && dom.is_boundary(&[x]) {
                    out.push(format!("boundary atom at {x} is inadmissible for p = {p} ≥ p_θ(N,θ/2) = {pc}"));
                }
            }
        }
        out
    }

    fn weight_for(&self, test: TestFn) -> Weight {
        match (self.weighting, test) {
            (Weighting::Plain, TestFn::One) => Weight::One,
            (Weighting::Distance, TestFn::One) => Weight::DistPow(0.5 * self.theta),
            (Weighting::Plain, TestFn::InvShifted { t }) => Weight::Shifted { theta: self.theta, t },
            (Weighting::Distance, TestFn::InvShifted { t }) => Weight::Factor { theta: self.theta, t },
        }
    }

    fn test_value(&self, test: TestFn, d: f64) -> f64 {
        match test {
            TestFn::One => 1.0,
            TestFn::InvShifted { t } => 1.0 / (d.powf(0.5 * self.theta) + t.sqrt()),
        }
    }

    /// `∫_{B_Ω(z,σ)} φ dμ`.
    pub fn integrate_ball(&self, dom: &Domain, z: &[f64], sigma: f64, test: TestFn, mt: MassTolerance) -> Result<f64> {
        if !(sigma > 0.0) {
            return domain("ball radius must be positive");
        }
        if self.amplitude == 0.0 {
            return Ok(0.0);
        }
        let ball = dom.ball_intersect(z, sigma)?;
        match (&ball.pieces, dom.kind()) {
            (BallPieces::Intervals(pieces), DomainKind::Intervals(_)) => {
                let mut total = 0.0;
                let w = self.weight_for(test);
                for &(l, u) in pieces {
                    total += integrate_density(dom, &self.interior, Transform::Identity, w, l, u, mt)?;
                }
                for &(b, h) in &self.boundary {
                    if pieces.iter().any(|&(l, u)| l <= b && b <= u) {
                        total += h * self.test_value(test, 0.0);
                    }
                }
                for &(x, m) in &self.atoms {
                    if pieces.iter().any(|&(l, u)| l <= x && x <= u) {
                        total += m * self.test_value(test, dom.dist1(x));
                    }
                }
                Ok(self.amplitude * total)
            }
            (BallPieces::Cap { .. }, DomainKind::HalfSpace { dim }) => {
                if !self.boundary.is_empty() || !self.atoms.is_empty() {
                    return Err(Error::Unsupported("surface parts and atoms in the half-space".into()));
                }
                let w = self.weight_for(test);
                let v = half_space_ball(*dim, &self.interior, Transform::Identity, w, z, sigma, mt)?;
                Ok(self.amplitude * v)
            }
            _ => unreachable!("ball pieces always match the domain kind"),
        }
    }

    /// `μ(B_Ω(z,σ))`.
    pub fn ball_mass(&self, dom: &Domain, z: &[f64], sigma: f64) -> Result<f64> {
        self.integrate_ball(dom, z, sigma, TestFn::One, MassTolerance::default())
    }

    /// Interior-density mass of `[l, u]` (1-D), without atoms or boundary part.
    pub fn interior_mass(&self, dom: &Domain, l: f64, u: f64) -> Result<f64> {
        let w = self.weight_for(TestFn::One);
        Ok(self.amplitude * integrate_density(dom, &self.interior, Transform::Identity, w, l, u, MassTolerance::default())?)
    }
}

/// Distance from the point `c + dir·u` to the boundary, accurate for tiny `u`.
fn dist_offset(dom: &Domain, c: f64, dir: f64, u: f64) -> f64 {
    let comps = match dom.kind() {
        DomainKind::Intervals(v) => v,
        _ => return 0.0,
    };
    for &(l, r) in comps {
        let inside = if dir > 0.0 { l <= c && c < r } else { l < c && c <= r };
        if inside {
            let left = (c - l) + dir * u;
            let right = (r - c) - dir * u;
            return left.min(right).max(0.0);
        }
    }
    0.0
}

/// `∫_l^u W(d(y)) F(f(y)) dy` for a piece inside one component.
pub fn integrate_density(
    dom: &Domain,
    f: &Density,
    transform: Transform,
    w: Weight,
    l: f64,
    u: f64,
    mt: MassTolerance,
) -> Result<f64> {
    if u <= l || f.is_zero() {
        return Ok(0.0);
    }
    let comps = dom.components()?;
    let comp = comps
        .iter()
        .find(|&&(a, b)| a <= l && u <= b)
        .copied()
        .ok_or_else(|| Error::Domain(format!("[{l}, {u}] is not inside one component")))?;
    let mut cuts = f.breakpoints();
    if comp.0.is_finite() && comp.1.is_finite() {
        cuts.push(0.5 * (comp.0 + comp.1));
    }
    match f {
        Density::Power(p) => {
            let lo = l.max(p.center - p.radius);
            let hi = u.min(p.center + p.radius);
            if hi <= lo {
                return Ok(0.0);
            }
            let mut total = 0.0;
            let c = p.center;
            let boundary_centre = dom.dist1(c) == 0.0 && dom.in_closure(&[c]);
            // pieces touching the centre use the logarithmic substitution
            if lo < c && c < hi {
                total += singular_side(dom, p, transform, w, -1.0, c - lo, boundary_centre, mt)?;
                total += singular_side(dom, p, transform, w, 1.0, hi - c, boundary_centre, mt)?;
            } else if c == lo {
                total += singular_side(dom, p, transform, w, 1.0, hi - c, boundary_centre, mt)?;
            } else if c == hi {
                total += singular_side(dom, p, transform, w, -1.0, c - lo, boundary_centre, mt)?;
            } else {
                let g = |y: f64| transform.apply(f.value(y)) * w.eval(dom.dist1(y));
                total += integrate_pts(g, lo, hi, &cuts, mt.tol)?.value;
            }
            Ok(total)
        }
        _ => {
            let g = |y: f64| transform.apply(f.value(y)) * w.eval(dom.dist1(y));
            Ok(integrate_pts(g, l, u, &cuts, mt.tol)?.value)
        }
    }
}

/// `∫_0^L W(d(c + dir·v)) F(v^{-a}|log v|^{-b}) dv` on one side of the centre.
#[allow(clippy::too_many_arguments)]
fn singular_side(
    dom: &Domain,
    p: &SingularProfile,
    transform: Transform,
    w: Weight,
    dir: f64,
    len: f64,
    boundary_centre: bool,
    mt: MassTolerance,
) -> Result<f64> {
    let ln_weight = |s: f64| {
        let v = (-s).exp();
        if boundary_centre {
            let d = dist_offset(dom, p.center, dir, v);
            // exact near-boundary form, safe when v underflows against c
            if d == v { weight_ln_at_boundary(w, s) } else { w.ln_eval(d) }
        } else {
            w.ln_eval(dom.dist1(p.center + dir * v))
        }
    };
    log_substitution(p.a, p.b, transform, len, &ln_weight, mt, p.center)
}

/// `∫_0^L e^{ω(v)} F(v^{-a}|log v|^{-b}) dv` through `v = e^{-s}`, where
/// `ln_weight(s) = ω(e^{-s})`; the far tail is closed by a local power fit.
fn log_substitution(
    a: f64,
    b: f64,
    transform: Transform,
    len: f64,
    ln_weight: &dyn Fn(f64) -> f64,
    mt: MassTolerance,
    at: f64,
) -> Result<f64> {
    if len <= 0.0 {
        return Ok(0.0);
    }
    if b > 0.0 && len >= 1.0 {
        return domain("log-corrected profile integrated past |log| = 0");
    }
    let s0 = -len.ln();
    let ln_density = |s: f64| if b != 0.0 { a * s - b * s.ln() } else { a * s };
    let integrand = |s: f64| (transform.ln_apply(ln_density(s)) - s + ln_weight(s)).exp();
    let s1 = s0.max(0.0) + mt.log_span;
    let mut cuts: Vec<f64> = (0..12).map(|k| s0 + (s1 - s0) * 2f64.powi(-k)).collect();
    cuts.push(s0 + 1.0);
    let body = integrate_pts(integrand, s0, s1, &cuts, mt.tol)?.value;
    let f1 = integrand(s1);
    if f1 == 0.0 {
        return Ok(body);
    }
    let f2 = integrand(2.0 * s1);
    let diverge = || Error::Divergence(format!("density with exponents a={a}, b={b} is not integrable at {at}"));
    if !f1.is_finite() || !(f2 < f1) {
        return Err(diverge());
    }
    let beta = -(f2 / f1).ln() / 2f64.ln();
    if beta <= 1.0 + 1e-6 {
        return Err(diverge());
    }
    Ok(body + f1 * s1 / (beta - 1.0))
}

fn weight_ln_at_boundary(w: Weight, s: f64) -> f64 {
    // d = e^{-s}
    match w {
        Weight::One => 0.0,
        Weight::DistPow(e) => -e * s,
        Weight::Factor { theta, t } => {
            let ls = -0.5 * theta * s;
            ls - (ls.exp() + t.sqrt()).ln()
        }
        Weight::WeightedFactor { theta, t } => {
            let ls = -0.5 * theta * s;
            2.0 * ls - (ls.exp() + t.sqrt()).ln()
        }
        Weight::Shifted { theta, t } => -((-0.5 * theta * s).exp() + t.sqrt()).ln(),
    }
}

/// Radial integral for a density centred at the ball centre in the half-space.
fn half_space_ball(
    dim: usize,
    f: &Density,
    transform: Transform,
    w: Weight,
    z: &[f64],
    sigma: f64,
    mt: MassTolerance,
) -> Result<f64> {
    let height = z[dim - 1];
    let (a, b, radius, scale) = match f {
        Density::Zero => return Ok(0.0),
        Density::Uniform(v) => (0.0, 0.0, f64::INFINITY, *v),
        Density::Power(p) => {
            if p.center != z[0] || z[..dim - 1].iter().any(|&c| c != 0.0) && dim > 1 {
                return Err(Error::Unsupported("half-space balls must be centred at the profile centre".into()));
            }
            (p.a, p.b, p.radius, 1.0)
        }
        Density::Table(_) => return Err(Error::Unsupported("tabulated densities in the half-space".into())),
    };
    if scale == 0.0 {
        return Ok(0.0);
    }
    let rmax = sigma.min(radius);
    let boundary_centre = height == 0.0;
    let order = if boundary_centre { w.order() } else { 0.0 };
    // sphere integral of the weight at radius r, divided by r^order
    let angular = |r: f64| -> f64 {
        let wr = |y: f64| if boundary_centre { w.ln_eval(y) - order * r.ln() } else { w.ln_eval(y) };
        if dim == 1 {
            let up = wr(height + r).exp();
            let down = if height - r > 0.0 { wr(height - r).exp() } else { 0.0 };
            return up + down;
        }
        let sn2 = sphere_area(dim - 1);
        let k = (dim - 2) as i32;
        let g = |psi: f64| {
            let y = height + r * psi.cos();
            if y <= 0.0 { 0.0 } else { wr(y).exp() * psi.sin().powi(k) }
        };
        let cut = if r > height { (-height / r).acos() } else { std::f64::consts::PI };
        sn2 * integrate(g, 0.0, cut, Tolerance::new(1e-15, 1e-11)).map(|e| e.value).unwrap_or(f64::NAN)
    };
    let nf = dim as f64;
    let ln_weight = |s: f64| angular((-s).exp()).ln();
    let a_eff = a - (nf - 1.0) - order;
    let v = log_substitution(a_eff, b, transform, rmax, &ln_weight, mt, height)?;
    Ok(scale * v)
}

/// `∫_{S^{N-1} ∩ {ω_N > 0}} ω_N^e dS`.
pub fn hemisphere_moment(n: usize, e: f64) -> f64 {
    let nf = n as f64;
    std::f64::consts::PI.powf(0.5 * (nf - 1.0)) * gamma(0.5 * (e + 1.0)) / gamma(0.5 * (e + nf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents() {
        assert_eq!(critical_exponent(1.0, 1, 0.0), 2.0);
        assert!((critical_exponent(1.0, 1, 0.5) - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn profiles() {
        let p = interior_profile(0.5, 3.0, 1.0, 1).unwrap();
        assert_eq!((p.a, p.b, p.radius), (0.5, 0.0, 1.0));
        let p = interior_profile(0.5, 2.0, 1.0, 1).unwrap();
        assert_eq!((p.a, p.b, p.radius), (1.0, 2.0, 0.5));
        assert!(interior_profile(0.5, 1.5, 1.0, 1).is_err());
        let p = boundary_profile(0.0, 2.0, 1.0, 1).unwrap();
        assert_eq!((p.a, p.b, p.radius), (1.0, 0.0, 1.0));
        let p = boundary_profile(0.0, 5.0 / 3.0, 1.0, 1).unwrap();
        assert_eq!((p.a, p.b, p.radius), (1.5, 2.5, 0.5));
        assert!(boundary_profile(0.0, 1.2, 1.0, 1).is_err());
    }

    #[test]
    fn uniform_plain_mass() {
        let d = Domain::unit_interval();
        let mu = MeasureSpec::plain(Density::Uniform(1.0), 1.0);
        assert!((mu.ball_mass(&d, &[0.5], 0.1).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn singular_plain_mass() {
        let d = Domain::unit_interval();
        let prof = SingularProfile { center: 0.5, a: 0.5, b: 0.0, radius: 1.0 };
        let mu = MeasureSpec::plain(Density::Power(prof), 1.0);
        let m = mu.ball_mass(&d, &[0.5], 0.01).unwrap();
        assert!((m - 0.4).abs() < 1e-9, "{m}");
    }

    #[test]
    fn non_integrable_reported() {
        let d = Domain::unit_interval();
        let prof = SingularProfile { center: 0.5, a: 1.0, b: 0.0, radius: 1.0 };
        let mu = MeasureSpec::weighted(Density::Power(prof), 1.0);
        assert!(matches!(mu.ball_mass(&d, &[0.5], 0.1), Err(Error::Divergence(_))));
    }

    #[test]
    fn boundary_centre_weighted() {
        // d^{1/2} x^{-1} near 0 integrates to 2√σ
        let d = Domain::unit_interval();
        let prof = SingularProfile { center: 0.0, a: 1.0, b: 0.0, radius: 1.0 };
        let mu = MeasureSpec::weighted(Density::Power(prof), 1.0);
        let m = mu.ball_mass(&d, &[0.0], 0.04).unwrap();
        assert!((m - 0.4).abs() < 1e-9, "{m}");
    }

    #[test]
    fn h_rule() {
        let d = Domain::unit_interval();
        let mut mu = MeasureSpec::zero(1.0);
        mu.boundary = vec![(0.0, 1.0)];
        assert!(mu.validate(&d, Some(1.5)).is_ok());
        assert!(mu.validate(&d, Some(2.0)).is_err());
    }
}
