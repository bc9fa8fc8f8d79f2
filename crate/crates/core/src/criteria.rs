//! Computable forms of the necessary and sufficient solvability conditions,
//! each evaluated as a supremum over ball centres and radii.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::geometry::{BallPieces, Domain};
use crate::measures::{
    critical_exponent, integrate_density, same_exponent, MassTolerance, MeasureSpec, TestFn, Transform, Weight,
    Weighting,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CriterionKind {
    NecessarySubcritical,
    NecessaryCriticalInterior,
    NecessaryCriticalBoundary,
    SufficientKernelIntegral,
    SufficientQNorm,
    SufficientLog,
}

impl CriterionKind {
    pub fn label(&self) -> &'static str {
        match self {
            CriterionKind::NecessarySubcritical => "necessary_subcritical",
            CriterionKind::NecessaryCriticalInterior => "necessary_critical_interior",
            CriterionKind::NecessaryCriticalBoundary => "necessary_critical_boundary",
            CriterionKind::SufficientKernelIntegral => "sufficient_kernel_integral",
            CriterionKind::SufficientQNorm => "sufficient_qnorm",
            CriterionKind::SufficientLog => "sufficient_log",
        }
    }

    pub fn role(&self) -> ThresholdRole {
        match self {
            CriterionKind::NecessarySubcritical
            | CriterionKind::NecessaryCriticalInterior
            | CriterionKind::NecessaryCriticalBoundary => ThresholdRole::Necessary,
            _ => ThresholdRole::Sufficient,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThresholdRole {
    /// A value above the threshold certifies nonexistence.
    Necessary,
    /// A value at or below the threshold certifies existence.
    Sufficient,
}

impl ThresholdRole {
    pub fn describe(&self) -> &'static str {
        match self {
            ThresholdRole::Necessary => "necessary: large value certifies nonexistence for the given threshold",
            ThresholdRole::Sufficient => "sufficient: small value certifies existence for the given threshold",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Nonexistence,
    Existence,
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Nonexistence => "nonexistence",
            Verdict::Existence => "existence",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Centre and scale where the reported supremum is attained. The scale is a
/// ball radius, or a time for the kernel integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Witness {
    pub z: f64,
    pub scale: f64,
}

#[derive(Clone, Debug)]
pub struct CriterionReport {
    pub kind: CriterionKind,
    pub value: f64,
    pub witness: Option<Witness>,
    pub horizon: f64,
    pub p: f64,
    pub theta: f64,
    pub amplitude: f64,
    /// `(scale, sup over centres)` in increasing scale.
    pub profile: Vec<(f64, f64)>,
    /// Largest ratio `profile(s')/profile(s)` with `s' ≤ s·10^{-3}`.
    pub growth: f64,
    /// Grid points dropped because the normalization underflowed.
    pub skipped: usize,
}

impl CriterionReport {
    fn empty(kind: CriterionKind, horizon: f64, p: f64, theta: f64, amplitude: f64) -> Self {
        CriterionReport {
            kind,
            value: 0.0,
            witness: None,
            horizon,
            p,
            theta,
            amplitude,
            profile: Vec::new(),
            growth: 1.0,
            skipped: 0,
        }
    }

    pub fn role(&self) -> ThresholdRole {
        self.kind.role()
    }

    /// Growth toward small scales of the profile across `decades`.
    pub fn growth_over(&self, decades: f64) -> f64 {
        growth_factor(&self.profile, decades)
    }

    /// Unbounded growth: an infinite sup, or growth ≥ 10 over three decades.
    pub fn is_unbounded(&self) -> bool {
        self.value.is_infinite() || self.growth >= 10.0
    }

    pub fn verdict(&self, threshold: f64) -> Verdict {
        match self.role() {
            ThresholdRole::Necessary if self.value > threshold => Verdict::Nonexistence,
            ThresholdRole::Sufficient if self.value <= threshold => Verdict::Existence,
            _ => Verdict::Inconclusive,
        }
    }

    /// Smallest and largest profile values over scales in `[lo, hi]`.
    pub fn profile_range(&self, lo: f64, hi: f64) -> (f64, f64) {
        let vals = self.profile.iter().filter(|e| e.0 >= lo * (1.0 - 1e-12) && e.0 <= hi * (1.0 + 1e-12));
        vals.fold((f64::INFINITY, 0.0f64), |(a, b), e| (a.min(e.1), b.max(e.1)))
    }
}

pub(crate) fn growth_factor(profile: &[(f64, f64)], decades: f64) -> f64 {
    let span = 10f64.powf(-decades) * (1.0 + 1e-9);
    let mut g = 1.0f64;
    for (i, &(s_small, v_small)) in profile.iter().enumerate() {
        for &(s_big, v_big) in &profile[i + 1..] {
            if s_small > s_big * span {
                continue;
            }
            let r = if v_small == 0.0 {
                continue;
            } else if v_big == 0.0 || v_small.is_infinite() {
                f64::INFINITY
            } else {
                v_small / v_big
            };
            g = g.max(r);
        }
    }
    g
}

/// Centre grid and radius sampling for the supremum searches.
#[derive(Clone, Debug)]
pub struct SearchSpec {
    pub centers_per_component: usize,
    /// Log-spaced radii per decade.
    pub per_decade: usize,
    /// Radii span `[10^{-decades}, 1) · T^{1/θ}`.
    pub decades: usize,
    /// Refine once around each argmax with a covering of the ball.
    pub refine: bool,
    /// Additional centres, typically singular points of the data.
    pub extra_centers: Vec<f64>,
    pub tol: MassTolerance,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            centers_per_component: 64,
            per_decade: 8,
            decades: 6,
            refine: true,
            extra_centers: Vec::new(),
            tol: MassTolerance::default(),
        }
    }
}

impl SearchSpec {
    pub fn with_centers(mut self, n: usize) -> Self {
        self.centers_per_component = n;
        self
    }

    pub fn with_decades(mut self, decades: usize) -> Self {
        self.decades = decades;
        self
    }

    /// Radii `T^{1/θ} 10^{-decades + k/per_decade}`, ascending; the top radius
    /// `T^{1/θ}` itself is included only on request.
    pub fn radii(&self, horizon: f64, theta: f64, include_top: bool) -> Vec<f64> {
        let top = horizon.powf(1.0 / theta);
        let n = self.decades * self.per_decade;
        let last = if include_top { n } else { n - 1 };
        (0..=last)
            .map(|k| top * 10f64.powf(-(self.decades as f64) + k as f64 / self.per_decade as f64))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.centers_per_component == 0 || self.per_decade == 0 || self.decades == 0 {
            return domain("search spec needs positive centre count, decades and points per decade");
        }
        Ok(())
    }

    fn centres(&self, dom: &Domain, mu: &MeasureSpec) -> Result<Vec<f64>> {
        let n = self.centers_per_component;
        let mut out = Vec::new();
        for (l, u) in dom.search_pieces()? {
            for k in 0..n {
                out.push(l + (k as f64 + 0.5) * (u - l) / n as f64);
            }
        }
        out.extend(dom.boundary_points());
        out.extend(self.extra_centers.iter().copied());
        out.extend(hotspots(mu));
        out.retain(|&z| dom.in_closure(&[z]));
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        Ok(out)
    }
}

fn hotspots(mu: &MeasureSpec) -> Vec<f64> {
    let mut out: Vec<f64> = mu.atoms.iter().map(|a| a.0).collect();
    out.extend(mu.boundary.iter().map(|b| b.0));
    if let crate::measures::Density::Power(p) = &mu.interior {
        out.push(p.center);
    }
    out
}

struct ScaleSup {
    scale: f64,
    value: f64,
    z: Option<f64>,
    skipped: usize,
}

/// Sup over centres of `eval(z, r)` at every radius; `None` marks a skipped point.
fn scan<F>(
    dom: &Domain,
    spec: &SearchSpec,
    centres: &[f64],
    radii: &[f64],
    admissible: &(dyn Fn(f64, f64) -> bool + Sync),
    eval: F,
) -> Result<Vec<ScaleSup>>
where
    F: Fn(f64, f64) -> Result<Option<f64>> + Sync,
{
    radii
        .par_iter()
        .map(|&r| {
            let mut best = ScaleSup { scale: r, value: 0.0, z: None, skipped: 0 };
            let visit = |z: f64, best: &mut ScaleSup| -> Result<()> {
                if !admissible(z, r) {
                    return Ok(());
                }
                match eval(z, r)? {
                    None => best.skipped += 1,
                    Some(v) if best.z.is_none() || v > best.value => {
                        best.value = v;
                        best.z = Some(z);
                    }
                    Some(_) => {}
                }
                Ok(())
            };
            for &z in centres {
                visit(z, &mut best)?;
            }
            if spec.refine {
                if let Some(z0) = best.z {
                    if best.value.is_finite() && best.value > 0.0 {
                        for c in dom.cover_centers(&[z0], r, 0.5)? {
                            visit(c[0], &mut best)?;
                        }
                    }
                }
            }
            Ok(best)
        })
        .collect()
}

fn assemble(kind: CriterionKind, base: CriterionReport, sups: Vec<ScaleSup>) -> CriterionReport {
    let mut rep = CriterionReport { kind, ..base };
    for s in &sups {
        rep.skipped += s.skipped;
        rep.profile.push((s.scale, s.value));
        if s.value > rep.value || (rep.witness.is_none() && s.z.is_some() && s.value >= rep.value) {
            rep.value = s.value;
            rep.witness = s.z.map(|z| Witness { z, scale: s.scale });
        }
    }
    rep.growth = growth_factor(&rep.profile, 3.0);
    rep
}

fn check_common(mu: &MeasureSpec, dom: &Domain, p: f64, theta: f64, horizon: f64, spec: &SearchSpec) -> Result<()> {
    if !(p > 1.0) {
        return domain(format!("exponent p must exceed 1, got {p}"));
    }
    if !(theta > 0.0 && theta < 2.0) {
        return domain(format!("order θ must lie in (0,2), got {theta}"));
    }
    if (mu.theta - theta).abs() > 1e-14 {
        return domain(format!("measure was built for θ = {}, criterion asked for θ = {theta}", mu.theta));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return domain(format!("horizon T must be positive and finite, got {horizon}"));
    }
    if dom.components().is_err() {
        return Err(Error::Unsupported("supremum searches are implemented for interval domains".into()));
    }
    spec.validate()?;
    mu.validate(dom, None)
}

/// `∫_l^u d(y)^e dy` for `[l, u]` inside the component `(a, b)`.
fn distance_power_integral(comp: (f64, f64), l: f64, u: f64, e: f64) -> f64 {
    let (a, b) = comp;
    let mid = if a.is_finite() && b.is_finite() {
        0.5 * (a + b)
    } else if a.is_finite() {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    let e1 = e + 1.0;
    let mut s = 0.0;
    let (l1, u1) = (l, u.min(mid));
    if u1 > l1 {
        s += ((u1 - a).powf(e1) - (l1 - a).powf(e1)) / e1;
    }
    let (l2, u2) = (l.max(mid), u);
    if u2 > l2 {
        s += ((b - l2).powf(e1) - (b - u2).powf(e1)) / e1;
    }
    s
}

fn weighted_ball_volume(dom: &Domain, z: f64, r: f64, e: f64) -> Result<f64> {
    let ball = dom.ball_intersect(&[z], r)?;
    let comps = dom.components()?;
    let mut total = 0.0;
    if let BallPieces::Intervals(pieces) = &ball.pieces {
        for &(l, u) in pieces {
            let comp = comps.iter().find(|&&(a, b)| a <= l && u <= b).copied().expect("piece inside a component");
            total += distance_power_integral(comp, l, u, e);
        }
    }
    Ok(total)
}

/// Ball mass with non-integrable data mapped to `+∞`.
fn mass_or_infinite(mu: &MeasureSpec, dom: &Domain, z: f64, r: f64, tol: MassTolerance) -> Result<f64> {
    match mu.integrate_ball(dom, &[z], r, TestFn::One, tol) {
        Err(Error::Divergence(_)) => Ok(f64::INFINITY),
        other => other,
    }
}

/// `sup μ(B_Ω(z,σ)) / (σ^{-θ/(p-1)} ∫_{B_Ω(z,σ)} d^{θ/2} dy)`.
pub fn necessary_subcritical(
    mu: &MeasureSpec,
    dom: &Domain,
    p: f64,
    theta: f64,
    horizon: f64,
    spec: &SearchSpec,
) -> Result<CriterionReport> {
    check_common(mu, dom, p, theta, horizon, spec)?;
    let kind = CriterionKind::NecessarySubcritical;
    let base = CriterionReport::empty(kind, horizon, p, theta, mu.amplitude);
    let radii = spec.radii(horizon, theta, false);
    if mu.is_zero() {
        return Ok(zero_report(base, &radii));
    }
    let centres = spec.centres(dom, mu)?;
    let expo = theta / (p - 1.0);
    let sups = scan(dom, spec, &centres, &radii, &|_, _| true, |z, r| {
        let den = r.powf(-expo) * weighted_ball_volume(dom, z, r, 0.5 * theta)?;
        if !(den > 1e-300) {
            return Ok(None);
        }
        let num = mass_or_infinite(mu, dom, z, r, spec.tol)?;
        Ok(Some(num / den))
    })?;
    Ok(assemble(kind, base, sups))
}

fn zero_report(mut base: CriterionReport, radii: &[f64]) -> CriterionReport {
    base.profile = radii.iter().map(|&r| (r, 0.0)).collect();
    base
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriticalLocus {
    Interior,
    Boundary,
}

/// Critical-exponent forms: log-normalized masses at interior centres with
/// `d(z) ≥ 3σ`, or at boundary centres.
pub fn necessary_critical(
    mu: &MeasureSpec,
    dom: &Domain,
    p: f64,
    theta: f64,
    horizon: f64,
    locus: CriticalLocus,
    spec: &SearchSpec,
) -> Result<CriterionReport> {
    check_common(mu, dom, p, theta, horizon, spec)?;
    let n = dom.dim() as f64;
    let (kind, pc) = match locus {
        CriticalLocus::Interior => (CriterionKind::NecessaryCriticalInterior, critical_exponent(theta, dom.dim(), 0.0)),
        CriticalLocus::Boundary => {
            (CriterionKind::NecessaryCriticalBoundary, critical_exponent(theta, dom.dim(), 0.5 * theta))
        }
    };
    if !same_exponent(p, pc) {
        return domain(format!("the {} critical condition needs p = {pc}, got p = {p}", kind.label()));
    }
    let base = CriterionReport::empty(kind, horizon, p, theta, mu.amplitude);
    let radii = spec.radii(horizon, theta, false);
    if mu.is_zero() {
        return Ok(zero_report(base, &radii));
    }
    let sups = match locus {
        CriticalLocus::Interior => {
            let centres = spec.centres(dom, mu)?;
            let admissible = |z: f64, r: f64| dom.dist1(z) >= 3.0 * r;
            let rt = horizon.sqrt();
            scan(dom, spec, &centres, &radii, &admissible, |z, r| {
                let lf = (std::f64::consts::E + rt / r).ln().powf(-n / theta);
                let m = mass_or_infinite(mu, dom, z, r, spec.tol)?;
                Ok(Some(dom.dist1(z).powf(-0.5 * theta) * m / lf))
            })?
        }
        CriticalLocus::Boundary => {
            let centres = dom.boundary_points();
            let top = horizon.powf(1.0 / theta);
            let expo = (2.0 * n + theta) / (2.0 * theta);
            let no_refine = SearchSpec { refine: false, ..spec.clone() };
            scan(dom, &no_refine, &centres, &radii, &|_, _| true, |z, r| {
                let lf = (std::f64::consts::E + top / r).ln().powf(-expo);
                Ok(Some(mass_or_infinite(mu, dom, z, r, spec.tol)? / lf))
            })?
        }
    };
    Ok(assemble(kind, base, sups))
}

/// `∫_0^T s^{-(N/θ)(p-1)} (sup_z ∫_{B_Ω(z,s^{1/θ})} dμ/(d^{θ/2}+√s))^{p-1} ds`,
/// by composite Simpson in `log s` on the search radii plus a power-law tail.
pub fn sufficient_kernel_integral(
    mu: &MeasureSpec,
    dom: &Domain,
    p: f64,
    theta: f64,
    horizon: f64,
    spec: &SearchSpec,
) -> Result<CriterionReport> {
    check_common(mu, dom, p, theta, horizon, spec)?;
    let kind = CriterionKind::SufficientKernelIntegral;
    let base = CriterionReport::empty(kind, horizon, p, theta, mu.amplitude);
    let radii = spec.radii(horizon, theta, true);
    let times: Vec<f64> = radii.iter().map(|r| r.powf(theta)).collect();
    if mu.is_zero() {
        return Ok(CriterionReport { profile: times.iter().map(|&s| (s, 0.0)).collect(), ..base });
    }
    let centres = spec.centres(dom, mu)?;
    let sups = scan(dom, spec, &centres, &radii, &|_, _| true, |z, r| {
        let s = r.powf(theta);
        match mu.integrate_ball(dom, &[z], r, TestFn::InvShifted { t: s }, spec.tol) {
            Err(Error::Divergence(m)) => Err(Error::Divergence(format!("inner supremum at s = {s:e}: {m}"))),
            other => other.map(Some),
        }
    })?;
    let n = dom.dim() as f64;
    let integrand: Vec<f64> =
        sups.iter().map(|e| e.scale.powf(theta * (1.0 - (n / theta) * (p - 1.0))) * e.value.powf(p - 1.0)).collect();
    // integrand in log s: g(s) s
    let step = std::f64::consts::LN_10 / spec.per_decade as f64 * theta;
    let mut total = simpson(&integrand, step);
    let (f0, f1) = (integrand[0], integrand[1]);
    if f0 > 0.0 {
        let beta = (f1 / f0).ln() / step;
        if !(beta > 0.05) {
            total = f64::INFINITY;
        } else {
            total += f0 / beta;
        }
    }
    let mut rep = CriterionReport { value: total, ..base };
    let mut peak = 0.0;
    for (e, (&g, &s)) in sups.iter().zip(integrand.iter().zip(&times)) {
        rep.profile.push((s, e.value));
        rep.skipped += e.skipped;
        let lead = if total.is_infinite() && s == times[0] { f64::INFINITY } else { g };
        if lead > peak || rep.witness.is_none() {
            peak = lead;
            rep.witness = e.z.map(|z| Witness { z, scale: s });
        }
    }
    rep.growth = growth_factor(&rep.profile, 3.0);
    Ok(rep)
}

fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    let even = n - n % 2;
    let mut s = 0.0;
    let mut k = 0;
    while k + 2 <= even {
        s += h / 3.0 * (f[k] + 4.0 * f[k + 1] + f[k + 2]);
        k += 2;
    }
    if even < n {
        s += 0.5 * h * (f[n - 1] + f[n]);
    }
    s
}

fn require_weighted(mu: &MeasureSpec) -> Result<()> {
    if mu.weighting != Weighting::Distance {
        return domain("this condition is stated for μ = d^{θ/2} f dy + h dσ; the measure uses a plain density");
    }
    if !mu.atoms.is_empty() {
        return domain("atoms have no density and are outside this condition");
    }
    Ok(())
}

fn weighted_density_integral(
    mu: &MeasureSpec,
    dom: &Domain,
    z: f64,
    r: f64,
    transform: Transform,
    w: Weight,
    tol: MassTolerance,
) -> Result<f64> {
    let ball = dom.ball_intersect(&[z], r)?;
    let mut total = 0.0;
    if let BallPieces::Intervals(pieces) = &ball.pieces {
        for &(l, u) in pieces {
            match integrate_density(dom, &mu.interior, transform, w, l, u, tol) {
                Err(Error::Divergence(_)) => return Ok(f64::INFINITY),
                other => total += other?,
            }
        }
    }
    Ok(total)
}

/// Both power-norm conditions, each divided by its power of `σ`; the report
/// carries the larger at every radius.
#[allow(clippy::too_many_arguments)]
pub fn sufficient_qnorm(
    mu: &MeasureSpec,
    dom: &Domain,
    p: f64,
    q: f64,
    theta: f64,
    horizon: f64,
    spec: &SearchSpec,
) -> Result<CriterionReport> {
    if !(q > 1.0) {
        return domain(format!("the power-norm condition needs q > 1, got {q}"));
    }
    check_common(mu, dom, p, theta, horizon, spec)?;
    require_weighted(mu)?;
    mu.validate(dom, Some(p))?;
    let kind = CriterionKind::SufficientQNorm;
    let base = CriterionReport::empty(kind, horizon, p, theta, mu.amplitude);
    let radii = spec.radii(horizon, theta, false);
    if mu.is_zero() {
        return Ok(zero_report(base, &radii));
    }
    let n = dom.dim() as f64;
    let kq = mu.amplitude.powf(q);
    let interior_expo = n - theta * q / (p - 1.0);
    let boundary_expo = n - 1.0 + theta * q * (0.5 + 1.0 / theta - 1.0 / (p - 1.0));
    let centres = spec.centres(dom, mu)?;
    let bpts = dom.boundary_points();
    let sups = scan(dom, spec, &centres, &radii, &|_, _| true, |z, r| {
        let w = Weight::Factor { theta, t: r.powf(theta) };
        let f = if mu.interior.is_zero() {
            0.0
        } else {
            kq * weighted_density_integral(mu, dom, z, r, Transform::Power(q), w, spec.tol)? / r.powf(interior_expo)
        };
        let mut g = 0.0;
        if bpts.contains(&z) && mu.has_boundary_part() {
            let s: f64 = mu.boundary.iter().filter(|b| (b.0 - z).abs() <= r).map(|b| b.1.powf(q)).sum();
            g = kq * s / r.powf(boundary_expo);
        }
        Ok(Some(f.max(g)))
    })?;
    Ok(assemble(kind, base, sups))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LogLocus {
    /// Interior form with boundary weight `d^l`, `l ∈ {0, θ/2}`.
    Interior { l: f64 },
    /// Surface form for data carried by the boundary.
    Boundary,
}

/// Log-refined condition at a critical exponent: the sup of
/// `∫ d^l Φ(T^{1/(p-1)} f) dy` divided by `T^{(N+l)/θ} [log(e + T^{1/θ}/σ)]^{r-(N+l)/θ}`.
#[allow(clippy::too_many_arguments)]
pub fn sufficient_log(
    mu: &MeasureSpec,
    dom: &Domain,
    p: f64,
    theta: f64,
    r: f64,
    horizon: f64,
    locus: LogLocus,
    spec: &SearchSpec,
) -> Result<CriterionReport> {
    check_common(mu, dom, p, theta, horizon, spec)?;
    require_weighted(mu)?;
    if !(r > 0.0) {
        return domain(format!("log refinement exponent r must be positive, got {r}"));
    }
    let n = dom.dim() as f64;
    let l = match locus {
        LogLocus::Boundary => {
            let pc = critical_exponent(theta, dom.dim(), 0.5 * theta);
            let p1 = critical_exponent(theta, 1, 0.5 * theta);
            if !(pc < p1) {
                return domain(format!(
                    "the boundary log condition needs p_θ(N,θ/2) < p_θ(1,θ/2), which fails for N = {}",
                    dom.dim()
                ));
            }
            return Err(Error::Unsupported("surface log condition in dimension above one".into()));
        }
        LogLocus::Interior { l } => l,
    };
    if !(l == 0.0 || same_exponent(l, 0.5 * theta)) {
        return domain(format!("boundary weight exponent l must be 0 or θ/2, got {l}"));
    }
    let pc = critical_exponent(theta, dom.dim(), l);
    if !same_exponent(p, pc) {
        return domain(format!("the log-refined condition needs p = p_θ(N,l) = {pc}, got p = {p}"));
    }
    let rmax = (n + l) / theta;
    if r >= rmax {
        return domain(format!("log refinement exponent r must lie in (0, {rmax}), got {r}"));
    }
    if mu.has_boundary_part() {
        return domain("the interior log condition takes no boundary density");
    }
    let kind = CriterionKind::SufficientLog;
    let base = CriterionReport::empty(kind, horizon, p, theta, mu.amplitude);
    let radii = spec.radii(horizon, theta, false);
    if mu.is_zero() {
        return Ok(zero_report(base, &radii));
    }
    let top = horizon.powf(1.0 / theta);
    let transform =
        Transform::LogRefined { r, scale: mu.amplitude * horizon.powf(1.0 / (p - 1.0)), shift: std::f64::consts::E };
    let w = if l == 0.0 { Weight::One } else { Weight::DistPow(l) };
    let centres = spec.centres(dom, mu)?;
    let sups = scan(dom, spec, &centres, &radii, &|_, _| true, |z, s| {
        let lhs = weighted_density_integral(mu, dom, z, s, transform, w, spec.tol)?;
        let rhs = horizon.powf((n + l) / theta) * (std::f64::consts::E + top / s).ln().powf(r - rmax);
        Ok(Some(lhs / rhs))
    })?;
    Ok(assemble(kind, base, sups))
}

/// Young-type gauge used by the Orlicz form of the sufficient conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OrliczGauge {
    /// `Ψ(τ) = τ^q`.
    Power { q: f64 },
    /// `Ψ(τ) = τ [log(L + τ)]^r`.
    LogRefined { r: f64, shift: f64 },
}

impl OrliczGauge {
    pub fn power(q: f64) -> Result<Self> {
        if !(q > 1.0) {
            return domain(format!("power gauge needs q > 1, got {q}"));
        }
        Ok(OrliczGauge::Power { q })
    }

    /// Log gauge with the smallest dyadic multiple `L = e·2^k` for which `Ψ` is
    /// convex, `τ^p/Ψ(τ)` increases and `τ^ε [log(L+τ)]^{-pr}` increases, all
    /// checked by sampling.
    pub fn log_refined(r: f64, p: f64, eps: f64) -> Result<Self> {
        if !(r > 0.0) {
            return domain(format!("log gauge needs r > 0, got {r}"));
        }
        if !(eps > 0.0 && eps < p - 1.0) {
            return domain(format!("log gauge needs 0 < ε < p - 1, got ε = {eps}"));
        }
        for k in 0..60 {
            let shift = std::f64::consts::E * 2f64.powi(k);
            let g = OrliczGauge::LogRefined { r, shift };
            let ll = |s: f64| (shift + s).ln();
            let ok_b = increasing(|s| (p - 1.0) * s.ln() - r * ll(s).ln());
            let ok_c = increasing(|s| eps * s.ln() - p * r * ll(s).ln());
            if g.is_convex() && ok_b && ok_c {
                return Ok(g);
            }
        }
        Err(Error::Accuracy { what: "no shift found for the log gauge".into(), estimate: f64::NAN })
    }

    pub fn psi(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        match *self {
            OrliczGauge::Power { q } => tau.powf(q),
            OrliczGauge::LogRefined { r, shift } => tau * (shift + tau).ln().powf(r),
        }
    }

    pub fn psi_inv(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        match *self {
            OrliczGauge::Power { q } => v.powf(1.0 / q),
            OrliczGauge::LogRefined { .. } => {
                // bisection in log τ; Ψ is increasing
                let (mut lo, mut hi) = (v.ln() - 50.0, v.ln() + 1.0);
                while self.psi(hi.exp()) < v {
                    hi += 10.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.psi(mid.exp()) < v {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-15 {
                        break;
                    }
                }
                (0.5 * (lo + hi)).exp()
            }
        }
    }

    /// `A(τ) = Ψ^{-1}(τ)^p / τ`.
    pub fn a_map(&self, tau: f64, p: f64) -> f64 {
        self.psi_inv(tau).powf(p) / tau
    }

    /// `B(τ) = τ / Ψ^{-1}(τ)`.
    pub fn b_map(&self, tau: f64) -> f64 {
        tau / self.psi_inv(tau)
    }

    /// Sampled convexity and monotonicity on `[10^{-8}, 10^8]`.
    pub fn is_convex(&self) -> bool {
        let xs: Vec<f64> = (0..=320).map(|k| 10f64.powf(-8.0 + k as f64 * 0.05)).collect();
        let vals: Vec<f64> = xs.iter().map(|&x| self.psi(x)).collect();
        if vals[0] <= 0.0 || vals.windows(2).any(|w| w[1] <= w[0]) {
            return false;
        }
        // slopes of consecutive chords must not decrease
        let slopes: Vec<f64> = (0..xs.len() - 1).map(|i| (vals[i + 1] - vals[i]) / (xs[i + 1] - xs[i])).collect();
        slopes.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12))
    }
}

fn increasing(ln_f: impl Fn(f64) -> f64) -> bool {
    let xs: Vec<f64> = (0..=320).map(|k| 10f64.powf(-8.0 + k as f64 * 0.05)).collect();
    xs.windows(2).all(|w| ln_f(w[1]) >= ln_f(w[0]) - 1e-12)
}
