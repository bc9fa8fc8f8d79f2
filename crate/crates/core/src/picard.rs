//! Monotone Picard iteration for the mild formulation on the grid's nodes and
//! a geometric time grid, plus the critical-amplitude bisection.
//!
//! Fields are stored as `nt × M` matrices (row = time node, column = space node).
//! The time convolution acts on mode coefficients and uses product
//! integration: `u^p` is interpolated linearly between time nodes and held
//! constant on `(0, t_0]`, and the exponential factor is integrated exactly.

use nalgebra::{DMatrix, DVector};

use crate::criteria::{necessary_subcritical, SearchSpec};
use crate::dirichlet::DirichletKernelGrid;
use crate::error::{domain, Error, Result};
use crate::measures::MeasureSpec;

#[derive(Clone, Copy, Debug)]
pub struct PicardOptions {
    /// Relative sup-change accepted as converged.
    pub tol: f64,
    /// Iteration budget.
    pub budget: usize,
    /// Consecutive small changes needed for convergence, and the lag of the
    /// growth test.
    pub window: usize,
    /// Values above this ceiling declare divergence.
    pub overflow: f64,
    /// Growth of the normalized sup over `window` iterations declaring divergence.
    pub growth: f64,
    /// Ratio between consecutive time nodes.
    pub time_ratio: f64,
    /// `T / t_0` is at least this.
    pub time_span: f64,
    /// Allowed decrease between iterates, relative to the sup.
    pub monotone_tol: f64,
    /// Declared accuracy of the time quadrature.
    pub quad_tol: f64,
    /// Necessary-ratio level above which [`solve`] declares divergence
    /// without iterating; a finite mesh cannot see data below its scale.
    pub necessary_ceiling: Option<f64>,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            tol: 1e-9,
            budget: 300,
            window: 3,
            overflow: 1e14,
            growth: 10.0,
            time_ratio: 2f64.powf(0.25),
            time_span: 1e4,
            monotone_tol: 1e-10,
            quad_tol: 1e-3,
            necessary_ceiling: None,
        }
    }
}

/// `t_k = T r^{k-K}`, `k = 0..=K`, with `K` the least integer giving `T/t_0 ≥ span`.
pub fn geometric_times(horizon: f64, opts: &PicardOptions) -> Result<Vec<f64>> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return domain(format!("horizon must be positive, got {horizon}"));
    }
    if !(opts.time_ratio > 1.0 && opts.time_span > 1.0) {
        return domain("time grid needs ratio > 1 and span > 1");
    }
    let k = (opts.time_span.ln() / opts.time_ratio.ln() - 1e-9).ceil() as i32;
    Ok((0..=k).map(|j| horizon * opts.time_ratio.powi(j - k)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivergenceSignal {
    Overflow,
    Growth,
    /// The initial term itself is infinite at some node.
    InitialTerm,
    /// The necessary ratio of the data exceeds the configured ceiling.
    NecessaryRatio,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PicardVerdict {
    Pending,
    Converged,
    Diverged(DivergenceSignal),
    Budget,
}

impl PicardVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            PicardVerdict::Pending => "pending",
            PicardVerdict::Converged => "converged",
            PicardVerdict::Diverged(DivergenceSignal::Overflow) => "diverged_overflow",
            PicardVerdict::Diverged(DivergenceSignal::Growth) => "diverged_growth",
            PicardVerdict::Diverged(DivergenceSignal::InitialTerm) => "diverged_initial",
            PicardVerdict::Diverged(DivergenceSignal::NecessaryRatio) => "diverged_necessary",
            PicardVerdict::Budget => "budget",
        }
    }

    pub fn is_converged(&self) -> bool {
        *self == PicardVerdict::Converged
    }
}

/// `u_1(x_i, t_n) = ∫ K(x_i, y, t_n) dμ(y)` on the mesh.
#[derive(Clone, Debug)]
pub struct InitialTerm {
    pub times: Vec<f64>,
    pub values: DMatrix<f64>,
    /// Nodes whose cell carries infinite mass.
    pub flagged: Vec<usize>,
    /// Largest boundary-limit extrapolation spread met.
    pub boundary_spread: f64,
}

pub fn initial_term(mu: &MeasureSpec, grid: &DirichletKernelGrid, times: &[f64]) -> Result<InitialTerm> {
    let dom = grid.domain();
    mu.validate(dom, None)?;
    if (mu.theta - grid.theta()).abs() > 1e-14 {
        return domain(format!("measure was built for θ = {}, grid has θ = {}", mu.theta, grid.theta()));
    }
    if times.iter().any(|&t| !(t > 0.0)) {
        return domain("mesh times must be positive");
    }
    let m = grid.len();
    let nt = times.len();
    let mut values = DMatrix::<f64>::zeros(nt, m);
    if mu.is_zero() {
        return Ok(InitialTerm { times: times.to_vec(), values, flagged: Vec::new(), boundary_spread: 0.0 });
    }
    let half = 0.5 * grid.theta();
    let modes = grid.modes();
    // coefficients of the interior part and interior atoms
    let mut source = DVector::<f64>::zeros(m);
    let mut flagged = Vec::new();
    if !mu.interior.is_zero() {
        for (j, &(l, u)) in grid.cells().iter().enumerate() {
            match mu.interior_mass(dom, l, u) {
                Ok(v) => source[j] = v / mu.amplitude / grid.distances()[j].powf(half),
                Err(Error::Divergence(_)) => flagged.push(j),
                Err(e) => return Err(e),
            }
        }
    }
    if !flagged.is_empty() {
        values.fill(f64::INFINITY);
        return Ok(InitialTerm { times: times.to_vec(), values, flagged, boundary_spread: 0.0 });
    }
    let mut coef = modes.transpose() * source;
    let mut surface: Vec<(f64, f64)> = mu.boundary.iter().filter(|b| b.1 > 0.0).copied().collect();
    for &(x, mass) in &mu.atoms {
        let d = dom.dist1(x);
        if d == 0.0 {
            surface.push((x, mass));
        } else {
            coef += grid.mode_values(x)? * (mass / d.powf(half));
        }
    }
    let mut spread = 0.0f64;
    for (n, &t) in times.iter().enumerate() {
        let decayed = DVector::from_fn(m, |k, _| (-grid.eigenvalues()[k] * t).exp() * coef[k]);
        let mut row = modes * decayed;
        for &(b, mass) in &surface {
            let (col, s) = grid.boundary_column(b, t)?;
            spread = spread.max(s);
            for i in 0..m {
                row[i] += mass * col[i];
            }
        }
        for i in 0..m {
            values[(n, i)] = mu.amplitude * row[i];
        }
    }
    Ok(InitialTerm { times: times.to_vec(), values, flagged, boundary_spread: spread })
}

/// `Σ_k (-l)^k / (k! den(k))`, for small `l` where the closed forms cancel.
fn phi_series(l: f64, den: impl Fn(f64) -> f64) -> f64 {
    let mut term = 1.0;
    let mut s = 0.0;
    for k in 0..40 {
        let kf = k as f64;
        let add = term / den(kf);
        s += add;
        if add.abs() < 1e-17 * s.abs() {
            break;
        }
        term *= -l / (kf + 1.0);
    }
    s
}

fn phi1(l: f64) -> f64 {
    // ∫_0^1 u e^{-l(1-u)} du
    if l < 0.5 {
        phi_series(l, |k| (k + 1.0) * (k + 2.0))
    } else {
        (l - 1.0 + (-l).exp()) / (l * l)
    }
}

fn phi0(l: f64) -> f64 {
    // ∫_0^1 v e^{-l v} dv
    if l < 0.5 {
        phi_series(l, |k| k + 2.0)
    } else {
        (1.0 - (-l).exp() * (1.0 + l)) / (l * l)
    }
}

/// Product-integration weights for `∫_0^{t_n} e^{-λ_k (t_n - s)} w_k(s) ds`
/// evaluated at selected target nodes of a source grid.
struct Convolution {
    targets: Vec<usize>,
    offsets: Vec<usize>,
    modes: usize,
    /// Layout per target: `[k][m]`, `m` = 0..=target.
    weights: Vec<f64>,
}

impl Convolution {
    fn new(times: &[f64], targets: &[usize], lambda: &[f64]) -> Self {
        let mk = lambda.len();
        let mut offsets = Vec::with_capacity(targets.len());
        let mut weights = Vec::new();
        for &n in targets {
            offsets.push(weights.len());
            let len = n + 1;
            let tn = times[n];
            let base = weights.len();
            weights.resize(base + mk * len, 0.0);
            for (k, &lam) in lambda.iter().enumerate() {
                let w = &mut weights[base + k * len..base + (k + 1) * len];
                let t0 = times[0];
                w[0] += (-lam * (tn - t0)).exp() * -(-lam * t0).exp_m1() / lam;
                for mm in 1..=n {
                    let (a, b) = (times[mm - 1], times[mm]);
                    let dt = b - a;
                    let e = (-lam * (tn - b)).exp();
                    let l = lam * dt;
                    w[mm] += dt * e * phi1(l);
                    w[mm - 1] += dt * e * phi0(l);
                }
            }
        }
        Convolution { targets: targets.to_vec(), offsets, modes: mk, weights }
    }

    /// `coef` is `n_source × M`; returns `n_targets × M`.
    fn apply(&self, coef: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::<f64>::zeros(self.targets.len(), self.modes);
        for (r, (&n, &off)) in self.targets.iter().zip(&self.offsets).enumerate() {
            let len = n + 1;
            for k in 0..self.modes {
                let w = &self.weights[off + k * len..off + (k + 1) * len];
                let c = &coef.column(k);
                let mut s = 0.0;
                for mm in 0..len {
                    s += w[mm] * c[mm];
                }
                out[(r, k)] = s;
            }
        }
        out
    }
}

/// Duhamel term `∫_0^t ∫ G(x,y,t-s) u(y,s)^p dy ds` at the target nodes.
fn duhamel(grid: &DirichletKernelGrid, conv: &Convolution, u: &DMatrix<f64>, p: f64, modes_t: &DMatrix<f64>) -> DMatrix<f64> {
    let widths = grid.widths();
    let pw = DMatrix::from_fn(u.nrows(), u.ncols(), |n, j| u[(n, j)].max(0.0).powf(p) * widths[j]);
    let coef = pw * grid.modes();
    conv.apply(&coef) * modes_t
}

#[derive(Clone, Debug)]
pub struct PicardRun {
    times: Vec<f64>,
    p: f64,
    u1: DMatrix<f64>,
    current: DMatrix<f64>,
    previous: DMatrix<f64>,
    iteration: usize,
    sup_history: Vec<f64>,
    changes: Vec<f64>,
    verdict: PicardVerdict,
    flagged: Vec<usize>,
}

impl PicardRun {
    /// Run holding `u_1` as the current iterate (`j = 1`, `u_0 = 0`).
    pub fn start(init: InitialTerm, p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return domain(format!("exponent p must exceed 1, got {p}"));
        }
        let zeros = DMatrix::zeros(init.values.nrows(), init.values.ncols());
        let verdict = if !init.flagged.is_empty() {
            PicardVerdict::Diverged(DivergenceSignal::InitialTerm)
        } else if init.values.iter().all(|&v| v == 0.0) {
            PicardVerdict::Converged
        } else {
            PicardVerdict::Pending
        };
        Ok(PicardRun {
            times: init.times,
            p,
            current: init.values.clone(),
            u1: init.values,
            previous: zeros,
            iteration: 1,
            sup_history: vec![1.0],
            changes: Vec::new(),
            verdict,
            flagged: init.flagged,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("time grid is never empty")
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn initial(&self) -> &DMatrix<f64> {
        &self.u1
    }
    pub fn current(&self) -> &DMatrix<f64> {
        &self.current
    }
    pub fn previous(&self) -> &DMatrix<f64> {
        &self.previous
    }
    pub fn iteration(&self) -> usize {
        self.iteration
    }
    /// Per iteration: `max_n (max_i u_j(x_i,t_n) / max_i u_1(x_i,t_n))`.
    pub fn sup_history(&self) -> &[f64] {
        &self.sup_history
    }
    pub fn changes(&self) -> &[f64] {
        &self.changes
    }
    pub fn verdict(&self) -> PicardVerdict {
        self.verdict
    }
    pub fn flagged(&self) -> &[usize] {
        &self.flagged
    }

    fn normalized_sup(&self, u: &DMatrix<f64>) -> f64 {
        let mut s = 0.0f64;
        for n in 0..u.nrows() {
            let base = self.u1.row(n).max();
            if base > 0.0 {
                s = s.max(u.row(n).max() / base);
            }
        }
        s
    }
}

/// Iterates `u_{j+1} = u_1 + Duhamel(u_j^p)` until a verdict or the budget.
pub fn picard_iterate(mut run: PicardRun, grid: &DirichletKernelGrid, opts: &PicardOptions) -> Result<PicardRun> {
    if run.verdict != PicardVerdict::Pending {
        return Ok(run);
    }
    if run.u1.ncols() != grid.len() {
        return domain("run mesh does not match the grid");
    }
    let targets: Vec<usize> = (0..run.times.len()).collect();
    let conv = Convolution::new(&run.times, &targets, grid.eigenvalues());
    let modes_t = grid.modes().transpose();
    while run.verdict == PicardVerdict::Pending {
        if run.iteration >= opts.budget {
            run.verdict = PicardVerdict::Budget;
            break;
        }
        let new = &run.u1 + duhamel(grid, &conv, &run.current, run.p, &modes_t);
        run.iteration += 1;
        let peak = new.iter().cloned().fold(0.0, f64::max);
        if !new.iter().all(|v| v.is_finite()) || peak > opts.overflow {
            run.previous = std::mem::replace(&mut run.current, new);
            run.sup_history.push(f64::INFINITY);
            run.verdict = PicardVerdict::Diverged(DivergenceSignal::Overflow);
            break;
        }
        let mut drop = 0.0f64;
        let mut change = 0.0f64;
        for (a, b) in new.iter().zip(run.current.iter()) {
            drop = drop.max(b - a);
            change = change.max((a - b).abs());
        }
        if drop > opts.monotone_tol * peak {
            return Err(Error::Consistency(format!(
                "iterate {} decreased by {drop:e} (sup {peak:e}); time quadrature too coarse",
                run.iteration
            )));
        }
        let rel = if peak > 0.0 { change / peak } else { 0.0 };
        let s = run.normalized_sup(&new);
        run.sup_history.push(s);
        run.changes.push(rel);
        run.previous = std::mem::replace(&mut run.current, new);
        let w = opts.window;
        if run.changes.len() >= w && run.changes[run.changes.len() - w..].iter().all(|&c| c <= opts.tol) {
            run.verdict = PicardVerdict::Converged;
        } else if run.sup_history.len() > w {
            let h = &run.sup_history;
            if h[h.len() - 1] >= opts.growth * h[h.len() - 1 - w] {
                run.verdict = PicardVerdict::Diverged(DivergenceSignal::Growth);
            }
        }
    }
    Ok(run)
}

/// Initial term plus iteration on the default geometric grid of `horizon`,
/// after the optional necessary-ratio check.
pub fn solve(mu: &MeasureSpec, grid: &DirichletKernelGrid, p: f64, horizon: f64, opts: &PicardOptions) -> Result<PicardRun> {
    let times = geometric_times(horizon, opts)?;
    let init = initial_term(mu, grid, &times)?;
    let mut run = PicardRun::start(init, p)?;
    if let (Some(ceiling), PicardVerdict::Pending) = (opts.necessary_ceiling, run.verdict) {
        let r = necessary_subcritical(mu, grid.domain(), p, grid.theta(), horizon, &SearchSpec::default())?;
        if r.value > ceiling {
            run.verdict = PicardVerdict::Diverged(DivergenceSignal::NecessaryRatio);
            return Ok(run);
        }
    }
    picard_iterate(run, grid, opts)
}

#[derive(Clone, Copy, Debug)]
pub struct Residual {
    /// Against a time quadrature refined by the given factor.
    pub relative: f64,
    /// Against the solver's own quadrature.
    pub discrete: f64,
    /// `(time index, node)` of the worst refined residual.
    pub worst: (usize, usize),
}

/// Substitutes the current iterate back into the mild equation at every time
/// node from the second one on; residuals are relative to the sup at that time.
pub fn fixed_point_residual(run: &PicardRun, grid: &DirichletKernelGrid, refine: usize) -> Result<Residual> {
    if refine < 1 {
        return domain("refinement factor must be at least 1");
    }
    let times = &run.times;
    let nt = times.len();
    let u = &run.current;
    let m = u.ncols();
    let modes_t = grid.modes().transpose();
    let all: Vec<usize> = (0..nt).collect();
    let coarse = duhamel(grid, &Convolution::new(times, &all, grid.eigenvalues()), u, run.p, &modes_t);
    // refined grid: `refine` geometric steps per interval, values linear in log t
    let mut fine_t = vec![times[0]];
    let mut fine_u = DMatrix::<f64>::zeros((nt - 1) * refine + 1, m);
    fine_u.row_mut(0).copy_from(&u.row(0));
    for n in 1..nt {
        let (a, b) = (times[n - 1], times[n]);
        for s in 1..=refine {
            let lam = s as f64 / refine as f64;
            let t = if s == refine { b } else { a * (b / a).powf(lam) };
            let r = fine_t.len();
            fine_t.push(t);
            for j in 0..m {
                fine_u[(r, j)] = (1.0 - lam) * u[(n - 1, j)] + lam * u[(n, j)];
            }
        }
    }
    let targets: Vec<usize> = (0..nt).map(|n| n * refine).collect();
    let fine = duhamel(grid, &Convolution::new(&fine_t, &targets, grid.eigenvalues()), &fine_u, run.p, &modes_t);
    let mut rel = 0.0f64;
    let mut disc = 0.0f64;
    let mut worst = (1, 0);
    for n in 1..nt {
        let scale = u.row(n).max();
        if scale <= 0.0 {
            continue;
        }
        for j in 0..m {
            let r = (u[(n, j)] - run.u1[(n, j)] - fine[(n, j)]).abs() / scale;
            if r > rel {
                rel = r;
                worst = (n, j);
            }
            disc = disc.max((u[(n, j)] - run.u1[(n, j)] - coarse[(n, j)]).abs() / scale);
        }
    }
    Ok(Residual { relative: rel, discrete: disc, worst })
}

/// Horizons `T_* 2^{-k/4}`, `k = 0..count`, keeping those at or above the
/// grid's resolved time `(floor_cells · h)^θ`.
pub fn horizon_schedule(grid: &DirichletKernelGrid, count: usize, floor_cells: f64) -> Result<Vec<f64>> {
    let floor = grid.resolved_time(floor_cells) * (1.0 - 1e-12);
    let out: Vec<f64> =
        (0..count).map(|k| grid.t_star() * 2f64.powf(-(k as f64) / 4.0)).filter(|&t| t >= floor).collect();
    if out.is_empty() {
        return domain(format!(
            "no horizon of the schedule from T_* = {} is resolved by the grid (floor {floor})",
            grid.t_star()
        ));
    }
    Ok(out)
}

/// Settings for the amplitude bisection.
#[derive(Clone, Copy, Debug)]
pub struct KappaSearch {
    /// Initial bracket guess; the lattice of probed amplitudes is fixed by it.
    pub lo: f64,
    pub hi: f64,
    /// No unsolvable amplitude above this is sought.
    pub ceiling: f64,
    /// Target relative width `(hi - lo)/hi`.
    pub tol_kappa: f64,
    pub options: PicardOptions,
}

impl Default for KappaSearch {
    fn default() -> Self {
        KappaSearch { lo: 0.2, hi: 0.6, ceiling: 1e3, tol_kappa: 0.05, options: PicardOptions::default() }
    }
}

/// Outcome of one amplitude over the horizon schedule.
#[derive(Clone, Debug)]
pub struct KappaProbe {
    pub kappa: f64,
    pub solvable: bool,
    /// Horizon that converged, if any.
    pub horizon: Option<f64>,
    pub verdicts: Vec<(f64, PicardVerdict)>,
}

#[derive(Clone, Debug)]
pub struct KappaBracket {
    pub lo: f64,
    /// Infinite when no unsolvable amplitude was found below the ceiling.
    pub hi: f64,
    pub horizons: Vec<f64>,
    pub probes: Vec<KappaProbe>,
    /// Whether the necessary-condition certificate confirmed `hi`.
    pub hi_certified: Option<bool>,
}

impl KappaBracket {
    pub fn is_bounded(&self) -> bool {
        self.hi.is_finite()
    }

    /// Horizon at which `lo` converged.
    pub fn lo_horizon(&self) -> Option<f64> {
        self.probes.iter().find(|p| p.kappa == self.lo).and_then(|p| p.horizon)
    }
}

/// Solvable if some horizon of the schedule converges. Horizons are tried
/// from the smallest, which converges most easily.
pub fn probe_kappa(
    family: &dyn Fn(f64) -> MeasureSpec,
    grid: &DirichletKernelGrid,
    p: f64,
    schedule: &[f64],
    opts: &PicardOptions,
    kappa: f64,
) -> Result<KappaProbe> {
    let mut probe = KappaProbe { kappa, solvable: false, horizon: None, verdicts: Vec::new() };
    if kappa == 0.0 {
        probe.solvable = true;
        return Ok(probe);
    }
    let mu = family(kappa);
    let mut order: Vec<f64> = schedule.to_vec();
    order.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for t in order {
        let run = solve(&mu, grid, p, t, opts)?;
        probe.verdicts.push((t, run.verdict()));
        if run.verdict().is_converged() {
            probe.solvable = true;
            probe.horizon = Some(t);
            break;
        }
    }
    Ok(probe)
}

/// Bisection of the solvability threshold in `κ` on a geometric lattice
/// fixed by the initial bracket. `certify(κ)` is the necessary-condition
/// check applied to the final `hi`.
pub fn kappa_star_bisect(
    family: &dyn Fn(f64) -> MeasureSpec,
    grid: &DirichletKernelGrid,
    p: f64,
    schedule: &[f64],
    search: &KappaSearch,
    certify: Option<&dyn Fn(f64) -> Result<bool>>,
) -> Result<KappaBracket> {
    if !(search.lo > 0.0 && search.hi > search.lo && search.ceiling >= search.hi) {
        return domain("kappa search needs 0 < lo < hi ≤ ceiling");
    }
    if !(search.tol_kappa > 0.0 && search.tol_kappa < 1.0) {
        return domain("tol_kappa must lie in (0,1)");
    }
    if schedule.is_empty() {
        return domain("empty horizon schedule");
    }
    let mut probes = Vec::new();
    let run = |k: f64, probes: &mut Vec<KappaProbe>| -> Result<bool> {
        let pr = probe_kappa(family, grid, p, schedule, &search.options, k)?;
        let s = pr.solvable;
        probes.push(pr);
        Ok(s)
    };
    let (mut lo, mut hi) = (search.lo, search.hi);
    while run(hi, &mut probes)? {
        lo = hi;
        hi *= 2.0;
        if hi > search.ceiling {
            return Ok(KappaBracket { lo, hi: f64::INFINITY, horizons: schedule.to_vec(), probes, hi_certified: None });
        }
    }
    if lo == search.lo {
        while !run(lo, &mut probes)? {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-8 * search.lo {
                return Err(Error::Accuracy { what: "no solvable amplitude found".into(), estimate: lo });
            }
        }
    }
    while hi - lo > search.tol_kappa * hi {
        let mid = (lo * hi).sqrt();
        if run(mid, &mut probes)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let hi_certified = match certify {
        Some(f) => Some(f(hi)?),
        None => None,
    };
    Ok(KappaBracket { lo, hi, horizons: schedule.to_vec(), probes, hi_certified })
}
