//! Dirichlet heat kernel of `(-Δ)^{θ/2}` with zero exterior data on a bounded
//! union of intervals, from a dense spectral decomposition of a grid operator.
//!
//! Discretization per node `x_i` with cell width `h_i`:
//! * point rule `c h_j |x_i - x_j|^{-1-θ}` for all `j ≠ i`;
//! * a nearest-neighbour coupling `β = -c ζ(θ-1) h^{-θ}` that cancels the
//!   leading lattice error of the point rule on smooth functions;
//! * the exterior integral `∫_{Ω^c} c |x_i - y|^{-1-θ} dy` in closed form.
//!
//! The result is symmetric in the weighted inner product `Σ h_i u_i v_i`; the
//! stored operator is the symmetrized form `H^{-1/2} S H^{-1/2}`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{domain, Error, Result};
use crate::geometry::Domain;
use crate::special::zeta;
use crate::stable::{eval_gamma_radial, StableParams};

/// Defaults for the operational horizon search.
#[derive(Clone, Copy, Debug)]
pub struct HorizonOptions {
    /// Ceiling on the fitted ratio `c2/c1` of the two-sided estimate.
    pub ratio_ceiling: f64,
    /// Smallest admitted time, as `(cells · h)^θ`.
    pub resolution_cells: f64,
}

impl Default for HorizonOptions {
    fn default() -> Self {
        HorizonOptions { ratio_ceiling: 1e3, resolution_cells: 8.0 }
    }
}

#[derive(Clone, Debug)]
pub struct DirichletKernelGrid {
    domain: Domain,
    params: StableParams,
    nodes: Vec<f64>,
    widths: Vec<f64>,
    dist: Vec<f64>,
    component: Vec<usize>,
    operator: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    /// `modes[(i,k)] = e_k(i)/sqrt(h_i)`, orthonormal for the weights `h`.
    modes: DMatrix<f64>,
    t_prime: f64,
    t_star: f64,
    fit_history: Vec<(f64, f64, f64)>,
}

/// Second argument of the normalized kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Site {
    Node(usize),
    Boundary(f64),
}

/// `D(x,t) = d(x)^{θ/2}/(d(x)^{θ/2} + √t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryFactor {
    pub x: f64,
    pub t: f64,
    pub value: f64,
}

impl BoundaryFactor {
    pub fn new(dom: &Domain, x: &[f64], t: f64, theta: f64) -> Result<Self> {
        if !(t > 0.0) {
            return domain("boundary factor needs t > 0");
        }
        let d = dom.distance_to_boundary(x)?;
        Ok(BoundaryFactor { x: x[0], t, value: boundary_factor(d, t, theta) })
    }
}

pub fn boundary_factor(d: f64, t: f64, theta: f64) -> f64 {
    let s = d.powf(0.5 * theta);
    s / (s + t.sqrt())
}

fn exterior_rate(x: f64, comps: &[(f64, f64)], c: f64, theta: f64) -> f64 {
    // complement = (-inf, a_0) ∪ (b_0, a_1) ∪ ... ∪ (b_last, inf)
    let mut gaps = vec![(f64::NEG_INFINITY, comps[0].0)];
    for w in comps.windows(2) {
        gaps.push((w[0].1, w[1].0));
    }
    gaps.push((comps[comps.len() - 1].1, f64::INFINITY));
    let tail = |near: f64| if near.is_finite() { near.powf(-theta) } else { 0.0 };
    let mut s = 0.0;
    for (p, q) in gaps {
        if q <= x {
            s += tail(x - q) - tail(x - p);
        } else {
            s += tail(p - x) - tail(q - x);
        }
    }
    c / theta * s
}

impl DirichletKernelGrid {
    pub fn assemble(dom: &Domain, m: usize, params: StableParams) -> Result<Self> {
        Self::assemble_with(dom, m, params, HorizonOptions::default())
    }

    pub fn assemble_with(dom: &Domain, m: usize, params: StableParams, opts: HorizonOptions) -> Result<Self> {
        if params.dim() != 1 {
            return Err(Error::Unsupported("grid operator exists only in one dimension".into()));
        }
        if !dom.is_bounded() {
            return domain("grid assembly needs a bounded domain; truncate it first");
        }
        if m < 16 {
            return domain(format!("grid size {m} is below the minimum of 16"));
        }
        let comps = dom.components()?.to_vec();
        let total: f64 = comps.iter().map(|(a, b)| b - a).sum();
        let mut counts: Vec<usize> = comps.iter().map(|(a, b)| ((b - a) / total * m as f64).round().max(4.0) as usize).collect();
        let last = counts.len() - 1;
        let fixed: usize = counts[..last].iter().sum();
        if fixed + 4 > m {
            return domain("too many components for the requested grid size");
        }
        counts[last] = m - fixed;
        let theta = params.order();
        let c = params.c_const();
        let mut nodes = Vec::with_capacity(m);
        let mut widths = Vec::with_capacity(m);
        let mut component = Vec::with_capacity(m);
        for (ci, (&(a, b), &n)) in comps.iter().zip(&counts).enumerate() {
            let h = (b - a) / (n as f64 + 1.0);
            for i in 1..=n {
                nodes.push(a + h * i as f64);
                widths.push(h);
                component.push(ci);
            }
        }
        let dist: Vec<f64> = nodes.iter().map(|&x| dom.dist1(x)).collect();
        let zeta_shift = -zeta(theta - 1.0);
        let mut s = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            let mut rate = exterior_rate(nodes[i], &comps, c, theta);
            for j in 0..m {
                if j != i {
                    let w = c * (nodes[i] - nodes[j]).abs().powf(-1.0 - theta);
                    rate += widths[j] * w;
                    s[(i, j)] = -widths[i] * widths[j] * w;
                }
            }
            let beta = c * zeta_shift * widths[i].powf(-theta);
            rate += 2.0 * beta;
            s[(i, i)] = widths[i] * rate;
            for j in [i.wrapping_sub(1), i + 1] {
                if j < m && component[j] == component[i] {
                    s[(i, j)] -= widths[i] * beta;
                }
            }
        }
        let sq: Vec<f64> = widths.iter().map(|h| h.sqrt()).collect();
        let operator = DMatrix::from_fn(m, m, |i, j| s[(i, j)] / (sq[i] * sq[j]));
        // exact symmetry: both triangles from one expression
        let operator = DMatrix::from_fn(m, m, |i, j| if i <= j { operator[(i, j)] } else { operator[(j, i)] });
        let eig = SymmetricEigen::new(operator.clone());
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut modes = DMatrix::<f64>::zeros(m, m);
        for (col, &k) in order.iter().enumerate() {
            let v = eig.eigenvectors.column(k);
            let sign = if v.sum() < 0.0 { -1.0 } else { 1.0 };
            for i in 0..m {
                modes[(i, col)] = sign * v[i] / sq[i];
            }
        }
        if eigenvalues[0] <= 0.0 {
            return Err(Error::Consistency(format!("smallest eigenvalue {} is not positive", eigenvalues[0])));
        }
        let mut grid = DirichletKernelGrid {
            domain: dom.clone(),
            params,
            nodes,
            widths,
            dist,
            component,
            operator,
            eigenvalues,
            modes,
            t_prime: f64::NAN,
            t_star: f64::NAN,
            fit_history: Vec::new(),
        };
        grid.locate_horizon(opts)?;
        Ok(grid)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }
    pub fn params(&self) -> &StableParams {
        &self.params
    }
    pub fn theta(&self) -> f64 {
        self.params.order()
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn widths(&self) -> &[f64] {
        &self.widths
    }
    /// Largest cell width.
    pub fn h(&self) -> f64 {
        self.widths.iter().cloned().fold(0.0, f64::max)
    }
    pub fn distances(&self) -> &[f64] {
        &self.dist
    }
    pub fn component_of(&self, i: usize) -> usize {
        self.component[i]
    }
    /// Symmetrized operator `H^{-1/2} S H^{-1/2}`.
    pub fn operator(&self) -> &DMatrix<f64> {
        &self.operator
    }
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }
    pub fn t_prime(&self) -> f64 {
        self.t_prime
    }
    pub fn t_star(&self) -> f64 {
        self.t_star
    }
    /// `(t, c1, c2)` per dyadic time visited by the horizon search.
    pub fn fit_history(&self) -> &[(f64, f64, f64)] {
        &self.fit_history
    }
    /// Smallest time at which the grid resolves the kernel scale.
    pub fn resolved_time(&self, cells: f64) -> f64 {
        (cells * self.h()).powf(self.theta())
    }

    /// Cells `[l_i, u_i]` tiling each component: midpoints between nodes, with
    /// the end cells reaching the component boundary.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let comps = self.domain.components().expect("grid domains are interval unions");
        let m = self.len();
        (0..m)
            .map(|i| {
                let c = self.component[i];
                let l = if i > 0 && self.component[i - 1] == c { 0.5 * (self.nodes[i - 1] + self.nodes[i]) } else { comps[c].0 };
                let u = if i + 1 < m && self.component[i + 1] == c { 0.5 * (self.nodes[i] + self.nodes[i + 1]) } else { comps[c].1 };
                (l, u)
            })
            .collect()
    }

    fn check_t(t: f64) -> Result<()> {
        if !(t > 0.0) {
            return domain(format!("time must be positive, got {t}"));
        }
        Ok(())
    }

    pub fn heat_kernel(&self, i: usize, j: usize, t: f64) -> Result<f64> {
        Self::check_t(t)?;
        let m = self.len();
        if i >= m || j >= m {
            return domain("node index out of range");
        }
        let mut s = 0.0;
        for k in 0..m {
            s += (-self.eigenvalues[k] * t).exp() * self.modes[(i, k)] * self.modes[(j, k)];
        }
        Ok(s)
    }

    /// Rows `G(x_i, ·, t)` for the listed nodes (one row per entry).
    pub fn kernel_rows(&self, rows: &[usize], t: f64) -> Result<DMatrix<f64>> {
        Self::check_t(t)?;
        let m = self.len();
        let decay: Vec<f64> = self.eigenvalues.iter().map(|l| (-l * t).exp()).collect();
        let sel = DMatrix::from_fn(rows.len(), m, |r, k| self.modes[(rows[r], k)] * decay[k]);
        Ok(sel * self.modes.transpose())
    }

    /// Mode values `Φ_k(x)` at an arbitrary point of the closure.
    pub fn mode_values(&self, x: f64) -> Result<DVector<f64>> {
        let m = self.len();
        let d = self.domain.distance_to_boundary(&[x])?;
        if d == 0.0 {
            return Ok(DVector::zeros(m));
        }
        let half = 0.5 * self.theta();
        let comp = self.domain.components()?.iter().position(|&(a, b)| a < x && x < b).expect("interior point");
        let idx: Vec<usize> = (0..m).filter(|&i| self.component[i] == comp).collect();
        let first = idx[0];
        let last = idx[idx.len() - 1];
        let scaled = |i: usize, k: usize| self.modes[(i, k)] / self.dist[i].powf(half);
        let pos = self.nodes[first..=last].partition_point(|&n| n <= x);
        let w = d.powf(half);
        let out = if pos == 0 {
            DVector::from_fn(m, |k, _| w * scaled(first, k))
        } else if pos > last - first {
            DVector::from_fn(m, |k, _| w * scaled(last, k))
        } else {
            let (i0, i1) = (first + pos - 1, first + pos);
            let lam = (x - self.nodes[i0]) / (self.nodes[i1] - self.nodes[i0]);
            DVector::from_fn(m, |k, _| w * ((1.0 - lam) * scaled(i0, k) + lam * scaled(i1, k)))
        };
        Ok(out)
    }

    /// `G(x, x_j, t)` for an arbitrary first argument.
    pub fn heat_kernel_at(&self, x: f64, j: usize, t: f64) -> Result<f64> {
        Self::check_t(t)?;
        let phi = self.mode_values(x)?;
        Ok((0..self.len()).map(|k| (-self.eigenvalues[k] * t).exp() * phi[k] * self.modes[(j, k)]).sum())
    }

    /// Nodes nearest a boundary point, ordered by distance.
    pub fn boundary_nodes(&self, b: f64, count: usize) -> Result<Vec<usize>> {
        if !self.domain.boundary_points().contains(&b) {
            return domain(format!("{b} is not a boundary point"));
        }
        let mut idx: Vec<usize> = (0..self.len())
            .filter(|&i| (self.nodes[i] - b).abs() <= self.dist[i] + 1e-14)
            .collect();
        idx.sort_by(|&p, &q| (self.nodes[p] - b).abs().partial_cmp(&(self.nodes[q] - b).abs()).unwrap());
        idx.truncate(count);
        Ok(idx)
    }

    /// `K(x, y, t)` together with the extrapolation spread for boundary `y`.
    pub fn k_kernel_detail(&self, x: f64, site: Site, t: f64) -> Result<(f64, f64)> {
        Self::check_t(t)?;
        let half = 0.5 * self.theta();
        if self.domain.distance_to_boundary(&[x])? == 0.0 {
            return Ok((0.0, 0.0));
        }
        match site {
            Site::Node(j) => {
                if j >= self.len() {
                    return domain("node index out of range");
                }
                Ok((self.heat_kernel_at(x, j, t)? / self.dist[j].powf(half), 0.0))
            }
            Site::Boundary(b) => {
                let idx = self.boundary_nodes(b, 3)?;
                let s: Vec<f64> = idx.iter().map(|&i| self.dist[i].powf(half)).collect();
                let q: Vec<f64> = idx
                    .iter()
                    .zip(&s)
                    .map(|(&i, &si)| self.heat_kernel_at(x, i, t).map(|g| g / si))
                    .collect::<Result<_>>()?;
                let (quad, lin) = extrapolate_to_zero(&s, &q);
                let spread = (quad - lin).abs() / quad.abs().max(f64::MIN_POSITIVE);
                if spread > 0.1 {
                    return Err(Error::Accuracy { what: format!("boundary limit of K at y={b}, t={t}"), estimate: spread });
                }
                Ok((quad.max(0.0), spread))
            }
        }
    }

    pub fn k_kernel(&self, x: f64, site: Site, t: f64) -> Result<f64> {
        self.k_kernel_detail(x, site, t).map(|v| v.0)
    }

    /// `K(x_i, b, t)` at every node for a boundary point `b`, with the largest
    /// extrapolation spread over nodes where the value is not negligible.
    pub fn boundary_column(&self, b: f64, t: f64) -> Result<(Vec<f64>, f64)> {
        Self::check_t(t)?;
        let half = 0.5 * self.theta();
        let idx = self.boundary_nodes(b, 3)?;
        let rows = self.kernel_rows(&idx, t)?;
        let s: Vec<f64> = idx.iter().map(|&i| self.dist[i].powf(half)).collect();
        let mut vals = Vec::with_capacity(self.len());
        let mut spreads = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let q: Vec<f64> = (0..3).map(|r| rows[(r, i)] / s[r]).collect();
            let (quad, lin) = extrapolate_to_zero(&s, &q);
            vals.push(quad.max(0.0));
            spreads.push((quad - lin).abs() / quad.abs().max(f64::MIN_POSITIVE));
        }
        let peak = vals.iter().cloned().fold(0.0, f64::max);
        let spread = vals.iter().zip(&spreads).filter(|(v, _)| **v > 1e-6 * peak).map(|e| *e.1).fold(0.0, f64::max);
        Ok((vals, spread))
    }

    /// Two-sided estimate `(1∧d(x)^{θ/2}/√t)(1∧d(y)^{θ/2}/√t)Γ(x-y,t)`.
    pub fn two_sided_envelope(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        let half = 0.5 * self.theta();
        let rt = t.sqrt();
        let fx = (self.domain.dist1(x).powf(half) / rt).min(1.0);
        let fy = (self.domain.dist1(y).powf(half) / rt).min(1.0);
        Ok(fx * fy * eval_gamma_radial(&self.params, x - y, t)?)
    }

    /// Sample node set: geometric toward each boundary point, plus the centre.
    pub fn sample_nodes(&self) -> Vec<usize> {
        let m = self.len();
        let mut out = Vec::new();
        let ncomp = self.component.iter().max().map_or(0, |c| c + 1);
        for comp in 0..ncomp {
            let idx: Vec<usize> = (0..m).filter(|&i| self.component[i] == comp).collect();
            let n = idx.len();
            let mut k = 1usize;
            while k <= n / 2 {
                out.push(idx[k - 1]);
                out.push(idx[n - k]);
                k *= 2;
            }
            out.push(idx[n / 2]);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Fitted `(c1, c2)` of the two-sided estimate over node pairs at time `t`.
    pub fn two_sided_fit_at(&self, rows: &[usize], t: f64) -> Result<(f64, f64)> {
        let g = self.kernel_rows(rows, t)?;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for (r, &i) in rows.iter().enumerate() {
            for &j in rows {
                let e = self.two_sided_envelope(self.nodes[i], self.nodes[j], t)?;
                let q = g[(r, j)] / e;
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
        Ok((lo, hi))
    }

    fn locate_horizon(&mut self, opts: HorizonOptions) -> Result<()> {
        let rows = self.sample_nodes();
        let t0 = self.resolved_time(opts.resolution_cells);
        let mut t = 2f64.powf(t0.log2().ceil());
        let t_max = 64.0 * self.domain.diameter().powf(self.theta());
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        let mut best = f64::NAN;
        self.fit_history.clear();
        while t <= t_max {
            let (a, b) = self.two_sided_fit_at(&rows, t)?;
            lo = lo.min(a);
            hi = hi.max(b);
            self.fit_history.push((t, a, b));
            if hi / lo > opts.ratio_ceiling {
                break;
            }
            best = t;
            t *= 2.0;
        }
        if !best.is_finite() {
            return Err(Error::Accuracy { what: "no resolved time satisfies the two-sided estimate".into(), estimate: hi / lo });
        }
        self.t_prime = best;
        self.t_star = best.min(self.domain.diameter().powf(self.theta()) / 16.0);
        Ok(())
    }

    /// `Σ_j G(x_i, x_j, t) h_j f_j` for every node, from model coefficients.
    pub fn apply_semigroup(&self, f: &[f64], t: f64) -> Result<Vec<f64>> {
        Self::check_t(t)?;
        let m = self.len();
        let w = DVector::from_fn(m, |j, _| self.widths[j] * f[j]);
        let mut coef = self.modes.transpose() * w;
        for k in 0..m {
            coef[k] *= (-self.eigenvalues[k] * t).exp();
        }
        Ok((&self.modes * coef).iter().copied().collect())
    }
}

/// Sampling plan for [`grid_diagnostics`].
#[derive(Clone, Debug)]
pub struct DiagnosticSpec {
    /// Times for mass, domination and fit checks.
    pub times: Vec<f64>,
    /// `(t, s)` pairs for the semigroup identity.
    pub ck_pairs: Vec<(f64, f64)>,
    /// `(x0, y0)` for the long-time slope.
    pub probe: (f64, f64),
    /// Ratio `ε` with `σ < ε T^{1/θ}` in the small-ball lower bound.
    pub ball_ratio: f64,
}

impl DiagnosticSpec {
    /// Times from the resolved scale `(8h)^θ` up to `T'`, four per decade, and
    /// ten semigroup pairs `(t, 2t)` inside that range.
    pub fn standard(grid: &DirichletKernelGrid) -> Self {
        let lo = grid.resolved_time(8.0).log10();
        let hi = grid.t_prime().log10().max(lo + 0.25);
        let n = ((hi - lo) * 4.0).ceil().max(1.0) as usize;
        let times: Vec<f64> = (0..=n).map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / n as f64)).collect();
        let ck_pairs = (0..10).map(|k| {
            let t = 10f64.powf(lo + (hi - 0.5 - lo).max(0.1) * k as f64 / 9.0);
            (t, 2.0 * t)
        }).collect();
        DiagnosticSpec { times, ck_pairs, probe: (0.3, 0.6), ball_ratio: 0.25 }
    }
}

#[derive(Clone, Debug)]
pub struct DiagnosticTimeRow {
    pub t: f64,
    /// `max_x ∫ G(x,y,t) dy`.
    pub max_mass: f64,
    /// `max G/Γ` over sampled node pairs.
    pub domination: f64,
    /// Fitted bounds of `G` over the two-sided envelope.
    pub two_sided: (f64, f64),
    /// Fitted bounds of `K` over its envelope, boundary columns included.
    pub k_fit: (f64, f64),
    /// `t^{1/2} max_b ∫ K(x,b,t) dx`.
    pub c4: f64,
    /// `t^{1/2+1/θ} max_x Σ_b K(x,b,t)/D(x,t)`.
    pub c5: f64,
}

#[derive(Clone, Debug)]
pub struct KernelDiagnostics {
    pub rows: Vec<DiagnosticTimeRow>,
    /// `(t, s, relative residual)`.
    pub ck: Vec<(f64, f64, f64)>,
    pub symmetric: bool,
    pub lambda1: f64,
    pub slope: f64,
    /// Spread `max/min` of `G/(d(x)^{θ/2} d(y)^{θ/2} e^{-λ1 t})` at `t = 2T'`.
    pub long_time_spread: f64,
    /// Smallest `K(z,y,σ^θ) σ^N d(z)^{θ/2}` over admissible samples.
    pub small_ball_lower: f64,
    /// Smallest `G(z,y,2t-s) / ((s/2t)^{N/θ} G(z,y,s))` over admissible samples.
    pub time_shift_lower: f64,
    pub t_prime: f64,
    pub t_star: f64,
}

impl KernelDiagnostics {
    pub fn slope_error(&self) -> f64 {
        (self.slope + self.lambda1).abs() / self.lambda1
    }

    /// Envelope ratios over rows with `t ≤ T'`.
    pub fn fit_ratios(&self) -> (f64, f64) {
        let (mut a, mut b, mut c, mut d) = (f64::INFINITY, 0.0f64, f64::INFINITY, 0.0f64);
        for r in self.rows.iter().filter(|r| r.t <= self.t_prime * (1.0 + 1e-12)) {
            a = a.min(r.two_sided.0);
            b = b.max(r.two_sided.1);
            c = c.min(r.k_fit.0);
            d = d.max(r.k_fit.1);
        }
        (b / a, d / c)
    }
}

fn k_envelope(grid: &DirichletKernelGrid, x: f64, dy: f64, gap: f64, t: f64) -> Result<f64> {
    let half = 0.5 * grid.theta();
    let rt = t.sqrt();
    let fx = (grid.domain().dist1(x).powf(half) / rt).min(1.0);
    let fy = if dy > 0.0 { (1.0 / dy.powf(half)).min(1.0 / rt) } else { 1.0 / rt };
    Ok(fx * fy * eval_gamma_radial(grid.params(), gap, t)?)
}

/// All structural checks of the discrete kernel over the sampling plan.
pub fn grid_diagnostics(grid: &DirichletKernelGrid, spec: &DiagnosticSpec) -> Result<KernelDiagnostics> {
    let m = grid.len();
    let theta = grid.theta();
    let half = 0.5 * theta;
    let nodes = grid.nodes();
    let dist = grid.distances();
    let rows_idx = grid.sample_nodes();
    let a = grid.operator();
    let symmetric = (0..m).all(|i| (0..i).all(|j| a[(i, j)] == a[(j, i)]));
    let ones = vec![1.0; m];
    let bpts = grid.domain().boundary_points();
    let mut rows = Vec::new();
    for &t in &spec.times {
        let mass = grid.apply_semigroup(&ones, t)?.into_iter().fold(0.0, f64::max);
        let g = grid.kernel_rows(&rows_idx, t)?;
        let mut dom_ratio = 0.0f64;
        let (mut k_lo, mut k_hi) = (f64::INFINITY, 0.0f64);
        for (r, &i) in rows_idx.iter().enumerate() {
            for &j in &rows_idx {
                let gam = eval_gamma_radial(grid.params(), nodes[i] - nodes[j], t)?;
                dom_ratio = dom_ratio.max(g[(r, j)] / gam);
                let k = g[(r, j)] / dist[j].powf(half);
                let q = k / k_envelope(grid, nodes[i], dist[j], nodes[i] - nodes[j], t)?;
                k_lo = k_lo.min(q);
                k_hi = k_hi.max(q);
            }
        }
        let mut c4 = 0.0f64;
        let mut surface = vec![0.0; m];
        for &b in &bpts {
            let (col, _) = grid.boundary_column(b, t)?;
            let total: f64 = col.iter().zip(grid.widths()).map(|(k, h)| k * h).sum();
            c4 = c4.max(t.sqrt() * total);
            for &i in &rows_idx {
                let q = col[i] / k_envelope(grid, nodes[i], 0.0, nodes[i] - b, t)?;
                k_lo = k_lo.min(q);
                k_hi = k_hi.max(q);
            }
            for i in 0..m {
                surface[i] += col[i];
            }
        }
        let c5 = (0..m)
            .map(|i| surface[i] / boundary_factor(dist[i], t, theta))
            .fold(0.0, f64::max)
            * t.powf(0.5 + 1.0 / theta);
        rows.push(DiagnosticTimeRow {
            t,
            max_mass: mass,
            domination: dom_ratio,
            two_sided: grid.two_sided_fit_at(&rows_idx, t)?,
            k_fit: (k_lo, k_hi),
            c4,
            c5,
        });
    }
    let mut ck = Vec::new();
    for &(t, s) in &spec.ck_pairs {
        let gt = grid.kernel_rows(&rows_idx, t)?;
        let gs = grid.kernel_rows(&rows_idx, s)?;
        let direct = grid.kernel_rows(&rows_idx, t + s)?;
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for (r, _) in rows_idx.iter().enumerate() {
            for (c, &j) in rows_idx.iter().enumerate() {
                let composed: f64 = (0..m).map(|k| gt[(r, k)] * grid.widths()[k] * gs[(c, k)]).sum();
                worst = worst.max((composed - direct[(r, j)]).abs());
                scale = scale.max(direct[(r, j)].abs());
            }
        }
        ck.push((t, s, worst / scale));
    }
    let lambda1 = grid.eigenvalues()[0];
    let nearest = |x: f64| (0..m).min_by(|&p, &q| (nodes[p] - x).abs().partial_cmp(&(nodes[q] - x).abs()).unwrap()).unwrap();
    let (i0, j0) = (nearest(spec.probe.0), nearest(spec.probe.1));
    let tp = grid.t_prime();
    let lt: Vec<f64> = (0..8).map(|k| 2.0 * tp * 2f64.powf(k as f64 / 7.0)).collect();
    let lg: Vec<f64> = lt.iter().map(|&t| grid.heat_kernel(i0, j0, t).map(f64::ln)).collect::<Result<_>>()?;
    let slope = regression_slope(&lt, &lg);
    let g2 = grid.kernel_rows(&rows_idx, 2.0 * tp)?;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (r, &i) in rows_idx.iter().enumerate() {
        for &j in &rows_idx {
            let q = g2[(r, j)] / (dist[i].powf(half) * dist[j].powf(half) * (-lambda1 * 2.0 * tp).exp());
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    let t_star = grid.t_star();
    let (small_ball_lower, time_shift_lower) = lower_bound_checks(grid, spec, t_star)?;
    Ok(KernelDiagnostics {
        rows,
        ck,
        symmetric,
        lambda1,
        slope,
        long_time_spread: hi / lo,
        small_ball_lower,
        time_shift_lower,
        t_prime: tp,
        t_star,
    })
}

fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Spot checks of the small-ball and time-shift lower bounds at horizon `t`;
/// `NaN` when the grid resolves no admissible sample.
fn lower_bound_checks(grid: &DirichletKernelGrid, spec: &DiagnosticSpec, horizon: f64) -> Result<(f64, f64)> {
    let theta = grid.theta();
    let half = 0.5 * theta;
    let nodes = grid.nodes();
    let dist = grid.distances();
    let scale = horizon.powf(1.0 / theta);
    let centres: Vec<usize> = grid.sample_nodes().into_iter().filter(|&i| dist[i] >= scale).collect();
    let floor = grid.resolved_time(8.0);
    let mut small = f64::NAN;
    let smax = spec.ball_ratio * scale;
    for k in 0..4 {
        let sigma = smax * 2f64.powi(-k);
        let t = sigma.powf(theta);
        if t < floor {
            break;
        }
        let g = grid.kernel_rows(&centres, t)?;
        for (r, &i) in centres.iter().enumerate() {
            for j in 0..grid.len() {
                if (nodes[j] - nodes[i]).abs() < sigma {
                    let v = g[(r, j)] / dist[j].powf(half) * sigma * dist[i].powf(half);
                    small = if small.is_nan() { v } else { small.min(v) };
                }
            }
        }
    }
    let mut shift = f64::NAN;
    // below the resolved scale the grid says nothing; lift the window to it
    let tmax = (horizon / 32.0).max(4.0 * floor);
    let targets = grid.sample_nodes();
    for k in 0..3 {
        let t = tmax * 2f64.powi(-k);
        let s = 0.5 * t;
        if s < floor {
            break;
        }
        let g_late = grid.kernel_rows(&centres, 2.0 * t - s)?;
        let g_s = grid.kernel_rows(&centres, s)?;
        let f = (s / (2.0 * t)).powf(1.0 / theta);
        for r in 0..centres.len() {
            for &j in &targets {
                let v = g_late[(r, j)] / (f * g_s[(r, j)]);
                shift = if shift.is_nan() { v } else { shift.min(v) };
            }
        }
    }
    Ok((small, shift))
}

/// Values at `s = 0` of the quadratic through three points and of the line
/// through the two nearest.
fn extrapolate_to_zero(s: &[f64], q: &[f64]) -> (f64, f64) {
    let (s0, s1, s2) = (s[0], s[1], s[2]);
    let l0 = s1 * s2 / ((s0 - s1) * (s0 - s2));
    let l1 = s0 * s2 / ((s1 - s0) * (s1 - s2));
    let l2 = s0 * s1 / ((s2 - s0) * (s2 - s1));
    let quad = l0 * q[0] + l1 * q[1] + l2 * q[2];
    let lin = (s1 * q[0] - s0 * q[1]) / (s1 - s0);
    (quad, lin)
}
