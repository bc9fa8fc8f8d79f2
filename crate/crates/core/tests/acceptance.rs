//! Acceptance run: one line per criterion, nonzero exit if any fails.

mod common;

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use fracshe::calibration::{necessary_threshold, reference_runs, sufficient_threshold};
use fracshe::criteria::*;
use fracshe::dirichlet::{grid_diagnostics, DiagnosticSpec, DirichletKernelGrid};
use fracshe::geometry::Domain;
use fracshe::inequality::{integral_inequality_bound, IntegralInequalityInstance};
use fracshe::lab::reference_families;
use fracshe::measures::*;
use fracshe::picard::*;
use fracshe::quad::Tolerance;
use fracshe::stable::*;
use fracshe::Error;

type Outcome = Result<(bool, String), Error>;

const P: f64 = 3.0;

fn grid512() -> &'static DirichletKernelGrid {
    common::unit_grid(512, 1.0)
}

fn grid1024() -> &'static DirichletKernelGrid {
    common::unit_grid(1024, 1.0)
}

fn schedule(g: &DirichletKernelGrid) -> Vec<f64> {
    horizon_schedule(g, 6, 16.0).unwrap()
}

fn optimal(kappa: f64) -> MeasureSpec {
    MeasureSpec::from_profile(interior_profile(0.5, P, 1.0, 1).unwrap(), kappa, 1.0)
}

fn interior_bracket(g: &'static DirichletKernelGrid) -> &'static KappaBracket {
    static B512: OnceLock<KappaBracket> = OnceLock::new();
    static B1024: OnceLock<KappaBracket> = OnceLock::new();
    let cell = if g.len() == 512 { &B512 } else { &B1024 };
    cell.get_or_init(|| kappa_star_bisect(&optimal, g, P, &schedule(g), &KappaSearch::default(), None).unwrap())
}

/// `γ₁` from the refined bracket, `γ` from the reference runs on the M=512 grid.
struct Calibration {
    gamma1: f64,
    gamma: f64,
}

fn calibration() -> &'static Calibration {
    static C: OnceLock<Calibration> = OnceLock::new();
    C.get_or_init(|| {
        let spec = SearchSpec::default();
        let gamma1 = necessary_threshold(interior_bracket(grid1024()), &optimal, grid1024(), P, &spec).unwrap();
        let g = grid512();
        let runs = reference_runs(
            &reference_families(1.0, 0.5),
            &[0.5, 1.0, 2.0, 4.0, 8.0],
            g,
            P,
            &schedule(g),
            &PicardOptions::default(),
            &spec,
        )
        .unwrap();
        let gamma = sufficient_threshold(&runs).unwrap();
        Calibration { gamma1, gamma }
    })
}

struct SweepRow {
    label: String,
    horizon: f64,
    /// Verdict of the iteration alone.
    grid_verdict: PicardVerdict,
    /// Verdict with the necessary-ratio ceiling at `10 γ₁`.
    verdict: PicardVerdict,
    kernel_integral: f64,
    necessary_ratio: f64,
    monotone: bool,
    residual: Option<f64>,
}

fn sweep_configs() -> Vec<(String, MeasureSpec)> {
    let power = |z: f64, k: f64| {
        MeasureSpec::weighted(Density::Power(SingularProfile { center: z, a: 0.25, b: 0.0, radius: 1.0 }), 1.0)
            .with_amplitude(k)
    };
    let mut out = Vec::new();
    for k in [0.5, 1.0, 2.0, 4.0, 8.0] {
        out.push((format!("weighted_uniform κ={k}"), MeasureSpec::weighted(Density::Uniform(1.0), 1.0).with_amplitude(k)));
    }
    for k in [0.5, 1.0, 2.0, 4.0] {
        out.push((format!("power_quarter z=0.5 κ={k}"), power(0.5, k)));
    }
    for k in [1.0, 3.0] {
        out.push((format!("power_quarter z=0.2 κ={k}"), power(0.2, k)));
    }
    for k in [0.1, 0.25, 1.0, 4.0] {
        out.push((format!("interior_profile z=0.5 κ={k}"), optimal(k)));
    }
    let shifted = MeasureSpec::from_profile(interior_profile(0.3, P, 1.0, 1).unwrap(), 4.0, 1.0);
    out.push(("interior_profile z=0.3 κ=4".into(), shifted));
    for k in [0.05, 0.5] {
        out.push((format!("atom z=0.5 κ={k}"), MeasureSpec::atom(0.5, 1.0, 1.0).with_amplitude(k)));
    }
    for k in [0.25, 2.0] {
        let b = MeasureSpec::from_profile(boundary_profile(0.0, P, 1.0, 1).unwrap(), k, 1.0);
        out.push((format!("boundary_profile z=0 κ={k}"), b));
    }
    out
}

fn sweep() -> &'static Vec<SweepRow> {
    static S: OnceLock<Vec<SweepRow>> = OnceLock::new();
    S.get_or_init(|| {
        let g = grid512();
        let opts = PicardOptions::default();
        let guarded = PicardOptions { necessary_ceiling: Some(10.0 * calibration().gamma1), ..opts };
        let spec = SearchSpec::default();
        let dom = Domain::unit_interval();
        let mut rows = Vec::new();
        for (label, mu) in sweep_configs() {
            for &t in &schedule(g) {
                let run = solve(&mu, g, P, t, &opts).unwrap();
                let verdict = solve(&mu, g, P, t, &guarded).unwrap().verdict();
                let peak = run.current().max();
                let monotone = run.current().iter().zip(run.previous().iter()).all(|(a, b)| a - b >= -1e-12 * peak)
                    && run.sup_history().windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
                let residual = run
                    .verdict()
                    .is_converged()
                    .then(|| fixed_point_residual(&run, g, 4).unwrap().relative);
                let kernel_integral = match sufficient_kernel_integral(&mu, &dom, P, 1.0, t, &spec) {
                    Ok(r) => r.value,
                    Err(Error::Divergence(_)) => f64::INFINITY,
                    Err(e) => panic!("{e}"),
                };
                let necessary_ratio = necessary_subcritical(&mu, &dom, P, 1.0, t, &spec).unwrap().value;
                rows.push(SweepRow {
                    label: label.clone(),
                    horizon: t,
                    grid_verdict: run.verdict(),
                    verdict,
                    kernel_integral,
                    necessary_ratio,
                    monotone,
                    residual,
                });
            }
        }
        rows
    })
}

fn free_kernel_exactness() -> Outcome {
    let p = StableParams::new(1, 1.0)?;
    let mut worst = 0.0f64;
    for k in 0..100 {
        let x = 10f64.powf(-3.0 + 6.0 * k as f64 / 99.0);
        let v = eval_gamma_with(&p, &[x], 1.0, Route::Fourier)?;
        let exact = 1.0 / (PI * (x * x + 1.0));
        worst = worst.max((v / exact - 1.0).abs());
    }
    let tol = Tolerance { abs: 1e-12, rel: 1e-10, max_intervals: 4000 };
    let mut ok = worst <= 1e-8;
    let mut masses = Vec::new();
    for (theta, lim) in [(1.0, 1e-6), (0.5, 1e-4), (1.5, 1e-4)] {
        let e = (total_mass(&StableParams::new(1, theta)?, 1.0, tol)? - 1.0).abs();
        ok &= e <= lim;
        masses.push(format!("θ={theta}: {e:.1e}"));
    }
    Ok((ok, format!("Fourier vs Cauchy max rel err {worst:.2e}; |mass-1| {}", masses.join(", "))))
}

fn envelope_fit() -> Outcome {
    let xs = log_grid(-2.0, 2.0, 8);
    let mut ok = true;
    let mut parts = Vec::new();
    for theta in [0.5, 1.0, 1.5] {
        let r = fit_envelope(&StableParams::new(1, theta)?, &xs, &xs)?.ratio();
        ok &= r <= 1e3;
        parts.push(format!("θ={theta}: {r:.3}"));
    }
    Ok((ok, format!("c2/c1 {}", parts.join(", "))))
}

fn dirichlet_structure() -> Outcome {
    let g = grid512();
    let d = grid_diagnostics(g, &DiagnosticSpec::standard(g))?;
    let mass = d.rows.iter().map(|r| r.max_mass).fold(0.0, f64::max);
    let dom = d.rows.iter().map(|r| r.domination).fold(0.0, f64::max);
    let ck = d.ck.iter().map(|c| c.2).fold(0.0, f64::max);
    let slope = d.slope_error();
    let ok = d.symmetric && mass <= 1.0 + 5e-3 && d.ck.len() == 10 && ck <= 1e-3 && dom <= 1.01 && slope <= 0.02;
    Ok((
        ok,
        format!(
            "symmetric {}, max mass {mass:.4}, CK {ck:.1e} over {} pairs, G/Γ {dom:.4}, slope err {slope:.1e}",
            d.symmetric,
            d.ck.len()
        ),
    ))
}

fn two_sided_estimates() -> Outcome {
    let g = grid512();
    let d = grid_diagnostics(g, &DiagnosticSpec::standard(g))?;
    let (a, b) = d.fit_ratios();
    let ok = a <= 1e3 && b <= 1e3 && d.t_prime > 0.0;
    Ok((ok, format!("G ratio {a:.1}, K ratio {b:.1}, T' = {}", d.t_prime)))
}

fn picard_monotone_fixed_point() -> Outcome {
    let rows = sweep();
    let monotone = rows.iter().all(|r| r.monotone);
    let quad_tol = PicardOptions::default().quad_tol;
    let res: Vec<f64> = rows.iter().filter_map(|r| r.residual).collect();
    let worst = res.iter().cloned().fold(0.0, f64::max);
    let ok = monotone && !res.is_empty() && worst <= 10.0 * quad_tol;
    Ok((ok, format!("{} runs monotone: {monotone}; {} converged, max residual {worst:.2e}", rows.len(), res.len())))
}

fn dichotomy() -> Outcome {
    let cal = calibration();
    let spec = SearchSpec::default();
    let dom = Domain::unit_interval();
    let mut ok = true;
    let mut parts = Vec::new();
    for g in [grid512(), grid1024()] {
        let b = interior_bracket(g);
        let finite = b.is_bounded() && b.lo > 0.0 && b.lo < b.hi;
        let t_lo = b.lo_horizon().unwrap_or(g.t_star());
        let half = solve(&optimal(0.5 * b.lo), g, P, t_lo, &PicardOptions::default())?.verdict().is_converged();
        let top = schedule(g)[0];
        let ratio = necessary_subcritical(&optimal(2.0 * b.hi), &dom, P, 1.0, top, &spec)?.value;
        let cert = ratio >= 2.0 * cal.gamma1;
        ok &= finite && half && cert;
        parts.push(format!(
            "M={}: [{:.5}, {:.5}], κ_lo/2 converges {half}, ratio(2κ_hi) {ratio:.3} vs 2γ₁ {:.3}",
            g.len(),
            b.lo,
            b.hi,
            2.0 * cal.gamma1
        ));
    }
    let (a, b) = (interior_bracket(grid512()), interior_bracket(grid1024()));
    let overlap = a.lo <= b.hi && b.lo <= a.hi;
    ok &= overlap;
    parts.push(format!("overlap {overlap}"));
    Ok((ok, parts.join("; ")))
}

fn boundary_interior_separation() -> Outcome {
    let g = grid512();
    let p = 2.0;
    let prof = boundary_profile(0.0, p, 1.0, 1)?;
    let fam = |k: f64| MeasureSpec::from_profile(prof, k, 1.0);
    let b = kappa_star_bisect(&fam, g, p, &schedule(g), &KappaSearch::default(), None)?;
    let finite = b.is_bounded() && b.lo > 0.0 && b.lo < b.hi;
    let interior = MeasureSpec::from_profile(SingularProfile { center: 0.5, a: prof.a, b: 0.0, radius: prof.radius }, 1.0, 1.0);
    let r = necessary_subcritical(&interior, &Domain::unit_interval(), p, 1.0, schedule(g)[0], &SearchSpec::default())?;
    let growth = r.growth_over(3.0);
    let ok = finite && growth >= 10.0;
    Ok((ok, format!("boundary a={} bracket [{:.5}, {:.5}]; interior growth over 3 decades {growth:e}", prof.a, b.lo, b.hi)))
}

/// Horizon with `T^{1/θ} = 1/4` for every order.
fn critical_log_laws() -> Outcome {
    let dom = Domain::unit_interval();
    let spec = SearchSpec::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for theta in [0.5, 1.0, 1.5] {
        let horizon = 0.25f64.powf(theta);
        for locus in [CriticalLocus::Interior, CriticalLocus::Boundary] {
            let (p, prof) = match locus {
                CriticalLocus::Interior => {
                    let p = critical_exponent(theta, 1, 0.0);
                    (p, interior_profile(0.5, p, theta, 1)?)
                }
                CriticalLocus::Boundary => {
                    let p = critical_exponent(theta, 1, 0.5 * theta);
                    (p, boundary_profile(0.0, p, theta, 1)?)
                }
            };
            let a = necessary_critical(&MeasureSpec::from_profile(prof, 1.0, theta), &dom, p, theta, horizon, locus, &spec)?;
            let b = necessary_critical(&MeasureSpec::from_profile(prof, 2.0, theta), &dom, p, theta, horizon, locus, &spec)?;
            let top = horizon.powf(1.0 / theta);
            let (lo, hi) = a.profile_range(1e-6 * top, 1e-2 * top);
            let lin = (b.value / (2.0 * a.value) - 1.0).abs();
            ok &= lo > 0.0 && hi / lo <= 3.0 && lin <= 0.01;
            parts.push(format!("θ={theta} {:?}: spread {:.3}, lin {lin:.1e}", locus, hi / lo));
        }
    }
    Ok((ok, parts.join("; ")))
}

fn criteria_solver_consistency() -> Outcome {
    let cal = calibration();
    let rows = sweep();
    let configs = sweep_configs();
    let mut sufficient = 0;
    let mut necessary = 0;
    let mut bad = Vec::new();
    for r in rows.iter().filter(|r| r.kernel_integral <= cal.gamma) {
        sufficient += 1;
        if !r.verdict.is_converged() {
            bad.push(format!("{} T={} passes sufficient but {}", r.label, r.horizon, r.verdict.label()));
        }
    }
    for (label, _) in &configs {
        let mine: Vec<&SweepRow> = rows.iter().filter(|r| &r.label == label).collect();
        if mine.iter().any(|r| r.necessary_ratio > 10.0 * cal.gamma1) {
            necessary += 1;
            if let Some(r) = mine.iter().find(|r| r.verdict.is_converged()) {
                bad.push(format!("{label} fails necessary yet converges at T={}", r.horizon));
            }
        }
    }
    let deferred: Vec<&str> = configs
        .iter()
        .map(|c| c.0.as_str())
        .filter(|l| {
            rows.iter().any(|r| &r.label == l && r.grid_verdict.is_converged() && !r.verdict.is_converged())
        })
        .collect();
    let ok = bad.is_empty() && sufficient > 0 && necessary > 0;
    Ok((
        ok,
        format!(
            "{} configs × {} horizons; γ = {:.4}, γ₁ = {:.4}; {sufficient} sufficient passes, {necessary} necessary failures; converged on the grid alone but stopped by the necessary ratio: [{}]{}",
            configs.len(),
            schedule(grid512()).len(),
            cal.gamma,
            cal.gamma1,
            deferred.join(", "),
            if bad.is_empty() { String::new() } else { format!("; violations: {}", bad.join(" | ")) }
        ),
    ))
}

fn comparison_inequality() -> Outcome {
    let horizon = 1.0;
    let mut ok = true;
    let mut n = 0;
    let mut latest = 0.0f64;
    for beta in [1.5, 2.0, 2.5, 3.0, 4.0] {
        for t_star in [1e-3, 1e-2] {
            let c2 = 1.0;
            let probe = IntegralInequalityInstance::new(1.0, c2, 1.0, beta, t_star, horizon)?;
            let bound = integral_inequality_bound(&probe)?.log_form.expect("α = 1");
            let t = common::ode_blowup(2.0 * bound, c2, 1.0, beta, t_star, horizon, 1e12);
            ok &= t.is_some_and(|t| t < horizon);
            latest = latest.max(t.unwrap_or(f64::INFINITY) / horizon);
            n += 1;
        }
    }
    Ok((ok, format!("{n} instances, latest blow-up at {latest:.3} T")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("free-kernel exactness", free_kernel_exactness),
        ("envelope fit", envelope_fit),
        ("Dirichlet-kernel structure", dirichlet_structure),
        ("two-sided and K estimates", two_sided_estimates),
        ("Picard monotonicity and fixed point", picard_monotone_fixed_point),
        ("dichotomy reproduction", dichotomy),
        ("boundary-vs-interior separation", boundary_interior_separation),
        ("critical log laws", critical_log_laws),
        ("criteria-solver consistency", criteria_solver_consistency),
        ("comparison inequality", comparison_inequality),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let tag = if ok { "PASS" } else { "FAIL" };
        if !ok {
            failed += 1;
        }
        println!("criterion {:>2} {tag} {name} [{:.1}s]: {detail}", i + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
