mod common;

use approx::assert_relative_eq;
use fracshe::dirichlet::{grid_diagnostics, DiagnosticSpec, DirichletKernelGrid};
use fracshe::measures::*;
use fracshe::picard::*;

const T: f64 = 0.0625;

fn grid() -> &'static DirichletKernelGrid {
    common::unit_grid(255, 1.0)
}

fn optimal(kappa: f64) -> MeasureSpec {
    MeasureSpec::from_profile(interior_profile(0.5, 3.0, 1.0, 1).unwrap(), kappa, 1.0)
}

fn uniform(kappa: f64) -> MeasureSpec {
    MeasureSpec::weighted(Density::Uniform(1.0), 1.0).with_amplitude(kappa)
}

fn upto(mu: &MeasureSpec, iterations: usize) -> PicardRun {
    let opts = PicardOptions { budget: iterations, ..Default::default() };
    solve(mu, grid(), 3.0, T, &opts).unwrap()
}

#[test]
fn time_mesh() {
    let opts = PicardOptions::default();
    let t = geometric_times(T, &opts).unwrap();
    assert_eq!(*t.last().unwrap(), T);
    assert!(T / t[0] >= opts.time_span);
    assert!(T / t[1] < opts.time_span);
    for w in t.windows(2) {
        assert_relative_eq!(w[1] / w[0], opts.time_ratio, max_relative = 1e-12);
    }
    assert!(geometric_times(0.0, &opts).is_err());
}

#[test]
fn zero_data_converges_immediately() {
    let run = solve(&MeasureSpec::zero(1.0), grid(), 3.0, T, &PicardOptions::default()).unwrap();
    assert_eq!(run.verdict(), PicardVerdict::Converged);
    assert_eq!(run.iteration(), 1);
    assert!(run.current().iter().all(|&v| v == 0.0));
}

/// An atom at a node gives `u_1 = κ G(·, x_j, t) / d(x_j)^{θ/2}`.
#[test]
fn atom_initial_term() {
    let g = grid();
    let j = 77;
    let (xj, dj) = (g.nodes()[j], g.distances()[j]);
    let kappa = 0.3;
    let mu = MeasureSpec::atom(xj, 1.0, 1.0).with_amplitude(kappa);
    let times = geometric_times(T, &PicardOptions::default()).unwrap();
    let init = initial_term(&mu, g, &times).unwrap();
    for n in [0, times.len() / 2, times.len() - 1] {
        let row = g.kernel_rows(&[j], times[n]).unwrap();
        let peak = row.max();
        for i in 0..g.len() {
            let want = kappa * row[(0, i)] / dj.sqrt();
            assert!((init.values[(n, i)] - want).abs() <= 1e-10 * kappa * peak / dj.sqrt());
        }
    }
}

#[test]
fn iterates_increase() {
    for mu in [uniform(1.0), optimal(0.25), optimal(1.0)] {
        for j in [2, 4, 7] {
            let run = upto(&mu, j);
            if run.verdict() == PicardVerdict::Budget {
                assert_eq!(run.iteration(), j);
            }
            let peak = run.current().max();
            for (a, b) in run.current().iter().zip(run.previous().iter()) {
                assert!(a - b >= -1e-12 * peak);
            }
            assert!(run.sup_history().windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
        }
    }
}

/// Larger data gives larger iterates at every step.
#[test]
fn comparison_in_data() {
    let small = optimal(0.25);
    let mut big = optimal(0.25);
    big.atoms.push((0.3, 0.5));
    for j in [1, 3, 6] {
        let a = upto(&small, j);
        let b = upto(&big, j);
        let peak = b.current().max();
        for (x, y) in a.current().iter().zip(b.current().iter()) {
            assert!(x <= &(y + 1e-12 * peak));
        }
    }
}

#[test]
fn converged_residual_small() {
    let opts = PicardOptions::default();
    for mu in [uniform(1.0), optimal(0.25)] {
        let run = solve(&mu, grid(), 3.0, T, &opts).unwrap();
        assert_eq!(run.verdict(), PicardVerdict::Converged);
        let r = fixed_point_residual(&run, grid(), 4).unwrap();
        assert!(r.relative <= 10.0 * opts.quad_tol, "{:?}", r);
        assert!(r.discrete <= 1e-6, "{:?}", r);
    }
}

#[test]
fn large_data_diverges() {
    let run = solve(&optimal(4.0), grid(), 3.0, T, &PicardOptions::default()).unwrap();
    assert!(matches!(run.verdict(), PicardVerdict::Diverged(_)), "{:?}", run.verdict());
}

/// `t^{1/2} ∫ u_1(x,t) dx / κ` for a boundary atom stays below the grid's
/// surface constant.
#[test]
fn boundary_atom_mass() {
    let g = grid();
    let diag = grid_diagnostics(g, &DiagnosticSpec::standard(g)).unwrap();
    let c4 = diag.rows.iter().map(|r| r.c4).fold(0.0, f64::max);
    let kappa = 0.4;
    let mu = MeasureSpec::atom(0.0, 1.0, 1.0).with_amplitude(kappa);
    let times: Vec<f64> = geometric_times(T, &PicardOptions::default())
        .unwrap()
        .into_iter()
        .filter(|&t| t >= g.resolved_time(8.0) && t <= g.t_prime())
        .collect();
    assert!(!times.is_empty());
    let init = initial_term(&mu, g, &times).unwrap();
    for (n, &t) in times.iter().enumerate() {
        let mass: f64 = (0..g.len()).map(|i| init.values[(n, i)] * g.widths()[i]).sum();
        assert!(mass > 0.0);
        assert!(mass <= 1.1 * c4 * kappa / t.sqrt(), "t={t}: {mass} vs {}", c4 * kappa / t.sqrt());
    }
}

/// Solvable pairs are closed under smaller amplitude and shorter horizon.
#[test]
fn solvability_monotone() {
    let g = grid();
    let opts = PicardOptions::default();
    let kappas = [0.25, 0.35, 0.5, 0.7];
    let horizons = horizon_schedule(g, 4, 16.0).unwrap();
    let ok: Vec<Vec<bool>> = kappas
        .iter()
        .map(|&k| horizons.iter().map(|&t| solve(&optimal(k), g, 3.0, t, &opts).unwrap().verdict().is_converged()).collect())
        .collect();
    for (a, row) in ok.iter().enumerate() {
        for (b, &v) in row.iter().enumerate() {
            if v {
                for smaller in &ok[..=a] {
                    for &w in &smaller[b..] {
                        assert!(w, "{ok:?}");
                    }
                }
            }
        }
    }
    assert!(horizons.windows(2).all(|w| w[0] > w[1]));
}

#[test]
fn zero_amplitude_probe_solvable() {
    let g = grid();
    let sched = horizon_schedule(g, 6, 16.0).unwrap();
    let pr = probe_kappa(&optimal, g, 3.0, &sched, &PicardOptions::default(), 0.0).unwrap();
    assert!(pr.solvable);
    assert!(pr.verdicts.is_empty());
    let pr = probe_kappa(&optimal, g, 3.0, &sched, &PicardOptions::default(), 8.0).unwrap();
    assert!(!pr.solvable);
    assert_eq!(pr.verdicts.len(), sched.len());
}

#[test]
fn bad_inputs_rejected() {
    let g = grid();
    assert!(solve(&uniform(1.0), g, 1.0, T, &PicardOptions::default()).is_err());
    assert!(solve(&MeasureSpec::weighted(Density::Uniform(1.0), 0.5), g, 3.0, T, &PicardOptions::default()).is_err());
    let s = KappaSearch { lo: 0.6, hi: 0.2, ..Default::default() };
    assert!(kappa_star_bisect(&optimal, g, 3.0, &[T], &s, None).is_err());
    assert!(horizon_schedule(g, 6, 1e6).is_err());
}

#[test]
fn necessary_ceiling_signal() {
    let mu = MeasureSpec::atom(0.5, 1.0, 1.0).with_amplitude(0.05);
    let opts = PicardOptions { necessary_ceiling: Some(10.0), ..Default::default() };
    let run = solve(&mu, grid(), 3.0, T, &opts).unwrap();
    assert_eq!(run.verdict(), PicardVerdict::Diverged(DivergenceSignal::NecessaryRatio));
    assert_eq!(run.verdict().label(), "diverged_necessary");
    let ok = solve(&uniform(1.0), grid(), 3.0, T, &opts).unwrap();
    assert!(ok.verdict().is_converged());
}
