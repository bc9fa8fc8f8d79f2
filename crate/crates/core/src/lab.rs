//! Experiment pipelines: each reads a validated config, writes CSV artifacts
//! and a `<pipeline>.summary` file into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calibration::{
    calibrate_constants, necessary_threshold, reference_runs, sufficient_threshold, CalibrationInputs, ConstantsLedger,
};
use crate::config::{CriterionChoice, ExperimentConfig, Pipeline};
use crate::criteria::{
    necessary_critical, necessary_subcritical, sufficient_kernel_integral, sufficient_log, sufficient_qnorm,
    CriterionReport, CriticalLocus, LogLocus, Verdict,
};
use crate::dirichlet::{grid_diagnostics, DiagnosticSpec, DirichletKernelGrid};
use crate::error::{Error, Result};
use crate::measures::{Density, MeasureSpec, SingularProfile};
use crate::picard::{fixed_point_residual, horizon_schedule, kappa_star_bisect, solve, KappaBracket};
use crate::stable::eval_gamma_radial;

/// Seventeen significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Artifacts written by one pipeline run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub pipeline: Pipeline,
    pub files: Vec<PathBuf>,
    /// `key = value` lines of the summary file.
    pub summary: Vec<(String, String)>,
}

struct Sink {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Sink {
    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        self.files.push(path);
        Ok(())
    }

    /// Whitespace-separated `x y` columns for plotting.
    fn plot(&mut self, name: &str, columns: &str, rows: &[(f64, f64)]) -> Result<()> {
        let mut s = format!("# {columns}\n");
        for (x, y) in rows {
            writeln!(s, "{} {}", num(*x), num(*y)).unwrap();
        }
        let path = self.dir.join(name);
        fs::write(&path, s)?;
        self.files.push(path);
        Ok(())
    }
}

/// Validates, then runs `pipeline` with `workers` threads.
pub fn run_experiment(cfg: &ExperimentConfig, pipeline: Pipeline, out: &Path, workers: usize) -> Result<RunOutcome> {
    cfg.validate(pipeline)?;
    fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let mut sink = Sink { dir: out.to_path_buf(), files: Vec::new() };
    let mut summary = vec![
        ("pipeline".to_string(), pipeline.label().to_string()),
        ("theta".into(), num(cfg.theta)),
        ("p".into(), num(cfg.p)),
        ("dim".into(), cfg.dim.to_string()),
        ("seed".into(), cfg.seed.to_string()),
    ];
    pool.install(|| match pipeline {
        Pipeline::KernelDiagnostics => kernel_pipeline(cfg, &mut sink, &mut summary),
        Pipeline::ConditionSweep => condition_pipeline(cfg, &mut sink, &mut summary),
        Pipeline::PicardRun => picard_pipeline(cfg, &mut sink, &mut summary),
        Pipeline::KappaStar => kappa_pipeline(cfg, &mut sink, &mut summary),
        Pipeline::CalibrateConstants => calibrate_pipeline(cfg, &mut sink, &mut summary),
    })?;
    let names: Vec<String> =
        sink.files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect();
    summary.push(("artifacts".into(), names.join(",")));
    let mut text = String::new();
    for (k, v) in &summary {
        writeln!(text, "{k} = {v}").unwrap();
    }
    let path = out.join(format!("{}.summary", pipeline.label()));
    fs::write(&path, text)?;
    sink.files.push(path);
    Ok(RunOutcome { pipeline, files: sink.files, summary })
}

fn grid_for(cfg: &ExperimentConfig) -> Result<DirichletKernelGrid> {
    DirichletKernelGrid::assemble(&cfg.domain()?, cfg.grid_size, cfg.params()?)
}

fn kernel_pipeline(cfg: &ExperimentConfig, sink: &mut Sink, summary: &mut Vec<(String, String)>) -> Result<()> {
    let grid = grid_for(cfg)?;
    let d = grid_diagnostics(&grid, &DiagnosticSpec::standard(&grid))?;
    let rows: Vec<Vec<String>> = d
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.t),
                num(r.max_mass),
                num(r.domination),
                num(r.two_sided.0),
                num(r.two_sided.1),
                num(r.k_fit.0),
                num(r.k_fit.1),
                num(r.c4),
                num(r.c5),
            ]
        })
        .collect();
    sink.csv(
        "kernel_diagnostics.csv",
        &["t", "max_mass", "domination", "g_c1", "g_c2", "k_c1", "k_c2", "c4", "c5"],
        &rows,
    )?;
    let ck: Vec<Vec<String>> = d.ck.iter().map(|&(t, s, r)| vec![num(t), num(s), num(r)]).collect();
    sink.csv("chapman_kolmogorov.csv", &["t", "s", "relative_residual"], &ck)?;
    // seeded random node pairs and times
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let nodes = grid.nodes();
    let (lo, hi) = (grid.resolved_time(8.0).ln(), grid.t_prime().ln());
    let mut samples = Vec::new();
    for _ in 0..cfg.diagnostic_samples {
        let i = rng.gen_range(0..grid.len());
        let j = rng.gen_range(0..grid.len());
        let t = (lo + (hi - lo) * rng.gen::<f64>()).exp();
        let g = grid.heat_kernel(i, j, t)?;
        let free = eval_gamma_radial(grid.params(), nodes[i] - nodes[j], t)?;
        let env = grid.two_sided_envelope(nodes[i], nodes[j], t)?;
        samples.push(vec![num(nodes[i]), num(nodes[j]), num(t), num(g), num(free), num(g / env)]);
    }
    sink.csv("kernel_samples.csv", &["x", "y", "t", "g", "free_kernel", "g_over_envelope"], &samples)?;
    let mid = grid.len() / 2;
    let cross: Vec<(f64, f64)> =
        (0..grid.len()).map(|i| Ok((nodes[i], grid.heat_kernel(i, mid, grid.t_star())?))).collect::<Result<_>>()?;
    sink.plot("plot_kernel_cross_section.dat", &format!("x G(x,{},T_*)", nodes[mid]), &cross)?;
    let (g_ratio, k_ratio) = d.fit_ratios();
    let max_mass = d.rows.iter().map(|r| r.max_mass).fold(0.0, f64::max);
    let max_ck = d.ck.iter().map(|c| c.2).fold(0.0, f64::max);
    let dom = d.rows.iter().map(|r| r.domination).fold(0.0, f64::max);
    for (k, v) in [
        ("grid.m", grid.len() as f64),
        ("t_prime", d.t_prime),
        ("t_star", d.t_star),
        ("lambda1", d.lambda1),
        ("slope", d.slope),
        ("slope_error", d.slope_error()),
        ("max_mass", max_mass),
        ("max_ck_residual", max_ck),
        ("max_domination", dom),
        ("two_sided_ratio", g_ratio),
        ("k_ratio", k_ratio),
        ("long_time_spread", d.long_time_spread),
    ] {
        summary.push((k.into(), num(v)));
    }
    summary.push(("symmetric".into(), d.symmetric.to_string()));
    Ok(())
}

fn evaluate(cfg: &ExperimentConfig, c: CriterionChoice, mu: &MeasureSpec, horizon: f64) -> Result<CriterionReport> {
    let dom = cfg.domain()?;
    let (p, th, s) = (cfg.p, cfg.theta, &cfg.search);
    match c {
        CriterionChoice::NecessarySubcritical => necessary_subcritical(mu, &dom, p, th, horizon, s),
        CriterionChoice::NecessaryCriticalInterior => {
            necessary_critical(mu, &dom, p, th, horizon, CriticalLocus::Interior, s)
        }
        CriterionChoice::NecessaryCriticalBoundary => {
            necessary_critical(mu, &dom, p, th, horizon, CriticalLocus::Boundary, s)
        }
        CriterionChoice::SufficientKernelIntegral => sufficient_kernel_integral(mu, &dom, p, th, horizon, s),
        CriterionChoice::SufficientQNorm => sufficient_qnorm(mu, &dom, p, cfg.q, th, horizon, s),
        CriterionChoice::SufficientLog => {
            sufficient_log(mu, &dom, p, th, cfg.log_r, horizon, LogLocus::Interior { l: cfg.log_l }, s)
        }
    }
}

fn threshold_for(cfg: &ExperimentConfig, c: CriterionChoice) -> Option<f64> {
    match c {
        CriterionChoice::NecessarySubcritical => cfg.gamma1,
        CriterionChoice::SufficientKernelIntegral => cfg.gamma,
        _ => None,
    }
}

fn condition_pipeline(cfg: &ExperimentConfig, sink: &mut Sink, summary: &mut Vec<(String, String)>) -> Result<()> {
    let horizon = cfg.horizon.expect("validated");
    let mut rows = Vec::new();
    let mut profiles = Vec::new();
    for &k in &cfg.sweep_kappas {
        let mu = cfg.measure_at(k)?;
        for &c in &cfg.criteria {
            let r = evaluate(cfg, c, &mu, horizon)?;
            let verdict = threshold_for(cfg, c).map_or(Verdict::Inconclusive, |g| r.verdict(g));
            let (wz, ws) = r.witness.map_or((f64::NAN, f64::NAN), |w| (w.z, w.scale));
            rows.push(vec![
                r.kind.label().to_string(),
                num(cfg.p),
                num(cfg.theta),
                num(horizon),
                num(k),
                num(r.value),
                num(wz),
                num(ws),
                num(r.growth),
                r.is_unbounded().to_string(),
                verdict.label().to_string(),
            ]);
            if k == cfg.sweep_kappas[0] {
                profiles.push((r.kind.label(), r.profile.clone()));
            }
        }
    }
    sink.csv(
        "conditions.csv",
        &["criterion", "p", "theta", "horizon", "kappa", "value", "witness_z", "witness_scale", "growth", "unbounded", "verdict"],
        &rows,
    )?;
    for (label, prof) in profiles {
        sink.plot(&format!("plot_profile_{label}.dat"), "scale sup", &prof)?;
    }
    summary.push(("horizon".into(), num(horizon)));
    summary.push(("rows".into(), rows.len().to_string()));
    Ok(())
}

fn picard_pipeline(cfg: &ExperimentConfig, sink: &mut Sink, summary: &mut Vec<(String, String)>) -> Result<()> {
    let grid = grid_for(cfg)?;
    let horizon = cfg.horizon.unwrap_or(grid.t_star());
    let mu = cfg.measure_at(cfg.measure.kappa)?;
    let run = solve(&mu, &grid, cfg.p, horizon, &cfg.solver)?;
    let trace: Vec<Vec<String>> = run
        .sup_history()
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let ch = if j == 0 { f64::NAN } else { run.changes().get(j - 1).copied().unwrap_or(f64::NAN) };
            vec![(j + 1).to_string(), num(s), num(ch)]
        })
        .collect();
    sink.csv("picard_trace.csv", &["j", "sup_history", "relative_change"], &trace)?;
    let last = run.current().nrows() - 1;
    let prof: Vec<(f64, f64)> = grid.nodes().iter().enumerate().map(|(i, &x)| (x, run.current()[(last, i)])).collect();
    sink.plot("plot_solution_at_horizon.dat", "x u(x,T)", &prof)?;
    summary.push(("kappa".into(), num(cfg.measure.kappa)));
    summary.push(("horizon".into(), num(horizon)));
    summary.push(("verdict".into(), run.verdict().label().into()));
    summary.push(("iterations".into(), run.iteration().to_string()));
    if run.verdict().is_converged() {
        let res = fixed_point_residual(&run, &grid, 4)?;
        summary.push(("residual".into(), num(res.relative)));
        summary.push(("residual_limit".into(), num(10.0 * cfg.solver.quad_tol)));
    }
    Ok(())
}

fn bracket_for(cfg: &ExperimentConfig, grid: &DirichletKernelGrid, p: f64) -> Result<KappaBracket> {
    let schedule = horizon_schedule(grid, cfg.schedule_count, cfg.schedule_floor_cells)?;
    let family = |k: f64| cfg.measure.build(cfg.theta, p, cfg.dim, k).expect("validated measure");
    let certify = |k: f64| -> Result<bool> {
        let Some(g1) = cfg.gamma1 else { return Ok(true) };
        let t = schedule.iter().copied().fold(f64::INFINITY, f64::min);
        let r = necessary_subcritical(&family(k), grid.domain(), p, cfg.theta, t, &cfg.search)?;
        Ok(r.value > g1)
    };
    let cert: Option<&dyn Fn(f64) -> Result<bool>> = if cfg.gamma1.is_some() { Some(&certify) } else { None };
    kappa_star_bisect(&family, grid, p, &schedule, &cfg.kappa, cert)
}

fn centre_of(cfg: &ExperimentConfig) -> f64 {
    use crate::config::MeasureChoice::*;
    match cfg.measure.choice {
        Power { center, .. } | InteriorProfile { center } | BoundaryProfile { center } => center,
        _ => f64::NAN,
    }
}

fn kappa_pipeline(cfg: &ExperimentConfig, sink: &mut Sink, summary: &mut Vec<(String, String)>) -> Result<()> {
    let grid = grid_for(cfg)?;
    let b = bracket_for(cfg, &grid, cfg.p)?;
    let t_used = b.lo_horizon().unwrap_or(f64::NAN);
    let row = vec![
        num(cfg.p),
        num(cfg.theta),
        cfg.measure.choice.label().to_string(),
        num(centre_of(cfg)),
        num(b.lo),
        num(b.hi),
        num(t_used),
        b.hi_certified.map_or("unchecked".into(), |c| c.to_string()),
    ];
    sink.csv(
        "kappa_star.csv",
        &["p", "theta", "profile", "z", "kappa_lo", "kappa_hi", "T_used", "hi_certified"],
        &[row],
    )?;
    let probes: Vec<Vec<String>> = b
        .probes
        .iter()
        .map(|pr| {
            let v: Vec<String> = pr.verdicts.iter().map(|(t, v)| format!("{}:{}", num(*t), v.label())).collect();
            vec![num(pr.kappa), pr.solvable.to_string(), num(pr.horizon.unwrap_or(f64::NAN)), v.join(";")]
        })
        .collect();
    sink.csv("kappa_probes.csv", &["kappa", "solvable", "horizon", "verdicts"], &probes)?;
    sink.plot("plot_kappa_vs_p.dat", "p kappa_lo", &[(cfg.p, b.lo)])?;
    summary.push(("grid.m".into(), grid.len().to_string()));
    summary.push(("kappa_lo".into(), num(b.lo)));
    summary.push(("kappa_hi".into(), num(b.hi)));
    summary.push(("bounded".into(), b.is_bounded().to_string()));
    Ok(())
}

/// Weighted uniform and weighted `|x-z|^{-1/4}` data: both have finite
/// kernel integrals at every exponent above one.
pub fn reference_families(theta: f64, z: f64) -> Vec<(String, MeasureSpec)> {
    vec![
        ("weighted_uniform".to_string(), MeasureSpec::weighted(Density::Uniform(1.0), theta)),
        (
            "weighted_power_quarter".to_string(),
            MeasureSpec::weighted(Density::Power(SingularProfile { center: z, a: 0.25, b: 0.0, radius: 1.0 }), theta),
        ),
    ]
}

fn calibrate_pipeline(cfg: &ExperimentConfig, sink: &mut Sink, summary: &mut Vec<(String, String)>) -> Result<()> {
    let grid = grid_for(cfg)?;
    let b = bracket_for(cfg, &grid, cfg.p)?;
    let family = |k: f64| cfg.measure_at(k).expect("validated measure");
    let gamma1 = necessary_threshold(&b, &family, &grid, cfg.p, &cfg.search)?;
    let schedule = horizon_schedule(&grid, cfg.schedule_count, cfg.schedule_floor_cells)?;
    let z = if centre_of(cfg).is_finite() { centre_of(cfg) } else { 0.5 };
    let refs = reference_runs(
        &reference_families(cfg.theta, z),
        &cfg.reference_kappas,
        &grid,
        cfg.p,
        &schedule,
        &cfg.solver,
        &cfg.search,
    )?;
    let gamma = sufficient_threshold(&refs)?;
    let rows: Vec<Vec<String>> = refs
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                num(r.kappa),
                num(r.horizon),
                r.verdict.label().into(),
                num(r.kernel_integral),
                num(r.necessary_ratio),
            ]
        })
        .collect();
    sink.csv("reference_runs.csv", &["family", "kappa", "horizon", "verdict", "kernel_integral", "necessary_ratio"], &rows)?;
    let mut led = calibrate_constants(
        &grid,
        &CalibrationInputs { p: cfg.p, gamma1, gamma, inequality_pairs: vec![(0.0, 2.0), (0.5, 2.0), (1.0, 2.0), (1.0, 3.0)] },
    )?;
    led.push("kappa.lo", b.lo, "largest solvable amplitude probed");
    led.push("kappa.hi", b.hi, "smallest unsolvable amplitude probed");
    let path = sink.dir.join("constants.csv");
    led.write_csv(&path)?;
    sink.files.push(path);
    summary.push(("gamma1".into(), num(gamma1)));
    summary.push(("gamma".into(), num(gamma)));
    Ok(())
}

/// Reads the summary files in `dir` and renders one section per pipeline, in
/// pipeline order. Listed artifacts that are missing are named and skipped.
pub fn emit_report(dir: &Path) -> Result<String> {
    let mut out = String::new();
    for pl in Pipeline::ALL {
        let path = dir.join(format!("{}.summary", pl.label()));
        let Ok(text) = fs::read_to_string(&path) else { continue };
        let kv: Vec<(String, String)> = text
            .lines()
            .filter_map(|l| l.split_once(" = ").map(|(a, b)| (a.to_string(), b.to_string())))
            .collect();
        writeln!(out, "== {} ==", pl.label()).unwrap();
        let mut missing = Vec::new();
        for (k, v) in &kv {
            if k == "artifacts" {
                for a in v.split(',').filter(|a| !a.is_empty()) {
                    if !dir.join(a).exists() {
                        missing.push(a.to_string());
                    }
                }
            } else {
                writeln!(out, "  {k:<20} {v}").unwrap();
            }
        }
        let table = match pl {
            Pipeline::KappaStar => Some("kappa_star.csv"),
            Pipeline::ConditionSweep => Some("conditions.csv"),
            Pipeline::CalibrateConstants => Some("constants.csv"),
            Pipeline::KernelDiagnostics => Some("kernel_diagnostics.csv"),
            Pipeline::PicardRun => None,
        };
        if let Some(t) = table.filter(|t| !missing.iter().any(|m| m == t)) {
            if let Ok(mut r) = csv::Reader::from_path(dir.join(t)) {
                let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
                writeln!(out, "  {}", header.join(" | ")).unwrap();
                for rec in r.records() {
                    let rec = rec?;
                    writeln!(out, "  {}", rec.iter().collect::<Vec<_>>().join(" | ")).unwrap();
                }
            }
        }
        if !missing.is_empty() {
            writeln!(out, "  missing (skipped): {}", missing.join(", ")).unwrap();
        }
    }
    Ok(out)
}

/// Reads a constants file written by the calibration pipeline.
pub fn load_constants(dir: &Path) -> Result<ConstantsLedger> {
    ConstantsLedger::read_csv(&dir.join("constants.csv"))
}
