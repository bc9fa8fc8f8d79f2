//! Thresholds and fitted constants: the solver-side calibration of the
//! criterion thresholds and a named ledger of every numeric constant.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::criteria::{necessary_subcritical, sufficient_kernel_integral, SearchSpec};
use crate::dirichlet::{grid_diagnostics, DiagnosticSpec, DirichletKernelGrid};
use crate::error::{Error, Result};
use crate::inequality::general_constant;
use crate::measures::MeasureSpec;
use crate::picard::{solve, KappaBracket, PicardOptions, PicardVerdict};
use crate::stable::{fit_envelope, log_grid};

#[derive(Clone, Debug, PartialEq)]
pub struct LedgerEntry {
    pub name: String,
    pub value: f64,
    pub origin: String,
}

/// Named constants with where each came from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstantsLedger {
    entries: Vec<LedgerEntry>,
}

impl ConstantsLedger {
    pub fn push(&mut self, name: impl Into<String>, value: f64, origin: impl Into<String>) {
        self.entries.push(LedgerEntry { name: name.into(), value, origin: origin.into() });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.value)
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["name", "value", "origin"])?;
        for e in &self.entries {
            w.write_record([e.name.as_str(), &format!("{:.16e}", e.value), e.origin.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Inverse of [`write_csv`](Self::write_csv).
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut out = ConstantsLedger::default();
        for rec in r.records() {
            let rec = rec?;
            let value = rec[1].parse::<f64>().map_err(|e| Error::Config(format!("ledger value {}: {e}", &rec[1])))?;
            out.push(&rec[0], value, &rec[2]);
        }
        Ok(out)
    }

    pub fn write_text(&self, out: &mut impl Write) -> Result<()> {
        for e in &self.entries {
            writeln!(out, "{:<28} {:>24.16e}  {}", e.name, e.value, e.origin)?;
        }
        Ok(())
    }
}

/// One solver run of a reference family with its criterion values.
#[derive(Clone, Debug)]
pub struct ReferenceRun {
    pub label: String,
    pub kappa: f64,
    pub horizon: f64,
    pub verdict: PicardVerdict,
    pub kernel_integral: f64,
    pub necessary_ratio: f64,
}

/// Runs every `(family, κ, T)` combination; work items are independent.
#[allow(clippy::too_many_arguments)]
pub fn reference_runs(
    families: &[(String, MeasureSpec)],
    kappas: &[f64],
    grid: &DirichletKernelGrid,
    p: f64,
    schedule: &[f64],
    opts: &PicardOptions,
    spec: &SearchSpec,
) -> Result<Vec<ReferenceRun>> {
    let mut items = Vec::new();
    for (label, f) in families {
        for &k in kappas {
            for &t in schedule {
                items.push((label.clone(), f.with_amplitude(k), k, t));
            }
        }
    }
    let dom = grid.domain();
    let theta = grid.theta();
    items
        .into_par_iter()
        .map(|(label, mu, kappa, horizon)| {
            let run = solve(&mu, grid, p, horizon, opts)?;
            let kernel_integral = match sufficient_kernel_integral(&mu, dom, p, theta, horizon, spec) {
                Ok(r) => r.value,
                Err(Error::Divergence(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            let necessary_ratio = necessary_subcritical(&mu, dom, p, theta, horizon, spec)?.value;
            Ok(ReferenceRun { label, kappa, horizon, verdict: run.verdict(), kernel_integral, necessary_ratio })
        })
        .collect()
}

/// Half the smallest kernel integral among runs that failed to converge.
pub fn sufficient_threshold(runs: &[ReferenceRun]) -> Result<f64> {
    let m = runs
        .iter()
        .filter(|r| !r.verdict.is_converged() && r.kernel_integral.is_finite())
        .map(|r| r.kernel_integral)
        .fold(f64::INFINITY, f64::min);
    if !m.is_finite() {
        return Err(Error::Accuracy {
            what: "no reference run diverged with a finite kernel integral; raise the amplitudes".into(),
            estimate: f64::NAN,
        });
    }
    Ok(0.5 * m)
}

/// Largest necessary ratio over the amplitudes a bracket found solvable,
/// each at the horizon where it converged.
pub fn necessary_threshold(
    bracket: &KappaBracket,
    family: &dyn Fn(f64) -> MeasureSpec,
    grid: &DirichletKernelGrid,
    p: f64,
    spec: &SearchSpec,
) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for pr in bracket.probes.iter().filter(|pr| pr.solvable && pr.kappa > 0.0) {
        let Some(t) = pr.horizon else { continue };
        let r = necessary_subcritical(&family(pr.kappa), grid.domain(), p, grid.theta(), t, spec)?;
        best = best.max(r.value);
    }
    if !best.is_finite() {
        return Err(Error::Accuracy { what: "bracket holds no converged amplitude".into(), estimate: f64::NAN });
    }
    Ok(best)
}

/// Inputs to [`calibrate_constants`].
#[derive(Clone, Debug)]
pub struct CalibrationInputs {
    pub p: f64,
    pub gamma1: f64,
    pub gamma: f64,
    /// `(α, β)` pairs for which the comparison constant is recorded.
    pub inequality_pairs: Vec<(f64, f64)>,
}

/// Collects the kernel constants of `grid` and the given thresholds.
pub fn calibrate_constants(grid: &DirichletKernelGrid, inputs: &CalibrationInputs) -> Result<ConstantsLedger> {
    let mut led = ConstantsLedger::default();
    let theta = grid.theta();
    let ts: Vec<f64> = log_grid(-2.0, 2.0, 2);
    let rs: Vec<f64> = log_grid(-2.0, 2.0, 4);
    let fit = fit_envelope(grid.params(), &rs, &ts)?;
    led.push("envelope.c1", fit.c1, "min Γ/envelope over 4 decades in |x| and t");
    led.push("envelope.c2", fit.c2, "max Γ/envelope over 4 decades in |x| and t");
    let diag = grid_diagnostics(grid, &DiagnosticSpec::standard(grid))?;
    let within: Vec<_> = diag.rows.iter().filter(|r| r.t <= grid.t_prime() * (1.0 + 1e-12)).collect();
    let lo = |f: &dyn Fn(&crate::dirichlet::DiagnosticTimeRow) -> f64| within.iter().map(|r| f(r)).fold(f64::INFINITY, f64::min);
    let hi = |f: &dyn Fn(&crate::dirichlet::DiagnosticTimeRow) -> f64| within.iter().map(|r| f(r)).fold(0.0, f64::max);
    led.push("dirichlet.c1", lo(&|r| r.two_sided.0), "min G/two-sided envelope for t ≤ T'");
    led.push("dirichlet.c2", hi(&|r| r.two_sided.1), "max G/two-sided envelope for t ≤ T'");
    led.push("normalized.c1", lo(&|r| r.k_fit.0), "min K/envelope for t ≤ T', boundary columns included");
    led.push("normalized.c2", hi(&|r| r.k_fit.1), "max K/envelope for t ≤ T', boundary columns included");
    led.push("boundary.c4", hi(&|r| r.c4), "max t^{1/2} ∫ K(x,b,t) dx");
    led.push("boundary.c5", hi(&|r| r.c5), "max t^{1/2+1/θ} Σ_b K(x,b,t)/D(x,t)");
    led.push("lower.small_ball", diag.small_ball_lower, "min K(z,y,σ^θ) σ^N d(z)^{θ/2}");
    led.push("lower.time_shift", diag.time_shift_lower, "min G(z,y,2t-s)/((s/2t)^{N/θ} G(z,y,s))");
    led.push("grid.t_prime", grid.t_prime(), "largest dyadic time with fitted ratio below the ceiling");
    led.push("grid.t_star", grid.t_star(), "min(T', diam^θ/16)");
    led.push("grid.lambda1", diag.lambda1, "smallest eigenvalue");
    led.push("grid.theta", theta, "order");
    led.push("threshold.gamma1", inputs.gamma1, "max necessary ratio over converged amplitudes");
    led.push("threshold.gamma", inputs.gamma, "half the least kernel integral over diverged reference runs");
    for &(a, b) in &inputs.inequality_pairs {
        led.push(format!("inequality.C({a},{b})"), general_constant(a, b), "comparison on [t_*, 2t_*]");
    }
    Ok(led)
}
