//! Flat `key = value` experiment files with dotted section keys.
//!
//! ```text
//! # comment
//! model.theta = 1
//! model.p = 3
//! measure.kind = interior_profile
//! measure.center = 0.5
//! ```
//!
//! Unknown keys are rejected so that a typo cannot silently fall back to a default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::criteria::SearchSpec;
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::measures::{
    boundary_profile, critical_exponent, interior_profile, same_exponent, Density, MeasureSpec, SingularProfile,
    Weighting,
};
use crate::picard::{KappaSearch, PicardOptions};
use crate::stable::StableParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pipeline {
    KernelDiagnostics,
    ConditionSweep,
    PicardRun,
    KappaStar,
    CalibrateConstants,
}

impl Pipeline {
    pub fn label(&self) -> &'static str {
        match self {
            Pipeline::KernelDiagnostics => "kernel-diagnostics",
            Pipeline::ConditionSweep => "condition-sweep",
            Pipeline::PicardRun => "picard-run",
            Pipeline::KappaStar => "kappa-star",
            Pipeline::CalibrateConstants => "calibrate-constants",
        }
    }

    pub const ALL: [Pipeline; 5] = [
        Pipeline::KernelDiagnostics,
        Pipeline::ConditionSweep,
        Pipeline::PicardRun,
        Pipeline::KappaStar,
        Pipeline::CalibrateConstants,
    ];

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.label() == s)
    }

    fn uses_grid(&self) -> bool {
        !matches!(self, Pipeline::ConditionSweep)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriterionChoice {
    NecessarySubcritical,
    NecessaryCriticalInterior,
    NecessaryCriticalBoundary,
    SufficientKernelIntegral,
    SufficientQNorm,
    SufficientLog,
}

impl CriterionChoice {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "necessary_subcritical" => CriterionChoice::NecessarySubcritical,
            "necessary_critical_interior" => CriterionChoice::NecessaryCriticalInterior,
            "necessary_critical_boundary" => CriterionChoice::NecessaryCriticalBoundary,
            "sufficient_kernel_integral" => CriterionChoice::SufficientKernelIntegral,
            "sufficient_qnorm" => CriterionChoice::SufficientQNorm,
            "sufficient_log" => CriterionChoice::SufficientLog,
            _ => return Err(Error::Config(format!("unknown criterion '{s}'"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeasureChoice {
    Zero,
    Uniform { value: f64 },
    Power { center: f64, a: f64, b: f64, radius: f64 },
    Atom,
    InteriorProfile { center: f64 },
    BoundaryProfile { center: f64 },
}

impl MeasureChoice {
    pub fn label(&self) -> &'static str {
        match self {
            MeasureChoice::Zero => "zero",
            MeasureChoice::Uniform { .. } => "uniform",
            MeasureChoice::Power { .. } => "power",
            MeasureChoice::Atom => "atom",
            MeasureChoice::InteriorProfile { .. } => "interior_profile",
            MeasureChoice::BoundaryProfile { .. } => "boundary_profile",
        }
    }
}

#[derive(Clone, Debug)]
pub struct MeasureConfig {
    pub choice: MeasureChoice,
    pub weighting: Weighting,
    pub kappa: f64,
    pub atoms: Vec<(f64, f64)>,
    pub boundary: Vec<(f64, f64)>,
}

impl MeasureConfig {
    /// The measure at amplitude `kappa`.
    pub fn build(&self, theta: f64, p: f64, dim: usize, kappa: f64) -> Result<MeasureSpec> {
        let profile = |pr: SingularProfile| MeasureSpec::from_profile(pr, kappa, theta);
        let mut mu = match self.choice {
            MeasureChoice::Zero => MeasureSpec::zero(theta),
            MeasureChoice::Atom => MeasureSpec::zero(theta),
            MeasureChoice::Uniform { value } => MeasureSpec::weighted(Density::Uniform(value), theta),
            MeasureChoice::Power { center, a, b, radius } => {
                MeasureSpec::weighted(Density::Power(SingularProfile { center, a, b, radius }), theta)
            }
            MeasureChoice::InteriorProfile { center } => profile(interior_profile(center, p, theta, dim)?),
            MeasureChoice::BoundaryProfile { center } => profile(boundary_profile(center, p, theta, dim)?),
        };
        mu.weighting = self.weighting;
        mu.atoms.extend(self.atoms.iter().copied());
        mu.boundary.extend(self.boundary.iter().copied());
        mu.amplitude = kappa;
        Ok(mu)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainChoice {
    Intervals(Vec<(f64, f64)>),
    HalfSpace { dim: usize, truncation: f64 },
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub domain: DomainChoice,
    pub dim: usize,
    pub theta: f64,
    pub p: f64,
    pub grid_size: usize,
    pub measure: MeasureConfig,
    pub criteria: Vec<CriterionChoice>,
    pub search: SearchSpec,
    pub q: f64,
    pub log_r: f64,
    pub log_l: f64,
    pub horizon: Option<f64>,
    pub solver: PicardOptions,
    pub schedule_count: usize,
    pub schedule_floor_cells: f64,
    pub kappa: KappaSearch,
    pub sweep_kappas: Vec<f64>,
    pub gamma1: Option<f64>,
    pub gamma: Option<f64>,
    pub reference_kappas: Vec<f64>,
    pub diagnostic_samples: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

struct Raw {
    map: BTreeMap<String, (String, usize)>,
    used: std::cell::RefCell<Vec<String>>,
}

impl Raw {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected 'key = value'", n + 1)));
            };
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", n + 1)));
            }
            if map.insert(k.to_string(), (v.trim().to_string(), n + 1)).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{k}'", n + 1)));
            }
        }
        Ok(Raw { map, used: Default::default() })
    }

    fn str(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().push(key.to_string());
        self.map.get(key).map(|(v, _)| v.as_str())
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.str(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| {
                Error::Config(format!("line {}: {key} = '{v}': {e}", self.map[key].1))
            }),
        }
    }

    fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.str(key) else { return Ok(None) };
        v.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Config(format!("{key}: '{s}': {e}"))))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// `a:b, c:d` pairs.
    fn pairs(&self, key: &str) -> Result<Vec<(f64, f64)>> {
        let Some(v) = self.str(key) else { return Ok(Vec::new()) };
        let mut out = Vec::new();
        for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (a, b) = item.split_once(':').ok_or_else(|| Error::Config(format!("{key}: '{item}' is not 'a:b'")))?;
            let f = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Config(format!("{key}: '{s}': {e}")));
            out.push((f(a)?, f(b)?));
        }
        Ok(out)
    }

    fn reject_unused(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self.map.keys().filter(|k| !used.contains(k)).map(|s| s.as_str()).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))))
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw = Raw::parse(text)?;
        let truncation = raw.or("domain.truncation", 1e3)?;
        let domain = match raw.str("domain").map(str::trim) {
            None => DomainChoice::Intervals(vec![(0.0, 1.0)]),
            Some(v) if v.starts_with("half_space:") => {
                let n = v["half_space:".len()..]
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Config(format!("domain = '{v}': {e}")))?;
                DomainChoice::HalfSpace { dim: n, truncation }
            }
            Some(_) => DomainChoice::Intervals(raw.pairs("domain")?),
        };
        let theta = raw.or("model.theta", 1.0)?;
        let p = raw.or("model.p", 3.0)?;
        let center = raw.or("measure.center", 0.5)?;
        let choice = match raw.str("measure.kind").unwrap_or("interior_profile") {
            "zero" => MeasureChoice::Zero,
            "uniform" => MeasureChoice::Uniform { value: raw.or("measure.value", 1.0)? },
            "power" => MeasureChoice::Power {
                center,
                a: raw.or("measure.a", 0.25)?,
                b: raw.or("measure.b", 0.0)?,
                radius: raw.or("measure.radius", 1.0)?,
            },
            "atom" => MeasureChoice::Atom,
            "interior_profile" => MeasureChoice::InteriorProfile { center },
            "boundary_profile" => MeasureChoice::BoundaryProfile { center },
            other => return Err(Error::Config(format!("unknown measure.kind '{other}'"))),
        };
        let weighting = match raw.str("measure.weighting").unwrap_or("distance") {
            "distance" => Weighting::Distance,
            "plain" => Weighting::Plain,
            other => return Err(Error::Config(format!("measure.weighting must be distance or plain, got '{other}'"))),
        };
        let measure = MeasureConfig {
            choice,
            weighting,
            kappa: raw.or("measure.kappa", 1.0)?,
            atoms: raw.pairs("measure.atoms")?,
            boundary: raw.pairs("measure.boundary")?,
        };
        let criteria = match raw.str("criteria.select") {
            None => vec![CriterionChoice::NecessarySubcritical, CriterionChoice::SufficientKernelIntegral],
            Some(v) => v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(CriterionChoice::parse).collect::<Result<_>>()?,
        };
        let d = SearchSpec::default();
        let search = SearchSpec {
            centers_per_component: raw.or("criteria.centers", d.centers_per_component)?,
            per_decade: raw.or("criteria.per_decade", d.per_decade)?,
            decades: raw.or("criteria.decades", d.decades)?,
            refine: raw.or("criteria.refine", d.refine)?,
            ..d
        };
        let o = PicardOptions::default();
        let solver = PicardOptions {
            tol: raw.or("solver.tol", o.tol)?,
            budget: raw.or("solver.budget", o.budget)?,
            window: raw.or("solver.window", o.window)?,
            overflow: raw.or("solver.overflow", o.overflow)?,
            growth: raw.or("solver.growth", o.growth)?,
            time_ratio: raw.or("solver.time_ratio", o.time_ratio)?,
            time_span: raw.or("solver.time_span", o.time_span)?,
            monotone_tol: raw.or("solver.monotone_tol", o.monotone_tol)?,
            quad_tol: raw.or("solver.quad_tol", o.quad_tol)?,
            necessary_ceiling: raw.parsed("solver.necessary_ceiling")?,
        };
        let k = KappaSearch::default();
        let kappa = KappaSearch {
            lo: raw.or("kappa.lo", k.lo)?,
            hi: raw.or("kappa.hi", k.hi)?,
            ceiling: raw.or("kappa.ceiling", k.ceiling)?,
            tol_kappa: raw.or("kappa.tol", k.tol_kappa)?,
            options: solver,
        };
        let cfg = ExperimentConfig {
            domain,
            dim: raw.or("model.dim", 1)?,
            theta,
            p,
            grid_size: raw.or("grid.m", 512)?,
            measure,
            criteria,
            search,
            q: raw.or("criteria.q", 1.5)?,
            log_r: raw.or("criteria.log_r", 0.5)?,
            log_l: raw.or("criteria.log_l", 0.0)?,
            horizon: raw.parsed("solver.horizon")?,
            solver,
            schedule_count: raw.or("schedule.count", 6)?,
            schedule_floor_cells: raw.or("schedule.floor_cells", 16.0)?,
            kappa,
            sweep_kappas: raw.list("sweep.kappas")?.unwrap_or_else(|| vec![1.0]),
            gamma1: raw.parsed("calibration.gamma1")?,
            gamma: raw.parsed("calibration.gamma")?,
            reference_kappas: raw.list("calibration.kappas")?.unwrap_or_else(|| vec![0.5, 1.0, 2.0, 4.0, 8.0]),
            diagnostic_samples: raw.or("diagnostics.samples", 64)?,
            seed: raw.or("seed", 0)?,
            output: raw.parsed::<String>("output.dir")?.map(PathBuf::from),
        };
        raw.reject_unused()?;
        Ok(cfg)
    }

    pub fn domain(&self) -> Result<Domain> {
        match &self.domain {
            DomainChoice::Intervals(v) => Domain::intervals(v.clone()),
            DomainChoice::HalfSpace { dim, truncation } => Domain::half_space(*dim)?.with_truncation(*truncation),
        }
    }

    pub fn params(&self) -> Result<StableParams> {
        StableParams::new(self.dim, self.theta)
    }

    pub fn measure_at(&self, kappa: f64) -> Result<MeasureSpec> {
        self.measure.build(self.theta, self.p, self.dim, kappa)
    }

    /// Every hypothesis the pipeline relies on, checked before any work.
    pub fn validate(&self, pipeline: Pipeline) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.theta > 0.0 && self.theta < 2.0) {
            return fail(format!("stable order θ must lie in (0,2), got {}", self.theta));
        }
        if !(self.p > 1.0) {
            return fail(format!("nonlinearity u^p needs p > 1, got {}", self.p));
        }
        if self.dim != 1 {
            return fail(format!("the grid kernel and criteria are one-dimensional; N = {} is not supported", self.dim));
        }
        let dom = self.domain()?;
        if matches!(self.domain, DomainChoice::HalfSpace { .. }) {
            return fail(format!(
                "{} needs an interval union; the half-space is available to the geometry routines only",
                pipeline.label()
            ));
        }
        if pipeline.uses_grid() && self.grid_size < 16 {
            return fail(format!("grid.m = {} is below the minimum 16", self.grid_size));
        }
        let pc_int = critical_exponent(self.theta, self.dim, 0.0);
        let pc_bdry = critical_exponent(self.theta, self.dim, 0.5 * self.theta);
        match self.measure.choice {
            MeasureChoice::InteriorProfile { center } => {
                if self.p < pc_int && !same_exponent(self.p, pc_int) {
                    return fail(format!(
                        "an optimal interior singularity exists only for p ≥ p_θ(N,0) = {pc_int}; below it every measure is admissible (p = {})",
                        self.p
                    ));
                }
                if !(dom.in_closure(&[center]) && !dom.is_boundary(&[center])) {
                    return fail(format!("interior profile centre {center} must be an interior point"));
                }
            }
            MeasureChoice::BoundaryProfile { center } => {
                if self.p < pc_bdry && !same_exponent(self.p, pc_bdry) {
                    return fail(format!(
                        "an optimal boundary singularity exists only for p ≥ p_θ(N,θ/2) = {pc_bdry} (p = {})",
                        self.p
                    ));
                }
                if !dom.is_boundary(&[center]) {
                    return fail(format!("boundary profile centre {center} must be a boundary point"));
                }
            }
            _ => {}
        }
        if matches!(self.measure.choice, MeasureChoice::Atom) && self.measure.atoms.is_empty() {
            return fail("measure.kind = atom needs measure.atoms = x:m, ...".into());
        }
        let mu = self.measure_at(self.measure.kappa)?;
        let h_rule = pipeline != Pipeline::KernelDiagnostics;
        mu.validate(&dom, h_rule.then_some(self.p)).map_err(|e| Error::Config(e.to_string()))?;
        if pipeline == Pipeline::ConditionSweep {
            for c in &self.criteria {
                self.validate_criterion(*c, pc_int, pc_bdry)?;
            }
            if self.horizon.is_none() {
                return fail("condition-sweep needs solver.horizon".into());
            }
        }
        if let Some(t) = self.horizon {
            if !(t > 0.0) {
                return fail(format!("solver.horizon must be positive, got {t}"));
            }
        }
        if !(self.solver.tol > 0.0 && self.solver.budget >= 1 && self.solver.window >= 1) {
            return fail("solver needs tol > 0, budget ≥ 1 and window ≥ 1".into());
        }
        if let Some(c) = self.solver.necessary_ceiling {
            if !(c > 0.0) {
                return fail(format!("solver.necessary_ceiling must be positive, got {c}"));
            }
        }
        if pipeline == Pipeline::KappaStar || pipeline == Pipeline::CalibrateConstants {
            if self.schedule_count == 0 {
                return fail("schedule.count must be positive".into());
            }
            let k = &self.kappa;
            if !(k.lo > 0.0 && k.hi > k.lo && k.ceiling >= k.hi && k.tol_kappa > 0.0 && k.tol_kappa < 1.0) {
                return fail("kappa search needs 0 < lo < hi ≤ ceiling and tol in (0,1)".into());
            }
        }
        if self.sweep_kappas.iter().any(|&k| !(k >= 0.0)) {
            return fail("sweep.kappas must be nonnegative".into());
        }
        Ok(())
    }

    fn validate_criterion(&self, c: CriterionChoice, pc_int: f64, pc_bdry: f64) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        match c {
            CriterionChoice::NecessaryCriticalInterior if !same_exponent(self.p, pc_int) => {
                fail(format!("the interior critical condition holds only at p = p_θ(N,0) = {pc_int}, got {}", self.p))
            }
            CriterionChoice::NecessaryCriticalBoundary if !same_exponent(self.p, pc_bdry) => {
                fail(format!("the boundary critical condition holds only at p = p_θ(N,θ/2) = {pc_bdry}, got {}", self.p))
            }
            CriterionChoice::SufficientQNorm if !(self.q > 1.0) => fail(format!("the q-norm condition needs q > 1, got {}", self.q)),
            CriterionChoice::SufficientQNorm
                if self.measure.weighting != Weighting::Distance || !self.measure.atoms.is_empty() =>
            {
                fail("the q-norm condition needs μ = d^{θ/2} f dy + h dσ without atoms".into())
            }
            CriterionChoice::SufficientLog => {
                let l = self.log_l;
                let pc = critical_exponent(self.theta, self.dim, l);
                if !(l == 0.0 || same_exponent(l, 0.5 * self.theta)) {
                    return fail(format!("the log condition needs l ∈ {{0, θ/2}}, got {l}"));
                }
                if !same_exponent(self.p, pc) {
                    return fail(format!("the log condition holds only at p = p_θ(N,l) = {pc}, got {}", self.p));
                }
                let top = (self.dim as f64 + l) / self.theta;
                if !(self.log_r > 0.0 && self.log_r < top) {
                    return fail(format!("the log condition needs 0 < r < (N+l)/θ = {top}, got {}", self.log_r));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}
