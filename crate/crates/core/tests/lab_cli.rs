use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fracshe::config::{ExperimentConfig, Pipeline};
use fracshe::lab::{emit_report, run_experiment};

fn lab(args: &[&str], cfg: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracshe-lab"))
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_cfg(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("exp.cfg");
    fs::write(&p, body).unwrap();
    p
}

const SMALL: &str = "model.theta = 1\nmodel.p = 3\ngrid.m = 64\nmeasure.kind = interior_profile\nmeasure.center = 0.5\nsolver.horizon = 0.0625\nsweep.kappas = 0, 0.3\ndiagnostics.samples = 20\n";

#[test]
fn kernel_diagnostics_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = lab(&["kernel-diagnostics", "--seed", "7"], &cfg, out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["kernel_diagnostics.csv", "chapman_kolmogorov.csv", "kernel_samples.csv", "plot_kernel_cross_section.dat"] {
        let x = fs::read(a.join(f)).unwrap();
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f}");
        assert!(!x.contains(&b'\r'));
    }
    let c = tmp.path().join("c");
    assert!(lab(&["kernel-diagnostics", "--seed", "8"], &cfg, &c).status.success());
    assert_ne!(fs::read(a.join("kernel_samples.csv")).unwrap(), fs::read(c.join("kernel_samples.csv")).unwrap());
    let mut r = csv::Reader::from_path(a.join("kernel_diagnostics.csv")).unwrap();
    let col = r.headers().unwrap().iter().position(|h| h == "max_mass").unwrap();
    for rec in r.records() {
        let m: f64 = rec.unwrap()[col].parse().unwrap();
        assert!(m <= 1.0 + 5e-3);
    }
}

#[test]
fn empty_directory_gives_empty_report() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(emit_report(tmp.path()).unwrap(), "");
}

#[test]
fn report_renders_single_artifact_table() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("kappa-star.summary"), "pipeline = kappa-star\nkappa_lo = 0.3\nartifacts = kappa_star.csv,plot_kappa_vs_p.dat\n").unwrap();
    fs::write(d.join("kappa_star.csv"), "p,theta,kappa_lo,kappa_hi\n3,1,0.3,0.31\n").unwrap();
    let text = emit_report(d).unwrap();
    let table: Vec<&str> = text.lines().filter(|l| l.contains(" | ")).collect();
    assert_eq!(table.len(), 2, "{text}");
    assert!(table[1].contains("0.31"));
    assert!(text.contains("missing (skipped): plot_kappa_vs_p.dat"));
}

#[test]
fn report_sections_in_pipeline_order() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    for pl in Pipeline::ALL.iter().rev() {
        fs::write(d.join(format!("{}.summary", pl.label())), format!("pipeline = {}\nartifacts = \n", pl.label())).unwrap();
    }
    let text = emit_report(d).unwrap();
    let pos: Vec<usize> = Pipeline::ALL.iter().map(|pl| text.find(&format!("== {} ==", pl.label())).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn condition_sweep_on_zero_data() {
    let tmp = tempfile::tempdir().unwrap();
    let body = "model.theta = 1\nmodel.p = 3\nmeasure.kind = zero\nsolver.horizon = 0.0625\nsweep.kappas = 1\ncriteria.select = necessary_subcritical, sufficient_kernel_integral\n";
    let cfg = ExperimentConfig::parse(body).unwrap();
    let out = run_experiment(&cfg, Pipeline::ConditionSweep, tmp.path(), 1).unwrap();
    assert!(out.files.iter().any(|f| f.ends_with("conditions.csv")));
    let mut r = csv::Reader::from_path(tmp.path().join("conditions.csv")).unwrap();
    let mut n = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        assert_eq!(rec[5].parse::<f64>().unwrap(), 0.0);
        n += 1;
    }
    assert_eq!(n, 2);
}

#[test]
fn validation_names_the_hypothesis() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "model.theta = 1\nmodel.p = 1.5\nmeasure.kind = interior_profile\n");
    let o = lab(&["kappa-star"], &cfg, &tmp.path().join("o"));
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.starts_with("error: ") && err.contains("p_θ(N,0)"), "{err}");
    assert!(!tmp.path().join("o").exists());

    let cfg = write_cfg(tmp.path(), "model.theta = 2.5\n");
    assert!(!lab(&["kernel-diagnostics"], &cfg, &tmp.path().join("o")).status.success());
    let cfg = write_cfg(tmp.path(), "model.thetta = 1\n");
    let o = lab(&["kernel-diagnostics"], &cfg, &tmp.path().join("o"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("thetta"));
    let cfg = write_cfg(tmp.path(), "measure.kind = zero\n");
    let o = lab(&["condition-sweep"], &cfg, &tmp.path().join("o"));
    assert!(!o.status.success(), "condition sweep without a horizon must be rejected");
}

#[test]
fn picard_run_and_report_via_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), &format!("{SMALL}measure.kappa = 0.25\n"));
    let out = tmp.path().join("o");
    let o = lab(&["picard-run"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("verdict = converged"));
    assert!(out.join("picard_trace.csv").exists());
    let o = lab(&["report"], &cfg, &out);
    assert!(o.status.success());
    let text = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(text.starts_with("== picard-run =="), "{text}");
}
