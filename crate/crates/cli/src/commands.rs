use std::path::Path;

use serde::Serialize;
use subdiff_core::forward::{residual_check, solve_forward, validate_assumption1, FieldSolution, ForwardDiagnostics, ProblemSpec};
use subdiff_core::inverse::{recover_q, synthesize_data, InverseSpec, Theorem43Report};
use subdiff_core::oracle::solve_fd;
use subdiff_core::profile::Profile;
use subdiff_core::selftest::{frackernel_suites, mlf_suites, SuiteReport};
use subdiff_core::spectral::flux_at_left;

use crate::config::{read_pairs, DataConfig, RunConfig};
use crate::error::CliError;
use crate::output::{fmt, header, OutDir};

/// Random draws per randomized identity suite.
const SELFTEST_CASES: usize = 1000;

#[derive(Serialize)]
struct ModeSummary {
    k: usize,
    iterations: usize,
    final_update: f64,
    contraction_estimate: f64,
    c_k_bound: f64,
}

#[derive(Serialize)]
struct ForwardReport<'a> {
    config: &'a RunConfig,
    residual_norm: f64,
    modes: Vec<ModeSummary>,
    diagnostics: &'a Option<ForwardDiagnostics>,
}

fn require_q(spec: &ProblemSpec) -> Result<(), CliError> {
    if spec.q.is_none() {
        return Err(CliError::Config("this command needs a reaction coefficient q".into()));
    }
    Ok(())
}

fn write_field(out: &OutDir, sol: &FieldSolution) -> Result<(), CliError> {
    let times = sol.tgrid.nodes();
    let xs = sol.sgrid.nodes();
    out.csv(
        "solution.csv",
        &header("t", xs.iter().map(|x| fmt(*x))),
        times.iter().enumerate().map(|(n, t)| std::iter::once(*t).chain(sol.u.row(n).iter().copied()).collect()),
    )?;
    let k = sol.modes.n_modes();
    out.csv(
        "modes.csv",
        &header("t", (1..=k).map(|k| format!("u_{k}"))),
        times.iter().enumerate().map(|(n, t)| std::iter::once(*t).chain(sol.modes.coeffs().row(n).iter().copied()).collect()),
    )?;
    let flux = flux_at_left(&sol.modes, &sol.tgrid)?;
    out.csv("flux.csv", &header("t", ["u_x(0,t)".to_string()]), times.iter().zip(flux.values()).map(|(t, v)| vec![*t, *v]))
}

pub fn forward(cfg: &RunConfig, base: &Path, out: &OutDir) -> Result<String, CliError> {
    let spec = cfg.problem_spec(base)?;
    require_q(&spec)?;
    let report = validate_assumption1(&spec);
    if !report.q_window_check.passed {
        eprintln!("warning: q leaves the admissible window: {}", report.q_window_check.detail);
    }
    if !report.compatibility.passed {
        eprintln!("warning: boundary compatibility: {}", report.compatibility.detail);
    }
    let sol = solve_forward(&spec, cfg.solver.tol, cfg.solver.max_iter)?;
    write_field(out, &sol)?;
    let modes = sol
        .per_mode
        .iter()
        .map(|m| ModeSummary {
            k: m.k,
            iterations: m.iterations,
            final_update: m.final_update,
            contraction_estimate: m.contraction_estimate,
            c_k_bound: m.c_k_bound,
        })
        .collect();
    out.json("diagnostics.json", &ForwardReport { config: cfg, residual_norm: sol.residual_norm, modes, diagnostics: &sol.diagnostics })?;
    Ok(format!("forward: residual {:.3e}", sol.residual_norm))
}

#[derive(Serialize)]
struct InverseReport<'a> {
    config: &'a RunConfig,
    psi0: f64,
    ct_bound: f64,
    condition_report: &'a Theorem43Report,
    iterations: usize,
    measured_ratio: f64,
    clamp_count: usize,
    lemma45_ratio: f64,
    flux_residual: f64,
    recovery_error: Option<f64>,
}

fn inverse_spec(cfg: &RunConfig, base: &Path, spec: ProblemSpec) -> Result<InverseSpec, CliError> {
    match &cfg.data {
        Some(DataConfig::Synthetic { noise, seed }) => {
            require_q(&spec)?;
            Ok(synthesize_data(&spec, *noise, *seed)?)
        }
        Some(DataConfig::Csv { path, psi0 }) => {
            let pairs = read_pairs(&base.join(path))?;
            let psi = Profile::from_pairs(spec.tgrid, &pairs)?;
            let psi0 = psi0.unwrap_or_else(|| psi.min());
            let q_true = spec.q.clone();
            let mut inv = InverseSpec::new(spec, psi, psi0)?;
            inv.q_true = q_true;
            Ok(inv)
        }
        None => Err(CliError::Config("the inverse command needs a data block".into())),
    }
}

pub fn inverse(cfg: &RunConfig, base: &Path, out: &OutDir) -> Result<String, CliError> {
    let spec = cfg.problem_spec(base)?;
    let inv = inverse_spec(cfg, base, spec)?;
    inv.check_lower_bound()?;
    let res = recover_q(&inv, cfg.solver.tol, cfg.solver.max_iter)?;
    let times = inv.spec.tgrid.nodes();
    let q = res.q.values();
    match &inv.q_true {
        Some(qt) => out.csv(
            "q.csv",
            &header("t", ["q".to_string(), "q_true".to_string()]),
            (0..times.len()).map(|n| vec![times[n], q[n], qt.values()[n]]),
        )?,
        None => out.csv("q.csv", &header("t", ["q".to_string()]), (0..times.len()).map(|n| vec![times[n], q[n]]))?,
    }
    out.csv("psi.csv", &header("t", ["psi".to_string()]), times.iter().zip(inv.psi.values()).map(|(t, v)| vec![*t, *v]))?;
    out.csv(
        "iterates.csv",
        &header("iteration", ["update".to_string()]),
        res.iterates.iter().enumerate().map(|(i, u)| vec![(i + 1) as f64, *u]),
    )?;
    out.json(
        "report.json",
        &InverseReport {
            config: cfg,
            psi0: inv.psi0,
            ct_bound: res.ct_bound,
            condition_report: &res.condition_report,
            iterations: res.iterates.len(),
            measured_ratio: res.measured_ratio,
            clamp_count: res.clamp_count,
            lemma45_ratio: res.lemma45_ratio,
            flux_residual: res.flux_residual,
            recovery_error: res.q_error,
        },
    )?;
    let mut msg = format!(
        "inverse: {} iterations, measured ratio {:.4}, C(T) {:.4}, flux residual {:.3e}",
        res.iterates.len(),
        res.measured_ratio,
        res.ct_bound,
        res.flux_residual
    );
    if let Some(e) = res.q_error {
        msg.push_str(&format!(", recovery error {e:.3e}"));
    }
    Ok(msg)
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    config: &'a RunConfig,
    spectral_residual: f64,
    fd_residual: f64,
    solver_gap: f64,
    residual_passed: bool,
    gap_passed: bool,
}

pub fn verify(cfg: &RunConfig, base: &Path, out: &OutDir) -> Result<String, CliError> {
    let spec = cfg.problem_spec(base)?;
    require_q(&spec)?;
    let spectral = solve_forward(&spec, cfg.solver.tol, cfg.solver.max_iter)?;
    let fd = solve_fd(&spec)?;
    let fd_residual = residual_check(&fd, &spec)?;
    let solver_gap = spectral.u.iter().zip(fd.u.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let report = VerifyReport {
        config: cfg,
        spectral_residual: spectral.residual_norm,
        fd_residual,
        solver_gap,
        residual_passed: spectral.residual_norm <= cfg.verify.residual_tol,
        gap_passed: solver_gap <= cfg.verify.gap_tol,
    };
    out.json("verify.json", &report)?;
    let msg = format!(
        "verify: spectral residual {:.3e} (≤ {:.1e}: {}), FD residual {:.3e}, solver gap {:.3e} (≤ {:.1e}: {})",
        report.spectral_residual,
        cfg.verify.residual_tol,
        verdict(report.residual_passed),
        fd_residual,
        solver_gap,
        cfg.verify.gap_tol,
        verdict(report.gap_passed)
    );
    if report.residual_passed && report.gap_passed {
        Ok(msg)
    } else {
        Err(CliError::Checks(msg))
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn selftest(out: Option<&OutDir>) -> Result<String, CliError> {
    let mut suites: Vec<SuiteReport> = mlf_suites(SELFTEST_CASES, 0)?;
    suites.extend(frackernel_suites()?);
    for s in &suites {
        println!("{:<40} {:>5}/{:<5} {}", s.name, s.cases - s.failures, s.cases, verdict(s.passed()));
    }
    if let Some(out) = out {
        out.json("selftest.json", &suites)?;
    }
    let failed: Vec<&str> = suites.iter().filter(|s| !s.passed()).map(|s| s.name.as_str()).collect();
    if failed.is_empty() {
        Ok(format!("selftest: {} suites passed", suites.len()))
    } else {
        Err(CliError::Checks(format!("selftest: failing suites {failed:?}")))
    }
}
