//! Executing a [`RunPlan`].

use std::fs;
use std::path::Path;

use fracorlicz::eigen::{default_mu_grid, faber_krahn_compare, minimize_alpha_mu, scan_mu};
use fracorlicz::kernel::AbsThresholds;
use fracorlicz::modular::{luxemburg, phi_g};
use fracorlicz::rearrange::{iterate_polarizations, polarize, schwarz};
use fracorlicz::suite::{run_selected, SuiteConfig};
use fracorlicz::young::log_grid;
use fracorlicz::{DomainMask, EigenProblem, Field, OptimizerSettings, PairTable};
use serde_json::{json, Value};

use crate::plan::{Command, KernelName, KernelSpec, RunPlan};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}", .0.join("\n"))]
    Usage(Vec<String>),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Core(#[from] fracorlicz::Error),
}

/// A finished command: the JSON report, a one-line summary, and whether
/// every checked property held.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Value,
    pub summary: String,
    pub passed: bool,
}

fn read_field(path: &Path) -> Result<Field, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(Field::from_csv(&text)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn table_for(plan: &RunPlan, u: &Field) -> Result<PairTable, CliError> {
    let kernel = plan.kernel.build(&plan.young, u.grid().dim())?;
    Ok(PairTable::new(
        *u.grid(),
        &kernel,
        plan.reach.resolve(u.grid()),
    )?)
}

fn eigen_problem(plan: &RunPlan) -> Result<EigenProblem, CliError> {
    let kernel = plan.kernel.build(&plan.young, plan.grid.dim())?;
    let domain = DomainMask::from_boxes(plan.grid, &plan.domain)?;
    let defaults = OptimizerSettings::default();
    let settings = OptimizerSettings {
        max_iter: plan.max_iter.unwrap_or(defaults.max_iter),
        tol: plan.tol.unwrap_or(defaults.tol),
        restarts: plan.restarts,
        seed: plan.seed,
        reach: Some(plan.reach.resolve(&plan.grid)),
    };
    Ok(
        EigenProblem::new(domain, plan.mu.unwrap_or(1.0), plan.young.clone(), kernel)?
            .with_settings(settings),
    )
}

fn levels(plan: &RunPlan) -> Vec<f64> {
    match (&plan.mu_grid, plan.mu) {
        (Some(g), _) => g.clone(),
        (None, Some(mu)) => vec![mu],
        (None, None) => default_mu_grid(),
    }
}

pub fn execute(plan: &RunPlan) -> Result<Outcome, CliError> {
    match plan.command {
        Command::Verify => verify(plan),
        Command::Modular => modular(plan),
        Command::Rearrange => rearrange(plan),
        Command::Polarize => polarize_cmd(plan),
        Command::Eigen => eigen(plan),
        Command::FaberKrahn => faber_krahn(plan),
        Command::Kernels => kernels(plan),
    }
}

fn verify(plan: &RunPlan) -> Result<Outcome, CliError> {
    let mut cfg = SuiteConfig::new(plan.seed);
    if plan.young_explicit {
        cfg = cfg.with_young(plan.young.clone());
    }
    let report = run_selected(&cfg, &plan.criteria);
    let failed: Vec<u8> = report
        .criteria
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.id)
        .collect();
    let summary = if failed.is_empty() {
        format!("all {} criteria passed", report.criteria.len())
    } else {
        format!("failed criteria: {failed:?}")
    };
    Ok(Outcome {
        passed: report.all_pass(),
        report: json!({ "command": "verify", "all_pass": report.all_pass(), "suite": report }),
        summary,
    })
}

fn modular(plan: &RunPlan) -> Result<Outcome, CliError> {
    let u = read_field(plan.input.as_deref().expect("validated"))?;
    let table = table_for(plan, &u)?;
    let phi_mng = table.phi_mng(&u, &plan.young)?;
    let phi = phi_g(&u, &plan.young)?;
    let norms = luxemburg(&u, &plan.young, &table)?;
    let report = json!({
        "command": "modular",
        "grid": u.grid(),
        "young": plan.young.family(),
        "kernel": table.kernel().name(),
        "phi_G": phi,
        "phi_MNG": phi_mng,
        "lg_norm": norms.lg_norm,
        "seminorm": norms.seminorm,
        "full_norm": norms.full_norm,
    });
    let summary = format!(
        "phi_G {phi:.6e}  phi_MNG {phi_mng:.6e}  lg_norm {:.6e}  seminorm {:.6e}  full_norm {:.6e}",
        norms.lg_norm, norms.seminorm, norms.full_norm
    );
    Ok(Outcome {
        report,
        summary,
        passed: true,
    })
}

fn rearrange(plan: &RunPlan) -> Result<Outcome, CliError> {
    let u = read_field(plan.input.as_deref().expect("validated"))?;
    let table = table_for(plan, &u)?;
    let star = schwarz(&u)?;
    let before = table.phi_mng(&u, &plan.young)?;
    let after = table.phi_mng(&star, &plan.young)?;
    write_text(plan.output.as_deref().expect("validated"), &star.to_csv())?;
    let mut report = json!({
        "command": "rearrange",
        "phi_before": before,
        "phi_after": after,
    });
    if u.grid().dim() == 1 {
        let tol = plan.tol.unwrap_or(1e-6);
        let max_iter = plan.max_iter.unwrap_or(10_000);
        let (_, trace) = iterate_polarizations(&u, plan.seed, tol, max_iter, &plan.young, &table)?;
        if let Some(path) = &plan.trace_csv {
            let mut csv = String::from("step,halfspace,phi,distance\n");
            for (k, s) in trace.steps.iter().enumerate() {
                csv.push_str(
                    &format!(
                        "{},{:?},{:.16e},{:.16e}\n",
                        k + 1,
                        s.halfspace,
                        s.phi,
                        s.distance
                    )
                    .replace(", ", " "),
                );
            }
            write_text(path, &csv)?;
        }
        let holds = after <= before * (1.0 + 1e-12);
        let distance = trace
            .steps
            .last()
            .map_or(trace.initial_distance, |s| s.distance);
        report["inequality_holds"] = json!(holds);
        report["iterated"] = json!({
            "iterations": trace.iterations,
            "converged": trace.converged,
            "final_distance": distance,
            "worst_relative_increase": trace.worst_increase(),
        });
        let passed = holds && trace.converged && trace.worst_increase() <= 1e-12;
        let summary = format!(
            "phi {before:.6e} -> {after:.6e}; polarization iteration {} after {} steps (distance {distance:.3e})",
            if trace.converged { "converged" } else { "did not converge" },
            trace.iterations
        );
        return Ok(Outcome {
            report,
            summary,
            passed,
        });
    }
    report["inequality_holds"] = Value::Null;
    report["note"] = json!("2D grid rearrangement is reported, not asserted");
    Ok(Outcome {
        summary: format!("phi {before:.6e} -> {after:.6e} (2D, not asserted)"),
        report,
        passed: true,
    })
}

fn polarize_cmd(plan: &RunPlan) -> Result<Outcome, CliError> {
    let u = read_field(plan.input.as_deref().expect("validated"))?;
    let hs = plan.halfspace.expect("validated");
    let table = table_for(plan, &u)?;
    let p = polarize(&u, &hs)?;
    let before = table.phi_mng(&u, &plan.young)?;
    let after = table.phi_mng(&p, &plan.young)?;
    write_text(plan.output.as_deref().expect("validated"), &p.to_csv())?;
    let holds = after <= before * (1.0 + 1e-12) + 1e-12;
    let report = json!({
        "command": "polarize",
        "halfspace": hs,
        "phi_before": before,
        "phi_after": after,
        "inequality_holds": holds,
    });
    Ok(Outcome {
        report,
        summary: format!("phi {before:.6e} -> {after:.6e}"),
        passed: holds,
    })
}

fn lambda_in_bracket(plan: &RunPlan, alpha: f64, lambda: f64, mu: f64) -> bool {
    let (pm, pp) = (plan.young.p_minus(), plan.young.p_plus());
    let q = alpha / mu;
    lambda >= pm / pp * q * (1.0 - 1e-12) && lambda <= pp / pm * q * (1.0 + 1e-12)
}

fn eigen(plan: &RunPlan) -> Result<Outcome, CliError> {
    let problem = eigen_problem(plan)?;
    if plan.mu.is_some() && plan.mu_grid.is_none() {
        let r = minimize_alpha_mu(&problem)?;
        if let Some(path) = &plan.output {
            write_text(path, &r.minimizer.to_csv())?;
        }
        if let Some(path) = &plan.trace_csv {
            let mut csv = String::from("step,objective\n");
            for (k, v) in r.trace.iter().enumerate() {
                csv.push_str(&format!("{k},{v:.16e}\n"));
            }
            write_text(path, &csv)?;
        }
        let bracket = lambda_in_bracket(plan, r.alpha_mu, r.lambda_mu, r.mu);
        let report = json!({
            "command": "eigen",
            "mu": r.mu,
            "alpha_mu": r.alpha_mu,
            "lambda_mu": r.lambda_mu,
            "converged": r.converged,
            "best_restart": r.best_restart,
            "steps": r.trace.len() - 1,
            "lambda_bracket_holds": bracket,
        });
        let summary = format!(
            "mu {}: alpha {:.6e}, lambda {:.6e}",
            r.mu, r.alpha_mu, r.lambda_mu
        );
        return Ok(Outcome {
            report,
            summary,
            passed: bracket,
        });
    }
    if plan.output.is_some() {
        return Err(CliError::Usage(vec![
            "eigen writes a minimizer only for a single `mu`".into(),
        ]));
    }
    let scan = scan_mu(&problem, &levels(plan))?;
    let bracket = scan.rows.iter().all(|r| match (r.alpha_mu, r.lambda_mu) {
        (Some(a), Some(l)) => lambda_in_bracket(plan, a, l, r.mu),
        _ => true,
    });
    let summary = format!(
        "alpha_1 {:?}, lambda_1 {:?} over {} levels",
        scan.alpha_1,
        scan.lambda_1,
        scan.rows.len()
    );
    let report = json!({ "command": "eigen", "scan": scan, "lambda_bracket_holds": bracket });
    Ok(Outcome {
        report,
        summary,
        passed: bracket,
    })
}

fn faber_krahn(plan: &RunPlan) -> Result<Outcome, CliError> {
    let problem = eigen_problem(plan)?;
    let r = faber_krahn_compare(&problem, &levels(plan))?;
    let passed = r.alpha_holds && r.lambda_holds != Some(false);
    let summary = format!(
        "alpha_1(B) <= alpha_1(Omega): {} (margin {:.3e}); lambda: {}",
        r.alpha_holds,
        r.alpha_margin,
        match r.lambda_holds {
            Some(b) => b.to_string(),
            None => "skipped, t g(t) not convex".into(),
        }
    );
    Ok(Outcome {
        report: json!({ "command": "faber-krahn", "comparison": r }),
        summary,
        passed,
    })
}

fn kernels(plan: &RunPlan) -> Result<Outcome, CliError> {
    let specs: Vec<KernelSpec> = if plan.kernel_explicit {
        vec![plan.kernel]
    } else {
        [
            KernelName::Fractional,
            KernelName::Slobodetskii,
            KernelName::BesovLog,
            KernelName::Abs,
        ]
        .into_iter()
        .map(|name| KernelSpec {
            name,
            ..plan.kernel
        })
        .collect()
    };
    let pm = plan.young.p_minus();
    let dim = plan.grid.dim();
    let mut rows = Vec::new();
    let mut passed = true;
    for spec in specs {
        let k = match spec.build(&plan.young, dim) {
            Ok(k) => k,
            Err(e) if !plan.kernel_explicit => {
                rows.push(
                    json!({ "kernel": format!("{:?}", spec.name), "skipped": e.to_string() }),
                );
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let p12 = k.verify_p1_p2(&log_grid(1e-6, 1e6, 241));
        let p3 = k.check_p3(pm, 1e-10);
        let p4 = k.check_p4(pm);
        let ok = p12.all_pass()
            && p3.low.value().is_some()
            && p3.high.value().is_some()
            && p4.final_value <= 1e-8;
        passed &= ok;
        let mut row = json!({
            "kernel": k.name(),
            "p1_p2_pass": p12.all_pass(),
            "monotonicity_failures": p12.monotonicity_failures(),
            "p3_low": p3.low.value(),
            "p3_high": p3.high.value(),
            "p4_final": p4.final_value,
            "p4_decays": p4.decays,
            "pass": ok,
        });
        if spec.name == KernelName::Abs {
            row["abs_thresholds"] = json!(AbsThresholds::for_young(&plan.young));
        }
        rows.push(row);
    }
    let summary = format!(
        "{} kernel(s) checked, {}",
        rows.len(),
        if passed { "all pass" } else { "failures" }
    );
    Ok(Outcome {
        report: json!({ "command": "kernels", "p_minus": pm, "kernels": rows }),
        summary,
        passed,
    })
}
