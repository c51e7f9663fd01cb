use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::Context;
use crnsign::deficiency::complexes_decomposition;
use crnsign::graphio::{build_graph, export_dot};
use crnsign::kinetics::{lift_equilibrium, lift_point, project_equilibrium};
use crnsign::random::seeded_point;
use crnsign::signfix::altfix as alt_construction;
use crnsign::spectra::{char_poly_relation, det_relation_check, det_sign_sampling, eigen_convergence, log_grid};
use crnsign::textio::report::{
    analysis_report, collect_checks, complex_list, deficiency_section, exact_matrix, fixreport_section,
    kernels_section, rates_or_unit, real_matrix, AnalysisOptions,
};
use crnsign::{serialize_network, sign_fix, EquilibriumOptions, FixReport, MassActionSystem, Network, Rational};
use serde_json::{json, Value};

use crate::{input_error, read_network, Common, EquilibriaArgs, Outcome, SpectraArgs};

fn report(value: Value, passed: bool) -> Outcome {
    Outcome {
        report: value,
        text: None,
        passed,
    }
}

fn fix(net: &Network, common: &Common) -> anyhow::Result<FixReport> {
    sign_fix(net, common.order.as_deref(), common.rate).map_err(|e| input_error(e.to_string()))
}

fn rates_for(net: &Network, given: Option<&[f64]>) -> anyhow::Result<Vec<f64>> {
    match given {
        Some(r) if r.len() != net.reaction_count() => Err(input_error(format!(
            "--rates has {} values, the network has {} reactions",
            r.len(),
            net.reaction_count()
        ))),
        Some(r) if r.iter().any(|k| !(*k > 0.0) || !k.is_finite()) => {
            Err(input_error("rates must be positive and finite"))
        }
        Some(r) => Ok(r.to_vec()),
        None => Ok(rates_or_unit(net)),
    }
}

fn point_for(net: &Network, given: Option<&[f64]>, seed: u64, flag: &str) -> anyhow::Result<Vec<f64>> {
    match given {
        Some(x) if x.len() != net.species_count() => Err(input_error(format!(
            "{flag} has {} values, the network has {} species",
            x.len(),
            net.species_count()
        ))),
        Some(x) if x.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) => {
            Err(input_error(format!("{flag} must be nonnegative and finite")))
        }
        Some(x) => Ok(x.to_vec()),
        None => Ok(seeded_point(net.species_count(), seed)),
    }
}

pub fn analyze(input: &Path, common: &Common) -> anyhow::Result<Outcome> {
    let net = read_network(input)?;
    let opts = AnalysisOptions {
        order: common.order.clone(),
        rate: common.rate,
        samples: common.samples,
        seed: common.seed,
    };
    let value = analysis_report(&net, &opts);
    if let Some(e) = value["fixreport"].get("error") {
        return Err(input_error(e.as_str().unwrap_or_default().to_string()));
    }
    let passed = collect_checks(&value).iter().all(|(_, ok)| *ok);
    Ok(report(value, passed))
}

pub fn signfix(input: &Path, common: &Common) -> anyhow::Result<Outcome> {
    let net = read_network(input)?;
    let fixed = fix(&net, common)?;
    if let Some(path) = &common.output {
        std::fs::write(path, serialize_network(fixed.result()))
            .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    }
    let mut value = json!({
        "fixreport": fixreport_section(&fixed),
        "kernels": kernels_section(&fixed),
    });
    let checks = collect_checks(&value);
    value["checks"] = checks_json(&checks);
    Ok(report(value, checks.iter().all(|(_, ok)| *ok)))
}

fn checks_json(checks: &[(String, bool)]) -> Value {
    Value::from(
        checks
            .iter()
            .map(|(name, ok)| json!({ "name": name, "passed": ok }))
            .collect::<Vec<_>>(),
    )
}

pub fn altfix(input: &Path) -> anyhow::Result<Outcome> {
    let net = read_network(input)?;
    let alt = alt_construction(&net);
    let names = net.species_names();
    let value = json!({
        "warning": "demonstration only: breaks the correspondence of equilibria",
        "stoichiometry_exact": exact_matrix(&alt.s),
        "altfix_exact": exact_matrix(&alt.s_tilde),
        "moved": alt.moved.iter().map(|&(p, l)| json!({ "species": names[p], "reaction": l })).collect::<Vec<_>>(),
        "degenerate": alt.degenerate,
        "dim_kernel": [alt.dim_ker_s, alt.dim_ker_s_tilde],
        "dim_left_kernel": [alt.dim_left_ker_s, alt.dim_left_ker_s_tilde],
        "conserving": [alt.s_conserving, alt.s_tilde_conserving],
        "kernel_dims_preserved": alt.kernel_dims_preserved(),
    });
    Ok(report(value, true))
}

pub fn deficiency(input: &Path, common: &Common) -> anyhow::Result<Outcome> {
    let net = read_network(input)?;
    let fixed = fix(&net, common)?;
    let value = deficiency_section(&fixed);
    let passed = value["audit"].is_array();
    Ok(report(value, passed))
}

pub fn equilibria(args: &EquilibriaArgs, common: &Common) -> anyhow::Result<Outcome> {
    let net = read_network(&args.input)?;
    let rates = rates_for(&net, args.rates.as_deref())?;
    let x0 = match &args.x0 {
        Some(_) => point_for(&net, args.x0.as_deref(), common.seed, "--x0")?,
        None => vec![1.0; net.species_count()],
    };
    let fixed_species = args.fixed_species.clone().unwrap_or_default();
    if let Some(&i) = fixed_species.iter().find(|&&i| i >= net.species_count()) {
        return Err(input_error(format!("--fixed-species: no species {i}")));
    }
    let fixed = fix(&net, common)?;
    let sys = MassActionSystem::with_rates(&net, &rates).map_err(|e| input_error(e.to_string()))?;

    let mut trajectory = Value::Null;
    if let Some(path) = &args.trajectory {
        let traj = sys
            .simulate(&x0, args.t_end, args.dt)
            .map_err(|e| input_error(e.to_string()))?;
        let file = File::create(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
        traj.write_csv(BufWriter::new(file), &net.species_names())
            .with_context(|| format!("writing {}", path.display()))?;
        trajectory = json!({ "path": path.display().to_string(), "points": traj.times.len() });
    }

    let opts = EquilibriumOptions {
        require_interior: !args.allow_boundary,
        fixed: fixed_species,
        ..Default::default()
    };
    let names = net.species_names();
    let mut value = json!({
        "species": names,
        "fixed_species": fixed.result().species_names(),
        "rates_f64": rates,
        "x0_f64": x0,
        "trajectory": trajectory,
    });
    let eq = match sys.find_equilibrium(&x0, &opts) {
        Ok(eq) => eq,
        Err(e) => {
            value["error"] = Value::from(e.to_string());
            return Ok(report(value, false));
        }
    };
    value["equilibrium"] = json!({
        "x_f64": eq.x,
        "residual_f64": eq.residual,
        "tolerance_f64": eq.tolerance,
        "iterations": eq.iterations,
        "boundary": eq.boundary.iter().map(|&i| names[i].clone()).collect::<Vec<_>>(),
    });
    let mut passed = true;
    match lift_equilibrium(&fixed, &rates, &eq.x, eq.tolerance) {
        Ok(pair) => {
            value["lifted"] = json!({
                "x_f64": pair.x_hat,
                "residual_f64": pair.residuals.1,
            });
            match project_equilibrium(&fixed, &rates, &pair.x_hat, 10.0 * eq.tolerance) {
                Ok(back) => {
                    let err = back
                        .iter()
                        .zip(&eq.x)
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / (1.0 + b.abs())));
                    value["round_trip_error_f64"] = Value::from(err);
                    passed &= err <= 1e-12;
                }
                Err(e) => {
                    value["round_trip_error"] = Value::from(e.to_string());
                    passed = false;
                }
            }
        }
        Err(e) => {
            value["lifted"] = json!({ "error": e.to_string() });
            passed = false;
        }
    }
    Ok(report(value, passed))
}

fn exact_all(v: &[f64]) -> Option<Vec<Rational>> {
    v.iter().map(|&x| Rational::from_float(x)).collect()
}

pub fn spectra(args: &SpectraArgs, common: &Common) -> anyhow::Result<Outcome> {
    let net = read_network(&args.input)?;
    let rates = rates_for(&net, args.rates.as_deref())?;
    let x = point_for(&net, args.x.as_deref(), common.seed, "--x")?;
    if x.iter().any(|&v| v <= 0.0) {
        return Err(input_error("--x must be strictly positive"));
    }
    let fixed = fix(&net, common)?;
    let steps: Vec<usize> = match args.step {
        Some(s) if s >= fixed.steps.len() => {
            return Err(input_error(format!("no step {s}; the fix has {} steps", fixed.steps.len())))
        }
        Some(s) => vec![s],
        None => (0..fixed.steps.len()).collect(),
    };
    let grid = log_grid(args.k_grid.lo, args.k_grid.hi, args.k_grid.n);
    let full = lift_point(&fixed, &rates, &x).map_err(|e| input_error(e.to_string()))?;

    let mut passed = true;
    let mut per_step = Vec::new();
    for i in steps {
        let stage_rates = fixed.stage_rates(&rates, i);
        let upto = fixed.stages[i + 1].species_count();
        let point = &full[..upto];
        let conv = eigen_convergence(&fixed, i, &stage_rates, point, &grid)
            .map_err(|e| input_error(e.to_string()))?;
        let mut dets = Vec::new();
        for &k in &grid {
            let r = det_relation_check(&fixed, i, &stage_rates, point, k)
                .map_err(|e| input_error(e.to_string()))?;
            passed &= r.passed;
            dets.push(json!({
                "k_f64": r.k,
                "det_j_f64": r.det_j,
                "det_fixed_f64": r.det_j_hat,
                "relative_error_f64": r.relative_error,
                "passed": r.passed,
            }));
        }
        let before = fixed.stages[i].species_count();
        let char_poly = match (exact_all(&stage_rates), exact_all(&point[..before])) {
            (Some(rq), Some(xq)) if before <= 4 => match char_poly_relation(&fixed, i, &rq, &xq) {
                Ok(c) => {
                    passed &= c.passed;
                    json!({ "degree_h": c.degree_h, "passed": c.passed })
                }
                Err(e) => json!({ "error": e.to_string() }),
            },
            _ => Value::Null,
        };
        passed &= conv.passed();
        let st = &fixed.steps[i];
        per_step.push(json!({
            "step": i,
            "class": [st.target_class.positive_entry.0, st.target_class.positive_entry.1],
            "point_f64": point,
            "eigenvalues_j": complex_list(&conv.eigenvalues_j),
            "eigenvalues_fixed": conv.eigenvalues_hat.iter().map(|e| complex_list(e)).collect::<Vec<_>>(),
            "matched_errors_f64": conv.matched_errors,
            "escaping": complex_list(&conv.escaping),
            "slope_f64": conv.slope,
            "clustered": conv.clustered,
            "verdict_j": conv.verdict_j,
            "verdict_fixed": conv.verdict_hat,
            "verdicts_fixed": conv.verdicts_hat,
            "k_star_f64": conv.k_star,
            "error_ok": conv.error_ok,
            "escaper_ok": conv.escaper_ok,
            "slope_ok": conv.slope_ok,
            "passed": conv.passed(),
            "det_relation": dets,
            "char_poly": char_poly,
        }));
    }
    let sampling = match det_sign_sampling(&fixed, &rates, common.samples, common.seed) {
        Ok(s) => {
            passed &= s.relation_holds;
            json!({
                "samples": s.samples,
                "constant_sign_j": s.constant_j(),
                "constant_sign_fixed": s.constant_hat(),
                "consistent": s.consistent(),
                "relation_holds": s.relation_holds,
            })
        }
        Err(e) => json!({ "error": e.to_string() }),
    };
    let value = json!({
        "k_grid_f64": grid,
        "rates_f64": rates,
        "steps": per_step,
        "det_sign_sampling": sampling,
    });
    Ok(report(value, passed))
}

pub fn graph(input: &Path, fixed: bool, common: &Common) -> anyhow::Result<Outcome> {
    let net = read_network(input)?;
    let net = if fixed {
        fix(&net, common)?.result().clone()
    } else {
        net
    };
    let g = build_graph(&net.stoichiometric_matrix(), &net.species_names());
    Ok(Outcome {
        report: Value::Null,
        text: Some(export_dot(&g)),
        passed: true,
    })
}

pub fn decompose(
    input: &Path,
    rates: Option<&[f64]>,
    x: Option<&[f64]>,
    common: &Common,
) -> anyhow::Result<Outcome> {
    let net = read_network(input)?;
    let rates = rates_for(&net, rates)?;
    let x = point_for(&net, x, common.seed, "--x")?;
    let sys = MassActionSystem::with_rates(&net, &rates).map_err(|e| input_error(e.to_string()))?;
    let dec = complexes_decomposition(&sys);
    let err = dec.identity_error(&x).map_err(|e| input_error(e.to_string()))?;
    let value = json!({
        "complexes": crnsign::deficiency(&net).complexes,
        "complex_matrix_f64": real_matrix(&dec.y),
        "laplacian_f64": real_matrix(&dec.a_k),
        "edges": dec.edges,
        "x_f64": x,
        "identity_error_f64": err,
        "passed": err <= 1e-10,
    });
    Ok(report(value, err <= 1e-10))
}
