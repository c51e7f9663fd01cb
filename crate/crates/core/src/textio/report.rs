//! JSON report sections. Exact matrices are written under `*_exact` keys as
//! `"p/q"` strings, floating-point values under `*_f64` keys. Object keys are
//! sorted, so identical inputs give byte-identical output.

use num_complex::Complex as Cx;
use serde_json::{json, Value};

use crate::deficiency::{deficiency, delta_audit, check_single_positive_column};
use crate::exactla::{is_conserving, kernel_basis, kernel_correspondence_check, Side};
use crate::kinetics::lift_point;
use crate::matrix::Matrix;
use crate::model::Network;
use crate::random::seeded_point;
use crate::signcheck::{find_bad_submatrices, jacobian_sign_status, sample_jacobian_signs};
use crate::signfix::{sign_fix, FixReport};
use crate::spectra::{det_relation_check, det_sign_sampling};
use crate::RationalMatrix;

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub order: Option<Vec<usize>>,
    pub rate: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            order: None,
            rate: 1.0,
            samples: 200,
            seed: 0,
        }
    }
}

pub fn exact_matrix(m: &RationalMatrix) -> Value {
    Value::from(
        m.to_rows()
            .iter()
            .map(|r| r.iter().map(|v| Value::from(v.to_string())).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    )
}

pub fn real_matrix(m: &Matrix<f64>) -> Value {
    json!(m.to_rows())
}

pub fn complex_list(v: &[Cx<f64>]) -> Value {
    Value::from(v.iter().map(|z| json!([z.re, z.im])).collect::<Vec<_>>())
}

pub fn network_section(net: &Network) -> Value {
    json!({
        "species": net.species_names(),
        "reactions": (0..net.reaction_count()).map(|j| net.reaction_display(j)).collect::<Vec<_>>(),
        "stoichiometry_exact": exact_matrix(&net.stoichiometric_matrix()),
        "reaction_form": net.is_reaction_form(),
        "rates_f64": net.rates(),
    })
}

fn entry_names(net: &Network, entries: &[(usize, usize)]) -> Value {
    let names = net.species_names();
    Value::from(
        entries
            .iter()
            .map(|&(i, j)| json!([names[i], names[j]]))
            .collect::<Vec<_>>(),
    )
}

pub fn signcheck_section(net: &Network, samples: usize, seed: u64) -> Value {
    match jacobian_sign_status(net) {
        Ok(status) => {
            let ambiguous = status.ambiguous_entries();
            let sampled = sample_jacobian_signs(net, samples, seed)
                .map(|s| entry_names(net, &s.both_signs()))
                .unwrap_or(Value::Null);
            json!({
                "jacobian_status": status.to_strings(),
                "ambiguous": entry_names(net, &ambiguous),
                "respects_sign_pattern": ambiguous.is_empty(),
                "sampled_both_signs": sampled,
                "samples": samples,
            })
        }
        Err(e) => json!({ "error": e.to_string() }),
    }
}

pub fn badclasses_section(net: &Network) -> Value {
    let names = net.species_names();
    let classes = find_bad_submatrices(&net.stoichiometric_matrix());
    Value::from(
        classes
            .iter()
            .map(|c| {
                let (q, l) = c.positive_entry;
                json!({
                    "species": names[q],
                    "reaction": l,
                    "positive_entry": [q, l],
                    "members": c.members.iter().map(|m| json!({
                        "rows": [m.rows.0, m.rows.1],
                        "cols": [m.cols.0, m.cols.1],
                    })).collect::<Vec<_>>(),
                })
            })
            .collect::<Vec<_>>(),
    )
}

pub fn fixreport_section(report: &FixReport) -> Value {
    let names = report.result().species_names();
    let steps: Vec<Value> = report
        .steps
        .iter()
        .enumerate()
        .map(|(i, st)| {
            json!({
                "class": [st.target_class.positive_entry.0, st.target_class.positive_entry.1],
                "species": names[st.zeroed_species],
                "modified_column": st.modified_column,
                "zeroed_value_exact": st.zeroed_value.to_string(),
                "added_species": st.added_species,
                "added_reaction": report.stages[i + 1].reaction_display(st.added_reaction_index),
                "added_rate_f64": st.added_rate,
                "stoichiometry_exact": exact_matrix(&report.stages[i + 1].stoichiometric_matrix()),
            })
        })
        .collect();
    let result = report.result();
    json!({
        "order": report.order,
        "steps": steps,
        "result": {
            "species": names,
            "reactions": (0..result.reaction_count()).map(|j| result.reaction_display(j)).collect::<Vec<_>>(),
            "stoichiometry_exact": exact_matrix(&result.stoichiometric_matrix()),
            "bad_classes": find_bad_submatrices(&result.stoichiometric_matrix()).len(),
        },
    })
}

fn basis_json(m: &RationalMatrix, side: Side) -> Value {
    let b = kernel_basis(m, side);
    Value::from(
        b.vectors
            .iter()
            .map(|v| v.iter().map(|x| Value::from(x.to_string())).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    )
}

pub fn kernels_section(report: &FixReport) -> Value {
    let s = report.original().stoichiometric_matrix();
    let s_hat = report.result().stoichiometric_matrix();
    let per_step: Vec<Value> = report
        .steps
        .iter()
        .enumerate()
        .map(|(i, st)| {
            let a = report.stages[i].stoichiometric_matrix();
            let b = report.stages[i + 1].stoichiometric_matrix();
            match kernel_correspondence_check(&a, &b, st) {
                Ok(ok) => Value::from(ok),
                Err(e) => Value::from(e.to_string()),
            }
        })
        .collect();
    json!({
        "kernel_exact": basis_json(&s, Side::Right),
        "left_kernel_exact": basis_json(&s, Side::Left),
        "fixed_kernel_exact": basis_json(&s_hat, Side::Right),
        "fixed_left_kernel_exact": basis_json(&s_hat, Side::Left),
        "conserving": is_conserving(&s).conserving,
        "fixed_conserving": is_conserving(&s_hat).conserving,
        "correspondence": per_step,
    })
}

pub fn deficiency_section(report: &FixReport) -> Value {
    let audit = match delta_audit(report) {
        Ok(a) => serde_json::to_value(a).expect("serializable"),
        Err(e) => json!({ "error": e.to_string() }),
    };
    json!({
        "original": deficiency(report.original()),
        "fixed": deficiency(report.result()),
        "audit": audit,
        "single_positive_column": check_single_positive_column(report.original()),
    })
}

/// Unit rates unless the network carries all of its own.
pub fn rates_or_unit(net: &Network) -> Vec<f64> {
    net.rates().unwrap_or_else(|| vec![1.0; net.reaction_count()])
}

pub fn spectra_section(report: &FixReport, samples: usize, seed: u64) -> Value {
    let rates = rates_or_unit(report.original());
    let sampling = match det_sign_sampling(report, &rates, samples, seed) {
        Ok(s) => json!({
            "samples": s.samples,
            "factor_f64": s.factor,
            "constant_sign_j": s.constant_j(),
            "constant_sign_fixed": s.constant_hat(),
            "consistent": s.consistent(),
            "relation_holds": s.relation_holds,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let x = seeded_point(report.original().species_count(), seed);
    let relations: Vec<Value> = (0..report.steps.len())
        .map(|i| {
            let stage_rates = report.stage_rates(&rates, i);
            let result = lift_point(report, &rates, &x)
                .map_err(|e| e.to_string())
                .and_then(|full| {
                    let upto = report.stages[i + 1].species_count();
                    det_relation_check(report, i, &stage_rates, &full[..upto], report.steps[i].added_rate)
                        .map_err(|e| e.to_string())
                });
            match result {
                Ok(r) => json!({
                    "det_j_f64": r.det_j,
                    "det_fixed_f64": r.det_j_hat,
                    "k_f64": r.k,
                    "passed": r.passed,
                }),
                Err(e) => json!({ "error": e }),
            }
        })
        .collect();
    json!({
        "det_sign_sampling": sampling,
        "det_relation": relations,
        "point_f64": x,
    })
}

/// Pass/fail of every internal consistency check contained in a report.
pub fn collect_checks(report: &Value) -> Vec<(String, bool)> {
    let mut out = Vec::new();
    if let Some(v) = report.pointer("/kernels/correspondence").and_then(Value::as_array) {
        for (i, c) in v.iter().enumerate() {
            out.push((format!("kernel_correspondence[{i}]"), c.as_bool() == Some(true)));
        }
    }
    if let Some(a) = report.pointer("/deficiency/audit") {
        out.push(("delta_audit".into(), a.is_array()));
    }
    if let Some(v) = report.pointer("/spectra/det_relation").and_then(Value::as_array) {
        for (i, c) in v.iter().enumerate() {
            out.push((format!("det_relation[{i}]"), c["passed"].as_bool() == Some(true)));
        }
    }
    if let Some(s) = report.pointer("/spectra/det_sign_sampling") {
        out.push(("det_sign_sampling".into(), s["relation_holds"].as_bool() == Some(true)));
    }
    if let Some(n) = report.pointer("/fixreport/result/bad_classes") {
        out.push(("fixed_has_no_bad_classes".into(), n.as_u64() == Some(0)));
    }
    out
}

/// Every section for one network.
pub fn analysis_report(net: &Network, opts: &AnalysisOptions) -> Value {
    let mut root = json!({
        "network": network_section(net),
        "signcheck": signcheck_section(net, opts.samples, opts.seed),
        "badclasses": badclasses_section(net),
    });
    match sign_fix(net, opts.order.as_deref(), opts.rate) {
        Ok(report) => {
            root["fixreport"] = fixreport_section(&report);
            root["kernels"] = kernels_section(&report);
            root["deficiency"] = deficiency_section(&report);
            root["spectra"] = spectra_section(&report, opts.samples, opts.seed);
        }
        Err(e) => {
            root["fixreport"] = json!({ "error": e.to_string() });
        }
    }
    let checks = collect_checks(&root);
    root["checks"] = Value::from(
        checks
            .into_iter()
            .map(|(name, ok)| json!({ "name": name, "passed": ok }))
            .collect::<Vec<_>>(),
    );
    root
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textio::parse_network;

    #[test]
    fn report_is_deterministic_and_complete() {
        let net = parse_network("A -> 2B\nA + B -> C\nC -> A\nB -> A\n").unwrap();
        let opts = AnalysisOptions::default();
        let a = serde_json::to_string_pretty(&analysis_report(&net, &opts)).unwrap();
        let b = serde_json::to_string_pretty(&analysis_report(&net, &opts)).unwrap();
        assert_eq!(a, b);
        let v: Value = serde_json::from_str(&a).unwrap();
        for key in ["network", "signcheck", "badclasses", "fixreport", "kernels", "deficiency", "spectra"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["network"]["stoichiometry_exact"][0][0], "-1");
        assert!(collect_checks(&v).iter().all(|(_, ok)| *ok));
    }
}
