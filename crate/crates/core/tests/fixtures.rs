use std::path::PathBuf;

use num_traits::Zero;

use crnsign::deficiency::check_single_positive_column;
use crnsign::exactla::{kernel_basis, Side};
use crnsign::graphio::{build_graph, export_dot, find_bad_cycles, parse_dot_edges};
use crnsign::kinetics::{lift_point, EquilibriumOptions, MassActionSystem};
use crnsign::signfix::{sign_fix_with_rates, verify_permutation_relation};
use crnsign::spectra::{eigen_convergence, log_grid};
use crnsign::{
    deficiency, delta_audit, find_bad_submatrices, parse_network, serialize_network, sign_fix,
    single_step_report, Network, RationalMatrix,
};

const ALL: [&str; 9] = [
    "two_classes.crn",
    "complex_gain.crn",
    "deficiency_gain.crn",
    "unsigned_entry.crn",
    "signed_pattern.crn",
    "conserving_pair.crn",
    "single_positive.crn",
    "open_fullrank.crn",
    "reversible_toy.crn",
];

fn fixture(name: &str) -> Network {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name]
        .iter()
        .collect();
    parse_network(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn every_fixture_round_trips_through_text() {
    for name in ALL {
        let net = fixture(name);
        let again = parse_network(&serialize_network(&net)).unwrap();
        assert_eq!(again.stoichiometric_matrix(), net.stoichiometric_matrix(), "{name}");
        assert_eq!(again.species_names(), net.species_names(), "{name}");
        assert_eq!(again.rates(), net.rates(), "{name}");
    }
}

#[test]
fn integer_coefficients_glued_to_names() {
    let s = fixture("conserving_pair.crn").stoichiometric_matrix();
    let want = RationalMatrix::from_i64_rows(&[
        [-2, -1, 4, 4, -4],
        [-12, 4, 4, 0, 0],
        [4, -1, -2, 0, 0],
        [10, -2, -6, -4, 4],
    ]);
    assert_eq!(s, want);
}

#[test]
fn reversible_toy_keeps_both_rates() {
    let net = fixture("reversible_toy.crn");
    assert_eq!(net.rates(), Some(vec![1.0, 2.0]));
    assert_eq!(net.reversible_pairs().len(), 1);
}

#[test]
fn sign_fix_leaves_no_bad_class_on_any_fixture() {
    for name in ALL {
        let report = sign_fix(&fixture(name), None, 1.0).unwrap();
        assert!(find_bad_submatrices(&report.result().stoichiometric_matrix()).is_empty(), "{name}");
        assert!(report.result().is_reaction_form(), "{name}");
    }
}

#[test]
fn audit_flags_on_single_steps() {
    let gain = delta_audit(&single_step_report(&fixture("complex_gain.crn"), 0, 1.0).unwrap()).unwrap();
    assert_eq!((gain[0].phi, gain[0].psi), ((2, 1), (1, 1)));
    assert_eq!((gain[0].dn, gain[0].dl, gain[0].ds, gain[0].dd), (3, 2, 1, 0));

    let dgain = delta_audit(&single_step_report(&fixture("deficiency_gain.crn"), 0, 1.0).unwrap()).unwrap();
    assert_eq!((dgain[0].phi, dgain[0].psi), ((2, 1), (0, 1)));
    assert_eq!((dgain[0].dn, dgain[0].dl, dgain[0].ds, dgain[0].dd), (3, 1, 1, 1));
}

#[test]
fn single_positive_column_keeps_deficiency() {
    let net = fixture("single_positive.crn");
    assert!(check_single_positive_column(&net));
    let report = sign_fix(&net, None, 1.0).unwrap();
    assert!(!report.steps.is_empty());
    assert_eq!(deficiency(report.result()).delta, deficiency(&net).delta);
}

#[test]
fn closed_form_equilibrium_for_arbitrary_rates() {
    let net = fixture("conserving_pair.crn");
    let k = [0.7, 1.9, 1.3, 0.4, 2.2];
    let sys = MassActionSystem::with_rates(&net, &k).unwrap();
    let opts = EquilibriumOptions {
        fixed: vec![1],
        ..Default::default()
    };
    let x2: f64 = 1.05;
    let eq = sys.find_equilibrium(&[1.0, x2, 1.0, 1.0], &opts).unwrap();
    let [k1, k2, k3, k4, k5] = k;
    let want = [
        k2 * k4.powf(0.25) / (2.0 * (k1 * k3).sqrt() * k5.powf(0.25) * x2.powi(6)),
        x2,
        4.0 * k1.powf(1.5) * k3.sqrt() * k4.powf(0.25) * x2.powi(18) / (k2 * k2 * k5.powf(0.25)),
        k2 / (2.0 * (k1 * k3).sqrt() * x2.powi(6)),
    ];
    for (a, b) in eq.x.iter().zip(want) {
        assert!((a - b).abs() <= 1e-8 * b, "{:?} vs {want:?}", eq.x);
    }
}

#[test]
fn fix_order_only_permutes_the_worked_example() {
    let net = fixture("two_classes.crn");
    let a = sign_fix_with_rates(&net, Some(&[0, 1]), &[2.0, 3.0]).unwrap();
    let b = sign_fix_with_rates(&net, Some(&[1, 0]), &[3.0, 2.0]).unwrap();
    verify_permutation_relation(&a, &b).unwrap();
    let s = net.stoichiometric_matrix();
    let s_hat = a.result().stoichiometric_matrix();
    assert_eq!(kernel_basis(&s, Side::Right).dim(), kernel_basis(&s_hat, Side::Right).dim());
}

#[test]
fn every_step_of_the_worked_example_converges() {
    let net = fixture("two_classes.crn");
    let report = sign_fix(&net, None, 1.0).unwrap();
    let rates = vec![1.0; net.reaction_count()];
    let x = [1.0, 0.5, 2.0, 1.5, 0.8, 1.2, 0.6];
    let full = lift_point(&report, &rates, &x).unwrap();
    for step in 0..report.steps.len() {
        let stage_rates = report.stage_rates(&rates, step);
        let upto = report.stages[step + 1].species_count();
        let conv = eigen_convergence(&report, step, &stage_rates, &full[..upto], &log_grid(1.0, 1e6, 7)).unwrap();
        assert!(conv.passed(), "step {step}: {conv:?}");
        assert!(conv.slope.unwrap() <= -0.8);
        assert_eq!(conv.verdict_j, conv.verdict_hat);
    }
}

#[test]
fn dot_export_lists_every_stoichiometric_edge() {
    let net = fixture("two_classes.crn");
    let s = net.stoichiometric_matrix();
    let g = build_graph(&s, &net.species_names());
    let dot = export_dot(&g);
    let edges = parse_dot_edges(&dot);
    let nonzero = s.to_rows().iter().flatten().filter(|v| !v.is_zero()).count();
    assert_eq!(edges.len(), nonzero);
    assert_eq!(find_bad_cycles(&g).len(), find_bad_submatrices(&s).iter().map(|c| c.members.len()).sum::<usize>());
}

#[test]
fn largest_agreeing_rate_is_the_top_of_the_grid() {
    let net = fixture("deficiency_gain.crn");
    let report = single_step_report(&net, 0, 1.0).unwrap();
    let rates = [1.0; 3];
    let x_hat = lift_point(&report, &rates, &[1.0, 0.5, 2.0]).unwrap();
    let grid = log_grid(1.0, 1e6, 7);
    let conv = eigen_convergence(&report, 0, &rates, &x_hat, &grid).unwrap();
    assert_eq!(conv.verdicts_hat.len(), grid.len());
    assert_eq!(conv.k_star, Some(1e6));
}
