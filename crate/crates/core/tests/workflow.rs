use schmidt_core::{
    classify_schmidt_witness, detects, lambda_max_subtraction, lift_operator, lift_state, lower_state,
    make_isotropic_witness, maximally_entangled_state, optimality_certificate, random_pure_state, Dims,
    IsotropicWitnessSpec, Operator, OptimizerConfig, Verdict,
};

fn s(a: f64) -> Operator {
    make_isotropic_witness(&IsotropicWitnessSpec { a, d: 3 }).unwrap()
}

#[test]
fn detected_state_is_low_rank_and_detected() {
    let cfg = OptimizerConfig::default().with_seed(11);
    let class = classify_schmidt_witness(&s(0.15), 3, &cfg).unwrap();
    assert_eq!(class.verdict, Verdict::SchmidtWitness { k: 3 });
    let psi = class.detected_state.unwrap();
    assert!(psi.schmidt_rank(1e-8).unwrap() <= 3);
    assert!(detects(&s(0.15), &psi.projector(), 1e-9).unwrap());
}

#[test]
fn lifted_witness_sees_rank_two_state_at_level_two() {
    let psi = random_pure_state(Dims::new(3, 3).unwrap(), 2, 5).unwrap();
    let w = s(0.3);
    let big = lift_operator(&w, 2).unwrap().operator;
    let lifted = lift_state(&psi, 2).unwrap().state;
    assert!((big.expectation(&lifted).unwrap() - w.expectation(&psi).unwrap()).abs() < 1e-12);
    assert!(lower_state(&lifted, 2).unwrap().distance(&psi).unwrap() < 1e-12);
}

#[test]
fn refined_witness_sits_on_the_next_boundary() {
    let cfg = OptimizerConfig::default().with_seed(2);
    let flat = Operator::identity(Dims::new(3, 3).unwrap()).scaled(1.0 / 9.0);
    let r = lambda_max_subtraction(&s(0.125), &flat, 3, &cfg).unwrap();
    assert!((r.lambda0 - 2.0 / 7.0).abs() < 1e-6);
    assert!(r.refined.unwrap().max_abs_diff(&s(1.0 / 6.0)).unwrap() < 1e-6);
}

#[test]
fn maximally_entangled_state_is_detected_below_one_third() {
    let phi = maximally_entangled_state(3).unwrap().projector();
    for a in [0.12, 0.2, 0.3] {
        assert!(detects(&s(a), &phi, 1e-9).unwrap());
    }
    assert!(!detects(&s(0.1), &phi, 1e-9).unwrap());
}

#[test]
fn boundary_witness_zero_set_spans_the_space() {
    let cert = optimality_certificate(&s(1.0 / 3.0), &OptimizerConfig::default().with_seed(4)).unwrap();
    assert!(cert.optimal);
    assert_eq!(cert.span_dim, 9);
}
