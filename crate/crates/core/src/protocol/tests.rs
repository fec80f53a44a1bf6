use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_3, FRAC_PI_4, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn model() -> HomodyneModel {
    HomodyneModel::new(2.0, 0.6, 1.0).unwrap()
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(11)
}

/// `U|ψ⟩` by an explicit 2×2 product.
fn oracle_apply(op: &SingleQubitOperator, psi: &QubitState) -> (C64, C64) {
    let e = &op.entries;
    (e[0][0] * psi.alpha() + e[0][1] * psi.beta(), e[1][0] * psi.alpha() + e[1][1] * psi.beta())
}

fn x_state_fidelity(result: &ProtocolResult, expected: (C64, C64)) -> f64 {
    let (a, b) = expected;
    let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let target = BranchState::qubit("X", &QubitState::new(a / norm, b / norm).unwrap())
        .tensor(&BranchState::basis("A", result.outcomes.p))
        .unwrap()
        .tensor(&BranchState::basis("B", result.outcomes.q))
        .unwrap();
    result.final_state.fidelity(&target).unwrap()
}

fn xi_triple_prime(alpha: f64, beta: f64) -> BranchState {
    BranchState::input(c(alpha, 0.0), c(beta, 0.0))
        .unwrap()
        .tensor(&BranchState::channel(ChannelVariant::OmegaPlus))
        .unwrap()
        .project(|b| b.paths == 0 || b.paths == 0b111)
        .unwrap()
}

#[test]
fn step1_upper_outcome() {
    let psi = QubitState::new(c(0.6, 0.0), c(0.8, 0.0)).unwrap();
    let (state, record) = riho_step1(&psi, ChannelVariant::OmegaPlus, &model(), &mut rng(), Some(0)).unwrap();
    assert_eq!(record.classified_label, 0);
    assert!(state.max_amplitude_diff(&xi_triple_prime(0.6, 0.8)).unwrap() < 1e-15);
}

#[test]
fn step1_lower_outcome_after_feed_forward() {
    let psi = QubitState::new(c(0.6, 0.0), c(0.8, 0.0)).unwrap();
    let (state, _) = riho_step1(&psi, ChannelVariant::OmegaPlus, &model(), &mut rng(), Some(1)).unwrap();
    assert!(state.max_amplitude_diff(&xi_triple_prime(0.6, 0.8)).unwrap() < 1e-14);
}

#[test]
fn step1_pi_channel_reaches_same_form() {
    let psi = QubitState::new(c(0.6, 0.0), c(0.8, 0.0)).unwrap();
    for k in [0, 1] {
        let (state, _) = riho_step1(&psi, ChannelVariant::PiPlus, &model(), &mut rng(), Some(k)).unwrap();
        assert!((state.fidelity(&xi_triple_prime(0.6, 0.8)).unwrap() - 1.0).abs() < 1e-14, "k = {k}");
    }
}

#[test]
fn riho_basis_input() {
    let psi = QubitState::new(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
    let lump = LumpOperator::from_phases(0.3, 1.9);
    let forced = ForcedOutcomes::all(0, 0, 0, 0);
    let result = run_riho(&psi, &lump, ChannelVariant::OmegaPlus, &model(), &mut rng(), &forced).unwrap();
    assert!((result.achieved_fidelity - 1.0).abs() < 1e-12);
    assert!((x_state_fidelity(&result, (lump.u(), c(0.0, 0.0))) - 1.0).abs() < 1e-12);
}

#[test]
fn riho_antidiagonal_branch() {
    let psi = QubitState::random(&mut ChaCha8Rng::seed_from_u64(5));
    let lump = LumpOperator::from_phases(FRAC_PI_4, FRAC_PI_3);
    let forced = ForcedOutcomes::all(0, 1, 0, 1);
    let result = run_riho(&psi, &lump, ChannelVariant::OmegaPlus, &model(), &mut rng(), &forced).unwrap();
    assert_eq!(result.target_suboperator, 1);
    assert!((result.achieved_fidelity - 1.0).abs() < 1e-12);
    let expected = oracle_apply(&lump.antidiagonal_part(), &psi);
    assert!((x_state_fidelity(&result, expected) - 1.0).abs() < 1e-12);
}

#[test]
fn riho_omega_minus_applies_phase_flip() {
    let psi = QubitState::random(&mut ChaCha8Rng::seed_from_u64(6));
    let lump = LumpOperator::from_phases(0.4, 2.2);
    let forced = ForcedOutcomes::all(0, 0, 0, 0);
    let result = run_riho(&psi, &lump, ChannelVariant::OmegaMinus, &model(), &mut rng(), &forced).unwrap();
    assert!(result.corrections_applied.iter().any(|c| c.operator == "Z_S" && c.photon == "X"));
    assert!((result.achieved_fidelity - 1.0).abs() < 1e-12);
}

#[test]
fn ripuo_diagonal_and_antidiagonal() {
    let psi = QubitState::random(&mut ChaCha8Rng::seed_from_u64(7));
    let u = C64::from_polar(1.0, 0.8);
    let u0 = SingleQubitOperator::diagonal(u, u.conj());
    let forced = ForcedOutcomes { k: Some(1), m: None, pq: Some((1, 1)) };
    let r = run_ripuo(&psi, &u0, 0, ChannelVariant::OmegaPlus, &model(), &mut rng(), &forced).unwrap();
    assert!((r.achieved_fidelity - 1.0).abs() < 1e-12);
    assert!((x_state_fidelity(&r, oracle_apply(&u0, &psi)) - 1.0).abs() < 1e-12);

    let v = C64::from_polar(1.0, -1.4);
    let u1 = SingleQubitOperator::antidiagonal(v, -v.conj());
    let forced = ForcedOutcomes { k: Some(0), m: None, pq: Some((1, 0)) };
    let r = run_ripuo(&psi, &u1, 1, ChannelVariant::OmegaPlus, &model(), &mut rng(), &forced).unwrap();
    let ops: Vec<&str> =
        r.corrections_applied.iter().filter(|c| c.step == "step3").map(|c| c.operator.as_str()).collect();
    assert_eq!(ops, ["Z_S", "X_S"]);
    assert!((x_state_fidelity(&r, oracle_apply(&u1, &psi)) - 1.0).abs() < 1e-12);
}

#[test]
fn ripuo_pi_plus_uses_shifted_step1_flip() {
    let psi = QubitState::random(&mut ChaCha8Rng::seed_from_u64(8));
    let u0 = SingleQubitOperator::rz(0.9);
    let forced = ForcedOutcomes { k: Some(0), m: None, pq: Some((0, 0)) };
    let r = run_ripuo(&psi, &u0, 0, ChannelVariant::PiPlus, &model(), &mut rng(), &forced).unwrap();
    let step1: Vec<(&str, Party)> =
        r.corrections_applied.iter().filter(|c| c.step == "step1").map(|c| (c.photon.as_str(), c.party)).collect();
    assert_eq!(step1, [("B", Party::Bob)]);
    assert!(!r.corrections_applied.iter().any(|c| c.operator == "Z_S"));
    assert!((r.achieved_fidelity - 1.0).abs() < 1e-12);
}

#[test]
fn ripuo_rejects_wrong_shape() {
    let psi = QubitState::new(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
    let err = run_ripuo(
        &psi,
        &SingleQubitOperator::ry(PI),
        0,
        ChannelVariant::OmegaPlus,
        &model(),
        &mut rng(),
        &ForcedOutcomes::default(),
    )
    .unwrap_err();
    assert!(matches!(err, ProtocolError::ShapeMismatch { m: 0, found: RotationClass::Antidiagonal }));
}

#[test]
fn classical_messages_precede_conditional_corrections() {
    let psi = QubitState::new(c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)).unwrap();
    let lump = LumpOperator::from_phases(1.0, 2.0);
    for channel in ChannelVariant::ALL {
        let forced = ForcedOutcomes::all(1, 1, 1, 0);
        let r = run_riho(&psi, &lump, channel, &model(), &mut rng(), &forced).unwrap();
        for corr in &r.corrections_applied {
            if let Some(cond) = &corr.condition {
                assert!(
                    r.classical_log.iter().any(|m| &m.label == cond && m.seq < corr.seq),
                    "{corr:?} lacks a prior message"
                );
            }
        }
    }
}

#[test]
fn forced_outcome_parsing() {
    let f: ForcedOutcomes = "k=1, m=0,pq=10".parse().unwrap();
    assert_eq!(f, ForcedOutcomes::all(1, 0, 1, 0));
    let f: ForcedOutcomes = "pq=01".parse().unwrap();
    assert_eq!(f.pq, Some((0, 1)));
    assert_eq!(f.k, None);
    assert!("pq=2".parse::<ForcedOutcomes>().is_err());
    assert!("x=1".parse::<ForcedOutcomes>().is_err());
}

#[test]
fn trace_serializes() {
    let psi = QubitState::new(c(0.6, 0.0), c(0.8, 0.0)).unwrap();
    let lump = LumpOperator::from_phases(0.1, 0.2);
    let r = run_riho(&psi, &lump, ChannelVariant::OmegaPlus, &model(), &mut rng(), &ForcedOutcomes::all(0, 0, 0, 0))
        .unwrap();
    let json = serde_json::to_value(&r.trace).unwrap();
    let first = &json[0];
    for key in ["step", "actor", "action", "outcome_bits", "state_digest"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn well_separated_sampling_always_succeeds() {
    let m = HomodyneModel::new(50.0, 0.4, 1.0).unwrap();
    for kind in [ProtocolKind::Riho, ProtocolKind::Ripuo] {
        let rate = monte_carlo_success(kind, ChannelVariant::OmegaPlus, &m, 2_000, 1).unwrap();
        assert_eq!(rate, 1.0);
    }
}

#[test]
fn indistinguishable_probe_fails_often() {
    let m = HomodyneModel::new(1.0, 0.0, 1.0).unwrap();
    let rate = monte_carlo_success(ProtocolKind::Riho, ChannelVariant::OmegaPlus, &m, 2_000, 2).unwrap();
    assert!(rate < 1.0);
}

#[test]
fn monte_carlo_is_deterministic() {
    let config = McConfig {
        protocol: ProtocolKind::Ripuo,
        channel: ChannelVariant::PiMinus,
        model: HomodyneModel::new(1.0, FRAC_PI_4, 0.9).unwrap(),
        trials: 500,
        seed: 99,
    };
    assert_eq!(monte_carlo(&config).unwrap(), monte_carlo(&config).unwrap());
}
