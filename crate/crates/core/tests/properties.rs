use std::f64::consts::TAU;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rio_core::multiparty::{build_chain_channel, controller_chain_apply};
use rio_core::{BranchState, ChannelVariant, HomodyneModel, LumpOperator, QubitState, SingleQubitOperator, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn close(a: &SingleQubitOperator, b: &SingleQubitOperator) -> bool {
    a.max_abs_diff(b) < 1e-12
}

fn state_from_seed(seed: u64) -> BranchState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = BranchState::vacuum();
    for label in ["X", "A", "B"] {
        state = state.tensor(&BranchState::qubit(label, &QubitState::random(&mut rng))).unwrap();
    }
    state.cross_kerr("A", 1, 1).unwrap().cross_kerr("B", 1, 2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn sub_operators_commute_and_anticommute(u in 0.0..TAU, v in 0.0..TAU) {
        let lump = LumpOperator::from_phases(u, v);
        let (u0, u1) = lump.decompose();
        let z = SingleQubitOperator::phase_flip();
        prop_assert!(close(&(u0 * z), &(z * u0)));
        prop_assert!(close(&(u1 * z), &(z * u1).scale(c(-1.0, 0.0))));
        prop_assert!(close(&u0.add(&u1), &lump.matrix().scale(c(std::f64::consts::SQRT_2, 0.0))));
        prop_assert!(lump.matrix().is_unitary(1e-12));
    }

    #[test]
    fn unitaries_preserve_norm(seed in any::<u64>(), theta in 0.0..TAU, photon in 0usize..3) {
        let state = state_from_seed(seed);
        let label = ["X", "A", "B"][photon];
        let rotated = state.apply_operator(label, &SingleQubitOperator::ry(theta)).unwrap();
        prop_assert!((rotated.norm_sqr() - 1.0).abs() < 1e-12);
        let split = rotated.apply_bbs(label).unwrap();
        prop_assert!((split.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bbs_and_kerr_round_trip(seed in any::<u64>(), shift in -5i32..=5, path in 0u8..2) {
        let state = state_from_seed(seed);
        let twice = state.apply_bbs("B").unwrap().apply_bbs("B").unwrap();
        prop_assert!(twice.max_amplitude_diff(&state).unwrap() < 1e-12);
        let undone = state.cross_kerr("X", path, shift).unwrap().cross_kerr("X", path, -shift).unwrap();
        prop_assert!(undone.max_amplitude_diff(&state).unwrap() < 1e-15);
    }

    #[test]
    fn pairwise_error_is_complementary(z in 0.01..5.0, theta in 0.0..TAU, d in 0.0..=1.0, n1 in -3i32..=3, n2 in -3i32..=3) {
        let model = HomodyneModel::new(z, theta, d).unwrap();
        let sum = model.pairwise_error(n1, n2) + model.pairwise_error(n2, n1);
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dissipation_scales_amplitude(z in 0.01..5.0, theta in 0.0..TAU, d in 0.0..=1.0) {
        let damped = HomodyneModel::new(z, theta, d).unwrap();
        let scaled = HomodyneModel::new(z * d, theta, 1.0).unwrap();
        prop_assert!((damped.pairwise_error(0, 1) - scaled.pairwise_error(0, 1)).abs() < 1e-14);
        prop_assert!((damped.gaussian_mean(2) - scaled.gaussian_mean(2)).abs() < 1e-12);
    }

    #[test]
    fn control_chain_order_is_irrelevant(bits in proptest::collection::vec(0u8..2, 0..10), r1 in 0u8..2, m in 1usize..4) {
        let start = build_chain_channel(m, r1).unwrap();
        let forward = controller_chain_apply(&start, &bits).unwrap();
        let mut reversed = bits.clone();
        reversed.reverse();
        let backward = controller_chain_apply(&start, &reversed).unwrap();
        prop_assert!(forward.state.max_amplitude_diff(&backward.state).unwrap() < 1e-15);
        let parity = bits.iter().fold(r1, |acc, b| acc ^ b);
        prop_assert_eq!(forward.measured_sign_bit(), Some(parity));
    }

    #[test]
    fn controlled_channels_stay_orthogonal(seed in any::<u64>(), u in 0.0..TAU, v in 0.0..TAU) {
        let psi = QubitState::random(&mut ChaCha8Rng::seed_from_u64(seed));
        let lump = LumpOperator::from_phases(u, v);
        let evolve = |variant| {
            BranchState::qubit("X", &psi)
                .tensor(&BranchState::channel(variant))
                .unwrap()
                .cross_kerr("X", 1, 1)
                .unwrap()
                .cross_kerr("A", 1, -1)
                .unwrap()
                .apply_operator("B", &lump.matrix())
                .unwrap()
                .apply_bbs("A")
                .unwrap()
                .apply_bbs("B")
                .unwrap()
        };
        let overlap = evolve(ChannelVariant::OmegaPlus).fidelity(&evolve(ChannelVariant::OmegaMinus)).unwrap();
        prop_assert!(overlap < 1e-24);
    }
}
