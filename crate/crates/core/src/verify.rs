//! Exhaustive self-checks: every correction-table branch of both protocols
//! on random inputs, plus operator, optics, error-function and multiparty
//! identities.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::homodyne::{erfc, HomodyneModel};
use crate::multiparty::{
    build_chain_channel, build_controlled_joint_channel, build_joint_channel, controller_chain_apply, ControllerForm,
};
use crate::operator::{classify_rotation, LumpOperator, RotationClass, SingleQubitOperator};
use crate::protocol::{riho_inner, ripuo_inner, CorrectionTable, ForcedOutcomes, ProtocolError, SUCCESS_FIDELITY};
use crate::state::{BranchState, ChannelVariant, QubitState};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub cases_per_branch: usize,
    pub seed: u64,
    /// Flip the final phase correction of every minus-sign channel, which
    /// must make the table checks fail.
    pub corrupt_table: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { cases_per_branch: 100, seed: 2024, corrupt_table: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub cases: usize,
    /// First few failure descriptions.
    pub failures: Vec<String>,
    pub failure_count: usize,
}

impl CheckResult {
    fn new(name: &str) -> Self {
        Self { name: name.into(), cases: 0, failures: Vec::new(), failure_count: 0 }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failure_count += 1;
            if self.failures.len() < 10 {
                self.failures.push(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }
}

pub fn run_verification(options: &VerifyOptions) -> Result<VerifyReport, ProtocolError> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    Ok(VerifyReport {
        checks: vec![
            riho_table(options, &mut rng)?,
            ripuo_table(options, &mut rng)?,
            operator_algebra(&mut rng),
            optics_round_trips(&mut rng)?,
            erfc_cross_check(),
            multiparty_reductions(&mut rng),
        ],
    })
}

fn table_for(channel: ChannelVariant, corrupt: bool) -> CorrectionTable {
    let mut table = CorrectionTable::for_channel(channel);
    if corrupt && channel.sign_bit() == 1 {
        table.final_phase_flip ^= 1;
    }
    table
}

fn check_model() -> HomodyneModel {
    HomodyneModel::new(2.0, 0.6, 1.0).expect("fixed model is valid")
}

fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(0.0..std::f64::consts::TAU)
}

/// Random unitary with the shape selected by `m`.
pub fn random_sub_operator<R: Rng + ?Sized>(m: u8, rng: &mut R) -> SingleQubitOperator {
    let a = C64::from_polar(1.0, random_phase(rng));
    let b = C64::from_polar(1.0, random_phase(rng));
    if m == 0 {
        SingleQubitOperator::diagonal(a, b)
    } else {
        SingleQubitOperator::antidiagonal(a, b)
    }
}

fn riho_table<R: Rng + ?Sized>(options: &VerifyOptions, rng: &mut R) -> Result<CheckResult, ProtocolError> {
    let model = check_model();
    let mut check = CheckResult::new("RIHO correction table");
    for channel in ChannelVariant::ALL {
        let table = table_for(channel, options.corrupt_table);
        for k in 0..2 {
            for m in 0..2 {
                for pq in 0..4u8 {
                    let forced = ForcedOutcomes::all(k, m, pq & 1, pq >> 1);
                    for _ in 0..options.cases_per_branch {
                        let psi = QubitState::random(rng);
                        let lump = LumpOperator::from_phases(random_phase(rng), random_phase(rng));
                        let r = riho_inner(&psi, &lump, channel, table, &model, rng, &forced, None)?;
                        check.record(r.achieved_fidelity >= SUCCESS_FIDELITY, || {
                            format!(
                                "{channel} k={k} m={m} pq={}{}: fidelity {:.6}",
                                pq & 1,
                                pq >> 1,
                                r.achieved_fidelity
                            )
                        });
                    }
                }
            }
        }
    }
    Ok(check)
}

fn ripuo_table<R: Rng + ?Sized>(options: &VerifyOptions, rng: &mut R) -> Result<CheckResult, ProtocolError> {
    let model = check_model();
    let mut check = CheckResult::new("RIPUO correction table");
    for channel in ChannelVariant::ALL {
        let table = table_for(channel, options.corrupt_table);
        for k in 0..2 {
            for m in 0..2 {
                for pq in 0..4u8 {
                    let forced = ForcedOutcomes { k: Some(k), m: None, pq: Some((pq & 1, pq >> 1)) };
                    for _ in 0..options.cases_per_branch {
                        let psi = QubitState::random(rng);
                        let sub = random_sub_operator(m, rng);
                        let r = ripuo_inner(&psi, &sub, m, channel, table, &model, rng, &forced, None)?;
                        check.record(r.achieved_fidelity >= SUCCESS_FIDELITY, || {
                            format!(
                                "{channel} k={k} m={m} pq={}{}: fidelity {:.6}",
                                pq & 1,
                                pq >> 1,
                                r.achieved_fidelity
                            )
                        });
                    }
                }
            }
        }
    }
    Ok(check)
}

fn operator_algebra<R: Rng + ?Sized>(rng: &mut R) -> CheckResult {
    let mut check = CheckResult::new("operator algebra");
    let z = SingleQubitOperator::phase_flip();
    let sqrt2 = C64::new(std::f64::consts::SQRT_2, 0.0);
    for _ in 0..1000 {
        let lump = LumpOperator::from_phases(random_phase(rng), random_phase(rng));
        let (u0, u1) = lump.decompose();
        let sum_ok = u0.add(&u1).max_abs_diff(&lump.matrix().scale(sqrt2)) < 1e-12;
        let commute_ok = (u0 * z).max_abs_diff(&(z * u0)) < 1e-12;
        let anti_ok = (u1 * z).max_abs_diff(&(z * u1).scale(C64::new(-1.0, 0.0))) < 1e-12;
        let unitary_ok = lump.matrix().is_unitary(1e-12) && u0.is_unitary(1e-12) && u1.is_unitary(1e-12);
        let classes_ok = matches!(classify_rotation(&u0), Ok(RotationClass::Diagonal))
            && matches!(classify_rotation(&u1), Ok(RotationClass::Antidiagonal));
        check.record(sum_ok && commute_ok && anti_ok && unitary_ok && classes_ok, || {
            format!("u = {}, v = {}", lump.u(), lump.v())
        });
    }
    check
}

/// Three-photon superposition with random amplitudes and probe labels.
pub fn random_branch_state<R: Rng + ?Sized>(rng: &mut R) -> BranchState {
    let mut state = BranchState::vacuum();
    for label in ["X", "A", "B"] {
        let q = QubitState::random(rng);
        state = state.tensor(&BranchState::qubit(label, &q)).expect("distinct labels");
    }
    for (label, shift) in [("X", 1), ("A", -2), ("B", 3)] {
        state = state.cross_kerr(label, rng.random_range(0..2u8), shift).expect("photon exists");
    }
    state
}

fn optics_round_trips<R: Rng + ?Sized>(rng: &mut R) -> Result<CheckResult, ProtocolError> {
    let mut check = CheckResult::new("beam splitter and Kerr round trips");
    for _ in 0..1000 {
        let state = random_branch_state(rng);
        let twice = state.apply_bbs("A")?.apply_bbs("A")?;
        let shift = rng.random_range(-3..=3);
        let path = rng.random_range(0..2u8);
        let undone = state.cross_kerr("B", path, shift)?.cross_kerr("B", path, -shift)?;
        let bbs_diff = twice.max_amplitude_diff(&state)?;
        let kerr_diff = undone.max_amplitude_diff(&state)?;
        let norm_ok = (state.apply_bbs("X")?.norm_sqr() - state.norm_sqr()).abs() < 1e-12;
        check.record(bbs_diff < 1e-12 && kerr_diff < 1e-15 && norm_ok, || {
            format!("bbs diff {bbs_diff:e}, kerr diff {kerr_diff:e}")
        });
    }
    Ok(check)
}

/// `∫ₐᵇ f` by adaptive Simpson quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tolerance: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tolerance, 50)
}

/// `erfc(x)` as a quadrature of the Gaussian tail.
pub fn erfc_by_quadrature(x: f64) -> f64 {
    let density = |t: f64| 2.0 / std::f64::consts::PI.sqrt() * (-t * t).exp();
    if x < 0.0 {
        2.0 - erfc_by_quadrature(-x)
    } else {
        integrate(&density, x, x + 12.0, 1e-15)
    }
}

fn erfc_cross_check() -> CheckResult {
    let mut check = CheckResult::new("erfc against quadrature");
    for i in 0..=120 {
        let x = -3.0 + 0.05 * i as f64;
        let (lib, quad) = (erfc(x), erfc_by_quadrature(x));
        let rel = ((lib - quad) / quad).abs();
        check.record(rel < 1e-9, || format!("x = {x}: {lib} vs {quad}"));
    }
    check
}

fn multiparty_reductions<R: Rng + ?Sized>(rng: &mut R) -> CheckResult {
    let mut check = CheckResult::new("multiparty reductions");
    let joint = build_joint_channel(1).map(|c| c.state);
    check.record(joint == Ok(BranchState::channel(ChannelVariant::OmegaPlus)), || {
        "M = 1 joint channel differs from the Bell pair".into()
    });
    let classical = build_controlled_joint_channel(1, 1, ControllerForm::Classical { r: 1 }).map(|c| c.state);
    check.record(classical == Ok(BranchState::channel(ChannelVariant::OmegaMinus)), || {
        "single classical controller with r = 1 differs from the minus channel".into()
    });
    for _ in 0..200 {
        let m = rng.random_range(1..5usize);
        let r1 = rng.random_range(0..2u8);
        let mut bits: Vec<u8> = (0..rng.random_range(0..6usize)).map(|_| rng.random_range(0..2u8)).collect();
        let Ok(start) = build_chain_channel(m, r1) else {
            check.record(false, || format!("chain channel for M = {m}"));
            continue;
        };
        let forward = controller_chain_apply(&start, &bits);
        bits.reverse();
        let backward = controller_chain_apply(&start, &bits);
        let parity = bits.iter().fold(r1, |acc, b| acc ^ b);
        let ok = match (forward, backward) {
            (Ok(f), Ok(b)) => {
                f.state.max_amplitude_diff(&b.state).is_ok_and(|d| d < 1e-15) && f.measured_sign_bit() == Some(parity)
            }
            _ => false,
        };
        check.record(ok, || format!("chain M = {m}, r1 = {r1}, bits {bits:?}"));
    }
    check
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_matches_known_value() {
        let half = 0.5 * erfc_by_quadrature(std::f64::consts::SQRT_2);
        assert!((half - 0.022750131948179).abs() < 1e-13);
    }

    #[test]
    fn clean_run_passes() {
        let report = run_verification(&VerifyOptions { cases_per_branch: 3, ..Default::default() }).unwrap();
        for check in &report.checks {
            assert!(check.passed(), "{}: {:?}", check.name, check.failures);
        }
    }

    #[test]
    fn corrupted_table_is_caught() {
        let options = VerifyOptions { cases_per_branch: 3, corrupt_table: true, ..Default::default() };
        let report = run_verification(&options).unwrap();
        assert!(!report.passed());
        assert!(!report.checks[0].passed());
        assert!(!report.checks[1].passed());
        assert!(report.checks[2..].iter().all(CheckResult::passed));
    }
}
