//! Seeded Monte Carlo over fully sampled protocol runs.
//!
//! Trial `i` draws from its own ChaCha stream `(seed, i)`, so results do
//! not depend on how trials are spread over threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    run_riho, run_ripuo, success_probabilities, ForcedOutcomes, ProtocolError, ProtocolKind, SuccessProbabilities,
    STEP1_LABELS, STEP4_LABELS,
};
use crate::homodyne::HomodyneModel;
use crate::operator::{LumpOperator, SingleQubitOperator};
use crate::state::{ChannelVariant, QubitState};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub protocol: ProtocolKind,
    pub channel: ChannelVariant,
    pub model: HomodyneModel,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub success: bool,
    pub fidelity: f64,
    pub m: u8,
    /// Misidentification flag per measurement, in protocol order.
    pub stage_errors: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub step: String,
    /// Trials reaching this stage with every earlier read-out correct.
    pub measured: u64,
    pub misidentified: u64,
    pub rate: f64,
    /// Exact nearest-mean error rate; `None` when outcome labels coincide.
    pub expected: Option<f64>,
    pub within_3sigma: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub protocol: ProtocolKind,
    pub channel: ChannelVariant,
    pub trials: u64,
    pub seed: u64,
    pub successes: u64,
    pub success_rate: f64,
    /// Product of the per-stage correct-classification probabilities.
    pub predicted_success: Option<f64>,
    pub success_within_3sigma: Option<bool>,
    /// Closed-form aggregate formulas, reported alongside for comparison.
    pub analytic: SuccessProbabilities,
    pub stages: Vec<StageStats>,
    pub m_zero: u64,
}

/// Independent stream for trial `index`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One run with Haar-random input, random operator phases and every
/// measurement sampled.
pub fn run_trial<R: Rng + ?Sized>(
    protocol: ProtocolKind,
    channel: ChannelVariant,
    model: &HomodyneModel,
    rng: &mut R,
) -> Result<TrialOutcome, ProtocolError> {
    let psi = QubitState::random(rng);
    let forced = ForcedOutcomes::default();
    let result = match protocol {
        ProtocolKind::Riho => {
            let lump = LumpOperator::from_phases(
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.0..std::f64::consts::TAU),
            );
            run_riho(&psi, &lump, channel, model, rng, &forced)?
        }
        ProtocolKind::Ripuo => {
            let m = rng.random_range(0..2u8);
            let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
            let sub = if m == 0 {
                SingleQubitOperator::diagonal(phase, phase.conj())
            } else {
                SingleQubitOperator::antidiagonal(phase, -phase.conj())
            };
            run_ripuo(&psi, &sub, m, channel, model, rng, &forced)?
        }
    };
    Ok(TrialOutcome {
        success: result.succeeded(),
        fidelity: result.achieved_fidelity,
        m: result.outcomes.m,
        stage_errors: result.measurements.iter().map(|s| s.record.misidentified).collect(),
    })
}

type Stage = (&'static str, &'static [i32], &'static [(i32, f64)]);

/// Stage names with the prior over outcome labels each stage sees when all
/// earlier read-outs were correct.
fn stage_plan(protocol: ProtocolKind) -> Vec<Stage> {
    const BINARY: &[(i32, f64)] = &[(0, 0.5), (1, 0.5)];
    const QUATERNARY: &[(i32, f64)] = &[(0, 0.25), (1, 0.25), (2, 0.25), (3, 0.25)];
    match protocol {
        ProtocolKind::Riho => vec![
            ("step1", &STEP1_LABELS, BINARY),
            ("step3", &STEP1_LABELS, BINARY),
            ("step4", &STEP4_LABELS, QUATERNARY),
        ],
        ProtocolKind::Ripuo => vec![("step1", &STEP1_LABELS, BINARY), ("step3", &STEP4_LABELS, QUATERNARY)],
    }
}

fn stage_error_rate(model: &HomodyneModel, labels: &[i32], prior: &[(i32, f64)]) -> Option<f64> {
    let support: Vec<i32> = prior.iter().map(|&(n, _)| n).collect();
    if !model.means_distinct(&support) {
        return None;
    }
    let correct: f64 = prior.iter().map(|&(n, w)| w * model.correct_classification_probability(n, labels)).sum();
    Some(1.0 - correct)
}

/// End-to-end success probability predicted from independent stages: a
/// run succeeds iff every read-out is classified correctly.
pub fn predicted_success(protocol: ProtocolKind, model: &HomodyneModel) -> Option<f64> {
    stage_plan(protocol)
        .iter()
        .map(|(_, labels, prior)| stage_error_rate(model, labels, prior).map(|e| 1.0 - e))
        .product()
}

fn within_3sigma(count: u64, n: u64, p: f64) -> bool {
    let n = n as f64;
    let sigma = (n * p * (1.0 - p)).sqrt();
    (count as f64 - n * p).abs() <= 3.0 * sigma + 1e-9
}

fn run_all(config: &McConfig) -> Result<Vec<TrialOutcome>, ProtocolError> {
    let one = |i: u64| {
        let mut rng = trial_rng(config.seed, i);
        run_trial(config.protocol, config.channel, &config.model, &mut rng)
    };
    #[cfg(feature = "parallel")]
    {
        (0..config.trials).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..config.trials).map(one).collect()
    }
}

pub fn monte_carlo(config: &McConfig) -> Result<McSummary, ProtocolError> {
    if config.trials == 0 {
        return Err(ProtocolError::InvalidConfig("trials must be at least 1".into()));
    }
    let outcomes = run_all(config)?;
    let plan = stage_plan(config.protocol);

    let mut stages: Vec<StageStats> = plan
        .iter()
        .map(|(step, labels, prior)| StageStats {
            step: step.to_string(),
            measured: 0,
            misidentified: 0,
            rate: 0.0,
            expected: stage_error_rate(&config.model, labels, prior),
            within_3sigma: None,
        })
        .collect();
    let (mut successes, mut m_zero) = (0u64, 0u64);
    for outcome in &outcomes {
        successes += outcome.success as u64;
        m_zero += (outcome.m == 0) as u64;
        for (stats, &err) in stages.iter_mut().zip(&outcome.stage_errors) {
            stats.measured += 1;
            stats.misidentified += err as u64;
            if err {
                break;
            }
        }
    }
    for s in &mut stages {
        if s.measured > 0 {
            s.rate = s.misidentified as f64 / s.measured as f64;
            s.within_3sigma = s.expected.map(|p| within_3sigma(s.misidentified, s.measured, p));
        }
    }

    let predicted = predicted_success(config.protocol, &config.model);
    Ok(McSummary {
        protocol: config.protocol,
        channel: config.channel,
        trials: config.trials,
        seed: config.seed,
        successes,
        success_rate: successes as f64 / config.trials as f64,
        predicted_success: predicted,
        success_within_3sigma: predicted.map(|p| within_3sigma(successes, config.trials, p)),
        analytic: success_probabilities(&config.model),
        stages,
        m_zero,
    })
}

/// Fraction of fully sampled runs that reach unit fidelity.
pub fn monte_carlo_success(
    protocol: ProtocolKind,
    channel: ChannelVariant,
    model: &HomodyneModel,
    trials: u64,
    seed: u64,
) -> Result<f64, ProtocolError> {
    let config = McConfig { protocol, channel, model: *model, trials, seed };
    Ok(monte_carlo(&config)?.success_rate)
}
