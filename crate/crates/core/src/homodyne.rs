//! X-quadrature homodyne detection of the coherent probe.
//!
//! A probe in `|Dz·e^{inθ}⟩` yields a unit-variance Gaussian outcome
//! centred at `2Dz·cos(nθ)`. Outcomes are classified to the nearest mean;
//! labels sharing a mean cannot be told apart and collapse together.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operator::SingleQubitOperator;
use crate::state::{BranchState, StateError};

/// Means closer than this (relative to the probe scale) are one component.
const MEAN_TOLERANCE: f64 = 1e-12;

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomodyneError {
    #[error("probe amplitude must be positive and finite (got {0})")]
    InvalidAmplitude(f64),
    #[error("Kerr phase must be finite (got {0})")]
    InvalidPhase(f64),
    #[error("dissipation factor must lie in [0, 1] (got {0})")]
    InvalidDissipation(f64),
    #[error("no probe component to measure")]
    NoProbe,
    #[error("forced outcome {0} has zero probability in this state")]
    ImpossibleOutcome(i32),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Probe amplitude `z`, Kerr phase `θ` and dissipation factor `D = e^{-γt}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneModel {
    z: f64,
    theta: f64,
    dissipation: f64,
}

impl HomodyneModel {
    pub fn new(z: f64, theta: f64, dissipation: f64) -> Result<Self, HomodyneError> {
        if !(z.is_finite() && z > 0.0) {
            return Err(HomodyneError::InvalidAmplitude(z));
        }
        if !theta.is_finite() {
            return Err(HomodyneError::InvalidPhase(theta));
        }
        if !(0.0..=1.0).contains(&dissipation) {
            return Err(HomodyneError::InvalidDissipation(dissipation));
        }
        Ok(Self { z, theta, dissipation })
    }

    /// Builds the model from a damping rate and interaction time.
    pub fn from_decay(z: f64, theta: f64, gamma: f64, t: f64) -> Result<Self, HomodyneError> {
        Self::new(z, theta, (-gamma * t).exp())
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dissipation(&self) -> f64 {
        self.dissipation
    }

    pub fn with_dissipation(&self, dissipation: f64) -> Result<Self, HomodyneError> {
        Self::new(self.z, self.theta, dissipation)
    }

    /// Effective probe amplitude `Dz` after damping.
    pub fn effective_amplitude(&self) -> f64 {
        self.dissipation * self.z
    }

    /// Centre of the outcome distribution for probe label `n`.
    pub fn gaussian_mean(&self, n: i32) -> f64 {
        2.0 * self.effective_amplitude() * (n as f64 * self.theta).cos()
    }

    /// Unit-variance outcome density for label `n`.
    pub fn density(&self, n: i32, x: f64) -> f64 {
        let d = x - self.gaussian_mean(n);
        (-0.5 * d * d).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    /// Phase picked up by a branch with label `n` when the outcome is `x`:
    /// `(x − 2Dz·cos nθ)·Dz·sin nθ`.
    pub fn residual_phase(&self, n: i32, x: f64) -> f64 {
        let amp = self.effective_amplitude();
        (x - self.gaussian_mean(n)) * amp * (n as f64 * self.theta).sin()
    }

    /// `φ(x)` for the `±θ` pair.
    pub fn feed_forward_phase(&self, x: f64) -> f64 {
        self.residual_phase(1, x)
    }

    /// Decision threshold between two labels.
    pub fn midpoint(&self, n1: i32, n2: i32) -> f64 {
        0.5 * (self.gaussian_mean(n1) + self.gaussian_mean(n2))
    }

    /// `½·erfc(Dz(cos n1θ − cos n2θ)/√2)`: probability that an outcome of
    /// label `n1` lands on the `n2` side of their midpoint, taking `n1` to
    /// have the larger mean. Swapping the labels gives `1 − P`.
    pub fn pairwise_error(&self, n1: i32, n2: i32) -> f64 {
        let (c1, c2) = ((n1 as f64 * self.theta).cos(), (n2 as f64 * self.theta).cos());
        0.5 * erfc(self.effective_amplitude() * (c1 - c2) / std::f64::consts::SQRT_2)
    }

    /// Adjacent-label errors `(P(0,1), P(1,2), P(2,3))` of the four-outcome
    /// measurement.
    pub fn step4_error_triple(&self) -> (f64, f64, f64) {
        (self.pairwise_error(0, 1), self.pairwise_error(1, 2), self.pairwise_error(2, 3))
    }

    /// True when the peaks are too close (`Dzθ² ≤ 1`) or the four-outcome
    /// means are not strictly decreasing in `n`.
    pub fn distinguishability_warning(&self) -> bool {
        let weak = self.effective_amplitude() * self.theta * self.theta <= 1.0;
        let means: Vec<f64> = (0..4).map(|n| self.gaussian_mean(n)).collect();
        let ordered = means.windows(2).all(|w| w[0] > w[1]);
        weak || !ordered
    }

    fn same_component(&self, n1: i32, n2: i32) -> bool {
        let scale = 1.0 + 2.0 * self.effective_amplitude();
        (self.gaussian_mean(n1) - self.gaussian_mean(n2)).abs() <= MEAN_TOLERANCE * scale
    }

    /// Representative of `label`'s component among `labels`: the member
    /// with the smallest `|n|`, then the smallest `n`.
    pub fn canonical_label(&self, label: i32, labels: &[i32]) -> i32 {
        labels
            .iter()
            .copied()
            .chain(std::iter::once(label))
            .filter(|&n| self.same_component(n, label))
            .min_by_key(|&n| (n.abs(), n))
            .unwrap_or(label)
    }

    /// True when no two of `labels` share a Gaussian mean.
    pub fn means_distinct(&self, labels: &[i32]) -> bool {
        labels.iter().enumerate().all(|(i, &a)| labels[i + 1..].iter().all(|&b| !self.same_component(a, b)))
    }

    /// Probability that an outcome of label `n` is classified into its own
    /// component when the hypotheses are `labels`.
    pub fn correct_classification_probability(&self, n: i32, labels: &[i32]) -> f64 {
        let own = self.gaussian_mean(n);
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        for &other in labels {
            if self.same_component(other, n) {
                continue;
            }
            let boundary = 0.5 * (own + self.gaussian_mean(other));
            if self.gaussian_mean(other) > own {
                upper = upper.min(boundary);
            } else {
                lower = lower.max(boundary);
            }
        }
        let tail_above = |t: f64| 0.5 * erfc((t - own) / std::f64::consts::SQRT_2);
        tail_above(lower) - tail_above(upper)
    }

    /// Nearest-mean classification with ties broken by `|n|`, then `n`.
    pub fn classify(&self, x: f64, labels: &[i32]) -> Option<i32> {
        let best = labels.iter().copied().min_by(|&a, &b| {
            let da = (x - self.gaussian_mean(a)).abs();
            let db = (x - self.gaussian_mean(b)).abs();
            da.total_cmp(&db).then((a.abs(), a).cmp(&(b.abs(), b)))
        })?;
        Some(self.canonical_label(best, labels))
    }
}

/// Phase left on one surviving branch after the probe is measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualPhase {
    pub paths: u64,
    pub label: i32,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub sampled_x: f64,
    pub classified_label: i32,
    pub true_label: i32,
    pub misidentified: bool,
    /// `φ(x)` of the `±θ` pair at the sampled outcome.
    pub feed_forward_phase: f64,
    pub forced: bool,
    pub residual_phases: Vec<ResidualPhase>,
}

fn hypotheses(state: &BranchState, labels: &[i32]) -> Vec<i32> {
    let mut all: Vec<i32> = labels.to_vec();
    all.extend(state.probe_weights().keys().copied());
    all.sort_unstable();
    all.dedup();
    all
}

fn collapse(
    state: &BranchState,
    model: &HomodyneModel,
    labels: &[i32],
    true_label: i32,
    x: f64,
    classified: i32,
    forced: bool,
) -> Result<(MeasurementRecord, BranchState), HomodyneError> {
    let kept = state
        .project(|b| model.same_component(b.probe, true_label))
        .ok_or(HomodyneError::ImpossibleOutcome(true_label))?;
    let residual_phases: Vec<ResidualPhase> = kept
        .branches()
        .iter()
        .map(|b| ResidualPhase { paths: b.paths, label: b.probe, phase: model.residual_phase(b.probe, x) })
        .collect();
    let phased = kept.with_branch_phases(|b| model.residual_phase(b.probe, x));
    let true_label = model.canonical_label(true_label, labels);
    let record = MeasurementRecord {
        sampled_x: x,
        classified_label: classified,
        true_label,
        misidentified: classified != true_label,
        feed_forward_phase: model.feed_forward_phase(x),
        forced,
        residual_phases,
    };
    Ok((record, phased.reset_probe()))
}

/// Measures the probe, classifying against the labels present in `state`.
pub fn sample_homodyne<R: Rng + ?Sized>(
    state: &BranchState,
    model: &HomodyneModel,
    rng: &mut R,
) -> Result<(MeasurementRecord, BranchState), HomodyneError> {
    sample_homodyne_among(state, model, &[], rng)
}

/// Measures the probe, classifying against `labels` plus every label
/// present in `state`.
///
/// The true component is drawn from the branch weights and the outcome
/// `x` from its Gaussian. The state keeps the true component; the record
/// carries the (possibly wrong) classification.
pub fn sample_homodyne_among<R: Rng + ?Sized>(
    state: &BranchState,
    model: &HomodyneModel,
    labels: &[i32],
    rng: &mut R,
) -> Result<(MeasurementRecord, BranchState), HomodyneError> {
    let weights = state.probe_weights();
    let total: f64 = weights.values().sum();
    if weights.is_empty() || total <= 0.0 {
        return Err(HomodyneError::NoProbe);
    }
    let all = hypotheses(state, labels);
    let mut draw = rng.random::<f64>() * total;
    let mut true_label = *weights.keys().next_back().ok_or(HomodyneError::NoProbe)?;
    for (&n, &w) in &weights {
        if draw < w {
            true_label = n;
            break;
        }
        draw -= w;
    }
    let noise: f64 = rng.sample(StandardNormal);
    let x = model.gaussian_mean(true_label) + noise;
    let classified = model.classify(x, &all).ok_or(HomodyneError::NoProbe)?;
    collapse(state, model, &all, true_label, x, classified, false)
}

/// Measurement with a prescribed outcome: `x` is set to the mean of
/// `outcome`, so classification is always correct.
pub fn forced_homodyne(
    state: &BranchState,
    model: &HomodyneModel,
    labels: &[i32],
    outcome: i32,
) -> Result<(MeasurementRecord, BranchState), HomodyneError> {
    let all = hypotheses(state, labels);
    let x = model.gaussian_mean(outcome);
    let classified = model.canonical_label(outcome, &all);
    collapse(state, model, &all, outcome, x, classified, true)
}

/// Removes the measurement phases the classified outcome accounts for,
/// then applies `corrections` in order.
///
/// Phases of branches whose label is outside the classified component are
/// left in place: after a misidentification the parties cannot know them.
pub fn apply_feed_forward(
    state: &BranchState,
    model: &HomodyneModel,
    record: &MeasurementRecord,
    corrections: &[(&str, SingleQubitOperator)],
) -> Result<BranchState, StateError> {
    let mut out = state.with_branch_phases(|b| {
        record
            .residual_phases
            .iter()
            .find(|r| r.paths == b.paths && model.same_component(r.label, record.classified_label))
            .map_or(0.0, |r| -r.phase)
    });
    for (photon, op) in corrections {
        out = out.apply_operator(photon, op)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::ChannelVariant;
    use crate::C64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    /// Adaptive Simpson integration, independent of `erfc`.
    fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (left, right) = (simpson(f, a, m), simpson(f, m, b));
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            recurse(f, a, m, left, tol / 2.0, depth - 1) + recurse(f, m, b, right, tol / 2.0, depth - 1)
        }
        recurse(f, a, b, simpson(f, a, b), tol, 50)
    }

    /// Mass of a unit Gaussian at `mean` below `threshold`.
    fn lower_tail(mean: f64, threshold: f64) -> f64 {
        let pdf = |x: f64| (-0.5 * (x - mean) * (x - mean)).exp() / (2.0 * PI).sqrt();
        integrate(&pdf, mean - 40.0, threshold, 1e-15)
    }

    fn model(z: f64, theta: f64, d: f64) -> HomodyneModel {
        HomodyneModel::new(z, theta, d).unwrap()
    }

    #[test]
    fn gaussian_means() {
        assert!((model(1.0, PI, 1.0).gaussian_mean(0) - 2.0).abs() < 1e-15);
        assert!((model(1.0, PI, 1.0).gaussian_mean(1) + 2.0).abs() < 1e-15);
        assert!(model(1.0, FRAC_PI_2, 0.5).gaussian_mean(1).abs() < 1e-15);
    }

    #[test]
    fn model_validation() {
        assert!(HomodyneModel::new(0.0, 1.0, 1.0).is_err());
        assert!(HomodyneModel::new(1.0, f64::NAN, 1.0).is_err());
        assert!(HomodyneModel::new(1.0, 1.0, 1.5).is_err());
        let m = HomodyneModel::from_decay(1.0, 1.0, 0.5, 2.0).unwrap();
        assert!((m.dissipation() - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn pairwise_error_against_integration_oracle() {
        // two unit Gaussians at ±2, threshold 0
        let oracle = lower_tail(2.0, 0.0);
        let value = model(1.0, PI, 1.0).pairwise_error(0, 1);
        assert!((value - oracle).abs() < 1e-12, "{value} vs {oracle}");
        assert!((value - 0.022_750_131_948_179).abs() < 1e-12);

        for &(z, theta, d) in &[(1.0, FRAC_PI_4, 1.0), (3.0, 0.4, 0.7), (0.5, 2.0, 0.3)] {
            let m = model(z, theta, d);
            for (n1, n2) in [(0, 1), (1, 2), (2, 3)] {
                let (hi, lo) = (m.gaussian_mean(n1), m.gaussian_mean(n2));
                let oracle = lower_tail(hi, 0.5 * (hi + lo));
                assert!((m.pairwise_error(n1, n2) - oracle).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pairwise_error_limits() {
        assert_eq!(model(3.7, 0.0, 1.0).pairwise_error(0, 1), 0.5);
        assert!(model(1e6, FRAC_PI_2, 1.0).pairwise_error(0, 1) < 1e-300);
    }

    #[test]
    fn step4_triple_at_pi() {
        let (p1, p2, p3) = model(1.0, PI, 1.0).step4_error_triple();
        let tail = lower_tail(2.0, 0.0);
        assert!((p1 - tail).abs() < 1e-12);
        assert!((p2 - (1.0 - tail)).abs() < 1e-12);
        assert!((p3 - tail).abs() < 1e-12);

        let (a, b, c) = model(2.0, 0.0, 1.0).step4_error_triple();
        assert_eq!((a, b, c), (0.5, 0.5, 0.5));

        let (a, b, c) = model(1.0, FRAC_PI_4, 1.0).step4_error_triple();
        for p in [a, b, c] {
            assert!(p > 0.0 && p < 0.5);
        }
    }

    #[test]
    fn correct_classification_against_oracle() {
        let m = model(1.0, FRAC_PI_4, 1.0);
        let labels = [0, 1, 2, 3];
        for n in labels {
            let mu = m.gaussian_mean(n);
            let pdf = |x: f64| (-0.5 * (x - mu) * (x - mu)).exp() / (2.0 * PI).sqrt();
            let upper = if n == 0 { mu + 40.0 } else { m.midpoint(n - 1, n) };
            let lower = if n == 3 { mu - 40.0 } else { m.midpoint(n, n + 1) };
            let oracle = integrate(&pdf, lower, upper, 1e-15);
            let value = m.correct_classification_probability(n, &labels);
            assert!((value - oracle).abs() < 1e-11, "label {n}: {value} vs {oracle}");
        }
        assert!(m.means_distinct(&labels));
        assert!(!model(1.0, PI, 1.0).means_distinct(&labels));
    }

    #[test]
    fn warnings() {
        assert!(model(1.0, PI, 1.0).distinguishability_warning());
        assert!(!model(100.0, 0.3, 1.0).distinguishability_warning());
        assert!(model(1.0, 0.01, 1.0).distinguishability_warning());
    }

    #[test]
    fn midpoint_matches_threshold() {
        let m = model(2.5, 0.9, 0.8);
        let expected = m.effective_amplitude() * (1.0 + 0.9f64.cos());
        assert!((m.midpoint(0, 1) - expected).abs() < 1e-14);
    }

    #[test]
    fn classification_ties() {
        // θ = π: labels 0 and 2 share a mean, as do 1 and 3
        let m = model(1.0, PI, 1.0);
        let labels = [0, 1, 2, 3];
        assert_eq!(m.classify(2.0, &labels), Some(0));
        assert_eq!(m.classify(-2.0, &labels), Some(1));
        assert_eq!(m.canonical_label(2, &labels), 0);
        // ±1 are indistinguishable
        let m = model(1.0, 0.7, 1.0);
        assert_eq!(m.classify(m.gaussian_mean(-1), &[-1, 0, 1]), Some(-1));
        assert_eq!(m.canonical_label(1, &[-1, 0, 1]), -1);
    }

    fn eq7_state(alpha: f64, beta: f64) -> BranchState {
        BranchState::input(C64::new(alpha, 0.0), C64::new(beta, 0.0))
            .unwrap()
            .tensor(&BranchState::channel(ChannelVariant::OmegaPlus))
            .unwrap()
            .cross_kerr("X", 0, 1)
            .unwrap()
            .cross_kerr("A", 0, -1)
            .unwrap()
    }

    #[test]
    fn pure_component_never_misidentified() {
        let state = BranchState::basis("X", 0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (record, _) = sample_homodyne_among(&state, &model(0.3, 0.2, 1.0), &[0], &mut rng).unwrap();
            assert_eq!(record.classified_label, 0);
            assert!(!record.misidentified);
        }
    }

    #[test]
    fn collapse_to_upper_component() {
        let m = model(4.0, 1.1, 1.0);
        let (record, after) = forced_homodyne(&eq7_state(0.6, 0.8), &m, &[-1, 0, 1], 0).unwrap();
        assert_eq!(record.classified_label, 0);
        let expected = BranchState::input(C64::new(0.6, 0.0), C64::new(0.8, 0.0))
            .unwrap()
            .tensor(&BranchState::channel(ChannelVariant::OmegaPlus))
            .unwrap()
            .project(|b| b.paths == 0 || b.paths == 0b111)
            .unwrap();
        assert!(after.max_amplitude_diff(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn lower_component_carries_opposite_phases() {
        let m = model(4.0, 1.1, 1.0);
        let state = eq7_state(0.6, 0.8);
        let (record, after) = forced_homodyne(&state, &m, &[-1, 0, 1], 1).unwrap();
        assert_eq!(record.classified_label, -1);
        // force a non-central outcome so φ(x) ≠ 0
        let x = m.gaussian_mean(1) + 0.37;
        let (record, after_x) = collapse(&state, &m, &[-1, 0, 1], 1, x, -1, false).unwrap();
        let phi = m.feed_forward_phase(x);
        assert!(phi.abs() > 0.1);
        let x0a1b1 = after_x.branches().iter().find(|b| b.paths == 0b110).unwrap();
        let x1a0b0 = after_x.branches().iter().find(|b| b.paths == 0b001).unwrap();
        assert!((x0a1b1.amplitude - C64::from_polar(0.6, phi)).norm() < 1e-14);
        assert!((x1a0b0.amplitude - C64::from_polar(0.8, -phi)).norm() < 1e-14);
        assert_eq!(after.branches().len(), 2);

        // feed-forward restores the Eq. (11) form
        let flips = [("A", SingleQubitOperator::path_flip()), ("B", SingleQubitOperator::path_flip())];
        let fixed = apply_feed_forward(&after_x, &m, &record, &flips).unwrap();
        let expected = BranchState::input(C64::new(0.6, 0.0), C64::new(0.8, 0.0))
            .unwrap()
            .tensor(&BranchState::channel(ChannelVariant::OmegaPlus))
            .unwrap()
            .project(|b| b.paths == 0 || b.paths == 0b111)
            .unwrap();
        assert!(fixed.max_amplitude_diff(&expected).unwrap() < 1e-14);
    }

    #[test]
    fn feed_forward_identity_for_upper_outcome() {
        let m = model(4.0, 1.1, 1.0);
        let (record, after) = forced_homodyne(&eq7_state(0.6, 0.8), &m, &[-1, 0, 1], 0).unwrap();
        let fixed = apply_feed_forward(&after, &m, &record, &[]).unwrap();
        assert_eq!(fixed, after);
    }

    #[test]
    fn phase_vanishes_at_pi() {
        let m = model(1.3, PI, 1.0);
        for x in [-3.0, 0.0, 0.4, 2.5] {
            assert!(m.feed_forward_phase(x).abs() < 1e-15);
        }
    }

    #[test]
    fn no_probe_error() {
        let empty = BranchState::basis("X", 0).project(|_| false);
        assert!(empty.is_none());
        let forced = forced_homodyne(&BranchState::basis("X", 0), &model(1.0, 1.0, 1.0), &[0, 1], 1);
        assert_eq!(forced.unwrap_err(), HomodyneError::ImpossibleOutcome(1));
    }
}
