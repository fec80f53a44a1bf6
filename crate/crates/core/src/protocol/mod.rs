//! End-to-end remote operator implementation over a shared path Bell pair.
//!
//! * `RIHO`: Bob holds only the lump operator `U_B`; Alice ends with
//!   `U_0|ψ⟩` or `U_1|ψ⟩`, the outcome bit `m` telling which.
//! * `RIPUO`: Bob applies a sub-operator of known shape (`m` is his choice).
//!
//! Photon `X` carries Alice's input, `A`/`B` the channel halves. Every
//! homodyne measurement can be forced to a chosen outcome, which makes all
//! correction-table branches reachable deterministically.

mod analytic;
mod corrections;
mod montecarlo;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::homodyne::{
    apply_feed_forward, forced_homodyne, sample_homodyne_among, HomodyneError, HomodyneModel, MeasurementRecord,
};
use crate::operator::{classify_rotation, LumpOperator, OperatorError, RotationClass, SingleQubitOperator};
use crate::state::{BranchState, ChannelVariant, QubitState, StateError};

pub use analytic::{success_probabilities, ErrorComponents, SuccessProbabilities};
pub use corrections::CorrectionTable;
pub use montecarlo::{
    monte_carlo, monte_carlo_success, predicted_success, run_trial, trial_rng, McConfig, McSummary, StageStats,
    TrialOutcome,
};

/// Fidelity above which a run counts as a success.
pub const SUCCESS_FIDELITY: f64 = 1.0 - 1e-9;

pub(crate) const STEP1_LABELS: [i32; 3] = [-1, 0, 1];
pub(crate) const STEP4_LABELS: [i32; 4] = [0, 1, 2, 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Homodyne(#[from] HomodyneError),
    #[error("operator shape {found:?} does not match choice m = {m}")]
    ShapeMismatch { m: u8, found: RotationClass },
    #[error("invalid forced outcome: {0}")]
    BadForcedOutcome(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Riho,
    Ripuo,
}

impl FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "riho" => Ok(Self::Riho),
            "ripuo" => Ok(Self::Ripuo),
            other => Err(format!("unknown protocol {other:?}; expected riho or ripuo")),
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Riho => "riho",
            Self::Ripuo => "ripuo",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
    Charlie,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Alice => "alice",
            Self::Bob => "bob",
            Self::Charlie => "charlie",
        })
    }
}

/// Outcomes to impose instead of sampling. `pq` is `(p, q)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForcedOutcomes {
    pub k: Option<u8>,
    pub m: Option<u8>,
    pub pq: Option<(u8, u8)>,
}

impl ForcedOutcomes {
    pub fn all(k: u8, m: u8, p: u8, q: u8) -> Self {
        Self { k: Some(k), m: Some(m), pq: Some((p, q)) }
    }
}

impl FromStr for ForcedOutcomes {
    type Err = ProtocolError;

    /// Parses `k=0,m=1,pq=01`; any subset of keys may be given.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: String| ProtocolError::BadForcedOutcome(msg);
        let bit = |v: &str| match v {
            "0" => Ok(0u8),
            "1" => Ok(1u8),
            _ => Err(bad(format!("{v:?} is not a bit"))),
        };
        let mut out = Self::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| bad(format!("expected key=value, got {part:?}")))?;
            match key.trim() {
                "k" => out.k = Some(bit(value.trim())?),
                "m" => out.m = Some(bit(value.trim())?),
                "pq" => {
                    let v = value.trim();
                    if v.len() != 2 {
                        return Err(bad(format!("pq must be two bits, got {v:?}")));
                    }
                    out.pq = Some((bit(&v[..1])?, bit(&v[1..])?));
                }
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcomes {
    pub k: u8,
    pub m: u8,
    pub p: u8,
    pub q: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalMessage {
    pub seq: usize,
    pub step: String,
    pub sender: Party,
    pub receiver: Party,
    /// Name of the value carried, e.g. `"k"` or `"pq"`.
    pub label: String,
    pub bits: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedCorrection {
    pub seq: usize,
    pub step: String,
    pub party: Party,
    pub photon: String,
    pub operator: String,
    /// Label of the classical value this correction depends on.
    pub condition: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: String,
    pub actor: Party,
    pub action: String,
    pub outcome_bits: Vec<u8>,
    pub state_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMeasurement {
    pub step: String,
    pub record: MeasurementRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub protocol: ProtocolKind,
    pub channel: ChannelVariant,
    pub final_state: BranchState,
    pub outcomes: Outcomes,
    pub corrections_applied: Vec<AppliedCorrection>,
    pub classical_log: Vec<ClassicalMessage>,
    pub measurements: Vec<StageMeasurement>,
    pub trace: Vec<TraceRecord>,
    /// Fidelity against `|a_p b_q⟩ ⊗ U_m|ψ⟩` for the announced outcomes.
    pub achieved_fidelity: f64,
    pub target_suboperator: u8,
}

impl ProtocolResult {
    pub fn succeeded(&self) -> bool {
        self.achieved_fidelity >= SUCCESS_FIDELITY
    }

    pub fn any_misidentified(&self) -> bool {
        self.measurements.iter().any(|m| m.record.misidentified)
    }
}

/// Mutable bookkeeping for one protocol execution.
struct Run<'a> {
    model: &'a HomodyneModel,
    table: CorrectionTable,
    state: BranchState,
    seq: usize,
    log: Vec<ClassicalMessage>,
    corrections: Vec<AppliedCorrection>,
    trace: Vec<TraceRecord>,
    measurements: Vec<StageMeasurement>,
}

impl<'a> Run<'a> {
    fn new(model: &'a HomodyneModel, table: CorrectionTable, state: BranchState) -> Self {
        Self {
            model,
            table,
            state,
            seq: 0,
            log: Vec::new(),
            corrections: Vec::new(),
            trace: Vec::new(),
            measurements: Vec::new(),
        }
    }

    fn next_seq(&mut self) -> usize {
        self.seq += 1;
        self.seq
    }

    fn note(&mut self, step: &str, actor: Party, action: String, bits: Vec<u8>) {
        self.trace.push(TraceRecord {
            step: step.to_string(),
            actor,
            action,
            outcome_bits: bits,
            state_digest: self.state.digest(),
        });
    }

    fn send(&mut self, step: &str, sender: Party, receiver: Party, label: &str, bits: Vec<u8>) {
        let seq = self.next_seq();
        self.log.push(ClassicalMessage {
            seq,
            step: step.to_string(),
            sender,
            receiver,
            label: label.to_string(),
            bits: bits.clone(),
        });
        self.note(step, sender, format!("send {label} to {receiver}"), bits);
    }

    fn kerr(&mut self, step: &str, actor: Party, photon: &str, path: u8, shift: i32) -> Result<(), ProtocolError> {
        self.state = self.state.cross_kerr(photon, path, shift)?;
        self.note(step, actor, format!("cross-kerr {}{} shift {shift:+}θ", photon.to_lowercase(), path), vec![]);
        Ok(())
    }

    fn operate(
        &mut self,
        step: &str,
        party: Party,
        photon: &str,
        name: &str,
        op: &SingleQubitOperator,
        condition: Option<&str>,
    ) -> Result<(), ProtocolError> {
        self.state = self.state.apply_operator(photon, op)?;
        let seq = self.next_seq();
        self.corrections.push(AppliedCorrection {
            seq,
            step: step.to_string(),
            party,
            photon: photon.to_string(),
            operator: name.to_string(),
            condition: condition.map(str::to_string),
        });
        self.note(step, party, format!("apply {name} on {photon}"), vec![]);
        Ok(())
    }

    fn measure<R: Rng + ?Sized>(
        &mut self,
        step: &str,
        actor: Party,
        labels: &[i32],
        forced: Option<i32>,
        rng: &mut R,
    ) -> Result<MeasurementRecord, ProtocolError> {
        let (record, state) = match forced {
            Some(label) => forced_homodyne(&self.state, self.model, labels, label)?,
            None => sample_homodyne_among(&self.state, self.model, labels, rng)?,
        };
        self.state = state;
        self.measurements.push(StageMeasurement { step: step.to_string(), record: record.clone() });
        self.note(step, actor, format!("homodyne x = {:.6}", record.sampled_x), vec![]);
        Ok(record)
    }

    /// Removes the phases the classified outcome accounts for.
    fn feed_forward(&mut self, step: &str, actor: Party, record: &MeasurementRecord) -> Result<(), ProtocolError> {
        if record.residual_phases.iter().any(|r| r.phase != 0.0) {
            self.state = apply_feed_forward(&self.state, self.model, record, &[])?;
            self.note(step, actor, "feed-forward phase removal".to_string(), vec![]);
        }
        Ok(())
    }

    /// Binary outcome of a `{0, ±1}` measurement: 0 iff classified with label 0.
    fn binary_outcome(&self, record: &MeasurementRecord) -> u8 {
        (self.model.canonical_label(record.classified_label, &STEP1_LABELS)
            != self.model.canonical_label(0, &STEP1_LABELS)) as u8
    }

    /// Step 1: entangle X with the channel through the probe.
    fn step1<R: Rng + ?Sized>(&mut self, forced_k: Option<u8>, rng: &mut R) -> Result<u8, ProtocolError> {
        const STEP: &str = "step1";
        self.kerr(STEP, Party::Alice, "X", 0, 1)?;
        self.kerr(STEP, Party::Alice, "A", 0, -1)?;
        let record = self.measure(STEP, Party::Alice, &STEP1_LABELS, forced_k.map(i32::from), rng)?;
        let k = self.binary_outcome(&record);
        self.send(STEP, Party::Alice, Party::Bob, "k", vec![k]);
        if k == 1 {
            self.feed_forward(STEP, Party::Alice, &record)?;
            self.operate(STEP, Party::Alice, "A", "X_S", &SingleQubitOperator::path_flip(), Some("k"))?;
        }
        if k ^ self.table.step1_bob_flip == 1 {
            self.operate(STEP, Party::Bob, "B", "X_S", &SingleQubitOperator::path_flip(), Some("k"))?;
        }
        Ok(k)
    }

    /// Kerr on `a_0` (+θ) and `b_0` (−θ), then Bob reads `m`.
    fn hidden_outcome_step<R: Rng + ?Sized>(&mut self, forced_m: Option<u8>, rng: &mut R) -> Result<u8, ProtocolError> {
        const STEP: &str = "step3";
        self.kerr(STEP, Party::Alice, "A", 0, 1)?;
        self.kerr(STEP, Party::Bob, "B", 0, -1)?;
        let record = self.measure(STEP, Party::Bob, &STEP1_LABELS, forced_m.map(i32::from), rng)?;
        let m = self.binary_outcome(&record);
        self.send(STEP, Party::Bob, Party::Alice, "m", vec![m]);
        if m == 1 {
            self.feed_forward(STEP, Party::Bob, &record)?;
            self.operate(STEP, Party::Alice, "X", "X_S", &SingleQubitOperator::path_flip(), Some("m"))?;
        }
        Ok(m)
    }

    /// Beam splitters on A and B, Kerr on `a_1` (+θ) and `b_1` (+2θ), and a
    /// four-outcome read-out with label `p + 2q`.
    fn final_measurement<R: Rng + ?Sized>(
        &mut self,
        step: &str,
        forced_pq: Option<(u8, u8)>,
        rng: &mut R,
    ) -> Result<(u8, u8), ProtocolError> {
        self.state = self.state.apply_bbs("A")?;
        self.note(step, Party::Alice, "beam splitter on A".into(), vec![]);
        self.state = self.state.apply_bbs("B")?;
        self.note(step, Party::Bob, "beam splitter on B".into(), vec![]);
        self.kerr(step, Party::Alice, "A", 1, 1)?;
        self.kerr(step, Party::Bob, "B", 1, 2)?;
        let forced = forced_pq.map(|(p, q)| i32::from(p) + 2 * i32::from(q));
        let record = self.measure(step, Party::Bob, &STEP4_LABELS, forced, rng)?;
        let label = record.classified_label.clamp(0, 3);
        let (p, q) = ((label & 1) as u8, ((label >> 1) & 1) as u8);
        self.send(step, Party::Bob, Party::Alice, "pq", vec![p, q]);
        self.feed_forward(step, Party::Bob, &record)?;
        Ok((p, q))
    }

    fn final_phase_flip(&mut self, step: &str, p: u8, q: u8) -> Result<(), ProtocolError> {
        if p ^ q ^ self.table.final_phase_flip == 1 {
            self.operate(step, Party::Alice, "X", "Z_S", &SingleQubitOperator::phase_flip(), Some("pq"))?;
        }
        Ok(())
    }

    fn finish(
        self,
        protocol: ProtocolKind,
        channel: ChannelVariant,
        psi: &QubitState,
        sub: &SingleQubitOperator,
        outcomes: Outcomes,
    ) -> Result<ProtocolResult, ProtocolError> {
        let target = target_state(psi, sub, outcomes.p, outcomes.q)?;
        let achieved_fidelity = self.state.fidelity(&target)?;
        Ok(ProtocolResult {
            protocol,
            channel,
            final_state: self.state,
            outcomes,
            corrections_applied: self.corrections,
            classical_log: self.log,
            measurements: self.measurements,
            trace: self.trace,
            achieved_fidelity,
            target_suboperator: outcomes.m,
        })
    }
}

/// `U|ψ⟩_X ⊗ |a_p⟩ ⊗ |b_q⟩`.
pub fn target_state(psi: &QubitState, op: &SingleQubitOperator, p: u8, q: u8) -> Result<BranchState, StateError> {
    BranchState::qubit("X", &psi.transformed(op))
        .tensor(&BranchState::basis("A", p))?
        .tensor(&BranchState::basis("B", q))
}

/// Step 1 alone: returns `α|x₀a₀b₀⟩ + β|x₁a₁b₁⟩` (up to the channel's sign)
/// when the measurement is classified correctly.
pub fn riho_step1<R: Rng + ?Sized>(
    psi: &QubitState,
    channel: ChannelVariant,
    model: &HomodyneModel,
    rng: &mut R,
    forced_k: Option<u8>,
) -> Result<(BranchState, MeasurementRecord), ProtocolError> {
    let joint = BranchState::qubit("X", psi).tensor(&BranchState::channel(channel))?;
    let mut run = Run::new(model, CorrectionTable::for_channel(channel), joint);
    run.step1(forced_k, rng)?;
    let record = run.measurements.pop().map(|m| m.record).ok_or(HomodyneError::NoProbe)?;
    Ok((run.state, record))
}

pub fn run_riho<R: Rng + ?Sized>(
    psi: &QubitState,
    lump: &LumpOperator,
    channel: ChannelVariant,
    model: &HomodyneModel,
    rng: &mut R,
    forced: &ForcedOutcomes,
) -> Result<ProtocolResult, ProtocolError> {
    run_riho_with_table(psi, lump, channel, CorrectionTable::for_channel(channel), model, rng, forced)
}

/// RIHO where the parties correct according to `table`, which need not
/// match the channel actually shared.
pub fn run_riho_with_table<R: Rng + ?Sized>(
    psi: &QubitState,
    lump: &LumpOperator,
    channel: ChannelVariant,
    table: CorrectionTable,
    model: &HomodyneModel,
    rng: &mut R,
    forced: &ForcedOutcomes,
) -> Result<ProtocolResult, ProtocolError> {
    riho_inner(psi, lump, channel, table, model, rng, forced, None)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn riho_inner<R: Rng + ?Sized>(
    psi: &QubitState,
    lump: &LumpOperator,
    channel: ChannelVariant,
    table: CorrectionTable,
    model: &HomodyneModel,
    rng: &mut R,
    forced: &ForcedOutcomes,
    disclosure: Option<(u8, Vec<u8>)>,
) -> Result<ProtocolResult, ProtocolError> {
    let joint = BranchState::qubit("X", psi).tensor(&BranchState::channel(channel))?;
    let mut run = Run::new(model, table, joint);
    let k = run.step1(forced.k, rng)?;

    run.state = run.state.apply_operator("B", &lump.matrix())?;
    run.note("step2", Party::Bob, "apply U_B on B".into(), vec![]);

    let m = run.hidden_outcome_step(forced.m, rng)?;
    let (p, q) = run.final_measurement("step4", forced.pq, rng)?;
    disclose(&mut run, "step4", disclosure);
    run.final_phase_flip("step4", p, q)?;

    let outcomes = Outcomes { k, m, p, q };
    run.finish(ProtocolKind::Riho, channel, psi, &lump.sub_operator(m), outcomes)
}

/// Controller announces its bits to both parties.
fn disclose(run: &mut Run<'_>, step: &str, disclosure: Option<(u8, Vec<u8>)>) {
    if let Some((corrected_sign, bits)) = disclosure {
        for receiver in [Party::Alice, Party::Bob] {
            run.send(step, Party::Charlie, receiver, "r", bits.clone());
        }
        run.table.final_phase_flip = corrected_sign;
    }
}

pub fn run_ripuo<R: Rng + ?Sized>(
    psi: &QubitState,
    sub: &SingleQubitOperator,
    m_choice: u8,
    channel: ChannelVariant,
    model: &HomodyneModel,
    rng: &mut R,
    forced: &ForcedOutcomes,
) -> Result<ProtocolResult, ProtocolError> {
    run_ripuo_with_table(psi, sub, m_choice, channel, CorrectionTable::for_channel(channel), model, rng, forced)
}

#[allow(clippy::too_many_arguments)]
pub fn run_ripuo_with_table<R: Rng + ?Sized>(
    psi: &QubitState,
    sub: &SingleQubitOperator,
    m_choice: u8,
    channel: ChannelVariant,
    table: CorrectionTable,
    model: &HomodyneModel,
    rng: &mut R,
    forced: &ForcedOutcomes,
) -> Result<ProtocolResult, ProtocolError> {
    ripuo_inner(psi, sub, m_choice, channel, table, model, rng, forced, None)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn ripuo_inner<R: Rng + ?Sized>(
    psi: &QubitState,
    sub: &SingleQubitOperator,
    m_choice: u8,
    channel: ChannelVariant,
    table: CorrectionTable,
    model: &HomodyneModel,
    rng: &mut R,
    forced: &ForcedOutcomes,
    disclosure: Option<(u8, Vec<u8>)>,
) -> Result<ProtocolResult, ProtocolError> {
    let m = m_choice & 1;
    let expected = if m == 0 { RotationClass::Diagonal } else { RotationClass::Antidiagonal };
    let found = classify_rotation(sub)?;
    if found != expected {
        return Err(ProtocolError::ShapeMismatch { m, found });
    }

    let joint = BranchState::qubit("X", psi).tensor(&BranchState::channel(channel))?;
    let mut run = Run::new(model, table, joint);
    let k = run.step1(forced.k, rng)?;

    run.state = run.state.apply_operator("B", sub)?;
    run.note("step2", Party::Bob, format!("apply U_{m} on B"), vec![]);
    run.send("step2", Party::Bob, Party::Alice, "m", vec![m]);

    let (p, q) = run.final_measurement("step3", forced.pq, rng)?;
    disclose(&mut run, "step3", disclosure);
    run.final_phase_flip("step3", p, q)?;
    if m == 1 {
        run.operate("step3", Party::Alice, "X", "X_S", &SingleQubitOperator::path_flip(), Some("m"))?;
    }

    let outcomes = Outcomes { k, m, p, q };
    run.finish(ProtocolKind::Ripuo, channel, psi, sub, outcomes)
}

#[cfg(test)]
mod tests;
