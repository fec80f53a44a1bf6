//! Generalized channels for joint, controlled and cyclic variants, the
//! classical-bit controller scheme, and Bell-pair resource counts.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::homodyne::HomodyneModel;
use crate::operator::{LumpOperator, SingleQubitOperator};
use crate::protocol::{
    riho_inner, ripuo_inner, CorrectionTable, ForcedOutcomes, ProtocolError, ProtocolKind, ProtocolResult,
};
use crate::state::{BranchState, ChannelVariant, QubitState, StateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MultipartyError {
    #[error("bad arity: {0}")]
    BadArity(String),
    #[error(transparent)]
    State(#[from] StateError),
}

/// How controllers take part in a controlled channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "form")]
pub enum ControllerForm {
    /// Every controller holds one photon of the shared cat state.
    Qubits,
    /// The last controller holds no photon; it fixes the relative sign
    /// with its secret bit `r` instead.
    Classical { r: u8 },
}

/// A two-branch channel `|0…0⟩ + (−1)^r |1…1⟩` over A, Bobs and controllers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralChannel {
    pub state: BranchState,
    pub m_parties: usize,
    pub n_controllers: usize,
    pub phase_bit: u8,
}

impl GeneralChannel {
    fn new(
        labels: Vec<String>,
        m_parties: usize,
        n_controllers: usize,
        phase_bit: u8,
    ) -> Result<Self, MultipartyError> {
        Ok(Self { state: BranchState::cat(&labels, phase_bit)?, m_parties, n_controllers, phase_bit: phase_bit & 1 })
    }

    /// Sign bit read off the amplitudes: 1 when the all-ones branch is
    /// opposite in sign to the all-zeros branch.
    pub fn measured_sign_bit(&self) -> Option<u8> {
        let branches = self.state.branches();
        let zero = branches.iter().find(|b| b.paths == 0)?;
        let ones = branches.iter().find(|b| b.paths != 0)?;
        Some(((ones.amplitude / zero.amplitude).re < 0.0) as u8)
    }
}

pub fn bob_labels(m_parties: usize) -> Vec<String> {
    match m_parties {
        1 => vec!["B".into()],
        m => (1..=m).map(|i| format!("B{i}")).collect(),
    }
}

pub fn controller_labels(n_controllers: usize) -> Vec<String> {
    match n_controllers {
        1 => vec!["C".into()],
        n => (1..=n).map(|i| format!("C{i}")).collect(),
    }
}

fn check_parties(m_parties: usize) -> Result<(), MultipartyError> {
    if m_parties == 0 {
        return Err(MultipartyError::BadArity("at least one Bob is required".into()));
    }
    Ok(())
}

fn base_labels(m_parties: usize) -> Vec<String> {
    let mut labels = vec!["A".to_string()];
    labels.extend(bob_labels(m_parties));
    labels
}

/// `|a₀⟩⊗|b₀ⁱ⟩ + |a₁⟩⊗|b₁ⁱ⟩` for `M` Bobs.
pub fn build_joint_channel(m_parties: usize) -> Result<GeneralChannel, MultipartyError> {
    check_parties(m_parties)?;
    GeneralChannel::new(base_labels(m_parties), m_parties, 0, 0)
}

pub fn build_controlled_joint_channel(
    m_parties: usize,
    n_controllers: usize,
    form: ControllerForm,
) -> Result<GeneralChannel, MultipartyError> {
    check_parties(m_parties)?;
    let mut labels = base_labels(m_parties);
    match form {
        ControllerForm::Qubits => {
            if n_controllers > 0 {
                labels.extend(controller_labels(n_controllers));
            }
            GeneralChannel::new(labels, m_parties, n_controllers, 0)
        }
        ControllerForm::Classical { r } => {
            if n_controllers == 0 {
                return Err(MultipartyError::BadArity("the classical form needs at least one controller".into()));
            }
            let mut holders = controller_labels(n_controllers);
            holders.pop();
            labels.extend(holders);
            GeneralChannel::new(labels, m_parties, n_controllers, r)
        }
    }
}

/// Controller 1's `M + 2` photon state with qubit `C` and its bit `r₁`.
pub fn build_chain_channel(m_parties: usize, r1: u8) -> Result<GeneralChannel, MultipartyError> {
    check_parties(m_parties)?;
    let mut labels = base_labels(m_parties);
    labels.push("C".into());
    GeneralChannel::new(labels, m_parties, 1, r1)
}

/// Controllers 2…N each apply `Z^{r_j}` to qubit `C` in turn.
pub fn controller_chain_apply(channel: &GeneralChannel, bits: &[u8]) -> Result<GeneralChannel, MultipartyError> {
    let flip = SingleQubitOperator::phase_flip();
    let mut state = channel.state.clone();
    for &bit in bits {
        state = state.apply_operator("C", &flip.pow(bit & 1))?;
    }
    let extra = bits.iter().fold(0u8, |acc, b| acc ^ (b & 1));
    Ok(GeneralChannel {
        state,
        m_parties: channel.m_parties,
        n_controllers: channel.n_controllers + bits.len(),
        phase_bit: channel.phase_bit ^ extra,
    })
}

/// Controllers' secret bits `r₁…r_N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControllerChain {
    pub bits: Vec<u8>,
    /// Controller 1's read-out of qubit `C`, when it holds one.
    pub measured_bit: Option<u8>,
    pub disclosed: Vec<bool>,
}

impl ControllerChain {
    pub fn new(bits: Vec<u8>, disclosed: bool) -> Self {
        let disclosed = vec![disclosed; bits.len()];
        Self { bits, measured_bit: None, disclosed }
    }

    pub fn random<R: Rng + ?Sized>(n_controllers: usize, disclosed: bool, rng: &mut R) -> Self {
        Self::new((0..n_controllers).map(|_| rng.random_range(0..2u8)).collect(), disclosed)
    }

    /// `r = Σ r_j mod 2`.
    pub fn effective_phase(&self) -> u8 {
        self.bits.iter().fold(0, |acc, b| acc ^ (b & 1))
    }

    pub fn all_disclosed(&self) -> bool {
        self.disclosed.iter().all(|&d| d)
    }
}

/// Operator handed to Bob in a controlled run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlledOperator {
    Lump(LumpOperator),
    Sub { op: SingleQubitOperator, m: u8 },
}

/// Two-party controlled run: the controller distributes `|Ω⁺⟩` for `r = 0`
/// or `|Ω⁻⟩` for `r = 1`. When every bit is disclosed the parties learn `r`
/// before the final correction; otherwise they correct as if the channel
/// were the one selected by `assume_bit` (default 0).
#[allow(clippy::too_many_arguments)]
pub fn run_controlled<R: Rng + ?Sized>(
    protocol: ProtocolKind,
    psi: &QubitState,
    op: &ControlledOperator,
    chain: &ControllerChain,
    model: &HomodyneModel,
    rng: &mut R,
    assume_bit: Option<u8>,
    forced: &ForcedOutcomes,
) -> Result<ProtocolResult, ProtocolError> {
    let r = chain.effective_phase();
    let actual = ChannelVariant::from_bits(0, r);
    let (table, disclosure) = if chain.all_disclosed() {
        (CorrectionTable::for_channel(ChannelVariant::OmegaPlus), Some((r, chain.bits.clone())))
    } else {
        (CorrectionTable::for_channel(ChannelVariant::from_bits(0, assume_bit.unwrap_or(0))), None)
    };
    match (protocol, op) {
        (ProtocolKind::Riho, ControlledOperator::Lump(lump)) => {
            riho_inner(psi, lump, actual, table, model, rng, forced, disclosure)
        }
        (ProtocolKind::Ripuo, ControlledOperator::Sub { op, m }) => {
            ripuo_inner(psi, op, *m, actual, table, model, rng, forced, disclosure)
        }
        (kind, _) => Err(ProtocolError::InvalidConfig(format!("operator kind does not match protocol {kind}"))),
    }
}

/// One shared Bell pair of a cyclic arrangement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellLink {
    pub sender: String,
    pub receiver: String,
    pub state: BranchState,
}

fn party_name(i: usize) -> String {
    // C is reserved for controllers
    const NAMES: &[&str] = &[
        "A", "B", "D", "E", "F", "G", "H", "I", "J", "K", "L", "M", "N", "O", "P", "Q", "R", "S", "T", "U", "V", "W",
        "X", "Y", "Z",
    ];
    NAMES.get(i).map_or_else(|| format!("P{i}"), |n| n.to_string())
}

/// `m` independent `|Ω⁺⟩` pairs around a ring (A–B, B′–D, D′–A′ for three
/// parties), or `2m` when the ring also runs backwards.
pub fn build_cyclic_channel(parties: usize, bidirectional: bool) -> Result<Vec<BellLink>, MultipartyError> {
    if parties < 3 {
        return Err(MultipartyError::BadArity("a cycle needs at least three parties".into()));
    }
    let mut links = Vec::with_capacity(if bidirectional { 2 * parties } else { parties });
    for j in 0..parties {
        let next = (j + 1) % parties;
        let sender = format!("{}{}", party_name(j), if j > 0 { "'" } else { "" });
        let receiver = format!("{}{}", party_name(next), if next == 0 { "'" } else { "" });
        let state = BranchState::bell_pair(&sender, &receiver, ChannelVariant::OmegaPlus);
        links.push(BellLink { sender, receiver, state });
    }
    if bidirectional {
        for j in 0..parties {
            let next = (j + 1) % parties;
            let sender = format!("{}*", party_name(next));
            let receiver = format!("{}**", party_name(j));
            let state = BranchState::bell_pair(&sender, &receiver, ChannelVariant::OmegaPlus);
            links.push(BellLink { sender, receiver, state });
        }
    }
    Ok(links)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    Riho,
    Criho,
    Ripuo,
    Cripuo,
    /// Bidirectional variants.
    Briho,
    Bripuo,
    Cbriho,
    Cbripuo,
    CyclicRiho(usize),
    CyclicRipuo(usize),
    /// Bidirectional cyclic with `m` parties.
    BCyclic(usize),
    Ccripuo,
    Bccripuo,
}

impl FromStr for Task {
    type Err = MultipartyError;

    /// Names are case-insensitive; cyclic tasks take their size as a
    /// suffix, e.g. `cyclic-riho:4`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, size) = match lower.split_once(':') {
            Some((n, m)) => (
                n.to_string(),
                Some(m.parse::<usize>().map_err(|_| MultipartyError::BadArity(format!("bad size {m:?}")))?),
            ),
            None => (lower.clone(), None),
        };
        let sized = |f: fn(usize) -> Task| {
            size.map(f).ok_or_else(|| MultipartyError::BadArity(format!("{name} needs a party count, e.g. {name}:3")))
        };
        match name.as_str() {
            "riho" => Ok(Task::Riho),
            "criho" => Ok(Task::Criho),
            "ripuo" => Ok(Task::Ripuo),
            "cripuo" => Ok(Task::Cripuo),
            "briho" => Ok(Task::Briho),
            "bripuo" => Ok(Task::Bripuo),
            "cbriho" => Ok(Task::Cbriho),
            "cbripuo" => Ok(Task::Cbripuo),
            "cyclic-riho" => sized(Task::CyclicRiho),
            "cyclic-ripuo" => sized(Task::CyclicRipuo),
            "bcyclic" => sized(Task::BCyclic),
            "ccripuo" => Ok(Task::Ccripuo),
            "bccripuo" => Ok(Task::Bccripuo),
            other => Err(MultipartyError::BadArity(format!("unknown task {other:?}"))),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Riho => f.write_str("RIHO"),
            Task::Criho => f.write_str("CRIHO"),
            Task::Ripuo => f.write_str("RIPUO"),
            Task::Cripuo => f.write_str("CRIPUO"),
            Task::Briho => f.write_str("BRIHO"),
            Task::Bripuo => f.write_str("BRIPUO"),
            Task::Cbriho => f.write_str("CBRIHO"),
            Task::Cbripuo => f.write_str("CBRIPUO"),
            Task::CyclicRiho(m) => write!(f, "cyclic RIHO ({m} parties)"),
            Task::CyclicRipuo(m) => write!(f, "cyclic RIPUO ({m} parties)"),
            Task::BCyclic(m) => write!(f, "bidirectional cyclic ({m} parties)"),
            Task::Ccripuo => f.write_str("CCRIPUO"),
            Task::Bccripuo => f.write_str("BCCRIPUO"),
        }
    }
}

/// Minimum number of shared Bell pairs for `task`.
pub fn resource_count(task: Task) -> Result<usize, MultipartyError> {
    let cyclic = |m: usize| {
        if m < 3 {
            Err(MultipartyError::BadArity(format!("cyclic tasks need m >= 3 (got {m})")))
        } else {
            Ok(m)
        }
    };
    match task {
        Task::Riho | Task::Criho | Task::Ripuo | Task::Cripuo => Ok(1),
        Task::Briho | Task::Bripuo | Task::Cbriho | Task::Cbripuo => Ok(2),
        Task::CyclicRiho(m) | Task::CyclicRipuo(m) => cyclic(m),
        Task::BCyclic(m) => cyclic(m).map(|m| 2 * m),
        Task::Ccripuo => Ok(3),
        Task::Bccripuo => Ok(6),
    }
}

/// A row comparing a previously used multipartite channel with the
/// Bell-pair replacement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceRow {
    pub task: Task,
    pub prior_channel: &'static str,
    pub parties: &'static str,
    pub optimal_channel: &'static str,
    pub bell_pairs: usize,
}

pub fn resource_table() -> Vec<ResourceRow> {
    let rows = [
        (Task::Riho, "(|000>+|111>)/sqrt2 on A A' B", "2", "|Omega±> or |Pi±>"),
        (Task::Criho, "(|0000>+|1111>)/sqrt2 on A A' B C", "2+1", "|Omega±> or |Pi±>"),
        (Task::Cripuo, "(|000>+|111>)/sqrt2 on A B C", "2+1", "|Omega±> or |Pi±>"),
        (Task::Ccripuo, "|+>|phi+>^3 + |->|phi->^3", "3+1", "|Omega±>^3 or |Pi±>^3"),
        (Task::Bccripuo, "|0>|phi+>^6 + |1>|phi->^6", "3+1", "|Omega±>^6 or |Pi±>^6"),
    ];
    rows.into_iter()
        .map(|(task, prior_channel, parties, optimal_channel)| ResourceRow {
            task,
            prior_channel,
            parties,
            optimal_channel,
            bell_pairs: resource_count(task).expect("fixed tasks have valid arity"),
        })
        .collect()
}
