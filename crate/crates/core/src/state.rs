//! Joint state of several path-encoded photons and one symbolic coherent
//! probe, stored as a sparse sum of branches.
//!
//! Each branch carries one path bit per photon and an integer probe index
//! `n`, meaning the probe is in `|z·e^{inθ}⟩`. The probe is never expanded
//! in a Fock basis; only its phase label is tracked.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operator::SingleQubitOperator;
use crate::C64;

/// Branches with smaller modulus are dropped after every operation.
pub const AMPLITUDE_CUTOFF: f64 = 1e-14;
/// Tolerance for the normalization of caller-supplied amplitudes.
pub const NORM_TOLERANCE: f64 = 1e-9;
/// Hard cap on the number of photons; path bits are packed in a `u64`.
pub const MAX_PHOTONS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("amplitudes are not normalized (|alpha|^2 + |beta|^2 = {norm})")]
    NotNormalized { norm: f64 },
    #[error("photon label {0:?} appears in both states")]
    LabelCollision(String),
    #[error("unknown photon {0:?}")]
    UnknownPhoton(String),
    #[error("states are defined over different photons ({left:?} vs {right:?})")]
    LabelMismatch { left: Vec<String>, right: Vec<String> },
    #[error("too many photons ({0}); at most 64 are supported")]
    TooManyPhotons(usize),
    #[error("state record is malformed: {0}")]
    Malformed(String),
}

/// A single-qubit pure state `α|0⟩ + β|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    alpha: C64,
    beta: C64,
}

impl QubitState {
    pub fn new(alpha: C64, beta: C64) -> Result<Self, StateError> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(StateError::NotNormalized { norm });
        }
        Ok(Self { alpha, beta })
    }

    /// Haar-uniform point on the Bloch sphere.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let cos_polar: f64 = rng.random_range(-1.0..=1.0);
        let azimuth: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let half = cos_polar.clamp(-1.0, 1.0).acos() / 2.0;
        Self { alpha: C64::new(half.cos(), 0.0), beta: C64::from_polar(half.sin(), azimuth) }
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        [self.alpha, self.beta]
    }

    /// `op|ψ⟩`. The result is renormalized to absorb rounding.
    pub fn transformed(&self, op: &SingleQubitOperator) -> Self {
        let [a, b] = op.apply(self.amplitudes());
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        Self { alpha: a / norm, beta: b / norm }
    }

    /// `|⟨other|self⟩|²`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        (other.alpha.conj() * self.alpha + other.beta.conj() * self.beta).norm_sqr()
    }
}

/// Which of the four path Bell states is shared by Alice (A) and Bob (B).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChannelVariant {
    /// `(|a₀b₀⟩ + |a₁b₁⟩)/√2`
    #[serde(rename = "omega+")]
    OmegaPlus,
    /// `(|a₀b₀⟩ − |a₁b₁⟩)/√2`
    #[serde(rename = "omega-")]
    OmegaMinus,
    /// `(|a₀b₁⟩ + |a₁b₀⟩)/√2`
    #[serde(rename = "pi+")]
    PiPlus,
    /// `(|a₀b₁⟩ − |a₁b₀⟩)/√2`
    #[serde(rename = "pi-")]
    PiMinus,
}

impl ChannelVariant {
    pub const ALL: [ChannelVariant; 4] =
        [ChannelVariant::OmegaPlus, ChannelVariant::OmegaMinus, ChannelVariant::PiPlus, ChannelVariant::PiMinus];

    /// 1 when Bob's path is anti-correlated with Alice's.
    pub fn parity_bit(self) -> u8 {
        matches!(self, Self::PiPlus | Self::PiMinus) as u8
    }

    /// 1 when the second term carries a minus sign.
    pub fn sign_bit(self) -> u8 {
        matches!(self, Self::OmegaMinus | Self::PiMinus) as u8
    }

    pub fn from_bits(parity: u8, sign: u8) -> Self {
        match (parity & 1, sign & 1) {
            (0, 0) => Self::OmegaPlus,
            (0, _) => Self::OmegaMinus,
            (_, 0) => Self::PiPlus,
            _ => Self::PiMinus,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::OmegaPlus => "omega+",
            Self::OmegaMinus => "omega-",
            Self::PiPlus => "pi+",
            Self::PiMinus => "pi-",
        }
    }
}

impl fmt::Display for ChannelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "omega+" | "omega-plus" | "omegaplus" => Ok(Self::OmegaPlus),
            "omega-" | "omega-minus" | "omegaminus" => Ok(Self::OmegaMinus),
            "pi+" | "pi-plus" | "piplus" => Ok(Self::PiPlus),
            "pi-" | "pi-minus" | "piminus" => Ok(Self::PiMinus),
            other => Err(format!("unknown channel {other:?}; expected omega+, omega-, pi+ or pi-")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub amplitude: C64,
    /// Bit `i` is the path occupied by photon `i`.
    pub paths: u64,
    /// Probe phase label `n` for `|z·e^{inθ}⟩`.
    pub probe: i32,
}

impl Branch {
    pub fn path(&self, photon: usize) -> u8 {
        ((self.paths >> photon) & 1) as u8
    }
}

/// Normalized superposition of branches over an ordered set of photons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "StateRecord", try_from = "StateRecord")]
pub struct BranchState {
    labels: Vec<String>,
    branches: Vec<Branch>,
}

impl BranchState {
    /// Merges duplicate `(paths, probe)` keys and drops dead branches.
    fn from_terms<I>(labels: Vec<String>, terms: I) -> Self
    where
        I: IntoIterator<Item = (u64, i32, C64)>,
    {
        let mut merged: BTreeMap<(u64, i32), C64> = BTreeMap::new();
        for (paths, probe, amplitude) in terms {
            *merged.entry((paths, probe)).or_insert(C64::new(0.0, 0.0)) += amplitude;
        }
        let branches = merged
            .into_iter()
            .filter(|(_, amplitude)| amplitude.norm() > AMPLITUDE_CUTOFF)
            .map(|((paths, probe), amplitude)| Branch { amplitude, paths, probe })
            .collect();
        Self { labels, branches }
    }

    /// The empty product: no photons, amplitude 1. Identity for [`tensor`](Self::tensor).
    pub fn vacuum() -> Self {
        Self { labels: Vec::new(), branches: vec![Branch { amplitude: C64::new(1.0, 0.0), paths: 0, probe: 0 }] }
    }

    /// `α|x₀⟩ + β|x₁⟩` on photon `X`.
    pub fn input(alpha: C64, beta: C64) -> Result<Self, StateError> {
        let psi = QubitState::new(alpha, beta)?;
        Ok(Self::qubit("X", &psi))
    }

    pub fn qubit(label: &str, psi: &QubitState) -> Self {
        Self::from_terms(vec![label.to_string()], [(0, 0, psi.alpha), (1, 0, psi.beta)])
    }

    pub fn basis(label: &str, bit: u8) -> Self {
        Self::from_terms(vec![label.to_string()], [((bit & 1) as u64, 0, C64::new(1.0, 0.0))])
    }

    /// Bell state over photons `A` (bit 0) and `B` (bit 1).
    pub fn channel(variant: ChannelVariant) -> Self {
        Self::bell_pair("A", "B", variant)
    }

    pub fn bell_pair(first: &str, second: &str, variant: ChannelVariant) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let parity = variant.parity_bit() as u64;
        let sign = if variant.sign_bit() == 1 { -h } else { h };
        Self::from_terms(
            vec![first.to_string(), second.to_string()],
            [(parity << 1, 0, C64::new(h, 0.0)), (1 | ((1 ^ parity) << 1), 0, C64::new(sign, 0.0))],
        )
    }

    /// `(|0…0⟩ + (−1)^sign |1…1⟩)/√2` over `labels`.
    pub fn cat(labels: &[String], sign_bit: u8) -> Result<Self, StateError> {
        if labels.len() > MAX_PHOTONS {
            return Err(StateError::TooManyPhotons(labels.len()));
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let all = if labels.len() == MAX_PHOTONS { u64::MAX } else { (1u64 << labels.len()) - 1 };
        let sign = if sign_bit & 1 == 1 { -h } else { h };
        Ok(Self::from_terms(labels.to_vec(), [(0, 0, C64::new(h, 0.0)), (all, 0, C64::new(sign, 0.0))]))
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn photon_index(&self, photon: &str) -> Result<usize, StateError> {
        self.labels.iter().position(|l| l == photon).ok_or_else(|| StateError::UnknownPhoton(photon.to_string()))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.branches.iter().map(|b| b.amplitude.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Self {
        let norm = self.norm_sqr().sqrt();
        let mut out = self.clone();
        for b in &mut out.branches {
            b.amplitude /= norm;
        }
        out
    }

    /// Total weight per probe label.
    pub fn probe_weights(&self) -> BTreeMap<i32, f64> {
        let mut weights = BTreeMap::new();
        for b in &self.branches {
            *weights.entry(b.probe).or_insert(0.0) += b.amplitude.norm_sqr();
        }
        weights
    }

    pub fn tensor(&self, other: &Self) -> Result<Self, StateError> {
        if let Some(dup) = other.labels.iter().find(|l| self.labels.contains(l)) {
            return Err(StateError::LabelCollision(dup.clone()));
        }
        let total = self.labels.len() + other.labels.len();
        if total > MAX_PHOTONS {
            return Err(StateError::TooManyPhotons(total));
        }
        let shift = self.labels.len();
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        let terms = self.branches.iter().flat_map(|l| {
            other.branches.iter().map(move |r| {
                let paths = if shift == MAX_PHOTONS { l.paths } else { l.paths | (r.paths << shift) };
                (paths, l.probe + r.probe, l.amplitude * r.amplitude)
            })
        });
        Ok(Self::from_terms(labels, terms))
    }

    /// Applies a 2×2 operator in `photon`'s path basis.
    pub fn apply_operator(&self, photon: &str, op: &SingleQubitOperator) -> Result<Self, StateError> {
        let idx = self.photon_index(photon)?;
        let mask = 1u64 << idx;
        let terms = self.branches.iter().flat_map(|b| {
            let bit = b.path(idx) as usize;
            let cleared = b.paths & !mask;
            (0..2usize).map(move |row| {
                let paths = if row == 1 { cleared | mask } else { cleared };
                (paths, b.probe, op.entries[row][bit] * b.amplitude)
            })
        });
        Ok(Self::from_terms(self.labels.clone(), terms))
    }

    /// Balanced beam splitter: `|0⟩ → (|0⟩+|1⟩)/√2`, `|1⟩ → (|0⟩−|1⟩)/√2`.
    pub fn apply_bbs(&self, photon: &str) -> Result<Self, StateError> {
        self.apply_operator(photon, &beam_splitter())
    }

    /// Adds `shift` to the probe label of every branch where `photon`
    /// occupies `path`.
    pub fn cross_kerr(&self, photon: &str, path: u8, shift: i32) -> Result<Self, StateError> {
        let idx = self.photon_index(photon)?;
        let mut out = self.clone();
        for b in &mut out.branches {
            if b.path(idx) == path & 1 {
                b.probe += shift;
            }
        }
        // shifted labels may collide with existing keys
        Ok(Self::from_terms(out.labels, out.branches.into_iter().map(|b| (b.paths, b.probe, b.amplitude))))
    }

    /// Re-prepares a fresh probe: every label is set to 0.
    pub fn reset_probe(&self) -> Self {
        Self::from_terms(self.labels.clone(), self.branches.iter().map(|b| (b.paths, 0, b.amplitude)))
    }

    /// Multiplies every branch by `e^{i·phase(branch)}`.
    pub fn with_branch_phases<F>(&self, phase: F) -> Self
    where
        F: Fn(&Branch) -> f64,
    {
        let mut out = self.clone();
        for b in &mut out.branches {
            b.amplitude *= C64::from_polar(1.0, phase(b));
        }
        out
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self::from_terms(self.labels.clone(), self.branches.iter().map(|b| (b.paths, b.probe, b.amplitude * factor)))
    }

    /// Keeps the branches matching `keep` and renormalizes. Returns `None`
    /// when nothing survives.
    pub fn project<F>(&self, keep: F) -> Option<Self>
    where
        F: Fn(&Branch) -> bool,
    {
        let kept = Self::from_terms(
            self.labels.clone(),
            self.branches.iter().filter(|b| keep(b)).map(|b| (b.paths, b.probe, b.amplitude)),
        );
        (kept.norm_sqr() > AMPLITUDE_CUTOFF * AMPLITUDE_CUTOFF).then(|| kept.normalized())
    }

    /// Path bits of `other` re-indexed into this state's photon order.
    fn permutation_from(&self, other: &Self) -> Result<Vec<usize>, StateError> {
        let mismatch = || StateError::LabelMismatch { left: self.labels.clone(), right: other.labels.clone() };
        if self.labels.len() != other.labels.len() {
            return Err(mismatch());
        }
        other.labels.iter().map(|l| self.labels.iter().position(|s| s == l).ok_or_else(mismatch)).collect()
    }

    /// `|⟨target|self⟩|²`, invariant under global phase. Photon order may
    /// differ between the two states; probe labels must match.
    pub fn fidelity(&self, target: &Self) -> Result<f64, StateError> {
        let perm = self.permutation_from(target)?;
        let mut lookup: BTreeMap<(u64, i32), C64> = BTreeMap::new();
        for b in &target.branches {
            let paths = perm.iter().enumerate().fold(0u64, |acc, (i, &dest)| acc | (((b.paths >> i) & 1) << dest));
            lookup.insert((paths, b.probe), b.amplitude);
        }
        let overlap: C64 =
            self.branches.iter().filter_map(|b| lookup.get(&(b.paths, b.probe)).map(|t| t.conj() * b.amplitude)).sum();
        let norms = self.norm_sqr() * target.norm_sqr();
        Ok((overlap.norm_sqr() / norms).clamp(0.0, 1.0))
    }

    /// Largest amplitude difference to `other` over all keys. Photon order
    /// must be identical.
    pub fn max_amplitude_diff(&self, other: &Self) -> Result<f64, StateError> {
        if self.labels != other.labels {
            return Err(StateError::LabelMismatch { left: self.labels.clone(), right: other.labels.clone() });
        }
        let mut diff: BTreeMap<(u64, i32), C64> = BTreeMap::new();
        for b in &self.branches {
            *diff.entry((b.paths, b.probe)).or_default() += b.amplitude;
        }
        for b in &other.branches {
            *diff.entry((b.paths, b.probe)).or_default() -= b.amplitude;
        }
        Ok(diff.values().map(|d| d.norm()).fold(0.0, f64::max))
    }

    /// Short deterministic fingerprint used in protocol traces.
    pub fn digest(&self) -> String {
        // FNV-1a over labels and amplitudes rounded to 1e-9
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for &byte in bytes {
                hash ^= byte as u64;
                hash = hash.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for l in &self.labels {
            feed(l.as_bytes());
            feed(&[0]);
        }
        for b in &self.branches {
            feed(&b.paths.to_le_bytes());
            feed(&b.probe.to_le_bytes());
            feed(&((b.amplitude.re * 1e9).round() as i64).to_le_bytes());
            feed(&((b.amplitude.im * 1e9).round() as i64).to_le_bytes());
        }
        format!("{}b:{:016x}", self.branches.len(), hash)
    }
}

/// The beam-splitter matrix used by [`BranchState::apply_bbs`].
pub fn beam_splitter() -> SingleQubitOperator {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    SingleQubitOperator::new([[C64::new(h, 0.0), C64::new(h, 0.0)], [C64::new(h, 0.0), C64::new(-h, 0.0)]])
}

impl fmt::Display for BranchState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.branches.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({:.6}{:+.6}i)|", b.amplitude.re, b.amplitude.im)?;
            for (p, label) in self.labels.iter().enumerate() {
                write!(f, "{}{}", label.to_lowercase(), b.path(p))?;
                if p + 1 < self.labels.len() {
                    f.write_str(",")?;
                }
            }
            if b.probe != 0 {
                write!(f, ";n={}", b.probe)?;
            }
            f.write_str("⟩")?;
        }
        Ok(())
    }
}

/// Wire form of one branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub re: f64,
    pub im: f64,
    pub paths: Vec<u8>,
    pub probe: i32,
}

/// Wire form of a [`BranchState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub photons: Vec<String>,
    pub branches: Vec<BranchRecord>,
}

impl From<BranchState> for StateRecord {
    fn from(state: BranchState) -> Self {
        let n = state.labels.len();
        let branches = state
            .branches
            .iter()
            .map(|b| BranchRecord {
                re: b.amplitude.re,
                im: b.amplitude.im,
                paths: (0..n).map(|i| b.path(i)).collect(),
                probe: b.probe,
            })
            .collect();
        Self { photons: state.labels, branches }
    }
}

impl TryFrom<StateRecord> for BranchState {
    type Error = StateError;

    fn try_from(record: StateRecord) -> Result<Self, Self::Error> {
        let n = record.photons.len();
        if n > MAX_PHOTONS {
            return Err(StateError::TooManyPhotons(n));
        }
        for (i, l) in record.photons.iter().enumerate() {
            if record.photons[..i].contains(l) {
                return Err(StateError::LabelCollision(l.clone()));
            }
        }
        let mut terms = Vec::with_capacity(record.branches.len());
        for b in &record.branches {
            if b.paths.len() != n || b.paths.iter().any(|&p| p > 1) {
                return Err(StateError::Malformed(format!("branch paths {:?} do not match {n} photons", b.paths)));
            }
            let paths = b.paths.iter().enumerate().fold(0u64, |acc, (i, &p)| acc | ((p as u64) << i));
            terms.push((paths, b.probe, C64::new(b.re, b.im)));
        }
        Ok(Self::from_terms(record.photons, terms))
    }
}
