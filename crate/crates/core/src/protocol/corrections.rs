use serde::{Deserialize, Serialize};

use crate::state::ChannelVariant;

/// Channel-dependent parts of the correction rules.
///
/// With `|Ω⁺⟩` Bob flips B when `k = 1` and Alice applies `Z_S^{p⊕q}` at
/// the end. The `|Π±⟩` channels shift Bob's step-1 flip to `X_S^{k⊕1}`; the
/// minus-sign channels shift the final flip to `Z_S^{p⊕q⊕1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionTable {
    /// Bob applies `X_S^{k ⊕ step1_bob_flip}` on B.
    pub step1_bob_flip: u8,
    /// Alice applies `Z_S^{p ⊕ q ⊕ final_phase_flip}` on X.
    pub final_phase_flip: u8,
}

impl CorrectionTable {
    pub fn for_channel(channel: ChannelVariant) -> Self {
        Self { step1_bob_flip: channel.parity_bit(), final_phase_flip: channel.sign_bit() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        let t = |c| CorrectionTable::for_channel(c);
        assert_eq!(t(ChannelVariant::OmegaPlus), CorrectionTable { step1_bob_flip: 0, final_phase_flip: 0 });
        assert_eq!(t(ChannelVariant::OmegaMinus), CorrectionTable { step1_bob_flip: 0, final_phase_flip: 1 });
        assert_eq!(t(ChannelVariant::PiPlus), CorrectionTable { step1_bob_flip: 1, final_phase_flip: 0 });
        assert_eq!(t(ChannelVariant::PiMinus), CorrectionTable { step1_bob_flip: 1, final_phase_flip: 1 });
    }
}
