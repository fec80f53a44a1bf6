use serde::{Deserialize, Serialize};

use crate::homodyne::HomodyneModel;

/// Misidentification probabilities of the individual measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorComponents {
    /// Step-1 probe read-out.
    pub p1: f64,
    /// Hidden-outcome (`m`) read-out.
    pub p2: f64,
    pub p31: f64,
    pub p32: f64,
    pub p33: f64,
}

impl ErrorComponents {
    pub fn final_sum(&self) -> f64 {
        self.p31 + self.p32 + self.p33
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessProbabilities {
    /// `1 − P¹·P²·(P³¹ + P³² + P³³)`
    pub p1suc: f64,
    /// `1 − P¹·(P³¹ + P³² + P³³)`
    pub p2suc: f64,
    pub components: ErrorComponents,
    pub warning: bool,
}

/// Aggregate success probabilities of both protocols, with the model's
/// dissipation factor applied to every read-out.
pub fn success_probabilities(model: &HomodyneModel) -> SuccessProbabilities {
    let p1 = model.pairwise_error(0, 1);
    let (p31, p32, p33) = model.step4_error_triple();
    let components = ErrorComponents { p1, p2: p1, p31, p32, p33 };
    let sum = components.final_sum();
    SuccessProbabilities {
        p1suc: 1.0 - p1 * components.p2 * sum,
        p2suc: 1.0 - p1 * sum,
        components,
        warning: model.distinguishability_warning(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn fully_damped_endpoints() {
        for (z, theta) in [(1.0, PI), (3.0, 0.4), (0.2, 2.0)] {
            let s = success_probabilities(&HomodyneModel::new(z, theta, 0.0).unwrap());
            assert_eq!(s.p1suc, 0.625);
            assert_eq!(s.p2suc, 0.25);
        }
    }

    #[test]
    fn undamped_pi_values() {
        let s = success_probabilities(&HomodyneModel::new(1.0, PI, 1.0).unwrap());
        let e = libm::erfc(std::f64::consts::SQRT_2);
        assert!((s.p1suc - (1.0 - 0.25 * e * e * (1.0 + 0.5 * e))).abs() < 1e-15);
        assert!((s.p2suc - (1.0 - 0.5 * e * (1.0 + 0.5 * e))).abs() < 1e-15);
        assert!((s.p1suc - 0.99947).abs() < 5e-6);
        assert!((s.p2suc - 0.97673).abs() < 5e-6);
        assert!(s.warning);
    }
}
