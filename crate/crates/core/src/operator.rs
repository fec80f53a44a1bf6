//! Single-qubit operators in the path basis and the lump operator
//! `U_B = (U_0 + U_1)/√2`.

use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::C64;

/// Tolerance applied to caller-supplied moduli and unitarity checks.
pub const INPUT_TOLERANCE: f64 = 1e-9;
/// Tolerance for identities that hold up to rounding.
pub const INTERNAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("lump operator entries must have unit modulus (|u| = {u_modulus}, |v| = {v_modulus})")]
    NonUnimodular { u_modulus: f64, v_modulus: f64 },
    #[error("operator is not unitary (max |M†M - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },
}

/// A 2×2 complex matrix acting on the two paths of one photon.
///
/// Row/column 0 is the first path (`|x_0⟩`, `|a_0⟩`, ...), 1 the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitOperator {
    pub entries: [[C64; 2]; 2],
}

impl SingleQubitOperator {
    pub const fn new(entries: [[C64; 2]; 2]) -> Self {
        Self { entries }
    }

    pub fn identity() -> Self {
        Self::diagonal(C64::new(1.0, 0.0), C64::new(1.0, 0.0))
    }

    /// Path flip `X_S`.
    pub fn path_flip() -> Self {
        Self::antidiagonal(C64::new(1.0, 0.0), C64::new(1.0, 0.0))
    }

    /// Path phase flip `Z_S`.
    pub fn phase_flip() -> Self {
        Self::diagonal(C64::new(1.0, 0.0), C64::new(-1.0, 0.0))
    }

    pub fn diagonal(d0: C64, d1: C64) -> Self {
        let zero = C64::new(0.0, 0.0);
        Self::new([[d0, zero], [zero, d1]])
    }

    pub fn antidiagonal(upper: C64, lower: C64) -> Self {
        let zero = C64::new(0.0, 0.0);
        Self::new([[zero, upper], [lower, zero]])
    }

    /// Rotation about the y axis, `[[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]]`.
    pub fn ry(theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self::new([[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]])
    }

    /// Rotation about the z axis, `diag(e^{-iθ/2}, e^{iθ/2})`.
    pub fn rz(theta: f64) -> Self {
        Self::diagonal(C64::from_polar(1.0, -theta / 2.0), C64::from_polar(1.0, theta / 2.0))
    }

    /// Integer power of an operator; used for conditional corrections
    /// such as `X_S^k`.
    pub fn pow(&self, exponent: u8) -> Self {
        (0..exponent).fold(Self::identity(), |acc, _| acc * *self)
    }

    pub fn adjoint(&self) -> Self {
        let e = &self.entries;
        Self::new([[e[0][0].conj(), e[1][0].conj()], [e[0][1].conj(), e[1][1].conj()]])
    }

    pub fn scale(&self, factor: C64) -> Self {
        let e = &self.entries;
        Self::new([[e[0][0] * factor, e[0][1] * factor], [e[1][0] * factor, e[1][1] * factor]])
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = (&self.entries, &other.entries);
        Self::new([[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]])
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        (0..2).flat_map(|r| (0..2).map(move |c| (r, c))).map(|(r, c)| (a[r][c] - b[r][c]).norm()).fold(0.0, f64::max)
    }

    pub fn unitarity_deviation(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Self::identity())
    }

    pub fn is_unitary(&self, tolerance: f64) -> bool {
        self.unitarity_deviation() <= tolerance
    }

    /// Applies the matrix to the amplitude pair `(c0, c1)`.
    pub fn apply(&self, amplitudes: [C64; 2]) -> [C64; 2] {
        let e = &self.entries;
        [e[0][0] * amplitudes[0] + e[0][1] * amplitudes[1], e[1][0] * amplitudes[0] + e[1][1] * amplitudes[1]]
    }
}

impl Mul for SingleQubitOperator {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.entries, &rhs.entries);
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Self::new(out)
    }
}

impl fmt::Display for SingleQubitOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = &self.entries;
        write!(f, "[[{}, {}], [{}, {}]]", e[0][0], e[0][1], e[1][0], e[1][1])
    }
}

/// Bob's lump operator `U_B = (1/√2)[[u, v], [-v*, u*]]` with `|u| = |v| = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LumpOperator {
    u: C64,
    v: C64,
}

impl LumpOperator {
    pub fn new(u: C64, v: C64) -> Result<Self, OperatorError> {
        let (u_modulus, v_modulus) = (u.norm(), v.norm());
        if (u_modulus - 1.0).abs() > INPUT_TOLERANCE || (v_modulus - 1.0).abs() > INPUT_TOLERANCE {
            return Err(OperatorError::NonUnimodular { u_modulus, v_modulus });
        }
        Ok(Self { u, v })
    }

    /// `u = e^{i·u_phase}`, `v = e^{i·v_phase}`.
    pub fn from_phases(u_phase: f64, v_phase: f64) -> Self {
        Self { u: C64::from_polar(1.0, u_phase), v: C64::from_polar(1.0, v_phase) }
    }

    pub fn u(&self) -> C64 {
        self.u
    }

    pub fn v(&self) -> C64 {
        self.v
    }

    pub fn matrix(&self) -> SingleQubitOperator {
        SingleQubitOperator::new([[self.u, self.v], [-self.v.conj(), self.u.conj()]])
            .scale(C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0))
    }

    /// `U_0 = diag(u, u*)`, commutes with `σ_z`.
    pub fn diagonal_part(&self) -> SingleQubitOperator {
        SingleQubitOperator::diagonal(self.u, self.u.conj())
    }

    /// `U_1 = antidiag(v, -v*)`, anticommutes with `σ_z`.
    pub fn antidiagonal_part(&self) -> SingleQubitOperator {
        SingleQubitOperator::antidiagonal(self.v, -self.v.conj())
    }

    pub fn decompose(&self) -> (SingleQubitOperator, SingleQubitOperator) {
        (self.diagonal_part(), self.antidiagonal_part())
    }

    /// `U_m` for outcome bit `m`.
    pub fn sub_operator(&self, m: u8) -> SingleQubitOperator {
        if m == 0 {
            self.diagonal_part()
        } else {
            self.antidiagonal_part()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationClass {
    Diagonal,
    Antidiagonal,
    Neither,
}

pub fn classify_rotation(op: &SingleQubitOperator) -> Result<RotationClass, OperatorError> {
    let deviation = op.unitarity_deviation();
    if deviation > INPUT_TOLERANCE {
        return Err(OperatorError::NotUnitary { deviation });
    }
    let e = &op.entries;
    let off_diagonal_zero = e[0][1].norm() <= INTERNAL_TOLERANCE && e[1][0].norm() <= INTERNAL_TOLERANCE;
    let diagonal_zero = e[0][0].norm() <= INTERNAL_TOLERANCE && e[1][1].norm() <= INTERNAL_TOLERANCE;
    Ok(if off_diagonal_zero {
        RotationClass::Diagonal
    } else if diagonal_zero {
        RotationClass::Antidiagonal
    } else {
        RotationClass::Neither
    })
}
