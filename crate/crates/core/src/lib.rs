//! Remote implementation of operators over a single shared path Bell pair,
//! with cross-Kerr probes and homodyne read-out.

pub mod homodyne;
pub mod multiparty;
pub mod operator;
pub mod protocol;
pub mod report;
pub mod state;
pub mod verify;

pub type C64 = num_complex::Complex64;

pub use homodyne::{HomodyneError, HomodyneModel, MeasurementRecord};
pub use multiparty::{ControllerChain, ControllerForm, GeneralChannel, MultipartyError, Task};
pub use operator::{classify_rotation, LumpOperator, OperatorError, RotationClass, SingleQubitOperator};
pub use protocol::{
    run_riho, run_ripuo, success_probabilities, ForcedOutcomes, ProtocolError, ProtocolKind, ProtocolResult,
};
pub use state::{BranchState, ChannelVariant, QubitState, StateError};
