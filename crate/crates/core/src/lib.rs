//! Simulation of feedback-free entanglement guidance for a pair of qubits.
//!
//! Each round a photon-subtracted two-mode squeezed ancilla interacts
//! resonantly with the two qubits (one mode per qubit), both modes are read
//! out by on/off detectors, and the qubit state is kept only for the
//! requested outcome. Repeating coincidences drives the qubits towards the
//! Bell state `(|gg⟩ - |ee⟩)/√2`.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the `*F64` and
//! `*F32` aliases below fix the scalar.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod fock;
pub mod guidance;
pub mod ideal;
pub mod linalg;
pub mod metrics;
pub mod scalar;

pub use dynamics::{
    jc_unitary, oracle_step, projected_operator, ConditionalMap, JcUnitary, Outcome, OutcomeLabel,
};
pub use error::{Error, Result};
pub use fock::{pss_state, tmsv_state, AncillaKind, AncillaState, DEFAULT_TAIL_TOL};
pub use guidance::{
    dominant_eigenpair, fixed_point, guided_evolution, negative_event_step, outcome_sequence,
    step_coefficients, FixedPoint, ProtocolTrace, Source, StepCoefficientTable, Target, TraceStep,
    TrappedState,
};
pub use ideal::{
    effective_operator, ideal_iterate, operator_spectrum, EffectiveOperator, OperatorSpectrum,
};
pub use linalg::CMat;
pub use metrics::{
    fidelity_phi_minus, linear_entropy, negativity, BellState, Metrics, TwoQubitState,
};
pub use scalar::Real;

pub type TwoQubitStateF64 = TwoQubitState<f64>;
pub type TwoQubitStateF32 = TwoQubitState<f32>;
pub type TrappedStateF64 = TrappedState<f64>;
pub type TrappedStateF32 = TrappedState<f32>;
pub type AncillaStateF64 = AncillaState<f64>;
pub type AncillaStateF32 = AncillaState<f32>;
pub type StepCoefficientTableF64 = StepCoefficientTable<f64>;
pub type StepCoefficientTableF32 = StepCoefficientTable<f32>;
pub type EffectiveOperatorF64 = EffectiveOperator<f64>;
pub type EffectiveOperatorF32 = EffectiveOperator<f32>;
pub type ProtocolTraceF64 = ProtocolTrace<f64>;
pub type ProtocolTraceF32 = ProtocolTrace<f32>;
