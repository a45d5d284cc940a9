//! Simulation of remote preparation of a two-qubit state over two shared
//! entangled pairs.
//!
//! - [`qstate`]: small dense state vectors and unitaries.
//! - [`protocol`]: target and channel types, Alice's measurement, Bob's
//!   correction and auxiliary-qubit stages, and a single-run driver.
//! - [`analysis`]: exact branch reports, the closed-form success
//!   probability `2(ac)²`, and seeded Monte Carlo estimation.

pub mod analysis;
pub mod protocol;
pub mod qstate;

pub use analysis::{
    closed_form_success, exact_branch_report, monte_carlo, oracle_reconstruct, BranchReport,
    MonteCarloSummary,
};
pub use protocol::{
    run_protocol, AliceOutcome, AuxOutcome, ChannelPair, ProtocolError, ProtocolResult,
    RunOptions, TargetState,
};
pub use qstate::{Amplitude, StateVector, UnitaryMatrix};
