//! Simulator for two-way ("ping-pong") quantum communication protocols under
//! invisible-photon eavesdropping.
//!
//! The crate is layered bottom-up:
//!
//! * [`quantum`]: pure-state registers, unitaries, Z/X/rotated/Bell measurements.
//! * [`optics`]: wavelength-tagged photons, pulses, detectors, filters.
//! * [`adversaries`]: channel hooks for the attacks.
//! * [`protocols`]: one-round state machines for the four protocols.
//! * [`harness`]: seeded sessions, statistics and information estimates.
//! * [`report`]: text renderings of session statistics.
//!
//! ```
//! use pingpong_core::{run_session, ProtocolConfig, ProtocolKind, StrategyKind};
//!
//! let cfg = ProtocolConfig::canonical(ProtocolKind::PpEpr);
//! let stats = run_session(&cfg, &StrategyKind::ipe()).unwrap().stats;
//! assert_eq!(stats.eve_accuracy, Some(1.0));
//! assert_eq!(stats.qber, 0.0);
//! assert_eq!(stats.anomaly_count, 0);
//! ```

pub mod adversaries;
pub mod harness;
pub mod optics;
pub mod protocols;
pub mod quantum;
pub mod report;

pub use adversaries::{Adversary, Guess, StrategyError, StrategyKind};
pub use harness::{
    channel_information, mutual_information, qber, run_session, run_session_with, Execution,
    JointCounts, RunStats, SessionError, SessionOutput, StatsError,
};
pub use optics::{Band, Detector, Lab, Leg, OpticalFilter, Photon, Pulse};
pub use protocols::{ConfigError, Decoded, Mode, ProtocolConfig, ProtocolKind, RoundRecord};
pub use quantum::{
    BellKind, MeasureBasis, QuantumError, QuantumRegister, SingleState, UnitaryKind,
};
