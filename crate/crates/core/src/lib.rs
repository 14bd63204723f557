//! Simple-motion pursuit-evasion games with `m` pursuers, one evader and
//! unit-norm (geometric) control constraints.
//!
//! * [`classifier`] decides whether a configuration admits an escape
//!   direction (evasion) or not (pursuit), with a certificate.
//! * [`strategies`] holds the closed-form pursuit counter-strategy, the
//!   straight-line evasion strategy and generators of test controls.
//! * [`engine`] integrates piecewise-constant controls exactly and detects
//!   capture at the exact crossing time.
//! * [`theta`] brackets the worst-case closure rate and certifies the
//!   capture-time bound.
//!
//! Vectors live in `R^n` with a user-chosen `n`; see [`vectorspace`] for why
//! this is exact for finitely many players.

pub mod classifier;
pub mod engine;
pub mod error;
pub mod export;
pub mod generators;
pub mod grid;
pub mod lp;
pub mod scenario;
pub mod strategies;
pub mod theta;
pub mod vectorspace;

pub use classifier::{classify, dual_cone_witness, sampling_oracle, Regime, RegimeCertificate};
pub use engine::{
    capture_crossing_time, min_distance_trace, simulate, CaptureEvent, PursuerControlRecord,
    PursuerMode, SimulationOptions, SimulationResult,
};
pub use error::{Error, Result};
pub use scenario::{PursuitFrame, Scenario};
pub use strategies::{
    evasion_control, make_test_control, omega_decrement_rate, pursuer_control, ControlSpec,
    EvaderControl,
};
pub use theta::{estimate_theta, lambda, verify_capture_bound, ThetaOptions, ThetaReport};
pub use vectorspace::{inner, norm, orthonormal_basis_and_rank, unitize, Vec2l};
