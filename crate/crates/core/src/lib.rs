//! Secrecy-rate analysis for a jammer-assisted link with coexisting active
//! (full-duplex, jamming) and passive eavesdroppers.
//!
//! The crate has three layers:
//!
//! * [`closedform`] holds every analytic outage expression,
//! * [`optimizer`] maximizes the secrecy rate over the AN power split,
//! * [`montecarlo`] is an independent sampler that checks the closed forms.
//!
//! [`cli`] wires them to a small command-line tool.

pub mod beamform;
pub mod cli;
pub mod closedform;
pub mod config;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod optimizer;
pub mod rng;
