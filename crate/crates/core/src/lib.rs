//! Tunnel-revealing traceroute for MPLS networks, with a deterministic
//! simulator standing in for the real data plane.
//!
//! The pipeline is: [`engine`] probes hop by hop through a [`engine::Prober`],
//! [`classifier`] reads indicators and triggers off each hop, and
//! [`revelation`] tries to expose what a tunnel hides. [`sim`] provides a
//! prober backed by a scenario file, [`engine::live`] one backed by raw sockets.

pub mod classifier;
pub mod engine;
pub mod fingerprint;
pub mod model;
pub mod report;
pub mod revelation;
pub mod sim;

pub use engine::{trace_naughty_tunnel, EngineConfig, Prober};
pub use model::{AnnotatedTrace, Code, RevelationState};
