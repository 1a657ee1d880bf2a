//! Secure full-duplex two-way SWIPT relaying.
//!
//! Minimizes total transmit power of a two-way amplify-and-forward MIMO relay
//! network with a power-splitting energy harvester and an eavesdropper. The
//! relay beamformer is constrained to the null space of the residual
//! self-interference channel, artificial noise jams the eavesdropper, and the
//! design alternates between three blocks:
//!
//! 1. relay matrix and artificial-noise covariance ([`relay`], a semidefinite
//!    relaxation solved by [`sdp`]),
//! 2. the power-splitting ratio ([`subproblems::optimize_rho`]),
//! 3. the source powers ([`subproblems::optimize_power`]).
//!
//! [`experiment`] wraps the optimizer in seeded Monte Carlo sweeps that
//! compare joint optimization against a relay-only baseline.

pub mod alternating;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod model;
pub mod relay;
pub mod sdp;
pub mod subproblems;

pub use error::{Error, Result};
