//! Random splitting of prototypical three-dimensional torus flows.
//!
//! The library decomposes a volume-preserving flow on the flat 3-torus into
//! three shear fields, each solvable in closed form, and composes those
//! sub-flows for independent exponential durations. On top of the exact
//! simulator it provides:
//!
//! - tangent-space dynamics: top Lyapunov exponent, full spectrum via QR
//!   accumulation, and the moment Lyapunov function with its eigenfunction;
//! - Lie bracket certificates for hypoellipticity of the one-point, projective,
//!   and two-point chains;
//! - two-point diagnostics: symmetry classes of the pair dynamics, a drift
//!   condition for the twisted observable, and meeting statistics;
//! - passive transport: correlation decay, negative-Sobolev mixing of advected
//!   scalars, and kinematic dynamo growth;
//! - a batch harness with a TOML config format and deterministic outputs.

pub mod fields;
pub mod harness;
pub mod rng;
pub mod splitting;
pub mod stats;
pub mod tangent;
pub mod transport;
pub mod twopoint;
