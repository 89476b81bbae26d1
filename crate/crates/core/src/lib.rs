//! Duhem hysteresis operators and stability certificates for their feedback
//! interconnection with SISO linear systems.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; file formats and the command-line front end live
//! in the `duhem-cli` crate.
//!
//! Module map:
//!
//! * [`duhem`]: rate fields, preset models, directional ODE integration,
//!   existence and CCW/CW classification checks.
//! * [`geometry`]: anhysteresis curve, traversing curves, intersecting
//!   functions and the CCW/CW storage functions, generic and closed form.
//! * [`certify`]: state-space systems, cascades, and verification of the four
//!   interconnection certificates.
//! * [`simulate`]: closed-loop integration with Lyapunov monitoring.
//! * [`synth`]: controller search by cascading and certificate search.
//! * [`catalog`]: the worked examples as ready-made instances.
#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose so that NaN fails positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod catalog;
pub mod certify;
pub mod duhem;
mod error;
pub mod geometry;
pub mod linalg;
mod math;
pub mod simulate;
pub mod synth;

pub use error::{Error, Result};
