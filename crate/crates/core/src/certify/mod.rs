//! SISO state-space systems, plant/controller cascades and verification of
//! the four interconnection certificates.
//!
//! | case | loop     | linear part | operator | certificate          |
//! |------|----------|-------------|----------|----------------------|
//! | a    | positive | S-CCW       | CCW      | `Q`, `ξ`             |
//! | b    | negative | CW          | CCW      | `P`, `L`, `δ`        |
//! | c    | negative | S-CCW       | CW       | `Q`                  |
//! | d    | positive | CW          | CW       | `P`, `L`, `δ`, `η`   |

mod invariant;
mod system;
mod verify;

pub use invariant::{invariant_set, InvariantSetDescriptor};
pub use system::{cascade, LinearSystem, Topology};
pub(crate) use verify::{dc_column, m_ext};
pub use verify::{
    rate_bound, verify, verify_ccw_ccw, verify_ccw_cw, verify_cw_ccw, verify_cw_cw, verify_cw_cw_with_rate,
    Certificate,
    CertificateCcwCcw, CertificateCcwCw, CertificateCwCcw, CertificateCwCw, Condition,
    VerificationReport,
};

use crate::duhem::Orientation;

/// Interconnection case.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Case {
    A,
    B,
    C,
    D,
}

impl Case {
    /// `+1` for positive feedback (`u = y_Φ`), `−1` for negative.
    pub fn sign(self) -> f64 {
        match self {
            Case::A | Case::D => 1.0,
            Case::B | Case::C => -1.0,
        }
    }

    /// Orientation the hysteresis operator must have.
    pub fn operator_orientation(self) -> Orientation {
        match self {
            Case::A | Case::B => Orientation::Ccw,
            Case::C | Case::D => Orientation::Cw,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Case::A => "a",
            Case::B => "b",
            Case::C => "c",
            Case::D => "d",
        }
    }
}

/// Numerical tolerances shared by verification, search and simulation.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerances {
    /// Equality residuals: `eq·(1 + ‖P‖_F)`.
    pub eq: f64,
    /// Semidefinite checks: `psd·(1 + ‖M‖_F)`.
    pub psd: f64,
    /// Strict definiteness: minimum eigenvalue must exceed `pd`.
    pub pd: f64,
    pub root: f64,
    pub quad: f64,
    /// Lyapunov monotonicity: `mono·(1 + max|H|)`.
    pub mono: f64,
    /// Invariant-set convergence.
    pub conv: f64,
    /// Classification margin `ε`.
    pub margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eq: 1e-9,
            psd: 1e-8,
            pd: 1e-10,
            root: 1e-10,
            quad: 1e-9,
            mono: 1e-6,
            conv: 1e-3,
            margin: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn eq_for(&self, norm: f64) -> f64 {
        self.eq * (1.0 + norm)
    }

    pub fn psd_for(&self, norm: f64) -> f64 {
        self.psd * (1.0 + norm)
    }

    pub fn mono_for(&self, h_max: f64) -> f64 {
        self.mono * (1.0 + h_max)
    }
}
