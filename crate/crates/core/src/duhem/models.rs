use alloc::sync::Arc;
use core::fmt;

use crate::math::powf;

/// Directional rate fields of a Duhem operator,
/// `ẏ = f1(y, u)·max(0, u̇) + f2(y, u)·min(0, u̇)`.
///
/// The optional methods expose closed forms for the anhysteresis curve
/// `f_an` (where `f1 = f2`). When they return `None` the geometry module
/// falls back to root finding and quadrature.
pub trait RateFields: Send + Sync {
    fn f1(&self, gamma: f64, v: f64) -> f64;
    fn f2(&self, gamma: f64, v: f64) -> f64;

    fn anhysteresis(&self, _v: f64) -> Option<f64> {
        None
    }

    fn anhysteresis_slope(&self, _v: f64) -> Option<f64> {
        None
    }

    /// `∫₀ᵛ f_an(σ) dσ`.
    fn anhysteresis_integral(&self, _v: f64) -> Option<f64> {
        None
    }
}

/// Coleman–Hodgdon model with `f(u) = b·u` and `g(u) = a`:
/// `f1 = Cα(bv − γ) + a`, `f2 = −Cα(bv − γ) + a`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ColemanHodgdon {
    pub c_alpha: f64,
    pub a: f64,
    pub b: f64,
}

impl RateFields for ColemanHodgdon {
    fn f1(&self, gamma: f64, v: f64) -> f64 {
        self.c_alpha * (self.b * v - gamma) + self.a
    }

    fn f2(&self, gamma: f64, v: f64) -> f64 {
        -self.c_alpha * (self.b * v - gamma) + self.a
    }

    fn anhysteresis(&self, v: f64) -> Option<f64> {
        Some(self.b * v)
    }

    fn anhysteresis_slope(&self, _v: f64) -> Option<f64> {
        Some(self.b)
    }

    fn anhysteresis_integral(&self, v: f64) -> Option<f64> {
        Some(0.5 * self.b * v * v)
    }
}

/// Dahl friction model, `f1 = ρ·⟨1 − γ/Fc⟩^r`, `f2 = ρ·⟨1 + γ/Fc⟩^r`, where
/// `⟨x⟩^r = sign(x)|x|^r`. Only `r ≥ 1` is accepted so the fields stay C¹.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dahl {
    pub fc: f64,
    pub rho: f64,
    pub r: f64,
}

fn signed_pow(x: f64, r: f64) -> f64 {
    if r == 1.0 {
        x
    } else {
        x.signum() * powf(x.abs(), r)
    }
}

impl RateFields for Dahl {
    fn f1(&self, gamma: f64, _v: f64) -> f64 {
        self.rho * signed_pow(1.0 - gamma / self.fc, self.r)
    }

    fn f2(&self, gamma: f64, _v: f64) -> f64 {
        self.rho * signed_pow(1.0 + gamma / self.fc, self.r)
    }

    fn anhysteresis(&self, _v: f64) -> Option<f64> {
        Some(0.0)
    }

    fn anhysteresis_slope(&self, _v: f64) -> Option<f64> {
        Some(0.0)
    }

    fn anhysteresis_integral(&self, _v: f64) -> Option<f64> {
        Some(0.0)
    }
}

/// Rate fields affine in both arguments:
/// `f1 = p1·γ + q1·v + c1`, `f2 = p2·γ + q2·v + c2`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AffineRates {
    pub p1: f64,
    pub q1: f64,
    pub c1: f64,
    pub p2: f64,
    pub q2: f64,
    pub c2: f64,
}

impl AffineRates {
    /// `f1 = −(γ − k·v) + c`, `f2 = (γ − k·v) + c`; anhysteresis `k·v`.
    pub fn symmetric(k: f64, c: f64) -> Self {
        Self {
            p1: -1.0,
            q1: k,
            c1: c,
            p2: 1.0,
            q2: -k,
            c2: c,
        }
    }

    fn an_coeffs(&self) -> Option<(f64, f64)> {
        let dp = self.p1 - self.p2;
        if dp == 0.0 {
            return None;
        }
        Some((-(self.q1 - self.q2) / dp, -(self.c1 - self.c2) / dp))
    }
}

impl RateFields for AffineRates {
    fn f1(&self, gamma: f64, v: f64) -> f64 {
        self.p1 * gamma + self.q1 * v + self.c1
    }

    fn f2(&self, gamma: f64, v: f64) -> f64 {
        self.p2 * gamma + self.q2 * v + self.c2
    }

    fn anhysteresis(&self, v: f64) -> Option<f64> {
        self.an_coeffs().map(|(k, c)| k * v + c)
    }

    fn anhysteresis_slope(&self, _v: f64) -> Option<f64> {
        self.an_coeffs().map(|(k, _)| k)
    }

    fn anhysteresis_integral(&self, v: f64) -> Option<f64> {
        self.an_coeffs().map(|(k, c)| 0.5 * k * v * v + c * v)
    }
}

/// The rate-field family of an operator.
#[derive(Clone)]
pub enum Model {
    ColemanHodgdon(ColemanHodgdon),
    Dahl(Dahl),
    Affine(AffineRates),
    Custom(Arc<dyn RateFields>),
}

impl Model {
    pub fn tag(&self) -> &'static str {
        match self {
            Model::ColemanHodgdon(_) => "coleman_hodgdon",
            Model::Dahl(_) => "dahl",
            Model::Affine(_) => "affine",
            Model::Custom(_) => "custom",
        }
    }

    pub(crate) fn fields(&self) -> &dyn RateFields {
        match self {
            Model::ColemanHodgdon(m) => m,
            Model::Dahl(m) => m,
            Model::Affine(m) => m,
            Model::Custom(m) => m.as_ref(),
        }
    }

    pub fn is_preset(&self) -> bool {
        matches!(self, Model::ColemanHodgdon(_) | Model::Dahl(_))
    }
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::ColemanHodgdon(m) => f.debug_tuple("ColemanHodgdon").field(m).finish(),
            Model::Dahl(m) => f.debug_tuple("Dahl").field(m).finish(),
            Model::Affine(m) => f.debug_tuple("Affine").field(m).finish(),
            Model::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}
