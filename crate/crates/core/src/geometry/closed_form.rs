//! Explicit traversing curves, intersecting points and storage values for
//! the Coleman–Hodgdon model and the Dahl model with `r = 1`.
//!
//! These serve as oracles for the generic (numerical) constructions.

use crate::duhem::{ColemanHodgdon, Dahl, DuhemOperator, Model};
use crate::math::{exp, ln};

impl ColemanHodgdon {
    fn k(&self) -> f64 {
        (self.b - self.a) / self.c_alpha
    }

    /// `ω(σ, γ0, v0)`; right branch for `σ ≥ v0`, left otherwise.
    pub fn traversing(&self, gamma0: f64, v0: f64, sigma: f64) -> f64 {
        let e0 = gamma0 - self.b * v0;
        let ca = self.c_alpha;
        if sigma >= v0 {
            self.b * sigma - self.k() + (e0 + self.k()) * exp(-ca * (sigma - v0))
        } else {
            self.b * sigma + self.k() + (e0 - self.k()) * exp(ca * (sigma - v0))
        }
    }

    /// `Ω(γ, v)`. `None` when the curve never meets `f_an` (`b ≤ a`).
    pub fn intersect(&self, gamma: f64, v: f64) -> Option<f64> {
        let k = self.k();
        if k <= 0.0 {
            return None;
        }
        let e0 = gamma - self.b * v;
        let ca = self.c_alpha;
        if e0 >= 0.0 {
            Some(v - ln(k / (e0 + k)) / ca)
        } else {
            Some(v + ln(k / (k - e0)) / ca)
        }
    }

    /// `H_⟲(γ, v)`.
    pub fn storage(&self, gamma: f64, v: f64) -> Option<f64> {
        let u = self.intersect(gamma, v)?;
        let (b, ca, k) = (self.b, self.c_alpha, self.k());
        let base = gamma * v - 0.5 * b * v * v;
        let e0 = gamma - b * v;
        Some(if e0 >= 0.0 {
            base - k * (u - v) + (e0 + k) * (1.0 - exp(ca * (v - u))) / ca
        } else {
            base + k * (u - v) + (e0 - k) * (exp(ca * (u - v)) - 1.0) / ca
        })
    }
}

impl Dahl {
    fn linear(&self) -> bool {
        self.r == 1.0
    }

    /// `ω(σ, γ0, v0)` for `r = 1`.
    pub fn traversing(&self, gamma0: f64, v0: f64, sigma: f64) -> Option<f64> {
        if !self.linear() {
            return None;
        }
        let k = self.rho / self.fc;
        Some(if sigma >= v0 {
            self.fc + (gamma0 - self.fc) * exp(k * (v0 - sigma))
        } else {
            -self.fc + (gamma0 + self.fc) * exp(k * (sigma - v0))
        })
    }

    /// `Λ(γ, v)` for `r = 1` and `|γ| < Fc`.
    pub fn intersect(&self, gamma: f64, v: f64) -> Option<f64> {
        if !self.linear() || gamma.abs() >= self.fc {
            return None;
        }
        let l = self.fc / self.rho;
        Some(if gamma >= 0.0 {
            v + l * ln(self.fc / (gamma + self.fc))
        } else {
            v - l * ln(-self.fc / (gamma - self.fc))
        })
    }

    /// `H_⟳(γ, v)` for `r = 1` and `|γ| < Fc`.
    pub fn storage(&self, gamma: f64, v: f64) -> Option<f64> {
        let u = self.intersect(gamma, v)?;
        let (fc, rho) = (self.fc, self.rho);
        Some(if gamma >= 0.0 {
            -fc * (v - u) + fc / rho * (gamma + fc) * (1.0 - exp(rho / fc * (u - v)))
        } else {
            fc * (v - u) + fc / rho * (gamma - fc) * (exp(rho / fc * (v - u)) - 1.0)
        })
    }
}

/// Closed-form `ω` for a preset operator.
pub fn traversing(op: &DuhemOperator, gamma0: f64, v0: f64, sigma: f64) -> Option<f64> {
    match op.model() {
        Model::ColemanHodgdon(m) => Some(m.traversing(gamma0, v0, sigma)),
        Model::Dahl(m) => m.traversing(gamma0, v0, sigma),
        _ => None,
    }
}

/// Closed-form `Ω` (Coleman–Hodgdon) or `Λ` (Dahl).
pub fn intersect(op: &DuhemOperator, gamma: f64, v: f64) -> Option<f64> {
    match op.model() {
        Model::ColemanHodgdon(m) => m.intersect(gamma, v),
        Model::Dahl(m) => m.intersect(gamma, v),
        _ => None,
    }
}

/// Closed-form `H_⟲` (Coleman–Hodgdon) or `H_⟳` (Dahl).
pub fn storage(op: &DuhemOperator, gamma: f64, v: f64) -> Option<f64> {
    match op.model() {
        Model::ColemanHodgdon(m) => m.storage(gamma, v),
        Model::Dahl(m) => m.storage(gamma, v),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CH: ColemanHodgdon = ColemanHodgdon {
        c_alpha: 1e-2,
        a: 2.5e-3,
        b: 5e-3,
    };
    const DAHL: Dahl = Dahl {
        fc: 0.75,
        rho: 1.5,
        r: 1.0,
    };

    #[test]
    fn spot_values() {
        assert!((CH.traversing(0.0, 0.0, 100.0) - 0.341970).abs() < 1e-6);
        assert!((CH.intersect(0.1, 0.0).unwrap() - 33.6472).abs() < 1e-4);
        assert!((DAHL.intersect(0.5, 0.0).unwrap() + 0.255413).abs() < 1e-6);
        assert!((DAHL.intersect(-0.5, 0.0).unwrap() - 0.255413).abs() < 1e-6);
    }

    #[test]
    fn storage_on_anhysteresis() {
        // on the curve Ω = v, so H_⟲ = γv − F_an(v) = b·v²/2
        for &v in &[-3.0, 0.0, 7.0] {
            let h = CH.storage(CH.b * v, v).unwrap();
            assert!((h - 0.5 * CH.b * v * v).abs() < 1e-14);
            assert!(DAHL.storage(0.0, v).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn traversing_meets_anhysteresis_at_intersection() {
        let u = CH.intersect(0.1, 0.0).unwrap();
        assert!((CH.traversing(0.1, 0.0, u) - CH.b * u).abs() < 1e-12);
        let u = CH.intersect(-0.2, 5.0).unwrap();
        assert!((CH.traversing(-0.2, 5.0, u) - CH.b * u).abs() < 1e-12);
        let l = DAHL.intersect(0.3, 1.0).unwrap();
        assert!(DAHL.traversing(0.3, 1.0, l).unwrap().abs() < 1e-12);
    }
}
