//! Duhem hysteresis operators and their directional ODE.
//!
//! An operator maps an absolutely continuous input `u` to the output `y`
//! solving `ẏ = f1(y, u)·max(0, u̇) + f2(y, u)·min(0, u̇)`, `y(0) = y0`.

mod classify;
mod existence;
mod integrate;
mod models;

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

pub use classify::{classify, Classification, ClassificationReport, Orientation, Witness};
pub use existence::{check_existence, ExistenceReport};
pub use integrate::{integrate, integrate_with_work, WorkSample};
pub use models::{AffineRates, ColemanHodgdon, Dahl, Model, RateFields};

use crate::{Error, Result};

/// Axis-aligned window in the `(γ, v)` plane used for sampling checks.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rect {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Rect {
    pub fn new(gamma: (f64, f64), v: (f64, f64)) -> Result<Self> {
        let r = Self {
            gamma_min: gamma.0,
            gamma_max: gamma.1,
            v_min: v.0,
            v_max: v.1,
        };
        let ok = [r.gamma_min, r.gamma_max, r.v_min, r.v_max]
            .iter()
            .all(|x| x.is_finite())
            && r.gamma_min < r.gamma_max
            && r.v_min < r.v_max;
        if !ok {
            return Err(Error::InvalidInput(format!("degenerate rectangle {r:?}")));
        }
        Ok(r)
    }

    /// `γ ∈ [−g, g]`, `v ∈ [−w, w]`.
    pub fn symmetric(g: f64, w: f64) -> Result<Self> {
        Self::new((-g, g), (-w, w))
    }

    pub fn contains(&self, gamma: f64, v: f64) -> bool {
        gamma >= self.gamma_min && gamma <= self.gamma_max && v >= self.v_min && v <= self.v_max
    }

    /// Same center, half the side lengths.
    pub fn core(&self) -> Self {
        let gc = 0.5 * (self.gamma_min + self.gamma_max);
        let vc = 0.5 * (self.v_min + self.v_max);
        let gh = 0.25 * (self.gamma_max - self.gamma_min);
        let vh = 0.25 * (self.v_max - self.v_min);
        Self {
            gamma_min: gc - gh,
            gamma_max: gc + gh,
            v_min: vc - vh,
            v_max: vc + vh,
        }
    }

    pub fn gamma_grid(&self, n: usize) -> Vec<f64> {
        linspace(self.gamma_min, self.gamma_max, n)
    }

    pub fn v_grid(&self, n: usize) -> Vec<f64> {
        linspace(self.v_min, self.v_max, n)
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * (i as f64) / ((n - 1) as f64)
            }
        })
        .collect()
}

/// A Duhem operator: rate fields, initial output and working rectangle.
#[derive(Clone, Debug)]
pub struct DuhemOperator {
    model: Model,
    y0: f64,
    rect: Rect,
    restricted: bool,
    blowup_bound: f64,
}

impl DuhemOperator {
    fn build(model: Model, rect: Rect, restricted: bool) -> Self {
        let mut op = Self {
            model,
            y0: 0.0,
            rect,
            restricted,
            blowup_bound: 0.0,
        };
        op.blowup_bound = 1e6 * op.output_scale();
        op
    }

    /// Coleman–Hodgdon preset. Default window `v ∈ ±10/Cα`,
    /// `γ ∈ ±(10b + a)/Cα`, wide enough to contain the intersecting points
    /// of anchors near the origin.
    pub fn coleman_hodgdon(c_alpha: f64, a: f64, b: f64) -> Result<Self> {
        if !(c_alpha > 0.0 && a > 0.0 && b > 0.0) {
            return Err(Error::InvalidInput(format!(
                "Coleman-Hodgdon needs Calpha, a, b > 0 (got {c_alpha}, {a}, {b})"
            )));
        }
        let rect = Rect::symmetric((10.0 * b + a) / c_alpha, 10.0 / c_alpha)?;
        Ok(Self::build(
            Model::ColemanHodgdon(ColemanHodgdon { c_alpha, a, b }),
            rect,
            false,
        ))
    }

    /// Dahl preset with `r ≥ 1`. Default window `±10·Fc` on both axes.
    pub fn dahl(fc: f64, rho: f64, r: f64) -> Result<Self> {
        if !(fc > 0.0 && rho > 0.0) {
            return Err(Error::InvalidInput(format!(
                "Dahl needs Fc, rho > 0 (got {fc}, {rho})"
            )));
        }
        if !(r >= 1.0 && r.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "Dahl exponent r={r} is not C1 at |gamma|=Fc; r >= 1 is required"
            )));
        }
        let rect = Rect::symmetric(10.0 * fc, 10.0 * fc)?;
        Ok(Self::build(Model::Dahl(Dahl { fc, rho, r }), rect, false))
    }

    pub fn affine(rates: AffineRates, rect: Rect) -> Self {
        Self::build(Model::Affine(rates), rect, false)
    }

    /// User-supplied rate fields. With `restricted`, evaluating outside
    /// `rect` is a [`Error::Domain`] error.
    pub fn custom(fields: Arc<dyn RateFields>, rect: Rect, restricted: bool) -> Self {
        Self::build(Model::Custom(fields), rect, restricted)
    }

    pub fn with_y0(mut self, y0: f64) -> Self {
        self.y0 = y0;
        self
    }

    pub fn with_rect(mut self, rect: Rect) -> Self {
        self.rect = rect;
        self.blowup_bound = 1e6 * self.output_scale();
        self
    }

    pub fn with_blowup_bound(mut self, bound: f64) -> Self {
        self.blowup_bound = bound;
        self
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn rect(&self) -> &Rect {
        &self.rect
    }

    pub fn is_restricted(&self) -> bool {
        self.restricted
    }

    pub fn blowup_bound(&self) -> f64 {
        self.blowup_bound
    }

    /// Characteristic output magnitude: `Fc` for Dahl,
    /// `max(1, b·max|v|)` for Coleman–Hodgdon, the γ-extent otherwise.
    pub fn output_scale(&self) -> f64 {
        match &self.model {
            Model::Dahl(d) => d.fc,
            Model::ColemanHodgdon(ch) => {
                (ch.b * self.rect.v_min.abs().max(self.rect.v_max.abs())).max(1.0)
            }
            _ => self
                .rect
                .gamma_min
                .abs()
                .max(self.rect.gamma_max.abs())
                .max(1.0),
        }
    }

    #[inline]
    pub fn f1(&self, gamma: f64, v: f64) -> f64 {
        self.model.fields().f1(gamma, v)
    }

    #[inline]
    pub fn f2(&self, gamma: f64, v: f64) -> f64 {
        self.model.fields().f2(gamma, v)
    }

    pub(crate) fn fields(&self) -> &dyn RateFields {
        self.model.fields()
    }

    /// Slope of the active branch for input direction `sign(u̇)`.
    #[inline]
    pub(crate) fn branch_rate(&self, gamma: f64, v: f64, direction: f64) -> f64 {
        if direction > 0.0 {
            self.f1(gamma, v)
        } else if direction < 0.0 {
            self.f2(gamma, v)
        } else {
            0.0
        }
    }
}

/// `(f1(γ, v), f2(γ, v))`.
pub fn eval_rates(op: &DuhemOperator, gamma: f64, v: f64) -> Result<(f64, f64)> {
    if op.restricted && !op.rect.contains(gamma, v) {
        return Err(Error::Domain { gamma, v });
    }
    Ok((op.f1(gamma, v), op.f2(gamma, v)))
}

/// Piecewise-linear input `u(t)` through strictly time-ordered samples.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InputSignal {
    samples: Vec<(f64, f64)>,
}

impl InputSignal {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "an input signal needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|(t, u)| !t.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidInput("non-finite input sample".into()));
        }
        if let Some(w) = samples.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidInput(format!(
                "sample times must increase strictly ({} then {})",
                w[0].0, w[1].0
            )));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn start(&self) -> f64 {
        self.samples[0].0
    }

    pub fn end(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    /// Linear interpolation, clamped to the end values outside the support.
    pub fn value_at(&self, t: f64) -> f64 {
        let s = &self.samples;
        if t <= s[0].0 {
            return s[0].1;
        }
        if t >= s[s.len() - 1].0 {
            return s[s.len() - 1].1;
        }
        let k = s.partition_point(|p| p.0 <= t) - 1;
        let (t0, u0) = s[k];
        let (t1, u1) = s[k + 1];
        u0 + (u1 - u0) * (t - t0) / (t1 - t0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_rates_match_formulas() {
        let d = DuhemOperator::dahl(0.75, 1.5, 1.0).unwrap();
        assert_eq!(eval_rates(&d, 0.0, 3.0).unwrap(), (1.5, 1.5));
        let ch = DuhemOperator::coleman_hodgdon(1e-2, 2.5e-3, 5e-3).unwrap();
        let (f1, f2) = eval_rates(&ch, 0.0, 0.0).unwrap();
        assert!((f1 - 2.5e-3).abs() < 1e-18 && (f2 - 2.5e-3).abs() < 1e-18);
    }

    #[test]
    fn restricted_custom_rejects_outside_points() {
        let rect = Rect::symmetric(1.0, 1.0).unwrap();
        let op = DuhemOperator::custom(
            Arc::new(AffineRates::symmetric(0.475, 0.3)),
            rect,
            true,
        );
        assert!(eval_rates(&op, 0.5, 0.5).is_ok());
        assert_eq!(
            eval_rates(&op, 2.0, 0.0),
            Err(Error::Domain { gamma: 2.0, v: 0.0 })
        );
    }

    #[test]
    fn dahl_rejects_small_exponent() {
        assert!(DuhemOperator::dahl(1.0, 1.0, 0.5).is_err());
        assert!(DuhemOperator::dahl(1.0, 1.0, 2.0).is_ok());
    }

    #[test]
    fn input_signal_validation_and_interpolation() {
        assert!(InputSignal::new(alloc::vec![(0.0, 1.0)]).is_err());
        assert!(InputSignal::new(alloc::vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        let u = InputSignal::new(alloc::vec![(0.0, 0.0), (1.0, 2.0), (3.0, -2.0)]).unwrap();
        assert_eq!(u.value_at(0.5), 1.0);
        assert_eq!(u.value_at(2.0), 0.0);
        assert_eq!(u.value_at(5.0), -2.0);
    }
}
