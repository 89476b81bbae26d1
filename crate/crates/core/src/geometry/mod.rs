//! Anhysteresis curve, traversing curves, intersecting functions and the
//! CCW/CW storage functions of a Duhem operator.
//!
//! With `F_an(x) = ∫₀ˣ f_an`, the storage functions are evaluated as
//!
//! * `H_⟲(γ, v) = γv + ∫_v^Ω ω(σ) dσ − F_an(Ω)`,
//! * `H_⟳(γ, v) = F_an(Λ) − ∫_v^Λ ω(σ) dσ`,
//!
//! which only need the branch of `ω` between `v` and the intersecting point.

pub mod closed_form;
mod curve;
mod quad;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

pub use curve::TraversingCurve;

use crate::duhem::{integrate_with_work, DuhemOperator, InputSignal};
use crate::{Error, Result};
use quad::adaptive_simpson;

/// Absolute tolerance of the quadrature of `f_an`.
pub const QUAD_TOL: f64 = 1e-9;
const ROOT_ITERS: usize = 200;

/// Which storage function to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Mode {
    Ccw,
    Cw,
}

/// Side of the anhysteresis curve an anchor lies on. Points on the curve
/// count as `Above`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Branch {
    Above,
    Below,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Above => "above",
            Branch::Below => "below",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StorageValue {
    pub value: f64,
    /// `Ω` for CCW, `Λ` for CW.
    pub intersect_point: f64,
    pub branch: Branch,
}

/// `f_an(v)`: closed form when the model has one, otherwise bisection of
/// `f1 − f2` over the γ-range of the working rectangle.
pub fn anhysteresis(op: &DuhemOperator, v: f64) -> Result<f64> {
    if let Some(g) = op.fields().anhysteresis(v) {
        return Ok(g);
    }
    let r = op.rect();
    let g = |x: f64| op.f1(x, v) - op.f2(x, v);
    let (mut lo, mut hi) = (r.gamma_min, r.gamma_max);
    let (glo, ghi) = (g(lo), g(hi));
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    if !(glo.is_finite() && ghi.is_finite()) || (glo > 0.0) == (ghi > 0.0) {
        return Err(Error::NoRoot { v });
    }
    let lo_pos = glo > 0.0;
    for _ in 0..ROOT_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return Ok(mid);
        }
        if (gm > 0.0) == lo_pos {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `f_an′(v)`: closed form or a central difference.
pub fn anhysteresis_slope(op: &DuhemOperator, v: f64) -> Result<f64> {
    if let Some(s) = op.fields().anhysteresis_slope(v) {
        return Ok(s);
    }
    let h = 1e-5 * (1.0 + v.abs());
    Ok((anhysteresis(op, v + h)? - anhysteresis(op, v - h)?) / (2.0 * h))
}

/// `F_an(x) = ∫₀ˣ f_an(σ) dσ`.
pub fn anhysteresis_integral(op: &DuhemOperator, x: f64) -> Result<f64> {
    if let Some(i) = op.fields().anhysteresis_integral(x) {
        return Ok(i);
    }
    adaptive_simpson(|s| anhysteresis(op, s), 0.0, x, QUAD_TOL)
}

/// `(v, f_an(v))` at `n` evenly spaced inputs of `range`.
pub fn sample_anhysteresis(op: &DuhemOperator, range: (f64, f64), n: usize) -> Result<Vec<(f64, f64)>> {
    crate::duhem::linspace(range.0, range.1, n)
        .into_iter()
        .map(|v| Ok((v, anhysteresis(op, v)?)))
        .collect()
}

/// Sampled view of `f_an` on the working rectangle.
#[derive(Clone, Debug)]
pub struct AnhysteresisCurve<'a> {
    op: &'a DuhemOperator,
    pub monotone_increasing: bool,
    pub zero_at_origin: bool,
    /// Largest `|f1 − f2|` at the sampled roots.
    pub max_residual: f64,
}

impl<'a> AnhysteresisCurve<'a> {
    pub fn resolve(op: &'a DuhemOperator, grid: usize) -> Result<Self> {
        let vs = op.rect().v_grid(grid);
        let mut prev = f64::NEG_INFINITY;
        let mut monotone = true;
        let mut residual: f64 = 0.0;
        for &v in &vs {
            let g = anhysteresis(op, v)?;
            monotone &= g > prev;
            prev = g;
            residual = residual.max((op.f1(g, v) - op.f2(g, v)).abs());
        }
        let zero = anhysteresis(op, 0.0)?.abs() <= 1e-9 * op.output_scale();
        Ok(Self {
            op,
            monotone_increasing: monotone,
            zero_at_origin: zero,
            max_residual: residual,
        })
    }

    pub fn eval(&self, v: f64) -> Result<f64> {
        anhysteresis(self.op, v)
    }
}

/// Evaluation context holding traversing curves memoized per anchor.
///
/// A context is confined to one thread of evaluation; create one per worker.
pub struct Context<'a> {
    op: &'a DuhemOperator,
    curves: BTreeMap<(u64, u64, bool), TraversingCurve<'a>>,
    capacity: usize,
}

impl<'a> Context<'a> {
    pub fn new(op: &'a DuhemOperator) -> Self {
        Self {
            op,
            curves: BTreeMap::new(),
            capacity: 256,
        }
    }

    pub fn op(&self) -> &'a DuhemOperator {
        self.op
    }

    fn curve(&mut self, gamma: f64, v: f64, rightward: bool) -> &mut TraversingCurve<'a> {
        let key = (gamma.to_bits(), v.to_bits(), rightward);
        if !self.curves.contains_key(&key) && self.curves.len() >= self.capacity {
            self.curves.clear();
        }
        let op = self.op;
        self.curves
            .entry(key)
            .or_insert_with(|| TraversingCurve::new(op, gamma, v, rightward))
    }

    /// `ω_Φ(v, γ0, v0)`.
    pub fn traversing(&mut self, gamma0: f64, v0: f64, v: f64) -> Result<f64> {
        if v == v0 {
            return Ok(gamma0);
        }
        self.curve(gamma0, v0, v > v0).eval(v)
    }

    fn intersect(&mut self, gamma: f64, v: f64, mode: Mode) -> Result<(f64, Branch)> {
        let op = self.op;
        let fan = anhysteresis(op, v)?;
        let branch = if gamma >= fan {
            Branch::Above
        } else {
            Branch::Below
        };
        if gamma == fan {
            return Ok((v, branch));
        }
        // CCW: above moves right on f1; CW: above moves left on f2.
        let rightward = (branch == Branch::Above) == (mode == Mode::Ccw);
        let curve = self.curve(gamma, v, rightward);
        match curve.crossing(|s| anhysteresis(op, s))? {
            Some(x) => Ok((x, branch)),
            None => Err(Error::NoIntersect { gamma, v }),
        }
    }

    /// `Ω(γ, v)`.
    pub fn intersect_ccw(&mut self, gamma: f64, v: f64) -> Result<f64> {
        Ok(self.intersect(gamma, v, Mode::Ccw)?.0)
    }

    /// `Λ(γ, v)`.
    pub fn intersect_cw(&mut self, gamma: f64, v: f64) -> Result<f64> {
        Ok(self.intersect(gamma, v, Mode::Cw)?.0)
    }

    pub fn storage(&mut self, gamma: f64, v: f64, mode: Mode) -> Result<StorageValue> {
        let (x, branch) = self.intersect(gamma, v, mode)?;
        let op = self.op;
        let int_omega = if x == v {
            0.0
        } else {
            let rightward = x > v;
            self.curve(gamma, v, rightward).integral(x)?
        };
        let f_int = anhysteresis_integral(op, x)?;
        let value = match mode {
            Mode::Ccw => gamma * v + int_omega - f_int,
            Mode::Cw => f_int - int_omega,
        };
        Ok(StorageValue {
            value,
            intersect_point: x,
            branch,
        })
    }

    /// `H_⟲(γ, v)`.
    pub fn storage_ccw(&mut self, gamma: f64, v: f64) -> Result<StorageValue> {
        self.storage(gamma, v, Mode::Ccw)
    }

    /// `H_⟳(γ, v)`.
    pub fn storage_cw(&mut self, gamma: f64, v: f64) -> Result<StorageValue> {
        self.storage(gamma, v, Mode::Cw)
    }
}

/// `ω_Φ(v, γ0, v0)`: integrates `z′ = f1` rightward or `z′ = f2` leftward
/// from the anchor `(γ0, v0)`.
pub fn traversing(op: &DuhemOperator, gamma0: f64, v0: f64, v: f64) -> Result<f64> {
    Context::new(op).traversing(gamma0, v0, v)
}

/// CCW intersecting function `Ω(γ, v)`.
pub fn intersect_ccw(op: &DuhemOperator, gamma: f64, v: f64) -> Result<f64> {
    Context::new(op).intersect_ccw(gamma, v)
}

/// CW intersecting function `Λ(γ, v)`.
pub fn intersect_cw(op: &DuhemOperator, gamma: f64, v: f64) -> Result<f64> {
    Context::new(op).intersect_cw(gamma, v)
}

/// CCW storage function `H_⟲(γ, v)`.
pub fn storage_ccw(op: &DuhemOperator, gamma: f64, v: f64) -> Result<StorageValue> {
    Context::new(op).storage_ccw(gamma, v)
}

/// CW storage function `H_⟳(γ, v)`.
pub fn storage_cw(op: &DuhemOperator, gamma: f64, v: f64) -> Result<StorageValue> {
    Context::new(op).storage_cw(gamma, v)
}

/// Largest per-step violation of the dissipation inequality along the
/// operator's response to `u`, normalized by the step length:
/// `max_k (ΔH − ∫ ẏ·u dt) / Δt` for CCW and `max_k (ΔH − ∫ y·u̇ dt) / Δt`
/// for CW. The supply integral is carried as an extra RK4 state.
pub fn dissipation_check(
    op: &DuhemOperator,
    u: &InputSignal,
    mode: Mode,
    dt_max: f64,
) -> Result<f64> {
    let path = integrate_with_work(op, u, dt_max)?;
    let mut ctx = Context::new(op);
    let mut h_prev = ctx.storage(path[0].y, path[0].u, mode)?.value;
    let mut worst = f64::NEG_INFINITY;
    for w in path.windows(2) {
        let h_next = ctx.storage(w[1].y, w[1].u, mode)?.value;
        let supply = match mode {
            Mode::Ccw => w[1].work_ccw - w[0].work_ccw,
            Mode::Cw => w[1].work_cw - w[0].work_cw,
        };
        let dt = w[1].t - w[0].t;
        worst = worst.max((h_next - h_prev - supply) / dt);
        h_prev = h_next;
    }
    Ok(if worst.is_finite() { worst } else { 0.0 })
}

/// Result of probing `H` along rays away from the anhysteresis curve.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RadialProbe {
    pub monotone: bool,
    pub at_curve: f64,
    /// `(offset, H)` for `γ = f_an(v) + offset`.
    pub above: Vec<(f64, f64)>,
    /// `(offset, H)` for `γ = f_an(v) − offset`.
    pub below: Vec<(f64, f64)>,
    /// First `(γ, H)` where growth stopped.
    pub witness: Option<(f64, f64)>,
}

/// Evaluates `H` at `γ = f_an(v) ± d` for the increasing offsets `d` and
/// checks that it grows strictly on both sides.
pub fn radial_probe(op: &DuhemOperator, v: f64, offsets: &[f64], mode: Mode) -> Result<RadialProbe> {
    let mut ctx = Context::new(op);
    let fan = anhysteresis(op, v)?;
    let at_curve = ctx.storage(fan, v, mode)?.value;
    let mut witness = None;
    let mut sides: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
    for (side, sign) in [(0usize, 1.0), (1usize, -1.0)] {
        let mut prev = at_curve;
        for &d in offsets {
            let g = fan + sign * d;
            let h = ctx.storage(g, v, mode)?.value;
            if !(h > prev) && witness.is_none() {
                witness = Some((g, h));
            }
            prev = h;
            sides[side].push((d, h));
        }
    }
    let [above, below] = sides;
    Ok(RadialProbe {
        monotone: witness.is_none(),
        at_curve,
        above,
        below,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duhem::{AffineRates, Rect};
    use alloc::sync::Arc;

    fn ch() -> DuhemOperator {
        DuhemOperator::coleman_hodgdon(1e-2, 2.5e-3, 5e-3).unwrap()
    }

    fn dahl() -> DuhemOperator {
        DuhemOperator::dahl(0.75, 1.5, 1.0).unwrap()
    }

    #[test]
    fn anhysteresis_examples() {
        assert!((anhysteresis(&ch(), 10.0).unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(anhysteresis(&dahl(), 3.0).unwrap(), 0.0);
        let rect = Rect::symmetric(10.0, 10.0).unwrap();
        let op = DuhemOperator::custom(Arc::new(AffineRates::symmetric(0.475, 0.3)), rect, false);
        let g = anhysteresis(&op, 2.0).unwrap();
        assert!((g - 0.95).abs() < 1e-12);
        assert!((op.f1(g, 2.0) - op.f2(g, 2.0)).abs() < 1e-10);
    }

    #[test]
    fn traversing_spot_values() {
        let v = traversing(&ch(), 0.0, 0.0, 100.0).unwrap();
        assert!((v - 0.341970).abs() < 1e-6);
        assert_eq!(traversing(&ch(), 0.3, 2.0, 2.0).unwrap(), 0.3);
        let op = dahl();
        let far = traversing(&op, 0.0, 0.0, 7.0).unwrap();
        let exact = closed_form::traversing(&op, 0.0, 0.0, 7.0).unwrap();
        assert!((far - exact).abs() < 1e-8 * exact);
        assert!((far - 0.75).abs() < 1e-6);
    }

    #[test]
    fn intersections() {
        let o = intersect_ccw(&ch(), 0.1, 0.0).unwrap();
        assert!((o - 33.6472).abs() < 1e-4);
        assert!(intersect_ccw(&ch(), -0.1, 0.0).unwrap() < 0.0);
        let l = intersect_cw(&dahl(), 0.5, 0.0).unwrap();
        assert!((l + 0.255413).abs() < 1e-6);
        let l = intersect_cw(&dahl(), -0.5, 0.0).unwrap();
        assert!((l - 0.255413).abs() < 1e-6);
    }

    #[test]
    fn storage_matches_closed_form() {
        let op = ch();
        let s = storage_ccw(&op, 0.1, 0.0).unwrap();
        let c = closed_form::storage(&op, 0.1, 0.0).unwrap();
        assert!((s.value - c).abs() <= 1e-6 * c.abs());
        assert_eq!(s.branch, Branch::Above);
        let op = dahl();
        let s = storage_cw(&op, 0.5, 0.0).unwrap();
        let c = closed_form::storage(&op, 0.5, 0.0).unwrap();
        assert!((s.value - c).abs() <= 1e-6 * c.abs());
        assert_eq!(storage_cw(&op, 0.0, 1.3).unwrap().value, 0.0);
        assert_eq!(storage_ccw(&ch(), 0.0, 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn no_intersect_outside_window() {
        let op = ch();
        // below the curve near the left edge: the crossing lies beyond v_min
        let r = storage_ccw(&op, -5.2, -990.0);
        assert!(matches!(r, Err(Error::NoIntersect { .. })));
    }
}
