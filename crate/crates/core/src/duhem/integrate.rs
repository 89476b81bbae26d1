use alloc::format;
use alloc::vec::Vec;

use super::{DuhemOperator, InputSignal};
use crate::math::ceil;
use crate::{Error, Result};

/// One integration node with the cumulative supply integrals
/// `∫ ẏ·u dt` (CCW) and `∫ y·u̇ dt` (CW) since the start.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WorkSample {
    pub t: f64,
    pub u: f64,
    pub y: f64,
    pub work_ccw: f64,
    pub work_cw: f64,
}

/// Integrates the operator along `u` with classical RK4.
///
/// Every sample knot of `u` is a step boundary, so `u̇` and therefore the
/// active branch are constant within a step. Each segment is divided into
/// `ceil(Δt / dt_max)` equal steps. Returns `(t, y)` at every step boundary.
pub fn integrate(op: &DuhemOperator, u: &InputSignal, dt_max: f64) -> Result<Vec<(f64, f64)>> {
    Ok(integrate_with_work(op, u, dt_max)?
        .into_iter()
        .map(|s| (s.t, s.y))
        .collect())
}

/// As [`integrate`], also carrying the supply integrals as extra RK4 states.
pub fn integrate_with_work(
    op: &DuhemOperator,
    u: &InputSignal,
    dt_max: f64,
) -> Result<Vec<WorkSample>> {
    if !(dt_max > 0.0 && dt_max.is_finite()) {
        return Err(Error::InvalidInput(format!("dt_max must be positive, got {dt_max}")));
    }
    let s = u.samples();
    let (t_start, u_start) = s[0];
    let mut out = Vec::new();
    let mut cur = WorkSample {
        t: t_start,
        u: u_start,
        y: op.y0(),
        work_ccw: 0.0,
        work_cw: 0.0,
    };
    out.push(cur);
    let bound = op.blowup_bound();
    for w in s.windows(2) {
        let (t0, u0) = w[0];
        let (t1, u1) = w[1];
        let span = t1 - t0;
        let slope = (u1 - u0) / span;
        let n = (ceil(span / dt_max) as usize).max(1);
        let h = span / n as f64;
        let deriv = |t: f64, y: f64| -> (f64, f64, f64) {
            let uu = u0 + slope * (t - t0);
            let dy = op.branch_rate(y, uu, slope) * slope;
            (dy, dy * uu, y * slope)
        };
        for k in 0..n {
            let ta = t0 + h * k as f64;
            let y = cur.y;
            let k1 = deriv(ta, y);
            let k2 = deriv(ta + 0.5 * h, y + 0.5 * h * k1.0);
            let k3 = deriv(ta + 0.5 * h, y + 0.5 * h * k2.0);
            let k4 = deriv(ta + h, y + h * k3.0);
            let comb = |a: f64, b: f64, c: f64, d: f64| h / 6.0 * (a + 2.0 * b + 2.0 * c + d);
            let tb = if k + 1 == n { t1 } else { ta + h };
            cur = WorkSample {
                t: tb,
                u: if k + 1 == n { u1 } else { u0 + slope * (tb - t0) },
                y: y + comb(k1.0, k2.0, k3.0, k4.0),
                work_ccw: cur.work_ccw + comb(k1.1, k2.1, k3.1, k4.1),
                work_cw: cur.work_cw + comb(k1.2, k2.2, k3.2, k4.2),
            };
            if !cur.y.is_finite() || cur.y.abs() > bound {
                return Err(Error::Blowup {
                    at: tb,
                    value: cur.y.abs(),
                    bound,
                });
            }
            out.push(cur);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::exp;
    use alloc::vec;

    #[test]
    fn constant_input_keeps_output() {
        let op = DuhemOperator::dahl(0.75, 1.5, 1.0).unwrap().with_y0(0.3);
        let u = InputSignal::new(vec![(0.0, 2.0), (5.0, 2.0)]).unwrap();
        for (_, y) in integrate(&op, &u, 1e-2).unwrap() {
            assert_eq!(y, 0.3);
        }
    }

    #[test]
    fn coleman_hodgdon_ramp_matches_closed_form() {
        let (ca, a, b) = (1e-2, 2.5e-3, 5e-3);
        let op = DuhemOperator::coleman_hodgdon(ca, a, b).unwrap();
        let big_u = 800.0;
        let u = InputSignal::new(vec![(0.0, 0.0), (1.0, big_u)]).unwrap();
        let path = integrate(&op, &u, 1e-3).unwrap();
        let y_end = path.last().unwrap().1;
        let asym = b * big_u + (a - b) / ca;
        let exact = asym + ((b - a) / ca) * exp(-ca * big_u);
        assert!((y_end - exact).abs() < 1e-9);
        assert!((y_end - asym).abs() <= exp(-ca * big_u) * asym.abs());
    }

    #[test]
    fn steps_never_straddle_knots() {
        let op = DuhemOperator::dahl(1.0, 1.0, 1.0).unwrap();
        let u = InputSignal::new(vec![(0.0, 0.0), (0.37, 1.0), (1.0, -1.0)]).unwrap();
        let path = integrate(&op, &u, 0.1).unwrap();
        assert!(path.iter().any(|p| p.0 == 0.37));
        assert_eq!(path.last().unwrap().0, 1.0);
    }

    #[test]
    fn blowup_is_reported() {
        use crate::duhem::{AffineRates, Rect};
        let rates = AffineRates { p1: 1.0, q1: 0.0, c1: 0.0, p2: -1.0, q2: 0.0, c2: 0.0 };
        let op = DuhemOperator::affine(rates, Rect::symmetric(1.0, 1.0).unwrap())
            .with_y0(1.0)
            .with_blowup_bound(10.0);
        let u = InputSignal::new(vec![(0.0, 0.0), (1.0, 30.0)]).unwrap();
        assert!(matches!(integrate(&op, &u, 1e-2), Err(Error::Blowup { .. })));
    }
}
