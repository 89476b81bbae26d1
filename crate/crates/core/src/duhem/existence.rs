use super::{DuhemOperator, Rect};

/// Sampled check of the one-sided Lipschitz conditions
/// `(γ1 − γ2)(fi(γ1, v) − fi(γ2, v)) ≤ λi (γ1 − γ2)²`.
///
/// `lambda*_max` is the smallest nonnegative constant that works for every
/// sampled pair. `slope*_min/max` are the raw extreme difference quotients.
/// Sampling cannot prove a global bound, so the report also compares the
/// constants found on the rectangle with those on its half-size core:
/// a bound that keeps growing with the window is flagged as unbounded.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExistenceReport {
    pub satisfied: bool,
    pub lambda1_max: f64,
    pub lambda2_max: f64,
    pub slope1_min: f64,
    pub slope1_max: f64,
    pub slope2_min: f64,
    pub slope2_max: f64,
    /// `(γ1, γ2, v)` attaining the largest difference quotient.
    pub worst_pair: (f64, f64, f64),
    pub growth_ratio: f64,
}

const GROWTH_LIMIT: f64 = 1.5;

#[derive(Clone, Copy)]
struct Scan {
    min1: f64,
    max1: f64,
    min2: f64,
    max2: f64,
    worst: (f64, f64, f64),
    worst_val: f64,
}

fn scan(op: &DuhemOperator, rect: &Rect, grid: usize) -> Scan {
    let gs = rect.gamma_grid(grid);
    let vs = rect.v_grid(grid);
    let mut s = Scan {
        min1: f64::INFINITY,
        max1: f64::NEG_INFINITY,
        min2: f64::INFINITY,
        max2: f64::NEG_INFINITY,
        worst: (gs[0], gs[1], vs[0]),
        worst_val: f64::NEG_INFINITY,
    };
    for &v in &vs {
        let r: alloc::vec::Vec<(f64, f64)> = gs.iter().map(|&g| (op.f1(g, v), op.f2(g, v))).collect();
        for i in 0..gs.len() {
            for j in (i + 1)..gs.len() {
                let dg = gs[j] - gs[i];
                let q1 = (r[j].0 - r[i].0) / dg;
                let q2 = (r[j].1 - r[i].1) / dg;
                s.min1 = s.min1.min(q1);
                s.max1 = s.max1.max(q1);
                s.min2 = s.min2.min(q2);
                s.max2 = s.max2.max(q2);
                let q = q1.max(q2);
                if q > s.worst_val || q.is_nan() {
                    s.worst_val = q;
                    s.worst = (gs[j], gs[i], v);
                }
            }
        }
    }
    s
}

pub fn check_existence(op: &DuhemOperator, rect: &Rect, grid: usize) -> ExistenceReport {
    let grid = grid.max(2);
    let full = scan(op, rect, grid);
    let core = scan(op, &rect.core(), grid);
    let l1 = full.max1.max(0.0);
    let l2 = full.max2.max(0.0);
    let c1 = core.max1.max(0.0);
    let c2 = core.max2.max(0.0);
    let ratio = |f: f64, c: f64| {
        if f <= 1e-12 * (1.0 + c) {
            1.0
        } else if c <= 0.0 {
            f64::INFINITY
        } else {
            f / c
        }
    };
    let growth = ratio(l1, c1).max(ratio(l2, c2));
    let satisfied = l1.is_finite() && l2.is_finite() && growth <= GROWTH_LIMIT;
    ExistenceReport {
        satisfied,
        lambda1_max: l1,
        lambda2_max: l2,
        slope1_min: full.min1,
        slope1_max: full.max1,
        slope2_min: full.min2,
        slope2_max: full.max2,
        worst_pair: full.worst,
        growth_ratio: growth,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duhem::RateFields;
    use alloc::sync::Arc;

    struct Quadratic;
    impl RateFields for Quadratic {
        fn f1(&self, g: f64, _v: f64) -> f64 {
            g * g
        }
        fn f2(&self, _g: f64, _v: f64) -> f64 {
            0.0
        }
    }

    #[test]
    fn coleman_hodgdon_slopes() {
        let op = DuhemOperator::coleman_hodgdon(1e-2, 2.5e-3, 5e-3).unwrap();
        let r = check_existence(&op, op.rect(), 21);
        assert!(r.satisfied);
        assert!((r.slope1_max + 1e-2).abs() < 1e-12);
        assert!((r.lambda2_max - 1e-2).abs() < 1e-12);
        assert_eq!(r.lambda1_max, 0.0);
    }

    #[test]
    fn dahl_satisfied() {
        let op = DuhemOperator::dahl(0.75, 1.5, 1.0).unwrap();
        assert!(check_existence(&op, op.rect(), 21).satisfied);
    }

    #[test]
    fn quadratic_is_flagged() {
        let rect = Rect::symmetric(10.0, 1.0).unwrap();
        let op = DuhemOperator::custom(Arc::new(Quadratic), rect, false);
        let r = check_existence(&op, &rect, 21);
        assert!(!r.satisfied);
        let (g1, g2, _) = r.worst_pair;
        assert!(g1 + g2 > 15.0);
    }
}
