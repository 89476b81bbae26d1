use alloc::vec::Vec;

use super::{DuhemOperator, Rect};
use crate::geometry::{anhysteresis, anhysteresis_slope};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Orientation {
    Ccw,
    Cw,
    Neither,
}

impl Orientation {
    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::Ccw => "CCW",
            Orientation::Cw => "CW",
            Orientation::Neither => "Neither",
        }
    }
}

/// A sampled point where a classification condition failed. `value` is the
/// signed amount by which it failed.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Witness {
    pub condition: &'static str,
    pub gamma: f64,
    pub v: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ClassificationReport {
    pub margin: f64,
    pub total_samples: usize,
    /// Samples with `f1 > ε` and `f2 > ε`, where the hypotheses are tested.
    pub admissible_samples: usize,
    pub ordering_ok: bool,
    pub f_an_monotone: bool,
    pub f_an_zero_at_origin: bool,
    pub ccw_slope_ok: bool,
    pub cw_slope_ok: bool,
    pub ccw_witnesses: Vec<Witness>,
    pub cw_witnesses: Vec<Witness>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Classification {
    pub orientation: Orientation,
    pub report: ClassificationReport,
}

const MAX_WITNESSES: usize = 8;

fn push(list: &mut Vec<Witness>, w: Witness) {
    if list.len() < MAX_WITNESSES {
        list.push(w);
    }
}

/// Sampled check of the CCW and CW hypotheses on a `grid × grid` lattice.
///
/// The hypotheses are tested where both rates exceed the margin `ε` (the
/// forward-invariant band of the operator); the number of such samples is
/// reported. CCW needs the rate ordering, a strictly increasing `f_an` and
/// `f1 < f_an′ − ε` above / `f2 < f_an′ − ε` below the curve. CW needs the
/// ordering, `f_an(0) = 0` and `f1 > f_an′ + ε` above / `f2 > f_an′ + ε` below.
pub fn classify(op: &DuhemOperator, rect: &Rect, grid: usize, margin: f64) -> Result<Classification> {
    let grid = grid.max(2);
    let gs = rect.gamma_grid(grid);
    let vs = rect.v_grid(grid);
    let rates: Vec<Vec<(f64, f64)>> = vs
        .iter()
        .map(|&v| gs.iter().map(|&g| (op.f1(g, v), op.f2(g, v))).collect())
        .collect();
    degeneracy(&rates, &gs, &vs)?;

    let mut fan = Vec::with_capacity(vs.len());
    let mut slope = Vec::with_capacity(vs.len());
    for &v in &vs {
        fan.push(anhysteresis(op, v)?);
        slope.push(anhysteresis_slope(op, v)?);
    }
    let scale = op.output_scale();
    let f_an_monotone = fan.windows(2).all(|w| w[1] > w[0]) && slope.iter().all(|&s| s > 0.0);
    let f_an_zero_at_origin = anhysteresis(op, 0.0)?.abs() <= 1e-9 * scale;

    let mut report = ClassificationReport {
        margin,
        total_samples: gs.len() * vs.len(),
        admissible_samples: 0,
        ordering_ok: true,
        f_an_monotone,
        f_an_zero_at_origin,
        ccw_slope_ok: true,
        cw_slope_ok: true,
        ccw_witnesses: Vec::new(),
        cw_witnesses: Vec::new(),
    };
    for (iv, &v) in vs.iter().enumerate() {
        let (fa, ds) = (fan[iv], slope[iv]);
        for (ig, &g) in gs.iter().enumerate() {
            let (f1, f2) = rates[iv][ig];
            if !(f1 > margin && f2 > margin) {
                continue;
            }
            report.admissible_samples += 1;
            if (g - fa).abs() <= 1e-9 * (1.0 + fa.abs()) {
                continue;
            }
            let above = g > fa;
            let ordered = if above { f1 < f2 } else { f1 >= f2 };
            if !ordered {
                report.ordering_ok = false;
                let w = Witness {
                    condition: "rate ordering",
                    gamma: g,
                    v,
                    value: f1 - f2,
                };
                push(&mut report.ccw_witnesses, w);
                push(&mut report.cw_witnesses, w);
            }
            let (rate, label_ccw, label_cw) = if above {
                (f1, "f1 < f_an' - eps above", "f1 > f_an' + eps above")
            } else {
                (f2, "f2 < f_an' - eps below", "f2 > f_an' + eps below")
            };
            let ccw_gap = rate - (ds - margin);
            if ccw_gap >= 0.0 {
                report.ccw_slope_ok = false;
                push(
                    &mut report.ccw_witnesses,
                    Witness {
                        condition: label_ccw,
                        gamma: g,
                        v,
                        value: ccw_gap,
                    },
                );
            }
            let cw_gap = (ds + margin) - rate;
            if cw_gap >= 0.0 {
                report.cw_slope_ok = false;
                push(
                    &mut report.cw_witnesses,
                    Witness {
                        condition: label_cw,
                        gamma: g,
                        v,
                        value: cw_gap,
                    },
                );
            }
        }
    }
    let any = report.admissible_samples > 0;
    let orientation = if any && report.ordering_ok && report.f_an_monotone && report.ccw_slope_ok {
        Orientation::Ccw
    } else if any && report.ordering_ok && report.f_an_zero_at_origin && report.cw_slope_ok {
        Orientation::Cw
    } else {
        Orientation::Neither
    };
    Ok(Classification { orientation, report })
}

/// Errors when `f1 = f2` on all corners and the center of some grid cell.
fn degeneracy(rates: &[Vec<(f64, f64)>], gs: &[f64], vs: &[f64]) -> Result<()> {
    let same = |r: (f64, f64)| (r.0 - r.1).abs() <= 1e-12 * (1.0 + r.0.abs() + r.1.abs());
    for iv in 0..vs.len() - 1 {
        for ig in 0..gs.len() - 1 {
            if same(rates[iv][ig])
                && same(rates[iv + 1][ig])
                && same(rates[iv][ig + 1])
                && same(rates[iv + 1][ig + 1])
            {
                return Err(Error::AnhysteresisDegenerate {
                    gamma: 0.5 * (gs[ig] + gs[ig + 1]),
                    v: 0.5 * (vs[iv] + vs[iv + 1]),
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duhem::{AffineRates, RateFields};
    use alloc::sync::Arc;

    struct Flat;
    impl RateFields for Flat {
        fn f1(&self, _: f64, _: f64) -> f64 {
            1.0
        }
        fn f2(&self, _: f64, _: f64) -> f64 {
            1.0
        }
    }

    #[test]
    fn presets_classify() {
        let ch = DuhemOperator::coleman_hodgdon(1e-2, 2.5e-3, 5e-3).unwrap();
        let c = classify(&ch, ch.rect(), 41, 1e-6).unwrap();
        assert_eq!(c.orientation, Orientation::Ccw, "{:?}", c.report);
        let d = DuhemOperator::dahl(0.75, 1.5, 1.0).unwrap();
        let c = classify(&d, d.rect(), 41, 1e-6).unwrap();
        assert_eq!(c.orientation, Orientation::Cw, "{:?}", c.report);
    }

    #[test]
    fn affine_operator_is_ccw() {
        let rect = Rect::symmetric(20.0, 20.0).unwrap();
        let op = DuhemOperator::affine(AffineRates::symmetric(0.475, 0.3), rect);
        assert_eq!(classify(&op, &rect, 41, 1e-6).unwrap().orientation, Orientation::Ccw);
    }

    #[test]
    fn flat_rates_are_degenerate() {
        let rect = Rect::symmetric(1.0, 1.0).unwrap();
        let op = DuhemOperator::custom(Arc::new(Flat), rect, false);
        assert!(matches!(
            classify(&op, &rect, 11, 1e-6),
            Err(Error::AnhysteresisDegenerate { .. })
        ));
    }

    #[test]
    fn steep_affine_is_neither() {
        // f1 = -(γ - v) + 3: the rate above the curve exceeds f_an' = 1
        // in part of the band and falls below it elsewhere.
        let rect = Rect::symmetric(10.0, 10.0).unwrap();
        let op = DuhemOperator::affine(AffineRates::symmetric(1.0, 3.0), rect);
        let c = classify(&op, &rect, 41, 1e-6).unwrap();
        assert_eq!(c.orientation, Orientation::Neither);
        assert!(!c.report.ccw_witnesses.is_empty());
    }
}
