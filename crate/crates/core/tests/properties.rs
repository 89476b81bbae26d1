use std::sync::Arc;

use duhem_core::certify::{
    cascade, verify, CertificateCcwCw, LinearSystem, Tolerances, Topology, Case, Certificate,
};
use duhem_core::duhem::{integrate, ColemanHodgdon, Dahl, DuhemOperator, InputSignal, RateFields};
use duhem_core::geometry::{self, closed_form, Branch, Context, Mode};
use duhem_core::linalg::Matrix;
use duhem_core::simulate::{lyapunov_monitor, simulate_closed_loop, Interconnection, SimOptions};
use duhem_core::synth::{feasibility_search_seeded, SearchHints, SearchOptions};
use proptest::prelude::*;

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

fn ch() -> DuhemOperator {
    DuhemOperator::coleman_hodgdon(CH.c_alpha, CH.a, CH.b).unwrap()
}

fn dahl() -> DuhemOperator {
    DuhemOperator::dahl(DAHL.fc, DAHL.rho, DAHL.r).unwrap()
}

/// Same rate fields without the preset tag, so every geometric quantity
/// goes through the numerical path.
fn generic(op: &DuhemOperator, fields: Arc<dyn RateFields>) -> DuhemOperator {
    DuhemOperator::custom(fields, *op.rect(), false)
}

/// Only `f1`, `f2`: the anhysteresis curve has to be found by root search.
struct Bare<M>(M);

impl<M: RateFields> RateFields for Bare<M> {
    fn f1(&self, gamma: f64, v: f64) -> f64 {
        self.0.f1(gamma, v)
    }
    fn f2(&self, gamma: f64, v: f64) -> f64 {
        self.0.f2(gamma, v)
    }
}

fn y_near(path: &[(f64, f64)], t: f64) -> f64 {
    path.iter()
        .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
        .unwrap()
        .1
}

fn pl_value(knots: &[(f64, f64)], t: f64) -> f64 {
    let k = knots.partition_point(|p| p.0 <= t).clamp(1, knots.len() - 1);
    let (a, b) = (knots[k - 1], knots[k]);
    a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
}

/// Integrates `u` on knots `t = 0, 1, …` and `u(s²)` densely sampled in `s`,
/// and returns the largest output gap at the knots.
fn reparam_gap(op: &DuhemOperator, values: &[f64]) -> f64 {
    let knots: Vec<(f64, f64)> = values.iter().enumerate().map(|(k, &u)| (k as f64, u)).collect();
    let plain = integrate(op, &InputSignal::new(knots.clone()).unwrap(), 1e-3).unwrap();
    let s_end = ((values.len() - 1) as f64).sqrt();
    let mut ss: Vec<f64> = (0..=200).map(|j| s_end * j as f64 / 200.0).collect();
    ss.extend((0..values.len()).map(|k| (k as f64).sqrt()));
    ss.sort_by(f64::total_cmp);
    ss.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let warped: Vec<(f64, f64)> = ss.iter().map(|&s| (s, pl_value(&knots, (s * s).min(knots.last().unwrap().0)))).collect();
    let re = integrate(op, &InputSignal::new(warped).unwrap(), 1e-3).unwrap();
    (0..values.len())
        .map(|k| (y_near(&plain, k as f64) - y_near(&re, (k as f64).sqrt())).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rate_independence_ch(values in prop::collection::vec(-50.0f64..50.0, 2..5)) {
        prop_assert!(reparam_gap(&ch(), &values) <= 1e-6);
    }

    #[test]
    fn rate_independence_dahl(values in prop::collection::vec(-3.0f64..3.0, 2..5)) {
        prop_assert!(reparam_gap(&dahl(), &values) <= 1e-6);
    }

    #[test]
    fn integration_is_deterministic(values in prop::collection::vec(-3.0f64..3.0, 2..6)) {
        let knots: Vec<(f64, f64)> = values.iter().enumerate().map(|(k, &u)| (0.5 * k as f64, u)).collect();
        let sig = InputSignal::new(knots).unwrap();
        let a = integrate(&dahl(), &sig, 1e-3).unwrap();
        let b = integrate(&dahl(), &sig, 1e-3).unwrap();
        prop_assert!(a.iter().zip(&b).all(|(p, q)| p.0.to_bits() == q.0.to_bits() && p.1.to_bits() == q.1.to_bits()));
    }

    #[test]
    fn dahl_output_stays_in_band(
        values in prop::collection::vec(-10.0f64..10.0, 2..6),
        y0 in -0.75f64..0.75,
    ) {
        let knots: Vec<(f64, f64)> = values.iter().enumerate().map(|(k, &u)| (k as f64, u)).collect();
        let op = dahl().with_y0(y0);
        let path = integrate(&op, &InputSignal::new(knots).unwrap(), 1e-3).unwrap();
        prop_assert!(path.iter().all(|p| p.1.abs() <= DAHL.fc + 1e-9));
    }

    #[test]
    fn ordering_ch(gamma in -1.0f64..1.0, v in -100.0f64..100.0) {
        let op = ch();
        let fan = geometry::anhysteresis(&op, v).unwrap();
        prop_assume!((gamma - fan).abs() > 1e-9);
        let s = geometry::storage_ccw(&op, gamma, v).unwrap();
        prop_assert_eq!(s.intersect_point >= v, gamma >= fan);
        prop_assert_eq!(s.branch == Branch::Above, gamma >= fan);
    }

    #[test]
    fn ordering_dahl(gamma in -0.74f64..0.74, v in -3.0f64..3.0) {
        let op = dahl();
        prop_assume!(gamma.abs() > 1e-9);
        let s = geometry::storage_cw(&op, gamma, v).unwrap();
        prop_assert_eq!(s.intersect_point <= v, gamma >= 0.0);
    }

    #[test]
    fn storage_is_nonnegative(e in -0.25f64..0.25, v in -100.0f64..100.0, g2 in -0.74f64..0.74, v2 in -3.0f64..3.0) {
        // Both rates are nonnegative only on the band |γ − b·v| ≤ a/C_α.
        let gamma = CH.b * v + e;
        let h = geometry::storage_ccw(&ch(), gamma, v).unwrap().value;
        prop_assert!(h >= -1e-9 * (1.0 + v.abs() * gamma.abs()));
        let h = geometry::storage_cw(&dahl(), g2, v2).unwrap().value;
        prop_assert!(h >= -1e-9);
    }

    #[test]
    fn generic_storage_matches_closed_form(gamma in -1.0f64..1.0, v in -100.0f64..100.0, g2 in -0.74f64..0.74, v2 in -3.0f64..3.0) {
        let op = ch();
        let gen = generic(&op, Arc::new(CH));
        let cf = closed_form::storage(&op, gamma, v).unwrap();
        let h = geometry::storage_ccw(&gen, gamma, v).unwrap().value;
        prop_assert!((h - cf).abs() <= 1e-6 * cf.abs().max(1.0), "{} vs {}", h, cf);
        let op = dahl();
        let gen = generic(&op, Arc::new(DAHL));
        let cf = closed_form::storage(&op, g2, v2).unwrap();
        let h = geometry::storage_cw(&gen, g2, v2).unwrap().value;
        prop_assert!((h - cf).abs() <= 1e-6 * cf.abs().max(1.0), "{} vs {}", h, cf);
    }

    #[test]
    fn intersection_lies_on_anhysteresis(gamma in -1.0f64..1.0, v in -100.0f64..100.0) {
        let op = ch();
        let gen = generic(&op, Arc::new(CH));
        let omega = geometry::intersect_ccw(&gen, gamma, v).unwrap();
        let w = closed_form::traversing(&op, gamma, v, omega).unwrap();
        prop_assert!((w - CH.b * omega).abs() <= 1e-8);
    }

    #[test]
    fn anhysteresis_root_residual(v in -500.0f64..500.0) {
        let op = ch();
        let bare = generic(&op, Arc::new(Bare(CH)));
        let fan = geometry::anhysteresis(&bare, v).unwrap();
        let scale = bare.f1(fan, v).abs().max(bare.f2(fan, v).abs()).max(1e-300);
        prop_assert!((bare.f1(fan, v) - bare.f2(fan, v)).abs() <= 1e-10 * scale.max(CH.a));
    }

    #[test]
    fn storage_on_the_curve(v in -50.0f64..50.0) {
        // On f_an the storage reduces to f_an(v)·v − F_an(v) = b·v²/2.
        let op = ch();
        let h = geometry::storage_ccw(&op, CH.b * v, v).unwrap().value;
        prop_assert!((h - 0.5 * CH.b * v * v).abs() <= 1e-9 * (1.0 + v * v));
    }

    #[test]
    fn cascade_adds_states(ng in 0usize..4, nk in 0usize..4, seed in any::<u64>()) {
        let mut x = seed;
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut make = |n: usize| {
            let a: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| next()).collect()).collect();
            let b: Vec<f64> = (0..n).map(|_| next()).collect();
            let c: Vec<f64> = (0..n).map(|_| next()).collect();
            LinearSystem::from_rows(&a, &b, &c, next()).unwrap()
        };
        let (g, k) = (make(ng), make(nk));
        for t in [Topology::Actuator, Topology::Sensor] {
            let s = cascade(&g, &k, t).unwrap();
            prop_assert_eq!(s.order(), ng + nk);
            prop_assert_eq!(s.b().shape(), (ng + nk, 1));
            prop_assert_eq!(s.c().shape(), (1, ng + nk));
            prop_assert_eq!(s.d(), g.d() * k.d());
        }
    }

    #[test]
    fn verification_is_deterministic(a in -5.0f64..-0.1, c in 0.1f64..3.0, q in 0.1f64..5.0) {
        let sys = LinearSystem::from_rows(&[[a]], &[1.0], &[c], 0.0).unwrap();
        let cert = Certificate::C(CertificateCcwCw { q: Matrix::scalar(q) });
        let op = dahl();
        let r1 = verify(&sys, &cert, &op, op.rect(), &Tolerances::default()).unwrap();
        let r2 = verify(&sys, &cert, &op, op.rect(), &Tolerances::default()).unwrap();
        prop_assert_eq!(r1, r2);
    }

    #[test]
    fn search_results_verify(a in -5.0f64..-0.2, b in 0.2f64..3.0, c in 0.2f64..3.0, seed in any::<u64>()) {
        let sys = LinearSystem::from_rows(&[[a]], &[b], &[c], 0.0).unwrap();
        let opts = SearchOptions { max_iter: 500, restarts: 2, ..SearchOptions::default() };
        let tol = Tolerances::default();
        let found = feasibility_search_seeded(&sys, Case::C, &SearchHints::default(), &opts, seed, &tol).unwrap();
        let (cert, _) = found.expect("stable scalar system with CB > 0");
        let op = dahl();
        prop_assert!(verify(&sys, &cert, &op, op.rect(), &tol).unwrap().pass);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn case_c_energy_is_nonincreasing(x0 in -2.0f64..2.0, y0 in -0.9f64..0.9) {
        let sys = LinearSystem::from_rows(&[[-1.0]], &[1.0], &[1.0], 0.0).unwrap();
        let op = DuhemOperator::dahl(1.0, 1.0, 1.0).unwrap().with_y0(y0);
        let ic = Interconnection::new(sys, op, Case::C);
        let tr = simulate_closed_loop(&ic, &[x0], &SimOptions::new(10.0, 1e-3)).unwrap();
        prop_assert!(tr.branch_audit_ok);
        let cert = Certificate::C(CertificateCcwCw { q: Matrix::scalar(1.0) });
        let l = lyapunov_monitor(&tr, &ic, &cert, &Tolerances::default()).unwrap();
        prop_assert!(l.pass, "max increment {}", l.max_increment);
        let xmax = tr.x.iter().map(|x| x[0].abs()).fold(0.0, f64::max);
        prop_assert!(xmax.is_finite() && xmax <= 10.0 * x0.abs() + 10.0);
    }
}

#[test]
fn context_reuses_values() {
    let op = ch();
    let mut ctx = Context::new(&op);
    let a = ctx.storage(0.1, 0.0, Mode::Ccw).unwrap();
    let b = ctx.storage(0.1, 0.0, Mode::Ccw).unwrap();
    assert_eq!(a, b);
}
