use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Case, LinearSystem, Tolerances};
use crate::duhem::{DuhemOperator, Rect};
use crate::linalg::{sym_eigen, Matrix};
use crate::{Error, Result};

/// Case (a): positive feedback, S-CCW linear part, CCW operator.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CertificateCcwCcw {
    pub q: Matrix,
    pub xi: f64,
}

/// Case (b): negative feedback, CW linear part, CCW operator.
/// `P` and `L` act on the extended state `(w, x)`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CertificateCwCcw {
    pub p: Matrix,
    pub l: Matrix,
    pub delta: f64,
}

/// Case (c): negative feedback, S-CCW linear part, CW operator.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CertificateCcwCw {
    pub q: Matrix,
}

/// Case (d): positive feedback, CW linear part, CW operator with rates
/// bounded by `η/2`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CertificateCwCw {
    pub p: Matrix,
    pub l: Matrix,
    pub delta: f64,
    pub eta: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "case", rename_all = "lowercase"))]
pub enum Certificate {
    A(CertificateCcwCcw),
    B(CertificateCwCcw),
    C(CertificateCcwCw),
    D(CertificateCwCw),
}

impl Certificate {
    pub fn case(&self) -> Case {
        match self {
            Certificate::A(_) => Case::A,
            Certificate::B(_) => Case::B,
            Certificate::C(_) => Case::C,
            Certificate::D(_) => Case::D,
        }
    }
}

/// One checked condition. `value` is compared to `bound` with `relation`
/// (`"<="`, `">"` or `">="`).
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Condition {
    pub name: &'static str,
    pub value: f64,
    pub relation: &'static str,
    pub bound: f64,
    pub pass: bool,
    /// Matrix conditions are equalities and (semi)definiteness tests;
    /// sampled conditions on the operator are not.
    pub matrix: bool,
}

impl Condition {
    fn le(name: &'static str, value: f64, bound: f64) -> Self {
        Self {
            name,
            value,
            relation: "<=",
            bound,
            pass: value <= bound,
            matrix: true,
        }
    }

    fn gt(name: &'static str, value: f64, bound: f64) -> Self {
        Self {
            name,
            value,
            relation: ">",
            bound,
            pass: value > bound,
            matrix: true,
        }
    }

    fn ge(name: &'static str, value: f64, bound: f64) -> Self {
        Self {
            name,
            value,
            relation: ">=",
            bound,
            pass: value >= bound,
            matrix: true,
        }
    }

    fn sampled(mut self) -> Self {
        self.matrix = false;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VerificationReport {
    pub case: Case,
    pub conditions: Vec<Condition>,
    /// All matrix conditions hold.
    pub matrix_pass: bool,
    /// All conditions hold.
    pub pass: bool,
    pub warnings: Vec<String>,
}

impl VerificationReport {
    fn new(case: Case, conditions: Vec<Condition>, mut warnings: Vec<String>, sys: &LinearSystem) -> Self {
        warnings.extend(sys.minimality_warnings());
        let matrix_pass = conditions.iter().filter(|c| c.matrix).all(|c| c.pass);
        let pass = conditions.iter().all(|c| c.pass);
        Self {
            case,
            conditions,
            matrix_pass,
            pass,
            warnings,
        }
    }

    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

fn check_square(m: &Matrix, n: usize, what: &str) -> Result<()> {
    if m.shape() != (n, n) {
        return Err(Error::Shape(format!(
            "{what} is {}x{}, expected {n}x{n}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

fn asymmetry_warning(m: &Matrix, what: &str, warnings: &mut Vec<String>) {
    let asym = m.asymmetry();
    if asym > 1e-12 * m.frobenius_norm() {
        warnings.push(format!("{what} is not symmetric (|M - M^T|_F = {asym:e}); its symmetric part was used"));
    }
}

/// `½(AᵀQ + QA) + εAᵀCᵀCA` and `QB + AᵀCᵀ` for cases (a) and (c).
fn ccw_lmi(sys: &LinearSystem, q: &Matrix) -> Result<(Matrix, Matrix, f64)> {
    if sys.d() != 0.0 {
        return Err(Error::FeedthroughNotZero(sys.d()));
    }
    let n = sys.order();
    check_square(q, n, "Q")?;
    let cb = sys.cb();
    if !(cb > 0.0) {
        return Err(Error::NonpositiveCb(cb));
    }
    let eps = 1.0 / cb;
    let qs = q.symmetrize();
    let at = sys.a().transpose();
    let ca = sys.c() * sys.a();
    let lmi = &(&(&at * &qs) + &(&qs * sys.a())).scale(0.5) + &(&ca.transpose() * &ca).scale(eps);
    let eq = &(&qs * sys.b()) + &(&at * &sys.c().transpose());
    Ok((lmi, eq, eps))
}

fn ccw_conditions(
    sys: &LinearSystem,
    q: &Matrix,
    tol: &Tolerances,
    warnings: &mut Vec<String>,
) -> Result<Vec<Condition>> {
    let (lmi, eq, _) = ccw_lmi(sys, q)?;
    asymmetry_warning(q, "Q", warnings);
    let qn = q.frobenius_norm();
    Ok(alloc::vec![
        Condition::le(
            "lambda_max(sym(A'Q) + eps A'C'CA)",
            sym_eigen(&lmi).max(),
            tol.psd_for(lmi.frobenius_norm()),
        ),
        Condition::le("|QB + A'C'|", eq.frobenius_norm(), tol.eq_for(qn)),
        Condition::gt("lambda_min(Q)", sym_eigen(q).min(), tol.pd),
    ])
}

/// Case (a). `f_an_samples` are `(v, f_an(v))` pairs for the sector test
/// `(f_an(v) − ξv)·v ≤ 0`.
pub fn verify_ccw_ccw(
    sys: &LinearSystem,
    cert: &CertificateCcwCcw,
    f_an_samples: &[(f64, f64)],
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let mut warnings = Vec::new();
    let mut conds = ccw_conditions(sys, &cert.q, tol, &mut warnings)?;
    conds.push(Condition::gt("xi", cert.xi, 0.0));
    let ctc = &sys.c().transpose() * sys.c();
    let shifted = &cert.q.symmetrize() - &ctc.scale(cert.xi);
    conds.push(Condition::gt("lambda_min(Q - xi C'C)", sym_eigen(&shifted).min(), tol.pd));
    let mut worst = (0.0, 0.0);
    let mut worst_gap = f64::NEG_INFINITY;
    for &(v, f) in f_an_samples {
        let s = (f - cert.xi * v) * v;
        let b = tol.eq * (1.0 + v.abs() * (f.abs() + cert.xi * v.abs()));
        if s - b > worst_gap {
            worst_gap = s - b;
            worst = (s, b);
        }
    }
    if f_an_samples.is_empty() {
        warnings.push("no anhysteresis samples supplied; sector condition not checked".into());
    }
    let (worst, bound) = worst;
    conds.push(Condition::le("max (f_an(v) - xi v) v", worst, bound).sampled());
    Ok(VerificationReport::new(Case::A, conds, warnings, sys))
}

/// Case (c).
pub fn verify_ccw_cw(
    sys: &LinearSystem,
    cert: &CertificateCcwCw,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let mut warnings = Vec::new();
    let conds = ccw_conditions(sys, &cert.q, tol, &mut warnings)?;
    Ok(VerificationReport::new(Case::C, conds, warnings, sys))
}

/// `M_ext = [[0, 0], [B, A]]`, the generator of the extended state `(w, x)`.
pub(crate) fn m_ext(sys: &LinearSystem) -> Matrix {
    let n = sys.order();
    Matrix::from_fn(n + 1, n + 1, |i, j| match (i, j) {
        (0, _) => 0.0,
        (i, 0) => sys.b()[(i - 1, 0)],
        (i, j) => sys.a()[(i - 1, j - 1)],
    })
}

/// `[D; Cᵀ]`.
pub(crate) fn dc_column(sys: &LinearSystem) -> Vec<f64> {
    let mut v = alloc::vec![sys.d()];
    v.extend_from_slice(sys.c().as_slice());
    v
}

/// `½(P M_ext + M_extᵀ P) + δ LᵀL`.
pub(crate) fn cw_lmi(sys: &LinearSystem, p: &Matrix, l: &Matrix, delta: f64) -> Matrix {
    let ps = p.symmetrize();
    let m = m_ext(sys);
    let sym = (&ps * &m).symmetrize();
    &sym + &(&l.transpose() * l).scale(delta)
}

fn cw_conditions(
    sys: &LinearSystem,
    p: &Matrix,
    l: &Matrix,
    delta: f64,
    tol: &Tolerances,
    warnings: &mut Vec<String>,
) -> Result<Vec<Condition>> {
    let n1 = sys.order() + 1;
    check_square(p, n1, "P")?;
    if l.shape() != (1, n1) {
        return Err(Error::Shape(format!(
            "L is {}x{}, expected 1x{n1}",
            l.rows(),
            l.cols()
        )));
    }
    asymmetry_warning(p, "P", warnings);
    let ps = p.symmetrize();
    let target = dc_column(sys);
    let first = ps.col_vec(0);
    let eq_res = crate::linalg::norm(&first.iter().zip(&target).map(|(a, b)| a - b).collect::<Vec<_>>());
    let lmi = cw_lmi(sys, p, l, delta);
    Ok(alloc::vec![
        Condition::le("|P e1 - [D; C']|", eq_res, tol.eq_for(p.frobenius_norm())),
        Condition::le(
            "lambda_max(sym(P M_ext) + delta L'L)",
            sym_eigen(&lmi).max(),
            tol.psd_for(lmi.frobenius_norm()),
        ),
        Condition::gt("lambda_min(P)", sym_eigen(&ps).min(), tol.pd),
        Condition::gt("delta", delta, 0.0),
    ])
}

/// Case (b).
pub fn verify_cw_ccw(
    sys: &LinearSystem,
    cert: &CertificateCwCcw,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let mut warnings = Vec::new();
    let conds = cw_conditions(sys, &cert.p, &cert.l, cert.delta, tol, &mut warnings)?;
    Ok(VerificationReport::new(Case::B, conds, warnings, sys))
}

/// Case (d). The rate bound `f1, f2 ≤ η/2` is sampled on the part of `rect`
/// where both rates are nonnegative (the operator's invariant band); any
/// sampled excess there is reported as a failed, non-matrix condition.
///
/// `P − ηΘ` with `Θ = [D; Cᵀ][D; Cᵀ]ᵀ` is checked as positive semidefinite.
/// Because `P e1 = [D; Cᵀ]`, its first column is `(1 − ηD)[D; Cᵀ]`, so it is
/// singular whenever `ηD = 1`; a warning is emitted when the smallest
/// eigenvalue is not strictly positive.
pub fn verify_cw_cw(
    sys: &LinearSystem,
    cert: &CertificateCwCw,
    op: &DuhemOperator,
    rect: &Rect,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let (max_rate, at) = rate_bound(op, rect);
    cw_cw_report(sys, cert, max_rate, at, tol)
}

/// Case (d) with the operator's rate bound already measured:
/// `max_rate = max f1, f2` over the operator's band.
pub fn verify_cw_cw_with_rate(
    sys: &LinearSystem,
    cert: &CertificateCwCw,
    max_rate: f64,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    cw_cw_report(sys, cert, max_rate, None, tol)
}

fn cw_cw_report(
    sys: &LinearSystem,
    cert: &CertificateCwCw,
    max_rate: f64,
    at: Option<(f64, f64)>,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    if !(cert.eta > 0.0) {
        return Err(Error::Shape(format!("eta must be positive, got {}", cert.eta)));
    }
    let mut warnings = Vec::new();
    let mut conds = cw_conditions(sys, &cert.p, &cert.l, cert.delta, tol, &mut warnings)?;
    let shifted = cw_eta_shift(sys, &cert.p, cert.eta);
    let min_eig = sym_eigen(&shifted).min();
    conds.push(Condition::ge(
        "lambda_min(P - eta Theta)",
        min_eig,
        -tol.psd_for(shifted.frobenius_norm()),
    ));
    if min_eig <= tol.pd {
        warnings.push(format!(
            "P - eta Theta is only semidefinite (lambda_min = {min_eig:e}); eta*D = {}",
            cert.eta * sys.d()
        ));
    }
    let cond = Condition::le("max f1, f2 on band", max_rate, 0.5 * cert.eta).sampled();
    if !cond.pass {
        let place = match at {
            Some((g, v)) => format!(" at gamma = {g}, v = {v}"),
            None => String::new(),
        };
        warnings.push(format!(
            "rate bound f <= eta/2 = {} fails{place} (rate {max_rate}); it holds only on part of the output range",
            0.5 * cert.eta
        ));
    }
    conds.push(cond);
    Ok(VerificationReport::new(Case::D, conds, warnings, sys))
}

/// `P − ηΘ` with `Θ = [D; Cᵀ][D; Cᵀ]ᵀ`.
pub(crate) fn cw_eta_shift(sys: &LinearSystem, p: &Matrix, eta: f64) -> Matrix {
    let v = dc_column(sys);
    let theta = Matrix::from_fn(v.len(), v.len(), |i, j| v[i] * v[j]);
    &p.symmetrize() - &theta.scale(eta)
}

const RATE_GRID: usize = 101;

/// Largest of `f1`, `f2` over the sampled part of `rect` where both are
/// nonnegative, with the point where it is attained.
pub fn rate_bound(op: &DuhemOperator, rect: &Rect) -> (f64, Option<(f64, f64)>) {
    let mut best = f64::NEG_INFINITY;
    let mut at = None;
    for v in rect.v_grid(RATE_GRID) {
        for g in rect.gamma_grid(RATE_GRID) {
            let (f1, f2) = (op.f1(g, v), op.f2(g, v));
            if f1 < 0.0 || f2 < 0.0 {
                continue;
            }
            let m = f1.max(f2);
            if m > best {
                best = m;
                at = Some((g, v));
            }
        }
    }
    (best.max(0.0), at)
}

/// Dispatches on the certificate case. `op`/`rect` feed the sampled
/// operator conditions of cases (a) and (d).
pub fn verify(
    sys: &LinearSystem,
    cert: &Certificate,
    op: &DuhemOperator,
    rect: &Rect,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    match cert {
        Certificate::A(c) => {
            let samples = crate::geometry::sample_anhysteresis(op, (rect.v_min, rect.v_max), RATE_GRID)?;
            verify_ccw_ccw(sys, c, &samples, tol)
        }
        Certificate::B(c) => verify_cw_ccw(sys, c, tol),
        Certificate::C(c) => verify_ccw_cw(sys, c, tol),
        Certificate::D(c) => verify_cw_cw(sys, c, op, rect, tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys_a() -> LinearSystem {
        LinearSystem::from_rows(&[[-1.0]], &[1.0], &[1.0], 0.0).unwrap()
    }

    fn sys_b() -> LinearSystem {
        LinearSystem::from_rows(&[[-3.0]], &[1.0], &[-2.0], 1.0).unwrap()
    }

    fn p_b() -> Matrix {
        Matrix::from_rows(&[[1.0, -2.0], [-2.0, 6.0]]).unwrap()
    }

    fn sector(xi: f64) -> Vec<(f64, f64)> {
        (-10..=10).map(|i| (i as f64, xi * i as f64)).collect()
    }

    #[test]
    fn case_a_toy() {
        let tol = Tolerances::default();
        let c = CertificateCcwCcw {
            q: Matrix::scalar(1.0),
            xi: 0.5,
        };
        let r = verify_ccw_ccw(&sys_a(), &c, &sector(0.25), &tol).unwrap();
        assert!(r.pass, "{r:?}");
        let c = CertificateCcwCcw {
            q: Matrix::scalar(1.0),
            xi: 1.5,
        };
        let r = verify_ccw_ccw(&sys_a(), &c, &sector(0.25), &tol).unwrap();
        assert!(!r.condition("lambda_min(Q - xi C'C)").unwrap().pass);
    }

    #[test]
    fn case_b_toy_lmi_is_zero() {
        let c = CertificateCwCcw {
            p: p_b(),
            l: Matrix::row(&[1.0, -3.0]),
            delta: 2.0,
        };
        let lmi = cw_lmi(&sys_b(), &c.p, &c.l, c.delta);
        assert_eq!(lmi.max_abs(), 0.0);
        let r = verify_cw_ccw(&sys_b(), &c, &Tolerances::default()).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn case_c_requires_positive_cb() {
        let s = LinearSystem::from_rows(&[[-1.0]], &[-1.0], &[1.0], 0.0).unwrap();
        let c = CertificateCcwCw { q: Matrix::scalar(1.0) };
        assert_eq!(
            verify_ccw_cw(&s, &c, &Tolerances::default()),
            Err(Error::NonpositiveCb(-1.0))
        );
        assert!(verify_ccw_cw(&sys_a(), &c, &Tolerances::default()).unwrap().pass);
    }

    #[test]
    fn case_a_rejects_feedthrough() {
        let c = CertificateCcwCcw {
            q: Matrix::scalar(1.0),
            xi: 0.5,
        };
        assert!(matches!(
            verify_ccw_ccw(&sys_b(), &c, &[], &Tolerances::default()),
            Err(Error::FeedthroughNotZero(_))
        ));
    }

    #[test]
    fn case_d_toy() {
        let op = DuhemOperator::dahl(1.0, 0.125, 1.0).unwrap();
        let rect = Rect::symmetric(1.0, 5.0).unwrap();
        let c = CertificateCwCw {
            p: p_b(),
            l: Matrix::row(&[1.0, -3.0]),
            delta: 2.0,
            eta: 0.5,
        };
        let r = verify_cw_cw(&sys_b(), &c, &op, &rect, &Tolerances::default()).unwrap();
        assert!(r.pass, "{r:?}");
        let bad = CertificateCwCw { eta: 0.0, ..c };
        assert!(matches!(
            verify_cw_cw(&sys_b(), &bad, &op, &rect, &Tolerances::default()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn asymmetric_input_warns() {
        let c = CertificateCwCcw {
            p: Matrix::from_rows(&[[1.0, -2.0], [-2.1, 6.0]]).unwrap(),
            l: Matrix::row(&[1.0, -3.0]),
            delta: 2.0,
        };
        let r = verify_cw_ccw(&sys_b(), &c, &Tolerances::default()).unwrap();
        assert!(r.warnings.iter().any(|w| w.contains("symmetric")));
    }
}
