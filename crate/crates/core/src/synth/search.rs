//! Certificate search for a fixed linear system.
//!
//! Every condition is affine in the unknown matrix, so after eliminating the
//! linear equalities the unknowns are a vector `θ` and each matrix
//! inequality reads `λ_max(F_k(θ)) < 0` with `F_k` affine. We minimize
//! `g(θ) = max_k λ_max(F_k(θ))` by subgradient steps with a Polyak level
//! rule and stop as soon as `g` is safely negative.
//!
//! The equalities leave a structural null direction in the main inequality
//! (`z = A⁻¹B`, or `[1; −A⁻¹B]` on the extended state) along which its
//! quadratic form vanishes identically. Semidefiniteness then forces the
//! matching null-vector equality, which is added to the elimination, and
//! the inequality is imposed strictly on the complement of `z`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::certify::{
    dc_column, m_ext,
    verify_ccw_ccw, verify_ccw_cw, verify_cw_ccw, verify_cw_cw_with_rate, Case, Certificate,
    CertificateCcwCcw, CertificateCcwCw, CertificateCwCcw, CertificateCwCw, LinearSystem,
    Tolerances, VerificationReport,
};
use crate::linalg::{norm, orthogonal_complement, svd, sym_eigen, Matrix};
use crate::{Error, Result};

/// A verified certificate with its report.
type Found = (Certificate, VerificationReport);

const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchOptions {
    /// Subgradient iterations per run.
    pub max_iter: usize,
    /// Random draws of `L` for cases (b) and (d).
    pub restarts: usize,
    /// Candidate values of `δ`, ascending.
    pub delta_grid: Vec<f64>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            restarts: 32,
            delta_grid: (-4..=4).map(|k| crate::math::powf(10.0, k as f64)).collect(),
        }
    }
}

/// Case data the matrix problem needs from the operator, plus an optional
/// preferred `L`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchHints {
    /// Sector bound for case (a).
    pub xi: Option<f64>,
    /// Rate-bound weight for case (d).
    pub eta: Option<f64>,
    /// Preferred `L` over `(w, x)`, tried first in cases (b) and (d).
    pub l: Option<Vec<f64>>,
}

/// Affine matrix family `base + Σ θ_i dirs[i]`.
#[derive(Clone, Debug)]
struct Affine {
    base: Matrix,
    dirs: Vec<Matrix>,
}

impl Affine {
    fn at(&self, theta: &[f64]) -> Matrix {
        let mut m = self.base.clone();
        for (d, &t) in self.dirs.iter().zip(theta) {
            if t != 0.0 {
                m = &m + &d.scale(t);
            }
        }
        m
    }

    /// `f(base) + constant`, `f(dir)`, for linear `f`.
    fn map(&self, f: impl Fn(&Matrix) -> Matrix, constant: Option<&Matrix>) -> Affine {
        let mut base = f(&self.base);
        if let Some(c) = constant {
            base = &base + c;
        }
        Affine {
            base,
            dirs: self.dirs.iter().map(f).collect(),
        }
    }
}

/// Symmetric `n×n` matrices satisfying `X b_k = r_k` for every constraint.
/// `None` when the equalities are inconsistent.
fn constrained_symmetric(n: usize, constraints: &[(Vec<f64>, Vec<f64>)]) -> Option<Affine> {
    let mut basis = Vec::new();
    for i in 0..n {
        for j in i..n {
            basis.push(Matrix::from_fn(n, n, |r, c| {
                if (r, c) == (i, j) || (r, c) == (j, i) {
                    1.0
                } else {
                    0.0
                }
            }));
        }
    }
    let m = basis.len();
    if constraints.is_empty() {
        return Some(Affine {
            base: Matrix::zeros(n, n),
            dirs: basis,
        });
    }
    let mut g_rows = Vec::with_capacity(n * constraints.len());
    let mut h = Vec::with_capacity(n * constraints.len());
    for (b, r) in constraints {
        let images: Vec<Vec<f64>> = basis.iter().map(|e| e.mul_vec(b)).collect();
        for i in 0..n {
            g_rows.push(images.iter().map(|img| img[i]).collect::<Vec<_>>());
            h.push(r[i]);
        }
    }
    let g = Matrix::from_fn(g_rows.len(), m, |i, j| g_rows[i][j]);
    let dec = svd(&g);
    let q0 = dec.solve(&h, RANK_TOL);
    let resid: Vec<f64> = g.mul_vec(&q0).iter().zip(&h).map(|(a, b)| a - b).collect();
    if norm(&resid) > 1e-9 * (1.0 + norm(&h)) {
        return None;
    }
    let combine = |coef: &[f64]| {
        basis
            .iter()
            .zip(coef)
            .fold(Matrix::zeros(n, n), |acc, (e, &c)| &acc + &e.scale(c))
    };
    Some(Affine {
        base: combine(&q0),
        dirs: dec.null_space(RANK_TOL).iter().map(|v| combine(v)).collect(),
    })
}

/// `A⁻¹B` when `A` is invertible.
fn a_inv_b(sys: &LinearSystem) -> Option<Vec<f64>> {
    let n = sys.order();
    if n == 0 {
        return None;
    }
    let dec = svd(sys.a());
    if dec.rank(RANK_TOL) < n {
        return None;
    }
    Some(dec.solve(sys.b().as_slice(), RANK_TOL))
}

/// `Uᵀ M U` for the orthonormal columns `u`.
fn project(m: &Matrix, u: &[Vec<f64>]) -> Matrix {
    Matrix::from_fn(u.len(), u.len(), |i, j| {
        let mu = m.mul_vec(&u[j]);
        u[i].iter().zip(&mu).map(|(a, b)| a * b).sum()
    })
}

struct Program {
    blocks: Vec<Affine>,
    dim: usize,
}

impl Program {
    fn eval(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let mut best = f64::NEG_INFINITY;
        let mut grad = vec![0.0; self.dim];
        for blk in &self.blocks {
            let m = blk.at(theta).symmetrize();
            if m.rows() == 0 {
                continue;
            }
            let e = sym_eigen(&m);
            let lam = e.max();
            if lam > best {
                best = lam;
                let v = e.vector(m.rows() - 1);
                for (g, d) in grad.iter_mut().zip(&blk.dirs) {
                    *g = d.quad_form(&v);
                }
            }
        }
        (best, grad)
    }

    /// Level-method subgradient descent from `theta`; returns the best point
    /// and its value. Stops once the value drops below `-stop`.
    fn minimize(&self, theta: Vec<f64>, max_iter: usize, stop: f64) -> (Vec<f64>, f64) {
        let (mut g, mut grad) = self.eval(&theta);
        let mut best = (theta.clone(), g);
        if self.dim == 0 {
            return best;
        }
        let mut theta = theta;
        let mut gap = g.abs().max(1.0);
        let mut stall = 0;
        for _ in 0..max_iter {
            if best.1 < -stop {
                break;
            }
            let n2: f64 = grad.iter().map(|x| x * x).sum();
            if n2 < 1e-300 || gap < 1e-14 * (1.0 + best.1.abs()) {
                break;
            }
            let level = best.1 - gap;
            let step = (g - level) / n2;
            for (t, d) in theta.iter_mut().zip(&grad) {
                *t -= step * d;
            }
            (g, grad) = self.eval(&theta);
            if g < best.1 - 1e-12 * (1.0 + best.1.abs()) {
                best = (theta.clone(), g);
                stall = 0;
            } else {
                stall += 1;
                if stall >= 20 {
                    gap *= 0.5;
                    stall = 0;
                    theta = best.0.clone();
                    (g, grad) = self.eval(&theta);
                }
            }
        }
        best
    }
}

fn stop_margin(p: &Program) -> f64 {
    1e-6 * (1.0 + p.blocks.iter().map(|b| b.base.frobenius_norm()).fold(0.0, f64::max))
}

/// Searches for a certificate of `case` for `sys`. `Ok(None)` when the
/// case's preconditions fail or the budget runs out; any returned
/// certificate passes the matrix conditions of the matching verifier with
/// the same tolerances.
pub fn feasibility_search(
    sys: &LinearSystem,
    case: Case,
    hints: &SearchHints,
    opts: &SearchOptions,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> Result<Option<Found>> {
    match case {
        Case::A | Case::C => search_ccw(sys, case, hints, opts, tol),
        Case::B | Case::D => search_cw(sys, case, hints, opts, rng, tol),
    }
}

/// Convenience wrapper seeding the restart generator from `seed`.
pub fn feasibility_search_seeded(
    sys: &LinearSystem,
    case: Case,
    hints: &SearchHints,
    opts: &SearchOptions,
    seed: u64,
    tol: &Tolerances,
) -> Result<Option<Found>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    feasibility_search(sys, case, hints, opts, &mut rng, tol)
}

fn search_ccw(
    sys: &LinearSystem,
    case: Case,
    hints: &SearchHints,
    opts: &SearchOptions,
    tol: &Tolerances,
) -> Result<Option<Found>> {
    let n = sys.order();
    let cb = sys.cb();
    if n == 0 || sys.d() != 0.0 || !(cb > 0.0) {
        return Ok(None);
    }
    let xi = match case {
        Case::A => Some(hints.xi.ok_or_else(|| Error::InvalidInput("case a search needs the sector bound xi".into()))?),
        _ => None,
    };
    let at = sys.a().transpose();
    let ct = sys.c().transpose();
    let rhs: Vec<f64> = (&at * &ct).scale(-1.0).as_slice().to_vec();
    let mut cons = vec![(sys.b().as_slice().to_vec(), rhs)];
    let z = a_inv_b(sys);
    if let Some(w) = &z {
        cons.push((w.clone(), ct.scale(-1.0).as_slice().to_vec()));
    }
    let Some(q) = constrained_symmetric(n, &cons) else {
        return Ok(None);
    };
    let u = match &z {
        Some(w) => orthogonal_complement(n, core::slice::from_ref(w)),
        None => orthogonal_complement(n, &[]),
    };
    let ca = sys.c() * sys.a();
    let quad = (&ca.transpose() * &ca).scale(1.0 / cb);
    let a = sys.a().clone();
    let lmi = q.map(
        |m| project(&(&(&at * m) + &(m * &a)).scale(0.5), &u),
        Some(&project(&quad, &u)),
    );
    let mut blocks = vec![lmi, q.map(|m| m.scale(-1.0), None)];
    if let Some(xi) = xi {
        let ctc = (&ct * sys.c()).scale(xi);
        blocks.push(q.map(|m| m.scale(-1.0), Some(&ctc)));
    }
    let prog = Program {
        dim: q.dirs.len(),
        blocks,
    };
    let mut stop = stop_margin(&prog);
    let mut theta = vec![0.0; prog.dim];
    for _ in 0..3 {
        let (best, _) = prog.minimize(theta, opts.max_iter, stop);
        let qm = q.at(&best).symmetrize();
        let (cert, report) = match xi {
            Some(xi) => {
                let c = CertificateCcwCcw { q: qm, xi };
                let r = verify_ccw_ccw(sys, &c, &[], tol)?;
                (Certificate::A(c), r)
            }
            None => {
                let c = CertificateCcwCw { q: qm };
                let r = verify_ccw_cw(sys, &c, tol)?;
                (Certificate::C(c), r)
            }
        };
        if report.matrix_pass {
            return Ok(Some((cert, report)));
        }
        theta = best;
        stop *= 10.0;
    }
    Ok(None)
}

fn random_unit(rng: &mut ChaCha8Rng, basis: &[Vec<f64>]) -> Vec<f64> {
    let dim = basis.first().map_or(0, Vec::len);
    let mut l = vec![0.0; dim];
    for b in basis {
        // Uniform in [-1, 1); direction only matters.
        let r = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64) * 2.0 - 1.0;
        for (li, bi) in l.iter_mut().zip(b) {
            *li += r * bi;
        }
    }
    normalize(l)
}

fn normalize(mut l: Vec<f64>) -> Vec<f64> {
    let s = norm(&l);
    if s > 0.0 {
        l.iter_mut().for_each(|x| *x /= s);
    }
    l
}

fn search_cw(
    sys: &LinearSystem,
    case: Case,
    hints: &SearchHints,
    opts: &SearchOptions,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> Result<Option<Found>> {
    let n = sys.order();
    let n1 = n + 1;
    let eta = match case {
        Case::D => {
            let e = hints.eta.ok_or_else(|| Error::InvalidInput("case d search needs eta".into()))?;
            if !(e > 0.0) {
                return Err(Error::InvalidInput(format!("eta must be positive, got {e}")));
            }
            Some(e)
        }
        _ => None,
    };
    if opts.delta_grid.is_empty() || opts.delta_grid.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidInput("delta grid must be nonempty and positive".into()));
    }
    let dc = dc_column(sys);
    let z = a_inv_b(sys);
    let mut cons = Vec::new();
    if let Some(w) = &z {
        cons.push((w.clone(), sys.c().as_slice().to_vec()));
    }
    let Some(pxx) = constrained_symmetric(n, &cons) else {
        return Ok(None);
    };
    let fixed = Matrix::from_fn(n1, n1, |i, j| match (i, j) {
        (0, j) => dc[j],
        (i, 0) => dc[i],
        _ => 0.0,
    });
    let embed = |m: &Matrix| Matrix::from_fn(n1, n1, |i, j| if i == 0 || j == 0 { 0.0 } else { m[(i - 1, j - 1)] });
    let p = pxx.map(embed, Some(&fixed));
    let zext = z.as_ref().map(|w| {
        let mut v = vec![1.0];
        v.extend(w.iter().map(|x| -x));
        v
    });
    let u = match &zext {
        Some(v) => orthogonal_complement(n1, core::slice::from_ref(v)),
        None => orthogonal_complement(n1, &[]),
    };
    let mext = m_ext(sys);
    let mut fixed_blocks = vec![p.map(|m| m.scale(-1.0), None)];
    if let Some(eta) = eta {
        let theta_m = Matrix::from_fn(n1, n1, |i, j| dc[i] * dc[j]).scale(eta);
        let shifted = p.map(|m| m.scale(-1.0), Some(&theta_m));
        if (1.0 - eta * sys.d()).abs() < 1e-12 {
            // First row and column vanish identically; only the rest can be strict.
            let idx: Vec<usize> = (1..n1).collect();
            fixed_blocks.push(shifted.map(|m| m.select(&idx, &idx), None));
        } else {
            fixed_blocks.push(shifted);
        }
    }
    let mut first_l = hints.l.clone().map(|l| {
        let coords: Vec<f64> = u.iter().map(|b| crate::linalg::dot(b, &l)).collect();
        normalize(u.iter().zip(&coords).fold(vec![0.0; n1], |mut acc, (b, &c)| {
            acc.iter_mut().zip(b).for_each(|(a, bi)| *a += c * bi);
            acc
        }))
    });
    let grid = &opts.delta_grid;
    for _ in 0..opts.restarts.max(1) {
        let l = match first_l.take() {
            Some(l) if norm(&l) > 0.0 => l,
            _ => random_unit(rng, &u),
        };
        let lm = Matrix::row(&l);
        let llt = &lm.transpose() * &lm;
        let attempt = |delta: f64, theta: Vec<f64>| -> Result<(Vec<f64>, Option<Found>)> {
            let lmi = p.map(|m| project(&(m * &mext).symmetrize(), &u), Some(&project(&llt.scale(delta), &u)));
            let mut blocks = vec![lmi];
            blocks.extend(fixed_blocks.iter().cloned());
            let prog = Program { dim: p.dirs.len(), blocks };
            let mut stop = stop_margin(&prog);
            let mut theta = theta;
            for _ in 0..3 {
                let (best, _) = prog.minimize(theta, opts.max_iter, stop);
                let pm = p.at(&best).symmetrize();
                let (cert, report) = match eta {
                    Some(eta) => {
                        let c = CertificateCwCw { p: pm, l: lm.clone(), delta, eta };
                        let r = verify_cw_cw_with_rate(sys, &c, 0.5 * eta, tol)?;
                        (Certificate::D(c), r)
                    }
                    None => {
                        let c = CertificateCwCcw { p: pm, l: lm.clone(), delta };
                        let r = verify_cw_ccw(sys, &c, tol)?;
                        (Certificate::B(c), r)
                    }
                };
                if report.matrix_pass {
                    return Ok((best, Some((cert, report))));
                }
                theta = best;
                stop *= 10.0;
            }
            Ok((theta, None))
        };
        // Feasibility is monotone in δ: establish the smallest, then bisect
        // for the largest feasible grid value.
        let (theta0, found) = attempt(grid[0], vec![0.0; p.dirs.len()])?;
        let Some(mut best) = found else { continue };
        let mut theta = theta0;
        let (mut lo, mut hi) = (0usize, grid.len());
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let (t, f) = attempt(grid[mid], theta.clone())?;
            match f {
                Some(c) => {
                    best = c;
                    theta = t;
                    lo = mid;
                }
                None => hi = mid,
            }
        }
        return Ok(Some(best));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SearchOptions {
        SearchOptions {
            max_iter: 2000,
            restarts: 4,
            ..SearchOptions::default()
        }
    }

    #[test]
    fn case_a_toy_gives_q_one() {
        let sys = LinearSystem::from_rows(&[[-1.0]], &[1.0], &[1.0], 0.0).unwrap();
        let hints = SearchHints {
            xi: Some(0.5),
            ..SearchHints::default()
        };
        let (c, r) = feasibility_search_seeded(&sys, Case::A, &hints, &quick(), 1, &Tolerances::default())
            .unwrap()
            .unwrap();
        assert!(r.pass);
        let Certificate::A(c) = c else { panic!() };
        assert!((c.q[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_cb_is_none() {
        let sys = LinearSystem::from_rows(&[[-1.0]], &[1.0], &[-1.0], 0.0).unwrap();
        let hints = SearchHints {
            xi: Some(0.5),
            ..SearchHints::default()
        };
        assert!(feasibility_search_seeded(&sys, Case::A, &hints, &quick(), 1, &Tolerances::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn case_b_toy_first_column() {
        let sys = LinearSystem::from_rows(&[[-3.0]], &[1.0], &[-2.0], 1.0).unwrap();
        let (c, r) = feasibility_search_seeded(&sys, Case::B, &SearchHints::default(), &quick(), 7, &Tolerances::default())
            .unwrap()
            .unwrap();
        assert!(r.pass);
        let Certificate::B(c) = c else { panic!() };
        assert_eq!(c.p.col_vec(0), vec![1.0, -2.0]);
    }

    #[test]
    fn inconsistent_equalities_are_detected() {
        // X·e1 = e1 and X·e1 = 2e1 cannot both hold.
        let cons = [
            (vec![1.0, 0.0], vec![1.0, 0.0]),
            (vec![1.0, 0.0], vec![2.0, 0.0]),
        ];
        assert!(constrained_symmetric(2, &cons).is_none());
        let ok = constrained_symmetric(2, &cons[..1]).unwrap();
        assert_eq!(ok.dirs.len(), 1);
    }
}
