//! Closed-loop simulation of a linear system in feedback with a Duhem
//! operator, with Lyapunov and invariant-set monitoring.
//!
//! With feedback sign `s`:
//!
//! ```text
//! ẋ   = A x + B s y_Φ
//! u_Φ = C x + D s y_Φ
//! ẏ_Φ = f_i(y_Φ, u_Φ) u̇_Φ,   u̇_Φ = C ẋ + D s ẏ_Φ
//! ```
//!
//! so on branch `i`, `ẏ_Φ = f_i C ẋ / (1 − s D f_i)`. A branch is consistent
//! when the resulting `u̇_Φ` has its sign (up for `f1`, down for `f2`). If
//! both or neither are consistent the operator output is held.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::certify::{Case, Certificate, InvariantSetDescriptor, LinearSystem, Tolerances};
use crate::duhem::{classify, DuhemOperator, Orientation, Rect};
use crate::geometry::{Context, Mode};
use crate::linalg::dot;
use crate::{Error, Result};

/// Threshold on `|1 − s D f|` below which the derivative loop is singular.
pub const LOOP_SINGULAR: f64 = 1e-9;
const MIN_STEP_DIVISOR: f64 = 64.0;

#[derive(Clone, Debug)]
pub struct Interconnection {
    pub sys: LinearSystem,
    pub op: DuhemOperator,
    pub case: Case,
}

impl Interconnection {
    pub fn new(sys: LinearSystem, op: DuhemOperator, case: Case) -> Self {
        Self { sys, op, case }
    }

    /// `+1` for positive, `−1` for negative feedback.
    pub fn sign(&self) -> f64 {
        self.case.sign()
    }

    /// Classifies the operator on `rect` and compares with what the case
    /// requires.
    pub fn orientation_matches(&self, rect: &Rect, grid: usize, margin: f64) -> Result<bool> {
        let c = classify(&self.op, rect, grid, margin)?;
        Ok(c.orientation == self.case.operator_orientation())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimOptions {
    pub t_end: f64,
    pub dt: f64,
    /// Record every `sample_every` integration steps (and the final state).
    pub sample_every: usize,
}

impl SimOptions {
    pub fn new(t_end: f64, dt: f64) -> Self {
        Self {
            t_end,
            dt,
            sample_every: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum BranchUse {
    Up,
    Down,
    Hold,
}

/// Sampled closed-loop solution. `u` is the plant input `s·y_Φ` and `y` the
/// plant output, which drives the operator (`u_Φ = y`).
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub y_phi: Vec<f64>,
    /// Filled by [`lyapunov_monitor`] via [`Trajectory::attach_lyapunov`].
    pub h_cl: Option<Vec<f64>>,
    /// Every step started on a branch whose resolved `u̇_Φ` sign matched it.
    pub branch_audit_ok: bool,
    /// Steps split because the branch changed within them.
    pub bisections: usize,
    /// Minimum-size steps accepted although the branch still changed.
    pub unresolved_flips: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn attach_lyapunov(&mut self, values: Vec<f64>) {
        self.h_cl = Some(values);
    }
}

struct Loop<'a> {
    sys: &'a LinearSystem,
    op: &'a DuhemOperator,
    s: f64,
}

impl Loop<'_> {
    fn x_dot(&self, x: &[f64], y_phi: f64) -> Vec<f64> {
        let mut dx = self.sys.a().mul_vec(x);
        let u = self.s * y_phi;
        for (i, d) in dx.iter_mut().enumerate() {
            *d += self.sys.b()[(i, 0)] * u;
        }
        dx
    }

    fn u_phi(&self, x: &[f64], y_phi: f64) -> f64 {
        dot(self.sys.c().as_slice(), x) + self.sys.d() * self.s * y_phi
    }

    /// `(ẏ_Φ, u̇_Φ)` on branch `b`.
    fn rates(&self, t: f64, x: &[f64], y_phi: f64, b: BranchUse) -> Result<(Vec<f64>, f64, f64)> {
        let dx = self.x_dot(x, y_phi);
        let cdx = dot(self.sys.c().as_slice(), &dx);
        let v = self.u_phi(x, y_phi);
        let f = match b {
            BranchUse::Up => self.op.f1(y_phi, v),
            BranchUse::Down => self.op.f2(y_phi, v),
            BranchUse::Hold => return Ok((dx, 0.0, cdx)),
        };
        let gain = 1.0 - self.s * self.sys.d() * f;
        if gain.abs() < LOOP_SINGULAR {
            return Err(Error::AlgebraicLoopSingular { t, gain: gain.abs() });
        }
        let du = cdx / gain;
        Ok((dx, f * du, du))
    }

    fn select(&self, t: f64, x: &[f64], y_phi: f64) -> Result<BranchUse> {
        let (_, _, up) = self.rates(t, x, y_phi, BranchUse::Up)?;
        let (_, _, down) = self.rates(t, x, y_phi, BranchUse::Down)?;
        Ok(match (up > 0.0, down < 0.0) {
            (true, false) => BranchUse::Up,
            (false, true) => BranchUse::Down,
            _ => BranchUse::Hold,
        })
    }

    fn rk4(&self, t: f64, x: &[f64], y: f64, h: f64, b: BranchUse) -> Result<(Vec<f64>, f64)> {
        let axpy = |x: &[f64], k: &[f64], c: f64| -> Vec<f64> {
            x.iter().zip(k).map(|(a, b)| a + c * b).collect()
        };
        let (k1x, k1y, _) = self.rates(t, x, y, b)?;
        let (k2x, k2y, _) = self.rates(t + 0.5 * h, &axpy(x, &k1x, 0.5 * h), y + 0.5 * h * k1y, b)?;
        let (k3x, k3y, _) = self.rates(t + 0.5 * h, &axpy(x, &k2x, 0.5 * h), y + 0.5 * h * k2y, b)?;
        let (k4x, k4y, _) = self.rates(t + h, &axpy(x, &k3x, h), y + h * k3y, b)?;
        let xn = (0..x.len())
            .map(|i| x[i] + h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]))
            .collect();
        let yn = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        Ok((xn, yn))
    }
}

struct Stats {
    audit_ok: bool,
    bisections: usize,
    unresolved: usize,
}

fn advance(
    lp: &Loop<'_>,
    t: f64,
    x: &[f64],
    y: f64,
    h: f64,
    h_min: f64,
    stats: &mut Stats,
) -> Result<(Vec<f64>, f64)> {
    let b = lp.select(t, x, y)?;
    let (_, _, du) = lp.rates(t, x, y, b)?;
    let consistent = match b {
        BranchUse::Up => du > 0.0,
        BranchUse::Down => du < 0.0,
        BranchUse::Hold => true,
    };
    stats.audit_ok &= consistent;
    let (xn, yn) = lp.rk4(t, x, y, h, b)?;
    let bn = lp.select(t + h, &xn, yn)?;
    if bn == b || b == BranchUse::Hold && bn == BranchUse::Hold {
        return Ok((xn, yn));
    }
    if h * 0.5 < h_min {
        stats.unresolved += 1;
        return Ok((xn, yn));
    }
    stats.bisections += 1;
    let (xm, ym) = advance(lp, t, x, y, 0.5 * h, h_min, stats)?;
    advance(lp, t + 0.5 * h, &xm, ym, 0.5 * h, h_min, stats)
}

/// Integrates the interconnection from `x0` and `y_Φ(0) = op.y0()` with
/// fixed-step RK4, the branch frozen within a step. When the branch at the
/// end of a step differs from the one used, the step is bisected, down to
/// `dt/64`.
pub fn simulate_closed_loop(ic: &Interconnection, x0: &[f64], opts: &SimOptions) -> Result<Trajectory> {
    let n = ic.sys.order();
    if x0.len() != n {
        return Err(Error::Shape(format!("x0 has {} entries, system order is {n}", x0.len())));
    }
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {}", opts.dt)));
    }
    if !(opts.t_end >= 0.0 && opts.t_end.is_finite()) {
        return Err(Error::InvalidInput(format!("T must be nonnegative, got {}", opts.t_end)));
    }
    let every = opts.sample_every.max(1);
    let lp = Loop {
        sys: &ic.sys,
        op: &ic.op,
        s: ic.sign(),
    };
    let norm0 = crate::linalg::norm(x0) + ic.op.y0().abs();
    let bound = 1e6 * (1.0 + norm0);
    let steps = crate::math::ceil(opts.t_end / opts.dt - 1e-9).max(0.0) as usize;
    let mut traj = Trajectory {
        branch_audit_ok: true,
        ..Trajectory::default()
    };
    let mut stats = Stats {
        audit_ok: true,
        bisections: 0,
        unresolved: 0,
    };
    let mut x = x0.to_vec();
    let mut y = ic.op.y0();
    let record = |traj: &mut Trajectory, t: f64, x: &[f64], y: f64| {
        traj.times.push(t);
        traj.x.push(x.to_vec());
        traj.u.push(lp.s * y);
        traj.y.push(lp.u_phi(x, y));
        traj.y_phi.push(y);
    };
    record(&mut traj, 0.0, &x, y);
    let h_min = opts.dt / MIN_STEP_DIVISOR;
    for k in 0..steps {
        let t = k as f64 * opts.dt;
        let h = if k + 1 == steps { opts.t_end - t } else { opts.dt };
        let (xn, yn) = advance(&lp, t, &x, y, h, h_min.min(h), &mut stats)?;
        x = xn;
        y = yn;
        let size = crate::linalg::norm(&x) + y.abs();
        if !size.is_finite() || size > bound {
            return Err(Error::Blowup {
                at: t + h,
                value: size,
                bound,
            });
        }
        if (k + 1) % every == 0 || k + 1 == steps {
            record(&mut traj, if k + 1 == steps { opts.t_end } else { t + h }, &x, y);
        }
    }
    traj.branch_audit_ok = stats.audit_ok;
    traj.bisections = stats.bisections;
    traj.unresolved_flips = stats.unresolved;
    Ok(traj)
}

/// Closed-loop Lyapunov values along a trajectory.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LyapunovSeries {
    pub values: Vec<f64>,
    /// `max_k (H[k+1] − H[k])`.
    pub max_increment: f64,
    /// `mono·(1 + max|H|)`.
    pub tolerance: f64,
    pub pass: bool,
}

/// Evaluates the case's `H_cl` at every trajectory sample:
///
/// * (a) `½xᵀQx + H_⟲(y_Φ, Cx) − Cx·y_Φ`
/// * (b) `H_⟲(y_Φ, Cx − D y_Φ) + ½[w; x]ᵀP[w; x]`, `w = −y_Φ`
/// * (c) `½xᵀQx + H_⟳(y_Φ, Cx)`
/// * (d) `H_⟳(y_Φ, y) + ½[w; x]ᵀP[w; x] − y·y_Φ`, `w = y_Φ`, `y = Cx + D y_Φ`
pub fn lyapunov_monitor(
    traj: &Trajectory,
    ic: &Interconnection,
    cert: &Certificate,
    tol: &Tolerances,
) -> Result<LyapunovSeries> {
    if cert.case() != ic.case {
        return Err(Error::InvalidInput(format!(
            "certificate is for case {}, interconnection is case {}",
            cert.case().as_str(),
            ic.case.as_str()
        )));
    }
    let mut ctx = Context::new(&ic.op);
    let c = ic.sys.c().as_slice();
    let d = ic.sys.d();
    let mut values = Vec::with_capacity(traj.len());
    for (x, &yp) in traj.x.iter().zip(&traj.y_phi) {
        let cx = dot(c, x);
        let h = match cert {
            Certificate::A(k) => {
                0.5 * k.q.symmetrize().quad_form(x) + ctx.storage(yp, cx, Mode::Ccw)?.value - cx * yp
            }
            Certificate::B(k) => {
                let v = ctx.storage(yp, cx - d * yp, Mode::Ccw)?.value;
                v + 0.5 * k.p.symmetrize().quad_form(&extended(-yp, x))
            }
            Certificate::C(k) => 0.5 * k.q.symmetrize().quad_form(x) + ctx.storage(yp, cx, Mode::Cw)?.value,
            Certificate::D(k) => {
                let y = cx + d * yp;
                ctx.storage(yp, y, Mode::Cw)?.value + 0.5 * k.p.symmetrize().quad_form(&extended(yp, x))
                    - y * yp
            }
        };
        values.push(h);
    }
    let max_increment = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let h_max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tolerance = tol.mono_for(h_max);
    Ok(LyapunovSeries {
        pass: max_increment <= tolerance,
        values,
        max_increment,
        tolerance,
    })
}

fn extended(w: f64, x: &[f64]) -> Vec<f64> {
    let mut z = vec![w];
    z.extend_from_slice(x);
    z
}

/// `|N·[x; y_Φ]|` at every sample.
pub fn invariant_distance(traj: &Trajectory, n: &InvariantSetDescriptor) -> Result<Vec<f64>> {
    traj.x
        .iter()
        .zip(&traj.y_phi)
        .map(|(x, &yp)| n.distance(x, yp))
        .collect()
}

/// Whether the final 10% of `series` (at least one sample) stays within `tol`.
pub fn converged(series: &[f64], tol: f64) -> bool {
    if series.is_empty() {
        return false;
    }
    let k = (series.len() / 10).max(1);
    series[series.len() - k..].iter().all(|v| v.abs() <= tol)
}

/// Orientation-consistency helper: the operator orientation a case needs.
pub fn required_orientation(case: Case) -> Orientation {
    case.operator_orientation()
}
