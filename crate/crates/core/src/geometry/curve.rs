use alloc::vec::Vec;

use crate::duhem::DuhemOperator;
use crate::{Error, Result};

const TOL: f64 = 1e-12;
const MAX_BISECT: usize = 200;

#[derive(Clone, Copy, Debug)]
struct Node {
    s: f64,
    z: f64,
    dz: f64,
}

/// One branch of the traversing function `σ ↦ ω_Φ(σ, γ0, v0)`.
///
/// Rightward (`σ ≥ v0`) it solves `z′ = f1(z, σ)`, leftward `z′ = f2(z, σ)`.
/// The curve is built lazily by adaptive RK4 (step doubling) and kept as
/// cubic Hermite dense output, whose integral is exact, so repeated
/// evaluation and quadrature never re-integrate.
#[derive(Clone, Debug)]
pub struct TraversingCurve<'a> {
    op: &'a DuhemOperator,
    gamma0: f64,
    v0: f64,
    dir: f64,
    nodes: Vec<Node>,
    h: f64,
    h_min: f64,
    limit: f64,
    scale: f64,
}

impl<'a> TraversingCurve<'a> {
    /// `rightward` selects the `f1` branch. The curve may extend up to the
    /// working rectangle edge on that side (or the anchor, if it lies
    /// beyond).
    pub fn new(op: &'a DuhemOperator, gamma0: f64, v0: f64, rightward: bool) -> Self {
        let r = op.rect();
        let span = r.v_max - r.v_min;
        let dir = if rightward { 1.0 } else { -1.0 };
        let limit = if rightward {
            r.v_max.max(v0)
        } else {
            r.v_min.min(v0)
        };
        let rate = op.branch_rate(gamma0, v0, dir);
        Self {
            op,
            gamma0,
            v0,
            dir,
            nodes: alloc::vec![Node {
                s: v0,
                z: gamma0,
                dz: rate,
            }],
            h: 1e-4 * span,
            h_min: 1e-13 * span,
            limit,
            scale: op.output_scale(),
        }
    }

    pub fn anchor(&self) -> (f64, f64) {
        (self.gamma0, self.v0)
    }

    pub fn is_rightward(&self) -> bool {
        self.dir > 0.0
    }

    /// Furthest input value the curve may reach.
    pub fn limit(&self) -> f64 {
        self.limit
    }

    fn rate(&self, z: f64, s: f64) -> f64 {
        if self.dir > 0.0 {
            self.op.f1(z, s)
        } else {
            self.op.f2(z, s)
        }
    }

    fn rk4(&self, s: f64, z: f64, dz: f64, h: f64) -> f64 {
        let k1 = dz;
        let k2 = self.rate(z + 0.5 * h * k1, s + 0.5 * h);
        let k3 = self.rate(z + 0.5 * h * k2, s + 0.5 * h);
        let k4 = self.rate(z + h * k3, s + h);
        z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    fn last(&self) -> Node {
        self.nodes[self.nodes.len() - 1]
    }

    fn at_limit(&self) -> bool {
        (self.limit - self.last().s) * self.dir <= 0.0
    }

    /// Advances by one accepted step. Returns `false` at the limit.
    fn step(&mut self) -> Result<bool> {
        if self.at_limit() {
            return Ok(false);
        }
        let n0 = self.last();
        loop {
            let remaining = (self.limit - n0.s).abs();
            let h = self.h.min(remaining);
            let hs = h * self.dir;
            let full = self.rk4(n0.s, n0.z, n0.dz, hs);
            let sm = n0.s + 0.5 * hs;
            let zm = self.rk4(n0.s, n0.z, n0.dz, 0.5 * hs);
            let dzm = self.rate(zm, sm);
            let se = if h == remaining { self.limit } else { n0.s + hs };
            let ze = self.rk4(sm, zm, dzm, 0.5 * hs);
            let dze = self.rate(ze, se);
            let tol = TOL * self.scale.max(ze.abs());
            let err = (ze - full).abs() / 15.0;
            let mid = hermite(n0.s, n0.z, n0.dz, se, ze, dze, sm);
            let mid_err = (mid - zm).abs();
            if !ze.is_finite() || ze.abs() > self.op.blowup_bound() {
                return Err(Error::Blowup {
                    at: se,
                    value: ze.abs(),
                    bound: self.op.blowup_bound(),
                });
            }
            let worst = err.max(mid_err);
            if worst <= tol {
                self.nodes.push(Node { s: sm, z: zm, dz: dzm });
                self.nodes.push(Node { s: se, z: ze, dz: dze });
                let grow = if worst == 0.0 {
                    2.0
                } else {
                    (0.9 * crate::math::powf(tol / worst, 0.2)).clamp(0.5, 2.0)
                };
                self.h = (h * grow).max(self.h_min);
                return Ok(true);
            }
            if h <= self.h_min {
                return Err(Error::Blowup {
                    at: n0.s,
                    value: ze.abs(),
                    bound: self.op.blowup_bound(),
                });
            }
            let shrink = (0.9 * crate::math::powf(tol / worst, 0.2)).clamp(0.1, 0.5);
            self.h = (h * shrink).max(self.h_min);
        }
    }

    /// Extends the curve until it covers `s` (or hits the limit).
    fn cover(&mut self, s: f64) -> Result<bool> {
        while (s - self.last().s) * self.dir > 0.0 {
            if !self.step()? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn locate(&self, s: f64) -> usize {
        // nodes are ordered by dir·s
        let key = s * self.dir;
        let k = self.nodes.partition_point(|n| n.s * self.dir <= key);
        k.clamp(1, self.nodes.len() - 1) - 1
    }

    fn covers(&self, s: f64) -> bool {
        (s - self.v0) * self.dir >= 0.0 && (self.last().s - s) * self.dir >= 0.0
    }

    fn out_of_range(&self, s: f64) -> Error {
        Error::Domain {
            gamma: self.gamma0,
            v: s,
        }
    }

    /// `ω(s)`.
    pub fn eval(&mut self, s: f64) -> Result<f64> {
        if (s - self.v0) * self.dir < 0.0 || !self.cover(s)? {
            return Err(self.out_of_range(s));
        }
        Ok(self.interp(s))
    }

    fn interp(&self, s: f64) -> f64 {
        if self.nodes.len() == 1 {
            return self.gamma0;
        }
        let k = self.locate(s);
        let a = self.nodes[k];
        let b = self.nodes[k + 1];
        hermite(a.s, a.z, a.dz, b.s, b.z, b.dz, s)
    }

    /// `∫_{v0}^{s} ω(σ) dσ` (signed, so negative when `s < v0`).
    pub fn integral(&mut self, s: f64) -> Result<f64> {
        if (s - self.v0) * self.dir < 0.0 || !self.cover(s)? {
            return Err(self.out_of_range(s));
        }
        let mut acc = 0.0;
        for w in self.nodes.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (b.s - s) * self.dir <= 0.0 {
                acc += (b.s - a.s) * 0.5 * (a.z + b.z) + (b.s - a.s) * (b.s - a.s) / 12.0 * (a.dz - b.dz);
            } else {
                if (s - a.s) * self.dir > 0.0 {
                    let m = 0.5 * (a.s + s);
                    let pm = hermite(a.s, a.z, a.dz, b.s, b.z, b.dz, m);
                    let ps = hermite(a.s, a.z, a.dz, b.s, b.z, b.dz, s);
                    acc += (s - a.s) / 6.0 * (a.z + 4.0 * pm + ps);
                }
                break;
            }
        }
        Ok(acc)
    }

    /// First `s` past the anchor where `ω(s) = target(s)`, found by marching
    /// the nodes for a sign change and bisecting on the dense output.
    pub fn crossing<F>(&mut self, mut target: F) -> Result<Option<f64>>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let g0 = self.gamma0 - target(self.v0)?;
        if g0 == 0.0 {
            return Ok(Some(self.v0));
        }
        let mut k = 0;
        loop {
            while k + 1 >= self.nodes.len() {
                if !self.step()? {
                    return Ok(None);
                }
            }
            let n = self.nodes[k + 1];
            let g = n.z - target(n.s)?;
            if g == 0.0 {
                return Ok(Some(n.s));
            }
            if (g > 0.0) != (g0 > 0.0) {
                let (mut lo, mut hi) = (self.nodes[k].s, n.s);
                for _ in 0..MAX_BISECT {
                    let mid = 0.5 * (lo + hi);
                    if mid == lo || mid == hi {
                        break;
                    }
                    let gm = self.interp(mid) - target(mid)?;
                    if gm == 0.0 {
                        return Ok(Some(mid));
                    }
                    if (gm > 0.0) == (g0 > 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(Some(0.5 * (lo + hi)));
            }
            k += 1;
        }
    }

    #[allow(dead_code)]
    pub(crate) fn node_count(&self) -> usize {
        self.nodes.len()
    }

    #[allow(dead_code)]
    pub(crate) fn covers_point(&self, s: f64) -> bool {
        self.covers(s)
    }
}

/// Cubic Hermite interpolant through `(a, za, da)` and `(b, zb, db)`.
fn hermite(a: f64, za: f64, da: f64, b: f64, zb: f64, db: f64, s: f64) -> f64 {
    let h = b - a;
    if h == 0.0 {
        return za;
    }
    let t = (s - a) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * za
        + (t3 - 2.0 * t2 + t) * h * da
        + (-2.0 * t3 + 3.0 * t2) * zb
        + (t3 - t2) * h * db
}
