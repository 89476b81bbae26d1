use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::linalg::{svd, Matrix};
use crate::{Error, Result};

/// SISO system `ẋ = Ax + Bu`, `y = Cx + Du`. `n = 0` is a static gain.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearSystem {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    d: f64,
}

impl LinearSystem {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: f64) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() {
            return Err(Error::Shape(format!("A is {}x{}, not square", a.rows(), a.cols())));
        }
        if b.shape() != (n, 1) {
            return Err(Error::Shape(format!(
                "B is {}x{}, expected {n}x1",
                b.rows(),
                b.cols()
            )));
        }
        if c.shape() != (1, n) {
            return Err(Error::Shape(format!(
                "C is {}x{}, expected 1x{n}",
                c.rows(),
                c.cols()
            )));
        }
        let finite = a.as_slice().iter().chain(b.as_slice()).chain(c.as_slice()).all(|x| x.is_finite());
        if !finite || !d.is_finite() {
            return Err(Error::InvalidInput("system matrices must be finite".into()));
        }
        Ok(Self { a, b, c, d })
    }

    /// Builds from row lists; `b` is the column of `B`, `c` the row of `C`.
    pub fn from_rows<R: AsRef<[f64]>>(a: &[R], b: &[f64], c: &[f64], d: f64) -> Result<Self> {
        let n = a.len();
        let am = if n == 0 {
            Matrix::zeros(0, 0)
        } else {
            Matrix::from_rows(a)?
        };
        Self::new(am, Matrix::column(b), Matrix::row(c), d)
    }

    /// Static gain `y = d·u`.
    pub fn gain(d: f64) -> Self {
        Self {
            a: Matrix::zeros(0, 0),
            b: Matrix::zeros(0, 1),
            c: Matrix::zeros(1, 0),
            d,
        }
    }

    pub fn order(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// `CB` (zero for a static gain).
    pub fn cb(&self) -> f64 {
        (&self.c * &self.b)[(0, 0)]
    }

    /// Ranks of the controllability and observability matrices.
    pub fn kalman_ranks(&self) -> (usize, usize) {
        let n = self.order();
        if n == 0 {
            return (0, 0);
        }
        let mut ctrb = self.b.clone();
        let mut col = self.b.clone();
        let mut obsv = self.c.clone();
        let mut row = self.c.clone();
        for _ in 1..n {
            col = &self.a * &col;
            row = &row * &self.a;
            ctrb = ctrb.hstack(&col).expect("same row count");
            obsv = obsv.vstack(&row).expect("same column count");
        }
        (svd(&ctrb).rank(1e-10), svd(&obsv).rank(1e-10))
    }

    /// Warnings when the realization is not minimal. Minimality is assumed
    /// by the stability results but not needed by the checks themselves.
    pub fn minimality_warnings(&self) -> Vec<String> {
        let n = self.order();
        let (rc, ro) = self.kalman_ranks();
        let mut w = Vec::new();
        if rc < n {
            w.push(format!("realization is not controllable (rank {rc} < {n})"));
        }
        if ro < n {
            w.push(format!("realization is not observable (rank {ro} < {n})"));
        }
        w
    }
}

/// Where the controller sits relative to the plant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Topology {
    /// Plant output feeds the controller; hysteresis acts on the plant input.
    Actuator,
    /// Controller output feeds the plant; hysteresis acts on the measurement.
    Sensor,
}

/// Series connection of plant `g` and controller `k`, state order `(x_G, x_C)`.
///
/// Actuator: `A = [[A_G, 0], [B_C C_G, A_C]]`, `B = [B_G; B_C D_G]`,
/// `C = [D_C C_G, C_C]`, `D = D_C D_G`.
/// Sensor: `A = [[A_G, B_G C_C], [0, A_C]]`, `B = [B_G D_C; B_C]`,
/// `C = [C_G, D_G C_C]`, `D = D_G D_C`.
pub fn cascade(g: &LinearSystem, k: &LinearSystem, topology: Topology) -> Result<LinearSystem> {
    let (ng, nk) = (g.order(), k.order());
    let z_gk = Matrix::zeros(ng, nk);
    let z_kg = Matrix::zeros(nk, ng);
    let (a, b, c) = match topology {
        Topology::Actuator => (
            Matrix::block2(g.a(), &z_gk, &k.b().checked_mul(g.c())?, k.a())?,
            g.b().vstack(&k.b().scale(g.d()))?,
            g.c().scale(k.d()).hstack(k.c())?,
        ),
        Topology::Sensor => (
            Matrix::block2(g.a(), &g.b().checked_mul(k.c())?, &z_kg, k.a())?,
            g.b().scale(k.d()).vstack(k.b())?,
            g.c().hstack(&k.c().scale(g.d()))?,
        ),
    };
    LinearSystem::new(a, b, c, g.d() * k.d())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plant() -> LinearSystem {
        LinearSystem::from_rows(&[[0.0, 1.0], [-1.0, -2.0]], &[0.0, 1.0], &[1.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn actuator_cascade_block_formula() {
        let k = LinearSystem::from_rows(&[[0.0, 1.0], [-2.0, -4.0]], &[0.0, 1.0], &[-1.5, -2.0], 1.0)
            .unwrap();
        let s = cascade(&plant(), &k, Topology::Actuator).unwrap();
        let a = Matrix::from_rows(&[
            [0.0, 1.0, 0.0, 0.0],
            [-1.0, -2.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [1.0, 0.0, -2.0, -4.0],
        ])
        .unwrap();
        assert_eq!(s.a(), &a);
        assert_eq!(s.b().as_slice(), &[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(s.c().as_slice(), &[1.0, 0.0, -1.5, -2.0]);
        assert_eq!(s.d(), 1.0);
    }

    #[test]
    fn identity_controller_is_transparent() {
        let g = plant();
        for t in [Topology::Actuator, Topology::Sensor] {
            assert_eq!(cascade(&g, &LinearSystem::gain(1.0), t).unwrap(), g);
        }
    }

    #[test]
    fn sensor_cascade_shapes() {
        let k = LinearSystem::from_rows(&[[-1.0]], &[1.0], &[2.0], 0.5).unwrap();
        let s = cascade(&plant(), &k, Topology::Sensor).unwrap();
        assert_eq!(s.order(), 3);
        assert_eq!(s.a()[(1, 2)], 2.0);
        assert_eq!(s.b().as_slice(), &[0.0, 0.5, 1.0]);
        assert_eq!(s.c().as_slice(), &[1.0, 0.0, 2.0]);
        assert_eq!(s.d(), 0.5);
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(
            LinearSystem::from_rows(&[[0.0, 1.0], [-1.0, -2.0]], &[0.0], &[1.0, 0.0], 0.0),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn minimality_warning_for_uncontrollable() {
        let s = LinearSystem::from_rows(&[[-1.0, 0.0], [0.0, -2.0]], &[1.0, 0.0], &[1.0, 1.0], 0.0)
            .unwrap();
        assert_eq!(s.minimality_warnings().len(), 1);
        assert!(plant().minimality_warnings().is_empty());
    }
}
