use alloc::format;
use alloc::vec::Vec;

use super::{Certificate, LinearSystem, VerificationReport};
use crate::linalg::dot;
use crate::{Error, Result};

/// Row `N` over `(x, y_Φ)`; the closed loop converges to the largest
/// invariant subset of `{z : N z = 0}`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InvariantSetDescriptor {
    pub n: Vec<f64>,
}

impl InvariantSetDescriptor {
    /// `|N·[x; y_Φ]|`.
    pub fn distance(&self, x: &[f64], y_phi: f64) -> Result<f64> {
        if x.len() + 1 != self.n.len() {
            return Err(Error::Shape(format!(
                "state has {} entries, N expects {}",
                x.len(),
                self.n.len() - 1
            )));
        }
        let k = self.n.len() - 1;
        Ok((dot(&self.n[..k], x) + self.n[k] * y_phi).abs())
    }
}

/// Case (a): `N = [CA, CB]`; (c): `N = [CA, −CB]`. Cases (b) and (d) read
/// `N` off `L[w; x]` with `w = −y_Φ` (negative feedback) or `w = y_Φ`
/// (positive feedback), reordered to `(x, y_Φ)`.
pub fn invariant_set(
    sys: &LinearSystem,
    cert: &Certificate,
    report: &VerificationReport,
) -> Result<InvariantSetDescriptor> {
    if !report.matrix_pass || report.case != cert.case() {
        return Err(Error::UnverifiedCertificate);
    }
    let n = match cert {
        Certificate::A(_) | Certificate::C(_) => {
            let ca = sys.c() * sys.a();
            let cb = sys.cb();
            let mut n = ca.as_slice().to_vec();
            n.push(if matches!(cert, Certificate::A(_)) { cb } else { -cb });
            n
        }
        Certificate::B(c) => from_l(c.l.as_slice(), -1.0),
        Certificate::D(c) => from_l(c.l.as_slice(), 1.0),
    };
    Ok(InvariantSetDescriptor { n })
}

fn from_l(l: &[f64], w_sign: f64) -> Vec<f64> {
    let mut n = l[1..].to_vec();
    n.push(w_sign * l[0]);
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{verify_ccw_ccw, verify_cw_ccw, CertificateCcwCcw, CertificateCwCcw, Tolerances};
    use crate::linalg::Matrix;

    #[test]
    fn case_a_toy_descriptor() {
        let sys = LinearSystem::from_rows(&[[-1.0]], &[1.0], &[1.0], 0.0).unwrap();
        let c = CertificateCcwCcw {
            q: Matrix::scalar(1.0),
            xi: 0.5,
        };
        let r = verify_ccw_ccw(&sys, &c, &[], &Tolerances::default()).unwrap();
        let n = invariant_set(&sys, &Certificate::A(c), &r).unwrap();
        assert_eq!(n.n, alloc::vec![-1.0, 1.0]);
        assert_eq!(n.distance(&[2.0], 2.0).unwrap(), 0.0);
    }

    #[test]
    fn case_b_toy_descriptor() {
        let sys = LinearSystem::from_rows(&[[-3.0]], &[1.0], &[-2.0], 1.0).unwrap();
        let c = CertificateCwCcw {
            p: Matrix::from_rows(&[[1.0, -2.0], [-2.0, 6.0]]).unwrap(),
            l: Matrix::row(&[1.0, -3.0]),
            delta: 2.0,
        };
        let r = verify_cw_ccw(&sys, &c, &Tolerances::default()).unwrap();
        let n = invariant_set(&sys, &Certificate::B(c.clone()), &r).unwrap();
        // −3x − y_Φ = 0
        assert_eq!(n.n, alloc::vec![-3.0, -1.0]);
        let mut bad = r.clone();
        bad.matrix_pass = false;
        assert_eq!(
            invariant_set(&sys, &Certificate::B(c), &bad),
            Err(Error::UnverifiedCertificate)
        );
    }
}
