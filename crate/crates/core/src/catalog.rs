//! Ready-made instances: four scalar toy loops, one per case, and the
//! mass-damper-spring plant with a hysteretic actuator under the four
//! controller/feedback combinations.

use alloc::vec;
use alloc::vec::Vec;

use crate::certify::{
    cascade, Case, Certificate, CertificateCcwCcw, CertificateCcwCw, CertificateCwCcw,
    CertificateCwCw, LinearSystem, Topology,
};
use crate::duhem::AffineRates;
use crate::duhem::{DuhemOperator, Rect};
use crate::linalg::Matrix;
use crate::simulate::Interconnection;

/// Identifiers accepted by [`by_id`], in reproduction order.
pub const IDS: [&str; 8] = [
    "ex_case_a",
    "ex_case_b",
    "ex_case_c",
    "ex_case_d",
    "vii_a_negative",
    "vii_a_positive",
    "vii_b_negative",
    "vii_b_positive",
];

/// What a closed-loop run of the instance is expected to show.
#[derive(Clone, Debug, PartialEq)]
pub enum Expectation {
    /// Distance to the certificate's invariant set settles below `conv`.
    InvariantSet,
    /// `x[velocity]` settles to zero and `x[position]` stops drifting.
    Settles { position: usize, velocity: usize },
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub id: &'static str,
    pub case: Case,
    pub plant: LinearSystem,
    pub controller: Option<LinearSystem>,
    /// Cascade seen by the operator (equal to `plant` for the toys).
    pub sys: LinearSystem,
    pub op: DuhemOperator,
    /// Rectangle used for sampled operator conditions and classification.
    pub rect: Rect,
    pub cert: Certificate,
    pub x0: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
    pub expectation: Expectation,
}

impl Instance {
    pub fn interconnection(&self) -> Interconnection {
        Interconnection::new(self.sys.clone(), self.op.clone(), self.case)
    }
}

pub fn by_id(id: &str) -> Option<Instance> {
    Some(match id {
        "ex_case_a" => ex_case_a(),
        "ex_case_b" => ex_case_b(),
        "ex_case_c" => ex_case_c(),
        "ex_case_d" => ex_case_d(),
        "vii_a_negative" => vii_a_negative(),
        "vii_a_positive" => vii_a_positive(),
        "vii_b_negative" => vii_b_negative(),
        "vii_b_positive" => vii_b_positive(),
        _ => return None,
    })
}

pub fn all() -> Vec<Instance> {
    IDS.iter().filter_map(|id| by_id(id)).collect()
}

fn m(rows: &[&[f64]]) -> Matrix {
    Matrix::from_rows(rows).expect("catalog matrices are rectangular")
}

fn sys(a: &[&[f64]], b: &[f64], c: &[f64], d: f64) -> LinearSystem {
    LinearSystem::from_rows(a, b, c, d).expect("catalog systems are well formed")
}

/// CCW operator with `f_an(v) = 0.4v`, inside the sector `[0, 0.5]`.
pub fn toy_ccw_operator() -> DuhemOperator {
    let rect = Rect::symmetric(20.0, 40.0).expect("valid rect");
    DuhemOperator::affine(AffineRates::symmetric(0.4, 0.2), rect)
}

/// CW Dahl operator, `f1 = (1 − γ)`, `f2 = (1 + γ)`, no rate bound needed.
pub fn toy_cw_operator() -> DuhemOperator {
    DuhemOperator::dahl(1.0, 1.0, 1.0).expect("valid Dahl parameters")
}

/// CW Dahl operator with rates at most `¼` on its band `|γ| ≤ 1`.
pub fn toy_cw_bounded_operator() -> DuhemOperator {
    DuhemOperator::dahl(1.0, 0.125, 1.0).expect("valid Dahl parameters")
}

fn toy_scalar() -> LinearSystem {
    sys(&[&[-1.0]], &[1.0], &[1.0], 0.0)
}

fn toy_feedthrough() -> LinearSystem {
    sys(&[&[-3.0]], &[1.0], &[-2.0], 1.0)
}

fn toy_p() -> Matrix {
    m(&[&[1.0, -2.0], &[-2.0, 6.0]])
}

pub fn toy_a_certificate() -> CertificateCcwCcw {
    CertificateCcwCcw {
        q: Matrix::scalar(1.0),
        xi: 0.5,
    }
}

pub fn toy_b_certificate() -> CertificateCwCcw {
    CertificateCwCcw {
        p: toy_p(),
        l: Matrix::row(&[1.0, -3.0]),
        delta: 2.0,
    }
}

pub fn toy_c_certificate() -> CertificateCcwCw {
    CertificateCcwCw { q: Matrix::scalar(1.0) }
}

pub fn toy_d_certificate() -> CertificateCwCw {
    CertificateCwCw {
        p: toy_p(),
        l: Matrix::row(&[1.0, -3.0]),
        delta: 2.0,
        eta: 0.5,
    }
}

fn toy(id: &'static str, case: Case, plant: LinearSystem, op: DuhemOperator, cert: Certificate) -> Instance {
    let rect = match case {
        Case::A | Case::B => *op.rect(),
        // Band of the Dahl operators plus a margin on each side.
        Case::C | Case::D => Rect::new((-1.5, 1.5), (-10.0, 10.0)).expect("valid rect"),
    };
    Instance {
        id,
        case,
        sys: plant.clone(),
        plant,
        controller: None,
        op,
        rect,
        cert,
        x0: vec![1.0],
        t_end: 30.0,
        dt: 1e-3,
        expectation: Expectation::InvariantSet,
    }
}

pub fn ex_case_a() -> Instance {
    toy("ex_case_a", Case::A, toy_scalar(), toy_ccw_operator(), Certificate::A(toy_a_certificate()))
}

pub fn ex_case_b() -> Instance {
    toy("ex_case_b", Case::B, toy_feedthrough(), toy_ccw_operator(), Certificate::B(toy_b_certificate()))
}

pub fn ex_case_c() -> Instance {
    toy("ex_case_c", Case::C, toy_scalar(), toy_cw_operator(), Certificate::C(toy_c_certificate()))
}

pub fn ex_case_d() -> Instance {
    toy(
        "ex_case_d",
        Case::D,
        toy_feedthrough(),
        toy_cw_bounded_operator(),
        Certificate::D(toy_d_certificate()),
    )
}

/// Mass-damper-spring plant, `m = 1`, `b = 2`, `k = 1`, with direct
/// feedthrough of the actuator force.
pub fn mds_plant() -> LinearSystem {
    sys(&[&[0.0, 1.0], &[-1.0, -2.0]], &[0.0, 1.0], &[1.0, 0.0], 1.0)
}

/// CCW actuator `f1 = −γ + 0.475v + 0.3`, `f2 = γ − 0.475v + 0.3`.
pub fn mds_ccw_operator() -> DuhemOperator {
    let rect = Rect::symmetric(25.0, 50.0).expect("valid rect");
    DuhemOperator::affine(AffineRates::symmetric(0.475, 0.3), rect)
}

/// CW actuator `f1 = ¼(1 − γ)`, `f2 = ¼(1 + γ)`.
pub fn mds_cw_operator() -> DuhemOperator {
    DuhemOperator::dahl(1.0, 0.25, 1.0)
        .expect("valid Dahl parameters")
        .with_rect(Rect::symmetric(10.0, 50.0).expect("valid rect"))
}

pub fn controller_a_negative() -> LinearSystem {
    sys(&[&[0.0, 1.0], &[-2.0, -4.0]], &[0.0, 1.0], &[-1.5, -2.0], 1.0)
}

pub fn controller_strictly_proper() -> LinearSystem {
    sys(&[&[0.0, 1.0], &[-2.0, -4.0]], &[0.0, 1.0], &[1.0, 1.0], 0.0)
}

pub fn controller_b_positive() -> LinearSystem {
    sys(&[&[0.0, 1.0], &[-2.0, -3.0]], &[0.0, 1.0], &[-3.0, -1.0], 2.0)
}

/// Delta for the 5×5 case (b) certificate; the accompanying `L` alone fixes
/// no value, and `0.01` keeps the matrix inequality negative semidefinite.
pub const VII_A_DELTA: f64 = 0.01;

pub fn vii_a_negative_certificate() -> CertificateCwCcw {
    CertificateCwCcw {
        p: m(&[
            &[1.0, 1.0, 0.0, -1.5, -2.0],
            &[1.0, 7.74, 5.51, -8.74, -15.86],
            &[0.0, 5.51, 7.4, -5.51, -14.36],
            &[-1.5, -8.74, -5.51, 10.24, 17.86],
            &[-2.0, -15.86, -14.36, 17.86, 38.36],
        ]),
        l: Matrix::row(&[0.0, 0.0, 0.25, 0.0, 0.0]),
        delta: VII_A_DELTA,
    }
}

pub fn vii_a_positive_certificate() -> CertificateCcwCcw {
    CertificateCcwCcw {
        q: m(&[
            &[6.0, 1.0, -6.0, -2.0],
            &[1.0, 4.0, -1.0, -4.0],
            &[-6.0, -1.0, 7.0, 3.0],
            &[-2.0, -4.0, 3.0, 7.0],
        ]),
        xi: 0.5,
    }
}

pub fn vii_b_negative_certificate() -> CertificateCcwCw {
    CertificateCcwCw {
        q: m(&[
            &[5.0, 1.0, -5.0, -2.0],
            &[1.0, 3.0, -1.0, -3.0],
            &[-5.0, -1.0, 6.0, 3.0],
            &[-2.0, -3.0, 3.0, 6.0],
        ]),
    }
}

fn vii_b_positive_p() -> Matrix {
    m(&[
        &[2.0, 2.0, 0.0, -3.0, -1.0],
        &[2.0, 30.86, 15.83, -32.86, -26.9],
        &[0.0, 15.83, 38.26, -15.83, -51.4],
        &[-3.0, -32.86, -15.83, 35.86, 27.9],
        &[-1.0, -26.9, -51.4, 27.9, 74.54],
    ])
}

/// The 5×5 case (d) certificate exactly as published, with
/// `L = [0, ¼, 0, 0, 0]`. Its matrix inequality does not hold.
pub fn vii_b_positive_certificate_published() -> CertificateCwCw {
    CertificateCwCw {
        p: vii_b_positive_p(),
        l: Matrix::row(&[0.0, 0.25, 0.0, 0.0, 0.0]),
        delta: 1.0,
        eta: 0.5,
    }
}

/// Same `P`, `δ`, `η` with `L = [0, 0, ¼, 0, 0]`, which weights the
/// velocity in the extended state `(w, x)` and does verify.
pub fn vii_b_positive_certificate() -> CertificateCwCw {
    CertificateCwCw {
        l: Matrix::row(&[0.0, 0.0, 0.25, 0.0, 0.0]),
        ..vii_b_positive_certificate_published()
    }
}

fn mds(
    id: &'static str,
    case: Case,
    controller: LinearSystem,
    op: DuhemOperator,
    cert: Certificate,
    plant_x0: [f64; 2],
) -> Instance {
    let plant = mds_plant();
    let sys = cascade(&plant, &controller, Topology::Actuator).expect("compatible shapes");
    let rect = match case {
        Case::A | Case::B => *op.rect(),
        Case::C | Case::D => Rect::new((-1.5, 1.5), (-50.0, 50.0)).expect("valid rect"),
    };
    Instance {
        id,
        case,
        plant,
        controller: Some(controller),
        sys,
        op,
        rect,
        cert,
        x0: vec![plant_x0[0], plant_x0[1], 0.0, 0.0],
        t_end: 50.0,
        dt: 1e-3,
        expectation: Expectation::Settles {
            position: 0,
            velocity: 1,
        },
    }
}

pub fn vii_a_negative() -> Instance {
    mds(
        "vii_a_negative",
        Case::B,
        controller_a_negative(),
        mds_ccw_operator(),
        Certificate::B(vii_a_negative_certificate()),
        [-10.0, 5.0],
    )
}

pub fn vii_a_positive() -> Instance {
    mds(
        "vii_a_positive",
        Case::A,
        controller_strictly_proper(),
        mds_ccw_operator(),
        Certificate::A(vii_a_positive_certificate()),
        [-10.0, 10.0],
    )
}

pub fn vii_b_negative() -> Instance {
    mds(
        "vii_b_negative",
        Case::C,
        controller_strictly_proper(),
        mds_cw_operator(),
        Certificate::C(vii_b_negative_certificate()),
        [10.0, 5.0],
    )
}

pub fn vii_b_positive() -> Instance {
    mds(
        "vii_b_positive",
        Case::D,
        controller_b_positive(),
        mds_cw_operator(),
        Certificate::D(vii_b_positive_certificate()),
        [10.0, -5.0],
    )
}
