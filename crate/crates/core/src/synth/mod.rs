//! Controller design for a plant with a hysteretic actuator or sensor.
//!
//! For each candidate controller the plant/controller cascade is formed and
//! a certificate is searched, negative feedback first: case (b) then (a)
//! for a CCW operator, case (c) then (d) for a CW operator. The first
//! candidate with a fully verified certificate wins.
//!
//! Candidates are either an explicit list or a box of controller entries
//! sampled at random. The box family is a construction of this crate.

mod search;

pub use search::{feasibility_search, feasibility_search_seeded, SearchHints, SearchOptions};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::certify::{
    cascade, invariant_set, verify_ccw_ccw, verify_cw_cw_with_rate, Case, Certificate,
    InvariantSetDescriptor, LinearSystem, Tolerances, Topology, VerificationReport,
};
use crate::duhem::{DuhemOperator, Orientation, Rect};
use crate::{Error, Result};

/// What the design needs to know about the operator.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "orientation", rename_all = "lowercase"))]
pub enum HysteresisInfo {
    /// CCW operator, with `(v, f_an(v))` samples for the sector bound.
    Ccw { f_an_samples: Vec<(f64, f64)> },
    /// CW operator, with `max f1, f2` over its band.
    Cw { rate_bound: f64 },
}

impl HysteresisInfo {
    /// Samples the data of `orientation` from an operator on `rect`.
    pub fn from_operator(op: &DuhemOperator, rect: &Rect, orientation: Orientation) -> Result<Self> {
        match orientation {
            Orientation::Ccw => Ok(Self::Ccw {
                f_an_samples: crate::geometry::sample_anhysteresis(op, (rect.v_min, rect.v_max), 101)?,
            }),
            Orientation::Cw => Ok(Self::Cw {
                rate_bound: crate::certify::rate_bound(op, rect).0,
            }),
            Orientation::Neither => Err(Error::InvalidInput(
                "the operator is neither CCW nor CW; no design applies".into(),
            )),
        }
    }

    /// Smallest sector slope `ξ` with `(f_an(v) − ξv)v ≤ 0` on the samples.
    fn sector(&self) -> Option<f64> {
        let Self::Ccw { f_an_samples } = self else { return None };
        let xi = f_an_samples
            .iter()
            .filter(|(v, _)| v.abs() > 1e-12)
            .map(|(v, f)| f / v)
            .fold(0.0f64, f64::max);
        // ξ must be strictly positive.
        Some(if xi > 0.0 { xi } else { 1e-6 })
    }

    fn eta(&self) -> Option<f64> {
        let Self::Cw { rate_bound } = self else { return None };
        Some((2.0 * rate_bound).max(1e-9))
    }
}

/// Box of controller entries; every sample draws each entry uniformly.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControllerFamily {
    pub order: usize,
    /// `order × order` ranges, row-major.
    pub a: Vec<(f64, f64)>,
    pub b: Vec<(f64, f64)>,
    pub c: Vec<(f64, f64)>,
    pub d: (f64, f64),
    pub samples: usize,
}

impl ControllerFamily {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Vec<LinearSystem>> {
        let n = self.order;
        if self.a.len() != n * n || self.b.len() != n || self.c.len() != n {
            return Err(Error::Shape(format!("controller family ranges do not match order {n}")));
        }
        let mut draw = |(lo, hi): (f64, f64)| {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            lo + (hi - lo) * u
        };
        (0..self.samples)
            .map(|_| {
                let a: Vec<f64> = self.a.iter().map(|&r| draw(r)).collect();
                let b: Vec<f64> = self.b.iter().map(|&r| draw(r)).collect();
                let c: Vec<f64> = self.c.iter().map(|&r| draw(r)).collect();
                let d = draw(self.d);
                let rows: Vec<&[f64]> = a.chunks(n.max(1)).take(n).collect();
                LinearSystem::from_rows(&rows, &b, &c, d)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Candidates {
    List(Vec<LinearSystem>),
    Family(ControllerFamily),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignProblem {
    pub plant: LinearSystem,
    pub topology: Topology,
    pub info: HysteresisInfo,
    pub candidates: Candidates,
    /// Desired invariant-set row over `(x, y_Φ)`; turned into the first `L`
    /// tried.
    pub target_n: Option<InvariantSetDescriptor>,
    pub seed: u64,
    pub search: SearchOptions,
    pub tol: Tolerances,
}

impl DesignProblem {
    pub fn new(plant: LinearSystem, topology: Topology, info: HysteresisInfo, candidates: Candidates) -> Self {
        Self {
            plant,
            topology,
            info,
            candidates,
            target_n: None,
            seed: 0,
            search: SearchOptions::default(),
            tol: Tolerances::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DesignReport {
    pub seed: u64,
    pub verification: VerificationReport,
    pub invariant_set: Option<InvariantSetDescriptor>,
    /// Failed attempts before the winning one.
    pub attempts: Vec<Attempt>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DesignResult {
    /// Index into the (sampled) candidate list.
    pub candidate: usize,
    pub controller: LinearSystem,
    /// Cascade the certificate is for.
    pub system: LinearSystem,
    pub sign: f64,
    pub case: Case,
    pub certificate: Certificate,
    pub report: DesignReport,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Attempt {
    pub candidate: usize,
    pub case: Case,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Infeasible {
    pub seed: u64,
    pub attempts: Vec<Attempt>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "outcome", rename_all = "lowercase"))]
pub enum DesignOutcome {
    Found(alloc::boxed::Box<DesignResult>),
    Infeasible(Infeasible),
}

/// Cases in the order they are attempted.
pub fn case_order(orientation: Orientation) -> Option<[Case; 2]> {
    match orientation {
        Orientation::Ccw => Some([Case::B, Case::A]),
        Orientation::Cw => Some([Case::C, Case::D]),
        Orientation::Neither => None,
    }
}

fn l_from_target(target: &InvariantSetDescriptor, case: Case) -> Vec<f64> {
    let n = &target.n;
    let k = n.len() - 1;
    let w = if case == Case::B { -n[k] } else { n[k] };
    let mut l = alloc::vec![w];
    l.extend_from_slice(&n[..k]);
    l
}

/// Runs the design loop. Each candidate's random stream is the master
/// `seed` with the candidate index as stream number.
pub fn design(problem: &DesignProblem) -> Result<DesignOutcome> {
    let orientation = match &problem.info {
        HysteresisInfo::Ccw { f_an_samples } => {
            if f_an_samples.is_empty() {
                return Err(Error::InvalidInput("CCW design needs anhysteresis samples".into()));
            }
            Orientation::Ccw
        }
        HysteresisInfo::Cw { rate_bound } => {
            if !(rate_bound.is_finite() && *rate_bound >= 0.0) {
                return Err(Error::InvalidInput(format!("invalid rate bound {rate_bound}")));
            }
            Orientation::Cw
        }
    };
    let cases = case_order(orientation).expect("orientation is CCW or CW");
    let candidates = match &problem.candidates {
        Candidates::List(list) => list.clone(),
        Candidates::Family(fam) => {
            let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
            rng.set_stream(u64::MAX);
            fam.sample(&mut rng)?
        }
    };
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no candidate controllers".into()));
    }
    let xi = problem.info.sector();
    let eta = problem.info.eta();
    let mut attempts = Vec::new();
    for (idx, k) in candidates.iter().enumerate() {
        let sys = cascade(&problem.plant, k, problem.topology)?;
        let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
        rng.set_stream(idx as u64);
        for case in cases {
            let l = match &problem.target_n {
                Some(t) if matches!(case, Case::B | Case::D) => {
                    if t.n.len() != sys.order() + 1 {
                        return Err(Error::Shape(format!(
                            "target N has {} entries, cascade needs {}",
                            t.n.len(),
                            sys.order() + 1
                        )));
                    }
                    Some(l_from_target(t, case))
                }
                _ => None,
            };
            let hints = SearchHints { xi, eta, l };
            let found = feasibility_search(&sys, case, &hints, &problem.search, &mut rng, &problem.tol)?;
            let Some((cert, _)) = found else {
                attempts.push(Attempt {
                    candidate: idx,
                    case,
                    reason: precondition_note(&sys, case).unwrap_or_else(|| "search budget exhausted".into()),
                });
                continue;
            };
            let report = full_report(&sys, &cert, &problem.info, &problem.tol)?;
            if !report.pass {
                let failing: Vec<&str> = report.conditions.iter().filter(|c| !c.pass).map(|c| c.name).collect();
                attempts.push(Attempt {
                    candidate: idx,
                    case,
                    reason: format!("failing conditions: {}", failing.join(", ")),
                });
                continue;
            }
            let inv = invariant_set(&sys, &cert, &report).ok();
            return Ok(DesignOutcome::Found(alloc::boxed::Box::new(DesignResult {
                candidate: idx,
                controller: k.clone(),
                sign: case.sign(),
                case,
                certificate: cert,
                system: sys,
                report: DesignReport {
                    seed: problem.seed,
                    verification: report,
                    invariant_set: inv,
                    attempts,
                },
            })));
        }
    }
    Ok(DesignOutcome::Infeasible(Infeasible {
        seed: problem.seed,
        attempts,
    }))
}

fn precondition_note(sys: &LinearSystem, case: Case) -> Option<String> {
    match case {
        Case::A | Case::C if sys.d() != 0.0 => Some(format!("feedthrough D = {} is not zero", sys.d())),
        Case::A | Case::C if !(sys.cb() > 0.0) => Some(format!("CB = {} is not positive", sys.cb())),
        _ => None,
    }
}

/// Verification including the operator data: the sector test for (a) and
/// the rate bound for (d).
fn full_report(
    sys: &LinearSystem,
    cert: &Certificate,
    info: &HysteresisInfo,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    match (cert, info) {
        (Certificate::A(c), HysteresisInfo::Ccw { f_an_samples }) => verify_ccw_ccw(sys, c, f_an_samples, tol),
        (Certificate::D(c), HysteresisInfo::Cw { rate_bound }) => verify_cw_cw_with_rate(sys, c, *rate_bound, tol),
        (Certificate::B(c), _) => crate::certify::verify_cw_ccw(sys, c, tol),
        (Certificate::C(c), _) => crate::certify::verify_ccw_cw(sys, c, tol),
        _ => Err(Error::InvalidInput("certificate case does not match the operator orientation".into())),
    }
}
