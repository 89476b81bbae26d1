use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point (gamma={gamma}, v={v}) lies outside the working rectangle")]
    Domain { gamma: f64, v: f64 },
    #[error("|state| reached {value:e} (bound {bound:e}) at {at}")]
    Blowup { at: f64, value: f64, bound: f64 },
    #[error("f1 and f2 coincide on a region with nonempty interior near (gamma={gamma}, v={v})")]
    AnhysteresisDegenerate { gamma: f64, v: f64 },
    #[error("f1 - f2 has no sign change on the gamma range at v={v}")]
    NoRoot { v: f64 },
    #[error("traversing curve from (gamma={gamma}, v={v}) does not meet the anhysteresis curve inside the search window")]
    NoIntersect { gamma: f64, v: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("theorem requires D = 0, got D = {0}")]
    FeedthroughNotZero(f64),
    #[error("theorem requires CB > 0, got CB = {0}")]
    NonpositiveCb(f64),
    #[error("derivative loop is singular at t={t}: |1 - s*D*f| = {gain:e}")]
    AlgebraicLoopSingular { t: f64, gain: f64 },
    #[error("certificate did not verify")]
    UnverifiedCertificate,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
