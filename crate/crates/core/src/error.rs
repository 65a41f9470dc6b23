use thiserror::Error;

use crate::model::ValidationErrors;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    InvalidParams(#[from] ValidationErrors),

    #[error("invalid step: {0}")]
    InvalidStep(String),

    #[error("instability detected at t = {time}: |{component}| = {magnitude:e} exceeds {bound:e}")]
    Instability {
        time: f64,
        component: &'static str,
        magnitude: f64,
        bound: f64,
    },

    #[error("incommensurate step: period / dt = {ratio} is not an integer")]
    IncommensurateStep { ratio: f64 },

    #[error("trajectory too short: spans {span}, need at least {required}")]
    TrajectoryTooShort { span: f64, required: f64 },

    #[error("resonant denominator at harmonic n = {n} (|den| = {magnitude:e})")]
    ResonantDenominator { n: i32, magnitude: f64 },

    #[error("non-real mechanical reconstruction: imaginary residue {residue:e}")]
    NonRealReconstruction { residue: f64 },

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("identical modes: {0:?}")]
    IdenticalModes(crate::entanglement::Mode),

    #[error("unphysical block: discriminant {discriminant:e}{}", at_time(.time))]
    UnphysicalBlock {
        discriminant: f64,
        time: Option<f64>,
    },

    #[error("non-convergent eigensolve")]
    NonConvergentEigensolve,
}

fn at_time(t: &Option<f64>) -> String {
    match t {
        Some(t) => format!(" at t = {t}"),
        None => String::new(),
    }
}
