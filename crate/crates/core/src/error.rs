use thiserror::Error;

use crate::ricci_flow::{FlowRunReport, FlowState};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("profile already pinched at node {node} (psi = {psi:e})")]
    SingularCurvature { node: usize, psi: f64 },

    #[error("step rejected: {0}")]
    StepRejected(String),

    #[error("no singularity before t_max = {t_max}")]
    NoSingularity {
        t_max: f64,
        outcome: Box<(FlowRunReport, FlowState)>,
    },

    #[error("unsupported singular-set topology: {0}")]
    UnsupportedTopology(String),

    #[error("density undefined at pole node {node}: mass sits on a collapsed fiber")]
    UndefinedAtPole { node: usize },

    #[error("bad collar: {0}")]
    BadCollar(String),

    #[error("collar resolved by only {nodes} nodes")]
    CollarUnresolved { nodes: usize },

    #[error("W1 formulas disagree: quantile form {quantile}, CDF form {cdf}")]
    FormulaMismatch { quantile: f64, cdf: f64 },

    #[error("{atoms} atoms exceed the exhaustive bound of {max}")]
    TooLarge { atoms: usize, max: usize },

    #[error("measure is not spatially uniform (base row {row} varies along the fiber)")]
    NotUniform { row: usize },

    #[error("diffusions live on the same cap; supports may overlap")]
    OverlappingSupports,

    #[error("grid cannot certify N = {requested}; largest certified N = {achieved:?}")]
    InconclusiveResolution { requested: f64, achieved: Option<f64> },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid cost: {0}")]
    InvalidCost(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
