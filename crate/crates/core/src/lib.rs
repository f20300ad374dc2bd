//! Rotationally symmetric Ricci flow through neckpinches, conjugate heat
//! diffusions on the surviving caps, and 1-D optimal transport between them.

mod fd;
pub mod kv;

pub mod diffusion;
pub mod error;
pub mod geometry;
pub mod ricci_flow;
pub mod scenario;
pub mod spacetime;
pub mod transport;

pub use error::{Error, Result};
pub use geometry::{CurvatureSample, RadialProfile};
pub use ricci_flow::{FlowConfig, FlowRunReport, FlowState, FlowStatus};
