//! Per-unit IPMSM drive simulation with online estimation of the magnet
//! flux linkage and stator resistance.
//!
//! The crate is organised bottom-up:
//!
//! * [`per_unit`]: base quantities, Park transforms and machine data.
//! * [`machine`] and [`plant`]: the dq stator model, mechanics, sensor noise
//!   and scheduled parameter steps.
//! * [`control`]: MTPA references and the current loop.
//! * [`estimator`]: predictor, gradients and the SGA / GNA / PhyInt gains.
//! * [`analysis`]: eigenvalues, sensitivity and Hessian maps over an
//!   operating grid.
//! * [`scenario`]: scenario files, the closed-loop runner, presets and
//!   convergence metrics.

pub mod analysis;
pub mod control;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod machine;
pub mod per_unit;
pub mod plant;
pub mod scenario;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/per_unit.md")]
    mod per_unit {}
    #[doc = include_str!("../../../book/src/plant.md")]
    mod plant {}
    #[doc = include_str!("../../../book/src/control.md")]
    mod control {}
    #[doc = include_str!("../../../book/src/estimator.md")]
    mod estimator {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/limitations.md")]
    mod limitations {}
}
