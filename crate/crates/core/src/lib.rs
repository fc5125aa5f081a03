//! Learn which observed series are exogenous states, endogenous states and
//! controls of a linear Gaussian state-space model.

pub mod calibrate;
pub mod cli;
pub mod error;
pub mod io;
pub mod irf;
pub mod linalg;
pub mod model;
pub mod preprocess;
pub mod scoring;
pub mod search;
pub mod simulate;
pub mod stats;
pub mod validity;

pub use error::{Error, Result};

// The guide's code blocks run as doc tests of this crate.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/validity.md")]
    mod validity {}
    #[doc = include_str!("../../../book/src/search.md")]
    mod search {}
    #[doc = include_str!("../../../book/src/scoring.md")]
    mod scoring {}
    #[doc = include_str!("../../../book/src/irf.md")]
    mod irf {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
