#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Digital twin of a low-voltage energy cell and a Basin Hopping dispatcher
//! for flexibility requests at the point of common coupling.

pub mod dispatch;
pub mod error;
pub mod io;
pub mod model;
pub mod network;
pub mod optimizer;
pub mod par;
pub mod simulator;

pub use error::{Error, Result};
pub use par::Execution;
