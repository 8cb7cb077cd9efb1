//! Time-varying vector error-correction models for measuring how fast a set
//! of cointegrated markets adjusts toward long-run equilibrium.

pub mod cointegration;
pub mod design;
pub mod error;
pub mod linalg;
pub mod optim;
pub mod pipeline;
pub mod series;
pub mod synth;
pub mod tv_vecm;
pub mod unit_root;
pub mod vecm;

pub use error::{Error, Result};
