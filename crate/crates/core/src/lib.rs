//! Classical simulation of dense-output quantum algorithms: exact dynamics,
//! composite Clenshaw–Curtis quadrature, Hadamard-test and amplitude
//! estimation pipelines, history-state ODE solves and the Carleman lift for
//! linear-quadratic cost functionals.

pub mod carleman;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod historystate;
pub mod linalg;
pub mod quadrature;

pub use error::{Error, Result};
