//! Benchmark harness for the dense-output estimators: scenario files, sweeps,
//! slope fits and verification suites.

pub mod fit;
pub mod runner;
pub mod scenarios;
pub mod schema;
pub mod spectrum;
pub mod verify;
