//! Problem instances and exact classical propagation.
//!
//! A [`Scenario`] bundles a Hamiltonian generator, an observable family, an
//! initial state, a horizon and an optional control/modulation. Everything
//! downstream (quadrature pipelines, history states, the Carleman lift) reads
//! the dynamics through this module, and all query accounting goes through
//! [`QueryLedger`].

mod hamiltonian;
mod ledger;
mod observable;
mod oracle;
mod propagate;
mod scenario;
mod state;

pub use hamiltonian::{ClosedForm, HamiltonianKind, HamiltonianSpec, TimeGenerator};
pub use ledger::{propagation_cost, QueryLedger};
pub use observable::{ObservableKind, ObservableSpec, RealizedObservable, Weight};
pub use oracle::{true_j, true_j_on, true_spectrum};
pub use propagate::{evolve, propagate, propagator, reference_trajectory, Trajectory};
pub use scenario::{expectation, realize_observables, Control, Modulation, Scenario};
pub use state::QuantumState;

/// Hermiticity tolerance for every realized matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;
