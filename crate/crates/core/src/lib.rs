//! Decoherence and entanglement functionals for pairs of path-superposed
//! sources coupled to a free linear field (electromagnetic or linearized
//! gravity), and the two-qubit state they generate.
//!
//! The numerical core is generic over [`real::Real`]; the aliases below fix
//! the scalar to `f64`, which is what the scenario pipeline and the command
//! line use.

pub mod figures;
pub mod functionals;
pub mod inequality_lab;
pub mod kernels;
pub mod pipeline;
pub mod quadrature;
pub mod quantum_state;
pub mod real;
pub mod scenario;
pub mod sources;

use thiserror::Error;

pub type Worldline = sources::Worldline<f64>;
pub type Source = sources::BranchedSource<f64>;
pub type SplitPath = sources::SplitPath<f64>;
pub type Kernel = kernels::KernelSpec<f64>;
pub type Functionals = functionals::InfluenceFunctionals<f64>;
pub type Report = functionals::FunctionalsReport<f64>;
pub type State = quantum_state::TwoQubitState<f64>;
pub type Diagnostics = quantum_state::StateDiagnostics<f64>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Scenario(#[from] scenario::ScenarioError),
    #[error(transparent)]
    Source(#[from] sources::SourceError),
    #[error(transparent)]
    Functional(#[from] functionals::FunctionalError),
    #[error(transparent)]
    State(#[from] quantum_state::StateError),
    #[error(transparent)]
    Lab(#[from] inequality_lab::LabError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(String),
    #[error("configuration: {0}")]
    Config(String),
}
