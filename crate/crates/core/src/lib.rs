//! Private-state quantum key distribution.
//!
//! The linear-algebra, private-state and observable layers are generic over
//! the real scalar ([`scalar::Real`], implemented for `f32` and `f64`). The
//! Monte Carlo, bounds and protocol layers work in `f64`.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod observables;
pub mod private_states;
pub mod protocol;
pub mod scalar;
pub mod stats;
pub mod wire;

pub use error::{Error, Result};
pub use linalg::SystemShape;
pub use observables::TermSelection;
pub use protocol::{run_protocol, ProtocolConfig, RunResult};

pub type C64Matrix = linalg::ComplexMatrix<f64>;
pub type C32Matrix = linalg::ComplexMatrix<f32>;
pub type Hermitian64 = linalg::HermitianOperator<f64>;
pub type Hermitian32 = linalg::HermitianOperator<f32>;
pub type Twisting64 = private_states::Twisting<f64>;
pub type Twisting32 = private_states::Twisting<f32>;
pub type PrivateState64 = private_states::PrivateState<f64>;
pub type PrivateState32 = private_states::PrivateState<f32>;
pub type Decomposition64 = observables::ProductDecomposition<f64>;
pub type Decomposition32 = observables::ProductDecomposition<f32>;
