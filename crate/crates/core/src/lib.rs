//! Non-negative matrix factorization under the generalized Kullback–Leibler
//! divergence, with multiplicative and diagonal-Newton update rules.

mod error;

pub mod bench;
pub mod driver;
pub mod io;
pub mod objective;
pub mod solver;
pub mod synth;
pub mod tensor;

pub use driver::{
    run, ConvergenceRecord, Driver, FactorizationState, Problem, RunOutput, SolverConfig,
};
pub use error::{Error, Result};
pub use solver::{SolverRegistry, UpdateRule};
pub use tensor::{DataMatrix, DenseMatrix, SparseMatrix};
