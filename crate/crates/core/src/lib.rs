//! Sparse principal component analysis by semidefinite relaxation.
//!
//! The variance-maximization problem with a cardinality constraint is
//! relaxed to a semidefinite program over the spectahedron with an l1
//! budget (or penalty) on the matrix variable. The penalized form is solved
//! through its robust maximum-eigenvalue dual with an entropy-smoothed
//! first-order method ([`solver`]); the budget form searches the penalty
//! ([`relaxation`]); repeated solves with deflation give a sparse factor
//! decomposition ([`decomposition`]).
//!
//! ```
//! use dspca::{data, relaxation, SparsityTarget, DEFAULT_ZERO_THRESHOLD};
//!
//! let a = data::planted_instance(1).a;
//! let sol = relaxation::solve_constrained(&a, SparsityTarget::new(4, 10).unwrap(), 1e-2).unwrap();
//! let pc = sol.loading(DEFAULT_ZERO_THRESHOLD).unwrap();
//! assert!(pc.cardinality <= 10);
//! ```

pub mod baselines;
pub mod data;
pub mod decomposition;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod oracle;
pub mod relaxation;
pub mod smoothing;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::{
    dominant_eigenvector, l1_norm_all, lambda_max, sym_eig, EigDecomposition, LoadingVector,
    SymMatrix, DEFAULT_ZERO_THRESHOLD,
};
pub use relaxation::{solve_constrained, ConstrainedSolution, SparsityTarget};
pub use solver::{solve_penalized, RelaxationSolution, SmoothSolver, SolverParams};
