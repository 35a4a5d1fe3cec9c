//! Conic problem representation and an interior-point backend for the two
//! problem shapes used by the beamforming optimizer: SDPs over one or more
//! complex Hermitian PSD blocks with a few scalar variables, and plain LPs.
//!
//! Problems are stated in a natural "maximize a linear functional subject to
//! `<=`/`>=`/`=` rows" form ([`ConicProblem`]). Internally they are lowered to
//! the primal standard form `min <C,X> s.t. <A_i,X> = b_i, X >= 0` and solved
//! with an infeasible-start primal-dual path-following method (HKM direction,
//! Mehrotra predictor-corrector).
//!
//! Constraint matrices are kept in factored form `sum_r s_r u_r u_r^H`. Every
//! matrix the optimizer generates is low rank, which makes the Schur
//! complement assembly cost `O(F^2)` in the number of factors instead of
//! `O(m^2 n^3)`.

mod error;
mod ipm;
pub mod linalg;
mod problem;
pub mod sdpa;
mod standard;

pub use error::ConicError;
pub use ipm::{solve, ConicSolution, SolveStatus, SolverOptions};
pub use linalg::{embed_real, hermitian_eigen, rank_of, unembed_real, HermitianEigen};
pub use problem::{
    ConicProblem, Constraint, HermitianTerm, LinearFunctional, Relation, ScalarKind,
};

pub use num_complex::Complex64;

/// Dense complex matrix used for every PSD block.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;
