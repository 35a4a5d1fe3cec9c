//! Joint transmit and reflect beamforming for IRS-assisted multiuser MISO
//! SWIPT: maximize the weakest energy receiver's RF power under per-user
//! SINR constraints by alternating between a semidefinite-relaxed transmit
//! design and a lifted phase-shift design.

pub mod active;
pub mod channel;
pub mod checks;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod optimizer;
pub mod par;
pub mod passive;
pub mod rng;
pub mod scenario;

pub use swipt_conic::{CMatrix, CVector, Complex64};

pub use error::CoreError;
pub use metrics::{ActiveSolution, PhaseSolution};
pub use optimizer::{RunRecord, Scheme};
pub use par::ExecMode;
pub use scenario::{default_config, SystemConfig};
