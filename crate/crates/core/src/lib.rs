//! Data-driven dissipativity analysis of discrete-time LTI systems.
//!
//! Everything in this crate operates on a single measured input-output
//! trajectory. The central object is a semidefinite test on the block-Hankel
//! matrix of the stacked data: a system is certified dissipative with respect
//! to a generalized quadratic (shifted) QSR supply rate when the data
//! quadratic form, restricted to the null space that enforces zero initial
//! conditions, is positive semidefinite. On top of that test sit an L2-gain
//! estimator (bisection over the gain parameter of the supply rate) and a
//! model-based oracle used to certify the data-driven verdicts on systems
//! whose state-space realization is known.
//!
//! Module map:
//! - [`lti`]: state-space models, simulation, random stable system
//!   generation, Markov parameters, H-infinity norm.
//! - [`trajectory`]: the measured data record, stacked/shifted
//!   rearrangements, block-Hankel construction, CSV I/O.
//! - [`excitation`]: persistency-of-excitation rank test and the two lower
//!   bounds on the data length.
//! - [`supply`]: generalized quadratic supply rates, their block assembly
//!   and horizon expansion, JSON I/O.
//! - [`verifier`]: the data-driven semidefinite dissipativity test.
//! - [`oracle`]: exact model-based dissipativity decisions and gains.
//! - [`gain`]: data-driven minimal L2-gain bound via bisection.

pub mod error;
pub mod excitation;
pub mod gain;
pub mod lti;
pub mod numeric;
pub mod oracle;
pub mod supply;
pub mod trajectory;
pub mod verifier;

pub use error::{Error, Result};
pub use excitation::{is_persistently_exciting, min_t_for_nullspace, min_t_for_pe, PeReport};
pub use gain::{estimate_l2_gain, BisectionConfig, GainEstimate, GainSearch};
pub use lti::{DifferenceEquationModel, StateSpaceModel};
pub use numeric::RankTolerance;
pub use oracle::{oracle_dissipative, oracle_l2_gain, toeplitz_response, OracleVerdict};
pub use supply::SupplyRate;
pub use trajectory::{
    build_hankel, interleave, stack_shifted, BlockHankel, StackedTrajectory, Trajectory,
};
pub use verifier::{
    build_selector_u, constrained_nullspace, verify, verify_statement_ii, AggregateVerdict,
    NullspaceBasis, StatementIiMode, Tolerances, Verdict, VerificationProblem,
};

/// Default acceptance tolerance on the minimum eigenvalue of the tested
/// matrix: the verdict is "dissipative" when the eigenvalue is at least
/// `-DEFAULT_EIG_TOL`.
pub const DEFAULT_EIG_TOL: f64 = 1e-8;
