//! Persistency-of-excitation test and the two lower bounds on the number of
//! data samples.

use nalgebra::DVector;

use crate::error::Result;
use crate::numeric::{numerical_rank, RankTolerance};
use crate::trajectory::build_hankel;

/// Outcome of the persistency-of-excitation rank test.
#[derive(Debug, Clone, PartialEq)]
pub struct PeReport {
    /// True when the Hankel matrix of the input has full row rank.
    pub persistently_exciting: bool,
    /// Numerical rank found.
    pub rank: usize,
    /// Row count `m * order` the rank must reach.
    pub required_rank: usize,
    /// Singular values in descending order.
    pub singular_values: Vec<f64>,
}

/// A signal is persistently exciting of the given order when the block-Hankel
/// matrix with that many block rows has full row rank. Rank is decided by
/// singular-value thresholding under `tol`.
pub fn is_persistently_exciting(
    u: &[DVector<f64>],
    order: usize,
    tol: RankTolerance,
) -> Result<PeReport> {
    let hankel = build_hankel(u, order)?;
    let (rank, singular_values) = numerical_rank(hankel.matrix(), tol);
    let required_rank = hankel.sample_dim() * order;
    Ok(PeReport {
        persistently_exciting: rank == required_rank,
        rank,
        required_rank,
        singular_values,
    })
}

/// Smallest number of stacked samples `T` for which the input Hankel matrix
/// of order `L + N + n` can have full row rank: `(L + n)(m + 1) + N m - 1`.
pub fn min_t_for_pe(horizon: usize, order: usize, num_inputs: usize, shift_depth: usize) -> usize {
    (horizon + order) * (num_inputs + 1) + shift_depth * num_inputs - 1
}

/// Smallest `T` guaranteeing the constrained data matrix has a nontrivial
/// null space for every admissible `nu < L`: `L (m + p + 1) - 1`.
pub fn min_t_for_nullspace(horizon: usize, num_inputs: usize, num_outputs: usize) -> usize {
    horizon * (num_inputs + num_outputs + 1) - 1
}
