//! Shared numerical-rank policy and small eigenvalue/SVD helpers.

use nalgebra::{DMatrix, DVector};

/// Threshold policy for deciding which singular values count as zero.
///
/// The same policy drives the persistency-of-excitation rank test and the
/// null-space computation of the verifier, so both agree on what "rank" means
/// for a given data set.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RankTolerance {
    /// `max(rows, cols) * machine_epsilon * sigma_max`. Scale invariant.
    #[default]
    Auto,
    /// `factor * sigma_max`.
    Relative(f64),
    /// A fixed absolute cutoff.
    Absolute(f64),
}

impl RankTolerance {
    /// Resolve the policy into an absolute cutoff for a matrix of the given
    /// shape whose largest singular value is `sigma_max`.
    pub fn cutoff(&self, rows: usize, cols: usize, sigma_max: f64) -> f64 {
        match *self {
            RankTolerance::Auto => rows.max(cols) as f64 * f64::EPSILON * sigma_max,
            RankTolerance::Relative(factor) => factor * sigma_max,
            RankTolerance::Absolute(value) => value,
        }
    }
}

/// Singular values of `m` (unordered), computed without the factors.
pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    m.clone().svd(false, false).singular_values
}

/// Numerical rank of `m` under the given tolerance policy. Also returns the
/// singular values sorted in descending order.
pub fn numerical_rank(m: &DMatrix<f64>, tol: RankTolerance) -> (usize, Vec<f64>) {
    let mut sv: Vec<f64> = singular_values(m).iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let cutoff = tol.cutoff(m.nrows(), m.ncols(), sigma_max);
    let rank = sv.iter().filter(|&&s| s > cutoff).count();
    (rank, sv)
}

/// Orthonormal basis of the numerical null space of `m`, as matrix columns.
///
/// Computed from the right singular vectors whose singular values fall at or
/// below the policy cutoff. When `m` has fewer rows than columns it is padded
/// with zero rows so that the decomposition yields the complete set of right
/// singular vectors; padding changes neither the singular spectrum (beyond
/// appending exact zeros) nor the null space.
///
/// Returns `None` when the numerical null space is empty.
pub fn nullspace_basis(m: &DMatrix<f64>, tol: RankTolerance) -> Option<DMatrix<f64>> {
    let (rows, cols) = m.shape();
    let square = if rows >= cols {
        m.clone()
    } else {
        let mut padded = DMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (rows, cols)).copy_from(m);
        padded
    };
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("svd requested v_t");
    let sigma_max = svd.singular_values.max();
    let cutoff = tol.cutoff(rows, cols, sigma_max);

    let kernel_rows: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= cutoff)
        .map(|(i, _)| i)
        .collect();
    if kernel_rows.is_empty() {
        return None;
    }
    let mut basis = DMatrix::zeros(cols, kernel_rows.len());
    for (k, &i) in kernel_rows.iter().enumerate() {
        basis.set_column(k, &v_t.row(i).transpose());
    }
    Some(basis)
}

/// Smallest eigenvalue of a symmetric matrix. The input is symmetrized as
/// `(g + g^T) / 2` first so floating-point accumulation noise cannot push the
/// solver off the symmetric path.
pub fn min_eigenvalue_symmetric(g: &DMatrix<f64>) -> f64 {
    let sym = (g + g.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.min()
}

/// True when every entry of `m` is finite.
pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}
