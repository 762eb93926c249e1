//! Model-based ground truth.
//!
//! With the realization in hand, every zero-state output is linear in the
//! input: `y = G u` with `G` the block lower-triangular Toeplitz operator of
//! Markov parameters. The finite-horizon dissipativity sum then becomes a
//! quadratic form in the input alone, so the property is decided exactly by
//! one eigenvalue computation instead of a search over trajectories. This is
//! the certifier the data-driven verdicts are compared against.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lti::StateSpaceModel;
use crate::numeric::min_eigenvalue_symmetric;
use crate::supply::SupplyRate;
use crate::trajectory::{manifest_input_range, manifest_output_range};

/// Zero-state response operator over `horizon` steps: a `(p K) x (m K)`
/// block lower-triangular Toeplitz matrix `G` with block `(i, j)` equal to
/// the Markov parameter `M_{i-j}`, so `y_[0,K-1] = G u_[0,K-1]`.
pub fn toeplitz_response(model: &StateSpaceModel, horizon: usize) -> Result<DMatrix<f64>> {
    if horizon == 0 {
        return Err(Error::InvalidArgument(
            "toeplitz horizon must be >= 1".into(),
        ));
    }
    let params = model.markov_parameters(horizon)?;
    let (p, m) = (model.num_outputs(), model.num_inputs());
    let mut g = DMatrix::zeros(p * horizon, m * horizon);
    for i in 0..horizon {
        for j in 0..=i {
            g.view_mut((i * p, j * m), (p, m)).copy_from(&params[i - j]);
        }
    }
    Ok(g)
}

/// The 0/1 map taking a stacked sample sequence of length `total_samples`
/// (each sample `sample_dim` wide) to the stack of `num_windows` overlapping
/// windows `[e(k); ...; e(k+shift_depth)]`.
///
/// Materialized explicitly so the overlapping-shift bookkeeping is auditable
/// and reusable by tests of the data-driven side.
pub fn shift_selection_map(
    num_windows: usize,
    shift_depth: usize,
    total_samples: usize,
    sample_dim: usize,
) -> Result<DMatrix<f64>> {
    if num_windows == 0 || num_windows + shift_depth > total_samples {
        return Err(Error::InvalidArgument(format!(
            "cannot cut {num_windows} windows of depth {shift_depth} from {total_samples} samples"
        )));
    }
    let window = (shift_depth + 1) * sample_dim;
    let mut map = DMatrix::zeros(num_windows * window, total_samples * sample_dim);
    for w in 0..num_windows {
        for i in 0..=shift_depth {
            for r in 0..sample_dim {
                map[(w * window + i * sample_dim + r, (w + i) * sample_dim + r)] = 1.0;
            }
        }
    }
    Ok(map)
}

/// The linear map from a stacked input `u_[0,K-1]` to the stacked manifest
/// sequence `[y(0); u(0); ...; y(K-1); u(K-1)]` of the zero-state response.
pub fn zero_state_manifest_map(model: &StateSpaceModel, horizon: usize) -> Result<DMatrix<f64>> {
    let g = toeplitz_response(model, horizon)?;
    let (p, m) = (model.num_outputs(), model.num_inputs());
    let block = p + m;
    let mut map = DMatrix::zeros(block * horizon, m * horizon);
    for k in 0..horizon {
        let y_rows = manifest_output_range(p, m);
        map.view_mut((k * block + y_rows.start, 0), (p, m * horizon))
            .copy_from(&g.view((k * p, 0), (p, m * horizon)));
        let u_rows = manifest_input_range(p, m);
        for r in 0..m {
            map[(k * block + u_rows.start + r, k * m + r)] = 1.0;
        }
    }
    Ok(map)
}

/// Exact verdict from the model.
#[derive(Debug, Clone, Serialize)]
pub struct OracleVerdict {
    pub dissipative: bool,
    pub min_eigenvalue: f64,
    /// Side length of the decided quadratic form (`m (L - nu + N)`).
    pub matrix_dim: usize,
    pub horizon: usize,
    pub nu: usize,
    pub shift_depth: usize,
    pub eig_tol: f64,
}

/// Decide finite-horizon dissipativity exactly: the sum
/// `sum_{k=0}^{L-1-nu} w(u(k), y(k))` over all zero-state trajectories is the
/// quadratic form `u^T W u` with `W = (P E)^T (I_{L-nu} (x) Phi_N) (P E)`,
/// where `E` maps the input to the stacked manifest sequence and `P` cuts the
/// overlapping windows. The verdict is the sign of the minimum eigenvalue of
/// the symmetrized `W`, up to `eig_tol`.
pub fn oracle_dissipative(
    model: &StateSpaceModel,
    supply: &SupplyRate,
    horizon: usize,
    nu: usize,
    eig_tol: f64,
) -> Result<OracleVerdict> {
    if model.num_inputs() != supply.num_inputs() || model.num_outputs() != supply.num_outputs() {
        return Err(Error::Dimension(format!(
            "model has (m, p) = ({}, {}), supply expects ({}, {})",
            model.num_inputs(),
            model.num_outputs(),
            supply.num_inputs(),
            supply.num_outputs()
        )));
    }
    if nu >= horizon {
        return Err(Error::InvalidArgument(format!(
            "need nu < L, got nu = {nu}, L = {horizon}"
        )));
    }
    let n_shift = supply.shift_depth();
    let windows = horizon - nu;
    let samples = windows + n_shift;

    let manifest = zero_state_manifest_map(model, samples)?;
    let selection = shift_selection_map(windows, n_shift, samples, supply.block_dim())?;
    let stacked_response = selection * manifest;
    let tested = stacked_response.transpose() * (supply.expand(windows) * &stacked_response);
    let min_eigenvalue = min_eigenvalue_symmetric(&tested);
    Ok(OracleVerdict {
        dissipative: min_eigenvalue >= -eig_tol,
        min_eigenvalue,
        matrix_dim: tested.nrows(),
        horizon,
        nu,
        shift_depth: n_shift,
        eig_tol,
    })
}

/// Smallest `gamma >= 0` for which the model is finite-horizon dissipative
/// under the L2-gain supply `diag(-I_p, gamma^2 I_m)`: the largest singular
/// value of the horizon-`(L - nu)` zero-state response operator. The result
/// is exact well beyond `tol`, which only gates the argument's validity.
pub fn oracle_l2_gain(model: &StateSpaceModel, horizon: usize, nu: usize, tol: f64) -> Result<f64> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if nu >= horizon {
        return Err(Error::InvalidArgument(format!(
            "need nu < L, got nu = {nu}, L = {horizon}"
        )));
    }
    let g = toeplitz_response(model, horizon - nu)?;
    Ok(g.svd(false, false).singular_values.max())
}
