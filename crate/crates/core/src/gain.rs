//! Data-driven minimal L2-gain bound.
//!
//! Feasibility of a candidate `gamma` is the dissipativity test with the
//! depth-zero supply `diag(-I_p, gamma^2 I_m)`. Because the supply enters the
//! tested matrix affinely in `gamma^2`, everything that does not depend on
//! `gamma` — the Hankel matrix, the selector null space and the two Gram
//! matrices of the output and input rows of `H U_perp` — is computed once and
//! reused by every probe; one probe is then a single symmetric eigenvalue
//! computation. Feasibility is monotone in `gamma` (raising `gamma` adds a
//! positive-semidefinite term), which makes bisection well posed.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::min_eigenvalue_symmetric;
use crate::trajectory::{
    build_hankel, interleave, manifest_input_range, manifest_output_range, Trajectory,
};
use crate::verifier::{build_selector_u, constrained_nullspace, Tolerances};

/// Bisection parameters for the gain search.
#[derive(Debug, Clone, Copy)]
pub struct BisectionConfig {
    /// Width of the final bracket.
    pub abs_tol: f64,
    /// Hard cap on bisection steps.
    pub max_iters: usize,
    /// Starting point of the doubling search for a feasible upper bound;
    /// `None` starts at 1.
    pub initial_upper: Option<f64>,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        Self {
            abs_tol: 0.001,
            max_iters: 50,
            initial_upper: None,
        }
    }
}

/// One feasibility probe of the search.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GainProbe {
    pub gamma: f64,
    pub min_eigenvalue: f64,
    pub feasible: bool,
}

/// Result of the gain search. `gamma` is `None` when no candidate up to the
/// doubling cap was feasible; the probe history documents the failure.
#[derive(Debug, Clone, Serialize)]
pub struct GainEstimate {
    pub gamma: Option<f64>,
    pub iterations: usize,
    pub history: Vec<GainProbe>,
}

/// The gamma-independent part of the feasibility test, cached for reuse
/// across all probes of one data set.
#[derive(Debug, Clone)]
pub struct GainSearch {
    /// Gram matrix of the output rows of `H U_perp` (possibly QR-compressed).
    gram_outputs: DMatrix<f64>,
    /// Gram matrix of the input rows of `H U_perp` (possibly QR-compressed).
    gram_inputs: DMatrix<f64>,
    /// True when the compression dropped exact zero eigenvalues.
    structural_zeros: bool,
    eig_tol: f64,
    nullspace_dim: usize,
    nullspace_residual: f64,
    constrained_norm: f64,
}

impl GainSearch {
    /// Build the cached pipeline over all samples of the trajectory
    /// (depth-zero stacking, so `T` equals the trajectory length).
    pub fn new(
        traj: &Trajectory,
        horizon: usize,
        nu: usize,
        tolerances: Tolerances,
    ) -> Result<Self> {
        let (m, p) = (traj.num_inputs(), traj.num_outputs());
        if nu == 0 || nu >= horizon {
            return Err(Error::InvalidArgument(format!(
                "need 0 < nu < L, got nu = {nu}, L = {horizon}"
            )));
        }
        let z = interleave(traj);
        let hankel = build_hankel(&z, horizon)?;
        let h = hankel.matrix();
        let selector = build_selector_u(nu, horizon, 0, m, p)?;
        let constrained = &selector * h;
        let constrained_norm = constrained.norm();
        let nullspace = constrained_nullspace(&constrained, tolerances.rank_tol)?;
        let image = h * &nullspace.basis;
        let dims = nullspace.dim();

        // The tested matrix (H U_perp)^T Phi (H U_perp) has rank at most
        // L (m+p). When the null space is wider than that, compress H U_perp
        // through a QR factorization of its transpose: the nonzero spectrum
        // lives on R^T, and the remaining eigenvalues are exact zeros.
        let rows = image.nrows();
        let (effective, structural_zeros) = if dims > rows {
            let qr = image.transpose().qr();
            (qr.r().transpose(), true)
        } else {
            (image, false)
        };

        // Split the rows into output and input rows, block by block.
        let block = p + m;
        let width = effective.ncols();
        let mut rows_y = DMatrix::zeros(horizon * p, width);
        let mut rows_u = DMatrix::zeros(horizon * m, width);
        let y_range = manifest_output_range(p, m);
        let u_range = manifest_input_range(p, m);
        for k in 0..horizon {
            rows_y
                .view_mut((k * p, 0), (p, width))
                .copy_from(&effective.view((k * block + y_range.start, 0), (p, width)));
            rows_u
                .view_mut((k * m, 0), (m, width))
                .copy_from(&effective.view((k * block + u_range.start, 0), (m, width)));
        }
        Ok(Self {
            gram_outputs: rows_y.transpose() * rows_y,
            gram_inputs: rows_u.transpose() * rows_u,
            structural_zeros,
            eig_tol: tolerances.eig_tol,
            nullspace_dim: dims,
            nullspace_residual: nullspace.residual,
            constrained_norm,
        })
    }

    /// Minimum eigenvalue of `U_perp^T H^T Phi_L(gamma) H U_perp`, which
    /// regroups to `gamma^2 Gu - Gy` on the cached Gram matrices.
    pub fn min_eigenvalue_at(&self, gamma: f64) -> f64 {
        let tested = &self.gram_inputs * (gamma * gamma) - &self.gram_outputs;
        let min_eig = min_eigenvalue_symmetric(&tested);
        if self.structural_zeros {
            min_eig.min(0.0)
        } else {
            min_eig
        }
    }

    pub fn is_feasible(&self, gamma: f64) -> bool {
        self.min_eigenvalue_at(gamma) >= -self.eig_tol
    }

    pub fn nullspace_dim(&self) -> usize {
        self.nullspace_dim
    }

    /// Certificate `|| (U H) U_perp ||_F` of the cached basis.
    pub fn nullspace_residual(&self) -> f64 {
        self.nullspace_residual
    }

    /// `|| U H ||_F` for judging the certificate.
    pub fn constrained_norm(&self) -> f64 {
        self.constrained_norm
    }

    /// Run the search: doubling from the initial upper bound until feasible
    /// (factor cap 2^30), then bisection down to `abs_tol` or `max_iters`.
    /// The returned estimate is always a certified-feasible `gamma`.
    pub fn estimate(&self, cfg: &BisectionConfig) -> Result<GainEstimate> {
        if cfg.abs_tol <= 0.0 || cfg.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "bisection needs abs_tol > 0 and max_iters >= 1".into(),
            ));
        }
        let initial = cfg.initial_upper.unwrap_or(1.0);
        if initial <= 0.0 {
            return Err(Error::InvalidArgument(
                "initial upper bound must be positive".into(),
            ));
        }

        let mut history = Vec::new();
        let mut probe = |gamma: f64| -> bool {
            let min_eigenvalue = self.min_eigenvalue_at(gamma);
            let feasible = min_eigenvalue >= -self.eig_tol;
            history.push(GainProbe {
                gamma,
                min_eigenvalue,
                feasible,
            });
            feasible
        };

        if probe(0.0) {
            return Ok(GainEstimate {
                gamma: Some(0.0),
                iterations: 0,
                history,
            });
        }

        let cap = initial * (1u64 << 30) as f64;
        let mut hi = initial;
        while !probe(hi) {
            hi *= 2.0;
            if hi > cap {
                return Ok(GainEstimate {
                    gamma: None,
                    iterations: 0,
                    history,
                });
            }
        }
        let mut lo = if hi > initial { hi / 2.0 } else { 0.0 };

        let mut iterations = 0;
        while hi - lo > cfg.abs_tol && iterations < cfg.max_iters {
            let mid = 0.5 * (lo + hi);
            iterations += 1;
            if probe(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(GainEstimate {
            gamma: Some(hi),
            iterations,
            history,
        })
    }
}

/// One-shot convenience: build the cached pipeline and run the search.
pub fn estimate_l2_gain(
    traj: &Trajectory,
    horizon: usize,
    nu: usize,
    cfg: &BisectionConfig,
    tolerances: Tolerances,
) -> Result<GainEstimate> {
    GainSearch::new(traj, horizon, nu, tolerances)?.estimate(cfg)
}
