//! The data-driven dissipativity test.
//!
//! From one measured trajectory the test builds the block-Hankel matrix `H`
//! of the shifted stacking `Z`, the selector `U` that extracts the first `nu`
//! manifest samples of every data window, and an orthonormal basis `U_perp`
//! of the null space of `U H`. Columns of `H U_perp` span exactly the data
//! windows with zero initial samples, so the system is certified dissipative
//! when
//!
//! ```text
//! U_perp^T  H^T  (I_L (x) Phi_N)  H  U_perp  >=  0
//! ```
//!
//! holds up to the eigenvalue tolerance, provided the input was persistently
//! exciting of order `L + N + n`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::excitation::{is_persistently_exciting, min_t_for_nullspace};
use crate::numeric::{min_eigenvalue_symmetric, nullspace_basis, RankTolerance};
use crate::supply::SupplyRate;
use crate::trajectory::{build_hankel, interleave, stack_shifted, Trajectory};
use crate::DEFAULT_EIG_TOL;

/// Numerical tolerances of the verifier.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// The verdict is "dissipative" when the minimum eigenvalue is at least
    /// `-eig_tol`.
    pub eig_tol: f64,
    /// Singular-value policy for rank and null-space decisions.
    pub rank_tol: RankTolerance,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eig_tol: DEFAULT_EIG_TOL,
            rank_tol: RankTolerance::Auto,
        }
    }
}

/// Everything one run of the test needs.
#[derive(Debug, Clone)]
pub struct VerificationProblem<'a> {
    pub traj: &'a Trajectory,
    pub supply: &'a SupplyRate,
    /// Horizon `L` (block rows of the Hankel matrix).
    pub horizon: usize,
    /// Zero-initialization length `nu`, `0 < nu < L`.
    pub nu: usize,
    /// Number of stacked samples `T` used; the trajectory must hold at least
    /// `T + N` samples.
    pub t_used: usize,
    /// System order, when known. Sets the persistency-of-excitation order to
    /// `L + N + n`; without it `nu` stands in as the upper bound for `n`.
    pub known_order: Option<usize>,
    pub tolerances: Tolerances,
}

impl<'a> VerificationProblem<'a> {
    /// Problem over all available samples (`T = len - N`).
    pub fn new(
        traj: &'a Trajectory,
        supply: &'a SupplyRate,
        horizon: usize,
        nu: usize,
    ) -> Result<Self> {
        let n_shift = supply.shift_depth();
        if traj.len() < n_shift + 1 {
            return Err(Error::TooShort {
                what: "trajectory for stacking depth",
                requested: n_shift + 1,
                available: traj.len(),
            });
        }
        Self::with_t(traj, supply, horizon, nu, traj.len() - n_shift)
    }

    /// Problem using exactly `t_used` stacked samples.
    pub fn with_t(
        traj: &'a Trajectory,
        supply: &'a SupplyRate,
        horizon: usize,
        nu: usize,
        t_used: usize,
    ) -> Result<Self> {
        if traj.num_inputs() != supply.num_inputs() || traj.num_outputs() != supply.num_outputs() {
            return Err(Error::Dimension(format!(
                "trajectory has (m, p) = ({}, {}), supply expects ({}, {})",
                traj.num_inputs(),
                traj.num_outputs(),
                supply.num_inputs(),
                supply.num_outputs()
            )));
        }
        if nu == 0 || nu >= horizon {
            return Err(Error::InvalidArgument(format!(
                "need 0 < nu < L, got nu = {nu}, L = {horizon}"
            )));
        }
        if t_used < horizon {
            return Err(Error::TooShort {
                what: "stacked samples for horizon",
                requested: horizon,
                available: t_used,
            });
        }
        let needed = t_used + supply.shift_depth();
        if traj.len() < needed {
            return Err(Error::TooShort {
                what: "trajectory samples",
                requested: needed,
                available: traj.len(),
            });
        }
        Ok(Self {
            traj,
            supply,
            horizon,
            nu,
            t_used,
            known_order: None,
            tolerances: Tolerances::default(),
        })
    }

    pub fn with_known_order(mut self, order: usize) -> Self {
        self.known_order = Some(order);
        self
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }
}

/// Outcome of one verification, with the intermediate dimensions kept for
/// audit.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub dissipative: bool,
    pub min_eigenvalue: f64,
    pub nullspace_dim: usize,
    pub pe_order_checked: usize,
    pub pe_passed: bool,
    /// True when `T` meets the null-space bound, so a single-`nu` certificate
    /// extends to the full horizon property.
    pub statement_ii_applicable: bool,
    pub horizon: usize,
    pub nu: usize,
    pub shift_depth: usize,
    pub t_used: usize,
    pub hankel_rows: usize,
    pub hankel_cols: usize,
    pub eig_tol: f64,
    /// `|| (U H) U_perp ||_F`, the certificate that the basis annihilates the
    /// constrained data matrix.
    pub nullspace_residual: f64,
    /// `|| U H ||_F`, the scale the residual is judged against.
    pub constrained_norm: f64,
}

/// The selector `U` extracting the manifest samples `z(0), ..., z(nu-1)` from
/// one stacked Hankel column: `nu (m+p)` rows, `L (N+1) (m+p)` columns, one
/// unit entry per row.
pub fn build_selector_u(
    nu: usize,
    horizon: usize,
    shift_depth: usize,
    num_inputs: usize,
    num_outputs: usize,
) -> Result<DMatrix<f64>> {
    if nu == 0 || nu >= horizon {
        return Err(Error::InvalidArgument(format!(
            "selector needs 0 < nu < L, got nu = {nu}, L = {horizon}"
        )));
    }
    let block = num_inputs + num_outputs;
    let window = (shift_depth + 1) * block;
    let mut u = DMatrix::zeros(nu * block, horizon * window);
    for i in 0..nu {
        for r in 0..block {
            u[(i * block + r, i * window + r)] = 1.0;
        }
    }
    Ok(u)
}

/// Orthonormal basis of the null space of `m` together with the residual
/// certificate `|| m * basis ||_F`.
#[derive(Debug, Clone)]
pub struct NullspaceBasis {
    pub basis: DMatrix<f64>,
    pub residual: f64,
}

impl NullspaceBasis {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// Compute an orthonormal null-space basis of `m` under the rank policy.
/// An empty numerical null space is an error, never a vacuous pass.
pub fn constrained_nullspace(m: &DMatrix<f64>, tol: RankTolerance) -> Result<NullspaceBasis> {
    match nullspace_basis(m, tol) {
        Some(basis) => {
            let residual = (m * &basis).norm();
            Ok(NullspaceBasis { basis, residual })
        }
        None => Err(Error::EmptyNullspace {
            rows: m.nrows(),
            cols: m.ncols(),
            advice: String::new(),
        }),
    }
}

/// Run the test and report a [`Verdict`].
pub fn verify(problem: &VerificationProblem) -> Result<Verdict> {
    let traj = problem.traj;
    let supply = problem.supply;
    let n_shift = supply.shift_depth();
    let (m, p) = (traj.num_inputs(), traj.num_outputs());
    let horizon = problem.horizon;
    let t_used = problem.t_used;

    let z = interleave(traj);
    let stacked = stack_shifted(&z[..t_used + n_shift], n_shift)?;
    debug_assert_eq!(stacked.len(), t_used);
    let hankel = build_hankel(stacked.samples(), horizon)?;
    let h = hankel.matrix();

    let selector = build_selector_u(problem.nu, horizon, n_shift, m, p)?;
    let constrained = &selector * h;
    let constrained_norm = constrained.norm();

    let nullspace_required_t = min_t_for_nullspace(horizon, m, p);
    let nullspace = constrained_nullspace(&constrained, problem.tolerances.rank_tol).map_err(
        |err| match err {
            Error::EmptyNullspace { rows, cols, .. } => Error::EmptyNullspace {
                rows,
                cols,
                advice: format!(
                    "; T = {t_used} stacked samples may be too small, \
                     the null-space bound requires T >= {nullspace_required_t}"
                ),
            },
            other => other,
        },
    )?;

    let phi_l = supply.expand(horizon);
    let image = h * &nullspace.basis;
    let tested = image.transpose() * (&phi_l * &image);
    let min_eigenvalue = min_eigenvalue_symmetric(&tested);

    // Persistency of excitation at order L + N + n; nu upper-bounds the order
    // when the caller does not know n. Advisory: recorded, never gating.
    let pe_order_checked = horizon + n_shift + problem.known_order.unwrap_or(problem.nu);
    let u_window: Vec<_> = traj.inputs()[..t_used + n_shift].to_vec();
    let pe_passed =
        match is_persistently_exciting(&u_window, pe_order_checked, problem.tolerances.rank_tol) {
            Ok(report) => report.persistently_exciting,
            // Window shorter than the required order cannot be exciting at it.
            Err(Error::TooShort { .. }) => false,
            Err(other) => return Err(other),
        };

    let eig_tol = problem.tolerances.eig_tol;
    Ok(Verdict {
        dissipative: min_eigenvalue >= -eig_tol,
        min_eigenvalue,
        nullspace_dim: nullspace.dim(),
        pe_order_checked,
        pe_passed,
        statement_ii_applicable: t_used >= nullspace_required_t,
        horizon,
        nu: problem.nu,
        shift_depth: n_shift,
        t_used,
        hankel_rows: h.nrows(),
        hankel_cols: h.ncols(),
        eig_tol,
        nullspace_residual: nullspace.residual,
        constrained_norm,
    })
}

/// How [`verify_statement_ii`] covers the `nu` range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "nu")]
pub enum StatementIiMode {
    /// Check every `nu` in `[n, L)`; all must pass.
    AllNu,
    /// Check one `nu`; valid only when `T` meets the null-space bound, which
    /// lets a single certificate stand in for the whole range.
    SingleNu(usize),
}

/// Verdicts for the horizon property across the admissible `nu` range.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateVerdict {
    pub dissipative: bool,
    pub mode: StatementIiMode,
    pub verdicts: Vec<Verdict>,
}

/// Decide the full horizon dissipativity property from a base problem and an
/// assumed system order `n`, either by sweeping every `nu` in `[n, L)` or via
/// the single-`nu` shortcut available under the larger data bound.
pub fn verify_statement_ii(
    problem: &VerificationProblem,
    order: usize,
    mode: StatementIiMode,
) -> Result<AggregateVerdict> {
    if order == 0 || order >= problem.horizon {
        return Err(Error::InvalidArgument(format!(
            "assumed order must satisfy 1 <= n < L, got n = {order}, L = {}",
            problem.horizon
        )));
    }
    let nus: Vec<usize> = match mode {
        StatementIiMode::AllNu => (order..problem.horizon).collect(),
        StatementIiMode::SingleNu(nu) => {
            if nu < order || nu >= problem.horizon {
                return Err(Error::InvalidArgument(format!(
                    "single nu = {nu} outside [n, L) = [{order}, {})",
                    problem.horizon
                )));
            }
            let required = min_t_for_nullspace(
                problem.horizon,
                problem.traj.num_inputs(),
                problem.traj.num_outputs(),
            );
            if problem.t_used < required {
                return Err(Error::InvalidArgument(format!(
                    "single-nu mode needs T >= {required}, got T = {}",
                    problem.t_used
                )));
            }
            vec![nu]
        }
    };
    let mut verdicts = Vec::with_capacity(nus.len());
    for nu in nus {
        let mut sub = problem.clone();
        sub.nu = nu;
        verdicts.push(verify(&sub)?);
    }
    Ok(AggregateVerdict {
        dissipative: verdicts.iter().all(|v| v.dissipative),
        mode,
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excitation::min_t_for_pe;
    use crate::lti::{mass_spring_damper, random_normal_input, StateSpaceModel};
    use crate::supply::{mass_spring_damper_shifted_supply, SupplyRate};
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn msd_trajectory(len: usize, seed: u64) -> Trajectory {
        let model = mass_spring_damper().to_state_space().unwrap();
        let u = random_normal_input(len, 1, 10.0, seed);
        let y = model.simulate_zero_state(&u).unwrap();
        Trajectory::from_io(u, y).unwrap()
    }

    #[test]
    fn selector_minimal_case() {
        let u = build_selector_u(1, 2, 0, 1, 1).unwrap();
        let expected = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(u, expected);
    }

    #[test]
    fn selector_extracts_leading_samples() {
        let (nu, horizon, n_shift, m, p) = (2, 3, 1, 1, 1);
        let u = build_selector_u(nu, horizon, n_shift, m, p).unwrap();
        assert_eq!(u.shape(), (4, 12));
        // Stacked column for windows Z(0), Z(1), Z(2) over z(0..=3).
        let z: Vec<DVector<f64>> = (0..4)
            .map(|k| DVector::from_vec(vec![10.0 + k as f64, 20.0 + k as f64]))
            .collect();
        let stacked = stack_shifted(&z, n_shift).unwrap();
        let hankel = build_hankel(stacked.samples(), horizon).unwrap();
        let column = hankel.matrix().column(0).into_owned();
        let selected = &u * column;
        assert_eq!(selected.as_slice(), &[10.0, 20.0, 11.0, 21.0]);
        // Unit entries at stacked positions {0, 1} and {4, 5}.
        for row in 0..4 {
            let ones: Vec<usize> = (0..u.ncols()).filter(|&c| u[(row, c)] != 0.0).collect();
            assert_eq!(ones, vec![[0, 1, 4, 5][row]]);
        }
    }

    #[test]
    fn selector_has_orthonormal_rows() {
        let u = build_selector_u(3, 7, 2, 2, 1).unwrap();
        let gram = &u * u.transpose();
        assert_eq!(gram, DMatrix::identity(9, 9));
    }

    #[test]
    fn selector_rejects_bad_nu() {
        assert!(build_selector_u(0, 3, 0, 1, 1).is_err());
        assert!(build_selector_u(3, 3, 0, 1, 1).is_err());
        assert!(build_selector_u(4, 3, 0, 1, 1).is_err());
    }

    #[test]
    fn nullspace_of_zero_matrix_is_full_space() {
        let m = DMatrix::zeros(3, 4);
        let ns = constrained_nullspace(&m, RankTolerance::Auto).unwrap();
        assert_eq!(ns.dim(), 4);
        // Projector onto the span is the identity.
        let projector = &ns.basis * ns.basis.transpose();
        assert_relative_eq!(projector, DMatrix::identity(4, 4), epsilon = 1e-12);
    }

    #[test]
    fn nullspace_of_partial_rank_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let ns = constrained_nullspace(&m, RankTolerance::Auto).unwrap();
        assert_eq!(ns.dim(), 1);
        assert_relative_eq!(ns.basis[(0, 0)].abs(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(ns.basis[(1, 0)].abs(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn nullspace_dimension_by_rank_nullity() {
        let (rows, cols) = (4, 9);
        let data = random_normal_input(cols, rows, 1.0, 99);
        let m = DMatrix::from_fn(rows, cols, |i, j| data[j][i]);
        let ns = constrained_nullspace(&m, RankTolerance::Auto).unwrap();
        assert_eq!(ns.dim(), cols - rows);
        assert!(ns.residual <= 1e-12 * m.norm());
    }

    #[test]
    fn globally_psd_supply_verifies_on_any_data() {
        let supply = SupplyRate::from_blocks(0, 1, 1, [((0, 0), DMatrix::identity(2, 2))]).unwrap();
        let traj = msd_trajectory(40, 3);
        let problem = VerificationProblem::new(&traj, &supply, 6, 2).unwrap();
        let verdict = verify(&problem).unwrap();
        assert!(verdict.dissipative);
        assert!(verdict.min_eigenvalue >= -verdict.eig_tol);
    }

    #[test]
    fn oscillator_is_dissipative_for_its_shifted_supply() {
        let supply = mass_spring_damper_shifted_supply();
        let t = min_t_for_pe(10, 2, 1, 1);
        let traj = msd_trajectory(t + 1, 11);
        let problem = VerificationProblem::with_t(&traj, &supply, 10, 2, t)
            .unwrap()
            .with_known_order(2);
        let verdict = verify(&problem).unwrap();
        assert!(verdict.dissipative, "min eig {}", verdict.min_eigenvalue);
        assert!(verdict.pe_passed);
        assert_eq!(verdict.pe_order_checked, 13);
        assert!(verdict.nullspace_residual <= 1e-10 * verdict.constrained_norm.max(1.0));
    }

    #[test]
    fn negated_supply_fails_on_the_same_data() {
        let supply = mass_spring_damper_shifted_supply().scale(-1.0);
        let t = min_t_for_pe(10, 2, 1, 1);
        let traj = msd_trajectory(t + 1, 11);
        let problem = VerificationProblem::with_t(&traj, &supply, 10, 2, t).unwrap();
        let verdict = verify(&problem).unwrap();
        assert!(!verdict.dissipative);
        assert!(verdict.min_eigenvalue < -verdict.eig_tol);
    }

    #[test]
    fn verdict_is_invariant_under_positive_supply_scaling() {
        let t = min_t_for_pe(8, 2, 1, 1);
        let traj = msd_trajectory(t + 1, 21);
        for base in [
            mass_spring_damper_shifted_supply(),
            mass_spring_damper_shifted_supply().scale(-1.0),
        ] {
            let reference = {
                let problem = VerificationProblem::with_t(&traj, &base, 8, 3, t).unwrap();
                verify(&problem).unwrap()
            };
            for alpha in [0.5, 10.0] {
                let scaled = base.scale(alpha);
                let tolerances = Tolerances {
                    eig_tol: alpha * DEFAULT_EIG_TOL,
                    rank_tol: RankTolerance::Auto,
                };
                let problem = VerificationProblem::with_t(&traj, &scaled, 8, 3, t)
                    .unwrap()
                    .with_tolerances(tolerances);
                let verdict = verify(&problem).unwrap();
                assert_eq!(verdict.dissipative, reference.dissipative, "alpha {alpha}");
                // The tested matrix scales exactly by alpha; its eigenvalues
                // match up to solver noise at the matrix scale.
                assert_relative_eq!(
                    verdict.min_eigenvalue,
                    alpha * reference.min_eigenvalue,
                    max_relative = 1e-9,
                    epsilon = alpha * 1e-7
                );
            }
        }
    }

    #[test]
    fn verdict_agrees_across_snapshots() {
        let supply = mass_spring_damper_shifted_supply();
        let t = min_t_for_pe(6, 2, 1, 1);
        let long = msd_trajectory(200, 5);
        let mut verdicts = Vec::new();
        for start in [10, 60, 97] {
            let snap = long.snapshot(start, t + 1).unwrap();
            let problem = VerificationProblem::with_t(&snap, &supply, 6, 2, t).unwrap();
            verdicts.push(verify(&problem).unwrap().dissipative);
        }
        assert!(verdicts.iter().all(|&d| d));

        let negated = supply.scale(-1.0);
        for start in [10, 60, 97] {
            let snap = long.snapshot(start, t + 1).unwrap();
            let problem = VerificationProblem::with_t(&snap, &negated, 6, 2, t).unwrap();
            assert!(!verify(&problem).unwrap().dissipative);
        }
    }

    #[test]
    fn empty_nullspace_is_an_error() {
        // Full-column-rank constrained matrix: nu (m+p) = 4 rows against
        // T - L + 1 = 3 columns of generic data.
        let model = StateSpaceModel::random_stable(2, 1, 1, 8, (0.4, 0.8)).unwrap();
        let u = random_normal_input(6, 1, 1.0, 8);
        let y = model.simulate_zero_state(&u).unwrap();
        let traj = Trajectory::from_io(u, y).unwrap();
        let supply = SupplyRate::l2_gain(1.0, 1, 1);
        let problem = VerificationProblem::with_t(&traj, &supply, 4, 2, 6).unwrap();
        match verify(&problem) {
            Err(Error::EmptyNullspace { rows, cols, advice }) => {
                assert_eq!((rows, cols), (4, 3));
                assert!(advice.contains("T >= 11"), "advice: {advice}");
            }
            other => panic!("expected empty-nullspace error, got {other:?}"),
        }
    }

    #[test]
    fn statement_ii_all_nu_on_oscillator() {
        let supply = mass_spring_damper_shifted_supply();
        let horizon = 5;
        let t = min_t_for_nullspace(horizon, 1, 1);
        let traj = msd_trajectory(t + 1, 30);
        let problem = VerificationProblem::with_t(&traj, &supply, horizon, 2, t).unwrap();
        let all = verify_statement_ii(&problem, 2, StatementIiMode::AllNu).unwrap();
        assert!(all.dissipative);
        assert_eq!(all.verdicts.len(), horizon - 2);
        let single = verify_statement_ii(&problem, 2, StatementIiMode::SingleNu(2)).unwrap();
        assert!(single.dissipative);
        assert_eq!(single.verdicts.len(), 1);
        assert_eq!(single.dissipative, all.dissipative);
    }

    #[test]
    fn statement_ii_single_nu_requires_data_bound() {
        let supply = mass_spring_damper_shifted_supply();
        let horizon = 6;
        let t = min_t_for_pe(horizon, 2, 1, 1); // 16, below 3 L - 1 = 17
        let traj = msd_trajectory(40, 2);
        let problem = VerificationProblem::with_t(&traj, &supply, horizon, 2, t).unwrap();
        let required = min_t_for_nullspace(horizon, 1, 1);
        if t < required {
            assert!(matches!(
                verify_statement_ii(&problem, 2, StatementIiMode::SingleNu(2)),
                Err(Error::InvalidArgument(_))
            ));
        }
        // L = n + 1 leaves exactly one nu to check.
        let problem = VerificationProblem::with_t(&traj, &supply, 3, 2, 30).unwrap();
        let agg = verify_statement_ii(&problem, 2, StatementIiMode::AllNu).unwrap();
        assert_eq!(agg.verdicts.len(), 1);
        assert_eq!(agg.verdicts[0].nu, 2);
    }
}
