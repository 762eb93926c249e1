//! Discrete-time LTI state-space models: simulation, random stable system
//! generation, Markov parameters and the H-infinity norm.
//!
//! Models are only ever used on the data-generation and ground-truth side of
//! the toolkit; the data-driven verifier never sees them.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

/// A discrete-time state-space realization
///
/// ```text
/// x(k+1) = A x(k) + B u(k)
/// y(k)   = C x(k) + D u(k)
/// ```
///
/// with `A` n-by-n, `B` n-by-m, `C` p-by-n and `D` p-by-m. Immutable after
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl StateSpaceModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let m = b.ncols();
        let p = c.nrows();
        if b.nrows() != n || c.ncols() != n || d.nrows() != p || d.ncols() != m {
            return Err(Error::Dimension(format!(
                "inconsistent dimensions: A {n}x{n}, B {}x{}, C {}x{}, D {}x{}",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        if m == 0 || p == 0 {
            return Err(Error::Dimension(
                "model needs at least one input and one output".into(),
            ));
        }
        for (name, mat) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if !crate::numeric::all_finite(mat) {
                let _ = name;
                return Err(Error::NonFinite("state-space matrices"));
            }
        }
        Ok(Self { a, b, c, d })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    /// State dimension n.
    pub fn order(&self) -> usize {
        self.a.nrows()
    }
    /// Input dimension m.
    pub fn num_inputs(&self) -> usize {
        self.b.ncols()
    }
    /// Output dimension p.
    pub fn num_outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Largest eigenvalue magnitude of `A`.
    pub fn spectral_radius(&self) -> f64 {
        if self.order() == 0 {
            return 0.0;
        }
        self.a
            .complex_eigenvalues()
            .iter()
            .map(|ev| ev.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_stable(&self) -> bool {
        self.spectral_radius() < 1.0
    }

    /// Run the state recursion from `x0` over the input sequence and return
    /// the output sequence of the same length.
    pub fn simulate(&self, input: &[DVector<f64>], x0: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        if x0.len() != self.order() {
            return Err(Error::Dimension(format!(
                "initial state has dimension {}, model order is {}",
                x0.len(),
                self.order()
            )));
        }
        let mut x = x0.clone();
        let mut output = Vec::with_capacity(input.len());
        for u in input {
            if u.len() != self.num_inputs() {
                return Err(Error::Dimension(format!(
                    "input sample has dimension {}, model has {} inputs",
                    u.len(),
                    self.num_inputs()
                )));
            }
            output.push(&self.c * &x + &self.d * u);
            x = &self.a * &x + &self.b * u;
        }
        Ok(output)
    }

    /// Simulate from the zero initial state.
    pub fn simulate_zero_state(&self, input: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        self.simulate(input, &DVector::zeros(self.order()))
    }

    /// Draw a random stable model, deterministic in `seed`.
    ///
    /// All four matrices get independent standard-normal entries, then `A` is
    /// rescaled so its spectral radius equals a value drawn uniformly from
    /// `radius_range`.
    pub fn random_stable(
        n: usize,
        m: usize,
        p: usize,
        seed: u64,
        radius_range: (f64, f64),
    ) -> Result<Self> {
        let (lo, hi) = radius_range;
        if !(0.0 < lo && lo <= hi && hi < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "radius range must satisfy 0 < lo <= hi < 1, got ({lo}, {hi})"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidArgument(
                "random stable model needs order n >= 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |rows: usize, cols: usize| {
            DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
        };
        let a_raw = draw(n, n);
        let b = draw(n, m);
        let c = draw(p, n);
        let d = draw(p, m);
        let target: f64 = rng.random_range(lo..=hi);

        let raw_radius =
            Self::new(a_raw.clone(), b.clone(), c.clone(), d.clone())?.spectral_radius();
        let a = if raw_radius > 0.0 {
            a_raw * (target / raw_radius)
        } else {
            // Nilpotent draw (measure zero): fall back to a diagonal with the
            // target radius so the postcondition still holds.
            DMatrix::from_diagonal(&DVector::from_element(n, target))
        };
        Self::new(a, b, c, d)
    }

    /// Markov parameters `M_0 = D`, `M_k = C A^(k-1) B` for `k = 1..count`.
    pub fn markov_parameters(&self, count: usize) -> Result<Vec<DMatrix<f64>>> {
        if count == 0 {
            return Err(Error::InvalidArgument(
                "markov parameter count must be >= 1".into(),
            ));
        }
        let mut params = Vec::with_capacity(count);
        params.push(self.d.clone());
        // acc = A^(k-1) B
        let mut acc = self.b.clone();
        for _ in 1..count {
            params.push(&self.c * &acc);
            acc = &self.a * &acc;
        }
        Ok(params)
    }

    /// H-infinity norm: the maximum over the unit circle of the largest
    /// singular value of the transfer matrix `D + C (e^{i th} I - A)^{-1} B`.
    ///
    /// Evaluated on a 4096-point uniform grid over `[0, pi]` followed by
    /// golden-section refinement around the best grid points until the
    /// frequency bracket is narrower than `rel_tol`.
    pub fn hinf_norm(&self, rel_tol: f64) -> Result<f64> {
        if rel_tol <= 0.0 {
            return Err(Error::InvalidArgument("rel_tol must be positive".into()));
        }
        let radius = self.spectral_radius();
        if radius >= 1.0 {
            return Err(Error::UnstableModel { radius });
        }
        if self.order() == 0 {
            return Ok(sigma_max_complex(&to_complex(&self.d)));
        }

        let ac = to_complex(&self.a);
        let bc = to_complex(&self.b);
        let cc = to_complex(&self.c);
        let dc = to_complex(&self.d);
        let n = self.order();
        let gain_at = |theta: f64| -> f64 {
            let z = Complex::new(theta.cos(), theta.sin());
            let zi_minus_a = DMatrix::from_diagonal_element(n, n, z) - &ac;
            let solved = zi_minus_a
                .lu()
                .solve(&bc)
                .expect("zI - A is invertible for a stable A on the unit circle");
            sigma_max_complex(&(&dc + &cc * solved))
        };

        const GRID: usize = 4096;
        let step = std::f64::consts::PI / (GRID as f64 - 1.0);
        let values: Vec<f64> = (0..GRID).map(|i| gain_at(i as f64 * step)).collect();

        // Indices of the three largest grid values.
        let mut order: Vec<usize> = (0..GRID).collect();
        order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap());
        let mut best = values[order[0]];
        for &idx in order.iter().take(3) {
            let lo = idx.saturating_sub(1) as f64 * step;
            let hi = ((idx + 1).min(GRID - 1)) as f64 * step;
            best = best.max(golden_section_max(&gain_at, lo, hi, rel_tol));
        }
        Ok(best)
    }

    /// Serialize to the interchange JSON document with row-major matrices.
    pub fn to_json(&self) -> Result<String> {
        let doc = ModelJson {
            a: to_rows(&self.a),
            b: to_rows(&self.b),
            c: to_rows(&self.c),
            d: to_rows(&self.d),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelJson = serde_json::from_str(text)?;
        Self::new(
            from_rows(&doc.a, "A")?,
            from_rows(&doc.b, "B")?,
            from_rows(&doc.c, "C")?,
            from_rows(&doc.d, "D")?,
        )
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    d: Vec<Vec<f64>>,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn from_rows(rows: &[Vec<f64>], name: &'static str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension(format!("ragged rows in matrix {name}")));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("model JSON"));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex<f64>> {
    m.map(|x| Complex::new(x, 0.0))
}

fn sigma_max_complex(m: &DMatrix<Complex<f64>>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// Golden-section search for the maximum of `f` on `[a, b]`; stops once the
/// bracket is narrower than `tol`.
fn golden_section_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = f1.max(f2);
    let mut guard = 0;
    while b - a > tol && guard < 200 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
        best = best.max(f1.max(f2));
        guard += 1;
    }
    best
}

/// A single-input single-output difference-equation model
///
/// ```text
/// a_q y(k+q) + ... + a_1 y(k+1) + a_0 y(k) = b_r u(k+r) + ... + b_0 u(k)
/// ```
///
/// normalized so the leading output coefficient `a_q` is one. Convertible to
/// a [`StateSpaceModel`] in controllable canonical form.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceEquationModel {
    /// `a_0 ..= a_q` with `a_q = 1`.
    output_coeffs: Vec<f64>,
    /// `b_0 ..= b_r`.
    input_coeffs: Vec<f64>,
}

impl DifferenceEquationModel {
    pub fn new(output_coeffs: Vec<f64>, input_coeffs: Vec<f64>) -> Result<Self> {
        if output_coeffs.is_empty() || input_coeffs.is_empty() {
            return Err(Error::InvalidArgument(
                "coefficient lists must be nonempty".into(),
            ));
        }
        if input_coeffs.len() > output_coeffs.len() {
            return Err(Error::InvalidArgument(
                "input order must not exceed output order (causality)".into(),
            ));
        }
        let lead = *output_coeffs.last().unwrap();
        if lead == 0.0 || !lead.is_finite() {
            return Err(Error::InvalidArgument(
                "leading output coefficient must be nonzero".into(),
            ));
        }
        // Normalize to a monic leading term.
        let output_coeffs: Vec<f64> = output_coeffs.iter().map(|a| a / lead).collect();
        let input_coeffs: Vec<f64> = input_coeffs.iter().map(|b| b / lead).collect();
        Ok(Self {
            output_coeffs,
            input_coeffs,
        })
    }

    pub fn output_coeffs(&self) -> &[f64] {
        &self.output_coeffs
    }
    pub fn input_coeffs(&self) -> &[f64] {
        &self.input_coeffs
    }

    /// Output order q.
    pub fn order(&self) -> usize {
        self.output_coeffs.len() - 1
    }

    /// Controllable canonical realization: companion `A`, `B = e_q`,
    /// `C` from the numerator after removing the direct feedthrough `D`.
    pub fn to_state_space(&self) -> Result<StateSpaceModel> {
        let q = self.order();
        let mut b_ext = vec![0.0; q + 1];
        b_ext[..self.input_coeffs.len()].copy_from_slice(&self.input_coeffs);
        let d_term = b_ext[q];

        if q == 0 {
            // Pure static gain y = b_0 u.
            return StateSpaceModel::new(
                DMatrix::zeros(0, 0),
                DMatrix::zeros(0, 1),
                DMatrix::zeros(1, 0),
                DMatrix::from_element(1, 1, d_term),
            );
        }

        let mut a = DMatrix::zeros(q, q);
        for i in 0..q - 1 {
            a[(i, i + 1)] = 1.0;
        }
        for j in 0..q {
            a[(q - 1, j)] = -self.output_coeffs[j];
        }
        let mut b = DMatrix::zeros(q, 1);
        b[(q - 1, 0)] = 1.0;
        let c = DMatrix::from_fn(1, q, |_, j| b_ext[j] - d_term * self.output_coeffs[j]);
        let d = DMatrix::from_element(1, 1, d_term);
        StateSpaceModel::new(a, b, c, d)
    }
}

/// The oscillator fixture `y(k+2) + y(k+1) + y(k) = u(k)` used throughout the
/// test suites and experiment drivers.
pub fn mass_spring_damper() -> DifferenceEquationModel {
    DifferenceEquationModel::new(vec![1.0, 1.0, 1.0], vec![1.0]).expect("valid fixed coefficients")
}

/// Seeded i.i.d. zero-mean normal input sequence with the given standard
/// deviation, `len` samples of dimension `dim`.
pub fn random_normal_input(len: usize, dim: usize, std_dev: f64, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| DVector::from_fn(dim, |_, _| std_dev * rng.sample::<f64, _>(StandardNormal)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_impulse(len: usize) -> Vec<DVector<f64>> {
        let mut u = vec![DVector::zeros(1); len];
        u[0][0] = 1.0;
        u
    }

    fn scalar_model(a: f64, b: f64, c: f64, d: f64) -> StateSpaceModel {
        StateSpaceModel::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
            DMatrix::from_element(1, 1, c),
            DMatrix::from_element(1, 1, d),
        )
        .unwrap()
    }

    /// Independent reference for the oscillator fixture: iterate
    /// `y(k) = u(k-2) - y(k-1) - y(k-2)` directly, with zero history.
    fn msd_reference_output(u: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; u.len()];
        for k in 0..u.len() {
            let u_prev = if k >= 2 { u[k - 2] } else { 0.0 };
            let y1 = if k >= 1 { y[k - 1] } else { 0.0 };
            let y2 = if k >= 2 { y[k - 2] } else { 0.0 };
            y[k] = u_prev - y1 - y2;
        }
        y
    }

    #[test]
    fn identity_feedthrough_returns_input() {
        let model = StateSpaceModel::new(
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(2, 1),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let u: Vec<DVector<f64>> = (0..5)
            .map(|k| DVector::from_vec(vec![k as f64, -(k as f64)]))
            .collect();
        let y = model.simulate_zero_state(&u).unwrap();
        assert_eq!(y, u);
    }

    #[test]
    fn msd_impulse_response_matches_reference_iteration() {
        let model = mass_spring_damper().to_state_space().unwrap();
        let u = unit_impulse(9);
        let y = model.simulate_zero_state(&u).unwrap();
        let u_flat: Vec<f64> = u.iter().map(|v| v[0]).collect();
        let expected = msd_reference_output(&u_flat);
        // Frozen from the reference iteration: period-3 pattern after the delay.
        assert_eq!(
            expected,
            vec![0.0, 0.0, 1.0, -1.0, 0.0, 1.0, -1.0, 0.0, 1.0]
        );
        for (k, want) in expected.iter().enumerate() {
            assert_relative_eq!(y[k][0], *want, epsilon = 1e-14);
        }
    }

    #[test]
    fn scalar_impulse_response_geometric() {
        let model = scalar_model(0.5, 1.0, 1.0, 0.0);
        let y = model.simulate_zero_state(&unit_impulse(6)).unwrap();
        // y(k) = 0.5^(k-1) for k >= 1.
        let expected = [0.0, 1.0, 0.5, 0.25, 0.125, 0.0625];
        for (k, want) in expected.iter().enumerate() {
            assert_relative_eq!(y[k][0], *want, epsilon = 1e-15);
        }
    }

    #[test]
    fn simulate_rejects_bad_dimensions() {
        let model = scalar_model(0.5, 1.0, 1.0, 0.0);
        let err = model
            .simulate(&[DVector::zeros(2)], &DVector::zeros(1))
            .unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
        let err = model
            .simulate(&[DVector::zeros(1)], &DVector::zeros(3))
            .unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn random_stable_hits_requested_radius() {
        let model = StateSpaceModel::random_stable(4, 2, 2, 0, (0.3, 0.95)).unwrap();
        let rho = model.spectral_radius();
        assert!((0.3..=0.95 + 1e-12).contains(&rho), "radius {rho}");
        assert!(model.is_stable());
    }

    #[test]
    fn random_stable_is_deterministic() {
        let m1 = StateSpaceModel::random_stable(3, 1, 2, 42, (0.4, 0.9)).unwrap();
        let m2 = StateSpaceModel::random_stable(3, 1, 2, 42, (0.4, 0.9)).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn random_stable_degenerate_range() {
        let model = StateSpaceModel::random_stable(1, 1, 1, 7, (0.5, 0.5)).unwrap();
        assert_relative_eq!(model.a()[(0, 0)].abs(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn random_stable_rejects_bad_range() {
        assert!(StateSpaceModel::random_stable(2, 1, 1, 0, (0.0, 0.5)).is_err());
        assert!(StateSpaceModel::random_stable(2, 1, 1, 0, (0.9, 0.5)).is_err());
        assert!(StateSpaceModel::random_stable(2, 1, 1, 0, (0.5, 1.0)).is_err());
    }

    #[test]
    fn markov_parameters_nilpotent() {
        let model = StateSpaceModel::new(
            DMatrix::zeros(2, 2),
            DMatrix::from_row_slice(2, 1, &[1.0, 2.0]),
            DMatrix::from_row_slice(1, 2, &[3.0, 4.0]),
            DMatrix::from_element(1, 1, 5.0),
        )
        .unwrap();
        let mp = model.markov_parameters(4).unwrap();
        assert_relative_eq!(mp[0][(0, 0)], 5.0);
        assert_relative_eq!(mp[1][(0, 0)], 11.0); // C B = 3*1 + 4*2
        assert_relative_eq!(mp[2][(0, 0)], 0.0);
        assert_relative_eq!(mp[3][(0, 0)], 0.0);
    }

    #[test]
    fn markov_parameters_match_impulse_response() {
        for (label, model) in [
            ("scalar", scalar_model(0.5, 1.0, 1.0, 0.0)),
            ("msd", mass_spring_damper().to_state_space().unwrap()),
        ] {
            let count = 8;
            let mp = model.markov_parameters(count).unwrap();
            let y = model.simulate_zero_state(&unit_impulse(count)).unwrap();
            for k in 0..count {
                assert_relative_eq!(
                    mp[k][(0, 0)],
                    y[k][0],
                    epsilon = 1e-14,
                    max_relative = 1e-12
                );
            }
            let _ = label;
        }
    }

    #[test]
    fn hinf_of_static_model_is_sigma_max_d() {
        let d = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let model = StateSpaceModel::new(
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(2, 1),
            d,
        )
        .unwrap();
        assert_relative_eq!(model.hinf_norm(1e-8).unwrap(), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn hinf_of_scalar_lag_is_one_over_one_minus_a() {
        for a in [0.2, 0.5, 0.9] {
            let model = scalar_model(a, 1.0, 1.0, 0.0);
            let expected = 1.0 / (1.0 - a);
            assert_relative_eq!(
                model.hinf_norm(1e-9).unwrap(),
                expected,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn hinf_rejects_unstable_model() {
        let model = scalar_model(1.1, 1.0, 1.0, 0.0);
        assert!(matches!(
            model.hinf_norm(1e-6),
            Err(Error::UnstableModel { .. })
        ));
    }

    #[test]
    fn hinf_at_least_sigma_max_d() {
        for seed in 0..5 {
            let model = StateSpaceModel::random_stable(3, 2, 2, seed, (0.3, 0.9)).unwrap();
            let sigma_d = model.d().clone().svd(false, false).singular_values.max();
            let hinf = model.hinf_norm(1e-7).unwrap();
            assert!(
                hinf >= sigma_d - 1e-7,
                "hinf {hinf} < sigma_max(D) {sigma_d}"
            );
        }
    }

    #[test]
    fn hinf_bounds_finite_horizon_gain_of_simulated_trajectories() {
        for seed in 0..5 {
            let model = StateSpaceModel::random_stable(4, 2, 2, seed, (0.3, 0.9)).unwrap();
            let hinf = model.hinf_norm(1e-9).unwrap();
            for input_seed in 0..4 {
                let u = random_normal_input(60, 2, 1.0, 1000 * seed + input_seed);
                let y = model.simulate_zero_state(&u).unwrap();
                let u_norm: f64 = u.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
                let y_norm: f64 = y.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
                assert!(
                    y_norm <= hinf * u_norm * (1.0 + 1e-8),
                    "seed {seed}/{input_seed}: gain {} exceeds hinf {hinf}",
                    y_norm / u_norm
                );
            }
        }
    }

    #[test]
    fn difference_equation_round_trips_markov_parameters() {
        // y(k+2) + 0.5 y(k+1) - 0.1 y(k) = 2 u(k+1) + u(k)
        let de = DifferenceEquationModel::new(vec![-0.1, 0.5, 1.0], vec![1.0, 2.0]).unwrap();
        let ss = de.to_state_space().unwrap();
        assert_eq!(ss.order(), 2);
        // Reference: iterate y(k) = -0.5 y(k-1) + 0.1 y(k-2) + 2 u(k-1) + u(k-2)
        let u: Vec<f64> = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let mut y_ref = vec![0.0; u.len()];
        for k in 0..u.len() {
            let at = |v: &[f64], i: isize| if i >= 0 { v[i as usize] } else { 0.0 };
            y_ref[k] = -0.5 * at(&y_ref, k as isize - 1)
                + 0.1 * at(&y_ref, k as isize - 2)
                + 2.0 * at(&u, k as isize - 1)
                + at(&u, k as isize - 2);
        }
        let y = ss.simulate_zero_state(&unit_impulse(u.len())).unwrap();
        for k in 0..u.len() {
            assert_relative_eq!(y[k][0], y_ref[k], epsilon = 1e-13);
        }
    }

    #[test]
    fn difference_equation_normalizes_leading_coefficient() {
        let de = DifferenceEquationModel::new(vec![2.0, 4.0], vec![6.0]).unwrap();
        assert_eq!(de.output_coeffs(), &[0.5, 1.0]);
        assert_eq!(de.input_coeffs(), &[1.5]);
    }

    #[test]
    fn model_json_round_trip() {
        let model = StateSpaceModel::random_stable(3, 2, 1, 9, (0.3, 0.8)).unwrap();
        let text = model.to_json().unwrap();
        let back = StateSpaceModel::from_json(&text).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn model_json_rejects_non_finite() {
        let text = r#"{"A": [[1e999]], "B": [[1.0]], "C": [[1.0]], "D": [[0.0]]}"#;
        assert!(StateSpaceModel::from_json(text).is_err());
    }

    #[test]
    fn simulate_is_linear_in_input() {
        let model = StateSpaceModel::random_stable(3, 2, 2, 5, (0.3, 0.9)).unwrap();
        let u1 = random_normal_input(20, 2, 1.0, 10);
        let u2 = random_normal_input(20, 2, 1.0, 11);
        let (alpha, beta) = (1.7, -0.4);
        let combined: Vec<DVector<f64>> = u1
            .iter()
            .zip(&u2)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        let y1 = model.simulate_zero_state(&u1).unwrap();
        let y2 = model.simulate_zero_state(&u2).unwrap();
        let yc = model.simulate_zero_state(&combined).unwrap();
        for k in 0..20 {
            let want = alpha * &y1[k] + beta * &y2[k];
            assert_relative_eq!(yc[k], want, epsilon = 1e-10);
        }
    }

    #[test]
    fn simulate_is_time_invariant() {
        let model = StateSpaceModel::random_stable(2, 1, 1, 3, (0.3, 0.9)).unwrap();
        let u = random_normal_input(15, 1, 1.0, 4);
        let delay = 3;
        let mut delayed = vec![DVector::zeros(1); delay];
        delayed.extend(u.iter().cloned());
        let y = model.simulate_zero_state(&u).unwrap();
        let yd = model.simulate_zero_state(&delayed).unwrap();
        for sample in yd.iter().take(delay) {
            assert_relative_eq!(sample[0], 0.0, epsilon = 1e-14);
        }
        for k in 0..15 {
            assert_relative_eq!(yd[k + delay][0], y[k][0], epsilon = 1e-12);
        }
    }
}
