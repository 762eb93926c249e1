//! Generalized quadratic supply rates
//!
//! ```text
//! w(u(k), y(k)) = sum_{i,j=0}^{N} z(k+i)^T Phi_ij z(k+j),   z = [y; u]
//! ```
//!
//! stored block-wise. Only the upper triangle of blocks is kept; the lower
//! triangle is always derived through `Phi_ji = Phi_ij^T`, so the assembled
//! matrix cannot come out asymmetric.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::trajectory::{manifest_sample, Trajectory};

/// Classical QSR data for one block: `[Q S; S^T R]` with symmetric `Q`, `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct QsrBlock {
    pub q: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl QsrBlock {
    pub fn new(q: DMatrix<f64>, s: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        if q.nrows() != q.ncols() || r.nrows() != r.ncols() {
            return Err(Error::Dimension("Q and R must be square".into()));
        }
        if s.nrows() != q.nrows() || s.ncols() != r.ncols() {
            return Err(Error::Dimension("S must be p x m".into()));
        }
        if q != q.transpose() || r != r.transpose() {
            return Err(Error::InvalidArgument("Q and R must be symmetric".into()));
        }
        Ok(Self { q, s, r })
    }

    /// The `(p+m) x (p+m)` block matrix `[Q S; S^T R]`.
    pub fn to_block(&self) -> DMatrix<f64> {
        let p = self.q.nrows();
        let m = self.r.nrows();
        let mut block = DMatrix::zeros(p + m, p + m);
        block.view_mut((0, 0), (p, p)).copy_from(&self.q);
        block.view_mut((0, p), (p, m)).copy_from(&self.s);
        block
            .view_mut((p, 0), (m, p))
            .copy_from(&self.s.transpose());
        block.view_mut((p, p), (m, m)).copy_from(&self.r);
        block
    }
}

/// A supply rate of shift depth `N` over signals with `p` outputs and `m`
/// inputs. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyRate {
    shift_depth: usize,
    num_outputs: usize,
    num_inputs: usize,
    /// Upper-triangle blocks, row-major: (0,0)..(0,N), (1,1)..(1,N), ...
    upper: Vec<DMatrix<f64>>,
}

impl SupplyRate {
    /// Build from an arbitrary set of `(i, j) -> Phi_ij` blocks. Missing
    /// blocks default to zero; a pair supplied on both sides of the diagonal
    /// must satisfy `Phi_ji = Phi_ij^T` exactly.
    pub fn from_blocks(
        shift_depth: usize,
        num_outputs: usize,
        num_inputs: usize,
        blocks: impl IntoIterator<Item = ((usize, usize), DMatrix<f64>)>,
    ) -> Result<Self> {
        if num_outputs == 0 || num_inputs == 0 {
            return Err(Error::Dimension(
                "supply rate needs m >= 1 and p >= 1".into(),
            ));
        }
        let dim = num_outputs + num_inputs;
        let mut given: BTreeMap<(usize, usize), DMatrix<f64>> = BTreeMap::new();
        for ((i, j), block) in blocks {
            if i > shift_depth || j > shift_depth {
                return Err(Error::InvalidArgument(format!(
                    "block index ({i},{j}) exceeds shift depth {shift_depth}"
                )));
            }
            if block.shape() != (dim, dim) {
                return Err(Error::Dimension(format!(
                    "block ({i},{j}) is {}x{}, expected {dim}x{dim}",
                    block.nrows(),
                    block.ncols()
                )));
            }
            if !crate::numeric::all_finite(&block) {
                return Err(Error::NonFinite("supply rate block"));
            }
            if given.insert((i, j), block).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "block ({i},{j}) supplied twice"
                )));
            }
        }

        let mut upper = Vec::with_capacity(upper_len(shift_depth));
        for i in 0..=shift_depth {
            for j in i..=shift_depth {
                let direct = given.get(&(i, j));
                let mirrored = if i == j { None } else { given.get(&(j, i)) };
                let block = match (direct, mirrored) {
                    (Some(b), Some(bt)) => {
                        if *bt != b.transpose() {
                            return Err(Error::BlockSymmetry { i, j });
                        }
                        b.clone()
                    }
                    (Some(b), None) => b.clone(),
                    (None, Some(bt)) => bt.transpose(),
                    (None, None) => DMatrix::zeros(dim, dim),
                };
                if i == j && block != block.transpose() {
                    return Err(Error::BlockSymmetry { i, j });
                }
                upper.push(block);
            }
        }
        Ok(Self {
            shift_depth,
            num_outputs,
            num_inputs,
            upper,
        })
    }

    /// Depth-zero supply from classical QSR data.
    pub fn from_qsr(block: QsrBlock) -> Result<Self> {
        let p = block.q.nrows();
        let m = block.r.nrows();
        Self::from_blocks(0, p, m, [((0, 0), block.to_block())])
    }

    /// The L2-gain supply `diag(-I_p, gamma^2 I_m)` (depth zero).
    pub fn l2_gain(gamma: f64, num_outputs: usize, num_inputs: usize) -> SupplyRate {
        let mut block = DMatrix::zeros(num_outputs + num_inputs, num_outputs + num_inputs);
        for i in 0..num_outputs {
            block[(i, i)] = -1.0;
        }
        for i in 0..num_inputs {
            block[(num_outputs + i, num_outputs + i)] = gamma * gamma;
        }
        Self::from_blocks(0, num_outputs, num_inputs, [((0, 0), block)])
            .expect("fixed-shape block is valid")
    }

    /// Shift depth N.
    pub fn shift_depth(&self) -> usize {
        self.shift_depth
    }
    pub fn num_outputs(&self) -> usize {
        self.num_outputs
    }
    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }
    /// Dimension `p + m` of one block.
    pub fn block_dim(&self) -> usize {
        self.num_outputs + self.num_inputs
    }

    /// Block `Phi_ij`; the lower triangle is derived by transposition.
    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        assert!(
            i <= self.shift_depth && j <= self.shift_depth,
            "block index out of range"
        );
        if i <= j {
            self.upper[upper_index(self.shift_depth, i, j)].clone()
        } else {
            self.upper[upper_index(self.shift_depth, j, i)].transpose()
        }
    }

    /// Supply scaled by a scalar factor.
    pub fn scale(&self, factor: f64) -> SupplyRate {
        SupplyRate {
            shift_depth: self.shift_depth,
            num_outputs: self.num_outputs,
            num_inputs: self.num_inputs,
            upper: self.upper.iter().map(|b| b * factor).collect(),
        }
    }

    /// Assemble the full symmetric `(N+1)(p+m)` matrix of blocks.
    pub fn assemble(&self) -> DMatrix<f64> {
        let dim = self.block_dim();
        let total = (self.shift_depth + 1) * dim;
        let mut phi = DMatrix::zeros(total, total);
        for i in 0..=self.shift_depth {
            for j in i..=self.shift_depth {
                let block = &self.upper[upper_index(self.shift_depth, i, j)];
                phi.view_mut((i * dim, j * dim), (dim, dim))
                    .copy_from(block);
                if i != j {
                    phi.view_mut((j * dim, i * dim), (dim, dim))
                        .copy_from(&block.transpose());
                }
            }
        }
        phi
    }

    /// Horizon expansion `I_L (Kronecker) Phi_N`: block diagonal with `L`
    /// copies of the assembled matrix.
    pub fn expand(&self, horizon: usize) -> DMatrix<f64> {
        DMatrix::identity(horizon, horizon).kronecker(&self.assemble())
    }

    /// Evaluate the supply at sample `k` via the double sum over block
    /// index pairs.
    pub fn evaluate(&self, traj: &Trajectory, k: usize) -> Result<f64> {
        self.check_signal_dims(traj)?;
        if k + self.shift_depth >= traj.len() {
            return Err(Error::TooShort {
                what: "supply evaluation window",
                requested: k + self.shift_depth + 1,
                available: traj.len(),
            });
        }
        let z: Vec<DVector<f64>> = (0..=self.shift_depth)
            .map(|i| manifest_sample(traj.output(k + i), traj.input(k + i)))
            .collect();
        let mut total = 0.0;
        for i in 0..=self.shift_depth {
            for j in i..=self.shift_depth {
                let block = &self.upper[upper_index(self.shift_depth, i, j)];
                let term = z[i].dot(&(block * &z[j]));
                total += if i == j { term } else { 2.0 * term };
            }
        }
        Ok(total)
    }

    /// `sum_{k=0}^{horizon-1}` of [`SupplyRate::evaluate`].
    pub fn sum(&self, traj: &Trajectory, horizon: usize) -> Result<f64> {
        if horizon + self.shift_depth > traj.len() {
            return Err(Error::TooShort {
                what: "supply sum horizon",
                requested: horizon + self.shift_depth,
                available: traj.len(),
            });
        }
        let mut total = 0.0;
        for k in 0..horizon {
            total += self.evaluate(traj, k)?;
        }
        Ok(total)
    }

    fn check_signal_dims(&self, traj: &Trajectory) -> Result<()> {
        if traj.num_inputs() != self.num_inputs || traj.num_outputs() != self.num_outputs {
            return Err(Error::Dimension(format!(
                "trajectory has (m, p) = ({}, {}), supply expects ({}, {})",
                traj.num_inputs(),
                traj.num_outputs(),
                self.num_inputs,
                self.num_outputs
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut blocks = BTreeMap::new();
        for i in 0..=self.shift_depth {
            for j in i..=self.shift_depth {
                let block = &self.upper[upper_index(self.shift_depth, i, j)];
                let rows: Vec<Vec<f64>> = (0..block.nrows())
                    .map(|r| block.row(r).iter().copied().collect())
                    .collect();
                blocks.insert(format!("{i},{j}"), rows);
            }
        }
        let doc = SupplyJson {
            shift_depth: self.shift_depth,
            m: self.num_inputs,
            p: self.num_outputs,
            blocks,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SupplyJson = serde_json::from_str(text)?;
        let mut blocks = Vec::new();
        for (key, rows) in &doc.blocks {
            let (i, j) = parse_block_key(key)?;
            let nrows = rows.len();
            let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
            if rows.iter().any(|r| r.len() != ncols) {
                return Err(Error::Dimension(format!("ragged rows in block {key}")));
            }
            let block = DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c]);
            blocks.push(((i, j), block));
        }
        Self::from_blocks(doc.shift_depth, doc.p, doc.m, blocks)
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
struct SupplyJson {
    #[serde(rename = "N")]
    shift_depth: usize,
    m: usize,
    p: usize,
    blocks: BTreeMap<String, Vec<Vec<f64>>>,
}

fn parse_block_key(key: &str) -> Result<(usize, usize)> {
    let mut parts = key.split(',');
    let parse = |s: Option<&str>| -> Option<usize> { s?.trim().parse().ok() };
    match (parse(parts.next()), parse(parts.next()), parts.next()) {
        (Some(i), Some(j), None) => Ok((i, j)),
        _ => Err(Error::InvalidArgument(format!(
            "bad block key {key:?}, expected \"i,j\""
        ))),
    }
}

fn upper_len(shift_depth: usize) -> usize {
    (shift_depth + 1) * (shift_depth + 2) / 2
}

/// Position of upper-triangle block `(i, j)`, `i <= j`, in row-major order.
fn upper_index(shift_depth: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j <= shift_depth);
    i * (shift_depth + 1) - i * (i + 1) / 2 + j
}

/// The shifted supply under which the oscillator fixture
/// `y(k+2) + y(k+1) + y(k) = u(k)` is dissipative: its value at `k` equals
/// the storage difference `V(k+1) - V(k)` with `V(k) = y^2(k+1) + y^2(k)`.
pub fn mass_spring_damper_shifted_supply() -> SupplyRate {
    let phi_00 = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 1.0]);
    let phi_10 = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 0.0]);
    let phi_11 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    SupplyRate::from_blocks(
        1,
        1,
        1,
        [((0, 0), phi_00), ((1, 0), phi_10), ((1, 1), phi_11)],
    )
    .expect("fixed blocks are valid")
}

/// The memoryless truncation of the same supply,
/// `w(y(k), u(k)) = u^2(k) - 2 y(k) u(k)`, under which the oscillator is not
/// dissipative.
pub fn mass_spring_damper_memoryless_supply() -> SupplyRate {
    let phi_00 = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 1.0]);
    SupplyRate::from_blocks(0, 1, 1, [((0, 0), phi_00)]).expect("fixed block is valid")
}
