//! The one-shot measured data record and its rearrangements: manifest
//! (output-first) samples, shifted stacking, block-Hankel matrices and CSV
//! round-tripping.
//!
//! The manifest ordering convention — output block before input block inside
//! every `z(k)` — is owned by [`manifest_sample`] / [`split_manifest`] and the
//! two index-range helpers. Every other module routes through these, so the
//! convention cannot be introduced inconsistently twice.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};

/// Measured input-output record of one experiment. `u` and `y` always have
/// the same length; `origin` remembers where a snapshot was cut from its
/// parent record.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    u: Vec<DVector<f64>>,
    y: Vec<DVector<f64>>,
    origin: usize,
}

impl Trajectory {
    pub fn from_io(u: Vec<DVector<f64>>, y: Vec<DVector<f64>>) -> Result<Self> {
        Self::with_origin(u, y, 0)
    }

    pub fn with_origin(u: Vec<DVector<f64>>, y: Vec<DVector<f64>>, origin: usize) -> Result<Self> {
        if u.len() != y.len() {
            return Err(Error::Dimension(format!(
                "input has {} samples, output has {}",
                u.len(),
                y.len()
            )));
        }
        if u.is_empty() {
            return Err(Error::InvalidArgument("trajectory must be nonempty".into()));
        }
        let m = u[0].len();
        let p = y[0].len();
        if m == 0 || p == 0 {
            return Err(Error::Dimension("samples must have dimension >= 1".into()));
        }
        for k in 0..u.len() {
            if u[k].len() != m || y[k].len() != p {
                return Err(Error::Dimension(format!(
                    "ragged sample dimensions at index {k}"
                )));
            }
            if u[k].iter().chain(y[k].iter()).any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("trajectory samples"));
            }
        }
        Ok(Self { u, y, origin })
    }

    /// SISO convenience constructor from flat sample lists.
    pub fn from_scalar_io(u: &[f64], y: &[f64]) -> Result<Self> {
        Self::from_io(
            u.iter().map(|&x| DVector::from_element(1, x)).collect(),
            y.iter().map(|&x| DVector::from_element(1, x)).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }
    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
    /// Input dimension m.
    pub fn num_inputs(&self) -> usize {
        self.u[0].len()
    }
    /// Output dimension p.
    pub fn num_outputs(&self) -> usize {
        self.y[0].len()
    }
    pub fn origin(&self) -> usize {
        self.origin
    }
    pub fn input(&self, k: usize) -> &DVector<f64> {
        &self.u[k]
    }
    pub fn output(&self, k: usize) -> &DVector<f64> {
        &self.y[k]
    }
    pub fn inputs(&self) -> &[DVector<f64>] {
        &self.u
    }
    pub fn outputs(&self) -> &[DVector<f64>] {
        &self.y
    }

    /// Contiguous sub-record of `length` samples starting at `start`. The
    /// returned origin is the absolute index of the first retained sample.
    pub fn snapshot(&self, start: usize, length: usize) -> Result<Trajectory> {
        let end = start
            .checked_add(length)
            .ok_or_else(|| Error::InvalidArgument("snapshot window overflows".into()))?;
        if end > self.len() || length == 0 {
            return Err(Error::WindowOutOfRange {
                start,
                end,
                len: self.len(),
            });
        }
        Trajectory::with_origin(
            self.u[start..end].to_vec(),
            self.y[start..end].to_vec(),
            self.origin + start,
        )
    }

    /// Write the record as CSV (`k,u_1..u_m,y_1..y_p`) plus a JSON sidecar
    /// (`<path>.meta.json`) holding the dimensions and the origin.
    ///
    /// Numbers are printed with 17 significant digits so the round trip is
    /// bit exact.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut writer = csv::Writer::from_path(path).map_err(|e| Error::Csv(e.to_string()))?;
        let m = self.num_inputs();
        let p = self.num_outputs();
        let mut header = vec!["k".to_string()];
        header.extend((1..=m).map(|i| format!("u_{i}")));
        header.extend((1..=p).map(|i| format!("y_{i}")));
        writer
            .write_record(&header)
            .map_err(|e| Error::Csv(e.to_string()))?;
        for k in 0..self.len() {
            let mut record = vec![k.to_string()];
            record.extend(self.u[k].iter().map(|x| format!("{x:.16e}")));
            record.extend(self.y[k].iter().map(|x| format!("{x:.16e}")));
            writer
                .write_record(&record)
                .map_err(|e| Error::Csv(e.to_string()))?;
        }
        writer.flush()?;

        let sidecar = TrajectoryMeta {
            m,
            p,
            origin: self.origin,
        };
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    /// Read a record written by [`Trajectory::save_csv`]. The sidecar is
    /// optional; without it the dimensions come from the header and the
    /// origin defaults to zero.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Csv(e.to_string()))?;
        let header = reader
            .headers()
            .map_err(|e| Error::Csv(e.to_string()))?
            .clone();
        let fields: Vec<&str> = header.iter().collect();
        if fields.first() != Some(&"k") {
            return Err(Error::Csv("first column must be `k`".into()));
        }
        let m = fields.iter().filter(|f| f.starts_with("u_")).count();
        let p = fields.iter().filter(|f| f.starts_with("y_")).count();
        if m == 0 || p == 0 || fields.len() != 1 + m + p {
            return Err(Error::Csv("header must be k,u_1..u_m,y_1..y_p".into()));
        }
        for (i, want) in (1..=m).map(|i| (i, format!("u_{i}"))) {
            if fields[i] != want {
                return Err(Error::Csv(format!(
                    "expected column {want} at position {i}"
                )));
            }
        }
        for (i, want) in (1..=p).map(|i| (m + i, format!("y_{i}"))) {
            if fields[i] != want {
                return Err(Error::Csv(format!(
                    "expected column {want} at position {i}"
                )));
            }
        }

        let mut u = Vec::new();
        let mut y = Vec::new();
        for (row_idx, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Csv(e.to_string()))?;
            let k: usize = record
                .get(0)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Csv(format!("bad sample index in row {row_idx}")))?;
            if k != row_idx {
                return Err(Error::Csv(format!(
                    "sample index {k} out of order at row {row_idx}"
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| Error::Csv(format!("bad number {s:?} in row {row_idx}")))
            };
            let mut u_k = DVector::zeros(m);
            for i in 0..m {
                u_k[i] = parse(record.get(1 + i).unwrap_or(""))?;
            }
            let mut y_k = DVector::zeros(p);
            for i in 0..p {
                y_k[i] = parse(record.get(1 + m + i).unwrap_or(""))?;
            }
            u.push(u_k);
            y.push(y_k);
        }

        let mut origin = 0;
        let sidecar = sidecar_path(path);
        if sidecar.exists() {
            let meta: TrajectoryMeta = serde_json::from_str(&std::fs::read_to_string(sidecar)?)?;
            if meta.m != m || meta.p != p {
                return Err(Error::Csv(format!(
                    "sidecar dimensions ({}, {}) disagree with CSV header ({m}, {p})",
                    meta.m, meta.p
                )));
            }
            origin = meta.origin;
        }
        Trajectory::with_origin(u, y, origin)
    }
}

#[derive(Serialize, Deserialize)]
struct TrajectoryMeta {
    m: usize,
    p: usize,
    origin: usize,
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".meta.json");
    std::path::PathBuf::from(os)
}

/// Manifest sample `z(k) = [y(k); u(k)]` — output block first.
pub fn manifest_sample(y: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
    let mut z = DVector::zeros(y.len() + u.len());
    z.rows_mut(0, y.len()).copy_from(y);
    z.rows_mut(y.len(), u.len()).copy_from(u);
    z
}

/// Inverse of [`manifest_sample`].
pub fn split_manifest(z: &DVector<f64>, p: usize, m: usize) -> (DVector<f64>, DVector<f64>) {
    assert_eq!(z.len(), p + m, "manifest sample has wrong dimension");
    (z.rows(0, p).into_owned(), z.rows(p, m).into_owned())
}

/// Index range of the output block inside a manifest sample.
pub fn manifest_output_range(p: usize, _m: usize) -> Range<usize> {
    0..p
}

/// Index range of the input block inside a manifest sample.
pub fn manifest_input_range(p: usize, m: usize) -> Range<usize> {
    p..p + m
}

/// Rearrange a trajectory into the manifest sequence `z(0), ..., z(T-1)`.
pub fn interleave(traj: &Trajectory) -> Vec<DVector<f64>> {
    (0..traj.len())
        .map(|k| manifest_sample(traj.output(k), traj.input(k)))
        .collect()
}

/// A sequence of overlapping stacked windows `Z(k) = [z(k); ...; z(k+N)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedTrajectory {
    samples: Vec<DVector<f64>>,
    shift_depth: usize,
    base_dim: usize,
}

impl StackedTrajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
    /// Shift depth N.
    pub fn shift_depth(&self) -> usize {
        self.shift_depth
    }
    /// Dimension of one underlying sample `z(k)`.
    pub fn base_dim(&self) -> usize {
        self.base_dim
    }
    /// Dimension `(N+1) * base_dim` of one stacked sample.
    pub fn sample_dim(&self) -> usize {
        (self.shift_depth + 1) * self.base_dim
    }
    pub fn sample(&self, k: usize) -> &DVector<f64> {
        &self.samples[k]
    }
    pub fn samples(&self) -> &[DVector<f64>] {
        &self.samples
    }
}

/// Build the stacked sequence of depth `n_shift` over `source`; the result is
/// shorter by `n_shift` samples.
pub fn stack_shifted(source: &[DVector<f64>], n_shift: usize) -> Result<StackedTrajectory> {
    if source.len() < n_shift + 1 {
        return Err(Error::TooShort {
            what: "stacked trajectory source",
            requested: n_shift + 1,
            available: source.len(),
        });
    }
    let base_dim = source[0].len();
    if source.iter().any(|z| z.len() != base_dim) {
        return Err(Error::Dimension(
            "ragged sample dimensions in stack source".into(),
        ));
    }
    let count = source.len() - n_shift;
    let samples = (0..count)
        .map(|k| {
            let mut stacked = DVector::zeros((n_shift + 1) * base_dim);
            for i in 0..=n_shift {
                stacked
                    .rows_mut(i * base_dim, base_dim)
                    .copy_from(&source[k + i]);
            }
            stacked
        })
        .collect();
    Ok(StackedTrajectory {
        samples,
        shift_depth: n_shift,
        base_dim,
    })
}

/// Block-Hankel matrix with `block_rows` block rows; block `(i, j)` holds
/// sample `i + j` of the source sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockHankel {
    matrix: DMatrix<f64>,
    block_rows: usize,
    sample_dim: usize,
}

impl BlockHankel {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
    pub fn block_rows(&self) -> usize {
        self.block_rows
    }
    pub fn sample_dim(&self) -> usize {
        self.sample_dim
    }
    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

/// Hankel matrix of the sample sequence with `block_rows` block rows:
/// dimensions `(block_rows * s) x (T - block_rows + 1)`.
pub fn build_hankel(seq: &[DVector<f64>], block_rows: usize) -> Result<BlockHankel> {
    let t = seq.len();
    if block_rows == 0 {
        return Err(Error::InvalidArgument(
            "hankel needs at least one block row".into(),
        ));
    }
    if block_rows > t {
        return Err(Error::TooShort {
            what: "hankel block rows",
            requested: block_rows,
            available: t,
        });
    }
    let s = seq[0].len();
    if seq.iter().any(|e| e.len() != s) {
        return Err(Error::Dimension(
            "ragged sample dimensions in hankel source".into(),
        ));
    }
    let cols = t - block_rows + 1;
    let mut matrix = DMatrix::zeros(block_rows * s, cols);
    for j in 0..cols {
        for i in 0..block_rows {
            matrix.view_mut((i * s, j), (s, 1)).copy_from(&seq[i + j]);
        }
    }
    Ok(BlockHankel {
        matrix,
        block_rows,
        sample_dim: s,
    })
}
