//! Dense row-major matrices and the ordered parameter sets built from them.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A dense, row-major `f64` matrix. One layer's weights, a bias column or a
/// block of data; the unit that gets perturbed and updated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ParamMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { 1.0 } else { 0.0 })
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |r, c| if r == c { values[r] } else { 0.0 })
    }

    pub fn column(values: &[f64]) -> Self {
        Self { rows: values.len(), cols: 1, data: values.to_vec() }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `y = self * x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (r, out) in y.iter_mut().enumerate() {
            *out = self.row(r).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// Dense product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        gemm(
            Operand::new(&self.data, self.rows, self.cols),
            Operand::new(&other.data, other.rows, other.cols),
            0.0,
            &mut out.data,
        );
        Ok(out)
    }
}

/// A strided view over a row-major buffer, optionally transposed.
#[derive(Clone, Copy)]
pub(crate) struct Operand<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    rs: isize,
    cs: isize,
}

impl<'a> Operand<'a> {
    /// Row-major `rows x cols` view.
    pub(crate) fn new(data: &'a [f64], rows: usize, cols: usize) -> Self {
        assert!(data.len() >= rows * cols);
        Self { data, rows, cols, rs: cols as isize, cs: 1 }
    }

    /// Transpose of the row-major `rows x cols` buffer, i.e. a `cols x rows` view.
    pub(crate) fn transposed(data: &'a [f64], rows: usize, cols: usize) -> Self {
        assert!(data.len() >= rows * cols);
        Self { data, rows: cols, cols: rows, rs: 1, cs: cols as isize }
    }
}

/// `c = a * b + beta * c` with `c` row-major of shape `a.rows x b.cols`.
pub(crate) fn gemm(a: Operand<'_>, b: Operand<'_>, beta: f64, c: &mut [f64]) {
    assert_eq!(a.cols, b.rows, "inner dimensions differ");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the asserts above and in `Operand` constructors guarantee every
    // strided index stays inside the borrowed slices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            a.rs,
            a.cs,
            b.data.as_ptr(),
            b.rs,
            b.cs,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// What a parameter matrix is for. Exactly one `Recurrent` matrix per RNN.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamRole {
    Weight,
    Bias,
    Recurrent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub role: ParamRole,
    pub value: ParamMatrix,
}

/// Ordered list of parameter matrices. Index `l` is "layer `l`" for the
/// per-layer learning rates of the perturbation optimizers.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamSet {
    params: Vec<Param>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, role: ParamRole, value: ParamMatrix) {
        self.params.push(Param { name: name.into(), role, value });
    }

    /// A single unnamed weight matrix, handy for toy objectives.
    pub fn single(value: ParamMatrix) -> Self {
        let mut set = Self::new();
        set.push("theta", ParamRole::Weight, value);
        set
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Param> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> std::slice::IterMut<'_, Param> {
        self.params.iter_mut()
    }

    pub fn matrix(&self, i: usize) -> &ParamMatrix {
        &self.params[i].value
    }

    pub fn matrix_mut(&mut self, i: usize) -> &mut ParamMatrix {
        &mut self.params[i].value
    }

    pub fn param(&self, i: usize) -> &Param {
        &self.params[i]
    }

    pub fn recurrent_index(&self) -> Option<usize> {
        self.params.iter().position(|p| p.role == ParamRole::Recurrent)
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.params.iter().map(|p| p.value.shape()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.value.is_finite())
    }

    /// All scalars, concatenated in order.
    pub fn flatten(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.value.as_slice().iter().copied()).collect()
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_scalars() {
            return Err(Error::Shape(format!(
                "{} values for {} parameters",
                values.len(),
                self.num_scalars()
            )));
        }
        let mut offset = 0;
        for p in &mut self.params {
            let n = p.value.len();
            p.value.as_mut_slice().copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// Hex SHA-256 of every scalar's little-endian bytes, in order.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for p in &self.params {
            for v in p.value.as_slice() {
                hasher.update(v.to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }

    pub fn same_shapes(&self, other: &[(usize, usize)]) -> bool {
        self.params.len() == other.len()
            && self.params.iter().zip(other).all(|(p, s)| p.value.shape() == *s)
    }
}

impl std::ops::Index<usize> for ParamSet {
    type Output = ParamMatrix;
    fn index(&self, i: usize) -> &ParamMatrix {
        &self.params[i].value
    }
}

impl std::ops::IndexMut<usize> for ParamSet {
    fn index_mut(&mut self, i: usize) -> &mut ParamMatrix {
        &mut self.params[i].value
    }
}
