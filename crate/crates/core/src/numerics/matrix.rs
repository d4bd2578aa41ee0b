use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Column vector.
    pub fn column(values: &[f64]) -> Self {
        Matrix {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Matrix, scale: f64) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    /// Elementwise `self += v` over the flat storage.
    pub fn add_slice(&mut self, v: &[f64]) {
        debug_assert_eq!(self.data.len(), v.len());
        for (a, b) in self.data.iter_mut().zip(v) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub(crate) fn check_same_shape(&self, other: &Matrix, what: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "{what}: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }
}

/// `out = W x` for a row-major `W` (rows x cols) and `x` of length cols; accumulates into `out`.
#[inline]
pub fn gemv_acc(w: &Matrix, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.cols, x.len());
    debug_assert_eq!(w.rows, out.len());
    for (i, o) in out.iter_mut().enumerate() {
        let row = &w.data[i * w.cols..(i + 1) * w.cols];
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(x) {
            acc += a * b;
        }
        *o += acc;
    }
}

/// `out += Wᵀ y`.
#[inline]
pub fn gemv_t_acc(w: &Matrix, y: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.rows, y.len());
    debug_assert_eq!(w.cols, out.len());
    for (i, &yi) in y.iter().enumerate() {
        if yi == 0.0 {
            continue;
        }
        let row = &w.data[i * w.cols..(i + 1) * w.cols];
        for (o, a) in out.iter_mut().zip(row) {
            *o += a * yi;
        }
    }
}

/// `W += y xᵀ` (rank-one update).
#[inline]
pub fn ger_acc(w: &mut Matrix, y: &[f64], x: &[f64]) {
    debug_assert_eq!(w.rows, y.len());
    debug_assert_eq!(w.cols, x.len());
    let cols = w.cols;
    for (i, &yi) in y.iter().enumerate() {
        if yi == 0.0 {
            continue;
        }
        let row = &mut w.data[i * cols..(i + 1) * cols];
        for (a, b) in row.iter_mut().zip(x) {
            *a += yi * b;
        }
    }
}
