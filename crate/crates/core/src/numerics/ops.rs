//! Differentiable primitives. Each `*_backward` maps the upstream gradient
//! `∂L/∂out` to gradients with respect to the inputs.

use super::matrix::Matrix;
use crate::error::{Error, Result};

#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.rows() {
        return Err(Error::Shape(format!(
            "matmul {:?} x {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut out = Matrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for k in 0..a.cols() {
            let aik = a.get(i, k);
            if aik == 0.0 {
                continue;
            }
            let brow = b.row(k);
            for (o, bkj) in out.row_mut(i).iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// Returns `(∂L/∂a, ∂L/∂b)` for `out = a b`.
pub fn matmul_backward(a: &Matrix, b: &Matrix, dout: &Matrix) -> Result<(Matrix, Matrix)> {
    if dout.shape() != (a.rows(), b.cols()) {
        return Err(Error::Shape("matmul_backward upstream gradient".into()));
    }
    let da = matmul(dout, &b.transpose())?;
    let db = matmul(&a.transpose(), dout)?;
    Ok((da, db))
}

pub fn add(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.check_same_shape(b, "add")?;
    let mut out = a.clone();
    out.add_scaled(b, 1.0);
    Ok(out)
}

pub fn add_backward(dout: &Matrix) -> (Matrix, Matrix) {
    (dout.clone(), dout.clone())
}

pub fn hadamard(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.check_same_shape(b, "hadamard")?;
    let data = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x * y)
        .collect();
    Matrix::from_vec(a.rows(), a.cols(), data)
}

pub fn hadamard_backward(a: &Matrix, b: &Matrix, dout: &Matrix) -> Result<(Matrix, Matrix)> {
    let da = hadamard(dout, b)?;
    let db = hadamard(dout, a)?;
    Ok((da, db))
}

fn map(a: &Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let data = a.as_slice().iter().map(|&x| f(x)).collect();
    Matrix::from_vec(a.rows(), a.cols(), data).expect("same shape")
}

pub fn sigmoid(a: &Matrix) -> Matrix {
    map(a, sigmoid_scalar)
}

/// Gradient of the sigmoid given its forward output `s`.
pub fn sigmoid_backward(s: &Matrix, dout: &Matrix) -> Result<Matrix> {
    s.check_same_shape(dout, "sigmoid_backward")?;
    let data = s
        .as_slice()
        .iter()
        .zip(dout.as_slice())
        .map(|(s, d)| d * s * (1.0 - s))
        .collect();
    Matrix::from_vec(s.rows(), s.cols(), data)
}

pub fn tanh(a: &Matrix) -> Matrix {
    map(a, f64::tanh)
}

/// Gradient of tanh given its forward output `t`.
pub fn tanh_backward(t: &Matrix, dout: &Matrix) -> Result<Matrix> {
    t.check_same_shape(dout, "tanh_backward")?;
    let data = t
        .as_slice()
        .iter()
        .zip(dout.as_slice())
        .map(|(t, d)| d * (1.0 - t * t))
        .collect();
    Matrix::from_vec(t.rows(), t.cols(), data)
}
