//! Dense row-major `f64` tensors and the plain (untaped) math kernels.

use thiserror::Error;

/// Errors raised by tensor construction, the math kernels, and the tape.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("{op}: dimension mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: expected {expected}, got shape {got:?}")]
    BadShape {
        op: &'static str,
        expected: &'static str,
        got: Vec<usize>,
    },
    #[error("tensor data length {len} does not match shape {shape:?}")]
    LengthMismatch { shape: Vec<usize>, len: usize },
    #[error("{op}: empty input")]
    EmptyInput { op: &'static str },
    #[error("{context}: non-finite value")]
    NonFinite { context: String },
    #[error("{0}")]
    Domain(String),
}

pub type NumericResult<T> = Result<T, NumericError>;

/// Dense tensor: positive extents, row-major `f64` storage.
///
/// Rank 0 (`shape == []`) is a scalar. Completed operations never leave
/// NaN/Inf in `data`; the tape enforces this after every recorded op.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> NumericResult<Self> {
        if shape.contains(&0) {
            return Err(NumericError::BadShape {
                op: "Tensor::new",
                expected: "positive extents",
                got: shape,
            });
        }
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(NumericError::LengthMismatch {
                shape,
                len: data.len(),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let numel: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; numel],
        }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor {
            shape: Vec::new(),
            data: vec![v],
        }
    }

    pub fn vector(data: Vec<f64>) -> NumericResult<Self> {
        if data.is_empty() {
            return Err(NumericError::EmptyInput { op: "Tensor::vector" });
        }
        let n = data.len();
        Tensor::new(vec![n], data)
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> NumericResult<Self> {
        Tensor::new(vec![rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.shape.is_empty()
    }

    pub fn is_vector(&self) -> bool {
        self.shape.len() == 1
    }

    pub fn is_matrix(&self) -> bool {
        self.shape.len() == 2
    }

    /// Value of a rank-0 tensor.
    pub fn scalar_value(&self) -> NumericResult<f64> {
        if self.is_scalar() {
            Ok(self.data[0])
        } else {
            Err(NumericError::BadShape {
                op: "scalar_value",
                expected: "rank-0 scalar",
                got: self.shape.clone(),
            })
        }
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn get2(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.shape[1] + j]
    }

    pub fn set2(&mut self, i: usize, j: usize, v: f64) {
        let cols = self.shape[1];
        self.data[i * cols + j] = v;
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

// Plain kernels. These compute forward values only; the tape wraps them
// for recording and adds the backward rules.

pub fn matmul(a: &Tensor, b: &Tensor) -> NumericResult<Tensor> {
    if !a.is_matrix() || !b.is_matrix() || a.cols() != b.rows() {
        return Err(NumericError::ShapeMismatch {
            op: "matmul",
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let aip = a.data[i * k + p];
            for j in 0..n {
                out[i * n + j] += aip * b.data[p * n + j];
            }
        }
    }
    Tensor::matrix(m, n, out)
}

pub fn matvec(a: &Tensor, x: &Tensor) -> NumericResult<Tensor> {
    if !a.is_matrix() || !x.is_vector() || a.cols() != x.numel() {
        return Err(NumericError::ShapeMismatch {
            op: "matvec",
            lhs: a.shape().to_vec(),
            rhs: x.shape().to_vec(),
        });
    }
    let (m, k) = (a.rows(), a.cols());
    let mut out = vec![0.0; m];
    for i in 0..m {
        let mut acc = 0.0;
        for p in 0..k {
            acc += a.data[i * k + p] * x.data[p];
        }
        out[i] = acc;
    }
    Tensor::vector(out)
}

pub fn dot(u: &Tensor, v: &Tensor) -> NumericResult<f64> {
    if !u.is_vector() || !v.is_vector() || u.numel() != v.numel() {
        return Err(NumericError::ShapeMismatch {
            op: "dot",
            lhs: u.shape().to_vec(),
            rhs: v.shape().to_vec(),
        });
    }
    Ok(u.data.iter().zip(&v.data).map(|(a, b)| a * b).sum())
}

/// Numerically stable softmax over a slice: max-subtraction before exp.
pub fn softmax_slice(logits: &[f64]) -> NumericResult<Vec<f64>> {
    if logits.is_empty() {
        return Err(NumericError::EmptyInput { op: "softmax" });
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(NumericError::NonFinite {
            context: "softmax input".to_string(),
        });
    }
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.iter().map(|&e| e / sum).collect())
}

pub(crate) fn zip_map(a: &Tensor, b: &Tensor, op: &'static str, f: impl Fn(f64, f64) -> f64) -> NumericResult<Tensor> {
    if a.shape() != b.shape() {
        return Err(NumericError::ShapeMismatch {
            op,
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    let data = a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect();
    Ok(Tensor {
        shape: a.shape.clone(),
        data,
    })
}

pub(crate) fn map(a: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor {
        shape: a.shape.clone(),
        data: a.data.iter().map(|&x| f(x)).collect(),
    }
}
