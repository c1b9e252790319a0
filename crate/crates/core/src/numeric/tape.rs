//! Wengert-list reverse-mode differentiation over dense tensors.
//!
//! Every primitive records one node: operand indices, the forward value, and
//! enough to replay a local backward rule. Nodes are appended in evaluation
//! order, so the list is always topologically sorted and the backward pass is
//! a single reverse sweep. Gradient accumulation follows tape order, which
//! makes gradients bit-deterministic for identical inputs.

use super::tensor::{self, NumericError, NumericResult, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul,
    MatVec,
    Dot,
    Add,
    Sub,
    Mul,
    /// Multiply every entry by a fixed (non-differentiated) scalar.
    ScaleConst(f64),
    /// inputs: [tensor, scalar node]; output tensor * scalar.
    MulScalar,
    Sum,
    Softmax,
    Concat,
    /// n scalar inputs stacked into a vector.
    Stack,
    /// Extract element `at` of a vector as a scalar.
    Index(usize),
    /// Extract row `row` of a matrix as a vector.
    Row(usize),
    Tanh,
    Sigmoid,
    Sin,
    Cos,
    /// inputs: [a, b] of equal length n; output[2k] = a[k], output[2k+1] = b[k].
    Interleave,
    /// Binary cross-entropy with logits against a fixed 0/1 target.
    BceWithLogits(f64),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    inputs: Vec<usize>,
    value: Tensor,
    param: bool,
}

/// Recorded forward computation. One tape per forward/backward pair;
/// `reset` reuses the allocation for the next sample.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Per-node gradients produced by [`Tape::backward`], indexed by `VarId`.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Tensor>,
}

impl Gradients {
    pub fn get(&self, v: VarId) -> &Tensor {
        &self.grads[v.0]
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drop all nodes but keep the allocation.
    pub fn reset(&mut self) {
        self.nodes.clear();
    }

    pub fn value(&self, v: VarId) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Register a trainable leaf.
    pub fn param(&mut self, t: Tensor) -> VarId {
        self.push_leaf(t, true)
    }

    /// Register a non-trainable leaf (data, fixed features).
    pub fn constant(&mut self, t: Tensor) -> VarId {
        self.push_leaf(t, false)
    }

    pub fn scalar_const(&mut self, v: f64) -> VarId {
        self.constant(Tensor::scalar(v))
    }

    fn push_leaf(&mut self, t: Tensor, param: bool) -> VarId {
        self.nodes.push(Node {
            op: Op::Leaf,
            inputs: Vec::new(),
            value: t,
            param,
        });
        VarId(self.nodes.len() - 1)
    }

    fn push(&mut self, op: Op, inputs: Vec<usize>, value: Tensor, context: &'static str) -> NumericResult<VarId> {
        if !value.all_finite() {
            return Err(NumericError::NonFinite {
                context: context.to_string(),
            });
        }
        self.nodes.push(Node {
            op,
            inputs,
            value,
            param: false,
        });
        Ok(VarId(self.nodes.len() - 1))
    }

    pub fn matmul(&mut self, a: VarId, b: VarId) -> NumericResult<VarId> {
        let value = tensor::matmul(self.value(a), self.value(b))?;
        self.push(Op::MatMul, vec![a.0, b.0], value, "matmul")
    }

    pub fn matvec(&mut self, a: VarId, x: VarId) -> NumericResult<VarId> {
        let value = tensor::matvec(self.value(a), self.value(x))?;
        self.push(Op::MatVec, vec![a.0, x.0], value, "matvec")
    }

    pub fn dot(&mut self, u: VarId, v: VarId) -> NumericResult<VarId> {
        let value = Tensor::scalar(tensor::dot(self.value(u), self.value(v))?);
        self.push(Op::Dot, vec![u.0, v.0], value, "dot")
    }

    pub fn add(&mut self, a: VarId, b: VarId) -> NumericResult<VarId> {
        let value = tensor::zip_map(self.value(a), self.value(b), "add", |x, y| x + y)?;
        self.push(Op::Add, vec![a.0, b.0], value, "add")
    }

    pub fn sub(&mut self, a: VarId, b: VarId) -> NumericResult<VarId> {
        let value = tensor::zip_map(self.value(a), self.value(b), "sub", |x, y| x - y)?;
        self.push(Op::Sub, vec![a.0, b.0], value, "sub")
    }

    pub fn mul(&mut self, a: VarId, b: VarId) -> NumericResult<VarId> {
        let value = tensor::zip_map(self.value(a), self.value(b), "mul", |x, y| x * y)?;
        self.push(Op::Mul, vec![a.0, b.0], value, "mul")
    }

    pub fn scale(&mut self, a: VarId, c: f64) -> NumericResult<VarId> {
        let value = tensor::map(self.value(a), |x| x * c);
        self.push(Op::ScaleConst(c), vec![a.0], value, "scale")
    }

    /// Tensor times a scalar node. Differentiates through both operands.
    pub fn mul_scalar(&mut self, a: VarId, s: VarId) -> NumericResult<VarId> {
        let sv = self.value(s).scalar_value()?;
        let value = tensor::map(self.value(a), |x| x * sv);
        self.push(Op::MulScalar, vec![a.0, s.0], value, "mul_scalar")
    }

    pub fn sum(&mut self, a: VarId) -> NumericResult<VarId> {
        let value = Tensor::scalar(self.value(a).data().iter().sum());
        self.push(Op::Sum, vec![a.0], value, "sum")
    }

    pub fn softmax(&mut self, a: VarId) -> NumericResult<VarId> {
        let v = self.value(a);
        if !v.is_vector() {
            return Err(NumericError::BadShape {
                op: "softmax",
                expected: "rank-1 vector",
                got: v.shape().to_vec(),
            });
        }
        let out = tensor::softmax_slice(v.data())?;
        let value = Tensor::vector(out)?;
        self.push(Op::Softmax, vec![a.0], value, "softmax")
    }

    pub fn concat(&mut self, a: VarId, b: VarId) -> NumericResult<VarId> {
        let (va, vb) = (self.value(a), self.value(b));
        if !va.is_vector() || !vb.is_vector() {
            return Err(NumericError::ShapeMismatch {
                op: "concat",
                lhs: va.shape().to_vec(),
                rhs: vb.shape().to_vec(),
            });
        }
        let mut data = va.data().to_vec();
        data.extend_from_slice(vb.data());
        let value = Tensor::vector(data)?;
        self.push(Op::Concat, vec![a.0, b.0], value, "concat")
    }

    /// Stack scalar nodes into a vector.
    pub fn stack(&mut self, items: &[VarId]) -> NumericResult<VarId> {
        if items.is_empty() {
            return Err(NumericError::EmptyInput { op: "stack" });
        }
        let mut data = Vec::with_capacity(items.len());
        for &it in items {
            data.push(self.value(it).scalar_value()?);
        }
        let value = Tensor::vector(data)?;
        self.push(Op::Stack, items.iter().map(|v| v.0).collect(), value, "stack")
    }

    pub fn index(&mut self, a: VarId, at: usize) -> NumericResult<VarId> {
        let v = self.value(a);
        if !v.is_vector() || at >= v.numel() {
            return Err(NumericError::BadShape {
                op: "index",
                expected: "vector with index in range",
                got: v.shape().to_vec(),
            });
        }
        let value = Tensor::scalar(v.data()[at]);
        self.push(Op::Index(at), vec![a.0], value, "index")
    }

    pub fn row(&mut self, a: VarId, row: usize) -> NumericResult<VarId> {
        let v = self.value(a);
        if !v.is_matrix() || row >= v.rows() {
            return Err(NumericError::BadShape {
                op: "row",
                expected: "matrix with row in range",
                got: v.shape().to_vec(),
            });
        }
        let cols = v.cols();
        let value = Tensor::vector(v.data()[row * cols..(row + 1) * cols].to_vec())?;
        self.push(Op::Row(row), vec![a.0], value, "row")
    }

    pub fn tanh(&mut self, a: VarId) -> NumericResult<VarId> {
        let value = tensor::map(self.value(a), f64::tanh);
        self.push(Op::Tanh, vec![a.0], value, "tanh")
    }

    pub fn sigmoid(&mut self, a: VarId) -> NumericResult<VarId> {
        let value = tensor::map(self.value(a), sigmoid);
        self.push(Op::Sigmoid, vec![a.0], value, "sigmoid")
    }

    pub fn sin(&mut self, a: VarId) -> NumericResult<VarId> {
        let value = tensor::map(self.value(a), f64::sin);
        self.push(Op::Sin, vec![a.0], value, "sin")
    }

    pub fn cos(&mut self, a: VarId) -> NumericResult<VarId> {
        let value = tensor::map(self.value(a), f64::cos);
        self.push(Op::Cos, vec![a.0], value, "cos")
    }

    pub fn interleave(&mut self, a: VarId, b: VarId) -> NumericResult<VarId> {
        let (va, vb) = (self.value(a), self.value(b));
        if !va.is_vector() || !vb.is_vector() || va.numel() != vb.numel() {
            return Err(NumericError::ShapeMismatch {
                op: "interleave",
                lhs: va.shape().to_vec(),
                rhs: vb.shape().to_vec(),
            });
        }
        let n = va.numel();
        let mut data = vec![0.0; 2 * n];
        for k in 0..n {
            data[2 * k] = va.data()[k];
            data[2 * k + 1] = vb.data()[k];
        }
        let value = Tensor::vector(data)?;
        self.push(Op::Interleave, vec![a.0, b.0], value, "interleave")
    }

    /// Stable binary cross-entropy with logits:
    /// `max(z,0) - z*t + ln(1 + exp(-|z|))`.
    pub fn bce_with_logits(&mut self, z: VarId, target: f64) -> NumericResult<VarId> {
        let zv = self.value(z).scalar_value()?;
        let loss = zv.max(0.0) - zv * target + (-zv.abs()).exp().ln_1p();
        let value = Tensor::scalar(loss);
        self.push(Op::BceWithLogits(target), vec![z.0], value, "bce_with_logits")
    }

    /// Reverse sweep from a scalar loss. Returns gradients for every node;
    /// leaves registered via [`Tape::param`] are the usual consumers.
    pub fn backward(&self, loss: VarId) -> NumericResult<Gradients> {
        let loss_node = &self.nodes[loss.0];
        if !loss_node.value.is_scalar() {
            return Err(NumericError::BadShape {
                op: "backward",
                expected: "rank-0 scalar loss",
                got: loss_node.value.shape().to_vec(),
            });
        }
        let mut grads: Vec<Tensor> = self
            .nodes
            .iter()
            .map(|n| Tensor::zeros(n.value.shape()))
            .collect();
        grads[loss.0].data_mut()[0] = 1.0;

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            // Take this node's gradient out to appease the borrow checker while
            // scattering into operand slots.
            let g = std::mem::replace(&mut grads[idx], Tensor::zeros(&[]));
            self.accumulate(node, &g, &mut grads);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, node: &Node, g: &Tensor, grads: &mut [Tensor]) {
        let inputs = &node.inputs;
        match node.op {
            Op::Leaf => {}
            Op::MatMul => {
                // C = A B: dA += G B^T, dB += A^T G
                let a = &self.nodes[inputs[0]].value;
                let b = &self.nodes[inputs[1]].value;
                let (m, k, n) = (a.rows(), a.cols(), b.cols());
                {
                    let da = grads[inputs[0]].data_mut();
                    for i in 0..m {
                        for p in 0..k {
                            let mut acc = 0.0;
                            for j in 0..n {
                                acc += g.data()[i * n + j] * b.data()[p * n + j];
                            }
                            da[i * k + p] += acc;
                        }
                    }
                }
                {
                    let db = grads[inputs[1]].data_mut();
                    for p in 0..k {
                        for j in 0..n {
                            let mut acc = 0.0;
                            for i in 0..m {
                                acc += a.data()[i * k + p] * g.data()[i * n + j];
                            }
                            db[p * n + j] += acc;
                        }
                    }
                }
            }
            Op::MatVec => {
                // y = A x: dA += g outer x, dx += A^T g
                let a = &self.nodes[inputs[0]].value;
                let x = &self.nodes[inputs[1]].value;
                let (m, k) = (a.rows(), a.cols());
                {
                    let da = grads[inputs[0]].data_mut();
                    for i in 0..m {
                        for p in 0..k {
                            da[i * k + p] += g.data()[i] * x.data()[p];
                        }
                    }
                }
                {
                    let dx = grads[inputs[1]].data_mut();
                    for p in 0..k {
                        let mut acc = 0.0;
                        for i in 0..m {
                            acc += a.data()[i * k + p] * g.data()[i];
                        }
                        dx[p] += acc;
                    }
                }
            }
            Op::Dot => {
                let u = &self.nodes[inputs[0]].value;
                let v = &self.nodes[inputs[1]].value;
                let gs = g.data()[0];
                for (du, vv) in grads[inputs[0]].data_mut().iter_mut().zip(v.data()) {
                    *du += gs * vv;
                }
                for (dv, uu) in grads[inputs[1]].data_mut().iter_mut().zip(u.data()) {
                    *dv += gs * uu;
                }
            }
            Op::Add => {
                for (d, gv) in grads[inputs[0]].data_mut().iter_mut().zip(g.data()) {
                    *d += gv;
                }
                for (d, gv) in grads[inputs[1]].data_mut().iter_mut().zip(g.data()) {
                    *d += gv;
                }
            }
            Op::Sub => {
                for (d, gv) in grads[inputs[0]].data_mut().iter_mut().zip(g.data()) {
                    *d += gv;
                }
                for (d, gv) in grads[inputs[1]].data_mut().iter_mut().zip(g.data()) {
                    *d -= gv;
                }
            }
            Op::Mul => {
                let a = self.nodes[inputs[0]].value.data().to_vec();
                let b = self.nodes[inputs[1]].value.data().to_vec();
                for ((d, gv), bv) in grads[inputs[0]].data_mut().iter_mut().zip(g.data()).zip(&b) {
                    *d += gv * bv;
                }
                for ((d, gv), av) in grads[inputs[1]].data_mut().iter_mut().zip(g.data()).zip(&a) {
                    *d += gv * av;
                }
            }
            Op::ScaleConst(c) => {
                for (d, gv) in grads[inputs[0]].data_mut().iter_mut().zip(g.data()) {
                    *d += gv * c;
                }
            }
            Op::MulScalar => {
                let a = &self.nodes[inputs[0]].value;
                let s = self.nodes[inputs[1]].value.data()[0];
                let mut ds = 0.0;
                for (av, gv) in a.data().iter().zip(g.data()) {
                    ds += av * gv;
                }
                for (d, gv) in grads[inputs[0]].data_mut().iter_mut().zip(g.data()) {
                    *d += gv * s;
                }
                grads[inputs[1]].data_mut()[0] += ds;
            }
            Op::Sum => {
                let gs = g.data()[0];
                for d in grads[inputs[0]].data_mut() {
                    *d += gs;
                }
            }
            Op::Softmax => {
                // y = softmax(x): dx_i = y_i (g_i - sum_j g_j y_j)
                let y = &node.value;
                let inner: f64 = g.data().iter().zip(y.data()).map(|(gv, yv)| gv * yv).sum();
                for ((d, yv), gv) in grads[inputs[0]]
                    .data_mut()
                    .iter_mut()
                    .zip(y.data())
                    .zip(g.data())
                {
                    *d += yv * (gv - inner);
                }
            }
            Op::Concat => {
                let na = self.nodes[inputs[0]].value.numel();
                for (d, gv) in grads[inputs[0]].data_mut().iter_mut().zip(&g.data()[..na]) {
                    *d += gv;
                }
                for (d, gv) in grads[inputs[1]].data_mut().iter_mut().zip(&g.data()[na..]) {
                    *d += gv;
                }
            }
            Op::Stack => {
                for (slot, &input) in inputs.iter().enumerate() {
                    grads[input].data_mut()[0] += g.data()[slot];
                }
            }
            Op::Index(at) => {
                grads[inputs[0]].data_mut()[at] += g.data()[0];
            }
            Op::Row(row) => {
                let cols = self.nodes[inputs[0]].value.cols();
                let d = grads[inputs[0]].data_mut();
                for j in 0..cols {
                    d[row * cols + j] += g.data()[j];
                }
            }
            Op::Tanh => {
                let y = &node.value;
                for ((d, yv), gv) in grads[inputs[0]]
                    .data_mut()
                    .iter_mut()
                    .zip(y.data())
                    .zip(g.data())
                {
                    *d += gv * (1.0 - yv * yv);
                }
            }
            Op::Sigmoid => {
                let y = &node.value;
                for ((d, yv), gv) in grads[inputs[0]]
                    .data_mut()
                    .iter_mut()
                    .zip(y.data())
                    .zip(g.data())
                {
                    *d += gv * yv * (1.0 - yv);
                }
            }
            Op::Sin => {
                let x = &self.nodes[inputs[0]].value;
                for ((d, xv), gv) in grads[inputs[0]]
                    .data_mut()
                    .iter_mut()
                    .zip(x.data().to_vec())
                    .zip(g.data())
                {
                    *d += gv * xv.cos();
                }
            }
            Op::Cos => {
                let x = &self.nodes[inputs[0]].value;
                for ((d, xv), gv) in grads[inputs[0]]
                    .data_mut()
                    .iter_mut()
                    .zip(x.data().to_vec())
                    .zip(g.data())
                {
                    *d -= gv * xv.sin();
                }
            }
            Op::Interleave => {
                let n = self.nodes[inputs[0]].value.numel();
                for k in 0..n {
                    grads[inputs[0]].data_mut()[k] += g.data()[2 * k];
                }
                for k in 0..n {
                    grads[inputs[1]].data_mut()[k] += g.data()[2 * k + 1];
                }
            }
            Op::BceWithLogits(target) => {
                let z = self.nodes[inputs[0]].value.data()[0];
                grads[inputs[0]].data_mut()[0] += g.data()[0] * (sigmoid(z) - target);
            }
        }
    }

    /// True when the node was registered as a trainable parameter.
    pub fn is_param(&self, v: VarId) -> bool {
        self.nodes[v.0].param
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Central-difference gradient oracle: `(f(x + h e_i) - f(x - h e_i)) / 2h`
/// per coordinate. Independent of the tape; used to cross-check `backward`.
pub fn finite_diff_grad<F>(mut f: F, x: &Tensor, step: f64) -> NumericResult<Tensor>
where
    F: FnMut(&Tensor) -> NumericResult<f64>,
{
    if step <= 0.0 {
        return Err(NumericError::Domain(format!(
            "finite_diff_grad: step must be positive, got {step}"
        )));
    }
    let mut grad = Tensor::zeros(x.shape());
    let mut probe = x.clone();
    for i in 0..x.numel() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + step;
        let fp = f(&probe)?;
        probe.data_mut()[i] = orig - step;
        let fm = f(&probe)?;
        probe.data_mut()[i] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(NumericError::NonFinite {
                context: "finite_diff_grad: objective evaluation".to_string(),
            });
        }
        grad.data_mut()[i] = (fp - fm) / (2.0 * step);
    }
    Ok(grad)
}

/// Relative error with a small absolute floor so exact zeros compare cleanly.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let denom = a.abs().max(b.abs()).max(1e-6);
    (a - b).abs() / denom
}
