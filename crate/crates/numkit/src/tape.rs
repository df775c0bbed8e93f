//! Reverse-mode automatic differentiation over a flat operation tape.
//!
//! A [`Tape`] records every primitive op in issue order, so node inputs always
//! precede the node itself and a single reverse sweep visits each node exactly
//! once. Every op validates shapes up front and rejects non-finite outputs:
//! NaN/Inf never propagates silently.

use crate::error::{NumkitError, Result};
use crate::tensor::Tensor;

/// Handle to a value recorded on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ValueId(pub(crate) usize);

/// Primitive operations supported by the tape.
///
/// Elementwise binaries broadcast only over a leading batch dimension: the
/// right operand must either match the left shape exactly, be a scalar, or
/// match the trailing dimensions of the left operand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Matmul,
    Add,
    Subtract,
    Multiply,
    Relu,
    Sigmoid,
    Exp,
    Log,
    Square,
    Sum,
    Mean,
    Concat,
}

impl OpKind {
    fn arity(self) -> usize {
        match self {
            OpKind::Matmul
            | OpKind::Add
            | OpKind::Subtract
            | OpKind::Multiply
            | OpKind::Concat => 2,
            _ => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            OpKind::Matmul => "matmul",
            OpKind::Add => "add",
            OpKind::Subtract => "subtract",
            OpKind::Multiply => "multiply",
            OpKind::Relu => "relu",
            OpKind::Sigmoid => "sigmoid",
            OpKind::Exp => "exp",
            OpKind::Log => "log",
            OpKind::Square => "square",
            OpKind::Sum => "sum",
            OpKind::Mean => "mean",
            OpKind::Concat => "concat",
        }
    }
}

enum Node {
    Leaf,
    Op { op: OpKind, inputs: [ValueId; 2] },
}

/// Ordered record of primitive ops with their input values.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    values: Vec<Tensor>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    /// Record an input value (parameter or data constant).
    pub fn leaf(&mut self, value: Tensor) -> ValueId {
        self.push(Node::Leaf, value)
    }

    pub fn constant(&mut self, value: f64) -> ValueId {
        self.leaf(Tensor::scalar(value))
    }

    pub fn value(&self, id: ValueId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, node: Node, value: Tensor) -> ValueId {
        self.nodes.push(node);
        self.values.push(value);
        ValueId(self.values.len() - 1)
    }

    /// Apply `op` to recorded inputs, record the result, and return its id.
    pub fn apply(&mut self, op: OpKind, inputs: &[ValueId]) -> Result<ValueId> {
        if inputs.len() != op.arity() {
            return Err(NumkitError::ArityMismatch {
                op: op.name(),
                expected: op.arity(),
                got: inputs.len(),
            });
        }
        let out = match op {
            OpKind::Matmul => matmul(self.value(inputs[0]), self.value(inputs[1]))?,
            OpKind::Add => broadcast_binary(op, self.value(inputs[0]), self.value(inputs[1]))?,
            OpKind::Subtract => broadcast_binary(op, self.value(inputs[0]), self.value(inputs[1]))?,
            OpKind::Multiply => broadcast_binary(op, self.value(inputs[0]), self.value(inputs[1]))?,
            OpKind::Relu => self.value(inputs[0]).map(|v| v.max(0.0)),
            OpKind::Sigmoid => self.value(inputs[0]).map(sigmoid),
            OpKind::Exp => self.value(inputs[0]).map(f64::exp),
            OpKind::Log => {
                let x = self.value(inputs[0]);
                if let Some(&bad) = x.data().iter().find(|v| **v <= 0.0) {
                    return Err(NumkitError::DomainViolation {
                        op: "log",
                        value: bad,
                    });
                }
                x.map(f64::ln)
            }
            OpKind::Square => self.value(inputs[0]).map(|v| v * v),
            OpKind::Sum => Tensor::scalar(self.value(inputs[0]).data().iter().sum()),
            OpKind::Mean => {
                let x = self.value(inputs[0]);
                Tensor::scalar(x.data().iter().sum::<f64>() / x.len() as f64)
            }
            OpKind::Concat => concat(self.value(inputs[0]), self.value(inputs[1]))?,
        };
        if !out.all_finite() {
            return Err(NumkitError::NonFinite { op: op.name() });
        }
        let stored = [inputs[0], *inputs.get(1).unwrap_or(&inputs[0])];
        Ok(self.push(
            Node::Op {
                op,
                inputs: stored,
            },
            out,
        ))
    }

    pub fn matmul(&mut self, a: ValueId, b: ValueId) -> Result<ValueId> {
        self.apply(OpKind::Matmul, &[a, b])
    }
    pub fn add(&mut self, a: ValueId, b: ValueId) -> Result<ValueId> {
        self.apply(OpKind::Add, &[a, b])
    }
    pub fn sub(&mut self, a: ValueId, b: ValueId) -> Result<ValueId> {
        self.apply(OpKind::Subtract, &[a, b])
    }
    pub fn mul(&mut self, a: ValueId, b: ValueId) -> Result<ValueId> {
        self.apply(OpKind::Multiply, &[a, b])
    }
    pub fn relu(&mut self, a: ValueId) -> Result<ValueId> {
        self.apply(OpKind::Relu, &[a])
    }
    pub fn sigmoid(&mut self, a: ValueId) -> Result<ValueId> {
        self.apply(OpKind::Sigmoid, &[a])
    }
    pub fn exp(&mut self, a: ValueId) -> Result<ValueId> {
        self.apply(OpKind::Exp, &[a])
    }
    pub fn log(&mut self, a: ValueId) -> Result<ValueId> {
        self.apply(OpKind::Log, &[a])
    }
    pub fn square(&mut self, a: ValueId) -> Result<ValueId> {
        self.apply(OpKind::Square, &[a])
    }
    pub fn sum(&mut self, a: ValueId) -> Result<ValueId> {
        self.apply(OpKind::Sum, &[a])
    }
    pub fn mean(&mut self, a: ValueId) -> Result<ValueId> {
        self.apply(OpKind::Mean, &[a])
    }
    pub fn concat(&mut self, a: ValueId, b: ValueId) -> Result<ValueId> {
        self.apply(OpKind::Concat, &[a, b])
    }

    /// Scale a value by a compile-time constant.
    pub fn scale(&mut self, a: ValueId, factor: f64) -> Result<ValueId> {
        let c = self.constant(factor);
        self.mul(a, c)
    }

    /// Add a constant offset to a value.
    pub fn offset(&mut self, a: ValueId, offset: f64) -> Result<ValueId> {
        let c = self.constant(offset);
        self.add(a, c)
    }

    /// Reverse sweep from a scalar loss. Returns per-value gradients; leaves
    /// not reached by the loss get zero gradients of their own shape.
    pub fn backward(&self, loss: ValueId) -> Result<Gradients> {
        let loss_value = self.value(loss);
        if !loss_value.is_scalar() {
            return Err(NumkitError::NonScalarLoss {
                shape: loss_value.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.values.len()];
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let Some(out_grad) = grads[idx].take() else {
                continue;
            };
            if let Node::Op { op, inputs } = &self.nodes[idx] {
                self.accumulate(*op, *inputs, idx, &out_grad, &mut grads);
            }
            grads[idx] = Some(out_grad);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(
        &self,
        op: OpKind,
        inputs: [ValueId; 2],
        out_idx: usize,
        out_grad: &Tensor,
        grads: &mut [Option<Tensor>],
    ) {
        let a = inputs[0];
        let b = inputs[1];
        match op {
            OpKind::Matmul => {
                let va = &self.values[a.0];
                let vb = &self.values[b.0];
                // dL/dA = G . B^T, dL/dB = A^T . G
                add_into(grads, a, matmul_nt(out_grad, vb));
                add_into(grads, b, matmul_tn(va, out_grad));
            }
            OpKind::Add => {
                add_into(grads, a, out_grad.clone());
                add_into(grads, b, reduce_to(out_grad, self.values[b.0].shape()));
            }
            OpKind::Subtract => {
                add_into(grads, a, out_grad.clone());
                let mut gb = reduce_to(out_grad, self.values[b.0].shape());
                for v in gb.data_mut() {
                    *v = -*v;
                }
                add_into(grads, b, gb);
            }
            OpKind::Multiply => {
                let va = &self.values[a.0];
                let vb = &self.values[b.0];
                let ga = zip_broadcast(out_grad, vb, |g, w| g * w);
                add_into(grads, a, ga);
                let gb_full = zip_elementwise(out_grad, va, |g, w| g * w);
                add_into(grads, b, reduce_to(&gb_full, vb.shape()));
            }
            OpKind::Relu => {
                let va = &self.values[a.0];
                let ga = zip_elementwise(out_grad, va, |g, x| if x > 0.0 { g } else { 0.0 });
                add_into(grads, a, ga);
            }
            OpKind::Sigmoid => {
                let out = &self.values[out_idx];
                let ga = zip_elementwise(out_grad, out, |g, s| g * s * (1.0 - s));
                add_into(grads, a, ga);
            }
            OpKind::Exp => {
                let out = &self.values[out_idx];
                add_into(grads, a, zip_elementwise(out_grad, out, |g, e| g * e));
            }
            OpKind::Log => {
                let va = &self.values[a.0];
                add_into(grads, a, zip_elementwise(out_grad, va, |g, x| g / x));
            }
            OpKind::Square => {
                let va = &self.values[a.0];
                add_into(grads, a, zip_elementwise(out_grad, va, |g, x| 2.0 * x * g));
            }
            OpKind::Sum => {
                let va = &self.values[a.0];
                let g = out_grad.scalar_value();
                add_into(grads, a, Tensor::full(va.shape().to_vec(), g));
            }
            OpKind::Mean => {
                let va = &self.values[a.0];
                let g = out_grad.scalar_value() / va.len() as f64;
                add_into(grads, a, Tensor::full(va.shape().to_vec(), g));
            }
            OpKind::Concat => {
                let va = &self.values[a.0];
                let vb = &self.values[b.0];
                let (ga, gb) = split_concat_grad(out_grad, va, vb);
                add_into(grads, a, ga);
                add_into(grads, b, gb);
            }
        }
    }
}

/// Gradients produced by [`Tape::backward`], indexed by [`ValueId`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient w.r.t. `id`; zeros of the value's shape if the loss never
    /// reached it.
    pub fn wrt(&self, tape: &Tape, id: ValueId) -> Tensor {
        match &self.grads[id.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(tape.value(id).shape().to_vec()),
        }
    }
}

fn add_into(grads: &mut [Option<Tensor>], id: ValueId, delta: Tensor) {
    match &mut grads[id.0] {
        Some(existing) => {
            for (e, d) in existing.data_mut().iter_mut().zip(delta.data()) {
                *e += d;
            }
        }
        slot => *slot = Some(delta),
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape().len() != 2 || b.shape().len() != 2 || a.cols() != b.rows() {
        return Err(NumkitError::ShapeMismatch {
            op: "matmul",
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
        });
    }
    let (n, k, m) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        for p in 0..k {
            let av = a.data()[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b.data()[p * m..(p + 1) * m];
            let orow = &mut out[i * m..(i + 1) * m];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Tensor::from_vec(vec![n, m], out)
}

/// `a . b^T` without materializing the transpose.
fn matmul_nt(a: &Tensor, b: &Tensor) -> Tensor {
    let (n, k, m) = (a.rows(), a.cols(), b.rows());
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let arow = &a.data()[i * k..(i + 1) * k];
        for j in 0..m {
            let brow = &b.data()[j * k..(j + 1) * k];
            out[i * m + j] = arow.iter().zip(brow).map(|(x, y)| x * y).sum();
        }
    }
    Tensor::from_vec(vec![n, m], out).expect("consistent dims")
}

/// `a^T . b` without materializing the transpose.
fn matmul_tn(a: &Tensor, b: &Tensor) -> Tensor {
    let (n, k, m) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; k * m];
    for i in 0..n {
        let arow = &a.data()[i * k..(i + 1) * k];
        let brow = &b.data()[i * m..(i + 1) * m];
        for (p, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let orow = &mut out[p * m..(p + 1) * m];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Tensor::from_vec(vec![k, m], out).expect("consistent dims")
}

fn broadcastable(lhs: &Tensor, rhs: &Tensor) -> bool {
    if lhs.shape() == rhs.shape() || rhs.is_scalar() {
        return true;
    }
    let ls = lhs.shape();
    let rs = rhs.shape();
    rs.len() < ls.len() && ls[ls.len() - rs.len()..] == *rs
}

fn broadcast_binary(op: OpKind, lhs: &Tensor, rhs: &Tensor) -> Result<Tensor> {
    if !broadcastable(lhs, rhs) {
        return Err(NumkitError::ShapeMismatch {
            op: op.name(),
            left: lhs.shape().to_vec(),
            right: rhs.shape().to_vec(),
        });
    }
    let f = match op {
        OpKind::Add => |x: f64, y: f64| x + y,
        OpKind::Subtract => |x: f64, y: f64| x - y,
        OpKind::Multiply => |x: f64, y: f64| x * y,
        _ => unreachable!(),
    };
    Ok(zip_broadcast_with(lhs, rhs, f))
}

fn zip_broadcast_with(lhs: &Tensor, rhs: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let rl = rhs.len();
    let data = lhs
        .data()
        .iter()
        .enumerate()
        .map(|(i, &x)| f(x, rhs.data()[i % rl]))
        .collect();
    Tensor::from_vec(lhs.shape().to_vec(), data).expect("lhs shape")
}

/// Elementwise combine where `small` broadcasts over `big`'s leading dim.
fn zip_broadcast(big: &Tensor, small: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    zip_broadcast_with(big, small, f)
}

fn zip_elementwise(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    debug_assert_eq!(a.len(), b.len());
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| f(x, y))
        .collect();
    Tensor::from_vec(a.shape().to_vec(), data).expect("same shape")
}

/// Sum `grad` down to `target_shape` for broadcast backward.
fn reduce_to(grad: &Tensor, target_shape: &[usize]) -> Tensor {
    let target_len: usize = target_shape.iter().product();
    if target_len == grad.len() {
        return Tensor::from_vec(target_shape.to_vec(), grad.data().to_vec()).expect("same len");
    }
    let mut out = vec![0.0; target_len];
    for (i, &g) in grad.data().iter().enumerate() {
        out[i % target_len] += g;
    }
    Tensor::from_vec(target_shape.to_vec(), out).expect("target shape")
}

fn concat(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    match (a.shape().len(), b.shape().len()) {
        (1, 1) => {
            let mut data = a.data().to_vec();
            data.extend_from_slice(b.data());
            Tensor::from_vec(vec![a.len() + b.len()], data)
        }
        (2, 2) if a.rows() == b.rows() => {
            let (n, ca, cb) = (a.rows(), a.cols(), b.cols());
            let mut data = Vec::with_capacity(n * (ca + cb));
            for r in 0..n {
                data.extend_from_slice(&a.data()[r * ca..(r + 1) * ca]);
                data.extend_from_slice(&b.data()[r * cb..(r + 1) * cb]);
            }
            Tensor::from_vec(vec![n, ca + cb], data)
        }
        _ => Err(NumkitError::ShapeMismatch {
            op: "concat",
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
        }),
    }
}

fn split_concat_grad(grad: &Tensor, a: &Tensor, b: &Tensor) -> (Tensor, Tensor) {
    if a.shape().len() == 1 {
        let (ga, gb) = grad.data().split_at(a.len());
        return (
            Tensor::from_vec(vec![a.len()], ga.to_vec()).expect("split"),
            Tensor::from_vec(vec![b.len()], gb.to_vec()).expect("split"),
        );
    }
    let (n, ca, cb) = (a.rows(), a.cols(), b.cols());
    let mut ga = Vec::with_capacity(n * ca);
    let mut gb = Vec::with_capacity(n * cb);
    for r in 0..n {
        let row = &grad.data()[r * (ca + cb)..(r + 1) * (ca + cb)];
        ga.extend_from_slice(&row[..ca]);
        gb.extend_from_slice(&row[ca..]);
    }
    (
        Tensor::from_vec(vec![n, ca], ga).expect("split"),
        Tensor::from_vec(vec![n, cb], gb).expect("split"),
    )
}
