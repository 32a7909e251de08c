//! Wengert tape: forward operations are recorded as they execute, then
//! replayed in reverse to accumulate gradients via the chain rule.
//!
//! The primitive set is fixed and closed. Adding an op means adding its
//! forward rule here, its backward rule in [`Tape::backward`], and a
//! finite-difference test in the module tests.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub type NodeId = usize;

#[derive(Clone, Debug)]
pub enum Op {
    /// Leaf holding a parameter value; the id keys the gradient map.
    Param(usize),
    /// Leaf holding a constant or model input; no gradient is produced.
    Input,
    MatMul,
    /// Elementwise add; rhs may be a `[1, n]` row vector broadcast over rows.
    Add,
    /// Elementwise multiply; rhs may be `[m, 1]` (broadcast over columns)
    /// or `[1, n]` (broadcast over rows).
    Mul,
    ConcatCols,
    SliceCols { start: usize, end: usize },
    Sigmoid,
    Tanh,
    /// Row-wise softmax.
    Softmax,
    /// Row-wise log-softmax; the stable path for cross-entropy losses.
    LogSoftmax,
    Log,
    /// Gather rows of an embedding matrix; one output row per id.
    Embed { ids: Vec<usize> },
    Scale { factor: f64 },
    /// Sum of all entries, producing a `[1, 1]` scalar.
    SumAll,
    /// Elementwise binary cross-entropy on logits:
    /// `max(x,0) - x*z + ln(1+exp(-|x|))`. Inputs are (logits, targets);
    /// the targets side is treated as constant in backward.
    BceWithLogits,
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Param(_) => "param",
            Op::Input => "input",
            Op::MatMul => "matmul",
            Op::Add => "add",
            Op::Mul => "mul",
            Op::ConcatCols => "concat_cols",
            Op::SliceCols { .. } => "slice_cols",
            Op::Sigmoid => "sigmoid",
            Op::Tanh => "tanh",
            Op::Softmax => "softmax",
            Op::LogSoftmax => "log_softmax",
            Op::Log => "log",
            Op::Embed { .. } => "embed",
            Op::Scale { .. } => "scale",
            Op::SumAll => "sum_all",
            Op::BceWithLogits => "bce_with_logits",
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    inputs: Vec<NodeId>,
    value: Tensor,
}

/// Append-only record of one forward computation. Nodes are topologically
/// ordered by construction: inputs always precede consumers.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    /// (param id, node id) for every parameter leaf pushed onto this tape.
    param_nodes: Vec<(usize, NodeId)>,
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

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id].value
    }

    fn push(&mut self, op: Op, inputs: Vec<NodeId>, value: Tensor) -> NodeId {
        #[cfg(debug_assertions)]
        debug_assert!(
            value.all_finite(),
            "non-finite value out of {} with shape {:?}",
            op.name(),
            value.shape()
        );
        let id = self.nodes.len();
        self.nodes.push(Node { op, inputs, value });
        id
    }

    /// Records a constant/input leaf.
    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Input, vec![], value)
    }

    /// Records a parameter leaf. `param_id` keys the gradient map returned
    /// by [`Tape::backward`].
    pub fn param(&mut self, param_id: usize, value: Tensor) -> NodeId {
        let id = self.push(Op::Param(param_id), vec![], value);
        self.param_nodes.push((param_id, id));
        id
    }

    /// Applies one primitive, validating shapes and recording the result.
    pub fn apply(&mut self, op: Op, inputs: &[NodeId]) -> Result<NodeId> {
        let value = self.forward(&op, inputs)?;
        Ok(self.push(op, inputs.to_vec(), value))
    }

    fn shape_err(&self, op: &Op, inputs: &[NodeId], expected: &str) -> Error {
        let got: Vec<Vec<usize>> =
            inputs.iter().map(|&i| self.nodes[i].value.shape().to_vec()).collect();
        Error::ShapeMismatch { op: op.name(), details: format!("{expected}; got {got:?}") }
    }

    fn forward(&self, op: &Op, inputs: &[NodeId]) -> Result<Tensor> {
        let t = |i: usize| &self.nodes[inputs[i]].value;
        match op {
            Op::Param(_) | Op::Input => Err(Error::ShapeMismatch {
                op: op.name(),
                details: "leaf ops are recorded via input()/param(), not apply()".into(),
            }),
            Op::MatMul => {
                if inputs.len() != 2 || t(0).cols() != t(1).rows() {
                    return Err(self.shape_err(op, inputs, "expected [m,k] x [k,n]"));
                }
                Ok(matmul(t(0), t(1)))
            }
            Op::Add => {
                if inputs.len() != 2 || !(same_shape(t(0), t(1)) || row_broadcast(t(0), t(1))) {
                    return Err(self.shape_err(op, inputs, "expected equal shapes or rhs [1,n]"));
                }
                let (a, b) = (t(0), t(1));
                let mut out = a.clone();
                if same_shape(a, b) {
                    for (o, x) in out.data_mut().iter_mut().zip(b.data()) {
                        *o += x;
                    }
                } else {
                    let cols = a.cols();
                    for r in 0..a.rows() {
                        for c in 0..cols {
                            let v = out.at(r, c) + b.data()[c];
                            out.set(r, c, v);
                        }
                    }
                }
                Ok(out)
            }
            Op::Mul => {
                if inputs.len() != 2
                    || !(same_shape(t(0), t(1)) || col_broadcast(t(0), t(1)) || row_broadcast(t(0), t(1)))
                {
                    return Err(self.shape_err(op, inputs, "expected equal shapes, rhs [m,1] or rhs [1,n]"));
                }
                let (a, b) = (t(0), t(1));
                let mut out = a.clone();
                if same_shape(a, b) {
                    for (o, x) in out.data_mut().iter_mut().zip(b.data()) {
                        *o *= x;
                    }
                } else if col_broadcast(a, b) {
                    for r in 0..a.rows() {
                        for c in 0..a.cols() {
                            out.set(r, c, a.at(r, c) * b.data()[r]);
                        }
                    }
                } else {
                    for r in 0..a.rows() {
                        for c in 0..a.cols() {
                            out.set(r, c, a.at(r, c) * b.data()[c]);
                        }
                    }
                }
                Ok(out)
            }
            Op::ConcatCols => {
                if inputs.is_empty() || inputs.iter().any(|&i| self.nodes[i].value.rows() != t(0).rows()) {
                    return Err(self.shape_err(op, inputs, "expected >=1 inputs with equal row counts"));
                }
                let rows = t(0).rows();
                let total: usize = (0..inputs.len()).map(|i| t(i).cols()).sum();
                let mut data = Vec::with_capacity(rows * total);
                for r in 0..rows {
                    for i in 0..inputs.len() {
                        data.extend_from_slice(t(i).row_slice(r));
                    }
                }
                Tensor::new(vec![rows, total], data)
            }
            Op::SliceCols { start, end } => {
                if inputs.len() != 1 || *start >= *end || *end > t(0).cols() {
                    return Err(self.shape_err(op, inputs, "expected single input with start < end <= cols"));
                }
                let a = t(0);
                let mut data = Vec::with_capacity(a.rows() * (end - start));
                for r in 0..a.rows() {
                    data.extend_from_slice(&a.row_slice(r)[*start..*end]);
                }
                Tensor::new(vec![a.rows(), end - start], data)
            }
            Op::Sigmoid | Op::Tanh | Op::Log => {
                if inputs.len() != 1 {
                    return Err(self.shape_err(op, inputs, "expected single input"));
                }
                let mut out = t(0).clone();
                for v in out.data_mut() {
                    *v = match op {
                        Op::Sigmoid => sigmoid(*v),
                        Op::Tanh => v.tanh(),
                        _ => v.ln(),
                    };
                }
                Ok(out)
            }
            Op::Softmax | Op::LogSoftmax => {
                if inputs.len() != 1 {
                    return Err(self.shape_err(op, inputs, "expected single input"));
                }
                let a = t(0);
                let mut out = a.clone();
                for r in 0..a.rows() {
                    let row = a.row_slice(r);
                    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
                    for c in 0..a.cols() {
                        let v = match op {
                            Op::Softmax => (row[c] - max).exp() / sum,
                            _ => row[c] - max - sum.ln(),
                        };
                        out.set(r, c, v);
                    }
                }
                Ok(out)
            }
            Op::Embed { ids } => {
                if inputs.len() != 1 || ids.is_empty() || ids.iter().any(|&i| i >= t(0).rows()) {
                    return Err(self.shape_err(op, inputs, "expected embedding matrix and in-range ids"));
                }
                let e = t(0);
                let mut data = Vec::with_capacity(ids.len() * e.cols());
                for &id in ids {
                    data.extend_from_slice(e.row_slice(id));
                }
                Tensor::new(vec![ids.len(), e.cols()], data)
            }
            Op::Scale { factor } => {
                if inputs.len() != 1 {
                    return Err(self.shape_err(op, inputs, "expected single input"));
                }
                let mut out = t(0).clone();
                for v in out.data_mut() {
                    *v *= factor;
                }
                Ok(out)
            }
            Op::SumAll => {
                if inputs.len() != 1 {
                    return Err(self.shape_err(op, inputs, "expected single input"));
                }
                Ok(Tensor::scalar(t(0).data().iter().sum()))
            }
            Op::BceWithLogits => {
                if inputs.len() != 2 || !same_shape(t(0), t(1)) {
                    return Err(self.shape_err(op, inputs, "expected logits and targets of equal shape"));
                }
                let (x, z) = (t(0), t(1));
                let data = x
                    .data()
                    .iter()
                    .zip(z.data())
                    .map(|(&x, &z)| x.max(0.0) - x * z + (-x.abs()).exp().ln_1p())
                    .collect();
                Tensor::new(x.shape().to_vec(), data)
            }
        }
    }

    /// Reverse pass from a scalar `loss` node. Returns one gradient per
    /// parameter id on the tape; parameters the loss does not reach get
    /// zero gradients.
    pub fn backward(&self, loss: NodeId) -> Result<BTreeMap<usize, Tensor>> {
        if !self.nodes[loss].value.is_scalar() {
            return Err(Error::NonScalarLoss(self.nodes[loss].value.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss] = Some(Tensor::scalar(1.0));

        for id in (0..=loss).rev() {
            let dy = match grads[id].take() {
                Some(g) => g,
                None => continue,
            };
            let node = &self.nodes[id];
            match &node.op {
                Op::Param(_) | Op::Input => {
                    grads[id] = Some(dy);
                    continue;
                }
                Op::MatMul => {
                    let a = &self.nodes[node.inputs[0]].value;
                    let b = &self.nodes[node.inputs[1]].value;
                    accumulate(&mut grads, node.inputs[0], matmul_nt(&dy, b));
                    accumulate(&mut grads, node.inputs[1], matmul_tn(a, &dy));
                }
                Op::Add => {
                    let b = &self.nodes[node.inputs[1]].value;
                    if same_shape(&dy, b) {
                        accumulate(&mut grads, node.inputs[1], dy.clone());
                    } else {
                        let mut db = Tensor::zeros(1, b.cols());
                        for r in 0..dy.rows() {
                            for c in 0..dy.cols() {
                                db.data_mut()[c] += dy.at(r, c);
                            }
                        }
                        accumulate(&mut grads, node.inputs[1], db);
                    }
                    accumulate(&mut grads, node.inputs[0], dy);
                }
                Op::Mul => {
                    let a = &self.nodes[node.inputs[0]].value;
                    let b = &self.nodes[node.inputs[1]].value;
                    let mut da = Tensor::zeros_like(a);
                    let mut db = Tensor::zeros_like(b);
                    if same_shape(a, b) {
                        for i in 0..a.numel() {
                            da.data_mut()[i] = dy.data()[i] * b.data()[i];
                            db.data_mut()[i] = dy.data()[i] * a.data()[i];
                        }
                    } else if col_broadcast(a, b) {
                        for r in 0..a.rows() {
                            for c in 0..a.cols() {
                                da.set(r, c, dy.at(r, c) * b.data()[r]);
                                db.data_mut()[r] += dy.at(r, c) * a.at(r, c);
                            }
                        }
                    } else {
                        for r in 0..a.rows() {
                            for c in 0..a.cols() {
                                da.set(r, c, dy.at(r, c) * b.data()[c]);
                                db.data_mut()[c] += dy.at(r, c) * a.at(r, c);
                            }
                        }
                    }
                    accumulate(&mut grads, node.inputs[0], da);
                    accumulate(&mut grads, node.inputs[1], db);
                }
                Op::ConcatCols => {
                    let mut offset = 0;
                    for &inp in &node.inputs {
                        let w = self.nodes[inp].value.cols();
                        let mut d = Tensor::zeros(dy.rows(), w);
                        for r in 0..dy.rows() {
                            for c in 0..w {
                                d.set(r, c, dy.at(r, offset + c));
                            }
                        }
                        accumulate(&mut grads, inp, d);
                        offset += w;
                    }
                }
                Op::SliceCols { start, .. } => {
                    let a = &self.nodes[node.inputs[0]].value;
                    let mut d = Tensor::zeros_like(a);
                    for r in 0..dy.rows() {
                        for c in 0..dy.cols() {
                            d.set(r, start + c, dy.at(r, c));
                        }
                    }
                    accumulate(&mut grads, node.inputs[0], d);
                }
                Op::Sigmoid => {
                    let y = &node.value;
                    let mut d = Tensor::zeros_like(y);
                    for i in 0..y.numel() {
                        let s = y.data()[i];
                        d.data_mut()[i] = dy.data()[i] * s * (1.0 - s);
                    }
                    accumulate(&mut grads, node.inputs[0], d);
                }
                Op::Tanh => {
                    let y = &node.value;
                    let mut d = Tensor::zeros_like(y);
                    for i in 0..y.numel() {
                        let t = y.data()[i];
                        d.data_mut()[i] = dy.data()[i] * (1.0 - t * t);
                    }
                    accumulate(&mut grads, node.inputs[0], d);
                }
                Op::Softmax => {
                    let y = &node.value;
                    let mut d = Tensor::zeros_like(y);
                    for r in 0..y.rows() {
                        let dot: f64 =
                            (0..y.cols()).map(|c| dy.at(r, c) * y.at(r, c)).sum();
                        for c in 0..y.cols() {
                            d.set(r, c, y.at(r, c) * (dy.at(r, c) - dot));
                        }
                    }
                    accumulate(&mut grads, node.inputs[0], d);
                }
                Op::LogSoftmax => {
                    let y = &node.value;
                    let mut d = Tensor::zeros_like(y);
                    for r in 0..y.rows() {
                        let sum_dy: f64 = (0..y.cols()).map(|c| dy.at(r, c)).sum();
                        for c in 0..y.cols() {
                            d.set(r, c, dy.at(r, c) - y.at(r, c).exp() * sum_dy);
                        }
                    }
                    accumulate(&mut grads, node.inputs[0], d);
                }
                Op::Log => {
                    let x = &self.nodes[node.inputs[0]].value;
                    let mut d = Tensor::zeros_like(x);
                    for i in 0..x.numel() {
                        d.data_mut()[i] = dy.data()[i] / x.data()[i];
                    }
                    accumulate(&mut grads, node.inputs[0], d);
                }
                Op::Embed { ids } => {
                    let e = &self.nodes[node.inputs[0]].value;
                    let mut d = Tensor::zeros_like(e);
                    for (i, &id) in ids.iter().enumerate() {
                        for c in 0..e.cols() {
                            let v = d.at(id, c) + dy.at(i, c);
                            d.set(id, c, v);
                        }
                    }
                    accumulate(&mut grads, node.inputs[0], d);
                }
                Op::Scale { factor } => {
                    let mut d = dy.clone();
                    for v in d.data_mut() {
                        *v *= factor;
                    }
                    accumulate(&mut grads, node.inputs[0], d);
                }
                Op::SumAll => {
                    let x = &self.nodes[node.inputs[0]].value;
                    let g = dy.data()[0];
                    let mut d = Tensor::zeros_like(x);
                    for v in d.data_mut() {
                        *v = g;
                    }
                    accumulate(&mut grads, node.inputs[0], d);
                }
                Op::BceWithLogits => {
                    let x = &self.nodes[node.inputs[0]].value;
                    let z = &self.nodes[node.inputs[1]].value;
                    let mut d = Tensor::zeros_like(x);
                    for i in 0..x.numel() {
                        d.data_mut()[i] = dy.data()[i] * (sigmoid(x.data()[i]) - z.data()[i]);
                    }
                    accumulate(&mut grads, node.inputs[0], d);
                    // targets are constants; no gradient flows to inputs[1]
                }
            }
        }

        let mut out = BTreeMap::new();
        for &(pid, nid) in &self.param_nodes {
            let g = match grads[nid].take() {
                Some(g) => g,
                None => Tensor::zeros_like(&self.nodes[nid].value),
            };
            match out.entry(pid) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(g);
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    let acc = e.get_mut();
                    for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                        *a += b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Re-executes every recorded forward op from leaf values and checks the
    /// stored outputs are reproduced bit-exactly.
    pub fn replay_matches(&self) -> bool {
        for (id, node) in self.nodes.iter().enumerate() {
            match node.op {
                Op::Param(_) | Op::Input => continue,
                _ => {
                    let recomputed = self
                        .forward(&node.op, &node.inputs)
                        .expect("replaying a recorded op cannot fail");
                    let same = recomputed
                        .data()
                        .iter()
                        .zip(node.value.data())
                        .all(|(a, b)| a.to_bits() == b.to_bits());
                    if !same || recomputed.shape() != node.value.shape() {
                        let _ = id;
                        return false;
                    }
                }
            }
        }
        true
    }

    // Convenience wrappers. Model code controls its shapes, so a mismatch
    // here is a bug; panic with the op error rather than thread Results
    // through every graph construction.

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.apply(Op::MatMul, &[a, b]).unwrap()
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.apply(Op::Add, &[a, b]).unwrap()
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.apply(Op::Mul, &[a, b]).unwrap()
    }

    pub fn concat_cols(&mut self, inputs: &[NodeId]) -> NodeId {
        self.apply(Op::ConcatCols, inputs).unwrap()
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, end: usize) -> NodeId {
        self.apply(Op::SliceCols { start, end }, &[a]).unwrap()
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.apply(Op::Sigmoid, &[a]).unwrap()
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.apply(Op::Tanh, &[a]).unwrap()
    }

    pub fn softmax(&mut self, a: NodeId) -> NodeId {
        self.apply(Op::Softmax, &[a]).unwrap()
    }

    pub fn log_softmax(&mut self, a: NodeId) -> NodeId {
        self.apply(Op::LogSoftmax, &[a]).unwrap()
    }

    pub fn log(&mut self, a: NodeId) -> NodeId {
        self.apply(Op::Log, &[a]).unwrap()
    }

    pub fn embed(&mut self, table: NodeId, ids: Vec<usize>) -> NodeId {
        self.apply(Op::Embed { ids }, &[table]).unwrap()
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        self.apply(Op::Scale { factor }, &[a]).unwrap()
    }

    pub fn sum_all(&mut self, a: NodeId) -> NodeId {
        self.apply(Op::SumAll, &[a]).unwrap()
    }

    pub fn bce_with_logits(&mut self, logits: NodeId, targets: NodeId) -> NodeId {
        self.apply(Op::BceWithLogits, &[logits, targets]).unwrap()
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    let v = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    // keep saturated outputs strictly inside (0, 1)
    v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

fn same_shape(a: &Tensor, b: &Tensor) -> bool {
    a.rows() == b.rows() && a.cols() == b.cols()
}

fn row_broadcast(a: &Tensor, b: &Tensor) -> bool {
    b.rows() == 1 && b.cols() == a.cols() && a.rows() > 1
}

fn col_broadcast(a: &Tensor, b: &Tensor) -> bool {
    b.cols() == 1 && b.rows() == a.rows() && a.cols() > 1
}

fn matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = Tensor::zeros(m, n);
    for i in 0..m {
        for p in 0..k {
            let av = a.at(i, p);
            if av == 0.0 {
                continue;
            }
            let brow = b.row_slice(p);
            let orow = &mut out.data_mut()[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

/// `a * b^T`
fn matmul_nt(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k, n) = (a.rows(), a.cols(), b.rows());
    debug_assert_eq!(k, b.cols());
    let mut out = Tensor::zeros(m, n);
    for i in 0..m {
        let arow = a.row_slice(i);
        for j in 0..n {
            let brow = b.row_slice(j);
            let mut acc = 0.0;
            for p in 0..k {
                acc += arow[p] * brow[p];
            }
            out.set(i, j, acc);
        }
    }
    out
}

/// `a^T * b`
fn matmul_tn(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k, n) = (a.cols(), a.rows(), b.cols());
    debug_assert_eq!(k, b.rows());
    let mut out = Tensor::zeros(m, n);
    for p in 0..k {
        let arow = a.row_slice(p);
        let brow = b.row_slice(p);
        for i in 0..m {
            let av = arow[i];
            if av == 0.0 {
                continue;
            }
            let orow = &mut out.data_mut()[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

fn accumulate(grads: &mut [Option<Tensor>], id: NodeId, delta: Tensor) {
    match &mut grads[id] {
        Some(g) => {
            for (a, b) in g.data_mut().iter_mut().zip(delta.data()) {
                *a += b;
            }
        }
        slot => *slot = Some(delta),
    }
}
