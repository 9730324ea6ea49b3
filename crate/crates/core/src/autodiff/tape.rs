//! Gradient tape: eager forward kernels with recorded local gradients.
//!
//! Operations append nodes in topological order, so a single reverse sweep
//! visits every node once and accumulates gradients additively across all
//! uses of a value. A tape is confined to one thread; tensors themselves are
//! value-like and move freely.

use crate::error::AutodiffError;

use super::tensor::{matmul_into, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var {
    id: usize,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    /// Elementwise add; the right side may be a rank-1 vector broadcast over
    /// the rows of a rank-2 left side.
    Add(Var, Var),
    Mul(Var, Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    SoftmaxLast(Var),
    LogSoftmaxLast(Var),
    MeanAxis(Var, usize),
    SumAxis(Var, usize),
    SumAll(Var),
    Transpose(Var),
    Scale(Var, f64),
    Row(Var, usize),
    SliceCols(Var, usize, usize),
    GatherRows(Var, Vec<usize>),
    MaskRows(Var, Vec<bool>),
    LayerNorm { x: Var, gamma: Var, beta: Var, eps: f64 },
}

struct Node {
    value: Tensor,
    grad: Option<Vec<f64>>,
    op: Op,
    is_param: bool,
}

/// Records a forward computation and replays it in reverse for gradients.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    backward_done: bool,
}

fn mismatch(kernel: &'static str, detail: String) -> AutodiffError {
    AutodiffError::ShapeMismatch { kernel, detail }
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

    fn push(&mut self, value: Tensor, op: Op, is_param: bool) -> Var {
        self.nodes.push(Node { value, grad: None, op, is_param });
        Var { id: self.nodes.len() - 1 }
    }

    /// Place a constant on the tape. It participates in the graph but is not
    /// reported as a parameter.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Place a trainable parameter on the tape. After `backward`, its
    /// gradient is always populated (zeros when unreachable from the loss).
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.id].value
    }

    /// Gradient of the last `backward` loss w.r.t. `var`, if populated.
    pub fn grad(&self, var: Var) -> Option<Tensor> {
        let node = &self.nodes[var.id];
        node.grad
            .as_ref()
            .map(|g| Tensor::new(node.value.shape().to_vec(), g.clone()).expect("grad shape"))
    }

    fn check(&self, var: Var, kernel: &'static str) -> Result<(), AutodiffError> {
        if var.id >= self.nodes.len() {
            return Err(mismatch(kernel, "variable from another tape".into()));
        }
        Ok(())
    }

    // ── forward kernels ──────────────────────────────────────────────

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.check(a, "matmul")?;
        self.check(b, "matmul")?;
        let (ta, tb) = (&self.nodes[a.id].value, &self.nodes[b.id].value);
        if ta.rank() != 2 || tb.rank() != 2 || ta.shape()[1] != tb.shape()[0] {
            return Err(mismatch("matmul", format!("{:?} x {:?}", ta.shape(), tb.shape())));
        }
        let (m, k, n) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
        let mut out = vec![0.0; m * n];
        matmul_into(ta.data(), tb.data(), &mut out, m, k, n);
        Ok(self.push(Tensor::new(vec![m, n], out)?, Op::MatMul(a, b), false))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.check(a, "add")?;
        self.check(b, "add")?;
        let (ta, tb) = (&self.nodes[a.id].value, &self.nodes[b.id].value);
        let value = if ta.shape() == tb.shape() {
            let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x + y).collect();
            Tensor::new(ta.shape().to_vec(), data)?
        } else if ta.rank() == 2 && tb.rank() == 1 && ta.cols() == tb.numel() {
            // bias broadcast over rows
            let cols = ta.cols();
            let data = ta
                .data()
                .iter()
                .enumerate()
                .map(|(i, x)| x + tb.data()[i % cols])
                .collect();
            Tensor::new(ta.shape().to_vec(), data)?
        } else {
            return Err(mismatch("add", format!("{:?} + {:?}", ta.shape(), tb.shape())));
        };
        Ok(self.push(value, Op::Add(a, b), false))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.check(a, "elementwise-multiply")?;
        self.check(b, "elementwise-multiply")?;
        let (ta, tb) = (&self.nodes[a.id].value, &self.nodes[b.id].value);
        if ta.shape() != tb.shape() {
            return Err(mismatch(
                "elementwise-multiply",
                format!("{:?} * {:?}", ta.shape(), tb.shape()),
            ));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).collect();
        let value = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push(value, Op::Mul(a, b), false))
    }

    /// Concatenate along the last axis. All inputs must share rank and the
    /// leading dimension.
    pub fn concat_cols(&mut self, inputs: &[Var]) -> Result<Var, AutodiffError> {
        if inputs.is_empty() {
            return Err(mismatch("concat-last-axis", "no inputs".into()));
        }
        for &v in inputs {
            self.check(v, "concat-last-axis")?;
        }
        let rank = self.nodes[inputs[0].id].value.rank();
        let rows = self.nodes[inputs[0].id].value.rows();
        let mut total_cols = 0;
        for &v in inputs {
            let t = &self.nodes[v.id].value;
            if t.rank() != rank || t.rows() != rows {
                return Err(mismatch(
                    "concat-last-axis",
                    format!("{:?} alongside {:?}", t.shape(), self.nodes[inputs[0].id].value.shape()),
                ));
            }
            total_cols += t.cols();
        }
        let mut data = Vec::with_capacity(rows * total_cols);
        for r in 0..rows {
            for &v in inputs {
                data.extend_from_slice(self.nodes[v.id].value.row_slice(r));
            }
        }
        let shape = if rank == 1 { vec![total_cols] } else { vec![rows, total_cols] };
        Ok(self.push(Tensor::new(shape, data)?, Op::ConcatCols(inputs.to_vec()), false))
    }

    /// Stack rank-2 inputs along the first axis; all must share the column
    /// count.
    pub fn concat_rows(&mut self, inputs: &[Var]) -> Result<Var, AutodiffError> {
        if inputs.is_empty() {
            return Err(mismatch("concat-rows", "no inputs".into()));
        }
        for &v in inputs {
            self.check(v, "concat-rows")?;
        }
        let cols = self.nodes[inputs[0].id].value.cols();
        let mut rows = 0;
        for &v in inputs {
            let t = &self.nodes[v.id].value;
            if t.rank() != 2 || t.cols() != cols {
                return Err(mismatch("concat-rows", format!("{:?} with {} columns expected", t.shape(), cols)));
            }
            rows += t.shape()[0];
        }
        let mut data = Vec::with_capacity(rows * cols);
        for &v in inputs {
            data.extend_from_slice(self.nodes[v.id].value.data());
        }
        Ok(self.push(Tensor::new(vec![rows, cols], data)?, Op::ConcatRows(inputs.to_vec()), false))
    }

    fn unary(
        &mut self,
        x: Var,
        kernel: &'static str,
        f: impl Fn(f64) -> f64,
        op: Op,
    ) -> Result<Var, AutodiffError> {
        self.check(x, kernel)?;
        let t = &self.nodes[x.id].value;
        let data = t.data().iter().map(|&v| f(v)).collect();
        let value = Tensor::new(t.shape().to_vec(), data)?;
        Ok(self.push(value, op, false))
    }

    pub fn relu(&mut self, x: Var) -> Result<Var, AutodiffError> {
        self.unary(x, "relu", |v| v.max(0.0), Op::Relu(x))
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var, AutodiffError> {
        self.unary(x, "tanh", f64::tanh, Op::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var, AutodiffError> {
        self.unary(x, "sigmoid", |v| 1.0 / (1.0 + (-v).exp()), Op::Sigmoid(x))
    }

    /// Row-wise softmax over the last axis, stabilized by max subtraction.
    pub fn softmax_last(&mut self, x: Var) -> Result<Var, AutodiffError> {
        self.check(x, "softmax-last-axis")?;
        let t = &self.nodes[x.id].value;
        let (rows, cols) = (t.rows(), t.cols());
        let mut data = vec![0.0; rows * cols];
        for r in 0..rows {
            let row = t.row_slice(r);
            let out = &mut data[r * cols..(r + 1) * cols];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for (o, &v) in out.iter_mut().zip(row) {
                *o = (v - max).exp();
                sum += *o;
            }
            for o in out.iter_mut() {
                *o /= sum;
            }
        }
        let value = Tensor::new(t.shape().to_vec(), data)?;
        Ok(self.push(value, Op::SoftmaxLast(x), false))
    }

    /// Row-wise log-softmax over the last axis; the stable path for losses.
    pub fn log_softmax_last(&mut self, x: Var) -> Result<Var, AutodiffError> {
        self.check(x, "log-softmax-last-axis")?;
        let t = &self.nodes[x.id].value;
        let (rows, cols) = (t.rows(), t.cols());
        let mut data = vec![0.0; rows * cols];
        for r in 0..rows {
            let row = t.row_slice(r);
            let out = &mut data[r * cols..(r + 1) * cols];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let log_sum = row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
            for (o, &v) in out.iter_mut().zip(row) {
                *o = v - max - log_sum;
            }
        }
        let value = Tensor::new(t.shape().to_vec(), data)?;
        Ok(self.push(value, Op::LogSoftmaxLast(x), false))
    }

    fn reduce_axis(
        &mut self,
        x: Var,
        axis: usize,
        kernel: &'static str,
        mean: bool,
    ) -> Result<Var, AutodiffError> {
        self.check(x, kernel)?;
        let t = &self.nodes[x.id].value;
        if t.rank() != 2 || axis > 1 {
            return Err(mismatch(kernel, format!("axis {axis} of {:?}", t.shape())));
        }
        let (n, d) = (t.shape()[0], t.shape()[1]);
        let value = if axis == 0 {
            let mut out = vec![0.0; d];
            for r in 0..n {
                for (o, &v) in out.iter_mut().zip(t.row_slice(r)) {
                    *o += v;
                }
            }
            if mean {
                out.iter_mut().for_each(|v| *v /= n as f64);
            }
            Tensor::new(vec![1, d], out)?
        } else {
            let mut out = vec![0.0; n];
            for r in 0..n {
                out[r] = t.row_slice(r).iter().sum();
                if mean {
                    out[r] /= d as f64;
                }
            }
            Tensor::new(vec![n, 1], out)?
        };
        let op = if mean { Op::MeanAxis(x, axis) } else { Op::SumAxis(x, axis) };
        Ok(self.push(value, op, false))
    }

    /// Mean over one axis of a rank-2 tensor; the reduced axis keeps size 1.
    pub fn mean_axis(&mut self, x: Var, axis: usize) -> Result<Var, AutodiffError> {
        self.reduce_axis(x, axis, "mean-over-axis", true)
    }

    pub fn sum_axis(&mut self, x: Var, axis: usize) -> Result<Var, AutodiffError> {
        self.reduce_axis(x, axis, "sum-over-axis", false)
    }

    /// Sum of all entries, as a `[1]` scalar.
    pub fn sum_all(&mut self, x: Var) -> Result<Var, AutodiffError> {
        self.check(x, "sum-all")?;
        let total = self.nodes[x.id].value.data().iter().sum();
        Ok(self.push(Tensor::scalar(total), Op::SumAll(x), false))
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var, AutodiffError> {
        self.check(x, "transpose")?;
        let t = &self.nodes[x.id].value;
        if t.rank() != 2 {
            return Err(mismatch("transpose", format!("{:?}", t.shape())));
        }
        let (n, d) = (t.shape()[0], t.shape()[1]);
        let mut data = vec![0.0; n * d];
        for i in 0..n {
            for j in 0..d {
                data[j * n + i] = t.data()[i * d + j];
            }
        }
        Ok(self.push(Tensor::new(vec![d, n], data)?, Op::Transpose(x), false))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Result<Var, AutodiffError> {
        self.check(x, "scalar-scale")?;
        let t = &self.nodes[x.id].value;
        let data = t.data().iter().map(|&v| v * factor).collect();
        let value = Tensor::new(t.shape().to_vec(), data)?;
        Ok(self.push(value, Op::Scale(x, factor), false))
    }

    /// Select row `index` of a rank-2 tensor as a `[1, d]` tensor.
    pub fn row(&mut self, x: Var, index: usize) -> Result<Var, AutodiffError> {
        self.check(x, "row")?;
        let t = &self.nodes[x.id].value;
        if t.rank() != 2 || index >= t.shape()[0] {
            return Err(mismatch("row", format!("row {index} of {:?}", t.shape())));
        }
        let value = Tensor::new(vec![1, t.cols()], t.row_slice(index).to_vec())?;
        Ok(self.push(value, Op::Row(x, index), false))
    }

    /// Columns `from..to` of a rank-2 tensor.
    pub fn slice_cols(&mut self, x: Var, from: usize, to: usize) -> Result<Var, AutodiffError> {
        self.check(x, "slice-cols")?;
        let t = &self.nodes[x.id].value;
        if t.rank() != 2 || from >= to || to > t.cols() {
            return Err(mismatch("slice-cols", format!("{from}..{to} of {:?}", t.shape())));
        }
        let (n, d) = (t.shape()[0], t.shape()[1]);
        let mut data = Vec::with_capacity(n * (to - from));
        for r in 0..n {
            data.extend_from_slice(&t.data()[r * d + from..r * d + to]);
        }
        Ok(self.push(Tensor::new(vec![n, to - from], data)?, Op::SliceCols(x, from, to), false))
    }

    /// Rows `ids` of a rank-2 tensor, in order; repeats allowed. Gradients
    /// scatter-accumulate into the source rows.
    pub fn gather_rows(&mut self, x: Var, ids: &[usize]) -> Result<Var, AutodiffError> {
        self.check(x, "gather-rows")?;
        let t = &self.nodes[x.id].value;
        if t.rank() != 2 || ids.iter().any(|&i| i >= t.shape()[0]) {
            return Err(mismatch("gather-rows", format!("ids {ids:?} of {:?}", t.shape())));
        }
        let cols = t.cols();
        let mut data = Vec::with_capacity(ids.len() * cols);
        for &i in ids {
            data.extend_from_slice(t.row_slice(i));
        }
        let value = Tensor::new(vec![ids.len(), cols], data)?;
        Ok(self.push(value, Op::GatherRows(x, ids.to_vec()), false))
    }

    /// Zero every row whose `keep` flag is false; kept rows pass through and
    /// are the only ones gradients flow through.
    pub fn mask_rows(&mut self, x: Var, keep: &[bool]) -> Result<Var, AutodiffError> {
        self.check(x, "mask-rows")?;
        let t = &self.nodes[x.id].value;
        if t.rank() != 2 || keep.len() != t.shape()[0] {
            return Err(mismatch("mask-rows", format!("{} flags for {:?}", keep.len(), t.shape())));
        }
        let cols = t.cols();
        let mut data = vec![0.0; t.numel()];
        for (r, &k) in keep.iter().enumerate() {
            if k {
                data[r * cols..(r + 1) * cols].copy_from_slice(t.row_slice(r));
            }
        }
        let value = Tensor::new(t.shape().to_vec(), data)?;
        Ok(self.push(value, Op::MaskRows(x, keep.to_vec()), false))
    }

    /// Row-wise layer normalization with learned gain and shift.
    pub fn layer_norm(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        eps: f64,
    ) -> Result<Var, AutodiffError> {
        self.check(x, "layer-norm")?;
        self.check(gamma, "layer-norm")?;
        self.check(beta, "layer-norm")?;
        let (tx, tg, tb) =
            (&self.nodes[x.id].value, &self.nodes[gamma.id].value, &self.nodes[beta.id].value);
        let d = tx.cols();
        if tg.shape() != [d] || tb.shape() != [d] {
            return Err(mismatch(
                "layer-norm",
                format!("x {:?}, gamma {:?}, beta {:?}", tx.shape(), tg.shape(), tb.shape()),
            ));
        }
        let rows = tx.rows();
        let mut data = vec![0.0; tx.numel()];
        for r in 0..rows {
            let row = tx.row_slice(r);
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let inv = 1.0 / (var + eps).sqrt();
            let out = &mut data[r * d..(r + 1) * d];
            for j in 0..d {
                out[j] = (row[j] - mean) * inv * tg.data()[j] + tb.data()[j];
            }
        }
        let value = Tensor::new(tx.shape().to_vec(), data)?;
        Ok(self.push(value, Op::LayerNorm { x, gamma, beta, eps }, false))
    }

    /// Dispatch a kernel by tag. Tags taking an argument carry it after a
    /// colon, e.g. `mean-over-axis:0` and `scalar-scale:2.5`.
    pub fn forward_kernel(&mut self, tag: &str, inputs: &[Var]) -> Result<Var, AutodiffError> {
        let (name, arg) = match tag.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (tag, None),
        };
        let want = |n: usize| -> Result<(), AutodiffError> {
            if inputs.len() != n {
                return Err(AutodiffError::ShapeMismatch {
                    kernel: "forward_kernel",
                    detail: format!("`{tag}` takes {n} inputs, got {}", inputs.len()),
                });
            }
            Ok(())
        };
        match name {
            "matmul" => {
                want(2)?;
                self.matmul(inputs[0], inputs[1])
            }
            "add" => {
                want(2)?;
                self.add(inputs[0], inputs[1])
            }
            "elementwise-multiply" => {
                want(2)?;
                self.mul(inputs[0], inputs[1])
            }
            "concat-last-axis" => self.concat_cols(inputs),
            "relu" => {
                want(1)?;
                self.relu(inputs[0])
            }
            "tanh" => {
                want(1)?;
                self.tanh(inputs[0])
            }
            "sigmoid" => {
                want(1)?;
                self.sigmoid(inputs[0])
            }
            "softmax-last-axis" => {
                want(1)?;
                self.softmax_last(inputs[0])
            }
            "mean-over-axis" => {
                want(1)?;
                let axis: usize = arg
                    .and_then(|a| a.parse().ok())
                    .ok_or_else(|| AutodiffError::UnknownKernel(tag.to_string()))?;
                self.mean_axis(inputs[0], axis)
            }
            "transpose" => {
                want(1)?;
                self.transpose(inputs[0])
            }
            "scalar-scale" => {
                want(1)?;
                let factor: f64 = arg
                    .and_then(|a| a.parse().ok())
                    .ok_or_else(|| AutodiffError::UnknownKernel(tag.to_string()))?;
                self.scale(inputs[0], factor)
            }
            _ => Err(AutodiffError::UnknownKernel(tag.to_string())),
        }
    }

    // ── backward ─────────────────────────────────────────────────────

    fn add_grad(&mut self, var: Var, contribution: &[f64]) {
        let node = &mut self.nodes[var.id];
        let grad = node.grad.get_or_insert_with(|| vec![0.0; node.value.numel()]);
        for (g, &c) in grad.iter_mut().zip(contribution) {
            *g += c;
        }
    }

    /// Reverse sweep from a scalar loss. Every node reachable from the loss
    /// gets its gradient populated; parameters left unreachable get zeros.
    pub fn backward(&mut self, loss: Var) -> Result<(), AutodiffError> {
        if loss.id >= self.nodes.len() {
            return Err(AutodiffError::ForeignVar);
        }
        if self.backward_done {
            return Err(AutodiffError::BackwardRepeated);
        }
        let loss_shape = self.nodes[loss.id].value.shape().to_vec();
        if self.nodes[loss.id].value.numel() != 1 {
            return Err(AutodiffError::NonScalarLoss(loss_shape));
        }
        self.backward_done = true;
        self.nodes[loss.id].grad = Some(vec![1.0]);

        for id in (0..=loss.id).rev() {
            let Some(grad) = self.nodes[id].grad.take() else { continue };
            let op = std::mem::replace(&mut self.nodes[id].op, Op::Leaf);
            self.propagate(&op, id, &grad);
            self.nodes[id].op = op;
            self.nodes[id].grad = Some(grad);
        }

        for node in &mut self.nodes {
            if node.is_param && node.grad.is_none() {
                node.grad = Some(vec![0.0; node.value.numel()]);
            }
        }
        Ok(())
    }

    /// Clear all gradients so another backward pass may run.
    pub fn reset_grads(&mut self) {
        for node in &mut self.nodes {
            node.grad = None;
        }
        self.backward_done = false;
    }

    /// Drop every node past `len`, invalidating their handles. Lets callers
    /// that only read forward values (evaluation loops) reuse one tape and
    /// its leaves without regrowing it per example.
    pub fn truncate(&mut self, len: usize) {
        self.nodes.truncate(len);
    }

    fn propagate(&mut self, op: &Op, id: usize, g: &[f64]) {
        match *op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = {
                    let s = self.nodes[a.id].value.shape();
                    (s[0], s[1])
                };
                let n = self.nodes[b.id].value.shape()[1];
                // dA = g . B^T
                let mut da = vec![0.0; m * k];
                {
                    let bd = self.nodes[b.id].value.data();
                    for i in 0..m {
                        for p in 0..k {
                            let mut s = 0.0;
                            for j in 0..n {
                                s += g[i * n + j] * bd[p * n + j];
                            }
                            da[i * k + p] = s;
                        }
                    }
                }
                self.add_grad(a, &da);
                // dB = A^T . g
                let mut db = vec![0.0; k * n];
                {
                    let ad = self.nodes[a.id].value.data();
                    for i in 0..m {
                        let gi = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let a_ip = ad[i * k + p];
                            if a_ip == 0.0 {
                                continue;
                            }
                            let db_row = &mut db[p * n..(p + 1) * n];
                            for (d, &gv) in db_row.iter_mut().zip(gi) {
                                *d += a_ip * gv;
                            }
                        }
                    }
                }
                self.add_grad(b, &db);
            }
            Op::Add(a, b) => {
                self.add_grad(a, g);
                let tb = &self.nodes[b.id].value;
                if tb.numel() == g.len() {
                    self.add_grad(b, g);
                } else {
                    // bias broadcast: reduce over rows
                    let cols = tb.numel();
                    let mut db = vec![0.0; cols];
                    for (i, &gv) in g.iter().enumerate() {
                        db[i % cols] += gv;
                    }
                    self.add_grad(b, &db);
                }
            }
            Op::Mul(a, b) => {
                let da: Vec<f64> =
                    g.iter().zip(self.nodes[b.id].value.data()).map(|(gv, bv)| gv * bv).collect();
                self.add_grad(a, &da);
                let db: Vec<f64> =
                    g.iter().zip(self.nodes[a.id].value.data()).map(|(gv, av)| gv * av).collect();
                self.add_grad(b, &db);
            }
            Op::ConcatCols(ref inputs) => {
                let rows = self.nodes[id].value.rows();
                let out_cols = self.nodes[id].value.cols();
                let mut offset = 0;
                for &v in inputs {
                    let cols = self.nodes[v.id].value.cols();
                    let mut dv = vec![0.0; rows * cols];
                    for r in 0..rows {
                        dv[r * cols..(r + 1) * cols]
                            .copy_from_slice(&g[r * out_cols + offset..r * out_cols + offset + cols]);
                    }
                    self.add_grad(v, &dv);
                    offset += cols;
                }
            }
            Op::ConcatRows(ref inputs) => {
                let cols = self.nodes[id].value.cols();
                let mut offset = 0;
                for &v in inputs {
                    let rows = self.nodes[v.id].value.shape()[0];
                    self.add_grad(v, &g[offset * cols..(offset + rows) * cols]);
                    offset += rows;
                }
            }
            Op::Relu(x) => {
                let dx: Vec<f64> = g
                    .iter()
                    .zip(self.nodes[x.id].value.data())
                    .map(|(gv, &xv)| if xv > 0.0 { *gv } else { 0.0 })
                    .collect();
                self.add_grad(x, &dx);
            }
            Op::Tanh(x) => {
                let dx: Vec<f64> = g
                    .iter()
                    .zip(self.nodes[id].value.data())
                    .map(|(gv, &yv)| gv * (1.0 - yv * yv))
                    .collect();
                self.add_grad(x, &dx);
            }
            Op::Sigmoid(x) => {
                let dx: Vec<f64> = g
                    .iter()
                    .zip(self.nodes[id].value.data())
                    .map(|(gv, &yv)| gv * yv * (1.0 - yv))
                    .collect();
                self.add_grad(x, &dx);
            }
            Op::SoftmaxLast(x) => {
                let y = &self.nodes[id].value;
                let (rows, cols) = (y.rows(), y.cols());
                let mut dx = vec![0.0; y.numel()];
                for r in 0..rows {
                    let yr = y.row_slice(r);
                    let gr = &g[r * cols..(r + 1) * cols];
                    let dot: f64 = yr.iter().zip(gr).map(|(yv, gv)| yv * gv).sum();
                    let out = &mut dx[r * cols..(r + 1) * cols];
                    for j in 0..cols {
                        out[j] = yr[j] * (gr[j] - dot);
                    }
                }
                self.add_grad(x, &dx);
            }
            Op::LogSoftmaxLast(x) => {
                let y = &self.nodes[id].value;
                let (rows, cols) = (y.rows(), y.cols());
                let mut dx = vec![0.0; y.numel()];
                for r in 0..rows {
                    let yr = y.row_slice(r);
                    let gr = &g[r * cols..(r + 1) * cols];
                    let sum: f64 = gr.iter().sum();
                    let out = &mut dx[r * cols..(r + 1) * cols];
                    for j in 0..cols {
                        out[j] = gr[j] - yr[j].exp() * sum;
                    }
                }
                self.add_grad(x, &dx);
            }
            Op::MeanAxis(x, axis) | Op::SumAxis(x, axis) => {
                let (n, d) = {
                    let s = self.nodes[x.id].value.shape();
                    (s[0], s[1])
                };
                let mean = matches!(op, Op::MeanAxis(..));
                let mut dx = vec![0.0; n * d];
                if axis == 0 {
                    let scale = if mean { 1.0 / n as f64 } else { 1.0 };
                    for r in 0..n {
                        for j in 0..d {
                            dx[r * d + j] = g[j] * scale;
                        }
                    }
                } else {
                    let scale = if mean { 1.0 / d as f64 } else { 1.0 };
                    for r in 0..n {
                        for j in 0..d {
                            dx[r * d + j] = g[r] * scale;
                        }
                    }
                }
                self.add_grad(x, &dx);
            }
            Op::SumAll(x) => {
                let dx = vec![g[0]; self.nodes[x.id].value.numel()];
                self.add_grad(x, &dx);
            }
            Op::Transpose(x) => {
                let (n, d) = {
                    let s = self.nodes[x.id].value.shape();
                    (s[0], s[1])
                };
                let mut dx = vec![0.0; n * d];
                for i in 0..n {
                    for j in 0..d {
                        dx[i * d + j] = g[j * n + i];
                    }
                }
                self.add_grad(x, &dx);
            }
            Op::Scale(x, factor) => {
                let dx: Vec<f64> = g.iter().map(|gv| gv * factor).collect();
                self.add_grad(x, &dx);
            }
            Op::Row(x, index) => {
                let t = &self.nodes[x.id].value;
                let (n, d) = (t.shape()[0], t.shape()[1]);
                let mut dx = vec![0.0; n * d];
                dx[index * d..(index + 1) * d].copy_from_slice(g);
                self.add_grad(x, &dx);
            }
            Op::SliceCols(x, from, to) => {
                let t = &self.nodes[x.id].value;
                let (n, d) = (t.shape()[0], t.shape()[1]);
                let w = to - from;
                let mut dx = vec![0.0; n * d];
                for r in 0..n {
                    dx[r * d + from..r * d + to].copy_from_slice(&g[r * w..(r + 1) * w]);
                }
                self.add_grad(x, &dx);
            }
            Op::GatherRows(x, ref ids) => {
                let t = &self.nodes[x.id].value;
                let (n, d) = (t.shape()[0], t.shape()[1]);
                let mut dx = vec![0.0; n * d];
                for (r, &i) in ids.iter().enumerate() {
                    for j in 0..d {
                        dx[i * d + j] += g[r * d + j];
                    }
                }
                self.add_grad(x, &dx);
            }
            Op::MaskRows(x, ref keep) => {
                let cols = self.nodes[x.id].value.cols();
                let mut dx = vec![0.0; self.nodes[x.id].value.numel()];
                for (r, &k) in keep.iter().enumerate() {
                    if k {
                        dx[r * cols..(r + 1) * cols].copy_from_slice(&g[r * cols..(r + 1) * cols]);
                    }
                }
                self.add_grad(x, &dx);
            }
            Op::LayerNorm { x, gamma, beta, eps } => {
                let tx = &self.nodes[x.id].value;
                let tg = &self.nodes[gamma.id].value;
                let (rows, d) = (tx.rows(), tx.cols());
                let mut dx = vec![0.0; tx.numel()];
                let mut dgamma = vec![0.0; d];
                let mut dbeta = vec![0.0; d];
                for r in 0..rows {
                    let row = tx.row_slice(r);
                    let gr = &g[r * d..(r + 1) * d];
                    let mean = row.iter().sum::<f64>() / d as f64;
                    let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
                    let inv = 1.0 / (var + eps).sqrt();
                    // normalized row and the gain-scaled upstream gradient
                    let xhat: Vec<f64> = row.iter().map(|&v| (v - mean) * inv).collect();
                    let gxh: Vec<f64> = gr.iter().zip(tg.data()).map(|(gv, gam)| gv * gam).collect();
                    let m1 = gxh.iter().sum::<f64>() / d as f64;
                    let m2 = gxh.iter().zip(&xhat).map(|(a, b)| a * b).sum::<f64>() / d as f64;
                    for j in 0..d {
                        dx[r * d + j] = (gxh[j] - m1 - xhat[j] * m2) * inv;
                        dgamma[j] += gr[j] * xhat[j];
                        dbeta[j] += gr[j];
                    }
                }
                self.add_grad(x, &dx);
                self.add_grad(gamma, &dgamma);
                self.add_grad(beta, &dbeta);
            }
        }
    }
}
