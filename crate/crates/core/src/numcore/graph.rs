//! Dynamic computation graph with reverse-mode differentiation.
//!
//! A [`Graph`] borrows a [`ParamStore`] read-only, records every operation in
//! creation order (which is therefore a topological order) and is dropped after
//! one optimization step.

use super::params::{Gradients, ParamStore};
use super::tensor::{gemm, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Debug)]
enum Op {
    Param(usize),
    Input,
    MatMul { a: NodeId, b: NodeId, trans_b: bool },
    AddBias { a: NodeId, bias: NodeId },
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    AddScalar(NodeId),
    MulConst(NodeId, Vec<f64>),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    Log1mExp { a: NodeId, clamped: Vec<bool> },
    LogSoftmax(NodeId),
    SliceCols { a: NodeId, start: usize },
    SliceRows { a: NodeId, start: usize },
    ConcatRows(Vec<NodeId>),
    GatherRows { a: NodeId, rows: Vec<usize> },
    Embedding { table: NodeId, ids: Vec<usize> },
    Pick { a: NodeId, flat: Vec<usize> },
    SegmentSum { a: NodeId, segments: Vec<usize> },
    WeightedSum { a: NodeId, weights: Vec<f64> },
    Sum(NodeId),
}

#[derive(Debug)]
struct Node {
    op: Op,
    /// `None` for parameter leaves, whose value lives in the store.
    value: Option<Tensor>,
}

/// Smallest `1 - p` allowed inside `log(1 - p)`.
pub const ONE_MINUS_P_FLOOR: f64 = 1e-12;

pub struct Graph<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_nodes: Vec<Option<NodeId>>,
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Graph {
            params,
            nodes: Vec::new(),
            param_nodes: vec![None; params.len()],
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        match &self.nodes[id.0] {
            Node {
                op: Op::Param(i),
                value: None,
            } => self.params.by_index(*i),
            Node { value: Some(v), .. } => v,
            _ => unreachable!("node without value"),
        }
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        self.nodes.push(Node {
            op,
            value: Some(value),
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Leaf node for a named parameter; repeated calls return the same node.
    pub fn param(&mut self, name: &str) -> Result<NodeId> {
        let i = self.params.index_of(name)?;
        if let Some(id) = self.param_nodes[i] {
            return Ok(id);
        }
        self.nodes.push(Node {
            op: Op::Param(i),
            value: None,
        });
        let id = NodeId(self.nodes.len() - 1);
        self.param_nodes[i] = Some(id);
        Ok(id)
    }

    /// Constant leaf; receives no gradient.
    pub fn input(&mut self, t: Tensor) -> NodeId {
        self.push(Op::Input, t)
    }

    fn dims2(&self, id: NodeId) -> Result<(usize, usize)> {
        let s = self.value(id).shape();
        match s.len() {
            2 => Ok((s[0], s[1])),
            1 => Ok((1, s[0])),
            _ => Err(Error::Shape(format!("expected a matrix, got {s:?}"))),
        }
    }

    /// `a · b`, or `a · bᵀ` when `trans_b`.
    pub fn matmul(&mut self, a: NodeId, b: NodeId, trans_b: bool) -> Result<NodeId> {
        let (m, k) = self.dims2(a)?;
        let (br, bc) = self.dims2(b)?;
        let (kb, n) = if trans_b { (bc, br) } else { (br, bc) };
        if k != kb {
            return Err(Error::Shape(format!(
                "matmul [{m}, {k}] x [{kb}, {n}]"
            )));
        }
        let mut out = vec![0.0; m * n];
        gemm(
            m,
            k,
            n,
            self.value(a).data(),
            false,
            self.value(b).data(),
            trans_b,
            &mut out,
            false,
        );
        Ok(self.push(
            Op::MatMul { a, b, trans_b },
            Tensor::from_parts(vec![m, n], out),
        ))
    }

    /// Adds a length-`n` bias to every row of an `[m, n]` matrix.
    pub fn add_bias(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        let (_, n) = self.dims2(a)?;
        if self.value(bias).len() != n {
            return Err(Error::Shape(format!(
                "bias of length {} for {n} columns",
                self.value(bias).len()
            )));
        }
        let b = self.value(bias).data();
        let mut out = self.value(a).data().to_vec();
        for row in out.chunks_mut(n) {
            for (x, y) in row.iter_mut().zip(b) {
                *x += y;
            }
        }
        let shape = self.value(a).shape().to_vec();
        Ok(self.push(Op::AddBias { a, bias }, Tensor::from_parts(shape, out)))
    }

    fn zip_same(&self, a: NodeId, b: NodeId, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (ta, tb) = (self.value(a), self.value(b));
        if !ta.same_shape(tb) {
            return Err(Error::Shape(format!(
                "{:?} vs {:?}",
                ta.shape(),
                tb.shape()
            )));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| f(*x, *y)).collect();
        Ok(Tensor::from_parts(ta.shape().to_vec(), data))
    }

    fn map(&self, a: NodeId, f: impl Fn(f64) -> f64) -> Tensor {
        let t = self.value(a);
        Tensor::from_parts(t.shape().to_vec(), t.data().iter().map(|x| f(*x)).collect())
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.zip_same(a, b, |x, y| x + y)?;
        Ok(self.push(Op::Add(a, b), v))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.zip_same(a, b, |x, y| x - y)?;
        Ok(self.push(Op::Sub(a, b), v))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.zip_same(a, b, |x, y| x * y)?;
        Ok(self.push(Op::Mul(a, b), v))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.map(a, |x| x * c);
        self.push(Op::Scale(a, c), v)
    }

    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.map(a, |x| x + c);
        self.push(Op::AddScalar(a), v)
    }

    /// Element-wise product with a constant of the same size (dropout masks, padding masks).
    pub fn mul_const(&mut self, a: NodeId, c: Vec<f64>) -> Result<NodeId> {
        let t = self.value(a);
        if t.len() != c.len() {
            return Err(Error::Shape(format!(
                "constant of length {} for tensor {:?}",
                c.len(),
                t.shape()
            )));
        }
        let data = t.data().iter().zip(&c).map(|(x, m)| x * m).collect();
        let v = Tensor::from_parts(t.shape().to_vec(), data);
        Ok(self.push(Op::MulConst(a, c), v))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let v = self.map(a, sigmoid);
        self.push(Op::Sigmoid(a), v)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.map(a, f64::tanh);
        self.push(Op::Tanh(a), v)
    }

    /// `max(0, x)`; the derivative at exactly 0 is taken as 0.
    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let v = self.map(a, |x| if x > 0.0 { x } else { 0.0 });
        self.push(Op::Relu(a), v)
    }

    /// `log(1 - exp(x))` for log-probabilities `x`, with `1 - exp(x)` floored at
    /// [`ONE_MINUS_P_FLOOR`]. Clamped entries pass no gradient.
    pub fn log1m_exp(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let mut clamped = Vec::with_capacity(t.len());
        let data = t
            .data()
            .iter()
            .map(|&x| {
                let (v, c) = log1m_exp_clamped(x);
                clamped.push(c);
                v
            })
            .collect();
        let v = Tensor::from_parts(t.shape().to_vec(), data);
        self.push(Op::Log1mExp { a, clamped }, v)
    }

    /// Row-wise log-softmax of a matrix (a vector is treated as one row).
    pub fn log_softmax(&mut self, a: NodeId) -> Result<NodeId> {
        let t = self.value(a);
        let cols = t.cols();
        let mut out = Vec::with_capacity(t.len());
        for row in t.data().chunks(cols) {
            out.extend(log_softmax(row)?);
        }
        let v = Tensor::from_parts(t.shape().to_vec(), out);
        Ok(self.push(Op::LogSoftmax(a), v))
    }

    /// Columns `start..start + width` of a matrix.
    pub fn slice_cols(&mut self, a: NodeId, start: usize, width: usize) -> Result<NodeId> {
        let (m, n) = self.dims2(a)?;
        if start + width > n || width == 0 {
            return Err(Error::Shape(format!(
                "column slice {start}..{} of {n}",
                start + width
            )));
        }
        let src = self.value(a).data();
        let mut out = Vec::with_capacity(m * width);
        for r in 0..m {
            out.extend_from_slice(&src[r * n + start..r * n + start + width]);
        }
        Ok(self.push(
            Op::SliceCols { a, start },
            Tensor::from_parts(vec![m, width], out),
        ))
    }

    /// Rows `start..start + count` of a matrix.
    pub fn slice_rows(&mut self, a: NodeId, start: usize, count: usize) -> Result<NodeId> {
        let (m, n) = self.dims2(a)?;
        if start + count > m || count == 0 {
            return Err(Error::Shape(format!(
                "row slice {start}..{} of {m}",
                start + count
            )));
        }
        let out = self.value(a).data()[start * n..(start + count) * n].to_vec();
        Ok(self.push(
            Op::SliceRows { a, start },
            Tensor::from_parts(vec![count, n], out),
        ))
    }

    /// Stacks matrices with equal column counts vertically.
    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::Shape("concat of zero tensors".into()));
        }
        let (_, n) = self.dims2(parts[0])?;
        let mut out = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let (m, c) = self.dims2(p)?;
            if c != n {
                return Err(Error::Shape(format!("concat of {c} and {n} columns")));
            }
            rows += m;
            out.extend_from_slice(self.value(p).data());
        }
        Ok(self.push(
            Op::ConcatRows(parts.to_vec()),
            Tensor::from_parts(vec![rows, n], out),
        ))
    }

    /// Selects rows of a matrix (repeats allowed).
    pub fn gather_rows(&mut self, a: NodeId, rows: Vec<usize>) -> Result<NodeId> {
        let (m, n) = self.dims2(a)?;
        if rows.is_empty() {
            return Err(Error::Shape("gather of zero rows".into()));
        }
        let src = self.value(a).data();
        let mut out = Vec::with_capacity(rows.len() * n);
        for &r in &rows {
            if r >= m {
                return Err(Error::Shape(format!("row {r} of {m}")));
            }
            out.extend_from_slice(&src[r * n..(r + 1) * n]);
        }
        let shape = vec![rows.len(), n];
        Ok(self.push(Op::GatherRows { a, rows }, Tensor::from_parts(shape, out)))
    }

    /// Looks up rows of an embedding table by token id.
    pub fn embedding(&mut self, table: NodeId, ids: &[usize]) -> Result<NodeId> {
        let (v, _) = self.dims2(table)?;
        if let Some(&id) = ids.iter().find(|&&id| id >= v) {
            return Err(Error::TokenOutOfRange { id, vocab: v });
        }
        let node = self.gather_rows(table, ids.to_vec())?;
        // Re-tag the gather as an embedding lookup: identical forward, sparse backward.
        let last = self.nodes.last_mut().unwrap();
        last.op = Op::Embedding {
            table,
            ids: ids.to_vec(),
        };
        Ok(node)
    }

    /// Picks `(row, col)` entries of a matrix into a vector.
    pub fn pick(&mut self, a: NodeId, entries: &[(usize, usize)]) -> Result<NodeId> {
        let (m, n) = self.dims2(a)?;
        if entries.is_empty() {
            return Err(Error::Shape("pick of zero entries".into()));
        }
        let mut flat = Vec::with_capacity(entries.len());
        for &(r, c) in entries {
            if r >= m || c >= n {
                return Err(Error::Shape(format!("entry ({r}, {c}) of [{m}, {n}]")));
            }
            flat.push(r * n + c);
        }
        let src = self.value(a).data();
        let out: Vec<f64> = flat.iter().map(|&i| src[i]).collect();
        let v = Tensor::from_parts(vec![out.len()], out);
        Ok(self.push(Op::Pick { a, flat }, v))
    }

    /// Sums vector entries into `num_segments` buckets given per-entry segment ids.
    pub fn segment_sum(
        &mut self,
        a: NodeId,
        segments: Vec<usize>,
        num_segments: usize,
    ) -> Result<NodeId> {
        let t = self.value(a);
        if segments.len() != t.len() || num_segments == 0 {
            return Err(Error::Shape(format!(
                "{} segment ids for {} values",
                segments.len(),
                t.len()
            )));
        }
        let mut out = vec![0.0; num_segments];
        for (&s, &x) in segments.iter().zip(t.data()) {
            if s >= num_segments {
                return Err(Error::Shape(format!("segment {s} of {num_segments}")));
            }
            out[s] += x;
        }
        let v = Tensor::from_parts(vec![num_segments], out);
        Ok(self.push(Op::SegmentSum { a, segments }, v))
    }

    /// `Σ wᵢ·aᵢ` as a scalar.
    pub fn weighted_sum(&mut self, a: NodeId, weights: Vec<f64>) -> Result<NodeId> {
        let t = self.value(a);
        if weights.len() != t.len() {
            return Err(Error::Shape(format!(
                "{} weights for {} values",
                weights.len(),
                t.len()
            )));
        }
        let s = t.data().iter().zip(&weights).map(|(x, w)| x * w).sum();
        Ok(self.push(Op::WeightedSum { a, weights }, Tensor::scalar(s)))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let s = self.value(a).data().iter().sum();
        self.push(Op::Sum(a), Tensor::scalar(s))
    }

    /// Gradients of a scalar node with respect to every parameter of the store.
    ///
    /// Parameters that the loss does not depend on get exact zeros.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        let lv = self.value(loss);
        if !lv.is_scalar() {
            return Err(Error::NotScalar(lv.shape().to_vec()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = Vec::with_capacity(loss.0 + 1);
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(vec![1.0]);
        let mut out = Gradients::zeros_like(self.params);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            let y = node.value.as_ref();
            match &node.op {
                Op::Param(i) => {
                    for (x, d) in out.by_index_mut(*i).data_mut().iter_mut().zip(&g) {
                        *x += d;
                    }
                }
                Op::Input => {}
                Op::MatMul { a, b, trans_b } => {
                    let (m, k) = self.dims2(*a)?;
                    let n = g.len() / m;
                    let av = self.value(*a).data();
                    let bv = self.value(*b).data();
                    // dA = G · Bᵀ  (B is [k, n]; when trans_b it is stored [n, k])
                    let ga = slot(&mut grads, *a, m * k);
                    gemm(m, n, k, &g, false, bv, !*trans_b, ga, true);
                    if *trans_b {
                        // B stored [n, k]: dB = Gᵀ · A
                        let gb = slot(&mut grads, *b, n * k);
                        gemm(n, m, k, &g, true, av, false, gb, true);
                    } else {
                        let gb = slot(&mut grads, *b, k * n);
                        gemm(k, m, n, av, true, &g, false, gb, true);
                    }
                }
                Op::AddBias { a, bias } => {
                    let n = self.value(*bias).len();
                    {
                        let gb = slot(&mut grads, *bias, n);
                        for row in g.chunks(n) {
                            for (x, d) in gb.iter_mut().zip(row) {
                                *x += d;
                            }
                        }
                    }
                    add_into(slot(&mut grads, *a, g.len()), &g);
                }
                Op::Add(a, b) => {
                    add_into(slot(&mut grads, *a, g.len()), &g);
                    add_into(slot(&mut grads, *b, g.len()), &g);
                }
                Op::Sub(a, b) => {
                    add_into(slot(&mut grads, *a, g.len()), &g);
                    for (x, d) in slot(&mut grads, *b, g.len()).iter_mut().zip(&g) {
                        *x -= d;
                    }
                }
                Op::Mul(a, b) => {
                    let av = self.value(*a).data();
                    let bv = self.value(*b).data();
                    for ((x, d), w) in slot(&mut grads, *a, g.len()).iter_mut().zip(&g).zip(bv) {
                        *x += d * w;
                    }
                    for ((x, d), w) in slot(&mut grads, *b, g.len()).iter_mut().zip(&g).zip(av) {
                        *x += d * w;
                    }
                }
                Op::Scale(a, c) => {
                    for (x, d) in slot(&mut grads, *a, g.len()).iter_mut().zip(&g) {
                        *x += d * c;
                    }
                }
                Op::AddScalar(a) => add_into(slot(&mut grads, *a, g.len()), &g),
                Op::MulConst(a, c) => {
                    for ((x, d), m) in slot(&mut grads, *a, g.len()).iter_mut().zip(&g).zip(c) {
                        *x += d * m;
                    }
                }
                Op::Sigmoid(a) => {
                    let yv = y.unwrap().data();
                    for ((x, d), s) in slot(&mut grads, *a, g.len()).iter_mut().zip(&g).zip(yv) {
                        *x += d * s * (1.0 - s);
                    }
                }
                Op::Tanh(a) => {
                    let yv = y.unwrap().data();
                    for ((x, d), t) in slot(&mut grads, *a, g.len()).iter_mut().zip(&g).zip(yv) {
                        *x += d * (1.0 - t * t);
                    }
                }
                Op::Relu(a) => {
                    let av = self.value(*a).data();
                    for ((x, d), v) in slot(&mut grads, *a, g.len()).iter_mut().zip(&g).zip(av) {
                        if *v > 0.0 {
                            *x += d;
                        }
                    }
                }
                Op::Log1mExp { a, clamped } => {
                    // d/dx log(1 - e^x) = -e^x / (1 - e^x)
                    let av = self.value(*a).data();
                    let ga = slot(&mut grads, *a, g.len());
                    for i in 0..g.len() {
                        if !clamped[i] {
                            let p = av[i].exp();
                            ga[i] -= g[i] * p / (1.0 - p);
                        }
                    }
                }
                Op::LogSoftmax(a) => {
                    // dx = g - softmax · Σg, per row
                    let yt = y.unwrap();
                    let cols = yt.cols();
                    let ga = slot(&mut grads, *a, g.len());
                    for ((gr, yr), xr) in g
                        .chunks(cols)
                        .zip(yt.data().chunks(cols))
                        .zip(ga.chunks_mut(cols))
                    {
                        let total: f64 = gr.iter().sum();
                        for j in 0..cols {
                            xr[j] += gr[j] - yr[j].exp() * total;
                        }
                    }
                }
                Op::SliceCols { a, start } => {
                    let (m, n) = self.dims2(*a)?;
                    let width = g.len() / m;
                    let ga = slot(&mut grads, *a, m * n);
                    for r in 0..m {
                        let dst = &mut ga[r * n + start..r * n + start + width];
                        add_into(dst, &g[r * width..(r + 1) * width]);
                    }
                }
                Op::SliceRows { a, start } => {
                    let (m, n) = self.dims2(*a)?;
                    let ga = slot(&mut grads, *a, m * n);
                    add_into(&mut ga[start * n..start * n + g.len()], &g);
                }
                Op::ConcatRows(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let len = self.value(*p).len();
                        add_into(slot(&mut grads, *p, len), &g[off..off + len]);
                        off += len;
                    }
                }
                Op::GatherRows { a: src, rows }
                | Op::Embedding {
                    table: src,
                    ids: rows,
                } => {
                    let (m, n) = self.dims2(*src)?;
                    let ga = slot(&mut grads, *src, m * n);
                    for (i, &r) in rows.iter().enumerate() {
                        add_into(&mut ga[r * n..(r + 1) * n], &g[i * n..(i + 1) * n]);
                    }
                }
                Op::Pick { a, flat } => {
                    let len = self.value(*a).len();
                    let ga = slot(&mut grads, *a, len);
                    for (&i, d) in flat.iter().zip(&g) {
                        ga[i] += d;
                    }
                }
                Op::SegmentSum { a, segments } => {
                    let ga = slot(&mut grads, *a, segments.len());
                    for (x, &s) in ga.iter_mut().zip(segments) {
                        *x += g[s];
                    }
                }
                Op::WeightedSum { a, weights } => {
                    let ga = slot(&mut grads, *a, weights.len());
                    for (x, w) in ga.iter_mut().zip(weights) {
                        *x += g[0] * w;
                    }
                }
                Op::Sum(a) => {
                    let len = self.value(*a).len();
                    for x in slot(&mut grads, *a, len).iter_mut() {
                        *x += g[0];
                    }
                }
            }
        }
        Ok(out)
    }
}

fn slot(grads: &mut [Option<Vec<f64>>], id: NodeId, len: usize) -> &mut [f64] {
    grads[id.0].get_or_insert_with(|| vec![0.0; len])
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (x, y) in dst.iter_mut().zip(src) {
        *x += y;
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 - exp(x))` with the argument of the log floored at [`ONE_MINUS_P_FLOOR`].
/// Returns the value and whether the floor was hit.
pub fn log1m_exp_clamped(x: f64) -> (f64, bool) {
    let p = x.exp();
    if p > 1.0 - ONE_MINUS_P_FLOOR {
        (ONE_MINUS_P_FLOOR.ln(), true)
    } else if x < -std::f64::consts::LN_2 {
        ((-p).ln_1p(), false)
    } else {
        ((-x.exp_m1()).ln(), false)
    }
}

/// Numerically stable `x - logsumexp(x)`.
pub fn log_softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    Ok(logits.iter().map(|x| x - lse).collect())
}
