use std::sync::Arc;

use ndarray::{s, Axis};

use super::Matrix;
use crate::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Hadamard(Var, Var),
    AddRow(Var, Var),
    MulCol(Var, Var),
    DivCol(Var, Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    RowGather(Var, Arc<[usize]>),
    RowScatterAdd(Var, Arc<[usize]>),
    EdgeAggregate(Var, Arc<[usize]>, Arc<[usize]>, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    MaxScalar(Var, f64),
    MeanRows(Var),
    SumCols(Var),
    SumAll(Var),
    Bce(Var, Matrix),
    BinaryEntropy(Var),
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
    requires_grad: bool,
}

/// Records operations for one forward/backward pass.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Matrix>>,
    backward_done: bool,
}

const BCE_CLAMP: f64 = 1e-12;
const BCE_RANGE_TOLERANCE: f64 = 1e-9;

fn shape_err(op: &str, a: (usize, usize), b: (usize, usize)) -> Error {
    Error::Shape(format!("{op}: {a:?} vs {b:?}"))
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// A constant input; no gradient is tracked.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// A differentiable leaf.
    pub fn param(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.dim()
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[[0, 0]]
    }

    /// Gradient of the last backward pass; `None` if the node does not depend
    /// on any parameter or backward has not run.
    pub fn grad(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.1 != sb.0 {
            return Err(shape_err("matmul", sa, sb));
        }
        let value = self.value(a).dot(self.value(b));
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    fn same_shape(&self, op: &str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(shape_err(op, sa, sb));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let value = self.value(a) + self.value(b);
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let value = self.value(a) - self.value(b);
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Sub(a, b), rg))
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("hadamard", a, b)?;
        let value = self.value(a) * self.value(b);
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Hadamard(a, b), rg))
    }

    /// `a (n×m) + row (1×m)` broadcast over rows, e.g. a bias.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (sa, sr) = (self.shape(a), self.shape(row));
        if sr.0 != 1 || sr.1 != sa.1 {
            return Err(shape_err("add_row", sa, sr));
        }
        let value = self.value(a) + self.value(row);
        let rg = self.rg(&[a, row]);
        Ok(self.push(value, Op::AddRow(a, row), rg))
    }

    /// Scales row `i` of `a` by `col[i]` (`col` is n×1).
    pub fn mul_col(&mut self, a: Var, col: Var) -> Result<Var> {
        let (sa, sc) = (self.shape(a), self.shape(col));
        if sc != (sa.0, 1) {
            return Err(shape_err("mul_col", sa, sc));
        }
        let value = scale_rows(self.value(a), self.value(col), false);
        let rg = self.rg(&[a, col]);
        Ok(self.push(value, Op::MulCol(a, col), rg))
    }

    /// Divides row `i` of `a` by `col[i]`.
    pub fn div_col(&mut self, a: Var, col: Var) -> Result<Var> {
        let (sa, sc) = (self.shape(a), self.shape(col));
        if sc != (sa.0, 1) {
            return Err(shape_err("div_col", sa, sc));
        }
        if self.value(col).iter().any(|&c| c == 0.0) {
            return Err(Error::Numerical("div_col by zero".into()));
        }
        let value = scale_rows(self.value(a), self.value(col), true);
        let rg = self.rg(&[a, col]);
        Ok(self.push(value, Op::DivCol(a, col), rg))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(Error::Shape("concat_cols of nothing".into()));
        };
        let rows = self.shape(first).0;
        for &p in parts {
            if self.shape(p).0 != rows {
                return Err(shape_err("concat_cols", self.shape(first), self.shape(p)));
            }
        }
        let views: Vec<_> = parts.iter().map(|p| self.value(*p).view()).collect();
        let value = ndarray::concatenate(Axis(1), &views).map_err(|e| Error::Shape(e.to_string()))?;
        let rg = self.rg(parts);
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), rg))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(Error::Shape("concat_rows of nothing".into()));
        };
        let cols = self.shape(first).1;
        for &p in parts {
            if self.shape(p).1 != cols {
                return Err(shape_err("concat_rows", self.shape(first), self.shape(p)));
            }
        }
        let views: Vec<_> = parts.iter().map(|p| self.value(*p).view()).collect();
        let value = ndarray::concatenate(Axis(0), &views).map_err(|e| Error::Shape(e.to_string()))?;
        let rg = self.rg(parts);
        Ok(self.push(value, Op::ConcatRows(parts.to_vec()), rg))
    }

    /// Output row `i` is row `index[i]` of `a`.
    pub fn row_gather(&mut self, a: Var, index: Arc<[usize]>) -> Result<Var> {
        let (n, m) = self.shape(a);
        if let Some(&bad) = index.iter().find(|&&i| i >= n) {
            return Err(Error::Shape(format!("row_gather index {bad} out of {n} rows")));
        }
        let value = gather_rows(self.value(a), &index, m);
        let rg = self.rg(&[a]);
        Ok(self.push(value, Op::RowGather(a, index), rg))
    }

    /// Output (`rows`×m) row `index[i]` accumulates row `i` of `a`.
    pub fn row_scatter_add(&mut self, a: Var, index: Arc<[usize]>, rows: usize) -> Result<Var> {
        let (n, m) = self.shape(a);
        if index.len() != n {
            return Err(Error::Shape(format!("row_scatter_add: {} indices for {n} rows", index.len())));
        }
        if let Some(&bad) = index.iter().find(|&&i| i >= rows) {
            return Err(Error::Shape(format!("row_scatter_add target {bad} out of {rows} rows")));
        }
        let value = scatter_rows(self.value(a), &index, rows, m);
        let rg = self.rg(&[a]);
        Ok(self.push(value, Op::RowScatterAdd(a, index), rg))
    }

    /// Weighted message sum over edges: output row `dst[e]` accumulates
    /// `weight[e] * h[src[e]]` (`weight` is E×1). Equivalent to gathering,
    /// scaling and scattering rows without the E×m intermediates.
    pub fn edge_aggregate(
        &mut self,
        h: Var,
        src: Arc<[usize]>,
        dst: Arc<[usize]>,
        weight: Var,
        rows: usize,
    ) -> Result<Var> {
        let (n, m) = self.shape(h);
        if src.len() != dst.len() || self.shape(weight) != (src.len(), 1) {
            return Err(Error::Shape(format!(
                "edge_aggregate: {} sources, {} targets, weight {:?}",
                src.len(),
                dst.len(),
                self.shape(weight)
            )));
        }
        if src.iter().any(|&i| i >= n) || dst.iter().any(|&i| i >= rows) {
            return Err(Error::Shape("edge_aggregate index out of range".into()));
        }
        let hv = self.value(h).as_standard_layout();
        let hf = hv.as_slice().expect("standard layout");
        let w = self.value(weight);
        let mut out = vec![0.0; rows * m];
        for (e, (&s, &d)) in src.iter().zip(dst.iter()).enumerate() {
            let we = w[[e, 0]];
            for (o, x) in out[d * m..(d + 1) * m].iter_mut().zip(&hf[s * m..(s + 1) * m]) {
                *o += we * x;
            }
        }
        let value = Matrix::from_shape_vec((rows, m), out).expect("sized above");
        let rg = self.rg(&[h, weight]);
        Ok(self.push(value, Op::EdgeAggregate(h, src, dst, weight), rg))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let value = self.value(a) * factor;
        let rg = self.rg(&[a]);
        self.push(value, Op::Scale(a, factor), rg)
    }

    pub fn add_scalar(&mut self, a: Var, offset: f64) -> Var {
        let value = self.value(a) + offset;
        let rg = self.rg(&[a]);
        self.push(value, Op::AddScalar(a), rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(sigmoid);
        let rg = self.rg(&[a]);
        self.push(value, Op::Sigmoid(a), rg)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(f64::tanh);
        let rg = self.rg(&[a]);
        self.push(value, Op::Tanh(a), rg)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(|x| x.max(0.0));
        let rg = self.rg(&[a]);
        self.push(value, Op::Relu(a), rg)
    }

    /// Elementwise `max(a, floor)`.
    pub fn max_scalar(&mut self, a: Var, floor: f64) -> Var {
        let value = self.value(a).mapv(|x| x.max(floor));
        let rg = self.rg(&[a]);
        self.push(value, Op::MaxScalar(a, floor), rg)
    }

    /// Column means as a 1×m row.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var> {
        if self.shape(a).0 == 0 {
            return Err(Error::Shape("mean_rows of an empty matrix".into()));
        }
        let value = self
            .value(a)
            .mean_axis(Axis(0))
            .expect("non-empty")
            .insert_axis(Axis(0));
        let rg = self.rg(&[a]);
        Ok(self.push(value, Op::MeanRows(a), rg))
    }

    /// Row sums as an n×1 column.
    pub fn sum_cols(&mut self, a: Var) -> Var {
        let value = self.value(a).sum_axis(Axis(1)).insert_axis(Axis(1));
        let rg = self.rg(&[a]);
        self.push(value, Op::SumCols(a), rg)
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let value = Matrix::from_elem((1, 1), self.value(a).sum());
        let rg = self.rg(&[a]);
        self.push(value, Op::SumAll(a), rg)
    }

    /// Mean binary cross-entropy of probabilities `p` against `labels`, with
    /// `p` clamped to `[1e-12, 1 - 1e-12]`.
    pub fn bce_loss(&mut self, p: Var, labels: Matrix) -> Result<Var> {
        let sp = self.shape(p);
        if sp != labels.dim() {
            return Err(shape_err("bce_loss", sp, labels.dim()));
        }
        if sp.0 * sp.1 == 0 {
            return Err(Error::Shape("bce_loss of an empty matrix".into()));
        }
        let probs = self.value(p);
        for (&x, &y) in probs.iter().zip(labels.iter()) {
            if !(-BCE_RANGE_TOLERANCE..=1.0 + BCE_RANGE_TOLERANCE).contains(&x) || x.is_nan() {
                return Err(Error::Invalid(format!("bce probability {x} outside [0, 1]")));
            }
            if !(0.0..=1.0).contains(&y) {
                return Err(Error::Invalid(format!("bce label {y} outside [0, 1]")));
            }
        }
        let count = (sp.0 * sp.1) as f64;
        let total: f64 = probs
            .iter()
            .zip(labels.iter())
            .map(|(&x, &y)| {
                let x = x.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
                -(y * x.ln() + (1.0 - y) * (1.0 - x).ln())
            })
            .sum();
        let rg = self.rg(&[p]);
        Ok(self.push(Matrix::from_elem((1, 1), total / count), Op::Bce(p, labels), rg))
    }

    /// Summed binary entropy `-p ln p - (1-p) ln(1-p)` over all entries.
    pub fn binary_entropy(&mut self, p: Var) -> Var {
        let total: f64 = self
            .value(p)
            .iter()
            .map(|&x| {
                let x = x.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
                -(x * x.ln() + (1.0 - x) * (1.0 - x).ln())
            })
            .sum();
        let rg = self.rg(&[p]);
        self.push(Matrix::from_elem((1, 1), total), Op::BinaryEntropy(p), rg)
    }

    pub fn zero_grad(&mut self) {
        self.grads.clear();
        self.backward_done = false;
    }

    /// Fills gradients of the scalar `loss` with respect to every node that
    /// depends on a parameter.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.backward_done {
            return Err(Error::BackwardTwice);
        }
        if self.shape(loss) != (1, 1) {
            return Err(Error::Shape(format!("backward needs a 1×1 loss, got {:?}", self.shape(loss))));
        }
        self.backward_done = true;
        self.grads = vec![None; self.nodes.len()];
        if !self.nodes[loss.0].requires_grad {
            return Ok(());
        }
        self.grads[loss.0] = Some(Matrix::from_elem((1, 1), 1.0));

        for idx in (0..=loss.0).rev() {
            if !self.nodes[idx].requires_grad {
                continue;
            }
            let Some(g) = self.grads[idx].take() else {
                continue;
            };
            self.propagate(idx, &g);
            self.grads[idx] = Some(g);
        }
        Ok(())
    }

    fn accumulate(&mut self, v: Var, contribution: Matrix) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut self.grads[v.0] {
            Some(existing) => *existing += &contribution,
            slot @ None => *slot = Some(contribution),
        }
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn propagate(&mut self, idx: usize, g: &Matrix) {
        let op = self.nodes[idx].op.clone();
        match op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.needs(a) {
                    let ga = g.dot(&self.value(b).t());
                    self.accumulate(a, ga);
                }
                if self.needs(b) {
                    let gb = self.value(a).t().dot(g);
                    self.accumulate(b, gb);
                }
            }
            Op::Add(a, b) => {
                self.accumulate(a, g.clone());
                self.accumulate(b, g.clone());
            }
            Op::Sub(a, b) => {
                self.accumulate(a, g.clone());
                self.accumulate(b, -g);
            }
            Op::Hadamard(a, b) => {
                if self.needs(a) {
                    let ga = g * self.value(b);
                    self.accumulate(a, ga);
                }
                if self.needs(b) {
                    let gb = g * self.value(a);
                    self.accumulate(b, gb);
                }
            }
            Op::AddRow(a, row) => {
                self.accumulate(a, g.clone());
                if self.needs(row) {
                    let gr = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    self.accumulate(row, gr);
                }
            }
            Op::MulCol(a, col) => {
                if self.needs(a) {
                    let ga = scale_rows(&g, self.value(col), false);
                    self.accumulate(a, ga);
                }
                if self.needs(col) {
                    let gc = row_dots(&g, self.value(a));
                    self.accumulate(col, gc);
                }
            }
            Op::DivCol(a, col) => {
                let c = self.value(col).clone();
                if self.needs(a) {
                    let ga = scale_rows(&g, &c, true);
                    self.accumulate(a, ga);
                }
                if self.needs(col) {
                    let gc = -row_dots(&g, self.value(a)) / (&c * &c);
                    self.accumulate(col, gc);
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for p in parts {
                    let w = self.shape(p).1;
                    if self.needs(p) {
                        let gp = g.slice(s![.., offset..offset + w]).to_owned();
                        self.accumulate(p, gp);
                    }
                    offset += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for p in parts {
                    let h = self.shape(p).0;
                    if self.needs(p) {
                        let gp = g.slice(s![offset..offset + h, ..]).to_owned();
                        self.accumulate(p, gp);
                    }
                    offset += h;
                }
            }
            Op::RowGather(a, index) => {
                if self.needs(a) {
                    let (rows, m) = self.shape(a);
                    let ga = scatter_rows(&g, &index, rows, m);
                    self.accumulate(a, ga);
                }
            }
            Op::RowScatterAdd(a, index) => {
                if self.needs(a) {
                    let ga = gather_rows(&g, &index, self.shape(a).1);
                    self.accumulate(a, ga);
                }
            }
            Op::EdgeAggregate(h, src, dst, weight) => {
                let (n, m) = self.shape(h);
                let gs = g.as_standard_layout();
                let gf = gs.as_slice().expect("standard layout");
                if self.needs(h) {
                    let w = self.value(weight);
                    let mut gh = vec![0.0; n * m];
                    for (e, (&s, &d)) in src.iter().zip(dst.iter()).enumerate() {
                        let we = w[[e, 0]];
                        for (o, x) in gh[s * m..(s + 1) * m].iter_mut().zip(&gf[d * m..(d + 1) * m]) {
                            *o += we * x;
                        }
                    }
                    let gh = Matrix::from_shape_vec((n, m), gh).expect("sized above");
                    self.accumulate(h, gh);
                }
                if self.needs(weight) {
                    let hv = self.value(h).as_standard_layout();
                    let hf = hv.as_slice().expect("standard layout");
                    let gw = Matrix::from_shape_fn((src.len(), 1), |(e, _)| {
                        let (s, d) = (src[e], dst[e]);
                        hf[s * m..(s + 1) * m].iter().zip(&gf[d * m..(d + 1) * m]).map(|(a, b)| a * b).sum()
                    });
                    self.accumulate(weight, gw);
                }
            }
            Op::Scale(a, factor) => self.accumulate(a, g * factor),
            Op::AddScalar(a) => self.accumulate(a, g.clone()),
            Op::Sigmoid(a) => {
                let y = &self.nodes[idx].value;
                let ga = g * &y.mapv(|y| y * (1.0 - y));
                self.accumulate(a, ga);
            }
            Op::Tanh(a) => {
                let y = &self.nodes[idx].value;
                let ga = g * &y.mapv(|y| 1.0 - y * y);
                self.accumulate(a, ga);
            }
            Op::Relu(a) => {
                let mut ga = g.clone();
                ndarray::Zip::from(&mut ga)
                    .and(self.value(a))
                    .for_each(|g, &x| {
                        if x <= 0.0 {
                            *g = 0.0;
                        }
                    });
                self.accumulate(a, ga);
            }
            Op::MaxScalar(a, floor) => {
                let mut ga = g.clone();
                ndarray::Zip::from(&mut ga)
                    .and(self.value(a))
                    .for_each(|g, &x| {
                        if x <= floor {
                            *g = 0.0;
                        }
                    });
                self.accumulate(a, ga);
            }
            Op::MeanRows(a) => {
                let (n, m) = self.shape(a);
                let ga = g.broadcast((n, m)).expect("1×m row").mapv(|v| v / n as f64);
                self.accumulate(a, ga);
            }
            Op::SumCols(a) => {
                let ga = g.broadcast(self.shape(a)).expect("n×1 column").to_owned();
                self.accumulate(a, ga);
            }
            Op::SumAll(a) => {
                let ga = Matrix::from_elem(self.shape(a), g[[0, 0]]);
                self.accumulate(a, ga);
            }
            Op::Bce(p, labels) => {
                let scale = g[[0, 0]] / labels.len() as f64;
                let mut gp = Matrix::zeros(self.shape(p));
                ndarray::Zip::from(&mut gp)
                    .and(self.value(p))
                    .and(&labels)
                    .for_each(|gp, &x, &y| {
                        if x > BCE_CLAMP && x < 1.0 - BCE_CLAMP {
                            *gp = scale * (-y / x + (1.0 - y) / (1.0 - x));
                        }
                    });
                self.accumulate(p, gp);
            }
            Op::BinaryEntropy(p) => {
                let scale = g[[0, 0]];
                let gp = self.value(p).mapv(|x| {
                    if x > BCE_CLAMP && x < 1.0 - BCE_CLAMP {
                        scale * ((1.0 - x) / x).ln()
                    } else {
                        0.0
                    }
                });
                self.accumulate(p, gp);
            }
        }
    }
}

fn gather_rows(src: &Matrix, index: &[usize], m: usize) -> Matrix {
    let src = src.as_standard_layout();
    let flat = src.as_slice().expect("standard layout");
    let mut out = Vec::with_capacity(index.len() * m);
    for &j in index {
        out.extend_from_slice(&flat[j * m..(j + 1) * m]);
    }
    Matrix::from_shape_vec((index.len(), m), out).expect("sized above")
}

fn scatter_rows(src: &Matrix, index: &[usize], rows: usize, m: usize) -> Matrix {
    let src = src.as_standard_layout();
    let flat = src.as_slice().expect("standard layout");
    let mut out = vec![0.0; rows * m];
    for (i, &j) in index.iter().enumerate() {
        for (d, s) in out[j * m..(j + 1) * m].iter_mut().zip(&flat[i * m..(i + 1) * m]) {
            *d += s;
        }
    }
    Matrix::from_shape_vec((rows, m), out).expect("sized above")
}

/// Multiplies (or divides) row `i` of `a` by `col[i]`.
fn scale_rows(a: &Matrix, col: &Matrix, divide: bool) -> Matrix {
    let mut out = a.as_standard_layout().into_owned();
    for (mut row, &c) in out.rows_mut().into_iter().zip(col.iter()) {
        let row = row.as_slice_mut().expect("standard layout");
        if divide {
            row.iter_mut().for_each(|v| *v /= c);
        } else {
            row.iter_mut().for_each(|v| *v *= c);
        }
    }
    out
}

/// Column of per-row dot products of `a` and `b`.
fn row_dots(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_shape_fn((a.nrows(), 1), |(i, _)| a.row(i).dot(&b.row(i)))
}
