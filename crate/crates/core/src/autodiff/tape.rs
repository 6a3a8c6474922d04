use std::sync::Arc;

use matrixmultiply::dgemm;

use crate::error::{GlnoError, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(GlnoError::ShapeMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn column(values: Vec<f64>) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }
}

/// `c += alpha * op(a) op(b)` on row-major buffers, `op` optionally transposing.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    ta: bool,
    b: &[f64],
    tb: bool,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    // stored shapes: a is m x k (or k x m if ta), b is k x n (or n x k if tb)
    let (rsa, csa) = if ta { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if tb { (1, k as isize) } else { (n as isize, 1) };
    unsafe {
        dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            1.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MulRow(Var, Var),
    MulCol(Var, Var),
    MulScalar(Var, Var),
    AddScalar(Var, Var),
    Scale(Var, f64),
    Offset(Var),
    MatMul(Var, Var),
    ConstMatMul(Arc<Matrix>, Var),
    Exp(Var),
    Gelu(Var),
    Softplus(Var),
    Cos(Var),
    Sin(Var),
    Recip(Var),
    Sqrt(Var),
    Sum(Var),
    GatherRows(Var, Arc<Vec<usize>>),
    ScatterAddRows(Var, Arc<Vec<usize>>),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    Transpose(Var),
    LogSoftmaxRows(Var),
    Nll(Var, Arc<Vec<usize>>),
}

#[derive(Debug, Clone)]
struct Node {
    value: Matrix,
    op: Op,
}

/// Reverse-mode computation record over dense matrices.
///
/// Every operation appends a node and returns its [`Var`]; `backward` walks
/// the record in reverse and accumulates gradients in a fixed order, so
/// results are deterministic.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar root with respect to every node.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient of `v`; `None` when the root does not depend on it.
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads[v.0].as_deref()
    }

    /// Gradient of `v`, zeros when the root does not depend on it.
    pub fn get_or_zeros(&self, v: Var, len: usize) -> Vec<f64> {
        self.grads[v.0].clone().unwrap_or_else(|| vec![0.0; len])
    }
}

fn gelu_parts(x: f64) -> (f64, f64) {
    const C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
    let u = C * (x + 0.044715 * x * x * x);
    let th = u.tanh();
    let y = 0.5 * x * (1.0 + th);
    let du = C * (1.0 + 3.0 * 0.044715 * x * x);
    let dy = 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du;
    (y, dy)
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn shape_err(op: &str, a: (usize, usize), b: (usize, usize)) -> GlnoError {
    GlnoError::ShapeMismatch(format!("{op}: {}x{} vs {}x{}", a.0, a.1, b.0, b.1))
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

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    /// Scalar value of a `1x1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.data[0]
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let va = self.value(a);
        let value = Matrix {
            rows: va.rows,
            cols: va.cols,
            data: va.data.iter().map(|&x| f(x)).collect(),
        };
        self.push(value, op)
    }

    fn same_shape(&self, op: &str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err(op, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    fn zip(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        let data = va
            .data
            .iter()
            .zip(&vb.data)
            .map(|(&x, &y)| f(x, y))
            .collect();
        let value = Matrix {
            rows: va.rows,
            cols: va.cols,
            data,
        };
        self.push(value, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        Ok(self.zip(a, b, Op::Add(a, b), |x, y| x + y))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        Ok(self.zip(a, b, Op::Sub(a, b), |x, y| x - y))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        Ok(self.zip(a, b, Op::Mul(a, b), |x, y| x * y))
    }

    /// `a + row` with `row` broadcast over the rows of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (sa, sr) = (self.shape(a), self.shape(row));
        if sr != (1, sa.1) {
            return Err(shape_err("add_row", sa, sr));
        }
        let (va, vr) = (self.value(a), self.value(row));
        let data = va
            .data
            .chunks(sa.1)
            .flat_map(|r| r.iter().zip(&vr.data).map(|(x, y)| x + y))
            .collect();
        Ok(self.push(
            Matrix {
                rows: sa.0,
                cols: sa.1,
                data,
            },
            Op::AddRow(a, row),
        ))
    }

    /// `a * row` with `row` broadcast over the rows of `a`.
    pub fn mul_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (sa, sr) = (self.shape(a), self.shape(row));
        if sr != (1, sa.1) {
            return Err(shape_err("mul_row", sa, sr));
        }
        let (va, vr) = (self.value(a), self.value(row));
        let data = va
            .data
            .chunks(sa.1)
            .flat_map(|r| r.iter().zip(&vr.data).map(|(x, y)| x * y))
            .collect();
        Ok(self.push(
            Matrix {
                rows: sa.0,
                cols: sa.1,
                data,
            },
            Op::MulRow(a, row),
        ))
    }

    /// `a * col` with `col` broadcast over the columns of `a`.
    pub fn mul_col(&mut self, a: Var, col: Var) -> Result<Var> {
        let (sa, sc) = (self.shape(a), self.shape(col));
        if sc != (sa.0, 1) {
            return Err(shape_err("mul_col", sa, sc));
        }
        let (va, vc) = (self.value(a), self.value(col));
        let data = va
            .data
            .chunks(sa.1.max(1))
            .zip(&vc.data)
            .flat_map(|(r, c)| r.iter().map(move |x| x * c))
            .collect();
        Ok(self.push(
            Matrix {
                rows: sa.0,
                cols: sa.1,
                data,
            },
            Op::MulCol(a, col),
        ))
    }

    /// `a * s` for a `1x1` node `s`.
    pub fn mul_scalar(&mut self, a: Var, s: Var) -> Result<Var> {
        if self.shape(s) != (1, 1) {
            return Err(shape_err("mul_scalar", self.shape(a), self.shape(s)));
        }
        let k = self.scalar(s);
        Ok(self.unary(a, Op::MulScalar(a, s), |x| x * k))
    }

    /// `a + s` for a `1x1` node `s`.
    pub fn add_scalar(&mut self, a: Var, s: Var) -> Result<Var> {
        if self.shape(s) != (1, 1) {
            return Err(shape_err("add_scalar", self.shape(a), self.shape(s)));
        }
        let k = self.scalar(s);
        Ok(self.unary(a, Op::AddScalar(a, s), |x| x + k))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, Op::Scale(a, c), |x| x * c)
    }

    /// `a + c` for a constant `c`.
    pub fn offset(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, Op::Offset(a), |x| x + c)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.1 != sb.0 {
            return Err(shape_err("matmul", sa, sb));
        }
        let mut out = Matrix::zeros(sa.0, sb.1);
        gemm(
            sa.0,
            sa.1,
            sb.1,
            1.0,
            &self.value(a).data,
            false,
            &self.value(b).data,
            false,
            &mut out.data,
        );
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    /// `m b` for a constant (non-differentiable) matrix `m`.
    pub fn const_matmul(&mut self, m: &Arc<Matrix>, b: Var) -> Result<Var> {
        let sb = self.shape(b);
        if m.cols != sb.0 {
            return Err(shape_err("const_matmul", m.shape(), sb));
        }
        let mut out = Matrix::zeros(m.rows, sb.1);
        gemm(
            m.rows,
            m.cols,
            sb.1,
            1.0,
            &m.data,
            false,
            &self.value(b).data,
            false,
            &mut out.data,
        );
        Ok(self.push(out, Op::ConstMatMul(Arc::clone(m), b)))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, Op::Exp(a), f64::exp)
    }

    /// GELU, tanh approximation.
    pub fn gelu(&mut self, a: Var) -> Var {
        self.unary(a, Op::Gelu(a), |x| gelu_parts(x).0)
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        self.unary(a, Op::Softplus(a), softplus)
    }

    pub fn cos(&mut self, a: Var) -> Var {
        self.unary(a, Op::Cos(a), f64::cos)
    }

    pub fn sin(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sin(a), f64::sin)
    }

    pub fn recip(&mut self, a: Var) -> Var {
        self.unary(a, Op::Recip(a), f64::recip)
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sqrt(a), f64::sqrt)
    }

    /// Sum of all entries, `1x1`.
    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data.iter().sum();
        self.push(
            Matrix {
                rows: 1,
                cols: 1,
                data: vec![s],
            },
            Op::Sum(a),
        )
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.value(a).data.len().max(1) as f64;
        let s = self.sum(a);
        self.scale(s, 1.0 / n)
    }

    /// Rows `idx[i]` of `a`, in order.
    pub fn gather_rows(&mut self, a: Var, idx: Vec<usize>) -> Result<Var> {
        let (r, c) = self.shape(a);
        if let Some(&bad) = idx.iter().find(|&&i| i >= r) {
            return Err(GlnoError::ShapeMismatch(format!("gather row {bad} of {r}")));
        }
        let va = self.value(a);
        let data = idx
            .iter()
            .flat_map(|&i| va.data[i * c..(i + 1) * c].iter().copied())
            .collect();
        let out = Matrix {
            rows: idx.len(),
            cols: c,
            data,
        };
        Ok(self.push(out, Op::GatherRows(a, Arc::new(idx))))
    }

    /// `out[idx[i]] += a[i]` into `rows` zero rows.
    pub fn scatter_add_rows(&mut self, a: Var, idx: Vec<usize>, rows: usize) -> Result<Var> {
        let (r, c) = self.shape(a);
        if idx.len() != r || idx.iter().any(|&i| i >= rows) {
            return Err(GlnoError::ShapeMismatch(format!(
                "scatter of {r} rows into {rows} with {} indices",
                idx.len()
            )));
        }
        let mut out = Matrix::zeros(rows, c);
        let va = self.value(a);
        for (i, &dst) in idx.iter().enumerate() {
            for j in 0..c {
                out.data[dst * c + j] += va.data[i * c + j];
            }
        }
        Ok(self.push(out, Op::ScatterAddRows(a, Arc::new(idx))))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = self.shape(parts[0]).0;
        if parts.iter().any(|&p| self.shape(p).0 != rows) {
            return Err(GlnoError::ShapeMismatch(
                "concat_cols: row counts differ".into(),
            ));
        }
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut off = 0;
        for &p in parts {
            let v = self.value(p);
            for r in 0..rows {
                out.data[r * cols + off..r * cols + off + v.cols]
                    .copy_from_slice(&v.data[r * v.cols..(r + 1) * v.cols]);
            }
            off += v.cols;
        }
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    /// Columns `start..start + width` of `a`.
    pub fn slice_cols(&mut self, a: Var, start: usize, width: usize) -> Result<Var> {
        let (r, c) = self.shape(a);
        if start + width > c {
            return Err(GlnoError::ShapeMismatch(format!(
                "slice {start}..{} of {c} columns",
                start + width
            )));
        }
        let va = self.value(a);
        let data = (0..r)
            .flat_map(|i| {
                va.data[i * c + start..i * c + start + width]
                    .iter()
                    .copied()
            })
            .collect();
        Ok(self.push(
            Matrix {
                rows: r,
                cols: width,
                data,
            },
            Op::SliceCols(a, start),
        ))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let t = self.value(a).transpose();
        self.push(t, Op::Transpose(a))
    }

    pub fn log_softmax_rows(&mut self, a: Var) -> Var {
        let va = self.value(a);
        let c = va.cols;
        let mut out = va.clone();
        for row in out.data.chunks_mut(c) {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
            row.iter_mut().for_each(|x| *x -= lse);
        }
        self.push(out, Op::LogSoftmaxRows(a))
    }

    /// Mean negative log-likelihood of `labels` under row-wise log-probabilities.
    pub fn nll(&mut self, logp: Var, labels: Vec<usize>) -> Result<Var> {
        let (r, c) = self.shape(logp);
        if labels.len() != r {
            return Err(GlnoError::ShapeMismatch(format!(
                "{} labels for {r} rows",
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(GlnoError::InvalidArgument(format!(
                "label {bad} out of range for {c} classes"
            )));
        }
        let v = self.value(logp);
        let loss = -labels
            .iter()
            .enumerate()
            .map(|(i, &l)| v.data[i * c + l])
            .sum::<f64>()
            / r as f64;
        Ok(self.push(
            Matrix {
                rows: 1,
                cols: 1,
                data: vec![loss],
            },
            Op::Nll(logp, Arc::new(labels)),
        ))
    }

    /// Reverse sweep from a `1x1` root.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        if self.shape(root) != (1, 1) {
            let (r, c) = self.shape(root);
            return Err(GlnoError::InvalidArgument(format!(
                "backward needs a scalar root, got {r}x{c}"
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; root.0 + 1];
        grads[root.0] = Some(vec![1.0]);
        for id in (0..=root.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            self.propagate(id, &g, &mut grads);
            grads[id] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, id: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[id];
        let out = &node.value;
        macro_rules! slot {
            ($v:expr) => {{
                let len = self.nodes[$v.0].value.data.len();
                grads[$v.0].get_or_insert_with(|| vec![0.0; len])
            }};
        }
        let elementwise = |grads: &mut [Option<Vec<f64>>], a: Var, d: &dyn Fn(usize) -> f64| {
            let len = self.nodes[a.0].value.data.len();
            let ga = grads[a.0].get_or_insert_with(|| vec![0.0; len]);
            for (i, gi) in g.iter().enumerate() {
                ga[i] += gi * d(i);
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                slot!(a).iter_mut().zip(g).for_each(|(x, y)| *x += y);
                slot!(b).iter_mut().zip(g).for_each(|(x, y)| *x += y);
            }
            Op::Sub(a, b) => {
                slot!(a).iter_mut().zip(g).for_each(|(x, y)| *x += y);
                slot!(b).iter_mut().zip(g).for_each(|(x, y)| *x -= y);
            }
            Op::Mul(a, b) => {
                let (va, vb) = (&self.value(*a).data, &self.value(*b).data);
                elementwise(grads, *a, &|i| vb[i]);
                elementwise(grads, *b, &|i| va[i]);
            }
            Op::AddRow(a, row) => {
                slot!(a).iter_mut().zip(g).for_each(|(x, y)| *x += y);
                let c = out.cols;
                let gr = slot!(row);
                for r in g.chunks(c) {
                    gr.iter_mut().zip(r).for_each(|(x, y)| *x += y);
                }
            }
            Op::MulRow(a, row) => {
                let c = out.cols;
                let (va, vr) = (&self.value(*a).data, &self.value(*row).data);
                elementwise(grads, *a, &|i| vr[i % c]);
                let gr = slot!(row);
                for (i, gi) in g.iter().enumerate() {
                    gr[i % c] += gi * va[i];
                }
            }
            Op::MulCol(a, col) => {
                let c = out.cols.max(1);
                let (va, vc) = (&self.value(*a).data, &self.value(*col).data);
                elementwise(grads, *a, &|i| vc[i / c]);
                let gc = slot!(col);
                for (i, gi) in g.iter().enumerate() {
                    gc[i / c] += gi * va[i];
                }
            }
            Op::MulScalar(a, s) => {
                let (va, k) = (&self.value(*a).data, self.scalar(*s));
                elementwise(grads, *a, &|_| k);
                let d: f64 = g.iter().zip(va).map(|(x, y)| x * y).sum();
                slot!(s)[0] += d;
            }
            Op::AddScalar(a, s) => {
                slot!(a).iter_mut().zip(g).for_each(|(x, y)| *x += y);
                slot!(s)[0] += g.iter().sum::<f64>();
            }
            Op::Scale(a, c) => elementwise(grads, *a, &|_| *c),
            Op::Offset(a) => slot!(a).iter_mut().zip(g).for_each(|(x, y)| *x += y),
            Op::MatMul(a, b) => {
                let (sa, sb) = (self.shape(*a), self.shape(*b));
                let (va, vb) = (&self.value(*a).data, &self.value(*b).data);
                // dA = G B^T, dB = A^T G
                gemm(sa.0, sb.1, sa.1, 1.0, g, false, vb, true, slot!(a));
                gemm(sa.1, sa.0, sb.1, 1.0, va, true, g, false, slot!(b));
            }
            Op::ConstMatMul(m, b) => {
                let sb = self.shape(*b);
                gemm(m.cols, m.rows, sb.1, 1.0, &m.data, true, g, false, slot!(b));
            }
            Op::Exp(a) => elementwise(grads, *a, &|i| out.data[i]),
            Op::Gelu(a) => {
                let va = &self.value(*a).data;
                elementwise(grads, *a, &|i| gelu_parts(va[i]).1)
            }
            Op::Softplus(a) => {
                let va = &self.value(*a).data;
                elementwise(grads, *a, &|i| sigmoid(va[i]))
            }
            Op::Cos(a) => {
                let va = &self.value(*a).data;
                elementwise(grads, *a, &|i| -va[i].sin())
            }
            Op::Sin(a) => {
                let va = &self.value(*a).data;
                elementwise(grads, *a, &|i| va[i].cos())
            }
            Op::Recip(a) => elementwise(grads, *a, &|i| -out.data[i] * out.data[i]),
            Op::Sqrt(a) => elementwise(grads, *a, &|i| 0.5 / out.data[i]),
            Op::Sum(a) => {
                let g0 = g[0];
                slot!(a).iter_mut().for_each(|x| *x += g0);
            }
            Op::GatherRows(a, idx) => {
                let c = out.cols;
                let ga = slot!(a);
                for (i, &src) in idx.iter().enumerate() {
                    for j in 0..c {
                        ga[src * c + j] += g[i * c + j];
                    }
                }
            }
            Op::ScatterAddRows(a, idx) => {
                let c = out.cols;
                let ga = slot!(a);
                for (i, &dst) in idx.iter().enumerate() {
                    for j in 0..c {
                        ga[i * c + j] += g[dst * c + j];
                    }
                }
            }
            Op::ConcatCols(parts) => {
                let cols = out.cols;
                let mut off = 0;
                for p in parts {
                    let w = self.shape(*p).1;
                    let gp = slot!(p);
                    for r in 0..out.rows {
                        for j in 0..w {
                            gp[r * w + j] += g[r * cols + off + j];
                        }
                    }
                    off += w;
                }
            }
            Op::SliceCols(a, start) => {
                let c = self.shape(*a).1;
                let w = out.cols;
                let ga = slot!(a);
                for r in 0..out.rows {
                    for j in 0..w {
                        ga[r * c + start + j] += g[r * w + j];
                    }
                }
            }
            Op::Transpose(a) => {
                let (r, c) = (out.rows, out.cols);
                let ga = slot!(a);
                for i in 0..r {
                    for j in 0..c {
                        ga[j * r + i] += g[i * c + j];
                    }
                }
            }
            Op::LogSoftmaxRows(a) => {
                let c = out.cols;
                let ga = slot!(a);
                for (r, (gr, yr)) in g.chunks(c).zip(out.data.chunks(c)).enumerate() {
                    let gs: f64 = gr.iter().sum();
                    for j in 0..c {
                        ga[r * c + j] += gr[j] - yr[j].exp() * gs;
                    }
                }
            }
            Op::Nll(a, labels) => {
                let c = self.shape(*a).1;
                let n = labels.len() as f64;
                let ga = slot!(a);
                for (i, &l) in labels.iter().enumerate() {
                    ga[i * c + l] -= g[0] / n;
                }
            }
        }
    }
}
