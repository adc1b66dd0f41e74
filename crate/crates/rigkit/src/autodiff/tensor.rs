//! The tensor type and its differentiable ops.

use std::cell::{Ref, RefCell};
use std::collections::HashSet;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::rng::Rng;
use crate::{Error, Result};

static NEXT_ID: AtomicU64 = AtomicU64::new(0);

type BackwardFn = Box<dyn Fn(&Inner)>;

struct Inner {
    id: u64,
    rows: usize,
    cols: usize,
    values: RefCell<Vec<f64>>,
    grad: RefCell<Vec<f64>>,
    tracked: bool,
    parents: Vec<Tensor>,
    backward: Option<BackwardFn>,
    op: &'static str,
}

/// A 2-D matrix of f64 with optional gradient tracking. Cheap to clone
/// (reference-counted); interior values are shared.
#[derive(Clone)]
pub struct Tensor(Rc<Inner>);

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &(self.0.rows, self.0.cols))
            .field("op", &self.0.op)
            .field("tracked", &self.0.tracked)
            .finish()
    }
}

fn check_finite(op: &'static str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { op })
    }
}

impl Tensor {
    fn build(
        op: &'static str,
        rows: usize,
        cols: usize,
        values: Vec<f64>,
        tracked: bool,
        parents: Vec<Tensor>,
        backward: Option<BackwardFn>,
    ) -> Result<Tensor> {
        assert_eq!(values.len(), rows * cols, "{op}: value buffer size");
        check_finite(op, &values)?;
        let grad = if tracked { vec![0.0; rows * cols] } else { Vec::new() };
        Ok(Tensor(Rc::new(Inner {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            rows,
            cols,
            values: RefCell::new(values),
            grad: RefCell::new(grad),
            tracked,
            parents,
            backward,
            op,
        })))
    }

    /// Untracked constant.
    pub fn constant(rows: usize, cols: usize, values: Vec<f64>) -> Result<Tensor> {
        Tensor::build("constant", rows, cols, values, false, Vec::new(), None)
    }

    /// Tracked leaf (trainable parameter).
    pub fn parameter(rows: usize, cols: usize, values: Vec<f64>) -> Result<Tensor> {
        Tensor::build("parameter", rows, cols, values, true, Vec::new(), None)
    }

    pub fn scalar(v: f64) -> Result<Tensor> {
        Tensor::constant(1, 1, vec![v])
    }

    pub fn zeros(rows: usize, cols: usize, tracked: bool) -> Tensor {
        let values = vec![0.0; rows * cols];
        Tensor::build("zeros", rows, cols, values, tracked, Vec::new(), None).unwrap()
    }

    /// Kaiming-style uniform fan-in initialization for a tracked parameter.
    pub fn kaiming_uniform(rows: usize, cols: usize, fan_in: usize, rng: &mut Rng) -> Tensor {
        let bound = (6.0 / fan_in.max(1) as f64).sqrt();
        let values = (0..rows * cols).map(|_| rng.uniform(-bound, bound)).collect();
        Tensor::build("init", rows, cols, values, true, Vec::new(), None).unwrap()
    }

    pub fn rows(&self) -> usize {
        self.0.rows
    }

    pub fn cols(&self) -> usize {
        self.0.cols
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.0.rows, self.0.cols]
    }

    pub fn len(&self) -> usize {
        self.0.rows * self.0.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_tracked(&self) -> bool {
        self.0.tracked
    }

    pub fn values(&self) -> Ref<'_, Vec<f64>> {
        self.0.values.borrow()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.values.borrow().clone()
    }

    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.len(), 1);
        self.0.values.borrow()[0]
    }

    /// Overwrite the values in place (optimizer updates, finite differences).
    pub fn set_values(&self, values: &[f64]) {
        let mut v = self.0.values.borrow_mut();
        assert_eq!(v.len(), values.len());
        v.copy_from_slice(values);
    }

    pub fn grad(&self) -> Vec<f64> {
        self.0.grad.borrow().clone()
    }

    pub fn zero_grad(&self) {
        for g in self.0.grad.borrow_mut().iter_mut() {
            *g = 0.0;
        }
    }

    /// Add directly into the gradient buffer (used by gradient clipping).
    pub fn add_grad(&self, delta: &[f64]) {
        self.accumulate_grad(delta);
    }

    /// Scale the gradient buffer in place.
    pub fn scale_grad(&self, factor: f64) {
        for g in self.0.grad.borrow_mut().iter_mut() {
            *g *= factor;
        }
    }

    fn accumulate_grad(&self, delta: &[f64]) {
        if !self.0.tracked {
            return;
        }
        let mut g = self.0.grad.borrow_mut();
        for (gi, di) in g.iter_mut().zip(delta) {
            *gi += *di;
        }
    }

    /// Cut the graph: same values, no gradient flow.
    pub fn detach(&self) -> Tensor {
        Tensor::build(
            "detach",
            self.0.rows,
            self.0.cols,
            self.to_vec(),
            false,
            Vec::new(),
            None,
        )
        .unwrap()
    }

    /// Reverse-mode gradient of a scalar loss, accumulated into every
    /// tracked leaf's grad buffer.
    pub fn backward(&self) -> Result<()> {
        if self.len() != 1 {
            return Err(Error::NotScalar {
                shape: vec![self.0.rows, self.0.cols],
            });
        }
        // Kick off with d(loss)/d(loss) = 1 on the output itself; the
        // output's grad buffer may be missing if untracked (nothing to do).
        if !self.0.tracked {
            return Ok(());
        }
        self.0.grad.borrow_mut()[0] += 1.0;

        // Iterative postorder DFS; reverse gives a valid topological order.
        let mut order: Vec<Tensor> = Vec::new();
        let mut visited: HashSet<u64> = HashSet::new();
        let mut stack: Vec<(Tensor, usize)> = vec![(self.clone(), 0)];
        visited.insert(self.0.id);
        while let Some((node, child)) = stack.pop() {
            if child < node.0.parents.len() {
                stack.push((node.clone(), child + 1));
                let parent = node.0.parents[child].clone();
                if parent.0.tracked && visited.insert(parent.0.id) {
                    stack.push((parent, 0));
                }
            } else {
                order.push(node);
            }
        }
        for node in order.iter().rev() {
            if let Some(bw) = &node.0.backward {
                bw(&node.0);
            }
        }
        Ok(())
    }

    // ----- elementwise binary ops -----

    fn same_shape(&self, other: &Tensor, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                op,
                lhs: self.shape().to_vec(),
                rhs: other.shape().to_vec(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.same_shape(other, "add")?;
        let values = self
            .values()
            .iter()
            .zip(other.values().iter())
            .map(|(a, b)| a + b)
            .collect();
        let tracked = self.0.tracked || other.0.tracked;
        let parents = vec![self.clone(), other.clone()];
        let backward: Option<BackwardFn> = tracked.then(|| {
            Box::new(move |out: &Inner| {
                let g = out.grad.borrow();
                out.parents[0].accumulate_grad(&g);
                out.parents[1].accumulate_grad(&g);
            }) as BackwardFn
        });
        Tensor::build("add", self.0.rows, self.0.cols, values, tracked, parents, backward)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.same_shape(other, "sub")?;
        let values = self
            .values()
            .iter()
            .zip(other.values().iter())
            .map(|(a, b)| a - b)
            .collect();
        let tracked = self.0.tracked || other.0.tracked;
        let parents = vec![self.clone(), other.clone()];
        let backward: Option<BackwardFn> = tracked.then(|| {
            Box::new(move |out: &Inner| {
                let g = out.grad.borrow();
                out.parents[0].accumulate_grad(&g);
                let neg: Vec<f64> = g.iter().map(|v| -v).collect();
                out.parents[1].accumulate_grad(&neg);
            }) as BackwardFn
        });
        Tensor::build("sub", self.0.rows, self.0.cols, values, tracked, parents, backward)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.same_shape(other, "mul")?;
        let values = self
            .values()
            .iter()
            .zip(other.values().iter())
            .map(|(a, b)| a * b)
            .collect();
        let tracked = self.0.tracked || other.0.tracked;
        let parents = vec![self.clone(), other.clone()];
        let backward: Option<BackwardFn> = tracked.then(|| {
            Box::new(move |out: &Inner| {
                let g = out.grad.borrow();
                let a = out.parents[0].values();
                let b = out.parents[1].values();
                let da: Vec<f64> = g.iter().zip(b.iter()).map(|(g, b)| g * b).collect();
                let db: Vec<f64> = g.iter().zip(a.iter()).map(|(g, a)| g * a).collect();
                drop(a);
                drop(b);
                out.parents[0].accumulate_grad(&da);
                out.parents[1].accumulate_grad(&db);
            }) as BackwardFn
        });
        Tensor::build("mul", self.0.rows, self.0.cols, values, tracked, parents, backward)
    }

    pub fn mul_scalar(&self, s: f64) -> Result<Tensor> {
        let values = self.values().iter().map(|v| v * s).collect();
        let tracked = self.0.tracked;
        let parents = vec![self.clone()];
        let backward: Option<BackwardFn> = tracked.then(|| {
            Box::new(move |out: &Inner| {
                let g = out.grad.borrow();
                let dx: Vec<f64> = g.iter().map(|v| v * s).collect();
                out.parents[0].accumulate_grad(&dx);
            }) as BackwardFn
        });
        Tensor::build("mul_scalar", self.0.rows, self.0.cols, values, tracked, parents, backward)
    }

    /// Divide every entry by `sqrt(d)` (attention scaling).
    pub fn div_by_sqrt(&self, d: f64) -> Result<Tensor> {
        if !(d > 0.0) {
            return Err(Error::NonFinite { op: "div_by_sqrt" });
        }
        self.mul_scalar(1.0 / d.sqrt())
    }

    /// Add a 1 x cols bias row to every row.
    pub fn add_row(&self, bias: &Tensor) -> Result<Tensor> {
        if bias.0.rows != 1 || bias.0.cols != self.0.cols {
            return Err(Error::ShapeMismatch {
                op: "add_row",
                lhs: self.shape().to_vec(),
                rhs: bias.shape().to_vec(),
            });
        }
        let cols = self.0.cols;
        let mut values = self.to_vec();
        {
            let b = bias.values();
            for r in 0..self.0.rows {
                for c in 0..cols {
                    values[r * cols + c] += b[c];
                }
            }
        }
        let tracked = self.0.tracked || bias.0.tracked;
        let parents = vec![self.clone(), bias.clone()];
        let backward: Option<BackwardFn> = tracked.then(|| {
            Box::new(move |out: &Inner| {
                let g = out.grad.borrow();
                out.parents[0].accumulate_grad(&g);
                let mut db = vec![0.0; cols];
                for r in 0..out.rows {
                    for c in 0..cols {
                        db[c] += g[r * cols + c];
                    }
                }
                out.parents[1].accumulate_grad(&db);
            }) as BackwardFn
        });
        Tensor::build("add_row", self.0.rows, self.0.cols, values, tracked, parents, backward)
    }

    // ----- matmul and structure ops -----

    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.0.cols != other.0.rows {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                lhs: self.shape().to_vec(),
                rhs: other.shape().to_vec(),
            });
        }
        let (m, k, n) = (self.0.rows, self.0.cols, other.0.cols);
        let mut values = vec![0.0; m * n];
        {
            let a = self.values();
            let b = other.values();
            matmul_into(&a, &b, &mut values, m, k, n);
        }
        let tracked = self.0.tracked || other.0.tracked;
        let parents = vec![self.clone(), other.clone()];
        let backward: Option<BackwardFn> = tracked.then(|| {
            Box::new(move |out: &Inner| {
                let g = out.grad.borrow();
                let a = out.parents[0].values();
                let b = out.parents[1].values();
                // dA = g . B^T
                let mut da = vec![0.0; m * k];
                for i in 0..m {
                    for j in 0..n {
                        let gij = g[i * n + j];
                        if gij != 0.0 {
                            for p in 0..k {
                                da[i * k + p] += gij * b[p * n + j];
                            }
                        }
                    }
                }
                // dB = A^T . g
                let mut db = vec![0.0; k * n];
                for i in 0..m {
                    for p in 0..k {
                        let aip = a[i * k + p];
                        if aip != 0.0 {
                            for j in 0..n {
                                db[p * n + j] += aip * g[i * n + j];
                            }
                        }
                    }
                }
                drop(a);
                drop(b);
                out.parents[0].accumulate_grad(&da);
                out.parents[1].accumulate_grad(&db);
            }) as BackwardFn
        });
        Tensor::build("matmul", m, n, values, tracked, parents, backward)
    }

    pub fn transpose(&self) -> Result<Tensor> {
        let (m, n) = (self.0.rows, self.0.cols);
        let v = self.values();
        let mut values = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                values[j * m + i] = v[i * n + j];
            }
        }
        drop(v);
        let tracked = self.0.tracked;
        let parents = vec![self.clone()];
        let backward: Option<BackwardFn> = tracked.then(|| {
            Box::new(move |out: &Inner| {
                let g = out.grad.borrow();
                let mut dx = vec![0.0; m * n];
                for i in 0..m {
                    for j in 0..n {
                        dx[i * n + j] = g[j * m + i];
                    }
                }
                out.parents[0].accumulate_grad(&dx);
            }) as BackwardFn
        });
        Tensor::build("transpose", n, m, values, tracked, parents, backward)
    }

    /// Concatenate along the given axis (0: stack rows, 1: widen columns).
    pub fn concat(&self, other: &Tensor, axis: usize) -> Result<Tensor> {
        match axis {
            0 => {
                if self.0.cols != other.0.cols {
                    return Err(Error::ShapeMismatch {
                        op: "concat",
                        lhs: self.shape().to_vec(),
                        rhs: other.shape().to_vec(),
                    });
                }
                let mut values = self.to_vec();
                values.extend_from_slice(&other.values());
                let rows = self.0.rows + other.0.rows;
                let split = self.len();
                let tracked = self.0.tracked || other.0.tracked;
                let parents = vec![self.clone(), other.clone()];
                let backward: Option<BackwardFn> = tracked.then(|| {
                    Box::new(move |out: &Inner| {
                        let g = out.grad.borrow();
                        out.parents[0].accumulate_grad(&g[..split]);
                        out.parents[1].accumulate_grad(&g[split..]);
                    }) as BackwardFn
                });
                Tensor::build("concat", rows, self.0.cols, values, tracked, parents, backward)
            }
            1 => {
                if self.0.rows != other.0.rows {
                    return Err(Error::ShapeMismatch {
                        op: "concat",
                        lhs: self.shape().to_vec(),
                        rhs: other.shape().to_vec(),
                    });
                }
                let (rows, ca, cb) = (self.0.rows, self.0.cols, other.0.cols);
                let cols = ca + cb;
                let mut values = vec![0.0; rows * cols];
                {
                    let a = self.values();
                    let b = other.values();
                    for r in 0..rows {
                        values[r * cols..r * cols + ca].copy_from_slice(&a[r * ca..(r + 1) * ca]);
                        values[r * cols + ca..(r + 1) * cols]
                            .copy_from_slice(&b[r * cb..(r + 1) * cb]);
                    }
                }
                let tracked = self.0.tracked || other.0.tracked;
                let parents = vec![self.clone(), other.clone()];
                let backward: Option<BackwardFn> = tracked.then(|| {
                    Box::new(move |out: &Inner| {
                        let g = out.grad.borrow();
                        let mut da = vec![0.0; rows * ca];
                        let mut db = vec![0.0; rows * cb];
                        for r in 0..rows {
                            da[r * ca..(r + 1) * ca].copy_from_slice(&g[r * cols..r * cols + ca]);
                            db[r * cb..(r + 1) * cb]
                                .copy_from_slice(&g[r * cols + ca..(r + 1) * cols]);
                        }
                        out.parents[0].accumulate_grad(&da);
                        out.parents[1].accumulate_grad(&db);
                    }) as BackwardFn
                });
                Tensor::build("concat", rows, cols, values, tracked, parents, backward)
            }
            _ => Err(Error::invalid("concat", format!("axis {axis} out of range"))),
        }
    }

    /// Select rows: `out[r] = self[indices[r]]` (duplicates allowed).
    pub fn gather_rows(&self, indices: &[usize]) -> Result<Tensor> {
        let cols = self.0.cols;
        for &i in indices {
            if i >= self.0.rows {
                return Err(Error::invalid(
                    "gather_rows",
                    format!("index {i} out of range for {} rows", self.0.rows),
                ));
            }
        }
        let v = self.values();
        let mut values = Vec::with_capacity(indices.len() * cols);
        for &i in indices {
            values.extend_from_slice(&v[i * cols..(i + 1) * cols]);
        }
        drop(v);
        let idx: Vec<usize> = indices.to_vec();
        let tracked = self.0.tracked;
        let parents = vec![self.clone()];
        let in_rows = self.0.rows;
        let backward: Option<BackwardFn> = tracked.then(|| {
            Box::new(move |out: &Inner| {
                let g = out.grad.borrow();
                let mut dx = vec![0.0; in_rows * cols];
                for (r, &i) in idx.iter().enumerate() {
                    for c in 0..cols {
                        dx[i * cols + c] += g[r * cols + c];
                    }
                }
                out.parents[0].accumulate_grad(&dx);
            }) as BackwardFn
        });
        Tensor::build("gather_rows", indices.len(), cols, values, tracked, parents, backward)
    }

    /// Inverse-distance-style interpolation: each output row is a fixed
    /// convex combination of three input rows.
    pub fn interpolate_rows(&self, indices: &[[usize; 3]], weights: &[[f64; 3]]) -> Result<Tensor> {
        if indices.len() != weights.len() {
            return Err(Error::invalid(
                "interpolate_rows",
                "indices and weights must pair up",
            ));
        }
        let cols = self.0.cols;
        let v = self.values();
        let mut values = vec![0.0; indices.len() * cols];
        for (r, (idx, w)) in indices.iter().zip(weights).enumerate() {
            for t in 0..3 {
                let row = idx[t];
                if row >= self.0.rows {
                    return Err(Error::invalid(
                        "interpolate_rows",
                        format!("index {row} out of range"),
                    ));
                }
                for c in 0..cols {
                    values[r * cols + c] += w[t] * v[row * cols + c];
                }
            }
        }
        drop(v);
        let idx: Vec<[usize; 3]> = indices.to_vec();
        let wts: Vec<[f64; 3]> = weights.to_vec();
        let tracked = self.0.tracked;
        let parents = vec![self.clone()];
        let in_rows = self.0.rows;
        let out_rows = indices.len();
        let backward: Option<BackwardFn> = tracked.then(|| {
            Box::new(move |out: &Inner| {
                let g = out.grad.borrow();
                let mut dx = vec![0.0; in_rows * cols];
                for r in 0..out_rows {
                    for t in 0..3 {
                        let row = idx[r][t];
                        let w = wts[r][t];
                        for c in 0..cols {
                            dx[row * cols + c] += w * g[r * cols + c];
                        }
                    }
                }
                out.parents[0].accumulate_grad(&dx);
            }) as BackwardFn
        });
        Tensor::build("interpolate_rows", out_rows, cols, values, tracked, parents, backward)
    }

    // ----- nonlinearities and reductions -----

    pub fn relu(&self) -> Result<Tensor> {
        let values = self.values().iter().map(|v| v.max(0.0)).collect();
        let tracked = self.0.tracked;
        let parents = vec![self.clone()];
        let backward: Option<BackwardFn> = tracked.then(|| {
            Box::new(move |out: &Inner| {
                let g = out.grad.borrow();
                let x = out.parents[0].values();
                let dx: Vec<f64> = g
                    .iter()
                    .zip(x.iter())
                    .map(|(g, x)| if *x > 0.0 { *g } else { 0.0 })
                    .collect();
                drop(x);
                out.parents[0].accumulate_grad(&dx);
            }) as BackwardFn
        });
        Tensor::build("relu", self.0.rows, self.0.cols, values, tracked, parents, backward)
    }

    /// `ln(max(x, eps))`; the clamp keeps zero entries finite while leaving
    /// the gradient zero below the clamp.
    pub fn ln_clamped(&self, eps: f64) -> Result<Tensor> {
        let values = self.values().iter().map(|v| v.max(eps).ln()).collect();
        let tracked = self.0.tracked;
        let parents = vec![self.clone()];
        let backward: Option<BackwardFn> = tracked.then(|| {
            Box::new(move |out: &Inner| {
                let g = out.grad.borrow();
                let x = out.parents[0].values();
                let dx: Vec<f64> = g
                    .iter()
                    .zip(x.iter())
                    .map(|(g, x)| if *x > eps { *g / *x } else { 0.0 })
                    .collect();
                drop(x);
                out.parents[0].accumulate_grad(&dx);
            }) as BackwardFn
        });
        Tensor::build("ln_clamped", self.0.rows, self.0.cols, values, tracked, parents, backward)
    }

    /// Row-wise layer normalization without affine parameters:
    /// `(x - mean) / sqrt(var + eps)` per row.
    pub fn layer_norm_rows(&self, eps: f64) -> Result<Tensor> {
        let (rows, cols) = (self.0.rows, self.0.cols);
        if cols == 0 {
            return Err(Error::invalid("layer_norm_rows", "empty rows"));
        }
        let x = self.to_vec();
        let mut values = vec![0.0; rows * cols];
        let mut inv_std = vec![0.0; rows];
        for r in 0..rows {
            let row = &x[r * cols..(r + 1) * cols];
            let mean = row.iter().sum::<f64>() / cols as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
            let s = 1.0 / (var + eps).sqrt();
            inv_std[r] = s;
            for c in 0..cols {
                values[r * cols + c] = (row[c] - mean) * s;
            }
        }
        let tracked = self.0.tracked;
        let parents = vec![self.clone()];
        let backward: Option<BackwardFn> = tracked.then(|| {
            Box::new(move |out: &Inner| {
                let g = out.grad.borrow();
                let y = out.values.borrow();
                let mut dx = vec![0.0; rows * cols];
                for r in 0..rows {
                    let g_row = &g[r * cols..(r + 1) * cols];
                    let y_row = &y[r * cols..(r + 1) * cols];
                    let g_mean = g_row.iter().sum::<f64>() / cols as f64;
                    let gy_mean =
                        g_row.iter().zip(y_row).map(|(a, b)| a * b).sum::<f64>() / cols as f64;
                    for c in 0..cols {
                        dx[r * cols + c] =
                            inv_std[r] * (g_row[c] - g_mean - y_row[c] * gy_mean);
                    }
                }
                drop(y);
                out.parents[0].accumulate_grad(&dx);
            }) as BackwardFn
        });
        Tensor::build("layer_norm_rows", rows, cols, values, tracked, parents, backward)
    }

    /// Row-wise softmax (max-shifted for stability).
    pub fn softmax_rows(&self) -> Result<Tensor> {
        let (rows, cols) = (self.0.rows, self.0.cols);
        let mut values = self.to_vec();
        for r in 0..rows {
            softmax_in_place(&mut values[r * cols..(r + 1) * cols]);
        }
        let tracked = self.0.tracked;
        let parents = vec![self.clone()];
        let backward: Option<BackwardFn> = tracked.then(|| {
            Box::new(move |out: &Inner| {
                let g = out.grad.borrow();
                let y = out.values.borrow();
                let mut dx = vec![0.0; rows * cols];
                for r in 0..rows {
                    let y_row = &y[r * cols..(r + 1) * cols];
                    let g_row = &g[r * cols..(r + 1) * cols];
                    let dot: f64 = y_row.iter().zip(g_row).map(|(y, g)| y * g).sum();
                    for c in 0..cols {
                        dx[r * cols + c] = y_row[c] * (g_row[c] - dot);
                    }
                }
                drop(y);
                out.parents[0].accumulate_grad(&dx);
            }) as BackwardFn
        });
        Tensor::build("softmax_rows", rows, cols, values, tracked, parents, backward)
    }

    /// Softmax over consecutive row groups of size `k`, per column: for each
    /// group g and column c, the k entries `self[g*k..(g+1)*k, c]` are
    /// softmax-normalized. Input rows must be a multiple of k.
    pub fn group_softmax(&self, k: usize) -> Result<Tensor> {
        let (rows, cols) = (self.0.rows, self.0.cols);
        if k == 0 || rows % k != 0 {
            return Err(Error::invalid(
                "group_softmax",
                format!("rows {rows} not a multiple of group size {k}"),
            ));
        }
        let groups = rows / k;
        let mut values = self.to_vec();
        for g in 0..groups {
            for c in 0..cols {
                let mut m = f64::NEG_INFINITY;
                for r in 0..k {
                    m = m.max(values[(g * k + r) * cols + c]);
                }
                let mut sum = 0.0;
                for r in 0..k {
                    let idx = (g * k + r) * cols + c;
                    values[idx] = (values[idx] - m).exp();
                    sum += values[idx];
                }
                for r in 0..k {
                    values[(g * k + r) * cols + c] /= sum;
                }
            }
        }
        let tracked = self.0.tracked;
        let parents = vec![self.clone()];
        let backward: Option<BackwardFn> = tracked.then(|| {
            Box::new(move |out: &Inner| {
                let g = out.grad.borrow();
                let y = out.values.borrow();
                let mut dx = vec![0.0; rows * cols];
                for gi in 0..groups {
                    for c in 0..cols {
                        let mut dot = 0.0;
                        for r in 0..k {
                            let idx = (gi * k + r) * cols + c;
                            dot += y[idx] * g[idx];
                        }
                        for r in 0..k {
                            let idx = (gi * k + r) * cols + c;
                            dx[idx] = y[idx] * (g[idx] - dot);
                        }
                    }
                }
                drop(y);
                out.parents[0].accumulate_grad(&dx);
            }) as BackwardFn
        });
        Tensor::build("group_softmax", rows, cols, values, tracked, parents, backward)
    }

    /// Sum consecutive row groups of size `k`: (g*k, c) -> (g, c).
    pub fn sum_groups(&self, k: usize) -> Result<Tensor> {
        let (rows, cols) = (self.0.rows, self.0.cols);
        if k == 0 || rows % k != 0 {
            return Err(Error::invalid(
                "sum_groups",
                format!("rows {rows} not a multiple of group size {k}"),
            ));
        }
        let groups = rows / k;
        let v = self.values();
        let mut values = vec![0.0; groups * cols];
        for g in 0..groups {
            for r in 0..k {
                for c in 0..cols {
                    values[g * cols + c] += v[(g * k + r) * cols + c];
                }
            }
        }
        drop(v);
        let tracked = self.0.tracked;
        let parents = vec![self.clone()];
        let backward: Option<BackwardFn> = tracked.then(|| {
            Box::new(move |out: &Inner| {
                let g = out.grad.borrow();
                let mut dx = vec![0.0; rows * cols];
                for gi in 0..groups {
                    for r in 0..k {
                        for c in 0..cols {
                            dx[(gi * k + r) * cols + c] = g[gi * cols + c];
                        }
                    }
                }
                out.parents[0].accumulate_grad(&dx);
            }) as BackwardFn
        });
        Tensor::build("sum_groups", groups, cols, values, tracked, parents, backward)
    }

    /// Column-wise max over consecutive row groups of size `k`; gradient
    /// routes to the first maximal entry of each (group, column).
    pub fn max_groups(&self, k: usize) -> Result<Tensor> {
        let (rows, cols) = (self.0.rows, self.0.cols);
        if k == 0 || rows % k != 0 {
            return Err(Error::invalid(
                "max_groups",
                format!("rows {rows} not a multiple of group size {k}"),
            ));
        }
        let groups = rows / k;
        let v = self.values();
        let mut values = vec![0.0; groups * cols];
        let mut argmax = vec![0usize; groups * cols];
        for g in 0..groups {
            for c in 0..cols {
                let mut best = f64::NEG_INFINITY;
                let mut best_r = 0;
                for r in 0..k {
                    let val = v[(g * k + r) * cols + c];
                    if val > best {
                        best = val;
                        best_r = r;
                    }
                }
                values[g * cols + c] = best;
                argmax[g * cols + c] = best_r;
            }
        }
        drop(v);
        let tracked = self.0.tracked;
        let parents = vec![self.clone()];
        let backward: Option<BackwardFn> = tracked.then(|| {
            Box::new(move |out: &Inner| {
                let g = out.grad.borrow();
                let mut dx = vec![0.0; rows * cols];
                for gi in 0..groups {
                    for c in 0..cols {
                        let r = argmax[gi * cols + c];
                        dx[(gi * k + r) * cols + c] = g[gi * cols + c];
                    }
                }
                out.parents[0].accumulate_grad(&dx);
            }) as BackwardFn
        });
        Tensor::build("max_groups", groups, cols, values, tracked, parents, backward)
    }

    pub fn sum_all(&self) -> Result<Tensor> {
        let total: f64 = self.values().iter().sum();
        let tracked = self.0.tracked;
        let parents = vec![self.clone()];
        let n = self.len();
        let backward: Option<BackwardFn> = tracked.then(|| {
            Box::new(move |out: &Inner| {
                let g = out.grad.borrow()[0];
                out.parents[0].accumulate_grad(&vec![g; n]);
            }) as BackwardFn
        });
        Tensor::build("sum_all", 1, 1, vec![total], tracked, parents, backward)
    }

    pub fn mean_all(&self) -> Result<Tensor> {
        let n = self.len();
        if n == 0 {
            return Err(Error::invalid("mean_all", "empty tensor"));
        }
        let mean: f64 = self.values().iter().sum::<f64>() / n as f64;
        let tracked = self.0.tracked;
        let parents = vec![self.clone()];
        let backward: Option<BackwardFn> = tracked.then(|| {
            Box::new(move |out: &Inner| {
                let g = out.grad.borrow()[0] / n as f64;
                out.parents[0].accumulate_grad(&vec![g; n]);
            }) as BackwardFn
        });
        Tensor::build("mean_all", 1, 1, vec![mean], tracked, parents, backward)
    }
}

fn softmax_in_place(row: &mut [f64]) {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - m).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

fn matmul_into(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        for p in 0..k {
            let aip = a[i * k + p];
            if aip != 0.0 {
                let b_row = &b[p * n..(p + 1) * n];
                let c_row = &mut c[i * n..(i + 1) * n];
                for j in 0..n {
                    c_row[j] += aip * b_row[j];
                }
            }
        }
    }
}

/// Central finite-difference gradients of a scalar-valued forward pass with
/// respect to each listed leaf. The forward closure is re-evaluated with
/// perturbed leaf values, so this path is independent of the backward
/// implementation it is used to verify.
pub fn finite_difference_grad(
    params: &[Tensor],
    forward: &dyn Fn() -> Result<Tensor>,
    h: f64,
) -> Result<Vec<Vec<f64>>> {
    let mut grads = Vec::with_capacity(params.len());
    for p in params {
        let n = p.len();
        let mut fd = vec![0.0; n];
        for i in 0..n {
            let original = p.values()[i];
            let mut vals = p.to_vec();
            vals[i] = original + h;
            p.set_values(&vals);
            let plus = forward()?.item();
            vals[i] = original - h;
            p.set_values(&vals);
            let minus = forward()?.item();
            vals[i] = original;
            p.set_values(&vals);
            fd[i] = (plus - minus) / (2.0 * h);
        }
        grads.push(fd);
    }
    Ok(grads)
}

/// Run analytic backward and central finite differences on the same forward
/// pass and return the maximum relative error across all checked entries.
/// `subsample` limits the number of entries checked per tensor (deterministic
/// under `seed`); `None` checks every entry.
pub fn gradient_check(
    params: &[Tensor],
    forward: &dyn Fn() -> Result<Tensor>,
    h: f64,
    subsample: Option<usize>,
    seed: u64,
) -> Result<f64> {
    for p in params {
        p.zero_grad();
    }
    let loss = forward()?;
    loss.backward()?;
    let analytic: Vec<Vec<f64>> = params.iter().map(|p| p.grad()).collect();

    let mut rng = Rng::new(seed);
    let mut max_rel: f64 = 0.0;
    for (p, a) in params.iter().zip(&analytic) {
        let n = p.len();
        let indices: Vec<usize> = match subsample {
            Some(s) if s < n => (0..s).map(|_| rng.uniform_usize(n)).collect(),
            _ => (0..n).collect(),
        };
        for &i in &indices {
            let original = p.values()[i];
            let mut vals = p.to_vec();
            vals[i] = original + h;
            p.set_values(&vals);
            let plus = forward()?.item();
            vals[i] = original - h;
            p.set_values(&vals);
            let minus = forward()?.item();
            vals[i] = original;
            p.set_values(&vals);
            let fd = (plus - minus) / (2.0 * h);
            let rel = (a[i] - fd).abs() / a[i].abs().max(fd.abs()).max(1e-5);
            max_rel = max_rel.max(rel);
        }
    }
    Ok(max_rel)
}
