//! A minimal reverse-mode automatic-differentiation tape over dense
//! matrices.
//!
//! Every value is a named `Array2<f64>` node (row vectors are `1 x c`,
//! scalars `1 x 1`). Operations append nodes eagerly during the forward
//! pass; [`Tape::backward`] walks the recorded operations in reverse and
//! accumulates gradients. Each node's value is checked for finiteness when
//! recorded, so numerical blow-ups surface as an error naming the offending
//! tensor.

use ndarray::{Array2, Axis};

use crate::error::{CoreError, Result};

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    /// Input with no parents.
    Leaf,
    /// Matrix product `lhs . rhs`.
    MatMul(usize, usize),
    /// Matrix plus a broadcast `1 x c` row.
    AddRow(usize, usize),
    /// Elementwise `max(x, 0)`.
    Relu(usize),
    /// Column means, producing a `1 x c` row.
    MeanRows(usize),
    /// Row-wise log-softmax of a `1 x c` row.
    LogSoftmax(usize),
    /// Elementwise exponential.
    Exp(usize),
    /// Elementwise product of same-shape nodes.
    Mul(usize, usize),
    /// Sum of all entries, producing `1 x 1`.
    Sum(usize),
    /// One entry of a `1 x c` row, producing `1 x 1`.
    Pick(usize, usize),
    /// Multiplication by a constant.
    Scale(usize, f64),
    /// Elementwise sum of same-shape nodes.
    Add(usize, usize),
}

/// The recorded computation.
pub struct Tape {
    values: Vec<Array2<f64>>,
    ops: Vec<Op>,
    labels: Vec<&'static str>,
}

impl Tape {
    /// An empty tape.
    pub fn new() -> Tape {
        Tape {
            values: Vec::new(),
            ops: Vec::new(),
            labels: Vec::new(),
        }
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Whether the tape holds no nodes.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The forward value of a node.
    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.values[v.0]
    }

    /// The scalar value of a `1 x 1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        let val = &self.values[v.0];
        debug_assert_eq!(val.dim(), (1, 1));
        val[[0, 0]]
    }

    fn push(&mut self, value: Array2<f64>, op: Op, label: &'static str) -> Result<Var> {
        if !value.iter().all(|v| v.is_finite()) {
            return Err(CoreError::NonFinite { tensor: label });
        }
        self.values.push(value);
        self.ops.push(op);
        self.labels.push(label);
        Ok(Var(self.values.len() - 1))
    }

    /// Records an input node.
    pub fn leaf(&mut self, value: Array2<f64>, label: &'static str) -> Result<Var> {
        self.push(value, Op::Leaf, label)
    }

    /// Records `a . b`.
    pub fn matmul(&mut self, a: Var, b: Var, label: &'static str) -> Result<Var> {
        let value = self.values[a.0].dot(&self.values[b.0]);
        self.push(value, Op::MatMul(a.0, b.0), label)
    }

    /// Records `m + row` with `row` broadcast over the rows of `m`.
    pub fn add_row(&mut self, m: Var, row: Var, label: &'static str) -> Result<Var> {
        debug_assert_eq!(self.values[row.0].nrows(), 1);
        let value = &self.values[m.0] + &self.values[row.0];
        self.push(value, Op::AddRow(m.0, row.0), label)
    }

    /// Records `max(x, 0)`.
    pub fn relu(&mut self, x: Var, label: &'static str) -> Result<Var> {
        let value = self.values[x.0].mapv(|v| v.max(0.0));
        self.push(value, Op::Relu(x.0), label)
    }

    /// Records the column means of `x` as a `1 x c` row.
    pub fn mean_rows(&mut self, x: Var, label: &'static str) -> Result<Var> {
        let v = &self.values[x.0];
        let mean = v.sum_axis(Axis(0)) / v.nrows() as f64;
        let value = mean.insert_axis(Axis(0));
        self.push(value, Op::MeanRows(x.0), label)
    }

    /// Records the log-softmax of a `1 x c` row.
    pub fn log_softmax(&mut self, x: Var, label: &'static str) -> Result<Var> {
        let v = &self.values[x.0];
        debug_assert_eq!(v.nrows(), 1);
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + v.iter().map(|&a| (a - max).exp()).sum::<f64>().ln();
        let value = v.mapv(|a| a - lse);
        self.push(value, Op::LogSoftmax(x.0), label)
    }

    /// Records `exp(x)`.
    pub fn exp(&mut self, x: Var, label: &'static str) -> Result<Var> {
        let value = self.values[x.0].mapv(f64::exp);
        self.push(value, Op::Exp(x.0), label)
    }

    /// Records the elementwise product of same-shape nodes.
    pub fn mul(&mut self, a: Var, b: Var, label: &'static str) -> Result<Var> {
        let value = &self.values[a.0] * &self.values[b.0];
        self.push(value, Op::Mul(a.0, b.0), label)
    }

    /// Records the sum of all entries as a `1 x 1` scalar.
    pub fn sum(&mut self, x: Var, label: &'static str) -> Result<Var> {
        let value = Array2::from_elem((1, 1), self.values[x.0].sum());
        self.push(value, Op::Sum(x.0), label)
    }

    /// Records entry `index` of a `1 x c` row as a `1 x 1` scalar.
    pub fn pick(&mut self, x: Var, index: usize, label: &'static str) -> Result<Var> {
        let value = Array2::from_elem((1, 1), self.values[x.0][[0, index]]);
        self.push(value, Op::Pick(x.0, index), label)
    }

    /// Records `c * x`.
    pub fn scale(&mut self, x: Var, c: f64, label: &'static str) -> Result<Var> {
        let value = self.values[x.0].mapv(|v| c * v);
        self.push(value, Op::Scale(x.0, c), label)
    }

    /// Records the elementwise sum of same-shape nodes.
    pub fn add(&mut self, a: Var, b: Var, label: &'static str) -> Result<Var> {
        let value = &self.values[a.0] + &self.values[b.0];
        self.push(value, Op::Add(a.0, b.0), label)
    }

    /// Runs the backward pass from scalar node `root`, returning the
    /// gradient of every node. Gradients are validated for finiteness; the
    /// error names the node whose gradient first blew up.
    pub fn backward(&self, root: Var) -> Result<Vec<Array2<f64>>> {
        let mut grads: Vec<Array2<f64>> = self
            .values
            .iter()
            .map(|v| Array2::zeros(v.raw_dim()))
            .collect();
        debug_assert_eq!(self.values[root.0].dim(), (1, 1));
        grads[root.0][[0, 0]] = 1.0;

        for i in (0..self.ops.len()).rev() {
            if grads[i].iter().all(|&g| g == 0.0) {
                continue;
            }
            let g = grads[i].clone();
            match self.ops[i] {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let ga = g.dot(&self.values[b].t());
                    let gb = self.values[a].t().dot(&g);
                    grads[a] += &ga;
                    grads[b] += &gb;
                }
                Op::AddRow(m, row) => {
                    grads[m] += &g;
                    let col_sum = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    grads[row] += &col_sum;
                }
                Op::Relu(x) => {
                    let mask = self.values[x].mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                    grads[x] += &(&g * &mask);
                }
                Op::MeanRows(x) => {
                    let n = self.values[x].nrows() as f64;
                    let spread = &g / n;
                    for mut row in grads[x].rows_mut() {
                        row += &spread.row(0);
                    }
                }
                Op::LogSoftmax(x) => {
                    // d/dx = g - softmax(x) * sum(g).
                    let softmax = self.values[i].mapv(f64::exp);
                    let g_sum = g.sum();
                    grads[x] += &(&g - &(softmax * g_sum));
                }
                Op::Exp(x) => {
                    grads[x] += &(&g * &self.values[i]);
                }
                Op::Mul(a, b) => {
                    let ga = &g * &self.values[b];
                    let gb = &g * &self.values[a];
                    grads[a] += &ga;
                    grads[b] += &gb;
                }
                Op::Sum(x) => {
                    grads[x] += g[[0, 0]];
                }
                Op::Pick(x, index) => {
                    grads[x][[0, index]] += g[[0, 0]];
                }
                Op::Scale(x, c) => {
                    grads[x] += &(&g * c);
                }
                Op::Add(a, b) => {
                    grads[a] += &g;
                    grads[b] += &g;
                }
            }
        }

        for (i, grad) in grads.iter().enumerate() {
            if !grad.iter().all(|v| v.is_finite()) {
                return Err(CoreError::NonFinite {
                    tensor: self.labels[i],
                });
            }
        }
        Ok(grads)
    }

    /// Extracts the gradient of `v` from a [`Tape::backward`] result.
    pub fn grad_of<'g>(&self, grads: &'g [Array2<f64>], v: Var) -> &'g Array2<f64> {
        &grads[v.0]
    }
}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    /// Central finite difference of a scalar function of one tape leaf.
    fn finite_diff(
        build: impl Fn(&Array2<f64>) -> f64,
        at: &Array2<f64>,
        step: f64,
    ) -> Array2<f64> {
        let mut grad = Array2::zeros(at.raw_dim());
        for idx in 0..at.len() {
            let (r, c) = (idx / at.ncols(), idx % at.ncols());
            let mut plus = at.clone();
            plus[[r, c]] += step;
            let mut minus = at.clone();
            minus[[r, c]] -= step;
            grad[[r, c]] = (build(&plus) - build(&minus)) / (2.0 * step);
        }
        grad
    }

    #[test]
    fn matmul_chain_matches_finite_differences() {
        let w = arr2(&[[0.3, -0.7], [1.1, 0.4], [-0.2, 0.9]]);
        let x0 = arr2(&[[0.5, -1.2, 0.8], [0.1, 0.7, -0.4]]);
        let f = |x: &Array2<f64>| {
            let mut tape = Tape::new();
            let xv = tape.leaf(x.clone(), "x").unwrap();
            let wv = tape.leaf(w.clone(), "w").unwrap();
            let y = tape.matmul(xv, wv, "y").unwrap();
            let r = tape.relu(y, "relu").unwrap();
            let m = tape.mean_rows(r, "mean").unwrap();
            let s = tape.sum(m, "sum").unwrap();
            tape.scalar(s)
        };
        let mut tape = Tape::new();
        let xv = tape.leaf(x0.clone(), "x").unwrap();
        let wv = tape.leaf(w.clone(), "w").unwrap();
        let y = tape.matmul(xv, wv, "y").unwrap();
        let r = tape.relu(y, "relu").unwrap();
        let m = tape.mean_rows(r, "mean").unwrap();
        let s = tape.sum(m, "sum").unwrap();
        let grads = tape.backward(s).unwrap();
        let analytic = tape.grad_of(&grads, xv);
        let numeric = finite_diff(f, &x0, 1e-6);
        for (a, n) in analytic.iter().zip(numeric.iter()) {
            assert!((a - n).abs() < 1e-7, "analytic {a} vs numeric {n}");
        }
    }

    #[test]
    fn log_softmax_entropy_matches_finite_differences() {
        let x0 = arr2(&[[0.2, -0.5, 1.3, 0.0]]);
        // f = -sum(p * log p) with p = softmax(x): the entropy.
        let f = |x: &Array2<f64>| {
            let mut tape = Tape::new();
            let xv = tape.leaf(x.clone(), "x").unwrap();
            let ls = tape.log_softmax(xv, "ls").unwrap();
            let p = tape.exp(ls, "p").unwrap();
            let pl = tape.mul(p, ls, "p_logp").unwrap();
            let s = tape.sum(pl, "sum").unwrap();
            let h = tape.scale(s, -1.0, "entropy").unwrap();
            tape.scalar(h)
        };
        let mut tape = Tape::new();
        let xv = tape.leaf(x0.clone(), "x").unwrap();
        let ls = tape.log_softmax(xv, "ls").unwrap();
        let p = tape.exp(ls, "p").unwrap();
        let pl = tape.mul(p, ls, "p_logp").unwrap();
        let s = tape.sum(pl, "sum").unwrap();
        let h = tape.scale(s, -1.0, "entropy").unwrap();
        let grads = tape.backward(h).unwrap();
        let numeric = finite_diff(f, &x0, 1e-6);
        for (a, n) in tape.grad_of(&grads, xv).iter().zip(numeric.iter()) {
            assert!((a - n).abs() < 1e-7, "analytic {a} vs numeric {n}");
        }
    }

    #[test]
    fn pick_and_add_row_route_gradients_correctly() {
        let m0 = arr2(&[[1.0, 2.0], [3.0, 4.0]]);
        let b0 = arr2(&[[0.5, -0.5]]);
        let mut tape = Tape::new();
        let m = tape.leaf(m0, "m").unwrap();
        let b = tape.leaf(b0, "b").unwrap();
        let y = tape.add_row(m, b, "y").unwrap();
        let pooled = tape.mean_rows(y, "pooled").unwrap();
        let picked = tape.pick(pooled, 1, "picked").unwrap();
        let grads = tape.backward(picked).unwrap();
        // d picked / d m = 0.5 on column 1, 0 elsewhere.
        assert_eq!(tape.grad_of(&grads, m), &arr2(&[[0.0, 0.5], [0.0, 0.5]]));
        // d picked / d b = [0, 1].
        assert_eq!(tape.grad_of(&grads, b), &arr2(&[[0.0, 1.0]]));
    }

    #[test]
    fn non_finite_forward_values_name_the_tensor() {
        let mut tape = Tape::new();
        let x = tape
            .leaf(arr2(&[[700.0, 710.0]]), "big_logits")
            .unwrap();
        let err = tape.exp(x, "overflowed_exp").unwrap_err();
        match err {
            CoreError::NonFinite { tensor } => assert_eq!(tensor, "overflowed_exp"),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
