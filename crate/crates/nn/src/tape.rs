use crate::error::{Error, Result};
use crate::matrix::{gemm, Matrix};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    /// `x · wᵀ + b`, bias broadcast over rows.
    Linear {
        x: usize,
        w: usize,
        b: Option<usize>,
    },
    /// `a · bᵀ`
    MatMulNT {
        a: usize,
        b: usize,
    },
    Tanh(usize),
    Sin(usize),
    Cos(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    AddScalar(usize),
    Square(usize),
    Sum(usize),
    WeightedSum {
        x: usize,
        w: Matrix,
    },
    /// `Σ a∘x + h∘x²`
    WeightedQuadratic {
        x: usize,
        a: Matrix,
        h: Matrix,
    },
    /// Row `i·n_b + l` is `a[i] ∘ b[l]`.
    PairProduct {
        a: usize,
        b: usize,
    },
    Columns {
        x: usize,
        start: usize,
    },
}

#[derive(Debug, Clone)]
struct Node {
    value: Matrix,
    op: Op,
    needs_grad: bool,
}

/// Reverse-mode computation graph over whole matrices.
///
/// Leaves are either parameters (differentiated) or constants. Every other
/// node records the op that produced it, and [`Tape::backward`] walks the
/// nodes in reverse creation order.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Adjoints produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// Gradient of the root with respect to `v`, `None` if `v` does not
    /// influence the root through differentiable nodes.
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Like [`get`](Self::get) but returns zeros of the right shape.
    pub fn get_or_zeros(&self, v: Var, rows: usize, cols: usize) -> Matrix {
        self.get(v).cloned().unwrap_or_else(|| Matrix::zeros(rows, cols))
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

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    /// Scalar value of a 1×1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        let m = self.value(v);
        debug_assert_eq!(m.shape(), (1, 1));
        m.as_slice()[0]
    }

    fn push(&mut self, value: Matrix, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn val(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn param(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// `x · wᵀ + b`. `x` is `n×in`, `w` is `out×in`, `b` is `1×out`.
    pub fn linear(&mut self, x: Var, w: Var, b: Option<Var>) -> Var {
        let (xv, wv) = (self.val(x), self.val(w));
        assert_eq!(xv.cols(), wv.cols(), "linear: input width mismatch");
        let mut y = Matrix::zeros(xv.rows(), wv.rows());
        if let Some(b) = b {
            let bv = self.val(b);
            assert_eq!(bv.shape(), (1, wv.rows()), "linear: bias shape");
            for r in 0..y.rows() {
                y.row_mut(r).copy_from_slice(bv.as_slice());
            }
        }
        let beta = if b.is_some() { 1.0 } else { 0.0 };
        gemm(1.0, xv, false, wv, true, beta, &mut y);
        let ng = self.ng(x) || self.ng(w) || b.is_some_and(|b| self.ng(b));
        self.push(
            y,
            Op::Linear {
                x: x.0,
                w: w.0,
                b: b.map(|b| b.0),
            },
            ng,
        )
    }

    /// `a · bᵀ`
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Var {
        let y = Matrix::matmul_nt(self.val(a), self.val(b));
        let ng = self.ng(a) || self.ng(b);
        self.push(y, Op::MatMulNT { a: a.0, b: b.0 }, ng)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let y = self.val(x).map(f64::tanh);
        let ng = self.ng(x);
        self.push(y, Op::Tanh(x.0), ng)
    }

    pub fn sin(&mut self, x: Var) -> Var {
        let y = self.val(x).map(f64::sin);
        let ng = self.ng(x);
        self.push(y, Op::Sin(x.0), ng)
    }

    pub fn cos(&mut self, x: Var) -> Var {
        let y = self.val(x).map(f64::cos);
        let ng = self.ng(x);
        self.push(y, Op::Cos(x.0), ng)
    }

    fn zip(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Matrix {
        let (av, bv) = (self.val(a), self.val(b));
        assert_eq!(av.shape(), bv.shape(), "elementwise shape mismatch");
        let data = av
            .as_slice()
            .iter()
            .zip(bv.as_slice())
            .map(|(&p, &q)| f(p, q))
            .collect();
        Matrix::from_vec(av.rows(), av.cols(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let y = self.zip(a, b, |p, q| p + q);
        let ng = self.ng(a) || self.ng(b);
        self.push(y, Op::Add(a.0, b.0), ng)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let y = self.zip(a, b, |p, q| p - q);
        let ng = self.ng(a) || self.ng(b);
        self.push(y, Op::Sub(a.0, b.0), ng)
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let y = self.zip(a, b, |p, q| p * q);
        let ng = self.ng(a) || self.ng(b);
        self.push(y, Op::Mul(a.0, b.0), ng)
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let y = self.val(x).map(|v| c * v);
        let ng = self.ng(x);
        self.push(y, Op::Scale(x.0, c), ng)
    }

    pub fn add_scalar(&mut self, x: Var, c: f64) -> Var {
        let y = self.val(x).map(|v| v + c);
        let ng = self.ng(x);
        self.push(y, Op::AddScalar(x.0), ng)
    }

    pub fn square(&mut self, x: Var) -> Var {
        let y = self.val(x).map(|v| v * v);
        let ng = self.ng(x);
        self.push(y, Op::Square(x.0), ng)
    }

    /// Sum of all entries, as a 1×1 node.
    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.val(x).sum();
        let ng = self.ng(x);
        self.push(Matrix::scalar(s), Op::Sum(x.0), ng)
    }

    /// `Σ w∘x` with constant weights.
    pub fn weighted_sum(&mut self, x: Var, w: Matrix) -> Var {
        let xv = self.val(x);
        assert_eq!(xv.shape(), w.shape(), "weighted_sum shape mismatch");
        let s = xv
            .as_slice()
            .iter()
            .zip(w.as_slice())
            .map(|(p, q)| p * q)
            .sum();
        let ng = self.ng(x);
        self.push(Matrix::scalar(s), Op::WeightedSum { x: x.0, w }, ng)
    }

    /// `Σ (a∘x + h∘x²)` with constant `a`, `h`. This is the discrete
    /// quadratic form every Rayleighian reduces to once `u` is fixed.
    pub fn weighted_quadratic(&mut self, x: Var, a: Matrix, h: Matrix) -> Var {
        let xv = self.val(x);
        assert_eq!(xv.shape(), a.shape(), "weighted_quadratic: a shape");
        assert_eq!(xv.shape(), h.shape(), "weighted_quadratic: h shape");
        let s = xv
            .as_slice()
            .iter()
            .zip(a.as_slice().iter().zip(h.as_slice()))
            .map(|(&x, (&a, &h))| a * x + h * x * x)
            .sum();
        let ng = self.ng(x);
        self.push(Matrix::scalar(s), Op::WeightedQuadratic { x: x.0, a, h }, ng)
    }

    /// All pairwise row products: row `i·b.rows() + l` equals `a[i] ∘ b[l]`.
    pub fn pair_product(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.val(a), self.val(b));
        assert_eq!(av.cols(), bv.cols(), "pair_product width mismatch");
        let (na, nb, p) = (av.rows(), bv.rows(), av.cols());
        let mut y = Matrix::zeros(na * nb, p);
        for i in 0..na {
            let ra = av.row(i);
            for l in 0..nb {
                let rb = bv.row(l);
                for ((o, x), z) in y.row_mut(i * nb + l).iter_mut().zip(ra).zip(rb) {
                    *o = x * z;
                }
            }
        }
        let ng = self.ng(a) || self.ng(b);
        self.push(y, Op::PairProduct { a: a.0, b: b.0 }, ng)
    }

    /// Columns `start..start + len` of `x`.
    pub fn columns(&mut self, x: Var, start: usize, len: usize) -> Var {
        let xv = self.val(x);
        assert!(start + len <= xv.cols(), "columns out of range");
        let mut y = Matrix::zeros(xv.rows(), len);
        for r in 0..xv.rows() {
            y.row_mut(r)
                .copy_from_slice(&xv.row(r)[start..start + len]);
        }
        let ng = self.ng(x);
        self.push(y, Op::Columns { x: x.0, start }, ng)
    }

    /// Reverse sweep from a scalar root.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        let Some(node) = self.nodes.get(root.0) else {
            return Err(Error::UnsupportedGraph(format!(
                "root {} is not on this tape",
                root.0
            )));
        };
        if node.value.shape() != (1, 1) {
            return Err(Error::UnsupportedGraph(format!(
                "loss root must be scalar, got {}x{}",
                node.value.rows(),
                node.value.cols()
            )));
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; root.0 + 1];
        grads[root.0] = Some(Matrix::scalar(1.0));

        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                grads[i] = Some(g);
                continue;
            }
            self.propagate(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node, g: &Matrix, grads: &mut [Option<Matrix>]) {
        let nodes = &self.nodes;
        let wants = |k: usize| nodes[k].needs_grad;
        match &node.op {
            Op::Leaf => {}
            Op::Linear { x, w, b } => {
                if wants(*x) {
                    let wv = &nodes[*w].value;
                    let acc = slot(grads, *x, g.rows(), wv.cols());
                    gemm(1.0, g, false, wv, false, 1.0, acc);
                }
                if wants(*w) {
                    let xv = &nodes[*x].value;
                    let acc = slot(grads, *w, g.cols(), xv.cols());
                    gemm(1.0, g, true, xv, false, 1.0, acc);
                }
                if let Some(b) = b {
                    if wants(*b) {
                        let acc = slot(grads, *b, 1, g.cols());
                        for r in 0..g.rows() {
                            for (a, v) in acc.as_mut_slice().iter_mut().zip(g.row(r)) {
                                *a += v;
                            }
                        }
                    }
                }
            }
            Op::MatMulNT { a, b } => {
                let (av, bv) = (&nodes[*a].value, &nodes[*b].value);
                if wants(*a) {
                    let acc = slot(grads, *a, av.rows(), av.cols());
                    gemm(1.0, g, false, bv, false, 1.0, acc);
                }
                if wants(*b) {
                    let acc = slot(grads, *b, bv.rows(), bv.cols());
                    gemm(1.0, g, true, av, false, 1.0, acc);
                }
            }
            Op::Tanh(x) => {
                let y = &node.value;
                accumulate_with(grads, *x, g, |k, gv| gv * (1.0 - y.as_slice()[k].powi(2)));
            }
            Op::Sin(x) => {
                let xv = &nodes[*x].value;
                accumulate_with(grads, *x, g, |k, gv| gv * xv.as_slice()[k].cos());
            }
            Op::Cos(x) => {
                let xv = &nodes[*x].value;
                accumulate_with(grads, *x, g, |k, gv| -gv * xv.as_slice()[k].sin());
            }
            Op::Add(a, b) => {
                if wants(*a) {
                    accumulate_with(grads, *a, g, |_, gv| gv);
                }
                if wants(*b) {
                    accumulate_with(grads, *b, g, |_, gv| gv);
                }
            }
            Op::Sub(a, b) => {
                if wants(*a) {
                    accumulate_with(grads, *a, g, |_, gv| gv);
                }
                if wants(*b) {
                    accumulate_with(grads, *b, g, |_, gv| -gv);
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (&nodes[*a].value, &nodes[*b].value);
                if wants(*a) {
                    accumulate_with(grads, *a, g, |k, gv| gv * bv.as_slice()[k]);
                }
                if wants(*b) {
                    accumulate_with(grads, *b, g, |k, gv| gv * av.as_slice()[k]);
                }
            }
            Op::Scale(x, c) => accumulate_with(grads, *x, g, |_, gv| c * gv),
            Op::AddScalar(x) => accumulate_with(grads, *x, g, |_, gv| gv),
            Op::Square(x) => {
                let xv = &nodes[*x].value;
                accumulate_with(grads, *x, g, |k, gv| 2.0 * xv.as_slice()[k] * gv);
            }
            Op::Sum(x) => {
                let s = g.as_slice()[0];
                let (r, c) = nodes[*x].value.shape();
                let acc = slot(grads, *x, r, c);
                for v in acc.as_mut_slice() {
                    *v += s;
                }
            }
            Op::WeightedSum { x, w } => {
                let s = g.as_slice()[0];
                let acc = slot(grads, *x, w.rows(), w.cols());
                acc.axpy(s, w);
            }
            Op::WeightedQuadratic { x, a, h } => {
                let s = g.as_slice()[0];
                let xv = &nodes[*x].value;
                let acc = slot(grads, *x, xv.rows(), xv.cols());
                for (k, o) in acc.as_mut_slice().iter_mut().enumerate() {
                    *o += s * (a.as_slice()[k] + 2.0 * h.as_slice()[k] * xv.as_slice()[k]);
                }
            }
            Op::PairProduct { a, b } => {
                let (av, bv) = (&nodes[*a].value, &nodes[*b].value);
                let (na, nb) = (av.rows(), bv.rows());
                if wants(*a) {
                    let acc = slot(grads, *a, na, av.cols());
                    for i in 0..na {
                        let out = acc.row_mut(i);
                        for l in 0..nb {
                            for ((o, gv), z) in out.iter_mut().zip(g.row(i * nb + l)).zip(bv.row(l)) {
                                *o += gv * z;
                            }
                        }
                    }
                }
                if wants(*b) {
                    let acc = slot(grads, *b, nb, bv.cols());
                    for i in 0..na {
                        for l in 0..nb {
                            let out = acc.row_mut(l);
                            for ((o, gv), z) in out.iter_mut().zip(g.row(i * nb + l)).zip(av.row(i)) {
                                *o += gv * z;
                            }
                        }
                    }
                }
            }
            Op::Columns { x, start } => {
                let (r, c) = nodes[*x].value.shape();
                let acc = slot(grads, *x, r, c);
                for row in 0..r {
                    let dst = &mut acc.row_mut(row)[*start..*start + g.cols()];
                    for (o, gv) in dst.iter_mut().zip(g.row(row)) {
                        *o += gv;
                    }
                }
            }
        }
    }
}

fn slot(grads: &mut [Option<Matrix>], k: usize, rows: usize, cols: usize) -> &mut Matrix {
    grads[k].get_or_insert_with(|| Matrix::zeros(rows, cols))
}

fn accumulate_with(
    grads: &mut [Option<Matrix>],
    k: usize,
    g: &Matrix,
    f: impl Fn(usize, f64) -> f64,
) {
    let acc = slot(grads, k, g.rows(), g.cols());
    for (idx, (o, &gv)) in acc.as_mut_slice().iter_mut().zip(g.as_slice()).enumerate() {
        *o += f(idx, gv);
    }
}
