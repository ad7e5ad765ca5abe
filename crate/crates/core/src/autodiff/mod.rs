//! Dense tensors with a reverse-mode tape, covering the ops the fusion head
//! needs. A fresh [`Graph`] is built for every forward pass.

mod adam;

pub use adam::{Adam, AdamConfig};

use std::borrow::Cow;

use crate::error::{Error, Result};

/// Row-major block of 64-bit reals. Vectors have shape `[n]`, matrices
/// `[rows, cols]`, scalars `[]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor {
            shape: vec![],
            data: vec![v],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    /// (rows, cols) of a matrix.
    fn matrix_dims(&self, what: &str) -> Result<(usize, usize)> {
        match self.shape[..] {
            [r, c] => Ok((r, c)),
            _ => Err(Error::Shape(format!("{what}: expected a matrix, got {:?}", self.shape))),
        }
    }

    fn vector_len(&self, what: &str) -> Result<usize> {
        match self.shape[..] {
            [n] => Ok(n),
            _ => Err(Error::Shape(format!("{what}: expected a vector, got {:?}", self.shape))),
        }
    }
}

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Affine { w: Var, x: Var, b: Var },
    Outer { a: Var, b: Var, scale: f64 },
    RowSoftmax(Var),
    MatVec { a: Var, v: Var },
    Relu(Var),
    SquaredError { pred: Var, target: f64 },
    LayerNorm { x: Var, inv_std: f64 },
    Concat(Var, Var),
    Sum(Vec<Var>),
}

#[derive(Debug)]
struct Node<'a> {
    value: Cow<'a, Tensor>,
    op: Op,
}

/// Epsilon inside the layer-norm square root.
pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Recording tape. Ops append nodes; [`Graph::backward`] walks them in
/// reverse.
#[derive(Debug, Default)]
pub struct Graph<'a> {
    nodes: Vec<Node<'a>>,
}

impl<'a> Graph<'a> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node {
            value: Cow::Owned(value),
            op,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Adds an input or parameter.
    pub fn leaf(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf)
    }

    /// Adds a borrowed input or parameter without copying it.
    pub fn leaf_ref(&mut self, t: &'a Tensor) -> Var {
        self.nodes.push(Node {
            value: Cow::Borrowed(t),
            op: Op::Leaf,
        });
        Var(self.nodes.len() - 1)
    }

    /// `W x + b`.
    pub fn affine(&mut self, w: Var, x: Var, b: Var) -> Result<Var> {
        let (m, n) = self.value(w).matrix_dims("affine weight")?;
        let xn = self.value(x).vector_len("affine input")?;
        let bm = self.value(b).vector_len("affine bias")?;
        if xn != n || bm != m {
            return Err(Error::Shape(format!("affine: W is {m}x{n}, x has {xn}, b has {bm}")));
        }
        let (wd, xd, bd) = (self.value(w).data(), self.value(x).data(), self.value(b).data());
        let out = (0..m).map(|i| bd[i] + dot(&wd[i * n..(i + 1) * n], xd)).collect();
        Ok(self.push(Tensor::vector(out), Op::Affine { w, x, b }))
    }

    /// `scale * a bᵀ`.
    pub fn outer(&mut self, a: Var, b: Var, scale: f64) -> Result<Var> {
        let m = self.value(a).vector_len("outer left")?;
        let n = self.value(b).vector_len("outer right")?;
        let (ad, bd) = (self.value(a).data(), self.value(b).data());
        let mut out = Vec::with_capacity(m * n);
        for &ai in ad {
            out.extend(bd.iter().map(|&bj| scale * ai * bj));
        }
        Ok(self.push(Tensor::new(&[m, n], out)?, Op::Outer { a, b, scale }))
    }

    /// Softmax along each row, stabilized by subtracting the row maximum.
    pub fn row_softmax(&mut self, s: Var) -> Result<Var> {
        let (r, c) = self.value(s).matrix_dims("row_softmax")?;
        let mut out = self.value(s).data().to_vec();
        for row in out.chunks_mut(c) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                z += *v;
            }
            for v in row.iter_mut() {
                *v /= z;
            }
        }
        Ok(self.push(Tensor::new(&[r, c], out)?, Op::RowSoftmax(s)))
    }

    /// `A v`.
    pub fn matvec(&mut self, a: Var, v: Var) -> Result<Var> {
        let (m, n) = self.value(a).matrix_dims("matvec")?;
        let vn = self.value(v).vector_len("matvec vector")?;
        if vn != n {
            return Err(Error::Shape(format!("matvec: A is {m}x{n}, v has {vn}")));
        }
        let (ad, vd) = (self.value(a).data(), self.value(v).data());
        let out = (0..m).map(|i| dot(&ad[i * n..(i + 1) * n], vd)).collect();
        Ok(self.push(Tensor::vector(out), Op::MatVec { a, v }))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let out = Tensor {
            shape: t.shape.clone(),
            data: t.data.iter().map(|&v| v.max(0.0)).collect(),
        };
        self.push(out, Op::Relu(x))
    }

    /// `(target - pred)²` for a one-element prediction.
    pub fn mse_loss(&mut self, pred: Var, target: f64) -> Result<Var> {
        let p = self.value(pred);
        if p.numel() != 1 {
            return Err(Error::Shape(format!("mse_loss: prediction has shape {:?}", p.shape)));
        }
        let d = p.item() - target;
        Ok(self.push(Tensor::scalar(d * d), Op::SquaredError { pred, target }))
    }

    /// Zero-mean, unit-variance rescaling of a vector, without learned gain.
    pub fn layer_norm(&mut self, x: Var) -> Result<Var> {
        let n = self.value(x).vector_len("layer_norm")?;
        let d = self.value(x).data();
        let mu = d.iter().sum::<f64>() / n as f64;
        let var = d.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n as f64;
        let inv_std = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        let out = d.iter().map(|v| (v - mu) * inv_std).collect();
        Ok(self.push(Tensor::vector(out), Op::LayerNorm { x, inv_std }))
    }

    /// Joins two vectors end to end.
    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        self.value(a).vector_len("concat left")?;
        self.value(b).vector_len("concat right")?;
        let mut out = self.value(a).data().to_vec();
        out.extend_from_slice(self.value(b).data());
        Ok(self.push(Tensor::vector(out), Op::Concat(a, b)))
    }

    /// Sum of scalars.
    pub fn sum(&mut self, xs: &[Var]) -> Result<Var> {
        let mut total = 0.0;
        for &x in xs {
            let t = self.value(x);
            if t.numel() != 1 {
                return Err(Error::Shape(format!("sum: operand has shape {:?}", t.shape)));
            }
            total += t.item();
        }
        Ok(self.push(Tensor::scalar(total), Op::Sum(xs.to_vec())))
    }

    /// Gradients of a scalar node with respect to every node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).numel() != 1 {
            return Err(Error::Shape("backward needs a scalar loss".into()));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients(grads))
    }

    fn propagate(&self, idx: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[idx];
        let g = g.data();
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [f64])| {
            let slot = grads[v.0].get_or_insert_with(|| Tensor::zeros(&self.nodes[v.0].value.shape));
            f(&mut slot.data);
        };
        match &node.op {
            Op::Leaf => {}
            Op::Affine { w, x, b } => {
                let (m, n) = (self.value(*w).shape[0], self.value(*w).shape[1]);
                let (wd, xd) = (self.value(*w).data(), self.value(*x).data());
                acc(*w, &mut |gw| {
                    for i in 0..m {
                        axpy(g[i], xd, &mut gw[i * n..(i + 1) * n]);
                    }
                });
                acc(*x, &mut |gx| {
                    for i in 0..m {
                        axpy(g[i], &wd[i * n..(i + 1) * n], gx);
                    }
                });
                acc(*b, &mut |gb| axpy(1.0, g, gb));
            }
            Op::Outer { a, b, scale } => {
                let (ad, bd) = (self.value(*a).data(), self.value(*b).data());
                let n = bd.len();
                acc(*a, &mut |ga| {
                    for (i, gi) in ga.iter_mut().enumerate() {
                        *gi += scale * dot(&g[i * n..(i + 1) * n], bd);
                    }
                });
                acc(*b, &mut |gb| {
                    for (i, &ai) in ad.iter().enumerate() {
                        axpy(scale * ai, &g[i * n..(i + 1) * n], gb);
                    }
                });
            }
            Op::RowSoftmax(s) => {
                let y = node.value.data();
                let c = node.value.shape[1];
                acc(*s, &mut |gs| {
                    for ((yr, gr), out) in y.chunks(c).zip(g.chunks(c)).zip(gs.chunks_mut(c)) {
                        let inner = dot(yr, gr);
                        for k in 0..c {
                            out[k] += yr[k] * (gr[k] - inner);
                        }
                    }
                });
            }
            Op::MatVec { a, v } => {
                let (ad, vd) = (self.value(*a).data(), self.value(*v).data());
                let n = vd.len();
                acc(*a, &mut |ga| {
                    for (i, &gi) in g.iter().enumerate() {
                        axpy(gi, vd, &mut ga[i * n..(i + 1) * n]);
                    }
                });
                acc(*v, &mut |gv| {
                    for (i, &gi) in g.iter().enumerate() {
                        axpy(gi, &ad[i * n..(i + 1) * n], gv);
                    }
                });
            }
            Op::Relu(x) => {
                let xd = self.value(*x).data();
                acc(*x, &mut |gx| {
                    for k in 0..gx.len() {
                        if xd[k] > 0.0 {
                            gx[k] += g[k];
                        }
                    }
                });
            }
            Op::SquaredError { pred, target } => {
                let p = self.value(*pred).item();
                acc(*pred, &mut |gp| gp[0] += g[0] * 2.0 * (p - target));
            }
            Op::LayerNorm { x, inv_std } => {
                let y = node.value.data();
                let n = y.len() as f64;
                let g_mean = g.iter().sum::<f64>() / n;
                let gy_mean = dot(g, y) / n;
                acc(*x, &mut |gx| {
                    for k in 0..gx.len() {
                        gx[k] += inv_std * (g[k] - g_mean - y[k] * gy_mean);
                    }
                });
            }
            Op::Concat(a, b) => {
                let na = self.value(*a).numel();
                acc(*a, &mut |ga| axpy(1.0, &g[..na], ga));
                acc(*b, &mut |gb| axpy(1.0, &g[na..], gb));
            }
            Op::Sum(xs) => {
                for &x in xs {
                    acc(x, &mut |gx| gx[0] += g[0]);
                }
            }
        }
    }
}

/// Per-node gradients from [`Graph::backward`].
#[derive(Debug)]
pub struct Gradients(Vec<Option<Tensor>>);

impl Gradients {
    /// Gradient for `v`, or `None` when the loss does not depend on it.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.0.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient for `v`, zeros of the right shape when absent.
    pub fn get_or_zeros(&self, v: Var, like: &Tensor) -> Tensor {
        self.get(v).cloned().unwrap_or_else(|| Tensor::zeros(like.shape()))
    }
}

/// Inner product with eight running sums, which lets the compiler vectorize.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 8];
    let split = n - n % 8;
    for (ca, cb) in a[..split].chunks_exact(8).zip(b[..split].chunks_exact(8)) {
        for k in 0..8 {
            acc[k] += ca[k] * cb[k];
        }
    }
    let tail: f64 = a[split..].iter().zip(&b[split..]).map(|(x, y)| x * y).sum();
    acc.iter().sum::<f64>() + tail
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_identity_and_bias() {
        let mut g = Graph::new();
        let w = g.leaf(Tensor::new(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap());
        let x = g.leaf(Tensor::vector(vec![3.0, -4.0]));
        let b = g.leaf(Tensor::vector(vec![0.0, 0.0]));
        let y = g.affine(w, x, b).unwrap();
        assert_eq!(g.value(y).data(), &[3.0, -4.0]);

        let z = g.leaf(Tensor::vector(vec![0.0, 0.0]));
        let b2 = g.leaf(Tensor::vector(vec![5.0, 6.0]));
        let y2 = g.affine(w, z, b2).unwrap();
        assert_eq!(g.value(y2).data(), &[5.0, 6.0]);
    }

    #[test]
    fn affine_shape_mismatch() {
        let mut g = Graph::new();
        let w = g.leaf(Tensor::zeros(&[2, 3]));
        let x = g.leaf(Tensor::zeros(&[2]));
        let b = g.leaf(Tensor::zeros(&[2]));
        assert!(matches!(g.affine(w, x, b), Err(Error::Shape(_))));
    }

    #[test]
    fn softmax_closed_forms() {
        let mut g = Graph::new();
        let s = g.leaf(Tensor::new(&[2, 2], vec![0.0, 3f64.ln(), 7.0, 7.0]).unwrap());
        let a = g.row_softmax(s).unwrap();
        let d = g.value(a).data();
        assert!((d[0] - 0.25).abs() < 1e-15 && (d[1] - 0.75).abs() < 1e-15);
        assert_eq!(&d[2..], &[0.5, 0.5]);
    }

    #[test]
    fn softmax_survives_huge_logits() {
        let mut g = Graph::new();
        let s = g.leaf(Tensor::new(&[1, 3], vec![1e308, 1e308, -1e308]).unwrap());
        let a = g.row_softmax(s).unwrap();
        assert_eq!(g.value(a).data(), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn relu_values_and_subgradient() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::vector(vec![-2.0, 0.0, 3.0]));
        let y = g.relu(x);
        assert_eq!(g.value(y).data(), &[0.0, 0.0, 3.0]);
        let w = g.leaf(Tensor::new(&[1, 3], vec![1.0, 1.0, 1.0]).unwrap());
        let b = g.leaf(Tensor::vector(vec![0.0]));
        let s = g.affine(w, y, b).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn mse_gradient_by_hand() {
        let mut g = Graph::new();
        let p = g.leaf(Tensor::vector(vec![5.0]));
        let l = g.mse_loss(p, 3.0).unwrap();
        assert_eq!(g.value(l).item(), 4.0);
        assert_eq!(g.backward(l).unwrap().get(p).unwrap().data(), &[4.0]);

        let mut g = Graph::new();
        let p = g.leaf(Tensor::vector(vec![3.0]));
        let l = g.mse_loss(p, 3.0).unwrap();
        assert_eq!(g.value(l).item(), 0.0);
        assert_eq!(g.backward(l).unwrap().get(p).unwrap().data(), &[0.0]);
    }

    #[test]
    fn shared_leaf_accumulates() {
        let mut g = Graph::new();
        let p = g.leaf(Tensor::vector(vec![2.0]));
        let l1 = g.mse_loss(p, 0.0).unwrap();
        let l2 = g.mse_loss(p, 1.0).unwrap();
        let l = g.sum(&[l1, l2]).unwrap();
        assert_eq!(g.backward(l).unwrap().get(p).unwrap().data(), &[4.0 + 2.0]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::vector(vec![1.0, 2.0]));
        assert!(g.backward(x).is_err());
    }
}
