use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Plain gradient descent on `‖y − Xw − b‖² + λ‖w‖²`, run until the
/// gradient vanishes.
pub fn ridge_by_descent(x: &DMatrix<f64>, y: &[f64], lambda: f64) -> (Vec<f64>, f64) {
    let (n, p) = x.shape();
    let y = DVector::from_column_slice(y);
    // step below 1/L with L the largest eigenvalue of the augmented Hessian
    let mut aug = DMatrix::from_element(n, p + 1, 1.0);
    aug.view_mut((0, 0), (n, p)).copy_from(x);
    let hess = 2.0 * (aug.transpose() * &aug);
    let l = hess.symmetric_eigenvalues().max() + 2.0 * lambda;
    let step = 1.0 / l;
    let mut w = DVector::zeros(p);
    let mut b = 0.0;
    for _ in 0..2_000_000 {
        let r = x * &w + DVector::from_element(n, b) - &y;
        let gw = 2.0 * x.transpose() * &r + 2.0 * lambda * &w;
        let gb = 2.0 * r.sum();
        w -= step * &gw;
        b -= step * gb;
        if gw.amax().max(gb.abs()) < 1e-11 {
            break;
        }
    }
    (w.iter().copied().collect(), b)
}

pub fn random_problem(seed: u64, n: usize, p: usize) -> (DMatrix<f64>, Vec<f64>) {
    let mut rng = super::rng(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0));
    let w: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
    let y = (0..n)
        .map(|i| (0..p).map(|j| x[(i, j)] * w[j]).sum::<f64>() + rng.random_range(-1.0..1.0) + 7.0)
        .collect();
    (x, y)
}

/// Largest violation of the lasso subgradient optimality conditions.
pub fn kkt_violation(x: &DMatrix<f64>, y: &[f64], w: &[f64], b: f64, lambda: f64) -> f64 {
    let n = y.len() as f64;
    let mut worst: f64 = 0.0;
    for j in 0..x.ncols() {
        let g: f64 = (0..y.len())
            .map(|i| {
                let fit = b + (0..x.ncols()).map(|k| x[(i, k)] * w[k]).sum::<f64>();
                x[(i, j)] * (y[i] - fit)
            })
            .sum::<f64>()
            / n;
        let v = if w[j] != 0.0 {
            (g - lambda * w[j].signum()).abs()
        } else {
            (g.abs() - lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}
