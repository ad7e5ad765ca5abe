//! Central finite differences against the tape's analytic gradients.

use fetalfuse::autodiff::{Graph, Tensor, Var};
use fetalfuse::fusion::{FusionMode, FusionParams, ModelShape};
use fetalfuse::radiomics::StandardizerStats;
use rand::Rng;

pub const STEP: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
pub const ABS_TOL: f64 = 1e-7;

pub fn agrees(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= ABS_TOL + REL_TOL * analytic.abs().max(numeric.abs())
}

type Builder = dyn Fn(&mut Graph, &[Var]) -> Var;

fn evaluate(inputs: &[Tensor], build: &Builder) -> f64 {
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone())).collect();
    let out = build(&mut g, &vars);
    g.value(out).item()
}

/// Compares every input coordinate. Returns the first disagreement.
pub fn check(inputs: &[Tensor], build: &Builder) -> Result<(), String> {
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone())).collect();
    let out = build(&mut g, &vars);
    let grads = g.backward(out).map_err(|e| e.to_string())?;
    for (i, t) in inputs.iter().enumerate() {
        let analytic = grads.get_or_zeros(vars[i], t);
        for k in 0..t.numel() {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[k] += STEP;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[k] -= STEP;
            let numeric = (evaluate(&plus, build) - evaluate(&minus, build)) / (2.0 * STEP);
            let a = analytic.data()[k];
            if !agrees(a, numeric) {
                return Err(format!("input {i} index {k}: analytic {a:e}, numeric {numeric:e}"));
            }
        }
    }
    Ok(())
}

pub fn random(rng: &mut impl Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Like [`random`] but bounded away from zero, so ReLU kinks are not
/// straddled by the finite-difference step.
pub fn random_off_zero(rng: &mut impl Rng, shape: &[usize]) -> Tensor {
    let mut t = random(rng, shape);
    for v in t.data_mut() {
        *v = v.signum() * (0.05 + v.abs());
    }
    t
}

/// Reduces a vector node to a scalar with fixed random weights.
fn project(g: &mut Graph, v: Var, weights: &Tensor) -> Var {
    let n = weights.numel();
    let w = g.leaf(Tensor::new(&[1, n], weights.data().to_vec()).unwrap());
    let b = g.leaf(Tensor::vector(vec![0.0]));
    g.affine(w, v, b).unwrap()
}

/// Reduces a matrix node to a scalar through two fixed projections.
fn project_matrix(g: &mut Graph, m: Var, right: &Tensor, left: &Tensor) -> Var {
    let u = g.leaf(right.clone());
    let r = g.matvec(m, u).unwrap();
    project(g, r, left)
}

/// One random instance of every differentiable op.
pub fn op_suite(seed: u64) -> Vec<(&'static str, Result<(), String>)> {
    let mut rng = super::rng(seed);
    let mut out = Vec::new();

    let p5 = random(&mut rng, &[5]);
    out.push((
        "affine",
        check(
            &[
                random(&mut rng, &[5, 3]),
                random(&mut rng, &[3]),
                random(&mut rng, &[5]),
            ],
            &move |g, v| {
                let y = g.affine(v[0], v[1], v[2]).unwrap();
                project(g, y, &p5)
            },
        ),
    ));

    let (r4, l3) = (random(&mut rng, &[4]), random(&mut rng, &[3]));
    let scale = rng.random_range(0.2..2.0);
    out.push((
        "outer",
        check(&[random(&mut rng, &[3]), random(&mut rng, &[4])], &move |g, v| {
            let s = g.outer(v[0], v[1], scale).unwrap();
            project_matrix(g, s, &r4, &l3)
        }),
    ));

    let (r4, l3) = (random(&mut rng, &[4]), random(&mut rng, &[3]));
    let logits = random(&mut rng, &[3, 4]);
    out.push((
        "row_softmax",
        check(&[logits], &move |g, v| {
            let a = g.row_softmax(v[0]).unwrap();
            project_matrix(g, a, &r4, &l3)
        }),
    ));

    let l4 = random(&mut rng, &[4]);
    out.push((
        "matvec",
        check(&[random(&mut rng, &[4, 6]), random(&mut rng, &[6])], &move |g, v| {
            let y = g.matvec(v[0], v[1]).unwrap();
            project(g, y, &l4)
        }),
    ));

    let l7 = random(&mut rng, &[7]);
    out.push((
        "relu",
        check(&[random_off_zero(&mut rng, &[7])], &move |g, v| {
            let y = g.relu(v[0]);
            project(g, y, &l7)
        }),
    ));

    let target = rng.random_range(-3.0..3.0);
    out.push((
        "mse_loss",
        check(&[random(&mut rng, &[1])], &move |g, v| {
            g.mse_loss(v[0], target).unwrap()
        }),
    ));

    let l6 = random(&mut rng, &[6]);
    out.push((
        "layer_norm",
        check(&[random(&mut rng, &[6])], &move |g, v| {
            let y = g.layer_norm(v[0]).unwrap();
            project(g, y, &l6)
        }),
    ));

    let l5 = random(&mut rng, &[5]);
    out.push((
        "concat",
        check(&[random(&mut rng, &[2]), random(&mut rng, &[3])], &move |g, v| {
            let y = g.concat(v[0], v[1]).unwrap();
            project(g, y, &l5)
        }),
    ));

    let (t0, t1) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    out.push((
        "sum",
        check(&[random(&mut rng, &[1]), random(&mut rng, &[1])], &move |g, v| {
            let a = g.mse_loss(v[0], t0).unwrap();
            let b = g.mse_loss(v[1], t1).unwrap();
            g.sum(&[a, b]).unwrap()
        }),
    ));

    let l3 = random(&mut rng, &[3]);
    out.push((
        "attention_chain",
        check(
            &[random(&mut rng, &[3]), random(&mut rng, &[3]), random(&mut rng, &[3])],
            &move |g, v| {
                let s = g.outer(v[0], v[1], 1.0 / 3f64.sqrt()).unwrap();
                let a = g.row_softmax(s).unwrap();
                let x = g.matvec(a, v[2]).unwrap();
                project(g, x, &l3)
            },
        ),
    ));
    out
}

fn batch_loss(p: &FusionParams, batch: &[(Vec<f64>, Vec<f64>, f64)]) -> f64 {
    batch
        .iter()
        .map(|(x, e, y)| {
            let d = p.forward(x, e).unwrap().prediction - y;
            d * d
        })
        .sum()
}

/// Summed squared error over a two-sample batch against finite differences
/// in every parameter, for a model with `d_e = 8` and six radiomic features.
pub fn fusion_check(seed: u64, layer_norm: bool, mode: FusionMode) -> Result<(), String> {
    let (f, e, d) = (6, 12, 8);
    let mut rng = super::rng(seed);
    let shape = ModelShape {
        embed_dim: e,
        layer_norm,
        mode,
        ..ModelShape::new(f, d)
    };
    let scaler = StandardizerStats::new(vec![0.0; f], vec![1.0; f]).unwrap();
    let mut params = FusionParams::init(shape, scaler, &mut rng).unwrap();
    for t in &mut params.tensors {
        if t.shape().len() == 1 {
            for v in t.data_mut() {
                *v = rng.random_range(-0.5..0.5);
            }
        }
    }
    let batch: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..2)
        .map(|_| {
            (
                (0..f).map(|_| rng.random_range(-2.0..2.0)).collect(),
                (0..e).map(|_| rng.random_range(0.0..1.5)).collect(),
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();

    let mut analytic: Vec<Tensor> = params.tensors.iter().map(|t| Tensor::zeros(t.shape())).collect();
    for (x, emb, y) in &batch {
        let (_, g) = params.loss_gradient(x, emb, *y).map_err(|e| e.to_string())?;
        for (a, gi) in analytic.iter_mut().zip(&g) {
            for (s, v) in a.data_mut().iter_mut().zip(gi.data()) {
                *s += v;
            }
        }
    }
    let names = shape.layout();
    for (ti, a) in analytic.iter().enumerate() {
        for k in 0..a.numel() {
            let mut plus = params.clone();
            plus.tensors[ti].data_mut()[k] += STEP;
            let mut minus = params.clone();
            minus.tensors[ti].data_mut()[k] -= STEP;
            let numeric = (batch_loss(&plus, &batch) - batch_loss(&minus, &batch)) / (2.0 * STEP);
            if !agrees(a.data()[k], numeric) {
                return Err(format!(
                    "{}[{k}]: analytic {:e}, numeric {numeric:e}",
                    names[ti].0,
                    a.data()[k]
                ));
            }
        }
    }
    Ok(())
}
