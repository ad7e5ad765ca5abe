//! Cross-attention fusion of standardized radiomics with a deep embedding,
//! followed by a two-layer regressor.
//!
//! The radiomic query `q`, and the key `k` and value `v` from the embedding,
//! are each treated as `d_e` scalar tokens, so `q kᵀ` is a `d_e × d_e`
//! attention matrix.

mod attribution;
mod train;

pub use attribution::{attribute, AttentionTrace, RankedFeature};
pub use train::{train, EpochRecord, TrainConfig, TrainOutcome};

use rand::Rng;

use crate::autodiff::{Graph, Tensor, Var};
use crate::data::{CheckpointTensor, RadiomicVector, EMBED_DIM};
use crate::error::{Error, Result};
use crate::radiomics::{StandardizerStats, STD_FLOOR};

/// How the two inputs are combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FusionMode {
    #[default]
    CrossAttention,
    /// Ablation: the regressor sees the concatenated inputs directly.
    Concat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelShape {
    pub n_features: usize,
    pub embed_dim: usize,
    pub d_e: usize,
    pub layer_norm: bool,
    pub mode: FusionMode,
}

impl ModelShape {
    pub fn new(n_features: usize, d_e: usize) -> Self {
        ModelShape {
            n_features,
            embed_dim: EMBED_DIM,
            d_e,
            layer_norm: false,
            mode: FusionMode::CrossAttention,
        }
    }

    /// Parameter names and shapes in storage order.
    pub fn layout(&self) -> Vec<(&'static str, Vec<usize>)> {
        let (f, e, d) = (self.n_features, self.embed_dim, self.d_e);
        let mut out = Vec::new();
        if self.mode == FusionMode::CrossAttention {
            out.extend([
                ("W_Q", vec![d, f]),
                ("b_Q", vec![d]),
                ("W_K", vec![d, e]),
                ("b_K", vec![d]),
                ("W_V", vec![d, e]),
                ("b_V", vec![d]),
                ("W_XA", vec![d, d]),
                ("b_XA", vec![d]),
                ("W_MLP.0", vec![d, d]),
            ]);
        } else {
            out.push(("W_MLP.0", vec![d, f + e]));
        }
        out.extend([("b_MLP.0", vec![d]), ("W_MLP.1", vec![1, d]), ("b_MLP.1", vec![1])]);
        out
    }
}

const LAYER_NORM_FLAG: &str = "config.layer_norm";

/// Trainable tensors plus the radiomics scaler fitted on the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionParams {
    pub shape: ModelShape,
    pub tensors: Vec<Tensor>,
    pub scaler: StandardizerStats,
}

/// Handles to the parameter leaves of one graph.
pub(crate) struct ParamVars(pub(crate) Vec<Var>);

/// Output of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub prediction: f64,
    /// Row-major `d_e × d_e` attention matrix; absent in concat mode.
    pub attention: Option<Vec<f64>>,
}

impl FusionParams {
    /// Kaiming-uniform weights with bound `√(6 / fan_in)` and zero biases.
    pub fn init(shape: ModelShape, scaler: StandardizerStats, rng: &mut impl Rng) -> Result<Self> {
        if shape.d_e == 0 || shape.n_features == 0 || shape.embed_dim == 0 {
            return Err(Error::invalid("model dimensions must be positive"));
        }
        if scaler.len() != shape.n_features {
            return Err(Error::Shape(format!(
                "scaler covers {} features, model expects {}",
                scaler.len(),
                shape.n_features
            )));
        }
        let tensors = shape
            .layout()
            .into_iter()
            .map(|(_, dims)| {
                if dims.len() == 1 {
                    Tensor::zeros(&dims)
                } else {
                    let bound = (6.0 / dims[1] as f64).sqrt();
                    let data = (0..dims[0] * dims[1])
                        .map(|_| rng.random_range(-bound..bound))
                        .collect();
                    Tensor::new(&dims, data).expect("layout dims")
                }
            })
            .collect();
        Ok(FusionParams { shape, tensors, scaler })
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.shape.layout().iter().position(|(n, _)| *n == name)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index(name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.index(name).map(|i| &mut self.tensors[i])
    }

    /// Rounds every value to the nearest `f32`, the checkpoint precision.
    pub fn round_to_f32(&mut self) {
        for t in &mut self.tensors {
            for v in t.data_mut() {
                *v = *v as f32 as f64;
            }
        }
        for v in &mut self.scaler.mean {
            *v = *v as f32 as f64;
        }
        // the floor itself is not representable in f32; loading re-applies it
        for v in &mut self.scaler.std {
            *v = (*v as f32 as f64).max(STD_FLOOR);
        }
    }

    pub fn to_checkpoint(&self) -> Vec<CheckpointTensor> {
        let f32s = |v: &[f64]| v.iter().map(|&x| x as f32).collect::<Vec<_>>();
        let mut out: Vec<CheckpointTensor> = self
            .shape
            .layout()
            .into_iter()
            .zip(&self.tensors)
            .map(|((name, dims), t)| CheckpointTensor::new(name, &dims, f32s(t.data())))
            .collect();
        let f = self.shape.n_features;
        out.push(CheckpointTensor::new("scaler.mean", &[f], f32s(&self.scaler.mean)));
        out.push(CheckpointTensor::new("scaler.std", &[f], f32s(&self.scaler.std)));
        if self.shape.layer_norm {
            out.push(CheckpointTensor::new(LAYER_NORM_FLAG, &[1], vec![1.0]));
        }
        out
    }

    pub fn from_checkpoint(tensors: &[CheckpointTensor]) -> Result<Self> {
        let find = |name: &str| tensors.iter().find(|t| t.name == name);
        let need = |name: &str| find(name).ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")));
        let dims = |t: &CheckpointTensor| t.dims.iter().map(|&d| d as usize).collect::<Vec<_>>();

        let mean = need("scaler.mean")?;
        let n_features = mean.numel();
        let w_out = need("W_MLP.1")?;
        let d_e = dims(w_out).last().copied().unwrap_or(0);
        let (mode, embed_dim) = match find("W_K") {
            Some(wk) => (FusionMode::CrossAttention, dims(wk).last().copied().unwrap_or(0)),
            None => {
                let w0 = dims(need("W_MLP.0")?);
                let cols = w0.last().copied().unwrap_or(0);
                (FusionMode::Concat, cols.saturating_sub(n_features))
            }
        };
        let shape = ModelShape {
            n_features,
            embed_dim,
            d_e,
            layer_norm: find(LAYER_NORM_FLAG).is_some(),
            mode,
        };
        let mut out = Vec::new();
        for (name, want) in shape.layout() {
            let t = need(name)?;
            if dims(t) != want {
                return Err(Error::Checkpoint(format!(
                    "{name} has shape {:?}, expected {want:?}",
                    t.dims
                )));
            }
            out.push(Tensor::new(&want, t.data.iter().map(|&v| v as f64).collect())?);
        }
        let std = need("scaler.std")?;
        if std.numel() != n_features {
            return Err(Error::Checkpoint("scaler mean and std differ in length".into()));
        }
        let to64 = |t: &CheckpointTensor| t.data.iter().map(|&v| v as f64).collect::<Vec<_>>();
        let params = FusionParams {
            shape,
            tensors: out,
            scaler: StandardizerStats::new(to64(mean), to64(std))?,
        };
        if params.tensors.iter().flat_map(|t| t.data()).any(|v| !v.is_finite()) {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        Ok(params)
    }

    pub(crate) fn leaves<'a>(&'a self, g: &mut Graph<'a>) -> ParamVars {
        ParamVars(self.tensors.iter().map(|t| g.leaf_ref(t)).collect())
    }

    /// Records one forward pass. Returns the prediction node and, in
    /// attention mode, the attention matrix node.
    pub(crate) fn record(&self, g: &mut Graph, p: &ParamVars, x: Var, e: Var) -> Result<(Var, Option<Var>)> {
        let s = &self.shape;
        let (hidden, attention) = match s.mode {
            FusionMode::CrossAttention => {
                let [wq, bq, wk, bk, wv, bv, wxa, bxa] = p.0[..8].try_into().expect("layout");
                let (xn, en) = if s.layer_norm {
                    (g.layer_norm(x)?, g.layer_norm(e)?)
                } else {
                    (x, e)
                };
                let q = g.affine(wq, xn, bq)?;
                let k = g.affine(wk, en, bk)?;
                let v = g.affine(wv, en, bv)?;
                let scores = g.outer(q, k, 1.0 / (s.d_e as f64).sqrt())?;
                let a = g.row_softmax(scores)?;
                let mixed = g.matvec(a, v)?;
                let y = g.affine(wxa, mixed, bxa)?;
                (g.relu(y), Some(a))
            }
            FusionMode::Concat => (g.concat(x, e)?, None),
        };
        let n = p.0.len();
        let [w0, b0, w1, b1] = p.0[n - 4..].try_into().expect("layout");
        let h = g.affine(w0, hidden, b0)?;
        let h = g.relu(h);
        let out = g.affine(w1, h, b1)?;
        Ok((out, attention))
    }

    pub(crate) fn check_inputs(&self, x: &[f64], e: &[f64]) -> Result<()> {
        if x.len() != self.shape.n_features || e.len() != self.shape.embed_dim {
            return Err(Error::Shape(format!(
                "model expects {} radiomic and {} embedding values, got {} and {}",
                self.shape.n_features,
                self.shape.embed_dim,
                x.len(),
                e.len()
            )));
        }
        Ok(())
    }

    /// Forward pass on standardized radiomics.
    pub fn forward(&self, x_std: &[f64], embedding: &[f64]) -> Result<ForwardOutput> {
        self.check_inputs(x_std, embedding)?;
        let mut g = Graph::new();
        let p = self.leaves(&mut g);
        let x = g.leaf(Tensor::vector(x_std.to_vec()));
        let e = g.leaf(Tensor::vector(embedding.to_vec()));
        let (y, a) = self.record(&mut g, &p, x, e)?;
        let prediction = g.value(y).item();
        if !prediction.is_finite() {
            return Err(Error::NonFinite(format!("prediction {prediction}")));
        }
        Ok(ForwardOutput {
            prediction,
            attention: a.map(|a| g.value(a).data().to_vec()),
        })
    }

    /// Squared error `(y - ŷ)²` of one standardized sample and its gradient
    /// for every parameter tensor, in storage order.
    pub fn loss_gradient(&self, x_std: &[f64], embedding: &[f64], target: f64) -> Result<(f64, Vec<Tensor>)> {
        self.check_inputs(x_std, embedding)?;
        let mut g = Graph::new();
        let p = self.leaves(&mut g);
        let x = g.leaf(Tensor::vector(x_std.to_vec()));
        let e = g.leaf(Tensor::vector(embedding.to_vec()));
        let (y, _) = self.record(&mut g, &p, x, e)?;
        let loss = g.mse_loss(y, target)?;
        let grads = g.backward(loss)?;
        let out =
            p.0.iter()
                .zip(&self.tensors)
                .map(|(&v, t)| grads.get_or_zeros(v, t))
                .collect();
        Ok((g.value(loss).item(), out))
    }

    /// GA in days for raw radiomics; the stored scaler is applied first.
    pub fn predict_raw(&self, raw: &[f64], embedding: &[f64]) -> Result<f64> {
        self.check_inputs(raw, embedding)?;
        Ok(self.forward(&self.scaler.transform(raw), embedding)?.prediction)
    }

    /// GA in days for a vector that claims to be standardized already.
    pub fn predict(&self, x: &RadiomicVector, embedding: &[f64]) -> Result<f64> {
        if !x.standardized {
            return self.predict_raw(&x.values, embedding);
        }
        check_looks_standardized(&x.values)?;
        Ok(self.forward(&x.values, embedding)?.prediction)
    }
}

/// Largest mean absolute value accepted from a vector labelled standardized.
pub const STANDARDIZED_MEAN_ABS_LIMIT: f64 = 10.0;

/// Rejects vectors whose magnitude suggests the scaler was never applied.
pub fn check_looks_standardized(x: &[f64]) -> Result<()> {
    let mean_abs = x.iter().map(|v| v.abs()).sum::<f64>() / x.len().max(1) as f64;
    if mean_abs > STANDARDIZED_MEAN_ABS_LIMIT {
        log::warn!("radiomics marked standardized have mean |x| = {mean_abs:.3e}");
        return Err(Error::invalid(format!(
            "radiomics look unstandardized (mean |x| = {mean_abs:.3e})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scaler(f: usize) -> StandardizerStats {
        StandardizerStats::new(vec![0.0; f], vec![1.0; f]).unwrap()
    }

    fn small(f: usize, e: usize, d: usize, seed: u64) -> FusionParams {
        let shape = ModelShape {
            embed_dim: e,
            ..ModelShape::new(f, d)
        };
        FusionParams::init(shape, scaler(f), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    fn set(p: &mut FusionParams, name: &str, v: &[f64]) {
        p.get_mut(name).unwrap().data_mut().copy_from_slice(v);
    }

    #[test]
    fn init_bounds_and_zero_biases() {
        let p = small(6, 10, 8, 1);
        let wk = p.get("W_K").unwrap();
        let bound = (6.0f64 / 10.0).sqrt();
        assert!(wk.data().iter().all(|v| v.abs() < bound));
        assert!(p.get("b_MLP.0").unwrap().data().iter().all(|&v| v == 0.0));
        assert_eq!(p.get("W_Q").unwrap().shape(), &[8, 6]);
        assert_eq!(p.get("W_MLP.1").unwrap().shape(), &[1, 8]);
    }

    #[test]
    fn default_layout_matches_full_model() {
        let names: Vec<_> = ModelShape::new(97, 512).layout();
        let find = |n: &str| names.iter().find(|(m, _)| *m == n).unwrap().1.clone();
        assert_eq!(find("W_Q"), vec![512, 97]);
        assert_eq!(find("W_K"), vec![512, 512]);
        assert_eq!(find("W_XA"), vec![512, 512]);
        assert_eq!(find("W_MLP.0"), vec![512, 512]);
        assert_eq!(find("W_MLP.1"), vec![1, 512]);
        assert_eq!(names.len(), 12);
    }

    #[test]
    fn hand_evaluated_two_token_model() {
        let mut p = small(1, 1, 2, 0);
        set(&mut p, "W_Q", &[1.0, 2.0]);
        set(&mut p, "b_Q", &[0.0, 0.5]);
        set(&mut p, "W_K", &[1.0, -1.0]);
        set(&mut p, "b_K", &[0.0, 0.0]);
        set(&mut p, "W_V", &[3.0, 1.0]);
        set(&mut p, "b_V", &[0.0, 1.0]);
        set(&mut p, "W_XA", &[1.0, 0.0, 0.0, 1.0]);
        set(&mut p, "b_XA", &[0.0, 0.0]);
        set(&mut p, "W_MLP.0", &[1.0, 1.0, 0.0, 1.0]);
        set(&mut p, "b_MLP.0", &[0.0, -1.0]);
        set(&mut p, "W_MLP.1", &[2.0, 3.0]);
        set(&mut p, "b_MLP.1", &[10.0]);

        // x = 1, e = 1: q = (1, 2.5), k = (1, -1), v = (3, 2)
        let s = 1.0 / 2f64.sqrt();
        let row = |qi: f64| {
            let (a, b) = ((qi * s).exp(), (-qi * s).exp());
            (a / (a + b), b / (a + b))
        };
        let (a00, a01) = row(1.0);
        let (a10, a11) = row(2.5);
        let x0 = a00 * 3.0 + a01 * 2.0;
        let x1 = a10 * 3.0 + a11 * 2.0;
        let h0 = (x0 + x1).max(0.0);
        let h1 = (x1 - 1.0).max(0.0);
        let want = 2.0 * h0 + 3.0 * h1 + 10.0;
        let got = p.forward(&[1.0], &[1.0]).unwrap().prediction;
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn constant_keys_give_uniform_attention() {
        let mut p = small(4, 6, 5, 3);
        set(&mut p, "W_K", &[0.0; 30]);
        let x = [0.3, -1.2, 0.8, 2.0];
        let e = [1.0, 0.5, -0.2, 0.1, 0.0, 0.9];
        let out = p.forward(&x, &e).unwrap();
        let a = out.attention.unwrap();
        assert!(a.iter().all(|&v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn zero_query_ignores_radiomics() {
        let mut p = small(4, 6, 5, 4);
        set(&mut p, "W_Q", &[0.0; 20]);
        let e = [1.0, 0.5, -0.2, 0.1, 0.0, 0.9];
        let a = p.forward(&[0.1, 0.2, 0.3, 0.4], &e).unwrap().prediction;
        let b = p.forward(&[-3.0, 9.0, 1.0, 0.0], &e).unwrap().prediction;
        assert_eq!(a, b);
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        for (ln, mode) in [
            (false, FusionMode::CrossAttention),
            (true, FusionMode::CrossAttention),
            (false, FusionMode::Concat),
        ] {
            let shape = ModelShape {
                embed_dim: 7,
                layer_norm: ln,
                mode,
                ..ModelShape::new(3, 4)
            };
            let floored = StandardizerStats::new(vec![0.1, 2.0, -3.0], vec![0.0, 0.7, 1.3]).unwrap();
            let mut p = FusionParams::init(shape, floored, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
            p.round_to_f32();
            let back = FusionParams::from_checkpoint(&p.to_checkpoint()).unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn missing_tensor_is_reported() {
        let p = small(3, 5, 4, 2);
        let mut ck = p.to_checkpoint();
        ck.retain(|t| t.name != "b_V");
        assert!(matches!(FusionParams::from_checkpoint(&ck), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn raw_vector_flagged_standardized_is_rejected() {
        let p = small(3, 5, 4, 2);
        let names: std::sync::Arc<[String]> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let mut x = RadiomicVector::new(vec![1.0e6, 350.0, 12.0], names).unwrap();
        x.standardized = true;
        assert!(p.predict(&x, &[0.0; 5]).is_err());
        x.standardized = false;
        assert!(p.predict(&x, &[0.0; 5]).is_ok());
    }

    #[test]
    fn dimension_mismatch_errors() {
        let p = small(3, 5, 4, 2);
        assert!(matches!(p.forward(&[0.0; 2], &[0.0; 5]), Err(Error::Shape(_))));
    }
}
