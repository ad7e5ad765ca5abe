use super::{FusionMode, FusionParams};
use crate::autodiff::{Graph, Tensor};
use crate::data::RadiomicVector;
use crate::error::{Error, Result};
use crate::radiomics::FeatureClass;

#[derive(Debug, Clone, PartialEq)]
pub struct RankedFeature {
    pub index: usize,
    pub name: String,
    pub score_attn: f64,
    pub score_grad: f64,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone)]
pub struct AttentionTrace {
    pub prediction: f64,
    /// Row-major `d_e × d_e`.
    pub attention: Vec<f64>,
    /// Per feature, `Σᵢ |W_Q[i,j]| · Σⱼ' |A[i,j'] − 1/d_e|`.
    pub scores_attn: Vec<f64>,
    /// Per feature, `|x̄ⱼ · ∂ŷ/∂x̄ⱼ|`.
    pub scores_grad: Vec<f64>,
    /// Highest attention scores first.
    pub top_k: Vec<RankedFeature>,
    /// Share of the total attention score per feature class.
    pub by_class: Vec<(FeatureClass, f64)>,
}

/// Scores each radiomic feature of one sample by how far it pushes the
/// attention rows away from uniform, with the input gradient as a second
/// opinion. Raw radiomics go through the model's scaler first.
pub fn attribute(
    params: &FusionParams,
    radiomics: &RadiomicVector,
    embedding: &[f64],
    k: usize,
) -> Result<AttentionTrace> {
    if params.shape.mode != FusionMode::CrossAttention {
        return Err(Error::invalid("attention attribution needs the cross-attention model"));
    }
    let f = params.shape.n_features;
    if k > f {
        return Err(Error::invalid(format!("top-k of {k} exceeds the {f} features")));
    }
    params.check_inputs(&radiomics.values, embedding)?;
    let x_vals = &if radiomics.standardized {
        super::check_looks_standardized(&radiomics.values)?;
        radiomics.values.clone()
    } else {
        params.scaler.transform(&radiomics.values)
    };

    let mut g = Graph::new();
    let p = params.leaves(&mut g);
    let x = g.leaf(Tensor::vector(x_vals.clone()));
    let e = g.leaf(Tensor::vector(embedding.to_vec()));
    let (y, a) = params.record(&mut g, &p, x, e)?;
    let prediction = g.value(y).item();
    let attention = g.value(a.expect("attention mode")).data().to_vec();
    let grads = g.backward(y)?;
    let dx = grads.get_or_zeros(x, g.value(x));

    let d = params.shape.d_e;
    let uniform = 1.0 / d as f64;
    let deviation: Vec<f64> = attention
        .chunks(d)
        .map(|row| row.iter().map(|v| (v - uniform).abs()).sum())
        .collect();
    let wq = params.get("W_Q").expect("attention mode").data();
    let scores_attn: Vec<f64> = (0..f)
        .map(|j| (0..d).map(|i| wq[i * f + j].abs() * deviation[i]).sum())
        .collect();
    let scores_grad: Vec<f64> = x_vals.iter().zip(dx.data()).map(|(xj, gj)| (xj * gj).abs()).collect();

    let mut order: Vec<usize> = (0..f).collect();
    order.sort_by(|&a, &b| scores_attn[b].total_cmp(&scores_attn[a]));
    let names = &radiomics.names;
    let top_k = order
        .iter()
        .take(k)
        .enumerate()
        .map(|(r, &j)| RankedFeature {
            index: j,
            name: names[j].clone(),
            score_attn: scores_attn[j],
            score_grad: scores_grad[j],
            rank: r + 1,
        })
        .collect();

    let total: f64 = scores_attn.iter().sum();
    let by_class = FeatureClass::ALL
        .into_iter()
        .map(|c| {
            let s: f64 = names
                .iter()
                .zip(&scores_attn)
                .filter(|(n, _)| FeatureClass::of(n) == Some(c))
                .map(|(_, s)| s)
                .sum();
            (c, if total > 0.0 { s / total } else { 0.0 })
        })
        .collect();

    Ok(AttentionTrace {
        prediction,
        attention,
        scores_attn,
        scores_grad,
        top_k,
        by_class,
    })
}
