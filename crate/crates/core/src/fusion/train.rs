use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{FusionMode, FusionParams, ModelShape};
use crate::autodiff::{Adam, AdamConfig, Tensor};
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::radiomics::StandardizerStats;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub d_e: usize,
    pub layer_norm: bool,
    pub mode: FusionMode,
    /// Stop after this many optimizer steps, even mid-epoch.
    pub max_steps: Option<usize>,
    /// Start the output bias at the mean training label instead of zero.
    pub bias_from_labels: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-5,
            weight_decay: 1e-6,
            batch_size: 8,
            epochs: 60,
            seed: 0,
            d_e: 512,
            layer_norm: false,
            mode: FusionMode::CrossAttention,
            max_steps: None,
            bias_from_labels: true,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && self.lr.is_finite()
            && self.weight_decay >= 0.0
            && self.batch_size > 0
            && self.epochs > 0
            && self.d_e > 0
            && self.max_steps != Some(0);
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid training configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean squared error per training sample over the epoch's batches.
    pub train_loss: f64,
    /// MAE on the validation split, or on the training split when there is
    /// no validation data. This is the model-selection metric.
    pub val_mae: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the best epoch, rounded to checkpoint precision.
    pub params: FusionParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub steps: usize,
}

fn mean_abs_error(params: &FusionParams, samples: &[Sample]) -> Result<f64> {
    let errs = samples
        .par_iter()
        .map(|s| {
            params
                .forward(&s.radiomics.values, &s.embedding.values)
                .map(|o| (o.prediction - s.ga_days).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

/// Mini-batch Adam on the summed squared error. Keeps the parameters of the
/// epoch with the lowest selection MAE, earliest on ties.
pub fn train(train: &[Sample], val: &[Sample], scaler: StandardizerStats, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let first = train.first().ok_or_else(|| Error::invalid("no training samples"))?;
    let shape = ModelShape {
        n_features: first.radiomics.len(),
        embed_dim: first.embedding.values.len(),
        d_e: cfg.d_e,
        layer_norm: cfg.layer_norm,
        mode: cfg.mode,
    };
    for s in train.iter().chain(val) {
        if s.radiomics.len() != shape.n_features || s.embedding.values.len() != shape.embed_dim {
            return Err(Error::Shape(format!(
                "{}: input dimensions differ from the first sample",
                s.id
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = FusionParams::init(shape, scaler, &mut rng)?;
    if cfg.bias_from_labels {
        let mean = train.iter().map(|s| s.ga_days).sum::<f64>() / train.len() as f64;
        params.get_mut("b_MLP.1").expect("output bias").data_mut()[0] = mean;
    }
    let mut opt = Adam::new(
        AdamConfig {
            lr: cfg.lr,
            weight_decay: cfg.weight_decay,
            ..AdamConfig::default()
        },
        &params.tensors,
    );
    let select_on = if val.is_empty() { train } else { val };

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, FusionParams)> = None;
    let mut steps = 0;
    'epochs: for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut seen = 0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let per_sample = batch
                .par_iter()
                .map(|&i| {
                    let s = &train[i];
                    params.loss_gradient(&s.radiomics.values, &s.embedding.values, s.ga_days)
                })
                .collect::<Result<Vec<_>>>()?;
            // reduce in batch order so the result does not depend on threads
            let mut value = 0.0;
            let mut grads: Vec<Tensor> = params.tensors.iter().map(|t| Tensor::zeros(t.shape())).collect();
            for (loss, g) in &per_sample {
                value += loss;
                for (acc, gi) in grads.iter_mut().zip(g) {
                    for (a, v) in acc.data_mut().iter_mut().zip(gi.data()) {
                        *a += v;
                    }
                }
            }
            if !value.is_finite() {
                return Err(Error::NonFinite(format!(
                    "training loss {value} at epoch {epoch}, batch {b}"
                )));
            }
            opt.step(&mut params.tensors, &grads)?;
            loss_sum += value;
            seen += batch.len();
            steps += 1;
            if cfg.max_steps.is_some_and(|m| steps >= m) {
                history.push(finish_epoch(
                    &params,
                    select_on,
                    epoch,
                    loss_sum / seen as f64,
                    &mut best,
                )?);
                break 'epochs;
            }
        }
        history.push(finish_epoch(
            &params,
            select_on,
            epoch,
            loss_sum / seen as f64,
            &mut best,
        )?);
        log::debug!("epoch {epoch}: {:?}", history.last());
    }
    let (_, best_epoch, mut params) = best.expect("at least one epoch ran");
    params.round_to_f32();
    Ok(TrainOutcome {
        params,
        history,
        best_epoch,
        steps,
    })
}

fn finish_epoch(
    params: &FusionParams,
    select_on: &[Sample],
    epoch: usize,
    train_loss: f64,
    best: &mut Option<(f64, usize, FusionParams)>,
) -> Result<EpochRecord> {
    let mae = mean_abs_error(params, select_on)?;
    if best.as_ref().is_none_or(|(b, _, _)| mae < *b) {
        *best = Some((mae, epoch, params.clone()));
    }
    Ok(EpochRecord {
        epoch,
        train_loss,
        val_mae: mae,
    })
}
