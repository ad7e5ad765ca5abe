use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{embedding_by_id, join_rows, require_files};
use crate::data::{
    format_sig9, read_checkpoint, read_embeddings_csv, read_features_csv, read_labels_csv, write_checkpoint,
    write_predictions_csv, write_report_csv, Sample, EMBED_DIM,
};
use crate::error::{Error, Result};
use crate::fusion::{self, FusionMode, FusionParams, TrainConfig};
use crate::radiomics::{apply_standardizer, fit_standardizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FusionArg {
    /// Cross-attention between radiomics and the embedding.
    Xa,
    /// Concatenate both inputs in front of the regressor.
    Concat,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Share of image ids held out for model selection.
    #[arg(long, default_value_t = 0.1)]
    pub val_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    pub lr: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub wd: f64,
    #[arg(long, default_value_t = 8)]
    pub batch: usize,
    #[arg(long, default_value_t = 60)]
    pub epochs: usize,
    #[arg(long, value_enum, default_value_t = FusionArg::Xa)]
    pub fusion: FusionArg,
    /// Layer-normalize the query and embedding inputs.
    #[arg(long)]
    pub ln: bool,
    /// Width of the attention projections.
    #[arg(long = "d-e", default_value_t = 512, hide = true)]
    pub d_e: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch log; defaults to history.csv beside the model.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AttributeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub id: String,
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Holds out `round(n · fraction)` ids, at least one when the fraction is
/// positive and at least one id stays for training.
fn split_ids(n: usize, fraction: f64, seed: u64) -> Result<Vec<bool>> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::invalid(format!(
            "validation fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let mut n_val = (n as f64 * fraction).round() as usize;
    if fraction > 0.0 {
        n_val = n_val.max(1);
    }
    if n_val >= n {
        return Err(Error::invalid(format!("{n} images leave nothing to train on")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    order.shuffle(&mut rng);
    let mut is_val = vec![false; n];
    for &i in &order[..n_val] {
        is_val[i] = true;
    }
    Ok(is_val)
}

fn history_path(a: &TrainArgs) -> PathBuf {
    a.history.clone().unwrap_or_else(|| a.out.with_file_name("history.csv"))
}

pub(super) fn train(a: &TrainArgs) -> Result<()> {
    require_files(&[&a.features, &a.embeddings, &a.labels])?;
    let features = read_features_csv(&a.features)?;
    let embeddings = read_embeddings_csv(&a.embeddings, EMBED_DIM)?;
    let labels = read_labels_csv(&a.labels)?;
    let ga: HashMap<&str, f64> = labels.iter().map(|l| (l.id.as_str(), l.ga_days)).collect();
    let targets = features
        .rows
        .iter()
        .map(|(id, _)| {
            ga.get(id.as_str())
                .copied()
                .ok_or_else(|| Error::UnknownId(format!("{id} (no label)")))
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs = join_rows(&features, &embeddings)?;
    let is_val = split_ids(features.rows.len(), a.val_fraction, a.seed)?;

    let train_raw: Vec<_> = features
        .rows
        .iter()
        .zip(&is_val)
        .filter(|(_, v)| !**v)
        .map(|((_, r), _)| r.clone())
        .collect();
    let scaler = fit_standardizer(&train_raw)?;
    let standardized = features
        .rows
        .iter()
        .map(|(_, r)| apply_standardizer(&scaler, r))
        .collect::<Result<Vec<_>>>()?;
    let (mut train_set, mut val_set) = (Vec::new(), Vec::new());
    for &(i, j) in &pairs {
        let e = &embeddings[j];
        let s = Sample::new(e.id.clone(), standardized[i].clone(), e.clone(), targets[i])?;
        if is_val[i] {
            val_set.push(s);
        } else {
            train_set.push(s);
        }
    }

    let cfg = TrainConfig {
        lr: a.lr,
        weight_decay: a.wd,
        batch_size: a.batch,
        epochs: a.epochs,
        seed: a.seed,
        d_e: a.d_e,
        layer_norm: a.ln,
        mode: match a.fusion {
            FusionArg::Xa => FusionMode::CrossAttention,
            FusionArg::Concat => FusionMode::Concat,
        },
        ..TrainConfig::default()
    };
    log::info!("training on {} rows, selecting on {}", train_set.len(), val_set.len());
    let outcome = fusion::train(&train_set, &val_set, scaler, &cfg)?;
    write_checkpoint(&a.out, &outcome.params.to_checkpoint())?;
    let rows: Vec<Vec<String>> = outcome
        .history
        .iter()
        .map(|h| vec![h.epoch.to_string(), format_sig9(h.train_loss), format_sig9(h.val_mae)])
        .collect();
    write_report_csv(&history_path(a), &["epoch", "train_loss", "val_mae"], &rows)?;
    let best = &outcome.history[outcome.best_epoch - 1];
    println!(
        "best epoch {} of {}: selection MAE {:.3} days ({} steps)",
        outcome.best_epoch,
        outcome.history.len(),
        best.val_mae,
        outcome.steps
    );
    Ok(())
}

fn load_model(path: &Path) -> Result<FusionParams> {
    FusionParams::from_checkpoint(&read_checkpoint(path)?)
}

fn check_width(params: &FusionParams, n_columns: usize) -> Result<()> {
    if params.shape.n_features != n_columns {
        return Err(Error::Shape(format!(
            "model expects {} radiomic features, file has {n_columns}",
            params.shape.n_features
        )));
    }
    Ok(())
}

pub(super) fn predict(a: &PredictArgs) -> Result<()> {
    require_files(&[&a.model, &a.features, &a.embeddings])?;
    let params = load_model(&a.model)?;
    let features = read_features_csv(&a.features)?;
    check_width(&params, features.names.len())?;
    let embeddings = read_embeddings_csv(&a.embeddings, params.shape.embed_dim)?;
    let pairs = join_rows(&features, &embeddings)?;
    let preds = pairs
        .par_iter()
        .map(|&(i, j)| {
            let e = &embeddings[j];
            params
                .predict_raw(&features.rows[i].1.values, &e.values)
                .map(|y| (e.id.clone(), y))
        })
        .collect::<Result<Vec<_>>>()?;
    write_predictions_csv(&a.out, &preds)?;
    log::info!("wrote {} predictions to {}", preds.len(), a.out.display());
    Ok(())
}

pub(super) fn attribute(a: &AttributeArgs) -> Result<()> {
    require_files(&[&a.model, &a.features, &a.embeddings])?;
    let params = load_model(&a.model)?;
    let features = read_features_csv(&a.features)?;
    check_width(&params, features.names.len())?;
    let embeddings = read_embeddings_csv(&a.embeddings, params.shape.embed_dim)?;
    let emb = embedding_by_id(&embeddings, &a.id)?;
    let (_, radiomics) = features
        .rows
        .iter()
        .find(|(id, _)| id == emb.base_id())
        .ok_or_else(|| Error::UnknownId(format!("{} (no features)", a.id)))?;
    let trace = fusion::attribute(&params, radiomics, &emb.values, a.top_k)?;
    let rows: Vec<Vec<String>> = trace
        .top_k
        .iter()
        .map(|r| {
            vec![
                emb.id.clone(),
                r.name.clone(),
                format_sig9(r.score_attn),
                format_sig9(r.score_grad),
                r.rank.to_string(),
            ]
        })
        .collect();
    write_report_csv(&a.out, &["id", "feature", "score_attn", "score_grad", "rank"], &rows)?;
    println!("{}: predicted {:.2} days", emb.id, trace.prediction);
    for (class, share) in &trace.by_class {
        println!("  {:<10} {:>6.1}%", class.prefix(), 100.0 * share);
    }
    Ok(())
}
