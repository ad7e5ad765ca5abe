//! Command-line stages. Each stage reads the artifacts of earlier stages and
//! writes its own atomically.

mod fuse;
mod prepare;
mod report;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::data::{base_id, DeepEmbedding, FeatureTable};
use crate::error::{Error, Result};

pub use fuse::{AttributeArgs, FusionArg, PredictArgs, TrainArgs};
pub use prepare::{ExtractArgs, LabelArgs, SynthArgs};
pub use report::{BaselineArgs, EvalArgs, ModelArg, SelectArg};

#[derive(Debug, Parser)]
#[command(
    name = "fetalfuse",
    version,
    about = "Gestational-age estimation from fetal-head ultrasound"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Radiomic features for every manifest row.
    Extract(ExtractArgs),
    /// Head circumference and gestational-age labels.
    Label(LabelArgs),
    /// Fit the fusion regressor.
    Train(TrainArgs),
    /// Predict gestational age with a trained model.
    Predict(PredictArgs),
    /// Rank radiomic features for one sample.
    Attribute(AttributeArgs),
    /// Radiomics-only classical regressors on a held-out split.
    Baseline(BaselineArgs),
    /// Score prediction files and compare two of them.
    Eval(EvalArgs),
    #[command(hide = true)]
    Synth(SynthArgs),
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Extract(a) => prepare::extract(&a),
        Command::Label(a) => prepare::label(&a),
        Command::Train(a) => fuse::train(&a),
        Command::Predict(a) => fuse::predict(&a),
        Command::Attribute(a) => fuse::attribute(&a),
        Command::Baseline(a) => report::baseline(&a),
        Command::Eval(a) => report::eval(&a),
        Command::Synth(a) => prepare::synth(&a),
    }
}

/// Process exit status for a failed stage: 1 when the filesystem failed,
/// 2 when the input was rejected.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_io() {
        1
    } else {
        2
    }
}

/// Missing inputs are a usage error rather than an IO failure.
fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::invalid(format!("input file not found: {}", path.display())))
    }
}

fn require_files(paths: &[&PathBuf]) -> Result<()> {
    paths.iter().try_for_each(|p| require_file(p))
}

/// Pairs every embedding row with its feature row by base id. Every feature
/// row must have at least one embedding and vice versa.
fn join_rows(features: &FeatureTable, embeddings: &[DeepEmbedding]) -> Result<Vec<(usize, usize)>> {
    let by_id: HashMap<&str, usize> = features
        .rows
        .iter()
        .enumerate()
        .map(|(i, (id, _))| (id.as_str(), i))
        .collect();
    let mut covered = vec![false; features.rows.len()];
    let mut pairs = Vec::with_capacity(embeddings.len());
    for (j, e) in embeddings.iter().enumerate() {
        let i = *by_id
            .get(e.base_id())
            .ok_or_else(|| Error::UnknownId(format!("{} (embedding without features)", e.id)))?;
        covered[i] = true;
        pairs.push((i, j));
    }
    if let Some(i) = covered.iter().position(|c| !c) {
        return Err(Error::UnknownId(format!(
            "{} (features without embedding)",
            features.rows[i].0
        )));
    }
    Ok(pairs)
}

fn embedding_by_id<'a>(embeddings: &'a [DeepEmbedding], id: &str) -> Result<&'a DeepEmbedding> {
    embeddings
        .iter()
        .find(|e| e.id == id)
        .or_else(|| embeddings.iter().find(|e| base_id(&e.id) == id))
        .ok_or_else(|| Error::UnknownId(id.to_string()))
}
