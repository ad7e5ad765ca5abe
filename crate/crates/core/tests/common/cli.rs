use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fetalfuse"));
    c.env("RUST_LOG", "warn").env_remove("FETALFUSE_JOBS");
    c
}

/// Runs the binary in `dir` and returns its output.
pub fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

/// Runs and panics with stderr unless the exit status is zero.
pub fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run_in(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub struct Pipeline {
    pub dir: PathBuf,
}

impl Pipeline {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn read(&self, name: &str) -> Vec<u8> {
        std::fs::read(self.path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }
}

/// Artifacts a full pipeline run leaves behind.
pub const ARTIFACTS: [&str; 7] = [
    "data/manifest.csv",
    "data/embeddings.csv",
    "features.csv",
    "labels.csv",
    "model.fus1",
    "predictions.csv",
    "eval_report.csv",
];

/// synth → extract → label → train → predict → eval with a small head.
pub fn run_pipeline(dir: &Path, n: usize, seed: u64) -> Pipeline {
    let s = seed.to_string();
    let n = n.to_string();
    ok(
        dir,
        &["synth", "--out", "data", "--n", &n, "--seed", &s, "--size", "160"],
    );
    ok(
        dir,
        &["extract", "--manifest", "data/manifest.csv", "--out", "features.csv"],
    );
    ok(
        dir,
        &["label", "--manifest", "data/manifest.csv", "--out", "labels.csv"],
    );
    ok(
        dir,
        &[
            "train",
            "--features",
            "features.csv",
            "--embeddings",
            "data/embeddings.csv",
            "--labels",
            "labels.csv",
            "--seed",
            &s,
            "--lr",
            "1e-3",
            "--epochs",
            "4",
            "--d-e",
            "8",
            "--out",
            "model.fus1",
        ],
    );
    ok(
        dir,
        &[
            "predict",
            "--model",
            "model.fus1",
            "--features",
            "features.csv",
            "--embeddings",
            "data/embeddings.csv",
            "--out",
            "predictions.csv",
        ],
    );
    ok(
        dir,
        &[
            "eval",
            "--pred",
            "predictions.csv",
            "--labels",
            "labels.csv",
            "--seed",
            &s,
            "--out",
            "eval_report.csv",
        ],
    );
    Pipeline { dir: dir.to_path_buf() }
}
