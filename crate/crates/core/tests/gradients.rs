mod common;

use common::gradcheck::{fusion_check, op_suite};
use fetalfuse::fusion::FusionMode;

#[test]
fn every_op_matches_finite_differences() {
    for seed in 0..20 {
        for (name, result) in op_suite(seed) {
            if let Err(e) = result {
                panic!("{name} (seed {seed}): {e}");
            }
        }
    }
}

#[test]
fn fusion_loss_gradient_matches_finite_differences() {
    for seed in 0..20 {
        fusion_check(seed, false, FusionMode::CrossAttention).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    }
}

#[test]
fn layer_norm_variant_gradient() {
    for seed in 100..105 {
        fusion_check(seed, true, FusionMode::CrossAttention).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    }
}

#[test]
fn concat_variant_gradient() {
    for seed in 200..205 {
        fusion_check(seed, false, FusionMode::Concat).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    }
}
