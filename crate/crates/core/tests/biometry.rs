mod common;

use common::GA_ORACLE;
use fetalfuse::biometry::{
    edge_pixel_count, ga_from_hc, hc_from_mask, hc_from_mask_with, label_dataset, PerimeterMethod,
};
use fetalfuse::data::{load_manifest, resize_mask, save_png, Grid, Mask};
use proptest::prelude::*;

/// Perimeter of the ellipse with semi-axes 10 mm and 6 mm, by quadrature.
#[allow(clippy::excessive_precision)]
const ELLIPSE_PERIMETER_MM: f64 = 51.053997726796256932;

fn ellipse(h: usize, w: usize, a: f64, b: f64) -> Mask {
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    Grid::from_fn(h, w, |r, c| {
        let (y, x) = ((r as f64 - cy) / b, (c as f64 - cx) / a);
        u8::from(x * x + y * y <= 1.0)
    })
}

#[test]
fn ga_spot_values() {
    for (hc, want) in GA_ORACLE {
        let got = ga_from_hc(hc).unwrap();
        assert!((got - want).abs() < 1e-6, "HC {hc}: {got} vs {want}");
    }
    assert!((ga_from_hc(1.0).unwrap() - 3.3258f64.exp()).abs() < 1e-6);
}

#[test]
fn ga_strictly_increasing_on_dense_grid() {
    let grid: Vec<f64> = (0..=780).map(|i| 10.0 + 0.5 * i as f64).collect();
    for w in grid.windows(2) {
        assert!(
            ga_from_hc(w[1]).unwrap() > ga_from_hc(w[0]).unwrap(),
            "{} -> {}",
            w[0],
            w[1]
        );
    }
}

#[test]
fn ellipse_edge_count_within_tolerance() {
    let hc = hc_from_mask(&ellipse(160, 240, 100.0, 60.0), 0.1).unwrap();
    let rel = (hc - ELLIPSE_PERIMETER_MM).abs() / ELLIPSE_PERIMETER_MM;
    assert!(rel < 0.12, "edge-count HC {hc} is {rel:.3} off");
    let contour = hc_from_mask_with(&ellipse(160, 240, 100.0, 60.0), 0.1, PerimeterMethod::Contour).unwrap();
    assert!((contour - ELLIPSE_PERIMETER_MM).abs() / ELLIPSE_PERIMETER_MM < 0.12);
}

#[test]
fn resized_mask_agrees_with_original() {
    for (n, a, b) in [(512, 200.0, 140.0), (800, 300.0, 220.0), (384, 150.0, 120.0)] {
        let m = ellipse(n, n, a, b);
        let px = 0.1;
        let original = hc_from_mask(&m, px).unwrap();
        let (small, spx) = resize_mask(&m, px);
        let resized = hc_from_mask(&small, spx).unwrap();
        let rel = (resized - original).abs() / original;
        assert!(rel < 0.03, "{n}: {original} vs {resized}");
    }
}

#[test]
fn mixed_manifest_labels_both_paths() {
    let dir = tempfile::tempdir().unwrap();
    let m = ellipse(256, 256, 90.0, 70.0).map(|v| v * 255);
    save_png(&dir.path().join("m.png"), &m).unwrap();
    save_png(&dir.path().join("i.png"), &Grid::filled(256, 256, 80)).unwrap();
    std::fs::write(
        dir.path().join("manifest.csv"),
        "id,image,mask,pixel_size_mm,hc_mm\na,i.png,m.png,0.6,\nb,i.png,m.png,,150\n",
    )
    .unwrap();
    let manifest = load_manifest(&dir.path().join("manifest.csv")).unwrap();
    let labels: Vec<_> = label_dataset(&manifest, PerimeterMethod::EdgeCount)
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let edge = edge_pixel_count(&ellipse(256, 256, 90.0, 70.0)).unwrap() as f64;
    assert!((labels[0].hc_mm - edge * 0.6).abs() < 1e-9);
    assert_eq!(labels[1].hc_mm, 150.0);
    assert_eq!(labels[1].ga_days, ga_from_hc(150.0).unwrap());
    assert!(labels.iter().all(|l| l.ga_days > 0.0 && l.ga_days <= 330.0));
}

fn blob() -> impl Strategy<Value = Mask> {
    (1usize..8, 1usize..8).prop_flat_map(|(h, w)| {
        prop::collection::vec(prop::bool::weighted(0.6), h * w)
            .prop_filter("non-empty", |v| v.iter().any(|&b| b))
            .prop_map(move |v| Grid::from_vec(h, w, v.into_iter().map(u8::from).collect()).unwrap())
    })
}

fn place(m: &Mask, top: usize, left: usize) -> Mask {
    Grid::from_fn(20, 20, |r, c| {
        if r >= top && c >= left && r - top < m.rows() && c - left < m.cols() {
            m[(r - top, c - left)]
        } else {
            0
        }
    })
}

proptest! {
    #[test]
    fn hc_scales_with_pixel_size(m in blob(), s in 0.01f64..2.0, c in 0.1f64..10.0) {
        let a = hc_from_mask(&m, s).unwrap();
        let b = hc_from_mask(&m, s * c).unwrap();
        prop_assert!((b - c * a).abs() <= 1e-12 * b.abs());
    }

    #[test]
    fn edge_count_ignores_translation(m in blob(), t1 in 1usize..12, l1 in 1usize..12, t2 in 1usize..12, l2 in 1usize..12) {
        prop_assert_eq!(edge_pixel_count(&place(&m, t1, l1)).unwrap(), edge_pixel_count(&place(&m, t2, l2)).unwrap());
    }
}
