//! Feature values frozen from an external radiomics toolkit
//! (see fixtures/gen_reference.py).

use fetalfuse::data::{Grid, MaskedImage};
use serde_json::Value;

pub struct Case {
    pub name: String,
    pub image: MaskedImage,
    pub expected: Vec<(String, f64)>,
}

fn grid(v: &Value) -> Grid<u8> {
    let rows: Vec<Vec<u8>> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            r.as_array()
                .unwrap()
                .iter()
                .map(|x| x.as_u64().unwrap() as u8)
                .collect()
        })
        .collect();
    let (h, w) = (rows.len(), rows[0].len());
    Grid::from_vec(h, w, rows.concat()).unwrap()
}

pub fn load_cases() -> Vec<Case> {
    let text = include_str!("../fixtures/reference_features.json");
    let all: Value = serde_json::from_str(text).unwrap();
    all.as_array()
        .unwrap()
        .iter()
        .map(|c| {
            let name = c["name"].as_str().unwrap().to_string();
            let image = MaskedImage::new(
                name.clone(),
                grid(&c["pixels"]),
                grid(&c["mask"]),
                c["spacing"].as_f64().unwrap(),
            )
            .unwrap();
            let expected = c["features"]
                .as_object()
                .unwrap()
                .iter()
                .map(|(k, v)| (k.clone(), v.as_f64().unwrap()))
                .collect();
            Case { name, image, expected }
        })
        .collect()
}

pub fn close(got: f64, want: f64) -> bool {
    if want.abs() < 1e-2 {
        (got - want).abs() <= 1e-6
    } else {
        (got - want).abs() <= 1e-4 * want.abs()
    }
}
