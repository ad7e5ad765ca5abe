use nalgebra::DMatrix;

use super::linear::check_xy;
use crate::error::{Error, Result};

/// Euclidean k-nearest-neighbour regressor. Equal distances favour the
/// lower training index.
#[derive(Debug, Clone)]
pub struct Knn {
    x: DMatrix<f64>,
    y: Vec<f64>,
    k: usize,
}

impl Knn {
    pub fn fit(x: &DMatrix<f64>, y: &[f64], k: usize) -> Result<Self> {
        check_xy(x, y)?;
        if k == 0 || k > y.len() {
            return Err(Error::invalid(format!("k must be in 1..={}, got {k}", y.len())));
        }
        Ok(Knn {
            x: x.clone(),
            y: y.to_vec(),
            k,
        })
    }

    pub fn predict(&self, query: &[f64]) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .x
            .row_iter()
            .enumerate()
            .map(|(i, row)| {
                let d2: f64 = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        dist[..self.k].iter().map(|&(_, i)| self.y[i]).sum::<f64>() / self.k as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (DMatrix<f64>, Vec<f64>) {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 3.0, 3.0]);
        (x, vec![1.0, 2.0, 3.0, 4.0])
    }

    #[test]
    fn exact_match_with_one_neighbour() {
        let (x, y) = toy();
        let m = Knn::fit(&x, &y, 1).unwrap();
        assert_eq!(m.predict(&[0.0, 2.0]), 3.0);
    }

    #[test]
    fn all_neighbours_give_mean() {
        let (x, y) = toy();
        assert_eq!(Knn::fit(&x, &y, 4).unwrap().predict(&[9.0, 9.0]), 2.5);
    }

    #[test]
    fn two_neighbours_by_hand() {
        // from (0.5, 0.5): d² = 0.5, 0.5, 2.5, 12.5
        let (x, y) = toy();
        assert_eq!(Knn::fit(&x, &y, 2).unwrap().predict(&[0.5, 0.5]), 1.5);
        // from (0.5, 1): d² = 1.25, 1.25, 1.25, 10.25; ties keep indices 0, 1
        assert_eq!(Knn::fit(&x, &y, 2).unwrap().predict(&[0.5, 1.0]), 1.5);
    }

    #[test]
    fn bad_k_errors() {
        let (x, y) = toy();
        assert!(Knn::fit(&x, &y, 0).is_err());
        assert!(Knn::fit(&x, &y, 5).is_err());
    }
}
