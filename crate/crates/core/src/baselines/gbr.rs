use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GbrConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub shrinkage: f64,
    /// Fraction of rows drawn without replacement for each stage.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbrConfig {
    fn default() -> Self {
        GbrConfig {
            n_trees: 200,
            max_depth: 3,
            shrinkage: 0.1,
            subsample: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn eval(&self, row: &[f64]) -> f64 {
        match self {
            Node::Leaf(v) => *v,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if row[*feature] <= *threshold {
                    left.eval(row)
                } else {
                    right.eval(row)
                }
            }
        }
    }
}

/// Least-squares gradient-boosted regression trees.
#[derive(Debug, Clone, PartialEq)]
pub struct Gbr {
    base: f64,
    shrinkage: f64,
    trees: Vec<Node>,
}

struct TreeBuilder<'a> {
    x: &'a DMatrix<f64>,
    /// Row indices of `x` sorted by each feature.
    order: &'a [Vec<usize>],
    residual: &'a [f64],
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl TreeBuilder<'_> {
    fn build(&self, members: &mut [bool], rows: &[usize], depth: usize) -> Node {
        let n = rows.len() as f64;
        let sum: f64 = rows.iter().map(|&i| self.residual[i]).sum();
        let leaf = Node::Leaf(sum / n);
        if depth == 0 || rows.len() < 2 {
            return leaf;
        }
        let Some(best) = self.best_split(members, rows.len(), sum) else {
            return leaf;
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| self.x[(i, best.feature)] <= best.threshold);
        for &i in &right {
            members[i] = false;
        }
        let left_node = self.build(members, &left, depth - 1);
        for &i in &left {
            members[i] = false;
        }
        for &i in &right {
            members[i] = true;
        }
        let right_node = self.build(members, &right, depth - 1);
        for &i in &left {
            members[i] = true;
        }
        Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(left_node),
            right: Box::new(right_node),
        }
    }

    /// Exhaustive scan of midpoints between consecutive distinct values,
    /// maximizing the reduction in squared error.
    fn best_split(&self, members: &[bool], count: usize, sum: f64) -> Option<BestSplit> {
        let parent = sum * sum / count as f64;
        let mut best: Option<BestSplit> = None;
        for (j, order) in self.order.iter().enumerate() {
            let mut left_sum = 0.0;
            let mut prev: Option<f64> = None;
            for (left_n, &i) in order.iter().filter(|&&i| members[i]).enumerate() {
                let v = self.x[(i, j)];
                if let Some(p) = prev {
                    if v > p {
                        let right_n = count - left_n;
                        let right_sum = sum - left_sum;
                        let gain =
                            left_sum * left_sum / left_n as f64 + right_sum * right_sum / right_n as f64 - parent;
                        if best.as_ref().is_none_or(|b| gain > b.gain) {
                            best = Some(BestSplit {
                                feature: j,
                                threshold: p + (v - p) / 2.0,
                                gain,
                            });
                        }
                    }
                }
                left_sum += self.residual[i];
                prev = Some(v);
            }
        }
        let scale = self.residual.iter().map(|r| r * r).sum::<f64>();
        best.filter(|b| b.gain > 1e-12 * scale.max(f64::MIN_POSITIVE))
    }
}

impl Gbr {
    pub fn fit(x: &DMatrix<f64>, y: &[f64], cfg: &GbrConfig) -> Result<Self> {
        Self::fit_traced(x, y, cfg, |_| ())
    }

    /// Like [`Gbr::fit`], calling `on_stage` with the training MSE after the
    /// constant stage and after every tree.
    pub fn fit_traced(x: &DMatrix<f64>, y: &[f64], cfg: &GbrConfig, mut on_stage: impl FnMut(f64)) -> Result<Self> {
        let n = y.len();
        if x.nrows() != n {
            return Err(Error::Shape(format!("{} rows but {} targets", x.nrows(), n)));
        }
        if n < 2 || x.ncols() == 0 {
            return Err(Error::invalid("boosting needs at least two rows and one feature"));
        }
        if !(cfg.shrinkage > 0.0 && cfg.shrinkage <= 1.0) || !(cfg.subsample > 0.0 && cfg.subsample <= 1.0) {
            return Err(Error::invalid("shrinkage and subsample must lie in (0, 1]"));
        }
        let order: Vec<Vec<usize>> = (0..x.ncols())
            .map(|j| {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&a, &b| x[(a, j)].total_cmp(&x[(b, j)]));
                idx
            })
            .collect();
        let base = y.iter().sum::<f64>() / n as f64;
        let mut fitted = vec![base; n];
        let mse = |f: &[f64]| y.iter().zip(f).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64;
        on_stage(mse(&fitted));
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let draw = ((cfg.subsample * n as f64).round() as usize).clamp(1, n);
        let mut trees = Vec::with_capacity(cfg.n_trees);
        for _ in 0..cfg.n_trees {
            let residual: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
            let mut rows: Vec<usize> = if draw == n {
                (0..n).collect()
            } else {
                sample(&mut rng, n, draw).into_vec()
            };
            rows.sort_unstable();
            let mut members = vec![false; n];
            for &i in &rows {
                members[i] = true;
            }
            let builder = TreeBuilder {
                x,
                order: &order,
                residual: &residual,
            };
            let tree = builder.build(&mut members, &rows, cfg.max_depth);
            for (i, f) in fitted.iter_mut().enumerate() {
                let row: Vec<f64> = x.row(i).iter().copied().collect();
                *f += cfg.shrinkage * tree.eval(&row);
            }
            on_stage(mse(&fitted));
            trees.push(tree);
        }
        Ok(Gbr {
            base,
            shrinkage: cfg.shrinkage,
            trees,
        })
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.base + self.shrinkage * self.trees.iter().map(|t| t.eval(row)).sum::<f64>()
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}
