/// Guard added inside logarithms, the spacing of floats at 1.0.
pub(crate) const LOG_EPS: f64 = f64::EPSILON;

/// The four planar directions at distance 1 as (row, col) steps.
pub const PLANAR_OFFSETS: [(isize, isize); 4] = [(0, 1), (1, 1), (1, 0), (1, -1)];

/// All eight neighbours of a pixel.
pub const NEIGHBOURS_8: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextureKind {
    Glcm,
    Glrlm,
    Glszm,
    Gldm,
}

/// Integer texture matrix. Row `i` holds gray level `i + 1`; the column
/// meaning depends on `kind` (partner level, run length, zone size or
/// dependence count, all 1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextureMatrix {
    pub kind: TextureKind,
    pub rows: usize,
    pub cols: usize,
    pub counts: Vec<u64>,
    /// Direction for GLCM and GLRLM matrices.
    pub offset: Option<(isize, isize)>,
    /// Dependence threshold for GLDM.
    pub alpha: Option<u32>,
}

impl TextureMatrix {
    pub(crate) fn zeros(kind: TextureKind, rows: usize, cols: usize) -> Self {
        TextureMatrix {
            kind,
            rows,
            cols,
            counts: vec![0; rows * cols],
            offset: None,
            alpha: None,
        }
    }

    pub fn get(&self, level: usize, col: usize) -> u64 {
        self.counts[(level - 1) * self.cols + col - 1]
    }

    pub(crate) fn bump(&mut self, level: u32, col: usize) {
        self.counts[(level as usize - 1) * self.cols + col - 1] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Entries divided by their sum; all zeros for an empty matrix.
    pub fn normalized(&self) -> Vec<f64> {
        let total = self.total();
        if total == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts.iter().map(|&c| c as f64 / total as f64).collect()
    }

    /// Restricts the matrix to the rows of the given (1-based) levels.
    pub(crate) fn level_rows(&self, levels: &[u32]) -> Vec<f64> {
        let mut out = Vec::with_capacity(levels.len() * self.cols);
        for &l in levels {
            let start = (l as usize - 1) * self.cols;
            out.extend(self.counts[start..start + self.cols].iter().map(|&c| c as f64));
        }
        out
    }
}

/// Mean over the finite entries, 0 when there are none.
pub(crate) fn nanmean(values: &[f64]) -> f64 {
    let (sum, n) = values
        .iter()
        .filter(|v| v.is_finite())
        .fold((0.0, 0usize), |(s, n), &v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Averages per-angle feature rows column by column.
pub(crate) fn average_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let width = rows.first().map_or(0, Vec::len);
    (0..width)
        .map(|k| nanmean(&rows.iter().map(|r| r[k]).collect::<Vec<_>>()))
        .collect()
}

pub(crate) fn entropy(p: impl Iterator<Item = f64>) -> f64 {
    -p.map(|v| v * (v + LOG_EPS).log2()).sum::<f64>()
}

/// Level-by-size statistics shared by run-length, size-zone and dependence
/// matrices. `p` holds raw counts, `levels` the gray value of each row and
/// `sizes` the size value of each column.
pub(crate) struct LevelSizeStats {
    p: Vec<f64>,
    levels: Vec<f64>,
    sizes: Vec<f64>,
    by_level: Vec<f64>,
    by_size: Vec<f64>,
    pub total: f64,
}

impl LevelSizeStats {
    pub fn new(p: Vec<f64>, levels: Vec<f64>, sizes: Vec<f64>) -> Self {
        let n = sizes.len();
        debug_assert_eq!(p.len(), levels.len() * n);
        let by_level: Vec<f64> = p.chunks(n).map(|r| r.iter().sum()).collect();
        let by_size: Vec<f64> = (0..n).map(|j| (0..levels.len()).map(|i| p[i * n + j]).sum()).collect();
        let total = by_level.iter().sum();
        LevelSizeStats {
            p,
            levels,
            sizes,
            by_level,
            by_size,
            total,
        }
    }

    fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let n = self.sizes.len();
        self.p
            .iter()
            .enumerate()
            .map(move |(k, &v)| (v, self.levels[k / n], self.sizes[k % n]))
    }

    fn weighted_size(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.by_size
            .iter()
            .zip(&self.sizes)
            .map(|(&v, &j)| v * f(j))
            .sum::<f64>()
            / self.total
    }

    fn weighted_level(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.by_level
            .iter()
            .zip(&self.levels)
            .map(|(&v, &i)| v * f(i))
            .sum::<f64>()
            / self.total
    }

    fn weighted_cell(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.cells().map(|(v, i, j)| v * f(i, j)).sum::<f64>() / self.total
    }

    pub fn small_emphasis(&self) -> f64 {
        self.weighted_size(|j| 1.0 / (j * j))
    }

    pub fn large_emphasis(&self) -> f64 {
        self.weighted_size(|j| j * j)
    }

    pub fn level_nonuniformity(&self) -> f64 {
        self.by_level.iter().map(|v| v * v).sum::<f64>() / self.total
    }

    pub fn level_nonuniformity_normalized(&self) -> f64 {
        self.level_nonuniformity() / self.total
    }

    pub fn size_nonuniformity(&self) -> f64 {
        self.by_size.iter().map(|v| v * v).sum::<f64>() / self.total
    }

    pub fn size_nonuniformity_normalized(&self) -> f64 {
        self.size_nonuniformity() / self.total
    }

    /// Pixels covered by all entries, sum of count times size.
    pub fn covered(&self) -> f64 {
        self.by_size.iter().zip(&self.sizes).map(|(v, j)| v * j).sum()
    }

    pub fn level_variance(&self) -> f64 {
        let mu = self.weighted_level(|i| i);
        self.weighted_level(|i| (i - mu) * (i - mu))
    }

    pub fn size_variance(&self) -> f64 {
        let mu = self.weighted_size(|j| j);
        self.weighted_size(|j| (j - mu) * (j - mu))
    }

    pub fn entropy(&self) -> f64 {
        entropy(self.p.iter().map(|v| v / self.total))
    }

    pub fn low_level_emphasis(&self) -> f64 {
        self.weighted_level(|i| 1.0 / (i * i))
    }

    pub fn high_level_emphasis(&self) -> f64 {
        self.weighted_level(|i| i * i)
    }

    pub fn small_low(&self) -> f64 {
        self.weighted_cell(|i, j| 1.0 / (i * i * j * j))
    }

    pub fn small_high(&self) -> f64 {
        self.weighted_cell(|i, j| i * i / (j * j))
    }

    pub fn large_low(&self) -> f64 {
        self.weighted_cell(|i, j| j * j / (i * i))
    }

    pub fn large_high(&self) -> f64 {
        self.weighted_cell(|i, j| i * i * j * j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nanmean_skips_non_finite() {
        assert_eq!(nanmean(&[1.0, f64::NAN, 3.0]), 2.0);
        assert_eq!(nanmean(&[f64::NAN]), 0.0);
        assert_eq!(nanmean(&[]), 0.0);
    }

    #[test]
    fn entropy_of_uniform_pair_is_one_bit() {
        assert!((entropy([0.5, 0.5].into_iter()) - 1.0).abs() < 1e-12);
        assert!(entropy([1.0].into_iter()).abs() < 1e-12);
    }

    #[test]
    fn level_size_stats_hand_case() {
        // level 1: one run of 2; level 2: two runs of 1
        let s = LevelSizeStats::new(vec![0.0, 1.0, 2.0, 0.0], vec![1.0, 2.0], vec![1.0, 2.0]);
        assert_eq!(s.total, 3.0);
        assert!((s.small_emphasis() - (2.0 + 0.25) / 3.0).abs() < 1e-12);
        assert!((s.large_emphasis() - (2.0 + 4.0) / 3.0).abs() < 1e-12);
        assert!((s.level_nonuniformity() - 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.covered(), 4.0);
        assert!((s.large_high() - (4.0 + 2.0 * 4.0) / 3.0).abs() < 1e-12);
    }
}
