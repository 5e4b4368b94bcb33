use crate::sensors::{DepthScan, SemScan};
use crate::world::{CellClass, NUM_CLASSES};

/// Per-ray feature width: normalized range, two neighbour range
/// differences, a one-hot of the seven surface classes, and the 3-ray
/// label agreement count.
pub const FEATURE_DIM: usize = 11;

const ONE_HOT_START: usize = 3;
const AGREEMENT: usize = ONE_HOT_START + NUM_CLASSES - 1;

/// Row-major `n_rays x FEATURE_DIM` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RayFeatures {
    n_rays: usize,
    data: Vec<f64>,
}

impl RayFeatures {
    pub fn from_rows(n_rays: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n_rays * FEATURE_DIM);
        Self { n_rays, data }
    }

    pub fn n_rays(&self) -> usize {
        self.n_rays
    }

    pub fn dim(&self) -> usize {
        FEATURE_DIM
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * FEATURE_DIM..(i + 1) * FEATURE_DIM]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn normalized_range(&self, i: usize) -> f64 {
        self.row(i)[0]
    }

    pub fn left_diff(&self, i: usize) -> f64 {
        self.row(i)[1]
    }

    pub fn right_diff(&self, i: usize) -> f64 {
        self.row(i)[2]
    }

    pub fn agreement(&self, i: usize) -> f64 {
        self.row(i)[AGREEMENT]
    }

    /// Class encoded by the one-hot block (`Free` when all zero).
    pub fn noisy_label(&self, i: usize) -> CellClass {
        let row = self.row(i);
        (0..NUM_CLASSES - 1)
            .find(|&k| row[ONE_HOT_START + k] > 0.5)
            .and_then(|k| CellClass::from_index(k + 1))
            .unwrap_or(CellClass::Free)
    }
}

/// Deterministic per-ray features of a (depth, noisy label) scan. Ray `i+1`
/// is the left neighbour of ray `i`; missing neighbours contribute 0.
pub fn featurize(depth: &DepthScan, sem: &SemScan) -> RayFeatures {
    assert_eq!(depth.len(), sem.labels.len(), "scan length mismatch");
    let n = depth.len();
    let max = depth.max_range;
    let mut data = vec![0.0; n * FEATURE_DIM];
    for i in 0..n {
        let row = &mut data[i * FEATURE_DIM..(i + 1) * FEATURE_DIM];
        let r = depth.ranges[i];
        row[0] = (r / max).clamp(0.0, 1.0);
        if i + 1 < n {
            row[1] = (depth.ranges[i + 1] - r) / max;
        }
        if i > 0 {
            row[2] = (depth.ranges[i - 1] - r) / max;
        }
        let label = sem.labels[i];
        if label != CellClass::Free {
            row[ONE_HOT_START + label.index() - 1] = 1.0;
        }
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(n - 1);
        row[AGREEMENT] = (lo..=hi).filter(|&j| sem.labels[j] == label).count() as f64;
    }
    RayFeatures { n_rays: n, data }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_range_normalizes_to_half() {
        let d = DepthScan { ranges: vec![2.5; 6], fov: 79.0, max_range: 5.0 };
        let s = SemScan { labels: vec![CellClass::Wall; 6] };
        let f = featurize(&d, &s);
        assert!((0..6).all(|i| f.normalized_range(i) == 0.5));
        assert!((0..6).all(|i| f.left_diff(i) == 0.0 && f.right_diff(i) == 0.0));
    }

    #[test]
    fn agreement_counts_interior_neighbours() {
        let d = DepthScan { ranges: vec![1.0; 5], fov: 79.0, max_range: 5.0 };
        let s = SemScan { labels: vec![CellClass::Chair; 5] };
        let f = featurize(&d, &s);
        assert!((1..4).all(|i| f.agreement(i) == 3.0));
        assert_eq!(f.agreement(0), 2.0);
        assert_eq!(f.noisy_label(2), CellClass::Chair);
    }

    #[test]
    fn boundary_differences_are_zero() {
        let d = DepthScan { ranges: vec![1.0, 2.0, 4.0], fov: 79.0, max_range: 5.0 };
        let s = SemScan { labels: vec![CellClass::Wall, CellClass::Free, CellClass::Tv] };
        let f = featurize(&d, &s);
        assert_eq!(f.right_diff(0), 0.0);
        assert_eq!(f.left_diff(2), 0.0);
        assert!((f.left_diff(0) - 0.2).abs() < 1e-12);
        assert!((f.right_diff(2) + 0.4).abs() < 1e-12);
        assert_eq!(f.noisy_label(1), CellClass::Free);
        assert_eq!(f.noisy_label(2), CellClass::Tv);
        assert_eq!(f.dim(), 11);
        assert!(f.as_slice().iter().all(|v| v.is_finite()));
    }
}
