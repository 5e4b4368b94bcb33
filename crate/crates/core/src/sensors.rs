//! Egocentric perception: a fan of depth rays, per-ray ground-truth labels
//! and a distance-dependent label corruption model.

use rand::Rng;

use crate::grid::{Cell, DdaRay};
use crate::world::{CellClass, Pose, Scene, NUM_CLASSES};

/// Smallest reported range; keeps ranges strictly positive when the agent
/// sits exactly on a cell boundary facing a wall.
const MIN_RANGE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorConfig {
    pub fov: f64,
    pub n_rays: usize,
    pub max_range: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            fov: 79.0,
            n_rays: 128,
            max_range: 5.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DepthScan {
    pub ranges: Vec<f64>,
    pub fov: f64,
    pub max_range: f64,
}

impl DepthScan {
    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// Bearing of ray `i` in degrees (not wrapped). Ray 0 is the rightmost.
    pub fn bearing(&self, heading: f64, i: usize) -> f64 {
        ray_bearing(heading, self.fov, self.len(), i)
    }

    pub fn is_clamped(&self, i: usize) -> bool {
        self.ranges[i] >= self.max_range
    }
}

pub fn ray_bearing(heading: f64, fov: f64, n: usize, i: usize) -> f64 {
    if n <= 1 {
        heading
    } else {
        heading - fov / 2.0 + i as f64 * fov / (n - 1) as f64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemScan {
    pub labels: Vec<CellClass>,
}

impl SemScan {
    pub fn contains(&self, class: CellClass) -> bool {
        self.labels.contains(&class)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegNoiseModel {
    pub p0: f64,
    pub p1: f64,
    pub phantom_rate: f64,
    pub blob_width: usize,
}

impl SegNoiseModel {
    pub const NONE: SegNoiseModel = SegNoiseModel {
        p0: 0.0,
        p1: 0.0,
        phantom_rate: 0.0,
        blob_width: 0,
    };

    pub fn validate(&self) -> Result<(), String> {
        for (name, p) in [("p0", self.p0), ("p1", self.p1), ("phantom_rate", self.phantom_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("noise {name} must be in [0, 1], got {p}"));
            }
        }
        Ok(())
    }

    pub fn flip_probability(&self, range: f64, max_range: f64) -> f64 {
        (self.p0 + self.p1 * range / max_range).min(1.0)
    }
}

impl Default for SegNoiseModel {
    fn default() -> Self {
        Self {
            p0: 0.02,
            p1: 0.15,
            phantom_rate: 0.7,
            blob_width: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub depth: DepthScan,
    pub semantics: SemScan,
    pub pose: Pose,
    pub goal: CellClass,
}

/// Distance along one ray to the first non-free cell, and that cell.
/// Returns `(max_range, None)` when nothing is hit within range.
pub fn trace_ray(scene: &Scene, x: f64, y: f64, bearing_deg: f64, max_range: f64) -> (f64, Option<Cell>) {
    let frame = scene.frame();
    for rc in DdaRay::new(&frame, x, y, bearing_deg.to_radians(), max_range) {
        if rc.t_enter >= max_range {
            break;
        }
        if !scene.is_free_cell(rc.cell) {
            return (rc.t_enter.max(MIN_RANGE), Some(rc.cell));
        }
    }
    (max_range, None)
}

pub fn raycast_depth(scene: &Scene, pose: Pose, cfg: &SensorConfig) -> DepthScan {
    let ranges = (0..cfg.n_rays)
        .map(|i| {
            let b = ray_bearing(pose.heading, cfg.fov, cfg.n_rays, i);
            trace_ray(scene, pose.x, pose.y, b, cfg.max_range).0
        })
        .collect();
    DepthScan {
        ranges,
        fov: cfg.fov,
        max_range: cfg.max_range,
    }
}

/// Ground-truth label of the surface each ray hit; `Free` for clamped rays.
pub fn render_semantics(scene: &Scene, pose: Pose, depth: &DepthScan) -> SemScan {
    let labels = (0..depth.len())
        .map(|i| {
            if depth.is_clamped(i) {
                return CellClass::Free;
            }
            let b = depth.bearing(pose.heading, i);
            match trace_ray(scene, pose.x, pose.y, b, depth.max_range) {
                (_, Some(cell)) => scene.class_at(cell),
                (_, None) => CellClass::Free,
            }
        })
        .collect();
    SemScan { labels }
}

/// Applies per-ray label flips whose probability grows with range, plus an
/// occasional contiguous phantom blob of a random goal class.
pub fn corrupt_semantics<R: Rng + ?Sized>(
    gt: &SemScan,
    depth: &DepthScan,
    noise: &SegNoiseModel,
    rng: &mut R,
) -> SemScan {
    assert_eq!(gt.labels.len(), depth.len(), "scan length mismatch");
    let mut labels = gt.labels.clone();
    for (i, label) in labels.iter_mut().enumerate() {
        let p = noise.flip_probability(depth.ranges[i], depth.max_range);
        if rng.gen::<f64>() < p {
            let k = rng.gen_range(0..NUM_CLASSES - 1);
            let k = if k >= label.index() { k + 1 } else { k };
            *label = CellClass::from_index(k).expect("class index in range");
        }
    }
    let width = noise.blob_width.min(labels.len());
    if width > 0 && rng.gen::<f64>() < noise.phantom_rate {
        let start = rng.gen_range(0..=labels.len() - width);
        let class = CellClass::GOALS[rng.gen_range(0..CellClass::GOALS.len())];
        for l in &mut labels[start..start + width] {
            *l = class;
        }
    }
    SemScan { labels }
}

pub fn observe(scene: &Scene, pose: Pose, cfg: &SensorConfig) -> (DepthScan, SemScan) {
    let depth = raycast_depth(scene, pose, cfg);
    let sem = render_semantics(scene, pose, &depth);
    (depth, sem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::load_scene;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn room() -> Scene {
        // 2 m x 1 m interior at 0.05 m, chair band on the east wall.
        let w = 44;
        let h = 24;
        let mut text = format!("{w} {h} 0.05\n");
        for r in 0..h {
            let row: String = (0..w)
                .map(|c| {
                    if r == 0 || c == 0 || r == h - 1 || c == w - 1 {
                        '#'
                    } else if c == w - 2 && (8..16).contains(&r) {
                        'c'
                    } else {
                        '.'
                    }
                })
                .collect();
            text.push_str(&row);
            text.push('\n');
        }
        load_scene(&text).unwrap()
    }

    #[test]
    fn central_ray_measures_wall_distance() {
        let s = room();
        // west wall inner face at x = 0.05; stand 1.0 m east of it, face west
        let pose = Pose::new(1.05, 0.6, 180.0);
        let d = raycast_depth(&s, pose, &SensorConfig { fov: 60.0, n_rays: 3, max_range: 5.0 });
        assert!((d.ranges[1] - 1.0).abs() <= 0.05, "{}", d.ranges[1]);
    }

    #[test]
    fn clamp_marks_free() {
        let s = room();
        let pose = Pose::new(0.5, 0.6, 0.0);
        let cfg = SensorConfig { fov: 10.0, n_rays: 5, max_range: 0.5 };
        let d = raycast_depth(&s, pose, &cfg);
        assert!(d.ranges.iter().all(|r| *r == 0.5));
        let sem = render_semantics(&s, pose, &d);
        assert!(sem.labels.iter().all(|l| *l == CellClass::Free));
    }

    #[test]
    fn fan_bearings() {
        let d = DepthScan { ranges: vec![1.0; 3], fov: 90.0, max_range: 5.0 };
        assert_eq!(d.bearing(10.0, 0), -35.0);
        assert_eq!(d.bearing(10.0, 1), 10.0);
        assert_eq!(d.bearing(10.0, 2), 55.0);
    }

    #[test]
    fn chair_band_labels() {
        let s = room();
        let pose = Pose::new(1.6, 0.6, 0.0);
        let cfg = SensorConfig { fov: 20.0, n_rays: 9, max_range: 5.0 };
        let (_, sem) = observe(&s, pose, &cfg);
        assert!(sem.labels.iter().all(|l| *l == CellClass::Chair), "{:?}", sem.labels);
    }

    #[test]
    fn mixed_scene_matches_point_lookup() {
        let s = room();
        let pose = Pose::new(1.0, 0.55, 0.0);
        let cfg = SensorConfig { fov: 120.0, n_rays: 61, max_range: 5.0 };
        let (depth, sem) = observe(&s, pose, &cfg);
        let mut seen_wall = false;
        let mut seen_chair = false;
        for i in 0..depth.len() {
            // independent oracle: step just past the hit along the ray
            let b = depth.bearing(pose.heading, i).to_radians();
            let t = depth.ranges[i] + 1e-6;
            let cell = s.cell_of(pose.x + t * b.cos(), pose.y + t * b.sin());
            let fx = (pose.x + t * b.cos()) / 0.05;
            let fy = (pose.y + t * b.sin()) / 0.05;
            let near_corner = (fx - fx.round()).abs() < 1e-4 && (fy - fy.round()).abs() < 1e-4;
            if !near_corner {
                assert_eq!(sem.labels[i], s.class_at(cell), "ray {i}");
            }
            seen_wall |= sem.labels[i] == CellClass::Wall;
            seen_chair |= sem.labels[i] == CellClass::Chair;
        }
        assert!(seen_wall && seen_chair);
    }

    #[test]
    fn zero_noise_is_identity() {
        let gt = SemScan { labels: vec![CellClass::Wall, CellClass::Chair, CellClass::Free] };
        let depth = DepthScan { ranges: vec![1.0, 2.0, 5.0], fov: 79.0, max_range: 5.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(corrupt_semantics(&gt, &depth, &SegNoiseModel::NONE, &mut rng), gt);
    }

    #[test]
    fn forced_flip_changes_every_label() {
        let gt = SemScan { labels: CellClass::ALL.repeat(10) };
        let depth = DepthScan { ranges: vec![1.0; 80], fov: 79.0, max_range: 5.0 };
        let noise = SegNoiseModel { p0: 1.0, ..SegNoiseModel::NONE };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let out = corrupt_semantics(&gt, &depth, &noise, &mut rng);
        assert!(out.labels.iter().zip(&gt.labels).all(|(a, b)| a != b));
    }

    #[test]
    fn flip_rate_at_half_range() {
        let n = 100_000;
        let gt = SemScan { labels: vec![CellClass::Wall; n] };
        let depth = DepthScan { ranges: vec![2.5; n], fov: 79.0, max_range: 5.0 };
        let noise = SegNoiseModel { p0: 0.1, p1: 0.2, ..SegNoiseModel::NONE };
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let out = corrupt_semantics(&gt, &depth, &noise, &mut rng);
        let flips = out.labels.iter().filter(|l| **l != CellClass::Wall).count() as f64 / n as f64;
        assert!((flips - 0.2).abs() < 0.01, "{flips}");
    }

    #[test]
    fn flip_rate_non_decreasing_in_range() {
        let n = 20_000;
        let noise = SegNoiseModel { p0: 0.02, p1: 0.3, ..SegNoiseModel::NONE };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rates = Vec::new();
        for bin in 0..5 {
            let r = 0.5 + bin as f64;
            let gt = SemScan { labels: vec![CellClass::Wall; n] };
            let depth = DepthScan { ranges: vec![r; n], fov: 79.0, max_range: 5.0 };
            let out = corrupt_semantics(&gt, &depth, &noise, &mut rng);
            rates.push(out.labels.iter().filter(|l| **l != CellClass::Wall).count() as f64 / n as f64);
        }
        for w in rates.windows(2) {
            assert!(w[1] + 0.005 >= w[0], "{rates:?}");
        }
    }

    #[test]
    fn corruption_is_seed_reproducible() {
        let gt = SemScan { labels: vec![CellClass::Wall; 256] };
        let depth = DepthScan { ranges: vec![3.0; 256], fov: 79.0, max_range: 5.0 };
        let noise = SegNoiseModel { phantom_rate: 0.5, ..SegNoiseModel::default() };
        let a = corrupt_semantics(&gt, &depth, &noise, &mut ChaCha8Rng::seed_from_u64(42));
        let b = corrupt_semantics(&gt, &depth, &noise, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }
}
