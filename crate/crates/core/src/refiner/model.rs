//! Linear per-ray segmenter and the weighted classification/BCE/dice loss.

use crate::error::{Error, Result};
use crate::world::{CellClass, NUM_CLASSES};

use super::features::{RayFeatures, FEATURE_DIM};
use super::real::Real;

/// Rows of the weight matrix: one per feature plus the bias row.
pub const THETA_ROWS: usize = FEATURE_DIM + 1;
pub const THETA_LEN: usize = THETA_ROWS * NUM_CLASSES;

const DICE_EPS: f64 = 1e-6;

/// Segmenter weights, row-major `(FEATURE_DIM + 1) x NUM_CLASSES`; the last
/// row is the bias.
#[derive(Clone, Debug, PartialEq)]
pub struct SegModelParams {
    pub theta: Vec<f64>,
}

impl SegModelParams {
    pub fn zeros() -> Self {
        Self {
            theta: vec![0.0; THETA_LEN],
        }
    }

    pub fn from_vec(theta: Vec<f64>) -> Result<Self> {
        if theta.len() != THETA_LEN {
            return Err(Error::Contract(format!(
                "theta has {} entries, expected {THETA_LEN}",
                theta.len()
            )));
        }
        Ok(Self { theta })
    }

    pub fn get(&self, row: usize, class: usize) -> f64 {
        self.theta[row * NUM_CLASSES + class]
    }
}

/// Row-major `n_rays x NUM_CLASSES` logits.
#[derive(Clone, Debug, PartialEq)]
pub struct Logits {
    pub n_rays: usize,
    pub data: Vec<f64>,
}

impl Logits {
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * NUM_CLASSES..(r + 1) * NUM_CLASSES]
    }

    pub fn softmax_row(&self, r: usize) -> [f64; NUM_CLASSES] {
        softmax(self.row(r))
    }

    /// Per-ray argmax; ties resolve to the lowest class index.
    pub fn argmax(&self) -> Vec<CellClass> {
        (0..self.n_rays)
            .map(|r| {
                let row = self.row(r);
                let mut best = 0;
                for c in 1..NUM_CLASSES {
                    if row[c] > row[best] {
                        best = c;
                    }
                }
                CellClass::from_index(best).expect("class index")
            })
            .collect()
    }
}

pub(crate) fn softmax(z: &[f64]) -> [f64; NUM_CLASSES] {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = [0.0; NUM_CLASSES];
    let mut s = 0.0;
    for (pc, zc) in p.iter_mut().zip(z) {
        *pc = (zc - m).exp();
        s += *pc;
    }
    p.iter_mut().for_each(|v| *v /= s);
    p
}

fn log_sum_exp(z: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = z.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + z.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Logits of one frame for generic scalars: `[features, 1] * theta`.
pub(crate) fn frame_logits<T: Real>(theta: &[T], feats: &RayFeatures) -> Vec<T> {
    let mut out = vec![T::zero(); feats.n_rays() * NUM_CLASSES];
    for r in 0..feats.n_rays() {
        let x = feats.row(r);
        let z = &mut out[r * NUM_CLASSES..(r + 1) * NUM_CLASSES];
        z.copy_from_slice(&theta[FEATURE_DIM * NUM_CLASSES..]);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let w = &theta[j * NUM_CLASSES..(j + 1) * NUM_CLASSES];
            for c in 0..NUM_CLASSES {
                z[c] += w[c].scale(xj);
            }
        }
    }
    out
}

pub fn seg_forward(params: &SegModelParams, feats: &RayFeatures) -> Result<Logits> {
    if params.theta.len() != (feats.dim() + 1) * NUM_CLASSES {
        return Err(Error::Contract(format!(
            "theta has {} entries but features have dimension {}",
            params.theta.len(),
            feats.dim()
        )));
    }
    Ok(Logits {
        n_rays: feats.n_rays(),
        data: frame_logits(&params.theta, feats),
    })
}

/// Weights of the classification, one-vs-all BCE and dice terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub cls: f64,
    pub bce: f64,
    pub dice: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            cls: 2.0,
            bce: 5.0,
            dice: 5.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossTerms {
    pub cls: f64,
    pub bce: f64,
    pub dice: f64,
    pub total: f64,
}

pub fn seg_loss(logits: &Logits, gt: &[CellClass], w: &LossWeights) -> f64 {
    seg_loss_terms(logits, gt, w).total
}

/// Mean cross-entropy, mean one-vs-all BCE over (ray, class) on softmax
/// probabilities, and one minus the mean soft dice over classes present in
/// the ground truth.
pub fn seg_loss_terms(logits: &Logits, gt: &[CellClass], w: &LossWeights) -> LossTerms {
    seg_loss_impl(logits, gt, w, false).0
}

/// Loss and its gradient with respect to the logits.
pub fn seg_loss_with_grad(logits: &Logits, gt: &[CellClass], w: &LossWeights) -> (f64, Vec<f64>) {
    let (terms, grad) = seg_loss_impl(logits, gt, w, true);
    (terms.total, grad)
}

fn seg_loss_impl(logits: &Logits, gt: &[CellClass], w: &LossWeights, want_grad: bool) -> (LossTerms, Vec<f64>) {
    assert_eq!(logits.n_rays, gt.len(), "label count mismatch");
    let r_count = logits.n_rays as f64;
    let k = NUM_CLASSES;

    let mut probs = vec![0.0; logits.n_rays * k];
    let mut cls = 0.0;
    let mut bce = 0.0;
    // b[r][c] = p_rc * dL/dp_rc for the probability-space terms
    let mut b = vec![0.0; if want_grad { logits.n_rays * k } else { 0 }];

    for r in 0..logits.n_rays {
        let z = logits.row(r);
        let lse = log_sum_exp(z.iter().copied());
        let g = gt[r].index();
        cls -= z[g] - lse;
        for c in 0..k {
            let logp = z[c] - lse;
            let p = logp.exp();
            probs[r * k + c] = p;
            let log1mp = if p < 0.5 {
                (-p).ln_1p()
            } else {
                log_sum_exp((0..k).filter(|&j| j != c).map(|j| z[j])) - lse
            };
            if c == g {
                bce -= logp;
            } else {
                bce -= log1mp;
            }
            if want_grad {
                let gc = if c == g { 1.0 } else { 0.0 };
                b[r * k + c] = w.bce / (r_count * k as f64) * (-gc + (1.0 - gc) * (logp - log1mp).exp());
            }
        }
    }
    cls /= r_count;
    bce /= r_count * k as f64;

    let mut dice_sum = 0.0;
    let mut present = 0usize;
    let mut sums = [(0.0f64, 0.0f64, 0.0f64); NUM_CLASSES]; // (S_pg, S_p, S_g)
    for r in 0..logits.n_rays {
        let g = gt[r].index();
        for c in 0..k {
            let p = probs[r * k + c];
            sums[c].1 += p;
            if c == g {
                sums[c].0 += p;
                sums[c].2 += 1.0;
            }
        }
    }
    for s in &sums {
        if s.2 > 0.0 {
            present += 1;
            dice_sum += 2.0 * s.0 / (s.1 + s.2 + DICE_EPS);
        }
    }
    let dice = if present > 0 { 1.0 - dice_sum / present as f64 } else { 0.0 };

    let total = w.cls * cls + w.bce * bce + w.dice * dice;
    let terms = LossTerms { cls, bce, dice, total };
    if !want_grad {
        return (terms, Vec::new());
    }

    let mut grad = vec![0.0; logits.n_rays * k];
    for r in 0..logits.n_rays {
        let g = gt[r].index();
        let p = &probs[r * k..(r + 1) * k];
        let br = &mut b[r * k..(r + 1) * k];
        if present > 0 {
            for c in 0..k {
                let s = sums[c];
                if s.2 == 0.0 {
                    continue;
                }
                let den = s.1 + s.2 + DICE_EPS;
                let gc = if c == g { 1.0 } else { 0.0 };
                let d_dice = 2.0 * gc / den - 2.0 * s.0 / (den * den);
                br[c] += -w.dice / present as f64 * d_dice * p[c];
            }
        }
        let sum_b: f64 = br.iter().sum();
        for j in 0..k {
            let ce = w.cls * (p[j] - if j == g { 1.0 } else { 0.0 }) / r_count;
            grad[r * k + j] = ce + br[j] - p[j] * sum_b;
        }
    }
    (terms, grad)
}

/// `theta` gradient of a loss given its logits gradient on one frame.
pub fn theta_grad_from_logits(feats: &RayFeatures, dlogits: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; THETA_LEN];
    for r in 0..feats.n_rays() {
        let dz = &dlogits[r * NUM_CLASSES..(r + 1) * NUM_CLASSES];
        for (j, &xj) in feats.row(r).iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for c in 0..NUM_CLASSES {
                g[j * NUM_CLASSES + c] += xj * dz[c];
            }
        }
        for c in 0..NUM_CLASSES {
            g[FEATURE_DIM * NUM_CLASSES + c] += dz[c];
        }
    }
    g
}

/// Fraction of rays whose argmax matches the ground truth.
pub fn accuracy(logits: &Logits, gt: &[CellClass]) -> f64 {
    let pred = logits.argmax();
    pred.iter().zip(gt).filter(|(a, b)| a == b).count() as f64 / gt.len().max(1) as f64
}
