//! Learned fusion loss over a frame sequence and the single inner adaptation
//! step it drives.
//!
//! Each frame is summarized by the mean and max over rays of its class
//! probabilities and features. The network sees the target frame's summary next to the mean
//! summary of the context frames, so one parameter vector serves any
//! sequence length.

use rand::Rng;

use crate::error::{Error, Result};
use crate::sensors::SemScan;
use crate::world::NUM_CLASSES;

use super::features::{RayFeatures, FEATURE_DIM};
use super::model::{frame_logits, seg_forward, SegModelParams, THETA_LEN};
use super::real::{Dual, Real};

pub const HIDDEN: usize = 16;
pub const FRAME_STATS: usize = 2 * NUM_CLASSES + 2 * FEATURE_DIM;
pub const FUSION_INPUT: usize = 2 * FRAME_STATS;
pub const PHI_LEN: usize = HIDDEN * FUSION_INPUT + 2 * HIDDEN + 1;

const B1: usize = HIDDEN * FUSION_INPUT;
const W2: usize = B1 + HIDDEN;
const B2: usize = W2 + HIDDEN;

/// Fusion network weights: `W1` (`HIDDEN x FUSION_INPUT`, row-major), `b1`,
/// `w2`, then the scalar `b2`. Output is `softplus(w2 . tanh(W1 x + b1) + b2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionParams {
    pub phi: Vec<f64>,
}

impl FusionParams {
    pub fn zeros() -> Self {
        Self {
            phi: vec![0.0; PHI_LEN],
        }
    }

    /// A network whose output does not depend on its input.
    pub fn constant(bias: f64) -> Self {
        let mut p = Self::zeros();
        p.phi[B2] = bias;
        p
    }

    pub fn init<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let s1 = 1.0 / (FUSION_INPUT as f64).sqrt();
        let s2 = 0.1 / (HIDDEN as f64).sqrt();
        let mut phi = vec![0.0; PHI_LEN];
        phi[..B1].iter_mut().for_each(|w| *w = rng.gen_range(-s1..s1));
        phi[W2..B2].iter_mut().for_each(|w| *w = rng.gen_range(-s2..s2));
        Self { phi }
    }

    pub fn from_vec(phi: Vec<f64>) -> Result<Self> {
        if phi.len() != PHI_LEN {
            return Err(Error::Contract(format!(
                "phi has {} entries, expected {PHI_LEN}",
                phi.len()
            )));
        }
        Ok(Self { phi })
    }
}

/// Loss value with gradients for both parameter sets.
#[derive(Clone, Debug)]
pub struct FusionGrad<T> {
    pub loss: T,
    pub theta: Vec<T>,
    pub phi: Vec<T>,
}

struct FrameSummary<T> {
    stats: Vec<T>,
    probs: Vec<T>,
    argmax_ray: [usize; NUM_CLASSES],
}

fn softmax_rows<T: Real>(logits: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(logits.len());
    for z in logits.chunks(NUM_CLASSES) {
        let m = z.iter().map(|v| v.value()).fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<T> = z.iter().map(|v| v.add_f64(-m).exp()).collect();
        let mut sum = T::zero();
        for v in &e {
            sum += *v;
        }
        out.extend(e.into_iter().map(|v| v / sum));
    }
    out
}

fn summarize<T: Real>(theta: &[T], feats: &RayFeatures) -> FrameSummary<T> {
    let probs = softmax_rows(&frame_logits(theta, feats));
    let n = feats.n_rays();
    let inv = 1.0 / n as f64;
    let mut stats = vec![T::zero(); FRAME_STATS];
    let mut argmax_ray = [0usize; NUM_CLASSES];
    for c in 0..NUM_CLASSES {
        let mut sum = T::zero();
        for r in 0..n {
            let p = probs[r * NUM_CLASSES + c];
            sum += p;
            if p.value() > probs[argmax_ray[c] * NUM_CLASSES + c].value() {
                argmax_ray[c] = r;
            }
        }
        stats[c] = sum.scale(inv);
        stats[NUM_CLASSES + c] = probs[argmax_ray[c] * NUM_CLASSES + c];
    }
    let base = 2 * NUM_CLASSES;
    for j in 0..FEATURE_DIM {
        let mut sum = 0.0;
        let mut max = f64::NEG_INFINITY;
        for r in 0..n {
            let v = feats.row(r)[j];
            sum += v;
            max = max.max(v);
        }
        stats[base + j] = T::from_f64(sum * inv);
        stats[base + FEATURE_DIM + j] = T::from_f64(max);
    }
    FrameSummary { stats, probs, argmax_ray }
}

/// Loss and gradients for any scalar type. Returns the index of the first
/// frame whose `theta` contribution is non-finite, if any.
fn fusion_eval<T: Real>(theta: &[T], phi: &[T], frames: &[&RayFeatures]) -> (FusionGrad<T>, Option<usize>) {
    assert!(!frames.is_empty(), "sequence needs a target frame");
    let summaries: Vec<FrameSummary<T>> = frames.iter().map(|f| summarize(theta, f)).collect();
    let ctx: &[FrameSummary<T>] = if frames.len() > 1 { &summaries[1..] } else { &summaries[..1] };
    let ctx_w = 1.0 / ctx.len() as f64;

    let mut x = Vec::with_capacity(FUSION_INPUT);
    x.extend_from_slice(&summaries[0].stats);
    for k in 0..FRAME_STATS {
        let mut s = T::zero();
        for f in ctx {
            s += f.stats[k];
        }
        x.push(s.scale(ctx_w));
    }

    let mut h = [T::zero(); HIDDEN];
    for (i, hi) in h.iter_mut().enumerate() {
        let row = &phi[i * FUSION_INPUT..(i + 1) * FUSION_INPUT];
        let mut a = phi[B1 + i];
        for (w, xv) in row.iter().zip(&x) {
            a += *w * *xv;
        }
        *hi = a.tanh();
    }
    let mut o = phi[B2];
    for i in 0..HIDDEN {
        o += phi[W2 + i] * h[i];
    }
    let loss = o.softplus();

    let d_o = o.sigmoid();
    let mut dphi = vec![T::zero(); PHI_LEN];
    let mut dx = [T::zero(); FUSION_INPUT];
    dphi[B2] = d_o;
    for i in 0..HIDDEN {
        dphi[W2 + i] = d_o * h[i];
        let dpre = d_o * phi[W2 + i] * (T::one() - h[i] * h[i]);
        dphi[B1 + i] = dpre;
        let row = i * FUSION_INPUT;
        for k in 0..FUSION_INPUT {
            dphi[row + k] = dpre * x[k];
            dx[k] += dpre * phi[row + k];
        }
    }

    let mut dtheta = vec![T::zero(); THETA_LEN];
    let mut bad_frame = None;
    let ctx_offset = if frames.len() > 1 { 1 } else { 0 };
    for (fi, (feats, summary)) in frames.iter().zip(&summaries).enumerate() {
        // Target stats feed the first half of x; context stats the second.
        let mut dstats = [T::zero(); 2 * NUM_CLASSES];
        if fi == 0 {
            dstats.copy_from_slice(&dx[..2 * NUM_CLASSES]);
        }
        if fi >= ctx_offset {
            for (k, d) in dstats.iter_mut().enumerate() {
                *d += dx[FRAME_STATS + k].scale(ctx_w);
            }
        }
        let n = feats.n_rays();
        let mut dp = vec![T::zero(); n * NUM_CLASSES];
        for c in 0..NUM_CLASSES {
            let dm = dstats[c].scale(1.0 / n as f64);
            for r in 0..n {
                dp[r * NUM_CLASSES + c] = dm;
            }
            dp[summary.argmax_ray[c] * NUM_CLASSES + c] += dstats[NUM_CLASSES + c];
        }
        // Softmax backward per ray: dz = p * (dp - <p, dp>).
        let mut dz = vec![T::zero(); n * NUM_CLASSES];
        for r in 0..n {
            let p = &summary.probs[r * NUM_CLASSES..(r + 1) * NUM_CLASSES];
            let g = &dp[r * NUM_CLASSES..(r + 1) * NUM_CLASSES];
            let mut dot = T::zero();
            for c in 0..NUM_CLASSES {
                dot += p[c] * g[c];
            }
            for c in 0..NUM_CLASSES {
                dz[r * NUM_CLASSES + c] = p[c] * (g[c] - dot);
            }
        }
        let contrib = theta_grad_generic(feats, &dz);
        if bad_frame.is_none() && contrib.iter().any(|v| !v.is_finite()) {
            bad_frame = Some(fi);
        }
        for (a, b) in dtheta.iter_mut().zip(contrib) {
            *a += b;
        }
    }

    (
        FusionGrad {
            loss,
            theta: dtheta,
            phi: dphi,
        },
        bad_frame,
    )
}

fn theta_grad_generic<T: Real>(feats: &RayFeatures, dz: &[T]) -> Vec<T> {
    let mut g = vec![T::zero(); THETA_LEN];
    for r in 0..feats.n_rays() {
        let dzr = &dz[r * NUM_CLASSES..(r + 1) * NUM_CLASSES];
        for (j, &xj) in feats.row(r).iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for c in 0..NUM_CLASSES {
                g[j * NUM_CLASSES + c] += dzr[c].scale(xj);
            }
        }
        for c in 0..NUM_CLASSES {
            g[FEATURE_DIM * NUM_CLASSES + c] += dzr[c];
        }
    }
    g
}

fn check_inputs(theta: &SegModelParams, phi: &FusionParams, frames: &[&RayFeatures]) -> Result<()> {
    if theta.theta.len() != THETA_LEN || phi.phi.len() != PHI_LEN {
        return Err(Error::Contract("parameter vectors have the wrong length".into()));
    }
    if frames.is_empty() {
        return Err(Error::Contract("sequence has no frames".into()));
    }
    // A non-finite feature poisons the pooled input and with it every
    // frame's gradient, so blame the frame it came from.
    if let Some(frame) = frames.iter().position(|f| f.as_slice().iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFiniteGradient { frame });
    }
    Ok(())
}

pub fn fusion_loss(phi: &FusionParams, theta: &SegModelParams, frames: &[&RayFeatures]) -> f64 {
    fusion_eval(&theta.theta, &phi.phi, frames).0.loss
}

pub fn fusion_loss_with_grad(phi: &FusionParams, theta: &SegModelParams, frames: &[&RayFeatures]) -> Result<FusionGrad<f64>> {
    check_inputs(theta, phi, frames)?;
    let (g, bad) = fusion_eval(&theta.theta, &phi.phi, frames);
    if let Some(frame) = bad {
        return Err(Error::NonFiniteGradient { frame });
    }
    if !g.loss.is_finite() || g.phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGradient { frame: 0 });
    }
    Ok(g)
}

/// Directional second derivatives along `v` in theta-space:
/// returns the gradient at `theta`, `H_theta_theta v` and `H_phi_theta v`.
pub fn fusion_hvp(
    phi: &FusionParams,
    theta: &SegModelParams,
    frames: &[&RayFeatures],
    v: &[f64],
) -> Result<(FusionGrad<f64>, Vec<f64>, Vec<f64>)> {
    check_inputs(theta, phi, frames)?;
    let th: Vec<Dual> = theta.theta.iter().zip(v).map(|(&t, &d)| Dual::new(t, d)).collect();
    let ph: Vec<Dual> = phi.phi.iter().map(|&p| Dual::from_f64(p)).collect();
    let (g, bad) = fusion_eval(&th, &ph, frames);
    if let Some(frame) = bad {
        return Err(Error::NonFiniteGradient { frame });
    }
    let plain = FusionGrad {
        loss: g.loss.re,
        theta: g.theta.iter().map(|d| d.re).collect(),
        phi: g.phi.iter().map(|d| d.re).collect(),
    };
    let htt = g.theta.iter().map(|d| d.eps).collect();
    let hpt = g.phi.iter().map(|d| d.eps).collect();
    Ok((plain, htt, hpt))
}

/// One inner step `theta - inner_lr * grad_theta L_fusion`; `theta` is not
/// modified.
pub fn adapt(theta: &SegModelParams, phi: &FusionParams, frames: &[&RayFeatures], inner_lr: f64) -> Result<SegModelParams> {
    let g = fusion_loss_with_grad(phi, theta, frames)?;
    Ok(SegModelParams {
        theta: theta.theta.iter().zip(&g.theta).map(|(t, d)| t - inner_lr * d).collect(),
    })
}

/// Labels of the target frame from the adapted segmenter.
pub fn predict(theta: &SegModelParams, phi: &FusionParams, frames: &[&RayFeatures], inner_lr: f64) -> Result<SemScan> {
    let adapted = adapt(theta, phi, frames, inner_lr)?;
    let logits = seg_forward(&adapted, frames[0])?;
    Ok(SemScan {
        labels: logits.argmax(),
    })
}
