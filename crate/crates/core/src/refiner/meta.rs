//! Meta-training of the segmenter and fusion network, the single-frame
//! baseline, and held-out evaluation.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::world::CellClass;

use super::features::RayFeatures;
use super::fusion::{adapt, fusion_hvp, FusionParams, PHI_LEN};
use super::model::{
    accuracy, seg_forward, seg_loss, seg_loss_with_grad, theta_grad_from_logits, LossWeights, SegModelParams, THETA_LEN,
};

/// One training sequence: `frames[0]` is the target, `gt` its labels.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSample {
    pub frames: Vec<RayFeatures>,
    pub gt: Vec<CellClass>,
}

impl TrainSample {
    pub fn frame_refs(&self) -> Vec<&RayFeatures> {
        self.frames.iter().collect()
    }

    pub fn target(&self) -> &RayFeatures {
        &self.frames[0]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptConfig {
    pub inner_lr: f64,
    pub weights: LossWeights,
    pub outer_lr: f64,
    pub meta_epochs: usize,
    pub batch_size: usize,
    pub second_order: bool,
    /// Share of the dataset held out to pick the best epoch.
    pub val_fraction: f64,
    /// Schedule of the single-frame baseline (`train_single_frame`).
    pub pretrain_lr: f64,
    pub pretrain_epochs: usize,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            inner_lr: 1.0,
            weights: LossWeights::default(),
            outer_lr: 0.003,
            meta_epochs: 30,
            batch_size: 16,
            second_order: false,
            val_fraction: 0.2,
            pretrain_lr: 0.03,
            pretrain_epochs: 80,
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        let w = self.weights;
        if !(self.inner_lr > 0.0) {
            return Err(Error::Config("inner_lr must be positive".into()));
        }
        if !(self.outer_lr > 0.0) {
            return Err(Error::Config("outer_lr must be positive".into()));
        }
        if !(self.pretrain_lr > 0.0) {
            return Err(Error::Config("pretrain_lr must be positive".into()));
        }
        if w.cls < 0.0 || w.bce < 0.0 || w.dice < 0.0 {
            return Err(Error::Config("loss weights must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config("val_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    /// Mean training loss per epoch.
    pub train_loss: Vec<f64>,
    /// Validation loss before training, then after each epoch.
    pub val_loss: Vec<f64>,
    /// 0 means the initial parameters were kept.
    pub best_epoch: usize,
}

impl TrainReport {
    pub fn initial_val_loss(&self) -> f64 {
        self.val_loss[0]
    }

    pub fn best_val_loss(&self) -> f64 {
        self.val_loss[self.best_epoch]
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(len: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * grad[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + Self::EPS);
        }
    }
}

/// Train/validation split over groups of consecutive samples that share a
/// target frame, so sequences from one viewpoint never straddle the split.
fn split<R: Rng + ?Sized>(data: &[TrainSample], val_fraction: f64, rng: &mut R) -> (Vec<usize>, Vec<usize>) {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, s) in data.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if data[g[0]].frames[0] == s.frames[0] && data[g[0]].gt == s.gt => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups.shuffle(rng);
    let n = data.len();
    let target = ((n as f64 * val_fraction).round() as usize).min(n.saturating_sub(1));
    let mut val = Vec::new();
    let mut train = Vec::new();
    for g in groups {
        if val.len() < target && val.len() + g.len() < n {
            val.extend(g);
        } else {
            train.extend(g);
        }
    }
    if val.is_empty() || train.is_empty() {
        let all: Vec<usize> = (0..n).collect();
        return (all.clone(), all);
    }
    (train, val)
}

/// Loss after adaptation on one sample.
pub fn adapted_loss(theta: &SegModelParams, phi: &FusionParams, s: &TrainSample, cfg: &AdaptConfig) -> Result<f64> {
    let adapted = adapt(theta, phi, &s.frame_refs(), cfg.inner_lr)?;
    Ok(seg_loss(&seg_forward(&adapted, s.target())?, &s.gt, &cfg.weights))
}

/// Outer loss and its gradient for one sample, concatenated `[theta, phi]`.
fn outer_grad(theta: &SegModelParams, phi: &FusionParams, s: &TrainSample, cfg: &AdaptConfig) -> Result<(f64, Vec<f64>)> {
    let frames = s.frame_refs();
    let adapted = adapt(theta, phi, &frames, cfg.inner_lr)?;
    let logits = seg_forward(&adapted, s.target())?;
    let (loss, dlogits) = seg_loss_with_grad(&logits, &s.gt, &cfg.weights);
    let v = theta_grad_from_logits(s.target(), &dlogits);
    let (_, htt, hpt) = fusion_hvp(phi, theta, &frames, &v)?;
    let mut g = Vec::with_capacity(THETA_LEN + PHI_LEN);
    if cfg.second_order {
        g.extend(v.iter().zip(&htt).map(|(a, b)| a - cfg.inner_lr * b));
    } else {
        g.extend_from_slice(&v);
    }
    g.extend(hpt.iter().map(|h| -cfg.inner_lr * h));
    Ok((loss, g))
}

fn mean_loss(f: impl Fn(&TrainSample) -> Result<f64> + Sync, data: &[TrainSample], idx: &[usize]) -> Result<f64> {
    let losses: Vec<f64> = idx.par_iter().map(|&i| f(&data[i])).collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}

fn batch_gradient(
    f: impl Fn(&TrainSample) -> Result<(f64, Vec<f64>)> + Sync,
    data: &[TrainSample],
    batch: &[usize],
    len: usize,
) -> Result<(f64, Vec<f64>)> {
    let parts: Vec<(f64, Vec<f64>)> = batch.par_iter().map(|&i| f(&data[i])).collect::<Result<_>>()?;
    let mut g = vec![0.0; len];
    let mut loss = 0.0;
    // Summed in batch order so the result does not depend on thread timing.
    for (l, pg) in &parts {
        loss += l;
        g.iter_mut().zip(pg).for_each(|(a, b)| *a += b);
    }
    let k = 1.0 / parts.len() as f64;
    g.iter_mut().for_each(|v| *v *= k);
    Ok((loss * k, g))
}

/// Jointly optimizes `theta` and `phi` on the post-adaptation segmentation
/// loss, starting from the given parameters. Returns the parameters with the
/// lowest validation loss seen, including the starting point.
pub fn meta_train<R: Rng + ?Sized>(
    data: &[TrainSample],
    init: (SegModelParams, FusionParams),
    cfg: &AdaptConfig,
    rng: &mut R,
) -> Result<(SegModelParams, FusionParams, TrainReport)> {
    if data.is_empty() {
        return Err(Error::Contract("meta_train needs at least one sample".into()));
    }
    cfg.validate()?;
    let (train, val) = split(data, cfg.val_fraction, rng);
    let (mut theta, mut phi) = init;
    let mut params: Vec<f64> = theta.theta.iter().chain(&phi.phi).copied().collect();
    let mut adam = Adam::new(params.len(), cfg.outer_lr);

    let unpack = |p: &[f64]| {
        (
            SegModelParams { theta: p[..THETA_LEN].to_vec() },
            FusionParams { phi: p[THETA_LEN..].to_vec() },
        )
    };

    let mut report = TrainReport::default();
    let v0 = mean_loss(|s| adapted_loss(&theta, &phi, s, cfg), data, &val)?;
    if !v0.is_finite() {
        return Err(Error::Diverged { epoch: 0 });
    }
    report.val_loss.push(v0);
    let mut best = (v0, params.clone());

    let mut order = train.clone();
    for epoch in 1..=cfg.meta_epochs {
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, g) = batch_gradient(|s| outer_grad(&theta, &phi, s, cfg), data, batch, params.len())?;
            if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::Diverged { epoch });
            }
            epoch_loss += loss * batch.len() as f64;
            adam.step(&mut params, &g);
            (theta, phi) = unpack(&params);
        }
        report.train_loss.push(epoch_loss / order.len() as f64);
        let vl = mean_loss(|s| adapted_loss(&theta, &phi, s, cfg), data, &val)?;
        if !vl.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        report.val_loss.push(vl);
        if vl < best.0 {
            best = (vl, params.clone());
            report.best_epoch = epoch;
        }
    }
    let (theta, phi) = unpack(&best.1);
    Ok((theta, phi, report))
}

/// Plain supervised training of the segmenter on target frames alone; the
/// non-adapted baseline and the starting point for meta-training.
pub fn train_single_frame<R: Rng + ?Sized>(
    data: &[TrainSample],
    init: SegModelParams,
    cfg: &AdaptConfig,
    rng: &mut R,
) -> Result<(SegModelParams, TrainReport)> {
    if data.is_empty() {
        return Err(Error::Contract("training needs at least one sample".into()));
    }
    cfg.validate()?;
    let (train, val) = split(data, cfg.val_fraction, rng);
    let plain_loss = |theta: &SegModelParams, s: &TrainSample| -> Result<f64> {
        Ok(seg_loss(&seg_forward(theta, s.target())?, &s.gt, &cfg.weights))
    };
    let grad = |theta: &SegModelParams, s: &TrainSample| -> Result<(f64, Vec<f64>)> {
        let (l, dz) = seg_loss_with_grad(&seg_forward(theta, s.target())?, &s.gt, &cfg.weights);
        Ok((l, theta_grad_from_logits(s.target(), &dz)))
    };

    let mut theta = init;
    let mut adam = Adam::new(THETA_LEN, cfg.pretrain_lr);
    let mut report = TrainReport::default();
    let v0 = mean_loss(|s| plain_loss(&theta, s), data, &val)?;
    report.val_loss.push(v0);
    let mut best = (v0, theta.clone());
    let mut order = train.clone();
    for epoch in 1..=cfg.pretrain_epochs {
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, g) = batch_gradient(|s| grad(&theta, s), data, batch, THETA_LEN)?;
            if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::Diverged { epoch });
            }
            epoch_loss += loss * batch.len() as f64;
            adam.step(&mut theta.theta, &g);
        }
        report.train_loss.push(epoch_loss / order.len() as f64);
        let vl = mean_loss(|s| plain_loss(&theta, s), data, &val)?;
        if !vl.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        report.val_loss.push(vl);
        if vl < best.0 {
            best = (vl, theta.clone());
            report.best_epoch = epoch;
        }
    }
    Ok((best.1, report))
}

/// Per-sample comparison of the non-adapted baseline, the meta-trained
/// segmenter before adaptation, and after adaptation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdaptationEval {
    pub baseline_loss: Vec<f64>,
    pub pre_loss: Vec<f64>,
    pub adapted_loss: Vec<f64>,
    pub baseline_acc: Vec<f64>,
    pub adapted_acc: Vec<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn share(a: &[f64], b: &[f64], pred: impl Fn(f64, f64) -> bool) -> f64 {
    a.iter().zip(b).filter(|(x, y)| pred(**x, **y)).count() as f64 / a.len().max(1) as f64
}

impl AdaptationEval {
    pub fn mean_baseline_acc(&self) -> f64 {
        mean(&self.baseline_acc)
    }

    pub fn mean_adapted_acc(&self) -> f64 {
        mean(&self.adapted_acc)
    }

    /// Share of samples where adaptation lowered the loss of the same
    /// parameters.
    pub fn share_improved_over_pre(&self) -> f64 {
        share(&self.adapted_loss, &self.pre_loss, |a, p| a < p)
    }

    pub fn share_improved_over_baseline(&self) -> f64 {
        share(&self.adapted_loss, &self.baseline_loss, |a, b| a < b)
    }
}

pub fn evaluate_adaptation(
    baseline: &SegModelParams,
    theta: &SegModelParams,
    phi: &FusionParams,
    data: &[TrainSample],
    cfg: &AdaptConfig,
) -> Result<AdaptationEval> {
    let rows: Vec<[f64; 5]> = data
        .par_iter()
        .map(|s| -> Result<[f64; 5]> {
            let base = seg_forward(baseline, s.target())?;
            let pre = seg_forward(theta, s.target())?;
            let adapted = adapt(theta, phi, &s.frame_refs(), cfg.inner_lr)?;
            let post = seg_forward(&adapted, s.target())?;
            Ok([
                seg_loss(&base, &s.gt, &cfg.weights),
                seg_loss(&pre, &s.gt, &cfg.weights),
                seg_loss(&post, &s.gt, &cfg.weights),
                accuracy(&base, &s.gt),
                accuracy(&post, &s.gt),
            ])
        })
        .collect::<Result<_>>()?;
    let col = |k: usize| rows.iter().map(|r| r[k]).collect();
    Ok(AdaptationEval {
        baseline_loss: col(0),
        pre_loss: col(1),
        adapted_loss: col(2),
        baseline_acc: col(3),
        adapted_acc: col(4),
    })
}
