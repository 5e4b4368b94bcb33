//! Refiner training: a single-frame baseline, then meta-training from it.

use rand::Rng;

use crate::error::Result;
use crate::refiner::{meta_train, train_single_frame, AdaptConfig, Checkpoint, FusionParams, SegModelParams, TrainReport, TrainSample};

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    /// Segmenter trained on target frames only, never adapted.
    pub baseline: SegModelParams,
    pub baseline_report: TrainReport,
    pub meta_report: TrainReport,
}

pub fn train_refiner<R: Rng + ?Sized>(data: &[TrainSample], cfg: &AdaptConfig, rng: &mut R) -> Result<TrainOutcome> {
    let (baseline, baseline_report) = train_single_frame(data, SegModelParams::zeros(), cfg, rng)?;
    let phi = FusionParams::init(rng);
    let (theta, phi, meta_report) = meta_train(data, (baseline.clone(), phi), cfg, rng)?;
    Ok(TrainOutcome {
        checkpoint: Checkpoint { theta, phi },
        baseline,
        baseline_report,
        meta_report,
    })
}
