//! Test-time adapted per-ray segmenter.

pub mod checkpoint;
pub mod features;
pub mod fusion;
pub mod meta;
pub mod model;
pub mod real;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use features::{featurize, RayFeatures, FEATURE_DIM};
pub use fusion::{adapt, fusion_loss, fusion_loss_with_grad, predict, FusionParams};
pub use meta::{evaluate_adaptation, AdaptationEval, meta_train, train_single_frame, AdaptConfig, TrainReport, TrainSample};
pub use model::{accuracy, seg_forward, seg_loss, LossWeights, Logits, SegModelParams};
