//! Navigation image-sequence buffer with backward and forward ordering.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::refiner::RayFeatures;
use crate::sensors::{DepthScan, SemScan};
use crate::world::Pose;

#[derive(Clone, Debug, PartialEq)]
pub struct FrameRecord {
    pub step: usize,
    pub pose: Pose,
    pub depth: DepthScan,
    pub raw_sem: SemScan,
    pub features: RayFeatures,
}

impl FrameRecord {
    pub fn new(step: usize, pose: Pose, depth: DepthScan, raw_sem: SemScan) -> Self {
        let features = crate::refiner::featurize(&depth, &raw_sem);
        Self {
            step,
            pose,
            depth,
            raw_sem,
            features,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SequenceOrder {
    Backward,
    Forward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BufferMode {
    pub order: SequenceOrder,
    pub n: usize,
}

impl BufferMode {
    pub fn new(order: SequenceOrder, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Contract("buffer needs at least one additional frame".into()));
        }
        Ok(Self { order, n })
    }

    pub fn backward(n: usize) -> Self {
        Self::new(SequenceOrder::Backward, n).expect("n >= 1")
    }

    pub fn forward(n: usize) -> Self {
        Self::new(SequenceOrder::Forward, n).expect("n >= 1")
    }
}

/// `frames[0]` is the target frame; the rest are context in sequence order.
#[derive(Clone, Debug)]
pub struct ReadySequence {
    pub target_step: usize,
    pub frames: Vec<Arc<FrameRecord>>,
}

impl ReadySequence {
    pub fn target(&self) -> &FrameRecord {
        &self.frames[0]
    }

    pub fn features(&self) -> Vec<&RayFeatures> {
        self.frames.iter().map(|f| &f.features).collect()
    }

    pub fn steps(&self) -> Vec<usize> {
        self.frames.iter().map(|f| f.step).collect()
    }
}

#[derive(Clone, Debug)]
pub struct FrameBuffer {
    mode: BufferMode,
    frames: VecDeque<Arc<FrameRecord>>,
}

impl FrameBuffer {
    pub fn new(mode: BufferMode) -> Self {
        Self {
            mode,
            frames: VecDeque::with_capacity(mode.n + 1),
        }
    }

    pub fn mode(&self) -> BufferMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn push(&mut self, frame: FrameRecord) -> Result<Option<ReadySequence>> {
        if let Some(last) = self.frames.back() {
            if frame.step != last.step + 1 {
                return Err(Error::Contract(format!(
                    "frame step {} does not follow {}",
                    frame.step, last.step
                )));
            }
        }
        self.frames.push_back(Arc::new(frame));
        if self.frames.len() > self.mode.n + 1 {
            self.frames.pop_front();
        }
        let n = self.mode.n;
        Ok(match self.mode.order {
            SequenceOrder::Backward => {
                let mut frames: Vec<_> = self.frames.iter().rev().cloned().collect();
                let earliest = frames.last().cloned().expect("non-empty");
                frames.resize(n + 1, earliest);
                Some(ReadySequence {
                    target_step: frames[0].step,
                    frames,
                })
            }
            SequenceOrder::Forward if self.frames.len() == n + 1 => {
                let frames: Vec<_> = self.frames.iter().cloned().collect();
                Some(ReadySequence {
                    target_step: frames[0].step,
                    frames,
                })
            }
            SequenceOrder::Forward => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::CellClass;

    fn frame(step: usize) -> FrameRecord {
        let depth = DepthScan {
            ranges: vec![1.0 + step as f64 * 0.01; 4],
            fov: 79.0,
            max_range: 5.0,
        };
        let sem = SemScan {
            labels: vec![CellClass::Wall; 4],
        };
        FrameRecord::new(step, Pose::new(0.0, 0.0, 0.0), depth, sem)
    }

    #[test]
    fn backward_pads_first_frame() {
        let mut b = FrameBuffer::new(BufferMode::backward(1));
        let s = b.push(frame(0)).unwrap().unwrap();
        assert_eq!(s.target_step, 0);
        assert_eq!(s.steps(), vec![0, 0]);
    }

    #[test]
    fn backward_orders_newest_first() {
        let mut b = FrameBuffer::new(BufferMode::backward(2));
        for i in 0..5 {
            b.push(frame(i)).unwrap();
        }
        let s = b.push(frame(5)).unwrap().unwrap();
        assert_eq!(s.steps(), vec![5, 4, 3]);
        assert_eq!(s.target_step, 5);
        assert_eq!(b.len(), 3);
    }

    #[test]
    fn forward_lags_by_n() {
        let mut b = FrameBuffer::new(BufferMode::forward(2));
        assert!(b.push(frame(0)).unwrap().is_none());
        assert!(b.push(frame(1)).unwrap().is_none());
        let s = b.push(frame(2)).unwrap().unwrap();
        assert_eq!(s.steps(), vec![0, 1, 2]);
        assert_eq!(s.target_step, 0);
        let targets: Vec<_> = (3..10).map(|i| b.push(frame(i)).unwrap().unwrap().target_step).collect();
        assert_eq!(targets, (1..8).collect::<Vec<_>>());
        assert!(b.len() <= 3);
    }

    #[test]
    fn non_consecutive_step_is_rejected() {
        let mut b = FrameBuffer::new(BufferMode::backward(1));
        b.push(frame(0)).unwrap();
        assert!(matches!(b.push(frame(2)), Err(Error::Contract(_))));
        assert!(BufferMode::new(SequenceOrder::Forward, 0).is_err());
    }
}
