//! Backward and forward frame sequences: which target frame each push
//! releases, and which context frames come with it.

use navsim::framebuf::{BufferMode, FrameBuffer, FrameRecord};
use navsim::sensors::{DepthScan, SemScan};
use navsim::world::{CellClass, Pose};

fn frame(step: usize) -> FrameRecord {
    let depth = DepthScan {
        ranges: vec![2.0; 4],
        fov: 79.0,
        max_range: 5.0,
    };
    let sem = SemScan {
        labels: vec![CellClass::Wall; 4],
    };
    FrameRecord::new(step, Pose::new(0.0, 0.0, 0.0), depth, sem)
}

fn main() -> navsim::Result<()> {
    for mode in [BufferMode::backward(2), BufferMode::forward(2)] {
        println!("{:?} n={}", mode.order, mode.n);
        let mut buf = FrameBuffer::new(mode);
        for t in 0..6 {
            match buf.push(frame(t))? {
                Some(seq) => println!("  push {t}: target {} frames {:?}", seq.target_step, seq.steps()),
                None => println!("  push {t}: waiting"),
            }
        }
    }
    Ok(())
}
