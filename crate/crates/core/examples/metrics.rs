//! Navigation and map metrics on hand-made results.

use navsim::grid::Cell;
use navsim::metrics::{eval_map, softspl, spl, success_rate, EpisodeResult};

fn main() {
    let results = [
        EpisodeResult { success: true, path_length: 4.0, optimal_length: Some(4.0), initial_dist: Some(4.0), final_dist: Some(0.5), steps: 20, called_stop: true },
        EpisodeResult { success: true, path_length: 8.0, optimal_length: Some(4.0), initial_dist: Some(4.0), final_dist: Some(0.6), steps: 40, called_stop: true },
        EpisodeResult { success: false, path_length: 6.0, optimal_length: Some(5.0), initial_dist: Some(5.0), final_dist: Some(2.5), steps: 500, called_stop: false },
        EpisodeResult { success: false, path_length: 3.0, optimal_length: None, initial_dist: None, final_dist: None, steps: 500, called_stop: false },
    ];
    let (s, excluded) = spl(&results);
    let (soft, _) = softspl(&results);
    println!("success {:.3}  SPL {s:.3}  SoftSPL {soft:.3}  ({excluded} without an optimal path)", success_rate(&results));

    let gt: Vec<Cell> = (10..14).flat_map(|r| (20..24).map(move |c| Cell::new(r, c))).collect();
    let shifted: Vec<Cell> = gt.iter().map(|c| Cell::new(c.row + 2, c.col)).collect();
    for (name, pred) in [("exact", gt.clone()), ("shifted", shifted), ("empty", Vec::new())] {
        let m = eval_map(&pred, &gt, 0.05);
        println!("{name:>8}: closeness {:.3} iou {:.3} spurious {} missed {}", m.closeness_sigmoid, m.iou, m.spurious, m.missed);
    }
}
