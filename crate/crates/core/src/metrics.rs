//! Navigation metrics (success, SPL, SoftSPL) and map-quality metrics
//! (Closeness-Sigmoid, IoU, FPR, FNR), plus the results CSV.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::grid::Cell;
use crate::world::{CellClass, Scene, SUCCESS_RADIUS};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeResult {
    pub success: bool,
    /// Meters actually travelled.
    pub path_length: f64,
    /// Shortest geodesic length to the success region; `None` when the goal
    /// is unreachable (or absent).
    pub optimal_length: Option<f64>,
    pub initial_dist: Option<f64>,
    pub final_dist: Option<f64>,
    pub steps: usize,
    pub called_stop: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapEvalResult {
    pub closeness_sigmoid: f64,
    pub iou: f64,
    pub spurious: bool,
    pub missed: bool,
}

/// Success requires calling stop within the success radius of a goal cell.
pub fn judge_success(x: f64, y: f64, scene: &Scene, goal: CellClass, called_stop: bool) -> bool {
    called_stop && scene.distance_to_class(x, y, goal).is_some_and(|d| d <= SUCCESS_RADIUS)
}

/// `S * l / max(p, l)`; `None` for episodes without a valid optimal length.
pub fn spl_term(r: &EpisodeResult) -> Option<f64> {
    let l = r.optimal_length?;
    if !r.success {
        return Some(0.0);
    }
    if l <= 0.0 {
        return Some(1.0);
    }
    Some(l / r.path_length.max(l))
}

/// `max(0, 1 - d_final / d_init) * l / max(p, l)` with geodesic distances.
pub fn softspl_term(r: &EpisodeResult) -> Option<f64> {
    let l = r.optimal_length?;
    let d0 = r.initial_dist?;
    let d1 = r.final_dist?;
    let progress = if d0 > 0.0 { (1.0 - d1 / d0).max(0.0) } else { 1.0 };
    let eff = if l > 0.0 { l / r.path_length.max(l) } else { 1.0 };
    Some(progress * eff)
}

/// Mean of a term over episodes where it is defined, and the number of
/// episodes excluded.
pub fn mean_defined(results: &[EpisodeResult], term: impl Fn(&EpisodeResult) -> Option<f64>) -> (f64, usize) {
    let vals: Vec<f64> = results.iter().filter_map(&term).collect();
    let excluded = results.len() - vals.len();
    let mean = if vals.is_empty() { 0.0 } else { vals.iter().sum::<f64>() / vals.len() as f64 };
    (mean, excluded)
}

pub fn spl(results: &[EpisodeResult]) -> (f64, usize) {
    mean_defined(results, spl_term)
}

pub fn softspl(results: &[EpisodeResult]) -> (f64, usize) {
    mean_defined(results, softspl_term)
}

pub fn success_rate(results: &[EpisodeResult]) -> f64 {
    results.iter().filter(|r| r.success).count() as f64 / results.len().max(1) as f64
}

/// `2 sigma(d) - 1` where `d` is the mean distance in meters from each
/// predicted cell to its nearest ground-truth cell. An empty prediction, or
/// a prediction with nothing to match, scores 1.
pub fn closeness_sigmoid(pred: &[Cell], gt: &[Cell], resolution: f64) -> f64 {
    if pred.is_empty() || gt.is_empty() {
        return 1.0;
    }
    let total: f64 = pred
        .iter()
        .map(|p| gt.iter().map(|g| p.euclid(*g)).fold(f64::INFINITY, f64::min))
        .sum();
    let d = total / pred.len() as f64 * resolution;
    2.0 / (1.0 + (-d).exp()) - 1.0
}

pub fn map_iou(pred: &[Cell], gt: &[Cell]) -> f64 {
    let p: BTreeSet<Cell> = pred.iter().copied().collect();
    let g: BTreeSet<Cell> = gt.iter().copied().collect();
    let union = p.union(&g).count();
    if union == 0 {
        return 1.0;
    }
    p.intersection(&g).count() as f64 / union as f64
}

pub fn eval_map(pred: &[Cell], gt: &[Cell], resolution: f64) -> MapEvalResult {
    MapEvalResult {
        closeness_sigmoid: closeness_sigmoid(pred, gt, resolution),
        iou: map_iou(pred, gt),
        spurious: !pred.is_empty() && gt.is_empty(),
        missed: pred.is_empty() && !gt.is_empty(),
    }
}

/// `(fpr, fnr)`: shares of episodes flagged spurious and missed.
pub fn fpr_fnr(evals: &[MapEvalResult]) -> (f64, f64) {
    let n = evals.len().max(1) as f64;
    (
        evals.iter().filter(|e| e.spurious).count() as f64 / n,
        evals.iter().filter(|e| e.missed).count() as f64 / n,
    )
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub episode: String,
    pub scene: String,
    pub goal: CellClass,
    pub nav: EpisodeResult,
    pub map: MapEvalResult,
}

pub const CSV_HEADER: &str =
    "episode,scene,goal,success,spl_term,softspl_term,steps,path_len,optimal_len,closeness,iou,spurious,missed";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.6}"))
}

fn flag(b: bool) -> u8 {
    u8::from(b)
}

/// Rows followed by an `AGGREGATE` row of column means; undefined terms are
/// left blank and skipped by the means.
pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{:.6},{},{:.6},{:.6},{},{}",
            r.episode,
            r.scene,
            r.goal,
            flag(r.nav.success),
            opt(spl_term(&r.nav)),
            opt(softspl_term(&r.nav)),
            r.nav.steps,
            r.nav.path_length,
            opt(r.nav.optimal_length),
            r.map.closeness_sigmoid,
            r.map.iou,
            flag(r.map.spurious),
            flag(r.map.missed),
        );
    }
    let nav: Vec<EpisodeResult> = rows.iter().map(|r| r.nav).collect();
    let maps: Vec<MapEvalResult> = rows.iter().map(|r| r.map).collect();
    let n = rows.len().max(1) as f64;
    let mean = |f: &dyn Fn(&ResultRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let (fpr, fnr) = fpr_fnr(&maps);
    let (opt_mean, _) = mean_defined(&nav, |r| r.optimal_length);
    let _ = writeln!(
        s,
        "AGGREGATE,,,{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
        success_rate(&nav),
        spl(&nav).0,
        softspl(&nav).0,
        mean(&|r| r.nav.steps as f64),
        mean(&|r| r.nav.path_length),
        opt_mean,
        mean(&|r| r.map.closeness_sigmoid),
        mean(&|r| r.map.iou),
        fpr,
        fnr,
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::load_scene;

    fn ep(success: bool, p: f64, l: f64) -> EpisodeResult {
        EpisodeResult {
            success,
            path_length: p,
            optimal_length: Some(l),
            initial_dist: Some(l),
            final_dist: Some(if success { 0.0 } else { l }),
            steps: 10,
            called_stop: success,
        }
    }

    #[test]
    fn spl_terms() {
        assert_eq!(spl_term(&ep(true, 3.0, 3.0)), Some(1.0));
        assert_eq!(spl_term(&ep(true, 6.0, 3.0)), Some(0.5));
        assert_eq!(spl_term(&ep(false, 3.0, 3.0)), Some(0.0));
        let mut unreachable = ep(true, 1.0, 1.0);
        unreachable.optimal_length = None;
        let (v, excluded) = spl(&[ep(true, 2.0, 2.0), unreachable]);
        assert_eq!((v, excluded), (1.0, 1));
    }

    #[test]
    fn softspl_terms() {
        let mut e = ep(false, 4.0, 4.0);
        assert_eq!(softspl_term(&e), Some(0.0));
        e.final_dist = Some(2.0);
        assert_eq!(softspl_term(&e), Some(0.5));
        assert_eq!(softspl_term(&ep(true, 4.0, 4.0)), Some(1.0));
    }

    #[test]
    fn success_needs_stop_within_radius() {
        let s = load_scene("30 3 0.1\n##############################\n#...........................c#\n##############################\n").unwrap();
        let (gx, gy) = s.center_of(Cell::new(1, 28));
        assert!(judge_success(gx - 0.9, gy, &s, CellClass::Chair, true));
        assert!(!judge_success(gx - 1.2, gy, &s, CellClass::Chair, true));
        assert!(!judge_success(gx - 0.5, gy, &s, CellClass::Chair, false));
    }

    #[test]
    fn closeness_values() {
        let cells = vec![Cell::new(1, 1), Cell::new(4, 2)];
        assert_eq!(closeness_sigmoid(&cells, &cells, 0.05), 0.0);
        assert_eq!(closeness_sigmoid(&[], &cells, 0.05), 1.0);
        let v = closeness_sigmoid(&[Cell::new(0, 0)], &[Cell::new(0, 20)], 0.05);
        assert!((v - 0.462117).abs() < 1e-6, "{v}");
    }

    #[test]
    fn closeness_grows_as_prediction_moves_away() {
        let gt: Vec<Cell> = (0..5).map(|c| Cell::new(0, c)).collect();
        let mut last = 0.0;
        for shift in 0..30 {
            let pred: Vec<Cell> = (0..5).map(|c| Cell::new(shift, c)).collect();
            let v = closeness_sigmoid(&pred, &gt, 0.05);
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn iou_values() {
        let a = vec![Cell::new(0, 0), Cell::new(0, 1)];
        assert_eq!(map_iou(&a, &a), 1.0);
        assert_eq!(map_iou(&a, &[Cell::new(5, 5)]), 0.0);
        assert_eq!(map_iou(&[], &[]), 1.0);
        let p = vec![Cell::new(0, 0), Cell::new(0, 1), Cell::new(0, 2)];
        let g = vec![Cell::new(0, 1), Cell::new(0, 2), Cell::new(0, 3), Cell::new(0, 4), Cell::new(0, 5)];
        assert!((map_iou(&p, &g) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn fpr_fnr_counting() {
        let clean = eval_map(&[], &[], 0.05);
        assert!(!clean.spurious && !clean.missed);
        let spurious = eval_map(&[Cell::new(0, 0)], &[], 0.05);
        let mut evals = vec![clean; 9];
        evals.push(spurious);
        assert_eq!(fpr_fnr(&evals), (0.1, 0.0));
        assert!(eval_map(&[], &[Cell::new(0, 0)], 0.05).missed);
    }

    #[test]
    fn csv_has_rows_and_aggregate() {
        let map = eval_map(&[], &[], 0.05);
        let rows: Vec<ResultRow> = (0..3)
            .map(|i| ResultRow {
                episode: format!("{i}"),
                scene: "s.txt".into(),
                goal: CellClass::Tv,
                nav: ep(i != 1, 2.0, 2.0),
                map,
            })
            .collect();
        let csv = results_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(lines[4].starts_with("AGGREGATE,,,0.666667,0.666667"));
    }
}
