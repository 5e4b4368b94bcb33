//! Frontier detection and the area + object potential used to rank them.

use std::collections::VecDeque;

use crate::grid::{Cell, Grid};
use crate::semmap::GlobalSemMap;
use crate::world::CellClass;

use super::planner::CostGrid;

#[derive(Clone, Debug, PartialEq)]
pub struct Frontier {
    /// Sorted by (row, col).
    pub cells: Vec<Cell>,
    /// Member cell nearest the mean position.
    pub centroid: Cell,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialScore {
    pub area: f64,
    pub object: f64,
    pub total: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoringParams {
    pub min_frontier_size: usize,
    /// Meters.
    pub area_radius: f64,
    pub w_area: f64,
    pub w_obj: f64,
}

impl Default for ScoringParams {
    fn default() -> Self {
        Self {
            min_frontier_size: 3,
            area_radius: 2.0,
            w_area: 1.0,
            w_obj: 2.0,
        }
    }
}

fn is_frontier(map: &GlobalSemMap, c: Cell) -> bool {
    map.is_explored(c) && !map.is_obstacle(c) && c.neighbors4().iter().any(|n| !map.is_explored(*n))
}

/// 8-connected groups of explored free cells with an unexplored
/// 4-neighbour, ordered by their first cell. Groups below `min_size` are
/// dropped. (Under 4-connected grouping the sides of an unexplored pocket
/// would split apart at its corners.)
pub fn detect_frontiers(map: &GlobalSemMap, min_size: usize) -> Vec<Frontier> {
    let (w, h) = (map.width(), map.height());
    let mut seen = Grid::filled(w, h, false);
    let mut out = Vec::new();
    for start in map.explored().cells() {
        if seen[start] || !is_frontier(map, start) {
            continue;
        }
        seen[start] = true;
        let mut cells = Vec::new();
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            cells.push(c);
            for (n, _) in c.neighbors8() {
                if map.contains(n) && !seen[n] && is_frontier(map, n) {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        if cells.len() < min_size {
            continue;
        }
        cells.sort();
        let (sr, sc) = cells.iter().fold((0.0, 0.0), |(r, c), x| (r + x.row as f64, c + x.col as f64));
        let (mr, mc) = (sr / cells.len() as f64, sc / cells.len() as f64);
        let d = |x: &Cell| (x.row as f64 - mr).hypot(x.col as f64 - mc);
        let centroid = *cells
            .iter()
            .min_by(|a, b| d(a).total_cmp(&d(b)).then_with(|| a.cmp(b)))
            .expect("non-empty");
        out.push(Frontier { cells, centroid });
    }
    out
}

/// Share of the disc of `radius_cells` around `c` that is unexplored; cells
/// beyond the map count as unexplored.
fn unexplored_share(map: &GlobalSemMap, c: Cell, radius_cells: f64) -> f64 {
    let k = radius_cells.floor() as i32;
    let mut total = 0usize;
    let mut unexplored = 0usize;
    for dr in -k..=k {
        for dc in -k..=k {
            if ((dr * dr + dc * dc) as f64).sqrt() > radius_cells {
                continue;
            }
            total += 1;
            if !map.is_explored(Cell::new(c.row + dr, c.col + dc)) {
                unexplored += 1;
            }
        }
    }
    unexplored as f64 / total.max(1) as f64
}

/// Scores frontiers and sorts them best first; ties go to the smaller
/// centroid (row, col). Object evidence is goal-channel mass that has not
/// yet crossed the detection threshold.
pub fn score_frontiers(
    map: &GlobalSemMap,
    costs: &CostGrid,
    frontiers: Vec<Frontier>,
    goal: CellClass,
    threshold: f64,
    params: &ScoringParams,
) -> Vec<(Frontier, PotentialScore)> {
    let g = map.class_grid(goal);
    let evidence: Vec<Cell> = g.cells().filter(|c| g[*c] > 0.0 && g[*c] <= threshold).collect();
    let field = (!evidence.is_empty()).then(|| costs.distance_field(&evidence));
    let radius_cells = params.area_radius / map.frame().resolution;
    let mut scored: Vec<(Frontier, PotentialScore)> = frontiers
        .into_iter()
        .map(|f| {
            let area = unexplored_share(map, f.centroid, radius_cells);
            let object = field
                .as_ref()
                .map(|d| d[f.centroid])
                .filter(|d| d.is_finite())
                .map_or(0.0, |d| 1.0 / (1.0 + d));
            let total = params.w_area * area + params.w_obj * object;
            (f, PotentialScore { area, object, total })
        })
        .collect();
    scored.sort_by(|a, b| {
        b.1.total
            .total_cmp(&a.1.total)
            .then_with(|| a.0.centroid.cmp(&b.0.centroid))
    });
    scored
}
