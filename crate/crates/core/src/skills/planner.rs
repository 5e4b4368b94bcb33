//! A* and Dijkstra over the explored/obstacle layers of the global map.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::grid::{Cell, Grid};
use crate::semmap::GlobalSemMap;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanParams {
    /// Cells within this Chebyshev distance of an obstacle are blocked.
    pub inflation: usize,
    /// Cost multiplier for stepping through unexplored cells.
    pub unexplored_cost: f64,
    /// Cells within this Chebyshev distance of an obstacle (beyond the
    /// inflation) pay an extra cost that fades with distance.
    pub clearance: usize,
    /// Extra multiplier just outside the inflated band.
    pub clearance_cost: f64,
}

impl Default for PlanParams {
    fn default() -> Self {
        Self {
            inflation: 1,
            unexplored_cost: 1.5,
            clearance: 5,
            clearance_cost: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerPath {
    pub cells: Vec<Cell>,
    /// Geometric length in meters.
    pub length: f64,
    /// Planning cost in cell units, including unexplored penalties.
    pub cost: f64,
}

/// Planning view of a map: raw obstacles, inflated blocking and per-cell
/// cost multipliers.
#[derive(Clone, Debug)]
pub struct CostGrid {
    obstacle: Grid<bool>,
    blocked: Grid<bool>,
    mult: Grid<f64>,
    resolution: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct Item {
    f: f64,
    g: f64,
    cell: Cell,
}

impl Eq for Item {}

impl Ord for Item {
    // Min-heap on f, then on g descending (deeper first), then (row, col).
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&o.g))
            .then_with(|| o.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl CostGrid {
    pub fn from_map(map: &GlobalSemMap, params: &PlanParams) -> Self {
        Self::from_layers(map.obstacle().clone(), map.explored(), map.frame().resolution, params)
    }

    pub fn from_layers(obstacle: Grid<bool>, explored: &Grid<bool>, resolution: f64, params: &PlanParams) -> Self {
        let (w, h) = (obstacle.width(), obstacle.height());
        let mut blocked = obstacle.clone();
        let k = params.inflation as i32;
        if k > 0 {
            for c in obstacle.cells().filter(|c| obstacle[*c]) {
                for dr in -k..=k {
                    for dc in -k..=k {
                        if let Some(b) = blocked.get_mut(Cell::new(c.row + dr, c.col + dc)) {
                            *b = true;
                        }
                    }
                }
            }
        }
        let mut mult = Grid::from_vec(
            w,
            h,
            explored
                .as_slice()
                .iter()
                .map(|&e| if e { 1.0 } else { params.unexplored_cost })
                .collect(),
        );
        let r = params.clearance as i32;
        if r > k && params.clearance_cost > 0.0 {
            let mut near = Grid::filled(w, h, i32::MAX);
            for c in obstacle.cells().filter(|c| obstacle[*c]) {
                for dr in -r..=r {
                    for dc in -r..=r {
                        if let Some(d) = near.get_mut(Cell::new(c.row + dr, c.col + dc)) {
                            *d = (*d).min(dr.abs().max(dc.abs()));
                        }
                    }
                }
            }
            for c in near.cells() {
                let d = near[c];
                if d > k && d <= r {
                    mult[c] += params.clearance_cost * (r + 1 - d) as f64 / (r - k) as f64;
                }
            }
        }
        Self {
            obstacle,
            blocked,
            mult,
            resolution,
        }
    }

    pub fn width(&self) -> usize {
        self.obstacle.width()
    }

    pub fn height(&self) -> usize {
        self.obstacle.height()
    }

    pub fn is_blocked(&self, c: Cell) -> bool {
        self.blocked.get(c).copied().unwrap_or(true)
    }

    pub fn is_obstacle(&self, c: Cell) -> bool {
        self.obstacle.get(c).copied().unwrap_or(true)
    }

    fn passable(&self, c: Cell, from: Cell, to: Cell) -> bool {
        self.obstacle.contains(c) && (!self.blocked[c] || c == from || c == to)
    }

    /// Neighbours of `c` reachable in one step, with step cost.
    fn edges(&self, c: Cell, from: Cell, to: Cell) -> impl Iterator<Item = (Cell, f64, f64)> + '_ {
        c.neighbors8().into_iter().filter_map(move |(n, unit)| {
            if !self.passable(n, from, to) {
                return None;
            }
            if n.row != c.row
                && n.col != c.col
                && !(self.passable(Cell::new(n.row, c.col), from, to) && self.passable(Cell::new(c.row, n.col), from, to))
            {
                return None;
            }
            Some((n, unit * 0.5 * (self.mult[c] + self.mult[n]), unit))
        })
    }

    fn search(&self, from: Cell, is_goal: impl Fn(Cell) -> bool, h: impl Fn(Cell) -> f64, to: Cell) -> Option<PlannerPath> {
        if !self.obstacle.contains(from) {
            return None;
        }
        let n = self.width() * self.height();
        let mut g = vec![f64::INFINITY; n];
        let mut unit_len = vec![0.0; n];
        let mut parent = vec![usize::MAX; n];
        let mut closed = vec![false; n];
        let mut heap = BinaryHeap::new();
        let fi = self.obstacle.index(from);
        g[fi] = 0.0;
        heap.push(Item { f: h(from), g: 0.0, cell: from });
        while let Some(Item { g: gc, cell, .. }) = heap.pop() {
            let ci = self.obstacle.index(cell);
            if closed[ci] {
                continue;
            }
            closed[ci] = true;
            if is_goal(cell) {
                let mut cells = vec![cell];
                let mut i = ci;
                while parent[i] != usize::MAX {
                    i = parent[i];
                    cells.push(self.obstacle.cell_at(i));
                }
                cells.reverse();
                return Some(PlannerPath {
                    cells,
                    length: unit_len[ci] * self.resolution,
                    cost: gc,
                });
            }
            for (nb, cost, unit) in self.edges(cell, from, to) {
                let ni = self.obstacle.index(nb);
                if closed[ni] {
                    continue;
                }
                let ng = gc + cost;
                if ng < g[ni] {
                    g[ni] = ng;
                    parent[ni] = ci;
                    unit_len[ni] = unit_len[ci] + unit;
                    heap.push(Item { f: ng + h(nb), g: ng, cell: nb });
                }
            }
        }
        None
    }

    /// Optimal path under the octile heuristic; `None` when unreachable.
    pub fn astar(&self, from: Cell, to: Cell) -> Option<PlannerPath> {
        if !self.obstacle.contains(to) {
            return None;
        }
        self.search(from, |c| c == to, |c| c.octile(to), to)
    }

    /// Cheapest path to any cell marked in `targets`. Targets obey the
    /// usual blocking rules.
    pub fn dijkstra_to_any(&self, from: Cell, targets: &Grid<bool>) -> Option<PlannerPath> {
        self.search(from, |c| targets.get(c).copied().unwrap_or(false), |_| 0.0, from)
    }

    /// Multi-source Dijkstra over non-obstacle cells, in meters with the
    /// same cost multipliers as planning. Sources may be obstacles.
    pub fn distance_field(&self, sources: &[Cell]) -> Grid<f64> {
        let mut dist = Grid::filled(self.width(), self.height(), f64::INFINITY);
        let mut heap = BinaryHeap::new();
        for &s in sources {
            if let Some(d) = dist.get_mut(s) {
                *d = 0.0;
                heap.push(Item { f: 0.0, g: 0.0, cell: s });
            }
        }
        while let Some(Item { g: gc, cell, .. }) = heap.pop() {
            if gc > dist[cell] {
                continue;
            }
            for (n, unit) in cell.neighbors8() {
                if self.is_obstacle(n) {
                    continue;
                }
                if n.row != cell.row
                    && n.col != cell.col
                    && (self.is_obstacle(Cell::new(n.row, cell.col)) || self.is_obstacle(Cell::new(cell.row, n.col)))
                    && dist[cell] > 0.0
                {
                    continue;
                }
                let ng = gc + unit * 0.5 * (self.mult[cell] + self.mult[n]) * self.resolution;
                if ng < dist[n] {
                    dist[n] = ng;
                    heap.push(Item { f: ng, g: ng, cell: n });
                }
            }
        }
        dist
    }
}

pub fn plan_astar(map: &GlobalSemMap, from: Cell, to: Cell, params: &PlanParams) -> Option<PlannerPath> {
    CostGrid::from_map(map, params).astar(from, to)
}

pub fn plan_to_any(map: &GlobalSemMap, from: Cell, targets: &Grid<bool>, params: &PlanParams) -> Option<PlannerPath> {
    CostGrid::from_map(map, params).dijkstra_to_any(from, targets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bare() -> PlanParams {
        PlanParams {
            clearance: 0,
            ..PlanParams::default()
        }
    }
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid_from(rows: &[&str]) -> (Grid<bool>, Grid<bool>) {
        let h = rows.len();
        let w = rows[0].len();
        let obstacle = Grid::from_vec(w, h, rows.iter().flat_map(|r| r.chars().map(|c| c == '#')).collect());
        let explored = Grid::from_vec(w, h, rows.iter().flat_map(|r| r.chars().map(|c| c != '?')).collect());
        (obstacle, explored)
    }

    #[test]
    fn straight_corridor() {
        let (o, e) = grid_from(&[".........."]);
        let g = CostGrid::from_layers(o, &e, 0.05, &PlanParams { inflation: 0, ..bare() });
        let p = g.astar(Cell::new(0, 0), Cell::new(0, 9)).unwrap();
        assert_eq!(p.cells.len(), 10);
        assert_eq!(p.cost, 9.0);
        assert!((p.length - 0.45).abs() < 1e-12);
    }

    #[test]
    fn same_cell_is_trivial_path() {
        let (o, e) = grid_from(&["...", "...", "..."]);
        let g = CostGrid::from_layers(o, &e, 0.05, &bare());
        let p = g.astar(Cell::new(1, 1), Cell::new(1, 1)).unwrap();
        assert_eq!(p.cells, vec![Cell::new(1, 1)]);
        assert_eq!(p.length, 0.0);
    }

    #[test]
    fn walls_are_unreachable_and_unexplored_costs_more() {
        let (o, e) = grid_from(&["..#..", "..#..", "..#.."]);
        let g = CostGrid::from_layers(o, &e, 0.05, &PlanParams { inflation: 0, ..bare() });
        assert!(g.astar(Cell::new(0, 0), Cell::new(0, 4)).is_none());
        let (o, e) = grid_from(&["..?.."]);
        let g = CostGrid::from_layers(o, &e, 0.05, &PlanParams { inflation: 0, ..bare() });
        let p = g.astar(Cell::new(0, 0), Cell::new(0, 4)).unwrap();
        assert!((p.cost - 4.5).abs() < 1e-12, "{}", p.cost);
    }

    #[test]
    fn inflation_blocks_gaps_but_spares_endpoints() {
        let (o, e) = grid_from(&[".....", "##.##", "....."]);
        let g = CostGrid::from_layers(o.clone(), &e, 0.05, &bare());
        assert!(g.astar(Cell::new(0, 0), Cell::new(2, 0)).is_none());
        let g0 = CostGrid::from_layers(o, &e, 0.05, &PlanParams { inflation: 0, ..bare() });
        assert!(g0.astar(Cell::new(0, 0), Cell::new(2, 0)).is_some());
        let (o, e) = grid_from(&[".....", ".....", "..#..", ".....", "....."]);
        let g = CostGrid::from_layers(o, &e, 0.05, &bare());
        assert!(g.astar(Cell::new(0, 0), Cell::new(4, 4)).is_some());
        assert!(g.astar(Cell::new(0, 0), Cell::new(1, 1)).is_some());
    }

    #[test]
    fn no_corner_cutting() {
        let (o, e) = grid_from(&[".#", "#."]);
        let g = CostGrid::from_layers(o, &e, 0.05, &PlanParams { inflation: 0, ..bare() });
        assert!(g.astar(Cell::new(0, 0), Cell::new(1, 1)).is_none());
    }

    /// Independent Dijkstra on the same graph definition.
    fn oracle(o: &Grid<bool>, e: &Grid<bool>, from: Cell, to: Cell) -> Option<f64> {
        let w = o.width() as i32;
        let h = o.height() as i32;
        let ok = |c: Cell| c.row >= 0 && c.row < h && c.col >= 0 && c.col < w && !o[c];
        let m = |c: Cell| if e[c] { 1.0 } else { 1.5 };
        let mut dist = vec![f64::INFINITY; (w * h) as usize];
        let mut done = vec![false; (w * h) as usize];
        let idx = |c: Cell| (c.row * w + c.col) as usize;
        dist[idx(from)] = 0.0;
        loop {
            let mut best: Option<Cell> = None;
            for r in 0..h {
                for c in 0..w {
                    let cell = Cell::new(r, c);
                    if !done[idx(cell)] && dist[idx(cell)].is_finite() && best.is_none_or(|b| dist[idx(cell)] < dist[idx(b)]) {
                        best = Some(cell);
                    }
                }
            }
            let Some(u) = best else { return None };
            if u == to {
                return Some(dist[idx(u)]);
            }
            done[idx(u)] = true;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let v = Cell::new(u.row + dr, u.col + dc);
                    if (dr == 0 && dc == 0) || !ok(v) {
                        continue;
                    }
                    if dr != 0 && dc != 0 && !(ok(Cell::new(u.row + dr, u.col)) && ok(Cell::new(u.row, u.col + dc))) {
                        continue;
                    }
                    let unit = if dr != 0 && dc != 0 { 2f64.sqrt() } else { 1.0 };
                    let nd = dist[idx(u)] + unit * 0.5 * (m(u) + m(v));
                    if nd < dist[idx(v)] {
                        dist[idx(v)] = nd;
                    }
                }
            }
        }
    }

    #[test]
    fn astar_matches_dijkstra_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut reachable = 0;
        for _ in 0..200 {
            let o = Grid::from_vec(20, 20, (0..400).map(|_| rng.gen_bool(0.25)).collect());
            let e = Grid::from_vec(20, 20, (0..400).map(|_| rng.gen_bool(0.7)).collect());
            let mut free: Vec<Cell> = o.cells().filter(|c| !o[*c]).collect();
            free.sort();
            let from = free[rng.gen_range(0..free.len())];
            let to = free[rng.gen_range(0..free.len())];
            let g = CostGrid::from_layers(o.clone(), &e, 0.05, &PlanParams { inflation: 0, ..bare() });
            let got = g.astar(from, to).map(|p| p.cost);
            let want = oracle(&o, &e, from, to);
            match (got, want) {
                (Some(a), Some(b)) => {
                    reachable += 1;
                    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
                }
                (None, None) => {}
                other => panic!("reachability mismatch {other:?}"),
            }
        }
        assert!(reachable > 50);
    }

    #[test]
    fn distance_field_starts_at_obstacle_sources() {
        let (o, e) = grid_from(&["....#"]);
        let g = CostGrid::from_layers(o, &e, 0.1, &bare());
        let d = g.distance_field(&[Cell::new(0, 4)]);
        assert_eq!(d[Cell::new(0, 4)], 0.0);
        assert!((d[Cell::new(0, 3)] - 0.1).abs() < 1e-12);
        assert!((d[Cell::new(0, 0)] - 0.4).abs() < 1e-12);
    }
}
