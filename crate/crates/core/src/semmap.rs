//! Two-level semantic map: per-step local maps projected from a labelled
//! depth scan, and a global map accumulated with opening, accumulation and
//! fading.
//!
//! All grids of a local map and its global map share one [`MapGeometry`].
//! Projection grows the geometry when a ray leaves the current extent, and
//! [`fuse`] re-embeds the older map into the larger geometry before
//! combining, so nothing is ever truncated.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{Cell, DdaRay, Frame, Grid};
use crate::sensors::{DepthScan, SemScan};
use crate::world::{CellClass, Pose, NUM_GOALS};

/// Margin added on every side when a map has to grow.
const GROW_MARGIN: i32 = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapGeometry {
    pub frame: Frame,
    pub width: usize,
    pub height: usize,
}

impl MapGeometry {
    pub fn new(frame: Frame, width: usize, height: usize) -> Self {
        Self { frame, width, height }
    }

    /// Geometry covering `[0, width_m] x [0, height_m]` at `resolution`.
    pub fn covering(width_m: f64, height_m: f64, resolution: f64) -> Self {
        Self::new(
            Frame::new(0.0, 0.0, resolution),
            (width_m / resolution).ceil() as usize,
            (height_m / resolution).ceil() as usize,
        )
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.row >= 0 && c.col >= 0 && (c.row as usize) < self.height && (c.col as usize) < self.width
    }

    /// Smallest enlargement (plus margin) that contains every cell of `bbox`.
    fn grown_to(&self, bbox: &BBox) -> MapGeometry {
        if bbox.is_empty() || (self.contains(bbox.min) && self.contains(bbox.max)) {
            return *self;
        }
        let pad_lo_r = if bbox.min.row < 0 { -bbox.min.row + GROW_MARGIN } else { 0 };
        let pad_lo_c = if bbox.min.col < 0 { -bbox.min.col + GROW_MARGIN } else { 0 };
        let pad_hi_r = (bbox.max.row - self.height as i32 + 1).max(0);
        let pad_hi_c = (bbox.max.col - self.width as i32 + 1).max(0);
        let pad_hi_r = if pad_hi_r > 0 { pad_hi_r + GROW_MARGIN } else { 0 };
        let pad_hi_c = if pad_hi_c > 0 { pad_hi_c + GROW_MARGIN } else { 0 };
        let res = self.frame.resolution;
        MapGeometry {
            frame: Frame::new(
                self.frame.origin_x - pad_lo_c as f64 * res,
                self.frame.origin_y - pad_lo_r as f64 * res,
                res,
            ),
            width: self.width + (pad_lo_c + pad_hi_c) as usize,
            height: self.height + (pad_lo_r + pad_hi_r) as usize,
        }
    }

    /// Cell offset of `self`'s origin inside `larger`.
    fn offset_in(&self, larger: &MapGeometry) -> Cell {
        let res = self.frame.resolution;
        Cell::new(
            ((self.frame.origin_y - larger.frame.origin_y) / res).round() as i32,
            ((self.frame.origin_x - larger.frame.origin_x) / res).round() as i32,
        )
    }
}

/// Inclusive cell bounding box; empty when `min > max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub min: Cell,
    pub max: Cell,
}

impl BBox {
    pub const EMPTY: BBox = BBox {
        min: Cell::new(i32::MAX, i32::MAX),
        max: Cell::new(i32::MIN, i32::MIN),
    };

    pub fn is_empty(&self) -> bool {
        self.min.row > self.max.row || self.min.col > self.max.col
    }

    pub fn include(&mut self, c: Cell) {
        self.min.row = self.min.row.min(c.row);
        self.min.col = self.min.col.min(c.col);
        self.max.row = self.max.row.max(c.row);
        self.max.col = self.max.col.max(c.col);
    }

    fn shifted(&self, by: Cell) -> BBox {
        if self.is_empty() {
            return *self;
        }
        BBox {
            min: Cell::new(self.min.row + by.row, self.min.col + by.col),
            max: Cell::new(self.max.row + by.row, self.max.col + by.col),
        }
    }

    fn expanded(&self, k: i32, geom: &MapGeometry) -> BBox {
        if self.is_empty() {
            return *self;
        }
        BBox {
            min: Cell::new((self.min.row - k).max(0), (self.min.col - k).max(0)),
            max: Cell::new(
                (self.max.row + k).min(geom.height as i32 - 1),
                (self.max.col + k).min(geom.width as i32 - 1),
            ),
        }
    }

    fn cells(&self) -> impl Iterator<Item = Cell> {
        let b = *self;
        let rows = if b.is_empty() { 0..0 } else { b.min.row..b.max.row + 1 };
        rows.flat_map(move |r| (b.min.col..=b.max.col).map(move |c| Cell::new(r, c)))
    }
}

fn reembed<T: Clone>(grid: &Grid<T>, from: &MapGeometry, to: &MapGeometry, fill: T) -> Grid<T> {
    if from == to {
        return grid.clone();
    }
    let off = from.offset_in(to);
    let mut out = Grid::filled(to.width, to.height, fill);
    for c in grid.cells() {
        out[Cell::new(c.row + off.row, c.col + off.col)] = grid[c].clone();
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterParams {
    /// Half-size of the square structuring element, cells.
    pub k: usize,
    /// Fading coefficient for covered cells without a detection.
    pub alpha: f64,
    /// A cell is a goal cell when its accumulated value is strictly above this.
    pub threshold: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            k: 1,
            alpha: 0.9,
            threshold: 2.0,
        }
    }
}

impl FilterParams {
    /// No opening and any positive evidence counts.
    pub fn unfiltered(alpha: f64) -> Self {
        Self {
            k: 0,
            alpha,
            threshold: 0.0,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(format!("alpha must be in (0, 1), got {}", self.alpha));
        }
        if !(self.threshold >= 0.0) {
            return Err(format!("threshold must be >= 0, got {}", self.threshold));
        }
        Ok(())
    }
}

/// How labelled hits are rasterized into the local map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionParams {
    /// Depth (meters) behind each goal-labelled hit that is also marked,
    /// standing in for the object footprint seen from above.
    pub goal_extrusion: f64,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        Self { goal_extrusion: 0.25 }
    }
}

/// One-shot observation map: binary per-goal-class grids and the coverage
/// mask of everything the scan touched.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSemMap {
    geom: MapGeometry,
    classes: Vec<Grid<bool>>,
    coverage: Grid<bool>,
    /// Bounding box of the coverage mask (every class cell lies inside).
    bbox: BBox,
}

impl LocalSemMap {
    pub fn empty(geom: MapGeometry) -> Self {
        Self {
            geom,
            classes: vec![Grid::filled(geom.width, geom.height, false); NUM_GOALS],
            coverage: Grid::filled(geom.width, geom.height, false),
            bbox: BBox::EMPTY,
        }
    }

    pub fn geometry(&self) -> &MapGeometry {
        &self.geom
    }

    pub fn class_grid(&self, class: CellClass) -> &Grid<bool> {
        &self.classes[goal_slot(class)]
    }

    pub fn coverage(&self) -> &Grid<bool> {
        &self.coverage
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn set_covered(&mut self, c: Cell) {
        self.coverage[c] = true;
        self.bbox.include(c);
    }

    /// Marks a class observation; the cell also becomes covered.
    pub fn set_class(&mut self, class: CellClass, c: Cell) {
        self.classes[goal_slot(class)][c] = true;
        self.set_covered(c);
    }

    pub fn class_cells(&self, class: CellClass) -> Vec<Cell> {
        let g = self.class_grid(class);
        self.bbox.cells().filter(|c| g[*c]).collect()
    }

    fn reembedded(&self, to: &MapGeometry) -> LocalSemMap {
        if &self.geom == to {
            return self.clone();
        }
        let off = self.geom.offset_in(to);
        LocalSemMap {
            geom: *to,
            classes: self.classes.iter().map(|g| reembed(g, &self.geom, to, false)).collect(),
            coverage: reembed(&self.coverage, &self.geom, to, false),
            bbox: self.bbox.shifted(off),
        }
    }
}

fn goal_slot(class: CellClass) -> usize {
    class
        .goal_index()
        .unwrap_or_else(|| panic!("{class} is not a goal class"))
}

/// Accumulated map: real-valued evidence per goal class plus explored and
/// obstacle layers.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalSemMap {
    geom: MapGeometry,
    classes: Vec<Grid<f64>>,
    explored: Grid<bool>,
    obstacle: Grid<bool>,
    explored_count: usize,
}

impl GlobalSemMap {
    pub fn new(geom: MapGeometry) -> Self {
        Self {
            geom,
            classes: vec![Grid::filled(geom.width, geom.height, 0.0); NUM_GOALS],
            explored: Grid::filled(geom.width, geom.height, false),
            obstacle: Grid::filled(geom.width, geom.height, false),
            explored_count: 0,
        }
    }

    pub fn geometry(&self) -> &MapGeometry {
        &self.geom
    }

    pub fn frame(&self) -> &Frame {
        &self.geom.frame
    }

    pub fn width(&self) -> usize {
        self.geom.width
    }

    pub fn height(&self) -> usize {
        self.geom.height
    }

    pub fn contains(&self, c: Cell) -> bool {
        self.geom.contains(c)
    }

    pub fn value(&self, class: CellClass, c: Cell) -> f64 {
        self.classes[goal_slot(class)].get(c).copied().unwrap_or(0.0)
    }

    pub fn class_grid(&self, class: CellClass) -> &Grid<f64> {
        &self.classes[goal_slot(class)]
    }

    pub fn class_grid_mut(&mut self, class: CellClass) -> &mut Grid<f64> {
        &mut self.classes[goal_slot(class)]
    }

    pub fn is_explored(&self, c: Cell) -> bool {
        self.explored.get(c).copied().unwrap_or(false)
    }

    pub fn is_obstacle(&self, c: Cell) -> bool {
        self.obstacle.get(c).copied().unwrap_or(false)
    }

    pub fn explored(&self) -> &Grid<bool> {
        &self.explored
    }

    pub fn obstacle(&self) -> &Grid<bool> {
        &self.obstacle
    }

    pub fn explored_count(&self) -> usize {
        self.explored_count
    }

    /// Marks a cell explored, and obstacle or free. Grows nothing; callers
    /// must pass cells inside the geometry.
    pub fn set_cell_state(&mut self, c: Cell, obstacle: bool) {
        if !self.explored[c] {
            self.explored[c] = true;
            self.explored_count += 1;
        }
        self.obstacle[c] = obstacle;
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Cell {
        self.geom.frame.cell_of(x, y)
    }

    pub fn center_of(&self, c: Cell) -> (f64, f64) {
        self.geom.frame.center_of(c)
    }

    fn reembedded(&self, to: &MapGeometry) -> GlobalSemMap {
        if &self.geom == to {
            return self.clone();
        }
        GlobalSemMap {
            geom: *to,
            classes: self.classes.iter().map(|g| reembed(g, &self.geom, to, 0.0)).collect(),
            explored: reembed(&self.explored, &self.geom, to, false),
            obstacle: reembed(&self.obstacle, &self.geom, to, false),
            explored_count: self.explored_count,
        }
    }

    /// Grows the map, if needed, so that `bbox` (in current cell coordinates)
    /// fits. Returns the offset applied to existing cell coordinates.
    fn ensure(&mut self, bbox: &BBox) -> Cell {
        let target = self.geom.grown_to(bbox);
        let off = self.geom.offset_in(&target);
        if target != self.geom {
            *self = self.reembedded(&target);
        }
        off
    }

    /// Text dump: a `map` header, then per channel a `channel <name>` line
    /// followed by rows of 3-decimal values.
    pub fn dump(&self) -> String {
        let f = &self.geom.frame;
        let mut out = format!(
            "map {} {} {} {} {}\n",
            self.geom.width, self.geom.height, f.origin_x, f.origin_y, f.resolution
        );
        let mut block = |name: &str, value: &dyn Fn(Cell) -> f64| {
            let _ = writeln!(out, "channel {name}");
            for r in 0..self.geom.height {
                let row: Vec<String> = (0..self.geom.width)
                    .map(|c| format!("{:.3}", value(Cell::new(r as i32, c as i32))))
                    .collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        };
        for class in CellClass::GOALS {
            let g = self.class_grid(class);
            block(class.name(), &|c| g[c]);
        }
        block("explored", &|c| if self.explored[c] { 1.0 } else { 0.0 });
        block("obstacle", &|c| if self.obstacle[c] { 1.0 } else { 0.0 });
        out
    }

    /// Parses [`GlobalSemMap::dump`] output (values at 3-decimal precision).
    pub fn parse_dump(text: &str) -> Result<GlobalSemMap> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty map dump"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 6 || h[0] != "map" {
            return Err(Error::parse(1, "expected `map width height origin_x origin_y resolution`"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::parse(1, format!("bad number '{s}'")));
        let width = num(h[1])? as usize;
        let height = num(h[2])? as usize;
        let geom = MapGeometry::new(Frame::new(num(h[3])?, num(h[4])?, num(h[5])?), width, height);
        let mut map = GlobalSemMap::new(geom);
        let names: Vec<&str> = CellClass::GOALS
            .iter()
            .map(|c| c.name())
            .chain(["explored", "obstacle"])
            .collect();
        for (slot, name) in names.iter().enumerate() {
            let (i, l) = lines.next().ok_or_else(|| Error::parse(0, format!("missing channel {name}")))?;
            if l.trim() != format!("channel {name}") {
                return Err(Error::parse(i + 1, format!("expected `channel {name}`")));
            }
            for r in 0..height {
                let (i, l) = lines.next().ok_or_else(|| Error::parse(0, "truncated channel"))?;
                let vals: Vec<f64> = l
                    .split_whitespace()
                    .map(|v| v.parse::<f64>().map_err(|_| Error::parse(i + 1, format!("bad value '{v}'"))))
                    .collect::<Result<_>>()?;
                if vals.len() != width {
                    return Err(Error::parse(i + 1, format!("expected {width} values")));
                }
                for (c, v) in vals.into_iter().enumerate() {
                    let cell = Cell::new(r as i32, c as i32);
                    match slot {
                        s if s < NUM_GOALS => map.classes[s][cell] = v,
                        s if s == NUM_GOALS => {
                            if v > 0.5 {
                                map.set_cell_state(cell, map.obstacle[cell]);
                            }
                        }
                        _ => map.obstacle[cell] = v > 0.5,
                    }
                }
            }
        }
        Ok(map)
    }
}

struct RayFootprint {
    traversed: Vec<Cell>,
    hit: Option<Cell>,
    /// Hit cell followed by the extrusion depth behind it.
    behind: Vec<Cell>,
}

fn ray_footprint(
    frame: &Frame,
    pose: Pose,
    bearing_deg: f64,
    range: f64,
    clamped: bool,
    extrusion: Option<f64>,
) -> RayFootprint {
    let a = bearing_deg.to_radians();
    let eps = frame.resolution * 1e-6;
    let traversed: Vec<Cell> = DdaRay::new(frame, pose.x, pose.y, a, range)
        .filter(|rc| rc.t_enter < range - eps || rc.t_enter == 0.0)
        .map(|rc| rc.cell)
        .collect();
    let (dy, dx) = a.sin_cos();
    let end = (pose.x + dx * (range + eps), pose.y + dy * (range + eps));
    let end_cell = frame.cell_of(end.0, end.1);
    let hit = (!clamped).then_some(end_cell);
    let behind = match extrusion {
        Some(depth) => {
            let mut cells: Vec<Cell> = DdaRay::new(frame, end.0, end.1, a, depth.max(eps))
                .map(|rc| rc.cell)
                .collect();
            if cells.first() != Some(&end_cell) {
                cells.insert(0, end_cell);
            }
            cells
        }
        None => Vec::new(),
    };
    RayFootprint { traversed, hit, behind }
}

/// Projects one labelled scan into a local map over `geom` (grown if any
/// ray leaves it). Goal-labelled rays set their hit cell and the extrusion
/// behind it. Traversed cells are covered, and so is the extrusion behind
/// every surface hit, so stale goal cells there can fade.
pub fn project_local(
    pose: Pose,
    depth: &DepthScan,
    sem: &SemScan,
    geom: &MapGeometry,
    params: &ProjectionParams,
) -> Result<LocalSemMap> {
    if depth.len() != sem.labels.len() {
        return Err(Error::Contract(format!(
            "depth has {} rays but semantics has {}",
            depth.len(),
            sem.labels.len()
        )));
    }
    let prints: Vec<(CellClass, RayFootprint)> = (0..depth.len())
        .map(|i| {
            let label = sem.labels[i];
            let extrusion = (label.is_goal() || !depth.is_clamped(i)).then_some(params.goal_extrusion);
            let fp = ray_footprint(
                &geom.frame,
                pose,
                depth.bearing(pose.heading, i),
                depth.ranges[i],
                depth.is_clamped(i),
                extrusion,
            );
            (label, fp)
        })
        .collect();

    let mut bbox = BBox::EMPTY;
    for (_, fp) in &prints {
        fp.traversed.iter().chain(fp.hit.iter()).chain(&fp.behind).for_each(|c| bbox.include(*c));
    }
    let target = geom.grown_to(&bbox);
    let off = geom.offset_in(&target);
    let shift = |c: &Cell| Cell::new(c.row + off.row, c.col + off.col);

    let mut local = LocalSemMap::empty(target);
    for (label, fp) in &prints {
        for c in fp.traversed.iter().chain(fp.hit.iter()) {
            local.set_covered(shift(c));
        }
        if fp.hit.is_some() {
            fp.behind.iter().for_each(|c| local.set_covered(shift(c)));
        }
        if label.is_goal() {
            fp.behind.iter().for_each(|c| local.set_class(*label, shift(c)));
        }
    }
    Ok(local)
}

fn erode_or_dilate(src: &Grid<bool>, k: i32, region: &BBox, erode: bool) -> Grid<bool> {
    // Separable square structuring element: rows then columns. Cells outside
    // the grid count as unset.
    let mut tmp = src.clone();
    let mut out = src.clone();
    let w = src.width() as i32;
    let h = src.height() as i32;
    for c in region.cells() {
        let mut acc = erode;
        for dc in -k..=k {
            let n = Cell::new(c.row, c.col + dc);
            let v = n.col >= 0 && n.col < w && src[n];
            if erode {
                acc &= v;
            } else {
                acc |= v;
            }
        }
        tmp[c] = acc;
    }
    for c in region.cells() {
        let mut acc = erode;
        for dr in -k..=k {
            let n = Cell::new(c.row + dr, c.col);
            let v = n.row >= 0 && n.row < h && tmp[n];
            if erode {
                acc &= v;
            } else {
                acc |= v;
            }
        }
        out[c] = acc;
    }
    out
}

/// Erosion followed by dilation (an opening) with a `(2k+1) x (2k+1)`
/// square, per class. Coverage is left unchanged; `k = 0` is the identity.
pub fn morph_filter(local: &LocalSemMap, k: usize) -> LocalSemMap {
    if k == 0 {
        return local.clone();
    }
    let k = k as i32;
    let mut out = local.clone();
    let region = local.bbox.expanded(2 * k, &local.geom);
    if region.is_empty() {
        return out;
    }
    // Rows/cols just outside the region must read as their true values, so
    // the region is padded by 2k and processed in two passes over it.
    for (slot, grid) in local.classes.iter().enumerate() {
        let eroded = erode_or_dilate(grid, k, &region, true);
        out.classes[slot] = erode_or_dilate(&eroded, k, &region, false);
    }
    out
}

/// Accumulation and fading per goal channel: detected cells gain 1, covered
/// cells without a detection are scaled by `alpha`, the rest are untouched.
pub fn fuse(prev: &GlobalSemMap, local: &LocalSemMap, alpha: f64) -> GlobalSemMap {
    let mut m = prev.clone();
    fuse_in_place(&mut m, local, alpha);
    m
}

pub fn fuse_in_place(map: &mut GlobalSemMap, local: &LocalSemMap, alpha: f64) {
    let extent = local_extent_in(map, local);
    if !(map.geom.contains(extent.min) && map.geom.contains(extent.max)) {
        let back = map.geom.offset_in(&local.geom);
        let fits = local.geom.contains(back)
            && local.geom.contains(Cell::new(
                back.row + map.geom.height as i32 - 1,
                back.col + map.geom.width as i32 - 1,
            ));
        let target = if fits { local.geom } else { map.geom.grown_to(&extent) };
        *map = map.reembedded(&target);
    }
    let target = map.geom;
    let local = if local.geom == target {
        std::borrow::Cow::Borrowed(local)
    } else {
        std::borrow::Cow::Owned(local.reembedded(&target))
    };
    for (slot, grid) in map.classes.iter_mut().enumerate() {
        let l = &local.classes[slot];
        for c in local.bbox.cells() {
            if l[c] {
                grid[c] += 1.0;
            } else if local.coverage[c] {
                grid[c] *= alpha;
            }
        }
    }
}

/// The local map's full extent expressed in `map`'s cell coordinates.
fn local_extent_in(map: &GlobalSemMap, local: &LocalSemMap) -> BBox {
    let off = local.geom.offset_in(&map.geom);
    BBox {
        min: off,
        max: Cell::new(
            off.row + local.geom.height as i32 - 1,
            off.col + local.geom.width as i32 - 1,
        ),
    }
}

/// Cells whose accumulated evidence for `class` strictly exceeds `threshold`,
/// in (row, col) order.
pub fn goal_cells(map: &GlobalSemMap, class: CellClass, threshold: f64) -> Vec<Cell> {
    let g = map.class_grid(class);
    g.cells().filter(|c| g[*c] > threshold).collect()
}

/// Marks traversed cells explored-free and in-range hit cells
/// explored-obstacle. Later observations overwrite earlier ones.
pub fn update_occupancy(map: &GlobalSemMap, pose: Pose, depth: &DepthScan) -> GlobalSemMap {
    let mut out = map.clone();
    update_occupancy_in_place(&mut out, pose, depth);
    out
}

pub fn update_occupancy_in_place(map: &mut GlobalSemMap, pose: Pose, depth: &DepthScan) {
    let prints: Vec<RayFootprint> = (0..depth.len())
        .map(|i| {
            ray_footprint(
                &map.geom.frame,
                pose,
                depth.bearing(pose.heading, i),
                depth.ranges[i],
                depth.is_clamped(i),
                None,
            )
        })
        .collect();
    let mut bbox = BBox::EMPTY;
    for fp in &prints {
        fp.traversed.iter().chain(fp.hit.iter()).for_each(|c| bbox.include(*c));
    }
    let off = map.ensure(&bbox);
    let shift = |c: &Cell| Cell::new(c.row + off.row, c.col + off.col);
    for fp in &prints {
        for c in &fp.traversed {
            map.set_cell_state(shift(c), false);
        }
    }
    for fp in &prints {
        if let Some(c) = &fp.hit {
            map.set_cell_state(shift(c), true);
        }
    }
}

/// Projection, opening and fusion in one step, in place.
pub fn integrate(
    map: &mut GlobalSemMap,
    pose: Pose,
    depth: &DepthScan,
    sem: &SemScan,
    filter: &FilterParams,
    projection: &ProjectionParams,
) -> Result<()> {
    let local = project_local(pose, depth, sem, &map.geom, projection)?;
    let local = morph_filter(&local, filter.k);
    fuse_in_place(map, &local, filter.alpha);
    Ok(())
}
