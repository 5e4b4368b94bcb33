//! Grid world: scenes, agent kinematics and the geodesic distance oracle.

use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{Cell, Frame, Grid};

/// Forward displacement of a single `Forward` action, meters.
pub const FORWARD_STEP: f64 = 0.25;
/// Default scene resolution, meters per cell.
pub const DEFAULT_RESOLUTION: f64 = 0.05;
/// Success radius around any goal-class cell, meters.
pub const SUCCESS_RADIUS: f64 = 1.0;

pub const NUM_CLASSES: usize = 8;
pub const NUM_GOALS: usize = 6;

/// Content of one scene cell. `Free` doubles as the "nothing hit" marker in
/// semantic scans.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellClass {
    Free,
    Wall,
    Chair,
    Sofa,
    Bed,
    Toilet,
    Tv,
    PottedPlant,
}

impl CellClass {
    pub const ALL: [CellClass; NUM_CLASSES] = [
        CellClass::Free,
        CellClass::Wall,
        CellClass::Chair,
        CellClass::Sofa,
        CellClass::Bed,
        CellClass::Toilet,
        CellClass::Tv,
        CellClass::PottedPlant,
    ];

    pub const GOALS: [CellClass; NUM_GOALS] = [
        CellClass::Chair,
        CellClass::Sofa,
        CellClass::Bed,
        CellClass::Toilet,
        CellClass::Tv,
        CellClass::PottedPlant,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn is_goal(self) -> bool {
        !matches!(self, CellClass::Free | CellClass::Wall)
    }

    /// Position among the six goal classes.
    pub fn goal_index(self) -> Option<usize> {
        if self.is_goal() {
            Some(self.index() - 2)
        } else {
            None
        }
    }

    pub fn to_char(self) -> char {
        match self {
            CellClass::Free => '.',
            CellClass::Wall => '#',
            CellClass::Chair => 'c',
            CellClass::Sofa => 's',
            CellClass::Bed => 'b',
            CellClass::Toilet => 't',
            CellClass::Tv => 'v',
            CellClass::PottedPlant => 'p',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.to_char() == c)
    }

    pub fn name(self) -> &'static str {
        match self {
            CellClass::Free => "free",
            CellClass::Wall => "wall",
            CellClass::Chair => "chair",
            CellClass::Sofa => "sofa",
            CellClass::Bed => "bed",
            CellClass::Toilet => "toilet",
            CellClass::Tv => "tv",
            CellClass::PottedPlant => "potted_plant",
        }
    }
}

impl fmt::Display for CellClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CellClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == norm || (norm == "pottedplant" && *k == CellClass::PottedPlant))
            .ok_or_else(|| format!("unknown class '{s}'"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectInstance {
    pub class: CellClass,
    pub cells: Vec<Cell>,
}

/// Immutable indoor world.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    resolution: f64,
    cells: Grid<CellClass>,
    objects: Vec<ObjectInstance>,
}

impl Scene {
    /// Builds a scene from a class grid, checking the border and free-cell
    /// invariants and grouping goal cells into 4-connected instances.
    pub fn new(cells: Grid<CellClass>, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::Contract(format!("resolution must be positive, got {resolution}")));
        }
        let (w, h) = (cells.width(), cells.height());
        for cell in cells.cells() {
            let border = cell.row == 0 || cell.col == 0 || cell.row as usize == h - 1 || cell.col as usize == w - 1;
            if border && cells[cell] != CellClass::Wall {
                return Err(Error::Contract(format!(
                    "border cell (row {}, col {}) is not a wall",
                    cell.row, cell.col
                )));
            }
        }
        if !cells.as_slice().contains(&CellClass::Free) {
            return Err(Error::Contract("scene has no free cell".into()));
        }
        let objects = group_objects(&cells);
        Ok(Self {
            resolution,
            cells,
            objects,
        })
    }

    pub fn width(&self) -> usize {
        self.cells.width()
    }

    pub fn height(&self) -> usize {
        self.cells.height()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn frame(&self) -> Frame {
        Frame::new(0.0, 0.0, self.resolution)
    }

    pub fn grid(&self) -> &Grid<CellClass> {
        &self.cells
    }

    pub fn objects(&self) -> &[ObjectInstance] {
        &self.objects
    }

    /// Class at a cell; anything outside the grid reads as wall.
    pub fn class_at(&self, cell: Cell) -> CellClass {
        self.cells.get(cell).copied().unwrap_or(CellClass::Wall)
    }

    pub fn is_free_cell(&self, cell: Cell) -> bool {
        self.class_at(cell) == CellClass::Free
    }

    pub fn is_free_point(&self, x: f64, y: f64) -> bool {
        self.is_free_cell(self.frame().cell_of(x, y))
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Cell {
        self.frame().cell_of(x, y)
    }

    pub fn center_of(&self, cell: Cell) -> (f64, f64) {
        self.frame().center_of(cell)
    }

    pub fn contains_class(&self, class: CellClass) -> bool {
        self.objects.iter().any(|o| o.class == class)
    }

    pub fn class_cells(&self, class: CellClass) -> impl Iterator<Item = Cell> + '_ {
        self.objects
            .iter()
            .filter(move |o| o.class == class)
            .flat_map(|o| o.cells.iter().copied())
    }

    /// Euclidean distance from a point to the nearest goal-class cell center.
    pub fn distance_to_class(&self, x: f64, y: f64, class: CellClass) -> Option<f64> {
        self.class_cells(class)
            .map(|c| {
                let (cx, cy) = self.center_of(c);
                (cx - x).hypot(cy - y)
            })
            .min_by(f64::total_cmp)
    }

    /// Serializes to the scene text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.width(), self.height(), self.resolution);
        for row in 0..self.height() {
            for col in 0..self.width() {
                out.push(self.cells[Cell::new(row as i32, col as i32)].to_char());
            }
            out.push('\n');
        }
        out
    }
}

fn group_objects(cells: &Grid<CellClass>) -> Vec<ObjectInstance> {
    let mut seen = Grid::filled(cells.width(), cells.height(), false);
    let mut objects = Vec::new();
    for start in cells.cells() {
        let class = cells[start];
        if !class.is_goal() || seen[start] {
            continue;
        }
        let mut members = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(c) = queue.pop_front() {
            members.push(c);
            for n in c.neighbors4() {
                if cells.get(n) == Some(&class) && !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        members.sort();
        objects.push(ObjectInstance { class, cells: members });
    }
    objects
}

/// Parses the scene text format: a `width height resolution` header followed
/// by `height` rows of exactly `width` class characters.
pub fn load_scene(text: &str) -> Result<Scene> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::parse(1, "header must be `width height resolution`"));
    }
    let width: usize = fields[0]
        .parse()
        .map_err(|_| Error::parse(1, format!("bad width '{}'", fields[0])))?;
    let height: usize = fields[1]
        .parse()
        .map_err(|_| Error::parse(1, format!("bad height '{}'", fields[1])))?;
    let resolution: f64 = fields[2]
        .parse()
        .map_err(|_| Error::parse(1, format!("bad resolution '{}'", fields[2])))?;
    if width == 0 || height == 0 || !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::parse(1, "width, height and resolution must be positive"));
    }

    let mut data = Vec::with_capacity(width * height);
    for row in 0..height {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| Error::parse(row + 2, format!("missing row {}", row + 1)))?;
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        let count = line.chars().count();
        if count != width {
            return Err(Error::parse(
                line_no,
                format!("row {}: expected {width} cells, found {count}", row + 1),
            ));
        }
        for (col, ch) in line.chars().enumerate() {
            let class = CellClass::from_char(ch).ok_or_else(|| {
                Error::parse(line_no, format!("unknown cell character '{ch}' at column {}", col + 1))
            })?;
            data.push(class);
        }
    }
    for (idx, line) in lines {
        if !line.trim().is_empty() {
            return Err(Error::parse(idx + 1, "unexpected content after grid"));
        }
    }
    Scene::new(Grid::from_vec(width, height, data), resolution).map_err(|e| match e {
        Error::Contract(msg) => Error::parse(1, msg),
        other => other,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Degrees in [0, 360), counter-clockwise from +x.
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: wrap_degrees(heading),
        }
    }
}

/// Wraps an angle in degrees into [0, 360).
pub fn wrap_degrees(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Signed difference `to - from` in degrees, in (-180, 180].
pub fn signed_angle(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub steps_taken: usize,
    pub path_length: f64,
}

impl AgentState {
    pub fn at(pose: Pose) -> Self {
        Self {
            x: pose.x,
            y: pose.y,
            heading: pose.heading,
            steps_taken: 0,
            path_length: 0.0,
        }
    }

    pub fn pose(&self) -> Pose {
        Pose {
            x: self.x,
            y: self.y,
            heading: self.heading,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    CallStop,
    Forward,
    TurnLeft,
    TurnRight,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::CallStop => "stop",
            Action::Forward => "forward",
            Action::TurnLeft => "left",
            Action::TurnRight => "right",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "stop" => Ok(Action::CallStop),
            "forward" => Ok(Action::Forward),
            "left" => Ok(Action::TurnLeft),
            "right" => Ok(Action::TurnRight),
            _ => Err(format!("unknown action '{s}'")),
        }
    }
}

/// True when the straight segment from the agent along `heading` for
/// `distance` meters stays inside free cells.
pub fn segment_is_free(scene: &Scene, x: f64, y: f64, heading_deg: f64, distance: f64) -> bool {
    let (s, c) = heading_deg.to_radians().sin_cos();
    let samples = ((distance.abs() / (scene.resolution() * 0.25)).ceil() as usize).max(1);
    (1..=samples).all(|i| {
        let t = distance * i as f64 / samples as f64;
        scene.is_free_point(x + c * t, y + s * t)
    })
}

/// Translates the agent by `distance` meters along its heading (negative
/// moves backward). Blocked moves leave the position unchanged.
pub fn translate(scene: &Scene, state: &AgentState, distance: f64) -> AgentState {
    let mut next = *state;
    next.steps_taken += 1;
    if segment_is_free(scene, state.x, state.y, state.heading, distance) {
        let (s, c) = state.heading.to_radians().sin_cos();
        next.x = state.x + c * distance;
        next.y = state.y + s * distance;
        next.path_length += (next.x - state.x).hypot(next.y - state.y);
    }
    next
}

/// Applies one action. `CallStop` only counts the step.
pub fn step(scene: &Scene, state: &AgentState, action: Action, turn_angle: f64) -> AgentState {
    match action {
        Action::Forward => translate(scene, state, FORWARD_STEP),
        Action::TurnLeft | Action::TurnRight => {
            let sign = if action == Action::TurnLeft { 1.0 } else { -1.0 };
            AgentState {
                heading: wrap_degrees(state.heading + sign * turn_angle),
                steps_taken: state.steps_taken + 1,
                ..*state
            }
        }
        Action::CallStop => AgentState {
            steps_taken: state.steps_taken + 1,
            ..*state
        },
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeSpec {
    pub scene: String,
    pub start: Pose,
    pub goal: CellClass,
    pub optimal_length: Option<f64>,
}

/// Parses an episode file: `scene_path start_x start_y heading goal_class`
/// per line. Blank lines and `#` comments are skipped.
pub fn parse_episodes(text: &str) -> Result<Vec<EpisodeSpec>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            return Err(Error::parse(i + 1, "expected `scene_path start_x start_y heading goal_class`"));
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(i + 1, format!("bad {what} '{s}'")))
        };
        out.push(EpisodeSpec {
            scene: f[0].to_string(),
            start: Pose::new(num(f[1], "start_x")?, num(f[2], "start_y")?, num(f[3], "heading")?),
            goal: f[4].parse().map_err(|e: String| Error::parse(i + 1, e))?,
            optimal_length: None,
        });
    }
    Ok(out)
}

pub fn format_episode(ep: &EpisodeSpec) -> String {
    format!(
        "{} {:.3} {:.3} {} {}",
        ep.scene, ep.start.x, ep.start.y, ep.start.heading, ep.goal
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct QueueItem {
    cost: f64,
    cell: Cell,
}

impl Eq for QueueItem {}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Geodesic distance (meters) from every free cell to the success region of
/// a goal class: free cells whose center lies within `radius` of a goal
/// cell center. 8-connected, no corner cutting.
#[derive(Clone, Debug)]
pub struct GeodesicField {
    frame: Frame,
    dist: Grid<f64>,
}

impl GeodesicField {
    pub fn new(scene: &Scene, goal: CellClass, radius: f64) -> Self {
        let grid = scene.grid();
        let res = scene.resolution();
        let mut dist = Grid::filled(grid.width(), grid.height(), f64::INFINITY);
        let goal_cells: Vec<Cell> = scene.class_cells(goal).collect();
        let reach = (radius / res).ceil() as i32;
        let mut heap = BinaryHeap::new();
        for &g in &goal_cells {
            for dr in -reach..=reach {
                for dc in -reach..=reach {
                    let c = Cell::new(g.row + dr, g.col + dc);
                    if scene.is_free_cell(c) && c.euclid(g) * res <= radius + 1e-9 && dist[c] > 0.0 {
                        dist[c] = 0.0;
                        heap.push(QueueItem { cost: 0.0, cell: c });
                    }
                }
            }
        }
        while let Some(QueueItem { cost, cell }) = heap.pop() {
            if cost > dist[cell] {
                continue;
            }
            for (n, unit) in cell.neighbors8() {
                if !scene.is_free_cell(n) {
                    continue;
                }
                if n.row != cell.row
                    && n.col != cell.col
                    && !(scene.is_free_cell(Cell::new(n.row, cell.col))
                        && scene.is_free_cell(Cell::new(cell.row, n.col)))
                {
                    continue;
                }
                let nc = cost + unit * res;
                if nc < dist[n] {
                    dist[n] = nc;
                    heap.push(QueueItem { cost: nc, cell: n });
                }
            }
        }
        Self {
            frame: scene.frame(),
            dist,
        }
    }

    /// Distance from the cell containing `(x, y)`; `None` when unreachable.
    pub fn distance(&self, x: f64, y: f64) -> Option<f64> {
        self.distance_cell(self.frame.cell_of(x, y))
    }

    pub fn distance_cell(&self, cell: Cell) -> Option<f64> {
        self.dist.get(cell).copied().filter(|d| d.is_finite())
    }
}

/// Length of the shortest 8-connected path from `from` to any free cell
/// within the success radius of a `goal` cell. `None` means unreachable.
pub fn shortest_path_length(scene: &Scene, from: Pose, goal: CellClass) -> Option<f64> {
    GeodesicField::new(scene, goal, SUCCESS_RADIUS).distance(from.x, from.y)
}
