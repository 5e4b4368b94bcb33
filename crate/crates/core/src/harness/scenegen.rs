//! Procedural floor plans: a grid of rectangular rooms joined by door gaps
//! along a random spanning tree, with rectangular goal objects inside.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Cell, Grid};
use crate::world::{format_episode, CellClass, EpisodeSpec, GeodesicField, Pose, Scene, SUCCESS_RADIUS};

use super::episode::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenParams {
    /// Inclusive range of room rows in the layout grid.
    pub rows: (usize, usize),
    pub cols: (usize, usize),
    /// Room side length range, meters.
    pub room_size: (f64, f64),
    pub objects_per_room: (usize, usize),
    /// Object side length range, cells.
    pub object_cells: (usize, usize),
    pub door_width: f64,
    pub wall_cells: usize,
    pub resolution: f64,
    /// Free gap kept around every object, meters.
    pub clearance: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            rows: (1, 2),
            cols: (1, 2),
            room_size: (3.0, 4.5),
            objects_per_room: (1, 2),
            object_cells: (6, 12),
            door_width: 1.0,
            wall_cells: 2,
            resolution: 0.05,
            clearance: 0.6,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rows.0 >= 1
            && self.rows.0 <= self.rows.1
            && self.cols.0 >= 1
            && self.cols.0 <= self.cols.1
            && self.room_size.0 > 0.0
            && self.room_size.0 <= self.room_size.1
            && self.objects_per_room.0 <= self.objects_per_room.1
            && self.object_cells.0 >= 1
            && self.object_cells.0 <= self.object_cells.1
            && self.resolution > 0.0
            && self.wall_cells >= 1
            && self.clearance >= 0.0;
        if !ok {
            return Err(Error::Config("generator parameters out of range".into()));
        }
        if self.door_width + 0.6 > self.room_size.0 {
            return Err(Error::Config("doors do not fit the smallest room".into()));
        }
        Ok(())
    }
}

struct Room {
    r0: usize,
    c0: usize,
    h: usize,
    w: usize,
}

fn fill(grid: &mut Grid<CellClass>, r0: usize, c0: usize, h: usize, w: usize, class: CellClass) {
    for r in r0..r0 + h {
        for c in c0..c0 + w {
            grid[Cell::new(r as i32, c as i32)] = class;
        }
    }
}

fn all_free(grid: &Grid<CellClass>, r0: usize, c0: usize, h: usize, w: usize) -> bool {
    (r0..r0 + h).all(|r| (c0..c0 + w).all(|c| grid[Cell::new(r as i32, c as i32)] == CellClass::Free))
}

/// True when every free cell is 4-connected to every other.
pub fn free_space_connected(scene: &Scene) -> bool {
    let g = scene.grid();
    let Some(start) = g.cells().find(|c| g[*c] == CellClass::Free) else {
        return true;
    };
    let total = g.cells().filter(|c| g[*c] == CellClass::Free).count();
    let mut seen = Grid::filled(g.width(), g.height(), false);
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    let mut count = 0;
    while let Some(c) = queue.pop_front() {
        count += 1;
        for n in c.neighbors4() {
            if g.get(n) == Some(&CellClass::Free) && !seen[n] {
                seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    count == total
}

/// Random spanning tree over the `rows x cols` room grid, as pairs of
/// room indices.
fn spanning_tree<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let n = rows * cols;
    let mut visited = vec![false; n];
    let mut edges = Vec::new();
    let mut stack = vec![rng.gen_range(0..n)];
    visited[stack[0]] = true;
    while let Some(&cur) = stack.last() {
        let (r, c) = (cur / cols, cur % cols);
        let mut nbrs = Vec::new();
        if r > 0 {
            nbrs.push(cur - cols);
        }
        if r + 1 < rows {
            nbrs.push(cur + cols);
        }
        if c > 0 {
            nbrs.push(cur - 1);
        }
        if c + 1 < cols {
            nbrs.push(cur + 1);
        }
        nbrs.retain(|&x| !visited[x]);
        match nbrs.choose(rng) {
            Some(&next) => {
                visited[next] = true;
                edges.push((cur.min(next), cur.max(next)));
                stack.push(next);
            }
            None => {
                stack.pop();
            }
        }
    }
    edges
}

fn place_object<R: Rng + ?Sized>(grid: &mut Grid<CellClass>, room: &Room, gap: usize, params: &GenParams, rng: &mut R) -> bool {
    for _ in 0..100 {
        let oh = rng.gen_range(params.object_cells.0..=params.object_cells.1);
        let ow = rng.gen_range(params.object_cells.0..=params.object_cells.1);
        if oh + 2 * gap > room.h || ow + 2 * gap > room.w {
            continue;
        }
        let r = room.r0 + gap + rng.gen_range(0..=room.h - oh - 2 * gap);
        let c = room.c0 + gap + rng.gen_range(0..=room.w - ow - 2 * gap);
        if all_free(grid, r - gap, c - gap, oh + 2 * gap, ow + 2 * gap) {
            let class = CellClass::GOALS[rng.gen_range(0..CellClass::GOALS.len())];
            fill(grid, r, c, oh, ow, class);
            return true;
        }
    }
    false
}

pub fn gen_scene<R: Rng + ?Sized>(params: &GenParams, rng: &mut R) -> Result<Scene> {
    params.validate()?;
    let res = params.resolution;
    let t = params.wall_cells;
    let nr = rng.gen_range(params.rows.0..=params.rows.1);
    let nc = rng.gen_range(params.cols.0..=params.cols.1);
    let mut side = || ((rng.gen_range(params.room_size.0..=params.room_size.1)) / res).round() as usize;
    let widths: Vec<usize> = (0..nc).map(|_| side()).collect();
    let heights: Vec<usize> = (0..nr).map(|_| side()).collect();
    let width = widths.iter().sum::<usize>() + (nc + 1) * t;
    let height = heights.iter().sum::<usize>() + (nr + 1) * t;
    let mut grid = Grid::filled(width, height, CellClass::Wall);

    let mut rooms = Vec::new();
    let mut r0 = t;
    for &h in &heights {
        let mut c0 = t;
        for &w in &widths {
            fill(&mut grid, r0, c0, h, w, CellClass::Free);
            rooms.push(Room { r0, c0, h, w });
            c0 += w + t;
        }
        r0 += h + t;
    }

    let door = (params.door_width / res).round() as usize;
    let inset = (0.3 / res).round() as usize;
    for (a, b) in spanning_tree(nr, nc, rng) {
        let ra = &rooms[a];
        if a / nc == b / nc {
            // side by side: door in the vertical wall between them
            let start = ra.r0 + rng.gen_range(inset..=ra.h - door - inset);
            fill(&mut grid, start, ra.c0 + ra.w, door, t, CellClass::Free);
        } else {
            let start = ra.c0 + rng.gen_range(inset..=ra.w - door - inset);
            fill(&mut grid, ra.r0 + ra.h, start, t, door, CellClass::Free);
        }
    }

    let gap = (params.clearance / res).ceil() as usize;
    for room in &rooms {
        let count = rng.gen_range(params.objects_per_room.0..=params.objects_per_room.1);
        let before = grid.clone();
        let mut done = false;
        // An early object in the middle can leave no room for the rest, so
        // the whole room is retried.
        for _ in 0..20 {
            grid = before.clone();
            if (0..count).all(|_| place_object(&mut grid, room, gap, params, rng)) {
                done = true;
                break;
            }
        }
        if !done {
            return Err(Error::Infeasible(format!(
                "could not place {count} objects in a {:.1} x {:.1} m room",
                room.w as f64 * res,
                room.h as f64 * res
            )));
        }
    }

    let scene = Scene::new(grid, res)?;
    if !free_space_connected(&scene) {
        return Err(Error::Infeasible("free space is not connected".into()));
    }
    Ok(scene)
}

/// Free cells whose surroundings within `radius` meters are free too.
fn clear_cells(scene: &Scene, radius: f64) -> Vec<Cell> {
    let k = (radius / scene.resolution()).ceil() as i32;
    scene
        .grid()
        .cells()
        .filter(|c| {
            (-k..=k).all(|dr| (-k..=k).all(|dc| scene.is_free_cell(Cell::new(c.row + dr, c.col + dc))))
        })
        .collect()
}

/// Samples episodes with a clear start. A share `absent` of them asks for a
/// class missing from the scene (when there is one); the rest pick a
/// present class uniformly and start outside its success region.
pub fn gen_episodes<R: Rng + ?Sized>(scene: &Scene, name: &str, n: usize, absent: f64, rng: &mut R) -> Result<Vec<EpisodeSpec>> {
    let starts = clear_cells(scene, 0.3);
    if starts.is_empty() {
        return Err(Error::Infeasible(format!("{name}: no clear start cell")));
    }
    let present: Vec<CellClass> = CellClass::GOALS.iter().copied().filter(|c| scene.contains_class(*c)).collect();
    let missing: Vec<CellClass> = CellClass::GOALS.iter().copied().filter(|c| !scene.contains_class(*c)).collect();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let want_absent = !missing.is_empty() && (present.is_empty() || rng.gen::<f64>() < absent);
        let goal = if want_absent {
            *missing.choose(rng).expect("non-empty")
        } else {
            *present.choose(rng).expect("non-empty")
        };
        let field = (!want_absent).then(|| GeodesicField::new(scene, goal, SUCCESS_RADIUS));
        let mut chosen = None;
        for _ in 0..1000 {
            let cell = *starts.choose(rng).expect("non-empty");
            let ok = match &field {
                None => true,
                Some(f) => f.distance_cell(cell).is_some_and(|d| d > 0.5),
            };
            if ok {
                chosen = Some(cell);
                break;
            }
        }
        let cell = chosen.ok_or_else(|| Error::Infeasible(format!("{name}: no start outside the goal region")))?;
        let (x, y) = scene.center_of(cell);
        out.push(EpisodeSpec {
            scene: name.to_string(),
            start: Pose::new(x, y, (rng.gen_range(0..12) * 30) as f64),
            goal,
            optimal_length: None,
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteParams {
    pub scenes: usize,
    pub episodes_per_scene: usize,
    /// Share of goal-absent episodes.
    pub absent: f64,
    pub gen: GenParams,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self {
            scenes: 10,
            episodes_per_scene: 5,
            absent: 0.0,
            gen: GenParams::default(),
        }
    }
}

/// Scene files and their episode file, all as text.
pub struct GeneratedSuite {
    pub scenes: Vec<(String, Scene)>,
    pub episodes: Vec<EpisodeSpec>,
}

impl GeneratedSuite {
    pub fn episodes_text(&self) -> String {
        self.episodes.iter().map(|e| format_episode(e) + "\n").collect()
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, scene) in &self.scenes {
            let p = dir.join(name);
            fs::write(&p, scene.to_text()).map_err(|e| Error::io(&p, e))?;
        }
        let p = dir.join("episodes.txt");
        fs::write(&p, self.episodes_text()).map_err(|e| Error::io(&p, e))
    }
}

/// Scene `i` and its episodes depend only on `(seed, i)`.
pub fn gen_suite(params: &SuiteParams, seed: u64) -> Result<GeneratedSuite> {
    let mut scenes = Vec::new();
    let mut episodes = Vec::new();
    for i in 0..params.scenes {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[i as u64]));
        let scene = gen_scene(&params.gen, &mut rng)?;
        let name = format!("scene_{i:03}.txt");
        episodes.extend(gen_episodes(&scene, &name, params.episodes_per_scene, params.absent, &mut rng)?);
        scenes.push((name, scene));
    }
    Ok(GeneratedSuite { scenes, episodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::load_scene;

    #[test]
    fn one_room_without_objects_is_empty() {
        let p = GenParams {
            rows: (1, 1),
            cols: (1, 1),
            objects_per_room: (0, 0),
            ..GenParams::default()
        };
        let s = gen_scene(&p, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(s.objects().is_empty());
        let g = s.grid();
        let interior = g.cells().filter(|c| g[*c] == CellClass::Free).count();
        let walls = g.cells().filter(|c| g[*c] == CellClass::Wall).count();
        assert_eq!(interior + walls, g.width() * g.height());
        assert_eq!(interior, (g.width() - 4) * (g.height() - 4));
    }

    #[test]
    fn fixed_seed_gives_identical_bytes() {
        let a = gen_suite(&SuiteParams::default(), 9).unwrap();
        let b = gen_suite(&SuiteParams::default(), 9).unwrap();
        assert_eq!(a.episodes_text(), b.episodes_text());
        for ((_, x), (_, y)) in a.scenes.iter().zip(&b.scenes) {
            assert_eq!(x.to_text(), y.to_text());
        }
        let c = gen_suite(&SuiteParams::default(), 10).unwrap();
        assert_ne!(a.scenes[0].1.to_text(), c.scenes[0].1.to_text());
    }

    #[test]
    fn generated_scenes_are_connected_and_parse_back() {
        let p = GenParams {
            rows: (1, 3),
            cols: (1, 3),
            objects_per_room: (0, 3),
            ..GenParams::default()
        };
        for seed in 0..100 {
            let s = gen_scene(&p, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert!(free_space_connected(&s), "seed {seed}");
            assert_eq!(load_scene(&s.to_text()).unwrap(), s);
        }
    }

    #[test]
    fn overcrowded_rooms_are_infeasible() {
        let p = GenParams {
            objects_per_room: (30, 30),
            ..GenParams::default()
        };
        assert!(matches!(gen_scene(&p, &mut ChaCha8Rng::seed_from_u64(0)), Err(Error::Infeasible(_))));
    }

    #[test]
    fn episodes_start_clear_and_outside_success_region() {
        let suite = gen_suite(&SuiteParams { absent: 0.5, ..SuiteParams::default() }, 3).unwrap();
        assert_eq!(suite.episodes.len(), 50);
        let mut absent = 0;
        for ep in &suite.episodes {
            let scene = &suite.scenes.iter().find(|(n, _)| *n == ep.scene).unwrap().1;
            assert!(scene.is_free_point(ep.start.x, ep.start.y));
            match crate::world::shortest_path_length(scene, ep.start, ep.goal) {
                Some(d) => assert!(d > 0.5),
                None => {
                    assert!(!scene.contains_class(ep.goal));
                    absent += 1;
                }
            }
        }
        assert!(absent > 5 && absent < 45, "{absent}");
    }
}
