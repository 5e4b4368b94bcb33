//! Integer cell coordinates, dense row-major grids and DDA ray traversal.

use std::f64::consts::SQRT_2;

/// Integer grid coordinate. Ordering is lexicographic by (row, col), which
/// is the tie-break order used throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub row: i32,
    pub col: i32,
}

impl Cell {
    pub const fn new(row: i32, col: i32) -> Self {
        Self { row, col }
    }

    /// The four edge-sharing neighbours.
    pub fn neighbors4(self) -> [Cell; 4] {
        [
            Cell::new(self.row - 1, self.col),
            Cell::new(self.row, self.col - 1),
            Cell::new(self.row, self.col + 1),
            Cell::new(self.row + 1, self.col),
        ]
    }

    /// The eight surrounding cells with their unit step cost (1 or sqrt 2).
    pub fn neighbors8(self) -> [(Cell, f64); 8] {
        let mut out = [(self, 0.0); 8];
        let mut i = 0;
        for dr in -1..=1 {
            for dc in -1..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let cost = if dr != 0 && dc != 0 { SQRT_2 } else { 1.0 };
                out[i] = (Cell::new(self.row + dr, self.col + dc), cost);
                i += 1;
            }
        }
        out
    }

    /// Octile distance in cell units.
    pub fn octile(self, other: Cell) -> f64 {
        let dr = (self.row - other.row).unsigned_abs() as f64;
        let dc = (self.col - other.col).unsigned_abs() as f64;
        let (lo, hi) = if dr < dc { (dr, dc) } else { (dc, dr) };
        hi - lo + SQRT_2 * lo
    }

    /// Euclidean distance in cell units.
    pub fn euclid(self, other: Cell) -> f64 {
        let dr = (self.row - other.row) as f64;
        let dc = (self.col - other.col) as f64;
        dr.hypot(dc)
    }
}

/// Dense row-major 2D grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), width * height, "grid data length mismatch");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row >= 0
            && cell.col >= 0
            && (cell.row as usize) < self.height
            && (cell.col as usize) < self.width
    }

    #[inline]
    pub fn index(&self, cell: Cell) -> usize {
        cell.row as usize * self.width + cell.col as usize
    }

    #[inline]
    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new((index / self.width) as i32, (index % self.width) as i32)
    }

    pub fn get(&self, cell: Cell) -> Option<&T> {
        if self.contains(cell) {
            Some(&self.data[self.index(cell)])
        } else {
            None
        }
    }

    pub fn get_mut(&mut self, cell: Cell) -> Option<&mut T> {
        if self.contains(cell) {
            let i = self.index(cell);
            Some(&mut self.data[i])
        } else {
            None
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.data.len()).map(move |i| self.cell_at(i))
    }
}

impl<T> std::ops::Index<Cell> for Grid<T> {
    type Output = T;
    fn index(&self, cell: Cell) -> &T {
        assert!(self.contains(cell), "cell {cell:?} outside grid");
        &self.data[Grid::index(self, cell)]
    }
}

impl<T> std::ops::IndexMut<Cell> for Grid<T> {
    fn index_mut(&mut self, cell: Cell) -> &mut T {
        assert!(self.contains(cell), "cell {cell:?} outside grid");
        let i = Grid::index(self, cell);
        &mut self.data[i]
    }
}

/// World-to-cell mapping for a grid whose cell (0, 0) has its lower corner
/// at `origin`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub origin_x: f64,
    pub origin_y: f64,
    pub resolution: f64,
}

impl Frame {
    pub fn new(origin_x: f64, origin_y: f64, resolution: f64) -> Self {
        Self {
            origin_x,
            origin_y,
            resolution,
        }
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Cell {
        Cell::new(
            ((y - self.origin_y) / self.resolution).floor() as i32,
            ((x - self.origin_x) / self.resolution).floor() as i32,
        )
    }

    pub fn center_of(&self, cell: Cell) -> (f64, f64) {
        (
            self.origin_x + (cell.col as f64 + 0.5) * self.resolution,
            self.origin_y + (cell.row as f64 + 0.5) * self.resolution,
        )
    }
}

/// One cell visited by a ray, with the ray parameter at which it was entered
/// and left (meters from the ray origin).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayCell {
    pub cell: Cell,
    pub t_enter: f64,
    pub t_exit: f64,
}

/// Amanatides-Woo grid traversal of the ray `origin + t * (cos a, sin a)`
/// for `t` in `[0, max_t]`. Yields cells in visiting order, starting with
/// the cell containing the origin.
pub struct DdaRay {
    cell: Cell,
    step_col: i32,
    step_row: i32,
    t_max_x: f64,
    t_max_y: f64,
    t_delta_x: f64,
    t_delta_y: f64,
    t: f64,
    max_t: f64,
    done: bool,
}

impl DdaRay {
    pub fn new(frame: &Frame, x: f64, y: f64, angle_rad: f64, max_t: f64) -> Self {
        let (dy, dx) = angle_rad.sin_cos();
        let res = frame.resolution;
        let cell = frame.cell_of(x, y);
        let lx = x - frame.origin_x;
        let ly = y - frame.origin_y;

        let (step_col, t_max_x, t_delta_x) = axis_setup(lx, dx, cell.col, res);
        let (step_row, t_max_y, t_delta_y) = axis_setup(ly, dy, cell.row, res);

        Self {
            cell,
            step_col,
            step_row,
            t_max_x,
            t_max_y,
            t_delta_x,
            t_delta_y,
            t: 0.0,
            max_t,
            done: false,
        }
    }
}

fn axis_setup(pos: f64, dir: f64, index: i32, res: f64) -> (i32, f64, f64) {
    const EPS: f64 = 1e-12;
    if dir > EPS {
        let boundary = (index as f64 + 1.0) * res;
        (1, (boundary - pos) / dir, res / dir)
    } else if dir < -EPS {
        let boundary = index as f64 * res;
        (-1, (boundary - pos) / dir, -res / dir)
    } else {
        (0, f64::INFINITY, f64::INFINITY)
    }
}

impl Iterator for DdaRay {
    type Item = RayCell;

    fn next(&mut self) -> Option<RayCell> {
        if self.done {
            return None;
        }
        let t_enter = self.t;
        let cell = self.cell;
        let t_next = self.t_max_x.min(self.t_max_y);
        if t_next >= self.max_t {
            self.done = true;
            return Some(RayCell {
                cell,
                t_enter,
                t_exit: self.max_t,
            });
        }
        // x-crossing wins exact ties
        if self.t_max_x <= self.t_max_y {
            self.cell.col += self.step_col;
            self.t_max_x += self.t_delta_x;
        } else {
            self.cell.row += self.step_row;
            self.t_max_y += self.t_delta_y;
        }
        self.t = t_next.max(0.0);
        Some(RayCell {
            cell,
            t_enter,
            t_exit: self.t,
        })
    }
}
