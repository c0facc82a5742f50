//! Flat-top hexagon grid in axial coordinates.
//!
//! Cells are laid out as an "odd-q" offset rectangle with the y axis pointing
//! north: odd columns sit half a cell higher than even ones. Axial `q` is the
//! column; axial `r = row - floor(col / 2)`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellCoord {
    pub q: i32,
    pub r: i32,
}

impl CellCoord {
    pub const fn new(q: i32, r: i32) -> Self {
        CellCoord { q, r }
    }

    pub fn from_offset(col: i32, row: i32) -> Self {
        CellCoord {
            q: col,
            r: row - col.div_euclid(2),
        }
    }

    /// `(col, row)` in the offset layout.
    pub fn to_offset(self) -> (i32, i32) {
        (self.q, self.r + self.q.div_euclid(2))
    }

    fn offset_by(self, (dq, dr): (i32, i32)) -> Self {
        CellCoord::new(self.q + dq, self.r + dr)
    }
}

impl std::fmt::Display for CellCoord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.q, self.r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    N,
    NE,
    SE,
    S,
    SW,
    NW,
}

impl Direction {
    pub const ALL: [Direction; 6] = [
        Direction::N,
        Direction::NE,
        Direction::SE,
        Direction::S,
        Direction::SW,
        Direction::NW,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Direction> {
        Self::ALL.get(i).copied()
    }

    pub fn axial_delta(self) -> (i32, i32) {
        match self {
            Direction::N => (0, 1),
            Direction::NE => (1, 0),
            Direction::SE => (1, -1),
            Direction::S => (0, -1),
            Direction::SW => (-1, 0),
            Direction::NW => (-1, 1),
        }
    }

    pub fn opposite(self) -> Direction {
        Self::ALL[(self.index() + 3) % 6]
    }

    /// Direction leading from `a` to the adjacent cell `b`, if they touch.
    pub fn between(a: CellCoord, b: CellCoord) -> Option<Direction> {
        let d = (b.q - a.q, b.r - a.r);
        Self::ALL.into_iter().find(|dir| dir.axial_delta() == d)
    }
}

pub fn hex_distance(a: CellCoord, b: CellCoord) -> u32 {
    let dq = a.q - b.q;
    let dr = a.r - b.r;
    ((dq.abs() + dr.abs() + (dq + dr).abs()) / 2) as u32
}

/// Rectangular window of the infinite hex lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub cols: u32,
    pub rows: u32,
}

impl Grid {
    pub fn new(cols: u32, rows: u32) -> Self {
        Grid { cols, rows }
    }

    pub fn len(&self) -> usize {
        (self.cols * self.rows) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, c: CellCoord) -> bool {
        let (col, row) = c.to_offset();
        (0..self.cols as i32).contains(&col) && (0..self.rows as i32).contains(&row)
    }

    /// Row-major index; also the BS index of the cell.
    pub fn index_of(&self, c: CellCoord) -> Option<usize> {
        if !self.contains(c) {
            return None;
        }
        let (col, row) = c.to_offset();
        Some(row as usize * self.cols as usize + col as usize)
    }

    pub fn cell(&self, index: usize) -> Option<CellCoord> {
        if index >= self.len() {
            return None;
        }
        let cols = self.cols as usize;
        Some(CellCoord::from_offset((index % cols) as i32, (index / cols) as i32))
    }

    pub fn cells(&self) -> impl Iterator<Item = CellCoord> + '_ {
        (0..self.len()).map(move |i| self.cell(i).expect("index in range"))
    }

    /// Adjacent cell in `dir`; moves that would leave the grid stay put.
    pub fn neighbor(&self, c: CellCoord, dir: Direction) -> CellCoord {
        let n = c.offset_by(dir.axial_delta());
        if self.contains(n) {
            n
        } else {
            c
        }
    }

    /// On-grid neighbors, in direction order.
    pub fn neighbors(&self, c: CellCoord) -> impl Iterator<Item = (Direction, CellCoord)> + '_ {
        Direction::ALL.into_iter().filter_map(move |d| {
            let n = c.offset_by(d.axial_delta());
            self.contains(n).then_some((d, n))
        })
    }

    pub fn max_distance(&self) -> u32 {
        let cells: Vec<_> = self.cells().collect();
        cells
            .iter()
            .flat_map(|a| cells.iter().map(move |b| hex_distance(*a, *b)))
            .max()
            .unwrap_or(0)
    }
}

/// Ground position of a cell center for circumradius `radius_m`.
pub fn cell_center(c: CellCoord, radius_m: f64) -> (f64, f64) {
    let (col, row) = c.to_offset();
    let x = 1.5 * radius_m * col as f64;
    let y = 3f64.sqrt() * radius_m * (row as f64 + 0.5 * col.rem_euclid(2) as f64);
    (x, y)
}

/// Point-in-hexagon test for a flat-top hexagon centred at the origin.
pub fn inside_hexagon(dx: f64, dy: f64, radius_m: f64) -> bool {
    let (x, y) = (dx.abs(), dy.abs());
    let h = 3f64.sqrt() / 2.0 * radius_m;
    y <= h && 3f64.sqrt() * x + y <= 3f64.sqrt() * radius_m
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    fn bfs_distance(grid: &Grid, a: CellCoord, b: CellCoord) -> u32 {
        let mut dist = vec![u32::MAX; grid.len()];
        let mut queue = VecDeque::from([a]);
        dist[grid.index_of(a).unwrap()] = 0;
        while let Some(c) = queue.pop_front() {
            let dc = dist[grid.index_of(c).unwrap()];
            for (_, n) in grid.neighbors(c) {
                let i = grid.index_of(n).unwrap();
                if dist[i] == u32::MAX {
                    dist[i] = dc + 1;
                    queue.push_back(n);
                }
            }
        }
        dist[grid.index_of(b).unwrap()]
    }

    #[test]
    fn offset_round_trip() {
        for col in -3..8 {
            for row in -3..8 {
                assert_eq!(CellCoord::from_offset(col, row).to_offset(), (col, row));
            }
        }
    }

    #[test]
    fn formula_matches_bfs_on_default_grid() {
        let g = Grid::new(5, 5);
        for a in g.cells() {
            for b in g.cells() {
                assert_eq!(hex_distance(a, b), bfs_distance(&g, a, b), "{a} {b}");
            }
        }
        let corner = g.cell(0).unwrap();
        let opposite = g.cell(24).unwrap();
        assert_eq!(hex_distance(corner, opposite), 6);
    }

    #[test]
    fn identity_and_adjacency() {
        let g = Grid::new(5, 5);
        let c = CellCoord::from_offset(2, 2);
        assert_eq!(hex_distance(c, c), 0);
        for (_, n) in g.neighbors(c) {
            assert_eq!(hex_distance(c, n), 1);
        }
    }

    #[test]
    fn inverse_moves_and_interior_degree() {
        let g = Grid::new(5, 5);
        for c in g.cells() {
            let (col, row) = c.to_offset();
            let interior = col > 0 && col < 4 && row > 0 && row < 4;
            if !interior {
                continue;
            }
            let ns: std::collections::HashSet<_> = g.neighbors(c).map(|(_, n)| n).collect();
            assert_eq!(ns.len(), 6);
            for d in Direction::ALL {
                assert_eq!(g.neighbor(g.neighbor(c, d), d.opposite()), c);
            }
        }
    }

    #[test]
    fn moves_off_the_top_edge_clamp() {
        let g = Grid::new(5, 5);
        let top = CellCoord::from_offset(0, 4);
        assert_eq!(g.neighbor(top, Direction::N), top);
        let corner = g.cell(0).unwrap();
        assert_eq!(g.neighbor(corner, Direction::S), corner);
        assert_eq!(g.neighbor(corner, Direction::SW), corner);
    }

    #[test]
    fn neighbors_are_geometrically_adjacent() {
        let g = Grid::new(5, 5);
        let r = 100.0;
        for c in g.cells() {
            let (x0, y0) = cell_center(c, r);
            for (_, n) in g.neighbors(c) {
                let (x1, y1) = cell_center(n, r);
                let d = (x1 - x0).hypot(y1 - y0);
                assert!((d - 3f64.sqrt() * r).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn direction_between_inverts_delta() {
        let c = CellCoord::new(1, 1);
        for d in Direction::ALL {
            let (dq, dr) = d.axial_delta();
            assert_eq!(Direction::between(c, CellCoord::new(1 + dq, 1 + dr)), Some(d));
        }
        assert_eq!(Direction::between(c, CellCoord::new(3, 3)), None);
    }

    #[test]
    fn hexagon_membership() {
        assert!(inside_hexagon(0.0, 0.0, 1.0));
        assert!(inside_hexagon(0.99, 0.0, 1.0));
        assert!(!inside_hexagon(0.0, 0.9, 1.0));
        assert!(!inside_hexagon(0.9, 0.5, 1.0));
    }
}
