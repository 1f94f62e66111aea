//! Maze phenotypes and their evaluation: connectivity-based quality,
//! path-length and symmetry descriptors, and the scalar archive fitness.
//!
//! All metrics treat the maze as a 4-connected graph of open tiles.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A rectangular grid of wall/open tiles.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u8>>", into = "Vec<Vec<u8>>")]
pub struct Maze {
    height: usize,
    width: usize,
    /// Row-major; `true` = open (traversable).
    tiles: Vec<bool>,
}

impl Maze {
    pub fn new(height: usize, width: usize, tiles: Vec<bool>) -> Result<Self> {
        if tiles.len() != height * width {
            return Err(Error::Dimension {
                expected: height * width,
                got: tiles.len(),
            });
        }
        Ok(Self {
            height,
            width,
            tiles,
        })
    }

    pub fn filled(height: usize, width: usize, open: bool) -> Self {
        Self {
            height,
            width,
            tiles: vec![open; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn is_open(&self, row: usize, col: usize) -> bool {
        self.tiles[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, open: bool) {
        self.tiles[row * self.width + col] = open;
    }

    pub fn open_count(&self) -> usize {
        self.tiles.iter().filter(|&&t| t).count()
    }

    /// Parses the text form: one line per row, '#' = wall, '.' = open.
    pub fn parse(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
        if rows.is_empty() {
            return Err(Error::Parse("empty maze text".into()));
        }
        let width = rows[0].chars().count();
        let mut tiles = Vec::with_capacity(rows.len() * width);
        for (i, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::Parse(format!("row {i} has inconsistent width")));
            }
            for ch in row.chars() {
                match ch {
                    '.' => tiles.push(true),
                    '#' => tiles.push(false),
                    other => return Err(Error::Parse(format!("bad tile char {other:?}"))),
                }
            }
        }
        Maze::new(rows.len(), width, tiles)
    }

    /// A single-width corridor winding through the whole 16x16 grid; its
    /// two ends are 144 steps apart, the extreme of the path-length axis.
    pub fn corridor_16x16() -> Self {
        const MOVES: &str = "RRRRRRRRRRRRRRRDDDDDDDDDDLDLDLDLDLDLLLLLLLLLLUUU\
                             RRDRRRRRRRURURURURUULLDLDLDLDLLLLLUURRRRURURURUR\
                             RRUUULLDLLDLDLDLDLLLUURRURUULLDLLULLDDRDDLDDRDDL";
        let mut maze = Maze::filled(16, 16, false);
        let (mut r, mut c) = (0usize, 0usize);
        maze.set(r, c, true);
        for mv in MOVES.chars() {
            match mv {
                'R' => c += 1,
                'L' => c -= 1,
                'D' => r += 1,
                'U' => r -= 1,
                _ => unreachable!("corridor moves are RDLU only"),
            }
            maze.set(r, c, true);
        }
        maze
    }

    fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (row, col) = (idx / self.width, idx % self.width);
        let (h, w) = (self.height, self.width);
        [
            (row > 0).then(|| idx - w),
            (row + 1 < h).then(|| idx + w),
            (col > 0).then(|| idx - 1),
            (col + 1 < w).then(|| idx + 1),
        ]
        .into_iter()
        .flatten()
    }
}

impl fmt::Display for Maze {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in 0..self.height {
            for col in 0..self.width {
                f.write_str(if self.is_open(row, col) { "." } else { "#" })?;
            }
            f.write_str("\n")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Maze {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Maze({}x{})\n{}", self.height, self.width, self)
    }
}

impl From<Maze> for Vec<Vec<u8>> {
    fn from(m: Maze) -> Self {
        (0..m.height)
            .map(|i| (0..m.width).map(|j| u8::from(m.is_open(i, j))).collect())
            .collect()
    }
}

impl TryFrom<Vec<Vec<u8>>> for Maze {
    type Error = Error;

    fn try_from(rows: Vec<Vec<u8>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Parse("empty maze rows".into()));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Parse("ragged maze rows".into()));
        }
        let tiles = rows.iter().flatten().map(|&v| v != 0).collect();
        Maze::new(rows.len(), width, tiles)
    }
}

/// Behavioral coordinates of a maze: (longest shortest path, symmetry).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub path_length: f64,
    pub symmetry: f64,
}

/// Number of 4-connected components of open tiles; 0 iff all walls.
pub fn connected_components(maze: &Maze) -> usize {
    let n = maze.height * maze.width;
    let mut seen = vec![false; n];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if !maze.tiles[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            for nb in maze.neighbors(idx) {
                if maze.tiles[nb] && !seen[nb] {
                    seen[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
    }
    count
}

/// Maximum over all mutually reachable open-tile pairs of the shortest
/// path length (edge count). Pairs in different components are excluded;
/// 0 when no two open tiles are connected.
pub fn max_min_path(maze: &Maze) -> f64 {
    let n = maze.height * maze.width;
    let mut best = 0u32;
    let mut dist = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    for start in 0..n {
        if !maze.tiles[start] {
            continue;
        }
        dist.iter_mut().for_each(|d| *d = u32::MAX);
        dist[start] = 0;
        queue.clear();
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            let d = dist[idx];
            best = best.max(d);
            for nb in maze.neighbors(idx) {
                if maze.tiles[nb] && dist[nb] == u32::MAX {
                    dist[nb] = d + 1;
                    queue.push_back(nb);
                }
            }
        }
    }
    f64::from(best)
}

/// Mirror symmetry averaged over the horizontal and vertical axes: the
/// count of column-mirror tile pairs that match plus the count of
/// row-mirror pairs that match, divided by two.
pub fn symmetry(maze: &Maze) -> f64 {
    let (h, w) = (maze.height, maze.width);
    let mut col_pairs = 0usize;
    for row in 0..h {
        for col in 0..w / 2 {
            if maze.is_open(row, col) == maze.is_open(row, w - 1 - col) {
                col_pairs += 1;
            }
        }
    }
    let mut row_pairs = 0usize;
    for row in 0..h / 2 {
        for col in 0..w {
            if maze.is_open(row, col) == maze.is_open(h - 1 - row, col) {
                row_pairs += 1;
            }
        }
    }
    (col_pairs + row_pairs) as f64 / 2.0
}

/// Scalar quality in [0, 1]: the reciprocal of the component count, so a
/// fully connected maze scores 1 and an all-wall maze scores 0.
pub fn fitness(maze: &Maze) -> f64 {
    match connected_components(maze) {
        0 => 0.0,
        cc => 1.0 / cc as f64,
    }
}

pub fn descriptor(maze: &Maze) -> Descriptor {
    Descriptor {
        path_length: max_min_path(maze),
        symmetry: symmetry(maze),
    }
}
