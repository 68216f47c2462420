//! Planar geometry and the mapping between the arena and the lattice.
//!
//! Lattice indices are 1-based, `i` along x and `j` along y. Flat storage is
//! row-major with rows indexed by `j`: `flat = (j - 1) * n + (i - 1)`.

use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product; positive when `o` is counterclockwise of `self`.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.norm_sq())
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Counterclockwise normal of the same length.
    pub fn perp_ccw(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// Clockwise normal of the same length.
    pub fn perp_cw(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// 1-based lattice coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridIndex {
    pub i: usize,
    pub j: usize,
}

impl GridIndex {
    pub const fn new(i: usize, j: usize) -> Self {
        GridIndex { i, j }
    }
}

/// Square arena of side `side` meters discretized into `n × n` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMapping {
    side: f64,
    n: usize,
}

impl Default for GridMapping {
    fn default() -> Self {
        GridMapping { side: 8.0, n: 80 }
    }
}

impl GridMapping {
    pub fn new(side: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("lattice side n must be at least 2"));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::invalid("arena side must be positive and finite"));
        }
        Ok(GridMapping { side, n })
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cell_size(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.is_finite() && p.x >= 0.0 && p.y >= 0.0 && p.x <= self.side && p.y <= self.side
    }

    pub fn world_to_grid(&self, p: Vec2) -> Result<GridIndex> {
        if !self.contains(p) {
            return Err(Error::OutOfArena { x: p.x, y: p.y });
        }
        let cs = self.cell_size();
        let clamp = |v: f64| (libm::floor(v / cs) as usize + 1).clamp(1, self.n);
        Ok(GridIndex::new(clamp(p.x), clamp(p.y)))
    }

    pub fn grid_to_world(&self, g: GridIndex) -> Result<Vec2> {
        self.check(g)?;
        let cs = self.cell_size();
        Ok(Vec2::new((g.i as f64 - 0.5) * cs, (g.j as f64 - 0.5) * cs))
    }

    pub fn check(&self, g: GridIndex) -> Result<()> {
        if g.i == 0 || g.j == 0 || g.i > self.n || g.j > self.n {
            return Err(Error::BadIndex { i: g.i, j: g.j, n: self.n });
        }
        Ok(())
    }

    pub fn flat(&self, g: GridIndex) -> usize {
        (g.j - 1) * self.n + (g.i - 1)
    }

    pub fn unflat(&self, k: usize) -> GridIndex {
        GridIndex::new(k % self.n + 1, k / self.n + 1)
    }

    /// Center of a flat-indexed cell.
    pub fn center(&self, k: usize) -> Vec2 {
        let cs = self.cell_size();
        Vec2::new(((k % self.n) as f64 + 0.5) * cs, ((k / self.n) as f64 + 0.5) * cs)
    }

    /// Continuous lattice coordinates where cell centers sit on integers
    /// (0-based): the center of flat cell `k` maps to `(k % n, k / n)`.
    pub fn to_lattice(&self, p: Vec2) -> (f64, f64) {
        let cs = self.cell_size();
        (p.x / cs - 0.5, p.y / cs - 0.5)
    }

    pub fn from_lattice(&self, u: f64, v: f64) -> Vec2 {
        let cs = self.cell_size();
        Vec2::new((u + 0.5) * cs, (v + 0.5) * cs)
    }

    /// Flat indices of cells whose centers lie strictly inside the disc.
    pub fn disc_cells(&self, center: Vec2, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_disc_cell(center, radius, |k| out.push(k));
        out
    }

    pub(crate) fn for_each_disc_cell(&self, center: Vec2, radius: f64, mut f: impl FnMut(usize)) {
        if !(radius > 0.0) || !center.is_finite() {
            return;
        }
        let cs = self.cell_size();
        let n = self.n as i64;
        let lo = |c: f64| (libm::floor((c - radius) / cs - 0.5) as i64).max(0);
        let hi = |c: f64| (libm::ceil((c + radius) / cs - 0.5) as i64).min(n - 1);
        let r2 = radius * radius;
        for b in lo(center.y)..=hi(center.y) {
            let dy = (b as f64 + 0.5) * cs - center.y;
            for a in lo(center.x)..=hi(center.x) {
                let dx = (a as f64 + 0.5) * cs - center.x;
                if dx * dx + dy * dy < r2 {
                    f((b * n + a) as usize);
                }
            }
        }
    }

    /// Configuration-space footprint of a disc obstacle: cells whose centers
    /// lie within `radius + agent_radius` of `center`.
    pub fn inflate_footprint(&self, center: Vec2, radius: f64, agent_radius: f64) -> Vec<GridIndex> {
        self.disc_cells(center, radius + agent_radius).into_iter().map(|k| self.unflat(k)).collect()
    }

    /// Minkowski sum of an axis-aligned rectangle and a disc of `agent_radius`.
    pub fn rect_cells(&self, min: Vec2, max: Vec2, agent_radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        for k in 0..self.len() {
            let c = self.center(k);
            let dx = (min.x - c.x).max(c.x - max.x).max(0.0);
            let dy = (min.y - c.y).max(c.y - max.y).max(0.0);
            let inside = c.x >= min.x && c.x <= max.x && c.y >= min.y && c.y <= max.y;
            if inside || dx * dx + dy * dy < agent_radius * agent_radius {
                out.push(k);
            }
        }
        out
    }
}
