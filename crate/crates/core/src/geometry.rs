//! Planar points and axis-aligned rectangles of the task space.

use serde::{Deserialize, Serialize};

/// A landing point on the water plane, in normalized task-space units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Outcome {
    pub x: f64,
    pub y: f64,
}

/// Goals are outcomes the learner is trying to produce.
pub type Goal = Outcome;

impl Outcome {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Outcome) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &Outcome) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn coord(&self, dim: usize) -> f64 {
        match dim {
            0 => self.x,
            _ => self.y,
        }
    }

    pub fn scaled(&self, factor: f64) -> Outcome {
        Outcome::new(self.x * factor, self.y * factor)
    }
}

/// Closed axis-aligned rectangle `[min.x, max.x] x [min.y, max.y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Outcome,
    pub max: Outcome,
}

impl Rect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            min: Outcome::new(x0, y0),
            max: Outcome::new(x1, y1),
        }
    }

    /// `[-half, half]^2`.
    pub const fn square(half: f64) -> Self {
        Self::new(-half, -half, half, half)
    }

    pub fn lo(&self, dim: usize) -> f64 {
        self.min.coord(dim)
    }

    pub fn hi(&self, dim: usize) -> f64 {
        self.max.coord(dim)
    }

    pub fn width(&self, dim: usize) -> f64 {
        self.hi(dim) - self.lo(dim)
    }

    pub fn area(&self) -> f64 {
        self.width(0) * self.width(1)
    }

    pub fn diameter(&self) -> f64 {
        self.min.distance(&self.max)
    }

    pub fn center(&self) -> Outcome {
        Outcome::new(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
        )
    }

    pub fn contains(&self, p: &Outcome) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn clip(&self, p: &Outcome) -> Outcome {
        Outcome::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
        )
    }

    /// Splits at `cut` along `dim` into `[lo, cut]` and `[cut, hi]`.
    pub fn split(&self, dim: usize, cut: f64) -> (Rect, Rect) {
        let mut left = *self;
        let mut right = *self;
        match dim {
            0 => {
                left.max.x = cut;
                right.min.x = cut;
            }
            _ => {
                left.max.y = cut;
                right.min.y = cut;
            }
        }
        (left, right)
    }
}

/// Regular `n x n` tiling of a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TileGrid {
    pub bounds: Rect,
    pub n: usize,
}

impl TileGrid {
    pub fn new(bounds: Rect, n: usize) -> Self {
        assert!(n > 0, "tile grid needs at least one tile per side");
        Self { bounds, n }
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Tile index of `p`, or `None` when `p` lies outside the grid.
    pub fn tile_of(&self, p: &Outcome) -> Option<usize> {
        if !self.bounds.contains(p) {
            return None;
        }
        let ix = self.axis_cell(0, p.x);
        let iy = self.axis_cell(1, p.y);
        Some(iy * self.n + ix)
    }

    fn axis_cell(&self, dim: usize, v: f64) -> usize {
        let frac = (v - self.bounds.lo(dim)) / self.bounds.width(dim);
        ((frac * self.n as f64) as usize).min(self.n - 1)
    }

    pub fn tile_rect(&self, tile: usize) -> Rect {
        let ix = tile % self.n;
        let iy = tile / self.n;
        let wx = self.bounds.width(0) / self.n as f64;
        let wy = self.bounds.width(1) / self.n as f64;
        let x0 = self.bounds.min.x + ix as f64 * wx;
        let y0 = self.bounds.min.y + iy as f64 * wy;
        Rect::new(x0, y0, x0 + wx, y0 + wy)
    }

    /// Number of distinct tiles hit by `points`.
    pub fn occupied(&self, points: impl IntoIterator<Item = Outcome>) -> usize {
        let mut seen = vec![false; self.len()];
        for p in points {
            if let Some(t) = self.tile_of(&p) {
                seen[t] = true;
            }
        }
        seen.into_iter().filter(|&s| s).count()
    }
}
