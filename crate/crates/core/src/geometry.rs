//! Small 2D vector type and helpers for the periodic unit square.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Counter-clockwise rotation by `theta` radians.
    pub fn rotate(self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    /// Wraps both coordinates into `[0, 1)`.
    pub fn wrapped(self) -> Self {
        Self::new(wrap_unit(self.x), wrap_unit(self.y))
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

/// Wraps a coordinate into `[0, 1)`.
#[inline]
pub fn wrap_unit(v: f64) -> f64 {
    if (0.0..1.0).contains(&v) {
        return v;
    }
    let w = if (-1.0..0.0).contains(&v) {
        v + 1.0
    } else if (1.0..2.0).contains(&v) {
        v - 1.0
    } else {
        v.rem_euclid(1.0)
    };
    // tiny negatives round up to exactly 1.0
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Maps a coordinate difference to its minimum-image value in `[-0.5, 0.5)`.
#[inline]
pub fn min_image(d: f64) -> f64 {
    if (-0.5..0.5).contains(&d) {
        d
    } else if (0.5..1.5).contains(&d) {
        d - 1.0
    } else if (-1.5..-0.5).contains(&d) {
        d + 1.0
    } else {
        d - (d + 0.5).floor()
    }
}

/// Minimum-image displacement from `from` to `to` on the periodic unit square.
#[inline]
pub fn periodic_offset(from: Vec2, to: Vec2) -> Vec2 {
    Vec2::new(min_image(to.x - from.x), min_image(to.y - from.y))
}

#[inline]
pub fn periodic_distance(a: Vec2, b: Vec2) -> f64 {
    periodic_offset(a, b).norm()
}

/// Bilinear interpolation of a row-major periodic `n x n` grid whose node
/// `(i, j)` sits at `(i / n, j / n)`.
#[inline]
pub fn bilinear_periodic(grid: &[f64], n: usize, p: Vec2) -> f64 {
    let (i0, i1, tx) = cell_coords(p.x, n);
    let (j0, j1, ty) = cell_coords(p.y, n);
    let r0 = j0 * n;
    let r1 = j1 * n;
    let bottom = grid[r0 + i0] + tx * (grid[r0 + i1] - grid[r0 + i0]);
    let top = grid[r1 + i0] + tx * (grid[r1 + i1] - grid[r1 + i0]);
    bottom + ty * (top - bottom)
}

/// Bilinear interpolation clamped to the range of the four surrounding
/// nodes, so rounding can never create a new extremum.
#[inline]
pub fn bilinear_monotone(grid: &[f64], n: usize, p: Vec2) -> f64 {
    let (i0, i1, tx) = cell_coords(p.x, n);
    let (j0, j1, ty) = cell_coords(p.y, n);
    let r0 = j0 * n;
    let r1 = j1 * n;
    let (a, b, c, d) = (grid[r0 + i0], grid[r0 + i1], grid[r1 + i0], grid[r1 + i1]);
    let bottom = a + tx * (b - a);
    let top = c + tx * (d - c);
    let lo = a.min(b).min(c.min(d));
    let hi = a.max(b).max(c.max(d));
    (bottom + ty * (top - bottom)).clamp(lo, hi)
}

/// Bilinear interpolation of two interleaved periodic grids at once.
#[inline]
pub fn bilinear_periodic_pair(grid: &[[f64; 2]], n: usize, p: Vec2) -> [f64; 2] {
    let (i0, i1, tx) = cell_coords(p.x, n);
    let (j0, j1, ty) = cell_coords(p.y, n);
    let r0 = j0 * n;
    let r1 = j1 * n;
    let mut out = [0.0; 2];
    for c in 0..2 {
        let bottom = grid[r0 + i0][c] + tx * (grid[r0 + i1][c] - grid[r0 + i0][c]);
        let top = grid[r1 + i0][c] + tx * (grid[r1 + i1][c] - grid[r1 + i0][c]);
        out[c] = bottom + ty * (top - bottom);
    }
    out
}

/// Lower node index, upper node index and fractional offset of coordinate
/// `v` on an `n`-node periodic unit axis.
#[inline]
fn cell_coords(v: f64, n: usize) -> (usize, usize, f64) {
    let f = v * n as f64;
    let fl = f.floor();
    let n_i = n as i64;
    let mut i = fl as i64;
    if i < 0 {
        i += n_i;
    } else if i >= n_i {
        i -= n_i;
    }
    if !(0..n_i).contains(&i) {
        if !f.is_finite() || f.abs() > 1e15 {
            return cell_coords(wrap_unit(v), n);
        }
        i = i.rem_euclid(n_i);
    }
    let i0 = i as usize;
    let i1 = if i0 + 1 == n { 0 } else { i0 + 1 };
    (i0, i1, f - fl)
}
