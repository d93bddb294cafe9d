//! Sampling grids and composite Simpson quadrature.

use crate::error::{Error, Result};

/// Uniform sampling of `[start, stop]` with `count` points (endpoints included).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite()) {
            return Err(Error::InvalidParameter("grid bounds must be finite".into()));
        }
        if count == 0 {
            return Err(Error::InvalidParameter(
                "grid needs at least one point".into(),
            ));
        }
        if count > 1 && stop <= start {
            return Err(Error::InvalidParameter(
                "grid stop must exceed start".into(),
            ));
        }
        Ok(Grid { start, stop, count })
    }

    pub fn step(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.stop - self.start) / (self.count - 1) as f64
        }
    }

    /// Symmetric grids hit zero exactly at the midpoint.
    pub fn point(&self, i: usize) -> f64 {
        if self.count < 2 {
            return self.start;
        }
        let n = (self.count - 1) as f64;
        let t = i as f64;
        self.start * ((n - t) / n) + self.stop * (t / n)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |i| self.point(i))
    }
}

/// Composite Simpson rule over `[a, b]` with `points` samples. An even
/// point count is bumped to the next odd number.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, points: usize) -> f64 {
    let n = if points < 3 { 3 } else { points | 1 };
    let intervals = n - 1;
    let h = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let x = a + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    acc * h / 3.0
}

/// Shortest round-trip text for a float: plain notation for moderate
/// magnitudes, exponent notation otherwise, and no negative zero.
#[derive(Clone, Copy, Debug)]
pub struct Num(pub f64);

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = if self.0 == 0.0 { 0.0 } else { self.0 };
        if v == 0.0 || !v.is_finite() || (1e-3..1e7).contains(&v.abs()) {
            write!(f, "{v}")
        } else {
            write!(f, "{v:e}")
        }
    }
}

/// Settings for [`simpson_refined`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    /// Initial number of Simpson points.
    pub points: usize,
    /// Stop once successive estimates differ by less than this fraction.
    pub rel_tol: f64,
    /// Maximum number of interval halvings.
    pub max_refinements: u32,
}

impl Quadrature {
    pub const fn new(points: usize, rel_tol: f64) -> Self {
        Quadrature {
            points,
            rel_tol,
            max_refinements: 5,
        }
    }
}

/// Composite Simpson with interval halving until two successive estimates
/// agree to `rel_tol`.
pub fn simpson_refined<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, q: Quadrature) -> f64 {
    let mut n = if q.points < 3 { 3 } else { q.points | 1 };
    let mut prev = simpson(&f, a, b, n);
    for _ in 0..q.max_refinements {
        n = 2 * n - 1;
        let next = simpson(&f, a, b, n);
        let scale = next.abs().max(prev.abs());
        if (next - prev).abs() <= q.rel_tol * scale || scale == 0.0 {
            return next;
        }
        prev = next;
    }
    prev
}
