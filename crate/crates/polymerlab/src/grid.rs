//! Dense centered boxes on `Z^d`.
//!
//! Every lattice sweep in the crate runs over a cube `[-R, R]^d` stored as
//! a flat row-major `Vec<f64>`.  `BoxGrid` owns the index arithmetic;
//! coordinate 0 varies fastest.  Points are carried as fixed-size arrays
//! of length [`MAX_DIM`] with only the first `d` entries meaningful, which
//! keeps hot loops free of heap traffic.

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 5;

/// A lattice point; entries past the active dimension stay zero.
pub type Point = [i32; MAX_DIM];

/// Geometry of a centered cube `[-radius, radius]^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoxGrid {
    d: usize,
    radius: i32,
    side: usize,
    len: usize,
}

impl BoxGrid {
    pub fn new(d: usize, radius: i32) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::InvalidDimension(d));
        }
        if radius < 0 {
            return Err(Error::invalid(format!("negative box radius {radius}")));
        }
        let side = 2 * radius as usize + 1;
        let len = side.checked_pow(d as u32).ok_or_else(|| {
            Error::invalid(format!("box with radius {radius} in d={d} overflows"))
        })?;
        Ok(Self { d, radius, side, len })
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn radius(&self) -> i32 {
        self.radius
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// True when all active coordinates lie inside the box.
    #[inline]
    pub fn contains(&self, x: &Point) -> bool {
        x[..self.d].iter().all(|&c| c.abs() <= self.radius)
    }

    /// Flat index of a point known to be inside the box.
    #[inline]
    pub fn index(&self, x: &Point) -> usize {
        debug_assert!(self.contains(x));
        let mut idx = 0usize;
        for j in (0..self.d).rev() {
            idx = idx * self.side + (x[j] + self.radius) as usize;
        }
        idx
    }

    /// Flat index, or `None` when the point falls outside.
    #[inline]
    pub fn checked_index(&self, x: &Point) -> Option<usize> {
        if self.contains(x) {
            Some(self.index(x))
        } else {
            None
        }
    }

    /// Point corresponding to a flat index.
    pub fn point_of(&self, mut idx: usize) -> Point {
        debug_assert!(idx < self.len);
        let mut x = [0i32; MAX_DIM];
        for item in x.iter_mut().take(self.d) {
            *item = (idx % self.side) as i32 - self.radius;
            idx /= self.side;
        }
        x
    }

    /// Visit every point together with its flat index, coordinate 0
    /// fastest.  The closure receives `(index, point)`.
    pub fn for_each(&self, mut f: impl FnMut(usize, &Point)) {
        let mut x = [0i32; MAX_DIM];
        for item in x.iter_mut().take(self.d) {
            *item = -self.radius;
        }
        for idx in 0..self.len {
            f(idx, &x);
            // Odometer increment over the active coordinates.
            for item in x.iter_mut().take(self.d) {
                if *item < self.radius {
                    *item += 1;
                    break;
                }
                *item = -self.radius;
            }
        }
    }

    /// Sum of `|x_j|` over active coordinates — the l1 norm used for
    /// parity checks.
    #[inline]
    pub fn l1_norm(&self, x: &Point) -> i64 {
        x[..self.d].iter().map(|&c| c.unsigned_abs() as i64).sum()
    }

    /// Visit every x0-row of the centered sub-cube `[-r, r]^d`: the
    /// closure receives the flat index of the row's first cell
    /// (`x0 = -r`) and the row's slow coordinates (entry 0 is the row
    /// start, not a per-cell value).  Row length is `2r + 1`.  This is
    /// the iteration shape of every hot sweep in the crate.
    pub fn for_each_row(&self, r: i32, mut f: impl FnMut(usize, &Point)) {
        debug_assert!(r >= 0 && r <= self.radius);
        let mut x = [0i32; MAX_DIM];
        for item in x.iter_mut().take(self.d) {
            *item = -r;
        }
        loop {
            f(self.index(&x), &x);
            let mut j = 1;
            loop {
                if j == self.d {
                    return;
                }
                if x[j] < r {
                    x[j] += 1;
                    break;
                }
                x[j] = -r;
                j += 1;
            }
        }
    }
}
