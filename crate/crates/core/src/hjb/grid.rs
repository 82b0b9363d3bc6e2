use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform partition `0 = x_0 < ... < x_n = l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    l: f64,
    n: usize,
}

impl Grid {
    pub fn new(l: f64, n: usize) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidParameter {
                name: "l",
                value: l,
                reason: "right endpoint must be finite and > 0",
            });
        }
        if n < 2 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: n as f64,
                reason: "need at least 2 intervals",
            });
        }
        Ok(Self { l, n })
    }

    /// Grid over `[0, l]` with spacing `dx` (rounded to the nearest whole number of intervals).
    pub fn with_spacing(l: f64, dx: f64) -> Result<Self> {
        Self::new(l, (l / dx).round() as usize)
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    /// Number of intervals.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.l / self.n as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i == self.n {
            self.l
        } else {
            i as f64 * self.dx()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(move |i| self.x(i))
    }

    /// Index of the last node with `x_i <= x`, clamped to the grid.
    pub fn locate(&self, x: f64) -> usize {
        if x <= 0.0 {
            return 0;
        }
        ((x / self.dx()).floor() as usize).min(self.n)
    }
}
