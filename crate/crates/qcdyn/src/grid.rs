//! Spatial and phase-space grids.
//!
//! Every field in this crate carries the grid it lives on; operations between
//! fields on different grids are rejected rather than silently mixed.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// `dx = (max - min) / n`, point `max` excluded (wraps onto `min`).
    Periodic,
    /// `dx = (max - min) / (n - 1)`, endpoints included.
    Bounded,
}

/// Uniform 1D grid. Also used for momentum axes (same structure, momentum units).
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    min: f64,
    max: f64,
    n: usize,
    boundary: Boundary,
    dx: f64,
}

impl SpatialGrid {
    pub fn new(min: f64, max: f64, n: usize, boundary: Boundary) -> Result<Self> {
        if !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidGrid(format!("need max > min, got [{min}, {max}]")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need n >= 2, got {n}")));
        }
        let dx = match boundary {
            Boundary::Periodic => (max - min) / n as f64,
            Boundary::Bounded => (max - min) / (n - 1) as f64,
        };
        Ok(SpatialGrid { min, max, n, boundary, dx })
    }

    pub fn periodic(min: f64, max: f64, n: usize) -> Result<Self> {
        Self::new(min, max, n, Boundary::Periodic)
    }

    pub fn bounded(min: f64, max: f64, n: usize) -> Result<Self> {
        Self::new(min, max, n, Boundary::Bounded)
    }

    /// Periodic grid of total length `2 * half_extent` whose points are
    /// symmetric about zero (zero itself is a point for any parity of `n`).
    pub fn periodic_centered(half_extent: f64, n: usize) -> Result<Self> {
        if !(half_extent > 0.0) {
            return Err(Error::InvalidGrid("half_extent must be positive".into()));
        }
        let dx = 2.0 * half_extent / n as f64;
        let min = -dx * (n / 2) as f64;
        Self::new(min, min + 2.0 * half_extent, n, Boundary::Periodic)
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.dx
    }

    /// Domain length `max - min`.
    pub fn extent(&self) -> f64 {
        self.max - self.min
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn point(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        self.min + i as f64 * self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.point(i))
    }

    /// Largest absolute coordinate on the grid.
    pub fn abs_max(&self) -> f64 {
        self.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn assert_same(&self, other: &SpatialGrid, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: [{}, {}] n={} vs [{}, {}] n={}",
                self.min, self.max, self.n, other.min, other.max, other.n
            )))
        }
    }

    /// Grid momenta `2*pi*hbar*j/L` with `j` in the symmetric integer range,
    /// ordered as FFT bins (0, 1, .., -1). Defined for periodic grids.
    pub fn fft_momenta(&self, hbar: f64) -> Vec<f64> {
        let n = self.n as i64;
        let scale = 2.0 * std::f64::consts::PI * hbar / self.extent();
        (0..n)
            .map(|j| {
                let j_sym = if j <= n / 2 { j } else { j - n };
                scale * j_sym as f64
            })
            .collect()
    }
}

/// Classical phase space `(q, p)` as a pair of axes. Quadrature weight is `dq*dp`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    q: SpatialGrid,
    p: SpatialGrid,
}

impl PhaseSpaceGrid {
    /// Both axes use the periodic spacing convention; classical derivative
    /// stencils always wrap, which is what makes the grid quadrature of the
    /// transport terms telescope to zero exactly.
    pub fn new(q: SpatialGrid, p: SpatialGrid) -> Result<Self> {
        if !q.is_periodic() || !p.is_periodic() {
            return Err(Error::InvalidGrid(
                "classical axes use the periodic spacing convention".into(),
            ));
        }
        let w = q.spacing() * p.spacing();
        if !(w > 0.0) {
            return Err(Error::InvalidGrid("quadrature weight must be positive".into()));
        }
        Ok(PhaseSpaceGrid { q, p })
    }

    pub fn q(&self) -> &SpatialGrid {
        &self.q
    }

    pub fn p(&self) -> &SpatialGrid {
        &self.p
    }

    /// Quadrature weight `dq * dp`.
    pub fn weight(&self) -> f64 {
        self.q.spacing() * self.p.spacing()
    }

    pub fn assert_same(&self, other: &PhaseSpaceGrid, what: &str) -> Result<()> {
        self.q.assert_same(&other.q, what)?;
        self.p.assert_same(&other.p, what)
    }
}
