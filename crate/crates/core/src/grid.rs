//! Periodic spatial grid, time window, and the sampled function types that
//! every operator in this crate works on.
//!
//! The spatial domain is the symmetric torus `[-L, L)` sampled at `n`
//! equispaced points (n a power of two), used as a computational surrogate for
//! the real line: data is expected to live well inside `[-L/2, L/2]` so that
//! periodic wrap-around stays below the run's tolerance.  The right half line
//! `[0, oo)` is represented by the sample points with `x >= 0`.
//!
//! Frequencies are `xi_k = pi k / L` for signed `k in [-n/2, n/2)`, stored in
//! FFT slot order (non-negative frequencies first).  A time window `[t0, t1)`
//! with `n_t` samples plays the same role for the temporal transform.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Symmetric periodic spatial grid `[-L, L)` with `n` equispaced samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialGrid {
    half_width: f64,
    n: usize,
}

impl SpatialGrid {
    /// A grid needs `n` a power of two (for the FFT) and at least 8 points so
    /// every operator has a non-trivial spectrum to work with.
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid half-width must be positive and finite, got {half_width}"
            )));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a power of two >= 8, got {n}"
            )));
        }
        Ok(Self { half_width, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sample spacing `dx = 2L/n`.
    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Frequency spacing `dxi = pi/L`.
    pub fn dxi(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    /// `x_j = -L + j dx`.
    pub fn point(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Signed mode number for FFT slot `m`: `m` for `m < n/2`, `m - n` after.
    pub fn signed_index(&self, m: usize) -> i64 {
        if m < self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    /// `xi_k = pi k / L` for the signed mode number `k` of slot `m`.
    pub fn frequency(&self, m: usize) -> f64 {
        self.signed_index(m) as f64 * self.dxi()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.frequency(m)).collect()
    }

    /// Largest representable frequency magnitude, `pi (n/2) / L`.
    pub fn nyquist(&self) -> f64 {
        self.n as f64 / 2.0 * self.dxi()
    }

    /// Index of the sample at `x = 0` (the left end of the half line).
    pub fn origin_index(&self) -> usize {
        self.n / 2
    }
}

/// Uniform time window `[t_min, t_max)` with `n_t` samples; periodic for the
/// temporal transform, so fields must decay before the window edges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t_min: f64,
    t_max: f64,
    n_t: usize,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, n_t: usize) -> Result<Self> {
        if !(t_min.is_finite() && t_max.is_finite() && t_min < t_max) {
            return Err(Error::InvalidParameter(format!(
                "time window must satisfy t_min < t_max, got [{t_min}, {t_max})"
            )));
        }
        if n_t < 8 || !n_t.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "time sample count must be a power of two >= 8, got {n_t}"
            )));
        }
        Ok(Self { t_min, t_max, n_t })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn span(&self) -> f64 {
        self.t_max - self.t_min
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn dt(&self) -> f64 {
        self.span() / self.n_t as f64
    }

    /// Temporal frequency spacing `dtau = 2 pi / span`.
    pub fn dtau(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.span()
    }

    pub fn time(&self, m: usize) -> f64 {
        self.t_min + m as f64 * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_t).map(|m| self.time(m)).collect()
    }

    pub fn signed_index(&self, m: usize) -> i64 {
        if m < self.n_t / 2 {
            m as i64
        } else {
            m as i64 - self.n_t as i64
        }
    }

    /// `tau_k = 2 pi k / span` for the signed mode number of slot `m`.
    pub fn tau(&self, m: usize) -> f64 {
        self.signed_index(m) as f64 * self.dtau()
    }

    pub fn taus(&self) -> Vec<f64> {
        (0..self.n_t).map(|m| self.tau(m)).collect()
    }

    /// Largest representable temporal frequency, `pi n_t / span`.
    pub fn nyquist(&self) -> f64 {
        self.n_t as f64 / 2.0 * self.dtau()
    }

    /// Index of the grid time closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        let j = ((t - self.t_min) / self.dt()).round() as i64;
        j.clamp(0, self.n_t as i64 - 1) as usize
    }
}

/// Complex samples of a function on a [`SpatialGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: SpatialGrid,
    values: Array1<Complex64>,
}

impl GridFunction {
    pub fn new(grid: SpatialGrid, values: Array1<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.n(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        Self {
            grid,
            values: Array1::zeros(grid.n()),
        }
    }

    pub fn from_fn(grid: SpatialGrid, mut f: impl FnMut(f64) -> Complex64) -> Self {
        let values = Array1::from_iter((0..grid.n()).map(|j| f(grid.point(j))));
        Self { grid, values }
    }

    pub fn from_real_fn(grid: SpatialGrid, mut f: impl FnMut(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    pub fn values(&self) -> &Array1<Complex64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array1<Complex64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array1<Complex64> {
        self.values
    }

    /// Discrete `L^2` norm, `sqrt(dx sum |f_j|^2)`.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (self.grid.dx() * sum).sqrt()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.mapv(&f),
        }
    }

    /// Fraction of the discrete `L^2` mass outside `[-L/2, L/2]`.  Run data
    /// must keep this below its tolerance for the periodic surrogate to stand
    /// in for the real line.
    pub fn mass_fraction_outside_core(&self) -> f64 {
        let half = self.grid.half_width() / 2.0;
        let mut outside = 0.0;
        let mut total = 0.0;
        for (j, v) in self.values.iter().enumerate() {
            let m = v.norm_sqr();
            total += m;
            if self.grid.point(j).abs() > half {
                outside += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outside / total
        }
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(
                "operands live on different spatial grids".into(),
            ));
        }
        Ok(())
    }
}

/// Complex samples `u(x_j, t_m)` on a spatial grid times a time window,
/// stored with shape `(n, n_t)` (space-major).
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    grid: SpatialGrid,
    time: TimeGrid,
    values: Array2<Complex64>,
}

impl SpaceTimeField {
    pub fn new(grid: SpatialGrid, time: TimeGrid, values: Array2<Complex64>) -> Result<Self> {
        if values.dim() != (grid.n(), time.n_t()) {
            return Err(Error::GridMismatch(format!(
                "expected shape ({}, {}), got {:?}",
                grid.n(),
                time.n_t(),
                values.dim()
            )));
        }
        Ok(Self { grid, time, values })
    }

    pub fn zeros(grid: SpatialGrid, time: TimeGrid) -> Self {
        Self {
            grid,
            time,
            values: Array2::zeros((grid.n(), time.n_t())),
        }
    }

    pub fn from_fn(
        grid: SpatialGrid,
        time: TimeGrid,
        mut f: impl FnMut(f64, f64) -> Complex64,
    ) -> Self {
        let values = Array2::from_shape_fn((grid.n(), time.n_t()), |(j, m)| {
            f(grid.point(j), time.time(m))
        });
        Self { grid, time, values }
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    pub fn time(&self) -> TimeGrid {
        self.time
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.values
    }

    /// Spatial slice at time index `m`.
    pub fn slice_at(&self, m: usize) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.column(m).to_owned(),
        }
    }

    /// Time series at the spatial sample `x = 0`.
    pub fn origin_series(&self) -> Array1<Complex64> {
        self.values.row(self.grid.origin_index()).to_owned()
    }

    /// Discrete `L^2` norm over space-time, `sqrt(dx dt sum |u|^2)`.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (self.grid.dx() * self.time.dt() * sum).sqrt()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            time: self.time,
            values: self.values.mapv(&f),
        }
    }

    /// Pointwise combination of two fields on the same grids.
    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_same_grids(other)?;
        let mut values = self.values.clone();
        values.zip_mut_with(&other.values, |a, &b| *a = f(*a, b));
        Ok(Self {
            grid: self.grid,
            time: self.time,
            values,
        })
    }

    /// Multiply each time slice by the scalar `w(t_m)`.
    pub fn scale_in_time(&self, w: impl Fn(f64) -> f64) -> Self {
        let mut values = self.values.clone();
        for (m, mut col) in values.columns_mut().into_iter().enumerate() {
            let s = w(self.time.time(m));
            col.mapv_inplace(|v| v * s);
        }
        Self {
            grid: self.grid,
            time: self.time,
            values,
        }
    }

    /// Largest slice-wise mass fraction outside `[-L/2, L/2]` over a sub-range
    /// of time indices (inclusive bounds clamped to the window).
    pub fn max_mass_fraction_outside_core(&self, m_lo: usize, m_hi: usize) -> f64 {
        let hi = m_hi.min(self.time.n_t() - 1);
        (m_lo..=hi)
            .map(|m| self.slice_at(m).mass_fraction_outside_core())
            .fold(0.0, f64::max)
    }

    pub fn check_same_grids(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.time != other.time {
            return Err(Error::GridMismatch(
                "operands live on different space-time grids".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(SpatialGrid::new(10.0, 100).is_err()); // not a power of two
        assert!(SpatialGrid::new(10.0, 4).is_err()); // too small
        assert!(SpatialGrid::new(-1.0, 64).is_err());
        assert!(SpatialGrid::new(f64::NAN, 64).is_err());
        assert!(TimeGrid::new(1.0, 0.0, 64).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 48).is_err());
    }

    #[test]
    fn grid_layout_matches_definitions() {
        let g = SpatialGrid::new(10.0, 16).unwrap();
        assert_eq!(g.dx(), 20.0 / 16.0);
        assert_eq!(g.point(0), -10.0);
        assert_eq!(g.point(8), 0.0);
        assert_eq!(g.origin_index(), 8);
        // dx * n = 2L exactly.
        assert_eq!(g.dx() * g.n() as f64, 2.0 * g.half_width());
        // FFT slot order: 0, dxi, ..., then negative frequencies.
        assert_eq!(g.frequency(0), 0.0);
        assert_eq!(g.frequency(1), std::f64::consts::PI / 10.0);
        assert_eq!(g.frequency(15), -std::f64::consts::PI / 10.0);
        assert_eq!(g.frequency(8), -g.nyquist());
    }

    #[test]
    fn time_layout_matches_definitions() {
        let t = TimeGrid::new(-4.0, 4.0, 32).unwrap();
        assert_eq!(t.dt(), 0.25);
        assert_eq!(t.time(0), -4.0);
        assert_eq!(t.tau(1), 2.0 * std::f64::consts::PI / 8.0);
        assert_eq!(t.tau(31), -2.0 * std::f64::consts::PI / 8.0);
        assert_eq!(t.nearest_index(-4.0), 0);
        assert_eq!(t.nearest_index(0.0), 16);
    }

    #[test]
    fn mass_fraction_sees_tail() {
        let g = SpatialGrid::new(8.0, 64).unwrap();
        // Unit spike at x = -7 (outside [-4, 4]) plus one at the origin.
        let mut f = GridFunction::zeros(g);
        let j_out = (0..64).find(|&j| (g.point(j) + 7.0).abs() < 1e-12).unwrap();
        f.values_mut()[j_out] = Complex64::new(1.0, 0.0);
        f.values_mut()[g.origin_index()] = Complex64::new(1.0, 0.0);
        assert!((f.mass_fraction_outside_core() - 0.5).abs() < 1e-15);
    }
}
