//! Discrete surrogates of the continuum Fourier transform and the Fourier
//! multiplier operators built on it.
//!
//! Convention (fixed here and nowhere else): the continuum transform is the
//! non-unitary `F f(xi) = integral e^{-i x xi} f(x) dx` with inverse carrying
//! `1/(2 pi)`.  On the periodic grid the forward surrogate is the Riemann sum
//!
//! ```text
//! spectrum[m] = dx * sum_j e^{-i x_j xi_m} f(x_j)  ~  Ff(xi_m),
//! ```
//!
//! so `dx` is the single conversion constant between the library FFT and the
//! continuum transform; the inverse picks up the dual factor
//! `dxi/(2 pi) = 1/(2L)`.  With this pairing the round trip is exact and the
//! discrete Parseval identity `dx sum |f_j|^2 = (dxi/2pi) sum |spectrum|^2`
//! holds to machine precision.  The temporal transform on a time window uses
//! the same rule with `dt` in place of `dx`.

use std::sync::{Arc, Mutex, OnceLock};

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, SpaceTimeField, SpatialGrid, TimeGrid};

/// Plan an FFT of length `n`, caching plans process-wide.
pub(crate) fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    let mut planner = PLANNER
        .get_or_init(|| Mutex::new(FftPlanner::new()))
        .lock()
        .expect("fft planner lock");
    if forward {
        planner.plan_fft_forward(n)
    } else {
        planner.plan_fft_inverse(n)
    }
}

/// Spectrum of a [`GridFunction`] in FFT slot order; `coeffs[m]` approximates
/// the continuum transform at `xi_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: SpatialGrid,
    coeffs: Array1<Complex64>,
}

impl Spectrum {
    pub fn new(grid: SpatialGrid, coeffs: Array1<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "expected {} coefficients, got {}",
                grid.n(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        Self {
            grid,
            coeffs: Array1::zeros(grid.n()),
        }
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    pub fn coeffs(&self) -> &Array1<Complex64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array1<Complex64> {
        &mut self.coeffs
    }

    /// `(1/2pi) sum |coeff|^2 dxi`, the spectral side of the Parseval pairing.
    pub fn weighted_l2(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let dxi = self.grid.dxi();
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| weight(self.grid.frequency(m)) * c.norm_sqr())
            .sum();
        sum * dxi / (2.0 * std::f64::consts::PI)
    }
}

/// Forward transform of a spatial sample vector.
pub fn forward_transform(f: &GridFunction) -> Spectrum {
    let grid = f.grid();
    let n = grid.n();
    let fft = plan(n, true);
    let mut buf: Vec<Complex64> = f.values().to_vec();
    fft.process(&mut buf);
    let dx = grid.dx();
    let x0 = -grid.half_width();
    let coeffs = Array1::from_iter((0..n).map(|m| {
        let phase = Complex64::from_polar(1.0, -x0 * grid.frequency(m));
        buf[m] * phase * dx
    }));
    Spectrum { grid, coeffs }
}

/// Inverse transform back to sample values; exact round trip with
/// [`forward_transform`].
pub fn inverse_transform(s: &Spectrum) -> GridFunction {
    let grid = s.grid();
    let n = grid.n();
    let fft = plan(n, false);
    let x0 = -grid.half_width();
    let mut buf: Vec<Complex64> = (0..n)
        .map(|m| s.coeffs()[m] * Complex64::from_polar(1.0, x0 * grid.frequency(m)))
        .collect();
    fft.process(&mut buf);
    let scale = 1.0 / (n as f64 * grid.dx());
    GridFunction::new(grid, Array1::from_iter(buf.into_iter().map(|v| v * scale)))
        .expect("length preserved")
}

/// Apply a Fourier multiplier `m(xi)`; errors if the multiplier is non-finite
/// at any grid frequency.
pub fn apply_multiplier(
    f: &GridFunction,
    multiplier: impl Fn(f64) -> Complex64,
) -> Result<GridFunction> {
    let mut s = forward_transform(f);
    let grid = s.grid();
    for m in 0..grid.n() {
        let xi = grid.frequency(m);
        let w = multiplier(xi);
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(Error::NonFiniteMultiplier { xi });
        }
        s.coeffs_mut()[m] *= w;
    }
    Ok(inverse_transform(&s))
}

/// Japanese-bracket weight `<xi>^s = (1 + xi^2)^{s/2}`.
pub fn sobolev_weight(xi: f64, s: f64) -> f64 {
    (1.0 + xi * xi).powf(s / 2.0)
}

/// Inhomogeneous fractional derivative: multiplier `<xi>^s`.  Total on the
/// grid for every real `s`, hence infallible.
pub fn fractional_d(f: &GridFunction, s: f64) -> GridFunction {
    apply_multiplier(f, |xi| Complex64::new(sobolev_weight(xi, s), 0.0))
        .expect("<xi>^s is finite at every grid frequency")
}

/// Homogeneous half derivative: multiplier `|xi|^{1/2}` (kills the mean).
pub fn half_derivative(f: &GridFunction) -> GridFunction {
    apply_multiplier(f, |xi| Complex64::new(xi.abs().sqrt(), 0.0)).expect("|xi|^{1/2} finite")
}

/// Spectral spatial derivative of the given order, multiplier `(i xi)^order`.
/// For odd orders the self-conjugate Nyquist slot is zeroed so real input
/// stays real; resolved data carries no mass there anyway.
pub fn spectral_derivative(f: &GridFunction, order: u32) -> GridFunction {
    let nyq = f.grid().nyquist();
    apply_multiplier(f, |xi| {
        if order % 2 == 1 && xi == -nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, xi).powu(order)
        }
    })
    .expect("(i xi)^order finite")
}

/// Bilinear operator with transform
/// `integral |2 xi1 - xi|^{1/2} f^(xi1) g^(xi - xi1) d xi1`, normalized like a
/// product: the discrete sum carries the factor `dxi/(2 pi) = 1/(2L)`, so with
/// the weight replaced by 1 the operator reduces to the pointwise product
/// `f g`.  Writing `xi = xi1 + xi2`, the weight is `|xi1 - xi2|^{1/2}` over
/// all slot pairs with `k1 + k2 = k (mod n)`, which makes the symmetry under
/// `f <-> g` exact on the grid.
pub fn bilinear_half_difference(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    f.check_same_grid(g)?;
    let grid = f.grid();
    let n = grid.n();
    let fs = forward_transform(f);
    let gs = forward_transform(g);
    let freqs: Vec<f64> = grid.frequencies();
    let scale = 1.0 / (2.0 * grid.half_width());
    let coeffs: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k1 in 0..n {
                let k2 = (k + n - k1) % n;
                let w = (freqs[k1] - freqs[k2]).abs().sqrt();
                acc += fs.coeffs()[k1] * gs.coeffs()[k2] * w;
            }
            acc * scale
        })
        .collect();
    let s = Spectrum::new(grid, Array1::from_vec(coeffs))?;
    Ok(inverse_transform(&s))
}

/// Transform of a time series sampled on a [`TimeGrid`]:
/// `out[m] = dt * sum_j e^{-i tau_m t_j} f(t_j)`.
pub fn time_transform(series: &[Complex64], time: &TimeGrid) -> Vec<Complex64> {
    assert_eq!(series.len(), time.n_t(), "series length must match time grid");
    let fft = plan(time.n_t(), true);
    let mut buf = series.to_vec();
    fft.process(&mut buf);
    let dt = time.dt();
    (0..time.n_t())
        .map(|m| buf[m] * Complex64::from_polar(1.0, -time.t_min() * time.tau(m)) * dt)
        .collect()
}

/// Inverse of [`time_transform`].
pub fn time_inverse(coeffs: &[Complex64], time: &TimeGrid) -> Vec<Complex64> {
    assert_eq!(coeffs.len(), time.n_t(), "coefficient length must match time grid");
    let fft = plan(time.n_t(), false);
    let mut buf: Vec<Complex64> = (0..time.n_t())
        .map(|m| coeffs[m] * Complex64::from_polar(1.0, time.t_min() * time.tau(m)))
        .collect();
    fft.process(&mut buf);
    let scale = 1.0 / (time.n_t() as f64 * time.dt());
    buf.into_iter().map(|v| v * scale).collect()
}

/// Evaluate the trigonometric interpolant of a periodic-window time series at
/// arbitrary times.  Spectrally accurate for series that are smooth and decay
/// before the window edges.
pub fn trig_interpolate(series: &[Complex64], time: &TimeGrid, targets: &[f64]) -> Vec<Complex64> {
    let coeffs = time_transform(series, time);
    let inv_span = 1.0 / time.span();
    targets
        .par_iter()
        .map(|&t| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, c) in coeffs.iter().enumerate() {
                acc += c * Complex64::from_polar(1.0, time.tau(m) * t);
            }
            acc * inv_span
        })
        .collect()
}

/// Full space-time spectrum; `coeffs[[k, m]]` approximates the 2-D continuum
/// transform at `(xi_k, tau_m)`.
#[derive(Clone, Debug)]
pub struct SpaceTimeSpectrum {
    grid: SpatialGrid,
    time: TimeGrid,
    coeffs: Array2<Complex64>,
}

impl SpaceTimeSpectrum {
    pub fn new(grid: SpatialGrid, time: TimeGrid, coeffs: Array2<Complex64>) -> Result<Self> {
        if coeffs.dim() != (grid.n(), time.n_t()) {
            return Err(Error::GridMismatch(format!(
                "expected shape ({}, {}), got {:?}",
                grid.n(),
                time.n_t(),
                coeffs.dim()
            )));
        }
        Ok(Self { grid, time, coeffs })
    }

    pub fn zeros(grid: SpatialGrid, time: TimeGrid) -> Self {
        let coeffs = Array2::zeros((grid.n(), time.n_t()));
        Self { grid, time, coeffs }
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    pub fn time(&self) -> TimeGrid {
        self.time
    }

    pub fn coeffs(&self) -> &Array2<Complex64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.coeffs
    }
}

/// 2-D forward transform (time direction first, then space).
pub fn spacetime_transform(u: &SpaceTimeField) -> SpaceTimeSpectrum {
    let grid = u.grid();
    let time = u.time();
    let (n, n_t) = (grid.n(), time.n_t());
    let mut vals = u.values().clone();

    // Temporal transform along each (contiguous) row.
    let tfft = plan(n_t, true);
    let t0 = time.t_min();
    let dt = time.dt();
    let tphase: Vec<Complex64> = (0..n_t)
        .map(|m| Complex64::from_polar(1.0, -t0 * time.tau(m)) * dt)
        .collect();
    vals.axis_iter_mut(Axis(0))
        .into_par_iter()
        .for_each(|mut row| {
            let slice = row.as_slice_mut().expect("row-major layout");
            tfft.process(slice);
            for (m, v) in slice.iter_mut().enumerate() {
                *v *= tphase[m];
            }
        });

    // Spatial transform along each column (gather/scatter).
    let xfft = plan(n, true);
    let x0 = -grid.half_width();
    let dx = grid.dx();
    let xphase: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, -x0 * grid.frequency(k)) * dx)
        .collect();
    let mut coeffs = Array2::zeros((n, n_t));
    let columns: Vec<Vec<Complex64>> = (0..n_t)
        .into_par_iter()
        .map(|m| {
            let mut buf: Vec<Complex64> = (0..n).map(|j| vals[[j, m]]).collect();
            xfft.process(&mut buf);
            for (k, v) in buf.iter_mut().enumerate() {
                *v *= xphase[k];
            }
            buf
        })
        .collect();
    for (m, col) in columns.into_iter().enumerate() {
        for (k, v) in col.into_iter().enumerate() {
            coeffs[[k, m]] = v;
        }
    }
    SpaceTimeSpectrum { grid, time, coeffs }
}

/// Inverse of [`spacetime_transform`].
pub fn inverse_spacetime_transform(s: &SpaceTimeSpectrum) -> SpaceTimeField {
    let grid = s.grid();
    let time = s.time();
    let (n, n_t) = (grid.n(), time.n_t());

    // Undo the spatial transform along columns.
    let xfft = plan(n, false);
    let x0 = -grid.half_width();
    let xscale = 1.0 / (n as f64 * grid.dx());
    let mut vals = Array2::zeros((n, n_t));
    let columns: Vec<Vec<Complex64>> = (0..n_t)
        .into_par_iter()
        .map(|m| {
            let mut buf: Vec<Complex64> = (0..n)
                .map(|k| s.coeffs[[k, m]] * Complex64::from_polar(1.0, x0 * grid.frequency(k)))
                .collect();
            xfft.process(&mut buf);
            for v in buf.iter_mut() {
                *v *= xscale;
            }
            buf
        })
        .collect();
    for (m, col) in columns.into_iter().enumerate() {
        for (j, v) in col.into_iter().enumerate() {
            vals[[j, m]] = v;
        }
    }

    // Undo the temporal transform along rows.
    let tfft = plan(n_t, false);
    let t0 = time.t_min();
    let tscale = 1.0 / (n_t as f64 * time.dt());
    let tphase: Vec<Complex64> = (0..n_t)
        .map(|m| Complex64::from_polar(1.0, t0 * time.tau(m)) * tscale)
        .collect();
    vals.axis_iter_mut(Axis(0))
        .into_par_iter()
        .for_each(|mut row| {
            let slice = row.as_slice_mut().expect("row-major layout");
            for (m, v) in slice.iter_mut().enumerate() {
                *v *= tphase[m];
            }
            tfft.process(slice);
        });
    SpaceTimeField::new(grid, time, vals).expect("shape preserved")
}

/// Apply a space-time multiplier `m(xi, tau)`; errors on non-finite values.
pub fn apply_spacetime_multiplier(
    u: &SpaceTimeField,
    multiplier: impl Fn(f64, f64) -> Complex64 + Sync,
) -> Result<SpaceTimeField> {
    let mut s = spacetime_transform(u);
    let grid = s.grid();
    let time = s.time();
    for k in 0..grid.n() {
        let xi = grid.frequency(k);
        for m in 0..time.n_t() {
            let w = multiplier(xi, time.tau(m));
            if !(w.re.is_finite() && w.im.is_finite()) {
                return Err(Error::NonFiniteMultiplier { xi });
            }
            s.coeffs_mut()[[k, m]] *= w;
        }
    }
    Ok(inverse_spacetime_transform(&s))
}

/// Largest absolute imaginary part; real-data pipelines monitor this to
/// confirm they stay real to rounding.
pub fn max_imag(u: &SpaceTimeField) -> f64 {
    u.values().iter().map(|v| v.im.abs()).fold(0.0, f64::max)
}
