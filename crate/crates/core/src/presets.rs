//! Built-in data presets: named initial/boundary profiles used by the solver
//! front end, the convergence ladder and the smoothing experiments.
//!
//! Every preset is a pure description (serializable, comparable); sampling it
//! on a grid is a separate step so the same preset can drive runs at any
//! resolution.  The traveling-wave preset comes with its own residual oracle:
//! [`soliton_residual`] measures how well the closed-form profile satisfies
//! the stationary equation `-c Q' + Q''' + (Q^4)' = 0`, and callers are
//! expected to gate on [`SOLITON_RESIDUAL_TOLERANCE`] before trusting it as a
//! reference solution.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffProfile;
use crate::error::{Error, Result};
use crate::extension::{restrict_to_halfline, HalfLineFunction};
use crate::grid::{GridFunction, SpatialGrid};
use crate::spectral::{inverse_transform, spectral_derivative, Spectrum};

/// Relative residual below which the traveling-wave profile is accepted as a
/// reference solution (measured at refined resolution by [`soliton_residual`]).
pub const SOLITON_RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Fraction of the Nyquist frequency up to which the rough preset populates
/// modes; the quartic of the data then stays inside the representable band.
const ROUGH_BAND_FRACTION: f64 = 0.25;

/// Extra spectral decay beyond the critical `-s - 1/2`, so the sample lands in
/// `H^s` with a small margin instead of exactly on the edge.
const ROUGH_DECAY_MARGIN: f64 = 0.1;

/// Traveling-wave profile for `u_t + u_xxx + (u^4)_x = 0`: the wave
/// `u(x, t) = Q_c(x - c t)` of speed `c > 0` with
/// `Q_c(y) = (5c/2)^{1/3} sech^{2/3}(3 sqrt(c) y / 2)`.
pub fn soliton_profile(speed: f64, y: f64) -> f64 {
    let sech = 1.0 / (1.5 * speed.sqrt() * y).cosh();
    (2.5 * speed).cbrt() * sech.powf(2.0 / 3.0)
}

/// Relative residual of the profile equation `-c Q' + Q''' + (Q^4)' = 0`,
/// measured spectrally on `[-half_width, half_width)` with `n` points and
/// normalized by the third-derivative term.
pub fn soliton_residual(speed: f64, half_width: f64, n: usize) -> Result<f64> {
    if speed <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "soliton speed must be positive, got {speed}"
        )));
    }
    let grid = SpatialGrid::new(half_width, n)?;
    let q = GridFunction::from_real_fn(grid, |x| soliton_profile(speed, x));
    let d1 = spectral_derivative(&q, 1);
    let d3 = spectral_derivative(&q, 3);
    let q4 = q.map(|v| v * v * v * v);
    let d1q4 = spectral_derivative(&q4, 1);
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..grid.n() {
        let r = -speed * d1.values()[j] + d3.values()[j] + d1q4.values()[j];
        num += r.norm_sqr();
        den += d3.values()[j].norm_sqr();
    }
    Ok((num / den).sqrt())
}

/// A named analytic data choice for the half-line problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Preset {
    /// `u0(x) = amplitude exp(-(x - center)^2 / (2 width^2))`, `g = 0`.
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `u0 = 0`; `g` is a smooth compactly supported bump of height
    /// `amplitude` on `(center - width, center + width)`.
    BumpBoundary {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// The traveling wave `Q_c(x - offset - c t)` entering through its own
    /// exact initial profile and (exponentially small) boundary trace.
    Soliton { speed: f64, offset: f64 },
    /// Seeded random data with spectral tail `|xi|^{-s - 1/2 - margin}` above
    /// `|xi| = 1`, localized away from the boundary by a smooth interior
    /// envelope and normalized so `sup |u0| = amplitude`.
    RoughRandom { s: f64, seed: u64, amplitude: f64 },
}

/// The presets offered by the batch front end.
pub fn catalog() -> Vec<Preset> {
    vec![
        Preset::Gaussian {
            amplitude: 0.3,
            center: 6.0,
            width: 1.5,
        },
        Preset::BumpBoundary {
            amplitude: 0.25,
            center: 0.5,
            width: 0.3,
        },
        Preset::Soliton {
            speed: 1.0,
            offset: 18.0,
        },
        Preset::RoughRandom {
            s: 0.0,
            seed: 1,
            amplitude: 0.25,
        },
    ]
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Gaussian { .. } => "gaussian",
            Preset::BumpBoundary { .. } => "bump-boundary",
            Preset::Soliton { .. } => "soliton",
            Preset::RoughRandom { .. } => "rough-random",
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            Preset::Gaussian { width, .. } if width <= 0.0 => {
                bad(format!("gaussian width must be positive, got {width}"))
            }
            Preset::BumpBoundary { width, .. } if width <= 0.0 => {
                bad(format!("bump width must be positive, got {width}"))
            }
            Preset::Soliton { speed, .. } if speed <= 0.0 => {
                bad(format!("soliton speed must be positive, got {speed}"))
            }
            Preset::RoughRandom { amplitude, .. } if amplitude < 0.0 => {
                bad(format!("amplitude must be non-negative, got {amplitude}"))
            }
            _ => Ok(()),
        }
    }

    /// Samples the initial data on the non-negative part of `grid`.
    pub fn initial_data(&self, grid: SpatialGrid) -> Result<HalfLineFunction> {
        self.validate()?;
        Ok(match *self {
            Preset::Gaussian {
                amplitude,
                center,
                width,
            } => HalfLineFunction::from_real_fn(grid, |x| {
                let y = (x - center) / width;
                amplitude * (-0.5 * y * y).exp()
            }),
            Preset::BumpBoundary { .. } => HalfLineFunction::zeros(grid),
            Preset::Soliton { speed, offset } => {
                HalfLineFunction::from_real_fn(grid, |x| soliton_profile(speed, x - offset))
            }
            Preset::RoughRandom { s, seed, amplitude } => {
                restrict_to_halfline(&rough_random_profile(grid, s, seed, amplitude))
            }
        })
    }

    /// Boundary data `g(t)`.
    pub fn boundary_value(&self, t: f64) -> f64 {
        match *self {
            Preset::Gaussian { .. } | Preset::RoughRandom { .. } => 0.0,
            Preset::BumpBoundary {
                amplitude,
                center,
                width,
            } => {
                let y = (t - center) / width;
                if y.abs() < 1.0 {
                    amplitude * (1.0 - 1.0 / (1.0 - y * y)).exp()
                } else {
                    0.0
                }
            }
            Preset::Soliton { speed, offset } => {
                soliton_profile(speed, -offset - speed * t)
            }
        }
    }
}

/// Real random profile with hermitian spectrum `min(1, |xi|)^{-s-1/2-margin}`
/// on the lower quarter of the band, multiplied by a smooth envelope that
/// vanishes near the boundary and the far edge, then sup-normalized to
/// `amplitude`.
fn rough_random_profile(grid: SpatialGrid, s: f64, seed: u64, amplitude: f64) -> GridFunction {
    let n = grid.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = ndarray::Array1::<Complex64>::zeros(n);
    let top = ((n / 2) as f64 * ROUGH_BAND_FRACTION) as usize;
    let decay = -(s + 0.5 + ROUGH_DECAY_MARGIN);
    for kk in 1..=top {
        let xi = grid.dxi() * kk as f64;
        // Flat below xi = 1: only the tail law matters for roughness, and a
        // power-law blow-up at the lowest modes would dominate everything.
        let amp = xi.max(1.0).powf(decay);
        let g = crate::estimates::standard_complex(&mut rng);
        coeffs[kk] = amp * g;
        coeffs[n - kk] = amp * g.conj();
    }
    let spectrum = Spectrum::new(grid, coeffs).expect("coefficient count matches the grid");
    // Hermitian inversion is real up to FFT roundoff; keep the real part only.
    let raw = inverse_transform(&spectrum).map(|v| Complex64::new(v.re, 0.0));

    // Interior envelope: 1 on the middle of (0, L), support [margin, L - margin].
    let profile = CutoffProfile::standard();
    let half = grid.half_width();
    let margin = 1.0;
    let scale = 0.5 * (half / 2.0 - margin);
    let enveloped = GridFunction::new(
        grid,
        ndarray::Array1::from_iter((0..n).map(|j| {
            let x = grid.point(j);
            raw.values()[j] * profile.eta((x - half / 2.0) / scale)
        })),
    )
    .expect("same grid");
    let sup = enveloped
        .values()
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    let factor = if sup > 0.0 { amplitude / sup } else { 0.0 };
    enveloped.map(|v| v * factor)
}
