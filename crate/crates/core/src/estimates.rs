//! Ensemble ratio measurements for the a-priori inequalities behind the
//! half-line solver.
//!
//! Each `check_*` function draws a seeded random ensemble from a fixed data
//! class, evaluates the left- and right-hand side of one inequality on every
//! member, and reports the per-sample ratios together with the largest one
//! and a fitted constant.  The measurements are descriptive, not proofs: a
//! pinned max ratio certifies that the discrete operators reproduce the
//! expected boundedness on the pinned data class, and parameter sweeps
//! outside the admissible region are expected to show the ratios degenerate.
//!
//! All randomness flows through per-member ChaCha streams derived from the
//! ensemble seed, members are evaluated in parallel and merged by index, so
//! every report is reproducible bit for bit.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffProfile;
use crate::duhamel::duhamel_integral;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, SpaceTimeField, SpatialGrid, TimeGrid};
use crate::linear::{
    airy_flow, boundary_evolution, BoundaryTrace, QuadratureSpec, TRACE_SAMPLES, TRACE_WINDOW,
};
use crate::norms::{h_norm, sobolev_series_norm, sup_x_sobolev_t, xsb_norm};
use crate::spectral::{
    apply_spacetime_multiplier, inverse_spacetime_transform, inverse_transform, sobolev_weight,
    spacetime_transform, SpaceTimeSpectrum, Spectrum,
};

const TWO_PI: f64 = 2.0 * PI;

/// Prefactor of the high-modulation region proxy `|tau| >= max(1, alpha
/// |xi|^3)` used by the correction functional.  Reports include the spread
/// against `8 * PROXY_ALPHA` so the sensitivity to this choice stays visible.
pub const PROXY_ALPHA: f64 = 8.0;

/// Relative band around each pinned constant: a certified study must land
/// within `[1 - band, 1 + band]` times the frozen value.
pub const PIN_RELATIVE_BAND: f64 = 0.5;

/// Doubling the ensemble count may move the max ratio by at most this
/// fraction; more means the ensemble is too small to trust.
pub const DOUBLING_TOLERANCE: f64 = 0.20;

/// Re-running a study with both grid resolutions doubled may move the max
/// ratio by at most this fraction.
pub const REFINEMENT_TOLERANCE: f64 = 0.25;

/// Spectral allowance for the smooth time window: its transform tail beyond
/// this many tau units is treated as negligible when deciding whether the
/// dispersion surface of a band fits inside the temporal Nyquist range.
const WINDOW_TAU_MARGIN: f64 = 32.0;

// ---------------------------------------------------------------------------
// Ensemble and lab configuration.
// ---------------------------------------------------------------------------

/// Random data class for the ratio studies.
///
/// The class is defined in continuum terms (frequency bands and decay rates),
/// so the same spec on a refined grid produces the *same* trig polynomials;
/// two-resolution agreement of the ratios is then a genuine convergence
/// statement about the norm evaluation, not a change of data.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSpec {
    /// Number of ensemble members.
    pub count: usize,
    /// Base seed; member `i` uses an independent stream derived from it.
    pub seed: u64,
    /// Spatial spectral decay: coefficients carry `<xi>^{-sigma}`.
    pub sigma: f64,
    /// Modulation decay of space-time members: `<tau - xi^3>^{-gamma}`.
    pub modulation_decay: f64,
    /// Spatial band: modes `|k| <= band_k` (grid slots).  Kept at `n/8 - 1`
    /// or below so fourfold products stay strictly under the Nyquist slot.
    pub band_k: usize,
    /// Temporal band of space-time members, in tau slots.
    pub band_m: usize,
    /// Scale every member to a unit right-hand side before measuring.
    pub normalize: bool,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            count: 5,
            seed: 0x1D5EED,
            sigma: 1.5,
            modulation_decay: 1.1,
            band_k: 7,
            band_m: 96,
            normalize: true,
        }
    }
}

/// Discretization used by the ratio studies.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabGrid {
    pub n: usize,
    pub half_width: f64,
    pub n_t: usize,
    /// Time window is `[-t_half, t_half)`; the unit plateau of the window
    /// function must fit well inside.
    pub t_half: f64,
}

impl Default for LabGrid {
    fn default() -> Self {
        // n = 256 gives the boundary kernel's spatial spectrum enough
        // headroom for the dispersive-weighted norms to converge (about
        // 0.5% left at this resolution); the other studies are band-limited
        // far below Nyquist and insensitive to n.
        Self {
            n: 256,
            half_width: 16.0,
            n_t: 1024,
            t_half: 4.0,
        }
    }
}

impl LabGrid {
    pub fn spatial(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.half_width, self.n)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(-self.t_half, self.t_half, self.n_t)
    }

    /// Same extents, both resolutions doubled; the data class is unchanged.
    pub fn refined(&self) -> Self {
        Self {
            n: self.n * 2,
            n_t: self.n_t * 2,
            ..*self
        }
    }
}

/// Independent per-member seed stream.
pub fn member_seed(base: u64, index: usize) -> u64 {
    base ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub(crate) fn standard_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    // Box-Muller; both components are standard normal.
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let r = (-2.0 * (1.0 - u1).max(f64::MIN_POSITIVE).ln()).sqrt();
    Complex64::from_polar(r, TWO_PI * u2)
}

fn wrap(n: usize, signed: i64) -> usize {
    signed.rem_euclid(n as i64) as usize
}

/// Real random profile with coefficients `<xi>^{-sigma} * gaussian` on modes
/// `|k| <= band_k` and conjugate symmetry.  For a fixed spec the function is
/// a grid-independent trig polynomial.
pub fn random_profile(
    grid: SpatialGrid,
    seed: u64,
    sigma: f64,
    band_k: usize,
) -> Result<GridFunction> {
    if band_k == 0 || band_k >= grid.n() / 2 {
        return Err(Error::InvalidParameter(format!(
            "spatial band must lie in [1, n/2), got {band_k} on n = {}",
            grid.n()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = Spectrum::zeros(grid);
    let n = grid.n();
    for kk in 0..=band_k {
        let xi = kk as f64 * grid.dxi();
        let amp = sobolev_weight(xi, -sigma);
        let z = standard_complex(&mut rng) * amp;
        if kk == 0 {
            spec.coeffs_mut()[0] = Complex64::new(z.re, 0.0);
        } else {
            spec.coeffs_mut()[kk] = z;
            spec.coeffs_mut()[n - kk] = z.conj();
        }
    }
    Ok(inverse_transform(&spec))
}

/// Real random space-time field with coefficients shaped like
/// `<xi>^{-sigma} <tau - xi^3>^{-gamma}` on the band `|k| <= band_k`,
/// `|m| <= band_m`, conjugate-symmetric under `(k, m) -> (-k, -m)`.
pub fn random_modulated_field(
    grid: SpatialGrid,
    time: &TimeGrid,
    seed: u64,
    sigma: f64,
    gamma: f64,
    band_k: usize,
    band_m: usize,
) -> Result<SpaceTimeField> {
    if band_k == 0 || band_k >= grid.n() / 2 {
        return Err(Error::InvalidParameter(format!(
            "spatial band must lie in [1, n/2), got {band_k} on n = {}",
            grid.n()
        )));
    }
    if band_m == 0 || band_m >= time.n_t() / 2 {
        return Err(Error::InvalidParameter(format!(
            "temporal band must lie in [1, n_t/2), got {band_m} on n_t = {}",
            time.n_t()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = SpaceTimeSpectrum::zeros(grid, *time);
    let (n, n_t) = (grid.n(), time.n_t());
    for kk in 0..=band_k as i64 {
        let xi = kk as f64 * grid.dxi();
        let xi3 = xi * xi * xi;
        for mm in -(band_m as i64)..=band_m as i64 {
            if kk == 0 && mm < 0 {
                continue;
            }
            let tau = mm as f64 * time.dtau();
            let amp = sobolev_weight(xi, -sigma) * sobolev_weight(tau - xi3, -gamma);
            let mut z = standard_complex(&mut rng) * amp;
            if kk == 0 && mm == 0 {
                z = Complex64::new(z.re, 0.0);
            }
            let (k_idx, m_idx) = (wrap(n, kk), wrap(n_t, mm));
            spec.coeffs_mut()[[k_idx, m_idx]] = z;
            spec.coeffs_mut()[[wrap(n, -kk), wrap(n_t, -mm)]] = z.conj();
        }
    }
    Ok(inverse_spacetime_transform(&spec))
}

/// Smooth random boundary data: five plateau bumps with random amplitudes,
/// centers and widths, supported well inside `(0, 5)`.
pub fn random_boundary_bumps(seed: u64, profile: CutoffProfile) -> impl Fn(f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<(f64, f64, f64)> = (0..5)
        .map(|_| {
            let amp = standard_complex(&mut rng).re;
            let center = 1.4 + 1.8 * rng.random::<f64>();
            let width = 0.35 + 0.3 * rng.random::<f64>();
            (amp, center, width)
        })
        .collect();
    move |t: f64| {
        bumps
            .iter()
            .map(|&(a, c, w)| a * profile.eta((t - c) / w))
            .sum()
    }
}

/// Temporal Sobolev norm of boundary data on the fine trace window.
fn trace_data_norm(g: &impl Fn(f64) -> f64, s: f64) -> Result<f64> {
    let time = TimeGrid::new(0.0, TRACE_WINDOW, TRACE_SAMPLES)?;
    let series: Vec<Complex64> = (0..TRACE_SAMPLES)
        .map(|i| Complex64::new(g(time.time(i)), 0.0))
        .collect();
    Ok(sobolev_series_norm(&series, &time, s))
}

// ---------------------------------------------------------------------------
// Reports.
// ---------------------------------------------------------------------------

/// One ensemble member's measurement.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RatioSample {
    pub index: usize,
    pub seed: u64,
    pub left: f64,
    pub right: f64,
    /// `left / right`; NaN when the right side vanishes (the sample is then
    /// skipped by the aggregates).
    pub ratio: f64,
}

/// Outcome of one ratio study.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioReport {
    pub id: String,
    pub s: f64,
    pub b: Option<f64>,
    pub b_prime: Option<f64>,
    pub a: Option<f64>,
    pub samples: Vec<RatioSample>,
    /// Largest finite per-sample ratio: the observed constant.
    pub max_ratio: f64,
    /// Geometric mean of the finite ratios: the typical constant.
    pub fitted_constant: f64,
    /// Whether the data band keeps the measured weights below the grid's
    /// aliasing thresholds; an unresolved study is reported, never trusted.
    pub resolved: bool,
    /// Relative change of the left side when the region prefactor of the
    /// high-modulation proxy is multiplied by 8 (correction studies only).
    pub proxy_spread: Option<f64>,
}

impl RatioReport {
    fn build(
        id: &str,
        s: f64,
        b: Option<f64>,
        b_prime: Option<f64>,
        a: Option<f64>,
        samples: Vec<RatioSample>,
        resolved: bool,
    ) -> Self {
        let finite: Vec<f64> = samples
            .iter()
            .map(|r| r.ratio)
            .filter(|r| r.is_finite())
            .collect();
        let max_ratio = finite.iter().copied().fold(0.0, f64::max);
        let fitted_constant = if finite.is_empty() {
            0.0
        } else {
            (finite.iter().map(|r| r.max(f64::MIN_POSITIVE).ln()).sum::<f64>()
                / finite.len() as f64)
                .exp()
        };
        Self {
            id: id.to_string(),
            s,
            b,
            b_prime,
            a,
            samples,
            max_ratio,
            fitted_constant,
            resolved,
            proxy_spread: None,
        }
    }

    pub fn csv_header() -> &'static str {
        "id,s,b,b_prime,a,sample,seed,left,right,ratio"
    }

    pub fn csv_rows(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        self.samples
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{},{},{:e},{:e},{:e}\n",
                    self.id,
                    self.s,
                    opt(self.b),
                    opt(self.b_prime),
                    opt(self.a),
                    r.index,
                    r.seed,
                    r.left,
                    r.right,
                    r.ratio
                )
            })
            .collect()
    }
}

fn make_sample(index: usize, seed: u64, left: f64, right: f64) -> RatioSample {
    let ratio = if right > 0.0 { left / right } else { f64::NAN };
    RatioSample {
        index,
        seed,
        left,
        right,
        ratio,
    }
}

fn validate_count(ens: &EnsembleSpec) -> Result<()> {
    if ens.count == 0 {
        return Err(Error::InvalidParameter(
            "ensemble count must be positive".into(),
        ));
    }
    Ok(())
}

/// Whether a single band's dispersion surface stays inside the temporal
/// Nyquist range, with allowance for the window transform's tail.
fn band_resolved(grid: SpatialGrid, time: &TimeGrid, band_k: usize, band_m: usize) -> bool {
    let xi = band_k as f64 * grid.dxi();
    let tau = band_m as f64 * time.dtau();
    xi.powi(3) + tau + WINDOW_TAU_MARGIN <= time.nyquist()
}

/// Same for a fourfold product: frequencies and modulations each add.
fn product_resolved(grid: SpatialGrid, time: &TimeGrid, band_k: usize, band_m: usize) -> bool {
    let xi = band_k as f64 * grid.dxi();
    let tau = band_m as f64 * time.dtau();
    4 * band_k < grid.n() / 2 && 4.0 * (xi.powi(3) + tau) + WINDOW_TAU_MARGIN <= time.nyquist()
}

// ---------------------------------------------------------------------------
// Individual ratio studies.
// ---------------------------------------------------------------------------

/// `|| eta(t) W(t) phi ||_{X^{s,b}} <= C || phi ||_{H^s}` on random profiles.
pub fn check_linear_xsb(lab: &LabGrid, ens: &EnsembleSpec, s: f64, b: f64) -> Result<RatioReport> {
    validate_count(ens)?;
    let grid = lab.spatial()?;
    let time = lab.time_grid()?;
    let profile = CutoffProfile::standard();
    let samples: Result<Vec<RatioSample>> = (0..ens.count)
        .into_par_iter()
        .map(|idx| {
            let seed = member_seed(ens.seed, idx);
            let mut phi = random_profile(grid, seed, ens.sigma, ens.band_k)?;
            let mut right = h_norm(&phi, s);
            if ens.normalize && right > 0.0 {
                let inv = 1.0 / right;
                phi = phi.map(|v| v * inv);
                right = 1.0;
            }
            let windowed = airy_flow(&phi, &time).scale_in_time(|t| profile.eta(t));
            let left = xsb_norm(&windowed, s, b).value;
            Ok(make_sample(idx, seed, left, right))
        })
        .collect();
    Ok(RatioReport::build(
        "linear-xsb",
        s,
        Some(b),
        None,
        None,
        samples?,
        band_resolved(grid, &time, ens.band_k, 0),
    ))
}

/// `|| eta(t) W(t) phi ||_{L^inf_x H^{(s+1)/3}_t} <= C || phi ||_{H^s}`:
/// the pointwise-in-x gain of one third of a derivative's worth of time
/// regularity under the dispersive group.
pub fn check_kato(lab: &LabGrid, ens: &EnsembleSpec, s: f64) -> Result<RatioReport> {
    validate_count(ens)?;
    if s < -1.0 {
        return Err(Error::InvalidParameter(format!(
            "pointwise smoothing needs s >= -1, got {s}"
        )));
    }
    let grid = lab.spatial()?;
    let time = lab.time_grid()?;
    let profile = CutoffProfile::standard();
    let samples: Result<Vec<RatioSample>> = (0..ens.count)
        .into_par_iter()
        .map(|idx| {
            let seed = member_seed(ens.seed, idx);
            let mut phi = random_profile(grid, seed, ens.sigma, ens.band_k)?;
            let mut right = h_norm(&phi, s);
            if ens.normalize && right > 0.0 {
                let inv = 1.0 / right;
                phi = phi.map(|v| v * inv);
                right = 1.0;
            }
            let windowed = airy_flow(&phi, &time).scale_in_time(|t| profile.eta(t));
            let left = sup_x_sobolev_t(&windowed, (s + 1.0) / 3.0);
            Ok(make_sample(idx, seed, left, right))
        })
        .collect();
    Ok(RatioReport::build(
        "kato-smoothing",
        s,
        None,
        None,
        None,
        samples?,
        band_resolved(grid, &time, ens.band_k, 0),
    ))
}

/// Quadrature truncation for the boundary ensembles; the bump transforms
/// fall below 1e-8 of their peak well before this point.
const BOUNDARY_Z_MAX: f64 = 160.0;

fn boundary_quadrature() -> QuadratureSpec {
    QuadratureSpec {
        z_max: Some(BOUNDARY_Z_MAX),
        ..QuadratureSpec::default()
    }
}

/// The boundary field's spatial spectrum lives on the kernel scale
/// `z^{1/3}`; the weighted norms need a few harmonics of headroom beyond it
/// before their tails converge (measured: ~2% left at 2x, ~0.5% at 4x).
fn boundary_resolved(grid: SpatialGrid) -> bool {
    grid.nyquist() >= 4.0 * BOUNDARY_Z_MAX.cbrt()
}

/// `|| eta(t) [boundary evolution of g] ||_{X^{s,b}} <= C || g ||_{H^{(2s +
/// 6b - 1)/6}}` for `b` in `(1/6, 5/6)`, `s >= max(-1, 1/2 - 3b)`.
pub fn check_boundary_xsb(
    lab: &LabGrid,
    ens: &EnsembleSpec,
    s: f64,
    b: f64,
) -> Result<RatioReport> {
    validate_count(ens)?;
    if b <= 1.0 / 6.0 || b >= 5.0 / 6.0 {
        return Err(Error::InvalidParameter(format!(
            "boundary X^{{s,b}} bound needs b in (1/6, 5/6), got {b}"
        )));
    }
    if s < (-1.0f64).max(0.5 - 3.0 * b) {
        return Err(Error::InvalidParameter(format!(
            "boundary X^{{s,b}} bound needs s >= max(-1, 1/2 - 3b), got s = {s}, b = {b}"
        )));
    }
    let grid = lab.spatial()?;
    let time = lab.time_grid()?;
    let profile = CutoffProfile::standard();
    let quad = boundary_quadrature();
    let data_exponent = (2.0 * s + 6.0 * b - 1.0) / 6.0;
    let samples: Result<Vec<RatioSample>> = (0..ens.count)
        .into_par_iter()
        .map(|idx| {
            let seed = member_seed(ens.seed, idx);
            let g = random_boundary_bumps(seed, profile);
            let mut right = trace_data_norm(&g, data_exponent)?;
            let scale = if ens.normalize && right > 0.0 {
                let s = 1.0 / right;
                right = 1.0;
                s
            } else {
                1.0
            };
            let trace = BoundaryTrace::from_fn(|t| scale * g(t))?;
            let (field, _diag) = boundary_evolution(&trace, &profile, grid, &time, &quad)?;
            let windowed = field.scale_in_time(|t| profile.eta(t));
            let left = xsb_norm(&windowed, s, b).value;
            Ok(make_sample(idx, seed, left, right))
        })
        .collect();
    Ok(RatioReport::build(
        "boundary-xsb",
        s,
        Some(b),
        None,
        None,
        samples?,
        boundary_resolved(grid),
    ))
}

/// Boundary evolution maps `H^{(s+1)/3}` data into `C^0_t H^s_x` and, after
/// the time window, into `C^0_x H^{(s+1)/3}_t`; the ratio takes the larger
/// of the two image norms against the data norm.
pub fn check_boundary_sobolev(lab: &LabGrid, ens: &EnsembleSpec, s: f64) -> Result<RatioReport> {
    validate_count(ens)?;
    if !(-1.0..=2.0).contains(&s) {
        return Err(Error::InvalidParameter(format!(
            "boundary Sobolev bound is probed for s in [-1, 2], got {s}"
        )));
    }
    let grid = lab.spatial()?;
    let time = lab.time_grid()?;
    let profile = CutoffProfile::standard();
    let quad = boundary_quadrature();
    let data_exponent = (s + 1.0) / 3.0;
    let samples: Result<Vec<RatioSample>> = (0..ens.count)
        .into_par_iter()
        .map(|idx| {
            let seed = member_seed(ens.seed, idx);
            let g = random_boundary_bumps(seed, profile);
            let mut right = trace_data_norm(&g, data_exponent)?;
            let scale = if ens.normalize && right > 0.0 {
                let s = 1.0 / right;
                right = 1.0;
                s
            } else {
                1.0
            };
            let trace = BoundaryTrace::from_fn(|t| scale * g(t))?;
            let (field, _diag) = boundary_evolution(&trace, &profile, grid, &time, &quad)?;
            // Spatial norms on the raw field over the window plateau's span;
            // temporal norms on the windowed field, uniformly over x.
            let mut left_space = 0.0f64;
            for m in 0..time.n_t() {
                if time.time(m).abs() <= 2.0 {
                    left_space = left_space.max(h_norm(&field.slice_at(m), s));
                }
            }
            let windowed = field.scale_in_time(|t| profile.eta(t));
            let left_time = sup_x_sobolev_t(&windowed, data_exponent);
            Ok(make_sample(idx, seed, left_space.max(left_time), right))
        })
        .collect();
    Ok(RatioReport::build(
        "boundary-sobolev",
        s,
        None,
        None,
        None,
        samples?,
        boundary_resolved(grid),
    ))
}

/// Admissible gain ceiling for the quartic smoothing bound at regularity `s`
/// and dual modulation exponent `b_prime`: ratios stay bounded for `0 <= a`
/// strictly below the ceiling and degenerate beyond it.
pub fn smoothing_ceiling(s: f64, b_prime: f64) -> f64 {
    0.5 * (3.0 * s.min(0.0) + 6.0 * b_prime - 2.5)
}

fn smoothing_factor_fields(
    grid: SpatialGrid,
    time: &TimeGrid,
    ens: &EnsembleSpec,
    seed: u64,
    s: f64,
    b: f64,
) -> Result<([SpaceTimeField; 4], f64)> {
    let mut fields = Vec::with_capacity(4);
    let mut right = 1.0;
    for j in 0..4 {
        let factor_seed = member_seed(seed, j + 1);
        let mut u = random_modulated_field(
            grid,
            time,
            factor_seed,
            ens.sigma,
            ens.modulation_decay,
            ens.band_k,
            ens.band_m,
        )?;
        let norm = xsb_norm(&u, s, b).value;
        if ens.normalize && norm > 0.0 {
            let inv = 1.0 / norm;
            u = u.map(|v| v * inv);
        } else {
            right *= norm;
        }
        fields.push(u);
    }
    let fields: [SpaceTimeField; 4] = fields.try_into().expect("four factors");
    Ok((fields, right))
}

fn quartic_derivative(fields: &[SpaceTimeField; 4]) -> Result<SpaceTimeField> {
    let p01 = fields[0].zip_with(&fields[1], |a, b| a * b)?;
    let p23 = fields[2].zip_with(&fields[3], |a, b| a * b)?;
    let product = p01.zip_with(&p23, |a, b| a * b)?;
    apply_spacetime_multiplier(&product, |xi, _| Complex64::new(0.0, xi))
}

/// `|| d/dx (u1 u2 u3 u4) ||_{X^{s+a, -b'}} <= C prod_j || u_j ||_{X^{s,b}}`
/// for `b > 1/2`, `b'` in `(0, 1/2)`.  The gain `a` is *not* validated
/// against [`smoothing_ceiling`]: probing beyond the ceiling is how the
/// sharpness of the bound is measured.
pub fn check_nonlinear_smoothing(
    lab: &LabGrid,
    ens: &EnsembleSpec,
    s: f64,
    b: f64,
    b_prime: f64,
    a: f64,
) -> Result<RatioReport> {
    validate_count(ens)?;
    validate_smoothing_exponents(b, b_prime)?;
    if a < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "smoothing gain must be nonnegative, got {a}"
        )));
    }
    let grid = lab.spatial()?;
    let time = lab.time_grid()?;
    let samples: Result<Vec<RatioSample>> = (0..ens.count)
        .into_par_iter()
        .map(|idx| {
            let seed = member_seed(ens.seed, idx);
            let (fields, right) = smoothing_factor_fields(grid, &time, ens, seed, s, b)?;
            let forcing = quartic_derivative(&fields)?;
            let left = xsb_norm(&forcing, s + a, -b_prime).value;
            Ok(make_sample(idx, seed, left, right))
        })
        .collect();
    Ok(RatioReport::build(
        "nonlinear-smoothing",
        s,
        Some(b),
        Some(b_prime),
        Some(a),
        samples?,
        product_resolved(grid, &time, ens.band_k, ens.band_m),
    ))
}

fn validate_smoothing_exponents(b: f64, b_prime: f64) -> Result<()> {
    if b <= 0.5 {
        return Err(Error::InvalidParameter(format!(
            "quartic bounds need b > 1/2, got {b}"
        )));
    }
    if !(0.0 < b_prime && b_prime < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "dual modulation exponent must lie in (0, 1/2), got {b_prime}"
        )));
    }
    Ok(())
}

/// Swept version of [`check_nonlinear_smoothing`] over increasing `b_prime`
/// with the member data held fixed.  Asserts, per sample, that the left side
/// never increases in `b_prime` (the dual modulation weight is pointwise
/// nonincreasing), then returns one report per exponent.
pub fn smoothing_bprime_sweep(
    lab: &LabGrid,
    ens: &EnsembleSpec,
    s: f64,
    b: f64,
    a: f64,
    b_primes: &[f64],
) -> Result<Vec<RatioReport>> {
    validate_count(ens)?;
    if b_primes.is_empty() {
        return Err(Error::InvalidParameter("empty exponent sweep".into()));
    }
    for w in b_primes.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidParameter(
                "sweep exponents must increase strictly".into(),
            ));
        }
    }
    for &bp in b_primes {
        validate_smoothing_exponents(b, bp)?;
    }
    let grid = lab.spatial()?;
    let time = lab.time_grid()?;
    let rows: Result<Vec<(RatioSample, Vec<f64>)>> = (0..ens.count)
        .into_par_iter()
        .map(|idx| {
            let seed = member_seed(ens.seed, idx);
            let (fields, right) = smoothing_factor_fields(grid, &time, ens, seed, s, b)?;
            let forcing = quartic_derivative(&fields)?;
            let lefts: Vec<f64> = b_primes
                .iter()
                .map(|&bp| xsb_norm(&forcing, s + a, -bp).value)
                .collect();
            for w in lefts.windows(2) {
                assert!(
                    w[1] <= w[0] * (1.0 + 1e-9),
                    "left side increased under a stronger dual modulation weight: {} -> {}",
                    w[0],
                    w[1]
                );
            }
            Ok((make_sample(idx, seed, lefts[0], right), lefts))
        })
        .collect();
    let rows = rows?;
    let resolved = product_resolved(grid, &time, ens.band_k, ens.band_m);
    Ok(b_primes
        .iter()
        .enumerate()
        .map(|(i, &bp)| {
            let samples: Vec<RatioSample> = rows
                .iter()
                .map(|(base, lefts)| make_sample(base.index, base.seed, lefts[i], base.right))
                .collect();
            RatioReport::build(
                "nonlinear-smoothing",
                s,
                Some(b),
                Some(bp),
                Some(a),
                samples,
                resolved,
            )
        })
        .collect())
}

/// `|| int chi_R <tau - xi^3>^{e} |F^(xi, tau)| dxi ||_{L^2_tau}` over the
/// high-modulation region `R = { |tau| >= max(1, alpha |xi|^3) }`; the inner
/// integral uses the plain `dxi` measure, the outer norm the `dtau / 2pi`
/// convention shared by every temporal norm in this crate.
pub fn correction_functional(spec: &SpaceTimeSpectrum, exponent: f64, alpha: f64) -> f64 {
    let grid = spec.grid();
    let time = spec.time();
    let mut sum = 0.0;
    for m in 0..time.n_t() {
        let tau = time.tau(m);
        let mut inner = 0.0;
        for k in 0..grid.n() {
            let xi = grid.frequency(k);
            if tau.abs() >= 1.0 && tau.abs() >= alpha * xi.abs().powi(3) {
                inner += sobolev_weight(tau - xi * xi * xi, exponent)
                    * spec.coeffs()[[k, m]].norm();
            }
        }
        let line = inner * grid.dxi();
        sum += line * line;
    }
    (sum * time.dtau() / TWO_PI).sqrt()
}

/// `|| eta(t) int_0^t W(t - t') F dt' ||_{L^inf_x H^{(s+1)/3}_t} <= C (|| F
/// ||_{X^{s,-b'}} + correction)`, the correction entering for `s > 2 - 3b'`.
pub fn check_duhamel_sobolev(
    lab: &LabGrid,
    ens: &EnsembleSpec,
    s: f64,
    b_prime: f64,
) -> Result<RatioReport> {
    validate_count(ens)?;
    if !(0.0 < b_prime && b_prime < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "dual modulation exponent must lie in (0, 1/2), got {b_prime}"
        )));
    }
    if !(-1.0..=2.0).contains(&s) {
        return Err(Error::InvalidParameter(format!(
            "inhomogeneous pointwise bound is probed for s in [-1, 2], got {s}"
        )));
    }
    let grid = lab.spatial()?;
    let time = lab.time_grid()?;
    let profile = CutoffProfile::standard();
    let needs_correction = s > 2.0 - 3.0 * b_prime;
    let samples: Result<Vec<(RatioSample, f64)>> = (0..ens.count)
        .into_par_iter()
        .map(|idx| {
            let seed = member_seed(ens.seed, idx);
            let mut forcing = random_modulated_field(
                grid,
                &time,
                seed,
                ens.sigma,
                ens.modulation_decay,
                ens.band_k,
                ens.band_m,
            )?;
            let rhs_of = |f: &SpaceTimeField| -> (f64, f64) {
                let base = xsb_norm(f, s, -b_prime).value;
                if needs_correction {
                    let spec = spacetime_transform(f);
                    let corr = correction_functional(&spec, (s - 2.0) / 3.0, PROXY_ALPHA);
                    let corr_wide = correction_functional(&spec, (s - 2.0) / 3.0, 8.0 * PROXY_ALPHA);
                    let spread = if corr > 0.0 {
                        (corr - corr_wide).abs() / corr
                    } else {
                        0.0
                    };
                    (base + corr, spread)
                } else {
                    (base, 0.0)
                }
            };
            let (mut right, spread) = rhs_of(&forcing);
            if ens.normalize && right > 0.0 {
                let inv = 1.0 / right;
                forcing = forcing.map(|v| v * inv);
                right = 1.0;
            }
            let windowed = duhamel_integral(&forcing).scale_in_time(|t| profile.eta(t));
            let left = sup_x_sobolev_t(&windowed, (s + 1.0) / 3.0);
            Ok((make_sample(idx, seed, left, right), spread))
        })
        .collect();
    let samples = samples?;
    let spread = samples.iter().map(|(_, sp)| *sp).fold(0.0, f64::max);
    let mut report = RatioReport::build(
        "duhamel-sobolev",
        s,
        None,
        Some(b_prime),
        None,
        samples.into_iter().map(|(r, _)| r).collect(),
        band_resolved(grid, &time, ens.band_k, ens.band_m),
    );
    if needs_correction {
        report.proxy_spread = Some(spread);
    }
    Ok(report)
}

/// High-modulation correction for the quartic forcing: `|| int chi_R <tau -
/// xi^3>^{(s + a - 2)/3} |F^| dxi ||_{L^2_tau} <= C prod_j || u_j
/// ||_{X^{s,b}}` with `F = d/dx (u1 u2 u3 u4)`, valid for `b > 1/2` and `0
/// <= a < min(1/2, 2 - s)`.
pub fn check_correction_term(
    lab: &LabGrid,
    ens: &EnsembleSpec,
    s: f64,
    b: f64,
    a: f64,
) -> Result<RatioReport> {
    validate_count(ens)?;
    if b <= 0.5 {
        return Err(Error::InvalidParameter(format!(
            "quartic bounds need b > 1/2, got {b}"
        )));
    }
    if !(0.0 <= a && a < (0.5f64).min(2.0 - s)) {
        return Err(Error::InvalidParameter(format!(
            "correction gain must satisfy 0 <= a < min(1/2, 2 - s), got a = {a}, s = {s}"
        )));
    }
    let grid = lab.spatial()?;
    let time = lab.time_grid()?;
    let exponent = (s + a - 2.0) / 3.0;
    let samples: Result<Vec<(RatioSample, f64)>> = (0..ens.count)
        .into_par_iter()
        .map(|idx| {
            let seed = member_seed(ens.seed, idx);
            let (fields, right) = smoothing_factor_fields(grid, &time, ens, seed, s, b)?;
            let forcing = quartic_derivative(&fields)?;
            let spec = spacetime_transform(&forcing);
            let left = correction_functional(&spec, exponent, PROXY_ALPHA);
            let left_wide = correction_functional(&spec, exponent, 8.0 * PROXY_ALPHA);
            let spread = if left > 0.0 {
                (left - left_wide).abs() / left
            } else {
                0.0
            };
            Ok((make_sample(idx, seed, left, right), spread))
        })
        .collect();
    let samples = samples?;
    let spread = samples.iter().map(|(_, sp)| *sp).fold(0.0, f64::max);
    let mut report = RatioReport::build(
        "correction-term",
        s,
        Some(b),
        None,
        Some(a),
        samples.into_iter().map(|(r, _)| r).collect(),
        product_resolved(grid, &time, ens.band_k, ens.band_m),
    );
    report.proxy_spread = Some(spread);
    Ok(report)
}

// ---------------------------------------------------------------------------
// Spectral slope helpers for solution-based smoothing measurements.
// ---------------------------------------------------------------------------

/// Mean power spectrum over a set of profiles, folded onto `|xi| >= 0` and
/// sorted ascending.
pub fn average_power_spectrum(fields: &[GridFunction]) -> Vec<(f64, f64)> {
    assert!(!fields.is_empty(), "need at least one profile");
    let grid = fields[0].grid();
    let mut folded: Vec<(f64, f64)> = Vec::new();
    for k in 0..grid.n() / 2 {
        let xi = grid.dxi() * k as f64;
        let mut power = 0.0;
        for f in fields {
            let spec = crate::spectral::forward_transform(f);
            let mut p = spec.coeffs()[k].norm_sqr();
            if k > 0 {
                p += spec.coeffs()[grid.n() - k].norm_sqr();
            }
            power += p;
        }
        folded.push((xi, power / fields.len() as f64));
    }
    folded
}

/// Least-squares slope of `ln power` against `ln xi` over `lo <= xi <= hi`;
/// zero-power bins are skipped.
pub fn spectral_slope(spectrum: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = spectrum
        .iter()
        .filter(|&&(xi, p)| xi >= lo && xi <= hi && p > 0.0)
        .map(|&(xi, p)| (xi.ln(), p.ln()))
        .collect();
    assert!(pts.len() >= 2, "need at least two bins in [{lo}, {hi}]");
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in pts {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

// ---------------------------------------------------------------------------
// Dispatch and regression pins.
// ---------------------------------------------------------------------------

/// The seven ratio studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    LinearXsb,
    Kato,
    BoundaryXsb,
    BoundarySobolev,
    NonlinearSmoothing,
    DuhamelSobolev,
    CorrectionTerm,
}

/// A study together with its parameter tuple.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CheckRequest {
    pub kind: CheckKind,
    pub s: f64,
    pub b: Option<f64>,
    pub b_prime: Option<f64>,
    pub a: Option<f64>,
}

fn require(v: Option<f64>, name: &str, kind: CheckKind) -> Result<f64> {
    v.ok_or_else(|| {
        Error::InvalidParameter(format!("{kind:?} requires the `{name}` exponent"))
    })
}

/// Runs one study from its request.
pub fn run_check(req: &CheckRequest, lab: &LabGrid, ens: &EnsembleSpec) -> Result<RatioReport> {
    match req.kind {
        CheckKind::LinearXsb => {
            check_linear_xsb(lab, ens, req.s, require(req.b, "b", req.kind)?)
        }
        CheckKind::Kato => check_kato(lab, ens, req.s),
        CheckKind::BoundaryXsb => {
            check_boundary_xsb(lab, ens, req.s, require(req.b, "b", req.kind)?)
        }
        CheckKind::BoundarySobolev => check_boundary_sobolev(lab, ens, req.s),
        CheckKind::NonlinearSmoothing => check_nonlinear_smoothing(
            lab,
            ens,
            req.s,
            require(req.b, "b", req.kind)?,
            require(req.b_prime, "b_prime", req.kind)?,
            require(req.a, "a", req.kind)?,
        ),
        CheckKind::DuhamelSobolev => {
            check_duhamel_sobolev(lab, ens, req.s, require(req.b_prime, "b_prime", req.kind)?)
        }
        CheckKind::CorrectionTerm => check_correction_term(
            lab,
            ens,
            req.s,
            require(req.b, "b", req.kind)?,
            require(req.a, "a", req.kind)?,
        ),
    }
}

/// A study with its frozen max ratio from the first certified run of the
/// default lab and ensemble.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PinnedCheck {
    pub request: CheckRequest,
    pub expected_max_ratio: f64,
}

/// Regression suite: every study at its reference parameter tuple, with the
/// observed constants frozen.  `verify` asserts agreement within
/// [`PIN_RELATIVE_BAND`] on the default [`LabGrid`] and [`EnsembleSpec`].
pub fn pinned_suite() -> Vec<PinnedCheck> {
    let pin = |kind, s, b, b_prime, a, expected_max_ratio| PinnedCheck {
        request: CheckRequest {
            kind,
            s,
            b,
            b_prime,
            a,
        },
        expected_max_ratio,
    };
    vec![
        pin(CheckKind::LinearXsb, 0.0, Some(0.55), None, None, 1.963590),
        pin(CheckKind::Kato, 0.0, None, None, None, 7.867353e-1),
        pin(CheckKind::BoundaryXsb, 0.0, Some(0.55), None, None, 2.970374),
        pin(CheckKind::BoundarySobolev, 0.0, None, None, None, 8.567814e-1),
        pin(
            CheckKind::NonlinearSmoothing,
            0.0,
            Some(0.55),
            Some(0.45),
            Some(0.1),
            2.217138e-5,
        ),
        pin(
            CheckKind::DuhamelSobolev,
            0.0,
            None,
            Some(0.45),
            None,
            2.457196e-1,
        ),
        pin(
            CheckKind::DuhamelSobolev,
            1.0,
            None,
            Some(0.45),
            None,
            1.342887e-1,
        ),
        pin(
            CheckKind::CorrectionTerm,
            0.0,
            Some(0.55),
            None,
            Some(0.1),
            7.477797e-6,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::max_imag;

    #[test]
    fn generation_is_reproducible_and_real() {
        let grid = SpatialGrid::new(16.0, 64).unwrap();
        let time = TimeGrid::new(-4.0, 4.0, 256).unwrap();
        let a = random_profile(grid, 9, 1.5, 7).unwrap();
        let b = random_profile(grid, 9, 1.5, 7).unwrap();
        assert_eq!(a.values(), b.values());
        assert!(a.values().iter().all(|v| v.im.abs() < 1e-13));

        let u = random_modulated_field(grid, &time, 5, 1.5, 1.1, 7, 24).unwrap();
        let v = random_modulated_field(grid, &time, 5, 1.5, 1.1, 7, 24).unwrap();
        assert_eq!(u.values(), v.values());
        assert!(max_imag(&u) < 1e-12);
        assert!(u.l2_norm() > 0.0);
    }

    #[test]
    fn generated_fields_are_grid_independent_trig_polynomials() {
        // Same spec on doubled resolutions must reproduce the same function
        // at the shared sample points: the class is continuum, not per-grid.
        let coarse_g = SpatialGrid::new(16.0, 64).unwrap();
        let fine_g = SpatialGrid::new(16.0, 128).unwrap();
        let coarse_t = TimeGrid::new(-4.0, 4.0, 256).unwrap();
        let fine_t = TimeGrid::new(-4.0, 4.0, 512).unwrap();
        let u = random_modulated_field(coarse_g, &coarse_t, 3, 1.5, 1.1, 7, 24).unwrap();
        let v = random_modulated_field(fine_g, &fine_t, 3, 1.5, 1.1, 7, 24).unwrap();
        let mut worst = 0.0f64;
        for j in 0..coarse_g.n() {
            for m in 0..coarse_t.n_t() {
                let diff = (u.values()[[j, m]] - v.values()[[2 * j, 2 * m]]).norm();
                worst = worst.max(diff);
            }
        }
        let scale = u.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(worst < 1e-11 * scale, "worst {worst:.3e}, scale {scale:.3e}");

        let p = random_profile(coarse_g, 3, 1.5, 7).unwrap();
        let q = random_profile(fine_g, 3, 1.5, 7).unwrap();
        for j in 0..coarse_g.n() {
            assert!((p.values()[j] - q.values()[2 * j]).norm() < 1e-12);
        }
    }

    // For a single spatial mode `e^{i xi x}` the windowed-flow ratio has a
    // closed form independent of both the mode and the regularity: the
    // transform of `eta(t) e^{i xi^3 t}` is `eta^` shifted to the dispersion
    // surface, so left/right collapses to the `<.>^b`-weighted L^2 mass of
    // `eta^`.  The oracle evaluates that mass on an unrelated 1-D grid.
    #[test]
    fn windowed_flow_ratio_collapses_to_window_mass() {
        let lab = LabGrid::default();
        let grid = lab.spatial().unwrap();
        let time = lab.time_grid().unwrap();
        let profile = CutoffProfile::standard();
        let b = 0.55;

        let oracle = {
            let fine = TimeGrid::new(-8.0, 8.0, 1 << 14).unwrap();
            let series: Vec<Complex64> = (0..fine.n_t())
                .map(|i| Complex64::new(profile.eta(fine.time(i)), 0.0))
                .collect();
            sobolev_series_norm(&series, &fine, b)
        };

        for (kk, s) in [(5usize, 0.0), (9usize, 0.7)] {
            let mut spec = Spectrum::zeros(grid);
            spec.coeffs_mut()[kk] = Complex64::new(2.0 * grid.half_width(), 0.0);
            let phi = inverse_transform(&spec);
            let right = h_norm(&phi, s);
            let windowed = airy_flow(&phi, &time).scale_in_time(|t| profile.eta(t));
            let left = xsb_norm(&windowed, s, b).value;
            let ratio = left / right;
            assert!(
                (ratio - oracle).abs() < 2e-3 * oracle,
                "mode {kk}, s {s}: ratio {ratio:.6}, oracle {oracle:.6}"
            );
        }
    }

    // Same idea for the pointwise-in-x bound: every x-line of the windowed
    // single-mode flow is `eta(t) e^{i xi^3 t}` times a unimodular constant,
    // so the left side equals the temporal Sobolev norm of that tone.
    #[test]
    fn pointwise_ratio_matches_tone_oracle() {
        let lab = LabGrid::default();
        let grid = lab.spatial().unwrap();
        let time = lab.time_grid().unwrap();
        let profile = CutoffProfile::standard();
        let s = 0.0;
        let kk = 6usize;
        let xi = grid.dxi() * kk as f64;

        let oracle = {
            let fine = TimeGrid::new(-8.0, 8.0, 1 << 14).unwrap();
            let series: Vec<Complex64> = (0..fine.n_t())
                .map(|i| {
                    let t = fine.time(i);
                    Complex64::from_polar(profile.eta(t), xi.powi(3) * t)
                })
                .collect();
            sobolev_series_norm(&series, &fine, (s + 1.0) / 3.0)
        };

        let mut spec = Spectrum::zeros(grid);
        spec.coeffs_mut()[kk] = Complex64::new(2.0 * grid.half_width(), 0.0);
        let phi = inverse_transform(&spec);
        let right = h_norm(&phi, s);
        let windowed = airy_flow(&phi, &time).scale_in_time(|t| profile.eta(t));
        let left = sup_x_sobolev_t(&windowed, (s + 1.0) / 3.0);
        let ratio = left / right;
        let expected = oracle / right;
        assert!(
            (ratio - expected).abs() < 2e-3 * expected,
            "ratio {ratio:.6}, oracle {expected:.6}"
        );
    }

    #[test]
    fn quartic_product_transform_matches_convolution_oracle() {
        // The quartic pipeline is a pointwise product; its transform must
        // equal the discrete self-convolution of the factor transform with
        // the `1/(2L * span)` prefactor per fold.
        let grid = SpatialGrid::new(16.0, 16).unwrap();
        let time = TimeGrid::new(-4.0, 4.0, 16).unwrap();
        let u = random_modulated_field(grid, &time, 21, 1.0, 1.0, 1, 1).unwrap();
        let product = u
            .zip_with(&u, |a, b| a * b)
            .unwrap()
            .zip_with(&u.zip_with(&u, |a, b| a * b).unwrap(), |a, b| a * b)
            .unwrap();
        let got = spacetime_transform(&product);

        let hat = spacetime_transform(&u);
        let (n, n_t) = (grid.n(), time.n_t());
        let inv_cell = 1.0 / (2.0 * grid.half_width() * time.span());
        let convolve = |a: &ndarray::Array2<Complex64>, b: &ndarray::Array2<Complex64>| {
            let mut out = ndarray::Array2::<Complex64>::zeros((n, n_t));
            for k in 0..n {
                for m in 0..n_t {
                    let mut acc = Complex64::ZERO;
                    for p in 0..n {
                        for q in 0..n_t {
                            acc += a[[p, q]] * b[[(n + k - p) % n, (n_t + m - q) % n_t]];
                        }
                    }
                    out[[k, m]] = acc * inv_cell;
                }
            }
            out
        };
        let twofold = convolve(hat.coeffs(), hat.coeffs());
        let fourfold = convolve(&twofold, &twofold);
        let scale = fourfold.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let worst = got
            .coeffs()
            .iter()
            .zip(fourfold.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10 * scale, "worst {worst:.3e} vs scale {scale:.3e}");
    }

    #[test]
    fn sweep_reports_monotone_ratios_per_sample() {
        let lab = LabGrid {
            n: 32,
            n_t: 256,
            ..LabGrid::default()
        };
        let ens = EnsembleSpec {
            count: 2,
            band_k: 3,
            band_m: 12,
            ..EnsembleSpec::default()
        };
        let reports = smoothing_bprime_sweep(&lab, &ens, 0.0, 0.55, 0.05, &[0.30, 0.40, 0.45])
            .unwrap();
        assert_eq!(reports.len(), 3);
        for pair in reports.windows(2) {
            for (lo, hi) in pair[0].samples.iter().zip(pair[1].samples.iter()) {
                assert!(hi.ratio <= lo.ratio * (1.0 + 1e-9));
            }
        }
        assert!(reports.iter().all(|r| r.resolved));
    }

    #[test]
    fn inadmissible_exponents_are_rejected() {
        let lab = LabGrid {
            n: 32,
            n_t: 256,
            ..LabGrid::default()
        };
        let ens = EnsembleSpec {
            count: 1,
            band_k: 3,
            band_m: 12,
            ..EnsembleSpec::default()
        };
        assert!(check_nonlinear_smoothing(&lab, &ens, 0.0, 0.5, 0.45, 0.1).is_err());
        assert!(check_nonlinear_smoothing(&lab, &ens, 0.0, 0.55, 0.5, 0.1).is_err());
        assert!(check_nonlinear_smoothing(&lab, &ens, 0.0, 0.55, 0.45, -0.1).is_err());
        assert!(check_boundary_xsb(&lab, &ens, 0.0, 1.0 / 6.0).is_err());
        assert!(check_boundary_xsb(&lab, &ens, -2.0, 0.55).is_err());
        assert!(check_duhamel_sobolev(&lab, &ens, 0.0, 0.6).is_err());
        assert!(check_correction_term(&lab, &ens, 1.9, 0.55, 0.2).is_err());
        assert!(check_correction_term(&lab, &ens, 0.0, 0.55, 0.6).is_err());
        assert!(run_check(
            &CheckRequest {
                kind: CheckKind::LinearXsb,
                s: 0.0,
                b: None,
                b_prime: None,
                a: None
            },
            &lab,
            &ens
        )
        .is_err());
    }

    #[test]
    fn vanishing_right_sides_are_skipped_by_aggregates() {
        let samples = vec![
            make_sample(0, 1, 2.0, 1.0),
            make_sample(1, 2, 1.0, 0.0),
            make_sample(2, 3, 4.0, 2.0),
        ];
        let report = RatioReport::build("probe", 0.0, None, None, None, samples, true);
        assert!(report.samples[1].ratio.is_nan());
        assert_eq!(report.max_ratio, 2.0);
        assert!((report.fitted_constant - 2.0).abs() < 1e-12);
        assert_eq!(report.csv_rows().lines().count(), 3);
        assert!(report.csv_rows().starts_with("probe,0,"));
    }

    #[test]
    fn proxy_region_sensitivity_is_reported() {
        let lab = LabGrid {
            n: 32,
            n_t: 256,
            ..LabGrid::default()
        };
        let ens = EnsembleSpec {
            count: 2,
            band_k: 3,
            band_m: 12,
            ..EnsembleSpec::default()
        };
        let report = check_correction_term(&lab, &ens, 0.0, 0.55, 0.1).unwrap();
        let spread = report.proxy_spread.expect("spread reported");
        assert!(spread.is_finite() && (0.0..=1.0).contains(&spread));
        assert!(report.max_ratio.is_finite());
    }

    #[test]
    fn ensemble_summary_prints_and_stays_sane() {
        let lab = LabGrid::default();
        let ens = EnsembleSpec {
            count: 3,
            ..EnsembleSpec::default()
        };
        let linear = check_linear_xsb(&lab, &ens, 0.0, 0.55).unwrap();
        let kato = check_kato(&lab, &ens, 0.0).unwrap();
        println!("{:<18} {:>10} {:>10} {:>9}", "study", "max", "fitted", "resolved");
        for r in [&linear, &kato] {
            println!(
                "{:<18} {:>10.4e} {:>10.4e} {:>9}",
                r.id, r.max_ratio, r.fitted_constant, r.resolved
            );
        }
        for r in [&linear, &kato] {
            assert!(r.resolved);
            assert!(r.max_ratio.is_finite() && r.max_ratio > 0.01 && r.max_ratio < 100.0);
            assert_eq!(r.samples.len(), 3);
        }
        // Every mode sees the same window mass up to the sub-grid offset of
        // its dispersion point `xi^3` against the tau lattice, so the
        // windowed-flow ratios agree across samples to the offset-aliasing
        // scale (~1e-5 here), far below the 20% ensemble tolerances.
        let spreads: Vec<f64> = linear.samples.iter().map(|r| r.ratio).collect();
        let (lo, hi) = spreads
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        assert!(hi - lo < 1e-3 * hi, "spread {:.3e} of {:.6}", hi - lo, hi);
    }

    #[test]
    #[ignore]
    fn freeze_probe() {
        let lab = LabGrid::default();
        let ens = EnsembleSpec::default();
        for pin in pinned_suite() {
            let t0 = std::time::Instant::now();
            let r = run_check(&pin.request, &lab, &ens).unwrap();
            println!(
                "{:?} s={} b={:?} b'={:?} a={:?}: max {:.6e} fitted {:.6e} resolved {} spread {:?} [{:.2?}]",
                pin.request.kind,
                pin.request.s,
                pin.request.b,
                pin.request.b_prime,
                pin.request.a,
                r.max_ratio,
                r.fitted_constant,
                r.resolved,
                r.proxy_spread,
                t0.elapsed()
            );
        }
        let doubled = EnsembleSpec {
            count: 2 * ens.count,
            ..ens
        };
        let refined = lab.refined();
        for pin in pinned_suite() {
            let base = run_check(&pin.request, &lab, &ens).unwrap();
            let twice = run_check(&pin.request, &lab, &doubled).unwrap();
            let fine = run_check(&pin.request, &refined, &ens).unwrap();
            println!(
                "{:?} s={}: base {:.4e} doubled {:.4e} ({:+.2}%) refined {:.4e} ({:+.2}%) fine-resolved {}",
                pin.request.kind,
                pin.request.s,
                base.max_ratio,
                twice.max_ratio,
                100.0 * (twice.max_ratio / base.max_ratio - 1.0),
                fine.max_ratio,
                100.0 * (fine.max_ratio / base.max_ratio - 1.0),
                fine.resolved,
            );
        }
        for sigma in [1.5, 0.0, -0.5] {
            let sweep_ens = EnsembleSpec {
                sigma,
                band_k: 15,
                band_m: 40,
                ..ens
            };
            for s in [0.0, -0.05, -0.10, -0.15] {
                let r = check_nonlinear_smoothing(&lab, &sweep_ens, s, 0.55, 0.49, 0.12).unwrap();
                println!(
                    "sweep sigma={sigma} s={s}: max {:.6e} fitted {:.6e} resolved {}",
                    r.max_ratio, r.fitted_constant, r.resolved
                );
            }
        }
    }

    #[test]
    #[ignore]
    fn boundary_norm_resolution_probe() {
        let profile = CutoffProfile::standard();
        let time = TimeGrid::new(-4.0, 4.0, 1024).unwrap();
        let g = random_boundary_bumps(member_seed(0x1D5EED, 0), profile);
        let trace = BoundaryTrace::from_fn(&g).unwrap();
        for z_max in [40.0, 160.0] {
            let quad = QuadratureSpec {
                z_max: Some(z_max),
                ..QuadratureSpec::default()
            };
            for n in [64usize, 128, 256, 512] {
                let grid = SpatialGrid::new(16.0, n).unwrap();
                let t0 = std::time::Instant::now();
                let (field, _) = boundary_evolution(&trace, &profile, grid, &time, &quad).unwrap();
                let windowed = field.scale_in_time(|t| profile.eta(t));
                let x55 = xsb_norm(&windowed, 0.0, 0.55).value;
                let x30 = xsb_norm(&windowed, 0.0, 0.30).value;
                println!(
                    "z_max {z_max} n {n}: xsb(0,0.55) {x55:.6e}  xsb(0,0.30) {x30:.6e} [{:.2?}]",
                    t0.elapsed()
                );
            }
        }
    }

    #[test]
    fn pinned_suite_is_frozen() {
        for pin in pinned_suite() {
            assert!(
                pin.expected_max_ratio > 0.0,
                "unfrozen pin for {:?}",
                pin.request.kind
            );
        }
    }
}
