//! Linear flows of the Airy equation `u_t + u_xxx = 0` on the periodic grid
//! and on the right half line.
//!
//! Two operators live here.  The group `W(t)` acts by the Fourier multiplier
//! `e^{i xi^3 t}` and costs one FFT per time slice.  The boundary-forcing
//! operator produces the solution of the half-line problem with zero initial
//! data and prescribed trace `g` at `x = 0`; it is an oscillatory integral
//!
//! ```text
//!     (1/pi) Re INT_0^oo e^{izt} k(z^{1/3} x) g^(z) dz,
//! ```
//!
//! where `k(y) = e^{-(sqrt(3)+i) y / 2} rho(y)` decays as `y -> +oo`, solves
//! `k''' = -i k` where `rho = 1`, and is switched off for `y < -1` so the
//! field stays bounded on the whole line.  Since each integrand mode solves
//! the PDE exactly for `x > 0`, quadrature in `z` is the only error source;
//! the integral is discretized by composite Gauss-Legendre panels, with the
//! first panel mapped through `z = w^3` to absorb the `z^{1/3}` cusp.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffProfile;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, SpaceTimeField, SpatialGrid, TimeGrid};
use crate::spectral::{forward_transform, inverse_transform, time_transform, Spectrum};

/// Applies the Airy group `W(t)`: multiplier `e^{i xi^3 t}` on the spectrum.
pub fn airy_propagate(f: &GridFunction, t: f64) -> GridFunction {
    let mut spec = forward_transform(f);
    dispersive_phase_in_place(&mut spec, t);
    inverse_transform(&spec)
}

fn dispersive_phase_in_place(spec: &mut Spectrum, t: f64) {
    let grid = spec.grid();
    for m in 0..grid.n() {
        let xi = grid.frequency(m);
        spec.coeffs_mut()[m] *= Complex64::from_polar(1.0, xi * xi * xi * t);
    }
}

/// Evaluates the group on every slice of a time grid, one inverse FFT per
/// slice, slices computed in parallel.
pub fn airy_flow(u0: &GridFunction, time: &TimeGrid) -> SpaceTimeField {
    let spec = forward_transform(u0);
    let slices: Vec<Array1<Complex64>> = time
        .times()
        .into_par_iter()
        .map(|t| {
            let mut s = spec.clone();
            dispersive_phase_in_place(&mut s, t);
            inverse_transform(&s).into_values()
        })
        .collect();
    let mut values = Array2::zeros((u0.grid().n(), time.n_t()));
    for (m, slice) in slices.into_iter().enumerate() {
        values.column_mut(m).assign(&slice);
    }
    SpaceTimeField::new(u0.grid(), *time, values).expect("slice shapes match by construction")
}

/// Trace of the group at arbitrary times and a fixed point `x`, by direct
/// summation of the spectral series (the times need not lie on any grid).
pub fn airy_trace_at(u0: &GridFunction, x: f64, times: &[f64]) -> Vec<Complex64> {
    let spec = forward_transform(u0);
    let grid = spec.grid();
    let modes: Vec<(f64, Complex64)> = (0..grid.n())
        .map(|m| {
            let xi = grid.frequency(m);
            (xi, spec.coeffs()[m] * Complex64::from_polar(1.0, xi * x))
        })
        .collect();
    let scale = 1.0 / (2.0 * grid.half_width());
    times
        .par_iter()
        .map(|&t| {
            let mut acc = Complex64::ZERO;
            for &(xi, c) in &modes {
                acc += c * Complex64::from_polar(1.0, xi * xi * xi * t);
            }
            acc * scale
        })
        .collect()
}

/// The decaying boundary kernel `k(y) = e^{-(sqrt(3)+i) y / 2} rho(y)`.
pub fn edge_kernel(profile: &CutoffProfile, y: f64) -> Complex64 {
    let rho = profile.rho(y);
    if rho == 0.0 {
        return Complex64::ZERO;
    }
    let decay = (-0.5 * 3.0_f64.sqrt() * y).exp();
    Complex64::from_polar(rho * decay, -0.5 * y)
}

// ---------------------------------------------------------------------------
// Boundary trace data and its half-line Fourier transform table.
// ---------------------------------------------------------------------------

/// Default padding window for boundary traces; traces must be supported well
/// inside `[0, window)` for the transform table to be alias-free.
pub const TRACE_WINDOW: f64 = 64.0;
/// Default fine-grid resolution of the trace window.
pub const TRACE_SAMPLES: usize = 1 << 17;

/// Boundary data `g` sampled on a fine grid over `[0, TRACE_WINDOW)` together
/// with a table of its transform `g^(z) = INT_0^oo e^{-izt} g(t) dt` on the
/// nonnegative dual grid.  Arbitrary-frequency access interpolates the table
/// with a local barycentric stencil; negative frequencies use the conjugate
/// symmetry of real data.
pub struct BoundaryTrace {
    window: f64,
    n_fine: usize,
    samples: Vec<f64>,
    table: Vec<Complex64>,
    table_max: f64,
    support_leak: f64,
    extent: f64,
}

/// Width of the barycentric interpolation stencil on the transform table.
const STENCIL: usize = 12;

impl BoundaryTrace {
    /// Samples a closure over the default window.
    pub fn from_fn(g: impl Fn(f64) -> f64) -> Result<Self> {
        let dt = TRACE_WINDOW / TRACE_SAMPLES as f64;
        let samples: Vec<f64> = (0..TRACE_SAMPLES).map(|i| g(i as f64 * dt)).collect();
        Self::from_samples(samples, TRACE_WINDOW)
    }

    /// Builds from a sample prefix (remaining samples are zero); the prefix
    /// spacing must be `window / TRACE_SAMPLES`.
    pub fn from_prefix(prefix: &[f64], window: f64) -> Result<Self> {
        if prefix.len() > TRACE_SAMPLES {
            return Err(Error::InvalidParameter(format!(
                "trace prefix of {} samples exceeds the {} available",
                prefix.len(),
                TRACE_SAMPLES
            )));
        }
        let mut samples = vec![0.0; TRACE_SAMPLES];
        samples[..prefix.len()].copy_from_slice(prefix);
        Self::from_samples(samples, window)
    }

    fn from_samples(samples: Vec<f64>, window: f64) -> Result<Self> {
        let n_fine = samples.len();
        let time = TimeGrid::new(0.0, window, n_fine)?;
        let series: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let coeffs = time_transform(&series, &time);
        // Keep slots 0..=n/2: the nonnegative dual frequencies.
        let table: Vec<Complex64> = coeffs[..=n_fine / 2].to_vec();
        let table_max = table.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let tail_start = samples.len() - samples.len() / 64;
        let tail_max = samples[tail_start..]
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        let peak = samples.iter().map(|v| v.abs()).fold(0.0, f64::max);
        // Effective time extent: past the last sample above 1e-9 of the peak
        // the data contributes nothing the quadrature needs to resolve.
        let extent = if peak > 0.0 {
            samples
                .iter()
                .rposition(|v| v.abs() >= 1e-9 * peak)
                .map(|i| (i + 1) as f64 * window / n_fine as f64)
                .unwrap_or(0.0)
        } else {
            0.0
        };
        Ok(Self {
            window,
            n_fine,
            samples,
            table,
            table_max,
            support_leak: if peak > 0.0 { tail_max / peak } else { 0.0 },
            extent,
        })
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    /// Spacing of the transform table.
    pub fn dtau(&self) -> f64 {
        std::f64::consts::PI * 2.0 / self.window
    }

    /// Largest tabulated frequency.
    pub fn tau_max(&self) -> f64 {
        std::f64::consts::PI * self.n_fine as f64 / self.window
    }

    pub fn boundary_value(&self) -> f64 {
        self.samples[0]
    }

    pub fn table_max(&self) -> f64 {
        self.table_max
    }

    /// Relative size of the samples in the last 1/64 of the window; values
    /// far from zero mean the data does not fit the window and the transform
    /// table is unreliable.
    pub fn support_leak(&self) -> f64 {
        self.support_leak
    }

    /// Time extent of the data: the transform oscillates like `e^{-izt'}`
    /// for `t'` up to this value, which the quadrature must resolve on top
    /// of the evaluation phase `e^{izt}`.
    pub fn extent(&self) -> f64 {
        self.extent
    }

    /// Trace value at an arbitrary time by linear interpolation of the fine
    /// samples (zero outside `[0, window)`).
    pub fn sample_at(&self, t: f64) -> f64 {
        if t < 0.0 || t >= self.window {
            return 0.0;
        }
        let s = t / self.window * self.n_fine as f64;
        let i = (s.floor() as usize).min(self.n_fine - 1);
        let frac = s - i as f64;
        let right = if i + 1 < self.n_fine {
            self.samples[i + 1]
        } else {
            0.0
        };
        self.samples[i] * (1.0 - frac) + right * frac
    }

    fn table_entry(&self, idx: i64) -> Complex64 {
        if idx >= 0 {
            self.table[idx as usize]
        } else {
            self.table[(-idx) as usize].conj()
        }
    }

    /// Transform at an arbitrary frequency by barycentric interpolation on a
    /// 12-point uniform stencil; the table resolves the transform of
    /// window-supported data far beyond stencil accuracy.
    pub fn transform_at(&self, z: f64) -> Complex64 {
        let dtau = self.dtau();
        let s = z / dtau;
        let center = s.round() as i64;
        let top = (self.n_fine / 2) as i64;
        let mut i0 = center - (STENCIL as i64) / 2;
        if i0 + STENCIL as i64 - 1 > top {
            i0 = top - STENCIL as i64 + 1;
        }
        // Nodes below the table mirror through conjugate symmetry, so no
        // lower clamp is needed.
        let mut num = Complex64::ZERO;
        let mut den = 0.0;
        let mut sign = 1.0;
        let mut binom = 1.0f64;
        for j in 0..STENCIL {
            let idx = i0 + j as i64;
            let diff = s - idx as f64;
            if diff.abs() < 1e-13 {
                return self.table_entry(idx);
            }
            let w = sign * binom / diff;
            num += self.table_entry(idx) * w;
            den += w;
            sign = -sign;
            binom *= (STENCIL - 1 - j) as f64 / (j + 1) as f64;
        }
        num / den
    }

    /// Adaptive truncation point: the last tabulated frequency whose modulus
    /// stays above `floor` times the table maximum, with margin, clamped away
    /// from the alias-contaminated top of the table.
    fn adaptive_z_max(&self, floor: f64) -> f64 {
        let threshold = floor * self.table_max;
        let mut last = 0usize;
        for (m, c) in self.table.iter().enumerate() {
            if c.norm() >= threshold {
                last = m;
            }
        }
        let z = last as f64 * self.dtau() * 1.05 + 5.0;
        z.clamp(30.0, 0.45 * self.tau_max())
    }
}

// ---------------------------------------------------------------------------
// Gauss-Legendre rules and the composite dual-frequency quadrature.
// ---------------------------------------------------------------------------

/// Nodes and weights of the `order`-point Gauss-Legendre rule on `[-1, 1]`,
/// by Newton iteration on the Legendre polynomial from the Chebyshev initial
/// guess.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Recurrence for P_n(x) and P_n'(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Quadrature controls for the boundary-forcing integral.  `None` fields are
/// chosen adaptively from the data: the truncation point from transform
/// decay, the panel count from the total phase `z_max * |t|_max`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    pub panels: Option<usize>,
    pub rule_order: usize,
    pub z_max: Option<f64>,
    /// Relative transform floor used by the adaptive truncation.
    pub decay_floor: f64,
    /// Re-run with doubled panels and report the difference.
    pub self_check: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            panels: None,
            rule_order: 16,
            z_max: None,
            decay_floor: 1e-9,
            self_check: false,
        }
    }
}

/// What the quadrature actually did, for manifests and error reporting.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct QuadratureDiagnostics {
    pub z_max: f64,
    pub panels: usize,
    pub nodes: usize,
    /// Modulus of the transform at the truncation point relative to its
    /// maximum: the scale of the neglected tail.
    pub tail_scale: f64,
    /// Maximum difference against a doubled-panel rerun, when requested.
    pub self_check_error: Option<f64>,
}

fn resolve_panels(spec: &QuadratureSpec, z_max: f64, phase_rate: f64) -> usize {
    match spec.panels {
        Some(p) => p.max(1),
        // About 20 radians of phase per panel keeps an order-16 rule at
        // machine accuracy; the floor keeps low-phase runs well resolved.
        None => (((z_max * phase_rate.max(0.5)) / 20.0).ceil() as usize + 32).min(4096),
    }
}

/// Composite nodes `(z, weight)` on `[0, z_max]`, uniform panels, the first
/// panel mapped through `z = w^3` so integrands with `z^{1/3}` structure at
/// the origin are smooth in the panel variable.
fn composite_nodes(z_max: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (gl_x, gl_w) = gauss_legendre(order);
    let mut out = Vec::with_capacity(panels * order);
    let width = z_max / panels as f64;
    // First panel in the cube-root variable.
    let w_edge = width.cbrt();
    for q in 0..order {
        let w = 0.5 * w_edge * (gl_x[q] + 1.0);
        let jac = 0.5 * w_edge * 3.0 * w * w;
        out.push((w * w * w, gl_w[q] * jac));
    }
    for p in 1..panels {
        let a = p as f64 * width;
        for q in 0..order {
            let z = a + 0.5 * width * (gl_x[q] + 1.0);
            out.push((z, gl_w[q] * 0.5 * width));
        }
    }
    out
}

struct PreparedQuadrature {
    nodes: Vec<(f64, f64)>,
    /// Per-node `weight * g^(z) / pi`.
    coefficients: Vec<Complex64>,
    z_max: f64,
    panels: usize,
}

fn prepare(
    trace: &BoundaryTrace,
    spec: &QuadratureSpec,
    t_absmax: f64,
    panel_scale: usize,
) -> PreparedQuadrature {
    let z_max = spec
        .z_max
        .unwrap_or_else(|| trace.adaptive_z_max(spec.decay_floor))
        .min(0.48 * trace.tau_max());
    // The transform of data with time extent A carries phase up to A per
    // z-unit, on top of the evaluation phase |t|; both set the panel budget.
    let panels = resolve_panels(spec, z_max, t_absmax + trace.extent()) * panel_scale;
    let nodes = composite_nodes(z_max, panels, spec.rule_order);
    let coefficients = nodes
        .iter()
        .map(|&(z, w)| trace.transform_at(z) * (w / std::f64::consts::PI))
        .collect();
    PreparedQuadrature {
        nodes,
        coefficients,
        z_max,
        panels,
    }
}

fn evolution_with(
    prep: &PreparedQuadrature,
    profile: &CutoffProfile,
    grid: SpatialGrid,
    time: &TimeGrid,
) -> SpaceTimeField {
    let n = grid.n();
    let n_t = time.n_t();
    let times = time.times();
    // e^{izt} for every node and slice, node-major.
    let phases: Vec<Complex64> = prep
        .nodes
        .par_iter()
        .flat_map_iter(|&(z, _)| {
            let times = times.clone();
            (0..n_t).map(move |m| Complex64::from_polar(1.0, z * times[m]))
        })
        .collect();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let x = grid.point(j);
            let mut row = vec![Complex64::ZERO; n_t];
            for (q, &(z, _)) in prep.nodes.iter().enumerate() {
                let d = prep.coefficients[q] * edge_kernel(profile, z.cbrt() * x);
                if d.norm_sqr() == 0.0 {
                    continue;
                }
                let base = q * n_t;
                for (m, r) in row.iter_mut().enumerate() {
                    *r += d * phases[base + m];
                }
            }
            row
        })
        .collect();
    let mut values = Array2::zeros((n, n_t));
    for (j, row) in rows.into_iter().enumerate() {
        for (m, v) in row.into_iter().enumerate() {
            values[[j, m]] = Complex64::new(v.re, 0.0);
        }
    }
    SpaceTimeField::new(grid, *time, values).expect("constructed with matching shape")
}

fn points_with(
    prep: &PreparedQuadrature,
    profile: &CutoffProfile,
    points: &[(f64, f64)],
) -> Vec<f64> {
    points
        .par_iter()
        .map(|&(x, t)| {
            let mut acc = Complex64::ZERO;
            for (q, &(z, _)) in prep.nodes.iter().enumerate() {
                let k = edge_kernel(profile, z.cbrt() * x);
                if k.norm_sqr() == 0.0 {
                    continue;
                }
                acc += prep.coefficients[q] * k * Complex64::from_polar(1.0, z * t);
            }
            acc.re
        })
        .collect()
}

fn diagnostics(
    trace: &BoundaryTrace,
    prep: &PreparedQuadrature,
    self_check_error: Option<f64>,
) -> QuadratureDiagnostics {
    QuadratureDiagnostics {
        z_max: prep.z_max,
        panels: prep.panels,
        nodes: prep.nodes.len(),
        tail_scale: if trace.table_max > 0.0 {
            trace.transform_at(prep.z_max).norm() / trace.table_max
        } else {
            0.0
        },
        self_check_error,
    }
}

/// Evaluates the boundary-forcing field on a full space-time grid.  The field
/// is real; for `x > 0` it solves the Airy equation with trace `g` at the
/// origin, and for `x < -...` the kernel cutoff keeps it bounded.
pub fn boundary_evolution(
    trace: &BoundaryTrace,
    profile: &CutoffProfile,
    grid: SpatialGrid,
    time: &TimeGrid,
    spec: &QuadratureSpec,
) -> Result<(SpaceTimeField, QuadratureDiagnostics)> {
    let t_absmax = time.t_min().abs().max(time.t_max().abs());
    let prep = prepare(trace, spec, t_absmax, 1);
    let field = evolution_with(&prep, profile, grid, time);
    if spec.self_check {
        let fine = prepare(trace, spec, t_absmax, 2);
        let fine_field = evolution_with(&fine, profile, grid, time);
        let diff = field
            .values()
            .iter()
            .zip(fine_field.values().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let diag = diagnostics(trace, &fine, Some(diff));
        Ok((fine_field, diag))
    } else {
        let diag = diagnostics(trace, &prep, None);
        Ok((field, diag))
    }
}

/// Evaluates the boundary-forcing field at arbitrary `(x, t)` points (no grid
/// involved), e.g. for finite-difference residual probes.
pub fn boundary_evolution_at(
    trace: &BoundaryTrace,
    profile: &CutoffProfile,
    points: &[(f64, f64)],
    spec: &QuadratureSpec,
) -> Result<(Vec<f64>, QuadratureDiagnostics)> {
    let t_absmax = points.iter().map(|p| p.1.abs()).fold(0.5, f64::max);
    let prep = prepare(trace, spec, t_absmax, 1);
    let values = points_with(&prep, profile, points);
    if spec.self_check {
        let fine = prepare(trace, spec, t_absmax, 2);
        let fine_values = points_with(&fine, profile, points);
        let diff = values
            .iter()
            .zip(fine_values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let diag = diagnostics(trace, &fine, Some(diff));
        Ok((fine_values, diag))
    } else {
        let diag = diagnostics(trace, &prep, None);
        Ok((values, diag))
    }
}

// ---------------------------------------------------------------------------
// The full linear half-line problem.
// ---------------------------------------------------------------------------

/// Output of [`solve_linear_ibvp`].
pub struct LinearIbvpSolution {
    pub field: SpaceTimeField,
    pub diagnostics: QuadratureDiagnostics,
    /// `|g(0) - u0(0)|`: zero-order corner compatibility of the data.
    pub corner_mismatch: f64,
    /// The corrected trace fed to the boundary-forcing operator.
    pub correction: BoundaryTrace,
}

/// Solves `u_t + u_xxx = 0`, `u(x,0) = u0e(x)`, `u(0,t) = g(t)` for `x > 0`,
/// `t` in `[0, horizon]`.  The whole-line part `W(t) u0e` is corrected by the
/// boundary-forcing field driven by `eta(t/horizon) (g - trace of W(t) u0e)`,
/// so the result matches both pieces of data where they apply; outside
/// `x > 0`, `t in [0, horizon]` the field is a smooth extension with no
/// boundary meaning.
pub fn solve_linear_ibvp(
    u0e: &GridFunction,
    g: impl Fn(f64) -> f64,
    time: &TimeGrid,
    horizon: f64,
    profile: &CutoffProfile,
    spec: &QuadratureSpec,
) -> Result<LinearIbvpSolution> {
    if horizon <= 0.0 || 2.0 * horizon > TRACE_WINDOW {
        return Err(Error::InvalidParameter(format!(
            "horizon must lie in (0, {}], got {horizon}",
            TRACE_WINDOW / 2.0
        )));
    }
    let grid = u0e.grid();
    let free = airy_flow(u0e, time);

    // Sample the free trace at the origin on the fine grid up to the cutoff
    // support edge 2*horizon, build the corrected boundary data.
    let dt_fine = TRACE_WINDOW / TRACE_SAMPLES as f64;
    let n_eff = ((2.0 * horizon) / dt_fine).ceil() as usize + 2;
    let fine_times: Vec<f64> = (0..n_eff).map(|i| i as f64 * dt_fine).collect();
    let p = airy_trace_at(u0e, 0.0, &fine_times);
    let prefix: Vec<f64> = fine_times
        .iter()
        .zip(p.iter())
        .map(|(&t, trace)| profile.eta(t / horizon) * (g(t) - trace.re))
        .collect();
    let correction = BoundaryTrace::from_prefix(&prefix, TRACE_WINDOW)?;

    let (forced, diagnostics) = boundary_evolution(&correction, profile, grid, time, spec)?;
    let field = free.zip_with(&forced, |a, b| a + b)?;
    let corner_mismatch = (g(0.0) - u0e.values()[grid.origin_index()].re).abs();
    Ok(LinearIbvpSolution {
        field,
        diagnostics,
        corner_mismatch,
        correction,
    })
}
