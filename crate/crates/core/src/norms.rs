//! Sobolev, Bourgain-type, and mixed Lebesgue norms of grid data.
//!
//! All spectral norms use the Parseval-consistent pairing fixed in
//! [`crate::spectral`]: a factor `1/(2 pi)` per transformed variable, so that
//! every norm at zero smoothness collapses exactly to the discrete `L^2`
//! norm.  The dispersive weight is `<tau - xi^3>^b`, measuring distance from
//! the cubic dispersion surface of the Airy group.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::extension::{extend, ExtensionStrategy, HalfLineFunction};
use crate::grid::{GridFunction, SpaceTimeField, TimeGrid};
use crate::spectral::{
    forward_transform, sobolev_weight, spacetime_transform, time_transform,
};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Inhomogeneous Sobolev norm `sqrt((1/2pi) sum <xi>^{2s} |f^|^2 dxi)`.
pub fn h_norm(f: &GridFunction, s: f64) -> f64 {
    let spec = forward_transform(f);
    spec.weighted_l2(|xi| sobolev_weight(xi, 2.0 * s)).sqrt()
}

/// Homogeneous Sobolev norm with weight `|xi|^{2s}`.  For `s < 0` a nonzero
/// mean makes the norm infinite; that is reported as `f64::INFINITY` rather
/// than an error so ratio studies can skip such samples explicitly.
pub fn homogeneous_h_norm(f: &GridFunction, s: f64) -> f64 {
    let spec = forward_transform(f);
    let grid = spec.grid();
    let dxi = grid.dxi();
    let mut sum = 0.0;
    for m in 0..grid.n() {
        let c2 = spec.coeffs()[m].norm_sqr();
        let w = grid.frequency(m).abs().powf(2.0 * s);
        if w.is_infinite() {
            if c2 > 0.0 {
                return f64::INFINITY;
            }
            continue; // exact zero mass at a singular weight contributes nothing
        }
        sum += w * c2;
    }
    (sum * dxi / TWO_PI).sqrt()
}

/// Sobolev norm of a time series on its periodic window, same pairing as
/// [`h_norm`] with `dt`/`dtau` in place of `dx`/`dxi`.
pub fn sobolev_series_norm(series: &[Complex64], time: &TimeGrid, s: f64) -> f64 {
    let coeffs = time_transform(series, time);
    let dtau = time.dtau();
    let sum: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| sobolev_weight(time.tau(m), 2.0 * s) * c.norm_sqr())
        .sum();
    (sum * dtau / TWO_PI).sqrt()
}

/// Upper bound for the half-line Sobolev norm realized by one extension
/// strategy.  The continuum quantity is an infimum over all extensions; this
/// surrogate is the whole-line norm of the chosen extension, hence always an
/// upper bound.  Requires `s > -1/2`, where restriction/extension duality
/// makes the half-line space well defined.
pub fn halfline_norm(u0: &HalfLineFunction, s: f64, strategy: ExtensionStrategy) -> Result<f64> {
    if s <= -0.5 {
        return Err(Error::InvalidParameter(format!(
            "half-line Sobolev norms need s > -1/2, got {s}"
        )));
    }
    Ok(h_norm(&extend(u0, strategy)?, s))
}

/// Minimum of [`halfline_norm`] over a strategy set (the tightest upper bound
/// this crate offers); returns the winning strategy alongside the value.
pub fn best_halfline_norm(
    u0: &HalfLineFunction,
    s: f64,
    strategies: &[ExtensionStrategy],
) -> Result<(f64, ExtensionStrategy)> {
    if strategies.is_empty() {
        return Err(Error::InvalidParameter("empty strategy set".into()));
    }
    let mut best: Option<(f64, ExtensionStrategy)> = None;
    for &strategy in strategies {
        let v = halfline_norm(u0, s, strategy)?;
        if best.map_or(true, |(b, _)| v < b) {
            best = Some((v, strategy));
        }
    }
    Ok(best.expect("nonempty set"))
}

/// Dispersive-weighted space-time norm together with its health flags.
#[derive(Clone, Copy, Debug)]
pub struct XsbNorm {
    pub value: f64,
    /// Mass fraction of the field in the outer 1/16 of the time window on
    /// each side; large values mean the periodic window is cutting the field.
    pub edge_mass_fraction: f64,
    /// Whether the dispersion surface `tau = xi^3` stays inside the temporal
    /// Nyquist range for every grid frequency.  When false the weight for the
    /// fastest modes is computed against aliased modulations.
    pub dispersion_resolved: bool,
}

/// `X^{s,b}` norm: `sqrt((1/2pi)^2 sum <xi>^{2s} <tau - xi^3>^{2b} |u^|^2
/// dxi dtau)`.
pub fn xsb_norm(u: &SpaceTimeField, s: f64, b: f64) -> XsbNorm {
    let spec = spacetime_transform(u);
    let grid = spec.grid();
    let time = spec.time();
    let mut sum = 0.0;
    for k in 0..grid.n() {
        let xi = grid.frequency(k);
        let ws = sobolev_weight(xi, 2.0 * s);
        let xi3 = xi * xi * xi;
        for m in 0..time.n_t() {
            let wb = sobolev_weight(time.tau(m) - xi3, 2.0 * b);
            sum += ws * wb * spec.coeffs()[[k, m]].norm_sqr();
        }
    }
    let value = (sum * grid.dxi() * time.dtau() / (TWO_PI * TWO_PI)).sqrt();

    let n_t = time.n_t();
    let edge = (n_t / 16).max(1);
    let mut edge_mass = 0.0;
    let mut total = 0.0;
    for (m, col) in u.values().columns().into_iter().enumerate() {
        let mass: f64 = col.iter().map(|v| v.norm_sqr()).sum();
        total += mass;
        if m < edge || m >= n_t - edge {
            edge_mass += mass;
        }
    }
    XsbNorm {
        value,
        edge_mass_fraction: if total > 0.0 { edge_mass / total } else { 0.0 },
        dispersion_resolved: grid.nyquist().powi(3) <= time.nyquist(),
    }
}

/// `sup_x` of the temporal Sobolev norm `H^b_t` over grid lines, the discrete
/// surrogate of `L^infty_x H^b_t`.
pub fn sup_x_sobolev_t(u: &SpaceTimeField, b: f64) -> f64 {
    let time = u.time();
    let mut best = 0.0f64;
    for row in u.values().rows() {
        let series: Vec<Complex64> = row.to_vec();
        best = best.max(sobolev_series_norm(&series, &time, b));
    }
    best
}

/// A Lebesgue exponent in `[1, oo]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LebesgueExponent {
    Finite(f64),
    Infinity,
}

impl LebesgueExponent {
    fn validate(&self) -> Result<()> {
        match self {
            LebesgueExponent::Finite(p) if *p >= 1.0 && p.is_finite() => Ok(()),
            LebesgueExponent::Infinity => Ok(()),
            LebesgueExponent::Finite(p) => Err(Error::InvalidParameter(format!(
                "Lebesgue exponent must lie in [1, oo], got {p}"
            ))),
        }
    }
}

/// Mixed norm `L^p_t L^q_x`: the `q`-norm in space first, then the `p`-norm
/// of the resulting time profile.
pub fn mixed_lebesgue_norm(
    u: &SpaceTimeField,
    p_time: LebesgueExponent,
    q_space: LebesgueExponent,
) -> Result<f64> {
    p_time.validate()?;
    q_space.validate()?;
    let dx = u.grid().dx();
    let dt = u.time().dt();
    let space_norms: Vec<f64> = u
        .values()
        .columns()
        .into_iter()
        .map(|col| match q_space {
            LebesgueExponent::Infinity => col.iter().map(|v| v.norm()).fold(0.0, f64::max),
            LebesgueExponent::Finite(q) => {
                let sum: f64 = col.iter().map(|v| v.norm().powf(q)).sum();
                (sum * dx).powf(1.0 / q)
            }
        })
        .collect();
    Ok(match p_time {
        LebesgueExponent::Infinity => space_norms.into_iter().fold(0.0, f64::max),
        LebesgueExponent::Finite(p) => {
            let sum: f64 = space_norms.iter().map(|v| v.powf(p)).sum();
            (sum * dt).powf(1.0 / p)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::CutoffProfile;
    use crate::grid::SpatialGrid;
    use approx::assert_abs_diff_eq;
    use ndarray::Array1;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_function(grid: SpatialGrid, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GridFunction::new(
            grid,
            Array1::from_iter((0..grid.n()).map(|_| {
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            })),
        )
        .unwrap()
    }

    #[test]
    fn zero_smoothness_is_l2() {
        let grid = SpatialGrid::new(7.0, 128).unwrap();
        let f = random_function(grid, 1);
        assert_abs_diff_eq!(h_norm(&f, 0.0), f.l2_norm(), epsilon = 1e-12);
        assert_eq!(h_norm(&GridFunction::zeros(grid), 1.3), 0.0);
    }

    #[test]
    fn gaussian_h1_matches_frozen_quadrature_value() {
        // Oracle (independent quadrature of (1/2pi) int <xi>^2 |Ff|^2 dxi for
        // f = exp(-x^2/2), frozen): 1.63054615891678...
        let grid = SpatialGrid::new(16.0, 512).unwrap();
        let f = GridFunction::from_real_fn(grid, |x| (-x * x / 2.0).exp());
        assert_abs_diff_eq!(h_norm(&f, 1.0), 1.630_546_158_916_78, epsilon = 1e-10);
        // And the L^2 norm is pi^{1/4}.
        assert_abs_diff_eq!(h_norm(&f, 0.0), 1.331_335_363_800_39, epsilon = 1e-10);
    }

    #[test]
    fn homogeneous_norm_on_plane_wave_and_zero_mode() {
        let grid = SpatialGrid::new(5.0, 64).unwrap();
        let xi_j = grid.frequency(6);
        let wave = GridFunction::from_fn(grid, |x| Complex64::from_polar(1.0, xi_j * x));
        let expect = xi_j.abs().powf(0.25) * (2.0 * grid.half_width()).sqrt();
        assert_abs_diff_eq!(homogeneous_h_norm(&wave, 0.25), expect, epsilon = 1e-9);

        // Nonzero mean + negative s => infinite.
        let constant = GridFunction::from_real_fn(grid, |_| 1.0);
        assert!(homogeneous_h_norm(&constant, -0.25).is_infinite());
        // s = 0 keeps the zero mode with unit weight: plain L^2.
        let f = random_function(grid, 9);
        assert_abs_diff_eq!(homogeneous_h_norm(&f, 0.0), f.l2_norm(), epsilon = 1e-12);
    }

    #[test]
    fn homogeneous_norm_agrees_with_multiplier_route() {
        let grid = SpatialGrid::new(5.0, 64).unwrap();
        // Zero-mean random function.
        let mut f = random_function(grid, 33);
        let mean = f.values().sum() / grid.n() as f64;
        f.values_mut().mapv_inplace(|v| v - mean);
        for &s in &[0.5, 1.0] {
            let direct = homogeneous_h_norm(&f, s);
            let via_multiplier = crate::spectral::apply_multiplier(&f, |xi| {
                Complex64::new(xi.abs().powf(s), 0.0)
            })
            .unwrap()
            .l2_norm();
            assert_abs_diff_eq!(direct, via_multiplier, epsilon = 1e-9 * direct.max(1.0));
        }
    }

    #[test]
    fn halfline_norm_zero_strategy_at_s0_is_plain_l2() {
        let grid = SpatialGrid::new(10.0, 128).unwrap();
        let u0 = HalfLineFunction::from_real_fn(grid, |x| (-x).exp() * (3.0 * x).sin());
        let v = halfline_norm(&u0, 0.0, ExtensionStrategy::Zero).unwrap();
        assert_abs_diff_eq!(v, u0.l2_norm(), epsilon = 1e-12);
        assert!(halfline_norm(&u0, -0.6, ExtensionStrategy::Zero).is_err());
    }

    #[test]
    fn vanishing_boundary_data_reflection_norm_matches_frozen_value() {
        // u0 = x e^{-x} vanishes at the origin; even reflection gives
        // |x| e^{-|x|} whose H^1 norm is exactly 1 (frozen from the
        // closed-form transform 2(1 - xi^2)/(1 + xi^2)^2).
        // The reflected profile has a kink, so the grid norm converges only
        // first-order in dx; 5e-3 reflects the n = 4096 discretization floor.
        let grid = SpatialGrid::new(20.0, 4096).unwrap();
        let u0 = HalfLineFunction::from_real_fn(grid, |x| x * (-x).exp());
        let v = halfline_norm(&u0, 1.0, ExtensionStrategy::EvenReflection).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 5e-3);
    }

    #[test]
    fn best_halfline_norm_reports_minimum_and_winner() {
        let grid = SpatialGrid::new(20.0, 1024).unwrap();
        let u0 = HalfLineFunction::from_real_fn(grid, |x| (-x).exp());
        let set = ExtensionStrategy::standard_set();
        let (best, winner) = best_halfline_norm(&u0, 1.2, &set).unwrap();
        for &strategy in &set {
            let v = halfline_norm(&u0, 1.2, strategy).unwrap();
            assert!(v.is_finite());
            assert!(best <= v + 1e-12, "{strategy:?} beat the reported best");
        }
        assert_ne!(winner, ExtensionStrategy::Zero, "zero extension jumps at s > 1/2");
    }

    #[test]
    fn xsb_at_zero_indices_is_spacetime_l2() {
        let grid = SpatialGrid::new(6.0, 32).unwrap();
        let time = TimeGrid::new(-4.0, 4.0, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = SpaceTimeField::from_fn(grid, time, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let norm = xsb_norm(&u, 0.0, 0.0);
        assert_abs_diff_eq!(norm.value, u.l2_norm(), epsilon = 1e-10);
    }

    #[test]
    fn xsb_of_windowed_dispersive_wave_matches_quadrature_oracle() {
        // u = eta(t) e^{i(xi_j x + xi_j^3 t)} concentrates on the single
        // spatial mode xi_j with modulation profile eta^(tau - xi_j^3), so
        //   value^2 = 2L <xi_j>^{2s} (1/2pi) int <sigma>^{2b} |eta^(sigma)|^2.
        // Oracle: refined trapezoid quadrature with an independently computed
        // eta transform.
        let grid = SpatialGrid::new(6.0, 32).unwrap();
        let time = TimeGrid::new(-4.0, 4.0, 256).unwrap();
        let cut = CutoffProfile::standard();
        let (s, b) = (0.3, 0.55);
        let xi_j = grid.frequency(2);
        let u = SpaceTimeField::from_fn(grid, time, |x, t| {
            Complex64::from_polar(cut.eta(t), xi_j * x + xi_j.powi(3) * t)
        });
        let got = xsb_norm(&u, s, b);
        assert!(got.dispersion_resolved || xi_j.abs() < grid.nyquist());

        // eta^(sigma) by direct fine trapezoid on the support [-2, 2].
        let eta_hat = |sigma: f64| {
            let (m, h) = (8000usize, 4.0 / 8000.0);
            let mut acc = 0.0;
            for i in 0..=m {
                let t = -2.0 + i as f64 * h;
                let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                acc += w * cut.eta(t) * (sigma * t).cos();
            }
            acc * h
        };
        let (m, h) = (24000usize, 200.0 / 24000.0);
        let mut integral = 0.0;
        for i in 0..=m {
            let sigma = -100.0 + i as f64 * h;
            let w = if i == 0 || i == m { 0.5 } else { 1.0 };
            integral += w * sobolev_weight(sigma, 2.0 * b) * eta_hat(sigma).powi(2);
        }
        integral *= h / TWO_PI;
        let expect = (2.0 * grid.half_width() * sobolev_weight(xi_j, 2.0 * s) * integral).sqrt();
        assert!(
            (got.value - expect).abs() < 1e-2 * expect,
            "{} vs {}",
            got.value,
            expect
        );
        assert!(got.edge_mass_fraction < 1e-12, "eta vanishes near the window edges");
    }

    #[test]
    fn xsb_flags_poor_edge_decay() {
        let grid = SpatialGrid::new(6.0, 16).unwrap();
        let time = TimeGrid::new(-4.0, 4.0, 64).unwrap();
        let u = SpaceTimeField::from_fn(grid, time, |_, _| Complex64::new(1.0, 0.0));
        let norm = xsb_norm(&u, 0.0, 0.0);
        assert!(norm.edge_mass_fraction > 0.1);
    }

    #[test]
    fn sup_x_sobolev_on_separable_field_is_series_norm() {
        let grid = SpatialGrid::new(6.0, 32).unwrap();
        let time = TimeGrid::new(-4.0, 4.0, 64).unwrap();
        let xi_j = grid.frequency(3);
        let psi = |t: f64| (-t * t).exp();
        let u = SpaceTimeField::from_fn(grid, time, |x, t| {
            Complex64::from_polar(psi(t), xi_j * x)
        });
        let series: Vec<Complex64> = time
            .times()
            .iter()
            .map(|&t| Complex64::new(psi(t), 0.0))
            .collect();
        let expect = sobolev_series_norm(&series, &time, 0.8);
        assert_abs_diff_eq!(sup_x_sobolev_t(&u, 0.8), expect, epsilon = 1e-10);
    }

    #[test]
    fn mixed_norm_special_cases() {
        let grid = SpatialGrid::new(6.0, 32).unwrap();
        let time = TimeGrid::new(0.0, 2.0, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let u = SpaceTimeField::from_fn(grid, time, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, 0.0)
        });
        // L^2_t L^2_x is the space-time L^2 norm.
        let v = mixed_lebesgue_norm(
            &u,
            LebesgueExponent::Finite(2.0),
            LebesgueExponent::Finite(2.0),
        )
        .unwrap();
        assert_abs_diff_eq!(v, u.l2_norm(), epsilon = 1e-12);
        // L^infty L^infty is the max modulus.
        let vmax = mixed_lebesgue_norm(&u, LebesgueExponent::Infinity, LebesgueExponent::Infinity)
            .unwrap();
        let expect = u.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert_abs_diff_eq!(vmax, expect, epsilon = 1e-14);
        // Separable field factorizes.
        let phi = |x: f64| (-x * x / 2.0).exp();
        let psi = |t: f64| 1.0 + 0.5 * (3.0 * t).cos();
        let sep = SpaceTimeField::from_fn(grid, time, |x, t| Complex64::new(phi(x) * psi(t), 0.0));
        let v42 = mixed_lebesgue_norm(
            &sep,
            LebesgueExponent::Finite(4.0),
            LebesgueExponent::Finite(2.0),
        )
        .unwrap();
        let phi_l2 = {
            let f = GridFunction::from_real_fn(grid, phi);
            f.l2_norm()
        };
        let psi_l4 = {
            let sum: f64 = time.times().iter().map(|&t| psi(t).abs().powi(4)).sum();
            (sum * time.dt()).powf(0.25)
        };
        assert_abs_diff_eq!(v42, phi_l2 * psi_l4, epsilon = 1e-10 * v42);
        // Invalid exponent is rejected.
        assert!(mixed_lebesgue_norm(
            &u,
            LebesgueExponent::Finite(0.5),
            LebesgueExponent::Finite(2.0)
        )
        .is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn h_norm_is_monotone_in_s(seed in 0u64..500, s1 in -1.0f64..2.0, ds in 0.0f64..1.5) {
            let grid = SpatialGrid::new(5.0, 32).unwrap();
            let f = random_function(grid, seed);
            prop_assert!(h_norm(&f, s1) <= h_norm(&f, s1 + ds) * (1.0 + 1e-12));
        }

        #[test]
        fn h_norm_satisfies_norm_axioms(seed in 0u64..500, a in -3.0f64..3.0, s in -1.0f64..2.0) {
            let grid = SpatialGrid::new(5.0, 32).unwrap();
            let f = random_function(grid, seed);
            let g = random_function(grid, seed + 7777);
            // Homogeneity.
            let scaled = f.map(|v| v * a);
            prop_assert!((h_norm(&scaled, s) - a.abs() * h_norm(&f, s)).abs() < 1e-10);
            // Triangle inequality.
            let sum = GridFunction::new(grid, f.values() + g.values()).unwrap();
            prop_assert!(h_norm(&sum, s) <= h_norm(&f, s) + h_norm(&g, s) + 1e-10);
            // Definiteness at this sample count: nonzero data has nonzero norm.
            prop_assert!(h_norm(&f, s) > 0.0);
        }
    }
}
