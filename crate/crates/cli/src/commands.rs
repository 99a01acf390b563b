//! One function per CLI command.  Each run validates its inputs, computes,
//! writes its artifacts, and seals the directory with a manifest; commands
//! that enforce a numerical criterion report the violation only after the
//! evidence is on disk.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde_json::json;

use gkdv_core::cutoff::CutoffProfile;
use gkdv_core::duhamel::{mass_dissipation_check, smoothing_report, solve_ibvp, IbvpSolution};
use gkdv_core::estimates::{pinned_suite, run_check, RatioReport, PIN_RELATIVE_BAND};
use gkdv_core::extension::{extend, restrict_to_halfline, HalfLineFunction};
use gkdv_core::io;
use gkdv_core::linear::solve_linear_ibvp;
use gkdv_core::presets::{self, soliton_profile, soliton_residual, Preset};
use gkdv_core::{SpaceTimeField, SpatialGrid};

use crate::config::{Command, DataSpec, FileData, GridConfig, RunConfig};
use crate::manifest::RunDir;
use crate::Failure;

/// A soliton is offered or tracked only if its profile satisfies the
/// traveling-wave equation to this relative residual on a reference grid.
pub const SOLITON_CERTIFICATION_RESIDUAL: f64 = 1e-8;

/// Fields at or below this sample count also get a CSV rendering.
const CSV_SAMPLE_LIMIT: usize = 1 << 16;

/// Everything a command needs besides its config sections.
pub struct RunContext<'a> {
    pub cfg: &'a RunConfig,
    pub config_sha256: String,
    pub seed: u64,
    pub threads: usize,
    pub out: PathBuf,
}

impl RunContext<'_> {
    fn open_dir(&self) -> Result<RunDir, Failure> {
        RunDir::create(&self.out)
    }

    fn seal(
        &self,
        dir: RunDir,
        tolerances: &BTreeMap<String, f64>,
        results: &serde_json::Value,
    ) -> Result<(), Failure> {
        dir.finish(
            self.cfg.command,
            &self.config_sha256,
            self.seed,
            self.threads,
            tolerances,
            results,
        )
    }
}

fn grid_section(cfg: &RunConfig) -> GridConfig {
    // Presence was checked at parse time for the commands that need it.
    cfg.grid.expect("grid section checked at parse time")
}

/// Resolves the `data` section to a half-line profile on `grid`.
fn initial_halfline(
    data: &DataSpec,
    grid: SpatialGrid,
) -> Result<(HalfLineFunction, String), Failure> {
    match data {
        DataSpec::Preset(p) => {
            let u0 = p.initial_data(grid).map_err(Failure::from_core)?;
            Ok((u0, p.name().to_string()))
        }
        DataSpec::File(FileData::File { path }) => {
            let field = io::read_field(path)
                .map_err(|e| Failure::Config(format!("data file {}: {e}", path.display())))?;
            let fg = field.grid();
            if fg.n() != grid.n() || fg.half_width() != grid.half_width() {
                return Err(Failure::Config(format!(
                    "data file {} is sampled on n = {}, half_width = {}, but the run grid has n = {}, half_width = {}",
                    path.display(),
                    fg.n(),
                    fg.half_width(),
                    grid.n(),
                    grid.half_width()
                )));
            }
            // A single-slice file is a profile; otherwise restart from the
            // slice nearest t = 0.
            let m = if field.time().n_t() == 1 {
                0
            } else {
                field.time().nearest_index(0.0)
            };
            let u0 = restrict_to_halfline(&field.slice_at(m));
            Ok((u0, format!("file:{}", path.display())))
        }
    }
}

/// The boundary trace: the `boundary` preset if present, else whatever the
/// data preset carries (file data has no trace of its own).
fn boundary_preset(cfg: &RunConfig, grid: SpatialGrid) -> Result<Option<Preset>, Failure> {
    let chosen = match (&cfg.boundary, &cfg.data) {
        (Some(b), _) => Some(b.clone()),
        (None, Some(DataSpec::Preset(p))) => Some(p.clone()),
        _ => None,
    };
    if let Some(p) = &chosen {
        // Runs the preset's own parameter validation.
        p.initial_data(grid).map_err(Failure::from_core)?;
    }
    Ok(chosen)
}

fn max_abs(field: &SpaceTimeField) -> f64 {
    field.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn grid_json(gc: &GridConfig) -> serde_json::Value {
    json!({
        "half_width": gc.half_width,
        "n": gc.n,
        "t_min": gc.t_min,
        "t_max": gc.t_max,
        "n_t": gc.n_t,
    })
}

/// Largest deviation of the computed boundary values from `g` on `[0, T]`.
fn trace_sup_error(
    field: &SpaceTimeField,
    g: &impl Fn(f64) -> f64,
    horizon: f64,
) -> f64 {
    let origin = field.origin_series();
    let time = field.time();
    (0..time.n_t())
        .filter(|&m| (0.0..=horizon).contains(&time.time(m)))
        .map(|m| {
            let want = num_complex::Complex64::new(g(time.time(m)), 0.0);
            (origin[m] - want).norm()
        })
        .fold(0.0, f64::max)
}

pub fn solve_linear(ctx: &RunContext) -> Result<(), Failure> {
    let cfg = ctx.cfg;
    let gc = grid_section(cfg);
    let grid = gc.spatial()?;
    let time = gc.time()?;
    let (u0, data_name) =
        initial_halfline(cfg.data.as_ref().expect("data checked at parse time"), grid)?;
    let u0e = extend(&u0, cfg.solver.extension).map_err(Failure::from_core)?;
    let g_preset = boundary_preset(cfg, grid)?;
    let g = move |t: f64| g_preset.as_ref().map_or(0.0, |p| p.boundary_value(t));
    let profile = CutoffProfile::standard();

    let sol = solve_linear_ibvp(
        &u0e,
        &g,
        &time,
        cfg.solver.horizon,
        &profile,
        &cfg.quadrature,
    )
    .map_err(Failure::from_core)?;
    let trace_error = trace_sup_error(&sol.field, &g, cfg.solver.horizon);
    log::info!(
        "linear solve done: corner mismatch {:.3e}, boundary trace error {:.3e}",
        sol.corner_mismatch,
        trace_error
    );

    let mut dir = ctx.open_dir()?;
    dir.write_with("field.bin", |p| io::write_field(p, &sol.field))?;
    if grid.n() * time.n_t() <= CSV_SAMPLE_LIMIT {
        dir.write_with("field.csv", |p| io::write_field_csv(p, &sol.field))?;
    }
    dir.write_json("quadrature.json", &sol.diagnostics)?;

    let mut tol = BTreeMap::new();
    tol.insert("boundary_trace_sup_error".into(), trace_error);
    tol.insert("corner_mismatch".into(), sol.corner_mismatch);
    tol.insert("quadrature_tail_scale".into(), sol.diagnostics.tail_scale);
    let results = json!({
        "data": data_name,
        "grid": grid_json(&gc),
        "horizon": cfg.solver.horizon,
        "quadrature": sol.diagnostics,
    });
    ctx.seal(dir, &tol, &results)
}

pub fn solve(ctx: &RunContext) -> Result<(), Failure> {
    let cfg = ctx.cfg;
    let gc = grid_section(cfg);
    let grid = gc.spatial()?;
    let time = gc.time()?;
    let (u0, data_name) =
        initial_halfline(cfg.data.as_ref().expect("data checked at parse time"), grid)?;
    let u0e = extend(&u0, cfg.solver.extension).map_err(Failure::from_core)?;
    let g_preset = boundary_preset(cfg, grid)?;
    let g = move |t: f64| g_preset.as_ref().map_or(0.0, |p| p.boundary_value(t));
    let profile = CutoffProfile::standard();

    let sol = solve_ibvp(
        &u0e,
        &g,
        &time,
        cfg.solver.horizon,
        &profile,
        &cfg.quadrature,
        &cfg.solver.controls(),
    )
    .map_err(Failure::from_core)?;
    let mass = mass_dissipation_check(&sol.field, cfg.solver.horizon);
    log::info!(
        "solve done: {} iterations, final step {:.3e}, mass residual {:.3e}",
        sol.iterations,
        sol.step_history.last().copied().unwrap_or(0.0),
        mass.max_abs_residual
    );

    let mut dir = ctx.open_dir()?;
    dir.write_with("field.bin", |p| io::write_field(p, &sol.field))?;
    if grid.n() * time.n_t() <= CSV_SAMPLE_LIMIT {
        dir.write_with("field.csv", |p| io::write_field_csv(p, &sol.field))?;
    }
    dir.write_json("solution.json", &solution_summary(&sol, &mass))?;

    let mut tol = BTreeMap::new();
    tol.insert(
        "final_step_norm".into(),
        sol.step_history.last().copied().unwrap_or(0.0),
    );
    tol.insert("alias_fraction".into(), sol.alias_fraction);
    tol.insert("corner_mismatch".into(), sol.corner_mismatch);
    tol.insert("max_imag".into(), sol.max_imag);
    tol.insert("mass_residual_max".into(), mass.max_abs_residual);
    let results = json!({
        "data": data_name,
        "grid": grid_json(&gc),
        "horizon": sol.horizon,
        "iterations": sol.iterations,
        "max_abs": max_abs(&sol.field),
    });
    ctx.seal(dir, &tol, &results)
}

fn solution_summary(sol: &IbvpSolution, mass: &gkdv_core::duhamel::MassDissipationReport) -> serde_json::Value {
    json!({
        "horizon": sol.horizon,
        "iterations": sol.iterations,
        "step_history": sol.step_history,
        "contraction_factors": sol.contraction_factors,
        "alias_fraction": sol.alias_fraction,
        "corner_mismatch": sol.corner_mismatch,
        "max_imag": sol.max_imag,
        "quadrature": sol.quadrature,
        "mass": {
            "initial_mass": mass.initial_mass,
            "max_abs_residual": mass.max_abs_residual,
            "samples": mass.times.len(),
        },
    })
}

pub fn verify_estimates(ctx: &RunContext) -> Result<(), Failure> {
    let est = ctx.cfg.estimates.clone().unwrap_or_default();
    let pinned = est.checks.is_empty();

    let mut reports: Vec<RatioReport> = Vec::new();
    let mut pin_rows: Vec<serde_json::Value> = Vec::new();
    let mut worst_deviation = 0.0f64;
    if pinned {
        for pin in pinned_suite() {
            let rep = run_check(&pin.request, &est.lab, &est.ensemble).map_err(Failure::from_core)?;
            let deviation = (rep.max_ratio - pin.expected_max_ratio).abs() / pin.expected_max_ratio;
            worst_deviation = worst_deviation.max(deviation);
            log::info!(
                "{}: max ratio {:.6e} (pinned {:.6e}, deviation {:.2}%)",
                rep.id,
                rep.max_ratio,
                pin.expected_max_ratio,
                100.0 * deviation
            );
            pin_rows.push(json!({
                "id": rep.id,
                "expected_max_ratio": pin.expected_max_ratio,
                "observed_max_ratio": rep.max_ratio,
                "relative_deviation": deviation,
                "within_band": deviation <= PIN_RELATIVE_BAND,
            }));
            reports.push(rep);
        }
    } else {
        for req in &est.checks {
            let rep = run_check(req, &est.lab, &est.ensemble).map_err(Failure::from_core)?;
            log::info!("{}: max ratio {:.6e}", rep.id, rep.max_ratio);
            reports.push(rep);
        }
    }

    let all_finite = reports
        .iter()
        .all(|r| r.max_ratio.is_finite() && r.fitted_constant.is_finite());
    let unresolved = reports.iter().filter(|r| !r.resolved).count();
    let pins_ok = worst_deviation <= PIN_RELATIVE_BAND;

    let mut csv = String::from(RatioReport::csv_header());
    csv.push('\n');
    for r in &reports {
        csv.push_str(&r.csv_rows());
    }

    let mut dir = ctx.open_dir()?;
    dir.write_bytes("ratios.csv", csv.as_bytes())?;
    dir.write_json("reports.json", &reports)?;
    if pinned {
        dir.write_json("pins.json", &pin_rows)?;
    }

    let mut tol = BTreeMap::new();
    tol.insert("pin_band".into(), PIN_RELATIVE_BAND);
    if pinned {
        tol.insert("max_pin_deviation".into(), worst_deviation);
    }
    let results = json!({
        "checks": reports.len(),
        "unresolved": unresolved,
        "pins_enforced": pinned && est.enforce_pins,
        "pins_ok": !pinned || pins_ok,
        "all_finite": all_finite,
    });
    ctx.seal(dir, &tol, &results)?;

    // Criterion failures surface only after the evidence is on disk.
    if !all_finite {
        return Err(Failure::Criterion(
            "a ratio study produced a non-finite constant".into(),
        ));
    }
    if pinned && est.enforce_pins && !pins_ok {
        return Err(Failure::Criterion(format!(
            "pinned constants drifted: worst relative deviation {worst_deviation:.3} exceeds {PIN_RELATIVE_BAND}"
        )));
    }
    Ok(())
}

pub fn convergence_study(ctx: &RunContext) -> Result<(), Failure> {
    let cfg = ctx.cfg;
    let gc = grid_section(cfg);
    let cc = cfg.convergence.unwrap_or_default();
    if cc.levels < 2 {
        return Err(Failure::Config(format!(
            "a convergence study needs at least 2 levels, got {}",
            cc.levels
        )));
    }
    let residual = soliton_residual(cc.speed, gc.half_width, 2048).map_err(Failure::from_core)?;
    if residual > SOLITON_CERTIFICATION_RESIDUAL {
        return Err(Failure::Criterion(format!(
            "soliton profile residual {residual:.3e} exceeds {SOLITON_CERTIFICATION_RESIDUAL:.0e}; study withheld"
        )));
    }
    let preset = Preset::Soliton {
        speed: cc.speed,
        offset: cc.offset,
    };
    let profile = CutoffProfile::standard();

    let mut errors: Vec<f64> = Vec::new();
    let mut level_rows: Vec<serde_json::Value> = Vec::new();
    let mut csv = String::from("level,n,n_t,error,order\n");
    for level in 0..cc.levels {
        let lgc = gc.refined(1 << level);
        let grid = lgc.spatial()?;
        let time = lgc.time()?;
        let u0 = preset.initial_data(grid).map_err(Failure::from_core)?;
        let u0e = extend(&u0, cfg.solver.extension).map_err(Failure::from_core)?;
        let g = |t: f64| preset.boundary_value(t);
        let sol = solve_ibvp(
            &u0e,
            &g,
            &time,
            cfg.solver.horizon,
            &profile,
            &cfg.quadrature,
            &cfg.solver.controls(),
        )
        .map_err(Failure::from_core)?;

        let m = time.nearest_index(cfg.solver.horizon);
        let t_snap = time.time(m);
        let slice = sol.field.slice_at(m);
        let exact = HalfLineFunction::from_real_fn(grid, |x| {
            soliton_profile(cc.speed, x - cc.offset - cc.speed * t_snap)
        });
        let origin = grid.origin_index();
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, e) in exact.values().iter().enumerate() {
            num += (slice.values()[origin + j] - e).norm_sqr();
            den += e.norm_sqr();
        }
        let err = (num / den).sqrt();
        let order = if level == 0 {
            None
        } else {
            Some((errors[level - 1] / err).log2())
        };
        log::info!(
            "level {level}: n = {}, n_t = {}, error {err:.6e}{}",
            lgc.n,
            lgc.n_t,
            order.map_or(String::new(), |o| format!(", order {o:.2}"))
        );
        csv.push_str(&format!(
            "{level},{},{},{err:e},{}\n",
            lgc.n,
            lgc.n_t,
            order.map_or(String::new(), |o| format!("{o}"))
        ));
        level_rows.push(json!({
            "level": level,
            "n": lgc.n,
            "n_t": lgc.n_t,
            "error": err,
            "order": order,
        }));
        errors.push(err);
    }

    // Least-squares slope of log2(error) against the level index.
    let k = errors.len() as f64;
    let xbar = (k - 1.0) / 2.0;
    let ybar = errors.iter().map(|e| e.log2()).sum::<f64>() / k;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (l, e) in errors.iter().enumerate() {
        let dx = l as f64 - xbar;
        sxy += dx * (e.log2() - ybar);
        sxx += dx * dx;
    }
    let fitted_order = -sxy / sxx;
    let pass = fitted_order >= cc.min_order;
    log::info!("fitted order {fitted_order:.2} (minimum {})", cc.min_order);

    let mut dir = ctx.open_dir()?;
    dir.write_bytes("convergence.csv", csv.as_bytes())?;
    dir.write_json(
        "convergence.json",
        &json!({
            "levels": level_rows,
            "fitted_order": fitted_order,
            "min_order": cc.min_order,
            "pass": pass,
        }),
    )?;

    let mut tol = BTreeMap::new();
    tol.insert("fitted_order".into(), fitted_order);
    tol.insert("min_order".into(), cc.min_order);
    tol.insert("finest_error".into(), *errors.last().unwrap());
    tol.insert("soliton_residual".into(), residual);
    let results = json!({
        "base_grid": grid_json(&gc),
        "speed": cc.speed,
        "offset": cc.offset,
        "horizon": cfg.solver.horizon,
        "errors": errors,
        "pass": pass,
    });
    ctx.seal(dir, &tol, &results)?;

    if !pass {
        return Err(Failure::Criterion(format!(
            "fitted convergence order {fitted_order:.2} is below the configured minimum {}",
            cc.min_order
        )));
    }
    Ok(())
}

pub fn smoothing_study(ctx: &RunContext) -> Result<(), Failure> {
    let cfg = ctx.cfg;
    let gc = grid_section(cfg);
    let grid = gc.spatial()?;
    let time = gc.time()?;
    let sc = cfg.smoothing.clone().unwrap_or_default();
    let (lo, hi) = sc.band;
    if !(lo > 0.0 && hi > lo) {
        return Err(Failure::Config(format!(
            "smoothing band must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    let seeds: Vec<u64> = if sc.seeds.is_empty() {
        if sc.count == 0 {
            return Err(Failure::Config("smoothing count must be positive".into()));
        }
        (1..=sc.count as u64).map(|k| ctx.seed + k).collect()
    } else {
        sc.seeds.clone()
    };
    let profile = CutoffProfile::standard();

    let mut rows: Vec<serde_json::Value> = Vec::new();
    let mut csv = String::from("seed,solution_exponent,correction_exponent,gain\n");
    let mut min_gain = f64::INFINITY;
    let mut gain_sum = 0.0;
    for &seed in &seeds {
        let preset = Preset::RoughRandom {
            s: sc.s,
            seed,
            amplitude: sc.amplitude,
        };
        let u0 = preset.initial_data(grid).map_err(Failure::from_core)?;
        let u0e = extend(&u0, cfg.solver.extension).map_err(Failure::from_core)?;
        let sol = solve_ibvp(
            &u0e,
            &|_| 0.0,
            &time,
            cfg.solver.horizon,
            &profile,
            &cfg.quadrature,
            &cfg.solver.controls(),
        )
        .map_err(Failure::from_core)?;
        let rep = smoothing_report(&sol.field, &sol.correction, cfg.solver.horizon, lo, hi);
        log::info!(
            "seed {seed}: solution exponent {:.3}, correction exponent {:.3}, gain {:.3}",
            rep.solution_exponent,
            rep.correction_exponent,
            rep.gain
        );
        min_gain = min_gain.min(rep.gain);
        gain_sum += rep.gain;
        csv.push_str(&format!(
            "{seed},{:e},{:e},{:e}\n",
            rep.solution_exponent, rep.correction_exponent, rep.gain
        ));
        rows.push(json!({
            "seed": seed,
            "iterations": sol.iterations,
            "alias_fraction": sol.alias_fraction,
            "report": rep,
        }));
    }

    let mut dir = ctx.open_dir()?;
    dir.write_bytes("smoothing.csv", csv.as_bytes())?;
    dir.write_json("reports.json", &rows)?;

    let mut tol = BTreeMap::new();
    tol.insert("min_gain".into(), min_gain);
    tol.insert("mean_gain".into(), gain_sum / seeds.len() as f64);
    if let Some(req) = sc.min_gain {
        tol.insert("required_gain".into(), req);
    }
    let results = json!({
        "s": sc.s,
        "amplitude": sc.amplitude,
        "seeds": seeds,
        "band": [lo, hi],
        "grid": grid_json(&gc),
        "horizon": cfg.solver.horizon,
    });
    ctx.seal(dir, &tol, &results)?;

    if let Some(req) = sc.min_gain {
        if min_gain < req {
            return Err(Failure::Criterion(format!(
                "smallest exponent gain {min_gain:.3} is below the required {req}"
            )));
        }
    }
    Ok(())
}

/// Prints the preset catalog as JSON.  The soliton entry is gated on its
/// certification residual, and every entry must survive a serialization
/// round trip before being offered.
pub fn list_presets() -> Result<(), Failure> {
    let residual = soliton_residual(1.0, 40.0, 2048).map_err(Failure::from_core)?;
    if residual > SOLITON_CERTIFICATION_RESIDUAL {
        return Err(Failure::Criterion(format!(
            "soliton profile residual {residual:.3e} exceeds {SOLITON_CERTIFICATION_RESIDUAL:.0e}; catalog withheld"
        )));
    }
    let catalog = presets::catalog();
    for p in &catalog {
        let text = serde_json::to_string(p)
            .map_err(|e| Failure::Internal(format!("catalog entry: {e}")))?;
        let back: Preset = serde_json::from_str(&text)
            .map_err(|e| Failure::Internal(format!("catalog round trip: {e}")))?;
        if back != *p {
            return Err(Failure::Internal(format!(
                "catalog entry {} does not round-trip",
                p.name()
            )));
        }
    }
    let text = serde_json::to_string_pretty(&catalog)
        .map_err(|e| Failure::Internal(format!("catalog: {e}")))?;
    println!("{text}");
    Ok(())
}

pub fn dispatch(ctx: &RunContext) -> Result<(), Failure> {
    match ctx.cfg.command {
        Command::SolveLinear => solve_linear(ctx),
        Command::Solve => solve(ctx),
        Command::VerifyEstimates => verify_estimates(ctx),
        Command::ConvergenceStudy => convergence_study(ctx),
        Command::SmoothingStudy => smoothing_study(ctx),
    }
}
