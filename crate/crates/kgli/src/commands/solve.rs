//! `kgli solve`: evolve a complex field and write the recorded history.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use kgli_core::io;
use kgli_core::solver::{
    history_field, mode_superposition_levels, plane_wave_levels, solve, stability_dt_max,
    wave_packet_levels, SolverState, SpatialGrid1D,
};

use crate::config::{self, InitialSpec, SolveConfig};
use crate::error::CliError;
use crate::manifest::ManifestBuilder;
use crate::RunContext;

#[derive(Serialize)]
struct DispersionDiagnostic {
    omega_measured: f64,
    omega_exact: f64,
    rel_error: f64,
}

#[derive(Serialize)]
struct SolveDiagnostics {
    steps: u64,
    dt: f64,
    cfl_number: f64,
    recorded_levels: usize,
    norm_first: f64,
    norm_last: f64,
    max_continuity_residual: Option<f64>,
    phase_rotation_warning: bool,
    dispersion: Option<DispersionDiagnostic>,
}

pub fn run(ctx: RunContext) -> Result<(), CliError> {
    let cfg: SolveConfig = config::load(&ctx.config_path)?;
    ctx.prepare()?;
    let mut manifest = ManifestBuilder::new(
        "solve",
        &ctx.config_path,
        serde_json::to_value(&cfg).unwrap_or(serde_json::Value::Null),
        ctx.seed_override,
    );

    let grid = cfg.grid.build()?;
    let params = cfg.params.build()?;
    let pots = cfg.potentials.build(&grid)?;

    let dt = match (cfg.dt, cfg.cfl) {
        (Some(_), Some(_)) => {
            return Err(CliError::usage("give either dt or cfl, not both"))
        }
        (Some(dt), None) => dt,
        (None, cfl) => {
            let fraction = cfl.unwrap_or(0.9);
            if !(0.0 < fraction && fraction <= 1.0) {
                return Err(CliError::usage("cfl must lie in (0, 1]"));
            }
            fraction * stability_dt_max(&params, grid.dx)
        }
    };

    let (level0, level1, plane_wave_k) = match &cfg.initial {
        InitialSpec::PlaneWave { mode } => {
            let k = 2.0 * std::f64::consts::PI * *mode as f64 / grid.length();
            let (l0, l1, _) = plane_wave_levels(k, &params, &grid, dt)?;
            (l0, l1, Some(k))
        }
        InitialSpec::Packet {
            carrier_mode,
            sigma,
            center,
        } => {
            let k0 = 2.0 * std::f64::consts::PI * *carrier_mode as f64 / grid.length();
            let (l0, l1) = wave_packet_levels(k0, *sigma, *center, &params, &grid, dt)?;
            (l0, l1, None)
        }
        InitialSpec::Modes { components } => {
            let modes: Vec<(f64, f64, i8)> = components
                .iter()
                .map(|m| {
                    (
                        m.amplitude,
                        2.0 * std::f64::consts::PI * m.mode as f64 / grid.length(),
                        m.branch,
                    )
                })
                .collect();
            let (l0, l1) = mode_superposition_levels(&modes, &params, &grid, dt)?;
            (l0, l1, None)
        }
        InitialSpec::File { level0, level1 } => {
            manifest.input(level0).input(level1);
            let l0 = first_time_row(level0, &grid)?;
            let l1 = first_time_row(level1, &grid)?;
            (l0, l1, None)
        }
    };

    let state = SolverState::new(level0, level1, grid, dt, params, cfg.cfl)?;
    let cfl_number = params.c * dt / grid.dx;
    let out = solve(state, &pots, cfg.steps, cfg.record_every)?;
    if out.phase_rotation_warning {
        eprintln!("warning: qΦΔt/ħ exceeds 0.1 somewhere; the per-step phase rotation is marginally resolved");
    }

    // assembled history (the machine-readable artifact)
    let levels: Vec<Vec<Complex64>> = out.recorded.iter().map(|(_, l)| l.clone()).collect();
    let dt_levels = dt * cfg.record_every as f64;
    let history = history_field(&levels, &grid, dt_levels, 0.0, params.c)
        .map_err(|e| CliError::numeric(e.to_string()))?;
    let history_path = ctx.out("history.csv");
    io::write_complex_field(&history_path, &history)?;
    manifest.output(&history_path);
    manifest.output(&io::sidecar_path(&history_path));

    // plot-ready per-level files
    if cfg.write_levels {
        for (step, level) in &out.recorded {
            let path = ctx.out(&format!("level_{step:06}.csv"));
            let mut file = std::fs::File::create(&path)
                .map_err(|e| CliError::numeric(format!("cannot write {}: {e}", path.display())))?;
            writeln!(file, "axis0,axis1,re,im")
                .map_err(|e| CliError::numeric(e.to_string()))?;
            let x0 = params.c * *step as f64 * dt;
            for (j, v) in level.iter().enumerate() {
                writeln!(file, "{},{},{},{}", x0, grid.coordinate(j), v.re, v.im)
                    .map_err(|e| CliError::numeric(e.to_string()))?;
            }
            manifest.output(&path);
        }
    }

    let dispersion = plane_wave_k.and_then(|k| {
        measure_dispersion(&out.recorded, &grid, k, dt, &params)
    });
    let diagnostics = SolveDiagnostics {
        steps: cfg.steps,
        dt,
        cfl_number,
        recorded_levels: out.recorded.len(),
        norm_first: out.diagnostics.first().map(|d| d.norm).unwrap_or(f64::NAN),
        norm_last: out.diagnostics.last().map(|d| d.norm).unwrap_or(f64::NAN),
        max_continuity_residual: out
            .diagnostics
            .iter()
            .filter_map(|d| d.continuity_residual)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v)))),
        phase_rotation_warning: out.phase_rotation_warning,
        dispersion,
    };
    let diag_path = ctx.out("diagnostics.json");
    io::write_json(&diag_path, &diagnostics)?;
    manifest.output(&diag_path);

    manifest.diagnostics(&diagnostics);
    manifest.write(&ctx.out("run.json"))
}

/// Loads the first time row of a field file as a spatial level.
fn first_time_row(
    path: &std::path::Path,
    grid: &SpatialGrid1D,
) -> Result<Vec<Complex64>, CliError> {
    let field = io::read_complex_field(path)?;
    let pts = field.grid().points();
    if pts.len() != 2 || pts[1] != grid.points {
        return Err(CliError::usage(format!(
            "initial level {} has spatial shape {:?}, run grid wants {} points",
            path.display(),
            pts,
            grid.points
        )));
    }
    Ok(field.values()[..grid.points].to_vec())
}

/// Measured oscillation frequency of the spatial mode `k` across recorded
/// levels; meaningful only while the per-record phase advance stays under π.
fn measure_dispersion(
    recorded: &[(u64, Vec<Complex64>)],
    grid: &SpatialGrid1D,
    k: f64,
    dt: f64,
    params: &kgli_core::spacetime::PhysicalParams,
) -> Option<DispersionDiagnostic> {
    if recorded.len() < 2 {
        return None;
    }
    let project = |level: &[Complex64]| -> Complex64 {
        level
            .iter()
            .enumerate()
            .map(|(j, v)| v * Complex64::from_polar(1.0, -k * grid.coordinate(j)))
            .sum()
    };
    let omega_exact = kgli_core::solver::dispersion_omega(k, params);
    let mut total_phase = 0.0;
    let mut total_time = 0.0;
    for w in recorded.windows(2) {
        let (s0, l0) = &w[0];
        let (s1, l1) = &w[1];
        let (a0, a1) = (project(l0), project(l1));
        if a0.norm() < 1e-12 || a1.norm() < 1e-12 {
            return None;
        }
        let dphi = (a1 / a0).arg();
        let span = (*s1 - *s0) as f64 * dt;
        if (omega_exact * span).abs() >= std::f64::consts::PI * 0.9 {
            return None; // phase advance would alias
        }
        total_phase += dphi;
        total_time += span;
    }
    let omega_measured = -total_phase / total_time;
    Some(DispersionDiagnostic {
        omega_measured,
        omega_exact,
        rel_error: (omega_measured - omega_exact).abs() / omega_exact,
    })
}
