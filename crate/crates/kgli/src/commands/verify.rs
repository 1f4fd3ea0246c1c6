//! `kgli verify`: named verification suites with per-check residuals and
//! thresholds. Exit 0 iff every check passes; a failing residual is a
//! numeric failure (exit 3).

use num_complex::Complex64;
use serde::Serialize;

use kgli_core::functionals::identity_check;
use kgli_core::hje::{
    field_strength, gauge_shift, hje_residual, hje_residual_analytic, integrate_worldline,
    ActionField, SConvention,
};
use kgli_core::solver::{
    continuity_residual, dispersion_omega, mode_superposition_levels, plane_wave_levels,
    scale_transform, solve, Potentials, SolverState, SpatialGrid1D,
};
use kgli_core::spacetime::{
    boost, four_gradient, FourVector, FourVectorField, PhysicalParams, ScalarField,
    SpacetimeGrid,
};
use kgli_core::synth;

use crate::config::{self, VerifyConfig};
use crate::error::CliError;
use crate::manifest::ManifestBuilder;
use crate::RunContext;

#[derive(Serialize)]
struct Check {
    name: String,
    value: f64,
    threshold: String,
    pass: bool,
}

impl Check {
    fn upper(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold: format!("<= {limit:e}"),
            pass: value <= limit,
        }
    }

    fn window(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold: format!("in [{lo}, {hi}]"),
            pass: (lo..=hi).contains(&value),
        }
    }
}

#[derive(Serialize)]
struct Report {
    suite: String,
    grid: usize,
    seed: u64,
    checks: Vec<Check>,
    pass: bool,
}

pub fn run(ctx: RunContext) -> Result<(), CliError> {
    let cfg: VerifyConfig = config::load(&ctx.config_path)?;
    ctx.prepare()?;
    let mut manifest = ManifestBuilder::new(
        "verify",
        &ctx.config_path,
        serde_json::to_value(&cfg).unwrap_or(serde_json::Value::Null),
        ctx.seed_override,
    );
    let seed = ctx.seed_override.unwrap_or(cfg.seed);

    let checks = match cfg.suite.as_str() {
        "identity" => suite_identity(cfg.grid, seed),
        "hje" => suite_hje(cfg.grid),
        "gauge" => suite_gauge(cfg.grid),
        "scale" => suite_scale(cfg.grid),
        "dispersion" => suite_dispersion(),
        "continuity" => suite_continuity(),
        other => {
            return Err(CliError::usage(format!(
                "unknown suite {other:?} (expected identity|hje|gauge|scale|dispersion|continuity)"
            )))
        }
    };

    let pass = checks.iter().all(|c| c.pass);
    let report = Report {
        suite: cfg.suite.clone(),
        grid: cfg.grid,
        seed,
        checks,
        pass,
    };
    let path = ctx.out("report.json");
    kgli_core::io::write_json(&path, &report)?;
    manifest.output(&path);
    manifest.diagnostics(&report);
    manifest.write(&ctx.out("run.json"))?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).unwrap_or_default()
    );
    if pass {
        Ok(())
    } else {
        Err(CliError::numeric(format!(
            "suite {} failed {} check(s)",
            report.suite,
            report.checks.iter().filter(|c| !c.pass).count()
        )))
    }
}

fn periodic_box(n: usize) -> SpacetimeGrid {
    SpacetimeGrid::dim2(
        [n, n],
        [2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI],
        [0.0, 0.0],
        true,
    )
    .expect("valid box")
}

fn suite_identity(grid_n: usize, seed: u64) -> Vec<Check> {
    let grid = periodic_box(grid_n.max(8));
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let (p, s, a) = synth::random_polar_triple(seed.wrapping_add(trial), &grid);
        let lambda = 0.5 + 0.35 * trial as f64;
        match identity_check(&p, &s, &a, &grid, lambda, 1.0) {
            Ok(r) => worst = worst.max(r),
            Err(_) => worst = f64::INFINITY,
        }
    }
    vec![Check::upper(
        "max relative F-Q residual over 20 random analytic triples",
        worst,
        1e-12,
    )]
}

fn suite_hje(grid_n: usize) -> Vec<Check> {
    let params = PhysicalParams::new(2.0, 1.0, 0.7, 0.0).unwrap();
    let (c, m) = (params.c, params.m);
    let p = 1.3;
    let energy = ((p * c) * (p * c) + (m * c * c) * (m * c * c)).sqrt();
    let grid = SpacetimeGrid::dim2(
        [grid_n.max(8), grid_n.max(8)],
        [3.0, 3.0],
        [1.0, -1.5],
        false,
    )
    .unwrap();
    let grad = move |_x: &FourVector| [energy / c, -p, 0.0, 0.0];
    let no_pots = |_x: &FourVector| FourVector::zero();
    let analytic =
        hje_residual_analytic(&grad, &no_pots, SConvention::Physical, &params, &grid).max_abs();

    let fd_params = PhysicalParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
    let (energy2, e_field) = (2.0, 0.3);
    let antideriv = |u: f64| {
        let root: f64 = (u * u - 1.0).sqrt();
        0.5 * (u * root - u.signum() * (u.abs() + root).ln())
    };
    let max_res = |n: usize| {
        let grid = SpacetimeGrid::dim2([n, n], [1.0, 1.0], [0.0, -0.5], false).unwrap();
        let s = ScalarField::from_fn(grid.clone(), |x| {
            let u = e_field * x.component(1) - energy2;
            -energy2 * x.component(0) + (antideriv(u) - antideriv(-energy2)) / e_field
        });
        let action = ActionField {
            field: s,
            convention: SConvention::Physical,
        };
        let pots = FourVectorField::from_fn(grid, |x| {
            FourVector::new(-e_field * x.component(1), 0.0, 0.0, 0.0)
        });
        hje_residual(&action, &pots, &fd_params)
            .unwrap()
            .max_abs_residual
    };
    let errors = [max_res(16), max_res(32), max_res(64)];
    let order = 0.5 * ((errors[0] / errors[1]).log2() + (errors[1] / errors[2]).log2());
    vec![
        Check::upper("free-particle analytic residual", analytic, 1e-10),
        Check::window("finite-difference convergence order", order, 1.8, 2.2),
    ]
}

fn suite_gauge(grid_n: usize) -> Vec<Check> {
    let grid = periodic_box(grid_n.max(8));
    let s = ScalarField::from_fn(grid.clone(), |x| {
        (x.component(0)).sin() * (2.0 * x.component(1)).cos()
    });
    let pure_gauge = FourVectorField::from_values(
        grid.clone(),
        (0..grid.len())
            .map(|lin| four_gradient(&s, &grid.unflatten(lin)).unwrap())
            .collect(),
    )
    .unwrap();
    let pure_f = field_strength(&pure_gauge).unwrap().max_abs();

    let u = FourVectorField::from_fn(grid.clone(), |x| {
        FourVector::new(
            1.0 + 0.2 * x.component(1).sin(),
            0.3 * x.component(0).cos(),
            0.0,
            0.0,
        )
    });
    let (shifted, _) = gauge_shift(&u, &s).unwrap();
    let invariance = field_strength(&shifted)
        .unwrap()
        .max_difference(&field_strength(&u).unwrap());

    let big_box = SpacetimeGrid::dim2([8, 8], [200.0, 200.0], [-100.0, -100.0], false).unwrap();
    let constant =
        FourVectorField::constant(big_box, boost(&FourVector::new(1.0, 0.0, 0.0, 0.0), 0.6, 1));
    let drift = integrate_worldline(&constant, FourVector::zero(), 20.0, 10_000, 1.0)
        .map(|w| w.max_norm_drift)
        .unwrap_or(f64::INFINITY);

    vec![
        Check::upper("pure-gauge field strength", pure_f, 1e-10),
        Check::upper("field strength drift under gauge shift", invariance, 1e-10),
        Check::upper("worldline norm drift over 1e4 RK4 steps", drift, 1e-8),
    ]
}

fn suite_scale(grid_n: usize) -> Vec<Check> {
    let params = PhysicalParams::new(1.0, 1.0, 1.0, 0.5).unwrap();
    let grid = SpatialGrid1D::new(grid_n.max(16), 2.0 * std::f64::consts::PI, 0.0).unwrap();
    let dt = 0.02;
    let (l0, l1) =
        mode_superposition_levels(&[(1.0, 1.0, 1), (0.5, 2.0, -1)], &params, &grid, dt).unwrap();
    let pots = Potentials::constant(&grid, 0.3, 0.1);
    let run = |p: PhysicalParams| {
        let state = SolverState::new(l0.clone(), l1.clone(), grid, dt, p, None).unwrap();
        solve(state, &pots, 80, 8).unwrap()
    };
    let base = run(params);
    let doubled = run(scale_transform(&params, 2.0).unwrap());
    let mut differing = 0.0;
    for ((_, la), (_, lb)) in base.recorded.iter().zip(&doubled.recorded) {
        for (va, vb) in la.iter().zip(lb) {
            if va.re.to_bits() != vb.re.to_bits() || va.im.to_bits() != vb.im.to_bits() {
                differing += 1.0;
            }
        }
    }
    vec![Check::upper(
        "values differing between (hbar,q,m) and 2(hbar,q,m) histories",
        differing,
        0.0,
    )]
}

fn suite_dispersion() -> Vec<Check> {
    let params = PhysicalParams::default();
    let error = |n_x: usize, n_t: u64| {
        let grid = SpatialGrid1D::new(n_x, 2.0 * std::f64::consts::PI, 0.0).unwrap();
        let dt = 1.0 / n_t as f64;
        let (l0, l1, omega) = plane_wave_levels(1.0, &params, &grid, dt).unwrap();
        let state = SolverState::new(l0, l1, grid, dt, params, None).unwrap();
        let out = solve(state, &Potentials::zero(&grid), n_t - 1, n_t).unwrap();
        let t_end = out.final_state.step_index as f64 * dt;
        (0..n_x)
            .map(|j| {
                let exact =
                    Complex64::from_polar(1.0, grid.coordinate(j) - omega * t_end);
                (out.final_state.curr[j] - exact).norm()
            })
            .fold(0.0f64, f64::max)
    };
    let order = (error(128, 200) / error(256, 400)).log2();
    vec![Check::window(
        "plane-wave convergence order",
        order,
        1.8,
        2.2,
    )]
}

fn suite_continuity() -> Vec<Check> {
    let params = PhysicalParams::default();
    let residual_at = |n_x: usize, dt: f64| {
        let grid = SpatialGrid1D::new(n_x, 2.0 * std::f64::consts::PI, 0.0).unwrap();
        let pots = Potentials::zero(&grid);
        let modes = [(1.0, 1.0, 1.0), (0.8, 2.0, -1.0)];
        let level = |t: f64| -> Vec<Complex64> {
            (0..n_x)
                .map(|j| {
                    let x = grid.coordinate(j);
                    modes
                        .iter()
                        .map(|&(amp, k, branch)| {
                            Complex64::from_polar(
                                amp,
                                k * x - branch * dispersion_omega(k, &params) * t,
                            )
                        })
                        .sum()
                })
                .collect()
        };
        let history: Vec<Vec<Complex64>> = (0..5).map(|i| level(i as f64 * dt)).collect();
        continuity_residual(&history, &grid, dt, &pots, &params)
            .unwrap()
            .iter()
            .flat_map(|l| l.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    };
    let errors = [
        residual_at(32, 0.08),
        residual_at(64, 0.04),
        residual_at(128, 0.02),
    ];
    let order = 0.5 * ((errors[0] / errors[1]).log2() + (errors[1] / errors[2]).log2());
    vec![Check::window(
        "continuity residual convergence order",
        order,
        1.8,
        2.2,
    )]
}
