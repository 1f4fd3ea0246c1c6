//! `kgli minimize`: descend the density/action functional from an exact or
//! perturbed free-particle start.

use serde::Serialize;

use kgli_core::functionals::{
    free_particle_pair, functional_f, kg_residual_from_polar, minimize_f, MinimizeOptions,
    MinimizeStatus, PolarPair,
};
use kgli_core::io;
use kgli_core::spacetime::{FourVector, FourVectorField, ScalarField};
use kgli_core::synth;

use crate::config::{self, MinimizeConfig};
use crate::error::CliError;
use crate::manifest::ManifestBuilder;
use crate::RunContext;

#[derive(Serialize)]
struct MinimizeSummary {
    lambda: f64,
    status: String,
    iterations: usize,
    f_initial: f64,
    f_final: f64,
    grad_norm: f64,
    kg_residual_max: f64,
    excluded_points: usize,
}

pub fn run(ctx: RunContext) -> Result<(), CliError> {
    let cfg: MinimizeConfig = config::load(&ctx.config_path)?;
    ctx.prepare()?;
    let seed = ctx.seed_override.unwrap_or(cfg.seed);
    let mut manifest = ManifestBuilder::new(
        "minimize",
        &ctx.config_path,
        serde_json::to_value(&cfg).unwrap_or(serde_json::Value::Null),
        Some(seed),
    );

    if !(cfg.lambda > 0.0) {
        return Err(CliError::usage("lambda must be positive"));
    }
    let c = 1.0;
    let (exact, _, _) = free_particle_pair(
        [cfg.grid, cfg.grid],
        2.0 * std::f64::consts::PI,
        cfg.spatial_mode,
        cfg.lambda,
        c,
    )?;
    let grid = exact.grid().clone();

    let start = if cfg.perturbation > 0.0 {
        let noise_p = synth::perturbation_noise(seed, &grid, cfg.perturbation);
        let noise_s = synth::perturbation_noise(seed.wrapping_add(1), &grid, cfg.perturbation);
        let s_scale = 2.0 / cfg.lambda.sqrt();
        let mut density: Vec<f64> = exact.density.values().to_vec();
        let mut action: Vec<f64> = exact.action.values().to_vec();
        for lin in 0..grid.len() {
            let x = grid.coordinate_lin(lin);
            density[lin] *= 1.0 + noise_p.value(&x);
            action[lin] += s_scale * noise_s.value(&x);
        }
        let mut density = ScalarField::from_values(grid.clone(), density)
            .map_err(|e| CliError::numeric(e.to_string()))?;
        density.normalize()?;
        PolarPair {
            density,
            action: ScalarField::from_values(grid.clone(), action)
                .map_err(|e| CliError::numeric(e.to_string()))?,
            phase_period: exact.phase_period,
        }
    } else {
        exact
    };

    let potential = FourVectorField::constant(grid.clone(), FourVector::zero());
    let f_initial = functional_f(&start, &potential, cfg.lambda, c)?.value;
    let opts = MinimizeOptions {
        max_iters: cfg.max_iters,
        grad_tol: cfg.grad_tol,
        f_target: cfg.f_target_rel.map(|rel| rel * f_initial.abs()),
        ..Default::default()
    };
    let result = minimize_f(&start, &potential, cfg.lambda, c, &opts)?;

    let kg = kg_residual_from_polar(&result.pair, &potential, cfg.lambda, c)?;
    let kg_max = kg.values().iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let f_report = functional_f(&result.pair, &potential, cfg.lambda, c)?;

    let density_path = ctx.out("density.csv");
    io::write_scalar_field(&density_path, &result.pair.density)?;
    manifest.output(&density_path);
    let action_path = ctx.out("action.csv");
    io::write_scalar_field(&action_path, &result.pair.action)?;
    manifest.output(&action_path);
    let trace_path = ctx.out("trace.csv");
    io::write_trace(&trace_path, &result.trace)?;
    manifest.output(&trace_path);

    let summary = MinimizeSummary {
        lambda: cfg.lambda,
        status: format!("{:?}", result.status),
        iterations: result.trace.len(),
        f_initial,
        f_final: result.f_value,
        grad_norm: result.grad_norm,
        kg_residual_max: kg_max,
        excluded_points: f_report.excluded_points,
    };
    let summary_path = ctx.out("summary.json");
    io::write_json(&summary_path, &summary)?;
    manifest.output(&summary_path);
    manifest.diagnostics(&summary);
    manifest.write(&ctx.out("run.json"))?;

    if result.status == MinimizeStatus::LineSearchFailed {
        return Err(CliError::numeric(
            "line search failed; best-so-far fields were written",
        ));
    }
    Ok(())
}
