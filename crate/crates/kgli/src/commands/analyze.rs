//! `kgli analyze`: evidence and Fisher information of a dataset under a
//! parametric bin model.

use std::io::Write;

use serde::Serialize;

use kgli_core::inference::{
    evidence_exact, evidence_linear_coefficient, evidence_quadratic, fisher_discrete,
    robust_counts, BinModel, EvidenceReport, ExpFamilyBinModel, TimeShiftModel, TwoBinLinear,
};
use kgli_core::io::{self, FieldData};
use kgli_core::solver::probability_density;

use crate::config::{self, AnalyzeConfig, ModelSpec};
use crate::error::CliError;
use crate::manifest::ManifestBuilder;
use crate::RunContext;

#[derive(Serialize)]
struct AnalyzeOutput {
    theta: f64,
    robust: bool,
    total_counts: f64,
    fisher: f64,
    linear_coefficient: f64,
    reports: Vec<EvidenceReport>,
}

fn build_model(
    spec: &ModelSpec,
    manifest: &mut ManifestBuilder,
) -> Result<Box<dyn BinModel>, CliError> {
    match spec {
        ModelSpec::TimeShift { density, theta0 } => {
            manifest.input(density);
            let field = match io::read_field_auto(density)? {
                FieldData::Real(f) => f,
                FieldData::Complex(f) => probability_density(&f, false),
            };
            let grid = field.grid();
            if grid.points().len() != 2 {
                return Err(CliError::usage(
                    "time-shift model needs a 1+1D density field",
                ));
            }
            let model = TimeShiftModel::new(
                field.values().to_vec(),
                grid.points()[0],
                grid.spacing(0),
                *theta0,
            )
            .map_err(|e| CliError::usage(e.to_string()))?;
            Ok(Box::new(model))
        }
        ModelSpec::TwoBin => Ok(Box::new(TwoBinLinear)),
        ModelSpec::ExpFamily { a, b, c } => Ok(Box::new(
            ExpFamilyBinModel::new(a.clone(), b.clone(), c.clone())
                .map_err(|e| CliError::usage(e.to_string()))?,
        )),
    }
}

pub fn run(ctx: RunContext) -> Result<(), CliError> {
    let cfg: AnalyzeConfig = config::load(&ctx.config_path)?;
    ctx.prepare()?;
    let mut manifest = ManifestBuilder::new(
        "analyze",
        &ctx.config_path,
        serde_json::to_value(&cfg).unwrap_or(serde_json::Value::Null),
        ctx.seed_override,
    );

    let dataset = match (&cfg.dataset, &cfg.events) {
        (Some(path), None) => {
            manifest.input(path);
            io::read_dataset(path)?.0
        }
        (None, Some(path)) => {
            let detector = cfg.detector.as_ref().ok_or_else(|| {
                CliError::usage("analyzing raw events needs a detector config")
            })?;
            manifest.input(path);
            let events = io::read_events(path)?;
            kgli_core::experiment::aggregate(&events, detector)
                .map_err(|e| CliError::usage(e.to_string()))?
        }
        _ => {
            return Err(CliError::usage(
                "give exactly one of dataset or events",
            ))
        }
    };
    let model = build_model(&cfg.model, &mut manifest)?;
    if dataset.counts().len() != model.bins() {
        return Err(CliError::usage(format!(
            "dataset has {} bins, model has {}",
            dataset.counts().len(),
            model.bins()
        )));
    }

    let counts: Vec<f64> = if cfg.robust {
        robust_counts(model.as_ref(), cfg.theta, dataset.total() as f64)?
    } else {
        dataset.as_real()
    };
    let total: f64 = counts.iter().sum();

    let fisher = fisher_discrete(model.as_ref(), cfg.theta)?;
    let linear = evidence_linear_coefficient(&counts, model.as_ref(), cfg.theta)?;
    let mut reports = Vec::with_capacity(cfg.epsilons.len());
    for &epsilon in &cfg.epsilons {
        reports.push(EvidenceReport {
            theta: cfg.theta,
            epsilon,
            ev_exact: evidence_exact(&counts, model.as_ref(), cfg.theta, epsilon)?,
            ev_quadratic: evidence_quadratic(&counts, model.as_ref(), cfg.theta, epsilon)?,
            fisher,
            linear_coefficient: linear,
            excluded_points: 0,
        });
    }

    let output = AnalyzeOutput {
        theta: cfg.theta,
        robust: cfg.robust,
        total_counts: total,
        fisher,
        linear_coefficient: linear,
        reports,
    };
    let json_path = ctx.out("evidence.json");
    io::write_json(&json_path, &output)?;
    manifest.output(&json_path);

    let csv_path = ctx.out("evidence.csv");
    let mut file = std::fs::File::create(&csv_path)
        .map_err(|e| CliError::numeric(format!("cannot write {}: {e}", csv_path.display())))?;
    writeln!(file, "epsilon,ev_exact,ev_quadratic,fisher,linear_coefficient")
        .map_err(|e| CliError::numeric(e.to_string()))?;
    for r in &output.reports {
        writeln!(
            file,
            "{},{},{},{},{}",
            r.epsilon, r.ev_exact, r.ev_quadratic, r.fisher, r.linear_coefficient
        )
        .map_err(|e| CliError::numeric(e.to_string()))?;
    }
    manifest.output(&csv_path);

    manifest.diagnostics(&output);
    manifest.write(&ctx.out("run.json"))
}
