//! `kgli sample`: draw detection events from a density field.

use serde::Serialize;

use kgli_core::experiment::{aggregate, sample_events, DetectorConfig};
use kgli_core::io::{self, FieldData};
use kgli_core::solver::probability_density;

use crate::config::{self, SampleConfig};
use crate::error::CliError;
use crate::manifest::ManifestBuilder;
use crate::RunContext;

#[derive(Serialize)]
struct SampleDiagnostics {
    n: u64,
    seed: u64,
    bins: usize,
    occupied_bins: usize,
    max_count: u64,
}

pub fn run(ctx: RunContext) -> Result<(), CliError> {
    let cfg: SampleConfig = config::load(&ctx.config_path)?;
    ctx.prepare()?;
    let seed = ctx.seed_override.unwrap_or(cfg.seed);
    let mut manifest = ManifestBuilder::new(
        "sample",
        &ctx.config_path,
        serde_json::to_value(&cfg).unwrap_or(serde_json::Value::Null),
        Some(seed),
    );
    manifest.input(&cfg.field);

    let mut density = match io::read_field_auto(&cfg.field)? {
        FieldData::Real(f) => {
            if f.values().iter().any(|&v| v < 0.0) {
                return Err(CliError::numeric(
                    "real field contains negative values; not a density",
                ));
            }
            f
        }
        FieldData::Complex(f) => probability_density(&f, false),
    };
    density
        .normalize()
        .map_err(|e| CliError::numeric(format!("density is not normalizable: {e}")))?;

    if cfg.n < 1 {
        return Err(CliError::usage("n must be at least 1"));
    }
    let events = sample_events(&density, cfg.n, seed)?;
    let detector = DetectorConfig::from_grid(density.grid(), cfg.c, cfg.n)?;
    let dataset = aggregate(&events, &detector)?;

    let events_path = ctx.out("events.csv");
    io::write_events(&events_path, &events, detector.spatial_dims())?;
    manifest.output(&events_path);

    let dataset_path = ctx.out("dataset.csv");
    io::write_dataset(&dataset_path, &dataset, &detector)?;
    manifest.output(&dataset_path);
    manifest.output(&io::sidecar_path(&dataset_path));

    let diagnostics = SampleDiagnostics {
        n: cfg.n,
        seed,
        bins: dataset.counts().len(),
        occupied_bins: dataset.counts().iter().filter(|&&c| c > 0).count(),
        max_count: dataset.counts().iter().copied().max().unwrap_or(0),
    };
    manifest.diagnostics(&diagnostics);
    manifest.write(&ctx.out("run.json"))
}
