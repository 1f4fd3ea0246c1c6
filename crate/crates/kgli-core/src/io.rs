//! File formats shared with the command-line frontend.
//!
//! * Field files: CSV with header `axis0,axis1[,axis2,axis3],re[,im]`, one
//!   grid point per row in lexicographic index order, plus a grid sidecar
//!   JSON (same path with the extension replaced by `json`) holding
//!   `{dims, extents, points, spacing, periodic, origin}`.
//! * Event files: CSV `n,j,k0[,k1,k2]`.
//! * Dataset files: CSV `j,k0[,k1,k2],count` over the full bin box plus a
//!   JSON sidecar `{N, config}`.
//! * Worldlines: CSV `tau,x0,x1[,x2,x3],u0,u1[,u2,u3]`.
//! * Minimizer traces: CSV `iter,F,grad_norm,step`.
//!
//! All floats are written in shortest-roundtrip form, so re-running a
//! deterministic pipeline reproduces files byte for byte.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

use crate::experiment::{BinnedDataset, DetectorConfig, EventRecord};
use crate::functionals::TraceRow;
use crate::hje::Worldline;
use crate::spacetime::{ComplexField, ScalarField, SpacetimeGrid};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> IoError {
    IoError::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Grid metadata stored next to each field file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSidecar {
    pub dims: usize,
    pub extents: Vec<f64>,
    pub points: Vec<usize>,
    pub spacing: Vec<f64>,
    pub periodic: bool,
    pub origin: Vec<f64>,
}

impl GridSidecar {
    pub fn from_grid(grid: &SpacetimeGrid) -> Self {
        GridSidecar {
            dims: grid.spatial_dims(),
            extents: grid.extents().to_vec(),
            points: grid.points().to_vec(),
            spacing: grid.spacings(),
            periodic: grid.periodic(),
            origin: grid.origin().to_vec(),
        }
    }

    pub fn into_grid(self, path: &Path) -> Result<SpacetimeGrid, IoError> {
        let grid = SpacetimeGrid::new(
            self.dims,
            self.points,
            self.extents,
            self.origin,
            self.periodic,
        )
        .map_err(|e| format_err(path, e.to_string()))?;
        for (axis, &written) in self.spacing.iter().enumerate() {
            let actual = grid.spacing(axis);
            if (written - actual).abs() > 1e-12 * actual.abs().max(1.0) {
                return Err(format_err(
                    path,
                    format!("sidecar spacing[{axis}] = {written} contradicts extents/points ({actual})"),
                ));
            }
        }
        Ok(grid)
    }
}

/// `foo/bar.csv -> foo/bar.json`
pub fn sidecar_path(field_path: &Path) -> PathBuf {
    field_path.with_extension("json")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    writer.write_all(b"\n").map_err(io_err(path))?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let file = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn field_header(grid: &SpacetimeGrid, complex: bool) -> Vec<String> {
    let mut header: Vec<String> = (0..grid.axes()).map(|a| format!("axis{a}")).collect();
    header.push("re".into());
    if complex {
        header.push("im".into());
    }
    header
}

fn write_field_rows<F: Fn(usize) -> Vec<f64>>(
    path: &Path,
    grid: &SpacetimeGrid,
    complex: bool,
    row_values: F,
) -> Result<(), IoError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    writer
        .write_record(field_header(grid, complex))
        .map_err(csv_err(path))?;
    for lin in 0..grid.len() {
        let x = grid.coordinate_lin(lin);
        let mut row: Vec<String> = (0..grid.axes())
            .map(|a| x.component(a).to_string())
            .collect();
        row.extend(row_values(lin).iter().map(|v| v.to_string()));
        writer.write_record(&row).map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))?;
    write_json(&sidecar_path(path), &GridSidecar::from_grid(grid))
}

pub fn write_scalar_field(path: &Path, field: &ScalarField) -> Result<(), IoError> {
    write_field_rows(path, field.grid(), false, |lin| vec![*field.at(lin)])
}

pub fn write_complex_field(path: &Path, field: &ComplexField) -> Result<(), IoError> {
    write_field_rows(path, field.grid(), true, |lin| {
        let v = field.at(lin);
        vec![v.re, v.im]
    })
}

fn read_field_rows(path: &Path) -> Result<(SpacetimeGrid, Vec<Vec<f64>>), IoError> {
    let sidecar: GridSidecar = read_json(&sidecar_path(path))?;
    let grid = sidecar.into_grid(path)?;
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header_len = reader
        .headers()
        .map_err(csv_err(path))?
        .len();
    let value_cols = header_len
        .checked_sub(grid.axes())
        .filter(|&n| n == 1 || n == 2)
        .ok_or_else(|| format_err(path, "header does not match the sidecar grid"))?;
    let mut rows = Vec::with_capacity(grid.len());
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let mut values = Vec::with_capacity(value_cols);
        for i in 0..value_cols {
            let raw = record
                .get(grid.axes() + i)
                .ok_or_else(|| format_err(path, "short row"))?;
            values.push(
                raw.parse::<f64>()
                    .map_err(|e| format_err(path, format!("bad float {raw}: {e}")))?,
            );
        }
        rows.push(values);
    }
    if rows.len() != grid.len() {
        return Err(format_err(
            path,
            format!("{} rows for a grid of {} points", rows.len(), grid.len()),
        ));
    }
    Ok((grid, rows))
}

pub fn read_scalar_field(path: &Path) -> Result<ScalarField, IoError> {
    let (grid, rows) = read_field_rows(path)?;
    let values = rows.into_iter().map(|r| r[0]).collect();
    ScalarField::from_values(grid, values).map_err(|e| format_err(path, e.to_string()))
}

/// Reads a field file as complex data; a real field loads with zero
/// imaginary part.
pub fn read_complex_field(path: &Path) -> Result<ComplexField, IoError> {
    let (grid, rows) = read_field_rows(path)?;
    let values = rows
        .into_iter()
        .map(|r| Complex64::new(r[0], if r.len() > 1 { r[1] } else { 0.0 }))
        .collect();
    ComplexField::from_values(grid, values).map_err(|e| format_err(path, e.to_string()))
}

/// A field file as written: real (`re` only) or complex (`re,im`).
pub enum FieldData {
    Real(ScalarField),
    Complex(ComplexField),
}

pub fn read_field_auto(path: &Path) -> Result<FieldData, IoError> {
    let (grid, rows) = read_field_rows(path)?;
    if rows.first().map_or(1, |r| r.len()) == 1 {
        let values = rows.into_iter().map(|r| r[0]).collect();
        Ok(FieldData::Real(
            ScalarField::from_values(grid, values).map_err(|e| format_err(path, e.to_string()))?,
        ))
    } else {
        let values = rows
            .into_iter()
            .map(|r| Complex64::new(r[0], r[1]))
            .collect();
        Ok(FieldData::Complex(
            ComplexField::from_values(grid, values)
                .map_err(|e| format_err(path, e.to_string()))?,
        ))
    }
}

fn k_columns(dims: usize) -> Vec<String> {
    (0..dims).map(|a| format!("k{a}")).collect()
}

pub fn write_events(path: &Path, events: &[EventRecord], dims: usize) -> Result<(), IoError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec!["n".to_string(), "j".to_string()];
    header.extend(k_columns(dims));
    writer.write_record(&header).map_err(csv_err(path))?;
    for (n, ev) in events.iter().enumerate() {
        let mut row = vec![(n + 1).to_string(), ev.j.to_string()];
        row.extend((0..dims).map(|a| ev.k[a].to_string()));
        writer.write_record(&row).map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))
}

pub fn read_events(path: &Path) -> Result<Vec<EventRecord>, IoError> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let dims = reader
        .headers()
        .map_err(csv_err(path))?
        .len()
        .checked_sub(2)
        .filter(|&d| (1..=3).contains(&d))
        .ok_or_else(|| format_err(path, "expected columns n,j,k0[,k1,k2]"))?;
    let mut events = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let parse = |i: usize| -> Result<usize, IoError> {
            record
                .get(i)
                .ok_or_else(|| format_err(path, "short row"))?
                .parse::<usize>()
                .map_err(|e| format_err(path, format!("bad index: {e}")))
        };
        let j = parse(1)?;
        let mut k = [0usize; 3];
        for a in 0..dims {
            k[a] = parse(2 + a)?;
        }
        events.push(EventRecord { j, k });
    }
    Ok(events)
}

/// Sidecar of a dataset file: the total count and the detector config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSidecar {
    #[serde(rename = "N")]
    pub n: u64,
    pub config: DetectorConfig,
}

pub fn write_dataset(
    path: &Path,
    dataset: &BinnedDataset,
    config: &DetectorConfig,
) -> Result<(), IoError> {
    let dims = config.spatial_dims();
    let shape = dataset.shape().to_vec();
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec!["j".to_string()];
    header.extend(k_columns(dims));
    header.push("count".into());
    writer.write_record(&header).map_err(csv_err(path))?;
    let mut idx = vec![0usize; shape.len()];
    for &count in dataset.counts() {
        let mut row: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
        row.push(count.to_string());
        writer.write_record(&row).map_err(csv_err(path))?;
        // lexicographic increment
        for a in (0..shape.len()).rev() {
            idx[a] += 1;
            if idx[a] < shape[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    writer.flush().map_err(io_err(path))?;
    write_json(
        &sidecar_path(path),
        &DatasetSidecar {
            n: dataset.total(),
            config: config.clone(),
        },
    )
}

pub fn read_dataset(path: &Path) -> Result<(BinnedDataset, DetectorConfig), IoError> {
    let sidecar: DatasetSidecar = read_json(&sidecar_path(path))?;
    let config = sidecar.config;
    let shape = config.bin_shape();
    let expected: usize = shape.iter().product();
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut counts = vec![0u64; expected];
    let mut rows = 0usize;
    for (row_index, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        let count_col = record.len() - 1;
        let count = record
            .get(count_col)
            .ok_or_else(|| format_err(path, "short row"))?
            .parse::<u64>()
            .map_err(|e| format_err(path, format!("bad count: {e}")))?;
        if row_index >= expected {
            return Err(format_err(path, "more rows than bins"));
        }
        counts[row_index] = count;
        rows += 1;
    }
    if rows != expected {
        return Err(format_err(
            path,
            format!("{rows} rows for {expected} bins"),
        ));
    }
    let dataset = BinnedDataset::new(counts, shape, sidecar.n)
        .map_err(|e| format_err(path, e.to_string()))?;
    Ok((dataset, config))
}

pub fn write_worldline(path: &Path, worldline: &Worldline, dims: usize) -> Result<(), IoError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec!["tau".to_string()];
    for mu in 0..=dims {
        header.push(format!("x{mu}"));
    }
    for mu in 0..=dims {
        header.push(format!("u{mu}"));
    }
    writer.write_record(&header).map_err(csv_err(path))?;
    for sample in &worldline.samples {
        let mut row = vec![sample.tau.to_string()];
        for mu in 0..=dims {
            row.push(sample.x.component(mu).to_string());
        }
        for mu in 0..=dims {
            row.push(sample.u.component(mu).to_string());
        }
        writer.write_record(&row).map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))
}

pub fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<(), IoError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    writer
        .write_record(["iter", "F", "grad_norm", "step"])
        .map_err(csv_err(path))?;
    for row in trace {
        writer
            .write_record([
                row.iter.to_string(),
                row.f_value.to_string(),
                row.grad_norm.to_string(),
                row.step.to_string(),
            ])
            .map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{aggregate, sample_events};
    use crate::spacetime::FourVector;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn scalar_field_roundtrip() {
        let dir = tmp();
        let path = dir.path().join("field.csv");
        let grid =
            SpacetimeGrid::dim2([6, 5], [2.0, 3.0], [0.5, -1.5], true).unwrap();
        let field = ScalarField::from_fn(grid, |x| x.component(0) * 2.0 - x.component(1));
        write_scalar_field(&path, &field).unwrap();
        assert!(sidecar_path(&path).exists());
        let back = read_scalar_field(&path).unwrap();
        assert_eq!(back.grid(), field.grid());
        for (a, b) in back.values().iter().zip(field.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn complex_field_roundtrip_and_header() {
        let dir = tmp();
        let path = dir.path().join("phi.csv");
        let grid = SpacetimeGrid::dim2([4, 4], [1.0, 1.0], [0.0, 0.0], false).unwrap();
        let field = ComplexField::from_fn(grid, |x| {
            Complex64::new(x.component(0), -x.component(1))
        });
        write_complex_field(&path, &field).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("axis0,axis1,re,im\n"));
        let back = read_complex_field(&path).unwrap();
        for (a, b) in back.values().iter().zip(field.values()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn events_and_dataset_roundtrip() {
        let dir = tmp();
        let grid = SpacetimeGrid::dim2([4, 8], [1.0, 1.0], [0.0, 0.0], false).unwrap();
        let mut density = ScalarField::constant(grid.clone(), 1.0);
        density.normalize().unwrap();
        let events = sample_events(&density, 500, 3).unwrap();
        let config = DetectorConfig::from_grid(&grid, 1.0, 500).unwrap();
        let dataset = aggregate(&events, &config).unwrap();

        let epath = dir.path().join("events.csv");
        write_events(&epath, &events, 1).unwrap();
        let back = read_events(&epath).unwrap();
        assert_eq!(back, events);

        let dpath = dir.path().join("dataset.csv");
        write_dataset(&dpath, &dataset, &config).unwrap();
        let (ds_back, cfg_back) = read_dataset(&dpath).unwrap();
        assert_eq!(ds_back, dataset);
        assert_eq!(cfg_back, config);
    }

    #[test]
    fn worldline_and_trace_files_have_the_documented_headers() {
        let dir = tmp();
        let wpath = dir.path().join("worldline.csv");
        let worldline = Worldline {
            samples: vec![crate::hje::WorldlineSample {
                tau: 0.0,
                x: FourVector::new(1.0, 2.0, 0.0, 0.0),
                u: FourVector::new(1.0, 0.0, 0.0, 0.0),
            }],
            truncated: false,
            max_norm_drift: 0.0,
        };
        write_worldline(&wpath, &worldline, 1).unwrap();
        let text = std::fs::read_to_string(&wpath).unwrap();
        assert!(text.starts_with("tau,x0,x1,u0,u1\n"));

        let tpath = dir.path().join("trace.csv");
        write_trace(
            &tpath,
            &[TraceRow {
                iter: 0,
                f_value: 1.5,
                grad_norm: 0.1,
                step: 1.0,
            }],
        )
        .unwrap();
        let text = std::fs::read_to_string(&tpath).unwrap();
        assert!(text.starts_with("iter,F,grad_norm,step\n"));
    }

    #[test]
    fn corrupt_sidecar_spacing_is_rejected() {
        let dir = tmp();
        let path = dir.path().join("field.csv");
        let grid = SpacetimeGrid::dim2([4, 4], [1.0, 1.0], [0.0, 0.0], false).unwrap();
        let field = ScalarField::constant(grid, 1.0);
        write_scalar_field(&path, &field).unwrap();
        let mut sidecar: GridSidecar = read_json(&sidecar_path(&path)).unwrap();
        sidecar.spacing[0] *= 2.0;
        write_json(&sidecar_path(&path), &sidecar).unwrap();
        assert!(matches!(
            read_scalar_field(&path),
            Err(IoError::Format { .. })
        ));
    }
}
