//! The idealized particle-detection experiment: binning of raw detection
//! coordinates, count datasets, seeded synthetic event generation from a
//! density field, and the multinomial log-likelihood of a dataset.
//!
//! Bin indices follow the ceiling convention: a time stamp `t` falls in bin
//! `j = ceiling(t / delta_t)`, so bin 0 is hit only by `t = 0` exactly, and
//! bin `j >= 1` covers `((j-1) delta_t, j delta_t]`. Datasets produced by
//! sampling a density *field* instead use grid-cell indices directly (cell
//! `i` of an axis is bin `i`); both live in the same `[0, J] x [0, K]` index
//! box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;
use thiserror::Error;

use crate::spacetime::ScalarField;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("coordinate out of range on axis {axis}: value {value} maps to bin {bin}, allowed 0..={max}")]
    OutOfRange {
        axis: usize,
        value: f64,
        bin: i64,
        max: usize,
    },
    #[error("invalid detector config: {0}")]
    BadConfig(String),
    #[error("density is not normalizable: {0}")]
    BadDensity(String),
    #[error("dataset violates the count constraint: sum of counts {sum} != N = {total}")]
    CountMismatch { sum: u64, total: u64 },
    #[error("event ({j}, {k:?}) outside the bin box of the config")]
    EventOutOfBox { j: usize, k: [usize; 3] },
}

/// Detector resolution and bin-box geometry. Together with the fixed applied
/// potentials this plays the role of the background proposition of a run: all
/// experimental conditions that do not change between repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Temporal resolution (time units).
    pub delta_t: f64,
    /// Spatial resolution (length units), shared by all spatial axes.
    pub delta_s: f64,
    /// Largest time-bin index J; time bins run 0..=J.
    pub j_max: usize,
    /// Largest space-bin index per spatial axis; bins run 0..=K elementwise.
    pub k_max: Vec<usize>,
    /// Number of repetitions N.
    pub repetitions: u64,
}

impl DetectorConfig {
    pub fn new(
        delta_t: f64,
        delta_s: f64,
        j_max: usize,
        k_max: Vec<usize>,
        repetitions: u64,
    ) -> Result<Self, ExperimentError> {
        if !(delta_t > 0.0) || !(delta_s > 0.0) {
            return Err(ExperimentError::BadConfig(
                "delta_t and delta_s must be positive".into(),
            ));
        }
        if j_max < 1 || k_max.is_empty() || k_max.iter().any(|&k| k < 1) || repetitions < 1 {
            return Err(ExperimentError::BadConfig(
                "need J >= 1, every K >= 1, N >= 1".into(),
            ));
        }
        if k_max.len() > 3 {
            return Err(ExperimentError::BadConfig(
                "at most 3 spatial axes".into(),
            ));
        }
        Ok(DetectorConfig {
            delta_t,
            delta_s,
            j_max,
            k_max,
            repetitions,
        })
    }

    pub fn spatial_dims(&self) -> usize {
        self.k_max.len()
    }

    /// Bins per axis, time axis first: `[J+1, K_0+1, ...]`.
    pub fn bin_shape(&self) -> Vec<usize> {
        let mut shape = vec![self.j_max + 1];
        shape.extend(self.k_max.iter().map(|&k| k + 1));
        shape
    }

    pub fn bin_count(&self) -> usize {
        self.bin_shape().iter().product()
    }

    /// Config whose bins are exactly the cells of a density grid.
    pub fn from_grid(
        grid: &crate::spacetime::SpacetimeGrid,
        c: f64,
        repetitions: u64,
    ) -> Result<Self, ExperimentError> {
        let pts = grid.points();
        DetectorConfig::new(
            grid.spacing(0) / c,
            grid.spacing(1),
            pts[0] - 1,
            pts[1..].iter().map(|&p| p - 1).collect(),
            repetitions,
        )
    }

    fn flatten(&self, j: usize, k: &[usize; 3]) -> Result<usize, ExperimentError> {
        if j > self.j_max {
            return Err(ExperimentError::EventOutOfBox { j, k: *k });
        }
        let mut lin = j;
        for (a, &kmax) in self.k_max.iter().enumerate() {
            if k[a] > kmax {
                return Err(ExperimentError::EventOutOfBox { j, k: *k });
            }
            lin = lin * (kmax + 1) + k[a];
        }
        Ok(lin)
    }
}

/// One detection event: time-bin index and space-bin index vector. Unused
/// spatial components stay zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub j: usize,
    pub k: [usize; 3],
}

/// The count dataset: multiplicities per bin over the config's bin box, with
/// the constraint `sum_j c_j = N`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedDataset {
    counts: Vec<u64>,
    shape: Vec<usize>,
    total: u64,
}

impl BinnedDataset {
    pub fn new(counts: Vec<u64>, shape: Vec<usize>, total: u64) -> Result<Self, ExperimentError> {
        let expected: usize = shape.iter().product();
        if counts.len() != expected {
            return Err(ExperimentError::BadConfig(format!(
                "counts length {} does not match bin shape {:?}",
                counts.len(),
                shape
            )));
        }
        let sum: u64 = counts.iter().sum();
        if sum != total {
            return Err(ExperimentError::CountMismatch { sum, total });
        }
        Ok(BinnedDataset {
            counts,
            shape,
            total,
        })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn as_real(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }
}

fn ceiling_bin(value: f64, resolution: f64) -> i64 {
    (value / resolution).ceil() as i64
}

/// Bins a raw detection coordinate: `j = ceiling(t/delta_t)`,
/// `k = ceiling(r/delta_s)` elementwise. Coordinates that land outside the
/// bin box `[0,J] x [0,K]` are a range error naming the offending coordinate.
pub fn bin_event(t: f64, r: &[f64], cfg: &DetectorConfig) -> Result<EventRecord, ExperimentError> {
    if r.len() != cfg.spatial_dims() {
        return Err(ExperimentError::BadConfig(format!(
            "event has {} spatial coordinates, config expects {}",
            r.len(),
            cfg.spatial_dims()
        )));
    }
    // negative coordinates would alias into bin 0, which is reserved for
    // exactly-zero values under the ceiling convention
    let j = ceiling_bin(t, cfg.delta_t);
    if t < 0.0 || j < 0 || j as usize > cfg.j_max {
        return Err(ExperimentError::OutOfRange {
            axis: 0,
            value: t,
            bin: j,
            max: cfg.j_max,
        });
    }
    let mut k = [0usize; 3];
    for (a, &coord) in r.iter().enumerate() {
        let bin = ceiling_bin(coord, cfg.delta_s);
        if coord < 0.0 || bin < 0 || bin as usize > cfg.k_max[a] {
            return Err(ExperimentError::OutOfRange {
                axis: a + 1,
                value: coord,
                bin,
                max: cfg.k_max[a],
            });
        }
        k[a] = bin as usize;
    }
    Ok(EventRecord { j: j as usize, k })
}

/// Folds a list of events into the count dataset. Order independent; the
/// total equals the list length.
pub fn aggregate(
    events: &[EventRecord],
    cfg: &DetectorConfig,
) -> Result<BinnedDataset, ExperimentError> {
    let mut counts = vec![0u64; cfg.bin_count()];
    for ev in events {
        counts[cfg.flatten(ev.j, &ev.k)?] += 1;
    }
    BinnedDataset::new(counts, cfg.bin_shape(), events.len() as u64)
}

/// Draws `n` independent categorical events from a normalized density field,
/// one event per grid cell index. Deterministic for a given seed: inverse-CDF
/// over the flattened lexicographic bin order, driven by a ChaCha8 stream.
///
/// The density must be non-negative with quadrature sum 1 within `1e-9`.
pub fn sample_events(
    density: &ScalarField,
    n: u64,
    seed: u64,
) -> Result<Vec<EventRecord>, ExperimentError> {
    let grid = density.grid();
    if grid.axes() > 4 {
        return Err(ExperimentError::BadConfig("too many axes".into()));
    }
    let cell = grid.cell_volume();
    let mut cdf = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    for &v in density.values() {
        if v < 0.0 || !v.is_finite() {
            return Err(ExperimentError::BadDensity(format!(
                "density value {v} is negative or non-finite"
            )));
        }
        acc += v * cell;
        cdf.push(acc);
    }
    if acc <= 0.0 {
        return Err(ExperimentError::BadDensity("all-zero density".into()));
    }
    if (acc - 1.0).abs() > 1e-9 {
        return Err(ExperimentError::BadDensity(format!(
            "quadrature sum {acc} is not 1 within 1e-9"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let u: f64 = rng.gen::<f64>() * acc;
        // first bin whose cumulative weight exceeds u
        let lin = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        let idx = grid.unflatten(lin);
        let mut k = [0usize; 3];
        for (a, &i) in idx[1..].iter().enumerate() {
            k[a] = i;
        }
        events.push(EventRecord { j: idx[0], k });
    }
    Ok(events)
}

/// Log of the multinomial i-prob of a dataset under per-bin probabilities:
/// `ln N! + sum_j [c_j ln P_j - ln c_j!]`, with factorials through log-gamma
/// so that `N` up to 1e7 cannot overflow.
///
/// A bin with `c_j > 0` and `P_j = 0` makes the i-prob exactly zero; that is
/// reported distinctly as [`ExperimentError::BadDensity`]-free singular-bin
/// information via the returned error.
pub fn log_multinomial_iprob(
    dataset: &BinnedDataset,
    probs: &[f64],
) -> Result<f64, ExperimentError> {
    if probs.len() != dataset.counts().len() {
        return Err(ExperimentError::BadConfig(format!(
            "probs length {} vs {} bins",
            probs.len(),
            dataset.counts().len()
        )));
    }
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(ExperimentError::BadDensity(format!(
            "probabilities must be non-negative and sum to 1 within 1e-9 (sum = {sum})"
        )));
    }
    let mut ln_p = ln_factorial(dataset.total());
    for (bin, (&c, &p)) in dataset.counts().iter().zip(probs).enumerate() {
        if c == 0 {
            continue;
        }
        if p == 0.0 {
            return Err(ExperimentError::BadDensity(format!(
                "occupied bin {bin} has zero probability: i-prob is exactly zero (ln = -inf)"
            )));
        }
        ln_p += c as f64 * p.ln() - ln_factorial(c);
    }
    Ok(ln_p)
}
