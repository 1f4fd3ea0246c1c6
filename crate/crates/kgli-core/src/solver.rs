//! Explicit time-domain solver for the second-order complex wave equation
//! with electromagnetic potentials in 1+1D:
//!
//! `(1/c²)[iħ∂_t - qΦ]² φ = [(ħ/i)∂_x - (q/c)A_x]² φ + m²c² φ`
//!
//! on a periodic spatial grid. Both time derivatives are centered, which
//! makes the update second-order accurate and leaves `φ^{n+1}` behind an
//! invertible per-point complex coefficient `1 + i qΦΔt/ħ`.
//!
//! Every coefficient is built from the ratios `q/ħ` and `m/ħ` (never bare
//! `ħ`, `q`, `m`), so rescaling all three by a power of two reproduces the
//! evolution bit for bit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::spacetime::{ComplexField, PhysicalParams, ScalarField, SpacetimeGrid};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("stability bound violated: dt = {dt} exceeds {bound} (cfl_max = {cfl_max}, CFL number c·dt/dx = {cfl})")]
    CflViolation {
        dt: f64,
        bound: f64,
        cfl_max: f64,
        cfl: f64,
    },
    #[error("field diverged (non-finite value) at time step {step}")]
    Diverged { step: u64 },
    #[error("wavenumber k = {k} is incommensurate with the box (k L / 2π = {cycles})")]
    IncommensurateWavenumber { k: f64, cycles: f64 },
    #[error("{0}")]
    BadInput(String),
}

/// Uniform periodic spatial grid; cell centers at `origin + (j + 1/2) dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid1D {
    pub points: usize,
    pub dx: f64,
    pub origin: f64,
}

impl SpatialGrid1D {
    pub fn new(points: usize, length: f64, origin: f64) -> Result<Self, SolverError> {
        if points < 4 || !(length > 0.0) {
            return Err(SolverError::BadInput(
                "need at least 4 points and positive length".into(),
            ));
        }
        Ok(SpatialGrid1D {
            points,
            dx: length / points as f64,
            origin,
        })
    }

    pub fn length(&self) -> f64 {
        self.dx * self.points as f64
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        self.origin + (j as f64 + 0.5) * self.dx
    }
}

/// Static electromagnetic potentials sampled on the spatial grid. Passing a
/// different instance per step admits (lightly tested) time dependence.
#[derive(Debug, Clone, PartialEq)]
pub struct Potentials {
    pub phi: Vec<f64>,
    pub ax: Vec<f64>,
}

impl Potentials {
    pub fn zero(grid: &SpatialGrid1D) -> Self {
        Potentials {
            phi: vec![0.0; grid.points],
            ax: vec![0.0; grid.points],
        }
    }

    pub fn constant(grid: &SpatialGrid1D, phi: f64, ax: f64) -> Self {
        Potentials {
            phi: vec![phi; grid.points],
            ax: vec![ax; grid.points],
        }
    }
}

/// Largest stable time step of the explicit scheme,
/// `2 / sqrt(4c²/dx² + (mc²/ħ)²)`.
pub fn stability_dt_max(params: &PhysicalParams, dx: f64) -> f64 {
    let c = params.c;
    let rest = params.mass_ratio() * c * c;
    2.0 / (4.0 * c * c / (dx * dx) + rest * rest).sqrt()
}

/// Two consecutive field levels plus everything needed to advance them.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub prev: Vec<Complex64>,
    pub curr: Vec<Complex64>,
    /// Index of the `curr` level; `prev` is one step earlier.
    pub step_index: u64,
    pub dt: f64,
    pub grid: SpatialGrid1D,
    pub params: PhysicalParams,
    pub cfl_max: f64,
}

impl SolverState {
    /// Validates the stability bound (`cfl_max` defaults to 0.9 of it).
    pub fn new(
        prev: Vec<Complex64>,
        curr: Vec<Complex64>,
        grid: SpatialGrid1D,
        dt: f64,
        params: PhysicalParams,
        cfl_max: Option<f64>,
    ) -> Result<Self, SolverError> {
        let cfl_max = cfl_max.unwrap_or(0.9);
        if prev.len() != grid.points || curr.len() != grid.points {
            return Err(SolverError::BadInput(format!(
                "levels of {} and {} values on a grid of {} points",
                prev.len(),
                curr.len(),
                grid.points
            )));
        }
        if !(dt > 0.0) || !(0.0 < cfl_max && cfl_max <= 1.0) {
            return Err(SolverError::BadInput(
                "need dt > 0 and 0 < cfl_max <= 1".into(),
            ));
        }
        let bound = cfl_max * stability_dt_max(&params, grid.dx);
        if dt > bound {
            return Err(SolverError::CflViolation {
                dt,
                bound,
                cfl_max,
                cfl: params.c * dt / grid.dx,
            });
        }
        Ok(SolverState {
            prev,
            curr,
            step_index: 1,
            dt,
            grid,
            params,
            cfl_max,
        })
    }

    /// `qΦΔt/ħ` must stay well below 1 for the phase rotation per step to be
    /// resolved; 0.1 is the warning threshold.
    pub fn phase_rotation_warning(&self, pots: &Potentials) -> bool {
        let rq = self.params.charge_ratio();
        pots.phi
            .iter()
            .any(|&phi| (rq * phi * self.dt).abs() > 0.1)
    }
}

/// The spatial operator of the equation divided by `ħ²`:
/// `R = -D_xx φ + i (q/ħc)[D_x(Aφ) + A D_x φ] + (q/ħc)² A² φ + (mc/ħ)² c⁰… `
fn spatial_operator(
    v: &[Complex64],
    pots: &Potentials,
    grid: &SpatialGrid1D,
    params: &PhysicalParams,
) -> Vec<Complex64> {
    let n = grid.points;
    let dx = grid.dx;
    let c = params.c;
    let rq = params.charge_ratio();
    let rm = params.mass_ratio();
    let rest_sq = (rm * c * c / c) * (rm * c * c / c); // (mc/ħ)², kept as ratio
    let i_unit = Complex64::new(0.0, 1.0);
    exec::map_indexed(n, move |j| {
        let up = if j + 1 == n { 0 } else { j + 1 };
        let dn = if j == 0 { n - 1 } else { j - 1 };
        let second = (v[up] - 2.0 * v[j] + v[dn]) / (dx * dx);
        let first = (v[up] - v[dn]) / (2.0 * dx);
        let div = (pots.ax[up] * v[up] - pots.ax[dn] * v[dn]) / (2.0 * dx);
        let a = pots.ax[j];
        -second
            + i_unit * (rq / c) * (div + a * first)
            + (rq / c) * (rq / c) * a * a * v[j]
            + rest_sq * v[j]
    })
}

/// One explicit step. Pure: returns the advanced state.
pub fn step(state: &SolverState, pots: &Potentials) -> Result<SolverState, SolverError> {
    let n = state.grid.points;
    if pots.phi.len() != n || pots.ax.len() != n {
        return Err(SolverError::BadInput(
            "potentials are sampled on a different grid".into(),
        ));
    }
    let dt = state.dt;
    let c = state.params.c;
    let rq = state.params.charge_ratio();
    let rhs = spatial_operator(&state.curr, pots, &state.grid, &state.params);
    let curr = &state.curr;
    let prev = &state.prev;
    let next: Vec<Complex64> = exec::map_indexed(n, move |j| {
        let alpha = rq * pots.phi[j] * dt;
        let i_alpha = Complex64::new(0.0, alpha);
        let numerator = 2.0 * curr[j] - prev[j]
            + i_alpha * prev[j]
            + alpha * alpha * curr[j]
            - c * c * dt * dt * rhs[j];
        numerator / (Complex64::new(1.0, 0.0) + i_alpha)
    });
    if next.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(SolverError::Diverged {
            step: state.step_index + 1,
        });
    }
    Ok(SolverState {
        prev: state.curr.clone(),
        curr: next,
        step_index: state.step_index + 1,
        dt,
        grid: state.grid,
        params: state.params,
        cfl_max: state.cfl_max,
    })
}

/// Second-order Taylor start: builds the second level from `(φ, ∂_tφ)` using
/// the equation for `∂_ttφ`.
pub fn taylor_start(
    phi0: &[Complex64],
    dphi_dt: &[Complex64],
    pots: &Potentials,
    grid: &SpatialGrid1D,
    dt: f64,
    params: &PhysicalParams,
) -> Vec<Complex64> {
    let rhs = spatial_operator(phi0, pots, grid, params);
    let c = params.c;
    let rq = params.charge_ratio();
    let i_unit = Complex64::new(0.0, 1.0);
    (0..grid.points)
        .map(|j| {
            let ddt = -c * c * rhs[j] - 2.0 * i_unit * rq * pots.phi[j] * dphi_dt[j]
                + rq * rq * pots.phi[j] * pots.phi[j] * phi0[j];
            phi0[j] + dt * dphi_dt[j] + 0.5 * dt * dt * ddt
        })
        .collect()
}

/// Per-recorded-level diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepDiagnostic {
    pub step: u64,
    /// `Σ |φ|² dx` at the level.
    pub norm: f64,
    /// Max-norm of `∂_tρ + ∂_x j` centered at the level (needs three
    /// consecutive levels; absent for the first recorded ones).
    pub continuity_residual: Option<f64>,
}

pub struct SolveOutput {
    /// `(step index, field level)` at steps `0, r, 2r, ...` plus the final
    /// state's level.
    pub recorded: Vec<(u64, Vec<Complex64>)>,
    pub diagnostics: Vec<StepDiagnostic>,
    pub final_state: SolverState,
    pub phase_rotation_warning: bool,
}

/// Runs `n_steps` explicit steps from two initial levels, recording every
/// `record_every` steps. Deterministic: identical inputs give bit-identical
/// histories.
pub fn solve(
    initial: SolverState,
    pots: &Potentials,
    n_steps: u64,
    record_every: u64,
) -> Result<SolveOutput, SolverError> {
    if record_every == 0 {
        return Err(SolverError::BadInput("record_every must be >= 1".into()));
    }
    let warn = initial.phase_rotation_warning(pots);
    let dx = initial.grid.dx;
    let norm_of = |v: &[Complex64]| exec::sum_indexed(v.len(), |j| v[j].norm_sqr()) * dx;

    let mut recorded = Vec::new();
    let mut diagnostics = Vec::new();
    // rolling window of the three most recent levels for the continuity check
    let mut window: Vec<(u64, Vec<Complex64>)> = vec![
        (initial.step_index - 1, initial.prev.clone()),
        (initial.step_index, initial.curr.clone()),
    ];

    let mut record = |step: u64, level: &[Complex64], window: &[(u64, Vec<Complex64>)]| {
        let continuity = if window.len() == 3 && window[2].0 == step {
            Some(max_continuity_residual(
                &window[0].1,
                &window[1].1,
                &window[2].1,
                &initial.grid,
                initial.dt,
                pots,
                &initial.params,
            ))
        } else {
            None
        };
        diagnostics.push(StepDiagnostic {
            step,
            norm: norm_of(level),
            continuity_residual: continuity,
        });
        recorded.push((step, level.to_vec()));
    };

    // the first recorded level is the earlier of the two initial ones
    record(initial.step_index - 1, &initial.prev, &[]);
    if n_steps == 0 {
        record(initial.step_index, &initial.curr, &[]);
        return Ok(SolveOutput {
            recorded,
            diagnostics,
            final_state: initial,
            phase_rotation_warning: warn,
        });
    }

    let mut state = initial.clone();
    for _ in 0..n_steps {
        state = step(&state, pots)?;
        window.push((state.step_index, state.curr.clone()));
        if window.len() > 3 {
            window.remove(0);
        }
        let steps_taken = state.step_index - initial.step_index;
        if steps_taken % record_every == 0 || steps_taken == n_steps {
            record(state.step_index, &state.curr, &window);
        }
    }
    Ok(SolveOutput {
        recorded,
        diagnostics,
        final_state: state,
        phase_rotation_warning: warn,
    })
}

/// Positive-branch dispersion `ω(k) = sqrt(c²k² + (mc²/ħ)²)`.
pub fn dispersion_omega(k: f64, params: &PhysicalParams) -> f64 {
    let c = params.c;
    let rest = params.mass_ratio() * c * c;
    (c * c * k * k + rest * rest).sqrt()
}

fn check_commensurate(k: f64, length: f64) -> Result<(), SolverError> {
    let cycles = k * length / (2.0 * std::f64::consts::PI);
    if (cycles - cycles.round()).abs() > 1e-9 {
        return Err(SolverError::IncommensurateWavenumber { k, cycles });
    }
    Ok(())
}

/// Exact plane wave `φ(t,x) = exp(i(kx - ωt))` sampled over a space-time
/// grid (axis 0 is `ct`), plus its frequency. `k` must fit the periodic box.
pub fn plane_wave(
    k: f64,
    params: &PhysicalParams,
    grid: &SpacetimeGrid,
) -> Result<(ComplexField, f64), SolverError> {
    if grid.axes() != 2 || !grid.periodic() {
        return Err(SolverError::BadInput(
            "plane-wave oracle needs a periodic 1+1D grid".into(),
        ));
    }
    check_commensurate(k, grid.extents()[1])?;
    let omega = dispersion_omega(k, params);
    let c = params.c;
    let field = ComplexField::from_fn(grid.clone(), |x| {
        Complex64::from_polar(1.0, k * x.component(1) - (omega / c) * x.component(0))
    });
    Ok((field, omega))
}

/// Two exact plane-wave levels at `t = 0` and `t = dt` for starting the
/// solver on its own grid.
pub fn plane_wave_levels(
    k: f64,
    params: &PhysicalParams,
    grid: &SpatialGrid1D,
    dt: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>, f64), SolverError> {
    check_commensurate(k, grid.length())?;
    let omega = dispersion_omega(k, params);
    let level = |t: f64| -> Vec<Complex64> {
        (0..grid.points)
            .map(|j| Complex64::from_polar(1.0, k * grid.coordinate(j) - omega * t))
            .collect()
    };
    Ok((level(0.0), level(dt), omega))
}

/// A superposition of exact single-mode solutions; `branch = -1` selects the
/// negative-frequency solution `exp(i(kx + ωt))`.
pub fn mode_superposition_levels(
    modes: &[(f64, f64, i8)], // (amplitude, k, branch)
    params: &PhysicalParams,
    grid: &SpatialGrid1D,
    dt: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>), SolverError> {
    for &(_, k, branch) in modes {
        check_commensurate(k, grid.length())?;
        if branch != 1 && branch != -1 {
            return Err(SolverError::BadInput("branch must be ±1".into()));
        }
    }
    let level = |t: f64| -> Vec<Complex64> {
        (0..grid.points)
            .map(|j| {
                let x = grid.coordinate(j);
                modes
                    .iter()
                    .map(|&(amp, k, branch)| {
                        let omega = dispersion_omega(k, params);
                        Complex64::from_polar(amp, k * x - branch as f64 * omega * t)
                    })
                    .sum()
            })
            .collect()
    };
    Ok((level(0.0), level(dt)))
}

/// Gaussian wave packet on a carrier, synthesized mode by mode so that both
/// returned levels are exact positive-frequency solutions of the free
/// equation (discrete Fourier transform of the `t = 0` packet).
pub fn wave_packet_levels(
    k0: f64,
    sigma: f64,
    center: f64,
    params: &PhysicalParams,
    grid: &SpatialGrid1D,
    dt: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>), SolverError> {
    check_commensurate(k0, grid.length())?;
    let n = grid.points;
    let length = grid.length();
    let packet: Vec<Complex64> = (0..n)
        .map(|j| {
            let x = grid.coordinate(j);
            // nearest periodic image of the center
            let mut dx = x - center;
            dx -= length * (dx / length).round();
            Complex64::from_polar((-0.5 * (dx / sigma) * (dx / sigma)).exp(), k0 * x)
        })
        .collect();
    // plain DFT: a_m = (1/n) Σ_j packet_j exp(-i k_m x_j)
    let half = n as i64 / 2;
    let mut amplitudes = Vec::with_capacity(n);
    for m in -half..half {
        let k_m = 2.0 * std::f64::consts::PI * m as f64 / length;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &v) in packet.iter().enumerate() {
            acc += v * Complex64::from_polar(1.0, -k_m * grid.coordinate(j));
        }
        amplitudes.push((k_m, acc / n as f64));
    }
    let level = |t: f64| -> Vec<Complex64> {
        (0..n)
            .map(|j| {
                let x = grid.coordinate(j);
                amplitudes
                    .iter()
                    .map(|&(k_m, a)| {
                        a * Complex64::from_polar(
                            1.0,
                            k_m * x - dispersion_omega(k_m, params) * t,
                        )
                    })
                    .sum()
            })
            .collect()
    };
    Ok((level(0.0), level(dt)))
}

/// Charge and current densities at the half-level between two consecutive
/// field levels (centered there to second order):
///
/// `ρ = (iħ/2mc²)(φ*∂_tφ - φ∂_tφ*) - (qΦ/mc²)|φ|²`
/// `j = -(iħ/2m)(φ*∂_xφ - φ∂_xφ*) - (q/mc)A|φ|²`
#[derive(Debug, Clone)]
pub struct CurrentDensity {
    pub rho: Vec<f64>,
    pub j: Vec<f64>,
}

pub fn conserved_current(
    prev: &[Complex64],
    curr: &[Complex64],
    grid: &SpatialGrid1D,
    dt: f64,
    pots: &Potentials,
    params: &PhysicalParams,
) -> CurrentDensity {
    let n = grid.points;
    let c = params.c;
    let hbar_over_m = 1.0 / params.mass_ratio();
    let q_over_m = params.charge_ratio() / params.mass_ratio();
    let mut rho = vec![0.0; n];
    let mut j_out = vec![0.0; n];
    let half: Vec<Complex64> = (0..n).map(|j| 0.5 * (prev[j] + curr[j])).collect();
    for jdx in 0..n {
        let dphi_dt = (curr[jdx] - prev[jdx]) / dt;
        // (iħ/2mc²)(φ*∂φ - φ∂φ*) = -(ħ/mc²) Im(φ* ∂φ)
        rho[jdx] = -(hbar_over_m / (c * c)) * (half[jdx].conj() * dphi_dt).im
            - q_over_m * pots.phi[jdx] / (c * c) * half[jdx].norm_sqr();
        let up = if jdx + 1 == n { 0 } else { jdx + 1 };
        let dn = if jdx == 0 { n - 1 } else { jdx - 1 };
        let dphi_dx = (half[up] - half[dn]) / (2.0 * grid.dx);
        j_out[jdx] = hbar_over_m * (half[jdx].conj() * dphi_dx).im
            - q_over_m / c * pots.ax[jdx] * half[jdx].norm_sqr();
    }
    CurrentDensity { rho, j: j_out }
}

/// `∂_tρ + ∂_x j` centered at each interior level of a history slice (three
/// or more consecutive levels spaced `dt` apart). Currents live at
/// half-levels; their difference and average center the residual at the
/// level itself, keeping everything second order.
pub fn continuity_residual(
    history: &[Vec<Complex64>],
    grid: &SpatialGrid1D,
    dt: f64,
    pots: &Potentials,
    params: &PhysicalParams,
) -> Result<Vec<Vec<f64>>, SolverError> {
    if history.len() < 3 {
        return Err(SolverError::BadInput(
            "continuity residual needs at least 3 consecutive levels".into(),
        ));
    }
    let n = grid.points;
    let mut out = Vec::with_capacity(history.len() - 2);
    for w in history.windows(3) {
        let lower = conserved_current(&w[0], &w[1], grid, dt, pots, params);
        let upper = conserved_current(&w[1], &w[2], grid, dt, pots, params);
        let mut residual = vec![0.0; n];
        for j in 0..n {
            let drho_dt = (upper.rho[j] - lower.rho[j]) / dt;
            let up = if j + 1 == n { 0 } else { j + 1 };
            let dn = if j == 0 { n - 1 } else { j - 1 };
            let dj_dx = 0.5
                * ((upper.j[up] - upper.j[dn]) + (lower.j[up] - lower.j[dn]))
                / (2.0 * grid.dx);
            residual[j] = drho_dt + dj_dx;
        }
        out.push(residual);
    }
    Ok(out)
}

fn max_continuity_residual(
    a: &[Complex64],
    b: &[Complex64],
    c_level: &[Complex64],
    grid: &SpatialGrid1D,
    dt: f64,
    pots: &Potentials,
    params: &PhysicalParams,
) -> f64 {
    continuity_residual(
        &[a.to_vec(), b.to_vec(), c_level.to_vec()],
        grid,
        dt,
        pots,
        params,
    )
    .map(|r| r[0].iter().fold(0.0f64, |m, v| m.max(v.abs())))
    .unwrap_or(f64::NAN)
}

/// Rescales `(ħ, q, m)` by a common factor; the speed of light is untouched
/// and `lambda = 4m²/ħ²` is unchanged by construction.
pub fn scale_transform(params: &PhysicalParams, xi: f64) -> Result<PhysicalParams, SolverError> {
    if !(xi > 0.0) {
        return Err(SolverError::BadInput(format!(
            "scale factor must be positive, got {xi}"
        )));
    }
    PhysicalParams::new(params.c, params.hbar * xi, params.m * xi, params.q * xi)
        .map_err(|e| SolverError::BadInput(e.to_string()))
}

/// Assembles recorded levels into a space-time field; axis 0 is `ct` with
/// one cell per recorded level (spacing `c·dt_levels`).
pub fn history_field(
    levels: &[Vec<Complex64>],
    grid: &SpatialGrid1D,
    dt_levels: f64,
    t_first: f64,
    c: f64,
) -> Result<ComplexField, SolverError> {
    if levels.len() < 4 {
        return Err(SolverError::BadInput(
            "need at least 4 recorded levels".into(),
        ));
    }
    let n_rec = levels.len();
    let spacetime = SpacetimeGrid::dim2(
        [n_rec, grid.points],
        [c * dt_levels * n_rec as f64, grid.length()],
        [c * t_first - 0.5 * c * dt_levels, grid.origin],
        true,
    )
    .map_err(|e| SolverError::BadInput(e.to_string()))?;
    let mut values = Vec::with_capacity(n_rec * grid.points);
    for level in levels {
        if level.len() != grid.points {
            return Err(SolverError::BadInput("ragged history".into()));
        }
        values.extend_from_slice(level);
    }
    ComplexField::from_values(spacetime, values).map_err(|e| SolverError::BadInput(e.to_string()))
}

/// `|φ|²` pointwise; optionally normalized to quadrature 1 over the grid.
pub fn probability_density(phi: &ComplexField, normalize: bool) -> ScalarField {
    let mut density = ScalarField::from_values(
        phi.grid().clone(),
        phi.values().iter().map(|v| v.norm_sqr()).collect(),
    )
    .expect("same grid");
    if normalize {
        density.normalize().expect("strictly positive mass");
    }
    density
}
