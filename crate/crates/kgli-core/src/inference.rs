//! Evidence, robustness, and Fisher information.
//!
//! Two model abstractions live here:
//!
//! * [`BinModel`] — a parametric family of probability vectors over a finite
//!   set of bins, with analytic first and second parameter derivatives. The
//!   evidence of a count dataset and the discrete Fisher information are sums
//!   over the bins of such a family.
//! * [`SpacetimeDensity`] / [`ProperTimeDensity`] — parametric probability
//!   densities over the space-time box, used by the continuum Fisher
//!   quadrature and the gradient identities. A proper-time density depends on
//!   position only through the detector-frame proper time, mirroring the
//!   assumption that the density is a function of Lorentz scalars alone.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::spacetime::{minkowski_dot, FourVector, ScalarField, SpacetimeGrid};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("occupied bin {bin} has zero probability at theta = {theta}: the evidence is a ±infinity sentinel")]
    SingularBin { bin: usize, theta: f64 },
    #[error("bin {bin}: zero probability with non-zero derivative makes the model singular")]
    SingularModel { bin: usize },
    #[error("counts ({counts}) and model ({model}) bin layouts do not match")]
    MisalignedBins { counts: usize, model: usize },
    #[error("model parameter outside the family's domain: {0}")]
    BadTheta(String),
    #[error("empty support: {0}")]
    EmptySupport(String),
    #[error("{0}")]
    BadInput(String),
}

// ---------------------------------------------------------------------------
// Discrete bin families
// ---------------------------------------------------------------------------

/// A family of probability assignments over a fixed finite bin set,
/// differentiable in the scalar condition parameter.
pub trait BinModel {
    fn bins(&self) -> usize;

    /// `P(j | theta)` for all bins; non-negative, summing to 1.
    fn probs(&self, theta: f64) -> Result<Vec<f64>, InferenceError>;

    /// `dP/dtheta` per bin. Sums to zero for a well-formed family.
    fn dprobs(&self, theta: f64) -> Result<Vec<f64>, InferenceError>;

    /// `d2P/dtheta2` per bin.
    fn d2probs(&self, theta: f64) -> Result<Vec<f64>, InferenceError>;
}

/// Two bins with `P = (theta, 1 - theta)`.
pub struct TwoBinLinear;

impl BinModel for TwoBinLinear {
    fn bins(&self) -> usize {
        2
    }

    fn probs(&self, theta: f64) -> Result<Vec<f64>, InferenceError> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(InferenceError::BadTheta(format!(
                "two-bin parameter must lie in [0,1], got {theta}"
            )));
        }
        Ok(vec![theta, 1.0 - theta])
    }

    fn dprobs(&self, _theta: f64) -> Result<Vec<f64>, InferenceError> {
        Ok(vec![1.0, -1.0])
    }

    fn d2probs(&self, _theta: f64) -> Result<Vec<f64>, InferenceError> {
        Ok(vec![0.0, 0.0])
    }
}

/// Normalized exponential family `P_j ∝ exp(a_j + b_j θ + c_j θ²)`.
///
/// Derivatives come from the exact quotient-rule formulas, so the
/// normalization identities `Σ P' = Σ P'' = 0` hold to rounding — which is
/// what makes the robust-count cancellation exact.
pub struct ExpFamilyBinModel {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl ExpFamilyBinModel {
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self, InferenceError> {
        if a.len() != b.len() || a.len() != c.len() || a.is_empty() {
            return Err(InferenceError::BadInput(
                "coefficient vectors must be non-empty and equally long".into(),
            ));
        }
        Ok(ExpFamilyBinModel { a, b, c })
    }

    fn weights(&self, theta: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.a.len();
        let mut p = vec![0.0; n];
        let mut l1 = vec![0.0; n];
        let mut l2 = vec![0.0; n];
        let mut z = 0.0;
        for j in 0..n {
            let w = (self.a[j] + self.b[j] * theta + self.c[j] * theta * theta).exp();
            p[j] = w;
            l1[j] = self.b[j] + 2.0 * self.c[j] * theta;
            l2[j] = 2.0 * self.c[j];
            z += w;
        }
        p.iter_mut().for_each(|v| *v /= z);
        (p, l1, l2)
    }
}

impl BinModel for ExpFamilyBinModel {
    fn bins(&self) -> usize {
        self.a.len()
    }

    fn probs(&self, theta: f64) -> Result<Vec<f64>, InferenceError> {
        Ok(self.weights(theta).0)
    }

    fn dprobs(&self, theta: f64) -> Result<Vec<f64>, InferenceError> {
        let (p, l1, _) = self.weights(theta);
        let mean: f64 = p.iter().zip(&l1).map(|(pj, lj)| pj * lj).sum();
        Ok(p.iter().zip(&l1).map(|(pj, lj)| pj * (lj - mean)).collect())
    }

    fn d2probs(&self, theta: f64) -> Result<Vec<f64>, InferenceError> {
        let (p, l1, l2) = self.weights(theta);
        let m1: f64 = p.iter().zip(&l1).map(|(pj, lj)| pj * lj).sum();
        let m2: f64 = p.iter().zip(&l2).map(|(pj, lj)| pj * lj).sum();
        let msq: f64 = p.iter().zip(&l1).map(|(pj, lj)| pj * lj * lj).sum();
        Ok(p
            .iter()
            .zip(l1.iter().zip(&l2))
            .map(|(pj, (l1j, l2j))| {
                let centered = l1j - m1;
                pj * (centered * centered + l2j - m2 - msq + m1 * m1)
            })
            .collect())
    }
}

/// Cyclic time-shift family built on a reference density over a
/// `(time, space)` bin grid: `P(j_t, j_x | theta)` is the reference rolled
/// along the time axis by `(theta - theta0) / dt_bin` bins.
///
/// Shifts are restricted to integer multiples of the bin spacing, which keeps
/// the normalization exactly invariant; theta-derivatives are centered
/// differences of one-bin rolls.
pub struct TimeShiftModel {
    probs0: Vec<f64>,
    time_bins: usize,
    space_bins: usize,
    dt_bin: f64,
    theta0: f64,
}

impl TimeShiftModel {
    pub fn new(
        reference: Vec<f64>,
        time_bins: usize,
        dt_bin: f64,
        theta0: f64,
    ) -> Result<Self, InferenceError> {
        if time_bins == 0 || reference.is_empty() || reference.len() % time_bins != 0 {
            return Err(InferenceError::BadInput(format!(
                "reference length {} is not a multiple of {} time bins",
                reference.len(),
                time_bins
            )));
        }
        if !(dt_bin > 0.0) {
            return Err(InferenceError::BadInput("dt_bin must be positive".into()));
        }
        let sum: f64 = reference.iter().sum();
        if reference.iter().any(|&p| p < 0.0) || sum <= 0.0 {
            return Err(InferenceError::BadInput(
                "reference must be a non-negative, normalizable vector".into(),
            ));
        }
        let space_bins = reference.len() / time_bins;
        let probs0 = reference.iter().map(|&p| p / sum).collect();
        Ok(TimeShiftModel {
            probs0,
            time_bins,
            space_bins,
            dt_bin,
            theta0,
        })
    }

    pub fn dt_bin(&self) -> f64 {
        self.dt_bin
    }

    fn shift_bins(&self, theta: f64) -> Result<i64, InferenceError> {
        let s = (theta - self.theta0) / self.dt_bin;
        let rounded = s.round();
        if (s - rounded).abs() > 1e-9 {
            return Err(InferenceError::BadTheta(format!(
                "theta = {theta} is not an integer number of time bins from the reference \
                 (offset {s} bins); the shift family lives on the bin lattice"
            )));
        }
        Ok(rounded as i64)
    }

    fn rolled(&self, shift: i64) -> Vec<f64> {
        let nt = self.time_bins as i64;
        let mut out = vec![0.0; self.probs0.len()];
        for jt in 0..self.time_bins {
            let src = (jt as i64 - shift).rem_euclid(nt) as usize;
            let dst = jt * self.space_bins;
            let src_base = src * self.space_bins;
            out[dst..dst + self.space_bins]
                .copy_from_slice(&self.probs0[src_base..src_base + self.space_bins]);
        }
        out
    }
}

impl BinModel for TimeShiftModel {
    fn bins(&self) -> usize {
        self.probs0.len()
    }

    fn probs(&self, theta: f64) -> Result<Vec<f64>, InferenceError> {
        Ok(self.rolled(self.shift_bins(theta)?))
    }

    fn dprobs(&self, theta: f64) -> Result<Vec<f64>, InferenceError> {
        let s = self.shift_bins(theta)?;
        let up = self.rolled(s + 1);
        let dn = self.rolled(s - 1);
        Ok(up
            .iter()
            .zip(&dn)
            .map(|(u, d)| (u - d) / (2.0 * self.dt_bin))
            .collect())
    }

    fn d2probs(&self, theta: f64) -> Result<Vec<f64>, InferenceError> {
        let s = self.shift_bins(theta)?;
        let up = self.rolled(s + 1);
        let mid = self.rolled(s);
        let dn = self.rolled(s - 1);
        let h2 = self.dt_bin * self.dt_bin;
        Ok((0..up.len())
            .map(|i| (up[i] - 2.0 * mid[i] + dn[i]) / h2)
            .collect())
    }
}

// ---------------------------------------------------------------------------
// Evidence and discrete Fisher information
// ---------------------------------------------------------------------------

/// Evidence for the hypothesis that `theta + epsilon` produced the counts,
/// relative to `theta`: `sum_j c_j [ln P(j|theta+eps) - ln P(j|theta)]`.
///
/// Counts are real-valued so robust (expectation) counts can be used without
/// rounding.
pub fn evidence_exact(
    counts: &[f64],
    model: &dyn BinModel,
    theta: f64,
    epsilon: f64,
) -> Result<f64, InferenceError> {
    check_alignment(counts, model)?;
    let p0 = model.probs(theta)?;
    let p1 = model.probs(theta + epsilon)?;
    let mut ev = 0.0;
    for (bin, &c) in counts.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        if p1[bin] <= 0.0 {
            return Err(InferenceError::SingularBin {
                bin,
                theta: theta + epsilon,
            });
        }
        if p0[bin] <= 0.0 {
            return Err(InferenceError::SingularBin { bin, theta });
        }
        ev += c * (p1[bin].ln() - p0[bin].ln());
    }
    Ok(ev)
}

/// Second-order expansion of the evidence in `epsilon`:
/// `sum_j c_j { eps P'/P - (eps^2/2) [ (P'/P)^2 - P''/P ] }`.
pub fn evidence_quadratic(
    counts: &[f64],
    model: &dyn BinModel,
    theta: f64,
    epsilon: f64,
) -> Result<f64, InferenceError> {
    check_alignment(counts, model)?;
    let p = model.probs(theta)?;
    let d1 = model.dprobs(theta)?;
    let d2 = model.d2probs(theta)?;
    let mut ev = 0.0;
    for (bin, &c) in counts.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        if p[bin] <= 0.0 {
            return Err(InferenceError::SingularBin { bin, theta });
        }
        let r1 = d1[bin] / p[bin];
        let r2 = d2[bin] / p[bin];
        ev += c * (epsilon * r1 - 0.5 * epsilon * epsilon * (r1 * r1 - r2));
    }
    Ok(ev)
}

/// The coefficient of the epsilon-linear term of the evidence,
/// `sum_j c_j P'_j / P_j`. Vanishes (to rounding) for robust counts.
pub fn evidence_linear_coefficient(
    counts: &[f64],
    model: &dyn BinModel,
    theta: f64,
) -> Result<f64, InferenceError> {
    check_alignment(counts, model)?;
    let p = model.probs(theta)?;
    let d1 = model.dprobs(theta)?;
    let mut acc = 0.0;
    for (bin, &c) in counts.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        if p[bin] <= 0.0 {
            return Err(InferenceError::SingularBin { bin, theta });
        }
        acc += c * d1[bin] / p[bin];
    }
    Ok(acc)
}

/// The robust count assignment `c_j = N P(j|theta)`, kept real-valued.
pub fn robust_counts(
    model: &dyn BinModel,
    theta: f64,
    n: f64,
) -> Result<Vec<f64>, InferenceError> {
    Ok(model.probs(theta)?.into_iter().map(|p| n * p).collect())
}

/// Discrete Fisher information `sum_j (1/P_j) (dP_j/dtheta)^2` over the bins
/// with non-zero probability. A bin with `P = 0` but a non-zero derivative is
/// a singular model.
pub fn fisher_discrete(model: &dyn BinModel, theta: f64) -> Result<f64, InferenceError> {
    let p = model.probs(theta)?;
    let d1 = model.dprobs(theta)?;
    let mut acc = 0.0;
    for bin in 0..p.len() {
        if p[bin] <= 0.0 {
            if d1[bin] != 0.0 {
                return Err(InferenceError::SingularModel { bin });
            }
            continue;
        }
        acc += d1[bin] * d1[bin] / p[bin];
    }
    Ok(acc)
}

fn check_alignment(counts: &[f64], model: &dyn BinModel) -> Result<(), InferenceError> {
    if counts.len() != model.bins() {
        return Err(InferenceError::MisalignedBins {
            counts: counts.len(),
            model: model.bins(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Continuum densities
// ---------------------------------------------------------------------------

/// A parametric probability density over space-time with analytic parameter
/// derivatives.
pub trait SpacetimeDensity: Sync {
    fn eval(&self, x: &FourVector, theta: f64) -> f64;
    fn d_dtheta(&self, x: &FourVector, theta: f64) -> f64;

    /// Analytic proper-time derivative, available when the family depends on
    /// position only through the proper time.
    fn d_dtau(&self, _x: &FourVector, _theta: f64) -> Option<f64> {
        None
    }
}

/// A density over the proper-time line itself.
pub trait ProperTimeDensity: Sync {
    fn eval_tau(&self, tau: f64, theta: f64) -> f64;
    fn d_dtheta_tau(&self, tau: f64, theta: f64) -> f64;
    fn d_dtau_tau(&self, tau: f64, theta: f64) -> f64;
}

/// Lifts a proper-time density to space-time via `tau(x) = sqrt(x·x)/c`.
/// Spacelike points evaluate to zero density.
pub struct TauOnlyDensity<D: ProperTimeDensity> {
    pub family: D,
    pub c: f64,
}

impl<D: ProperTimeDensity> TauOnlyDensity<D> {
    fn tau(&self, x: &FourVector) -> Option<f64> {
        let interval = minkowski_dot(x, x);
        if interval <= 0.0 {
            None
        } else {
            Some(interval.sqrt() / self.c)
        }
    }
}

impl<D: ProperTimeDensity + Sync> SpacetimeDensity for TauOnlyDensity<D> {
    fn eval(&self, x: &FourVector, theta: f64) -> f64 {
        self.tau(x)
            .map_or(0.0, |tau| self.family.eval_tau(tau, theta))
    }

    fn d_dtheta(&self, x: &FourVector, theta: f64) -> f64 {
        self.tau(x)
            .map_or(0.0, |tau| self.family.d_dtheta_tau(tau, theta))
    }

    fn d_dtau(&self, x: &FourVector, theta: f64) -> Option<f64> {
        self.tau(x).map(|tau| self.family.d_dtau_tau(tau, theta))
    }
}

/// Shift-invariant Gaussian location family in the proper time,
/// `g(tau - theta)` with width `sigma`, normalized on the line.
pub struct GaussianTauFamily {
    pub sigma: f64,
}

impl ProperTimeDensity for GaussianTauFamily {
    fn eval_tau(&self, tau: f64, theta: f64) -> f64 {
        let u = (tau - theta) / self.sigma;
        (-0.5 * u * u).exp() / (self.sigma * (2.0 * std::f64::consts::PI).sqrt())
    }

    fn d_dtheta_tau(&self, tau: f64, theta: f64) -> f64 {
        let u = tau - theta;
        self.eval_tau(tau, theta) * u / (self.sigma * self.sigma)
    }

    fn d_dtau_tau(&self, tau: f64, theta: f64) -> f64 {
        -self.d_dtheta_tau(tau, theta)
    }
}

/// Which squared derivative enters the Fisher quadrature: the parameter form
/// or the equivalent proper-time form available for shift-invariant families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FisherForm {
    Theta,
    Tau,
}

/// Continuum Fisher information report. The measure is `c dt d^3r = prod dx`
/// in the grid's `x^0 = ct` coordinates; the absolute value is
/// convention-dependent up to that prefactor choice, which is why the choice
/// is recorded here.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FisherReport {
    pub value: f64,
    pub included_points: usize,
    pub excluded_points: usize,
    pub tau_min: f64,
    pub normalization: f64,
    pub form: FisherForm,
}

/// Midpoint quadrature of `(1/P) (∂P/∂θ)²` (or the tau-form) over the
/// timelike part of the grid box.
///
/// Points inside the forward light cone with `tau(x) <= tau_min` are excluded
/// and counted; the default cutoff is twice the largest grid spacing, which
/// keeps the `1/tau` factor of the gradient identities bounded. The density
/// is re-normalized over the included points before the quadrature, matching
/// the unit-sum convention the cancellation arguments rely on.
pub fn fisher_continuum(
    model: &dyn SpacetimeDensity,
    theta: f64,
    grid: &SpacetimeGrid,
    form: FisherForm,
    tau_min: Option<f64>,
) -> Result<FisherReport, InferenceError> {
    let tau_min = tau_min.unwrap_or(2.0 * grid.max_spacing());
    let cell = grid.cell_volume();
    let n = grid.len();

    let flags: Vec<bool> = exec::map_indexed(n, |lin| {
        let x = grid.coordinate_lin(lin);
        let interval = minkowski_dot(&x, &x);
        x.component(0) > 0.0 && interval > 0.0 && interval.sqrt() > tau_min
    });
    let included: usize = flags.iter().filter(|&&b| b).count();
    if included == 0 {
        return Err(InferenceError::EmptySupport(
            "no timelike grid points above the cutoff".into(),
        ));
    }

    let norm = exec::sum_indexed(n, |lin| {
        if flags[lin] {
            model.eval(&grid.coordinate_lin(lin), theta)
        } else {
            0.0
        }
    }) * cell;
    if !(norm > 0.0) {
        return Err(InferenceError::EmptySupport(format!(
            "density mass over the included points is {norm}"
        )));
    }

    let value = exec::sum_indexed(n, |lin| {
        if !flags[lin] {
            return 0.0;
        }
        let x = grid.coordinate_lin(lin);
        let p = model.eval(&x, theta) / norm;
        if p <= 0.0 {
            return 0.0;
        }
        let d = match form {
            FisherForm::Theta => model.d_dtheta(&x, theta),
            FisherForm::Tau => model.d_dtau(&x, theta).unwrap_or(f64::NAN),
        } / norm;
        d * d / p
    }) * cell;

    if !value.is_finite() {
        return Err(InferenceError::BadInput(
            "tau-form requested but the model provides no analytic tau-derivative".into(),
        ));
    }

    Ok(FisherReport {
        value,
        included_points: included,
        excluded_points: n - included,
        tau_min,
        normalization: norm,
        form,
    })
}

/// Homogeneity defect `P(tau + delta | theta + delta) - P(tau | theta)`;
/// identically zero for a shift-invariant family.
pub fn homogeneity_residual(
    model: &dyn ProperTimeDensity,
    tau: f64,
    theta: f64,
    delta: f64,
) -> f64 {
    model.eval_tau(tau + delta, theta + delta) - model.eval_tau(tau, theta)
}

/// How the space-time gradient of the density is computed for the gradient
/// identity check.
pub enum GradientMode {
    /// Chain rule with the analytic tau-derivative:
    /// `∂^mu P = (dP/dtau) x^mu / (c^2 tau)`.
    Analytic,
    /// Centered differences of the sampled density field.
    FiniteDifference,
}

/// Pointwise residual of `η_{μν} (∂^μP)(∂^νP) - (1/c²)(∂P/∂τ)²`, an identity
/// that holds exactly when the density depends on position only through the
/// proper time. A density with explicit spatial dependence flags the broken
/// assumption by leaving a non-zero residual.
pub struct GradientIdentityReport {
    pub residual: Vec<f64>,
    pub evaluated: Vec<bool>,
    pub excluded_points: usize,
    pub max_abs_residual: f64,
}

pub fn gradient_identity_residual(
    model: &dyn SpacetimeDensity,
    grid: &SpacetimeGrid,
    theta: f64,
    mode: GradientMode,
    tau_min: Option<f64>,
) -> Result<GradientIdentityReport, InferenceError> {
    // grids carry x^0 = ct, so the metric factor c is 1 in these coordinates;
    // tau below is the interval sqrt(x·x) in length units
    let ctau_min = tau_min.unwrap_or(2.0 * grid.max_spacing());
    let n = grid.len();

    let sampled = match mode {
        GradientMode::FiniteDifference => Some(ScalarField::from_fn(grid.clone(), |x| {
            model.eval(x, theta)
        })),
        GradientMode::Analytic => None,
    };

    let mut residual = vec![0.0; n];
    let mut evaluated = vec![false; n];
    let mut excluded = 0usize;
    let mut max_abs = 0.0f64;

    for lin in 0..n {
        let idx = grid.unflatten(lin);
        let x = grid.coordinate(&idx);
        let interval = minkowski_dot(&x, &x);
        let timelike = x.component(0) > 0.0 && interval > 0.0 && interval.sqrt() > ctau_min;
        let interior = grid.periodic() || grid.is_interior(&idx);
        if !timelike || !interior {
            excluded += 1;
            continue;
        }
        let ctau = interval.sqrt();
        let dtau = match model.d_dtau(&x, theta) {
            Some(d) => d,
            None => {
                return Err(InferenceError::BadInput(
                    "gradient identity needs an analytic tau-derivative on the model".into(),
                ))
            }
        };
        let grad_sq = match &sampled {
            Some(field) => {
                let g = crate::spacetime::four_gradient(field, &idx)
                    .map_err(|e| InferenceError::BadInput(e.to_string()))?;
                minkowski_dot(&g, &g)
            }
            None => {
                // ∂^mu P = (dP/dtau) x^mu / (c^2 tau), and c^2 tau = c·ctau
                let scale = dtau / ctau;
                let g = x * scale;
                minkowski_dot(&g, &g)
            }
        };
        let r = grad_sq - dtau * dtau;
        residual[lin] = r;
        evaluated[lin] = true;
        max_abs = max_abs.max(r.abs());
    }

    if excluded == n {
        return Err(InferenceError::EmptySupport(
            "every grid point was excluded".into(),
        ));
    }

    Ok(GradientIdentityReport {
        residual,
        evaluated,
        excluded_points: excluded,
        max_abs_residual: max_abs,
    })
}

/// Evidence/Fisher report row emitted by the analysis pipeline. For models
/// evaluated over a continuum quadrature, `excluded_points` counts the grid
/// points outside the timelike support; bin models leave it at zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvidenceReport {
    pub theta: f64,
    pub epsilon: f64,
    pub ev_exact: f64,
    pub ev_quadratic: f64,
    pub fisher: f64,
    pub linear_coefficient: f64,
    #[serde(default)]
    pub excluded_points: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_exp_family(bins: usize, seed: u64) -> ExpFamilyBinModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeff = |scale: f64| -> Vec<f64> {
            (0..bins).map(|_| scale * (rng.gen::<f64>() - 0.5)).collect()
        };
        let a = coeff(1.0);
        let b = coeff(0.8);
        let c = coeff(0.3);
        ExpFamilyBinModel::new(a, b, c).unwrap()
    }

    #[test]
    fn evidence_exact_examples() {
        let model = TwoBinLinear;
        let counts = [5.0, 5.0];
        assert_eq!(evidence_exact(&counts, &model, 0.5, 0.0).unwrap(), 0.0);
        let ev = evidence_exact(&counts, &model, 0.5, 0.1).unwrap();
        assert!((ev - 5.0 * 0.96f64.ln()).abs() < 1e-12, "got {ev}");
        // linearity in the counts
        let doubled = [10.0, 10.0];
        let ev2 = evidence_exact(&doubled, &model, 0.5, 0.1).unwrap();
        assert!((ev2 - 2.0 * ev).abs() < 1e-12);
    }

    #[test]
    fn singular_bins_carry_the_bin_id() {
        let model = TwoBinLinear;
        let counts = [1.0, 1.0];
        match evidence_exact(&counts, &model, 0.5, 0.5) {
            Err(InferenceError::SingularBin { bin: 1, .. }) => {}
            other => panic!("expected singular bin 1, got {other:?}"),
        }
    }

    #[test]
    fn fisher_discrete_examples() {
        let model = TwoBinLinear;
        let at_quarter = fisher_discrete(&model, 0.25).unwrap();
        assert!((at_quarter - 16.0 / 3.0).abs() < 1e-14);
        assert!((fisher_discrete(&model, 0.5).unwrap() - 4.0).abs() < 1e-14);

        // the non-informative experiment
        let flat =
            ExpFamilyBinModel::new(vec![0.3, -0.2, 0.1], vec![0.0; 3], vec![0.0; 3]).unwrap();
        assert_eq!(fisher_discrete(&flat, 1.3).unwrap(), 0.0);
        // and the converse: theta-dependence shows up as positive information
        let informative = random_exp_family(5, 3);
        assert!(fisher_discrete(&informative, 0.2).unwrap() > 1e-6);
    }

    #[test]
    fn robust_counts_cancel_the_linear_term_exactly() {
        for seed in 0..10 {
            let bins = 2 + (seed as usize * 7) % 63;
            let model = random_exp_family(bins, seed);
            let theta = 0.4;
            let n = 1e6;
            let counts = robust_counts(&model, theta, n).unwrap();
            assert!((counts.iter().sum::<f64>() - n).abs() < 1e-6 * n);

            let lin = evidence_linear_coefficient(&counts, &model, theta).unwrap();
            assert!(lin.abs() <= 1e-10 * n, "linear coefficient {lin}");

            let eps = 0.05;
            let quad = evidence_quadratic(&counts, &model, theta, eps).unwrap();
            let fisher = fisher_discrete(&model, theta).unwrap();
            let expected = -0.5 * eps * eps * n * fisher;
            assert!(
                (quad - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                "quadratic evidence {quad} vs -eps^2 N I_F / 2 = {expected}"
            );
        }
    }

    #[test]
    fn evidence_concavity_at_the_robust_point() {
        let model = random_exp_family(12, 5);
        let theta = 0.1;
        let counts = robust_counts(&model, theta, 1e5).unwrap();
        for eps in [0.1, 0.05, 0.025] {
            let sym = evidence_exact(&counts, &model, theta, eps).unwrap()
                + evidence_exact(&counts, &model, theta, -eps).unwrap();
            assert!(sym <= 1e-6, "Ev(eps)+Ev(-eps) = {sym} at eps = {eps}");
        }
    }

    #[test]
    fn quadratic_expansion_has_cubic_remainder() {
        // generic (non-robust) counts: |exact - quadratic| ~ C eps^3, fitted
        // over the fixed three-point sweep
        let model = random_exp_family(8, 9);
        let theta = 0.3;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let counts: Vec<f64> = (0..8).map(|_| rng.gen_range(1.0..50.0)).collect();
        let epsilons = [0.1, 0.05, 0.025];
        let gaps: Vec<f64> = epsilons
            .iter()
            .map(|&e| {
                (evidence_exact(&counts, &model, theta, e).unwrap()
                    - evidence_quadratic(&counts, &model, theta, e).unwrap())
                .abs()
            })
            .collect();
        let xs: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
        let ys: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
        let xm = xs.iter().sum::<f64>() / 3.0;
        let ym = ys.iter().sum::<f64>() / 3.0;
        let slope = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - xm) * (y - ym))
            .sum::<f64>()
            / xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>();
        assert!(
            (2.6..3.4).contains(&slope),
            "remainder order {slope}, gaps {gaps:?}"
        );
    }

    #[test]
    fn time_shift_model_rolls_and_differentiates() {
        let reference = vec![0.1, 0.2, 0.3, 0.15, 0.15, 0.1];
        let model = TimeShiftModel::new(reference, 3, 0.5, 0.0).unwrap();
        let p0 = model.probs(0.0).unwrap();
        assert!((p0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // a one-bin shift moves time row 0 onto time row 1
        let p1 = model.probs(0.5).unwrap();
        assert_eq!(p1[2], p0[0]);
        assert_eq!(p1[3], p0[1]);
        // derivatives sum to zero by periodicity of the roll
        let d = model.dprobs(0.0).unwrap();
        assert!(d.iter().sum::<f64>().abs() < 1e-15);
        let d2 = model.d2probs(0.25).unwrap_err();
        let _ = d2; // incommensurate shift is rejected
        assert!(model.probs(0.31).is_err());
    }

    fn tau_box(center: f64, half_tau: f64, half_x: f64, n0: usize, n1: usize) -> SpacetimeGrid {
        SpacetimeGrid::dim2(
            [n0, n1],
            [2.0 * half_tau, 2.0 * half_x],
            [center - half_tau, -half_x],
            false,
        )
        .unwrap()
    }

    #[test]
    fn gaussian_location_family_has_fisher_one_over_sigma_squared() {
        let sigma = 0.5;
        let theta = 10.0;
        let model = TauOnlyDensity {
            family: GaussianTauFamily { sigma },
            c: 1.0,
        };
        let grid = tau_box(theta, 5.0 * sigma, 0.05, 512, 8);
        let report = fisher_continuum(&model, theta, &grid, FisherForm::Theta, None).unwrap();
        assert_eq!(report.excluded_points, 0);
        assert!(
            (report.value - 4.0).abs() < 1e-3,
            "I_F = {} (expected 4.0)",
            report.value
        );
    }

    #[test]
    fn theta_independent_density_has_zero_information() {
        struct Flat;
        impl SpacetimeDensity for Flat {
            fn eval(&self, _x: &FourVector, _theta: f64) -> f64 {
                1.0
            }
            fn d_dtheta(&self, _x: &FourVector, _theta: f64) -> f64 {
                0.0
            }
        }
        let grid = tau_box(5.0, 1.0, 0.5, 32, 8);
        let report = fisher_continuum(&Flat, 0.0, &grid, FisherForm::Theta, None).unwrap();
        assert_eq!(report.value, 0.0);
    }

    #[test]
    fn fisher_quadrature_error_is_second_order() {
        // a hard ±2σ truncation leaves non-zero boundary derivatives, so the
        // midpoint rule shows its plain h² behaviour; the Richardson ratio
        // (I(h)-I(h/2)) / (I(h/2)-I(h/4)) ≈ 4 needs no exact reference value
        let sigma = 0.5;
        let theta = 10.0;
        let model = TauOnlyDensity {
            family: GaussianTauFamily { sigma },
            c: 1.0,
        };
        let value = |n0: usize| {
            let grid = tau_box(theta, 2.0 * sigma, 0.05, n0, 8);
            fisher_continuum(&model, theta, &grid, FisherForm::Theta, None)
                .unwrap()
                .value
        };
        let (i1, i2, i3) = (value(16), value(32), value(64));
        let ratio = (i1 - i2) / (i2 - i3);
        assert!(
            (2.8..5.5).contains(&ratio),
            "quadrature refinement ratio {ratio} ({i1}, {i2}, {i3})"
        );
    }

    #[test]
    fn spacelike_box_has_empty_support() {
        let model = TauOnlyDensity {
            family: GaussianTauFamily { sigma: 0.5 },
            c: 1.0,
        };
        // box entirely outside the forward light cone
        let grid =
            SpacetimeGrid::dim2([8, 8], [1.0, 1.0], [0.0, 5.0], false).unwrap();
        assert!(matches!(
            fisher_continuum(&model, 1.0, &grid, FisherForm::Theta, None),
            Err(InferenceError::EmptySupport(_))
        ));
    }

    #[test]
    fn tau_form_matches_theta_form_for_shift_invariant_families() {
        let model = TauOnlyDensity {
            family: GaussianTauFamily { sigma: 0.5 },
            c: 1.0,
        };
        let grid = tau_box(10.0, 2.5, 0.05, 256, 8);
        let a = fisher_continuum(&model, 10.0, &grid, FisherForm::Theta, None).unwrap();
        let b = fisher_continuum(&model, 10.0, &grid, FisherForm::Tau, None).unwrap();
        assert!(
            (a.value - b.value).abs() <= 1e-12 * a.value.abs(),
            "{} vs {}",
            a.value,
            b.value
        );
    }

    #[test]
    fn shift_invariance_ties_the_two_derivatives() {
        let fam = GaussianTauFamily { sigma: 0.7 };
        for i in 0..20 {
            let tau = 1.0 + 0.3 * i as f64;
            let theta = 2.0;
            assert!(homogeneity_residual(&fam, tau, theta, 0.0).abs() < 1e-15);
            assert!(homogeneity_residual(&fam, tau, theta, 0.37).abs() < 1e-12);
            let d_sum = fam.d_dtau_tau(tau, theta) + fam.d_dtheta_tau(tau, theta);
            assert!(d_sum.abs() < 1e-9);
        }
    }

    #[test]
    fn non_invariant_family_has_nonzero_homogeneity_residual() {
        // P ∝ tau · g(tau - theta): deliberately breaks the shift symmetry
        struct Scaled(GaussianTauFamily);
        impl ProperTimeDensity for Scaled {
            fn eval_tau(&self, tau: f64, theta: f64) -> f64 {
                tau * self.0.eval_tau(tau, theta)
            }
            fn d_dtheta_tau(&self, tau: f64, theta: f64) -> f64 {
                tau * self.0.d_dtheta_tau(tau, theta)
            }
            fn d_dtau_tau(&self, tau: f64, theta: f64) -> f64 {
                self.0.eval_tau(tau, theta) + tau * self.0.d_dtau_tau(tau, theta)
            }
        }
        let fam = Scaled(GaussianTauFamily { sigma: 0.7 });
        let (tau, theta, delta) = (3.0, 2.8, 0.4);
        let r = homogeneity_residual(&fam, tau, theta, delta);
        let direct = fam.eval_tau(tau + delta, theta + delta) - fam.eval_tau(tau, theta);
        assert!(r.abs() > 1e-6);
        assert_eq!(r, direct);
    }

    #[test]
    fn gradient_identity_holds_analytically_and_converges_fd() {
        let model = TauOnlyDensity {
            family: GaussianTauFamily { sigma: 0.5 },
            c: 1.0,
        };
        let grid = tau_box(10.0, 1.5, 0.3, 64, 16);
        let analytic =
            gradient_identity_residual(&model, &grid, 10.0, GradientMode::Analytic, None).unwrap();
        assert!(
            analytic.max_abs_residual < 1e-12,
            "analytic residual {}",
            analytic.max_abs_residual
        );

        let fd_max = |n: usize| {
            let grid = tau_box(10.0, 1.5, 0.3, n, n / 4);
            gradient_identity_residual(&model, &grid, 10.0, GradientMode::FiniteDifference, None)
                .unwrap()
                .max_abs_residual
        };
        let (e1, e2) = (fd_max(64), fd_max(128));
        let ratio = e1 / e2;
        assert!(
            (3.0..5.2).contains(&ratio),
            "FD residual ratio {ratio} ({e1} -> {e2})"
        );
    }

    #[test]
    fn explicit_spatial_dependence_is_flagged_by_the_identity() {
        struct Violator;
        impl SpacetimeDensity for Violator {
            fn eval(&self, x: &FourVector, _theta: f64) -> f64 {
                1.0 + 0.3 * (x.component(1)).sin()
            }
            fn d_dtheta(&self, _x: &FourVector, _theta: f64) -> f64 {
                0.0
            }
            fn d_dtau(&self, _x: &FourVector, _theta: f64) -> Option<f64> {
                // claims to be tau-only with no tau-dependence
                Some(0.0)
            }
        }
        let grid = tau_box(10.0, 1.5, 0.5, 48, 16);
        let report =
            gradient_identity_residual(&Violator, &grid, 0.0, GradientMode::FiniteDifference, None)
                .unwrap();
        assert!(report.max_abs_residual > 1e-3);
    }
}
