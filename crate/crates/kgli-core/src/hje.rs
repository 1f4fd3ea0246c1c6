//! Four-velocity fields, the antisymmetric field-strength tensor, gauge
//! shifts, worldline integration, and relativistic Hamilton-Jacobi residuals.
//!
//! Index conventions: four-vector fields store contravariant components, and
//! `∂^mu` means the contravariant gradient `(∂_0, -∂_1, -∂_2, -∂_3)`. On
//! non-periodic grids the difference operators exist only on interior points;
//! boundary points keep their input values and are counted as excluded.

use thiserror::Error;

use crate::exec;
use crate::spacetime::{
    coordinate_gradient, four_gradient, minkowski_dot, FourVector, FourVectorField,
    PhysicalParams, ScalarField, SpacetimeError, SpacetimeGrid,
};

#[derive(Debug, Error)]
pub enum HjeError {
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
    #[error("worldline step {step}: velocity field undefined at ({x:?})")]
    FieldUndefined { step: usize, x: [f64; 4] },
    #[error("{0}")]
    BadInput(String),
}

/// Upper-triangle index pairs of the antisymmetric tensor, in storage order.
const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Antisymmetric tensor `F^{mu nu}` per grid point. Only the six independent
/// upper-triangle components are stored, so `F^{mu nu} = -F^{nu mu}` holds by
/// construction.
pub struct FieldStrength {
    grid: SpacetimeGrid,
    comps: Vec<[f64; 6]>,
    evaluated: Vec<bool>,
    excluded_points: usize,
}

impl FieldStrength {
    pub fn grid(&self) -> &SpacetimeGrid {
        &self.grid
    }

    pub fn excluded_points(&self) -> usize {
        self.excluded_points
    }

    pub fn is_evaluated(&self, lin: usize) -> bool {
        self.evaluated[lin]
    }

    pub fn component(&self, lin: usize, mu: usize, nu: usize) -> f64 {
        if mu == nu {
            return 0.0;
        }
        let (sign, a, b) = if mu < nu { (1.0, mu, nu) } else { (-1.0, nu, mu) };
        let slot = PAIRS.iter().position(|&p| p == (a, b)).unwrap();
        sign * self.comps[lin][slot]
    }

    pub fn tensor(&self, lin: usize) -> [[f64; 4]; 4] {
        let mut t = [[0.0; 4]; 4];
        for mu in 0..4 {
            for nu in 0..4 {
                t[mu][nu] = self.component(lin, mu, nu);
            }
        }
        t
    }

    /// Largest `|F^{mu nu}|` over evaluated points.
    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .zip(&self.evaluated)
            .filter(|(_, &e)| e)
            .flat_map(|(c, _)| c.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest componentwise difference over points evaluated in both.
    pub fn max_difference(&self, other: &FieldStrength) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .zip(self.evaluated.iter().zip(&other.evaluated))
            .filter(|(_, (&a, &b))| a && b)
            .flat_map(|((ca, cb), _)| ca.iter().zip(cb.iter()).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max)
    }
}

fn component_fields(u: &FourVectorField) -> [ScalarField; 4] {
    std::array::from_fn(|mu| {
        ScalarField::from_values(
            u.grid().clone(),
            u.values().iter().map(|v| v.component(mu)).collect(),
        )
        .expect("component field inherits the grid")
    })
}

/// `F^{mu nu} = ∂^mu U^nu - ∂^nu U^mu` by centered differences of the stored
/// contravariant components.
pub fn field_strength(u: &FourVectorField) -> Result<FieldStrength, HjeError> {
    let grid = u.grid().clone();
    let comps_u = component_fields(u);
    let n = grid.len();
    let mut comps = vec![[0.0; 6]; n];
    let mut evaluated = vec![false; n];
    let mut excluded = 0usize;
    for lin in 0..n {
        let idx = grid.unflatten(lin);
        if !grid.periodic() && !grid.is_interior(&idx) {
            excluded += 1;
            continue;
        }
        let grads: [FourVector; 4] =
            std::array::from_fn(|nu| four_gradient(&comps_u[nu], &idx).expect("stencil point"));
        for (slot, &(mu, nu)) in PAIRS.iter().enumerate() {
            comps[lin][slot] = grads[nu].component(mu) - grads[mu].component(nu);
        }
        evaluated[lin] = true;
    }
    Ok(FieldStrength {
        grid,
        comps,
        evaluated,
        excluded_points: excluded,
    })
}

/// Norm-constraint diagnostics for a candidate four-velocity field: the
/// pointwise defect `U·U - c^2` everywhere, and `max_mu |∂^mu(U·U)|` on
/// stencil points (any derivative of a constant norm must vanish).
pub struct NormConstraintReport {
    pub norm_residual: ScalarField,
    pub derivative_residual: ScalarField,
    pub max_norm_residual: f64,
    pub max_derivative_residual: f64,
}

pub fn norm_constraint_residual(
    u: &FourVectorField,
    c: f64,
) -> Result<NormConstraintReport, HjeError> {
    let grid = u.grid().clone();
    let norm_sq = ScalarField::from_values(
        grid.clone(),
        u.values().iter().map(|v| minkowski_dot(v, v)).collect(),
    )
    .expect("same grid");

    let norm_residual = ScalarField::from_values(
        grid.clone(),
        norm_sq.values().iter().map(|&s| s - c * c).collect(),
    )
    .expect("same grid");

    let mut deriv = vec![0.0; grid.len()];
    for &lin in grid.stencil_points().iter() {
        let idx = grid.unflatten(lin);
        let g = four_gradient(&norm_sq, &idx)?;
        deriv[lin] = (0..4).map(|mu| g.component(mu).abs()).fold(0.0, f64::max);
    }
    let derivative_residual = ScalarField::from_values(grid, deriv).expect("same grid");

    let max_norm_residual = norm_residual
        .values()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let max_derivative_residual = derivative_residual
        .values()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));

    Ok(NormConstraintReport {
        norm_residual,
        derivative_residual,
        max_norm_residual,
        max_derivative_residual,
    })
}

/// A four-velocity field evaluable at arbitrary positions. Grid-backed
/// fields interpolate multilinearly; analytic fields evaluate a closure
/// (used where interpolation error would mask an oracle).
pub trait VelocityField {
    /// `U(x)`, or `None` where the field is undefined (outside a
    /// non-periodic box).
    fn velocity(&self, x: &FourVector) -> Option<FourVector>;
}

pub struct AnalyticVelocity<F: Fn(&FourVector) -> FourVector>(pub F);

impl<F: Fn(&FourVector) -> FourVector> VelocityField for AnalyticVelocity<F> {
    fn velocity(&self, x: &FourVector) -> Option<FourVector> {
        Some((self.0)(x))
    }
}

impl VelocityField for FourVectorField {
    fn velocity(&self, x: &FourVector) -> Option<FourVector> {
        let grid = self.grid();
        let axes = grid.axes();
        // fractional cell-center index per axis
        let mut base = [0isize; 4];
        let mut frac = [0.0f64; 4];
        for a in 0..axes {
            let s = (x.component(a) - grid.origin()[a]) / grid.spacing(a) - 0.5;
            let i0 = s.floor();
            base[a] = i0 as isize;
            frac[a] = s - i0;
            if !grid.periodic() {
                let n = grid.points()[a] as isize;
                if base[a] < 0 || base[a] + 1 >= n {
                    return None;
                }
            }
        }
        let mut out = [0.0f64; 4];
        let mut idx = vec![0usize; axes];
        for corner in 0..(1usize << axes) {
            let mut weight = 1.0;
            for a in 0..axes {
                let bit = (corner >> a) & 1;
                weight *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                let n = grid.points()[a] as isize;
                idx[a] = (base[a] + bit as isize).rem_euclid(n) as usize;
            }
            let v = self.at(grid.flatten(&idx));
            for mu in 0..4 {
                out[mu] += weight * v.component(mu);
            }
        }
        Some(FourVector(out))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WorldlineSample {
    pub tau: f64,
    pub x: FourVector,
    /// `dx/dtau = -U(x)` at the sample.
    pub u: FourVector,
}

/// A proper-time-parametrized trajectory with its norm diagnostic.
pub struct Worldline {
    pub samples: Vec<WorldlineSample>,
    /// True when the trajectory left the field's domain before `tau_max`.
    pub truncated: bool,
    /// `max |u·u - c^2|` over the samples.
    pub max_norm_drift: f64,
}

/// Classic fourth-order Runge-Kutta integration of `dx/dtau = -U(x)`.
///
/// Leaving the domain truncates the worldline and flags the partial result
/// rather than failing.
pub fn integrate_worldline(
    field: &dyn VelocityField,
    x0: FourVector,
    tau_max: f64,
    steps: usize,
    c: f64,
) -> Result<Worldline, HjeError> {
    if steps == 0 || !(tau_max > 0.0) {
        return Err(HjeError::BadInput("need steps >= 1 and tau_max > 0".into()));
    }
    let h = tau_max / steps as f64;
    let deriv = |x: FourVector| field.velocity(&x).map(|u| u * -1.0);

    let mut samples = Vec::with_capacity(steps + 1);
    let mut truncated = false;
    let mut drift = 0.0f64;
    let mut x = x0;
    for step in 0..=steps {
        let u = match deriv(x) {
            Some(u) => u,
            None => {
                truncated = true;
                break;
            }
        };
        drift = drift.max((minkowski_dot(&u, &u) - c * c).abs());
        samples.push(WorldlineSample {
            tau: step as f64 * h,
            x,
            u,
        });
        if step == steps {
            break;
        }
        let k1 = u;
        let step_result = (|| {
            let k2 = deriv(x + k1 * (h / 2.0))?;
            let k3 = deriv(x + k2 * (h / 2.0))?;
            let k4 = deriv(x + k3 * h)?;
            Some(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
        })();
        match step_result {
            Some(next) => x = next,
            None => {
                truncated = true;
                break;
            }
        }
    }
    if samples.is_empty() {
        return Err(HjeError::FieldUndefined { step: 0, x: x0.0 });
    }
    Ok(Worldline {
        samples,
        truncated,
        max_norm_drift: drift,
    })
}

/// Gauge shift `A = U + ∂S` with the discrete contravariant gradient. On
/// non-periodic grids the boundary ring keeps `A = U` and is counted.
pub fn gauge_shift(
    u: &FourVectorField,
    s: &ScalarField,
) -> Result<(FourVectorField, usize), HjeError> {
    u.grid().assert_same(s.grid())?;
    let grid = u.grid().clone();
    let n = grid.len();
    let mut values: Vec<FourVector> = u.values().to_vec();
    let mut excluded = 0usize;
    for lin in 0..n {
        let idx = grid.unflatten(lin);
        if !grid.periodic() && !grid.is_interior(&idx) {
            excluded += 1;
            continue;
        }
        let grad = four_gradient(s, &idx)?;
        values[lin] = values[lin] + grad;
    }
    Ok((
        FourVectorField::from_values(grid, values).expect("same grid"),
        excluded,
    ))
}

/// Which printed form of the Hamilton-Jacobi equation a residual follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SConvention {
    /// `(∂S - A)^2 - c^2` with `S` in per-mass units and `A` a four-vector
    /// with velocity units.
    PerMass,
    /// `(∂S/∂ct - qΦ/c)^2 - Σ_i (∂S/∂x^i + q A_i/c)^2 - m^2 c^2` with `S` an
    /// action and the potential stored as `(Φ, A_x, A_y, A_z)`.
    Physical,
}

/// A scalar action field together with its unit convention.
pub struct ActionField {
    pub field: ScalarField,
    pub convention: SConvention,
}

pub struct HjeReport {
    pub residual: ScalarField,
    pub evaluated: Vec<bool>,
    pub excluded_points: usize,
    pub max_abs_residual: f64,
}

fn hje_kernel(grad_s: &[f64; 4], w: &FourVector, coupling: f64, constant: f64) -> f64 {
    let time = grad_s[0] - coupling * w.component(0);
    let mut space = 0.0;
    for i in 1..4 {
        let v = grad_s[i] + coupling * w.component(i);
        space += v * v;
    }
    time * time - space - constant
}

fn convention_factors(convention: SConvention, params: &PhysicalParams) -> (f64, f64) {
    match convention {
        SConvention::PerMass => (1.0, params.c * params.c),
        SConvention::Physical => {
            let mc = params.m * params.c;
            (params.q / params.c, mc * mc)
        }
    }
}

/// Pointwise Hamilton-Jacobi residual of a sampled action field against a
/// sampled potential, by centered differences. The residual is `LHS - RHS`
/// with the equation arranged as time term minus space terms minus the
/// constant, exactly as the convention's printed form.
pub fn hje_residual(
    action: &ActionField,
    potential: &FourVectorField,
    params: &PhysicalParams,
) -> Result<HjeReport, HjeError> {
    action.field.grid().assert_same(potential.grid())?;
    let grid = action.field.grid().clone();
    let (coupling, constant) = convention_factors(action.convention, params);
    let n = grid.len();
    let mut residual = vec![0.0; n];
    let mut evaluated = vec![false; n];
    let mut excluded = 0usize;
    for lin in 0..n {
        let idx = grid.unflatten(lin);
        if !grid.periodic() && !grid.is_interior(&idx) {
            excluded += 1;
            continue;
        }
        let grad = coordinate_gradient(&action.field, &idx)?;
        residual[lin] = hje_kernel(&grad, potential.at(lin), coupling, constant);
        evaluated[lin] = true;
    }
    let max_abs = residual.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(HjeReport {
        residual: ScalarField::from_values(grid, residual).expect("same grid"),
        evaluated,
        excluded_points: excluded,
        max_abs_residual: max_abs,
    })
}

/// Same residual with analytically supplied derivatives, sampled on a grid.
/// `s_grad` returns the plain coordinate partials of the action.
pub fn hje_residual_analytic(
    s_grad: &(dyn Fn(&FourVector) -> [f64; 4] + Sync),
    potential: &(dyn Fn(&FourVector) -> FourVector + Sync),
    convention: SConvention,
    params: &PhysicalParams,
    grid: &SpacetimeGrid,
) -> ScalarField {
    let (coupling, constant) = convention_factors(convention, params);
    let values = exec::map_indexed(grid.len(), |lin| {
        let x = grid.coordinate_lin(lin);
        hje_kernel(&s_grad(&x), &potential(&x), coupling, constant)
    });
    ScalarField::from_values(grid.clone(), values).expect("same grid")
}
