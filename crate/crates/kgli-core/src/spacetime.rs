//! Minkowski-space primitives shared by every other module: four-vectors,
//! physical parameters, uniform space-time grids, fields sampled on them, and
//! second-order centered difference operators.
//!
//! Conventions used throughout the crate:
//!
//! * metric signature `(+,-,-,-)`, i.e. `METRIC = diag(1,-1,-1,-1)`;
//! * coordinates are `x^0 = ct, x^1, x^2, x^3`, all in units of length;
//! * grids are uniform per axis and cell-centered: point `i` of an axis sits
//!   at `origin + (i + 1/2) * spacing`, so a plain sum of point values times
//!   the cell volume is the midpoint quadrature rule;
//! * a grid is either periodic on every axis or interior-only; centered
//!   stencils never fall back to one-sided differences.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;

/// Minkowski metric diagonal, signature `(+,-,-,-)`.
pub const METRIC: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

#[derive(Debug, Error)]
pub enum SpacetimeError {
    #[error("spacelike interval: x·x = {interval} < 0 at event ({x:?})")]
    SpacelikeInterval { x: [f64; 4], interval: f64 },
    #[error("centered stencil needs an interior point: index {index:?} touches the boundary of a non-periodic grid")]
    BoundaryPoint { index: Vec<usize> },
    #[error("grid axis {axis}: {reason}")]
    BadGridAxis { axis: usize, reason: String },
    #[error("grids are incompatible: {0}")]
    GridMismatch(String),
    #[error("{0}")]
    BadParameter(String),
}

/// A space-time location or displacement, components `[x^0 = ct, x^1, x^2, x^3]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub fn new(x0: f64, x1: f64, x2: f64, x3: f64) -> Self {
        FourVector([x0, x1, x2, x3])
    }

    pub fn zero() -> Self {
        FourVector([0.0; 4])
    }

    pub fn component(&self, mu: usize) -> f64 {
        self.0[mu]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl std::ops::Add for FourVector {
    type Output = FourVector;
    fn add(self, rhs: FourVector) -> FourVector {
        FourVector(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl std::ops::Sub for FourVector {
    type Output = FourVector;
    fn sub(self, rhs: FourVector) -> FourVector {
        FourVector(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl std::ops::Mul<f64> for FourVector {
    type Output = FourVector;
    fn mul(self, s: f64) -> FourVector {
        FourVector(std::array::from_fn(|i| self.0[i] * s))
    }
}

/// Minkowski inner product `a^0 b^0 - a^1 b^1 - a^2 b^2 - a^3 b^3` of two
/// contravariant four-vectors.
pub fn minkowski_dot(a: &FourVector, b: &FourVector) -> f64 {
    a.0[0] * b.0[0] - a.0[1] * b.0[1] - a.0[2] * b.0[2] - a.0[3] * b.0[3]
}

/// Proper time of a timelike (or lightlike) event relative to the origin,
/// `tau = sqrt(x·x)/c`. Spacelike input is a domain error identifying the
/// offending event.
pub fn proper_time(x: &FourVector, c: f64) -> Result<f64, SpacetimeError> {
    let interval = minkowski_dot(x, x);
    if interval < 0.0 {
        return Err(SpacetimeError::SpacelikeInterval { x: x.0, interval });
    }
    Ok(interval.sqrt() / c)
}

/// Hyperbolic rotation by `rapidity` in the `(0, axis)` plane, `axis` in `1..=3`.
///
/// Sign convention: `boost((1,0,0,0), eta, 1) = (cosh eta, sinh eta, 0, 0)`.
pub fn boost(x: &FourVector, rapidity: f64, axis: usize) -> FourVector {
    assert!((1..=3).contains(&axis), "boost axis must be 1..=3");
    let (s, c) = (rapidity.sinh(), rapidity.cosh());
    let mut out = *x;
    out.0[0] = c * x.0[0] + s * x.0[axis];
    out.0[axis] = s * x.0[0] + c * x.0[axis];
    out
}

/// Physical constants of a run. The weighting factor of the variational
/// functionals is tied to these by `lambda = 4 m^2 / hbar^2`; it is computed
/// from the ratio `m/hbar` so that rescaling `(hbar, q, m)` by a common
/// power of two leaves it bit-identical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub c: f64,
    pub hbar: f64,
    pub m: f64,
    pub q: f64,
}

impl Default for PhysicalParams {
    /// Natural desk units: `c = hbar = m = 1`, `q = 0`.
    fn default() -> Self {
        PhysicalParams {
            c: 1.0,
            hbar: 1.0,
            m: 1.0,
            q: 0.0,
        }
    }
}

impl PhysicalParams {
    pub fn new(c: f64, hbar: f64, m: f64, q: f64) -> Result<Self, SpacetimeError> {
        if !(c > 0.0 && hbar > 0.0 && m > 0.0) {
            return Err(SpacetimeError::BadParameter(format!(
                "c, hbar, m must be positive (got c={c}, hbar={hbar}, m={m})"
            )));
        }
        Ok(PhysicalParams { c, hbar, m, q })
    }

    /// `m / hbar`.
    pub fn mass_ratio(&self) -> f64 {
        self.m / self.hbar
    }

    /// `q / hbar`.
    pub fn charge_ratio(&self) -> f64 {
        self.q / self.hbar
    }

    /// `lambda = 4 m^2 / hbar^2`.
    pub fn lambda(&self) -> f64 {
        let r = self.mass_ratio();
        4.0 * r * r
    }
}

/// Uniform cell-centered discretization of a finite space-time box with one
/// (required) or three (optional) spatial dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeGrid {
    /// Number of spatial dimensions, 1 or 3. Axis count is `dims + 1`.
    dims: usize,
    /// Samples per axis, each at least 4.
    points: Vec<usize>,
    /// Box length per axis (units of length; axis 0 is `ct`).
    extents: Vec<f64>,
    /// Lower corner of the box per axis.
    origin: Vec<f64>,
    /// Periodic wrap on every axis, or interior-only stencils.
    periodic: bool,
}

impl SpacetimeGrid {
    pub fn new(
        dims: usize,
        points: Vec<usize>,
        extents: Vec<f64>,
        origin: Vec<f64>,
        periodic: bool,
    ) -> Result<Self, SpacetimeError> {
        if dims != 1 && dims != 3 {
            return Err(SpacetimeError::BadParameter(format!(
                "grid needs 1 or 3 spatial dimensions, got {dims}"
            )));
        }
        let axes = dims + 1;
        if points.len() != axes || extents.len() != axes || origin.len() != axes {
            return Err(SpacetimeError::BadParameter(format!(
                "expected {axes} axes of points/extents/origin"
            )));
        }
        for a in 0..axes {
            if points[a] < 4 {
                return Err(SpacetimeError::BadGridAxis {
                    axis: a,
                    reason: format!("needs at least 4 points, got {}", points[a]),
                });
            }
            if !(extents[a] > 0.0 && extents[a].is_finite()) {
                return Err(SpacetimeError::BadGridAxis {
                    axis: a,
                    reason: format!("extent must be positive and finite, got {}", extents[a]),
                });
            }
            if !origin[a].is_finite() {
                return Err(SpacetimeError::BadGridAxis {
                    axis: a,
                    reason: "origin must be finite".into(),
                });
            }
        }
        Ok(SpacetimeGrid {
            dims,
            points,
            extents,
            origin,
            periodic,
        })
    }

    /// 1+1D box `[origin0, origin0+l0] x [origin1, origin1+l1]`.
    pub fn dim2(
        points: [usize; 2],
        extents: [f64; 2],
        origin: [f64; 2],
        periodic: bool,
    ) -> Result<Self, SpacetimeError> {
        SpacetimeGrid::new(
            1,
            points.to_vec(),
            extents.to_vec(),
            origin.to_vec(),
            periodic,
        )
    }

    pub fn spatial_dims(&self) -> usize {
        self.dims
    }

    pub fn axes(&self) -> usize {
        self.dims + 1
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extents[axis] / self.points[axis] as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.axes()).map(|a| self.spacing(a)).collect()
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.axes()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    /// Volume of one cell, `prod_a spacing(a)`. In 1+1D this is the
    /// `dx^0 dx^1 = c dt dx` measure element.
    pub fn cell_volume(&self) -> f64 {
        (0..self.axes()).map(|a| self.spacing(a)).product()
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lexicographic linear index of a multi-index.
    pub fn flatten(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.axes());
        let mut lin = 0;
        for a in 0..self.axes() {
            debug_assert!(idx[a] < self.points[a]);
            lin = lin * self.points[a] + idx[a];
        }
        lin
    }

    pub fn unflatten(&self, mut lin: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes()];
        for a in (0..self.axes()).rev() {
            idx[a] = lin % self.points[a];
            lin /= self.points[a];
        }
        idx
    }

    /// Cell-center coordinate of a grid point; absent spatial axes are 0.
    pub fn coordinate(&self, idx: &[usize]) -> FourVector {
        let mut x = [0.0; 4];
        for a in 0..self.axes() {
            x[a] = self.origin[a] + (idx[a] as f64 + 0.5) * self.spacing(a);
        }
        FourVector(x)
    }

    pub fn coordinate_lin(&self, lin: usize) -> FourVector {
        self.coordinate(&self.unflatten(lin))
    }

    pub fn is_interior(&self, idx: &[usize]) -> bool {
        (0..self.axes()).all(|a| idx[a] >= 1 && idx[a] + 1 < self.points[a])
    }

    /// Linear index of the neighbor one step along `axis`; wraps when the
    /// grid is periodic, errors on the boundary otherwise.
    fn neighbor(&self, idx: &[usize], axis: usize, step: isize) -> Result<usize, SpacetimeError> {
        let n = self.points[axis] as isize;
        let raw = idx[axis] as isize + step;
        let wrapped = if self.periodic {
            raw.rem_euclid(n)
        } else if (0..n).contains(&raw) {
            raw
        } else {
            return Err(SpacetimeError::BoundaryPoint {
                index: idx.to_vec(),
            });
        };
        let mut nb = idx.to_vec();
        nb[axis] = wrapped as usize;
        Ok(self.flatten(&nb))
    }

    pub fn assert_same(&self, other: &SpacetimeGrid) -> Result<(), SpacetimeError> {
        if self != other {
            return Err(SpacetimeError::GridMismatch(format!(
                "{:?} vs {:?}",
                self.points, other.points
            )));
        }
        Ok(())
    }

    /// Linear indices of the interior points (all of them when periodic).
    pub fn stencil_points(&self) -> Vec<usize> {
        if self.periodic {
            (0..self.len()).collect()
        } else {
            (0..self.len())
                .filter(|&lin| self.is_interior(&self.unflatten(lin)))
                .collect()
        }
    }
}

/// Values of type `T` sampled on the cell centers of a [`SpacetimeGrid`],
/// stored in lexicographic index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: SpacetimeGrid,
    values: Vec<T>,
}

pub type ScalarField = Field<f64>;
pub type ComplexField = Field<Complex64>;
pub type FourVectorField = Field<FourVector>;

impl<T: Clone> Field<T> {
    pub fn from_values(grid: SpacetimeGrid, values: Vec<T>) -> Result<Self, SpacetimeError> {
        if values.len() != grid.len() {
            return Err(SpacetimeError::GridMismatch(format!(
                "field has {} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn constant(grid: SpacetimeGrid, value: T) -> Self {
        let n = grid.len();
        Field {
            grid,
            values: vec![value; n],
        }
    }

    pub fn grid(&self) -> &SpacetimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn at(&self, lin: usize) -> &T {
        &self.values[lin]
    }
}

impl<T: Clone + Send> Field<T> {
    /// Samples `f` at every cell center.
    pub fn from_fn(grid: SpacetimeGrid, f: impl Fn(&FourVector) -> T + Sync) -> Self {
        let values = exec::map_indexed(grid.len(), |lin| f(&grid.coordinate_lin(lin)));
        Field { grid, values }
    }
}

impl ScalarField {
    /// Midpoint quadrature `sum(values) * cell_volume`.
    pub fn quadrature(&self) -> f64 {
        let v = &self.values;
        exec::sum_indexed(v.len(), |i| v[i]) * self.grid.cell_volume()
    }

    /// Scales the field so that [`Self::quadrature`] is exactly the computed 1.
    pub fn normalize(&mut self) -> Result<(), SpacetimeError> {
        let total = self.quadrature();
        if !(total > 0.0) {
            return Err(SpacetimeError::BadParameter(
                "cannot normalize a field with non-positive quadrature sum".into(),
            ));
        }
        for v in &mut self.values {
            *v /= total;
        }
        Ok(())
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.quadrature() - 1.0).abs() <= tol
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl ComplexField {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// Centered difference of a scalar grid field along one axis, divided by
/// `2 * spacing`. Plain coordinate derivative `∂f/∂x^axis`.
fn centered_diff(
    f: &ScalarField,
    idx: &[usize],
    axis: usize,
) -> Result<f64, SpacetimeError> {
    let grid = f.grid();
    let up = grid.neighbor(idx, axis, 1)?;
    let dn = grid.neighbor(idx, axis, -1)?;
    Ok((f.values[up] - f.values[dn]) / (2.0 * grid.spacing(axis)))
}

/// Coordinate gradient `(∂_0 f, ∂_1 f, ∂_2 f, ∂_3 f)` by second-order centered
/// differences; components along absent axes are zero.
pub fn coordinate_gradient(
    f: &ScalarField,
    idx: &[usize],
) -> Result<[f64; 4], SpacetimeError> {
    let mut g = [0.0; 4];
    for a in 0..f.grid().axes() {
        g[a] = centered_diff(f, idx, a)?;
    }
    Ok(g)
}

/// Contravariant four-gradient `∂^mu f = (∂_0 f, -∂_1 f, -∂_2 f, -∂_3 f)` by
/// second-order centered differences at an interior (or periodic) point.
pub fn four_gradient(f: &ScalarField, idx: &[usize]) -> Result<FourVector, SpacetimeError> {
    let g = coordinate_gradient(f, idx)?;
    Ok(FourVector([g[0], -g[1], -g[2], -g[3]]))
}

/// A scalar function with an analytically supplied coordinate gradient.
/// Used wherever a test or verification suite needs the discretization error
/// of the stencils out of the way.
pub struct AnalyticScalar {
    pub value: Box<dyn Fn(&FourVector) -> f64 + Sync>,
    /// Plain coordinate partials `(∂_0, ∂_1, ∂_2, ∂_3)`.
    pub grad: Box<dyn Fn(&FourVector) -> [f64; 4] + Sync>,
}

impl AnalyticScalar {
    pub fn constant(v: f64) -> Self {
        AnalyticScalar {
            value: Box::new(move |_| v),
            grad: Box::new(|_| [0.0; 4]),
        }
    }

    pub fn sample(&self, grid: &SpacetimeGrid) -> ScalarField {
        ScalarField::from_fn(grid.clone(), |x| (self.value)(x))
    }
}

/// A four-vector-valued function of position (contravariant components).
pub struct AnalyticVector {
    pub value: Box<dyn Fn(&FourVector) -> FourVector + Sync>,
}

impl AnalyticVector {
    pub fn zero() -> Self {
        AnalyticVector {
            value: Box::new(|_| FourVector::zero()),
        }
    }

    pub fn sample(&self, grid: &SpacetimeGrid) -> FourVectorField {
        FourVectorField::from_fn(grid.clone(), |x| (self.value)(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid_2d(n: usize, periodic: bool) -> SpacetimeGrid {
        SpacetimeGrid::dim2([n, n], [2.0, 2.0], [0.0, 0.0], periodic).unwrap()
    }

    #[test]
    fn minkowski_dot_examples() {
        let t = FourVector::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(minkowski_dot(&t, &t), 1.0);
        let l = FourVector::new(1.0, 1.0, 0.0, 0.0);
        assert_eq!(minkowski_dot(&l, &l), 0.0);
        let x = FourVector::new(5.0, 3.0, 0.0, 0.0);
        assert_eq!(minkowski_dot(&x, &x), 16.0);
    }

    #[test]
    fn proper_time_examples() {
        let rest = FourVector::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(proper_time(&rest, 1.0).unwrap(), 1.0);
        let x = FourVector::new(5.0, 3.0, 0.0, 0.0);
        assert_eq!(proper_time(&x, 1.0).unwrap(), 4.0);
        let spacelike = FourVector::new(1.0, 2.0, 0.0, 0.0);
        assert!(matches!(
            proper_time(&spacelike, 1.0),
            Err(SpacetimeError::SpacelikeInterval { .. })
        ));
    }

    #[test]
    fn boost_examples() {
        let x = FourVector::new(0.7, -0.3, 0.1, 2.0);
        let same = boost(&x, 0.0, 1);
        assert_eq!(same, x);
        let t = FourVector::new(1.0, 0.0, 0.0, 0.0);
        let b = boost(&t, 0.8, 1);
        assert!((b.component(0) - 0.8f64.cosh()).abs() < 1e-15);
        assert!((b.component(1) - 0.8f64.sinh()).abs() < 1e-15);
    }

    #[test]
    fn gradient_constant_and_linear_fields() {
        let grid = grid_2d(16, false);
        let constant = ScalarField::from_fn(grid.clone(), |_| 3.5);
        let f0 = ScalarField::from_fn(grid.clone(), |x| x.component(0));
        let f1 = ScalarField::from_fn(grid.clone(), |x| x.component(1));
        let idx = [7, 9];
        assert_eq!(four_gradient(&constant, &idx).unwrap(), FourVector::zero());
        let g0 = four_gradient(&f0, &idx).unwrap();
        assert!((g0.component(0) - 1.0).abs() < 1e-13);
        assert!(g0.component(1).abs() < 1e-13);
        // index lowering flips the sign of the spatial component
        let g1 = four_gradient(&f1, &idx).unwrap();
        assert!(g1.component(0).abs() < 1e-13);
        assert!((g1.component(1) + 1.0).abs() < 1e-13);
    }

    #[test]
    fn gradient_boundary_is_an_error_unless_periodic() {
        let closed = ScalarField::from_fn(grid_2d(8, false), |x| x.component(0));
        assert!(matches!(
            four_gradient(&closed, &[0, 3]),
            Err(SpacetimeError::BoundaryPoint { .. })
        ));
        let open = ScalarField::from_fn(grid_2d(8, true), |x| x.component(1).cos());
        assert!(four_gradient(&open, &[0, 3]).is_ok());
    }

    #[test]
    fn gradient_is_second_order_on_trig_fields() {
        // error should shrink by ~4x when the spacing halves
        let err_at = |n: usize| {
            let grid = grid_2d(n, false);
            let f = ScalarField::from_fn(grid.clone(), |x| {
                (2.0 * x.component(0)).sin() * (1.5 * x.component(1)).cos()
            });
            let mut worst = 0.0f64;
            for lin in 0..grid.len() {
                let idx = grid.unflatten(lin);
                if !grid.is_interior(&idx) {
                    continue;
                }
                let x = grid.coordinate(&idx);
                let exact0 = 2.0 * (2.0 * x.component(0)).cos() * (1.5 * x.component(1)).cos();
                let g = four_gradient(&f, &idx).unwrap();
                worst = worst.max((g.component(0) - exact0).abs());
            }
            worst
        };
        let (e1, e2) = (err_at(32), err_at(64));
        let ratio = e1 / e2;
        assert!(
            (3.3..4.7).contains(&ratio),
            "expected ~4x error reduction, got {ratio} ({e1} -> {e2})"
        );
    }

    #[test]
    fn three_spatial_dimensions_work_for_gradients() {
        let grid = SpacetimeGrid::new(
            3,
            vec![5, 5, 5, 5],
            vec![1.0; 4],
            vec![0.0; 4],
            false,
        )
        .unwrap();
        let f = ScalarField::from_fn(grid.clone(), |x| {
            x.component(0) + 2.0 * x.component(2) - x.component(3)
        });
        let g = four_gradient(&f, &[2, 2, 2, 2]).unwrap();
        assert!((g.component(0) - 1.0).abs() < 1e-12);
        assert!(g.component(1).abs() < 1e-12);
        assert!((g.component(2) + 2.0).abs() < 1e-12);
        assert!((g.component(3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_and_normalization() {
        let grid = grid_2d(10, false);
        let mut f = ScalarField::from_fn(grid, |x| 1.0 + 0.2 * x.component(1));
        f.normalize().unwrap();
        assert!(f.is_normalized(1e-12));
    }

    #[test]
    fn lambda_is_ratio_based() {
        let p = PhysicalParams::new(1.0, 0.3, 0.7, 0.1).unwrap();
        let scaled = PhysicalParams::new(1.0, 0.6, 1.4, 0.2).unwrap();
        assert_eq!(p.lambda().to_bits(), scaled.lambda().to_bits());
    }

    proptest! {
        #[test]
        fn minkowski_dot_is_symmetric_and_bilinear(
            a in proptest::array::uniform4(-10.0f64..10.0),
            b in proptest::array::uniform4(-10.0f64..10.0),
            c in proptest::array::uniform4(-10.0f64..10.0),
            s in -5.0f64..5.0,
        ) {
            let (va, vb, vc) = (FourVector(a), FourVector(b), FourVector(c));
            prop_assert!((minkowski_dot(&va, &vb) - minkowski_dot(&vb, &va)).abs() < 1e-12);
            let lhs = minkowski_dot(&(va * s + vc), &vb);
            let rhs = s * minkowski_dot(&va, &vb) + minkowski_dot(&vc, &vb);
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }

        #[test]
        fn boost_preserves_the_interval(
            x in proptest::array::uniform4(-5.0f64..5.0),
            eta in -2.0f64..2.0,
            axis in 1usize..4,
        ) {
            let v = FourVector(x);
            let before = minkowski_dot(&v, &v);
            let after = {
                let b = boost(&v, eta, axis);
                minkowski_dot(&b, &b)
            };
            let scale = 1.0 + before.abs().max(after.abs());
            prop_assert!((before - after).abs() <= 1e-12 * scale);
        }

        #[test]
        fn proper_time_is_boost_invariant(
            t in 1.0f64..10.0,
            r in -0.9f64..0.9,
            eta in -2.0f64..2.0,
        ) {
            // construct a clearly timelike event
            let x = FourVector::new(t, r * t, 0.0, 0.0);
            let tau = proper_time(&x, 1.0).unwrap();
            let tau_b = proper_time(&boost(&x, eta, 1), 1.0).unwrap();
            prop_assert!((tau - tau_b).abs() <= 1e-12 * tau.max(1.0));
        }
    }
}
