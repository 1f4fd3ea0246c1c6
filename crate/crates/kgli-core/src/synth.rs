//! Seeded synthetic field constructors shared by the verification suites and
//! the test oracles: random trigonometric fields with analytic gradients,
//! and reproducible perturbation noise for optimizer starts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spacetime::{AnalyticScalar, AnalyticVector, FourVector, SpacetimeGrid};

/// A finite sum of plane-wave modes commensurate with a 1+1D box, so the
/// field and its gradient are exactly periodic on the box.
#[derive(Clone, Debug)]
pub struct TrigScalar {
    pub offset: f64,
    /// (amplitude, mode number along axis 0, along axis 1, phase)
    pub modes: Vec<(f64, i32, i32, f64)>,
    pub lengths: [f64; 2],
}

impl TrigScalar {
    pub fn value(&self, x: &FourVector) -> f64 {
        let mut v = self.offset;
        for &(amp, n0, n1, phase) in &self.modes {
            v += amp
                * (self.wavenumber(0, n0) * x.component(0)
                    + self.wavenumber(1, n1) * x.component(1)
                    + phase)
                    .cos();
        }
        v
    }

    /// Plain coordinate partials `(∂_0, ∂_1, 0, 0)`.
    pub fn grad(&self, x: &FourVector) -> [f64; 4] {
        let mut g = [0.0; 4];
        for &(amp, n0, n1, phase) in &self.modes {
            let k0 = self.wavenumber(0, n0);
            let k1 = self.wavenumber(1, n1);
            let s = -amp * (k0 * x.component(0) + k1 * x.component(1) + phase).sin();
            g[0] += k0 * s;
            g[1] += k1 * s;
        }
        g
    }

    fn wavenumber(&self, axis: usize, n: i32) -> f64 {
        2.0 * std::f64::consts::PI * n as f64 / self.lengths[axis]
    }

    pub fn into_analytic(self) -> AnalyticScalar {
        let for_value = self.clone();
        AnalyticScalar {
            value: Box::new(move |x| for_value.value(x)),
            grad: Box::new(move |x| self.grad(x)),
        }
    }
}

/// Random modes with amplitudes scaled so the total swing stays below `swing`.
pub fn random_trig(
    rng: &mut ChaCha8Rng,
    grid: &SpacetimeGrid,
    offset: f64,
    swing: f64,
    n_modes: usize,
) -> TrigScalar {
    let lengths = [grid.extents()[0], grid.extents()[1]];
    let per_mode = swing / n_modes as f64;
    let modes = (0..n_modes)
        .map(|_| {
            let amp = per_mode * (0.3 + 0.7 * rng.gen::<f64>());
            let n0 = rng.gen_range(-3i32..=3);
            let n1 = rng.gen_range(-3i32..=3);
            let phase = rng.gen::<f64>() * std::f64::consts::TAU;
            (amp, n0, n1, phase)
        })
        .collect();
    TrigScalar {
        offset,
        modes,
        lengths,
    }
}

/// A random strictly-positive density profile, a random action profile, and a
/// random four-potential, all with analytic derivatives on the given box.
pub fn random_polar_triple(
    seed: u64,
    grid: &SpacetimeGrid,
) -> (AnalyticScalar, AnalyticScalar, AnalyticVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_trig(&mut rng, grid, 1.0, 0.6, 4).into_analytic();
    let s = random_trig(&mut rng, grid, 0.0, 1.5, 4).into_analytic();
    let comps: Vec<TrigScalar> = (0..4)
        .map(|_| random_trig(&mut rng, grid, 0.0, 0.8, 3))
        .collect();
    let a = AnalyticVector {
        value: Box::new(move |x| {
            FourVector::new(
                comps[0].value(x),
                comps[1].value(x),
                comps[2].value(x),
                comps[3].value(x),
            )
        }),
    };
    (p, s, a)
}

/// Smooth seeded noise used for perturbing exact optimizer starts. The mode
/// content leans on temporal oscillation, which keeps the quadratic form of
/// the functionals positive on the perturbation.
pub fn perturbation_noise(seed: u64, grid: &SpacetimeGrid, amplitude: f64) -> TrigScalar {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lengths = [grid.extents()[0], grid.extents()[1]];
    let modes = (0..6)
        .map(|_| {
            let amp = amplitude * (0.5 + 0.5 * rng.gen::<f64>()) / 6.0;
            let n0 = rng.gen_range(2i32..=4);
            let n1 = rng.gen_range(-1i32..=1);
            let phase = rng.gen::<f64>() * std::f64::consts::TAU;
            (amp, n0, n1, phase)
        })
        .collect();
    TrigScalar {
        offset: 0.0,
        modes,
        lengths,
    }
}
