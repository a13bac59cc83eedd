//! Transmission tomography with Poisson counts on Ω = [−10, 10]².
//!
//! Gamma rays travel from sources to detectors through an object whose
//! density is `exp(f)`; Beer's law attenuates each ray by the line integral
//! of the density, so with the field discretized as piecewise constant on an
//! n×n grid the detector intensities are
//!
//! `G(x) = I_s · exp(−A · exp(Bx))`
//!
//! where `A` holds exact ray/cell intersection lengths, `B` is the weighted
//! Haar synthesis matrix of a heavy-tailed wavelet expansion (smoothness 2,
//! integrability 1), and the coefficients `x` carry an i.i.d. Laplace prior
//! with unit scale. Counts at the detectors are Poisson with rate `G_i(x)`.
//!
//! Sources sit on one side of a circle spanning a configurable arc
//! (default 90°); each fires one ray at every detector position on the
//! opposite arc. The geometry is parameterized rather than fixed: source and
//! detector radii and the arc span are configuration fields.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::Error;
use crate::models::{ForwardModel, LikelihoodModel, PoissonLikelihood};
use crate::priors::{BesovExpansion, Prior, ProductGgPrior};
use crate::problems::TruthAndData;
use crate::Result;

/// Half-width of the imaging domain [−10, 10]².
const DOMAIN_HALF_WIDTH: f64 = 10.0;

/// Ray and grid layout for a tomography instance.
#[derive(Debug, Clone, Copy)]
pub struct PetGeometry {
    /// Cells per grid side; must be a power of two for the Haar expansion.
    pub n: usize,
    /// Number of radiation sources on the source arc.
    pub n_sources: usize,
    /// Rays per source: one toward each detector position.
    pub rays_per_source: usize,
    /// Radius of the circle carrying the sources.
    pub source_radius: f64,
    /// Radius of the circle carrying the detectors.
    pub detector_radius: f64,
    /// Angular span of both arcs, in degrees.
    pub arc_degrees: f64,
    /// Source intensity `I_s`.
    pub intensity: f64,
}

impl PetGeometry {
    /// Desk-scale default: 16×16 cells, 3 sources × 10 rays.
    pub fn desk() -> Self {
        Self {
            n: 16,
            n_sources: 3,
            rays_per_source: 10,
            source_radius: 15.0,
            detector_radius: 15.0,
            arc_degrees: 90.0,
            intensity: 10.0,
        }
    }

    /// The reference large-scale setup: 64×64 cells, 5 sources × 30 rays.
    pub fn paper_scale() -> Self {
        Self {
            n: 64,
            n_sources: 5,
            rays_per_source: 30,
            ..Self::desk()
        }
    }

    /// Total number of observations `n_sources · rays_per_source`.
    pub fn n_rays(&self) -> usize {
        self.n_sources * self.rays_per_source
    }

    fn validate(&self) -> Result<()> {
        if !self.n.is_power_of_two() || self.n < 2 {
            return Err(Error::InvalidParameter {
                reason: format!(
                    "tomography grid side must be a power of two >= 2, got {}",
                    self.n
                ),
            });
        }
        if self.n_sources == 0 || self.rays_per_source == 0 {
            return Err(Error::InvalidParameter {
                reason: "need at least one source and one ray per source".into(),
            });
        }
        for (name, v) in [
            ("source_radius", self.source_radius),
            ("detector_radius", self.detector_radius),
            ("arc_degrees", self.arc_degrees),
            ("intensity", self.intensity),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    reason: format!("{name} must be positive and finite, got {v}"),
                });
            }
        }
        Ok(())
    }

    /// Source positions: equally spaced on an arc centered on the 180°
    /// direction.
    fn sources(&self) -> Vec<(f64, f64)> {
        arc_points(
            self.n_sources,
            180.0,
            self.arc_degrees,
            self.source_radius,
        )
    }

    /// Detector positions: equally spaced on the opposite arc.
    fn detectors(&self) -> Vec<(f64, f64)> {
        arc_points(
            self.rays_per_source,
            0.0,
            self.arc_degrees,
            self.detector_radius,
        )
    }

    /// Intersection-length matrix `A` (one row per ray, one column per
    /// cell): entry `(i, j)` is the length of ray `i` inside cell `j`. Rays
    /// that miss the domain produce zero rows.
    pub fn intersection_matrix(&self) -> Result<DMatrix<f64>> {
        self.validate()?;
        let d = self.n * self.n;
        let mut a = DMatrix::zeros(self.n_rays(), d);
        let detectors = self.detectors();
        for (s, src) in self.sources().into_iter().enumerate() {
            for (r, det) in detectors.iter().enumerate() {
                let row = s * self.rays_per_source + r;
                for (cell, len) in ray_cells(src, *det, self.n) {
                    a[(row, cell)] += len;
                }
            }
        }
        Ok(a)
    }
}

fn arc_points(count: usize, center_deg: f64, span_deg: f64, radius: f64) -> Vec<(f64, f64)> {
    (0..count)
        .map(|k| {
            let frac = if count == 1 {
                0.5
            } else {
                k as f64 / (count - 1) as f64
            };
            let deg = center_deg - span_deg / 2.0 + span_deg * frac;
            let theta = deg.to_radians();
            (radius * theta.cos(), radius * theta.sin())
        })
        .collect()
}

/// Cells crossed by the segment `src → det` inside the domain, with the
/// intersection length of each. Traversal by sorted crossing parameters:
/// collect every `t` where the segment meets a grid line, then attribute
/// each sub-segment to the cell containing its midpoint. The per-ray lengths
/// sum to the chord length inside the domain by construction.
fn ray_cells(src: (f64, f64), det: (f64, f64), n: usize) -> Vec<(usize, f64)> {
    let l = DOMAIN_HALF_WIDTH;
    let h = 2.0 * l / n as f64;
    let (dx, dy) = (det.0 - src.0, det.1 - src.1);
    let seg_len = (dx * dx + dy * dy).sqrt();
    if seg_len == 0.0 {
        return Vec::new();
    }

    // Clip the segment parameter to the box with the slab method.
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    for (p, d) in [(src.0, dx), (src.1, dy)] {
        if d == 0.0 {
            if p < -l || p > l {
                return Vec::new();
            }
        } else {
            let (ta, tb) = ((-l - p) / d, (l - p) / d);
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
        }
    }
    if t0 >= t1 {
        return Vec::new();
    }

    // Crossing parameters with every grid line strictly inside (t0, t1).
    let mut ts = vec![t0, t1];
    for (p, d) in [(src.0, dx), (src.1, dy)] {
        if d != 0.0 {
            for line in 0..=n {
                let coord = -l + line as f64 * h;
                let t = (coord - p) / d;
                if t > t0 && t < t1 {
                    ts.push(t);
                }
            }
        }
    }
    ts.sort_by(f64::total_cmp);

    let cell_of = |coord: f64| -> usize {
        (((coord + l) / h).floor() as isize).clamp(0, n as isize - 1) as usize
    };
    let mut out = Vec::with_capacity(ts.len());
    for pair in ts.windows(2) {
        let (ta, tb) = (pair[0], pair[1]);
        let len = (tb - ta) * seg_len;
        if len <= 0.0 {
            continue;
        }
        let tm = 0.5 * (ta + tb);
        let i = cell_of(src.0 + tm * dx);
        let j = cell_of(src.1 + tm * dy);
        out.push((j * n + i, len));
    }
    out
}

/// Beer's-law forward map `G(x) = I_s · exp(−A · exp(Bx))`.
#[derive(Clone)]
pub struct PetForward {
    a: DMatrix<f64>,
    basis: DMatrix<f64>,
    intensity: f64,
}

impl PetForward {
    /// Build from an intersection matrix, a synthesis basis, and a source
    /// intensity. `a` is `m × d`, `basis` is `d × d`.
    pub fn new(a: DMatrix<f64>, basis: DMatrix<f64>, intensity: f64) -> Result<Self> {
        let d = a.ncols();
        if basis.nrows() != d || basis.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "tomography synthesis basis",
                expected: d,
                got: basis.nrows(),
            });
        }
        if a.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidParameter {
                reason: "intersection lengths must be nonnegative and finite".into(),
            });
        }
        if !(intensity > 0.0) || !intensity.is_finite() {
            return Err(Error::InvalidParameter {
                reason: format!("source intensity must be positive and finite, got {intensity}"),
            });
        }
        Ok(Self {
            a,
            basis,
            intensity,
        })
    }

    /// The intersection-length matrix `A`.
    pub fn intersections(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// The synthesis matrix `B`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Source intensity `I_s`.
    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    /// Densities `exp(Bx)` on the grid; errors if the field overflows.
    fn densities(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.dim_in() {
            return Err(Error::DimensionMismatch {
                context: "tomography coefficient vector",
                expected: self.dim_in(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "tomography coefficients",
            });
        }
        let field = &self.basis * x;
        let dens = field.map(f64::exp);
        if dens.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "density field exp(Bx)",
            });
        }
        Ok(dens)
    }
}

impl ForwardModel for PetForward {
    fn dim_in(&self) -> usize {
        self.basis.ncols()
    }

    fn dim_out(&self) -> usize {
        self.a.nrows()
    }

    fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let attenuation = &self.a * self.densities(x)?;
        Ok(attenuation.map(|v| self.intensity * (-v).exp()))
    }

    /// Closed-form chain rule: `∇G = −diag(G) · A · diag(exp(Bx)) · B`.
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let dens = self.densities(x)?;
        let g = (&self.a * &dens).map(|v| self.intensity * (-v).exp());
        let mut scaled = self.a.clone();
        for (j, &w) in dens.iter().enumerate() {
            scaled.column_mut(j).scale_mut(w);
        }
        let mut jac = scaled * &self.basis;
        for (i, &gi) in g.iter().enumerate() {
            jac.row_mut(i).scale_mut(-gi);
        }
        Ok(jac)
    }
}

/// The tomography benchmark: geometry, forward map, and the wavelet prior.
pub struct PetProblem {
    geometry: PetGeometry,
    forward: PetForward,
    expansion: BesovExpansion,
    prior: ProductGgPrior,
}

impl PetProblem {
    pub fn new(geometry: PetGeometry) -> Result<Self> {
        Self::with_prior(geometry, 2.0, 1.0, 1.0, 1.0)
    }

    /// Full prior parameterization: Besov weights `2^{−j(s + 1/2 − 1/p)}`
    /// from `(smoothness, integrability) = (s, p)` and i.i.d. generalized-
    /// Gaussian coefficients with shape `coeff_p` and rate `coeff_gamma`.
    /// The default prior is Laplace coefficients (`p = 1, γ = 1`) under
    /// `s = 2` weights.
    pub fn with_prior(
        geometry: PetGeometry,
        smoothness: f64,
        integrability: f64,
        coeff_p: f64,
        coeff_gamma: f64,
    ) -> Result<Self> {
        let a = geometry.intersection_matrix()?;
        let levels = geometry.n.trailing_zeros() as usize;
        let expansion = BesovExpansion::new_2d(levels, smoothness, integrability)?;
        let forward = PetForward::new(a, expansion.matrix().clone(), geometry.intensity)?;
        let prior = ProductGgPrior::iid(forward.dim_in(), coeff_p, coeff_gamma)?;
        Ok(Self {
            geometry,
            forward,
            expansion,
            prior,
        })
    }

    /// Desk-scale default geometry.
    pub fn desk() -> Self {
        Self::new(PetGeometry::desk()).expect("desk-scale defaults are valid")
    }

    pub fn geometry(&self) -> &PetGeometry {
        &self.geometry
    }

    pub fn forward(&self) -> &PetForward {
        &self.forward
    }

    pub fn expansion(&self) -> &BesovExpansion {
        &self.expansion
    }

    pub fn prior(&self) -> &ProductGgPrior {
        &self.prior
    }

    /// Draw coefficients from the Laplace prior and simulate Poisson counts
    /// at the detectors.
    pub fn make_truth_and_data(&self, rng: &mut dyn Rng) -> Result<TruthAndData> {
        let x_true = self.prior.sample(&mut *rng);
        let placeholder = DVector::zeros(self.forward.dim_out());
        let lik = PoissonLikelihood::new(self.forward.clone(), placeholder)?;
        let y = lik.simulate(&x_true, &mut *rng)?;
        Ok(TruthAndData {
            x_true,
            y,
            noise_sigma: None,
        })
    }

    /// Poisson likelihood for a record of detector counts.
    pub fn likelihood(&self, counts: DVector<f64>) -> Result<PoissonLikelihood<PetForward>> {
        PoissonLikelihood::new(self.forward.clone(), counts)
    }
}
