//! Built-in benchmark inverse problems with analytic Jacobians.
//!
//! Three problem families, each bundling a forward map, a prior, and a
//! synthetic-data generator:
//!
//! * [`EllipticProblem`] — recover a log-conductivity field from point
//!   observations of the potential of a 2-D elliptic PDE, under a Gaussian
//!   process prior defined through a stochastic PDE;
//! * [`PetProblem`] — transmission tomography with Poisson count data under
//!   a heavy-tailed wavelet-expansion prior on the log-density field;
//! * [`LinearGaussianProblem`] — a reproducible dense linear-Gaussian
//!   instance whose posterior is known in closed form, for end-to-end
//!   validation.
//!
//! Default sizes are desk-scale (minutes on one core) while preserving the
//! structure of the larger setups they are modeled on; the larger sizes
//! remain available through the explicit constructors.

mod elliptic;
mod linear;
mod pet;

pub use elliptic::{spde_prior, EllipticForward, EllipticProblem};
pub use linear::LinearGaussianProblem;
pub use pet::{PetForward, PetGeometry, PetProblem};

use nalgebra::DVector;

/// A synthetic ground truth with the data simulated from it.
#[derive(Debug, Clone)]
pub struct TruthAndData {
    /// Parameter vector drawn from the problem's prior.
    pub x_true: DVector<f64>,
    /// Observations simulated from the data law at `x_true`.
    pub y: DVector<f64>,
    /// Gaussian observation noise level used, when the data law is Gaussian
    /// with a scalar noise scale derived from a target signal-to-noise
    /// ratio; `None` for count data.
    pub noise_sigma: Option<f64>,
}
