//! Information-theoretic functionals of densities on uniform grids and the
//! heat-flow inequalities that connect them.
//!
//! The crate evaluates Shannon entropy `H`, entropy power `N = exp(2H/n)`,
//! Fisher information `I`, McKean's `J` and Costa's `Υ = N·I` on densities
//! sampled over `ℝ` or `ℝ²`, evolves them under the heat semigroup, and
//! reports the slack of each inequality in the chain
//! concavity of entropy power ⇒ isoperimetric inequality for entropies ⇒
//! logarithmic Sobolev ⇒ Nash.
//!
//! All numerical types are generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.
//!
//! ```
//! use entropy_flow::{build_grid, functionals, GaussianSpec, GridDomain};
//!
//! let spec = GaussianSpec::centered(1, 1.0).unwrap().into();
//! let grid = build_grid(&spec, GridDomain::default_for_dim(1).unwrap()).unwrap();
//! let h: f64 = functionals::entropy(&grid).unwrap();
//! assert!((h - 1.4189385).abs() < 1e-6);
//! ```

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod convolve;
pub mod diff;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod heat;
pub mod inequality;
pub mod scalar;

pub use analytic::{heat_evolve_spec, DensitySpec, GaussianSpec, MixtureSpec};
pub use convolve::convolve;
pub use diff::{gradient, hessian_log, Stencil};
pub use error::{FlowError, Result};
pub use functionals::FunctionalSnapshot;
pub use grid::{build_grid, l1_distance, Axis, DensityGrid, GridDomain};
pub use heat::{evolve, flow_trace, rescaled_flow, DerivativeProbe, FlowTrace};
pub use inequality::{InequalityReport, InequalitySuite, InequalityTag, NashReport, Tolerances};
pub use scalar::Real;

pub type Grid = DensityGrid<f64>;
pub type Grid32 = DensityGrid<f32>;
pub type Domain = GridDomain<f64>;
pub type Spec = DensitySpec<f64>;
pub type Snapshot = FunctionalSnapshot<f64>;
pub type Trace = FlowTrace<f64>;
pub type Report = InequalityReport<f64>;
pub type Suite = InequalitySuite<f64>;
