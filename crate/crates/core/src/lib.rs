//! Exterior transmission eigenvalues of a radial refractive-index
//! perturbation: radial solvers, the eigenvalue determinant, a contour-based
//! complex root finder and zero-density diagnostics.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cartwright;
pub mod determinant;
pub mod error;
pub mod experiments;
pub mod ode;
pub mod profile;
pub mod quad;
pub mod radial;
pub mod specfun;
pub mod zerofind;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use profile::{
    IndexDerivs, LiouvilleMap, PieceConfig, PotentialTerms, ProfileConfig, RadialProfile,
    TransformedPotential,
};
pub use specfun::SphericalOrder;
pub use determinant::{grid_eval, DeterminantFn, Route};
pub use experiments::{OutputFormat, SpectrumJob, SpectrumReport};
pub use radial::SolveOptions;
pub use zerofind::{locate_zeros, AnalyticFunction, Rect, Zero, ZeroFindOptions, ZeroSet};
