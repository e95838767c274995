//! Low-energy spectral scattering on metric cones.
//!
//! Bessel-function kernels for the exact cone, per-mode radial Green
//! functions for radially perturbed cones, Stone-formula propagators with
//! long-time decay fits, an exact index-set calculus, a Legendrian leaf
//! sampler and a finite-box eigenfunction oracle.
//!
//! All kernels are scalar, taken against the Riemannian density
//! `r^{n-1} dr dh`.

pub mod cone_kernels;
pub mod cross_section;
pub mod eigen;
pub mod error;
pub mod index_sets;
pub mod legendrian;
pub mod numerics;
pub mod ode;
pub mod oracle;
pub mod propagators;
pub mod radial;
pub mod specfun;

pub use error::{Error, Result};
pub use num_complex::Complex64;
