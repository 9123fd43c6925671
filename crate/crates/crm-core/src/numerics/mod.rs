//! In-repo numerical kernel: adaptive quadrature, special functions and the
//! statistical tests used by the verification harness. No external numerical
//! dependencies; everything here is tested against the quadrature routine as
//! the universal oracle.

pub mod quad;
pub mod special;
pub mod stats;

pub use quad::{integrate_1d, integrate_default, integrate_singular0, QuadratureResult};
pub use special::{exp_integral_e1, gamma_cdf, ln_gamma, reg_gamma_p, reg_gamma_q};
pub use stats::{chi_square_poisson_test, ks_test, TestResult};
