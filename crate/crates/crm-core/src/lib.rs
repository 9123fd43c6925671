//! Simulation and verification toolkit for completely random discrete
//! measures on bounded windows of R^d.
//!
//! The core objects: a Levy density `l(x, s)` drives a Poisson process on
//! window x R_+, whose configurations map one-to-one onto discrete measures.
//! Groups of multipliers (currents), diffeomorphisms of the window, and their
//! semidirect products act on these measures; this crate samples the laws,
//! evaluates the transformation densities, and checks the two sides against
//! each other by Monte Carlo.

pub mod config;
pub mod density;
pub mod error;
pub mod groups;
pub mod levy;
pub mod measure;
pub mod numerics;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod verify;
pub mod window;

pub use config::Config;
pub use density::{
    current_log_density, current_log_density_gamma, diagnose_diffeo_qi, diffeo_log_density,
    hellinger_integral, partial_log_density, semidirect_log_density, HellingerReport, LogDensity,
    QiVerdict,
};
pub use error::{CrmError, Result};
pub use groups::{apply_current, apply_diffeo, BumpTerm, Current, Diffeo, GroupElement};
pub use levy::{Family, FieldFn, LevyModel, MassClass, Q3Report, Q3Status, Tail};
pub use measure::{r_inverse, r_map, Configuration, DiscreteMeasure, WeightedAtom};
pub use rng::CounterRng;
pub use sampler::{laplace_exact, McEstimate, Sampler, SamplerSpec};
pub use verify::{
    laplace_reference, verify_current, verify_diffeo, verify_gamma_marginal, verify_laplace,
    verify_partial, verify_semidirect, Functional, FunctionalKind, MarginalReport, VerifyOptions,
    VerifyReport,
};
pub use window::Window;
