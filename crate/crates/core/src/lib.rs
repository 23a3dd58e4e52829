//! Numerical laboratory for transport equations driven by isotropic
//! α-stable Lévy noise.
//!
//! The crate simulates the characteristic equation `dX = b(X) dt + dL`,
//! its forward, inverse and derivative flows on a shared noise path, builds
//! transport solutions `u(t, x) = u₀(φ_t⁻¹(x))`, and checks their weak
//! formulations, the nonlocal resolvent equation used to conjugate singular
//! drifts, and the regularizing effect of the noise.
//!
//! | module | contents |
//! |---|---|
//! | [`levy_noise`] | stable laws, jump-adapted path sampling, Lévy-measure quadrature |
//! | [`drift_fields`] | drift fields, mollification, commutators |
//! | [`flow_engine`] | forward/inverse/derivative flows and flow diagnostics |
//! | [`transport_solver`] | inverse-flow transport solutions and weak-form residuals |
//! | [`kolmogorov_resolvent`] | spectral resolvent solves on a torus and the ψ-transform |
//! | [`experiments`] | configuration, orchestration and convergence tables |

pub mod drift_fields;
pub mod error;
pub mod lattice;
pub mod experiments;
pub mod flow_engine;
pub mod kolmogorov_resolvent;
pub mod levy_noise;
pub mod quad;
pub mod rng;
pub mod transport_solver;

pub use error::{Error, Result};
