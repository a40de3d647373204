//! Time integration along paths of complex time steps.
//!
//! The numeric core is generic over the real scalar ([`scalar::Real`],
//! implemented for `f32` and `f64`); the aliases below fix it to `f64`.

pub mod error;
pub mod experiments;
pub mod integrators;
pub mod order_conditions;
pub mod paths;
pub mod poly;
pub mod problems;
pub mod scalar;
pub mod solvers;
pub mod ssp;
pub mod stability;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub type ComplexPath = paths::ComplexPath<f64>;
pub type Jet = order_conditions::Jet<f64>;
pub type Poly = order_conditions::Poly<f64>;
pub type StabilityPolynomial = stability::StabilityPolynomial<f64>;
pub type IntegrationResult = integrators::IntegrationResult<f64>;

pub use integrators::MethodSpec;
pub use order_conditions::SchemeDescriptor;
pub use problems::OdeProblem;
