//! Chart-level differential geometry from metric evaluators.

pub mod deriv;
pub mod frame;
pub mod jet;
pub mod scenario;

pub use deriv::{differentiate, partial, richardson, second_partial, FdValue};
pub use frame::orthonormal_frame;
pub use jet::{geometry_jet, Curvature, GeometryJet, JetLevel};
pub use scenario::{Axis, Backends, CovectorFn, Domain, MetricFn, Scenario, TensorFn};
