//! Numerical differential geometry on coordinate charts.
//!
//! The crate builds everything from one substrate: a [`ChartBox`] (a
//! coordinate box) carrying pure evaluation rules for scalar fields and
//! metric tensors. On top of that it provides
//!
//! * finite-difference derivatives with error control ([`fields`]),
//! * Christoffel symbols, the lowered curvature tensor, sectional
//!   curvatures and pinching scans ([`curvature`]),
//! * graph hypersurfaces in flat space with their induced metric and
//!   second fundamental form ([`immersion`]),
//! * conformal rescaling `ĝ = e^{2u} g` and residual checks of the
//!   transformation laws for gradients, Hessians, curvature and second
//!   fundamental forms ([`conformal`]),
//! * the sharp and rough constants governing stability of minimal
//!   submanifolds, together with a randomized audit of the underlying
//!   algebraic inequality ([`stability`]),
//! * a complete worked example: the rotationally symmetric ellipsoid,
//!   its conformal second fundamental form, and the admissible
//!   parameter range ([`ellipsoid`]).
//!
//! Every closed form is adjudicated by an independent numerical route:
//! analytic derivative rules are checked against central differences,
//! curvature tensors against constant-curvature and Gauss-equation
//! oracles, and the ellipsoid's rational profile against a
//! componentwise transformation of the second fundamental form.
//!
//! ```
//! use confstab::stability;
//!
//! let c = stability::constants(4, 1).unwrap();
//! assert!((c.c_sharp - 6.0 / 5.0).abs() < 1e-12);
//! ```

pub mod conformal;
pub mod curvature;
pub mod ellipsoid;
pub mod fields;
pub mod frame;
pub mod immersion;
pub mod numeric;
pub mod stability;

mod book;

pub use conformal::{ConformalData, ResidualReport};
pub use curvature::{PinchReport, Riemann4};
pub use ellipsoid::{AdmissibleRange, ConformalIiMax, Ellipsoid, EllipsoidPointData, RangeBasis};
pub use fields::{ChartBox, FieldError, MetricField, ScalarField};
pub use immersion::{FundamentalForms, GraphImmersion};
pub use stability::{AlgII, BoundAudit, StabilityConstants};
