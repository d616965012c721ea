//! Numerical two-dimensional parallel transport for Lie crossed modules.
//!
//! The crate implements, over explicit coordinate charts:
//!
//! * matrix models of the groups underlying a family of built-in crossed
//!   modules, with closed-form exponential/logarithm where available
//!   ([`groups`], [`crossed`]);
//! * the categorical group of a crossed module — morphisms, composition,
//!   tensor, interchange ([`catgroup`]);
//! * Lie-algebra-valued differential forms, exterior derivatives (analytic
//!   for polynomial data, finite-difference otherwise), curvature,
//!   2-curvature, and the structural identities relating them ([`forms`]);
//! * smooth paths, 2-paths, and 3-path families with flat collars, plus the
//!   concatenation/reversal/reparametrization calculus ([`paths`]);
//! * line and surface transport integrators and the holonomy laws they
//!   satisfy — target matching, functoriality, monoidality, gauge
//!   covariance, base-point translation, and the derivative of a holonomy
//!   family ([`transport`]);
//! * kernel-valued holonomy of based spheres with integer labels in the
//!   abelian case ([`wilson`]);
//! * a scenario registry and a law-verification suite producing structured
//!   reports ([`scenarios`], [`verify`]).

pub mod catgroup;
pub mod crossed;
pub mod error;
pub mod forms;
pub mod groups;
pub mod paths;
// pub mod report;
// pub mod scenarios;
// pub mod transport;
// pub mod verify;
// pub mod wilson;

pub use error::{Error, Result};
