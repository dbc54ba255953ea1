//! Numerical comparison geometry on rotationally symmetric reference surfaces.
//!
//! The crate builds model surfaces of revolution from a radial curvature
//! function, computes geodesics, distances, cut loci and metric ellipses on
//! them, and uses that machinery to verify Alexandrov/Toponogov-style
//! comparison inequalities for geodesic triangles living on separately
//! supplied test manifolds (other surfaces of revolution, flat cylinders, or
//! arbitrary diagonal-metric chart grids).
//!
//! The main pieces:
//!
//! * [`profile`] — warping functions `f` with `f'' + K f = 0`, `f(0) = 0`,
//!   `f'(0) = 1`, solved adaptively or taken in closed form.
//! * [`surface`] — geodesic shooting, multi-start distance computation with
//!   full enumeration of minimizing segments, Jacobi fields, polar curves.
//! * [`eikonal`] — a second-order fast-marching solver used as an
//!   independent distance oracle on chart grids.
//! * [`cutlocus`] — cut-time tables, cut-locus assembly, extremal minimizing
//!   segments obtained as limits of ellipse perturbations.
//! * [`ellipse`] — curves `d(o,x) + d(p,x) = a` with the pole as one focus.
//! * [`manifolds`] — the test-manifold zoo on which triangles are sampled.
//! * [`reference`] — reference points/curves for geodesic segments and the
//!   maxima set `E(p)` of the base-point distance on metric ellipses.
//! * [`comparison`] — triangle builders, convexity/angle/positional checks,
//!   cut-point certificates, perimeter/diameter audits and the perturbation
//!   stabilization runs.

pub mod comparison;
pub mod contour;
pub mod cutlocus;
pub mod eikonal;
pub mod ellipse;
pub mod error;
pub mod manifolds;
pub mod ode;
pub mod profile;
pub mod reference;
pub mod report;
pub mod rootfind;
pub mod sampling;
pub mod surface;
pub mod svg;

pub use error::{Error, Result};
