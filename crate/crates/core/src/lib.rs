//! Schottky groups attached to stable graphs, over exact and numeric
//! coefficient rings.
//!
//! A stable graph with marked tails determines a free group of Möbius
//! transformations whose generators degenerate as the gluing parameters
//! `y_e` tend to zero.  This crate builds that group over three coefficient
//! rings — exact rationals, complex floats, and truncated multivariate
//! power series in the `y_e` — and computes the objects that survive the
//! degeneration: Poincaré-type differential series of the first, second and
//! third kinds, multiplicative period matrices, bases of residue-free
//! second-kind forms normalized against b-cycles, and the residue data of
//! Knizhnik–Zamolodchikov connections on the degenerate fibers, including
//! multiple zeta value evaluation and regularized monodromy.
//!
//! The crate is organized as:
//!
//! - [`graph`]: stable graphs, stability checks, spanning trees, vertex
//!   splitting / edge contraction.
//! - [`rings`]: the coefficient-ring abstraction, truncated power series
//!   over exact rationals, and noncommutative weight-truncated series.
//! - [`moebius`]: projective points and unnormalized Möbius matrices with
//!   tracked determinants, fixed points and multipliers.
//! - [`schottky`]: word enumeration, coset systems, differential series,
//!   contour integration, period matrices, and conjugation invariants.
//! - [`kz`]: residue assignments for degenerate KZ connections, multiple
//!   zeta values, and regularized parallel transport.

pub mod error;
pub mod graph;
pub mod kz;
pub mod moebius;
pub(crate) mod par;
pub mod rings;
pub mod schottky;

pub use error::{GraphError, KzError, MoebiusError, RingError, SchottkyError};
pub use graph::{Branch, OEdge, StableGraph};
pub use moebius::{MoebiusMap, ProjectivePoint};
pub use rings::{NcSeries, Ring, TruncatedSeries};
pub use schottky::{EngineConfig, SchottkyGroup, SchottkyParams};
