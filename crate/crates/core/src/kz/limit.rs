//! Periods of the degenerate fiber: component transports chained at nodes.
//!
//! On a trivalent graph every component carries exactly three branches, so
//! a path across one component is the transport between two of its
//! punctures — and in the chart that puts the entry puncture at `0`, the
//! exit at `1` and the remaining branch at infinity, that transport is the
//! *same* regularized interval transport for every leg, with the abstract
//! letters replaced by the entry and exit residues.  Chart choice washes
//! out: any two such charts differ by the Möbius map fixing the three
//! punctures, which is the identity.
//!
//! What survives of the path's homotopy class around the punctures is a
//! winding count at each node: a leg may spiral `rotations` half-turns
//! around its entry puncture before setting off, contributing
//! `exp(rotations * pi * i * X_enter)`.  A leg list therefore reads
//!
//! ```text
//!     P = T_n R_n  ...  T_2 R_2  T_1 R_1
//! ```
//!
//! with `T_j` the substituted interval transport and `R_j` the rotation
//! factor, rightmost first.  Entering and exiting regularizations at the
//! two sides of a node use the same offset chart, so consecutive legs
//! compose without hidden correction factors; the reversal test in this
//! module is what pins that down.

use num_complex::Complex64;
use num_rational::BigRational;

use crate::error::KzError;
use crate::graph::Branch;
use crate::rings::{rational_to_f64, NcSeries};

use super::monodromy::{standard_interval_transport, substitute};
use super::ResidueAssignment;

/// One component crossing: enter through one branch, leave through
/// another, after `rotations` half-turns around the entry puncture.
#[derive(Debug, Clone)]
pub struct PathLeg {
    pub component: String,
    pub enter: String,
    pub exit: String,
    pub rotations: i32,
}

fn complexify(s: &NcSeries<BigRational>) -> NcSeries<Complex64> {
    s.map_coeffs(|c| Complex64::new(rational_to_f64(c), 0.0))
}

/// The composed transport along a leg sequence, from the first leg's tail
/// to the last leg's tail.
///
/// The graph must be trivalent.  The first leg enters through a tail, the
/// last exits through one, and in between each leg must pick up exactly
/// where the previous one left off: if leg `j` exits through an edge
/// branch, leg `j+1` enters through that edge's other half.
pub fn limit_unipotent_period(
    assignment: &ResidueAssignment,
    legs: &[PathLeg],
) -> Result<NcSeries<Complex64>, KzError> {
    if legs.is_empty() {
        return Err(KzError::BadRequest("no legs given".to_string()));
    }
    let graph = assignment.graph();
    for v in graph.vertices() {
        let k = graph.star(v).len();
        if k != 3 {
            return Err(KzError::BadShape(format!(
                "component `{v}` has {k} branches; limit paths need a \
                 trivalent graph"
            )));
        }
    }
    for (j, leg) in legs.iter().enumerate() {
        let star: Vec<String> = graph.star(&leg.component).iter().map(|b| b.id()).collect();
        if star.is_empty() {
            return Err(KzError::BadRequest(format!(
                "leg {j}: no component `{}`",
                leg.component
            )));
        }
        for b in [&leg.enter, &leg.exit] {
            if !star.contains(b) {
                return Err(KzError::BadRequest(format!(
                    "leg {j}: branch `{b}` is not at component `{}`",
                    leg.component
                )));
            }
        }
        if leg.enter == leg.exit {
            return Err(KzError::BadRequest(format!(
                "leg {j}: enters and exits through the same branch `{}`",
                leg.enter
            )));
        }
    }
    match graph.branch(&legs[0].enter)? {
        Branch::Tail(_) => {}
        Branch::Edge(_) => {
            return Err(KzError::BadRequest(
                "the first leg must enter through a tail".to_string(),
            ))
        }
    }
    match graph.branch(&legs[legs.len() - 1].exit)? {
        Branch::Tail(_) => {}
        Branch::Edge(_) => {
            return Err(KzError::BadRequest(
                "the last leg must exit through a tail".to_string(),
            ))
        }
    }
    for j in 0..legs.len() - 1 {
        let exit = match graph.branch(&legs[j].exit)? {
            Branch::Edge(oe) => oe,
            Branch::Tail(t) => {
                return Err(KzError::BadRequest(format!(
                    "leg {j} exits through tail `{t}` but the path continues"
                )))
            }
        };
        let expected = exit.reversed().id();
        if legs[j + 1].enter != expected {
            return Err(KzError::BadRequest(format!(
                "leg {} must enter through `{expected}` to continue leg {j}",
                j + 1
            )));
        }
    }

    let phi = standard_interval_transport(assignment.weight())?;
    let mut total = NcSeries::one(assignment.alphabet(), assignment.weight())
        .map_coeffs(|c| Complex64::new(rational_to_f64(c), 0.0));
    for leg in legs {
        let r_enter = complexify(assignment.residue(&leg.enter)?);
        let r_exit = complexify(assignment.residue(&leg.exit)?);
        let crossing = substitute(&phi, &[r_enter.clone(), r_exit]);
        let angle = Complex64::new(0.0, std::f64::consts::PI * f64::from(leg.rotations));
        let turn = r_enter.scale(&angle).exp();
        total = crossing.mul(&turn).mul(&total);
    }
    Ok(total)
}

/// Best rational `p/q` with `q <= max_den` within `tol` of `x`, through
/// continued-fraction convergents; `None` when no convergent that small
/// gets that close.
pub fn approximate_rational(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    let mut a = x.floor();
    let (mut p_prev, mut q_prev) = (1i64, 0i64);
    let (mut p, mut q) = (a as i64, 1i64);
    let mut rem = x - a;
    for _ in 0..64 {
        if q > max_den {
            return None;
        }
        if (x - p as f64 / q as f64).abs() <= tol {
            return Some((p, q));
        }
        if rem.abs() < 1e-13 {
            return None;
        }
        let inv = 1.0 / rem;
        a = inv.floor();
        rem = inv - a;
        let (p_next, q_next) = (a as i64 * p + p_prev, a as i64 * q + q_prev);
        p_prev = p;
        q_prev = q;
        p = p_next;
        q = q_next;
    }
    None
}
