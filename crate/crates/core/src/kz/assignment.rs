//! Residues for the maximally degenerate graphs and their contractions.
//!
//! The seed shape is the one-handle-per-vertex graph: a base component
//! carrying all `n` tails, joined by one ordinary edge to each of `g`
//! further components, every one of which carries a single loop.  On this
//! shape the residues are written in a free algebra with three letters per
//! handle short of one: `T:l` and `A:l` for the loop `l` (the local
//! monodromy logarithm and the residue seed) and `X:t` for each tail
//! except a designated one, whose residue is forced by the base vertex's
//! balance and is not an independent letter.
//!
//! Every other stable graph of the same type arises by contracting
//! ordinary edges, and the residues follow along by plain forgetting: the
//! halves of a contracted edge are the only data lost, and they were
//! redundant — each half equals minus the sum of the other residues at its
//! vertex.  [`apply_expansion_rule`] implements that transfer; running it
//! along different contraction orders to the same graph gives identical
//! residue maps, which is what makes the family of assignments consistent.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;

use crate::error::KzError;
use crate::graph::StableGraph;
use crate::rings::{bernoulli_expansion, nc_ad_series, NcAlphabet, NcSeries};

use super::ResidueAssignment;

/// Residues of the two halves of a loop and of the edge hanging off its
/// component, written in the letters `t_name` and `a_name`.
///
/// With `T` the loop's monodromy logarithm and `A` its residue seed, the
/// three values are
///
/// - the loop half itself: `sum_k b_k ad_T^k(A)` with `b_k` the Taylor
///   coefficients of `T/(e^T - 1)`,
/// - the reversed half: the same sum with `ad_T` negated and the overall
///   sign flipped, so the pair adds up to `-[T, A]` exactly (every odd
///   coefficient beyond the first vanishes), and
/// - the half of the connecting edge that sits at the *other* (tail-
///   bearing) component: `-[T, A]`, balancing the loop component's vertex
///   sum through its own reversed half `+[T, A]`.
pub fn loop_substitution(
    alphabet: &Arc<NcAlphabet>,
    weight: usize,
    t_name: &str,
    a_name: &str,
) -> (
    NcSeries<BigRational>,
    NcSeries<BigRational>,
    NcSeries<BigRational>,
) {
    let t = NcSeries::letter_named(alphabet, weight, t_name);
    let a = NcSeries::letter_named(alphabet, weight, a_name);
    // ad_T^k(A) has weight k + 1, so k stops one short of the cutoff.
    let orders = weight.saturating_sub(1);
    let b = bernoulli_expansion(orders);
    let x_loop = nc_ad_series(&b, &t, &a);
    let flipped: Vec<BigRational> = b
        .iter()
        .enumerate()
        .map(|(k, c)| if k % 2 == 0 { -c.clone() } else { c.clone() })
        .collect();
    let x_rev = nc_ad_series(&flipped, &t, &a);
    let x_edge = t.bracket(&a).neg();
    (x_loop, x_rev, x_edge)
}

/// The residue assignment on a one-handle-per-vertex graph.
///
/// Checks that `graph` has exactly that shape — all tails on one base
/// component, every other component carrying one loop plus one ordinary
/// edge to the base — and fails with [`KzError::BadShape`] otherwise, or
/// with [`KzError::NoTails`] when there is no tail to absorb the base
/// component's balance.  The eliminated tail is the one with the largest
/// marking index.
pub fn base_assignment(graph: &StableGraph, weight: usize) -> Result<ResidueAssignment, KzError> {
    let violations = graph.validate_stable();
    if !violations.is_empty() {
        return Err(KzError::BadShape(violations.join("; ")));
    }
    let tails: Vec<_> = graph.tails().cloned().collect();
    if tails.is_empty() {
        return Err(KzError::NoTails);
    }
    let base = tails[0].vertex.clone();
    if tails.iter().any(|t| t.vertex != base) {
        return Err(KzError::BadShape(
            "all tails must sit on a single base component".to_string(),
        ));
    }

    // Pair each non-base component with its loop and its connecting edge.
    let mut loops: BTreeMap<String, String> = BTreeMap::new();
    let mut connectors: BTreeMap<String, String> = BTreeMap::new();
    for e in graph.edges() {
        if e.is_loop() {
            if e.from == base {
                return Err(KzError::BadShape(format!(
                    "loop `{}` sits on the base component",
                    e.id
                )));
            }
            if loops.insert(e.from.clone(), e.id.clone()).is_some() {
                return Err(KzError::BadShape(format!(
                    "component `{}` carries more than one loop",
                    e.from
                )));
            }
        } else {
            let other = if e.from == base {
                &e.to
            } else if e.to == base {
                &e.from
            } else {
                return Err(KzError::BadShape(format!(
                    "edge `{}` does not join the base component to a handle",
                    e.id
                )));
            };
            if connectors.insert(other.clone(), e.id.clone()).is_some() {
                return Err(KzError::BadShape(format!(
                    "component `{other}` is joined to the base more than once"
                )));
            }
        }
    }
    let mut handles: Vec<(String, String)> = Vec::new(); // (loop id, connector id)
    for v in graph.vertices() {
        if *v == base {
            continue;
        }
        match (loops.get(v), connectors.get(v)) {
            (Some(l), Some(e)) => handles.push((l.clone(), e.clone())),
            _ => {
                return Err(KzError::BadShape(format!(
                    "component `{v}` needs exactly one loop and one edge to the base"
                )))
            }
        }
    }
    handles.sort();

    // Letters: T and A per loop, then X per tail minus the eliminated one.
    let eliminated = tails
        .iter()
        .max_by_key(|t| (t.nu, t.id.clone()))
        .expect("tails is nonempty")
        .id
        .clone();
    let mut letters = Vec::new();
    for (l, _) in &handles {
        letters.push(format!("T:{l}"));
        letters.push(format!("A:{l}"));
    }
    let mut tail_ids: Vec<String> = tails.iter().map(|t| t.id.clone()).collect();
    tail_ids.sort();
    for t in &tail_ids {
        if *t != eliminated {
            letters.push(format!("X:{t}"));
        }
    }
    let alphabet = NcSeries::<BigRational>::alphabet_of(letters);

    let mut residues: BTreeMap<String, NcSeries<BigRational>> = BTreeMap::new();
    for (l, conn) in &handles {
        let (x_loop, x_rev, x_edge) =
            loop_substitution(&alphabet, weight, &format!("T:{l}"), &format!("A:{l}"));
        residues.insert(l.clone(), x_loop);
        residues.insert(format!("-{l}"), x_rev);
        let e = graph.edge(conn)?;
        let (base_half, handle_half) = if e.to == base {
            (e.id.clone(), format!("-{}", e.id))
        } else {
            (format!("-{}", e.id), e.id.clone())
        };
        residues.insert(handle_half, x_edge.neg());
        residues.insert(base_half, x_edge);
    }
    for t in &tail_ids {
        if *t != eliminated {
            residues.insert(t.clone(), NcSeries::letter_named(&alphabet, weight, &format!("X:{t}")));
        }
    }
    let mut others = NcSeries::zero(&alphabet, weight);
    for b in graph.star(&base) {
        let id = b.id();
        if id != eliminated {
            others = others.add(&residues[&id]);
        }
    }
    residues.insert(eliminated.clone(), others.neg());

    ResidueAssignment::new(graph.clone(), weight, alphabet, residues, eliminated)
}

/// Transfers an assignment through the contraction of an ordinary edge.
///
/// Going the other way — pulling a component apart into two joined by a
/// new edge — every surviving branch keeps its residue, and the new
/// halves are forced: each one is minus the sum of the other residues at
/// its endpoint, or the vertex balance would break.  Contracting therefore
/// only *forgets* the pair on the contracted edge, and nothing else moves.
/// Because each step is a restriction of the residue map, transfers along
/// different contraction orders to the same graph agree on the nose.
pub fn apply_expansion_rule(
    assignment: &ResidueAssignment,
    edge: &str,
) -> Result<ResidueAssignment, KzError> {
    let (contracted, record) = assignment.graph().contract_edge(edge)?;
    let mut residues = assignment.residues().clone();
    residues.remove(&record.edge);
    residues.remove(&format!("-{}", record.edge));
    ResidueAssignment::new(
        contracted,
        assignment.weight(),
        assignment.alphabet().clone(),
        residues,
        assignment.eliminated_tail().to_string(),
    )
}
