//! Flat logarithmic connections on the components of a degenerate fiber.
//!
//! A maximally degenerate curve is a union of punctured spheres glued at
//! nodes, one sphere per vertex of the dual graph.  The data attached to it
//! here is a *residue assignment*: for every branch (oriented edge half or
//! tail) a residue in a weight-truncated free algebra, subject to two
//! balancing rules:
//!
//! - the residues of the branches at any one vertex sum to zero, because a
//!   logarithmic connection on a sphere has total residue zero, and
//! - the two halves of an ordinary edge carry opposite residues, while the
//!   two halves of a loop are tied together by the substitution rule of
//!   [`loop_substitution`], whose halves sum to `-[T, A]` instead.
//!
//! From an assignment one extracts, per component, a connection form
//! `sum_h X_h dz/(z - x_h)` ([`kz_form_on_component`]), transports flat
//! sections of `d - A` along paths ([`kz_monodromy`]), and composes
//! per-component transports with node rotation factors into limit periods
//! of the degenerating family ([`limit_unipotent_period`]).  The transport
//! between the two finite punctures of a three-punctured sphere has
//! multiple zeta values as coefficients; [`mzv`] computes those directly
//! and serves as the reference the transport engine is tested against.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;

use crate::error::KzError;
use crate::graph::{Branch, StableGraph};
use crate::rings::{NcAlphabet, NcSeries};

pub mod assignment;
pub mod forms;
pub mod limit;
pub mod monodromy;
pub mod mzv;

pub use assignment::{apply_expansion_rule, base_assignment, loop_substitution};
pub use forms::{kz_form_on_component, KzForm};
pub use limit::{approximate_rational, limit_unipotent_period, PathLeg};
pub use monodromy::{kz_monodromy, standard_interval_transport};
pub use mzv::mzv;

/// A residue for every branch of a stable graph, in one shared truncated
/// free algebra.
///
/// The struct is deliberately dumb storage: it checks that the residue map
/// covers exactly the branches of the graph and that all series share one
/// alphabet and cutoff, but the balancing rules are *reported*, not
/// enforced, through [`ResidueAssignment::invariant_violations`], so tests
/// can exhibit broken assignments as easily as valid ones.
#[derive(Debug, Clone)]
pub struct ResidueAssignment {
    graph: StableGraph,
    weight: usize,
    alphabet: Arc<NcAlphabet>,
    residues: BTreeMap<String, NcSeries<BigRational>>,
    /// The tail whose residue is not a free letter but the combination
    /// forced by the vertex rule at the base component.
    eliminated: String,
}

impl ResidueAssignment {
    /// Bundles a graph with a residue per branch.
    ///
    /// Fails if the residue keys do not match the branch ids of the graph
    /// exactly, if some series lives over a different alphabet or cutoff,
    /// or if `eliminated` is not a tail of the graph.
    pub fn new(
        graph: StableGraph,
        weight: usize,
        alphabet: Arc<NcAlphabet>,
        residues: BTreeMap<String, NcSeries<BigRational>>,
        eliminated: String,
    ) -> Result<Self, KzError> {
        let mut expected: Vec<String> = Vec::new();
        for e in graph.edges() {
            expected.push(e.id.clone());
            expected.push(format!("-{}", e.id));
        }
        for t in graph.tails() {
            expected.push(t.id.clone());
        }
        expected.sort();
        let got: Vec<String> = residues.keys().cloned().collect();
        if expected != got {
            return Err(KzError::BadRequest(format!(
                "residue keys do not match the graph's branches: expected \
                 {expected:?}, got {got:?}"
            )));
        }
        for (id, s) in &residues {
            if s.alphabet().as_ref() != alphabet.as_ref() || s.max_weight() != weight {
                return Err(KzError::BadRequest(format!(
                    "residue for `{id}` disagrees with the assignment's \
                     alphabet or weight cutoff"
                )));
            }
        }
        if graph.tails().all(|t| t.id != eliminated) {
            return Err(KzError::BadRequest(format!(
                "eliminated tail `{eliminated}` is not a tail of the graph"
            )));
        }
        Ok(ResidueAssignment {
            graph,
            weight,
            alphabet,
            residues,
            eliminated,
        })
    }

    pub fn graph(&self) -> &StableGraph {
        &self.graph
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn alphabet(&self) -> &Arc<NcAlphabet> {
        &self.alphabet
    }

    /// The tail realized through the vertex rule rather than by a letter.
    pub fn eliminated_tail(&self) -> &str {
        &self.eliminated
    }

    pub fn residue(&self, branch: &str) -> Result<&NcSeries<BigRational>, KzError> {
        self.residues
            .get(branch)
            .ok_or_else(|| KzError::BadRequest(format!("no residue for branch `{branch}`")))
    }

    /// All residues, keyed by branch id.
    pub fn residues(&self) -> &BTreeMap<String, NcSeries<BigRational>> {
        &self.residues
    }

    /// Checks the two balancing rules exactly and describes every failure.
    ///
    /// Rules checked: the residues at each vertex sum to zero, and the two
    /// halves of each *ordinary* edge sum to zero.  Loop halves are
    /// exempt from the second rule — their pair sum is already counted by
    /// the vertex rule at the loop's vertex, and for substituted loops it
    /// equals `-[T, A]`, not zero.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for v in self.graph.vertices() {
            let mut sum = NcSeries::zero(&self.alphabet, self.weight);
            for b in self.graph.star(v) {
                sum = sum.add(&self.residues[&b.id()]);
            }
            if !sum.is_zero() {
                out.push(format!(
                    "residues at vertex `{v}` sum to a nonzero series of order {:?}",
                    sum.order()
                ));
            }
        }
        for e in self.graph.edges() {
            if e.is_loop() {
                continue;
            }
            let pair = self.residues[&e.id].add(&self.residues[&format!("-{}", e.id)]);
            if !pair.is_zero() {
                out.push(format!(
                    "halves of edge `{}` do not carry opposite residues",
                    e.id
                ));
            }
        }
        out
    }

    /// Branch ids at a vertex, in the graph's own (sorted) order.
    pub fn branches_at(&self, vertex: &str) -> Vec<Branch> {
        self.graph.star(vertex)
    }
}
