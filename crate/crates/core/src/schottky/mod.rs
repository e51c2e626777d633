//! Schottky groups glued along a stable graph.
//!
//! A group is built in three steps: one Möbius atom per edge from the
//! branch coordinates and the edge parameter, one free generator per
//! non-tree edge (out along the maximal subtree, across the edge, back),
//! and cached fixed-point data per generator.  Everything downstream — the
//! differentials, the period matrix, the degeneration tables — reads from
//! this one structure.
//!
//! The same construction runs over two rings.  Over the complex numbers the
//! group is an honest Kleinian group and admissibility means the classical
//! disjoint isometric circles.  Over truncated multivariate series the edge
//! parameters are the series variables themselves, convergence is automatic
//! in the parameter ideal, and every cached quantity is exact at the chosen
//! truncation order.

pub mod differentials;
pub mod invariants;
pub mod periods;
pub(crate) mod quad;
pub mod words;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::BigRational;

use crate::error::{GraphError, SchottkyError};
use crate::graph::{EdgePath, OEdge, StableGraph};
use crate::moebius::{self, MoebiusMap, ProjectivePoint, SchottkyRing};
use crate::rings::{rational_to_f64, Ring, SeriesContext, TruncatedSeries};

use self::words::{GenLetter, GenWord};

/// Refuse complex generator sets whose isometric circles come within this
/// fraction of touching.
pub const CIRCLE_MARGIN: f64 = 0.05;

/// Truncation and tolerance knobs shared by the engine operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    /// Longest reduced word entering any truncated sum or product.
    pub max_word_len: usize,
    /// Numeric tolerance for the complex instance (quadrature targets,
    /// pole guards scale from it).
    pub tol: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_word_len: 8,
            tol: 1e-8,
        }
    }
}

/// Exact gluing data: a rational branch coordinate per branch and a nonzero
/// rational parameter per edge.  Ring instances are derived from this exact
/// master copy, so combinatorial leading terms stay available even when the
/// group itself lives over the complex numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct SchottkyParams {
    x: BTreeMap<String, ProjectivePoint<BigRational>>,
    y: BTreeMap<String, BigRational>,
}

impl SchottkyParams {
    /// Assembles and validates parameters for `graph`.  `x` maps branch ids
    /// (an edge id, a `-`-prefixed edge id, or a tail id) to coordinates;
    /// branches in the graph's infinity set are pinned at ∞ and must be
    /// omitted.  `y` maps each edge id to a nonzero parameter.
    pub fn for_graph(
        graph: &StableGraph,
        x: &BTreeMap<String, BigRational>,
        y: &BTreeMap<String, BigRational>,
    ) -> Result<Self, SchottkyError> {
        let mut points = BTreeMap::new();
        for id in x.keys().chain(y.keys()) {
            if graph.branch(id).is_err() {
                return Err(SchottkyError::BadRequest(format!(
                    "parameter refers to unknown branch `{id}`"
                )));
            }
        }
        for b in all_branches(graph) {
            let id = b;
            if graph.infinity().contains(&id) {
                if x.contains_key(&id) {
                    return Err(SchottkyError::DegenerateParameters(format!(
                        "branch `{id}` is marked at infinity but was given a \
                         finite coordinate"
                    )));
                }
                points.insert(id, ProjectivePoint::infinity());
            } else {
                let v = x.get(&id).ok_or_else(|| {
                    SchottkyError::MissingParameter(format!("no coordinate for branch `{id}`"))
                })?;
                points.insert(id, ProjectivePoint::finite(v.clone()));
            }
        }
        let mut ys = BTreeMap::new();
        for e in graph.edges() {
            let v = y.get(&e.id).ok_or_else(|| {
                SchottkyError::MissingParameter(format!("no parameter for edge `{}`", e.id))
            })?;
            if v.is_zero() {
                return Err(SchottkyError::DegenerateParameters(format!(
                    "edge `{}` has parameter 0; degenerate instances go through \
                     the restriction tables instead",
                    e.id
                )));
            }
            ys.insert(e.id.clone(), v.clone());
        }
        Self::from_projective(graph, points, ys)
    }

    /// Raw constructor for already-projective coordinates (used when moving
    /// parameters by a Möbius map, which may exchange finite and infinite
    /// positions).  Checks completeness and per-star distinctness only.
    pub fn from_projective(
        graph: &StableGraph,
        x: BTreeMap<String, ProjectivePoint<BigRational>>,
        y: BTreeMap<String, BigRational>,
    ) -> Result<Self, SchottkyError> {
        for b in all_branches(graph) {
            if !x.contains_key(&b) {
                return Err(SchottkyError::MissingParameter(format!(
                    "no coordinate for branch `{b}`"
                )));
            }
        }
        for e in graph.edges() {
            match y.get(&e.id) {
                None => {
                    return Err(SchottkyError::MissingParameter(format!(
                        "no parameter for edge `{}`",
                        e.id
                    )))
                }
                Some(v) if v.is_zero() => {
                    return Err(SchottkyError::DegenerateParameters(format!(
                        "edge `{}` has parameter 0",
                        e.id
                    )))
                }
                _ => {}
            }
        }
        // Branch coordinates meeting at a vertex must be pairwise distinct;
        // every atom kernel/image argument rests on this.
        for v in graph.vertices() {
            let star = graph.star(v);
            for (k, b1) in star.iter().enumerate() {
                for b2 in star.iter().skip(k + 1) {
                    if x[&b1.id()].same_as(&x[&b2.id()]) {
                        return Err(SchottkyError::DegenerateParameters(format!(
                            "branches `{}` and `{}` at vertex `{v}` share the \
                             coordinate",
                            b1.id(),
                            b2.id()
                        )));
                    }
                }
            }
        }
        Ok(SchottkyParams { x, y })
    }

    pub fn x(&self, branch: &str) -> Result<&ProjectivePoint<BigRational>, SchottkyError> {
        self.x
            .get(branch)
            .ok_or_else(|| SchottkyError::MissingParameter(format!("branch `{branch}`")))
    }

    pub fn y(&self, edge: &str) -> Result<&BigRational, SchottkyError> {
        self.y
            .get(edge)
            .ok_or_else(|| SchottkyError::MissingParameter(format!("edge `{edge}`")))
    }

    pub fn x_map(&self) -> &BTreeMap<String, ProjectivePoint<BigRational>> {
        &self.x
    }

    pub fn y_map(&self) -> &BTreeMap<String, BigRational> {
        &self.y
    }

    /// The same gluing data with every branch coordinate moved by `g`.  The
    /// edge parameters are untouched: the defining relation of each atom is
    /// equivariant, so this produces the conjugated group.
    pub fn transformed(
        &self,
        graph: &StableGraph,
        g: &MoebiusMap<BigRational>,
    ) -> Result<Self, SchottkyError> {
        let moved = self
            .x
            .iter()
            .map(|(k, p)| Ok((k.clone(), g.apply(p).normalized()?)))
            .collect::<Result<BTreeMap<_, _>, crate::error::MoebiusError>>()?;
        Self::from_projective(graph, moved, self.y.clone())
    }

    /// Edge parameters nudged by `step · dir` (absent direction entries are
    /// zero); used by the finite-difference checks.
    pub fn perturbed_y(
        &self,
        graph: &StableGraph,
        dir: &BTreeMap<String, BigRational>,
        step: &BigRational,
    ) -> Result<Self, SchottkyError> {
        let mut y = self.y.clone();
        for (e, d) in dir {
            let slot = y.get_mut(e).ok_or_else(|| {
                SchottkyError::BadRequest(format!("direction refers to unknown edge `{e}`"))
            })?;
            *slot += d * step;
        }
        Self::from_projective(graph, self.x.clone(), y)
    }
}

fn all_branches(graph: &StableGraph) -> Vec<String> {
    let mut out = Vec::new();
    for e in graph.edges() {
        out.push(e.id.clone());
        out.push(format!("-{}", e.id));
    }
    for t in graph.tails() {
        out.push(t.id.clone());
    }
    out.sort();
    out
}

/// Rings the exact rational master data can be lifted into.
pub trait ParamRing: SchottkyRing {
    fn lift(q: &BigRational) -> Self;
}

impl ParamRing for Complex64 {
    fn lift(q: &BigRational) -> Self {
        Complex64::new(rational_to_f64(q), 0.0)
    }
}

impl ParamRing for TruncatedSeries {
    fn lift(q: &BigRational) -> Self {
        TruncatedSeries::scalar(q.clone())
    }
}

fn lift_point<R: ParamRing>(p: &ProjectivePoint<BigRational>) -> ProjectivePoint<R> {
    if p.w.is_zero() {
        ProjectivePoint::infinity()
    } else {
        // Master points are kept normalized, so w = 1 and u is the value.
        ProjectivePoint::finite(R::lift(&(&p.u / &p.w)))
    }
}

/// Fixed-point data of a group element.
#[derive(Debug, Clone)]
pub struct FixedData<R: Ring> {
    pub attractive: ProjectivePoint<R>,
    pub repulsive: ProjectivePoint<R>,
    pub multiplier: R,
}

/// A Schottky group over `R`, with its graph bookkeeping and cached
/// generator data.
#[derive(Debug, Clone)]
pub struct SchottkyGroup<R: SchottkyRing> {
    graph: StableGraph,
    base: String,
    exact: SchottkyParams,
    x: BTreeMap<String, ProjectivePoint<R>>,
    y: BTreeMap<String, R>,
    atoms: BTreeMap<String, MoebiusMap<R>>,
    gen_edges: Vec<String>,
    gen_paths: Vec<EdgePath>,
    gens: Vec<MoebiusMap<R>>,
    gens_inv: Vec<MoebiusMap<R>>,
    fixed: Vec<FixedData<R>>,
    config: EngineConfig,
}

impl SchottkyGroup<Complex64> {
    /// Numeric instance at the exact parameter values.
    pub fn complex(
        graph: &StableGraph,
        params: &SchottkyParams,
        base: &str,
        config: EngineConfig,
    ) -> Result<Self, SchottkyError> {
        let x = params
            .x_map()
            .iter()
            .map(|(k, p)| (k.clone(), lift_point::<Complex64>(p)))
            .collect();
        let y = params
            .y_map()
            .iter()
            .map(|(k, v)| (k.clone(), Complex64::lift(v)))
            .collect();
        Self::build(graph, params, x, y, base, config)
    }
}

impl SchottkyGroup<TruncatedSeries> {
    /// Formal instance: each edge parameter becomes a series variable (in
    /// edge-id order) truncated at total degree `cutoff`, and the branch
    /// coordinates stay exact rational constants.
    pub fn formal(
        graph: &StableGraph,
        params: &SchottkyParams,
        base: &str,
        cutoff: usize,
        config: EngineConfig,
    ) -> Result<(Self, Arc<SeriesContext>), SchottkyError> {
        let vars: Vec<String> = params.y_map().keys().cloned().collect();
        let ctx = TruncatedSeries::context(vars.clone(), cutoff);
        let x = params
            .x_map()
            .iter()
            .map(|(k, p)| (k.clone(), lift_point::<TruncatedSeries>(p)))
            .collect();
        let y = vars
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), TruncatedSeries::var(&ctx, i)))
            .collect();
        let group = Self::build(graph, params, x, y, base, config)?;
        Ok((group, ctx))
    }
}

impl<R: SchottkyRing> SchottkyGroup<R> {
    fn build(
        graph: &StableGraph,
        exact: &SchottkyParams,
        x: BTreeMap<String, ProjectivePoint<R>>,
        y: BTreeMap<String, R>,
        base: &str,
        config: EngineConfig,
    ) -> Result<Self, SchottkyError> {
        let violations = graph.validate_stable();
        if !violations.is_empty() {
            return Err(GraphError::Malformed(violations.join("; ")).into());
        }
        if !graph.has_vertex(base) {
            return Err(GraphError::UnknownVertex(base.to_string()).into());
        }
        let mut atoms = BTreeMap::new();
        for e in graph.edges() {
            let xp = &x[&e.id];
            let xm = &x[&format!("-{}", e.id)];
            atoms.insert(e.id.clone(), moebius::phi_of_edge(xp, xm, &y[&e.id])?);
        }
        let gen_paths = graph.fundamental_group_generators(base)?;
        let tree = graph.maximal_subtree()?;
        let gen_edges: Vec<String> = graph
            .edges()
            .map(|e| e.id.clone())
            .filter(|id| !tree.contains(id))
            .collect();
        let mut gens = Vec::new();
        let mut gens_inv = Vec::new();
        let mut fixed = Vec::new();
        for path in &gen_paths {
            let m = moebius::word_to_map(path, &atoms)?;
            gens_inv.push(m.inverse()?);
            fixed.push(path_fixed_data(path, &atoms)?);
            gens.push(m);
        }
        R::separation_check(&gens, CIRCLE_MARGIN).map_err(SchottkyError::NotSchottky)?;
        Ok(SchottkyGroup {
            graph: graph.clone(),
            base: base.to_string(),
            exact: exact.clone(),
            x,
            y,
            atoms,
            gen_edges,
            gen_paths,
            gens,
            gens_inv,
            fixed,
            config,
        })
    }

    pub fn genus(&self) -> usize {
        self.gens.len()
    }

    pub fn graph(&self) -> &StableGraph {
        &self.graph
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// The exact rational master parameters the instance was built from.
    pub fn exact_params(&self) -> &SchottkyParams {
        &self.exact
    }

    /// Non-tree edge ids, one per generator, in generator order.
    pub fn generator_edges(&self) -> &[String] {
        &self.gen_edges
    }

    pub fn generator_path(&self, i: usize) -> Result<&EdgePath, SchottkyError> {
        self.gen_paths
            .get(i)
            .ok_or(SchottkyError::BadGeneratorIndex(i, self.gens.len()))
    }

    pub fn generator(&self, i: usize) -> Result<&MoebiusMap<R>, SchottkyError> {
        self.gens
            .get(i)
            .ok_or(SchottkyError::BadGeneratorIndex(i, self.gens.len()))
    }

    /// Cached fixed points and multiplier of generator `i`.
    pub fn generator_fixed(&self, i: usize) -> Result<&FixedData<R>, SchottkyError> {
        self.fixed
            .get(i)
            .ok_or(SchottkyError::BadGeneratorIndex(i, self.gens.len()))
    }

    pub fn x_of(&self, branch: &str) -> Result<&ProjectivePoint<R>, SchottkyError> {
        self.x
            .get(branch)
            .ok_or_else(|| SchottkyError::MissingParameter(format!("branch `{branch}`")))
    }

    pub fn y_of(&self, edge: &str) -> Result<&R, SchottkyError> {
        self.y
            .get(edge)
            .ok_or_else(|| SchottkyError::MissingParameter(format!("edge `{edge}`")))
    }

    pub fn atom(&self, oe: &OEdge) -> Result<MoebiusMap<R>, SchottkyError> {
        Ok(moebius::atom_for(oe, &self.atoms)?)
    }

    /// The chart of a component: the map carrying coordinates on the
    /// component of `v` into the base chart, along the subtree.
    pub fn vertex_chart(&self, v: &str) -> Result<MoebiusMap<R>, SchottkyError> {
        Ok(self.path_map(&self.graph.tree_path(v, &self.base)?)?)
    }

    /// The tree path whose map is [`Self::vertex_chart`] of the tail's
    /// vertex.
    pub fn tail_chart_path(&self, tail: &str) -> Result<EdgePath, SchottkyError> {
        Ok(self.graph.tail_path(tail, &self.base)?)
    }

    /// The marked point of a tail, seen in the base chart.
    pub fn tail_point(&self, tail: &str) -> Result<ProjectivePoint<R>, SchottkyError> {
        let chart = self.path_map(&self.tail_chart_path(tail)?)?;
        Ok(chart.apply(self.x_of(tail)?).normalized()?)
    }

    /// The Möbius map of a reduced edge path.
    pub fn path_map(&self, path: &EdgePath) -> Result<MoebiusMap<R>, SchottkyError> {
        Ok(moebius::word_to_map(path, &self.atoms)?)
    }

    fn letter_map(&self, l: GenLetter) -> Result<&MoebiusMap<R>, SchottkyError> {
        let bank = if l.1 { &self.gens } else { &self.gens_inv };
        bank.get(l.0)
            .ok_or(SchottkyError::BadGeneratorIndex(l.0, self.gens.len()))
    }

    /// The matrix of a word in the generators, letters acting left first:
    /// `[a, b]` is the map z ↦ γ_a(γ_b(z)).
    pub fn word_matrix(&self, w: &[GenLetter]) -> Result<MoebiusMap<R>, SchottkyError> {
        let mut acc = MoebiusMap::identity();
        for &l in w {
            acc = acc.compose(self.letter_map(l)?);
        }
        Ok(acc)
    }

    /// The reduced edge path of a word in the generators.  Paths compose
    /// against word order (matrices of paths multiply reversed), so the
    /// letters are traversed right to left.
    pub fn word_path(&self, w: &[GenLetter]) -> Result<EdgePath, SchottkyError> {
        let mut path = EdgePath::empty();
        for &(i, positive) in w.iter().rev() {
            let gen = self
                .gen_paths
                .get(i)
                .ok_or(SchottkyError::BadGeneratorIndex(i, self.gens.len()))?;
            let step = if positive { gen.clone() } else { gen.inverse() };
            path = path.concat(&step);
        }
        Ok(path.reduced())
    }

    /// Fixed points and multiplier of a nontrivial word, computed on the
    /// cyclic reduction of its edge path and transported back.  This is the
    /// only route that stays exact over the formal ring.
    pub fn word_fixed_data(&self, w: &[GenLetter]) -> Result<FixedData<R>, SchottkyError> {
        path_fixed_data(&self.word_path(w)?, &self.atoms)
    }

    /// All reduced words with their matrices, by length then letter order;
    /// matrices grow incrementally along the enumeration.
    pub fn words_with_maps(
        &self,
        max_len: usize,
    ) -> Result<Vec<(GenWord, MoebiusMap<R>)>, SchottkyError> {
        let rank = self.gens.len();
        let alphabet: Vec<GenLetter> =
            (0..rank).flat_map(|i| [(i, true), (i, false)]).collect();
        let mut out: Vec<(GenWord, MoebiusMap<R>)> =
            vec![(Vec::new(), MoebiusMap::identity())];
        let mut level: Vec<(GenWord, MoebiusMap<R>)> =
            vec![(Vec::new(), MoebiusMap::identity())];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for (w, m) in &level {
                for &l in &alphabet {
                    let cancels = w
                        .last()
                        .is_some_and(|&(i, s)| i == l.0 && s != l.1);
                    if !cancels {
                        let mut longer = w.clone();
                        longer.push(l);
                        next.push((longer, m.compose(self.letter_map(l)?)));
                    }
                }
            }
            out.extend(next.iter().cloned());
            level = next;
        }
        Ok(out)
    }

    /// Left-coset representatives of ⟨γ_i⟩ with their matrices.
    pub fn coset_maps(
        &self,
        i: usize,
        max_len: usize,
    ) -> Result<Vec<(GenWord, MoebiusMap<R>)>, SchottkyError> {
        if i >= self.gens.len() {
            return Err(SchottkyError::BadGeneratorIndex(i, self.gens.len()));
        }
        Ok(self
            .words_with_maps(max_len)?
            .into_iter()
            .filter(|(w, _)| w.last().map(|&(k, _)| k) != Some(i))
            .collect())
    }

    /// Double-coset representatives ⟨γ_i⟩\Γ/⟨γ_j⟩ with their matrices.
    pub fn double_coset_maps(
        &self,
        i: usize,
        j: usize,
        max_len: usize,
    ) -> Result<Vec<(GenWord, MoebiusMap<R>)>, SchottkyError> {
        let rank = self.gens.len();
        if i >= rank || j >= rank {
            return Err(SchottkyError::BadGeneratorIndex(i.max(j), rank));
        }
        Ok(self
            .words_with_maps(max_len)?
            .into_iter()
            .filter(|(w, _)| {
                w.is_empty() || (w[0].0 != i && w.last().map(|&(k, _)| k) != Some(j))
            })
            .collect())
    }
}

/// Splits a closed reduced path as `prefix · core · prefix⁻¹` with the core
/// cyclically reduced.
pub(crate) fn cyclic_reduce(path: &EdgePath) -> (EdgePath, EdgePath) {
    let mut core = path.0.clone();
    let mut prefix = Vec::new();
    while core.len() >= 2 && *core.last().unwrap() == core[0].reversed() {
        prefix.push(core.remove(0));
        core.pop();
    }
    (EdgePath(prefix), EdgePath(core))
}

/// Fixed points and multiplier of the map of a closed reduced path.
///
/// The fixed points are found on the cyclically reduced core (where the
/// iteration is unit-safe over the formal ring because consecutive branch
/// coordinates are distinct within each star) and transported back through
/// the conjugating prefix; the multiplier is read off the core, where the
/// attractive eigenvalue is a unit.
pub(crate) fn path_fixed_data<R: SchottkyRing>(
    path: &EdgePath,
    atoms: &BTreeMap<String, MoebiusMap<R>>,
) -> Result<FixedData<R>, SchottkyError> {
    let (prefix, core) = cyclic_reduce(path);
    if core.is_empty() {
        return Err(SchottkyError::BadRequest(
            "word is trivial (a conjugate of the identity has no fixed-point data)".into(),
        ));
    }
    let core_map = moebius::word_to_map(&core, atoms)?;
    let (att, rep) = R::fixed_points(&core_map)?;
    let multiplier = moebius::multiplier_at(&core_map, &att)?;
    if prefix.is_empty() {
        return Ok(FixedData {
            attractive: att.normalized()?,
            repulsive: rep.normalized()?,
            multiplier,
        });
    }
    // path = prefix · core · prefix⁻¹ maps to M(prefix)⁻¹ M(core) M(prefix),
    // so fixed vectors transport through M(prefix)⁻¹ = M(prefix⁻¹) up to the
    // determinant scalar.
    let transport = moebius::word_to_map(&prefix.inverse(), atoms)?;
    Ok(FixedData {
        attractive: transport.apply(&att).normalized()?,
        repulsive: transport.apply(&rep).normalized()?,
        multiplier,
    })
}
