//! Poincaré-type differential series and their degenerate limits.
//!
//! Three families of meromorphic forms live on the quotient curve:
//!
//! - first kind: one per generator, summed over cosets of the cyclic
//!   subgroup it generates, with the generator's fixed-point pair carried
//!   around the orbit;
//! - second kind (pole order ≥ 2, no residue): pulled back from the tail's
//!   component chart and summed over the whole group;
//! - third kind (two simple poles, residues +1/−1): the difference of two
//!   tail points, summed over the whole group.
//!
//! Each summand is stored as a ratio of linear factors in homogeneous
//! coordinates, so nothing ever normalizes an intermediate point: the same
//! expressions evaluate over the complex numbers and over truncated series,
//! where the y → 0 limits of poles routinely land at infinity.
//!
//! The `restriction_table` functions produce the exact rational forms these
//! series collapse to on each component of the degenerate fiber, straight
//! from the graph combinatorics: paths contribute simple poles with ±1
//! residues at the branch coordinates they cross, and higher-order poles
//! stay where their tail lives.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::BigRational;

use crate::error::{MoebiusError, SchottkyError};
use crate::graph::StableGraph;
use crate::moebius::{ProjectivePoint, SchottkyRing};
use crate::par;
use crate::rings::{Ring, TruncatedSeries};

use super::{SchottkyGroup, SchottkyParams};

/// Which differential a series or restriction table represents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DifferentialKind {
    /// Dual to the a-cycle of generator `cycle`.
    First { cycle: usize },
    /// Pole of the given order (≥ 2) at the marked point of `tail`, no
    /// residue.
    Second { tail: String, order: usize },
    /// Simple poles at two marked points, residues +1 and −1.
    Third { tail1: String, tail2: String },
    /// A linear combination of other differentials.
    Combination { label: String },
}

/// One orbit summand, kept in factored homogeneous form.
#[derive(Debug, Clone)]
pub enum Term<R: Ring> {
    /// `num / [(l1.0 + l1.1 z)(l2.0 + l2.1 z)]` — a difference of two
    /// simple poles whose residues are +num/… and −num/… respectively.
    Pair { num: R, l1: (R, R), l2: (R, R) },
    /// `det (top.0 + top.1 z)^{order−2} / (bot.0 + bot.1 z)^{order}` — a
    /// residue-free pole of the given order at the root of `bot`.
    Power {
        det: R,
        top: (R, R),
        bot: (R, R),
        order: usize,
    },
}

fn lin<R: Ring>(l: &(R, R), z: &R) -> R {
    l.0.add(&l.1.mul(z))
}

impl<R: Ring> Term<R> {
    /// The summand's value at `z`.  Errors if a denominator fails to be a
    /// unit — an exact pole hit, or a collision on the degenerate fiber
    /// when `R` is a series ring.
    pub fn eval(&self, z: &R) -> Result<R, SchottkyError> {
        match self {
            Term::Pair { num, l1, l2 } => {
                let den = lin(l1, z).mul(&lin(l2, z));
                if !den.is_unit() {
                    return Err(MoebiusError::AtPole(
                        "pole-pair denominator is not a unit".into(),
                    )
                    .into());
                }
                Ok(num.div(&den)?)
            }
            Term::Power {
                det,
                top,
                bot,
                order,
            } => {
                let b = lin(bot, z);
                if !b.is_unit() {
                    return Err(MoebiusError::AtPole(
                        "power-pole denominator is not a unit".into(),
                    )
                    .into());
                }
                let t = lin(top, z);
                let mut acc = det.clone();
                for _ in 0..order.saturating_sub(2) {
                    acc = acc.mul(&t);
                }
                let mut den = R::one();
                for _ in 0..*order {
                    den = den.mul(&b);
                }
                Ok(acc.div(&den)?)
            }
        }
    }
}

/// A truncated differential series: `f(z) dz` with `f` the sum of the
/// stored terms.
#[derive(Debug, Clone)]
pub struct Differential<R: Ring> {
    pub kind: DifferentialKind,
    terms: Vec<Term<R>>,
}

impl<R: Ring> Differential<R> {
    /// The value of the coefficient function `f` at `z` (the form is
    /// `f(z) dz`).  Terms are evaluated in parallel and summed in a fixed
    /// midpoint tree, so results are bit-identical across thread counts.
    pub fn eval(&self, z: &R) -> Result<R, SchottkyError> {
        let vals = par::try_map(&self.terms, |t| t.eval(z))?;
        Ok(par::tree_sum(&vals))
    }

    /// The orbit summands, for callers that need to treat denominators
    /// specially (degenerate-fiber evaluation works at the term level).
    pub fn terms(&self) -> &[Term<R>] {
        &self.terms
    }

    /// A linear combination `Σ c_p · part_p`, flattened into one term list.
    /// Scaling a term multiplies its prefactor, so no structure is lost and
    /// evaluation order stays deterministic (parts in the order given).
    pub fn combination(label: &str, parts: &[(R, &Differential<R>)]) -> Self {
        let mut terms = Vec::new();
        for (factor, part) in parts {
            for t in &part.terms {
                terms.push(match t {
                    Term::Pair { num, l1, l2 } => Term::Pair {
                        num: num.mul(factor),
                        l1: l1.clone(),
                        l2: l2.clone(),
                    },
                    Term::Power { det, top, bot, order } => Term::Power {
                        det: det.mul(factor),
                        top: top.clone(),
                        bot: bot.clone(),
                        order: *order,
                    },
                });
            }
        }
        Differential {
            kind: DifferentialKind::Combination { label: label.to_string() },
            terms,
        }
    }
}

impl Differential<Complex64> {
    /// Finite pole positions of all stored terms, in term order.  A linear
    /// factor whose leading coefficient is negligible against its constant
    /// one has its root at infinity and is skipped.
    pub fn pole_values(&self) -> Vec<Complex64> {
        let mut out = Vec::new();
        let mut push_root = |l: &(Complex64, Complex64)| {
            if l.1.norm() > 1e-14 * (l.0.norm() + 1.0) {
                out.push(-l.0 / l.1);
            }
        };
        for t in &self.terms {
            match t {
                Term::Pair { l1, l2, .. } => {
                    push_root(l1);
                    push_root(l2);
                }
                Term::Power { bot, .. } => push_root(bot),
            }
        }
        out
    }
}

fn proj_cross<R: Ring>(p: &ProjectivePoint<R>, q: &ProjectivePoint<R>) -> R {
    p.u.mul(&q.w).sub(&q.u.mul(&p.w))
}

/// The series of the first kind attached to generator `cycle`: one summand
/// per coset representative γ, a simple-pole pair at γ applied to the
/// generator's fixed points, with residues +1 / −1.
pub fn first_kind<R: SchottkyRing>(
    group: &SchottkyGroup<R>,
    cycle: usize,
    max_len: usize,
) -> Result<Differential<R>, SchottkyError> {
    let fd = group.generator_fixed(cycle)?;
    let cross = proj_cross(&fd.attractive, &fd.repulsive);
    let mut terms = Vec::new();
    for (w, _) in group.coset_maps(cycle, max_len)? {
        // Rebuild the matrix from the reduced edge path: raw letter
        // products pick up pure powers of the edge parameters from the
        // cancelled backtracking, which kills their order-zero part over
        // series rings.  The term is scale-invariant, so the complex
        // instance is unaffected.
        let m = group.path_map(&group.word_path(&w)?)?;
        let pa = m.apply(&fd.attractive);
        let pb = m.apply(&fd.repulsive);
        terms.push(Term::Pair {
            num: m.det().mul(&cross),
            l1: (pa.u.neg(), pa.w),
            l2: (pb.u.neg(), pb.w),
        });
    }
    Ok(Differential {
        kind: DifferentialKind::First { cycle },
        terms,
    })
}

/// The residue-free series with a single pole of the given order at the
/// tail's marked point, normalized in the tail's own component chart (its
/// restriction to the degenerate fiber is exactly `dz/(z − x_t)^order`
/// there).  Summed over the whole group.
pub fn second_kind<R: SchottkyRing>(
    group: &SchottkyGroup<R>,
    tail: &str,
    order: usize,
    max_len: usize,
) -> Result<Differential<R>, SchottkyError> {
    if order < 2 {
        return Err(SchottkyError::BadRequest(format!(
            "pole order must be at least 2, got {order}; simple poles come in \
             residue pairs (use the two-tail form)"
        )));
    }
    group.graph().tail(tail)?;
    let x_t = group.x_of(tail)?;
    let x_val = if x_t.w.is_zero() {
        None
    } else {
        Some(x_t.value()?)
    };
    let chart_inv = group.tail_chart_path(tail)?.inverse();
    let mut terms = Vec::new();
    for (w, _) in group.words_with_maps(max_len)? {
        // Work on the reduced composite path: over series rings the raw
        // product of the word matrix with the inverse chart can vanish at
        // y = 0, while the reduced path's matrix never does, and the term
        // is scale-invariant under the cancelled determinant factors.
        let path = group.word_path(&w)?.concat(&chart_inv).reduced();
        let m = group.path_map(&path)?;
        let det = m.det().clone();
        let term = match &x_val {
            Some(x) => Term::Power {
                det,
                top: (m.d.clone(), m.c.clone()),
                bot: (m.b.sub(&x.mul(&m.d)), m.a.sub(&x.mul(&m.c))),
                order,
            },
            None => Term::Power {
                det,
                top: (m.b.clone(), m.a.clone()),
                bot: (m.d.clone(), m.c.clone()),
                order,
            },
        };
        terms.push(term);
    }
    Ok(Differential {
        kind: DifferentialKind::Second {
            tail: tail.to_string(),
            order,
        },
        terms,
    })
}

/// The series with simple poles at the two tail points (residues +1 at the
/// first, −1 at the second), summed over the whole group.
pub fn third_kind<R: SchottkyRing>(
    group: &SchottkyGroup<R>,
    tail1: &str,
    tail2: &str,
    max_len: usize,
) -> Result<Differential<R>, SchottkyError> {
    if tail1 == tail2 {
        return Err(SchottkyError::BadRequest(
            "the two tails must differ (the form would vanish identically)".into(),
        ));
    }
    let p1 = group.tail_point(tail1)?;
    let p2 = group.tail_point(tail2)?;
    let cross = proj_cross(&p1, &p2);
    let mut terms = Vec::new();
    for (w, _) in group.words_with_maps(max_len)? {
        // Reduced-path matrices for the same reason as in `first_kind`:
        // raw products of arm-conjugated letters vanish at order zero.
        let m = group.path_map(&group.word_path(&w)?)?;
        // D(M, p, z) = (az+b)w_p − (cz+d)u_p vanishes at z = M⁻¹(p).
        let factor = |p: &ProjectivePoint<R>| {
            (
                m.b.mul(&p.w).sub(&m.d.mul(&p.u)),
                m.a.mul(&p.w).sub(&m.c.mul(&p.u)),
            )
        };
        terms.push(Term::Pair {
            num: m.det().mul(&cross),
            l1: factor(&p1),
            l2: factor(&p2),
        });
    }
    Ok(Differential {
        kind: DifferentialKind::Third {
            tail1: tail1.to_string(),
            tail2: tail2.to_string(),
        },
        terms,
    })
}

/// The exact rational form a differential restricts to on one component of
/// the degenerate fiber: a finite list of poles plus, for a higher-order
/// pole sitting at infinity, a polynomial part.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComponentForm {
    /// `(location, order, coefficient)`: the summand `c/(z − x)^k dz`.
    pub poles: Vec<(BigRational, usize, BigRational)>,
    /// `(order k, coefficient c)`: the summand `c·z^{k−2} dz` coming from
    /// an order-`k` pole at infinity.
    pub infinity_power: Option<(usize, BigRational)>,
}

impl ComponentForm {
    pub fn is_zero(&self) -> bool {
        self.poles.is_empty() && self.infinity_power.is_none()
    }

    /// Value of the coefficient function at a rational sample point.
    pub fn eval(&self, z: &BigRational) -> Result<BigRational, SchottkyError> {
        let mut acc = BigRational::from_i64(0);
        for (x, k, c) in &self.poles {
            let d = z - x;
            if Ring::is_zero(&d) {
                return Err(MoebiusError::AtPole(format!(
                    "sample point {z} hits the pole at {x}"
                ))
                .into());
            }
            let mut den = BigRational::from_i64(1);
            for _ in 0..*k {
                den = den.mul(&d);
            }
            acc = acc.add(&c.div(&den)?);
        }
        if let Some((k, c)) = &self.infinity_power {
            let mut pow = c.clone();
            for _ in 0..k.saturating_sub(2) {
                pow = pow.mul(z);
            }
            acc = acc.add(&pow);
        }
        Ok(acc)
    }

    /// Residue at a finite point, or at infinity when `at` is `None`.
    pub fn residue_at(&self, at: Option<&BigRational>) -> BigRational {
        match at {
            Some(x) => self
                .poles
                .iter()
                .filter(|(loc, k, _)| *k == 1 && loc == x)
                .fold(BigRational::from_i64(0), |acc, (_, _, c)| acc.add(c)),
            // The form is rational with simple poles carrying all residues,
            // so the residue at infinity balances the finite ones.
            None => self
                .poles
                .iter()
                .filter(|(_, k, _)| *k == 1)
                .fold(BigRational::from_i64(0), |acc, (_, _, c)| acc.add(c))
                .neg(),
        }
    }
}

fn form_from_residues(acc: BTreeMap<BigRational, BigRational>) -> ComponentForm {
    ComponentForm {
        poles: acc
            .into_iter()
            .filter(|(_, c)| !Ring::is_zero(c))
            .map(|(x, c)| (x, 1, c))
            .collect(),
        infinity_power: None,
    }
}

/// Accumulate `delta` worth of residue at a projective point; poles at
/// infinity carry no affine summand (their residue is recovered from the
/// balance at infinity), so they are dropped here.
fn add_residue(
    acc: &mut BTreeMap<BigRational, BigRational>,
    x: &ProjectivePoint<BigRational>,
    delta: i64,
) -> Result<(), SchottkyError> {
    if x.w.is_unit() {
        let loc = x.value()?;
        let slot = acc.entry(loc).or_insert_with(|| BigRational::from_i64(0));
        *slot = slot.add(&BigRational::from_i64(delta));
    }
    Ok(())
}

/// What the tail looks like from vertex `v` on the degenerate fiber: its
/// own marked point if it lives at `v`, otherwise the coordinate of the
/// branch at `v` that points toward it along the subtree.
fn toward_point(
    graph: &StableGraph,
    params: &SchottkyParams,
    v: &str,
    tail: &str,
) -> Result<ProjectivePoint<BigRational>, SchottkyError> {
    let home = graph.tail(tail)?.vertex.clone();
    if home == v {
        return Ok(params.x(tail)?.clone());
    }
    let path = graph.tree_path(v, &home)?;
    let first = path.0.first().ok_or_else(|| {
        SchottkyError::BadRequest(format!(
            "empty tree path from `{v}` to the vertex of tail `{tail}`"
        ))
    })?;
    Ok(params.x(&first.reversed().id())?.clone())
}

/// The exact value at `zeta` of a series differential's restriction to the
/// base component of the fiber over y = 0.  (To restrict to another
/// component, rebuild the group based at that component's vertex.)
///
/// Summands are Laurent in the gluing parameters: a term whose pole
/// collides with a node of the base component has a positive-valuation
/// denominator even though the summed restriction stays finite.  Each term
/// is divided exactly after shifting out its denominator's valuation
/// monomial, the pieces accumulate with signed exponents, and everything
/// below degree zero must cancel before the constant is read off.  Errors
/// name the first obstruction: a denominator that truncates to zero or a
/// collision too deep for the cutoff (both cured by a larger cutoff or
/// shorter words), or a genuine pole of the restriction at `zeta`.
pub fn restriction_value(
    diff: &Differential<TruncatedSeries>,
    zeta: &BigRational,
) -> Result<BigRational, SchottkyError> {
    let ctx = diff
        .terms
        .iter()
        .find_map(|t| match t {
            Term::Pair { num, .. } => num.ctx().cloned(),
            Term::Power { det, .. } => det.ctx().cloned(),
        })
        .ok_or_else(|| {
            SchottkyError::BadRequest(
                "restriction of a differential with no series context".into(),
            )
        })?;
    let nvars = ctx.vars.len();
    let cutoff = ctx.cutoff;
    let zc = TruncatedSeries::constant_in(&ctx, zeta.clone());
    let mut acc: BTreeMap<Vec<i64>, BigRational> = BTreeMap::new();
    for t in diff.terms() {
        let (num, den) = match t {
            Term::Pair { num, l1, l2 } => (num.clone(), lin(l1, &zc).mul(&lin(l2, &zc))),
            Term::Power {
                det,
                top,
                bot,
                order,
            } => {
                let tv = lin(top, &zc);
                let mut num = det.clone();
                for _ in 0..order.saturating_sub(2) {
                    num = num.mul(&tv);
                }
                let bv = lin(bot, &zc);
                let mut den = bv.clone();
                for _ in 1..*order {
                    den = den.mul(&bv);
                }
                (num, den)
            }
        };
        accumulate_laurent(&mut acc, &num, &den, nvars, cutoff)?;
    }
    for (e, c) in &acc {
        if e.iter().any(|&x| x < 0) && !c.is_zero() {
            return Err(MoebiusError::AtPole(format!(
                "the restriction has a pole at {zeta}"
            ))
            .into());
        }
    }
    Ok(acc
        .get(&vec![0i64; nvars])
        .cloned()
        .unwrap_or_else(<BigRational as Ring>::zero))
}

/// Adds the Laurent expansion of `num/den` around y = 0 into `acc`, keyed
/// by signed exponent vectors.  `den` must factor as a monomial times a
/// unit; the quotient by the unit part is computed by graded forward
/// substitution, which is exact to total degree `cutoff − deg(monomial)`.
fn accumulate_laurent(
    acc: &mut BTreeMap<Vec<i64>, BigRational>,
    num: &TruncatedSeries,
    den: &TruncatedSeries,
    nvars: usize,
    cutoff: usize,
) -> Result<(), SchottkyError> {
    if den.is_zero() {
        return Err(SchottkyError::Restriction(format!(
            "an orbit term's denominator truncates to zero at cutoff {cutoff}"
        )));
    }
    let mut alpha = vec![u16::MAX; nvars];
    for (e, _) in den.iter_terms() {
        for (a, &x) in alpha.iter_mut().zip(e.iter()) {
            *a = (*a).min(x);
        }
    }
    let lead = den.coeff(&alpha);
    if lead.is_zero() {
        return Err(SchottkyError::Restriction(
            "an orbit term's denominator has no leading monomial, so its node collision \
             cannot be shifted out exactly"
                .into(),
        ));
    }
    let adeg: usize = alpha.iter().map(|&x| x as usize).sum();
    if 2 * adeg > cutoff {
        return Err(SchottkyError::Restriction(format!(
            "cutoff {cutoff} is too small to resolve a node collision of depth {adeg}"
        )));
    }
    // Divide by den/y^alpha (a unit) term by term, in an order where every
    // exponent is preceded by all exponents it dominates.
    let vhat: BTreeMap<Vec<u16>, BigRational> = den
        .iter_terms()
        .map(|(e, c)| {
            let shifted: Vec<u16> = e.iter().zip(alpha.iter()).map(|(&x, &a)| x - a).collect();
            (shifted, c.clone())
        })
        .collect();
    let mut quot: BTreeMap<Vec<u16>, BigRational> = BTreeMap::new();
    for e in graded_exponents(nvars, cutoff - adeg) {
        let mut val = num.coeff(&e);
        for (f, vc) in &vhat {
            if f.iter().all(|&x| x == 0) {
                continue;
            }
            if f.iter().zip(e.iter()).all(|(&fx, &ex)| fx <= ex) {
                let rest: Vec<u16> =
                    e.iter().zip(f.iter()).map(|(&ex, &fx)| ex - fx).collect();
                if let Some(qc) = quot.get(&rest) {
                    val = val.sub(&vc.mul(qc));
                }
            }
        }
        if val.is_zero() {
            continue;
        }
        let qc = val.div(&lead).expect("leading coefficient is a unit");
        let signed: Vec<i64> = e
            .iter()
            .zip(alpha.iter())
            .map(|(&ex, &ax)| ex as i64 - ax as i64)
            .collect();
        let slot = acc.entry(signed).or_insert_with(<BigRational as Ring>::zero);
        *slot = slot.add(&qc);
        quot.insert(e, qc);
    }
    Ok(())
}

/// Exponent vectors of `n` variables with total degree ≤ `max`, grouped by
/// degree so that forward substitution sees dominated exponents first.
fn graded_exponents(n: usize, max: usize) -> Vec<Vec<u16>> {
    fn fill(out: &mut Vec<Vec<u16>>, cur: &mut Vec<u16>, i: usize, rem: usize) {
        if i + 1 == cur.len() {
            cur[i] = rem as u16;
            out.push(cur.clone());
            return;
        }
        for k in 0..=rem {
            cur[i] = k as u16;
            fill(out, cur, i + 1, rem - k);
        }
    }
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut cur = vec![0u16; n];
    for d in 0..=max {
        fill(&mut out, &mut cur, 0, d);
    }
    out
}

/// The exact restriction of a differential to every component of the
/// degenerate fiber, from the graph combinatorics alone.  Components where
/// the form vanishes are omitted.
pub fn restriction_table(
    graph: &StableGraph,
    params: &SchottkyParams,
    base: &str,
    kind: &DifferentialKind,
) -> Result<BTreeMap<String, ComponentForm>, SchottkyError> {
    let mut table: BTreeMap<String, ComponentForm> = BTreeMap::new();
    match kind {
        DifferentialKind::First { cycle } => {
            let paths = graph.fundamental_group_generators(base)?;
            let path = paths
                .get(*cycle)
                .ok_or(SchottkyError::BadGeneratorIndex(*cycle, paths.len()))?;
            // Crossing an edge deposits residue +1 at the head branch and
            // −1 at the tail branch of that crossing.
            let mut acc: BTreeMap<String, BTreeMap<BigRational, BigRational>> = BTreeMap::new();
            for oe in &path.0 {
                let head_v = graph.terminal(oe)?.clone();
                let tail_v = graph.initial(oe)?.clone();
                add_residue(
                    acc.entry(head_v).or_default(),
                    params.x(&oe.id())?,
                    1,
                )?;
                add_residue(
                    acc.entry(tail_v).or_default(),
                    params.x(&oe.reversed().id())?,
                    -1,
                )?;
            }
            for (v, residues) in acc {
                let form = form_from_residues(residues);
                if !form.is_zero() {
                    table.insert(v, form);
                }
            }
        }
        DifferentialKind::Second { tail, order } => {
            if *order < 2 {
                return Err(SchottkyError::BadRequest(
                    "pole order must be at least 2".into(),
                ));
            }
            let v = graph.tail(tail)?.vertex.clone();
            let x = params.x(tail)?;
            let form = if x.w.is_unit() {
                ComponentForm {
                    poles: vec![(x.value()?, *order, BigRational::from_i64(1))],
                    infinity_power: None,
                }
            } else {
                ComponentForm {
                    poles: Vec::new(),
                    infinity_power: Some((*order, BigRational::from_i64(1))),
                }
            };
            table.insert(v, form);
        }
        DifferentialKind::Third { tail1, tail2 } => {
            if tail1 == tail2 {
                return Err(SchottkyError::BadRequest("the two tails must differ".into()));
            }
            for v in graph.vertices() {
                let q1 = toward_point(graph, params, v, tail1)?;
                let q2 = toward_point(graph, params, v, tail2)?;
                if q1.same_as(&q2) {
                    continue; // both tails seen through the same branch
                }
                let mut residues = BTreeMap::new();
                add_residue(&mut residues, &q1, 1)?;
                add_residue(&mut residues, &q2, -1)?;
                let form = form_from_residues(residues);
                if !form.is_zero() {
                    table.insert(v.clone(), form);
                }
            }
        }
        DifferentialKind::Combination { .. } => {
            return Err(SchottkyError::BadRequest(
                "restriction tables are only defined for the basic kinds".into(),
            ));
        }
    }
    Ok(table)
}

/// Per-edge residue balance on the degenerate fiber: the residues at the
/// two branch points of each edge must cancel.  Returns the (expected
/// zero) sums keyed by edge id.
pub fn node_residue_balance(
    table: &BTreeMap<String, ComponentForm>,
    graph: &StableGraph,
    params: &SchottkyParams,
) -> Result<BTreeMap<String, BigRational>, SchottkyError> {
    let zero_form = ComponentForm::default();
    let mut out = BTreeMap::new();
    for e in graph.edges() {
        let mut total = BigRational::from_i64(0);
        for oe in [crate::graph::OEdge::pos(&e.id), crate::graph::OEdge::neg(&e.id)] {
            let v = graph.terminal(&oe)?;
            let form = table.get(v).unwrap_or(&zero_form);
            let x = params.x(&oe.id())?;
            let res = if x.w.is_unit() {
                form.residue_at(Some(&x.value()?))
            } else {
                form.residue_at(None)
            };
            total = total.add(&res);
        }
        out.insert(e.id.clone(), total);
    }
    Ok(out)
}
