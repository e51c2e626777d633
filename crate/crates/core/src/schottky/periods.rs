//! Period matrices and cycle integrals.
//!
//! The multiplicative period matrix comes from cross-ratio products over
//! double-coset representatives and works over any coefficient ring; the
//! cycle integrals are numeric (complex instances only) and pair stored
//! differentials with the standard homology basis: `a_i` circles the
//! attractive fixed point of generator `i`, `b_i` runs from a basepoint to
//! its image under generator `i`.  Both integrals pick their geometry
//! deterministically from the instance, so repeated runs are bit-identical.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::BigRational;

use crate::error::SchottkyError;
use crate::graph::StableGraph;
use crate::moebius::{self, MoebiusMap, ProjectivePoint, SchottkyRing};
use crate::par;
use crate::rings::{rational_to_f64, Ring};
use crate::schottky::differentials::{first_kind, second_kind, Differential};
use crate::schottky::{cyclic_reduce, quad, EngineConfig, SchottkyGroup, SchottkyParams};

/// Multiplicative period matrix truncated at word length `max_len`.
///
/// Entry `(i, j)` multiplies the cross-ratios of the fixed-point pair of
/// generator `i` against the translated pair of generator `j`, one factor
/// per double-coset representative.  On the diagonal the identity
/// representative is replaced by the bare multiplier of the generator (its
/// cross-ratio would vanish), which also makes the genus-one matrix equal
/// to the edge parameter on the nose.
pub fn period_matrix<R: SchottkyRing>(
    group: &SchottkyGroup<R>,
    max_len: usize,
) -> Result<Vec<Vec<R>>, SchottkyError> {
    let g = group.genus();
    let mut rows = Vec::with_capacity(g);
    for i in 0..g {
        let fi = group.generator_fixed(i)?;
        let mut row = Vec::with_capacity(g);
        for j in 0..g {
            let fj = group.generator_fixed(j)?;
            let reps = group.double_coset_maps(i, j, max_len)?;
            let factors = par::try_map(&reps, |(w, m)| {
                if i == j && w.is_empty() {
                    // The identity representative's cross-ratio would
                    // vanish; its slot carries the bare multiplier instead.
                    return Ok(fi.multiplier.clone());
                }
                moebius::cross_ratio(
                    &fi.attractive,
                    &fi.repulsive,
                    &m.apply(&fj.attractive),
                    &m.apply(&fj.repulsive),
                )
                .map_err(|e| {
                    // Over the formal ring this fires for generators whose
                    // loop sits behind an arm: their order-zero matrices are
                    // nilpotent, powers shed leading orders, and the factor
                    // denominators stop being units.  The complex instance
                    // has no such restriction.
                    SchottkyError::DegenerateFactor(format!(
                        "period factor for word {} in entry ({i},{j}): {e}",
                        crate::schottky::words::word_name(w)
                    ))
                })
            })?;
            row.push(par::tree_product(&factors));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// The constant terms of the fixed points of generator `i`, read off the
/// graph without building any group.  A cyclically reduced generator loop
/// keeps its endpoints apart — the attractive one at the coordinate of the
/// loop's last branch, the repulsive one at the reversed first branch — but
/// a conjugating prefix collapses both onto the branch point it enters the
/// loop through.
pub fn degenerate_fixed_values(
    graph: &StableGraph,
    params: &SchottkyParams,
    base: &str,
    i: usize,
) -> Result<(ProjectivePoint<BigRational>, ProjectivePoint<BigRational>), SchottkyError> {
    let paths = graph.fundamental_group_generators(base)?;
    let path = paths
        .get(i)
        .ok_or(SchottkyError::BadGeneratorIndex(i, paths.len()))?;
    let (prefix, core) = cyclic_reduce(path);
    if core.is_empty() {
        return Err(SchottkyError::BadRequest(
            "generator path is trivial".into(),
        ));
    }
    if let Some(first) = prefix.0.first() {
        let p = params.x(&first.reversed().id())?.clone();
        return Ok((p.clone(), p));
    }
    let att = params.x(&core.0.last().unwrap().id())?.clone();
    let rep = params.x(&core.0[0].reversed().id())?.clone();
    Ok((att, rep))
}

/// Antiderivative of the order-`k` elementary form with its pole at
/// `pole`, evaluated at `p`: for a finite pole this is
/// `(z - pole)^(1-k) / (1 - k)` (zero at infinity), for a pole at infinity
/// it is `z^(k-1) / (k-1)`.
fn elementary_antiderivative(
    p: &ProjectivePoint<BigRational>,
    pole: &ProjectivePoint<BigRational>,
    k: usize,
) -> Result<BigRational, SchottkyError> {
    let km1 = BigRational::from_i64(k as i64 - 1);
    if pole.w.is_unit() {
        if !p.w.is_unit() {
            return Ok(BigRational::from_i64(0));
        }
        let d = p.value()?.sub(&pole.value()?);
        if Ring::is_zero(&d) {
            return Err(SchottkyError::DegenerateFactor(
                "cycle endpoint degenerates onto the pole".into(),
            ));
        }
        let mut pw = BigRational::from_i64(1);
        for _ in 0..k - 1 {
            pw = pw.mul(&d);
        }
        Ok(BigRational::from_i64(-1) / (km1 * pw))
    } else {
        if !p.w.is_unit() {
            return Err(SchottkyError::DegenerateFactor(
                "cycle endpoint and pole both at infinity".into(),
            ));
        }
        let v = p.value()?;
        let mut pw = BigRational::from_i64(1);
        for _ in 0..k - 1 {
            pw = pw.mul(&v);
        }
        Ok(pw / km1)
    }
}

/// Exact limit of the `b`-period matrix of the pole-order family
/// `ω_(tail,2), …, ω_(tail,g+1)` as every edge parameter goes to zero.
///
/// In that limit each `b`-cycle pinches to an arc between the constant
/// terms of the fixed-point pair of its generator, and the forms collapse
/// to their elementary representatives, so entry `(i, k)` is just the
/// antiderivative difference between the two endpoints.  Rows of a
/// generator whose endpoints collapse onto a single branch point (any
/// generator conjugated in from elsewhere in the graph) vanish, and the
/// matrix is then singular — dualizing near such a fiber needs a base
/// vertex carrying the loops itself.
pub fn eta_constant_matrix(
    graph: &StableGraph,
    params: &SchottkyParams,
    base: &str,
    tail: &str,
) -> Result<Vec<Vec<BigRational>>, SchottkyError> {
    let pole = params.x(tail)?;
    let g = graph.fundamental_group_generators(base)?.len();
    let mut out = Vec::with_capacity(g);
    for i in 0..g {
        let (att, rep) = degenerate_fixed_values(graph, params, base, i)?;
        let mut row = Vec::with_capacity(g);
        for k in 2..=g + 1 {
            let hi = elementary_antiderivative(&att, pole, k)?;
            let lo = elementary_antiderivative(&rep, pole, k)?;
            row.push(hi.sub(&lo));
        }
        out.push(row);
    }
    Ok(out)
}

fn value_of(p: &ProjectivePoint<Complex64>) -> Option<Complex64> {
    if p.w.is_unit() {
        p.value().ok()
    } else {
        None
    }
}

/// Isometric disk `|cz + d| <= sqrt|det|` of a map: center `-d/c`, radius
/// `sqrt|det| / |c|`.  `None` for a (numerically) affine map, which fixes
/// infinity and has no such disk.
fn isometric_disk(m: &MoebiusMap<Complex64>) -> Option<(Complex64, f64)> {
    let scale = [m.a, m.b, m.c, m.d]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if m.c.norm() <= 1e-12 * scale {
        return None;
    }
    Some((-m.d / m.c, m.det().norm().sqrt() / m.c.norm()))
}

/// All isometric disks of the generators and their inverses.
fn generator_disks(
    group: &SchottkyGroup<Complex64>,
) -> Result<Vec<(Complex64, f64)>, SchottkyError> {
    let mut disks = Vec::new();
    for i in 0..group.genus() {
        let m = group.generator(i)?;
        disks.extend(isometric_disk(m));
        disks.extend(isometric_disk(&m.inverse()?));
    }
    Ok(disks)
}

/// Integral of `diff` around the `a`-cycle of generator `j`: a circle about
/// the attractive fixed point, with its radius the geometric mean between
/// the pole cluster inside the isometric disk of the inverse generator and
/// everything else.  Orbit poles come in pairs that are either both inside
/// or both outside that disk, so the truncated orbit sums integrate to
/// their exact values here: `2πi δ_ij` for the cycle duals, `0` for the
/// pole-order family and its combinations.
pub fn a_cycle_integral(
    group: &SchottkyGroup<Complex64>,
    diff: &Differential<Complex64>,
    j: usize,
) -> Result<Complex64, SchottkyError> {
    let fd = group.generator_fixed(j)?;
    let alpha = value_of(&fd.attractive).ok_or_else(|| {
        SchottkyError::BadRequest(
            "attractive fixed point at infinity; conjugate the instance first".into(),
        )
    })?;
    let disk = isometric_disk(&group.generator(j)?.inverse()?);
    let mut inner: f64 = 0.0;
    let mut outer = f64::INFINITY;
    for p in diff.pole_values() {
        let d = (p - alpha).norm();
        let clustered = match disk {
            Some((c, r)) => (p - c).norm() <= 1.01 * r,
            // An affine generator contracts the whole plane toward its
            // finite fixed point; only poles already sitting there count.
            None => d <= 1e-9 * (1.0 + alpha.norm()),
        };
        if clustered {
            inner = inner.max(d);
        } else {
            outer = outer.min(d);
        }
    }
    let radius = if outer.is_infinite() {
        1.0_f64.max(2.0 * inner)
    } else if inner == 0.0 {
        outer / 2.0
    } else if outer / inner < 1.44 {
        return Err(SchottkyError::ContourNearPole(format!(
            "pole separation ratio {:.3} around generator {} leaves no room for a contour",
            outer / inner,
            j
        )));
    } else {
        (inner * outer).sqrt()
    };
    quad::integrate_circle(|z| diff.eval(&z), alpha, radius, group.config().tol)
}

/// A deterministic basepoint for `b`-cycle paths: the centroid of the
/// finite generator fixed points, lifted off the real locus by a fixed
/// fraction of their spread, then pushed out of every isometric disk.
pub fn default_basepoint(group: &SchottkyGroup<Complex64>) -> Result<Complex64, SchottkyError> {
    let mut pts = Vec::new();
    for i in 0..group.genus() {
        let fd = group.generator_fixed(i)?;
        for p in [&fd.attractive, &fd.repulsive] {
            if let Some(v) = value_of(p) {
                pts.push(v);
            }
        }
    }
    let centroid = if pts.is_empty() {
        Complex64::new(0.0, 0.0)
    } else {
        pts.iter().sum::<Complex64>() / pts.len() as f64
    };
    let spread = pts
        .iter()
        .map(|p| (p - centroid).norm())
        .fold(0.0, f64::max)
        .max(1.0);
    let mut z0 = centroid + Complex64::new(0.0, 0.618 * spread);
    let disks = generator_disks(group)?;
    // A push can land inside a neighbouring disk, so sweep a few times.
    for _ in 0..4 {
        for &(c, r) in &disks {
            let d = (z0 - c).norm();
            if d < 1.2 * r {
                let dir = if d <= 1e-12 {
                    Complex64::new(0.0, 1.0)
                } else {
                    (z0 - c) / d
                };
                z0 = c + dir * (1.3 * r);
            }
        }
    }
    Ok(z0)
}

fn dist_to_segment(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let denom = ab.norm_sqr();
    if denom <= 1e-300 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / denom).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Integral of `diff` from the basepoint to its image under generator `i`
/// (the `b`-cycle pairing).  The straight segment is used when its interior
/// stays clear of poles; otherwise one perpendicular detour to each side is
/// tried before giving up.  Poles near the *endpoints* are expected — the
/// image point always lands inside a pole cluster — and are left to the
/// adaptive quadrature, which resolves them by bisection.
pub fn b_period(
    group: &SchottkyGroup<Complex64>,
    diff: &Differential<Complex64>,
    i: usize,
    basepoint: Option<Complex64>,
) -> Result<Complex64, SchottkyError> {
    let z0 = match basepoint {
        Some(z) => z,
        None => default_basepoint(group)?,
    };
    let z1 = group.generator(i)?.apply_value(&z0)?;
    let len = (z1 - z0).norm();
    if len <= 1e-12 {
        return Err(SchottkyError::BadRequest(
            "basepoint is fixed by the generator".into(),
        ));
    }
    let tol = group.config().tol;
    let poles = diff.pole_values();
    if poles
        .iter()
        .any(|p| (p - z0).norm().min((p - z1).norm()) < 1e-9 * (1.0 + len))
    {
        return Err(SchottkyError::ContourNearPole(
            "basepoint or its image sits on a pole".into(),
        ));
    }
    // Clearance of a candidate segment, ignoring the unavoidable clusters
    // around the path endpoints.
    let clearance = |a: Complex64, b: Complex64| {
        poles
            .iter()
            .filter(|p| (*p - z0).norm().min((*p - z1).norm()) >= 0.05 * len)
            .map(|&p| dist_to_segment(p, a, b))
            .fold(f64::INFINITY, f64::min)
    };
    let guard = 1e-3 * len;
    if clearance(z0, z1) > guard {
        if let Ok(v) = quad::integrate_segment(|z| diff.eval(&z), z0, z1, tol) {
            return Ok(v);
        }
    }
    let normal = Complex64::new(0.0, 1.0) * (z1 - z0) / len;
    for side in [1.0, -1.0] {
        let mid = (z0 + z1) / 2.0 + normal * (0.5 * len * side);
        if clearance(z0, mid).min(clearance(mid, z1)) <= guard {
            continue;
        }
        let first = quad::integrate_segment(|z| diff.eval(&z), z0, mid, tol);
        let second = quad::integrate_segment(|z| diff.eval(&z), mid, z1, tol);
        if let (Ok(u), Ok(v)) = (first, second) {
            return Ok(u + v);
        }
    }
    Err(SchottkyError::QuadratureFailed(
        "no pole-free path from the basepoint to its image".into(),
    ))
}

/// `b`-periods of the cycle-dual family: entry `(i, j)` integrates the
/// `j`-th dual along the `i`-th cycle, all from one shared basepoint.
pub fn first_kind_b_periods(
    group: &SchottkyGroup<Complex64>,
    max_len: usize,
    basepoint: Option<Complex64>,
) -> Result<Vec<Vec<Complex64>>, SchottkyError> {
    let g = group.genus();
    let z0 = match basepoint {
        Some(z) => z,
        None => default_basepoint(group)?,
    };
    let mut out = vec![vec![Complex64::new(0.0, 0.0); g]; g];
    for j in 0..g {
        let om = first_kind(group, j, max_len)?;
        for (i, row) in out.iter_mut().enumerate() {
            row[j] = b_period(group, &om, i, Some(z0))?;
        }
    }
    Ok(out)
}

/// Dense inverse by Gauss-Jordan elimination with partial pivoting.  The
/// matrices here are genus-sized, so nothing smarter is warranted.
fn invert_complex(m: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>, SchottkyError> {
    let n = m.len();
    let mut a: Vec<Vec<Complex64>> = m.to_vec();
    if a.iter().any(|row| row.len() != n) {
        return Err(SchottkyError::BadRequest("matrix is not square".into()));
    }
    let scale = a
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut inv: Vec<Vec<Complex64>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| Complex64::new(if r == c { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r1, &r2| a[r1][col].norm().total_cmp(&a[r2][col].norm()))
            .unwrap();
        if a[piv][col].norm() <= 1e-13 * scale {
            return Err(SchottkyError::SingularSystem(format!(
                "pivot {col} vanished while inverting a period matrix"
            )));
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for x in a[col].iter_mut() {
            *x /= d;
        }
        for x in inv[col].iter_mut() {
            *x /= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col];
            if f.norm() == 0.0 {
                continue;
            }
            for c in 0..n {
                let ac = a[col][c];
                let ic = inv[col][c];
                a[r][c] -= f * ac;
                inv[r][c] -= f * ic;
            }
        }
    }
    Ok(inv)
}

/// The pole-order family rebuilt as a dual basis: `η_j = Σ_k C_kj ω_(tail,k+2)`
/// with `b`-periods `∫_(b_i) η_j = δ_ij`.
pub struct EtaBasis {
    /// The combined forms `η_1, …, η_g`.
    pub eta: Vec<Differential<Complex64>>,
    /// Mixing coefficients; column `j` holds the recipe for `η_(j+1)`.
    pub coeffs: Vec<Vec<Complex64>>,
    /// The raw `b`-period matrix of the pole-order family, row per cycle.
    pub raw_periods: Vec<Vec<Complex64>>,
    /// The basepoint the periods were measured from.
    pub basepoint: Complex64,
}

/// Builds the dual family above from the marked point of `tail`.  The raw
/// periods are measured with [`b_period`], the mixing matrix is their
/// inverse, and the combined forms keep their full term lists so they can
/// be integrated again along any cycle.
pub fn eta_basis(
    group: &SchottkyGroup<Complex64>,
    tail: &str,
    max_len: usize,
    basepoint: Option<Complex64>,
) -> Result<EtaBasis, SchottkyError> {
    let g = group.genus();
    if g == 0 {
        return Err(SchottkyError::BadRequest(
            "nothing to dualize at genus zero".into(),
        ));
    }
    let z0 = match basepoint {
        Some(z) => z,
        None => default_basepoint(group)?,
    };
    let omegas: Vec<Differential<Complex64>> = (2..=g + 1)
        .map(|k| second_kind(group, tail, k, max_len))
        .collect::<Result<_, _>>()?;
    let mut raw = vec![vec![Complex64::new(0.0, 0.0); g]; g];
    for (i, row) in raw.iter_mut().enumerate() {
        for (kk, om) in omegas.iter().enumerate() {
            row[kk] = b_period(group, om, i, Some(z0))?;
        }
    }
    let coeffs = invert_complex(&raw)?;
    let eta = (0..g)
        .map(|j| {
            let parts: Vec<(Complex64, &Differential<Complex64>)> = (0..g)
                .map(|kk| (coeffs[kk][j], &omegas[kk]))
                .collect();
            Differential::combination(&format!("eta{}", j + 1), &parts)
        })
        .collect();
    Ok(EtaBasis {
        eta,
        coeffs,
        raw_periods: raw,
        basepoint: z0,
    })
}

/// Finite-difference residuals of the flat-family picture, all measured at
/// one deterministic basepoint.
pub struct GaussManinReport {
    /// Per dual form: largest `a`-period drift of the frozen combination
    /// across the parameter step (the duals stay integral-free, so this
    /// measures pure numerical noise).
    pub eta_period_drift: Vec<f64>,
    /// Per matrix entry: difference between the two independent derivative
    /// computations of the `b`-periods — quadrature on one side,
    /// cross-ratio products on the other.
    pub connection_residuals: Vec<Vec<f64>>,
    /// Largest entry of either family.
    pub max_residual: f64,
}

/// Central-difference consistency check between the quadrature periods and
/// the cross-ratio period matrix along a direction in edge-parameter space.
///
/// Two families of residuals: (i) the `a`-periods of the dual combinations
/// (built at the center, coefficients frozen, forms rebuilt on each side)
/// must stay put; (ii) the derivative of each `b`-period must match the
/// derivative of the logarithm of the matching period-matrix entry, since
/// the two quantities agree up to a locally constant branch.
pub fn gauss_manin_check(
    graph: &StableGraph,
    params: &SchottkyParams,
    base: &str,
    tail: &str,
    direction: &BTreeMap<String, BigRational>,
    step: &BigRational,
    config: EngineConfig,
) -> Result<GaussManinReport, SchottkyError> {
    let h = rational_to_f64(step);
    if !(h > 0.0) {
        return Err(SchottkyError::BadRequest("step must be positive".into()));
    }
    let l = config.max_word_len;
    let center = SchottkyGroup::complex(graph, params, base, config)?;
    let plus = SchottkyGroup::complex(
        graph,
        &params.perturbed_y(graph, direction, step)?,
        base,
        config,
    )?;
    let minus = SchottkyGroup::complex(
        graph,
        &params.perturbed_y(graph, direction, &step.neg())?,
        base,
        config,
    )?;
    let g = center.genus();
    let z0 = default_basepoint(&center)?;

    // (i) Freeze the dual recipe at the center, rebuild the raw forms on
    // each side, and watch the a-periods (identically zero for the exact
    // family) stay put.
    let basis = eta_basis(&center, tail, l, Some(z0))?;
    let side_eta = |grp: &SchottkyGroup<Complex64>| -> Result<Vec<Differential<Complex64>>, SchottkyError> {
        let omegas: Vec<Differential<Complex64>> = (2..=g + 1)
            .map(|k| second_kind(grp, tail, k, l))
            .collect::<Result<_, _>>()?;
        Ok((0..g)
            .map(|j| {
                let parts: Vec<(Complex64, &Differential<Complex64>)> = (0..g)
                    .map(|kk| (basis.coeffs[kk][j], &omegas[kk]))
                    .collect();
                Differential::combination(&format!("eta{}", j + 1), &parts)
            })
            .collect())
    };
    let eta_plus = side_eta(&plus)?;
    let eta_minus = side_eta(&minus)?;
    let mut eta_period_drift = vec![0.0_f64; g];
    for j in 0..g {
        for i in 0..g {
            let ap = a_cycle_integral(&plus, &eta_plus[j], i)?;
            let am = a_cycle_integral(&minus, &eta_minus[j], i)?;
            eta_period_drift[j] = eta_period_drift[j].max((ap - am).norm() / (2.0 * h));
        }
    }

    // (ii) d/dh of the quadrature b-periods against d/dh of log of the
    // cross-ratio products.
    let b_plus = first_kind_b_periods(&plus, l, Some(z0))?;
    let b_minus = first_kind_b_periods(&minus, l, Some(z0))?;
    let p_plus = period_matrix(&plus, l)?;
    let p_minus = period_matrix(&minus, l)?;
    let mut connection_residuals = vec![vec![0.0; g]; g];
    let mut max_residual = eta_period_drift.iter().fold(0.0_f64, |m, &d| m.max(d));
    for i in 0..g {
        for j in 0..g {
            let lhs = (b_plus[i][j] - b_minus[i][j]) / (2.0 * h);
            let rhs = (p_plus[i][j] / p_minus[i][j]).ln() / (2.0 * h);
            let r = (lhs - rhs).norm();
            connection_residuals[i][j] = r;
            max_residual = max_residual.max(r);
        }
    }
    Ok(GaussManinReport {
        eta_period_drift,
        connection_residuals,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rings::TruncatedSeries;
    use crate::schottky::tests::{
        genus_one_graph, genus_one_params, lollipop_two_graph, lollipop_two_params, wedge_graph,
        wedge_params,
    };
    use std::f64::consts::PI;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn genus_one_period_is_the_edge_parameter_exactly() {
        let graph = genus_one_graph();
        let params = genus_one_params(&graph, q(1, 9));
        let (group, ctx) =
            SchottkyGroup::<TruncatedSeries>::formal(&graph, &params, "v0", 6, EngineConfig::default())
                .unwrap();
        let p = period_matrix(&group, 6).unwrap();
        let y = TruncatedSeries::var(&ctx, 0);
        assert_eq!(p[0][0], y);
    }

    #[test]
    fn wedge_period_matrix_is_symmetric_with_loop_leading_terms() {
        let graph = wedge_graph();
        let params = wedge_params(&graph);
        let (group, _ctx) =
            SchottkyGroup::<TruncatedSeries>::formal(&graph, &params, "v0", 4, EngineConfig::default())
                .unwrap();
        let p = period_matrix(&group, 4).unwrap();
        // Inverting a representative set for (i, j) gives one for (j, i)
        // and matches the factors one by one, so symmetry must be exact
        // even at finite truncation.
        assert_eq!(p[0][1], p[1][0]);
        // Diagonal entries start at their loop parameter (variables are
        // ordered l1, l2).
        assert!(Ring::is_zero(&p[0][0].constant_term()));
        assert_eq!(p[0][0].coeff(&[1, 0]), BigRational::from_i64(1));
        assert_eq!(p[1][1].coeff(&[0, 1]), BigRational::from_i64(1));
        assert_eq!(p[0][0].coeff(&[0, 1]), BigRational::from_i64(0));
        // The off-diagonal entry starts at the cross-ratio of the four
        // branch points: (-2, -1; 1, 2) = (-3)(-3) / ((-4)(-2)) = 9/8.
        assert_eq!(p[0][1].constant_term(), q(9, 8));
    }

    #[test]
    fn arm_graphs_refuse_the_formal_period_matrix_beyond_the_diagonal_term() {
        // Arm-conjugated generators have nilpotent order-zero matrices, so
        // longer words shed leading orders and the cross-ratio factors lose
        // their unit denominators.  The failure must carry context rather
        // than surface as a bare ring error.
        let graph = lollipop_two_graph();
        let params = lollipop_two_params(&graph);
        let (group, _ctx) =
            SchottkyGroup::<TruncatedSeries>::formal(&graph, &params, "v0", 4, EngineConfig::default())
                .unwrap();
        match period_matrix(&group, 4) {
            Err(SchottkyError::DegenerateFactor(msg)) => {
                assert!(msg.contains("period factor"), "{msg}");
            }
            other => panic!("expected a degenerate-factor error, got {other:?}"),
        }
    }

    #[test]
    fn genus_one_a_cycle_integral_is_two_pi_i() {
        let graph = genus_one_graph();
        let params = genus_one_params(&graph, q(1, 9));
        let config = EngineConfig {
            max_word_len: 6,
            tol: 1e-12,
        };
        let group = SchottkyGroup::complex(&graph, &params, "v0", config).unwrap();
        let om = first_kind(&group, 0, 6).unwrap();
        let val = a_cycle_integral(&group, &om, 0).unwrap();
        let expect = Complex64::new(0.0, 2.0 * PI);
        assert!((val - expect).norm() < 1e-10, "got {val}");
    }

    #[test]
    fn lollipop_a_cycle_integrals_are_kronecker() {
        let graph = lollipop_two_graph();
        let params = lollipop_two_params(&graph);
        let config = EngineConfig {
            max_word_len: 4,
            tol: 1e-9,
        };
        let group = SchottkyGroup::complex(&graph, &params, "v0", config).unwrap();
        for j in 0..2 {
            let om = first_kind(&group, j, 4).unwrap();
            for i in 0..2 {
                let val = a_cycle_integral(&group, &om, i).unwrap();
                let expect = if i == j {
                    Complex64::new(0.0, 2.0 * PI)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                // Orbit poles pair up on one side of the contour or the
                // other, so truncation does not touch these values at all.
                assert!(
                    (val - expect).norm() < 1e-7,
                    "cycle {i} against dual {j}: {val}"
                );
            }
        }
    }

    #[test]
    fn lollipop_quadrature_periods_exponentiate_to_the_matrix() {
        let graph = lollipop_two_graph();
        let params = lollipop_two_params(&graph);
        let config = EngineConfig {
            max_word_len: 5,
            tol: 1e-9,
        };
        let group = SchottkyGroup::complex(&graph, &params, "v0", config).unwrap();
        let b = first_kind_b_periods(&group, 5, None).unwrap();
        let p = period_matrix(&group, 5).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let ratio = b[i][j].exp() / p[i][j];
                assert!(
                    (ratio - Complex64::new(1.0, 0.0)).norm() < 1e-4,
                    "entry ({i},{j}): exp {} vs {}",
                    b[i][j].exp(),
                    p[i][j]
                );
            }
        }
    }

    #[test]
    fn wedge_constant_term_matrix_matches_hand_computation() {
        let graph = wedge_graph();
        let params = wedge_params(&graph);
        let m = eta_constant_matrix(&graph, &params, "v0", "t").unwrap();
        assert_eq!(m[0], vec![q(-1, 2), q(3, 8)]);
        assert_eq!(m[1], vec![q(-1, 2), q(-3, 8)]);
        let det = m[0][0].clone() * m[1][1].clone() - m[0][1].clone() * m[1][0].clone();
        assert_eq!(det, q(3, 8));
    }

    #[test]
    fn arm_generators_collapse_the_constant_term_rows() {
        // Both loops of this graph hang off arms, so both fixed points of
        // each generator degenerate onto the same branch point and the
        // limit matrix vanishes identically.
        let graph = lollipop_two_graph();
        let params = lollipop_two_params(&graph);
        let m = eta_constant_matrix(&graph, &params, "v0", "t").unwrap();
        for row in &m {
            for entry in row {
                assert!(Ring::is_zero(entry));
            }
        }
        let (att, rep) = degenerate_fixed_values(&graph, &params, "v0", 0).unwrap();
        assert!(att.same_as(&rep));
        assert_eq!(att.value().unwrap(), q(-5, 1));
    }

    #[test]
    fn wedge_dual_basis_has_kronecker_periods_from_any_basepoint() {
        let graph = wedge_graph();
        let params = wedge_params(&graph);
        let config = EngineConfig {
            max_word_len: 5,
            tol: 1e-10,
        };
        let group = SchottkyGroup::complex(&graph, &params, "v0", config).unwrap();
        let basis = eta_basis(&group, "t", 5, None).unwrap();
        // Re-measure from a different basepoint: second-kind periods carry
        // no residue ambiguity, so the Kronecker property must survive.
        let z0_prime = basis.basepoint + Complex64::new(0.31, 0.17);
        for j in 0..2 {
            for i in 0..2 {
                let val = b_period(&group, &basis.eta[j], i, Some(z0_prime)).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (val - Complex64::new(expect, 0.0)).norm() < 1e-5,
                    "cycle {i}, dual {j}: {val}"
                );
                let a = a_cycle_integral(&group, &basis.eta[j], i).unwrap();
                assert!(a.norm() < 1e-6, "a-period of dual {j} on cycle {i}: {a}");
            }
        }
        // The numeric matrix should sit near its exact degeneration limit.
        let m0 = eta_constant_matrix(&graph, &params, "v0", "t").unwrap();
        for i in 0..2 {
            for k in 0..2 {
                let exact = rational_to_f64(&m0[i][k]);
                assert!(
                    (basis.raw_periods[i][k] - Complex64::new(exact, 0.0)).norm() < 0.05,
                    "raw period ({i},{k}) = {} vs limit {exact}",
                    basis.raw_periods[i][k]
                );
            }
        }
    }

    #[test]
    fn wedge_gauss_manin_residuals_are_small() {
        let graph = wedge_graph();
        let params = wedge_params(&graph);
        let config = EngineConfig {
            max_word_len: 4,
            tol: 1e-10,
        };
        let dir = BTreeMap::from([("l1".to_string(), q(1, 1)), ("l2".to_string(), q(1, 1))]);
        let report =
            gauss_manin_check(&graph, &params, "v0", "t", &dir, &q(1, 1000), config).unwrap();
        assert!(
            report.max_residual < 1e-3,
            "max residual {}",
            report.max_residual
        );
    }

    #[test]
    fn contour_requests_fail_loudly_when_misposed() {
        let graph = genus_one_graph();
        let params = genus_one_params(&graph, q(1, 9));
        let group =
            SchottkyGroup::complex(&graph, &params, "v0", EngineConfig::default()).unwrap();
        let om = first_kind(&group, 0, 4).unwrap();
        assert!(matches!(
            a_cycle_integral(&group, &om, 3),
            Err(SchottkyError::BadGeneratorIndex(3, 1))
        ));
        // The origin is fixed by the multiplication generator, so no cycle
        // path starts there.
        assert!(matches!(
            b_period(&group, &om, 0, Some(Complex64::new(0.0, 0.0))),
            Err(SchottkyError::BadRequest(_))
        ));
        // A basepoint placed exactly on a pole of the form is refused.
        let om2 = second_kind(&group, "t", 2, 4).unwrap();
        assert!(matches!(
            b_period(&group, &om2, 0, Some(Complex64::new(1.0, 0.0))),
            Err(SchottkyError::ContourNearPole(_))
        ));
    }
}
