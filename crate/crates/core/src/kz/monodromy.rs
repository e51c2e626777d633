//! Parallel transport for logarithmic connections with series residues.
//!
//! The object moved around is a flat section of `d - A` with
//! `A(z) = sum_i X_i / (z - p_i)`: a noncommutative series `U(z)` with
//! `U' = A(z) U`.  Transport along a polyline multiplies, on the left, the
//! path-ordered exponential of each segment; the integrator is a plain
//! fourth-order Runge-Kutta whose step length tracks the distance to the
//! nearest pole, so walking into a logarithmic throat costs a number of
//! steps proportional to the logarithm of the approach distance.
//!
//! Paths may *end* on a pole.  The transport then diverges like
//! `eps^{X_p}` in the cutoff distance `eps`, and the meaningful object is
//! the regularized limit: conjugate the raw transport by the local
//! normal-form frame at the pole and strip the `exp(X_p log eps)` growth.
//! Concretely, with `zeta` the chart `(z - p) / d` for `d` the unit vector
//! pointing from the pole into the path, the local fundamental solution is
//! `F(zeta) * zeta^{X_p}` with `F` a power series starting at `1`, and the
//! counterterm-corrected transport
//!
//! ```text
//!     T(eps) = exp(-X_q log eps) F_q(eps)^{-1} U F_p(eps) exp(X_p log eps)
//! ```
//!
//! is constant in `eps` up to the truncation order of `F`.  The engine
//! evaluates `T` at three pinned offsets `1e-2, 1e-2/2, 1e-2/4`, removes
//! the leading two orders by Richardson extrapolation as a safety net, and
//! refuses to return a number when the extrapolated value and the finest
//! sample still disagree — the residual quoted in the error.
//!
//! Everything runs in an algebra with one abstract letter per finite pole
//! and substitutes the actual residue series only at the very end; the
//! substitution is weight-graded, so truncation commutes with it.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::KzError;
use crate::rings::{rational_to_f64, NcAlphabet, NcSeries, NcWord};

use super::KzForm;

/// Step length as a fraction of the distance to the nearest pole.
const STEP_FACTOR: f64 = 0.02;
/// Absolute step cap, as a fraction of the configuration's extent.
const MAX_STEP: f64 = 0.05;
/// Largest endpoint offset of the extrapolation ladder.
const BASE_EPSILON: f64 = 1e-2;
/// Truncation order of the endpoint frame series `F`.
const COUNTERTERM_ORDER: usize = 8;
/// Extrapolation and finest sample must agree to this, per coefficient.
const SETTLE_LIMIT: f64 = 1e-5;
/// Way points and waylines must keep this (times the extent) clear of
/// poles; endpoint approaches are handled by truncation instead.
const CLEARANCE: f64 = 1e-9;
/// A waypoint this close (times the extent) to a pole *is* that pole.
const SNAP: f64 = 1e-12;
/// The first and last segment must be this many offsets long.
const SEGMENT_MARGIN: f64 = 5.0;
/// Offsets stay below this fraction of the distance to the next pole.
const GAP_MARGIN: f64 = 0.05;

/// Transport context: pole locations and the abstract one-letter-per-pole
/// algebra the integration runs in.
struct Transporter {
    poles: Vec<Complex64>,
    letters: Vec<NcSeries<Complex64>>,
    alphabet: Arc<NcAlphabet>,
    weight: usize,
    extent: f64,
}

/// A path endpoint lying on a pole: which one, and the unit direction
/// from the pole into the path.
struct Approach {
    pole: usize,
    dir: Complex64,
}

impl Transporter {
    fn new(poles: Vec<Complex64>, weight: usize, path: &[Complex64]) -> Self {
        let mut extent = 0.0f64;
        let all: Vec<Complex64> = poles.iter().chain(path.iter()).copied().collect();
        for a in &all {
            for b in &all {
                extent = extent.max((a - b).norm());
            }
        }
        if extent == 0.0 {
            extent = 1.0;
        }
        let names = (0..poles.len()).map(|i| format!("x{i}")).collect();
        let alphabet = NcSeries::<Complex64>::alphabet_of(names);
        let letters = (0..poles.len())
            .map(|i| NcSeries::letter(&alphabet, weight, i))
            .collect();
        Transporter {
            poles,
            letters,
            alphabet,
            weight,
            extent,
        }
    }

    fn one(&self) -> NcSeries<Complex64> {
        NcSeries::one(&self.alphabet, self.weight)
    }

    fn zero(&self) -> NcSeries<Complex64> {
        NcSeries::zero(&self.alphabet, self.weight)
    }

    /// `A(z) * u * dz` — the derivative of the section along a segment of
    /// unit direction `dz`, assembled letter by letter (each summand is a
    /// left-multiplication by one letter, which is cheap).
    fn derivative(&self, z: Complex64, dz: Complex64, u: &NcSeries<Complex64>) -> NcSeries<Complex64> {
        let mut out = self.zero();
        for (i, p) in self.poles.iter().enumerate() {
            let c = dz / (z - p);
            out = out.add(&self.letters[i].mul(u).scale(&c));
        }
        out
    }

    /// Continues `u` along the straight segment from `a` to `b`.
    fn advance(
        &self,
        mut u: NcSeries<Complex64>,
        a: Complex64,
        b: Complex64,
    ) -> Result<NcSeries<Complex64>, KzError> {
        let len = (b - a).norm();
        if len == 0.0 {
            return Ok(u);
        }
        let dz = (b - a) / len;
        let mut t = 0.0f64;
        let mut steps = 0usize;
        while t < len {
            let z = a + dz * t;
            let d = self
                .poles
                .iter()
                .map(|p| (z - p).norm())
                .fold(f64::INFINITY, f64::min);
            if d < CLEARANCE * self.extent {
                return Err(KzError::TransportFailed(format!(
                    "the path passes through a pole near {z}"
                )));
            }
            // Capping the step by the pole distance keeps the relative
            // change of that distance below STEP_FACTOR per step, so the
            // walk can never jump across a pole.
            let h = (STEP_FACTOR * d).min(MAX_STEP * self.extent).min(len - t);
            let half = Complex64::new(0.5 * h, 0.0);
            let full = Complex64::new(h, 0.0);
            let zm = a + dz * (t + 0.5 * h);
            let z1 = a + dz * (t + h);
            let k1 = self.derivative(z, dz, &u);
            let k2 = self.derivative(zm, dz, &u.add(&k1.scale(&half)));
            let k3 = self.derivative(zm, dz, &u.add(&k2.scale(&half)));
            let k4 = self.derivative(z1, dz, &u.add(&k3.scale(&full)));
            let two = Complex64::new(2.0, 0.0);
            let incr = k1
                .add(&k2.scale(&two))
                .add(&k3.scale(&two))
                .add(&k4)
                .scale(&Complex64::new(h / 6.0, 0.0));
            u = u.add(&incr);
            t += h;
            steps += 1;
            if steps > 2_000_000 {
                return Err(KzError::TransportFailed(
                    "step budget exhausted; a waypoint sits too close to a pole".to_string(),
                ));
            }
        }
        Ok(u)
    }

    fn transport(&self, path: &[Complex64]) -> Result<NcSeries<Complex64>, KzError> {
        let mut u = self.one();
        for seg in path.windows(2) {
            u = self.advance(u, seg[0], seg[1])?;
        }
        Ok(u)
    }

    /// Solves `(n - ad_{X_p}) f = r`; `ad` raises the weight, so the
    /// Neumann series is finite.
    fn solve_shifted(&self, pole: usize, n: usize, r: &NcSeries<Complex64>) -> NcSeries<Complex64> {
        let x = &self.letters[pole];
        let inv_n = Complex64::new(1.0 / n as f64, 0.0);
        let mut term = r.scale(&inv_n);
        let mut acc = self.zero();
        while !term.is_zero() {
            acc = acc.add(&term);
            term = x.mul(&term).sub(&term.mul(x)).scale(&inv_n);
        }
        acc
    }

    /// Coefficients `f_0 .. f_K` of the local frame at `pole`, in the
    /// chart that maps the approach direction `dir` to the positive real
    /// axis.  They satisfy `(m+1 - ad_{X_p}) f_{m+1} = sum B~_j f_{m-j}`
    /// where `B~` is the regular part of the connection in that chart.
    fn frame(&self, pole: usize, dir: Complex64) -> Vec<NcSeries<Complex64>> {
        let p = self.poles[pole];
        let mut regular = Vec::with_capacity(COUNTERTERM_ORDER);
        for j in 0..COUNTERTERM_ORDER {
            let mut b = self.zero();
            for (i, q) in self.poles.iter().enumerate() {
                if i == pole {
                    continue;
                }
                let c = -dir.powi(j as i32 + 1) / (q - p).powi(j as i32 + 1);
                b = b.add(&self.letters[i].scale(&c));
            }
            regular.push(b);
        }
        let mut f = vec![self.one()];
        for m in 0..COUNTERTERM_ORDER {
            let mut rhs = self.zero();
            for j in 0..=m {
                rhs = rhs.add(&regular[j].mul(&f[m - j]));
            }
            f.push(self.solve_shifted(pole, m + 1, &rhs));
        }
        f
    }

    /// `sum_k f_k eps^k` for a frame's coefficient list.
    fn eval_frame(&self, f: &[NcSeries<Complex64>], eps: f64) -> NcSeries<Complex64> {
        let mut acc = self.zero();
        let mut power = 1.0f64;
        for fk in f {
            acc = acc.add(&fk.scale(&Complex64::new(power, 0.0)));
            power *= eps;
        }
        acc
    }

    /// `exp(c * X_p)`.
    fn exp_letter(&self, pole: usize, c: Complex64) -> NcSeries<Complex64> {
        self.letters[pole].scale(&c).exp()
    }
}

/// Inverse of a series with empty-word coefficient exactly one.
fn inv_unipotent(s: &NcSeries<Complex64>) -> NcSeries<Complex64> {
    let one = NcSeries::one(s.alphabet(), s.max_weight());
    let n = s.sub(&one);
    let mut acc = one.clone();
    let mut power = one;
    for _ in 0..s.max_weight() {
        power = n.mul(&power).neg();
        if power.is_zero() {
            break;
        }
        acc = acc.add(&power);
    }
    acc
}

fn largest_coefficient(s: &NcSeries<Complex64>) -> f64 {
    s.iter_terms().map(|(_, c)| c.norm()).fold(0.0, f64::max)
}

/// The regularized transport in the abstract one-letter-per-pole algebra.
fn abstract_transport(
    poles: &[Complex64],
    path: &[Complex64],
    weight: usize,
) -> Result<NcSeries<Complex64>, KzError> {
    if path.len() < 2 {
        return Err(KzError::BadRequest(
            "a path needs at least two waypoints".to_string(),
        ));
    }
    if path.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(KzError::BadRequest("path has a non-finite waypoint".to_string()));
    }
    for i in 0..poles.len() {
        for j in (i + 1)..poles.len() {
            if poles[i] == poles[j] {
                return Err(KzError::CoincidentPoles(format!(
                    "poles {i} and {j} collide at {}",
                    poles[i]
                )));
            }
        }
    }
    let tr = Transporter::new(poles.to_vec(), weight, path);

    let snap = |z: Complex64| -> Option<usize> {
        tr.poles
            .iter()
            .position(|p| (z - p).norm() <= SNAP * tr.extent)
    };
    let approach = |from: Complex64, toward: Complex64| -> Result<Approach, KzError> {
        let pole = snap(from).expect("checked by caller");
        let d = toward - tr.poles[pole];
        if d.norm() <= SNAP * tr.extent {
            return Err(KzError::BadRequest(
                "the waypoint next to a pole endpoint coincides with the pole".to_string(),
            ));
        }
        Ok(Approach {
            pole,
            dir: d / d.norm(),
        })
    };
    let start = if snap(path[0]).is_some() {
        Some(approach(path[0], path[1])?)
    } else {
        None
    };
    let end = if snap(path[path.len() - 1]).is_some() {
        Some(approach(path[path.len() - 1], path[path.len() - 2])?)
    } else {
        None
    };
    // Interior waypoints may not sit on poles; there is no sensible
    // regularization for a corner pinned to a singular point.
    for z in &path[1..path.len() - 1] {
        if snap(*z).is_some() {
            return Err(KzError::BadRequest(format!(
                "interior waypoint {z} sits on a pole; only endpoints may"
            )));
        }
    }

    if start.is_none() && end.is_none() {
        return tr.transport(path);
    }

    // Shrink the offset ladder until it fits inside the end segments and
    // under the pole gaps.
    let mut eps = BASE_EPSILON;
    let fits = |eps: f64| -> bool {
        for (spec, other) in [(&start, path[1]), (&end, path[path.len() - 2])] {
            if let Some(a) = spec {
                let p = tr.poles[a.pole];
                if SEGMENT_MARGIN * eps > (other - p).norm() {
                    return false;
                }
                let gap = tr
                    .poles
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != a.pole)
                    .map(|(_, q)| (q - p).norm())
                    .fold(f64::INFINITY, f64::min);
                if eps > GAP_MARGIN * gap {
                    return false;
                }
            }
        }
        true
    };
    while !fits(eps) {
        eps *= 0.5;
        if eps < 1e-8 * tr.extent {
            return Err(KzError::TransportFailed(
                "endpoint geometry leaves no room for the offset ladder".to_string(),
            ));
        }
    }

    let start_frame = start.as_ref().map(|a| tr.frame(a.pole, a.dir));
    let end_frame = end.as_ref().map(|a| tr.frame(a.pole, a.dir));

    let sample = |eps: f64| -> Result<NcSeries<Complex64>, KzError> {
        let mut way = path.to_vec();
        if let Some(a) = &start {
            way[0] = tr.poles[a.pole] + a.dir * eps;
        }
        if let Some(a) = &end {
            let last = way.len() - 1;
            way[last] = tr.poles[a.pole] + a.dir * eps;
        }
        let mut t = tr.transport(&way)?;
        let ln_eps = Complex64::new(eps.ln(), 0.0);
        if let (Some(a), Some(f)) = (&start, &start_frame) {
            t = t.mul(&tr.eval_frame(f, eps).mul(&tr.exp_letter(a.pole, ln_eps)));
        }
        if let (Some(a), Some(f)) = (&end, &end_frame) {
            t = tr
                .exp_letter(a.pole, -ln_eps)
                .mul(&inv_unipotent(&tr.eval_frame(f, eps)))
                .mul(&t);
        }
        Ok(t)
    };

    let coarse = sample(eps)?;
    let middle = sample(0.5 * eps)?;
    let fine = sample(0.25 * eps)?;
    let third = Complex64::new(1.0 / 3.0, 0.0);
    let extrapolated = fine
        .scale(&Complex64::new(8.0, 0.0))
        .sub(&middle.scale(&Complex64::new(6.0, 0.0)))
        .add(&coarse)
        .scale(&third);
    let residual = largest_coefficient(&extrapolated.sub(&fine));
    if residual > SETTLE_LIMIT {
        return Err(KzError::TransportFailed(format!(
            "endpoint extrapolation did not settle; residual {residual:.3e}"
        )));
    }
    Ok(extrapolated)
}

/// Replaces the `i`-th abstract letter by `residues[i]` everywhere.
///
/// Sound because every residue has positive weight: a word of `k` letters
/// only produces terms of weight `k` and higher, so the truncated
/// abstract transport already carries every word that can matter.
pub(super) fn substitute(
    transported: &NcSeries<Complex64>,
    residues: &[NcSeries<Complex64>],
) -> NcSeries<Complex64> {
    let model = &residues[0];
    let one = NcSeries::one(model.alphabet(), model.max_weight());
    let mut cache: BTreeMap<NcWord, NcSeries<Complex64>> = BTreeMap::new();
    cache.insert(Vec::new(), one);
    let mut out = NcSeries::zero(model.alphabet(), model.max_weight());
    for (word, c) in transported.iter_terms() {
        for k in 1..=word.len() {
            if !cache.contains_key(&word[..k]) {
                let prev = cache[&word[..k - 1]].clone();
                let next = prev.mul(&residues[word[k - 1] as usize]);
                cache.insert(word[..k].to_vec(), next);
            }
        }
        out = out.add(&cache[&word[..]].scale(c));
    }
    out
}

/// Transports a flat section of the form's connection along `path` and
/// writes the result in the residue algebra.
///
/// Waypoints are complex numbers; consecutive ones are joined by straight
/// segments.  The first and last waypoint may coincide with poles of the
/// form — the result is then the regularized limit described in the
/// module notes, taken along the adjacent segment's direction.  Interior
/// waypoints must keep clear of every pole.
pub fn kz_monodromy(form: &KzForm, path: &[Complex64]) -> Result<NcSeries<Complex64>, KzError> {
    if form.poles.is_empty() {
        return Err(KzError::BadRequest(
            "the form has no finite poles to transport against".to_string(),
        ));
    }
    let locations: Vec<Complex64> = form
        .poles
        .iter()
        .map(|(_, x, _)| Complex64::new(rational_to_f64(x), 0.0))
        .collect();
    let weight = form.poles[0].2.max_weight();
    let abstracted = abstract_transport(&locations, path, weight)?;
    let residues: Vec<NcSeries<Complex64>> = form
        .poles
        .iter()
        .map(|(_, _, r)| r.map_coeffs(|c| Complex64::new(rational_to_f64(c), 0.0)))
        .collect();
    Ok(substitute(&abstracted, &residues))
}

/// The regularized transport from `0` to `1` for the two-letter form
/// `x0 dz/z + x1 dz/(z-1)`, the building block every component path of
/// [`super::limit_unipotent_period`] reduces to.
///
/// Weight-two sanity anchor: the `x0 x1` coefficient is `-pi^2/6`.
pub fn standard_interval_transport(weight: usize) -> Result<NcSeries<Complex64>, KzError> {
    let poles = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    let path = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    abstract_transport(&poles, &path, weight)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_pole_transport_is_the_logarithm_exponentiated() {
        let poles = [c(0.0, 0.0)];
        let path = [c(2.0, 0.0), c(0.0, 2.0)];
        let t = abstract_transport(&poles, &path, 3).unwrap();
        // Quarter turn at constant radius: the integral of dz/z is i pi/2.
        let expected = c(0.0, std::f64::consts::FRAC_PI_2);
        assert!((t.coeff_of_named(&["x0"]) - expected).norm() < 1e-9);
        let w2 = t.coeff_of_named(&["x0", "x0"]);
        assert!((w2 - expected * expected / 2.0).norm() < 1e-9);
    }

    #[test]
    fn a_closed_loop_exponentiates_the_enclosed_residue() {
        let poles = [c(0.0, 0.0), c(5.0, 0.0)];
        let r = 2.0;
        // Counterclockwise square around the origin only.
        let path = [
            c(r, 0.0),
            c(r, r),
            c(-r, r),
            c(-r, -r),
            c(r, -r),
            c(r, 0.0),
        ];
        let t = abstract_transport(&poles, &path, 4).unwrap();
        let tau = c(0.0, 2.0 * std::f64::consts::PI);
        assert!((t.coeff_of_named(&["x0"]) - tau).norm() < 1e-8);
        assert!(t.coeff_of_named(&["x1"]).norm() < 1e-8);
        assert!(t.is_grouplike(1e-7));
        // The result is exp(tau x0) conjugated by the frame change from
        // the basepoint to the pole; mixed words feel the conjugation,
        // but the pure x0 powers do not.
        assert!((t.coeff_of_named(&["x0", "x0"]) - tau * tau / 2.0).norm() < 1e-7);
        assert!((t.coeff_of_named(&["x0", "x0", "x0"]) - tau * tau * tau / 6.0).norm() < 1e-6);
    }

    #[test]
    fn transports_compose_along_concatenation() {
        let poles = [c(0.0, 0.0), c(1.0, 0.0)];
        let a = c(-1.0, 0.0);
        let m = c(-0.5, 0.8);
        let b = c(0.5, 0.6);
        let whole = abstract_transport(&poles, &[a, m, b], 4).unwrap();
        let left = abstract_transport(&poles, &[a, m], 4).unwrap();
        let right = abstract_transport(&poles, &[m, b], 4).unwrap();
        assert!(whole.close_to(&right.mul(&left), 1e-10));
    }

    #[test]
    fn interval_transport_carries_zeta_values() {
        let t = standard_interval_transport(3).unwrap();
        let pi = std::f64::consts::PI;
        // Regularized ends: no single-logarithm terms survive.
        assert!(t.coeff_of_named(&["x0"]).norm() < 1e-7);
        assert!(t.coeff_of_named(&["x1"]).norm() < 1e-7);
        let z2 = t.coeff_of_named(&["x0", "x1"]);
        assert!((z2 - c(-pi * pi / 6.0, 0.0)).norm() < 1e-6, "got {z2}");
        let z2r = t.coeff_of_named(&["x1", "x0"]);
        assert!((z2r - c(pi * pi / 6.0, 0.0)).norm() < 1e-6);
        // Weight three carries zeta(3) in the x0 x0 x1 slot.
        let z3 = t.coeff_of_named(&["x0", "x0", "x1"]);
        assert!((z3.norm() - 1.202_056_903_159_594).abs() < 1e-6, "got {z3}");
        assert!(t.is_grouplike(1e-6));
    }

    #[test]
    fn identity_substitution_is_invisible() {
        let t = standard_interval_transport(3).unwrap();
        let letters = [
            NcSeries::letter(t.alphabet(), t.max_weight(), 0),
            NcSeries::letter(t.alphabet(), t.max_weight(), 1),
        ];
        assert!(substitute(&t, &letters).close_to(&t, 0.0));
    }

    #[test]
    fn degenerate_paths_are_refused() {
        let poles = [c(0.0, 0.0), c(1.0, 0.0)];
        // Through a pole.
        let through = abstract_transport(&poles, &[c(-1.0, 0.0), c(2.0, 0.0)], 3);
        assert!(matches!(through, Err(KzError::TransportFailed(_))));
        // Endpoint segment too short to host the offset ladder.
        let cramped = abstract_transport(&poles, &[c(0.0, 0.0), c(1e-9, 0.0)], 3);
        assert!(cramped.is_err());
        // Interior waypoint on a pole.
        let interior = abstract_transport(
            &poles,
            &[c(-1.0, 0.0), c(0.0, 0.0), c(0.5, 0.5)],
            3,
        );
        assert!(matches!(interior, Err(KzError::BadRequest(_))));
    }
}
