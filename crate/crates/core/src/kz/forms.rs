//! The connection form a residue assignment induces on one component.
//!
//! Fixing a chart on a component places each of its branches at a point,
//! and the assignment's residues turn into the logarithmic form
//! `sum_h X_h dz/(z - x_h)`.  The branch a chart pins at infinity (at most
//! one per component) contributes no summand: a logarithmic form on the
//! sphere determines its residue there as minus the sum of the finite
//! ones, so nothing is lost by leaving it implicit.

use std::collections::BTreeMap;

use num_rational::BigRational;

use crate::error::KzError;
use crate::moebius::ProjectivePoint;
use crate::rings::NcSeries;

use super::ResidueAssignment;

/// A logarithmic connection form on one component, in a fixed chart.
#[derive(Debug, Clone)]
pub struct KzForm {
    pub component: String,
    /// Finite poles as (branch id, location, residue), sorted by branch.
    pub poles: Vec<(String, BigRational, NcSeries<BigRational>)>,
    /// The branch the chart pins at infinity, if any.
    pub at_infinity: Option<String>,
}

impl KzForm {
    /// Sum of the residues at the finite poles: zero for a chart with all
    /// branches finite, minus the infinite branch's residue otherwise.
    pub fn finite_residue_sum(&self) -> NcSeries<BigRational> {
        let first = &self
            .poles
            .first()
            .expect("a component form has at least two finite poles")
            .2;
        let mut sum = NcSeries::zero(first.alphabet(), first.max_weight());
        for (_, _, r) in &self.poles {
            sum = sum.add(r);
        }
        sum
    }
}

/// Reads off the connection form on `component` in the chart given by the
/// branch coordinates `x` (a map like the one a parameter set exposes).
///
/// Every branch at the component needs an entry in `x`; distinct branches
/// must sit at distinct points, and at most one may sit at infinity.
pub fn kz_form_on_component(
    assignment: &ResidueAssignment,
    x: &BTreeMap<String, ProjectivePoint<BigRational>>,
    component: &str,
) -> Result<KzForm, KzError> {
    if !assignment.graph().vertices().any(|v| v == component) {
        return Err(KzError::BadRequest(format!(
            "no component `{component}` in the graph"
        )));
    }
    let mut poles = Vec::new();
    let mut at_infinity: Option<String> = None;
    for b in assignment.graph().star(component) {
        let id = b.id();
        let p = x.get(&id).ok_or_else(|| {
            KzError::BadRequest(format!("no coordinate for branch `{id}`"))
        })?;
        if p.is_infinity() {
            if let Some(prev) = &at_infinity {
                return Err(KzError::CoincidentPoles(format!(
                    "branches `{prev}` and `{id}` both sit at infinity"
                )));
            }
            at_infinity = Some(id);
            continue;
        }
        let loc = p
            .value()
            .map_err(|_| KzError::BadRequest(format!("coordinate of `{id}` is not finite")))?;
        poles.push((id, loc, assignment.residue(&b.id())?.clone()));
    }
    for i in 0..poles.len() {
        for j in (i + 1)..poles.len() {
            if poles[i].1 == poles[j].1 {
                return Err(KzError::CoincidentPoles(format!(
                    "branches `{}` and `{}` share the point {}",
                    poles[i].0, poles[j].0, poles[i].1
                )));
            }
        }
    }
    Ok(KzForm {
        component: component.to_string(),
        poles,
        at_infinity,
    })
}

#[cfg(test)]
mod tests {
    use super::super::base_assignment;
    use super::super::fixtures::handle_chain_graph;
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn chart(points: &[(&str, Option<(i64, i64)>)]) -> BTreeMap<String, ProjectivePoint<BigRational>> {
        points
            .iter()
            .map(|(id, p)| {
                let point = match p {
                    Some((n, d)) => ProjectivePoint::finite(q(*n, *d)),
                    None => ProjectivePoint::infinity(),
                };
                (id.to_string(), point)
            })
            .collect()
    }

    #[test]
    fn handle_component_form_balances_against_infinity() {
        let a = base_assignment(&handle_chain_graph(2, 1), 4).unwrap();
        let x = chart(&[("l1", Some((0, 1))), ("-l1", Some((1, 1))), ("-e1", None)]);
        let form = kz_form_on_component(&a, &x, "v1").unwrap();
        assert_eq!(form.at_infinity.as_deref(), Some("-e1"));
        assert_eq!(form.poles.len(), 2);
        // The finite residues sum to minus the one at infinity.
        let sum = form.finite_residue_sum();
        assert_eq!(sum, a.residue("-e1").unwrap().neg());
    }

    #[test]
    fn all_finite_chart_has_zero_residue_sum() {
        let a = base_assignment(&handle_chain_graph(2, 1), 4).unwrap();
        let x = chart(&[
            ("t", Some((0, 1))),
            ("e1", Some((1, 1))),
            ("e2", Some((3, 1))),
        ]);
        let form = kz_form_on_component(&a, &x, "v0").unwrap();
        assert!(form.at_infinity.is_none());
        assert!(form.finite_residue_sum().is_zero());
    }

    #[test]
    fn coincident_and_missing_coordinates_are_rejected() {
        let a = base_assignment(&handle_chain_graph(2, 1), 3).unwrap();
        let clash = chart(&[("l1", Some((0, 1))), ("-l1", Some((0, 1))), ("-e1", None)]);
        assert!(matches!(
            kz_form_on_component(&a, &clash, "v1"),
            Err(KzError::CoincidentPoles(_))
        ));
        let short = chart(&[("l1", Some((0, 1))), ("-l1", Some((1, 1)))]);
        assert!(matches!(
            kz_form_on_component(&a, &short, "v1"),
            Err(KzError::BadRequest(_))
        ));
    }
}
