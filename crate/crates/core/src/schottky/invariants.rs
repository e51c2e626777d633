//! Conjugation invariants of formal instances.
//!
//! Moving every branch coordinate by one shared Möbius map must leave the
//! projective data of the family alone: word multipliers on the nose,
//! cross-ratios of limit points factor for factor.  The report collects
//! exact mismatches over the truncated-series ring — an empty report is a
//! machine-checkable witness that two parameter sets present the same
//! family, and any perturbation that is *not* a global conjugation shows
//! up as a named mismatch.

use num_rational::BigRational;

use crate::error::SchottkyError;
use crate::moebius::{self, MoebiusMap, ProjectivePoint};
use crate::rings::{Ring, TruncatedSeries};
use crate::schottky::words::{reduced_words, word_name};
use crate::schottky::SchottkyGroup;

/// Outcome of an invariant comparison.  Mismatch lists carry the word
/// names involved, so a failure names its witness.
#[derive(Debug, Clone, Default)]
pub struct InvariantReport {
    /// Nontrivial words whose multipliers were compared.
    pub words_checked: usize,
    /// Words whose multipliers differ between the two instances.
    pub multiplier_mismatches: Vec<String>,
    /// Limit points kept for the cross-ratio comparison (deduplicated by
    /// their order-zero positions, capped at eight).
    pub points_compared: usize,
    /// Four-point subsets whose cross-ratios were compared.
    pub quadruples_checked: usize,
    /// Subsets with differing cross-ratios, as `w1|w2|w3|w4`.
    pub cross_ratio_mismatches: Vec<String>,
    /// Generators whose fixed points fail to be carried left-to-right by
    /// the declared conjugator (always empty when none was given).
    pub equivariance_failures: Vec<usize>,
}

impl InvariantReport {
    /// No mismatch of any kind.
    pub fn clean(&self) -> bool {
        self.multiplier_mismatches.is_empty()
            && self.cross_ratio_mismatches.is_empty()
            && self.equivariance_failures.is_empty()
    }
}

/// The order-zero position of a normalized projective point, with `None`
/// for infinity.  Distinct keys guarantee unit denominators in every
/// difference the cross-ratios form.
fn point_key(p: &ProjectivePoint<TruncatedSeries>) -> Option<BigRational> {
    if p.w.is_unit() {
        Some(p.u.constant_term())
    } else {
        None
    }
}

/// Compares every conjugation invariant of two formal instances up to word
/// length `max_len`: multipliers word by word, then cross-ratios over all
/// four-point subsets of a deduplicated set of attractive limit points.
/// When `conjugator` names the map that is supposed to carry `left` to
/// `right`, the generator fixed points are additionally checked to move
/// with it.  All comparisons are exact over the series ring.
pub fn conjugation_invariant_report(
    left: &SchottkyGroup<TruncatedSeries>,
    right: &SchottkyGroup<TruncatedSeries>,
    max_len: usize,
    conjugator: Option<&MoebiusMap<BigRational>>,
) -> Result<InvariantReport, SchottkyError> {
    if left.genus() != right.genus() {
        return Err(SchottkyError::BadRequest(
            "instances have different ranks, nothing to compare".into(),
        ));
    }
    let rank = left.genus();
    let mut report = InvariantReport::default();

    let words = reduced_words(rank, max_len);
    let mut pts_left = Vec::new();
    let mut pts_right = Vec::new();
    let mut pt_names: Vec<String> = Vec::new();
    let mut pt_keys: Vec<Option<BigRational>> = Vec::new();
    for w in words.iter().skip(1) {
        let fl = left.word_fixed_data(w)?;
        let fr = right.word_fixed_data(w)?;
        report.words_checked += 1;
        if fl.multiplier != fr.multiplier {
            report.multiplier_mismatches.push(word_name(w));
        }
        // Keep the attractive point if its order-zero position is new;
        // distinct positions keep every cross-ratio below a unit.
        if pts_left.len() < 8 {
            let key = point_key(&fl.attractive);
            if pt_keys.iter().all(|k| *k != key) {
                pt_keys.push(key);
                pts_left.push(fl.attractive);
                pts_right.push(fr.attractive);
                pt_names.push(word_name(w));
            }
        }
    }
    report.points_compared = pts_left.len();

    let n = pts_left.len();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    let cl = moebius::cross_ratio(
                        &pts_left[a],
                        &pts_left[b],
                        &pts_left[c],
                        &pts_left[d],
                    )?;
                    let cr = moebius::cross_ratio(
                        &pts_right[a],
                        &pts_right[b],
                        &pts_right[c],
                        &pts_right[d],
                    )?;
                    report.quadruples_checked += 1;
                    if cl != cr {
                        report.cross_ratio_mismatches.push(format!(
                            "{}|{}|{}|{}",
                            pt_names[a], pt_names[b], pt_names[c], pt_names[d]
                        ));
                    }
                }
            }
        }
    }

    if let Some(g) = conjugator {
        let lifted = MoebiusMap::new(
            TruncatedSeries::scalar(g.a.clone()),
            TruncatedSeries::scalar(g.b.clone()),
            TruncatedSeries::scalar(g.c.clone()),
            TruncatedSeries::scalar(g.d.clone()),
        );
        for i in 0..rank {
            let moved = lifted.apply(&left.generator_fixed(i)?.attractive);
            if !moved.same_as(&right.generator_fixed(i)?.attractive) {
                report.equivariance_failures.push(i);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schottky::tests::{
        genus_one_graph, genus_one_params, lollipop_two_graph, lollipop_two_params, wedge_graph,
        wedge_params,
    };
    use crate::schottky::EngineConfig;
    use std::collections::BTreeMap;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn formal(
        graph: &crate::graph::StableGraph,
        params: &crate::schottky::SchottkyParams,
    ) -> SchottkyGroup<TruncatedSeries> {
        SchottkyGroup::formal(graph, params, "v0", 4, EngineConfig::default())
            .unwrap()
            .0
    }

    #[test]
    fn a_global_moebius_change_of_coordinates_is_invisible() {
        let graph = wedge_graph();
        let params = wedge_params(&graph);
        // Pole at -3 stays away from every branch coordinate, so all five
        // points move to finite positions.
        let g = MoebiusMap::new(q(2, 1), q(1, 1), q(1, 1), q(3, 1));
        let moved = params.transformed(&graph, &g).unwrap();
        let left = formal(&graph, &params);
        let right = formal(&graph, &moved);
        let report = conjugation_invariant_report(&left, &right, 3, Some(&g)).unwrap();
        assert!(report.clean(), "{report:?}");
        assert_eq!(report.words_checked, 52);
        // Every word's attractive point sits over the coordinate of its
        // first letter, so exactly four limit positions survive dedup.
        assert_eq!(report.points_compared, 4);
        assert_eq!(report.quadruples_checked, 1);
    }

    #[test]
    fn an_unrelated_coordinate_perturbation_is_caught() {
        let graph = wedge_graph();
        let params = wedge_params(&graph);
        let mut x: BTreeMap<String, BigRational> = params
            .x_map()
            .iter()
            .map(|(k, p)| (k.clone(), p.value().unwrap()))
            .collect();
        x.insert("-l2".to_string(), q(5, 2));
        let perturbed =
            crate::schottky::SchottkyParams::for_graph(&graph, &x, params.y_map()).unwrap();
        let left = formal(&graph, &params);
        let right = formal(&graph, &perturbed);
        let report = conjugation_invariant_report(&left, &right, 3, None).unwrap();
        assert!(!report.clean());
        // Single letters keep their multipliers (those are the edge
        // parameters themselves), so the witnesses must be longer words or
        // cross-ratios.
        assert!(!report.multiplier_mismatches.iter().any(|w| w == "g1" || w == "g2"));
        assert!(
            report
                .multiplier_mismatches
                .iter()
                .any(|w| w.contains('.'))
                || !report.cross_ratio_mismatches.is_empty(),
            "{report:?}"
        );
    }

    #[test]
    fn rank_mismatch_is_rejected() {
        let g1 = genus_one_graph();
        let p1 = genus_one_params(&g1, q(1, 9));
        let one = formal(&g1, &p1);
        let g2 = lollipop_two_graph();
        let p2 = lollipop_two_params(&g2);
        let two = formal(&g2, &p2);
        assert!(matches!(
            conjugation_invariant_report(&one, &two, 2, None),
            Err(SchottkyError::BadRequest(_))
        ));
    }
}
