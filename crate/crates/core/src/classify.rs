//! Category and instance decisions from style vectors, and pose metrics.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::StyleVector;

/// Training styles with their object and category labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledStyleSet {
    styles: Vec<StyleVector>,
    instance_ids: Vec<String>,
    category_ids: Vec<String>,
}

impl LabeledStyleSet {
    pub fn new(
        styles: Vec<StyleVector>,
        instance_ids: Vec<String>,
        category_ids: Vec<String>,
    ) -> Result<Self> {
        if styles.is_empty() {
            return Err(Error::EmptySupport);
        }
        for len in [instance_ids.len(), category_ids.len()] {
            if len != styles.len() {
                return Err(Error::LengthMismatch {
                    left: styles.len(),
                    right: len,
                });
            }
        }
        let dim = styles[0].len();
        if let Some(bad) = styles.iter().find(|s| s.len() != dim) {
            return Err(Error::DimensionMismatch {
                what: "support style",
                expected: dim,
                found: bad.len(),
            });
        }
        Ok(LabeledStyleSet {
            styles,
            instance_ids,
            category_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.styles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.styles.is_empty()
    }

    pub fn styles(&self) -> &[StyleVector] {
        &self.styles
    }

    pub fn instance_ids(&self) -> &[String] {
        &self.instance_ids
    }

    pub fn category_ids(&self) -> &[String] {
        &self.category_ids
    }

    fn labels(&self, target: Target) -> &[String] {
        match target {
            Target::Category => &self.category_ids,
            Target::Instance => &self.instance_ids,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Category,
    Instance,
}

/// Majority label among the `k` nearest support styles.
///
/// Neighbors are ranked by distance, then label. A tied vote goes to the label
/// with the smaller mean neighbor distance, then to the label ranked first.
pub fn knn_classify(
    support: &LabeledStyleSet,
    query: &StyleVector,
    k: usize,
    target: Target,
) -> Result<String> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    if k == 0 || k > support.len() {
        return Err(Error::InvalidConfig(format!(
            "k = {k} must lie in 1..={}",
            support.len()
        )));
    }
    let dim = support.styles[0].len();
    if query.len() != dim {
        return Err(Error::DimensionMismatch {
            what: "query style",
            expected: dim,
            found: query.len(),
        });
    }
    let labels = support.labels(target);
    let mut ranked: Vec<(f64, &str)> = support
        .styles
        .iter()
        .zip(labels)
        .map(|(s, l)| ((s - query).norm(), l.as_str()))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));

    // (votes, distance sum, first rank)
    let mut tally: HashMap<&str, (usize, f64, usize)> = HashMap::new();
    for (rank, (d, label)) in ranked.iter().take(k).enumerate() {
        let entry = tally.entry(label).or_insert((0, 0.0, rank));
        entry.0 += 1;
        entry.1 += d;
    }
    let (label, _) = tally
        .into_iter()
        .min_by(|(_, a), (_, b)| {
            b.0.cmp(&a.0)
                .then_with(|| (a.1 / a.0 as f64).total_cmp(&(b.1 / b.0 as f64)))
                .then_with(|| a.2.cmp(&b.2))
        })
        .expect("k >= 1");
    Ok(label.to_string())
}

/// One estimate, or one ground-truth entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub yaw_deg: f64,
    pub category_id: String,
    pub object_id: String,
}

/// Pose and recognition metrics over a test set. Pose accuracy means the
/// percentage of images with yaw error below 45°.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub count: usize,
    pub mae_degrees: f64,
    pub pct_ae_under_22_5: f64,
    pub pct_ae_under_45: f64,
    pub category_accuracy: f64,
    pub instance_accuracy: f64,
    /// Over correctly categorized images only.
    pub pose_accuracy_given_correct_category: f64,
    /// Over all images, misclassified ones counting as pose failures.
    pub pose_accuracy_zero_for_misclassified: f64,
    pub synthesis_mse: Option<f64>,
}

impl EvalReport {
    /// Field names and formatted values, in a fixed order.
    pub fn fields(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![
            ("count", self.count.to_string()),
            ("mae_degrees", format!("{:.4}", self.mae_degrees)),
            ("pct_ae_under_22_5", format!("{:.2}", self.pct_ae_under_22_5)),
            ("pct_ae_under_45", format!("{:.2}", self.pct_ae_under_45)),
            ("category_accuracy", format!("{:.2}", self.category_accuracy)),
            ("instance_accuracy", format!("{:.2}", self.instance_accuracy)),
            (
                "pose_accuracy_given_correct_category",
                format!("{:.2}", self.pose_accuracy_given_correct_category),
            ),
            (
                "pose_accuracy_zero_for_misclassified",
                format!("{:.2}", self.pose_accuracy_zero_for_misclassified),
            ),
        ];
        if let Some(mse) = self.synthesis_mse {
            out.push(("synthesis_mse", format!("{mse:.6}")));
        }
        out
    }
}

/// Wraparound-aware absolute difference of two angles in degrees, in `[0, 180]`.
///
/// Works in degrees directly so integer-degree inputs give exact results.
pub fn angular_error_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

pub fn evaluate(
    predictions: &[Prediction],
    ground_truth: &[Prediction],
    synthesis_mse: Option<f64>,
) -> Result<EvalReport> {
    if predictions.len() != ground_truth.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: ground_truth.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptySupport);
    }
    let n = predictions.len() as f64;
    let pct = |count: usize, of: f64| if of > 0.0 { 100.0 * count as f64 / of } else { 0.0 };

    let mut ae_sum = 0.0;
    let (mut under_22, mut under_45) = (0, 0);
    let (mut cat_ok, mut inst_ok, mut pose_ok_given_cat) = (0, 0, 0);
    for (p, t) in predictions.iter().zip(ground_truth) {
        let ae = angular_error_deg(p.yaw_deg, t.yaw_deg);
        ae_sum += ae;
        under_22 += usize::from(ae < 22.5);
        under_45 += usize::from(ae < 45.0);
        let cat = p.category_id == t.category_id;
        cat_ok += usize::from(cat);
        inst_ok += usize::from(p.object_id == t.object_id);
        pose_ok_given_cat += usize::from(cat && ae < 45.0);
    }
    Ok(EvalReport {
        count: predictions.len(),
        mae_degrees: ae_sum / n,
        pct_ae_under_22_5: pct(under_22, n),
        pct_ae_under_45: pct(under_45, n),
        category_accuracy: pct(cat_ok, n),
        instance_accuracy: pct(inst_ok, n),
        pose_accuracy_given_correct_category: pct(pose_ok_given_cat, cat_ok as f64),
        pose_accuracy_zero_for_misclassified: pct(pose_ok_given_cat, n),
        synthesis_mse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(v: &[f64]) -> StyleVector {
        StyleVector::from_column_slice(v)
    }

    fn two_clusters() -> LabeledStyleSet {
        LabeledStyleSet::new(
            vec![sv(&[0.0, 0.0]), sv(&[0.1, 0.0]), sv(&[0.0, 0.1]), sv(&[10.0, 0.0]), sv(&[10.1, 0.0])],
            ["a0", "a1", "a2", "b0", "b1"].map(String::from).to_vec(),
            ["A", "A", "A", "B", "B"].map(String::from).to_vec(),
        )
        .unwrap()
    }

    fn p(yaw: f64, c: &str, o: &str) -> Prediction {
        Prediction {
            yaw_deg: yaw,
            category_id: c.into(),
            object_id: o.into(),
        }
    }

    #[test]
    fn exact_match_k1() {
        let s = two_clusters();
        assert_eq!(knn_classify(&s, &sv(&[10.1, 0.0]), 1, Target::Instance).unwrap(), "b1");
    }

    #[test]
    fn cluster_majority_k3() {
        let s = two_clusters();
        assert_eq!(knn_classify(&s, &sv(&[0.5, 0.2]), 3, Target::Category).unwrap(), "A");
        assert_eq!(knn_classify(&s, &sv(&[9.0, 0.0]), 3, Target::Category).unwrap(), "B");
    }

    #[test]
    fn vote_tie_goes_to_closer_label() {
        let s = two_clusters();
        let set = LabeledStyleSet::new(
            vec![sv(&[0.0]), sv(&[3.0])],
            vec!["x".into(), "y".into()],
            vec!["X".into(), "Y".into()],
        )
        .unwrap();
        assert_eq!(knn_classify(&set, &sv(&[1.0]), 2, Target::Category).unwrap(), "X");
        assert_eq!(knn_classify(&set, &sv(&[1.5]), 2, Target::Category).unwrap(), "X");
        assert_eq!(knn_classify(&set, &sv(&[2.0]), 2, Target::Category).unwrap(), "Y");
        assert!(matches!(
            knn_classify(&s, &sv(&[0.0, 0.0]), 6, Target::Category),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn empty_support() {
        assert!(matches!(
            LabeledStyleSet::new(vec![], vec![], vec![]),
            Err(Error::EmptySupport)
        ));
    }

    #[test]
    fn wraparound_pair() {
        let r = evaluate(&[p(359.0, "c", "o")], &[p(1.0, "c", "o")], None).unwrap();
        assert_eq!(r.mae_degrees, 2.0);
        assert_eq!(r.pct_ae_under_22_5, 100.0);
        assert_eq!(r.pct_ae_under_45, 100.0);
    }

    #[test]
    fn thirty_degree_errors() {
        let preds: Vec<_> = (0..8).map(|i| p(i as f64 * 45.0 + 30.0, "c", "o")).collect();
        let truth: Vec<_> = (0..8).map(|i| p(i as f64 * 45.0, "c", "o")).collect();
        let r = evaluate(&preds, &truth, None).unwrap();
        assert_eq!(r.mae_degrees, 30.0);
        assert_eq!(r.pct_ae_under_22_5, 0.0);
        assert_eq!(r.pct_ae_under_45, 100.0);
    }

    #[test]
    fn pose_conventions_differ_on_misclassification() {
        let preds = [p(0.0, "c", "o"), p(10.0, "d", "q")];
        let truth = [p(0.0, "c", "o"), p(10.0, "c", "o")];
        let r = evaluate(&preds, &truth, Some(0.5)).unwrap();
        assert_eq!(r.category_accuracy, 50.0);
        assert_eq!(r.instance_accuracy, 50.0);
        assert_eq!(r.pose_accuracy_given_correct_category, 100.0);
        assert_eq!(r.pose_accuracy_zero_for_misclassified, 50.0);
        assert_eq!(r.pct_ae_under_45, 100.0);
        assert!(matches!(
            evaluate(&preds, &truth[..1], None),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        ));
    }

    proptest! {
        #[test]
        fn thresholds_ordered_and_mae_bounded(pairs in prop::collection::vec((0.0..360.0f64, 0.0..360.0f64), 1..40)) {
            let preds: Vec<_> = pairs.iter().map(|(a, _)| p(*a, "c", "o")).collect();
            let truth: Vec<_> = pairs.iter().map(|(_, b)| p(*b, "c", "o")).collect();
            let r = evaluate(&preds, &truth, None).unwrap();
            prop_assert!(r.pct_ae_under_22_5 <= r.pct_ae_under_45);
            prop_assert!(r.mae_degrees <= 180.0 + 1e-9);
        }

        #[test]
        fn knn_permutation_and_scale_invariant(
            points in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, 0usize..3), 2..12),
            query in (-5.0..5.0f64, -5.0..5.0f64),
            k in 1usize..4,
            scale in 0.1..10.0f64,
            rot in 0usize..12,
        ) {
            let k = k.min(points.len());
            let build = |pts: &[(f64, f64, usize)], c: f64| {
                LabeledStyleSet::new(
                    pts.iter().map(|(x, y, _)| sv(&[x * c, y * c])).collect(),
                    pts.iter().enumerate().map(|(i, _)| format!("o{i}")).collect(),
                    pts.iter().map(|(_, _, l)| format!("L{l}")).collect(),
                ).unwrap()
            };
            let q = sv(&[query.0, query.1]);
            let base = knn_classify(&build(&points, 1.0), &q, k, Target::Category).unwrap();
            let mut rotated = points.clone();
            rotated.rotate_left(rot % points.len());
            prop_assert_eq!(&knn_classify(&build(&rotated, 1.0), &q, k, Target::Category).unwrap(), &base);
            let scaled = knn_classify(&build(&points, scale), &(q * scale), k, Target::Category).unwrap();
            prop_assert_eq!(&scaled, &base);
        }
    }
}
