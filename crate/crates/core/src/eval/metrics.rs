use crate::error::{Error, Result};
use crate::kb::{Triple, TripleKey};

use super::normalize::normalize_answer;
use super::taxonomy::{wup, TaxonomyTree};

fn check_lengths(predictions: usize, truths: usize) -> Result<()> {
    if truths == 0 {
        return Err(Error::EmptyEvaluation);
    }
    if predictions != truths {
        return Err(Error::LengthMismatch { predictions, truths });
    }
    Ok(())
}

/// Fraction of instances whose normalized ground truth is among the first
/// `k` normalized predictions.
pub fn topk_accuracy<P: AsRef<str>, G: AsRef<str>>(
    predictions: &[Vec<P>],
    truths: &[G],
    k: usize,
) -> Result<f64> {
    check_lengths(predictions.len(), truths.len())?;
    let hits = predictions
        .iter()
        .zip(truths)
        .filter(|(pred, gt)| topk_hit(pred, gt.as_ref(), k))
        .count();
    Ok(hits as f64 / truths.len() as f64)
}

pub(crate) fn topk_hit<P: AsRef<str>>(pred: &[P], gt: &str, k: usize) -> bool {
    let gt = normalize_answer(gt);
    pred.iter().take(k).any(|p| normalize_answer(p.as_ref()) == gt)
}

/// Token-set Wu-Palmer score of one prediction against one ground truth,
/// before thresholding. Tokens missing from the taxonomy score 1 against an
/// identical token and 0 otherwise.
pub fn wups_similarity(taxonomy: Option<&TaxonomyTree>, prediction: &str, truth: &str) -> f64 {
    let pred = normalize_answer(prediction);
    let gt = normalize_answer(truth);
    let pred: Vec<&str> = pred.split(' ').filter(|t| !t.is_empty()).collect();
    let gt: Vec<&str> = gt.split(' ').filter(|t| !t.is_empty()).collect();
    if pred.is_empty() || gt.is_empty() {
        return 0.0;
    }
    let sim = |a: &str, b: &str| {
        taxonomy
            .and_then(|t| wup(t, a, b))
            .unwrap_or(if a == b { 1.0 } else { 0.0 })
    };
    let cover = |xs: &[&str], ys: &[&str]| -> f64 {
        xs.iter()
            .map(|x| ys.iter().map(|y| sim(x, y)).fold(0.0, f64::max))
            .product()
    };
    cover(&pred, &gt).min(cover(&gt, &pred))
}

/// Scores below `threshold` are down-weighted by 0.1.
pub fn apply_threshold(score: f64, threshold: f64) -> f64 {
    if score < threshold {
        0.1 * score
    } else {
        score
    }
}

/// Thresholded WUPS of the best of the first `k` predictions.
pub(crate) fn wups_instance<P: AsRef<str>>(
    taxonomy: Option<&TaxonomyTree>,
    pred: &[P],
    gt: &str,
    threshold: f64,
    k: usize,
) -> f64 {
    pred.iter()
        .take(k)
        .map(|p| apply_threshold(wups_similarity(taxonomy, p.as_ref(), gt), threshold))
        .fold(0.0, f64::max)
}

/// Mean thresholded WUPS over instances, scoring each instance by its best
/// prediction among the first `k`.
pub fn wups_score<P: AsRef<str>, G: AsRef<str>>(
    predictions: &[Vec<P>],
    truths: &[G],
    taxonomy: Option<&TaxonomyTree>,
    threshold: f64,
    k: usize,
) -> Result<f64> {
    check_lengths(predictions.len(), truths.len())?;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Invalid(format!("WUPS threshold {threshold} outside [0, 1]")));
    }
    let total: f64 = predictions
        .iter()
        .zip(truths)
        .map(|(pred, gt)| wups_instance(taxonomy, pred, gt.as_ref(), threshold, k))
        .sum();
    Ok(total / truths.len() as f64)
}

/// Fraction of instances whose ground-truth fact is among the first `k`
/// predicted supporting facts. Facts are compared by canonical subject, raw
/// predicate and canonical object.
pub fn fact_accuracy(predictions: &[Vec<Triple>], truths: &[Triple], k: usize) -> Result<f64> {
    check_lengths(predictions.len(), truths.len())?;
    let hits = predictions
        .iter()
        .zip(truths)
        .filter(|(pred, gt)| fact_hit(pred, &gt.key(), k))
        .count();
    Ok(hits as f64 / truths.len() as f64)
}

pub(crate) fn fact_hit(pred: &[Triple], gt: &TripleKey, k: usize) -> bool {
    pred.iter().take(k).any(|f| f.key() == *gt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{Predicate, PredicateKind};
    use proptest::prelude::*;

    fn tree() -> TaxonomyTree {
        TaxonomyTree::from_edges([("animal", "entity"), ("cat", "animal"), ("dog", "animal")]).unwrap()
    }

    #[test]
    fn topk_definition() {
        let preds = vec![vec!["dog", "cat"]];
        assert_eq!(topk_accuracy(&preds, &["cat"], 1).unwrap(), 0.0);
        assert_eq!(topk_accuracy(&preds, &["Cats"], 3).unwrap(), 1.0);
        let empty: Vec<Vec<&str>> = vec![];
        let no_truths: [&str; 0] = [];
        assert!(matches!(topk_accuracy(&empty, &no_truths, 1), Err(Error::EmptyEvaluation)));
        assert!(matches!(topk_accuracy(&preds, &["a", "b"], 1), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn wups_examples() {
        let t = tree();
        assert_eq!(wups_similarity(Some(&t), "cat", "cat"), 1.0);
        assert_eq!(wups_similarity(Some(&t), "cat", "dog"), 2.0 / 3.0);
        let preds = vec![vec!["dog"]];
        let at_09 = wups_score(&preds, &["cat"], Some(&t), 0.9, 1).unwrap();
        assert!((at_09 - 0.2 / 3.0).abs() < 1e-12);
        let at_00 = wups_score(&preds, &["cat"], Some(&t), 0.0, 1).unwrap();
        assert!((at_00 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_taxonomy_falls_back_to_exact_match() {
        let t = tree();
        assert_eq!(wups_similarity(Some(&t), "sofa", "sofa"), 1.0);
        assert_eq!(wups_similarity(Some(&t), "sofa", "cat"), 0.0);
        assert_eq!(wups_similarity(None, "red cat", "cat red"), 1.0);
    }

    #[test]
    fn multi_word_min_of_products() {
        let t = tree();
        // pred {cat, dog} vs gt {cat}: cover(pred) = 1 * 2/3, cover(gt) = 1
        assert!((wups_similarity(Some(&t), "cat dog", "cat") - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn facts_compare_by_key() {
        let gt = Triple::new("Cat", Predicate::new(PredicateKind::CapableOf), "ClimbingTrees", PredicateKind::CapableOf.default_source());
        let same = Triple::new("cat", Predicate::new(PredicateKind::CapableOf), "climbing trees", PredicateKind::CapableOf.default_source());
        let other = Triple::new("cat", Predicate::new(PredicateKind::HasA), "claw", PredicateKind::HasA.default_source());
        assert_eq!(fact_accuracy(&[vec![same]], std::slice::from_ref(&gt), 1).unwrap(), 1.0);
        assert_eq!(fact_accuracy(&[vec![other]], &[gt], 1).unwrap(), 0.0);
    }

    const WORDS: [&str; 6] = ["cat", "dog", "animal", "entity", "sofa", "cats"];

    proptest! {
        #[test]
        fn monotone_in_k_and_threshold(
            cases in prop::collection::vec(
                (prop::collection::vec(0usize..6, 0..12), 0usize..6), 1..20),
            t1 in 0.0f64..=1.0, t2 in 0.0f64..=1.0,
        ) {
            let t = tree();
            let preds: Vec<Vec<&str>> = cases.iter().map(|(p, _)| p.iter().map(|&i| WORDS[i]).collect()).collect();
            let gts: Vec<&str> = cases.iter().map(|(_, g)| WORDS[*g]).collect();
            let a1 = topk_accuracy(&preds, &gts, 1).unwrap();
            let a3 = topk_accuracy(&preds, &gts, 3).unwrap();
            let a10 = topk_accuracy(&preds, &gts, 10).unwrap();
            prop_assert!(a1 <= a3 && a3 <= a10);
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let w_lo = wups_score(&preds, &gts, Some(&t), lo, 1).unwrap();
            let w_hi = wups_score(&preds, &gts, Some(&t), hi, 1).unwrap();
            prop_assert!(w_lo >= w_hi);
            prop_assert!(a1 <= w_hi + 1e-12);
        }
    }
}
