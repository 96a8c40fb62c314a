use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::keywords::{entity_keywords, extract_keywords, jaccard, KeywordSet};
use crate::concepts::{select_object, top_concept, AnnotationSet, Cue, ImageAnnotation, VisualConceptKind};
use crate::error::{Error, Result};
use crate::eval::normalize_answer;
use crate::kb::{query_vc, Triple, TripleStore, VcMatch};
use crate::qq::{tokenize, AnswerSource, QqClassifier, QueryType};

/// How often each (normalized) answer occurs in the training answers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnswerFrequencyTable {
    counts: BTreeMap<String, usize>,
}

impl AnswerFrequencyTable {
    pub fn from_answers<S: AsRef<str>>(answers: impl IntoIterator<Item = S>) -> Self {
        let mut counts = BTreeMap::new();
        for a in answers {
            let key = normalize_answer(a.as_ref());
            if !key.is_empty() {
                *counts.entry(key).or_insert(0) += 1;
            }
        }
        AnswerFrequencyTable { counts }
    }

    pub fn count(&self, answer: &str) -> usize {
        self.counts.get(&normalize_answer(answer)).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Answers by descending count, ties in lexicographic order.
    pub fn ranked(&self) -> Vec<(&str, usize)> {
        let mut v: Vec<(&str, usize)> = self.counts.iter().map(|(k, &c)| (k.as_str(), c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }
}

/// One ranked answer with the fact that supports it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerCandidate {
    /// Canonical label of the answering entity.
    pub answer: String,
    #[serde(rename = "fact")]
    pub supporting_fact: Triple,
    /// Jaccard score of the fact's KB entity against the question keywords.
    pub score: f64,
    pub query_type: QueryType,
    /// 1-based rank of the query type that produced this candidate.
    pub query_type_rank: usize,
    pub source: AnswerSource,
}

/// Score every `(?X, ?Y)` binding against the question and answer with `?X`.
///
/// Order: score descending, then the training frequency of `?X`, then `?X`
/// and `?Y` labels ascending.
pub fn answer_from_image(
    matches: &[VcMatch<'_>],
    keywords: &KeywordSet,
    freq: &AnswerFrequencyTable,
    query_type: QueryType,
    rank: usize,
) -> Vec<AnswerCandidate> {
    let mut scored: Vec<(f64, usize, &VcMatch<'_>)> = matches
        .iter()
        .map(|m| {
            let score = jaccard(&entity_keywords(m.kb_entity()), keywords);
            (score, freq.count(m.concept.label.canonical()), m)
        })
        .collect();
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(b.1.cmp(&a.1))
            .then_with(|| a.2.concept.label.cmp(&b.2.concept.label))
            .then_with(|| a.2.fact.object.cmp(&b.2.fact.object))
            .then_with(|| a.2.fact.predicate.cmp(&b.2.fact.predicate))
    });
    scored
        .into_iter()
        .map(|(score, _, m)| AnswerCandidate {
            answer: m.concept.label.canonical().to_string(),
            supporting_fact: m.fact.clone(),
            score,
            query_type,
            query_type_rank: rank,
            source: AnswerSource::Image,
        })
        .collect()
}

/// Pick the concept `?X` the question is about and answer with its `?Y`s.
///
/// Scenes and actions use the most confident concept of that kind; objects
/// are chosen by the location/size cues in the question. The `?Y`s are
/// ordered by training frequency, then label. When no concept can be
/// selected, or the selected one has no facts, the result is empty.
pub fn answer_from_kb(
    matches: &[VcMatch<'_>],
    annotation: &ImageAnnotation,
    cues: &HashSet<Cue>,
    keywords: &KeywordSet,
    freq: &AnswerFrequencyTable,
    query_type: QueryType,
    rank: usize,
) -> Vec<AnswerCandidate> {
    let selected = match query_type.vc {
        VisualConceptKind::Object => select_object(annotation, cues),
        kind => top_concept(annotation, kind),
    };
    let Ok(selected) = selected else {
        return Vec::new();
    };
    let mut picked: Vec<(usize, &VcMatch<'_>)> = matches
        .iter()
        .filter(|m| m.concept.label == selected.label)
        .map(|m| (freq.count(m.kb_entity().canonical()), m))
        .collect();
    picked.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then_with(|| a.1.fact.object.cmp(&b.1.fact.object))
            .then_with(|| a.1.fact.predicate.cmp(&b.1.fact.predicate))
    });
    picked
        .into_iter()
        .map(|(_, m)| AnswerCandidate {
            answer: m.kb_entity().canonical().to_string(),
            supporting_fact: m.fact.clone(),
            score: jaccard(&entity_keywords(m.kb_entity()), keywords),
            query_type,
            query_type_rank: rank,
            source: AnswerSource::KB,
        })
        .collect()
}

/// Where the query types for a question come from.
#[derive(Debug, Clone, Copy)]
pub enum QueryTypeSource<'a> {
    /// Use the annotated query type.
    GroundTruth(QueryType),
    /// Use the classifier's `k` most probable query types.
    Classifier { model: &'a QqClassifier, k: usize },
}

/// Everything the answering pipeline reads. All of it is immutable, so one
/// context can serve many questions concurrently.
#[derive(Debug, Clone, Copy)]
pub struct AnswerContext<'a> {
    pub store: &'a TripleStore,
    pub annotations: &'a AnnotationSet,
    pub frequencies: &'a AnswerFrequencyTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerStatus {
    Answered,
    NoSupportingFact,
}

/// The query run for one query type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRun {
    pub query_type: QueryType,
    pub probability: f64,
    /// Facts returned by the image-scoped query.
    pub facts: Vec<Triple>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerOutcome {
    pub status: AnswerStatus,
    pub queries: Vec<QueryRun>,
    pub candidates: Vec<AnswerCandidate>,
}

impl AnswerOutcome {
    pub fn best(&self) -> Option<&AnswerCandidate> {
        self.candidates.first()
    }
}

/// Answer a question about an image.
///
/// Each query type (in rank order) runs its image-scoped KB query and the
/// answering rule of its answer source. Image-source candidates of all types
/// are merged by score, ties going to the better-ranked type. The candidates
/// of a KB-source type keep their own order and are placed right after the
/// last Image-source candidate of any better-ranked type.
pub fn answer(
    ctx: AnswerContext<'_>,
    question: &str,
    image_id: &str,
    query_types: QueryTypeSource<'_>,
) -> Result<AnswerOutcome> {
    let annotation = ctx
        .annotations
        .get(image_id)
        .ok_or_else(|| Error::UnknownImage(image_id.to_string()))?;
    let ranked: Vec<(QueryType, f64)> = match query_types {
        QueryTypeSource::GroundTruth(qt) => vec![(qt, 1.0)],
        QueryTypeSource::Classifier { model, k } => model.predict_topk(question, k)?,
    };
    let keywords = extract_keywords(question);
    let cues = Cue::parse_tokens(&tokenize(question));

    let mut queries = Vec::with_capacity(ranked.len());
    let mut groups = Vec::with_capacity(ranked.len());
    for (i, &(qt, probability)) in ranked.iter().enumerate() {
        let rank = i + 1;
        let matches = query_vc(ctx.store, annotation, qt.rel, qt.vc);
        let candidates = match qt.answer_source {
            AnswerSource::Image => answer_from_image(&matches, &keywords, ctx.frequencies, qt, rank),
            AnswerSource::KB => {
                answer_from_kb(&matches, annotation, &cues, &keywords, ctx.frequencies, qt, rank)
            }
        };
        queries.push(QueryRun {
            query_type: qt,
            probability,
            facts: matches.iter().map(|m| m.fact.clone()).collect(),
        });
        groups.push(candidates);
    }

    let candidates = merge_ranked(groups);
    let status = if candidates.is_empty() {
        AnswerStatus::NoSupportingFact
    } else {
        AnswerStatus::Answered
    };
    Ok(AnswerOutcome {
        status,
        queries,
        candidates,
    })
}

/// Merge per-type candidate groups (index = rank - 1) into one list.
fn merge_ranked(groups: Vec<Vec<AnswerCandidate>>) -> Vec<AnswerCandidate> {
    // Image-source candidates with (rank, position within their group).
    let mut image: Vec<(usize, usize, AnswerCandidate)> = Vec::new();
    let mut kb: Vec<(usize, Vec<AnswerCandidate>)> = Vec::new();
    for (r, group) in groups.into_iter().enumerate() {
        let is_kb = group.first().is_some_and(|c| c.source == AnswerSource::KB);
        if is_kb {
            kb.push((r, group));
        } else {
            image.extend(group.into_iter().enumerate().map(|(pos, c)| (r, pos, c)));
        }
    }
    image.sort_by(|a, b| {
        b.2.score
            .total_cmp(&a.2.score)
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });

    // A KB group of rank r goes right after the last Image candidate whose
    // rank is better than r.
    let slot = |r: usize| {
        image
            .iter()
            .rposition(|(ir, _, _)| *ir < r)
            .map_or(0, |p| p + 1)
    };
    let mut kb_slots: Vec<(usize, usize, Vec<AnswerCandidate>)> =
        kb.into_iter().map(|(r, g)| (slot(r), r, g)).collect();
    kb_slots.sort_by_key(|(s, r, _)| (*s, *r));

    let mut out = Vec::new();
    let mut kb_iter = kb_slots.into_iter().peekable();
    let n_image = image.len();
    let mut image_iter = image.into_iter();
    for i in 0..=n_image {
        while let Some((_, _, group)) = kb_iter.next_if(|(s, _, _)| *s == i) {
            out.extend(group);
        }
        if let Some((_, _, c)) = image_iter.next() {
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::{BoundingBox, VisualConceptInstance};
    use crate::entity::EntityId;
    use crate::kb::{Predicate, PredicateKind};

    fn obj(label: &str, x: f64) -> VisualConceptInstance {
        VisualConceptInstance {
            label: EntityId::new(label),
            kind: VisualConceptKind::Object,
            confidence: 0.9,
            bbox: Some(BoundingBox { x, y: 10.0, w: 20.0, h: 20.0 }),
        }
    }

    fn scene(label: &str, conf: f64) -> VisualConceptInstance {
        VisualConceptInstance {
            label: EntityId::new(label),
            kind: VisualConceptKind::Scene,
            confidence: conf,
            bbox: None,
        }
    }

    fn fact(s: &str, p: PredicateKind, o: &str) -> Triple {
        Triple::new(s, Predicate::new(p), o, p.default_source())
    }

    fn image(concepts: Vec<VisualConceptInstance>) -> ImageAnnotation {
        ImageAnnotation {
            image_id: "Img1".into(),
            width: 400.0,
            height: 300.0,
            concepts,
        }
    }

    const CAPABLE_IMG: QueryType =
        QueryType::new(PredicateKind::CapableOf, VisualConceptKind::Object, AnswerSource::Image);

    #[test]
    fn image_answer_cat_climbs_trees() {
        let mut store = TripleStore::new();
        store.insert(fact("Cat", PredicateKind::CapableOf, "ClimbingTrees"));
        store.insert(fact("Dog", PredicateKind::CapableOf, "GuardingHouse"));
        let img = image(vec![obj("cat", 10.0), obj("dog", 200.0)]);
        let matches = query_vc(&store, &img, PredicateKind::CapableOf, VisualConceptKind::Object);
        let kw: KeywordSet = ["climb", "tree"].into_iter().collect();
        let c = answer_from_image(&matches, &kw, &AnswerFrequencyTable::default(), CAPABLE_IMG, 1);
        assert_eq!(c[0].answer, "cat");
        assert_eq!(c[0].supporting_fact.to_string(), "(Cat,CapableOf,ClimbingTrees)");
        assert_eq!(c[0].score, 1.0);
        assert_eq!(c[1].score, 0.0);
    }

    #[test]
    fn image_answer_singleton_regardless_of_score() {
        let mut store = TripleStore::new();
        store.insert(fact("Dog", PredicateKind::CapableOf, "GuardingHouse"));
        let img = image(vec![obj("dog", 200.0)]);
        let matches = query_vc(&store, &img, PredicateKind::CapableOf, VisualConceptKind::Object);
        let kw: KeywordSet = ["climb"].into_iter().collect();
        let c = answer_from_image(&matches, &kw, &AnswerFrequencyTable::default(), CAPABLE_IMG, 1);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].answer, "dog");
    }

    #[test]
    fn image_answer_score_tie_uses_frequency() {
        let mut store = TripleStore::new();
        store.insert(fact("Bird", PredicateKind::CapableOf, "fly high"));
        store.insert(fact("Plane", PredicateKind::CapableOf, "fly far"));
        let img = image(vec![obj("bird", 10.0), obj("plane", 200.0)]);
        let matches = query_vc(&store, &img, PredicateKind::CapableOf, VisualConceptKind::Object);
        let kw: KeywordSet = ["fly"].into_iter().collect();
        let mut answers = vec!["plane"; 7];
        answers.extend(["bird"; 2]);
        let freq = AnswerFrequencyTable::from_answers(answers);
        let c = answer_from_image(&matches, &kw, &freq, CAPABLE_IMG, 1);
        assert_eq!(c[0].score, 0.5);
        assert_eq!(c[1].score, 0.5);
        assert_eq!(c[0].answer, "plane");
    }

    #[test]
    fn kb_answer_by_frequency() {
        let mut store = TripleStore::new();
        store.insert(fact("kitchen", PredicateKind::UsedFor, "preparing food"));
        store.insert(fact("kitchen", PredicateKind::UsedFor, "cooking"));
        let img = image(vec![scene("kitchen", 0.9)]);
        let qt = QueryType::new(PredicateKind::UsedFor, VisualConceptKind::Scene, AnswerSource::KB);
        let matches = query_vc(&store, &img, qt.rel, qt.vc);
        let mut answers = vec!["cooking"; 5];
        answers.extend(["preparing food"; 2]);
        let freq = AnswerFrequencyTable::from_answers(answers);
        let c = answer_from_kb(&matches, &img, &HashSet::new(), &KeywordSet::default(), &freq, qt, 1);
        let got: Vec<_> = c.iter().map(|c| c.answer.as_str()).collect();
        assert_eq!(got, ["cooking", "preparing food"]);
    }

    #[test]
    fn kb_answer_uses_location_cue() {
        let mut store = TripleStore::new();
        store.insert(fact("cup", PredicateKind::UsedFor, "drinking"));
        store.insert(fact("knife", PredicateKind::UsedFor, "cutting"));
        let img = image(vec![obj("cup", 10.0), obj("knife", 300.0)]);
        let qt = QueryType::new(PredicateKind::UsedFor, VisualConceptKind::Object, AnswerSource::KB);
        let matches = query_vc(&store, &img, qt.rel, qt.vc);
        let freq = AnswerFrequencyTable::default();
        let kw = KeywordSet::default();
        let left = answer_from_kb(&matches, &img, &HashSet::from([Cue::Left]), &kw, &freq, qt, 1);
        assert_eq!(left.len(), 1);
        assert_eq!(left[0].answer, "drinking");
        let right = answer_from_kb(&matches, &img, &HashSet::from([Cue::Right]), &kw, &freq, qt, 1);
        assert_eq!(right[0].answer, "cutting");
    }

    #[test]
    fn kb_answer_empty_when_selected_concept_has_no_facts() {
        let store = TripleStore::new();
        let img = image(vec![scene("kitchen", 0.9)]);
        let qt = QueryType::new(PredicateKind::UsedFor, VisualConceptKind::Scene, AnswerSource::KB);
        let matches = query_vc(&store, &img, qt.rel, qt.vc);
        let c = answer_from_kb(&matches, &img, &HashSet::new(), &KeywordSet::default(), &AnswerFrequencyTable::default(), qt, 1);
        assert!(c.is_empty());
    }

    fn cand(source: AnswerSource, rank: usize, score: f64, answer: &str) -> AnswerCandidate {
        AnswerCandidate {
            answer: answer.into(),
            supporting_fact: fact("a", PredicateKind::HasA, "b"),
            score,
            query_type: CAPABLE_IMG,
            query_type_rank: rank,
            source,
        }
    }

    #[test]
    fn merge_order() {
        use AnswerSource::{Image, KB};
        let groups = vec![
            vec![cand(Image, 1, 0.2, "a1"), cand(Image, 1, 0.0, "a2")],
            vec![cand(KB, 2, 0.0, "k1"), cand(KB, 2, 0.0, "k2")],
            vec![cand(Image, 3, 0.5, "c1"), cand(Image, 3, 0.2, "c2")],
        ];
        let merged: Vec<_> = merge_ranked(groups).into_iter().map(|c| c.answer).collect();
        assert_eq!(merged, ["c1", "a1", "c2", "a2", "k1", "k2"]);

        let groups = vec![vec![], vec![cand(KB, 2, 0.0, "k1")], vec![cand(Image, 3, 0.1, "c1")]];
        let merged: Vec<_> = merge_ranked(groups).into_iter().map(|c| c.answer).collect();
        assert_eq!(merged, ["k1", "c1"]);
    }

    /// A classifier that ignores the question and ranks `types` in order.
    fn fixed_ranking(types: &[QueryType]) -> QqClassifier {
        use crate::qq::{LstmParameters, LstmShape, QueryRegistry, TrainingConfig, Vocabulary};
        let vocabulary = Vocabulary::build(std::iter::empty::<&[String]>());
        let registry = QueryRegistry::from_types(types.iter().copied());
        let mut params = LstmParameters::zeros(LstmShape::new(vocabulary.len(), 2, 2, types.len()));
        for (rank, qt) in types.iter().enumerate() {
            params.b_p[registry.index_of(qt).unwrap()] = -(rank as f64);
        }
        QqClassifier {
            format: crate::qq::CHECKPOINT_FORMAT.into(),
            version: crate::qq::CHECKPOINT_VERSION,
            config: TrainingConfig::default(),
            vocabulary,
            registry,
            params,
            loss_curve: Vec::new(),
            answer_frequencies: AnswerFrequencyTable::default(),
        }
    }

    #[test]
    fn falls_through_to_the_second_query_type() {
        let mut store = TripleStore::new();
        store.insert(fact("Cat", PredicateKind::CapableOf, "ClimbingTrees"));
        store.insert(fact("Dog", PredicateKind::CapableOf, "Fetching"));
        let annotations = AnnotationSet::new(vec![image(vec![obj("cat", 10.0), obj("dog", 200.0)])]).unwrap();
        let empty = QueryType::new(PredicateKind::PartOf, VisualConceptKind::Object, AnswerSource::Image);
        let scene = QueryType::new(PredicateKind::IsA, VisualConceptKind::Scene, AnswerSource::KB);
        let model = fixed_ranking(&[empty, CAPABLE_IMG, scene]);
        let freq = AnswerFrequencyTable::default();
        let ctx = AnswerContext { store: &store, annotations: &annotations, frequencies: &freq };
        let q = "Which animal can climb trees?";

        let one = answer(ctx, q, "Img1", QueryTypeSource::Classifier { model: &model, k: 1 }).unwrap();
        assert_eq!(one.queries[0].query_type, empty);
        assert_eq!(one.status, AnswerStatus::NoSupportingFact);
        let three = answer(ctx, q, "Img1", QueryTypeSource::Classifier { model: &model, k: 3 }).unwrap();
        let order: Vec<QueryType> = three.queries.iter().map(|r| r.query_type).collect();
        assert_eq!(order, [empty, CAPABLE_IMG, scene]);
        let best = three.best().unwrap();
        assert_eq!(best.query_type_rank, 2);
        assert_eq!(best.answer, "cat");
        assert_eq!(best.supporting_fact, fact("Cat", PredicateKind::CapableOf, "ClimbingTrees"));
    }

    proptest::proptest! {
        #[test]
        fn irrelevant_facts_keep_the_top_image_answer(
            extra in proptest::collection::vec(("[a-z]{3,8}", "[a-z]{3,8}"), 0..20)
        ) {
            let mut store = TripleStore::new();
            store.insert(fact("Cat", PredicateKind::CapableOf, "ClimbingTrees"));
            store.insert(fact("Dog", PredicateKind::CapableOf, "Fetching"));
            let img = image(vec![obj("cat", 10.0), obj("dog", 200.0), obj("owl", 300.0)]);
            let kw: KeywordSet = ["climb", "tree"].into_iter().collect();
            let freq = AnswerFrequencyTable::default();
            let before = answer_from_image(
                &query_vc(&store, &img, CAPABLE_IMG.rel, CAPABLE_IMG.vc), &kw, &freq, CAPABLE_IMG, 1,
            );
            for (s, o) in &extra {
                // Zero overlap with the keywords and a subject other than the answer.
                if kw.contains(&crate::answer::stem(o)) || s == "cat" {
                    continue;
                }
                store.insert(fact(s, PredicateKind::CapableOf, o));
                store.insert(fact("owl", PredicateKind::CapableOf, o));
            }
            let after = answer_from_image(
                &query_vc(&store, &img, CAPABLE_IMG.rel, CAPABLE_IMG.vc), &kw, &freq, CAPABLE_IMG, 1,
            );
            proptest::prop_assert_eq!(&before[0].answer, &after[0].answer);
            proptest::prop_assert_eq!(&before[0].supporting_fact, &after[0].supporting_fact);
        }
    }

    #[test]
    fn frequency_table() {
        let t = AnswerFrequencyTable::from_answers(["Cats", "cat", "dog", "cat"]);
        assert_eq!(t.count("cat"), 3);
        assert_eq!(t.count("Dogs"), 1);
        assert_eq!(t.ranked(), [("cat", 3), ("dog", 1)]);
    }
}
