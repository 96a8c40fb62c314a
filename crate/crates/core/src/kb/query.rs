use crate::concepts::{ImageAnnotation, VisualConceptInstance, VisualConceptKind};
use crate::entity::EntityId;

use super::{PredicateKind, Triple, TriplePattern, TripleStore};

/// One binding of the image-scoped query: a concept `?X` in the image, a KB
/// entity `?Y`, and the fact `(?X, REL, ?Y)` that links them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VcMatch<'a> {
    pub concept: &'a VisualConceptInstance,
    pub fact: &'a Triple,
}

impl VcMatch<'_> {
    /// The KB-side entity `?Y`.
    pub fn kb_entity(&self) -> &EntityId {
        &self.fact.object
    }
}

/// Find `?X, ?Y` such that the image contains `?X`, `?X` has kind `vc`, and
/// `(?X, rel, ?Y)` is in the store.
///
/// Results follow the annotation's concept order, then store insertion order.
/// A concept label that appears twice in the image is queried once.
pub fn query_vc<'a>(
    store: &'a TripleStore,
    annotation: &'a ImageAnnotation,
    rel: PredicateKind,
    vc: VisualConceptKind,
) -> Vec<VcMatch<'a>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for concept in annotation.concepts_of(vc) {
        if !seen.insert(concept.label.canonical()) {
            continue;
        }
        let pattern = TriplePattern::default().subject(&concept.label).predicate(rel);
        let facts = store.lookup(pattern).expect("subject is bound");
        out.extend(facts.into_iter().map(|fact| VcMatch { concept, fact }));
    }
    out
}
