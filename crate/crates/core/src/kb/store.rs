use std::collections::{HashMap, HashSet};

use crate::entity::EntityId;
use crate::error::{Error, Result};

use super::{PredicateKind, Triple, TripleKey};

/// A lookup pattern; unbound positions are wildcards.
#[derive(Debug, Clone, Copy, Default)]
pub struct TriplePattern<'a> {
    pub subject: Option<&'a EntityId>,
    pub predicate: Option<PredicateKind>,
    pub object: Option<&'a EntityId>,
}

impl<'a> TriplePattern<'a> {
    pub fn subject(mut self, s: &'a EntityId) -> Self {
        self.subject = Some(s);
        self
    }

    pub fn predicate(mut self, p: PredicateKind) -> Self {
        self.predicate = Some(p);
        self
    }

    pub fn object(mut self, o: &'a EntityId) -> Self {
        self.object = Some(o);
        self
    }

    pub fn matches(&self, t: &Triple) -> bool {
        self.subject.is_none_or(|s| *s == t.subject)
            && self.predicate.is_none_or(|p| p == t.predicate.kind())
            && self.object.is_none_or(|o| *o == t.object)
    }

    fn is_unbound(&self) -> bool {
        self.subject.is_none() && self.predicate.is_none() && self.object.is_none()
    }
}

/// In-memory triple store with exact-match indexes.
///
/// Mutation happens through `&mut self` only; once the store is shared behind
/// `&` (or an `Arc`) it is frozen and lookups are safe from any number of
/// threads.
#[derive(Debug, Clone, Default)]
pub struct TripleStore {
    triples: Vec<Triple>,
    keys: HashSet<TripleKey>,
    by_subject: HashMap<String, Vec<usize>>,
    by_subject_kind: HashMap<(String, PredicateKind), Vec<usize>>,
    by_object: HashMap<String, Vec<usize>>,
}

impl TripleStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a triple. Returns `false` (and keeps the existing fact) when a
    /// triple with the same canonical subject, raw predicate and canonical
    /// object is already stored.
    pub fn insert(&mut self, triple: Triple) -> bool {
        if !self.keys.insert(triple.key()) {
            return false;
        }
        let idx = self.triples.len();
        let subject = triple.subject.canonical().to_string();
        self.by_subject.entry(subject.clone()).or_default().push(idx);
        self.by_subject_kind
            .entry((subject, triple.predicate.kind()))
            .or_default()
            .push(idx);
        self.by_object
            .entry(triple.object.canonical().to_string())
            .or_default()
            .push(idx);
        self.triples.push(triple);
        true
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.keys.contains(&triple.key())
    }

    /// All triples matching `pattern`, in insertion order.
    pub fn lookup(&self, pattern: TriplePattern<'_>) -> Result<Vec<&Triple>> {
        if pattern.is_unbound() {
            return Err(Error::UnboundPattern);
        }
        let candidates: Option<&Vec<usize>> = match (pattern.subject, pattern.predicate) {
            (Some(s), Some(p)) => Some(
                self.by_subject_kind
                    .get(&(s.canonical().to_string(), p))
                    .unwrap_or(&EMPTY),
            ),
            (Some(s), None) => Some(self.by_subject.get(s.canonical()).unwrap_or(&EMPTY)),
            (None, _) => pattern
                .object
                .map(|o| self.by_object.get(o.canonical()).unwrap_or(&EMPTY)),
        };
        Ok(match candidates {
            Some(idx) => idx
                .iter()
                .map(|&i| &self.triples[i])
                .filter(|t| pattern.matches(t))
                .collect(),
            None => self.scan(pattern),
        })
    }

    /// Linear scan over every stored triple.
    pub fn scan(&self, pattern: TriplePattern<'_>) -> Vec<&Triple> {
        self.triples.iter().filter(|t| pattern.matches(t)).collect()
    }
}

static EMPTY: Vec<usize> = Vec::new();
