use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::concepts::VisualConceptKind;
use crate::error::{Error, Result};
use crate::kb::PredicateKind;

/// Which side of the supporting fact holds the answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AnswerSource {
    /// The visual concept `?X` in the image.
    Image,
    /// The KB entity `?Y`.
    KB,
}

impl AnswerSource {
    pub fn name(self) -> &'static str {
        match self {
            AnswerSource::Image => "Image",
            AnswerSource::KB => "KB",
        }
    }
}

impl fmt::Display for AnswerSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnswerSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "image" => Ok(AnswerSource::Image),
            "kb" => Ok(AnswerSource::KB),
            _ => Err(Error::Invalid(format!("unknown answer source {s:?}"))),
        }
    }
}

/// A `(REL, VC, AS)` combination: the label space of the question classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QueryType {
    pub rel: PredicateKind,
    pub vc: VisualConceptKind,
    pub answer_source: AnswerSource,
}

impl QueryType {
    pub const fn new(rel: PredicateKind, vc: VisualConceptKind, answer_source: AnswerSource) -> Self {
        QueryType {
            rel,
            vc,
            answer_source,
        }
    }
}

impl fmt::Display for QueryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.rel, self.vc, self.answer_source)
    }
}

/// Parses `REL,VC,AS`. The visual-concept and answer-source names are
/// disjoint, so the last two fields may come in either order and
/// `(Category,Image,Object)` reads the same as `Category,Object,Image`.
impl FromStr for QueryType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        let [rel, a, b] = parts[..] else {
            return Err(Error::Invalid(format!("query type {s:?} is not REL,VC,AS")));
        };
        let rel: PredicateKind = rel.parse()?;
        let (vc, answer_source) = match (a.parse::<VisualConceptKind>(), b.parse::<AnswerSource>()) {
            (Ok(vc), Ok(src)) => (vc, src),
            _ => (b.parse()?, a.parse()?),
        };
        Ok(QueryType::new(rel, vc, answer_source))
    }
}

use AnswerSource::{Image, KB};
use PredicateKind::*;
use VisualConceptKind::{Action, Object, Scene};

/// The query types of the reference question collection, most frequent first.
///
/// `(AtLocation, KB, Action)` takes the slot of a repeated
/// `(AtLocation, KB, Scene)` entry so the list keeps 32 distinct types.
pub const REFERENCE_QUERY_TYPES: [QueryType; 32] = [
    QueryType::new(Category, Object, Image),
    QueryType::new(IsA, Object, Image),
    QueryType::new(RelatedTo, Object, Image),
    QueryType::new(UsedFor, Object, Image),
    QueryType::new(CapableOf, Object, Image),
    QueryType::new(HasA, Object, Image),
    QueryType::new(HasProperty, Object, Image),
    QueryType::new(Comparative, Object, Image),
    QueryType::new(AtLocation, Object, Image),
    QueryType::new(AtLocation, Scene, KB),
    QueryType::new(UsedFor, Scene, KB),
    QueryType::new(UsedFor, Object, KB),
    QueryType::new(Desires, Object, Image),
    QueryType::new(RelatedTo, Object, KB),
    QueryType::new(AtLocation, Object, KB),
    QueryType::new(HasProperty, Scene, KB),
    QueryType::new(Comparative, Object, KB),
    QueryType::new(HasA, Object, KB),
    QueryType::new(HasA, Scene, KB),
    QueryType::new(PartOf, Object, Image),
    QueryType::new(AtLocation, Action, KB),
    QueryType::new(HasProperty, Object, KB),
    QueryType::new(Comparative, Scene, KB),
    QueryType::new(Category, Object, KB),
    QueryType::new(IsA, Object, KB),
    QueryType::new(ReceivesAction, Object, Image),
    QueryType::new(Comparative, Action, KB),
    QueryType::new(CapableOf, Object, KB),
    QueryType::new(ReceivesAction, Object, KB),
    QueryType::new(CreatedBy, Object, Image),
    QueryType::new(CapableOf, Scene, KB),
    QueryType::new(HasProperty, Action, KB),
];

/// The set of query types seen in training data, in a fixed order. Class
/// index `i` of the classifier is `types()[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QueryRegistry {
    types: Vec<QueryType>,
}

impl QueryRegistry {
    /// Deduplicated and sorted by `(rel, vc, answer_source)`, so the registry
    /// does not depend on the order of the training data.
    pub fn from_types(types: impl IntoIterator<Item = QueryType>) -> Self {
        let set: BTreeSet<QueryType> = types.into_iter().collect();
        QueryRegistry {
            types: set.into_iter().collect(),
        }
    }

    pub fn types(&self) -> &[QueryType] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn index_of(&self, qt: &QueryType) -> Option<usize> {
        self.types.binary_search(qt).ok()
    }

    pub fn get(&self, index: usize) -> Option<QueryType> {
        self.types.get(index).copied()
    }

    pub fn require(&self, qt: &QueryType) -> Result<usize> {
        self.index_of(qt).ok_or_else(|| Error::UnknownLabel(qt.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_types_are_distinct() {
        let registry = QueryRegistry::from_types(REFERENCE_QUERY_TYPES);
        assert_eq!(registry.len(), 32);
        // Image-source questions always ask about objects.
        for qt in REFERENCE_QUERY_TYPES {
            if qt.answer_source == Image {
                assert_eq!(qt.vc, Object);
            }
        }
    }

    #[test]
    fn parse_either_order() {
        let a: QueryType = "CapableOf,Object,Image".parse().unwrap();
        let b: QueryType = "(CapableOf,Image,Object)".parse().unwrap();
        assert_eq!(a, b);
        assert_eq!(a, QueryType::new(CapableOf, Object, Image));
        assert_eq!(a.to_string().parse::<QueryType>().unwrap(), a);
        assert!("CapableOf,Object".parse::<QueryType>().is_err());
        assert!("Flies,Object,Image".parse::<QueryType>().is_err());
    }

    #[test]
    fn registry_is_order_independent() {
        let mut rev = REFERENCE_QUERY_TYPES;
        rev.reverse();
        assert_eq!(
            QueryRegistry::from_types(rev),
            QueryRegistry::from_types(REFERENCE_QUERY_TYPES)
        );
        let r = QueryRegistry::from_types(REFERENCE_QUERY_TYPES);
        for (i, qt) in r.types().iter().enumerate() {
            assert_eq!(r.index_of(qt), Some(i));
        }
    }
}
