//! Knowledge-base facts and the in-memory triple store.

mod ingest;
mod query;
mod store;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entity::EntityId;
use crate::error::Error;

pub use ingest::{ingest_kb, ingest_kb_reader, IngestMode, IngestReport};
pub use query::{query_vc, VcMatch};
pub use store::{TriplePattern, TripleStore};

/// Canonical predicate kinds. WebChild comparatives (`Faster`, `Bigger`, ...)
/// all collapse into [`PredicateKind::Comparative`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PredicateKind {
    Category,
    RelatedTo,
    AtLocation,
    IsA,
    CapableOf,
    UsedFor,
    Desires,
    HasProperty,
    HasA,
    PartOf,
    ReceivesAction,
    CreatedBy,
    Comparative,
}

impl PredicateKind {
    pub const ALL: [PredicateKind; 13] = [
        PredicateKind::Category,
        PredicateKind::RelatedTo,
        PredicateKind::AtLocation,
        PredicateKind::IsA,
        PredicateKind::CapableOf,
        PredicateKind::UsedFor,
        PredicateKind::Desires,
        PredicateKind::HasProperty,
        PredicateKind::HasA,
        PredicateKind::PartOf,
        PredicateKind::ReceivesAction,
        PredicateKind::CreatedBy,
        PredicateKind::Comparative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PredicateKind::Category => "Category",
            PredicateKind::RelatedTo => "RelatedTo",
            PredicateKind::AtLocation => "AtLocation",
            PredicateKind::IsA => "IsA",
            PredicateKind::CapableOf => "CapableOf",
            PredicateKind::UsedFor => "UsedFor",
            PredicateKind::Desires => "Desires",
            PredicateKind::HasProperty => "HasProperty",
            PredicateKind::HasA => "HasA",
            PredicateKind::PartOf => "PartOf",
            PredicateKind::ReceivesAction => "ReceivesAction",
            PredicateKind::CreatedBy => "CreatedBy",
            PredicateKind::Comparative => "Comparative",
        }
    }

    /// The knowledge base a predicate of this kind is drawn from.
    pub fn default_source(self) -> KbSource {
        match self {
            PredicateKind::Category => KbSource::DBpedia,
            PredicateKind::Comparative => KbSource::WebChild,
            _ => KbSource::ConceptNet,
        }
    }
}

impl fmt::Display for PredicateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PredicateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        PredicateKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown predicate kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KbSource {
    DBpedia,
    ConceptNet,
    WebChild,
}

impl KbSource {
    pub const ALL: [KbSource; 3] = [KbSource::DBpedia, KbSource::ConceptNet, KbSource::WebChild];

    pub fn name(self) -> &'static str {
        match self {
            KbSource::DBpedia => "DBpedia",
            KbSource::ConceptNet => "ConceptNet",
            KbSource::WebChild => "WebChild",
        }
    }
}

impl fmt::Display for KbSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KbSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        KbSource::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Invalid(format!("unknown KB source {s:?}")))
    }
}

/// A predicate as written in the source KB together with its canonical kind.
/// For every kind except `Comparative` the raw name equals the kind name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Predicate {
    kind: PredicateKind,
    raw: String,
}

impl Predicate {
    pub fn new(kind: PredicateKind) -> Self {
        Predicate {
            kind,
            raw: kind.name().to_string(),
        }
    }

    /// A concrete comparative relation such as `Slower` or `Bigger`.
    pub fn comparative(raw: impl Into<String>) -> Self {
        Predicate {
            kind: PredicateKind::Comparative,
            raw: raw.into(),
        }
    }

    /// Parse a raw relation name. Canonical names map to their kind; any other
    /// capitalized alphabetic name is a comparative when it comes from WebChild.
    pub fn parse(raw: &str, source: KbSource) -> Result<Self, Error> {
        if let Ok(kind) = raw.parse::<PredicateKind>() {
            return Ok(Predicate::new(kind));
        }
        let looks_like_relation = raw.chars().next().is_some_and(|c| c.is_ascii_uppercase())
            && raw.chars().all(|c| c.is_ascii_alphabetic());
        if source == KbSource::WebChild && looks_like_relation {
            Ok(Predicate::comparative(raw))
        } else {
            Err(Error::Invalid(format!(
                "unknown predicate {raw:?} for source {source}"
            )))
        }
    }

    pub fn kind(&self) -> PredicateKind {
        self.kind
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

/// One KB fact `(subject, predicate, object)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "TripleRecord", try_from = "TripleRecord")]
pub struct Triple {
    pub subject: EntityId,
    pub predicate: Predicate,
    pub object: EntityId,
    pub source: KbSource,
}

/// Identity of a fact: canonical subject, raw predicate, canonical object.
pub type TripleKey = (String, String, String);

impl Triple {
    pub fn new(
        subject: impl Into<EntityId>,
        predicate: Predicate,
        object: impl Into<EntityId>,
        source: KbSource,
    ) -> Self {
        Triple {
            subject: subject.into(),
            predicate,
            object: object.into(),
            source,
        }
    }

    pub fn key(&self) -> TripleKey {
        (
            self.subject.canonical().to_string(),
            self.predicate.raw().to_string(),
            self.object.canonical().to_string(),
        )
    }

    pub fn to_record(&self) -> TripleRecord {
        TripleRecord {
            subject: self.subject.surface().to_string(),
            predicate: self.predicate.raw().to_string(),
            object: self.object.surface().to_string(),
            source: self.source.name().to_string(),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.subject, self.predicate, self.object)
    }
}

/// Serialized form of a triple: one JSON object per line in KB files, and the
/// `fact` field of dataset and prediction records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleRecord {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub source: String,
}

impl TripleRecord {
    pub fn to_triple(&self) -> Result<Triple, Error> {
        for (name, value) in [
            ("subject", &self.subject),
            ("predicate", &self.predicate),
            ("object", &self.object),
            ("source", &self.source),
        ] {
            if value.trim().is_empty() {
                return Err(Error::Invalid(format!("empty {name}")));
            }
        }
        let source: KbSource = self.source.parse()?;
        let predicate = Predicate::parse(self.predicate.trim(), source)?;
        let subject = EntityId::new(self.subject.as_str());
        let object = EntityId::new(self.object.as_str());
        if subject.is_empty() || object.is_empty() {
            return Err(Error::Invalid("entity has no words".into()));
        }
        Ok(Triple {
            subject,
            predicate,
            object,
            source,
        })
    }
}

impl From<&Triple> for TripleRecord {
    fn from(t: &Triple) -> Self {
        t.to_record()
    }
}

impl From<Triple> for TripleRecord {
    fn from(t: Triple) -> Self {
        t.to_record()
    }
}

impl TryFrom<TripleRecord> for Triple {
    type Error = Error;

    fn try_from(r: TripleRecord) -> Result<Self, Error> {
        r.to_triple()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirteen_kinds() {
        assert_eq!(PredicateKind::ALL.len(), 13);
        for k in PredicateKind::ALL {
            assert_eq!(k.name().parse::<PredicateKind>().unwrap(), k);
            assert_eq!(Predicate::new(k).raw(), k.name());
        }
    }

    #[test]
    fn webchild_relations_are_comparative() {
        for raw in ["Slower", "Bigger", "Faster", "Taller", "Better"] {
            let p = Predicate::parse(raw, KbSource::WebChild).unwrap();
            assert_eq!(p.kind(), PredicateKind::Comparative);
            assert_eq!(p.raw(), raw);
        }
        assert!(Predicate::parse("Slower", KbSource::ConceptNet).is_err());
        assert_eq!(
            Predicate::parse("UsedFor", KbSource::ConceptNet).unwrap().kind(),
            PredicateKind::UsedFor
        );
    }

    #[test]
    fn record_validation() {
        let rec = TripleRecord {
            subject: "Wii".into(),
            predicate: "Category".into(),
            object: "VideoGameConsole".into(),
            source: "DBpedia".into(),
        };
        let t = rec.to_triple().unwrap();
        assert_eq!(t.object.canonical(), "video game console");
        assert_eq!(t.to_string(), "(Wii,Category,VideoGameConsole)");

        let empty = TripleRecord {
            subject: " ".into(),
            ..rec
        };
        assert!(empty.to_triple().is_err());
    }
}
