//! Entity identifiers shared by the knowledge base, the image annotations and
//! the answers.
//!
//! Knowledge bases spell concepts in different ways (`ClimbingTrees`,
//! `climbing_trees`, `climbing trees`). All of them link to the same entity
//! through a canonical form: lowercase words joined by single spaces.

use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A KB or visual-concept entity. Equality and hashing use the canonical form
/// only; the original spelling is kept for display and serialization.
#[derive(Clone)]
pub struct EntityId {
    canonical: String,
    surface: String,
}

impl EntityId {
    pub fn new(surface: impl Into<String>) -> Self {
        let surface = surface.into();
        EntityId {
            canonical: canonicalize(&surface),
            surface,
        }
    }

    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn is_empty(&self) -> bool {
        self.canonical.is_empty()
    }
}

impl PartialEq for EntityId {
    fn eq(&self, other: &Self) -> bool {
        self.canonical == other.canonical
    }
}

impl Eq for EntityId {}

impl Hash for EntityId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canonical.hash(state);
    }
}

impl PartialOrd for EntityId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EntityId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.canonical.cmp(&other.canonical)
    }
}

impl fmt::Debug for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EntityId({:?})", self.canonical)
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.surface)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId::new(s)
    }
}

impl Serialize for EntityId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.surface)
    }
}

impl<'de> Deserialize<'de> for EntityId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer).map(EntityId::new)
    }
}

/// Lowercase `s` and split it into words on whitespace, underscores and ASCII
/// CamelCase boundaries, then join the words with single spaces.
///
/// A boundary is placed between a lowercase letter or digit and a following
/// uppercase letter (`ClimbingTrees`), and before the last capital of an
/// acronym run that is followed by a lowercase letter (`HTTPServer`). Only
/// ASCII case drives the split, so the result contains no split points and the
/// function is idempotent.
pub fn canonicalize(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut words: Vec<String> = Vec::new();
    let mut current = String::new();

    for (i, &c) in chars.iter().enumerate() {
        if c.is_whitespace() || c == '_' {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            continue;
        }
        if c.is_ascii_uppercase() && !current.is_empty() {
            let prev = chars[i - 1];
            let next = chars.get(i + 1).copied();
            let after_lower = prev.is_ascii_lowercase() || prev.is_ascii_digit();
            let acronym_end =
                prev.is_ascii_uppercase() && next.is_some_and(|n| n.is_ascii_lowercase());
            if after_lower || acronym_end {
                words.push(std::mem::take(&mut current));
            }
        }
        current.extend(c.to_lowercase());
    }
    if !current.is_empty() {
        words.push(current);
    }
    words.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn camel_case_and_separators() {
        assert_eq!(canonicalize("ClimbingTrees"), "climbing trees");
        assert_eq!(canonicalize("VideoGameConsole"), "video game console");
        assert_eq!(canonicalize("climbing_trees"), "climbing trees");
        assert_eq!(canonicalize("  climbing   Trees "), "climbing trees");
        assert_eq!(canonicalize("RAM"), "ram");
        assert_eq!(canonicalize("HTTPServer"), "http server");
        assert_eq!(canonicalize("Mp3Player"), "mp3 player");
        assert_eq!(canonicalize(""), "");
    }

    #[test]
    fn equality_is_canonical() {
        assert_eq!(EntityId::new("ClimbingTrees"), EntityId::new("climbing trees"));
        assert_ne!(EntityId::new("cat"), EntityId::new("cats"));
        assert_eq!(EntityId::new("ClimbingTrees").surface(), "ClimbingTrees");
    }

    proptest! {
        #[test]
        fn canonicalize_is_idempotent(s in "\\PC{0,40}") {
            let once = canonicalize(&s);
            prop_assert_eq!(canonicalize(&once), once);
        }

        #[test]
        fn canonicalize_is_idempotent_on_identifiers(s in "[A-Za-z0-9_ ]{0,40}") {
            let once = canonicalize(&s);
            prop_assert_eq!(canonicalize(&once), once.clone());
            prop_assert!(!once.contains("  "));
        }
    }
}
