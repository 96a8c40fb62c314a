use std::collections::{BTreeSet, HashSet};
use std::sync::OnceLock;

use crate::entity::EntityId;
use crate::qq::tokenize;

const STOPWORDS_FILE: &str = include_str!("../../data/stopwords.txt");

/// The shipped stopword list.
pub fn stopwords() -> &'static HashSet<&'static str> {
    static WORDS: OnceLock<HashSet<&'static str>> = OnceLock::new();
    WORDS.get_or_init(|| {
        STOPWORDS_FILE
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

/// Light suffix stripping: `-ing`, `-ed`, `-ies`, `-es` after a sibilant and
/// a plain `-s`, followed by undoubling a final double consonant
/// (`running` → `run`). Stems shorter than three letters are not produced.
pub fn stem(word: &str) -> String {
    const MIN_STEM: usize = 3;
    let w = word;
    let long_enough = |s: &str| s.chars().count() >= MIN_STEM;

    for suffix in ["ing", "ed"] {
        if let Some(s) = w.strip_suffix(suffix) {
            if long_enough(s) && s.chars().any(is_vowel) {
                return undouble(s);
            }
        }
    }
    if let Some(s) = w.strip_suffix("ies") {
        if long_enough(s) {
            return format!("{s}y");
        }
    }
    if let Some(s) = w.strip_suffix("es") {
        let sibilant = ["s", "x", "z", "ch", "sh"].iter().any(|e| s.ends_with(e));
        if sibilant && long_enough(s) {
            return s.to_string();
        }
    }
    if let Some(s) = w.strip_suffix('s') {
        let keep = s.ends_with('s') || s.ends_with('u') || s.ends_with('i');
        if !keep && long_enough(s) {
            return s.to_string();
        }
    }
    w.to_string()
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

fn undouble(s: &str) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    if let [.., a, b] = chars[..] {
        if a == b && a.is_ascii_alphabetic() && !is_vowel(a) && !matches!(a, 'l' | 's' | 'z') {
            chars.pop();
        }
    }
    chars.into_iter().collect()
}

/// A set of normalized (lowercased, stopword-free, stemmed) words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeywordSet(BTreeSet<String>);

impl KeywordSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl<S: Into<String>> FromIterator<S> for KeywordSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        KeywordSet(
            iter.into_iter()
                .map(Into::into)
                .filter(|s: &String| !s.is_empty())
                .collect(),
        )
    }
}

/// Tokenize, drop stopwords, stem.
pub fn extract_keywords(text: &str) -> KeywordSet {
    let stop = stopwords();
    tokenize(text)
        .into_iter()
        .filter(|t| !stop.contains(t.as_str()))
        .map(|t| stem(&t))
        .collect()
}

/// Keywords of an entity's canonical (space-separated) form.
pub fn entity_keywords(entity: &EntityId) -> KeywordSet {
    extract_keywords(entity.canonical())
}

/// `|a ∩ b| / |a ∪ b|`, and 0 when both sets are empty.
pub fn jaccard(a: &KeywordSet, b: &KeywordSet) -> f64 {
    let inter = a.0.intersection(&b.0).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(words: &[&str]) -> KeywordSet {
        words.iter().copied().collect()
    }

    #[test]
    fn stopword_list_size() {
        let n = stopwords().len();
        assert!((40..=60).contains(&n), "{n}");
        for w in ["what", "which", "a", "the"] {
            assert!(stopwords().contains(w));
        }
    }

    #[test]
    fn climb_trees_question() {
        assert_eq!(
            extract_keywords("Which animal in this image is able to climb trees?"),
            set(&["animal", "image", "able", "climb", "tree"])
        );
        assert_eq!(extract_keywords("climbing trees"), set(&["climb", "tree"]));
        assert_eq!(
            entity_keywords(&EntityId::new("ClimbingTrees")),
            set(&["climb", "tree"])
        );
    }

    #[test]
    fn all_stopwords() {
        assert!(extract_keywords("What is a the which?").is_empty());
    }

    #[test]
    fn stems() {
        assert_eq!(stem("climbing"), stem("climb"));
        assert_eq!(stem("trees"), "tree");
        assert_eq!(stem("running"), "run");
        assert_eq!(stem("stopped"), "stop");
        assert_eq!(stem("falling"), "fall");
        assert_eq!(stem("boxes"), "box");
        assert_eq!(stem("glasses"), "glass");
        assert_eq!(stem("glass"), "glass");
        assert_eq!(stem("bus"), "bus");
        assert_eq!(stem("berries"), "berry");
        assert_eq!(stem("thing"), "thing");
        assert_eq!(stem("red"), "red");
        assert_eq!(stem("bed"), "bed");
    }

    #[test]
    fn jaccard_examples() {
        let a = set(&["climb", "tree"]);
        assert_eq!(jaccard(&a, &a), 1.0);
        assert_eq!(jaccard(&a, &set(&["dog"])), 0.0);
        assert!((jaccard(&a, &set(&["animal", "climb", "tree"])) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(jaccard(&KeywordSet::default(), &KeywordSet::default()), 0.0);
    }

    proptest! {
        #[test]
        fn jaccard_properties(
            a in prop::collection::btree_set("[a-e]{1,2}", 0..8),
            b in prop::collection::btree_set("[a-e]{1,2}", 0..8),
        ) {
            let a: KeywordSet = a.into_iter().collect();
            let b: KeywordSet = b.into_iter().collect();
            let s = jaccard(&a, &b);
            prop_assert_eq!(s, jaccard(&b, &a));
            prop_assert!((0.0..=1.0).contains(&s));
            if !a.is_empty() {
                prop_assert_eq!(jaccard(&a, &a), 1.0);
            }
        }
    }
}
