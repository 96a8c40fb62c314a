use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub const UNK: &str = "<unk>";
pub const START: &str = "<s>";

/// Token to index map. Index 0 is the unknown token and index 1 the start
/// token prepended to every question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub const UNK_ID: usize = 0;
    pub const START_ID: usize = 1;

    /// Build from tokenized training questions (minimum count 1). Tokens are
    /// numbered in order of first appearance.
    pub fn build<'a, I, S>(questions: I) -> Self
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let mut tokens = vec![UNK.to_string(), START.to_string()];
        let mut index: HashMap<String, usize> =
            tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        for q in questions {
            for t in q {
                let t = t.as_ref();
                if !index.contains_key(t) {
                    index.insert(t.to_string(), tokens.len());
                    tokens.push(t.to_string());
                }
            }
        }
        Vocabulary { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(Self::UNK_ID)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    /// Start token followed by the ids of `tokens`.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        std::iter::once(Self::START_ID)
            .chain(tokens.iter().map(|t| self.id(t.as_ref())))
            .collect()
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { tokens, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}
