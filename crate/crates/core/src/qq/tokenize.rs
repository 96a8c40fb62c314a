/// Lowercase and split on anything that is not alphanumeric. Punctuation is
/// dropped, so `"it's red."` becomes `[it, s, red]`.
pub fn tokenize(question: &str) -> Vec<String> {
    question
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(
            tokenize("Which animal can climb trees?"),
            ["which", "animal", "can", "climb", "trees"]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("it's red."), ["it", "s", "red"]);
        assert_eq!(tokenize("  Top-3\tanswers "), ["top", "3", "answers"]);
    }
}
