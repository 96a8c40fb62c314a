use std::collections::HashMap;
use std::sync::OnceLock;

const IRREGULARS_FILE: &str = include_str!("../../data/irregular_plurals.txt");

/// The shipped plural → singular table. Words mapped to themselves are
/// invariant.
pub fn irregular_plurals() -> &'static HashMap<&'static str, &'static str> {
    static TABLE: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    TABLE.get_or_init(|| {
        IRREGULARS_FILE
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| l.split_once('\t'))
            .map(|(p, s)| (p.trim(), s.trim()))
            .collect()
    })
}

/// Lowercase, trim, collapse whitespace and singularize every word.
///
/// ```
/// use factqa::eval::normalize_answer;
/// assert_eq!(normalize_answer("  Traffic  Lights "), "traffic light");
/// assert_eq!(normalize_answer("Zebras"), "zebra");
/// ```
pub fn normalize_answer(text: &str) -> String {
    text.split_whitespace()
        .map(|w| singularize(&w.to_lowercase()))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Singularize one lowercase word. Rules apply until none fires, so the
/// result is a fixed point.
pub fn singularize(word: &str) -> String {
    let mut w = word.to_string();
    while let Some(next) = singularize_once(&w) {
        w = next;
    }
    w
}

fn singularize_once(w: &str) -> Option<String> {
    if let Some(&s) = irregular_plurals().get(w) {
        return (s != w).then(|| s.to_string());
    }
    if w.chars().count() <= 3 || ["ss", "us", "is"].iter().any(|e| w.ends_with(e)) {
        return None;
    }
    if let Some(stem) = w.strip_suffix("ies") {
        if stem.chars().count() >= 2 {
            return Some(format!("{stem}y"));
        }
    }
    if ["xes", "ches", "shes", "sses", "zzes"].iter().any(|e| w.ends_with(e)) {
        return Some(w[..w.len() - 2].to_string());
    }
    w.strip_suffix('s').map(str::to_string)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(normalize_answer("Zebras"), "zebra");
        assert_eq!(normalize_answer("sofa"), "sofa");
        assert_eq!(normalize_answer("  Traffic  Lights "), "traffic light");
    }

    #[test]
    fn rules() {
        for (plural, singular) in [
            ("berries", "berry"),
            ("boxes", "box"),
            ("glasses", "glass"),
            ("dishes", "dish"),
            ("watches", "watch"),
            ("horses", "horse"),
            ("shoes", "shoe"),
            ("children", "child"),
            ("knives", "knife"),
            ("buses", "bus"),
            ("bus", "bus"),
            ("tennis", "tennis"),
            ("sheep", "sheep"),
            ("news", "news"),
            ("gas", "gas"),
            ("cacti", "cactus"),
        ] {
            assert_eq!(singularize(plural), singular, "{plural}");
        }
    }

    #[test]
    fn table_values_are_fixed_points() {
        for &s in irregular_plurals().values() {
            assert_eq!(singularize(s), s);
        }
    }

    proptest! {
        #[test]
        fn idempotent(s in "[A-Za-z ]{0,24}") {
            let once = normalize_answer(&s);
            prop_assert_eq!(normalize_answer(&once), once);
        }
    }
}
