use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::EvalSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustnessVerdict {
    Denied,
    Uncertain,
    Full,
}

/// Marker lists for [`RobustnessVerdict`] classification.
///
/// An answer is denied when its first sentence contains a denial marker,
/// uncertain when the text contains a hedge marker (or a denial marker
/// after the first sentence), and full otherwise. Matching is
/// case-insensitive and treats curly apostrophes as straight ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobustnessClassifier {
    pub denial_markers: Vec<String>,
    pub hedge_markers: Vec<String>,
}

impl Default for RobustnessClassifier {
    fn default() -> Self {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            denial_markers: v(&[
                "i don't know",
                "i do not know",
                "cannot answer",
                "can't answer",
                "no information available",
            ]),
            hedge_markers: v(&[
                "does not mention",
                "do not mention",
                "not mentioned",
                "not sure",
                "unclear",
                "cannot be determined",
            ]),
        }
    }
}

fn normalize(text: &str) -> String {
    text.replace(['\u{2019}', '\u{2018}'], "'").to_lowercase()
}

fn first_sentence(text: &str) -> &str {
    let t = text.trim_start();
    let mut chars = t.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?' | '\n') {
            match chars.peek() {
                None => return &t[..i],
                Some((_, n)) if n.is_whitespace() => return &t[..i],
                _ => {}
            }
        }
    }
    t
}

impl RobustnessClassifier {
    pub fn classify(&self, answer: &str) -> RobustnessVerdict {
        let text = normalize(answer);
        let first = first_sentence(&text);
        let has =
            |markers: &[String], hay: &str| markers.iter().any(|m| hay.contains(&normalize(m)));
        if has(&self.denial_markers, first) {
            RobustnessVerdict::Denied
        } else if has(&self.hedge_markers, &text) || has(&self.denial_markers, &text) {
            RobustnessVerdict::Uncertain
        } else {
            RobustnessVerdict::Full
        }
    }
}

/// Picks the deliberately wrong query for each sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WrongQuerySource {
    /// Sample i gets the gold query of sample (i + 1) mod n.
    CyclicShift,
    /// Explicit id → query map; samples without an entry fall back to the shift.
    Explicit(HashMap<String, String>),
}

impl WrongQuerySource {
    pub fn queries(&self, samples: &[EvalSample]) -> Vec<String> {
        let n = samples.len();
        (0..n)
            .map(|i| {
                let shifted = || samples[(i + 1) % n].gold_cypher.clone();
                match self {
                    Self::CyclicShift => shifted(),
                    Self::Explicit(map) => map.get(&samples[i].id).cloned().unwrap_or_else(shifted),
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_examples() {
        let c = RobustnessClassifier::default();
        assert_eq!(c.classify("I don't know."), RobustnessVerdict::Denied);
        assert_eq!(c.classify("I don\u{2019}t know"), RobustnessVerdict::Denied);
        assert_eq!(
            c.classify("The provided information does not mention any such drug, however..."),
            RobustnessVerdict::Uncertain
        );
        assert_eq!(
            c.classify("The drugs are phenobarbital and lamotrigine."),
            RobustnessVerdict::Full
        );
        assert_eq!(
            c.classify("The drugs are phenobarbital. For the rest I don't know."),
            RobustnessVerdict::Uncertain
        );
        assert_eq!(c.classify(""), RobustnessVerdict::Full);
    }

    #[test]
    fn first_sentence_split() {
        assert_eq!(first_sentence("a b. c"), "a b");
        assert_eq!(first_sentence("3.5 mg is used. x"), "3.5 mg is used");
        assert_eq!(first_sentence("no end"), "no end");
    }

    fn sample(id: &str, q: &str) -> EvalSample {
        EvalSample {
            id: id.into(),
            question: format!("{id}?"),
            gold_cypher: q.into(),
            expected_answer: String::new(),
            expected_nodes: vec![],
            expected_relationships: vec![],
            unsupported: None,
        }
    }

    #[test]
    fn cyclic_shift() {
        let s = vec![sample("a", "qa"), sample("b", "qb"), sample("c", "qc")];
        assert_eq!(
            WrongQuerySource::CyclicShift.queries(&s),
            vec!["qb", "qc", "qa"]
        );
        let explicit = WrongQuerySource::Explicit([("b".to_string(), "zz".to_string())].into());
        assert_eq!(explicit.queries(&s), vec!["qb", "zz", "qa"]);
    }

    proptest! {
        #[test]
        fn classifier_is_total_and_deterministic(s in "\\PC{0,80}") {
            let c = RobustnessClassifier::default();
            prop_assert_eq!(c.classify(&s), c.classify(&s));
        }
    }
}
