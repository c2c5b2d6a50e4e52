//! Dictionary-based entity linking over questions.
//!
//! Mentions are found by longest-match-first, left-to-right,
//! case-insensitive lookup. A match must start and end at a word boundary:
//! the neighbouring character is absent or neither alphanumeric nor `-`.
//! Offsets are character (not byte) offsets into the question.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::PropertyGraph;

/// Sentence template for Entity Enhancement.
pub const ENHANCEMENT_TEMPLATE: &str =
    "\"{term}\" is of type \"{category}\" in the knowledge graph.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub preferred_term: String,
    pub category: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EntityError {
    #[error("vocabulary line {line}: {message}")]
    Vocabulary { line: usize, message: String },
    #[error("mentions overlap or are out of order at {start}..{end}")]
    Overlap { start: usize, end: usize },
    #[error("mention {start}..{end} does not match the question text")]
    BadSpan { start: usize, end: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entries: BTreeMap<String, VocabEntry>,
    /// Surfaces by first character, longest first.
    by_first: HashMap<char, Vec<Vec<char>>>,
}

fn lower_char(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

fn normalize_surface(s: &str) -> String {
    s.trim().chars().map(lower_char).collect()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-'
}

impl Vocabulary {
    /// Parses `surface<TAB>preferred<TAB>category` lines.
    pub fn parse(text: &str) -> Result<Self, EntityError> {
        let mut v = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |message: String| EntityError::Vocabulary {
                line: i + 1,
                message,
            };
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 3 || parts.iter().any(|p| p.trim().is_empty()) {
                return Err(err("expected surface, preferred term and category".into()));
            }
            if !v.insert(parts[0], parts[1], parts[2]) {
                return Err(err(format!("surface `{}` mapped twice", parts[0].trim())));
            }
        }
        Ok(v)
    }

    /// One entry per node name, categorized by label. Names shared by
    /// several labels keep the first node in id order.
    pub fn from_graph(graph: &PropertyGraph) -> Self {
        let mut v = Self::default();
        for n in graph.nodes() {
            if let Some(name) = n.name() {
                if !v.entries.contains_key(&normalize_surface(name)) {
                    v.insert(name, name, &n.label);
                }
            }
        }
        v
    }

    /// Adds an entry; false if the surface is already mapped differently.
    pub fn insert(&mut self, surface: &str, preferred: &str, category: &str) -> bool {
        let key = normalize_surface(surface);
        if key.is_empty() {
            return false;
        }
        let entry = VocabEntry {
            preferred_term: preferred.trim().to_string(),
            category: category.trim().to_string(),
        };
        if let Some(existing) = self.entries.get(&key) {
            return *existing == entry;
        }
        let chars: Vec<char> = key.chars().collect();
        let list = self.by_first.entry(chars[0]).or_default();
        let at = list.partition_point(|s| s.len() >= chars.len());
        list.insert(at, chars);
        self.entries.insert(key, entry);
        true
    }

    pub fn get(&self, surface: &str) -> Option<&VocabEntry> {
        self.entries.get(&normalize_surface(surface))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &VocabEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(s, e)| format!("{s}\t{}\t{}\n", e.preferred_term, e.category))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub preferred_term: String,
    pub category: String,
}

pub fn extract(question: &str, vocab: &Vocabulary) -> Vec<EntityMention> {
    let original: Vec<char> = question.chars().collect();
    let lowered: Vec<char> = original.iter().map(|&c| lower_char(c)).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < lowered.len() {
        let at_boundary = i == 0 || !is_word_char(lowered[i - 1]);
        let hit = at_boundary
            .then(|| vocab.by_first.get(&lowered[i]))
            .flatten()
            .and_then(|cands| {
                cands.iter().find(|s| {
                    let end = i + s.len();
                    end <= lowered.len()
                        && lowered[i..end] == s[..]
                        && (end == lowered.len() || !is_word_char(lowered[end]))
                })
            });
        match hit {
            Some(s) => {
                let end = i + s.len();
                let key: String = s.iter().collect();
                let entry = &vocab.entries[&key];
                out.push(EntityMention {
                    surface: original[i..end].iter().collect(),
                    start: i,
                    end,
                    preferred_term: entry.preferred_term.clone(),
                    category: entry.category.clone(),
                });
                i = end;
            }
            None => i += 1,
        }
    }
    out
}

/// Replaces each mention span by its preferred term.
pub fn rewrite_question(question: &str, mentions: &[EntityMention]) -> Result<String, EntityError> {
    let byte_at: Vec<usize> = question
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(question.len()))
        .collect();
    let mut prev_end = 0;
    for m in mentions {
        if m.start < prev_end || m.start >= m.end {
            return Err(EntityError::Overlap {
                start: m.start,
                end: m.end,
            });
        }
        prev_end = m.end;
    }
    let mut out = question.to_string();
    for m in mentions.iter().rev() {
        let bad = EntityError::BadSpan {
            start: m.start,
            end: m.end,
        };
        let (Some(&s), Some(&e)) = (byte_at.get(m.start), byte_at.get(m.end)) else {
            return Err(bad);
        };
        if normalize_surface(&question[s..e]) != normalize_surface(&m.surface) {
            return Err(bad);
        }
        out.replace_range(s..e, &m.preferred_term);
    }
    Ok(out)
}

pub fn enhancement_sentence(term: &str, category: &str) -> String {
    ENHANCEMENT_TEMPLATE
        .replace("{term}", term)
        .replace("{category}", category)
}

/// One sentence per distinct (preferred term, category), in mention order.
pub fn enhancement_sentences(mentions: &[EntityMention]) -> Vec<String> {
    let mut seen = HashSet::new();
    mentions
        .iter()
        .filter(|m| seen.insert((m.preferred_term.as_str(), m.category.as_str())))
        .map(|m| enhancement_sentence(&m.preferred_term, &m.category))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vocab() -> Vocabulary {
        Vocabulary::parse(
            "alcohol\tethanol\tdrug\n\
             ocular hypertension\tocular hypertension\tdisease\n\
             hypertension\thypertension\tdisease\n\
             pink1\tpink1\tgene_or_protein\n",
        )
        .unwrap()
    }

    #[test]
    fn alcohol_maps_to_ethanol() {
        let q = "Which drugs interact with alcohol?";
        let m = extract(q, &vocab());
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].surface, "alcohol");
        assert_eq!(m[0].preferred_term, "ethanol");
        assert_eq!(m[0].category, "drug");
        assert_eq!(
            rewrite_question(q, &m).unwrap(),
            "Which drugs interact with ethanol?"
        );
        assert_eq!(
            enhancement_sentences(&m),
            vec!["\"ethanol\" is of type \"drug\" in the knowledge graph."]
        );
    }

    #[test]
    fn longest_match_wins() {
        let m = extract(
            "Which drugs are used to treat ocular hypertension?",
            &vocab(),
        );
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].surface, "ocular hypertension");
    }

    #[test]
    fn boundaries_and_case() {
        let v = vocab();
        assert!(extract("Nothing relevant here.", &v).is_empty());
        assert!(extract("pink1-like genes", &v).is_empty());
        assert!(extract("alcoholism", &v).is_empty());
        let m = extract("PINK1 and Alcohol", &v);
        assert_eq!(m.len(), 2);
        assert_eq!((m[0].start, m[0].end), (0, 5));
        assert_eq!(m[1].surface, "Alcohol");
    }

    #[test]
    fn character_offsets_with_non_ascii() {
        let m = extract("Ist Alcohol – schädlich? alcohol", &vocab());
        assert_eq!(m.len(), 2);
        assert_eq!(m[1].start, 25);
        assert_eq!(
            rewrite_question("Ist Alcohol – schädlich? alcohol", &m).unwrap(),
            "Ist ethanol – schädlich? ethanol"
        );
    }

    #[test]
    fn rewrite_contract() {
        assert_eq!(rewrite_question("abc", &[]).unwrap(), "abc");
        let m = extract("alcohol and alcohol", &vocab());
        let overlapping = vec![m[0].clone(), m[0].clone()];
        assert!(matches!(
            rewrite_question("alcohol and alcohol", &overlapping),
            Err(EntityError::Overlap { .. })
        ));
        assert!(rewrite_question("xx", &m).is_err());
        assert_eq!(enhancement_sentences(&m).len(), 1);
        assert!(enhancement_sentences(&[]).is_empty());
    }

    #[test]
    fn vocabulary_file_errors() {
        assert!(matches!(
            Vocabulary::parse("a\tb\n"),
            Err(EntityError::Vocabulary { line: 1, .. })
        ));
        assert!(Vocabulary::parse("a\tb\tc\nA\tx\tc\n").is_err());
        assert!(Vocabulary::parse("a\tb\tc\nA\tb\tc\n").is_ok());
    }

    #[test]
    fn vocabulary_from_graph_names() {
        let g = crate::graph::tests::pink1_graph();
        let v = Vocabulary::from_graph(&g);
        assert_eq!(v.get("PINK1").unwrap().category, "gene_or_protein");
        assert_eq!(Vocabulary::parse(&v.render()).unwrap(), v);
    }

    fn word() -> impl Strategy<Value = String> {
        prop::sample::select(vec!["a", "ab", "abc", "b", "b-c", "c d", "ä"])
            .prop_map(str::to_string)
    }

    proptest! {
        #[test]
        fn mention_invariants(
            surfaces in prop::collection::btree_set(word(), 1..6),
            parts in prop::collection::vec((word(), prop::sample::select(vec![" ", "-", ", ", "x", "."])), 0..10),
        ) {
            let mut v = Vocabulary::default();
            for s in &surfaces {
                v.insert(s, &format!("P{}", s.len()), "cat");
            }
            let q: String = parts.iter().map(|(w, sep)| format!("{w}{sep}")).collect();
            let m = extract(&q, &v);
            prop_assert_eq!(&m, &extract(&q, &v));
            let chars: Vec<char> = q.chars().collect();
            for w in m.windows(2) {
                prop_assert!(w[0].end <= w[1].start);
            }
            for x in &m {
                prop_assert!(x.start < x.end);
                let span: String = chars[x.start..x.end].iter().collect();
                prop_assert_eq!(span.to_lowercase(), x.surface.to_lowercase());
                // no longer vocabulary match at the same offset
                for s in &surfaces {
                    let sc: Vec<char> = s.chars().collect();
                    let end = x.start + sc.len();
                    if sc.len() > x.end - x.start && end <= chars.len() {
                        let here: String = chars[x.start..end].iter().collect();
                        let bounded = end == chars.len() || !is_word_char(chars[end]);
                        prop_assert!(!(here == *s && bounded));
                    }
                }
            }
            // rewrite soundness: preferred terms are found again
            let rewritten = rewrite_question(&q, &m).unwrap();
            let mut pv = Vocabulary::default();
            for x in &m {
                pv.insert(&x.preferred_term, &x.preferred_term, &x.category);
            }
            let again = extract(&rewritten, &pv);
            prop_assert_eq!(again.len(), m.len());
        }
    }
}
