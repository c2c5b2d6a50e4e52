use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("synonym lookup failed: {0}")]
pub struct SynonymError(pub String);

/// Source of candidate preferred terms for a query value.
pub trait SynonymProvider: Send + Sync {
    /// Ordered candidates for `term`, best first. Must be deterministic.
    fn lookup(&self, term: &str, label: Option<&str>) -> Result<Vec<String>, SynonymError>;
}

/// In-memory term → candidates map, loaded from `term<TAB>preferred` lines.
/// A term may appear on several lines; candidates keep file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LocalSynonyms {
    map: BTreeMap<String, Vec<String>>,
}

impl LocalSynonyms {
    pub fn parse(text: &str) -> Result<Self, SynonymError> {
        let mut out = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let Some((term, preferred)) = line.split_once('\t') else {
                return Err(SynonymError(format!(
                    "line {}: expected term<TAB>preferred",
                    i + 1
                )));
            };
            out.insert(term, preferred);
        }
        Ok(out)
    }

    pub fn insert(&mut self, term: &str, preferred: &str) {
        let list = self.map.entry(term.trim().to_lowercase()).or_default();
        let p = preferred.trim().to_lowercase();
        if !list.contains(&p) {
            list.push(p);
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl SynonymProvider for LocalSynonyms {
    fn lookup(&self, term: &str, _label: Option<&str>) -> Result<Vec<String>, SynonymError> {
        Ok(self
            .map
            .get(&term.to_lowercase())
            .cloned()
            .unwrap_or_default())
    }
}

/// Offline stand-in for a Wikidata alternative-label lookup.
///
/// Answers come from a JSON fixture of the form
/// `{"term": ["alt label", ...]}`. Terms listed under `"_fail"` simulate a
/// service error. Calls are counted so tests can assert on usage.
#[derive(Debug, Default)]
pub struct WikidataStub {
    labels: BTreeMap<String, Vec<String>>,
    failing: Vec<String>,
    calls: AtomicUsize,
}

impl WikidataStub {
    pub fn from_json(text: &str) -> Result<Self, SynonymError> {
        let mut labels: BTreeMap<String, Vec<String>> =
            serde_json::from_str(text).map_err(|e| SynonymError(e.to_string()))?;
        let failing = labels.remove("_fail").unwrap_or_default();
        let labels = labels
            .into_iter()
            .map(|(k, v)| {
                (
                    k.to_lowercase(),
                    v.into_iter().map(|s| s.to_lowercase()).collect(),
                )
            })
            .collect();
        Ok(Self {
            labels,
            failing,
            calls: AtomicUsize::new(0),
        })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl SynonymProvider for WikidataStub {
    fn lookup(&self, term: &str, _label: Option<&str>) -> Result<Vec<String>, SynonymError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let term = term.to_lowercase();
        if self.failing.contains(&term) {
            return Err(SynonymError(format!("service unavailable for `{term}`")));
        }
        Ok(self.labels.get(&term).cloned().unwrap_or_default())
    }
}

/// Local map first, then each external provider in order.
///
/// Returns `Ok` with the local candidates when only an external provider
/// fails after local candidates were found; otherwise the first error.
pub struct ChainedSynonyms {
    pub local: LocalSynonyms,
    pub external: Vec<Box<dyn SynonymProvider>>,
}

impl ChainedSynonyms {
    pub fn new(local: LocalSynonyms) -> Self {
        Self {
            local,
            external: Vec::new(),
        }
    }

    pub fn with_external(mut self, provider: Box<dyn SynonymProvider>) -> Self {
        self.external.push(provider);
        self
    }
}

impl SynonymProvider for ChainedSynonyms {
    fn lookup(&self, term: &str, label: Option<&str>) -> Result<Vec<String>, SynonymError> {
        let mut out = self.local.lookup(term, label)?;
        let mut first_error = None;
        for p in &self.external {
            match p.lookup(term, label) {
                Ok(cands) => {
                    for c in cands {
                        if !out.contains(&c) {
                            out.push(c);
                        }
                    }
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        match first_error {
            Some(e) if out.is_empty() => Err(e),
            _ => Ok(out),
        }
    }
}
