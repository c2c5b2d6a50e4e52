//! Rewrites applied to a generated query before it runs.
//!
//! The chain runs deprecation rules over the raw text, parses, formats, and
//! then rewrites the AST: lowercase values, map synonyms to graph terms,
//! replace children by parents. Every textual change lands in a
//! [`ChangeLog`] that replays the input into the output.

mod changelog;
mod deprecated;
mod synonyms;
mod values;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cypher::{self, Query};
use crate::graph::{GraphSchema, PropertyGraph};

pub use changelog::{ChangeEntry, ChangeLog, ChangeNote, ReplayError};
pub use deprecated::{DeprecationRule, DeprecationRules, RuleError, DEFAULT_RULES};
pub use synonyms::{ChainedSynonyms, LocalSynonyms, SynonymError, SynonymProvider, WikidataStub};
pub use values::{child_to_parent, lowercase_values, map_synonyms};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepName {
    Format,
    LowercaseValues,
    Deprecated,
    Synonyms,
    ChildToParent,
}

impl StepName {
    pub const ALL: [StepName; 5] = [
        StepName::Format,
        StepName::LowercaseValues,
        StepName::Deprecated,
        StepName::Synonyms,
        StepName::ChildToParent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Format => "format",
            Self::LowercaseValues => "lowercase_values",
            Self::Deprecated => "deprecated",
            Self::Synonyms => "synonyms",
            Self::ChildToParent => "child_to_parent",
        }
    }
}

impl fmt::Display for StepName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StepName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| format!("unknown preprocessor step `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessorStep {
    pub name: StepName,
    pub enabled: bool,
}

/// Which steps run. Order is fixed; only enablement varies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    steps: Vec<PreprocessorStep>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            steps: StepName::ALL
                .into_iter()
                .map(|name| PreprocessorStep {
                    name,
                    enabled: true,
                })
                .collect(),
        }
    }
}

impl ChainConfig {
    /// Only the named steps enabled.
    pub fn only(enabled: &[StepName]) -> Self {
        let mut c = Self::default();
        for s in &mut c.steps {
            s.enabled = enabled.contains(&s.name);
        }
        c
    }

    pub fn disable(mut self, name: StepName) -> Self {
        for s in &mut self.steps {
            if s.name == name {
                s.enabled = false;
            }
        }
        self
    }

    pub fn steps(&self) -> &[PreprocessorStep] {
        &self.steps
    }

    pub fn is_enabled(&self, name: StepName) -> bool {
        self.steps.iter().any(|s| s.name == name && s.enabled)
    }
}

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("{error}")]
    Parse {
        error: cypher::ParseError,
        /// Text that failed to parse, after deprecation rewrites.
        text: String,
        log: ChangeLog,
    },
    #[error("rewritten query no longer parses: {0}")]
    Unparseable(cypher::ParseError),
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub text: String,
    pub query: Query,
    pub log: ChangeLog,
}

/// A configured rewrite chain.
#[derive(Debug, Clone, Default)]
pub struct Preprocessor {
    pub rules: DeprecationRules,
    pub config: ChainConfig,
}

type AstStep<'a> = Box<dyn Fn(&Query, &mut ChangeLog) -> Query + 'a>;

impl Preprocessor {
    pub fn new(rules: DeprecationRules, config: ChainConfig) -> Self {
        Self { rules, config }
    }

    pub fn apply(
        &self,
        query_text: &str,
        graph: &PropertyGraph,
        schema: &GraphSchema,
        synonyms: &dyn SynonymProvider,
    ) -> Result<Preprocessed, PreprocessError> {
        let mut log = ChangeLog::default();
        let mut text = query_text.to_string();
        if self.config.is_enabled(StepName::Deprecated) {
            text = self.rules.apply(&text, &mut log);
        }
        let mut query = match cypher::parse(&text) {
            Ok(q) => q,
            Err(error) => return Err(PreprocessError::Parse { error, text, log }),
        };
        if self.config.is_enabled(StepName::Format) {
            let formatted = cypher::format(&query);
            log.record_diff(StepName::Format, &text, &formatted);
            text = formatted;
        }
        let steps: [(StepName, AstStep); 3] = [
            (
                StepName::LowercaseValues,
                Box::new(|q, _| lowercase_values(q)),
            ),
            (
                StepName::Synonyms,
                Box::new(|q, log| map_synonyms(q, graph, synonyms, log)),
            ),
            (
                StepName::ChildToParent,
                Box::new(|q, _| child_to_parent(q, schema)),
            ),
        ];
        for (name, step) in steps {
            if !self.config.is_enabled(name) {
                continue;
            }
            let next = step(&query, &mut log);
            if next != query {
                let rendered = cypher::format(&next);
                log.record_diff(name, &text, &rendered);
                text = rendered;
                query = next;
            }
        }
        cypher::parse(&text).map_err(PreprocessError::Unparseable)?;
        Ok(Preprocessed { text, query, log })
    }
}

/// Runs the full default chain.
pub fn apply_chain(
    query_text: &str,
    graph: &PropertyGraph,
    schema: &GraphSchema,
    synonyms: &dyn SynonymProvider,
) -> Result<Preprocessed, PreprocessError> {
    Preprocessor::default().apply(query_text, graph, schema, synonyms)
}
