use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity::Vocabulary;
use crate::graph::{
    extract_schema, ingest_paths, GraphSchema, IngestOptions, KvMap, ParentChildMap, PropertyGraph,
};
use crate::llm::{PromptBuilder, TemplateSet};
use crate::preprocess::{
    ChainConfig, ChainedSynonyms, DeprecationRules, LocalSynonyms, Preprocessor, SynonymProvider,
    WikidataStub,
};

/// File locations for everything a pipeline loads at startup.
/// Relative paths are resolved against a base directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourcePaths {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    #[serde(default)]
    pub preferred_terms: Option<PathBuf>,
    #[serde(default)]
    pub descriptions: Option<PathBuf>,
    #[serde(default)]
    pub parent_child: Option<PathBuf>,
    /// Defaults to one entry per node name.
    #[serde(default)]
    pub vocabulary: Option<PathBuf>,
    #[serde(default)]
    pub synonyms: Option<PathBuf>,
    /// JSON fixture standing in for an external synonym service.
    #[serde(default)]
    pub external_synonyms: Option<PathBuf>,
    /// Defaults to the built-in rule set.
    #[serde(default)]
    pub deprecations: Option<PathBuf>,
    #[serde(default)]
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("{path}: file not found")]
    Missing { path: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl ResourcePaths {
    pub fn resolve(&self, base: &Path) -> Self {
        let r = |p: &PathBuf| {
            if p.is_absolute() {
                p.clone()
            } else {
                base.join(p)
            }
        };
        let ro = |p: &Option<PathBuf>| p.as_ref().map(r);
        Self {
            nodes: r(&self.nodes),
            edges: r(&self.edges),
            preferred_terms: ro(&self.preferred_terms),
            descriptions: ro(&self.descriptions),
            parent_child: ro(&self.parent_child),
            vocabulary: ro(&self.vocabulary),
            synonyms: ro(&self.synonyms),
            external_synonyms: ro(&self.external_synonyms),
            deprecations: ro(&self.deprecations),
            templates: ro(&self.templates),
        }
    }

    /// Every referenced path, for existence checks.
    pub fn all(&self) -> Vec<&Path> {
        let mut out = vec![self.nodes.as_path(), self.edges.as_path()];
        for p in [
            &self.preferred_terms,
            &self.descriptions,
            &self.parent_child,
            &self.vocabulary,
            &self.synonyms,
            &self.external_synonyms,
            &self.deprecations,
            &self.templates,
        ]
        .into_iter()
        .flatten()
        {
            out.push(p.as_path());
        }
        out
    }

    pub fn check_exist(&self) -> Result<(), ResourceError> {
        match self.all().into_iter().find(|p| !p.exists()) {
            Some(p) => Err(ResourceError::Missing {
                path: p.display().to_string(),
            }),
            None => Ok(()),
        }
    }
}

/// Loaded, immutable pipeline inputs.
#[derive(Clone)]
pub struct Resources {
    pub graph: Arc<PropertyGraph>,
    pub schema: GraphSchema,
    pub vocabulary: Vocabulary,
    pub synonyms: Arc<dyn SynonymProvider>,
    pub preprocessor: Preprocessor,
    pub prompts: PromptBuilder,
}

fn read(path: &Path) -> Result<String, ResourceError> {
    std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            ResourceError::Missing {
                path: path.display().to_string(),
            }
        } else {
            invalid(path, e)
        }
    })
}

fn invalid(path: &Path, e: impl ToString) -> ResourceError {
    ResourceError::Invalid {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn optional<T: Default>(
    path: &Option<PathBuf>,
    parse: impl FnOnce(&str) -> Result<T, String>,
) -> Result<T, ResourceError> {
    match path {
        None => Ok(T::default()),
        Some(p) => parse(&read(p)?).map_err(|e| invalid(p, e)),
    }
}

impl Resources {
    pub fn load(paths: &ResourcePaths) -> Result<Self, ResourceError> {
        paths.check_exist()?;
        let preferred: KvMap = optional(&paths.preferred_terms, |t| {
            KvMap::parse(t).map_err(|e| e.to_string())
        })?;
        let options = IngestOptions::default().with_preferred_terms(preferred.0);
        let graph = ingest_paths(&paths.nodes, &paths.edges, &options)
            .map_err(|e| invalid(&paths.nodes, e))?;
        let descriptions: KvMap = optional(&paths.descriptions, |t| {
            KvMap::parse(t).map_err(|e| e.to_string())
        })?;
        let parent_child: ParentChildMap = optional(&paths.parent_child, |t| {
            ParentChildMap::parse(t).map_err(|e| e.to_string())
        })?;
        let schema = extract_schema(&graph, &descriptions, &parent_child);
        let vocabulary = match &paths.vocabulary {
            Some(p) => Vocabulary::parse(&read(p)?).map_err(|e| invalid(p, e))?,
            None => Vocabulary::from_graph(&graph),
        };
        let local: LocalSynonyms = optional(&paths.synonyms, |t| {
            LocalSynonyms::parse(t).map_err(|e| e.to_string())
        })?;
        let mut synonyms = ChainedSynonyms::new(local);
        if let Some(p) = &paths.external_synonyms {
            let stub = WikidataStub::from_json(&read(p)?).map_err(|e| invalid(p, e))?;
            synonyms = synonyms.with_external(Box::new(stub));
        }
        let rules = match &paths.deprecations {
            Some(p) => DeprecationRules::parse(&read(p)?).map_err(|e| invalid(p, e))?,
            None => DeprecationRules::default(),
        };
        let templates = match &paths.templates {
            Some(dir) => TemplateSet::from_dir(dir).map_err(|e| invalid(dir, e))?,
            None => TemplateSet::builtin(),
        };
        Ok(Self {
            graph: Arc::new(graph),
            schema,
            vocabulary,
            synonyms: Arc::new(synonyms),
            preprocessor: Preprocessor::new(rules, ChainConfig::default()),
            prompts: PromptBuilder::new(templates),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_resolve_against_base() {
        let p = ResourcePaths {
            nodes: "n.csv".into(),
            edges: "/abs/e.csv".into(),
            vocabulary: Some("v.tsv".into()),
            ..Default::default()
        };
        let r = p.resolve(Path::new("/base"));
        assert_eq!(r.nodes, PathBuf::from("/base/n.csv"));
        assert_eq!(r.edges, PathBuf::from("/abs/e.csv"));
        assert_eq!(r.vocabulary, Some(PathBuf::from("/base/v.tsv")));
        assert_eq!(r.all().len(), 3);
    }

    #[test]
    fn missing_files_are_named() {
        let p = ResourcePaths {
            nodes: "/definitely/not/here.csv".into(),
            edges: "/definitely/not/edges.csv".into(),
            ..Default::default()
        };
        match Resources::load(&p) {
            Err(ResourceError::Missing { path }) => assert!(path.contains("here.csv")),
            other => panic!("unexpected {:?}", other.err()),
        }
    }
}
