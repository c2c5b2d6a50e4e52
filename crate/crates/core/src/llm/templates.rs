use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use super::Purpose;

fn slot_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([a-z_]+)\}").unwrap())
}

/// Plain text with `{slot}` placeholders, substituted in a single pass so
/// slot values are never re-scanned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    text: String,
}

impl Template {
    pub fn new(text: impl Into<String>) -> Self {
        Self { text: text.into() }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn slots(&self) -> BTreeSet<String> {
        slot_regex()
            .captures_iter(&self.text)
            .map(|c| c[1].to_string())
            .collect()
    }

    /// Unknown slots are left verbatim; templates are validated at load.
    pub fn render(&self, values: &BTreeMap<String, String>) -> String {
        slot_regex()
            .replace_all(&self.text, |c: &regex::Captures| {
                values
                    .get(&c[1])
                    .cloned()
                    .unwrap_or_else(|| c[0].to_string())
            })
            .into_owned()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template {file}: {message}")]
    Invalid { file: String, message: String },
    #[error("cannot read template {file}: {message}")]
    Io { file: String, message: String },
}

const BUILTIN: [(Purpose, &str, &str); 5] = [
    (
        Purpose::CypherGen,
        include_str!("../../templates/cypher_gen.system.txt"),
        include_str!("../../templates/cypher_gen.user.txt"),
    ),
    (
        Purpose::Verbalize,
        include_str!("../../templates/verbalize.system.txt"),
        include_str!("../../templates/verbalize.user.txt"),
    ),
    (
        Purpose::SubgraphGen,
        include_str!("../../templates/subgraph_gen.system.txt"),
        include_str!("../../templates/subgraph_gen.user.txt"),
    ),
    (
        Purpose::Judge,
        include_str!("../../templates/judge.system.txt"),
        include_str!("../../templates/judge.user.txt"),
    ),
    (
        Purpose::DirectAnswer,
        include_str!("../../templates/direct_answer.system.txt"),
        include_str!("../../templates/direct_answer.user.txt"),
    ),
];

/// System and user templates for every [`Purpose`].
///
/// Files are named `<purpose>.system.txt` and `<purpose>.user.txt`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<Purpose, (Template, Template)>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateSet {
    pub fn builtin() -> Self {
        let templates = BUILTIN
            .iter()
            .map(|(p, s, u)| (*p, (Template::new(*s), Template::new(*u))))
            .collect();
        let set = Self { templates };
        set.validate().expect("built-in templates are valid");
        set
    }

    /// Built-in templates overridden by any files present in `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self, TemplateError> {
        let mut set = Self::builtin();
        for (purpose, pair) in set.templates.iter_mut() {
            for (part, slot) in [("system", &mut pair.0), ("user", &mut pair.1)] {
                let path = dir.join(format!("{purpose}.{part}.txt"));
                if path.exists() {
                    let text = std::fs::read_to_string(&path).map_err(|e| TemplateError::Io {
                        file: path.display().to_string(),
                        message: e.to_string(),
                    })?;
                    *slot = Template::new(text);
                }
            }
        }
        set.validate()?;
        Ok(set)
    }

    pub fn with_template(
        mut self,
        purpose: Purpose,
        system: &str,
        user: &str,
    ) -> Result<Self, TemplateError> {
        self.templates
            .insert(purpose, (Template::new(system), Template::new(user)));
        self.validate()?;
        Ok(self)
    }

    pub fn get(&self, purpose: Purpose) -> (&Template, &Template) {
        let (s, u) = &self.templates[&purpose];
        (s, u)
    }

    /// Every required slot appears in the user template, and no template
    /// uses a slot its purpose does not fill.
    pub fn validate(&self) -> Result<(), TemplateError> {
        for (purpose, (system, user)) in &self.templates {
            let allowed: BTreeSet<String> = purpose.slots().iter().map(|s| s.to_string()).collect();
            for (part, t) in [("system", system), ("user", user)] {
                let file = format!("{purpose}.{part}.txt");
                if let Some(bad) = t.slots().difference(&allowed).next() {
                    return Err(TemplateError::Invalid {
                        file,
                        message: format!("unknown slot {{{bad}}}"),
                    });
                }
            }
            let used = user.slots();
            if let Some(missing) = allowed.difference(&used).next() {
                return Err(TemplateError::Invalid {
                    file: format!("{purpose}.user.txt"),
                    message: format!("missing slot {{{missing}}}"),
                });
            }
        }
        Ok(())
    }
}
