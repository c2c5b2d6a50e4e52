//! Text-level replacement of deprecated Cypher constructs.
//!
//! Rule file lines are `kind<TAB>pattern<TAB>replacement`:
//!
//! * `pattern_call`: `pattern` is a function name; a call whose argument is
//!   a pattern (starts with `(`) is replaced by `replacement` with `$1` bound
//!   to the argument text. Parentheses are balanced, so nested patterns work.
//! * `regex`: `pattern` is a regular expression, `replacement` a template
//!   using `$1`, `$name` and so on.
//!
//! Matches inside string literals are never rewritten.

use regex::Regex;
use thiserror::Error;

use super::changelog::{ChangeEntry, ChangeLog};
use super::StepName;

pub const DEFAULT_RULES: &str = "\
# kind\tpattern\treplacement
pattern_call\tsize\tCOUNT { $1 }
regex\t(?i)\\bexists\\s*\\(\\s*([A-Za-z_][A-Za-z0-9_]*\\s*\\.\\s*[A-Za-z_][A-Za-z0-9_]*)\\s*\\)\t$1 IS NOT NULL
";

#[derive(Debug, Clone)]
pub enum DeprecationRule {
    PatternCall { function: String, template: String },
    Regex { pattern: Regex, template: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("deprecation rules line {line}: {message}")]
pub struct RuleError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct DeprecationRules {
    pub rules: Vec<DeprecationRule>,
}

impl Default for DeprecationRules {
    fn default() -> Self {
        Self::parse(DEFAULT_RULES).expect("built-in rules parse")
    }
}

impl DeprecationRules {
    pub fn empty() -> Self {
        Self { rules: Vec::new() }
    }

    pub fn parse(text: &str) -> Result<Self, RuleError> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |message: String| RuleError {
                line: i + 1,
                message,
            };
            let parts: Vec<&str> = line.splitn(3, '\t').collect();
            if parts.len() != 3 {
                return Err(err(
                    "expected kind, pattern and replacement separated by tabs".into(),
                ));
            }
            let rule = match parts[0] {
                "pattern_call" => DeprecationRule::PatternCall {
                    function: parts[1].trim().to_string(),
                    template: parts[2].to_string(),
                },
                "regex" => DeprecationRule::Regex {
                    pattern: Regex::new(parts[1]).map_err(|e| err(e.to_string()))?,
                    template: parts[2].to_string(),
                },
                other => return Err(err(format!("unknown rule kind `{other}`"))),
            };
            rules.push(rule);
        }
        Ok(Self { rules })
    }

    /// Rewrites `text`, logging one entry per replacement.
    pub fn apply(&self, text: &str, log: &mut ChangeLog) -> String {
        let mut current = text.to_string();
        for rule in &self.rules {
            let edits = match rule {
                DeprecationRule::PatternCall { function, template } => {
                    pattern_call_edits(&current, function, template)
                }
                DeprecationRule::Regex { pattern, template } => {
                    regex_edits(&current, pattern, template)
                }
            };
            let mut delta: isize = 0;
            for (start, end, replacement) in edits {
                let position = (start as isize + delta) as usize;
                let before = current[position..position + (end - start)].to_string();
                current.replace_range(position..position + before.len(), &replacement);
                delta += replacement.len() as isize - before.len() as isize;
                log.entries.push(ChangeEntry {
                    step: StepName::Deprecated,
                    before,
                    after: replacement,
                    position,
                });
            }
        }
        current
    }
}

/// Byte ranges covered by quoted strings and backtick identifiers.
fn quoted_spans(text: &str) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let q = bytes[i];
        if q == b'"' || q == b'\'' || q == b'`' {
            let start = i;
            i += 1;
            while i < bytes.len() {
                if bytes[i] == b'\\' && q != b'`' {
                    i += 2;
                    continue;
                }
                if bytes[i] == q {
                    break;
                }
                i += 1;
            }
            i = (i + 1).min(bytes.len());
            spans.push((start, i));
        } else {
            i += 1;
        }
    }
    spans
}

fn inside(spans: &[(usize, usize)], pos: usize) -> bool {
    spans.iter().any(|&(s, e)| s <= pos && pos < e)
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

fn pattern_call_edits(text: &str, function: &str, template: &str) -> Vec<(usize, usize, String)> {
    let quoted = quoted_spans(text);
    let bytes = text.as_bytes();
    let lower = text.to_ascii_lowercase();
    let needle = function.to_ascii_lowercase();
    let mut out = Vec::new();
    let mut from = 0;
    while let Some(found) = lower[from..].find(&needle) {
        let start = from + found;
        from = start + needle.len().max(1);
        if inside(&quoted, start) || (start > 0 && is_ident_byte(bytes[start - 1])) {
            continue;
        }
        let mut j = start + needle.len();
        if j < bytes.len() && is_ident_byte(bytes[j]) {
            continue;
        }
        while j < bytes.len() && bytes[j].is_ascii_whitespace() {
            j += 1;
        }
        if j >= bytes.len() || bytes[j] != b'(' {
            continue;
        }
        let open = j;
        let Some(close) = matching_paren(text, open, &quoted) else {
            continue;
        };
        let arg = text[open + 1..close].trim();
        if !arg.starts_with('(') {
            continue;
        }
        out.push((start, close + 1, template.replace("$1", arg)));
        from = close + 1;
    }
    out
}

fn matching_paren(text: &str, open: usize, quoted: &[(usize, usize)]) -> Option<usize> {
    let mut depth = 0usize;
    for (i, b) in text.bytes().enumerate().skip(open) {
        if inside(quoted, i) {
            continue;
        }
        match b {
            b'(' => depth += 1,
            b')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn regex_edits(text: &str, pattern: &Regex, template: &str) -> Vec<(usize, usize, String)> {
    let quoted = quoted_spans(text);
    pattern
        .captures_iter(text)
        .filter_map(|caps| {
            let m = caps.get(0)?;
            if inside(&quoted, m.start()) {
                return None;
            }
            let mut replacement = String::new();
            caps.expand(template, &mut replacement);
            Some((m.start(), m.end(), replacement))
        })
        .collect()
}
