use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cypher::token_spans;

use super::StepName;

/// One textual edit: at byte `position` of the text as it stood when the
/// edit was made, `before` was replaced by `after`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeEntry {
    pub step: StepName,
    pub before: String,
    pub after: String,
    pub position: usize,
}

/// A diagnostic that did not change the text, such as a synonym miss.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeNote {
    pub step: StepName,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeLog {
    pub entries: Vec<ChangeEntry>,
    pub notes: Vec<ChangeNote>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("change log entry {index} ({step}) does not apply at offset {position}")]
pub struct ReplayError {
    pub index: usize,
    pub step: StepName,
    pub position: usize,
}

impl ChangeLog {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries made by steps other than formatting.
    pub fn content_entries(&self) -> impl Iterator<Item = &ChangeEntry> {
        self.entries.iter().filter(|e| e.step != StepName::Format)
    }

    pub fn note(&mut self, step: StepName, message: impl Into<String>) {
        self.notes.push(ChangeNote {
            step,
            message: message.into(),
        });
    }

    /// Applies every entry in order to `input`.
    pub fn replay(&self, input: &str) -> Result<String, ReplayError> {
        let mut text = input.to_string();
        for (index, e) in self.entries.iter().enumerate() {
            let end = e.position + e.before.len();
            if text.get(e.position..end) != Some(e.before.as_str()) {
                return Err(ReplayError {
                    index,
                    step: e.step,
                    position: e.position,
                });
            }
            text.replace_range(e.position..end, &e.after);
        }
        Ok(text)
    }

    /// Records the edits turning `before` into `after`.
    ///
    /// Texts with the same token layout get one entry per changed token;
    /// otherwise a single entry covers the span between the common prefix
    /// and suffix.
    pub fn record_diff(&mut self, step: StepName, before: &str, after: &str) {
        if before == after {
            return;
        }
        if let Some(entries) = token_diff(step, before, after) {
            self.entries.extend(entries);
            return;
        }
        self.entries.push(span_diff(step, before, after));
    }
}

fn token_diff(step: StepName, before: &str, after: &str) -> Option<Vec<ChangeEntry>> {
    let a = token_spans(before)?;
    let b = token_spans(after)?;
    if a.len() != b.len() {
        return None;
    }
    // Gaps between tokens must match, so only token texts differ.
    let mut prev = (0, 0);
    for (&(sa, ea), &(sb, eb)) in a.iter().zip(&b) {
        if before[prev.0..sa] != after[prev.1..sb] {
            return None;
        }
        prev = (ea, eb);
    }
    if before[prev.0..] != after[prev.1..] {
        return None;
    }
    let mut out = Vec::new();
    let mut delta: isize = 0;
    for (&(sa, ea), &(sb, eb)) in a.iter().zip(&b) {
        let (old, new) = (&before[sa..ea], &after[sb..eb]);
        if old != new {
            out.push(ChangeEntry {
                step,
                before: old.to_string(),
                after: new.to_string(),
                position: (sa as isize + delta) as usize,
            });
            delta += new.len() as isize - old.len() as isize;
        }
    }
    Some(out)
}

fn span_diff(step: StepName, before: &str, after: &str) -> ChangeEntry {
    let prefix = before
        .char_indices()
        .zip(after.chars())
        .find(|((_, x), y)| x != y)
        .map(|((i, _), _)| i)
        .unwrap_or_else(|| before.len().min(after.len()));
    let max_suffix = (before.len() - prefix).min(after.len() - prefix);
    let suffix = before[prefix..]
        .chars()
        .rev()
        .zip(after[prefix..].chars().rev())
        .take_while(|(x, y)| x == y)
        .map(|(x, _)| x.len_utf8())
        .scan(0, |acc, n| {
            *acc += n;
            Some(*acc)
        })
        .take_while(|&n| n <= max_suffix)
        .last()
        .unwrap_or(0);
    ChangeEntry {
        step,
        before: before[prefix..before.len() - suffix].to_string(),
        after: after[prefix..after.len() - suffix].to_string(),
        position: prefix,
    }
}
