use serde::{Deserialize, Serialize};

use crate::cypher::ResultTable;
use crate::llm::{ChatBackend, PromptBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerGrade {
    pub correct: bool,
    pub complete: bool,
}

/// Grades for answers A and B; `None` marks an abstention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub a: Option<AnswerGrade>,
    pub b: Option<AnswerGrade>,
}

fn yes_no(s: &str) -> Option<bool> {
    match s
        .trim()
        .trim_end_matches(['.', ',', ';'])
        .to_ascii_lowercase()
        .as_str()
    {
        "yes" | "true" => Some(true),
        "no" | "false" => Some(false),
        _ => None,
    }
}

fn parse_grade(rest: &str) -> Option<AnswerGrade> {
    let mut correct = None;
    let mut complete = None;
    for part in rest.split_whitespace() {
        let (k, v) = part.split_once('=')?;
        match k.to_ascii_lowercase().as_str() {
            "correct" => correct = Some(yes_no(v)?),
            "complete" => complete = Some(yes_no(v)?),
            _ => return None,
        }
    }
    Some(AnswerGrade {
        correct: correct?,
        complete: complete?,
    })
}

/// Reads `A: correct=yes complete=no` style lines. Lines that do not fit
/// leave the corresponding answer as an abstention.
pub fn parse_judge_verdict(text: &str) -> JudgeVerdict {
    let mut v = JudgeVerdict::default();
    for line in text.lines() {
        let line = line.trim().trim_start_matches(['*', '-', ' ']);
        let Some((tag, rest)) = line.split_once(':') else {
            continue;
        };
        let slot = match tag.trim().to_ascii_uppercase().as_str() {
            "A" => &mut v.a,
            "B" => &mut v.b,
            _ => continue,
        };
        if slot.is_none() {
            *slot = parse_grade(rest);
        }
    }
    v
}

/// Asks `backend` to grade two answers. Backend failures are abstentions.
pub fn judge(
    backend: &dyn ChatBackend,
    prompts: &PromptBuilder,
    question: &str,
    rows: &ResultTable,
    answer_a: &str,
    answer_b: &str,
) -> JudgeVerdict {
    let prompt = prompts.judge_prompt(question, rows, answer_a, answer_b);
    match backend.complete(&prompt, 0.0) {
        Ok(text) => parse_judge_verdict(&text),
        Err(_) => JudgeVerdict::default(),
    }
}

/// Tallies over a list of verdicts for one answer side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct JudgeTally {
    pub graded: usize,
    pub abstained: usize,
    pub correct: usize,
    pub complete: usize,
}

impl JudgeTally {
    pub fn add(&mut self, grade: Option<AnswerGrade>) {
        match grade {
            None => self.abstained += 1,
            Some(g) => {
                self.graded += 1;
                self.correct += g.correct as usize;
                self.complete += g.complete as usize;
            }
        }
    }
}
