//! Human-readable rendering of traces, plus small JSON helpers shared by the
//! commands. Structured output is the trace schema itself; everything here is
//! presentation only.

use std::fmt::Write as _;

use natl_core::kb::KnowledgeBase;
use natl_core::reason::{Trace, TraceOutcome, TraceStep};
use natl_core::syntax::SourceJudgment;
use natl_core::term::CopulaRegistry;
use natl_core::unify::SoftMerge;

pub fn trace_human(trace: &Trace) -> String {
    let mut out = String::new();
    for step in &trace.steps {
        let _ = writeln!(out, "{}", step_line(step));
        for (name, value) in &step.substitution {
            let _ = writeln!(out, "      ${name} := {value}");
        }
        for merge in &step.merges {
            let _ = writeln!(out, "      merge: {} ~ {} ({})", merge.left, merge.right, merge.similarity);
        }
    }
    match &trace.outcome {
        TraceOutcome::Answered { step, term, bindings, confidence } => {
            let _ = writeln!(out, "answered: {term} %{confidence}%");
            for (name, value) in bindings {
                let _ = writeln!(out, "  ${name} := {value}");
            }
            if let Some(step) = step {
                let _ = writeln!(out, "  via step {step}");
            }
        }
        TraceOutcome::Explained { path } => {
            let ids: Vec<String> = path.iter().map(|id| id.to_string()).collect();
            let _ = writeln!(out, "explained: {} steps ({})", path.len(), ids.join(" -> "));
        }
        TraceOutcome::Exhausted { reason } => {
            let _ = writeln!(out, "exhausted: {reason}");
        }
    }
    out
}

fn step_line(step: &TraceStep) -> String {
    let mut line = format!("{:>3}. {}", step.id, step.rule);
    if let Some(pattern) = &step.pattern {
        line.push('/');
        line.push_str(pattern);
    }
    let premises: Vec<String> = step.premises.iter().map(|id| id.to_string()).collect();
    let _ = write!(line, " {} [{}]", step.direction, premises.join(","));
    if let Some(path) = &step.path {
        let indices: Vec<String> = path.iter().map(|i| i.to_string()).collect();
        let _ = write!(line, " at [{}]", indices.join(","));
    }
    let _ = write!(line, " |- {} %{}%", step.conclusion, step.t);
    line
}

/// Opposing-polarity pairs left in the KB, one line each. Empty when clean.
pub fn contradictions_human(kb: &KnowledgeBase, registry: &CopulaRegistry) -> String {
    let mut out = String::new();
    for (a, b) in kb.contradictions(registry) {
        let name = |id| match kb.get(id) {
            Some(j) => match j.label() {
                Some(label) => format!("{label} ({})", j.term),
                None => format!("#{id} ({})", j.term),
            },
            None => format!("#{id}"),
        };
        let _ = writeln!(out, "contradiction: {} vs {}", name(a), name(b));
    }
    out
}

pub fn judgment_json(j: &SourceJudgment) -> serde_json::Value {
    serde_json::json!({
        "label": j.label,
        "term": j.term.to_string(),
        "confidence": j.confidence,
        "line": j.line,
    })
}

pub fn merges_json(merges: &[SoftMerge]) -> Vec<serde_json::Value> {
    merges
        .iter()
        .map(|m| {
            serde_json::json!({
                "left": m.left.to_string(),
                "right": m.right.to_string(),
                "similarity": m.similarity,
            })
        })
        .collect()
}
