//! Machine-readable and plain-text reports of an explanation outcome.

use std::fmt::Write as _;

use serde::Serialize;

use crate::csp::{solve, Assignment, Constraint, Problem};
use crate::error::CspError;
use crate::explain::{render_explanation, ExplanationEntry, Outcome, RenderFormat};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConstraintEntry {
    pub id: String,
    pub constraint: String,
}

impl ConstraintEntry {
    fn of(c: &Constraint) -> Self {
        ConstraintEntry {
            id: c.id.clone(),
            constraint: c.body.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub i: usize,
    pub id: String,
    pub added: String,
    pub subset: String,
    pub consistent: bool,
    pub explanation: Vec<ExplanationEntry>,
}

/// `{"outcome", "explanation", "relaxed_constraints", "trace"?, "solutions"}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OutcomeReport {
    pub outcome: &'static str,
    pub explanation: Vec<ExplanationEntry>,
    pub relaxed_constraints: Vec<ConstraintEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEntry>>,
    pub solutions: Vec<Assignment>,
}

impl OutcomeReport {
    /// Collects up to `limit` solutions of the final constraint set. An
    /// unexplainable problem has no constraint set and no solutions.
    pub fn build(problem: &Problem, outcome: &Outcome, limit: usize, with_trace: bool) -> Result<Self, CspError> {
        let all: Vec<Constraint> = problem
            .background()
            .iter()
            .chain(problem.foreground())
            .cloned()
            .collect();
        let (explanation, relaxed, trace, solutions) = match outcome {
            Outcome::NoConflict => {
                let solutions = if limit == 0 {
                    Vec::new()
                } else {
                    solve(problem, &all, limit)?
                };
                (Vec::new(), all, None, solutions)
            }
            Outcome::NoRelaxation => (Vec::new(), Vec::new(), None, Vec::new()),
            Outcome::Explained(e) => {
                let solutions = if limit == 0 {
                    Vec::new()
                } else {
                    e.solutions(problem, limit)?
                };
                let trace = e
                    .trace
                    .records()
                    .iter()
                    .map(|r| TraceEntry {
                        i: r.index,
                        id: r.constraint_id.clone(),
                        added: r.added.to_string(),
                        subset: format!("S{} = S{} \u{222a} {{{}}}", r.index, r.index - 1, r.added),
                        consistent: r.consistent,
                        explanation: r.explanation.entries(),
                    })
                    .collect();
                (e.explanation.entries(), e.relaxed_set.clone(), Some(trace), solutions)
            }
        };
        Ok(OutcomeReport {
            outcome: outcome.label(),
            explanation,
            relaxed_constraints: relaxed.iter().map(ConstraintEntry::of).collect(),
            trace: if with_trace {
                Some(trace.unwrap_or_default())
            } else {
                None
            },
            solutions,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable form carrying the same content as the JSON.
    pub fn to_text(&self, problem: &Problem, outcome: &Outcome) -> String {
        let mut out = String::new();
        match outcome {
            Outcome::NoConflict => out.push_str("no conflict\n"),
            Outcome::NoRelaxation => {
                out.push_str("no relaxation: no combination of allowed changes makes the problem feasible\n")
            }
            Outcome::Explained(e) => {
                out.push_str(&render_explanation(&e.explanation, RenderFormat::Text, problem));
                out.push('\n');
                out.push_str("changes:\n");
                for x in &self.explanation {
                    let _ = writeln!(out, "  {}: {} -> {}", x.id, x.from, x.to);
                }
            }
        }
        if let Some(trace) = &self.trace {
            out.push_str("trace:\n");
            for t in trace {
                let e: Vec<String> = t.explanation.iter().map(|x| format!("{}: {}", x.id, x.to)).collect();
                let _ = writeln!(
                    out,
                    "  {:>2}  {:<40} {:<5}  E = {{{}}}",
                    t.i,
                    t.subset,
                    t.consistent,
                    e.join(", ")
                );
            }
        }
        if !self.solutions.is_empty() {
            out.push_str("solutions:\n");
            out.push_str(&format_solutions(&self.solutions));
        }
        out
    }
}

/// One line per solution: `name=value, ...`.
pub fn format_solutions(solutions: &[Assignment]) -> String {
    let mut out = String::new();
    for s in solutions {
        let fields: Vec<String> = s.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "  {}", fields.join(", "));
    }
    out
}
