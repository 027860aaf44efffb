//! Infeasibility diagnosis: counterfactual explanations, preferred minimal
//! conflicts, maximal relaxations, and an exhaustive oracle for testing.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::csp::{is_consistent_bodies, solve_bodies, Assignment, Body, Constraint, Problem};
use crate::error::CspError;
use crate::relaxation::{validate_space, RelaxationSpace, RelaxationState, SpaceError, Violation};

/// Relaxation spaces keyed by foreground constraint id.
pub type Spaces = BTreeMap<String, RelaxationSpace>;

/// Largest state-vector product the brute-force oracle will enumerate.
pub const ORACLE_BUDGET: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExplainError {
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("no relaxation space for foreground constraint {0:?}")]
    MissingSpace(String),
    #[error("relaxation space {0:?} does not belong to any foreground constraint")]
    StraySpace(String),
    #[error("relaxation space for {0:?} does not have the constraint itself as its original state")]
    OriginalMismatch(String),
    #[error("relaxation space for {id:?} is invalid: {}", join(violations))]
    InvalidSpace { id: String, violations: Vec<Violation> },
    #[error("the problem is feasible; there is no conflict")]
    NoConflict,
    #[error("the background constraints are inconsistent on their own")]
    InconsistentBackground,
    #[error("{size} state combinations exceed the oracle budget of {budget}")]
    BudgetExceeded { size: u128, budget: usize },
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// One changed user constraint: the original and the state it is relaxed to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Substitution {
    pub original: Constraint,
    pub relaxed: RelaxationState,
}

impl Substitution {
    pub fn entry(&self) -> ExplanationEntry {
        ExplanationEntry {
            id: self.original.id.clone(),
            from: self.original.body.to_string(),
            to: self.relaxed.to_string(),
        }
    }
}

/// Wire form of a substitution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExplanationEntry {
    pub id: String,
    pub from: String,
    pub to: String,
}

/// The set of changes `F' \ F`, in foreground order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Explanation {
    substitutions: Vec<Substitution>,
}

impl Explanation {
    pub fn new(substitutions: Vec<Substitution>) -> Self {
        Explanation { substitutions }
    }

    pub fn substitutions(&self) -> &[Substitution] {
        &self.substitutions
    }

    pub fn is_empty(&self) -> bool {
        self.substitutions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.substitutions.len()
    }

    pub fn get(&self, id: &str) -> Option<&Substitution> {
        self.substitutions.iter().find(|s| s.original.id == id)
    }

    pub fn entries(&self) -> Vec<ExplanationEntry> {
        self.substitutions.iter().map(Substitution::entry).collect()
    }

    fn push(&mut self, s: Substitution) {
        self.substitutions.push(s);
    }
}

/// One tightening attempt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    /// 1-based iteration number.
    pub index: usize,
    pub constraint_id: String,
    /// The state tried for the constraint.
    pub added: RelaxationState,
    pub consistent: bool,
    /// Explanation as it stood after this attempt.
    pub explanation: Explanation,
    /// The full state vector that was checked, one entry per foreground constraint.
    pub states: Vec<RelaxationState>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    records: Vec<TraceRecord>,
}

impl Trace {
    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Result of a successful counterfactual search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Explained {
    pub explanation: Explanation,
    /// Background constraints followed by every foreground constraint that
    /// was not dropped to `Top`, each in its final state.
    pub relaxed_set: Vec<Constraint>,
    /// Final state of each foreground constraint, in foreground order.
    pub states: Vec<RelaxationState>,
    pub trace: Trace,
}

impl Explained {
    pub fn solutions(&self, problem: &Problem, limit: usize) -> Result<Vec<Assignment>, CspError> {
        let bodies: Vec<&Body> = self.relaxed_set.iter().map(|c| &c.body).collect();
        solve_bodies(problem, &bodies, limit)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    NoConflict,
    NoRelaxation,
    Explained(Explained),
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::NoConflict => "no_conflict",
            Outcome::NoRelaxation => "no_relaxation",
            Outcome::Explained(_) => "explained",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::NoConflict => f.write_str("no conflict"),
            Outcome::NoRelaxation => f.write_str("no relaxation"),
            Outcome::Explained(e) => {
                let entries: Vec<String> = e
                    .explanation
                    .entries()
                    .into_iter()
                    .map(|x| format!("{}: {} -> {}", x.id, x.from, x.to))
                    .collect();
                write!(f, "explained {{{}}}", entries.join(", "))
            }
        }
    }
}

/// Bodies of `B` plus the given foreground states; `None` if any is `Bottom`.
fn constraint_bodies<'a>(problem: &'a Problem, states: &'a [RelaxationState]) -> Option<Vec<&'a Body>> {
    let mut bodies: Vec<&Body> = problem.background().iter().map(|c| &c.body).collect();
    for s in states {
        match s {
            RelaxationState::Top => {}
            RelaxationState::Bottom => return None,
            RelaxationState::Concrete(b) => bodies.push(b),
        }
    }
    Some(bodies)
}

/// Is `B` plus the given foreground states satisfiable?
pub fn states_consistent(problem: &Problem, states: &[RelaxationState]) -> Result<bool, CspError> {
    match constraint_bodies(problem, states) {
        Some(bodies) => is_consistent_bodies(problem, &bodies),
        None => Ok(false),
    }
}

/// Looks up and checks the space of every foreground constraint.
pub fn spaces_in_order<'s>(problem: &Problem, spaces: &'s Spaces) -> Result<Vec<&'s RelaxationSpace>, ExplainError> {
    if let Some(stray) = spaces
        .keys()
        .find(|id| !problem.foreground().iter().any(|c| &c.id == *id))
    {
        return Err(ExplainError::StraySpace(stray.clone()));
    }
    problem
        .foreground()
        .iter()
        .map(|c| {
            let space = spaces
                .get(&c.id)
                .ok_or_else(|| ExplainError::MissingSpace(c.id.clone()))?;
            let violations = validate_space(space, problem);
            if !violations.is_empty() {
                return Err(ExplainError::InvalidSpace {
                    id: c.id.clone(),
                    violations,
                });
            }
            if space.original().body() != Some(&c.body) {
                return Err(ExplainError::OriginalMismatch(c.id.clone()));
            }
            Ok(space)
        })
        .collect()
}

/// Computes a counterfactual explanation by tightening relaxed user constraints.
///
/// All foreground constraints start at the top of their spaces. Then, in
/// foreground order, each one is walked down its fixed path towards the
/// original, replacing its previous state, for as long as the whole set stays
/// consistent. A constraint that stops short of its original contributes its
/// last consistent state to the explanation.
pub fn counterfactual_xplain(problem: &Problem, spaces: &Spaces) -> Result<Outcome, ExplainError> {
    let ordered = spaces_in_order(problem, spaces)?;
    let foreground = problem.foreground();

    let originals: Vec<RelaxationState> = foreground
        .iter()
        .map(|c| RelaxationState::Concrete(c.body.clone()))
        .collect();
    if states_consistent(problem, &originals)? {
        return Ok(Outcome::NoConflict);
    }
    if ordered.iter().all(|s| s.usable_states() == 1) {
        return Ok(Outcome::NoRelaxation);
    }

    let mut current: Vec<RelaxationState> = ordered.iter().map(|s| s.states()[s.top_index()].clone()).collect();
    // Only rigid constraints can make the starting point inconsistent.
    if !states_consistent(problem, &current)? {
        return Ok(Outcome::NoRelaxation);
    }

    let mut explanation = Explanation::default();
    let mut trace = Trace::default();
    for (i, (constraint, space)) in foreground.iter().zip(&ordered).enumerate() {
        let path = space.path_to_original()?;
        for step in path.into_iter().skip(1) {
            let mut attempt = current.clone();
            attempt[i] = step.clone();
            let consistent = states_consistent(problem, &attempt)?;
            if consistent {
                current[i] = step.clone();
            } else {
                explanation.push(Substitution {
                    original: constraint.clone(),
                    relaxed: current[i].clone(),
                });
            }
            trace.records.push(TraceRecord {
                index: trace.records.len() + 1,
                constraint_id: constraint.id.clone(),
                added: step,
                consistent,
                explanation: explanation.clone(),
                states: attempt,
            });
            if !consistent {
                break;
            }
        }
    }

    let mut relaxed_set: Vec<Constraint> = problem.background().to_vec();
    for (c, state) in foreground.iter().zip(&current) {
        if let RelaxationState::Concrete(body) = state {
            relaxed_set.push(Constraint {
                id: c.id.clone(),
                role: c.role,
                body: body.clone(),
            });
        }
    }
    Ok(Outcome::Explained(Explained {
        explanation,
        relaxed_set,
        states: current,
        trace,
    }))
}

fn check_background(problem: &Problem) -> Result<(), ExplainError> {
    if states_consistent(problem, &[])? {
        Ok(())
    } else {
        Err(ExplainError::InconsistentBackground)
    }
}

/// Preferred minimal conflict by QuickXplain divide and conquer.
///
/// Foreground order is the preference order: earlier constraints are kept out
/// of the conflict whenever a later one can complete it instead.
pub fn minimal_conflict(problem: &Problem) -> Result<Vec<Constraint>, ExplainError> {
    check_background(problem)?;
    let foreground = problem.foreground();
    let all: Vec<usize> = (0..foreground.len()).collect();
    let check = |subset: &[usize]| -> Result<bool, CspError> {
        let mut bodies: Vec<&Body> = problem.background().iter().map(|c| &c.body).collect();
        bodies.extend(subset.iter().map(|&i| &foreground[i].body));
        is_consistent_bodies(problem, &bodies)
    };
    if check(&all)? {
        return Err(ExplainError::NoConflict);
    }
    let mut conflict = quick_xplain(&check, false, &all, &[])?;
    conflict.sort_unstable();
    Ok(conflict.into_iter().map(|i| foreground[i].clone()).collect())
}

fn quick_xplain(
    check: &dyn Fn(&[usize]) -> Result<bool, CspError>,
    delta_added: bool,
    candidates: &[usize],
    base: &[usize],
) -> Result<Vec<usize>, CspError> {
    if delta_added && !check(base)? {
        return Ok(Vec::new());
    }
    if candidates.len() == 1 {
        return Ok(candidates.to_vec());
    }
    let (first, second) = candidates.split_at(candidates.len() / 2);
    let with_second: Vec<usize> = base.iter().chain(second).copied().collect();
    let d1 = quick_xplain(check, !second.is_empty(), first, &with_second)?;
    let with_d1: Vec<usize> = base.iter().chain(&d1).copied().collect();
    let d2 = quick_xplain(check, !d1.is_empty(), second, &with_d1)?;
    Ok(d1.into_iter().chain(d2).collect())
}

/// Maximal relaxation by order-respecting grow, with its exclusion set.
pub fn maximal_relaxation(problem: &Problem) -> Result<(Vec<Constraint>, Vec<Constraint>), ExplainError> {
    check_background(problem)?;
    let mut kept: Vec<Constraint> = Vec::new();
    let mut excluded = Vec::new();
    for c in problem.foreground() {
        let mut bodies: Vec<&Body> = problem.background().iter().map(|b| &b.body).collect();
        bodies.extend(kept.iter().map(|k| &k.body));
        bodies.push(&c.body);
        if is_consistent_bodies(problem, &bodies)? {
            kept.push(c.clone());
        } else {
            excluded.push(c.clone());
        }
    }
    Ok((kept, excluded))
}

/// Every consistent, Pareto-maximal choice of one state per foreground constraint.
///
/// A vector is Pareto-maximal when no single coordinate can be replaced by a
/// state it directly dominates (other than `Bottom`) while staying
/// consistent. Vectors come back in lexicographic order of state indices.
pub fn brute_force_relaxation_oracle(
    problem: &Problem,
    spaces: &Spaces,
) -> Result<Vec<Vec<RelaxationState>>, ExplainError> {
    let ordered = spaces_in_order(problem, spaces)?;
    let choices: Vec<Vec<usize>> = ordered
        .iter()
        .map(|s| (0..s.states().len()).filter(|&i| !s.states()[i].is_bottom()).collect())
        .collect();
    let size = choices.iter().map(|c| c.len() as u128).product::<u128>();
    if size > ORACLE_BUDGET as u128 {
        return Err(ExplainError::BudgetExceeded {
            size,
            budget: ORACLE_BUDGET,
        });
    }

    let mut memo: HashMap<Vec<usize>, bool> = HashMap::new();
    let mut consistent = |combo: &[usize]| -> Result<bool, CspError> {
        if let Some(&v) = memo.get(combo) {
            return Ok(v);
        }
        let states: Vec<RelaxationState> = combo
            .iter()
            .zip(&ordered)
            .map(|(&i, s)| s.states()[i].clone())
            .collect();
        let v = states_consistent(problem, &states)?;
        memo.insert(combo.to_vec(), v);
        Ok(v)
    };

    let mut out = Vec::new();
    let mut cursor = vec![0usize; choices.len()];
    loop {
        let combo: Vec<usize> = cursor.iter().zip(&choices).map(|(&k, c)| c[k]).collect();
        if consistent(&combo)? {
            let mut maximal = true;
            'coords: for (pos, space) in ordered.iter().enumerate() {
                for child in space.children(combo[pos]) {
                    if space.states()[child].is_bottom() {
                        continue;
                    }
                    let mut tighter = combo.clone();
                    tighter[pos] = child;
                    if consistent(&tighter)? {
                        maximal = false;
                        break 'coords;
                    }
                }
            }
            if maximal {
                out.push(
                    combo
                        .iter()
                        .zip(&ordered)
                        .map(|(&i, s)| s.states()[i].clone())
                        .collect(),
                );
            }
        }
        // Odometer over the choice lists, last coordinate fastest.
        let mut k = choices.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            cursor[k] += 1;
            if cursor[k] < choices[k].len() {
                break;
            }
            cursor[k] = 0;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderFormat {
    Text,
    Json,
}

const SATISFIABLE: &str = "Your constraints are satisfiable; no changes needed.";
const TAIL: &str = "you can find at least one solution that satisfies your remaining constraints.";

/// Renders an explanation for people (`Text`) or programs (`Json`).
///
/// Attribute labels and units come from the problem's variables.
pub fn render_explanation(explanation: &Explanation, format: RenderFormat, problem: &Problem) -> String {
    match format {
        RenderFormat::Json => serde_json::to_string_pretty(&explanation.entries()).expect("entries serialize"),
        RenderFormat::Text if explanation.is_empty() => SATISFIABLE.to_string(),
        RenderFormat::Text => explanation
            .substitutions()
            .iter()
            .map(|s| sentence(s, problem))
            .collect::<Vec<_>>()
            .join("\n"),
    }
}

fn sentence(s: &Substitution, problem: &Problem) -> String {
    let subject = subject(&s.original.body, problem);
    match &s.relaxed {
        RelaxationState::Top => format!("If you remove your constraint on {subject}, {TAIL}"),
        RelaxationState::Bottom => format!("Your constraint on {subject} cannot be satisfied."),
        RelaxationState::Concrete(relaxed) => {
            let (from, to) = match (&s.original.body, relaxed) {
                (
                    Body::Unary { var, op, value },
                    Body::Unary {
                        var: rvar,
                        op: rop,
                        value: rvalue,
                    },
                ) if var == rvar && op == rop => (with_unit(value, var, problem), with_unit(rvalue, var, problem)),
                (orig, relaxed) => (spaced(orig), spaced(relaxed)),
            };
            format!("If you change your constraint on {subject} from {from} to {to}, {TAIL}")
        }
    }
}

fn subject(body: &Body, problem: &Problem) -> String {
    let labels: Vec<&str> = body
        .variables()
        .into_iter()
        .map(|v| problem.variable(v).map_or(v, |var| var.label()))
        .collect();
    match labels.as_slice() {
        [one] => one.to_string(),
        [a, b] => format!("{a} and {b}"),
        many => many.join(", "),
    }
}

fn with_unit(value: &crate::AttributeValue, var: &str, problem: &Problem) -> String {
    let plain = value.to_plain_string();
    match problem.variable(var).and_then(|v| v.unit()) {
        Some(unit) => format!("{plain} {unit}"),
        None => plain,
    }
}

fn spaced(body: &Body) -> String {
    match body {
        Body::Unary { var, op, value } => format!("{var} {op} {}", value.to_plain_string()),
        Body::Binary { left, op, right } => format!("{left} {op} {right}"),
        Body::Membership { var, values } => {
            let items: Vec<String> = values.iter().map(|v| v.to_plain_string()).collect();
            format!("{var} in {{{}}}", items.join(", "))
        }
        other => other.to_string(),
    }
}
