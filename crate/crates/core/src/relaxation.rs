//! Multi-point relaxation spaces.
//!
//! A space is a small poset of progressively weaker forms of one foreground
//! constraint, stored as its Hasse diagram. An edge `a -> b` means `a`
//! directly dominates `b`: `a` is strictly more relaxed. `Top` drops the
//! constraint altogether and `Bottom` admits nothing; every other state is a
//! concrete constraint body over the same variables as the original.
//!
//! A space without a `Top` state is *rigid*: it holds only the original and
//! `Bottom`, and offers no relaxation at all.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csp::{Assignment, Body, CompareOp, Constraint, Problem};
use crate::value::{AttributeValue, ValueKind};

/// Cap on assignments enumerated when checking one edge for soundness.
const SOUNDNESS_BUDGET: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RelaxationState {
    Top,
    Bottom,
    Concrete(Body),
}

impl RelaxationState {
    pub fn body(&self) -> Option<&Body> {
        match self {
            RelaxationState::Concrete(b) => Some(b),
            _ => None,
        }
    }

    pub fn is_top(&self) -> bool {
        matches!(self, RelaxationState::Top)
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, RelaxationState::Bottom)
    }

    /// Truth under a total assignment; `Top` accepts and `Bottom` rejects everything.
    pub fn admits(&self, assignment: &Assignment) -> Result<bool, crate::CspError> {
        match self {
            RelaxationState::Top => Ok(true),
            RelaxationState::Bottom => Ok(false),
            RelaxationState::Concrete(b) => b.eval(assignment),
        }
    }
}

impl fmt::Display for RelaxationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelaxationState::Top => f.write_str("TOP"),
            RelaxationState::Bottom => f.write_str("BOTTOM"),
            RelaxationState::Concrete(b) => b.fmt(f),
        }
    }
}

/// Preferred direction of a numeric attribute: more is better or less is better.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "MIB")]
    Mib,
    #[serde(rename = "LIB")]
    Lib,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Mib => "MIB",
            Direction::Lib => "LIB",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("constraint {id:?}: {reason}")]
    Unsupported { id: String, reason: String },
    #[error("constraint {id:?}: operator {op} cannot be relaxed along direction {direction}")]
    IncompatibleDirection {
        id: String,
        op: CompareOp,
        direction: Direction,
    },
    #[error("constraint {id:?}: relaxation values must all be {expected}")]
    WrongValueKind { id: String, expected: ValueKind },
    #[error("constraint {0:?}: no values to build a relaxation space from")]
    EmptyValues(String),
    #[error("constraint {id:?}: value {value} is not among the relaxation values")]
    ValueAbsent { id: String, value: String },
    #[error("state {0} is not part of the relaxation space")]
    StateNotInSpace(String),
    #[error("relaxation space for {0:?}: original state is not reachable from the top")]
    OriginalUnreachable(String),
}

/// Ways a relaxation space can be malformed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    OriginalMissing,
    OriginalNotConcrete,
    MissingTop,
    MultipleTops(usize),
    MissingBottom,
    MultipleBottoms(usize),
    EdgeOutOfRange { from: usize, to: usize },
    SelfLoop(String),
    Cycle,
    TopHasParent,
    BottomHasChild,
    DuplicateState(String),
    UnreachableFromTop(String),
    CannotReachBottom(String),
    InvalidState { state: String, reason: String },
    VariableMismatch(String),
    Unsound { relaxed: String, tighter: String },
    TooLargeToCheck { relaxed: String, tighter: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OriginalMissing => f.write_str("original state index is out of range"),
            Violation::OriginalNotConcrete => f.write_str("original state must be a concrete constraint"),
            Violation::MissingTop => f.write_str("missing top state"),
            Violation::MultipleTops(n) => write!(f, "{n} top states, expected one"),
            Violation::MissingBottom => f.write_str("missing bottom state"),
            Violation::MultipleBottoms(n) => write!(f, "{n} bottom states, expected one"),
            Violation::EdgeOutOfRange { from, to } => write!(f, "edge {from}->{to} points outside the state list"),
            Violation::SelfLoop(s) => write!(f, "self loop on {s}"),
            Violation::Cycle => f.write_str("edges contain a cycle"),
            Violation::TopHasParent => f.write_str("top state has an incoming edge"),
            Violation::BottomHasChild => f.write_str("bottom state has an outgoing edge"),
            Violation::DuplicateState(s) => write!(f, "state {s} listed more than once"),
            Violation::UnreachableFromTop(s) => write!(f, "state {s} is not dominated by the top"),
            Violation::CannotReachBottom(s) => write!(f, "state {s} does not dominate the bottom"),
            Violation::InvalidState { state, reason } => write!(f, "state {state} is invalid: {reason}"),
            Violation::VariableMismatch(s) => {
                write!(f, "state {s} mentions different variables than the original")
            }
            Violation::Unsound { relaxed, tighter } => write!(
                f,
                "semantic soundness: {tighter} admits an assignment that {relaxed} rejects"
            ),
            Violation::TooLargeToCheck { relaxed, tighter } => {
                write!(f, "edge {relaxed}->{tighter} is too large to check exhaustively")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelaxationSpace {
    constraint_id: String,
    states: Vec<RelaxationState>,
    edges: Vec<(usize, usize)>,
    original: usize,
}

impl RelaxationSpace {
    /// Raw constructor. Nothing is checked here; run [`validate_space`]
    /// before trusting a hand-built space.
    pub fn new(
        constraint_id: impl Into<String>,
        states: Vec<RelaxationState>,
        edges: Vec<(usize, usize)>,
        original: usize,
    ) -> Self {
        RelaxationSpace {
            constraint_id: constraint_id.into(),
            states,
            edges,
            original,
        }
    }

    /// `Top -> original -> Bottom`: the constraint is either kept or dropped.
    pub fn two_point(constraint: &Constraint) -> Self {
        RelaxationSpace::new(
            constraint.id.clone(),
            vec![
                RelaxationState::Top,
                RelaxationState::Concrete(constraint.body.clone()),
                RelaxationState::Bottom,
            ],
            vec![(0, 1), (1, 2)],
            1,
        )
    }

    /// `original -> Bottom` with no top: the constraint cannot be relaxed.
    pub fn rigid(constraint: &Constraint) -> Self {
        RelaxationSpace::new(
            constraint.id.clone(),
            vec![
                RelaxationState::Concrete(constraint.body.clone()),
                RelaxationState::Bottom,
            ],
            vec![(0, 1)],
            0,
        )
    }

    pub fn constraint_id(&self) -> &str {
        &self.constraint_id
    }

    pub fn states(&self) -> &[RelaxationState] {
        &self.states
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn original_index(&self) -> usize {
        self.original
    }

    pub fn original(&self) -> &RelaxationState {
        &self.states[self.original]
    }

    pub fn index_of(&self, state: &RelaxationState) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    /// Finds a state by its canonical text form.
    pub fn find_by_text(&self, text: &str) -> Option<&RelaxationState> {
        self.states.iter().find(|s| s.to_string() == text)
    }

    pub fn children(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.0 == i).map(|e| e.1)
    }

    fn parents(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.1 == i).map(|e| e.0)
    }

    /// The most relaxed state: `Top`, or the original for a rigid space.
    pub fn top_index(&self) -> usize {
        self.states
            .iter()
            .position(RelaxationState::is_top)
            .unwrap_or(self.original)
    }

    /// States other than `Bottom`; the ones a constraint may actually take.
    pub fn usable_states(&self) -> usize {
        self.states.iter().filter(|s| !s.is_bottom()).count()
    }

    pub fn is_rigid(&self) -> bool {
        !self.states.iter().any(RelaxationState::is_top)
    }

    /// Reflexive reachability along edges.
    pub fn dominates_index(&self, a: usize, b: usize) -> bool {
        if a == b {
            return true;
        }
        let mut seen = vec![false; self.states.len()];
        let mut queue = VecDeque::from([a]);
        seen[a] = true;
        while let Some(i) = queue.pop_front() {
            for c in self.children(i) {
                if c == b {
                    return true;
                }
                if c < seen.len() && !seen[c] {
                    seen[c] = true;
                    queue.push_back(c);
                }
            }
        }
        false
    }

    /// True iff `a` is at least as relaxed as `b`.
    pub fn dominates(&self, a: &RelaxationState, b: &RelaxationState) -> Result<bool, SpaceError> {
        let ai = self
            .index_of(a)
            .ok_or_else(|| SpaceError::StateNotInSpace(a.to_string()))?;
        let bi = self
            .index_of(b)
            .ok_or_else(|| SpaceError::StateNotInSpace(b.to_string()))?;
        Ok(self.dominates_index(ai, bi))
    }

    /// Indices of the fixed tightening path from the top to the original.
    ///
    /// Shortest path by edge count; among equally short paths the one whose
    /// sequence of state texts is lexicographically smallest wins.
    pub fn path_indices(&self) -> Result<Vec<usize>, SpaceError> {
        let n = self.states.len();
        let top = self.top_index();
        if self.original >= n {
            return Err(SpaceError::OriginalUnreachable(self.constraint_id.clone()));
        }
        // Distance of every state to the original, walking edges backwards.
        let mut to_original = vec![usize::MAX; n];
        to_original[self.original] = 0;
        let mut queue = VecDeque::from([self.original]);
        while let Some(i) = queue.pop_front() {
            for p in self.parents(i) {
                if p < n && to_original[p] == usize::MAX {
                    to_original[p] = to_original[i] + 1;
                    queue.push_back(p);
                }
            }
        }
        if to_original[top] == usize::MAX {
            return Err(SpaceError::OriginalUnreachable(self.constraint_id.clone()));
        }
        let mut path = vec![top];
        let mut current = top;
        while current != self.original {
            let remaining = to_original[current] - 1;
            let next = self
                .children(current)
                .filter(|&c| c < n && to_original[c] == remaining)
                .min_by_key(|&c| self.states[c].to_string())
                .expect("distance labels guarantee a successor");
            path.push(next);
            current = next;
        }
        Ok(path)
    }

    pub fn path_to_original(&self) -> Result<Vec<RelaxationState>, SpaceError> {
        Ok(self
            .path_indices()?
            .into_iter()
            .map(|i| self.states[i].clone())
            .collect())
    }

    /// The chain formed by the tightening path plus `Bottom`.
    pub fn restrict_to_path(&self) -> Result<RelaxationSpace, SpaceError> {
        let mut states = self.path_to_original()?;
        let original = states.len() - 1;
        states.push(RelaxationState::Bottom);
        let edges = (0..states.len() - 1).map(|i| (i, i + 1)).collect();
        Ok(RelaxationSpace::new(
            self.constraint_id.clone(),
            states,
            edges,
            original,
        ))
    }
}

fn chain(constraint_id: &str, states: Vec<RelaxationState>, original: usize) -> RelaxationSpace {
    let mut all = Vec::with_capacity(states.len() + 2);
    all.push(RelaxationState::Top);
    all.extend(states);
    all.push(RelaxationState::Bottom);
    let edges = (0..all.len() - 1).map(|i| (i, i + 1)).collect();
    RelaxationSpace::new(constraint_id, all, edges, original + 1)
}

fn unsupported(constraint: &Constraint, reason: &str) -> SpaceError {
    SpaceError::Unsupported {
        id: constraint.id.clone(),
        reason: reason.to_string(),
    }
}

/// Total-order chain of threshold states over the given numeric values.
///
/// With [`Direction::Mib`] the constraint must be `>=` or `>` and lower
/// thresholds are more relaxed; with [`Direction::Lib`] it must be `<=` or
/// `<` and higher caps are more relaxed. A user threshold that is not among
/// the values is inserted at its sorted position.
pub fn build_chain_space(
    constraint: &Constraint,
    catalog_values: &[AttributeValue],
    direction: Direction,
) -> Result<RelaxationSpace, SpaceError> {
    let Body::Unary { var, op, value } = &constraint.body else {
        return Err(unsupported(constraint, "chain spaces need a unary comparison"));
    };
    let wrong_kind = || SpaceError::WrongValueKind {
        id: constraint.id.clone(),
        expected: ValueKind::Numeric,
    };
    let threshold = value.as_decimal().ok_or_else(wrong_kind)?;
    let mut values = catalog_values
        .iter()
        .map(|v| v.as_decimal().ok_or_else(wrong_kind))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(SpaceError::EmptyValues(constraint.id.clone()));
    }
    values.sort();
    values.dedup();

    let base = match (direction, op) {
        (Direction::Mib, CompareOp::Ge | CompareOp::Gt) => CompareOp::Ge,
        (Direction::Lib, CompareOp::Le | CompareOp::Lt) => CompareOp::Le,
        _ => {
            return Err(SpaceError::IncompatibleDirection {
                id: constraint.id.clone(),
                op: *op,
                direction,
            })
        }
    };
    if direction == Direction::Lib {
        values.reverse();
    }
    // Position of the user's state among the catalog thresholds, most relaxed first.
    let looser = |v: &crate::Decimal| match direction {
        Direction::Mib => *v < threshold,
        Direction::Lib => *v > threshold,
    };
    let split = values.iter().take_while(|v| looser(v)).count();
    let on_catalog = values.get(split) == Some(&threshold);

    let mut states: Vec<RelaxationState> = values
        .iter()
        .map(|v| RelaxationState::Concrete(Body::unary(var.clone(), base, AttributeValue::Numeric(*v))))
        .collect();
    let user = RelaxationState::Concrete(constraint.body.clone());
    let original = if op.is_strict() {
        // `>v` sits just below `>=v` (if present) and above the next threshold.
        let at = if on_catalog { split + 1 } else { split };
        states.insert(at, user);
        at
    } else if on_catalog {
        split
    } else {
        states.insert(split, user);
        split
    };
    Ok(chain(&constraint.id, states, original))
}

/// Fan of single-value states under `Top`, one per categorical value.
///
/// For an equality constraint the original is its own singleton. For a
/// multi-value membership the original set sits between `Top` and the
/// singletons it contains.
pub fn build_membership_space(
    constraint: &Constraint,
    all_values: &[AttributeValue],
) -> Result<RelaxationSpace, SpaceError> {
    let (var, chosen): (&String, Vec<AttributeValue>) = match &constraint.body {
        Body::Unary {
            var,
            op: CompareOp::Eq,
            value,
        } => (var, vec![value.clone()]),
        Body::Membership { var, values } => (var, values.clone()),
        _ => {
            return Err(unsupported(
                constraint,
                "membership spaces need an equality or membership constraint",
            ))
        }
    };
    let mut values: Vec<AttributeValue> = all_values.to_vec();
    values.sort();
    values.dedup();
    if values.is_empty() {
        return Err(SpaceError::EmptyValues(constraint.id.clone()));
    }
    if values.iter().chain(&chosen).any(|v| v.kind() != ValueKind::Categorical) {
        return Err(SpaceError::WrongValueKind {
            id: constraint.id.clone(),
            expected: ValueKind::Categorical,
        });
    }
    if let Some(missing) = chosen.iter().find(|v| !values.contains(v)) {
        return Err(SpaceError::ValueAbsent {
            id: constraint.id.clone(),
            value: missing.to_string(),
        });
    }

    let mut states = vec![RelaxationState::Top];
    let mut edges = Vec::new();
    let set_state = match &constraint.body {
        Body::Membership { .. } => {
            states.push(RelaxationState::Concrete(constraint.body.clone()));
            edges.push((0, 1));
            Some(1)
        }
        _ => None,
    };
    let mut original = set_state.unwrap_or(0);
    for v in &values {
        let idx = states.len();
        states.push(RelaxationState::Concrete(Body::unary(
            var.clone(),
            CompareOp::Eq,
            v.clone(),
        )));
        match set_state {
            Some(s) if chosen.contains(v) => edges.push((s, idx)),
            Some(_) => edges.push((0, idx)),
            None => {
                edges.push((0, idx));
                if chosen[0] == *v {
                    original = idx;
                }
            }
        }
    }
    let bottom = states.len();
    states.push(RelaxationState::Bottom);
    for i in 1..bottom {
        if Some(i) != set_state {
            edges.push((i, bottom));
        }
    }
    Ok(RelaxationSpace::new(constraint.id.clone(), states, edges, original))
}

/// Operator-weakening poset for a comparison.
///
/// `=` relaxes to the incomparable pair `<=` / `>=`; a strict operator relaxes
/// to its non-strict form; `<=`, `>=` and `!=` only relax to `Top`.
pub fn build_operator_space(constraint: &Constraint) -> Result<RelaxationSpace, SpaceError> {
    let with_op = |op: CompareOp| -> Body {
        match &constraint.body {
            Body::Unary { var, value, .. } => Body::unary(var.clone(), op, value.clone()),
            Body::Binary { left, right, .. } => Body::binary(left.clone(), op, right.clone()),
            _ => unreachable!("checked below"),
        }
    };
    let op = match &constraint.body {
        Body::Unary { op, value, .. } => {
            if *op == CompareOp::Eq && value.kind() == ValueKind::Categorical {
                return Err(unsupported(
                    constraint,
                    "categorical equality has no ordered weakening; use a membership space",
                ));
            }
            *op
        }
        Body::Binary { op, .. } => *op,
        _ => return Err(unsupported(constraint, "operator spaces need a comparison")),
    };
    let id = constraint.id.clone();
    let concrete = RelaxationState::Concrete;
    Ok(match op {
        CompareOp::Eq => RelaxationSpace::new(
            id,
            vec![
                RelaxationState::Top,
                concrete(with_op(CompareOp::Le)),
                concrete(with_op(CompareOp::Ge)),
                concrete(constraint.body.clone()),
                RelaxationState::Bottom,
            ],
            vec![(0, 1), (0, 2), (1, 3), (2, 3), (3, 4)],
            3,
        ),
        CompareOp::Lt | CompareOp::Gt => chain(
            &id,
            vec![concrete(with_op(op.non_strict())), concrete(constraint.body.clone())],
            1,
        ),
        CompareOp::Le | CompareOp::Ge | CompareOp::Ne => RelaxationSpace::two_point(constraint),
    })
}

/// Lists every structural and semantic problem with a space; empty means valid.
///
/// Semantic soundness is checked edge by edge: every assignment of the
/// involved variables (drawn from `problem`'s domains) admitted by the tighter
/// state must be admitted by the more relaxed one.
pub fn validate_space(space: &RelaxationSpace, problem: &Problem) -> Vec<Violation> {
    let mut out = Vec::new();
    let states = &space.states;
    let n = states.len();

    if space.original >= n {
        out.push(Violation::OriginalMissing);
    } else if states[space.original].body().is_none() {
        out.push(Violation::OriginalNotConcrete);
    }

    let tops = states.iter().filter(|s| s.is_top()).count();
    let bottoms = states.iter().filter(|s| s.is_bottom()).count();
    let rigid_shape = tops == 0 && n == 2 && bottoms == 1 && space.original < n;
    if tops == 0 && !rigid_shape {
        out.push(Violation::MissingTop);
    }
    if tops > 1 {
        out.push(Violation::MultipleTops(tops));
    }
    if bottoms == 0 {
        out.push(Violation::MissingBottom);
    }
    if bottoms > 1 {
        out.push(Violation::MultipleBottoms(bottoms));
    }

    let mut seen = HashSet::new();
    for s in states {
        if !seen.insert(s.to_string()) {
            out.push(Violation::DuplicateState(s.to_string()));
        }
    }

    let mut edges_ok = true;
    for &(a, b) in &space.edges {
        if a >= n || b >= n {
            out.push(Violation::EdgeOutOfRange { from: a, to: b });
            edges_ok = false;
        } else if a == b {
            out.push(Violation::SelfLoop(states[a].to_string()));
            edges_ok = false;
        }
    }
    if !edges_ok {
        return out;
    }

    if has_cycle(n, &space.edges) {
        out.push(Violation::Cycle);
    }
    if space.edges.iter().any(|&(_, b)| states[b].is_top()) {
        out.push(Violation::TopHasParent);
    }
    if space.edges.iter().any(|&(a, _)| states[a].is_bottom()) {
        out.push(Violation::BottomHasChild);
    }

    if space.original < n && tops <= 1 && bottoms == 1 {
        let top = space.top_index();
        let bottom = states.iter().position(RelaxationState::is_bottom).unwrap();
        for (i, s) in states.iter().enumerate() {
            if !space.dominates_index(top, i) {
                out.push(Violation::UnreachableFromTop(s.to_string()));
            }
            if !space.dominates_index(i, bottom) {
                out.push(Violation::CannotReachBottom(s.to_string()));
            }
        }
    }

    let original_vars: Option<BTreeSet<&str>> = states
        .get(space.original)
        .and_then(|s| s.body())
        .map(|b| b.variables().into_iter().collect());
    let mut well_formed = vec![true; n];
    for (i, s) in states.iter().enumerate() {
        let Some(body) = s.body() else { continue };
        if let Err(e) = problem.check_body(body) {
            out.push(Violation::InvalidState {
                state: s.to_string(),
                reason: e.to_string(),
            });
            well_formed[i] = false;
            continue;
        }
        if let Some(vars) = &original_vars {
            let mine: BTreeSet<&str> = body.variables().into_iter().collect();
            if &mine != vars {
                out.push(Violation::VariableMismatch(s.to_string()));
            }
        }
    }

    for &(a, b) in &space.edges {
        if !(well_formed[a] && well_formed[b]) {
            continue;
        }
        match edge_is_sound(problem, &states[a], &states[b]) {
            Some(true) => {}
            Some(false) => out.push(Violation::Unsound {
                relaxed: states[a].to_string(),
                tighter: states[b].to_string(),
            }),
            None => out.push(Violation::TooLargeToCheck {
                relaxed: states[a].to_string(),
                tighter: states[b].to_string(),
            }),
        }
    }
    out
}

fn has_cycle(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut indegree = vec![0usize; n];
    for &(_, b) in edges {
        indegree[b] += 1;
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut visited = 0;
    while let Some(i) = queue.pop_front() {
        visited += 1;
        for &(a, b) in edges {
            if a == i {
                indegree[b] -= 1;
                if indegree[b] == 0 {
                    queue.push_back(b);
                }
            }
        }
    }
    visited != n
}

/// `Some(true)` when every assignment admitted by `tighter` is admitted by
/// `relaxed`; `None` when the joint domain exceeds the budget.
fn edge_is_sound(problem: &Problem, relaxed: &RelaxationState, tighter: &RelaxationState) -> Option<bool> {
    if relaxed.is_top() || tighter.is_bottom() {
        return Some(true);
    }
    let mut names: Vec<&str> = Vec::new();
    for s in [relaxed, tighter] {
        if let Some(b) = s.body() {
            for v in b.variables() {
                if !names.contains(&v) {
                    names.push(v);
                }
            }
        }
    }
    let domains: Vec<&[AttributeValue]> = names
        .iter()
        .map(|n| problem.variable(n).expect("checked").domain())
        .collect();
    let total = domains.iter().try_fold(1usize, |acc, d| acc.checked_mul(d.len()))?;
    if total > SOUNDNESS_BUDGET {
        return None;
    }
    let mut counters = vec![0usize; domains.len()];
    loop {
        let assignment: Assignment = names
            .iter()
            .zip(&counters)
            .zip(&domains)
            .map(|((n, &c), d)| (n.to_string(), d[c].clone()))
            .collect();
        let t = tighter.admits(&assignment).ok()?;
        if t && !relaxed.admits(&assignment).ok()? {
            return Some(false);
        }
        let mut k = 0;
        loop {
            if k == counters.len() {
                return Some(true);
            }
            counters[k] += 1;
            if counters[k] < domains[k].len() {
                break;
            }
            counters[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::Variable;

    fn num(s: &str) -> AttributeValue {
        AttributeValue::num(s).unwrap()
    }

    fn nums(values: &[&str]) -> Vec<AttributeValue> {
        values.iter().map(|v| num(v)).collect()
    }

    fn cats(values: &[&str]) -> Vec<AttributeValue> {
        values.iter().map(|v| AttributeValue::cat(v)).collect()
    }

    fn texts(states: &[RelaxationState]) -> Vec<String> {
        states.iter().map(|s| s.to_string()).collect()
    }

    fn ge(var: &str, v: &str) -> Constraint {
        Constraint::foreground("c", Body::unary(var, CompareOp::Ge, num(v)))
    }

    fn problem_over(var: &str, domain: Vec<AttributeValue>) -> Problem {
        Problem::new(vec![Variable::new(var, domain).unwrap()], vec![], vec![]).unwrap()
    }

    #[test]
    fn mib_chain_for_screen_size() {
        let s = build_chain_space(
            &ge("size", "15.0"),
            &nums(&["15.4", "11.1", "15.0", "14.0"]),
            Direction::Mib,
        )
        .unwrap();
        assert_eq!(
            texts(s.states()),
            ["TOP", "size>=11.1", "size>=14.0", "size>=15.0", "size>=15.4", "BOTTOM"]
        );
        assert_eq!(s.original().to_string(), "size>=15.0");
        assert_eq!(
            texts(&s.path_to_original().unwrap()),
            ["TOP", "size>=11.1", "size>=14.0", "size>=15.0"]
        );
        let p = problem_over("size", nums(&["11.1", "14.0", "15.0", "15.4"]));
        assert!(validate_space(&s, &p).is_empty());
    }

    #[test]
    fn lib_chain_with_off_catalog_cap() {
        let c = Constraint::foreground("c5", Body::unary("price", CompareOp::Le, num("2000.00")));
        let values = nums(&["785.99", "1499.99", "1899.00", "2349.99", "2616.99"]);
        let s = build_chain_space(&c, &values, Direction::Lib).unwrap();
        assert_eq!(
            texts(s.states()),
            [
                "TOP",
                "price<=2616.99",
                "price<=2349.99",
                "price<=2000.00",
                "price<=1899.00",
                "price<=1499.99",
                "price<=785.99",
                "BOTTOM"
            ]
        );
        assert_eq!(s.original().to_string(), "price<=2000.00");
        assert!(validate_space(&s, &problem_over("price", values)).is_empty());
    }

    #[test]
    fn strict_threshold_sits_below_its_non_strict_twin() {
        let c = Constraint::foreground("c", Body::unary("x", CompareOp::Gt, num("2")));
        let s = build_chain_space(&c, &nums(&["1", "2", "3"]), Direction::Mib).unwrap();
        assert_eq!(texts(s.states()), ["TOP", "x>=1", "x>=2", "x>2", "x>=3", "BOTTOM"]);
        assert_eq!(s.original_index(), 3);
        assert!(validate_space(&s, &problem_over("x", nums(&["1", "2", "3"]))).is_empty());
    }

    #[test]
    fn chain_rejects_wrong_direction_and_kinds() {
        assert!(matches!(
            build_chain_space(&ge("x", "1"), &nums(&["1"]), Direction::Lib),
            Err(SpaceError::IncompatibleDirection { .. })
        ));
        let brand = Constraint::foreground("c", Body::unary("b", CompareOp::Eq, AttributeValue::cat("HP")));
        assert!(build_chain_space(&brand, &cats(&["HP"]), Direction::Mib).is_err());
        assert!(matches!(
            build_chain_space(&ge("x", "1"), &[], Direction::Mib),
            Err(SpaceError::EmptyValues(_))
        ));
    }

    #[test]
    fn brand_fan() {
        let c = Constraint::foreground("c1", Body::unary("brand", CompareOp::Eq, AttributeValue::cat("Lenovo")));
        let s = build_membership_space(&c, &cats(&["Sony", "HP", "Lenovo"])).unwrap();
        assert_eq!(
            texts(s.states()),
            ["TOP", "brand=HP", "brand=Lenovo", "brand=Sony", "BOTTOM"]
        );
        assert_eq!(s.original().to_string(), "brand=Lenovo");
        assert!(!s.dominates_index(1, 2) && !s.dominates_index(2, 1));
        assert_eq!(texts(&s.path_to_original().unwrap()), ["TOP", "brand=Lenovo"]);
        assert!(validate_space(&s, &problem_over("brand", cats(&["HP", "Lenovo", "Sony"]))).is_empty());

        let single = build_membership_space(&c, &cats(&["Lenovo"])).unwrap();
        assert_eq!(texts(single.states()), ["TOP", "brand=Lenovo", "BOTTOM"]);

        let apple = Constraint::foreground("c1", Body::unary("brand", CompareOp::Eq, AttributeValue::cat("Apple")));
        assert!(matches!(
            build_membership_space(&apple, &cats(&["HP", "Lenovo", "Sony"])),
            Err(SpaceError::ValueAbsent { .. })
        ));
        assert!(matches!(
            build_membership_space(&c, &[]),
            Err(SpaceError::EmptyValues(_))
        ));
    }

    #[test]
    fn multi_value_membership_sits_above_its_members() {
        let c = Constraint::foreground("c", Body::membership("b", cats(&["HP", "Sony"])));
        let s = build_membership_space(&c, &cats(&["HP", "Lenovo", "Sony"])).unwrap();
        assert_eq!(s.original().to_string(), "b in {HP,Sony}");
        let hp = s.find_by_text("b=HP").unwrap();
        assert!(s.dominates(s.original(), hp).unwrap());
        let lenovo = s.find_by_text("b=Lenovo").unwrap();
        assert!(!s.dominates(s.original(), lenovo).unwrap());
        assert!(validate_space(&s, &problem_over("b", cats(&["HP", "Lenovo", "Sony"]))).is_empty());
    }

    #[test]
    fn equality_diamond_and_tie_break() {
        let c = Constraint::foreground("c", Body::unary("x", CompareOp::Eq, num("5")));
        let s = build_operator_space(&c).unwrap();
        let le = s.find_by_text("x<=5").unwrap();
        let gee = s.find_by_text("x>=5").unwrap();
        assert!(!s.dominates(le, gee).unwrap() && !s.dominates(gee, le).unwrap());
        assert_eq!(texts(&s.path_to_original().unwrap()), ["TOP", "x<=5", "x=5"]);
        let p = problem_over("x", (0..10).map(|i| num(&i.to_string())).collect());
        assert!(validate_space(&s, &p).is_empty());
    }

    #[test]
    fn strict_binary_relaxes_to_non_strict() {
        let c = Constraint::foreground("c", Body::binary("x1", CompareOp::Gt, "x2"));
        let s = build_operator_space(&c).unwrap();
        assert_eq!(texts(s.states()), ["TOP", "x1>=x2", "x1>x2", "BOTTOM"]);
        let ne = Constraint::foreground("c", Body::binary("x", CompareOp::Ne, "y"));
        assert_eq!(
            texts(build_operator_space(&ne).unwrap().states()),
            ["TOP", "x!=y", "BOTTOM"]
        );
        let m = Constraint::foreground("c", Body::membership("b", cats(&["a"])));
        assert!(build_operator_space(&m).is_err());
    }

    #[test]
    fn dominates_basics() {
        let s = build_chain_space(
            &ge("size", "15.0"),
            &nums(&["11.1", "14.0", "15.0", "15.4"]),
            Direction::Mib,
        )
        .unwrap();
        let top = RelaxationState::Top;
        let s150 = s.find_by_text("size>=15.0").unwrap().clone();
        let s154 = s.find_by_text("size>=15.4").unwrap().clone();
        assert!(s.dominates(&top, &s150).unwrap());
        assert!(!s.dominates(&s154, &s150).unwrap());
        assert!(s.dominates(&s154, &s154).unwrap());
        let stranger = RelaxationState::Concrete(Body::unary("size", CompareOp::Ge, num("99")));
        assert!(matches!(
            s.dominates(&stranger, &top),
            Err(SpaceError::StateNotInSpace(_))
        ));
    }

    #[test]
    fn validate_catches_inverted_edge_and_missing_bottom() {
        let p = problem_over("size", nums(&["14.0", "15.0"]));
        let st = |v: &str| RelaxationState::Concrete(Body::unary("size", CompareOp::Ge, num(v)));
        let inverted = RelaxationSpace::new(
            "c",
            vec![RelaxationState::Top, st("15.0"), st("14.0"), RelaxationState::Bottom],
            vec![(0, 1), (1, 2), (2, 3)],
            1,
        );
        let v = validate_space(&inverted, &p);
        assert!(v.iter().any(|x| matches!(x, Violation::Unsound { .. })), "{v:?}");

        let no_bottom = RelaxationSpace::new("c", vec![RelaxationState::Top, st("15.0")], vec![(0, 1)], 1);
        assert!(validate_space(&no_bottom, &p).contains(&Violation::MissingBottom));
    }

    #[test]
    fn validate_catches_structural_faults() {
        let p = problem_over("x", nums(&["1", "2"]));
        let st = RelaxationState::Concrete(Body::unary("x", CompareOp::Ge, num("1")));
        let cyclic = RelaxationSpace::new(
            "c",
            vec![RelaxationState::Top, st.clone(), RelaxationState::Bottom],
            vec![(0, 1), (1, 2), (2, 0)],
            1,
        );
        let v = validate_space(&cyclic, &p);
        assert!(v.contains(&Violation::Cycle));
        assert!(v.contains(&Violation::TopHasParent));

        let orig_top = RelaxationSpace::new(
            "c",
            vec![RelaxationState::Top, RelaxationState::Bottom],
            vec![(0, 1)],
            0,
        );
        assert!(validate_space(&orig_top, &p).contains(&Violation::OriginalNotConcrete));

        let stray = RelaxationSpace::new(
            "c",
            vec![RelaxationState::Top, st.clone(), RelaxationState::Bottom],
            vec![(0, 2)],
            1,
        );
        let v = validate_space(&stray, &p);
        assert!(v.iter().any(|x| matches!(x, Violation::UnreachableFromTop(_))));

        let other_var = RelaxationSpace::new(
            "c",
            vec![
                RelaxationState::Top,
                RelaxationState::Concrete(Body::unary("y", CompareOp::Ge, num("1"))),
                RelaxationState::Bottom,
            ],
            vec![(0, 1), (1, 2)],
            1,
        );
        assert!(validate_space(&other_var, &p)
            .iter()
            .any(|x| matches!(x, Violation::InvalidState { .. })));
    }

    #[test]
    fn rigid_space_is_valid_with_one_usable_state() {
        let p = problem_over("x", nums(&["1", "2"]));
        let r = RelaxationSpace::rigid(&ge("x", "2"));
        assert!(validate_space(&r, &p).is_empty());
        assert_eq!(r.usable_states(), 1);
        assert_eq!(texts(&r.path_to_original().unwrap()), ["x>=2"]);
    }

    #[test]
    fn restricted_path_is_a_chain() {
        let c = Constraint::foreground("c", Body::unary("x", CompareOp::Eq, num("5")));
        let s = build_operator_space(&c).unwrap().restrict_to_path().unwrap();
        assert_eq!(texts(s.states()), ["TOP", "x<=5", "x=5", "BOTTOM"]);
        assert_eq!(s.original().to_string(), "x=5");
    }
}
