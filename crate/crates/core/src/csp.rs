//! Finite-domain constraint problems and a deterministic backtracking solver.
//!
//! A [`Problem`] holds variables with finite, ordered domains plus two
//! constraint lists: the background `B` that is never relaxed and the
//! foreground `F` of user requirements. The solver is plain chronological
//! backtracking with forward checking over binary and table constraints.
//! Variables are branched in declaration order and values in domain order,
//! so every call is reproducible.

use std::collections::{HashMap, HashSet};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::CspError;
use crate::value::{AttributeValue, ValueKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CompareOp {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }

    pub fn parse(text: &str) -> Option<CompareOp> {
        Some(match text.trim() {
            "=" | "==" => CompareOp::Eq,
            "!=" | "<>" | "≠" => CompareOp::Ne,
            "<" => CompareOp::Lt,
            "<=" | "≤" => CompareOp::Le,
            ">" => CompareOp::Gt,
            ">=" | "≥" => CompareOp::Ge,
            _ => return None,
        })
    }

    /// True for the operators that need an ordered (numeric) domain.
    pub fn is_ordering(self) -> bool {
        !matches!(self, CompareOp::Eq | CompareOp::Ne)
    }

    pub fn is_strict(self) -> bool {
        matches!(self, CompareOp::Lt | CompareOp::Gt)
    }

    /// `<` becomes `<=`, `>` becomes `>=`; everything else is unchanged.
    pub fn non_strict(self) -> CompareOp {
        match self {
            CompareOp::Lt => CompareOp::Le,
            CompareOp::Gt => CompareOp::Ge,
            op => op,
        }
    }

    fn holds<T: Ord + ?Sized>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            CompareOp::Eq => lhs == rhs,
            CompareOp::Ne => lhs != rhs,
            CompareOp::Lt => lhs < rhs,
            CompareOp::Le => lhs <= rhs,
            CompareOp::Gt => lhs > rhs,
            CompareOp::Ge => lhs >= rhs,
        }
    }

    fn compare(self, lhs: &AttributeValue, rhs: &AttributeValue) -> bool {
        match (lhs, rhs) {
            (AttributeValue::Numeric(a), AttributeValue::Numeric(b)) => self.holds(a, b),
            (AttributeValue::Categorical(a), AttributeValue::Categorical(b)) => self.holds(a, b),
            _ => false,
        }
    }
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// What a constraint says about its variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Body {
    Unary {
        var: String,
        op: CompareOp,
        value: AttributeValue,
    },
    Membership {
        var: String,
        values: Vec<AttributeValue>,
    },
    Binary {
        left: String,
        op: CompareOp,
        right: String,
    },
    /// Extensional constraint: the listed variables must jointly take one of the rows.
    Table {
        vars: Vec<String>,
        rows: Vec<Vec<AttributeValue>>,
    },
}

impl Body {
    pub fn unary(var: impl Into<String>, op: CompareOp, value: AttributeValue) -> Body {
        Body::Unary {
            var: var.into(),
            op,
            value,
        }
    }

    pub fn binary(left: impl Into<String>, op: CompareOp, right: impl Into<String>) -> Body {
        Body::Binary {
            left: left.into(),
            op,
            right: right.into(),
        }
    }

    /// Membership over a value set; the set is stored sorted and deduplicated.
    pub fn membership(var: impl Into<String>, values: impl IntoIterator<Item = AttributeValue>) -> Body {
        let mut values: Vec<_> = values.into_iter().collect();
        values.sort();
        values.dedup();
        Body::Membership {
            var: var.into(),
            values,
        }
    }

    /// Variables mentioned by the body, in first-mention order, without repeats.
    pub fn variables(&self) -> Vec<&str> {
        let mentioned: Vec<&str> = match self {
            Body::Unary { var, .. } | Body::Membership { var, .. } => vec![var],
            Body::Binary { left, right, .. } => vec![left, right],
            Body::Table { vars, .. } => vars.iter().map(String::as_str).collect(),
        };
        let mut out: Vec<&str> = Vec::with_capacity(mentioned.len());
        for v in mentioned {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    /// Truth of the body under an assignment that covers its variables.
    pub fn eval(&self, assignment: &Assignment) -> Result<bool, CspError> {
        let lookup = |var: &str| assignment.get(var).ok_or_else(|| CspError::Unassigned(var.to_string()));
        match self {
            Body::Unary { var, op, value } => {
                let actual = lookup(var)?;
                check_operands(var, *op, actual, value)?;
                Ok(op.compare(actual, value))
            }
            Body::Membership { var, values } => {
                let actual = lookup(var)?;
                if let Some(v) = values.iter().find(|v| v.kind() != actual.kind()) {
                    return Err(kind_mismatch(var, v, actual.kind()));
                }
                Ok(values.contains(actual))
            }
            Body::Binary { left, op, right } => {
                let a = lookup(left)?;
                let b = lookup(right)?;
                check_operands(left, *op, a, b)?;
                Ok(op.compare(a, b))
            }
            Body::Table { vars, rows } => {
                let actual = vars.iter().map(|v| lookup(v)).collect::<Result<Vec<_>, _>>()?;
                Ok(rows.iter().any(|row| row.iter().zip(&actual).all(|(r, a)| r == *a)))
            }
        }
    }
}

fn kind_mismatch(var: &str, value: &AttributeValue, expected: ValueKind) -> CspError {
    CspError::ValueKindMismatch {
        var: var.to_string(),
        value: value.to_string(),
        expected,
        found: value.kind(),
    }
}

fn check_operands(var: &str, op: CompareOp, lhs: &AttributeValue, rhs: &AttributeValue) -> Result<(), CspError> {
    if lhs.kind() != rhs.kind() {
        return Err(kind_mismatch(var, rhs, lhs.kind()));
    }
    if op.is_ordering() && lhs.kind() == ValueKind::Categorical {
        return Err(CspError::TypeMismatch {
            var: var.to_string(),
            op: op.to_string(),
            kind: ValueKind::Categorical,
        });
    }
    Ok(())
}

/// Canonical compact form, e.g. `size>=15.0`, `brand in {HP,Sony}`, `x1>x2`.
impl fmt::Display for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Body::Unary { var, op, value } => write!(f, "{var}{op}{value}"),
            Body::Membership { var, values } => {
                write!(f, "{var} in {{")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")
            }
            Body::Binary { left, op, right } => write!(f, "{left}{op}{right}"),
            Body::Table { vars, rows } => {
                write!(f, "table({}) [{} rows]", vars.join(","), rows.len())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Background,
    Foreground,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub id: String,
    pub role: Role,
    pub body: Body,
}

impl Constraint {
    pub fn background(id: impl Into<String>, body: Body) -> Self {
        Constraint {
            id: id.into(),
            role: Role::Background,
            body,
        }
    }

    pub fn foreground(id: impl Into<String>, body: Body) -> Self {
        Constraint {
            id: id.into(),
            role: Role::Foreground,
            body,
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.id, self.body)
    }
}

/// True iff the assignment satisfies the constraint.
pub fn eval_constraint(constraint: &Constraint, assignment: &Assignment) -> Result<bool, CspError> {
    constraint.body.eval(assignment)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    name: String,
    kind: ValueKind,
    domain: Vec<AttributeValue>,
    label: Option<String>,
    unit: Option<String>,
}

impl Variable {
    /// Builds a variable over a non-empty, duplicate-free domain of one kind.
    /// Domain order is kept as given.
    pub fn new(name: impl Into<String>, domain: impl IntoIterator<Item = AttributeValue>) -> Result<Self, CspError> {
        let name = name.into();
        let domain: Vec<AttributeValue> = domain.into_iter().collect();
        let Some(first) = domain.first() else {
            return Err(CspError::EmptyDomain(name));
        };
        let kind = first.kind();
        if domain.iter().any(|v| v.kind() != kind) {
            return Err(CspError::MixedDomain { var: name });
        }
        let mut seen = HashSet::new();
        for v in &domain {
            if !seen.insert(v) {
                return Err(CspError::DuplicateDomainValue {
                    var: name,
                    value: v.to_string(),
                });
            }
        }
        Ok(Variable {
            name,
            kind,
            domain,
            label: None,
            unit: None,
        })
    }

    /// Human-facing name and unit used when rendering explanations.
    pub fn with_label(mut self, label: Option<String>, unit: Option<String>) -> Self {
        self.label = label;
        self.unit = unit;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn domain(&self) -> &[AttributeValue] {
        &self.domain
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.name)
    }

    pub fn unit(&self) -> Option<&str> {
        self.unit.as_deref()
    }
}

/// A total or partial map from variable names to values, in variable order.
pub type Assignment = IndexMap<String, AttributeValue>;

/// Variables plus background and foreground constraints.
#[derive(Clone, Debug)]
pub struct Problem {
    variables: Vec<Variable>,
    index: HashMap<String, usize>,
    background: Vec<Constraint>,
    foreground: Vec<Constraint>,
}

impl Problem {
    /// Validates every constraint against the variables. Roles are set from
    /// the list a constraint is passed in; foreground order is preserved.
    pub fn new(
        variables: Vec<Variable>,
        background: Vec<Constraint>,
        foreground: Vec<Constraint>,
    ) -> Result<Self, CspError> {
        let mut index = HashMap::new();
        for (i, v) in variables.iter().enumerate() {
            if index.insert(v.name.clone(), i).is_some() {
                return Err(CspError::DuplicateVariable(v.name.clone()));
            }
        }
        let mut problem = Problem {
            variables,
            index,
            background: Vec::new(),
            foreground: Vec::new(),
        };
        let mut ids = HashSet::new();
        for (role, list) in [(Role::Background, background), (Role::Foreground, foreground)] {
            for mut c in list {
                if !ids.insert(c.id.clone()) {
                    return Err(CspError::DuplicateConstraint(c.id));
                }
                problem.check_body(&c.body)?;
                c.role = role;
                match role {
                    Role::Background => problem.background.push(c),
                    Role::Foreground => problem.foreground.push(c),
                }
            }
        }
        Ok(problem)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.index.get(name).map(|&i| &self.variables[i])
    }

    pub fn background(&self) -> &[Constraint] {
        &self.background
    }

    pub fn foreground(&self) -> &[Constraint] {
        &self.foreground
    }

    pub fn constraint(&self, id: &str) -> Option<&Constraint> {
        self.background.iter().chain(&self.foreground).find(|c| c.id == id)
    }

    /// Same variables, different constraint lists.
    pub fn with_constraints(
        &self,
        background: Vec<Constraint>,
        foreground: Vec<Constraint>,
    ) -> Result<Problem, CspError> {
        Problem::new(self.variables.clone(), background, foreground)
    }

    fn var_index(&self, name: &str) -> Result<usize, CspError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| CspError::UnknownVariable(name.to_string()))
    }

    /// Checks that a body only mentions known variables with compatible kinds.
    pub fn check_body(&self, body: &Body) -> Result<(), CspError> {
        match body {
            Body::Unary { var, op, value } => {
                let v = &self.variables[self.var_index(var)?];
                if value.kind() != v.kind {
                    return Err(kind_mismatch(var, value, v.kind));
                }
                if op.is_ordering() && v.kind == ValueKind::Categorical {
                    return Err(CspError::TypeMismatch {
                        var: var.clone(),
                        op: op.to_string(),
                        kind: v.kind,
                    });
                }
            }
            Body::Membership { var, values } => {
                let v = &self.variables[self.var_index(var)?];
                if values.is_empty() {
                    return Err(CspError::Malformed(format!("empty value set on {var:?}")));
                }
                if let Some(bad) = values.iter().find(|x| x.kind() != v.kind) {
                    return Err(kind_mismatch(var, bad, v.kind));
                }
            }
            Body::Binary { left, op, right } => {
                let a = &self.variables[self.var_index(left)?];
                let b = &self.variables[self.var_index(right)?];
                if a.kind != b.kind {
                    return Err(CspError::Malformed(format!(
                        "{left:?} is {} but {right:?} is {}",
                        a.kind, b.kind
                    )));
                }
                if op.is_ordering() && a.kind == ValueKind::Categorical {
                    return Err(CspError::TypeMismatch {
                        var: left.clone(),
                        op: op.to_string(),
                        kind: a.kind,
                    });
                }
            }
            Body::Table { vars, rows } => {
                let mut seen = HashSet::new();
                let mut idx = Vec::with_capacity(vars.len());
                for v in vars {
                    if !seen.insert(v) {
                        return Err(CspError::Malformed(format!("table lists variable {v:?} twice")));
                    }
                    idx.push(self.var_index(v)?);
                }
                for (r, row) in rows.iter().enumerate() {
                    if row.len() != vars.len() {
                        return Err(CspError::RaggedRow {
                            row: r,
                            expected: vars.len(),
                            found: row.len(),
                        });
                    }
                    for (value, &vi) in row.iter().zip(&idx) {
                        let var = &self.variables[vi];
                        if !var.domain.contains(value) {
                            return Err(CspError::ValueOutsideDomain {
                                row: r,
                                var: var.name.clone(),
                                value: value.to_string(),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Index-based form of a body used during search.
enum Compiled {
    /// Allowed domain positions of one variable.
    Mask {
        var: usize,
        allowed: Vec<bool>,
    },
    Binary {
        left: usize,
        op: CompareOp,
        right: usize,
    },
    Table {
        vars: Vec<usize>,
        rows: Vec<Vec<usize>>,
    },
}

struct Search<'p> {
    problem: &'p Problem,
    constraints: Vec<Compiled>,
    /// Constraint indices touching each variable.
    watches: Vec<Vec<usize>>,
    limit: usize,
    found: Vec<Assignment>,
}

type Domains = Vec<Vec<bool>>;

impl<'p> Search<'p> {
    fn compile(problem: &'p Problem, bodies: &[&Body], limit: usize) -> Result<Self, CspError> {
        let mut constraints = Vec::with_capacity(bodies.len());
        for body in bodies {
            problem.check_body(body)?;
            constraints.push(Self::compile_body(problem, body)?);
        }
        let mut watches = vec![Vec::new(); problem.variables.len()];
        for (ci, c) in constraints.iter().enumerate() {
            match c {
                Compiled::Mask { .. } => {}
                Compiled::Binary { left, right, .. } => {
                    watches[*left].push(ci);
                    watches[*right].push(ci);
                }
                Compiled::Table { vars, .. } => vars.iter().for_each(|&v| watches[v].push(ci)),
            }
        }
        Ok(Search {
            problem,
            constraints,
            watches,
            limit,
            found: Vec::new(),
        })
    }

    fn compile_body(problem: &Problem, body: &Body) -> Result<Compiled, CspError> {
        let mask = |var: &str, keep: &dyn Fn(&AttributeValue) -> bool| -> Result<Compiled, CspError> {
            let vi = problem.var_index(var)?;
            let allowed = problem.variables[vi].domain.iter().map(keep).collect();
            Ok(Compiled::Mask { var: vi, allowed })
        };
        match body {
            Body::Unary { var, op, value } => mask(var, &|x| op.compare(x, value)),
            Body::Membership { var, values } => mask(var, &|x| values.contains(x)),
            Body::Binary { left, op, right } if left == right => mask(left, &|x| op.compare(x, x)),
            Body::Binary { left, op, right } => Ok(Compiled::Binary {
                left: problem.var_index(left)?,
                op: *op,
                right: problem.var_index(right)?,
            }),
            Body::Table { vars, rows } => {
                let vars: Vec<usize> = vars.iter().map(|v| problem.var_index(v)).collect::<Result<_, _>>()?;
                let rows = rows
                    .iter()
                    .map(|row| {
                        row.iter()
                            .zip(&vars)
                            .map(|(value, &vi)| {
                                problem.variables[vi]
                                    .domain
                                    .iter()
                                    .position(|d| d == value)
                                    .expect("table values checked against domains")
                            })
                            .collect()
                    })
                    .collect();
                Ok(Compiled::Table { vars, rows })
            }
        }
    }

    fn run(mut self) -> Vec<Assignment> {
        let mut domains: Domains = self
            .problem
            .variables
            .iter()
            .map(|v| vec![true; v.domain.len()])
            .collect();
        for c in &self.constraints {
            if let Compiled::Mask { var, allowed } = c {
                for (slot, ok) in domains[*var].iter_mut().zip(allowed) {
                    *slot &= *ok;
                }
            }
        }
        if domains.iter().any(|d| !d.contains(&true)) {
            return Vec::new();
        }
        let mut assigned = vec![None; domains.len()];
        self.branch(0, &mut domains, &mut assigned);
        self.found
    }

    fn branch(&mut self, depth: usize, domains: &mut Domains, assigned: &mut Vec<Option<usize>>) {
        if self.found.len() >= self.limit {
            return;
        }
        if depth == domains.len() {
            let assignment: Assignment = self
                .problem
                .variables
                .iter()
                .zip(assigned.iter())
                .map(|(v, a)| (v.name.clone(), v.domain[a.expect("total")].clone()))
                .collect();
            self.found.push(assignment);
            return;
        }
        for value in 0..domains[depth].len() {
            if !domains[depth][value] {
                continue;
            }
            let mut next = domains.clone();
            next[depth].iter_mut().enumerate().for_each(|(i, s)| *s = i == value);
            assigned[depth] = Some(value);
            if self.forward_check(depth, &mut next, assigned) {
                self.branch(depth + 1, &mut next, assigned);
            }
            assigned[depth] = None;
            if self.found.len() >= self.limit {
                return;
            }
        }
    }

    /// Prunes unassigned neighbours of `var`; false on a domain wipe-out.
    fn forward_check(&self, var: usize, domains: &mut Domains, assigned: &[Option<usize>]) -> bool {
        let vars = &self.problem.variables;
        for &ci in &self.watches[var] {
            match &self.constraints[ci] {
                Compiled::Mask { .. } => {}
                Compiled::Binary { left, op, right } => {
                    let (other, other_is_right) = if *left == var { (*right, true) } else { (*left, false) };
                    if assigned[other].is_some() {
                        continue;
                    }
                    let fixed = &vars[var].domain[assigned[var].expect("just assigned")];
                    for (i, slot) in domains[other].iter_mut().enumerate() {
                        if !*slot {
                            continue;
                        }
                        let candidate = &vars[other].domain[i];
                        let ok = if other_is_right {
                            op.compare(fixed, candidate)
                        } else {
                            op.compare(candidate, fixed)
                        };
                        *slot = ok;
                    }
                    if !domains[other].contains(&true) {
                        return false;
                    }
                }
                Compiled::Table { vars: scope, rows } => {
                    let mut support: Vec<Vec<bool>> = scope.iter().map(|&v| vec![false; domains[v].len()]).collect();
                    let mut any = false;
                    for row in rows {
                        let live = row.iter().zip(scope).all(|(&val, &v)| domains[v][val]);
                        if !live {
                            continue;
                        }
                        any = true;
                        for (k, &val) in row.iter().enumerate() {
                            support[k][val] = true;
                        }
                    }
                    if !any {
                        return false;
                    }
                    for (k, &v) in scope.iter().enumerate() {
                        if assigned[v].is_some() {
                            continue;
                        }
                        for (slot, ok) in domains[v].iter_mut().zip(&support[k]) {
                            *slot &= *ok;
                        }
                        if !domains[v].contains(&true) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// Up to `limit` solutions of `bodies`, in deterministic search order.
pub fn solve_bodies(problem: &Problem, bodies: &[&Body], limit: usize) -> Result<Vec<Assignment>, CspError> {
    if limit == 0 {
        return Err(CspError::Malformed("solution limit must be at least 1".into()));
    }
    Ok(Search::compile(problem, bodies, limit)?.run())
}

/// Up to `limit` distinct total assignments satisfying every constraint in the set.
pub fn solve(problem: &Problem, constraints: &[Constraint], limit: usize) -> Result<Vec<Assignment>, CspError> {
    let bodies: Vec<&Body> = constraints.iter().map(|c| &c.body).collect();
    solve_bodies(problem, &bodies, limit)
}

pub fn is_consistent(problem: &Problem, constraints: &[Constraint]) -> Result<bool, CspError> {
    Ok(!solve(problem, constraints, 1)?.is_empty())
}

pub fn is_consistent_bodies(problem: &Problem, bodies: &[&Body]) -> Result<bool, CspError> {
    Ok(!solve_bodies(problem, bodies, 1)?.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(s: &str) -> AttributeValue {
        AttributeValue::num(s).unwrap()
    }

    fn ints(name: &str, values: &[i64]) -> Variable {
        Variable::new(name, values.iter().map(|v| num(&v.to_string()))).unwrap()
    }

    fn assignment(pairs: &[(&str, AttributeValue)]) -> Assignment {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn strict_and_relaxed_comparison() {
        let a = assignment(&[("x1", num("3")), ("x2", num("3"))]);
        let gt = Constraint::foreground("c", Body::binary("x1", CompareOp::Gt, "x2"));
        let ge = Constraint::foreground("c", Body::binary("x1", CompareOp::Ge, "x2"));
        assert!(!eval_constraint(&gt, &a).unwrap());
        assert!(eval_constraint(&ge, &a).unwrap());
    }

    #[test]
    fn eval_reports_missing_and_mistyped_values() {
        let c = Constraint::foreground("c", Body::unary("x", CompareOp::Le, num("1")));
        assert_eq!(
            eval_constraint(&c, &Assignment::new()),
            Err(CspError::Unassigned("x".into()))
        );
        let a = assignment(&[("x", AttributeValue::cat("red"))]);
        assert!(eval_constraint(&c, &a).is_err());
        let cat = Constraint::foreground("c", Body::unary("x", CompareOp::Gt, AttributeValue::cat("blue")));
        assert!(matches!(eval_constraint(&cat, &a), Err(CspError::TypeMismatch { .. })));
    }

    #[test]
    fn strict_binary_over_small_domains_has_no_solution() {
        let p = Problem::new(vec![ints("x1", &[1, 2, 3]), ints("x2", &[3, 4])], vec![], vec![]).unwrap();
        let gt = Constraint::foreground("c", Body::binary("x1", CompareOp::Gt, "x2"));
        assert!(solve(&p, &[gt], 1).unwrap().is_empty());
        let ge = Constraint::foreground("c", Body::binary("x1", CompareOp::Ge, "x2"));
        let sols = solve(&p, &[ge], 10).unwrap();
        assert_eq!(sols, vec![assignment(&[("x1", num("3")), ("x2", num("3"))])]);
    }

    #[test]
    fn empty_set_is_consistent() {
        let p = Problem::new(vec![ints("x", &[0, 1])], vec![], vec![]).unwrap();
        assert!(is_consistent(&p, &[]).unwrap());
        assert_eq!(solve(&p, &[], 10).unwrap().len(), 2);
    }

    #[test]
    fn problem_rejects_bad_inputs() {
        let x = ints("x", &[0, 1]);
        assert!(matches!(
            Problem::new(vec![x.clone(), x.clone()], vec![], vec![]),
            Err(CspError::DuplicateVariable(_))
        ));
        let c = Constraint::foreground("c", Body::unary("y", CompareOp::Eq, num("1")));
        assert!(matches!(
            Problem::new(vec![x.clone()], vec![], vec![c]),
            Err(CspError::UnknownVariable(_))
        ));
        let a = Constraint::background("a", Body::unary("x", CompareOp::Eq, num("1")));
        let b = Constraint::foreground("a", Body::unary("x", CompareOp::Eq, num("0")));
        assert!(matches!(
            Problem::new(vec![x.clone()], vec![a], vec![b]),
            Err(CspError::DuplicateConstraint(_))
        ));
        let ragged = Constraint::background(
            "t",
            Body::Table {
                vars: vec!["x".into()],
                rows: vec![vec![num("0"), num("1")]],
            },
        );
        assert!(matches!(
            Problem::new(vec![x.clone()], vec![ragged], vec![]),
            Err(CspError::RaggedRow { .. })
        ));
        let outside = Constraint::background(
            "t",
            Body::Table {
                vars: vec!["x".into()],
                rows: vec![vec![num("7")]],
            },
        );
        assert!(matches!(
            Problem::new(vec![x], vec![outside], vec![]),
            Err(CspError::ValueOutsideDomain { .. })
        ));
    }

    #[test]
    fn variable_domain_invariants() {
        assert!(matches!(Variable::new("x", vec![]), Err(CspError::EmptyDomain(_))));
        assert!(matches!(
            Variable::new("x", vec![num("1"), AttributeValue::cat("a")]),
            Err(CspError::MixedDomain { .. })
        ));
        assert!(matches!(
            Variable::new("x", vec![num("1"), num("1.0")]),
            Err(CspError::DuplicateDomainValue { .. })
        ));
    }

    #[test]
    fn table_forward_checking_finds_rows_only() {
        let x = ints("x", &[1, 2, 3]);
        let y = ints("y", &[1, 2, 3]);
        let table = Constraint::background(
            "t",
            Body::Table {
                vars: vec!["x".into(), "y".into()],
                rows: vec![
                    vec![num("1"), num("3")],
                    vec![num("2"), num("2")],
                    vec![num("3"), num("1")],
                ],
            },
        );
        let p = Problem::new(vec![x, y], vec![table.clone()], vec![]).unwrap();
        let lt = Constraint::foreground("c", Body::binary("x", CompareOp::Lt, "y"));
        let sols = solve(&p, &[table.clone(), lt], 10).unwrap();
        assert_eq!(sols, vec![assignment(&[("x", num("1")), ("y", num("3"))])]);
        assert_eq!(solve(&p, &[table], 10).unwrap().len(), 3);
    }

    #[test]
    fn zero_limit_is_rejected() {
        let p = Problem::new(vec![ints("x", &[0])], vec![], vec![]).unwrap();
        assert!(solve(&p, &[], 0).is_err());
    }

    #[test]
    fn display_forms() {
        assert_eq!(
            Body::unary("life", CompareOp::Ge, num("10.0")).to_string(),
            "life>=10.0"
        );
        assert_eq!(
            Body::membership("brand", [AttributeValue::cat("Sony"), AttributeValue::cat("HP")]).to_string(),
            "brand in {HP,Sony}"
        );
        assert_eq!(Body::binary("x1", CompareOp::Gt, "x2").to_string(), "x1>x2");
    }
}
