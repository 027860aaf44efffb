//! Seeded random catalog problems and brute-force reference checks.
#![allow(dead_code)]

use std::path::PathBuf;

use cfxplain_core::catalog::{AttributeDoc, CatalogDoc, CatalogSource, ValueText};
use cfxplain_core::{
    assemble_problem, is_consistent, load_problem_file, Assembled, Constraint, ConstraintDescriptor, Direction,
    Problem, ProblemSpec, SpaceDescriptor,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn load(name: &str) -> Assembled {
    let (spec, catalog) = load_problem_file(&data_dir().join(name)).expect("load problem file");
    assemble_problem(&spec, catalog.as_ref()).expect("assemble")
}

const CATEGORIES: [&str; 4] = ["p", "q", "r", "s"];

struct Column {
    name: String,
    numeric: bool,
    scale: u32,
}

fn numeric_text(rng: &mut ChaCha8Rng, scale: u32) -> String {
    if scale == 0 {
        rng.gen_range(0..8).to_string()
    } else {
        format!("{}.{}", rng.gen_range(0..4), rng.gen_range(0..10))
    }
}

/// A random catalog problem: 1-8 rows, 1-5 attributes, 1-5 foreground
/// constraints, sometimes one extra background constraint.
pub fn random_spec(rng: &mut ChaCha8Rng) -> ProblemSpec {
    let n_attrs = rng.gen_range(1..=5);
    let columns: Vec<Column> = (0..n_attrs)
        .map(|i| Column {
            name: format!("a{i}"),
            numeric: rng.gen_bool(0.7),
            scale: if rng.gen_bool(0.25) { 1 } else { 0 },
        })
        .collect();
    let n_rows = rng.gen_range(1..=8);
    let rows: Vec<Vec<String>> = (0..n_rows)
        .map(|_| {
            columns
                .iter()
                .map(|c| {
                    if c.numeric {
                        numeric_text(rng, c.scale)
                    } else {
                        CATEGORIES[..3].choose(rng).unwrap().to_string()
                    }
                })
                .collect()
        })
        .collect();
    let column_values = |i: usize| -> Vec<String> {
        let mut v: Vec<String> = rows.iter().map(|r| r[i].clone()).collect();
        v.sort();
        v.dedup();
        v
    };

    let descriptor = |rng: &mut ChaCha8Rng, id: Option<String>| -> ConstraintDescriptor {
        let i = rng.gen_range(0..columns.len());
        let col = &columns[i];
        let mut d = ConstraintDescriptor {
            id,
            attr: col.name.clone(),
            op: String::new(),
            value: None,
            values: Vec::new(),
            other: None,
        };
        if col.numeric {
            let numeric_others: Vec<&Column> = columns.iter().filter(|c| c.numeric && c.name != col.name).collect();
            if !numeric_others.is_empty() && rng.gen_bool(0.1) {
                d.op = [">", ">=", "<", "<=", "="].choose(rng).unwrap().to_string();
                d.other = Some(numeric_others.choose(rng).unwrap().name.clone());
                return d;
            }
            d.op = [">=", ">=", "<=", "<=", ">", "<", "=", "!="]
                .choose(rng)
                .unwrap()
                .to_string();
            let value = if rng.gen_bool(0.7) {
                column_values(i).choose(rng).unwrap().clone()
            } else {
                numeric_text(rng, col.scale)
            };
            d.value = Some(ValueText(value));
        } else {
            let domain = column_values(i);
            let roll: f64 = rng.gen();
            if roll < 0.6 {
                d.op = "=".into();
                d.value = Some(ValueText(domain.choose(rng).unwrap().clone()));
            } else if roll < 0.75 {
                d.op = "!=".into();
                d.value = Some(ValueText(domain.choose(rng).unwrap().clone()));
            } else {
                d.op = "in".into();
                let k = rng.gen_range(1..=domain.len());
                d.values = domain.choose_multiple(rng, k).map(|s| ValueText(s.clone())).collect();
            }
        }
        d
    };

    let n_fg = rng.gen_range(1..=5);
    let foreground: Vec<ConstraintDescriptor> = (0..n_fg)
        .map(|k| {
            let id = if rng.gen_bool(0.5) {
                Some(format!("c{}", k + 1))
            } else {
                None
            };
            descriptor(rng, id)
        })
        .collect();
    let background = if rng.gen_bool(0.3) {
        vec![descriptor(rng, Some("b1".into()))]
    } else {
        Vec::new()
    };

    // Threshold constraints need a matching direction: either a preference
    // on the attribute or an explicit per-constraint direction.
    let mut spec = ProblemSpec {
        catalog: Some(CatalogSource::Inline(CatalogDoc {
            attributes: columns
                .iter()
                .map(|c| AttributeDoc {
                    name: c.name.clone(),
                    kind: if c.numeric { "num".into() } else { "cat".into() },
                    meta: Default::default(),
                })
                .collect(),
            rows: rows
                .into_iter()
                .map(|r| r.into_iter().map(ValueText).collect())
                .collect(),
        })),
        background,
        ..ProblemSpec::default()
    };
    for (k, d) in foreground.iter().enumerate() {
        if d.other.is_some() {
            continue;
        }
        let direction = match d.op.as_str() {
            ">=" | ">" => Direction::Mib,
            "<=" | "<" => Direction::Lib,
            _ => continue,
        };
        let id = d.id.clone().unwrap_or_else(|| format!("c{}", k + 1));
        let clash = foreground.iter().any(|o| {
            o.attr == d.attr
                && o.other.is_none()
                && match direction {
                    Direction::Mib => matches!(o.op.as_str(), "<=" | "<"),
                    Direction::Lib => matches!(o.op.as_str(), ">=" | ">"),
                }
        });
        if clash || rng.gen_bool(0.5) {
            spec.spaces.insert(
                id,
                SpaceDescriptor {
                    direction: Some(direction),
                    ..SpaceDescriptor::default()
                },
            );
        } else {
            spec.preferences.insert(d.attr.clone(), direction);
        }
    }
    // A preference applies to every threshold constraint on the attribute, so
    // any constraint that relies on it must agree with it.
    for (k, d) in foreground.iter().enumerate() {
        let id = d.id.clone().unwrap_or_else(|| format!("c{}", k + 1));
        if let Some(p) = spec.preferences.get(&d.attr).copied() {
            let needed = match d.op.as_str() {
                ">=" | ">" if d.other.is_none() => Direction::Mib,
                "<=" | "<" if d.other.is_none() => Direction::Lib,
                _ => continue,
            };
            if needed != p {
                spec.spaces.insert(
                    id,
                    SpaceDescriptor {
                        direction: Some(needed),
                        ..SpaceDescriptor::default()
                    },
                );
            }
        }
    }
    spec.foreground = foreground;
    spec
}

pub fn assemble(spec: &ProblemSpec) -> Assembled {
    let catalog = match &spec.catalog {
        Some(CatalogSource::Inline(doc)) => doc.clone().into_catalog().expect("generated catalog is valid"),
        _ => unreachable!("generated specs carry inline catalogs"),
    };
    assemble_problem(spec, Some(&catalog)).expect("generated spec assembles")
}

/// Random cases whose background is consistent and whose full constraint
/// set is not.
pub fn conflicting_cases(rng: &mut ChaCha8Rng, count: usize) -> Vec<Assembled> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = assemble(&random_spec(rng));
        if !is_consistent(&a.problem, a.problem.background()).unwrap() {
            continue;
        }
        if consistent_with(&a.problem, a.problem.foreground().iter()) {
            continue;
        }
        out.push(a);
    }
    out
}

/// Is `B` plus the given constraints satisfiable?
pub fn consistent_with<'a>(problem: &'a Problem, extra: impl IntoIterator<Item = &'a Constraint>) -> bool {
    let set: Vec<Constraint> = problem.background().iter().chain(extra).cloned().collect();
    is_consistent(problem, &set).unwrap()
}

/// Every subset-minimal conflict among the foreground constraints, as
/// sorted index lists, by checking all subsets.
pub fn all_minimal_conflicts(problem: &Problem) -> Vec<Vec<usize>> {
    let fg = problem.foreground();
    let n = fg.len();
    let inconsistent: Vec<bool> = (0u32..1 << n)
        .map(|mask| !consistent_with(problem, (0..n).filter(|i| mask & (1 << i) != 0).map(|i| &fg[i])))
        .collect();
    (0u32..1 << n)
        .filter(|&mask| inconsistent[mask as usize])
        .filter(|&mask| (0..n).all(|i| mask & (1 << i) == 0 || !inconsistent[(mask & !(1 << i)) as usize]))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}

/// The conflict QuickXplain prefers when later foreground constraints are
/// given up first: repeatedly pick the start of the shortest suffix that is
/// inconsistent together with what has been chosen so far.
pub fn preferred_conflict(problem: &Problem) -> Vec<usize> {
    let fg = problem.foreground();
    let mut chosen: Vec<usize> = Vec::new();
    let mut lower = 0;
    while consistent_with(problem, chosen.iter().map(|&i| &fg[i])) {
        let start = (lower..fg.len())
            .rev()
            .find(|&s| !consistent_with(problem, chosen.iter().map(|&i| &fg[i]).chain(&fg[s..])))
            .expect("full set is inconsistent");
        chosen.push(start);
        lower = start + 1;
    }
    chosen.sort_unstable();
    chosen
}
