//! Catalog ingestion and problem assembly.
//!
//! A catalog is a table of items, one column per attribute. Assembly turns a
//! catalog plus a [`ProblemSpec`] into a [`Problem`] (one variable per
//! attribute, the whole catalog as a background table constraint) and a
//! relaxation space for every user constraint.
//!
//! CSV catalogs carry their schema in the header as `name:type` tokens, with
//! `type` one of `num` or `cat` and an optional third token giving the
//! attribute's default direction: `price:num:LIB`.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::csp::{Body, CompareOp, Constraint, Problem, Variable};
use crate::error::CspError;
use crate::explain::Spaces;
use crate::relaxation::{
    build_chain_space, build_membership_space, build_operator_space, validate_space, Direction, RelaxationSpace,
    RelaxationState, SpaceError, Violation,
};
use crate::value::{AttributeValue, Decimal, ValueKind};

/// Id given to the catalog's table constraint.
pub const CATALOG_CONSTRAINT_ID: &str = "catalog";

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: u64, column: u64, message: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow { line: u64, expected: usize, found: usize },
    #[error("catalog has no rows")]
    NoRows,
    #[error("catalog has no attributes")]
    NoAttributes,
    #[error("duplicate attribute {0:?}")]
    DuplicateAttribute(String),
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("attribute {0:?} is categorical; directions apply only to numeric attributes")]
    DirectionOnCategorical(String),
    #[error("value {value:?} for {attr:?} needs more decimal places than the attribute's {scale}")]
    Precision { attr: String, value: String, scale: u32 },
    #[error("constraint {id:?}: {message}")]
    BadDescriptor { id: String, message: String },
    #[error("relaxation space for {id:?}: {message}")]
    BadSpace { id: String, message: String },
    #[error("relaxation space for {id:?} is invalid: {}", violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidSpace { id: String, violations: Vec<Violation> },
    #[error("problem has neither a catalog nor explicit variables")]
    NoVariables,
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CatalogFormat {
    Csv,
    Json,
}

impl CatalogFormat {
    /// Guesses the format from a file extension; anything but `.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => CatalogFormat::Json,
            _ => CatalogFormat::Csv,
        }
    }
}

/// Optional presentation and default-direction metadata for an attribute.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub kind: ValueKind,
    /// Fractional digits shared by every numeric value of the attribute.
    pub scale: u32,
    pub meta: AttributeMeta,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Catalog {
    schema: Vec<Attribute>,
    rows: Vec<Vec<AttributeValue>>,
}

impl Catalog {
    pub fn schema(&self) -> &[Attribute] {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<AttributeValue>] {
        &self.rows
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.schema.iter().find(|a| a.name == name)
    }

    /// Distinct values of a column in domain order.
    pub fn column_values(&self, name: &str) -> Option<Vec<AttributeValue>> {
        let idx = self.schema.iter().position(|a| a.name == name)?;
        let mut values: Vec<AttributeValue> = self.rows.iter().map(|r| r[idx].clone()).collect();
        values.sort();
        values.dedup();
        Some(values)
    }

    /// Builds a catalog from raw text cells, inferring numeric scales.
    fn from_cells(
        header: Vec<(String, ValueKind, AttributeMeta)>,
        cells: Vec<(u64, Vec<String>)>,
    ) -> Result<Catalog, CatalogError> {
        if header.is_empty() {
            return Err(CatalogError::NoAttributes);
        }
        for (i, (name, ..)) in header.iter().enumerate() {
            if header[..i].iter().any(|(n, ..)| n == name) {
                return Err(CatalogError::DuplicateAttribute(name.clone()));
            }
        }
        if cells.is_empty() {
            return Err(CatalogError::NoRows);
        }
        let mut rows: Vec<Vec<AttributeValue>> = Vec::with_capacity(cells.len());
        let mut scales = vec![0u32; header.len()];
        for (line, record) in &cells {
            if record.len() != header.len() {
                return Err(CatalogError::RaggedRow {
                    line: *line,
                    expected: header.len(),
                    found: record.len(),
                });
            }
            let mut row = Vec::with_capacity(record.len());
            for (col, (cell, (_, kind, _))) in record.iter().zip(&header).enumerate() {
                let text = cell.trim();
                let value = match kind {
                    ValueKind::Numeric => {
                        let d: Decimal = text.parse().map_err(|_| CatalogError::Parse {
                            line: *line,
                            column: col as u64 + 1,
                            message: format!("expected a decimal number, found {text:?}"),
                        })?;
                        scales[col] = scales[col].max(d.scale());
                        AttributeValue::Numeric(d)
                    }
                    ValueKind::Categorical => {
                        if text.is_empty() {
                            return Err(CatalogError::Parse {
                                line: *line,
                                column: col as u64 + 1,
                                message: "empty categorical value".into(),
                            });
                        }
                        AttributeValue::cat(text)
                    }
                };
                row.push(value);
            }
            rows.push(row);
        }
        for row in &mut rows {
            for (value, &scale) in row.iter_mut().zip(&scales) {
                if let AttributeValue::Numeric(d) = value {
                    *d = d.rescale(scale).expect("widening rescale is exact");
                }
            }
        }
        let schema = header
            .into_iter()
            .zip(scales)
            .map(|((name, kind, meta), scale)| Attribute {
                name,
                kind,
                scale,
                meta,
            })
            .collect();
        Ok(Catalog { schema, rows })
    }
}

fn parse_kind(token: &str) -> Option<ValueKind> {
    match token.trim().to_ascii_lowercase().as_str() {
        "num" | "numeric" | "number" => Some(ValueKind::Numeric),
        "cat" | "categorical" | "string" => Some(ValueKind::Categorical),
        _ => None,
    }
}

fn parse_direction(token: &str) -> Option<Direction> {
    match token.trim().to_ascii_uppercase().as_str() {
        "MIB" => Some(Direction::Mib),
        "LIB" => Some(Direction::Lib),
        _ => None,
    }
}

/// Reads a catalog in CSV or JSON form with exact decimal parsing.
pub fn load_catalog(mut source: impl Read, format: CatalogFormat) -> Result<Catalog, CatalogError> {
    match format {
        CatalogFormat::Csv => load_csv(source),
        CatalogFormat::Json => {
            let mut text = String::new();
            source.read_to_string(&mut text).map_err(|e| CatalogError::Parse {
                line: 0,
                column: 0,
                message: e.to_string(),
            })?;
            let doc: CatalogDoc = serde_json::from_str(&text).map_err(json_error)?;
            doc.into_catalog()
        }
    }
}

fn json_error(e: serde_json::Error) -> CatalogError {
    CatalogError::Parse {
        line: e.line() as u64,
        column: e.column() as u64,
        message: e.to_string(),
    }
}

fn load_csv(source: impl Read) -> Result<Catalog, CatalogError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let csv_error = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line());
        CatalogError::Parse {
            line,
            column: 0,
            message: e.to_string(),
        }
    };
    let headers = reader.headers().map_err(csv_error)?.clone();
    let mut header = Vec::with_capacity(headers.len());
    for (i, token) in headers.iter().enumerate() {
        let bad = |message: String| CatalogError::Parse {
            line: 1,
            column: i as u64 + 1,
            message,
        };
        let parts: Vec<&str> = token.split(':').map(str::trim).collect();
        let (name, kind, direction) = match parts.as_slice() {
            [name, kind] => (*name, *kind, None),
            [name, kind, dir] => (*name, *kind, Some(*dir)),
            _ => return Err(bad(format!("header token {token:?} is not name:type"))),
        };
        if name.is_empty() {
            return Err(bad("empty attribute name".into()));
        }
        let kind = parse_kind(kind).ok_or_else(|| bad(format!("unknown attribute type {kind:?}")))?;
        let direction = match direction {
            Some(d) => Some(parse_direction(d).ok_or_else(|| bad(format!("unknown direction {d:?}")))?),
            None => None,
        };
        if direction.is_some() && kind == ValueKind::Categorical {
            return Err(CatalogError::DirectionOnCategorical(name.to_string()));
        }
        header.push((
            name.to_string(),
            kind,
            AttributeMeta {
                direction,
                ..AttributeMeta::default()
            },
        ));
    }
    let mut cells = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        cells.push((line, record.iter().map(str::to_string).collect()));
    }
    Catalog::from_cells(header, cells)
}

/// A value written either as a JSON string or a JSON number; kept as text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueText(pub String);

impl<'de> Deserialize<'de> for ValueText {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(serde_json::Number),
        }
        Ok(match Raw::deserialize(deserializer)? {
            Raw::Text(s) => ValueText(s),
            Raw::Number(n) => ValueText(n.to_string()),
        })
    }
}

impl Serialize for ValueText {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl From<&str> for ValueText {
    fn from(s: &str) -> Self {
        ValueText(s.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDoc {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(flatten)]
    pub meta: AttributeMeta,
}

/// JSON form of a catalog.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogDoc {
    pub attributes: Vec<AttributeDoc>,
    pub rows: Vec<Vec<ValueText>>,
}

impl CatalogDoc {
    pub fn into_catalog(self) -> Result<Catalog, CatalogError> {
        let mut header = Vec::with_capacity(self.attributes.len());
        for (i, a) in self.attributes.into_iter().enumerate() {
            let kind = parse_kind(&a.kind).ok_or_else(|| CatalogError::Parse {
                line: 0,
                column: i as u64 + 1,
                message: format!("unknown attribute type {:?}", a.kind),
            })?;
            if a.meta.direction.is_some() && kind == ValueKind::Categorical {
                return Err(CatalogError::DirectionOnCategorical(a.name));
            }
            header.push((a.name, kind, a.meta));
        }
        let cells = self
            .rows
            .into_iter()
            .enumerate()
            .map(|(i, row)| (i as u64 + 1, row.into_iter().map(|v| v.0).collect()))
            .collect();
        Catalog::from_cells(header, cells)
    }

    pub fn from_catalog(catalog: &Catalog) -> CatalogDoc {
        CatalogDoc {
            attributes: catalog
                .schema
                .iter()
                .map(|a| AttributeDoc {
                    name: a.name.clone(),
                    kind: match a.kind {
                        ValueKind::Numeric => "num".into(),
                        ValueKind::Categorical => "cat".into(),
                    },
                    meta: a.meta.clone(),
                })
                .collect(),
            rows: catalog
                .rows
                .iter()
                .map(|r| r.iter().map(|v| ValueText(v.to_string())).collect())
                .collect(),
        }
    }
}

/// Where a problem's catalog comes from: a file path or an inline document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CatalogSource {
    Path(String),
    Inline(CatalogDoc),
}

/// A user or background constraint as written in problem files,
/// e.g. `{"id": "c2", "attr": "size", "op": ">=", "value": "15.0"}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub attr: String,
    pub op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<ValueText>,
    /// Value set for `"op": "in"`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<ValueText>,
    /// Right-hand variable of a comparison between two attributes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other: Option<String>,
}

impl ConstraintDescriptor {
    pub fn unary(id: &str, attr: &str, op: &str, value: &str) -> Self {
        ConstraintDescriptor {
            id: Some(id.to_string()),
            attr: attr.to_string(),
            op: op.to_string(),
            value: Some(value.into()),
            values: Vec::new(),
            other: None,
        }
    }

    /// Descriptor for a constraint body; tables have no descriptor form.
    pub fn from_body(id: Option<String>, body: &Body) -> Option<Self> {
        let base = |attr: &str, op: &str| ConstraintDescriptor {
            id: id.clone(),
            attr: attr.to_string(),
            op: op.to_string(),
            value: None,
            values: Vec::new(),
            other: None,
        };
        Some(match body {
            Body::Unary { var, op, value } => ConstraintDescriptor {
                value: Some(ValueText(value.to_string())),
                ..base(var, op.symbol())
            },
            Body::Membership { var, values } => ConstraintDescriptor {
                values: values.iter().map(|v| ValueText(v.to_string())).collect(),
                ..base(var, "in")
            },
            Body::Binary { left, op, right } => ConstraintDescriptor {
                other: Some(right.clone()),
                ..base(left, op.symbol())
            },
            Body::Table { .. } => return None,
        })
    }

    /// Resolves the descriptor against the problem's variables.
    pub fn to_body(&self, variables: &[Variable], scales: &IndexMap<String, u32>) -> Result<Body, CatalogError> {
        let id = self.id.clone().unwrap_or_else(|| "?".into());
        let bad = |message: String| CatalogError::BadDescriptor {
            id: id.clone(),
            message,
        };
        let var = variables
            .iter()
            .find(|v| v.name() == self.attr)
            .ok_or_else(|| CatalogError::UnknownAttribute(self.attr.clone()))?;
        let parse = |text: &ValueText| -> Result<AttributeValue, CatalogError> {
            match var.kind() {
                ValueKind::Categorical => Ok(AttributeValue::cat(text.0.trim())),
                ValueKind::Numeric => {
                    let d: Decimal = text
                        .0
                        .parse()
                        .map_err(|_| bad(format!("{:?} is not a decimal number", text.0)))?;
                    let scale = scales.get(&self.attr).copied().unwrap_or(d.scale());
                    let d = d.rescale(scale).ok_or_else(|| CatalogError::Precision {
                        attr: self.attr.clone(),
                        value: text.0.clone(),
                        scale,
                    })?;
                    Ok(AttributeValue::Numeric(d))
                }
            }
        };
        if self.op.trim() == "in" {
            if self.values.is_empty() {
                return Err(bad("\"in\" needs a non-empty \"values\" list".into()));
            }
            let values = self.values.iter().map(parse).collect::<Result<Vec<_>, _>>()?;
            return Ok(Body::membership(&self.attr, values));
        }
        let op = CompareOp::parse(&self.op).ok_or_else(|| bad(format!("unknown operator {:?}", self.op)))?;
        match (&self.value, &self.other) {
            (Some(value), None) => Ok(Body::unary(&self.attr, op, parse(value)?)),
            (None, Some(other)) => {
                if !variables.iter().any(|v| v.name() == other) {
                    return Err(CatalogError::UnknownAttribute(other.clone()));
                }
                Ok(Body::binary(&self.attr, op, other))
            }
            (Some(_), Some(_)) => Err(bad("give either \"value\" or \"other\", not both".into())),
            (None, None) => Err(bad("missing \"value\"".into())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    TwoPoint,
    Operator,
    Membership,
    Rigid,
}

/// One state of an explicit space: `"TOP"`, `"BOTTOM"` or a constraint descriptor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateDescriptor {
    Marker(String),
    Constraint(ConstraintDescriptor),
}

/// How to relax one foreground constraint. Give exactly one of `direction`
/// (threshold chain over catalog values), `kind`, or `states` + `edges`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<SpaceKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<StateDescriptor>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original: Option<usize>,
}

/// A problem file:
/// `{"catalog", "background", "foreground", "preferences", "counterfactual", "spaces"}`.
///
/// `variables` may replace `catalog` for problems given by explicit domains,
/// and `attributes` adds labels, units and default directions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<CatalogSource>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub variables: IndexMap<String, Vec<ValueText>>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub attributes: IndexMap<String, AttributeMeta>,
    #[serde(default)]
    pub background: Vec<ConstraintDescriptor>,
    #[serde(default)]
    pub foreground: Vec<ConstraintDescriptor>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub preferences: IndexMap<String, Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterfactual: Option<ConstraintDescriptor>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub spaces: IndexMap<String, SpaceDescriptor>,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<ProblemSpec, CatalogError> {
        serde_json::from_str(text).map_err(json_error)
    }
}

/// Reads a problem file and the catalog it points to.
/// Relative catalog paths resolve against the problem file's directory.
pub fn load_problem_file(path: &Path) -> Result<(ProblemSpec, Option<Catalog>), CatalogError> {
    let text = fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let spec = ProblemSpec::from_json(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let catalog = resolve_catalog(&spec, base)?;
    Ok((spec, catalog))
}

pub fn resolve_catalog(spec: &ProblemSpec, base_dir: &Path) -> Result<Option<Catalog>, CatalogError> {
    match &spec.catalog {
        None => Ok(None),
        Some(CatalogSource::Inline(doc)) => doc.clone().into_catalog().map(Some),
        Some(CatalogSource::Path(p)) => {
            let path = base_dir.join(p);
            let file = fs::File::open(&path).map_err(|source| CatalogError::Io {
                path: path.clone(),
                source,
            })?;
            load_catalog(file, CatalogFormat::from_path(&path)).map(Some)
        }
    }
}

/// A problem ready for the explanation engine.
#[derive(Clone, Debug)]
pub struct Assembled {
    pub problem: Problem,
    pub spaces: Spaces,
}

impl Assembled {
    /// Canonical JSON dump of variables, constraints and spaces.
    pub fn to_json(&self) -> serde_json::Value {
        let constraints = |list: &[Constraint]| -> Vec<serde_json::Value> {
            list.iter()
                .map(|c| serde_json::json!({"id": c.id, "constraint": c.body.to_string()}))
                .collect()
        };
        serde_json::json!({
            "variables": self.problem.variables().iter().map(|v| serde_json::json!({
                "name": v.name(),
                "type": v.kind(),
                "domain": v.domain().iter().map(ToString::to_string).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "background": constraints(self.problem.background()),
            "foreground": constraints(self.problem.foreground()),
            "spaces": self.problem.foreground().iter().map(|c| {
                let s = &self.spaces[&c.id];
                serde_json::json!({
                    "id": c.id,
                    "states": s.states().iter().map(ToString::to_string).collect::<Vec<_>>(),
                    "edges": s.edges(),
                    "original": s.original_index(),
                })
            }).collect::<Vec<_>>(),
        })
    }
}

/// Builds the problem and every foreground relaxation space, validating
/// explicitly given spaces.
pub fn assemble_problem(spec: &ProblemSpec, catalog: Option<&Catalog>) -> Result<Assembled, CatalogError> {
    assemble(spec, catalog, true)
}

/// Like [`assemble_problem`] but leaves explicit spaces unchecked so that
/// their violations can be reported with [`validate_space`].
pub fn assemble_problem_unvalidated(spec: &ProblemSpec, catalog: Option<&Catalog>) -> Result<Assembled, CatalogError> {
    assemble(spec, catalog, false)
}

fn assemble(spec: &ProblemSpec, catalog: Option<&Catalog>, validate: bool) -> Result<Assembled, CatalogError> {
    let mut attributes: Vec<Attribute> = Vec::new();
    let mut variables: Vec<Variable> = Vec::new();
    let mut background: Vec<Constraint> = Vec::new();

    if let Some(catalog) = catalog {
        for a in &catalog.schema {
            let domain = catalog.column_values(&a.name).expect("schema attribute");
            variables.push(Variable::new(&a.name, domain)?);
            attributes.push(a.clone());
        }
        background.push(Constraint::background(
            CATALOG_CONSTRAINT_ID,
            Body::Table {
                vars: catalog.schema.iter().map(|a| a.name.clone()).collect(),
                rows: catalog.rows.clone(),
            },
        ));
    } else if !spec.variables.is_empty() {
        for (name, raw) in &spec.variables {
            let numeric: Option<Vec<Decimal>> = raw.iter().map(|v| v.0.parse().ok()).collect();
            let (kind, scale, domain) = match numeric {
                Some(ds) => {
                    let scale = ds.iter().map(Decimal::scale).max().unwrap_or(0);
                    let domain: Vec<AttributeValue> = ds
                        .into_iter()
                        .map(|d| AttributeValue::Numeric(d.rescale(scale).expect("widening")))
                        .collect();
                    (ValueKind::Numeric, scale, domain)
                }
                None => (
                    ValueKind::Categorical,
                    0,
                    raw.iter().map(|v| AttributeValue::cat(v.0.trim())).collect(),
                ),
            };
            variables.push(Variable::new(name, domain)?);
            attributes.push(Attribute {
                name: name.clone(),
                kind,
                scale,
                meta: AttributeMeta::default(),
            });
        }
    } else {
        return Err(CatalogError::NoVariables);
    }

    for (name, meta) in &spec.attributes {
        let attr = attributes
            .iter_mut()
            .find(|a| &a.name == name)
            .ok_or_else(|| CatalogError::UnknownAttribute(name.clone()))?;
        if meta.direction.is_some() && attr.kind == ValueKind::Categorical {
            return Err(CatalogError::DirectionOnCategorical(name.clone()));
        }
        attr.meta.label = meta.label.clone().or(attr.meta.label.take());
        attr.meta.unit = meta.unit.clone().or(attr.meta.unit.take());
        attr.meta.direction = meta.direction.or(attr.meta.direction);
    }
    for (name, _) in &spec.preferences {
        let attr = attributes
            .iter()
            .find(|a| &a.name == name)
            .ok_or_else(|| CatalogError::UnknownAttribute(name.clone()))?;
        if attr.kind == ValueKind::Categorical {
            return Err(CatalogError::DirectionOnCategorical(name.clone()));
        }
    }
    let variables: Vec<Variable> = variables
        .into_iter()
        .zip(&attributes)
        .map(|(v, a)| v.with_label(a.meta.label.clone(), a.meta.unit.clone()))
        .collect();
    let scales: IndexMap<String, u32> = attributes
        .iter()
        .filter(|a| a.kind == ValueKind::Numeric)
        .map(|a| (a.name.clone(), a.scale))
        .collect();

    let resolve = |d: &ConstraintDescriptor, default_id: String| -> Result<(String, Body), CatalogError> {
        let id = d.id.clone().unwrap_or(default_id);
        let with_id = ConstraintDescriptor {
            id: Some(id.clone()),
            ..d.clone()
        };
        Ok((id, with_id.to_body(&variables, &scales)?))
    };
    for (i, d) in spec.background.iter().enumerate() {
        let (id, body) = resolve(d, format!("b{}", i + 1))?;
        background.push(Constraint::background(id, body));
    }
    if let Some(cf) = &spec.counterfactual {
        let (id, body) = resolve(cf, "counterfactual".into())?;
        if spec.spaces.contains_key(&id) {
            return Err(CatalogError::BadSpace {
                id,
                message: "the counterfactual constraint is background and cannot be relaxed".into(),
            });
        }
        background.push(Constraint::background(id, body));
    }
    let mut foreground = Vec::with_capacity(spec.foreground.len());
    for (i, d) in spec.foreground.iter().enumerate() {
        let (id, body) = resolve(d, format!("c{}", i + 1))?;
        foreground.push(Constraint::foreground(id, body));
    }
    if let Some(stray) = spec.spaces.keys().find(|k| !foreground.iter().any(|c| &c.id == *k)) {
        return Err(CatalogError::BadSpace {
            id: stray.clone(),
            message: "no foreground constraint has this id".into(),
        });
    }

    let problem = Problem::new(variables, background, foreground)?;
    let mut spaces = Spaces::new();
    for c in problem.foreground() {
        let space = match spec.spaces.get(&c.id) {
            Some(desc) => {
                let space = explicit_space(desc, c, &problem, &scales, &attributes, spec)?;
                if validate {
                    let violations = validate_space(&space, &problem);
                    if !violations.is_empty() {
                        return Err(CatalogError::InvalidSpace {
                            id: c.id.clone(),
                            violations,
                        });
                    }
                }
                space
            }
            None => default_space(c, &problem, &attributes, spec)?,
        };
        spaces.insert(c.id.clone(), space);
    }
    Ok(Assembled { problem, spaces })
}

fn direction_for(attr: &str, attributes: &[Attribute], spec: &ProblemSpec) -> Direction {
    spec.preferences
        .get(attr)
        .copied()
        .or_else(|| {
            attributes
                .iter()
                .find(|a| a.name == attr)
                .and_then(|a| a.meta.direction)
        })
        .unwrap_or(Direction::Mib)
}

fn domain_of(problem: &Problem, var: &str) -> Vec<AttributeValue> {
    let mut values = problem.variable(var).expect("validated").domain().to_vec();
    values.sort();
    values
}

fn default_space(
    c: &Constraint,
    problem: &Problem,
    attributes: &[Attribute],
    spec: &ProblemSpec,
) -> Result<RelaxationSpace, CatalogError> {
    Ok(match &c.body {
        Body::Unary { var, op, value } if value.kind() == ValueKind::Numeric && op.is_ordering() => {
            build_chain_space(c, &domain_of(problem, var), direction_for(var, attributes, spec))?
        }
        Body::Unary {
            var,
            op: CompareOp::Eq,
            value: AttributeValue::Categorical(_),
        } => build_membership_space(c, &domain_of(problem, var))?,
        Body::Membership { var, values } if values[0].kind() == ValueKind::Categorical => {
            build_membership_space(c, &domain_of(problem, var))?
        }
        Body::Unary { .. } | Body::Binary { .. } => build_operator_space(c)?,
        _ => RelaxationSpace::two_point(c),
    })
}

fn explicit_space(
    desc: &SpaceDescriptor,
    c: &Constraint,
    problem: &Problem,
    scales: &IndexMap<String, u32>,
    attributes: &[Attribute],
    spec: &ProblemSpec,
) -> Result<RelaxationSpace, CatalogError> {
    let bad = |message: &str| CatalogError::BadSpace {
        id: c.id.clone(),
        message: message.to_string(),
    };
    let given = [desc.direction.is_some(), desc.kind.is_some(), desc.states.is_some()]
        .iter()
        .filter(|b| **b)
        .count();
    if given != 1 {
        return Err(bad("give exactly one of \"direction\", \"kind\" or \"states\""));
    }
    if let Some(direction) = desc.direction {
        let Body::Unary { var, .. } = &c.body else {
            return Err(bad("a direction needs a unary numeric constraint"));
        };
        if problem.variable(var).map(|v| v.kind()) == Some(ValueKind::Categorical) {
            return Err(CatalogError::DirectionOnCategorical(var.clone()));
        }
        return Ok(build_chain_space(c, &domain_of(problem, var), direction)?);
    }
    if let Some(kind) = desc.kind {
        return Ok(match kind {
            SpaceKind::TwoPoint => RelaxationSpace::two_point(c),
            SpaceKind::Rigid => RelaxationSpace::rigid(c),
            SpaceKind::Operator => build_operator_space(c)?,
            SpaceKind::Membership => match &c.body {
                Body::Unary { var, .. } | Body::Membership { var, .. } => {
                    build_membership_space(c, &domain_of(problem, var))?
                }
                _ => return Err(bad("membership spaces need a unary constraint")),
            },
        });
    }
    let _ = (attributes, spec);
    let raw = desc.states.as_ref().expect("counted above");
    let mut states = Vec::with_capacity(raw.len());
    for s in raw {
        states.push(match s {
            StateDescriptor::Marker(m) if m.eq_ignore_ascii_case("top") => RelaxationState::Top,
            StateDescriptor::Marker(m) if m.eq_ignore_ascii_case("bottom") => RelaxationState::Bottom,
            StateDescriptor::Marker(m) => return Err(bad(&format!("unknown state marker {m:?}"))),
            StateDescriptor::Constraint(d) => {
                let d = ConstraintDescriptor {
                    id: Some(c.id.clone()),
                    ..d.clone()
                };
                RelaxationState::Concrete(d.to_body(problem.variables(), scales)?)
            }
        });
    }
    let original = match desc.original {
        Some(i) => i,
        None => states
            .iter()
            .position(|s| s.body() == Some(&c.body))
            .ok_or_else(|| bad("no state equals the constraint itself"))?,
    };
    let edges = desc.edges.iter().map(|e| (e[0], e[1])).collect();
    Ok(RelaxationSpace::new(c.id.clone(), states, edges, original))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAPTOPS: &str = "brand:cat,size:num,memory:num,life:num,price:num
Lenovo,15.4,1024.0,2.2,1499.99
Sony,11.1,1024.0,11.0,2349.99
Lenovo,15.0,512.0,10.0,2616.99
HP,15.0,512.0,4.5,785.99
Lenovo,14.0,512.0,4.5,1899
";

    #[test]
    fn csv_catalog_is_exact() {
        let cat = load_catalog(LAPTOPS.as_bytes(), CatalogFormat::Csv).unwrap();
        assert_eq!(cat.rows().len(), 5);
        assert_eq!(cat.schema().len(), 5);
        let price = cat.attribute("price").unwrap();
        assert_eq!(price.scale, 2);
        let first = cat.rows()[0][4].as_decimal().unwrap();
        assert_eq!((first.mantissa(), first.scale()), (149999, 2));
        assert_eq!(cat.rows()[4][4].to_string(), "1899.00");
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(
            load_catalog("a:num\n".as_bytes(), CatalogFormat::Csv),
            Err(CatalogError::NoRows)
        ));
        assert!(matches!(
            load_catalog("a:num,b:cat\n1,x\n2\n".as_bytes(), CatalogFormat::Csv),
            Err(CatalogError::RaggedRow {
                line: 3,
                expected: 2,
                found: 1
            })
        ));
        match load_catalog("a:num,b:cat\n1,x\nfoo,y\n".as_bytes(), CatalogFormat::Csv) {
            Err(CatalogError::Parse { line, column, .. }) => assert_eq!((line, column), (3, 1)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(load_catalog("a\n1\n".as_bytes(), CatalogFormat::Csv).is_err());
        assert!(matches!(
            load_catalog("a:cat:MIB\nx\n".as_bytes(), CatalogFormat::Csv),
            Err(CatalogError::DirectionOnCategorical(_))
        ));
    }

    #[test]
    fn json_catalog() {
        let doc = r#"{"attributes": [{"name": "life", "type": "num", "label": "battery life", "unit": "hr"}],
                      "rows": [["2.2"], [10]]}"#;
        let cat = load_catalog(doc.as_bytes(), CatalogFormat::Json).unwrap();
        assert_eq!(cat.attribute("life").unwrap().meta.unit.as_deref(), Some("hr"));
        assert_eq!(cat.rows()[1][0].to_string(), "10.0");
        assert!(matches!(
            load_catalog(r#"{"attributes": [], "rows": []}"#.as_bytes(), CatalogFormat::Json),
            Err(CatalogError::NoAttributes)
        ));
        match load_catalog("{\n  \"attributes\": ,".as_bytes(), CatalogFormat::Json) {
            Err(CatalogError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn descriptor_round_trip_through_body() {
        let cat = load_catalog(LAPTOPS.as_bytes(), CatalogFormat::Csv).unwrap();
        let spec = ProblemSpec {
            foreground: vec![ConstraintDescriptor::unary("c4", "life", ">=", "10")],
            ..ProblemSpec::default()
        };
        let a = assemble_problem(&spec, Some(&cat)).unwrap();
        let body = &a.problem.foreground()[0].body;
        assert_eq!(body.to_string(), "life>=10.0");
        let d = ConstraintDescriptor::from_body(Some("c4".into()), body).unwrap();
        assert_eq!(d.value.as_ref().unwrap().0, "10.0");
    }

    #[test]
    fn assembly_errors() {
        let cat = load_catalog(LAPTOPS.as_bytes(), CatalogFormat::Csv).unwrap();
        let unknown = ProblemSpec {
            foreground: vec![ConstraintDescriptor::unary("c1", "colour", "=", "red")],
            ..ProblemSpec::default()
        };
        assert!(matches!(
            assemble_problem(&unknown, Some(&cat)),
            Err(CatalogError::UnknownAttribute(_))
        ));

        let cat_direction = ProblemSpec {
            preferences: [("brand".to_string(), Direction::Mib)].into_iter().collect(),
            ..ProblemSpec::default()
        };
        assert!(matches!(
            assemble_problem(&cat_direction, Some(&cat)),
            Err(CatalogError::DirectionOnCategorical(_))
        ));

        let too_precise = ProblemSpec {
            foreground: vec![ConstraintDescriptor::unary("c1", "price", "<=", "1999.999")],
            ..ProblemSpec::default()
        };
        assert!(matches!(
            assemble_problem(&too_precise, Some(&cat)),
            Err(CatalogError::Precision { .. })
        ));

        assert!(matches!(
            assemble_problem(&ProblemSpec::default(), None),
            Err(CatalogError::NoVariables)
        ));

        let inverted = ProblemSpec {
            foreground: vec![ConstraintDescriptor::unary("c2", "size", ">=", "15.0")],
            spaces: [(
                "c2".to_string(),
                SpaceDescriptor {
                    states: Some(vec![
                        StateDescriptor::Marker("TOP".into()),
                        StateDescriptor::Constraint(ConstraintDescriptor::unary("s", "size", ">=", "15.0")),
                        StateDescriptor::Constraint(ConstraintDescriptor::unary("s", "size", ">=", "14.0")),
                        StateDescriptor::Marker("BOTTOM".into()),
                    ]),
                    edges: vec![[0, 1], [1, 2], [2, 3]],
                    ..SpaceDescriptor::default()
                },
            )]
            .into_iter()
            .collect(),
            ..ProblemSpec::default()
        };
        assert!(matches!(
            assemble_problem(&inverted, Some(&cat)),
            Err(CatalogError::InvalidSpace { .. })
        ));
        assert!(assemble_problem_unvalidated(&inverted, Some(&cat)).is_ok());
    }

    #[test]
    fn explicit_variables_form() {
        let spec = ProblemSpec::from_json(
            r#"{"variables": {"x1": ["1", "2", "3"], "x2": [3, 4]},
                "foreground": [{"id": "c", "attr": "x1", "op": ">", "other": "x2"}]}"#,
        )
        .unwrap();
        let a = assemble_problem(&spec, None).unwrap();
        assert_eq!(a.problem.variables().len(), 2);
        let space = &a.spaces["c"];
        assert_eq!(space.states()[1].to_string(), "x1>=x2");
    }
}
