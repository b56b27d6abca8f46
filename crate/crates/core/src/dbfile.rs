//! Database files.
//!
//! ```json
//! { "R": { "schema": ["A", "B"], "rows": [[1, null], [2, "x"]] } }
//! ```
//!
//! A cell is an integer, a string or `null`. A schema file maps table names
//! either to attribute lists or to objects with a `schema` field.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::ast::{Name, NameError, Schema};
use crate::eval::{Database, DbError};
use crate::kbag::{BaseConst, Relation, Tuple, Value};

#[derive(Debug, Error)]
pub enum DbFileError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Name(#[from] NameError),
    #[error(transparent)]
    Db(#[from] DbError),
}

fn shape(msg: impl Into<String>) -> DbFileError {
    DbFileError::Shape(msg.into())
}

fn schema_of(table: &str, v: &Json) -> Result<Schema, DbFileError> {
    let attrs = v
        .as_array()
        .ok_or_else(|| shape(format!("table `{table}`: schema must be a list of names")))?;
    let names = attrs
        .iter()
        .map(|a| {
            a.as_str()
                .ok_or_else(|| shape(format!("table `{table}`: attribute names must be strings")))
                .and_then(|s| Ok(Name::new(s)?))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let schema = Schema::new(names);
    if schema.has_duplicates() {
        return Err(shape(format!("table `{table}`: schema {schema} repeats a name")));
    }
    Ok(schema)
}

fn cell(table: &str, v: &Json) -> Result<Value, DbFileError> {
    match v {
        Json::Null => Ok(Value::Null),
        Json::String(s) => Ok(Value::str(s.as_str())),
        Json::Number(n) => n
            .as_i64()
            .map(Value::int)
            .ok_or_else(|| shape(format!("table `{table}`: {n} is not a 64-bit integer"))),
        other => Err(shape(format!("table `{table}`: unsupported cell {other}"))),
    }
}

pub fn parse_database(text: &str) -> Result<Database, DbFileError> {
    let doc: Json = serde_json::from_str(text)?;
    let tables = doc
        .as_object()
        .ok_or_else(|| shape("a database must be an object of tables"))?;
    let mut db = Database::new();
    for (table, body) in tables {
        let schema = schema_of(
            table,
            body.get("schema")
                .ok_or_else(|| shape(format!("table `{table}` has no schema")))?,
        )?;
        let rows = match body.get("rows") {
            None => Vec::new(),
            Some(rows) => rows
                .as_array()
                .ok_or_else(|| shape(format!("table `{table}`: rows must be a list")))?
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    let cells = row
                        .as_array()
                        .ok_or_else(|| shape(format!("table `{table}`: row {i} is not a list")))?;
                    if cells.len() != schema.len() {
                        return Err(shape(format!(
                            "table `{table}`: row {i} has {} cell(s), schema has {}",
                            cells.len(),
                            schema.len()
                        )));
                    }
                    cells.iter().map(|c| cell(table, c)).collect::<Result<Tuple, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        let rel = Relation::from_rows(schema.len(), rows).expect("row lengths checked");
        db.insert(Name::new(table)?, schema, rel)?;
    }
    Ok(db)
}

pub fn parse_schemas(text: &str) -> Result<BTreeMap<Name, Schema>, DbFileError> {
    let doc: Json = serde_json::from_str(text)?;
    let tables = doc
        .as_object()
        .ok_or_else(|| shape("a schema file must be an object of tables"))?;
    tables
        .iter()
        .map(|(table, v)| {
            let s = match v.get("schema") {
                Some(s) => schema_of(table, s)?,
                None => schema_of(table, v)?,
            };
            Ok((Name::new(table)?, s))
        })
        .collect()
}

fn value_json(v: &Value) -> Json {
    match v {
        Value::Null => Json::Null,
        Value::Const(BaseConst::Int(i)) => json!(i),
        Value::Const(BaseConst::Str(s)) => json!(s),
    }
}

pub fn database_json(db: &Database) -> Json {
    let mut out = Map::new();
    for (n, s, r) in db.tables() {
        let rows: Vec<Json> = r
            .rows()
            .iter()
            .map(|t| Json::Array(t.iter().map(value_json).collect()))
            .collect();
        let schema: Vec<&str> = s.attrs().iter().map(Name::as_str).collect();
        out.insert(n.to_string(), json!({ "schema": schema, "rows": rows }));
    }
    Json::Object(out)
}

/// Canonical text form: tables by name, rows sorted.
pub fn write_database(db: &Database) -> String {
    serde_json::to_string_pretty(&database_json(db)).expect("JSON values always serialize")
}

/// Reads one table from CSV: a header line of attribute names, then rows.
///
/// An unquoted `NULL` cell is null, a quoted `"NULL"` is the string. Unquoted
/// cells that parse as integers are integers; everything else is a string.
pub fn parse_csv_table(text: &str) -> Result<(Schema, Relation), DbFileError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| shape("CSV input has no header"))?;
    let names = split_csv(header, 1)?
        .into_iter()
        .map(|(s, _)| Name::new(s.trim()).map_err(DbFileError::from))
        .collect::<Result<Vec<_>, _>>()?;
    let schema = Schema::new(names);
    if schema.has_duplicates() {
        return Err(shape(format!("CSV header {schema} repeats a name")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let cells = split_csv(line, i + 1)?;
        if cells.len() != schema.len() {
            return Err(shape(format!(
                "CSV line {}: {} cell(s), header has {}",
                i + 1,
                cells.len(),
                schema.len()
            )));
        }
        rows.push(
            cells
                .into_iter()
                .map(|(s, quoted)| {
                    if quoted {
                        Value::str(s)
                    } else {
                        let s = s.trim();
                        if s == "NULL" {
                            Value::Null
                        } else if let Ok(i) = s.parse::<i64>() {
                            Value::int(i)
                        } else {
                            Value::str(s)
                        }
                    }
                })
                .collect::<Tuple>(),
        );
    }
    let rel = Relation::from_rows(schema.len(), rows).expect("row lengths checked");
    Ok((schema, rel))
}

/// Splits one CSV line into `(text, was_quoted)` cells.
fn split_csv(line: &str, lineno: usize) -> Result<Vec<(String, bool)>, DbFileError> {
    let mut cells = Vec::new();
    let mut chars = line.chars().peekable();
    loop {
        while chars.peek() == Some(&' ') {
            chars.next();
        }
        let mut text = String::new();
        let quoted = chars.peek() == Some(&'"');
        if quoted {
            chars.next();
            loop {
                match chars.next() {
                    None => return Err(shape(format!("CSV line {lineno}: unterminated quote"))),
                    Some('"') if chars.peek() == Some(&'"') => {
                        chars.next();
                        text.push('"');
                    }
                    Some('"') => break,
                    Some(c) => text.push(c),
                }
            }
            while chars.peek() == Some(&' ') {
                chars.next();
            }
            if !matches!(chars.peek(), None | Some(',')) {
                return Err(shape(format!("CSV line {lineno}: text after closing quote")));
            }
        } else {
            while let Some(&c) = chars.peek() {
                if c == ',' {
                    break;
                }
                text.push(c);
                chars.next();
            }
        }
        cells.push((text, quoted));
        if chars.next().is_none() {
            return Ok(cells);
        }
    }
}
