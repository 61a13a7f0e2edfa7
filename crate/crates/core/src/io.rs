//! JSON input files.
//!
//! * matrix (form or operator): `{"n": 2, "matrix": [[1, 0], [0, 1]]}`, or
//!   just the list of rows;
//! * scalar field: `{"nvars": 2, "expr": "x1^2 + x2^2"}`;
//! * vector field: `{"nvars": 2, "components": ["x2", "-x1"]}`;
//! * vectors: `[[1, 0], [0, 1]]` or `{"vectors": [[1, 0], [0, 1]]}`.
//!
//! Every error names the source and the offending field.

use std::path::Path;

use serde_json::Value;

use crate::adjoints::LinearOperator;
use crate::error::{Error, Result};
use crate::fields::{ScalarField, VectorField};
use crate::forms::BilinearForm;
use crate::numerics::{self, Matrix, Vector};

fn input_error(source: &str, field: &str, message: impl Into<String>) -> Error {
    Error::Input { origin: source.to_string(), field: field.to_string(), message: message.into() }
}

fn read_json(path: &Path) -> Result<Value> {
    let source = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| input_error(&source, "file", e.to_string()))?;
    parse_json(&text, &source)
}

fn parse_json(text: &str, source: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| input_error(source, "json", e.to_string()))
}

fn number(v: &Value, source: &str, field: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| input_error(source, field, format!("expected a finite number, found {v}")))
}

fn row(v: &Value, source: &str, field: &str) -> Result<Vec<f64>> {
    let items = v.as_array().ok_or_else(|| input_error(source, field, "expected a list of numbers"))?;
    items.iter().enumerate().map(|(j, x)| number(x, source, &format!("{field}[{j}]"))).collect()
}

fn count(v: &Value, source: &str, field: &str) -> Result<usize> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| input_error(source, field, format!("expected a non-negative integer, found {v}")))
}

/// Square matrix from a parsed document.
pub fn matrix_from_value(doc: &Value, source: &str) -> Result<Matrix> {
    let (rows, declared, field) = match doc {
        Value::Array(_) => (doc, None, "matrix"),
        Value::Object(map) => {
            let rows = map.get("matrix").ok_or_else(|| input_error(source, "matrix", "missing"))?;
            let n = map.get("n").map(|v| count(v, source, "n")).transpose()?;
            (rows, n, "matrix")
        }
        _ => return Err(input_error(source, "matrix", "expected an object or a list of rows")),
    };
    let rows = rows.as_array().ok_or_else(|| input_error(source, field, "expected a list of rows"))?;
    let n = rows.len();
    if n == 0 {
        return Err(input_error(source, field, "matrix is empty"));
    }
    if let Some(d) = declared {
        if d != n {
            return Err(input_error(source, "n", format!("n = {d} but the matrix has {n} rows")));
        }
    }
    let mut data = Vec::with_capacity(n * n);
    for (i, r) in rows.iter().enumerate() {
        let name = format!("{field}[{i}]");
        let values = row(r, source, &name)?;
        if values.len() != n {
            return Err(input_error(source, &name, format!("row has {} entries, expected {n}", values.len())));
        }
        data.extend(values);
    }
    Ok(Matrix::from_row_slice(n, n, &data))
}

pub fn parse_matrix(text: &str, source: &str) -> Result<Matrix> {
    matrix_from_value(&parse_json(text, source)?, source)
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    matrix_from_value(&read_json(path)?, &path.display().to_string())
}

/// Reads a form and certifies it non-degenerate.
pub fn read_form(path: &Path) -> Result<BilinearForm> {
    let m = read_matrix(path)?;
    BilinearForm::from_matrix(m, numerics::tol::NON_DEGENERATE)
        .map_err(|e| input_error(&path.display().to_string(), "matrix", e.to_string()))
}

pub fn read_operator(path: &Path) -> Result<LinearOperator> {
    LinearOperator::new(read_matrix(path)?)
}

fn field_object<'a>(doc: &'a Value, source: &str) -> Result<&'a serde_json::Map<String, Value>> {
    doc.as_object().ok_or_else(|| input_error(source, "json", "expected an object"))
}

fn nvars_of(map: &serde_json::Map<String, Value>, source: &str) -> Result<usize> {
    count(map.get("nvars").ok_or_else(|| input_error(source, "nvars", "missing"))?, source, "nvars")
}

fn expression(v: &Value, nvars: usize, source: &str, field: &str) -> Result<ScalarField> {
    let text = v.as_str().ok_or_else(|| input_error(source, field, "expected a string"))?;
    ScalarField::parse(text, nvars).map_err(|e| input_error(source, field, e.to_string()))
}

pub fn scalar_field_from_value(doc: &Value, source: &str) -> Result<ScalarField> {
    let map = field_object(doc, source)?;
    let nvars = nvars_of(map, source)?;
    let e = map.get("expr").ok_or_else(|| input_error(source, "expr", "missing"))?;
    expression(e, nvars, source, "expr")
}

pub fn vector_field_from_value(doc: &Value, source: &str) -> Result<VectorField> {
    let map = field_object(doc, source)?;
    let nvars = nvars_of(map, source)?;
    let comps = map
        .get("components")
        .ok_or_else(|| input_error(source, "components", "missing"))?
        .as_array()
        .ok_or_else(|| input_error(source, "components", "expected a list of strings"))?;
    if comps.is_empty() {
        return Err(input_error(source, "components", "no components"));
    }
    let fields = comps
        .iter()
        .enumerate()
        .map(|(i, c)| expression(c, nvars, source, &format!("components[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_components(fields)
}

pub fn read_scalar_field(path: &Path) -> Result<ScalarField> {
    scalar_field_from_value(&read_json(path)?, &path.display().to_string())
}

pub fn read_vector_field(path: &Path) -> Result<VectorField> {
    vector_field_from_value(&read_json(path)?, &path.display().to_string())
}

pub fn vectors_from_value(doc: &Value, source: &str) -> Result<Vec<Vector>> {
    let list = match doc {
        Value::Object(map) => map.get("vectors").ok_or_else(|| input_error(source, "vectors", "missing"))?,
        _ => doc,
    };
    let items = list.as_array().ok_or_else(|| input_error(source, "vectors", "expected a list of vectors"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, v)| row(v, source, &format!("vectors[{i}]")).map(Vector::from_vec))
        .collect()
}

pub fn read_vectors(path: &Path) -> Result<Vec<Vector>> {
    vectors_from_value(&read_json(path)?, &path.display().to_string())
}

/// Rows of a matrix as nested JSON lists.
pub fn matrix_to_value(m: &Matrix) -> Value {
    Value::from((0..m.nrows()).map(|i| m.row(i).iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>())
}

pub fn vector_to_value(v: &Vector) -> Value {
    Value::from(v.iter().copied().collect::<Vec<f64>>())
}
