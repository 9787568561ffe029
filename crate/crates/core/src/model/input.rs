//! JSON model files: `{"Q": [[…]], "B": [[…]]}` with entries given as JSON
//! numbers or exact `"p/q"` strings.

use serde_json::Value;

use super::OUModel;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{integral_f64_to_rational, parse_rational, rational_to_f64, Rational};

/// One matrix entry as written in the input.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelEntry {
    Exact(Rational),
    Float(f64),
}

impl ModelEntry {
    pub fn to_f64(&self) -> f64 {
        match self {
            ModelEntry::Exact(r) => rational_to_f64(r),
            ModelEntry::Float(v) => *v,
        }
    }

    fn exact(&self) -> Option<&Rational> {
        match self {
            ModelEntry::Exact(r) => Some(r),
            ModelEntry::Float(_) => None,
        }
    }
}

fn parse_entry(v: &Value, location: &str) -> Result<ModelEntry> {
    match v {
        Value::Number(n) => {
            let f = n
                .as_f64()
                .ok_or_else(|| Error::schema(location, "number out of range"))?;
            Ok(match integral_f64_to_rational(f) {
                Some(r) if n.is_i64() || n.is_u64() => ModelEntry::Exact(r),
                _ => ModelEntry::Float(f),
            })
        }
        Value::String(s) => parse_rational(s)
            .map(ModelEntry::Exact)
            .map_err(|_| Error::schema(location, format!("{s:?} is not a rational \"p/q\""))),
        other => Err(Error::schema(
            location,
            format!("expected a number or \"p/q\" string, found {other}"),
        )),
    }
}

fn parse_matrix(root: &Value, key: &str) -> Result<Vec<Vec<ModelEntry>>> {
    let rows = root
        .get(key)
        .ok_or_else(|| Error::schema(key, "missing field"))?
        .as_array()
        .ok_or_else(|| Error::schema(key, "expected an array of rows"))?;
    if rows.is_empty() {
        return Err(Error::schema(key, "matrix is empty"));
    }
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let loc = format!("{key}[{i}]");
        let row = row
            .as_array()
            .ok_or_else(|| Error::schema(&loc, "expected an array"))?;
        if row.len() != rows.len() {
            return Err(Error::schema(
                &loc,
                format!("matrix must be square: row has {} entries, expected {}", row.len(), rows.len()),
            ));
        }
        out.push(
            row.iter()
                .enumerate()
                .map(|(j, v)| parse_entry(v, &format!("{key}[{i}][{j}]")))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(out)
}

/// Parses and validates a model from JSON text.
///
/// Syntax errors carry the line and column reported by the JSON parser;
/// structural errors carry the field path, e.g. `B[1][0]`.
pub fn parse_model_json(text: &str) -> Result<OUModel> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        Error::schema(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    if !root.is_object() {
        return Err(Error::schema("$", "expected an object with fields \"Q\" and \"B\""));
    }
    let q = parse_matrix(&root, "Q")?;
    let b = parse_matrix(&root, "B")?;
    if q.len() != b.len() {
        return Err(Error::schema(
            "B",
            format!("B is {}x{} but Q is {}x{}", b.len(), b.len(), q.len(), q.len()),
        ));
    }
    model_from_entries(q, b)
}

/// Builds a model keeping exact data only when every entry is exact.
pub fn model_from_entries(q: Vec<Vec<ModelEntry>>, b: Vec<Vec<ModelEntry>>) -> Result<OUModel> {
    let all_exact = q.iter().chain(&b).flatten().all(|e| e.exact().is_some());
    if all_exact {
        let to = |m: &[Vec<ModelEntry>]| {
            Matrix::from_rows(
                m.iter()
                    .map(|r| r.iter().map(|e| e.exact().cloned().unwrap()).collect())
                    .collect(),
            )
        };
        OUModel::from_exact(to(&q)?, to(&b)?)
    } else {
        let to = |m: &[Vec<ModelEntry>]| {
            Matrix::from_rows(m.iter().map(|r| r.iter().map(ModelEntry::to_f64).collect()).collect())
        };
        OUModel::from_f64(to(&q)?, to(&b)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Backend;

    #[test]
    fn parses_rotating_model_exactly() {
        let m = parse_model_json(r#"{"Q": [[1,0],[0,1]], "B": [["-1","1"],["-1","-1"]]}"#).unwrap();
        assert_eq!(m.backend(), Backend::ExactRational);
        assert_eq!(m.b()[(0, 1)], 1.0);
    }

    #[test]
    fn one_dimensional() {
        let m = parse_model_json(r#"{"Q": [[1]], "B": [["-1"]]}"#).unwrap();
        assert_eq!(m.dim(), 1);
    }

    #[test]
    fn decimals_fall_back_to_float() {
        let m = parse_model_json(r#"{"Q": [[1]], "B": [[-0.5]]}"#).unwrap();
        assert_eq!(m.backend(), Backend::Float64);
        let m = parse_model_json(r#"{"Q": [[1]], "B": [["-1/2"]]}"#).unwrap();
        assert_eq!(m.backend(), Backend::ExactRational);
    }

    #[test]
    fn missing_b_is_a_schema_error() {
        let err = parse_model_json(r#"{"Q": [[1]]}"#).unwrap_err();
        assert_eq!(
            err,
            Error::Schema {
                location: "B".into(),
                message: "missing field".into()
            }
        );
    }

    #[test]
    fn bad_entries_name_their_location() {
        let err = parse_model_json(r#"{"Q": [[1,0],[0,1]], "B": [[-1,0],[true,-1]]}"#).unwrap_err();
        assert!(matches!(err, Error::Schema { ref location, .. } if location == "B[1][0]"));
        let err = parse_model_json(r#"{"Q": [[1,0],[0]], "B": [[-1,0],[0,-1]]}"#).unwrap_err();
        assert!(matches!(err, Error::Schema { ref location, .. } if location == "Q[1]"));
        let err = parse_model_json("{\"Q\": [[1]],\n \"B\": [[-1]").unwrap_err();
        assert!(matches!(err, Error::Schema { ref location, .. } if location.starts_with("line 2")));
    }
}
