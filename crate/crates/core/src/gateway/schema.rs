//! Minimal structural schema for provider replies.

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Schema {
    /// Reply is free text; no structure is required.
    Text,
    Any,
    String,
    NonEmptyString,
    Bool,
    Number {
        min: f64,
        max: f64,
    },
    Enum(Vec<&'static str>),
    Array {
        items: Box<Schema>,
        len: Option<usize>,
    },
    Object(Vec<Field>),
    OneOf(Vec<Schema>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: &'static str,
    pub schema: Schema,
    pub required: bool,
}

impl Field {
    pub fn required(name: &'static str, schema: Schema) -> Self {
        Field {
            name,
            schema,
            required: true,
        }
    }

    pub fn optional(name: &'static str, schema: Schema) -> Self {
        Field {
            name,
            schema,
            required: false,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("schema mismatch at {path}: {reason}")]
pub struct SchemaError {
    pub path: String,
    pub reason: String,
}

impl Schema {
    pub fn string() -> Schema {
        Schema::String
    }

    pub fn number(min: f64, max: f64) -> Schema {
        Schema::Number { min, max }
    }

    pub fn array(items: Schema) -> Schema {
        Schema::Array {
            items: Box::new(items),
            len: None,
        }
    }

    pub fn object(fields: Vec<Field>) -> Schema {
        Schema::Object(fields)
    }

    pub fn is_text(&self) -> bool {
        matches!(self, Schema::Text)
    }

    pub fn validate(&self, value: &Value) -> Result<(), SchemaError> {
        self.check(value, "$")
    }

    fn check(&self, v: &Value, path: &str) -> Result<(), SchemaError> {
        let fail = |reason: String| {
            Err(SchemaError {
                path: path.to_owned(),
                reason,
            })
        };
        match self {
            Schema::Text | Schema::Any => Ok(()),
            Schema::String => match v {
                Value::String(_) => Ok(()),
                _ => fail(format!("expected string, got {}", kind(v))),
            },
            Schema::NonEmptyString => match v {
                Value::String(s) if !s.trim().is_empty() => Ok(()),
                _ => fail("expected non-empty string".into()),
            },
            Schema::Bool => match v {
                Value::Bool(_) => Ok(()),
                _ => fail(format!("expected boolean, got {}", kind(v))),
            },
            Schema::Number { min, max } => match v.as_f64() {
                Some(n) if n >= *min && n <= *max => Ok(()),
                Some(n) => fail(format!("{n} outside [{min}, {max}]")),
                None => fail(format!("expected number, got {}", kind(v))),
            },
            Schema::Enum(allowed) => match v.as_str() {
                Some(s) if allowed.contains(&s) => Ok(()),
                _ => fail(format!("expected one of {allowed:?}")),
            },
            Schema::Array { items, len } => {
                let Some(arr) = v.as_array() else {
                    return fail(format!("expected array, got {}", kind(v)));
                };
                if let Some(n) = len {
                    if arr.len() != *n {
                        return fail(format!("expected {n} elements, got {}", arr.len()));
                    }
                }
                for (i, item) in arr.iter().enumerate() {
                    items.check(item, &format!("{path}[{i}]"))?;
                }
                Ok(())
            }
            Schema::Object(fields) => {
                let Some(obj) = v.as_object() else {
                    return fail(format!("expected object, got {}", kind(v)));
                };
                for f in fields {
                    let fp = format!("{path}.{}", f.name);
                    match obj.get(f.name) {
                        Some(fv) => f.schema.check(fv, &fp)?,
                        None if f.required => {
                            return Err(SchemaError {
                                path: fp,
                                reason: "missing required field".into(),
                            })
                        }
                        None => {}
                    }
                }
                Ok(())
            }
            Schema::OneOf(options) => {
                if options.iter().any(|s| s.check(v, path).is_ok()) {
                    Ok(())
                } else {
                    fail("matches no alternative".into())
                }
            }
        }
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn reports_nested_path() {
        let s = Schema::object(vec![Field::required(
            "questions",
            Schema::array(Schema::object(vec![Field::required(
                "question",
                Schema::String,
            )])),
        )]);
        let err = s
            .validate(&json!({"questions": [{"question": "a"}, {"q": 1}]}))
            .unwrap_err();
        assert_eq!(err.path, "$.questions[1].question");
    }

    #[test]
    fn number_range() {
        let s = Schema::number(0.0, 1.0);
        assert!(s.validate(&json!(0.9)).is_ok());
        assert!(s.validate(&json!(1.5)).is_err());
        assert!(s.validate(&json!("0.5")).is_err());
    }
}
