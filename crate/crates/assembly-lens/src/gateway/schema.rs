//! Structured-output schemas and response validation.
//!
//! A [`SchemaDescriptor`] declares the shape a backend response must take:
//! field kinds, regex patterns, numeric bounds, conditional-emptiness rules,
//! and whether the response is a single object or a list wrapped in a named
//! field whose length must equal the number of input utterances.

use regex::Regex;
use serde::Deserialize;
use serde_json::Value;
use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

pub const SUGGESTION_BATCH_SCHEMA_ID: &str = "suggestion-batch-v1";
pub const EVIDENCE_BATCH_SCHEMA_ID: &str = "evidence-batch-v4";
pub const EVIDENCE_SINGLE_SCHEMA_ID: &str = "evidence-single-v2";
pub const EVIDENCE_SINGLE_V1_SCHEMA_ID: &str = "evidence-single-v1";

/// Primitive kind of a schema field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Str,
    Bool,
    Number,
}

/// One field of a response item.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    pub name: String,
    pub kind: FieldKind,
    /// Full-match regex constraint for string fields (applied when non-empty).
    pub pattern: Option<String>,
    /// Inclusive numeric bounds.
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// Rendered into the schema string handed to the model.
    pub description: String,
}

impl FieldSpec {
    fn string(name: &str, description: &str) -> Self {
        Self {
            name: name.into(),
            kind: FieldKind::Str,
            pattern: None,
            min: None,
            max: None,
            description: description.into(),
        }
    }

    fn with_pattern(mut self, pattern: &str) -> Self {
        self.pattern = Some(pattern.into());
        self
    }

    fn boolean(name: &str, description: &str) -> Self {
        Self {
            name: name.into(),
            kind: FieldKind::Bool,
            pattern: None,
            min: None,
            max: None,
            description: description.into(),
        }
    }

    fn number(name: &str, min: f64, max: f64, description: &str) -> Self {
        Self {
            name: name.into(),
            kind: FieldKind::Number,
            pattern: None,
            min: Some(min),
            max: Some(max),
            description: description.into(),
        }
    }
}

/// Cross-field constraints on one response item.
#[derive(Debug, Clone)]
pub enum SchemaRule {
    /// `field` must be non-empty exactly when `controller == value`.
    NonEmptyIff {
        field: String,
        controller: String,
        value: String,
    },
    /// The two fields must be both empty or both non-empty.
    PairedEmptiness { first: String, second: String },
}

/// Whether a response is one object or a list wrapped in a named field.
#[derive(Debug, Clone)]
pub enum ResponseShape {
    Object,
    /// `{ "<field>": [item, item, ...] }`; when `exact_length` is set the
    /// list length must equal the expected length supplied at call time.
    List { field: String, exact_length: bool },
}

/// A machine-checkable response contract, versioned alongside its template.
#[derive(Debug, Clone)]
pub struct SchemaDescriptor {
    pub schema_id: String,
    pub shape: ResponseShape,
    pub fields: Vec<FieldSpec>,
    pub rules: Vec<SchemaRule>,
}

/// A single constraint failure, carried through retries and surfaced in
/// `ValidationExhausted`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn compiled(pattern: &str) -> Regex {
    static CACHE: OnceLock<std::sync::Mutex<HashMap<String, Regex>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| std::sync::Mutex::new(HashMap::new()));
    let mut cache = cache.lock().expect("regex cache poisoned");
    cache
        .entry(pattern.to_string())
        .or_insert_with(|| {
            let anchored = format!("^(?:{pattern})$");
            // Patterns written with explicit anchors stay as-is.
            let re = if pattern.starts_with('^') && pattern.ends_with('$') {
                pattern.to_string()
            } else {
                anchored
            };
            Regex::new(&re).expect("schema patterns are valid regexes")
        })
        .clone()
}

impl SchemaDescriptor {
    /// Validate a parsed response. `expected_length` applies only to list
    /// shapes declared with `exact_length`.
    pub fn validate(&self, value: &Value, expected_length: Option<usize>) -> Result<(), Violation> {
        match &self.shape {
            ResponseShape::Object => self.validate_item(value, "response"),
            ResponseShape::List {
                field,
                exact_length,
            } => {
                let obj = value.as_object().ok_or_else(|| {
                    Violation(format!("expected a JSON object wrapping {field:?}"))
                })?;
                let list = obj
                    .get(field)
                    .and_then(Value::as_array)
                    .ok_or_else(|| Violation(format!("missing list field {field:?}")))?;
                if list.is_empty() {
                    return Err(Violation(format!("{field:?} must contain at least 1 item")));
                }
                if *exact_length {
                    if let Some(expected) = expected_length {
                        if list.len() != expected {
                            return Err(Violation(format!(
                                "Expected {expected} classifications, got {}",
                                list.len()
                            )));
                        }
                    }
                }
                for (i, item) in list.iter().enumerate() {
                    self.validate_item(item, &format!("{field}[{i}]"))?;
                }
                Ok(())
            }
        }
    }

    fn validate_item(&self, item: &Value, at: &str) -> Result<(), Violation> {
        let obj = item
            .as_object()
            .ok_or_else(|| Violation(format!("{at}: expected a JSON object")))?;
        for field in &self.fields {
            let value = obj
                .get(&field.name)
                .ok_or_else(|| Violation(format!("{at}: missing field {:?}", field.name)))?;
            match field.kind {
                FieldKind::Str => {
                    let s = value.as_str().ok_or_else(|| {
                        Violation(format!("{at}.{}: expected a string", field.name))
                    })?;
                    if let Some(pattern) = &field.pattern {
                        if !compiled(pattern).is_match(s) {
                            return Err(Violation(format!(
                                "{at}.{}: value {s:?} does not match pattern {pattern:?}",
                                field.name
                            )));
                        }
                    }
                }
                FieldKind::Bool => {
                    if !value.is_boolean() {
                        return Err(Violation(format!(
                            "{at}.{}: expected a boolean",
                            field.name
                        )));
                    }
                }
                FieldKind::Number => {
                    let n = value.as_f64().ok_or_else(|| {
                        Violation(format!("{at}.{}: expected a number", field.name))
                    })?;
                    if !n.is_finite() {
                        return Err(Violation(format!(
                            "{at}.{}: value must be finite",
                            field.name
                        )));
                    }
                    if let Some(min) = field.min {
                        if n < min {
                            return Err(Violation(format!(
                                "{at}.{}: {n} below minimum {min}",
                                field.name
                            )));
                        }
                    }
                    if let Some(max) = field.max {
                        if n > max {
                            return Err(Violation(format!(
                                "{at}.{}: {n} above maximum {max}",
                                field.name
                            )));
                        }
                    }
                }
            }
        }
        for rule in &self.rules {
            let text = |name: &str| -> Result<String, Violation> {
                Ok(obj
                    .get(name)
                    .and_then(Value::as_str)
                    .ok_or_else(|| Violation(format!("{at}: missing field {name:?}")))?
                    .trim()
                    .to_string())
            };
            match rule {
                SchemaRule::NonEmptyIff {
                    field,
                    controller,
                    value,
                } => {
                    let controller_value = text(controller)?;
                    let field_value = text(field)?;
                    let should_fill = controller_value == *value;
                    if should_fill && field_value.is_empty() {
                        return Err(Violation(format!(
                            "{at}.{field}: must be non-empty when {controller} = {value:?}"
                        )));
                    }
                    if !should_fill && !field_value.is_empty() {
                        return Err(Violation(format!(
                            "{at}.{field}: must be empty unless {controller} = {value:?}"
                        )));
                    }
                }
                SchemaRule::PairedEmptiness { first, second } => {
                    let a = text(first)?;
                    let b = text(second)?;
                    if a.is_empty() != b.is_empty() {
                        return Err(Violation(format!(
                            "{at}: {first:?} and {second:?} must be both empty or both non-empty"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Compact JSON-ish contract text interpolated into prompts as
    /// `{schema_string}`.
    pub fn schema_string(&self) -> String {
        let item = |out: &mut String| {
            out.push('{');
            for (i, f) in self.fields.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let kind = match f.kind {
                    FieldKind::Str => "string",
                    FieldKind::Bool => "boolean",
                    FieldKind::Number => "number",
                };
                out.push_str(&format!("\"{}\": <{}: {}>", f.name, kind, f.description));
            }
            out.push('}');
        };
        let mut out = String::new();
        match &self.shape {
            ResponseShape::Object => item(&mut out),
            ResponseShape::List { field, .. } => {
                out.push_str(&format!("{{\"{field}\": ["));
                item(&mut out);
                out.push_str(", ...]}");
            }
        }
        out
    }
}

/// Registry of the response schemas shipped with the prompt templates.
#[derive(Debug, Clone)]
pub struct SchemaRegistry {
    schemas: HashMap<String, SchemaDescriptor>,
}

impl SchemaRegistry {
    pub fn builtin() -> Self {
        let mut schemas = HashMap::new();
        for s in [
            suggestion_batch_schema(),
            evidence_batch_schema(),
            evidence_single_schema(),
            evidence_single_v1_schema(),
        ] {
            schemas.insert(s.schema_id.clone(), s);
        }
        Self { schemas }
    }

    pub fn get(&self, schema_id: &str) -> Option<&SchemaDescriptor> {
        self.schemas.get(schema_id)
    }
}

fn evidence_fields() -> Vec<FieldSpec> {
    vec![
        FieldSpec::string(
            "category",
            "1 (direct relevance), 2 (contextual relevance), or 3 (not relevant)",
        )
        .with_pattern("^[123]$"),
        FieldSpec::boolean(
            "topic_mentioned",
            "whether the statement topic or its key elements are explicitly mentioned",
        ),
        FieldSpec::string(
            "llm_rationale",
            "if category 1, how the utterance reveals the speaker's perspective; otherwise empty string",
        ),
        FieldSpec::string(
            "response_quote",
            "if category 2, the exact quote of the previous utterance this one responds to; otherwise empty string",
        ),
        FieldSpec::string(
            "llm_response_rationale",
            "if category 2, why this response combined with the previous utterance reveals the speaker's view; otherwise empty string",
        ),
        FieldSpec::string(
            "irrelevance_reason",
            "if category 3, brief explanation of why not relevant; otherwise empty string",
        ),
        FieldSpec::number(
            "confidence_score",
            0.0,
            1.0,
            "confidence between 0 and 1 indicating relevance",
        ),
    ]
}

fn evidence_rules() -> Vec<SchemaRule> {
    vec![
        SchemaRule::NonEmptyIff {
            field: "llm_rationale".into(),
            controller: "category".into(),
            value: "1".into(),
        },
        SchemaRule::NonEmptyIff {
            field: "response_quote".into(),
            controller: "category".into(),
            value: "2".into(),
        },
        SchemaRule::NonEmptyIff {
            field: "llm_response_rationale".into(),
            controller: "category".into(),
            value: "2".into(),
        },
        SchemaRule::NonEmptyIff {
            field: "irrelevance_reason".into(),
            controller: "category".into(),
            value: "3".into(),
        },
    ]
}

fn suggestion_batch_schema() -> SchemaDescriptor {
    SchemaDescriptor {
        schema_id: SUGGESTION_BATCH_SCHEMA_ID.into(),
        shape: ResponseShape::List {
            field: "suggestions".into(),
            exact_length: true,
        },
        fields: vec![
            FieldSpec::string("user_id", "ID of the speaker"),
            FieldSpec::string(
                "quote",
                "the exact quote from the conversation, empty string if not relevant",
            ),
            FieldSpec::string(
                "suggestion",
                "a faithful standalone first-person paraphrase of the explicit suggestion, empty string if not relevant",
            ),
        ],
        rules: vec![SchemaRule::PairedEmptiness {
            first: "quote".into(),
            second: "suggestion".into(),
        }],
    }
}

fn evidence_batch_schema() -> SchemaDescriptor {
    SchemaDescriptor {
        schema_id: EVIDENCE_BATCH_SCHEMA_ID.into(),
        shape: ResponseShape::List {
            field: "utterance_classifications".into(),
            exact_length: true,
        },
        fields: evidence_fields(),
        rules: evidence_rules(),
    }
}

fn evidence_single_schema() -> SchemaDescriptor {
    SchemaDescriptor {
        schema_id: EVIDENCE_SINGLE_SCHEMA_ID.into(),
        shape: ResponseShape::Object,
        fields: evidence_fields(),
        rules: evidence_rules(),
    }
}

fn evidence_single_v1_schema() -> SchemaDescriptor {
    // The earliest evidence schema had no topic_mentioned or
    // irrelevance_reason fields.
    let fields = vec![
        FieldSpec::string("category", "1, 2, or 3").with_pattern("^[123]$"),
        FieldSpec::string(
            "llm_rationale",
            "if category 1, explanation of relevance; otherwise empty string",
        ),
        FieldSpec::string(
            "response_quote",
            "if category 2, the exact quote responded to; otherwise empty string",
        ),
        FieldSpec::string(
            "llm_response_rationale",
            "if category 2, rationale for the response pairing; otherwise empty string",
        ),
        FieldSpec::number(
            "confidence_score",
            0.0,
            1.0,
            "confidence between 0 and 1 indicating relevance",
        ),
    ];
    SchemaDescriptor {
        schema_id: EVIDENCE_SINGLE_V1_SCHEMA_ID.into(),
        shape: ResponseShape::Object,
        fields,
        rules: vec![
            SchemaRule::NonEmptyIff {
                field: "llm_rationale".into(),
                controller: "category".into(),
                value: "1".into(),
            },
            SchemaRule::NonEmptyIff {
                field: "response_quote".into(),
                controller: "category".into(),
                value: "2".into(),
            },
            SchemaRule::NonEmptyIff {
                field: "llm_response_rationale".into(),
                controller: "category".into(),
                value: "2".into(),
            },
        ],
    }
}

/// Pull the first JSON value out of a raw model response, tolerating
/// markdown code fences and leading prose.
pub fn extract_json(raw: &str) -> Result<Value, Violation> {
    let trimmed = raw.trim();
    if let Ok(v) = serde_json::from_str(trimmed) {
        return Ok(v);
    }
    // Code fence.
    if let Some(start) = trimmed.find("```") {
        let rest = &trimmed[start + 3..];
        let rest = rest.strip_prefix("json").unwrap_or(rest);
        if let Some(end) = rest.find("```") {
            if let Ok(v) = serde_json::from_str(rest[..end].trim()) {
                return Ok(v);
            }
        }
    }
    // First balanced object or array.
    for open in ['{', '['] {
        if let Some(start) = trimmed.find(open) {
            let mut deserializer = serde_json::Deserializer::from_str(&trimmed[start..]);
            if let Ok(v) = Value::deserialize(&mut deserializer) {
                return Ok(v);
            }
        }
    }
    Err(Violation("response contains no parseable JSON".into()))
}
