//! Structured-answer parsing for model output.
//!
//! Models are asked to return a single JSON object; in practice the object
//! arrives bare, fenced in markdown, or buried in prose. The parser scans for
//! the first balanced JSON object that parses, then validates keys and value
//! ranges against the expected schema. Key matching is case-insensitive and
//! whitespace/underscore-tolerant. It never panics on arbitrary input.

use std::collections::BTreeMap;

use super::{AgentError, AnswerSchema, ParsedAnswers};

/// Extracts, parses, and validates one JSON answer object.
pub fn parse_answers(raw: &str, schema: &AnswerSchema) -> Result<ParsedAnswers, AgentError> {
    let object = extract_object(raw).ok_or_else(|| AgentError::NoJsonObject {
        preview: preview(raw),
    })?;

    let mut normalized: BTreeMap<String, (String, serde_json::Value)> = BTreeMap::new();
    for (key, value) in object {
        normalized.insert(normalize_key(&key), (key, value));
    }

    let mut answers = BTreeMap::new();
    for expected in &schema.keys {
        let (_, value) = normalized
            .remove(&normalize_key(expected))
            .ok_or_else(|| AgentError::MissingKey { key: expected.clone() })?;
        let number = as_integer(&value).ok_or_else(|| AgentError::NotAnInteger {
            key: expected.clone(),
            value: value.to_string(),
        })?;
        if number < schema.min || number > schema.max {
            return Err(AgentError::ValueOutOfRange {
                key: expected.clone(),
                value: number,
                min: schema.min,
                max: schema.max,
            });
        }
        answers.insert(expected.clone(), number);
    }
    if let Some((_, (original, _))) = normalized.into_iter().next() {
        return Err(AgentError::UnexpectedKey { key: original });
    }

    Ok(ParsedAnswers { answers, raw_text: raw.to_string(), attempts: 1 })
}

/// Case-folded, separator-collapsed form used for tolerant key matching:
/// `"Study_Overseas"`, `"study overseas"`, and `" STUDY  OVERSEAS "` agree.
fn normalize_key(key: &str) -> String {
    let mut out = String::with_capacity(key.len());
    let mut pending_space = false;
    for ch in key.trim().chars() {
        if ch.is_whitespace() || ch == '_' || ch == '-' {
            pending_space = true;
            continue;
        }
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        for low in ch.to_lowercase() {
            out.push(low);
        }
    }
    out
}

/// Accepts integers and floats with no fractional part (models sometimes
/// answer `7.0`).
fn as_integer(value: &serde_json::Value) -> Option<i64> {
    match value {
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Some(i)
            } else {
                let f = n.as_f64()?;
                if f.fract() == 0.0 && f.abs() < 9e15 {
                    Some(f as i64)
                } else {
                    None
                }
            }
        }
        serde_json::Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Finds the first balanced `{...}` region that parses as a JSON object.
/// Fences and surrounding prose are ignored by construction.
fn extract_object(raw: &str) -> Option<serde_json::Map<String, serde_json::Value>> {
    let bytes = raw.as_bytes();
    let mut start = 0;
    while let Some(open) = raw[start..].find('{') {
        let open = start + open;
        if let Some(end) = balanced_end(bytes, open) {
            let candidate = &raw[open..=end];
            if let Ok(serde_json::Value::Object(map)) = serde_json::from_str(candidate) {
                return Some(map);
            }
            // Not valid JSON; resume scanning just past this opening brace.
        }
        start = open + 1;
    }
    None
}

/// Index of the brace closing the object opened at `open`, honoring strings
/// and escapes. Operates on bytes; brace/quote bytes never occur inside
/// UTF-8 continuation bytes, so this cannot split a character.
fn balanced_end(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(open) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn preview(raw: &str) -> String {
    let trimmed = raw.trim();
    let mut end = trimmed.len().min(80);
    while !trimmed.is_char_boundary(end) {
        end -= 1;
    }
    trimmed[..end].to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> AnswerSchema {
        AnswerSchema {
            keys: vec!["Bashful".into(), "Bold".into(), "Study_Overseas".into()],
            min: 1,
            max: 9,
        }
    }

    #[test]
    fn bare_fenced_and_prose_wrapped_parse_identically() {
        let bare = r#"{"Bashful": 3, "Bold": 7, "Study_Overseas": 5}"#;
        let fenced = format!("```json\n{bare}\n```");
        let prose = format!("Sure! Here are my answers:\n\n{bare}\n\nLet me know.");
        let a = parse_answers(bare, &schema()).unwrap();
        let b = parse_answers(&fenced, &schema()).unwrap();
        let c = parse_answers(&prose, &schema()).unwrap();
        assert_eq!(a.answers, b.answers);
        assert_eq!(a.answers, c.answers);
        assert_eq!(a.answers["Bold"], 7);
    }

    #[test]
    fn keys_match_case_and_separator_insensitively() {
        let raw = r#"{"bashful": 3, "BOLD": 7, "study overseas": 5}"#;
        let parsed = parse_answers(raw, &schema()).unwrap();
        assert_eq!(parsed.answers["Study_Overseas"], 5);
    }

    #[test]
    fn missing_key_is_named() {
        let raw = r#"{"Bashful": 3, "Bold": 7}"#;
        match parse_answers(raw, &schema()).unwrap_err() {
            AgentError::MissingKey { key } => assert_eq!(key, "Study_Overseas"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn extra_key_is_named() {
        let raw = r#"{"Bashful": 3, "Bold": 7, "Study_Overseas": 5, "Mood": 1}"#;
        match parse_answers(raw, &schema()).unwrap_err() {
            AgentError::UnexpectedKey { key } => assert_eq!(key, "Mood"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_value_is_named() {
        let raw = r#"{"Bashful": 3, "Bold": 11, "Study_Overseas": 5}"#;
        match parse_answers(raw, &schema()).unwrap_err() {
            AgentError::ValueOutOfRange { key, value, .. } => {
                assert_eq!(key, "Bold");
                assert_eq!(value, 11);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn float_with_zero_fraction_is_accepted() {
        let raw = r#"{"Bashful": 3.0, "Bold": 7, "Study_Overseas": 5}"#;
        assert_eq!(parse_answers(raw, &schema()).unwrap().answers["Bashful"], 3);
        let raw = r#"{"Bashful": 3.5, "Bold": 7, "Study_Overseas": 5}"#;
        assert!(matches!(
            parse_answers(raw, &schema()).unwrap_err(),
            AgentError::NotAnInteger { .. }
        ));
    }

    #[test]
    fn garbage_input_yields_structured_errors() {
        for raw in ["", "no json here", "{", "{{{{", "\u{fffd}\u{0}{]", "{'single': 1}"] {
            assert!(parse_answers(raw, &schema()).is_err());
        }
    }

    #[test]
    fn first_valid_object_wins_over_earlier_garbage() {
        let raw = r#"{broken {"Bashful": 3, "Bold": 7, "Study_Overseas": 5}"#;
        let parsed = parse_answers(raw, &schema()).unwrap();
        assert_eq!(parsed.answers["Bashful"], 3);
    }
}
