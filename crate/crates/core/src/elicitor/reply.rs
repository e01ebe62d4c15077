//! Reply validation.
//!
//! Replies are first parsed as strict JSON. Failing that, a single repair
//! pass strips code fences and trailing commas, extracts the first balanced
//! object and retries; if the result is still not JSON the top-level
//! `"Key": value` pairs are scanned leniently, which accepts bare values such
//! as `"Category": Lack of Info` and pseudo-objects inside `Pair`. Anything
//! that still lacks a usable `NOR` value becomes an ERROR annotation.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::{Map, Value};

use super::{Category, ExcerptPair, NorAnnotation, NorCount};

const MAX_NOR: i64 = 3;

/// A top-level field value as recovered from the reply.
#[derive(Debug, Clone)]
enum Field {
    Json(Value),
    /// Unquoted text up to the next comma or line break.
    Bare(String),
    /// A bracketed span that is not valid JSON.
    Span(String),
}

/// Parses one model reply. Never fails: invalid replies come back as
/// ERROR annotations with the raw text preserved.
pub fn validate_reply(raw: &str) -> NorAnnotation {
    let body = strip_fences(raw.trim());
    let fields = strict_fields(body)
        .or_else(|| {
            let obj = first_object(body).unwrap_or(body);
            strict_fields(&strip_trailing_commas(obj))
        })
        .unwrap_or_else(|| lenient_fields(body));
    interpret(&fields, raw).unwrap_or_else(|| NorAnnotation::error(raw))
}

fn strict_fields(text: &str) -> Option<Vec<(String, Field)>> {
    match serde_json::from_str::<Value>(text).ok()? {
        Value::Object(map) => Some(map.into_iter().map(|(k, v)| (k, Field::Json(v))).collect()),
        _ => None,
    }
}

fn strip_fences(text: &str) -> &str {
    let Some(start) = text.find("```") else {
        return text;
    };
    let after = &text[start + 3..];
    // Skip the info string (e.g. `json`) on the fence line.
    let after = after.find('\n').map(|i| &after[i + 1..]).unwrap_or(after);
    match after.find("```") {
        Some(end) => after[..end].trim(),
        None => after.trim(),
    }
}

/// Removes commas that directly precede `}` or `]`, outside strings.
fn strip_trailing_commas(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut in_str = false;
    let mut escaped = false;
    for (i, &c) in chars.iter().enumerate() {
        if in_str {
            out.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_str = false;
            }
            continue;
        }
        if c == '"' {
            in_str = true;
        } else if c == ',' {
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            if matches!(next, Some('}') | Some(']')) {
                continue;
            }
        }
        out.push(c);
    }
    out
}

/// Byte index one past the bracket closing the one at `open`, honoring
/// string literals. `None` if unbalanced.
fn matching_close(text: &str, open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in text[open..].char_indices() {
        if in_str {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_str = false;
            }
            continue;
        }
        match c {
            '"' => in_str = true,
            '{' | '[' => depth += 1,
            '}' | ']' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(open + i + c.len_utf8());
                }
            }
            _ => {}
        }
    }
    None
}

fn first_object(text: &str) -> Option<&str> {
    let open = text.find('{')?;
    let close = matching_close(text, open)?;
    Some(&text[open..close])
}

/// Scans `"Key": value` pairs starting at the first `"NOR"` key. Values are
/// strings, balanced bracket spans or bare text.
fn lenient_fields(text: &str) -> Vec<(String, Field)> {
    let mut fields = Vec::new();
    let Some(start) = find_key(text, "nor") else {
        return fields;
    };
    let bytes = text.as_bytes();
    let mut i = start;
    loop {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b',') {
            i += 1;
        }
        if i >= bytes.len() || bytes[i] != b'"' {
            break;
        }
        let Some(key_end) = text[i + 1..].find('"').map(|p| i + 1 + p) else {
            break;
        };
        let key = text[i + 1..key_end].to_string();
        i = key_end + 1;
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i >= bytes.len() || bytes[i] != b':' {
            break;
        }
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i >= bytes.len() {
            break;
        }
        let (field, next) = match bytes[i] {
            b'"' => match string_end(text, i) {
                Some(end) => (
                    serde_json::from_str::<Value>(&text[i..end])
                        .map(Field::Json)
                        .unwrap_or_else(|_| Field::Bare(text[i + 1..end - 1].to_string())),
                    end,
                ),
                None => break,
            },
            b'[' | b'{' => {
                let end = matching_close(text, i).unwrap_or(text.len());
                let span = &text[i..end];
                let field = serde_json::from_str::<Value>(&strip_trailing_commas(span))
                    .map(Field::Json)
                    .unwrap_or_else(|_| Field::Span(span.to_string()));
                (field, end)
            }
            _ => {
                let end = text[i..]
                    .find([',', '\n', '}'])
                    .map(|p| i + p)
                    .unwrap_or(text.len());
                let bare = text[i..end].trim();
                let field = serde_json::from_str::<Value>(bare)
                    .map(Field::Json)
                    .unwrap_or_else(|_| Field::Bare(bare.to_string()));
                (field, end)
            }
        };
        fields.push((key, field));
        i = next;
    }
    fields
}

/// Byte offset of the opening quote of the first `"<key>"` followed by `:`.
fn find_key(text: &str, key: &str) -> Option<usize> {
    let mut from = 0;
    while let Some(p) = text[from..].find('"') {
        let open = from + p;
        let close = open + 1 + text[open + 1..].find('"')?;
        if text[open + 1..close].trim().eq_ignore_ascii_case(key)
            && text[close + 1..].trim_start().starts_with(':')
        {
            return Some(open);
        }
        from = close + 1;
    }
    None
}

fn string_end(text: &str, open: usize) -> Option<usize> {
    let mut escaped = false;
    for (i, c) in text[open + 1..].char_indices() {
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == '"' {
            return Some(open + 1 + i + 1);
        }
    }
    None
}

#[derive(PartialEq)]
enum Key {
    Nor,
    Pair,
    Category,
    Quantity,
    Relevance,
    Clarity,
    Unknown,
}

fn classify_key(k: &str) -> Key {
    let norm: String = k
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect();
    match norm.as_str() {
        "nor" => Key::Nor,
        "pair" | "pairs" => Key::Pair,
        "category" | "categories" => Key::Category,
        "quantity" | "inform" | "information" => Key::Quantity,
        "relevance" | "relevant" => Key::Relevance,
        "clarity" | "clear" => Key::Clarity,
        _ => Key::Unknown,
    }
}

fn field_integer(f: &Field) -> Option<i64> {
    match f {
        Field::Json(Value::Number(n)) => n
            .as_i64()
            .or_else(|| n.as_f64().filter(|x| libm::trunc(*x) == *x).map(|x| x as i64)),
        Field::Json(Value::String(s)) | Field::Bare(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn field_text(f: &Field) -> Option<&str> {
    match f {
        Field::Json(Value::String(s)) | Field::Bare(s) => Some(s),
        _ => None,
    }
}

fn score(f: &Field) -> Option<u8> {
    field_integer(f).filter(|v| (0..=10).contains(v)).map(|v| v as u8)
}

fn labels(f: &Field) -> Vec<Category> {
    let split = |s: &str| -> Vec<Category> {
        s.split([',', ';'])
            .filter_map(Category::from_label)
            .collect()
    };
    match f {
        Field::Json(Value::Array(items)) => items
            .iter()
            .filter_map(|v| v.as_str())
            .flat_map(|s| split(s))
            .collect(),
        Field::Json(Value::String(s)) | Field::Bare(s) => split(s),
        _ => Vec::new(),
    }
}

fn is_category_text(f: &Field) -> bool {
    field_integer(f).is_none() && field_text(f).is_some_and(|s| Category::from_label(s).is_some())
}

fn pairs_of(f: &Field) -> Vec<ExcerptPair> {
    let mut texts: Vec<String> = Vec::new();
    match f {
        Field::Json(Value::Array(items)) => {
            for item in items {
                match item {
                    Value::Object(obj) => texts.extend(object_texts(obj)),
                    Value::Array(inner) => {
                        texts.extend(inner.iter().filter_map(|v| v.as_str().map(String::from)))
                    }
                    Value::String(s) => texts.push(s.clone()),
                    _ => {}
                }
            }
        }
        Field::Json(Value::Object(obj)) => texts.extend(object_texts(obj)),
        Field::Span(span) => texts.extend(quoted_strings(span)),
        _ => {}
    }
    texts
        .chunks_exact(2)
        .map(|c| ExcerptPair {
            question: c[0].clone(),
            answer: c[1].clone(),
        })
        .collect()
}

/// Question/answer strings of one pair object. Keys naming the question or
/// answer side win; otherwise values are taken in key order.
fn object_texts(obj: &Map<String, Value>) -> Vec<String> {
    let find = |needles: &[&str]| {
        obj.iter()
            .find(|(k, _)| {
                let k = k.to_ascii_lowercase();
                needles.iter().any(|n| k.contains(n))
            })
            .and_then(|(_, v)| v.as_str().map(String::from))
    };
    match (find(&["question", "analyst"]), find(&["answer", "manager", "executive"])) {
        (Some(q), Some(a)) => alloc::vec![q, a],
        _ => obj.values().filter_map(|v| v.as_str().map(String::from)).collect(),
    }
}

/// Quoted string literals in order, unescaped.
fn quoted_strings(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut i = 0;
    while let Some(p) = text[i..].find('"') {
        let open = i + p;
        let Some(end) = string_end(text, open) else {
            break;
        };
        let lit = &text[open..end];
        out.push(
            serde_json::from_str::<String>(lit).unwrap_or_else(|_| text[open + 1..end - 1].to_string()),
        );
        i = end;
    }
    out
}

fn interpret(fields: &[(String, Field)], raw: &str) -> Option<NorAnnotation> {
    let mut nor: Option<i64> = None;
    let mut pairs = Vec::new();
    let mut category: Option<Vec<Category>> = None;
    let mut quantity_slots: Vec<&Field> = Vec::new();
    let mut relevance = None;
    let mut clarity = None;

    for (k, f) in fields {
        match classify_key(k) {
            Key::Nor if nor.is_none() => nor = Some(field_integer(f)?),
            Key::Pair if pairs.is_empty() => pairs = pairs_of(f),
            Key::Category if category.is_none() => category = Some(labels(f)),
            Key::Quantity => quantity_slots.push(f),
            Key::Relevance if relevance.is_none() => relevance = score(f),
            Key::Clarity if clarity.is_none() => clarity = score(f),
            _ => {}
        }
    }

    let nor = nor?;
    if nor < 0 {
        return None;
    }
    // A category name in the first Quantity slot stands in for Category.
    let mut quantity = None;
    for f in quantity_slots {
        if is_category_text(f) {
            if category.is_none() {
                category = Some(labels(f));
            }
        } else if quantity.is_none() {
            quantity = score(f);
        }
    }

    let clamped_from = (nor > MAX_NOR).then_some(nor);
    let count = nor.min(MAX_NOR) as u8;
    let mut category = category.unwrap_or_default();
    if count == 0 {
        pairs.clear();
        category.clear();
    } else {
        pairs.truncate(count as usize);
        if category.len() == 1 && count > 1 {
            let label = category[0].clone();
            category = alloc::vec![label; count as usize];
        }
    }

    Some(NorAnnotation {
        conver_id: String::new(),
        model_id: String::new(),
        nor_count: NorCount::Count(count),
        pairs,
        category,
        quantity,
        relevance,
        clarity,
        clamped_from,
        raw: raw.to_string(),
    })
}

/// Canonical JSON reply for an annotation, in the prompt's output schema.
pub fn to_reply_json(a: &NorAnnotation) -> String {
    let mut obj = Map::new();
    let nor = match a.nor_count {
        NorCount::Count(n) => Value::from(n),
        NorCount::Error => Value::from("ERROR"),
    };
    obj.insert("NOR".into(), nor);
    let pairs = if a.pairs.is_empty() {
        Value::Null
    } else {
        Value::Array(
            a.pairs
                .iter()
                .map(|p| {
                    let mut m = Map::new();
                    m.insert("Question".into(), Value::from(p.question.as_str()));
                    m.insert("Answer".into(), Value::from(p.answer.as_str()));
                    Value::Object(m)
                })
                .collect(),
        )
    };
    obj.insert("Pair".into(), pairs);
    let uniform = a.category.windows(2).all(|w| w[0] == w[1]);
    let category = match a.category.as_slice() {
        [] => Value::Null,
        [c] => Value::from(c.label()),
        [c, ..] if uniform && Some(a.category.len()) == a.nor_count.count().map(usize::from) => {
            Value::from(c.label())
        }
        many => Value::Array(many.iter().map(|c| Value::from(c.label())).collect()),
    };
    obj.insert("Category".into(), category);
    for (k, v) in [
        ("Quantity", a.quantity),
        ("Relevance", a.relevance),
        ("Clarity", a.clarity),
    ] {
        obj.insert(k.into(), v.map(Value::from).unwrap_or(Value::Null));
    }
    Value::Object(obj).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn schema_happy_path() {
        let a = validate_reply(
            r#"{"NOR": 0, "Pair": null, "Category": null, "Quantity": 8, "Relevance": 9, "Clarity": 9}"#,
        );
        assert_eq!(a.nor_count, NorCount::Count(0));
        assert!(a.pairs.is_empty());
        assert!(a.category.is_empty());
        assert_eq!((a.quantity, a.relevance, a.clarity), (Some(8), Some(9), Some(9)));
    }

    #[test]
    fn unparseable_is_error() {
        let a = validate_reply("I cannot process this");
        assert!(a.is_error());
        assert_eq!(a.raw, "I cannot process this");
        assert!(validate_reply("").is_error());
        assert!(validate_reply(r#"{"NOR": "many"}"#).is_error());
        assert!(validate_reply(r#"{"NOR": -1}"#).is_error());
    }

    #[test]
    fn fences_and_trailing_commas_are_repaired() {
        let a = validate_reply(
            "Sure! Here it is:\n```json\n{\"NOR\": 1, \"Pair\": [[\"Q?\", \"A.\"],], \"Category\": \"Refusal\", \"Quantity\": 2, \"Relevance\": 3, \"Clarity\": 7,}\n```",
        );
        assert_eq!(a.nor_count, NorCount::Count(1));
        assert_eq!(a.category, vec![Category::Refusal]);
        assert_eq!(a.pairs, vec![ExcerptPair { question: "Q?".into(), answer: "A.".into() }]);
    }

    #[test]
    fn prose_before_object() {
        let a = validate_reply("My analysis: {\"NOR\": 0, \"Quantity\": 9, \"Relevance\": 9, \"Clarity\": 9} Done.");
        assert_eq!(a.nor_count, NorCount::Count(0));
    }

    #[test]
    fn aliases_from_prose_schema() {
        let a = validate_reply(r#"{"NOR": 0, "Category": null, "Inform": 6, "Relevant": 7, "Clarity": 8}"#);
        assert_eq!((a.quantity, a.relevance, a.clarity), (Some(6), Some(7), Some(8)));
    }

    #[test]
    fn counts_above_three_are_clamped() {
        let a = validate_reply(r#"{"NOR": 5, "Category": "Recall", "Quantity": 1, "Relevance": 1, "Clarity": 1}"#);
        assert_eq!(a.nor_count, NorCount::Count(3));
        assert_eq!(a.clamped_from, Some(5));
        assert_eq!(a.category, vec![Category::Recall; 3]);
    }

    #[test]
    fn zero_nor_clears_pairs() {
        let a = validate_reply(r#"{"NOR": 0, "Pair": [["q", "a"]], "Category": "Refusal", "Quantity": 9, "Relevance": 9, "Clarity": 9}"#);
        assert!(a.pairs.is_empty());
        assert!(a.category.is_empty());
    }

    #[test]
    fn out_of_range_scores_are_dropped() {
        let a = validate_reply(r#"{"NOR": 0, "Quantity": 11, "Relevance": 9.0, "Clarity": "7"}"#);
        assert_eq!((a.quantity, a.relevance, a.clarity), (None, Some(9), Some(7)));
    }

    #[test]
    fn multi_labels() {
        let a = validate_reply(r#"{"NOR": 2, "Pair": [{"Question": "q1", "Answer": "a1"}, {"Question": "q2", "Answer": "a2"}], "Category": ["Refusal", "Lack of Info"], "Quantity": 4, "Relevance": 5, "Clarity": 6}"#);
        assert_eq!(a.category, vec![Category::Refusal, Category::LackOfInfo]);
        assert_eq!(a.pairs.len(), 2);
        assert_eq!(a.pairs[1].answer, "a2");
        let b = validate_reply(r#"{"NOR": 2, "Category": "Refusal, Recall", "Quantity": 4, "Relevance": 5, "Clarity": 6}"#);
        assert_eq!(b.category, vec![Category::Refusal, Category::Recall]);
    }

    #[test]
    fn unknown_labels_kept_as_other() {
        let a = validate_reply(r#"{"NOR": 1, "Category": "Deflection", "Quantity": 4, "Relevance": 5, "Clarity": 6}"#);
        assert_eq!(a.category, vec![Category::Other("Deflection".into())]);
    }

    #[test]
    fn canonical_json_round_trips() {
        let a = validate_reply(r#"{"NOR": 2, "Pair": [{"Question": "q1", "Answer": "a1"}], "Category": "Recall", "Quantity": 4, "Relevance": 5, "Clarity": 6}"#);
        let mut b = validate_reply(&to_reply_json(&a));
        b.raw = a.raw.clone();
        assert_eq!(a, b);
    }
}
