//! Prompt assembly for the text extraction path.

use super::clients::NOT_FOUND_MARKER;
use super::Chunk;

/// Prompt template; instantiation is fully deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub preamble: String,
    pub not_found_marker: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            preamble: "You are extracting key information from a parsed document.".into(),
            not_found_marker: NOT_FOUND_MARKER.into(),
        }
    }
}

/// Builds the extraction prompt: context chunks in rank order, the per-key
/// question list, then the output-format instruction.
pub fn build_prompt(keys: &[String], chunks: &[Chunk], template: &PromptTemplate) -> String {
    assert!(!keys.is_empty(), "build_prompt requires at least one key");
    let mut out = String::new();
    out.push_str(&template.preamble);
    out.push_str("\n\nContext:\n");
    for (i, chunk) in chunks.iter().enumerate() {
        out.push_str(&format!("[{}] {}\n", i + 1, chunk.text));
    }
    out.push_str("\nQuestions:\n");
    for key in keys {
        out.push_str(&format!("- {key}\n"));
    }
    out.push_str(&format!(
        "\nAnswer with exactly one line per question, formatted as \"key: value\".\n\
         Use \"{}\" as the value when the answer is absent from the context.\n",
        template.not_found_marker
    ));
    out
}

/// Parses "key: value" lines from a completion. Missing keys yield empty
/// values plus a warning; the not-found marker maps to an empty value.
pub fn parse_answers(
    completion: &str,
    keys: &[String],
    template: &PromptTemplate,
    warnings: &mut Vec<String>,
) -> Vec<(String, String)> {
    let mut found: Vec<Option<String>> = vec![None; keys.len()];
    for line in completion.lines() {
        let Some((raw_key, raw_value)) = line.split_once(':') else {
            continue;
        };
        let key = raw_key.trim();
        let value = raw_value.trim();
        if let Some(pos) = keys.iter().position(|k| k == key) {
            if found[pos].is_none() {
                let value = if value == template.not_found_marker {
                    String::new()
                } else {
                    value.to_string()
                };
                found[pos] = Some(value);
            }
        }
    }
    keys.iter()
        .zip(found)
        .map(|(key, value)| match value {
            Some(v) => (key.clone(), v),
            None => {
                warnings.push(format!("completion had no parseable line for key '{key}'"));
                (key.clone(), String::new())
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunk(text: &str) -> Chunk {
        Chunk {
            text: text.into(),
            page_index: 0,
            item_index: 0,
            char_span: (0, text.chars().count()),
        }
    }

    #[test]
    fn context_precedes_questions() {
        let prompt = build_prompt(
            &["number".to_string()],
            &[chunk("the number is 7")],
            &PromptTemplate::default(),
        );
        let ctx = prompt.find("the number is 7").unwrap();
        let q = prompt.find("- number").unwrap();
        assert!(ctx < q);
        assert!(prompt.contains("key: value"));
    }

    #[test]
    fn empty_context_still_valid() {
        let prompt = build_prompt(&["k".to_string()], &[], &PromptTemplate::default());
        assert!(prompt.contains("Context:"));
        assert!(prompt.contains("- k"));
    }

    #[test]
    fn prompt_is_byte_deterministic() {
        let keys = vec!["a".to_string(), "b".to_string()];
        let chunks = vec![chunk("one"), chunk("two")];
        let t = PromptTemplate::default();
        assert_eq!(build_prompt(&keys, &chunks, &t), build_prompt(&keys, &chunks, &t));
    }

    #[test]
    fn parse_maps_marker_to_empty() {
        let keys = vec!["number".to_string(), "name".to_string()];
        let mut warnings = Vec::new();
        let answers = parse_answers(
            "number: 42\nname: unknown\n",
            &keys,
            &PromptTemplate::default(),
            &mut warnings,
        );
        assert_eq!(answers[0].1, "42");
        assert_eq!(answers[1].1, "");
        assert!(warnings.is_empty());
    }

    #[test]
    fn unparseable_output_warns_and_yields_empty() {
        let keys = vec!["number".to_string()];
        let mut warnings = Vec::new();
        let answers = parse_answers("gibberish", &keys, &PromptTemplate::default(), &mut warnings);
        assert_eq!(answers[0].1, "");
        assert_eq!(warnings.len(), 1);
    }
}
