//! Key information extraction: chunking, vector retrieval, prompt assembly,
//! dual-path extraction and result fusion.

pub mod clients;
pub mod index;
pub mod prompt;

pub use clients::{
    ClientConfig, Embedder, HttpEmbedder, HttpLlmClient, HttpMllmClient, KieClients, LlmClient,
    MllmClient, MockEmbedder, MockLlm, MockMllm, NOT_FOUND_MARKER,
};
pub use index::{build_index, retrieve, VectorIndex};
pub use prompt::{build_prompt, parse_answers, PromptTemplate};

use std::collections::BTreeMap;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::document::Document;
use crate::error::{Error, Result};

/// A retrievable slice of document text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub text: String,
    pub page_index: usize,
    pub item_index: usize,
    /// Character span within the item's plain text.
    pub char_span: (usize, usize),
}

/// Which extraction path produced an answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerSource {
    TextPath,
    ImagePath,
    Fused,
}

/// One extracted key/value pair; an empty value means "not found".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KieAnswer {
    pub key: String,
    pub value: String,
    pub source: AnswerSource,
    /// Conflicting value from the other path, when any.
    pub alternate: Option<String>,
    /// Chunks supporting a text-path answer.
    pub supporting: Vec<Chunk>,
}

impl KieAnswer {
    fn new(key: impl Into<String>, value: impl Into<String>, source: AnswerSource) -> Self {
        Self {
            key: key.into(),
            value: value.into(),
            source,
            alternate: None,
            supporting: Vec::new(),
        }
    }
}

/// Extraction tuning knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KieParams {
    pub max_chars: usize,
    pub overlap: usize,
    pub top_k: usize,
}

impl Default for KieParams {
    fn default() -> Self {
        Self {
            max_chars: 512,
            overlap: 64,
            top_k: 5,
        }
    }
}

/// Splits document items into chunks, in reading order.
///
/// Chunks never cross item boundaries (spans index into one item's plain
/// text). Long items split at the nearest whitespace preceding `max_chars`,
/// with `overlap` characters carried over between consecutive chunks.
pub fn chunk_document(doc: &Document, max_chars: usize, overlap: usize) -> Vec<Chunk> {
    assert!(max_chars > overlap, "max_chars must exceed overlap");
    let mut chunks = Vec::new();
    for page in &doc.pages {
        let mut items: Vec<_> = page.items.iter().enumerate().collect();
        items.sort_by_key(|(_, item)| item.order_index);
        for (item_index, item) in items {
            let text: Vec<char> = item.content.plain_text().chars().collect();
            if text.iter().all(|c| c.is_whitespace()) {
                continue;
            }
            let mut start = 0usize;
            while start < text.len() {
                let hard_end = (start + max_chars).min(text.len());
                let end = if hard_end < text.len() {
                    // Nearest whitespace before the limit keeps words whole.
                    (start + 1..hard_end)
                        .rev()
                        .find(|&i| text[i].is_whitespace())
                        .unwrap_or(hard_end)
                } else {
                    hard_end
                };
                let chunk_text: String = text[start..end].iter().collect();
                if !chunk_text.trim().is_empty() {
                    chunks.push(Chunk {
                        text: chunk_text,
                        page_index: page.index,
                        item_index,
                        char_span: (start, end),
                    });
                }
                if end >= text.len() {
                    break;
                }
                start = end.saturating_sub(overlap).max(start + 1);
            }
        }
    }
    chunks
}

/// Question posed to the multimodal client for one key.
pub fn mllm_question(key: &str) -> String {
    format!(
        "Extract the value of \"{key}\" from this document image. \
         Reply with the value only, or \"{NOT_FOUND_MARKER}\" if absent."
    )
}

/// Extraction outcome: answers plus non-fatal warnings (degraded paths,
/// unparseable completions).
#[derive(Debug, Clone, PartialEq)]
pub struct KieOutcome {
    pub answers: Vec<KieAnswer>,
    pub warnings: Vec<String>,
}

fn text_path(
    doc: &Document,
    keys: &[String],
    clients: &KieClients,
    params: &KieParams,
    warnings: &mut Vec<String>,
) -> Result<Vec<KieAnswer>> {
    let chunks = chunk_document(doc, params.max_chars, params.overlap);
    let index = build_index(&chunks, clients.embedder.clone())?;
    let mut selected: Vec<Chunk> = Vec::new();
    let mut per_key_support: BTreeMap<String, Vec<Chunk>> = BTreeMap::new();
    // Interleave per-key rankings so the strongest chunk of every key makes
    // it into the prompt before any second-ranked chunk.
    let mut rankings: Vec<Vec<Chunk>> = Vec::new();
    for key in keys {
        let hits = retrieve(&index, key, params.top_k)?;
        per_key_support.insert(key.clone(), hits.iter().map(|(c, _)| c.clone()).collect());
        rankings.push(hits.into_iter().map(|(c, _)| c).collect());
    }
    for rank in 0..params.top_k {
        for ranking in &rankings {
            if let Some(chunk) = ranking.get(rank) {
                if !selected.contains(chunk) {
                    selected.push(chunk.clone());
                }
            }
        }
    }

    let template = PromptTemplate::default();
    let prompt = build_prompt(keys, &selected, &template);
    let completion = clients.llm.complete(&prompt)?;
    let parsed = parse_answers(&completion, keys, &template, warnings);
    Ok(parsed
        .into_iter()
        .map(|(key, value)| {
            let mut answer = KieAnswer::new(&key, value, AnswerSource::TextPath);
            answer.supporting = per_key_support.remove(&key).unwrap_or_default();
            answer
        })
        .collect())
}

fn image_path(
    page_images: &[RgbImage],
    keys: &[String],
    mllm: &dyn MllmClient,
) -> Result<Vec<KieAnswer>> {
    let mut answers = Vec::with_capacity(keys.len());
    for key in keys {
        let question = mllm_question(key);
        let mut value = String::new();
        for image in page_images {
            let raw = mllm.answer(image, &question)?;
            let trimmed = raw.trim();
            if !trimmed.is_empty() && trimmed != NOT_FOUND_MARKER {
                value = trimmed.to_string();
                break;
            }
        }
        answers.push(KieAnswer::new(key, value, AnswerSource::ImagePath));
    }
    Ok(answers)
}

/// Runs the extraction workflow.
///
/// The text path retrieves chunks and asks the LLM; the image path (when
/// `use_mllm` is set) questions the multimodal client per key. When both
/// paths run, results are fused; when one fails, the other is returned with
/// a warning.
pub fn extract(
    doc: &Document,
    page_images: &[RgbImage],
    keys: &[String],
    clients: &KieClients,
    use_mllm: bool,
    params: &KieParams,
) -> Result<KieOutcome> {
    if keys.is_empty() {
        return Err(Error::KeyMismatch("no keys requested".into()));
    }
    let mut warnings = Vec::new();
    let text_result = text_path(doc, keys, clients, params, &mut warnings);

    let image_result = if use_mllm {
        let mllm = clients.mllm.as_ref().ok_or_else(|| Error::ClientFailure {
            path: "image".into(),
            message: "use_mllm is set but no multimodal client is configured".into(),
        })?;
        Some(image_path(page_images, keys, mllm.as_ref()))
    } else {
        None
    };

    let answers = match (text_result, image_result) {
        (Ok(text), None) => text,
        (Ok(text), Some(Ok(image))) => fuse_results(&text, &image)?,
        (Ok(text), Some(Err(image_err))) => {
            warnings.push(format!("image path failed, using text path only: {image_err}"));
            text
        }
        (Err(text_err), Some(Ok(image))) => {
            warnings.push(format!("text path failed, using image path only: {text_err}"));
            image
        }
        (Err(text_err), Some(Err(image_err))) => {
            return Err(Error::ClientFailure {
                path: "text+image".into(),
                message: format!("both paths failed: {text_err}; {image_err}"),
            });
        }
        (Err(text_err), None) => return Err(text_err),
    };

    Ok(KieOutcome { answers, warnings })
}

fn normalized(value: &str) -> String {
    value.trim().to_lowercase()
}

/// Fuses text-path and image-path answers key by key.
///
/// Identical answers pass through unchanged; values agreeing after
/// trim/case-fold fuse to the text value; a single non-empty side wins; on a
/// genuine conflict the text value wins and the image value is recorded as
/// the alternate.
pub fn fuse_results(text: &[KieAnswer], image: &[KieAnswer]) -> Result<Vec<KieAnswer>> {
    if text.len() != image.len() {
        return Err(Error::KeyMismatch(format!(
            "text path has {} answers, image path {}",
            text.len(),
            image.len()
        )));
    }
    let mut fused = Vec::with_capacity(text.len());
    for t in text {
        let i = image
            .iter()
            .find(|a| a.key == t.key)
            .ok_or_else(|| Error::KeyMismatch(format!("image path missing key '{}'", t.key)))?;
        if t == i {
            fused.push(t.clone());
            continue;
        }
        let fused_answer = if normalized(&t.value) == normalized(&i.value) {
            KieAnswer {
                key: t.key.clone(),
                value: t.value.clone(),
                source: AnswerSource::Fused,
                alternate: None,
                supporting: t.supporting.clone(),
            }
        } else if t.value.trim().is_empty() {
            i.clone()
        } else if i.value.trim().is_empty() {
            t.clone()
        } else {
            KieAnswer {
                key: t.key.clone(),
                value: t.value.clone(),
                source: AnswerSource::TextPath,
                alternate: Some(i.value.clone()),
                supporting: t.supporting.clone(),
            }
        };
        fused.push(fused_answer);
    }
    Ok(fused)
}

/// Fraction of keys whose predicted value matches ground truth after trim,
/// case-fold and whitespace collapse, as a percentage.
pub fn recall_at_1(pred: &[KieAnswer], gt: &BTreeMap<String, String>) -> Result<f64> {
    if pred.len() != gt.len() || pred.iter().any(|a| !gt.contains_key(&a.key)) {
        return Err(Error::KeyMismatch(
            "prediction keys do not align with ground truth".into(),
        ));
    }
    let canon = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    let hits = pred
        .iter()
        .filter(|a| canon(&a.value) == canon(&gt[&a.key]))
        .count();
    Ok(hits as f64 / pred.len() as f64 * 100.0)
}

/// Renders a recall percentage in report style, e.g. "85.55%".
pub fn format_recall(percentage: f64) -> String {
    format!("{percentage:.2}%")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::{DocumentItem, ItemContent, Page};
    use crate::geometry::BBox;
    use std::sync::Arc;

    fn doc_with_text(texts: &[&str]) -> Document {
        let mut page = Page::new(0, 100.0, 100.0);
        for (i, t) in texts.iter().enumerate() {
            let mut item = DocumentItem::new(
                ItemContent::Text { text: t.to_string() },
                BBox::new(0.0, i as f64 * 10.0, 100.0, i as f64 * 10.0 + 8.0),
                0,
            );
            item.order_index = i;
            page.items.push(item);
        }
        let mut doc = Document::new("test");
        doc.pages.push(page);
        doc
    }

    #[test]
    fn short_document_single_chunk() {
        let doc = doc_with_text(&["only a hundred characters of text"]);
        let chunks = chunk_document(&doc, 512, 64);
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].char_span.0, 0);
    }

    #[test]
    fn long_item_splits_with_overlap_coverage() {
        let long: String = "word ".repeat(200); // 1000 chars
        let doc = doc_with_text(&[long.trim_end()]);
        let chunks = chunk_document(&doc, 512, 64);
        assert!(chunks.len() >= 2);
        assert_eq!(chunks[0].char_span.0, 0);
        for (i, c) in chunks.iter().enumerate() {
            assert!(c.char_span.0 <= 448 * i, "chunk {i} starts at {}", c.char_span.0);
        }
        // Full coverage: consecutive chunks overlap or touch.
        for pair in chunks.windows(2) {
            assert!(pair[1].char_span.0 <= pair[0].char_span.1);
        }
        assert_eq!(chunks.last().unwrap().char_span.1, long.trim_end().chars().count());
    }

    #[test]
    fn empty_document_no_chunks() {
        let doc = Document::new("empty");
        assert!(chunk_document(&doc, 512, 64).is_empty());
    }

    fn mock_clients(llm_answers: BTreeMap<String, String>) -> KieClients {
        KieClients {
            llm: Arc::new(MockLlm::with_answers(llm_answers)),
            mllm: None,
            embedder: Arc::new(MockEmbedder::hashing()),
        }
    }

    #[test]
    fn text_only_extraction() {
        let doc = doc_with_text(&["invoice number INV-7", "total 99.50"]);
        let keys = vec!["number".to_string()];
        let clients = mock_clients([("number".to_string(), "INV-7".to_string())].into());
        let outcome = extract(&doc, &[], &keys, &clients, false, &KieParams::default()).unwrap();
        assert_eq!(outcome.answers.len(), 1);
        assert_eq!(outcome.answers[0].value, "INV-7");
        assert_eq!(outcome.answers[0].source, AnswerSource::TextPath);
        assert!(!outcome.answers[0].supporting.is_empty());
    }

    #[test]
    fn llm_failure_degrades_to_image_path() {
        let doc = doc_with_text(&["content"]);
        let keys = vec!["number".to_string()];
        let clients = KieClients {
            llm: Arc::new(clients::FailingLlm),
            mllm: Some(Arc::new(MockMllm::with_answers(
                [("number".to_string(), "42".to_string())].into(),
            ))),
            embedder: Arc::new(MockEmbedder::hashing()),
        };
        let pages = vec![RgbImage::new(4, 4)];
        let outcome = extract(&doc, &pages, &keys, &clients, true, &KieParams::default()).unwrap();
        assert_eq!(outcome.answers[0].value, "42");
        assert_eq!(outcome.answers[0].source, AnswerSource::ImagePath);
        assert_eq!(outcome.warnings.len(), 1);
    }

    #[test]
    fn both_paths_failing_is_client_failure() {
        let doc = doc_with_text(&["content"]);
        let keys = vec!["k".to_string()];
        let clients = KieClients {
            llm: Arc::new(clients::FailingLlm),
            mllm: Some(Arc::new(clients::FailingMllm)),
            embedder: Arc::new(MockEmbedder::hashing()),
        };
        assert!(matches!(
            extract(&doc, &[RgbImage::new(2, 2)], &keys, &clients, true, &KieParams::default()),
            Err(Error::ClientFailure { .. })
        ));
    }

    #[test]
    fn fuse_agreement_and_precedence() {
        let t = |v: &str| KieAnswer::new("k", v, AnswerSource::TextPath);
        let i = |v: &str| KieAnswer::new("k", v, AnswerSource::ImagePath);

        let both = fuse_results(&[t("42")], &[i("42")]).unwrap();
        assert_eq!(both[0].value, "42");
        assert_eq!(both[0].source, AnswerSource::Fused);

        let image_only = fuse_results(&[t("")], &[i("42")]).unwrap();
        assert_eq!(image_only[0].value, "42");
        assert_eq!(image_only[0].source, AnswerSource::ImagePath);

        let conflict = fuse_results(&[t("41")], &[i("42")]).unwrap();
        assert_eq!(conflict[0].value, "41");
        assert_eq!(conflict[0].source, AnswerSource::TextPath);
        assert_eq!(conflict[0].alternate.as_deref(), Some("42"));
    }

    #[test]
    fn fusion_is_idempotent() {
        let t = vec![
            KieAnswer::new("a", "1", AnswerSource::TextPath),
            KieAnswer::new("b", "", AnswerSource::TextPath),
            KieAnswer::new("c", "x", AnswerSource::TextPath),
        ];
        let i = vec![
            KieAnswer::new("a", "1", AnswerSource::ImagePath),
            KieAnswer::new("b", "2", AnswerSource::ImagePath),
            KieAnswer::new("c", "y", AnswerSource::ImagePath),
        ];
        let fused = fuse_results(&t, &i).unwrap();
        let refused = fuse_results(&fused, &fused).unwrap();
        assert_eq!(fused, refused);
    }

    #[test]
    fn key_mismatch_detected() {
        let t = vec![KieAnswer::new("a", "1", AnswerSource::TextPath)];
        let i = vec![KieAnswer::new("b", "1", AnswerSource::ImagePath)];
        assert!(matches!(fuse_results(&t, &i), Err(Error::KeyMismatch(_))));
    }

    #[test]
    fn recall_arithmetic() {
        let answers = vec![
            KieAnswer::new("a", "x", AnswerSource::TextPath),
            KieAnswer::new("b", " Y ", AnswerSource::TextPath),
            KieAnswer::new("c", "wrong", AnswerSource::TextPath),
            KieAnswer::new("d", "z", AnswerSource::TextPath),
        ];
        let gt: BTreeMap<String, String> = [
            ("a".to_string(), "x".to_string()),
            ("b".to_string(), "y".to_string()),
            ("c".to_string(), "right".to_string()),
            ("d".to_string(), "z".to_string()),
        ]
        .into();
        let recall = recall_at_1(&answers, &gt).unwrap();
        assert_eq!(recall, 75.0);
        assert_eq!(format_recall(recall), "75.00%");
    }

    #[test]
    fn recall_all_empty_is_zero() {
        let answers = vec![KieAnswer::new("a", "", AnswerSource::TextPath)];
        let gt: BTreeMap<String, String> = [("a".to_string(), "v".to_string())].into();
        assert_eq!(recall_at_1(&answers, &gt).unwrap(), 0.0);
    }

    #[test]
    fn recall_order_invariant() {
        let mut answers = vec![
            KieAnswer::new("a", "1", AnswerSource::TextPath),
            KieAnswer::new("b", "2", AnswerSource::TextPath),
        ];
        let gt: BTreeMap<String, String> = [
            ("a".to_string(), "1".to_string()),
            ("b".to_string(), "9".to_string()),
        ]
        .into();
        let r1 = recall_at_1(&answers, &gt).unwrap();
        answers.reverse();
        assert_eq!(recall_at_1(&answers, &gt).unwrap(), r1);
    }

    #[test]
    fn extraction_is_deterministic() {
        let doc = doc_with_text(&["invoice number INV-7 and other text", "total 99.50 euros"]);
        let keys = vec!["number".to_string(), "total".to_string()];
        let clients = mock_clients(
            [
                ("number".to_string(), "INV-7".to_string()),
                ("total".to_string(), "99.50".to_string()),
            ]
            .into(),
        );
        let a = extract(&doc, &[], &keys, &clients, false, &KieParams::default()).unwrap();
        let b = extract(&doc, &[], &keys, &clients, false, &KieParams::default()).unwrap();
        assert_eq!(a, b);
    }
}
