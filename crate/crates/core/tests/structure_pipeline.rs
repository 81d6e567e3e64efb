//! End-to-end structure pipeline over the generated fixture workspaces.

use ocrkit_core::compose::{emit_json, emit_markdown, parse_json, MarkdownOptions};
use ocrkit_core::config::PipelineConfig;
use ocrkit_core::document::{ItemContent, LayoutCategory};
use ocrkit_core::fixtures;
use ocrkit_core::ocr::OcrConfig;
use ocrkit_core::pipeline::{run_structure, StructureConfig};
use ocrkit_core::runtime::InferenceContext;
use ocrkit_core::trace::Stage;

fn build_context(ws: &fixtures::FixtureWorkspace) -> (InferenceContext, StructureConfig) {
    let config = PipelineConfig::load(&ws.config_path).unwrap();
    let models = config.model_set(&ws.root).unwrap();
    let ctx = InferenceContext::with_stub(models);
    let ocr_cfg = OcrConfig {
        use_doc_orientation_classify: false,
        use_doc_unwarping: false,
        use_textline_orientation: false,
        detection: config.detection_params(),
        bindings: config.task_bindings().unwrap(),
    };
    let structure_cfg = StructureConfig {
        ocr: ocr_cfg,
        layout: config.layout_params(),
        cut: config.cut_params(),
        order_mode: config.fixed_order_mode(),
    };
    (ctx, structure_cfg)
}

#[test]
fn simple_page_parses_to_single_paragraph() {
    let dir = tempfile::tempdir().unwrap();
    let ws = fixtures::generate(dir.path(), &fixtures::simple_page_spec()).unwrap();
    let (ctx, cfg) = build_context(&ws);
    let outcome = run_structure(&ctx, &[ws.page.clone()], &cfg).unwrap();

    let doc = &outcome.document;
    assert_eq!(doc.pages.len(), 1);
    assert_eq!(doc.pages[0].items.len(), 1);
    match &doc.pages[0].items[0].content {
        ItemContent::Text { text } => {
            assert_eq!(text, "hello parser world second line here");
        }
        other => panic!("unexpected item {other:?}"),
    }
    let markdown = emit_markdown(doc, &MarkdownOptions::default());
    assert_eq!(markdown, "hello parser world second line here\n");
    assert!(outcome.trace.contains(Stage::TextDetection));
    assert!(outcome.trace.contains(Stage::LayoutDetection));
    assert!(!outcome.trace.contains(Stage::DocOrientation));
}

#[test]
fn two_column_page_order_and_content() {
    let dir = tempfile::tempdir().unwrap();
    let ws = fixtures::generate(dir.path(), &fixtures::two_column_page_spec()).unwrap();
    let (ctx, cfg) = build_context(&ws);
    let outcome = run_structure(&ctx, &[ws.page.clone()], &cfg).unwrap();
    let page = &outcome.document.pages[0];

    let categories: Vec<LayoutCategory> = page.items.iter().map(|i| i.category()).collect();
    assert_eq!(
        categories,
        vec![
            LayoutCategory::Header,
            LayoutCategory::Title,
            LayoutCategory::Text,
            LayoutCategory::Text,
            LayoutCategory::Image,
            LayoutCategory::Caption,
            LayoutCategory::Text,
            LayoutCategory::Table,
            LayoutCategory::Text,
            LayoutCategory::Footer,
        ]
    );

    // Title text recognized through the stub recognition chain.
    match &page.items[1].content {
        ItemContent::Title { text, .. } => assert_eq!(text, "Sample Document"),
        other => panic!("unexpected {other:?}"),
    }

    // Table assembled from structure tokens and page OCR lines.
    match &page.items[7].content {
        ItemContent::Table { html } => {
            assert_eq!(
                html,
                "<table><tr><td>Name</td><td>Qty</td></tr><tr><td>Widget</td><td>3</td></tr></table>"
            );
        }
        other => panic!("unexpected {other:?}"),
    }

    // Caption linked to the figure above it.
    assert_eq!(page.items[5].target_link, Some(4));
    assert_eq!(page.items[4].caption_link, Some(5));
    match &page.items[4].content {
        ItemContent::Image { path } => assert_eq!(path, "page0_item4.png"),
        other => panic!("unexpected {other:?}"),
    }

    // Markdown: headers/footers omitted, reading order preserved.
    let markdown = emit_markdown(&outcome.document, &MarkdownOptions::default());
    assert!(!markdown.contains("Running Header"));
    assert!(!markdown.contains("Page 1"));
    let title_pos = markdown.find("# Sample Document").unwrap();
    let left_pos = markdown.find("Left column opens with").unwrap();
    let right_pos = markdown.find("Right column begins here").unwrap();
    let table_pos = markdown.find("<table>").unwrap();
    assert!(title_pos < left_pos && left_pos < right_pos && right_pos < table_pos);

    // Canonical JSON is a fixpoint.
    let json = emit_json(&outcome.document);
    let reparsed = parse_json(&json).unwrap();
    assert_eq!(emit_json(&reparsed), json);

    // One crop extracted for the figure.
    assert_eq!(outcome.crops.len(), 1);
    assert_eq!(outcome.crops[0].name, "page0_item4.png");
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let ws = fixtures::generate(dir.path(), &fixtures::two_column_page_spec()).unwrap();
    let (ctx, cfg) = build_context(&ws);
    let a = run_structure(&ctx, &[ws.page.clone()], &cfg).unwrap();
    let b = run_structure(&ctx, &[ws.page.clone()], &cfg).unwrap();
    assert_eq!(emit_json(&a.document), emit_json(&b.document));
}
