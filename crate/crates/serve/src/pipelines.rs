//! Pipeline handles shared by the HTTP and MCP servers.

use std::path::Path;
use std::sync::Arc;

use ocrkit_core::compose::{emit_json, emit_markdown, MarkdownOptions};
use ocrkit_core::config::PipelineConfig;
use ocrkit_core::document::Document;
use ocrkit_core::error::Result;
use ocrkit_core::ocr::{self, OcrConfig};
use ocrkit_core::pdfio;
use ocrkit_core::pipeline::{run_structure, StructureConfig};
use ocrkit_core::runtime::InferenceContext;

/// Which pipeline a server exposes as primary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineKind {
    Ocr,
    Structure,
}

impl PipelineKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PipelineKind::Ocr => "ocr",
            PipelineKind::Structure => "structure",
        }
    }
}

/// A ready-to-run pair of pipelines over one inference context.
pub struct PipelineHandle {
    ctx: Arc<InferenceContext>,
    ocr_cfg: OcrConfig,
    structure_cfg: StructureConfig,
    markdown: MarkdownOptions,
    dpi: u32,
}

impl PipelineHandle {
    /// Builds pipelines from a declarative config; relative model paths
    /// resolve against `base`.
    pub fn from_config(cfg: &PipelineConfig, base: &Path) -> Result<Self> {
        let models = cfg.model_set(base)?;
        let registry = ocrkit_core::backends::EngineRegistry::with_stub();
        let ctx = Arc::new(InferenceContext::new(models, registry, cfg.engine_config()?));
        let bindings = cfg.task_bindings()?;
        let ocr_cfg = OcrConfig {
            use_doc_orientation_classify: cfg.toggles.use_doc_orientation_classify,
            use_doc_unwarping: cfg.toggles.use_doc_unwarping,
            use_textline_orientation: cfg.toggles.use_textline_orientation,
            detection: cfg.detection_params(),
            bindings,
        };
        let structure_cfg = StructureConfig {
            ocr: ocr_cfg.clone(),
            layout: cfg.layout_params(),
            cut: cfg.cut_params(),
            order_mode: cfg.fixed_order_mode(),
        };
        Ok(Self {
            ctx,
            ocr_cfg,
            structure_cfg,
            markdown: MarkdownOptions {
                include_headers_footers: cfg.markdown.include_headers_footers,
            },
            dpi: cfg.pdf.dpi,
        })
    }

    /// Runs plain OCR over input bytes (image or PDF) and returns the
    /// canonical JSON.
    pub fn run_ocr_bytes(&self, bytes: &[u8]) -> Result<String> {
        let images = pdfio::load_bytes(bytes, self.dpi)?;
        let mut doc = Document::new("request");
        for (index, image) in images.iter().enumerate() {
            let mut page = ocr::run_ocr(&self.ctx, image, &self.ocr_cfg)?;
            page.index = index;
            doc.pages.push(page.with_lines_as_items());
        }
        Ok(emit_json(&doc))
    }

    /// Runs the structure pipeline over input bytes and returns the
    /// canonical JSON plus the Markdown rendering.
    pub fn run_structure_bytes(&self, bytes: &[u8]) -> Result<(String, String)> {
        let images = pdfio::load_bytes(bytes, self.dpi)?;
        let outcome = run_structure(&self.ctx, &images, &self.structure_cfg)?;
        let json = emit_json(&outcome.document);
        let markdown = emit_markdown(&outcome.document, &self.markdown);
        Ok((json, markdown))
    }
}

/// Splices a markdown field into a canonical JSON document, keeping the
/// output bytes deterministic.
pub fn json_with_markdown(canonical: &str, markdown: &str) -> String {
    let escaped = serde_json::to_string(markdown).expect("string serialization cannot fail");
    let body = canonical.strip_suffix('}').unwrap_or(canonical);
    format!("{body},\"markdown\":{escaped}}}")
}
