//! Declarative pipeline configuration.
//!
//! A single versioned TOML file holds toggles, thresholds, model bindings,
//! backend policy, serving options and client configs. Unknown keys are
//! rejected with their location. Precedence is three-layered: built-in
//! defaults, then file values, then CLI flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backends::{Device, DType, EngineConfig, EngineKind, ModelDescriptor, TaskKind, TensorSpec};
use crate::error::{Error, Result};
use crate::kie::{ClientConfig, KieParams};
use crate::layout::{CutParams, LayoutParams, OrderMode};
use crate::ocr::DetectionParams;
use crate::runtime::{ModelSet, TaskBindings};

/// Supported configuration schema version.
pub const CONFIG_VERSION: u32 = 1;

/// Stage toggles, named after the CLI flags.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Toggles {
    pub use_doc_orientation_classify: bool,
    pub use_doc_unwarping: bool,
    pub use_textline_orientation: bool,
}

/// Reading-order mode setting; `auto` picks per page by line aspect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OrderModeSetting {
    #[default]
    Horizontal,
    Vertical,
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadingOrderConfig {
    pub mode: OrderModeSetting,
    pub min_gap: f64,
    pub shrink: f64,
}

impl Default for ReadingOrderConfig {
    fn default() -> Self {
        let cut = CutParams::default();
        Self {
            mode: OrderModeSetting::Horizontal,
            min_gap: cut.min_gap,
            shrink: cut.shrink,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendConfig {
    /// "cpu" or "gpu:<index>".
    pub device: String,
    pub fp16: bool,
    pub intra_op_threads: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            device: "cpu".into(),
            fp16: false,
            intra_op_threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdfConfig {
    /// Rasterization density for PDF pages.
    pub dpi: u32,
}

impl Default for PdfConfig {
    fn default() -> Self {
        Self { dpi: 200 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarkdownConfig {
    pub include_headers_footers: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServingConfig {
    pub host: String,
    pub port: u16,
    pub max_body_mib: usize,
    pub timeout_secs: u64,
    pub parallelism: usize,
    pub max_queue: usize,
}

impl Default for ServingConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            max_body_mib: 32,
            timeout_secs: 30,
            parallelism: 1,
            max_queue: 8,
        }
    }
}

/// One model registry entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub name: String,
    pub task: TaskKind,
    pub path: PathBuf,
    #[serde(default)]
    pub charset: Option<PathBuf>,
    #[serde(default = "default_hints")]
    pub hints: Vec<EngineKind>,
}

fn default_hints() -> Vec<EngineKind> {
    vec![EngineKind::Stub]
}

/// Resource profile; `low_memory` mirrors on-device constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResourceProfile {
    #[default]
    Default,
    LowMemory,
}

/// The full declarative configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    #[serde(rename = "version")]
    pub version: Option<u32>,
    pub profile: ResourceProfile,
    pub toggles: Toggles,
    pub detection: DetectionParamsConfig,
    pub layout: LayoutParamsConfig,
    pub reading_order: ReadingOrderConfig,
    pub backend: BackendConfig,
    pub pdf: PdfConfig,
    pub markdown: MarkdownConfig,
    pub kie: KieParamsConfig,
    pub serving: ServingConfig,
    pub models: Vec<ModelEntry>,
    /// Task name -> model name.
    pub bindings: BTreeMap<String, String>,
    /// Client configs keyed by module name (chat_bot, retriever, mllm).
    pub clients: BTreeMap<String, ClientConfig>,
}

/// Serde mirror of [`DetectionParams`] so unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionParamsConfig {
    pub bin_thresh: f64,
    pub box_score_thresh: f64,
    pub unclip_ratio: f64,
    pub min_box_side: f64,
    pub max_candidates: usize,
}

impl Default for DetectionParamsConfig {
    fn default() -> Self {
        let p = DetectionParams::default();
        Self {
            bin_thresh: p.bin_thresh,
            box_score_thresh: p.box_score_thresh,
            unclip_ratio: p.unclip_ratio,
            min_box_side: p.min_box_side,
            max_candidates: p.max_candidates,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutParamsConfig {
    pub score_thresh: f64,
    pub nms_iou: f64,
    pub containment_ratio: f64,
}

impl Default for LayoutParamsConfig {
    fn default() -> Self {
        let p = LayoutParams::default();
        Self {
            score_thresh: p.score_thresh,
            nms_iou: p.nms_iou,
            containment_ratio: p.containment_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KieParamsConfig {
    pub max_chars: usize,
    pub overlap: usize,
    pub top_k: usize,
}

impl Default for KieParamsConfig {
    fn default() -> Self {
        let p = KieParams::default();
        Self {
            max_chars: p.max_chars,
            overlap: p.overlap,
            top_k: p.top_k,
        }
    }
}

impl PipelineConfig {
    /// Parses and validates a TOML config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::ConfigError { location, message } => Error::ConfigError {
                location: format!("{}: {location}", path.display()),
                message,
            },
            other => other,
        })
    }

    /// Parses a TOML string; empty input yields all defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: PipelineConfig = toml::from_str(text).map_err(|e| {
            let location = e
                .span()
                .map(|span| {
                    let line = text[..span.start.min(text.len())]
                        .chars()
                        .filter(|&c| c == '\n')
                        .count()
                        + 1;
                    format!("line {line}")
                })
                .unwrap_or_else(|| "config".into());
            Error::ConfigError {
                location,
                message: e.message().to_string(),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Checks invariants that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.version {
            if v != CONFIG_VERSION {
                return Err(Error::config("version", format!("unsupported version {v}")));
            }
        }
        for (name, value) in [
            ("detection.bin_thresh", self.detection.bin_thresh),
            ("detection.box_score_thresh", self.detection.box_score_thresh),
            ("layout.score_thresh", self.layout.score_thresh),
            ("layout.nms_iou", self.layout.nms_iou),
            ("layout.containment_ratio", self.layout.containment_ratio),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::config(name, "must lie in [0, 1]"));
            }
        }
        if self.backend.intra_op_threads == 0 {
            return Err(Error::config("backend.intra_op_threads", "must be >= 1"));
        }
        if self.serving.parallelism == 0 {
            return Err(Error::config("serving.parallelism", "must be >= 1"));
        }
        if self.kie.max_chars <= self.kie.overlap {
            return Err(Error::config("kie.max_chars", "must exceed kie.overlap"));
        }
        self.device()?;
        for (task, model) in &self.bindings {
            parse_task(task)?;
            if !self.models.iter().any(|m| &m.name == model) {
                return Err(Error::config(
                    format!("bindings.{task}"),
                    format!("model '{model}' is not declared in [[models]]"),
                ));
            }
        }
        Ok(())
    }

    /// Applies the resource profile's caps.
    pub fn apply_profile(&mut self) {
        if self.profile == ResourceProfile::LowMemory {
            self.backend.intra_op_threads = 1;
            self.serving.parallelism = 1;
            self.serving.max_body_mib = self.serving.max_body_mib.min(8);
            self.pdf.dpi = self.pdf.dpi.min(120);
        }
    }

    pub fn device(&self) -> Result<Device> {
        let raw = self.backend.device.trim();
        if raw.eq_ignore_ascii_case("cpu") {
            return Ok(Device::Cpu);
        }
        if let Some(index) = raw.strip_prefix("gpu:").or_else(|| raw.strip_prefix("GPU:")) {
            let index: u32 = index
                .parse()
                .map_err(|_| Error::config("backend.device", format!("bad gpu index '{index}'")))?;
            return Ok(Device::Gpu(index));
        }
        if raw.eq_ignore_ascii_case("gpu") {
            return Ok(Device::Gpu(0));
        }
        Err(Error::config(
            "backend.device",
            format!("unknown device '{raw}' (use cpu or gpu:<index>)"),
        ))
    }

    pub fn engine_config(&self) -> Result<EngineConfig> {
        Ok(EngineConfig {
            fp16: self.backend.fp16,
            intra_op_threads: self.backend.intra_op_threads,
            device: self.device()?,
        })
    }

    pub fn detection_params(&self) -> DetectionParams {
        DetectionParams {
            bin_thresh: self.detection.bin_thresh,
            box_score_thresh: self.detection.box_score_thresh,
            unclip_ratio: self.detection.unclip_ratio,
            min_box_side: self.detection.min_box_side,
            max_candidates: self.detection.max_candidates,
        }
    }

    pub fn layout_params(&self) -> LayoutParams {
        LayoutParams {
            score_thresh: self.layout.score_thresh,
            nms_iou: self.layout.nms_iou,
            containment_ratio: self.layout.containment_ratio,
        }
    }

    pub fn cut_params(&self) -> CutParams {
        CutParams {
            min_gap: self.reading_order.min_gap,
            shrink: self.reading_order.shrink,
        }
    }

    pub fn fixed_order_mode(&self) -> Option<OrderMode> {
        match self.reading_order.mode {
            OrderModeSetting::Horizontal => Some(OrderMode::Horizontal),
            OrderModeSetting::Vertical => Some(OrderMode::Vertical),
            OrderModeSetting::Auto => None,
        }
    }

    pub fn kie_params(&self) -> KieParams {
        KieParams {
            max_chars: self.kie.max_chars,
            overlap: self.kie.overlap,
            top_k: self.kie.top_k,
        }
    }

    /// Builds the model set from the registry entries. Relative model paths
    /// resolve against `base`.
    pub fn model_set(&self, base: &Path) -> Result<ModelSet> {
        let mut set = ModelSet::new();
        for entry in &self.models {
            let resolve = |p: &PathBuf| {
                if p.is_absolute() {
                    p.clone()
                } else {
                    base.join(p)
                }
            };
            let mut descriptor = ModelDescriptor::new(&entry.name, entry.task, resolve(&entry.path));
            descriptor.charset_path = entry.charset.as_ref().map(resolve);
            descriptor.backend_hints = entry.hints.iter().copied().collect();
            descriptor.input_specs = vec![TensorSpec::new("image", DType::U8, vec![-1, -1, 3])];
            set.insert(descriptor)?;
        }
        Ok(set)
    }

    pub fn task_bindings(&self) -> Result<TaskBindings> {
        let mut bindings = TaskBindings::new();
        for (task, model) in &self.bindings {
            bindings.bind(parse_task(task)?, model.clone());
        }
        Ok(bindings)
    }

    pub fn client(&self, module: &str) -> Option<&ClientConfig> {
        self.clients.get(module)
    }
}

fn parse_task(name: &str) -> Result<TaskKind> {
    Ok(match name {
        "doc_orientation" => TaskKind::DocOrientation,
        "unwarp" => TaskKind::Unwarp,
        "text_det" => TaskKind::TextDet,
        "line_orientation" => TaskKind::LineOrientation,
        "text_rec" => TaskKind::TextRec,
        "layout" => TaskKind::Layout,
        "region_det" => TaskKind::RegionDet,
        "table_cls" => TaskKind::TableCls,
        "table_cell" => TaskKind::TableCell,
        "table_struct" => TaskKind::TableStruct,
        "formula" => TaskKind::Formula,
        "chart" => TaskKind::Chart,
        "seal" => TaskKind::Seal,
        other => {
            return Err(Error::config(
                format!("bindings.{other}"),
                "unknown task name",
            ))
        }
    })
}
