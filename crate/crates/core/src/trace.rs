//! Stage trace recording which pipeline stages actually ran.

/// Pipeline stages, in the order they can occur.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    DocOrientation,
    Unwarp,
    TextDetection,
    LineOrientation,
    TextRecognition,
    LayoutDetection,
    RegionDetection,
    TableRecognition,
    FormulaRecognition,
    ChartParsing,
    SealRecognition,
    ReadingOrder,
    CaptionLinking,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::DocOrientation => "doc_orientation",
            Stage::Unwarp => "unwarp",
            Stage::TextDetection => "text_detection",
            Stage::LineOrientation => "line_orientation",
            Stage::TextRecognition => "text_recognition",
            Stage::LayoutDetection => "layout_detection",
            Stage::RegionDetection => "region_detection",
            Stage::TableRecognition => "table_recognition",
            Stage::FormulaRecognition => "formula_recognition",
            Stage::ChartParsing => "chart_parsing",
            Stage::SealRecognition => "seal_recognition",
            Stage::ReadingOrder => "reading_order",
            Stage::CaptionLinking => "caption_linking",
        }
    }
}

/// Ordered record of executed stages (each stage appears at most once).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageTrace {
    stages: Vec<Stage>,
}

impl StageTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, stage: Stage) {
        if !self.stages.contains(&stage) {
            self.stages.push(stage);
        }
    }

    pub fn contains(&self, stage: Stage) -> bool {
        self.stages.contains(&stage)
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }
}
