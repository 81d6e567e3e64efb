//! The document-to-structure pipeline: preprocessing, full-page OCR, layout
//! analysis, per-item recognition, reading order and caption linking.

use image::RgbImage;

use crate::backends::{TaskKind, Tensor, TensorMap};
use crate::compose::{apply_caption_links, link_captions};
use crate::document::{
    Document, DocumentItem, ItemContent, LayoutBlock, LayoutCategory, Page, TextLine,
};
use crate::error::{Error, Result};
use crate::geometry::{BBox, Point, Polygon, Quad};
use crate::items::{self, StructureTokens};
use crate::layout::{
    assign_regions, postprocess_layout, recover_reading_order, CutParams, LayoutParams, OrderMode,
    RawDetection,
};
use crate::ocr::{self, preprocess, OcrConfig};
use crate::runtime::InferenceContext;
use crate::trace::{Stage, StageTrace};

/// Configuration for the structure pipeline.
#[derive(Debug, Clone)]
pub struct StructureConfig {
    /// OCR toggles, detection thresholds and model bindings. The preprocessing
    /// toggles apply at page level; the inner OCR pass runs with
    /// preprocessing disabled.
    pub ocr: OcrConfig,
    pub layout: LayoutParams,
    pub cut: CutParams,
    /// Fixed reading mode, or None for per-page auto-detection from line
    /// aspect ratios.
    pub order_mode: Option<OrderMode>,
}

impl Default for StructureConfig {
    fn default() -> Self {
        Self {
            ocr: OcrConfig::default(),
            layout: LayoutParams::default(),
            cut: CutParams::default(),
            order_mode: Some(OrderMode::Horizontal),
        }
    }
}

/// An extracted image crop destined for disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageCrop {
    pub name: String,
    pub image: RgbImage,
}

/// Result of a structure run.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureOutcome {
    pub document: Document,
    pub trace: StageTrace,
    pub crops: Vec<ImageCrop>,
    pub warnings: Vec<String>,
}

fn image_inputs(img: &RgbImage) -> TensorMap {
    TensorMap::from([("image".to_string(), Tensor::from_image(img))])
}

fn category_from_class(class: i64) -> LayoutCategory {
    match class {
        0 => LayoutCategory::Text,
        1 => LayoutCategory::Title,
        2 => LayoutCategory::Table,
        3 => LayoutCategory::Formula,
        4 => LayoutCategory::Chart,
        5 => LayoutCategory::Image,
        6 => LayoutCategory::SealText,
        7 => LayoutCategory::Caption,
        8 => LayoutCategory::Header,
        9 => LayoutCategory::Footer,
        _ => LayoutCategory::Other,
    }
}

/// Class id emitted by the layout model contract for a category.
pub fn class_from_category(category: LayoutCategory) -> i64 {
    match category {
        LayoutCategory::Text => 0,
        LayoutCategory::Title => 1,
        LayoutCategory::Table => 2,
        LayoutCategory::Formula => 3,
        LayoutCategory::Chart => 4,
        LayoutCategory::Image => 5,
        LayoutCategory::SealText => 6,
        LayoutCategory::Caption => 7,
        LayoutCategory::Header => 8,
        LayoutCategory::Footer => 9,
        LayoutCategory::Other => 10,
    }
}

/// Parses the layout/region model output: F32 [N, 6] rows of
/// (x0, y0, x1, y1, score, class).
fn parse_detections(outputs: &TensorMap) -> Result<Vec<RawDetection>> {
    let tensor = outputs
        .get("boxes")
        .ok_or_else(|| Error::ShapeMismatch("layout model must output 'boxes'".into()))?;
    let shape = tensor.shape();
    if shape.len() != 2 || shape[1] != 6 {
        return Err(Error::ShapeMismatch(format!(
            "layout boxes must be [N, 6], got {shape:?}"
        )));
    }
    let values = tensor.as_f32_vec()?;
    Ok(values
        .chunks_exact(6)
        .map(|row| {
            RawDetection::new(
                BBox::from_corners(
                    Point::new(row[0] as f64, row[1] as f64),
                    Point::new(row[2] as f64, row[3] as f64),
                ),
                category_from_class(row[5] as i64),
                row[4] as f64,
            )
        })
        .collect())
}

/// Axis-aligned crop of a block.
fn crop_block(image: &RgbImage, bbox: &BBox) -> Result<RgbImage> {
    ocr::crop::warp_quad(
        image,
        &Quad::from_bbox(bbox),
        bbox.width().round().max(1.0) as u32,
        bbox.height().round().max(1.0) as u32,
    )
}

fn lines_in_block<'a>(lines: &'a [TextLine], bbox: &BBox) -> Vec<&'a TextLine> {
    lines
        .iter()
        .filter(|l| bbox.contains_point(l.geometry.bbox().center()))
        .collect()
}

fn join_lines(lines: &[&TextLine]) -> String {
    let mut sorted: Vec<&&TextLine> = lines.iter().collect();
    sorted.sort_by(|a, b| {
        let ka = (a.geometry.bbox().y0, a.geometry.bbox().x0);
        let kb = (b.geometry.bbox().y0, b.geometry.bbox().x0);
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });
    sorted
        .iter()
        .map(|l| l.text.as_str())
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Forward point mapping of a clockwise image rotation.
fn rotate_point_forward(p: Point, degrees_cw: u16, w: f64, h: f64) -> Point {
    match degrees_cw % 360 {
        90 => Point::new(h - p.y, p.x),
        180 => Point::new(w - p.x, h - p.y),
        270 => Point::new(p.y, w - p.x),
        _ => p,
    }
}

/// Shifts page-frame lines into block-crop coordinates, applying the table
/// rotation when one was detected.
fn localize_lines(
    lines: &[&TextLine],
    block: &BBox,
    rotation_cw: u16,
    crop_w: f64,
    crop_h: f64,
) -> Vec<TextLine> {
    lines
        .iter()
        .map(|line| {
            let points = line.geometry.points.map(|p| {
                let local = Point::new(p.x - block.x0, p.y - block.y0);
                rotate_point_forward(local, rotation_cw, crop_w, crop_h)
            });
            TextLine {
                geometry: Quad::new(points).normalized(),
                text: line.text.clone(),
                score: line.score,
                orientation: line.orientation,
            }
        })
        .collect()
}

struct PageBuilder<'a> {
    ctx: &'a InferenceContext,
    cfg: &'a StructureConfig,
    warnings: Vec<String>,
    crops: Vec<(usize, RgbImage)>,
}

impl<'a> PageBuilder<'a> {
    fn table_item(
        &mut self,
        image: &RgbImage,
        block: &LayoutBlock,
        page_lines: &[TextLine],
        trace: &mut StageTrace,
    ) -> Result<ItemContent> {
        trace.record(Stage::TableRecognition);
        let mut crop = crop_block(image, &block.bbox)?;
        let mut rotation_cw = 0u16;

        if let Some(cls_model) = self.cfg.ocr.bindings.get(TaskKind::TableCls) {
            let outputs = self.ctx.run_model(cls_model, &image_inputs(&crop))?;
            let orientation_scores = outputs
                .get("orientation_scores")
                .ok_or_else(|| {
                    Error::ShapeMismatch("table classifier must output 'orientation_scores'".into())
                })?
                .as_f32_vec()?;
            let frame_scores = outputs
                .get("frame_scores")
                .ok_or_else(|| {
                    Error::ShapeMismatch("table classifier must output 'frame_scores'".into())
                })?
                .as_f32_vec()?;
            let route = items::route_table(&orientation_scores, &frame_scores);
            tracing::debug!(?route, "table routed");
            rotation_cw = route.orientation.correction_degrees();
            if rotation_cw != 0 {
                crop = preprocess::rotate_image(&crop, rotation_cw);
            }
        }

        let cell_model = self.cfg.ocr.bindings.require(TaskKind::TableCell)?;
        let cell_outputs = self.ctx.run_model(cell_model, &image_inputs(&crop))?;
        let cells_tensor = cell_outputs
            .get("boxes")
            .ok_or_else(|| Error::ShapeMismatch("cell model must output 'boxes'".into()))?;
        let shape = cells_tensor.shape();
        if shape.len() != 2 || shape[1] < 4 {
            return Err(Error::ShapeMismatch(format!(
                "cell boxes must be [N, >=4], got {shape:?}"
            )));
        }
        let stride = shape[1];
        let cells: Vec<BBox> = cells_tensor
            .as_f32_vec()?
            .chunks_exact(stride)
            .map(|row| {
                BBox::from_corners(
                    Point::new(row[0] as f64, row[1] as f64),
                    Point::new(row[2] as f64, row[3] as f64),
                )
            })
            .collect();

        let struct_model = self.cfg.ocr.bindings.require(TaskKind::TableStruct)?;
        let struct_outputs = self.ctx.run_model(struct_model, &image_inputs(&crop))?;
        let token_text = struct_outputs
            .get("tokens")
            .ok_or_else(|| Error::ShapeMismatch("structure model must output 'tokens'".into()))?
            .as_text()?;
        let tokens = StructureTokens::parse(&token_text)?;

        let local_lines = localize_lines(
            &lines_in_block(page_lines, &block.bbox),
            &block.bbox,
            rotation_cw,
            crop.width() as f64,
            crop.height() as f64,
        );
        let html = items::assemble_table_html(&tokens, &cells, &local_lines)?;
        Ok(ItemContent::Table { html })
    }

    fn seal_item(
        &mut self,
        image: &RgbImage,
        block: &LayoutBlock,
        page_lines: &[TextLine],
        trace: &mut StageTrace,
    ) -> Result<ItemContent> {
        let Some(seal_model) = self.cfg.ocr.bindings.get(TaskKind::Seal) else {
            // No curved-text model bound: fall back to the page OCR lines.
            let text = join_lines(&lines_in_block(page_lines, &block.bbox));
            return Ok(ItemContent::Seal { text });
        };
        trace.record(Stage::SealRecognition);
        let crop = crop_block(image, &block.bbox)?;
        let outputs = self.ctx.run_model(seal_model, &image_inputs(&crop))?;
        let poly_tensor = outputs
            .get("polygon")
            .ok_or_else(|| Error::ShapeMismatch("seal model must output 'polygon'".into()))?;
        let shape = poly_tensor.shape();
        if shape.len() != 2 || shape[1] != 2 {
            return Err(Error::ShapeMismatch(format!(
                "seal polygon must be [P, 2], got {shape:?}"
            )));
        }
        let points: Vec<Point> = poly_tensor
            .as_f32_vec()?
            .chunks_exact(2)
            .map(|p| Point::new(p[0] as f64, p[1] as f64))
            .collect();
        let polygon = Polygon::new(points)?;
        let rectified = items::rectify_seal_text(&polygon, &crop)?;

        let (text, _score, _orientation) = {
            let mut inner_trace = StageTrace::new();
            ocr::recognize_line(self.ctx, &self.cfg.ocr, &rectified, &mut inner_trace)?
        };
        Ok(ItemContent::Seal { text })
    }

    fn build_item(
        &mut self,
        image: &RgbImage,
        page_index: usize,
        block: &LayoutBlock,
        block_index: usize,
        page_lines: &[TextLine],
        trace: &mut StageTrace,
    ) -> Result<ItemContent> {
        let text = || join_lines(&lines_in_block(page_lines, &block.bbox));
        Ok(match block.category {
            LayoutCategory::Text | LayoutCategory::Other => ItemContent::Text { text: text() },
            LayoutCategory::Title => ItemContent::Title {
                text: text(),
                level: 1,
            },
            LayoutCategory::Caption => ItemContent::Caption { text: text() },
            LayoutCategory::Header => ItemContent::Header { text: text() },
            LayoutCategory::Footer => ItemContent::Footer { text: text() },
            LayoutCategory::Image => {
                let crop = crop_block(image, &block.bbox)?;
                self.crops.push((block_index, crop));
                // The final path is assigned after ordering.
                ItemContent::Image {
                    path: String::new(),
                }
            }
            LayoutCategory::Table => self.table_item(image, block, page_lines, trace)?,
            LayoutCategory::Formula => {
                trace.record(Stage::FormulaRecognition);
                let model = self.cfg.ocr.bindings.require(TaskKind::Formula)?;
                let crop = crop_block(image, &block.bbox)?;
                match items::recognize_formula(self.ctx, model, &crop) {
                    Ok(latex) => ItemContent::Formula { latex },
                    Err(Error::FormulaInvalid { reason, raw }) => {
                        self.warnings.push(format!(
                            "page {page_index}: invalid formula output ({reason}); kept as text"
                        ));
                        ItemContent::Text { text: raw }
                    }
                    Err(other) => return Err(other),
                }
            }
            LayoutCategory::Chart => {
                trace.record(Stage::ChartParsing);
                let model = self.cfg.ocr.bindings.require(TaskKind::Chart)?;
                let crop = crop_block(image, &block.bbox)?;
                match items::chart_to_table(self.ctx, model, &crop) {
                    Ok(markdown_table) => ItemContent::Chart { markdown_table },
                    Err(Error::ChartInvalid { reason, raw }) => {
                        self.warnings.push(format!(
                            "page {page_index}: invalid chart output ({reason}); kept as text"
                        ));
                        ItemContent::Text { text: raw }
                    }
                    Err(other) => return Err(other),
                }
            }
            LayoutCategory::SealText => self.seal_item(image, block, page_lines, trace)?,
        })
    }
}

/// Majority vote over line aspect ratios: vertical pages have mostly tall
/// line quads.
fn detect_order_mode(lines: &[TextLine]) -> OrderMode {
    let vertical = lines
        .iter()
        .filter(|l| {
            let p = &l.geometry.points;
            let width = p[0].distance(&p[1]).max(p[3].distance(&p[2]));
            let height = p[0].distance(&p[3]).max(p[1].distance(&p[2]));
            height > width
        })
        .count();
    if lines.is_empty() || vertical * 2 <= lines.len() {
        OrderMode::Horizontal
    } else {
        OrderMode::Vertical
    }
}

/// Runs the full structure pipeline over pre-rasterized page images.
pub fn run_structure(
    ctx: &InferenceContext,
    images: &[RgbImage],
    cfg: &StructureConfig,
) -> Result<StructureOutcome> {
    let mut trace = StageTrace::new();
    let mut document = Document::new("");
    let mut all_crops = Vec::new();
    let mut warnings = Vec::new();

    for (page_index, original) in images.iter().enumerate() {
        // Page-level preprocessing; downstream geometry refers to the
        // preprocessed frame.
        let mut image = original.clone();
        if cfg.ocr.use_doc_orientation_classify {
            let model = cfg.ocr.bindings.require(TaskKind::DocOrientation)?;
            trace.record(Stage::DocOrientation);
            let rotation = preprocess::classify_doc_orientation(ctx, model, &image)?;
            let correction = rotation.correction_degrees();
            if correction != 0 {
                image = preprocess::rotate_image(&image, correction);
            }
        }
        if cfg.ocr.use_doc_unwarping {
            let model = cfg.ocr.bindings.require(TaskKind::Unwarp)?;
            trace.record(Stage::Unwarp);
            image = preprocess::unwarp(ctx, model, &image)?;
        }

        // Inner OCR pass with preprocessing disabled.
        let ocr_cfg = OcrConfig {
            use_doc_orientation_classify: false,
            use_doc_unwarping: false,
            ..cfg.ocr.clone()
        };
        let (ocr_page, ocr_trace) = ocr::run_ocr_traced(ctx, &image, &ocr_cfg)?;
        for stage in ocr_trace.stages() {
            trace.record(*stage);
        }
        let page_lines = ocr_page.text_lines;

        // Layout and region detection.
        let layout_model = cfg.ocr.bindings.require(TaskKind::Layout)?;
        trace.record(Stage::LayoutDetection);
        let layout_outputs = ctx.run_model(layout_model, &image_inputs(&image))?;
        let detections = parse_detections(&layout_outputs)?;
        let blocks = postprocess_layout(&detections, &cfg.layout);

        let regions: Vec<RawDetection> = match cfg.ocr.bindings.get(TaskKind::RegionDet) {
            Some(region_model) => {
                trace.record(Stage::RegionDetection);
                let outputs = ctx.run_model(region_model, &image_inputs(&image))?;
                let raw = parse_detections(&outputs)?;
                postprocess_layout(&raw, &cfg.layout)
                    .into_iter()
                    .map(|b| RawDetection::new(b.bbox, b.category, b.score))
                    .collect()
            }
            None => Vec::new(),
        };

        let mode = cfg
            .order_mode
            .unwrap_or_else(|| detect_order_mode(&page_lines));
        let blocks = assign_regions(&blocks, &regions, mode, &cfg.cut);

        // Per-block item recognition.
        let mut builder = PageBuilder {
            ctx,
            cfg,
            warnings: Vec::new(),
            crops: Vec::new(),
        };
        let mut items: Vec<DocumentItem> = Vec::with_capacity(blocks.len());
        for (block_index, block) in blocks.iter().enumerate() {
            let content = builder.build_item(
                &image,
                page_index,
                block,
                block_index,
                &page_lines,
                &mut trace,
            )?;
            let mut item = DocumentItem::new(content, block.bbox, page_index);
            item.region_id = block.region_id;
            items.push(item);
        }
        warnings.append(&mut builder.warnings);

        // Reading order over the blocks, then caption linking.
        trace.record(Stage::ReadingOrder);
        let order = recover_reading_order(&blocks, mode, &cfg.cut);
        for (position, &block_index) in order.iter().enumerate() {
            items[block_index].order_index = position;
        }
        trace.record(Stage::CaptionLinking);

        // Crop names follow the final order index.
        for (block_index, crop) in builder.crops {
            let name = format!("page{page_index}_item{}.png", items[block_index].order_index);
            if let ItemContent::Image { path } = &mut items[block_index].content {
                *path = name.clone();
            }
            all_crops.push(ImageCrop { name, image: crop });
        }

        let mut page = Page::new(page_index, image.width() as f64, image.height() as f64);
        page.items = items;
        page.sort_items();
        // Links index into the sorted item list.
        let links = link_captions(&page.items);
        apply_caption_links(&mut page.items, &links);
        page.text_lines = page_lines;
        document.pages.push(page);
    }

    Ok(StructureOutcome {
        document,
        trace,
        crops: all_crops,
        warnings,
    })
}
