//! Deterministic fixture workspaces for hermetic runs.
//!
//! Builds synthetic page images together with the stub-engine fixture trees
//! and a pipeline config that binds them, so the full pipelines run without
//! any trained models. Used by the test suites and the demo generator.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};

use crate::backends::{stub, TaskKind, Tensor, TensorMap};
use crate::document::LayoutCategory;
use crate::error::Result;
use crate::geometry::{BBox, Quad};
use crate::ocr::{extract_text_regions, Charset, DetectionParams, ProbabilityMap};
use crate::pipeline::class_from_category;

/// Character set used by all fixture pages.
pub const FIXTURE_CHARSET: &str =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .,";

/// A text line placed on a fixture page.
#[derive(Debug, Clone)]
pub struct FixtureLine {
    pub rect: BBox,
    pub text: String,
}

impl FixtureLine {
    pub fn new(rect: BBox, text: impl Into<String>) -> Self {
        Self {
            rect,
            text: text.into(),
        }
    }
}

/// A layout block placed on a fixture page.
#[derive(Debug, Clone)]
pub struct FixtureBlock {
    pub rect: BBox,
    pub category: LayoutCategory,
    pub score: f64,
}

/// Declarative description of a synthetic page.
#[derive(Debug, Clone, Default)]
pub struct PageSpec {
    pub width: u32,
    pub height: u32,
    pub lines: Vec<FixtureLine>,
    pub blocks: Vec<FixtureBlock>,
    pub regions: Vec<BBox>,
    /// Table cell boxes in crop coordinates plus the structure token string,
    /// keyed by the index of the table block in `blocks`.
    pub tables: BTreeMap<usize, (Vec<BBox>, String)>,
}

/// Paths of one generated fixture workspace.
#[derive(Debug, Clone)]
pub struct FixtureWorkspace {
    pub root: PathBuf,
    pub config_path: PathBuf,
    pub input_path: PathBuf,
    pub page: RgbImage,
}

fn draw_rect(img: &mut RgbImage, rect: &BBox, color: Rgb<u8>) {
    let x0 = rect.x0.max(0.0) as u32;
    let y0 = rect.y0.max(0.0) as u32;
    let x1 = (rect.x1 as u32).min(img.width());
    let y1 = (rect.y1 as u32).min(img.height());
    for y in y0..y1 {
        for x in x0..x1 {
            img.put_pixel(x, y, color);
        }
    }
}

/// Renders the page: white background with a dark band per text line and a
/// light frame per block.
pub fn render_page(spec: &PageSpec) -> RgbImage {
    let mut img = RgbImage::from_pixel(spec.width, spec.height, Rgb([255, 255, 255]));
    for block in &spec.blocks {
        draw_rect(&mut img, &block.rect, Rgb([235, 235, 235]));
    }
    for line in &spec.lines {
        draw_rect(&mut img, &line.rect, Rgb([40, 40, 40]));
    }
    img
}

/// One-hot logits implementing `text` under greedy CTC decoding: a blank is
/// inserted between repeated graphemes.
pub fn logits_for_text(text: &str, charset: &Charset) -> Result<Tensor> {
    let classes = charset.class_count();
    let mut ids: Vec<usize> = Vec::new();
    let mut prev: Option<usize> = None;
    for ch in text.chars() {
        let class = charset.class_of(&ch.to_string()).ok_or_else(|| {
            crate::error::Error::InvalidCharset(format!("grapheme '{ch}' not in fixture charset"))
        })?;
        if prev == Some(class) {
            ids.push(Charset::BLANK);
        }
        ids.push(class);
        prev = Some(class);
    }
    if ids.is_empty() {
        ids.push(Charset::BLANK);
    }
    let mut values = vec![0.0f32; ids.len() * classes];
    for (t, &id) in ids.iter().enumerate() {
        values[t * classes + id] = 1.0;
    }
    Tensor::from_f32(vec![ids.len(), classes], &values)
}

fn image_inputs(img: &RgbImage) -> TensorMap {
    TensorMap::from([("image".to_string(), Tensor::from_image(img))])
}

fn probability_map_tensor(spec: &PageSpec) -> Tensor {
    let (w, h) = (spec.width as usize, spec.height as usize);
    let mut values = vec![0.0f32; w * h];
    for line in &spec.lines {
        for y in line.rect.y0 as usize..(line.rect.y1 as usize).min(h) {
            for x in line.rect.x0 as usize..(line.rect.x1 as usize).min(w) {
                values[y * w + x] = 1.0;
            }
        }
    }
    Tensor::from_f32(vec![h, w], &values).expect("shape matches buffer")
}

fn boxes_tensor(rows: &[(BBox, f64, i64)]) -> Tensor {
    let mut values = Vec::with_capacity(rows.len() * 6);
    for (bbox, score, class) in rows {
        values.extend_from_slice(&[
            bbox.x0 as f32,
            bbox.y0 as f32,
            bbox.x1 as f32,
            bbox.y1 as f32,
            *score as f32,
            *class as f32,
        ]);
    }
    Tensor::from_f32(vec![rows.len(), 6], &values).expect("shape matches buffer")
}

/// Detection parameters the fixture configs pin: no unclip so detected quads
/// equal the drawn line rectangles exactly.
pub fn fixture_detection_params() -> DetectionParams {
    DetectionParams {
        unclip_ratio: 0.0,
        ..DetectionParams::default()
    }
}

/// Generates the full fixture workspace for a page spec: page image, stub
/// model directories, charset and a pipeline config binding everything.
pub fn generate(root: &Path, spec: &PageSpec) -> Result<FixtureWorkspace> {
    std::fs::create_dir_all(root)?;
    let models_dir = root.join("models");
    let page = render_page(spec);
    let input_path = root.join("page.png");
    page.save(&input_path)?;

    let charset_path = root.join("charset.txt");
    let charset_text: String = FIXTURE_CHARSET
        .chars()
        .map(|c| format!("{c}\n"))
        .collect();
    std::fs::write(&charset_path, &charset_text)?;
    let charset = Charset::from_text(&charset_text)?;

    let page_inputs = image_inputs(&page);

    // Preprocessing models: identity behavior.
    stub::write_fixtures(
        &models_dir.join("doc_orient"),
        &page_inputs,
        &TensorMap::from([(
            "scores".to_string(),
            Tensor::from_f32(vec![4], &[1.0, 0.0, 0.0, 0.0])?,
        )]),
    )?;
    stub::write_fixtures(
        &models_dir.join("unwarp"),
        &page_inputs,
        &TensorMap::from([("image".to_string(), Tensor::from_image(&page))]),
    )?;

    // Text detection over the whole page.
    stub::write_fixtures(
        &models_dir.join("det"),
        &page_inputs,
        &TensorMap::from([("prob_map".to_string(), probability_map_tensor(spec))]),
    )?;

    // Recognition (and line orientation) fixtures per detected crop. The
    // same postprocess the pipeline runs yields the same crops and hashes.
    let map = ProbabilityMap::from_tensor(&probability_map_tensor(spec))?;
    let quads = extract_text_regions(&map, &fixture_detection_params());
    for quad in &quads {
        let crop = crate::ocr::crop_line(&page, quad)?;
        let crop_inputs = image_inputs(&crop);
        let center = quad.bbox().center();
        let line = spec
            .lines
            .iter()
            .find(|l| l.rect.contains_point(center))
            .ok_or_else(|| {
                crate::error::Error::config("fixtures", "detected quad matches no line")
            })?;
        stub::write_fixtures(
            &models_dir.join("rec"),
            &crop_inputs,
            &TensorMap::from([(
                "logits".to_string(),
                logits_for_text(&line.text, &charset)?,
            )]),
        )?;
        stub::write_fixtures(
            &models_dir.join("line_orient"),
            &crop_inputs,
            &TensorMap::from([(
                "scores".to_string(),
                Tensor::from_f32(vec![2], &[1.0, 0.0])?,
            )]),
        )?;
    }

    // Layout and region detection.
    let layout_rows: Vec<(BBox, f64, i64)> = spec
        .blocks
        .iter()
        .map(|b| (b.rect, b.score, class_from_category(b.category)))
        .collect();
    stub::write_fixtures(
        &models_dir.join("layout"),
        &page_inputs,
        &TensorMap::from([("boxes".to_string(), boxes_tensor(&layout_rows))]),
    )?;
    let region_rows: Vec<(BBox, f64, i64)> = spec
        .regions
        .iter()
        .map(|r| (*r, 0.95, class_from_category(LayoutCategory::Other)))
        .collect();
    stub::write_fixtures(
        &models_dir.join("region"),
        &page_inputs,
        &TensorMap::from([("boxes".to_string(), boxes_tensor(&region_rows))]),
    )?;

    // Table models per table block, keyed by the table crop.
    for (&block_index, (cells, tokens)) in &spec.tables {
        let block = &spec.blocks[block_index];
        let crop = crate::ocr::warp_quad(
            &page,
            &Quad::from_bbox(&block.rect),
            block.rect.width().round() as u32,
            block.rect.height().round() as u32,
        )?;
        let crop_inputs = image_inputs(&crop);
        stub::write_fixtures(
            &models_dir.join("table_cls"),
            &crop_inputs,
            &TensorMap::from([
                (
                    "orientation_scores".to_string(),
                    Tensor::from_f32(vec![4], &[1.0, 0.0, 0.0, 0.0])?,
                ),
                (
                    "frame_scores".to_string(),
                    Tensor::from_f32(vec![2], &[0.9, 0.1])?,
                ),
            ]),
        )?;
        let mut cell_values = Vec::with_capacity(cells.len() * 6);
        for cell in cells {
            cell_values.extend_from_slice(&[
                cell.x0 as f32,
                cell.y0 as f32,
                cell.x1 as f32,
                cell.y1 as f32,
                0.95,
                0.0,
            ]);
        }
        stub::write_fixtures(
            &models_dir.join("table_cell"),
            &crop_inputs,
            &TensorMap::from([(
                "boxes".to_string(),
                Tensor::from_f32(vec![cells.len(), 6], &cell_values)?,
            )]),
        )?;
        stub::write_fixtures(
            &models_dir.join("table_struct"),
            &crop_inputs,
            &TensorMap::from([("tokens".to_string(), Tensor::from_text(tokens))]),
        )?;
    }

    let config_path = root.join("config.toml");
    let has_tables = !spec.tables.is_empty();
    let has_regions = !spec.regions.is_empty();
    let mut config = String::from(
        "version = 1\n\n[detection]\nunclip_ratio = 0.0\n\n[[models]]\nname = \"doc_orient\"\ntask = \"doc_orientation\"\npath = \"models/doc_orient\"\n\n[[models]]\nname = \"unwarp\"\ntask = \"unwarp\"\npath = \"models/unwarp\"\n\n[[models]]\nname = \"det\"\ntask = \"text_det\"\npath = \"models/det\"\n\n[[models]]\nname = \"rec\"\ntask = \"text_rec\"\npath = \"models/rec\"\ncharset = \"charset.txt\"\n\n[[models]]\nname = \"line_orient\"\ntask = \"line_orientation\"\npath = \"models/line_orient\"\n\n[[models]]\nname = \"layout\"\ntask = \"layout\"\npath = \"models/layout\"\n",
    );
    if has_regions {
        config.push_str(
            "\n[[models]]\nname = \"region\"\ntask = \"region_det\"\npath = \"models/region\"\n",
        );
    }
    if has_tables {
        config.push_str(
            "\n[[models]]\nname = \"table_cls\"\ntask = \"table_cls\"\npath = \"models/table_cls\"\n\n[[models]]\nname = \"table_cell\"\ntask = \"table_cell\"\npath = \"models/table_cell\"\n\n[[models]]\nname = \"table_struct\"\ntask = \"table_struct\"\npath = \"models/table_struct\"\n",
        );
    }
    config.push_str(
        "\n[bindings]\ndoc_orientation = \"doc_orient\"\nunwarp = \"unwarp\"\ntext_det = \"det\"\ntext_rec = \"rec\"\nline_orientation = \"line_orient\"\nlayout = \"layout\"\n",
    );
    if has_regions {
        config.push_str("region_det = \"region\"\n");
    }
    if has_tables {
        config.push_str("table_cls = \"table_cls\"\ntable_cell = \"table_cell\"\ntable_struct = \"table_struct\"\n");
    }
    std::fs::write(&config_path, config)?;

    Ok(FixtureWorkspace {
        root: root.to_path_buf(),
        config_path,
        input_path,
        page,
    })
}

/// A one-paragraph page: single text block with two lines.
pub fn simple_page_spec() -> PageSpec {
    PageSpec {
        width: 400,
        height: 200,
        lines: vec![
            FixtureLine::new(BBox::new(40.0, 50.0, 360.0, 74.0), "hello parser world"),
            FixtureLine::new(BBox::new(40.0, 90.0, 360.0, 114.0), "second line here"),
        ],
        blocks: vec![FixtureBlock {
            rect: BBox::new(30.0, 40.0, 370.0, 130.0),
            category: LayoutCategory::Text,
            score: 0.95,
        }],
        regions: Vec::new(),
        tables: BTreeMap::new(),
    }
}

/// The two-column page: title, two text columns, a figure with caption, a
/// 2x2 table, plus a running header and footer.
pub fn two_column_page_spec() -> PageSpec {
    let blocks = vec![
        FixtureBlock {
            rect: BBox::new(300.0, 5.0, 500.0, 25.0),
            category: LayoutCategory::Header,
            score: 0.9,
        },
        FixtureBlock {
            rect: BBox::new(100.0, 40.0, 700.0, 80.0),
            category: LayoutCategory::Title,
            score: 0.97,
        },
        FixtureBlock {
            rect: BBox::new(60.0, 120.0, 380.0, 400.0),
            category: LayoutCategory::Text,
            score: 0.96,
        },
        FixtureBlock {
            rect: BBox::new(60.0, 420.0, 380.0, 700.0),
            category: LayoutCategory::Text,
            score: 0.95,
        },
        FixtureBlock {
            rect: BBox::new(60.0, 720.0, 380.0, 880.0),
            category: LayoutCategory::Image,
            score: 0.94,
        },
        FixtureBlock {
            rect: BBox::new(60.0, 890.0, 380.0, 920.0),
            category: LayoutCategory::Caption,
            score: 0.93,
        },
        FixtureBlock {
            rect: BBox::new(420.0, 120.0, 740.0, 300.0),
            category: LayoutCategory::Text,
            score: 0.96,
        },
        FixtureBlock {
            rect: BBox::new(420.0, 320.0, 740.0, 560.0),
            category: LayoutCategory::Table,
            score: 0.95,
        },
        FixtureBlock {
            rect: BBox::new(420.0, 600.0, 740.0, 900.0),
            category: LayoutCategory::Text,
            score: 0.94,
        },
        FixtureBlock {
            rect: BBox::new(350.0, 960.0, 450.0, 990.0),
            category: LayoutCategory::Footer,
            score: 0.9,
        },
    ];
    let lines = vec![
        FixtureLine::new(BBox::new(310.0, 8.0, 490.0, 22.0), "Running Header"),
        FixtureLine::new(BBox::new(250.0, 48.0, 550.0, 72.0), "Sample Document"),
        FixtureLine::new(BBox::new(70.0, 140.0, 370.0, 164.0), "Left column opens with"),
        FixtureLine::new(BBox::new(70.0, 180.0, 370.0, 204.0), "a short paragraph"),
        FixtureLine::new(BBox::new(70.0, 440.0, 370.0, 464.0), "Second paragraph continues"),
        FixtureLine::new(BBox::new(70.0, 480.0, 370.0, 504.0), "the left column"),
        FixtureLine::new(BBox::new(70.0, 895.0, 300.0, 918.0), "Figure 1 caption"),
        FixtureLine::new(BBox::new(430.0, 140.0, 730.0, 164.0), "Right column begins here"),
        FixtureLine::new(BBox::new(430.0, 330.0, 490.0, 350.0), "Name"),
        FixtureLine::new(BBox::new(600.0, 330.0, 650.0, 350.0), "Qty"),
        FixtureLine::new(BBox::new(430.0, 450.0, 510.0, 470.0), "Widget"),
        FixtureLine::new(BBox::new(600.0, 450.0, 620.0, 470.0), "3"),
        FixtureLine::new(BBox::new(430.0, 620.0, 730.0, 644.0), "Right column closes out"),
        FixtureLine::new(BBox::new(360.0, 965.0, 440.0, 985.0), "Page 1"),
    ];
    let tables = BTreeMap::from([(
        7usize,
        (
            vec![
                BBox::new(0.0, 0.0, 160.0, 120.0),
                BBox::new(160.0, 0.0, 320.0, 120.0),
                BBox::new(0.0, 120.0, 160.0, 240.0),
                BBox::new(160.0, 120.0, 320.0, 240.0),
            ],
            "<table><tr><td></td><td></td></tr><tr><td></td><td></td></tr></table>".to_string(),
        ),
    )]);
    PageSpec {
        width: 800,
        height: 1000,
        lines,
        blocks,
        regions: vec![BBox::new(50.0, 30.0, 750.0, 950.0)],
        tables,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocr::ctc_greedy_decode;
    use crate::ocr::LogitsSequence;

    #[test]
    fn logits_round_trip_through_decoder() {
        let charset = Charset::from_text(
            &FIXTURE_CHARSET.chars().map(|c| format!("{c}\n")).collect::<String>(),
        )
        .unwrap();
        for text in ["hello parser world", "aa bb", "Sample Document", "3"] {
            let tensor = logits_for_text(text, &charset).unwrap();
            let logits = LogitsSequence::from_tensor(&tensor).unwrap();
            let (decoded, score) = ctc_greedy_decode(&logits, &charset).unwrap();
            assert_eq!(decoded, text);
            assert_eq!(score, 1.0);
        }
    }

    #[test]
    fn generate_produces_runnable_workspace() {
        let dir = tempfile::tempdir().unwrap();
        let ws = generate(dir.path(), &simple_page_spec()).unwrap();
        assert!(ws.config_path.exists());
        assert!(ws.input_path.exists());
        let config = crate::config::PipelineConfig::load(&ws.config_path).unwrap();
        assert!(config.model_set(dir.path()).is_ok());
    }
}
