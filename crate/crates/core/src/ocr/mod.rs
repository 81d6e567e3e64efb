//! The text pipeline: optional preprocessing, text detection postprocessing,
//! line cropping, line-orientation correction, CTC decoding, and full-page
//! orchestration.

pub mod charset;
pub mod crop;
pub mod ctc;
pub mod detect;
pub mod preprocess;

pub use charset::Charset;
pub use crop::{crop_line, warp_quad};
pub use ctc::{ctc_greedy_decode, LogitsSequence};
pub use detect::{extract_text_regions, DetectionParams, ProbabilityMap};
pub use preprocess::{classify_doc_orientation, classify_line_orientation, unwarp, Rotation};

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::backends::{TaskKind, Tensor, TensorMap};
use crate::document::{LineOrientation, Page, TextLine};
use crate::error::{Error, Result};
use crate::geometry::{Point, Quad};
use crate::runtime::{InferenceContext, TaskBindings};
use crate::trace::{Stage, StageTrace};

/// Toggles and thresholds of the text pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrConfig {
    pub use_doc_orientation_classify: bool,
    pub use_doc_unwarping: bool,
    pub use_textline_orientation: bool,
    pub detection: DetectionParams,
    #[serde(skip)]
    pub bindings: TaskBindings,
}

impl Default for OcrConfig {
    fn default() -> Self {
        Self {
            use_doc_orientation_classify: false,
            use_doc_unwarping: false,
            use_textline_orientation: false,
            detection: DetectionParams::default(),
            bindings: TaskBindings::new(),
        }
    }
}

fn image_inputs(img: &RgbImage) -> TensorMap {
    TensorMap::from([("image".to_string(), Tensor::from_image(img))])
}

/// Runs text detection on a page image and returns region quads in the
/// page's coordinate frame.
pub fn detect_text(
    ctx: &InferenceContext,
    cfg: &OcrConfig,
    page: &RgbImage,
) -> Result<Vec<Quad>> {
    let model = cfg.bindings.require(TaskKind::TextDet)?;
    let outputs = ctx.run_model(model, &image_inputs(page))?;
    let map_tensor = outputs
        .get("prob_map")
        .ok_or_else(|| Error::ShapeMismatch("detection model must output 'prob_map'".into()))?;
    let map = ProbabilityMap::from_tensor(map_tensor)?;
    Ok(extract_text_regions(&map, &cfg.detection))
}

/// Recognizes one line crop: optional orientation correction, recognition
/// backend, CTC decode.
pub fn recognize_line(
    ctx: &InferenceContext,
    cfg: &OcrConfig,
    crop: &RgbImage,
    trace: &mut StageTrace,
) -> Result<(String, f64, LineOrientation)> {
    let mut oriented = crop.clone();
    let mut orientation = LineOrientation::Deg0;
    if cfg.use_textline_orientation {
        let model = cfg.bindings.require(TaskKind::LineOrientation)?;
        trace.record(Stage::LineOrientation);
        orientation = classify_line_orientation(ctx, model, crop)?;
        if orientation == LineOrientation::Deg180 {
            oriented = image::imageops::rotate180(&oriented);
        }
    }
    let rec_model = cfg.bindings.require(TaskKind::TextRec)?;
    trace.record(Stage::TextRecognition);
    let outputs = ctx.run_model(rec_model, &image_inputs(&oriented))?;
    let logits_tensor = outputs
        .get("logits")
        .ok_or_else(|| Error::ShapeMismatch("recognition model must output 'logits'".into()))?;
    let logits = LogitsSequence::from_tensor(logits_tensor)?;
    let cs = ctx.charset(rec_model)?;
    let (text, score) = ctc_greedy_decode(&logits, &cs)?;
    Ok((text, score, orientation))
}

/// Full-page OCR returning text lines in original-image coordinates.
pub fn run_ocr(ctx: &InferenceContext, image: &RgbImage, cfg: &OcrConfig) -> Result<Page> {
    run_ocr_traced(ctx, image, cfg).map(|(page, _)| page)
}

/// Like [`run_ocr`] but also reports which stages executed.
pub fn run_ocr_traced(
    ctx: &InferenceContext,
    image: &RgbImage,
    cfg: &OcrConfig,
) -> Result<(Page, StageTrace)> {
    let mut trace = StageTrace::new();
    let (orig_w, orig_h) = (image.width() as f64, image.height() as f64);

    // Preprocessing. Track the applied rotation and any unwarp scaling so
    // detected geometry can be mapped back to original coordinates.
    let mut work = image.clone();
    let mut applied_rotation_cw = 0u16;
    if cfg.use_doc_orientation_classify {
        let model = cfg.bindings.require(TaskKind::DocOrientation)?;
        trace.record(Stage::DocOrientation);
        let rotation = classify_doc_orientation(ctx, model, &work)?;
        applied_rotation_cw = rotation.correction_degrees();
        if applied_rotation_cw != 0 {
            work = preprocess::rotate_image(&work, applied_rotation_cw);
        }
    }
    let (rotated_w, rotated_h) = (work.width() as f64, work.height() as f64);
    let mut unwarp_scale = (1.0f64, 1.0f64);
    if cfg.use_doc_unwarping {
        let model = cfg.bindings.require(TaskKind::Unwarp)?;
        trace.record(Stage::Unwarp);
        let unwarped = unwarp(ctx, model, &work)?;
        // Opaque warps cannot be inverted exactly; approximate with the
        // dimension scaling between input and output.
        unwarp_scale = (
            rotated_w / unwarped.width() as f64,
            rotated_h / unwarped.height() as f64,
        );
        work = unwarped;
    }

    trace.record(Stage::TextDetection);
    let quads = detect_text(ctx, cfg, &work)?;

    let mut lines = Vec::with_capacity(quads.len());
    for quad in &quads {
        let crop = crop_line(&work, quad)?;
        let (text, score, orientation) = recognize_line(ctx, cfg, &crop, &mut trace)?;
        // Geometry back into original-image coordinates: undo unwarp
        // scaling, then undo the orientation rotation.
        let points = quad.points.map(|p| {
            let scaled = Point::new(p.x * unwarp_scale.0, p.y * unwarp_scale.1);
            if applied_rotation_cw == 0 {
                scaled
            } else {
                // The rotation maps original -> rotated before scaling back;
                // the rotated frame has the pre-unwarp dimensions.
                preprocess::unrotate_point(scaled, applied_rotation_cw, orig_w, orig_h)
            }
        });
        lines.push(TextLine {
            geometry: Quad::new(points),
            text,
            score,
            orientation,
        });
    }

    let mut page = Page::new(0, orig_w, orig_h);
    page.text_lines = lines;
    Ok((page, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::stub;
    use crate::backends::ModelDescriptor;
    use crate::runtime::ModelSet;
    use std::path::Path;

    /// Builds a stub model dir for the given input image and named outputs.
    fn stub_model(
        dir: &Path,
        name: &str,
        task: TaskKind,
        charset: Option<&Path>,
        img: &RgbImage,
        outputs: TensorMap,
    ) -> ModelDescriptor {
        let model_dir = dir.join(name);
        stub::write_fixtures(&model_dir, &image_inputs(img), &outputs).unwrap();
        let mut m = ModelDescriptor::new(name, task, &model_dir);
        m.charset_path = charset.map(|p| p.to_path_buf());
        m
    }

    fn one_hot_logits(ids: &[usize], classes: usize) -> Tensor {
        let mut values = vec![0.0f32; ids.len() * classes];
        for (t, &id) in ids.iter().enumerate() {
            values[t * classes + id] = 1.0;
        }
        Tensor::from_f32(vec![ids.len(), classes], &values).unwrap()
    }

    /// White page with one black band where text "lives".
    fn synthetic_page() -> (RgbImage, Tensor) {
        let (w, h) = (120u32, 60u32);
        let page = RgbImage::from_pixel(w, h, image::Rgb([255, 255, 255]));
        let mut prob = vec![0.0f32; (w * h) as usize];
        for y in 20..32 {
            for x in 10..90 {
                prob[(y * w + x) as usize] = 1.0;
            }
        }
        let tensor = Tensor::from_f32(vec![h as usize, w as usize], &prob).unwrap();
        (page, tensor)
    }

    #[test]
    fn blank_page_has_no_lines() {
        let dir = tempfile::tempdir().unwrap();
        let page = RgbImage::from_pixel(32, 32, image::Rgb([255, 255, 255]));
        let zero_map = Tensor::from_f32(vec![32, 32], &vec![0.0; 32 * 32]).unwrap();
        let det = stub_model(
            dir.path(),
            "det",
            TaskKind::TextDet,
            None,
            &page,
            TensorMap::from([("prob_map".to_string(), zero_map)]),
        );
        let charset_path = dir.path().join("charset.txt");
        std::fs::write(&charset_path, "a\nb").unwrap();
        let rec_dir = dir.path().join("rec");
        std::fs::create_dir_all(&rec_dir).unwrap();
        let mut rec = ModelDescriptor::new("rec", TaskKind::TextRec, &rec_dir);
        rec.charset_path = Some(charset_path);

        let mut models = ModelSet::new();
        models.insert(det).unwrap();
        models.insert(rec).unwrap();
        let ctx = InferenceContext::with_stub(models);
        let mut cfg = OcrConfig::default();
        cfg.bindings.bind(TaskKind::TextDet, "det");
        cfg.bindings.bind(TaskKind::TextRec, "rec");

        let page_out = run_ocr(&ctx, &page, &cfg).unwrap();
        assert!(page_out.text_lines.is_empty());
    }

    #[test]
    fn single_line_from_fixtures_and_geometry_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (page, prob_tensor) = synthetic_page();
        let det = stub_model(
            dir.path(),
            "det",
            TaskKind::TextDet,
            None,
            &page,
            TensorMap::from([("prob_map".to_string(), prob_tensor.clone())]),
        );

        let charset_path = dir.path().join("charset.txt");
        std::fs::write(&charset_path, "h\ni").unwrap();

        // The crop the pipeline will produce for the detected quad.
        let map = ProbabilityMap::from_tensor(&prob_tensor).unwrap();
        let mut cfg = OcrConfig::default();
        cfg.detection.unclip_ratio = 0.0;
        let quads = extract_text_regions(&map, &cfg.detection);
        assert_eq!(quads.len(), 1);
        let crop = crop_line(&page, &quads[0]).unwrap();

        let rec_dir = dir.path().join("rec");
        stub::write_fixtures(
            &rec_dir,
            &image_inputs(&crop),
            &TensorMap::from([("logits".to_string(), one_hot_logits(&[1, 2], 3))]),
        )
        .unwrap();
        let mut rec = ModelDescriptor::new("rec", TaskKind::TextRec, &rec_dir);
        rec.charset_path = Some(charset_path);

        let mut models = ModelSet::new();
        models.insert(det).unwrap();
        models.insert(rec).unwrap();
        let ctx = InferenceContext::with_stub(models);
        cfg.bindings.bind(TaskKind::TextDet, "det");
        cfg.bindings.bind(TaskKind::TextRec, "rec");

        let (page_out, trace) = run_ocr_traced(&ctx, &page, &cfg).unwrap();
        assert_eq!(page_out.text_lines.len(), 1);
        assert_eq!(page_out.text_lines[0].text, "hi");
        // With preprocessing off, geometry equals the detector output.
        assert_eq!(page_out.text_lines[0].geometry, quads[0]);
        assert!(trace.contains(Stage::TextDetection));
        assert!(trace.contains(Stage::TextRecognition));
        assert!(!trace.contains(Stage::DocOrientation));
        assert!(!trace.contains(Stage::Unwarp));
        assert!(!trace.contains(Stage::LineOrientation));
    }

    #[test]
    fn missing_binding_with_toggle_on_is_config_error() {
        let ctx = InferenceContext::with_stub(ModelSet::new());
        let cfg = OcrConfig {
            use_doc_unwarping: true,
            ..Default::default()
        };
        let page = RgbImage::new(8, 8);
        assert!(matches!(
            run_ocr(&ctx, &page, &cfg),
            Err(Error::ConfigError { .. })
        ));
    }
}
