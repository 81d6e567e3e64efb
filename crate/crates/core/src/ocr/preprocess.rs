//! Page preprocessing: orientation classification and unwarping, plus the
//! coordinate bookkeeping needed to report geometry in original-image
//! coordinates.

use image::RgbImage;

use crate::backends::{Tensor, TensorMap};
use crate::document::LineOrientation;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::runtime::InferenceContext;

/// Clockwise rotation of page content relative to upright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rotation {
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub fn degrees(&self) -> u16 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }

    fn from_class(class: usize) -> Rotation {
        match class {
            0 => Rotation::R0,
            1 => Rotation::R90,
            2 => Rotation::R180,
            _ => Rotation::R270,
        }
    }

    /// Clockwise rotation that brings this content upright.
    pub fn correction_degrees(&self) -> u16 {
        (360 - self.degrees()) % 360
    }
}

/// Argmax over a score vector; ties resolve to the lowest index.
pub(crate) fn argmax(scores: &[f32]) -> usize {
    let mut best = 0usize;
    for (i, &v) in scores.iter().enumerate().skip(1) {
        if v > scores[best] {
            best = i;
        }
    }
    best
}

/// Rotates an image clockwise by a multiple of 90 degrees.
pub fn rotate_image(img: &RgbImage, degrees_cw: u16) -> RgbImage {
    match degrees_cw % 360 {
        90 => image::imageops::rotate90(img),
        180 => image::imageops::rotate180(img),
        270 => image::imageops::rotate270(img),
        _ => img.clone(),
    }
}

/// Maps a point in a rotated frame back into the original frame, given the
/// clockwise rotation that produced the frame and the original dimensions.
pub fn unrotate_point(p: Point, applied_cw: u16, orig_w: f64, orig_h: f64) -> Point {
    match applied_cw % 360 {
        // rotate90 cw: (x, y) -> (h - y, x); invert.
        90 => Point::new(p.y, orig_h - p.x),
        180 => Point::new(orig_w - p.x, orig_h - p.y),
        // rotate270 cw: (x, y) -> (y, w - x); invert.
        270 => Point::new(orig_w - p.y, p.x),
        _ => p,
    }
}

fn image_inputs(img: &RgbImage) -> TensorMap {
    TensorMap::from([("image".to_string(), Tensor::from_image(img))])
}

/// Classifies the page rotation via the bound orientation model.
///
/// The model contract is a 4-way score vector named `scores` over
/// {0, 90, 180, 270} degrees clockwise; exact ties resolve to the lowest
/// rotation.
pub fn classify_doc_orientation(ctx: &InferenceContext, model: &str, page: &RgbImage) -> Result<Rotation> {
    let outputs = ctx.run_model(model, &image_inputs(page))?;
    let scores = outputs
        .get("scores")
        .ok_or_else(|| Error::ShapeMismatch("orientation model must output 'scores'".into()))?
        .as_f32_vec()?;
    if scores.len() != 4 {
        return Err(Error::ShapeMismatch(format!(
            "orientation scores must have 4 classes, got {}",
            scores.len()
        )));
    }
    Ok(Rotation::from_class(argmax(&scores)))
}

/// Runs the unwarp model; the backend output image replaces the input and
/// may change dimensions.
pub fn unwarp(ctx: &InferenceContext, model: &str, page: &RgbImage) -> Result<RgbImage> {
    let outputs = ctx.run_model(model, &image_inputs(page))?;
    outputs
        .get("image")
        .ok_or_else(|| Error::ShapeMismatch("unwarp model must output 'image'".into()))?
        .to_image()
}

/// Classifies whether a line crop is upright or upside down.
///
/// The model contract is a 2-way score vector named `scores` for
/// {Deg0, Deg180}; ties resolve to Deg0.
pub fn classify_line_orientation(
    ctx: &InferenceContext,
    model: &str,
    line: &RgbImage,
) -> Result<LineOrientation> {
    let outputs = ctx.run_model(model, &image_inputs(line))?;
    let scores = outputs
        .get("scores")
        .ok_or_else(|| Error::ShapeMismatch("line orientation model must output 'scores'".into()))?
        .as_f32_vec()?;
    if scores.len() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "line orientation scores must have 2 classes, got {}",
            scores.len()
        )));
    }
    Ok(if argmax(&scores) == 1 {
        LineOrientation::Deg180
    } else {
        LineOrientation::Deg0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_tie_takes_lowest_index() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.1, 0.1]), 1);
        assert_eq!(argmax(&[0.25, 0.25, 0.25, 0.25]), 0);
    }

    #[test]
    fn rotation_correction() {
        assert_eq!(Rotation::R0.correction_degrees(), 0);
        assert_eq!(Rotation::R90.correction_degrees(), 270);
        assert_eq!(Rotation::R270.correction_degrees(), 90);
    }

    #[test]
    fn unrotate_round_trip() {
        let (w, h) = (64.0, 48.0);
        for applied in [0u16, 90, 180, 270] {
            let p = Point::new(10.0, 20.0);
            // Forward map for verification.
            let forward = match applied {
                90 => Point::new(h - p.y, p.x),
                180 => Point::new(w - p.x, h - p.y),
                270 => Point::new(p.y, w - p.x),
                _ => p,
            };
            let back = unrotate_point(forward, applied, w, h);
            assert!((back.x - p.x).abs() < 1e-9 && (back.y - p.y).abs() < 1e-9, "applied {applied}");
        }
    }

    #[test]
    fn rotate_image_dims() {
        let img = RgbImage::new(10, 4);
        assert_eq!(rotate_image(&img, 90).dimensions(), (4, 10));
        assert_eq!(rotate_image(&img, 180).dimensions(), (10, 4));
        assert_eq!(rotate_image(&img, 270).dimensions(), (4, 10));
        assert_eq!(rotate_image(&img, 0).dimensions(), (10, 4));
    }
}
