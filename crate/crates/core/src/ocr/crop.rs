//! Perspective-rectified line cropping.

use image::RgbImage;

use crate::error::{Error, Result};
use crate::geometry::{homography_from_points, Point, Quad};

/// Aspect ratio above which a crop is treated as vertical text and rotated
/// 90 degrees clockwise.
const VERTICAL_ASPECT: f64 = 1.5;

/// Bilinear sample with edge clamping.
pub(crate) fn sample_bilinear(img: &RgbImage, x: f64, y: f64) -> image::Rgb<u8> {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let x = x.clamp(0.0, w - 1.0).max(0.0);
    let y = y.clamp(0.0, h - 1.0).max(0.0);
    let x0 = x.floor() as u32;
    let y0 = y.floor() as u32;
    let x1 = (x0 + 1).min(img.width() - 1);
    let y1 = (y0 + 1).min(img.height() - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let p00 = img.get_pixel(x0, y0);
    let p10 = img.get_pixel(x1, y0);
    let p01 = img.get_pixel(x0, y1);
    let p11 = img.get_pixel(x1, y1);
    let mut out = [0u8; 3];
    for c in 0..3 {
        let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
        let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
        out[c] = (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8;
    }
    image::Rgb(out)
}

/// Warps the source quad into an axis-aligned `dst_w` x `dst_h` image.
pub fn warp_quad(page: &RgbImage, quad: &Quad, dst_w: u32, dst_h: u32) -> Result<RgbImage> {
    let dst_corners = [
        Point::new(0.0, 0.0),
        Point::new(dst_w as f64, 0.0),
        Point::new(dst_w as f64, dst_h as f64),
        Point::new(0.0, dst_h as f64),
    ];
    // Map destination pixels back into the source image.
    let back = homography_from_points(&dst_corners, &quad.points)?;
    let mut out = RgbImage::new(dst_w, dst_h);
    for y in 0..dst_h {
        for x in 0..dst_w {
            let src = back.apply(Point::new(x as f64 + 0.5, y as f64 + 0.5));
            // Sample at source pixel centers.
            out.put_pixel(x, y, sample_bilinear(page, src.x - 0.5, src.y - 0.5));
        }
    }
    Ok(out)
}

/// Crops a detected quad into an upright line image.
///
/// The quad is normalized and clamped to the page bounds. The crop width is
/// the longer of the top/bottom edges, the height the longer of the sides;
/// crops taller than 1.5x their width are rotated 90 degrees clockwise.
pub fn crop_line(page: &RgbImage, quad: &Quad) -> Result<RgbImage> {
    let q = quad.normalized();
    let (pw, ph) = (page.width() as f64, page.height() as f64);
    let clamped = Quad::new([
        Point::new(q.points[0].x.clamp(0.0, pw), q.points[0].y.clamp(0.0, ph)),
        Point::new(q.points[1].x.clamp(0.0, pw), q.points[1].y.clamp(0.0, ph)),
        Point::new(q.points[2].x.clamp(0.0, pw), q.points[2].y.clamp(0.0, ph)),
        Point::new(q.points[3].x.clamp(0.0, pw), q.points[3].y.clamp(0.0, ph)),
    ]);
    if clamped.area() <= 0.0 {
        return Err(Error::DegenerateGeometry(
            "cannot crop a zero-area quad".into(),
        ));
    }
    let p = &clamped.points;
    let width = p[0].distance(&p[1]).max(p[3].distance(&p[2]));
    let height = p[0].distance(&p[3]).max(p[1].distance(&p[2]));
    let dst_w = width.round().max(1.0) as u32;
    let dst_h = height.round().max(1.0) as u32;
    let crop = warp_quad(page, &clamped, dst_w, dst_h)?;
    if dst_h as f64 / dst_w as f64 > VERTICAL_ASPECT {
        Ok(image::imageops::rotate90(&crop))
    } else {
        Ok(crop)
    }
}
