//! Input loading: PNG/JPEG images and multi-page PDFs.
//!
//! PDF pages are rasterized at a configurable DPI. Scanned documents (one
//! raster image per page, DCT- or Flate-encoded) are supported; vector-only
//! pages are rejected as unsupported input.

use std::path::Path;

use image::RgbImage;
use lopdf::{Dictionary, Document as PdfDocument, Object};

use crate::error::{Error, Result};

/// Default rasterization density.
pub const DEFAULT_DPI: u32 = 200;

const POINTS_PER_INCH: f64 = 72.0;

/// Loads an input file into page images. Dispatches on content: PDF files
/// are rasterized page by page, anything else must decode as a single
/// image.
pub fn load_input(path: &Path, dpi: u32) -> Result<Vec<RgbImage>> {
    load_bytes(&std::fs::read(path)?, dpi)
}

/// Loads in-memory input bytes into page images.
pub fn load_bytes(bytes: &[u8], dpi: u32) -> Result<Vec<RgbImage>> {
    if bytes.starts_with(b"%PDF") {
        return rasterize_pdf_bytes(bytes, dpi);
    }
    let img = image::load_from_memory(bytes)?;
    Ok(vec![img.to_rgb8()])
}

/// Rasterizes every page of a PDF file at the given DPI.
pub fn rasterize_pdf(path: &Path, dpi: u32) -> Result<Vec<RgbImage>> {
    rasterize_pdf_bytes(&std::fs::read(path)?, dpi)
}

/// Rasterizes every page of an in-memory PDF at the given DPI.
pub fn rasterize_pdf_bytes(bytes: &[u8], dpi: u32) -> Result<Vec<RgbImage>> {
    let doc = PdfDocument::load_mem(bytes)
        .map_err(|e| Error::UnsupportedInput(format!("cannot parse PDF: {e}")))?;
    let pages = doc.get_pages();
    let mut out = Vec::with_capacity(pages.len());
    for (page_number, page_id) in pages {
        let image = rasterize_page(&doc, page_id, dpi).map_err(|e| {
            Error::UnsupportedInput(format!("page {page_number}: {e}"))
        })?;
        out.push(image);
    }
    if out.is_empty() {
        return Err(Error::UnsupportedInput("PDF has no pages".into()));
    }
    Ok(out)
}

fn media_box(doc: &PdfDocument, page_id: lopdf::ObjectId) -> Option<(f64, f64)> {
    // MediaBox may be inherited from an ancestor Pages node.
    let mut current = Some(page_id);
    while let Some(id) = current {
        let dict = doc.get_object(id).ok()?.as_dict().ok()?;
        if let Ok(mb) = dict.get(b"MediaBox") {
            let values = resolve(doc, mb).as_array().ok()?.clone();
            let nums: Vec<f64> = values
                .iter()
                .filter_map(|v| match v {
                    Object::Integer(i) => Some(*i as f64),
                    Object::Real(r) => Some(*r as f64),
                    _ => None,
                })
                .collect();
            if nums.len() == 4 {
                return Some(((nums[2] - nums[0]).abs(), (nums[3] - nums[1]).abs()));
            }
        }
        current = dict
            .get(b"Parent")
            .ok()
            .and_then(|p| p.as_reference().ok());
    }
    None
}

fn resolve<'a>(doc: &'a PdfDocument, object: &'a Object) -> &'a Object {
    match object {
        Object::Reference(id) => doc.get_object(*id).unwrap_or(object),
        other => other,
    }
}

fn decode_image_xobject(doc: &PdfDocument, stream: &lopdf::Stream) -> Result<RgbImage> {
    let dict = &stream.dict;
    let filter_names: Vec<String> = match dict.get(b"Filter") {
        Ok(object) => match resolve(doc, object) {
            Object::Name(name) => vec![String::from_utf8_lossy(name).into_owned()],
            Object::Array(items) => items
                .iter()
                .filter_map(|o| match resolve(doc, o) {
                    Object::Name(name) => Some(String::from_utf8_lossy(name).into_owned()),
                    _ => None,
                })
                .collect(),
            _ => Vec::new(),
        },
        Err(_) => Vec::new(),
    };

    if filter_names.iter().any(|f| f == "DCTDecode") {
        let img = image::load_from_memory_with_format(&stream.content, image::ImageFormat::Jpeg)?;
        return Ok(img.to_rgb8());
    }

    // Flate or raw samples: rebuild from Width/Height/ColorSpace/BPC.
    let data = if filter_names.iter().any(|f| f == "FlateDecode") {
        stream
            .decompressed_content()
            .map_err(|e| Error::UnsupportedInput(format!("flate decode failed: {e}")))?
    } else if filter_names.is_empty() {
        stream.content.clone()
    } else {
        return Err(Error::UnsupportedInput(format!(
            "unsupported image filters {filter_names:?}"
        )));
    };

    let width = dict
        .get(b"Width")
        .ok()
        .and_then(|o| resolve(doc, o).as_i64().ok())
        .ok_or_else(|| Error::UnsupportedInput("image missing Width".into()))? as u32;
    let height = dict
        .get(b"Height")
        .ok()
        .and_then(|o| resolve(doc, o).as_i64().ok())
        .ok_or_else(|| Error::UnsupportedInput("image missing Height".into()))? as u32;
    let bpc = dict
        .get(b"BitsPerComponent")
        .ok()
        .and_then(|o| resolve(doc, o).as_i64().ok())
        .unwrap_or(8);
    if bpc != 8 {
        return Err(Error::UnsupportedInput(format!(
            "unsupported BitsPerComponent {bpc}"
        )));
    }
    let colorspace = dict
        .get(b"ColorSpace")
        .ok()
        .map(|o| match resolve(doc, o) {
            Object::Name(name) => String::from_utf8_lossy(name).into_owned(),
            _ => String::new(),
        })
        .unwrap_or_default();

    let pixels = (width * height) as usize;
    match colorspace.as_str() {
        "DeviceRGB" => {
            if data.len() < pixels * 3 {
                return Err(Error::UnsupportedInput("truncated RGB samples".into()));
            }
            RgbImage::from_raw(width, height, data[..pixels * 3].to_vec())
                .ok_or_else(|| Error::UnsupportedInput("bad RGB buffer".into()))
        }
        "DeviceGray" => {
            if data.len() < pixels {
                return Err(Error::UnsupportedInput("truncated gray samples".into()));
            }
            Ok(RgbImage::from_fn(width, height, |x, y| {
                let v = data[(y * width + x) as usize];
                image::Rgb([v, v, v])
            }))
        }
        other => Err(Error::UnsupportedInput(format!(
            "unsupported colorspace '{other}'"
        ))),
    }
}

fn rasterize_page(doc: &PdfDocument, page_id: lopdf::ObjectId, dpi: u32) -> Result<RgbImage> {
    // Collect the image XObjects reachable from the page resources and keep
    // the largest one, which is the scan for image-per-page documents.
    let (resources_opt, resource_ids) = doc
        .get_page_resources(page_id)
        .map_err(|e| Error::UnsupportedInput(format!("cannot read page resources: {e}")))?;
    let mut dicts: Vec<&Dictionary> = Vec::new();
    if let Some(resources) = resources_opt {
        dicts.push(resources);
    }
    for id in resource_ids {
        if let Ok(object) = doc.get_object(id) {
            if let Ok(dict) = object.as_dict() {
                dicts.push(dict);
            }
        }
    }

    let mut best: Option<RgbImage> = None;
    for resources in dicts {
        let Ok(xobjects) = resources.get(b"XObject") else {
            continue;
        };
        let Ok(xobjects) = resolve(doc, xobjects).as_dict() else {
            continue;
        };
        for (_, value) in xobjects.iter() {
            let Ok(stream) = resolve(doc, value).as_stream() else {
                continue;
            };
            let is_image = stream
                .dict
                .get(b"Subtype")
                .ok()
                .and_then(|o| o.as_name().ok())
                .map(|n| n == b"Image")
                .unwrap_or(false);
            if !is_image {
                continue;
            }
            match decode_image_xobject(doc, stream) {
                Ok(img) => {
                    let better = best
                        .as_ref()
                        .map(|b| img.width() * img.height() > b.width() * b.height())
                        .unwrap_or(true);
                    if better {
                        best = Some(img);
                    }
                }
                Err(e) => tracing::warn!("skipping undecodable page image: {e}"),
            }
        }
    }

    let image = best.ok_or_else(|| {
        Error::UnsupportedInput("page carries no raster image (vector content unsupported)".into())
    })?;

    // Scale to the requested density using the page's physical size.
    if let Some((w_pts, h_pts)) = media_box(doc, page_id) {
        let target_w = (w_pts / POINTS_PER_INCH * dpi as f64).round().max(1.0) as u32;
        let target_h = (h_pts / POINTS_PER_INCH * dpi as f64).round().max(1.0) as u32;
        if target_w != image.width() || target_h != image.height() {
            return Ok(image::imageops::resize(
                &image,
                target_w,
                target_h,
                image::imageops::FilterType::Triangle,
            ));
        }
    }
    Ok(image)
}

/// Builds a minimal scanned-style PDF (one Flate-encoded RGB image per
/// page) — used by tests and fixture generators.
pub fn build_scanned_pdf(pages: &[RgbImage], dpi: u32) -> Vec<u8> {
    use lopdf::dictionary;
    use lopdf::Stream;

    let mut doc = PdfDocument::with_version("1.5");
    let pages_id = doc.new_object_id();
    let mut page_ids: Vec<Object> = Vec::new();

    for page_image in pages {
        let (w, h) = (page_image.width(), page_image.height());
        let w_pts = w as f64 * POINTS_PER_INCH / dpi as f64;
        let h_pts = h as f64 * POINTS_PER_INCH / dpi as f64;

        let mut image_stream = Stream::new(
            dictionary! {
                "Type" => "XObject",
                "Subtype" => "Image",
                "Width" => w as i64,
                "Height" => h as i64,
                "ColorSpace" => "DeviceRGB",
                "BitsPerComponent" => 8,
            },
            page_image.as_raw().clone(),
        );
        let _ = image_stream.compress();
        let image_id = doc.add_object(image_stream);

        let content = format!("q {w_pts} 0 0 {h_pts} 0 0 cm /Im0 Do Q");
        let content_id = doc.add_object(Stream::new(dictionary! {}, content.into_bytes()));

        let resources = dictionary! {
            "XObject" => dictionary! { "Im0" => image_id },
        };
        let page_id = doc.add_object(dictionary! {
            "Type" => "Page",
            "Parent" => pages_id,
            "MediaBox" => vec![0.into(), 0.into(), w_pts.into(), h_pts.into()],
            "Contents" => content_id,
            "Resources" => resources,
        });
        page_ids.push(page_id.into());
    }

    let count = page_ids.len() as i64;
    doc.objects.insert(
        pages_id,
        Object::Dictionary(dictionary! {
            "Type" => "Pages",
            "Kids" => page_ids,
            "Count" => count,
        }),
    );
    let catalog_id = doc.add_object(dictionary! {
        "Type" => "Catalog",
        "Pages" => pages_id,
    });
    doc.trailer.set("Root", catalog_id);

    let mut bytes = Vec::new();
    doc.save_to(&mut bytes).expect("in-memory save cannot fail");
    bytes
}
