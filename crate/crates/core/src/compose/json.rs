//! Canonical JSON result serialization.
//!
//! Schema (version "1"):
//!
//! ```json
//! {"version":"1","pages":[{"index":0,"width":800.00,"height":1000.00,
//!   "items":[{"category":"text","bbox":[x0,y0,x1,y1],"order":0,
//!             "content":"...","links":{}}]}]}
//! ```
//!
//! Key order is fixed, pixel values print with exactly two decimals, and
//! serialization is a byte-level fixpoint: emit(parse(emit(d))) == emit(d).

use serde_json::Value;

use crate::document::{Document, DocumentItem, ItemContent, LayoutCategory, Page};
use crate::error::{Error, Result};
use crate::geometry::BBox;

/// Schema version emitted and accepted.
pub const SCHEMA_VERSION: &str = "1";

fn fmt_px(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.2}")
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization cannot fail")
}

fn item_content_str(item: &DocumentItem) -> String {
    match &item.content {
        ItemContent::Text { text }
        | ItemContent::Title { text, .. }
        | ItemContent::Seal { text }
        | ItemContent::Caption { text }
        | ItemContent::Header { text }
        | ItemContent::Footer { text } => text.clone(),
        ItemContent::Table { html } => html.clone(),
        ItemContent::Formula { latex } => latex.clone(),
        ItemContent::Chart { markdown_table } => markdown_table.clone(),
        ItemContent::Image { path } => path.clone(),
    }
}

fn emit_item(item: &DocumentItem, out: &mut String) {
    out.push_str("{\"category\":");
    out.push_str(&json_str(item.category().as_str()));
    out.push_str(",\"bbox\":[");
    out.push_str(&fmt_px(item.bbox.x0));
    out.push(',');
    out.push_str(&fmt_px(item.bbox.y0));
    out.push(',');
    out.push_str(&fmt_px(item.bbox.x1));
    out.push(',');
    out.push_str(&fmt_px(item.bbox.y1));
    out.push_str("],\"order\":");
    out.push_str(&item.order_index.to_string());
    out.push_str(",\"content\":");
    out.push_str(&json_str(&item_content_str(item)));
    out.push_str(",\"links\":{");
    let mut first = true;
    if let Some(ci) = item.caption_link {
        out.push_str("\"caption\":");
        out.push_str(&ci.to_string());
        first = false;
    }
    if let Some(ti) = item.target_link {
        if !first {
            out.push(',');
        }
        out.push_str("\"target\":");
        out.push_str(&ti.to_string());
    }
    out.push_str("}}");
}

/// Serializes a document to canonical JSON text. Byte output is
/// deterministic for equal documents.
pub fn emit_json(doc: &Document) -> String {
    let mut out = String::from("{\"version\":\"");
    out.push_str(SCHEMA_VERSION);
    out.push_str("\",\"pages\":[");
    for (pi, page) in doc.pages.iter().enumerate() {
        if pi > 0 {
            out.push(',');
        }
        out.push_str("{\"index\":");
        out.push_str(&page.index.to_string());
        out.push_str(",\"width\":");
        out.push_str(&fmt_px(page.width));
        out.push_str(",\"height\":");
        out.push_str(&fmt_px(page.height));
        out.push_str(",\"items\":[");
        let mut items: Vec<&DocumentItem> = page.items.iter().collect();
        items.sort_by_key(|i| i.order_index);
        for (ii, item) in items.iter().enumerate() {
            if ii > 0 {
                out.push(',');
            }
            emit_item(item, &mut out);
        }
        out.push_str("]}");
    }
    out.push_str("]}");
    out
}

fn content_from(category: &str, content: String) -> Result<ItemContent> {
    let cat = LayoutCategory::parse(category)
        .ok_or_else(|| Error::config("items[].category", format!("unknown category '{category}'")))?;
    Ok(match cat {
        LayoutCategory::Text | LayoutCategory::Other => ItemContent::Text { text: content },
        LayoutCategory::Title => ItemContent::Title {
            text: content,
            level: 1,
        },
        LayoutCategory::Table => ItemContent::Table { html: content },
        LayoutCategory::Formula => ItemContent::Formula { latex: content },
        LayoutCategory::Chart => ItemContent::Chart {
            markdown_table: content,
        },
        LayoutCategory::Image => ItemContent::Image { path: content },
        LayoutCategory::SealText => ItemContent::Seal { text: content },
        LayoutCategory::Caption => ItemContent::Caption { text: content },
        LayoutCategory::Header => ItemContent::Header { text: content },
        LayoutCategory::Footer => ItemContent::Footer { text: content },
    })
}

fn require<'v>(obj: &'v serde_json::Map<String, Value>, key: &str, at: &str) -> Result<&'v Value> {
    obj.get(key)
        .ok_or_else(|| Error::config(at, format!("missing key '{key}'")))
}

fn as_f64(v: &Value, at: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::config(at, "expected a number"))
}

/// Parses canonical JSON back into a document.
pub fn parse_json(text: &str) -> Result<Document> {
    let root: Value = serde_json::from_str(text)?;
    let obj = root
        .as_object()
        .ok_or_else(|| Error::config("$", "expected an object"))?;
    let version = require(obj, "version", "$")?
        .as_str()
        .ok_or_else(|| Error::config("version", "expected a string"))?;
    if version != SCHEMA_VERSION {
        return Err(Error::config(
            "version",
            format!("unsupported schema version '{version}'"),
        ));
    }
    let mut doc = Document::new("");
    let pages = require(obj, "pages", "$")?
        .as_array()
        .ok_or_else(|| Error::config("pages", "expected an array"))?;
    for (pi, page_value) in pages.iter().enumerate() {
        let at = format!("pages[{pi}]");
        let page_obj = page_value
            .as_object()
            .ok_or_else(|| Error::config(&at, "expected an object"))?;
        let index = as_f64(require(page_obj, "index", &at)?, &at)? as usize;
        let width = as_f64(require(page_obj, "width", &at)?, &at)?;
        let height = as_f64(require(page_obj, "height", &at)?, &at)?;
        let mut page = Page::new(index, width, height);
        let items = require(page_obj, "items", &at)?
            .as_array()
            .ok_or_else(|| Error::config(&at, "items must be an array"))?;
        for (ii, item_value) in items.iter().enumerate() {
            let at = format!("pages[{pi}].items[{ii}]");
            let item_obj = item_value
                .as_object()
                .ok_or_else(|| Error::config(&at, "expected an object"))?;
            let category = require(item_obj, "category", &at)?
                .as_str()
                .ok_or_else(|| Error::config(&at, "category must be a string"))?;
            let bbox_vals = require(item_obj, "bbox", &at)?
                .as_array()
                .ok_or_else(|| Error::config(&at, "bbox must be an array"))?;
            if bbox_vals.len() != 4 {
                return Err(Error::config(&at, "bbox must have 4 entries"));
            }
            let coords: Vec<f64> = bbox_vals
                .iter()
                .map(|v| as_f64(v, &at))
                .collect::<Result<_>>()?;
            let order = as_f64(require(item_obj, "order", &at)?, &at)? as usize;
            let content = require(item_obj, "content", &at)?
                .as_str()
                .ok_or_else(|| Error::config(&at, "content must be a string"))?
                .to_string();
            let links = require(item_obj, "links", &at)?
                .as_object()
                .ok_or_else(|| Error::config(&at, "links must be an object"))?;

            let mut item = DocumentItem::new(
                content_from(category, content)?,
                BBox::new(coords[0], coords[1], coords[2], coords[3]),
                index,
            );
            item.order_index = order;
            if let Some(v) = links.get("caption") {
                item.caption_link = Some(as_f64(v, &at)? as usize);
            }
            if let Some(v) = links.get("target") {
                item.target_link = Some(as_f64(v, &at)? as usize);
            }
            page.items.push(item);
        }
        doc.pages.push(page);
    }
    Ok(doc)
}
