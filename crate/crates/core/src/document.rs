//! The hierarchical parse result: documents, pages and typed page items.

use serde::{Deserialize, Serialize};

use crate::geometry::{BBox, Quad};

/// Orientation of a recognized text line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineOrientation {
    Deg0,
    Deg180,
}

/// A detected text line with its recognized content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextLine {
    pub geometry: Quad,
    pub text: String,
    /// Recognition confidence in [0, 1].
    pub score: f64,
    pub orientation: LineOrientation,
}

/// Category assigned by layout detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LayoutCategory {
    Text,
    Title,
    Table,
    Formula,
    Chart,
    Image,
    SealText,
    Caption,
    Header,
    Footer,
    Other,
}

impl LayoutCategory {
    pub fn as_str(&self) -> &'static str {
        match self {
            LayoutCategory::Text => "text",
            LayoutCategory::Title => "title",
            LayoutCategory::Table => "table",
            LayoutCategory::Formula => "formula",
            LayoutCategory::Chart => "chart",
            LayoutCategory::Image => "image",
            LayoutCategory::SealText => "seal_text",
            LayoutCategory::Caption => "caption",
            LayoutCategory::Header => "header",
            LayoutCategory::Footer => "footer",
            LayoutCategory::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "text" => LayoutCategory::Text,
            "title" => LayoutCategory::Title,
            "table" => LayoutCategory::Table,
            "formula" => LayoutCategory::Formula,
            "chart" => LayoutCategory::Chart,
            "image" | "figure" => LayoutCategory::Image,
            "seal_text" | "seal" => LayoutCategory::SealText,
            "caption" | "figure_title" | "table_title" => LayoutCategory::Caption,
            "header" => LayoutCategory::Header,
            "footer" => LayoutCategory::Footer,
            "other" => LayoutCategory::Other,
            _ => return None,
        })
    }
}

/// A category-labeled layout box, optionally grouped into an article region
/// and assigned a reading-order index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutBlock {
    pub bbox: BBox,
    pub category: LayoutCategory,
    pub score: f64,
    pub region_id: Option<usize>,
    pub order_index: Option<usize>,
}

impl LayoutBlock {
    pub fn new(bbox: BBox, category: LayoutCategory, score: f64) -> Self {
        Self {
            bbox,
            category,
            score,
            region_id: None,
            order_index: None,
        }
    }
}

/// Typed content of a page item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ItemContent {
    Text { text: String },
    Title { text: String, level: u8 },
    Table { html: String },
    Formula { latex: String },
    Chart { markdown_table: String },
    /// Path of the extracted crop, relative to the output directory.
    Image { path: String },
    Seal { text: String },
    Caption { text: String },
    Header { text: String },
    Footer { text: String },
}

impl ItemContent {
    pub fn category(&self) -> LayoutCategory {
        match self {
            ItemContent::Text { .. } => LayoutCategory::Text,
            ItemContent::Title { .. } => LayoutCategory::Title,
            ItemContent::Table { .. } => LayoutCategory::Table,
            ItemContent::Formula { .. } => LayoutCategory::Formula,
            ItemContent::Chart { .. } => LayoutCategory::Chart,
            ItemContent::Image { .. } => LayoutCategory::Image,
            ItemContent::Seal { .. } => LayoutCategory::SealText,
            ItemContent::Caption { .. } => LayoutCategory::Caption,
            ItemContent::Header { .. } => LayoutCategory::Header,
            ItemContent::Footer { .. } => LayoutCategory::Footer,
        }
    }

    /// Plain text carried by the item, as used for chunking and retrieval.
    pub fn plain_text(&self) -> String {
        match self {
            ItemContent::Text { text }
            | ItemContent::Title { text, .. }
            | ItemContent::Seal { text }
            | ItemContent::Caption { text }
            | ItemContent::Header { text }
            | ItemContent::Footer { text } => text.clone(),
            ItemContent::Table { html } => crate::items::table::cell_texts(html).join(" "),
            ItemContent::Formula { latex } => latex.clone(),
            ItemContent::Chart { markdown_table } => markdown_table.clone(),
            ItemContent::Image { .. } => String::new(),
        }
    }
}

/// One parsed page element with geometry, ordering and optional links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentItem {
    pub content: ItemContent,
    pub bbox: BBox,
    pub page_index: usize,
    pub order_index: usize,
    pub region_id: Option<usize>,
    /// Index of the linked caption item (set on Table/Image/Chart targets).
    pub caption_link: Option<usize>,
    /// Index of the linked target item (set on Caption items).
    pub target_link: Option<usize>,
}

impl DocumentItem {
    pub fn new(content: ItemContent, bbox: BBox, page_index: usize) -> Self {
        Self {
            content,
            bbox,
            page_index,
            order_index: 0,
            region_id: None,
            caption_link: None,
            target_link: None,
        }
    }

    pub fn category(&self) -> LayoutCategory {
        self.content.category()
    }
}

/// A single parsed page: items in reading order plus the raw text lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub index: usize,
    pub width: f64,
    pub height: f64,
    pub items: Vec<DocumentItem>,
    pub text_lines: Vec<TextLine>,
}

impl Page {
    pub fn new(index: usize, width: f64, height: f64) -> Self {
        Self {
            index,
            width,
            height,
            items: Vec::new(),
            text_lines: Vec::new(),
        }
    }

    /// Sorts items by their reading-order index.
    pub fn sort_items(&mut self) {
        self.items.sort_by_key(|i| i.order_index);
    }

    /// Copy of the page with every text line materialized as a Text item in
    /// detection order; used to serialize plain OCR results through the
    /// canonical schema.
    pub fn with_lines_as_items(&self) -> Page {
        let mut page = self.clone();
        page.items = self
            .text_lines
            .iter()
            .enumerate()
            .map(|(i, line)| {
                let mut item = DocumentItem::new(
                    ItemContent::Text {
                        text: line.text.clone(),
                    },
                    line.geometry.bbox(),
                    self.index,
                );
                item.order_index = i;
                item
            })
            .collect();
        page
    }
}

/// A parsed document.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Document {
    pub pages: Vec<Page>,
    /// Source description, e.g. the input file name.
    pub source: String,
}

impl Document {
    pub fn new(source: impl Into<String>) -> Self {
        Self {
            pages: Vec::new(),
            source: source.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;

    #[test]
    fn items_sorted_by_order() {
        let mut page = Page::new(0, 100.0, 100.0);
        for (order, text) in [(2usize, "c"), (0, "a"), (1, "b")] {
            let mut item = DocumentItem::new(
                ItemContent::Text { text: text.into() },
                BBox::new(0.0, 0.0, 1.0, 1.0),
                0,
            );
            item.order_index = order;
            page.items.push(item);
        }
        page.sort_items();
        let texts: Vec<_> = page
            .items
            .iter()
            .map(|i| i.content.plain_text())
            .collect();
        assert_eq!(texts, vec!["a", "b", "c"]);
    }

    #[test]
    fn category_round_trip() {
        for cat in [
            LayoutCategory::Text,
            LayoutCategory::Title,
            LayoutCategory::Table,
            LayoutCategory::Formula,
            LayoutCategory::Chart,
            LayoutCategory::Image,
            LayoutCategory::SealText,
            LayoutCategory::Caption,
            LayoutCategory::Header,
            LayoutCategory::Footer,
            LayoutCategory::Other,
        ] {
            assert_eq!(LayoutCategory::parse(cat.as_str()), Some(cat));
        }
    }
}
