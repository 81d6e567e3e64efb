//! Markdown emission.

use crate::document::{Document, DocumentItem, ItemContent};

/// Markdown rendering options.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MarkdownOptions {
    /// Include Header and Footer items (omitted by default).
    pub include_headers_footers: bool,
}

fn render_item(item: &DocumentItem, items: &[DocumentItem], opts: &MarkdownOptions) -> Option<String> {
    match &item.content {
        ItemContent::Text { text } => Some(text.clone()),
        ItemContent::Title { text, level } => {
            let hashes = "#".repeat((*level).clamp(1, 6) as usize);
            Some(format!("{hashes} {text}"))
        }
        ItemContent::Table { html } => Some(html.clone()),
        ItemContent::Formula { latex } => Some(format!("$$\n{latex}\n$$")),
        ItemContent::Chart { markdown_table } => Some(markdown_table.clone()),
        ItemContent::Image { path } => {
            let caption = item
                .caption_link
                .and_then(|ci| items.get(ci))
                .map(|c| c.content.plain_text())
                .unwrap_or_default();
            Some(format!("![{caption}]({path})"))
        }
        ItemContent::Seal { text } => Some(format!("*{text}*")),
        ItemContent::Caption { text } => Some(text.clone()),
        ItemContent::Header { text } | ItemContent::Footer { text } => {
            opts.include_headers_footers.then(|| text.clone())
        }
    }
}

/// Renders a document as Markdown, item order following `order_index`.
/// Blocks are separated by blank lines; tables embed as HTML to preserve
/// spans.
pub fn emit_markdown(doc: &Document, opts: &MarkdownOptions) -> String {
    let mut blocks: Vec<String> = Vec::new();
    for page in &doc.pages {
        let mut items: Vec<&DocumentItem> = page.items.iter().collect();
        items.sort_by_key(|i| i.order_index);
        for item in items {
            if let Some(block) = render_item(item, &page.items, opts) {
                blocks.push(block);
            }
        }
    }
    if blocks.is_empty() {
        String::new()
    } else {
        format!("{}\n", blocks.join("\n\n"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::Page;
    use crate::geometry::BBox;

    fn doc_with(contents: Vec<ItemContent>) -> Document {
        let mut page = Page::new(0, 100.0, 100.0);
        for (i, content) in contents.into_iter().enumerate() {
            let mut item = DocumentItem::new(content, BBox::new(0.0, 0.0, 10.0, 10.0), 0);
            item.order_index = i;
            page.items.push(item);
        }
        let mut doc = Document::new("test");
        doc.pages.push(page);
        doc
    }

    #[test]
    fn single_text_item() {
        let doc = doc_with(vec![ItemContent::Text { text: "hello".into() }]);
        assert_eq!(emit_markdown(&doc, &MarkdownOptions::default()), "hello\n");
    }

    #[test]
    fn title_level_one() {
        let doc = doc_with(vec![ItemContent::Title { text: "Intro".into(), level: 1 }]);
        assert_eq!(emit_markdown(&doc, &MarkdownOptions::default()), "# Intro\n");
    }

    #[test]
    fn formula_fenced_with_dollars() {
        let doc = doc_with(vec![ItemContent::Formula { latex: "E=mc^2".into() }]);
        assert_eq!(emit_markdown(&doc, &MarkdownOptions::default()), "$$\nE=mc^2\n$$\n");
    }

    #[test]
    fn headers_omitted_unless_requested() {
        let doc = doc_with(vec![
            ItemContent::Header { text: "running head".into() },
            ItemContent::Text { text: "body".into() },
        ]);
        assert_eq!(emit_markdown(&doc, &MarkdownOptions::default()), "body\n");
        let with = MarkdownOptions { include_headers_footers: true };
        assert_eq!(emit_markdown(&doc, &with), "running head\n\nbody\n");
    }

    #[test]
    fn image_with_linked_caption_as_alt() {
        let mut doc = doc_with(vec![
            ItemContent::Image { path: "page0_item0.png".into() },
            ItemContent::Caption { text: "Figure 1".into() },
        ]);
        doc.pages[0].items[0].caption_link = Some(1);
        doc.pages[0].items[1].target_link = Some(0);
        let md = emit_markdown(&doc, &MarkdownOptions::default());
        assert_eq!(md, "![Figure 1](page0_item0.png)\n\nFigure 1\n");
    }

    #[test]
    fn order_follows_order_index() {
        let mut doc = doc_with(vec![
            ItemContent::Text { text: "second".into() },
            ItemContent::Text { text: "first".into() },
        ]);
        doc.pages[0].items[0].order_index = 1;
        doc.pages[0].items[1].order_index = 0;
        assert_eq!(
            emit_markdown(&doc, &MarkdownOptions::default()),
            "first\n\nsecond\n"
        );
    }

    #[test]
    fn seal_rendered_italic() {
        let doc = doc_with(vec![ItemContent::Seal { text: "OFFICIAL".into() }]);
        assert_eq!(emit_markdown(&doc, &MarkdownOptions::default()), "*OFFICIAL*\n");
    }
}
