//! Document parsing engine with pluggable inference backends.
//!
//! Every neural model is consumed as an opaque backend behind the
//! [`backends`] boundary, so the deterministic stages — geometry, decoding,
//! layout ordering, composition, retrieval, fusion, evaluation — run and
//! test hermetically with the fixture-backed stub engine.

pub mod backends;
pub mod compose;
pub mod config;
pub mod document;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod geometry;
pub mod items;
pub mod kie;
pub mod layout;
pub mod ocr;
pub mod pdfio;
pub mod pipeline;
pub mod runtime;
pub mod trace;

pub use document::{Document, DocumentItem, ItemContent, LayoutBlock, LayoutCategory, Page, TextLine};
pub use error::{Error, Result};
pub use geometry::{BBox, Point, Polygon, Quad};
