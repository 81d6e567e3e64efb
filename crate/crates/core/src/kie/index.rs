//! Exact-search vector index over document chunks.

use std::sync::Arc;

use crate::error::{Error, Result};

use super::{Chunk, Embedder};

/// A flat cosine-similarity index. Search is exact; desk-scale corpora do
/// not need approximate neighbors, and exactness keeps retrieval
/// deterministic.
pub struct VectorIndex {
    dimension: usize,
    entries: Vec<(Vec<f32>, Chunk)>,
    embedder: Arc<dyn Embedder>,
}

impl VectorIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }
}

/// Embeds every chunk and stores (vector, chunk) pairs.
pub fn build_index(chunks: &[Chunk], embedder: Arc<dyn Embedder>) -> Result<VectorIndex> {
    let mut entries = Vec::with_capacity(chunks.len());
    let mut dimension = 0usize;
    for chunk in chunks {
        let vector = embedder.embed(&chunk.text)?;
        if entries.is_empty() {
            dimension = vector.len();
        } else if vector.len() != dimension {
            return Err(Error::EmbedderFailure(format!(
                "inconsistent embedding dimension: {} then {}",
                dimension,
                vector.len()
            )));
        }
        entries.push((vector, chunk.clone()));
    }
    Ok(VectorIndex {
        dimension,
        entries,
        embedder,
    })
}

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
    let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Top-k chunks by cosine similarity, scores non-increasing, ties broken by
/// chunk order.
pub fn retrieve(index: &VectorIndex, query: &str, k: usize) -> Result<Vec<(Chunk, f64)>> {
    if index.is_empty() || k == 0 {
        return Ok(Vec::new());
    }
    let query_vec = index.embedder.embed(query)?;
    if query_vec.len() != index.dimension {
        return Err(Error::EmbedderFailure(format!(
            "query embedding dimension {} does not match index dimension {}",
            query_vec.len(),
            index.dimension
        )));
    }
    let mut scored: Vec<(usize, f64)> = index
        .entries
        .iter()
        .enumerate()
        .map(|(i, (vector, _))| (i, cosine(&query_vec, vector)))
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    Ok(scored
        .into_iter()
        .take(k)
        .map(|(i, score)| (index.entries[i].1.clone(), score))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kie::clients::MockEmbedder;

    fn chunk(text: &str, item: usize) -> Chunk {
        Chunk {
            text: text.into(),
            page_index: 0,
            item_index: item,
            char_span: (0, text.chars().count()),
        }
    }

    #[test]
    fn empty_index_retrieves_nothing() {
        let index = build_index(&[], Arc::new(MockEmbedder::hashing())).unwrap();
        assert_eq!(index.len(), 0);
        assert!(retrieve(&index, "anything", 3).unwrap().is_empty());
    }

    #[test]
    fn identical_text_ranks_first_with_unit_score() {
        let chunks = vec![chunk("invoice number 42", 0), chunk("totally different", 1)];
        let index = build_index(&chunks, Arc::new(MockEmbedder::hashing())).unwrap();
        let hits = retrieve(&index, "invoice number 42", 2).unwrap();
        assert_eq!(hits[0].0.item_index, 0);
        assert!((hits[0].1 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn orthogonal_vectors_score_zero() {
        let embedder = MockEmbedder::with_vectors(
            [
                ("a".to_string(), vec![1.0, 0.0]),
                ("b".to_string(), vec![0.0, 1.0]),
            ]
            .into(),
        );
        let index = build_index(&[chunk("b", 0)], Arc::new(embedder)).unwrap();
        let hits = retrieve(&index, "a", 1).unwrap();
        assert_eq!(hits[0].1, 0.0);
    }

    #[test]
    fn cosine_by_hand() {
        let embedder = MockEmbedder::with_vectors(
            [
                ("q".to_string(), vec![1.0, 0.0]),
                ("c1".to_string(), vec![1.0, 0.0]),
                ("c2".to_string(), vec![0.6, 0.8]),
            ]
            .into(),
        );
        let index = build_index(&[chunk("c1", 0), chunk("c2", 1)], Arc::new(embedder)).unwrap();
        let hits = retrieve(&index, "q", 2).unwrap();
        assert!((hits[0].1 - 1.0).abs() < 1e-6);
        assert!((hits[1].1 - 0.6).abs() < 1e-6);
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let embedder = MockEmbedder::with_vectors(
            [
                ("a".to_string(), vec![1.0, 0.0]),
                ("b".to_string(), vec![1.0, 0.0, 0.0]),
            ]
            .into(),
        );
        assert!(matches!(
            build_index(&[chunk("a", 0), chunk("b", 1)], Arc::new(embedder)),
            Err(Error::EmbedderFailure(_))
        ));
    }

    #[test]
    fn scores_non_increasing_and_bounded_by_k() {
        let chunks: Vec<Chunk> = (0..6).map(|i| chunk(&format!("text {i}"), i)).collect();
        let index = build_index(&chunks, Arc::new(MockEmbedder::hashing())).unwrap();
        let hits = retrieve(&index, "text 3", 4).unwrap();
        assert!(hits.len() <= 4);
        for pair in hits.windows(2) {
            assert!(pair[0].1 >= pair[1].1);
        }
    }
}
