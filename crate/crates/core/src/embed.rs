//! Pre-trained word vectors and averaged text embeddings.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::OnceLock;

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::text::Token;

/// Word vectors of a fixed dimension, immutable after loading.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    vectors: Array2<f64>,
    source_name: String,
}

impl EmbeddingTable {
    /// A table with no words; every lookup misses.
    pub fn empty(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            index: HashMap::new(),
            vectors: Array2::zeros((0, dim)),
            source_name: "empty".into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    pub fn get(&self, word: &str) -> Option<ArrayView1<'_, f64>> {
        self.index.get(word).map(|&row| self.vectors.row(row))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// The small table shipped with the crate (d = 8), covering the
    /// vocabulary of the bundled synthetic corpus.
    pub fn bundled() -> &'static EmbeddingTable {
        static TABLE: OnceLock<EmbeddingTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            load_embeddings(include_str!("../data/embeddings_d8.txt").as_bytes(), "embeddings_d8.txt")
                .expect("bundled embedding table parses")
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        load_embeddings(BufReader::new(file), &path.display().to_string())
    }
}

/// Parses `token v1 v2 ... vd` lines (the GloVe text format).
///
/// Blank lines are ignored. Every row must have the dimension of the first
/// row; a repeated token keeps its first vector.
pub fn load_embeddings(reader: impl BufRead, source_name: &str) -> Result<EmbeddingTable> {
    let mut dim = 0;
    let mut index = HashMap::new();
    let mut data = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::format(source_name, lineno, e.to_string()))?;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else {
            continue;
        };
        let values = fields
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::format(source_name, lineno, format!("bad number: {e}")))?;
        if values.is_empty() {
            return Err(Error::format(source_name, lineno, "row has no vector components"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::format(source_name, lineno, format!("non-finite component {v}")));
        }
        if dim == 0 {
            dim = values.len();
        } else if values.len() != dim {
            return Err(Error::format(
                source_name,
                lineno,
                format!("expected {dim} components, found {}", values.len()),
            ));
        }
        if index.contains_key(word) {
            continue;
        }
        index.insert(word.to_string(), index.len());
        data.extend(values);
    }

    if index.is_empty() {
        return Err(Error::format(source_name, 0, "no embedding rows"));
    }
    let vectors = Array2::from_shape_vec((index.len(), dim), data).expect("row-major rows of equal length");
    Ok(EmbeddingTable {
        dim,
        index,
        vectors,
        source_name: source_name.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextEmbedding {
    pub vector: Array1<f64>,
    /// Fraction of tokens found in the vocabulary.
    pub coverage: f64,
}

/// Mean of the vectors of in-vocabulary tokens (looked up lowercased).
/// Out-of-vocabulary tokens are skipped; with none found the result is the
/// zero vector with coverage 0.
pub fn avg_embedding(tokens: &[Token], table: &EmbeddingTable) -> TextEmbedding {
    // Summing rows in table order makes the result independent of token order.
    let mut rows: Vec<usize> = tokens.iter().filter_map(|t| table.index.get(&t.lower).copied()).collect();
    rows.sort_unstable();

    let mut vector = Array1::zeros(table.dim);
    for &r in &rows {
        vector += &table.vectors.row(r);
    }
    if !rows.is_empty() {
        vector /= rows.len() as f64;
    }
    let coverage = if tokens.is_empty() {
        0.0
    } else {
        rows.len() as f64 / tokens.len() as f64
    };
    TextEmbedding { vector, coverage }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;
    use proptest::prelude::*;

    fn table(src: &str) -> EmbeddingTable {
        load_embeddings(src.as_bytes(), "test").unwrap()
    }

    #[test]
    fn loads_rows() {
        let t = table("a 1 2 3\nb 4 5 6\n");
        assert_eq!((t.dim(), t.len()), (3, 2));
        assert_eq!(t.get("b").unwrap().to_vec(), vec![4.0, 5.0, 6.0]);
    }

    #[test]
    fn inconsistent_dimension_reports_line() {
        let err = load_embeddings("a 1 2 3\nb 1 2 3 4\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }), "{err}");
    }

    #[test]
    fn duplicate_keeps_first() {
        let t = table("a 1 1\na 2 2\n");
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("a").unwrap().to_vec(), vec![1.0, 1.0]);
    }

    #[test]
    fn empty_stream_is_error() {
        assert!(matches!(load_embeddings("".as_bytes(), "t"), Err(Error::Format { .. })));
        assert!(matches!(load_embeddings("\n\n".as_bytes(), "t"), Err(Error::Format { .. })));
        assert!(matches!(load_embeddings("a x y\n".as_bytes(), "t"), Err(Error::Format { line: 1, .. })));
    }

    #[test]
    fn averages() {
        let t = table("w 1 2 3\n");
        let e = avg_embedding(&tokenize("W"), &t);
        assert_eq!(e.vector.to_vec(), vec![1.0, 2.0, 3.0]);
        assert_eq!(e.coverage, 1.0);

        let t = table("u 0 0\nv 2 4\n");
        assert_eq!(avg_embedding(&tokenize("u v"), &t).vector.to_vec(), vec![1.0, 2.0]);

        let e = avg_embedding(&tokenize("oov1 oov2"), &t);
        assert_eq!(e.vector.to_vec(), vec![0.0, 0.0]);
        assert_eq!(e.coverage, 0.0);

        let e = avg_embedding(&tokenize("u oov"), &t);
        assert_eq!(e.coverage, 0.5);
    }

    #[test]
    fn bundled_table_loads() {
        let t = EmbeddingTable::bundled();
        assert_eq!(t.dim(), 8);
        assert!(t.len() >= 150, "{}", t.len());
    }

    proptest! {
        #[test]
        fn permutation_invariant_and_bounded(words in proptest::collection::vec(0usize..6, 1..10), seed in any::<u64>()) {
            let t = table("w0 1 -2\nw1 0.5 3\nw2 -1.25 0\nw3 7 1\n");
            let text: Vec<String> = words.iter().map(|i| format!("w{i}")).collect();
            let mut shuffled = text.clone();
            let k = (seed as usize) % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let a = avg_embedding(&tokenize(&text.join(" ")), &t);
            let b = avg_embedding(&tokenize(&shuffled.join(" ")), &t);
            prop_assert_eq!(&a, &b);

            let contributing: Vec<_> = text.iter().filter_map(|w| t.get(w)).collect();
            for c in 0..t.dim() {
                let lo = contributing.iter().map(|v| v[c]).fold(f64::INFINITY, f64::min);
                let hi = contributing.iter().map(|v| v[c]).fold(f64::NEG_INFINITY, f64::max);
                if !contributing.is_empty() {
                    prop_assert!(a.vector[c] >= lo - 1e-12 && a.vector[c] <= hi + 1e-12);
                }
            }
        }
    }
}
