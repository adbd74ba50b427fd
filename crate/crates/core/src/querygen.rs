//! Claim-to-query generation: tf-idf term ranking, named-entity
//! augmentation and query relaxation.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{tokenize, Annotator, HeuristicAnnotator};

pub const MIN_QUERY_TOKENS: usize = 5;
pub const MAX_QUERY_TOKENS: usize = 10;

/// Document frequencies over a reference corpus.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IdfTable {
    doc_count: u64,
    df: HashMap<String, u64>,
}

impl IdfTable {
    pub fn new(doc_count: u64, df: HashMap<String, u64>) -> Result<Self> {
        if doc_count == 0 {
            return Err(Error::invalid("idf table needs at least one document"));
        }
        if let Some((w, &d)) = df.iter().find(|(_, &d)| d == 0 || d > doc_count) {
            return Err(Error::invalid(format!("df({w}) = {d} outside [1, {doc_count}]")));
        }
        Ok(IdfTable { doc_count, df })
    }

    pub fn doc_count(&self) -> u64 {
        self.doc_count
    }

    pub fn df(&self, word: &str) -> u64 {
        self.df.get(word).copied().unwrap_or(0)
    }

    /// Smoothed idf: `ln((N + 1) / (df + 1)) + 1`, with `df = 0` for unseen words.
    pub fn idf(&self, word: &str) -> f64 {
        let n = self.doc_count as f64;
        ((n + 1.0) / (self.df(word) as f64 + 1.0)).ln() + 1.0
    }

    pub fn vocab_len(&self) -> usize {
        self.df.len()
    }

    /// Reads the `N=<int>` header followed by `token<TAB>df` lines.
    pub fn parse(source: &str, source_name: &str) -> Result<Self> {
        let mut lines = source.lines().enumerate();
        let doc_count = loop {
            match lines.next() {
                Some((_, l)) if l.trim().is_empty() => continue,
                Some((i, l)) => {
                    let n = l
                        .trim()
                        .strip_prefix("N=")
                        .and_then(|v| v.parse::<u64>().ok())
                        .ok_or_else(|| Error::format(source_name, i + 1, "expected header `N=<int>`"))?;
                    break n;
                }
                None => return Err(Error::format(source_name, 0, "missing header")),
            }
        };
        let mut df = HashMap::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(source_name, i + 1, "expected `token<TAB>df`"))?;
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|_| Error::format(source_name, i + 1, format!("bad df `{count}`")))?;
            if count == 0 || count > doc_count {
                return Err(Error::format(source_name, i + 1, format!("df {count} outside [1, {doc_count}]")));
            }
            df.insert(word.to_string(), count);
        }
        IdfTable::new(doc_count, df).map_err(|e| Error::format(source_name, 0, e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        IdfTable::parse(&text, &path.display().to_string())
    }

    /// Serializes with tokens sorted, so equal tables give equal files.
    pub fn to_file_string(&self) -> String {
        let mut words: Vec<_> = self.df.iter().collect();
        words.sort();
        let mut out = format!("N={}\n", self.doc_count);
        for (w, d) in words {
            let _ = writeln!(out, "{w}\t{d}");
        }
        out
    }

    /// Table precomputed from the bundled document sample.
    pub fn bundled() -> &'static IdfTable {
        static TABLE: OnceLock<IdfTable> = OnceLock::new();
        TABLE.get_or_init(|| IdfTable::parse(include_str!("../data/idf.tsv"), "idf.tsv").expect("bundled idf table parses"))
    }
}

/// Counts, for every lowercase token, the documents containing it.
pub fn build_idf<I, S>(corpus: I) -> Result<IdfTable>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut doc_count = 0;
    let mut df: HashMap<String, u64> = HashMap::new();
    for doc in corpus {
        doc_count += 1;
        let words: HashSet<String> = tokenize(doc.as_ref()).into_iter().map(|t| t.lower).collect();
        for w in words {
            *df.entry(w).or_default() += 1;
        }
    }
    if doc_count == 0 {
        return Err(Error::invalid("idf corpus is empty"));
    }
    IdfTable::new(doc_count, df)
}

/// Builds an idf table from a JSON-lines corpus with a `text` field per line.
pub fn build_idf_from_jsonl(reader: impl BufRead, source_name: &str) -> Result<IdfTable> {
    #[derive(Deserialize)]
    struct Doc {
        text: String,
    }
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::format(source_name, i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Doc = serde_json::from_str(&line).map_err(|e| Error::format(source_name, i + 1, e.to_string()))?;
        docs.push(doc.text);
    }
    build_idf(docs)
}

pub fn build_idf_from_path(path: impl AsRef<Path>) -> Result<IdfTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    build_idf_from_jsonl(BufReader::new(file), &path.display().to_string())
}

/// Content words of the claim scored by `tf * idf`, highest first.
/// Equal scores keep the order of first occurrence.
pub fn rank_terms(claim_text: &str, idf: &IdfTable) -> Vec<(String, f64)> {
    rank_terms_with(claim_text, idf, &HeuristicAnnotator::default())
}

pub fn rank_terms_with(claim_text: &str, idf: &IdfTable, annotator: &dyn Annotator) -> Vec<(String, f64)> {
    let content = annotator.content_tokens(&tokenize(claim_text));
    let mut order: Vec<String> = Vec::new();
    let mut tf: HashMap<String, u32> = HashMap::new();
    for t in content {
        let count = tf.entry(t.lower.clone()).or_default();
        if *count == 0 {
            order.push(t.lower);
        }
        *count += 1;
    }
    let mut ranked: Vec<(String, f64)> = order
        .into_iter()
        .map(|w| {
            let score = f64::from(tf[&w]) * idf.idf(&w);
            (w, score)
        })
        .collect();
    // stable: ties stay in claim order
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_claim_id: Option<String>,
}

impl Query {
    /// Builds a query from raw tokens, lowercasing and dropping duplicates.
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let tokens: Vec<String> = tokens
            .into_iter()
            .map(|t| t.as_ref().to_lowercase())
            .filter(|t| !t.is_empty() && seen.insert(t.clone()))
            .collect();
        if tokens.is_empty() {
            return Err(Error::EmptyQuery);
        }
        if tokens.len() > MAX_QUERY_TOKENS {
            return Err(Error::invalid(format!("query longer than {MAX_QUERY_TOKENS} tokens")));
        }
        Ok(Query {
            tokens,
            origin_claim_id: None,
        })
    }

    pub fn with_origin(mut self, claim_id: impl Into<String>) -> Self {
        self.origin_claim_id = Some(claim_id.into());
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Lowercase, single-space-joined form used for cache and fixture keys.
    pub fn normalized(&self) -> String {
        self.tokens.join(" ")
    }
}

impl std::fmt::Display for Query {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.normalized())
    }
}

/// Entity tokens first (in order of appearance), then the best tf-idf terms,
/// up to [`MAX_QUERY_TOKENS`]. Claims with fewer candidates yield all of them.
pub fn generate_query(claim_text: &str, idf: &IdfTable) -> Result<Query> {
    generate_query_with(claim_text, idf, &HeuristicAnnotator::default())
}

pub fn generate_query_with(claim_text: &str, idf: &IdfTable, annotator: &dyn Annotator) -> Result<Query> {
    let mut seen = HashSet::new();
    let mut tokens = Vec::new();
    let entity_tokens = annotator
        .entities(claim_text)
        .into_iter()
        .flat_map(|e| e.tokens.into_iter().map(|t| t.lower));
    let ranked = rank_terms_with(claim_text, idf, annotator).into_iter().map(|(w, _)| w);

    for w in entity_tokens.chain(ranked) {
        if tokens.len() == MAX_QUERY_TOKENS {
            break;
        }
        if seen.insert(w.clone()) {
            tokens.push(w);
        }
    }
    if tokens.is_empty() {
        return Err(Error::EmptyQuery);
    }
    Ok(Query {
        tokens,
        origin_claim_id: None,
    })
}

/// Drops the final token.
pub fn relax(query: &Query) -> Result<Query> {
    if query.len() < 2 {
        return Err(Error::CannotRelax);
    }
    Ok(Query {
        tokens: query.tokens[..query.len() - 1].to_vec(),
        origin_claim_id: query.origin_claim_id.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn flat_idf() -> IdfTable {
        IdfTable::new(1, HashMap::new()).unwrap()
    }

    #[test]
    fn idf_closed_forms() {
        let t = build_idf(["apple pie", "apple tart"]).unwrap();
        assert_abs_diff_eq!(t.idf("apple"), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.idf("pie"), (1.5f64).ln() + 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.idf("pie"), 1.405465, epsilon = 1e-6);
        assert_abs_diff_eq!(t.idf("unseen"), (3f64).ln() + 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.idf("unseen"), 2.098612, epsilon = 1e-6);
    }

    #[test]
    fn idf_counts_documents_not_occurrences() {
        let t = build_idf(["Apple apple APPLE", "pear"]).unwrap();
        assert_eq!(t.df("apple"), 1);
        assert!(matches!(build_idf(Vec::<String>::new()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn idf_file_round_trip() {
        let t = build_idf(["a b", "b c", "c d e"]).unwrap();
        let s = t.to_file_string();
        assert!(s.starts_with("N=3\n"));
        assert_eq!(IdfTable::parse(&s, "x").unwrap(), t);
        assert!(matches!(IdfTable::parse("N=2\nfoo\t3\n", "x"), Err(Error::Format { line: 2, .. })));
        assert!(matches!(IdfTable::parse("foo\t1\n", "x"), Err(Error::Format { line: 1, .. })));
    }

    #[test]
    fn ranking() {
        assert!(rank_terms("of the and by", &flat_idf()).is_empty());
        let r = rank_terms("clock clock bomb", &flat_idf());
        assert_eq!(r.iter().map(|(w, _)| w.as_str()).collect::<Vec<_>>(), ["clock", "bomb"]);
        let r = rank_terms("zebra apple", &flat_idf());
        assert_eq!(r.iter().map(|(w, _)| w.as_str()).collect::<Vec<_>>(), ["zebra", "apple"]);
    }

    #[test]
    fn query_entities_first() {
        let claim = "Police arrested Ahmed Mohamed in Irving after his clock was mistaken for a bomb at school";
        let q = generate_query(claim, &flat_idf()).unwrap();
        assert_eq!(&q.tokens[..3], ["ahmed", "mohamed", "irving"]);
        assert!(q.len() >= MIN_QUERY_TOKENS && q.len() <= MAX_QUERY_TOKENS);
        assert!(q.tokens[3..].contains(&"clock".to_string()));
    }

    #[test]
    fn query_capped_at_ten() {
        let words = "alpha bravo charlie delta echo foxtrot golf hotel india juliet kilo lima";
        let idf = build_idf(words.split(' ').enumerate().flat_map(|(i, w)| vec![w; i + 1])).unwrap();
        let q = generate_query(words, &idf).unwrap();
        assert_eq!(q.len(), 10);
        // rarer words (lower df) rank first
        assert_eq!(q.tokens[0], "alpha");
        assert!(!q.tokens.contains(&"lima".to_string()) && !q.tokens.contains(&"kilo".to_string()));
    }

    #[test]
    fn query_errors_and_short_claims() {
        assert!(matches!(generate_query("Of the and by", &flat_idf()), Err(Error::EmptyQuery)));
        assert_eq!(generate_query("cats purr", &flat_idf()).unwrap().tokens, ["cats", "purr"]);
    }

    #[test]
    fn relaxation() {
        let q = Query::new(["a", "b", "c"]).unwrap();
        let r = relax(&q).unwrap();
        assert_eq!(r.tokens, ["a", "b"]);
        assert_eq!(relax(&r).unwrap().tokens, ["a"]);
        assert!(matches!(relax(&relax(&r).unwrap()), Err(Error::CannotRelax)));
    }

    proptest! {
        #[test]
        fn query_contract(words in proptest::collection::vec("[A-Za-z]{1,7}", 1..25)) {
            let claim = words.join(" ");
            let idf = IdfTable::bundled();
            let candidates: HashSet<String> = {
                let a = HeuristicAnnotator::default();
                let mut c: HashSet<String> = a.entities(&claim).iter().flat_map(|e| e.tokens.iter().map(|t| t.lower.clone())).collect();
                c.extend(rank_terms(&claim, idf).into_iter().map(|(w, _)| w));
                c
            };
            match generate_query(&claim, idf) {
                Ok(q) => {
                    prop_assert!(q.len() >= MIN_QUERY_TOKENS.min(candidates.len()) && q.len() <= MAX_QUERY_TOKENS);
                    let lower = claim.to_lowercase();
                    for t in &q.tokens {
                        prop_assert!(lower.contains(t.as_str()));
                        prop_assert_eq!(t, &t.to_lowercase());
                    }
                    let unique: HashSet<_> = q.tokens.iter().collect();
                    prop_assert_eq!(unique.len(), q.len());
                    if q.len() >= 2 {
                        let r = relax(&q).unwrap();
                        prop_assert_eq!(r.len() + 1, q.len());
                        prop_assert_eq!(&q.tokens[..r.len()], &r.tokens[..]);
                    }
                }
                Err(Error::EmptyQuery) => prop_assert!(candidates.is_empty()),
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
            let ranked = rank_terms(&claim, idf);
            prop_assert!(ranked.windows(2).all(|w| w[0].1 >= w[1].1));
        }
    }
}
