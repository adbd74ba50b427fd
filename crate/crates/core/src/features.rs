//! Claim/evidence similarities, best-match selection and feature vectors.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::embed::{avg_embedding, EmbeddingTable};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::neural::{encode_example, NnModel, SequenceCaps, HIDDEN_UNITS};
use crate::querygen::IdfTable;
use crate::retrieve::{Engine, EvidenceBundle, SearchResult};
use crate::text::{split_sentences, tokenize, word_ngrams, Token};

pub const CONTAINMENT_ORDER: usize = 3;
pub const SIMILARITY_SLOTS: usize = 24;
pub const BRANCHES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTriple {
    pub tfidf_cos: f64,
    pub emb_cos: f64,
    pub containment: f64,
}

impl SimilarityTriple {
    pub const ZERO: SimilarityTriple = SimilarityTriple {
        tfidf_cos: 0.0,
        emb_cos: 0.0,
        containment: 0.0,
    };

    pub fn as_array(&self) -> [f64; 3] {
        [self.tfidf_cos, self.emb_cos, self.containment]
    }

    /// Mean of the three measures with the embedding cosine rescaled to [0, 1].
    pub fn selection_score(&self) -> f64 {
        (self.tfidf_cos + (self.emb_cos + 1.0) / 2.0 + self.containment) / 3.0
    }
}

/// Tokenized text with its tf-idf weights and mean embedding precomputed.
struct Profile {
    tokens: Vec<Token>,
    weights: BTreeMap<String, f64>,
    norm: f64,
    embedding: Array1<f64>,
}

impl Profile {
    fn new(text: &str, idf: &IdfTable, table: &EmbeddingTable) -> Self {
        let tokens = tokenize(text);
        let mut weights: BTreeMap<String, f64> = BTreeMap::new();
        for t in &tokens {
            *weights.entry(t.lower.clone()).or_default() += 1.0;
        }
        for (w, v) in weights.iter_mut() {
            *v *= idf.idf(w);
        }
        let norm = weights.values().map(|v| v * v).sum::<f64>().sqrt();
        let embedding = avg_embedding(&tokens, table).vector;
        Profile {
            tokens,
            weights,
            norm,
            embedding,
        }
    }
}

fn tfidf_profiles(a: &Profile, b: &Profile) -> f64 {
    if a.norm == 0.0 || b.norm == 0.0 {
        return 0.0;
    }
    // Walk keys in sorted order on the smaller side so the sum is the same
    // whichever argument comes first.
    let (small, large) = if (a.weights.len(), &a.weights) <= (b.weights.len(), &b.weights) {
        (a, b)
    } else {
        (b, a)
    };
    let dot: f64 = small
        .weights
        .iter()
        .filter_map(|(w, x)| large.weights.get(w).map(|y| x * y))
        .sum();
    (dot / (a.norm * b.norm)).clamp(0.0, 1.0)
}

fn cosine(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let na = a.dot(a).sqrt();
    let nb = b.dot(b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (a.dot(b) / (na * nb)).clamp(-1.0, 1.0)
}

fn containment_tokens(a: &[Token], b: &[Token]) -> f64 {
    let n = if a.len() < CONTAINMENT_ORDER { 1 } else { CONTAINMENT_ORDER };
    let sa = word_ngrams(a, n).expect("n >= 1");
    if sa.is_empty() {
        return 0.0;
    }
    // Same order on both sides; a short evidence text simply has no n-grams.
    let sb: std::collections::BTreeSet<String> = b
        .windows(n)
        .map(|w| w.iter().map(|t| t.lower.as_str()).collect::<Vec<_>>().join(" "))
        .collect();
    sa.intersection(&sb).count() as f64 / sa.len() as f64
}

fn triple(a: &Profile, b: &Profile) -> SimilarityTriple {
    SimilarityTriple {
        tfidf_cos: tfidf_profiles(a, b),
        emb_cos: cosine(&a.embedding, &b.embedding),
        containment: containment_tokens(&a.tokens, &b.tokens),
    }
}

/// Cosine of the tf-idf vectors of the lowercased tokens; 0 when either side
/// has no weight.
pub fn tfidf_cosine(a: &str, b: &str, idf: &IdfTable) -> f64 {
    let empty = EmbeddingTable::empty(1);
    tfidf_profiles(&Profile::new(a, idf, &empty), &Profile::new(b, idf, &empty))
}

/// Cosine of the mean word embeddings; 0 when either side has no known word.
pub fn embedding_cosine(a: &str, b: &str, table: &EmbeddingTable) -> f64 {
    cosine(
        &avg_embedding(&tokenize(a), table).vector,
        &avg_embedding(&tokenize(b), table).vector,
    )
}

/// Share of the word trigrams of `a` that also occur in `b`. A claim shorter
/// than three tokens is compared on unigrams.
pub fn containment(a: &str, b: &str) -> f64 {
    containment_tokens(&tokenize(a), &tokenize(b))
}

pub fn similarity_triple(claim: &str, text: &str, idf: &IdfTable, table: &EmbeddingTable) -> SimilarityTriple {
    triple(&Profile::new(claim, idf, table), &Profile::new(text, idf, table))
}

pub fn selection_score(claim: &str, text: &str, idf: &IdfTable, table: &EmbeddingTable) -> f64 {
    similarity_triple(claim, text, idf, table).selection_score()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Snippet,
    Page,
}

impl Source {
    pub const ALL: [Source; 2] = [Source::Snippet, Source::Page];

    pub fn name(self) -> &'static str {
        match self {
            Source::Snippet => "snippet",
            Source::Page => "page",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestMatch {
    /// The snippet, or the sentence triplet taken verbatim from the page.
    pub text: String,
    pub score: f64,
    pub similarities: SimilarityTriple,
    pub source: Source,
    /// Unset when matching a bare page text.
    pub engine: Option<Engine>,
    pub rank: Option<usize>,
}

/// Rolling windows of three consecutive sentences, or the whole text when it
/// has fewer than three.
pub fn sentence_triplets(page_text: &str) -> Vec<String> {
    let sentences = split_sentences(page_text);
    if sentences.len() < 3 {
        let whole = page_text.trim();
        return if whole.is_empty() { Vec::new() } else { vec![whole.to_string()] };
    }
    sentences
        .windows(3)
        .map(|w| page_text[w[0].char_span.0..w[2].char_span.1].to_string())
        .collect()
}

fn best_window(claim: &Profile, page_text: &str, idf: &IdfTable, table: &EmbeddingTable) -> Option<(String, SimilarityTriple)> {
    let mut best: Option<(String, SimilarityTriple, f64)> = None;
    for window in sentence_triplets(page_text) {
        let sims = triple(claim, &Profile::new(&window, idf, table));
        let score = sims.selection_score();
        if best.as_ref().is_none_or(|b| score > b.2) {
            best = Some((window, sims, score));
        }
    }
    best.map(|(w, s, _)| (w, s))
}

/// Highest-scoring sentence triplet of a page; ties go to the earliest window.
pub fn best_triplet(claim: &str, page_text: &str, idf: &IdfTable, table: &EmbeddingTable) -> Result<BestMatch> {
    let (text, similarities) = best_window(&Profile::new(claim, idf, table), page_text, idf, table).ok_or(Error::NoMatch)?;
    Ok(BestMatch {
        text,
        score: similarities.selection_score(),
        similarities,
        source: Source::Page,
        engine: None,
        rank: None,
    })
}

/// All non-empty snippets, best first; equal scores keep rank order.
pub fn rank_snippets(claim: &str, results: &[SearchResult], idf: &IdfTable, table: &EmbeddingTable) -> Vec<BestMatch> {
    let profile = Profile::new(claim, idf, table);
    let mut matches: Vec<BestMatch> = results
        .iter()
        .filter(|r| !r.snippet.trim().is_empty())
        .map(|r| {
            let similarities = triple(&profile, &Profile::new(&r.snippet, idf, table));
            BestMatch {
                text: r.snippet.clone(),
                score: similarities.selection_score(),
                similarities,
                source: Source::Snippet,
                engine: Some(r.engine),
                rank: Some(r.rank),
            }
        })
        .collect();
    matches.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.rank.cmp(&b.rank)));
    matches
}

/// Best snippet by selection score; ties go to the lower rank.
pub fn best_snippet(claim: &str, results: &[SearchResult], idf: &IdfTable, table: &EmbeddingTable) -> Result<BestMatch> {
    rank_snippets(claim, results, idf, table).into_iter().next().ok_or(Error::NoMatch)
}

/// 24 aggregated similarities plus a presence bit per (engine, source).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityBlock {
    pub values: Vec<f64>,
    /// Indexed by [`SimilarityBlock::group`].
    pub present: [bool; 4],
}

const AGGREGATES: [&str; 2] = ["max", "avg"];
const MEASURES: [&str; 3] = ["tfidf_cos", "emb_cos", "containment"];

impl SimilarityBlock {
    pub fn empty() -> Self {
        SimilarityBlock {
            values: vec![0.0; SIMILARITY_SLOTS],
            present: [false; 4],
        }
    }

    pub fn group(engine: Engine, source: Source) -> usize {
        engine as usize * 2 + source as usize
    }

    /// `aggregate` 0 is max, 1 is mean; `measure` follows [`SimilarityTriple::as_array`].
    pub fn slot(engine: Engine, source: Source, aggregate: usize, measure: usize) -> usize {
        (Self::group(engine, source) * 2 + aggregate) * 3 + measure
    }

    pub fn get(&self, engine: Engine, source: Source, aggregate: usize, measure: usize) -> f64 {
        self.values[Self::slot(engine, source, aggregate, measure)]
    }

    pub fn is_present(&self, engine: Engine, source: Source) -> bool {
        self.present[Self::group(engine, source)]
    }

    /// Names like `google.snippet.max.tfidf_cos`, in slot order.
    pub fn slot_names() -> Vec<String> {
        let mut names = Vec::with_capacity(SIMILARITY_SLOTS);
        for engine in Engine::ALL {
            for source in Source::ALL {
                for agg in AGGREGATES {
                    for m in MEASURES {
                        names.push(format!("{engine}.{}.{agg}.{m}", source.name()));
                    }
                }
            }
        }
        names
    }

    fn fill(&mut self, engine: Engine, source: Source, triples: &[SimilarityTriple]) {
        if triples.is_empty() {
            return;
        }
        self.present[Self::group(engine, source)] = true;
        for m in 0..3 {
            let column = triples.iter().map(|t| t.as_array()[m]);
            let max = column.clone().fold(f64::NEG_INFINITY, f64::max);
            let mean = column.sum::<f64>() / triples.len() as f64;
            self.values[Self::slot(engine, source, 0, m)] = max;
            // guards against the mean drifting above the max by rounding
            self.values[Self::slot(engine, source, 1, m)] = mean.min(max);
        }
    }
}

/// Similarity block and best matches for one claim against its evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceAnalysis {
    pub block: SimilarityBlock,
    /// Snippets of all engines, best first.
    pub snippets: Vec<BestMatch>,
    pub best_snippet: BTreeMap<Engine, BestMatch>,
    pub best_triplet: BTreeMap<Engine, BestMatch>,
}

pub fn analyze_evidence(claim: &str, bundle: &EvidenceBundle, idf: &IdfTable, table: &EmbeddingTable) -> EvidenceAnalysis {
    let profile = Profile::new(claim, idf, table);
    let mut block = SimilarityBlock::empty();
    let mut snippets = Vec::new();
    let mut best_snippet = BTreeMap::new();
    let mut best_triplet = BTreeMap::new();

    for ev in &bundle.engines {
        let ranked = rank_snippets(claim, &ev.results, idf, table);
        let triples: Vec<SimilarityTriple> = ranked.iter().map(|m| m.similarities).collect();
        block.fill(ev.engine, Source::Snippet, &triples);
        if let Some(best) = ranked.first() {
            best_snippet.insert(ev.engine, best.clone());
        }
        snippets.extend(ranked);

        let mut page_triples = Vec::new();
        let mut best_page: Option<BestMatch> = None;
        for r in &ev.results {
            let Some(page) = r.page_text.as_deref() else { continue };
            let Some((text, similarities)) = best_window(&profile, page, idf, table) else { continue };
            page_triples.push(similarities);
            let score = similarities.selection_score();
            if best_page.as_ref().is_none_or(|b| score > b.score) {
                best_page = Some(BestMatch {
                    text,
                    score,
                    similarities,
                    source: Source::Page,
                    engine: Some(ev.engine),
                    rank: Some(r.rank),
                });
            }
        }
        block.fill(ev.engine, Source::Page, &page_triples);
        if let Some(best) = best_page {
            best_triplet.insert(ev.engine, best);
        }
    }
    snippets.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.engine.cmp(&b.engine))
            .then(a.rank.cmp(&b.rank))
    });
    EvidenceAnalysis {
        block,
        snippets,
        best_snippet,
        best_triplet,
    }
}

/// Max and mean of each similarity over the hits of every engine and source.
/// Pages contribute the similarities of their best triplet.
pub fn aggregate_similarities(claim: &str, bundle: &EvidenceBundle, idf: &IdfTable, table: &EmbeddingTable) -> SimilarityBlock {
    analyze_evidence(claim, bundle, idf, table).block
}

/// The five texts fed to the sequence encoders and embedding blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchTexts {
    pub names: [String; BRANCHES],
    pub texts: [Option<String>; BRANCHES],
}

impl BranchTexts {
    pub const RUMOR_NAMES: [&'static str; BRANCHES] =
        ["claim", "google.snippet", "google.triplet", "bing.snippet", "bing.triplet"];
    pub const CQA_NAMES: [&'static str; BRANCHES] = ["question", "answer", "snippet.1", "snippet.2", "unused"];

    pub fn rumor(claim: &str, analysis: &EvidenceAnalysis) -> Self {
        let pick = |m: &BTreeMap<Engine, BestMatch>, e: Engine| m.get(&e).map(|b| b.text.clone());
        BranchTexts {
            names: Self::RUMOR_NAMES.map(String::from),
            texts: [
                Some(claim.to_string()),
                pick(&analysis.best_snippet, Engine::Google),
                pick(&analysis.best_triplet, Engine::Google),
                pick(&analysis.best_snippet, Engine::Bing),
                pick(&analysis.best_triplet, Engine::Bing),
            ],
        }
    }

    /// Question, answer and the two best snippets overall; the fifth branch
    /// stays empty.
    pub fn cqa(question: &str, answer: &str, analysis: &EvidenceAnalysis) -> Self {
        let snippet = |i: usize| analysis.snippets.get(i).map(|m| m.text.clone());
        BranchTexts {
            names: Self::CQA_NAMES.map(String::from),
            texts: [Some(question.to_string()), Some(answer.to_string()), snippet(0), snippet(1), None],
        }
    }

    pub fn as_strs(&self) -> [Option<&str>; BRANCHES] {
        std::array::from_fn(|i| self.texts[i].as_deref())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Mean word embedding per branch.
    AvgEmbeddings,
    /// Bi-LSTM encoding per branch from a trained network.
    LstmEmbeddings,
    /// LSTM encodings plus the network's hidden-layer activations.
    LstmPlusHidden,
}

impl FeatureMode {
    pub fn needs_network(self) -> bool {
        self != FeatureMode::AvgEmbeddings
    }
}

/// Evidence embedding blocks kept per engine, or averaged over the engines
/// that returned something.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    #[default]
    PerEngine,
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub len: usize,
}

/// Names and widths of consecutive feature segments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub mode: FeatureMode,
    pub pooling: Pooling,
    pub segments: Vec<Segment>,
}

impl FeatureLayout {
    /// `embedding_width` is d for averaged embeddings and 2H for LSTM modes.
    pub fn new(mode: FeatureMode, pooling: Pooling, branch_names: &[String; BRANCHES], embedding_width: usize) -> Self {
        let mut segments = vec![Segment {
            name: "similarities".into(),
            len: SIMILARITY_SLOTS,
        }];
        let names: Vec<String> = match pooling {
            Pooling::PerEngine => branch_names.to_vec(),
            Pooling::Pooled => vec![branch_names[0].clone(), "pooled.snippet".into(), "pooled.triplet".into()],
        };
        segments.extend(names.into_iter().map(|name| Segment {
            name: format!("emb.{name}"),
            len: embedding_width,
        }));
        if mode == FeatureMode::LstmPlusHidden {
            segments.push(Segment {
                name: "hidden".into(),
                len: HIDDEN_UNITS,
            });
        }
        FeatureLayout { mode, pooling, segments }
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Offset of the named segment.
    pub fn offset(&self, name: &str) -> Option<usize> {
        let mut at = 0;
        for s in &self.segments {
            if s.name == name {
                return Some(at);
            }
            at += s.len;
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub id: String,
    pub label: Option<Label>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    /// `id<TAB>label<TAB>v1,v2,…`; an unknown label is written as `?`.
    pub fn to_line(&self) -> String {
        let values: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        let label = self.label.map_or("?", |l| l.name());
        format!("{}\t{label}\t{}", self.id, values.join(","))
    }

    pub fn parse_line(line: &str, source_name: &str, line_no: usize) -> Result<Self> {
        let err = |msg: String| Error::format(source_name, line_no, msg);
        let mut fields = line.split('\t');
        let (Some(id), Some(label), Some(values), None) = (fields.next(), fields.next(), fields.next(), fields.next()) else {
            return Err(err("expected three tab-separated fields".into()));
        };
        let label = match label {
            "?" => None,
            l => Some(l.parse().map_err(|e: Error| err(e.to_string()))?),
        };
        let values = if values.is_empty() {
            Vec::new()
        } else {
            values
                .split(',')
                .map(|v| v.parse::<f64>().map_err(|e| err(format!("bad value `{v}`: {e}"))))
                .collect::<Result<_>>()?
        };
        Ok(FeatureVector {
            id: id.to_string(),
            label,
            values,
        })
    }
}

/// Inputs for one example's feature vector.
pub struct FeatureInputs<'a> {
    pub id: &'a str,
    pub label: Option<Label>,
    pub block: &'a SimilarityBlock,
    pub branches: &'a BranchTexts,
}

/// Shared settings for [`assemble_features`].
pub struct FeatureAssembler<'a> {
    pub mode: FeatureMode,
    pub pooling: Pooling,
    pub table: &'a EmbeddingTable,
    pub network: Option<&'a NnModel>,
    pub caps: SequenceCaps,
}

impl<'a> FeatureAssembler<'a> {
    pub fn new(mode: FeatureMode, table: &'a EmbeddingTable) -> Self {
        FeatureAssembler {
            mode,
            pooling: Pooling::PerEngine,
            table,
            network: None,
            caps: SequenceCaps::default(),
        }
    }

    pub fn with_network(mut self, network: &'a NnModel) -> Self {
        self.caps = network.caps;
        self.network = Some(network);
        self
    }

    pub fn layout(&self, branch_names: &[String; BRANCHES]) -> Result<FeatureLayout> {
        let width = match (self.mode, self.network) {
            (FeatureMode::AvgEmbeddings, _) => self.table.dim(),
            (_, Some(nn)) => 2 * nn.hidden_size(),
            (mode, None) => return Err(Error::invalid(format!("feature mode {mode:?} needs a trained network"))),
        };
        Ok(FeatureLayout::new(self.mode, self.pooling, branch_names, width))
    }

    pub fn assemble(&self, inputs: &FeatureInputs<'_>) -> Result<FeatureVector> {
        assemble_features(inputs, self)
    }
}

fn pool(blocks: &[(Array1<f64>, bool)]) -> Array1<f64> {
    let present: Vec<&Array1<f64>> = blocks.iter().filter(|(_, p)| *p).map(|(v, _)| v).collect();
    let width = blocks[0].0.len();
    if present.is_empty() {
        return Array1::zeros(width);
    }
    let mut sum = Array1::zeros(width);
    for v in &present {
        sum += *v;
    }
    sum / present.len() as f64
}

/// Layout: similarities (24), one embedding block per branch (d or 2H wide),
/// then the 60 hidden activations in `LstmPlusHidden` mode. Missing branch
/// texts give zero blocks.
pub fn assemble_features(inputs: &FeatureInputs<'_>, cfg: &FeatureAssembler<'_>) -> Result<FeatureVector> {
    if inputs.block.values.len() != SIMILARITY_SLOTS {
        return Err(Error::invalid(format!(
            "similarity block has {} values, expected {SIMILARITY_SLOTS}",
            inputs.block.values.len()
        )));
    }
    let layout = cfg.layout(&inputs.branches.names)?;
    let mut values = Vec::with_capacity(layout.len());
    values.extend_from_slice(&inputs.block.values);

    let texts = inputs.branches.as_strs();
    let mut hidden = None;
    let blocks: Vec<(Array1<f64>, bool)> = match (cfg.mode, cfg.network) {
        (FeatureMode::AvgEmbeddings, _) => texts
            .iter()
            .map(|t| match t {
                Some(t) => (avg_embedding(&tokenize(t), cfg.table).vector, true),
                None => (Array1::zeros(cfg.table.dim()), false),
            })
            .collect(),
        (_, Some(nn)) => {
            let encoded = encode_example(&texts, &inputs.block.values, inputs.label, cfg.table, &cfg.caps);
            let forward = nn.infer(&encoded)?;
            hidden = Some(forward.hidden.clone());
            forward
                .branch_states
                .into_iter()
                .zip(texts.iter())
                .map(|(v, t)| (v, t.is_some()))
                .collect()
        }
        (_, None) => unreachable!("layout() rejects network modes without a network"),
    };
    match cfg.pooling {
        Pooling::PerEngine => blocks.iter().for_each(|(v, _)| values.extend(v.iter())),
        Pooling::Pooled => {
            values.extend(blocks[0].0.iter());
            values.extend(pool(&[blocks[1].clone(), blocks[3].clone()]).iter());
            values.extend(pool(&[blocks[2].clone(), blocks[4].clone()]).iter());
        }
    }
    if cfg.mode == FeatureMode::LstmPlusHidden {
        values.extend(hidden.expect("network mode").iter());
    }
    debug_assert_eq!(values.len(), layout.len());
    Ok(FeatureVector {
        id: inputs.id.to_string(),
        label: inputs.label,
        values,
    })
}

/// Writes `path` as one [`FeatureVector::to_line`] per example and the layout
/// to `<path>.layout.json`. Returns the layout path.
pub fn write_feature_file(path: &Path, vectors: &[FeatureVector], layout: &FeatureLayout) -> Result<PathBuf> {
    let mut out = String::new();
    for v in vectors {
        if v.values.len() != layout.len() {
            return Err(Error::invalid(format!("{} has {} features, layout has {}", v.id, v.values.len(), layout.len())));
        }
        out.push_str(&v.to_line());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))?;
    let mut layout_path = path.as_os_str().to_owned();
    layout_path.push(".layout.json");
    let layout_path = PathBuf::from(layout_path);
    let mut f = std::fs::File::create(&layout_path).map_err(|e| Error::io(&layout_path, e))?;
    serde_json::to_writer_pretty(&mut f, layout)?;
    writeln!(f).map_err(|e| Error::io(&layout_path, e))?;
    Ok(layout_path)
}

pub fn read_feature_file(reader: impl BufRead, source_name: &str) -> Result<Vec<FeatureVector>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source_name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(FeatureVector::parse_line(&line, source_name, i + 1)?);
    }
    Ok(out)
}
