use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Example, Split};
use super::metrics::{compute_metrics, constant_predictions, MetricsReport, MetricsTable};
use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::features::{
    analyze_evidence, write_feature_file, BestMatch, BranchTexts, EvidenceAnalysis, FeatureAssembler, FeatureInputs,
    FeatureLayout, FeatureMode, FeatureVector, Pooling,
};
use crate::label::Label;
use crate::neural::{encode_example, nn_train, EncodedExample, NnModel, SequenceCaps, TrainConfig, TrainHistory};
use crate::querygen::{generate_query, IdfTable, Query};
use crate::retrieve::{
    DomainPolicy, Engine, EngineSelection, EvidenceBundle, EvidenceGatherer, FixtureFetcher, FixtureProvider, SearchProvider,
    SourceSelection,
};
use crate::svm::{grid_search_cv, svm_train_smo, GridSearchResult, SvmConfig, SvmGrid, SvmModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Rumor,
    Cqa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "nn")]
    Nn,
    #[serde(rename = "svm")]
    Svm,
    #[serde(rename = "svm+nn")]
    SvmNn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Nn, ModelKind::Svm, ModelKind::SvmNn];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Nn => "nn",
            ModelKind::Svm => "svm",
            ModelKind::SvmNn => "svm+nn",
        }
    }

    pub fn uses_network(self) -> bool {
        self != ModelKind::Svm
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown model `{s}` (nn, svm, svm+nn)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyChoice {
    Blacklist,
    Whitelist,
    None,
}

impl PolicyChoice {
    pub fn policy(self) -> DomainPolicy {
        match self {
            PolicyChoice::Blacklist => DomainPolicy::bundled_blacklist().clone(),
            PolicyChoice::Whitelist => DomainPolicy::bundled_cqa_whitelist().clone(),
            PolicyChoice::None => DomainPolicy::allow_all(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: Task,
    pub engines: EngineSelection,
    pub sources: SourceSelection,
    pub model: ModelKind,
    pub seed: u64,
    pub policy: PolicyChoice,
    pub pooling: Pooling,
    /// Network training settings; seed and branch names are overwritten.
    pub nn: TrainConfig,
    pub svm_grid: SvmGrid,
    pub cv_folds: usize,
}

impl ExperimentConfig {
    pub fn new(task: Task, model: ModelKind) -> Self {
        ExperimentConfig {
            task,
            engines: EngineSelection::Both,
            sources: SourceSelection::Both,
            model,
            seed: 42,
            policy: PolicyChoice::Blacklist,
            pooling: Pooling::PerEngine,
            nn: TrainConfig::default(),
            svm_grid: SvmGrid::default(),
            cv_folds: 5,
        }
        .effective()
    }

    /// cQA always runs on snippets of whitelisted sites.
    pub fn effective(&self) -> Self {
        let mut c = self.clone();
        if c.task == Task::Cqa {
            if c.sources != SourceSelection::Snippets || c.policy != PolicyChoice::Whitelist {
                log::info!("cqa task: using snippets and the whitelist");
            }
            c.sources = SourceSelection::Snippets;
            c.policy = PolicyChoice::Whitelist;
        }
        c.nn.seed = c.seed;
        c.nn.branch_names = branch_names(c.task).to_vec();
        c
    }

    /// e.g. `svm+nn google/snippets`.
    pub fn name(&self) -> String {
        format!("{} {}/{}", self.model.name(), engines_name(self.engines), sources_name(self.sources))
    }

    pub fn with_model(&self, model: ModelKind) -> Self {
        ExperimentConfig { model, ..self.clone() }
    }

    fn network_key(&self) -> String {
        let c = self.effective();
        format!("{:?}", (c.task, c.engines, c.sources, c.policy, serde_json::to_string(&c.nn).unwrap_or_default()))
    }
}

pub fn engines_name(e: EngineSelection) -> &'static str {
    match e {
        EngineSelection::Google => "google",
        EngineSelection::Bing => "bing",
        EngineSelection::Both => "both",
    }
}

pub fn sources_name(s: SourceSelection) -> &'static str {
    match s {
        SourceSelection::Snippets => "snippets",
        SourceSelection::Pages => "pages",
        SourceSelection::Both => "both",
    }
}

fn branch_names(task: Task) -> [String; 5] {
    match task {
        Task::Rumor => BranchTexts::RUMOR_NAMES.map(String::from),
        Task::Cqa => BranchTexts::CQA_NAMES.map(String::from),
    }
}

/// Word statistics shared by every stage.
#[derive(Debug, Clone, Copy)]
pub struct Resources<'a> {
    pub idf: &'a IdfTable,
    pub table: &'a EmbeddingTable,
}

impl Resources<'static> {
    pub fn bundled() -> Self {
        Resources {
            idf: IdfTable::bundled(),
            table: EmbeddingTable::bundled(),
        }
    }
}

/// Retrieved evidence per example id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvidenceStore {
    pub bundles: BTreeMap<String, EvidenceBundle>,
    pub queries: BTreeMap<String, Query>,
    /// Examples left without any admissible hit.
    pub missing: Vec<String>,
}

impl EvidenceStore {
    /// Queries every example; failures and empty results are recorded in
    /// `missing` rather than aborting.
    pub fn gather(examples: &[Example], gatherer: &EvidenceGatherer<'_>, idf: &IdfTable) -> Self {
        let mut store = EvidenceStore::default();
        for ex in examples {
            let bundle = match generate_query(&ex.claim, idf) {
                Ok(q) => {
                    let q = q.with_origin(&ex.id);
                    let b = gatherer.gather(&ex.id, &q);
                    store.queries.insert(ex.id.clone(), q);
                    b
                }
                Err(e) => Err(e),
            };
            let bundle = bundle.unwrap_or_else(|e| {
                log::warn!("{}: no evidence: {e}", ex.id);
                EvidenceBundle::empty(&ex.id)
            });
            if !bundle.has_results() {
                store.missing.push(ex.id.clone());
            }
            store.bundles.insert(ex.id.clone(), bundle);
        }
        if !store.missing.is_empty() {
            log::warn!("{} examples without evidence: {}", store.missing.len(), store.missing.join(", "));
        }
        store
    }

    pub fn bundle(&self, id: &str) -> EvidenceBundle {
        self.bundles.get(id).cloned().unwrap_or_else(|| EvidenceBundle::empty(id))
    }

    /// One bundle per line, then nothing else; queries travel inside the
    /// bundles.
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for b in self.bundles.values() {
            serde_json::to_writer(&mut out, b)?;
            writeln!(out).map_err(|e| Error::io("evidence", e))?;
        }
        Ok(())
    }

    pub fn read_jsonl(reader: impl BufRead, source_name: &str) -> Result<Self> {
        let mut store = EvidenceStore::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::format(source_name, i + 1, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let b: EvidenceBundle =
                serde_json::from_str(&line).map_err(|e| Error::format(source_name, i + 1, e.to_string()))?;
            if let Some(e) = b.engines.first() {
                store.queries.insert(b.claim_id.clone(), e.query_used.clone());
            }
            if !b.has_results() {
                store.missing.push(b.claim_id.clone());
            }
            store.bundles.insert(b.claim_id.clone(), b);
        }
        Ok(store)
    }
}

/// File-backed engines and pages under one fixture root.
#[derive(Debug)]
pub struct FixtureSources {
    pub google: FixtureProvider,
    pub bing: FixtureProvider,
    pub fetcher: FixtureFetcher,
}

impl FixtureSources {
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref();
        if !root.is_dir() {
            return Err(Error::invalid(format!("fixture directory {} does not exist", root.display())));
        }
        Ok(FixtureSources {
            google: FixtureProvider::new(root, Engine::Google),
            bing: FixtureProvider::new(root, Engine::Bing),
            fetcher: FixtureFetcher::open(root)?,
        })
    }

    pub fn providers(&self, engines: EngineSelection) -> Vec<&dyn SearchProvider> {
        let mut out: Vec<&dyn SearchProvider> = Vec::new();
        if engines.includes(Engine::Google) {
            out.push(&self.google);
        }
        if engines.includes(Engine::Bing) {
            out.push(&self.bing);
        }
        out
    }

    /// Pages are fetched only when the config reads them.
    pub fn gatherer(&self, config: &ExperimentConfig) -> EvidenceGatherer<'_> {
        let config = config.effective();
        let g = EvidenceGatherer::new(self.providers(config.engines), config.policy.policy());
        if config.sources.pages() {
            g.with_fetcher(&self.fetcher)
        } else {
            g
        }
    }
}

/// What a single example contributes once its evidence is analyzed.
#[derive(Debug, Clone)]
pub struct PreparedExample {
    pub id: String,
    pub label: Label,
    pub split: Split,
    pub analysis: EvidenceAnalysis,
    pub branches: BranchTexts,
}

impl PreparedExample {
    fn encode(&self, res: &Resources<'_>, caps: &SequenceCaps) -> EncodedExample {
        encode_example(&self.branches.as_strs(), &self.analysis.block.values, Some(self.label), res.table, caps)
    }
}

fn branch_texts(task: Task, claim: &str, question: Option<&str>, answer: Option<&str>, analysis: &EvidenceAnalysis) -> Result<BranchTexts> {
    Ok(match task {
        Task::Rumor => BranchTexts::rumor(claim, analysis),
        Task::Cqa => match (question, answer) {
            (Some(q), Some(a)) => BranchTexts::cqa(q, a, analysis),
            _ => return Err(Error::invalid("cqa examples need a question and an answer")),
        },
    })
}

/// Restricts each bundle to the configured engines and sources and computes
/// similarities and branch texts.
pub fn prepare(dataset: &Dataset, store: &EvidenceStore, config: &ExperimentConfig, res: &Resources<'_>) -> Result<Vec<PreparedExample>> {
    let config = config.effective();
    dataset
        .examples
        .iter()
        .map(|ex| {
            let bundle = store.bundle(&ex.id).restricted(config.engines, config.sources);
            let analysis = analyze_evidence(&ex.claim, &bundle, res.idf, res.table);
            let branches = branch_texts(config.task, &ex.claim, ex.question.as_deref(), ex.answer.as_deref(), &analysis)
                .map_err(|e| Error::invalid(format!("{}: {e}", ex.id)))?;
            Ok(PreparedExample {
                id: ex.id.clone(),
                label: ex.label,
                split: ex.split,
                analysis,
                branches,
            })
        })
        .collect()
}

/// Feature vectors for the SVM of `model`: averaged embeddings for `svm`,
/// LSTM encodings plus hidden activations for `svm+nn`.
pub fn featurize(
    prepared: &[PreparedExample],
    model: ModelKind,
    pooling: Pooling,
    network: Option<&NnModel>,
    res: &Resources<'_>,
) -> Result<(FeatureLayout, Vec<FeatureVector>)> {
    let assembler = feature_assembler(model, pooling, network, res)?;
    let names = prepared
        .first()
        .map_or_else(|| BranchTexts::RUMOR_NAMES.map(String::from), |p| p.branches.names.clone());
    let layout = assembler.layout(&names)?;
    let vectors = prepared
        .iter()
        .map(|p| {
            assembler.assemble(&FeatureInputs {
                id: &p.id,
                label: Some(p.label),
                block: &p.analysis.block,
                branches: &p.branches,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((layout, vectors))
}

fn feature_assembler<'a>(model: ModelKind, pooling: Pooling, network: Option<&'a NnModel>, res: &Resources<'a>) -> Result<FeatureAssembler<'a>> {
    let mut a = match (model, network) {
        (ModelKind::Svm, _) => FeatureAssembler::new(FeatureMode::AvgEmbeddings, res.table),
        (ModelKind::SvmNn, Some(nn)) => FeatureAssembler::new(FeatureMode::LstmPlusHidden, res.table).with_network(nn),
        (ModelKind::SvmNn, None) => return Err(Error::invalid("svm+nn features need a trained network")),
        (ModelKind::Nn, _) => return Err(Error::invalid("the nn model has no feature file")),
    };
    a.pooling = pooling;
    Ok(a)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Everything needed to classify a new claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedArtifacts {
    pub config: ExperimentConfig,
    pub nn: Option<NnModel>,
    pub svm: Option<SvmModel>,
    pub layout: Option<FeatureLayout>,
}

const CONFIG_FILE: &str = "config.json";
const NN_FILE: &str = "nn.json";
const SVM_FILE: &str = "svm.json";
const LAYOUT_FILE: &str = "layout.json";

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path.display().to_string(), e.line(), e.to_string()))
}

impl TrainedArtifacts {
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_json(&dir.join(CONFIG_FILE), &self.config)?;
        if let Some(nn) = &self.nn {
            nn.save(dir.join(NN_FILE))?;
        }
        if let Some(svm) = &self.svm {
            svm.save(dir.join(SVM_FILE))?;
        }
        if let Some(layout) = &self.layout {
            write_json(&dir.join(LAYOUT_FILE), layout)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let config: ExperimentConfig = read_json(&dir.join(CONFIG_FILE))?;
        let nn = config.model.uses_network().then(|| NnModel::load(dir.join(NN_FILE))).transpose()?;
        let svm = (config.model != ModelKind::Nn).then(|| SvmModel::load(dir.join(SVM_FILE))).transpose()?;
        let layout_path = dir.join(LAYOUT_FILE);
        let layout = layout_path.exists().then(|| read_json(&layout_path)).transpose()?;
        Ok(TrainedArtifacts { config, nn, svm, layout })
    }

    /// `(label, P(true))` for a prepared example. SVM scores are the
    /// logistic of the decision value and are not calibrated.
    pub fn score(&self, p: &PreparedExample, res: &Resources<'_>) -> Result<(Label, f64)> {
        match self.config.model {
            ModelKind::Nn => {
                let nn = self.nn.as_ref().ok_or_else(|| Error::invalid("artifacts lack the network"))?;
                let f = nn.infer(&p.encode(res, &nn.caps))?;
                Ok((f.label(), f.prob_true))
            }
            model => {
                let svm = self.svm.as_ref().ok_or_else(|| Error::invalid("artifacts lack the svm"))?;
                let (_, v) = featurize(std::slice::from_ref(p), model, self.config.pooling, self.nn.as_ref(), res)?;
                let f = svm.decision(ndarray::ArrayView1::from(&v[0].values))?;
                Ok((Label::from_decision(f), sigmoid(f)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub gold: Label,
    pub predicted: Label,
    /// P(true) for the network, logistic of the margin for SVMs.
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub metrics: MetricsReport,
    pub predictions: Vec<PredictionRecord>,
    pub missing_evidence: Vec<String>,
    pub artifacts: TrainedArtifacts,
    pub history: Option<TrainHistory>,
    pub grid: Option<GridSearchResult>,
    pub features: Option<(FeatureLayout, Vec<FeatureVector>)>,
}

impl ExperimentOutcome {
    /// Writes the checkpoint, report, predictions and (for SVM models) the
    /// feature file under `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        self.artifacts.save(&dir.join("checkpoint"))?;
        write_json(&dir.join("metrics.json"), &self.metrics)?;
        let mut table = MetricsTable::default();
        table.push(self.config.name(), self.metrics);
        write_text(&dir.join("report.csv"), &table.to_csv())?;
        let mut preds = String::from("id\tgold\tpredicted\tscore\n");
        for p in &self.predictions {
            preds.push_str(&format!("{}\t{}\t{}\t{:.6}\n", p.id, p.gold, p.predicted, p.score));
        }
        write_text(&dir.join("predictions.tsv"), &preds)?;
        if let Some(grid) = &self.grid {
            write_text(&dir.join("grid.csv"), &grid.to_csv())?;
        }
        if let Some((layout, vectors)) = &self.features {
            write_feature_file(&dir.join("features.tsv"), vectors, layout)?;
        }
        if !self.missing_evidence.is_empty() {
            write_text(&dir.join("missing_evidence.txt"), &(self.missing_evidence.join("\n") + "\n"))?;
        }
        Ok(())
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs configurations over one dataset, training each distinct network
/// once and reusing it across models.
pub struct ExperimentRunner<'a> {
    pub dataset: &'a Dataset,
    pub store: &'a EvidenceStore,
    pub resources: Resources<'a>,
    networks: BTreeMap<String, (NnModel, TrainHistory)>,
}

impl<'a> ExperimentRunner<'a> {
    pub fn new(dataset: &'a Dataset, store: &'a EvidenceStore, resources: Resources<'a>) -> Self {
        ExperimentRunner {
            dataset,
            store,
            resources,
            networks: BTreeMap::new(),
        }
    }

    fn network(&mut self, config: &ExperimentConfig, prepared: &[PreparedExample]) -> Result<(NnModel, TrainHistory)> {
        let key = config.network_key();
        if let Some(n) = self.networks.get(&key) {
            return Ok(n.clone());
        }
        let encode = |split: Split| -> Vec<EncodedExample> {
            prepared
                .iter()
                .filter(|p| p.split == split)
                .map(|p| p.encode(&self.resources, &config.nn.caps))
                .collect()
        };
        let (train, dev) = (encode(Split::Train), encode(Split::Dev));
        log::info!("training network on {} examples ({} dev)", train.len(), dev.len());
        let trained = nn_train(&train, &dev, &config.nn)?;
        log::info!("best dev epoch {}", trained.1.best_epoch);
        self.networks.insert(key, trained.clone());
        Ok(trained)
    }

    pub fn run(&mut self, config: &ExperimentConfig) -> Result<ExperimentOutcome> {
        let config = config.effective();
        let prepared = prepare(self.dataset, self.store, &config, &self.resources)?;
        if !prepared.iter().any(|p| p.split == Split::Test) {
            return Err(Error::invalid("dataset has no test examples"));
        }
        let (network, history) = if config.model.uses_network() {
            let (n, h) = self.network(&config, &prepared)?;
            (Some(n), Some(h))
        } else {
            (None, None)
        };

        let mut artifacts = TrainedArtifacts {
            config: config.clone(),
            nn: network,
            svm: None,
            layout: None,
        };
        let mut grid = None;
        let mut features = None;
        if config.model != ModelKind::Nn {
            let (layout, vectors) = featurize(&prepared, config.model, config.pooling, artifacts.nn.as_ref(), &self.resources)?;
            let fit: Vec<usize> = (0..prepared.len()).filter(|&i| prepared[i].split != Split::Test).collect();
            let x = Array2::from_shape_fn((fit.len(), layout.len()), |(r, c)| vectors[fit[r]].values[c]);
            let y: Vec<Label> = fit.iter().map(|&i| prepared[i].label).collect();
            let base = SvmConfig {
                seed: config.seed,
                ..SvmConfig::default()
            };
            let search = grid_search_cv(&x, &y, &config.svm_grid, config.cv_folds, &base)?;
            log::info!(
                "grid search: C={} gamma={} cv accuracy {:.3}",
                search.best.c,
                search.best.gamma,
                search.best_accuracy
            );
            artifacts.svm = Some(svm_train_smo(&x, &y, &search.best)?);
            artifacts.layout = Some(layout.clone());
            grid = Some(search);
            features = Some((layout, vectors));
        }

        let mut predictions = Vec::new();
        for (i, p) in prepared.iter().enumerate().filter(|(_, p)| p.split == Split::Test) {
            let (predicted, score) = match (&artifacts.svm, &features) {
                (Some(svm), Some((_, vectors))) => {
                    let f = svm.decision(ndarray::ArrayView1::from(&vectors[i].values))?;
                    (Label::from_decision(f), sigmoid(f))
                }
                _ => artifacts.score(p, &self.resources)?,
            };
            predictions.push(PredictionRecord {
                id: p.id.clone(),
                gold: p.label,
                predicted,
                score,
            });
        }
        let gold: Vec<Label> = predictions.iter().map(|p| p.gold).collect();
        let pred: Vec<Label> = predictions.iter().map(|p| p.predicted).collect();
        let metrics = compute_metrics(&gold, &pred)?;
        let test_ids: Vec<&str> = predictions.iter().map(|p| p.id.as_str()).collect();
        let missing_evidence = self
            .store
            .missing
            .iter()
            .filter(|id| self.dataset.get(id).is_some())
            .cloned()
            .collect();
        log::info!("{}: accuracy {:.3} on {} test examples", config.name(), metrics.accuracy, test_ids.len());
        Ok(ExperimentOutcome {
            config,
            metrics,
            predictions,
            missing_evidence,
            artifacts,
            history,
            grid,
            features,
        })
    }

    /// The all-false and all-true baselines followed by one row per model.
    pub fn compare(&mut self, base: &ExperimentConfig, models: &[ModelKind]) -> Result<(MetricsTable, Vec<ExperimentOutcome>)> {
        let gold: Vec<Label> = self.dataset.split(Split::Test).map(|e| e.label).collect();
        let mut table = MetricsTable::default();
        for label in [Label::False, Label::True] {
            table.push(format!("all {label}"), compute_metrics(&gold, &constant_predictions(gold.len(), label))?);
        }
        let mut outcomes = Vec::new();
        for &m in models {
            let o = self.run(&base.with_model(m))?;
            table.push(o.config.name(), o.metrics);
            outcomes.push(o);
        }
        Ok((table, outcomes))
    }
}

/// Trains and evaluates one configuration.
pub fn run_experiment(config: &ExperimentConfig, dataset: &Dataset, store: &EvidenceStore, res: Resources<'_>) -> Result<ExperimentOutcome> {
    ExperimentRunner::new(dataset, store, res).run(config)
}

/// Text to classify: a claim, or a cQA question with its answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClaimInput {
    pub claim: String,
    pub question: Option<String>,
    pub answer: Option<String>,
}

impl ClaimInput {
    pub fn rumor(claim: impl Into<String>) -> Self {
        ClaimInput {
            claim: claim.into(),
            question: None,
            answer: None,
        }
    }

    pub fn cqa(question: &str, answer: &str) -> Result<Self> {
        Ok(ClaimInput {
            claim: super::dataset::cqa_build_claim(question, answer)?,
            question: Some(question.to_string()),
            answer: Some(answer.to_string()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    /// Probability of `label` (uncalibrated for SVMs).
    pub confidence: f64,
    pub score_true: f64,
    pub query: Option<Query>,
    /// No admissible evidence; the features describe an empty search.
    pub low_evidence: bool,
    /// Best snippet and best page triplet per engine.
    pub evidence: Vec<BestMatch>,
}

/// Retrieves evidence for one claim and classifies it with trained
/// artifacts.
pub fn predict(input: &ClaimInput, artifacts: &TrainedArtifacts, gatherer: &EvidenceGatherer<'_>, res: &Resources<'_>) -> Result<Prediction> {
    if input.claim.trim().is_empty() {
        return Err(Error::invalid("empty claim"));
    }
    let config = artifacts.config.effective();
    let (query, bundle) = match generate_query(&input.claim, res.idf) {
        Ok(q) => {
            let bundle = gatherer.gather("input", &q).unwrap_or_else(|e| {
                log::warn!("retrieval failed: {e}");
                EvidenceBundle::empty("input")
            });
            (Some(q), bundle)
        }
        Err(e) => {
            log::warn!("no query for claim: {e}");
            (None, EvidenceBundle::empty("input"))
        }
    };
    let bundle = bundle.restricted(config.engines, config.sources);
    let analysis = analyze_evidence(&input.claim, &bundle, res.idf, res.table);
    let branches = branch_texts(config.task, &input.claim, input.question.as_deref(), input.answer.as_deref(), &analysis)?;
    let mut evidence: Vec<BestMatch> = Vec::new();
    for e in Engine::ALL {
        evidence.extend(analysis.best_snippet.get(&e).cloned());
        evidence.extend(analysis.best_triplet.get(&e).cloned());
    }
    let prepared = PreparedExample {
        id: "input".into(),
        label: Label::False,
        split: Split::Test,
        analysis,
        branches,
    };
    let (label, score_true) = artifacts.score(&prepared, res)?;
    Ok(Prediction {
        label,
        confidence: if label == Label::True { score_true } else { 1.0 - score_true },
        score_true,
        query,
        low_evidence: !bundle.has_results(),
        evidence,
    })
}

/// Output directory layout used by the command-line tool.
pub fn checkpoint_dir(out: &Path) -> PathBuf {
    out.join("checkpoint")
}
