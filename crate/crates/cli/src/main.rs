use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use veriscope::features::Source;
use veriscope::pipeline::{
    engines_name, featurize, load_dataset, predict, prepare, sources_name, ClaimInput, Dataset, EvidenceStore, ExperimentConfig,
    ExperimentRunner, FixtureSources, ModelKind, Resources, Task, TrainedArtifacts,
};
use veriscope::querygen::{generate_query, rank_terms};
#[cfg(feature = "live")]
use veriscope::retrieve::SearchProvider;
use veriscope::retrieve::{EngineSelection, EvidenceGatherer, SourceSelection};
use veriscope::synth::{bundled_data_dir, CQA_FILE, CQA_FIXTURES, RUMOR_FILE, RUMOR_FIXTURES};
use veriscope::{Error, Result};

#[derive(Parser)]
#[command(name = "veriscope", version, about = "Check claims against web search evidence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the search query generated for a claim.
    GenQuery {
        #[arg(long)]
        claim: Option<String>,
        #[arg(long)]
        question: Option<String>,
        #[arg(long)]
        answer: Option<String>,
    },
    /// Retrieve evidence for every example and write it as JSON lines.
    FetchEvidence {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write SVM feature vectors for every example.
    Featurize {
        #[command(flatten)]
        run: RunArgs,
        /// Checkpoint with a trained network, needed for `--model svm+nn`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train one model and save its checkpoint and test report.
    Train {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compare the baselines and models on the test split.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Classify one claim with a saved checkpoint.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        claim: Option<String>,
        #[arg(long)]
        question: Option<String>,
        #[arg(long)]
        answer: Option<String>,
        /// Fixture root; defaults to the bundled fixtures of the task.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Query the real search APIs (keys from the environment).
        #[arg(long)]
        live: bool,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Google,
    Bing,
    Both,
    /// Both engines, answered from fixtures.
    Fixture,
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    Snippets,
    Pages,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Rumor,
    Cqa,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "rumor")]
    task: TaskArg,
    /// Dataset in JSON lines; defaults to the bundled one for the task.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    engine: EngineArg,
    #[arg(long, value_enum, default_value = "both")]
    source: SourceArg,
    /// nn, svm or svm+nn; `evaluate` runs all three when omitted.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Fixture root; defaults to the bundled fixtures of the task.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Query the real search APIs (keys from the environment).
    #[arg(long, conflicts_with = "fixtures")]
    live: bool,
    /// Previously fetched evidence to use instead of searching.
    #[arg(long)]
    evidence: Option<PathBuf>,
    /// Network training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl RunArgs {
    fn task(&self) -> Task {
        match self.task {
            TaskArg::Rumor => Task::Rumor,
            TaskArg::Cqa => Task::Cqa,
        }
    }

    fn model(&self, default: ModelKind) -> Result<ModelKind> {
        self.model.as_deref().map_or(Ok(default), str::parse)
    }

    fn config(&self, model: ModelKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(self.task(), model);
        c.engines = match self.engine {
            EngineArg::Google => EngineSelection::Google,
            EngineArg::Bing => EngineSelection::Bing,
            EngineArg::Both | EngineArg::Fixture => EngineSelection::Both,
        };
        c.sources = match self.source {
            SourceArg::Snippets => SourceSelection::Snippets,
            SourceArg::Pages => SourceSelection::Pages,
            SourceArg::Both => SourceSelection::Both,
        };
        c.seed = self.seed;
        if let Some(e) = self.epochs {
            c.nn.epochs = e;
        }
        c.effective()
    }

    fn dataset(&self) -> Result<Dataset> {
        let path = self.data.clone().unwrap_or_else(|| {
            bundled_data_dir().join(match self.task() {
                Task::Rumor => RUMOR_FILE,
                Task::Cqa => CQA_FILE,
            })
        });
        load_dataset(path)
    }

    fn backend(&self) -> Result<Backend> {
        Backend::open(self.live, self.fixtures.as_deref(), self.task())
    }

    fn evidence(&self, dataset: &Dataset, config: &ExperimentConfig, res: &Resources<'_>) -> Result<EvidenceStore> {
        if let Some(path) = &self.evidence {
            let file = fs::File::open(path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            return EvidenceStore::read_jsonl(std::io::BufReader::new(file), &path.display().to_string());
        }
        let backend = self.backend()?;
        let store = EvidenceStore::gather(&dataset.examples, &backend.gatherer(config)?, res.idf);
        Ok(store)
    }
}

enum Backend {
    Fixtures(FixtureSources),
    #[cfg(feature = "live")]
    Live(Vec<Box<dyn SearchProvider>>, veriscope::retrieve::HttpFetcher),
}

impl Backend {
    fn open(live: bool, fixtures: Option<&Path>, task: Task) -> Result<Self> {
        if live {
            #[cfg(feature = "live")]
            {
                use veriscope::retrieve::{BingProvider, DiskCache, GoogleProvider, HttpFetcher};
                let mut providers: Vec<Box<dyn SearchProvider>> = Vec::new();
                match GoogleProvider::from_env() {
                    Ok(p) => providers.push(Box::new(p)),
                    Err(e) => log::warn!("google disabled: {e}"),
                }
                match BingProvider::from_env() {
                    Ok(p) => providers.push(Box::new(p)),
                    Err(e) => log::warn!("bing disabled: {e}"),
                }
                if providers.is_empty() {
                    return Err(Error::InvalidArgument("no search API keys configured".into()));
                }
                return Ok(Backend::Live(providers, HttpFetcher::new(DiskCache::from_env()?)));
            }
            #[cfg(not(feature = "live"))]
            return Err(Error::InvalidArgument("built without the `live` feature".into()));
        }
        let root = fixtures.map_or_else(
            || {
                bundled_data_dir().join(match task {
                    Task::Rumor => RUMOR_FIXTURES,
                    Task::Cqa => CQA_FIXTURES,
                })
            },
            Path::to_path_buf,
        );
        Ok(Backend::Fixtures(FixtureSources::open(root)?))
    }

    fn gatherer(&self, config: &ExperimentConfig) -> Result<EvidenceGatherer<'_>> {
        match self {
            Backend::Fixtures(f) => Ok(f.gatherer(config)),
            #[cfg(feature = "live")]
            Backend::Live(providers, fetcher) => {
                let config = config.effective();
                let chosen: Vec<&dyn SearchProvider> =
                    providers.iter().map(|p| p.as_ref()).filter(|p| config.engines.includes(p.engine())).collect();
                let g = EvidenceGatherer::new(chosen, config.policy.policy());
                Ok(if config.sources.pages() { g.with_fetcher(fetcher) } else { g })
            }
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::Io { path: parent.to_path_buf(), source: e })?;
    }
    fs::write(path, text).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn claim_input(claim: Option<String>, question: Option<String>, answer: Option<String>) -> Result<ClaimInput> {
    match (claim, question, answer) {
        (Some(c), None, None) => Ok(ClaimInput::rumor(c)),
        (None, Some(q), Some(a)) => ClaimInput::cqa(&q, &a),
        _ => Err(Error::InvalidArgument("give either --claim or both --question and --answer".into())),
    }
}

fn run(cli: Cli) -> Result<()> {
    let res = Resources::bundled();
    match cli.command {
        Command::GenQuery { claim, question, answer } => {
            let input = claim_input(claim, question, answer)?;
            let query = generate_query(&input.claim, res.idf)?;
            println!("{query}");
            for (term, score) in rank_terms(&input.claim, res.idf) {
                log::info!("{term}\t{score:.4}");
            }
        }
        Command::FetchEvidence { run } => {
            let dataset = run.dataset()?;
            let config = run.config(run.model(ModelKind::SvmNn)?);
            let store = run.evidence(&dataset, &config, &res)?;
            let mut buf = Vec::new();
            store.write_jsonl(&mut buf)?;
            let path = run.out.join("evidence.jsonl");
            write(&path, &String::from_utf8_lossy(&buf))?;
            println!(
                "{} bundles, {} without evidence -> {}",
                store.bundles.len(),
                store.missing.len(),
                path.display()
            );
        }
        Command::Featurize { run, checkpoint } => {
            let model = run.model(ModelKind::Svm)?;
            let dataset = run.dataset()?;
            let config = run.config(model);
            let network = match (model, checkpoint) {
                (ModelKind::SvmNn, Some(dir)) => TrainedArtifacts::load(&dir)?.nn,
                (ModelKind::SvmNn, None) => return Err(Error::InvalidArgument("svm+nn features need --checkpoint".into())),
                _ => None,
            };
            let store = run.evidence(&dataset, &config, &res)?;
            let prepared = prepare(&dataset, &store, &config, &res)?;
            let (layout, vectors) = featurize(&prepared, model, config.pooling, network.as_ref(), &res)?;
            fs::create_dir_all(&run.out).map_err(|e| Error::Io { path: run.out.clone(), source: e })?;
            let path = run.out.join("features.tsv");
            veriscope::features::write_feature_file(&path, &vectors, &layout)?;
            println!("{} vectors of {} features -> {}", vectors.len(), layout.len(), path.display());
        }
        Command::Train { run } => {
            let dataset = run.dataset()?;
            let config = run.config(run.model(ModelKind::SvmNn)?);
            let store = run.evidence(&dataset, &config, &res)?;
            let outcome = ExperimentRunner::new(&dataset, &store, res).run(&config)?;
            outcome.save(&run.out)?;
            println!(
                "{}: test accuracy {:.1} -> {}",
                config.name(),
                100.0 * outcome.metrics.accuracy,
                run.out.join("checkpoint").display()
            );
        }
        Command::Evaluate { run } => {
            let dataset = run.dataset()?;
            let models = match &run.model {
                Some(m) => vec![m.parse()?],
                None => ModelKind::ALL.to_vec(),
            };
            let base = run.config(models[0]);
            let store = run.evidence(&dataset, &base, &res)?;
            let mut runner = ExperimentRunner::new(&dataset, &store, res);
            let (table, outcomes) = runner.compare(&base, &models)?;
            print!("{}", table.render());
            write(&run.out.join("report.csv"), &table.to_csv())?;
            for o in &outcomes {
                o.save(&run.out.join(o.config.model.name()))?;
            }
            if !store.missing.is_empty() {
                println!("no evidence for {} examples: {}", store.missing.len(), store.missing.join(", "));
            }
            println!(
                "engines {}, sources {}, report -> {}",
                engines_name(base.engines),
                sources_name(base.sources),
                run.out.join("report.csv").display()
            );
        }
        Command::Predict {
            checkpoint,
            claim,
            question,
            answer,
            fixtures,
            live,
            json,
        } => {
            let artifacts = TrainedArtifacts::load(&checkpoint)?;
            let input = claim_input(claim, question, answer)?;
            let backend = Backend::open(live, fixtures.as_deref(), artifacts.config.task)?;
            let p = predict(&input, &artifacts, &backend.gatherer(&artifacts.config)?, &res)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&p)?);
                return Ok(());
            }
            println!("label: {} (confidence {:.3})", p.label, p.confidence);
            println!("query: {}", p.query.as_ref().map_or_else(|| "-".to_string(), ToString::to_string));
            if p.low_evidence {
                println!("warning: no evidence found; prediction rests on the claim alone");
            }
            for m in &p.evidence {
                let engine = m.engine.map_or("-", |e| e.name());
                let kind = if m.source == Source::Snippet { "snippet" } else { "triplet" };
                println!("{engine} {kind} ({:.3}): {}", m.score, m.text.replace('\n', " "));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
