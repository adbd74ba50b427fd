//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use veriscope::embed::EmbeddingTable;
use veriscope::features::{containment, embedding_cosine, tfidf_cosine};
use veriscope::neural::{encode_example, grad_check, EncodedExample, GradCheckOptions, Gradients, NnModel, Sequence};
use veriscope::pipeline::{
    compute_metrics, constant_predictions, featurize, format_percent, load_dataset, prepare, Dataset, EvidenceStore,
    ExperimentConfig, ExperimentOutcome, ExperimentRunner, FixtureSources, ModelKind, Resources, Split, Task,
};
use veriscope::querygen::{generate_query, rank_terms, IdfTable};
use veriscope::retrieve::{retrieve_with_relaxation, DomainPolicy, Engine, FixtureProvider};
use veriscope::svm::{svm_train_smo_with_report, SvmConfig, SvmModel};
use veriscope::synth::{bundled_data_dir, RUMOR_FILE, RUMOR_FIXTURES};
use veriscope::text::{extract_entities, tokenize};
use veriscope::Label;

type Check = Result<String, String>;
type Criterion = (&'static str, fn(&mut Shared) -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// State shared between criteria: the end-to-end run is reused by the
/// checkpoint check.
#[derive(Default)]
struct Shared {
    run: Option<(Dataset, EvidenceStore, Vec<ExperimentOutcome>)>,
}

fn rumor_fixtures() -> FixtureSources {
    FixtureSources::open(bundled_data_dir().join(RUMOR_FIXTURES)).unwrap()
}

// ---------------------------------------------------------------- 1

fn gold_80_40() -> Vec<Label> {
    let mut g = vec![Label::False; 80];
    g.extend(vec![Label::True; 40]);
    g
}

fn metric_fidelity(_: &mut Shared) -> Check {
    let start = Instant::now();
    let gold = gold_80_40();
    let f = compute_metrics(&gold, &constant_predictions(120, Label::False)).map_err(|e| e.to_string())?;
    let t = compute_metrics(&gold, &constant_predictions(120, Label::True)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let expected = [
        ("all-false P_false", f.class(Label::False).precision, 66.7),
        ("all-false R_false", f.class(Label::False).recall, 100.0),
        ("all-false F1_false", f.class(Label::False).f1, 80.0),
        ("all-false AvgR", Some(f.avg_recall), 50.0),
        ("all-false AvgF1", Some(f.avg_f1), 40.0),
        ("all-false Acc", Some(f.accuracy), 66.7),
        ("all-true F1_true", t.class(Label::True).f1, 50.0),
        ("all-true AvgF1", Some(t.avg_f1), 25.0),
        ("all-true Acc", Some(t.accuracy), 33.3),
    ];
    for (name, got, want) in expected {
        let got = got.ok_or_else(|| format!("{name} undefined"))?;
        ensure((100.0 * got - want).abs() <= 0.05, || format!("{name}: {:.3} vs {want}", 100.0 * got))?;
        ensure(format_percent(Some(got)) == format!("{want:.1}"), || format!("{name} renders as {}", format_percent(Some(got))))?;
    }
    // precision of a never-predicted class is undefined, not zero
    ensure(f.class(Label::True).precision.is_none(), || "all-false P_true should be undefined".into())?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("{} cells match to 0.05", expected.len()))
}

// ---------------------------------------------------------------- 2

fn random_example(rng: &mut ChaCha8Rng, dim: usize, sims: usize) -> EncodedExample {
    EncodedExample {
        branches: (0..5)
            .map(|_| {
                let t = rng.random_range(0..=5);
                Sequence {
                    inputs: Array2::from_shape_fn((t, dim), |_| rng.random_range(-1.0..1.0)),
                    mask: vec![true; t],
                }
            })
            .collect(),
        similarities: Array1::from_shape_fn(sims, |_| rng.random_range(0.0..1.0)),
        label: Some(if rng.random_bool(0.5) { Label::True } else { Label::False }),
    }
}

fn gradient_check(_: &mut Shared) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let options = GradCheckOptions {
        samples_per_tensor: 40,
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    let mut coords = 0;
    let configs = 12;
    for i in 0..configs {
        let (dim, hidden, sims) = (rng.random_range(1..=6), rng.random_range(1..=4), rng.random_range(1..=6));
        let model = NnModel::random(dim, hidden, sims, 100 + i);
        let ex = random_example(&mut rng, dim, sims);
        let r = grad_check(&model, &ex, &options).map_err(|e| e.to_string())?;
        ensure(r.max_relative_error < 1e-4, || {
            format!("config {i} (E={dim}, H={hidden}, S={sims}): {:.2e} {:?}", r.max_relative_error, r.per_tensor)
        })?;
        worst = worst.max(r.max_relative_error);
        coords += r.coordinates_checked;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let model = NnModel::random(4, 3, 5, 7);
    let ex = random_example(&mut rng, 4, 5);
    let corrupted = GradCheckOptions {
        corrupt: Some(|g: &mut Gradients| g.dense_w *= 1.5),
        ..options
    };
    let bad = grad_check(&model, &ex, &corrupted).map_err(|e| e.to_string())?.max_relative_error;
    ensure(bad > 1e-2, || format!("corrupted gradient passed with {bad:.2e}"))?;
    Ok(format!("{configs} configs, {coords} coordinates, worst {worst:.1e}; corrupted control {bad:.2}"))
}

// ---------------------------------------------------------------- 3

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>()).exp()
}

fn standardize(x: &Array2<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows() as f64;
    x.columns()
        .into_iter()
        .map(|c| {
            let m = c.sum() / n;
            (m, (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt())
        })
        .unzip()
}

fn objective(a: &[f64], y: &[f64], k: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let quad: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| a[i] * a[j] * y[i] * y[j] * k[i][j]).sum();
    a.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection onto {0 ≤ α ≤ C, Σ yα = 0} by bisection on the
/// multiplier of the equality constraint.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |mu: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - mu * yi).clamp(0.0, c)).collect() };
    let balance = |a: &[f64]| a.iter().zip(y).map(|(a, y)| a * y).sum::<f64>();
    let span = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if balance(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Accelerated projected gradient on the dual.
fn oracle_dual(k: &[Vec<f64>], y: &[f64], c: f64) -> Vec<f64> {
    let n = y.len();
    let q: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| y[i] * y[j] * k[i][j]).collect()).collect();
    let lipschitz = q.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let grad = |a: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| q[i][j] * a[j]).sum::<f64>() - 1.0).collect() };
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    for _ in 0..30_000 {
        let g = grad(&z);
        let next = project(&z.iter().zip(&g).map(|(z, g)| z - g / lipschitz).collect::<Vec<_>>(), y, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next.iter().zip(&a).map(|(n, o)| n + (t - 1.0) / t_next * (n - o)).collect();
        a = next;
        t = t_next;
    }
    a
}

fn oracle_bias(a: &[f64], y: &[f64], k: &[Vec<f64>], c: f64) -> f64 {
    let n = a.len();
    let f0 = |i: usize| (0..n).map(|j| a[j] * y[j] * k[i][j]).sum::<f64>();
    let eps = 1e-6 * c.max(1.0);
    let free: Vec<f64> = (0..n).filter(|&i| a[i] > eps && a[i] < c - eps).map(|i| y[i] - f0(i)).collect();
    if !free.is_empty() {
        return free.iter().sum::<f64>() / free.len() as f64;
    }
    let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let r = y[i] - f0(i);
        let at_zero = a[i] <= eps;
        if (y[i] > 0.0) == at_zero {
            lower = lower.max(r);
        } else {
            upper = upper.min(r);
        }
    }
    0.5 * (lower + upper)
}

fn smo_oracle(_: &mut Shared) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut agree, mut total, mut worst_gap, mut worst_agreement) = (0usize, 0usize, 0.0f64, 1.0f64);
    let datasets = 50;
    for d in 0..datasets {
        let n = rng.random_range(4..=12);
        let x = Array2::from_shape_fn((n, 2), |_| rng.random_range(-2.0..2.0));
        let mut labels: Vec<Label> = (0..n).map(|_| if rng.random_bool(0.5) { Label::True } else { Label::False }).collect();
        labels[0] = Label::True;
        labels[1] = Label::False;
        let c = 2f64.powf(rng.random_range(-1.0..4.0));
        let gamma = 2f64.powf(rng.random_range(-3.0..1.0));

        let (model, report) = svm_train_smo_with_report(&x, &labels, &SvmConfig::new(c, gamma)).map_err(|e| e.to_string())?;

        let (means, stds) = standardize(&x);
        let z = |row: &[f64]| -> Vec<f64> { row.iter().enumerate().map(|(j, v)| (v - means[j]) / stds[j]).collect() };
        let zs: Vec<Vec<f64>> = x.rows().into_iter().map(|r| z(r.as_slice().unwrap())).collect();
        for (i, row) in zs.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                ensure((v - report.training_data[[i, j]]).abs() < 1e-12, || format!("dataset {d}: standardization differs"))?;
            }
        }
        let y: Vec<f64> = labels.iter().map(|l| if *l == Label::True { 1.0 } else { -1.0 }).collect();
        let k: Vec<Vec<f64>> = zs.iter().map(|a| zs.iter().map(|b| rbf(a, b, gamma)).collect()).collect();

        let alphas = oracle_dual(&k, &y, c);
        let gap = (objective(&report.alphas, &y, &k) - objective(&alphas, &y, &k)).abs();
        ensure(gap <= 1e-3, || format!("dataset {d} (n={n}, C={c:.2}, γ={gamma:.2}): objective gap {gap:.2e}"))?;
        worst_gap = worst_gap.max(gap);

        let b = oracle_bias(&alphas, &y, &k, c);
        let mut hits = 0;
        let steps = 21;
        for gi in 0..steps {
            for gj in 0..steps {
                let p = [-2.5 + 5.0 * gi as f64 / (steps - 1) as f64, -2.5 + 5.0 * gj as f64 / (steps - 1) as f64];
                let zp = z(&p);
                let f = b + (0..n).map(|i| alphas[i] * y[i] * rbf(&zs[i], &zp, gamma)).sum::<f64>();
                let ours = model.decision(ndarray::ArrayView1::from(&p)).map_err(|e| e.to_string())?;
                hits += usize::from((f > 0.0) == (ours > 0.0));
            }
        }
        agree += hits;
        total += steps * steps;
        worst_agreement = worst_agreement.min(hits as f64 / (steps * steps) as f64);
    }
    let rate = agree as f64 / total as f64;
    ensure(rate >= 0.98, || format!("grid agreement {:.2}%", 100.0 * rate))?;
    Ok(format!(
        "{datasets} datasets, worst objective gap {worst_gap:.1e}, grid agreement {:.2}% (worst dataset {:.1}%)",
        100.0 * rate,
        100.0 * worst_agreement
    ))
}

// ---------------------------------------------------------------- 4

fn end_to_end(shared: &mut Shared) -> Check {
    let start = Instant::now();
    let dataset = load_dataset(bundled_data_dir().join(RUMOR_FILE)).map_err(|e| e.to_string())?;
    let fx = rumor_fixtures();
    let base = ExperimentConfig::new(Task::Rumor, ModelKind::SvmNn);
    let store = EvidenceStore::gather(&dataset.examples, &fx.gatherer(&base), Resources::bundled().idf);
    let (table, outcomes) = ExperimentRunner::new(&dataset, &store, Resources::bundled())
        .compare(&base, &ModelKind::ALL)
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let acc = |m: ModelKind| outcomes.iter().find(|o| o.config.model == m).map(|o| o.metrics.accuracy).unwrap();
    let test: Vec<Label> = dataset.split(Split::Test).map(|e| e.label).collect();
    let majority = test.iter().filter(|l| **l == Label::False).count().max(test.iter().filter(|l| **l == Label::True).count()) as f64
        / test.len() as f64;
    let (nn, svm, both) = (acc(ModelKind::Nn), acc(ModelKind::Svm), acc(ModelKind::SvmNn));
    let summary = format!(
        "majority {:.1}, nn {:.1}, svm {:.1}, svm+nn {:.1} in {:.0}s",
        100.0 * majority,
        100.0 * nn,
        100.0 * svm,
        100.0 * both,
        elapsed.as_secs_f64()
    );
    shared.run = Some((dataset, store, outcomes));
    ensure(both >= majority + 0.15, || format!("svm+nn not 15 points above majority: {summary}"))?;
    ensure(both >= svm - 0.02 && both >= nn - 0.02, || format!("svm+nn behind a single model: {summary}"))?;
    ensure(elapsed < Duration::from_secs(300), || format!("too slow: {summary}"))?;
    ensure(table.rows.len() == 5, || "table should hold two baselines and three systems".into())?;
    Ok(summary)
}

// ---------------------------------------------------------------- 5

fn claim_corpus(rng: &mut ChaCha8Rng) -> Vec<String> {
    let dataset = load_dataset(bundled_data_dir().join(RUMOR_FILE)).unwrap();
    let mut claims: Vec<String> = dataset.examples.iter().step_by(5).map(|e| e.claim.clone()).collect();
    let names = ["Obama", "Paris", "Texas", "Maria", "Google", "Amazon", "London"];
    let content = [
        "vaccine", "bridge", "election", "shark", "collapsed", "banned", "million", "river", "school", "virus", "storm",
        "festival", "airport", "robot", "tax", "coin", "moon", "doctor", "elephant", "museum",
    ];
    let closed = ["the", "a", "of", "and", "was", "is", "to", "in", "it", "that", "on", "by"];
    while claims.len() < 100 {
        let len = rng.random_range(1..=18);
        let words: Vec<&str> = (0..len)
            .map(|_| match rng.random_range(0..10) {
                0 => *names.choose(rng).unwrap(),
                1..=4 => *closed.choose(rng).unwrap(),
                _ => *content.choose(rng).unwrap(),
            })
            .collect();
        claims.push(words.join(" "));
    }
    claims
}

fn query_contract(_: &mut Shared) -> Check {
    let idf = IdfTable::bundled();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let claims = claim_corpus(&mut rng);
    let root = bundled_data_dir().join(RUMOR_FIXTURES);
    let policy = DomainPolicy::bundled_blacklist();
    let (mut rich, mut relaxed, mut exhausted) = (0, 0, 0);
    for claim in &claims {
        let mut candidates: BTreeSet<String> = rank_terms(claim, idf).into_iter().map(|(w, _)| w).collect();
        candidates.extend(extract_entities(claim).into_iter().flat_map(|e| e.tokens).map(|t| t.lower));
        let query = match generate_query(claim, idf) {
            Ok(q) => q,
            Err(_) if candidates.is_empty() => continue,
            Err(e) => return Err(format!("`{claim}`: {e}")),
        };
        if candidates.len() >= 5 {
            rich += 1;
            ensure((5..=10).contains(&query.len()), || format!("`{claim}` gave {} tokens", query.len()))?;
        } else {
            ensure(query.len() == candidates.len(), || format!("`{claim}` gave {} of {} candidates", query.len(), candidates.len()))?;
        }
        for engine in [Engine::Google, Engine::Bing] {
            let provider = FixtureProvider::new(&root, engine);
            let ev = retrieve_with_relaxation(&provider, &query, policy).map_err(|e| e.to_string())?;
            let searches = provider.search_count();
            ensure(searches <= query.len(), || format!("`{claim}`: {searches} searches for a {}-token query", query.len()))?;
            ensure(searches == ev.relaxations_applied + 1, || format!("`{claim}`: search count and relaxations disagree"))?;
            if ev.results.is_empty() {
                exhausted += 1;
                ensure(searches == query.len(), || format!("`{claim}` gave up early"))?;
            } else if ev.relaxations_applied > 0 {
                relaxed += 1;
            }
        }
    }
    Ok(format!(
        "{} claims ({rich} with >=5 candidates); {relaxed} searches needed relaxation, {exhausted} exhausted the query",
        claims.len()
    ))
}

// ---------------------------------------------------------------- 6

fn similarity_properties(_: &mut Shared) -> Check {
    let idf = IdfTable::bundled();
    let table = EmbeddingTable::bundled();
    let dataset = load_dataset(bundled_data_dir().join(RUMOR_FILE)).unwrap();
    let mut pool: Vec<String> = dataset.examples.iter().flat_map(|e| tokenize(&e.claim)).map(|t| t.surface).collect();
    pool.sort();
    pool.dedup();
    pool.extend(["qwzx", "blorft", "snarg"].map(String::from));
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let text = |rng: &mut ChaCha8Rng| -> String {
        let n = rng.random_range(0..=12);
        (0..n).map(|_| pool.choose(rng).unwrap().as_str()).collect::<Vec<_>>().join(" ")
    };
    let pairs = 1000;
    for _ in 0..pairs {
        let (a, b) = (text(&mut rng), text(&mut rng));
        let t = tfidf_cosine(&a, &b, idf);
        let e = embedding_cosine(&a, &b, table);
        let c = containment(&a, &b);
        ensure((0.0..=1.0 + 1e-12).contains(&t), || format!("tfidf {t} for `{a}` / `{b}`"))?;
        ensure((-1.0 - 1e-12..=1.0 + 1e-12).contains(&e), || format!("embedding {e} for `{a}` / `{b}`"))?;
        ensure((0.0..=1.0).contains(&c), || format!("containment {c} for `{a}` / `{b}`"))?;
        ensure((t - tfidf_cosine(&b, &a, idf)).abs() < 1e-9, || format!("tfidf asymmetric for `{a}` / `{b}`"))?;
        ensure((e - embedding_cosine(&b, &a, table)).abs() < 1e-9, || format!("embedding asymmetric for `{a}` / `{b}`"))?;
        if !tokenize(&a).is_empty() {
            ensure((tfidf_cosine(&a, &a, idf) - 1.0).abs() < 1e-9, || format!("tfidf self-similarity of `{a}`"))?;
            ensure(containment(&a, &a) == 1.0, || format!("containment self-similarity of `{a}`"))?;
            if tokenize(&a).iter().any(|t| table.contains(&t.lower)) {
                ensure((embedding_cosine(&a, &a, table) - 1.0).abs() < 1e-9, || format!("embedding self-similarity of `{a}`"))?;
            }
        }
    }
    let c = containment("a b c d", "b c d e");
    ensure(c == 0.5, || format!("containment(\"a b c d\", \"b c d e\") = {c}"))?;
    Ok(format!("{pairs} random pairs; containment(\"a b c d\", \"b c d e\") = {c}"))
}

// ---------------------------------------------------------------- 7

fn run_cli(out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_veriscope"))
        .args(["evaluate", "--task", "rumor", "--epochs", "20", "--out"])
        .arg(out)
        .env("RUST_LOG", "error")
        .stdout(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || format!("evaluate exited with {status}"))
}

fn determinism(_: &mut Shared) -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_cli(&a)?;
    run_cli(&b)?;
    let mut files = vec!["report.csv".to_string()];
    for m in ModelKind::ALL {
        files.push(format!("{}/predictions.tsv", m.name()));
        files.push(format!("{}/metrics.json", m.name()));
    }
    for f in &files {
        let (x, y) = (std::fs::read(a.join(f)), std::fs::read(b.join(f)));
        let (x, y) = (x.map_err(|e| format!("{f}: {e}"))?, y.map_err(|e| format!("{f}: {e}"))?);
        ensure(x == y, || format!("{f} differs between runs"))?;
    }
    Ok(format!("two CLI runs, {} output files byte-identical", files.len()))
}

// ---------------------------------------------------------------- 8

fn checkpoint_round_trip(shared: &mut Shared) -> Check {
    if shared.run.is_none() {
        let dataset = load_dataset(bundled_data_dir().join(RUMOR_FILE)).map_err(|e| e.to_string())?;
        let mut base = ExperimentConfig::new(Task::Rumor, ModelKind::SvmNn);
        base.nn.epochs = 20;
        let store = EvidenceStore::gather(&dataset.examples, &rumor_fixtures().gatherer(&base), Resources::bundled().idf);
        let (_, outcomes) = ExperimentRunner::new(&dataset, &store, Resources::bundled())
            .compare(&base, &ModelKind::ALL)
            .map_err(|e| e.to_string())?;
        shared.run = Some((dataset, store, outcomes));
    }
    let (dataset, store, outcomes) = shared.run.as_ref().unwrap();
    let res = Resources::bundled();
    let outcome = outcomes.iter().find(|o| o.config.model == ModelKind::SvmNn).unwrap();
    let (nn, svm) = (outcome.artifacts.nn.as_ref().unwrap(), outcome.artifacts.svm.as_ref().unwrap());
    let svm_avg = outcomes.iter().find(|o| o.config.model == ModelKind::Svm).unwrap().artifacts.svm.as_ref().unwrap();

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |f: &str| dir.path().join(f);
    nn.save(p("nn.json")).map_err(|e| e.to_string())?;
    svm.save(p("svm.json")).map_err(|e| e.to_string())?;
    svm_avg.save(p("svm_avg.json")).map_err(|e| e.to_string())?;
    let nn2 = NnModel::load(p("nn.json")).map_err(|e| e.to_string())?;
    let svm2 = SvmModel::load(p("svm.json")).map_err(|e| e.to_string())?;
    let svm_avg2 = SvmModel::load(p("svm_avg.json")).map_err(|e| e.to_string())?;

    let prepared = prepare(dataset, store, &outcome.config, &res).map_err(|e| e.to_string())?;
    let prepared = &prepared[..100];
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    for ex in prepared {
        let enc = encode_example(&ex.branches.as_strs(), &ex.analysis.block.values, Some(ex.label), res.table, &nn.caps);
        let (f1, f2) = (nn.infer(&enc).map_err(|e| e.to_string())?, nn2.infer(&enc).map_err(|e| e.to_string())?);
        ensure(f1.prob_true.to_bits() == f2.prob_true.to_bits(), || format!("{}: network output changed", ex.id))?;
        ensure(bits(f1.hidden.as_slice().unwrap()) == bits(f2.hidden.as_slice().unwrap()), || format!("{}: hidden layer changed", ex.id))?;
    }
    let one = std::slice::from_ref;
    let mut compared = 0;
    for ex in prepared {
        let (_, v1) = featurize(one(ex), ModelKind::SvmNn, outcome.config.pooling, Some(nn), &res).map_err(|e| e.to_string())?;
        let (_, v2) = featurize(one(ex), ModelKind::SvmNn, outcome.config.pooling, Some(&nn2), &res).map_err(|e| e.to_string())?;
        ensure(bits(&v1[0].values) == bits(&v2[0].values), || format!("{}: svm+nn features changed", ex.id))?;
        let d = |m: &SvmModel, v: &[f64]| m.decision(ndarray::ArrayView1::from(v)).map_err(|e| e.to_string());
        ensure(d(svm, &v1[0].values)?.to_bits() == d(&svm2, &v2[0].values)?.to_bits(), || format!("{}: svm+nn decision changed", ex.id))?;
        let (_, a) = featurize(one(ex), ModelKind::Svm, outcome.config.pooling, None, &res).map_err(|e| e.to_string())?;
        ensure(d(svm_avg, &a[0].values)?.to_bits() == d(&svm_avg2, &a[0].values)?.to_bits(), || format!("{}: svm decision changed", ex.id))?;
        compared += 1;
    }
    Ok(format!("{compared} examples bit-exact after reload (network, svm+nn, svm)"))
}

// ----------------------------------------------------------------

fn main() {
    let criteria: [Criterion; 8] = [
        ("metric fidelity", metric_fidelity),
        ("gradient check", gradient_check),
        ("SMO vs dual oracle", smo_oracle),
        ("end-to-end offline", end_to_end),
        ("query contract", query_contract),
        ("similarity properties", similarity_properties),
        ("determinism", determinism),
        ("checkpoint round-trip", checkpoint_round_trip),
    ];
    let mut shared = Shared::default();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(|| check(&mut shared))).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} {name:<22} PASS ({secs:.1}s) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name:<22} FAIL ({secs:.1}s) {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
