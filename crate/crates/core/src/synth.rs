//! Deterministic synthetic corpus: word vectors, an idf table, rumor and cQA
//! datasets, and search fixtures whose evidence separates the classes.
//!
//! The files under `data/` are produced by [`generate`] with the default
//! config (`cargo run -p veriscope --example generate_data`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::querygen::{build_idf, generate_query, IdfTable, Query};
use crate::retrieve::{fixture_key, Engine, FixtureFile, FixtureHit};

pub const EMBEDDING_FILE: &str = "embeddings_d8.txt";
pub const IDF_FILE: &str = "idf.tsv";
pub const RUMOR_FILE: &str = "rumor.jsonl";
pub const CQA_FILE: &str = "cqa.jsonl";
pub const RUMOR_FIXTURES: &str = "fixtures/rumor";
pub const CQA_FIXTURES: &str = "fixtures/cqa";

/// `crates/core/data` of this source tree.
pub fn bundled_data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthConfig {
    pub seed: u64,
    pub rumor_examples: usize,
    pub cqa_examples: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 2017,
            rumor_examples: 200,
            cqa_examples: 60,
        }
    }
}

/// Generated files keyed by path relative to the data directory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynthCorpus {
    pub files: BTreeMap<String, String>,
}

impl SynthCorpus {
    pub fn get(&self, rel: &str) -> Option<&str> {
        self.files.get(rel).map(String::as_str)
    }

    pub fn write(&self, root: &Path) -> Result<()> {
        for (rel, body) in &self.files {
            let path = root.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    fn insert_once(&mut self, rel: String, body: String) -> bool {
        if self.files.contains_key(&rel) {
            return false;
        }
        self.files.insert(rel, body);
        true
    }
}

const TOPICS: [(&str, [&str; 14]); 6] = [
    ("health", ["vaccine", "vitamin", "cancer", "hospital", "doctors", "flu", "sugar", "diet", "virus", "medicine", "patients", "surgery", "clinic", "drug"]),
    ("politics", ["senate", "election", "ballot", "congress", "law", "voters", "parliament", "budget", "campaign", "policy", "referendum", "lawmakers", "veto", "court"]),
    ("celebrity", ["actor", "singer", "concert", "movie", "album", "wedding", "divorce", "award", "tour", "fans", "studio", "festival", "premiere", "film"]),
    ("science", ["nasa", "moon", "planet", "asteroid", "telescope", "satellite", "climate", "ocean", "rocket", "scientists", "laboratory", "fossil", "eclipse", "comet"]),
    ("money", ["bank", "bitcoin", "dollar", "coins", "lottery", "salary", "pension", "stocks", "prices", "tariff", "company", "billionaire", "wages", "debt"]),
    ("animals", ["shark", "snake", "bear", "spider", "dolphin", "eagle", "tiger", "zoo", "whale", "wolf", "crocodile", "elephant", "penguin", "turtle"]),
];

const VERBS: [&str; 16] = [
    "banned", "found", "built", "sold", "closed", "opened", "cured", "caused", "ordered", "spotted", "released", "signed",
    "planned", "donated", "destroyed", "launched",
];

const PLACES: [&str; 14] = [
    "school", "beach", "airport", "village", "river", "museum", "stadium", "park", "highway", "prison", "church", "mall",
    "farm", "harbor",
];

const TRUE_CUES: [&str; 12] = [
    "confirmed", "verified", "official", "authentic", "documented", "accurate", "genuine", "approved", "announced",
    "published", "legitimate", "corroborated",
];

const FALSE_CUES: [&str; 12] = [
    "hoax", "fake", "debunked", "fabricated", "bogus", "myth", "satire", "misleading", "doctored", "baseless",
    "unfounded", "false",
];

const NEUTRAL: [&str; 16] = [
    "news", "article", "story", "claim", "sources", "website", "post", "video", "social", "media", "viral", "photo",
    "week", "readers", "statement", "residents",
];

const TITLES: [&str; 6] = ["Senator", "Governor", "Mayor", "Doctor", "Professor", "Minister"];
const FIRST: [&str; 20] = [
    "Ada", "Boris", "Carla", "Dmitri", "Elena", "Farid", "Greta", "Hugo", "Ines", "Jonas", "Keiko", "Luca", "Mira",
    "Nils", "Olga", "Pavel", "Rosa", "Stefan", "Tara", "Viktor",
];
const LAST: [&str; 12] = [
    "Marlow", "Dunmore", "Okafor", "Lindqvist", "Petrova", "Haddad", "Castillo", "Brennan", "Takeda", "Moreau",
    "Kowalski", "Abernathy",
];
const CITIES: [&str; 12] = [
    "Oslo", "Lagos", "Lima", "Perth", "Quebec", "Denver", "Nairobi", "Krakow", "Osaka", "Porto", "Tucson", "Bergen",
];

const NEWS_SITES: [&str; 10] = [
    "newsdaily.com", "worldreport.net", "citypost.com", "metrotimes.org", "globalwire.com", "morningledger.com",
    "thecourier.net", "dailyobserver.org", "eveningstar.com", "regionalbulletin.com",
];
const FACT_CHECK_SITE: &str = "snopes.com";

/// Category, question, subject phrase, correct value, wrong values,
/// whitelisted source domain.
struct Fact {
    category: &'static str,
    question: &'static str,
    subject: &'static str,
    value: &'static str,
    wrong: [&'static str; 3],
    domain: &'static str,
}

const FACTS: [Fact; 12] = [
    Fact { category: "telecom", question: "What is the Ooredoo customer service number?", subject: "Ooredoo customer service number", value: "111", wrong: ["444", "155", "190"], domain: "ooredoo.qa" },
    Fact { category: "telecom", question: "Which number do I call for Vodafone support in Qatar?", subject: "Vodafone support line", value: "121", wrong: ["333", "888", "177"], domain: "vodafone.qa" },
    Fact { category: "visas", question: "Where can I renew my residence permit in Doha?", subject: "residence permit renewal", value: "Metrash portal", wrong: ["embassy counter", "airport desk", "municipality office"], domain: "moi.gov.qa" },
    Fact { category: "driving", question: "How long is a Qatari driving license valid for expats?", subject: "expat driving license validity", value: "five years", wrong: ["ten years", "two years", "one year"], domain: "moi.gov.qa" },
    Fact { category: "utilities", question: "Who handles electricity connections for new villas in Qatar?", subject: "electricity connections for villas", value: "Kahramaa", wrong: ["Ashghal", "Qatargas", "Mowasalat"], domain: "kahramaa.com.qa" },
    Fact { category: "travel", question: "What is the checked baggage allowance on Qatar Airways economy?", subject: "economy checked baggage allowance", value: "thirty kilograms", wrong: ["fifteen kilograms", "fifty kilograms", "twenty kilograms"], domain: "qatarairways.com" },
    Fact { category: "banking", question: "What is the minimum salary for a QNB credit card?", subject: "QNB credit card minimum salary", value: "five thousand riyals", wrong: ["twenty thousand riyals", "one thousand riyals", "ten thousand riyals"], domain: "qnb.com" },
    Fact { category: "visas", question: "Can visitors extend a tourist visa inside Qatar?", subject: "tourist visa extension", value: "Hukoomi online service", wrong: ["border checkpoint only", "sponsor letter only", "not possible at all"], domain: "hukoomi.gov.qa" },
    Fact { category: "health", question: "Where do residents get a health card in Doha?", subject: "health card issuing", value: "primary health centres", wrong: ["private pharmacies", "hotel clinics", "labour camps"], domain: "gov.qa" },
    Fact { category: "housing", question: "Which weekend day do most Doha offices close?", subject: "Doha office weekend", value: "Friday and Saturday", wrong: ["Sunday and Monday", "Thursday only", "Monday only"], domain: "thepeninsulaqatar.com" },
    Fact { category: "driving", question: "What is the speed limit on Doha Expressway?", subject: "Doha Expressway speed limit", value: "eighty kilometres", wrong: ["one hundred twenty kilometres", "sixty kilometres", "forty kilometres"], domain: "gulf-times.com" },
    Fact { category: "travel", question: "How early should I arrive at Hamad airport for flights?", subject: "Hamad airport arrival time", value: "three hours", wrong: ["thirty minutes", "one hour", "six hours"], domain: "qatarliving.com" },
];

const CQA_WORDS: [&str; 40] = [
    "ooredoo", "vodafone", "customer", "service", "number", "support", "line", "call", "residence", "permit", "renewal",
    "renew", "metrash", "portal", "driving", "license", "expats", "valid", "years", "electricity", "villas", "kahramaa",
    "baggage", "allowance", "economy", "kilograms", "credit", "card", "salary", "riyals", "visa", "tourist",
    "extension", "health", "centres", "weekend", "offices", "speed", "limit", "airport",
];

const FORUMS: [&str; 3] = ["expatforum.com", "travelchat.net", "askdoha.org"];

fn word_vector(rng: &mut ChaCha8Rng, topic: Option<usize>, cue: f64, spread: f64) -> [f64; 8] {
    let mut v = [0.0; 8];
    for (k, x) in v.iter_mut().enumerate().take(6) {
        *x = rng.random_range(-0.1..0.1) + if Some(k) == topic { 1.0 } else { 0.0 };
    }
    v[6] = cue + rng.random_range(-0.1..0.1);
    v[7] = rng.random_range(-spread..spread);
    v
}

fn embeddings_file(rng: &mut ChaCha8Rng) -> String {
    let mut rows: Vec<(String, [f64; 8])> = Vec::new();
    for (t, (_, words)) in TOPICS.iter().enumerate() {
        for w in words {
            rows.push((w.to_string(), word_vector(rng, Some(t), 0.0, 0.5)));
        }
    }
    for w in VERBS.iter().chain(&PLACES).chain(&NEUTRAL) {
        rows.push((w.to_string(), word_vector(rng, None, 0.0, 0.8)));
    }
    for w in TRUE_CUES {
        rows.push((w.to_string(), word_vector(rng, None, 1.0, 0.3)));
    }
    for w in FALSE_CUES {
        rows.push((w.to_string(), word_vector(rng, None, -1.0, 0.3)));
    }
    for w in CQA_WORDS {
        // cQA vocabulary shares the health/money/science axes loosely
        let t = rng.random_range(0..6);
        rows.push((w.to_string(), word_vector(rng, Some(t), 0.0, 0.6)));
    }
    let mut seen = BTreeSet::new();
    let mut out = String::new();
    for (w, v) in rows {
        if !seen.insert(w.clone()) {
            continue;
        }
        out.push_str(&w);
        for x in v {
            let _ = write!(out, " {x:.4}");
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct Record<'a> {
    id: String,
    claim: String,
    label: &'static str,
    split: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    question: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    answer: Option<String>,
    category: &'a str,
}

/// How the fixtures of one engine respond to an example's query.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Availability {
    Full,
    /// Hits only after dropping this many trailing tokens.
    Relaxed(usize),
    /// The full query returns only an unreliable hit; one relaxation needed.
    Blocked,
    Missing,
}

struct Claim {
    title: &'static str,
    first: &'static str,
    last: &'static str,
    verb: &'static str,
    w: [&'static str; 4],
    place: &'static str,
    city: &'static str,
    topic: usize,
    text: String,
}

fn make_claim(rng: &mut ChaCha8Rng, first: &'static str, last: &'static str) -> Claim {
    let topic = rng.random_range(0..TOPICS.len());
    let words: Vec<&'static str> = TOPICS[topic].1.choose_multiple(rng, 4).copied().collect();
    let title = *TITLES.choose(rng).expect("non-empty");
    let verb = *VERBS.choose(rng).expect("non-empty");
    let place = *PLACES.choose(rng).expect("non-empty");
    let city = *CITIES.choose(rng).expect("non-empty");
    let w = [words[0], words[1], words[2], words[3]];
    let text = format!(
        "{title} {first} {last} {verb} the {} {} near the {place} in {city} after {} {}",
        w[0], w[1], w[2], w[3]
    );
    Claim {
        title,
        first,
        last,
        verb,
        w,
        place,
        city,
        topic,
        text,
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next().map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
}

fn pick<'a>(rng: &mut ChaCha8Rng, words: &[&'a str]) -> &'a str {
    words.choose(rng).expect("non-empty")
}

fn supporting_snippet(rng: &mut ChaCha8Rng, c: &Claim) -> String {
    let (t1, t2, n) = (pick(rng, &TRUE_CUES), pick(rng, &TRUE_CUES), pick(rng, &NEUTRAL));
    match rng.random_range(0..3) {
        0 => format!("{} {} the {} {} near the {} in {}, {t1} {n} records show", c.last, c.verb, c.w[0], c.w[1], c.place, c.city),
        1 => format!("{}: {} {} {} the {} {} after {} {}", capitalize(t1), c.title, c.last, c.verb, c.w[0], c.w[1], c.w[2], c.w[3]),
        _ => format!("{} {} {} the {} in {} after {} {}, a {t2} {n} says", c.first, c.last, c.verb, c.w[1], c.city, c.w[2], c.w[3]),
    }
}

fn debunking_snippet(rng: &mut ChaCha8Rng, c: &Claim) -> String {
    let (f1, f2, n) = (pick(rng, &FALSE_CUES), pick(rng, &FALSE_CUES), pick(rng, &NEUTRAL));
    match rng.random_range(0..3) {
        0 => format!("{} {n} says {} {} a {} near some {}", capitalize(f1), c.last, c.verb, c.w[0], c.place),
        1 => format!("No, {} {} never {} {} in {}; the {f1} {n} was {f2}", c.title, c.last, c.verb, c.w[1], c.city),
        _ => format!("{} {n} about {} and {} {} is {f1}, {f2} claims spread online", capitalize(c.w[2]), c.last, c.w[0], c.w[3]),
    }
}

fn unrelated_snippet(rng: &mut ChaCha8Rng, topic: usize) -> String {
    let other = (topic + rng.random_range(1..TOPICS.len())) % TOPICS.len();
    let w: Vec<&str> = TOPICS[other].1.choose_multiple(rng, 3).copied().collect();
    let (n1, n2, city) = (pick(rng, &NEUTRAL), pick(rng, &NEUTRAL), pick(rng, &CITIES));
    format!("{} {} and {} {n1} from {city} drew {n2} this {}", capitalize(w[0]), w[1], w[2], pick(rng, &["morning", "week", "year"]))
}

fn page_html(rng: &mut ChaCha8Rng, site: &str, snippet: &str, c: &Claim, supports: bool) -> String {
    let cue = if supports { pick(rng, &TRUE_CUES) } else { pick(rng, &FALSE_CUES) };
    let middle = if supports {
        format!("Officials {} the details about the {} on Monday.", pick(rng, &["confirmed", "verified", "documented"]), c.w[0])
    } else {
        format!("Editors called the {} story {cue} after checking the {}.", c.w[0], pick(rng, &NEUTRAL))
    };
    let fillers: Vec<String> = (0..3).map(|_| format!("{}.", unrelated_snippet(rng, c.topic))).collect();
    let sentences = [
        fillers[0].clone(),
        format!("{snippet}."),
        middle,
        format!("Residents near the {} in {} shared the {} widely.", c.place, c.city, pick(rng, &NEUTRAL)),
        fillers[1].clone(),
        fillers[2].clone(),
    ];
    let mut body = String::new();
    for s in sentences {
        let _ = writeln!(body, "<p>{}</p>", s.replace('&', "&amp;"));
    }
    format!(
        "<!DOCTYPE html>\n<html><head><title>{site}</title><style>p {{ margin: 0 }}</style>\
         <script>window.track = function () {{ return 1; }};</script></head>\n\
         <body><nav>Home | World | Contact</nav><article>\n{body}</article>\
         <footer>Copyright {site}</footer></body></html>\n"
    )
}

struct FixtureSink<'a> {
    corpus: &'a mut SynthCorpus,
    root: &'a str,
}

impl FixtureSink<'_> {
    fn put(&mut self, engine: Engine, query: &Query, hits: Vec<FixtureHit>, pages: Vec<(String, String)>) -> Result<()> {
        let file = FixtureFile {
            query: query.normalized(),
            results: hits,
        };
        let mut json = serde_json::to_string_pretty(&file)?;
        json.push('\n');
        let rel = format!("{}/{}/{}.json", self.root, engine.name(), fixture_key(&file.query));
        if self.corpus.insert_once(rel, json) {
            for (name, body) in pages {
                self.corpus.insert_once(format!("{}/{}/{name}", self.root, engine.name()), body);
            }
        }
        Ok(())
    }
}

fn prefix(query: &Query, drop: usize) -> Result<Query> {
    let keep = query.len().saturating_sub(drop).max(1);
    Query::new(&query.tokens[..keep])
}

fn splits(n_true: usize, n_false: usize, fractions: (f64, f64)) -> Vec<(bool, &'static str)> {
    let mut out = Vec::new();
    for (label, n) in [(true, n_true), (false, n_false)] {
        let train = (n as f64 * fractions.0).round() as usize;
        let dev = (n as f64 * fractions.1).round() as usize;
        for k in 0..n {
            let split = if k < train {
                "train"
            } else if k < train + dev {
                "dev"
            } else {
                "test"
            };
            out.push((label, split));
        }
    }
    out
}

struct RumorItem {
    id: String,
    claim: Claim,
    label: bool,
    split: &'static str,
}

fn rumor_items(rng: &mut ChaCha8Rng, n: usize) -> Vec<RumorItem> {
    let mut names: Vec<(&'static str, &'static str)> =
        FIRST.iter().flat_map(|f| LAST.iter().map(move |l| (*f, *l))).collect();
    names.shuffle(rng);
    assert!(n <= names.len(), "not enough distinct names");
    let n_true = (n as f64 * 0.34).round() as usize;
    let mut slots = splits(n_true, n - n_true, (0.65, 0.15));
    slots.shuffle(rng);
    slots
        .into_iter()
        .zip(names)
        .enumerate()
        .map(|(i, ((label, split), (first, last)))| RumorItem {
            id: format!("r{:03}", i + 1),
            claim: make_claim(rng, first, last),
            label,
            split,
        })
        .collect()
}

fn rumor_hits(rng: &mut ChaCha8Rng, item: &RumorItem, engine: Engine, count: usize) -> (Vec<FixtureHit>, Vec<(String, String)>) {
    let mut hits = Vec::new();
    let mut pages = Vec::new();
    let mut rank = 1;
    if rng.random_bool(0.3) {
        let verdict = if item.label { "True" } else { "False" };
        hits.push(FixtureHit {
            rank,
            url: format!("https://www.{FACT_CHECK_SITE}/fact-check/{}-{}", item.claim.last.to_lowercase(), item.id),
            snippet: format!("Rating: {verdict}. Did {} {} {} the {}?", item.claim.title, item.claim.last, item.claim.verb, item.claim.w[0]),
            page_file: None,
        });
        rank += 1;
    }
    for _ in 0..count {
        let roll: f64 = rng.random();
        let (snippet, supports) = if roll < 0.12 {
            (unrelated_snippet(rng, item.claim.topic), item.label)
        } else if roll < 0.19 {
            let s = if item.label { debunking_snippet(rng, &item.claim) } else { supporting_snippet(rng, &item.claim) };
            (s, !item.label)
        } else if item.label {
            (supporting_snippet(rng, &item.claim), true)
        } else {
            (debunking_snippet(rng, &item.claim), false)
        };
        let site = pick(rng, &NEWS_SITES);
        let url = format!("https://www.{site}/{}/{}-{}", engine.name(), item.id, rank);
        let page_file = rng.random_bool(0.7).then(|| format!("pages/{}-{rank}.html", item.id));
        if let Some(name) = &page_file {
            pages.push((name.clone(), page_html(rng, site, &snippet, &item.claim, supports)));
        }
        hits.push(FixtureHit {
            rank,
            url,
            snippet,
            page_file,
        });
        rank += 1;
    }
    (hits, pages)
}

fn availability(rng: &mut ChaCha8Rng, engine: Engine) -> Availability {
    let roll: f64 = rng.random();
    match engine {
        Engine::Google if roll < 0.18 => Availability::Relaxed(rng.random_range(1..=2)),
        Engine::Google if roll < 0.26 => Availability::Blocked,
        Engine::Bing if roll < 0.12 => Availability::Missing,
        Engine::Bing if roll < 0.22 => Availability::Relaxed(1),
        _ => Availability::Full,
    }
}

fn write_engine(sink: &mut FixtureSink<'_>, engine: Engine, query: &Query, avail: Availability, hits: (Vec<FixtureHit>, Vec<(String, String)>)) -> Result<()> {
    match avail {
        Availability::Missing => Ok(()),
        Availability::Full => sink.put(engine, query, hits.0, hits.1),
        Availability::Relaxed(k) => sink.put(engine, &prefix(query, k)?, hits.0, hits.1),
        Availability::Blocked => {
            let blocked = FixtureHit {
                rank: 1,
                url: format!("https://{FACT_CHECK_SITE}/fact-check/{}", fixture_key(&query.normalized())),
                snippet: "Fact check archive entry".to_string(),
                page_file: None,
            };
            sink.put(engine, query, vec![blocked], Vec::new())?;
            sink.put(engine, &prefix(query, 1)?, hits.0, hits.1)
        }
    }
}

fn record_line(out: &mut String, record: &Record<'_>) -> Result<()> {
    out.push_str(&serde_json::to_string(record)?);
    out.push('\n');
    Ok(())
}

struct CqaItem {
    id: String,
    fact: usize,
    question: &'static str,
    answer: String,
    label: bool,
    split: &'static str,
}

fn cqa_items(rng: &mut ChaCha8Rng, n: usize) -> Vec<CqaItem> {
    let n_true = (n as f64 * 0.4).round() as usize;
    let mut slots = splits(n_true, n - n_true, (0.6, 0.2));
    slots.shuffle(rng);
    let templates = [
        "It is {v}.",
        "As far as I know it is {v}, that worked for me last month.",
        "Try {v}, a friend told me the same.",
        "I am quite sure the answer is {v}.",
        "Last time I checked it was {v}.",
    ];
    slots
        .into_iter()
        .enumerate()
        .map(|(i, (label, split))| {
            let fact = i % FACTS.len();
            let f = &FACTS[fact];
            let value = if label { f.value } else { pick(rng, &f.wrong) };
            let answer = pick(rng, &templates).replace("{v}", value);
            CqaItem {
                id: format!("q{:03}", i + 1),
                fact,
                question: f.question,
                answer,
                label,
                split,
            }
        })
        .collect()
}

fn cqa_hits(rng: &mut ChaCha8Rng, item: &CqaItem, engine: Engine) -> Vec<FixtureHit> {
    let f = &FACTS[item.fact];
    let forms = [
        format!("The {} is {} according to the latest official guidance", f.subject, f.value),
        format!("{}: residents should use {} as stated on the service page", capitalize(f.subject), f.value),
        format!("Updated notice on the {} confirms {} for all applicants", f.subject, f.value),
    ];
    let mut hits: Vec<FixtureHit> = forms
        .iter()
        .take(rng.random_range(2..=3))
        .enumerate()
        .map(|(k, s)| FixtureHit {
            rank: k + 1,
            url: format!("https://www.{}/{}/{}-{}", f.domain, f.category, item.id, k + 1),
            snippet: s.clone(),
            page_file: None,
        })
        .collect();
    // forum chatter outside the whitelist, usually wrong
    let n = hits.len();
    hits.push(FixtureHit {
        rank: n + 1,
        url: format!("https://{}/{}/thread-{}", pick(rng, &FORUMS), engine.name(), item.id),
        snippet: format!("Someone said the {} is {} but nobody is sure", f.subject, pick(rng, &f.wrong)),
        page_file: None,
    });
    hits
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut corpus = SynthCorpus::default();
    corpus.files.insert(EMBEDDING_FILE.to_string(), embeddings_file(&mut rng));

    let rumor = rumor_items(&mut rng, config.rumor_examples);
    let cqa = cqa_items(&mut rng, config.cqa_examples);

    // Snippets are drawn ahead of the idf table so the table covers them.
    let mut rumor_evidence = Vec::new();
    let mut no_evidence: BTreeSet<usize> = BTreeSet::new();
    let train_idx: Vec<usize> = (0..rumor.len()).filter(|&i| rumor[i].split == "train").collect();
    no_evidence.extend(train_idx.choose_multiple(&mut rng, 3.min(train_idx.len())));
    for (i, item) in rumor.iter().enumerate() {
        let per_engine: Vec<_> = Engine::ALL
            .iter()
            .map(|&e| {
                let avail = if no_evidence.contains(&i) { Availability::Missing } else { availability(&mut rng, e) };
                let count = rng.random_range(3..=5);
                (e, avail, rumor_hits(&mut rng, item, e, count))
            })
            .collect();
        rumor_evidence.push(per_engine);
    }
    let cqa_evidence: Vec<Vec<(Engine, Vec<FixtureHit>)>> = cqa
        .iter()
        .map(|item| Engine::ALL.iter().map(|&e| (e, cqa_hits(&mut rng, item, e))).collect())
        .collect();

    let mut docs: Vec<String> = Vec::new();
    docs.extend(rumor.iter().map(|r| r.claim.text.clone()));
    docs.extend(cqa.iter().map(|q| format!("{} {}", q.question, q.answer)));
    for per_engine in &rumor_evidence {
        for (_, _, (hits, _)) in per_engine {
            docs.extend(hits.iter().map(|h| h.snippet.clone()));
        }
    }
    for per_engine in &cqa_evidence {
        for (_, hits) in per_engine {
            docs.extend(hits.iter().map(|h| h.snippet.clone()));
        }
    }
    let idf: IdfTable = build_idf(&docs)?;
    corpus.files.insert(IDF_FILE.to_string(), idf.to_file_string());

    let mut lines = String::new();
    for item in &rumor {
        record_line(
            &mut lines,
            &Record {
                id: item.id.clone(),
                claim: item.claim.text.clone(),
                label: if item.label { "true" } else { "false" },
                split: item.split,
                question: None,
                answer: None,
                category: TOPICS[item.claim.topic].0,
            },
        )?;
    }
    corpus.files.insert(RUMOR_FILE.to_string(), lines);

    let mut lines = String::new();
    for item in &cqa {
        record_line(
            &mut lines,
            &Record {
                id: item.id.clone(),
                claim: crate::pipeline::cqa_build_claim(item.question, &item.answer)?,
                label: if item.label { "true" } else { "false" },
                split: item.split,
                question: Some(item.question),
                answer: Some(item.answer.clone()),
                category: FACTS[item.fact].category,
            },
        )?;
    }
    corpus.files.insert(CQA_FILE.to_string(), lines);

    {
        let mut sink = FixtureSink {
            corpus: &mut corpus,
            root: RUMOR_FIXTURES,
        };
        for (item, per_engine) in rumor.iter().zip(rumor_evidence) {
            let query = generate_query(&item.claim.text, &idf)?;
            for (engine, avail, hits) in per_engine {
                write_engine(&mut sink, engine, &query, avail, hits)?;
            }
        }
    }
    {
        let mut sink = FixtureSink {
            corpus: &mut corpus,
            root: CQA_FIXTURES,
        };
        for (item, per_engine) in cqa.iter().zip(cqa_evidence) {
            let claim = crate::pipeline::cqa_build_claim(item.question, &item.answer)?;
            let query = generate_query(&claim, &idf)?;
            for (engine, hits) in per_engine {
                sink.put(engine, &query, hits, Vec::new())?;
            }
        }
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_reproducible() {
        let small = SynthConfig {
            seed: 5,
            rumor_examples: 30,
            cqa_examples: 12,
        };
        assert_eq!(generate(&small).unwrap(), generate(&small).unwrap());
    }

    #[test]
    fn bundled_files_match_generator() {
        let corpus = generate(&SynthConfig::default()).unwrap();
        let root = bundled_data_dir();
        for (rel, body) in &corpus.files {
            let on_disk = std::fs::read_to_string(root.join(rel)).unwrap_or_default();
            assert!(on_disk == *body, "{rel} is stale; rerun the generate_data example");
        }
        for dir in [RUMOR_FIXTURES, CQA_FIXTURES] {
            for engine in Engine::ALL {
                let base = root.join(dir).join(engine.name());
                for sub in [base.clone(), base.join("pages")] {
                    let Ok(entries) = std::fs::read_dir(&sub) else { continue };
                    for e in entries.flatten().filter(|e| e.path().is_file()) {
                        let rel = e.path().strip_prefix(&root).unwrap().to_string_lossy().replace('\\', "/");
                        assert!(corpus.files.contains_key(&rel), "unexpected file {rel}");
                    }
                }
            }
        }
    }
}
