use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;
use crate::retrieve::collapse_whitespace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    /// For cQA, the question and answer joined by [`cqa_build_claim`].
    pub claim: String,
    pub label: Label,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

impl Example {
    pub fn is_cqa(&self) -> bool {
        self.question.is_some()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExample {
    id: String,
    #[serde(default, alias = "claim_text")]
    claim: Option<String>,
    label: Label,
    split: Split,
    #[serde(default)]
    question: Option<String>,
    #[serde(default)]
    answer: Option<String>,
    #[serde(default)]
    category: Option<String>,
}

/// Question followed by answer, whitespace collapsed to single spaces.
pub fn cqa_build_claim(question: &str, answer: &str) -> Result<String> {
    let q = collapse_whitespace(question).replace('\n', " ");
    let a = collapse_whitespace(answer).replace('\n', " ");
    if q.is_empty() {
        return Err(Error::invalid("empty question"));
    }
    if a.is_empty() {
        return Err(Error::invalid("empty answer"));
    }
    Ok(format!("{q} {a}"))
}

/// Counts per split and label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub total: usize,
    pub by_split: BTreeMap<Split, [usize; 2]>,
}

impl DatasetSummary {
    pub fn of(examples: &[Example]) -> Self {
        let mut s = DatasetSummary {
            total: examples.len(),
            by_split: BTreeMap::new(),
        };
        for e in examples {
            s.by_split.entry(e.split).or_default()[e.label.index()] += 1;
        }
        s
    }

    pub fn count(&self, split: Split) -> usize {
        self.by_split.get(&split).map_or(0, |c| c[0] + c[1])
    }
}

impl std::fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} examples", self.total)?;
        for split in Split::ALL {
            let [n_false, n_true] = self.by_split.get(&split).copied().unwrap_or_default();
            write!(f, "; {}: {} ({n_false} false, {n_true} true)", split.name(), n_false + n_true)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub summary: DatasetSummary,
}

impl Dataset {
    pub fn new(examples: Vec<Example>) -> Self {
        let summary = DatasetSummary::of(&examples);
        Dataset { examples, summary }
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Example> {
        self.examples.iter().filter(move |e| e.split == split)
    }

    pub fn get(&self, id: &str) -> Option<&Example> {
        self.examples.iter().find(|e| e.id == id)
    }
}

/// One JSON object per line; blank lines are skipped. A cQA line carries
/// `question` and `answer` and may omit `claim`.
pub fn parse_dataset(reader: impl BufRead, source_name: &str) -> Result<Dataset> {
    let mut examples = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::format(source_name, line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawExample =
            serde_json::from_str(&line).map_err(|e| Error::format(source_name, line_no, e.to_string()))?;
        let err = |msg: String| Error::format(source_name, line_no, msg);
        if raw.id.trim().is_empty() {
            return Err(err("empty id".into()));
        }
        if !ids.insert(raw.id.clone()) {
            return Err(err(format!("duplicate id `{}`", raw.id)));
        }
        let claim = match (&raw.question, &raw.answer) {
            (Some(q), Some(a)) => {
                let built = cqa_build_claim(q, a).map_err(|e| err(format!("{}: {e}", raw.id)))?;
                if let Some(c) = &raw.claim {
                    if collapse_whitespace(c).replace('\n', " ") != built {
                        return Err(err(format!("{}: claim differs from question + answer", raw.id)));
                    }
                }
                built
            }
            (None, None) => match raw.claim {
                Some(c) if !c.trim().is_empty() => c,
                _ => return Err(err(format!("{}: missing claim", raw.id))),
            },
            _ => return Err(err(format!("{}: question and answer must come together", raw.id))),
        };
        examples.push(Example {
            id: raw.id,
            claim,
            label: raw.label,
            split: raw.split,
            question: raw.question,
            answer: raw.answer,
            category: raw.category,
        });
    }
    if examples.is_empty() {
        return Err(Error::format(source_name, 0, "no examples"));
    }
    let dataset = Dataset::new(examples);
    log::info!("{source_name}: {}", dataset.summary);
    Ok(dataset)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(std::io::BufReader::new(file), &path.display().to_string())
}
