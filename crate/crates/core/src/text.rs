//! Deterministic text primitives: tokenization, sentence splitting,
//! closed-class filtering, heuristic named entities and word n-grams.
//!
//! Everything here is a pure function of its input. Content-word filtering
//! and entity extraction go through the [`Annotator`] trait so that a real
//! part-of-speech tagger or NER model can replace the heuristics.

use std::collections::{BTreeSet, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lower: String,
    pub is_capitalized: bool,
    /// Byte offset of the token in the source text.
    pub position: usize,
}

impl Token {
    fn new(surface: &str, position: usize) -> Self {
        Token {
            surface: surface.to_string(),
            lower: surface.to_lowercase(),
            is_capitalized: surface.chars().next().is_some_and(char::is_uppercase),
            position,
        }
    }

    /// Byte offset one past the last byte of the token.
    pub fn end(&self) -> usize {
        self.position + self.surface.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub tokens: Vec<Token>,
    /// Byte range `[start, end)` in the source text.
    pub char_span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityPhrase {
    pub tokens: Vec<Token>,
    pub text: String,
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-' | '\u{2010}')
}

/// Splits on whitespace and punctuation. Apostrophes and hyphens survive
/// only between two alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;

    for (k, &(offset, c)) in chars.iter().enumerate() {
        let keep = if c.is_alphanumeric() {
            true
        } else if is_joiner(c) && start.is_some() {
            let next_alnum = chars.get(k + 1).is_some_and(|&(_, n)| n.is_alphanumeric());
            let prev_alnum = k > 0 && chars[k - 1].1.is_alphanumeric();
            next_alnum && prev_alnum
        } else {
            false
        };

        match (keep, start) {
            (true, None) => start = Some(offset),
            (false, Some(s)) => {
                tokens.push(Token::new(&text[s..offset], s));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(Token::new(&text[s..], s));
    }
    tokens
}

const TERMINATORS: &[char] = &['.', '!', '?'];
const CLOSERS: &[char] = &['.', '!', '?', '"', '\'', ')', ']', '}', '\u{201d}', '\u{2019}', '\u{bb}'];
const ABBREVIATIONS: &[&str] = &["mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "gen", "gov", "sen", "rep"];

fn is_abbreviation(text: &str, dot: usize) -> bool {
    let word: String = text[..dot]
        .chars()
        .rev()
        .take_while(|c| c.is_alphanumeric())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    if word.chars().count() == 1 && word.chars().all(char::is_uppercase) {
        return true; // an initial, as in "J. Smith"
    }
    ABBREVIATIONS.contains(&word.to_lowercase().as_str())
}

fn make_sentence(text: &str, start: usize, end: usize) -> Option<Sentence> {
    let slice = &text[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    if trimmed.is_empty() {
        return None;
    }
    let s = start + lead;
    let e = s + trimmed.len();
    let tokens = tokenize(trimmed)
        .into_iter()
        .map(|mut t| {
            t.position += s;
            t
        })
        .collect();
    Some(Sentence {
        text: trimmed.to_string(),
        tokens,
        char_span: (s, e),
    })
}

/// Splits at `.`, `!` or `?` (plus any trailing quotes or brackets) when
/// followed by whitespace and an uppercase letter, or by the end of text.
pub fn split_sentences(text: &str) -> Vec<Sentence> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut sent_start = 0;
    let mut k = 0;

    while k < chars.len() {
        let (offset, c) = chars[k];
        if !TERMINATORS.contains(&c) {
            k += 1;
            continue;
        }
        let mut j = k + 1;
        while j < chars.len() && CLOSERS.contains(&chars[j].1) {
            j += 1;
        }
        let boundary = if j == chars.len() {
            true
        } else if chars[j].1.is_whitespace() {
            let mut n = j;
            while n < chars.len() && chars[n].1.is_whitespace() {
                n += 1;
            }
            n == chars.len() || chars[n].1.is_uppercase()
        } else {
            false
        };
        let boundary = boundary && !(c == '.' && j == k + 1 && is_abbreviation(text, offset));

        if boundary {
            let end = chars.get(j).map_or(text.len(), |&(o, _)| o);
            sentences.extend(make_sentence(text, sent_start, end));
            sent_start = end;
        }
        k = j;
    }
    sentences.extend(make_sentence(text, sent_start, text.len()));
    sentences
}

/// Closed-class word list: determiners, pronouns, prepositions,
/// conjunctions, auxiliaries, particles and interjections.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    words: HashSet<String>,
}

impl Lexicon {
    /// Parses one lowercase word per line; `#` starts a comment.
    pub fn parse(source: &str) -> Self {
        let words = source
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_lowercase)
            .collect();
        Lexicon { words }
    }

    pub fn bundled() -> &'static Lexicon {
        static LEXICON: OnceLock<Lexicon> = OnceLock::new();
        LEXICON.get_or_init(|| Lexicon::parse(include_str!("../data/closed_class.txt")))
    }

    pub fn contains(&self, lower: &str) -> bool {
        self.words.contains(lower)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Linguistic annotation used by query generation.
pub trait Annotator: Send + Sync {
    /// Keeps only open-class words (nouns, verbs, adjectives, ...), in order.
    fn content_tokens(&self, tokens: &[Token]) -> Vec<Token>;

    fn entities(&self, text: &str) -> Vec<EntityPhrase>;
}

/// Lexicon filter plus capitalization-run entity finder.
#[derive(Debug, Clone)]
pub struct HeuristicAnnotator {
    lexicon: Lexicon,
}

impl HeuristicAnnotator {
    pub fn new(lexicon: Lexicon) -> Self {
        HeuristicAnnotator { lexicon }
    }
}

impl Default for HeuristicAnnotator {
    fn default() -> Self {
        HeuristicAnnotator::new(Lexicon::bundled().clone())
    }
}

impl Annotator for HeuristicAnnotator {
    fn content_tokens(&self, tokens: &[Token]) -> Vec<Token> {
        tokens
            .iter()
            .filter(|t| !self.lexicon.contains(&t.lower))
            .cloned()
            .collect()
    }

    fn entities(&self, text: &str) -> Vec<EntityPhrase> {
        let tokens = tokenize(text);
        let sentence_initial: HashSet<usize> = split_sentences(text)
            .iter()
            .filter_map(|s| s.tokens.first().map(|t| t.position))
            .collect();

        let mut runs: Vec<Vec<&Token>> = Vec::new();
        let mut current: Vec<&Token> = Vec::new();
        for tok in &tokens {
            let joins = current.last().is_some_and(|prev| {
                let gap = &text[prev.end()..tok.position];
                !gap.is_empty() && gap.chars().all(char::is_whitespace) && !sentence_initial.contains(&tok.position)
            });
            if tok.is_capitalized && (current.is_empty() || joins) {
                current.push(tok);
            } else {
                if !current.is_empty() {
                    runs.push(std::mem::take(&mut current));
                }
                if tok.is_capitalized {
                    current.push(tok);
                }
            }
        }
        if !current.is_empty() {
            runs.push(current);
        }

        let capitalized_elsewhere = |t: &Token| {
            tokens
                .iter()
                .any(|o| o.position != t.position && o.is_capitalized && o.surface == t.surface)
        };

        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for mut run in runs {
            if sentence_initial.contains(&run[0].position) {
                if self.lexicon.contains(&run[0].lower) {
                    run.remove(0);
                } else if run.len() == 1 && !capitalized_elsewhere(run[0]) {
                    continue;
                }
            }
            let (Some(first), Some(last)) = (run.first(), run.last()) else {
                continue;
            };
            let key = run.iter().map(|t| t.lower.as_str()).collect::<Vec<_>>().join(" ");
            if !seen.insert(key) {
                continue;
            }
            out.push(EntityPhrase {
                text: text[first.position..last.end()].to_string(),
                tokens: run.into_iter().cloned().collect(),
            });
        }
        out
    }
}

fn default_annotator() -> &'static HeuristicAnnotator {
    static ANNOTATOR: OnceLock<HeuristicAnnotator> = OnceLock::new();
    ANNOTATOR.get_or_init(HeuristicAnnotator::default)
}

/// [`Annotator::content_tokens`] with the bundled lexicon.
pub fn content_tokens(tokens: &[Token]) -> Vec<Token> {
    default_annotator().content_tokens(tokens)
}

/// [`Annotator::entities`] with the bundled lexicon.
pub fn extract_entities(text: &str) -> Vec<EntityPhrase> {
    default_annotator().entities(text)
}

/// Set of space-joined lowercase word n-grams. Texts shorter than `n`
/// tokens fall back to their unigram set.
pub fn word_ngrams(tokens: &[Token], n: usize) -> Result<BTreeSet<String>> {
    if n == 0 {
        return Err(Error::invalid("n-gram order must be at least 1"));
    }
    let n = if tokens.len() < n { 1 } else { n };
    Ok(tokens
        .windows(n)
        .map(|w| w.iter().map(|t| t.lower.as_str()).collect::<Vec<_>>().join(" "))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lowers(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.lower.as_str()).collect()
    }

    fn toks(words: &[&str]) -> Vec<Token> {
        tokenize(&words.join(" "))
    }

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn tokenize_keeps_apostrophe_and_records_case() {
        let t = tokenize("Australia's election");
        assert_eq!(lowers(&t), ["australia's", "election"]);
        assert_eq!(t.iter().map(|t| t.is_capitalized).collect::<Vec<_>>(), [true, false]);
        assert_eq!(t[1].position, 12);
    }

    #[test]
    fn tokenize_keeps_inner_hyphens_only() {
        assert_eq!(lowers(&tokenize("state-of-the-art!")), ["state-of-the-art"]);
        assert_eq!(lowers(&tokenize("-dash- 'quoted' it's")), ["dash", "quoted", "it's"]);
    }

    #[test]
    fn tokenize_unicode_case() {
        let t = tokenize("Ärger über ÉCOLE");
        assert_eq!(lowers(&t), ["ärger", "über", "école"]);
        assert!(t[0].is_capitalized && !t[1].is_capitalized && t[2].is_capitalized);
    }

    #[test]
    fn sentences_basic() {
        let s = split_sentences("A b. C d.");
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].text, "A b.");
        assert_eq!(s[1].text, "C d.");
        assert_eq!(s[1].char_span, (5, 9));
    }

    #[test]
    fn sentences_no_terminator() {
        assert_eq!(split_sentences("no terminator here").len(), 1);
        assert!(split_sentences("   ").is_empty());
    }

    #[test]
    fn sentences_lowercase_after_period() {
        assert_eq!(split_sentences("e.g. lower next").len(), 1);
        assert_eq!(split_sentences("It costs 3.5 dollars. Really?").len(), 2);
    }

    #[test]
    fn sentences_quotes_and_titles() {
        let s = split_sentences("He said \"no.\" Then Mr. Smith left! Fine");
        let texts: Vec<_> = s.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(texts, ["He said \"no.\"", "Then Mr. Smith left!", "Fine"]);
    }

    #[test]
    fn content_tokens_filters_closed_class() {
        assert_eq!(lowers(&content_tokens(&toks(&["the", "clock", "was", "confiscated"]))), ["clock", "confiscated"]);
        assert!(content_tokens(&[]).is_empty());
        assert!(content_tokens(&toks(&["of", "the", "and"])).is_empty());
    }

    #[test]
    fn lexicon_size_and_comments() {
        let lex = Lexicon::bundled();
        assert!((250..=350).contains(&lex.len()), "{}", lex.len());
        let custom = Lexicon::parse("# c\nfoo\n  Bar # trailing\n\n");
        assert!(custom.contains("foo") && custom.contains("bar") && custom.len() == 2);
    }

    fn entity_texts(text: &str) -> Vec<String> {
        extract_entities(text).into_iter().map(|e| e.text).collect()
    }

    #[test]
    fn entities_basic() {
        assert_eq!(entity_texts("He visited Ahmed Mohamed in Irving"), ["Ahmed Mohamed", "Irving"]);
        assert!(entity_texts("nothing capitalized here").is_empty());
    }

    #[test]
    fn entities_sentence_initial_repeated() {
        assert_eq!(entity_texts("Chipotle is closing. Chipotle said so."), ["Chipotle"]);
        assert!(entity_texts("Yesterday it rained.").is_empty());
    }

    #[test]
    fn entities_break_on_punctuation_and_drop_leading_function_word() {
        assert_eq!(entity_texts("The White House denied it, said Irving, Texas police"), ["White House", "Irving", "Texas"]);
    }

    #[test]
    fn ngrams() {
        let set = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        assert_eq!(word_ngrams(&toks(&["a", "b", "c", "d"]), 3).unwrap(), set(&["a b c", "b c d"]));
        assert_eq!(word_ngrams(&toks(&["a"]), 3).unwrap(), set(&["a"]));
        assert_eq!(word_ngrams(&toks(&["a", "a", "b"]), 2).unwrap(), set(&["a a", "a b"]));
        assert!(matches!(word_ngrams(&toks(&["a"]), 0), Err(Error::InvalidArgument(_))));
    }

    proptest! {
        #[test]
        fn tokenize_idempotent(text in "\\PC{0,80}") {
            let first = tokenize(&text);
            let joined = first.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" ");
            let second = tokenize(&joined);
            prop_assert_eq!(
                first.iter().map(|t| &t.surface).collect::<Vec<_>>(),
                second.iter().map(|t| &t.surface).collect::<Vec<_>>()
            );
            for t in &first {
                prop_assert!(!t.surface.is_empty());
                prop_assert_eq!(&t.lower, &t.surface.to_lowercase());
                prop_assert_eq!(&text[t.position..t.end()], t.surface.as_str());
            }
        }

        #[test]
        fn content_tokens_is_subsequence(text in "[a-zA-Z ,.]{0,80}") {
            let all = tokenize(&text);
            let kept = content_tokens(&all);
            let mut it = all.iter();
            for k in &kept {
                prop_assert!(it.any(|t| t == k));
            }
        }

        #[test]
        fn entities_occur_verbatim(text in "([A-Z][a-z]{0,5}|[a-z]{1,5}|[.,!?]) {0,1}([A-Z][a-z]{0,5} |[a-z]{1,5} |[.,!?] ){0,15}") {
            for e in extract_entities(&text) {
                prop_assert!(text.contains(&e.text));
                prop_assert!(!e.tokens.is_empty());
                prop_assert!(e.tokens.iter().all(|t| t.is_capitalized));
            }
        }

        #[test]
        fn sentence_spans_cover_text(text in "([A-Za-z]{1,4}[.!?]? ){0,12}") {
            let sents = split_sentences(&text);
            let mut last_end = 0;
            for s in &sents {
                prop_assert!(s.char_span.0 >= last_end);
                prop_assert_eq!(&text[s.char_span.0..s.char_span.1], s.text.as_str());
                last_end = s.char_span.1;
            }
            let covered: String = sents.iter().map(|s| s.text.as_str()).collect::<String>();
            let strip = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
            prop_assert_eq!(strip(&covered), strip(&text));
        }

        #[test]
        fn ngram_count_bound(words in proptest::collection::vec("[a-c]", 0..12), n in 1usize..5) {
            let t = toks(&words.iter().map(String::as_str).collect::<Vec<_>>());
            let grams = word_ngrams(&t, n).unwrap();
            if t.len() >= n {
                prop_assert!(grams.len() <= 1usize.max(t.len() - n + 1));
            } else {
                // unigram fallback
                prop_assert!(grams.len() <= t.len());
            }
        }
    }
}
