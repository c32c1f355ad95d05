//! Statement scoring: sentence splitting, lexicon-driven hawk/dove
//! classification, document tone, forward-guidance and uncertainty features.
//!
//! Matching is case-insensitive and works on whole words: a phrase matches
//! when its word sequence appears contiguously in the sentence's word
//! sequence. Words are maximal runs of alphanumeric characters, so
//! `"de-anchoring"` and `"de anchoring"` are the same phrase.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::StatementDoc;

/// Lexicon bundled with the crate.
pub const DEFAULT_LEXICON_CSV: &str = include_str!("../data/lexicon_default.csv");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LexiconError {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        message: String,
    },
    #[error("{source_name}:{line}: unknown class `{class}`")]
    UnknownClass {
        source_name: String,
        line: u64,
        class: String,
    },
    #[error("{source_name}:{line}: term has no words")]
    EmptyTerm { source_name: String, line: u64 },
    #[error("term `{term}` appears in both `{first}` and `{second}`")]
    Overlap {
        term: String,
        first: &'static str,
        second: &'static str,
    },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// A set of phrases, each stored both verbatim and as its lowercase word sequence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhraseSet {
    terms: Vec<String>,
    tokens: Vec<Vec<String>>,
}

impl PhraseSet {
    pub fn new<I, S>(terms: I) -> Result<Self, String>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = Self::default();
        for t in terms {
            set.insert(t.into())?;
        }
        Ok(set)
    }

    fn insert(&mut self, term: String) -> Result<(), String> {
        let tokens = words(&term);
        if tokens.is_empty() {
            return Err(format!("term `{term}` has no words"));
        }
        if !self.tokens.contains(&tokens) {
            self.terms.push(tokens.join(" "));
            self.tokens.push(tokens);
        }
        Ok(())
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total number of phrase occurrences in `sentence_words`.
    pub fn count_hits(&self, sentence_words: &[String]) -> usize {
        self.tokens
            .iter()
            .map(|p| {
                if p.len() > sentence_words.len() {
                    0
                } else {
                    sentence_words.windows(p.len()).filter(|w| *w == p.as_slice()).count()
                }
            })
            .sum()
    }

    pub fn any_hit(&self, sentence_words: &[String]) -> bool {
        self.tokens
            .iter()
            .any(|p| p.len() <= sentence_words.len() && sentence_words.windows(p.len()).any(|w| w == p.as_slice()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TermClass {
    Hawk,
    Dove,
    Neutral,
    Scope,
    Uncertainty,
    GuidanceTighten,
    GuidanceEase,
    GuidanceExplicit,
}

impl TermClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TermClass::Hawk => "hawk",
            TermClass::Dove => "dove",
            TermClass::Neutral => "neutral",
            TermClass::Scope => "scope",
            TermClass::Uncertainty => "uncertainty",
            TermClass::GuidanceTighten => "guidance_tighten",
            TermClass::GuidanceEase => "guidance_ease",
            TermClass::GuidanceExplicit => "guidance_explicit",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "hawk" => TermClass::Hawk,
            "dove" => TermClass::Dove,
            "neutral" => TermClass::Neutral,
            "scope" => TermClass::Scope,
            "uncertainty" => TermClass::Uncertainty,
            "guidance_tighten" => TermClass::GuidanceTighten,
            "guidance_ease" => TermClass::GuidanceEase,
            "guidance_explicit" => TermClass::GuidanceExplicit,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    pub hawk_terms: PhraseSet,
    pub dove_terms: PhraseSet,
    pub neutral_markers: PhraseSet,
    pub scope_markers: PhraseSet,
    pub uncertainty_terms: PhraseSet,
    pub guidance_tighten: PhraseSet,
    pub guidance_ease: PhraseSet,
    pub guidance_explicit: PhraseSet,
}

impl Lexicon {
    pub fn builtin() -> Self {
        Self::read(DEFAULT_LEXICON_CSV.as_bytes(), "lexicon_default.csv").expect("bundled lexicon is valid")
    }

    fn set_mut(&mut self, class: TermClass) -> &mut PhraseSet {
        match class {
            TermClass::Hawk => &mut self.hawk_terms,
            TermClass::Dove => &mut self.dove_terms,
            TermClass::Neutral => &mut self.neutral_markers,
            TermClass::Scope => &mut self.scope_markers,
            TermClass::Uncertainty => &mut self.uncertainty_terms,
            TermClass::GuidanceTighten => &mut self.guidance_tighten,
            TermClass::GuidanceEase => &mut self.guidance_ease,
            TermClass::GuidanceExplicit => &mut self.guidance_explicit,
        }
    }

    /// Checks that the four sentence-class sets are pairwise disjoint.
    pub fn validate(&self) -> Result<(), LexiconError> {
        let classes = [
            (TermClass::Hawk, &self.hawk_terms),
            (TermClass::Dove, &self.dove_terms),
            (TermClass::Neutral, &self.neutral_markers),
            (TermClass::Scope, &self.scope_markers),
        ];
        let mut seen: HashMap<&str, TermClass> = HashMap::new();
        for (class, set) in classes {
            for term in set.terms() {
                if let Some(prev) = seen.insert(term.as_str(), class) {
                    if prev != class {
                        return Err(LexiconError::Overlap {
                            term: term.clone(),
                            first: prev.as_str(),
                            second: class.as_str(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Reads a `term,class` CSV.
    pub fn read<R: Read>(reader: R, source_name: &str) -> Result<Self, LexiconError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let parse = |line: u64, message: String| LexiconError::Parse {
            source_name: source_name.to_string(),
            line,
            message,
        };
        let header = rdr.headers().map_err(|e| parse(1, e.to_string()))?.clone();
        if header.iter().collect::<Vec<_>>() != ["term", "class"] {
            return Err(parse(1, "expected header `term,class`".into()));
        }
        let mut lex = Lexicon::default();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| parse(e.position().map(|p| p.line()).unwrap_or(0), e.to_string()))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let term = rec.get(0).unwrap_or("");
            let class_name = rec.get(1).unwrap_or("");
            let class = TermClass::parse(class_name).ok_or_else(|| LexiconError::UnknownClass {
                source_name: source_name.to_string(),
                line,
                class: class_name.to_string(),
            })?;
            lex.set_mut(class)
                .insert(term.to_string())
                .map_err(|_| LexiconError::EmptyTerm {
                    source_name: source_name.to_string(),
                    line,
                })?;
        }
        lex.validate()?;
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let file = std::fs::File::open(path).map_err(|e| LexiconError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::read(file, &path.display().to_string())
    }

    /// Relabels hawkish as dovish and vice versa, including the signed guidance phrases.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        std::mem::swap(&mut out.hawk_terms, &mut out.dove_terms);
        std::mem::swap(&mut out.guidance_tighten, &mut out.guidance_ease);
        out
    }
}

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "sra", "jr", "st", "vs", "etc", "fig", "approx", "inc", "ltd", "corp",
    "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "pp", "art", "aprox",
];

fn is_closer(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '"' | '\'' | ')' | ']' | '”' | '’' | '»')
}

fn is_abbreviation(word: &str) -> bool {
    let word = word.trim_start_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
    if word.is_empty() {
        return false;
    }
    // initialisms such as "u.s." or "e.g." keep their inner dots
    if word.contains('.') {
        return true;
    }
    let mut chars = word.chars();
    let single_letter = matches!((chars.next(), chars.next()), (Some(c), None) if c.is_alphabetic());
    single_letter || ABBREVIATIONS.contains(&word.as_str())
}

/// Splits text into trimmed sentences on `.`, `!` and `?`.
///
/// A terminator only closes a sentence when followed by whitespace or the end
/// of text, so decimal points never split. A lone `.` after a single letter,
/// an initialism or a known abbreviation does not split either.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if !matches!(c, '.' | '!' | '?') {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() && is_closer(chars[j].1) {
            j += 1;
        }
        let end = chars.get(j).map(|&(p, _)| p).unwrap_or(text.len());
        let at_break = j == chars.len() || chars[j].1.is_whitespace();
        let single_period = c == '.' && j == i + 1;
        let guarded = single_period && {
            let word_start = text[..pos]
                .rfind(char::is_whitespace)
                .map(|p| p + text[p..].chars().next().map_or(1, char::len_utf8))
                .unwrap_or(0);
            let word_start = word_start.max(start);
            is_abbreviation(&text[word_start..pos])
        };
        if at_break && !guarded {
            let sentence = text[start..end].trim();
            if !sentence.is_empty() {
                out.push(sentence);
            }
            start = end;
        }
        i = j;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentenceLabel {
    Hawk,
    Dove,
    Neutral,
    OutOfScope,
}

impl SentenceLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SentenceLabel::Hawk => "hawk",
            SentenceLabel::Dove => "dove",
            SentenceLabel::Neutral => "neutral",
            SentenceLabel::OutOfScope => "out_of_scope",
        }
    }

    pub fn in_scope(self) -> bool {
        self != SentenceLabel::OutOfScope
    }
}

fn classify_words(w: &[String], lex: &Lexicon) -> SentenceLabel {
    if !lex.scope_markers.any_hit(w) {
        return SentenceLabel::OutOfScope;
    }
    let hawk = lex.hawk_terms.count_hits(w);
    let dove = lex.dove_terms.count_hits(w);
    match hawk.cmp(&dove) {
        std::cmp::Ordering::Greater => SentenceLabel::Hawk,
        std::cmp::Ordering::Less => SentenceLabel::Dove,
        std::cmp::Ordering::Equal => SentenceLabel::Neutral,
    }
}

pub fn classify_sentence(sentence: &str, lex: &Lexicon) -> SentenceLabel {
    classify_words(&words(sentence), lex)
}

/// Which sentences count in the tone denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToneDenominator {
    /// hawk + dove + neutral
    #[default]
    InScope,
    /// hawk + dove only
    Polar,
}

pub fn aggregate_tone(labels: &[SentenceLabel], denominator: ToneDenominator) -> f64 {
    let count = |l: SentenceLabel| labels.iter().filter(|x| **x == l).count();
    let (hawk, dove, neutral) = (
        count(SentenceLabel::Hawk),
        count(SentenceLabel::Dove),
        count(SentenceLabel::Neutral),
    );
    let denom = match denominator {
        ToneDenominator::InScope => hawk + dove + neutral,
        ToneDenominator::Polar => hawk + dove,
    };
    if denom == 0 {
        0.0
    } else {
        (hawk as f64 - dove as f64) / denom as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Guidance {
    pub direction: i8,
    pub explicitness: f64,
}

fn guidance_from_sentences(sentences: &[Vec<String>], lex: &Lexicon) -> Guidance {
    let mut forward = 0usize;
    let mut explicit = 0usize;
    let mut net: i64 = 0;
    for w in sentences {
        let tighten = lex.guidance_tighten.count_hits(w);
        let ease = lex.guidance_ease.count_hits(w);
        let is_explicit = lex.guidance_explicit.any_hit(w);
        if tighten + ease == 0 && !is_explicit {
            continue;
        }
        forward += 1;
        explicit += usize::from(is_explicit);
        net += tighten as i64 - ease as i64;
    }
    if forward == 0 {
        return Guidance {
            direction: 0,
            explicitness: 0.0,
        };
    }
    Guidance {
        direction: net.signum() as i8,
        explicitness: (explicit as f64 / forward as f64).clamp(0.0, 1.0),
    }
}

/// Forward-looking sentences are those containing any guidance phrase
/// (tightening, easing or explicit commitment).
pub fn extract_guidance(text: &str, lex: &Lexicon) -> Guidance {
    let sentences: Vec<Vec<String>> = split_sentences(text).into_iter().map(words).collect();
    guidance_from_sentences(&sentences, lex)
}

fn uncertainty_level_of(sentences: &[Vec<String>], labels: &[SentenceLabel], lex: &Lexicon) -> f64 {
    let mut in_scope = 0usize;
    let mut hits = 0usize;
    for (w, l) in sentences.iter().zip(labels) {
        if l.in_scope() {
            in_scope += 1;
            hits += lex.uncertainty_terms.count_hits(w);
        }
    }
    if in_scope == 0 {
        return 0.0;
    }
    let rate = hits as f64 / in_scope as f64;
    rate / (1.0 + rate)
}

/// Uncertainty level of `text` in `[0, 1)`.
pub fn uncertainty_level(text: &str, lex: &Lexicon) -> f64 {
    let sentences: Vec<Vec<String>> = split_sentences(text).into_iter().map(words).collect();
    let labels: Vec<SentenceLabel> = sentences.iter().map(|w| classify_words(w, lex)).collect();
    uncertainty_level_of(&sentences, &labels, lex)
}

/// `(level, change)`; change is zero without a previous statement.
pub fn extract_uncertainty(text: &str, prev_text: Option<&str>, lex: &Lexicon) -> (f64, f64) {
    let level = uncertainty_level(text, lex);
    let change = prev_text.map_or(0.0, |p| level - uncertainty_level(p, lex));
    (level, change)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatementFeatures {
    pub tone: f64,
    pub guidance_direction: i8,
    pub guidance_explicitness: f64,
    pub guidance_score: f64,
    pub uncertainty_level: f64,
    pub uncertainty_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledSentence {
    pub text: String,
    pub label: SentenceLabel,
    pub hawk_hits: usize,
    pub dove_hits: usize,
    pub uncertainty_hits: usize,
}

/// Sentence-level breakdown plus the document features.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatementAnalysis {
    pub sentences: Vec<LabeledSentence>,
    pub features: StatementFeatures,
}

pub fn analyze_text(text: &str, prev_text: Option<&str>, lex: &Lexicon, denominator: ToneDenominator) -> StatementAnalysis {
    let raw = split_sentences(text);
    let tokens: Vec<Vec<String>> = raw.iter().map(|s| words(s)).collect();
    let labels: Vec<SentenceLabel> = tokens.iter().map(|w| classify_words(w, lex)).collect();

    let tone = aggregate_tone(&labels, denominator);
    let guidance = guidance_from_sentences(&tokens, lex);
    let level = uncertainty_level_of(&tokens, &labels, lex);
    let change = prev_text.map_or(0.0, |p| level - uncertainty_level(p, lex));

    let sentences = raw
        .iter()
        .zip(&tokens)
        .zip(&labels)
        .map(|((s, w), l)| LabeledSentence {
            text: s.to_string(),
            label: *l,
            hawk_hits: lex.hawk_terms.count_hits(w),
            dove_hits: lex.dove_terms.count_hits(w),
            uncertainty_hits: lex.uncertainty_terms.count_hits(w),
        })
        .collect();

    StatementAnalysis {
        sentences,
        features: StatementFeatures {
            tone,
            guidance_direction: guidance.direction,
            guidance_explicitness: guidance.explicitness,
            guidance_score: f64::from(guidance.direction) * guidance.explicitness,
            uncertainty_level: level,
            uncertainty_change: change,
        },
    }
}

pub fn score_statement(
    doc: &StatementDoc,
    prev_doc: Option<&StatementDoc>,
    lex: &Lexicon,
    denominator: ToneDenominator,
) -> StatementFeatures {
    analyze_text(&doc.text, prev_doc.map(|p| p.text.as_str()), lex, denominator).features
}

/// Scores a date-ordered corpus, each statement against its predecessor.
pub fn score_corpus(
    docs: &[StatementDoc],
    lex: &Lexicon,
    denominator: ToneDenominator,
) -> Vec<(chrono::NaiveDate, StatementFeatures)> {
    docs.iter()
        .enumerate()
        .map(|(i, doc)| {
            let prev = i.checked_sub(1).map(|j| &docs[j]);
            (doc.statement_date, score_statement(doc, prev, lex, denominator))
        })
        .collect()
}
