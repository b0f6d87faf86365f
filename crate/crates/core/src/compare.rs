//! Comparing a generated reel against external highlight summaries.
//!
//! A reference clip intersects a text partition when every normalized token
//! of its description appears in the partition text, and intersects a video
//! clip when their closed captions share at least a threshold of seconds.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::metadata::CaptionCue;

/// Seconds of shared captions needed for two video clips to intersect.
pub const CAPTION_OVERLAP_THRESHOLD: f64 = 10.0;

const STOPWORDS: &str = include_str!("../data/stopwords-en-v1.txt");

#[derive(Debug, Error, PartialEq)]
pub enum CompareError {
    #[error("source `{0}` does not declare a comparison method")]
    MethodMissing(String),
    #[error("unknown source `{0}`")]
    UnknownSource(String),
    #[error("matrix TSV line {line}: {reason}")]
    BadMatrix { line: usize, reason: String },
}

fn stopwords() -> &'static BTreeSet<&'static str> {
    static SET: OnceLock<BTreeSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

pub fn is_stopword(word: &str) -> bool {
    stopwords().contains(word)
}

fn strip_once(word: &str) -> Option<String> {
    if let Some(stem) = word.strip_suffix("ies") {
        return Some(format!("{stem}y"));
    }
    if let Some(stem) = word.strip_suffix("sses") {
        return Some(format!("{stem}ss"));
    }
    for suffix in ["ing", "ed"] {
        if let Some(stem) = word.strip_suffix(suffix) {
            if stem.chars().count() >= 3 {
                // English words rarely end in u or v: argu-ing, giv-en
                return Some(if stem.ends_with('u') || stem.ends_with('v') {
                    format!("{stem}e")
                } else {
                    stem.to_string()
                });
            }
        }
    }
    if word.ends_with('s') && !word.ends_with("ss") && word.len() > 1 {
        return Some(word[..word.len() - 1].to_string());
    }
    None
}

/// Applies the suffix rules until none fires. Every rule shortens the word,
/// so this terminates, and the result is a fixpoint.
pub fn stem(word: &str) -> String {
    let mut w = word.to_string();
    while let Some(next) = strip_once(&w) {
        if next == w {
            break;
        }
        w = next;
    }
    w
}

/// Lowercases, splits on non-alphanumerics, drops stop words and stems.
/// Returns tokens in text order, duplicates kept.
pub fn tokenize_lemmatize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty() && !is_stopword(w))
        .map(stem)
        .filter(|w| !w.is_empty() && !is_stopword(w))
        .collect()
}

pub fn token_set(text: &str) -> BTreeSet<String> {
    tokenize_lemmatize(text).into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipAnnotation {
    pub key: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub interval: Option<(f64, f64)>,
    #[serde(default)]
    pub captions: Option<Vec<CaptionCue>>,
}

/// True iff every token of the clip description occurs in `partition_text`.
/// An empty description is vacuously contained.
pub fn text_intersect(clip: &ClipAnnotation, partition_text: &str) -> bool {
    let needed = token_set(&clip.description);
    if needed.is_empty() {
        return true;
    }
    let have = token_set(partition_text);
    needed.is_subset(&have)
}

/// Seconds of shared captions. Cues are matched in order by normalized text,
/// each cue at most once; a matched pair contributes the shorter duration.
pub fn caption_overlap_seconds(a: &[CaptionCue], b: &[CaptionCue]) -> f64 {
    let mut pending: HashMap<Vec<String>, Vec<usize>> = HashMap::new();
    for (j, cue) in b.iter().enumerate().rev() {
        let toks = tokenize_lemmatize(&cue.text);
        if !toks.is_empty() {
            pending.entry(toks).or_default().push(j);
        }
    }
    let mut total = 0.0;
    for cue in a {
        let toks = tokenize_lemmatize(&cue.text);
        if let Some(j) = pending.get_mut(&toks).and_then(Vec::pop) {
            total += cue.duration().min(b[j].duration());
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompareMethod {
    Text,
    Caption,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub id: String,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub captions: Option<Vec<CaptionCue>>,
}

/// One external summary split into partitions:
/// `{"source":"nymag","method":"text","partitions":[{"id":"p1","text":"..."}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceCorpus {
    pub source: String,
    #[serde(default)]
    pub method: Option<CompareMethod>,
    #[serde(default)]
    pub partitions: Vec<Partition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonMatrix {
    pub keys: Vec<String>,
    pub sources: Vec<String>,
    /// `present[row][col]` for key `row` and source `col`.
    pub present: Vec<Vec<bool>>,
}

impl ComparisonMatrix {
    pub fn new(keys: Vec<String>, sources: Vec<String>, present: Vec<Vec<bool>>) -> Result<Self, CompareError> {
        if present.len() != keys.len() || present.iter().any(|r| r.len() != sources.len()) {
            return Err(CompareError::BadMatrix {
                line: 0,
                reason: "grid dimensions do not match keys x sources".into(),
            });
        }
        Ok(Self { keys, sources, present })
    }

    pub fn source_index(&self, source: &str) -> Result<usize, CompareError> {
        self.sources
            .iter()
            .position(|s| s == source)
            .ok_or_else(|| CompareError::UnknownSource(source.into()))
    }

    pub fn column(&self, source: &str) -> Result<Vec<bool>, CompareError> {
        let c = self.source_index(source)?;
        Ok(self.present.iter().map(|row| row[c]).collect())
    }

    /// Parses `key<TAB>source1<TAB>...` with `Y` or empty cells.
    pub fn from_tsv(text: &str) -> Result<Self, CompareError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let Some((_, header)) = lines.next() else {
            return Err(CompareError::BadMatrix {
                line: 1,
                reason: "missing header".into(),
            });
        };
        let mut cols = header.split('\t');
        if cols.next().map(str::trim) != Some("key") {
            return Err(CompareError::BadMatrix {
                line: 1,
                reason: "header must start with `key`".into(),
            });
        }
        let sources: Vec<String> = cols.map(|s| s.trim().to_string()).collect();
        let mut keys = Vec::new();
        let mut present = Vec::new();
        for (idx, line) in lines {
            let mut cells = line.split('\t');
            let key = cells.next().unwrap_or_default().trim().to_string();
            let mut row = vec![false; sources.len()];
            for (c, cell) in cells.enumerate() {
                let cell = cell.trim();
                let value = match cell {
                    "Y" | "y" => true,
                    "" | "N" | "n" => false,
                    other => {
                        return Err(CompareError::BadMatrix {
                            line: idx + 1,
                            reason: format!("unexpected cell `{other}`"),
                        })
                    }
                };
                if c >= sources.len() {
                    if value {
                        return Err(CompareError::BadMatrix {
                            line: idx + 1,
                            reason: "more cells than sources".into(),
                        });
                    }
                    continue;
                }
                row[c] = value;
            }
            keys.push(key);
            present.push(row);
        }
        Self::new(keys, sources, present)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("key");
        for s in &self.sources {
            out.push('\t');
            out.push_str(s);
        }
        out.push('\n');
        for (key, row) in self.keys.iter().zip(&self.present) {
            out.push_str(key);
            for &p in row {
                out.push('\t');
                if p {
                    out.push('Y');
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixBuild {
    pub matrix: ComparisonMatrix,
    /// Reference clips whose description has no tokens; their text cells are vacuous.
    pub vacuous_keys: Vec<String>,
}

/// Marks, for each reference clip and source, whether any partition of the
/// source intersects the clip.
pub fn build_matrix(reference: &[ClipAnnotation], sources: &[SourceCorpus]) -> Result<MatrixBuild, CompareError> {
    let methods: Vec<CompareMethod> = sources
        .iter()
        .map(|s| s.method.ok_or_else(|| CompareError::MethodMissing(s.source.clone())))
        .collect::<Result<_, _>>()?;
    let mut vacuous_keys = Vec::new();
    let present = reference
        .iter()
        .map(|clip| {
            if token_set(&clip.description).is_empty() && methods.contains(&CompareMethod::Text) {
                vacuous_keys.push(clip.key.clone());
            }
            sources
                .iter()
                .zip(&methods)
                .map(|(src, method)| {
                    src.partitions.iter().any(|p| match method {
                        CompareMethod::Text => p.text.as_deref().is_some_and(|t| text_intersect(clip, t)),
                        CompareMethod::Caption => match (&clip.captions, &p.captions) {
                            (Some(a), Some(b)) => caption_overlap_seconds(a, b) >= CAPTION_OVERLAP_THRESHOLD,
                            _ => false,
                        },
                    })
                })
                .collect()
        })
        .collect();
    let matrix = ComparisonMatrix::new(
        reference.iter().map(|c| c.key.clone()).collect(),
        sources.iter().map(|s| s.source.clone()).collect(),
        present,
    )?;
    Ok(MatrixBuild { matrix, vacuous_keys })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementStats {
    pub reference: String,
    pub ref_count: usize,
    pub covered_count: usize,
    /// Percentage of reference clips found in another source, one decimal.
    pub coverage_pct: f64,
    /// Keys selected by both the reference and each other source.
    pub pairwise: BTreeMap<String, usize>,
    /// Keys selected elsewhere but not by the reference.
    pub missed_keys: Vec<String>,
}

pub fn agreement_stats(matrix: &ComparisonMatrix, reference: &str) -> Result<AgreementStats, CompareError> {
    let r = matrix.source_index(reference)?;
    let others: Vec<usize> = (0..matrix.sources.len()).filter(|&c| c != r).collect();
    let mut ref_count = 0;
    let mut covered_count = 0;
    let mut pairwise: BTreeMap<String, usize> = others.iter().map(|&c| (matrix.sources[c].clone(), 0)).collect();
    let mut missed_keys = Vec::new();
    for (key, row) in matrix.keys.iter().zip(&matrix.present) {
        let elsewhere = others.iter().any(|&c| row[c]);
        if row[r] {
            ref_count += 1;
            if elsewhere {
                covered_count += 1;
            }
            for &c in &others {
                if row[c] {
                    *pairwise.get_mut(&matrix.sources[c]).expect("source present") += 1;
                }
            }
        } else if elsewhere {
            missed_keys.push(key.clone());
        }
    }
    let coverage_pct = if ref_count == 0 {
        0.0
    } else {
        (1000.0 * covered_count as f64 / ref_count as f64).round() / 10.0
    };
    Ok(AgreementStats {
        reference: reference.into(),
        ref_count,
        covered_count,
        coverage_pct,
        pairwise,
        missed_keys,
    })
}
