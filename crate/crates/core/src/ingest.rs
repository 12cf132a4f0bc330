//! Parsers for relevance judgments, runs and corpora, plus relevance derived
//! from class labels.
//!
//! Formats (whitespace-separated, one record per line):
//!
//! - qrels: `qid iter docid grade`
//! - run: `qid Q0 docid rank score tag`
//! - corpus: JSON lines `{"id": .., "text": .., "label": ..}` (label optional),
//!   or tab-separated `id<TAB>label<TAB>text`
//! - queries: `qid<TAB>text`
//!
//! Input bytes are decoded as UTF-8 with lossy replacement; every line that
//! needed replacement adds a warning.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{BorError, Result};

/// A parsed value together with the non-fatal issues found on the way.
#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

fn read_lossy(mut reader: impl Read, warnings: &mut Vec<String>) -> Result<String> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    match String::from_utf8(bytes) {
        Ok(s) => Ok(s),
        Err(e) => {
            let bytes = e.into_bytes();
            for (i, line) in bytes.split(|&b| b == b'\n').enumerate() {
                if std::str::from_utf8(line).is_err() {
                    warnings.push(format!("line {}: invalid UTF-8 replaced", i + 1));
                }
            }
            Ok(String::from_utf8_lossy(&bytes).into_owned())
        }
    }
}

/// Graded judgments per query, with an inclusive relevance threshold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgments {
    pub entries: BTreeMap<String, BTreeMap<String, i32>>,
    pub relevance_threshold: i32,
}

impl Judgments {
    pub fn new(relevance_threshold: i32) -> Self {
        Self {
            entries: BTreeMap::new(),
            relevance_threshold,
        }
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Documents with grade ≥ threshold.
    pub fn relevant_set(&self, query_id: &str) -> BTreeSet<&str> {
        self.entries
            .get(query_id)
            .map(|docs| {
                docs.iter()
                    .filter(|(_, &g)| g >= self.relevance_threshold)
                    .map(|(d, _)| d.as_str())
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn relevant_count(&self, query_id: &str) -> usize {
        self.entries.get(query_id).map_or(0, |docs| {
            docs.values().filter(|&&g| g >= self.relevance_threshold).count()
        })
    }

    /// Writes `qid 0 docid grade` lines in sorted order.
    pub fn write_qrels(&self, mut out: impl Write) -> std::io::Result<()> {
        for (q, docs) in &self.entries {
            for (d, g) in docs {
                writeln!(out, "{q} 0 {d} {g}")?;
            }
        }
        Ok(())
    }
}

pub fn parse_qrels(reader: impl Read, threshold: i32) -> Result<Parsed<Judgments>> {
    let mut warnings = Vec::new();
    let text = read_lossy(reader, &mut warnings)?;
    let mut judgments = Judgments::new(threshold);
    let mut duplicates = 0usize;
    let mut records = 0usize;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 4 {
            return Err(BorError::parse(
                lineno,
                format!("expected 4 fields `qid iter docid grade`, found {}", fields.len()),
            ));
        }
        let grade: i32 = fields[3]
            .parse()
            .map_err(|_| BorError::parse(lineno, format!("grade {:?} is not an integer", fields[3])))?;
        records += 1;
        let docs = judgments.entries.entry(fields[0].to_string()).or_default();
        match docs.get_mut(fields[2]) {
            Some(existing) => {
                duplicates += 1;
                *existing = (*existing).max(grade);
            }
            None => {
                docs.insert(fields[2].to_string(), grade);
            }
        }
    }
    if records == 0 {
        return Err(BorError::Empty("qrels stream has no judgments".into()));
    }
    if duplicates > 0 {
        warnings.push(format!(
            "{duplicates} duplicate (query, doc) judgment(s); kept the maximum grade"
        ));
    }
    Ok(Parsed {
        value: judgments,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

/// Per-query rankings, sorted by score descending with doc-id ascending on ties.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Run {
    pub rankings: BTreeMap<String, Vec<ScoredDoc>>,
    pub system_tag: String,
}

fn rank_order(a: &ScoredDoc, b: &ScoredDoc) -> std::cmp::Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id))
}

impl Run {
    pub fn new(system_tag: impl Into<String>) -> Self {
        Self {
            rankings: BTreeMap::new(),
            system_tag: system_tag.into(),
        }
    }

    /// Inserts a ranking for one query, sorting it into canonical order.
    /// Fails on duplicate documents.
    pub fn insert(&mut self, query_id: impl Into<String>, mut docs: Vec<ScoredDoc>) -> Result<()> {
        let query_id = query_id.into();
        let mut seen = HashSet::with_capacity(docs.len());
        for d in &docs {
            if !seen.insert(d.doc_id.as_str()) {
                return Err(BorError::Invalid(format!(
                    "document {} appears twice for query {query_id}",
                    d.doc_id
                )));
            }
        }
        docs.sort_by(rank_order);
        self.rankings.insert(query_id, docs);
        Ok(())
    }

    pub fn ranking(&self, query_id: &str) -> Option<&[ScoredDoc]> {
        self.rankings.get(query_id).map(Vec::as_slice)
    }

    /// Writes `qid Q0 docid rank score tag` lines. Scores use the shortest
    /// representation that parses back to the same f64.
    pub fn write_trec(&self, mut out: impl Write) -> std::io::Result<()> {
        let tag = if self.system_tag.is_empty() {
            "run"
        } else {
            &self.system_tag
        };
        for (q, docs) in &self.rankings {
            for (i, d) in docs.iter().enumerate() {
                writeln!(out, "{q} Q0 {} {} {} {tag}", d.doc_id, i + 1, d.score)?;
            }
        }
        Ok(())
    }
}

pub fn parse_run(reader: impl Read) -> Result<Parsed<Run>> {
    let mut warnings = Vec::new();
    let text = read_lossy(reader, &mut warnings)?;
    let mut raw: BTreeMap<String, Vec<(ScoredDoc, i64)>> = BTreeMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut tag: Option<String> = None;
    let mut mixed_tags = false;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 6 {
            return Err(BorError::parse(
                lineno,
                format!(
                    "expected 6 fields `qid Q0 docid rank score tag`, found {}",
                    fields.len()
                ),
            ));
        }
        let rank: i64 = fields[3]
            .parse()
            .map_err(|_| BorError::parse(lineno, format!("rank {:?} is not an integer", fields[3])))?;
        let score: f64 = fields[4]
            .parse()
            .ok()
            .filter(|s: &f64| !s.is_nan())
            .ok_or_else(|| BorError::parse(lineno, format!("score {:?} is not a number", fields[4])))?;
        if !seen.insert((fields[0].to_string(), fields[2].to_string())) {
            return Err(BorError::parse(
                lineno,
                format!("document {} listed twice for query {}", fields[2], fields[0]),
            ));
        }
        match &tag {
            None => tag = Some(fields[5].to_string()),
            Some(t) if t != fields[5] => mixed_tags = true,
            _ => {}
        }
        raw.entry(fields[0].to_string()).or_default().push((
            ScoredDoc {
                doc_id: fields[2].to_string(),
                score,
            },
            rank,
        ));
    }
    if mixed_tags {
        warnings.push("run mixes several system tags; using the first".into());
    }
    let mut run = Run::new(tag.unwrap_or_default());
    for (q, mut entries) in raw {
        entries.sort_by(|a, b| rank_order(&a.0, &b.0));
        let ranks_agree = entries.windows(2).all(|w| w[0].1 <= w[1].1);
        if !ranks_agree {
            warnings.push(format!(
                "query {q}: stated ranks disagree with score order; re-sorted by score"
            ));
        }
        run.rankings.insert(q, entries.into_iter().map(|(d, _)| d).collect());
    }
    Ok(Parsed { value: run, warnings })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabeledCorpus {
    pub documents: Vec<Document>,
}

impl LabeledCorpus {
    /// Validates unique ids and non-empty labels.
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let mut ids = HashSet::with_capacity(documents.len());
        for d in &documents {
            if !ids.insert(d.id.as_str()) {
                return Err(BorError::Invalid(format!("duplicate document id {}", d.id)));
            }
            if d.label.as_deref() == Some("") {
                return Err(BorError::Invalid(format!("document {} has an empty label", d.id)));
            }
        }
        Ok(Self { documents })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

pub fn parse_corpus(reader: impl Read) -> Result<Parsed<LabeledCorpus>> {
    let mut warnings = Vec::new();
    let text = read_lossy(reader, &mut warnings)?;
    let mut documents = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut doc = if line.trim_start().starts_with('{') {
            serde_json::from_str::<Document>(line)
                .map_err(|e| BorError::parse(lineno, format!("bad corpus record: {e}")))?
        } else {
            let mut parts = line.splitn(3, '\t');
            let (Some(id), Some(label), Some(text)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(BorError::parse(
                    lineno,
                    "expected JSON record or `id<TAB>label<TAB>text`",
                ));
            };
            Document {
                id: id.to_string(),
                text: text.to_string(),
                label: Some(label.to_string()),
            }
        };
        if doc.id.is_empty() {
            return Err(BorError::parse(lineno, "empty document id"));
        }
        if doc.label.as_deref().is_some_and(|l| l.trim().is_empty()) {
            warnings.push(format!("line {lineno}: empty label treated as unlabeled"));
            doc.label = None;
        }
        if !ids.insert(doc.id.clone()) {
            return Err(BorError::parse(lineno, format!("duplicate document id {}", doc.id)));
        }
        documents.push(doc);
    }
    if documents.is_empty() {
        return Err(BorError::Empty("corpus stream has no documents".into()));
    }
    Ok(Parsed {
        value: LabeledCorpus { documents },
        warnings,
    })
}

/// Parses `qid<TAB>text` lines.
pub fn parse_queries(reader: impl Read) -> Result<Parsed<Vec<(String, String)>>> {
    let mut warnings = Vec::new();
    let text = read_lossy(reader, &mut warnings)?;
    let mut queries = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((id, q)) = line.split_once('\t') else {
            return Err(BorError::parse(i + 1, "expected `qid<TAB>text`"));
        };
        if !ids.insert(id.to_string()) {
            return Err(BorError::parse(i + 1, format!("duplicate query id {id}")));
        }
        queries.push((id.to_string(), q.to_string()));
    }
    if queries.is_empty() {
        return Err(BorError::Empty("query stream has no queries".into()));
    }
    Ok(Parsed {
        value: queries,
        warnings,
    })
}

/// Subject-line query text: the `Subject:` header if the leading header block
/// has one, else the first non-empty line, with `Subject:` and `Re:` markers
/// removed.
pub fn subject_line(text: &str) -> String {
    let header = text
        .lines()
        .map(str::trim)
        .skip_while(|l| l.is_empty())
        .take_while(|l| !l.is_empty())
        .find(|l| l.to_ascii_lowercase().starts_with("subject:"));
    let first = header
        .or_else(|| text.lines().map(str::trim).find(|l| !l.is_empty()))
        .unwrap_or("");
    let mut rest = first;
    loop {
        let trimmed = rest.trim_start();
        let lower = trimmed.to_ascii_lowercase();
        if lower.starts_with("subject:") {
            rest = &trimmed["subject:".len()..];
        } else if lower.starts_with("re:") {
            rest = &trimmed["re:".len()..];
        } else {
            return trimmed.trim_end().to_string();
        }
    }
}

/// Same-class relevance with self-exclusion: a query built from document `d`
/// of class `c` is relevant to every other document of class `c`.
pub fn class_relevance(corpus: &LabeledCorpus, query_doc_ids: &[String]) -> Result<Judgments> {
    let mut by_label: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut label_of: BTreeMap<&str, &str> = BTreeMap::new();
    for d in &corpus.documents {
        if let Some(l) = &d.label {
            by_label.entry(l).or_default().push(&d.id);
            label_of.insert(&d.id, l);
        }
    }
    let mut judgments = Judgments::new(1);
    for q in query_doc_ids {
        let label = label_of.get(q.as_str()).ok_or_else(|| {
            BorError::Invalid(format!("query document {q} is missing from the corpus or has no label"))
        })?;
        let docs: BTreeMap<String, i32> = by_label[label]
            .iter()
            .filter(|&&d| d != q)
            .map(|&d| (d.to_string(), 1))
            .collect();
        judgments.entries.insert(q.clone(), docs);
    }
    Ok(judgments)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub corpus_size: u64,
    pub per_query_r: BTreeMap<String, u64>,
    /// Mean of R_q over queries with R_q ≥ 1; 0 when there are none.
    pub mean_r: f64,
    pub zero_r_queries: Vec<String>,
}

pub fn dataset_stats(judgments: &Judgments, corpus_size: u64) -> Result<DatasetStats> {
    let per_query_r: BTreeMap<String, u64> = judgments
        .query_ids()
        .map(|q| (q.to_string(), judgments.relevant_count(q) as u64))
        .collect();
    if let Some((q, r)) = per_query_r.iter().find(|(_, &r)| r > corpus_size) {
        return Err(BorError::Invalid(format!(
            "query {q} has {r} relevant documents but the corpus holds only {corpus_size}"
        )));
    }
    let zero_r_queries: Vec<String> = per_query_r
        .iter()
        .filter(|(_, &r)| r == 0)
        .map(|(q, _)| q.clone())
        .collect();
    let mean_r = crate::numeric::mean(per_query_r.values().filter(|&&r| r > 0).map(|&r| r as f64)).unwrap_or(0.0);
    Ok(DatasetStats {
        corpus_size,
        per_query_r,
        mean_r,
        zero_r_queries,
    })
}
