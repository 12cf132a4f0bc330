//! Lexical retrieval: tokenizer, inverted index, BM25 scoring and bounded
//! top-K selection.
//!
//! Documents are referenced by their position in `doc_ids`, which is sorted,
//! so ties broken by doc-ref are also broken by doc-id.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BorError, Result};
use crate::ingest::{LabeledCorpus, Run, ScoredDoc};

pub type DocRef = u32;

/// Lowercase, split on non-alphanumerics, drop tokens under two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    Tokenizer::default().tokens(text)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Tokenizer {
    pub stopwords: BTreeSet<String>,
}

impl Tokenizer {
    pub fn with_stopwords<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            stopwords: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }

    pub fn tokens(&self, text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| t.chars().count() >= 2)
            .map(str::to_lowercase)
            .filter(|t| !self.stopwords.contains(t))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        let p = Self { k1, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return Err(BorError::domain(format!("k1 must be positive, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(BorError::domain(format!("b must lie in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: DocRef,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    pub postings: BTreeMap<String, Vec<Posting>>,
    pub doc_ids: Vec<String>,
    pub doc_lengths: Vec<u32>,
    pub labels: Vec<Option<String>>,
    pub avg_doc_length: f64,
    pub tokenizer: Tokenizer,
}

impl InvertedIndex {
    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_ref(&self, doc_id: &str) -> Option<DocRef> {
        self.doc_ids
            .binary_search_by(|d| d.as_str().cmp(doc_id))
            .ok()
            .map(|i| i as DocRef)
    }

    pub fn doc_id(&self, doc: DocRef) -> &str {
        &self.doc_ids[doc as usize]
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.postings.get(term).map_or(0, Vec::len) as f64;
        idf(self.doc_count() as f64, df)
    }

    pub fn write_snapshot(&self, out: impl std::io::Write) -> Result<()> {
        serde_json::to_writer(out, self).map_err(|e| BorError::Invalid(format!("index snapshot: {e}")))
    }

    pub fn read_snapshot(input: impl std::io::Read) -> Result<Self> {
        let index: Self =
            serde_json::from_reader(input).map_err(|e| BorError::Invalid(format!("index snapshot: {e}")))?;
        if index.doc_lengths.len() != index.doc_ids.len() || index.labels.len() != index.doc_ids.len() {
            return Err(BorError::Invalid("index snapshot: inconsistent document tables".into()));
        }
        Ok(index)
    }
}

fn idf(doc_count: f64, df: f64) -> f64 {
    (1.0 + (doc_count - df + 0.5) / (df + 0.5)).ln()
}

/// Contribution of one term occurrence count to a document score.
pub fn term_score(idf: f64, tf: f64, doc_length: f64, avg_doc_length: f64, params: &Bm25Params) -> f64 {
    let norm = if avg_doc_length > 0.0 {
        1.0 - params.b + params.b * doc_length / avg_doc_length
    } else {
        1.0
    };
    idf * tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
}

pub fn build_index(corpus: &LabeledCorpus, tokenizer: &Tokenizer) -> Result<InvertedIndex> {
    if corpus.is_empty() {
        return Err(BorError::Empty("corpus has no documents".into()));
    }
    if corpus.len() > DocRef::MAX as usize {
        return Err(BorError::Invalid(format!(
            "corpus of {} documents is too large",
            corpus.len()
        )));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.sort_by(|&a, &b| corpus.documents[a].id.cmp(&corpus.documents[b].id));
    if let Some(w) = order
        .windows(2)
        .find(|w| corpus.documents[w[0]].id == corpus.documents[w[1]].id)
    {
        return Err(BorError::Invalid(format!(
            "duplicate document id {}",
            corpus.documents[w[0]].id
        )));
    }

    let tokenized: Vec<Vec<String>> = order
        .par_iter()
        .map(|&i| tokenizer.tokens(&corpus.documents[i].text))
        .collect();

    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut doc_lengths = Vec::with_capacity(order.len());
    for (doc, tokens) in tokenized.iter().enumerate() {
        doc_lengths.push(tokens.len() as u32);
        let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
        for t in tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
        for (term, tf) in counts {
            postings
                .entry(term.to_string())
                .or_default()
                .push(Posting { doc: doc as DocRef, tf });
        }
    }
    let total: u64 = doc_lengths.iter().map(|&l| l as u64).sum();
    Ok(InvertedIndex {
        postings,
        doc_ids: order.iter().map(|&i| corpus.documents[i].id.clone()).collect(),
        labels: order.iter().map(|&i| corpus.documents[i].label.clone()).collect(),
        avg_doc_length: total as f64 / doc_lengths.len() as f64,
        doc_lengths,
        tokenizer: tokenizer.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub doc: DocRef,
    pub score: f64,
}

/// Heap order: the "greatest" element is the worst hit, so the heap root is
/// the one to evict.
struct Worst(Hit);

impl PartialEq for Worst {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Worst {}
impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        better(&self.0, &other.0)
    }
}

/// `Less` when `a` ranks ahead of `b`.
fn better(a: &Hit, b: &Hit) -> Ordering {
    b.score.total_cmp(&a.score).then(a.doc.cmp(&b.doc))
}

/// Top-K documents with a positive score for the query terms.
///
/// Repeated query terms count once per occurrence. Documents that match no
/// term are not returned, so the result may be shorter than K.
pub fn search(
    index: &InvertedIndex,
    query_terms: &[String],
    depth: usize,
    params: &Bm25Params,
    exclude: Option<DocRef>,
) -> Result<Vec<Hit>> {
    params.validate()?;
    if depth == 0 {
        return Err(BorError::domain("search depth K must be at least 1"));
    }
    let mut acc = vec![0.0f64; index.doc_count()];
    let mut touched: Vec<DocRef> = Vec::new();
    let mut query_tf: BTreeMap<&str, u32> = BTreeMap::new();
    for t in query_terms {
        *query_tf.entry(t.as_str()).or_default() += 1;
    }
    for (term, qtf) in query_tf {
        let Some(list) = index.postings.get(term) else {
            continue;
        };
        let w = idf(index.doc_count() as f64, list.len() as f64);
        for p in list {
            let slot = &mut acc[p.doc as usize];
            if *slot == 0.0 {
                touched.push(p.doc);
            }
            *slot += qtf as f64
                * term_score(
                    w,
                    p.tf as f64,
                    index.doc_lengths[p.doc as usize] as f64,
                    index.avg_doc_length,
                    params,
                );
        }
    }

    let mut heap: BinaryHeap<Worst> = BinaryHeap::with_capacity(depth + 1);
    for doc in touched {
        if Some(doc) == exclude {
            continue;
        }
        let hit = Hit {
            doc,
            score: acc[doc as usize],
        };
        if heap.len() < depth {
            heap.push(Worst(hit));
        } else if better(&hit, &heap.peek().expect("non-empty").0) == Ordering::Less {
            heap.pop();
            heap.push(Worst(hit));
        }
    }
    let mut hits: Vec<Hit> = heap.into_iter().map(|w| w.0).collect();
    hits.sort_by(better);
    Ok(hits)
}

/// Retrieves every query and packages the result as a run.
///
/// With `exclude_self`, a query whose id is also a document id never
/// retrieves that document.
pub fn run_queries(
    index: &InvertedIndex,
    queries: &[(String, String)],
    depth: usize,
    params: &Bm25Params,
    exclude_self: bool,
    system_tag: &str,
) -> Result<Run> {
    let results = queries
        .par_iter()
        .map(|(qid, text)| {
            let exclude = if exclude_self { index.doc_ref(qid) } else { None };
            let hits = search(index, &index.tokenizer.tokens(text), depth, params, exclude)?;
            Ok((
                qid.clone(),
                hits.into_iter()
                    .map(|h| ScoredDoc {
                        doc_id: index.doc_id(h.doc).to_string(),
                        score: h.score,
                    })
                    .collect::<Vec<_>>(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut run = Run::new(system_tag);
    for (qid, docs) in results {
        run.insert(qid, docs)?;
    }
    Ok(run)
}
