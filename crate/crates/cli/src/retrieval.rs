//! The `index` and `search` commands.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use bor_core::bm25::{self, Bm25Params, InvertedIndex, Tokenizer};
use bor_core::ingest::{self, Document, LabeledCorpus, Parsed};
use clap::Args;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{emit, Format, Output, Table};

fn read_corpus(path: &Path) -> CliResult<LabeledCorpus> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let Parsed { value, warnings } =
        ingest::parse_corpus(BufReader::new(file)).map_err(|e| CliError::from(e).in_file(path))?;
    for w in warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(value)
}

fn read_stopwords(path: Option<&Path>) -> CliResult<Tokenizer> {
    let Some(path) = path else {
        return Ok(Tokenizer::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(Tokenizer::with_stopwords(text.split_whitespace()))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?))
}

#[derive(Args, Debug, Serialize)]
pub struct IndexArgs {
    /// Corpus as JSON lines with id, text and optional label
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output snapshot path
    #[arg(long)]
    pub index: PathBuf,
    /// Whitespace-separated stopword list
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Serialize)]
struct IndexSummary {
    documents: usize,
    terms: usize,
    avg_doc_length: f64,
    labelled: usize,
}

pub fn index(args: &IndexArgs) -> CliResult<()> {
    let corpus = read_corpus(&args.corpus)?;
    let tokenizer = read_stopwords(args.stopwords.as_deref())?;
    let index = bm25::build_index(&corpus, &tokenizer)?;
    let mut out = create(&args.index)?;
    index.write_snapshot(&mut out)?;
    out.flush().map_err(|e| CliError::io(&args.index, e))?;
    let summary = IndexSummary {
        documents: index.doc_count(),
        terms: index.postings.len(),
        avg_doc_length: index.avg_doc_length,
        labelled: index.labels.iter().filter(|l| l.is_some()).count(),
    };
    let table = Table::key_values(vec![
        ("documents", summary.documents.into()),
        ("terms", summary.terms.into()),
        ("avg_doc_length", summary.avg_doc_length.into()),
        ("labelled", summary.labelled.into()),
    ]);
    emit(args.format, "index", args, Output::new(summary, table))
}

#[derive(Args, Debug, Serialize)]
pub struct SearchArgs {
    /// Index snapshot written by `index`
    #[arg(long, required_unless_present = "corpus", conflicts_with = "corpus")]
    pub index: Option<PathBuf>,
    /// Corpus to index on the fly
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Stopwords for on-the-fly indexing
    #[arg(long, requires = "corpus")]
    pub stopwords: Option<PathBuf>,
    /// Queries as `qid<TAB>text` lines
    #[arg(long, required_unless_present = "subject_queries")]
    pub queries: Option<PathBuf>,
    /// Use every corpus document as a query, taking its subject line as the text
    #[arg(long, conflicts_with = "queries", requires = "corpus")]
    pub subject_queries: bool,
    /// Retrieval depth
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    /// Never retrieve the document a query was built from
    #[arg(long)]
    pub exclude_self: bool,
    /// Write same-label judgments for the queries to this qrels path
    #[arg(long)]
    pub class_relevance: Option<PathBuf>,
    #[arg(long, default_value_t = 1.2)]
    pub k1: f64,
    #[arg(long, default_value_t = 0.75)]
    pub b: f64,
    /// System tag in the run file
    #[arg(long, default_value = "bm25")]
    pub tag: String,
    /// Run output path; stdout when omitted
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Corpus view with ids and labels only, enough for class relevance.
fn labels_only(index: &InvertedIndex) -> CliResult<LabeledCorpus> {
    Ok(LabeledCorpus::new(
        index
            .doc_ids
            .iter()
            .zip(&index.labels)
            .map(|(id, label)| Document {
                id: id.clone(),
                text: String::new(),
                label: label.clone(),
            })
            .collect(),
    )?)
}

pub fn search(args: &SearchArgs) -> CliResult<()> {
    let params = Bm25Params::new(args.k1, args.b)?;
    if args.k == 0 {
        return Err(CliError::usage("--k must be at least 1"));
    }
    let (index, corpus) = match (&args.index, &args.corpus) {
        (Some(path), _) => {
            let file = File::open(path).map_err(|e| CliError::io(path, e))?;
            let index =
                InvertedIndex::read_snapshot(BufReader::new(file)).map_err(|e| CliError::from(e).in_file(path))?;
            (index, None)
        }
        (None, Some(path)) => {
            let corpus = read_corpus(path)?;
            let tokenizer = read_stopwords(args.stopwords.as_deref())?;
            (bm25::build_index(&corpus, &tokenizer)?, Some(corpus))
        }
        (None, None) => return Err(CliError::usage("search needs --index or --corpus")),
    };
    let queries: Vec<(String, String)> = match (&args.queries, &corpus) {
        (Some(path), _) => {
            let file = File::open(path).map_err(|e| CliError::io(path, e))?;
            let parsed = ingest::parse_queries(BufReader::new(file)).map_err(|e| CliError::from(e).in_file(path))?;
            for w in parsed.warnings {
                eprintln!("warning: {}: {w}", path.display());
            }
            parsed.value
        }
        (None, Some(corpus)) => corpus
            .documents
            .iter()
            .map(|d| (d.id.clone(), ingest::subject_line(&d.text)))
            .collect(),
        (None, None) => return Err(CliError::usage("--subject-queries needs --corpus")),
    };

    if let Some(qrels_path) = &args.class_relevance {
        let ids: Vec<String> = queries.iter().map(|(q, _)| q.clone()).collect();
        let judgments = match &corpus {
            Some(c) => ingest::class_relevance(c, &ids)?,
            None => ingest::class_relevance(&labels_only(&index)?, &ids)?,
        };
        let mut out = create(qrels_path)?;
        judgments
            .write_qrels(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| CliError::io(qrels_path, e))?;
    }

    let run = bm25::run_queries(&index, &queries, args.k, &params, args.exclude_self, &args.tag)?;
    match &args.output {
        Some(path) => {
            let mut out = create(path)?;
            run.write_trec(&mut out)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io(path, e))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            run.write_trec(&mut out)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::usage(format!("writing run: {e}")))?;
        }
    }
    Ok(())
}
