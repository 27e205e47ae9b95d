//! Evidence retrieval for open verification tasks.
//!
//! A corpus is a flat list of (doc_id, text) documents, each usually the
//! text rendering of one table. Two ranking methods are provided: Okapi
//! BM25 over a lowercase punctuation-stripped tokenization, and cosine
//! similarity over embedding vectors. Both return rankings with scores in
//! non-increasing order and ties broken by ascending doc_id, so identical
//! inputs always produce identical rankings.
//!
//! Embeddings come from an [`Embedder`]: a deterministic hash-to-vector
//! mock for offline work, an HTTP client for real embedding endpoints, and
//! a caching wrapper keyed by (embedder id, text digest) that lets replay
//! runs skip the network entirely.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::evidence::Table;
use crate::gateway::{GatewayError, Mode, ModelEndpoint};

pub const DEFAULT_BM25_K1: f64 = 1.2;
pub const DEFAULT_BM25_B: f64 = 0.75;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("vector dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("query {0:?} has no gold documents")]
    EmptyGold(String),
    #[error("no queries to evaluate")]
    NoQueries,
    #[error("duplicate doc_id {0:?}")]
    DuplicateDocId(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("embedding endpoint failure: {0}")]
    Endpoint(String),
    #[error("embedder returned {got} vectors for {expected} texts")]
    BatchShape { expected: usize, got: usize },
    #[error("embedding cache miss in replay mode (digest {0})")]
    CacheMiss(String),
    #[error("storage failure: {0}")]
    Store(String),
    #[error("malformed store: {0}")]
    MalformedStore(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

// ---------------------------------------------------------------------------
// Corpus

/// One retrievable unit: a table or paragraph rendered to plain text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    /// Record the document came from (empty when standalone).
    pub source: String,
    pub text: String,
}

/// A document collection with unique doc_ids. Queries are read-only.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    documents: Vec<Document>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self, RetrievalError> {
        let mut seen = BTreeSet::new();
        for doc in &documents {
            if !seen.insert(doc.doc_id.clone()) {
                return Err(RetrievalError::DuplicateDocId(doc.doc_id.clone()));
            }
        }
        Ok(Corpus { documents })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    /// Writes the corpus manifest: one JSON object per line with doc_id,
    /// source, and text.
    pub fn write_manifest(&self, path: impl AsRef<Path>) -> Result<(), RetrievalError> {
        let mut out = String::new();
        for doc in &self.documents {
            let line = serde_json::to_string(doc)
                .map_err(|e| RetrievalError::Store(e.to_string()))?;
            out.push_str(&line);
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| RetrievalError::Store(e.to_string()))
    }

    pub fn read_manifest(path: impl AsRef<Path>) -> Result<Self, RetrievalError> {
        let raw = fs::read_to_string(path).map_err(|e| RetrievalError::Store(e.to_string()))?;
        let mut documents = Vec::new();
        for (i, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let doc: Document = serde_json::from_str(line).map_err(|e| {
                RetrievalError::MalformedStore(format!("manifest line {}: {}", i + 1, e))
            })?;
            documents.push(doc);
        }
        Corpus::new(documents)
    }
}

/// The text form a table takes in the corpus: caption, then the header,
/// then each row flattened as label plus cells, one line each.
pub fn table_retrieval_text(table: &Table) -> String {
    let mut lines = vec![table.caption.clone(), table.columns.join(" ")];
    for row in &table.rows {
        let mut parts = vec![row.label.clone()];
        parts.extend(row.cells.iter().map(|c| c.text.clone()));
        lines.push(parts.join(" ").trim_end().to_string());
    }
    lines.join("\n")
}

/// Lowercases, replaces punctuation with spaces, and splits on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

// ---------------------------------------------------------------------------
// Configuration and results

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetrievalMethod {
    Bm25,
    Embedding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalConfig {
    pub method: RetrievalMethod,
    /// Ranking depth; at least 1.
    pub k: usize,
    /// Embedding endpoint id; required for live embedding retrieval.
    pub endpoint: Option<String>,
    pub k1: f64,
    pub b: f64,
}

impl RetrievalConfig {
    pub fn new(method: RetrievalMethod, k: usize) -> Self {
        RetrievalConfig {
            method,
            k,
            endpoint: None,
            k1: DEFAULT_BM25_K1,
            b: DEFAULT_BM25_B,
        }
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        if self.k == 0 {
            return Err(RetrievalError::InvalidK);
        }
        Ok(())
    }
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig::new(RetrievalMethod::Bm25, 10)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

/// A ranking for one query: scores non-increasing, ties in ascending
/// doc_id order, at most k entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RetrievalResult {
    pub query_id: String,
    pub ranking: Vec<ScoredDoc>,
}

impl RetrievalResult {
    pub fn for_query(mut self, query_id: impl Into<String>) -> Self {
        self.query_id = query_id.into();
        self
    }

    pub fn doc_ids(&self) -> Vec<&str> {
        self.ranking.iter().map(|d| d.doc_id.as_str()).collect()
    }
}

/// Scores are never NaN here, so the ordering is total.
fn rank_scored(mut scored: Vec<ScoredDoc>, k: usize) -> Vec<ScoredDoc> {
    scored.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("scores are finite")
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    scored.truncate(k);
    scored
}

// ---------------------------------------------------------------------------
// Embedders

/// Maps texts to L2-normalized vectors. The id names the embedding space
/// and keys the on-disk cache, so distinct models must use distinct ids.
pub trait Embedder {
    fn id(&self) -> String;
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RetrievalError>;
}

/// Embeds texts through an [`Embedder`], enforcing the output contract:
/// one unit vector per input text.
pub fn embed(texts: &[String], embedder: &dyn Embedder) -> Result<Vec<Vec<f64>>, RetrievalError> {
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let raw = embedder.embed_batch(texts)?;
    if raw.len() != texts.len() {
        return Err(RetrievalError::BatchShape {
            expected: texts.len(),
            got: raw.len(),
        });
    }
    raw.into_iter().map(normalize).collect()
}

fn normalize(mut v: Vec<f64>) -> Result<Vec<f64>, RetrievalError> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= f64::EPSILON {
        return Err(RetrievalError::Endpoint(
            "embedding vector has zero norm".into(),
        ));
    }
    for x in &mut v {
        *x /= norm;
    }
    Ok(v)
}

/// Deterministic mock embedder: each token hashes to a fixed pseudo-random
/// vector and a text embeds as the normalized sum, so texts sharing tokens
/// land near each other. Token-free texts fall back to hashing the whole
/// text so every input still gets a unit vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    pub dimension: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder { dimension: 64 }
    }
}

impl HashEmbedder {
    fn seed_vector(&self, key: &str) -> Vec<f64> {
        let digest = Sha256::digest(key.as_bytes());
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        let mut rng = ChaCha8Rng::from_seed(seed);
        (0..self.dimension).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()
    }
}

impl Embedder for HashEmbedder {
    fn id(&self) -> String {
        format!("hash-{}", self.dimension)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RetrievalError> {
        let mut out = Vec::with_capacity(texts.len());
        for text in texts {
            let tokens = tokenize(text);
            let mut acc = vec![0.0; self.dimension];
            for token in &tokens {
                for (a, x) in acc.iter_mut().zip(self.seed_vector(token)) {
                    *a += x;
                }
            }
            let sum: f64 = acc.iter().map(|x| x * x).sum();
            if tokens.is_empty() || sum <= f64::EPSILON {
                acc = self.seed_vector(&format!("\u{0}text\u{0}{text}"));
            }
            out.push(normalize(acc)?);
        }
        Ok(out)
    }
}

/// Client for an OpenAI-style embeddings endpoint. Single attempt per
/// batch; wrap in [`CachedEmbedder`] to avoid repeated calls.
pub struct HttpEmbedder {
    endpoint: ModelEndpoint,
    client: reqwest::blocking::Client,
}

impl HttpEmbedder {
    pub fn new(endpoint: ModelEndpoint) -> Result<Self, RetrievalError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| RetrievalError::Endpoint(e.to_string()))?;
        Ok(HttpEmbedder { endpoint, client })
    }
}

#[derive(Deserialize)]
struct EmbeddingsBody {
    data: Vec<EmbeddingsDatum>,
}

#[derive(Deserialize)]
struct EmbeddingsDatum {
    embedding: Vec<f64>,
}

impl Embedder for HttpEmbedder {
    fn id(&self) -> String {
        self.endpoint.id.clone()
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RetrievalError> {
        let url = format!(
            "{}/embeddings",
            self.endpoint.base_url.trim_end_matches('/')
        );
        let model = if self.endpoint.model.is_empty() {
            &self.endpoint.id
        } else {
            &self.endpoint.model
        };
        let mut request = self.client.post(&url).json(&serde_json::json!({
            "model": model,
            "input": texts,
        }));
        if let Some(var) = &self.endpoint.auth_env {
            let key = std::env::var(var).map_err(|_| {
                RetrievalError::Endpoint(format!("auth variable {var} not set"))
            })?;
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| RetrievalError::Endpoint(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(RetrievalError::Endpoint(format!("HTTP {status}")));
        }
        let body: EmbeddingsBody = response
            .json()
            .map_err(|e| RetrievalError::Endpoint(e.to_string()))?;
        Ok(body.data.into_iter().map(|d| d.embedding).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct CachedVector {
    embedder: String,
    text_sha256: String,
    vector: Vec<f64>,
}

/// Disk cache around another embedder, keyed by (embedder id, text
/// digest). Replay mode never calls the inner embedder: a missing entry is
/// an error, which is what makes replayed retrieval runs offline-safe.
pub struct CachedEmbedder<'e> {
    inner: &'e dyn Embedder,
    dir: PathBuf,
    mode: Mode,
}

impl<'e> CachedEmbedder<'e> {
    pub fn new(
        inner: &'e dyn Embedder,
        dir: impl Into<PathBuf>,
        mode: Mode,
    ) -> Result<Self, RetrievalError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| RetrievalError::Store(e.to_string()))?;
        Ok(CachedEmbedder { inner, dir, mode })
    }

    fn digest(&self, text: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(b"embed\0");
        hasher.update(self.inner.id().as_bytes());
        hasher.update(b"\0");
        hasher.update(text.as_bytes());
        hex::encode(hasher.finalize())
    }

    fn load(&self, digest: &str) -> Result<Option<Vec<f64>>, RetrievalError> {
        let path = self.dir.join(format!("{digest}.json"));
        if !path.exists() {
            return Ok(None);
        }
        let raw = fs::read_to_string(&path).map_err(|e| RetrievalError::Store(e.to_string()))?;
        let entry: CachedVector = serde_json::from_str(&raw)
            .map_err(|e| RetrievalError::MalformedStore(format!("{}: {e}", path.display())))?;
        Ok(Some(entry.vector))
    }

    fn save(&self, digest: &str, text: &str, vector: &[f64]) -> Result<(), RetrievalError> {
        let entry = CachedVector {
            embedder: self.inner.id(),
            text_sha256: hex::encode(Sha256::digest(text.as_bytes())),
            vector: vector.to_vec(),
        };
        let body = serde_json::to_string(&entry).map_err(|e| RetrievalError::Store(e.to_string()))?;
        let tmp = self.dir.join(format!("{digest}.tmp"));
        fs::write(&tmp, body).map_err(|e| RetrievalError::Store(e.to_string()))?;
        fs::rename(&tmp, self.dir.join(format!("{digest}.json")))
            .map_err(|e| RetrievalError::Store(e.to_string()))
    }
}

impl Embedder for CachedEmbedder<'_> {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RetrievalError> {
        let mut out: Vec<Option<Vec<f64>>> = vec![None; texts.len()];
        let mut misses: Vec<usize> = Vec::new();
        for (i, text) in texts.iter().enumerate() {
            let digest = self.digest(text);
            match self.load(&digest)? {
                Some(v) => out[i] = Some(v),
                None if self.mode == Mode::Replay => {
                    return Err(RetrievalError::CacheMiss(digest))
                }
                None => misses.push(i),
            }
        }
        if !misses.is_empty() {
            let miss_texts: Vec<String> = misses.iter().map(|&i| texts[i].clone()).collect();
            let fetched = self.inner.embed_batch(&miss_texts)?;
            if fetched.len() != miss_texts.len() {
                return Err(RetrievalError::BatchShape {
                    expected: miss_texts.len(),
                    got: fetched.len(),
                });
            }
            for (&i, vector) in misses.iter().zip(&fetched) {
                if self.mode == Mode::Record {
                    self.save(&self.digest(&texts[i]), &texts[i], vector)?;
                }
                out[i] = Some(vector.clone());
            }
        }
        Ok(out.into_iter().map(|v| v.expect("all slots filled")).collect())
    }
}

// ---------------------------------------------------------------------------
// Ranking

/// Cosine-similarity top-k. A zero-norm vector on either side scores 0
/// rather than NaN, keeping the ordering total.
pub fn cosine_top_k(
    query: &[f64],
    corpus_vectors: &[(String, Vec<f64>)],
    k: usize,
) -> Result<RetrievalResult, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::InvalidK);
    }
    if corpus_vectors.is_empty() {
        return Err(RetrievalError::EmptyCorpus);
    }
    let mut scored = Vec::with_capacity(corpus_vectors.len());
    for (doc_id, vector) in corpus_vectors {
        if vector.len() != query.len() {
            return Err(RetrievalError::DimensionMismatch {
                expected: query.len(),
                got: vector.len(),
            });
        }
        let dot: f64 = query.iter().zip(vector).map(|(a, b)| a * b).sum();
        let qn: f64 = query.iter().map(|x| x * x).sum::<f64>().sqrt();
        let dn: f64 = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        let score = if qn <= f64::EPSILON || dn <= f64::EPSILON {
            0.0
        } else {
            dot / (qn * dn)
        };
        scored.push(ScoredDoc {
            doc_id: doc_id.clone(),
            score,
        });
    }
    Ok(RetrievalResult {
        query_id: String::new(),
        ranking: rank_scored(scored, k),
    })
}

/// Okapi BM25 with the +1 smoothed idf, `ln((N - df + 0.5)/(df + 0.5) + 1)`,
/// which keeps every score non-negative. Query tokens score with
/// multiplicity.
pub fn bm25_rank(
    query: &str,
    corpus: &Corpus,
    k: usize,
    k1: f64,
    b: f64,
) -> Result<RetrievalResult, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::InvalidK);
    }
    if corpus.is_empty() {
        return Err(RetrievalError::EmptyCorpus);
    }
    let docs: Vec<Vec<String>> = corpus
        .documents()
        .iter()
        .map(|d| tokenize(&d.text))
        .collect();
    let n = docs.len() as f64;
    let avg_len = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let mut df: HashMap<&str, usize> = HashMap::new();
    for tokens in &docs {
        let unique: BTreeSet<&str> = tokens.iter().map(String::as_str).collect();
        for token in unique {
            *df.entry(token).or_insert(0) += 1;
        }
    }
    let query_tokens = tokenize(query);
    let mut scored = Vec::with_capacity(docs.len());
    for (doc, tokens) in corpus.documents().iter().zip(&docs) {
        let len = tokens.len() as f64;
        let mut score = 0.0;
        for term in &query_tokens {
            let tf = tokens.iter().filter(|t| *t == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let dfi = df.get(term.as_str()).copied().unwrap_or(0) as f64;
            let idf = ((n - dfi + 0.5) / (dfi + 0.5) + 1.0).ln();
            let denom = tf + k1 * (1.0 - b + b * len / avg_len);
            score += idf * tf * (k1 + 1.0) / denom;
        }
        scored.push(ScoredDoc {
            doc_id: doc.doc_id.clone(),
            score,
        });
    }
    Ok(RetrievalResult {
        query_id: String::new(),
        ranking: rank_scored(scored, k),
    })
}

// ---------------------------------------------------------------------------
// Retriever

/// A queryable index over one corpus: BM25 directly, or cosine over
/// corpus vectors embedded at build time. Queries are read-only.
pub struct Retriever {
    corpus: Corpus,
    config: RetrievalConfig,
    doc_vectors: Option<Vec<(String, Vec<f64>)>>,
}

impl Retriever {
    pub fn bm25(corpus: Corpus, config: RetrievalConfig) -> Result<Self, RetrievalError> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        Ok(Retriever {
            corpus,
            config: RetrievalConfig {
                method: RetrievalMethod::Bm25,
                ..config
            },
            doc_vectors: None,
        })
    }

    /// Builds the embedding index up front so queries only embed the query
    /// text.
    pub fn embedding(
        corpus: Corpus,
        config: RetrievalConfig,
        embedder: &dyn Embedder,
    ) -> Result<Self, RetrievalError> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        let texts: Vec<String> = corpus.documents().iter().map(|d| d.text.clone()).collect();
        let vectors = embed(&texts, embedder)?;
        let doc_vectors = corpus
            .documents()
            .iter()
            .zip(vectors)
            .map(|(d, v)| (d.doc_id.clone(), v))
            .collect();
        Ok(Retriever {
            corpus,
            config: RetrievalConfig {
                method: RetrievalMethod::Embedding,
                ..config
            },
            doc_vectors: Some(doc_vectors),
        })
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn config(&self) -> &RetrievalConfig {
        &self.config
    }

    pub fn retrieve(
        &self,
        query_id: &str,
        query_text: &str,
        embedder: Option<&dyn Embedder>,
    ) -> Result<RetrievalResult, RetrievalError> {
        self.retrieve_k(query_id, query_text, embedder, self.config.k)
    }

    /// Same as [`Retriever::retrieve`] with an explicit depth, for recall
    /// curves over several k values.
    pub fn retrieve_k(
        &self,
        query_id: &str,
        query_text: &str,
        embedder: Option<&dyn Embedder>,
        k: usize,
    ) -> Result<RetrievalResult, RetrievalError> {
        let result = match self.config.method {
            RetrievalMethod::Bm25 => {
                bm25_rank(query_text, &self.corpus, k, self.config.k1, self.config.b)?
            }
            RetrievalMethod::Embedding => {
                let embedder = embedder.ok_or_else(|| {
                    RetrievalError::Endpoint("embedding retrieval needs an embedder".into())
                })?;
                let query = embed(&[query_text.to_string()], embedder)?
                    .pop()
                    .expect("one vector per text");
                let vectors = self
                    .doc_vectors
                    .as_ref()
                    .expect("embedding retriever indexes at build time");
                cosine_top_k(&query, vectors, k)?
            }
        };
        Ok(result.for_query(query_id))
    }
}

// ---------------------------------------------------------------------------
// Recall

/// Mean per-query gold coverage: for each query, the fraction of its gold
/// documents present in the ranking, averaged over queries.
pub fn recall_at_k(
    results: &[RetrievalResult],
    gold: &BTreeMap<String, BTreeSet<String>>,
) -> Result<f64, RetrievalError> {
    if results.is_empty() {
        return Err(RetrievalError::NoQueries);
    }
    let mut total = 0.0;
    for result in results {
        let gold_docs = gold
            .get(&result.query_id)
            .filter(|g| !g.is_empty())
            .ok_or_else(|| RetrievalError::EmptyGold(result.query_id.clone()))?;
        let hit = gold_docs
            .iter()
            .filter(|g| result.ranking.iter().any(|d| &d.doc_id == *g))
            .count();
        total += hit as f64 / gold_docs.len() as f64;
    }
    Ok(total / results.len() as f64)
}

// ---------------------------------------------------------------------------
// Vector store

const VECTOR_STORE_HEADER: &str = "veritab-vectors 1\n";

/// Writes doc vectors as a flat binary file: a text header line, then per
/// document a length-prefixed doc_id, a u32 dimension, and the values as
/// little-endian f64.
pub fn write_vector_store(
    path: impl AsRef<Path>,
    entries: &[(String, Vec<f64>)],
) -> Result<(), RetrievalError> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(VECTOR_STORE_HEADER.as_bytes());
    for (doc_id, vector) in entries {
        let id = doc_id.as_bytes();
        buf.extend_from_slice(&(id.len() as u32).to_le_bytes());
        buf.extend_from_slice(id);
        buf.extend_from_slice(&(vector.len() as u32).to_le_bytes());
        for value in vector {
            buf.extend_from_slice(&value.to_le_bytes());
        }
    }
    let mut file =
        fs::File::create(path).map_err(|e| RetrievalError::Store(e.to_string()))?;
    file.write_all(&buf)
        .map_err(|e| RetrievalError::Store(e.to_string()))
}

pub fn read_vector_store(
    path: impl AsRef<Path>,
) -> Result<Vec<(String, Vec<f64>)>, RetrievalError> {
    let mut raw = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(|e| RetrievalError::Store(e.to_string()))?;
    let header = VECTOR_STORE_HEADER.as_bytes();
    if !raw.starts_with(header) {
        return Err(RetrievalError::MalformedStore(
            "missing vector store header".into(),
        ));
    }
    let mut pos = header.len();
    let mut entries = Vec::new();
    let take = |raw: &[u8], pos: &mut usize, n: usize| -> Result<Vec<u8>, RetrievalError> {
        if *pos + n > raw.len() {
            return Err(RetrievalError::MalformedStore("truncated record".into()));
        }
        let bytes = raw[*pos..*pos + n].to_vec();
        *pos += n;
        Ok(bytes)
    };
    while pos < raw.len() {
        let id_len = u32::from_le_bytes(take(&raw, &mut pos, 4)?.try_into().unwrap()) as usize;
        let id_bytes = take(&raw, &mut pos, id_len)?;
        let doc_id = String::from_utf8(id_bytes)
            .map_err(|_| RetrievalError::MalformedStore("doc_id is not UTF-8".into()))?;
        let dim = u32::from_le_bytes(take(&raw, &mut pos, 4)?.try_into().unwrap()) as usize;
        let mut vector = Vec::with_capacity(dim);
        for _ in 0..dim {
            let bytes = take(&raw, &mut pos, 8)?;
            vector.push(f64::from_le_bytes(bytes.try_into().unwrap()));
        }
        entries.push((doc_id, vector));
    }
    Ok(entries)
}
