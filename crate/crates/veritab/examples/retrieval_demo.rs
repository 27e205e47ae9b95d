//! Ranks a small document corpus for a query with BM25 and with hashed
//! embeddings, then sweeps recall@k against gold labels.
//!
//! Run with: cargo run --example retrieval_demo

use std::collections::{BTreeMap, BTreeSet};
use std::error::Error;

use veritab::retrieval::{
    bm25_rank, cosine_top_k, embed, recall_at_k, Corpus, Document, Embedder, HashEmbedder,
    RetrievalConfig, RetrievalMethod, Retriever, DEFAULT_BM25_B, DEFAULT_BM25_K1,
};

const DOCS: [(&str, &str); 5] = [
    ("d01", "total water withdrawal rose across mining operations"),
    ("d02", "reused and recycled water as a share of operational water use"),
    ("d03", "tailings storage facilities hold processed mineral waste"),
    ("d04", "greenhouse gas emissions fell under scope two accounting"),
    ("d05", "operational water use combines withdrawal with reused water"),
];

fn corpus() -> Result<Corpus, Box<dyn Error>> {
    let documents = DOCS
        .iter()
        .map(|(id, text)| Document {
            doc_id: id.to_string(),
            source: String::new(),
            text: text.to_string(),
        })
        .collect();
    Ok(Corpus::new(documents)?)
}

fn main() -> Result<(), Box<dyn Error>> {
    let query = "share of reused water";
    let corpus = corpus()?;

    println!("BM25 ranking for {query:?}:");
    let ranking = bm25_rank(query, &corpus, corpus.len(), DEFAULT_BM25_K1, DEFAULT_BM25_B)?;
    for doc in &ranking.ranking {
        println!("  {}  {:.6}", doc.doc_id, doc.score);
    }

    // Every document is embedded to a unit vector; the query is ranked by
    // cosine similarity, which for unit vectors is the dot product.
    let embedder = HashEmbedder::default();
    let texts: Vec<String> = DOCS.iter().map(|(_, text)| text.to_string()).collect();
    let vectors = embed(&texts, &embedder)?;
    let pairs: Vec<(String, Vec<f64>)> = DOCS
        .iter()
        .zip(vectors)
        .map(|((id, _), v)| (id.to_string(), v))
        .collect();
    let query_vector = embed(&[query.to_string()], &embedder)?.remove(0);
    println!("\nembedding ranking ({}):", embedder.id());
    let ranking = cosine_top_k(&query_vector, &pairs, 3)?;
    for doc in &ranking.ranking {
        println!("  {}  {:.6}", doc.doc_id, doc.score);
    }

    // Recall against gold: the two water-share documents are relevant.
    let gold: BTreeMap<String, BTreeSet<String>> = BTreeMap::from([(
        "q1".to_string(),
        BTreeSet::from(["d02".to_string(), "d05".to_string()]),
    )]);
    let retriever = Retriever::bm25(corpus, RetrievalConfig::new(RetrievalMethod::Bm25, 1))?;
    println!("\nrecall sweep:");
    for k in 1..=DOCS.len() {
        let result = retriever.retrieve_k("q1", query, None, k)?;
        let recall = recall_at_k(std::slice::from_ref(&result), &gold)?;
        println!("  recall@{k} = {recall:.3}  top: {:?}", result.doc_ids());
    }
    Ok(())
}
