// Picking a batch with in-domain diversity sampling.
//
// Documents close to the bulk of the unlabeled pool and far from what is
// already labeled score highest. No model is needed, only embeddings.

use alqs::alsim::select_query;
use alqs::diversity::{idds_scores, Aggregation, EmbeddingStore, IddsConfig, Similarity};

fn store() -> alqs::Result<EmbeddingStore> {
    // two topical clusters plus an outlier
    let mut s = EmbeddingStore::new(2)?;
    for (id, v) in [
        ("finance-1", [1.0, 0.1]),
        ("finance-2", [0.9, 0.2]),
        ("finance-3", [1.1, 0.0]),
        ("travel-1", [0.1, 1.0]),
        ("travel-2", [0.0, 0.9]),
        ("outlier", [-2.0, -2.0]),
    ] {
        s.insert(id, v.to_vec())?;
    }
    Ok(s)
}

pub fn run_example() -> alqs::Result<()> {
    let store = store()?;
    let labeled = vec!["finance-1".to_string()];
    let pool: Vec<String> = store
        .ids()
        .iter()
        .filter(|id| !labeled.contains(id))
        .cloned()
        .collect();

    for (similarity, aggregation) in [
        (Similarity::Dot, Aggregation::Average),
        (Similarity::Cosine, Aggregation::Average),
        (Similarity::Euclidean, Aggregation::Maximum),
    ] {
        let cfg = IddsConfig {
            similarity,
            aggregation,
            ..Default::default()
        };
        let scores = idds_scores(&pool, &pool, &labeled, &store, &cfg)?;
        let batch = select_query(&scores, 2);
        println!("{similarity:?}/{aggregation:?}: batch {batch:?}");
        for s in &scores {
            println!("  {:<10} {:+.4}", s.doc_id, s.value);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> alqs::Result<()> {
    run_example()
}
