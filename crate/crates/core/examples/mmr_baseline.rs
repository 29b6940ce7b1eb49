// The MMR baseline: uncertainty traded off against similarity to the
// closest labeled document.

use std::collections::HashMap;

use alqs::alsim::select_query;
use alqs::diversity::{mmr_scores, EmbeddingStore, MmrConfig};

pub fn run_example() -> alqs::Result<()> {
    let mut store = EmbeddingStore::new(2)?;
    let mut uncertainty = HashMap::new();
    for (id, v, u) in [
        ("a", [1.0, 0.0], 0.90),
        ("b", [0.95, 0.05], 0.85),
        ("c", [0.0, 1.0], 0.60),
        ("d", [0.7, 0.7], 0.40),
        ("seen", [1.0, 0.05], 0.0),
    ] {
        store.insert(id, v.to_vec())?;
        uncertainty.insert(id.to_string(), u);
    }
    let candidates: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
    let labeled = vec!["seen".to_string()];

    for lambda in [1.0, 0.5, 0.0] {
        let cfg = MmrConfig {
            lambda,
            ..Default::default()
        };
        let scores = mmr_scores(&candidates, &labeled, &store, &uncertainty, &cfg)?;
        let ranked = select_query(&scores, candidates.len());
        println!("lambda={lambda:.1}: ranking {ranked:?}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> alqs::Result<()> {
    run_example()
}
