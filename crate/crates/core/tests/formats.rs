//! Files shaped like the model adapter's exports must pass the validators.

use std::fmt::Write as _;
use std::io::BufReader;

use alqs::diversity::read_embeddings;
use alqs::generation::{read_bundles, ScoringMode};
use alqs::rng::ExperimentRng;
use alqs::selflearn::read_pseudo;
use alqs::uncertainty::nsp;

fn uniform(rng: &mut ExperimentRng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Adapter-style bundle export for 20 documents with M stochastic passes,
/// plus the pseudo-label file carrying the adapter's own NSP, computed in
/// single precision the way a GPU pipeline would.
fn adapter_exports(m: usize) -> (String, String) {
    let mut rng = ExperimentRng::seed_from_u64(99);
    let mut bundles = String::from("# decode=greedy max_length=adaptive\n");
    let mut pseudo = String::from("# decode=greedy max_length=adaptive\n");
    for d in 0..20 {
        let id = format!("doc-{d}");
        for pass in 0..=m {
            let len = 3 + rng.below(10) as usize;
            let tokens: Vec<String> = (0..len).map(|i| format!("\"tok{}\"", (i * 7 + d) % 13)).collect();
            let lps: Vec<f32> = (0..len)
                .map(|_| (uniform(&mut rng).max(1e-3)).ln() as f32)
                .collect();
            let mode = if pass == 0 {
                ",\"scoring_mode\":\"per_pass\""
            } else {
                ""
            };
            let _ = writeln!(
                bundles,
                "{{\"doc_id\":\"{id}\",\"pass_index\":{pass},\"tokens\":[{}],\"token_logprobs\":{:?}{mode}}}",
                tokens.join(","),
                lps
            );
            if pass == 0 {
                let mean = lps.iter().sum::<f32>() / len as f32;
                let adapter_nsp = 1.0f32 - mean.exp();
                let _ = writeln!(
                    pseudo,
                    "{{\"doc_id\":\"{id}\",\"summary\":\"{}\",\"nsp\":{adapter_nsp}}}",
                    tokens
                        .iter()
                        .map(|t| t.trim_matches('"'))
                        .collect::<Vec<_>>()
                        .join(" ")
                );
            }
        }
    }
    (bundles, pseudo)
}

#[test]
fn adapter_bundles_pass_validation_and_nsp_agrees() {
    let (bundles, pseudo) = adapter_exports(10);
    let parsed = read_bundles(BufReader::new(bundles.as_bytes())).unwrap();
    assert_eq!(parsed.len(), 20);
    assert!(parsed
        .iter()
        .all(|b| b.passes() == 10 && b.scoring_mode == ScoringMode::PerPass));
    let adapter = read_pseudo(BufReader::new(pseudo.as_bytes())).unwrap();
    assert_eq!(adapter.len(), 20);
    for (b, p) in parsed.iter().zip(&adapter) {
        assert_eq!(b.doc_id, p.doc_id);
        assert!((nsp(b).unwrap() - p.nsp_score).abs() < 1e-6, "{}", b.doc_id);
    }
}

#[test]
fn adapter_embeddings_pass_validation() {
    let mut rng = ExperimentRng::seed_from_u64(5);
    let mut text = String::from("{\"dim\": 8, \"count\": 3}\n");
    for i in 0..3 {
        let v: Vec<f32> = (0..8).map(|_| uniform(&mut rng) as f32 - 0.5).collect();
        let _ = writeln!(text, "{{\"id\": \"doc-{i}\", \"vector\": {v:?}}}");
    }
    let store = read_embeddings(BufReader::new(text.as_bytes())).unwrap();
    assert_eq!((store.dim(), store.len()), (8, 3));
    assert_eq!(store.ids(), ["doc-0", "doc-1", "doc-2"]);
}

#[test]
fn malformed_exports_are_rejected() {
    let bad_dim = "{\"dim\":3,\"count\":1}\n{\"id\":\"a\",\"vector\":[1.0,2.0]}\n";
    assert!(read_embeddings(BufReader::new(bad_dim.as_bytes())).is_err());
    let bad_count = "{\"dim\":2,\"count\":2}\n{\"id\":\"a\",\"vector\":[1.0,2.0]}\n";
    assert!(read_embeddings(BufReader::new(bad_count.as_bytes())).is_err());
    let no_header = "{\"id\":\"a\",\"vector\":[1.0,2.0]}\n";
    assert!(read_embeddings(BufReader::new(no_header.as_bytes())).is_err());

    let rec = |pass: usize, toks: &str, lps: &str| {
        format!("{{\"doc_id\":\"a\",\"pass_index\":{pass},\"tokens\":{toks},\"token_logprobs\":{lps}}}\n")
    };
    let mismatch = rec(0, "[\"x\",\"y\"]", "[-0.1]");
    assert!(read_bundles(BufReader::new(mismatch.as_bytes())).is_err());
    let positive = rec(0, "[\"x\"]", "[0.2]");
    assert!(read_bundles(BufReader::new(positive.as_bytes())).is_err());
    let gap = rec(0, "[\"x\"]", "[-0.1]") + &rec(2, "[\"x\"]", "[-0.1]");
    assert!(read_bundles(BufReader::new(gap.as_bytes())).is_err());
    let late_mode = rec(0, "[\"x\"]", "[-0.1]")
        + "{\"doc_id\":\"a\",\"pass_index\":1,\"tokens\":[\"x\"],\"token_logprobs\":[-0.1],\"scoring_mode\":\"per_pass\"}\n";
    assert!(read_bundles(BufReader::new(late_mode.as_bytes())).is_err());
}
