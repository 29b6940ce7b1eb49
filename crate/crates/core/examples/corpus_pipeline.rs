// Reading a JSONL corpus, removing duplicate documents and filtering by length.

use alqs::corpus::{deduplicate, read_corpus, stats, write_corpus};

const INPUT: &str = r#"{"id":"a","document":"Meeting moved to Friday at noon.","summary":"meeting moved"}
{"id":"b","document":"meeting moved to friday at noon","summary":"meeting on friday"}
{"id":"c","document":"Budget review needs your sign-off before the quarter ends.","summary":"budget sign-off"}
{"id":"d","document":"Thanks!","summary":"thanks"}
"#;

pub fn run_example() -> alqs::Result<()> {
    let corpus = read_corpus(INPUT.as_bytes(), "inbox")?;
    let deduped = deduplicate(&corpus);
    println!(
        "loaded {} documents, {} after dedup: {:?}",
        corpus.len(),
        deduped.len(),
        deduped.ids()
    );

    let kept = deduped.filter_by_length(3, 1);
    println!("kept after length filter: {:?}", kept.ids());

    let s = stats(&kept)?;
    println!(
        "count={} avg_doc_len={:.1} avg_summary_len={:.1}",
        s.count, s.avg_doc_len, s.avg_summary_len
    );

    let mut out = Vec::new();
    write_corpus(&kept, &mut out).expect("writing to memory");
    print!("{}", String::from_utf8_lossy(&out));
    Ok(())
}

#[allow(dead_code)]
fn main() -> alqs::Result<()> {
    run_example()
}
