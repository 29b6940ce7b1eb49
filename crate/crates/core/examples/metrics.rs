// Tokenization and the overlap metrics used for evaluation and BLEUVar.

use alqs::metrics::{bleu, rouge_l, rouge_n, sacrebleu, tokenize};

pub fn run_example() -> alqs::Result<()> {
    let reference = tokenize("The cat sat on the mat.");
    let candidate = tokenize("A cat sat on the mat");
    println!("reference tokens: {reference}");
    println!("candidate tokens: {candidate}");

    for n in 1..=2 {
        let s = rouge_n(&candidate, &reference, n);
        println!("rouge-{n}: P={:.4} R={:.4} F={:.4}", s.precision, s.recall, s.f1);
    }
    let l = rouge_l(&candidate, &reference);
    println!("rouge-L: P={:.4} R={:.4} F={:.4}", l.precision, l.recall, l.f1);

    println!("bleu      = {:.4}", bleu(&candidate, &reference));
    println!("sacrebleu = {:.4}", sacrebleu(&candidate, &reference));

    // fewer than four tokens: plain BLEU is zero, the smoothed variant is not
    let short = tokenize("cat sat");
    println!(
        "short bleu = {}, sacrebleu = {:.4}",
        bleu(&short, &reference),
        sacrebleu(&short, &reference)
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> alqs::Result<()> {
    run_example()
}
