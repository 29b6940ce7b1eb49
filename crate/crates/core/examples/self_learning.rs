// Self-learning: keep model summaries whose NSP is neither among the
// lowest k_l percent nor the highest k_h percent, then append them to the
// labeled set as pseudo-labeled examples.

use alqs::corpus::{Corpus, Document, LabeledExample, Provenance};
use alqs::generation::{SummaryGenerator, ToyGenerator};
use alqs::selflearn::{augment, filter_pseudo, PseudoExample, SelfLearnConfig};
use alqs::uncertainty::nsp;

pub fn run_example() -> alqs::Result<()> {
    let labeled = Corpus::from_examples(
        "labeled",
        [LabeledExample::new(
            Document::new(
                "gold-0",
                "Quarterly results beat expectations on strong cloud revenue.",
            )?,
            "results beat expectations",
            Provenance::Gold,
        )],
    )?;
    let unlabeled = Corpus::from_examples(
        "unlabeled",
        (0..20).map(|i| {
            let text = format!(
                "Status note {i}: {} items shipped and {} pending review today.",
                i * 3,
                20 - i
            );
            LabeledExample::new(
                Document::new(format!("u{i:02}"), text).expect("non-empty"),
                "",
                Provenance::Gold,
            )
        }),
    )?;

    let generator = ToyGenerator::new(4)?;
    let pseudo = unlabeled
        .iter()
        .map(|ex| {
            let bundle = generator.generate(&ex.doc, 0)?;
            Ok(PseudoExample {
                doc_id: ex.doc.id.clone(),
                nsp_score: nsp(&bundle)?,
                summary_tokens: bundle.greedy.tokens,
            })
        })
        .collect::<alqs::Result<Vec<_>>>()?;

    let cfg = SelfLearnConfig::new(10.0, 5.0)?;
    let (low, high) = cfg.drop_counts(pseudo.len());
    let kept = filter_pseudo(&pseudo, &cfg);
    println!(
        "{} pseudo-labels, dropping {low} lowest and {high} highest NSP, keeping {}",
        pseudo.len(),
        kept.len()
    );

    let training = augment(&labeled, &kept, &unlabeled)?;
    let n_pseudo = training
        .iter()
        .filter(|e| e.provenance == Provenance::Pseudo)
        .count();
    println!("training corpus: {} examples ({n_pseudo} pseudo)", training.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> alqs::Result<()> {
    run_example()
}
