// Scoring documents with the generation-based uncertainty strategies.
//
// The toy generator stands in for a summarization model: it returns a
// greedy summary plus M perturbed "stochastic" passes per document.

use alqs::corpus::Document;
use alqs::generation::{SummaryGenerator, ToyGenerator};
use alqs::uncertainty::{score_pool, Strategy};

pub fn run_example() -> alqs::Result<()> {
    let docs = [
        Document::new("short", "Lunch is at noon.")?,
        Document::new("memo", "Please review the attached quarterly budget and send comments by Thursday so we can finalize numbers.")?,
        Document::new("update", "The deployment finished overnight; two services restarted and the dashboards look normal again this morning.")?,
    ];
    let generator = ToyGenerator::new(8)?;
    let bundles = docs
        .iter()
        .map(|d| generator.generate(d, 10))
        .collect::<alqs::Result<Vec<_>>>()?;
    println!("greedy summary of memo: {}", bundles[1].greedy.tokens);

    let strategies = [
        Strategy::Nsp,
        Strategy::Ensp,
        Strategy::Ensv,
        Strategy::Bleuvar,
        Strategy::Sacrebleuvar,
    ];
    print!("{:<8}", "doc");
    for s in strategies {
        print!(" {:>12}", s.name());
    }
    println!();
    let columns = strategies
        .iter()
        .map(|s| score_pool(*s, &bundles))
        .collect::<alqs::Result<Vec<_>>>()?;
    for (i, d) in docs.iter().enumerate() {
        print!("{:<8}", d.id);
        for col in &columns {
            print!(" {:>12.6}", col[i].value);
        }
        println!();
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> alqs::Result<()> {
    run_example()
}
