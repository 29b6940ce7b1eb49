// Replaying generation records exported from a real model.
//
// Bundles are read from generation-record JSONL; asking for fewer passes
// than stored uses the first ones, asking for more is an error.

use alqs::corpus::Document;
use alqs::generation::{read_bundles, write_bundles, ReplayGenerator, SummaryGenerator, ToyGenerator};
use alqs::uncertainty::{ensp, nsp};

pub fn run_example() -> alqs::Result<()> {
    let doc = Document::new(
        "d1",
        "Heavy rain is expected across the region through the weekend with local flooding.",
    )?;
    let exported = ToyGenerator::new(6)?.generate(&doc, 5)?;

    let mut jsonl = Vec::new();
    write_bundles([&exported], &mut jsonl).expect("writing to memory");
    println!(
        "{}",
        String::from_utf8_lossy(&jsonl).lines().next().unwrap_or_default()
    );

    let replay = ReplayGenerator::from_bundles(read_bundles(jsonl.as_slice())?)?;
    let three = replay.generate(&doc, 3)?;
    println!(
        "passes stored={} requested=3 got={}",
        exported.passes(),
        three.passes()
    );
    println!("nsp={:.4} ensp(3 passes)={:.4}", nsp(&three)?, ensp(&three)?);

    match replay.generate(&doc, 10) {
        Err(e) => println!("requesting 10 passes: {e}"),
        Ok(_) => unreachable!("only 5 passes were stored"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> alqs::Result<()> {
    run_example()
}
