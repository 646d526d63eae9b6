//! Answer normalization and set-based exact match.
//!
//! ```text
//! cargo run --example normalize_em
//! ```

use alias_qa::{em_set, em_single, normalize, AnswerSet};

fn main() -> alias_qa::Result<()> {
    for raw in [
        "The People's Club",
        "  Tim   COOK!! ",
        "an apple a day",
        "Pro-Player Park",
    ] {
        println!("{raw:?} -> {:?}", normalize(raw).as_str());
    }

    println!(
        "em_single(\"the Beatles\", \"Beatles\") = {}",
        em_single("the Beatles", "Beatles")
    );

    let gold = AnswerSet::new(["Timothy Donald Cook"])?;
    let expanded = AnswerSet::new(["Timothy Donald Cook", "Tim Cook"])?;
    println!(
        "em_set(\"Tim Cook\", original) = {}",
        em_set("Tim Cook", &gold)
    );
    println!(
        "em_set(\"Tim Cook\", expanded) = {}",
        em_set("Tim Cook", &expanded)
    );
    Ok(())
}
