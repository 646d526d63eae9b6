//! Expand the answer sets of a small dataset and report expansion statistics.
//!
//! ```text
//! cargo run --example expand_answers
//! ```

use std::path::Path;

use alias_qa::expansion::{expand_dataset, QARecord};
use alias_qa::io::JsonlReader;
use alias_qa::kb::{ingest_freebase, FreebaseConfig};

fn main() -> alias_qa::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let (index, _) = ingest_freebase(
        &fixtures.join("expansion_kb.tsv"),
        &FreebaseConfig::default(),
    )?;

    let records = JsonlReader::<_, QARecord>::open(&fixtures.join("expansion_data.jsonl"))?;
    let mut stream = expand_dataset(records, &index);
    for record in stream.by_ref() {
        let record = record?;
        println!(
            "{}: {:?} -> {:?}",
            record.question_id,
            record.gold().answers(),
            record.answers.answers()
        );
    }
    println!("{:#?}", stream.stats());
    Ok(())
}
