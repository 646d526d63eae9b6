//! Distant supervision: label retrieved passages with original and
//! alias-expanded answers, then sample one positive and `m - 1` negatives per
//! question.
//!
//! ```text
//! cargo run --example mine_training
//! ```

use std::collections::HashMap;
use std::path::Path;

use alias_qa::distant::{build_training_set, MiningConfig, Retrieval};
use alias_qa::expansion::QARecord;
use alias_qa::io::read_jsonl;
use alias_qa::kb::{ingest_freebase, FreebaseConfig};

fn main() -> alias_qa::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let (index, _) = ingest_freebase(&fixtures.join("eval_kb.tsv"), &FreebaseConfig::default())?;
    let records: Vec<QARecord> = read_jsonl(&fixtures.join("mining_data.jsonl"))?;
    let retrievals: HashMap<String, _> =
        read_jsonl::<Retrieval>(&fixtures.join("mining_retrievals.jsonl"))?
            .into_iter()
            .map(|r| (r.id, r.passages))
            .collect();

    let config = MiningConfig {
        m: 3,
        ..MiningConfig::default()
    };
    let (_, plain) = build_training_set(&records, &retrievals, None, &config)?;
    let (examples, counts) = build_training_set(&records, &retrievals, Some(&index), &config)?;
    println!("without aliases: {plain:?}");
    println!("with aliases:    {counts:?}");
    for ex in &examples {
        println!(
            "{}",
            serde_json::to_string(&ex.to_line()).expect("serializable")
        );
    }
    Ok(())
}
