//! Exact-match evaluation under original and alias-expanded answers.
//!
//! ```text
//! cargo run --example evaluate
//! ```

use std::collections::HashMap;
use std::path::Path;

use alias_qa::distant::{evaluate_predictions, Prediction};
use alias_qa::expansion::{expand_all, QARecord};
use alias_qa::io::read_jsonl;
use alias_qa::kb::{ingest_freebase, FreebaseConfig};

fn main() -> alias_qa::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let (index, _) = ingest_freebase(&fixtures.join("eval_kb.tsv"), &FreebaseConfig::default())?;
    let gold: Vec<QARecord> = read_jsonl(&fixtures.join("eval_data.jsonl"))?;
    let predictions: HashMap<String, String> =
        read_jsonl::<Prediction>(&fixtures.join("eval_predictions.jsonl"))?
            .into_iter()
            .map(|p| (p.id, p.prediction))
            .collect();

    let (expanded, _) = expand_all(&gold, &index)?;
    let report = evaluate_predictions(&predictions, &gold, Some(&expanded))?;
    for q in &report.per_question {
        if Some(q.em_original) != q.em_expanded {
            println!("{}: {:?} only matches an alias", q.id, q.prediction);
        }
    }
    println!(
        "EM original {:.1}%, expanded {:.1}% over {} questions",
        report.em_original,
        report.em_expanded.unwrap_or(f64::NAN),
        report.questions
    );
    Ok(())
}
