//! Reader probability model: passage and span distributions, prediction
//! selection, the marginal-likelihood loss and a finite-difference check of
//! its gradient.
//!
//! ```text
//! cargo run --example reader_math
//! ```

use alias_qa::reader::{
    gradient_check, mml_grad, mml_loss, passage_probs, random_instance, select_prediction,
    span_probs, DEFAULT_MAX_SPAN_LEN,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> alias_qa::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (encodings, weights) = random_instance(&mut rng, 3, 8, 4);

    println!(
        "passage probs: {:.4?}",
        passage_probs(&encodings, &weights.passage)?
    );
    let (start, end) = span_probs(&encodings[0], &weights.start, &weights.end)?;
    println!("passage 0 start: {start:.3?}");
    println!("passage 0 end:   {end:.3?}");

    let pred = select_prediction(&encodings, &weights, DEFAULT_MAX_SPAN_LEN)?;
    println!("prediction: {pred:?}");

    let gold = [(1, 3), (5, 5)];
    println!("loss: {:.6}", mml_loss(&encodings, &weights, 2, &gold)?);
    println!(
        "grad w_r: {:.6?}",
        mml_grad(&encodings, &weights, 2, &gold)?.passage
    );
    println!(
        "max relative error vs finite differences: {:.2e}",
        gradient_check(&encodings, &weights, 2, &gold, 1e-5)?
    );
    Ok(())
}
