//! Answer-alias expansion and evaluation tooling for open-domain question
//! answering.
//!
//! - [`normalize`]: answer normalization, single and set-based exact match.
//! - [`kb`]: alias index built from Freebase triples or Wikipedia redirects.
//! - [`expansion`]: gold answer expansion and dataset statistics.
//! - [`distant`]: positive passage mining, training-set sampling, evaluation.
//! - [`reader`]: reader probabilities, span selection, and the MML objective.
//! - [`cli`]: the `alias-qa` command-line front end.
//!
//! Runnable examples, all driven by the bundled `fixtures/`:
//!
//! | example          | shows                                             |
//! |------------------|---------------------------------------------------|
//! | `normalize_em`   | normalization, `em_single`, `em_set`              |
//! | `build_index`    | Freebase and Wikipedia ingestion, merge, binary IO |
//! | `expand_answers` | streaming expansion and `ExpansionStats`          |
//! | `mine_training`  | positive/negative mining with and without aliases |
//! | `evaluate`       | EM under original and expanded answers            |
//! | `reader_math`    | passage/span softmax, selection, loss, gradient   |
//!
//! ```
//! use alias_qa::{em_set, AliasIndexBuilder, AnswerSet, SourceTag};
//! use alias_qa::expansion::expand_answers;
//!
//! let index = AliasIndexBuilder::new(SourceTag::Freebase)
//!     .entity("m.0tc", "Timothy Donald Cook", ["Tim Cook"])
//!     .build();
//! let gold = AnswerSet::new(["Timothy Donald Cook"]).unwrap();
//! assert_eq!(em_set("Tim Cook", &gold), 0);
//! assert_eq!(em_set("Tim Cook", &expand_answers(&gold, &index)), 1);
//! ```

pub mod cli;
pub mod distant;
pub mod error;
pub mod expansion;
pub mod io;
pub mod kb;
pub mod matcher;
pub mod normalize;
pub mod reader;

pub use error::{Error, Result};
pub use kb::{AliasIndex, AliasIndexBuilder, EntityRecord, FreebaseConfig, SourceTag};
pub use normalize::{em_set, em_single, normalize, AnswerSet, NormalizedText};
