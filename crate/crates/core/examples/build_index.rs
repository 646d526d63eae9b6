//! Build alias indexes from Freebase triples and Wikipedia title/redirect
//! tables, merge them, and query aliases.
//!
//! ```text
//! cargo run --example build_index
//! ```

use std::path::Path;

use alias_qa::kb::{ingest_freebase, ingest_wikipedia, AliasIndex, FreebaseConfig};

fn main() -> alias_qa::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");

    let (freebase, report) =
        ingest_freebase(&fixtures.join("stadium.tsv"), &FreebaseConfig::default())?;
    println!("freebase: {} entities, {report:?}", freebase.len());
    println!(
        "aliases of Sun Life Stadium: {:?}",
        freebase.aliases_of("Sun Life Stadium")
    );

    let (wiki, report) = ingest_wikipedia(
        &fixtures.join("wiki_titles.tsv"),
        &fixtures.join("wiki_redirects.tsv"),
    )?;
    println!("wikipedia: {} entities, {report:?}", wiki.len());
    println!("aliases of Tim Cook: {:?}", wiki.aliases_of("Tim Cook"));

    let merged = AliasIndex::merge(&freebase, &wiki);
    let bytes = merged.to_bytes();
    let reloaded = AliasIndex::read_binary(&bytes[..])?;
    println!(
        "merged: {} entities, {} surfaces, {} bytes on disk",
        reloaded.len(),
        reloaded.surface_count(),
        bytes.len()
    );
    for e in reloaded.entities() {
        println!(
            "  {} {:?} {:?}",
            e.entity_id(),
            e.canonical_name(),
            e.aliases()
        );
    }
    Ok(())
}
