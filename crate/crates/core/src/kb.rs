//! Knowledge-base alias index.
//!
//! Two ingestion paths feed the same [`AliasIndex`]: Freebase-style triple
//! files (name + alias predicates) and Wikipedia title/redirect tables. The
//! index is keyed by the normalized surface form of every alias, so lookups
//! are insensitive to case, punctuation and articles.
//!
//! Binary layout (`.qaai`), all integers little-endian:
//!
//! ```text
//! magic    4 bytes  "QAAI"
//! version  u32      1
//! source   u8       0 = freebase, 1 = wikipedia, 2 = merged
//! count    u64      number of entities
//! entity × count, sorted by entity_id:
//!   str    entity_id
//!   str    canonical_name
//!   u32    alias count
//!   str    alias × alias count   (canonical_name is among them)
//! str = u32 byte length followed by UTF-8 bytes
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::{normalize, NormalizedText};

pub const INDEX_MAGIC: &[u8; 4] = b"QAAI";
pub const INDEX_VERSION: u32 = 1;

/// Where an index's aliases came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTag {
    Freebase,
    Wikipedia,
    Merged,
}

impl SourceTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceTag::Freebase => "freebase",
            SourceTag::Wikipedia => "wikipedia",
            SourceTag::Merged => "merged",
        }
    }

    fn to_byte(self) -> u8 {
        match self {
            SourceTag::Freebase => 0,
            SourceTag::Wikipedia => 1,
            SourceTag::Merged => 2,
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(SourceTag::Freebase),
            1 => Some(SourceTag::Wikipedia),
            2 => Some(SourceTag::Merged),
            _ => None,
        }
    }
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One entity and all of its surface forms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    entity_id: String,
    canonical_name: String,
    aliases: Vec<String>,
}

impl EntityRecord {
    pub fn entity_id(&self) -> &str {
        &self.entity_id
    }

    pub fn canonical_name(&self) -> &str {
        &self.canonical_name
    }

    /// All surface forms, canonical name first.
    pub fn aliases(&self) -> &[String] {
        &self.aliases
    }
}

/// Accumulates surface forms for one entity, deduplicating on normalized form.
#[derive(Debug, Default)]
struct RecordDraft {
    canonical: Option<String>,
    aliases: Vec<String>,
    seen: HashSet<NormalizedText>,
}

impl RecordDraft {
    fn add(&mut self, raw: &str) {
        let norm = normalize(raw);
        if norm.is_empty() {
            return;
        }
        if self.seen.insert(norm) {
            self.aliases.push(raw.to_owned());
        }
    }
}

/// Builds an [`AliasIndex`] from explicit records.
#[derive(Debug)]
pub struct AliasIndexBuilder {
    source: SourceTag,
    drafts: BTreeMap<String, RecordDraft>,
}

impl AliasIndexBuilder {
    pub fn new(source: SourceTag) -> Self {
        AliasIndexBuilder {
            source,
            drafts: BTreeMap::new(),
        }
    }

    /// Add (or extend) an entity. The first canonical name given for an id
    /// wins; later ones are kept as aliases.
    pub fn entity<I, S>(mut self, id: &str, canonical: &str, aliases: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.add_name(id, canonical);
        for a in aliases {
            self.add_alias(id, a.as_ref());
        }
        self
    }

    fn add_name(&mut self, id: &str, name: &str) {
        let draft = self.drafts.entry(id.to_owned()).or_default();
        if draft.canonical.is_none() && !normalize(name).is_empty() {
            draft.canonical = Some(name.to_owned());
        }
        draft.add(name);
    }

    fn add_alias(&mut self, id: &str, alias: &str) {
        self.drafts.entry(id.to_owned()).or_default().add(alias);
    }

    /// Finalize. Drafts that never received a usable name are dropped.
    pub fn build(self) -> AliasIndex {
        let mut entities = BTreeMap::new();
        for (id, draft) in self.drafts {
            let Some(canonical) = draft.canonical else {
                continue;
            };
            let canon_norm = normalize(&canonical);
            // canonical first, then everything else in insertion order
            let mut aliases = Vec::with_capacity(draft.aliases.len());
            aliases.push(canonical.clone());
            aliases.extend(
                draft
                    .aliases
                    .into_iter()
                    .filter(|a| normalize(a) != canon_norm),
            );
            entities.insert(
                id.clone(),
                EntityRecord {
                    entity_id: id,
                    canonical_name: canonical,
                    aliases,
                },
            );
        }
        AliasIndex::from_entities(self.source, entities)
    }
}

/// Immutable normalized-surface → entity lookup table.
#[derive(Debug, Clone)]
pub struct AliasIndex {
    source: SourceTag,
    entities: BTreeMap<String, EntityRecord>,
    surface_map: HashMap<NormalizedText, Vec<String>>,
}

impl PartialEq for AliasIndex {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && self.entities == other.entities
    }
}

impl AliasIndex {
    pub fn empty(source: SourceTag) -> Self {
        AliasIndex::from_entities(source, BTreeMap::new())
    }

    fn from_entities(source: SourceTag, entities: BTreeMap<String, EntityRecord>) -> Self {
        let mut surface_map: HashMap<NormalizedText, Vec<String>> = HashMap::new();
        // BTreeMap iteration keeps each id list sorted.
        for (id, rec) in &entities {
            for alias in &rec.aliases {
                let ids = surface_map.entry(normalize(alias)).or_default();
                if ids.last() != Some(id) {
                    ids.push(id.clone());
                }
            }
        }
        AliasIndex {
            source,
            entities,
            surface_map,
        }
    }

    pub fn source(&self) -> SourceTag {
        self.source
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Number of distinct normalized surface forms.
    pub fn surface_count(&self) -> usize {
        self.surface_map.len()
    }

    pub fn entity(&self, id: &str) -> Option<&EntityRecord> {
        self.entities.get(id)
    }

    /// Entities in id order.
    pub fn entities(&self) -> impl Iterator<Item = &EntityRecord> {
        self.entities.values()
    }

    /// Entity ids whose aliases include `surface` (after normalization).
    pub fn lookup(&self, surface: &str) -> &[String] {
        self.lookup_normalized(&normalize(surface))
    }

    pub fn lookup_normalized(&self, norm: &NormalizedText) -> &[String] {
        self.surface_map.get(norm).map_or(&[], Vec::as_slice)
    }

    /// Every alias of every entity matching `surface`, excluding aliases that
    /// normalize to the same form as the query. Entities are visited in id
    /// order; duplicates (by raw string) are dropped. Unknown surfaces give an
    /// empty list.
    pub fn aliases_of(&self, surface: &str) -> Vec<&str> {
        self.aliases_of_normalized(&normalize(surface))
    }

    pub fn aliases_of_normalized(&self, query: &NormalizedText) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for id in self.lookup_normalized(query) {
            let rec = &self.entities[id];
            for alias in &rec.aliases {
                if !out.contains(&alias.as_str()) && &normalize(alias) != query {
                    out.push(alias);
                }
            }
        }
        out
    }

    /// Union of two indexes. Entity ids are prefixed with each input's source
    /// tag (`freebase:m.01`); when both inputs carry the same tag the prefixes
    /// become `tag#1:` and `tag#2:` so the two sides never collide.
    pub fn merge(a: &AliasIndex, b: &AliasIndex) -> AliasIndex {
        let (pa, pb) = if a.source == b.source {
            (format!("{}#1:", a.source), format!("{}#2:", b.source))
        } else {
            (format!("{}:", a.source), format!("{}:", b.source))
        };
        let mut entities = BTreeMap::new();
        for (prefix, idx) in [(pa, a), (pb, b)] {
            for rec in idx.entities.values() {
                let id = format!("{prefix}{}", rec.entity_id);
                entities.insert(
                    id.clone(),
                    EntityRecord {
                        entity_id: id,
                        canonical_name: rec.canonical_name.clone(),
                        aliases: rec.aliases.clone(),
                    },
                );
            }
        }
        AliasIndex::from_entities(SourceTag::Merged, entities)
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(INDEX_MAGIC)?;
        w.write_all(&INDEX_VERSION.to_le_bytes())?;
        w.write_all(&[self.source.to_byte()])?;
        w.write_all(&(self.entities.len() as u64).to_le_bytes())?;
        for rec in self.entities.values() {
            write_str(&mut w, &rec.entity_id)?;
            write_str(&mut w, &rec.canonical_name)?;
            w.write_all(&(rec.aliases.len() as u32).to_le_bytes())?;
            for a in &rec.aliases {
                write_str(&mut w, a)?;
            }
        }
        w.flush()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_binary(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<AliasIndex> {
        let bad = |detail: String| Error::Format {
            what: "alias index",
            detail,
        };
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic)?;
        if &magic != INDEX_MAGIC {
            return Err(bad(format!("bad magic {magic:?}")));
        }
        let version = read_u32(&mut r)?;
        if version != INDEX_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let mut tag = [0u8; 1];
        read_exact(&mut r, &mut tag)?;
        let source =
            SourceTag::from_byte(tag[0]).ok_or_else(|| bad(format!("source tag {}", tag[0])))?;
        let mut count = [0u8; 8];
        read_exact(&mut r, &mut count)?;
        let count = u64::from_le_bytes(count);

        let mut entities = BTreeMap::new();
        for _ in 0..count {
            let entity_id = read_str(&mut r)?;
            let canonical_name = read_str(&mut r)?;
            let n = read_u32(&mut r)?;
            let mut aliases = Vec::with_capacity(n.min(1 << 16) as usize);
            for _ in 0..n {
                aliases.push(read_str(&mut r)?);
            }
            if !aliases.contains(&canonical_name) {
                return Err(bad(format!(
                    "entity {entity_id}: canonical name missing from aliases"
                )));
            }
            if entities.contains_key(&entity_id) {
                return Err(bad(format!("duplicate entity {entity_id}")));
            }
            entities.insert(
                entity_id.clone(),
                EntityRecord {
                    entity_id,
                    canonical_name,
                    aliases,
                },
            );
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing).map_err(|e| Error::io("<index>", e))? != 0 {
            return Err(bad("trailing bytes".into()));
        }
        Ok(AliasIndex::from_entities(source, entities))
    }

    pub fn load(path: &Path) -> Result<AliasIndex> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        AliasIndex::read_binary(BufReader::new(f)).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    /// One JSON object per entity, in id order.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for rec in self.entities.values() {
            serde_json::to_writer(&mut w, rec)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }
}

fn write_str<W: Write>(w: &mut W, s: &str) -> io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            Error::Format {
                what: "alias index",
                detail: "truncated file".into(),
            }
        } else {
            Error::io("<index>", e)
        }
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_str<R: Read>(r: &mut R) -> Result<String> {
    let len = read_u32(r)? as usize;
    let mut buf = vec![0u8; len];
    read_exact(r, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Format {
        what: "alias index",
        detail: format!("non-UTF-8 string: {e}"),
    })
}

/// Counters collected while ingesting a source file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub lines: u64,
    pub malformed: u64,
    pub non_english: u64,
    pub records: u64,
    pub dangling_redirects: u64,
    pub unresolved_chains: u64,
}

/// Predicate names used when reading a triple file. Matching is on the
/// last path segment, so `<http://rdf.freebase.com/ns/common.topic.alias>`
/// also matches `common.topic.alias`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreebaseConfig {
    pub name_predicate: String,
    pub alias_predicate: String,
}

impl Default for FreebaseConfig {
    fn default() -> Self {
        FreebaseConfig {
            name_predicate: "type.object.name".into(),
            alias_predicate: "common.topic.alias".into(),
        }
    }
}

fn strip_angle(s: &str) -> &str {
    s.strip_prefix('<')
        .and_then(|s| s.strip_suffix('>'))
        .unwrap_or(s)
}

fn predicate_matches(predicate: &str, wanted: &str) -> bool {
    let p = strip_angle(predicate);
    p == wanted || p.rsplit('/').next() == Some(wanted)
}

fn is_lang_tag(tag: &str) -> bool {
    let mut parts = tag.split('-');
    let primary = parts.next().unwrap_or("");
    (2..=3).contains(&primary.len())
        && primary.bytes().all(|b| b.is_ascii_alphabetic())
        && parts
            .all(|p| !p.is_empty() && p.len() <= 8 && p.bytes().all(|b| b.is_ascii_alphanumeric()))
}

/// Split an object into its text and optional language tag. Quoted literals
/// (`"Sun Life Stadium"@en`) are unescaped; bare objects take a trailing
/// `@xx` as a tag only when it looks like a language code.
fn parse_literal(obj: &str) -> Option<(String, Option<&str>)> {
    if let Some(body) = obj.strip_prefix('"') {
        let close = body.rfind('"')?;
        let (inner, suffix) = (&body[..close], &body[close + 1..]);
        let lang = if let Some(tag) = suffix.strip_prefix('@') {
            if !is_lang_tag(tag) {
                return None;
            }
            Some(tag)
        } else if suffix.is_empty() || suffix.starts_with("^^") {
            None
        } else {
            return None;
        };
        let mut text = String::with_capacity(inner.len());
        let mut chars = inner.chars();
        while let Some(c) = chars.next() {
            if c == '\\' {
                match chars.next() {
                    Some('n') => text.push('\n'),
                    Some('t') => text.push('\t'),
                    Some(other) => text.push(other),
                    None => return None,
                }
            } else {
                text.push(c);
            }
        }
        return Some((text, lang));
    }
    match obj.rsplit_once('@') {
        Some((text, tag)) if !text.is_empty() && is_lang_tag(tag) => {
            Some((text.to_owned(), Some(tag)))
        }
        _ => Some((obj.to_owned(), None)),
    }
}

fn is_english(lang: Option<&str>) -> bool {
    match lang {
        None => true,
        Some(l) => {
            let primary = l.split('-').next().unwrap_or(l);
            primary.eq_ignore_ascii_case("en")
        }
    }
}

/// Read lines as UTF-8, counting undecodable ones as malformed.
fn for_each_line<R: BufRead>(
    mut reader: R,
    label: &str,
    report: &mut IngestReport,
    mut f: impl FnMut(&str, &mut IngestReport),
) -> Result<()> {
    let mut buf = Vec::new();
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::io(label, e))?;
        if n == 0 {
            return Ok(());
        }
        report.lines += 1;
        let Ok(line) = std::str::from_utf8(&buf) else {
            report.malformed += 1;
            continue;
        };
        let line = line.strip_suffix('\n').unwrap_or(line);
        let line = line.strip_suffix('\r').unwrap_or(line);
        f(line, report);
    }
}

/// Ingest a `subject<TAB>predicate<TAB>object` triple file.
pub fn ingest_freebase(path: &Path, config: &FreebaseConfig) -> Result<(AliasIndex, IngestReport)> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_freebase_reader(BufReader::new(f), config, &path.display().to_string())
}

/// [`ingest_freebase`] over any buffered reader; `label` names the source in
/// errors.
pub fn ingest_freebase_reader<R: BufRead>(
    reader: R,
    config: &FreebaseConfig,
    label: &str,
) -> Result<(AliasIndex, IngestReport)> {
    let mut report = IngestReport::default();
    let mut builder = AliasIndexBuilder::new(SourceTag::Freebase);
    for_each_line(reader, label, &mut report, |line, report| {
        if line.trim().is_empty() || line.starts_with('#') {
            return;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let (s, p, o) = match fields.as_slice() {
            [s, p, o] => (*s, *p, *o),
            [s, p, o, dot] if dot.trim() == "." => (*s, *p, *o),
            _ => {
                report.malformed += 1;
                return;
            }
        };
        let is_name = predicate_matches(p, &config.name_predicate);
        let is_alias = predicate_matches(p, &config.alias_predicate);
        if !is_name && !is_alias {
            return;
        }
        let subject = strip_angle(s.trim());
        let Some((text, lang)) = parse_literal(o.trim()) else {
            report.malformed += 1;
            return;
        };
        if subject.is_empty() {
            report.malformed += 1;
            return;
        }
        if !is_english(lang) {
            report.non_english += 1;
            return;
        }
        if is_name {
            builder.add_name(subject, &text);
        } else {
            builder.add_alias(subject, &text);
        }
    })?;
    let index = builder.build();
    if index.is_empty() {
        return Err(Error::EmptyIndex(label.to_owned()));
    }
    report.records = index.len() as u64;
    Ok((index, report))
}

fn clean_title(t: &str) -> String {
    t.trim().replace('_', " ")
}

/// `"Mercury (planet)"` → `Some("Mercury")`.
fn strip_disambiguation(title: &str) -> Option<&str> {
    let body = title.strip_suffix(')')?;
    let open = body.rfind(" (")?;
    let head = body[..open].trim_end();
    (!head.is_empty()).then_some(head)
}

/// Ingest Wikipedia page titles (`page_id<TAB>title`) and redirects
/// (`redirect_title<TAB>target_title`). Underscores in titles are read as
/// spaces.
pub fn ingest_wikipedia(
    titles_path: &Path,
    redirects_path: &Path,
) -> Result<(AliasIndex, IngestReport)> {
    let titles = File::open(titles_path).map_err(|e| Error::io(titles_path, e))?;
    let redirects = File::open(redirects_path).map_err(|e| Error::io(redirects_path, e))?;
    ingest_wikipedia_readers(
        BufReader::new(titles),
        BufReader::new(redirects),
        &titles_path.display().to_string(),
        &redirects_path.display().to_string(),
    )
}

pub fn ingest_wikipedia_readers<T: BufRead, R: BufRead>(
    titles: T,
    redirects: R,
    titles_label: &str,
    redirects_label: &str,
) -> Result<(AliasIndex, IngestReport)> {
    let mut report = IngestReport::default();

    let mut pages: Vec<(String, String)> = Vec::new();
    for_each_line(titles, titles_label, &mut report, |line, report| {
        if line.trim().is_empty() {
            return;
        }
        match line.split_once('\t') {
            Some((id, title)) if !id.trim().is_empty() && !title.trim().is_empty() => {
                pages.push((id.trim().to_owned(), clean_title(title)));
            }
            _ => report.malformed += 1,
        }
    })?;

    let mut redirect_list: Vec<(String, String)> = Vec::new();
    for_each_line(redirects, redirects_label, &mut report, |line, report| {
        if line.trim().is_empty() {
            return;
        }
        match line.split_once('\t') {
            Some((from, to)) if !from.trim().is_empty() && !to.trim().is_empty() => {
                redirect_list.push((clean_title(from), clean_title(to)));
            }
            _ => report.malformed += 1,
        }
    })?;

    let redirect_map: HashMap<&str, &str> = redirect_list
        .iter()
        .map(|(f, t)| (f.as_str(), t.as_str()))
        .collect();

    // Non-redirect titles become records; first page id per title wins.
    let mut title_to_id: HashMap<&str, &str> = HashMap::new();
    let mut builder = AliasIndexBuilder::new(SourceTag::Wikipedia);
    for (id, title) in &pages {
        if redirect_map.contains_key(title.as_str()) || title_to_id.contains_key(title.as_str()) {
            continue;
        }
        title_to_id.insert(title, id);
        builder.add_name(id, title);
        if let Some(short) = strip_disambiguation(title) {
            builder.add_alias(id, short);
        }
    }

    for (from, to) in &redirect_list {
        let target = match title_to_id.get(to.as_str()) {
            Some(id) => Some(*id),
            None => match redirect_map.get(to.as_str()) {
                // one extra hop through a redirect that points at a page
                Some(next) => match title_to_id.get(next) {
                    Some(id) => Some(*id),
                    None => {
                        report.unresolved_chains += 1;
                        None
                    }
                },
                None => {
                    report.dangling_redirects += 1;
                    None
                }
            },
        };
        if let Some(id) = target {
            builder.add_alias(id, from);
            if let Some(short) = strip_disambiguation(from) {
                builder.add_alias(id, short);
            }
        }
    }

    let index = builder.build();
    report.records = index.len() as u64;
    Ok((index, report))
}
