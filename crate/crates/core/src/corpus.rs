//! Time-sliced corpora, the common vocabulary and part-of-speech statistics.
//!
//! A snapshot stores its tokens as dense type ids into a per-snapshot
//! lexicon, grouped into documents (one per input line). Tagged snapshots
//! carry a parallel stream of tag ids.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Marker for tokens that have no vocabulary id.
pub const OOV: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SnapshotLabel {
    pub label: String,
    pub index: usize,
}

impl SnapshotLabel {
    pub fn new(label: impl Into<String>, index: usize) -> Self {
        SnapshotLabel {
            label: label.into(),
            index,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Plain,
    /// `token_TAG`, split on the final underscore.
    Tagged,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadOptions {
    pub lowercase: bool,
}

/// String interner used for both token types and tags.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Lexicon {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Lexicon {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        id
    }

    fn get(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }
}

/// One time slice of the corpus. Tagged snapshots are snapshots whose tag
/// stream is present; every token then has exactly one non-empty tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusSnapshot {
    label: SnapshotLabel,
    types: Lexicon,
    tokens: Vec<u32>,
    doc_ends: Vec<usize>,
    tags: Option<TagStream>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct TagStream {
    lexicon: Lexicon,
    tokens: Vec<u32>,
}

impl CorpusSnapshot {
    pub fn from_documents<D, T>(label: SnapshotLabel, docs: D) -> Self
    where
        D: IntoIterator,
        D::Item: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        let mut snapshot = CorpusSnapshot {
            label,
            types: Lexicon::default(),
            tokens: Vec::new(),
            doc_ends: Vec::new(),
            tags: None,
        };
        for doc in docs {
            for token in doc {
                let id = snapshot.types.intern(token.as_ref());
                snapshot.tokens.push(id);
            }
            snapshot.doc_ends.push(snapshot.tokens.len());
        }
        snapshot
    }

    /// Builds a tagged snapshot from `(token, tag)` documents.
    pub fn from_tagged_documents<D, T, G>(label: SnapshotLabel, docs: D) -> Result<Self>
    where
        D: IntoIterator,
        D::Item: IntoIterator<Item = (T, G)>,
        T: AsRef<str>,
        G: AsRef<str>,
    {
        let mut snapshot = CorpusSnapshot {
            label,
            types: Lexicon::default(),
            tokens: Vec::new(),
            doc_ends: Vec::new(),
            tags: None,
        };
        let mut tags = TagStream {
            lexicon: Lexicon::default(),
            tokens: Vec::new(),
        };
        for doc in docs {
            for (token, tag) in doc {
                let tag = tag.as_ref();
                if tag.is_empty() {
                    return Err(Error::InvalidArgument(format!(
                        "token {:?} has an empty tag",
                        token.as_ref()
                    )));
                }
                snapshot.tokens.push(snapshot.types.intern(token.as_ref()));
                tags.tokens.push(tags.lexicon.intern(tag));
            }
            snapshot.doc_ends.push(snapshot.tokens.len());
        }
        snapshot.tags = Some(tags);
        Ok(snapshot)
    }

    pub fn parse(text: &str, format: Format, label: SnapshotLabel, options: &LoadOptions) -> Result<Self> {
        Self::parse_with_origin(text, format, label, options, Path::new("<memory>"))
    }

    fn parse_with_origin(
        text: &str,
        format: Format,
        label: SnapshotLabel,
        options: &LoadOptions,
        origin: &Path,
    ) -> Result<Self> {
        let normalize = |s: &str| -> String {
            if options.lowercase {
                s.to_lowercase()
            } else {
                s.to_owned()
            }
        };
        match format {
            Format::Plain => Ok(Self::from_documents(
                label,
                text.lines()
                    .map(|line| line.split_whitespace().map(normalize).collect::<Vec<_>>()),
            )),
            Format::Tagged => {
                let mut docs = Vec::new();
                for (lineno, line) in text.lines().enumerate() {
                    let mut doc = Vec::new();
                    for raw in line.split_whitespace() {
                        let (token, tag) = split_tagged(raw).ok_or_else(|| Error::Parse {
                            path: origin.to_path_buf(),
                            line: lineno + 1,
                            message: format!("token {raw:?} is not of the form word_TAG"),
                        })?;
                        doc.push((normalize(token), tag.to_owned()));
                    }
                    docs.push(doc);
                }
                Self::from_tagged_documents(label, docs)
            }
        }
    }

    pub fn label(&self) -> &SnapshotLabel {
        &self.label
    }

    pub fn set_label(&mut self, label: SnapshotLabel) {
        self.label = label;
    }

    /// |C_t|, counting every token including out-of-vocabulary ones.
    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn document_count(&self) -> usize {
        self.doc_ends.len()
    }

    pub fn is_tagged(&self) -> bool {
        self.tags.is_some()
    }

    /// Documents as slices of snapshot-local type ids.
    pub fn documents(&self) -> impl Iterator<Item = &[u32]> + '_ {
        let starts = std::iter::once(0).chain(self.doc_ends.iter().copied());
        starts
            .zip(self.doc_ends.iter().copied())
            .map(move |(a, b)| &self.tokens[a..b])
    }

    /// Documents as surface strings.
    pub fn documents_str(&self) -> impl Iterator<Item = Vec<&str>> + '_ {
        self.documents()
            .map(move |doc| doc.iter().map(|&t| self.type_name(t)).collect())
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> + '_ {
        self.tokens.iter().map(move |&t| self.type_name(t))
    }

    /// Tags in token order, if the snapshot is tagged.
    pub fn tags(&self) -> Option<impl Iterator<Item = &str> + '_> {
        self.tags
            .as_ref()
            .map(|tags| tags.tokens.iter().map(move |&t| tags.lexicon.names[t as usize].as_str()))
    }

    /// Writes one document per line in the format it was parsed from:
    /// `token_TAG` when tagged, bare tokens otherwise.
    pub fn write_text<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut tags = self.tags();
        for doc in self.documents_str() {
            for (i, token) in doc.iter().enumerate() {
                if i > 0 {
                    out.write_all(b" ")?;
                }
                out.write_all(token.as_bytes())?;
                if let Some(tag) = tags.as_mut().and_then(Iterator::next) {
                    write!(out, "_{tag}")?;
                }
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn type_count(&self) -> usize {
        self.types.names.len()
    }

    pub fn type_name(&self, id: u32) -> &str {
        &self.types.names[id as usize]
    }

    pub fn type_id(&self, word: &str) -> Option<u32> {
        self.types.get(word)
    }

    /// Occurrence count per local type id.
    pub fn type_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.types.names.len()];
        for &t in &self.tokens {
            counts[t as usize] += 1;
        }
        counts
    }

    pub fn count(&self, word: &str) -> u64 {
        match self.type_id(word) {
            Some(id) => self.tokens.iter().filter(|&&t| t == id).count() as u64,
            None => 0,
        }
    }

    /// Replaces occurrences of `donor` by `receptor` wherever `decide`
    /// returns true; `decide` is called once per donor occurrence, in
    /// token order. In tagged snapshots the replaced token takes
    /// `receptor_tag`, which is required. Returns the number replaced.
    pub fn replace_occurrences(
        &mut self,
        donor: &str,
        receptor: &str,
        receptor_tag: Option<&str>,
        mut decide: impl FnMut() -> bool,
    ) -> Result<usize> {
        let Some(donor_id) = self.type_id(donor) else {
            return Ok(0);
        };
        let tag_id = match (&mut self.tags, receptor_tag) {
            (Some(tags), Some(tag)) => Some(tags.lexicon.intern(tag)),
            (Some(_), None) => {
                return Err(Error::InvalidArgument(format!(
                    "tagged snapshot {:?} needs a tag for receptor {receptor:?}",
                    self.label.label
                )))
            }
            (None, _) => None,
        };
        let receptor_id = self.types.intern(receptor);
        let mut replaced = 0;
        for (pos, token) in self.tokens.iter_mut().enumerate() {
            if *token == donor_id && decide() {
                *token = receptor_id;
                if let (Some(tags), Some(tag)) = (self.tags.as_mut(), tag_id) {
                    tags.tokens[pos] = tag;
                }
                replaced += 1;
            }
        }
        Ok(replaced)
    }
}

fn split_tagged(raw: &str) -> Option<(&str, &str)> {
    let (token, tag) = raw.rsplit_once('_')?;
    if token.is_empty() || tag.is_empty() {
        return None;
    }
    Some((token, tag))
}

/// Loads one snapshot, labelled with the file stem and index 0.
pub fn load_snapshot(path: &Path, format: Format, options: &LoadOptions) -> Result<CorpusSnapshot> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    CorpusSnapshot::parse_with_origin(&text, format, SnapshotLabel::new(stem, 0), options, path)
}

/// Ordered snapshots with unique labels and contiguous indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemporalCorpus {
    snapshots: Vec<CorpusSnapshot>,
}

impl TemporalCorpus {
    /// Takes snapshots in temporal order and renumbers their indices.
    pub fn new(mut snapshots: Vec<CorpusSnapshot>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::NoSnapshots);
        }
        let mut seen = HashSet::new();
        for (index, snapshot) in snapshots.iter_mut().enumerate() {
            if !seen.insert(snapshot.label.label.clone()) {
                return Err(Error::DuplicateLabel(snapshot.label.label.clone()));
            }
            snapshot.label.index = index;
        }
        Ok(TemporalCorpus { snapshots })
    }

    /// Loads every snapshot listed in a `label<TAB>path` manifest. Relative
    /// paths resolve against the manifest's directory.
    pub fn load_manifest(manifest: &Path, format: Format, options: &LoadOptions) -> Result<Self> {
        let entries = read_manifest(manifest)?;
        let snapshots = entries
            .into_iter()
            .enumerate()
            .map(|(index, (label, path))| {
                let mut snapshot = load_snapshot(&path, format, options)?;
                snapshot.set_label(SnapshotLabel::new(label, index));
                Ok(snapshot)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(snapshots)
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshots(&self) -> &[CorpusSnapshot] {
        &self.snapshots
    }

    pub fn snapshot(&self, index: usize) -> &CorpusSnapshot {
        &self.snapshots[index]
    }

    pub fn snapshot_mut(&mut self, index: usize) -> &mut CorpusSnapshot {
        &mut self.snapshots[index]
    }

    pub fn labels(&self) -> Vec<SnapshotLabel> {
        self.snapshots.iter().map(|s| s.label.clone()).collect()
    }

    pub fn is_tagged(&self) -> bool {
        self.snapshots.iter().all(CorpusSnapshot::is_tagged)
    }
}

/// Parses a snapshot manifest into `(label, resolved path)` pairs.
pub fn read_manifest(manifest: &Path) -> Result<Vec<(String, PathBuf)>> {
    let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (label, path) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: manifest.to_path_buf(),
            line: lineno + 1,
            message: "expected label<TAB>path".into(),
        })?;
        let path = Path::new(path.trim());
        let resolved = if path.is_absolute() {
            path.to_path_buf()
        } else {
            base.join(path)
        };
        entries.push((label.trim().to_owned(), resolved));
    }
    if entries.is_empty() {
        return Err(Error::NoSnapshots);
    }
    Ok(entries)
}

/// Words tracked across all snapshots, with per-snapshot counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    ids: HashMap<String, u32>,
    /// `counts[word * n_snapshots + t]`
    counts: Vec<u64>,
    n_snapshots: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from explicit words and their per-snapshot counts.
    pub fn from_counts(entries: Vec<(String, Vec<u64>)>) -> Result<Self> {
        let n_snapshots = entries.first().map_or(0, |(_, c)| c.len());
        let mut words = Vec::with_capacity(entries.len());
        let mut ids = HashMap::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len() * n_snapshots);
        for (word, c) in entries {
            if c.len() != n_snapshots {
                return Err(Error::DimensionMismatch {
                    expected: n_snapshots,
                    found: c.len(),
                });
            }
            if ids.insert(word.clone(), words.len() as u32).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate word {word:?}")));
            }
            words.push(word);
            counts.extend(c);
        }
        Ok(Vocabulary {
            words,
            ids,
            counts,
            n_snapshots,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn snapshot_count(&self) -> usize {
        self.n_snapshots
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.ids.get(word).copied()
    }

    pub fn require(&self, word: &str) -> Result<u32> {
        self.id(word).ok_or_else(|| Error::UnknownWord(word.to_owned()))
    }

    pub fn count(&self, id: u32, snapshot: usize) -> u64 {
        self.counts[id as usize * self.n_snapshots + snapshot]
    }

    /// Counts of every word in one snapshot, by word id.
    pub fn snapshot_counts(&self, snapshot: usize) -> Vec<u64> {
        (0..self.words.len())
            .map(|w| self.counts[w * self.n_snapshots + snapshot])
            .collect()
    }

    /// Maps a snapshot's tokens to vocabulary ids, `OOV` for untracked words.
    pub fn encode(&self, snapshot: &CorpusSnapshot) -> EncodedSnapshot {
        let lookup: Vec<u32> = snapshot
            .types
            .names
            .iter()
            .map(|name| self.id(name).unwrap_or(OOV))
            .collect();
        EncodedSnapshot {
            tokens: snapshot.tokens.iter().map(|&t| lookup[t as usize]).collect(),
            doc_ends: snapshot.doc_ends.clone(),
        }
    }
}

/// Token stream in vocabulary ids, document boundaries preserved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedSnapshot {
    pub tokens: Vec<u32>,
    pub doc_ends: Vec<usize>,
}

impl EncodedSnapshot {
    pub fn documents(&self) -> impl Iterator<Item = &[u32]> + '_ {
        let starts = std::iter::once(0).chain(self.doc_ends.iter().copied());
        starts
            .zip(self.doc_ends.iter().copied())
            .map(move |(a, b)| &self.tokens[a..b])
    }

    pub fn in_vocabulary_count(&self) -> usize {
        self.tokens.iter().filter(|&&t| t != OOV).count()
    }
}

/// Intersects the snapshot dictionaries: a word is kept iff it occurs at
/// least `min_count` times in every snapshot. Ids are assigned by
/// descending total count, then lexicographically.
pub fn build_common_vocabulary(corpus: &TemporalCorpus, min_count: u64) -> Result<Vocabulary> {
    if min_count == 0 {
        return Err(Error::InvalidArgument("min_count must be positive".into()));
    }
    let n = corpus.len();
    let per_snapshot: Vec<(HashMap<&str, u64>, &CorpusSnapshot)> = corpus
        .snapshots()
        .iter()
        .map(|s| {
            let counts = s.type_counts();
            let map = s
                .types
                .names
                .iter()
                .zip(counts)
                .map(|(w, c)| (w.as_str(), c))
                .collect();
            (map, s)
        })
        .collect();

    let (first, _) = &per_snapshot[0];
    let mut entries: Vec<(String, Vec<u64>)> = Vec::new();
    for (&word, &c0) in first {
        if c0 < min_count {
            continue;
        }
        let mut counts = Vec::with_capacity(n);
        counts.push(c0);
        let mut keep = true;
        for (map, _) in &per_snapshot[1..] {
            match map.get(word) {
                Some(&c) if c >= min_count => counts.push(c),
                _ => {
                    keep = false;
                    break;
                }
            }
        }
        if keep {
            entries.push((word.to_owned(), counts));
        }
    }
    if entries.is_empty() {
        return Err(Error::EmptyIntersection { min_count });
    }
    entries.sort_by(|(wa, ca), (wb, cb)| {
        let ta: u64 = ca.iter().sum();
        let tb: u64 = cb.iter().sum();
        tb.cmp(&ta).then_with(|| wa.cmp(wb))
    });
    Vocabulary::from_counts(entries)
}

/// Maximum-likelihood distribution over part-of-speech tags.
#[derive(Clone, Debug, PartialEq)]
pub struct PosDistribution {
    probs: BTreeMap<String, f64>,
}

impl PosDistribution {
    /// Normalizes non-negative weights; rejects empty or all-zero input.
    pub fn from_weights<I, S>(weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut probs = BTreeMap::new();
        for (tag, w) in weights {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidArgument(format!("invalid tag weight {w}")));
            }
            *probs.entry(tag.into()).or_insert(0.0) += w;
        }
        let total: f64 = probs.values().sum();
        if probs.is_empty() || total <= 0.0 {
            return Err(Error::InvalidArgument("empty tag distribution".into()));
        }
        for p in probs.values_mut() {
            *p /= total;
        }
        Ok(PosDistribution { probs })
    }

    pub fn prob(&self, tag: &str) -> f64 {
        self.probs.get(tag).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.probs.iter().map(|(t, &p)| (t.as_str(), p))
    }

    /// Most probable tag; ties go to the lexicographically smallest tag.
    pub fn modal_tag(&self) -> &str {
        let mut best: Option<(&str, f64)> = None;
        for (tag, p) in self.iter() {
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((tag, p));
            }
        }
        best.map(|(t, _)| t).unwrap_or("")
    }
}

/// Distribution of tags observed with `word` in a tagged snapshot.
pub fn pos_distribution(snapshot: &CorpusSnapshot, word: &str) -> Result<PosDistribution> {
    let tags = snapshot
        .tags
        .as_ref()
        .ok_or_else(|| Error::NotTagged(snapshot.label.label.clone()))?;
    let absent = || Error::WordAbsent {
        word: word.to_owned(),
        snapshot: snapshot.label.label.clone(),
    };
    let id = snapshot.type_id(word).ok_or_else(absent)?;
    let mut counts = vec![0u64; tags.lexicon.names.len()];
    for (&t, &g) in snapshot.tokens.iter().zip(&tags.tokens) {
        if t == id {
            counts[g as usize] += 1;
        }
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(absent());
    }
    PosDistribution::from_weights(
        counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(g, &c)| (tags.lexicon.names[g].clone(), c as f64)),
    )
}

/// Tag distributions of every vocabulary word in one pass over a snapshot.
pub fn pos_distributions(snapshot: &CorpusSnapshot, vocab: &Vocabulary) -> Result<Vec<PosDistribution>> {
    let tags = snapshot
        .tags
        .as_ref()
        .ok_or_else(|| Error::NotTagged(snapshot.label.label.clone()))?;
    let n_tags = tags.lexicon.names.len();
    let encoded = vocab.encode(snapshot);
    let mut counts = vec![0u64; vocab.len() * n_tags];
    for (&w, &g) in encoded.tokens.iter().zip(&tags.tokens) {
        if w != OOV {
            counts[w as usize * n_tags + g as usize] += 1;
        }
    }
    (0..vocab.len())
        .map(|w| {
            let row = &counts[w * n_tags..(w + 1) * n_tags];
            if row.iter().all(|&c| c == 0) {
                return Err(Error::WordAbsent {
                    word: vocab.word(w as u32).to_owned(),
                    snapshot: snapshot.label.label.clone(),
                });
            }
            PosDistribution::from_weights(
                row.iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(g, &c)| (tags.lexicon.names[g].clone(), c as f64)),
            )
        })
        .collect()
}
