//! Corpus ingestion: vocabulary construction, windowed co-occurrence
//! counting, and artificial polysemous words built by merging two tokens.
//!
//! Input is pre-tokenized whitespace-separated text, one document per line;
//! tokenization and markup stripping are upstream concerns.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Magic header of the binary co-occurrence format.
pub const COOC_MAGIC: &[u8; 8] = b"COOC0001";

pub type WordId = u32;

/// Ordered vocabulary with counts and frequency ranks.
///
/// Words are stored in rank order: index 0 is the most frequent word, ties
/// broken lexicographically, so a word's index *is* its rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, WordId>,
}

impl Vocabulary {
    pub fn from_counts(mut items: Vec<(String, u64)>) -> Self {
        items.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut index = HashMap::with_capacity(items.len());
        let mut words = Vec::with_capacity(items.len());
        let mut counts = Vec::with_capacity(items.len());
        for (i, (w, c)) in items.into_iter().enumerate() {
            index.insert(w.clone(), i as WordId);
            words.push(w);
            counts.push(c);
        }
        Vocabulary {
            words,
            counts,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<WordId> {
        self.index.get(word).copied()
    }

    pub fn require(&self, word: &str) -> Result<WordId> {
        self.id(word)
            .ok_or_else(|| Error::MissingWord(word.to_string()))
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn count(&self, id: WordId) -> u64 {
        self.counts[id as usize]
    }

    /// Frequency rank, 0-based; identical to the storage index.
    pub fn rank(&self, id: WordId) -> usize {
        id as usize
    }

    pub fn total_tokens(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Empirical unigram probability Pr[w].
    pub fn probability(&self, id: WordId) -> f64 {
        self.counts[id as usize] as f64 / self.total_tokens() as f64
    }

    pub fn write_tsv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        for (w, c) in self.words.iter().zip(&self.counts) {
            writeln!(out, "{w}\t{c}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_tsv<R: Read>(input: R) -> Result<Self> {
        let mut items = Vec::new();
        for (lineno, line) in BufReader::new(input).lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (w, c) = line.split_once('\t').ok_or(Error::Format {
                what: "vocabulary tsv",
                line: lineno + 1,
                detail: "expected word<TAB>count".into(),
            })?;
            let c: u64 = c.parse().map_err(|e| Error::Format {
                what: "vocabulary tsv",
                line: lineno + 1,
                detail: format!("bad count: {e}"),
            })?;
            items.push((w.to_string(), c));
        }
        Ok(Vocabulary::from_counts(items))
    }
}

/// Sparse symmetric co-occurrence counts, one entry per unordered pair.
///
/// Counts are `f64` because merging redistributes mass fractionally in
/// principle; raw counting always produces integers.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceStore {
    /// Keyed by (min, max) word id.
    entries: HashMap<(WordId, WordId), f64>,
    window: usize,
    total_pairs: f64,
}

impl CooccurrenceStore {
    pub fn new(window: usize) -> Self {
        CooccurrenceStore {
            entries: HashMap::new(),
            window,
            total_pairs: 0.0,
        }
    }

    fn key(i: WordId, j: WordId) -> (WordId, WordId) {
        if i <= j {
            (i, j)
        } else {
            (j, i)
        }
    }

    pub fn add(&mut self, i: WordId, j: WordId, count: f64) {
        *self.entries.entry(Self::key(i, j)).or_insert(0.0) += count;
        self.total_pairs += count;
    }

    pub fn get(&self, i: WordId, j: WordId) -> f64 {
        self.entries.get(&Self::key(i, j)).copied().unwrap_or(0.0)
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn total_pairs(&self) -> f64 {
        self.total_pairs
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    /// Entries in deterministic (sorted key) order.
    pub fn sorted_entries(&self) -> Vec<((WordId, WordId), f64)> {
        let mut v: Vec<_> = self.entries.iter().map(|(&k, &c)| (k, c)).collect();
        v.sort_by_key(|&(k, _)| k);
        v
    }

    /// All co-occurrence partners of `w` with counts, sorted by partner id.
    /// The self-pair (w, w) is included when present.
    pub fn row(&self, w: WordId) -> Vec<(WordId, f64)> {
        let mut out: Vec<(WordId, f64)> = self
            .entries
            .iter()
            .filter_map(|(&(i, j), &c)| {
                if i == w {
                    Some((j, c))
                } else if j == w {
                    Some((i, c))
                } else {
                    None
                }
            })
            .collect();
        out.sort_by_key(|&(j, _)| j);
        out
    }

    /// Joint probability Pr[w1, w2] under the empirical pair distribution.
    pub fn joint_probability(&self, i: WordId, j: WordId) -> f64 {
        self.get(i, j) / self.total_pairs
    }

    pub fn write_text<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        for ((i, j), c) in self.sorted_entries() {
            writeln!(out, "{i} {j} {c}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_text<R: Read>(input: R, window: usize) -> Result<Self> {
        let mut store = CooccurrenceStore::new(window);
        for (lineno, line) in BufReader::new(input).lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |s: Option<&str>, detail: &str| -> Result<String> {
                s.map(str::to_string).ok_or(Error::Format {
                    what: "cooccurrence text",
                    line: lineno + 1,
                    detail: detail.into(),
                })
            };
            let i: WordId = parse(parts.next(), "missing i")?.parse().map_err(|e| {
                Error::Format {
                    what: "cooccurrence text",
                    line: lineno + 1,
                    detail: format!("bad index: {e}"),
                }
            })?;
            let j: WordId = parse(parts.next(), "missing j")?.parse().map_err(|e| {
                Error::Format {
                    what: "cooccurrence text",
                    line: lineno + 1,
                    detail: format!("bad index: {e}"),
                }
            })?;
            let c: f64 = parse(parts.next(), "missing count")?.parse().map_err(|e| {
                Error::Format {
                    what: "cooccurrence text",
                    line: lineno + 1,
                    detail: format!("bad count: {e}"),
                }
            })?;
            store.add(i, j, c);
        }
        Ok(store)
    }

    /// Little-endian binary format: `COOC0001` magic then (u32, u32, f64)
    /// records in sorted key order.
    pub fn write_binary<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        out.write_all(COOC_MAGIC)?;
        for ((i, j), c) in self.sorted_entries() {
            out.write_all(&i.to_le_bytes())?;
            out.write_all(&j.to_le_bytes())?;
            out.write_all(&c.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R, window: usize) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != COOC_MAGIC {
            return Err(Error::Format {
                what: "cooccurrence binary",
                line: 0,
                detail: "bad magic header".into(),
            });
        }
        let mut store = CooccurrenceStore::new(window);
        let mut rec = [0u8; 16];
        loop {
            match input.read_exact(&mut rec) {
                Ok(()) => {
                    let i = u32::from_le_bytes(rec[0..4].try_into().unwrap());
                    let j = u32::from_le_bytes(rec[4..8].try_into().unwrap());
                    let c = f64::from_le_bytes(rec[8..16].try_into().unwrap());
                    store.add(i, j, c);
                }
                Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
                Err(e) => return Err(e.into()),
            }
        }
        Ok(store)
    }
}

/// A request to merge two vocabulary words into one artificial token.
#[derive(Debug, Clone)]
pub struct MergeSpec {
    pub word_a: String,
    pub word_b: String,
    pub merged_token: String,
}

impl MergeSpec {
    /// `word_a` is normalized to the more frequent side so that
    /// `ratio_r >= 1` by convention.
    pub fn new(vocab: &Vocabulary, a: &str, b: &str, merged_token: &str) -> Result<Self> {
        if a == b {
            return Err(Error::Config(format!("cannot merge {a} with itself")));
        }
        let ia = vocab.require(a)?;
        let ib = vocab.require(b)?;
        if vocab.id(merged_token).is_some() {
            return Err(Error::TokenCollision(merged_token.to_string()));
        }
        let (wa, wb) = if vocab.count(ia) >= vocab.count(ib) {
            (a, b)
        } else {
            (b, a)
        };
        Ok(MergeSpec {
            word_a: wa.to_string(),
            word_b: wb.to_string(),
            merged_token: merged_token.to_string(),
        })
    }

    /// Frequency ratio Pr[word_a] / Pr[word_b] >= 1.
    pub fn ratio_r(&self, vocab: &Vocabulary) -> Result<f64> {
        let ia = vocab.require(&self.word_a)?;
        let ib = vocab.require(&self.word_b)?;
        Ok(vocab.count(ia) as f64 / vocab.count(ib) as f64)
    }
}

/// Counts tokens and keeps those occurring at least `min_count` times.
pub fn build_vocabulary<'a, I>(tokens: I, min_count: u64) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for t in tokens {
        *counts.entry(t).or_insert(0) += 1;
    }
    let items: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(w, c)| (w.to_string(), c))
        .collect();
    if items.is_empty() {
        return Err(Error::EmptyVocabulary { min_count });
    }
    Ok(Vocabulary::from_counts(items))
}

/// Builds a vocabulary from a corpus file (one document per line,
/// whitespace tokenized).
pub fn build_vocabulary_from_file(path: &Path, min_count: u64) -> Result<Vocabulary> {
    let text = std::fs::read_to_string(path)?;
    build_vocabulary(text.split_whitespace(), min_count)
}

/// Counts co-occurrences of in-vocabulary tokens within `window` positions
/// inside one token sequence, accumulating into `store`. Pairs are flat
/// (weight 1 regardless of distance); out-of-vocabulary tokens are skipped
/// but still occupy positions.
pub fn count_window(store: &mut CooccurrenceStore, vocab: &Vocabulary, tokens: &[&str]) {
    let window = store.window();
    let ids: Vec<Option<WordId>> = tokens.iter().map(|t| vocab.id(t)).collect();
    for p in 0..ids.len() {
        let Some(i) = ids[p] else { continue };
        let hi = (p + window).min(ids.len().saturating_sub(1));
        for q in (p + 1)..=hi {
            if let Some(j) = ids[q] {
                store.add(i, j, 1.0);
            }
        }
    }
}

/// Counts windowed co-occurrences over a whole token stream treated as a
/// single sequence.
pub fn count_cooccurrences(tokens: &[&str], vocab: &Vocabulary, window: usize) -> CooccurrenceStore {
    let mut store = CooccurrenceStore::new(window);
    count_window(&mut store, vocab, tokens);
    store
}

/// Counts co-occurrences over a corpus file, with windows confined to each
/// line (documents do not bleed into each other).
pub fn count_cooccurrences_from_file(
    path: &Path,
    vocab: &Vocabulary,
    window: usize,
) -> Result<CooccurrenceStore> {
    let file = std::fs::File::open(path)?;
    let mut store = CooccurrenceStore::new(window);
    for line in BufReader::new(file).lines() {
        let line = line?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        count_window(&mut store, vocab, &tokens);
    }
    Ok(store)
}

/// Merges two words into an artificial polysemous token.
///
/// The merged token's count is the sum of both counts and its co-occurrence
/// row is the entrywise sum of the two originals. Any mass the pair had with
/// each other becomes the merged word's self-count, preserving total pair
/// mass. Everything else is untouched.
pub fn merge_words(
    store: &CooccurrenceStore,
    vocab: &Vocabulary,
    spec: &MergeSpec,
) -> Result<(CooccurrenceStore, Vocabulary)> {
    let ia = vocab.require(&spec.word_a)?;
    let ib = vocab.require(&spec.word_b)?;
    if vocab.id(&spec.merged_token).is_some() {
        return Err(Error::TokenCollision(spec.merged_token.clone()));
    }

    let mut items: Vec<(String, u64)> = Vec::with_capacity(vocab.len() - 1);
    for id in 0..vocab.len() as WordId {
        if id == ia || id == ib {
            continue;
        }
        items.push((vocab.word(id).to_string(), vocab.count(id)));
    }
    items.push((
        spec.merged_token.clone(),
        vocab.count(ia) + vocab.count(ib),
    ));
    let new_vocab = Vocabulary::from_counts(items);

    let remap = |id: WordId| -> WordId {
        if id == ia || id == ib {
            new_vocab.id(&spec.merged_token).unwrap()
        } else {
            new_vocab.id(vocab.word(id)).unwrap()
        }
    };

    let mut out = CooccurrenceStore::new(store.window());
    for ((i, j), c) in store.sorted_entries() {
        out.add(remap(i), remap(j), c);
    }
    Ok((out, new_vocab))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vocabulary_counts_and_ranks() {
        let v = build_vocabulary(["a", "a", "b"], 1).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.word(0), "a");
        assert_eq!(v.count(0), 2);
        assert_eq!(v.word(1), "b");
        assert_eq!(v.rank(v.id("b").unwrap()), 1);
    }

    #[test]
    fn min_count_drops_rare_tokens() {
        let v = build_vocabulary(["a", "a", "b"], 2).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.word(0), "a");
        assert!(v.id("b").is_none());
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        let err = build_vocabulary(["a", "b"], 3).unwrap_err();
        assert!(matches!(err, Error::EmptyVocabulary { min_count: 3 }));
    }

    #[test]
    fn rank_ties_break_lexicographically() {
        let v = build_vocabulary(["z", "m", "a"], 1).unwrap();
        assert_eq!(v.words(), &["a", "m", "z"]);
    }

    #[test]
    fn window_one_adjacent_pair() {
        let v = build_vocabulary(["x", "y"], 1).unwrap();
        let s = count_cooccurrences(&["x", "y"], &v, 1);
        assert_relative_eq!(s.get(v.id("x").unwrap(), v.id("y").unwrap()), 1.0);
        assert_relative_eq!(s.total_pairs(), 1.0);
    }

    #[test]
    fn same_word_pairs_at_different_positions_count() {
        let v = build_vocabulary(["x", "y", "x"], 1).unwrap();
        let s = count_cooccurrences(&["x", "y", "x"], &v, 2);
        let x = v.id("x").unwrap();
        let y = v.id("y").unwrap();
        assert_relative_eq!(s.get(x, y), 2.0);
        assert_relative_eq!(s.get(x, x), 1.0);
    }

    /// Brute-force oracle: enumerate all position pairs directly.
    fn brute_force(tokens: &[&str], vocab: &Vocabulary, window: usize) -> CooccurrenceStore {
        let mut s = CooccurrenceStore::new(window);
        for p in 0..tokens.len() {
            for q in 0..tokens.len() {
                if q > p && q - p <= window {
                    if let (Some(i), Some(j)) = (vocab.id(tokens[p]), vocab.id(tokens[q])) {
                        s.add(i, j, 1.0);
                    }
                }
            }
        }
        s
    }

    #[test]
    fn window_counting_matches_position_pair_enumeration() {
        let v = build_vocabulary(["a", "b", "c", "a"], 1).unwrap();
        let tokens = ["a", "b", "c", "a"];
        let s = count_cooccurrences(&tokens, &v, 1);
        let o = brute_force(&tokens, &v, 1);
        assert_eq!(s.sorted_entries(), o.sorted_entries());
        let a = v.id("a").unwrap();
        let b = v.id("b").unwrap();
        let c = v.id("c").unwrap();
        assert_relative_eq!(s.get(a, b), 1.0);
        assert_relative_eq!(s.get(b, c), 1.0);
        assert_relative_eq!(s.get(c, a), 1.0);
    }

    #[test]
    fn oov_tokens_are_skipped_but_hold_positions() {
        let v = build_vocabulary(["x", "x", "y", "y"], 2).unwrap();
        // "q" is out of vocabulary; x..q..y spans 2 positions
        let s = count_cooccurrences(&["x", "q", "y"], &v, 1);
        assert_relative_eq!(s.total_pairs(), 0.0);
        let s2 = count_cooccurrences(&["x", "q", "y"], &v, 2);
        assert_relative_eq!(s2.get(v.id("x").unwrap(), v.id("y").unwrap()), 1.0);
    }

    #[test]
    fn merge_adds_rows_and_conserves_mass() {
        // a co-occurs with c 3 times, b with c twice, a with b once
        let v = build_vocabulary(
            ["a", "a", "a", "a", "b", "b", "c", "c", "c", "c", "c"],
            1,
        )
        .unwrap();
        let (a, b, c) = (v.id("a").unwrap(), v.id("b").unwrap(), v.id("c").unwrap());
        let mut s = CooccurrenceStore::new(5);
        s.add(a, c, 3.0);
        s.add(b, c, 2.0);
        s.add(a, b, 1.0);
        let spec = MergeSpec::new(&v, "a", "b", "a+b").unwrap();
        let (s2, v2) = merge_words(&s, &v, &spec).unwrap();
        let w = v2.id("a+b").unwrap();
        let c2 = v2.id("c").unwrap();
        assert_relative_eq!(s2.get(w, c2), 5.0);
        // the a-b mass became the merged self-count
        assert_relative_eq!(s2.get(w, w), 1.0);
        assert_relative_eq!(s2.total_pairs(), s.total_pairs());
        assert!(v2.id("a").is_none());
        assert!(v2.id("b").is_none());
    }

    #[test]
    fn merge_counts_and_ratio() {
        let mut toks = vec!["a"; 90];
        toks.extend(vec!["b"; 10]);
        toks.push("c");
        let v = build_vocabulary(toks.iter().copied(), 1).unwrap();
        let spec = MergeSpec::new(&v, "b", "a", "w").unwrap();
        // normalized so word_a is the frequent one
        assert_eq!(spec.word_a, "a");
        assert_relative_eq!(spec.ratio_r(&v).unwrap(), 9.0);
        let s = CooccurrenceStore::new(5);
        let (_, v2) = merge_words(&s, &v, &spec).unwrap();
        assert_eq!(v2.count(v2.id("w").unwrap()), 100);
    }

    #[test]
    fn merged_marginal_matches_frequency_identity() {
        // Pr(w) = (1+1/r) Pr(w1) = (1+r) Pr(w2)
        let mut toks = vec!["a"; 60];
        toks.extend(vec!["b"; 20]);
        toks.extend(vec!["c"; 20]);
        let v = build_vocabulary(toks.iter().copied(), 1).unwrap();
        let spec = MergeSpec::new(&v, "a", "b", "w").unwrap();
        let r = spec.ratio_r(&v).unwrap();
        let p1 = v.probability(v.id("a").unwrap());
        let p2 = v.probability(v.id("b").unwrap());
        let (_, v2) = merge_words(&CooccurrenceStore::new(5), &v, &spec).unwrap();
        let pw = v2.probability(v2.id("w").unwrap());
        assert_relative_eq!(pw, (1.0 + 1.0 / r) * p1, epsilon = 1e-12);
        assert_relative_eq!(pw, (1.0 + r) * p2, epsilon = 1e-12);
    }

    #[test]
    fn merge_disjoint_contexts_is_row_union() {
        let v = build_vocabulary(["a", "b", "c", "d", "e"], 1).unwrap();
        let id = |w: &str| v.id(w).unwrap();
        let mut s = CooccurrenceStore::new(5);
        s.add(id("a"), id("c"), 2.0);
        s.add(id("b"), id("d"), 4.0);
        s.add(id("d"), id("e"), 1.0);
        let spec = MergeSpec::new(&v, "a", "b", "ab").unwrap();
        let (s2, v2) = merge_words(&s, &v, &spec).unwrap();
        let w = v2.id("ab").unwrap();
        let row = s2.row(w);
        assert_eq!(row.len(), 2);
        assert_relative_eq!(s2.get(w, v2.id("c").unwrap()), 2.0);
        assert_relative_eq!(s2.get(w, v2.id("d").unwrap()), 4.0);
        assert_relative_eq!(s2.get(v2.id("d").unwrap(), v2.id("e").unwrap()), 1.0);
    }

    #[test]
    fn merge_rejects_colliding_token() {
        let v = build_vocabulary(["a", "b", "c"], 1).unwrap();
        assert!(matches!(
            MergeSpec::new(&v, "a", "b", "c"),
            Err(Error::TokenCollision(_))
        ));
        assert!(matches!(
            MergeSpec::new(&v, "a", "zzz", "w"),
            Err(Error::MissingWord(_))
        ));
    }

    #[test]
    fn cooc_text_and_binary_round_trip() {
        let v = build_vocabulary(["a", "b", "c", "a", "b", "a"], 1).unwrap();
        let s = count_cooccurrences(&["a", "b", "c", "a", "b", "a"], &v, 3);
        let mut text = Vec::new();
        s.write_text(&mut text).unwrap();
        let s2 = CooccurrenceStore::read_text(&text[..], s.window()).unwrap();
        assert_eq!(s.sorted_entries(), s2.sorted_entries());
        let mut bin = Vec::new();
        s.write_binary(&mut bin).unwrap();
        assert_eq!(&bin[..8], COOC_MAGIC);
        let s3 = CooccurrenceStore::read_binary(&bin[..], s.window()).unwrap();
        assert_eq!(s.sorted_entries(), s3.sorted_entries());
        assert_relative_eq!(s3.total_pairs(), s.total_pairs(), max_relative = 1e-9);
    }

    #[test]
    fn vocab_tsv_round_trip() {
        let v = build_vocabulary(["b", "a", "a", "c", "c", "c"], 1).unwrap();
        let mut buf = Vec::new();
        v.write_tsv(&mut buf).unwrap();
        let v2 = Vocabulary::read_tsv(&buf[..]).unwrap();
        assert_eq!(v, v2);
    }
}
