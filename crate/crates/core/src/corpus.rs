//! Wordlist and frequency-table ingestion.
//!
//! Two TSV layouts are understood, both UTF-8 with a header row, `#` comment
//! lines, and blank lines ignored:
//!
//! ```text
//! language<TAB>word          # word = space-separated segment tokens
//! language<TAB>segment<TAB>count
//! ```
//!
//! Segment tokens are opaque strings; no phonemic normalization happens
//! here. Each lexeme contributes its segments exactly once, so the counts
//! are lexical (type) frequencies, not running-text frequencies.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// One language's lexicon: an ordered list of words, each a nonempty list
/// of segment tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wordlist {
    pub language_id: String,
    pub words: Vec<Vec<String>>,
}

/// Per-language segment counts in canonical order: count descending, then
/// label ascending. The canonical order makes serialization round-trips
/// byte-stable regardless of input row order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    language_id: String,
    entries: Vec<(String, u64)>,
}

impl FrequencyTable {
    /// Builds a table from raw `(label, count)` pairs, sorting them into
    /// canonical order. Labels must be unique, nonempty, and free of tabs
    /// and newlines (they go straight into TSV); counts must be positive.
    pub fn new(language_id: impl Into<String>, entries: Vec<(String, u64)>) -> Result<Self> {
        let language_id = language_id.into();
        validate_field(&language_id, "language id")?;
        if entries.is_empty() {
            return Err(Error::domain("frequency table must have at least one entry"));
        }
        let mut entries = entries;
        for (label, count) in &entries {
            validate_field(label, "segment label")?;
            if *count == 0 {
                return Err(Error::domain(format!("segment {label:?} has count 0")));
            }
        }
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut labels: Vec<&str> = entries.iter().map(|(l, _)| l.as_str()).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::domain(format!("duplicate segment label {:?}", w[0])));
        }
        Ok(FrequencyTable { language_id, entries })
    }

    pub fn language_id(&self) -> &str {
        &self.language_id
    }

    /// Entries in canonical order.
    pub fn entries(&self) -> &[(String, u64)] {
        &self.entries
    }

    pub fn n_types(&self) -> usize {
        self.entries.len()
    }

    pub fn n_tokens(&self) -> u64 {
        self.entries.iter().map(|(_, c)| c).sum()
    }

    /// The per-type counts in canonical order — the observations the
    /// distribution fitters consume.
    pub fn counts(&self) -> Vec<u64> {
        self.entries.iter().map(|(_, c)| *c).collect()
    }
}

fn validate_field(s: &str, what: &str) -> Result<()> {
    if s.is_empty() {
        return Err(Error::domain(format!("empty {what}")));
    }
    if s.contains(['\t', '\n', '\r']) {
        return Err(Error::domain(format!(
            "{what} {s:?} contains tab or newline"
        )));
    }
    Ok(())
}

/// Yields `(line_number, content)` for rows that carry data, skipping blank
/// lines and `#` comments, with CRLF endings tolerated.
fn content_lines(input: impl BufRead) -> impl Iterator<Item = std::io::Result<(usize, String)>> {
    input.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(e)),
        Ok(mut l) => {
            if l.ends_with('\r') {
                l.pop();
            }
            if l.trim().is_empty() || l.starts_with('#') {
                None
            } else {
                Some(Ok((i + 1, l)))
            }
        }
    })
}

fn io_err(e: std::io::Error) -> Error {
    Error::domain(format!("read failed: {e}"))
}

fn split_row(line: &str, lineno: usize, want: usize) -> Result<Vec<&str>> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != want {
        return Err(Error::parse(
            lineno,
            format!("expected {want} tab-separated fields, got {}", fields.len()),
        ));
    }
    Ok(fields)
}

fn check_header(fields: &[&str], expected: &[&str], lineno: usize) -> Result<()> {
    if fields != expected {
        return Err(Error::parse(
            lineno,
            format!("expected header {:?}, got {:?}", expected.join("\t"), fields.join("\t")),
        ));
    }
    Ok(())
}

/// Parses the two-column wordlist layout into one [`Wordlist`] per distinct
/// language, languages ordered by first appearance. An empty stream (no
/// header, no rows) parses as an empty list.
pub fn parse_wordlist(input: impl BufRead) -> Result<Vec<Wordlist>> {
    let mut lines = content_lines(input);
    let Some(header) = lines.next() else {
        return Ok(Vec::new());
    };
    let (lineno, header) = header.map_err(io_err)?;
    check_header(&split_row(&header, lineno, 2)?, &["language", "word"], lineno)?;

    let mut lists: Vec<Wordlist> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for line in lines {
        let (lineno, line) = line.map_err(io_err)?;
        let fields = split_row(&line, lineno, 2)?;
        let (language, word) = (fields[0], fields[1]);
        if language.is_empty() {
            return Err(Error::parse(lineno, "empty language id"));
        }
        let tokens: Vec<String> = word.split_whitespace().map(String::from).collect();
        if tokens.is_empty() {
            return Err(Error::parse(lineno, "word has no segment tokens"));
        }
        let slot = *index.entry(language.to_string()).or_insert_with(|| {
            lists.push(Wordlist {
                language_id: language.to_string(),
                words: Vec::new(),
            });
            lists.len() - 1
        });
        lists[slot].words.push(tokens);
    }
    Ok(lists)
}

/// Counts every segment token across the lexicon; each word contributes
/// once (duplicated word rows are deliberately not collapsed — any
/// deduplication is upstream policy).
pub fn count_segments(wordlist: &Wordlist) -> Result<FrequencyTable> {
    if wordlist.words.is_empty() {
        return Err(Error::domain(format!(
            "wordlist for {:?} has no words",
            wordlist.language_id
        )));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for word in &wordlist.words {
        for token in word {
            *counts.entry(token.as_str()).or_insert(0) += 1;
        }
    }
    FrequencyTable::new(
        wordlist.language_id.clone(),
        counts.into_iter().map(|(l, c)| (l.to_string(), c)).collect(),
    )
}

/// Keeps only wordlists with at least `threshold` words (the sample
/// inclusion rule; 250 is the conventional cutoff). Order-preserving and
/// idempotent; a threshold of 0 keeps everything.
pub fn filter_min_words(lists: Vec<Wordlist>, threshold: usize) -> Vec<Wordlist> {
    lists.into_iter().filter(|l| l.words.len() >= threshold).collect()
}

/// Parses the three-column frequency layout into one table per language,
/// grouped by first appearance even when languages interleave.
pub fn parse_frequency_table(input: impl BufRead) -> Result<Vec<FrequencyTable>> {
    let mut lines = content_lines(input);
    let Some(header) = lines.next() else {
        return Ok(Vec::new());
    };
    let (lineno, header) = header.map_err(io_err)?;
    check_header(
        &split_row(&header, lineno, 3)?,
        &["language", "segment", "count"],
        lineno,
    )?;

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<(String, u64)>> = HashMap::new();
    for line in lines {
        let (lineno, line) = line.map_err(io_err)?;
        let fields = split_row(&line, lineno, 3)?;
        let (language, segment, count) = (fields[0], fields[1], fields[2]);
        if language.is_empty() {
            return Err(Error::parse(lineno, "empty language id"));
        }
        if segment.is_empty() {
            return Err(Error::parse(lineno, "empty segment label"));
        }
        let count: u64 = count.parse().map_err(|_| {
            Error::parse(lineno, format!("count {count:?} is not a positive integer"))
        })?;
        if count == 0 {
            return Err(Error::parse(lineno, "count must be at least 1"));
        }
        let group = groups.entry(language.to_string()).or_insert_with(|| {
            order.push(language.to_string());
            Vec::new()
        });
        if group.iter().any(|(l, _)| l == segment) {
            return Err(Error::parse(
                lineno,
                format!("duplicate segment {segment:?} for language {language:?}"),
            ));
        }
        group.push((segment.to_string(), count));
    }
    order
        .into_iter()
        .map(|id| {
            let entries = groups.remove(&id).expect("grouped above");
            FrequencyTable::new(id, entries)
        })
        .collect()
}

/// Writes tables back out in the three-column layout, entries in canonical
/// order, so `parse_frequency_table` round-trips to identical tables.
pub fn write_frequency_table(tables: &[FrequencyTable], mut out: impl Write) -> Result<()> {
    let werr = |e: std::io::Error| Error::domain(format!("write failed: {e}"));
    writeln!(out, "language\tsegment\tcount").map_err(werr)?;
    for table in tables {
        for (label, count) in &table.entries {
            writeln!(out, "{}\t{label}\t{count}", table.language_id).map_err(werr)?;
        }
    }
    Ok(())
}
