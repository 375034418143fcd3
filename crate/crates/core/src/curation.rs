//! Corpus curation: turns a directory of raw `.abc` files into a clean,
//! deduplicated melody corpus.
//!
//! Per-tune steps, in order: copyright filter, ASCII transliteration,
//! parse, non-musical field removal, leading/trailing rest-bar trim,
//! final-barline fix, and the minimum-bar filter. Deduplication is a
//! final ordered reduction. The bar-count filter runs after trimming so
//! every surviving tune still has at least `MIN_BARS` sounding bars.

use crate::abc::{
    ensure_final_barline, parse_tune, split_bars, split_blocks, BodyToken, TokenKind, Tune,
};
use crate::par;
use serde::Serialize;
use std::collections::HashSet;
use std::path::Path;
use thiserror::Error;

pub const MIN_BARS: usize = 8;

#[derive(Debug, Error)]
pub enum CurationError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("input directory {0} contains no .abc files")]
    NoInputFiles(String),
}

/// Per-step counters for one curation run. The identity
/// `output_count == input_count - rejections - deduplicated` always
/// holds.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CurationReport {
    pub input_count: usize,
    pub skipped_non_abc_files: usize,
    pub rejected_copyright: usize,
    pub rejected_non_ascii: usize,
    pub rejected_unparseable: usize,
    pub rejected_short: usize,
    pub deduplicated: usize,
    pub output_count: usize,
}

impl CurationReport {
    pub fn rejections(&self) -> usize {
        self.rejected_copyright
            + self.rejected_non_ascii
            + self.rejected_unparseable
            + self.rejected_short
    }
}

/// Reject when any text contains a case-insensitive "copyright" or the
/// (c)-in-a-circle character. Plain substring match: song titles that
/// merely mention the word are rejected too.
pub fn has_copyright_marker(raw: &str) -> bool {
    raw.to_ascii_lowercase().contains("copyright") || raw.contains('\u{a9}')
}

/// Tune-level form of the copyright filter; `true` means keep.
pub fn filter_copyright(tune: &Tune) -> bool {
    !has_copyright_marker(&tune.serialize())
}

/// `true` means keep: the tune has at least `min_bars` bars.
pub fn filter_short(tune: &Tune, min_bars: usize) -> bool {
    split_bars(tune).len() >= min_bars
}

/// Maps common accented Latin characters and typographic punctuation to
/// single ASCII characters. `Err` carries the first unmappable char.
pub fn transliterate_to_ascii(text: &str) -> Result<String, char> {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if c.is_ascii() {
            out.push(c);
            continue;
        }
        match ascii_substitute(c) {
            Some(sub) => out.push(sub),
            None => return Err(c),
        }
    }
    Ok(out)
}

fn ascii_substitute(c: char) -> Option<char> {
    Some(match c {
        'á' | 'à' | 'â' | 'ä' | 'ã' | 'å' => 'a',
        'Á' | 'À' | 'Â' | 'Ä' | 'Ã' | 'Å' => 'A',
        'é' | 'è' | 'ê' | 'ë' => 'e',
        'É' | 'È' | 'Ê' | 'Ë' => 'E',
        'í' | 'ì' | 'î' | 'ï' => 'i',
        'Í' | 'Ì' | 'Î' | 'Ï' => 'I',
        'ó' | 'ò' | 'ô' | 'ö' | 'õ' | 'ø' => 'o',
        'Ó' | 'Ò' | 'Ô' | 'Ö' | 'Õ' | 'Ø' => 'O',
        'ú' | 'ù' | 'û' | 'ü' => 'u',
        'Ú' | 'Ù' | 'Û' | 'Ü' => 'U',
        'ý' | 'ÿ' => 'y',
        'ñ' => 'n',
        'Ñ' => 'N',
        'ç' => 'c',
        'Ç' => 'C',
        'š' => 's',
        'Š' => 'S',
        'ž' => 'z',
        'Ž' => 'Z',
        '’' | '‘' | 'ʼ' | '´' => '\'',
        '“' | '”' | '„' => '"',
        '–' | '—' | '―' | '‐' => '-',
        '\u{a0}' => ' ',
        _ => return None,
    })
}

/// Header tags that always survive non-musical cleanup.
const MUSICAL_TAGS: [char; 9] = ['X', 'T', 'C', 'O', 'K', 'L', 'M', 'Q', 'R'];

fn is_url_or_email(value: &str) -> bool {
    let lower = value.to_ascii_lowercase();
    if lower.contains("http://") || lower.contains("https://") || lower.contains("www.") {
        return true;
    }
    match value.find('@') {
        Some(at) => value[at + 1..].contains('.'),
        None => false,
    }
}

fn keep_header_field(letter: Option<char>, value: &str) -> bool {
    match letter {
        Some('w') | Some('W') => false,
        Some(c) if MUSICAL_TAGS.contains(&c) => true,
        Some(_) => !is_url_or_email(value),
        None => true, // %% directives stay
    }
}

/// Removes lyric (`w:`/`W:`) fields and non-musical header fields whose
/// value looks like a URL or an e-mail address.
pub fn strip_nonmusical(tune: &Tune) -> Tune {
    let header = tune
        .header
        .iter()
        .filter(|f| keep_header_field(f.letter(), &f.value))
        .cloned()
        .collect();
    let body = tune
        .body
        .iter()
        .filter(|t| match &t.kind {
            TokenKind::InlineField(f) if !f.inline => {
                !matches!(f.letter(), Some('w') | Some('W'))
            }
            _ => true,
        })
        .cloned()
        .collect();
    Tune { header, body }
}

fn is_rest_bar(tokens: &[BodyToken]) -> bool {
    let mut has_rest = false;
    for t in tokens {
        match t.kind {
            TokenKind::Rest { .. } => has_rest = true,
            TokenKind::Barline(_) => {}
            _ if t.is_whitespace() => {}
            _ => return false,
        }
    }
    has_rest
}

/// Removes leading and trailing bars of complete rest. When trailing
/// bars go, the last kept bar inherits the original closing barline.
pub fn trim_rest_bars(tune: &Tune) -> Tune {
    let bars = split_bars(tune);
    if bars.is_empty() {
        return tune.clone();
    }
    let mut first = 0;
    while first < bars.len() && is_rest_bar(bars[first].tokens(tune)) {
        first += 1;
    }
    let mut last = bars.len();
    while last > first && is_rest_bar(bars[last - 1].tokens(tune)) {
        last -= 1;
    }
    if first == 0 && last == bars.len() {
        return tune.clone();
    }

    let mut body: Vec<BodyToken> = if first < last {
        tune.body[bars[first].start..bars[last - 1].end].to_vec()
    } else {
        Vec::new()
    };
    // A trimmed leading bar may leave stray whitespace or a line break
    // at the front; dropping it keeps the serialized tune free of blank
    // lines.
    while body.first().is_some_and(|t| t.is_whitespace()) {
        body.remove(0);
    }
    if last != bars.len() {
        let original_final = tune
            .body
            .iter()
            .rev()
            .find(|t| matches!(t.kind, TokenKind::Barline(_)))
            .cloned();
        if let (Some(closing), Some(pos)) = (
            original_final,
            body.iter()
                .rposition(|t| matches!(t.kind, TokenKind::Barline(_))),
        ) {
            body[pos] = closing;
        }
    }
    Tune {
        header: tune.header.clone(),
        body,
    }
}

/// Duplicate key: whitespace-squashed body text plus the K:, L:, and M:
/// header values. Titles and other metadata do not distinguish tunes;
/// a transposition (different K:) does.
pub fn dedup_key(tune: &Tune) -> String {
    let body: String = tune
        .body_text()
        .chars()
        .filter(|c| !c.is_ascii_whitespace())
        .collect();
    format!(
        "K={}|L={}|M={}|{}",
        tune.field_value('K').unwrap_or(""),
        tune.field_value('L').unwrap_or(""),
        tune.field_value('M').unwrap_or(""),
        body
    )
}

/// Keeps the first occurrence of each duplicate key, in input order.
/// Returns the survivors and the number removed.
pub fn deduplicate(corpus: Vec<Tune>) -> (Vec<Tune>, usize) {
    let mut seen = HashSet::new();
    let mut kept = Vec::with_capacity(corpus.len());
    let mut removed = 0;
    for tune in corpus {
        if seen.insert(dedup_key(&tune)) {
            kept.push(tune);
        } else {
            removed += 1;
        }
    }
    (kept, removed)
}

enum StepOutcome {
    Clean(Tune),
    Copyright,
    NonAscii,
    Unparseable,
    Short,
}

fn curate_block(raw: &str) -> StepOutcome {
    if has_copyright_marker(raw) {
        return StepOutcome::Copyright;
    }
    let ascii = match transliterate_to_ascii(raw) {
        Ok(t) => t,
        Err(_) => return StepOutcome::NonAscii,
    };
    let tune = match parse_tune(&ascii) {
        Ok(t) => t,
        Err(_) => return StepOutcome::Unparseable,
    };
    let tune = strip_nonmusical(&tune);
    let tune = trim_rest_bars(&tune);
    let tune = ensure_final_barline(&tune);
    if !filter_short(&tune, MIN_BARS) {
        return StepOutcome::Short;
    }
    StepOutcome::Clean(tune)
}

/// Runs the full pipeline over raw tune texts. Per-tune steps map in
/// parallel; deduplication is an ordered sequential reduction, so the
/// result is deterministic.
pub fn curate_texts(blocks: &[String]) -> (Vec<Tune>, CurationReport) {
    let mut report = CurationReport {
        input_count: blocks.len(),
        ..CurationReport::default()
    };
    let outcomes = par::map_ordered(blocks, |raw| curate_block(raw));
    let mut clean = Vec::new();
    for outcome in outcomes {
        match outcome {
            StepOutcome::Clean(tune) => clean.push(tune),
            StepOutcome::Copyright => report.rejected_copyright += 1,
            StepOutcome::NonAscii => report.rejected_non_ascii += 1,
            StepOutcome::Unparseable => report.rejected_unparseable += 1,
            StepOutcome::Short => report.rejected_short += 1,
        }
    }
    let (kept, removed) = deduplicate(clean);
    report.deduplicated = removed;
    report.output_count = kept.len();
    (kept, report)
}

/// Curates every `.abc` file in a directory (sorted file order).
/// Non-`.abc` files are skipped and counted.
pub fn curate_dir(dir: &Path) -> Result<(Vec<Tune>, CurationReport), CurationError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|source| CurationError::Io {
            path: dir.display().to_string(),
            source,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();

    let mut blocks = Vec::new();
    let mut skipped = 0;
    for path in &paths {
        if path.extension().and_then(|e| e.to_str()) == Some("abc") {
            let text = std::fs::read_to_string(path).map_err(|source| CurationError::Io {
                path: path.display().to_string(),
                source,
            })?;
            blocks.extend(split_blocks(&crate::abc::normalize_line_endings(&text)));
        } else {
            skipped += 1;
        }
    }
    if blocks.is_empty() && skipped == paths.len() && !paths.is_empty() {
        return Err(CurationError::NoInputFiles(dir.display().to_string()));
    }
    let (corpus, mut report) = curate_texts(&blocks);
    report.skipped_non_abc_files = skipped;
    Ok((corpus, report))
}

/// Writes tunes as a corpus file: blank-line separated, each tune
/// ending with a newline.
pub fn write_corpus(tunes: &[Tune]) -> String {
    let mut out = String::new();
    for (i, tune) in tunes.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let text = tune.serialize();
        out.push_str(&text);
        if !text.ends_with('\n') {
            out.push('\n');
        }
    }
    out
}
