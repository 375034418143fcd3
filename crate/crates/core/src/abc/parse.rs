use super::{
    AbcError, BarlineStyle, BodyToken, FieldTag, InformationField, TokenKind, Tune,
};
use crate::Dur;

/// CRLF and lone CR become LF. The parser and every roundtrip guarantee
/// operate on this canonical form.
pub fn normalize_line_endings(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\r' {
            if chars.peek() == Some(&'\n') {
                chars.next();
            }
            out.push('\n');
        } else {
            out.push(c);
        }
    }
    out
}

/// Splits corpus text into tune blocks separated by one or more blank lines.
pub fn split_blocks(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current = String::new();
    for line in text.split_inclusive('\n') {
        if line.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
        } else {
            current.push_str(line);
        }
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    blocks
}

/// Parses every blank-line-separated tune in a corpus file.
pub fn parse_corpus(text: &str) -> Result<Vec<Tune>, AbcError> {
    split_blocks(&normalize_line_endings(text))
        .iter()
        .map(|block| parse_tune(block))
        .collect()
}

fn check_ascii(text: &str) -> Result<(), AbcError> {
    if let Some((offset, byte)) = text.bytes().enumerate().find(|(_, b)| !b.is_ascii()) {
        return Err(AbcError::NonAscii { byte, offset });
    }
    Ok(())
}

fn is_field_line(line: &str) -> bool {
    let bytes = line.as_bytes();
    line.starts_with("%%")
        || (bytes.len() >= 2 && bytes[0].is_ascii_alphabetic() && bytes[1] == b':')
}

fn parse_field(line: &str, inline: bool) -> InformationField {
    if let Some(rest) = line.strip_prefix("%%") {
        let name_len = rest
            .find(|c: char| c.is_ascii_whitespace())
            .unwrap_or(rest.len());
        InformationField {
            tag: FieldTag::Directive(rest[..name_len].to_string()),
            value: rest[name_len..].to_string(),
            inline,
        }
    } else {
        InformationField {
            tag: FieldTag::Letter(line.chars().next().unwrap()),
            value: line[2..].to_string(),
            inline,
        }
    }
}

/// Parses one ABC tune. The result serializes back to the LF-normalized
/// input byte for byte; unrecognized syntax is kept as opaque spans.
pub fn parse_tune(text: &str) -> Result<Tune, AbcError> {
    let text = normalize_line_endings(text);
    if text.trim().is_empty() {
        return Err(AbcError::EmptyInput);
    }
    check_ascii(&text)?;

    let mut header = Vec::new();
    let mut body_start = 0usize;
    for line in text.split_inclusive('\n') {
        // Only newline-terminated field lines join the header; a final
        // unterminated line stays in the body so serialization is exact.
        let terminated = line.ends_with('\n');
        let content = line.strip_suffix('\n').unwrap_or(line);
        if terminated && is_field_line(content) {
            let field = parse_field(content, false);
            let is_key = field.letter() == Some('K');
            header.push(field);
            body_start += line.len();
            if is_key {
                break;
            }
        } else {
            break;
        }
    }

    let body = tokenize_body(&text[body_start..], body_start)?;
    Ok(Tune { header, body })
}

fn tokenize_body(body: &str, base_offset: usize) -> Result<Vec<BodyToken>, AbcError> {
    let mut tokens = Vec::new();
    let mut offset = base_offset;
    for line in body.split_inclusive('\n') {
        let content = line.strip_suffix('\n').unwrap_or(line);
        if is_field_line(content) {
            // Whole-line field inside the body (e.g. a mid-tune K: change
            // or a w: lyric line). The token text keeps the newline.
            tokens.push(BodyToken {
                kind: TokenKind::InlineField(parse_field(content, false)),
                text: line.to_string(),
            });
        } else {
            tokenize_line(line, offset, &mut tokens)?;
        }
        offset += line.len();
    }
    Ok(tokens)
}

fn tokenize_line(
    line: &str,
    base_offset: usize,
    tokens: &mut Vec<BodyToken>,
) -> Result<(), AbcError> {
    let bytes = line.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b'\n' => {
                tokens.push(opaque("\n"));
                i += 1;
            }
            b' ' | b'\t' => {
                let start = i;
                while i < bytes.len() && (bytes[i] == b' ' || bytes[i] == b'\t') {
                    i += 1;
                }
                tokens.push(opaque(&line[start..i]));
            }
            b'"' => {
                let close = line[i + 1..].find('"').ok_or(AbcError::UnterminatedChordSymbol {
                    offset: base_offset + i,
                })?;
                let end = i + 1 + close + 1;
                tokens.push(BodyToken {
                    kind: TokenKind::ChordSymbol,
                    text: line[i..end].to_string(),
                });
                i = end;
            }
            b'!' => {
                let close = line[i + 1..].find('!').ok_or(AbcError::UnterminatedDecoration {
                    offset: base_offset + i,
                })?;
                let end = i + 1 + close + 1;
                tokens.push(BodyToken {
                    kind: TokenKind::Decoration,
                    text: line[i..end].to_string(),
                });
                i = end;
            }
            b'%' => {
                // Comment to end of line (the newline stays its own token).
                let end = line[i..].find('\n').map(|n| i + n).unwrap_or(line.len());
                tokens.push(opaque(&line[i..end]));
                i = end;
            }
            b'{' => {
                // Grace-note group is opaque as a whole.
                let end = line[i..]
                    .find('}')
                    .map(|n| i + n + 1)
                    .unwrap_or(line.len());
                tokens.push(opaque(&line[i..end]));
                i = end;
            }
            b'|' | b':' => {
                if let Some((style, len)) = scan_barline(&bytes[i..]) {
                    tokens.push(BodyToken {
                        kind: TokenKind::Barline(style),
                        text: line[i..i + len].to_string(),
                    });
                    i += len;
                } else {
                    tokens.push(opaque(&line[i..i + 1]));
                    i += 1;
                }
            }
            b'[' => {
                i += scan_bracket(line, i, tokens);
            }
            b'(' => {
                // Tuplet marker `(3` is kept with its digits; a plain
                // slur-open is a single opaque char.
                let mut end = i + 1;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
                tokens.push(opaque(&line[i..end]));
                i = end;
            }
            b'z' | b'x' => {
                let (len, duration) = scan_duration(&bytes[i + 1..]);
                tokens.push(BodyToken {
                    kind: TokenKind::Rest { duration },
                    text: line[i..i + 1 + len].to_string(),
                });
                i += 1 + len;
            }
            _ => {
                if let Some((len, pitch_class, octave, duration)) = scan_note(&bytes[i..]) {
                    tokens.push(BodyToken {
                        kind: TokenKind::Note {
                            pitch_class,
                            octave,
                            duration,
                        },
                        text: line[i..i + len].to_string(),
                    });
                    i += len;
                } else {
                    tokens.push(opaque(&line[i..i + 1]));
                    i += 1;
                }
            }
        }
    }
    Ok(())
}

fn opaque(text: &str) -> BodyToken {
    BodyToken {
        kind: TokenKind::Opaque,
        text: text.to_string(),
    }
}

fn scan_barline(bytes: &[u8]) -> Option<(BarlineStyle, usize)> {
    if bytes.starts_with(b"|]") {
        Some((BarlineStyle::Final, 2))
    } else if bytes.starts_with(b"||") {
        Some((BarlineStyle::Double, 2))
    } else if bytes.starts_with(b"|:") {
        Some((BarlineStyle::RepeatStart, 2))
    } else if bytes.starts_with(b":|") {
        Some((BarlineStyle::RepeatEnd, 2))
    } else if bytes.starts_with(b"::") {
        Some((BarlineStyle::RepeatBoth, 2))
    } else if bytes.first() == Some(&b'|') {
        Some((BarlineStyle::Single, 1))
    } else {
        None
    }
}

/// `[K:G]` becomes an inline field; `[1`/`[2` volta markers and bare `[`
/// stay opaque. Returns consumed length.
fn scan_bracket(line: &str, i: usize, tokens: &mut Vec<BodyToken>) -> usize {
    let bytes = line.as_bytes();
    let rest = &bytes[i + 1..];
    let looks_like_field = rest.len() >= 2 && rest[0].is_ascii_alphabetic() && rest[1] == b':';
    if looks_like_field {
        if let Some(close) = line[i..].find(']') {
            let inner = &line[i + 1..i + close];
            tokens.push(BodyToken {
                kind: TokenKind::InlineField(parse_field(inner, true)),
                text: line[i..i + close + 1].to_string(),
            });
            return close + 1;
        }
    }
    let mut end = i + 1;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    tokens.push(opaque(&line[i..end]));
    end - i
}

const LETTER_PITCH: [(u8, u8); 7] = [
    (b'C', 0),
    (b'D', 2),
    (b'E', 4),
    (b'F', 5),
    (b'G', 7),
    (b'A', 9),
    (b'B', 11),
];

fn letter_base(b: u8) -> Option<u8> {
    let upper = b.to_ascii_uppercase();
    LETTER_PITCH.iter().find(|(l, _)| *l == upper).map(|(_, p)| *p)
}

fn scan_note(bytes: &[u8]) -> Option<(usize, u8, i32, Dur)> {
    let mut i = 0;
    let mut accidental: i32 = 0;
    match bytes.first()? {
        b'^' => {
            i += 1;
            accidental = 1;
            if bytes.get(1) == Some(&b'^') {
                i += 1;
                accidental = 2;
            }
        }
        b'_' => {
            i += 1;
            accidental = -1;
            if bytes.get(1) == Some(&b'_') {
                i += 1;
                accidental = -2;
            }
        }
        b'=' => i += 1,
        _ => {}
    }
    let letter = *bytes.get(i)?;
    let base = letter_base(letter)?;
    i += 1;
    let mut octave: i32 = if letter.is_ascii_lowercase() { 1 } else { 0 };
    while let Some(&mark) = bytes.get(i) {
        match mark {
            b'\'' => octave += 1,
            b',' => octave -= 1,
            _ => break,
        }
        i += 1;
    }
    let (dur_len, duration) = scan_duration(&bytes[i..]);
    i += dur_len;
    let pitch_class = (base as i32 + accidental).rem_euclid(12) as u8;
    Some((i, pitch_class, octave, duration))
}

/// Parses an ABC duration suffix: digits, `/`, `/digits`, `//`, `3/2`, ...
/// Returns consumed length and the duration in `L:` units.
fn scan_duration(bytes: &[u8]) -> (usize, Dur) {
    let mut i = 0;
    let mut num: i64 = 1;
    if bytes.first().is_some_and(|b| b.is_ascii_digit()) {
        num = 0;
        while let Some(&b) = bytes.get(i) {
            if !b.is_ascii_digit() {
                break;
            }
            num = num.saturating_mul(10) + i64::from(b - b'0');
            i += 1;
        }
    }
    let mut den: i64 = 1;
    while bytes.get(i) == Some(&b'/') {
        i += 1;
        if bytes.get(i).is_some_and(|b| b.is_ascii_digit()) {
            let mut explicit: i64 = 0;
            while let Some(&b) = bytes.get(i) {
                if !b.is_ascii_digit() {
                    break;
                }
                explicit = explicit.saturating_mul(10) + i64::from(b - b'0');
                i += 1;
            }
            den = den.saturating_mul(explicit.max(1));
            break;
        }
        den = den.saturating_mul(2);
    }
    (i, Dur::new(num.max(0), den.max(1)))
}

/// Absolute semitone value of a note token relative to `C` in the middle
/// octave, derived from the written letter, accidental, and octave marks.
pub(crate) fn note_semitone(text: &str) -> Option<i32> {
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut accidental: i32 = 0;
    match bytes.first()? {
        b'^' => {
            i += 1;
            accidental = 1;
            if bytes.get(1) == Some(&b'^') {
                i += 1;
                accidental = 2;
            }
        }
        b'_' => {
            i += 1;
            accidental = -1;
            if bytes.get(1) == Some(&b'_') {
                i += 1;
                accidental = -2;
            }
        }
        b'=' => i += 1,
        _ => {}
    }
    let letter = *bytes.get(i)?;
    let base = letter_base(letter)? as i32;
    i += 1;
    let mut octave: i32 = if letter.is_ascii_lowercase() { 1 } else { 0 };
    while let Some(&mark) = bytes.get(i) {
        match mark {
            b'\'' => octave += 1,
            b',' => octave -= 1,
            _ => break,
        }
        i += 1;
    }
    Some(octave * 12 + base + accidental)
}

/// Renders a duration suffix in `L:` units: `1 -> ""`, `4 -> "4"`,
/// `1/2 -> "/2"`, `3/2 -> "3/2"`.
pub(crate) fn duration_suffix(d: Dur) -> Result<String, AbcError> {
    let (num, den) = (*d.numer(), *d.denom());
    if num <= 0 || den <= 0 {
        return Err(AbcError::DurationOverflow { num, den });
    }
    Ok(if den == 1 {
        if num == 1 {
            String::new()
        } else {
            num.to_string()
        }
    } else if num == 1 {
        format!("/{den}")
    } else {
        format!("{num}/{den}")
    })
}
