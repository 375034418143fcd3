//! Lossless ABC notation parsing, transformation, and serialization.
//!
//! The parser keeps every source byte: anything it does not model becomes
//! an [`TokenKind::Opaque`] token, so `serialize(parse(text))` always
//! reproduces the LF-normalized input.

mod parse;
mod transform;

pub use parse::{normalize_line_endings, parse_corpus, parse_tune};
pub(crate) use parse::{note_semitone, split_blocks};
pub use transform::{
    detect_sections, duration_sum, ensure_final_barline, notes_to_rests, split_bars,
    strip_chord_symbols, strip_decorations,
};

use crate::Dur;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AbcError {
    #[error("empty input")]
    EmptyInput,
    #[error("non-ASCII byte 0x{byte:02x} at offset {offset}")]
    NonAscii { byte: u8, offset: usize },
    #[error("unterminated chord symbol at offset {offset}")]
    UnterminatedChordSymbol { offset: usize },
    #[error("unterminated decoration at offset {offset}")]
    UnterminatedDecoration { offset: usize },
    #[error("rest duration {num}/{den} cannot be written in ABC")]
    DurationOverflow { num: i64, den: i64 },
}

/// Tag of an information field: a single ASCII letter (`X:`, `K:`, ...)
/// or a `%%`-prefixed directive name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldTag {
    Letter(char),
    Directive(String),
}

/// One `Tag:value` line (or inline `[Tag:value]` group).
///
/// `value` is verbatim source text after the colon (after the directive
/// name for `%%` lines), so serialization is exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InformationField {
    pub tag: FieldTag,
    pub value: String,
    pub inline: bool,
}

impl InformationField {
    pub fn letter(&self) -> Option<char> {
        match self.tag {
            FieldTag::Letter(c) => Some(c),
            FieldTag::Directive(_) => None,
        }
    }

    /// Renders the field as a header line, without a trailing newline.
    pub fn to_line(&self) -> String {
        match &self.tag {
            FieldTag::Letter(c) => format!("{}:{}", c, self.value),
            FieldTag::Directive(name) => format!("%%{}{}", name, self.value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BarlineStyle {
    /// `|`
    Single,
    /// `||`
    Double,
    /// `|]`
    Final,
    /// `|:`
    RepeatStart,
    /// `:|`
    RepeatEnd,
    /// `::`
    RepeatBoth,
}

impl BarlineStyle {
    pub fn text(self) -> &'static str {
        match self {
            BarlineStyle::Single => "|",
            BarlineStyle::Double => "||",
            BarlineStyle::Final => "|]",
            BarlineStyle::RepeatStart => "|:",
            BarlineStyle::RepeatEnd => ":|",
            BarlineStyle::RepeatBoth => "::",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Note {
        /// Pitch class 0-11 from the written letter and accidental
        /// (key signatures are not applied).
        pitch_class: u8,
        /// Octave relative to the `C`..`B` octave; `c` is octave 1.
        octave: i32,
        /// Duration in `L:` units.
        duration: Dur,
    },
    Rest {
        duration: Dur,
    },
    /// Double-quote delimited harmony label, e.g. `"G7"`.
    ChordSymbol,
    /// `!`-delimited decoration, e.g. `!breath!`.
    Decoration,
    Barline(BarlineStyle),
    /// A full-line field in the body or a bracketed `[K:G]` group.
    InlineField(InformationField),
    /// Verbatim source span the parser does not model.
    Opaque,
}

/// One source span of the tune body. Concatenating `text` over all body
/// tokens reproduces the source body exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BodyToken {
    pub kind: TokenKind,
    pub text: String,
}

impl BodyToken {
    pub fn is_whitespace(&self) -> bool {
        matches!(self.kind, TokenKind::Opaque) && self.text.chars().all(|c| c.is_ascii_whitespace())
    }

    /// Name of a decoration token (`!breath!` -> `breath`).
    pub fn decoration_name(&self) -> Option<&str> {
        match self.kind {
            TokenKind::Decoration => Some(self.text.trim_matches('!')),
            _ => None,
        }
    }

    /// Label of a chord symbol token (`"G7"` -> `G7`).
    pub fn chord_label(&self) -> Option<&str> {
        match self.kind {
            TokenKind::ChordSymbol => Some(self.text.trim_matches('"')),
            _ => None,
        }
    }
}

/// A parsed tune: ordered header fields plus a token-level body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tune {
    pub header: Vec<InformationField>,
    pub body: Vec<BodyToken>,
}

impl Tune {
    /// Exact inverse of [`parse_tune`] on its image.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for field in &self.header {
            out.push_str(&field.to_line());
            out.push('\n');
        }
        for token in &self.body {
            out.push_str(&token.text);
        }
        out
    }

    /// First header field value for a letter tag, e.g. `field_value('K')`.
    pub fn field_value(&self, letter: char) -> Option<&str> {
        self.header
            .iter()
            .find(|f| f.letter() == Some(letter))
            .map(|f| f.value.as_str())
    }

    /// Body text (token concatenation) without the header.
    pub fn body_text(&self) -> String {
        self.body.iter().map(|t| t.text.as_str()).collect()
    }
}

/// Serializes a tune back to ABC text. Free-function form of
/// [`Tune::serialize`].
pub fn serialize(tune: &Tune) -> String {
    tune.serialize()
}

/// A bar: a contiguous index range of body tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bar {
    pub start: usize,
    pub end: usize,
}

impl Bar {
    pub fn tokens<'a>(&self, tune: &'a Tune) -> &'a [BodyToken] {
        &tune.body[self.start..self.end]
    }

    pub fn text(&self, tune: &Tune) -> String {
        self.tokens(tune).iter().map(|t| t.text.as_str()).collect()
    }

    /// The style of the bar's terminating barline, if any.
    pub fn closing_barline(&self, tune: &Tune) -> Option<BarlineStyle> {
        self.tokens(tune).iter().rev().find_map(|t| match t.kind {
            TokenKind::Barline(style) => Some(style),
            _ => None,
        })
    }
}

/// A section: a contiguous range of bars.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Section {
    /// Index range into the bar list returned by [`split_bars`].
    pub bar_start: usize,
    pub bar_end: usize,
    /// Token index range into the tune body.
    pub start: usize,
    pub end: usize,
}

impl Section {
    pub fn text(&self, tune: &Tune) -> String {
        tune.body[self.start..self.end]
            .iter()
            .map(|t| t.text.as_str())
            .collect()
    }
}
