//! Bar patching: score text to and from patch sequences and multi-hot
//! encodings.
//!
//! A patch is one information-field line or one bar (the terminating
//! barline characters are the patch suffix). Units longer than the patch
//! size split into consecutive chunks. `depatchify(patchify(t)) == t`
//! for every ASCII text within the size bounds.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatchError {
    #[error("sequence needs {patches} patches but the limit is {limit}")]
    TooLong { patches: usize, limit: usize },
    #[error("byte 0x{byte:02x} at offset {offset} is outside the vocabulary")]
    NonAscii { byte: u8, offset: usize },
}

/// The 128-entry character vocabulary: ids 0-2 are pad/bos/eos, ids
/// 3-127 are the ASCII characters with the same code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vocabulary;

impl Vocabulary {
    pub const SIZE: usize = 128;
    pub const PAD: u8 = 0;
    pub const BOS: u8 = 1;
    pub const EOS: u8 = 2;

    pub fn encode_char(byte: u8, offset: usize) -> Result<u8, PatchError> {
        if (3..128).contains(&byte) {
            Ok(byte)
        } else {
            Err(PatchError::NonAscii { byte, offset })
        }
    }

    /// The character for a non-special id; `None` for pad/bos/eos.
    pub fn decode(id: u8) -> Option<char> {
        if (3..128).contains(&id) {
            Some(id as char)
        } else {
            None
        }
    }

    pub fn is_special(id: u8) -> bool {
        id < 3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchOrigin {
    InformationField,
    Bar,
    Special,
}

/// One bar patch: at most `S` character ids plus its origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BarPatch {
    pub chars: Vec<u8>,
    pub origin: PatchOrigin,
}

impl BarPatch {
    pub fn text(&self) -> String {
        self.chars
            .iter()
            .filter_map(|&id| Vocabulary::decode(id))
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PatchSequence {
    pub patches: Vec<BarPatch>,
}

impl PatchSequence {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// Debug dump: one patch per line, padded to `s` characters with `␀`.
    pub fn dump(&self, s: usize) -> String {
        let mut out = String::new();
        for patch in &self.patches {
            for &id in &patch.chars {
                match Vocabulary::decode(id) {
                    Some('\n') => out.push_str("\\n"),
                    Some(c) => out.push(c),
                    None => out.push('␀'),
                }
            }
            for _ in patch.chars.len()..s {
                out.push('␀');
            }
            out.push('\n');
        }
        out
    }
}

fn is_field_line(line: &str) -> bool {
    let bytes = line.as_bytes();
    line.starts_with("%%")
        || (bytes.len() >= 2 && bytes[0].is_ascii_alphabetic() && bytes[1] == b':')
}

/// Cuts one non-field line into units ending after each barline.
fn split_line_at_barlines(line: &str) -> Vec<&str> {
    let bytes = line.as_bytes();
    let mut units = Vec::new();
    let mut start = 0;
    let mut i = 0;
    let mut in_chord = false;
    let mut in_decoration = false;
    while i < bytes.len() {
        match bytes[i] {
            b'"' if !in_decoration => {
                in_chord = !in_chord;
                i += 1;
            }
            b'!' if !in_chord => {
                in_decoration = !in_decoration;
                i += 1;
            }
            b'|' | b':' if !in_chord && !in_decoration => {
                let two = &bytes[i..(i + 2).min(bytes.len())];
                let len = match two {
                    b"|]" | b"||" | b"|:" | b":|" | b"::" => 2,
                    _ if bytes[i] == b'|' => 1,
                    _ => {
                        i += 1;
                        continue;
                    }
                };
                i += len;
                units.push(&line[start..i]);
                start = i;
            }
            _ => i += 1,
        }
    }
    if start < line.len() {
        units.push(&line[start..]);
    }
    units
}

/// Splits score text into bar patches: one per information-field line,
/// one per bar (split after each barline), whitespace-only remainders
/// merged into the preceding patch, then over-long units chunked to `s`
/// characters. Errors when more than `l` patches are needed.
pub fn patchify(text: &str, s: usize, l: usize) -> Result<PatchSequence, PatchError> {
    assert!(s >= 1 && l >= 1, "patch size and length must be positive");
    let mut units: Vec<(String, PatchOrigin)> = Vec::new();
    for line in text.split_inclusive('\n') {
        let content = line.strip_suffix('\n').unwrap_or(line);
        if is_field_line(content) {
            units.push((line.to_string(), PatchOrigin::InformationField));
        } else {
            let cuts = split_line_at_barlines(content);
            let trailing_newline = line.len() != content.len();
            match cuts.len() {
                0 => {
                    if trailing_newline {
                        units.push(("\n".to_string(), PatchOrigin::Bar));
                    }
                }
                n => {
                    for (k, cut) in cuts.iter().enumerate() {
                        let mut unit = cut.to_string();
                        if k + 1 == n && trailing_newline {
                            unit.push('\n');
                        }
                        units.push((unit, PatchOrigin::Bar));
                    }
                }
            }
        }
    }

    // A whitespace-only bar unit (a trailing newline after the final
    // barline, stray blank lines) joins the previous patch.
    let mut merged: Vec<(String, PatchOrigin)> = Vec::new();
    for (unit, origin) in units {
        let blank = origin == PatchOrigin::Bar && unit.chars().all(|c| c.is_ascii_whitespace());
        match merged.last_mut() {
            Some((prev, _)) if blank => prev.push_str(&unit),
            _ => merged.push((unit, origin)),
        }
    }

    let mut offset = 0;
    let mut patches = Vec::new();
    for (unit, origin) in merged {
        let bytes = unit.as_bytes();
        for chunk in bytes.chunks(s) {
            let mut chars = Vec::with_capacity(chunk.len());
            for (k, &byte) in chunk.iter().enumerate() {
                chars.push(Vocabulary::encode_char(byte, offset + k)?);
            }
            patches.push(BarPatch { chars, origin });
        }
        offset += bytes.len();
    }

    if patches.len() > l {
        return Err(PatchError::TooLong {
            patches: patches.len(),
            limit: l,
        });
    }
    Ok(PatchSequence { patches })
}

/// Concatenates patch characters, dropping pad/bos/eos ids. Exact
/// inverse of [`patchify`] on its image.
pub fn depatchify(seq: &PatchSequence) -> String {
    seq.patches.iter().map(|p| p.text()).collect()
}

/// Multi-hot patch encoding: `s` stacked one-hot rows over the 128-entry
/// vocabulary, rows beyond the patch one-hot at pad. Returned row-major
/// as `s * 128` values.
pub fn encode_patch(patch: &BarPatch, s: usize) -> Vec<f64> {
    assert!(patch.chars.len() <= s, "patch longer than patch size");
    let v = Vocabulary::SIZE;
    let mut matrix = vec![0.0; s * v];
    for row in 0..s {
        let id = patch.chars.get(row).copied().unwrap_or(Vocabulary::PAD);
        matrix[row * v + id as usize] = 1.0;
    }
    matrix
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn patchify_example() {
        let seq = patchify("X:1\nL:1/8\nK:C\nCDEF GABc |]\n", 64, 256).unwrap();
        let texts: Vec<String> = seq.patches.iter().map(|p| p.text()).collect();
        assert_eq!(texts, vec!["X:1\n", "L:1/8\n", "K:C\n", "CDEF GABc |]\n"]);
        assert_eq!(seq.patches[0].origin, PatchOrigin::InformationField);
        assert_eq!(seq.patches[3].origin, PatchOrigin::Bar);
    }

    #[test]
    fn empty_text_is_empty_sequence() {
        assert!(patchify("", 64, 256).unwrap().is_empty());
    }

    #[test]
    fn long_bar_chunks() {
        let bar = "CDEFGABc".repeat(9); // 72 chars, no barline
        let bar = &bar[..70];
        let seq = patchify(bar, 64, 256).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.patches[0].chars.len(), 64);
        assert_eq!(seq.patches[1].chars.len(), 6);
        assert_eq!(depatchify(&seq), bar);
    }

    #[test]
    fn too_long_errors() {
        let text = "C|".repeat(20);
        assert!(matches!(
            patchify(&text, 4, 8),
            Err(PatchError::TooLong { .. })
        ));
    }

    #[test]
    fn non_ascii_rejected() {
        assert!(matches!(
            patchify("K:C\u{e9}\n", 64, 256),
            Err(PatchError::NonAscii { .. })
        ));
    }

    #[test]
    fn barline_chars_stay_with_their_bar() {
        let seq = patchify("X:1\nK:C\nCDEF|GABc||cdef|]\n", 64, 256).unwrap();
        let texts: Vec<String> = seq.patches.iter().map(|p| p.text()).collect();
        assert_eq!(texts, vec!["X:1\n", "K:C\n", "CDEF|", "GABc||", "cdef|]\n"]);
    }

    #[test]
    fn barlines_inside_chords_do_not_split() {
        let seq = patchify("\"C|F\"CDEF|]\n", 64, 256).unwrap();
        assert_eq!(seq.patches[0].text(), "\"C|F\"CDEF|]\n");
    }

    #[test]
    fn encode_patch_rows() {
        let seq = patchify("K:C\n", 64, 256).unwrap();
        let matrix = encode_patch(&seq.patches[0], 64);
        let v = Vocabulary::SIZE;
        for (row, expected) in [(0, b'K'), (1, b':'), (2, b'C'), (3, b'\n')] {
            assert_eq!(matrix[row * v + expected as usize], 1.0);
        }
        for row in 4..64 {
            assert_eq!(matrix[row * v + Vocabulary::PAD as usize], 1.0);
        }
        for row in 0..64 {
            let sum: f64 = matrix[row * v..(row + 1) * v].iter().sum();
            assert_eq!(sum, 1.0, "row {row} must be one-hot");
        }
    }

    #[test]
    fn empty_patch_is_all_pad() {
        let patch = BarPatch {
            chars: Vec::new(),
            origin: PatchOrigin::Special,
        };
        let matrix = encode_patch(&patch, 8);
        for row in 0..8 {
            assert_eq!(matrix[row * Vocabulary::SIZE], 1.0);
        }
    }

    #[test]
    fn vocabulary_is_bijective_above_specials() {
        for id in 3u8..128 {
            let c = Vocabulary::decode(id).unwrap();
            assert_eq!(Vocabulary::encode_char(c as u8, 0).unwrap(), id);
        }
        assert_eq!(Vocabulary::decode(Vocabulary::PAD), None);
        assert_eq!(Vocabulary::decode(Vocabulary::BOS), None);
        assert_eq!(Vocabulary::decode(Vocabulary::EOS), None);
    }

    fn ascii_text() -> impl Strategy<Value = String> {
        prop::collection::vec(3u8..128, 0..200)
            .prop_map(|bytes| bytes.into_iter().map(|b| b as char).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn roundtrip_random_ascii(text in ascii_text()) {
            let seq = patchify(&text, 16, 1024).unwrap();
            prop_assert_eq!(depatchify(&seq), text);
        }
    }
}
