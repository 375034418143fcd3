//! Builders for the seven score-to-score task datasets.
//!
//! Every instance is an (input, output) pair of ABC texts. The input
//! always starts with a `%%<task>` identifier line; most outputs start
//! with an `E:` field giving the 0-10 edit-distance similarity between
//! the input and output scores.

use crate::abc::{
    detect_sections, notes_to_rests, strip_chord_symbols, strip_decorations, BarlineStyle,
    BodyToken, FieldTag, InformationField, TokenKind, Tune,
};
use crate::par;
use crate::patching::patchify;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskId {
    Cataloging,
    Generation,
    Harmonization,
    Melodization,
    Segmentation,
    Transcription,
    Variation,
}

pub const ALL_TASKS: [TaskId; 7] = [
    TaskId::Cataloging,
    TaskId::Generation,
    TaskId::Harmonization,
    TaskId::Melodization,
    TaskId::Segmentation,
    TaskId::Transcription,
    TaskId::Variation,
];

impl TaskId {
    pub fn name(self) -> &'static str {
        match self {
            TaskId::Cataloging => "cataloging",
            TaskId::Generation => "generation",
            TaskId::Harmonization => "harmonization",
            TaskId::Melodization => "melodization",
            TaskId::Segmentation => "segmentation",
            TaskId::Transcription => "transcription",
            TaskId::Variation => "variation",
        }
    }

    /// The `%%<task>` line that opens every instance input.
    pub fn identifier_line(self) -> String {
        format!("%%{}\n", self.name())
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ALL_TASKS.iter().copied().find(|t| t.name() == name)
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One score-to-score training pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub task: TaskId,
    pub input: String,
    pub output: String,
}

/// Character-level Levenshtein distance (two-row dynamic program).
pub fn levenshtein(a: &str, b: &str) -> usize {
    let (a, b) = (a.as_bytes(), b.as_bytes());
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut current: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut previous_diag = current[0];
        current[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let substitution = previous_diag + usize::from(ca != cb);
            previous_diag = current[j + 1];
            current[j + 1] = substitution.min(previous_diag + 1).min(current[j] + 1);
        }
    }
    current[b.len()]
}

/// Edit-distance similarity on the 0-10 scale: 10 is an exact match, 0
/// no match at all. Computes `round(10 * (1 - lev/maxlen))` half-up in
/// integer arithmetic; two empty strings score 10.
pub fn similarity_e(a: &str, b: &str) -> u8 {
    let max_len = a.len().max(b.len());
    if max_len == 0 {
        return 10;
    }
    let lev = levenshtein(a, b);
    let scaled = 10 * (max_len - lev);
    ((2 * scaled + max_len) / (2 * max_len)) as u8
}

/// Structure control codes: section count, bars per section, and the
/// pairwise section similarities in upper-triangular order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlCodes {
    pub s_count: u8,
    pub b_counts: Vec<u8>,
    pub e_sims: Vec<u8>,
}

impl ControlCodes {
    /// Renders the codes as information fields. The `E:` line is
    /// omitted for single-section tunes (no pairs).
    pub fn serialize(&self) -> String {
        let b: Vec<String> = self.b_counts.iter().map(|v| v.to_string()).collect();
        let mut out = format!("S:{}\nB:{}\n", self.s_count, b.join(","));
        if !self.e_sims.is_empty() {
            let e: Vec<String> = self.e_sims.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!("E:{}\n", e.join(",")));
        }
        out
    }

    /// Parses leading `S:`/`B:`/`E:` lines; returns the codes and the
    /// byte offset where the remaining score starts.
    pub fn parse_prefix(text: &str) -> Option<(ControlCodes, usize)> {
        let mut offset = 0;
        let mut s_count = None;
        let mut b_counts = Vec::new();
        let mut e_sims = Vec::new();
        for line in text.split_inclusive('\n') {
            let content = line.trim_end_matches('\n');
            if let Some(v) = content.strip_prefix("S:") {
                s_count = v.trim().parse::<u8>().ok();
            } else if let Some(v) = content.strip_prefix("B:") {
                b_counts = v
                    .split(',')
                    .filter_map(|x| x.trim().parse::<u8>().ok())
                    .collect();
            } else if let Some(v) = content.strip_prefix("E:") {
                e_sims = v
                    .split(',')
                    .filter_map(|x| x.trim().parse::<u8>().ok())
                    .collect();
            } else {
                break;
            }
            offset += line.len();
        }
        let s_count = s_count?;
        Some((
            ControlCodes {
                s_count,
                b_counts,
                e_sims,
            },
            offset,
        ))
    }
}

fn clamp_u8(value: usize, lo: u8, hi: u8) -> u8 {
    value.clamp(lo as usize, hi as usize) as u8
}

/// Computes S:/B:/E: structure codes for a tune: section count (capped
/// at 8), bars per section (capped at 32), and pairwise edit-distance
/// similarities of the raw section texts.
pub fn compute_control_codes(tune: &Tune) -> ControlCodes {
    let sections = detect_sections(tune);
    if sections.is_empty() {
        return ControlCodes {
            s_count: 1,
            b_counts: vec![1],
            e_sims: Vec::new(),
        };
    }
    let s_count = clamp_u8(sections.len(), 1, 8);
    let used = &sections[..s_count as usize];
    let b_counts: Vec<u8> = used
        .iter()
        .map(|s| clamp_u8(s.bar_end - s.bar_start, 1, 32))
        .collect();
    let texts: Vec<String> = used.iter().map(|s| s.text(tune)).collect();
    let mut e_sims = Vec::new();
    for i in 0..texts.len() {
        for j in i + 1..texts.len() {
            e_sims.push(similarity_e(&texts[i], &texts[j]));
        }
    }
    ControlCodes {
        s_count,
        b_counts,
        e_sims,
    }
}

fn has_chord(tune: &Tune) -> bool {
    tune.body
        .iter()
        .any(|t| matches!(t.kind, TokenKind::ChordSymbol))
}

fn has_note(tune: &Tune) -> bool {
    tune.body
        .iter()
        .any(|t| matches!(t.kind, TokenKind::Note { .. }))
}

fn has_breath(tune: &Tune) -> bool {
    tune.body
        .iter()
        .any(|t| t.decoration_name() == Some("breath"))
}

fn with_similarity(task: TaskId, input_score: String, output_score: String) -> TaskInstance {
    let e = similarity_e(&input_score, &output_score);
    TaskInstance {
        task,
        input: format!("{}{}", task.identifier_line(), input_score),
        output: format!("E:{e}\n{output_score}"),
    }
}

/// Generation: the input is just the task identifier; the output is the
/// control codes followed by the full score.
pub fn build_generation(tune: &Tune) -> TaskInstance {
    let codes = compute_control_codes(tune);
    TaskInstance {
        task: TaskId::Generation,
        input: TaskId::Generation.identifier_line(),
        output: format!("{}{}", codes.serialize(), tune.serialize()),
    }
}

/// Harmonization: chords removed from the input, the original kept as
/// the output behind an `E:` similarity field. `None` without chords.
pub fn build_harmonization(tune: &Tune) -> Option<TaskInstance> {
    if !has_chord(tune) {
        return None;
    }
    let input_score = strip_chord_symbols(tune).serialize();
    Some(with_similarity(
        TaskId::Harmonization,
        input_score,
        tune.serialize(),
    ))
}

/// Melodization: notes become merged rests in the input, the original
/// score is the output. Needs both chords and notes.
pub fn build_melodization(tune: &Tune) -> Option<TaskInstance> {
    if !has_chord(tune) || !has_note(tune) {
        return None;
    }
    let rested = notes_to_rests(tune).ok()?;
    Some(with_similarity(
        TaskId::Melodization,
        rested.serialize(),
        tune.serialize(),
    ))
}

/// Segmentation: breath marks removed from the input; the output keeps
/// them behind an `E:` field. `None` without breath marks.
pub fn build_segmentation(tune: &Tune) -> Option<TaskInstance> {
    if !has_breath(tune) {
        return None;
    }
    let input_score = strip_decorations(tune, &["breath"]).serialize();
    Some(with_similarity(
        TaskId::Segmentation,
        input_score,
        tune.serialize(),
    ))
}

const SHARP_SPELLING: [(char, bool); 12] = [
    ('C', false),
    ('C', true),
    ('D', false),
    ('D', true),
    ('E', false),
    ('F', false),
    ('F', true),
    ('G', false),
    ('G', true),
    ('A', false),
    ('A', true),
    ('B', false),
];

/// Rewrites a note with an explicit accidental to its sharp-preferred
/// spelling (`_D` becomes `^C`, `__E` becomes `=D`), keeping the
/// duration suffix verbatim.
fn respell_sharp(token: &BodyToken) -> Option<String> {
    if !matches!(token.kind, TokenKind::Note { .. }) {
        return None;
    }
    if !matches!(token.text.as_bytes().first(), Some(b'^' | b'_' | b'=')) {
        return None;
    }
    let semitone = crate::abc::note_semitone(&token.text)?;
    let pc = semitone.rem_euclid(12) as usize;
    let octave = (semitone - pc as i32) / 12;
    let (letter, sharp) = SHARP_SPELLING[pc];
    let mut out = String::new();
    out.push(if sharp { '^' } else { '=' });
    if octave >= 1 {
        out.push(letter.to_ascii_lowercase());
        for _ in 1..octave {
            out.push('\'');
        }
    } else {
        out.push(letter);
        for _ in octave..0 {
            out.push(',');
        }
    }
    let dur_start = token
        .text
        .find(|c: char| c.is_ascii_digit() || c == '/')
        .unwrap_or(token.text.len());
    out.push_str(&token.text[dur_start..]);
    Some(out)
}

/// The deterministic degradation standing in for a MIDI roundtrip:
/// drops decorations and chord symbols, flattens repeat barlines, and
/// respells accidentals sharp-preferred.
pub fn degrade(tune: &Tune) -> Tune {
    let mut body = Vec::with_capacity(tune.body.len());
    for token in &tune.body {
        match token.kind {
            TokenKind::Decoration | TokenKind::ChordSymbol => {}
            TokenKind::Barline(
                BarlineStyle::RepeatStart | BarlineStyle::RepeatEnd | BarlineStyle::RepeatBoth,
            ) => body.push(BodyToken {
                kind: TokenKind::Barline(BarlineStyle::Single),
                text: "|".to_string(),
            }),
            TokenKind::Note { .. } => match respell_sharp(token) {
                Some(text) => {
                    let mut t = token.clone();
                    t.text = text;
                    body.push(t);
                }
                None => body.push(token.clone()),
            },
            _ => body.push(token.clone()),
        }
    }
    Tune {
        header: tune.header.clone(),
        body,
    }
}

/// Transcription: the degraded score is the input, the original the
/// output behind an `E:` field.
pub fn build_transcription(tune: &Tune) -> TaskInstance {
    let input_score = degrade(tune).serialize();
    with_similarity(TaskId::Transcription, input_score, tune.serialize())
}

fn is_metadata_tag(field: &InformationField) -> bool {
    matches!(field.letter(), Some('T' | 'C' | 'O'))
}

/// Cataloging: metadata fields are blanked and shuffled in the input;
/// the output lists them with their values in the same order. `None`
/// without any T:/C:/O: field.
pub fn build_cataloging(tune: &Tune, rng: &mut ChaCha8Rng) -> Option<TaskInstance> {
    let metadata: Vec<&InformationField> =
        tune.header.iter().filter(|f| is_metadata_tag(f)).collect();
    if metadata.is_empty() {
        return None;
    }
    let mut order: Vec<usize> = (0..metadata.len()).collect();
    order.shuffle(rng);

    let mut input_score = String::new();
    for &i in &order {
        if let FieldTag::Letter(c) = metadata[i].tag {
            input_score.push_str(&format!("{c}:\n"));
        }
    }
    for field in tune.header.iter().filter(|f| !is_metadata_tag(f)) {
        input_score.push_str(&field.to_line());
        input_score.push('\n');
    }
    input_score.push_str(&tune.body_text());

    let mut output = String::new();
    for &i in &order {
        output.push_str(&metadata[i].to_line());
        output.push('\n');
    }
    Some(TaskInstance {
        task: TaskId::Cataloging,
        input: format!("{}{}", TaskId::Cataloging.identifier_line(), input_score),
        output,
    })
}

/// Variation: every ordered pair of variants in a group becomes an
/// instance. A group of `n` yields `n * (n - 1)` pairs.
pub fn build_variation(group: &[Tune]) -> Vec<TaskInstance> {
    if group.len() < 2 {
        return Vec::new();
    }
    let texts: Vec<String> = group.iter().map(|t| t.serialize()).collect();
    let mut out = Vec::with_capacity(group.len() * (group.len() - 1));
    for (a, input_score) in texts.iter().enumerate() {
        for (b, output_score) in texts.iter().enumerate() {
            if a == b {
                continue;
            }
            out.push(with_similarity(
                TaskId::Variation,
                input_score.clone(),
                output_score.clone(),
            ));
        }
    }
    out
}

/// Per-task instance and drop counters for one dataset build.
#[derive(Debug, Clone, Default, Serialize)]
pub struct DatasetStats {
    pub counts: HashMap<TaskId, usize>,
    /// Instances whose input or output did not fit the (S, L) bounds.
    pub dropped_too_long: HashMap<TaskId, usize>,
}

impl DatasetStats {
    pub fn count(&self, task: TaskId) -> usize {
        self.counts.get(&task).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// Tab-separated stats table: one column per task plus a total.
    pub fn to_tsv(&self, source: &str) -> String {
        let mut header = vec!["source".to_string()];
        let mut row = vec![source.to_string()];
        for task in ALL_TASKS {
            header.push(task.name().to_string());
            row.push(self.count(task).to_string());
        }
        header.push("total".to_string());
        row.push(self.total().to_string());
        format!("{}\n{}\n", header.join("\t"), row.join("\t"))
    }
}

fn normalized_title(tune: &Tune) -> Option<String> {
    tune.field_value('T').map(|t| {
        t.split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_ascii_lowercase()
    })
}

fn fits(text: &str, s: usize, l: usize) -> bool {
    patchify(text, s, l).is_ok()
}

fn tune_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn per_tune_instances(tune: &Tune, index: usize, seed: u64) -> Vec<TaskInstance> {
    let mut rng = tune_rng(seed, index);
    let mut out = Vec::new();
    if let Some(i) = build_cataloging(tune, &mut rng) {
        out.push(i);
    }
    out.push(build_generation(tune));
    if let Some(i) = build_harmonization(tune) {
        out.push(i);
    }
    if let Some(i) = build_melodization(tune) {
        out.push(i);
    }
    if let Some(i) = build_segmentation(tune) {
        out.push(i);
    }
    out.push(build_transcription(tune));
    out
}

/// Variant groups are tunes sharing a normalized `T:` title, in first
/// appearance order.
fn variant_groups(corpus: &[Tune]) -> Vec<Vec<Tune>> {
    let mut index_of: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<Vec<Tune>> = Vec::new();
    for tune in corpus {
        let Some(title) = normalized_title(tune) else {
            continue;
        };
        match index_of.get(&title) {
            Some(&g) => groups[g].push(tune.clone()),
            None => {
                index_of.insert(title, groups.len());
                groups.push(vec![tune.clone()]);
            }
        }
    }
    groups.retain(|g| g.len() >= 2);
    groups
}

fn assemble_dataset(
    per_tune: Vec<Vec<TaskInstance>>,
    variation: Vec<Vec<TaskInstance>>,
    s: usize,
    l: usize,
) -> (Vec<TaskInstance>, DatasetStats) {
    let mut stats = DatasetStats::default();
    let mut instances = Vec::new();
    for built in per_tune.into_iter().chain(variation) {
        for inst in built {
            if fits(&inst.input, s, l) && fits(&inst.output, s, l) {
                *stats.counts.entry(inst.task).or_default() += 1;
                instances.push(inst);
            } else {
                *stats.dropped_too_long.entry(inst.task).or_default() += 1;
            }
        }
    }
    (instances, stats)
}

/// Builds every task instance for a curated corpus. Deterministic under
/// a fixed seed; instances outside the (s, l) patch bounds are dropped
/// and counted.
pub fn build_dataset(
    corpus: &[Tune],
    seed: u64,
    s: usize,
    l: usize,
) -> (Vec<TaskInstance>, DatasetStats) {
    let indexed: Vec<(usize, Tune)> = corpus.iter().cloned().enumerate().collect();
    let per_tune = par::map_ordered(&indexed, |(i, tune)| per_tune_instances(tune, *i, seed));
    let groups = variant_groups(corpus);
    let variation = par::map_ordered(&groups, |g| build_variation(g));
    assemble_dataset(per_tune, variation, s, l)
}

/// Sequential reference path for [`build_dataset`].
pub fn build_dataset_seq(
    corpus: &[Tune],
    seed: u64,
    s: usize,
    l: usize,
) -> (Vec<TaskInstance>, DatasetStats) {
    let indexed: Vec<(usize, Tune)> = corpus.iter().cloned().enumerate().collect();
    let per_tune = par::map_ordered_seq(&indexed, |(i, tune)| per_tune_instances(tune, *i, seed));
    let groups = variant_groups(corpus);
    let variation = par::map_ordered_seq(&groups, |g| build_variation(g));
    assemble_dataset(per_tune, variation, s, l)
}

/// Serializes instances as JSONL, one object per line.
pub fn to_jsonl(instances: &[TaskInstance]) -> String {
    let mut out = String::new();
    for inst in instances {
        out.push_str(&serde_json::to_string(inst).expect("instance serializes"));
        out.push('\n');
    }
    out
}

/// Parses a JSONL dataset, one instance per non-empty line.
pub fn from_jsonl(text: &str) -> Result<Vec<TaskInstance>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Strips the leading `%%<task>` identifier line, if present.
pub fn strip_identifier_line(text: &str) -> &str {
    if text.starts_with("%%") {
        match text.find('\n') {
            Some(pos) => &text[pos + 1..],
            None => "",
        }
    } else {
        text
    }
}

/// Strips one leading `E:` field line, if present.
pub fn strip_e_line(text: &str) -> &str {
    if text.starts_with("E:") {
        match text.find('\n') {
            Some(pos) => &text[pos + 1..],
            None => "",
        }
    } else {
        text
    }
}

#[cfg(test)]
mod tests;
