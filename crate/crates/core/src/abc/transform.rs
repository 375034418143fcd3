use super::parse::duration_suffix;
use super::{AbcError, Bar, BarlineStyle, BodyToken, Section, TokenKind, Tune};
use crate::Dur;
use num_traits::Zero;

fn is_sounding(token: &BodyToken) -> bool {
    matches!(token.kind, TokenKind::Note { .. } | TokenKind::Rest { .. })
}

/// Splits the body into bars. The body is cut after every barline token;
/// a cut segment with no note or rest (a lone repeat-start, a trailing
/// newline) is merged into the previous bar, or the next one at the very
/// start. Bar concatenation always reproduces the body.
pub fn split_bars(tune: &Tune) -> Vec<Bar> {
    let body = &tune.body;
    if body.is_empty() {
        return Vec::new();
    }
    let mut cuts = Vec::new();
    for (idx, token) in body.iter().enumerate() {
        if matches!(token.kind, TokenKind::Barline(_)) {
            cuts.push(idx + 1);
        }
    }
    if cuts.last() != Some(&body.len()) {
        cuts.push(body.len());
    }

    let mut bars: Vec<Bar> = Vec::new();
    let mut pending_start: Option<usize> = None;
    let mut start = 0;
    for end in cuts {
        let seg_start = pending_start.take().unwrap_or(start);
        if body[start..end].iter().any(is_sounding) {
            bars.push(Bar {
                start: seg_start,
                end,
            });
        } else if let Some(last) = bars.last_mut() {
            last.end = end;
        } else {
            pending_start = Some(seg_start);
        }
        start = end;
    }
    if let Some(seg_start) = pending_start {
        // Nothing in the body sounds at all; keep it as a single bar.
        bars.push(Bar {
            start: seg_start,
            end: body.len(),
        });
    }
    bars
}

/// True when the bar closes a section: a `||`, `:|`, `::`, or `|]`
/// barline appears at or after the bar's last sounding token.
fn closes_section(tune: &Tune, bar: &Bar) -> bool {
    let tokens = bar.tokens(tune);
    let tail_start = tokens
        .iter()
        .rposition(is_sounding)
        .map(|p| p + 1)
        .unwrap_or(0);
    tokens[tail_start..].iter().any(|t| {
        matches!(
            t.kind,
            TokenKind::Barline(
                BarlineStyle::Double
                    | BarlineStyle::RepeatEnd
                    | BarlineStyle::RepeatBoth
                    | BarlineStyle::Final
            )
        )
    })
}

/// Splits the body into sections at `||`, `:|`, `::`, and interior `|]`
/// boundaries. Concatenating the sections reproduces the body; an empty
/// body has no sections.
pub fn detect_sections(tune: &Tune) -> Vec<Section> {
    let bars = split_bars(tune);
    if bars.is_empty() {
        return Vec::new();
    }
    let mut sections = Vec::new();
    let mut first = 0;
    for (i, bar) in bars.iter().enumerate() {
        let last_bar = i + 1 == bars.len();
        if last_bar || closes_section(tune, bar) {
            sections.push(Section {
                bar_start: first,
                bar_end: i + 1,
                start: bars[first].start,
                end: bar.end,
            });
            first = i + 1;
        }
    }
    sections
}

/// Removes every chord symbol token; all other tokens keep their order.
pub fn strip_chord_symbols(tune: &Tune) -> Tune {
    Tune {
        header: tune.header.clone(),
        body: tune
            .body
            .iter()
            .filter(|t| !matches!(t.kind, TokenKind::ChordSymbol))
            .cloned()
            .collect(),
    }
}

/// Removes decoration tokens whose name is in `which`.
pub fn strip_decorations(tune: &Tune, which: &[&str]) -> Tune {
    Tune {
        header: tune.header.clone(),
        body: tune
            .body
            .iter()
            .filter(|t| match t.decoration_name() {
                Some(name) => !which.contains(&name),
                None => true,
            })
            .cloned()
            .collect(),
    }
}

fn rest_token(duration: Dur) -> Result<BodyToken, AbcError> {
    Ok(BodyToken {
        kind: TokenKind::Rest { duration },
        text: format!("z{}", duration_suffix(duration)?),
    })
}

/// Replaces every note with a rest of equal duration and merges each
/// maximal run of rests (whitespace between them is absorbed) into one
/// rest of the summed duration. Per-bar totals are preserved exactly.
pub fn notes_to_rests(tune: &Tune) -> Result<Tune, AbcError> {
    let body = &tune.body;
    let mut out = Vec::with_capacity(body.len());
    let mut i = 0;
    while i < body.len() {
        let token = &body[i];
        let run_duration = match token.kind {
            TokenKind::Note { duration, .. } | TokenKind::Rest { duration } => duration,
            _ => {
                out.push(token.clone());
                i += 1;
                continue;
            }
        };
        let mut total = run_duration;
        let mut last_sounding = i;
        let mut j = i + 1;
        while j < body.len() {
            match body[j].kind {
                TokenKind::Note { duration, .. } | TokenKind::Rest { duration } => {
                    total += duration;
                    last_sounding = j;
                    j += 1;
                }
                _ if body[j].is_whitespace() => j += 1,
                _ => break,
            }
        }
        out.push(rest_token(total)?);
        // Whitespace after the last rest in the run is kept verbatim.
        for trailing in &body[last_sounding + 1..j] {
            out.push(trailing.clone());
        }
        i = j;
    }
    Ok(Tune {
        header: tune.header.clone(),
        body: out,
    })
}

/// Total note+rest duration of a token slice, in `L:` units. Opaque
/// spans (graces, tuplets) contribute nothing.
pub fn duration_sum(tokens: &[BodyToken]) -> Dur {
    tokens
        .iter()
        .map(|t| match t.kind {
            TokenKind::Note { duration, .. } | TokenKind::Rest { duration } => duration,
            _ => Dur::zero(),
        })
        .sum()
}

/// Makes the body end with `|]`: a trailing barline of another style is
/// rewritten in place, and ` |]` is appended when there is none.
pub fn ensure_final_barline(tune: &Tune) -> Tune {
    let mut body = tune.body.clone();
    let last_real = body.iter().rposition(|t| !t.is_whitespace());
    match last_real {
        Some(idx) if matches!(body[idx].kind, TokenKind::Barline(BarlineStyle::Final)) => {}
        Some(idx) if matches!(body[idx].kind, TokenKind::Barline(_)) => {
            body[idx] = BodyToken {
                kind: TokenKind::Barline(BarlineStyle::Final),
                text: "|]".to_string(),
            };
        }
        Some(idx) => {
            body.insert(
                idx + 1,
                BodyToken {
                    kind: TokenKind::Barline(BarlineStyle::Final),
                    text: "|]".to_string(),
                },
            );
            body.insert(
                idx + 1,
                BodyToken {
                    kind: TokenKind::Opaque,
                    text: " ".to_string(),
                },
            );
        }
        None => {
            body.push(BodyToken {
                kind: TokenKind::Barline(BarlineStyle::Final),
                text: "|]".to_string(),
            });
        }
    }
    Tune {
        header: tune.header.clone(),
        body,
    }
}
