use super::*;
use crate::abc::parse_tune;

fn tune(text: &str) -> Tune {
    parse_tune(text).expect("parse")
}

#[test]
fn similarity_endpoints() {
    assert_eq!(similarity_e("CDEF GABc", "CDEF GABc"), 10);
    assert_eq!(similarity_e("", ""), 10);
    assert_eq!(similarity_e("", "x"), 0);
    assert_eq!(similarity_e("x", ""), 0);
}

#[test]
fn similarity_kitten_sitting() {
    assert_eq!(levenshtein("kitten", "sitting"), 3);
    // 10 * (1 - 3/7) = 5.71 rounds half-up to 6.
    assert_eq!(similarity_e("kitten", "sitting"), 6);
}

#[test]
fn similarity_is_symmetric() {
    let pairs = [("abcd", "abxd"), ("CDEF|", "CDE|"), ("", "zz"), ("ab", "ba")];
    for (a, b) in pairs {
        assert_eq!(similarity_e(a, b), similarity_e(b, a));
    }
}

#[test]
fn control_codes_single_section() {
    let t = tune("X:1\nK:C\nC|D|E|F|G|A|B|c|]\n");
    let codes = compute_control_codes(&t);
    assert_eq!(codes.s_count, 1);
    assert_eq!(codes.b_counts, vec![8]);
    assert!(codes.e_sims.is_empty());
    assert_eq!(codes.serialize(), "S:1\nB:8\n");
}

#[test]
fn control_codes_identical_sections() {
    let t = tune("X:1\nK:C\nCDEF|GABc:|CDEF|GABc:|");
    let codes = compute_control_codes(&t);
    assert_eq!(codes.s_count, 2);
    assert_eq!(codes.b_counts, vec![2, 2]);
    assert_eq!(codes.e_sims, vec![10]);
}

#[test]
fn control_codes_two_sections() {
    let t = tune("X:1\nK:C\nCDEF GABc|cdef gabc'||cbag fedc|BAGF EDC2|]\n");
    let codes = compute_control_codes(&t);
    assert_eq!(codes.s_count, 2);
    assert_eq!(codes.b_counts, vec![2, 2]);
    assert_eq!(codes.e_sims.len(), 1);
}

#[test]
fn control_codes_roundtrip_prefix() {
    let codes = ControlCodes {
        s_count: 3,
        b_counts: vec![4, 4, 8],
        e_sims: vec![10, 3, 3],
    };
    let text = format!("{}X:1\nK:C\nC|]\n", codes.serialize());
    let (parsed, offset) = ControlCodes::parse_prefix(&text).unwrap();
    assert_eq!(parsed, codes);
    assert_eq!(&text[offset..], "X:1\nK:C\nC|]\n");
}

#[test]
fn generation_instance() {
    let t = tune("X:1\nK:C\nC|D|E|F|G|A|B|c|]\n");
    let inst = build_generation(&t);
    assert_eq!(inst.input, "%%generation\n");
    assert!(inst.output.starts_with("S:1\nB:8\n"));
    // Output minus the control-code lines is the serialized tune.
    let (_, offset) = ControlCodes::parse_prefix(&inst.output).unwrap();
    assert_eq!(&inst.output[offset..], t.serialize());
}

#[test]
fn harmonization_instance() {
    let t = tune("X:1\nL:1/8\nK:C\n\"C\"CEGE \"G\"DGBd |\"C\"c8 |]\n");
    let inst = build_harmonization(&t).expect("has chords");
    assert!(inst.input.starts_with("%%harmonization\n"));
    assert!(inst.input.contains("CEGE DGBd |c8 |]"));
    assert!(inst.output.starts_with("E:"));
    // Stripping chords from (output minus E:) reproduces the input score.
    let out_score = strip_e_line(&inst.output);
    let recon = strip_chord_symbols(&tune(out_score)).serialize();
    assert_eq!(recon, strip_identifier_line(&inst.input));
}

#[test]
fn harmonization_requires_chords() {
    assert!(build_harmonization(&tune("X:1\nK:C\nCDEF|]\n")).is_none());
}

#[test]
fn melodization_instance() {
    let t = tune("X:1\nL:1/8\nK:C\n\"C\"CEGE \"G\"DGBd |\"C\"c8 |]\n");
    let inst = build_melodization(&t).expect("eligible");
    assert!(inst
        .input
        .contains("\"C\"z4 \"G\"z4 |\"C\"z8 |]"));
    // Chord symbol sequences in input and output scores are identical.
    let chords = |text: &str| -> Vec<String> {
        tune(text)
            .body
            .iter()
            .filter_map(|tok| tok.chord_label().map(String::from))
            .collect()
    };
    assert_eq!(
        chords(strip_identifier_line(&inst.input)),
        chords(strip_e_line(&inst.output))
    );
}

#[test]
fn segmentation_instance() {
    let t = tune("X:1\nK:C\nCDEF|GABc!breath!|cBAG|FEDC!breath!|]\n");
    let inst = build_segmentation(&t).expect("has breath marks");
    assert_eq!(inst.input.matches("!breath!").count(), 0);
    assert_eq!(inst.output.matches("!breath!").count(), 2);
    let out_score = strip_e_line(&inst.output);
    let recon = strip_decorations(&tune(out_score), &["breath"]).serialize();
    assert_eq!(recon, strip_identifier_line(&inst.input));
}

#[test]
fn transcription_degrades() {
    let t = tune("X:1\nK:C\n|:!trill!C_DEF|GABc:|\n");
    let inst = build_transcription(&t);
    let input_score = strip_identifier_line(&inst.input);
    assert!(!input_score.contains("!trill!"));
    assert!(!input_score.contains(":|"));
    assert!(!input_score.contains("|:"));
    // D-flat respells sharp-preferred.
    assert!(input_score.contains("^C"));
    assert!(!input_score.contains("_D"));
}

#[test]
fn transcription_exact_when_nothing_degrades() {
    let t = tune("X:1\nK:C\nCDEF|GABc|]\n");
    let inst = build_transcription(&t);
    assert!(inst.output.starts_with("E:10\n"));
}

#[test]
fn respell_crosses_octave() {
    let t = tune("X:1\nK:C\n_C4|^^B2|]\n");
    let degraded = degrade(&t).serialize();
    // C-flat is B an octave down; B-double-sharp crosses up to c-sharp.
    assert!(degraded.contains("=B,4"), "{degraded}");
    assert!(degraded.contains("^c2"), "{degraded}");
}

#[test]
fn cataloging_instance() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let t = tune("X:1\nT:Der Baum\nC:J.S. Bach\nO:Germany\nK:C\nCDEF|]\n");
    let inst = build_cataloging(&t, &mut rng).expect("has metadata");
    for bare in ["T:\n", "C:\n", "O:\n"] {
        assert!(inst.input.contains(bare), "missing {bare:?}");
    }
    assert!(inst.input.contains("X:1\n"));
    assert!(inst.input.contains("CDEF|]"));
    assert!(inst.output.contains("T:Der Baum\n"));
    assert!(inst.output.contains("C:J.S. Bach\n"));
    assert!(inst.output.contains("O:Germany\n"));
    assert!(!inst.output.contains("CDEF"));
    // Output field count equals the number of blanked tags.
    assert_eq!(inst.output.lines().count(), 3);
}

#[test]
fn cataloging_requires_metadata() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    assert!(build_cataloging(&tune("X:1\nK:C\nC|]\n"), &mut rng).is_none());
}

#[test]
fn variation_pair_counts() {
    let a = tune("X:1\nT:Reel\nK:C\nCDEF|GABc|]\n");
    let b = tune("X:2\nT:Reel\nK:C\nCDEF|GABd|]\n");
    let c = tune("X:3\nT:Reel\nK:C\nCDGF|GABc|]\n");
    assert_eq!(build_variation(&[a.clone(), b.clone()]).len(), 2);
    assert_eq!(build_variation(&[a.clone(), b, c]).len(), 6);
    assert!(build_variation(&[a]).is_empty());
}

#[test]
fn every_input_has_one_identifier_line() {
    let t = tune("X:1\nT:Reel\nL:1/8\nK:C\n\"C\"CEGE!breath!|\"G\"DGBd|]\n");
    let (instances, _) = build_dataset(&[t.clone(), t], 42, 64, 256);
    for inst in &instances {
        assert!(inst.input.starts_with(&inst.task.identifier_line()));
        assert_eq!(inst.input.matches("%%").count(), 1);
        assert!(!inst.output.contains("%%"));
    }
}

#[test]
fn dataset_is_deterministic_and_parallel_agnostic() {
    let corpus: Vec<Tune> = (0..12)
        .map(|i| {
            tune(&format!(
                "X:{i}\nT:Tune {}\nO:Test\nK:C\n\"C\"CDEF|\"G\"GAB{}|]\n",
                i % 4,
                if i % 2 == 0 { 'c' } else { 'd' }
            ))
        })
        .collect();
    let (a, stats_a) = build_dataset(&corpus, 42, 64, 256);
    let (b, _) = build_dataset(&corpus, 42, 64, 256);
    let (c, stats_c) = build_dataset_seq(&corpus, 42, 64, 256);
    assert_eq!(to_jsonl(&a), to_jsonl(&b));
    assert_eq!(to_jsonl(&a), to_jsonl(&c));
    assert_eq!(stats_a.total(), stats_c.total());
    // Title groups of 3 tunes each yield 3*2 ordered pairs per group.
    assert_eq!(stats_a.count(TaskId::Variation), 4 * 6);
}

#[test]
fn empty_corpus_builds_nothing() {
    let (instances, stats) = build_dataset(&[], 42, 64, 256);
    assert!(instances.is_empty());
    assert_eq!(stats.total(), 0);
}

#[test]
fn oversized_instances_are_dropped_and_counted() {
    let t = tune("X:1\nT:Long\nK:C\nCDEF|GABc|cdef|gabc|]\n");
    let (instances, stats) = build_dataset(&[t], 42, 8, 4);
    assert!(instances.len() < 3);
    assert!(!stats.dropped_too_long.is_empty());
}

#[test]
fn jsonl_roundtrip() {
    let t = tune("X:1\nT:Reel\nK:C\n\"C\"CDEF|GABc|]\n");
    let (instances, _) = build_dataset(&[t], 42, 64, 256);
    let text = to_jsonl(&instances);
    assert_eq!(from_jsonl(&text).unwrap(), instances);
}

#[test]
fn stats_tsv_layout() {
    let t = tune("X:1\nT:Reel\nK:C\n\"C\"CDEF|GABc|]\n");
    let (_, stats) = build_dataset(&[t], 42, 64, 256);
    let tsv = stats.to_tsv("corpus");
    let mut lines = tsv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("source\tcataloging\tgeneration\t"));
    assert!(header.ends_with("\ttotal"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("corpus\t"));
}
