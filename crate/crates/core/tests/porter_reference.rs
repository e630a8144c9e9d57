//! Agreement with the published Porter vocabulary and its reference output.

use fedsel_core::stemmer::stem_str;

const VOCABULARY: &str = include_str!("data/porter_voc.txt");
const EXPECTED: &str = include_str!("data/porter_output.txt");

#[test]
fn matches_published_vocabulary() {
    let words: Vec<&str> = VOCABULARY.lines().filter(|l| !l.is_empty()).collect();
    let stems: Vec<&str> = EXPECTED.lines().filter(|l| !l.is_empty()).collect();
    assert_eq!(words.len(), stems.len());
    assert_eq!(words.len(), 23531);

    let mismatches: Vec<_> = words
        .iter()
        .zip(&stems)
        .filter_map(|(w, want)| {
            let got = stem_str(w).unwrap();
            (got.as_str() != *want).then(|| format!("{w}: got {got}, want {want}"))
        })
        .collect();
    assert!(
        mismatches.is_empty(),
        "{} mismatches, first: {:?}",
        mismatches.len(),
        &mismatches[..mismatches.len().min(10)]
    );
}
