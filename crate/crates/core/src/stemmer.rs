//! Porter (1980) suffix-stripping stemmer.
//!
//! This follows the reference ANSI C implementation distributed with the
//! algorithm, including its two documented departures from the printed
//! rules (`bli -> ble` and `logi -> log` in step 2). Those departures are
//! what the published vocabulary/output pair was generated with.
//!
//! Input is a [`Word`]: lowercase `a-z` only. Case folding and punctuation
//! handling belong to the tokenizer.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A non-empty lowercase alphabetic token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(String);

impl Word {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.is_empty() {
            return Err(Error::InvalidArgument("empty word".into()));
        }
        if !text.bytes().all(|b| b.is_ascii_lowercase()) {
            return Err(Error::InvalidArgument(format!(
                "word {text:?} is not lowercase a-z"
            )));
        }
        Ok(Word(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Output of [`stem`]. Same alphabet as [`Word`], never longer than its input.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Stem(String);

impl Stem {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    /// Wraps an already-stemmed term, e.g. one read back from a directory index.
    pub fn from_stemmed(text: impl Into<String>) -> Result<Self> {
        let word = Word::new(text)?;
        Ok(Stem(word.0))
    }
}

impl fmt::Display for Stem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Stem {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Stems a validated word.
pub fn stem(word: &Word) -> Stem {
    Stem(stem_bytes(word.as_str().as_bytes()))
}

/// Validates `text` as a [`Word`] and stems it.
pub fn stem_str(text: &str) -> Result<Stem> {
    Word::new(text).map(|w| stem(&w))
}

fn stem_bytes(word: &[u8]) -> String {
    if word.len() <= 2 {
        return String::from_utf8(word.to_vec()).expect("ascii input");
    }
    let mut s = Stripper {
        b: word.to_vec(),
        k: word.len(),
        j: 0,
    };
    s.step1ab();
    if s.k > 1 {
        s.step1c();
        s.step2();
        s.step3();
        s.step4();
        s.step5();
    }
    s.b.truncate(s.k);
    String::from_utf8(s.b).expect("ascii input")
}

/// Working buffer. `k` is the logical length of the word, `j` the length of
/// the stem left after the suffix most recently matched by [`Stripper::ends`].
struct Stripper {
    b: Vec<u8>,
    k: usize,
    j: usize,
}

impl Stripper {
    fn cons(&self, i: usize) -> bool {
        match self.b[i] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !self.cons(i - 1),
            _ => true,
        }
    }

    /// Number of VC sequences in `b[..j]`, the `m` of `[C](VC)^m[V]`.
    fn measure(&self) -> usize {
        (1..self.j)
            .filter(|&i| !self.cons(i - 1) && self.cons(i))
            .count()
    }

    fn vowel_in_stem(&self) -> bool {
        (0..self.j).any(|i| !self.cons(i))
    }

    fn double_cons(&self, i: usize) -> bool {
        i >= 1 && self.b[i] == self.b[i - 1] && self.cons(i)
    }

    /// consonant-vowel-consonant ending at `i`, last letter not w, x or y.
    fn cvc(&self, i: usize) -> bool {
        if i < 2 || !self.cons(i) || self.cons(i - 1) || !self.cons(i - 2) {
            return false;
        }
        !matches!(self.b[i], b'w' | b'x' | b'y')
    }

    fn ends(&mut self, suffix: &[u8]) -> bool {
        if suffix.len() > self.k || &self.b[self.k - suffix.len()..self.k] != suffix {
            return false;
        }
        self.j = self.k - suffix.len();
        true
    }

    fn set_to(&mut self, replacement: &[u8]) {
        self.b.truncate(self.j);
        self.b.extend_from_slice(replacement);
        self.k = self.b.len();
    }

    fn replace_if_measured(&mut self, replacement: &[u8]) {
        if self.measure() > 0 {
            self.set_to(replacement);
        }
    }

    fn last(&self) -> u8 {
        self.b[self.k - 1]
    }

    fn penultimate(&self) -> u8 {
        self.b[self.k - 2]
    }

    /// Plurals and -ed / -ing.
    fn step1ab(&mut self) {
        if self.last() == b's' {
            if self.ends(b"sses") {
                self.k -= 2;
            } else if self.ends(b"ies") {
                self.set_to(b"i");
            } else if self.penultimate() != b's' {
                self.k -= 1;
            }
        }
        if self.ends(b"eed") {
            if self.measure() > 0 {
                self.k -= 1;
            }
        } else if (self.ends(b"ed") || self.ends(b"ing")) && self.vowel_in_stem() {
            self.k = self.j;
            if self.ends(b"at") {
                self.set_to(b"ate");
            } else if self.ends(b"bl") {
                self.set_to(b"ble");
            } else if self.ends(b"iz") {
                self.set_to(b"ize");
            } else if self.double_cons(self.k - 1) {
                if !matches!(self.b[self.k - 1], b'l' | b's' | b'z') {
                    self.k -= 1;
                }
            } else if self.measure() == 1 && self.cvc(self.k - 1) {
                self.set_to(b"e");
            }
        }
    }

    /// Terminal y -> i when there is another vowel in the stem.
    fn step1c(&mut self) {
        if self.ends(b"y") && self.vowel_in_stem() {
            let k = self.k;
            self.b[k - 1] = b'i';
        }
    }

    /// Double suffixes map to single ones, e.g. -ization -> -ize.
    fn step2(&mut self) {
        let rules: &[(&[u8], &[u8])] = match self.penultimate() {
            b'a' => &[(b"ational", b"ate"), (b"tional", b"tion")],
            b'c' => &[(b"enci", b"ence"), (b"anci", b"ance")],
            b'e' => &[(b"izer", b"ize")],
            b'l' => &[
                (b"bli", b"ble"),
                (b"alli", b"al"),
                (b"entli", b"ent"),
                (b"eli", b"e"),
                (b"ousli", b"ous"),
            ],
            b'o' => &[(b"ization", b"ize"), (b"ation", b"ate"), (b"ator", b"ate")],
            b's' => &[
                (b"alism", b"al"),
                (b"iveness", b"ive"),
                (b"fulness", b"ful"),
                (b"ousness", b"ous"),
            ],
            b't' => &[(b"aliti", b"al"), (b"iviti", b"ive"), (b"biliti", b"ble")],
            b'g' => &[(b"logi", b"log")],
            _ => &[],
        };
        self.apply_first(rules);
    }

    /// -ic-, -full, -ness etc.
    fn step3(&mut self) {
        let rules: &[(&[u8], &[u8])] = match self.last() {
            b'e' => &[(b"icate", b"ic"), (b"ative", b""), (b"alize", b"al")],
            b'i' => &[(b"iciti", b"ic")],
            b'l' => &[(b"ical", b"ic"), (b"ful", b"")],
            b's' => &[(b"ness", b"")],
            _ => &[],
        };
        self.apply_first(rules);
    }

    /// The first matching suffix wins, whether or not its measure condition holds.
    fn apply_first(&mut self, rules: &[(&[u8], &[u8])]) {
        for (suffix, replacement) in rules {
            if self.ends(suffix) {
                self.replace_if_measured(replacement);
                return;
            }
        }
    }

    /// Strip -ant, -ence etc. in context `<c>vcvc<v>` (m > 1).
    fn step4(&mut self) {
        let suffixes: &[&[u8]] = match self.penultimate() {
            b'a' => &[b"al"],
            b'c' => &[b"ance", b"ence"],
            b'e' => &[b"er"],
            b'i' => &[b"ic"],
            b'l' => &[b"able", b"ible"],
            b'n' => &[b"ant", b"ement", b"ment", b"ent"],
            b'o' => {
                if self.ends(b"ion") && self.j >= 1 && matches!(self.b[self.j - 1], b's' | b't') {
                    self.strip_if_long();
                    return;
                }
                &[b"ou"]
            }
            b's' => &[b"ism"],
            b't' => &[b"ate", b"iti"],
            b'u' => &[b"ous"],
            b'v' => &[b"ive"],
            b'z' => &[b"ize"],
            _ => &[],
        };
        for suffix in suffixes {
            if self.ends(suffix) {
                self.strip_if_long();
                return;
            }
        }
    }

    fn strip_if_long(&mut self) {
        if self.measure() > 1 {
            self.k = self.j;
        }
    }

    /// Final -e and -ll.
    fn step5(&mut self) {
        self.j = self.k;
        if self.last() == b'e' {
            let m = self.measure();
            if m > 1 || (m == 1 && !self.cvc(self.k - 2)) {
                self.k -= 1;
            }
        }
        if self.last() == b'l' && self.double_cons(self.k - 1) && self.measure() > 1 {
            self.k -= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(w: &str) -> String {
        stem_str(w).unwrap().into_string()
    }

    #[test]
    fn connect_family_conflates() {
        for w in [
            "connect",
            "connected",
            "connecting",
            "connection",
            "connections",
        ] {
            assert_eq!(s(w), "connect", "{w}");
        }
    }

    #[test]
    fn education_sample() {
        assert_eq!(s("education"), "educ");
    }

    #[test]
    fn short_words_unchanged() {
        assert_eq!(s("a"), "a");
        assert_eq!(s("is"), "is");
        assert_eq!(s("as"), "as");
    }

    #[test]
    fn textbook_examples() {
        let cases = [
            ("caresses", "caress"),
            ("ponies", "poni"),
            ("ties", "ti"),
            ("cats", "cat"),
            ("feed", "feed"),
            ("agreed", "agre"),
            ("plastered", "plaster"),
            ("motoring", "motor"),
            ("sing", "sing"),
            ("conflated", "conflat"),
            ("hopping", "hop"),
            ("falling", "fall"),
            ("filing", "file"),
            ("happy", "happi"),
            ("relational", "relat"),
            ("generalization", "gener"),
            ("hopefulness", "hope"),
            ("adjustment", "adjust"),
            ("controlling", "control"),
            ("roll", "roll"),
        ];
        for (input, expected) in cases {
            assert_eq!(s(input), expected, "{input}");
        }
    }

    #[test]
    fn ies_collapses_to_single_letter() {
        assert_eq!(s("ies"), "i");
    }

    #[test]
    fn rejects_empty_and_non_alpha() {
        assert!(matches!(stem_str(""), Err(Error::InvalidArgument(_))));
        assert!(stem_str("Connect").is_err());
        assert!(stem_str("c0nnect").is_err());
    }

    #[test]
    fn reference_stemmer_is_not_idempotent_on_every_word() {
        // "agreed" -> "agre" -> "agr": the published algorithm re-strips a final e.
        let once = s("agreed");
        assert_eq!(once, "agre");
        assert_eq!(s(&once), "agr");
    }
}
