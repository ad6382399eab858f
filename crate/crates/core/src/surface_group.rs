//! Standard presentation of a closed orientable surface group and free word arithmetic.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest genus accepted by the parser and presentation constructor.
pub const MAX_GENUS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("invalid generator token `{0}`")]
    BadToken(String),
    #[error("generator `{token}` out of range for genus {genus}")]
    OutOfRange { token: String, genus: usize },
    #[error("genus {0} unsupported (need 2..={MAX_GENUS})")]
    BadGenus(usize),
    #[error("word is trivial")]
    Trivial,
}

/// A generator or its inverse. Generator `2k` is `a_{k+1}`, generator `2k+1` is `b_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub generator: u16,
    pub inverse: bool,
}

impl Letter {
    pub fn new(generator: usize, exponent: i8) -> Self {
        assert!(exponent == 1 || exponent == -1, "letter exponent must be ±1");
        Letter { generator: generator as u16, inverse: exponent < 0 }
    }

    pub fn exponent(self) -> i8 {
        if self.inverse {
            -1
        } else {
            1
        }
    }

    pub fn inv(self) -> Self {
        Letter { generator: self.generator, inverse: !self.inverse }
    }

    pub fn index(self) -> usize {
        self.generator as usize
    }

    /// Every letter of the rank-`2g` free group, in shortlex letter order.
    pub fn all(genus: usize) -> Vec<Letter> {
        (0..2 * genus)
            .flat_map(|g| [Letter::new(g, 1), Letter::new(g, -1)])
            .collect()
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pair = self.generator / 2 + 1;
        let c = match (self.generator % 2, self.inverse) {
            (0, false) => 'a',
            (0, true) => 'A',
            (_, false) => 'b',
            (_, true) => 'B',
        };
        write!(f, "{c}{pair}")
    }
}

impl FromStr for Letter {
    type Err = WordError;

    fn from_str(tok: &str) -> Result<Self, Self::Err> {
        let bad = || WordError::BadToken(tok.to_string());
        let mut chars = tok.chars();
        let head = chars.next().ok_or_else(bad)?;
        let pair: usize = chars.as_str().parse().map_err(|_| bad())?;
        if pair == 0 {
            return Err(bad());
        }
        let (offset, inverse) = match head {
            'a' => (0, false),
            'A' => (0, true),
            'b' => (1, false),
            'B' => (1, true),
            _ => return Err(bad()),
        };
        let generator = 2 * (pair - 1) + offset;
        if generator >= 2 * MAX_GENUS {
            return Err(bad());
        }
        Ok(Letter { generator: generator as u16, inverse })
    }
}

/// A freely reduced word. Ordering is shortlex (length first, then letters).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn empty() -> Self {
        Word::default()
    }

    pub fn letter(l: Letter) -> Self {
        Word { letters: vec![l] }
    }

    pub fn generator(index: usize) -> Self {
        Word::letter(Letter::new(index, 1))
    }

    /// Builds a word from arbitrary letters, freely reducing as it goes.
    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut w = Word::empty();
        for l in letters {
            w.push(l);
        }
        w
    }

    /// Parses whitespace separated tokens and checks them against `genus`.
    pub fn parse_for_genus(text: &str, genus: usize) -> Result<Self, WordError> {
        let w: Word = text.parse()?;
        if let Some(l) = w.letters.iter().find(|l| l.index() >= 2 * genus) {
            return Err(WordError::OutOfRange { token: l.to_string(), genus });
        }
        Ok(w)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Largest generator index used plus one (0 for the empty word).
    pub fn rank_used(&self) -> usize {
        self.letters.iter().map(|l| l.index() + 1).max().unwrap_or(0)
    }

    /// Appends a letter, cancelling against the last one if they are inverse.
    pub fn push(&mut self, l: Letter) {
        if self.letters.last() == Some(&l.inv()) {
            self.letters.pop();
        } else {
            self.letters.push(l);
        }
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut w = self.clone();
        for &l in &other.letters {
            w.push(l);
        }
        w
    }

    pub fn invert(&self) -> Word {
        Word { letters: self.letters.iter().rev().map(|l| l.inv()).collect() }
    }

    pub fn pow(&self, k: i64) -> Word {
        let base = if k < 0 { self.invert() } else { self.clone() };
        let mut w = Word::empty();
        for _ in 0..k.unsigned_abs() {
            w = w.concat(&base);
        }
        w
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(&f), Some(&l)) => self.letters.len() == 1 || f != l.inv(),
            _ => true,
        }
    }

    /// Splits `self` as `conjugator · core · conjugator⁻¹` with `core` cyclically reduced.
    pub fn cyclic_reduce(&self) -> Result<(Word, Word), WordError> {
        if self.is_empty() {
            return Err(WordError::Trivial);
        }
        let n = self.letters.len();
        let mut k = 0;
        while 2 * k + 1 < n && self.letters[k] == self.letters[n - 1 - k].inv() {
            k += 1;
        }
        let conjugator = Word { letters: self.letters[..k].to_vec() };
        let core = Word { letters: self.letters[k..n - k].to_vec() };
        Ok((core, conjugator))
    }

    /// All cyclic rotations of a cyclically reduced word.
    pub fn rotations(&self) -> Vec<Word> {
        let n = self.letters.len();
        (0..n.max(1))
            .map(|i| {
                let mut v = self.letters[i.min(n)..].to_vec();
                v.extend_from_slice(&self.letters[..i.min(n)]);
                Word { letters: v }
            })
            .collect()
    }

    /// Substitutes each generator by the corresponding word of `images`.
    pub fn substitute(&self, images: &[Word]) -> Word {
        let mut w = Word::empty();
        for l in &self.letters {
            let img = &images[l.index()];
            let piece = if l.inverse { img.invert() } else { img.clone() };
            w = w.concat(&piece);
        }
        w
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = WordError;

    /// Accepts `a1 b1 A1 B1` style tokens; `1` or an empty string is the identity.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut w = Word::empty();
        for tok in s.split_whitespace() {
            if tok == "1" {
                continue;
            }
            w.push(tok.parse()?);
        }
        Ok(w)
    }
}

impl TryFrom<String> for Word {
    type Error = WordError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Word> for String {
    fn from(w: Word) -> String {
        w.to_string()
    }
}

/// `π₁` of the closed orientable surface of the given genus, with relator `∏[aᵢ,bᵢ]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfacePresentation {
    genus: usize,
}

impl SurfacePresentation {
    pub fn new(genus: usize) -> Result<Self, WordError> {
        if !(2..=MAX_GENUS).contains(&genus) {
            return Err(WordError::BadGenus(genus));
        }
        Ok(SurfacePresentation { genus })
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn rank(&self) -> usize {
        2 * self.genus
    }

    pub fn generator_names(&self) -> Vec<String> {
        (0..self.rank()).map(|i| Letter::new(i, 1).to_string()).collect()
    }

    pub fn generators(&self) -> Vec<Word> {
        (0..self.rank()).map(Word::generator).collect()
    }

    /// `a₁ b₁ a₁⁻¹ b₁⁻¹ ⋯ a_g b_g a_g⁻¹ b_g⁻¹`.
    pub fn relator(&self) -> Word {
        let mut letters = Vec::with_capacity(4 * self.genus);
        for k in 0..self.genus {
            let (a, b) = (2 * k, 2 * k + 1);
            letters.extend([
                Letter::new(a, 1),
                Letter::new(b, 1),
                Letter::new(a, -1),
                Letter::new(b, -1),
            ]);
        }
        Word { letters }
    }

    pub fn parse_word(&self, text: &str) -> Result<Word, WordError> {
        Word::parse_for_genus(text, self.genus)
    }

    /// Decides whether `w` is trivial in the surface group by Dehn's algorithm.
    ///
    /// The standard relator has pieces of length 1 only, so the presentation
    /// is C'(1/7) and Dehn's algorithm is complete: a nontrivial reduced word
    /// equal to the identity always contains more than half of a cyclic
    /// conjugate of the relator or its inverse.
    pub fn is_trivial(&self, w: &Word) -> bool {
        let r = self.relator();
        let mut relators = r.rotations();
        relators.extend(r.invert().rotations());
        let half = r.len() / 2;
        let mut cur = w.letters.clone();
        'rewrite: loop {
            if cur.is_empty() {
                return true;
            }
            for start in 0..cur.len() {
                for rel in &relators {
                    let rl = rel.letters();
                    let mut k = 0;
                    while k < rl.len() && start + k < cur.len() && cur[start + k] == rl[k] {
                        k += 1;
                    }
                    if k > half {
                        let replacement = rl[k..].iter().rev().map(|l| l.inv());
                        let next = Word::from_letters(
                            cur[..start].iter().copied().chain(replacement).chain(cur[start + k..].iter().copied()),
                        );
                        cur = next.letters;
                        continue 'rewrite;
                    }
                }
            }
            return false;
        }
    }

    /// Whether `u` and `v` are equal in the surface group.
    pub fn words_equal(&self, u: &Word, v: &Word) -> bool {
        self.is_trivial(&u.concat(&v.invert()))
    }

    /// All reduced words of length at most `max_len`, in shortlex order.
    pub fn words_up_to(&self, max_len: usize) -> Vec<Word> {
        let letters = Letter::all(self.genus);
        let mut out = vec![Word::empty()];
        let mut layer = vec![Word::empty()];
        for _ in 0..max_len {
            let mut next = Vec::with_capacity(layer.len() * (letters.len() - 1));
            for w in &layer {
                for &l in &letters {
                    if w.letters.last() == Some(&l.inv()) {
                        continue;
                    }
                    let mut v = w.clone();
                    v.letters.push(l);
                    next.push(v);
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn concat_cancels() {
        assert!(w("a1").concat(&w("A1")).is_empty());
        assert_eq!(w("a1 b1").concat(&w("B1 a2")), w("a1 a2"));
    }

    #[test]
    fn relator_halves_concat_to_relator() {
        let p = SurfacePresentation::new(2).unwrap();
        let r = p.relator();
        assert_eq!(r.len(), 8);
        assert!(r.is_cyclically_reduced());
        let (pre, suf) = r.letters().split_at(4);
        let pre = Word::from_letters(pre.iter().copied());
        let suf = Word::from_letters(suf.iter().copied());
        assert_eq!(pre.concat(&suf), r);
        assert_eq!(r.to_string(), "a1 b1 A1 B1 a2 b2 A2 B2");
    }

    #[test]
    fn invert_examples() {
        assert_eq!(w("a1 b1").invert(), w("B1 A1"));
        assert!(Word::empty().invert().is_empty());
    }

    #[test]
    fn cyclic_reduce_examples() {
        assert_eq!(w("a1 b1 A1").cyclic_reduce().unwrap(), (w("b1"), w("a1")));
        assert_eq!(w("b2").cyclic_reduce().unwrap(), (w("b2"), Word::empty()));
        assert_eq!(Word::empty().cyclic_reduce(), Err(WordError::Trivial));
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(w("a1 B2").to_string(), "a1 B2");
        assert_eq!(w("").to_string(), "1");
        assert!(Word::parse_for_genus("a3", 2).is_err());
        assert!("c1".parse::<Word>().is_err());
        assert!("a0".parse::<Word>().is_err());
    }

    #[test]
    fn shortlex_order() {
        assert!(w("b1") < w("a1 a1"));
        assert!(w("a1") < w("A1"));
        assert!(Word::empty() < w("a1"));
    }

    #[test]
    fn dehn_algorithm() {
        let p = SurfacePresentation::new(2).unwrap();
        let r = p.relator();
        assert!(p.is_trivial(&r));
        assert!(p.is_trivial(&w("a2 b1").concat(&r.rotations()[3]).concat(&w("B1 A2"))));
        assert!(!p.is_trivial(&w("a1")));
        assert!(!p.is_trivial(&w("a1 b1 A1 B1")));
        // the two halves of the relator are equal up to inversion
        assert!(p.words_equal(&w("a1 b1 A1 B1"), &w("b2 a2 B2 A2")));
        assert!(!p.words_equal(&w("a1 b1"), &w("b1 a1")));
    }

    #[test]
    fn conjugate_of_cyclically_reduced_round_trips() {
        let c = w("a1 b2 a2");
        let conj = w("b1 b1");
        let u = conj.concat(&c).concat(&conj.invert());
        assert_eq!(u.cyclic_reduce().unwrap(), (c, conj));
    }

    #[test]
    fn word_enumeration_counts() {
        let p = SurfacePresentation::new(2).unwrap();
        // 1 + 8 + 8·7 + 8·7²
        assert_eq!(p.words_up_to(3).len(), 1 + 8 + 56 + 392);
    }

    fn letter() -> impl Strategy<Value = Letter> {
        (0usize..4, any::<bool>()).prop_map(|(g, inv)| Letter::new(g, if inv { -1 } else { 1 }))
    }

    fn word() -> impl Strategy<Value = Word> {
        prop::collection::vec(letter(), 0..12).prop_map(Word::from_letters)
    }

    fn reduced(w: &Word) -> bool {
        w.letters().windows(2).all(|p| p[0] != p[1].inv())
    }

    proptest! {
        #[test]
        fn concat_is_associative(u in word(), v in word(), x in word()) {
            prop_assert_eq!(u.concat(&v).concat(&x), u.concat(&v.concat(&x)));
        }

        #[test]
        fn concat_stays_reduced(u in word(), v in word()) {
            prop_assert!(reduced(&u.concat(&v)));
        }

        #[test]
        fn invert_is_involution(u in word()) {
            prop_assert_eq!(u.invert().invert(), u.clone());
            prop_assert!(u.concat(&u.invert()).is_empty());
        }

        #[test]
        fn cyclic_reduce_round_trip(c in word(), conj in word()) {
            prop_assume!(!c.is_empty() && c.is_cyclically_reduced());
            let u = conj.concat(&c).concat(&conj.invert());
            let (core, k) = u.cyclic_reduce().unwrap();
            prop_assert!(core.is_cyclically_reduced());
            prop_assert_eq!(k.concat(&core).concat(&k.invert()), u);
            // idempotent on the core
            let (core2, k2) = core.cyclic_reduce().unwrap();
            prop_assert_eq!(core2, core);
            prop_assert!(k2.is_empty());
        }

        #[test]
        fn display_parse_round_trip(u in word()) {
            prop_assert_eq!(u.to_string().parse::<Word>().unwrap(), u);
        }
    }
}
