//! Letters, words, and the finite alphabets used across the engine.
//!
//! Letters are global symbols; an [`Alphabet`] is a closed subset of them.
//! This lets letter-substitution maps move between alphabets (for example
//! the specialization sending the formal letter `z` to `1`) without any
//! re-indexing.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A degree-1 generator of the braid-type algebra on strands {1,2,3,4} at
/// level 2. `T1(j)` is the strand-1 generator `t^{1j}`; `T(a, i, j)` is
/// `t(a)^{ij}` stored with `i < j` (the identification `t(a)^{ij} = t(-a)^{ji}`
/// is definitional here; at level 2, `-a = a`).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Generator {
    T1(u8),
    T(u8, u8, u8),
}

impl Generator {
    pub fn t1(j: u8) -> Self {
        assert!((2..=4).contains(&j), "strand index out of range");
        Generator::T1(j)
    }

    /// `t(a)^{ij}`, canonicalized to `i < j`.
    pub fn t(a: u8, i: u8, j: u8) -> Self {
        assert!(a < 2, "level-2 twist index");
        assert!((2..=4).contains(&i) && (2..=4).contains(&j) && i != j);
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        Generator::T(a, i, j)
    }

    pub fn label(&self) -> String {
        match self {
            Generator::T1(j) => format!("T1_{j}"),
            Generator::T(a, i, j) => format!("T{a}_{i}{j}"),
        }
    }

    /// Labels disambiguate by suffix length: "T1_2" is the strand generator
    /// t^{12}, "T1_23" the twist generator t(1)^{23}.
    pub fn parse(s: &str) -> Option<Self> {
        let rest = s.strip_prefix('T')?;
        let (head, tail) = rest.split_once('_')?;
        match tail.len() {
            1 => {
                if head != "1" {
                    return None;
                }
                let j = tail.parse::<u8>().ok()?;
                (2..=4).contains(&j).then(|| Generator::t1(j))
            }
            2 => {
                let a = head.parse::<u8>().ok()?;
                let bytes = tail.as_bytes();
                let i = (bytes[0] as char).to_digit(10)? as u8;
                let j = (bytes[1] as char).to_digit(10)? as u8;
                (a < 2 && (2..=4).contains(&i) && (2..=4).contains(&j) && i != j)
                    .then(|| Generator::t(a, i, j))
            }
            _ => None,
        }
    }
}

/// A letter of one of the engine's alphabets.
///
/// `E0`, `E1`, `Em1` are the level-2 letters 0, 1, -1; `Ez` and `Emz2` are
/// the formal letters `z` and `-z^2` of the confluence construction; `Gen`
/// letters span the braid-algebra alphabet.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Letter {
    E0,
    E1,
    Em1,
    Ez,
    Emz2,
    Gen(Generator),
}

impl Letter {
    pub fn label(&self) -> String {
        match self {
            Letter::E0 => "0".into(),
            Letter::E1 => "1".into(),
            Letter::Em1 => "-1".into(),
            Letter::Ez => "z".into(),
            Letter::Emz2 => "-z2".into(),
            Letter::Gen(g) => g.label(),
        }
    }

    pub fn parse(s: &str) -> Option<Letter> {
        match s {
            "0" => Some(Letter::E0),
            "1" => Some(Letter::E1),
            "-1" => Some(Letter::Em1),
            "z" => Some(Letter::Ez),
            "-z2" => Some(Letter::Emz2),
            other => Generator::parse(other).map(Letter::Gen),
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Closed letter enumerations. Every series carries one as a tag; binary
/// operations require matching tags.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Alphabet {
    /// {0, 1}
    A01,
    /// {0, 1, -1}
    A012,
    /// {0, 1, z}
    AZ,
    /// {0, -1, z, -z2}
    AB,
    /// Degree-1 generators of the four-strand braid-type algebra, level 2.
    T42,
}

impl Alphabet {
    pub fn letters(&self) -> Vec<Letter> {
        use Letter::*;
        match self {
            Alphabet::A01 => vec![E0, E1],
            Alphabet::A012 => vec![E0, E1, Em1],
            Alphabet::AZ => vec![E0, E1, Ez],
            Alphabet::AB => vec![E0, Em1, Ez, Emz2],
            Alphabet::T42 => {
                let mut v: Vec<Letter> = (2..=4).map(|j| Gen(Generator::t1(j))).collect();
                for a in 0..2 {
                    for (i, j) in [(2, 3), (2, 4), (3, 4)] {
                        v.push(Gen(Generator::t(a, i, j)));
                    }
                }
                v
            }
        }
    }

    pub fn contains(&self, l: Letter) -> bool {
        matches!(
            (self, l),
            (Alphabet::A01, Letter::E0 | Letter::E1)
                | (Alphabet::A012, Letter::E0 | Letter::E1 | Letter::Em1)
                | (Alphabet::AZ, Letter::E0 | Letter::E1 | Letter::Ez)
                | (Alphabet::AB, Letter::E0 | Letter::Em1 | Letter::Ez | Letter::Emz2)
                | (Alphabet::T42, Letter::Gen(_))
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            Alphabet::A01 => "01",
            Alphabet::A012 => "012",
            Alphabet::AZ => "0_1_z",
            Alphabet::AB => "0_-1_z_-z2",
            Alphabet::T42 => "t42",
        }
    }

    pub fn from_name(s: &str) -> Option<Alphabet> {
        match s {
            "01" => Some(Alphabet::A01),
            "012" => Some(Alphabet::A012),
            "0_1_z" => Some(Alphabet::AZ),
            "0_-1_z_-z2" => Some(Alphabet::AB),
            "t42" => Some(Alphabet::T42),
            _ => None,
        }
    }
}

/// A finite sequence of letters; its weight is its length.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn single(l: Letter) -> Self {
        Word(vec![l])
    }

    pub fn weight(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// First letter != 0 and last letter != 1: indexes a convergent iterated
    /// integral from 0 to 1.
    pub fn is_admissible(&self) -> bool {
        match (self.0.first(), self.0.last()) {
            (None, None) => true,
            (Some(&f), Some(&l)) => f != Letter::E0 && l != Letter::E1,
            _ => unreachable!(),
        }
    }

    /// Comma-separated letter labels; the empty word renders as "".
    pub fn label(&self) -> String {
        self.0
            .iter()
            .map(|l| l.label())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse(s: &str) -> Result<Word, String> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Word::empty());
        }
        let mut letters = Vec::new();
        for part in s.split(',') {
            let part = part.trim();
            letters.push(Letter::parse(part).ok_or_else(|| format!("unknown letter {part:?}"))?);
        }
        Ok(Word(letters))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "(empty)")
        } else {
            write!(f, "{}", self.label())
        }
    }
}

/// All words of the given weight over the alphabet, in lexicographic order.
pub fn words_of_weight(alphabet: Alphabet, weight: usize) -> Vec<Word> {
    let letters = alphabet.letters();
    let mut out = Vec::new();
    let mut stack = vec![Vec::new()];
    while let Some(cur) = stack.pop() {
        if cur.len() == weight {
            out.push(Word(cur));
            continue;
        }
        // Push in reverse so the lexicographically smallest extension pops first.
        for &l in letters.iter().rev() {
            let mut next = cur.clone();
            next.push(l);
            stack.push(next);
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_labels_round_trip() {
        let w = Word(vec![Letter::E1, Letter::E0, Letter::Em1]);
        assert_eq!(w.label(), "1,0,-1");
        assert_eq!(Word::parse("1,0,-1").unwrap(), w);
        assert_eq!(Word::parse("").unwrap(), Word::empty());
    }

    #[test]
    fn generator_labels_round_trip() {
        for g in [
            Generator::t1(2),
            Generator::t(0, 2, 3),
            Generator::t(1, 3, 4),
        ] {
            assert_eq!(Generator::parse(&g.label()), Some(g));
        }
        // Canonical folding: t(a)^{42} is stored as t(a)^{24}.
        assert_eq!(Generator::t(1, 4, 2), Generator::t(1, 2, 4));
    }

    #[test]
    fn admissibility() {
        assert!(Word::parse("1,0").unwrap().is_admissible());
        assert!(!Word::parse("0,1").unwrap().is_admissible());
        assert!(!Word::parse("1,1").unwrap().is_admissible());
        assert!(Word::parse("-1").unwrap().is_admissible());
        assert!(Word::empty().is_admissible());
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(words_of_weight(Alphabet::A012, 3).len(), 27);
        assert_eq!(words_of_weight(Alphabet::AB, 2).len(), 16);
        assert_eq!(words_of_weight(Alphabet::T42, 1).len(), 9);
    }
}
