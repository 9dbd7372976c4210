//! Operation letters, words and their formal linear combinations.
//!
//! Side `B` is the homological Dyer-Lashof convention with arbitrary integer
//! indices; side `A` is the classical cohomological Steenrod convention. A
//! word lists its letters left to right; the rightmost letter acts first.

use alloc::collections::btree_map::{self, BTreeMap};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::modp::{FpScalar, Prime};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    /// Generalized operations, arbitrary integer indices.
    B,
    /// Steenrod algebra, nonnegative indices.
    A,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::B => "B",
            Side::A => "A",
        })
    }
}

/// `β^ε P^s` at odd primes, `Q^s` / `Sq^s` at `p = 2` (where `ε = 0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpLetter {
    pub bockstein: u8,
    pub index: i64,
}

impl OpLetter {
    pub const fn new(bockstein: u8, index: i64) -> OpLetter {
        OpLetter { bockstein, index }
    }

    pub const fn plain(index: i64) -> OpLetter {
        OpLetter { bockstein: 0, index }
    }

    /// Degree shift of a single letter.
    pub fn degree(self, prime: Prime, side: Side) -> i64 {
        let p = prime.get() as i64;
        let e = self.bockstein as i64;
        match (prime.is_two(), side) {
            (true, _) => self.index,
            (false, Side::B) => 2 * self.index * (p - 1) - e,
            (false, Side::A) => 2 * self.index * (p - 1) + e,
        }
    }

    /// The unit letter `Sq^0` / `P^0` of the Steenrod algebra.
    #[inline]
    pub(crate) fn is_identity_on_a(self) -> bool {
        self.bockstein == 0 && self.index == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TermError {
    BocksteinAtTwo { position: usize },
    BadBockstein { position: usize, value: u8 },
    NegativeSteenrodIndex { position: usize, index: i64 },
    SideA,
    WeightOverflow,
    PrimeMismatch { left: Prime, right: Prime },
    SideMismatch { left: Side, right: Side },
}

impl fmt::Display for TermError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermError::BocksteinAtTwo { position } => {
                write!(f, "letter {position}: no Bockstein letters at p = 2")
            }
            TermError::BadBockstein { position, value } => {
                write!(f, "letter {position}: Bockstein exponent must be 0 or 1, got {value}")
            }
            TermError::NegativeSteenrodIndex { position, index } => {
                write!(f, "letter {position}: Steenrod index {index} is negative")
            }
            TermError::SideA => f.write_str("weight and excess are defined for side B only"),
            TermError::WeightOverflow => f.write_str("weight does not fit in 64 bits"),
            TermError::PrimeMismatch { left, right } => write!(f, "prime mismatch: {left} vs {right}"),
            TermError::SideMismatch { left, right } => write!(f, "side mismatch: {left} vs {right}"),
        }
    }
}

impl core::error::Error for TermError {}

/// Excess of a word; the empty word has infinite excess.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Excess {
    Finite(i64),
    Infinite,
}

impl Excess {
    pub fn at_least(self, bound: i64) -> bool {
        match self {
            Excess::Infinite => true,
            Excess::Finite(e) => e >= bound,
        }
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            Excess::Finite(e) => Some(e),
            Excess::Infinite => None,
        }
    }
}

impl fmt::Display for Excess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Excess::Finite(e) => write!(f, "{e}"),
            Excess::Infinite => f.write_str("inf"),
        }
    }
}

/// Words are ordered by length first, then lexicographically.
pub(crate) fn cmp_letters(a: &[OpLetter], b: &[OpLetter]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// A composite of operation letters at a fixed prime and side.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OpWord {
    prime: Prime,
    side: Side,
    letters: Vec<OpLetter>,
}

impl Ord for OpWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.prime
            .cmp(&other.prime)
            .then(self.side.cmp(&other.side))
            .then_with(|| cmp_letters(&self.letters, &other.letters))
    }
}

impl PartialOrd for OpWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn validate(prime: Prime, side: Side, letters: &[OpLetter]) -> Result<(), TermError> {
    for (position, l) in letters.iter().enumerate() {
        if l.bockstein > 1 {
            return Err(TermError::BadBockstein { position, value: l.bockstein });
        }
        if prime.is_two() && l.bockstein != 0 {
            return Err(TermError::BocksteinAtTwo { position });
        }
        if side == Side::A && l.index < 0 {
            return Err(TermError::NegativeSteenrodIndex { position, index: l.index });
        }
    }
    Ok(())
}

impl OpWord {
    /// Builds a word, checking the letter invariants. On side `A` the unit
    /// letters `Sq^0` / `P^0` are deleted.
    pub fn new(prime: Prime, side: Side, mut letters: Vec<OpLetter>) -> Result<OpWord, TermError> {
        validate(prime, side, &letters)?;
        if side == Side::A {
            letters.retain(|l| !l.is_identity_on_a());
        }
        Ok(OpWord { prime, side, letters })
    }

    /// Side-`A` normalization of raw letters: unit letters vanish, and a
    /// negative index annihilates the whole word (`None`).
    pub fn steenrod_normalized(prime: Prime, mut letters: Vec<OpLetter>) -> Option<OpWord> {
        if letters.iter().any(|l| l.index < 0) {
            return None;
        }
        letters.retain(|l| !l.is_identity_on_a());
        Some(OpWord { prime, side: Side::A, letters })
    }

    pub(crate) fn from_parts_unchecked(prime: Prime, side: Side, letters: Vec<OpLetter>) -> OpWord {
        OpWord { prime, side, letters }
    }

    pub fn identity(prime: Prime, side: Side) -> OpWord {
        OpWord { prime, side, letters: Vec::new() }
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn letters(&self) -> &[OpLetter] {
        &self.letters
    }

    pub fn into_letters(self) -> Vec<OpLetter> {
        self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn degree(&self) -> i64 {
        letters_degree(&self.letters, self.prime, self.side)
    }

    /// `p` raised to the word length.
    pub fn weight(&self) -> Result<u64, TermError> {
        if self.side == Side::A {
            return Err(TermError::SideA);
        }
        (self.prime.get() as u64).checked_pow(self.letters.len() as u32).ok_or(TermError::WeightOverflow)
    }

    /// Head threshold minus the degree of the tail.
    pub fn excess(&self) -> Result<Excess, TermError> {
        if self.side == Side::A {
            return Err(TermError::SideA);
        }
        Ok(letters_excess(&self.letters, self.prime))
    }

    pub fn is_admissible(&self) -> bool {
        self.letters.windows(2).all(|w| pair_is_admissible(w[0], w[1], self.prime, self.side))
    }

    /// Composition: `self` after `other`.
    pub fn compose(&self, other: &OpWord) -> Result<OpWord, TermError> {
        check_compatible(self.prime, self.side, other.prime, other.side)?;
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Ok(OpWord { prime: self.prime, side: self.side, letters })
    }
}

pub(crate) fn check_compatible(p: Prime, s: Side, q: Prime, t: Side) -> Result<(), TermError> {
    if p != q {
        return Err(TermError::PrimeMismatch { left: p, right: q });
    }
    if s != t {
        return Err(TermError::SideMismatch { left: s, right: t });
    }
    Ok(())
}

pub(crate) fn letters_degree(letters: &[OpLetter], prime: Prime, side: Side) -> i64 {
    letters.iter().map(|l| l.degree(prime, side)).sum()
}

/// Instability threshold of a side-`B` letter: `s` at `p = 2`, `2s - ε` otherwise.
pub(crate) fn letter_threshold(l: OpLetter, prime: Prime) -> i64 {
    if prime.is_two() {
        l.index
    } else {
        2 * l.index - l.bockstein as i64
    }
}

pub(crate) fn letters_excess(letters: &[OpLetter], prime: Prime) -> Excess {
    match letters.split_first() {
        None => Excess::Infinite,
        Some((head, tail)) => {
            Excess::Finite(letter_threshold(*head, prime) - letters_degree(tail, prime, Side::B))
        }
    }
}

/// Admissibility of an adjacent pair `a b` (with `b` acting first).
pub fn pair_is_admissible(a: OpLetter, b: OpLetter, prime: Prime, side: Side) -> bool {
    let p = prime.get() as i64;
    let eb = b.bockstein as i64;
    match (prime.is_two(), side) {
        (true, Side::B) => a.index <= 2 * b.index,
        (false, Side::B) => a.index <= p * b.index - eb,
        (true, Side::A) => a.index >= 2 * b.index,
        (false, Side::A) => a.index >= p * b.index + eb,
    }
}

/// A finite `F_p`-linear combination of words in canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinComb {
    prime: Prime,
    side: Side,
    terms: BTreeMap<OpWord, u32>,
}

impl LinComb {
    pub fn zero(prime: Prime, side: Side) -> LinComb {
        LinComb { prime, side, terms: BTreeMap::new() }
    }

    pub fn identity(prime: Prime, side: Side) -> LinComb {
        LinComb::from_word(OpWord::identity(prime, side))
    }

    pub fn from_word(word: OpWord) -> LinComb {
        let mut out = LinComb::zero(word.prime, word.side);
        out.terms.insert(word, 1);
        out
    }

    /// Builds a combination from raw `(letters, coefficient)` pairs, validating
    /// each word.
    pub fn from_terms<I>(prime: Prime, side: Side, terms: I) -> Result<LinComb, TermError>
    where
        I: IntoIterator<Item = (Vec<OpLetter>, i64)>,
    {
        let mut out = LinComb::zero(prime, side);
        for (letters, c) in terms {
            let word = OpWord::new(prime, side, letters)?;
            out.add_term(word, FpScalar::new(c, prime));
        }
        Ok(out)
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, word: &OpWord) -> FpScalar {
        FpScalar::new(self.terms.get(word).copied().unwrap_or(0) as i64, self.prime)
    }

    /// Terms in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&OpWord, FpScalar)> + '_ {
        let p = self.prime;
        self.terms.iter().map(move |(w, c)| (w, FpScalar::new(*c as i64, p)))
    }

    pub fn words(&self) -> impl Iterator<Item = &OpWord> + '_ {
        self.terms.keys()
    }

    /// Adds `c * word`. Panics if the word lives at a different prime or side.
    pub fn add_term(&mut self, word: OpWord, c: FpScalar) {
        assert!(word.prime == self.prime && word.side == self.side, "word does not belong to this combination");
        self.add_raw(word, c.residue());
    }

    pub(crate) fn add_raw(&mut self, word: OpWord, c: u32) {
        if c == 0 {
            return;
        }
        let p = self.prime.get();
        match self.terms.entry(word) {
            btree_map::Entry::Vacant(v) => {
                v.insert(c % p);
            }
            btree_map::Entry::Occupied(mut o) => {
                let sum = ((*o.get() as u64 + c as u64) % p as u64) as u32;
                if sum == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &LinComb) -> Result<LinComb, TermError> {
        check_compatible(self.prime, self.side, other.prime, other.side)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_raw(w.clone(), *c);
        }
        Ok(out)
    }

    pub fn scale(&self, c: FpScalar) -> LinComb {
        let mut out = LinComb::zero(self.prime, self.side);
        if c.is_zero() {
            return out;
        }
        for (w, d) in &self.terms {
            out.add_raw(w.clone(), (FpScalar::new(*d as i64, self.prime) * c).residue());
        }
        out
    }

    pub fn sub(&self, other: &LinComb) -> Result<LinComb, TermError> {
        self.add(&other.scale(FpScalar::new(-1, self.prime)))
    }

    /// Composition product `self ∘ other`, bilinear on words.
    pub fn compose(&self, other: &LinComb) -> Result<LinComb, TermError> {
        check_compatible(self.prime, self.side, other.prime, other.side)?;
        let mut out = LinComb::zero(self.prime, self.side);
        let p = self.prime.get() as u64;
        for (w, c) in &self.terms {
            for (v, d) in &other.terms {
                out.add_raw(w.compose(v)?, (*c as u64 * *d as u64 % p) as u32);
            }
        }
        Ok(out)
    }

    /// Builds from distinct words with nonzero residues.
    pub(crate) fn from_distinct_unchecked(prime: Prime, side: Side, terms: Vec<(OpWord, u32)>) -> LinComb {
        LinComb { prime, side, terms: terms.into_iter().collect() }
    }

    pub(crate) fn raw_terms(&self) -> &BTreeMap<OpWord, u32> {
        &self.terms
    }
}

/// Prints a single letter in the expression grammar.
pub fn write_letter(f: &mut impl fmt::Write, l: OpLetter, prime: Prime, side: Side) -> fmt::Result {
    match (prime.is_two(), side) {
        (true, Side::B) => write!(f, "Q^{}", l.index),
        (true, Side::A) => write!(f, "Sq^{}", l.index),
        (false, _) => {
            if l.bockstein == 1 {
                write!(f, "bP^{}", l.index)
            } else {
                write!(f, "P^{}", l.index)
            }
        }
    }
}

pub(crate) fn write_letters(f: &mut impl fmt::Write, letters: &[OpLetter], prime: Prime, side: Side) -> fmt::Result {
    for (i, l) in letters.iter().enumerate() {
        if i > 0 {
            f.write_char(' ')?;
        }
        write_letter(f, *l, prime, side)?;
    }
    Ok(())
}

impl fmt::Display for OpWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("1");
        }
        write_letters(f, &self.letters, self.prime, self.side)
    }
}

impl fmt::Display for LinComb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if w.is_empty() {
                write!(f, "{c}")?;
            } else {
                if *c != 1 {
                    write!(f, "{c} ")?;
                }
                write_letters(f, &w.letters, self.prime, self.side)?;
            }
        }
        Ok(())
    }
}

impl LinComb {
    pub fn to_canonical_string(&self) -> String {
        alloc::format!("{self}")
    }
}
