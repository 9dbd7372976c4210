//! Free graded-commutative algebras with Dyer-Lashof operations.
//!
//! The algebra on a set of graded generators is polynomial (exterior on odd
//! degrees at odd `p`) on the basis factors `Q^I e`: admissible side-`B`
//! words `I` applied to a generator `e` strictly above the instability
//! boundary. Words at the boundary evaluate to `p`-th powers and words below
//! it vanish, so every element has a unique expression in this basis.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::adem::{AdemError, Reducer};
use crate::modp::{FpScalar, Prime};
use crate::parse::{letter_for, split_terms, tokenize, ParseError, Token};
use crate::terms::{letters_degree, write_letters, LinComb, OpLetter, OpWord, Side, TermError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FreeError {
    DuplicateGenerator(String),
    UnknownGenerator(String),
    PrimeMismatch { left: Prime, right: Prime },
    /// Elements built over different generator sets.
    GeneratorMismatch,
    /// Operations acting on algebras must be side-`B` combinations.
    NotSideB,
    /// The pair is not a basis factor (inadmissible or not above the boundary).
    NotBasisFactor(String),
    /// Enumerations need every generator in positive degree.
    NonpositiveGenerator { name: String, degree: i64 },
    InvalidLengthCap,
    IncompatibleWindows(String),
    /// Suspension acts on algebras with exactly one generator.
    NotSingleGenerator(usize),
    Adem(AdemError),
    Term(TermError),
    Parse(ParseError),
}

impl fmt::Display for FreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FreeError::DuplicateGenerator(n) => write!(f, "generator '{n}' is declared twice"),
            FreeError::UnknownGenerator(n) => write!(f, "unknown generator '{n}'"),
            FreeError::PrimeMismatch { left, right } => write!(f, "prime mismatch: {left} vs {right}"),
            FreeError::GeneratorMismatch => f.write_str("elements live over different generator sets"),
            FreeError::NotSideB => f.write_str("only side-B operations act on algebras"),
            FreeError::NotBasisFactor(s) => write!(f, "{s} is not a basis factor"),
            FreeError::NonpositiveGenerator { name, degree } => write!(
                f,
                "generator '{name}' has degree {degree}; enumeration needs positive degrees (every degree is infinite otherwise)"
            ),
            FreeError::InvalidLengthCap => f.write_str("length cap must be at least 1"),
            FreeError::IncompatibleWindows(s) => write!(f, "incompatible windows: {s}"),
            FreeError::NotSingleGenerator(n) => write!(f, "suspension needs exactly one generator, found {n}"),
            FreeError::Adem(e) => write!(f, "{e}"),
            FreeError::Term(e) => write!(f, "{e}"),
            FreeError::Parse(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for FreeError {}

impl From<AdemError> for FreeError {
    fn from(e: AdemError) -> Self {
        FreeError::Adem(e)
    }
}

impl From<TermError> for FreeError {
    fn from(e: TermError) -> Self {
        FreeError::Term(e)
    }
}

impl From<ParseError> for FreeError {
    fn from(e: ParseError) -> Self {
        FreeError::Parse(e)
    }
}

/// Named generators with integer degrees; names are unique.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GeneratorSet {
    gens: Vec<(String, i64)>,
}

impl GeneratorSet {
    pub fn new<I, S>(gens: I) -> Result<GeneratorSet, FreeError>
    where
        I: IntoIterator<Item = (S, i64)>,
        S: Into<String>,
    {
        let mut out: Vec<(String, i64)> = Vec::new();
        for (name, degree) in gens {
            let name = name.into();
            if out.iter().any(|(n, _)| *n == name) {
                return Err(FreeError::DuplicateGenerator(name));
            }
            out.push((name, degree));
        }
        Ok(GeneratorSet { gens: out })
    }

    pub fn empty() -> GeneratorSet {
        GeneratorSet { gens: Vec::new() }
    }

    pub fn into_shared(self) -> Arc<GeneratorSet> {
        Arc::new(self)
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.gens[i].0
    }

    pub fn degree(&self, i: usize) -> i64 {
        self.gens[i].1
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|(n, _)| n == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> + '_ {
        self.gens.iter().map(|(n, d)| (n.as_str(), *d))
    }
}

/// A polynomial generator `Q^I e` of the free algebra; the word is admissible
/// and strictly above the instability boundary of `e`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Factor {
    word: OpWord,
    generator: usize,
}

impl Factor {
    pub fn word(&self) -> &OpWord {
        &self.word
    }

    pub fn generator(&self) -> usize {
        self.generator
    }

    pub fn degree(&self, gens: &GeneratorSet) -> i64 {
        self.word.degree() + gens.degree(self.generator)
    }
}

/// Whether `letters` applied to a generator of degree `g` is a basis factor.
pub fn is_basis_word(letters: &[OpLetter], g: i64, prime: Prime) -> bool {
    let word = OpWord::from_parts_unchecked(prime, Side::B, letters.to_vec());
    if !word.is_admissible() {
        return false;
    }
    match letters.split_first() {
        None => true,
        Some((head, tail)) => above_boundary(*head, g + letters_degree(tail, prime, Side::B), prime),
    }
}

/// Strictly above the instability boundary: `s > d` at `p = 2`, `2s > d` otherwise.
fn above_boundary(l: OpLetter, d: i64, prime: Prime) -> bool {
    if prime.is_two() {
        l.index > d
    } else {
        2 * l.index > d
    }
}

/// A product of basis factors with positive exponents, sorted by factor.
///
/// At odd primes odd-degree factors appear at most once. Monomials are
/// ordered by degree, then total exponent, then factors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AlgebraMonomial {
    degree: i64,
    factors: Vec<(Factor, u32)>,
}

impl Ord for AlgebraMonomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree
            .cmp(&other.degree)
            .then_with(|| self.length().cmp(&other.length()))
            .then_with(|| self.factors.cmp(&other.factors))
    }
}

impl PartialOrd for AlgebraMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl AlgebraMonomial {
    pub fn unit() -> AlgebraMonomial {
        AlgebraMonomial { degree: 0, factors: Vec::new() }
    }

    fn single(f: Factor, gens: &GeneratorSet) -> AlgebraMonomial {
        AlgebraMonomial { degree: f.degree(gens), factors: vec![(f, 1)] }
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    /// Total exponent.
    pub fn length(&self) -> u32 {
        self.factors.iter().map(|(_, e)| *e).sum()
    }

    pub fn factors(&self) -> &[(Factor, u32)] {
        &self.factors
    }

    pub fn is_unit(&self) -> bool {
        self.factors.is_empty()
    }

    /// `self * other` as a monomial and a Koszul sign, or `None` if an
    /// odd-degree factor would repeat.
    fn mul(&self, other: &AlgebraMonomial, prime: Prime, gens: &GeneratorSet) -> Option<(AlgebraMonomial, bool)> {
        let odd = |f: &Factor, e: u32| !prime.is_two() && f.degree(gens) % 2 != 0 && e % 2 == 1;
        let mut negative = false;
        if !prime.is_two() {
            // Each odd factor of `other` moves past the odd factors of `self` that sort after it.
            for (bf, be) in &other.factors {
                if odd(bf, *be) {
                    let passed = self.factors.iter().filter(|(af, ae)| af > bf && odd(af, *ae)).count();
                    negative ^= passed % 2 == 1;
                }
            }
        }
        let mut factors: Vec<(Factor, u32)> = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() || j < other.factors.len() {
            let take = match (self.factors.get(i), other.factors.get(j)) {
                (Some(a), Some(b)) => a.0.cmp(&b.0),
                (Some(_), None) => Ordering::Less,
                (None, _) => Ordering::Greater,
            };
            match take {
                Ordering::Less => {
                    factors.push(self.factors[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    factors.push(other.factors[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let (f, e) = (&self.factors[i].0, self.factors[i].1 + other.factors[j].1);
                    if !prime.is_two() && f.degree(gens) % 2 != 0 {
                        return None;
                    }
                    factors.push((f.clone(), e));
                    i += 1;
                    j += 1;
                }
            }
        }
        Some((AlgebraMonomial { degree: self.degree + other.degree, factors }, negative))
    }

    /// Splits off one copy of the first factor.
    fn split_first(&self, gens: &GeneratorSet) -> Option<(Factor, AlgebraMonomial)> {
        let ((f, e), rest) = self.factors.split_first()?;
        let mut factors = Vec::with_capacity(self.factors.len());
        if *e > 1 {
            factors.push((f.clone(), e - 1));
        }
        factors.extend_from_slice(rest);
        let fd = f.degree(gens);
        Some((f.clone(), AlgebraMonomial { degree: self.degree - fd, factors }))
    }

    fn write(&self, out: &mut impl fmt::Write, prime: Prime, gens: &GeneratorSet) -> fmt::Result {
        if self.factors.is_empty() {
            return out.write_str("1");
        }
        let mut first = true;
        for (f, e) in &self.factors {
            for _ in 0..*e {
                if !first {
                    out.write_char(' ')?;
                }
                first = false;
                if !f.word.is_empty() {
                    write_letters(out, f.word.letters(), prime, Side::B)?;
                    out.write_char(' ')?;
                }
                out.write_str(gens.name(f.generator))?;
            }
        }
        Ok(())
    }

    /// The monomial in the expression grammar read by [`parse_element`].
    pub fn to_text(&self, prime: Prime, gens: &GeneratorSet) -> String {
        let mut out = String::new();
        let _ = self.write(&mut out, prime, gens);
        out
    }
}

/// An element of the free algebra: a finite combination of monomials with
/// nonzero residues.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraElement {
    prime: Prime,
    gens: Arc<GeneratorSet>,
    terms: BTreeMap<AlgebraMonomial, u32>,
}

impl AlgebraElement {
    pub fn zero(prime: Prime, gens: Arc<GeneratorSet>) -> AlgebraElement {
        AlgebraElement { prime, gens, terms: BTreeMap::new() }
    }

    pub fn one(prime: Prime, gens: Arc<GeneratorSet>) -> AlgebraElement {
        let mut x = AlgebraElement::zero(prime, gens);
        x.terms.insert(AlgebraMonomial::unit(), 1);
        x
    }

    pub fn generator(prime: Prime, gens: Arc<GeneratorSet>, name: &str) -> Result<AlgebraElement, FreeError> {
        let i = gens.index_of(name).ok_or_else(|| FreeError::UnknownGenerator(name.to_string()))?;
        Ok(AlgebraElement::generator_at(prime, gens, i))
    }

    fn generator_at(prime: Prime, gens: Arc<GeneratorSet>, i: usize) -> AlgebraElement {
        let f = Factor { word: OpWord::identity(prime, Side::B), generator: i };
        AlgebraElement::from_monomial(prime, gens.clone(), AlgebraMonomial::single(f, &gens))
    }

    /// The basis factor `word` applied to the named generator.
    pub fn basis_factor(prime: Prime, gens: Arc<GeneratorSet>, word: OpWord, name: &str) -> Result<AlgebraElement, FreeError> {
        if word.prime() != prime {
            return Err(FreeError::PrimeMismatch { left: prime, right: word.prime() });
        }
        if word.side() != Side::B {
            return Err(FreeError::NotSideB);
        }
        let i = gens.index_of(name).ok_or_else(|| FreeError::UnknownGenerator(name.to_string()))?;
        if !is_basis_word(word.letters(), gens.degree(i), prime) {
            return Err(FreeError::NotBasisFactor(alloc::format!("{word} {name}")));
        }
        let f = Factor { word, generator: i };
        Ok(AlgebraElement::from_monomial(prime, gens.clone(), AlgebraMonomial::single(f, &gens)))
    }

    pub fn from_monomial(prime: Prime, gens: Arc<GeneratorSet>, m: AlgebraMonomial) -> AlgebraElement {
        let mut x = AlgebraElement::zero(prime, gens);
        x.terms.insert(m, 1);
        x
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn generators(&self) -> &Arc<GeneratorSet> {
        &self.gens
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

    pub fn iter(&self) -> impl Iterator<Item = (&AlgebraMonomial, FpScalar)> + '_ {
        self.terms.iter().map(move |(m, c)| (m, FpScalar::new(*c as i64, self.prime)))
    }

    pub fn coefficient(&self, m: &AlgebraMonomial) -> FpScalar {
        FpScalar::new(self.terms.get(m).copied().unwrap_or(0) as i64, self.prime)
    }

    /// Degree of the element if it is homogeneous and nonzero.
    pub fn homogeneous_degree(&self) -> Option<i64> {
        let first = self.terms.keys().next()?.degree;
        self.terms.keys().all(|m| m.degree == first).then_some(first)
    }

    fn check(&self, other: &AlgebraElement) -> Result<(), FreeError> {
        if self.prime != other.prime {
            return Err(FreeError::PrimeMismatch { left: self.prime, right: other.prime });
        }
        if !Arc::ptr_eq(&self.gens, &other.gens) && *self.gens != *other.gens {
            return Err(FreeError::GeneratorMismatch);
        }
        Ok(())
    }

    fn add_raw(&mut self, m: AlgebraMonomial, c: u32) {
        let p = self.prime.get();
        if c.is_multiple_of(p) {
            return;
        }
        match self.terms.entry(m) {
            alloc::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c % p);
            }
            alloc::collections::btree_map::Entry::Occupied(mut o) => {
                let s = (*o.get() + c % p) % p;
                if s == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn add_scaled(&mut self, other: &AlgebraElement, c: u32) {
        let p = self.prime.get() as u64;
        for (m, d) in &other.terms {
            self.add_raw(m.clone(), (c as u64 * *d as u64 % p) as u32);
        }
    }

    pub fn add(&self, other: &AlgebraElement) -> Result<AlgebraElement, FreeError> {
        self.check(other)?;
        let mut out = self.clone();
        out.add_scaled(other, 1);
        Ok(out)
    }

    pub fn sub(&self, other: &AlgebraElement) -> Result<AlgebraElement, FreeError> {
        self.check(other)?;
        let mut out = self.clone();
        out.add_scaled(other, self.prime.get() - 1);
        Ok(out)
    }

    pub fn scale(&self, c: FpScalar) -> AlgebraElement {
        let mut out = AlgebraElement::zero(self.prime, self.gens.clone());
        out.add_scaled(self, FpScalar::new(c.residue() as i64, self.prime).residue());
        out
    }

    pub fn mul(&self, other: &AlgebraElement) -> Result<AlgebraElement, FreeError> {
        self.check(other)?;
        let p = self.prime.get() as u64;
        let mut out = AlgebraElement::zero(self.prime, self.gens.clone());
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if let Some((m, negative)) = a.mul(b, self.prime, &self.gens) {
                    let mut c = *ca as u64 * *cb as u64 % p;
                    if negative {
                        c = (p - c) % p;
                    }
                    out.add_raw(m, c as u32);
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, n: u32) -> AlgebraElement {
        let mut out = AlgebraElement::one(self.prime, self.gens.clone());
        for _ in 0..n {
            out = out.mul(self).expect("same algebra");
        }
        out
    }

    /// The `p`-th power of a homogeneous element: `(sum c m)^p = sum c m^p`,
    /// where `m^p` vanishes at odd `p` as soon as `m` has an odd factor.
    fn frobenius(&self) -> AlgebraElement {
        let (prime, p) = (self.prime, self.prime.get());
        let mut out = AlgebraElement::zero(prime, self.gens.clone());
        for (m, c) in &self.terms {
            if !prime.is_two() && m.factors.iter().any(|(f, _)| f.degree(&self.gens) % 2 != 0) {
                continue;
            }
            let factors = m.factors.iter().map(|(f, e)| (f.clone(), e * p)).collect();
            out.add_raw(AlgebraMonomial { degree: m.degree * p as i64, factors }, *c);
        }
        out
    }

    pub fn to_canonical_string(&self) -> String {
        alloc::format!("{self}")
    }
}

impl fmt::Display for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if m.is_unit() {
                write!(f, "{c}")?;
                continue;
            }
            if *c != 1 {
                write!(f, "{c} ")?;
            }
            m.write(f, self.prime, &self.gens)?;
        }
        Ok(())
    }
}

/// Evaluates operations on elements of one free algebra, memoizing the
/// action of single letters on monomials.
pub struct Action {
    prime: Prime,
    gens: Arc<GeneratorSet>,
    reducer: Reducer,
    memo: BTreeMap<(OpLetter, AlgebraMonomial), AlgebraElement>,
}

impl Action {
    pub fn new(prime: Prime, gens: Arc<GeneratorSet>) -> Action {
        Action { prime, gens, reducer: Reducer::new(), memo: BTreeMap::new() }
    }

    pub fn with_reducer(mut self, reducer: Reducer) -> Action {
        self.reducer = reducer;
        self
    }

    fn zero(&self) -> AlgebraElement {
        AlgebraElement::zero(self.prime, self.gens.clone())
    }

    fn check(&self, x: &AlgebraElement) -> Result<(), FreeError> {
        self.zero().check(x)
    }

    /// Applies a side-`B` combination of words, each evaluated right to left.
    pub fn apply(&mut self, op: &LinComb, x: &AlgebraElement) -> Result<AlgebraElement, FreeError> {
        self.check(x)?;
        if op.prime() != self.prime {
            return Err(FreeError::PrimeMismatch { left: op.prime(), right: self.prime });
        }
        if op.side() != Side::B {
            return Err(FreeError::NotSideB);
        }
        let mut out = self.zero();
        for (w, c) in op.iter() {
            let mut y = x.clone();
            for l in w.letters().iter().rev() {
                y = self.apply_letter(*l, &y)?;
            }
            out.add_scaled(&y, c.residue());
        }
        Ok(out)
    }

    /// Applies a single word.
    pub fn apply_word(&mut self, word: &OpWord, x: &AlgebraElement) -> Result<AlgebraElement, FreeError> {
        self.apply(&LinComb::from_word(word.clone()), x)
    }

    pub fn apply_letter(&mut self, l: OpLetter, x: &AlgebraElement) -> Result<AlgebraElement, FreeError> {
        self.check(x)?;
        let mut out = self.zero();
        for (m, c) in &x.terms {
            let y = self.apply_monomial(l, m)?;
            out.add_scaled(&y, *c);
        }
        Ok(out)
    }

    fn apply_monomial(&mut self, l: OpLetter, m: &AlgebraMonomial) -> Result<AlgebraElement, FreeError> {
        let key = (l, m.clone());
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        let value = self.evaluate_monomial(l, m)?;
        self.memo.insert(key, value.clone());
        Ok(value)
    }

    fn evaluate_monomial(&mut self, l: OpLetter, m: &AlgebraMonomial) -> Result<AlgebraElement, FreeError> {
        let prime = self.prime;
        if m.is_unit() {
            // Q^0 1 = 1 = 1^p; every other letter kills the unit.
            return Ok(if l == OpLetter::plain(0) { AlgebraElement::one(prime, self.gens.clone()) } else { self.zero() });
        }
        if m.factors.len() == 1 && m.factors[0].1 == 1 {
            return self.apply_to_factor(l, &m.factors[0].0);
        }
        let (f, rest) = m.split_first(&self.gens).expect("nonunit monomial");
        let fd = f.degree(&self.gens);
        let rd = rest.degree;
        let f_elem = AlgebraElement::from_monomial(prime, self.gens.clone(), AlgebraMonomial::single(f, &self.gens));
        let f_mono = f_elem.terms.keys().next().expect("single term").clone();
        let s = l.index;
        let mut out = self.zero();
        if prime.is_two() {
            for i in fd..=s - rd {
                let a = self.apply_monomial(OpLetter::plain(i), &f_mono)?;
                if a.is_zero() {
                    continue;
                }
                let b = self.apply_monomial(OpLetter::plain(s - i), &rest)?;
                out.add_scaled(&a.mul(&b)?, 1);
            }
            return Ok(out);
        }
        let lo = ceil_div(fd, 2);
        let hi = floor_div(2 * s - rd, 2);
        let p = prime.get();
        for i in lo..=hi {
            if l.bockstein == 0 {
                let a = self.apply_monomial(OpLetter::new(0, i), &f_mono)?;
                if !a.is_zero() {
                    let b = self.apply_monomial(OpLetter::new(0, s - i), &rest)?;
                    out.add_scaled(&a.mul(&b)?, 1);
                }
            } else {
                let a = self.apply_monomial(OpLetter::new(1, i), &f_mono)?;
                if !a.is_zero() {
                    let b = self.apply_monomial(OpLetter::new(0, s - i), &rest)?;
                    out.add_scaled(&a.mul(&b)?, 1);
                }
                let a = self.apply_monomial(OpLetter::new(0, i), &f_mono)?;
                if !a.is_zero() {
                    let b = self.apply_monomial(OpLetter::new(1, s - i), &rest)?;
                    // The Bockstein passes the factor `f`.
                    let sign = if fd % 2 == 0 { 1 } else { p - 1 };
                    out.add_scaled(&a.mul(&b)?, sign);
                }
            }
        }
        Ok(out)
    }

    /// `l` applied to a basis factor: reduce `l I` and evaluate each word.
    fn apply_to_factor(&mut self, l: OpLetter, f: &Factor) -> Result<AlgebraElement, FreeError> {
        let prime = self.prime;
        let mut letters = Vec::with_capacity(f.word.len() + 1);
        letters.push(l);
        letters.extend_from_slice(f.word.letters());
        let word = OpWord::from_parts_unchecked(prime, Side::B, letters);
        let reduced = self.reducer.reduce(&LinComb::from_word(word))?;
        let mut out = self.zero();
        for (w, c) in reduced.iter() {
            let y = self.admissible_on_generator(w.letters(), f.generator);
            out.add_scaled(&y, c.residue());
        }
        Ok(out)
    }

    /// An admissible word on a generator: a basis factor above the boundary,
    /// a `p`-th power at it, zero below it.
    fn admissible_on_generator(&self, letters: &[OpLetter], g: usize) -> AlgebraElement {
        let prime = self.prime;
        let Some((head, tail)) = letters.split_first() else {
            return AlgebraElement::generator_at(prime, self.gens.clone(), g);
        };
        let d = self.gens.degree(g) + letters_degree(tail, prime, Side::B);
        let t = if prime.is_two() { head.index } else { 2 * head.index };
        match t.cmp(&d) {
            Ordering::Less => self.zero(),
            Ordering::Equal if head.bockstein == 1 => self.zero(),
            Ordering::Equal => self.admissible_on_generator(tail, g).frobenius(),
            Ordering::Greater => {
                let f = Factor { word: OpWord::from_parts_unchecked(prime, Side::B, letters.to_vec()), generator: g };
                AlgebraElement::from_monomial(prime, self.gens.clone(), AlgebraMonomial::single(f, &self.gens))
            }
        }
    }
}

fn floor_div(a: i64, b: i64) -> i64 {
    a.div_euclid(b)
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -(-a).div_euclid(b)
}

/// Applies a side-`B` combination to an element with a fresh [`Action`].
pub fn apply_op(op: &LinComb, x: &AlgebraElement) -> Result<AlgebraElement, FreeError> {
    Action::new(x.prime(), x.generators().clone()).apply(op, x)
}

/// Basis factors `Q^I e` of degree at most `max_degree` with `len(I) <= cap`.
fn basis_factors(prime: Prime, gens: &GeneratorSet, max_degree: i64, cap: usize) -> Vec<(Factor, i64)> {
    fn extend(prime: Prime, g: usize, word: &mut Vec<OpLetter>, d: i64, max_degree: i64, cap: usize, out: &mut Vec<(Factor, i64)>) {
        out.push((Factor { word: OpWord::from_parts_unchecked(prime, Side::B, word.clone()), generator: g }, d));
        if word.len() == cap {
            return;
        }
        let head = word.first().copied();
        let p = prime.get() as i64;
        for e in 0..=if prime.is_two() { 0 } else { 1 } {
            // Above the boundary: s > d (p = 2), 2s > d (odd p).
            let lo = if prime.is_two() { d + 1 } else { floor_div(d, 2) + 1 };
            let step = if prime.is_two() { 1 } else { 2 * (p - 1) };
            let mut hi = floor_div(max_degree - d + e, step);
            if let Some(h) = head {
                let adm = if prime.is_two() { 2 * h.index } else { p * h.index - h.bockstein as i64 };
                hi = hi.min(adm);
            }
            for s in lo..=hi {
                let l = OpLetter::new(e as u8, s);
                word.insert(0, l);
                extend(prime, g, word, d + l.degree(prime, Side::B), max_degree, cap, out);
                word.remove(0);
            }
        }
    }
    let mut out = Vec::new();
    for g in 0..gens.len() {
        let d = gens.degree(g);
        if d <= max_degree {
            extend(prime, g, &mut Vec::new(), d, max_degree, cap, &mut out);
        }
    }
    out.sort();
    out
}

/// All monomials of the given degree in basis factors whose words have length
/// at most `length_cap`, sorted in monomial order.
pub fn free_basis(prime: Prime, gens: &Arc<GeneratorSet>, degree: i64, length_cap: usize) -> Result<Vec<AlgebraMonomial>, FreeError> {
    if length_cap == 0 {
        return Err(FreeError::InvalidLengthCap);
    }
    for (name, d) in gens.iter() {
        if d <= 0 {
            return Err(FreeError::NonpositiveGenerator { name: name.to_string(), degree: d });
        }
    }
    if degree < 0 {
        return Ok(Vec::new());
    }
    let factors = basis_factors(prime, gens, degree, length_cap);
    let mut out = Vec::new();
    let mut chosen: Vec<(Factor, u32)> = Vec::new();
    fn choose(
        prime: Prime,
        factors: &[(Factor, i64)],
        start: usize,
        remaining: i64,
        total: i64,
        chosen: &mut Vec<(Factor, u32)>,
        out: &mut Vec<AlgebraMonomial>,
    ) {
        if remaining == 0 {
            out.push(AlgebraMonomial { degree: total, factors: chosen.clone() });
            return;
        }
        for k in start..factors.len() {
            let (f, d) = &factors[k];
            let max_e = if !prime.is_two() && d % 2 != 0 { 1 } else { (remaining / d) as u32 };
            for e in 1..=max_e {
                if d * e as i64 > remaining {
                    break;
                }
                chosen.push((f.clone(), e));
                choose(prime, factors, k + 1, remaining - d * e as i64, total, chosen, out);
                chosen.pop();
            }
        }
    }
    choose(prime, &factors, 0, degree, degree, &mut chosen, &mut out);
    out.sort();
    Ok(out)
}

/// The stage map `Q(e_n) -> Q(e_{n-1})` on the reduced free algebra on one
/// generator `e` of degree `-n`: products and constants go to zero and a
/// basis factor `Q^I e` goes to `Q^I e'` evaluated on the generator `e'` of
/// degree `-(n-1)`, which is a `p`-th power when `I` sits on the new boundary.
pub fn suspension_image(x: &AlgebraElement) -> Result<AlgebraElement, FreeError> {
    let gens = x.generators();
    if gens.len() != 1 {
        return Err(FreeError::NotSingleGenerator(gens.len()));
    }
    let (name, d) = (gens.name(0), gens.degree(0));
    let target = GeneratorSet::new([(alloc::format!("{name}'"), d + 1)])?.into_shared();
    let action = Action::new(x.prime(), target.clone());
    let mut out = AlgebraElement::zero(x.prime(), target);
    for (m, c) in &x.terms {
        if m.factors.len() == 1 && m.factors[0].1 == 1 {
            let y = action.admissible_on_generator(m.factors[0].0.word.letters(), 0);
            out.add_scaled(&y, *c);
        }
    }
    Ok(out)
}

/// Parses an element: each factor chunk is operation letters followed by a
/// generator, chunks multiply, and the letters are evaluated on the generator.
pub fn parse_element(text: &str, prime: Prime, gens: &Arc<GeneratorSet>) -> Result<AlgebraElement, FreeError> {
    parse_element_with(&mut Action::new(prime, gens.clone()), text)
}

/// Like [`parse_element`], reusing an [`Action`].
pub fn parse_element_with(action: &mut Action, text: &str) -> Result<AlgebraElement, FreeError> {
    let (prime, gens) = (action.prime, action.gens.clone());
    let tokens = tokenize(text)?;
    let mut out = AlgebraElement::zero(prime, gens.clone());
    for term in split_terms(&tokens, prime, text.len())? {
        let mut value = AlgebraElement::one(prime, gens.clone());
        let mut letters: Vec<OpLetter> = Vec::new();
        let mut pending = term.position;
        for f in term.factors {
            match &f.token {
                Token::Letter(kind, index) => {
                    if letters.is_empty() {
                        pending = f.position;
                    }
                    letters.push(letter_for(*kind, *index, prime, Side::B, f.position)?);
                }
                Token::Ident(name) => {
                    let g = gens
                        .index_of(name)
                        .ok_or_else(|| ParseError::new(f.position, alloc::format!("unknown generator '{name}'")))?;
                    let base = AlgebraElement::generator_at(prime, gens.clone(), g);
                    let word = OpWord::from_parts_unchecked(prime, Side::B, core::mem::take(&mut letters));
                    let chunk = action.apply_word(&word, &base)?;
                    value = value.mul(&chunk)?;
                }
                _ => unreachable!("split_terms only yields factor tokens"),
            }
        }
        if !letters.is_empty() {
            return Err(ParseError::new(pending, "operation letters must be followed by a generator").into());
        }
        out.add_scaled(&value, term.coefficient.residue());
    }
    Ok(out)
}
