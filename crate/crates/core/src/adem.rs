//! Adem relations and reduction to the admissible basis.
//!
//! Side `B` uses the Dyer-Lashof form of the relations, side `A` the classical
//! Steenrod form. Pair expansions are memoized in a [`RewriteCache`]. The
//! cache is owned by a [`Reducer`]; concurrent callers use one reducer each.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashMap;

use crate::modp::{binom_mod_p, FpScalar, Prime};
use crate::terms::{check_compatible, pair_is_admissible, LinComb, OpLetter, OpWord, Side, TermError};

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AdemError {
    /// `adem_step` was called on a pair that is already admissible.
    AdmissiblePair { left: OpLetter, right: OpLetter },
    BudgetExhausted { steps: u64 },
    Term(TermError),
}

impl fmt::Display for AdemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdemError::AdmissiblePair { left, right } => write!(
                f,
                "pair ({}, {}) ({}, {}) is admissible; no Adem relation applies",
                left.bockstein, left.index, right.bockstein, right.index
            ),
            AdemError::BudgetExhausted { steps } => write!(f, "rewrite budget exhausted after {steps} steps"),
            AdemError::Term(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for AdemError {}

impl From<TermError> for AdemError {
    fn from(e: TermError) -> Self {
        AdemError::Term(e)
    }
}

/// Which inadmissible pair of a word gets rewritten first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    Leftmost,
    Rightmost,
}

fn sign(n: i64) -> i64 {
    if n.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Accumulator of raw length-≤2 words.
struct PairSum {
    prime: Prime,
    terms: BTreeMap<Vec<OpLetter>, u32>,
}

impl PairSum {
    fn new(prime: Prime) -> Self {
        PairSum { prime, terms: BTreeMap::new() }
    }

    fn push(&mut self, coefficient: FpScalar, letters: Vec<OpLetter>) {
        if coefficient.is_zero() {
            return;
        }
        let p = self.prime.get() as u64;
        let slot = self.terms.entry(letters).or_insert(0);
        *slot = ((*slot as u64 + coefficient.residue() as u64) % p) as u32;
    }
}

/// Iterates `i` upward from the first value with `lower(i) >= 0` until the
/// binomial `C(upper(i), lower(i))` has vanished for good.
///
/// Both arguments are affine in `i` with `lower` growing exactly one faster
/// than `upper`, so once `lower > upper >= 0` every later term vanishes.
fn adem_range(first: i64, lower: impl Fn(i64) -> i64, upper: impl Fn(i64) -> i64) -> impl Iterator<Item = i64> {
    let mut i = first;
    while lower(i) < 0 {
        i += 1;
    }
    core::iter::from_fn(move || {
        let u = upper(i);
        if u >= 0 && lower(i) > u {
            return None;
        }
        let cur = i;
        i += 1;
        Some(cur)
    })
}

fn div_ceil(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

/// Expands the inadmissible pair `a b` by its Adem relation.
///
/// The result contains words of length at most two; on side `A` the unit
/// letters are already removed.
pub fn adem_step(a: OpLetter, b: OpLetter, prime: Prime, side: Side) -> Result<LinComb, AdemError> {
    if pair_is_admissible(a, b, prime, side) {
        return Err(AdemError::AdmissiblePair { left: a, right: b });
    }
    OpWord::new(prime, side, vec![a, b])?;
    let sum = match side {
        Side::B => adem_b(a, b, prime),
        Side::A => adem_a(a, b, prime),
    };
    let mut out = LinComb::zero(prime, side);
    for (letters, c) in sum.terms {
        let word = match side {
            Side::B => OpWord::from_parts_unchecked(prime, side, letters),
            Side::A => OpWord::steenrod_normalized(prime, letters).expect("Adem outputs have nonnegative indices"),
        };
        out.add_raw(word, c);
    }
    Ok(out)
}

fn adem_b(a: OpLetter, b: OpLetter, prime: Prime) -> PairSum {
    let mut out = PairSum::new(prime);
    let (r, s) = (a.index, b.index);
    if prime.is_two() {
        // Q^r Q^s = sum_i C(i-s-1, 2i-r) Q^{r+s-i} Q^i, r > 2s
        for i in adem_range(div_ceil(r, 2), |i| 2 * i - r, |i| i - s - 1) {
            let c = binom_mod_p(i - s - 1, 2 * i - r, prime);
            out.push(c, vec![OpLetter::plain(r + s - i), OpLetter::plain(i)]);
        }
        return out;
    }
    let p = prime.get() as i64;
    let e1 = a.bockstein;
    if b.bockstein == 0 {
        // P^r P^s, r > ps
        for i in adem_range(div_ceil(r, p), |i| p * i - r, |i| (p - 1) * (i - s) - 1) {
            let c = binom_mod_p((p - 1) * (i - s) - 1, p * i - r, prime) * FpScalar::new(sign(r + i), prime);
            out.push(c, vec![OpLetter::new(e1, r + s - i), OpLetter::new(0, i)]);
        }
    } else {
        // P^r βP^s, r >= ps; a leading β kills the βP-headed terms
        if e1 == 0 {
            for i in adem_range(div_ceil(r, p), |i| p * i - r, |i| (p - 1) * (i - s)) {
                let c = binom_mod_p((p - 1) * (i - s), p * i - r, prime) * FpScalar::new(sign(r + i), prime);
                out.push(c, vec![OpLetter::new(1, r + s - i), OpLetter::new(0, i)]);
            }
        }
        for i in adem_range(div_ceil(r + 1, p), |i| p * i - r - 1, |i| (p - 1) * (i - s) - 1) {
            let c = binom_mod_p((p - 1) * (i - s) - 1, p * i - r - 1, prime) * FpScalar::new(-sign(r + i), prime);
            out.push(c, vec![OpLetter::new(e1, r + s - i), OpLetter::new(1, i)]);
        }
    }
    out
}

fn adem_a(a: OpLetter, b: OpLetter, prime: Prime) -> PairSum {
    let mut out = PairSum::new(prime);
    let (x, y) = (a.index, b.index);
    if prime.is_two() {
        // Sq^a Sq^b = sum_c C(b-c-1, a-2c) Sq^{a+b-c} Sq^c, a < 2b
        for c in 0..=x.div_euclid(2) {
            let k = binom_mod_p(y - c - 1, x - 2 * c, prime);
            out.push(k, vec![OpLetter::plain(x + y - c), OpLetter::plain(c)]);
        }
        return out;
    }
    let p = prime.get() as i64;
    let e1 = a.bockstein;
    if b.bockstein == 0 {
        // P^a P^b, a < pb
        for i in 0..=x.div_euclid(p) {
            let k = binom_mod_p((p - 1) * (y - i) - 1, x - p * i, prime) * FpScalar::new(sign(x + i), prime);
            out.push(k, vec![OpLetter::new(e1, x + y - i), OpLetter::new(0, i)]);
        }
    } else {
        // P^a β P^b, a <= pb
        if e1 == 0 {
            for i in 0..=x.div_euclid(p) {
                let k = binom_mod_p((p - 1) * (y - i), x - p * i, prime) * FpScalar::new(sign(x + i), prime);
                out.push(k, vec![OpLetter::new(1, x + y - i), OpLetter::new(0, i)]);
            }
        }
        if x >= 1 {
            for i in 0..=(x - 1).div_euclid(p) {
                let k = binom_mod_p((p - 1) * (y - i) - 1, x - p * i - 1, prime) * FpScalar::new(-sign(x + i), prime);
                out.push(k, vec![OpLetter::new(e1, x + y - i), OpLetter::new(1, i)]);
            }
        }
    }
    out
}

/// Termination measure of a word: letter degrees weighted by position.
///
/// Positions count from the right on side `B` and from the left on side `A`,
/// starting at 1. Every Adem step strictly lowers it.
pub fn moment(word: &OpWord) -> i64 {
    let (prime, side) = (word.prime(), word.side());
    let n = word.len() as i64;
    word.letters()
        .iter()
        .enumerate()
        .map(|(j, l)| {
            let pos = match side {
                Side::B => n - j as i64,
                Side::A => j as i64 + 1,
            };
            pos * l.degree(prime, side)
        })
        .sum()
}

/// Raw expansion of a pair: words of length at most two with residues.
pub(crate) type PairTerms = Arc<[(Vec<OpLetter>, u32)]>;

/// Memoized pair expansions keyed by `(prime, side, left, right)`.
///
/// Entries are only ever added, and each equals the direct evaluation of the
/// corresponding Adem sum.
#[derive(Clone, Debug, Default)]
pub struct RewriteCache {
    pairs: BTreeMap<(Prime, Side, OpLetter, OpLetter), PairTerms>,
}

impl RewriteCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The expansion of the inadmissible pair `a b`, computing it on a miss.
    pub fn expansion(&mut self, a: OpLetter, b: OpLetter, prime: Prime, side: Side) -> Result<LinComb, AdemError> {
        let raw = self.raw(a, b, prime, side)?;
        let mut out = LinComb::zero(prime, side);
        for (letters, c) in raw.iter() {
            out.add_raw(OpWord::from_parts_unchecked(prime, side, letters.clone()), *c);
        }
        Ok(out)
    }

    pub(crate) fn raw(&mut self, a: OpLetter, b: OpLetter, prime: Prime, side: Side) -> Result<PairTerms, AdemError> {
        let key = (prime, side, a, b);
        if let Some(hit) = self.pairs.get(&key) {
            return Ok(hit.clone());
        }
        let value = raw_step(a, b, prime, side)?;
        self.pairs.insert(key, value.clone());
        Ok(value)
    }
}

fn raw_step(a: OpLetter, b: OpLetter, prime: Prime, side: Side) -> Result<PairTerms, AdemError> {
    let step = adem_step(a, b, prime, side)?;
    Ok(step.raw_terms().iter().map(|(w, c)| (w.letters().to_vec(), *c)).collect())
}

/// Longest word the memoized reducer handles; longer inputs use [`reduce_literal`].
const PACKED_LEN: usize = 8;

/// Indices of magnitude at least this are not packed.
const PACKED_INDEX: i64 = 1 << 28;

/// A short word with each letter stored as `2 * index + bockstein`.
///
/// Unused slots are zero, so derived equality and hashing agree with the words.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Packed {
    len: u8,
    codes: [i32; PACKED_LEN],
}

impl Packed {
    fn from_codes(codes: &[i32]) -> Option<Packed> {
        if codes.len() > PACKED_LEN {
            return None;
        }
        let mut out = Packed { len: codes.len() as u8, codes: [0; PACKED_LEN] };
        out.codes[..codes.len()].copy_from_slice(codes);
        Some(out)
    }

    fn from_letters(letters: &[OpLetter]) -> Option<Packed> {
        if letters.len() > PACKED_LEN {
            return None;
        }
        let mut out = Packed { len: letters.len() as u8, codes: [0; PACKED_LEN] };
        for (slot, l) in out.codes.iter_mut().zip(letters) {
            if l.index.abs() >= PACKED_INDEX {
                return None;
            }
            *slot = (2 * l.index + l.bockstein as i64) as i32;
        }
        Some(out)
    }

    fn codes(&self) -> &[i32] {
        &self.codes[..self.len as usize]
    }

    fn letter(code: i32) -> OpLetter {
        OpLetter::new((code & 1) as u8, (code >> 1) as i64)
    }

    fn to_word(self, prime: Prime, side: Side) -> OpWord {
        OpWord::from_parts_unchecked(prime, side, self.codes().iter().map(|&c| Packed::letter(c)).collect())
    }
}

impl core::hash::Hash for Packed {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        let codes = self.codes();
        state.write_u8(self.len);
        for pair in codes.chunks(2) {
            let hi = pair.get(1).copied().unwrap_or(0) as u32 as u64;
            state.write_u64(((pair[0] as u32 as u64) << 32) | hi);
        }
    }
}

type Terms = Arc<Vec<(Packed, u32)>>;
type PackedPair = Arc<[(Packed, u32)]>;

/// Memoized normal forms are dropped once they hold this many terms in total.
const MEMO_TERM_LIMIT: usize = 8_000_000;

enum Inserted {
    Word(Packed),
    Sum(Terms),
}

enum Fail {
    Adem(AdemError),
    /// A word left the packed range.
    Overflow,
}

impl From<AdemError> for Fail {
    fn from(e: AdemError) -> Self {
        Fail::Adem(e)
    }
}

type StepHook<'g> = dyn FnMut(&OpWord, &OpWord) + 'g;

struct Run<'f, 'g> {
    prime: Prime,
    side: Side,
    steps: u64,
    budget: u64,
    on_step: Option<&'f mut StepHook<'g>>,
}

/// Accumulates `coefficient * terms` into a hash map of residues.
fn accumulate(acc: &mut HashMap<Packed, u64>, terms: &[(Packed, u32)], coefficient: u64, p: u64) {
    for (w, d) in terms {
        let add = coefficient * *d as u64 % p;
        let slot = acc.entry(*w).or_insert(0);
        *slot = (*slot + add) % p;
    }
}

fn collect_terms(acc: HashMap<Packed, u64>) -> Terms {
    Arc::new(acc.into_iter().filter(|(_, c)| *c != 0).map(|(w, c)| (w, c as u32)).collect())
}

/// Rewrites combinations to admissible normal form.
///
/// With [`Strategy::Rightmost`] the rightmost inadmissible pair is always
/// rewritten first, which amounts to normalizing words from the right and
/// inserting one letter at a time on the left; [`Strategy::Leftmost`] is the
/// mirror image. Insertions of a letter into an admissible word are memoized.
#[derive(Clone, Debug)]
pub struct Reducer {
    cache: RewriteCache,
    use_cache: bool,
    strategy: Strategy,
    step_budget: u64,
    pairs: HashMap<(i32, i32), Option<PackedPair>>,
    memo: HashMap<Packed, Terms>,
    memo_terms: usize,
    memo_context: Option<(Prime, Side)>,
}

impl Default for Reducer {
    fn default() -> Self {
        Reducer::new()
    }
}

/// The position of the first inadmissible pair under `strategy`.
pub(crate) fn find_pair(word: &OpWord, strategy: Strategy) -> Option<usize> {
    let (prime, side) = (word.prime(), word.side());
    let letters = word.letters();
    let bad = |j: &usize| !pair_is_admissible(letters[*j], letters[*j + 1], prime, side);
    let n = letters.len().saturating_sub(1);
    match strategy {
        Strategy::Leftmost => (0..n).find(bad),
        Strategy::Rightmost => (0..n).rev().find(bad),
    }
}

impl Reducer {
    pub fn new() -> Self {
        Reducer {
            cache: RewriteCache::new(),
            use_cache: true,
            strategy: Strategy::Leftmost,
            step_budget: DEFAULT_STEP_BUDGET,
            pairs: HashMap::new(),
            memo: HashMap::new(),
            memo_terms: 0,
            memo_context: None,
        }
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self.memo.clear();
        self.memo_terms = 0;
        self
    }

    /// Rewrite steps allowed per input term.
    pub fn with_step_budget(mut self, budget: u64) -> Self {
        self.step_budget = budget;
        self
    }

    /// Disables both the pair cache and the insertion memo.
    pub fn without_cache(mut self) -> Self {
        self.use_cache = false;
        self
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn cache(&self) -> &RewriteCache {
        &self.cache
    }

    pub fn reduce(&mut self, x: &LinComb) -> Result<LinComb, AdemError> {
        self.run(x, None)
    }

    /// Like [`Reducer::reduce`], calling `on_step(before, after)` for every
    /// word produced by an Adem step that is actually performed (memo hits
    /// perform no steps).
    pub fn reduce_traced<F>(&mut self, x: &LinComb, mut on_step: F) -> Result<LinComb, AdemError>
    where
        F: FnMut(&OpWord, &OpWord),
    {
        self.run(x, Some(&mut on_step))
    }

    fn run(&mut self, x: &LinComb, mut on_step: Option<&mut StepHook<'_>>) -> Result<LinComb, AdemError> {
        let (prime, side) = (x.prime(), x.side());
        if self.memo_context != Some((prime, side)) {
            self.memo.clear();
            self.pairs.clear();
            self.memo_terms = 0;
            self.memo_context = Some((prime, side));
        }
        let budget = self.step_budget.saturating_mul(x.len().max(1) as u64);
        let mut inputs = Vec::with_capacity(x.len());
        for (w, c) in x.raw_terms() {
            match Packed::from_letters(w.letters()) {
                Some(packed) => inputs.push((packed, *c)),
                None => return self.literal(x, on_step),
            }
        }
        let p = prime.get() as u64;
        let mut acc: HashMap<Packed, u64> = HashMap::new();
        let mut outcome = Ok(());
        {
            let mut run = Run { prime, side, steps: 0, budget, on_step: on_step.as_deref_mut() };
            for (w, c) in &inputs {
                match self.attach(&mut run, w.codes(), &[]) {
                    Ok(normal) => accumulate(&mut acc, &normal, *c as u64, p),
                    Err(e) => {
                        outcome = Err(e);
                        break;
                    }
                }
            }
        }
        match outcome {
            Ok(()) => {}
            Err(Fail::Adem(e)) => return Err(e),
            Err(Fail::Overflow) => return self.literal(x, on_step),
        }
        let mut terms: Vec<(OpWord, u32)> =
            acc.into_iter().filter(|(_, c)| *c != 0).map(|(w, c)| (w.to_word(prime, side), c as u32)).collect();
        terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        Ok(LinComb::from_distinct_unchecked(prime, side, terms))
    }

    fn literal(&self, x: &LinComb, on_step: Option<&mut StepHook<'_>>) -> Result<LinComb, AdemError> {
        match on_step {
            Some(cb) => reduce_literal(x, self.strategy, self.step_budget, cb),
            None => reduce_literal(x, self.strategy, self.step_budget, |_, _| {}),
        }
    }

    /// Packed expansion of an inadmissible pair, or `None` if a piece does not pack.
    fn pair(&mut self, a: i32, b: i32, prime: Prime, side: Side) -> Result<Option<PackedPair>, AdemError> {
        if self.use_cache {
            if let Some(hit) = self.pairs.get(&(a, b)) {
                return Ok(hit.clone());
            }
        }
        let (la, lb) = (Packed::letter(a), Packed::letter(b));
        let raw = if self.use_cache { self.cache.raw(la, lb, prime, side)? } else { raw_step(la, lb, prime, side)? };
        let packed: Option<Vec<(Packed, u32)>> = raw.iter().map(|(w, c)| Packed::from_letters(w).map(|pw| (pw, *c))).collect();
        let packed: Option<PackedPair> = packed.map(Into::into);
        if self.use_cache {
            self.pairs.insert((a, b), packed.clone());
        }
        Ok(packed)
    }

    /// Normal form of `piece` composed with the admissible word `rest`
    /// (`piece` on the left for rightmost-first, on the right otherwise).
    fn attach(&mut self, run: &mut Run<'_, '_>, piece: &[i32], rest: &[i32]) -> Result<Terms, Fail> {
        let p = run.prime.get() as u64;
        let mut current: Terms = Arc::new(vec![(Packed::from_codes(rest).ok_or(Fail::Overflow)?, 1)]);
        for k in 0..piece.len() {
            let letter = match self.strategy {
                Strategy::Rightmost => piece[piece.len() - 1 - k],
                Strategy::Leftmost => piece[k],
            };
            if current.len() == 1 && current[0].1 == 1 {
                let only = current[0].0;
                current = match self.insert(run, letter, only)? {
                    Inserted::Word(w) => Arc::new(vec![(w, 1)]),
                    Inserted::Sum(t) => t,
                };
                continue;
            }
            let mut acc = HashMap::with_capacity(current.len() * 2);
            for (t, c) in current.iter() {
                match self.insert(run, letter, *t)? {
                    Inserted::Word(w) => accumulate(&mut acc, &[(w, 1)], *c as u64, p),
                    Inserted::Sum(r) => accumulate(&mut acc, &r, *c as u64, p),
                }
            }
            current = collect_terms(acc);
        }
        Ok(current)
    }

    /// Normal form of `letter` joined to the admissible word `word`.
    fn insert(&mut self, run: &mut Run<'_, '_>, letter: i32, word: Packed) -> Result<Inserted, Fail> {
        let (prime, side) = (run.prime, run.side);
        let on_left = self.strategy == Strategy::Rightmost;
        let n = word.len as usize;
        if n == PACKED_LEN {
            return Err(Fail::Overflow);
        }
        let mut full = Packed { len: word.len + 1, codes: [0; PACKED_LEN] };
        if on_left {
            full.codes[0] = letter;
            full.codes[1..=n].copy_from_slice(word.codes());
        } else {
            full.codes[..n].copy_from_slice(word.codes());
            full.codes[n] = letter;
        }
        let j = if on_left { 0 } else { n.saturating_sub(1) };
        let (a, b) = (full.codes[j], full.codes[j + 1]);
        if n == 0 || pair_is_admissible(Packed::letter(a), Packed::letter(b), prime, side) {
            return Ok(Inserted::Word(full));
        }
        let memoize = self.use_cache;
        if memoize {
            if let Some(hit) = self.memo.get(&full) {
                return Ok(Inserted::Sum(hit.clone()));
            }
        }
        run.steps += 1;
        if run.steps > run.budget {
            return Err(Fail::Adem(AdemError::BudgetExhausted { steps: run.steps - 1 }));
        }
        let expansion = self.pair(a, b, prime, side)?.ok_or(Fail::Overflow)?;
        let rest: &[i32] = if on_left { &full.codes()[2..] } else { &full.codes()[..j] };
        let p = prime.get() as u64;
        let mut acc = HashMap::new();
        for (piece, c) in expansion.iter() {
            if let Some(cb) = run.on_step.as_mut() {
                let mut after = Vec::with_capacity(rest.len() + piece.len as usize);
                if on_left {
                    after.extend_from_slice(piece.codes());
                    after.extend_from_slice(rest);
                } else {
                    after.extend_from_slice(rest);
                    after.extend_from_slice(piece.codes());
                }
                let after: Vec<OpLetter> = after.into_iter().map(Packed::letter).collect();
                cb(&full.to_word(prime, side), &OpWord::from_parts_unchecked(prime, side, after));
            }
            let normal = self.attach(run, piece.codes(), rest)?;
            accumulate(&mut acc, &normal, *c as u64, p);
        }
        let result = collect_terms(acc);
        if memoize {
            self.memo_terms += result.len();
            if self.memo_terms > MEMO_TERM_LIMIT {
                self.memo.clear();
                self.memo_terms = result.len();
            }
            self.memo.insert(full, result.clone());
        }
        Ok(Inserted::Sum(result))
    }
}

/// Step-by-step rewriting without any memoization: repeatedly replaces the
/// inadmissible pair picked by `strategy` by its expansion.
///
/// Slower than [`Reducer`] but independent of its insertion scheme; kept as a
/// reference implementation.
pub fn reduce_literal<F>(x: &LinComb, strategy: Strategy, step_budget: u64, mut on_step: F) -> Result<LinComb, AdemError>
where
    F: FnMut(&OpWord, &OpWord),
{
    let (prime, side) = (x.prime(), x.side());
    let p = prime.get() as u64;
    let budget = step_budget.saturating_mul(x.len().max(1) as u64);
    // Largest moment first: every step lowers the moment, so a word is
    // never pushed again once popped and coefficients merge fully.
    let mut pending: BTreeMap<(i64, OpWord), u32> = BTreeMap::new();
    for (w, c) in x.raw_terms() {
        pending.insert((moment(w), w.clone()), *c);
    }
    let mut out = LinComb::zero(prime, side);
    let mut steps = 0u64;
    while let Some(((_, word), c)) = pending.pop_last() {
        if c == 0 {
            continue;
        }
        let Some(j) = find_pair(&word, strategy) else {
            out.add_raw(word, c);
            continue;
        };
        steps += 1;
        if steps > budget {
            return Err(AdemError::BudgetExhausted { steps: steps - 1 });
        }
        let letters = word.letters();
        let expansion = adem_step(letters[j], letters[j + 1], prime, side)?;
        for (piece, d) in expansion.raw_terms() {
            let mut new = Vec::with_capacity(letters.len());
            new.extend_from_slice(&letters[..j]);
            new.extend_from_slice(piece.letters());
            new.extend_from_slice(&letters[j + 2..]);
            let new = OpWord::from_parts_unchecked(prime, side, new);
            on_step(&word, &new);
            let coef = (c as u64 * *d as u64 % p) as u32;
            let slot = pending.entry((moment(&new), new)).or_insert(0);
            *slot = ((*slot as u64 + coef as u64) % p) as u32;
        }
    }
    Ok(out)
}

/// Reduces with a fresh default reducer.
pub fn reduce(x: &LinComb) -> Result<LinComb, AdemError> {
    Reducer::new().reduce(x)
}

/// Composes two combinations and reduces the product.
pub fn reduce_product(reducer: &mut Reducer, x: &LinComb, y: &LinComb) -> Result<LinComb, AdemError> {
    check_compatible(x.prime(), x.side(), y.prime(), y.side())?;
    reducer.reduce(&x.compose(y)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;
    use proptest::prelude::{prop_assert, prop_assert_eq, prop_assume, prop_oneof, proptest, Just, ProptestConfig};
    use proptest::strategy::Strategy as PStrategy;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    fn r(text: &str, prime: u64, side: Side) -> LinComb {
        reduce(&parse(text, p(prime), side).unwrap()).unwrap()
    }

    fn lc(text: &str, prime: u64, side: Side) -> LinComb {
        parse(text, p(prime), side).unwrap()
    }

    /// Direct evaluation of the p = 2 Dyer-Lashof sum by scanning a wide box of i.
    fn dl_sum_oracle(r: i64, s: i64) -> LinComb {
        let prime = p(2);
        let mut out = LinComb::zero(prime, Side::B);
        for i in -100..=100 {
            let c = binom_mod_p(i - s - 1, 2 * i - r, prime);
            let w = OpWord::new(prime, Side::B, vec![OpLetter::plain(r + s - i), OpLetter::plain(i)]).unwrap();
            out.add_term(w, c);
        }
        out
    }

    /// Classical Sq^a Sq^b sum over an oversized range; negative and zero
    /// indices handled by normalization.
    fn sq_sum_oracle(a: i64, b: i64) -> LinComb {
        let prime = p(2);
        let mut out = LinComb::zero(prime, Side::A);
        for c in -30..=30 {
            if let Some(w) = OpWord::steenrod_normalized(prime, vec![OpLetter::plain(a + b - c), OpLetter::plain(c)]) {
                out.add_term(w, binom_mod_p(b - c - 1, a - 2 * c, prime));
            }
        }
        out
    }

    #[test]
    fn listed_steps() {
        let two = p(2);
        assert_eq!(adem_step(OpLetter::plain(5), OpLetter::plain(1), two, Side::B).unwrap(), lc("Q^3 Q^3", 2, Side::B));
        assert_eq!(dl_sum_oracle(5, 1), lc("Q^3 Q^3", 2, Side::B));
        assert!(adem_step(OpLetter::plain(1), OpLetter::plain(1), two, Side::A).unwrap().is_zero());
        assert_eq!(adem_step(OpLetter::plain(2), OpLetter::plain(2), two, Side::A).unwrap(), lc("Sq^3 Sq^1", 2, Side::A));
        assert_eq!(sq_sum_oracle(2, 2), lc("Sq^3 Sq^1", 2, Side::A));
    }

    #[test]
    fn step_matches_wide_oracles() {
        for r in -15..=15 {
            for s in -15..=15 {
                if r > 2 * s {
                    let step = adem_step(OpLetter::plain(r), OpLetter::plain(s), p(2), Side::B).unwrap();
                    assert_eq!(step, dl_sum_oracle(r, s), "Q^{r} Q^{s}");
                }
            }
        }
        for a in 1..=15 {
            for b in 1..=15 {
                if a < 2 * b {
                    let step = adem_step(OpLetter::plain(a), OpLetter::plain(b), p(2), Side::A).unwrap();
                    assert_eq!(step, sq_sum_oracle(a, b), "Sq^{a} Sq^{b}");
                }
            }
        }
    }

    #[test]
    fn admissible_pair_rejected() {
        let e = adem_step(OpLetter::plain(3), OpLetter::plain(2), p(2), Side::B).unwrap_err();
        assert!(matches!(e, AdemError::AdmissiblePair { .. }));
    }

    #[test]
    fn listed_reductions() {
        assert_eq!(r("Q^5 Q^1", 2, Side::B), lc("Q^3 Q^3", 2, Side::B));
        assert_eq!(r("Q^3 Q^2", 2, Side::B), lc("Q^3 Q^2", 2, Side::B));
        assert!(r("Sq^2 Sq^2 + Sq^3 Sq^1", 2, Side::A).is_zero());
    }

    #[test]
    fn classical_identities() {
        assert_eq!(r("Sq^1 Sq^2", 2, Side::A), lc("Sq^3", 2, Side::A));
        assert_eq!(r("Sq^2 Sq^3", 2, Side::A), lc("Sq^5 + Sq^4 Sq^1", 2, Side::A));
        assert_eq!(r("Sq^3 Sq^3", 2, Side::A), lc("Sq^5 Sq^1", 2, Side::A));
        // β β = 0 and P^1 P^1 = 2 P^2 at p = 3
        assert!(r("bP^0 bP^0", 3, Side::A).is_zero());
        assert_eq!(r("P^1 P^1", 3, Side::A), lc("2 P^2", 3, Side::A));
        // β P^0 P^1 = β P^1 as letters
        assert_eq!(r("bP^0 P^1", 3, Side::A), lc("bP^1", 3, Side::A));
    }

    #[test]
    fn pair_predicates_are_complementary() {
        for q in [2u64, 3, 5] {
            let prime = p(q);
            let es: &[u8] = if q == 2 { &[0] } else { &[0, 1] };
            for side in [Side::B, Side::A] {
                let range = if side == Side::B { -12..=12 } else { 0..=12 };
                for &ea in es {
                    for &eb in es {
                        for x in range.clone() {
                            for y in range.clone() {
                                let (a, b) = (OpLetter::new(ea, x), OpLetter::new(eb, y));
                                if side == Side::A && (a.is_identity_on_a() || b.is_identity_on_a()) {
                                    continue;
                                }
                                let admissible = pair_is_admissible(a, b, prime, side);
                                assert_eq!(adem_step(a, b, prime, side).is_ok(), !admissible);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let x = lc("Q^9 Q^1 Q^0 Q^-1", 2, Side::B);
        let e = Reducer::new().with_step_budget(1).reduce(&x).unwrap_err();
        assert!(matches!(e, AdemError::BudgetExhausted { .. }));
    }

    #[test]
    fn cache_does_not_change_results() {
        let x = lc("Q^7 Q^2 Q^1 + Q^4 Q^1 Q^0", 2, Side::B);
        let mut cached = Reducer::new();
        let a = cached.reduce(&x).unwrap();
        assert!(!cached.cache().is_empty());
        let b = Reducer::new().without_cache().reduce(&x).unwrap();
        assert_eq!(a, b);
        assert_eq!(cached.reduce(&x).unwrap(), a);
    }

    /// All side-A words of degree `d` at p = 2 (compositions of d).
    fn compositions(d: i64) -> Vec<Vec<i64>> {
        if d == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for first in 1..=d {
            for mut rest in compositions(d - first) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }

    #[test]
    fn fixed_words_are_exactly_admissible() {
        let prime = p(2);
        let mut reducer = Reducer::new();
        for d in 0..=16 {
            for comp in compositions(d) {
                let w = OpWord::new(prime, Side::A, comp.into_iter().map(OpLetter::plain).collect()).unwrap();
                let red = reducer.reduce(&LinComb::from_word(w.clone())).unwrap();
                assert_eq!(red == LinComb::from_word(w.clone()), w.is_admissible(), "{w}");
                assert!(red.words().all(|v| v.is_admissible() && v.degree() == d));
            }
        }
    }

    fn corpus_strategy() -> impl PStrategy<Value = LinComb> {
        corpus(4, 5)
    }

    fn corpus(max_len: usize, bound: i64) -> impl PStrategy<Value = LinComb> {
        (prop_oneof![Just(2u64), Just(3u64), Just(5u64)], prop_oneof![Just(Side::B), Just(Side::A)]).prop_flat_map(
            move |(q, side)| {
                let prime = p(q);
                let lo = if side == Side::B { -bound } else { 0 };
                let e = if q == 2 { 0u8..=0 } else { 0u8..=1 };
                let letter = (e, lo..=bound).prop_map(|(e, s)| OpLetter::new(e, s));
                proptest::collection::vec((proptest::collection::vec(letter, 0..=max_len), 1i64..5), 1..4)
                    .prop_map(move |terms| LinComb::from_terms(prime, side, terms).unwrap())
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn memoized_matches_literal(x in corpus(3, 5)) {
            for strategy in [Strategy::Leftmost, Strategy::Rightmost] {
                let fast = Reducer::new().with_strategy(strategy).reduce(&x).unwrap();
                let slow = reduce_literal(&x, strategy, DEFAULT_STEP_BUDGET, |_, _| {}).unwrap();
                prop_assert_eq!(fast, slow);
            }
        }

        #[test]
        fn literal_steps_descend(x in corpus(3, 5)) {
            let mut ok = true;
            reduce_literal(&x, Strategy::Rightmost, DEFAULT_STEP_BUDGET, |before, after| {
                ok &= after.degree() == before.degree() && moment(after) < moment(before);
            }).unwrap();
            prop_assert!(ok);
        }

        #[test]
        fn idempotent(x in corpus_strategy()) {
            let once = reduce(&x).unwrap();
            prop_assert!(once.words().all(|w| w.is_admissible()));
            prop_assert_eq!(reduce(&once).unwrap(), once);
        }

        #[test]
        fn strategy_independent(x in corpus_strategy()) {
            let left = Reducer::new().with_strategy(Strategy::Leftmost).reduce(&x).unwrap();
            let right = Reducer::new().with_strategy(Strategy::Rightmost).reduce(&x).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn steps_conserve_and_descend(x in corpus_strategy()) {
            let mut ok = true;
            Reducer::new().reduce_traced(&x, |before, after| {
                ok &= after.degree() == before.degree();
                ok &= moment(after) < moment(before);
                if before.side() == Side::B {
                    ok &= after.weight().unwrap() == before.weight().unwrap();
                }
            }).unwrap();
            prop_assert!(ok);
        }

        #[test]
        fn linear(x in corpus_strategy(), y in corpus_strategy()) {
            prop_assume!(x.prime() == y.prime() && x.side() == y.side());
            let sum = reduce(&x.add(&y).unwrap()).unwrap();
            prop_assert_eq!(sum, reduce(&x).unwrap().add(&reduce(&y).unwrap()).unwrap());
        }
    }
}
