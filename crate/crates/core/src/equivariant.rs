//! Brute-force symmetric-group arithmetic: orbits and the reduced
//! permutation representation, the family of intransitive subgroups,
//! Weyl groups, double cosets of `C_p` in `Σ_p`, the weight-`p` operation
//! pattern and the `p = 2` Tate chart.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::modp::Prime;

/// Largest `n` for which `Σ_n` is scanned element by element.
pub const MAX_SCAN_DEGREE: usize = 8;

/// Largest `n` whose binomial row fits in `u128`.
pub const MAX_BINOMIAL_ROW: u64 = 128;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EquivariantError {
    NotAPermutation(String),
    DegreeMismatch { left: usize, right: usize },
    TooLarge { n: usize, max: usize },
    BinomialDomain(u64),
    PrimeTooLarge(Prime),
    /// An element outside the normalizer meets `H` nontrivially.
    FalsifiedHypothesis { witness: Permutation },
    OddPrime(Prime),
    InvalidWindow { s_min: i64, s_max: i64 },
    DuplicateRow(i64),
}

impl fmt::Display for EquivariantError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquivariantError::NotAPermutation(s) => write!(f, "not a permutation: {s}"),
            EquivariantError::DegreeMismatch { left, right } => {
                write!(f, "permutations act on different sets: {left} vs {right} points")
            }
            EquivariantError::TooLarge { n, max } => write!(f, "degree {n} exceeds the scan limit {max}"),
            EquivariantError::BinomialDomain(n) => {
                write!(f, "binomial gcd needs 2 <= n <= {MAX_BINOMIAL_ROW}, got {n}")
            }
            EquivariantError::PrimeTooLarge(p) => write!(f, "double coset scan needs p <= 7, got {p}"),
            EquivariantError::FalsifiedHypothesis { witness } => {
                write!(f, "H meets its conjugate by {witness} nontrivially outside the normalizer")
            }
            EquivariantError::OddPrime(p) => write!(f, "the Tate chart is defined at p = 2 only, got {p}"),
            EquivariantError::InvalidWindow { s_min, s_max } => write!(f, "empty window [{s_min}, {s_max}]"),
            EquivariantError::DuplicateRow(q) => write!(f, "row q = {q} given twice"),
        }
    }
}

impl core::error::Error for EquivariantError {}

/// A bijection of `{1, ..., n}`, stored zero-based.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Permutation {
    images: Vec<u8>,
}

impl Permutation {
    pub fn identity(n: usize) -> Permutation {
        Permutation { images: (0..n as u8).collect() }
    }

    /// From one-based images `[σ(1), ..., σ(n)]`.
    pub fn from_images(images: &[usize]) -> Result<Permutation, EquivariantError> {
        let n = images.len();
        if n > u8::MAX as usize {
            return Err(EquivariantError::TooLarge { n, max: u8::MAX as usize });
        }
        let mut seen = alloc::vec![false; n];
        for &i in images {
            if i == 0 || i > n || seen[i - 1] {
                return Err(EquivariantError::NotAPermutation(alloc::format!("{images:?}")));
            }
            seen[i - 1] = true;
        }
        Ok(Permutation { images: images.iter().map(|&i| (i - 1) as u8).collect() })
    }

    /// From one-based disjoint or overlapping cycles, composed right to left.
    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Result<Permutation, EquivariantError> {
        let mut out = Permutation::identity(n);
        for c in cycles {
            let mut images: Vec<usize> = (1..=n).collect();
            let mut seen = BTreeSet::new();
            for (j, &a) in c.iter().enumerate() {
                if a == 0 || a > n || !seen.insert(a) {
                    return Err(EquivariantError::NotAPermutation(alloc::format!("cycle {c:?} on {n} points")));
                }
                images[a - 1] = c[(j + 1) % c.len()];
            }
            out = out.compose(&Permutation::from_images(&images)?)?;
        }
        Ok(out)
    }

    /// Parses cycle notation such as `(1 2)(3 4)`; `()` is the identity.
    pub fn parse_cycles(n: usize, text: &str) -> Result<Permutation, EquivariantError> {
        let bad = || EquivariantError::NotAPermutation(String::from(text));
        let mut cycles: Vec<Vec<usize>> = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            let body = rest.strip_prefix('(').ok_or_else(bad)?;
            let close = body.find(')').ok_or_else(bad)?;
            let cycle = body[..close]
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|_| bad()))
                .collect::<Result<Vec<_>, _>>()?;
            cycles.push(cycle);
            rest = body[close + 1..].trim_start();
        }
        let refs: Vec<&[usize]> = cycles.iter().map(|c| c.as_slice()).collect();
        Permutation::from_cycles(n, &refs)
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    /// One-based image of a one-based point.
    pub fn apply(&self, i: usize) -> usize {
        self.images[i - 1] as usize + 1
    }

    /// `self ∘ other`: `other` acts first.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation, EquivariantError> {
        if self.degree() != other.degree() {
            return Err(EquivariantError::DegreeMismatch { left: self.degree(), right: other.degree() });
        }
        Ok(self.compose_unchecked(other))
    }

    fn compose_unchecked(&self, other: &Permutation) -> Permutation {
        Permutation { images: other.images.iter().map(|&i| self.images[i as usize]).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = alloc::vec![0u8; self.degree()];
        for (i, &j) in self.images.iter().enumerate() {
            images[j as usize] = i as u8;
        }
        Permutation { images }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j as usize)
    }

    fn conjugate(&self, h: &Permutation) -> Permutation {
        self.compose_unchecked(h).compose_unchecked(&self.inverse())
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.degree();
        let mut seen = alloc::vec![false; n];
        let mut any = false;
        for start in 0..n {
            if seen[start] || self.images[start] as usize == start {
                continue;
            }
            any = true;
            f.write_str("(")?;
            let mut i = start;
            loop {
                seen[i] = true;
                write!(f, "{}", i + 1)?;
                i = self.images[i] as usize;
                if i == start {
                    break;
                }
                f.write_str(" ")?;
            }
            f.write_str(")")?;
        }
        if !any {
            f.write_str("()")?;
        }
        Ok(())
    }
}

/// A subgroup of `Σ_n` with every element listed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgroup {
    n: usize,
    elements: BTreeSet<Permutation>,
}

impl Subgroup {
    /// Closure of the generators under composition, by breadth-first search.
    pub fn generated(n: usize, generators: &[Permutation]) -> Result<Subgroup, EquivariantError> {
        if n > MAX_SCAN_DEGREE {
            return Err(EquivariantError::TooLarge { n, max: MAX_SCAN_DEGREE });
        }
        for g in generators {
            if g.degree() != n {
                return Err(EquivariantError::DegreeMismatch { left: n, right: g.degree() });
            }
        }
        let mut elements = BTreeSet::new();
        let id = Permutation::identity(n);
        elements.insert(id.clone());
        let mut queue = VecDeque::from([id]);
        while let Some(x) = queue.pop_front() {
            for g in generators {
                let y = g.compose_unchecked(&x);
                if elements.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
        Ok(Subgroup { n, elements })
    }

    pub fn trivial(n: usize) -> Result<Subgroup, EquivariantError> {
        Subgroup::generated(n, &[])
    }

    /// `⟨(1 2 ... n)⟩`.
    pub fn cyclic(n: usize) -> Result<Subgroup, EquivariantError> {
        let cycle: Vec<usize> = (1..=n).collect();
        Subgroup::generated(n, &[Permutation::from_cycles(n, &[&cycle])?])
    }

    pub fn symmetric(n: usize) -> Result<Subgroup, EquivariantError> {
        let cycle: Vec<usize> = (1..=n).collect();
        let mut gens = alloc::vec![Permutation::from_cycles(n, &[&cycle])?];
        if n >= 2 {
            gens.push(Permutation::from_cycles(n, &[&[1, 2]])?);
        }
        Subgroup::generated(n, &gens)
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, g: &Permutation) -> bool {
        self.elements.contains(g)
    }

    pub fn elements(&self) -> impl Iterator<Item = &Permutation> + '_ {
        self.elements.iter()
    }

    fn is_normalized_by(&self, g: &Permutation) -> bool {
        self.elements.iter().all(|h| self.elements.contains(&g.conjugate(h)))
    }
}

/// Every element of `Σ_n` in lexicographic order of images.
pub fn symmetric_elements(n: usize) -> Result<Vec<Permutation>, EquivariantError> {
    if n > MAX_SCAN_DEGREE {
        return Err(EquivariantError::TooLarge { n, max: MAX_SCAN_DEGREE });
    }
    let mut out = Vec::new();
    let mut current: Vec<u8> = (0..n as u8).collect();
    loop {
        out.push(Permutation { images: current.clone() });
        // Next permutation in lexicographic order.
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else { break };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
    }
    Ok(out)
}

/// Orbits of `H` on `{1, ..., n}`, each sorted, ordered by least element.
pub fn orbits(h: &Subgroup) -> Vec<Vec<usize>> {
    let mut block = alloc::vec![usize::MAX; h.n];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for start in 0..h.n {
        if block[start] != usize::MAX {
            continue;
        }
        let orbit: BTreeSet<usize> = h.elements.iter().map(|g| g.images[start] as usize).collect();
        for &i in &orbit {
            block[i] = out.len();
        }
        out.push(orbit.into_iter().map(|i| i + 1).collect());
    }
    out
}

/// Dimension of the `H`-fixed subspace of the reduced permutation representation.
pub fn gamma_fixed_dim(h: &Subgroup) -> usize {
    orbits(h).len().saturating_sub(1)
}

/// Membership in the family of subgroups acting intransitively.
pub fn in_family_t(h: &Subgroup) -> bool {
    orbits(h).len() > 1
}

/// `gcd { C(n, k) : 0 < k < n }`.
pub fn gcd_binomials(n: u64) -> Result<u128, EquivariantError> {
    if !(2..=MAX_BINOMIAL_ROW).contains(&n) {
        return Err(EquivariantError::BinomialDomain(n));
    }
    let mut row: Vec<u128> = alloc::vec![1];
    for _ in 0..n {
        let mut next = alloc::vec![1u128; row.len() + 1];
        for k in 1..row.len() {
            next[k] = row[k - 1] + row[k];
        }
        row = next;
    }
    Ok(row[1..n as usize].iter().fold(0, |g, &c| gcd(g, c)))
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeylGroup {
    pub normalizer_order: usize,
    pub order: usize,
    /// Least element of each coset `gH` in the normalizer.
    pub representatives: Vec<Permutation>,
}

/// `N(H)/H` with the normalizer found by scanning `Σ_n`.
pub fn weyl_group(h: &Subgroup) -> Result<WeylGroup, EquivariantError> {
    let normalizer: Vec<Permutation> = symmetric_elements(h.n)?.into_iter().filter(|g| h.is_normalized_by(g)).collect();
    let mut covered = BTreeSet::new();
    let mut representatives = Vec::new();
    for g in &normalizer {
        if covered.contains(g) {
            continue;
        }
        representatives.push(g.clone());
        covered.extend(h.elements.iter().map(|x| g.compose_unchecked(x)));
    }
    Ok(WeylGroup { normalizer_order: normalizer.len(), order: representatives.len(), representatives })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DoubleCosetReport {
    pub prime: Prime,
    pub group_order: usize,
    pub normalizer_order: usize,
    /// Elements outside the normalizer, each checked for trivial intersection.
    pub outside_normalizer: usize,
    pub double_cosets: usize,
}

/// Checks that `H ∩ xHx⁻¹` is trivial for `H = C_p ≤ Σ_p` and every `x`
/// outside the normalizer, and counts `H\Σ_p/H`.
pub fn double_coset_check(prime: Prime) -> Result<DoubleCosetReport, EquivariantError> {
    let p = prime.get() as usize;
    if p > 7 {
        return Err(EquivariantError::PrimeTooLarge(prime));
    }
    let h = Subgroup::cyclic(p)?;
    let all = symmetric_elements(p)?;
    let mut normalizer_order = 0;
    let mut outside = 0;
    for x in &all {
        if h.is_normalized_by(x) {
            normalizer_order += 1;
            continue;
        }
        outside += 1;
        if h.elements.iter().any(|g| !g.is_identity() && h.contains(&x.conjugate(g))) {
            return Err(EquivariantError::FalsifiedHypothesis { witness: x.clone() });
        }
    }
    let mut covered = BTreeSet::new();
    let mut double_cosets = 0;
    for x in &all {
        if covered.contains(x) {
            continue;
        }
        double_cosets += 1;
        for a in &h.elements {
            let ax = a.compose_unchecked(x);
            covered.extend(h.elements.iter().map(|b| ax.compose_unchecked(b)));
        }
    }
    Ok(DoubleCosetReport {
        prime,
        group_order: all.len(),
        normalizer_order,
        outside_normalizer: outside,
        double_cosets,
    })
}

/// Dimension of the degree-`k` weight-`p` stable operations on `HF_p`-modules.
pub fn op_pattern(prime: Prime, k: i64) -> u32 {
    let period = 2 * (prime.get() as i64 - 1);
    let r = k.rem_euclid(period);
    u32::from(r == 0 || r == period - 1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TateRow {
    pub q: i64,
    /// Dimensions at `s = s_min, ..., s_max`.
    pub dims: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TateChart {
    pub s_min: i64,
    pub s_max: i64,
    pub truncate_at: Option<i64>,
    /// Nonzero coefficient rows in increasing `q`.
    pub rows: Vec<TateRow>,
    /// `(s + q, total dimension)` for every diagonal the window meets.
    pub diagonals: Vec<(i64, u64)>,
}

impl TateChart {
    pub fn dim(&self, s: i64, q: i64) -> u64 {
        if s < self.s_min || s > self.s_max {
            return 0;
        }
        self.rows.iter().find(|r| r.q == q).map_or(0, |r| r.dims[(s - self.s_min) as usize])
    }

    pub fn legend(&self) -> Vec<String> {
        let mut out = alloc::vec![
            String::from("E1 = E2 page for Sigma_2 with trivial-action F_2 coefficients"),
            String::from("column s: filtration; row q: coefficient degree; entry: dim of Tate cohomology, equal to dim M_q"),
            String::from("diagonal n = s + q converges to degree n"),
        ];
        match self.truncate_at {
            Some(m) => out.push(alloc::format!(
                "truncated at m = {m}: columns s < {m} sent to zero (the truncation is read as a filtration cut)"
            )),
            None => out.push(String::from("untruncated")),
        }
        out
    }
}

/// The `p = 2` Tate chart with coefficient dimensions `(q, dim M_q)` over
/// the filtration window `[s_min, s_max]`.
pub fn tate_chart(
    prime: Prime,
    coefficients: &[(i64, u64)],
    window: (i64, i64),
    truncate_at: Option<i64>,
) -> Result<TateChart, EquivariantError> {
    if !prime.is_two() {
        return Err(EquivariantError::OddPrime(prime));
    }
    let (s_min, s_max) = window;
    if s_min > s_max {
        return Err(EquivariantError::InvalidWindow { s_min, s_max });
    }
    let mut m: BTreeMap<i64, u64> = BTreeMap::new();
    for &(q, d) in coefficients {
        if m.insert(q, d).is_some() {
            return Err(EquivariantError::DuplicateRow(q));
        }
    }
    let cut = truncate_at.unwrap_or(i64::MIN);
    let rows: Vec<TateRow> = m
        .iter()
        .filter(|(_, d)| **d > 0)
        .map(|(&q, &d)| TateRow { q, dims: (s_min..=s_max).map(|s| if s < cut { 0 } else { d }).collect() })
        .collect();
    let mut totals: BTreeMap<i64, u64> = BTreeMap::new();
    for r in &rows {
        for (j, &d) in r.dims.iter().enumerate() {
            *totals.entry(s_min + j as i64 + r.q).or_insert(0) += d;
        }
    }
    Ok(TateChart { s_min, s_max, truncate_at, rows, diagonals: totals.into_iter().collect() })
}
