//! The excess-filtration completion of the generalized operations and the
//! quotient map to the Steenrod algebra.
//!
//! Along an admissible side-`B` word the suffix excess never decreases from
//! left to right, so a word has excess at least `f` exactly when every
//! suffix does. Prepending a letter to a suffix of degree `D` with excess at
//! least `f` gives degree at least `pD + (p - 1)f`; both facts bound the
//! enumerations below.

use alloc::string::String;
use alloc::vec::Vec;

use crate::adem::{AdemError, Reducer};
use crate::free::FreeError;
use crate::modp::Prime;
use crate::terms::{letter_threshold, pair_is_admissible, LinComb, OpLetter, OpWord, Side};

/// A finite window of a completion stage: one degree, an excess floor and a
/// cap on word length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WindowSpec {
    pub degree: i64,
    pub excess_floor: i64,
    pub length_cap: usize,
}

impl WindowSpec {
    pub fn new(degree: i64, excess_floor: i64, length_cap: usize) -> Result<WindowSpec, FreeError> {
        if length_cap == 0 {
            return Err(FreeError::InvalidLengthCap);
        }
        Ok(WindowSpec { degree, excess_floor, length_cap })
    }
}

/// Largest suffix degree from which `k` is still reachable with at most `q_max` more letters.
fn reachable_ceiling(k: i64, f: i64, p: i64, q_max: usize) -> i64 {
    let (k, f, p) = (k as i128, f as i128, p as i128);
    let mut best = k;
    let mut pq: i128 = 1;
    for _ in 0..q_max.min(40) {
        pq *= p;
        best = best.max((k - (pq - 1) * f).div_euclid(pq));
    }
    if q_max > 40 {
        best = best.max(-f + 1);
    }
    best as i64
}

/// All nonempty admissible side-`B` words of the window's degree with
/// excess at least the floor and length at most the cap.
pub fn completion_basis(w: &WindowSpec, prime: Prime) -> Vec<OpWord> {
    struct Search {
        prime: Prime,
        k: i64,
        f: i64,
        cap: usize,
        out: Vec<OpWord>,
    }
    impl Search {
        fn extend(&mut self, suffix: &mut Vec<OpLetter>, d: i64) {
            if !suffix.is_empty() && d == self.k {
                let mut letters = suffix.clone();
                letters.reverse();
                self.out.push(OpWord::from_parts_unchecked(self.prime, Side::B, letters));
            }
            if suffix.len() == self.cap {
                return;
            }
            let p = self.prime.get() as i64;
            let head = suffix.last().copied();
            let ceiling = reachable_ceiling(self.k, self.f, p, self.cap - suffix.len() - 1);
            for e in 0..=if self.prime.is_two() { 0 } else { 1 } {
                // Excess of the new head: threshold(e, s) - d >= f.
                let lo = if self.prime.is_two() { self.f + d } else { -(-(self.f + d + e)).div_euclid(2) };
                let step = if self.prime.is_two() { 1 } else { 2 * (p - 1) };
                let mut hi = (ceiling - d + e).div_euclid(step);
                if let Some(h) = head {
                    hi = hi.min(if self.prime.is_two() { 2 * h.index } else { p * h.index - h.bockstein as i64 });
                }
                for s in lo..=hi {
                    let l = OpLetter::new(e as u8, s);
                    debug_assert!(letter_threshold(l, self.prime) - d >= self.f);
                    debug_assert!(head.is_none_or(|h| pair_is_admissible(l, h, self.prime, Side::B)));
                    suffix.push(l);
                    self.extend(suffix, d + l.degree(self.prime, Side::B));
                    suffix.pop();
                }
            }
        }
    }
    let mut search = Search { prime, k: w.degree, f: w.excess_floor, cap: w.length_cap, out: Vec::new() };
    search.extend(&mut Vec::new(), 0);
    search.out.sort();
    search.out
}

/// The projection between two completion windows with a surjectivity certificate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureMap {
    pub source: WindowSpec,
    pub target: WindowSpec,
    pub source_basis: Vec<OpWord>,
    pub target_basis: Vec<OpWord>,
    /// For each source word, its position in the target basis, or `None` if
    /// it lies below the target floor and maps to zero.
    pub images: Vec<Option<usize>>,
    /// Target positions with no preimage; empty exactly when surjective.
    pub missed: Vec<usize>,
}

impl StructureMap {
    pub fn is_surjective(&self) -> bool {
        self.missed.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.source_basis == self.target_basis
    }
}

/// The canonical projection from `source` to a shallower `target` with the
/// same degree and cap; a floor gap above one is the composite of unit steps.
pub fn structure_map(source: &WindowSpec, target: &WindowSpec, prime: Prime) -> Result<StructureMap, FreeError> {
    if source.degree != target.degree || source.length_cap != target.length_cap {
        return Err(FreeError::IncompatibleWindows(String::from("degree and length cap must agree")));
    }
    if target.excess_floor < source.excess_floor {
        return Err(FreeError::IncompatibleWindows(alloc::format!(
            "target floor {} lies below the source floor {}",
            target.excess_floor,
            source.excess_floor
        )));
    }
    let source_basis = completion_basis(source, prime);
    let target_basis = completion_basis(target, prime);
    let images: Vec<Option<usize>> = source_basis
        .iter()
        .map(|w| {
            let keep = w.excess().is_ok_and(|e| e.at_least(target.excess_floor));
            if keep { target_basis.binary_search(w).ok() } else { None }
        })
        .collect();
    let mut hit = alloc::vec![false; target_basis.len()];
    for i in images.iter().flatten() {
        hit[*i] = true;
    }
    let missed = hit.iter().enumerate().filter(|(_, h)| !**h).map(|(i, _)| i).collect();
    Ok(StructureMap { source: *source, target: *target, source_basis, target_basis, images, missed })
}

/// Negates indices letterwise: `Q^s` becomes `Sq^-s` and `β^ε P^s` becomes
/// `β^ε P^-s`, normalized on side `A`; `None` when a negative index results.
pub fn steenrodize_word(w: &OpWord) -> Option<OpWord> {
    let letters = w.letters().iter().map(|l| OpLetter::new(l.bockstein, -l.index)).collect();
    OpWord::steenrod_normalized(w.prime(), letters)
}

/// The quotient map from side `B` to the Steenrod algebra, reduced to the
/// admissible basis.
pub fn steenrodize(x: &LinComb) -> Result<LinComb, AdemError> {
    steenrodize_with(&mut Reducer::new(), x)
}

pub fn steenrodize_with(reducer: &mut Reducer, x: &LinComb) -> Result<LinComb, AdemError> {
    if x.side() != Side::B {
        return Err(AdemError::Term(crate::terms::TermError::SideMismatch { left: x.side(), right: Side::B }));
    }
    let mut out = LinComb::zero(x.prime(), Side::A);
    for (w, c) in x.iter() {
        if let Some(v) = steenrodize_word(w) {
            out.add_term(v, c);
        }
    }
    reducer.reduce(&out)
}

/// Admissible side-`A` words of the given cohomological degree.
pub fn steenrod_basis(degree: i64, prime: Prime) -> Vec<OpWord> {
    fn extend(prime: Prime, suffix: &mut Vec<OpLetter>, remaining: i64, out: &mut Vec<OpWord>) {
        if remaining == 0 {
            let mut letters = suffix.clone();
            letters.reverse();
            out.push(OpWord::from_parts_unchecked(prime, Side::A, letters));
            return;
        }
        let p = prime.get() as i64;
        let head = suffix.last().copied();
        for e in 0..=if prime.is_two() { 0 } else { 1 } {
            // A lone Bockstein may only act first.
            let mut lo = if head.is_none() && e == 1 { 0 } else { 1 };
            if let Some(h) = head {
                lo = lo.max(if prime.is_two() { 2 * h.index } else { p * h.index + h.bockstein as i64 });
            }
            let step = if prime.is_two() { 1 } else { 2 * (p - 1) };
            let hi = (remaining - e).div_euclid(step);
            for s in lo..=hi {
                let l = OpLetter::new(e as u8, s);
                suffix.push(l);
                extend(prime, suffix, remaining - l.degree(prime, Side::A), out);
                suffix.pop();
            }
        }
    }
    let mut out = Vec::new();
    if degree >= 0 {
        extend(prime, &mut Vec::new(), degree, &mut out);
    }
    out.sort();
    out
}

/// Number of multisets of parts `2^i - 1` summing to `degree`: the dimension
/// of the mod-2 dual Steenrod algebra in that degree.
pub fn milnor_dim(degree: u64) -> u64 {
    let n = degree as usize;
    let mut ways = alloc::vec![0u64; n + 1];
    ways[0] = 1;
    let mut part = 1usize;
    while part <= n {
        for t in part..=n {
            ways[t] += ways[t - part];
        }
        part = 2 * part + 1;
    }
    ways[n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adem::reduce;
    use crate::parse::parse;
    use crate::terms::Excess;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    fn names(words: &[OpWord]) -> Vec<String> {
        words.iter().map(|w| alloc::format!("{w}")).collect()
    }

    /// Scan of every word in an index box.
    fn scan(w: &WindowSpec, prime: Prime, bound: i64) -> Vec<OpWord> {
        let es: Vec<u8> = if prime.is_two() { vec![0] } else { vec![0, 1] };
        let letters: Vec<OpLetter> = es.iter().flat_map(|&e| (-bound..=bound).map(move |s| OpLetter::new(e, s))).collect();
        let mut out = Vec::new();
        let mut frontier: Vec<Vec<OpLetter>> = vec![vec![]];
        for _ in 0..w.length_cap {
            let mut next = Vec::new();
            for v in &frontier {
                for l in &letters {
                    let mut u = v.clone();
                    u.push(*l);
                    let word = OpWord::from_parts_unchecked(prime, Side::B, u.clone());
                    if word.is_admissible() {
                        if word.degree() == w.degree && word.excess().unwrap().at_least(w.excess_floor) {
                            out.push(word);
                        }
                        next.push(u);
                    }
                }
            }
            frontier = next;
        }
        out.sort();
        out
    }

    #[test]
    fn listed_completion_bases() {
        let w = WindowSpec::new(0, 0, 2).unwrap();
        assert_eq!(names(&completion_basis(&w, p(2))), ["Q^0", "Q^0 Q^0"]);
        for k in -6..=6 {
            for n in -6..=6 {
                let basis = completion_basis(&WindowSpec::new(k, -n, 1).unwrap(), p(2));
                let expected: Vec<String> = if k >= -n { vec![alloc::format!("Q^{k}")] } else { vec![] };
                assert_eq!(names(&basis), expected);
            }
        }
        assert_eq!(names(&completion_basis(&WindowSpec::new(3, -10, 1).unwrap(), p(3))), ["bP^1"]);
    }

    #[test]
    fn completion_matches_box_scan() {
        for q in [2u64, 3] {
            for k in -6..=6 {
                for f in -8..=0 {
                    for cap in 1..=3 {
                        let w = WindowSpec::new(k, f, cap).unwrap();
                        assert_eq!(completion_basis(&w, p(q)), scan(&w, p(q), 40), "p={q} {w:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn excess_never_decreases_along_admissible_words() {
        for q in [2u64, 3, 5] {
            let w = WindowSpec::new(3, -12, 4).unwrap();
            for word in completion_basis(&w, p(q)) {
                let l = word.letters();
                let ex: Vec<Excess> = (0..l.len())
                    .map(|j| OpWord::from_parts_unchecked(p(q), Side::B, l[j..].to_vec()).excess().unwrap())
                    .collect();
                assert!(ex.windows(2).all(|x| x[0] <= x[1]), "{word}");
            }
        }
    }

    #[test]
    fn listed_structure_maps() {
        let s = WindowSpec::new(0, -1, 2).unwrap();
        let t = WindowSpec::new(0, 0, 2).unwrap();
        let m = structure_map(&s, &t, p(2)).unwrap();
        assert!(m.is_surjective());
        assert_eq!(names(&m.target_basis), ["Q^0", "Q^0 Q^0"]);
        for (i, w) in m.source_basis.iter().enumerate() {
            if let Some(j) = m.images[i] {
                assert_eq!(&m.target_basis[j], w);
            }
        }
        let id = structure_map(&t, &t, p(2)).unwrap();
        assert!(id.is_identity() && id.images.iter().enumerate().all(|(i, j)| *j == Some(i)));
        let s = WindowSpec::new(4, -4, 1).unwrap();
        let t = WindowSpec::new(4, 4, 1).unwrap();
        let m = structure_map(&s, &t, p(2)).unwrap();
        assert_eq!(names(&m.source_basis), ["Q^4"]);
        assert_eq!(m.images, [Some(0)]);
        assert!(structure_map(&t, &s, p(2)).is_err());
        assert!(structure_map(&s, &WindowSpec::new(5, -3, 1).unwrap(), p(2)).is_err());
        assert!(structure_map(&s, &WindowSpec::new(4, -3, 2).unwrap(), p(2)).is_err());
    }

    #[test]
    fn unit_steps_are_surjective() {
        for q in [2u64, 3] {
            for k in -6..=6 {
                for floor in -8..=0 {
                    for cap in 1..=3 {
                        let s = WindowSpec::new(k, floor, cap).unwrap();
                        let t = WindowSpec::new(k, floor + 1, cap).unwrap();
                        let m = structure_map(&s, &t, p(q)).unwrap();
                        assert!(m.is_surjective(), "p={q} {s:?}");
                        let kept = m.images.iter().flatten().count();
                        assert_eq!(kept, m.target_basis.len());
                    }
                }
            }
        }
    }

    #[test]
    fn listed_steenrodize() {
        let q = |t: &str| parse(t, p(2), Side::B).unwrap();
        let a = |t: &str| parse(t, p(2), Side::A).unwrap();
        assert_eq!(steenrodize(&q("Q^-1")).unwrap(), a("Sq^1"));
        assert_eq!(steenrodize(&q("Q^0")).unwrap(), LinComb::identity(p(2), Side::A));
        assert!(steenrodize(&q("Q^-1 Q^-1")).unwrap().is_zero());
        assert!(steenrodize(&q("Q^1")).unwrap().is_zero());
        let b = parse("bP^0 P^-1", p(3), Side::B).unwrap();
        assert_eq!(steenrodize(&b).unwrap(), parse("bP^1", p(3), Side::A).unwrap());
        assert_eq!(steenrodize(&b).unwrap(), parse("bP^1", p(3), Side::A).unwrap().add(&parse("P^1 bP^0", p(3), Side::A).unwrap()).unwrap().sub(&parse("P^1 bP^0", p(3), Side::A).unwrap()).unwrap().add(&reduce(&parse("bP^0 P^1", p(3), Side::A).unwrap()).unwrap()).unwrap().sub(&parse("bP^1", p(3), Side::A).unwrap()).unwrap());
    }

    #[test]
    fn listed_steenrod_bases() {
        assert_eq!(names(&steenrod_basis(3, p(2))), ["Sq^3", "Sq^2 Sq^1"]);
        assert_eq!(steenrod_basis(0, p(2)), vec![OpWord::identity(p(2), Side::A)]);
        assert_eq!(steenrod_basis(7, p(2)).len(), 4);
        assert!(steenrod_basis(-1, p(2)).is_empty());
    }

    #[test]
    fn milnor_values() {
        assert_eq!(milnor_dim(0), 1);
        assert_eq!(milnor_dim(3), 2);
        // Direct enumeration of multisets of {1, 3, 7}.
        let brute = |n: u64| (0..=n / 7).map(|c| (0..=(n - 7 * c) / 3).count() as u64).sum::<u64>();
        for n in 0..=14 {
            assert_eq!(milnor_dim(n), brute(n), "{n}");
        }
    }

    #[test]
    fn steenrod_bases_match_dual_counts() {
        for d in 0..=20 {
            let basis = steenrod_basis(d, p(2));
            assert_eq!(basis.len() as u64, milnor_dim(d as u64), "{d}");
            assert!(basis.iter().all(|w| w.is_admissible() && w.degree() == d));
        }
        // Odd primes: exterior on degrees 2p^i - 1, polynomial on 2(p^i - 1).
        for q in [3u64, 5] {
            let top = 60usize;
            let mut series = vec![0u64; top + 1];
            series[0] = 1;
            let mut pi = 1usize;
            while 2 * pi - 1 <= top {
                let odd = 2 * pi - 1;
                for t in (odd..=top).rev() {
                    series[t] += series[t - odd];
                }
                if pi > 1 {
                    let even = 2 * (pi - 1);
                    for t in even..=top {
                        series[t] += series[t - even];
                    }
                }
                pi *= q as usize;
            }
            for (d, &count) in series.iter().enumerate().take(top + 1) {
                let basis = steenrod_basis(d as i64, p(q));
                assert_eq!(basis.len() as u64, count, "p={q} d={d}");
                assert!(basis.iter().all(|w| w.is_admissible()));
            }
        }
    }

    #[test]
    fn every_adem_step_maps_to_a_relation() {
        // Contexts are letterwise, so single pairs control every product.
        let mut reducer = Reducer::new();
        for q in [2u64, 3, 5] {
            let prime = p(q);
            let es: Vec<u8> = if q == 2 { vec![0] } else { vec![0, 1] };
            let letters: Vec<OpLetter> = es.iter().flat_map(|&e| (-8..=8).map(move |s| OpLetter::new(e, s))).collect();
            for &a in &letters {
                for &b in &letters {
                    if pair_is_admissible(a, b, prime, Side::B) {
                        continue;
                    }
                    let word = LinComb::from_word(OpWord::new(prime, Side::B, vec![a, b]).unwrap());
                    let step = crate::adem::adem_step(a, b, prime, Side::B).unwrap();
                    let lhs = steenrodize_with(&mut reducer, &word).unwrap();
                    assert_eq!(lhs, steenrodize_with(&mut reducer, &step).unwrap(), "p={q} {a:?} {b:?}");
                }
            }
        }
    }

    fn side_b(q: u64, max_len: usize, bound: i64) -> impl Strategy<Value = LinComb> {
        let prime = p(q);
        let e = if q == 2 { 0u8..=0 } else { 0u8..=1 };
        let letter = (e, -bound..=bound).prop_map(|(e, s)| OpLetter::new(e, s));
        proptest::collection::vec((proptest::collection::vec(letter, 0..=max_len), 1i64..5), 1..4)
            .prop_map(move |terms| LinComb::from_terms(prime, Side::B, terms).unwrap())
    }

    fn pair() -> impl Strategy<Value = (LinComb, LinComb)> {
        prop_oneof![(side_b(2, 3, 8), side_b(2, 3, 8)), (side_b(3, 2, 8), side_b(3, 2, 8))]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn quotient_is_an_algebra_map((x, y) in pair()) {
            let lhs = steenrodize(&reduce(&x.compose(&y).unwrap()).unwrap()).unwrap();
            let rhs = reduce(&steenrodize(&x).unwrap().compose(&steenrodize(&y).unwrap()).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn kills_the_unit_ideal(q in prop_oneof![Just(2u64), Just(3u64), Just(5u64)], w in proptest::collection::vec((0u8..=1, -8i64..=8), 0..=3)) {
            let prime = p(q);
            let letters = w.iter().map(|&(e, s)| OpLetter::new(if q == 2 { 0 } else { e }, s)).collect();
            let m = LinComb::from_word(OpWord::new(prime, Side::B, letters).unwrap());
            let unit = LinComb::from_word(OpWord::new(prime, Side::B, vec![OpLetter::plain(0)]).unwrap());
            let ideal = LinComb::identity(prime, Side::B).sub(&unit).unwrap();
            prop_assert!(steenrodize(&m.compose(&ideal).unwrap()).unwrap().is_zero());
            prop_assert!(steenrodize(&ideal.compose(&m).unwrap()).unwrap().is_zero());
        }
    }
}
