use std::sync::Arc;

use powops_core::adem::adem_step;
use powops_core::equivariant::Subgroup;
use powops_core::*;
use proptest::prelude::*;
use proptest::strategy::Strategy as Gen;

fn p(n: u64) -> Prime {
    Prime::new(n).unwrap()
}

fn word(prime: Prime, side: Side, letters: &[(u8, i64)]) -> OpWord {
    OpWord::new(prime, side, letters.iter().map(|&(e, s)| OpLetter::new(e, s)).collect()).unwrap()
}

fn text(x: &LinComb) -> String {
    x.to_string()
}

#[test]
fn binomials() {
    assert_eq!(binom_mod_p(4, 2, p(2)).residue(), 0);
    assert_eq!(binom_mod_p(-1, 3, p(2)).residue(), 1);
    assert_eq!(binom_mod_p(-3, 2, p(3)).residue(), 0);
    assert_eq!(lucas_check(4, 2, p(2)).unwrap().residue(), 0);
    assert_eq!(lucas_check(5, 2, p(3)).unwrap().residue(), 1);
    for q in [2u64, 3, 5, 7] {
        assert_eq!(lucas_check(q as i64, 1, p(q)).unwrap().residue(), 0);
    }
}

#[test]
fn words_and_statistics() {
    let x = parse("Q^5 Q^1", p(2), Side::B).unwrap();
    assert_eq!(x.len(), 1);
    assert_eq!(x.coefficient(&word(p(2), Side::B, &[(0, 5), (0, 1)])).residue(), 1);
    let y = parse("2 P^3 + b P^3", p(3), Side::B).unwrap();
    let c: Vec<u32> = y.iter().map(|(_, c)| c.residue()).collect();
    assert_eq!(c.len(), 2);
    assert!(c.contains(&2) && c.contains(&1));
    assert_eq!(parse("Sq^2 Sq^2 + Sq^4", p(2), Side::A).unwrap().len(), 2);

    assert_eq!(word(p(2), Side::B, &[(0, 5), (0, 1)]).degree(), 6);
    assert_eq!(word(p(3), Side::B, &[(1, 2)]).degree(), 7);
    assert_eq!(OpWord::identity(p(2), Side::B).degree(), 0);
    assert_eq!(OpWord::identity(p(2), Side::B).weight().unwrap(), 1);
    assert_eq!(word(p(2), Side::B, &[(0, 5), (0, 1)]).weight().unwrap(), 4);
    assert_eq!(word(p(3), Side::B, &[(0, 4), (1, 1), (0, 0)]).weight().unwrap(), 27);
    assert_eq!(word(p(2), Side::B, &[(0, 3), (0, 1)]).excess().unwrap(), Excess::Finite(2));
    assert_eq!(word(p(2), Side::B, &[(0, 0)]).excess().unwrap(), Excess::Finite(0));
    assert_eq!(word(p(3), Side::B, &[(0, 2), (1, 1)]).excess().unwrap(), Excess::Finite(1));
    assert!(word(p(2), Side::B, &[(0, 1), (0, 3)]).is_admissible());
    assert!(!word(p(2), Side::B, &[(0, 5), (0, 1)]).is_admissible());
    assert!(word(p(2), Side::A, &[(0, 3), (0, 1)]).is_admissible());
    assert!(!word(p(2), Side::A, &[(0, 2), (0, 2)]).is_admissible());
}

#[test]
fn adem_examples() {
    let two = p(2);
    assert_eq!(text(&adem_step(OpLetter::plain(5), OpLetter::plain(1), two, Side::B).unwrap()), "Q^3 Q^3");
    assert!(adem_step(OpLetter::plain(1), OpLetter::plain(1), two, Side::A).unwrap().is_zero());
    assert_eq!(text(&adem_step(OpLetter::plain(2), OpLetter::plain(2), two, Side::A).unwrap()), "Sq^3 Sq^1");
    assert!(adem_step(OpLetter::plain(3), OpLetter::plain(2), two, Side::B).is_err());
    let r = |s: &str, side| text(&reduce(&parse(s, two, side).unwrap()).unwrap());
    assert_eq!(r("Q^5 Q^1", Side::B), "Q^3 Q^3");
    assert_eq!(r("Q^3 Q^2", Side::B), "Q^3 Q^2");
    assert_eq!(r("Sq^2 Sq^2 + Sq^3 Sq^1", Side::A), "0");
}

#[test]
fn reduction_fixes_exactly_the_admissible_steenrod_words() {
    for d in 0..=12 {
        let basis = steenrod_basis(d, p(2));
        for w in &basis {
            assert_eq!(reduce(&LinComb::from_word(w.clone())).unwrap(), LinComb::from_word(w.clone()));
        }
        // Every word of degree d reduces into the span of the basis.
        let mut stack = vec![Vec::<i64>::new()];
        while let Some(v) = stack.pop() {
            let sum: i64 = v.iter().sum();
            if sum == d {
                let w = OpWord::new(p(2), Side::A, v.iter().map(|&s| OpLetter::plain(s)).collect()).unwrap();
                let y = reduce(&LinComb::from_word(w.clone())).unwrap();
                assert!(y.words().all(|u| basis.contains(u)));
                assert_eq!(y == LinComb::from_word(w.clone()), w.is_admissible(), "{w}");
                continue;
            }
            for s in 1..=d - sum {
                let mut u = v.clone();
                u.push(s);
                stack.push(u);
            }
        }
    }
}

#[test]
fn free_algebra_examples() {
    let gens = GeneratorSet::new([("x", 0)]).unwrap().into_shared();
    let x = parse_element("x", p(2), &gens).unwrap();
    let q = |s: &str| parse(s, p(2), Side::B).unwrap();
    assert!(apply_op(&q("Q^-1"), &x).unwrap().is_zero());
    assert_eq!(apply_op(&q("Q^0"), &x).unwrap(), x.pow(2));
    let gens = GeneratorSet::new([("x", 0), ("y", 0)]).unwrap().into_shared();
    let xy = parse_element("x y", p(2), &gens).unwrap();
    let expected = parse_element("x x Q^1 y + Q^1 x y y", p(2), &gens).unwrap();
    assert_eq!(apply_op(&q("Q^1"), &xy).unwrap(), expected);

    let gens = GeneratorSet::new([("x", 1)]).unwrap().into_shared();
    let names = |d, cap| -> Vec<String> {
        free_basis(p(2), &gens, d, cap).unwrap().iter().map(|m| m.to_text(p(2), &gens)).collect()
    };
    assert_eq!(names(2, 2), ["x x"]);
    assert_eq!(names(3, 2), ["Q^2 x", "x x x"]);
    for cap in 1..=4 {
        assert_eq!(names(1, cap), ["x"]);
    }
    let empty = GeneratorSet::empty().into_shared();
    assert!((1..=5).all(|d| free_basis(p(2), &empty, d, 2).unwrap().is_empty()));

    let e = GeneratorSet::new([("e", -1)]).unwrap().into_shared();
    let at = |s: &str| parse_element(s, p(2), &e).unwrap();
    let target = GeneratorSet::new([("e'", 0)]).unwrap().into_shared();
    let image = suspension_image(&at("Q^0 e")).unwrap();
    let q0 = parse("Q^0", p(2), Side::B).unwrap();
    let e_prime = parse_element("e'", p(2), &target).unwrap();
    assert_eq!(image.to_string(), apply_op(&q0, &e_prime).unwrap().to_string());
    assert!(suspension_image(&at("Q^3 e Q^2 e")).unwrap().is_zero());
    assert!(suspension_image(&at("Q^-1 e")).unwrap().is_zero());
}

#[test]
fn completion_and_quotient_examples() {
    let names = |w: &[OpWord]| w.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    assert_eq!(names(&completion_basis(&WindowSpec::new(0, 0, 2).unwrap(), p(2))), ["Q^0", "Q^0 Q^0"]);
    assert_eq!(names(&completion_basis(&WindowSpec::new(3, -10, 1).unwrap(), p(3))), ["bP^1"]);
    let m = structure_map(&WindowSpec::new(0, -1, 2).unwrap(), &WindowSpec::new(0, 0, 2).unwrap(), p(2)).unwrap();
    assert!(m.is_surjective() && names(&m.target_basis) == ["Q^0", "Q^0 Q^0"]);
    let w = WindowSpec::new(4, -4, 1).unwrap();
    assert!(structure_map(&w, &w, p(2)).unwrap().is_identity());
    let m = structure_map(&w, &WindowSpec::new(4, 4, 1).unwrap(), p(2)).unwrap();
    assert!(m.is_surjective() && m.images == [Some(0)]);

    let q = |s: &str| parse(s, p(2), Side::B).unwrap();
    assert_eq!(text(&steenrodize(&q("Q^-1")).unwrap()), "Sq^1");
    assert_eq!(text(&steenrodize(&q("Q^0")).unwrap()), "1");
    assert_eq!(text(&steenrodize(&q("Q^-1 Q^-1")).unwrap()), "0");
    assert_eq!(names(&steenrod_basis(3, p(2))), ["Sq^3", "Sq^2 Sq^1"]);
    assert_eq!(steenrod_basis(0, p(2)), [OpWord::identity(p(2), Side::A)]);
    assert_eq!(steenrod_basis(7, p(2)).len(), 4);
    assert_eq!(milnor_dim(0), 1);
    assert_eq!(milnor_dim(3), 2);
    // 10 = 7+3, 7+1+1+1, 3+3+3+1, 3+3+1*4, 3+1*7, 1*10.
    assert_eq!(milnor_dim(10), 6);
}

#[test]
fn equivariant_examples() {
    let h = Subgroup::generated(4, &[Permutation::parse_cycles(4, "(1 2)(3 4)").unwrap()]).unwrap();
    assert_eq!(equivariant::orbits(&h), [vec![1, 2], vec![3, 4]]);
    assert_eq!(gamma_fixed_dim(&h), 1);
    assert_eq!(gamma_fixed_dim(&Subgroup::trivial(6).unwrap()), 5);
    assert_eq!(gamma_fixed_dim(&Subgroup::cyclic(5).unwrap()), 0);
    assert!(in_family_t(&Subgroup::trivial(2).unwrap()) && !in_family_t(&Subgroup::cyclic(5).unwrap()));
    assert_eq!([4, 6, 9, 12].map(|n| gcd_binomials(n).unwrap()), [2, 1, 3, 1]);
    assert_eq!(weyl_group(&Subgroup::cyclic(3).unwrap()).unwrap().order, 2);
    assert_eq!(weyl_group(&Subgroup::cyclic(5).unwrap()).unwrap().order, 4);
    assert_eq!(weyl_group(&Subgroup::symmetric(4).unwrap()).unwrap().order, 1);
    assert_eq!(double_coset_check(p(3)).unwrap().outside_normalizer, 0);
    assert_eq!(double_coset_check(p(5)).unwrap().outside_normalizer, 100);
    assert_eq!(double_coset_check(p(2)).unwrap().double_cosets, 1);
    assert!((-10..=10).all(|k| op_pattern(p(2), k) == 1));
    assert_eq!([4, 3, 2].map(|k| op_pattern(p(3), k)), [1, 1, 0]);
    let c = tate_chart(p(2), &[(0, 1)], (-3, 3), None).unwrap();
    assert_eq!(c.rows.len(), 1);
    assert!(c.rows[0].dims.iter().all(|&d| d == 1) && c.rows[0].dims.len() == 7);
    let t = tate_chart(p(2), &[(0, 1)], (-3, 3), Some(0)).unwrap();
    assert!((-3..=3).all(|s| (t.dim(s, 0) == 1) == (s >= 0)));
    assert!(tate_chart(p(2), &[], (-3, 3), None).unwrap().rows.is_empty());
}

#[test]
fn length_one_completion_counts_match_the_operation_pattern() {
    for q in [2u64, 3, 5] {
        for k in -12..=12 {
            let n = completion_basis(&WindowSpec::new(k, -50, 1).unwrap(), p(q)).len() as u32;
            assert_eq!(n, op_pattern(p(q), k), "p={q} k={k}");
        }
    }
}

fn admissible_word(q: u64) -> impl Gen<Value = OpWord> {
    let e = if q == 2 { 0u8..=0 } else { 0u8..=1 };
    proptest::collection::vec((e, -6i64..=6), 0..=3)
        .prop_map(move |v| word(p(q), Side::B, &v))
        .prop_filter("admissible", |w| w.is_admissible())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn excess_predicts_instability_vanishing(
        (q, w) in prop_oneof![Just(2u64), Just(3u64)].prop_flat_map(|q| (Just(q), admissible_word(q))),
        d in -6i64..=6,
    ) {
        let gens: Arc<GeneratorSet> = GeneratorSet::new([("x", d)]).unwrap().into_shared();
        let x = parse_element("x", p(q), &gens).unwrap();
        let y = apply_op(&LinComb::from_word(w.clone()), &x).unwrap();
        match w.excess().unwrap() {
            Excess::Infinite => prop_assert_eq!(y, x),
            Excess::Finite(e) if e < d => prop_assert!(y.is_zero()),
            Excess::Finite(e) if e > d => prop_assert!(!y.is_zero()),
            Excess::Finite(_) => {}
        }
    }

    #[test]
    fn print_parse_round_trip(
        q in prop_oneof![Just(2u64), Just(3u64), Just(5u64)],
        side_b in any::<bool>(),
        terms in proptest::collection::vec((proptest::collection::vec((0u8..=1, -20i64..=20), 0..=5), 1i64..7), 1..4),
    ) {
        let side = if side_b { Side::B } else { Side::A };
        let terms = terms.into_iter().map(|(v, c)| {
            let letters = v.into_iter().map(|(e, s)| {
                let e = if q == 2 { 0 } else { e };
                OpLetter::new(e, if side == Side::A { s.abs() } else { s })
            }).collect();
            (letters, c)
        });
        let x = LinComb::from_terms(p(q), side, terms).unwrap();
        prop_assert_eq!(parse(&x.to_string(), p(q), side).unwrap(), x);
    }
}
