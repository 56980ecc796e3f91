//! The library checked against independent brute-force oracles: planar
//! trees, monoid norms, Smith pivots and Novikov inverses.

mod common;

use std::collections::BTreeSet;

use common::*;
use lagfloer::gapped::{monoid_elements, monoid_norm};
use lagfloer::novikov::NovikovElement;
use lagfloer::smith::{smith_valuations, NovMatrix};
use lagfloer::transfer::{enumerate_trees, TreeMode};
use lagfloer::{int, rational, Energy, EnergyMonoid, Rational, RingFlavor};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn strict_trees_match_composition_recursion() {
    let counts = [0usize, 0, 1, 3, 11, 45, 197, 903];
    for (k, &want) in counts.iter().enumerate().skip(2) {
        let got: BTreeSet<String> = enumerate_trees(k, TreeMode::Strict, 0).iter().map(|t| t.bracket()).collect();
        assert_eq!(got.len(), want, "k = {k}");
        assert_eq!(got, strict_tree_brackets(k), "k = {k}");
    }
}

#[test]
fn filtered_trees_match_preorder_words() {
    for k in 0..=4 {
        for budget in 0..=2 {
            let trees = enumerate_trees(k, TreeMode::Filtered, budget);
            let got: BTreeSet<String> = trees.iter().map(|t| t.bracket()).collect();
            assert_eq!(got.len(), trees.len(), "duplicates at k={k} b={budget}");
            assert_eq!(got, filtered_tree_brackets(k, budget), "k={k} b={budget}");
            assert!(trees.iter().all(|t| t.leaves() == k && t.low_valence() <= budget));
        }
    }
}

#[test]
fn filtered_budget_zero_is_strict() {
    for k in 2..=6 {
        let a: Vec<String> = enumerate_trees(k, TreeMode::Filtered, 0).iter().map(|t| t.bracket()).collect();
        let b: Vec<String> = enumerate_trees(k, TreeMode::Strict, 0).iter().map(|t| t.bracket()).collect();
        assert_eq!(a, b);
    }
}

#[test]
fn norms_match_exhaustive_search_with_maslov_powers() {
    let mut r = rng(201);
    for _ in 0..60 {
        let gens: Vec<Energy> = (0..r.gen_range(1..=3))
            .map(|_| Energy::new(rational(r.gen_range(1..=6), r.gen_range(1..=3)), r.gen_range(-2..=2)))
            .collect();
        let g = EnergyMonoid::new(gens).unwrap();
        let bound = int(3);
        let oracle = exhaustive_lengths(g.generators(), &bound);
        let elems = monoid_elements(&g, &bound);
        assert_eq!(elems.len(), oracle.len());
        for e in &elems {
            assert_eq!(monoid_norm(&g, e).unwrap(), oracle[e] + floor_i64(&e.lambda), "{e}");
        }
        assert!(monoid_norm(&g, &Energy::new(rational(1, 7), 0)).is_err() || oracle.contains_key(&Energy::new(rational(1, 7), 0)));
    }
}

#[test]
fn smith_pivots_match_determinantal_divisors() {
    let mut r = rng(202);
    let cutoff = int(2);
    for _ in 0..300 {
        let (rows, cols) = (r.gen_range(1..=4), r.gen_range(1..=4));
        let polys: Vec<Vec<Poly>> = (0..rows).map(|_| (0..cols).map(|_| random_poly(&mut r)).collect()).collect();
        let m = NovMatrix::from_rows(
            polys
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|p| {
                            NovikovElement::from_terms(
                                p.iter().map(|(e, c)| (Energy::new(e.clone(), 0), c.clone())),
                                RingFlavor::Cy0,
                                cutoff.clone(),
                            )
                            .unwrap()
                        })
                        .collect()
                })
                .collect(),
            RingFlavor::Cy0,
            cutoff.clone(),
        )
        .unwrap();
        let s = smith_valuations(&m).unwrap();
        assert_eq!(s.pivots, minor_pivots(&polys, &cutoff), "{polys:?}");
        assert_eq!(s.rank, s.pivots.len());
    }
}

/// `(1 − a)^{-1} = Σ a^j` for `a` of positive valuation, computed by
/// repeated multiplication.
fn geometric_inverse(a: &NovikovElement) -> NovikovElement {
    let one = NovikovElement::one(a.flavor(), a.cutoff().clone());
    let mut sum = one.clone();
    let mut pow = one;
    loop {
        pow = pow.mul(a).unwrap();
        if pow.is_zero() {
            return sum;
        }
        sum = sum.add(&pow).unwrap();
    }
}

proptest! {
    #[test]
    fn inverse_matches_geometric_series(
        terms in proptest::collection::vec((1i64..=6, -3i64..=3), 1..4),
        c0 in prop_oneof![Just(1i64), Just(-2), Just(3)],
    ) {
        let cutoff = int(3);
        let a = NovikovElement::from_terms(
            terms.iter().map(|(l, c)| (Energy::new(rational(*l, 2), 0), int(*c))),
            RingFlavor::Cy0,
            cutoff.clone(),
        ).unwrap();
        // x = c0 (1 − a'), a' = −a / c0
        let neg = a.scale(&(-Rational::from_integer(1.into()) / int(c0)));
        let x = NovikovElement::constant(int(c0), RingFlavor::Cy0, cutoff.clone())
            .mul(&NovikovElement::one(RingFlavor::Cy0, cutoff.clone()).sub(&neg).unwrap())
            .unwrap();
        let want = geometric_inverse(&neg).scale(&(Rational::from_integer(1.into()) / int(c0)));
        prop_assert_eq!(x.invert().unwrap(), want);
    }
}
