//! Independent oracles and randomized fixtures shared by the integration
//! tests.
//!
//! The oracles here deliberately avoid the library's algorithms: trees are
//! generated by composition recursion, norms by exhaustive multiplicity
//! search, and Smith pivots from determinantal divisors of exact minors.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use lagfloer::gradedcore::{qvec_from_dense, qvec_unit, QVec};
use lagfloer::linalg;
use lagfloer::{int, rational, Energy, EnergyMonoid, GradedSpace, MultiMap, OperationSystem, Rational, RingFlavor};
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn en(p: i64, q: i64) -> Energy {
    Energy::new(rational(p, q), 0)
}

// ---------------------------------------------------------------------------
// Trees

/// Bracket strings of all planar trees with `k` leaves whose internal
/// vertices have at least two children, including the bare leaf for
/// `k = 1`.
pub fn strict_tree_brackets(k: usize) -> BTreeSet<String> {
    fn compositions(k: usize, parts: usize) -> Vec<Vec<usize>> {
        if parts == 0 {
            return if k == 0 { vec![vec![]] } else { vec![] };
        }
        let mut out = Vec::new();
        for first in 1..=k {
            for mut rest in compositions(k - first, parts - 1) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }
    let mut memo: Vec<BTreeSet<String>> = vec![BTreeSet::new(), ["x".to_string()].into_iter().collect()];
    for n in 2..=k {
        let mut set = BTreeSet::new();
        for parts in 2..=n {
            for comp in compositions(n, parts) {
                let mut partial = vec![String::new()];
                for &c in &comp {
                    let mut next = Vec::new();
                    for p in &partial {
                        for t in &memo[c] {
                            next.push(format!("{p}{t}"));
                        }
                    }
                    partial = next;
                }
                set.extend(partial.into_iter().map(|s| format!("({s})")));
            }
        }
        memo.push(set);
    }
    memo.get(k).cloned().unwrap_or_default()
}

/// Bracket strings of planar trees with `k` leaves, at least one internal
/// vertex and at most `budget` internal vertices with fewer than two
/// children, generated as preorder out-degree words.
pub fn filtered_tree_brackets(k: usize, budget: usize) -> BTreeSet<String> {
    // A preorder symbol: a leaf, or an internal vertex with its child count.
    #[derive(Clone, Copy)]
    enum Sym {
        Leaf,
        Vertex(usize),
    }
    fn to_bracket(word: &[Sym], pos: &mut usize) -> String {
        let s = word[*pos];
        *pos += 1;
        match s {
            Sym::Leaf => "x".into(),
            Sym::Vertex(c) => {
                let inner: String = (0..c).map(|_| to_bracket(word, pos)).collect();
                format!("({inner})")
            }
        }
    }
    fn grow(word: &mut Vec<Sym>, pending: usize, leaves: usize, low: usize, high: usize, k: usize, budget: usize, out: &mut BTreeSet<String>) {
        if pending == 0 {
            if leaves == k {
                out.insert(to_bracket(word, &mut 0));
            }
            return;
        }
        // every vertex with two or more children needs a leaf or an empty
        // vertex below each extra child, which bounds the word
        if high > k + budget || pending > (k - leaves) + (budget - low) {
            return;
        }
        if leaves < k && !word.is_empty() {
            word.push(Sym::Leaf);
            grow(word, pending - 1, leaves + 1, low, high, k, budget, out);
            word.pop();
        }
        for c in 0..=(k + budget) {
            let is_low = c < 2;
            if is_low && low == budget {
                continue;
            }
            word.push(Sym::Vertex(c));
            grow(word, pending - 1 + c, leaves, low + usize::from(is_low), high + usize::from(!is_low), k, budget, out);
            word.pop();
        }
    }
    let mut out = BTreeSet::new();
    grow(&mut Vec::new(), 1, 0, 0, 0, k, budget, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Norms

/// Every monoid element with `λ ≤ bound` and its maximal decomposition
/// length, by exhaustive search over generator multiplicities.
pub fn exhaustive_lengths(gens: &[Energy], bound: &Rational) -> BTreeMap<Energy, i64> {
    fn rec(gens: &[Energy], idx: usize, acc: Energy, len: i64, bound: &Rational, out: &mut BTreeMap<Energy, i64>) {
        if idx == gens.len() {
            let slot = out.entry(acc).or_insert(len);
            if len > *slot {
                *slot = len;
            }
            return;
        }
        let mut cur = acc;
        let mut l = len;
        loop {
            rec(gens, idx + 1, cur.clone(), l, bound, out);
            let next = cur.add(&gens[idx]);
            if &next.lambda > bound || gens[idx].lambda.is_zero() {
                break;
            }
            cur = next;
            l += 1;
        }
    }
    let mut out = BTreeMap::new();
    rec(gens, 0, Energy::zero(), 0, bound, &mut out);
    out
}

pub fn floor_i64(q: &Rational) -> i64 {
    use num_traits::ToPrimitive;
    q.floor().to_integer().to_i64().unwrap()
}

// ---------------------------------------------------------------------------
// Smith pivots from determinantal divisors

/// A polynomial in `T` with rational exponents.
pub type Poly = BTreeMap<Rational, Rational>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e = ea + eb;
            let c = out.entry(e.clone()).or_insert_with(Rational::zero);
            *c += ca * cb;
            if c.is_zero() {
                out.remove(&e);
            }
        }
    }
    out
}

fn poly_add_scaled(acc: &mut Poly, p: &Poly, s: &Rational) {
    for (e, c) in p {
        let slot = acc.entry(e.clone()).or_insert_with(Rational::zero);
        *slot += c * s;
        if slot.is_zero() {
            acc.remove(e);
        }
    }
}

fn determinant(m: &[Vec<Poly>]) -> Poly {
    let n = m.len();
    if n == 0 {
        return [(Rational::zero(), Rational::one())].into_iter().collect();
    }
    let mut out = Poly::new();
    for j in 0..n {
        if m[0][j].is_empty() {
            continue;
        }
        let minor: Vec<Vec<Poly>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, p)| p.clone()).collect())
            .collect();
        let term = poly_mul(&m[0][j], &determinant(&minor));
        let sign = if j % 2 == 0 { Rational::one() } else { -Rational::one() };
        poly_add_scaled(&mut out, &term, &sign);
    }
    out
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Smith pivots `≤ cutoff` of an exact polynomial matrix, as the successive
/// differences of the minimal valuations of its `k × k` minors.
pub fn minor_pivots(m: &[Vec<Poly>], cutoff: &Rational) -> Vec<Rational> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut prev = Rational::zero();
    let mut out = Vec::new();
    for k in 1..=rows.min(cols) {
        let mut best: Option<Rational> = None;
        for rs in subsets(rows, k) {
            for cs in subsets(cols, k) {
                let sub: Vec<Vec<Poly>> = rs.iter().map(|&r| cs.iter().map(|&c| m[r][c].clone()).collect()).collect();
                let det = determinant(&sub);
                if let Some(v) = det.keys().next() {
                    if best.as_ref().is_none_or(|b| v < b) {
                        best = Some(v.clone());
                    }
                }
            }
        }
        let Some(delta) = best else { break };
        let pivot = &delta - &prev;
        if &pivot > cutoff {
            break;
        }
        out.push(pivot);
        prev = delta;
    }
    out
}

/// A random polynomial with up to two terms and energies in `{0, 1/2, …, 2}`.
pub fn random_poly(rng: &mut ChaCha8Rng) -> Poly {
    let mut p = Poly::new();
    if rng.gen_bool(0.25) {
        return p;
    }
    for _ in 0..rng.gen_range(1..=2) {
        let e = rational(rng.gen_range(0..=4), 2);
        let c = int(rng.gen_range(-3..=3));
        if !c.is_zero() {
            poly_add_scaled(&mut p, &[(e, Rational::one())].into_iter().collect(), &c);
        }
    }
    p
}

// ---------------------------------------------------------------------------
// Fixtures

/// A random unipotent automorphism of a graded space mixing basis vectors
/// of equal degree, with its inverse.
pub fn random_automorphism(space: &GradedSpace, rng: &mut ChaCha8Rng) -> (MultiMap, MultiMap) {
    let dim = space.dim();
    let mut m = vec![vec![Rational::zero(); dim]; dim];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Rational::one();
    }
    // a product of elementary moves within each degree
    for _ in 0..(2 * dim) {
        let d = *space.degree_set().choose(rng).unwrap();
        let idx = space.indices_of_degree(d);
        if idx.len() < 2 {
            continue;
        }
        let a = *idx.choose(rng).unwrap();
        let b = *idx.choose(rng).unwrap();
        if a == b {
            continue;
        }
        let c = int(*[-1i64, 1, 2].choose(rng).unwrap());
        // row a += c · row b
        let rb = m[b].clone();
        for (x, y) in m[a].iter_mut().zip(rb) {
            *x += &c * y;
        }
    }
    let mat = linalg::Matrix::from_rows(m.clone(), dim);
    let inv = linalg::inverse(&mat).expect("unipotent moves are invertible");
    let cols = |mm: &linalg::Matrix<Rational>| -> MultiMap {
        let cs: Vec<QVec> = (0..dim).map(|j| qvec_from_dense(&mm.column(j))).collect();
        MultiMap::linear(&cs)
    };
    (cols(&mat), cols(&inv))
}

/// `φ^{-1} ∘ m ∘ φ^{⊗k}` on every table.
pub fn conjugate(sys: &OperationSystem, phi: &MultiMap, phi_inv: &MultiMap) -> OperationSystem {
    let mut out = sys.empty_like();
    for ((k, e), t) in sys.tables() {
        out.insert_table(*k, e.clone(), t.precompose_all(phi).postcompose(phi_inv));
    }
    out
}

fn exterior_products(m: &mut OperationSystem, offset: usize) {
    // basis 1, x, y, xy at offset..offset+4 with degrees −1, 0, 0, 1
    let s = m.space().clone();
    let prod = |i: usize, j: usize| -> Option<(usize, i64)> {
        match (i, j) {
            (0, j) if j < 4 => Some((j, 1)),
            (i, 0) if i < 4 => Some((i, 1)),
            (1, 2) => Some((3, 1)),
            (2, 1) => Some((3, -1)),
            _ => None,
        }
    };
    for i in 0..4 {
        for j in 0..4 {
            if let Some((o, c)) = prod(i, j) {
                let sign = if s.degree(offset + i).rem_euclid(2) == 1 { -1 } else { 1 };
                m.set_entry(Energy::zero(), &[offset + i, offset + j], offset + o, int(c * sign)).unwrap();
            }
        }
    }
}

/// What kind of curvature a fixture carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Curvature {
    /// None.
    Flat,
    /// Only exact terms `T^λ m_1^{0,0}(a)`; the Maurer–Cartan equation is
    /// solvable.
    Exact,
    /// Exact terms plus a multiple of the top exterior class.
    Mixed,
}

/// Parameters a caller may want to read back.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub alg: OperationSystem,
    /// Dimension before removing acyclic pairs.
    pub cohomology_dim: usize,
}

/// A random monoid with one or two generators and a cutoff admitting at
/// most three nonzero monoid steps.
pub fn random_monoid(rng: &mut ChaCha8Rng) -> (EnergyMonoid, Rational) {
    let choices = [rational(1, 2), int(1), rational(3, 2)];
    let g0 = choices.choose(rng).unwrap().clone();
    let mut gens = vec![Energy::new(g0.clone(), 0)];
    if rng.gen_bool(0.5) {
        gens.push(Energy::new(&g0 * int(3) / int(2), 0));
    }
    let cutoff = &g0 * int(2);
    (EnergyMonoid::new(gens).unwrap(), cutoff)
}

/// A conjugated curved exterior algebra on `1, x, y, xy` with one or two
/// acyclic pairs. Relations hold before conjugation by construction and
/// conjugation by a graded automorphism preserves them.
pub fn exterior_fixture(rng: &mut ChaCha8Rng, curvature: Curvature) -> Fixture {
    let (monoid, cutoff) = random_monoid(rng);
    let pairs = rng.gen_range(1..=2);
    let mut basis: Vec<(String, i64)> = vec![("1".into(), -1), ("x".into(), 0), ("y".into(), 0), ("xy".into(), 1)];
    let mut pair_degrees = Vec::new();
    for j in 0..pairs {
        let d = if j == 0 { 0 } else { *[-1i64, 0].choose(rng).unwrap() };
        basis.push((format!("a{j}"), d));
        basis.push((format!("b{j}"), d + 1));
        pair_degrees.push(d);
    }
    let space = GradedSpace::new(basis).unwrap();
    let mut m = OperationSystem::algebra(space.clone(), monoid.clone(), RingFlavor::Cy0, cutoff);
    exterior_products(&mut m, 0);
    for j in 0..pairs {
        let c = int(*[1i64, -1, 2].choose(rng).unwrap());
        m.set_entry(Energy::zero(), &[4 + 2 * j], 5 + 2 * j, c).unwrap();
    }
    let gens = monoid.generators().to_vec();
    if curvature != Curvature::Flat {
        for (j, &d) in pair_degrees.iter().enumerate() {
            if d == 0 {
                let e = gens.choose(rng).unwrap().clone();
                m.set_entry(e, &[], 5 + 2 * j, int(rng.gen_range(1..=3))).unwrap();
            }
        }
    }
    if curvature == Curvature::Mixed {
        let e = gens.choose(rng).unwrap().clone();
        m.set_entry(e, &[], 3, int(*[1i64, -2].choose(rng).unwrap())).unwrap();
    }
    let (phi, phi_inv) = random_automorphism(&space, rng);
    Fixture {
        alg: conjugate(&m, &phi, &phi_inv),
        cohomology_dim: 4,
    }
}

/// A conjugated algebra with cohomology `x` (degree 0), `u` (degree 2),
/// `w` (degree 3) and no degree-1 classes. Every operation outputs `w`
/// and nothing takes `w` as input, so the relations hold; an acyclic pair
/// `a ↦ b` carries exact curvature.
pub fn gauge_fixture(rng: &mut ChaCha8Rng) -> OperationSystem {
    let monoid = EnergyMonoid::new([en(1, 1)]).unwrap();
    let cutoff = int(2);
    let space = GradedSpace::new([("x", 0), ("u", 2), ("w", 3), ("a", 0), ("b", 1)]).unwrap();
    let mut m = OperationSystem::algebra(space.clone(), monoid, RingFlavor::Cy0, cutoff);
    let coeff = |rng: &mut ChaCha8Rng| int(*[-2i64, -1, 1, 2, 3].choose(rng).unwrap());
    let energy = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { Energy::zero() } else { en(1, 1) };
    m.set_entry(Energy::zero(), &[3], 4, int(1)).unwrap();
    m.set_entry(en(1, 1), &[], 4, coeff(rng)).unwrap();
    for ins in [vec![0, 1], vec![1, 0], vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0], vec![3, 1], vec![0, 3, 1]] {
        if rng.gen_bool(0.7) {
            let (e, c) = (energy(rng), coeff(rng));
            m.set_entry(e, &ins, 2, c).unwrap();
        }
    }
    let (phi, phi_inv) = random_automorphism(&space, rng);
    conjugate(&m, &phi, &phi_inv)
}

/// A strict surjective quasi-isomorphism `p: A → D` with `D` a conjugated
/// curved exterior algebra and `A = D ⊕ (acyclic pairs)` conjugated again.
pub fn strict_quasi_iso(rng: &mut ChaCha8Rng) -> (OperationSystem, OperationSystem, OperationSystem) {
    let (monoid, cutoff) = random_monoid(rng);
    let d_space = GradedSpace::new([("1", -1), ("x", 0), ("y", 0), ("xy", 1)]).unwrap();
    let pairs = rng.gen_range(1..=2);
    let mut a_basis: Vec<(String, i64)> = d_space.labels().iter().cloned().zip(d_space.degrees().iter().copied()).collect();
    for j in 0..pairs {
        let d = *[-1i64, 0].choose(rng).unwrap();
        a_basis.push((format!("a{j}"), d));
        a_basis.push((format!("b{j}"), d + 1));
    }
    let a_space = GradedSpace::new(a_basis).unwrap();
    let curv_e = monoid.generators()[0].clone();
    let curv_c = int(rng.gen_range(0..=2));
    let mut d0 = OperationSystem::algebra(d_space.clone(), monoid.clone(), RingFlavor::Cy0, cutoff.clone());
    exterior_products(&mut d0, 0);
    d0.set_entry(curv_e.clone(), &[], 3, curv_c.clone()).unwrap();
    let mut a0 = OperationSystem::algebra(a_space.clone(), monoid.clone(), RingFlavor::Cy0, cutoff.clone());
    exterior_products(&mut a0, 0);
    a0.set_entry(curv_e, &[], 3, curv_c).unwrap();
    for j in 0..pairs {
        a0.set_entry(Energy::zero(), &[4 + 2 * j], 5 + 2 * j, int(*[1i64, -1, 3].choose(rng).unwrap())).unwrap();
    }
    let (phi, phi_inv) = random_automorphism(&a_space, rng);
    let (psi, psi_inv) = random_automorphism(&d_space, rng);
    let a = conjugate(&a0, &phi, &phi_inv);
    let d = conjugate(&d0, &psi, &psi_inv);
    let mut pi = MultiMap::new(1);
    for i in 0..d_space.dim() {
        pi.add_vec(vec![i], &Rational::one(), &qvec_unit(i));
    }
    let p1 = pi.precompose_all(&phi).postcompose(&psi_inv);
    let p = lagfloer::ainfty::strict_morphism(p1, &a_space, &d_space, monoid, RingFlavor::Cy0, cutoff);
    (p, a, d)
}

/// A random degree-0 cochain with positive-energy components drawn from
/// the monoid generators.
pub fn random_cochain(alg: &OperationSystem, rng: &mut ChaCha8Rng) -> lagfloer::NVec {
    let mut b = lagfloer::NVec::zero(alg.flavor(), alg.cutoff().clone());
    let deg0 = alg.space().indices_of_degree(0);
    let gens = alg.monoid().generators().to_vec();
    for _ in 0..rng.gen_range(1..=2) {
        let e = gens.choose(rng).unwrap().clone();
        let i = *deg0.choose(rng).unwrap();
        let c = int(rng.gen_range(-2..=2));
        let mut v = QVec::new();
        if !c.is_zero() {
            v.insert(i, c);
        }
        let term = lagfloer::NVec::from_qvec(e, v, alg.flavor(), alg.cutoff().clone()).unwrap();
        b = b.add(&term).unwrap();
    }
    b
}

/// A Lagrangian-style presentation with random homology, double points and
/// a matching differential (disjoint pairs `g ↦ c T^λ g'` with
/// `deg g' = deg g + 1`), which squares to zero.
pub fn random_matching_presentation(
    rng: &mut ChaCha8Rng,
    tag: &str,
    n: i64,
) -> lagfloer::floer::LagrangianPresentation {
    use lagfloer::floer::{DoublePoint, LagrangianPresentation};
    let mut homology = BTreeMap::new();
    for k in 0..=n {
        let r = rng.gen_range(0..=1usize) + usize::from(k == 0 || k == n);
        homology.insert(k, r);
    }
    let mut dps = Vec::new();
    for j in 0..rng.gen_range(1..=2) {
        let eta = rng.gen_range(-1..=n + 1);
        dps.push(DoublePoint::new(format!("{tag}{j}-"), format!("{tag}{j}+"), eta));
        dps.push(DoublePoint::new(format!("{tag}{j}+"), format!("{tag}{j}-"), n - eta));
    }
    let monoid = EnergyMonoid::new([en(1, 2)]).unwrap();
    let mut pres =
        LagrangianPresentation::new(n, homology, dps, RingFlavor::Cy0, monoid, int(2)).unwrap();
    let space = pres.space().clone();
    let mut used = vec![false; space.dim()];
    let mut order: Vec<usize> = (0..space.dim()).collect();
    order.shuffle(rng);
    for &i in &order {
        if used[i] {
            continue;
        }
        let targets: Vec<usize> = (0..space.dim())
            .filter(|&j| !used[j] && j != i && space.degree(j) == space.degree(i) + 1)
            .collect();
        if let Some(&j) = targets.choose(rng) {
            if rng.gen_bool(0.7) {
                used[i] = true;
                used[j] = true;
                let e = en(rng.gen_range(0..=3), 2);
                pres.algebra_mut().set_entry(e, &[i], j, int(rng.gen_range(1..=3))).unwrap();
            }
        }
    }
    pres
}
