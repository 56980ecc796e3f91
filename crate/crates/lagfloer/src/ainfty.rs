//! Relation checking for filtered A-infinity algebras, morphisms and
//! homotopies, the bar differential, composition and weak homotopy
//! equivalence.
//!
//! Every check works at the table level and takes an explicit level `N`:
//! only keys `(k, λ, μ)` with `‖(λ,μ)‖ + k − 1 ≤ N` and `λ ≤ E` are
//! examined. This key set is closed under all decompositions appearing
//! in the relations because the norm is superadditive.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::gapped::{monoid_elements, EnergyMonoid};
use crate::gradedcore::{
    compose_at, qvec_from_dense, relation_defects, GradedSpace, MultiMap, OperationSystem, QVec, Role,
    TableKey,
};
use crate::linalg::{self, Matrix};
use crate::novikov::{Energy, NovikovElement, RingFlavor};
use crate::{Error, Rational, Result};

/// A key whose relation fails, with the lexicographically first failing
/// input tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub k: usize,
    pub energy: Energy,
    pub witness: Vec<usize>,
    pub witness_labels: Vec<String>,
    pub residual: QVec,
}

/// Outcome of a budgeted relation check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub level: i64,
    pub cutoff: Rational,
    pub keys_checked: usize,
    pub failures: Vec<Failure>,
}

impl CheckReport {
    pub fn passes(&self) -> bool {
        self.failures.is_empty()
    }
}

/// All keys `(k, β)` with `β ∈ G`, `λ ≤ E` and `‖β‖ + k − 1 ≤ N`.
pub fn budget_keys(monoid: &EnergyMonoid, cutoff: &Rational, level: i64) -> Vec<TableKey> {
    let mut out = Vec::new();
    for e in monoid_elements(monoid, cutoff) {
        let norm = monoid.norm(&e).expect("enumerated elements are members");
        let top = level + 1 - norm;
        for k in 0..=top.max(-1) {
            out.push((k as usize, e.clone()));
        }
    }
    out
}

fn report_from_defects(
    defects: BTreeMap<TableKey, MultiMap>,
    space: &GradedSpace,
    level: i64,
    cutoff: &Rational,
    keys_checked: usize,
) -> CheckReport {
    let failures = defects
        .into_iter()
        .filter(|(_, m)| !m.is_zero())
        .map(|((k, energy), m)| {
            let (witness, residual) = m.entries().iter().next().map(|(t, v)| (t.clone(), v.clone())).expect("nonzero");
            Failure {
                k,
                energy,
                witness_labels: witness.iter().map(|&i| space.label(i).to_string()).collect(),
                witness,
                residual,
            }
        })
        .collect();
    CheckReport {
        level,
        cutoff: cutoff.clone(),
        keys_checked,
        failures,
    }
}

/// Checks the `A_{N,0}` relations of an algebra at level `N`.
pub fn check_relations(alg: &OperationSystem, level: i64) -> CheckReport {
    let monoid = alg.monoid().clone();
    let defects = relation_defects(alg, |k, e| monoid.admits(k, e, level));
    let keys = budget_keys(alg.monoid(), alg.cutoff(), level).len();
    report_from_defects(defects, alg.space(), level, alg.cutoff(), keys)
}

/// A word `coeff · a_1 ⊗ … ⊗ a_n` in the tensor coalgebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BarWord {
    pub letters: Vec<usize>,
    pub coeff: NovikovElement,
}

impl BarWord {
    pub fn degree(&self, space: &GradedSpace) -> i64 {
        self.letters.iter().map(|&i| space.degree(i)).sum()
    }
}

/// A finite linear combination of words.
pub type BarChain = BTreeMap<Vec<usize>, NovikovElement>;

fn chain_add(chain: &mut BarChain, letters: Vec<usize>, c: NovikovElement) -> Result<()> {
    if c.is_zero() {
        return Ok(());
    }
    let sum = match chain.get(&letters) {
        Some(prev) => prev.add(&c)?,
        None => c,
    };
    if sum.is_zero() {
        chain.remove(&letters);
    } else {
        chain.insert(letters, sum);
    }
    Ok(())
}

/// The bar differential `d̄ = Σ_k m̄_k` on one word:
/// `Σ (−1)^{Σ_{j<l} deg a_j} a_1⊗…⊗m_k(a_l,…)⊗…`, including `m_0`
/// inserted at every position.
pub fn bar_differential(alg: &OperationSystem, w: &BarWord) -> Result<Vec<BarWord>> {
    let mut chain = BarChain::new();
    bar_differential_into(alg, w, &mut chain)?;
    Ok(chain
        .into_iter()
        .map(|(letters, coeff)| BarWord { letters, coeff })
        .collect())
}

fn bar_differential_into(alg: &OperationSystem, w: &BarWord, chain: &mut BarChain) -> Result<()> {
    let n = w.letters.len();
    let degrees = alg.space().degrees();
    for ((k, beta), table) in alg.tables() {
        let k = *k;
        if k > n {
            continue;
        }
        for start in 0..=(n - k) {
            let block = &w.letters[start..start + k];
            let Some(v) = table.get(block) else { continue };
            let s: i64 = w.letters[..start].iter().map(|&i| degrees[i]).sum();
            let sign = if s.rem_euclid(2) == 1 { -Rational::one() } else { Rational::one() };
            let base = w.coeff.shift(beta)?.scale(&sign);
            for (o, q) in v {
                let mut letters = w.letters[..start].to_vec();
                letters.push(*o);
                letters.extend_from_slice(&w.letters[start + k..]);
                chain_add(chain, letters, base.scale(q))?;
            }
        }
    }
    Ok(())
}

/// `d̄` applied to a chain.
pub fn bar_differential_chain(alg: &OperationSystem, c: &BarChain) -> Result<BarChain> {
    let mut out = BarChain::new();
    for (letters, coeff) in c {
        bar_differential_into(
            alg,
            &BarWord {
                letters: letters.clone(),
                coeff: coeff.clone(),
            },
            &mut out,
        )?;
    }
    Ok(out)
}

/// Candidate tables for one slot of a block expansion.
type Candidates<'a> = Vec<(&'a TableKey, &'a MultiMap)>;

/// Enumerates choices of one table per slot, with accumulated arity and
/// energy pruned by `keep`. `visit` receives the chosen tables, the total
/// arity and the total energy (including `base`).
fn enumerate_blocks<'a>(
    slots: &[&Candidates<'a>],
    base: &Energy,
    cutoff: &Rational,
    keep: &dyn Fn(usize, &Energy) -> bool,
    visit: &mut dyn FnMut(&[&'a MultiMap], &[usize], usize, &Energy),
) {
    let mut chosen: Vec<&'a MultiMap> = Vec::with_capacity(slots.len());
    let mut arities: Vec<usize> = Vec::with_capacity(slots.len());
    fn rec<'a>(
        slots: &[&Candidates<'a>],
        arity: usize,
        energy: Energy,
        cutoff: &Rational,
        keep: &dyn Fn(usize, &Energy) -> bool,
        chosen: &mut Vec<&'a MultiMap>,
        arities: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[&'a MultiMap], &[usize], usize, &Energy),
    ) {
        if chosen.len() == slots.len() {
            visit(chosen, arities, arity, &energy);
            return;
        }
        for ((k, e), m) in slots[chosen.len()].iter() {
            let ne = energy.add(e);
            let na = arity + k;
            if &ne.lambda > cutoff || !keep(na, &ne) {
                continue;
            }
            chosen.push(m);
            arities.push(*k);
            rec(slots, na, ne, cutoff, keep, chosen, arities, visit);
            chosen.pop();
            arities.pop();
        }
    }
    rec(slots, 0, base.clone(), cutoff, keep, &mut chosen, &mut arities, visit);
}

fn accumulate(acc: &mut BTreeMap<TableKey, MultiMap>, key: TableKey, m: &MultiMap, c: &Rational) {
    if m.is_zero() {
        return;
    }
    acc.entry(key.clone())
        .or_insert_with(|| MultiMap::new(key.0))
        .add_scaled(c, m);
}

fn merge(parts: Vec<BTreeMap<TableKey, MultiMap>>) -> BTreeMap<TableKey, MultiMap> {
    let mut total = BTreeMap::new();
    for p in parts {
        for (k, m) in p {
            accumulate(&mut total, k, &m, &Rational::one());
        }
    }
    total.retain(|_, m| !m.is_zero());
    total
}

/// `Σ outer_l^{β0}(f_{k1}^{β1}, …, f_{kl}^{βl})` over all choices, keyed by
/// the total `(Σ k_j, Σ β)`. No signs arise since `f` is even.
fn outer_of_blocks(
    outer: &OperationSystem,
    inner: &OperationSystem,
    keep: &(dyn Fn(usize, &Energy) -> bool + Sync),
) -> BTreeMap<TableKey, MultiMap> {
    let cands: Candidates = inner.tables().iter().collect();
    let cutoff = outer.cutoff().clone();
    let outers: Vec<(&TableKey, &MultiMap)> = outer.tables().iter().collect();
    let parts: Vec<BTreeMap<TableKey, MultiMap>> = outers
        .par_iter()
        .map(|((l, b0), table)| {
            let mut acc = BTreeMap::new();
            let slots: Vec<&Candidates> = vec![&cands; *l];
            enumerate_blocks(&slots, b0, &cutoff, keep, &mut |chosen, _arities, arity, energy| {
                let inners: Vec<Option<&MultiMap>> = chosen.iter().map(|m| Some(*m)).collect();
                let term = crate::gradedcore::plug(table, &inners, None);
                accumulate(&mut acc, (arity, energy.clone()), &term, &One::one());
            });
            acc
        })
        .collect();
    merge(parts)
}

/// `Σ (−1)^{Σ_{l<i} deg a_l} f(a_1,…,m(…),…)` keyed by total key.
fn inner_insertions(
    outer: &OperationSystem,
    alg: &OperationSystem,
    keep: &(dyn Fn(usize, &Energy) -> bool + Sync),
) -> BTreeMap<TableKey, MultiMap> {
    let degrees = alg.space().degrees().to_vec();
    let cutoff = outer.cutoff().clone();
    let outers: Vec<(&TableKey, &MultiMap)> = outer.tables().iter().collect();
    let parts: Vec<BTreeMap<TableKey, MultiMap>> = outers
        .par_iter()
        .map(|((k1, b1), f)| {
            let mut acc = BTreeMap::new();
            for ((k2, b2), m) in alg.tables() {
                if *k1 == 0 {
                    continue;
                }
                let k = k1 + k2 - 1;
                let b = b1.add(b2);
                if b.lambda > cutoff || !keep(k, &b) {
                    continue;
                }
                for slot in 0..*k1 {
                    let term = compose_at(f, slot, m, Some(&degrees));
                    accumulate(&mut acc, (k, b.clone()), &term, &One::one());
                }
            }
            acc
        })
        .collect();
    merge(parts)
}

fn same_ring(a: &OperationSystem, b: &OperationSystem) -> Result<()> {
    if a.flavor() != b.flavor() || a.cutoff() != b.cutoff() {
        return Err(Error::ChainMismatch(format!(
            "rings ({}, {}) and ({}, {})",
            a.flavor(),
            a.cutoff(),
            b.flavor(),
            b.cutoff()
        )));
    }
    if a.monoid() != b.monoid() {
        return Err(Error::ChainMismatch("different energy monoids".into()));
    }
    Ok(())
}

fn expect_role(sys: &OperationSystem, role: Role) -> Result<()> {
    if sys.role() != role {
        return Err(Error::RoleMismatch {
            expected: role.tag().into(),
            found: sys.role().tag().into(),
        });
    }
    Ok(())
}

fn check_morphism_shape(f: &OperationSystem, a: &OperationSystem, b: &OperationSystem) -> Result<()> {
    expect_role(f, Role::Morphism)?;
    expect_role(a, Role::Algebra)?;
    expect_role(b, Role::Algebra)?;
    same_ring(f, a)?;
    same_ring(f, b)?;
    if f.source() != a.space() || f.target() != b.space() {
        return Err(Error::ChainMismatch("morphism spaces do not match the algebras".into()));
    }
    if f.table(0, &Energy::zero()).is_some_and(|t| !t.is_zero()) {
        return Err(Error::MalformedMorphism("f_0^{0,0} is nonzero".into()));
    }
    Ok(())
}

/// Checks the filtered morphism equation for `f: (A, m) → (B, n)` at
/// level `N`: `Σ ± f(…, m(…), …) = Σ n(f(…), …, f(…))`, where blocks of
/// arity zero (`f_0`, of positive energy) are allowed on the right.
pub fn check_morphism(f: &OperationSystem, a: &OperationSystem, b: &OperationSystem, level: i64) -> Result<CheckReport> {
    check_morphism_shape(f, a, b)?;
    let monoid = f.monoid().clone();
    let keep = move |k: usize, e: &Energy| monoid.admits(k, e, level);
    let lhs = inner_insertions(f, a, &keep);
    let rhs = outer_of_blocks(b, f, &keep);
    let diff = difference(lhs, &rhs);
    let keys = budget_keys(f.monoid(), f.cutoff(), level).len();
    Ok(report_from_defects(diff, a.space(), level, f.cutoff(), keys))
}

fn difference(mut lhs: BTreeMap<TableKey, MultiMap>, rhs: &BTreeMap<TableKey, MultiMap>) -> BTreeMap<TableKey, MultiMap> {
    for (k, m) in rhs {
        accumulate(&mut lhs, k.clone(), m, &-Rational::one());
    }
    lhs.retain(|_, m| !m.is_zero());
    lhs
}

/// Composition `g ∘ f` of filtered morphisms, truncated at the cutoff.
pub fn compose_morphisms(g: &OperationSystem, f: &OperationSystem) -> Result<OperationSystem> {
    expect_role(f, Role::Morphism)?;
    expect_role(g, Role::Morphism)?;
    same_ring(f, g)?;
    if f.target() != g.source() {
        return Err(Error::ChainMismatch("target of f is not the source of g".into()));
    }
    for h in [f, g] {
        if h.table(0, &Energy::zero()).is_some_and(|t| !t.is_zero()) {
            return Err(Error::MalformedMorphism("f_0^{0,0} is nonzero".into()));
        }
    }
    let kmax = g.max_arity().max(1) * f.max_arity().max(1);
    let keep = move |k: usize, _: &Energy| k <= kmax;
    let tables = outer_of_blocks(g, f, &keep);
    let mut out = OperationSystem::new(
        Role::Morphism,
        f.source().clone(),
        g.target().clone(),
        f.monoid().clone(),
        f.flavor(),
        f.cutoff().clone(),
    );
    for ((k, e), m) in tables {
        out.insert_table(k, e, m);
    }
    Ok(out)
}

/// Convention for the first sum of the homotopy equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HomotopySign {
    /// `n(f,…,f, H, g,…,g)` with `(−1)^{Σ deg of the inputs before H}`.
    Koszul,
    /// The same sum with no sign.
    Unsigned,
}

/// The convention used by [`check_homotopy`].
pub const HOMOTOPY_SIGN: HomotopySign = HomotopySign::Koszul;

/// The right-hand side of the homotopy equation,
/// `Σ ± n(f,…,f, H, g,…,g) + Σ (−1)^{Σ_{l≤i} deg a_l} H(a_1,…,a_i, m(…), …)`,
/// on every key accepted by `keep`.
pub fn homotopy_rhs(
    h: &OperationSystem,
    f: &OperationSystem,
    g: &OperationSystem,
    a: &OperationSystem,
    b: &OperationSystem,
    sign: HomotopySign,
    keep: &(dyn Fn(usize, &Energy) -> bool + Sync),
) -> BTreeMap<TableKey, MultiMap> {
    let degrees = a.space().degrees().to_vec();
    let fc: Candidates = f.tables().iter().collect();
    let gc: Candidates = g.tables().iter().collect();
    let hc: Candidates = h.tables().iter().collect();
    let cutoff = h.cutoff().clone();
    let outers: Vec<(&TableKey, &MultiMap)> = b.tables().iter().collect();
    let parts: Vec<BTreeMap<TableKey, MultiMap>> = outers
        .par_iter()
        .map(|((l, b0), table)| {
            let mut acc = BTreeMap::new();
            for pos in 0..*l {
                let mut slots: Vec<&Candidates> = Vec::with_capacity(*l);
                for s in 0..*l {
                    slots.push(match s.cmp(&pos) {
                        std::cmp::Ordering::Less => &fc,
                        std::cmp::Ordering::Equal => &hc,
                        std::cmp::Ordering::Greater => &gc,
                    });
                }
                enumerate_blocks(&slots, b0, &cutoff, keep, &mut |chosen, arities, arity, energy| {
                    let inners: Vec<Option<&MultiMap>> = chosen.iter().map(|m| Some(*m)).collect();
                    let before: usize = arities[..pos].iter().sum();
                    let s = match sign {
                        HomotopySign::Koszul => Some((before, degrees.as_slice())),
                        HomotopySign::Unsigned => None,
                    };
                    let term = crate::gradedcore::plug(table, &inners, s);
                    accumulate(&mut acc, (arity, energy.clone()), &term, &One::one());
                });
            }
            acc
        })
        .collect();
    let first = merge(parts);
    let second = inner_insertions(h, a, keep);
    let mut total = first;
    for (k, m) in second {
        accumulate(&mut total, k, &m, &One::one());
    }
    total.retain(|_, m| !m.is_zero());
    total
}

/// Checks that `H` is a homotopy from `f` to `g` (both `A → B`) at
/// level `N`.
pub fn check_homotopy(
    h: &OperationSystem,
    f: &OperationSystem,
    g: &OperationSystem,
    a: &OperationSystem,
    b: &OperationSystem,
    level: i64,
) -> Result<CheckReport> {
    expect_role(h, Role::Homotopy)?;
    check_morphism_shape(f, a, b)?;
    check_morphism_shape(g, a, b)?;
    same_ring(h, a)?;
    if h.source() != a.space() || h.target() != b.space() {
        return Err(Error::ChainMismatch("homotopy spaces do not match the algebras".into()));
    }
    if h.table(0, &Energy::zero()).is_some_and(|t| !t.is_zero()) {
        return Err(Error::MalformedMorphism("H_0^{0,0} is nonzero".into()));
    }
    let violations = h.degree_violations();
    if let Some(v) = violations.first() {
        return Err(Error::DegreeViolation(v.clone()));
    }
    let monoid = h.monoid().clone();
    let keep = move |k: usize, e: &Energy| monoid.admits(k, e, level);
    let rhs = homotopy_rhs(h, f, g, a, b, HOMOTOPY_SIGN, &keep);
    let mut lhs: BTreeMap<TableKey, MultiMap> = BTreeMap::new();
    for ((k, e), m) in f.tables() {
        if keep(*k, e) {
            accumulate(&mut lhs, (*k, e.clone()), m, &One::one());
        }
    }
    for ((k, e), m) in g.tables() {
        if keep(*k, e) {
            accumulate(&mut lhs, (*k, e.clone()), m, &-Rational::one());
        }
    }
    let diff = difference(lhs, &rhs);
    let keys = budget_keys(h.monoid(), h.cutoff(), level).len();
    Ok(report_from_defects(diff, a.space(), level, h.cutoff(), keys))
}

/// Per-degree data of the map induced on cohomology.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeCertificate {
    pub degree: i64,
    pub source_rank: usize,
    pub target_rank: usize,
    pub induced_rank: usize,
}

/// Whether `f_1^{0,0}` induces an isomorphism on `m_1^{0,0}`-cohomology.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WqeReport {
    pub is_equivalence: bool,
    pub degrees: Vec<DegreeCertificate>,
}

/// Basis of the cycles of degree `p`, as full-length vectors.
pub(crate) fn cycles(space: &GradedSpace, d: &MultiMap, p: i64) -> Vec<QVec> {
    let cols = space.indices_of_degree(p);
    let rows = space.indices_of_degree(p + 1);
    if cols.is_empty() {
        return Vec::new();
    }
    let m = d.matrix(&rows, &cols);
    linalg::kernel(&m)
        .into_iter()
        .map(|k| {
            cols.iter()
                .zip(k)
                .filter(|(_, q)| !q.is_zero())
                .map(|(&i, q)| (i, q))
                .collect()
        })
        .collect()
}

/// Images of the basis of degree `p − 1`.
pub(crate) fn boundaries(space: &GradedSpace, d: &MultiMap, p: i64) -> Vec<QVec> {
    space
        .indices_of_degree(p - 1)
        .into_iter()
        .map(|i| d.image(&[i]))
        .filter(|v| !v.is_empty())
        .collect()
}

fn dense_columns(vs: &[QVec], rows: &[usize]) -> Matrix<Rational> {
    let cols: Vec<Vec<Rational>> = vs
        .iter()
        .map(|v| rows.iter().map(|r| v.get(r).cloned().unwrap_or_else(Rational::zero)).collect())
        .collect();
    Matrix::from_columns(&cols, rows.len())
}

/// Rank of the image of `vs` modulo the span of `modulo`, with every
/// vector supported on `rows`.
pub(crate) fn rank_modulo(vs: &[QVec], modulo: &[QVec], rows: &[usize]) -> usize {
    let mut all: Vec<QVec> = modulo.to_vec();
    all.extend_from_slice(vs);
    linalg::rank(&dense_columns(&all, rows)) - linalg::rank(&dense_columns(modulo, rows))
}

/// Whether `v` lies in the span of `vs` (all supported on `rows`).
pub(crate) fn in_span(v: &QVec, vs: &[QVec], rows: &[usize]) -> bool {
    let m = dense_columns(vs, rows);
    let b: Vec<Rational> = rows.iter().map(|r| v.get(r).cloned().unwrap_or_else(Rational::zero)).collect();
    linalg::solve(&m, &b).is_some()
}

/// Coefficients `x` with `Σ x_j vs_j = v`, if any.
pub(crate) fn solve_in_span(v: &QVec, vs: &[QVec], rows: &[usize]) -> Option<Vec<Rational>> {
    let m = dense_columns(vs, rows);
    let b: Vec<Rational> = rows.iter().map(|r| v.get(r).cloned().unwrap_or_else(Rational::zero)).collect();
    linalg::solve(&m, &b)
}

/// Decides whether `f` is a weak homotopy equivalence, degree by degree.
pub fn is_weak_homotopy_equiv(f: &OperationSystem, a: &OperationSystem, b: &OperationSystem) -> Result<WqeReport> {
    check_morphism_shape(f, a, b)?;
    let da = a.linear_part();
    let db = b.linear_part();
    crate::gradedcore::check_differential(a.space(), &da)?;
    crate::gradedcore::check_differential(b.space(), &db)?;
    let f1 = f.linear_part();
    let mut degrees: Vec<i64> = a.space().degree_set();
    degrees.extend(b.space().degree_set());
    degrees.sort_unstable();
    degrees.dedup();
    let mut certs = Vec::new();
    let mut ok = true;
    for p in degrees {
        let za = cycles(a.space(), &da, p);
        let ba = boundaries(a.space(), &da, p);
        let rows_a = a.space().indices_of_degree(p);
        let source_rank = rank_modulo(&za, &ba, &rows_a);
        let zb = cycles(b.space(), &db, p);
        let bb = boundaries(b.space(), &db, p);
        let rows_b = b.space().indices_of_degree(p);
        let target_rank = rank_modulo(&zb, &bb, &rows_b);
        let images: Vec<QVec> = za.iter().map(|z| f1.apply(z)).collect();
        let induced_rank = rank_modulo(&images, &bb, &rows_b);
        if !(source_rank == target_rank && induced_rank == source_rank) {
            ok = false;
        }
        certs.push(DegreeCertificate {
            degree: p,
            source_rank,
            target_rank,
            induced_rank,
        });
    }
    Ok(WqeReport {
        is_equivalence: ok,
        degrees: certs,
    })
}

/// A strict morphism with the given linear part.
pub fn strict_morphism(
    linear: MultiMap,
    source: &GradedSpace,
    target: &GradedSpace,
    monoid: EnergyMonoid,
    flavor: RingFlavor,
    cutoff: Rational,
) -> OperationSystem {
    let mut f = OperationSystem::new(Role::Morphism, source.clone(), target.clone(), monoid, flavor, cutoff);
    f.insert_table(1, Energy::zero(), linear);
    f
}

/// Converts a dense column list into the linear map `j ↦ columns[j]`.
pub fn linear_from_dense(columns: &[Vec<Rational>]) -> MultiMap {
    let cols: Vec<QVec> = columns.iter().map(|c| qvec_from_dense(c)).collect();
    MultiMap::linear(&cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradedcore::qvec_unit;
    use crate::{int, rational};

    fn e(l: i64) -> Energy {
        Energy::new(int(l), 0)
    }

    fn g1() -> EnergyMonoid {
        EnergyMonoid::new([e(1)]).unwrap()
    }

    /// x:0 ↦ y:1 via m_1^{0,0}, m_0^{1,0} = y, plus z:0 closed.
    fn curved(with_z: bool) -> OperationSystem {
        let mut basis = vec![("x", 0), ("y", 1)];
        if with_z {
            basis.push(("z", 0));
        }
        let s = GradedSpace::new(basis).unwrap();
        let mut a = OperationSystem::algebra(s, g1(), RingFlavor::Cy0, int(4));
        a.set_entry_labels(e(0), &["x"], "y", int(1)).unwrap();
        a.set_entry_labels(e(1), &[], "y", int(1)).unwrap();
        a
    }

    #[test]
    fn curved_fixture_passes_at_level_three() {
        let a = curved(false);
        let r = check_relations(&a, 3);
        assert!(r.passes(), "{:?}", r.failures);
        assert!(r.keys_checked > 0);
    }

    #[test]
    fn perturbed_constant_fails_with_witness() {
        let s = GradedSpace::new([("x", 0), ("y", 1), ("z", 0), ("w", 2)]).unwrap();
        let mut a = OperationSystem::algebra(s, g1(), RingFlavor::Cy0, int(4));
        a.set_entry_labels(e(0), &["x"], "y", int(1)).unwrap();
        a.set_entry_labels(e(1), &[], "y", int(1)).unwrap();
        a.set_entry_labels(e(0), &["z", "y"], "w", int(1)).unwrap();
        // m_2(z, m_0) = T w breaks the (1, 1) relation; the witness is (z).
        let r = check_relations(&a, 3);
        assert!(!r.passes());
        let f = &r.failures[0];
        assert_eq!((f.k, f.energy.clone()), (1, e(1)));
        assert_eq!(f.witness_labels, vec!["z".to_string()]);
    }

    #[test]
    fn bar_differential_with_only_m1() {
        let s = GradedSpace::new([("a", 1), ("b", 0), ("c", 2), ("d", 1)]).unwrap();
        let mut alg = OperationSystem::algebra(s, g1(), RingFlavor::Cy0, int(2));
        alg.set_entry_labels(e(0), &["a"], "c", int(1)).unwrap();
        alg.set_entry_labels(e(0), &["b"], "d", int(1)).unwrap();
        let one = NovikovElement::one(RingFlavor::Cy0, int(2));
        let w = BarWord { letters: vec![0, 1], coeff: one.clone() };
        let out = bar_differential(&alg, &w).unwrap();
        // m1(a)⊗b + (−1)^{deg a} a⊗m1(b)
        assert_eq!(out, vec![
            BarWord { letters: vec![0, 3], coeff: one.neg() },
            BarWord { letters: vec![2, 1], coeff: one.clone() },
        ]);
    }

    #[test]
    fn bar_differential_of_empty_word_is_curvature() {
        let a = curved(false);
        let one = NovikovElement::one(RingFlavor::Cy0, int(4));
        let out = bar_differential(&a, &BarWord { letters: vec![], coeff: one }).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].letters, vec![1]);
        assert_eq!(out[0].coeff.to_string(), "1*T^(1)*e^(0)");
    }

    #[test]
    fn identity_is_a_morphism() {
        let a = curved(true);
        let id = OperationSystem::identity(a.space(), g1(), RingFlavor::Cy0, int(4));
        assert!(check_morphism(&id, &a, &a, 4).unwrap().passes());
    }

    #[test]
    fn identity_between_different_products_fails_at_arity_two() {
        let s = GradedSpace::new([("p", -1), ("q", -1), ("r", -1)]).unwrap();
        let mut m = OperationSystem::algebra(s.clone(), g1(), RingFlavor::Cy0, int(2));
        m.set_entry_labels(e(0), &["p", "q"], "r", int(1)).unwrap();
        let n = OperationSystem::algebra(s.clone(), g1(), RingFlavor::Cy0, int(2));
        let id = OperationSystem::identity(&s, g1(), RingFlavor::Cy0, int(2));
        let r = check_morphism(&id, &m, &n, 3).unwrap();
        assert!(!r.passes());
        assert_eq!(r.failures[0].k, 2);
        assert_eq!(r.failures[0].witness_labels, vec!["p".to_string(), "q".to_string()]);
    }

    #[test]
    fn nonzero_f00_is_malformed() {
        let a = curved(false);
        let mut f = OperationSystem::identity(a.space(), g1(), RingFlavor::Cy0, int(4));
        let mut t = MultiMap::new(0);
        t.add_entry(vec![], 0, int(1));
        f.insert_table(0, e(0), t);
        assert!(matches!(check_morphism(&f, &a, &a, 2), Err(Error::MalformedMorphism(_))));
    }

    #[test]
    fn identity_composes_neutrally() {
        let a = curved(true);
        let id = OperationSystem::identity(a.space(), g1(), RingFlavor::Cy0, int(4));
        let mut f = id.clone();
        let mut t = MultiMap::new(2);
        t.add_entry(vec![0, 2], 0, rational(1, 2));
        f.insert_table(2, e(1), t);
        assert!(compose_morphisms(&id, &f).unwrap().same_tables(&f));
        assert!(compose_morphisms(&f, &id).unwrap().same_tables(&f));
    }

    #[test]
    fn strict_composition_multiplies_linear_parts() {
        let s = GradedSpace::new([("a", 0), ("b", 0)]).unwrap();
        let mut l1 = MultiMap::new(1);
        l1.add_entry(vec![0], 1, int(2));
        l1.add_entry(vec![1], 0, int(1));
        let mut l2 = MultiMap::new(1);
        l2.add_entry(vec![0], 0, int(3));
        l2.add_entry(vec![1], 0, int(1));
        let f = strict_morphism(l1.clone(), &s, &s, g1(), RingFlavor::Cy0, int(1));
        let g = strict_morphism(l2.clone(), &s, &s, g1(), RingFlavor::Cy0, int(1));
        let gf = compose_morphisms(&g, &f).unwrap();
        assert!(gf.is_strict_morphism());
        assert_eq!(gf.linear_part(), l1.postcompose(&l2));
    }

    #[test]
    fn zero_homotopy_from_f_to_f() {
        let a = curved(true);
        let id = OperationSystem::identity(a.space(), g1(), RingFlavor::Cy0, int(4));
        let h = OperationSystem::new(Role::Homotopy, a.space().clone(), a.space().clone(), g1(), RingFlavor::Cy0, int(4));
        assert!(check_homotopy(&h, &id, &id, &a, &a, 3).unwrap().passes());
    }

    #[test]
    fn chain_homotopy_on_a_complex() {
        // x:0 → y:1; f = id, g = 0 on the acyclic complex, H(y) = x.
        let s = GradedSpace::new([("x", 0), ("y", 1)]).unwrap();
        let mut a = OperationSystem::algebra(s.clone(), EnergyMonoid::trivial(), RingFlavor::Cy0, int(0));
        a.set_entry_labels(e(0), &["x"], "y", int(1)).unwrap();
        let id = OperationSystem::identity(&s, EnergyMonoid::trivial(), RingFlavor::Cy0, int(0));
        let zero = id.empty_like();
        let mut h = OperationSystem::new(Role::Homotopy, s.clone(), s.clone(), EnergyMonoid::trivial(), RingFlavor::Cy0, int(0));
        h.set_entry_labels(e(0), &["y"], "x", int(1)).unwrap();
        assert!(check_homotopy(&h, &id, &zero, &a, &a, 1).unwrap().passes());
        let bad = h.empty_like();
        assert!(!check_homotopy(&bad, &id, &zero, &a, &a, 1).unwrap().passes());
    }

    #[test]
    fn weak_equivalences() {
        let a = curved(true);
        let id = OperationSystem::identity(a.space(), g1(), RingFlavor::Cy0, int(4));
        let r = is_weak_homotopy_equiv(&id, &a, &a).unwrap();
        assert!(r.is_equivalence);
        let zero = id.empty_like();
        assert!(!is_weak_homotopy_equiv(&zero, &a, &a).unwrap().is_equivalence);
    }

    #[test]
    fn inclusion_of_cohomology_is_an_equivalence() {
        let a = curved(true);
        let model_space = GradedSpace::new([("z", 0)]).unwrap();
        let model = OperationSystem::algebra(model_space.clone(), g1(), RingFlavor::Cy0, int(4));
        let mut incl = MultiMap::new(1);
        incl.add_vec(vec![0], &int(1), &qvec_unit(2));
        let i = strict_morphism(incl, &model_space, a.space(), g1(), RingFlavor::Cy0, int(4));
        let a0 = { let mut t = a.clone(); t.remove_table(0, &e(1)); t };
        let r = is_weak_homotopy_equiv(&i, &model, &a0).unwrap();
        assert!(r.is_equivalence, "{r:?}");
    }

    /// Exterior algebra on `x, y` in shifted degrees with
    /// `m_2(a, b) = (−1)^{deg a} a∧b`.
    fn exterior() -> OperationSystem {
        let s = GradedSpace::new([("1", -1), ("x", 0), ("y", 0), ("xy", 1)]).unwrap();
        let mut a = OperationSystem::algebra(s.clone(), g1(), RingFlavor::Cy0, int(2));
        // (word, product) on the monomial basis
        let prod = |i: usize, j: usize| -> Option<(usize, i64)> {
            match (i, j) {
                (0, j) => Some((j, 1)),
                (i, 0) => Some((i, 1)),
                (1, 2) => Some((3, 1)),
                (2, 1) => Some((3, -1)),
                _ => None,
            }
        };
        for i in 0..4 {
            for j in 0..4 {
                if let Some((o, c)) = prod(i, j) {
                    let sign = if s.degree(i).rem_euclid(2) == 1 { -1 } else { 1 };
                    a.set_entry(e(0), &[i, j], o, int(c * sign)).unwrap();
                }
            }
        }
        a
    }

    fn solve_for_g(h: &OperationSystem, f: &OperationSystem, a: &OperationSystem, sign: HomotopySign, level: i64) -> OperationSystem {
        let monoid = f.monoid().clone();
        let keep = move |k: usize, en: &Energy| monoid.admits(k, en, level);
        let mut g = f.clone();
        for _ in 0..64 {
            let rhs = homotopy_rhs(h, f, &g, a, a, sign, &keep);
            let mut next = f.empty_like();
            for ((k, en), m) in f.tables() {
                if keep(*k, en) {
                    next.insert_table(*k, en.clone(), m.clone());
                }
            }
            for ((k, en), m) in rhs {
                next.insert_table(k, en, m.scaled(&-Rational::one()));
            }
            if next.same_tables(&g) {
                return g;
            }
            g = next;
        }
        panic!("g did not stabilise");
    }

    #[test]
    fn homotopy_sign_convention() {
        let a = exterior();
        assert!(check_relations(&a, 3).passes());
        let id = OperationSystem::identity(a.space(), g1(), RingFlavor::Cy0, int(2));
        let mut h = OperationSystem::new(Role::Homotopy, a.space().clone(), a.space().clone(), g1(), RingFlavor::Cy0, int(2));
        h.set_entry_labels(e(0), &["x"], "1", int(1)).unwrap();
        h.set_entry_labels(e(0), &["xy"], "y", int(2)).unwrap();
        h.set_entry_labels(e(1), &["x", "y"], "1", int(-1)).unwrap();
        h.set_entry_labels(e(1), &[], "1", int(3)).unwrap();
        h.set_entry_labels(e(0), &["y", "xy"], "x", int(1)).unwrap();
        let g = solve_for_g(&h, &id, &a, HomotopySign::Koszul, 3);
        assert!(!g.same_tables(&id));
        assert!(check_morphism(&g, &a, &a, 3).unwrap().passes(), "Koszul convention");
        assert!(check_homotopy(&h, &id, &g, &a, &a, 3).unwrap().passes());
        let g2 = solve_for_g(&h, &id, &a, HomotopySign::Unsigned, 3);
        assert!(!check_morphism(&g2, &a, &a, 3).unwrap().passes(), "unsigned convention");
    }
}
