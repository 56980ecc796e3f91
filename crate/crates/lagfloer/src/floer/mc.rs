//! Twisting by a bounding cochain, the Maurer–Cartan sum and its greedy
//! solver, and the gauge action of self-morphisms on bounding cochains.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::gapped::monoid_elements;
use crate::gradedcore::{apply_operation, plug, qvec_dense, qvec_from_dense, MultiMap, NVec, OperationSystem, QVec, Role, TableKey};
use crate::linalg::solve;
use crate::novikov::Energy;
use crate::{Error, Rational, Result};

/// Checks that `b` is a degree-0 element of positive valuation over the
/// ring of `sys`, written in the source space of `sys`.
pub(crate) fn check_cochain(sys: &OperationSystem, b: &NVec) -> Result<()> {
    if b.flavor() != sys.flavor() || b.cutoff() != sys.cutoff() {
        return Err(Error::IncompatibleRing(format!(
            "cochain over ({}, {}) for a system over ({}, {})",
            b.flavor(),
            b.cutoff(),
            sys.flavor(),
            sys.cutoff()
        )));
    }
    let space = sys.source();
    for (e, v) in b.components() {
        if !e.lambda.is_positive() {
            return Err(Error::DivergentTwist(format!(
                "component at energy {e} has nonpositive valuation"
            )));
        }
        for i in v.keys() {
            if *i >= space.dim() {
                return Err(Error::UnknownBasis(format!("index {i} outside a basis of size {}", space.dim())));
            }
            let deg = space.degree(*i) + 2 * e.mu;
            if deg != 0 {
                return Err(Error::DegreeViolation(format!(
                    "component T^{}e^{} {} has degree {deg}, expected 0",
                    e.lambda,
                    e.mu,
                    space.label(*i)
                )));
            }
        }
    }
    Ok(())
}

/// All tables obtained from `sys` by filling any subset of slots with
/// energy components of `b`, keyed by the number of remaining slots.
fn inserted_tables(sys: &OperationSystem, b: &NVec, keep: &dyn Fn(usize) -> bool) -> BTreeMap<TableKey, MultiMap> {
    let comps: Vec<(Energy, MultiMap)> = b
        .components()
        .iter()
        .map(|(e, v)| (e.clone(), MultiMap::constant(v.clone())))
        .collect();
    let mut out: BTreeMap<TableKey, MultiMap> = BTreeMap::new();
    for ((k, beta), table) in sys.tables() {
        let mut choice: Vec<Option<usize>> = Vec::with_capacity(*k);
        fill_slots(*k, table, &comps, beta.clone(), 0, sys.cutoff(), keep, &mut choice, &mut out);
    }
    out.retain(|_, m| !m.is_zero());
    out
}

#[allow(clippy::too_many_arguments)]
fn fill_slots(
    k: usize,
    table: &MultiMap,
    comps: &[(Energy, MultiMap)],
    energy: Energy,
    free: usize,
    cutoff: &Rational,
    keep: &dyn Fn(usize) -> bool,
    choice: &mut Vec<Option<usize>>,
    out: &mut BTreeMap<TableKey, MultiMap>,
) {
    if &energy.lambda > cutoff {
        return;
    }
    if choice.len() == k {
        if keep(free) {
            let inners: Vec<Option<&MultiMap>> = choice.iter().map(|c| c.map(|i| &comps[i].1)).collect();
            let m = plug(table, &inners, None);
            out.entry((free, energy))
                .or_insert_with(|| MultiMap::new(free))
                .add_scaled(&Rational::from_integer(1.into()), &m);
        }
        return;
    }
    choice.push(None);
    fill_slots(k, table, comps, energy.clone(), free + 1, cutoff, keep, choice, out);
    choice.pop();
    for (i, (e, _)) in comps.iter().enumerate() {
        choice.push(Some(i));
        fill_slots(k, table, comps, energy.add(e), free, cutoff, keep, choice, out);
        choice.pop();
    }
}

fn expect_algebra(alg: &OperationSystem) -> Result<()> {
    if alg.role() != Role::Algebra {
        return Err(Error::RoleMismatch {
            expected: Role::Algebra.to_string(),
            found: alg.role().to_string(),
        });
    }
    Ok(())
}

fn extended_system(sys: &OperationSystem, b: &NVec, tables: BTreeMap<TableKey, MultiMap>) -> Result<OperationSystem> {
    let monoid = sys.monoid().extended(b.components().keys().cloned())?;
    let mut out = OperationSystem::new(
        sys.role(),
        sys.source().clone(),
        sys.target().clone(),
        monoid,
        sys.flavor(),
        sys.cutoff().clone(),
    );
    for ((k, e), t) in tables {
        out.insert_table(k, e, t);
    }
    Ok(out)
}

/// The twisted operations `m_k^b(x_1,…,x_k) = Σ m(b,…,b,x_1,b,…,b,x_k,b,…,b)`
/// with `b` inserted in every gap, keeping arities up to `max_arity`.
///
/// The energy monoid is extended by the energies of `b`.
pub fn twist_arities(alg: &OperationSystem, b: &NVec, max_arity: Option<usize>) -> Result<OperationSystem> {
    expect_algebra(alg)?;
    check_cochain(alg, b)?;
    let keep = move |f: usize| max_arity.is_none_or(|m| f <= m);
    let tables = inserted_tables(alg, b, &keep);
    extended_system(alg, b, tables)
}

/// The twisted algebra `(A, m^b)`.
pub fn twist(alg: &OperationSystem, b: &NVec) -> Result<OperationSystem> {
    twist_arities(alg, b, None)
}

/// The Maurer–Cartan sum `Σ_k m_k(b,…,b)` and whether it vanishes modulo
/// `F^{>E}`. Computed by direct evaluation, independently of [`twist`].
pub fn mc_residual(alg: &OperationSystem, b: &NVec) -> Result<(NVec, bool)> {
    expect_algebra(alg)?;
    check_cochain(alg, b)?;
    let mut sum = NVec::zero(alg.flavor(), alg.cutoff().clone());
    for k in 0..=alg.max_arity() {
        let inputs = vec![b.clone(); k];
        sum = sum.add(&apply_operation(alg, &inputs)?)?;
    }
    let ok = sum.is_zero();
    Ok((sum, ok))
}

/// The twisted algebra, the original algebra over the extended monoid, and
/// the morphism `f = (f_0 = b, f_1 = id)` from the first to the second.
pub fn twist_morphism(alg: &OperationSystem, b: &NVec) -> Result<(OperationSystem, OperationSystem, OperationSystem)> {
    let mb = twist(alg, b)?;
    let m_ext = alg.with_monoid(mb.monoid().clone());
    let mut f = OperationSystem::identity(alg.space(), mb.monoid().clone(), alg.flavor(), alg.cutoff().clone());
    for (e, v) in b.components() {
        f.insert_table(0, e.clone(), MultiMap::constant(v.clone()));
    }
    Ok((mb, m_ext, f))
}

/// A certified or uncertified solution of the Maurer–Cartan equation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundingCochain {
    pub b: NVec,
    /// Whether `Σ m_k(b,…,b) ≡ 0` was verified modulo `F^{>E}`.
    pub certified: bool,
}

/// The first energy at which the greedy solver could not cancel the
/// residual.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obstruction {
    pub energy: Energy,
    /// Full degree of the residual component, `1 − 2μ` in the internal
    /// grading.
    pub degree: i64,
    /// The uncancelled residual component; it represents a class in
    /// `H(A, m_1^{0,0})`.
    pub residual: QVec,
    /// The cochain built below this energy.
    pub partial: NVec,
    pub note: &'static str,
}

/// Outcome of [`mc_solve`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum McOutcome {
    Solved(BoundingCochain),
    Obstructed(Obstruction),
}

/// Explanation attached to every obstruction.
pub const GREEDY_NOTE: &str = "greedy failure does not prove nonexistence";

/// Solves `Σ m_k(b,…,b) = 0` energy by energy.
///
/// Monoid elements `β` with `0 < λ ≤ E` are visited in `(λ, μ)` order. At
/// each one the residual component `r_β` is cancelled by solving
/// `m_1^{0,0}(x) = −r_β` for `x` of degree `−2μ` and adding `T^λe^μ x` to
/// `b`. Higher terms cannot reach energy `β`, so earlier choices are final.
pub fn mc_solve(alg: &OperationSystem) -> Result<McOutcome> {
    expect_algebra(alg)?;
    if alg.table(0, &Energy::zero()).is_some_and(|t| !t.is_zero()) {
        return Err(Error::GappedViolation("m_0^{0,0} is nonzero".into()));
    }
    let space = alg.space();
    let d00 = alg.table_or_zero(1, &Energy::zero());
    let mut b = NVec::zero(alg.flavor(), alg.cutoff().clone());
    for beta in monoid_elements(alg.monoid(), alg.cutoff()) {
        if !beta.lambda.is_positive() {
            continue;
        }
        let (r, _) = mc_residual(alg, &b)?;
        let r_beta = r.component(&beta);
        if r_beta.is_empty() {
            continue;
        }
        let rows = space.indices_of_degree(1 - 2 * beta.mu);
        let cols = space.indices_of_degree(-2 * beta.mu);
        if r_beta.keys().any(|i| !rows.contains(i)) {
            return Err(Error::DegreeViolation(format!("residual at {beta} is not of degree 1")));
        }
        let m = d00.matrix(&rows, &cols);
        let dense = qvec_dense(&r_beta, space.dim());
        let rhs: Vec<Rational> = rows.iter().map(|&i| -dense[i].clone()).collect();
        match solve(&m, &rhs) {
            Some(x) => {
                let mut full = vec![Rational::zero(); space.dim()];
                for (pos, &j) in cols.iter().enumerate() {
                    full[j] = x[pos].clone();
                }
                let term = NVec::from_qvec(beta.clone(), qvec_from_dense(&full), alg.flavor(), alg.cutoff().clone())?;
                b = b.add(&term)?;
            }
            None => {
                return Ok(McOutcome::Obstructed(Obstruction {
                    degree: 1 - 2 * beta.mu,
                    energy: beta,
                    residual: r_beta,
                    partial: b,
                    note: GREEDY_NOTE,
                }));
            }
        }
    }
    let (_, certified) = mc_residual(alg, &b)?;
    Ok(McOutcome::Solved(BoundingCochain { b, certified }))
}

/// The gauge image `j·b` and the transport map `j_1^b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaugeResult {
    /// `j·b = Σ_k j_k(b,…,b)`.
    pub jb: NVec,
    /// `j_1^b(a) = Σ j(b,…,b,a,b,…,b)` as an arity-1 morphism system.
    pub transport: OperationSystem,
}

/// Applies a filtered morphism `j` to a cochain `b` of its source.
pub fn gauge_act(j: &OperationSystem, b: &NVec) -> Result<GaugeResult> {
    if j.role() != Role::Morphism {
        return Err(Error::RoleMismatch {
            expected: Role::Morphism.to_string(),
            found: j.role().to_string(),
        });
    }
    check_cochain(j, b)?;
    let mut jb = NVec::zero(j.flavor(), j.cutoff().clone());
    for k in 0..=j.max_arity() {
        let inputs = vec![b.clone(); k];
        jb = jb.add(&apply_operation(j, &inputs)?)?;
    }
    let tables = inserted_tables(j, b, &|f| f == 1);
    let transport = extended_system(j, b, tables)?;
    Ok(GaugeResult { jb, transport })
}

/// A basis vector on which `j_1^b ∘ n_1^b` and `n_1^{j·b} ∘ j_1^b` differ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransportWitness {
    pub basis: usize,
    pub lhs: NVec,
    pub rhs: NVec,
}

/// Checks `j_1^b ∘ n_1^b = n_1^{j·b} ∘ j_1^b` on every basis vector of the
/// source, returning the first failure.
pub fn check_gauge_transport(
    j: &OperationSystem,
    source: &OperationSystem,
    target: &OperationSystem,
    b: &NVec,
) -> Result<Option<TransportWitness>> {
    let g = gauge_act(j, b)?;
    let n_src = twist_arities(source, b, Some(1))?;
    let n_tgt = twist_arities(target, &g.jb, Some(1))?;
    for i in 0..source.space().dim() {
        let x = NVec::basis(i, source.flavor(), source.cutoff().clone());
        let lhs = apply_operation(&g.transport, &[apply_operation(&n_src, std::slice::from_ref(&x))?])?;
        let rhs = apply_operation(&n_tgt, &[apply_operation(&g.transport, &[x])?])?;
        if lhs != rhs {
            return Ok(Some(TransportWitness { basis: i, lhs, rhs }));
        }
    }
    Ok(None)
}
