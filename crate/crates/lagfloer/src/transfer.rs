//! Planar rooted trees and the tree-sum constructions built on them:
//! filtered minimal models, explicit homotopy inverses of strict
//! surjective quasi-isomorphisms, and the assembly of `A_{N,0}` operations
//! from filtered geometric data.
//!
//! All three constructions share one memoised engine. Writing `V(ℓ, β)`
//! for the sum over decorated trees with `ℓ` leaves and total energy `β`,
//! evaluated up to (but not including) the root edge,
//!
//! `V(ℓ, β) = Σ_{vertex (n, β_v)} m_n^{β_v}(X_1, …, X_n)`,
//!
//! where each `X_j` is either a leaf edge or `E ∘ V(ℓ_j, β_j)` for the
//! internal-edge operator `E`. A vertex with one child needs `β_v ≠ 0`,
//! which is the `m_1 − m_1^{0,0}` rule. Every subtree operator `E ∘ V` has
//! even degree, so no Koszul signs arise in the compositions.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};

use crate::ainfty::{boundaries, cycles, in_span, is_weak_homotopy_equiv};
use crate::gapped::EnergyMonoid;
use crate::gradedcore::{check_differential, plug, qvec_unit, GradedSpace, MultiMap, OperationSystem, QVec, Role, TableKey};
use crate::linalg::{self, Matrix};
use crate::novikov::Energy;
use crate::{Error, Rational, Result};

/// Which low-valence vertices a tree may carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TreeMode {
    /// Every internal vertex has at least two children.
    Strict,
    /// Vertices with zero or one child are allowed.
    Filtered,
}

impl TreeMode {
    pub fn tag(self) -> &'static str {
        match self {
            TreeMode::Strict => "strict",
            TreeMode::Filtered => "filtered",
        }
    }

    pub fn from_tag(tag: &str) -> Result<TreeMode> {
        match tag {
            "strict" => Ok(TreeMode::Strict),
            "filtered" => Ok(TreeMode::Filtered),
            other => Err(Error::InvalidInput(format!("unknown tree mode {other:?}"))),
        }
    }
}

/// A planar rooted tree; children are ordered anticlockwise from the root
/// edge, and internal vertices may carry an energy decoration.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PlanarTree {
    Leaf,
    Node {
        children: Vec<PlanarTree>,
        decoration: Option<Energy>,
    },
}

impl PlanarTree {
    pub fn node(children: Vec<PlanarTree>) -> PlanarTree {
        PlanarTree::Node {
            children,
            decoration: None,
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            PlanarTree::Leaf => 1,
            PlanarTree::Node { children, .. } => children.iter().map(|c| c.leaves()).sum(),
        }
    }

    /// Number of vertices, leaves included.
    pub fn size(&self) -> usize {
        match self {
            PlanarTree::Leaf => 1,
            PlanarTree::Node { children, .. } => 1 + children.iter().map(|c| c.size()).sum::<usize>(),
        }
    }

    pub fn internal_vertices(&self) -> usize {
        match self {
            PlanarTree::Leaf => 0,
            PlanarTree::Node { children, .. } => 1 + children.iter().map(|c| c.internal_vertices()).sum::<usize>(),
        }
    }

    /// Internal vertices with fewer than two children.
    pub fn low_valence(&self) -> usize {
        match self {
            PlanarTree::Leaf => 0,
            PlanarTree::Node { children, .. } => {
                usize::from(children.len() < 2) + children.iter().map(|c| c.low_valence()).sum::<usize>()
            }
        }
    }

    /// Bracket notation: `x` for a leaf, `( … )` for a vertex.
    pub fn bracket(&self) -> String {
        match self {
            PlanarTree::Leaf => "x".into(),
            PlanarTree::Node { children, .. } => {
                let inner: String = children.iter().map(|c| c.bracket()).collect();
                format!("({inner})")
            }
        }
    }

    /// Whether the decorations obey the mode: at least one internal
    /// vertex, strict valence in strict mode, and in filtered mode a
    /// `(0,0)`-decorated vertex needs two children.
    pub fn is_valid(&self, mode: TreeMode) -> bool {
        fn ok(t: &PlanarTree, mode: TreeMode) -> bool {
            match t {
                PlanarTree::Leaf => true,
                PlanarTree::Node { children, decoration } => {
                    let low = children.len() < 2;
                    let vertex_ok = match mode {
                        TreeMode::Strict => !low,
                        TreeMode::Filtered => !low || decoration.as_ref().is_none_or(|d| !d.is_zero()),
                    };
                    vertex_ok && children.iter().all(|c| ok(c, mode))
                }
            }
        }
        matches!(self, PlanarTree::Node { .. }) && ok(self, mode)
    }
}

impl fmt::Display for PlanarTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bracket())
    }
}

/// Subtrees (including bare leaves) with `k` leaves and exactly `b`
/// low-valence vertices.
fn subtrees(k: usize, b: usize, mode: TreeMode, memo: &mut HashMap<(usize, usize), Vec<PlanarTree>>) -> Vec<PlanarTree> {
    if let Some(v) = memo.get(&(k, b)) {
        return v.clone();
    }
    let mut out = Vec::new();
    if k == 1 && b == 0 {
        out.push(PlanarTree::Leaf);
    }
    out.extend(nodes(k, b, mode, memo));
    memo.insert((k, b), out.clone());
    out
}

/// Trees whose root is an internal vertex.
fn nodes(k: usize, b: usize, mode: TreeMode, memo: &mut HashMap<(usize, usize), Vec<PlanarTree>>) -> Vec<PlanarTree> {
    let mut out = Vec::new();
    if mode == TreeMode::Filtered && b >= 1 {
        // zero children
        if k == 0 && b == 1 {
            out.push(PlanarTree::node(Vec::new()));
        }
        // one child
        for c in subtrees(k, b - 1, mode, memo) {
            out.push(PlanarTree::node(vec![c]));
        }
    }
    // at least two children: the number of children with zero leaves is at
    // most the low-valence budget, so n ≤ k + b
    for n in 2..=(k + b) {
        sequences(n, k, b, mode, memo, &mut Vec::new(), &mut out);
    }
    out
}

fn sequences(
    n: usize,
    k: usize,
    b: usize,
    mode: TreeMode,
    memo: &mut HashMap<(usize, usize), Vec<PlanarTree>>,
    prefix: &mut Vec<PlanarTree>,
    out: &mut Vec<PlanarTree>,
) {
    if prefix.len() == n {
        if k == 0 && b == 0 {
            out.push(PlanarTree::node(prefix.clone()));
        }
        return;
    }
    let after = n - prefix.len() - 1;
    for kj in 0..=k {
        for bj in 0..=b {
            if (kj == 0 && bj == 0) || kj + bj + after > k + b {
                continue;
            }
            for c in subtrees(kj, bj, mode, memo) {
                prefix.push(c);
                sequences(n, k - kj, b - bj, mode, memo, prefix, out);
                prefix.pop();
            }
        }
    }
}

/// All planar rooted trees with `k` leaves and at least one internal
/// vertex. In filtered mode at most `low_valence_budget` vertices have
/// fewer than two children. Sorted by size, then bracket notation.
pub fn enumerate_trees(k: usize, mode: TreeMode, low_valence_budget: usize) -> Vec<PlanarTree> {
    let mut memo = HashMap::new();
    let budget = if mode == TreeMode::Strict { 0 } else { low_valence_budget };
    let mut out = Vec::new();
    for b in 0..=budget {
        out.extend(nodes(k, b, mode, &mut memo));
    }
    out.sort_by_cached_key(|t| (t.size(), t.bracket()));
    out
}

/// A decomposition `A = B ⊕ C ⊕ m_1^{0,0}(C)` with its contraction data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Splitting {
    /// The subspace `B` with its own basis.
    pub b_space: GradedSpace,
    /// The basis of `B` as vectors of `A`.
    pub b_vectors: Vec<QVec>,
    /// The basis of `C` as vectors of `A`.
    pub c_vectors: Vec<QVec>,
    /// `î : B → A`.
    pub inclusion: MultiMap,
    /// `Π_B : A → B`, with kernel `C ⊕ m_1^{0,0}(C)`.
    pub projection: MultiMap,
    /// `H : A → A` with `H(B) = H(C) = 0` and `H ∘ m_1^{0,0} = id` on `C`.
    pub homotopy: MultiMap,
}

fn differential_of(alg: &OperationSystem) -> Result<MultiMap> {
    let d = alg.table_or_zero(1, &Energy::zero());
    check_differential(alg.space(), &d)?;
    Ok(d)
}

/// The default splitting: `B` spans cohomology representatives taken
/// from the reduced kernel basis, `C` is chosen greedily among basis
/// vectors. Labels of `B` are those of the free columns.
pub fn splitting(alg: &OperationSystem) -> Result<Splitting> {
    let space = alg.space();
    let d = differential_of(alg)?;
    let mut b_vectors = Vec::new();
    let mut b_basis = Vec::new();
    for p in space.degree_set() {
        let rows = space.indices_of_degree(p);
        let bd = boundaries(space, &d, p);
        let mut chosen: Vec<QVec> = bd.clone();
        for z in cycles(space, &d, p) {
            if !in_span(&z, &chosen, &rows) {
                chosen.push(z.clone());
                let lead = *z.iter().rev().find(|(_, q)| q.is_one()).map(|(i, _)| i).unwrap_or_else(|| z.keys().next().unwrap());
                b_basis.push((space.label(lead).to_string(), p));
                b_vectors.push(z);
            }
        }
    }
    let b_space = GradedSpace::new(b_basis)?;
    let candidates: Vec<QVec> = (0..space.dim()).map(qvec_unit).collect();
    split_relative(space, &d, b_space, b_vectors, &candidates)
}

/// Completes a given subcomplex basis `b_vectors` (with `d(B) ⊂ B` and
/// `B ↪ A` a quasi-isomorphism) to a splitting, choosing `C` greedily from
/// `candidates` in order.
pub fn split_relative(
    space: &GradedSpace,
    d: &MultiMap,
    b_space: GradedSpace,
    b_vectors: Vec<QVec>,
    candidates: &[QVec],
) -> Result<Splitting> {
    let dim = space.dim();
    let all: Vec<usize> = (0..dim).collect();
    let mut span: Vec<QVec> = b_vectors.clone();
    let base_rank = linalg::rank(&columns(&span, &all));
    if base_rank != span.len() {
        return Err(Error::InvalidInput("B vectors are linearly dependent".into()));
    }
    let mut rank = base_rank;
    let mut c_vectors = Vec::new();
    for c in candidates {
        if rank == dim {
            break;
        }
        let dc = d.apply(c);
        let mut trial = span.clone();
        trial.push(c.clone());
        trial.push(dc.clone());
        let r = linalg::rank(&columns(&trial, &all));
        if r == rank + 2 {
            span = trial;
            rank = r;
            c_vectors.push(c.clone());
        }
    }
    if rank != dim {
        return Err(Error::InvalidInput(format!(
            "B ⊕ C ⊕ m_1(C) has dimension {rank} of {dim}; the inclusion of B is not a quasi-isomorphism"
        )));
    }
    let r = b_vectors.len();
    let s = c_vectors.len();
    // columns ordered B, C, m_1(C)
    let ordered: Vec<QVec> = b_vectors
        .iter()
        .cloned()
        .chain(c_vectors.iter().cloned())
        .chain(c_vectors.iter().map(|c| d.apply(c)))
        .collect();
    let inv = linalg::inverse(&columns(&ordered, &all)).expect("full rank");
    let mut projection = MultiMap::new(1);
    let mut homotopy = MultiMap::new(1);
    for i in 0..dim {
        for (j, coord) in (0..r).map(|j| (j, &inv.data[j][i])) {
            if !coord.is_zero() {
                projection.add_entry(vec![i], j, coord.clone());
            }
        }
        for j in 0..s {
            let coord = &inv.data[r + s + j][i];
            if !coord.is_zero() {
                homotopy.add_vec(vec![i], coord, &c_vectors[j]);
            }
        }
    }
    let inclusion = MultiMap::linear(&b_vectors);
    Ok(Splitting {
        b_space,
        b_vectors,
        c_vectors,
        inclusion,
        projection,
        homotopy,
    })
}

fn columns(vs: &[QVec], rows: &[usize]) -> Matrix<Rational> {
    let cols: Vec<Vec<Rational>> = vs
        .iter()
        .map(|v| rows.iter().map(|r| v.get(r).cloned().unwrap_or_else(Rational::zero)).collect())
        .collect();
    Matrix::from_columns(&cols, rows.len())
}

impl Splitting {
    /// Checks `id − ι Π = d H + H d`, `H(B) = 0`, `H(C) = 0` and `Π ι = id`.
    pub fn verify(&self, d: &MultiMap, dim: usize) -> bool {
        let iota_pi = self.projection.postcompose(&self.inclusion);
        let dh = self.homotopy.postcompose(d);
        let hd = d.postcompose(&self.homotopy);
        let mut lhs = MultiMap::identity(dim);
        lhs.add_scaled(&-Rational::one(), &iota_pi);
        let mut rhs = dh;
        rhs.add_scaled(&Rational::one(), &hd);
        let pi_iota = self.inclusion.postcompose(&self.projection);
        lhs == rhs
            && pi_iota == MultiMap::identity(self.b_space.dim())
            && self.b_vectors.iter().chain(&self.c_vectors).all(|v| self.homotopy.apply(v).is_empty())
    }
}

/// Solves for the internal-edge sums of one tree family.
struct TreeEngine<'a> {
    vertices: Vec<(usize, Energy, &'a MultiMap)>,
    leaf: &'a MultiMap,
    edge: &'a MultiMap,
    monoid: &'a EnergyMonoid,
    /// `V(ℓ, β)`, only nonzero entries.
    v: BTreeMap<TableKey, MultiMap>,
    /// `E ∘ V(ℓ, β)`, only nonzero entries.
    w: BTreeMap<TableKey, MultiMap>,
    guard: Option<&'a dyn Fn(usize, &Energy, &[&MultiMap]) -> Result<()>>,
}

impl<'a> TreeEngine<'a> {
    fn new(
        alg_tables: &'a BTreeMap<TableKey, MultiMap>,
        leaf: &'a MultiMap,
        edge: &'a MultiMap,
        monoid: &'a EnergyMonoid,
    ) -> Self {
        let vertices = alg_tables
            .iter()
            .filter(|((n, e), _)| !(e.is_zero() && *n < 2))
            .map(|((n, e), m)| (*n, e.clone(), m))
            .collect();
        TreeEngine {
            vertices,
            leaf,
            edge,
            monoid,
            v: BTreeMap::new(),
            w: BTreeMap::new(),
            guard: None,
        }
    }

    /// Computes `V` on all keys in the given order, which must list every
    /// key after all strictly smaller ones in `(λ, ℓ)`.
    fn run(&mut self, keys: &[TableKey]) -> Result<()> {
        for key in keys {
            let val = self.assemble(key)?;
            if !val.is_zero() {
                let w = val.postcompose(self.edge);
                if !w.is_zero() {
                    self.w.insert(key.clone(), w);
                }
                self.v.insert(key.clone(), val);
            }
        }
        Ok(())
    }

    fn assemble(&self, key: &TableKey) -> Result<MultiMap> {
        let (l, beta) = key;
        let mut total = MultiMap::new(*l);
        let children: Vec<(&TableKey, &MultiMap)> = self.w.iter().filter(|(k, _)| *k != key).collect();
        for (n, bv, table) in &self.vertices {
            let rem = beta.sub(bv);
            if rem.lambda < Rational::zero() || !self.monoid.contains(&rem) {
                continue;
            }
            let mut chosen: Vec<&MultiMap> = Vec::with_capacity(*n);
            self.distribute(*n, *l, &rem, &children, &mut chosen, &mut |chosen| {
                if let Some(g) = self.guard {
                    g(*n, bv, chosen)?;
                }
                let inners: Vec<Option<&MultiMap>> = chosen.iter().map(|m| Some(*m)).collect();
                let term = plug(table, &inners, None);
                total.add_scaled(&Rational::one(), &term);
                Ok(())
            })?;
        }
        Ok(total)
    }

    fn distribute<'b>(
        &'b self,
        slots: usize,
        leaves: usize,
        rem: &Energy,
        children: &[(&'b TableKey, &'b MultiMap)],
        chosen: &mut Vec<&'b MultiMap>,
        visit: &mut dyn FnMut(&[&'b MultiMap]) -> Result<()>,
    ) -> Result<()> {
        if chosen.len() == slots {
            if leaves == 0 && rem.is_zero() {
                visit(chosen)?;
            }
            return Ok(());
        }
        let left = slots - chosen.len();
        // a leaf edge
        if leaves >= 1 {
            chosen.push(self.leaf);
            self.distribute(slots, leaves - 1, rem, children, chosen, visit)?;
            chosen.pop();
        }
        for ((lj, bj), w) in children {
            if *lj > leaves {
                continue;
            }
            let r = rem.sub(bj);
            if r.lambda < Rational::zero() || !self.monoid.contains(&r) {
                continue;
            }
            if left == 1 && (*lj != leaves || !r.is_zero()) {
                continue;
            }
            chosen.push(w);
            self.distribute(slots, leaves - lj, &r, children, chosen, visit)?;
            chosen.pop();
        }
        Ok(())
    }
}

/// Budgeted keys ordered so that every key follows all keys it can
/// depend on in a tree sum.
fn engine_keys(monoid: &EnergyMonoid, cutoff: &Rational, level: i64) -> Vec<TableKey> {
    let mut keys = crate::ainfty::budget_keys(monoid, cutoff, level);
    keys.retain(|(k, e)| !(*k == 0 && e.is_zero()));
    keys.sort_by(|(k1, e1), (k2, e2)| (&e1.lambda, k1, e1.mu).cmp(&(&e2.lambda, k2, e2.mu)));
    keys
}

/// The filtered minimal model and the inclusion morphism, computed on all
/// keys with `‖β‖ + k − 1 ≤ N` and `λ ≤ E`.
pub fn minimal_model(alg: &OperationSystem, level: i64) -> Result<(OperationSystem, OperationSystem)> {
    let split = splitting(alg)?;
    minimal_model_with(alg, &split, level)
}

/// As [`minimal_model`] with a caller-chosen splitting.
pub fn minimal_model_with(alg: &OperationSystem, split: &Splitting, level: i64) -> Result<(OperationSystem, OperationSystem)> {
    if alg.role() != Role::Algebra {
        return Err(Error::RoleMismatch {
            expected: Role::Algebra.tag().into(),
            found: alg.role().tag().into(),
        });
    }
    let edge = split.homotopy.scaled(&-Rational::one());
    let keys = engine_keys(alg.monoid(), alg.cutoff(), level);
    let mut engine = TreeEngine::new(alg.tables(), &split.inclusion, &edge, alg.monoid());
    engine.run(&keys)?;
    let b = &split.b_space;
    let mut model = OperationSystem::algebra(b.clone(), alg.monoid().clone(), alg.flavor(), alg.cutoff().clone());
    let mut incl = OperationSystem::new(Role::Morphism, b.clone(), alg.space().clone(), alg.monoid().clone(), alg.flavor(), alg.cutoff().clone());
    let d = alg.table_or_zero(1, &Energy::zero());
    model.insert_table(1, Energy::zero(), split.inclusion.postcompose(&d).postcompose(&split.projection));
    incl.insert_table(1, Energy::zero(), split.inclusion.clone());
    for ((k, e), v) in &engine.v {
        model.insert_table(*k, e.clone(), v.postcompose(&split.projection));
    }
    for ((k, e), w) in &engine.w {
        incl.insert_table(*k, e.clone(), w.clone());
    }
    Ok((model, incl))
}

/// Explicit homotopy inverse `q : D → A` of a strict surjective weak
/// homotopy equivalence `p : A → D` whose linear part has energy zero.
pub fn homotopy_inverse_strict(p: &OperationSystem, a: &OperationSystem, d: &OperationSystem) -> Result<OperationSystem> {
    if p.role() != Role::Morphism {
        return Err(Error::RoleMismatch {
            expected: Role::Morphism.tag().into(),
            found: p.role().tag().into(),
        });
    }
    if p.tables().keys().any(|(k, e)| *k != 1 || !e.is_zero()) {
        return Err(Error::InvalidMorphism("p is not strict with an energy-zero linear part".into()));
    }
    let wqe = is_weak_homotopy_equiv(p, a, d)?;
    if !wqe.is_equivalence {
        return Err(Error::InvalidMorphism("p is not a weak homotopy equivalence".into()));
    }
    let p1 = p.linear_part();
    let sa = a.space();
    let sd = d.space();
    let all_a: Vec<usize> = (0..sa.dim()).collect();
    let all_d: Vec<usize> = (0..sd.dim()).collect();
    let pm = p1.matrix(&all_d, &all_a);
    if linalg::rank(&pm) != sd.dim() {
        return Err(Error::InvalidMorphism("p_1 is not surjective".into()));
    }
    let da = a.table_or_zero(1, &Energy::zero());
    let dd = d.table_or_zero(1, &Energy::zero());
    // kernel of p_1, degree by degree
    let mut kernel: Vec<QVec> = Vec::new();
    for deg in sa.degree_set() {
        let cols = sa.indices_of_degree(deg);
        let rows = sd.indices_of_degree(deg);
        for v in linalg::kernel(&p1.matrix(&rows, &cols)) {
            kernel.push(cols.iter().zip(v).filter(|(_, q)| !q.is_zero()).map(|(&i, q)| (i, q)).collect());
        }
    }
    // contraction of the acyclic complex Ker p_1
    let kspace = GradedSpace::new(kernel.iter().enumerate().map(|(j, v)| (format!("k{j}"), sa.degree(*v.keys().next().unwrap())))).unwrap();
    let kinc = MultiMap::linear(&kernel);
    let kcoords = |v: &QVec| -> QVec {
        let x = crate::ainfty::solve_in_span(v, &kernel, &all_a).expect("vector lies in the kernel");
        x.into_iter().enumerate().filter(|(_, q)| !q.is_zero()).collect()
    };
    let mut dk = MultiMap::new(1);
    for (j, v) in kernel.iter().enumerate() {
        dk.add_vec(vec![j], &Rational::one(), &kcoords(&da.apply(v)));
    }
    let kcands: Vec<QVec> = (0..kernel.len()).map(qvec_unit).collect();
    let ksplit = split_relative(&kspace, &dk, GradedSpace::zero(), Vec::new(), &kcands)?;
    // a linear section σ of p_1, then the chain section s = σ − h δ
    let mut sigma: Vec<QVec> = Vec::new();
    for j in 0..sd.dim() {
        let target: Vec<Rational> = all_d.iter().map(|&r| if r == j { Rational::one() } else { Rational::zero() }).collect();
        let deg = sd.degree(j);
        let cols = sa.indices_of_degree(deg);
        let x = linalg::solve(&p1.matrix(&all_d, &cols), &target).expect("p_1 is surjective");
        sigma.push(cols.iter().zip(x).filter(|(_, q)| !q.is_zero()).map(|(&i, q)| (i, q)).collect());
    }
    let sigma_map = MultiMap::linear(&sigma);
    let mut section = Vec::new();
    for j in 0..sd.dim() {
        let dsig = da.apply(&sigma[j]);
        let sig_o = sigma_map.apply(&dd.apply(&qvec_unit(j)));
        let delta = crate::gradedcore::qvec_sub(&dsig, &sig_o);
        let corr = kinc.apply(&ksplit.homotopy.apply(&kcoords(&delta)));
        section.push(crate::gradedcore::qvec_sub(&sigma[j], &corr));
    }
    let c_candidates: Vec<QVec> = ksplit.c_vectors.iter().map(|c| kinc.apply(c)).collect();
    let split = split_relative(sa, &da, sd.clone(), section, &c_candidates)?;
    let (_, incl) = minimal_model_with(a, &split, crate::gapped::full_level(a).max(crate::gapped::full_level(d)).max(1))?;
    // (p_1|B)^{-1} is the identity in these coordinates: B is labelled by D.
    let mut q = incl.clone();
    q = q.with_role(Role::Morphism);
    Ok(q)
}

/// Filtered geometric data: operations on `QX_{N'}`, a filtration level
/// for each basis element, and the level up to which the data is defined.
#[derive(Clone, Debug)]
pub struct GeoData {
    pub tables: OperationSystem,
    pub levels: Vec<i64>,
    pub data_level: i64,
}

impl GeoData {
    /// Budget of an input tuple at energy `β`: `Σ i_j + ‖β‖ + k − 1`.
    pub fn budget(&self, inputs: &[usize], e: &Energy) -> Result<i64> {
        let n = self.tables.monoid().norm(e)?;
        Ok(inputs.iter().map(|&i| self.levels[i]).sum::<i64>() + n + inputs.len() as i64 - 1)
    }

    /// Every stored output must lie in the filtration level of its budget.
    pub fn validate(&self) -> Result<()> {
        if self.levels.len() != self.tables.space().dim() {
            return Err(Error::InvalidInput("one filtration level per basis element is required".into()));
        }
        for ((k, e), t) in self.tables.tables() {
            for (ins, v) in t.entries() {
                let budget = self.budget(ins, e)?;
                let labels = || ins.iter().map(|&i| self.tables.space().label(i)).collect::<Vec<_>>().join(",");
                if budget > self.data_level {
                    return Err(Error::InconsistentPresentation(format!(
                        "entry k={k} {e} on ({}) lies outside the declared data level {}",
                        labels(),
                        self.data_level
                    )));
                }
                if let Some(o) = v.keys().find(|&&o| self.levels[o] > budget) {
                    return Err(Error::InconsistentPresentation(format!(
                        "entry k={k} {e} on ({}) has output {} at level {} above its budget {budget}",
                        labels(),
                        self.tables.space().label(*o),
                        self.levels[*o]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Splits `QX_{N'} = QX_N ⊕ A ⊕ ∂A` with `∂ = (−1)^n m_{1,geo}^{0,0}`;
/// the returned `H` satisfies `H(∂a) = a`.
pub fn filtration_splitting(geo: &GeoData, level: i64, parity: i64) -> Result<Splitting> {
    let space = geo.tables.space();
    let sign = if parity.rem_euclid(2) == 1 { -Rational::one() } else { Rational::one() };
    let boundary = geo.tables.table_or_zero(1, &Energy::zero()).scaled(&sign);
    check_differential(space, &boundary)?;
    let low: Vec<usize> = (0..space.dim()).filter(|&i| geo.levels[i] <= level).collect();
    let b_space = space.sub(&low);
    let b_vectors: Vec<QVec> = low.iter().map(|&i| qvec_unit(i)).collect();
    for &i in &low {
        if boundary.image(&[i]).keys().any(|&o| geo.levels[o] > level) {
            return Err(Error::InconsistentPresentation(format!(
                "the boundary of {} leaves filtration level {level}",
                space.label(i)
            )));
        }
    }
    let candidates: Vec<QVec> = (0..space.dim()).filter(|&i| geo.levels[i] > level).map(qvec_unit).collect();
    split_relative(space, &boundary, b_space, b_vectors, &candidates)
}

/// Assembles the `A_{N,0}` operations on `QX_N` from geometric data by
/// tree sums: leaves carry the identity, the root `Π`, internal edges
/// `(−1)^{n+1} H` for the ambient dimension `n`, and vertices the stored
/// geometric operations; `m_1^{0,0}` is copied from the data.
pub fn ank_from_geometric(geo: &GeoData, split: &Splitting, level: i64, parity: i64) -> Result<OperationSystem> {
    let top = level * (level + 2);
    geo.validate()?;
    let sys = &geo.tables;
    if geo.data_level < top {
        let first = crate::ainfty::budget_keys(sys.monoid(), sys.cutoff(), top)
            .into_iter()
            .find(|(k, e)| sys.monoid().norm(e).unwrap() + *k as i64 - 1 > geo.data_level);
        let what = match first {
            Some((k, e)) => format!("key k={k} {e}"),
            None => "the top filtration level".to_string(),
        };
        return Err(Error::MissingData(format!(
            "geometric data defined up to level {} but level {top} is required; first absent {what}",
            geo.data_level
        )));
    }
    let sign = if parity.rem_euclid(2) == 1 { Rational::one() } else { -Rational::one() };
    let edge = split.homotopy.scaled(&sign);
    let levels = &geo.levels;
    let max_level = |m: &MultiMap| -> i64 { m.output_support().iter().map(|&o| levels[o]).max().unwrap_or(0) };
    let leaf_level = split.b_vectors.iter().flat_map(|v| v.keys()).map(|&i| levels[i]).max().unwrap_or(0);
    let guard = |n: usize, bv: &Energy, chosen: &[&MultiMap]| -> Result<()> {
        let norm = sys.monoid().norm(bv)?;
        let sum: i64 = chosen
            .iter()
            .map(|m| if std::ptr::eq(*m, &split.inclusion) { leaf_level } else { max_level(m) })
            .sum();
        if sum + norm + n as i64 - 1 > geo.data_level {
            return Err(Error::MissingData(format!(
                "vertex k={n} {bv} consulted on inputs of total level {sum}, beyond data level {}",
                geo.data_level
            )));
        }
        Ok(())
    };
    let keys = engine_keys(sys.monoid(), sys.cutoff(), level);
    let mut engine = TreeEngine::new(sys.tables(), &split.inclusion, &edge, sys.monoid());
    engine.guard = Some(&guard);
    engine.run(&keys)?;
    let mut out = OperationSystem::algebra(split.b_space.clone(), sys.monoid().clone(), sys.flavor(), sys.cutoff().clone());
    let d = sys.table_or_zero(1, &Energy::zero());
    out.insert_table(1, Energy::zero(), split.inclusion.postcompose(&d).postcompose(&split.projection));
    for ((k, e), v) in &engine.v {
        out.insert_table(*k, e.clone(), v.postcompose(&split.projection));
    }
    Ok(out)
}

/// Evaluates one decorated tree: leaves `leaf`, internal edges `edge`,
/// vertices the table of `alg` at `(children, decoration)`; the result is
/// the value entering the root edge. Undecorated vertices read energy 0.
pub fn evaluate_tree(tree: &PlanarTree, tables: &BTreeMap<TableKey, MultiMap>, leaf: &MultiMap, edge: &MultiMap) -> MultiMap {
    fn go(t: &PlanarTree, tables: &BTreeMap<TableKey, MultiMap>, leaf: &MultiMap, edge: &MultiMap, top: bool) -> MultiMap {
        match t {
            PlanarTree::Leaf => leaf.clone(),
            PlanarTree::Node { children, decoration } => {
                let e = decoration.clone().unwrap_or_else(Energy::zero);
                let Some(table) = tables.get(&(children.len(), e)) else {
                    return MultiMap::new(t.leaves());
                };
                let inner: Vec<MultiMap> = children.iter().map(|c| go(c, tables, leaf, edge, false)).collect();
                let refs: Vec<Option<&MultiMap>> = inner.iter().map(Some).collect();
                let v = plug(table, &refs, None);
                if top {
                    v
                } else {
                    v.postcompose(edge)
                }
            }
        }
    }
    go(tree, tables, leaf, edge, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ainfty::{check_morphism, check_relations, compose_morphisms};
    use crate::novikov::RingFlavor;
    use crate::int;

    fn e(l: i64) -> Energy {
        Energy::new(int(l), 0)
    }

    fn g1() -> EnergyMonoid {
        EnergyMonoid::new([e(1)]).unwrap()
    }

    #[test]
    fn strict_counts() {
        let counts: Vec<usize> = (0..=6).map(|k| enumerate_trees(k, TreeMode::Strict, 0).len()).collect();
        assert_eq!(counts, vec![0, 0, 1, 3, 11, 45, 197]);
    }

    #[test]
    fn filtered_small() {
        // one leaf with at most one low-valence vertex
        let t = enumerate_trees(1, TreeMode::Filtered, 1);
        assert_eq!(t.iter().map(|t| t.bracket()).collect::<Vec<_>>(), vec!["(x)", "(()x)", "(x())"]);
        // zero leaves, budget 1: ()
        assert_eq!(enumerate_trees(0, TreeMode::Filtered, 1).len(), 1);
        let t = enumerate_trees(2, TreeMode::Filtered, 1);
        assert!(t.iter().all(|t| t.low_valence() <= 1 && t.leaves() == 2));
        assert_eq!(t[0].bracket(), "(xx)");
    }

    #[test]
    fn enumeration_is_sorted_and_unique() {
        let t = enumerate_trees(4, TreeMode::Filtered, 2);
        let keys: Vec<(usize, String)> = t.iter().map(|t| (t.size(), t.bracket())).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(keys, sorted);
    }

    fn space_d(with_z: bool) -> OperationSystem {
        let mut basis = vec![("x", 0), ("y", 1)];
        if with_z {
            basis.push(("z", 0));
        }
        let s = GradedSpace::new(basis).unwrap();
        let mut a = OperationSystem::algebra(s, g1(), RingFlavor::Cy0, int(3));
        a.set_entry_labels(e(0), &["x"], "y", int(1)).unwrap();
        a
    }

    #[test]
    fn splitting_examples() {
        let s = GradedSpace::new([("x", 0), ("y", 1)]).unwrap();
        let zero = OperationSystem::algebra(s.clone(), g1(), RingFlavor::Cy0, int(1));
        let sp = splitting(&zero).unwrap();
        assert_eq!(sp.b_space.labels(), s.labels());
        assert!(sp.c_vectors.is_empty() && sp.homotopy.is_zero());

        let sp = splitting(&space_d(false)).unwrap();
        assert_eq!(sp.b_space.dim(), 0);
        assert_eq!(sp.c_vectors, vec![qvec_unit(0)]);
        assert_eq!(sp.homotopy.image(&[1]), qvec_unit(0));

        let a = space_d(true);
        let sp = splitting(&a).unwrap();
        assert_eq!(sp.b_space.labels(), &["z".to_string()]);
        assert_eq!(sp.c_vectors, vec![qvec_unit(0)]);
        assert_eq!(sp.homotopy.image(&[1]), qvec_unit(0));
        assert!(sp.verify(&a.table_or_zero(1, &Energy::zero()), 3));
    }

    #[test]
    fn splitting_with_several_contracted_pairs() {
        let s = GradedSpace::new([("a", -1), ("b", 0), ("c", 0), ("d", 1), ("z", 0)]).unwrap();
        let mut a = OperationSystem::algebra(s, g1(), RingFlavor::Cy0, int(2));
        a.set_entry_labels(e(0), &["a"], "b", int(1)).unwrap();
        a.set_entry_labels(e(0), &["c"], "d", int(2)).unwrap();
        a.set_entry_labels(e(0), &["z"], "d", int(1)).unwrap();
        let sp = splitting(&a).unwrap();
        assert_eq!(sp.c_vectors.len(), 2);
        assert!(sp.verify(&a.table_or_zero(1, &Energy::zero()), 5));
        assert_eq!(sp.homotopy.image(&[1]), qvec_unit(0));
    }

    #[test]
    fn minimal_model_of_minimal_algebra_is_itself() {
        let s = GradedSpace::new([("p", -1), ("q", -1), ("r", -1), ("s", 0)]).unwrap();
        let mut a = OperationSystem::algebra(s.clone(), g1(), RingFlavor::Cy0, int(2));
        a.set_entry_labels(e(0), &["p", "q"], "r", int(1)).unwrap();
        a.set_entry_labels(e(1), &["p"], "s", int(2)).unwrap();
        assert!(check_relations(&a, 3).passes());
        let (n, i) = minimal_model(&a, 3).unwrap();
        assert!(n.same_tables(&a));
        assert!(i.same_tables(&OperationSystem::identity(&s, g1(), RingFlavor::Cy0, int(2))));
    }

    #[test]
    fn curved_fixture_model_is_zero() {
        let mut a = space_d(true);
        a.set_entry_labels(e(1), &[], "y", int(1)).unwrap();
        let (n, i) = minimal_model(&a, 3).unwrap();
        assert_eq!(n.space().labels(), &["z".to_string()]);
        assert!(n.tables().is_empty());
        assert!(check_relations(&n, 3).passes());
        assert!(check_morphism(&i, &n, &a, 3).unwrap().passes());
        // i_0^{1,0} = −H(m_0) = −x
        assert_eq!(i.table(0, &e(1)).unwrap().image(&[]), crate::gradedcore::qvec_scale(&qvec_unit(0), &int(-1)));
    }

    #[test]
    fn acyclic_model_is_zero() {
        let a = space_d(false);
        let (n, i) = minimal_model(&a, 3).unwrap();
        assert_eq!(n.space().dim(), 0);
        assert!(i.tables().is_empty());
        assert!(check_morphism(&i, &n, &a, 3).unwrap().passes());
    }

    #[test]
    fn engine_matches_explicit_trees() {
        // curved algebra with a product, compared against explicit tree sums
        let s = GradedSpace::new([("x", 0), ("y", 1), ("z", 0), ("w", 1)]).unwrap();
        let mut a = OperationSystem::algebra(s.clone(), g1(), RingFlavor::Cy0, int(2));
        a.set_entry_labels(e(0), &["x"], "y", int(1)).unwrap();
        a.set_entry_labels(e(0), &["z", "z"], "y", int(1)).unwrap();
        a.set_entry_labels(e(1), &["z", "x"], "w", int(3)).unwrap();
        a.set_entry_labels(e(1), &["z"], "w", int(1)).unwrap();
        let sp = splitting(&a).unwrap();
        let edge = sp.homotopy.scaled(&-Rational::one());
        let keys = engine_keys(a.monoid(), a.cutoff(), 4);
        let mut engine = TreeEngine::new(a.tables(), &sp.inclusion, &edge, a.monoid());
        engine.run(&keys).unwrap();
        // explicit: all filtered trees with 3 leaves, ≤ 2 low-valence
        // vertices, decorations in {0, 1} summing to 1
        let mut explicit = MultiMap::new(3);
        for t in enumerate_trees(3, TreeMode::Filtered, 2) {
            for dec in decorations(&t, 1) {
                if dec.is_valid(TreeMode::Filtered) {
                    explicit.add_scaled(&Rational::one(), &evaluate_tree(&dec, a.tables(), &sp.inclusion, &edge));
                }
            }
        }
        assert_eq!(engine.v.get(&(3, e(1))).cloned().unwrap_or_else(|| MultiMap::new(3)), explicit);
        assert!(!explicit.is_zero());
    }

    /// All decorations with integer energies summing to `total`.
    fn decorations(t: &PlanarTree, total: i64) -> Vec<PlanarTree> {
        match t {
            PlanarTree::Leaf => {
                if total == 0 {
                    vec![PlanarTree::Leaf]
                } else {
                    vec![]
                }
            }
            PlanarTree::Node { children, .. } => {
                let mut out = Vec::new();
                for own in 0..=total {
                    let mut partial: Vec<(Vec<PlanarTree>, i64)> = vec![(vec![], total - own)];
                    for c in children {
                        let mut next = Vec::new();
                        for (pre, left) in &partial {
                            for used in 0..=*left {
                                for d in decorations(c, used) {
                                    let mut p = pre.clone();
                                    p.push(d);
                                    next.push((p, left - used));
                                }
                            }
                        }
                        partial = next;
                    }
                    for (cs, left) in partial {
                        if left == 0 {
                            out.push(PlanarTree::Node {
                                children: cs,
                                decoration: Some(e(own)),
                            });
                        }
                    }
                }
                out
            }
        }
    }

    #[test]
    fn strict_inverse_of_projection() {
        let a = space_d(true);
        let d_space = GradedSpace::new([("z", 0)]).unwrap();
        let d = OperationSystem::algebra(d_space.clone(), g1(), RingFlavor::Cy0, int(3));
        let mut p1 = MultiMap::new(1);
        p1.add_entry(vec![2], 0, int(1));
        let p = crate::ainfty::strict_morphism(p1, a.space(), &d_space, g1(), RingFlavor::Cy0, int(3));
        let q = homotopy_inverse_strict(&p, &a, &d).unwrap();
        let mut incl = MultiMap::new(1);
        incl.add_entry(vec![0], 2, int(1));
        assert_eq!(q.linear_part(), incl);
        let pq = compose_morphisms(&p, &q).unwrap();
        assert!(pq.same_tables(&OperationSystem::identity(&d_space, g1(), RingFlavor::Cy0, int(3))));
    }

    #[test]
    fn strict_inverse_of_identity() {
        let a = space_d(true);
        let id = OperationSystem::identity(a.space(), g1(), RingFlavor::Cy0, int(3));
        let q = homotopy_inverse_strict(&id, &a, &a).unwrap();
        assert!(q.same_tables(&id));
    }

    #[test]
    fn geometric_with_trivial_filtration_reproduces_input() {
        let mut a = space_d(true);
        a.set_entry_labels(e(1), &[], "y", int(1)).unwrap();
        let geo = GeoData {
            levels: vec![0; 3],
            tables: a.clone(),
            data_level: 8,
        };
        let sp = filtration_splitting(&geo, 2, 3).unwrap();
        assert!(sp.homotopy.is_zero());
        let out = ank_from_geometric(&geo, &sp, 2, 3).unwrap();
        assert!(out.same_tables(&crate::gapped::truncate_level(&a, 2)));
    }

    #[test]
    fn geometric_missing_data() {
        let a = space_d(true);
        let geo = GeoData {
            levels: vec![0; 3],
            tables: a,
            data_level: 3,
        };
        let sp = filtration_splitting(&geo, 2, 0).unwrap();
        assert!(matches!(ank_from_geometric(&geo, &sp, 2, 0), Err(Error::MissingData(_))));
    }

    /// Curved exterior algebra on `x, y` plus an acyclic pair `a ↦ b`,
    /// conjugated by a degree-preserving automorphism mixing everything.
    fn conjugated_exterior() -> OperationSystem {
        let s = GradedSpace::new([("1", -1), ("x", 0), ("y", 0), ("xy", 1), ("a", 0), ("b", 1)]).unwrap();
        let mut m = OperationSystem::algebra(s.clone(), g1(), RingFlavor::Cy0, int(2));
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
                    let sign = if s.degree(i).rem_euclid(2) == 1 { -1 } else { 1 };
                    m.set_entry(e(0), &[i, j], o, int(c * sign)).unwrap();
                }
            }
        }
        m.set_entry_labels(e(0), &["a"], "b", int(1)).unwrap();
        m.set_entry_labels(e(1), &[], "xy", int(1)).unwrap();
        // φ: a ↦ a + x, x ↦ x + 2a, b ↦ b + xy, xy ↦ xy + 2b, y ↦ y + a
        let mut phi = MultiMap::identity(6);
        phi.add_entry(vec![4], 1, int(1));
        phi.add_entry(vec![1], 4, int(2));
        phi.add_entry(vec![5], 3, int(1));
        phi.add_entry(vec![3], 5, int(2));
        phi.add_entry(vec![2], 4, int(1));
        let all: Vec<usize> = (0..6).collect();
        let inv = linalg::inverse(&phi.matrix(&all, &all)).unwrap();
        let cols: Vec<QVec> = (0..6).map(|j| crate::gradedcore::qvec_from_dense(&inv.column(j))).collect();
        let phi_inv = MultiMap::linear(&cols);
        let mut out = m.empty_like();
        for ((k, en), t) in m.tables() {
            out.insert_table(*k, en.clone(), t.precompose_all(&phi).postcompose(&phi_inv));
        }
        assert!(out.degree_violations().is_empty());
        out
    }

    #[test]
    fn conjugated_model_is_sound() {
        let a = conjugated_exterior();
        assert!(check_relations(&a, 4).passes());
        let (n, i) = minimal_model(&a, 4).unwrap();
        assert_eq!(n.space().dim(), 4);
        assert!(n.table(1, &Energy::zero()).is_none());
        let r = check_relations(&n, 4);
        assert!(r.passes(), "{:?}", r.failures.first());
        let r = check_morphism(&i, &n, &a, 4).unwrap();
        assert!(r.passes(), "{:?}", r.failures.first());
        assert!(n.max_arity() >= 2);
        assert!(i.max_arity() >= 2);
    }
}
