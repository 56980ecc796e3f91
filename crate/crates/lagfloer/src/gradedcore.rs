//! Graded rational spaces with named bases and sparse multilinear tables.
//!
//! A [`MultiMap`] of arity `k` sends basis `k`-tuples to sparse rational
//! vectors; an [`OperationSystem`] is a family of such tables keyed by
//! arity and energy `(k, λ, μ)`, carrying a role (algebra, morphism or
//! homotopy) that fixes the degree of every entry.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::gapped::EnergyMonoid;
use crate::linalg::{self, Matrix};
use crate::novikov::{Energy, NovikovElement, RingFlavor};
use crate::{Error, Rational, Result};

/// A finite-dimensional graded space with an ordered, labelled basis.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GradedSpace {
    labels: Vec<String>,
    degrees: Vec<i64>,
    index: HashMap<String, usize>,
}

impl GradedSpace {
    pub fn new<S: Into<String>, I: IntoIterator<Item = (S, i64)>>(basis: I) -> Result<Self> {
        let mut space = GradedSpace::default();
        for (label, degree) in basis {
            let label = label.into();
            if space.index.contains_key(&label) {
                return Err(Error::DuplicateLabel(label));
            }
            space.index.insert(label.clone(), space.labels.len());
            space.labels.push(label);
            space.degrees.push(degree);
        }
        Ok(space)
    }

    /// The zero space.
    pub fn zero() -> Self {
        GradedSpace::default()
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn degree(&self, i: usize) -> i64 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[i64] {
        &self.degrees
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownBasis(label.to_string()))
    }

    /// Basis indices of degree `d`, in basis order.
    pub fn indices_of_degree(&self, d: i64) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.degrees[i] == d).collect()
    }

    /// The distinct degrees present, ascending.
    pub fn degree_set(&self) -> Vec<i64> {
        let mut ds = self.degrees.clone();
        ds.sort_unstable();
        ds.dedup();
        ds
    }

    /// The subspace spanned by the listed basis indices, in that order.
    pub fn sub(&self, indices: &[usize]) -> GradedSpace {
        GradedSpace::new(indices.iter().map(|&i| (self.labels[i].clone(), self.degrees[i])))
            .expect("labels of a space are distinct")
    }

    /// The direct sum; labels must be disjoint.
    pub fn direct_sum(&self, other: &GradedSpace) -> Result<GradedSpace> {
        GradedSpace::new(
            self.labels
                .iter()
                .cloned()
                .zip(self.degrees.iter().copied())
                .chain(other.labels.iter().cloned().zip(other.degrees.iter().copied())),
        )
        .map_err(|e| match e {
            Error::DuplicateLabel(l) => Error::LabelCollision(l),
            other => other,
        })
    }

    /// Renders a rational vector as `q*label + …`.
    pub fn fmt_qvec(&self, v: &QVec) -> String {
        if v.is_empty() {
            return "0".into();
        }
        v.iter()
            .map(|(i, q)| format!("{}*{}", q, self.labels[*i]))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// A sparse rational vector indexed by basis position.
pub type QVec = BTreeMap<usize, Rational>;

/// `acc += c · v`, pruning zeros.
pub fn qvec_axpy(acc: &mut QVec, c: &Rational, v: &QVec) {
    if c.is_zero() {
        return;
    }
    for (i, x) in v {
        add_coeff(acc, *i, c * x);
    }
}

pub(crate) fn add_coeff(acc: &mut QVec, i: usize, q: Rational) {
    if q.is_zero() {
        return;
    }
    let remove = {
        let slot = acc.entry(i).or_insert_with(Rational::zero);
        *slot += q;
        slot.is_zero()
    };
    if remove {
        acc.remove(&i);
    }
}

pub fn qvec_unit(i: usize) -> QVec {
    let mut v = QVec::new();
    v.insert(i, Rational::one());
    v
}

pub fn qvec_scale(v: &QVec, c: &Rational) -> QVec {
    let mut out = QVec::new();
    qvec_axpy(&mut out, c, v);
    out
}

pub fn qvec_sub(a: &QVec, b: &QVec) -> QVec {
    let mut out = a.clone();
    qvec_axpy(&mut out, &-Rational::one(), b);
    out
}

/// Dense form of a sparse vector.
pub fn qvec_dense(v: &QVec, dim: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); dim];
    for (i, q) in v {
        out[*i] = q.clone();
    }
    out
}

pub fn qvec_from_dense(v: &[Rational]) -> QVec {
    v.iter()
        .enumerate()
        .filter(|(_, q)| !q.is_zero())
        .map(|(i, q)| (i, q.clone()))
        .collect()
}

fn parity_sign(odd: bool) -> Rational {
    if odd {
        -Rational::one()
    } else {
        Rational::one()
    }
}

/// A sparse `Q`-multilinear map on basis tuples of fixed arity.
///
/// Arity 1 maps double as linear maps; arity 0 maps are single vectors.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MultiMap {
    arity: usize,
    entries: BTreeMap<Vec<usize>, QVec>,
}

impl MultiMap {
    pub fn new(arity: usize) -> Self {
        MultiMap {
            arity,
            entries: BTreeMap::new(),
        }
    }

    /// The constant (arity 0) map with value `v`.
    pub fn constant(v: QVec) -> Self {
        let mut m = MultiMap::new(0);
        m.add_vec(Vec::new(), &Rational::one(), &v);
        m
    }

    /// The identity on a space of dimension `dim`.
    pub fn identity(dim: usize) -> Self {
        let mut m = MultiMap::new(1);
        for i in 0..dim {
            m.add_entry(vec![i], i, Rational::one());
        }
        m
    }

    /// The linear map sending basis `j` to `columns[j]`.
    pub fn linear(columns: &[QVec]) -> Self {
        let mut m = MultiMap::new(1);
        for (j, c) in columns.iter().enumerate() {
            m.add_vec(vec![j], &Rational::one(), c);
        }
        m
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn entries(&self) -> &BTreeMap<Vec<usize>, QVec> {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, inputs: &[usize]) -> Option<&QVec> {
        self.entries.get(inputs)
    }

    /// The image of a basis tuple, zero if absent.
    pub fn image(&self, inputs: &[usize]) -> QVec {
        self.entries.get(inputs).cloned().unwrap_or_default()
    }

    pub fn add_entry(&mut self, inputs: Vec<usize>, output: usize, coeff: Rational) {
        self.add_vec(inputs, &coeff, &qvec_unit(output));
    }

    /// `self[inputs] += c · v`.
    pub fn add_vec(&mut self, inputs: Vec<usize>, c: &Rational, v: &QVec) {
        assert_eq!(inputs.len(), self.arity, "tuple of wrong length");
        if c.is_zero() || v.is_empty() {
            return;
        }
        let remove = {
            let slot = self.entries.entry(inputs.clone()).or_default();
            qvec_axpy(slot, c, v);
            slot.is_empty()
        };
        if remove {
            self.entries.remove(&inputs);
        }
    }

    /// `self += c · other`.
    pub fn add_scaled(&mut self, c: &Rational, other: &MultiMap) {
        assert_eq!(self.arity, other.arity, "arity mismatch");
        for (t, v) in &other.entries {
            self.add_vec(t.clone(), c, v);
        }
    }

    pub fn scaled(&self, c: &Rational) -> MultiMap {
        let mut out = MultiMap::new(self.arity);
        out.add_scaled(c, self);
        out
    }

    pub fn sub(&self, other: &MultiMap) -> MultiMap {
        let mut out = self.clone();
        out.add_scaled(&-Rational::one(), other);
        out
    }

    /// Multilinear evaluation on rational vectors.
    pub fn eval(&self, inputs: &[&QVec]) -> QVec {
        assert_eq!(inputs.len(), self.arity, "arity mismatch");
        let mut out = QVec::new();
        for (t, v) in &self.entries {
            let mut c = Rational::one();
            for (slot, &i) in t.iter().enumerate() {
                match inputs[slot].get(&i) {
                    Some(x) => c *= x,
                    None => {
                        c = Rational::zero();
                        break;
                    }
                }
            }
            qvec_axpy(&mut out, &c, v);
        }
        out
    }

    /// Linear evaluation (arity 1).
    pub fn apply(&self, v: &QVec) -> QVec {
        self.eval(&[v])
    }

    /// `L ∘ self` for a linear map `L`.
    pub fn postcompose(&self, l: &MultiMap) -> MultiMap {
        assert_eq!(l.arity, 1, "postcompose with a non-linear map");
        let mut out = MultiMap::new(self.arity);
        for (t, v) in &self.entries {
            let w = l.apply(v);
            out.add_vec(t.clone(), &Rational::one(), &w);
        }
        out
    }

    /// Precomposes every slot with the linear map `l`
    /// (whose source may differ from the current one).
    pub fn precompose_all(&self, l: &MultiMap) -> MultiMap {
        assert_eq!(l.arity, 1, "precompose with a non-linear map");
        let inners: Vec<Option<&MultiMap>> = vec![Some(l); self.arity];
        plug(self, &inners, None)
    }

    /// Indexes entries by output basis element: `out → [(tuple, coeff)]`.
    pub fn by_output(&self) -> HashMap<usize, Vec<(&[usize], &Rational)>> {
        let mut idx: HashMap<usize, Vec<(&[usize], &Rational)>> = HashMap::new();
        for (t, v) in &self.entries {
            for (o, q) in v {
                idx.entry(*o).or_default().push((t.as_slice(), q));
            }
        }
        idx
    }

    /// Basis indices appearing in some output.
    pub fn output_support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.entries.values().flat_map(|v| v.keys().copied()).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Keeps only entries whose every input passes `keep`.
    pub fn restrict_inputs(&self, keep: impl Fn(usize) -> bool) -> MultiMap {
        MultiMap {
            arity: self.arity,
            entries: self
                .entries
                .iter()
                .filter(|(t, _)| t.iter().all(|&i| keep(i)))
                .map(|(t, v)| (t.clone(), v.clone()))
                .collect(),
        }
    }

    /// Relabels inputs through `map` (old index → new index), dropping
    /// entries with an unmapped input.
    pub fn reindex_inputs(&self, map: &HashMap<usize, usize>) -> MultiMap {
        let mut out = MultiMap::new(self.arity);
        for (t, v) in &self.entries {
            let nt: Option<Vec<usize>> = t.iter().map(|i| map.get(i).copied()).collect();
            if let Some(nt) = nt {
                out.add_vec(nt, &Rational::one(), v);
            }
        }
        out
    }

    /// Relabels outputs through `map`, dropping unmapped components.
    pub fn reindex_outputs(&self, map: &HashMap<usize, usize>) -> MultiMap {
        let mut out = MultiMap::new(self.arity);
        for (t, v) in &self.entries {
            let nv: QVec = v
                .iter()
                .filter_map(|(i, q)| map.get(i).map(|j| (*j, q.clone())))
                .collect();
            out.add_vec(t.clone(), &Rational::one(), &nv);
        }
        out
    }

    /// The matrix of a linear map from the listed source indices to the
    /// listed target indices.
    pub fn matrix(&self, rows: &[usize], cols: &[usize]) -> Matrix<Rational> {
        assert_eq!(self.arity, 1, "matrix of a non-linear map");
        let pos: HashMap<usize, usize> = rows.iter().enumerate().map(|(r, &i)| (i, r)).collect();
        let mut m = Matrix::zeros(rows.len(), cols.len());
        for (c, &j) in cols.iter().enumerate() {
            if let Some(v) = self.entries.get(&vec![j]) {
                for (i, q) in v {
                    if let Some(&r) = pos.get(i) {
                        m.data[r][c] = q.clone();
                    }
                }
            }
        }
        m
    }
}

/// Composition of `outer` with one map per slot.
///
/// `inners[j] = None` leaves slot `j` as an input; `Some(g)` substitutes
/// `g`. The inputs of the result are the concatenated inputs of the slots.
/// With `sign = Some((p, degrees))` each output term carries
/// `(−1)^{Σ_{l<p} degrees[t_l]}` computed on the final tuple `t`.
pub fn plug(outer: &MultiMap, inners: &[Option<&MultiMap>], sign: Option<(usize, &[i64])>) -> MultiMap {
    assert_eq!(inners.len(), outer.arity, "one inner map per slot");
    let arity: usize = inners.iter().map(|g| g.map_or(1, |g| g.arity)).sum();
    let mut out = MultiMap::new(arity);
    if outer.is_zero() || inners.iter().any(|g| g.is_some_and(|g| g.is_zero())) {
        return out;
    }
    let indexes: Vec<Option<HashMap<usize, Vec<(&[usize], &Rational)>>>> =
        inners.iter().map(|g| g.map(|g| g.by_output())).collect();
    let mut tuple: Vec<usize> = Vec::with_capacity(arity);
    for (t, v) in &outer.entries {
        expand_slot(t, 0, &indexes, &mut tuple, &Rational::one(), v, sign, &mut out);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn expand_slot(
    t: &[usize],
    slot: usize,
    indexes: &[Option<HashMap<usize, Vec<(&[usize], &Rational)>>>],
    tuple: &mut Vec<usize>,
    coeff: &Rational,
    v: &QVec,
    sign: Option<(usize, &[i64])>,
    out: &mut MultiMap,
) {
    if slot == t.len() {
        let c = match sign {
            Some((p, degrees)) => {
                let s: i64 = tuple[..p].iter().map(|&i| degrees[i]).sum();
                coeff * parity_sign(s.rem_euclid(2) == 1)
            }
            None => coeff.clone(),
        };
        out.add_vec(tuple.clone(), &c, v);
        return;
    }
    match &indexes[slot] {
        None => {
            tuple.push(t[slot]);
            expand_slot(t, slot + 1, indexes, tuple, coeff, v, sign, out);
            tuple.pop();
        }
        Some(idx) => {
            if let Some(list) = idx.get(&t[slot]) {
                for (it, q) in list {
                    let n = tuple.len();
                    tuple.extend_from_slice(it);
                    let c = coeff * *q;
                    expand_slot(t, slot + 1, indexes, tuple, &c, v, sign, out);
                    tuple.truncate(n);
                }
            }
        }
    }
}

/// `outer ∘_i inner` with the A-infinity sign `(−1)^{Σ_{l<i} deg a_l}`.
pub fn compose_at(outer: &MultiMap, slot: usize, inner: &MultiMap, degrees: Option<&[i64]>) -> MultiMap {
    let mut inners: Vec<Option<&MultiMap>> = vec![None; outer.arity];
    inners[slot] = Some(inner);
    plug(outer, &inners, degrees.map(|d| (slot, d)))
}

/// The role of an operation family, fixing the degree of its entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Algebra,
    Morphism,
    Homotopy,
}

impl Role {
    /// Degree of the `(λ, μ)` component: `1−2μ`, `−2μ` or `−1−2μ`.
    pub fn shift(self, mu: i64) -> i64 {
        let base = match self {
            Role::Algebra => 1,
            Role::Morphism => 0,
            Role::Homotopy => -1,
        };
        base - 2 * mu
    }

    pub fn tag(self) -> &'static str {
        match self {
            Role::Algebra => "algebra",
            Role::Morphism => "morphism",
            Role::Homotopy => "homotopy",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Role> {
        match tag {
            "algebra" => Ok(Role::Algebra),
            "morphism" => Ok(Role::Morphism),
            "homotopy" => Ok(Role::Homotopy),
            other => Err(Error::InvalidInput(format!("unknown role {other:?}"))),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Key of a table: arity and energy.
pub type TableKey = (usize, Energy);

/// A family of tables `m_k^{λ,μ}` (or `f_k^{λ,μ}`, `H_k^{λ,μ}`) over a
/// Novikov ring with an energy cutoff.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperationSystem {
    role: Role,
    source: GradedSpace,
    target: GradedSpace,
    monoid: EnergyMonoid,
    flavor: RingFlavor,
    cutoff: Rational,
    tables: BTreeMap<TableKey, MultiMap>,
}

impl OperationSystem {
    pub fn new(
        role: Role,
        source: GradedSpace,
        target: GradedSpace,
        monoid: EnergyMonoid,
        flavor: RingFlavor,
        cutoff: Rational,
    ) -> Self {
        OperationSystem {
            role,
            source,
            target,
            monoid,
            flavor,
            cutoff,
            tables: BTreeMap::new(),
        }
    }

    pub fn algebra(space: GradedSpace, monoid: EnergyMonoid, flavor: RingFlavor, cutoff: Rational) -> Self {
        Self::new(Role::Algebra, space.clone(), space, monoid, flavor, cutoff)
    }

    /// The identity morphism of a space.
    pub fn identity(space: &GradedSpace, monoid: EnergyMonoid, flavor: RingFlavor, cutoff: Rational) -> Self {
        let mut f = Self::new(Role::Morphism, space.clone(), space.clone(), monoid, flavor, cutoff);
        f.insert_table(1, Energy::zero(), MultiMap::identity(space.dim()));
        f
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn source(&self) -> &GradedSpace {
        &self.source
    }

    pub fn target(&self) -> &GradedSpace {
        &self.target
    }

    /// The underlying space of an algebra.
    pub fn space(&self) -> &GradedSpace {
        &self.source
    }

    pub fn monoid(&self) -> &EnergyMonoid {
        &self.monoid
    }

    pub fn flavor(&self) -> RingFlavor {
        self.flavor
    }

    pub fn cutoff(&self) -> &Rational {
        &self.cutoff
    }

    pub fn tables(&self) -> &BTreeMap<TableKey, MultiMap> {
        &self.tables
    }

    pub fn table(&self, k: usize, e: &Energy) -> Option<&MultiMap> {
        self.tables.get(&(k, e.clone()))
    }

    /// The table at a key, or the zero table.
    pub fn table_or_zero(&self, k: usize, e: &Energy) -> MultiMap {
        self.table(k, e).cloned().unwrap_or_else(|| MultiMap::new(k))
    }

    /// A system with the same spaces, ring and monoid, and no tables.
    pub fn empty_like(&self) -> Self {
        Self::new(
            self.role,
            self.source.clone(),
            self.target.clone(),
            self.monoid.clone(),
            self.flavor,
            self.cutoff.clone(),
        )
    }

    /// A copy with another role, keeping the tables.
    pub fn with_role(&self, role: Role) -> Self {
        let mut out = self.clone();
        out.role = role;
        out
    }

    pub fn with_monoid(&self, monoid: EnergyMonoid) -> Self {
        let mut out = self.clone();
        out.monoid = monoid;
        out
    }

    /// A copy with a new cutoff; tables above it are dropped.
    pub fn with_cutoff(&self, cutoff: Rational) -> Self {
        let mut out = self.empty_like();
        out.cutoff = cutoff;
        for ((k, e), t) in &self.tables {
            out.insert_table(*k, e.clone(), t.clone());
        }
        out
    }

    /// The largest stored arity.
    pub fn max_arity(&self) -> usize {
        self.tables.keys().map(|(k, _)| *k).max().unwrap_or(0)
    }

    fn key_allowed(&self, e: &Energy) -> Result<bool> {
        if !self.flavor.allows_e() && e.mu != 0 {
            return Err(Error::FlavorViolation(format!(
                "key {e} has an e-power in ring {}",
                self.flavor
            )));
        }
        Ok(e.lambda <= self.cutoff)
    }

    /// Adds a table (summing into an existing one). Keys above the
    /// cutoff are dropped; zero tables are not stored.
    pub fn insert_table(&mut self, k: usize, e: Energy, table: MultiMap) {
        assert_eq!(table.arity(), k, "table arity must match its key");
        if e.lambda > self.cutoff || table.is_zero() {
            return;
        }
        let key = (k, e);
        let remove = {
            let slot = self.tables.entry(key.clone()).or_insert_with(|| MultiMap::new(k));
            slot.add_scaled(&Rational::one(), &table);
            slot.is_zero()
        };
        if remove {
            self.tables.remove(&key);
        }
    }

    /// Replaces the table at a key.
    pub fn set_table(&mut self, k: usize, e: Energy, table: MultiMap) {
        self.tables.remove(&(k, e.clone()));
        self.insert_table(k, e, table);
    }

    pub fn remove_table(&mut self, k: usize, e: &Energy) -> Option<MultiMap> {
        self.tables.remove(&(k, e.clone()))
    }

    /// Adds `coeff · output` at `inputs` of the `(k, e)` table, enforcing
    /// the role's degree shift and the flavor's `e`-constraint.
    pub fn set_entry(&mut self, e: Energy, inputs: &[usize], output: usize, coeff: Rational) -> Result<()> {
        self.check_indices(inputs, output)?;
        let expected: i64 =
            inputs.iter().map(|&i| self.source.degree(i)).sum::<i64>() + self.role.shift(e.mu);
        if self.target.degree(output) != expected {
            return Err(Error::DegreeViolation(format!(
                "{} entry {}({}) -> {} at {e}: output degree {} but the role requires {}",
                self.role,
                "m",
                inputs.iter().map(|&i| self.source.label(i)).collect::<Vec<_>>().join(","),
                self.target.label(output),
                self.target.degree(output),
                expected
            )));
        }
        self.set_entry_unchecked(e, inputs, output, coeff)
    }

    /// As [`Self::set_entry`] without the degree check, for building
    /// deliberately ill-graded inputs.
    pub fn set_entry_unchecked(&mut self, e: Energy, inputs: &[usize], output: usize, coeff: Rational) -> Result<()> {
        self.check_indices(inputs, output)?;
        if !self.key_allowed(&e)? {
            return Ok(());
        }
        let mut t = MultiMap::new(inputs.len());
        t.add_entry(inputs.to_vec(), output, coeff);
        self.insert_table(inputs.len(), e, t);
        Ok(())
    }

    /// Label-based form of [`Self::set_entry`].
    pub fn set_entry_labels(&mut self, e: Energy, inputs: &[&str], output: &str, coeff: Rational) -> Result<()> {
        let ins: Vec<usize> = inputs
            .iter()
            .map(|l| self.source.index_of(l))
            .collect::<Result<_>>()?;
        let out = self.target.index_of(output)?;
        self.set_entry(e, &ins, out, coeff)
    }

    fn check_indices(&self, inputs: &[usize], output: usize) -> Result<()> {
        if let Some(&bad) = inputs.iter().find(|&&i| i >= self.source.dim()) {
            return Err(Error::UnknownBasis(format!("input index {bad}")));
        }
        if output >= self.target.dim() {
            return Err(Error::UnknownBasis(format!("output index {output}")));
        }
        Ok(())
    }

    /// Every entry whose degree breaks the role's shift.
    pub fn degree_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for ((k, e), t) in &self.tables {
            for (ins, v) in t.entries() {
                let expected: i64 =
                    ins.iter().map(|&i| self.source.degree(i)).sum::<i64>() + self.role.shift(e.mu);
                for o in v.keys() {
                    if self.target.degree(*o) != expected {
                        out.push(format!(
                            "k={k} {e}: ({}) -> {} has degree {}, expected {}",
                            ins.iter().map(|&i| self.source.label(i)).collect::<Vec<_>>().join(","),
                            self.target.label(*o),
                            self.target.degree(*o),
                            expected
                        ));
                    }
                }
            }
        }
        out
    }

    /// Whether only the `(1, 0, 0)` table is present.
    pub fn is_strict_morphism(&self) -> bool {
        self.tables.keys().all(|(k, e)| *k == 1 && e.is_zero())
    }

    /// The `(1,0,0)` table.
    pub fn linear_part(&self) -> MultiMap {
        self.table_or_zero(1, &Energy::zero())
    }

    /// Termwise equality with another system of the same shape.
    pub fn same_tables(&self, other: &OperationSystem) -> bool {
        self.tables == other.tables
    }

    /// Keys where two systems differ, in key order.
    pub fn differing_keys(&self, other: &OperationSystem) -> Vec<TableKey> {
        let mut keys: Vec<TableKey> = self.tables.keys().chain(other.tables.keys()).cloned().collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .filter(|k| self.tables.get(k) != other.tables.get(k))
            .collect()
    }
}

/// A vector with Novikov coefficients, stored by energy component:
/// `v = Σ_β T^λ e^μ v_β` with rational `v_β`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NVec {
    flavor: RingFlavor,
    cutoff: Rational,
    comps: BTreeMap<Energy, QVec>,
}

impl NVec {
    pub fn zero(flavor: RingFlavor, cutoff: Rational) -> Self {
        NVec {
            flavor,
            cutoff,
            comps: BTreeMap::new(),
        }
    }

    /// `T^λ e^μ · v`.
    pub fn from_qvec(e: Energy, v: QVec, flavor: RingFlavor, cutoff: Rational) -> Result<Self> {
        let mut out = Self::zero(flavor, cutoff);
        out.check_energy(&e)?;
        out.add_component(e, &Rational::one(), &v);
        Ok(out)
    }

    /// The basis vector `e_i` with coefficient 1.
    pub fn basis(i: usize, flavor: RingFlavor, cutoff: Rational) -> Self {
        Self::from_qvec(Energy::zero(), qvec_unit(i), flavor, cutoff).expect("zero energy is allowed")
    }

    /// Builds `Σ_i a_i e_i` from Novikov coordinates.
    pub fn from_coords(coords: &BTreeMap<usize, NovikovElement>, flavor: RingFlavor, cutoff: Rational) -> Result<Self> {
        let mut out = Self::zero(flavor, cutoff);
        for (i, a) in coords {
            if a.flavor() != flavor {
                return Err(Error::IncompatibleRing(format!("coordinate in {} for a {flavor} vector", a.flavor())));
            }
            for (e, q) in a.terms() {
                out.check_energy(e)?;
                out.add_component(e.clone(), q, &qvec_unit(*i));
            }
        }
        Ok(out)
    }

    fn check_energy(&self, e: &Energy) -> Result<()> {
        if !self.flavor.allows_e() && e.mu != 0 {
            return Err(Error::FlavorViolation(format!("e-power {} in ring {}", e.mu, self.flavor)));
        }
        if self.flavor.nonneg() && e.lambda < Rational::zero() {
            return Err(Error::FlavorViolation(format!("negative energy {} in ring {}", e.lambda, self.flavor)));
        }
        Ok(())
    }

    pub(crate) fn add_component(&mut self, e: Energy, c: &Rational, v: &QVec) {
        if e.lambda > self.cutoff || c.is_zero() || v.is_empty() {
            return;
        }
        let remove = {
            let slot = self.comps.entry(e.clone()).or_default();
            qvec_axpy(slot, c, v);
            slot.is_empty()
        };
        if remove {
            self.comps.remove(&e);
        }
    }

    pub fn flavor(&self) -> RingFlavor {
        self.flavor
    }

    pub fn cutoff(&self) -> &Rational {
        &self.cutoff
    }

    pub fn components(&self) -> &BTreeMap<Energy, QVec> {
        &self.comps
    }

    pub fn component(&self, e: &Energy) -> QVec {
        self.comps.get(e).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    /// Coordinate `i` as a Novikov element.
    pub fn coord(&self, i: usize) -> NovikovElement {
        let terms = self
            .comps
            .iter()
            .filter_map(|(e, v)| v.get(&i).map(|q| (e.clone(), q.clone())));
        NovikovElement::from_terms(terms, self.flavor, self.cutoff.clone()).expect("components satisfy the flavor")
    }

    /// All nonzero coordinates.
    pub fn coords(&self) -> BTreeMap<usize, NovikovElement> {
        let mut idx: Vec<usize> = self.comps.values().flat_map(|v| v.keys().copied()).collect();
        idx.sort_unstable();
        idx.dedup();
        idx.into_iter().map(|i| (i, self.coord(i))).collect()
    }

    fn compatible(&self, other: &NVec) -> Result<()> {
        if self.flavor != other.flavor || self.cutoff != other.cutoff {
            return Err(Error::IncompatibleRing(format!(
                "vectors over ({}, {}) and ({}, {})",
                self.flavor, self.cutoff, other.flavor, other.cutoff
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &NVec) -> Result<NVec> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (e, v) in &other.comps {
            out.add_component(e.clone(), &Rational::one(), v);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &NVec) -> Result<NVec> {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> NVec {
        let mut out = Self::zero(self.flavor, self.cutoff.clone());
        for (e, v) in &self.comps {
            out.add_component(e.clone(), c, v);
        }
        out
    }

    /// Multiplication by a Novikov scalar.
    pub fn mul_scalar(&self, a: &NovikovElement) -> Result<NVec> {
        if a.flavor() != self.flavor || a.cutoff() != &self.cutoff {
            return Err(Error::IncompatibleRing("scalar from another ring".into()));
        }
        let mut out = Self::zero(self.flavor, self.cutoff.clone());
        for (ea, q) in a.terms() {
            for (e, v) in &self.comps {
                out.add_component(e.add(ea), q, v);
            }
        }
        Ok(out)
    }

    /// Multiplication by `T^λ e^μ`.
    pub fn shift(&self, by: &Energy) -> Result<NVec> {
        let mut out = Self::zero(self.flavor, self.cutoff.clone());
        for (e, v) in &self.comps {
            let ne = e.add(by);
            out.check_energy(&ne)?;
            out.add_component(ne, &Rational::one(), v);
        }
        Ok(out)
    }

    /// The same vector over another ring and cutoff.
    pub fn recast(&self, flavor: RingFlavor, cutoff: Rational) -> Result<NVec> {
        let mut out = Self::zero(flavor, cutoff);
        for (e, v) in &self.comps {
            out.check_energy(e)?;
            out.add_component(e.clone(), &Rational::one(), v);
        }
        Ok(out)
    }

    /// Minimal energy of a nonzero component.
    pub fn valuation(&self) -> Option<Rational> {
        self.comps.keys().map(|e| e.lambda.clone()).min()
    }

    /// Largest basis index used, for bounds checks.
    pub fn max_index(&self) -> Option<usize> {
        self.comps.values().filter_map(|v| v.keys().next_back().copied()).max()
    }

    /// Applies a rational linear map componentwise.
    pub fn map_linear(&self, l: &MultiMap) -> NVec {
        let mut out = Self::zero(self.flavor, self.cutoff.clone());
        for (e, v) in &self.comps {
            out.add_component(e.clone(), &Rational::one(), &l.apply(v));
        }
        out
    }

    /// Renders as `(coefficient)*label + …` using `space` labels.
    pub fn display(&self, space: &GradedSpace) -> String {
        let coords = self.coords();
        if coords.is_empty() {
            return "0".into();
        }
        coords
            .iter()
            .map(|(i, a)| format!("({})*{}", a, space.label(*i)))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// Evaluates `Σ_{(λ,μ)} T^λ e^μ m_k^{λ,μ}(x_1,…,x_k)` truncated at the
/// cutoff. An arity with no tables gives zero.
pub fn apply_operation(sys: &OperationSystem, inputs: &[NVec]) -> Result<NVec> {
    let k = inputs.len();
    for x in inputs {
        if x.flavor != sys.flavor || x.cutoff != sys.cutoff {
            return Err(Error::IncompatibleRing(format!(
                "input over ({}, {}) for a system over ({}, {})",
                x.flavor, x.cutoff, sys.flavor, sys.cutoff
            )));
        }
        if let Some(m) = x.max_index() {
            if m >= sys.source.dim() {
                return Err(Error::UnknownBasis(format!("index {m} outside a basis of size {}", sys.source.dim())));
            }
        }
    }
    let mut out = NVec::zero(sys.flavor, sys.cutoff.clone());
    let comps: Vec<Vec<(&Energy, &QVec)>> = inputs.iter().map(|x| x.comps.iter().collect()).collect();
    for ((kk, beta), table) in &sys.tables {
        if *kk != k {
            continue;
        }
        let mut picked: Vec<&QVec> = Vec::with_capacity(k);
        eval_components(table, &comps, beta.clone(), &mut picked, &sys.cutoff, &mut out);
    }
    Ok(out)
}

fn eval_components<'a>(
    table: &MultiMap,
    comps: &[Vec<(&'a Energy, &'a QVec)>],
    energy: Energy,
    picked: &mut Vec<&'a QVec>,
    cutoff: &Rational,
    out: &mut NVec,
) {
    if &energy.lambda > cutoff {
        return;
    }
    let slot = picked.len();
    if slot == comps.len() {
        let val = table.eval(picked);
        out.add_component(energy, &Rational::one(), &val);
        return;
    }
    for (e, v) in &comps[slot] {
        picked.push(v);
        eval_components(table, comps, energy.add(e), picked, cutoff, out);
        picked.pop();
    }
}

/// The defect tables of the A-infinity relation
/// `Σ (−1)^{Σ_{l<i} deg a_l} m_{k1}^{β1}(a_1,…,m_{k2}^{β2}(a_i,…),…)`,
/// for every key `(k, β)` accepted by `want`. Zero defects are omitted.
pub fn relation_defects<F>(alg: &OperationSystem, want: F) -> BTreeMap<TableKey, MultiMap>
where
    F: Fn(usize, &Energy) -> bool + Sync,
{
    let degrees = alg.source.degrees().to_vec();
    let tables: Vec<(&TableKey, &MultiMap)> = alg.tables.iter().collect();
    let partials: Vec<BTreeMap<TableKey, MultiMap>> = tables
        .par_iter()
        .filter(|((k1, _), _)| *k1 >= 1)
        .map(|((k1, b1), outer)| {
            let mut acc: BTreeMap<TableKey, MultiMap> = BTreeMap::new();
            for ((k2, b2), inner) in &tables {
                let k = k1 + k2 - 1;
                let b = b1.add(b2);
                if b.lambda > alg.cutoff || !want(k, &b) {
                    continue;
                }
                for slot in 0..*k1 {
                    let term = compose_at(outer, slot, inner, Some(&degrees));
                    if !term.is_zero() {
                        acc.entry((k, b.clone()))
                            .or_insert_with(|| MultiMap::new(k))
                            .add_scaled(&Rational::one(), &term);
                    }
                }
            }
            acc
        })
        .collect();
    let mut total: BTreeMap<TableKey, MultiMap> = BTreeMap::new();
    for part in partials {
        for (key, m) in part {
            total
                .entry(key.clone())
                .or_insert_with(|| MultiMap::new(key.0))
                .add_scaled(&Rational::one(), &m);
        }
    }
    total.retain(|_, m| !m.is_zero());
    total
}

/// The defect of the `(k, λ, μ)` relation; zero iff it holds.
pub fn relation_defect(alg: &OperationSystem, k: usize, e: &Energy) -> MultiMap {
    relation_defects(alg, |kk, ee| kk == k && ee == e)
        .remove(&(k, e.clone()))
        .unwrap_or_else(|| MultiMap::new(k))
}

/// Betti numbers of `(space, d)` by degree, omitting zeros.
///
/// `d` must have degree 1 and square to zero.
pub fn cohomology_ranks(space: &GradedSpace, d: &MultiMap) -> Result<BTreeMap<i64, usize>> {
    check_differential(space, d)?;
    let mut out = BTreeMap::new();
    for p in space.degree_set() {
        let r = betti(space, d, p);
        if r > 0 {
            out.insert(p, r);
        }
    }
    Ok(out)
}

/// Rank of `d: C^p → C^{p+1}`.
pub fn differential_rank(space: &GradedSpace, d: &MultiMap, p: i64) -> usize {
    let cols = space.indices_of_degree(p);
    let rows = space.indices_of_degree(p + 1);
    if cols.is_empty() || rows.is_empty() {
        return 0;
    }
    linalg::rank(&d.matrix(&rows, &cols))
}

fn betti(space: &GradedSpace, d: &MultiMap, p: i64) -> usize {
    space.indices_of_degree(p).len() - differential_rank(space, d, p) - differential_rank(space, d, p - 1)
}

/// Checks that `d` has degree 1 and `d∘d = 0`.
pub fn check_differential(space: &GradedSpace, d: &MultiMap) -> Result<()> {
    for (t, v) in d.entries() {
        for o in v.keys() {
            if space.degree(*o) != space.degree(t[0]) + 1 {
                return Err(Error::DegreeViolation(format!(
                    "differential sends {} to {}",
                    space.label(t[0]),
                    space.label(*o)
                )));
            }
        }
    }
    let dd = d.postcompose(d);
    if let Some((t, _)) = dd.entries().iter().next() {
        return Err(Error::NotAComplex(space.degree(t[0])));
    }
    Ok(())
}
