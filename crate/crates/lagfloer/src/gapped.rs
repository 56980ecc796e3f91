//! The discrete energy monoid `G ⊂ [0,∞)×Z`, its norm, gapped validation
//! and `A_{N,0}` truncation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, RwLock};

use num_traits::{Signed, ToPrimitive, Zero};

use crate::gradedcore::OperationSystem;
use crate::novikov::Energy;
use crate::{Error, Rational, Result};

/// Elements of `G` up to one energy bound, with their maximal
/// decomposition lengths.
#[derive(Debug)]
pub struct MonoidTable {
    pub elements: Vec<Energy>,
    lengths: BTreeMap<Energy, i64>,
}

impl MonoidTable {
    pub fn contains(&self, e: &Energy) -> bool {
        self.lengths.contains_key(e)
    }

    /// The largest `d` with `e` a sum of `d` nonzero elements of `G`.
    pub fn length(&self, e: &Energy) -> Option<i64> {
        self.lengths.get(e).copied()
    }
}

struct MonoidInner {
    generators: Vec<Energy>,
    lambda0: Option<Rational>,
    cache: RwLock<BTreeMap<Rational, Arc<MonoidTable>>>,
}

/// A finitely generated submonoid of `[0,∞)×Z` with `G ∩ ({0}×Z) = {(0,0)}`.
///
/// Cloning is cheap and clones share the enumeration cache.
#[derive(Clone)]
pub struct EnergyMonoid {
    inner: Arc<MonoidInner>,
}

impl fmt::Debug for EnergyMonoid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnergyMonoid")
            .field("generators", &self.inner.generators)
            .finish()
    }
}

impl PartialEq for EnergyMonoid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.generators == other.inner.generators
    }
}

impl Eq for EnergyMonoid {}

impl EnergyMonoid {
    /// Builds the monoid generated by `generators`.
    ///
    /// `(0,0)` entries are ignored and duplicates removed. A generator with
    /// `λ = 0, μ ≠ 0` or with `λ < 0` is a gapped violation.
    pub fn new<I: IntoIterator<Item = Energy>>(generators: I) -> Result<Self> {
        let mut set = BTreeSet::new();
        for g in generators {
            if g.lambda.is_negative() {
                return Err(Error::GappedViolation(format!("generator {g} has negative energy")));
            }
            if g.lambda.is_zero() && g.mu != 0 {
                return Err(Error::GappedViolation(format!(
                    "generator {g} has zero energy and nonzero Maslov power"
                )));
            }
            if !g.is_zero() {
                set.insert(g);
            }
        }
        let generators: Vec<Energy> = set.into_iter().collect();
        let lambda0 = generators.first().map(|g| g.lambda.clone());
        Ok(EnergyMonoid {
            inner: Arc::new(MonoidInner {
                generators,
                lambda0,
                cache: RwLock::new(BTreeMap::new()),
            }),
        })
    }

    /// The trivial monoid `{(0,0)}`.
    pub fn trivial() -> Self {
        Self::new([]).expect("no generators")
    }

    pub fn generators(&self) -> &[Energy] {
        &self.inner.generators
    }

    /// The minimal positive generator energy.
    pub fn lambda0(&self) -> Option<&Rational> {
        self.inner.lambda0.as_ref()
    }

    /// The monoid generated by these generators together with `extra`.
    pub fn extended<I: IntoIterator<Item = Energy>>(&self, extra: I) -> Result<Self> {
        Self::new(self.inner.generators.iter().cloned().chain(extra))
    }

    /// All elements with `λ ≤ bound`, computed once per bound.
    pub fn table(&self, bound: &Rational) -> Arc<MonoidTable> {
        if let Some(t) = self.inner.cache.read().expect("cache poisoned").get(bound) {
            return t.clone();
        }
        let table = Arc::new(self.build_table(bound));
        self.inner
            .cache
            .write()
            .expect("cache poisoned")
            .entry(bound.clone())
            .or_insert(table)
            .clone()
    }

    fn build_table(&self, bound: &Rational) -> MonoidTable {
        let mut lengths: BTreeMap<Energy, i64> = BTreeMap::new();
        if bound.is_negative() {
            return MonoidTable {
                elements: Vec::new(),
                lengths,
            };
        }
        let mut reached = BTreeSet::new();
        reached.insert(Energy::zero());
        let mut frontier = vec![Energy::zero()];
        while let Some(x) = frontier.pop() {
            for g in &self.inner.generators {
                let y = x.add(g);
                if &y.lambda <= bound && reached.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
        // Sorted by λ, so every x − g precedes x.
        for x in &reached {
            let best = self
                .inner
                .generators
                .iter()
                .filter_map(|g| lengths.get(&x.sub(g)).map(|d| d + 1))
                .max()
                .unwrap_or(0);
            lengths.insert(x.clone(), best);
        }
        MonoidTable {
            elements: reached.into_iter().collect(),
            lengths,
        }
    }

    pub fn contains(&self, e: &Energy) -> bool {
        if e.lambda.is_negative() {
            return false;
        }
        self.table(&e.lambda).contains(e)
    }

    /// `‖(λ,μ)‖ = max decomposition length + ⌊λ⌋`.
    pub fn norm(&self, e: &Energy) -> Result<i64> {
        if e.lambda.is_negative() {
            return Err(Error::NotInMonoid(e.to_string()));
        }
        let d = self
            .table(&e.lambda)
            .length(e)
            .ok_or_else(|| Error::NotInMonoid(e.to_string()))?;
        Ok(d + floor_i64(&e.lambda))
    }

    /// Whether the key `(k, β)` is admitted at level `N`:
    /// `‖β‖ + k − 1 ≤ N`.
    pub fn admits(&self, k: usize, e: &Energy, level: i64) -> bool {
        match self.norm(e) {
            Ok(n) => n + k as i64 - 1 <= level,
            Err(_) => false,
        }
    }
}

pub(crate) fn floor_i64(q: &Rational) -> i64 {
    q.floor()
        .to_integer()
        .to_i64()
        .expect("energy floor fits in i64")
}

/// All monoid elements with `λ ≤ bound`, sorted by `(λ, μ)`.
pub fn monoid_elements(g: &EnergyMonoid, bound: &Rational) -> Vec<Energy> {
    g.table(bound).elements.clone()
}

/// Free-function form of [`EnergyMonoid::norm`].
pub fn monoid_norm(g: &EnergyMonoid, e: &Energy) -> Result<i64> {
    g.norm(e)
}

/// Result of [`validate_gapped`]. Empty lists mean the condition holds.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GappedReport {
    /// Keys `(k, β)` with `β ∉ G`.
    pub keys_outside_monoid: Vec<(usize, Energy)>,
    /// Whether `m_0^{0,0} ≠ 0`.
    pub curvature_at_zero_energy: bool,
    /// Entries breaking the degree shift of the declared role.
    pub degree_violations: Vec<String>,
}

impl GappedReport {
    pub fn passes(&self) -> bool {
        self.keys_outside_monoid.is_empty()
            && !self.curvature_at_zero_energy
            && self.degree_violations.is_empty()
    }
}

/// Checks that every key lies in `G`, that `m_0^{0,0} = 0` and that all
/// entries honor the degree shift of the role.
pub fn validate_gapped(sys: &OperationSystem) -> GappedReport {
    let mut report = GappedReport::default();
    for ((k, e), table) in sys.tables() {
        if !sys.monoid().contains(e) {
            report.keys_outside_monoid.push((*k, e.clone()));
        }
        if *k == 0 && e.is_zero() && !table.is_zero() {
            report.curvature_at_zero_energy = true;
        }
    }
    report.degree_violations = sys.degree_violations();
    report
}

/// Keeps exactly the tables with `‖β‖ + k − 1 ≤ N`.
pub fn truncate_level(sys: &OperationSystem, level: i64) -> OperationSystem {
    let mut out = sys.empty_like();
    for ((k, e), table) in sys.tables() {
        if sys.monoid().admits(*k, e, level) {
            out.insert_table(*k, e.clone(), table.clone());
        }
    }
    out
}

/// The smallest level `N` admitting every stored key.
pub fn full_level(sys: &OperationSystem) -> i64 {
    sys.tables()
        .keys()
        .filter_map(|(k, e)| sys.monoid().norm(e).ok().map(|n| n + *k as i64 - 1))
        .max()
        .unwrap_or(0)
        .max(0)
}
