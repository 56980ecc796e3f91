//! Double points, presentations of immersed Lagrangians, the Whitney
//! sphere preset, and the rank criteria for bounding cochains.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::geomsign::eta_from_phases;
use crate::gradedcore::{GradedSpace, OperationSystem};
use crate::novikov::RingFlavor;
use crate::{int, rational, EnergyMonoid, Error, Rational, Result};

/// An ordered pair `(p_-, p_+)` of preimages of a transverse
/// self-intersection point, with its index data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DoublePoint {
    pub minus: String,
    pub plus: String,
    /// The index `η_{(p_-,p_+)}`.
    pub eta: i64,
    /// Orientation sign `ε_{(p_-,p_+)}`, stored as data.
    pub epsilon: Option<i8>,
    /// Phase data `(r⁻, r⁺)` with angles `r·π`.
    pub phases: Option<(Vec<Rational>, Vec<Rational>)>,
    /// Legendrian offset `a ∈ (0,1)`.
    pub a_value: Option<Rational>,
    /// Energy shift `c` used by rescaling.
    pub shift_c: Option<Rational>,
    /// Degree regrade `d` used by rescaling.
    pub regrade_d: Option<i64>,
}

impl DoublePoint {
    pub fn new(minus: impl Into<String>, plus: impl Into<String>, eta: i64) -> Self {
        DoublePoint {
            minus: minus.into(),
            plus: plus.into(),
            eta,
            epsilon: None,
            phases: None,
            a_value: None,
            shift_c: None,
            regrade_d: None,
        }
    }

    /// A double point with `η` computed from phase data.
    pub fn from_phases(
        minus: impl Into<String>,
        plus: impl Into<String>,
        n: usize,
        r_minus: Vec<Rational>,
        r_plus: Vec<Rational>,
    ) -> Result<Self> {
        let eta = eta_from_phases(n, &r_minus, &r_plus)?;
        let mut dp = Self::new(minus, plus, eta);
        dp.phases = Some((r_minus, r_plus));
        Ok(dp)
    }

    /// The generator label `(p_-,p_+)`.
    pub fn label(&self) -> String {
        format!("({},{})", self.minus, self.plus)
    }

    /// The label of the swapped pair.
    pub fn partner_label(&self) -> String {
        format!("({},{})", self.plus, self.minus)
    }

    /// The internal degree `η − 1` of the generator.
    pub fn degree(&self) -> i64 {
        self.eta - 1
    }
}

/// Checks the pairing invariants of a set of double points in dimension
/// `n`: partners present, `η + η' = n`, phases consistent with `η`,
/// `ε ε' = (−1)^{η(n−η)}`, and `a + a' = 1` with `a ∈ (0,1)` when offsets
/// are given.
pub fn validate_double_points(n: i64, dps: &[DoublePoint]) -> Result<()> {
    let mut by_label: BTreeMap<String, &DoublePoint> = BTreeMap::new();
    for dp in dps {
        if dp.minus == dp.plus {
            return Err(Error::InconsistentPresentation(format!("{} pairs a point with itself", dp.label())));
        }
        if by_label.insert(dp.label(), dp).is_some() {
            return Err(Error::DuplicateLabel(dp.label()));
        }
    }
    for dp in dps {
        let partner = by_label.get(&dp.partner_label()).ok_or_else(|| {
            Error::InconsistentPresentation(format!("{} has no partner {}", dp.label(), dp.partner_label()))
        })?;
        if dp.eta + partner.eta != n {
            return Err(Error::InconsistentPresentation(format!(
                "η{} + η{} = {} ≠ n = {n}",
                dp.label(),
                partner.label(),
                dp.eta + partner.eta
            )));
        }
        if let Some((rm, rp)) = &dp.phases {
            let n_usize = usize::try_from(n).map_err(|_| Error::InvalidInput(format!("dimension {n}")))?;
            let eta = eta_from_phases(n_usize, rm, rp)?;
            if eta != dp.eta {
                return Err(Error::InconsistentPresentation(format!(
                    "{}: phases give η = {eta}, record says {}",
                    dp.label(),
                    dp.eta
                )));
            }
        }
        match (dp.epsilon, partner.epsilon) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                let want = if (dp.eta * (n - dp.eta)).rem_euclid(2) == 0 { 1 } else { -1 };
                if a.abs() != 1 || b.abs() != 1 || a * b != want {
                    return Err(Error::InconsistentPresentation(format!(
                        "ε{} ε{} = {} but (−1)^(η(n−η)) = {want}",
                        dp.label(),
                        partner.label(),
                        a * b
                    )));
                }
            }
            _ => {
                return Err(Error::InconsistentPresentation(format!(
                    "ε given for only one of {} and {}",
                    dp.label(),
                    partner.label()
                )))
            }
        }
        check_a_pair(dp, partner)?;
    }
    Ok(())
}

pub(crate) fn check_a_pair(dp: &DoublePoint, partner: &DoublePoint) -> Result<()> {
    match (&dp.a_value, &partner.a_value) {
        (None, None) => Ok(()),
        (Some(a), Some(b)) => {
            let zero = int(0);
            let one = int(1);
            if a <= &zero || a >= &one {
                return Err(Error::InconsistentPresentation(format!("a{} = {a} is not in (0,1)", dp.label())));
            }
            if a + b != one {
                return Err(Error::InconsistentPresentation(format!(
                    "a{} + a{} = {} ≠ 1",
                    dp.label(),
                    partner.label(),
                    a + b
                )));
            }
            Ok(())
        }
        _ => Err(Error::InconsistentPresentation(format!(
            "a-value given for only one of {} and {}",
            dp.label(),
            partner.label()
        ))),
    }
}

/// A finite presentation of an immersed Lagrangian: homology ranks, double
/// points, and operations on the generators.
///
/// Generators are `H{k}_{j}` (the `j`-th class of `H_k(L)`) at degree
/// `n − k − 1`, ordered by `k`, followed by the double points in the given
/// order at degree `η − 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LagrangianPresentation {
    n: i64,
    homology: BTreeMap<i64, usize>,
    double_points: Vec<DoublePoint>,
    algebra: OperationSystem,
}

impl LagrangianPresentation {
    /// A presentation with no operations.
    pub fn new(
        n: i64,
        homology: BTreeMap<i64, usize>,
        double_points: Vec<DoublePoint>,
        flavor: RingFlavor,
        monoid: EnergyMonoid,
        cutoff: Rational,
    ) -> Result<Self> {
        validate_double_points(n, &double_points)?;
        if let Some((&k, _)) = homology.iter().find(|(&k, &r)| r > 0 && (k < 0 || k > n)) {
            return Err(Error::InconsistentPresentation(format!("homology in degree {k} outside 0..={n}")));
        }
        let space = Self::build_space(n, &homology, &double_points)?;
        let algebra = OperationSystem::algebra(space, monoid, flavor, cutoff);
        Ok(LagrangianPresentation {
            n,
            homology,
            double_points,
            algebra,
        })
    }

    fn build_space(n: i64, homology: &BTreeMap<i64, usize>, dps: &[DoublePoint]) -> Result<GradedSpace> {
        let mut basis: Vec<(String, i64)> = Vec::new();
        for (&k, &r) in homology {
            for j in 0..r {
                basis.push((format!("H{k}_{j}"), n - k - 1));
            }
        }
        for dp in dps {
            basis.push((dp.label(), dp.degree()));
        }
        GradedSpace::new(basis)
    }

    /// Replaces the operations. The algebra must live on the presentation's
    /// generator space.
    pub fn with_algebra(mut self, algebra: OperationSystem) -> Result<Self> {
        if algebra.space() != self.algebra.space() {
            return Err(Error::ChainMismatch(
                "algebra space differs from the presentation generators".into(),
            ));
        }
        self.algebra = algebra;
        Ok(self)
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn homology(&self) -> &BTreeMap<i64, usize> {
        &self.homology
    }

    /// The Betti number `b_k(L)`.
    pub fn betti(&self, k: i64) -> usize {
        self.homology.get(&k).copied().unwrap_or(0)
    }

    pub fn double_points(&self) -> &[DoublePoint] {
        &self.double_points
    }

    pub fn algebra(&self) -> &OperationSystem {
        &self.algebra
    }

    pub fn algebra_mut(&mut self) -> &mut OperationSystem {
        &mut self.algebra
    }

    pub fn space(&self) -> &GradedSpace {
        self.algebra.space()
    }

    /// `dim H^d` of the generator space, by internal degree.
    pub fn dims(&self) -> BTreeMap<i64, usize> {
        let mut out = BTreeMap::new();
        for &d in self.space().degrees() {
            *out.entry(d).or_insert(0) += 1;
        }
        out
    }
}

/// The Whitney sphere `S^n → C^n` with one transverse double point.
///
/// The phases are `r⁻ = (−1/4,…,−1/4)` and `r⁺ = (5/4, 1/4,…,1/4)`, giving
/// `η = n+1` and `−1`. The ring is `Λ⁰_CY` with cutoff 1 and no operations;
/// disc counts must be supplied separately.
pub fn whitney_preset(n: i64) -> Result<LagrangianPresentation> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("Whitney sphere needs n ≥ 2, got {n}")));
    }
    let nu = n as usize;
    let minus = vec![rational(-1, 4); nu];
    let mut plus = vec![rational(1, 4); nu];
    plus[0] = rational(5, 4);
    let a = DoublePoint::from_phases("p-", "p+", nu, minus.clone(), plus.clone())?;
    let b = DoublePoint::from_phases("p+", "p-", nu, plus, minus)?;
    assert_eq!(a.eta, n + 1, "Whitney index η(p-,p+)");
    assert_eq!(b.eta, -1, "Whitney index η(p+,p-)");
    let homology: BTreeMap<i64, usize> = [(0, 1), (n, 1)].into_iter().collect();
    LagrangianPresentation::new(n, homology, vec![a, b], RingFlavor::Cy0, EnergyMonoid::trivial(), int(1))
}

/// What the rank criteria conclude.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcConclusion {
    UniqueZero,
    EveryDegreeZero,
    ZeroIsBoundingCochain,
    ZeroOnlyCandidate,
    Inconclusive,
}

impl fmt::Display for BcConclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BcConclusion::UniqueZero => "unique bounding cochain: 0",
            BcConclusion::EveryDegreeZero => "every degree-0 element of positive valuation is a bounding cochain",
            BcConclusion::ZeroIsBoundingCochain => "0 is a bounding cochain",
            BcConclusion::ZeroOnlyCandidate => "0 is the only possible bounding cochain",
            BcConclusion::Inconclusive => "inconclusive",
        })
    }
}

/// The three rank criteria for bounding cochains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BcReport {
    /// `b_{n−2}(L) = 0` and no `η = 2`: every degree-0 `b` is a bounding
    /// cochain.
    pub every_degree0_is_bc: bool,
    /// `b_{n−1}(L) = 0` and no `η = 1`: there is nothing in degree 0.
    pub zero_is_only_candidate: bool,
    /// `L` exact and no `η = 2`: `0` is a bounding cochain.
    pub zero_is_bc: bool,
    pub conclusion: BcConclusion,
}

/// Evaluates the rank criteria on a graded presentation over `Λ_CY`.
pub fn bc_criteria(pres: &LagrangianPresentation, exact: bool) -> Result<BcReport> {
    let flavor = pres.algebra().flavor();
    if !matches!(flavor, RingFlavor::Cy | RingFlavor::Cy0) {
        return Err(Error::FlavorViolation(format!(
            "rank criteria need a Z-graded cy flavor, found {flavor}"
        )));
    }
    let n = pres.n();
    let etas: BTreeSet<i64> = pres.double_points().iter().map(|d| d.eta).collect();
    let every = pres.betti(n - 2) == 0 && !etas.contains(&2);
    let only = pres.betti(n - 1) == 0 && !etas.contains(&1);
    let zero = exact && !etas.contains(&2);
    let conclusion = if only && (every || zero) {
        BcConclusion::UniqueZero
    } else if every {
        BcConclusion::EveryDegreeZero
    } else if zero {
        BcConclusion::ZeroIsBoundingCochain
    } else if only {
        BcConclusion::ZeroOnlyCandidate
    } else {
        BcConclusion::Inconclusive
    };
    Ok(BcReport {
        every_degree0_is_bc: every,
        zero_is_only_candidate: only,
        zero_is_bc: zero,
        conclusion,
    })
}

/// Whether `dim H^d ≤ dim H^{d−1} + dim H^{d+1}` at every degree, a
/// necessary condition for a degree-1 differential with zero cohomology.
/// Returns the first failing degree otherwise.
pub fn acyclicity_feasible(dims: &BTreeMap<i64, usize>) -> (bool, Option<i64>) {
    let get = |d: i64| dims.get(&d).copied().unwrap_or(0);
    for (&d, &r) in dims {
        if r > get(d - 1) + get(d + 1) {
            return (false, Some(d));
        }
    }
    (true, None)
}
