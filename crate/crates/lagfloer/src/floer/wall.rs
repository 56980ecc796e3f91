//! Rescaling and regrading of double points, with wall detection, and
//! the integrality check for Legendrian lifts.
//!
//! Moving an immersion changes disc areas by `Σ_{i∈I} c_{α(i)}`. The map
//! `Ξ(p_-,p_+) = T^{-c} e^{-d} (p_-,p_+)` (identity on homology) then
//! intertwines the old and new operations, but only maps bounding cochains
//! to bounding cochains while the transported valuation stays positive.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{Signed, Zero};

use super::presentation::{check_a_pair, DoublePoint, LagrangianPresentation};
use crate::gradedcore::{apply_operation, qvec_unit, MultiMap, NVec, OperationSystem};
use crate::novikov::{Energy, RingFlavor};
use crate::{int, EnergyMonoid, Error, Rational, Result};

/// Outcome of a rescaling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RescaleReport {
    /// The new presentation, or `None` when the algebra itself crosses a
    /// wall.
    pub presentation: Option<LagrangianPresentation>,
    pub algebra_wall: bool,
    pub algebra_wall_reasons: Vec<String>,
    /// `Ξ(b)` over the field version of the ring, at the original cutoff.
    pub transported_b: Option<NVec>,
    /// The valuation `λ(t)` of `Ξ(b)`; `None` for `b = 0` or no `b`.
    pub lambda_t: Option<Rational>,
    /// `λ(t) ≤ 0`: `Ξ(b)` is no longer a bounding cochain.
    pub b_wall: bool,
    /// `m'_k(Ξh_1,…,Ξh_k) = Ξ m_k(h_1,…,h_k)` on every stored input tuple.
    pub intertwines: bool,
}

fn fract(x: &Rational) -> Rational {
    x - x.floor()
}

/// Applies `Ξ` to a vector, landing in `flavor` at `cutoff`.
fn xi_apply(v: &NVec, shifts: &[(Rational, i64)], flavor: RingFlavor, cutoff: Rational) -> Result<NVec> {
    let mut out = NVec::zero(flavor, cutoff.clone());
    for (e, comp) in v.components() {
        for (i, q) in comp {
            let (c, d) = &shifts[*i];
            let ne = Energy::new(&e.lambda - c, e.mu - d);
            let term = NVec::from_qvec(ne, qvec_unit(*i), flavor, cutoff.clone())?.scale(q);
            out = out.add(&term)?;
        }
    }
    Ok(out)
}

/// Rescales double-point energies by `c` and regrades them by `d`.
///
/// `params` maps double-point labels to `(c, d)`; absent labels get
/// `(0, 0)`. Both must be antisymmetric under swapping the pair, and
/// `d ≠ 0` needs a ring with `e`. A structure constant `(λ,μ)` with inputs
/// `x_1…x_k` and output `y` moves to
/// `(λ + Σ c_{x_i} − c_y, μ + Σ d_{x_i} − d_y)`, and each double point's
/// degree rises by `2d`.
pub fn rescale_regrade(
    pres: &LagrangianPresentation,
    params: &BTreeMap<String, (Rational, i64)>,
    b: Option<&NVec>,
) -> Result<RescaleReport> {
    let alg = pres.algebra();
    let space = pres.space();
    let flavor = alg.flavor();
    let cutoff = alg.cutoff().clone();
    for label in params.keys() {
        if !pres.double_points().iter().any(|dp| &dp.label() == label) {
            return Err(Error::UnknownBasis(format!("{label} is not a double point")));
        }
    }
    let zero = (Rational::zero(), 0i64);
    let param = |dp: &DoublePoint| params.get(&dp.label()).cloned().unwrap_or_else(|| zero.clone());
    for dp in pres.double_points() {
        let (c, d) = param(dp);
        let partner = pres
            .double_points()
            .iter()
            .find(|q| q.label() == dp.partner_label())
            .expect("validated presentation has partners");
        let (pc, pd) = param(partner);
        if !(&c + &pc).is_zero() {
            return Err(Error::Antisymmetry(format!(
                "c{} + c{} = {} ≠ 0",
                dp.label(),
                partner.label(),
                &c + &pc
            )));
        }
        if d + pd != 0 {
            return Err(Error::Antisymmetry(format!("d{} + d{} = {} ≠ 0", dp.label(), partner.label(), d + pd)));
        }
        if d != 0 && !flavor.allows_e() {
            return Err(Error::FlavorViolation(format!(
                "regrade d{} = {d} needs a ring with e, found {flavor}",
                dp.label()
            )));
        }
    }

    let mut shifts: Vec<(Rational, i64)> = vec![zero.clone(); space.dim()];
    for dp in pres.double_points() {
        shifts[space.index_of(&dp.label())?] = param(dp);
    }
    let max_c = shifts.iter().map(|(c, _)| c.abs()).max().unwrap_or_else(Rational::zero);

    // Transformed entries, keyed by the new energy.
    let mut moved: BTreeMap<(usize, Energy), MultiMap> = BTreeMap::new();
    let mut reasons = Vec::new();
    for ((k, e), t) in alg.tables() {
        for (ins, v) in t.entries() {
            for (o, q) in v {
                let lam = ins.iter().fold(e.lambda.clone(), |acc, i| acc + &shifts[*i].0) - &shifts[*o].0;
                let mu = ins.iter().map(|i| shifts[*i].1).sum::<i64>() + e.mu - shifts[*o].1;
                let ne = Energy::new(lam, mu);
                let names = || {
                    format!(
                        "m_{k}({}) -> {}",
                        ins.iter().map(|&i| space.label(i)).collect::<Vec<_>>().join(","),
                        space.label(*o)
                    )
                };
                if ne.lambda.is_negative() {
                    reasons.push(format!("{} moves from {e} to negative energy {ne}", names()));
                } else if ne.lambda.is_zero() && ne.mu != 0 {
                    reasons.push(format!("{} moves to {ne}, zero energy with an e-power", names()));
                } else if ne.is_zero() && *k == 0 {
                    reasons.push(format!("{} becomes a zero-energy curvature term", names()));
                }
                moved
                    .entry((*k, ne))
                    .or_insert_with(|| MultiMap::new(*k))
                    .add_entry(ins.clone(), *o, q.clone());
            }
        }
    }
    let algebra_wall = !reasons.is_empty();

    let presentation = if algebra_wall {
        None
    } else {
        let dps: Vec<DoublePoint> = pres
            .double_points()
            .iter()
            .map(|dp| {
                let (c, d) = param(dp);
                let mut out = dp.clone();
                out.eta += 2 * d;
                if d != 0 {
                    out.phases = None;
                }
                out.shift_c = Some(c);
                out.regrade_d = Some(d);
                out
            })
            .collect();
        let monoid = EnergyMonoid::new(
            alg.monoid()
                .generators()
                .iter()
                .cloned()
                .chain(moved.keys().map(|(_, e)| e.clone())),
        )?;
        let shell = LagrangianPresentation::new(pres.n(), pres.homology().clone(), dps, flavor, monoid, cutoff.clone())?;
        let mut new_alg = shell.algebra().empty_like();
        for ((k, e), t) in &moved {
            new_alg.insert_table(*k, e.clone(), t.clone());
        }
        debug_assert!(new_alg.degree_violations().is_empty(), "regrading preserves degrees");
        Some(shell.with_algebra(new_alg)?)
    };

    // Exact intertwining check over the field, with room for every shift.
    let field = flavor.field_version();
    let big = &cutoff + int(alg.max_arity() as i64 + 2) * &max_c;
    let old_big = alg.with_monoid(EnergyMonoid::trivial()).with_cutoff(big.clone());
    let old_big = recast_system(&old_big, field, big.clone());
    let mut new_big = old_big.empty_like();
    for ((k, e), t) in &moved {
        new_big.insert_table(*k, e.clone(), t.clone());
    }
    let mut tuples: BTreeSet<Vec<usize>> = BTreeSet::new();
    for t in alg.tables().values() {
        tuples.extend(t.entries().keys().cloned());
    }
    let mut intertwines = true;
    for tuple in &tuples {
        let plain: Vec<NVec> = tuple.iter().map(|&i| NVec::basis(i, field, big.clone())).collect();
        let xi_in: Vec<NVec> = plain
            .iter()
            .map(|x| xi_apply(x, &shifts, field, big.clone()))
            .collect::<Result<_>>()?;
        let lhs = apply_operation(&new_big, &xi_in)?;
        let rhs = xi_apply(&apply_operation(&old_big, &plain)?, &shifts, field, big.clone())?;
        if lhs != rhs {
            intertwines = false;
            break;
        }
    }

    let (transported_b, lambda_t) = match b {
        None => (None, None),
        Some(b) => {
            let mut lam: Option<Rational> = None;
            for (e, comp) in b.components() {
                for i in comp.keys() {
                    let v = &e.lambda - &shifts[*i].0;
                    if lam.as_ref().is_none_or(|l| &v < l) {
                        lam = Some(v);
                    }
                }
            }
            (Some(xi_apply(b, &shifts, field, cutoff.clone())?), lam)
        }
    };
    let b_wall = lambda_t.as_ref().is_some_and(|l| !l.is_positive());
    Ok(RescaleReport {
        presentation,
        algebra_wall,
        algebra_wall_reasons: reasons,
        transported_b,
        lambda_t,
        b_wall,
        intertwines,
    })
}

fn recast_system(sys: &OperationSystem, flavor: RingFlavor, cutoff: Rational) -> OperationSystem {
    let mut out = OperationSystem::new(
        sys.role(),
        sys.source().clone(),
        sys.target().clone(),
        sys.monoid().clone(),
        flavor,
        cutoff,
    );
    for ((k, e), t) in sys.tables() {
        out.insert_table(*k, e.clone(), t.clone());
    }
    out
}

/// A structure constant whose energy breaks the Legendrian lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeViolation {
    pub k: usize,
    pub energy: Energy,
    pub inputs: Vec<String>,
    pub output: String,
    /// The fractional part of `λ − Σ_{i∈I} a_{α(i)}`, nonzero.
    pub residue: Rational,
}

/// Result of the Legendrian checks.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LegendrianReport {
    pub pairing_failures: Vec<String>,
    /// Double points without an a-value.
    pub missing: Vec<String>,
    pub lattice_violations: Vec<LatticeViolation>,
}

impl LegendrianReport {
    pub fn passes(&self) -> bool {
        self.pairing_failures.is_empty() && self.missing.is_empty() && self.lattice_violations.is_empty()
    }
}

/// Checks `a + a' = 1` for every pair and that every structure constant
/// satisfies `λ − Σ_{i∈I} a_{α(i)} ∈ Z`.
///
/// A double-point input `x` contributes `a_x`; a double-point output `y`
/// is the corner `α(0)`, the swapped pair, and contributes `1 − a_y`.
/// Entries touching a double point without an a-value are skipped.
pub fn legendrian_validate(dps: &[DoublePoint], alg: &OperationSystem) -> LegendrianReport {
    let mut report = LegendrianReport::default();
    let by_label: BTreeMap<String, &DoublePoint> = dps.iter().map(|d| (d.label(), d)).collect();
    for dp in dps {
        if dp.a_value.is_none() {
            report.missing.push(dp.label());
        }
        match by_label.get(&dp.partner_label()) {
            None => report.pairing_failures.push(format!("{} has no partner", dp.label())),
            Some(p) => {
                if dp.label() < p.label() {
                    if let Err(e) = check_a_pair(dp, p) {
                        report.pairing_failures.push(e.to_string());
                    }
                }
            }
        }
    }
    let space = alg.space();
    let offset: HashMap<usize, Option<Rational>> = dps
        .iter()
        .filter_map(|d| space.index_of(&d.label()).ok().map(|i| (i, d.a_value.clone())))
        .collect();
    let one = int(1);
    for ((k, e), t) in alg.tables() {
        for (ins, v) in t.entries() {
            'outputs: for o in v.keys() {
                let mut total = e.lambda.clone();
                for i in ins {
                    match offset.get(i) {
                        Some(Some(a)) => total -= a,
                        Some(None) => continue 'outputs,
                        None => {}
                    }
                }
                match offset.get(o) {
                    Some(Some(a)) => total -= &one - a,
                    Some(None) => continue 'outputs,
                    None => {}
                }
                let r = fract(&total);
                if !r.is_zero() {
                    report.lattice_violations.push(LatticeViolation {
                        k: *k,
                        energy: e.clone(),
                        inputs: ins.iter().map(|&i| space.label(i).to_string()).collect(),
                        output: space.label(*o).to_string(),
                        residue: r,
                    });
                }
            }
        }
    }
    report
}

/// Whether `λ` lies in `Z + {partial sums of the given offsets}`, by
/// exhaustive search over multisets of at most `max_corners` offsets.
pub fn lattice_reachable(lambda: &Rational, offsets: &[Rational], max_corners: usize) -> bool {
    fn go(target: &Rational, offsets: &[Rational], left: usize, start: usize) -> bool {
        if target.is_integer() {
            return true;
        }
        if left == 0 {
            return false;
        }
        (start..offsets.len()).any(|j| go(&(target - &offsets[j]), offsets, left - 1, j))
    }
    go(lambda, offsets, max_corners, 0)
}
