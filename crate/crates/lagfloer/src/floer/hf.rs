//! Floer cohomology `HF^k = H^{k−1}(A ⊗ Λ, n_1^b)` with torsion, and the
//! product `a_1 • a_2 = (−1)^{k(l+1)} n_2^b(a_1, a_2)`.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use super::mc::{mc_residual, twist_arities};
use crate::gradedcore::{apply_operation, qvec_from_dense, NVec, OperationSystem};
use crate::linalg::{solve, Matrix};
use crate::novikov::{Energy, NovikovElement, RingFlavor};
use crate::smith::{smith_valuations, NovMatrix};
use crate::{Error, Rational, Result};

/// How the complex is graded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Grading {
    /// Every twisted differential term has `μ = 0`, so generator degrees
    /// grade the complex over `Z`.
    Z,
    /// Some term carries a power of `e`; since `e` is an invertible element
    /// of degree 2 only the parity of the degree is meaningful.
    Mod2,
}

impl Grading {
    pub fn tag(self) -> &'static str {
        match self {
            Grading::Z => "Z",
            Grading::Mod2 => "Z/2",
        }
    }
}

/// One Floer cohomology group: `Λ^{free_rank} ⊕ ⊕_i Λ⁰/T^{torsion_i}`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HfDegree {
    pub free_rank: usize,
    /// Torsion exponents, nondecreasing; always empty over a field flavor.
    pub torsion: Vec<Rational>,
}

/// Floer cohomology modulo `F^{>E}`, indexed by the Floer degree `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HfReport {
    pub cutoff: Rational,
    pub flavor: RingFlavor,
    pub grading: Grading,
    pub degrees: BTreeMap<i64, HfDegree>,
    /// Whether the free ranks agree with a recomputation at cutoff `E/2`.
    pub stable: bool,
    /// Whether `b` satisfies the Maurer–Cartan equation modulo `F^{>E}`.
    pub b_certified: bool,
}

/// The arity-1 part `n_1^b` of the twisted operations.
fn twisted_differential(alg: &OperationSystem, b: &NVec) -> Result<OperationSystem> {
    let twisted = twist_arities(alg, b, Some(1))?;
    let mut n1 = twisted.empty_like();
    for ((k, e), t) in twisted.tables() {
        if *k == 1 {
            n1.insert_table(1, e.clone(), t.clone());
        }
    }
    Ok(n1)
}

fn check_square_zero(n1: &OperationSystem) -> Result<()> {
    for i in 0..n1.space().dim() {
        let x = NVec::basis(i, n1.flavor(), n1.cutoff().clone());
        let dx = apply_operation(n1, &[x])?;
        let ddx = apply_operation(n1, &[dx])?;
        if !ddx.is_zero() {
            return Err(Error::InconsistentPresentation(format!(
                "(n_1^b)^2 {} = {} is nonzero modulo the cutoff",
                n1.space().label(i),
                ddx.display(n1.space())
            )));
        }
    }
    Ok(())
}

struct Core {
    grading: Grading,
    degrees: BTreeMap<i64, HfDegree>,
}

fn hf_core(alg: &OperationSystem, b: &NVec) -> Result<Core> {
    let n1 = twisted_differential(alg, b)?;
    check_square_zero(&n1)?;
    let space = n1.space();
    let grading = if n1.tables().keys().all(|(_, e)| e.mu == 0) {
        Grading::Z
    } else {
        Grading::Mod2
    };
    let class = |i: usize| match grading {
        Grading::Z => space.degree(i),
        Grading::Mod2 => space.degree(i).rem_euclid(2),
    };
    let next = |p: i64| match grading {
        Grading::Z => p + 1,
        Grading::Mod2 => (p + 1).rem_euclid(2),
    };
    let classes: BTreeSet<i64> = (0..space.dim()).map(class).collect();
    let members = |p: i64| -> Vec<usize> { (0..space.dim()).filter(|&i| class(i) == p).collect() };
    let shift = n1
        .tables()
        .keys()
        .map(|(_, e)| -e.lambda.clone())
        .fold(Rational::zero(), |a, x| if x > a { x } else { a });
    let cutoff = n1.cutoff() + &shift;
    let mut ranks: BTreeMap<i64, usize> = BTreeMap::new();
    let mut torsion_into: BTreeMap<i64, Vec<Rational>> = BTreeMap::new();
    for &p in &classes {
        let cols = members(p);
        let rows = members(next(p));
        let mut m = NovMatrix::zeros(rows.len(), cols.len(), RingFlavor::Cy0, cutoff.clone());
        for ((_, e), t) in n1.tables() {
            for (c, &j) in cols.iter().enumerate() {
                let Some(v) = t.get(&[j]) else { continue };
                for (r, &i) in rows.iter().enumerate() {
                    let Some(q) = v.get(&i) else { continue };
                    let term = NovikovElement::monomial(
                        q.clone(),
                        Energy::new(&e.lambda + &shift, 0),
                        RingFlavor::Cy0,
                        cutoff.clone(),
                    )?;
                    let sum = m.get(r, c).add(&term)?;
                    m.set(r, c, sum)?;
                }
            }
        }
        let s = smith_valuations(&m)?;
        ranks.insert(p, s.rank);
        if alg.flavor().nonneg() {
            let tors: Vec<Rational> = s.pivots.into_iter().filter(|v| v.is_positive()).collect();
            torsion_into.entry(next(p)).or_default().extend(tors);
        }
    }
    let prev = |p: i64| match grading {
        Grading::Z => p - 1,
        Grading::Mod2 => (p + 1).rem_euclid(2),
    };
    let mut degrees = BTreeMap::new();
    for &p in &classes {
        let dim = members(p).len();
        let out_rank = ranks.get(&p).copied().unwrap_or(0);
        let in_rank = ranks.get(&prev(p)).copied().unwrap_or(0);
        let mut torsion = torsion_into.remove(&p).unwrap_or_default();
        torsion.sort();
        let k = match grading {
            Grading::Z => p + 1,
            Grading::Mod2 => (p + 1).rem_euclid(2),
        };
        degrees.insert(
            k,
            HfDegree {
                free_rank: dim - out_rank - in_rank,
                torsion,
            },
        );
    }
    Ok(Core { grading, degrees })
}

/// Computes `HF^k((L,b))` modulo `F^{>E}`.
///
/// Builds `n_1^b`, checks `(n_1^b)^2 = 0`, and reduces each differential to
/// Smith form over `Λ⁰`. Pivots of positive valuation become torsion
/// summands `Λ⁰/T^v` in the 0-flavors; over field flavors only ranks are
/// reported. The free ranks are recomputed at cutoff `E/2` for the
/// stability flag.
pub fn hf_compute(alg: &OperationSystem, b: &NVec) -> Result<HfReport> {
    let core = hf_core(alg, b)?;
    let half = alg.cutoff() / Rational::from_integer(2.into());
    let low = hf_core(&alg.with_cutoff(half.clone()), &b.recast(alg.flavor(), half)?)?;
    let keys: BTreeSet<&i64> = core.degrees.keys().chain(low.degrees.keys()).collect();
    let stable = keys.into_iter().all(|k| {
        core.degrees.get(k).map_or(0, |d| d.free_rank) == low.degrees.get(k).map_or(0, |d| d.free_rank)
    });
    let (_, b_certified) = mc_residual(alg, b)?;
    Ok(HfReport {
        cutoff: alg.cutoff().clone(),
        flavor: alg.flavor(),
        grading: core.grading,
        degrees: core.degrees,
        stable,
        b_certified,
    })
}

fn lcm_denominator(acc: num_bigint::BigInt, q: &Rational) -> num_bigint::BigInt {
    acc.lcm(q.denom())
}

/// Finds `c` with `n_1^b(c) ≡ v` modulo `F^{>E}` over `Λ⁰`, with powers of
/// `e` set to 1.
///
/// Energies are confined to the grid `(1/D)Z ∩ [0, E]`, `D` the common
/// denominator of all energies involved; components of `c` off that grid
/// cannot contribute to `v`, so the finite linear system is complete.
pub fn is_boundary(alg: &OperationSystem, b: &NVec, v: &NVec) -> Result<Option<NVec>> {
    let n1 = twisted_differential(alg, b)?;
    let dim = n1.space().dim();
    let cutoff = n1.cutoff().clone();
    let negative = n1.tables().keys().any(|(_, e)| e.lambda.is_negative())
        || v.components().keys().any(|e| e.lambda.is_negative());
    if negative {
        return Err(Error::InvalidInput(
            "boundary test over Λ⁰ needs nonnegative energies".into(),
        ));
    }
    let mut den = num_bigint::BigInt::from(1);
    for (_, e) in n1.tables().keys() {
        den = lcm_denominator(den, &e.lambda);
    }
    for e in v.components().keys() {
        den = lcm_denominator(den, &e.lambda);
    }
    den = lcm_denominator(den, &cutoff);
    let den_r = Rational::from_integer(den);
    let to_step = |l: &Rational| -> usize {
        (l * &den_r)
            .to_integer()
            .to_usize()
            .expect("grid index fits in usize")
    };
    let steps = to_step(&cutoff);
    let unknowns = (steps + 1) * dim;
    let mut m: Matrix<Rational> = Matrix::zeros(unknowns, unknowns);
    for ((_, e), t) in n1.tables() {
        let u = to_step(&e.lambda);
        for (inputs, out) in t.entries() {
            let j = inputs[0];
            for (i, q) in out {
                for s in 0..=steps {
                    if s + u > steps {
                        break;
                    }
                    let row = (s + u) * dim + i;
                    let col = s * dim + j;
                    m.data[row][col] += q.clone();
                }
            }
        }
    }
    let mut rhs = vec![Rational::zero(); unknowns];
    for (e, comp) in v.components() {
        let s = to_step(&e.lambda);
        for (i, q) in comp {
            rhs[s * dim + i] += q.clone();
        }
    }
    let Some(x) = solve(&m, &rhs) else { return Ok(None) };
    let mut c = NVec::zero(n1.flavor(), cutoff.clone());
    for s in 0..=steps {
        let block: Vec<Rational> = x[s * dim..(s + 1) * dim].to_vec();
        if block.iter().all(Zero::is_zero) {
            continue;
        }
        let energy = Energy::new(Rational::from_integer(s.into()) / &den_r, 0);
        c = c.add(&NVec::from_qvec(energy, qvec_from_dense(&block), n1.flavor(), cutoff.clone())?)?;
    }
    Ok(Some(c))
}

/// A product class representative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HfProduct {
    /// `(−1)^{k(l+1)} n_2^b(x, y)`.
    pub value: NVec,
    /// Floer degree `k + l`, `None` when an input is zero.
    pub degree: Option<i64>,
    /// Whether `n_1^b(value) = 0`.
    pub cycle: bool,
}

/// The Floer degree `deg + 2μ + 1` of a homogeneous vector.
fn floer_degree(alg: &OperationSystem, x: &NVec, name: &str) -> Result<Option<i64>> {
    let mut deg = None;
    for (e, v) in x.components() {
        for i in v.keys() {
            let d = alg.space().degree(*i) + 2 * e.mu + 1;
            match deg {
                None => deg = Some(d),
                Some(d0) if d0 != d => {
                    return Err(Error::DegreeViolation(format!("{name} is not homogeneous")));
                }
                _ => {}
            }
        }
    }
    Ok(deg)
}

/// The product `x • y` of two `n_1^b`-cycles, with a cycle certificate.
pub fn hf_product(alg: &OperationSystem, b: &NVec, x: &NVec, y: &NVec) -> Result<HfProduct> {
    let nb = twist_arities(alg, b, Some(2))?;
    for (name, z) in [("x", x), ("y", y)] {
        let dz = apply_operation(&nb, std::slice::from_ref(z))?;
        if !dz.is_zero() {
            return Err(Error::NonCycle(format!("{name}: n_1^b({name}) = {}", dz.display(alg.space()))));
        }
    }
    let k = floer_degree(alg, x, "x")?;
    let l = floer_degree(alg, y, "y")?;
    let raw = apply_operation(&nb, &[x.clone(), y.clone()])?;
    let (value, degree) = match (k, l) {
        (Some(k), Some(l)) => {
            let sign = if (k * (l + 1)).rem_euclid(2) == 0 { 1 } else { -1 };
            (raw.scale(&Rational::from_integer(sign.into())), Some(k + l))
        }
        _ => (raw, None),
    };
    let cycle = apply_operation(&nb, std::slice::from_ref(&value))?.is_zero();
    Ok(HfProduct { value, degree, cycle })
}
