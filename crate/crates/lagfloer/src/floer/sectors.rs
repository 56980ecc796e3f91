//! Disjoint unions of immersed Lagrangians and their sectors.
//!
//! For `L = L_A ⊔ L_B` the double points of `L` are those of `L_A`, those
//! of `L_B`, and the intersection points of `L_A` with `L_B` taken in both
//! orders. Floer cohomology of the pair `(L_A, L_B)` is the `AB` sector of
//! the Floer cohomology of the union.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use super::presentation::{DoublePoint, LagrangianPresentation};
use crate::gradedcore::{MultiMap, NVec, OperationSystem, QVec};
use crate::novikov::Energy;
use crate::{EnergyMonoid, Error, Rational, Result};

/// Which pair of components a generator belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sector {
    AA,
    BB,
    AB,
    BA,
}

impl Sector {
    pub const ALL: [Sector; 4] = [Sector::AA, Sector::BB, Sector::AB, Sector::BA];

    pub fn tag(self) -> &'static str {
        match self {
            Sector::AA => "AA",
            Sector::BB => "BB",
            Sector::AB => "AB",
            Sector::BA => "BA",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Sector> {
        Sector::ALL
            .into_iter()
            .find(|s| s.tag() == tag)
            .ok_or_else(|| Error::InvalidInput(format!("unknown sector {tag:?}")))
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A transverse intersection `p ∈ L_A ∩ L_B`, recorded by its preimages.
/// It yields the generators `(a,b)` with index `η_ab` and `(b,a)` with
/// index `n − η_ab`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossPair {
    pub a_point: String,
    pub b_point: String,
    pub eta_ab: i64,
}

/// One structure constant involving mixed generators, in union labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossEntry {
    pub k: usize,
    pub energy: Energy,
    pub inputs: Vec<String>,
    pub output: String,
    pub coeff: Rational,
}

/// The union presentation with its sector bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnionPresentation {
    pub pres: LagrangianPresentation,
    /// Sector of each union generator.
    pub sector_of: Vec<Sector>,
    /// Union index of each generator of `A`.
    pub a_index: Vec<usize>,
    /// Union index of each generator of `B`.
    pub b_index: Vec<usize>,
}

fn reindexed(t: &MultiMap, map: &HashMap<usize, usize>) -> MultiMap {
    t.reindex_inputs(map).reindex_outputs(map)
}

fn embed(v: &NVec, index: &[usize]) -> NVec {
    let mut out = NVec::zero(v.flavor(), v.cutoff().clone());
    for (e, comp) in v.components() {
        let moved: QVec = comp.iter().map(|(i, q)| (index[*i], q.clone())).collect();
        let term = NVec::from_qvec(e.clone(), moved, v.flavor(), v.cutoff().clone())
            .expect("energy already valid in this ring");
        out = out.add(&term).expect("same ring");
    }
    out
}

impl UnionPresentation {
    /// Moves a vector on `A` into the union space.
    pub fn embed_a(&self, v: &NVec) -> NVec {
        embed(v, &self.a_index)
    }

    /// Moves a vector on `B` into the union space.
    pub fn embed_b(&self, v: &NVec) -> NVec {
        embed(v, &self.b_index)
    }

    /// Union indices of a sector, ascending.
    pub fn sector_indices(&self, sector: Sector) -> Vec<usize> {
        (0..self.sector_of.len()).filter(|&i| self.sector_of[i] == sector).collect()
    }

    /// Restricts a union vector to a sector, in that sector's basis.
    pub fn project_vec(&self, v: &NVec, sector: Sector) -> NVec {
        let idx = self.sector_indices(sector);
        let pos: HashMap<usize, usize> = idx.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        let mut out = NVec::zero(v.flavor(), v.cutoff().clone());
        for (e, comp) in v.components() {
            let moved: QVec = comp.iter().filter_map(|(i, q)| pos.get(i).map(|p| (*p, q.clone()))).collect();
            if moved.is_empty() {
                continue;
            }
            let term = NVec::from_qvec(e.clone(), moved, v.flavor(), v.cutoff().clone())
                .expect("energy already valid in this ring");
            out = out.add(&term).expect("same ring");
        }
        out
    }
}

/// Builds the presentation of `A ⊔ B`.
///
/// Homology classes are relabelled `H{k}_{j}` with `A`'s classes first;
/// double-point labels must be disjoint. Tables of `A` and `B` are copied
/// into their blocks and the cross entries are added with a degree check.
pub fn union_sectors(
    a: &LagrangianPresentation,
    b: &LagrangianPresentation,
    cross_pairs: &[CrossPair],
    cross_entries: &[CrossEntry],
) -> Result<UnionPresentation> {
    if a.n() != b.n() {
        return Err(Error::InconsistentPresentation(format!("dimensions {} and {}", a.n(), b.n())));
    }
    let (aa, ba) = (a.algebra(), b.algebra());
    if aa.flavor() != ba.flavor() || aa.cutoff() != ba.cutoff() {
        return Err(Error::IncompatibleRing(format!(
            "presentations over ({}, {}) and ({}, {})",
            aa.flavor(),
            aa.cutoff(),
            ba.flavor(),
            ba.cutoff()
        )));
    }
    let n = a.n();
    let mut homology: BTreeMap<i64, usize> = a.homology().clone();
    for (&k, &r) in b.homology() {
        *homology.entry(k).or_insert(0) += r;
    }
    let mut dps: Vec<DoublePoint> = Vec::new();
    let mut seen: HashMap<String, Sector> = HashMap::new();
    let mut push = |dp: DoublePoint, s: Sector, dps: &mut Vec<DoublePoint>| -> Result<()> {
        if seen.insert(dp.label(), s).is_some() {
            return Err(Error::LabelCollision(dp.label()));
        }
        dps.push(dp);
        Ok(())
    };
    for dp in a.double_points() {
        push(dp.clone(), Sector::AA, &mut dps)?;
    }
    for dp in b.double_points() {
        push(dp.clone(), Sector::BB, &mut dps)?;
    }
    for cp in cross_pairs {
        push(DoublePoint::new(&cp.a_point, &cp.b_point, cp.eta_ab), Sector::AB, &mut dps)?;
        push(DoublePoint::new(&cp.b_point, &cp.a_point, n - cp.eta_ab), Sector::BA, &mut dps)?;
    }

    let monoid = EnergyMonoid::new(
        aa.monoid()
            .generators()
            .iter()
            .chain(ba.monoid().generators())
            .cloned()
            .chain(cross_entries.iter().map(|c| c.energy.clone())),
    )?;
    let shell = LagrangianPresentation::new(n, homology, dps, aa.flavor(), monoid, aa.cutoff().clone())?;
    let space = shell.space().clone();

    // Homology classes: A's then B's within each degree; double points in order.
    let mut a_index = Vec::new();
    let mut b_index = Vec::new();
    let mut sector_of = vec![Sector::AA; space.dim()];
    for (&k, &ra) in a.homology() {
        for j in 0..ra {
            a_index.push(space.index_of(&format!("H{k}_{j}"))?);
        }
    }
    for (&k, &rb) in b.homology() {
        let offset = a.betti(k);
        for j in 0..rb {
            let i = space.index_of(&format!("H{k}_{}", offset + j))?;
            sector_of[i] = Sector::BB;
            b_index.push(i);
        }
    }
    for dp in a.double_points() {
        a_index.push(space.index_of(&dp.label())?);
    }
    for dp in b.double_points() {
        let i = space.index_of(&dp.label())?;
        sector_of[i] = Sector::BB;
        b_index.push(i);
    }
    for cp in cross_pairs {
        sector_of[space.index_of(&format!("({},{})", cp.a_point, cp.b_point))?] = Sector::AB;
        sector_of[space.index_of(&format!("({},{})", cp.b_point, cp.a_point))?] = Sector::BA;
    }

    let mut alg = shell.algebra().empty_like();
    let amap: HashMap<usize, usize> = a_index.iter().copied().enumerate().collect();
    let bmap: HashMap<usize, usize> = b_index.iter().copied().enumerate().collect();
    for ((k, e), t) in aa.tables() {
        alg.insert_table(*k, e.clone(), reindexed(t, &amap));
    }
    for ((k, e), t) in ba.tables() {
        alg.insert_table(*k, e.clone(), reindexed(t, &bmap));
    }
    for c in cross_entries {
        if c.inputs.len() != c.k {
            return Err(Error::InvalidInput(format!(
                "cross entry of arity {} lists {} inputs",
                c.k,
                c.inputs.len()
            )));
        }
        let ins: Vec<&str> = c.inputs.iter().map(String::as_str).collect();
        alg.set_entry_labels(c.energy.clone(), &ins, &c.output, c.coeff.clone())?;
    }
    let pres = shell.with_algebra(alg)?;
    Ok(UnionPresentation {
        pres,
        sector_of,
        a_index,
        b_index,
    })
}

/// The operations restricted to one sector: entries whose inputs and
/// output all lie in the sector, on the sector's generators in union order.
pub fn sector_project(union: &UnionPresentation, sector: Sector) -> OperationSystem {
    let alg = union.pres.algebra();
    let idx = union.sector_indices(sector);
    let map: HashMap<usize, usize> = idx.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let space = alg.space().sub(&idx);
    let mut out = OperationSystem::algebra(space, alg.monoid().clone(), alg.flavor(), alg.cutoff().clone());
    for ((k, e), t) in alg.tables() {
        out.insert_table(*k, e.clone(), reindexed(t, &map));
    }
    out
}
