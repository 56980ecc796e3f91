//! Smith normal form over truncated Novikov rings `Λ⁰/F^{>E}`.
//!
//! `Λ⁰` is a valuation ring, so every matrix over it is equivalent to a
//! diagonal matrix `diag(T^{v_1},…,T^{v_r})` with `v_1 ≤ … ≤ v_r`. The
//! pivots `v_k` are the torsion exponents of the cokernel; modulo `F^{>E}`
//! only pivots `v_k ≤ E` survive.

use num_traits::Signed;

use crate::novikov::{NovikovElement, RingFlavor};
use crate::{Error, Rational, Result};

/// A dense matrix of Novikov elements sharing one ring and cutoff.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NovMatrix {
    rows: usize,
    cols: usize,
    flavor: RingFlavor,
    cutoff: Rational,
    data: Vec<NovikovElement>,
}

impl NovMatrix {
    pub fn zeros(rows: usize, cols: usize, flavor: RingFlavor, cutoff: Rational) -> Self {
        let z = NovikovElement::zero(flavor, cutoff.clone());
        NovMatrix {
            rows,
            cols,
            flavor,
            cutoff,
            data: vec![z; rows * cols],
        }
    }

    /// Builds a matrix from rows. Every entry must be over `flavor` with
    /// cutoff `cutoff`.
    pub fn from_rows(rows: Vec<Vec<NovikovElement>>, flavor: RingFlavor, cutoff: Rational) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut out = Self::zeros(r, c, flavor, cutoff);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != c {
                return Err(Error::InvalidInput(format!("row {i} has {} entries, expected {c}", row.len())));
            }
            for (j, x) in row.into_iter().enumerate() {
                out.set(i, j, x)?;
            }
        }
        Ok(out)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn flavor(&self) -> RingFlavor {
        self.flavor
    }

    pub fn cutoff(&self) -> &Rational {
        &self.cutoff
    }

    pub fn get(&self, i: usize, j: usize) -> &NovikovElement {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: NovikovElement) -> Result<()> {
        if x.flavor() != self.flavor || x.cutoff() != &self.cutoff {
            return Err(Error::IncompatibleRing(format!(
                "entry over ({}, {}) in a matrix over ({}, {})",
                x.flavor(),
                x.cutoff(),
                self.flavor,
                self.cutoff
            )));
        }
        self.data[i * self.cols + j] = x;
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(NovikovElement::is_zero)
    }

    pub fn mul(&self, other: &NovMatrix) -> Result<NovMatrix> {
        if self.cols != other.rows {
            return Err(Error::InvalidInput(format!(
                "cannot multiply {}×{} by {}×{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols, self.flavor, self.cutoff.clone());
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = NovikovElement::zero(self.flavor, self.cutoff.clone());
                for l in 0..self.cols {
                    let a = self.get(i, l);
                    if a.is_zero() {
                        continue;
                    }
                    acc = acc.add(&a.mul(other.get(l, j))?)?;
                }
                out.data[i * other.cols + j] = acc;
            }
        }
        Ok(out)
    }
}

/// The diagonal of a Smith normal form, modulo `F^{>E}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithForm {
    /// Valuations of the pivots, nondecreasing, all `≤ E`.
    pub pivots: Vec<Rational>,
    /// Number of pivots, the rank over the field of fractions.
    pub rank: usize,
}

/// Computes the Smith pivots of a matrix over a nonnegative Novikov ring.
///
/// At each step the entry of minimal valuation (first by row, then column)
/// becomes the pivot; it divides every other entry, so its row and column
/// are cleared exactly. Quotients are exact to `E − v` and multiply entries
/// of valuation at least `v`, so the reduction is exact modulo `F^{>E}`.
pub fn smith_valuations(m: &NovMatrix) -> Result<SmithForm> {
    for x in &m.data {
        if let Some(v) = x.valuation() {
            if v.is_negative() {
                return Err(Error::FlavorViolation(format!(
                    "entry {x} has negative valuation; Smith reduction needs Λ⁰ entries"
                )));
            }
        }
    }
    let mut a = m.clone();
    let mut row_alive: Vec<bool> = vec![true; a.rows];
    let mut col_alive: Vec<bool> = vec![true; a.cols];
    let mut pivots = Vec::new();
    loop {
        let mut best: Option<(Rational, usize, usize)> = None;
        for i in (0..a.rows).filter(|&i| row_alive[i]) {
            for j in (0..a.cols).filter(|&j| col_alive[j]) {
                if let Some(v) = a.get(i, j).valuation() {
                    if best.as_ref().is_none_or(|(bv, _, _)| &v < bv) {
                        best = Some((v, i, j));
                    }
                }
            }
        }
        let Some((v, r, c)) = best else { break };
        let pivot = a.get(r, c).clone();
        for i in (0..a.rows).filter(|&i| row_alive[i] && i != r) {
            let x = a.get(i, c);
            if x.is_zero() {
                continue;
            }
            let factor = x.div_exact(&pivot)?;
            for j in (0..a.cols).filter(|&j| col_alive[j] && j != c) {
                let prod = factor.mul(a.get(r, j))?;
                if prod.is_zero() {
                    continue;
                }
                let new = a.get(i, j).sub(&prod)?;
                a.data[i * a.cols + j] = new;
            }
            a.data[i * a.cols + c] = NovikovElement::zero(a.flavor, a.cutoff.clone());
        }
        row_alive[r] = false;
        col_alive[c] = false;
        pivots.push(v);
    }
    let rank = pivots.len();
    Ok(SmithForm { pivots, rank })
}
