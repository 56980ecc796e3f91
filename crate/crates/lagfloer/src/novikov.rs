//! Truncated elements of the universal Novikov rings.
//!
//! An element is a finite sum of terms `q·T^λ·e^μ` with exact rational `q`
//! and `λ` and integer `μ`. The formal variable `T` has degree 0 and `e` has
//! degree 2. Every element carries a cutoff `E`; terms with `λ > E` are
//! dropped, so all identities are exact modulo `F^{>E}`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::{parse_rational, Error, Rational, Result};

/// An energy key `(λ, μ)`: the exponent of `T` and the exponent of `e`.
///
/// Ordered lexicographically by `(λ, μ)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Energy {
    pub lambda: Rational,
    pub mu: i64,
}

impl Energy {
    pub fn new(lambda: Rational, mu: i64) -> Self {
        Energy { lambda, mu }
    }

    pub fn zero() -> Self {
        Energy {
            lambda: Rational::zero(),
            mu: 0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.lambda.is_zero() && self.mu == 0
    }

    pub fn add(&self, other: &Energy) -> Energy {
        Energy {
            lambda: &self.lambda + &other.lambda,
            mu: self.mu + other.mu,
        }
    }

    pub fn sub(&self, other: &Energy) -> Energy {
        Energy {
            lambda: &self.lambda - &other.lambda,
            mu: self.mu - other.mu,
        }
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lambda, self.mu)
    }
}

/// The six coefficient rings.
///
/// `Nov` and `Nov0` are `Λ_nov` and `Λ⁰_nov`; `Cy`, `Cy0` drop the variable
/// `e`; `NovZ`, `NovN` restrict energies to an integer lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RingFlavor {
    Nov,
    Nov0,
    Cy,
    Cy0,
    NovZ,
    NovN,
}

impl RingFlavor {
    pub const ALL: [RingFlavor; 6] = [
        RingFlavor::Nov,
        RingFlavor::Nov0,
        RingFlavor::Cy,
        RingFlavor::Cy0,
        RingFlavor::NovZ,
        RingFlavor::NovN,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            RingFlavor::Nov => "nov",
            RingFlavor::Nov0 => "nov0",
            RingFlavor::Cy => "cy",
            RingFlavor::Cy0 => "cy0",
            RingFlavor::NovZ => "novZ",
            RingFlavor::NovN => "novN",
        }
    }

    pub fn from_tag(tag: &str) -> Result<RingFlavor> {
        RingFlavor::ALL
            .into_iter()
            .find(|f| f.tag() == tag)
            .ok_or_else(|| Error::InvalidInput(format!("unknown ring flavor {tag:?}")))
    }

    /// Whether the variable `e` may appear.
    pub fn allows_e(self) -> bool {
        !matches!(self, RingFlavor::Cy | RingFlavor::Cy0)
    }

    /// Whether energies must be nonnegative (the `⁰` rings).
    pub fn nonneg(self) -> bool {
        matches!(self, RingFlavor::Nov0 | RingFlavor::Cy0 | RingFlavor::NovN)
    }

    /// Whether energies must lie in an integer lattice.
    pub fn integral(self) -> bool {
        matches!(self, RingFlavor::NovZ | RingFlavor::NovN)
    }

    /// The ring obtained by inverting `T`.
    pub fn field_version(self) -> RingFlavor {
        match self {
            RingFlavor::Nov0 => RingFlavor::Nov,
            RingFlavor::Cy0 => RingFlavor::Cy,
            RingFlavor::NovN => RingFlavor::NovZ,
            other => other,
        }
    }

    /// The nonnegative subring.
    pub fn zero_version(self) -> RingFlavor {
        match self {
            RingFlavor::Nov => RingFlavor::Nov0,
            RingFlavor::Cy => RingFlavor::Cy0,
            RingFlavor::NovZ => RingFlavor::NovN,
            other => other,
        }
    }
}

impl fmt::Display for RingFlavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One violated exponent constraint, reported by [`NovikovElement::flavor_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlavorDiagnostic {
    pub energy: Energy,
    pub reason: String,
}

/// A truncated Novikov series.
///
/// The sign and `e`-constraints of the flavor are enforced on construction.
/// Lattice constraints of the integral flavors depend on a-value offsets
/// known only to a presentation, so they are checked by
/// [`NovikovElement::flavor_check_with_offsets`] instead.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NovikovElement {
    flavor: RingFlavor,
    cutoff: Rational,
    terms: BTreeMap<Energy, Rational>,
}

fn structural_violation(flavor: RingFlavor, e: &Energy) -> Option<String> {
    if !flavor.allows_e() && e.mu != 0 {
        return Some(format!("e-power {} in an e-free ring", e.mu));
    }
    if flavor.nonneg() && e.lambda.is_negative() {
        return Some(format!("negative energy {}", e.lambda));
    }
    None
}

impl NovikovElement {
    pub fn zero(flavor: RingFlavor, cutoff: Rational) -> Self {
        NovikovElement {
            flavor,
            cutoff,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(flavor: RingFlavor, cutoff: Rational) -> Self {
        Self::constant(Rational::one(), flavor, cutoff)
    }

    /// The constant `q·T^0`.
    pub fn constant(q: Rational, flavor: RingFlavor, cutoff: Rational) -> Self {
        let mut out = Self::zero(flavor, cutoff);
        if !q.is_zero() && !out.cutoff.is_negative() {
            out.terms.insert(Energy::zero(), q);
        }
        out
    }

    /// The monomial `q·T^λ·e^μ`, dropped if `λ > E`.
    pub fn monomial(q: Rational, energy: Energy, flavor: RingFlavor, cutoff: Rational) -> Result<Self> {
        Self::from_terms([(energy, q)], flavor, cutoff)
    }

    pub fn from_terms<I>(terms: I, flavor: RingFlavor, cutoff: Rational) -> Result<Self>
    where
        I: IntoIterator<Item = (Energy, Rational)>,
    {
        let mut out = Self::zero(flavor, cutoff);
        for (e, q) in terms {
            if let Some(reason) = structural_violation(flavor, &e) {
                return Err(Error::FlavorViolation(format!("{reason} in ring {flavor}")));
            }
            out.add_term(e, q);
        }
        Ok(out)
    }

    /// Adds a term in place, pruning zeros and terms above the cutoff.
    /// The caller is responsible for flavor constraints.
    pub(crate) fn add_term(&mut self, e: Energy, q: Rational) {
        if q.is_zero() || e.lambda > self.cutoff {
            return;
        }
        let remove = {
            let slot = self.terms.entry(e.clone()).or_insert_with(Rational::zero);
            *slot += q;
            slot.is_zero()
        };
        if remove {
            self.terms.remove(&e);
        }
    }

    pub fn flavor(&self) -> RingFlavor {
        self.flavor
    }

    pub fn cutoff(&self) -> &Rational {
        &self.cutoff
    }

    pub fn terms(&self) -> &BTreeMap<Energy, Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The coefficient of `T^λ e^μ`.
    pub fn coeff(&self, e: &Energy) -> Rational {
        self.terms.get(e).cloned().unwrap_or_else(Rational::zero)
    }

    fn compatible(&self, other: &NovikovElement) -> Result<()> {
        if self.flavor != other.flavor {
            return Err(Error::IncompatibleRing(format!(
                "flavors {} and {}",
                self.flavor, other.flavor
            )));
        }
        if self.cutoff != other.cutoff {
            return Err(Error::IncompatibleRing(format!(
                "cutoffs {} and {}",
                self.cutoff, other.cutoff
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &NovikovElement) -> Result<NovikovElement> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (e, q) in &other.terms {
            out.add_term(e.clone(), q.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &NovikovElement) -> Result<NovikovElement> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> NovikovElement {
        self.scale(&-Rational::one())
    }

    /// Multiplies every coefficient by a rational.
    pub fn scale(&self, q: &Rational) -> NovikovElement {
        let mut out = Self::zero(self.flavor, self.cutoff.clone());
        if q.is_zero() {
            return out;
        }
        for (e, c) in &self.terms {
            out.terms.insert(e.clone(), c * q);
        }
        out
    }

    pub fn mul(&self, other: &NovikovElement) -> Result<NovikovElement> {
        self.compatible(other)?;
        let mut out = Self::zero(self.flavor, self.cutoff.clone());
        for (e1, q1) in &self.terms {
            for (e2, q2) in &other.terms {
                out.add_term(e1.add(e2), q1 * q2);
            }
        }
        Ok(out)
    }

    /// Multiplies by the monomial `T^λ e^μ`.
    pub fn shift(&self, by: &Energy) -> Result<NovikovElement> {
        let mut out = Self::zero(self.flavor, self.cutoff.clone());
        for (e, q) in &self.terms {
            let ne = e.add(by);
            if let Some(reason) = structural_violation(self.flavor, &ne) {
                return Err(Error::FlavorViolation(format!("{reason} in ring {}", self.flavor)));
            }
            out.add_term(ne, q.clone());
        }
        Ok(out)
    }

    /// The minimal energy, or `None` for zero (valuation `+∞`).
    pub fn valuation(&self) -> Option<Rational> {
        self.terms.keys().next().map(|e| e.lambda.clone())
    }

    /// Whether the element lies in `F^λ`.
    pub fn in_filtration(&self, lambda: &Rational) -> bool {
        match self.valuation() {
            None => true,
            Some(v) => &v >= lambda,
        }
    }

    /// The same element regarded in another ring with another cutoff.
    /// Terms above the new cutoff are dropped.
    pub fn recast(&self, flavor: RingFlavor, cutoff: Rational) -> Result<NovikovElement> {
        Self::from_terms(self.terms.clone(), flavor, cutoff)
    }

    /// The element with cutoff lowered or raised to `cutoff`.
    pub fn truncate(&self, cutoff: Rational) -> NovikovElement {
        let mut out = Self::zero(self.flavor, cutoff);
        for (e, q) in &self.terms {
            out.add_term(e.clone(), q.clone());
        }
        out
    }

    /// The sum of terms of minimal energy.
    fn leading_monomial(&self) -> Result<(Energy, Rational)> {
        let v = self
            .valuation()
            .ok_or_else(|| Error::NotInvertible("zero".into()))?;
        let mut lead = self.terms.iter().filter(|(e, _)| e.lambda == v);
        let (e, q) = lead.next().expect("valuation comes from a term");
        if lead.next().is_some() {
            return Err(Error::NotInvertible(format!(
                "{self}: the minimal-energy part is not a monomial"
            )));
        }
        Ok((e.clone(), q.clone()))
    }

    /// The multiplicative inverse modulo `F^{>E}`.
    ///
    /// The leading monomial is factored out and the remaining unit
    /// `1 + u` with `val(u) > 0` is inverted by a geometric series.
    pub fn invert(&self) -> Result<NovikovElement> {
        let (lead_e, lead_q) = self.leading_monomial()?;
        if self.flavor.nonneg() && lead_e.lambda.is_positive() {
            return Err(Error::NotInvertible(format!(
                "{self} has positive valuation in ring {}",
                self.flavor
            )));
        }
        let unit = self.unit_series(&lead_e, &lead_q)?;
        let neg_lead = Energy::new(-lead_e.lambda.clone(), -lead_e.mu);
        if let Some(reason) = structural_violation(self.flavor, &neg_lead) {
            return Err(Error::NotInvertible(format!("{reason} in ring {}", self.flavor)));
        }
        Ok(unit.shift(&neg_lead)?.scale(&lead_q.recip()))
    }

    /// For `self = q·T^λe^μ·(1+u)`, the series `(1+u)^{-1}` up to the cutoff.
    fn unit_series(&self, lead_e: &Energy, lead_q: &Rational) -> Result<NovikovElement> {
        let mut u = Self::zero(self.flavor.field_version(), self.cutoff.clone());
        for (e, q) in &self.terms {
            if e != lead_e {
                u.add_term(e.sub(lead_e), q / lead_q);
            }
        }
        let neg_u = u.neg();
        let mut sum = Self::one(u.flavor, self.cutoff.clone());
        let mut power = Self::one(u.flavor, self.cutoff.clone());
        loop {
            power = power.mul(&neg_u)?;
            if power.is_zero() {
                break;
            }
            sum = sum.add(&power)?;
        }
        Ok(NovikovElement {
            flavor: self.flavor,
            cutoff: self.cutoff.clone(),
            terms: sum.terms,
        })
    }

    /// Exact quotient `self / d` when `val(self) ≥ val(d)`.
    ///
    /// This avoids forming `d^{-1}`, which may have negative energy: the
    /// leading monomial of `d` is divided out of `self` directly. The result
    /// is exact up to energy `E − val(d)`.
    pub fn div_exact(&self, d: &NovikovElement) -> Result<NovikovElement> {
        self.compatible(d)?;
        let (lead_e, lead_q) = d.leading_monomial()?;
        if self.is_zero() {
            return Ok(self.clone());
        }
        let v = self.valuation().expect("nonzero");
        if v < lead_e.lambda {
            return Err(Error::NotInvertible(format!(
                "{self} is not divisible by {d}: valuation {v} below {}",
                lead_e.lambda
            )));
        }
        let unit = d.unit_series(&lead_e, &lead_q)?;
        let mut num = Self::zero(self.flavor, self.cutoff.clone());
        for (e, q) in &self.terms {
            let ne = e.sub(&lead_e);
            if let Some(reason) = structural_violation(self.flavor, &ne) {
                return Err(Error::NotInvertible(format!("{reason} in ring {}", self.flavor)));
            }
            num.add_term(ne, q / &lead_q);
        }
        num.mul(&unit)
    }

    /// Diagnostics for every term violating the constraints of `f`,
    /// including the integer lattice for `novZ`/`novN`.
    pub fn flavor_check(&self, f: RingFlavor) -> Vec<FlavorDiagnostic> {
        self.flavor_check_with_offsets(f, &[Rational::zero()])
    }

    /// As [`Self::flavor_check`], with the lattice of integral flavors
    /// widened to `Z + offsets`.
    pub fn flavor_check_with_offsets(&self, f: RingFlavor, offsets: &[Rational]) -> Vec<FlavorDiagnostic> {
        let mut out = Vec::new();
        for e in self.terms.keys() {
            if let Some(reason) = structural_violation(f, e) {
                out.push(FlavorDiagnostic {
                    energy: e.clone(),
                    reason,
                });
                continue;
            }
            if f.integral() && !offsets.iter().any(|o| (&e.lambda - o).is_integer()) {
                out.push(FlavorDiagnostic {
                    energy: e.clone(),
                    reason: format!("energy {} outside the integer lattice", e.lambda),
                });
            }
        }
        out
    }

    /// Parses the textual encoding `q*T^(l)*e^(m) + …`.
    ///
    /// Factors may be omitted (`T^(l)`, `q`, `q*e^(m)`), `T` and `e` alone
    /// mean exponent 1, and `0` is the zero element.
    pub fn parse(s: &str, flavor: RingFlavor, cutoff: Rational) -> Result<NovikovElement> {
        let mut terms = Vec::new();
        let t = s.trim();
        if t != "0" && !t.is_empty() {
            for piece in t.split(" + ") {
                terms.push(parse_term(piece)?);
            }
        }
        Self::from_terms(terms, flavor, cutoff)
    }

    /// The internal degree `2μ` of every term, as a set.
    pub fn degrees(&self) -> Vec<i64> {
        let mut d: Vec<i64> = self.terms.keys().map(|e| 2 * e.mu).collect();
        d.sort_unstable();
        d.dedup();
        d
    }
}

fn parse_exponent(factor: &str, var: char) -> Option<&str> {
    let rest = factor.strip_prefix(var)?;
    if rest.is_empty() {
        return Some("1");
    }
    let inner = rest.strip_prefix('^')?;
    Some(
        inner
            .strip_prefix('(')
            .and_then(|x| x.strip_suffix(')'))
            .unwrap_or(inner),
    )
}

fn parse_term(piece: &str) -> Result<(Energy, Rational)> {
    let mut q = Rational::one();
    let mut e = Energy::zero();
    for factor in piece.trim().split('*') {
        let factor = factor.trim();
        if let Some(l) = parse_exponent(factor, 'T') {
            e.lambda = parse_rational(l)?;
        } else if let Some(m) = parse_exponent(factor, 'e') {
            e.mu = m
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad e-exponent in {piece:?}")))?;
        } else if factor == "-T" || factor == "-e" {
            q = -q;
            if factor == "-T" {
                e.lambda = Rational::one();
            } else {
                e.mu = 1;
            }
        } else {
            q *= parse_rational(factor)?;
        }
    }
    Ok((e, q))
}

impl fmt::Display for NovikovElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (e, q) in &self.terms {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "{}*T^({})*e^({})", q, e.lambda, e.mu)?;
        }
        Ok(())
    }
}

/// Free-function form of [`NovikovElement::add`].
pub fn nov_add(a: &NovikovElement, b: &NovikovElement) -> Result<NovikovElement> {
    a.add(b)
}

/// Free-function form of [`NovikovElement::mul`].
pub fn nov_mul(a: &NovikovElement, b: &NovikovElement) -> Result<NovikovElement> {
    a.mul(b)
}

/// Free-function form of [`NovikovElement::valuation`].
pub fn nov_valuation(a: &NovikovElement) -> Option<Rational> {
    a.valuation()
}

/// Free-function form of [`NovikovElement::invert`].
pub fn nov_invert(a: &NovikovElement) -> Result<NovikovElement> {
    a.invert()
}

/// Free-function form of [`NovikovElement::flavor_check`].
pub fn nov_flavor_check(a: &NovikovElement, f: RingFlavor) -> Vec<FlavorDiagnostic> {
    a.flavor_check(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{int, rational};
    use proptest::prelude::*;

    fn el(s: &str, f: RingFlavor, e: i64) -> NovikovElement {
        NovikovElement::parse(s, f, int(e)).unwrap()
    }

    #[test]
    fn like_terms_combine() {
        let a = el("T^(1/2)", RingFlavor::Nov0, 10);
        assert_eq!(a.add(&a).unwrap(), el("2*T^(1/2)", RingFlavor::Nov0, 10));
    }

    #[test]
    fn zero_is_additive_identity() {
        let a = el("3*T^(2)*e^(1) + -1*T^(1/3)", RingFlavor::Nov0, 10);
        let z = NovikovElement::zero(RingFlavor::Nov0, int(10));
        assert_eq!(a.add(&z).unwrap(), a);
    }

    #[test]
    fn opposite_terms_cancel() {
        let a = el("T^(3)*e^(1)", RingFlavor::Nov, 10);
        assert!(a.add(&a.neg()).unwrap().is_zero());
    }

    #[test]
    fn monomial_product() {
        let a = el("2*T^(1/2)*e^(3)", RingFlavor::Nov, 10);
        let b = el("5*T^(2)*e^(-1)", RingFlavor::Nov, 10);
        assert_eq!(a.mul(&b).unwrap(), el("10*T^(5/2)*e^(2)", RingFlavor::Nov, 10));
    }

    #[test]
    fn difference_of_squares() {
        let a = el("1 + T", RingFlavor::Cy0, 10);
        let b = el("1 + -1*T", RingFlavor::Cy0, 10);
        assert_eq!(a.mul(&b).unwrap(), el("1 + -1*T^(2)", RingFlavor::Cy0, 10));
    }

    #[test]
    fn product_drops_above_cutoff() {
        let a = el("T^(6)", RingFlavor::Cy0, 10);
        let b = el("T^(5)", RingFlavor::Cy0, 10);
        assert!(a.mul(&b).unwrap().is_zero());
    }

    #[test]
    fn mismatched_rings_are_rejected() {
        let a = el("T", RingFlavor::Cy0, 10);
        let b = el("T", RingFlavor::Nov0, 10);
        let c = el("T", RingFlavor::Cy0, 5);
        assert!(matches!(a.add(&b), Err(Error::IncompatibleRing(_))));
        assert!(matches!(a.mul(&c), Err(Error::IncompatibleRing(_))));
    }

    #[test]
    fn valuations() {
        assert_eq!(el("3*T^(1/2) + T^(2)", RingFlavor::Cy0, 10).valuation(), Some(rational(1, 2)));
        assert_eq!(NovikovElement::zero(RingFlavor::Nov, int(1)).valuation(), None);
        assert_eq!(el("5*e^(-3)", RingFlavor::Nov, 10).valuation(), Some(int(0)));
    }

    #[test]
    fn geometric_series_inverse() {
        let a = el("1 + -1*T", RingFlavor::Nov0, 3);
        let inv = a.invert().unwrap();
        assert_eq!(inv, el("1 + T + T^(2) + T^(3)", RingFlavor::Nov0, 3));
        assert_eq!(a.mul(&inv).unwrap(), NovikovElement::one(RingFlavor::Nov0, int(3)));
    }

    #[test]
    fn positive_valuation_is_not_a_unit_in_zero_rings() {
        let t = el("T", RingFlavor::Cy0, 3);
        assert!(matches!(t.invert(), Err(Error::NotInvertible(_))));
        let z = NovikovElement::zero(RingFlavor::Nov, int(3));
        assert!(matches!(z.invert(), Err(Error::NotInvertible(_))));
    }

    #[test]
    fn monomial_inverse_in_field_flavor() {
        let a = el("T*e^(2)", RingFlavor::Nov, 3);
        assert_eq!(a.invert().unwrap(), el("T^(-1)*e^(-2)", RingFlavor::Nov, 3));
    }

    #[test]
    fn non_monomial_leading_part_is_not_invertible() {
        let a = el("1 + e", RingFlavor::Nov0, 3);
        assert!(matches!(a.invert(), Err(Error::NotInvertible(_))));
    }

    #[test]
    fn flavor_diagnostics() {
        let half = el("T^(1/2)", RingFlavor::Nov, 3);
        assert_eq!(half.flavor_check(RingFlavor::NovN).len(), 1);
        let te = el("T^(2)*e", RingFlavor::Nov, 3);
        assert_eq!(te.flavor_check(RingFlavor::Cy0).len(), 1);
        let tinv = el("T^(-1)", RingFlavor::Nov, 3);
        assert!(tinv.flavor_check(RingFlavor::NovZ).is_empty());
        let offset = el("T^(4/3)", RingFlavor::Nov, 3);
        assert!(offset
            .flavor_check_with_offsets(RingFlavor::NovN, &[rational(1, 3)])
            .is_empty());
    }

    #[test]
    fn construction_enforces_structure() {
        assert!(NovikovElement::parse("e", RingFlavor::Cy, int(1)).is_err());
        assert!(NovikovElement::parse("T^(-1)", RingFlavor::Nov0, int(1)).is_err());
    }

    #[test]
    fn text_round_trip() {
        let a = el("-3/2*T^(1/3)*e^(-2) + 7*T^(2)", RingFlavor::Nov, 5);
        let again = NovikovElement::parse(&a.to_string(), RingFlavor::Nov, int(5)).unwrap();
        assert_eq!(a, again);
        assert_eq!(NovikovElement::zero(RingFlavor::Nov, int(1)).to_string(), "0");
    }

    #[test]
    fn exact_division() {
        let d = el("2*T + T^(2)", RingFlavor::Nov0, 6);
        let a = el("T^(3) + 5*T^(4)", RingFlavor::Nov0, 6);
        let q = a.div_exact(&d).unwrap();
        let back = q.mul(&d).unwrap();
        // exact up to E − val(d)
        assert_eq!(back.truncate(int(5)), a.truncate(int(5)));
        assert!(el("T", RingFlavor::Nov0, 6).div_exact(&el("T^(2)", RingFlavor::Nov0, 6)).is_err());
    }

    fn arb_element(flavor: RingFlavor) -> impl Strategy<Value = NovikovElement> {
        let mu_range = if flavor.allows_e() { -2i64..=2 } else { 0i64..=0 };
        let lam_lo = if flavor.nonneg() { 0i64 } else { -3 };
        prop::collection::vec(((lam_lo..=12i64), 1i64..=3, mu_range, -4i64..=4), 0..5).prop_map(move |ts| {
            NovikovElement::from_terms(
                ts.into_iter()
                    .map(|(ln, ld, m, q)| (Energy::new(rational(ln, ld), m), int(q))),
                flavor,
                int(4),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn ring_axioms_nonneg(a in arb_element(RingFlavor::Nov0), b in arb_element(RingFlavor::Nov0), c in arb_element(RingFlavor::Nov0)) {
            prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
            prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
            prop_assert_eq!(a.add(&b).unwrap().add(&c).unwrap(), a.add(&b.add(&c).unwrap()).unwrap());
            prop_assert_eq!(
                a.mul(&b.add(&c).unwrap()).unwrap(),
                a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap()
            );
        }

        #[test]
        fn valuation_is_multiplicative(a in arb_element(RingFlavor::Cy0), b in arb_element(RingFlavor::Cy0)) {
            if let (Some(va), Some(vb)) = (a.valuation(), b.valuation()) {
                if &va + &vb <= int(4) {
                    prop_assert_eq!(a.mul(&b).unwrap().valuation(), Some(va + vb));
                }
            }
        }

        #[test]
        fn filtration_product_law(a in arb_element(RingFlavor::Nov0), b in arb_element(RingFlavor::Nov0)) {
            let va = a.valuation().unwrap_or_else(|| int(100));
            let vb = b.valuation().unwrap_or_else(|| int(100));
            prop_assert!(a.mul(&b).unwrap().in_filtration(&(va + vb)));
        }

        #[test]
        fn degrees_are_even(a in arb_element(RingFlavor::Nov)) {
            prop_assert!(a.degrees().iter().all(|d| d % 2 == 0));
        }

        #[test]
        fn e_shift_is_degree_2d_bijection(a in arb_element(RingFlavor::Nov), d in -3i64..=3) {
            let shifted = a.shift(&Energy::new(int(0), d)).unwrap();
            prop_assert_eq!(shifted.terms().len(), a.terms().len());
            let expect: Vec<i64> = a.degrees().iter().map(|x| x + 2 * d).collect();
            prop_assert_eq!(shifted.degrees(), expect);
            prop_assert_eq!(shifted.shift(&Energy::new(int(0), -d)).unwrap(), a);
        }

        #[test]
        fn inverse_multiplies_to_one(a in arb_element(RingFlavor::Cy0), q in 1i64..=5) {
            let unit = a.truncate(int(4)).add(&NovikovElement::constant(int(q), RingFlavor::Cy0, int(4))).unwrap();
            if let Ok(inv) = unit.invert() {
                prop_assert_eq!(unit.mul(&inv).unwrap(), NovikovElement::one(RingFlavor::Cy0, int(4)));
            } else {
                prop_assert!(unit.valuation() != Some(int(0)));
            }
        }
    }
}
