//! Closed-form index, degree, virtual dimension and orientation sign
//! arithmetic for moduli spaces of holomorphic discs with corners at
//! transverse double points.
//!
//! Every sign is the parity of an exact integer expression. Index sets
//! `I ⊆ {0,…,k}` of corners are passed as maps from marked-point index to
//! the value `η_{α(i)}` at that corner.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::{Error, Rational, Result};

/// `(-1)^e` as `±1`.
pub fn parity_sign(e: i64) -> i8 {
    if e.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

fn missing(what: &str) -> Error {
    Error::MissingParameter(what.to_string())
}

/// The index `η_{(p_-,p_+)}` of a double point from its Kähler angle data.
///
/// The angles are `r·π`, so `r_plus[j] - r_minus[j]` must not be an
/// integer. The value is `n + Σ_j ⌊r⁺_j − r⁻_j⌋`.
pub fn eta_from_phases(n: usize, r_minus: &[Rational], r_plus: &[Rational]) -> Result<i64> {
    if r_minus.len() != n || r_plus.len() != n {
        return Err(Error::InvalidInput(format!(
            "expected {n} phases on each side, found {} and {}",
            r_minus.len(),
            r_plus.len()
        )));
    }
    let mut eta = n as i64;
    for (j, (m, p)) in r_minus.iter().zip(r_plus).enumerate() {
        let d = p - m;
        if d.is_integer() {
            return Err(Error::DegeneratePhase(j));
        }
        let fl = d.floor().to_integer();
        eta += fl
            .to_i64()
            .ok_or_else(|| Error::InvalidInput(format!("phase difference too large at {j}")))?;
    }
    Ok(eta)
}

/// Both indices `(η_{(p_-,p_+)}, η_{(p_+,p_-)})` of a double point. The pair
/// always sums to `n`; this is asserted.
pub fn eta_pair(n: usize, r_minus: &[Rational], r_plus: &[Rational]) -> Result<(i64, i64)> {
    let a = eta_from_phases(n, r_minus, r_plus)?;
    let b = eta_from_phases(n, r_plus, r_minus)?;
    assert_eq!(a + b, n as i64, "η pairing must sum to n");
    Ok((a, b))
}

/// Where a singular simplex `f: Δ_a → T × (L ⊔ R)` lands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftTarget {
    /// The immersed manifold `L` of dimension `n`.
    Manifold { n: i64 },
    /// A double point with index `η`.
    DoublePoint { eta: i64 },
    /// `T × L` for a family parametrised by `T`.
    FamilyManifold { dim_t: i64, n: i64 },
    /// `T × {(p_-,p_+)}` for a family parametrised by `T`.
    FamilyDoublePoint { dim_t: i64, eta: i64 },
}

/// The shifted cohomological degree of a singular `a`-simplex.
pub fn shifted_degree(target: ShiftTarget, a: i64) -> i64 {
    match target {
        ShiftTarget::Manifold { n } => n - a - 1,
        ShiftTarget::DoublePoint { eta } => eta - a - 1,
        ShiftTarget::FamilyManifold { dim_t, n } => dim_t + n - a - 1,
        ShiftTarget::FamilyDoublePoint { dim_t, eta } => dim_t + eta - a - 1,
    }
}

/// Which virtual dimension formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VdimKind {
    /// Disc moduli space with `k+1` marked points and corners on `I`.
    Main,
    /// Disc moduli space cut down by singular chains `f_1,…,f_k`.
    WithChains,
    /// The space with one input slot left open at position `i`.
    Partial,
    /// Main space times the kernels at the corners.
    Modified,
    /// Modified space with chains.
    ModifiedChains,
    /// Main space over a family of almost complex structures.
    Family,
    /// Family space with chains.
    FamilyChains,
    /// Shifted degree `1 − μ_L(β) + Σ deg f_i` of a virtual chain.
    VirtualChain,
}

impl VdimKind {
    pub const ALL: [VdimKind; 8] = [
        VdimKind::Main,
        VdimKind::WithChains,
        VdimKind::Partial,
        VdimKind::Modified,
        VdimKind::ModifiedChains,
        VdimKind::Family,
        VdimKind::FamilyChains,
        VdimKind::VirtualChain,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            VdimKind::Main => "main",
            VdimKind::WithChains => "withChains",
            VdimKind::Partial => "partial",
            VdimKind::Modified => "modified",
            VdimKind::ModifiedChains => "modifiedChains",
            VdimKind::Family => "family",
            VdimKind::FamilyChains => "familyChains",
            VdimKind::VirtualChain => "virtualChain",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown vdim kind {s:?}")))
    }
}

/// Inputs to [`vdim_formulas`]. Fields not used by a kind are ignored;
/// fields a kind needs must be set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VdimParams {
    pub n: Option<i64>,
    /// Maslov index `μ_L(β)`; always even.
    pub maslov: Option<i64>,
    pub k: Option<i64>,
    /// `η_{α(i)}` for `i ∈ I` (main and family kinds).
    pub eta_in_i: Vec<i64>,
    /// `deg f_1,…,deg f_k`.
    pub degs: Vec<i64>,
    /// Whether `0 ∈ I` (chain kinds) or `0 ∈ I₁` (partial).
    pub zero_in_i: Option<bool>,
    /// `η_{α(0)}`, required when `0 ∈ I`.
    pub eta_zero: Option<i64>,
    pub dim_t: Option<i64>,
    /// Open slot position for the partial kind.
    pub i: Option<i64>,
    pub k2: Option<i64>,
    /// Whether `i ∈ I₁` for the partial kind.
    pub i_in_i1: Option<bool>,
    /// `η_{α₁(i)}`, required when `i ∈ I₁`.
    pub eta_slot: Option<i64>,
}

fn need<T: Copy>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| missing(what))
}

fn even_maslov(p: &VdimParams) -> Result<i64> {
    let m = need(p.maslov, "maslov")?;
    if m.is_odd() {
        return Err(Error::InvalidInput(format!("Maslov index {m} is odd")));
    }
    Ok(m)
}

fn corner_zero(p: &VdimParams) -> Result<i64> {
    match need(p.zero_in_i, "zero_in_i")? {
        true => need(p.eta_zero, "eta_zero"),
        false => Ok(0),
    }
}

/// Evaluates one closed-form virtual dimension or chain degree.
pub fn vdim_formulas(kind: VdimKind, p: &VdimParams) -> Result<i64> {
    let deg_sum: i64 = p.degs.iter().sum();
    let eta_sum: i64 = p.eta_in_i.iter().sum();
    Ok(match kind {
        VdimKind::Main => {
            even_maslov(p)? + need(p.k, "k")? - 2 + need(p.n, "n")? - eta_sum
        }
        VdimKind::Modified => even_maslov(p)? + need(p.k, "k")? - 2 + need(p.n, "n")?,
        VdimKind::Family => {
            even_maslov(p)? + need(p.k, "k")? - 2 + need(p.n, "n")? - eta_sum
                + need(p.dim_t, "dim_t")?
        }
        VdimKind::WithChains => even_maslov(p)? - 2 + need(p.n, "n")? - deg_sum - corner_zero(p)?,
        VdimKind::ModifiedChains => even_maslov(p)? - 2 + need(p.n, "n")? - deg_sum,
        VdimKind::FamilyChains => {
            even_maslov(p)? - 2 + need(p.dim_t, "dim_t")? + need(p.n, "n")? - deg_sum
                - corner_zero(p)?
        }
        VdimKind::VirtualChain => 1 - even_maslov(p)? + deg_sum,
        VdimKind::Partial => {
            let k = need(p.k, "k")?;
            let i = need(p.i, "i")?;
            let k2 = need(p.k2, "k2")?;
            if k2 < 0 || i < 1 || i + k2 - 1 > k || p.degs.len() as i64 != k {
                return Err(Error::InvalidInput(format!(
                    "partial needs 1 ≤ i, i+k2−1 ≤ k and k degrees (i={i}, k2={k2}, k={k}, {} degrees)",
                    p.degs.len()
                )));
            }
            let before: i64 = p.degs[..(i - 1) as usize].iter().sum();
            let after: i64 = p.degs[(i + k2 - 1) as usize..].iter().sum();
            let slot = match need(p.i_in_i1, "i_in_i1")? {
                true => need(p.eta_slot, "eta_slot")?,
                false => 0,
            };
            even_maslov(p)? - 1 + need(p.n, "n")? - before - after - corner_zero(p)? - slot
        }
    })
}

/// Which orientation comparison sign `ζ_1,…,ζ_5` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ZetaKind {
    /// Boundary of the main disc space as a fibre product.
    Zeta1,
    /// The same boundary with the fibre product in the opposite order.
    Zeta2,
    /// Chain space as a fibre product of the main space with simplices.
    Zeta3,
    /// Boundary of the family space.
    Zeta4,
    /// Family chain space as a fibre product.
    Zeta5,
}

impl ZetaKind {
    pub const ALL: [ZetaKind; 5] = [
        ZetaKind::Zeta1,
        ZetaKind::Zeta2,
        ZetaKind::Zeta3,
        ZetaKind::Zeta4,
        ZetaKind::Zeta5,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ZetaKind::Zeta1 => "zeta1",
            ZetaKind::Zeta2 => "zeta2",
            ZetaKind::Zeta3 => "zeta3",
            ZetaKind::Zeta4 => "zeta4",
            ZetaKind::Zeta5 => "zeta5",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown zeta kind {s:?}")))
    }
}

/// Parameters of a sign formula. Only the fields a formula reads are
/// required.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignQuery {
    pub n: Option<i64>,
    /// Insertion position, `1 ≤ i ≤ k₁`.
    pub i: Option<i64>,
    /// Face index of a simplex.
    pub j: Option<i64>,
    pub k: Option<i64>,
    pub k1: Option<i64>,
    pub k2: Option<i64>,
    pub dim_t: Option<i64>,
    /// `deg f_1,…,deg f_k`.
    pub degs: Vec<i64>,
    /// The corner set `I` with `η_{α(i)}` for each `i ∈ I`.
    pub eta: BTreeMap<i64, i64>,
    /// Whether the node is a corner of the outer disc (`i ∈ I₁`).
    pub i_in_i1: bool,
    /// Whether the node is a corner of the inner disc (`0 ∈ I₂`).
    pub zero_in_i2: bool,
    /// `η_{α₁(i)}` at the node, needed when `i ∈ I₁`.
    pub eta_node: Option<i64>,
    /// Degree of an inserted chain.
    pub deg_f: Option<i64>,
}

impl SignQuery {
    /// `Σ_{j ∈ I, lo ≤ j < hi, j ≠ 0} η_{α(j)}`.
    fn eta_between(&self, lo: i64, hi: i64) -> i64 {
        self.eta
            .range(lo.max(1)..hi.max(lo.max(1)))
            .map(|(_, v)| *v)
            .sum()
    }

    /// `Σ_{l=lo}^{hi} deg f_l` with 1-based indices.
    fn deg_between(&self, lo: i64, hi: i64) -> Result<i64> {
        if lo > hi {
            return Ok(0);
        }
        if lo < 1 || hi as usize > self.degs.len() {
            return Err(missing(&format!("deg f_{lo}..deg f_{hi}")));
        }
        Ok(self.degs[(lo - 1) as usize..hi as usize].iter().sum())
    }

    fn check_split(&self) -> Result<(i64, i64, i64)> {
        let n = need(self.n, "n")?;
        let i = need(self.i, "i")?;
        let k2 = need(self.k2, "k2")?;
        if i < 1 {
            return Err(Error::InvalidInput(format!("insertion position i = {i} < 1")));
        }
        if let (Some(k), Some(k1)) = (self.k, self.k1) {
            if k1 + k2 != k + 1 {
                return Err(Error::InvalidInput(format!("k1 + k2 = {} ≠ k + 1 = {}", k1 + k2, k + 1)));
            }
        }
        if let Some(k1) = self.k1 {
            if i > k1 {
                return Err(Error::InvalidInput(format!("i = {i} > k1 = {k1}")));
            }
        }
        if let Some(k) = self.k {
            if let Some((&top, _)) = self.eta.iter().next_back() {
                if top > k || self.eta.keys().any(|&x| x < 0) {
                    return Err(Error::InvalidInput(format!("corner index outside 0..={k}")));
                }
            }
        }
        Ok((n, i, k2))
    }

    /// `Some(η_{α₁(i)})` in the node-at-corner case, `None` in the
    /// node-on-`L` case.
    fn node_case(&self, formula: &str) -> Result<Option<i64>> {
        match (self.i_in_i1, self.zero_in_i2) {
            (false, false) => Ok(None),
            (true, true) => need(self.eta_node, "eta_node").map(Some),
            _ => Err(Error::UndefinedSign(format!(
                "{formula}: i∈I₁ = {}, 0∈I₂ = {}; the fibre product is empty",
                self.i_in_i1, self.zero_in_i2
            ))),
        }
    }
}

fn zeta1_exponent(q: &SignQuery, formula: &str) -> Result<i64> {
    let (n, i, k2) = q.check_split()?;
    let left = i + q.eta_between(1, i);
    let inner = 1 + k2 + q.eta_between(i, i + k2);
    Ok(match q.node_case(formula)? {
        None => n + left * inner,
        Some(eta_node) => n + left * (eta_node + inner),
    })
}

fn zeta2_exponent(q: &SignQuery) -> Result<i64> {
    let (n, i, k2) = q.check_split()?;
    let k1 = need(q.k1, "k1")?;
    let head = n + i + q.eta_between(1, i);
    let mid = k2 + q.eta_between(i, i + k2);
    let tail = k1 + i + q.eta_between(i + k2, i64::MAX);
    Ok(match q.node_case("zeta2")? {
        None => {
            let zero = q.eta.get(&0).copied().unwrap_or(0);
            head + mid * (tail + zero)
        }
        Some(eta_node) => {
            let eta_partner = n - eta_node;
            head + (eta_node + mid) * (eta_partner + tail)
        }
    })
}

fn zeta_chain_exponent(q: &SignQuery, middle_coeff: i64) -> Result<i64> {
    let n = need(q.n, "n")?;
    let k = need(q.k, "k")?;
    if q.degs.len() as i64 != k {
        return Err(missing(&format!("{k} chain degrees (found {})", q.degs.len())));
    }
    if q.eta.keys().any(|&x| x < 0 || x > k) {
        return Err(Error::InvalidInput(format!("corner index outside 0..={k}")));
    }
    let deg = |l: i64| q.degs[(l - 1) as usize];
    let mut e1 = 0i64;
    for (&i, &eta_i) in q.eta.range(1..) {
        let chains: i64 = (1..=i).map(|j| deg(j) + 1).sum();
        e1 += (n - eta_i) * (chains - q.eta_between(1, i + 1));
    }
    let weighted: i64 = (1..=k).map(|i| (k - i) * (deg(i) + 1)).sum();
    let weighted_eta: i64 = q.eta.range(1..).map(|(&i, &v)| (k - i) * v).sum();
    let e2 = middle_coeff * (weighted - weighted_eta);
    let e3 = match q.eta.get(&0) {
        None => 0,
        Some(&eta0) => {
            let all: i64 = (1..=k).map(|i| deg(i) + 1).sum();
            eta0 * (all - q.eta_between(1, k + 1))
        }
    };
    Ok(e1 + e2 + e3)
}

/// Evaluates `ζ_1,…,ζ_5`. Inconsistent node membership flags (exactly one
/// of `i ∈ I₁`, `0 ∈ I₂`) describe an empty fibre product, where the sign
/// is undefined.
pub fn sign_zeta(kind: ZetaKind, q: &SignQuery) -> Result<i8> {
    let e = match kind {
        ZetaKind::Zeta1 => zeta1_exponent(q, "zeta1")?,
        ZetaKind::Zeta4 => need(q.dim_t, "dim_t")? + zeta1_exponent(q, "zeta4")?,
        ZetaKind::Zeta2 => zeta2_exponent(q)?,
        ZetaKind::Zeta3 => zeta_chain_exponent(q, need(q.n, "n")? + 1)?,
        ZetaKind::Zeta5 => {
            zeta_chain_exponent(q, need(q.dim_t, "dim_t")? + need(q.n, "n")? + 1)?
        }
    };
    Ok(parity_sign(e))
}

/// The chain degrees at which `ζ_3` is normalised to `+1`: `deg f_i = −1`
/// off corners and `η_{α(i)} − 1` at corners `i ∈ I`, `i > 0`.
pub fn identity_chain_degrees(k: i64, eta: &BTreeMap<i64, i64>) -> Vec<i64> {
    (1..=k)
        .map(|i| eta.get(&i).map_or(-1, |e| e - 1))
        .collect()
}

/// Signs in the boundary formulas for chain moduli spaces and their
/// virtual chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BoundaryKind {
    /// Face `j` of the simplex at slot `i`.
    Face,
    /// Disc bubbling at slots `i,…,i+k₂−1`.
    Split,
    /// Inserting a chain `f` at slot `i`.
    Insert,
    /// Bubbling on virtual chains.
    VcSplit,
    /// Bubbling on virtual chains over the family `[0,1]`.
    FamilySplit,
}

impl BoundaryKind {
    pub const ALL: [BoundaryKind; 5] = [
        BoundaryKind::Face,
        BoundaryKind::Split,
        BoundaryKind::Insert,
        BoundaryKind::VcSplit,
        BoundaryKind::FamilySplit,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            BoundaryKind::Face => "face",
            BoundaryKind::Split => "split",
            BoundaryKind::Insert => "insert",
            BoundaryKind::VcSplit => "vcSplit",
            BoundaryKind::FamilySplit => "familySplit",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown boundary kind {s:?}")))
    }
}

/// Evaluates a boundary or insertion sign. Only `n`, `i`, `j`, `k₂`,
/// `deg_f` and the degree prefix are read.
pub fn sign_boundary_insertion(kind: BoundaryKind, q: &SignQuery) -> Result<i8> {
    let i = need(q.i, "i")?;
    let prefix = q.deg_between(1, i - 1)?;
    let e = match kind {
        BoundaryKind::Face => need(q.j, "j")? + 1 + prefix,
        BoundaryKind::Split => {
            let k2 = need(q.k2, "k2")?;
            need(q.n, "n")? + (1 + prefix) * (1 + q.deg_between(i, i + k2 - 1)?)
        }
        BoundaryKind::Insert => (1 + need(q.deg_f, "deg_f")?) * (1 + prefix),
        BoundaryKind::VcSplit => need(q.n, "n")? + 1 + prefix,
        BoundaryKind::FamilySplit => need(q.n, "n")? + prefix,
    };
    Ok(parity_sign(e))
}

/// Sign identities for fibre products of oriented Kuranishi spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FibreKind {
    /// `∂(X₁ ×_Y X₂) ⊃ ± X₁ ×_Y ∂X₂`.
    BoundaryLeft,
    /// `X₁ ×_Y X₂ = ± X₂ ×_Y X₁`.
    Swap,
    /// `X₁ ×_{Y₁×Y₂} (X₂ × X₃) = ± (X₁ ×_{Y₁} X₂) ×_{Y₂} X₃`.
    AssocRegroup,
}

impl FibreKind {
    pub const ALL: [FibreKind; 3] = [FibreKind::BoundaryLeft, FibreKind::Swap, FibreKind::AssocRegroup];

    pub fn tag(self) -> &'static str {
        match self {
            FibreKind::BoundaryLeft => "boundaryLeft",
            FibreKind::Swap => "swap",
            FibreKind::AssocRegroup => "assocRegroup",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown fibre-product kind {s:?}")))
    }
}

/// Dimensions entering a fibre-product sign.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FibreDims {
    pub vdim_x1: Option<i64>,
    pub vdim_x2: Option<i64>,
    pub dim_y: Option<i64>,
    pub dim_y1: Option<i64>,
    pub dim_y2: Option<i64>,
}

/// Evaluates a fibre-product sign.
pub fn sign_fibre_product(kind: FibreKind, d: &FibreDims) -> Result<i8> {
    let e = match kind {
        FibreKind::BoundaryLeft => need(d.vdim_x1, "vdim_x1")? + need(d.dim_y, "dim_y")?,
        FibreKind::Swap => {
            let y = need(d.dim_y, "dim_y")?;
            (need(d.vdim_x1, "vdim_x1")? - y) * (need(d.vdim_x2, "vdim_x2")? - y)
        }
        FibreKind::AssocRegroup => {
            need(d.dim_y2, "dim_y2")? * (need(d.dim_y1, "dim_y1")? + need(d.vdim_x2, "vdim_x2")?)
        }
    };
    Ok(parity_sign(e))
}
