//! The JSON presentation document: parsing, validation against the library
//! types, and canonical serialization.
//!
//! Rationals travel as reduced strings `"p/q"` (or `"p"`), never as
//! floats. Every label a table, element or morphism refers to must be
//! declared in the relevant basis.

use std::collections::BTreeMap;
use std::fmt;

use lagfloer::floer::{DoublePoint, LagrangianPresentation};
use lagfloer::gradedcore::qvec_unit;
use lagfloer::transfer::GeoData;
use lagfloer::{
    parse_rational, Energy, EnergyMonoid, Error, GradedSpace, NVec, OperationSystem, Rational, RingFlavor, Role,
};
use serde::{Deserialize, Serialize};

/// Malformed input. Every variant maps to exit code 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// The text is not a well-formed document.
    Parse(String),
    /// A label is used but never declared.
    Reference(String),
    /// A coefficient or key is outside the declared ring.
    Flavor(String),
    /// Structurally valid JSON with invalid content.
    Invalid(String),
    /// Bad command-line usage.
    Usage(String),
    /// A file could not be read or written.
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Reference(m) => write!(f, "reference error: {m}"),
            CliError::Flavor(m) => write!(f, "flavor violation: {m}"),
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    /// Wraps a library error raised while interpreting `field`.
    pub fn from_lib(field: &str, e: Error) -> CliError {
        let ctx = |m: String| if field.is_empty() { m } else { format!("{field}: {m}") };
        match e {
            Error::FlavorViolation(m) => CliError::Flavor(ctx(m)),
            Error::UnknownBasis(m) => CliError::Reference(ctx(format!("undeclared label {m:?}"))),
            other => CliError::Invalid(ctx(other.to_string())),
        }
    }
}

/// An energy `(λ, μ)`.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct EnergyRecord {
    pub lambda: String,
    #[serde(default)]
    pub mu: i64,
}

/// One basis element.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct BasisRecord {
    pub label: String,
    pub degree: i64,
}

/// `coeff · output` at the input tuple `inputs`.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct EntryRecord {
    pub inputs: Vec<String>,
    pub output: String,
    pub coeff: String,
}

fn default_role() -> String {
    Role::Algebra.tag().to_string()
}

/// The sparse table of arity `k` at energy `(λ, μ)`.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct TableRecord {
    #[serde(default = "default_role")]
    pub role: String,
    pub k: usize,
    pub lambda: String,
    #[serde(default)]
    pub mu: i64,
    pub entries: Vec<EntryRecord>,
}

/// One term `coeff · T^λ e^μ · label` of a vector.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct TermRecord {
    pub label: String,
    pub lambda: String,
    #[serde(default)]
    pub mu: i64,
    pub coeff: String,
}

/// A morphism or homotopy out of the document's space.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct MorphismRecord {
    /// The target basis; absent when it equals the document basis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_basis: Option<Vec<BasisRecord>>,
    pub tables: Vec<TableRecord>,
}

/// Phase data `r⁻`, `r⁺` with angles `r·π`.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct PhasesRecord {
    pub minus: Vec<String>,
    pub plus: Vec<String>,
}

/// One ordered double point `(p_-, p_+)`.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct DoublePointRecord {
    pub minus: String,
    pub plus: String,
    pub eta: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<PhasesRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift_c: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regrade_d: Option<i64>,
}

/// Homology ranks and double points of an immersed Lagrangian.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct PresentationRecord {
    pub n: i64,
    pub homology: BTreeMap<i64, usize>,
    #[serde(default)]
    pub double_points: Vec<DoublePointRecord>,
}

/// Filtration data for the geometric tree construction.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct GeoRecord {
    /// Filtration level of every basis label.
    pub levels: BTreeMap<String, i64>,
    /// The level up to which the stored operations are defined.
    pub data_level: i64,
    /// The ambient dimension `n`, entering only through its parity.
    pub parity: i64,
}

/// A presentation document as it appears on disk.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PresentationDocument {
    pub flavor: String,
    pub cutoff: String,
    #[serde(default)]
    pub monoid: Vec<EnergyRecord>,
    #[serde(default)]
    pub basis: Vec<BasisRecord>,
    #[serde(default)]
    pub tables: Vec<TableRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub presentation: Option<PresentationRecord>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub elements: BTreeMap<String, Vec<TermRecord>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub morphisms: BTreeMap<String, MorphismRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoRecord>,
    /// Command output attached to a document; ignored on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
}

/// A document resolved into library objects.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub system: OperationSystem,
    pub presentation: Option<LagrangianPresentation>,
    pub elements: BTreeMap<String, NVec>,
    pub morphisms: BTreeMap<String, OperationSystem>,
    pub geo: Option<(GeoData, i64)>,
    pub geo_record: Option<GeoRecord>,
}

impl Loaded {
    pub fn space(&self) -> &GradedSpace {
        self.system.space()
    }

    /// The named element, or a reference error.
    pub fn element(&self, name: &str) -> Result<&NVec, CliError> {
        self.elements
            .get(name)
            .ok_or_else(|| CliError::Reference(format!("elements: undeclared element {name:?}")))
    }

    /// The named morphism, or a reference error.
    pub fn morphism(&self, name: &str) -> Result<&OperationSystem, CliError> {
        self.morphisms
            .get(name)
            .ok_or_else(|| CliError::Reference(format!("morphisms: undeclared morphism {name:?}")))
    }

    /// The named element, or the zero vector when `name` is absent.
    pub fn element_or_zero(&self, name: Option<&str>) -> Result<NVec, CliError> {
        match name {
            Some(n) => self.element(n).cloned(),
            None => Ok(NVec::zero(self.system.flavor(), self.system.cutoff().clone())),
        }
    }

    /// Serializes back to a document.
    pub fn to_document(&self) -> PresentationDocument {
        to_document(
            &self.system,
            self.presentation.as_ref(),
            &self.elements,
            &self.morphisms,
            self.geo_record.clone(),
        )
    }
}

/// Parses a rational that must already be in lowest terms.
pub fn rat(s: &str, field: &str) -> Result<Rational, CliError> {
    let q = parse_rational(s).map_err(|e| CliError::Invalid(format!("{field}: {e}")))?;
    if q.to_string() != s.trim() {
        return Err(CliError::Invalid(format!("{field}: {s:?} is not reduced; write {q}")));
    }
    Ok(q)
}

fn energy(lambda: &str, mu: i64, field: &str) -> Result<Energy, CliError> {
    Ok(Energy::new(rat(lambda, &format!("{field}.lambda"))?, mu))
}

fn index(space: &GradedSpace, label: &str, field: &str) -> Result<usize, CliError> {
    space
        .index_of(label)
        .map_err(|_| CliError::Reference(format!("{field}: undeclared label {label:?}")))
}

fn space_of(basis: &[BasisRecord], field: &str) -> Result<GradedSpace, CliError> {
    GradedSpace::new(basis.iter().map(|b| (b.label.clone(), b.degree))).map_err(|e| CliError::from_lib(field, e))
}

fn role_of(tables: &[TableRecord], default: Role, field: &str) -> Result<Role, CliError> {
    let mut role = None;
    for (i, t) in tables.iter().enumerate() {
        let r = Role::from_tag(&t.role).map_err(|e| CliError::from_lib(&format!("{field}[{i}].role"), e))?;
        match role {
            None => role = Some(r),
            Some(r0) if r0 != r => {
                return Err(CliError::Invalid(format!("{field}[{i}].role: {r} mixed with {r0}")));
            }
            _ => {}
        }
    }
    Ok(role.unwrap_or(default))
}

fn fill_tables(sys: &mut OperationSystem, tables: &[TableRecord], field: &str) -> Result<(), CliError> {
    let source = sys.source().clone();
    let target = sys.target().clone();
    for (ti, t) in tables.iter().enumerate() {
        let here = format!("{field}[{ti}]");
        let e = energy(&t.lambda, t.mu, &here)?;
        for (ei, entry) in t.entries.iter().enumerate() {
            let at = format!("{here}.entries[{ei}]");
            if entry.inputs.len() != t.k {
                return Err(CliError::Invalid(format!(
                    "{at}.inputs: {} inputs in a table of arity {}",
                    entry.inputs.len(),
                    t.k
                )));
            }
            let ins: Vec<usize> = entry
                .inputs
                .iter()
                .enumerate()
                .map(|(ii, l)| index(&source, l, &format!("{at}.inputs[{ii}]")))
                .collect::<Result<_, _>>()?;
            let out = index(&target, &entry.output, &format!("{at}.output"))?;
            let c = rat(&entry.coeff, &format!("{at}.coeff"))?;
            sys.set_entry(e.clone(), &ins, out, c).map_err(|err| CliError::from_lib(&at, err))?;
        }
    }
    Ok(())
}

fn vector(terms: &[TermRecord], space: &GradedSpace, flavor: RingFlavor, cutoff: &Rational, field: &str) -> Result<NVec, CliError> {
    let mut v = NVec::zero(flavor, cutoff.clone());
    for (i, t) in terms.iter().enumerate() {
        let at = format!("{field}[{i}]");
        let e = energy(&t.lambda, t.mu, &at)?;
        let idx = index(space, &t.label, &format!("{at}.label"))?;
        let c = rat(&t.coeff, &format!("{at}.coeff"))?;
        let term = NVec::from_qvec(e, qvec_unit(idx), flavor, cutoff.clone())
            .map_err(|err| CliError::from_lib(&at, err))?
            .scale(&c);
        v = v.add(&term).map_err(|err| CliError::from_lib(&at, err))?;
    }
    Ok(v)
}

fn double_point(r: &DoublePointRecord, field: &str) -> Result<DoublePoint, CliError> {
    let mut dp = DoublePoint::new(r.minus.clone(), r.plus.clone(), r.eta);
    dp.epsilon = r.epsilon;
    if let Some(p) = &r.phases {
        let parse = |xs: &[String], side: &str| -> Result<Vec<Rational>, CliError> {
            xs.iter()
                .enumerate()
                .map(|(i, x)| rat(x, &format!("{field}.phases.{side}[{i}]")))
                .collect()
        };
        dp.phases = Some((parse(&p.minus, "minus")?, parse(&p.plus, "plus")?));
    }
    dp.a_value = r.a_value.as_deref().map(|a| rat(a, &format!("{field}.a_value"))).transpose()?;
    dp.shift_c = r.shift_c.as_deref().map(|c| rat(c, &format!("{field}.shift_c"))).transpose()?;
    dp.regrade_d = r.regrade_d;
    Ok(dp)
}

/// Parses and validates a document.
pub fn load_str(text: &str) -> Result<(PresentationDocument, Loaded), CliError> {
    let doc: PresentationDocument = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let loaded = resolve(&doc)?;
    Ok((doc, loaded))
}

/// Resolves a parsed document into library objects.
pub fn resolve(doc: &PresentationDocument) -> Result<Loaded, CliError> {
    let flavor = RingFlavor::from_tag(&doc.flavor).map_err(|e| CliError::from_lib("flavor", e))?;
    let cutoff = rat(&doc.cutoff, "cutoff")?;
    let gens: Vec<Energy> = doc
        .monoid
        .iter()
        .enumerate()
        .map(|(i, g)| energy(&g.lambda, g.mu, &format!("monoid[{i}]")))
        .collect::<Result<_, _>>()?;
    let monoid = EnergyMonoid::new(gens).map_err(|e| CliError::from_lib("monoid", e))?;
    let role = role_of(&doc.tables, Role::Algebra, "tables")?;
    let (mut system, presentation) = match &doc.presentation {
        Some(p) => {
            if role != Role::Algebra {
                return Err(CliError::Invalid(format!("tables: a presentation carries algebra tables, not {role}")));
            }
            let dps: Vec<DoublePoint> = p
                .double_points
                .iter()
                .enumerate()
                .map(|(i, r)| double_point(r, &format!("presentation.double_points[{i}]")))
                .collect::<Result<_, _>>()?;
            let pres = LagrangianPresentation::new(p.n, p.homology.clone(), dps, flavor, monoid.clone(), cutoff.clone())
                .map_err(|e| CliError::from_lib("presentation", e))?;
            if !doc.basis.is_empty() {
                let declared = space_of(&doc.basis, "basis")?;
                if &declared != pres.space() {
                    let want: Vec<String> =
                        basis_records(pres.space()).iter().map(|b| format!("{}:{}", b.label, b.degree)).collect();
                    return Err(CliError::Invalid(format!(
                        "basis: differs from the presentation generators [{}]",
                        want.join(", ")
                    )));
                }
            }
            (pres.algebra().clone(), Some(pres))
        }
        None => {
            let space = space_of(&doc.basis, "basis")?;
            (OperationSystem::new(role, space.clone(), space, monoid.clone(), flavor, cutoff.clone()), None)
        }
    };
    fill_tables(&mut system, &doc.tables, "tables")?;
    let presentation = match presentation {
        Some(p) => Some(p.with_algebra(system.clone()).map_err(|e| CliError::from_lib("tables", e))?),
        None => None,
    };
    let space = system.space().clone();
    let mut elements = BTreeMap::new();
    for (name, terms) in &doc.elements {
        elements.insert(name.clone(), vector(terms, &space, flavor, &cutoff, &format!("elements.{name}"))?);
    }
    let mut morphisms = BTreeMap::new();
    for (name, m) in &doc.morphisms {
        let field = format!("morphisms.{name}");
        let target = match &m.target_basis {
            Some(b) => space_of(b, &format!("{field}.target_basis"))?,
            None => space.clone(),
        };
        let role = role_of(&m.tables, Role::Morphism, &format!("{field}.tables"))?;
        let mut f = OperationSystem::new(role, space.clone(), target, monoid.clone(), flavor, cutoff.clone());
        fill_tables(&mut f, &m.tables, &format!("{field}.tables"))?;
        morphisms.insert(name.clone(), f);
    }
    let geo = match &doc.geo {
        Some(g) => {
            let mut levels = vec![None; space.dim()];
            for (label, lv) in &g.levels {
                levels[index(&space, label, "geo.levels")?] = Some(*lv);
            }
            let levels: Vec<i64> = levels
                .iter()
                .enumerate()
                .map(|(i, l)| l.ok_or_else(|| CliError::Invalid(format!("geo.levels: no level for {:?}", space.label(i)))))
                .collect::<Result<_, _>>()?;
            Some((
                GeoData {
                    tables: system.clone(),
                    levels,
                    data_level: g.data_level,
                },
                g.parity,
            ))
        }
        None => None,
    };
    Ok(Loaded {
        system,
        presentation,
        elements,
        morphisms,
        geo,
        geo_record: doc.geo.clone(),
    })
}

pub fn basis_records(space: &GradedSpace) -> Vec<BasisRecord> {
    space
        .labels()
        .iter()
        .zip(space.degrees())
        .map(|(l, d)| BasisRecord {
            label: l.clone(),
            degree: *d,
        })
        .collect()
}

/// The tables of `sys`, one record per nonzero key in key order.
pub fn table_records(sys: &OperationSystem) -> Vec<TableRecord> {
    let mut out = Vec::new();
    for ((k, e), t) in sys.tables() {
        let mut entries = Vec::new();
        for (ins, v) in t.entries() {
            for (o, q) in v {
                entries.push(EntryRecord {
                    inputs: ins.iter().map(|&i| sys.source().label(i).to_string()).collect(),
                    output: sys.target().label(*o).to_string(),
                    coeff: q.to_string(),
                });
            }
        }
        if !entries.is_empty() {
            out.push(TableRecord {
                role: sys.role().tag().to_string(),
                k: *k,
                lambda: e.lambda.to_string(),
                mu: e.mu,
                entries,
            });
        }
    }
    out
}

/// The terms of `v`, ordered by energy and basis index.
pub fn term_records(v: &NVec, space: &GradedSpace) -> Vec<TermRecord> {
    let mut out = Vec::new();
    for (e, comp) in v.components() {
        for (i, q) in comp {
            out.push(TermRecord {
                label: space.label(*i).to_string(),
                lambda: e.lambda.to_string(),
                mu: e.mu,
                coeff: q.to_string(),
            });
        }
    }
    out
}

fn double_point_record(dp: &DoublePoint) -> DoublePointRecord {
    let strings = |xs: &[Rational]| xs.iter().map(|x| x.to_string()).collect();
    DoublePointRecord {
        minus: dp.minus.clone(),
        plus: dp.plus.clone(),
        eta: dp.eta,
        epsilon: dp.epsilon,
        phases: dp.phases.as_ref().map(|(m, p)| PhasesRecord {
            minus: strings(m),
            plus: strings(p),
        }),
        a_value: dp.a_value.as_ref().map(|a| a.to_string()),
        shift_c: dp.shift_c.as_ref().map(|c| c.to_string()),
        regrade_d: dp.regrade_d,
    }
}

pub fn morphism_record(f: &OperationSystem) -> MorphismRecord {
    MorphismRecord {
        target_basis: (f.target() != f.source()).then(|| basis_records(f.target())),
        tables: table_records(f),
    }
}

/// Builds the canonical document of an algebra with its attachments.
pub fn to_document(
    system: &OperationSystem,
    presentation: Option<&LagrangianPresentation>,
    elements: &BTreeMap<String, NVec>,
    morphisms: &BTreeMap<String, OperationSystem>,
    geo: Option<GeoRecord>,
) -> PresentationDocument {
    PresentationDocument {
        flavor: system.flavor().tag().to_string(),
        cutoff: system.cutoff().to_string(),
        monoid: system
            .monoid()
            .generators()
            .iter()
            .map(|g| EnergyRecord {
                lambda: g.lambda.to_string(),
                mu: g.mu,
            })
            .collect(),
        basis: basis_records(system.space()),
        tables: table_records(system),
        presentation: presentation.map(|p| PresentationRecord {
            n: p.n(),
            homology: p.homology().clone(),
            double_points: p.double_points().iter().map(double_point_record).collect(),
        }),
        elements: elements.iter().map(|(k, v)| (k.clone(), term_records(v, system.space()))).collect(),
        morphisms: morphisms.iter().map(|(k, f)| (k.clone(), morphism_record(f))).collect(),
        geo,
        result: None,
    }
}

/// Canonical pretty-printed JSON with a trailing newline.
pub fn to_json(doc: &PresentationDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents always serialize");
    s.push('\n');
    s
}
