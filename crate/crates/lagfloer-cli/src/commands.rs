//! Command-line definitions and dispatch.
//!
//! Each subcommand loads its inputs, calls the library, and returns either a
//! report (human text by default, JSON with `--machine`) or a new document
//! (always JSON). A report's `ok` flag selects exit code 0 or 1.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lagfloer::ainfty::{
    bar_differential, bar_differential_chain, check_homotopy, check_morphism, check_relations, compose_morphisms,
    is_weak_homotopy_equiv, BarChain, BarWord, CheckReport,
};
use lagfloer::floer::{
    acyclicity_feasible, bc_criteria, check_gauge_transport, gauge_act, hf_compute, hf_product, legendrian_validate,
    mc_residual, mc_solve, rescale_regrade, twist, union_sectors, whitney_preset, CrossEntry, CrossPair, McOutcome,
};
use lagfloer::gapped::{full_level, monoid_elements, monoid_norm, truncate_level, validate_gapped};
use lagfloer::geomsign::{
    eta_pair, shifted_degree, sign_boundary_insertion, sign_fibre_product, sign_zeta, vdim_formulas, BoundaryKind,
    FibreDims, FibreKind, ShiftTarget, SignQuery, VdimKind, VdimParams, ZetaKind,
};
use lagfloer::gradedcore::{apply_operation, cohomology_ranks, relation_defect};
use lagfloer::novikov::NovikovElement;
use lagfloer::transfer::{
    ank_from_geometric, enumerate_trees, filtration_splitting, homotopy_inverse_strict, minimal_model, splitting,
    TreeMode,
};
use lagfloer::{Energy, GradedSpace, MultiMap, NVec, OperationSystem, Rational};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::document::{
    basis_records, rat, to_document, to_json, CliError, Loaded, PresentationDocument,
};
use crate::report::{energy, nvec, obj, q, qvec, render_human, render_json};

/// Every subcommand with the library operations it exposes.
pub const COMMANDS: [(&str, &[&str]); 21] = [
    ("check", &["check_relations", "relation_defect", "validate_gapped", "bar_differential", "check_morphism", "check_homotopy"]),
    ("truncate", &["truncate_level", "monoid_elements", "monoid_norm"]),
    ("minimal-model", &["minimal_model", "splitting", "cohomology_ranks", "is_weak_homotopy_equiv"]),
    ("inverse-strict", &["homotopy_inverse_strict", "compose_morphisms"]),
    ("ank-from-geo", &["ank_from_geometric"]),
    ("twist", &["twist"]),
    ("mc-residual", &["mc_residual", "apply_operation"]),
    ("mc-solve", &["mc_solve"]),
    ("bc-criteria", &["bc_criteria"]),
    ("gauge", &["gauge_act"]),
    ("hf", &["hf_compute"]),
    ("hf-product", &["hf_product"]),
    ("union", &["union_sectors"]),
    ("rescale", &["rescale_regrade"]),
    ("legendrian-check", &["legendrian_validate"]),
    ("index", &["eta_from_phases", "shifted_degree"]),
    ("vdim", &["vdim_formulas"]),
    ("signs", &["sign_zeta", "sign_boundary_insertion", "sign_fibre_product"]),
    ("preset-whitney", &["whitney_preset"]),
    ("feasible", &["acyclicity_feasible"]),
    ("trees", &["enumerate_trees"]),
];

/// Coefficient arithmetic used by every command rather than exposed by one.
pub const ARITHMETIC: [&str; 5] = ["nov_add", "nov_mul", "nov_valuation", "nov_invert", "nov_flavor_check"];

#[derive(Parser, Debug)]
#[command(name = "lagfloer", version, about = "Exact gapped filtered A-infinity algebras and Floer cohomology of presentations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Override the energy cutoff of input documents.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub cutoff: Option<String>,
    /// Filtration level N for checks and constructions.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub level: Option<i64>,
    /// Override the ring flavor of input documents.
    #[arg(long, global = true)]
    pub flavor: Option<String>,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    pub machine: bool,
    /// Write output to a file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

/// A document path; `-` or absent reads standard input.
#[derive(Args, Debug, Clone)]
pub struct DocArg {
    pub doc: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check relations, gappedness, a morphism or a homotopy.
    Check(CheckArgs),
    /// Keep the tables within level N and cutoff E.
    Truncate(DocArg),
    /// Build the canonical model and its inclusion.
    MinimalModel(DocArg),
    /// Invert a strict surjective quasi-isomorphism.
    InverseStrict(InverseArgs),
    /// Assemble A_{N,0} operations from filtered geometric data.
    AnkFromGeo(DocArg),
    /// Twist the operations by an element.
    Twist(ElementArgs),
    /// Evaluate the Maurer-Cartan residual of an element.
    McResidual(ElementArgs),
    /// Solve the Maurer-Cartan equation energy by energy.
    McSolve(McSolveArgs),
    /// Evaluate the rank criteria for bounding cochains.
    BcCriteria(BcArgs),
    /// Apply a morphism to a bounding cochain and check transport.
    Gauge(GaugeArgs),
    /// Floer cohomology up to the cutoff.
    Hf(HfArgs),
    /// Product of two cohomology classes.
    HfProduct(HfProductArgs),
    /// Presentation of a union of two Lagrangians.
    Union(UnionArgs),
    /// Rescale and regrade double points.
    Rescale(RescaleArgs),
    /// Check Legendrian a-values and the energy lattice.
    LegendrianCheck(DocArg),
    /// Double-point indices from phases, or shifted degrees.
    Index(IndexArgs),
    /// Virtual dimension formulas.
    Vdim(VdimArgs),
    /// Orientation signs.
    Signs(SignsArgs),
    /// The Whitney sphere presentation.
    PresetWhitney(WhitneyArgs),
    /// Necessary condition for an acyclic differential.
    Feasible(DocArg),
    /// Enumerate planar rooted trees.
    Trees(TreesArgs),
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    pub doc: Option<PathBuf>,
    /// Check this morphism instead of the relations.
    #[arg(long)]
    pub morphism: Option<String>,
    /// Check this homotopy between --f and --g.
    #[arg(long)]
    pub homotopy: Option<String>,
    #[arg(long)]
    pub f: Option<String>,
    #[arg(long)]
    pub g: Option<String>,
    /// Target algebra of the morphism or homotopy.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Print the full defect table at `k:lambda:mu`.
    #[arg(long, allow_hyphen_values = true)]
    pub defect: Option<String>,
    /// Also check that the bar differential squares to zero on short words.
    #[arg(long)]
    pub bar: bool,
}

#[derive(Args, Debug)]
pub struct InverseArgs {
    pub doc: Option<PathBuf>,
    #[arg(long)]
    pub morphism: String,
    #[arg(long)]
    pub target: PathBuf,
}

#[derive(Args, Debug)]
pub struct ElementArgs {
    pub doc: Option<PathBuf>,
    #[arg(long)]
    pub element: String,
}

#[derive(Args, Debug)]
pub struct McSolveArgs {
    pub doc: Option<PathBuf>,
    /// Name under which the solution is attached to the document.
    #[arg(long, default_value = "b")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct BcArgs {
    pub doc: Option<PathBuf>,
    /// The Lagrangian is exact.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Args, Debug)]
pub struct GaugeArgs {
    pub doc: Option<PathBuf>,
    #[arg(long)]
    pub morphism: String,
    #[arg(long)]
    pub element: String,
    #[arg(long)]
    pub target: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct HfArgs {
    pub doc: Option<PathBuf>,
    /// Bounding cochain; zero when absent.
    #[arg(long)]
    pub element: Option<String>,
}

#[derive(Args, Debug)]
pub struct HfProductArgs {
    pub doc: Option<PathBuf>,
    /// Element name or basis label.
    #[arg(long)]
    pub x: String,
    /// Element name or basis label.
    #[arg(long)]
    pub y: String,
    #[arg(long)]
    pub element: Option<String>,
}

#[derive(Args, Debug)]
pub struct UnionArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// JSON file with `pairs` and `entries` on mixed generators.
    #[arg(long)]
    pub cross: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RescaleArgs {
    pub doc: Option<PathBuf>,
    /// `LABEL=c` or `LABEL=c:d`, repeatable.
    #[arg(long = "shift", allow_hyphen_values = true)]
    pub shifts: Vec<String>,
    #[arg(long)]
    pub element: Option<String>,
}

#[derive(Args, Debug)]
pub struct IndexArgs {
    #[arg(long)]
    pub n: Option<i64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub minus: Vec<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub plus: Vec<String>,
    /// manifold, double-point, family-manifold or family-double-point.
    #[arg(long)]
    pub target: Option<String>,
    /// Simplex dimension.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<i64>,
    #[arg(long)]
    pub dim_t: Option<i64>,
}

#[derive(Args, Debug)]
pub struct VdimArgs {
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub n: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub maslov: Option<i64>,
    #[arg(long)]
    pub k: Option<i64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub eta_in_i: Vec<i64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub degs: Vec<i64>,
    #[arg(long)]
    pub zero_in_i: Option<bool>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta_zero: Option<i64>,
    #[arg(long)]
    pub dim_t: Option<i64>,
    #[arg(long)]
    pub i: Option<i64>,
    #[arg(long)]
    pub k2: Option<i64>,
    #[arg(long)]
    pub i_in_i1: Option<bool>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta_slot: Option<i64>,
}

#[derive(Args, Debug)]
pub struct SignsArgs {
    /// zeta1..zeta5, face, split, insert, vcSplit, familySplit,
    /// boundaryLeft, swap or assocRegroup.
    #[arg(long)]
    pub kind: String,
    /// Corners as `i:eta,…`, or `empty`.
    #[arg(long = "I", default_value = "empty")]
    pub corners: String,
    #[arg(long)]
    pub n: Option<i64>,
    #[arg(long)]
    pub i: Option<i64>,
    #[arg(long)]
    pub j: Option<i64>,
    #[arg(long)]
    pub k: Option<i64>,
    #[arg(long)]
    pub k1: Option<i64>,
    #[arg(long)]
    pub k2: Option<i64>,
    #[arg(long)]
    pub dim_t: Option<i64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub degs: Vec<i64>,
    #[arg(long)]
    pub i_in_i1: bool,
    #[arg(long)]
    pub zero_in_i2: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub eta_node: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub deg_f: Option<i64>,
    #[arg(long)]
    pub vdim_x1: Option<i64>,
    #[arg(long)]
    pub vdim_x2: Option<i64>,
    #[arg(long)]
    pub dim_y: Option<i64>,
    #[arg(long)]
    pub dim_y1: Option<i64>,
    #[arg(long)]
    pub dim_y2: Option<i64>,
}

#[derive(Args, Debug)]
pub struct WhitneyArgs {
    #[arg(long)]
    pub n: i64,
}

#[derive(Args, Debug)]
pub struct TreesArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value = "strict")]
    pub mode: String,
    /// Low-valence vertex budget in filtered mode.
    #[arg(long, default_value_t = 0)]
    pub budget: usize,
    /// Include the bracket notation of every tree.
    #[arg(long)]
    pub list: bool,
}

/// What a command produces.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    /// A result, optionally attached to the document it concerns.
    Report {
        command: &'static str,
        doc: Option<PresentationDocument>,
        value: Value,
        ok: bool,
    },
    /// A new document, always emitted as JSON.
    Document { doc: PresentationDocument, ok: bool },
}

impl Output {
    pub fn ok(&self) -> bool {
        match self {
            Output::Report { ok, .. } | Output::Document { ok, .. } => *ok,
        }
    }

    /// The bytes to emit.
    pub fn render(&self, machine: bool) -> String {
        match self {
            Output::Document { doc, .. } => to_json(doc),
            Output::Report { command, doc, value, ok } => {
                let mut value = value.clone();
                if let Value::Object(m) = &mut value {
                    m.insert("command".into(), json!(command));
                    m.insert("status".into(), json!(if *ok { "pass" } else { "fail" }));
                }
                if !machine {
                    return render_human(&value);
                }
                match doc {
                    Some(d) => {
                        let mut d = d.clone();
                        d.result = Some(value);
                        to_json(&d)
                    }
                    None => render_json(&json!({ "result": value })),
                }
            }
        }
    }
}

/// Global options shared by every command.
struct Ctx<'a> {
    cutoff: Option<String>,
    level: Option<i64>,
    flavor: Option<String>,
    stdin: &'a mut dyn Read,
    stdin_used: bool,
}

impl Ctx<'_> {
    fn read(&mut self, path: Option<&Path>) -> Result<String, CliError> {
        match path {
            Some(p) if p != Path::new("-") => {
                std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
            }
            _ => {
                if self.stdin_used {
                    return Err(CliError::Usage("standard input can supply only one document".into()));
                }
                self.stdin_used = true;
                let mut s = String::new();
                self.stdin
                    .read_to_string(&mut s)
                    .map_err(|e| CliError::Io(format!("standard input: {e}")))?;
                Ok(s)
            }
        }
    }

    /// Reads, applies `--flavor`/`--cutoff`, and resolves a document.
    fn load(&mut self, path: Option<&Path>) -> Result<Loaded, CliError> {
        let text = self.read(path)?;
        let mut doc: PresentationDocument = serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))?;
        if let Some(f) = &self.flavor {
            doc.flavor = f.clone();
        }
        if let Some(c) = &self.cutoff {
            doc.cutoff = c.clone();
        }
        crate::document::resolve(&doc)
    }

    fn level(&self, sys: &OperationSystem) -> i64 {
        self.level.unwrap_or_else(|| full_level(sys).max(1))
    }
}

fn lib(field: &str) -> impl Fn(lagfloer::Error) -> CliError + '_ {
    move |e| CliError::from_lib(field, e)
}

fn labels(space: &GradedSpace, idx: &[usize]) -> Value {
    json!(idx.iter().map(|&i| space.label(i)).collect::<Vec<_>>())
}

fn check_json(rep: &CheckReport, space: &GradedSpace) -> Value {
    let first = rep.failures.first().map(|f| {
        obj([
            ("k", json!(f.k)),
            ("energy", energy(&f.energy)),
            ("witness", labels(space, &f.witness)),
            ("residual", qvec(&f.residual, space)),
        ])
    });
    obj([
        ("level", json!(rep.level)),
        ("cutoff", q(&rep.cutoff)),
        ("keys_checked", json!(rep.keys_checked)),
        ("failures", json!(rep.failures.len())),
        ("first_failure", first.unwrap_or(Value::Null)),
        ("passes", json!(rep.passes())),
    ])
}

fn table_json(m: &MultiMap, source: &GradedSpace, target: &GradedSpace) -> Value {
    Value::Array(
        m.entries()
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(ins, v)| obj([("inputs", labels(source, ins)), ("value", qvec(v, target))]))
            .collect(),
    )
}

fn parse_key(s: &str) -> Result<(usize, Energy), CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::Usage(format!("--defect expects k:lambda:mu, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let k = parts[0].parse().map_err(|_| bad())?;
    let lambda = rat(parts[1], "--defect")?;
    let mu = parts[2].parse().map_err(|_| bad())?;
    Ok((k, Energy::new(lambda, mu)))
}

/// Checks `d̄² = 0` on every bar word of length at most 2.
fn bar_check(alg: &OperationSystem) -> Result<Value, CliError> {
    let dim = alg.space().dim();
    let mut words: Vec<Vec<usize>> = vec![vec![]];
    words.extend((0..dim).map(|i| vec![i]));
    words.extend((0..dim).flat_map(|i| (0..dim).map(move |j| vec![i, j])));
    let one = NovikovElement::one(alg.flavor(), alg.cutoff().clone());
    for w in &words {
        let word = BarWord {
            letters: w.clone(),
            coeff: one.clone(),
        };
        let once: BarChain = bar_differential(alg, &word)
            .map_err(lib("bar"))?
            .into_iter()
            .map(|b| (b.letters, b.coeff))
            .collect();
        let twice = bar_differential_chain(alg, &once).map_err(lib("bar"))?;
        if !twice.is_empty() {
            return Ok(obj([
                ("words_checked", json!(words.len())),
                ("square_vanishes", json!(false)),
                ("first_witness", labels(alg.space(), w)),
            ]));
        }
    }
    Ok(obj([("words_checked", json!(words.len())), ("square_vanishes", json!(true))]))
}

fn target_for(ctx: &mut Ctx, l: &Loaded, f: &OperationSystem, path: Option<&Path>) -> Result<OperationSystem, CliError> {
    match path {
        Some(p) => {
            let t = ctx.load(Some(p))?;
            if t.space() != f.target() {
                return Err(CliError::Invalid("--target basis differs from the morphism target".into()));
            }
            Ok(t.system)
        }
        None if f.target() == l.space() => Ok(l.system.clone()),
        None => Err(CliError::Usage("the morphism leaves the document basis; pass --target".into())),
    }
}

fn cmd_check(ctx: &mut Ctx, a: &CheckArgs) -> Result<Output, CliError> {
    let l = ctx.load(a.doc.as_deref())?;
    let alg = &l.system;
    let level = ctx.level(alg);
    let gapped = validate_gapped(alg);
    let mut ok = gapped.passes();
    let mut out = serde_json::Map::new();
    out.insert(
        "gapped".into(),
        obj([
            (
                "keys_outside_monoid",
                Value::Array(gapped.keys_outside_monoid.iter().map(|(k, e)| json!({"k": k, "energy": energy(e)})).collect()),
            ),
            ("curvature_at_zero_energy", json!(gapped.curvature_at_zero_energy)),
            ("degree_violations", json!(gapped.degree_violations)),
            ("passes", json!(gapped.passes())),
        ]),
    );
    match (&a.morphism, &a.homotopy) {
        (Some(_), Some(_)) => return Err(CliError::Usage("pass either --morphism or --homotopy".into())),
        (None, None) => {
            let rep = check_relations(alg, level);
            ok &= rep.passes();
            out.insert("relations".into(), check_json(&rep, alg.space()));
        }
        (Some(name), None) => {
            let f = l.morphism(name)?;
            let b = target_for(ctx, &l, f, a.target.as_deref())?;
            let rep = check_morphism(f, alg, &b, level).map_err(lib("check_morphism"))?;
            ok &= rep.passes();
            out.insert("morphism".into(), check_json(&rep, alg.space()));
        }
        (None, Some(name)) => {
            let h = l.morphism(name)?;
            let (fname, gname) = match (&a.f, &a.g) {
                (Some(f), Some(g)) => (f, g),
                _ => return Err(CliError::Usage("--homotopy needs --f and --g".into())),
            };
            let (f, g) = (l.morphism(fname)?, l.morphism(gname)?);
            let b = target_for(ctx, &l, f, a.target.as_deref())?;
            let rep = check_homotopy(h, f, g, alg, &b, level).map_err(lib("check_homotopy"))?;
            ok &= rep.passes();
            out.insert("homotopy".into(), check_json(&rep, alg.space()));
        }
    }
    if let Some(key) = &a.defect {
        let (k, e) = parse_key(key)?;
        let d = relation_defect(alg, k, &e);
        out.insert(
            "defect".into(),
            obj([("k", json!(k)), ("energy", energy(&e)), ("entries", table_json(&d, alg.space(), alg.space()))]),
        );
    }
    if a.bar {
        let bar = bar_check(alg)?;
        ok &= bar["square_vanishes"] == json!(true);
        out.insert("bar".into(), bar);
    }
    Ok(Output::Report {
        command: "check",
        doc: Some(l.to_document()),
        value: Value::Object(out),
        ok,
    })
}

/// The document of `l` with its algebra replaced by `sys`.
fn replaced(l: &Loaded, sys: &OperationSystem) -> Result<PresentationDocument, CliError> {
    let pres = match &l.presentation {
        Some(p) => Some(p.clone().with_algebra(sys.clone()).map_err(lib("tables"))?),
        None => None,
    };
    Ok(to_document(sys, pres.as_ref(), &l.elements, &l.morphisms, l.geo_record.clone()))
}

fn cmd_truncate(ctx: &mut Ctx, a: &DocArg) -> Result<Output, CliError> {
    let l = ctx.load(a.doc.as_deref())?;
    let alg = &l.system;
    let level = ctx.level(alg);
    let t = truncate_level(alg, level);
    let mut budget = Vec::new();
    for e in monoid_elements(alg.monoid(), alg.cutoff()) {
        let norm = monoid_norm(alg.monoid(), &e).map_err(lib("monoid"))?;
        let top = level + 1 - norm;
        budget.push(obj([
            ("energy", energy(&e)),
            ("norm", json!(norm)),
            ("max_arity", if top >= 0 { json!(top) } else { Value::Null }),
        ]));
    }
    let mut doc = replaced(&l, &t)?;
    doc.result = Some(obj([
        ("command", json!("truncate")),
        ("level", json!(level)),
        ("cutoff", q(alg.cutoff())),
        ("tables_kept", json!(t.tables().len())),
        ("tables_dropped", json!(alg.tables().len() - t.tables().len())),
        ("budget", Value::Array(budget)),
    ]));
    Ok(Output::Document { doc, ok: true })
}

fn cmd_minimal_model(ctx: &mut Ctx, a: &DocArg) -> Result<Output, CliError> {
    let l = ctx.load(a.doc.as_deref())?;
    let alg = &l.system;
    let level = ctx.level(alg);
    let d = alg.table_or_zero(1, &Energy::zero());
    let ranks = cohomology_ranks(alg.space(), &d).map_err(lib("m_1"))?;
    let sp = splitting(alg).map_err(lib("splitting"))?;
    let (model, incl) = minimal_model(alg, level).map_err(lib("minimal_model"))?;
    let wqe = is_weak_homotopy_equiv(&incl, &model, alg).map_err(lib("is_weak_homotopy_equiv"))?;
    let mut morphisms = BTreeMap::new();
    morphisms.insert("inclusion".to_string(), incl);
    let mut doc = to_document(&model, None, &BTreeMap::new(), &morphisms, None);
    doc.result = Some(obj([
        ("command", json!("minimal-model")),
        ("level", json!(level)),
        ("cohomology_ranks", Value::Array(ranks.iter().map(|(d, r)| json!({"degree": d, "rank": r})).collect())),
        ("b_labels", json!(sp.b_space.labels())),
        ("contracted", Value::Array(sp.c_vectors.iter().map(|c| qvec(c, alg.space())).collect())),
        ("weak_equivalence", json!(wqe.is_equivalence)),
    ]));
    Ok(Output::Document {
        doc,
        ok: wqe.is_equivalence,
    })
}

fn cmd_inverse_strict(ctx: &mut Ctx, a: &InverseArgs) -> Result<Output, CliError> {
    let l = ctx.load(a.doc.as_deref())?;
    let p = l.morphism(&a.morphism)?;
    let d = target_for(ctx, &l, p, Some(&a.target))?;
    let q_map = homotopy_inverse_strict(p, &l.system, &d).map_err(lib("homotopy_inverse_strict"))?;
    let level = ctx.level(&l.system).max(full_level(&q_map));
    let rep = check_morphism(&q_map, &d, &l.system, level).map_err(lib("check_morphism"))?;
    let pq = compose_morphisms(p, &q_map).map_err(lib("compose_morphisms"))?;
    let identity = pq.linear_part() == MultiMap::identity(d.space().dim());
    let mut morphisms = BTreeMap::new();
    morphisms.insert("inverse".to_string(), q_map);
    let mut doc = to_document(&d, None, &BTreeMap::new(), &morphisms, None);
    let ok = rep.passes() && identity;
    doc.result = Some(obj([
        ("command", json!("inverse-strict")),
        ("morphism_check", check_json(&rep, d.space())),
        ("p_after_q_linear_is_identity", json!(identity)),
        ("status", json!(if ok { "pass" } else { "fail" })),
    ]));
    Ok(Output::Document { doc, ok })
}

fn cmd_ank(ctx: &mut Ctx, a: &DocArg) -> Result<Output, CliError> {
    let l = ctx.load(a.doc.as_deref())?;
    let (geo, parity) = l
        .geo
        .as_ref()
        .ok_or_else(|| CliError::Invalid("ank-from-geo needs a geo block".into()))?;
    let level = ctx.level.unwrap_or(1);
    let split = filtration_splitting(geo, level, *parity).map_err(lib("geo"))?;
    let out = ank_from_geometric(geo, &split, level, *parity).map_err(lib("ank_from_geometric"))?;
    let rep = check_relations(&out, level);
    let mut doc = to_document(&out, None, &BTreeMap::new(), &BTreeMap::new(), None);
    doc.result = Some(obj([
        ("command", json!("ank-from-geo")),
        ("level", json!(level)),
        ("parity", json!(parity)),
        ("relations", check_json(&rep, out.space())),
    ]));
    Ok(Output::Document { doc, ok: rep.passes() })
}

fn cmd_twist(ctx: &mut Ctx, a: &ElementArgs) -> Result<Output, CliError> {
    let l = ctx.load(a.doc.as_deref())?;
    let b = l.element(&a.element)?;
    let tw = twist(&l.system, b).map_err(lib("twist"))?;
    let mut doc = replaced(&l, &tw)?;
    doc.result = Some(obj([("command", json!("twist")), ("element", json!(a.element))]));
    Ok(Output::Document { doc, ok: true })
}

fn cmd_mc_residual(ctx: &mut Ctx, a: &ElementArgs) -> Result<Output, CliError> {
    let l = ctx.load(a.doc.as_deref())?;
    let b = l.element(&a.element)?;
    let (res, ok) = mc_residual(&l.system, b).map_err(lib("mc_residual"))?;
    let mut parts = Vec::new();
    for k in 0..=l.system.max_arity() {
        let v = apply_operation(&l.system, &vec![b.clone(); k]).map_err(lib("apply_operation"))?;
        if !v.is_zero() {
            parts.push(obj([("k", json!(k)), ("value", nvec(&v, l.space()))]));
        }
    }
    Ok(Output::Report {
        command: "mc-residual",
        doc: Some(l.to_document()),
        value: obj([
            ("element", json!(a.element)),
            ("residual", nvec(&res, l.space())),
            ("contributions", Value::Array(parts)),
            ("satisfied", json!(ok)),
        ]),
        ok,
    })
}

fn cmd_mc_solve(ctx: &mut Ctx, a: &McSolveArgs) -> Result<Output, CliError> {
    let mut l = ctx.load(a.doc.as_deref())?;
    match mc_solve(&l.system).map_err(lib("mc_solve"))? {
        McOutcome::Solved(bc) => {
            let value = obj([
                ("solved", json!(true)),
                ("name", json!(a.name)),
                ("b", nvec(&bc.b, l.space())),
                ("certified", json!(bc.certified)),
            ]);
            l.elements.insert(a.name.clone(), bc.b);
            Ok(Output::Report {
                command: "mc-solve",
                doc: Some(l.to_document()),
                value,
                ok: bc.certified,
            })
        }
        McOutcome::Obstructed(o) => Ok(Output::Report {
            command: "mc-solve",
            value: obj([
                ("solved", json!(false)),
                ("energy", energy(&o.energy)),
                ("degree", json!(o.degree)),
                ("residual", qvec(&o.residual, l.space())),
                ("partial", nvec(&o.partial, l.space())),
                ("note", json!(o.note)),
            ]),
            doc: Some(l.to_document()),
            ok: false,
        }),
    }
}

fn presentation(l: &Loaded, cmd: &str) -> Result<lagfloer::floer::LagrangianPresentation, CliError> {
    l.presentation
        .clone()
        .ok_or_else(|| CliError::Invalid(format!("{cmd} needs a presentation block")))
}

fn cmd_bc(ctx: &mut Ctx, a: &BcArgs) -> Result<Output, CliError> {
    let l = ctx.load(a.doc.as_deref())?;
    let p = presentation(&l, "bc-criteria")?;
    let r = bc_criteria(&p, a.exact).map_err(lib("bc_criteria"))?;
    Ok(Output::Report {
        command: "bc-criteria",
        doc: Some(l.to_document()),
        value: obj([
            ("exact", json!(a.exact)),
            ("every_degree0_is_bc", json!(r.every_degree0_is_bc)),
            ("zero_is_only_candidate", json!(r.zero_is_only_candidate)),
            ("zero_is_bc", json!(r.zero_is_bc)),
            ("conclusion", json!(r.conclusion.to_string())),
        ]),
        ok: true,
    })
}

fn cmd_gauge(ctx: &mut Ctx, a: &GaugeArgs) -> Result<Output, CliError> {
    let l = ctx.load(a.doc.as_deref())?;
    let j = l.morphism(&a.morphism)?;
    let b = l.element(&a.element)?;
    let target = target_for(ctx, &l, j, a.target.as_deref())?;
    let g = gauge_act(j, b).map_err(lib("gauge_act"))?;
    let witness = check_gauge_transport(j, &l.system, &target, b).map_err(lib("gauge"))?;
    let (source_mc, _) = mc_residual(&l.system, b).map_err(lib("mc_residual"))?;
    let (_, target_mc) = mc_residual(&target, &g.jb).map_err(lib("mc_residual"))?;
    let w = witness.as_ref().map(|w| {
        obj([
            ("basis", json!(l.space().label(w.basis))),
            ("lhs", nvec(&w.lhs, target.space())),
            ("rhs", nvec(&w.rhs, target.space())),
        ])
    });
    let ok = witness.is_none() && (!source_mc.is_zero() || target_mc);
    Ok(Output::Report {
        command: "gauge",
        doc: Some(l.to_document()),
        value: obj([
            ("jb", nvec(&g.jb, target.space())),
            ("jb_is_bounding_cochain", json!(target_mc)),
            ("transport_commutes", json!(witness.is_none())),
            ("first_witness", w.unwrap_or(Value::Null)),
        ]),
        ok,
    })
}

fn cmd_hf(ctx: &mut Ctx, a: &HfArgs) -> Result<Output, CliError> {
    let l = ctx.load(a.doc.as_deref())?;
    let b = l.element_or_zero(a.element.as_deref())?;
    let rep = hf_compute(&l.system, &b).map_err(lib("hf_compute"))?;
    let degrees: Vec<Value> = rep
        .degrees
        .iter()
        .map(|(k, g)| {
            obj([
                ("degree", json!(k)),
                ("free_rank", json!(g.free_rank)),
                ("torsion", Value::Array(g.torsion.iter().map(q).collect())),
            ])
        })
        .collect();
    Ok(Output::Report {
        command: "hf",
        doc: Some(l.to_document()),
        value: obj([
            ("cutoff", q(&rep.cutoff)),
            ("flavor", json!(rep.flavor.tag())),
            ("grading", json!(rep.grading.tag())),
            ("stable", json!(rep.stable)),
            ("b_certified", json!(rep.b_certified)),
            ("degrees", Value::Array(degrees)),
        ]),
        ok: rep.b_certified,
    })
}

/// An element name, or a basis label standing for its unit vector.
fn class(l: &Loaded, name: &str) -> Result<NVec, CliError> {
    if let Some(v) = l.elements.get(name) {
        return Ok(v.clone());
    }
    let i = l
        .space()
        .index_of(name)
        .map_err(|_| CliError::Reference(format!("{name:?} is neither an element nor a basis label")))?;
    Ok(NVec::basis(i, l.system.flavor(), l.system.cutoff().clone()))
}

fn cmd_hf_product(ctx: &mut Ctx, a: &HfProductArgs) -> Result<Output, CliError> {
    let l = ctx.load(a.doc.as_deref())?;
    let b = l.element_or_zero(a.element.as_deref())?;
    let (x, y) = (class(&l, &a.x)?, class(&l, &a.y)?);
    let p = hf_product(&l.system, &b, &x, &y).map_err(lib("hf_product"))?;
    Ok(Output::Report {
        command: "hf-product",
        doc: Some(l.to_document()),
        value: obj([
            ("x", json!(a.x)),
            ("y", json!(a.y)),
            ("value", nvec(&p.value, l.space())),
            ("degree", p.degree.map_or(Value::Null, |d| json!(d))),
            ("cycle", json!(p.cycle)),
        ]),
        ok: p.cycle,
    })
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct CrossPairRecord {
    a_point: String,
    b_point: String,
    eta_ab: i64,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct CrossEntryRecord {
    lambda: String,
    #[serde(default)]
    mu: i64,
    inputs: Vec<String>,
    output: String,
    coeff: String,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct CrossDocument {
    #[serde(default)]
    pairs: Vec<CrossPairRecord>,
    #[serde(default)]
    entries: Vec<CrossEntryRecord>,
}

fn cmd_union(ctx: &mut Ctx, a: &UnionArgs) -> Result<Output, CliError> {
    let la = ctx.load(Some(&a.a))?;
    let lb = ctx.load(Some(&a.b))?;
    let (pa, pb) = (presentation(&la, "union")?, presentation(&lb, "union")?);
    let cross: CrossDocument = match &a.cross {
        Some(p) => serde_json::from_str(&ctx.read(Some(p))?).map_err(|e| CliError::Parse(format!("cross: {e}")))?,
        None => CrossDocument::default(),
    };
    let pairs: Vec<CrossPair> = cross
        .pairs
        .iter()
        .map(|p| CrossPair {
            a_point: p.a_point.clone(),
            b_point: p.b_point.clone(),
            eta_ab: p.eta_ab,
        })
        .collect();
    let entries: Vec<CrossEntry> = cross
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            Ok(CrossEntry {
                k: e.inputs.len(),
                energy: Energy::new(rat(&e.lambda, &format!("cross.entries[{i}].lambda"))?, e.mu),
                inputs: e.inputs.clone(),
                output: e.output.clone(),
                coeff: rat(&e.coeff, &format!("cross.entries[{i}].coeff"))?,
            })
        })
        .collect::<Result<_, CliError>>()?;
    let u = union_sectors(&pa, &pb, &pairs, &entries).map_err(lib("union"))?;
    let space = u.pres.space();
    let sectors: serde_json::Map<String, Value> =
        (0..space.dim()).map(|i| (space.label(i).to_string(), json!(u.sector_of[i].tag()))).collect();
    let mut doc = to_document(u.pres.algebra(), Some(&u.pres), &BTreeMap::new(), &BTreeMap::new(), None);
    doc.result = Some(obj([("command", json!("union")), ("sectors", Value::Object(sectors))]));
    Ok(Output::Document { doc, ok: true })
}

fn parse_shift(s: &str) -> Result<(String, (Rational, i64)), CliError> {
    let (label, rest) = s
        .rsplit_once('=')
        .ok_or_else(|| CliError::Usage(format!("--shift expects LABEL=c or LABEL=c:d, got {s:?}")))?;
    let (c, d) = match rest.split_once(':') {
        Some((c, d)) => (c, d.parse().map_err(|_| CliError::Usage(format!("bad regrade in {s:?}")))?),
        None => (rest, 0),
    };
    Ok((label.to_string(), (rat(c, "--shift")?, d)))
}

fn cmd_rescale(ctx: &mut Ctx, a: &RescaleArgs) -> Result<Output, CliError> {
    let l = ctx.load(a.doc.as_deref())?;
    let p = presentation(&l, "rescale")?;
    let params: BTreeMap<String, (Rational, i64)> = a.shifts.iter().map(|s| parse_shift(s)).collect::<Result<_, _>>()?;
    let b = match &a.element {
        Some(n) => Some(l.element(n)?.clone()),
        None => None,
    };
    let rep = rescale_regrade(&p, &params, b.as_ref()).map_err(lib("rescale_regrade"))?;
    let doc = match &rep.presentation {
        Some(np) => {
            let mut elements = BTreeMap::new();
            if let (Some(name), Some(tb), false) = (&a.element, &rep.transported_b, rep.b_wall) {
                elements.insert(name.clone(), tb.recast(np.algebra().flavor(), np.algebra().cutoff().clone()).map_err(lib("rescale"))?);
            }
            to_document(np.algebra(), Some(np), &elements, &BTreeMap::new(), None)
        }
        None => l.to_document(),
    };
    let space = p.space();
    Ok(Output::Report {
        command: "rescale",
        value: obj([
            ("algebra_wall", json!(rep.algebra_wall)),
            ("algebra_wall_reasons", json!(rep.algebra_wall_reasons)),
            ("b_wall", json!(rep.b_wall)),
            ("lambda_t", rep.lambda_t.as_ref().map_or(Value::Null, q)),
            ("transported_b", rep.transported_b.as_ref().map_or(Value::Null, |v| nvec(v, space))),
            ("intertwines", json!(rep.intertwines)),
        ]),
        doc: Some(doc),
        ok: rep.intertwines,
    })
}

fn cmd_legendrian(ctx: &mut Ctx, a: &DocArg) -> Result<Output, CliError> {
    let l = ctx.load(a.doc.as_deref())?;
    let p = presentation(&l, "legendrian-check")?;
    let rep = legendrian_validate(p.double_points(), p.algebra());
    let violations: Vec<Value> = rep
        .lattice_violations
        .iter()
        .map(|v| {
            obj([
                ("k", json!(v.k)),
                ("energy", energy(&v.energy)),
                ("inputs", json!(v.inputs)),
                ("output", json!(v.output)),
                ("residue", q(&v.residue)),
            ])
        })
        .collect();
    Ok(Output::Report {
        command: "legendrian-check",
        doc: Some(l.to_document()),
        value: obj([
            ("pairing_failures", json!(rep.pairing_failures)),
            ("missing", json!(rep.missing)),
            ("lattice_violations", Value::Array(violations)),
        ]),
        ok: rep.passes(),
    })
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing --{flag}")))
}

fn cmd_index(a: &IndexArgs) -> Result<Output, CliError> {
    let mut out = serde_json::Map::new();
    if !a.minus.is_empty() || !a.plus.is_empty() {
        let n = need(a.n, "n")?;
        let parse = |xs: &[String], side: &str| -> Result<Vec<Rational>, CliError> {
            xs.iter().map(|x| rat(x, &format!("--{side}"))).collect()
        };
        let n_usize = usize::try_from(n).map_err(|_| CliError::Usage(format!("--n {n} is negative")))?;
        let (eta, swapped) =
            eta_pair(n_usize, &parse(&a.minus, "minus")?, &parse(&a.plus, "plus")?).map_err(lib("phases"))?;
        out.insert("n".into(), json!(n));
        out.insert("eta".into(), json!(eta));
        out.insert("eta_swapped".into(), json!(swapped));
    }
    if let Some(t) = &a.target {
        let target = match t.as_str() {
            "manifold" => ShiftTarget::Manifold { n: need(a.n, "n")? },
            "double-point" => ShiftTarget::DoublePoint { eta: need(a.eta, "eta")? },
            "family-manifold" => ShiftTarget::FamilyManifold {
                dim_t: need(a.dim_t, "dim-t")?,
                n: need(a.n, "n")?,
            },
            "family-double-point" => ShiftTarget::FamilyDoublePoint {
                dim_t: need(a.dim_t, "dim-t")?,
                eta: need(a.eta, "eta")?,
            },
            other => return Err(CliError::Usage(format!("unknown --target {other:?}"))),
        };
        out.insert("target".into(), json!(t));
        out.insert("shifted_degree".into(), json!(shifted_degree(target, need(a.a, "a")?)));
    }
    if out.is_empty() {
        return Err(CliError::Usage("index needs --minus/--plus or --target/--a".into()));
    }
    Ok(Output::Report {
        command: "index",
        doc: None,
        value: Value::Object(out),
        ok: true,
    })
}

fn cmd_vdim(a: &VdimArgs) -> Result<Output, CliError> {
    let kind = VdimKind::from_tag(&a.kind).map_err(lib("--kind"))?;
    let p = VdimParams {
        n: a.n,
        maslov: a.maslov,
        k: a.k,
        eta_in_i: a.eta_in_i.clone(),
        degs: a.degs.clone(),
        zero_in_i: a.zero_in_i,
        eta_zero: a.eta_zero,
        dim_t: a.dim_t,
        i: a.i,
        k2: a.k2,
        i_in_i1: a.i_in_i1,
        eta_slot: a.eta_slot,
    };
    let v = vdim_formulas(kind, &p).map_err(lib("vdim"))?;
    Ok(Output::Report {
        command: "vdim",
        doc: None,
        value: obj([("kind", json!(kind.tag())), ("value", json!(v))]),
        ok: true,
    })
}

fn parse_corners(s: &str) -> Result<BTreeMap<i64, i64>, CliError> {
    if s == "empty" || s.is_empty() {
        return Ok(BTreeMap::new());
    }
    s.split(',')
        .map(|part| {
            let bad = || CliError::Usage(format!("--I expects i:eta,… or empty, got {part:?}"));
            let (i, e) = part.split_once(':').ok_or_else(bad)?;
            Ok((i.trim().parse().map_err(|_| bad())?, e.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

fn cmd_signs(a: &SignsArgs) -> Result<Output, CliError> {
    let q = SignQuery {
        n: a.n,
        i: a.i,
        j: a.j,
        k: a.k,
        k1: a.k1,
        k2: a.k2,
        dim_t: a.dim_t,
        degs: a.degs.clone(),
        eta: parse_corners(&a.corners)?,
        i_in_i1: a.i_in_i1,
        zero_in_i2: a.zero_in_i2,
        eta_node: a.eta_node,
        deg_f: a.deg_f,
    };
    let sign = if let Ok(z) = ZetaKind::from_tag(&a.kind) {
        sign_zeta(z, &q)
    } else if let Ok(b) = BoundaryKind::from_tag(&a.kind) {
        sign_boundary_insertion(b, &q)
    } else if let Ok(f) = FibreKind::from_tag(&a.kind) {
        let dims = FibreDims {
            vdim_x1: a.vdim_x1,
            vdim_x2: a.vdim_x2,
            dim_y: a.dim_y,
            dim_y1: a.dim_y1,
            dim_y2: a.dim_y2,
        };
        sign_fibre_product(f, &dims)
    } else {
        return Err(CliError::Usage(format!("unknown sign kind {:?}", a.kind)));
    }
    .map_err(lib("signs"))?;
    Ok(Output::Report {
        command: "signs",
        doc: None,
        value: obj([("kind", json!(a.kind)), ("sign", json!(sign))]),
        ok: true,
    })
}

fn cmd_whitney(a: &WhitneyArgs) -> Result<Output, CliError> {
    let p = whitney_preset(a.n).map_err(lib("preset-whitney"))?;
    let doc = to_document(p.algebra(), Some(&p), &BTreeMap::new(), &BTreeMap::new(), None);
    Ok(Output::Document { doc, ok: true })
}

fn cmd_feasible(ctx: &mut Ctx, a: &DocArg) -> Result<Output, CliError> {
    let l = ctx.load(a.doc.as_deref())?;
    let mut dims: BTreeMap<i64, usize> = BTreeMap::new();
    for b in basis_records(l.space()) {
        *dims.entry(b.degree).or_insert(0) += 1;
    }
    let (ok, first) = acyclicity_feasible(&dims);
    Ok(Output::Report {
        command: "feasible",
        doc: Some(l.to_document()),
        value: obj([
            ("dims", Value::Array(dims.iter().map(|(d, r)| json!({"degree": d, "dim": r})).collect())),
            ("feasible", json!(ok)),
            ("first_failure", first.map_or(Value::Null, |d| json!(d))),
        ]),
        ok,
    })
}

fn cmd_trees(a: &TreesArgs) -> Result<Output, CliError> {
    let mode = TreeMode::from_tag(&a.mode).map_err(lib("--mode"))?;
    let trees = enumerate_trees(a.k, mode, a.budget);
    let mut value = obj([
        ("k", json!(a.k)),
        ("mode", json!(mode.tag())),
        ("budget", json!(a.budget)),
        ("count", json!(trees.len())),
    ]);
    if a.list {
        value["trees"] = json!(trees.iter().map(|t| t.bracket()).collect::<Vec<_>>());
    }
    Ok(Output::Report {
        command: "trees",
        doc: None,
        value,
        ok: true,
    })
}

/// Runs a parsed command.
pub fn dispatch(cli: &Cli, stdin: &mut dyn Read) -> Result<Output, CliError> {
    let mut ctx = Ctx {
        cutoff: cli.cutoff.clone(),
        level: cli.level,
        flavor: cli.flavor.clone(),
        stdin,
        stdin_used: false,
    };
    let ctx = &mut ctx;
    match &cli.command {
        Command::Check(a) => cmd_check(ctx, a),
        Command::Truncate(a) => cmd_truncate(ctx, a),
        Command::MinimalModel(a) => cmd_minimal_model(ctx, a),
        Command::InverseStrict(a) => cmd_inverse_strict(ctx, a),
        Command::AnkFromGeo(a) => cmd_ank(ctx, a),
        Command::Twist(a) => cmd_twist(ctx, a),
        Command::McResidual(a) => cmd_mc_residual(ctx, a),
        Command::McSolve(a) => cmd_mc_solve(ctx, a),
        Command::BcCriteria(a) => cmd_bc(ctx, a),
        Command::Gauge(a) => cmd_gauge(ctx, a),
        Command::Hf(a) => cmd_hf(ctx, a),
        Command::HfProduct(a) => cmd_hf_product(ctx, a),
        Command::Union(a) => cmd_union(ctx, a),
        Command::Rescale(a) => cmd_rescale(ctx, a),
        Command::LegendrianCheck(a) => cmd_legendrian(ctx, a),
        Command::Index(a) => cmd_index(a),
        Command::Vdim(a) => cmd_vdim(a),
        Command::Signs(a) => cmd_signs(a),
        Command::PresetWhitney(a) => cmd_whitney(a),
        Command::Feasible(a) => cmd_feasible(ctx, a),
        Command::Trees(a) => cmd_trees(a),
    }
}
