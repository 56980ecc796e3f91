//! End-to-end behaviour of the `lagfloer` command line: outputs, exit codes,
//! document round trips, error messages and command coverage.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use clap::CommandFactory;
use lagfloer_cli::document::{load_str, to_json};
use lagfloer_cli::{run, Cli, ARITHMETIC, COMMANDS, EXIT_ERROR, EXIT_FAILED, EXIT_OK};
use serde_json::Value;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

/// Runs in process with `args` after the program name.
fn call(args: &[&str], stdin: &str) -> (i32, String, String) {
    let mut full = vec!["lagfloer"];
    full.extend_from_slice(args);
    run(&full, &mut stdin.as_bytes())
}

fn call_ok(args: &[&str]) -> String {
    let (code, out, err) = call(args, "");
    assert_eq!(code, EXIT_OK, "{args:?}: {err}{out}");
    out
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).expect("valid JSON")
}

/// Runs the built executable, feeding `stdin`.
fn exe(args: &[&str], stdin: &str) -> (i32, String) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_lagfloer"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn lagfloer");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

/// Every operation the library exposes to the command line.
const OPERATIONS: [&str; 41] = [
    "nov_add",
    "nov_mul",
    "nov_valuation",
    "nov_invert",
    "nov_flavor_check",
    "apply_operation",
    "relation_defect",
    "cohomology_ranks",
    "check_relations",
    "bar_differential",
    "check_morphism",
    "compose_morphisms",
    "check_homotopy",
    "is_weak_homotopy_equiv",
    "monoid_elements",
    "monoid_norm",
    "validate_gapped",
    "truncate_level",
    "enumerate_trees",
    "splitting",
    "minimal_model",
    "homotopy_inverse_strict",
    "ank_from_geometric",
    "twist",
    "mc_residual",
    "mc_solve",
    "bc_criteria",
    "gauge_act",
    "hf_compute",
    "hf_product",
    "union_sectors",
    "rescale_regrade",
    "legendrian_validate",
    "whitney_preset",
    "acyclicity_feasible",
    "eta_from_phases",
    "shifted_degree",
    "vdim_formulas",
    "sign_zeta",
    "sign_boundary_insertion",
    "sign_fibre_product",
];

#[test]
fn every_operation_has_exactly_one_owner() {
    let wanted: BTreeSet<&str> = OPERATIONS.iter().copied().collect();
    let mut owned = BTreeSet::new();
    for (_, ops) in COMMANDS.iter() {
        for op in ops.iter() {
            assert!(owned.insert(*op), "{op} is owned twice");
        }
    }
    for op in ARITHMETIC {
        assert!(owned.insert(op), "{op} is both arithmetic and owned");
    }
    assert_eq!(owned, wanted);
}

#[test]
fn registry_names_match_the_parser() {
    let parsed: BTreeSet<String> = Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
    let listed: BTreeSet<String> = COMMANDS.iter().map(|(n, _)| n.to_string()).collect();
    assert_eq!(parsed, listed);
}

#[test]
fn strict_trees_with_four_leaves() {
    let out = call_ok(&["trees", "--k", "4", "--mode", "strict"]);
    assert!(out.contains("count: 11\n"), "{out}");
    let listed = json(&call_ok(&["--machine", "trees", "--k", "4", "--mode", "strict", "--list"]));
    assert_eq!(listed["result"]["trees"].as_array().unwrap().len(), 11);
}

#[test]
fn zeta2_with_empty_corner_set() {
    let out = call_ok(&["signs", "--kind", "zeta2", "--I", "empty", "--n", "2", "--i", "1", "--k1", "1", "--k2", "2"]);
    assert!(out.contains("sign: -1\n"), "{out}");
}

#[test]
fn whitney_preset_pipes_into_criteria() {
    let (code, doc) = exe(&["preset-whitney", "--n", "3"], "");
    assert_eq!(code, EXIT_OK);
    let (code, out) = exe(&["bc-criteria"], &doc);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("unique bounding cochain: 0"), "{out}");
}

#[test]
fn solved_cochain_pipes_into_cohomology() {
    let (code, doc) = exe(&["--machine", "mc-solve", &fixture("curved.json")], "");
    assert_eq!(code, EXIT_OK);
    assert_eq!(json(&doc)["elements"]["b"][0]["coeff"], "-1");
    let (code, out) = exe(&["hf", "--element", "b"], &doc);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("b_certified: true"));
}

#[test]
fn exit_codes_distinguish_pass_fail_and_error() {
    assert_eq!(call(&["check", &fixture("disc.json")], "").0, EXIT_OK);
    assert_eq!(call(&["check", &fixture("broken.json")], "").0, EXIT_FAILED);
    assert_eq!(call(&["mc-residual", &fixture("curved.json"), "--element", "guess"], "").0, EXIT_FAILED);
    assert_eq!(call(&["hf", &fixture("curved.json")], "").0, EXIT_FAILED);
    assert_eq!(call(&["check", &fixture("missing.json")], "").0, EXIT_ERROR);
    assert_eq!(call(&["no-such-command"], "").0, EXIT_ERROR);
    assert_eq!(call(&["hf", &fixture("curved.json"), "--cutoff", "2/4"], "").0, EXIT_ERROR);
}

#[test]
fn failure_reports_carry_the_witness() {
    let (code, out, _) = call(&["check", &fixture("broken.json")], "");
    assert_eq!(code, EXIT_FAILED);
    assert!(out.contains("witness: [x]") && out.contains("label: z"), "{out}");
    let (_, out, _) = call(&["--machine", "check", &fixture("broken.json"), "--bar"], "");
    let r = &json(&out)["result"];
    assert_eq!(r["relations"]["first_failure"]["witness"], serde_json::json!(["x"]));
    assert_eq!(r["bar"]["square_vanishes"], false);
}

#[test]
fn cohomology_report_states_cutoff_and_stability() {
    let out = call_ok(&["hf", &fixture("disc.json")]);
    assert!(out.contains("cutoff: 2\n") && out.contains("stable: true\n"), "{out}");
    assert!(out.contains("torsion: [1/2]"), "{out}");
    let r = &json(&call_ok(&["--machine", "hf", &fixture("disc.json"), "--flavor", "cy"]))["result"];
    assert!(r["degrees"].as_array().unwrap().iter().all(|d| d["torsion"].as_array().unwrap().is_empty()));
    let r = &json(&call_ok(&["--machine", "hf", &fixture("disc.json"), "--cutoff", "1/4"]))["result"];
    assert_eq!(r["cutoff"], "1/4");
}

#[test]
fn load_errors_name_the_offending_field() {
    let text = std::fs::read_to_string(fixture("disc.json")).unwrap();
    let bad_label = text.replace("\"output\": \"(p-,p+)\"", "\"output\": \"w\"");
    let (code, _, err) = call(&["check"], &bad_label);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("reference error") && err.contains("\"w\"") && err.contains("tables[0]"), "{err}");
    let e_power = r#"{"flavor": "cy", "cutoff": "1",
        "monoid": [{"lambda": "1", "mu": 1}],
        "basis": [{"label": "t", "degree": -1}],
        "tables": [{"k": 0, "lambda": "1", "mu": 1, "entries": [{"inputs": [], "output": "t", "coeff": "1"}]}]}"#;
    let (code, _, err) = call(&["check"], e_power);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("flavor violation"), "{err}");
    let (code, _, err) = call(&["check"], "{\n  \"flavor\": cy0\n}");
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("parse error") && err.contains("line 2"), "{err}");
}

#[test]
fn documents_round_trip() {
    for name in ["disc.json", "disc_maps.json", "geo.json", "curved.json", "broken.json", "sphere_q.json"] {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        let (_, loaded) = load_str(&text).unwrap();
        let once = to_json(&loaded.to_document());
        let (_, again) = load_str(&once).unwrap();
        assert_eq!(to_json(&again.to_document()), once, "{name}");
    }
}

#[test]
fn output_is_byte_stable() {
    let cases: [&[&str]; 4] = [
        &["--machine", "hf", "DISC"],
        &["minimal-model", "DISC"],
        &["union", "DISC", "SPHERE", "--cross", "CROSS"],
        &["check", "DISC", "--bar"],
    ];
    let (disc, sphere, cross) = (fixture("disc.json"), fixture("sphere_q.json"), fixture("cross.json"));
    for args in cases {
        let args: Vec<&str> = args
            .iter()
            .map(|a| match *a {
                "DISC" => disc.as_str(),
                "SPHERE" => sphere.as_str(),
                "CROSS" => cross.as_str(),
                other => other,
            })
            .collect();
        assert_eq!(call(&args, "").1, call(&args, "").1, "{args:?}");
    }
}

#[test]
fn morphism_commands_accept_the_identity() {
    let maps = fixture("disc_maps.json");
    call_ok(&["check", &maps, "--morphism", "id"]);
    call_ok(&["check", &maps, "--homotopy", "h", "--f", "id", "--g", "id"]);
    let g = json(&call_ok(&["--machine", "gauge", &maps, "--morphism", "id", "--element", "zero"]));
    assert_eq!(g["result"]["transport_commutes"], true);
    let inv = json(&call_ok(&["inverse-strict", &maps, "--morphism", "id", "--target", &maps]));
    assert_eq!(inv["result"]["p_after_q_linear_is_identity"], true);
    assert!(inv["morphisms"]["inverse"]["tables"].is_array());
}

#[test]
fn document_commands_emit_loadable_documents() {
    let disc = fixture("disc.json");
    let cases: Vec<Vec<String>> = vec![
        vec!["preset-whitney".into(), "--n".into(), "4".into()],
        vec!["truncate".into(), disc.clone(), "--level".into(), "0".into()],
        vec!["minimal-model".into(), disc.clone()],
        vec!["twist".into(), fixture("disc_maps.json"), "--element".into(), "zero".into()],
        vec!["ank-from-geo".into(), fixture("geo.json"), "--level".into(), "1".into()],
        vec!["union".into(), disc.clone(), fixture("sphere_q.json"), "--cross".into(), fixture("cross.json")],
    ];
    for args in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = call_ok(&args);
        load_str(&out).unwrap_or_else(|e| panic!("{args:?}: {e}"));
    }
}

#[test]
fn truncation_to_level_zero_drops_the_disc() {
    let doc = json(&call_ok(&["truncate", &fixture("disc.json"), "--level", "0"]));
    assert_eq!(doc["tables"], serde_json::json!([]));
    assert_eq!(doc["result"]["tables_dropped"], 1);
}

#[test]
fn union_labels_cross_generators_by_sector() {
    let doc = json(&call_ok(&["union", &fixture("disc.json"), &fixture("sphere_q.json"), "--cross", &fixture("cross.json")]));
    let s = &doc["result"]["sectors"];
    assert_eq!((s["(r,s)"].as_str(), s["(s,r)"].as_str()), (Some("AB"), Some("BA")));
    assert_eq!((s["H0_0"].as_str(), s["H0_1"].as_str()), (Some("AA"), Some("BB")));
}

#[test]
fn rescaling_requires_antisymmetric_shifts() {
    let disc = fixture("disc.json");
    let (code, _, err) = call(&["rescale", &disc, "--shift", "(p-,p+)=1/2"], "");
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("antisymmetry"), "{err}");
    let doc = json(&call_ok(&["--machine", "rescale", &disc, "--shift", "(p-,p+)=1/2", "--shift", "(p+,p-)=-1/2"]));
    assert_eq!(doc["tables"][0]["lambda"], "0");
    assert_eq!(doc["result"]["intertwines"], true);
}

#[test]
fn index_and_vdim_commands() {
    let r = json(&call_ok(&["--machine", "index", "--n", "2", "--minus", "1/4,1/4", "--plus", "1/2,0"]));
    let (a, b) = (r["result"]["eta"].as_i64().unwrap(), r["result"]["eta_swapped"].as_i64().unwrap());
    assert_eq!(a + b, 2);
    let r = json(&call_ok(&["--machine", "index", "--target", "manifold", "--n", "3", "--a", "1"]));
    assert!(r["result"]["shifted_degree"].is_i64());
    let r = json(&call_ok(&["--machine", "vdim", "--kind", "main", "--n", "2", "--maslov", "2", "--k", "3"]));
    assert_eq!(r["result"]["value"], 5);
}

#[test]
fn legendrian_check_reports_missing_a_values() {
    let (code, doc) = exe(&["preset-whitney", "--n", "2"], "");
    assert_eq!(code, EXIT_OK);
    let (code, out, _) = call(&["legendrian-check"], &doc);
    assert_eq!(code, EXIT_FAILED);
    assert!(out.contains("missing: [(p-,p+), (p+,p-)]"), "{out}");
}

#[test]
fn feasibility_of_the_whitney_sphere() {
    let (_, doc) = exe(&["preset-whitney", "--n", "3"], "");
    let (code, out, _) = call(&["feasible"], &doc);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("feasible: true"));
}

#[test]
fn output_file_receives_the_bytes() {
    let dir = std::env::temp_dir().join(format!("lagfloer-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("w.json");
    let p = path.to_string_lossy().into_owned();
    let (code, out, _) = call(&["preset-whitney", "--n", "2", "--out", &p], "");
    assert_eq!((code, out.as_str()), (EXIT_OK, ""));
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written, call_ok(&["preset-whitney", "--n", "2"]));
    std::fs::remove_dir_all(&dir).unwrap();
}
