use std::path::PathBuf;
use std::process::{Command, Output};

use geomatch::diagram::build_diagram;
use geomatch::io::parse_instance;
use geomatch::{DiagramKind, TranslationVector};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geomatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1, "{text}");
    serde_json::from_str(&text).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write(name: &str, text: &str) -> String {
    let path = scratch(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_three_four_five() {
    let inst = write("345.txt", "1 1 1 2\n0 0\n3 4\n");
    for flag in ["--exact", "--oracle"] {
        let v = json(&["solve", "--instance", &inst, "--t", "0,0", flag]);
        assert_eq!(v["cost"], 5.0);
        assert_eq!(v["pairs"], serde_json::json!([[0, 0]]));
    }
    let v = json(&["solve", "--instance", &inst, "--t", "3,4"]);
    assert_eq!(v["cost"], 0.0);
    let v = json(&["solve", "--instance", &inst, "--t", "-3,-4"]);
    assert_eq!(v["cost"], 10.0);
}

#[test]
fn optimize_finds_a_copy() {
    let inst = write("copy.txt", "3 4 3 inf\n0 0\n1 0\n0 2\n5 5\n6 5\n5 7\n-9 1\n");
    for algo in ["exhaustive", "grid", "random", "cluster"] {
        let v = json(&["optimize", "--instance", &inst, "--algo", algo, "--seed", "3"]);
        assert_eq!(v["cost"], 0.0, "{algo}");
        assert_eq!(v["translation"], serde_json::json!([5.0, 5.0]), "{algo}");
        assert_eq!(v["algorithm"], algo);
    }
}

#[test]
fn generate_build_query_verify() {
    let inst = scratch("gen.txt");
    let inst = inst.to_str().unwrap();
    let out = run(&["gen", "random", "--m", "5", "--n", "6", "--k", "3", "--p", "2", "--seed", "4", "--out", inst]);
    assert!(out.status.success());
    for (kind, eps) in [("voronoi3", "1"), ("eps", "0.5"), ("cluster-eps", "0.25"), ("cluster-voronoi", "1")] {
        let diagram = scratch(&format!("{kind}.json"));
        let diagram = diagram.to_str().unwrap();
        let built = json(&["diagram", "build", "--instance", inst, "--kind", kind, "--eps", eps, "--out", diagram]);
        let factor = built["guaranteeFactor"].as_f64().unwrap();
        let report = json(&["diagram", "verify", "--instance", inst, "--diagram", diagram, "--samples", "300"]);
        assert!(report["maxRatio"].as_f64().unwrap() <= factor + 1e-6, "{kind}: {report}");
        assert_eq!(report["sandwichViolations"], 0);

        let q = json(&["diagram", "query", "--instance", inst, "--diagram", diagram, "--t", "-1.5,2.25"]);
        let file = parse_instance(&std::fs::read_to_string(inst).unwrap()).unwrap();
        let d = build_diagram(&file.instance, kind_of(kind), eps.parse().unwrap(), 0.0).unwrap();
        let ans = d.query(&file.instance, TranslationVector::new(-1.5, 2.25)).unwrap();
        assert_eq!(q["cost"].as_f64().unwrap(), ans.cost);
        assert_eq!(q["matching"], serde_json::to_value(&ans.matching).unwrap());
        assert_eq!(q["site"], ans.face.site_index);

        let svg = run(&["export-svg", "--diagram", diagram]);
        assert!(svg.status.success());
        assert!(String::from_utf8(svg.stdout).unwrap().starts_with("<?xml"));
    }
}

fn kind_of(name: &str) -> DiagramKind {
    match name {
        "voronoi3" => DiagramKind::Voronoi3,
        "eps" => DiagramKind::EpsT,
        "cluster-eps" => DiagramKind::EpsCluster,
        _ => DiagramKind::ClusterVoronoi,
    }
}

#[test]
fn query_save_persists_faces() {
    let inst = scratch("save.txt");
    let inst = inst.to_str().unwrap();
    assert!(run(&["gen", "random", "--m", "4", "--n", "5", "--k", "3", "--seed", "1", "--out", inst]).status.success());
    let diagram = scratch("save.json");
    let diagram = diagram.to_str().unwrap();
    json(&["diagram", "build", "--instance", inst, "--kind", "eps", "--out", diagram]);
    let before = std::fs::read_to_string(diagram).unwrap();
    json(&["diagram", "query", "--instance", inst, "--diagram", diagram, "--t", "0.3,0.1"]);
    assert_eq!(std::fs::read_to_string(diagram).unwrap(), before);
    json(&["diagram", "query", "--instance", inst, "--diagram", diagram, "--t", "0.3,0.1", "--save"]);
    let faces = |text: &str| {
        let v: Value = serde_json::from_str(text).unwrap();
        v["memoizedFaces"].as_array().unwrap().len()
    };
    let after = std::fs::read_to_string(diagram).unwrap();
    assert_eq!(faces(&after), faces(&before) + 1);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = ["gen", "random", "--m", "4", "--n", "5", "--k", "2", "--p", "inf", "--seed", "11", "--json"];
    let first = run(&args).stdout;
    assert_eq!(run(&args).stdout, first);
    let inst = write("repeat.json", std::str::from_utf8(&first).unwrap());
    let opt = ["optimize", "--instance", &inst, "--algo", "random", "--eps", "0.5", "--seed", "2"];
    assert_eq!(run(&opt).stdout, run(&opt).stdout);
    let build = ["diagram", "build", "--instance", &inst, "--kind", "eps"];
    assert_eq!(run(&build).stdout, run(&build).stdout);
}

#[test]
fn exit_codes() {
    // usage errors
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--t", "1,2"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--instance", "x", "--t", "1"]).status.code(), Some(2));
    assert_eq!(run(&["optimize", "--instance", "x", "--algo", "magic"]).status.code(), Some(2));

    // domain errors
    assert_eq!(run(&["solve", "--instance", "/no/such/file", "--t", "0,0"]).status.code(), Some(1));
    let bad = write("bad.txt", "2 2 5 2\n0 0\n1 1\n2 2\n3 3\n");
    let out = run(&["solve", "--instance", &bad, "--t", "0,0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    let inst = write("ok.txt", "1 1 1 2\n0 0\n3 4\n");
    let out = run(&["optimize", "--instance", &inst, "--algo", "grid", "--eps", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let other = write("other.txt", "1 1 1 2\n0 0\n3 5\n");
    let diagram = scratch("mismatch.json");
    let diagram = diagram.to_str().unwrap();
    json(&["diagram", "build", "--instance", &inst, "--out", diagram]);
    let out = run(&["diagram", "query", "--instance", &other, "--diagram", diagram, "--t", "0,0"]);
    assert_eq!(out.status.code(), Some(1));
}
