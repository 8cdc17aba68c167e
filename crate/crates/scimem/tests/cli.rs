use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn scimem(data: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scimem"))
        .arg("--data-dir")
        .arg(data)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}\nstdout: {}\nstderr: {}", o.status, String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn distill_then_persona_then_ask() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let line = ok(&scimem(d, &["distill", "--author", "A-VARGA"]));
    assert!(line.starts_with("A-VARGA: ") && line.contains(" chunks"), "{line}");
    assert!(d.join("authors/A-VARGA").is_dir());

    let persona = ok(&scimem(d, &["persona", "show", "--author", "A-VARGA"]));
    assert!(!persona.trim().is_empty());
    let schema: Value = serde_json::from_str(&ok(&scimem(d, &["persona", "show", "--author", "A-VARGA", "--json"]))).unwrap();
    assert!(schema.is_object());

    let a: Value = serde_json::from_str(&ok(&scimem(
        d,
        &["ask", "--author", "A-VARGA", "--query", "What happens to magnetic anisotropy under strain?", "--json"],
    )))
    .unwrap();
    let cited = a["cited_chunk_ids"].as_array().unwrap();
    assert!(!cited.is_empty());
    assert!(cited.iter().all(|c| c.as_str().unwrap().starts_with("varga-")));

    let plain = ok(&scimem(d, &["ask", "--author", "A-VARGA", "--query", "What happens to magnetic anisotropy under strain?"]));
    assert!(plain.contains("sources: varga-"), "{plain}");
}

#[test]
fn domain_tools() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let built = d.join("g.json");
    ok(&scimem(d, &["domain", "build", "--out", built.to_str().unwrap()]));
    let src = ["--domain", built.to_str().unwrap()];

    let hits: Value = serde_json::from_str(&ok(&scimem(d, &[&["domain", "search", "--query", "spin torque", "--top-n", "2"][..], &src].concat()))).unwrap();
    assert_eq!(hits.as_array().unwrap().len(), 2);

    let paths: Value =
        serde_json::from_str(&ok(&scimem(d, &[&["domain", "path", "--from", "C-UHI", "--to", "C-GNN", "--k", "2"][..], &src].concat()))).unwrap();
    let paths = paths.as_array().unwrap();
    assert!(!paths.is_empty() && paths.len() <= 2);
    assert!(paths[0]["total_cost"].as_f64().unwrap() <= paths.last().unwrap()["total_cost"].as_f64().unwrap());

    // bundled snapshot when no build is named
    let experts: Value = serde_json::from_str(&ok(&scimem(d, &["domain", "experts", "--concept", "C-UHI", "--k", "3"]))).unwrap();
    assert!(!experts.as_array().unwrap().is_empty());
    let n: Value = serde_json::from_str(&ok(&scimem(d, &["domain", "expand", "--concept", "C-UHI"]))).unwrap();
    assert_eq!(n["parents"][0]["concept_id"], "C-PHYS");
}

#[test]
fn bench_with_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("scimem.toml");
    std::fs::write(&cfg, "[provider]\nkind = \"mock\"\ndimension = 32\nseed = 9\n\n[bench]\nseed = 11\n").unwrap();
    let c = cfg.to_str().unwrap();
    ok(&scimem(d, &["--config", c, "bench", "build", "--task", "nskp"]));
    assert!(d.join("bench/nskp-11-items.jsonl").exists());
    ok(&scimem(d, &["--config", c, "bench", "run", "--task", "nskp"]));
    let again = ok(&scimem(d, &["--config", c, "bench", "score", "--task", "nskp"]));
    assert!(again.contains("hit@1"), "{again}");
    let report = std::fs::read_to_string(d.join("bench/nskp-11-report.jsonl")).unwrap();
    let row: Value = serde_json::from_str(report.lines().next().unwrap()).unwrap();
    assert_eq!(row["seed"], 11);
}

#[test]
fn failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for args in [
        &["distill", "--author", "NOBODY"][..],
        &["domain", "expand", "--concept", "C-NONE"],
        &["bench", "score", "--task", "collab", "--seed", "77"],
        &["bench", "run", "--task", "trivia"],
        &["--config", "/nonexistent/scimem.toml", "ask", "--author", "A-VARGA", "--query", "x"],
    ] {
        let o = scimem(d, args);
        assert!(!o.status.success(), "{args:?} should fail");
        assert!(!o.stderr.is_empty(), "{args:?} should explain itself");
    }
}
