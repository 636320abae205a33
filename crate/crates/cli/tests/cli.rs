use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ltl_explain_cli::output::{read_csv, read_trace, trace_dot, CSV_COLUMNS};

fn repo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltl-explain")).args(args).output().expect("binary runs")
}

fn config(name: &str) -> String {
    repo().join("configs").join(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Reference config with `edit` applied to its text, written into `dir`.
fn edited(dir: &Path, edit: impl Fn(String) -> String) -> String {
    let text = fs::read_to_string(repo().join("configs/ctf_reference.toml")).unwrap();
    let text = text.replace("../maps/", &format!("{}/maps/", repo().display()));
    let path = dir.join("run.toml");
    fs::write(&path, edit(text)).unwrap();
    path.display().to_string()
}

#[test]
fn enumerate_counts() {
    let o = bin(&["enumerate", "--config", &config("parking.toml")]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "96");

    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.toml");
    fs::write(&one, "[[predicates]]\nname = \"a\"\nfeature = 0\nthreshold = 1.0\n").unwrap();
    let o = bin(&["enumerate", "--config", one.to_str().unwrap()]);
    assert_eq!(stdout(&o).trim(), "0");

    let two = dir.path().join("two.toml");
    fs::write(
        &two,
        "[[predicates]]\nname = \"a\"\nfeature = 0\nthreshold = 1.0\n\
         [[predicates]]\nname = \"b\"\nfeature = 1\nthreshold = 1.0\n",
    )
    .unwrap();
    let o = bin(&["enumerate", "--config", two.to_str().unwrap(), "--list"]);
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines[0], "8");
    assert_eq!(lines.len(), 9);
    assert!(lines.contains(&"F(a) & G(!b)".to_string()));
}

#[test]
fn search_writes_results_trace_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = bin(&["search", "--config", &config("ctf_reference.toml"), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("F(psi_ba_rf) & G(!psi_ba_ra | psi_ba_bt)"));

    let header = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap(), CSV_COLUMNS.join(","));
    let rows = read_csv(&out.join("results.csv")).unwrap();
    assert_eq!(rows[0].explanation, "F(psi_ba_rf) & G(!psi_ba_ra | psi_ba_bt)");
    assert!(rows.iter().all(|r| r.seed == 7 && !r.filtered));
    for w in rows.windows(2) {
        assert!(w[0].utility >= w[1].utility);
    }

    let trace = read_trace(&out.join("trace.jsonl")).unwrap();
    let lines = fs::read_to_string(out.join("trace.jsonl")).unwrap().lines().count();
    assert_eq!(trace.len(), lines);
    assert!(trace.iter().all(|n| n.schema_version == 1));
    assert!(fs::read_to_string(out.join("manifest.toml")).unwrap().contains("seed = 7"));

    // The saved target policy can stand in for the explanation target.
    let policy_cfg = edited(dir.path(), |t| {
        t.replace(
            "explanation = \"F(psi_ba_rf) & G(!psi_ba_ra | psi_ba_bt)\"",
            &format!("policy = \"{}\"", out.join("target.policy").display()),
        )
    });
    let o = bin(&["eval", "--config", &policy_cfg, "--explanation", "F(psi_ba_rf) & G(psi_ba_bt | !psi_ba_ra)"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let wkl_line = stdout(&o).lines().find(|l| l.starts_with("wkl")).unwrap().to_string();
    let wkl: f64 = wkl_line.split_whitespace().nth(1).unwrap().parse().unwrap();
    // Same policy, different sampling pool: the self-match still scores zero.
    assert!(wkl.abs() < 1e-12, "{wkl_line}");
}

#[test]
fn oracle_csv_is_ranked_with_footer() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["oracle", "--config", &config("ctf_reference.toml"), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let path = dir.path().join("oracle.csv");
    let text = fs::read_to_string(&path).unwrap();
    let footer = text.lines().last().unwrap();
    let filtered: usize = footer.strip_prefix("# filtered,").unwrap().parse().unwrap();
    let rows = read_csv(&path).unwrap();
    assert!(rows.len() <= 96);
    assert_eq!(rows.len() + filtered, 96);
    for w in rows.windows(2) {
        assert!(w[0].wkl.unwrap() <= w[1].wkl.unwrap());
        assert_eq!(w[1].rank, w[0].rank + 1);
    }
}

#[test]
fn oracle_refuses_five_predicates_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited(dir.path(), |t| {
        t + "\n[[predicates]]\nname = \"psi_ra_bf\"\nfeature = \"d_ra_bf\"\nthreshold = 1.0\n\
             \n[[predicates]]\nname = \"psi_far\"\nfeature = \"d_ba_rf\"\nthreshold = 3.0\n"
    });
    let o = bin(&["oracle", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("--force"));
}

#[test]
fn config_errors_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let o = bin(&["search", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.toml"));

    let cfg = edited(dir.path(), |t| t.replace("ctf_5x5.txt", "no_such_map.txt"));
    let o = bin(&["search", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no_such_map.txt"));

    let cfg = edited(dir.path(), |t| t + "shaped = true\n");
    let o = bin(&["search", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("exactly one"));

    let cfg = edited(dir.path(), |t| t.replace("feature = \"d_ba_rf\"", "feature = \"d_nowhere\""));
    let o = bin(&["search", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("d_nowhere"));
}

#[test]
fn trace_dot_export() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let o = bin(&["trace-dot", empty.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "digraph search {\n}\n");

    let out = dir.path().join("run");
    assert!(bin(&["search", "--config", &config("ctf_reference.toml"), "--out", out.to_str().unwrap()])
        .status
        .success());
    let trace = read_trace(&out.join("trace.jsonl")).unwrap();
    let dot = trace_dot(&trace).unwrap();
    let node_lines = dot.lines().filter(|l| l.contains("[label=") && !l.contains("->")).count();
    assert_eq!(node_lines, trace.len());
    let extension_edges: Vec<&str> = dot.lines().filter(|l| l.contains("label=\"extension\"")).collect();
    assert!(extension_edges.iter().all(|l| l.contains("style=dashed")));

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"schema_version\": 1}\n").unwrap();
    let o = bin(&["trace-dot", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("malformed"));
}

#[test]
fn seed_override_changes_the_run_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("seeded");
    let o = bin(&["search", "--config", &config("ctf_reference.toml"), "--out", out.to_str().unwrap(), "--seed", "99"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(fs::read_to_string(out.join("manifest.toml")).unwrap().contains("seed = 99"));
    assert!(read_csv(&out.join("results.csv")).unwrap().iter().all(|r| r.seed == 99));
}

#[test]
fn shaped_navigation_target_runs() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["search", "--config", &config("nav_shaped.toml"), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&dir.path().join("results.csv")).unwrap();
    assert!(!rows.is_empty());
    // The shaped policy is not an optimizer of any explanation.
    assert!(rows[0].wkl.unwrap() > 0.0);
}
