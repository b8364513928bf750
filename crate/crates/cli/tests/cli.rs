use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strongacc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

#[test]
fn certify_exit_codes() {
    let ok = run(&["certify", path(&fixture("worked.fx"))]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    assert!(stdout(&ok).contains("certified at level 1"), "{}", stdout(&ok));

    let no = run(&["certify", path(&fixture("f2_loop.fx"))]);
    assert_eq!(no.status.code(), Some(1));
    assert!(stdout(&no).contains("no certificate within horizon 10"), "{}", stdout(&no));
}

#[test]
fn horizon_override_shortens_the_run() {
    let o = run(&["certify", path(&fixture("f2_loop.fx")), "--horizon", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("no certificate within horizon 3"));
}

#[test]
fn missing_and_malformed_input_exit_2() {
    let o = run(&["h1", "/nonexistent/fixture.fx"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.fx");
    fs::write(&bad, "COMPLEX X\nVERTICES\na b\nEDGES\nab a\n").unwrap();
    let o = run(&["h1", path(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));
}

#[test]
fn hypothesis_violation_exits_1() {
    // pinched fixture with a non-slender edge group in the tree
    let text = fs::read_to_string(fixture("pinched.fx")).unwrap().replace("C slender < A B", "C < A B");
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("fat_edge.fx");
    fs::write(&f, text).unwrap();
    let o = run(&["passdown", path(&f)]);
    assert_eq!(o.status.code(), Some(1), "{}{}", stdout(&o), stderr(&o));
    assert!(stderr(&o).contains("non-slender"), "{}", stderr(&o));
}

#[test]
fn unclassifiable_group_exits_1() {
    let o = run(&["classify", path(&fixture("worked.fx"))]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("G: unclassified"));
    assert!(out.contains("S: elliptic"));
}

#[test]
fn complex_commands_report() {
    let w = fixture("worked.fx");
    let h1 = run(&["h1", path(&w)]);
    assert_eq!(stdout(&h1), "components 1\nh1 0\n");
    let split = run(&["split", path(&w)]);
    assert_eq!(split.status.code(), Some(0));
    assert!(stdout(&split).contains("covolume 6 -> 6"));
    let pd = run(&["passdown", path(&fixture("pinched.fx"))]);
    assert_eq!(pd.status.code(), Some(0), "{}", stderr(&pd));
    assert!(stdout(&pd).contains("input 3"), "{}", stdout(&pd));
}

#[test]
fn pipeline_reports_are_reproducible() {
    let w = fixture("worked.fx");
    let a = run(&["pipeline", path(&w), "--seed", "7"]);
    let b = run(&["pipeline", path(&w), "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn dot_output_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["pipeline", path(&fixture("worked.fx")), "--dot", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let names: Vec<String> =
        fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(names.iter().any(|n| n.starts_with("bw_1_") && n.ends_with(".dot")), "{names:?}");
    for n in &names {
        let text = fs::read_to_string(dir.path().join(n)).unwrap();
        assert!(text.starts_with("graph "), "{n}");
    }

    let dir = tempfile::tempdir().unwrap();
    let o = run(&["cutpoints", path(&fixture("worked.fx")), "--dot", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_dir(dir.path()).unwrap().count() >= 1);
}
