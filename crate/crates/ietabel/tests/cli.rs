//! End-to-end checks of the command-line interface: file round trips,
//! invariant reports, verdicts, decompositions and the exit-code contract.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ietabel"))
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ietabel-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_context(dir: &PathBuf) -> String {
    let path = dir.join("ctx.txt");
    let out = run(&[
        "ctx",
        "new",
        "-o",
        path.to_str().unwrap(),
        "--minpoly",
        "-2 0 1",
        "--interval",
        "1/1 2/1",
        "--gen",
        "(0/1, 1/1)",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

const TRANSPOSITION: &str = "ietabel element v1
kind iet
n 3
alpha (-1/1, 1/1)
alpha (3/1, -2/1)
alpha (-1/1, 1/1)
tau 3 2 1
";

const DOUBLED_REFLECTION: &str = "ietabel element v1
kind flip
n 2
alpha (-2/1, 2/1)
alpha (3/1, -2/1)
tau 1 2
signs -+
";

#[test]
fn invariants_and_verdicts() {
    let dir = tmpdir("inv");
    let ctx = write_context(&dir);
    let elem = dir.join("tr.txt");
    std::fs::write(&elem, TRANSPOSITION).unwrap();
    let elem = elem.to_str().unwrap();

    let out = run(&["invariant", "eps", &ctx, elem]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "e1∧e1 + e2∧e2 (torsion)");

    let out = run(&["invariant", "saf", &ctx, elem]);
    assert_eq!(stdout(&out).trim(), "0");

    let out = run(&["member", "derived", &ctx, elem]);
    assert!(stdout(&out).starts_with("false"));

    let out = run(&["member", "kerphi", &ctx, elem]);
    assert!(stdout(&out).starts_with("true"));

    let out = run(&["order", &ctx, elem]);
    assert_eq!(stdout(&out).trim(), "2");

    let refl = dir.join("refl.txt");
    std::fs::write(&refl, DOUBLED_REFLECTION).unwrap();
    let refl = refl.to_str().unwrap();
    let out = run(&["invariant", "psi", &ctx, refl]);
    assert_eq!(stdout(&out).trim(), "e1∧e1 + e2∧e2 [mod 2]");
    let out = run(&["member", "kereps", &ctx, refl]);
    assert!(stdout(&out).starts_with("true"));
    let out = run(&["member", "derived", &ctx, refl]);
    assert!(stdout(&out).starts_with("false"));
}

#[test]
fn roundtrip_is_byte_identical() {
    let dir = tmpdir("round");
    let ctx = write_context(&dir);
    let elem = dir.join("tr.txt");
    std::fs::write(&elem, TRANSPOSITION).unwrap();
    // inverse of an involution reproduces the same canonical bytes
    let out = run(&["inverse", &ctx, elem.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), TRANSPOSITION);
}

#[test]
fn example_compose_order_pipeline() {
    let dir = tmpdir("pipe");
    let ctx = write_context(&dir);
    let out = run(&["example", "two-transpositions-order", "10", &ctx]);
    assert!(out.status.success());
    let text = stdout(&out);
    let blocks: Vec<&str> = text
        .split("ietabel element v1")
        .filter(|b| !b.trim().is_empty())
        .collect();
    assert_eq!(blocks.len(), 2);
    let f_path = dir.join("f.txt");
    let g_path = dir.join("g.txt");
    std::fs::write(&f_path, format!("ietabel element v1{}", blocks[0])).unwrap();
    std::fs::write(&g_path, format!("ietabel element v1{}", blocks[1])).unwrap();
    let out = run(&[
        "compose",
        &ctx,
        g_path.to_str().unwrap(),
        f_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let gf_path = dir.join("gf.txt");
    std::fs::write(&gf_path, stdout(&out)).unwrap();
    let out = run(&["order", &ctx, gf_path.to_str().unwrap()]);
    assert_eq!(stdout(&out).trim(), "10");
}

#[test]
fn decompositions_verify_and_emit_elements() {
    let dir = tmpdir("dec");
    let ctx = write_context(&dir);
    let elem = dir.join("tr.txt");
    std::fs::write(&elem, TRANSPOSITION).unwrap();
    let out = run(&["decompose", "small:1/4", &ctx, elem.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.matches("ietabel element v1").count() >= 2);
    // a SAF-kernel element also decomposes into a balanced rotation tuple
    let out = run(&["decompose", "balanced", &ctx, elem.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).matches("ietabel element v1").count() >= 1);
    // identity decomposes to nothing
    let id = dir.join("id.txt");
    std::fs::write(
        &id,
        "ietabel element v1\nkind iet\nn 1\nalpha (1/1, 0/1)\ntau 1\n",
    )
    .unwrap();
    let out = run(&["decompose", "rotations", &ctx, id.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "");
}

#[test]
fn render_is_deterministic() {
    let dir = tmpdir("svg");
    let ctx = write_context(&dir);
    let elem = dir.join("refl.txt");
    std::fs::write(&elem, DOUBLED_REFLECTION).unwrap();
    let svg1 = dir.join("a.svg");
    let svg2 = dir.join("b.svg");
    assert!(run(&["render", &ctx, elem.to_str().unwrap(), svg1.to_str().unwrap()])
        .status
        .success());
    assert!(run(&["render", &ctx, elem.to_str().unwrap(), svg2.to_str().unwrap()])
        .status
        .success());
    let a = std::fs::read(&svg1).unwrap();
    let b = std::fs::read(&svg2).unwrap();
    assert_eq!(a, b);
    assert!(String::from_utf8_lossy(&a).starts_with("<svg"));
}

#[test]
fn exit_code_contract() {
    let dir = tmpdir("exit");
    let ctx = write_context(&dir);
    // parse failure: missing file
    let out = run(&["elem", "check", &ctx, "/does/not/exist"]);
    assert_eq!(out.status.code(), Some(2));
    // parse failure: malformed element
    let bad = dir.join("bad.txt");
    std::fs::write(&bad, "not an element\n").unwrap();
    let out = run(&["elem", "check", &ctx, bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    // semantic failure: flip element fed to an orientation-only invariant
    let refl = dir.join("refl.txt");
    std::fs::write(&refl, DOUBLED_REFLECTION).unwrap();
    let out = run(&["invariant", "saf", &ctx, refl.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    // semantic failure: breakpoints outside the lattice
    let off = dir.join("off.txt");
    std::fs::write(
        &off,
        "ietabel element v1\nkind iet\nn 2\nalpha (1/3, 0/1)\nalpha (2/3, 0/1)\ntau 2 1\n",
    )
    .unwrap();
    let out = run(&["elem", "check", &ctx, off.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn selftest_runs_clean() {
    let out = run(&["selftest"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("checks passed"));
}
