//! End-to-end runs of the `kcfa` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn kcfa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kcfa")).args(args).output().unwrap()
}

fn file(name: &str, text: &str) -> String {
    let dir = std::env::temp_dir().join(format!("kcfa-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p: PathBuf = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const NOT_TRUE: &str = r#"{"inputs":[{"name":"a","value":true}],"gates":[{"id":"n","kind":"NOT","args":["a"]}],"output":"n"}"#;

#[test]
fn query_on_a_compiled_circuit() {
    let circuit = file("not.json", NOT_TRUE);
    let gen = kcfa(&["gen", "circuit", &circuit]);
    assert!(gen.status.success());
    let prog = file("not.lam", &stdout(&gen));
    let q = kcfa(&["query", &prog, "--k", "0", "--label", "W", "--lam", "True_W", "--format", "text"]);
    assert_eq!(q.status.code(), Some(0));
    assert!(stdout(&q).starts_with("false"));
    let q = kcfa(&["query", &prog, "--k", "0", "--label", "W", "--lam", "False_W", "--assert"]);
    assert_eq!(q.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&q)).unwrap();
    assert_eq!(v["answer"], true);
    let q = kcfa(&["query", &prog, "--k", "0", "--label", "W", "--lam", "True_W", "--assert"]);
    assert_eq!(q.status.code(), Some(1));
}

#[test]
fn eval_golden_program() {
    let prog = file("golden.lam", r"((\f. (f (f True)^1)^2) (\y. False))^3");
    let o = kcfa(&["eval", &prog]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let entries = v["entries"].as_array().unwrap();
    let y32 = entries.iter().find(|e| e["key"] == "y" && e["contour"] == "3.2").unwrap();
    assert_eq!(y32["values"][0]["label"], "False");
}

#[test]
fn analyze_text_reports_sizes() {
    let prog = file("id.lam", r"((\x. x) (\z. z))");
    let o = kcfa(&["analyze", &prog, "--k", "1", "--format", "text"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("k=1 "), "{text}");
    assert!(text.contains("max_set=1"));
}

#[test]
fn exhaustion_exits_three() {
    let omega = file("omega.lam", r"((\x. (x x)) (\y. (y y)))");
    assert_eq!(kcfa(&["eval", &omega, "--fuel", "100"]).status.code(), Some(3));
    let tuples = kcfa(&["gen", "tuples", "6"]);
    let prog = file("t6.lam", &stdout(&tuples));
    assert_eq!(kcfa(&["analyze", &prog, "--k", "1", "--budget", "10"]).status.code(), Some(3));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(kcfa(&["eval", "/nonexistent/p.lam"]).status.code(), Some(2));
    let bad = file("bad.lam", "(\\x. ");
    assert_eq!(kcfa(&["eval", &bad]).status.code(), Some(2));
    assert_eq!(kcfa(&["bench", "--family", "nope", "--max-n", "3"]).status.code(), Some(2));
    assert_eq!(kcfa(&["bench", "--family", "tuples", "--max-n", "99"]).status.code(), Some(2));
    let prog = file("id2.lam", r"((\x. x) (\z. z))");
    let o = kcfa(&["query", &prog, "--k", "0", "--label", "nolabel", "--lam", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_counts_are_deterministic() {
    let run = |jobs: &str| {
        let o = kcfa(&["bench", "--family", "tuples", "--min-n", "1", "--max-n", "6", "--jobs", jobs]);
        assert!(o.status.success());
        stdout(&o)
            .lines()
            .skip(1)
            .map(|l| l.rsplit_once(',').unwrap().0.to_owned())
            .collect::<Vec<_>>()
    };
    let a = run("1");
    assert_eq!(a, run("3"));
    let counts: Vec<u64> = a.iter().map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(counts, vec![2, 4, 8, 16, 32, 64]);
}

#[test]
fn generated_machine_term_parses_back() {
    let tm = file(
        "acc.json",
        r#"{"states":["acc","rej"],"q0":"acc","qa":"acc","qr":"rej","blank":"0","delta":[],"tape_cells":1,"time_bits":1}"#,
    );
    let o = kcfa(&["gen", "tm", &tm]);
    assert!(o.status.success());
    assert!(kcfa::syntax::parse(stdout(&o).trim()).is_ok());
}
