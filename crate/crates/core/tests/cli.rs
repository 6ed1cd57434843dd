use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const FORCED_DETOUR: &str = "7\n0 1\n1 2\n0 3\n3 4\n0 5\n5 6\nI 2 1 4\nJ 2 1 6\n";
const STAR_SWAP: &str = "4\n0 1\n0 2\n0 3\nI 2 1 2\nJ 2 1 3\n";

fn spider_ts(args: &[&str]) -> (i32, String, String) {
    let Output { status, stdout, stderr } =
        Command::new(env!("CARGO_BIN_EXE_spider-ts")).args(args).output().expect("binary runs");
    (status.code().expect("exit code"), String::from_utf8(stdout).unwrap(), String::from_utf8(stderr).unwrap())
}

fn file(dir: &TempDir, name: &str, contents: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn solve_reports_forced_detour() {
    let dir = TempDir::new().unwrap();
    let inst = file(&dir, "fd.txt", FORCED_DETOUR);
    let (code, out, _) = spider_ts(&["solve", &inst]);
    assert_eq!(code, 0);
    assert_eq!(out, "len=6 mstar=4 detours=2 case=case2_forced_detour feasible=true\n");
}

#[test]
fn identical_sets_need_nothing() {
    let dir = TempDir::new().unwrap();
    let inst = file(&dir, "same.txt", "7\n0 1\n1 2\n0 3\n3 4\n0 5\n5 6\nI 2 2 4\nJ 2 2 4\n");
    let (code, out, _) = spider_ts(&["solve", &inst]);
    assert_eq!(code, 0);
    assert!(out.starts_with("len=0 mstar=0 detours=0 "), "{out}");
    let (code, out, _) = spider_ts(&["oracle", &inst]);
    assert_eq!((code, out.as_str()), (0, "len=0\n"));
}

#[test]
fn emitted_sequence_verifies() {
    let dir = TempDir::new().unwrap();
    let inst = file(&dir, "fd.txt", FORCED_DETOUR);
    let seq = dir.path().join("fd.seq");
    let (code, _, _) = spider_ts(&["solve", &inst, "--emit-sequence", seq.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(fs::read_to_string(&seq).unwrap().ends_with("# len=6 detours=2 mstar=4\n"));
    let (code, out, _) = spider_ts(&["verify", &inst, seq.to_str().unwrap()]);
    assert_eq!((code, out.as_str()), (0, "valid=true len=6\n"));
}

#[test]
fn verify_reports_first_problem() {
    let dir = TempDir::new().unwrap();
    let inst = file(&dir, "fd.txt", FORCED_DETOUR);
    let short = file(&dir, "short.seq", "1 0\n0 5\n");
    let (code, out, _) = spider_ts(&["verify", &inst, &short]);
    assert_eq!(code, 2);
    assert!(out.contains("end state ≠ J"), "{out}");
    let illegal = file(&dir, "illegal.seq", "4 3\n3 0\n");
    let (code, out, _) = spider_ts(&["verify", &inst, &illegal]);
    assert_eq!(code, 2);
    assert!(out.starts_with("valid=false move=1 "), "{out}");
}

#[test]
fn infeasible_and_malformed() {
    let dir = TempDir::new().unwrap();
    let star = file(&dir, "star.txt", STAR_SWAP);
    let (code, out, _) = spider_ts(&["solve", &star]);
    assert_eq!(code, 2);
    assert!(out.contains("feasible=false"), "{out}");
    let (code, out, _) = spider_ts(&["oracle", &star]);
    assert_eq!((code, out.as_str()), (2, "len=UNREACHABLE\n"));

    let broken = file(&dir, "broken.txt", &FORCED_DETOUR.replace("3 4\n", "3 four\n"));
    let (code, _, err) = spider_ts(&["solve", &broken]);
    assert_eq!(code, 1);
    assert!(err.contains("line 5"), "{err}");
}

#[test]
fn oracle_limit_is_reported() {
    let dir = TempDir::new().unwrap();
    let inst = file(&dir, "fd.txt", FORCED_DETOUR);
    let (code, out, _) = spider_ts(&["oracle", &inst, "--max-states", "2"]);
    assert_eq!((code, out.as_str()), (3, "len=RESOURCE-EXCEEDED\n"));
}

fn listing(dir: &Path) -> Vec<(String, String)> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read_to_string(e.path()).unwrap())
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn gen_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let (code, _, _) = spider_ts(&["gen", "--seed", "9", "--count", "5", "--corpus", out.to_str().unwrap()]);
        assert_eq!(code, 0);
    }
    let first = listing(&a);
    assert_eq!(first.len(), 5);
    assert_eq!(first, listing(&b));
    for (_, text) in &first {
        spider_ts::instance::Instance::parse(text).unwrap();
    }
}

#[test]
fn diff_finds_no_mismatch_and_counts_skips() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("corpus");
    let corpus = corpus.to_str().unwrap();
    let (code, out, _) = spider_ts(&["diff", "--seed", "4", "--count", "200", "--tokens", "3", "--corpus", corpus]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out.lines().last(), Some("checked=200 mismatches=0 skipped=0"));
    let (again, _, _) = spider_ts(&["diff", "--seed", "4", "--count", "200", "--tokens", "3", "--corpus", corpus]);
    assert_eq!(again, 0);
    assert!(!Path::new(corpus).exists());

    let (code, out, _) = spider_ts(&["diff", "--seed", "4", "--count", "20", "--max-states", "1"]);
    assert_eq!(code, 0, "{out}");
    // a single state suffices only when I = J; everything else is skipped, not failed
    let skipped = out.lines().filter(|l| l.starts_with("skipped index=")).count();
    assert!(skipped > 0);
    assert_eq!(out.lines().last().unwrap(), format!("checked={} mismatches=0 skipped={skipped}", 20 - skipped));
}
