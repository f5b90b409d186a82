use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_hitchin-lab"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir)
        .env("HITCHIN_LAB_THREADS", "2")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn verify_passes_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = "[verify]\nN = 4\nn = 2\ntrials = 5\n";
    assert_eq!(code(&run(a.path(), &["verify"], cfg)), 0);
    assert_eq!(code(&run(b.path(), &["verify"], cfg)), 0);
    let ra = std::fs::read(a.path().join("verify_report.jsonl")).unwrap();
    let rb = std::fs::read(b.path().join("verify_report.jsonl")).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(ra.iter().filter(|&&c| c == b'\n').count(), 9);
    assert!(a.path().join("verify_meta.json").exists());
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(d.path(), &["verify"], "[verify]\nN = 4\ntrials = 2\ntolerance = 1e-30\n")), 1);
    assert_eq!(code(&run(d.path(), &["verify"], "[verify]\nN = lots\n")), 2);
    assert_eq!(code(&run(d.path(), &["solve"], "[solve]\nn = 1\nN = 4\nmax_iters = 0\n")), 1);
    assert_eq!(code(&run(d.path(), &["spectrum"], "[spectrum]\nN = 32\nn = 1\n")), 2);
    let missing = Command::new(env!("CARGO_BIN_EXE_hitchin-lab")).arg("verify").output().unwrap();
    assert_eq!(code(&missing), 2);
}

#[test]
fn seed_start_converges_immediately() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["solve"], "[solve]\nN = 4\nn = 1\nstart = seed\nseed_re = 0.5\nseed_im = -1\n");
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(d.path().join("solve_trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let status = std::fs::read_to_string(d.path().join("solve_status.json")).unwrap();
    assert!(status.contains("onverged"), "{status}");
}

#[test]
fn resumed_trace_continues_the_full_run() {
    let full = tempfile::tempdir().unwrap();
    let part = tempfile::tempdir().unwrap();
    let base = "[solve]\nN = 4\nn = 1\nseed = 9\ntarget_residual = 1e-12\n";
    assert_eq!(code(&run(full.path(), &["solve"], &format!("{base}max_iters = 60\n"))), 1);
    assert_eq!(code(&run(part.path(), &["solve"], &format!("{base}max_iters = 25\n"))), 1);
    let first = std::fs::read_to_string(part.path().join("solve_trace.csv")).unwrap();
    let resume = part.path().join("solve_final.cfg");
    let rest_dir = tempfile::tempdir().unwrap();
    let cfg = format!("{base}max_iters = 35\nstart = resume\nresume = {}\n", resume.display());
    assert_eq!(code(&run(rest_dir.path(), &["solve"], &cfg)), 1);
    let rest = std::fs::read_to_string(rest_dir.path().join("solve_trace.csv")).unwrap();
    let expected = std::fs::read_to_string(full.path().join("solve_trace.csv")).unwrap();
    let body: String = rest.lines().skip(1).map(|l| format!("{l}\n")).collect();
    assert_eq!(first + &body, expected);
    assert_eq!(
        std::fs::read(rest_dir.path().join("solve_final.cfg")).unwrap(),
        std::fs::read(full.path().join("solve_final.cfg")).unwrap()
    );
}

#[test]
fn spectrum_is_gauge_invariant() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(d.path(), &["spectrum"], "[spectrum]\nN = 4\nn = 1\nk = 6\n")), 0);
    let text = std::fs::read_to_string(d.path().join("spectrum_report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["identity_report"]["pass"], true);
    let id = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(id.path(), &["spectrum"], "[spectrum]\nN = 4\nn = 1\nk = 6\ngauge = identity\n")), 0);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(id.path().join("spectrum_report.json")).unwrap()).unwrap();
    assert_eq!(v["spectrum"]["max_rel_discrepancy"], 0.0);
}
