use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mrmhd"));
    c.env("RUST_LOG", "warn");
    c
}

fn reference() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/riemann1d_reference_literature.csv")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn small_run(dir: &Path) -> PathBuf {
    let out = dir.join("run");
    let cfg = dir.join("tube.conf");
    std::fs::write(
        &cfg,
        format!(
            "# short shock tube\nproblem = riemann1d\nmax_level = 5\nt_end = 0.1\nreference = {}\noutput = {}\n",
            reference().display(),
            out.display()
        ),
    )
    .unwrap();
    // the flag overrides the file's level
    let o = bin().args(["run", "--config"]).arg(&cfg).args(["--max_level", "3"]).output().unwrap();
    ok(&o);
    out
}

#[test]
fn run_writes_outputs_and_clears_marker() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_run(dir.path());
    for f in ["config.txt", "steps.csv", "mesh.csv", "slice.csv", "projection.csv", "errors.csv", "summary.csv"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    assert!(!out.join("INCOMPLETE").exists());
    let config = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(config.contains("max_level = 3"), "{config}");
    let steps = std::fs::read_to_string(out.join("steps.csv")).unwrap();
    assert!(steps.lines().any(|l| l.starts_with("step,t,dt")));
    let errors = std::fs::read_to_string(out.join("errors.csv")).unwrap();
    assert!(errors.lines().any(|l| l.starts_with("rho,")), "{errors}");
}

#[test]
fn norms_of_dump_match_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_run(dir.path());
    let o = bin()
        .args(["norms", "--result"])
        .arg(out.join("mesh.csv"))
        .arg("--reference")
        .arg(reference())
        .output()
        .unwrap();
    ok(&o);
    let printed = String::from_utf8(o.stdout).unwrap();
    let rho = |text: &str| text.lines().find(|l| l.starts_with("rho,")).map(str::to_string);
    let stored = std::fs::read_to_string(out.join("errors.csv")).unwrap();
    assert_eq!(rho(&printed), rho(&stored));
    assert!(rho(&printed).is_some());
}

#[test]
fn invalid_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, format!("nu = 1.5\noutput = {}\n", dir.path().join("o").display())).unwrap();
    let o = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nu"));
}

#[test]
fn malformed_line_exits_with_parse_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "problem = riemann1d\nthis line has no equals sign\n").unwrap();
    let o = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
}
