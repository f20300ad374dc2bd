use std::path::Path;
use std::process::{Command, Output};

fn neckpinch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neckpinch")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn summary_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing from\n{text}"))
        .to_string()
}

#[test]
fn validate_reports_ok_warnings_and_bad_nodes() {
    let ok = neckpinch(&["validate"]);
    assert!(ok.status.success());
    assert!(stdout(&ok).ends_with("OK\n"));

    let shallow = neckpinch(&["validate", "--set", "depth=0.5"]);
    assert!(shallow.status.success());
    assert!(stdout(&shallow).contains("not sufficiently pinched"));

    let dir = tempfile::tempdir().unwrap();
    let prof = dir.path().join("bad.tsv");
    let mut text = String::from("# radial-profile n=2 m=32\n");
    for i in 0..=32 {
        let x = -1.0 + i as f64 / 16.0;
        let psi = if i == 9 { -0.1 } else { (std::f64::consts::FRAC_PI_2 * x).cos() };
        text += &format!("{x}\t1.5707963267948966\t{psi}\n");
    }
    std::fs::write(&prof, text).unwrap();
    let bad = neckpinch(&["validate", "--scenario", &format!("custom:{}", prof.display())]);
    assert_eq!(bad.status.code(), Some(1));
    let out = stdout(&bad);
    assert!(out.contains("error") && out.contains("psi[9]"), "{out}");
}

#[test]
fn config_errors_exit_with_2() {
    for args in [
        &["run", "--cost", "quadratic"][..],
        &["run", "--set", "bogus=1"],
        &["run", "--config", "/nonexistent/run.conf"],
        &["run", "--m", "many"],
    ] {
        let o = neckpinch(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for sub in ["", "profiles", "diffusions"] {
        let mut names: Vec<_> = std::fs::read_dir(dir.join(sub))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.is_file())
            .collect();
        names.sort();
        for p in names {
            files.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
        }
    }
    files
}

#[test]
fn point_pinch_with_quadratic_cost_is_single_point_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# point pinch\nscenario = point_pinch\ncost = power:2\nseed = 7\n").unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = neckpinch(&["run", "--config", conf.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(summary_value(&stdout(&o), "pinch_verdict"), "SinglePointConsistent");
    }
    let (fa, fb) = (read_all(&a), read_all(&b));
    assert!(fa.len() > 10);
    assert_eq!(fa.len(), fb.len());
    for ((na, ba), (nb, bb)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        // the summary records the output directory itself
        let strip = |b: &[u8]| -> Vec<u8> {
            String::from_utf8_lossy(b).lines().filter(|l| !l.starts_with("out = ")).collect::<Vec<_>>().join("\n").into_bytes()
        };
        assert!(strip(ba) == strip(bb), "{na} differs between runs");
    }
    let tsv = std::fs::read_to_string(a.join("wsrf_report.tsv")).unwrap();
    assert!(tsv.starts_with("tau[time]\t"));
    let prof = std::fs::read_to_string(a.join("profiles/initial.tsv")).unwrap();
    assert!(prof.lines().any(|l| l.contains("psi")));
}

#[test]
fn interval_pinch_is_contradicted() {
    let o = neckpinch(&["run", "--scenario", "interval_pinch", "--cost", "linear"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert_eq!(summary_value(&s, "pinch_verdict"), "IntervalContradiction");
    assert!(summary_value(&s, "monitor_violations").parse::<usize>().unwrap() > 0);
}

#[test]
fn sweep_runs_each_value() {
    let o = neckpinch(&["sweep", "--scenario", "point_pinch", "--key", "seed", "--values", "1,2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("seed=1\t") && s.contains("seed=2\t"), "{s}");
    assert_eq!(s.matches("SinglePointConsistent").count(), 2);
}
