use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// `synss <args>` with the fixture files (unless overridden) and `out` as
/// output directory.
fn synss(out: &Path, args: &[&str]) -> Output {
    let f = fixtures();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_synss"));
    cmd.args(args).arg("--out").arg(out);
    for key in ["seeds", "naming", "relations"] {
        let flag = format!("--{key}");
        if !args.contains(&flag.as_str()) {
            cmd.arg(flag).arg(f.join(format!("{key}.txt")));
        }
    }
    cmd.env_remove("SYNSS_S_MAX").env_remove("SYNSS_T_MAX").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn resolve_names_thirteen_generators_and_reuses_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let first = synss(out, &["resolve", "--s-max", "10", "--t-max", "60"]);
    assert!(first.status.success(), "{}", stderr(&first));
    let text = stdout(&first);
    assert!(text.contains("computed s <= 10, t <= 60"), "{text}");
    assert!(text.contains("13 named generators, 0 mismatches"), "{text}");
    assert!(out.join("ext_dims.txt").exists());

    let ckpt = out.join("resolution.json");
    let saved = fs::read(&ckpt).unwrap();
    let again = synss(out, &["resolve", "--s-max", "10", "--t-max", "60"]);
    assert!(stdout(&again).contains("up to date"), "{}", stdout(&again));
    assert_eq!(stdout(&again), text.replace("computed s <= 10, t <= 60", "up to date (s <= 10, t <= 60)"));

    let smaller = synss(out, &["resolve", "--s-max", "10", "--t-max", "50"]);
    assert!(smaller.status.success());
    assert!(stdout(&smaller).contains("using s <= 10, t <= 50 of s <= 10, t <= 60"), "{}", stdout(&smaller));
    assert_eq!(fs::read(&ckpt).unwrap(), saved);
}

#[test]
fn synthesize_passes_the_les_sweep_and_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let o = synss(dir, &["synthesize", "--s-max", "30", "--t-max", "120"]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains(", 0 failed"), "{}", stdout(&o));
    }
    for file in ["summands.txt", "les_sweep.txt", "differentials.txt", "resolution.json"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
    let log = fs::read_to_string(a.path().join("differentials.txt")).unwrap();
    assert!(log.lines().any(|l| l == "d2 w1*alpha -> h2*w1^2 [leibniz alpha * w1]"), "{log}");
    let sweep = fs::read_to_string(a.path().join("les_sweep.txt")).unwrap();
    assert!(sweep.lines().any(|l| l.starts_with("40 ")));
    assert!(!sweep.contains("FAIL"));
}

#[test]
fn synthesize_without_seeds_lists_the_classes_it_needs() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("empty.txt");
    fs::write(&seeds, "# nothing\n").unwrap();
    let o = synss(dir.path(), &["synthesize", "--s-max", "16", "--t-max", "60", "--seeds", seeds.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("d2 undetermined") && err.contains("alpha"), "{err}");
}

#[test]
fn verify_reports_every_row_and_exits_nonzero_on_a_refutation() {
    let dir = tempfile::tempdir().unwrap();
    let claims = fixtures().join("claims.txt");
    let o = synss(dir.path(), &["verify", "--s-max", "30", "--t-max", "120", "--claims", claims.to_str().unwrap()]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("126 rows (each verdict once)"), "{text}");
    assert!(text.contains("REFUTED            0"), "{text}");
    let json = fs::read_to_string(dir.path().join("verdicts.json")).unwrap();
    assert_eq!(json.matches("\"status\"").count(), 126);

    let bad = dir.path().join("claims-bad.txt");
    let corrupted = fs::read_to_string(&claims).unwrap().replace("lifts=w2,h1*w2 ", "lifts=w2,h0*h2*w2 ");
    fs::write(&bad, corrupted).unwrap();
    let o = synss(dir.path(), &["verify", "--s-max", "30", "--t-max", "120", "--claims", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("REFUTED            1"), "{text}");
    assert!(text.contains("eta nu1*kbar@(47,57)"), "{text}");
}

#[test]
fn chart_writes_one_svg_per_window_deterministically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let claims = fixtures().join("claims.txt");
    let args = ["--s-max", "30", "--t-max", "120", "--claims", claims.to_str().unwrap()];
    for dir in [a.path(), b.path()] {
        let o = synss(dir, &[&["synthesize"], &args[..]].concat());
        assert!(o.status.success(), "{}", stderr(&o));
        let o = synss(dir, &[&["chart"], &args[..]].concat());
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(stdout(&o).matches("(matches summands.txt)").count(), 3, "{}", stdout(&o));
    }
    for name in ["chart_000_032.svg", "chart_032_064.svg", "chart_064_096.svg"] {
        let svg = fs::read(a.path().join(name)).unwrap();
        assert_eq!(svg, fs::read(b.path().join(name)).unwrap(), "{name}");
        assert!(svg.starts_with(b"<svg"));
    }
}

#[test]
fn config_file_env_and_flags_combine_with_flags_winning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "s-max = 10\nt-max = 60\ncheckpoint = \"ckpt.json\"\n").unwrap();
    let o = synss(dir.path(), &["resolve", "--config", cfg.to_str().unwrap(), "--t-max", "40"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("computed s <= 10, t <= 40"), "{}", stdout(&o));
    assert!(dir.path().join("ckpt.json").exists());

    let o = Command::new(env!("CARGO_BIN_EXE_synss"))
        .args(["resolve", "--out"])
        .arg(dir.path())
        .env("SYNSS_CONFIG", &cfg)
        .env("SYNSS_S_MAX", "6")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("indecomposables in s <= 6,"), "{}", stdout(&o));
}

#[test]
fn inconsistent_range_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = synss(dir.path(), &["resolve", "--s-max", "20", "--t-max", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("t-max (10) must be at least s-max (20)"), "{}", stderr(&o));
}
