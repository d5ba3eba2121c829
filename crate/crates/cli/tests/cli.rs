use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn finslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finslab")).args(args).output().expect("binary runs")
}

fn run(experiment: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![experiment, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    finslab(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn records(dir: &Path) -> Vec<String> {
    fs::read_to_string(dir.join("report.txt"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn every_shipped_config_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let mut seen = Vec::new();
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "cfg") {
            continue;
        }
        let text = fs::read_to_string(&path).unwrap();
        let exp = text
            .lines()
            .find_map(|l| l.trim().strip_prefix("experiment").map(|r| r.trim_start_matches([' ', '=']).trim().to_string()))
            .expect("config names its experiment");
        let out = tmp.path().join(path.file_stem().unwrap());
        let o = run(&exp, &path, &out, &[]);
        assert_eq!(o.status.code(), Some(0), "{}: {}", path.display(), stderr(&o));
        let recs = records(&out);
        assert!(!recs.is_empty(), "{}", path.display());
        assert!(recs.iter().all(|r| r.ends_with("pass=true")), "{}: {recs:?}", path.display());
        if path.ends_with("lightcone-static.cfg") {
            assert!(recs.iter().any(|r| r.contains("name=mu_transversal_spread")), "{recs:?}");
        }
        seen.push(exp);
    }
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 7, "{seen:?}");
}

#[test]
fn report_layout_and_curve_header() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("geodesic", &configs().join("geodesic.cfg"), tmp.path(), &["--seed", "42"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(tmp.path().join("report.txt")).unwrap();
    assert!(text.contains("# seed=42\n"), "{text}");
    for line in records(tmp.path()) {
        let keys: Vec<&str> = line.split(' ').map(|kv| kv.split_once('=').unwrap().0).collect();
        assert_eq!(keys, ["experiment", "name", "value", "tolerance", "pass"], "{line}");
        assert!(line.starts_with("experiment=geodesic "));
    }
    let csv = fs::read_to_string(tmp.path().join("curves/geodesic.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,x0,x1,x2,y0,y1,y2"));
    assert!(csv.lines().count() > 100);
}

#[test]
fn same_seed_same_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    for exp in ["tensors", "lightcone", "focal-correspondence"] {
        let cfg = configs().join(format!("{exp}.cfg"));
        let (a, b) = (tmp.path().join(format!("{exp}-a")), tmp.path().join(format!("{exp}-b")));
        run(exp, &cfg, &a, &["--seed", "123"]);
        run(exp, &cfg, &b, &["--seed", "123"]);
        let mut dirs = vec![PathBuf::new()];
        while let Some(rel) = dirs.pop() {
            for entry in fs::read_dir(a.join(&rel)).unwrap() {
                let name = rel.join(entry.unwrap().file_name());
                let (pa, pb) = (a.join(&name), b.join(&name));
                if pa.is_dir() {
                    dirs.push(name);
                } else {
                    assert_eq!(fs::read(&pa).unwrap(), fs::read(&pb).unwrap(), "{exp}/{name:?}");
                }
            }
        }
    }
}

#[test]
fn lightcone_minkowski_vs_bogoslovsky() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("lightcone", &configs().join("lightcone.cfg"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let recs = records(tmp.path());
    assert!(recs.iter().any(|r| r.contains("name=coincidence_verdict value=0.0 ") && r.ends_with("pass=true")), "{recs:?}");
}

#[test]
fn unit_factor_gives_identity_pairing() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("focal-correspondence", &configs().join("focal-correspondence-identity.cfg"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let listing = fs::read_to_string(tmp.path().join("focal.txt")).unwrap();
    let mut sides = [0, 0];
    for line in listing.lines() {
        let get = |key: &str| -> f64 {
            line.split(' ').find_map(|kv| kv.strip_prefix(key)).unwrap().parse().unwrap()
        };
        assert!((get("parameter=") - get("paired_parameter=")).abs() < 1e-10, "{line}");
        sides[usize::from(line.starts_with("side=lambdaL"))] += 1;
    }
    assert_eq!(sides, [1, 1], "{listing}");
}

#[test]
fn failing_assertion_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("tensors", &configs().join("tensors.cfg"), tmp.path(), &["--tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(records(tmp.path()).iter().any(|r| r.ends_with("pass=false")));
    assert!(stderr(&o).contains("g_vv_minus_L"));
}

#[test]
fn missing_metric_file_exits_two_naming_it() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("x.cfg");
    fs::write(&cfg, "[metric]\nfile = nowhere/absent.metric\n").unwrap();
    let o = run("tensors", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.metric"), "{}", stderr(&o));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.cfg");
    let o = run("tensors", &missing, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.cfg"));

    let cases = [
        ("tensors", "[metric]\nbuiltin = minkowski3\ntypo = 1\n", "typo"),
        ("tensors", "[metric]\nbuiltin = no_such_metric\n", "no_such_metric"),
        ("tensors", "[metric]\nbody = -y0^2 + \ndim = 2\n", "body"),
        ("geodesic", "[metric]\nbuiltin = minkowski3\n[geodesic]\nx0 = 0,0\nv0 = 1,1,0\nspan = 1\n", "x0"),
        ("nonsense", "[metric]\nbuiltin = minkowski3\n", "nonsense"),
    ];
    for (exp, text, needle) in cases {
        let cfg = tmp.path().join("bad.cfg");
        fs::write(&cfg, text).unwrap();
        let o = run(exp, &cfg, &tmp.path().join("o"), &[]);
        assert_eq!(o.status.code(), Some(2), "{text}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{text}: {}", stderr(&o));
    }

    let o = finslab(&["tensors"]);
    assert_eq!(o.status.code(), Some(2));
}
