use std::path::Path;
use std::process::{Command, Output};

fn maxproc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxproc"))
        .args(args)
        .env_remove("MAXPROC_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Value in the column `col` of the CSV row whose first field parses to `r`.
fn csv_at(csv: &str, r: f64, col: usize) -> f64 {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|f| (f[0].parse::<f64>().unwrap() - r).abs() < 1e-12)
        .map(|f| f[col].parse().unwrap())
        .unwrap_or_else(|| panic!("no row at r = {r}"))
}

fn entries(dir: &Path) -> usize {
    std::fs::read_dir(dir).unwrap().count()
}

#[test]
fn tabulate_h_values() {
    let o = maxproc(&["tabulate-h", "--rmax", "3"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert_eq!(csv.lines().next(), Some("r,h"));
    assert!((csv_at(&csv, 3.0, 1) - std::f64::consts::FRAC_1_PI).abs() < 1e-12);
    assert!((csv_at(&csv, 1.5, 1) - 0.300105).abs() < 1e-6);
    for line in csv.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        if f[0] <= 1.0 {
            assert_eq!(f[1], 0.0, "h({}) should vanish", f[0]);
        }
    }
}

#[test]
fn tabulate_h_attractive_peak() {
    let csv = stdout(&maxproc(&[
        "tabulate-h",
        "--a",
        "9",
        "--b",
        "1",
        "--rmax",
        "10",
        "--dx",
        "0.01",
    ]));
    let (argmax, _) = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[0], f[1])
        })
        .fold((0.0, f64::MIN), |best, p| if p.1 > best.1 { p } else { best });
    assert!((argmax - 2.0).abs() < 1e-9);
}

#[test]
fn solve_g_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let o = maxproc(&["solve-g", "--method", "all", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next(), Some("r,series,volterra_abel,recursion_hb"));
    for col in 1..=3 {
        assert!((csv_at(&csv, 1.5, col) - 0.505055).abs() < 1e-4);
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("g.csv.json")).unwrap()).unwrap();
    for (_, d) in meta["discrepancies"].as_object().unwrap() {
        assert!(d.as_f64().unwrap() <= 2e-3);
    }
    assert_eq!(meta["scaling"]["pass"], true);
    assert!(dir.path().join("g.csv.residual.csv").exists());
}

#[test]
fn laplace_check_passes() {
    let o = maxproc(&["laplace-check", "--method", "series", "--theta", "0.5,2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn rho_report() {
    let o = maxproc(&["rho"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["rho"].as_f64().unwrap() - 0.85403).abs() < 1e-4);
}

#[test]
fn invalid_params_exit_2_without_files() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["tabulate-h", "--a", "0.5", "--b", "1"],
        vec!["solve-g", "--dx", "-1"],
        vec!["gap-density", "--rmax", "0.001"],
        vec!["simulate", "--dt", "0.1"],
        vec!["laplace-check", "--theta", "0"],
    ] {
        let out = dir.path().join("x.csv");
        let mut full = args.clone();
        full.extend(["--out", out.to_str().unwrap()]);
        let o = maxproc(&full);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert_eq!(entries(dir.path()), 0, "{args:?} left files behind");
    }
}

#[test]
fn bad_thread_cap_exits_2() {
    let o = Command::new(env!("CARGO_BIN_EXE_maxproc"))
        .arg("rho")
        .env("MAXPROC_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_4() {
    let o = maxproc(&["rho", "--out", "/nonexistent-dir/rho.json"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn missing_config_exits_4() {
    let o = maxproc(&["rho", "--config", "/nonexistent-dir/run.toml"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn config_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "a = 9.0\nb = 1.0\nrmax = 2.5\n").unwrap();
    let from_file = stdout(&maxproc(&["tabulate-h", "--config", cfg.to_str().unwrap()]));
    assert!((csv_at(&from_file, 2.0, 1) - 0.5 / std::f64::consts::PI).abs() < 1e-12);
    let overridden = stdout(&maxproc(&["tabulate-h", "--config", cfg.to_str().unwrap(), "--a", "1"]));
    assert!((csv_at(&overridden, 2.0, 1) - 1.0 / std::f64::consts::PI).abs() < 1e-12);
    assert!(overridden.lines().last().unwrap().starts_with("2.5,"));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, args: &[&str]| {
        let out = dir.path().join(name);
        let mut full = args.to_vec();
        full.extend(["--out", out.to_str().unwrap()]);
        assert!(maxproc(&full).status.success());
        std::fs::read(out).unwrap()
    };
    let sim = ["simulate", "--paths", "8", "--horizon", "60"];
    assert_eq!(run("s1.json", &sim), run("s2.json", &sim));
    let plot = ["plot", "h", "--a", "9"];
    assert_eq!(run("p1.svg", &plot), run("p2.svg", &plot));
    let threads = |n: &str| {
        let out = dir.path().join(format!("t{n}.json"));
        let o = Command::new(env!("CARGO_BIN_EXE_maxproc"))
            .args(sim)
            .args(["--out", out.to_str().unwrap()])
            .env("MAXPROC_THREADS", n)
            .output()
            .unwrap();
        assert!(o.status.success());
        std::fs::read(out).unwrap()
    };
    assert_eq!(threads("1"), threads("3"));
}

#[test]
fn simulate_writes_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let gaps = dir.path().join("gaps.csv");
    let o = maxproc(&[
        "simulate",
        "--paths",
        "4",
        "--horizon",
        "60",
        "--gaps-out",
        gaps.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let csv = std::fs::read_to_string(gaps).unwrap();
    assert_eq!(csv.lines().next(), Some("gap"));
    assert_eq!(csv.lines().count() as u64 - 1, summary["gaps"]["n"].as_u64().unwrap());
    assert_eq!(summary["close_pairs"], 0);
}

#[test]
fn plots_are_svg() {
    let dir = tempfile::tempdir().unwrap();
    for target in ["g1", "ln-g1", "h", "gap-density", "pair-corr-overlay"] {
        let out = dir.path().join(format!("{target}.svg"));
        let o = maxproc(&[
            "plot",
            target,
            "--paths",
            "4",
            "--horizon",
            "60",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{target}: {}", String::from_utf8_lossy(&o.stderr));
        let svg = std::fs::read_to_string(out).unwrap();
        assert!(
            svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"),
            "{target}"
        );
        assert!(svg.contains("<path") || svg.contains("<polyline"), "{target}");
    }
    assert_eq!(maxproc(&["plot", "h"]).status.code(), Some(2));
}

#[test]
fn verify_fast_passes() {
    let o = maxproc(&["verify", "--profile", "fast"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["criteria"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}
