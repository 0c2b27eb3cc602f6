use std::fs;
use std::path::Path;

use lmg_rdm::cli::{run, EXIT_CONFIG, EXIT_FAILED, EXIT_OK};
use lmg_rdm::lmg::{thermal_moments, LmgParams};

fn cli(args: &[&str]) -> i32 {
    let mut full = vec!["lmg-rdm"];
    full.extend_from_slice(args);
    run(full)
}

fn read_table(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn manifest(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_default_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(cli(&["verify", "--out", out]), EXIT_OK);
    let m = manifest(&dir.path().join("verify_manifest.json"));
    assert_eq!(m["passed"], true);
    assert_eq!(m["config"]["seed"], "42");
    let checks = m["checks"].as_array().unwrap();
    let mut names: Vec<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    let total = names.len();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), total, "every check listed once");
    assert!(names.contains(&"qudit N=4 d=2 seed=42 r1"));
}

#[test]
fn corrupted_coupling_fails_on_r1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        cli(&[
            "verify",
            "--instances",
            "2",
            "--corrupt-coupling",
            "--out",
            out
        ]),
        EXIT_FAILED
    );
    let m = manifest(&dir.path().join("verify_manifest.json"));
    let failed: Vec<String> = m["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap().to_string())
        .collect();
    assert!(failed.iter().any(|n| n.ends_with("r1")), "{failed:?}");
}

#[test]
fn verify_free_spins_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# free spins\nJ=0\nlambda=0.4\nT=0.8\ninstances=1\n").unwrap();
    let out = dir.path().join("o");
    assert_eq!(
        cli(&[
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        EXIT_OK
    );
    let m = manifest(&out.join("verify_manifest.json"));
    assert_eq!(m["config"]["J"], "0");
    for c in m["checks"].as_array().unwrap() {
        let name = c["name"].as_str().unwrap();
        if name.starts_with("free spins") {
            let v: f64 = c["measured"].as_str().unwrap().parse().unwrap();
            assert!(v <= 1e-9, "{name}: {v}");
        }
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "param=lambda\nsizes=6\nrange=0.1:0.5:5\ngamma=0.5\n").unwrap();
    let out = dir.path().join("o");
    let code = cli(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--gamma",
        "0.25",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let text = fs::read_to_string(out.join("sweep_N6.csv")).unwrap();
    assert!(text.contains("# gamma=0.25\n"));
    assert!(text.contains("# range=0.1:0.5:5\n"));
}

#[test]
fn ground_state_sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let code = cli(&[
            "sweep",
            "--param",
            "lambda",
            "--sizes",
            "500",
            "--range",
            "0.8:1.2:401",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
    }
    for name in ["sweep_N500.csv", "sweep_N500_deriv.csv"] {
        let x = fs::read(a.join(name)).unwrap();
        let y = fs::read(b.join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
    let (header, rows) = read_table(&a.join("sweep_N500.csv"));
    assert_eq!(
        header,
        ["lambda", "r11", "r22", "r44", "r14", "r23", "F", "E"]
    );
    assert_eq!(rows.len(), 401);
    let text = fs::read_to_string(a.join("sweep_N500.csv")).unwrap();
    assert!(text.starts_with("# lmg-rdm "));
    assert!(text.contains("# sizes=500\n"));
}

#[test]
fn thermal_sweep_r23_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = cli(&[
        "sweep",
        "--param",
        "T",
        "--sizes",
        "200",
        "--range",
        "0.7:1.3:7",
        "--out",
        out,
    ]);
    assert_eq!(code, EXIT_OK);
    let (header, rows) = read_table(&dir.path().join("sweep_N200.csv"));
    let col = header.iter().position(|h| h == "r23").unwrap();
    let p = LmgParams::isotropic_x(200, 0.0).unwrap();
    for row in rows {
        let r = thermal_moments(&p, row[0]).unwrap().rdm(200).unwrap();
        assert!(
            (row[col] - r.r23).abs() < 1e-15,
            "{} vs {}",
            row[col],
            r.r23
        );
    }
}

#[test]
fn free_spin_sweep_free_energy_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = cli(&[
        "sweep",
        "--param",
        "lambda",
        "--J",
        "0",
        "--temperature",
        "0.6",
        "--sizes",
        "50,500",
        "--range=-1:1:9",
        "--out",
        out,
    ]);
    assert_eq!(code, EXIT_OK);
    for n in [50.0, 500.0] {
        let (header, rows) = read_table(&dir.path().join(format!("sweep_N{n}.csv")));
        let col = header.iter().position(|h| h == "F").unwrap();
        for row in rows {
            let exact = -n * 0.6 * (2.0 * (row[0] / 0.6).cosh()).ln();
            assert!((row[col] - exact).abs() < 1e-10);
        }
    }
}

#[test]
fn sweep_then_collapse() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = cli(&[
        "sweep",
        "--param",
        "lambda",
        "--sizes",
        "100,200,400",
        "--range",
        "0.6:1.3:141",
        "--observable",
        "S_renyi(2),concurrence",
        "--out",
        out,
    ]);
    assert_eq!(code, EXIT_OK);
    let (header, _) = read_table(&dir.path().join("sweep_N100_deriv.csv"));
    assert_eq!(header.last().unwrap(), "dconcurrence");
    assert_eq!(
        cli(&["collapse", "--in", out, "--nu-window", "0.5:4"]),
        EXIT_OK
    );
    let m = manifest(&dir.path().join("collapse_manifest.json"));
    let nu = m["details"]["nu"].as_f64().unwrap();
    assert!(nu > 1.0 && nu < 2.5, "{nu}");
    assert!(dir.path().join("collapse_N400.csv").exists());
}

#[test]
fn collapse_needs_three_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        cli(&["sweep", "--param", "lambda", "--sizes", "10,20", "--range", "0:2:21", "--out", out]),
        EXIT_OK
    );
    assert_eq!(cli(&["collapse", "--in", out]), EXIT_CONFIG);
}

#[test]
fn entropy_command_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = cli(&[
        "entropy",
        "--order",
        "2",
        "--param",
        "lambda",
        "--sizes",
        "100",
        "--range",
        "0.6:1.4:81",
        "--out",
        out,
    ]);
    assert_eq!(code, EXIT_OK);
    let (header, rows) = read_table(&dir.path().join("entropy_N100.csv"));
    assert_eq!(
        header,
        ["lambda", "S_renyi(2)", "dS_renyi(2)", "concurrence"]
    );
    assert_eq!(rows.len(), 81);
    assert!(rows.iter().all(|r| r[1] >= 0.0 && r[1] <= 4f64.ln()));
}

#[test]
fn smoke_reproduction_is_fast_and_claims_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let start = std::time::Instant::now();
    assert_eq!(
        cli(&["reproduce", "fig1", "--smoke", "--out", out]),
        EXIT_OK
    );
    assert!(start.elapsed().as_secs_f64() < 5.0);
    let m = manifest(&dir.path().join("fig1_manifest.json"));
    assert!(m["checks"].as_array().unwrap().is_empty());
    assert!(dir.path().join("fig1_N50.csv").exists());
    assert!(dir.path().join("fig1_crossings.csv").exists());
}

#[test]
fn invalid_configuration_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        cli(&["sweep", "--param", "mu", "--sizes", "10", "--range", "0:1:9", "--out", out]),
        EXIT_CONFIG
    );
    assert_eq!(
        cli(&["sweep", "--param", "lambda", "--sizes", "10", "--range", "1:0:9", "--out", out]),
        EXIT_CONFIG
    );
    assert_eq!(
        cli(&["sweep", "--param", "lambda", "--sizes", "10", "--range", "0:1:4", "--out", out]),
        EXIT_CONFIG
    );
    assert_eq!(
        cli(&["sweep", "--param", "T", "--sizes", "10", "--range", "0:1:9", "--out", out]),
        EXIT_CONFIG
    );
    assert_eq!(
        cli(&[
            "sweep", "--param", "lambda", "--sizes", "10", "--range", "0:1:9", "--gamma", "2",
            "--out", out
        ]),
        EXIT_CONFIG
    );
    assert_eq!(cli(&["reproduce", "fig3", "--out", out]), EXIT_CONFIG);
    assert_eq!(
        cli(&[
            "entropy", "--order", "0", "--param", "lambda", "--sizes", "10", "--range", "0:1:9",
            "--out", out
        ]),
        EXIT_CONFIG
    );
    assert_eq!(cli(&["bogus"]), EXIT_CONFIG);
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "colour=blue\n").unwrap();
    assert_eq!(
        cli(&["verify", "--config", cfg.to_str().unwrap()]),
        EXIT_CONFIG
    );
}
