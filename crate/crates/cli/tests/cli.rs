use std::path::Path;
use std::process::{Command, Output};

fn qbounce(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbounce"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("spawn qbounce")
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn basis_table_matches_quoted_transitions() {
    let dir = tempfile::tempdir().unwrap();
    let out = qbounce(dir.path(), &["basis", "--M", "6", "--matrix", "z.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_rows(&dir.path().join("basis.csv"));
    assert_eq!(rows.len(), 6);
    let z_i1: Vec<String> = rows[1..].iter().map(|r| format!("{:.3}", r[3].parse::<f64>().unwrap())).collect();
    assert_eq!(z_i1, ["1.750", "3.182", "4.449", "5.606", "6.685"]);
    // 17 significant digits
    assert_eq!(rows[0][1], "2.3381074104597648e0");
    let matrix = data_rows(&dir.path().join("z.csv"));
    assert_eq!(matrix.len(), 6);
    assert_eq!(matrix[0].len(), 7);
}

const ZERO_SCAN: &str = r#"
mode = "scan"
[basis]
states = 20
[scan]
start = 2.0
stop = 20.0
step = 0.1
[[kick]]
kind = "magnetic"
amplitude = 0.0
width = 0.2
[[kick]]
kind = "magnetic"
amplitude = 0.0
width = 0.2
"#;

#[test]
fn zero_amplitude_scan_is_constant_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.toml");
    std::fs::write(&cfg, ZERO_SCAN).unwrap();
    let out = qbounce(dir.path(), &["--no-convergence", "scan", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let scan = dir.path().join("scan.csv");
    let header = std::fs::read_to_string(&scan).unwrap();
    assert!(header.contains("# config:") && header.contains("#   mode = \"scan\""));
    let rows = data_rows(&scan);
    assert_eq!(rows.len(), 181);
    for r in rows {
        assert!((r[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-12, "{r:?}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // usage and configuration errors
    assert_eq!(qbounce(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(qbounce(dir.path(), &["scan", "--preset", "nope"]).status.code(), Some(1));
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "mode = \"scan\"\ncolour = \"blue\"\n").unwrap();
    let out = qbounce(dir.path(), &["scan", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
    // a scan config handed to the echo pipeline
    let out = qbounce(dir.path(), &["quantum-echo", "--preset", "fig4"]);
    assert_eq!(out.status.code(), Some(1));
    // numerical failure: a packet far outside what the basis can represent
    let leak = dir.path().join("leak.toml");
    std::fs::write(
        &leak,
        "mode = \"quantum-echo\"\n[basis]\nstates = 5\n[initial]\nstate = \"gaussian\"\nmu_z = 40.0\nsigma_z = 1.0\n\
         [time]\nstart = 0.0\nstop = 1.0\nstep = 0.5\n",
    )
    .unwrap();
    let out = qbounce(dir.path(), &["--no-convergence", "quantum-echo", "--config", leak.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(qbounce(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn spectrum_and_retrieve_read_a_scan_back() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("weak.toml");
    std::fs::write(
        &cfg,
        "mode = \"scan\"\n[basis]\nstates = 30\n[scan]\nstart = 2.0\nstop = 60.0\nstep = 0.05\nspin = \"up\"\n\
         [[kick]]\nkind = \"magnetic\"\namplitude = 0.5\nwidth = 0.2\n[[kick]]\nkind = \"magnetic\"\namplitude = 0.5\nwidth = 0.2\n",
    )
    .unwrap();
    assert!(qbounce(dir.path(), &["--no-convergence", "scan", "--config", cfg.to_str().unwrap()]).status.success());
    let scan = dir.path().join("scan.csv");
    let out = qbounce(dir.path(), &["spectrum", "--in", scan.to_str().unwrap(), "--lines", "3", "--floor", "0.001"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let peaks: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("peaks.json")).unwrap()).unwrap();
    let peaks = peaks.as_array().unwrap();
    assert_eq!(peaks.len(), 3);
    for p in peaks {
        assert!(p["rel_error_percent"].as_f64().unwrap().abs() < 1.0, "{p}");
    }
    let out = qbounce(dir.path(), &["retrieve", "--in", scan.to_str().unwrap(), "--lines", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("retrieval.json")).unwrap()).unwrap();
    assert_eq!(r["amplitudes"].as_array().unwrap().len(), 3);
}

#[test]
fn classical_output_is_seeded_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(
        &cfg,
        "mode = \"classical-echo\"\nseed = 7\n[ensemble]\nparticles = 3000\nmu_z = 20.0\nmu_v = 0.0\nsigma_z = 4.0\nsigma_v = 0.125\n\
         [time]\nstart = 0.0\nstop = 80.0\nstep = 0.5\n[[kick]]\nkind = \"magnetic\"\namplitude = 0.5\nwidth = 0.5\ncenter = 30.0\n",
    )
    .unwrap();
    let run = |threads: &str, seed: Option<&str>| {
        let sub = dir.path().join(format!("t{threads}{}", seed.unwrap_or("")));
        let mut args = vec!["--out-dir", sub.to_str().unwrap(), "--threads", threads];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        args.extend(["classical-echo", "--config", cfg.to_str().unwrap()]);
        let out = Command::new(env!("CARGO_BIN_EXE_qbounce")).args(&args).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        data_rows(&sub.join("series.csv"))
    };
    let one = run("1", None);
    assert_eq!(one, run("4", None));
    assert_ne!(one, run("1", Some("8")));
}

#[test]
fn convert_and_preset_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = qbounce(dir.path(), &["convert", "1", "--quantity", "length"]);
    let metres: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((metres * 1e6 - 5.87).abs() < 0.005);
    let out = qbounce(dir.path(), &["convert", "0.8", "--quantity", "gradient", "--from-si"]);
    let a: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((a - 0.5).abs() < 0.05);
    assert_eq!(qbounce(dir.path(), &["convert", "1", "--quantity", "mass"]).status.code(), Some(1));
    let out = qbounce(dir.path(), &["preset", "fig2"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("mode = \"quantum-echo\""));
}
