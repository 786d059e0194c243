//! Black-box tests of the command-line interface: output schema,
//! determinism, config merging, and exit codes.

use std::io::Write;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nodalkit"))
}

/// Drops the single timestamp header line so runs can be compared.
fn strip_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# timestamp:"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn density_is_deterministic_modulo_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        let status = bin()
            .args(["density", "--ell", "12", "--points", "20", "--out"])
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        outs.push(std::fs::read_to_string(&path).unwrap());
    }
    assert_eq!(strip_timestamp(&outs[0]), strip_timestamp(&outs[1]));
    assert!(outs[0].starts_with("# schema=1\n"));
    assert!(outs[0].contains("quantity,psi,value,regime"));
    assert!(outs[0].contains("\nplanar,"));
}

#[test]
fn config_file_merges_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let mut f = std::fs::File::create(&cfg).unwrap();
    writeln!(f, "# small run\nell = 8\npoints = 15\nseed = 42").unwrap();
    drop(f);
    let out = dir.path().join("out.csv");
    let status = bin()
        .args(["density", "--config"])
        .arg(&cfg)
        .args(["--ell", "9", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    // flag wins over file, file wins over default
    assert!(text.contains("ell=9"));
    assert!(text.contains("points=15"));
    assert!(text.contains("seed=42"));
}

#[test]
fn length_table_and_fit_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("len.csv");
    let status = bin()
        .args(["length", "--ells", "5,10", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("ell,total,leading,deficiency,hc,hi,hf"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3);

    // five degrees triggers the fit summary
    let fit = dir.path().join("fit.json");
    let status = bin()
        .args(["length", "--ells", "20,40,80,160,320", "--out"])
        .arg(dir.path().join("len5.csv"))
        .arg("--fit-out")
        .arg(&fit)
        .status()
        .unwrap();
    assert!(status.success());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&fit).unwrap()).unwrap();
    assert!(json["slope"].as_f64().unwrap() < 0.0);
    assert_eq!(json["schema"], 1);
}

#[test]
fn simulate_writes_replicates_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim.csv");
    let segs = dir.path().join("segs.csv");
    let field = dir.path().join("field.bin");
    let status = bin()
        .args([
            "simulate", "--ell", "3", "--replicates", "30", "--seed", "11", "--out",
        ])
        .arg(&out)
        .arg("--segments-out")
        .arg(&segs)
        .arg("--field-out")
        .arg(&field)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 31);
    assert!(text.contains("prediction="));
    assert!(std::fs::read_to_string(&segs).unwrap().lines().count() > 1);
    let bytes = std::fs::read(&field).unwrap();
    assert_eq!(&bytes[..4], b"NKF1");
}

#[test]
fn usage_errors_exit_2() {
    let status = bin()
        .args(["density", "--ell", "0"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let status = bin()
        .args(["density", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    let err = String::from_utf8_lossy(&status.stderr);
    assert!(err.contains("no_such_key"));
}

#[test]
fn numerical_domain_errors_exit_nonzero_with_diagnostic() {
    // a grid below the resolution rule is refused with a diagnostic
    let out = bin()
        .args([
            "simulate", "--ell", "10", "--replicates", "30", "--n-theta", "5", "--n-phi", "10",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("\"error\""));
}
