use std::fs;
use std::path::PathBuf;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_crm-lab");

const BASE_CONF: &str = "\
family = gamma
alpha = 1.0
beta = 1.0
window = 0:1
eps_trunc = 1e-6
seed = 11
n_samples = 1500
current.amplitude = 0.8
current.center = 0.5
current.width = 0.3
functional.region = 0.2:0.8
functional.t = 1.0
";

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("crm-lab-test-{name}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_conf(dir: &PathBuf) -> PathBuf {
    let path = dir.join("run.conf");
    fs::write(&path, BASE_CONF).unwrap();
    path
}

#[test]
fn sample_is_deterministic_and_csv_shaped() {
    let dir = tmpdir("sample");
    let conf = write_conf(&dir);
    let run = |out: &str| {
        let path = dir.join(out);
        let status = Command::new(BIN)
            .args(["sample", "--config"])
            .arg(&conf)
            .arg("--out")
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        fs::read_to_string(path).unwrap()
    };
    let a = run("a.csv");
    let b = run("b.csv");
    assert_eq!(a, b);
    assert!(a.starts_with("x_1,weight\n"));
    assert!(a.lines().count() > 1);
}

#[test]
fn transform_then_inverse_is_identity_on_weights() {
    let dir = tmpdir("transform");
    let conf = write_conf(&dir);
    let eta = dir.join("eta.csv");
    assert!(Command::new(BIN)
        .args(["sample", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(&eta)
        .status()
        .unwrap()
        .success());
    let fwd = dir.join("fwd.csv");
    assert!(Command::new(BIN)
        .args(["transform", "--config"])
        .arg(&conf)
        .arg("--input")
        .arg(&eta)
        .arg("--out")
        .arg(&fwd)
        .status()
        .unwrap()
        .success());
    let back = dir.join("back.csv");
    assert!(Command::new(BIN)
        .args(["transform", "--config"])
        .arg(&conf)
        .args(["--set", "current.amplitude=-0.8"])
        .arg("--input")
        .arg(&fwd)
        .arg("--out")
        .arg(&back)
        .status()
        .unwrap()
        .success());
    let orig = fs::read_to_string(&eta).unwrap();
    let round = fs::read_to_string(&back).unwrap();
    for (a, b) in orig.lines().skip(1).zip(round.lines().skip(1)) {
        let wa: f64 = a.rsplit(',').next().unwrap().parse().unwrap();
        let wb: f64 = b.rsplit(',').next().unwrap().parse().unwrap();
        assert!((wa - wb).abs() < 1e-12 * wa.max(1.0), "{wa} vs {wb}");
    }
}

#[test]
fn verify_current_exit_codes() {
    let dir = tmpdir("exitcodes");
    let conf = write_conf(&dir);
    let ok = Command::new(BIN)
        .args(["verify-current", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(dir.join("ok.json"))
        .status()
        .unwrap();
    assert_eq!(ok.code(), Some(0));
    // A 10% density mutation must be detected.
    let bad = Command::new(BIN)
        .args(["verify-current", "--config"])
        .arg(&conf)
        .args(["--set", "density_scale=1.1"])
        .arg("--out")
        .arg(dir.join("bad.json"))
        .status()
        .unwrap();
    assert_eq!(bad.code(), Some(1));
    // Unknown family is a configuration error.
    let cfg = Command::new(BIN)
        .args(["verify-current", "--config"])
        .arg(&conf)
        .args(["--set", "family=unknown"])
        .status()
        .unwrap();
    assert_eq!(cfg.code(), Some(2));
}

#[test]
fn report_aggregates_json_files() {
    let dir = tmpdir("report");
    let conf = write_conf(&dir);
    let json = dir.join("r.json");
    assert!(Command::new(BIN)
        .args(["verify-current", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(&json)
        .status()
        .unwrap()
        .success());
    let csv = dir.join("summary.csv");
    let out = Command::new(BIN)
        .arg("report")
        .arg(&json)
        .arg("--csv")
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("verify-current"));
    assert!(text.contains("1/1 checks passed"));
    let summary = fs::read_to_string(csv).unwrap();
    assert!(summary.starts_with("op,"));
    assert!(summary.contains("verify-current"));
}

#[test]
fn diagnose_qi_reports_divergence_for_gamma() {
    let dir = tmpdir("diagnose");
    let conf = write_conf(&dir);
    let out = Command::new(BIN)
        .args(["diagnose-qi", "--config"])
        .arg(&conf)
        .args(["--set", "diffeo.amplitude=0.05"])
        .args(["--set", "diffeo.center=0.5"])
        .args(["--set", "diffeo.width=0.3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"verdict\": \"diverges\""), "{text}");
}
