//! End-to-end checks of the `pingpong` binary and the command functions.

use std::path::Path;
use std::process::{Command, Output};

use pingpong_cli::{compare, Overrides};
use tempfile::TempDir;

const CANONICAL_IPE: &str = r#"
protocol = "pp_epr"
rounds = 10000
control_prob = 0.5
signal_wavelength_nm = 800.0
detector_window_nm = [600.0, 900.0]
seed = 42

[attack]
kind = "ipe"
lambda_e_nm = 190000.0
"#;

fn pingpong(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pingpong"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .unwrap()
        .iter()
        .map(str::to_string)
        .collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn run_reports_a_perfect_undetected_eavesdropper() {
    let dir = TempDir::new().unwrap();
    let scenario = write(&dir, "ipe.toml", CANONICAL_IPE);
    let text = stdout(&pingpong(&["run", &scenario]));
    assert!(text.contains("eve_accuracy = 1.000000\n"), "{text}");
    assert!(text.contains("anomaly_count = 0\n"), "{text}");
    assert!(text.contains("eve_mi_bits = 1.000000\n"), "{text}");
    assert!(
        text.starts_with("protocol = \"pp_epr\"\nattack = \"ipe(190000 nm)\"\nfilter = false\n")
    );
    // the report is itself valid TOML
    let parsed: toml::Table = text.parse().unwrap();
    assert_eq!(parsed["rounds"].as_integer(), Some(10_000));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let scenario = write(&dir, "ipe.toml", CANONICAL_IPE);
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for out in [&a, &b] {
        stdout(&pingpong(&["run", &scenario, "-o", out.to_str().unwrap()]));
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn overrides_replace_seed_and_rounds() {
    let dir = TempDir::new().unwrap();
    let scenario = write(&dir, "ipe.toml", CANONICAL_IPE);
    let text = stdout(&pingpong(&[
        "--seed", "9", "run", &scenario, "--rounds", "300",
    ]));
    assert!(
        text.contains("seed = 9\n") && text.contains("rounds = 300\n"),
        "{text}"
    );
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad_prob = write(
        &dir,
        "c.toml",
        "protocol = \"pp_epr\"\ncontrol_prob = 1.5\n",
    );
    let out = pingpong(&["run", &bad_prob]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("control_prob"));

    let garbage = write(&dir, "g.toml", "protocol = [\n");
    assert_eq!(pingpong(&["run", &garbage]).status.code(), Some(2));
    let unknown = write(&dir, "u.toml", "protocol = \"pp_epr\"\nphotons = 2\n");
    assert_eq!(pingpong(&["run", &unknown]).status.code(), Some(2));

    let missing = dir.path().join("nope.toml");
    assert_eq!(
        pingpong(&["run", missing.to_str().unwrap()]).status.code(),
        Some(5)
    );

    let ok = write(&dir, "ok.toml", CANONICAL_IPE);
    let out = pingpong(&["sweep", &ok, "--field", "colour", "--values", "1,2"]);
    assert_eq!(out.status.code(), Some(4));

    let unwritable = Path::new("/nonexistent-dir/out.txt");
    let out = pingpong(&[
        "--rounds",
        "10",
        "run",
        &ok,
        "-o",
        unwritable.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn passband_sweep_admits_the_probe_only_when_wide() {
    let dir = TempDir::new().unwrap();
    let scenario = write(&dir, "ipe.toml", CANONICAL_IPE);
    let text = stdout(&pingpong(&[
        "sweep",
        &scenario,
        "--field",
        "passband_half_width_nm",
        "--values",
        "0.005,0.05,5,500000",
    ]));
    let (header, rows) = table(&text);
    assert_eq!(
        header,
        [
            "value",
            "qber",
            "control_failure_rate",
            "eve_accuracy",
            "eve_mi_bits",
            "anomaly_count",
            "absorbed_total"
        ]
    );
    let values: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(values, ["0.005", "0.05", "5", "500000"]);
    let acc = column(&header, "eve_accuracy");
    let absorbed = column(&header, "absorbed_total");
    // about 5000 message rounds: 3 sigma of a fair coin is about 0.021
    for row in &rows[..3] {
        let a: f64 = row[acc].parse().unwrap();
        assert!((a - 0.5).abs() < 0.022, "{row:?}");
        assert_eq!(row[absorbed], "10000");
    }
    assert_eq!(rows[3][acc], "1.000000");
    assert_eq!(rows[3][absorbed], "0");
    // the signal still fits through the narrowest band
    assert_eq!(rows[0][column(&header, "qber")], "0.000000");
}

#[test]
fn empty_sweep_is_header_only() {
    let dir = TempDir::new().unwrap();
    let scenario = write(&dir, "ipe.toml", CANONICAL_IPE);
    for args in [vec!["--values", ""], vec!["--values"]] {
        let mut full = vec!["sweep", &scenario, "--field", "control_prob"];
        full.extend(args);
        let text = stdout(&pingpong(&full));
        assert_eq!(
            text,
            "value,qber,control_failure_rate,eve_accuracy,eve_mi_bits,anomaly_count,absorbed_total\n"
        );
    }
}

#[test]
fn visible_probe_is_noticed() {
    let dir = TempDir::new().unwrap();
    let scenario = write(&dir, "ipe.toml", CANONICAL_IPE);
    let text = stdout(&pingpong(&[
        "sweep",
        &scenario,
        "--field",
        "lambda_e_nm",
        "--values",
        "800",
    ]));
    let (header, rows) = table(&text);
    assert_eq!(rows.len(), 1);
    let anomalies: u64 = rows[0][column(&header, "anomaly_count")].parse().unwrap();
    assert!(anomalies > 0);
}

#[test]
fn sweep_writes_to_a_file() {
    let dir = TempDir::new().unwrap();
    let scenario = write(
        &dir,
        "p.toml",
        "protocol = \"kkkp\"\nrounds = 200\n[attack]\nkind = \"kkkp_probe\"\n",
    );
    let out = dir.path().join("n.csv");
    stdout(&pingpong(&[
        "sweep",
        &scenario,
        "--field",
        "n",
        "--values",
        "1,3",
        "-o",
        out.to_str().unwrap(),
    ]));
    let (_, rows) = table(&std::fs::read_to_string(out).unwrap());
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][0].as_str(), rows[1][0].as_str()), ("1", "3"));
}

#[test]
fn compare_matrix_rows() {
    let text = compare(&Overrides::default()).unwrap();
    let (header, rows) = table(&text);
    assert_eq!(rows.len(), 24);
    let find = |protocol: &str, attack: &str, filter: &str| {
        rows.iter()
            .find(|r| r[0] == protocol && r[1].starts_with(attack) && r[2] == filter)
            .unwrap_or_else(|| panic!("no row {protocol} {attack} {filter}"))
    };
    let acc = column(&header, "eve_accuracy");
    let mi = column(&header, "eve_mi_bits");
    let qber = column(&header, "qber");

    let dense = find("pp_dense", "ipe_dense", "false");
    assert_eq!(dense[acc], "1.000000");
    assert_eq!(dense[mi], "2.000000");

    let probe = find("kkkp", "kkkp_probe(n=4)", "false");
    assert!(probe[mi].parse::<f64>().unwrap() < 0.01, "{probe:?}");

    let honest = find("pp_epr", "no_eve", "true");
    assert_eq!(honest[qber], "0.000000");
    assert_eq!(honest[acc], "");

    let filtered = find("pp_single", "ipe(", "true");
    assert!(filtered[mi].parse::<f64>().unwrap() < 0.01);
}
