use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_csl-budget"));
    c.env_remove("CSL_BUDGET_DATA_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn csl-budget")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Minimal well-formedness check: every element closes in order.
fn assert_well_formed(svg: &str) {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = svg;
    while let Some(start) = rest.find('<') {
        let end = rest[start..].find('>').expect("unterminated tag") + start;
        let tag = &rest[start + 1..end];
        if let Some(name) = tag.strip_prefix('/') {
            assert_eq!(stack.pop().as_deref(), Some(name.trim()), "mismatched </{name}>");
        } else if !tag.ends_with('/') {
            let name = tag.split_whitespace().next().unwrap();
            stack.push(name.to_string());
        }
        rest = &rest[end + 1..];
    }
    assert!(stack.is_empty(), "unclosed: {stack:?}");
    assert!(!svg.contains("NaN") && !svg.contains("inf"));
}

fn value(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .and_then(|v| v.split(',').next())
        .unwrap_or_else(|| panic!("no {key} in {report}"))
        .parse()
        .unwrap()
}

#[test]
fn csl_heating_cuore() {
    let out = run(&["csl-heating", "--lambda", "1e-10", "--rc", "1e-7", "--preset", "cuore"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let dt = value(&text, "steady_gradient");
    assert!((dt / 4.8e-3 - 1.0).abs() < 0.25, "{dt}");
    assert_eq!(value(&text, "mass"), 0.75);
}

#[test]
fn csl_heating_zero_lambda() {
    let out = run(&["csl-heating", "--lambda", "0", "--rc", "1e-7"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for key in ["power", "heating_per_mass", "steady_gradient"] {
        assert_eq!(value(&text, key), 0.0);
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&run(&["csl-heating", "--lambda", "1e-10"])), 2);
    assert_eq!(code(&run(&["csl-heating", "--lambda", "-1", "--rc", "1e-7"])), 2);
    assert_eq!(code(&run(&["no-such-command"])), 2);
    assert_eq!(code(&run(&["--faces", "bottom", "csl-heating", "--lambda", "1", "--rc", "1e-7"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&run(&["--out", out, "gamma-scan", "--thickness", ""])), 2);
    assert_eq!(code(&run(&["--out", out, "--margin", "0", "sensitivity"])), 2);
}

#[test]
fn data_format_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "depth_kmwe,intensity_cm2_s_sr,intensity_err\n1,1e-7,0\n2,2e-7,0\n").unwrap();
    let out_dir = dir.path().join("out");
    let o = out_dir.to_str().unwrap();
    let out = run(&["--out", o, "muon-scan", "--depth-table", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("rows 1 and 2"));

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "depth_kmwe,intensity_cm2_s_sr,intensity_err\n").unwrap();
    assert_eq!(code(&run(&["--out", o, "muon-scan", "--depth-table", empty.to_str().unwrap()])), 3);

    let garbled = dir.path().join("garbled.csv");
    std::fs::write(&garbled, "depth_kmwe,intensity_cm2_s_sr,intensity_err\n1,x,0\n").unwrap();
    assert_eq!(code(&run(&["--out", o, "muon-scan", "--depth-table", garbled.to_str().unwrap()])), 3);
}

#[test]
fn checksum_mismatch_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    for f in ["manifest.txt", "pb_attenuation.csv", "ge_attenuation.csv", "lngs_gamma_sample.csv", "standard_rock_depth_intensity.csv"] {
        std::fs::copy(src.join(f), dir.path().join(f)).unwrap();
    }
    let out_dir = dir.path().join("out");
    let args = ["--data-dir", dir.path().to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "muon-scan"];
    assert_eq!(code(&run(&args)), 0);

    let table = dir.path().join("standard_rock_depth_intensity.csv");
    let text = std::fs::read_to_string(&table).unwrap().replace("1.000000e+00", "1.100000e+00");
    std::fs::write(&table, text).unwrap();
    let out = run(&args);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("checksum"));

    // the environment variable selects the same directory
    let out = bin()
        .env("CSL_BUDGET_DATA_DIR", dir.path())
        .args(["--out", out_dir.to_str().unwrap(), "muon-scan"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
}

#[test]
fn domain_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    // outside the depth-intensity table
    assert_eq!(code(&run(&["--out", o, "muon-scan", "--depths", "20"])), 4);
    // unreachable target
    assert_eq!(code(&run(&["--out", o, "sensitivity", "--target-lambda", "1e-30"])), 4);
}

#[test]
fn gamma_scan_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let out = run(&["--out", o, "gamma-scan"]);
    assert_eq!(code(&out), 0);
    let csv = read(dir.path(), "gamma_scan.csv");
    assert!(csv.starts_with("thickness_cm,power_W,power_err_W\n"));
    assert_eq!(csv.lines().count(), 22);
    let fit = read(dir.path(), "gamma_fit.csv");
    assert!(fit.starts_with("slope,intercept,slope_err,intercept_err,chi2,n\n"));
    let svg = read(dir.path(), "gamma_scan.svg");
    assert_well_formed(&svg);
    assert_eq!(svg.matches("<polyline").count(), 1);

    let single = tempfile::tempdir().unwrap();
    let o = single.path().to_str().unwrap();
    assert_eq!(code(&run(&["--out", o, "gamma-scan", "--thickness", "5"])), 0);
    assert_eq!(read(single.path(), "gamma_scan.csv").lines().count(), 2);
    assert!(!single.path().join("gamma_fit.csv").exists());
}

#[test]
fn muon_and_sensitivity_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    assert_eq!(code(&run(&["--out", o, "muon-scan"])), 0);
    let csv = read(dir.path(), "muon_scan.csv");
    assert!(csv.starts_with("depth_kmwe,event_rate_per_s,event_rate_err,power_W,power_err_W\n"));
    for f in ["muon_rate.svg", "muon_power.svg"] {
        let svg = read(dir.path(), f);
        assert_well_formed(&svg);
        assert_eq!(svg.matches("<polyline").count(), 1);
    }
    let fit = read(dir.path(), "muon_rate_fit.csv");
    let slope: f64 = fit.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((slope + 0.49).abs() < 0.03, "{slope}");

    let out = run(&["--out", o, "sensitivity", "--target-lambda", "1e-16"]);
    assert_eq!(code(&out), 0);
    let depth: f64 = read(dir.path(), "depth_for_lambda.csv")
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!((6.2..=6.6).contains(&depth), "{depth}");
}

#[test]
fn exclusion_svg_one_series_per_depth() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    assert_eq!(code(&run(&["--out", o, "exclusion", "--at", "3,5,6.7"])), 0);
    let svg = read(dir.path(), "exclusion.svg");
    assert_well_formed(&svg);
    assert_eq!(svg.matches("<polyline").count(), 3);
    let csv = read(dir.path(), "exclusion_6.7kmwe.csv");
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    let slope = (rows.last().unwrap().1 / rows[0].1).log10() / (rows.last().unwrap().0 / rows[0].0).log10();
    assert!((slope - 2.0).abs() < 1e-5, "{slope}");
}

#[test]
fn bolometer_zero_events_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let out = run(&["--out", o, "bolometer", "--rate", "0", "--duration", "5", "--lambda", "1e-10"]);
    assert_eq!(code(&out), 0);
    let trace = read(dir.path(), "trace.csv");
    let temps: Vec<&str> = trace
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(temps.len(), 501);
    assert!(temps.iter().all(|t| *t == temps[0]));
    assert_eq!(read(dir.path(), "events.csv").lines().filter(|l| !l.starts_with('#')).count(), 1);
    let report = stdout(&out);
    assert!(value(&report, "relative_error").abs() < 1e-12);
}

#[test]
fn bolometer_recovers_gradient() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let out = run(&[
        "--out", o, "--seed", "3", "bolometer", "--rate", "0.05", "--duration", "200", "--energy", "50",
        "--lambda", "1e-10", "--noise",
    ]);
    assert_eq!(code(&out), 0);
    let report = stdout(&out);
    assert!(value(&report, "events") > 0.0);
    assert!(value(&report, "relative_error").abs() < 0.05, "{report}");
}

#[test]
fn golden_bolometer_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let args = [
        "--out", o, "--seed", "42", "bolometer", "--rate", "2", "--duration", "2", "--dt", "0.05", "--energy", "5",
        "--noise",
    ];
    assert_eq!(code(&run(&args)), 0);
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    assert_eq!(read(dir.path(), "trace.csv"), read(&golden, "trace_seed42.csv"));
    assert_eq!(read(dir.path(), "events.csv"), read(&golden, "events_seed42.csv"));
}

#[test]
fn outputs_are_byte_identical() {
    let cases: &[&[&str]] = &[
        &["gamma-scan"],
        &["muon-scan"],
        &["--faces", "all", "--constants", "codata", "muon-scan", "--mc-samples", "20000"],
        &["sensitivity", "--target-lambda", "1e-16"],
        &["exclusion"],
        &["--seed", "9", "bolometer", "--rate", "1", "--duration", "10", "--energy", "5", "--noise"],
    ];
    for args in cases {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        for d in [&a, &b] {
            let mut full = vec!["--out", d.path().to_str().unwrap()];
            full.extend_from_slice(args);
            assert_eq!(code(&run(&full)), 0, "{args:?}");
        }
        let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(!names.is_empty());
        for n in names {
            let x = std::fs::read(a.path().join(&n)).unwrap();
            let y = std::fs::read(b.path().join(&n)).unwrap();
            assert!(x == y, "{args:?}: {n:?} differs");
        }
    }
}

#[test]
fn fit_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("line.csv");
    std::fs::write(&input, "# synthetic\nx,y,e\n0,1,0.1\n1,3,0.1\n2,5,0.1\n3,7,0.1\n").unwrap();
    let o = dir.path().join("out");
    let out = run(&[
        "--out", o.to_str().unwrap(), "fit", input.to_str().unwrap(), "--x", "x", "--y", "y", "--err", "e",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((row[0] - 2.0).abs() < 1e-12 && (row[1] - 1.0).abs() < 1e-12);
    assert_eq!(row[5], 4.0);
    assert_eq!(code(&run(&["fit", input.to_str().unwrap(), "--x", "x", "--y", "nope"])), 2);
}
