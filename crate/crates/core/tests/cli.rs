use std::f64::consts::FRAC_PI_2;
use std::ffi::OsString;
use std::process::Command;

use eeqkd::cli::schema::{self, check_header, recipe, FigureId};
use eeqkd::cli::{format_number, run};
use serde_json::Value;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn eeqkd(args: &[&str]) -> Output {
    let argv: Vec<OsString> = std::iter::once("eeqkd")
        .chain(args.iter().copied())
        .map(OsString::from)
        .collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn ok(args: &[&str]) -> Output {
    let o = eeqkd(args);
    assert_eq!(o.code, 0, "{args:?}: {}", o.stderr);
    o
}

/// Data rows as numbers; text cells become NaN.
fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| {
            l.split(',')
                .map(|c| c.parse().unwrap_or(f64::NAN))
                .collect()
        })
        .collect()
}

fn summary(o: &Output) -> Value {
    let doc: Value = serde_json::from_str(o.stderr.trim()).unwrap();
    doc["summary"].clone()
}

fn h(q: f64) -> f64 {
    -(q * q.log2() + (1.0 - q) * (1.0 - q).log2())
}

#[test]
fn sweep_at_resolution_one_is_the_bb84_point() {
    let o = ok(&["sweep-c", "--resolution", "1"]);
    assert_eq!(o.stdout, "c1,c2,c3,I,q\n0,0,0,0.5,0.25\n");
}

#[test]
fn sweep_row_counts_and_ranges() {
    let both = ok(&["sweep-c", "--resolution", "5"]);
    let data = rows(&both.stdout);
    assert_eq!(data.len(), 125);
    assert!(data
        .iter()
        .all(|r| r[3] >= 0.125 - 1e-9 && r[3] <= 0.5 + 1e-9));
    let s = summary(&both);
    assert_eq!(s["rows"], 125);

    let one = ok(&["sweep-c", "--resolution", "5", "--mode", "one"]);
    let data = rows(&one.stdout);
    assert!(data.iter().all(|r| r[3] <= 0.25 + 1e-9));
    let u2 = data
        .iter()
        .find(|r| r[0] == 0.0 && (r[1] - FRAC_PI_2).abs() < 1e-9 && r[2] == 0.0)
        .unwrap();
    assert!(u2[3].abs() < 1e-9);
}

#[test]
fn reruns_are_byte_identical() {
    for args in [
        &["sweep-c", "--resolution", "3"][..],
        &["table-nq"][..],
        &["loss-qber", "--resolution", "4"][..],
    ] {
        assert_eq!(ok(args).stdout, ok(args).stdout, "{args:?}");
    }
}

#[test]
fn info_qber_lines() {
    let o = ok(&["info-qber", "--resolution", "3"]);
    let lines: Vec<&str> = o.stdout.lines().collect();
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert_eq!(lines[1], "identity,0,0");
    assert_eq!(lines[3], "identity,0.25,0.5");
    let last: Vec<&str> = lines[6].split(',').collect();
    assert_eq!(last[0], "cstar");
    assert!((last[1].parse::<f64>().unwrap() - 0.375).abs() < 1e-6);
    assert!((last[2].parse::<f64>().unwrap() - 0.2237).abs() < 5e-4);
    let s = summary(&o);
    assert!((s["identity"]["slope"].as_f64().unwrap() - 2.0).abs() < 1e-6);
}

#[test]
fn rate_delta_curves() {
    let o = ok(&["rate-delta", "--resolution", "3"]);
    let data = rows(&o.stdout);
    assert_eq!(data.len(), 3);
    assert_eq!(data[0][0], 1.0);
    assert!((data[0][2] - (1.0 - h(0.06))).abs() < 1e-9);
    assert!((data[0][3] - 0.553).abs() < 1e-3);
    let s = summary(&o);
    assert!((s["break_even_delta_ideal"].as_f64().unwrap() - 1.555).abs() < 5e-3);
    assert!((s["break_even_delta_cstar"].as_f64().unwrap() - 1.323).abs() < 5e-3);
    assert!((s["delta_u2star_xyz"].as_f64().unwrap() - 1.88).abs() < 1e-6);
    assert!((s["delta_u2star_xz"].as_f64().unwrap() - 2.76).abs() < 1e-6);
}

#[test]
fn noise_rate_crossings() {
    let o = ok(&["noise-rate", "--resolution", "6"]);
    assert_eq!(rows(&o.stdout).len(), 6);
    let s = summary(&o);
    assert!((s["zero_bb84"].as_f64().unwrap() - 0.1705).abs() < 5e-4);
    assert!((s["zero_u2star_xyz"].as_f64().unwrap() - 0.1536).abs() < 5e-4);
    assert!((s["zero_u2star_xz"].as_f64().unwrap() - 0.1000).abs() < 5e-4);
}

#[test]
fn loss_qber_starts_at_bb84() {
    let o = ok(&["loss-qber", "--resolution", "3", "--q", "0.06,0.1"]);
    let data = rows(&o.stdout);
    assert_eq!(data.len(), 6);
    for r in data.iter().filter(|r| r[1] == 0.0) {
        assert!((r[2] - r[0]).abs() < 1e-9, "{r:?}");
    }
    let at_u2 = data
        .iter()
        .find(|r| r[0] == 0.1 && (r[1] - FRAC_PI_2).abs() < 1e-9)
        .unwrap();
    assert!((at_u2[2] - 0.34).abs() < 1e-6);
}

#[test]
fn amplitude_table_rows() {
    let o = ok(&["table-nq"]);
    let expected = [
        (0.02, 0.0921756),
        (0.04, 0.1272968),
        (0.06, 0.1536672),
        (0.08, 0.1757341),
        (0.10, 0.1951941),
        (0.12, 0.2129089),
        (0.25, 0.3090170),
        (0.5, 0.5),
    ];
    let data = rows(&o.stdout);
    assert_eq!(data.len(), expected.len());
    for (r, (q, n)) in data.iter().zip(expected) {
        assert_eq!(r[0], q);
        assert!((r[1] - n).abs() < 5e-4);
    }
}

#[test]
fn ee_demo_trace() {
    for (n, count) in [("2", 36), ("3", 216)] {
        let o = ok(&["ee-demo", "--qubits", n]);
        assert_eq!(rows(&o.stdout).len(), count);
        let s = summary(&o);
        assert!((s["information"].as_f64().unwrap() - 0.5).abs() < 1e-9);
        assert!((s["qber"].as_f64().unwrap() - 0.25).abs() < 1e-9);
        assert!(s["min_fidelity"].as_f64().unwrap() > 1.0 - 1e-10);
    }
    assert_eq!(eeqkd(&["ee-demo", "--qubits", "4"]).code, 2);
}

#[test]
fn optimize_rate_single_point() {
    let o = ok(&["optimize-rate", "--q", "0.06", "--random-starts", "0"]);
    let data = rows(&o.stdout);
    assert_eq!(data.len(), 1);
    let r = &data[0];
    assert!(r[1..4]
        .iter()
        .all(|&c| (0.0..=FRAC_PI_2 + 1e-12).contains(&c)));
    assert!(r[4] >= r[5] - 1e-9, "optimum below BB84: {r:?}");
}

#[test]
fn out_file_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nq.csv");
    let o = ok(&["table-nq", "--q", "0.06", "--out", path.to_str().unwrap()]);
    assert!(o.stdout.is_empty());
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("q,n\n0.06,0.1536"));
    let side = std::fs::read_to_string(dir.path().join("nq.csv.summary.json")).unwrap();
    let doc: Value = serde_json::from_str(&side).unwrap();
    assert_eq!(doc["manifest"]["subcommand"], "table-nq");
    assert_eq!(doc["manifest"]["output"], path.to_str().unwrap());
    assert_eq!(
        doc["manifest"]["parameters"]["q"],
        serde_json::json!([0.06])
    );
    assert!(doc["manifest"]["duration_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn json_format() {
    let o = ok(&["table-nq", "--q", "0.5", "--format", "json"]);
    let doc: Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(doc["columns"], serde_json::json!(["q", "n"]));
    assert_eq!(doc["rows"], serde_json::json!([[0.5, 0.5]]));
    assert_eq!(doc["manifest"]["subcommand"], "table-nq");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# sweep settings\nresolution = 3\nmode = one\n").unwrap();
    let from_file = ok(&["sweep-c", "--config", conf.to_str().unwrap()]);
    assert_eq!(rows(&from_file.stdout).len(), 27);
    let overridden = ok(&[
        "sweep-c",
        "--config",
        conf.to_str().unwrap(),
        "--resolution",
        "1",
    ]);
    // mode one at c = 0: the single intercepted qubit gives I = 0.25
    assert_eq!(overridden.stdout, "c1,c2,c3,I,q\n0,0,0,0.25,0.125\n");
    std::fs::write(&conf, "resolution: 3\n").unwrap();
    assert_eq!(
        eeqkd(&["sweep-c", "--config", conf.to_str().unwrap()]).code,
        2
    );
}

#[test]
fn exit_codes() {
    assert_eq!(eeqkd(&["no-such-command"]).code, 2);
    assert_eq!(eeqkd(&["table-nq", "--bogus"]).code, 2);
    assert_eq!(eeqkd(&["noise-rate", "--noise", "xy"]).code, 2);
    assert_eq!(eeqkd(&["table-nq", "--q", "0.6"]).code, 2);
    assert_eq!(eeqkd(&["table-nq", "--noise", "xz", "--q", "0.4"]).code, 2);
    assert_eq!(eeqkd(&["sweep-c", "--resolution", "0"]).code, 2);
    assert_eq!(
        eeqkd(&["table-nq", "--out", "/nonexistent-dir/x.csv"]).code,
        2
    );
    let lost = eeqkd(&["loss-qber", "--loss", "1", "--resolution", "2"]);
    assert_eq!(lost.code, 1);
    assert!(lost.stderr.contains("numerical"));
    assert_eq!(eeqkd(&["--help"]).code, 0);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_eeqkd");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap();
    let good = status(&["sweep-c", "--resolution", "1"]);
    assert_eq!(good.status.code(), Some(0));
    assert_eq!(
        String::from_utf8_lossy(&good.stdout),
        "c1,c2,c3,I,q\n0,0,0,0.5,0.25\n"
    );
    assert_eq!(
        status(&["sweep-c", "--resolution", "x"]).status.code(),
        Some(2)
    );
    assert_eq!(
        status(&["loss-qber", "--loss", "1", "--resolution", "2"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn help_documents_columns() {
    let o = eeqkd(&["--help"]);
    for (name, _) in schema::SCHEMAS {
        assert!(o.stdout.contains(name), "{name}");
    }
    let sub = eeqkd(&["optimize-rate", "--help"]);
    assert!(
        sub.stdout.contains("c1,c2,c3,r,r_bb84,s,q_e"),
        "{}",
        sub.stdout
    );
}

#[test]
fn every_output_matches_its_schema() {
    let cases: [(&str, &[&str]); 7] = [
        ("sweep-c", &["--resolution", "1"]),
        ("info-qber", &["--resolution", "2", "--gate", "identity"]),
        ("rate-delta", &["--resolution", "2"]),
        ("noise-rate", &["--resolution", "2"]),
        ("loss-qber", &["--resolution", "2"]),
        ("table-nq", &[]),
        ("ee-demo", &[]),
    ];
    for (name, extra) in cases {
        let mut args = vec![name];
        args.extend_from_slice(extra);
        let o = ok(&args);
        let header = o.stdout.lines().next().unwrap();
        check_header(name, header).unwrap();
        assert!(o.stdout.ends_with('\n'));
    }
    assert_eq!(
        schema::columns("optimize-rate").unwrap(),
        schema::OPTIMIZE_RATE
    );
}

#[test]
fn figure_recipes_accept_real_outputs() {
    let fig4 = recipe(FigureId::Fig4);
    let csv = ok(&["info-qber", "--resolution", "2", "--gate", "identity"]).stdout;
    fig4.validate_csv(&csv).unwrap();
    assert!(recipe(FigureId::Fig3).validate_csv(&csv).is_err());
    assert!(fig4.validate_csv("gate,q,I\n").is_err());
    let fig7 = recipe(FigureId::Fig7);
    fig7.validate_csv(&ok(&["loss-qber", "--resolution", "2"]).stdout)
        .unwrap();
    assert_eq!(recipe(FigureId::Fig9).flags, &["--loss", "0.5", "--corr"]);
    assert_eq!("FIG5".parse::<FigureId>().unwrap(), FigureId::Fig5);
}

#[test]
fn numbers_use_ten_significant_digits() {
    assert_eq!(format_number(1.0 / 3.0), "0.3333333333");
    assert_eq!(format_number(-2.5e-9), "-2.5e-09");
    assert_eq!(format_number(100.0), "100");
}
