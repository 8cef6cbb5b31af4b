//! Command-line surface: exit codes, output formats, CSV round-trips.

use std::process::{Command, Output};

fn qfactor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfactor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn factor_small_semiprime_exits_zero() {
    let out = qfactor(&["factor", "15", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("p=3 q=5"));
}

#[test]
fn factor_json_output_parses() {
    let out = qfactor(&["factor", "21", "--seed", "3", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["p"], 3);
    assert_eq!(v["q"], 7);
    assert!(v["attempts"].as_array().is_some_and(|a| !a.is_empty()));
}

#[test]
fn invalid_moduli_are_usage_errors() {
    for (n, why) in [("16", "even"), ("17", "prime"), ("9", "too small"), ("25", "perfect power")] {
        let out = qfactor(&["factor", n]);
        assert_eq!(out.status.code(), Some(2), "N={n} ({why}) should exit 2");
        assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    }
}

#[test]
fn unknown_flag_name_is_a_usage_error() {
    let out = qfactor(&["count", "15", "7", "--opt", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shared_factor_base_is_a_usage_error_for_count() {
    let out = qfactor(&["count", "15", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

fn total_from_count(args: &[&str]) -> u64 {
    let out = qfactor(args);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let field = text
        .split_whitespace()
        .find_map(|w| w.strip_prefix("total="))
        .expect("count output carries total=");
    field.parse().unwrap()
}

#[test]
fn optimized_count_is_strictly_smaller() {
    let off = total_from_count(&["count", "15", "7", "--opt", "none"]);
    let on = total_from_count(&["count", "15", "7", "--opt", "all"]);
    assert!(on < off, "optimized {on} not below baseline {off}");
}

#[test]
fn lowered_count_has_no_three_qubit_gates_and_dominates() {
    let plain = total_from_count(&["count", "15", "7", "--opt", "none"]);
    let out = qfactor(&["count", "15", "7", "--opt", "none", "--lowered"]);
    let text = stdout(&out);
    assert!(text.contains("g3=0"));
    let lowered: u64 = text
        .split_whitespace()
        .find_map(|w| w.strip_prefix("total="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(lowered >= plain);
}

#[test]
fn zero_angle_mode_changes_the_tally() {
    let all = total_from_count(&["count", "15", "7", "--opt", "none"]);
    let skipped = total_from_count(&["count", "15", "7", "--opt", "none", "--count-zero-angle", "false"]);
    assert!(skipped < all);
}

#[test]
fn bench_compile_csv_has_constant_node_count_and_round_trips() {
    let dir = std::env::temp_dir().join(format!("qfactor-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("compile.csv");
    let out = qfactor(&["bench", "compile", "--bits", "8,16", "--reps", "3", "--csv", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    let raw = std::fs::read_to_string(&path).unwrap();
    let mut reader = csv::Reader::from_reader(raw.as_bytes());
    let headers = reader.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        vec![
            "n", "N", "a", "flags", "construction_time_s", "node_count", "g1", "g2", "g3",
            "total", "reduction_ratio"
        ]
    );
    let records: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0][5], records[1][5], "node_count differs across widths");
    for r in &records {
        assert!(r[4].parse::<f64>().unwrap() > 0.0);
    }

    // re-parsing and re-writing reconstructs the identical file
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(&headers).unwrap();
    for r in &records {
        writer.write_record(r).unwrap();
    }
    let rewritten = String::from_utf8(writer.into_inner().unwrap()).unwrap();
    assert_eq!(raw, rewritten);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bench_ratio_csv_rows_are_consistent() {
    let dir = std::env::temp_dir().join(format!("qfactor-ratio-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("ratio.csv");
    let out = qfactor(&["bench", "ratio", "--bits", "5..6", "--samples", "3", "--seed", "9", "--csv", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    let raw = std::fs::read_to_string(&path).unwrap();
    let mut reader = csv::Reader::from_reader(raw.as_bytes());
    let records: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    // per width: one baseline row + three sampled bases + the a=2 row
    assert_eq!(records.len(), 2 * 5);
    for chunk in records.chunks(5) {
        let baseline: u64 = chunk[0][9].parse().unwrap();
        assert_eq!(&chunk[0][3], "none");
        for row in &chunk[1..] {
            assert_eq!(&row[3], "all");
            let total: u64 = row[9].parse().unwrap();
            let reduction: f64 = row[10].parse().unwrap();
            assert!(total < baseline);
            assert!((reduction - (1.0 - total as f64 / baseline as f64)).abs() < 1e-6);
        }
        assert_eq!(&chunk[4][2], "2"); // fixed a = 2 series
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn dump_ir_prints_the_program_tree() {
    let out = qfactor(&["dump-ir", "--bits", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("program n=4 t=8 qubits=11"));
    assert!(text.contains("for k in 0..8:"));
    assert!(text.contains("measure"));
    // stable across invocations
    assert_eq!(text, stdout(&qfactor(&["dump-ir", "--bits", "4"])));
}

#[test]
fn capacity_limit_points_at_the_counter() {
    // 11-bit semiprime: 25 qubits exceed the simulator cap
    let out = qfactor(&["factor", "1157", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("count"), "stderr should point at `count`: {err}");
}
