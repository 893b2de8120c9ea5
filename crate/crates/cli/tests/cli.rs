use std::process::{Command, Output};

use serde_json::{Map, Value};

fn agenda(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_agenda"));
    cmd.args(args).env_remove("AGENDA_WORKERS");
    if let Some(w) = workers {
        cmd.env("AGENDA_WORKERS", w);
    }
    cmd.output().expect("binary runs")
}

fn json_records(args: &[&str], workers: Option<&str>) -> Vec<Map<String, Value>> {
    let out = agenda(args, workers);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|line| serde_json::from_str(line).unwrap())
        .collect()
}

fn without_timing(mut r: Map<String, Value>) -> Map<String, Value> {
    r.remove("elapsed_ms");
    r
}

fn code(args: &[&str]) -> i32 {
    agenda(args, None).status.code().unwrap()
}

#[test]
fn invalid_input_exits_with_two() {
    assert_eq!(code(&["discrete-sim", "--n", "14", "--m", "21", "--l", "1"]), 2);
    assert_eq!(code(&["discrete-sim", "--n", "13", "--m", "21", "--l", "3"]), 2);
    assert_eq!(code(&["continuous-eval", "--m", "11", "--eta", "0.5"]), 2);
    assert_eq!(code(&["continuous-optimize", "--m", "4"]), 2);
    assert_eq!(
        code(&["continuous-eval", "--m", "11", "--eta", "0.3", "--precision", "30"]),
        2
    );
    assert_eq!(code(&["bounds", "--n", "14", "--m", "21"]), 2);
    assert_eq!(code(&["no-such-command"]), 2);
    let out = agenda(&["bounds", "--n", "14", "--m", "3", "--l", "4"], Some("many"));
    assert_eq!(out.status.code(), Some(2));
    let out = agenda(&["discrete-sim", "--n", "14", "--m", "21", "--l", "1"], None);
    assert!(String::from_utf8_lossy(&out.stderr).contains("2..6"));
}

#[test]
fn io_failure_exits_with_one() {
    let args = [
        "bounds",
        "--n",
        "14",
        "--m",
        "3",
        "--l",
        "4",
        "--out",
        "/nonexistent-dir/out.json",
    ];
    assert_eq!(code(&args), 1);
    assert_eq!(code(&["replay", "/nonexistent-dir/record.json"]), 1);
}

#[test]
fn known_values() {
    let r = &json_records(
        &["discrete-sim", "--n", "14", "--m", "21", "--l", "5", "--seed", "7"],
        None,
    )[0];
    assert!((r["p_hat"].as_f64().unwrap() - 0.785).abs() < 0.01);
    assert_eq!(r["seed"], 7);
    let r = &json_records(&["continuous-eval", "--m", "11", "--eta", "0.3458"], None)[0];
    assert!((r["p"].as_f64().unwrap() - 0.7606).abs() < 5e-4);
    let r = &json_records(&["bounds", "--n", "100", "--m", "101", "--l", "20"], None)[0];
    assert!((r["two_term_bound"].as_f64().unwrap() - 2.25e-3).abs() < 2e-5);
    let r = &json_records(&["bounds", "--n", "14", "--m", "21", "--l", "4"], None)[0];
    assert_eq!(r["two_term_bound"].as_f64(), Some(1.0));
    let r = &json_records(
        &["continuous-universal", "--m", "5", "--eta", "0.3", "--trials", "1000"],
        None,
    )[0];
    assert_eq!(r["successes"], 0);
    let args = [
        "discrete-optimize",
        "--n",
        "16",
        "--m",
        "41",
        "--universal",
        "--seed",
        "2",
    ];
    let r = &json_records(&args, None)[0];
    assert_eq!(r["l_opt"], 5);
    assert!((r["p_hat"].as_f64().unwrap() - 0.6995).abs() < 0.012);
}

#[test]
fn reruns_and_worker_counts_give_identical_values() {
    let runs: [&[&str]; 4] = [
        &[
            "discrete-sim",
            "--n",
            "30",
            "--m",
            "51",
            "--l",
            "9",
            "--trials",
            "20000",
            "--universal",
            "--seed",
            "5",
        ],
        &[
            "discrete-optimize",
            "--n",
            "40",
            "--m",
            "21",
            "--scan-trials",
            "2000",
            "--validation-trials",
            "5000",
            "--seed",
            "5",
            "--scan",
        ],
        &[
            "continuous-universal",
            "--m",
            "21",
            "--trials",
            "2000",
            "--validation-trials",
            "5000",
            "--seed",
            "5",
        ],
        &["continuous-optimize", "--m", "41"],
    ];
    for args in runs {
        let base = without_timing(json_records(args, Some("1")).remove(0));
        assert_eq!(
            base,
            without_timing(json_records(args, Some("1")).remove(0)),
            "{args:?}"
        );
        assert_eq!(
            base,
            without_timing(json_records(args, Some("4")).remove(0)),
            "{args:?}"
        );
    }
}

fn csv_rows(args: &[&str]) -> Vec<Map<String, Value>> {
    let mut full = args.to_vec();
    full.extend(["--format", "csv"]);
    let out = agenda(&full, None);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header = reader.headers().unwrap().clone();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            header
                .iter()
                .zip(r.iter())
                .map(|(h, v)| (h.to_string(), Value::String(v.to_string())))
                .collect()
        })
        .collect()
}

fn same_value(json: &Value, text: &str) -> bool {
    match json {
        Value::Number(n) => n.as_f64() == text.parse::<f64>().ok(),
        Value::String(s) => s == text,
        Value::Bool(b) => b.to_string() == text,
        Value::Null => text.is_empty(),
        Value::Array(items) => {
            let parts: Vec<&str> = text.split(';').collect();
            parts.len() == items.len() && items.iter().zip(parts).all(|(i, p)| same_value(i, p))
        }
        Value::Object(_) => false,
    }
}

#[test]
fn csv_and_json_carry_the_same_numbers() {
    let runs: [&[&str]; 4] = [
        &[
            "discrete-sim",
            "--n",
            "14",
            "--m",
            "21",
            "--l",
            "5",
            "--trials",
            "5000",
            "--seed",
            "9",
        ],
        &["decay-table", "--m", "31,41,51"],
        &["continuous-optimize", "--m", "251", "--precision", "80"],
        &[
            "discrete-optimize",
            "--n",
            "20",
            "--m",
            "21",
            "--scan-trials",
            "1000",
            "--validation-trials",
            "2000",
            "--seed",
            "3",
            "--scan",
        ],
    ];
    for args in runs {
        let json = json_records(args, None).remove(0);
        let rows = csv_rows(args);
        let table = json
            .values()
            .find_map(|v| v.as_array().filter(|a| a.iter().all(Value::is_object) && !a.is_empty()));
        assert_eq!(rows.len(), table.map_or(1, Vec::len), "{args:?}");
        for (i, row) in rows.iter().enumerate() {
            for (k, v) in row {
                if k == "elapsed_ms" {
                    continue;
                }
                let text = v.as_str().unwrap();
                let expected = json.get(k).or_else(|| table.and_then(|t| t[i].get(k))).unwrap();
                assert!(same_value(expected, text), "{args:?} {k}: {expected} vs {text}");
            }
        }
    }
    let rows = csv_rows(&["continuous-eval", "--m", "51", "--eta", "0.24"]);
    assert!(rows[0]["q"].as_str().unwrap().contains('e'));
}

#[test]
fn records_replay_to_the_same_result() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 4] = [
        &["discrete-sim", "--n", "14", "--m", "21", "--l", "5", "--trials", "5000"],
        &["decay-table", "--m", "21,31,41", "--precision", "60"],
        &[
            "continuous-universal",
            "--m",
            "31",
            "--eta",
            "0.2518",
            "--trials",
            "3000",
        ],
        &["bounds", "--n", "30", "--m", "51", "--l", "9"],
    ];
    for (i, args) in runs.into_iter().enumerate() {
        let path = dir.path().join(format!("run{i}.json"));
        let mut full = args.to_vec();
        full.extend(["--out", path.to_str().unwrap()]);
        assert!(agenda(&full, None).status.success());
        let saved: Map<String, Value> = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let replayed = json_records(&["replay", path.to_str().unwrap()], None).remove(0);
        assert_eq!(without_timing(saved), without_timing(replayed), "{args:?}");
    }
}
