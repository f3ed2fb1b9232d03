mod common;

use common::{json_stdout, lcqnn, stderr, stdout, synthetic_mnist, validate};
use serde_json::Value;

const SCAN_HEADER: &str = "m,n,L,k,D,observable,param_id,samples,seed,mean,variance,stderr";

fn data_lines(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

fn code(args: &[&str]) -> i32 {
    lcqnn(args).status.code().expect("exit code")
}

#[test]
fn csv_goes_to_stdout_by_default() {
    let out = lcqnn(&["variance-scan", "--k-list", "3", "--n-list", "3,4", "--samples", "20"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# lcqnn "));
    assert!(lines[1].starts_with("# command: lcqnn variance-scan "));
    assert!(lines[2].starts_with("# config: {"));
    assert_eq!(lines[3], SCAN_HEADER);
    assert_eq!(lines.len(), 6);
}

#[test]
fn out_flag_writes_file_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let out = lcqnn(&[
        "variance-layers", "--L-list", "1,2", "--samples", "10", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(data_lines(&text).len(), 3);
}

#[test]
fn recorded_command_reproduces_rows() {
    let out = lcqnn(&["global-scan", "--m-list", "1", "--n-list", "3,4", "--samples", "16", "--seed", "9"]);
    let text = stdout(&out);
    let command = text.lines().find_map(|l| l.strip_prefix("# command: lcqnn ")).unwrap();
    let args: Vec<&str> = command.split(' ').collect();
    let again = stdout(&lcqnn(&args));
    assert_eq!(data_lines(&text), data_lines(&again));
}

#[test]
fn json_outputs_match_schemas() {
    let scan = json_stdout(&lcqnn(&[
        "variance-scan", "--k-list", "3,5", "--n-list", "3,6", "--samples", "20", "--format", "json",
    ]));
    validate("scan.schema.json", &scan);
    assert_eq!(scan["records"].as_array().unwrap().len(), 4);
    assert!(scan["summary"]["flatness"].is_array());

    let layers = json_stdout(&lcqnn(&["variance-layers", "--samples", "20", "--format", "json"]));
    validate("scan.schema.json", &layers);
    assert!(layers["summary"]["slope_log2_variance_vs_log2_L"].is_number());

    let global = json_stdout(&lcqnn(&["global-scan", "--samples", "20", "--format", "json"]));
    validate("scan.schema.json", &global);
    assert_eq!(global["records"].as_array().unwrap().len(), 8);

    let group = json_stdout(&lcqnn(&[
        "group-scan", "--dims", "16:1,16:1", "--dims", "16:1,16:1,16:1,16:1", "--samples", "20", "--format", "json",
    ]));
    validate("group-scan.schema.json", &group);
    assert_eq!(group["summary"]["scaling"].as_array().unwrap().len(), 1);

    let su2 = json_stdout(&lcqnn(&[
        "group-scan", "--su2-N", "6", "--select-j", "0,1", "--mode", "exact", "--samples", "20", "--format", "json",
    ]));
    validate("group-scan.schema.json", &su2);
    assert_eq!((&su2["records"][0]["d_max"], &su2["records"][0]["L"]), (&25.into(), &2.into()));
}

#[test]
fn grad_check_report_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gc.json");
    let out = lcqnn(&["grad-check", "--probes", "12", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("12 probes passed"));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    validate("grad-check.schema.json", &doc);
    assert_eq!(doc["failures"], 0);
}

#[test]
fn architecture_document_matches_schema() {
    let arch = lcqnn_core::Architecture::new(3, 6, 8, 5, 3);
    validate("architecture.schema.json", &serde_json::to_value(&arch).unwrap());
}

#[test]
fn corrupted_shift_fails_grad_check() {
    let out = lcqnn(&["grad-check", "--probes", "20", "--corrupt-shift", "1.05"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("worst offender probe"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&["grad-check", "--probes", "0"]), 2);
    assert_eq!(code(&["variance-layers", "--L-list", "1,3"]), 2);
    assert_eq!(code(&["variance-scan", "--samples", "1"]), 2);
    assert_eq!(code(&["variance-scan", "--m", "1", "--L", "4"]), 2);
    assert_eq!(code(&["variance-scan", "--obs", "Z9", "--n-list", "3"]), 2);
    assert_eq!(code(&["variance-scan", "--param-id", "phi:1"]), 2);
    assert_eq!(code(&["group-scan", "--su2-N", "4", "--select-j", ""]), 2);
    assert_eq!(code(&["group-scan", "--su2-N", "4", "--select-j", "7"]), 2);
    assert_eq!(code(&["group-scan", "--dims", "8192:1"]), 2);
    assert_eq!(code(&["group-scan"]), 2);
    assert_eq!(code(&["--threads", "0", "grad-check"]), 2);
    assert_eq!(code(&["no-such-command"]), 2);
}

#[test]
fn missing_mnist_files_explain_fetch() {
    let dir = tempfile::tempdir().unwrap();
    let out = lcqnn(&["mnist", "--data-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("fetch_mnist.sh"));
}

#[test]
fn corrupt_idx_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_mnist(dir.path(), 40, 20);
    std::fs::write(dir.path().join(lcqnn_core::mnist::TEST_LABELS), [0, 0, 8, 2, 0, 0, 0, 1, 0]).unwrap();
    let out = lcqnn(&["mnist", "--data-dir", dir.path().to_str().unwrap(), "--runs", "1"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

fn mnist_run(dir: &std::path::Path, threads: &str) -> (String, Value) {
    let summary = dir.join(format!("summary-{threads}.json"));
    let out = lcqnn(&[
        "--threads", threads, "mnist", "--data-dir", dir.to_str().unwrap(), "--L-list", "1,2", "--D-list", "1,2",
        "--runs", "2", "--epochs", "2", "--train-limit", "160", "--test-limit", "40", "--summary",
        summary.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    (stdout(&out), doc)
}

#[test]
fn mnist_grid_on_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_mnist(dir.path(), 400, 100);
    let (csv, doc) = mnist_run(dir.path(), "1");
    let rows = data_lines(&csv);
    assert_eq!(rows[0], "L,D,run,seed,loss_epoch1,loss_epoch2,test_accuracy");
    assert_eq!(rows.len(), 1 + 4 * 2);
    validate("mnist-summary.schema.json", &doc);
    assert_eq!(doc["dataset"]["train"], serde_json::json!([40, 40, 40, 40]));
    assert_eq!(doc["cells"].as_array().unwrap().len(), 4);

    let (csv4, doc4) = mnist_run(dir.path(), "4");
    assert_eq!(data_lines(&csv), data_lines(&csv4));
    assert_eq!(doc["cells"], doc4["cells"]);
}

#[test]
fn scans_do_not_depend_on_thread_count() {
    let args = ["variance-scan", "--k-list", "3", "--n-list", "3,4", "--samples", "64", "--block", "haar"];
    let one = stdout(&lcqnn(&[&["--threads", "1"], &args[..]].concat()));
    let four = stdout(&lcqnn(&[&["--threads", "4"], &args[..]].concat()));
    assert_eq!(one, four);
    let g = ["group-scan", "--dims", "8:3,4:2", "--mode", "ansatz", "--depth", "2", "--samples", "32"];
    let one = stdout(&lcqnn(&[&["--threads", "1"], &g[..]].concat()));
    let four = stdout(&lcqnn(&[&["--threads", "3"], &g[..]].concat()));
    assert_eq!(one, four);
}
