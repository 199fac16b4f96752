use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
[scene]
num_users = 150

[train]
epochs = 3
"#;

fn chartbeam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chartbeam")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = chartbeam(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn staged_workflow() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let config = root.join("tiny.toml");
    std::fs::write(&config, TINY).unwrap();
    let (data, chart, model, report) = (root.join("data"), root.join("chart"), root.join("model"), root.join("report"));

    let stdout = ok(&["generate", "--config", s(&config), "--out", s(&data)]);
    assert!(stdout.contains("150 users"), "{stdout}");

    ok(&["chart", "--dataset", s(&data), "--mode", "on_the_fly", "--dim", "3", "--config", s(&config), "--out", s(&chart)]);
    assert!(chart.join("manifest.json").is_file());

    ok(&[
        "train", "--chart", s(&chart), "--dataset", s(&data), "--target", "bs2_dl", "--name", "tiny", "--config",
        s(&config), "--out", s(&model),
    ]);
    assert!(model.join("model/manifest.json").is_file());

    let stdout = ok(&["eval", "--model", s(&model), "--dataset", s(&data), "--out", s(&report)]);
    assert!(stdout.contains("tiny"), "{stdout}");
    for file in ["cdf_tiny.csv", "spatial_tiny.csv", "chart_tiny.csv", "summary.json"] {
        assert!(report.join(file).is_file(), "{file}");
    }
    let cdf = std::fs::read_to_string(report.join("cdf_tiny.csv")).unwrap();
    assert!(cdf.starts_with("eta,cdf\n"));

    let locations = root.join("loc");
    ok(&["train", "--locations", "--dataset", s(&data), "--target", "bs1_ul", "--name", "loc", "--config", s(&config), "--out", s(&locations)]);
    let loc_report = root.join("loc_report");
    ok(&["eval", "--model", s(&locations), "--dataset", s(&data), "--out", s(&loc_report)]);

    let cmp = root.join("cmp");
    let table = ok(&["compare", "--reports", s(&report), s(&loc_report), "--out", s(&cmp)]);
    assert!(table.contains("tiny") && table.contains("loc"), "{table}");
    assert!(cmp.join("comparison.json").is_file());
}

#[test]
fn run_preset() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("tiny.toml");
    std::fs::write(&config, TINY).unwrap();
    let out = tmp.path().join("out");
    let stdout = ok(&["run", "--variant", "V4", "--config", s(&config), "--out", s(&out)]);
    assert!(stdout.contains("V4"), "{stdout}");
    assert!(out.join("V4/summary.json").is_file());
}

#[test]
fn configuration_errors_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "split_fraction = 1.5\n").unwrap();
    let out = tmp.path().join("out");

    let res = chartbeam(&["run", "--variant", "V2", "--config", s(&bad), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));

    std::fs::write(&bad, "[scene]\nno_such_key = 1\n").unwrap();
    let res = chartbeam(&["generate", "--config", s(&bad), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(2));

    let res = chartbeam(&["run", "--variant", "V9", "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn missing_artifacts_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let res = chartbeam(&["eval", "--model", s(&tmp.path().join("nope")), "--dataset", s(tmp.path()), "--out", s(tmp.path())]);
    assert!(!res.status.success());
    assert!(!res.stderr.is_empty());
}
