use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_newforms"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf8 output")
}

fn column(table: &str, header: &str) -> Vec<String> {
    let mut lines = table.lines();
    let headers: Vec<&str> = lines
        .next()
        .expect("header row")
        .trim_matches('|')
        .split('|')
        .map(str::trim)
        .collect();
    let idx = headers.iter().position(|h| *h == header).expect("header present");
    lines
        .skip(1)
        .map(|l| {
            l.trim_matches('|')
                .split('|')
                .map(str::trim)
                .nth(idx)
                .expect("cell present")
                .to_string()
        })
        .collect()
}

#[test]
fn documented_dimension_rows() {
    let o = run(&["dim-table", "--family", "unram-ps", "--q", "3", "--m", "0..3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(column(&stdout(&o), "formula-dim"), ["1", "2", "4", "6"]);
    assert_eq!(column(&stdout(&o), "K-dim"), ["1", "2", "4", "6"]);

    let o = run(&["dim-table", "--family", "u11-exceptional", "--q", "3", "--m", "0..2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(column(&stdout(&o), "formula-dim"), ["0", "2", "3"]);

    let o = run(&["dim-table", "--family", "sc4", "--q", "3", "--m", "1..3", "--tower", "Kp"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(column(&stdout(&o), "formula-dim"), ["0", "1", "1"]);
    assert_eq!(column(&stdout(&o), "K'-dim"), ["0", "1", "1"]);
}

#[test]
fn spherical_whittaker_value() {
    let o = run(&["whittaker", "--family", "unram-ps", "--chi", "trivial", "--q", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(column(&stdout(&o), "value"), ["2/3"]);

    let o = run(&["whittaker", "--family", "unram-ps", "--chi", "minus", "--q", "3"]);
    assert_eq!(column(&stdout(&o), "value"), ["4/3"]);
}

#[test]
fn conductor_report_lists_achieving_characters() {
    let o = run(&["conductor", "--family", "ram-ps", "--cchi", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("| conductor | 1 |"));
    assert!(text.contains("chi, chi^-1"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["dim-table", "--family", "nope"]).status.code(), Some(1));
    assert_eq!(run(&["dim-table", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(&["verify", "--suite", "nope"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["verify", "--suite", "formulas"]).status.code(), Some(0));
}

#[test]
fn output_is_deterministic() {
    let args = ["dim-table", "--family", "steinberg", "--q", "3", "--m", "0..2", "--format", "json"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let parsed: serde_json::Value = serde_json::from_slice(&a.stdout).expect("valid json");
    assert_eq!(parsed["schema"], "dim-table/1");
}

#[test]
fn config_file_defaults_lose_to_flags() {
    let dir = std::env::temp_dir().join("newforms-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("defaults.cfg");
    std::fs::write(&path, "format = json\n").unwrap();
    let from_config = run(&["conductor", "--family", "steinberg", "--config", path.to_str().unwrap()]);
    assert!(stdout(&from_config).contains("\"schema\": \"conductor/1\""));
    let overridden = run(&[
        "conductor", "--family", "steinberg", "--config", path.to_str().unwrap(), "--format", "md",
    ]);
    assert!(stdout(&overridden).starts_with("| property |"));
}
