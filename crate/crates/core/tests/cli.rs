use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn distband(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distband"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = distband(&["--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("--pvalue"));

    let o = distband(&["--data", "d.csv", "--var", "y"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = distband(
        &[
            "--data", "d.csv", "--var", "y", "--by", "g", "--alpha", "0.03",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0.01, 0.05, 0.10"));
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = distband(
        &["--data", "missing.csv", "--var", "y", "--by", "g"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.csv"));

    fs::write(dir.path().join("d.csv"), "y,g\n1,a\n2,b\n3,c\n").unwrap();
    let o = distband(
        &["--data", "d.csv", "--var", "y", "--by", "g", "--no-plot"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not binary"));

    let o = distband(
        &[
            "--data",
            "d.csv",
            "--var",
            "value",
            "--by",
            "g",
            "--no-plot",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("value"));
}

#[test]
fn regression_discontinuity_style_filters() {
    // vote share split by win/loss, restricted to a window around the cutoff
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("state,margin,win,next_share\n");
    for i in 0..200 {
        let margin = -50.0 + i as f64 * 0.5;
        let win = u8::from(margin > 0.0);
        let share = 40.0 + margin * 0.3 + if win == 1 { 8.0 } else { 0.0 } + (i % 7) as f64;
        body.push_str(&format!("s{},{margin},{win},{share}\n", i % 50));
    }
    fs::write(dir.path().join("senate.csv"), body).unwrap();
    let o = distband(
        &[
            "--data",
            "senate.csv",
            "--var",
            "next_share",
            "--by",
            "win",
            "--filter",
            "margin>=-10",
            "--filter",
            "margin<=10",
            "--reps",
            "1000",
            "--json",
            "out.json",
        ],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    assert!(text.starts_with("Comparing distribution of next_share when win=0 vs. win=1"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out.json")).unwrap()).unwrap();
    assert_eq!(json["n"][0], 41);
    assert_eq!(json["n_filtered"], 159);
    assert!(dir.path().join("next_share_cdf.svg").exists());
}

#[test]
fn simlab_subcommand_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = distband(
        &[
            "simlab",
            "--suite",
            "weak",
            "--trials",
            "500",
            "--seed",
            "7",
            "--json",
            "weak.json",
        ],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).contains("uniform null, n=25 each"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("weak.json")).unwrap()).unwrap();
    assert_eq!(json["experiments"].as_array().unwrap().len(), 1);

    let o = distband(&["simlab", "--suite", "weak", "--trials", "10"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}
