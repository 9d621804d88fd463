use std::fs;
use std::process::{Command, Output};

fn occam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_occam"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn every_output_starts_with_the_config_echo() {
    for args in [
        vec!["encode", "--term", r"\x. x"],
        vec!["decode", "0010"],
        vec!["run", "0000110"],
        vec!["enumerate", "--max-len", "6"],
        vec!["census", "--n", "8"],
        vec!["mc", "--samples", "50"],
        vec!["stoch", "0000110", "--samples", "10"],
    ] {
        let o = occam(&args);
        assert!(o.status.success(), "{args:?}");
        let first = stdout(&o).lines().next().unwrap().to_string();
        assert!(first.starts_with(&format!("# occam {} gas=", args[0])), "{first}");
    }
}

#[test]
fn encode_identity() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("id.lam");
    fs::write(&f, "\\x. x\n").unwrap();
    let o = occam(&["encode", f.to_str().unwrap()]);
    assert_eq!(stdout(&o).lines().nth(1), Some("0010"));
}

#[test]
fn odds_of_thirty_bits() {
    let o = occam(&[
        "odds",
        "--a",
        "00000000000000000000",
        "--b",
        "0000000000000000000000000",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    let row = out.lines().nth(2).unwrap();
    assert!(row.contains(",30,2^30,1073741824,"), "{row}");
}

#[test]
fn verify_kraft_passes() {
    let o = occam(&["verify", "kraft", "--max-len", "16"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("criterion 1 kraft: PASS"));
}

#[test]
fn exit_codes() {
    assert_eq!(occam(&["nonsense"]).status.code(), Some(2));
    assert_eq!(occam(&["decode", "01x"]).status.code(), Some(2));
    assert_eq!(
        occam(&["ksearch", "1", "--exhaustive", "--max-len", "12"]).status.code(),
        Some(3)
    );
    assert_eq!(
        occam(&["census-odds", "--a", "1", "--b", "", "--n", "13"]).status.code(),
        Some(4)
    );
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w");
    fs::write(&w, "0000110").unwrap();
    assert_eq!(
        occam(&["odds", "--a", "1", "--b", "0", "--witness-a", w.to_str().unwrap()])
            .status
            .code(),
        Some(5)
    );
    assert_eq!(
        occam(&["census", "--n", "14", "--node-cap", "100"]).status.code(),
        Some(6)
    );
}

#[test]
fn output_is_independent_of_workers() {
    let run = |w: &str| stdout(&occam(&["mc", "--samples", "5000", "--workers", w]));
    assert_eq!(run("1"), run("3"));
    let census = |w: &str| stdout(&occam(&["census", "--n", "14", "--workers", w]));
    assert_eq!(census("1"), census("4"));
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("c.csv");
    let o = occam(&["census", "--n", "10", "--out", f.to_str().unwrap()]);
    assert!(o.status.success() && o.stdout.is_empty());
    assert_eq!(fs::read_to_string(&f).unwrap(), stdout(&occam(&["census", "--n", "10"])));
}

#[test]
fn ledger_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let reg = dir.path().join("reg.json");
    let ledger = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_occam"))
            .env("OCCAM_REGISTRY", &reg)
            .arg("ledger")
            .args(args)
            .output()
            .unwrap()
    };
    assert!(ledger(&["add", "lim", "--cost", "1200", "--note", "audited"]).status.success());
    assert!(ledger(&["add", "integral", "--deps", "lim", "--cost", "800", "--note", "a"])
        .status
        .success());
    assert!(ledger(&["add", "derivative", "--deps", "lim", "--cost", "500", "--note", "a"])
        .status
        .success());
    assert!(ledger(&["add", "k", "--term", r"\x y. x"]).status.success());
    assert_eq!(ledger(&["add", "lim", "--cost", "1", "--note", "x"]).status.code(), Some(2));

    let m = dir.path().join("calc.json");
    fs::write(
        &m,
        r#"{"name":"calc","problem_id":"ftc","references":{"integral":1,"derivative":1},"glue_bits":40}"#,
    )
    .unwrap();
    let o = ledger(&["cost", m.to_str().unwrap()]);
    let out = stdout(&o);
    assert_eq!(out.matches("def:lim").count(), 1);
    // Four entries: references cost ceil(log2 5) = 3 bits each.
    assert!(out.contains("total,2546\n"), "{out}");

    let m2 = dir.path().join("small.json");
    fs::write(&m2, r#"{"name":"small","problem_id":"ftc","references":{"lim":1},"glue_bits":0}"#).unwrap();
    let o = ledger(&[
        "rank",
        "--problem",
        "ftc",
        &format!("{}=0", m.display()),
        &format!("{}=0", m2.display()),
    ]);
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(2).collect();
    assert!(rows[0].contains(",1,small,"), "{out}");
    assert!(rows[1].contains(",2,calc,"), "{out}");
}
