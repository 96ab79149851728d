use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let f = Fixture { dir: tempfile::tempdir().unwrap() };
        f.write("ex.u", "alphabet 2\n0000110110\n");
        f.write("u6.u", "alphabet 2\n010001\n");
        f.write("w6.u", "alphabet 2\n010101\n");
        f.write("u4.u", "alphabet 2\n0110\n");
        f.write("u10.u", "alphabet 2\n0110100110\n");
        f.write("w10.u", "alphabet 2\n0110100100\n");
        f.write("bsc01.ch", "bsc 0.1\n");
        f.write("bsc02.ch", "channel 2 2\n0.8 0.2\n0.2 0.8\n");
        f.write("clean.ch", "identity 2\n");
        f.write(
            "rep3.enc",
            "encoder\nk 1\nm 3\nstates 1\nsource 2\nchannel 2\nrows\n0 0 -> 0 : 000=1\n0 1 -> 0 : 111=1\n",
        );
        let mut dec = String::from("decoder\nm 3\nk 1\nstates 1\nchannel 2\nsource 2\nrows\n");
        for y in 0..8u32 {
            let ones = y.count_ones();
            dec.push_str(&format!("0 {:03b} -> 0 : {}\n", y, u32::from(ones >= 2)));
        }
        f.write("maj3.dec", &dec);
        f
    }

    fn write(&self, name: &str, text: &str) {
        std::fs::write(self.path(name), text).unwrap();
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        self.run_env(args, None)
    }

    fn run_env(&self, args: &[&str], threads: Option<&str>) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_secwire"));
        cmd.current_dir(self.dir.path()).args(args);
        match threads {
            Some(t) => cmd.env("SECWIRE_THREADS", t),
            None => cmd.env_remove("SECWIRE_THREADS"),
        };
        cmd.output().unwrap()
    }

    fn json(&self, args: &[&str]) -> Value {
        let out = self.run(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let text = String::from_utf8(out.stdout).unwrap();
        serde_json::from_str(text.lines().next().unwrap()).unwrap()
    }
}

fn approx(v: &Value, expect: f64, tol: f64) {
    let x = v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"));
    assert!((x - expect).abs() <= tol, "{x} vs {expect}");
}

#[test]
fn parse_worked_example() {
    let f = Fixture::new();
    let r = f.json(&["parse", "--seq", "ex.u", "--phrases"]);
    assert_eq!(r["command"], "parse");
    assert_eq!(r["result"]["c"], 6);
    assert_eq!(r["result"]["phrases"], serde_json::json!(["0", "00", "01", "1", "011", "0"]));
    assert_eq!(r["config"]["seq"], "ex.u");
}

#[test]
fn parse_with_side_information() {
    let f = Fixture::new();
    let r = f.json(&["parse", "--seq", "u6.u", "--side", "w6.u"]);
    assert_eq!(r["result"]["c_joint"], 4);
    assert_eq!(r["result"]["c_w"], 3);
    assert_eq!(r["result"]["multiplicities"], serde_json::json!([1, 1, 2]));
    approx(&r["result"]["rho"], 1.0 / 3.0, 1e-9);
}

#[test]
fn capacity_of_symmetric_pair() {
    let f = Fixture::new();
    let r = f.json(&["capacity", "--main", "bsc01.ch", "--wiretap", "bsc01.ch"]);
    approx(&r["result"]["value"], 0.2111, 1e-4);
    let plain = f.json(&["capacity", "--main", "bsc01.ch", "--oracle-step", "0.01"]);
    approx(&plain["result"]["value"], 0.531, 1e-3);
    approx(&plain["result"]["oracle"]["value"], 0.531, 1e-3);
}

#[test]
fn gamma_curve_rows() {
    let f = Fixture::new();
    let out = f.run(&["capacity", "--main", "bsc01.ch", "--wiretap", "bsc02.ch", "--gamma-points", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    let head: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert!(head["result"]["gamma_max_increase"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn channel_emits_cascade() {
    let f = Fixture::new();
    let r = f.json(&["channel", "--main", "bsc01.ch", "--wiretap", "bsc02.ch", "--emit-cascade", "--cascade-out", "c.ch"]);
    approx(&r["result"]["cascade"]["rows"][0][1], 0.26, 1e-12);
    let written = std::fs::read_to_string(f.path("c.ch")).unwrap();
    assert!(written.starts_with("channel 2 2\n"));
}

#[test]
fn bounds() {
    let f = Fixture::new();
    let r = f.json(&["bound", "t1", "--seq", "ex.u", "--main", "clean.ch", "--wiretap", "bsc02.ch"]);
    assert_eq!(r["result"]["vacuous"], true);
    let r = f.json(&["bound", "t3", "--seq", "u6.u", "--side", "w6.u", "--main", "clean.ch", "--wiretap", "bsc02.ch"]);
    approx(&r["result"]["terms"]["rho"], 1.0 / 3.0, 1e-9);
    let r = f.json(&["bound", "t2", "--main", "clean.ch", "--wiretap", "clean.ch", "--m", "2", "--ell", "1"]);
    // noiseless wiretap: I(X*;Z*) is whatever the maximizer gives, but the bound is m I
    assert!(r["result"]["random_bits_per_step"].as_f64().unwrap() <= 2.0 + 1e-9);
}

#[test]
fn simulate_repetition_code() {
    let f = Fixture::new();
    let r = f.json(&[
        "simulate", "--enc", "rep3.enc", "--dec", "maj3.dec", "--main", "bsc01.ch", "--wiretap", "bsc02.ch", "--seq", "u4.u",
        "--trials", "4000", "--seed", "1", "--exact-leakage",
    ]);
    // majority of three over BSC(0.1): 3p^2(1-p) + p^3 = 0.028
    approx(&r["result"]["bit_error_rate"], 0.028, 0.008);
    assert!(r["result"]["leakage_bits"].as_f64().unwrap() > 0.0);
}

#[test]
fn wyner_with_audit() {
    let f = Fixture::new();
    let r = f.json(&[
        "wyner", "--N", "6", "--secret-bits", "1", "--random-bits", "3", "--main", "clean.ch", "--wiretap", "bsc02.ch",
        "--trials", "500", "--seed", "4", "--audit",
    ]);
    let audit = &r["result"]["audit"];
    approx(&audit["i_xz_star"], 1.0 - secwire::info::binary_entropy(0.2).unwrap(), 1e-6);
    assert!(r["result"]["leakage_bits"].as_f64().unwrap() <= 1.0);
}

#[test]
fn feedback_sessions_are_json_lines() {
    let f = Fixture::new();
    let out = f.run(&["feedback", "--seq", "u10.u", "--side", "w10.u", "--r", "2", "--delta", "0.2", "--sessions", "5", "--seed", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0]["result"]["stopped_after_i_star"], 0);
    for (i, row) in lines[1..].iter().enumerate() {
        assert_eq!(row["session"], i);
        assert!(row["chunks_sent"].as_u64() <= row["i_star"].as_u64());
    }
}

#[test]
fn feedback_over_coded_noiseless_link_matches_ideal() {
    let f = Fixture::new();
    let base = ["feedback", "--seq", "u10.u", "--side", "w10.u", "--r", "2", "--delta", "0.2", "--sessions", "4", "--seed", "3"];
    let ideal = f.run(&base);
    let mut coded_args = base.to_vec();
    coded_args.extend(["--coded", "--N", "4", "--main", "clean.ch", "--wiretap", "clean.ch", "--random-bits", "0"]);
    let coded = f.run(&coded_args);
    assert!(coded.status.success(), "{}", String::from_utf8_lossy(&coded.stderr));
    let rows = |o: &Output| -> Vec<Value> {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .skip(1)
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    };
    let (a, b) = (rows(&ideal), rows(&coded));
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x["chunks_sent"], y["chunks_sent"]);
        assert_eq!(x["correct"], y["correct"]);
        assert_eq!(y["chunk_errors"], 0);
    }
}

#[test]
fn separation_pipeline() {
    let f = Fixture::new();
    let r = f.json(&[
        "separate", "--seq", "ex.u", "--main", "clean.ch", "--wiretap", "bsc02.ch", "--N", "4", "--secret-bits", "3",
        "--random-bits", "1", "--seed", "2",
    ]);
    assert_eq!(r["result"]["n"], 10);
    assert!(r["result"]["blocks"].as_u64().unwrap() >= 1);
    let r = f.json(&[
        "separate", "--seq", "ex.u", "--main", "clean.ch", "--wiretap", "bsc02.ch", "--N", "4", "--secret-bits", "3",
        "--random-bits", "1", "--seed", "2", "--mode", "variable-to-fixed", "--delta", "0.1",
    ]);
    assert!(r["result"]["lambda_target"].as_f64().is_some());
}

#[test]
fn leakage_matches_grid_oracle() {
    let f = Fixture::new();
    let enc = "encoder\nk 1\nm 1\nstates 1\nsource 2\nchannel 2\nrows\n0 0 -> 0 : 0=1\n0 1 -> 0 : 1=1\n";
    f.write("id.enc", enc);
    let r = f.json(&["leakage", "--enc", "id.enc", "--main", "bsc01.ch", "--wiretap", "bsc02.ch", "--n", "2", "--oracle-step", "0.02"]);
    let exact = r["result"]["total_bits"].as_f64().unwrap();
    approx(&r["result"]["oracle"]["value"], exact, 1e-3);
    // two uses of the BSC(0.26) cascade
    approx(&r["result"]["total_bits"], 2.0 * (1.0 - secwire::info::binary_entropy(0.26).unwrap()), 1e-6);
}

#[test]
fn csv_output_to_file() {
    let f = Fixture::new();
    let out = f.run(&["parse", "--seq", "ex.u", "--format", "csv", "--output", "r.csv"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(f.path("r.csv")).unwrap();
    assert!(text.starts_with("# command=parse\n"));
    assert!(text.contains("c,last_incomplete,n,rho\n6,true,10,"));
}

#[test]
fn exit_codes() {
    let f = Fixture::new();
    let out = f.run(&["parse", "--seq", "missing.u"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.u"));

    assert_eq!(f.run(&["parse", "--seq", "ex.u", "--bogus"]).status.code(), Some(64));
    assert_eq!(f.run(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(f.run(&["--help"]).status.code(), Some(0));
    // stochastic commands need a seed
    assert_eq!(f.run(&["feedback", "--seq", "u10.u", "--side", "w10.u", "--r", "2", "--delta", "0.2"]).status.code(), Some(64));

    f.write("bad.ch", "channel 2 2\n0.5 0.6\n0 1\n");
    let out = f.run(&["capacity", "--main", "bad.ch"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.ch"));

    // 2^30 induced inputs exceed the enumeration budget
    f.write("id.enc", "encoder\nk 1\nm 1\nstates 1\nsource 2\nchannel 2\nrows\n0 0 -> 0 : 0=1\n0 1 -> 0 : 1=1\n");
    let out = f.run(&["leakage", "--enc", "id.enc", "--main", "bsc01.ch", "--wiretap", "bsc02.ch", "--n", "30"]);
    assert_eq!(out.status.code(), Some(3));

    assert_eq!(f.run_env(&["parse", "--seq", "ex.u"], Some("zero")).status.code(), Some(2));
}

#[test]
fn output_is_identical_across_thread_counts() {
    let f = Fixture::new();
    let runs: Vec<(&[&str], &str)> = vec![
        (&["feedback", "--seq", "u10.u", "--side", "w10.u", "--r", "2", "--delta", "0.1", "--sessions", "40", "--seed", "8"], ""),
        (
            &["simulate", "--enc", "rep3.enc", "--dec", "maj3.dec", "--main", "bsc01.ch", "--wiretap", "bsc02.ch", "--seq", "ex.u", "--trials", "500", "--seed", "5", "--sweep"],
            "",
        ),
        (
            &["wyner", "--N", "6", "--secret-bits", "2", "--random-bits", "2", "--main", "bsc01.ch", "--wiretap", "bsc02.ch", "--trials", "3000", "--seed", "6"],
            "",
        ),
    ];
    for (args, _) in runs {
        let one = f.run_env(args, Some("1"));
        let four = f.run_env(args, Some("4"));
        let again = f.run_env(args, Some("4"));
        assert!(one.status.success());
        assert_eq!(one.stdout, four.stdout, "{args:?}");
        assert_eq!(four.stdout, again.stdout);
    }
}

