use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn entsim(args: &[&str]) -> Output {
    entsim_env(args, None)
}

fn entsim_env(args: &[&str], seed: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_entsim"));
    c.args(args).env_remove("ENTSIM_SEED");
    if let Some(s) = seed {
        c.env("ENTSIM_SEED", s);
    }
    c.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stderr(o)))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rows.csv");
    let o = entsim(&[
        "simulate",
        "--protocol",
        "trit",
        "--p",
        "0.7",
        "--rounds",
        "20000",
        "--grid",
        "4",
        "--seed",
        "9",
        "--out-csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["seed"], 9);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(v["result"]["all_pass"], true);
    assert_eq!(v["result"]["settings"].as_array().unwrap().len(), 4);
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert!(rows.starts_with("p,protocol,x_xyz,y_xyz,M,tvd,chi2,bits_mean,pass\n"));
    assert_eq!(rows.lines().count(), 5);
}

#[test]
fn simulate_exit_codes() {
    let o = entsim(&[
        "simulate",
        "--protocol",
        "one-bit",
        "--p",
        "0.6",
        "--rounds",
        "10",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("[0.933"), "{}", stderr(&o));

    let o = entsim(&["simulate", "--protocol", "nonsense", "--p", "0.6"]);
    assert_eq!(code(&o), 2);

    let o = entsim(&["simulate", "--protocol", "trit", "--p", "1.5"]);
    assert_eq!(code(&o), 2);

    // a tolerance no finite sample can meet
    let o = entsim(&[
        "simulate",
        "--protocol",
        "trit",
        "--p",
        "0.7",
        "--rounds",
        "1000",
        "--grid",
        "2",
        "--tolerance",
        "1e-9",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn simulate_chsh_reports_s() {
    let o = entsim(&[
        "simulate",
        "--protocol",
        "degorre",
        "--p",
        "0.5",
        "--rounds",
        "50000",
        "--chsh",
        "--seed",
        "2",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let chsh = &json(&o)["result"]["chsh"];
    let s = chsh["s"].as_f64().unwrap();
    assert!((s - 2.0 * 2f64.sqrt()).abs() < 4.0 * chsh["stderr"].as_f64().unwrap());
}

#[test]
fn seed_comes_from_the_environment() {
    let args = [
        "simulate",
        "--protocol",
        "improved",
        "--p",
        "0.9",
        "--rounds",
        "5000",
        "--grid",
        "2",
    ];
    let a = entsim_env(&args, Some("1234"));
    let b = entsim_env(&args, Some("1234"));
    let c = entsim_env(&args, Some("1235"));
    assert_eq!(json(&a)["seed"], 1234);
    assert_eq!(json(&a)["result"], json(&b)["result"]);
    assert_ne!(json(&a)["result"], json(&c)["result"]);
    let flag = entsim_env(&[&args[..], &["--seed", "1234"]].concat(), Some("99"));
    assert_eq!(json(&flag)["result"], json(&a)["result"]);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"protocol": "local-content", "p": 0.8, "rounds": 4000, "grid": 3, "seed": 5}"#,
    )
    .unwrap();
    let o = entsim(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["result"]["protocol"], "local-content");
    assert_eq!(v["result"]["settings"][0]["rounds"], 4000);

    let o = entsim(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--rounds",
        "3000",
    ]);
    assert_eq!(json(&o)["result"]["settings"][0]["rounds"], 3000);

    std::fs::write(&cfg, r#"{"protocol": "trit", "colour": 3}"#).unwrap();
    assert_eq!(
        code(&entsim(&["simulate", "--config", cfg.to_str().unwrap()])),
        2
    );
}

#[test]
fn sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = entsim(&[
            "sweep",
            "--p-min",
            "0.8",
            "--p-max",
            "1.0",
            "--step",
            "0.05",
            "--rounds",
            "4000",
            "--grid",
            "2",
            "--seed",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p,protocol,d,mean_bits,stderr,N_of_p");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("0.8,trit,"));
    assert!(lines[2].starts_with("0.85,improved,"));
    let last: Vec<&str> = lines[5].split(',').collect();
    assert_eq!(last[0], "1");
    assert_eq!(last[3].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn props_pass_and_catch_a_corrupted_density() {
    let args = [
        "props",
        "--trials",
        "5000",
        "--area-samples",
        "4000000",
        "--lemma1-pairs",
        "4",
        "--lemma1-rounds",
        "20000",
    ];
    let o = entsim(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&o)["result"]["pass"], true);

    let o = entsim(&[&args[..], &["--corrupt-rho-tilde"]].concat());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("property (i)"), "{}", stderr(&o));
}

#[test]
fn wire_run_across_processes_then_audit() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("run.log");
    let summary = dir.path().join("summary.json");
    let o = entsim(&[
        "wire-run",
        "--protocol",
        "improved",
        "--p",
        "0.9",
        "--rounds",
        "20000",
        "--grid",
        "2",
        "--seed",
        "8",
        "--check",
        "--log",
        log.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["result"]["processes"], true);
    assert_eq!(v["result"]["matches_in_process"], true);
    assert_eq!(v["result"]["audit"]["pass"], true);
    let frac = read_json(&summary)["message_fraction"].as_f64().unwrap();
    assert!((frac - 0.694).abs() < 0.02, "{frac}");

    let o = entsim(&[
        "audit",
        "--log",
        log.to_str().unwrap(),
        "--protocol",
        "improved",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&o)["rounds"], 40000);

    let o = entsim(&[
        "audit",
        "--log",
        log.to_str().unwrap(),
        "--protocol",
        "trit",
    ]);
    assert_eq!(code(&o), 1);

    let mut bytes = std::fs::read(&log).unwrap();
    bytes.truncate(bytes.len() - 3);
    std::fs::write(&log, bytes).unwrap();
    assert_ne!(
        code(&entsim(&[
            "audit",
            "--log",
            log.to_str().unwrap(),
            "--protocol",
            "improved"
        ])),
        0
    );
}

#[test]
fn wire_run_fault_injection_aborts() {
    for threads in [false, true] {
        let mut args = vec![
            "wire-run",
            "--protocol",
            "one-bit",
            "--p",
            "0.95",
            "--rounds",
            "1000",
            "--grid",
            "1",
            "--fault-round",
            "37",
        ];
        if threads {
            args.push("--threads");
        }
        let o = entsim(&args);
        assert_eq!(code(&o), 1);
        assert!(
            stderr(&o).contains("protocol violation in round 37"),
            "{}",
            stderr(&o)
        );
    }
}
