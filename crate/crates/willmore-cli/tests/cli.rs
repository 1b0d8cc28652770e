use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_willmore"))
}

fn tmp(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("willmore-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn profiles_dump_has_the_documented_columns() {
    let d = tmp("dump");
    let out = d.join("p.csv");
    let st = bin().args(["profiles", "dump", "--grid", "201", "--window", "10", "--out"]).arg(&out).status().unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "z,theta,theta_p,alpha,gamma1,gamma2,gamma3,eta,eta_p");
    assert_eq!(lines.count(), 201);
}

#[test]
fn expand_residual_prints_one_line() {
    let out = bin()
        .args(["expand", "residual", "--spec", "circle:1.0", "--eps", "0.08", "--grid", "256"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert_eq!(text.trim().split(',').count(), 6);
}

#[test]
fn exit_codes() {
    let d = tmp("codes");
    let good = d.join("ok.cfg");
    std::fs::write(&good, "kind = identities\n").unwrap();
    assert_eq!(bin().args(["converge", "--config"]).arg(&good).status().unwrap().code(), Some(0));

    let bad = d.join("bad.cfg");
    std::fs::write(&bad, "L = 4\nbogus = 1\n").unwrap();
    assert_eq!(bin().args(["pf", "run", "--config"]).arg(&bad).status().unwrap().code(), Some(2));
    let missing = d.join("missing.cfg");
    assert_eq!(bin().args(["converge", "--config"]).arg(&missing).status().unwrap().code(), Some(2));
}

#[test]
fn pf_run_writes_trace_and_snapshots() {
    let d = tmp("pf");
    let cfg = d.join("run.cfg");
    let prefix = d.join("stripe");
    std::fs::write(
        &cfg,
        format!("L = 4\nn = 64\neps = 0.25\nt_end = 0.001\ninit = stripe\nout_prefix = {}\n", prefix.display()),
    )
    .unwrap();
    assert_eq!(bin().args(["pf", "run", "--config"]).arg(&cfg).status().unwrap().code(), Some(0));
    let trace = std::fs::read_to_string(d.join("stripe_trace.csv")).unwrap();
    assert!(trace.starts_with("t,E,max_phi,radius\n"));
    let times: Vec<f64> = trace.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(times.windows(2).all(|w| w[1] > w[0]));
    for f in ["stripe_initial.bin", "stripe_final.bin"] {
        let bytes = std::fs::read(d.join(f)).unwrap();
        assert_eq!(bytes.len(), 64 + 8 * 64 * 64);
        assert!(bytes.starts_with(b"WPF1 "));
    }
}
