use proptest::prelude::*;
use willmore::harness::*;

fn tmp(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("willmore-harness-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_recovers_power_laws(p in -1.0f64..6.0, c in -5.0f64..5.0, n in 2usize..7) {
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let e = 0.1 * 0.8f64.powi(k as i32);
                (e, (c + p * e.ln()).exp())
            })
            .collect();
        let (q, d) = fit_order(&pairs).unwrap();
        prop_assert!((q - p).abs() < 1e-9 && (d - c).abs() < 1e-8);
    }

    #[test]
    fn canonical_text_round_trips(
        eps in prop::collection::vec(0.01f64..0.1, 2..5),
        seed in any::<u64>(),
        k in 2usize..4,
        grid in 4.0f64..16.0,
    ) {
        let mut eps = eps;
        eps.sort_by(|a, b| b.partial_cmp(a).unwrap());
        eps.dedup();
        prop_assume!(eps.len() >= 2);
        let list: Vec<String> = eps.iter().map(|e| e.to_string()).collect();
        let text = format!(
            "kind = difference_decay\neps = {}\nseed = {seed}\nk_impl = {k}\ngrid_factor = {grid}\n",
            list.join(", ")
        );
        let a = ExperimentConfig::parse(&text).unwrap();
        let b = ExperimentConfig::parse(&a.canonical()).unwrap();
        prop_assert_eq!(a.canonical(), b.canonical());
        prop_assert_eq!(a.hash(), b.hash());
        prop_assert_eq!(&a.eps, &eps);
    }

    // the grid policy keeps h ≤ ε/grid_factor at every ε
    #[test]
    fn grid_policy_resolves_eps(eps in 0.03f64..0.1, cartesian in any::<bool>()) {
        let text = format!(
            "kind=residual_order\neps={eps},{}\nspace={}",
            eps / 2.0,
            if cartesian { "cartesian" } else { "radial" }
        );
        let cfg = ExperimentConfig::parse(&text).unwrap();
        for e in &cfg.eps {
            let (sp, _) = cfg.space_for(*e).unwrap();
            prop_assert!(sp.spacing() <= e / 4.0 * (1.0 + 1e-12));
        }
    }
}

#[test]
fn config_errors_are_reported() {
    for bad in [
        "eps=0.1,0.05",                               // no kind
        "kind=identities\nfoo=1",                     // unknown key
        "kind=residual_order\neps=0.05,0.1",          // not decreasing
        "kind=residual_order\neps=0.05",              // one point
        "kind=residual_order\ngrid_factor=3",         // h > ε/4
        "kind=residual_order\nk_impl=5",              // unsupported order
        "kind=levelset_convergence\ninterface=sphere:1\nspace=cartesian",
        "kind=identities\nkind=identities",           // duplicate
    ] {
        assert!(ExperimentConfig::parse(bad).is_err(), "accepted: {bad}");
    }
}

#[test]
fn identical_configs_give_identical_files() {
    let text = "kind = residual_order\neps = 0.08, 0.056\n";
    let (d1, d2) = (tmp("det1"), tmp("det2"));
    let mut c1 = ExperimentConfig::parse(text).unwrap();
    c1.out_dir = Some(d1.clone());
    let mut c2 = c1.clone();
    c2.out_dir = Some(d2.clone());
    let r1 = run_experiment(&c1).unwrap();
    let r2 = run_experiment(&c2).unwrap();
    assert_eq!(r1.to_csv(), r2.to_csv());
    for f in ["residual_order.csv", "residual_order.dat", "residual_order.gp", "residual_order.summary"] {
        assert_eq!(std::fs::read(d1.join(f)).unwrap(), std::fs::read(d2.join(f)).unwrap(), "{f}");
    }
    // every data row carries the provenance
    let csv = r1.to_csv();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert!(row.starts_with(&format!("{},{},", build_id(), c1.hash())));
    }
    assert!(csv.starts_with("# willmore-report v1 "));
}

#[test]
fn plots_show_the_fitted_slope() {
    let pairs = [(0.1, 0.02), (0.05, 0.005), (0.025, 0.00125)];
    let fit = fit_with_band(&pairs).unwrap();
    let report = ConvergenceReport {
        kind: ExperimentKind::DifferenceDecay,
        metric: "diff_l2".into(),
        rows: pairs
            .iter()
            .map(|&(eps, value)| ReportRow { eps, value, grid: "g".into(), dt: 1e-3, extra: vec![] })
            .collect(),
        fit: Some(fit),
        threshold: Some(1.5),
        checks: vec![],
        failures: vec![],
        passed: true,
        build_id: build_id(),
        config_hash: "0".into(),
        note: String::new(),
    };
    let dir = tmp("plots");
    let files = emit_plots(&report, &dir).unwrap();
    assert_eq!(files.len(), 2);
    let gp = std::fs::read_to_string(&files[1]).unwrap();
    assert!(gp.contains("slope 2.0000"), "{gp}");
    let dat = std::fs::read_to_string(&files[0]).unwrap();
    assert_eq!(dat.lines().count(), 4);

    let empty = ConvergenceReport { rows: vec![], fit: None, ..report };
    let dir = tmp("empty");
    assert!(matches!(emit_plots(&empty, &dir), Err(willmore::error::Error::Io(_))));
    assert!(!dir.exists());
}

#[test]
fn fit_needs_two_positive_points() {
    assert!(fit_order(&[(0.1, 1.0)]).is_err());
    assert!(fit_order(&[(0.1, 1.0), (0.05, -1.0)]).is_err());
    assert!(fit_order(&[(0.1, 1.0), (0.1, 2.0)]).is_err());
}

#[test]
fn identities_pass() {
    let r = run_experiment(&ExperimentConfig::parse("kind=identities").unwrap()).unwrap();
    assert!(r.passed, "{}", r.to_csv());
}
