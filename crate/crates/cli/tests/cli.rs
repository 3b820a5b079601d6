//! End-to-end CLI behavior: exit codes, error wording, format contracts and
//! default output paths.

use std::path::{Path, PathBuf};
use std::process::Command;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn belltest_in(dir: Option<&Path>, args: &[&str]) -> (String, String, i32) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_belltest"));
    if let Some(d) = dir {
        cmd.current_dir(d);
    }
    let out = cmd.args(args).output().expect("binary runs");
    (
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
        out.status.code().unwrap_or(-1),
    )
}

fn belltest(args: &[&str]) -> (String, String, i32) {
    belltest_in(None, args)
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(belltest(&["--help"]).2, 0);
    assert_eq!(belltest(&["--version"]).2, 0);
    assert_eq!(belltest(&["analyze", "--help"]).2, 0);
}

#[test]
fn bad_usage_exits_one() {
    let (_, _, code) = belltest(&["analyze"]);
    assert_eq!(code, 1);
    let (_, _, code) = belltest(&["no-such-command"]);
    assert_eq!(code, 1);
}

#[test]
fn missing_file_exits_two() {
    let (_, stderr, code) = belltest(&["analyze", "/nonexistent/counts.csv"]);
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.contains("cannot read"), "{stderr}");
}

#[test]
fn malformed_counts_exit_one_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(
        &path,
        "setting_x,setting_y,n_pp,n_pm,n_mp,n_mm\n\
         a,b,1,2,3,4\n\
         a,b_prime,1,-2,3,4\n\
         a_prime,b,1,2,3,4\n\
         a_prime,b_prime,1,2,3,4\n",
    )
    .unwrap();
    let (_, stderr, code) = belltest(&["analyze", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("line 3"), "{stderr}");
    assert!(stderr.contains("negative count"), "{stderr}");
}

#[test]
fn unknown_config_keys_exit_one_and_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    std::fs::write(&path, "shots = 10\nfrobnicate = yes\nwidgets = 3\n").unwrap();
    let (_, stderr, code) = belltest(&["simulate", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("unknown configuration key(s)"), "{stderr}");
    assert!(
        stderr.contains("frobnicate") && stderr.contains("widgets"),
        "{stderr}"
    );
}

#[test]
fn bound_requires_exactly_one_table() {
    let (_, stderr, code) = belltest(&["bound"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("exactly one of"), "{stderr}");
    let delta = fixture("delta_reference.conf");
    let eta = fixture("eta_example.conf");
    let (_, _, code) = belltest(&[
        "bound",
        "--delta",
        delta.to_str().unwrap(),
        "--eta",
        eta.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
}

#[test]
fn bound_outputs_rough_and_certified_bounds() {
    let delta = fixture("delta_reference.conf");
    let (stdout, _, code) = belltest(&[
        "bound",
        "--delta",
        delta.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!(!v["certified"].as_bool().unwrap());
    assert!((v["bound"].as_f64().unwrap() - 2.0305).abs() < 1e-12);

    let eta = fixture("eta_example.conf");
    let (stdout, _, code) =
        belltest(&["bound", "--eta", eta.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!(v["certified"].as_bool().unwrap());
    assert!((v["bound"].as_f64().unwrap() - 2.0305).abs() < 1e-12);
}

#[test]
fn reference_text_report_carries_the_headline_ratio() {
    let path = fixture("reference_counts.csv");
    let (stdout, _, code) = belltest(&["analyze", path.to_str().unwrap(), "--format", "text"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("2.40"), "{stdout}");
    assert!(stdout.contains("VIOLATION"), "{stdout}");
}

#[test]
fn null_dataset_text_report_says_no_signature() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("uniform.csv");
    std::fs::write(
        &path,
        "setting_x,setting_y,n_pp,n_pm,n_mp,n_mm\n\
         a,b,250,250,250,250\n\
         a,b_prime,250,250,250,250\n\
         a_prime,b,250,250,250,250\n\
         a_prime,b_prime,250,250,250,250\n",
    )
    .unwrap();
    let (stdout, _, code) = belltest(&["analyze", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(
        stdout.contains("no crosstalk signature detected"),
        "{stdout}"
    );
    assert!(stdout.contains("NO_VIOLATION"), "{stdout}");
}

#[test]
fn analyze_json_schema_fields_present() {
    let path = fixture("reference_counts.csv");
    let (stdout, _, code) = belltest(&["analyze", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    for key in [
        "s",
        "correlators",
        "delta",
        "asymmetry_index",
        "eta",
        "corrected_bound",
        "rough_bound",
        "sigmas_above_2",
        "sigmas_above_rough_bound",
        "violation_ratio",
        "verdict",
        "provenance",
    ] {
        assert!(v.get(key).is_some(), "missing report field {key}");
    }
    assert_eq!(v["correlators"].as_array().unwrap().len(), 4);
    assert!(v["eta"].is_null());
    assert_eq!(v["provenance"]["kind"].as_str().unwrap(), "counts_file");
}

#[test]
fn simulate_uses_default_output_names() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("tiny.conf");
    std::fs::write(
        &conf,
        "state = singlet\nmodel = none\nshots = 100\nseed = 1\n",
    )
    .unwrap();
    let (stdout, stderr, code) = belltest_in(Some(dir.path()), &["simulate", "tiny.conf"]);
    assert_eq!(code, 0, "{stderr}");
    assert!(dir.path().join("tiny.counts.csv").exists(), "{stdout}");
    assert!(dir.path().join("tiny.sidecar.json").exists(), "{stdout}");
}

#[test]
fn analyze_respects_output_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let path = fixture("reference_counts.csv");
    let (stdout, _, code) = belltest(&[
        "analyze",
        path.to_str().unwrap(),
        "--format",
        "json",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["verdict"].as_str().unwrap(), "VIOLATION");
}

#[test]
fn optimize_command_reports_best_signal() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("opt.conf");
    std::fs::write(
        &conf,
        "state = singlet\nmodel = none\nseed = 5\nrestarts = 3\nmax_evaluations = 2000\n",
    )
    .unwrap();
    let (stdout, stderr, code) =
        belltest(&["optimize", conf.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 0, "{stderr}");
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let s_best = v["s_best"].as_f64().unwrap();
    assert!(s_best > 2.828, "s_best = {s_best}");
    assert_eq!(v["provenance"]["rng"].as_str().unwrap(), "splitmix64-v1");
}

#[test]
fn readout_crosstalk_fixture_reproduces_tuned_delta_scale() {
    // The fixture's channel gives exact delta_total = p*sqrt(2) ~ 0.0305 at
    // the canonical settings; the sampled estimate must agree within
    // statistics (stderr(delta_a) ~ 1.4e-3 at 1e6 shots, so 5 sigma ~ 7e-3).
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("rc.counts.csv");
    let sidecar = dir.path().join("rc.sidecar.json");
    let config = fixture("readout_crosstalk.conf");
    let (_, stderr, code) = belltest(&[
        "simulate",
        config.to_str().unwrap(),
        "--out",
        counts.to_str().unwrap(),
        "--sidecar-out",
        sidecar.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stderr}");

    let (stdout, _, code) = belltest(&[
        "analyze",
        counts.to_str().unwrap(),
        "--sidecar",
        sidecar.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let delta_total = report["delta"]["values"]["total"].as_f64().unwrap();
    let exact = 0.0216 * std::f64::consts::SQRT_2;
    assert!(
        (delta_total - exact).abs() < 7e-3,
        "delta_total = {delta_total}, exact {exact}"
    );
    // delta_a carries essentially the whole signature.
    let delta_a = report["delta"]["values"]["delta_a"].as_f64().unwrap();
    assert!(delta_a > 0.02, "delta_a = {delta_a}");
    // Exact trace-norm errors from the sidecar dwarf the delta estimate.
    let eta_total = report["eta"]["total"].as_f64().unwrap();
    assert!(eta_total > 1.0, "eta_total = {eta_total}");
}

#[test]
fn tolerance_flag_is_accepted() {
    let path = fixture("reference_counts.csv");
    let (stdout, stderr, code) = belltest(&[
        "analyze",
        path.to_str().unwrap(),
        "--tolerance",
        "1e-3",
        "--format",
        "json",
    ]);
    assert_eq!(code, 0, "{stderr}");
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["verdict"].as_str().unwrap(), "VIOLATION");
}

#[test]
fn exact_frequency_counts_reproduce_module_quantities() {
    use bell_core::chsh::{correlators_from_setting_states, SettingPair};
    use bell_core::sampling::born_probabilities;
    use bell_core::{setting_states, DensityMatrix64, SettingsQuad64};

    // Counts proportional to the Born probabilities, built by cumulative
    // rounding: n_i = round(CDF_i N) - round(CDF_{i-1} N). Each partial sum
    // is off by at most 1/2, so the estimators recover the exact module
    // values up to small multiples of 1/N:
    //   E  = (2 c1 - 2 c3 + N)/N        -> error <= 2/N
    //   mA = (2 c2 - N)/N               -> error <= 1/N
    //   mB = (2 c1 - 2 c2 + 2 c3 - N)/N -> error <= 3/N
    // and S, a sum of four correlators, is within 8/N.
    let rho = DensityMatrix64::singlet();
    let quad = SettingsQuad64::canonical_chsh();
    let states = setting_states(&rho, &quad, None).unwrap();
    let exact = correlators_from_setting_states(&states).unwrap();

    let n: u64 = 100_000_000;
    let mut csv = String::from("setting_x,setting_y,n_pp,n_pm,n_mp,n_mm\n");
    for s in &states {
        let p = born_probabilities(&s.actual).unwrap();
        let mut cdf = 0.0f64;
        let mut cuts = [0u64; 4];
        for (k, pk) in p.iter().enumerate() {
            cdf += pk;
            cuts[k] = (cdf * n as f64).round() as u64;
        }
        let counts = [
            cuts[0],
            cuts[1] - cuts[0],
            cuts[2] - cuts[1],
            cuts[3] - cuts[2],
        ];
        let (x, y) = s.pair.labels();
        csv.push_str(&format!(
            "{x},{y},{},{},{},{}\n",
            counts[0], counts[1], counts[2], counts[3]
        ));
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exact.csv");
    std::fs::write(&path, &csv).unwrap();
    let (stdout, stderr, code) = belltest(&["analyze", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 0, "{stderr}");
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();

    let quantum = 1.0 / n as f64;
    for (i, pair) in SettingPair::ALL.iter().enumerate() {
        let want = exact.moments(*pair);
        let row = &report["correlators"][i];
        assert!((row["e"].as_f64().unwrap() - want.correlator).abs() <= 2.0 * quantum);
        assert!((row["marginal_a"].as_f64().unwrap() - want.marginal_a).abs() <= quantum);
        assert!((row["marginal_b"].as_f64().unwrap() - want.marginal_b).abs() <= 3.0 * quantum);
    }
    let s_exact = 2.0 * std::f64::consts::SQRT_2;
    assert!((report["s"]["value"].as_f64().unwrap() - s_exact).abs() <= 8.0 * quantum);

    // When every p_i N is an integer the counts are exactly proportional and
    // the quantization error collapses to roundoff, far below 1/(2N).
    let n2: u64 = 10_000_000;
    let csv = format!(
        "setting_x,setting_y,n_pp,n_pm,n_mp,n_mm\n\
         a,b,{a},{b},{c},{d}\n\
         a,b_prime,{a},{b},{c},{d}\n\
         a_prime,b,{a},{b},{c},{d}\n\
         a_prime,b_prime,{a},{b},{c},{d}\n",
        a = n2 * 4 / 10,
        b = n2 * 3 / 10,
        c = n2 * 2 / 10,
        d = n2 / 10,
    );
    let path = dir.path().join("dyadic.csv");
    std::fs::write(&path, &csv).unwrap();
    let (stdout, _, code) = belltest(&["analyze", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let half_quantum = 0.5 / n2 as f64;
    let row = &report["correlators"][0];
    // diag(0.4, 0.3, 0.2, 0.1): E = 0, mA = 0.4, mB = 0.2.
    assert!((row["e"].as_f64().unwrap() - 0.0).abs() <= half_quantum);
    assert!((row["marginal_a"].as_f64().unwrap() - 0.4).abs() <= half_quantum);
    assert!((row["marginal_b"].as_f64().unwrap() - 0.2).abs() <= half_quantum);
}

#[test]
fn explicit_state_simulation_runs() {
    // Maximally mixed state written out as 32 interleaved reals.
    let mut entries = vec!["0".to_string(); 32];
    for i in 0..4 {
        entries[2 * (i * 4 + i)] = "0.25".into();
    }
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("explicit.conf");
    std::fs::write(
        &conf,
        format!(
            "state = explicit\nstate_entries = {}\nshots = 1000\nseed = 3\n",
            entries.join(" ")
        ),
    )
    .unwrap();
    let (_, stderr, code) = belltest_in(Some(dir.path()), &["simulate", "explicit.conf"]);
    assert_eq!(code, 0, "{stderr}");
    let sidecar: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("explicit.sidecar.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(sidecar["state"].as_str().unwrap(), "explicit");
    assert!(sidecar["s_true"].as_f64().unwrap().abs() < 1e-12);
}
