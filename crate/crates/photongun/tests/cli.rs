use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use photongun::format::{read_binary, read_csv};
use photongun::kv;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_photongun"));
    c.env_remove("PHOTONGUN_SEED");
    c
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn example(name: &str) -> PathBuf {
    manifest_dir().join("examples").join(name)
}

fn fixture(name: &str) -> PathBuf {
    manifest_dir().join("tests/fixtures").join(name)
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_kv(path: &Path) -> BTreeMap<String, String> {
    let text = fs::read_to_string(path).unwrap();
    kv::parse(&text).unwrap().into_iter().map(|(k, e)| (k, e.value)).collect()
}

fn num(map: &BTreeMap<String, String>, key: &str) -> f64 {
    map.get(key).unwrap_or_else(|| panic!("missing {key}")).parse().unwrap()
}

fn scenario_text(duration: &str, extra: &str) -> String {
    format!(
        "scenario.name = t\nexcitation.pulse_energy_pJ = 200\nexcitation.saturation_energy_pJ = 0.05\n\
         excitation.pulse_width_s = 13e-12\nexcitation.rep_rate_Hz = 15000\nexcitation.duration_s = {duration}\n{extra}"
    )
}

fn simulate(scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    run(bin().arg("simulate").arg(scenario).arg("--out").arg(out).args(extra))
}

#[test]
fn operating_point_scenario_reports_the_published_regime() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(&example("paper_fig3.scenario"), dir.path(), &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = read_kv(&dir.path().join("run_report.kv"));
    let rate = num(&r, "noise.mean_rate_cps");
    assert!((rate - 11_250.0).abs() < 250.0, "mean rate {rate}");
    let ratio = num(&r, "noise.ratio");
    let model = num(&r, "model.ratio");
    // one 10 s run has SE about ratio / sqrt(2 * bins) = 0.0044
    assert!((ratio - model).abs() < 3.0 * 0.0045, "ratio {ratio} model {model}");
    assert!((0.59..=0.65).contains(&ratio));
    for key in [
        "run.seed",
        "run.config_sha256",
        "run.tool_version",
        "noise.squeezing_db_sigma",
        "noise.squeezing_db_variance",
        "g2.zero",
        "file.0.sha256",
    ] {
        assert!(r.contains_key(key), "{key}");
    }
    assert!(dir.path().join("run_report.txt").exists());
}

#[test]
fn report_is_recomputable_from_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&simulate(&example("paper_fig3.scenario"), dir.path(), &[])), 0);
    let r = read_kv(&dir.path().join("run_report.kv"));
    let resolved = fs::read(dir.path().join("scenario.resolved")).unwrap();
    assert_eq!(r["run.config_sha256"], photongun::report::sha256_hex(&resolved));
    assert_eq!(r["file.0.path"], "photons.pgun");
    let bytes = fs::read(dir.path().join("photons.pgun")).unwrap();
    assert_eq!(r["file.0.sha256"], photongun::report::sha256_hex(&bytes));

    // rerunning the resolved scenario at the recorded seed reproduces it
    let again = tempfile::tempdir().unwrap();
    let seed = r["run.seed"].clone();
    let out = simulate(&dir.path().join("scenario.resolved"), again.path(), &["--seed", &seed]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(fs::read(again.path().join("photons.pgun")).unwrap(), bytes);
    assert_eq!(read_kv(&again.path().join("run_report.kv"))["noise.ratio"], r["noise.ratio"]);
}

#[test]
fn zero_duration_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("zero.scenario");
    fs::write(&sc, scenario_text("0", "")).unwrap();
    let out = simulate(&sc, &dir.path().join("out"), &[]);
    assert_eq!(code(&out), 2);
    let msg = stderr(&out);
    assert!(msg.contains("line 6") && msg.contains("excitation.duration_s"), "{msg}");
}

#[test]
fn unknown_key_and_missing_key_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("bad.scenario");
    fs::write(&sc, scenario_text("1", "chain.objectve_T = 0.9\n")).unwrap();
    let out = simulate(&sc, &dir.path().join("out"), &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("chain.objectve_T"), "{}", stderr(&out));

    fs::write(&sc, "scenario.name = t\n").unwrap();
    let out = simulate(&sc, &dir.path().join("out"), &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("excitation."), "{}", stderr(&out));
}

#[test]
fn io_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(&dir.path().join("absent.scenario"), dir.path(), &[]);
    assert_eq!(code(&out), 3);

    let sc = dir.path().join("ok.scenario");
    fs::write(&sc, scenario_text("0.01", "")).unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = simulate(&sc, &blocker.join("sub"), &[]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));

    let out = run(bin().arg("analyze").arg(dir.path().join("absent.pgun")).arg("--out").arg(dir.path()));
    assert_eq!(code(&out), 3);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("s.scenario");
    fs::write(&sc, scenario_text("2", "background.mode = fixed\nbackground.rate_cps = 1100\n")).unwrap();
    let files = |d: &Path| {
        ["photons.pgun", "photons.csv", "run_report.kv", "run_report.txt"].map(|f| fs::read(d.join(f)).unwrap())
    };
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert_eq!(code(&simulate(&sc, &a, &["--seed", "42", "--csv"])), 0);
    assert_eq!(code(&simulate(&sc, &b, &["--seed", "42", "--csv"])), 0);
    assert_eq!(code(&simulate(&sc, &c, &["--seed", "43", "--csv"])), 0);
    assert_eq!(files(&a), files(&b));
    assert_ne!(files(&a)[0], files(&c)[0]);
}

#[test]
fn seed_precedence_flag_then_env_then_file() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("s.scenario");
    fs::write(&sc, scenario_text("0.5", "sim.seed = 1\n")).unwrap();
    let seed_of = |d: &Path| read_kv(&d.join("run_report.kv"))["run.seed"].clone();

    let file_only = dir.path().join("f");
    assert_eq!(code(&simulate(&sc, &file_only, &[])), 0);
    assert_eq!(seed_of(&file_only), "1");

    let env = dir.path().join("e");
    let out = run(bin().env("PHOTONGUN_SEED", "77").arg("simulate").arg(&sc).arg("--out").arg(&env));
    assert_eq!(code(&out), 0);
    assert_eq!(seed_of(&env), "77");

    let flag = dir.path().join("g");
    let out = run(bin().env("PHOTONGUN_SEED", "77").arg("simulate").arg(&sc).args(["--seed", "5", "--out"]).arg(&flag));
    assert_eq!(code(&out), 0);
    assert_eq!(seed_of(&flag), "5");

    let out = run(bin().env("PHOTONGUN_SEED", "x").arg("simulate").arg(&sc).arg("--out").arg(dir.path().join("h")));
    assert_eq!(code(&out), 2);
}

#[test]
fn csv_mirror_matches_binary() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("s.scenario");
    fs::write(&sc, scenario_text("1", "background.mode = fixed\nbackground.rate_cps = 5000\n")).unwrap();
    assert_eq!(code(&simulate(&sc, dir.path(), &["--csv"])), 0);
    let binary = read_binary(&dir.path().join("photons.pgun")).unwrap();
    let text = read_csv(&dir.path().join("photons.csv")).unwrap();
    assert!(binary.records.len() > 10_000);
    assert_eq!(binary.records, text.records);
    assert!(binary.records.iter().any(|r| r.channel == 1));

    // analyzing either form gives the same numbers
    let args = ["--duration-s", "1", "--rep-rate-hz", "15000", "--g2", "pulsed"];
    let a = run(bin()
        .arg("analyze")
        .arg(dir.path().join("photons.pgun"))
        .args(args)
        .arg("--out")
        .arg(dir.path().join("ab")));
    let b = run(bin()
        .arg("analyze")
        .arg(dir.path().join("photons.csv"))
        .args(args)
        .arg("--out")
        .arg(dir.path().join("ac")));
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(code(&b), 0, "{}", stderr(&b));
    let ka = read_kv(&dir.path().join("ab/analysis_report.kv"));
    let kb = read_kv(&dir.path().join("ac/analysis_report.kv"));
    for key in ["noise.ratio", "noise.mean_rate_cps", "g2.zero"] {
        assert_eq!(ka[key], kb[key], "{key}");
    }
    assert_eq!(fs::read(dir.path().join("ab/g2.csv")).unwrap(), fs::read(dir.path().join("ac/g2.csv")).unwrap());
}

#[test]
fn analyze_reproduces_the_inline_report() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&simulate(&example("paper_fig3.scenario"), dir.path(), &[])), 0);
    let out = run(bin()
        .arg("analyze")
        .arg(dir.path().join("photons.pgun"))
        .args(["--duration-s", "10", "--rep-rate-hz", "15000", "--g2", "pulsed", "--out"])
        .arg(dir.path().join("an")));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let sim = read_kv(&dir.path().join("run_report.kv"));
    let an = read_kv(&dir.path().join("an/analysis_report.kv"));
    for key in [
        "noise.bins",
        "noise.mean_rate_cps",
        "noise.sigma_sps",
        "noise.sigma_sn",
        "noise.ratio",
        "noise.squeezing_db_sigma",
        "noise.squeezing_db_variance",
        "noise.mandel_q",
        "noise.photons_per_pulse",
        "g2.zero",
    ] {
        assert_eq!(sim[key], an[key], "{key}");
    }
    let trace = fs::read_to_string(dir.path().join("an/trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("bin_start_s,counts"));
    assert_eq!(trace.lines().count(), 10_001);
    let g2 = fs::read_to_string(dir.path().join("an/g2.csv")).unwrap();
    assert_eq!(g2.lines().next(), Some("tau_start_s,tau_center_s,coincidences,g2"));
    assert_eq!(g2.lines().count(), 2101);
}

#[test]
fn poisson_fixture_has_unit_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .arg("analyze")
        .arg(fixture("poisson_10khz.pgun"))
        .args(["--duration-s", "10", "--out"])
        .arg(dir.path()));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = read_kv(&dir.path().join("analysis_report.kv"));
    let ratio = num(&r, "noise.ratio");
    assert!((ratio - 1.0).abs() <= 0.02, "ratio {ratio}");
    assert!((num(&r, "noise.mean_rate_cps") - 10_000.0).abs() < 300.0);
    assert_eq!(r["noise.squeezing_db_sigma"], "none");
}

#[test]
fn continuous_g2_of_poisson_fixture_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .arg("analyze")
        .arg(fixture("poisson_10khz.pgun"))
        .args(["--g2", "continuous", "--tau-max-us", "1000", "--g2-bins", "21", "--split-seed", "3", "--out"])
        .arg(dir.path()));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let g0 = num(&read_kv(&dir.path().join("analysis_report.kv")), "g2.zero");
    // about 50000 x 50000 / 1e13 ps x 95 us = 24 coincidences per bin
    assert!((g0 - 1.0).abs() < 0.7, "g2(0) {g0}");
}

#[test]
fn malformed_timestamp_files_exit_4_with_offsets() {
    let dir = tempfile::tempdir().unwrap();
    let good = fs::read(fixture("poisson_10khz.pgun")).unwrap();
    let analyze = |path: &Path| run(bin().arg("analyze").arg(path).arg("--out").arg(dir.path().join("o")));

    let truncated = dir.path().join("truncated.pgun");
    fs::write(&truncated, &good[..16 + 16 * 100 + 7]).unwrap();
    let out = analyze(&truncated);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("byte offset 1616"), "{}", stderr(&out));

    let mut magic = good[..16 + 160].to_vec();
    magic[0] = b'X';
    let bad_magic = dir.path().join("magic.pgun");
    fs::write(&bad_magic, &magic).unwrap();
    let out = analyze(&bad_magic);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("magic"), "{}", stderr(&out));

    let mut version = good[..16 + 160].to_vec();
    version[4] = 9;
    let bad_version = dir.path().join("version.pgun");
    fs::write(&bad_version, &version).unwrap();
    let out = analyze(&bad_version);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("version 9"), "{}", stderr(&out));

    let csv = dir.path().join("bad.csv");
    fs::write(&csv, "t_ps,origin,channel\n10,0,0\n5,0,0\n").unwrap();
    let out = analyze(&csv);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

fn sweep_rows(path: &Path) -> Vec<BTreeMap<String, f64>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    rdr.records()
        .map(|r| headers.iter().zip(r.unwrap().iter()).map(|(h, v)| (h.to_string(), v.parse().unwrap())).collect())
        .collect()
}

#[test]
fn single_point_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .arg("sweep")
        .arg(example("rho_sweep.scenario"))
        .args(["--grid", "0.5", "--seeds", "3", "--out"])
        .arg(dir.path()));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = sweep_rows(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["seeds"], 3.0);
    let svg = fs::read_to_string(dir.path().join("sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(!svg.contains("NaN") && !svg.contains("inf"));
}

#[test]
fn rho_sweep_follows_the_binomial_law() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin().arg("sweep").arg(example("rho_sweep.scenario")).args(["--jobs", "2", "--out"]).arg(dir.path()));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = sweep_rows(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 10);
    for r in &rows {
        let oracle = (1.0 - 0.684 * r["rho"]).sqrt();
        assert!((r["ratio_model"] - oracle).abs() < 1e-12);
        assert!(
            (r["ratio_mean"] - oracle).abs() <= 3.0 * r["ratio_se"],
            "rho {}: {} +- {} vs {oracle}",
            r["rho"],
            r["ratio_mean"],
            r["ratio_se"]
        );
    }
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let go = |jobs: &str, sub: &str| {
        run(bin()
            .arg("sweep")
            .arg(example("rho_sweep.scenario"))
            .args(["--grid", "0.2,0.9", "--seeds", "4", "--jobs", jobs, "--out"])
            .arg(dir.path().join(sub)))
    };
    assert_eq!(code(&go("1", "a")), 0);
    assert_eq!(code(&go("3", "b")), 0);
    assert_eq!(fs::read(dir.path().join("a/sweep.csv")).unwrap(), fs::read(dir.path().join("b/sweep.csv")).unwrap());
    assert_eq!(code(&go("0", "c")), 2);
}

#[test]
fn energy_sweep_with_background_has_a_minimum() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        run(bin().arg("sweep").arg(example("energy_sweep.scenario")).args(["--seeds", "1", "--out"]).arg(dir.path()));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let model: Vec<f64> = sweep_rows(&dir.path().join("sweep.csv")).iter().map(|r| r["ratio_model"]).collect();
    let (imin, min) =
        model.iter().copied().enumerate().fold((0, f64::INFINITY), |b, (i, v)| if v < b.1 { (i, v) } else { b });
    assert!(imin > 0 && imin < model.len() - 1, "minimum at the edge: {model:?}");
    assert!(min < 0.65);
    assert!(model[imin..].windows(2).all(|w| w[1] > w[0]), "tail not rising: {model:?}");
    assert!(model[..=imin].windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn bad_sweep_requests_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let go = |args: &[&str]| {
        run(bin().arg("sweep").arg(example("rho_sweep.scenario")).args(args).arg("--out").arg(dir.path()))
    };
    assert_eq!(code(&go(&["--grid", "0.5,1.5"])), 2);
    assert_eq!(code(&go(&["--axis", "E_p"])), 2);
    assert_eq!(code(&go(&["--grid", ""])), 2);
    assert_eq!(code(&go(&["--axis", "temperature"])), 2);
    let out = run(bin().arg("sweep").arg(example("paper_fig3.scenario")).arg("--out").arg(dir.path()));
    assert_eq!(code(&out), 2);
}

fn fit(data: &Path, out: &Path, extra: &[&str]) -> Output {
    run(bin().arg("fit").arg(data).args(["--fix", "tau_p=13e-12,tau_r=1e-8"]).args(extra).arg("--out").arg(out))
}

#[test]
fn shipped_saturation_data_fits() {
    let dir = tempfile::tempdir().unwrap();
    let out = fit(&fixture("saturation_terrylene.csv"), dir.path(), &["--integration-time-s", "1"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = read_kv(&dir.path().join("fit_report.kv"));
    assert_eq!(r["fit.converged"], "true");
    let params = photongun_core::emitter::SaturationParams {
        max_rate: num(&r, "fit.R0_cps"),
        saturation_energy: num(&r, "fit.E_s_pJ"),
        pulse_width: 13e-12,
        lifetime: 1e-8,
        background_slope: num(&r, "fit.alpha_cps_per_pJ"),
    };
    let rho200 = params.excited_population(200.0).unwrap();
    assert!(rho200 >= 0.985, "rho(200 pJ) = {rho200}");
    // generated with R0 10200, E_s 0.05 pJ, alpha 5.5
    assert!((params.max_rate - 10_200.0).abs() < 3.0 * num(&r, "fit.R0_se_cps"));
    assert!((params.saturation_energy - 0.05).abs() < 3.0 * num(&r, "fit.E_s_se_pJ"));
    assert!((params.background_slope - 5.5).abs() < 3.0 * num(&r, "fit.alpha_se_cps_per_pJ"));

    let curve = fs::read_to_string(dir.path().join("rho_curve.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("E_p_pJ,rho,rate_model_cps"));
    let svg = fs::read_to_string(dir.path().join("fit_overlay.svg")).unwrap();
    assert!(svg.contains("<path") && !svg.contains("NaN"));
}

#[test]
fn refit_of_the_predicted_curve_is_a_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&fit(&fixture("saturation_terrylene.csv"), &dir.path().join("a"), &[])), 0);
    let first = read_kv(&dir.path().join("a/fit_report.kv"));
    let params = photongun_core::emitter::SaturationParams {
        max_rate: num(&first, "fit.R0_cps"),
        saturation_energy: num(&first, "fit.E_s_pJ"),
        pulse_width: 13e-12,
        lifetime: 1e-8,
        background_slope: num(&first, "fit.alpha_cps_per_pJ"),
    };
    let mut text = String::from("E_p_pJ,rate_cps\n");
    for line in fs::read_to_string(fixture("saturation_terrylene.csv")).unwrap().lines().skip(1) {
        let e: f64 = line.split(',').next().unwrap().parse().unwrap();
        text += &format!("{e},{}\n", photongun_core::emitter::detected_rate(e, &params).unwrap());
    }
    let predicted = dir.path().join("predicted.csv");
    fs::write(&predicted, text).unwrap();
    assert_eq!(code(&fit(&predicted, &dir.path().join("b"), &[])), 0);
    let second = read_kv(&dir.path().join("b/fit_report.kv"));
    for key in ["fit.R0_cps", "fit.E_s_pJ", "fit.alpha_cps_per_pJ"] {
        let (a, b) = (num(&first, key), num(&second, key));
        assert!((a - b).abs() <= 1e-9 * a.abs(), "{key}: {a} vs {b}");
    }
}

#[test]
fn fit_failures() {
    let dir = tempfile::tempdir().unwrap();
    let three = dir.path().join("three.csv");
    fs::write(&three, "E_p_pJ,rate_cps\n1,4000\n10,9000\n100,10500\n").unwrap();
    let out = fit(&three, &dir.path().join("o"), &[]);
    assert_eq!(code(&out), 5);
    assert!(stderr(&out).contains("initialization"), "{}", stderr(&out));

    let linear = dir.path().join("linear.csv");
    let rows: String = (1..=8).map(|i| format!("{},{}\n", i as f64 * 1e-5, i as f64 * 0.2)).collect();
    fs::write(&linear, format!("E_p_pJ,rate_cps\n{rows}")).unwrap();
    let out = fit(&linear, &dir.path().join("o"), &[]);
    assert_eq!(code(&out), 5);
    assert!(stderr(&out).contains("singular"), "{}", stderr(&out));

    let malformed = dir.path().join("bad.csv");
    fs::write(&malformed, "E_p_pJ,rate_cps\n1,4000\n2,lots\n").unwrap();
    let out = fit(&malformed, &dir.path().join("o"), &[]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    let out = run(bin().arg("fit").arg(&three).args(["--fix", "tau_p=13e-12"]));
    assert_eq!(code(&out), 2);
    let out = run(bin().arg("fit").arg(&three).args(["--fix", "tau_p=13e-12,tau_r=1e-8,beta=2"]));
    assert_eq!(code(&out), 2);
    assert_eq!(code(&fit(&dir.path().join("absent.csv"), &dir.path().join("o"), &[])), 3);
}

#[test]
fn report_renders_kv_and_anchors() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("s.scenario");
    fs::write(&sc, scenario_text("0.5", "")).unwrap();
    assert_eq!(code(&simulate(&sc, dir.path(), &[])), 0);
    let out = run(bin().arg("report").arg(dir.path().join("run_report.kv")));
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("noise.ratio") && text.contains("run.config_sha256"));

    let out = run(bin().args(["report", "--anchors"]));
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("2.22") && text.contains("6.20") && text.contains("0.6268"));

    let bad = dir.path().join("bad.kv");
    fs::write(&bad, "no equals sign\n").unwrap();
    assert_eq!(code(&run(bin().arg("report").arg(&bad))), 4);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&run(bin().arg("frobnicate"))), 2);
    assert_eq!(code(&run(&mut bin())), 2);
    assert_eq!(code(&run(bin().args(["analyze", "x.pgun", "--g2", "pulsed"]))), 2);
    assert_eq!(code(&run(bin().arg("--help"))), 0);
}
