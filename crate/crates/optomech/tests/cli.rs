use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use optomech::config::DEFAULT_CONFIG;

fn optomech(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optomech"))
        .env_remove("OPTOMECH_OUT")
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn sorted_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn same_seed_gives_byte_identical_artifacts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let runs: [&[&str]; 4] = [
        &["--seed", "7", "simulate", "--duration", "20"],
        &[
            "simulate",
            "--controller",
            "chain",
            "--duration",
            "20",
            "--dac-lsb",
            "1e-3",
        ],
        &["cool", "sweep"],
        &["cascade", "run", "--g0", "1,5"],
    ];
    for args in runs {
        assert!(optomech(a.path(), args).status.success());
        assert!(optomech(b.path(), args).status.success());
        let (fa, fb) = (sorted_files(a.path()), sorted_files(b.path()));
        assert_eq!(fa.len(), fb.len());
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{} differs", x.display());
        }
    }
}

#[test]
fn different_seed_changes_the_trace() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(optomech(a.path(), &["--seed", "1", "simulate", "--duration", "5"])
        .status
        .success());
    assert!(optomech(b.path(), &["--seed", "2", "simulate", "--duration", "5"])
        .status
        .success());
    let read = |d: &Path| fs::read_to_string(d.join("trace.csv")).unwrap();
    assert_ne!(read(a.path()), read(b.path()));
}

#[test]
fn headers_echo_config_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    assert!(optomech(dir.path(), &["--seed", "42", "cool", "optimum"])
        .status
        .success());
    let text = fs::read_to_string(dir.path().join("cool_optimum.txt")).unwrap();
    assert!(text.contains("# seed = 42"));
    for key in [
        "resonator.mass",
        "fpi.finesse",
        "hli.imprecision_asd",
        "chain.v_pi",
        "cascade.k_safe",
        "sim.preset",
    ] {
        assert!(text.contains(&format!("# {key} = ")), "{key} not echoed");
    }
    assert!(text.contains("# resonator.omega0 = 2.9656634650e1 rad/s"));
}

#[test]
fn figure_data_commands_write_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        optomech(dir.path(), &["susceptibility", "--gains", "0,2500,5000,10000"])
            .status
            .success()
    );
    for g in [0, 2500, 5000, 10000] {
        let text = fs::read_to_string(dir.path().join(format!("susceptibility_g{g}.csv"))).unwrap();
        assert!(text.lines().any(|l| l.starts_with("freq_hz,value,phase_rad,unit")));
    }
    assert!(optomech(dir.path(), &["cascade", "run", "--g0", "1,5,10"])
        .status
        .success());
    for g in [1, 5, 10] {
        assert!(dir.path().join(format!("cascade_g0_{g}.csv")).exists());
        assert!(dir.path().join(format!("cascade_g0_{g}_series.csv")).exists());
    }
    assert!(optomech(dir.path(), &["noise-budget"]).status.success());
    assert!(optomech(dir.path(), &["chain", "report"]).status.success());
    assert!(dir.path().join("noise_budget.csv").exists());
    assert!(dir.path().join("chain_report.txt").exists());
}

#[test]
fn psd_and_ringdown_read_simulated_traces() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        optomech(dir.path(), &["simulate", "--controller", "off", "--duration", "200"])
            .status
            .success()
    );
    let trace = dir.path().join("trace.csv");
    let o = optomech(dir.path(), &["psd", "--input", trace.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let psd = fs::read_to_string(dir.path().join("psd.csv")).unwrap();
    assert!(psd.lines().any(|l| l.starts_with("freq_hz,value,unit")));
    assert!(psd
        .lines()
        .filter(|l| !l.starts_with('#'))
        .any(|l| l.ends_with("m^2/Hz")));

    // free decay from a large initial offset on top of 300 K noise
    assert!(optomech(
        dir.path(),
        &["simulate", "--controller", "off", "--duration", "20", "--x0", "1e-6"]
    )
    .status
    .success());
    let o = optomech(dir.path(), &["ringdown-fit", "--input", trace.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fit = fs::read_to_string(dir.path().join("ringdown_fit.txt")).unwrap();
    let q: f64 = fit
        .lines()
        .find_map(|l| l.strip_prefix("q = "))
        .and_then(|v| v.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((q - 100.0).abs() < 2.0, "{q}");
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_optomech"))
        .env("OPTOMECH_OUT", &target)
        .arg("chain")
        .arg("report")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(target.join("chain_report.txt").exists());
}

fn with_config(text: &str, args: &[&str]) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    fs::write(&cfg, text).unwrap();
    let mut all = vec!["--config", cfg.to_str().unwrap()];
    all.extend_from_slice(args);
    optomech(&dir.path().join("out"), &all)
}

fn single_error_line(o: &Output) -> String {
    let e = stderr(o);
    let lines: Vec<&str> = e.lines().collect();
    assert_eq!(lines.len(), 1, "{e}");
    lines[0].to_string()
}

#[test]
fn unknown_key_rejected_with_path() {
    let text = DEFAULT_CONFIG.replace("finesse = 1000", "finesse = 1000\nfinese = 2000");
    let o = with_config(&text, &["paper-report"]);
    assert_eq!(o.status.code(), Some(2));
    let line = single_error_line(&o);
    assert!(line.starts_with("error: config: "), "{line}");
    assert!(line.contains("fpi.finese"), "{line}");
}

#[test]
fn missing_key_reported_with_full_path() {
    let text = DEFAULT_CONFIG.replace("mass = 2.6 g\n", "");
    let o = with_config(&text, &["paper-report"]);
    assert_eq!(o.status.code(), Some(2));
    let line = single_error_line(&o);
    assert!(line.contains("missing required key resonator.mass"), "{line}");
}

#[test]
fn missing_unit_and_wrong_unit_rejected() {
    for bad in ["mass = 2.6\n", "mass = 2.6 Hz\n"] {
        let text = DEFAULT_CONFIG.replace("mass = 2.6 g\n", bad);
        let o = with_config(&text, &["chain", "report"]);
        assert_eq!(o.status.code(), Some(2));
        assert!(single_error_line(&o).contains("resonator.mass"));
    }
}

#[test]
fn unit_conversion_matches_default() {
    let text = DEFAULT_CONFIG.replace("mass = 2.6 g", "mass = 0.0026 kg");
    let a = with_config(&text, &["paper-report"]);
    let b = with_config(DEFAULT_CONFIG, &["paper-report"]);
    assert!(a.status.success() && b.status.success());
    let table = |o: &Output| {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .filter(|l| !l.starts_with("wrote "))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(table(&a), table(&b));
}

#[test]
fn missing_files_report_their_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = optomech(dir.path(), &["--config", "/nonexistent/exp.conf", "paper-report"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(single_error_line(&o).contains("/nonexistent/exp.conf"));

    let o = optomech(dir.path(), &["psd", "--input", "/nonexistent/trace.csv"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(single_error_line(&o).contains("/nonexistent/trace.csv"));
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("short.csv");
    fs::write(&csv, "t_s,x_m\n0,1\n0.01,2\n0.02,3\n").unwrap();
    let o = optomech(
        dir.path(),
        &["psd", "--input", csv.to_str().unwrap(), "--segment", "1024"],
    );
    assert!(!o.status.success());
    single_error_line(&o);

    let o = optomech(
        dir.path(),
        &["psd", "--input", csv.to_str().unwrap(), "--column", "v_volt"],
    );
    assert!(!o.status.success());
    assert!(single_error_line(&o).contains("v_volt"));

    let o = optomech(dir.path(), &["susceptibility", "--gains=-1"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn controller_off_trace_ignores_chain_section() {
    let run = |text: &str| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("exp.conf");
        fs::write(&cfg, text).unwrap();
        let args = [
            "--config",
            cfg.to_str().unwrap(),
            "simulate",
            "--controller",
            "off",
            "--duration",
            "5",
        ];
        let o = optomech(dir.path(), &args);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read_to_string(dir.path().join("trace.csv"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let changed = DEFAULT_CONFIG
        .replace("v_pi = 200 V", "v_pi = 350 V")
        .replace("p0 = 1.16 mW", "p0 = 20 mW");
    assert_ne!(changed, DEFAULT_CONFIG);
    assert_eq!(run(DEFAULT_CONFIG), run(&changed));
}
