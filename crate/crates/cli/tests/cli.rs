use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcs"))
        .args(args)
        .output()
        .expect("bcs runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("config.json");
    let mut cfg = bcs_core::experiment::ExperimentConfig::small();
    cfg.trials = 2;
    cfg.dataset_size = 2;
    fs::write(&path, cfg.to_json_pretty()).unwrap();
    path
}

#[test]
fn gen_data_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = bcs(&["gen-data", "--config", arg(&cfg), "--out", arg(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names, ["manifest.json", "signal_0.json", "signal_1.json"]);
    for name in names {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap());
    }
    let manifest = fs::read_to_string(a.join("manifest.json")).unwrap();
    bcs_core::experiment::DatasetManifest::from_json_str(&manifest).unwrap();

    let c = tmp.path().join("c");
    bcs(&["gen-data", "--config", arg(&cfg), "--out", arg(&c), "--seed", "77"]);
    assert_ne!(
        fs::read(a.join("signal_0.json")).unwrap(),
        fs::read(c.join("signal_0.json")).unwrap()
    );
}

#[test]
fn learn_kernel_hand_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    fs::create_dir(&data).unwrap();
    fs::write(data.join("signal_0.json"), r#"{"dims":[3],"data":[1.0,1.0,0.0]}"#).unwrap();
    let out = tmp.path().join("out");
    let o = bcs(&["learn-kernel", "--data", arg(&data), "--out", arg(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let kernel =
        bcs_core::CorrelationKernel::from_json_str(&fs::read_to_string(out.join("kernel.json")).unwrap()).unwrap();
    assert_eq!(kernel.values().data(), &[0.5, 0.0, 0.5]);
    let again = bcs_core::CorrelationKernel::from_json_str(&kernel.to_json()).unwrap();
    assert_eq!(again, kernel);
    assert!(out.join("stats.json").exists());
}

#[test]
fn learn_kernel_empty_dir_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bcs(&[
        "learn-kernel",
        "--data",
        arg(tmp.path()),
        "--out",
        arg(&tmp.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_configs_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, r#"{"trials": 0}"#).unwrap();
    assert_eq!(bcs(&["bench-snr", "--config", arg(&cfg)]).status.code(), Some(2));
    assert_eq!(bcs(&["bench-snr", "--profile", "nope"]).status.code(), Some(2));
    assert_eq!(
        bcs(&["bench-snr", "--config", arg(&tmp.path().join("missing.json"))])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(bcs(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn bench_subsampling_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let mut csvs = Vec::new();
    for name in ["r1", "r2"] {
        let out = tmp.path().join(name);
        let o = bcs(&["bench-subsampling", "--config", arg(&cfg), "--out", arg(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        csvs.push(fs::read_to_string(out.join("bench_subsampling.csv")).unwrap());
        assert!(out.join("bench_subsampling.json").exists());
    }
    assert_eq!(csvs[0], csvs[1]);
    let mut lines = csvs[0].lines();
    assert_eq!(lines.next(), Some("ratio,beta,method,nmse"));
    for line in lines {
        let nmse: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(nmse.is_finite() && nmse >= 0.0);
    }
}

#[test]
fn bench_snr_and_timing_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("o");
    assert!(bcs(&["bench-snr", "--config", arg(&cfg), "--out", arg(&out)])
        .status
        .success());
    let csv = fs::read_to_string(out.join("bench_snr.csv")).unwrap();
    assert!(csv.starts_with("snr_db,beta,method,nmse,mean_ms\n"));
    // 2 SNR points x 2 betas x 2 methods
    assert_eq!(csv.lines().count(), 1 + 8);

    assert!(bcs(&["timing", "--config", arg(&cfg), "--out", arg(&out)])
        .status
        .success());
    let csv = fs::read_to_string(out.join("timing.csv")).unwrap();
    assert!(csv.starts_with("beta,method,wall_ms\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
}

#[test]
fn bounds_command() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bounds.json");
    fs::write(&cfg, r#"{"m": 9600}"#).unwrap();
    let out = tmp.path().join("o");
    let o = bcs(&["bounds", "--config", arg(&cfg), "--out", arg(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("bounds.csv")).unwrap();
    assert!(csv.starts_with("beta,mu_lower_bound,mse_upper_bound\n1,"));
    assert_eq!(csv.lines().count(), 1 + 11);
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("bounds.json")).unwrap()).unwrap();
    assert_eq!(sidecar["config"]["m"], 9600);
}
