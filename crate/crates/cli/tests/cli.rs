use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
[problem]
dimension = 1

[problem.symbol]
kind = "isotropic_stable"
alpha = 1.0

[problem.potential]
kind = "power"
c = 1.0
theta = 2.0

[grid]
half_length = 12.0
points = 512

[solver]
k = 30

[[bounds.curve]]
kind = "heat_trace"

[[bounds.curve]]
kind = "power"
delta = "calibrate"

[ritz]
n_list = [4, 8, 16]
"#;

fn fracspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracspec")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(config: &Path, out: &Path, command: &str, extra: &[&str]) -> Output {
    let mut args = vec![command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    fracspec(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Every file below `root`, keyed by relative path.
fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn only_dir(root: &Path, prefix: &str) -> PathBuf {
    let dirs: Vec<PathBuf> = fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with(prefix))
        .collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs[0].clone()
}

#[test]
fn second_spectrum_run_is_a_cache_hit_with_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("runs");
    let first = run(&config, &out, "spectrum", &[]);
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(stdout(&first).contains("(computed)"));
    let before = snapshot(&out);
    let second = run(&config, &out, "spectrum", &[]);
    assert!(second.status.success());
    assert!(stdout(&second).contains("(cached)"));
    assert_eq!(before, snapshot(&out));

    let forced = run(&config, &out, "spectrum", &["--force"]);
    assert!(stdout(&forced).contains("(computed)"));
    assert_eq!(before, snapshot(&out));
}

#[test]
fn missing_theta_is_a_parse_error_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "bad.toml", &SMALL.replace("theta = 2.0\n", ""));
    let o = run(&config, &tmp.path().join("runs"), "spectrum", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing field `theta`"), "{}", stderr(&o));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn invalid_values_and_unknown_fields_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("runs");
    let alpha = write_config(tmp.path(), "alpha.toml", &SMALL.replace("alpha = 1.0", "alpha = 2.5"));
    assert_eq!(run(&alpha, &out, "spectrum", &[]).status.code(), Some(1));
    let typo = write_config(tmp.path(), "typo.toml", &SMALL.replace("points = 512", "points = 512\npionts = 3"));
    let o = run(&typo, &out, "spectrum", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("pionts"));
    assert_eq!(fracspec(&["spectrum"]).status.code(), Some(1));
}

#[test]
fn solver_failure_exits_with_numerical_status() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "tight.toml", &SMALL.replace("k = 30", "k = 30\nmax_iter = 5"));
    let o = run(&config, &tmp.path().join("runs"), "spectrum", &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn report_on_the_oscillator_lists_fit_ordering_and_domination() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("runs");
    let o = run(&config, &out, "report", &["--check"]);
    assert!(o.status.success(), "{}\n{}", stdout(&o), stderr(&o));
    let dir = only_dir(&out, "report-");
    let text = fs::read_to_string(dir.join("report.txt")).unwrap();
    assert!(text.contains("fit: slope"));
    assert!(text.contains("bound ordering"));
    assert!(text.contains("heat-trace"));
    assert!(text.contains("ritz domination"));
    assert!(text.contains("checks: passed"));
    let domination = fs::read_to_string(dir.join("domination.csv")).unwrap();
    assert!(domination.starts_with("basis_size,j,mu,lambda,dominates\n"));
    assert!(domination.lines().skip(1).all(|l| l.ends_with(",true")));

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema_version"], 1);
    for stage in ["spectrum", "fit", "bounds", "ritz"] {
        let digest = manifest["inputs"][stage].as_str().unwrap();
        assert!(out.join(format!("{stage}-{}", &digest[..12])).is_dir());
    }
}

#[test]
fn failed_check_exits_with_status_three() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[fit]\nexpect = 1.5\ntolerance = 0.01\n");
    let config = write_config(tmp.path(), "off.toml", &text);
    let out = tmp.path().join("runs");
    let o = run(&config, &out, "report", &["--check"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("fit slope"));
    assert!(run(&config, &out, "report", &[]).status.success());
}

#[test]
fn corrupt_cache_is_recomputed_with_a_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("runs");
    assert!(run(&config, &out, "spectrum", &[]).status.success());
    let before = snapshot(&out);
    let csv = only_dir(&out, "spectrum-").join("spectrum.csv");
    fs::write(&csv, "n,lambda,residual\n1,0.0,0.0\n").unwrap();
    let o = run(&config, &out, "spectrum", &[]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning") && stderr(&o).contains("corrupt"), "{}", stderr(&o));
    assert!(stdout(&o).contains("(computed)"));
    assert_eq!(before, snapshot(&out));
}

#[test]
fn manifest_alone_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "small.toml", SMALL);
    let first = tmp.path().join("a");
    assert!(run(&config, &first, "fit", &[]).status.success());
    let manifest = only_dir(&first, "fit-").join("manifest.json");
    let second = tmp.path().join("b");
    let o = run(&manifest, &second, "fit", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(snapshot(&first), snapshot(&second));
}

#[test]
fn seed_override_and_format_select_distinct_results() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("runs");
    assert!(run(&config, &out, "spectrum", &[]).status.success());
    assert!(run(&config, &out, "spectrum", &["--seed", "7", "--threads", "1"]).status.success());
    assert!(run(&config, &out, "spectrum", &["--format", "json"]).status.success());
    let dirs: Vec<PathBuf> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 3);
    let json_dir = dirs.iter().find(|d| d.join("spectrum.json").exists()).unwrap();
    let s: serde_json::Value = serde_json::from_slice(&fs::read(json_dir.join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(s["eigenvalues"].as_array().unwrap().len(), 30);

    // eigenvalues do not depend on the starting vector
    let values = |dir: &Path| -> Vec<f64> {
        fs::read_to_string(dir.join("spectrum.csv"))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let csv: Vec<&PathBuf> = dirs.iter().filter(|d| d.join("spectrum.csv").exists()).collect();
    for (a, b) in values(csv[0]).iter().zip(values(csv[1])) {
        assert!((a - b).abs() < 1e-6 * a.abs().max(1.0));
    }
}

#[test]
fn bounds_and_ritz_commands_write_their_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("runs");
    let o = run(&config, &out, "bounds", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bounds = fs::read_to_string(only_dir(&out, "bounds-").join("bounds.csv")).unwrap();
    assert!(bounds.starts_with("n,bound,source,constants_digest\n"));
    for source in ["heat-trace", "power-lower", "power-upper"] {
        assert!(bounds.contains(source));
    }
    let o = run(&config, &out, "ritz", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let scaling = fs::read_to_string(only_dir(&out, "ritz-").join("ritz_scaling.csv")).unwrap();
    assert_eq!(scaling.lines().count(), 4);
}
