use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparsebayes"))
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(cfg).arg("--out").arg(out).args(extra).output().unwrap()
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn header(csv: &str) -> &str {
    csv.lines().next().unwrap()
}

/// Every cell after the header must be a finite number or `-inf`, apart
/// from the named text columns.
fn assert_cells_numeric(csv: &str, text_cols: &[usize]) {
    for line in csv.lines().skip(1) {
        for (i, cell) in line.split(',').enumerate() {
            if text_cols.contains(&i) {
                continue;
            }
            let ok = cell == "-inf" || cell.parse::<f64>().is_ok_and(f64::is_finite);
            assert!(ok, "bad cell {cell:?} in {line:?}");
        }
    }
}

const SOLVE: &str = "experiment = \"solve\"\nseed = 7\n[model]\nm = 80\n[solver]\nmethods = [\"blrc\"]\n";

#[test]
fn missing_experiment_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 1\n");
    let o = run(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("experiment"));
}

#[test]
fn unknown_names_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    for text in ["experiment = \"fourier\"\n", "experiment = \"solve\"\n[model]\nnoise = 0.1\n", "experiment = \"solve\"\n[solver]\nmax_iter = 3\n"] {
        let cfg = write_config(dir.path(), text);
        let o = run(&cfg, &dir.path().join("out"), &[]);
        assert_eq!(o.status.code(), Some(2), "{text}");
    }
    let o = run(&dir.path().join("absent.toml"), &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_writes_schema_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SOLVE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = run(&cfg, &a, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("solve blrc"));
    assert!(run(&cfg, &b, &["--jobs", "1"]).status.success());

    let spectrum = read(a.join("spectrum.csv"));
    assert_eq!(header(&spectrum), "bin,magnitude,db");
    assert_eq!(spectrum.lines().count(), 257);
    assert_cells_numeric(&spectrum, &[]);
    let trace = read(a.join("trace.csv"));
    assert_eq!(header(&trace), "iter,residue_db,sigma_n,gamma,cond_h");
    assert_cells_numeric(&trace, &[]);
    assert_eq!(header(&read(a.join("metrics.csv"))), "metric,value");

    for f in ["spectrum.csv", "trace.csv", "metrics.csv"] {
        assert_eq!(read(a.join(f)), read(b.join(f)), "{f} differs between runs");
    }
    let json: serde_json::Value = serde_json::from_str(&read(a.join("result.json"))).unwrap();
    assert_eq!(json["meta"]["experiment"], "solve");
    assert!(json["meta"]["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(json["meta"]["config"]["seed"], 7);
}

#[test]
fn format_and_seed_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"synth\"\n[model]\nrays = \"random\"\n");
    let out = dir.path().join("o");
    assert!(run(&cfg, &out, &["--format", "csv", "--seed", "5"]).status.success());
    assert!(out.join("measurement.csv").exists());
    assert!(!out.join("result.json").exists());
    let first = read(out.join("truth.csv"));
    assert!(run(&cfg, &out, &["--format", "csv,json", "--seed", "6"]).status.success());
    assert_ne!(read(out.join("truth.csv")), first);
    let json: serde_json::Value = serde_json::from_str(&read(out.join("result.json"))).unwrap();
    assert_eq!(json["meta"]["config"]["seed"], 6);
    assert_eq!(bin().args(["run", "x.toml", "--format", "png"]).output().unwrap().status.code(), Some(2));
}

#[test]
fn several_methods_get_subdirectories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SOLVE.replace("[\"blrc\"]", "[\"omp\", \"blrc\"]"));
    let out = dir.path().join("o");
    assert!(run(&cfg, &out, &[]).status.success());
    for m in ["omp", "blrc"] {
        assert!(out.join(m).join("spectrum.csv").exists());
    }
}

#[test]
fn small_sweep_has_one_row_per_value_and_method() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"sweep_noise\"\ntrials = 3\n[model]\nrays = \"random\"\n[sweep]\nvalues = [0.1, 0.5]\n[solver]\nmethods = [\"omp\", \"blrc\"]\n",
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = run(&cfg, &a, &["--jobs", "2"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 6);
    let mse = read(a.join("mse_vs_sigma.csv"));
    assert_eq!(header(&mse), "sigma,method,mean_mse_db,stderr");
    assert_eq!(mse.lines().count(), 5);
    assert_cells_numeric(&mse, &[1]);
    assert_eq!(header(&read(a.join("sigma_est_vs_sigma.csv"))), "sigma,method,mean_sigma_est,stderr");
    // a different pool size must not change the aggregate
    assert!(run(&cfg, &b, &["--jobs", "1"]).status.success());
    assert_eq!(mse, read(b.join("mse_vs_sigma.csv")));
}

#[test]
fn radar_writes_pgm_images() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"radar\"\n[solver]\nmethods = [\"omp\"]\n");
    let out = dir.path().join("o");
    assert!(run(&cfg, &out, &["--format", "pgm,csv"]).status.success());
    let pgm = std::fs::read(out.join("image_omp.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n"));
    assert_eq!(header(&read(out.join("image_omp.csv"))), "range_bin,range_m,column,angle_deg,db");
    assert_eq!(header(&read(out.join("scores.csv"))), "trial,method,detected,missed,spurious,flagged_rows");
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            sparsebayes_cli::config::ExperimentConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 9);
}
