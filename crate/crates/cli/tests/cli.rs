use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stresslrp::analysis::{make_regions, RegionTag};
use stresslrp::corpus::Alignment;
use stresslrp::export::read_grid_csv;
use stresslrp::nn::{build, Architecture, LayerSpec, NetworkSpec};
use stresslrp::pipeline::FrontEnd;
use stresslrp::train::{save_checkpoint, Checkpoint, CheckpointMeta, TrainConfig, TrainHistory};

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stresslrp"))
        .args(args)
        .env("STRESSLRP_OUT", out)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) {
    let o = run(out, args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.is_empty()).map(String::from).collect()
}

fn count_ext(dir: &Path, ext: &str) -> usize {
    fs::read_dir(dir).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == ext)).count()
}

fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn prepared(n: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&out, &["synth", "--n-per-class", n, "--seed", "3"]);
    ok(&out, &["ingest", "--seed", "3"]);
    (dir, out)
}

#[test]
fn synth_writes_counts_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&a, &["synth", "--n-per-class", "10"]);
    ok(&b, &["synth", "--n-per-class", "10"]);
    assert_eq!(count_ext(&a.join("synth/audio"), "wav"), 20);
    assert_eq!(count_ext(&a.join("synth/alignments"), "json"), 20);
    assert_eq!(lines(&a.join("synth/manifest.jsonl")).len(), 20);
    for f in ["synth/manifest.jsonl", "synth/noise.wav", "synth/audio/syn0003-fs.wav", "synth/tracks/syn0003-fs.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn synth_zero_gives_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&out, &["synth", "--n-per-class", "0"]);
    assert!(o.status.success());
    assert!(lines(&out.join("synth/manifest.jsonl")).is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty manifest"));
}

#[test]
fn augment_expands_training_rows_only() {
    let (_dir, out) = prepared("10");
    ok(&out, &["augment"]);
    let rows: Vec<serde_json::Value> =
        lines(&out.join("augmented/manifest.jsonl")).iter().map(|l| serde_json::from_str(l).unwrap()).collect();
    let base: Vec<serde_json::Value> =
        lines(&out.join("data/manifest.jsonl")).iter().map(|l| serde_json::from_str(l).unwrap()).collect();
    let count = |rows: &[serde_json::Value], split: &str| rows.iter().filter(|r| r["split"] == split).count();
    assert_eq!(count(&rows, "train"), 5 * count(&base, "train"));
    assert_eq!(count(&rows, "validation"), count(&base, "validation"));
    assert_eq!(count(&rows, "test"), count(&base, "test"));
    let augmented: Vec<_> = rows.iter().filter(|r| r.get("augmentation_tag").is_some()).collect();
    assert_eq!(augmented.len(), 4 * count(&base, "train"));
    for tag in ["lowpass", "snr20", "snr10", "snr3"] {
        assert_eq!(augmented.iter().filter(|r| r["augmentation_tag"] == tag).count(), count(&base, "train"));
    }
}

#[test]
fn augment_without_noise_is_a_config_error() {
    let (_dir, out) = prepared("4");
    fs::remove_file(out.join("synth/noise.wav")).unwrap();
    let o = run(&out, &["augment"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("augmented").exists());
}

#[test]
fn invalid_config_touches_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"analysis": {"tau": 2.0}}"#).unwrap();
    let out = dir.path().join("out");
    let o = run(&out, &["--config", cfg.to_str().unwrap(), "synth", "--n-per-class", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    fs::write(&cfg, r#"{"trian": {}}"#).unwrap();
    assert_eq!(run(&out, &["--config", cfg.to_str().unwrap(), "synth"]).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"synth": {"n_per_class": 3}}"#).unwrap();
    let out = dir.path().join("out");
    ok(&out, &["--config", cfg.to_str().unwrap(), "synth"]);
    assert_eq!(lines(&out.join("synth/manifest.jsonl")).len(), 6);
    ok(&out, &["--config", cfg.to_str().unwrap(), "synth", "--n-per-class", "1"]);
    assert_eq!(lines(&out.join("synth/manifest.jsonl")).len(), 2);
}

#[test]
fn missing_checkpoint_names_the_remedy() {
    let (_dir, out) = prepared("4");
    let o = run(&out, &["eval"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stresslrp train"));
}

#[test]
fn constant_initial_predictor_scores_half() {
    let (_dir, out) = prepared("6");
    let shape = FrontEnd::default().input_shape(16_000).unwrap();
    let lenet = build(Architecture::LeNet5, &shape, 1).unwrap();
    let mut layers = lenet.layers().to_vec();
    let Some(LayerSpec::Dense(d)) = layers.last_mut() else { panic!("lenet ends in a dense layer") };
    d.weights.iter_mut().for_each(|w| *w = 0.0);
    d.bias = vec![5.0, -5.0];
    let net = NetworkSpec::new(shape, layers, 2).unwrap();
    let meta = CheckpointMeta { architecture: None, config: TrainConfig::default(), epoch: 0, history: TrainHistory::default() };
    save_checkpoint(&out.join("model/model.bin"), &Checkpoint { net, meta }).unwrap();
    ok(&out, &["eval"]);
    let (header, rows) = table(&out.join("eval/accuracy.csv"));
    let acc = header.iter().position(|h| h == "accuracy").unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!(r[acc], "0.5", "{r:?}");
    }
}

#[test]
fn full_pipeline_artifacts() {
    let (_dir, out) = prepared("6");
    ok(&out, &["augment"]);
    ok(&out, &["train", "--epochs", "1"]);
    assert!(out.join("model/model.bin").exists() && out.join("model/history.csv").exists());
    ok(&out, &["eval"]);
    ok(&out, &["explain", "--rule", "composite", "--rule", "epsilon"]);

    let n_test = lines(&out.join("data/manifest.jsonl")).iter().filter(|l| l.contains(r#""split":"test""#)).count();
    assert!(n_test > 0);
    for rule in ["composite", "epsilon"] {
        let d = out.join("explain").join(rule);
        assert_eq!(count_ext(&d, "png"), n_test);
        assert_eq!(count_ext(&d, "csv"), n_test + 1);
    }
    let snapshot = |rule: &str| -> Vec<(PathBuf, Vec<u8>)> {
        let mut files: Vec<PathBuf> = fs::read_dir(out.join("explain").join(rule)).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        files.into_iter().map(|p| (p.clone(), fs::read(p).unwrap())).collect()
    };
    let before = snapshot("composite");
    ok(&out, &["explain", "--rule", "composite", "--rule", "epsilon"]);
    assert_eq!(before, snapshot("composite"));

    // analyze against rules that were not explained
    assert_eq!(run(&out, &["analyze", "--rule", "z"]).status.code(), Some(2));
    ok(&out, &["analyze", "--rule", "composite", "--rule", "epsilon", "--permutations", "20"]);
    let (header, rows) = table(&out.join("analysis/mu_samples.csv"));
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let tiles = ["stressed_vowel", "stressed_other", "unstressed_vowel", "unstressed_other"].map(col);
    for r in &rows {
        let sum: f64 = tiles.iter().map(|&c| r[c].parse::<f64>().unwrap()).sum();
        assert!(sum <= 1.0 + 1e-9, "{r:?}");
    }

    // Recount one sample's stressed-vowel ratio from its relevance CSV.
    let r = rows.iter().find(|r| r[0] == "composite").unwrap();
    let id = &r[1];
    let grid = read_grid_csv(&out.join(format!("explain/composite/{id}.csv"))).unwrap();
    let alignment: Alignment =
        serde_json::from_str(&fs::read_to_string(out.join(format!("synth/alignments/{id}.json"))).unwrap()).unwrap();
    let g = FrontEnd::default().geometry(16_000).unwrap();
    let region = make_regions(&alignment, &g).unwrap().get(RegionTag::StressedVowel);
    let mut inside = 0.0;
    let mut total = 0.0;
    for b in 0..grid.n_bins {
        for f in 0..grid.n_frames {
            let v = grid.values[b * grid.n_frames + f].max(0.0);
            total += v;
            if region.spans.iter().any(|&(s, e)| (s..e).contains(&f)) {
                inside += v;
            }
        }
    }
    let reported: f64 = r[col("stressed_vowel")].parse().unwrap();
    assert!((inside / total - reported).abs() < 1e-9);

    let (fh, frows) = table(&out.join("analysis/features.csv"));
    assert_eq!(frows.len(), 30);
    let r_col = fh.iter().position(|h| h == "mean_r").unwrap();
    for rule in frows.chunks(15) {
        let rs: Vec<f64> = rule.iter().map(|r| r[r_col].parse().unwrap_or(f64::NAN)).collect();
        assert!(rs.windows(2).all(|w| w[0] >= w[1] || w[1].is_nan()));
    }
    let (_, res) = table(&out.join("analysis/residual_samples.csv"));
    for r in res {
        let s: f64 = r[2..6].iter().map(|v| v.parse::<f64>().unwrap()).sum();
        assert!(s == 0.0 || (s - 1.0).abs() < 1e-9);
    }

    ok(&out, &["report"]);
    let md = fs::read_to_string(out.join("report/report.md")).unwrap();
    assert!(md.contains("amplitude_ratio") && md.contains("Feature subsets"));
    assert!(!md.contains("not available"));
}
