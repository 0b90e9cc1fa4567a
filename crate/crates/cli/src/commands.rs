use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use stresslrp::analysis::{
    feature_heatmap, make_regions, rank_feature_subsets, residual_distribution, AnalysisItem, Feature, FeatureSet,
    FeatureTrack, Region, RegionTag, ResidualBands, BAND_NAMES,
};
use stresslrp::corpus::{
    load_manifest_entries, mix_seed, read_wav, split_by_word_type, synthesize_corpus, synthesize_noise, write_manifest,
    write_wav, AugmentationTag, DatasetSplit, ManifestRow, Sample, SplitCounts, SplitName, Stress, SynthParams,
};
use stresslrp::dsp::{bootstrap_mean_diff, vowel_ratio_stats, Spectrogram};
use stresslrp::error::{Error, Result};
use stresslrp::export::{export_relevance, read_grid_csv};
use stresslrp::lrp::{RelevanceMap, Rule, RuleConfig};
use stresslrp::nn::{build, fold_batchnorm};
use stresslrp::pipeline::{augment_sample, explain, featurize, labeled_set, mean_mu, region_mu, train_on_split, SampleMu};
use stresslrp::train::{evaluate, load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta};
use stresslrp::SAMPLE_RATE;

use crate::config::PipelineConfig;
use crate::layout::Layout;

pub struct Ctx {
    pub cfg: PipelineConfig,
    pub layout: Layout,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source: e }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    io_err(path, std::io::Error::other(e.to_string()))
}

/// Writes a headed CSV table in one go.
fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        create_dir(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

fn require(path: &Path, hint: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Dependency { path: path.to_path_buf(), hint: hint.into() })
    }
}

fn absolute(base: &Path, p: &str) -> Result<String> {
    let joined = if Path::new(p).is_absolute() { PathBuf::from(p) } else { base.join(p) };
    let abs = fs::canonicalize(&joined).map_err(|e| io_err(&joined, e))?;
    Ok(abs.display().to_string())
}

impl Ctx {
    fn entries(&self, manifest: &Path) -> Result<Vec<(ManifestRow, Sample)>> {
        load_manifest_entries(manifest, self.cfg.dsp.word_window_s)
    }

    /// Rows of the ingested manifest grouped by split.
    fn data_split(&self, manifest: &Path) -> Result<DatasetSplit> {
        let mut split = DatasetSplit::default();
        for (i, (row, sample)) in self.entries(manifest)?.into_iter().enumerate() {
            let name = row
                .split
                .ok_or_else(|| Error::Ingest { row: i + 1, message: format!("{}: row has no split", manifest.display()) })?;
            match name {
                SplitName::Train => split.train.push(sample),
                SplitName::Validation => split.validation.push(sample),
                SplitName::Test => split.test.push(sample),
            }
        }
        Ok(split)
    }

    fn ingested(&self) -> Result<DatasetSplit> {
        let path = self.layout.data_manifest();
        require(&path, "run `stresslrp ingest` first")?;
        self.data_split(&path)
    }

    fn checkpoint_path(&self) -> PathBuf {
        self.cfg.paths.checkpoint.clone().unwrap_or_else(|| self.layout.checkpoint())
    }

    fn tracks_dir(&self) -> Option<PathBuf> {
        self.cfg.paths.tracks.clone().or_else(|| Some(self.layout.synth_tracks()).filter(|p| p.is_dir()))
    }
}

pub fn synth(ctx: &Ctx) -> Result<()> {
    let n = ctx.cfg.synth.n_per_class;
    let dir = ctx.layout.synth_dir();
    let geometry = ctx.cfg.dsp.geometry(SAMPLE_RATE)?;
    let corpus = synthesize_corpus(n, ctx.cfg.seed, &SynthParams::default())?;
    let noise = synthesize_noise(ctx.cfg.synth.noise_s, SAMPLE_RATE, mix_seed(ctx.cfg.seed, u64::MAX))?;
    for sub in ["audio", "alignments", "tracks"] {
        create_dir(&dir.join(sub))?;
    }
    if n == 0 {
        warn!("n_per_class is 0: writing an empty manifest");
    }
    let mut rows = Vec::with_capacity(corpus.len());
    for (sample, truth) in &corpus {
        let id = &sample.source_id;
        let audio = format!("audio/{id}.wav");
        let alignment = format!("alignments/{id}.json");
        write_wav(&dir.join(&audio), &truth.clip)?;
        write_json(&dir.join(&alignment), &truth.alignment)?;
        FeatureTrack::from_synthetic(truth, &geometry).write_csv(&dir.join("tracks").join(format!("{id}.csv")))?;
        rows.push(ManifestRow {
            audio_path: audio,
            alignment_path: alignment,
            word_type: sample.word_type.clone(),
            source_id: id.clone(),
            augmentation_tag: AugmentationTag::None,
            split: None,
        });
    }
    write_manifest(&ctx.layout.synth_manifest(), &rows)?;
    write_wav(&ctx.layout.synth_noise(), &noise)?;
    info!("wrote {} synthetic tokens and noise to {}", rows.len(), dir.display());
    Ok(())
}

pub fn ingest(ctx: &Ctx) -> Result<()> {
    let source = ctx.cfg.paths.manifest.clone().unwrap_or_else(|| ctx.layout.synth_manifest());
    require(&source, "run `stresslrp synth` first or set paths.manifest")?;
    let entries = ctx.entries(&source)?;
    let mut seen = HashSet::new();
    for (i, (row, _)) in entries.iter().enumerate() {
        if !seen.insert(row.source_id.as_str()) {
            return Err(Error::Ingest { row: i + 1, message: format!("duplicate source_id `{}`", row.source_id) });
        }
    }
    let n_types = entries.iter().map(|(_, s)| s.word_type.as_str()).collect::<BTreeSet<_>>().len();
    let counts = SplitCounts::from_fractions(n_types, ctx.cfg.split.validation, ctx.cfg.split.test)?;
    let samples: Vec<Sample> = entries.iter().map(|(_, s)| s.clone()).collect();
    let split = split_by_word_type(samples, counts, ctx.cfg.seed)?;
    let mut which = BTreeMap::new();
    for name in SplitName::ALL {
        for s in split.get(name) {
            which.insert(s.source_id.clone(), name);
        }
    }

    let base = source.parent().map(Path::to_path_buf).unwrap_or_default();
    let rows = entries
        .iter()
        .map(|(row, _)| {
            Ok(ManifestRow {
                audio_path: absolute(&base, &row.audio_path)?,
                alignment_path: absolute(&base, &row.alignment_path)?,
                split: Some(which[&row.source_id]),
                ..row.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let out = ctx.layout.data_manifest();
    create_dir(out.parent().expect("data dir"))?;
    write_manifest(&out, &rows)?;
    let table: Vec<Vec<String>> = SplitName::ALL
        .iter()
        .map(|&n| vec![n.as_str().into(), split.get(n).len().to_string(), split.word_types(n).len().to_string()])
        .collect();
    write_table(&ctx.layout.split_counts(), &["split", "samples", "word_types"], &table)?;
    info!(
        "ingested {} samples: {} train, {} validation, {} test",
        rows.len(),
        split.train.len(),
        split.validation.len(),
        split.test.len()
    );
    Ok(())
}

pub fn augment(ctx: &Ctx) -> Result<()> {
    let noise_path = match &ctx.cfg.paths.noise {
        Some(p) => p.clone(),
        None if ctx.layout.synth_noise().exists() => ctx.layout.synth_noise(),
        None => return Err(Error::Config("augmentation needs a noise WAV: set paths.noise or pass --noise".into())),
    };
    let data = ctx.layout.data_manifest();
    require(&data, "run `stresslrp ingest` first")?;
    let noise = read_wav(&noise_path)?;
    let entries = ctx.entries(&data)?;
    let dir = ctx.layout.augmented_dir();
    create_dir(&dir.join("audio"))?;
    create_dir(&dir.join("alignments"))?;
    let mut rows: Vec<ManifestRow> = entries.iter().map(|(r, _)| r.clone()).collect();
    let mut added = 0;
    for (row, sample) in entries.iter().filter(|(r, _)| r.split == Some(SplitName::Train)) {
        for aug in augment_sample(sample, &noise)? {
            let id = format!("{}-{}", row.source_id, aug.augmentation.as_str());
            let audio = format!("audio/{id}.wav");
            let alignment = format!("alignments/{id}.json");
            write_wav(&dir.join(&audio), &aug.clip)?;
            write_json(&dir.join(&alignment), &aug.alignment)?;
            rows.push(ManifestRow {
                audio_path: audio,
                alignment_path: alignment,
                word_type: row.word_type.clone(),
                source_id: id,
                augmentation_tag: aug.augmentation,
                split: Some(SplitName::Train),
            });
            added += 1;
        }
    }
    write_manifest(&ctx.layout.augmented_manifest(), &rows)?;
    info!("added {added} augmented training rows ({} rows total)", rows.len());
    Ok(())
}

pub fn train(ctx: &Ctx) -> Result<()> {
    let manifest = if ctx.layout.augmented_manifest().exists() {
        ctx.layout.augmented_manifest()
    } else {
        let data = ctx.layout.data_manifest();
        require(&data, "run `stresslrp ingest` first")?;
        warn!("no augmented manifest found; training on unaugmented data");
        data
    };
    let mut split = ctx.data_split(&manifest)?;
    split.test.clear();
    let arch = ctx.cfg.architecture()?;
    let sr = split.train.first().map_or(SAMPLE_RATE, |s| s.clip.sample_rate());
    let init = build(arch, &ctx.cfg.dsp.input_shape(sr)?, ctx.cfg.seed)?;
    let cfg = ctx.cfg.train_config();
    info!("training {arch} on {} rows, validating on {}", split.train.len(), split.validation.len());
    let (net, history) = train_on_split(&init, &split, None, &ctx.cfg.dsp, &cfg)?;

    let path = ctx.checkpoint_path();
    let meta = CheckpointMeta { architecture: Some(arch.name().into()), config: cfg, epoch: history.best_epoch, history };
    let rows: Vec<Vec<String>> = (0..meta.history.train_loss.len())
        .map(|e| {
            let h = &meta.history;
            vec![
                (e + 1).to_string(),
                h.train_loss[e].to_string(),
                h.train_accuracy[e].to_string(),
                h.validation_accuracy[e].map_or(String::new(), |v| v.to_string()),
                h.learning_rate[e].to_string(),
            ]
        })
        .collect();
    save_checkpoint(&path, &Checkpoint { net, meta })?;
    write_table(
        &ctx.layout.history(),
        &["epoch", "train_loss", "train_accuracy", "validation_accuracy", "learning_rate"],
        &rows,
    )?;
    info!("checkpoint written to {}", path.display());
    Ok(())
}

pub fn eval(ctx: &Ctx) -> Result<()> {
    let ckpt = load_checkpoint(&ctx.checkpoint_path())?;
    let split = ctx.ingested()?;
    let mut rows = Vec::new();
    for name in SplitName::ALL {
        let samples = split.get(name);
        if samples.is_empty() {
            continue;
        }
        let e = evaluate(&ckpt.net, &labeled_set(samples, &ctx.cfg.dsp)?)?;
        info!("{}: accuracy {:.4} ({}/{})", name.as_str(), e.accuracy, e.correct, e.n);
        let c = e.confusion;
        rows.push(vec![
            name.as_str().into(),
            e.n.to_string(),
            e.correct.to_string(),
            e.accuracy.to_string(),
            c[0][0].to_string(),
            c[0][1].to_string(),
            c[1][0].to_string(),
            c[1][1].to_string(),
        ]);
    }
    write_table(
        &ctx.layout.accuracy(),
        &["split", "n", "correct", "accuracy", "initial_as_initial", "initial_as_final", "final_as_initial", "final_as_final"],
        &rows,
    )
}

pub fn explain_cmd(ctx: &Ctx) -> Result<()> {
    let ckpt = load_checkpoint(&ctx.checkpoint_path())?;
    let net = fold_batchnorm(&ckpt.net)?;
    let split = ctx.ingested()?;
    let samples = split.get(ctx.cfg.analysis.split);
    for rules in ctx.cfg.lrp.rule_configs() {
        rules.resolve(&net)?;
    }
    for rules in ctx.cfg.lrp.rule_configs() {
        let dir = ctx.layout.explain_dir(rules.rule);
        create_dir(&dir)?;
        let mut rows = Vec::with_capacity(samples.len());
        for s in samples {
            let e = explain(&net, s, &ctx.cfg.dsp, &rules, None)?;
            export_relevance(&dir, &s.source_id, &e.map)?;
            rows.push(vec![
                s.source_id.clone(),
                stress_name(s.stress()).into(),
                e.target.to_string(),
                e.predicted.to_string(),
                e.logits[0].to_string(),
                e.logits[1].to_string(),
                e.map.total().to_string(),
            ]);
        }
        write_table(
            &dir.join("predictions.csv"),
            &["source_id", "stress", "target", "predicted", "logit_initial", "logit_final", "relevance_total"],
            &rows,
        )?;
        info!("{}: explained {} samples into {}", rules.rule.as_str(), samples.len(), dir.display());
    }
    Ok(())
}

fn stress_name(s: Stress) -> &'static str {
    match s {
        Stress::Initial => "initial",
        Stress::Final => "final",
    }
}

/// One sample's relevance with what the feature analysis needs.
struct Loaded {
    map: RelevanceMap,
    spectrogram: Spectrogram,
    track: Option<FeatureTrack>,
    region: Region,
}

fn load_explained(ctx: &Ctx, rule: Rule, s: &Sample, tracks: Option<&Path>) -> Result<Loaded> {
    let path = ctx.layout.explain_dir(rule).join(format!("{}.csv", s.source_id));
    require(&path, "run `stresslrp explain` first with the same rules")?;
    let grid = read_grid_csv(&path)?;
    let map = RelevanceMap::new(vec![1, grid.n_bins, grid.n_frames], grid.values)?;
    let spectrogram = featurize(&s.clip, &ctx.cfg.dsp)?.spectrogram;
    if (map.n_bins(), map.n_frames()) != (spectrogram.n_bins(), spectrogram.n_frames()) {
        return Err(Error::Config(format!("{} does not match the configured front end", path.display())));
    }
    let region = make_regions(&s.alignment, &spectrogram.geometry)?.get(RegionTag::StressedVowel);
    let track = match tracks.map(|d| d.join(format!("{}.csv", s.source_id))) {
        Some(p) if p.exists() => {
            let t = FeatureTrack::read_csv(&p)?;
            t.validate(spectrogram.geometry.bin_hz * (spectrogram.n_bins() - 1) as f64)?;
            Some(t)
        }
        Some(p) => {
            warn!("no feature track {}", p.display());
            None
        }
        None => None,
    };
    Ok(Loaded { map, spectrogram, track, region })
}

fn fmt(v: f64) -> String {
    v.to_string()
}

pub fn analyze(ctx: &Ctx) -> Result<()> {
    let split = ctx.ingested()?;
    let samples = split.get(ctx.cfg.analysis.split);
    let tracks = ctx.tracks_dir();
    if tracks.is_none() {
        warn!("no feature-track directory: skipping feature correlation and residual tables");
    }
    let rules: Vec<RuleConfig> = ctx.cfg.lrp.rule_configs();
    for r in &rules {
        require(&ctx.layout.explain_dir(r.rule), "run `stresslrp explain` first with the same rules")?;
    }
    let all_features = FeatureSet::new(&[Feature::F0, Feature::F1, Feature::F2, Feature::F3])?;

    let mut mu_rows = Vec::new();
    let mut mu_means = Vec::new();
    let mut feature_rows = Vec::new();
    let mut residual_rows = Vec::new();
    let mut residual_means = Vec::new();
    for rc in &rules {
        let rule = rc.rule;
        let loaded = samples
            .iter()
            .map(|s| load_explained(ctx, rule, s, tracks.as_deref()))
            .collect::<Result<Vec<_>>>()?;

        let mut mus: Vec<SampleMu> = Vec::new();
        for (s, l) in samples.iter().zip(&loaded) {
            match region_mu(s, &l.map, &l.spectrogram) {
                Ok(m) => mus.push(m),
                Err(e @ (Error::UndefinedRatio(_) | Error::DegenerateRegion(_))) => {
                    warn!("{} ({}): skipped for region ratios: {e}", s.source_id, rule.as_str())
                }
                Err(e) => return Err(e),
            }
        }
        for m in &mus {
            let mut row = vec![rule.as_str().to_string(), m.source_id.clone()];
            row.extend(m.mu.iter().map(|&v| fmt(v)));
            mu_rows.push(row);
        }
        mu_means.push((rule, mean_mu(&mus), mus.len()));

        let with_tracks: Vec<(&Sample, &Loaded, &FeatureTrack)> =
            samples.iter().zip(&loaded).filter_map(|(s, l)| l.track.as_ref().map(|t| (s, l, t))).collect();
        if with_tracks.is_empty() {
            continue;
        }
        let items: Vec<AnalysisItem<'_>> = with_tracks
            .iter()
            .map(|(_, l, t)| AnalysisItem { map: &l.map, spectrogram: &l.spectrogram, track: t, region: &l.region })
            .collect();
        let scores = rank_feature_subsets(&items, ctx.cfg.analysis.permutations, ctx.cfg.seed)?;
        for (rank, s) in scores.iter().enumerate() {
            feature_rows.push(vec![
                rule.as_str().into(),
                (rank + 1).to_string(),
                s.subset.to_string(),
                fmt(s.mean_r),
                fmt(s.mean_p),
                s.n.to_string(),
                s.skipped.to_string(),
            ]);
        }

        let mut bands: Vec<ResidualBands> = Vec::new();
        for (s, l, t) in &with_tracks {
            let combined = feature_heatmap(t, all_features, &l.spectrogram)?;
            let b = residual_distribution(&l.map, &combined, t, &l.region, ctx.cfg.analysis.tau, &l.spectrogram.geometry)?;
            let mut row = vec![rule.as_str().to_string(), s.source_id.clone()];
            row.extend(b.fractions.iter().map(|&v| fmt(v)));
            row.push(fmt(b.mass));
            row.push(b.cells.to_string());
            residual_rows.push(row);
            if b.is_empty() {
                warn!("{} ({}): no residual relevance", s.source_id, rule.as_str());
            } else {
                bands.push(b);
            }
        }
        residual_means.push((rule, bands));
    }

    let dir = ctx.layout.analysis_dir();
    let mut header = vec!["rule", "source_id"];
    header.extend(RegionTag::ALL.iter().map(|t| t.as_str()));
    write_table(&dir.join("mu_samples.csv"), &header, &mu_rows)?;

    let mut header: Vec<String> = vec!["region".into()];
    header.extend(mu_means.iter().map(|(r, _, _)| r.as_str().to_string()));
    let mut table: Vec<Vec<String>> = RegionTag::ALL
        .iter()
        .enumerate()
        .map(|(k, tag)| {
            let mut row = vec![tag.as_str().to_string()];
            row.extend(mu_means.iter().map(|(_, m, _)| m.map_or(String::new(), |m| fmt(m[k]))));
            row
        })
        .collect();
    let mut n_row = vec!["n_samples".to_string()];
    n_row.extend(mu_means.iter().map(|(_, _, n)| n.to_string()));
    table.push(n_row);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(&dir.join("mu.csv"), &header_refs, &table)?;

    if tracks.is_some() {
        write_table(
            &dir.join("features.csv"),
            &["rule", "rank", "subset", "mean_r", "mean_p", "n", "skipped"],
            &feature_rows,
        )?;
        let mut header = vec!["rule", "source_id"];
        header.extend(BAND_NAMES);
        header.extend(["mass", "cells"]);
        write_table(&dir.join("residual_samples.csv"), &header, &residual_rows)?;
        let mut rows = Vec::new();
        for (rule, bands) in &residual_means {
            for (k, name) in BAND_NAMES.iter().enumerate() {
                let mean = if bands.is_empty() {
                    String::new()
                } else {
                    fmt(bands.iter().map(|b| b.fractions[k]).sum::<f64>() / bands.len() as f64)
                };
                rows.push(vec![rule.as_str().into(), name.to_string(), mean, bands.len().to_string()]);
            }
        }
        write_table(&dir.join("residual.csv"), &["rule", "band", "mean_fraction", "n_samples"], &rows)?;
    }
    info!("analysis tables written to {}", dir.display());
    Ok(())
}

pub fn report(ctx: &Ctx) -> Result<()> {
    let split = ctx.ingested()?;
    let all: Vec<Sample> = SplitName::ALL.iter().flat_map(|&n| split.get(n).iter().cloned()).collect();
    let stats = vowel_ratio_stats(&all)?;
    let mut rows = Vec::new();
    for (measure, a, b, ga, gb) in [
        (
            "amplitude_ratio",
            stats.amplitude_ratios(Stress::Initial),
            stats.amplitude_ratios(Stress::Final),
            (stats.initial.amplitude_mean, stats.initial.amplitude_sd),
            (stats.final_stress.amplitude_mean, stats.final_stress.amplitude_sd),
        ),
        (
            "duration_ratio",
            stats.duration_ratios(Stress::Initial),
            stats.duration_ratios(Stress::Final),
            (stats.initial.duration_mean, stats.initial.duration_sd),
            (stats.final_stress.duration_mean, stats.final_stress.duration_sd),
        ),
    ] {
        if a.is_empty() || b.is_empty() {
            warn!("{measure}: one stress group is empty, no interval");
            continue;
        }
        let ci = bootstrap_mean_diff(&a, &b, 1000, 0.95, ctx.cfg.seed)?;
        rows.push(vec![
            measure.into(),
            a.len().to_string(),
            fmt(ga.0),
            fmt(ga.1),
            b.len().to_string(),
            fmt(gb.0),
            fmt(gb.1),
            fmt(ci.mean_diff),
            fmt(ci.ci_low),
            fmt(ci.ci_high),
        ]);
    }
    let dir = ctx.layout.report_dir();
    let ratio_path = dir.join("ratio_stats.csv");
    write_table(
        &ratio_path,
        &[
            "measure",
            "n_initial",
            "initial_mean",
            "initial_sd",
            "n_final",
            "final_mean",
            "final_sd",
            "mean_diff",
            "ci_low",
            "ci_high",
        ],
        &rows,
    )?;

    let analysis = ctx.layout.analysis_dir();
    let sections = [
        ("Vowel ratios by stress group", ratio_path),
        ("Accuracy", ctx.layout.accuracy()),
        ("Relevance inside regions", analysis.join("mu.csv")),
        ("Feature subsets", analysis.join("features.csv")),
        ("Residual relevance by band", analysis.join("residual.csv")),
    ];
    let mut md = String::from("# stresslrp report\n");
    for (title, path) in sections {
        if path.exists() {
            md.push_str(&format!("\n## {title}\n\n"));
            md.push_str(&markdown_table(&path)?);
        } else {
            md.push_str(&format!("\n## {title}\n\nnot available ({} missing)\n", path.display()));
        }
    }
    let out = dir.join("report.md");
    fs::write(&out, md).map_err(|e| io_err(&out, e))?;
    info!("report written to {}", out.display());
    Ok(())
}

fn markdown_table(path: &Path) -> Result<String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| csv_err(path, e))?.iter().map(String::from).collect();
    let mut out = format!("| {} |\n|{}\n", header.join(" | "), "---|".repeat(header.len()));
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        out.push_str(&format!("| {} |\n", rec.iter().collect::<Vec<_>>().join(" | ")));
    }
    Ok(out)
}
