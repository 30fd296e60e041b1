//! Command implementations. Each stage is a function over in-memory data
//! plus a thin wrapper that reads and writes the files in the output
//! directory, so `pipeline` and the single-stage commands emit identical
//! bytes.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use soundprofile_core::analysis::{auto_region, format_regions, parse_regions, Region};
use soundprofile_core::corpus::{
    decode_wav, extract_middle_segment, load_manifest, SongRecord, ANALYSIS_SECONDS,
};
use soundprofile_core::gonio::{gonio_feature, GonioConfig};
use soundprofile_core::mfcc::{build_filterbank_for_frame, mfcc_feature, MfccConfig};
use soundprofile_core::report::{
    export_features, parse_features, render_map_html, render_map_svg, stats_report, Dot,
    ExtractionSettings, FeatureRow, MapScene, ProjectedSong, StatsReport,
};
use soundprofile_core::som::{
    best_matching_unit, quantization_error, train_som, u_matrix, CellCoord, SomConfig, SomModel,
};
use soundprofile_core::{FeatureKind, FeatureVector};

use crate::args::{ExtractArgs, Grid, PipelineArgs, ProjectArgs, RenderArgs, StatsArgs, TrainArgs};
use crate::error::{CliError, CliResult};

/// File names inside the output directory.
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub dir: PathBuf,
    pub kind: FeatureKind,
}

impl OutputPaths {
    pub fn new(dir: impl Into<PathBuf>, kind: FeatureKind) -> Self {
        Self {
            dir: dir.into(),
            kind,
        }
    }

    fn file(&self, stem: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{stem}_{}.{ext}", self.kind))
    }

    pub fn features(&self) -> PathBuf {
        self.file("features", "csv")
    }

    pub fn features_meta(&self) -> PathBuf {
        self.file("features", "meta.json")
    }

    pub fn model(&self) -> PathBuf {
        self.file("model", "json")
    }

    pub fn bmus(&self) -> PathBuf {
        self.file("bmus", "csv")
    }

    pub fn regions(&self) -> PathBuf {
        self.file("regions", "txt")
    }

    pub fn stats_json(&self) -> PathBuf {
        self.file("stats", "json")
    }

    pub fn stats_text(&self) -> PathBuf {
        self.file("stats", "txt")
    }

    pub fn map_svg(&self) -> PathBuf {
        self.file("map", "svg")
    }

    pub fn map_html(&self) -> PathBuf {
        self.file("map", "html")
    }
}

/// Sidecar metadata of a feature table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub feature_kind: FeatureKind,
    pub settings: ExtractionSettings,
    pub songs: Vec<SongInfo>,
    pub skipped: Vec<SkippedSong>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SongInfo {
    pub id: String,
    pub sample_rate: u32,
    pub duration_seconds: f64,
    pub segment_offset_seconds: f64,
    pub segment_seconds: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedSong {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Deserialize)]
struct MetaKind {
    feature_kind: FeatureKind,
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::write(parent, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| CliError::write(path, e))
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Internal(format!("serialization failed: {e}")))
}

/// Features of one song for each requested kind, plus segment details.
fn extract_song(
    record: &SongRecord,
    kinds: &[FeatureKind],
) -> soundprofile_core::Result<(Vec<FeatureVector>, SongInfo)> {
    let signal = decode_wav(&record.path)?;
    let segment = extract_middle_segment(&signal, ANALYSIS_SECONDS)?;
    let info = SongInfo {
        id: record.id.clone(),
        sample_rate: signal.sample_rate,
        duration_seconds: signal.duration_secs(),
        segment_offset_seconds: segment.source_offset,
        segment_seconds: segment.len() as f64 / f64::from(signal.sample_rate),
        truncated: segment.truncated,
    };
    let mut out = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let feature = match kind {
            FeatureKind::Gonio => {
                gonio_feature(&segment, &GonioConfig::default())?.into_feature_vector(&record.id)
            }
            FeatureKind::Mfcc => {
                let cfg = MfccConfig::default();
                let bank = build_filterbank_for_frame(
                    cfg.n_filters,
                    f64::from(signal.sample_rate),
                    cfg.frame_len,
                )?;
                mfcc_feature(&segment, &bank, &cfg)?.into_feature_vector(&record.id)
            }
        };
        out.push(feature);
    }
    Ok((out, info))
}

/// Feature tables for several kinds from one pass over the audio.
pub struct Extraction {
    pub kinds: Vec<FeatureKind>,
    /// One list per kind, in manifest order.
    pub tables: Vec<Vec<(SongRecord, FeatureVector)>>,
    pub songs: Vec<SongInfo>,
    pub skipped: Vec<SkippedSong>,
}

impl Extraction {
    pub fn meta(&self, kind: FeatureKind) -> FeatureMeta {
        FeatureMeta {
            feature_kind: kind,
            settings: ExtractionSettings::new(
                kind,
                &GonioConfig::default(),
                &MfccConfig::default(),
            ),
            songs: self.songs.clone(),
            skipped: self.skipped.clone(),
        }
    }

    pub fn write(&self, out: &Path) -> CliResult<()> {
        for (kind, table) in self.kinds.iter().zip(&self.tables) {
            let paths = OutputPaths::new(out, *kind);
            write_file(&paths.features(), &export_features(table)?)?;
            write_file(&paths.features_meta(), &to_json(&self.meta(*kind))?)?;
        }
        Ok(())
    }
}

/// Songs run in parallel; results keep manifest order. Every failure is
/// reported on stderr; unless `skip_bad` is set any failure fails the run.
pub fn extract(
    records: &[SongRecord],
    kinds: &[FeatureKind],
    skip_bad: bool,
) -> CliResult<Extraction> {
    let results: Vec<_> = records.par_iter().map(|r| extract_song(r, kinds)).collect();
    let mut extraction = Extraction {
        kinds: kinds.to_vec(),
        tables: vec![Vec::new(); kinds.len()],
        songs: Vec::new(),
        skipped: Vec::new(),
    };
    for (record, result) in records.iter().zip(results) {
        match result {
            Ok((features, info)) => {
                for (table, f) in extraction.tables.iter_mut().zip(features) {
                    table.push((record.clone(), f));
                }
                extraction.songs.push(info);
            }
            Err(e) => {
                let label = if skip_bad { "skipped" } else { "error" };
                eprintln!("{label}: song `{}`: {e}", record.id);
                extraction.skipped.push(SkippedSong {
                    id: record.id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    if !extraction.skipped.is_empty() && !skip_bad {
        return Err(CliError::Data(format!(
            "{} of {} songs failed: {}",
            extraction.skipped.len(),
            records.len(),
            extraction
                .skipped
                .iter()
                .map(|s| s.id.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    if extraction.songs.is_empty() && !records.is_empty() {
        return Err(CliError::Data("no song could be processed".into()));
    }
    Ok(extraction)
}

pub fn cmd_extract(args: &ExtractArgs) -> CliResult<()> {
    let records = load_manifest(&args.manifest)?;
    let kind = FeatureKind::from(args.feature);
    let extraction = extract(&records, &[kind], args.skip_bad)?;
    extraction.write(&args.out.out)?;
    eprintln!(
        "extracted {kind} features for {} songs -> {}",
        extraction.songs.len(),
        OutputPaths::new(&args.out.out, kind).features().display()
    );
    Ok(())
}

/// Reads a feature table, checking its sidecar metadata (when present)
/// against the expected kind.
pub fn load_features(path: &Path, kind: FeatureKind) -> CliResult<Vec<FeatureRow>> {
    let text = read_file(path)?;
    let meta_path = sidecar(path);
    if meta_path.exists() {
        let meta: MetaKind = serde_json::from_str(&read_file(&meta_path)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", meta_path.display())))?;
        if meta.feature_kind != kind {
            return Err(soundprofile_core::Error::FeatureKindMismatch {
                expected: kind.to_string(),
                found: meta.feature_kind.to_string(),
            }
            .into());
        }
    }
    Ok(parse_features(&text)?)
}

fn sidecar(csv: &Path) -> PathBuf {
    let name = csv
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = name.strip_suffix(".csv").unwrap_or(&name);
    csv.with_file_name(format!("{stem}.meta.json"))
}

pub fn load_model(path: &Path, kind: FeatureKind) -> CliResult<SomModel> {
    let model = SomModel::from_json(&read_file(path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if model.feature_kind != kind {
        return Err(soundprofile_core::Error::FeatureKindMismatch {
            expected: kind.to_string(),
            found: model.feature_kind.to_string(),
        }
        .into());
    }
    Ok(model)
}

pub fn som_config(grid: Grid, epochs: usize, seed: u64) -> CliResult<SomConfig> {
    let config = SomConfig {
        epochs,
        seed,
        ..SomConfig::with_grid(grid.rows, grid.cols)
    };
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

/// Trains on the producer-train rows; returns the model and its
/// quantization error on those rows.
pub fn train(
    kind: FeatureKind,
    rows: &[FeatureRow],
    config: &SomConfig,
) -> CliResult<(SomModel, f64, usize)> {
    let training: Vec<Vec<f64>> = rows
        .iter()
        .filter(|r| r.role.is_training())
        .map(|r| r.values.clone())
        .collect();
    if training.is_empty() {
        return Err(CliError::Data(
            "feature table has no producer-train rows".into(),
        ));
    }
    let model = train_som(&training, kind, config)?;
    let qe = quantization_error(&model, &training)?;
    Ok((model, qe, training.len()))
}

fn report_training(kind: FeatureKind, config: &SomConfig, n: usize, qe: f64) {
    println!(
        "trained {kind} map {}x{} on {n} songs, {} epochs, quantization error {qe:.6}",
        config.rows, config.cols, config.epochs
    );
}

pub fn cmd_train(args: &TrainArgs, seed: u64) -> CliResult<()> {
    let kind = FeatureKind::from(args.feature);
    let paths = OutputPaths::new(&args.out.out, kind);
    let config = som_config(args.som.grid, args.som.epochs, seed)?;
    let rows = load_features(
        &args.features.clone().unwrap_or_else(|| paths.features()),
        kind,
    )?;
    let (model, qe, n) = train(kind, &rows, &config)?;
    write_file(&paths.model(), &(model.to_json()? + "\n"))?;
    report_training(kind, &config, n, qe);
    Ok(())
}

/// `(id, cell)` for every non-training row, and training rows on request.
pub fn project(
    model: &SomModel,
    rows: &[FeatureRow],
    include_training: bool,
) -> CliResult<Vec<(String, CellCoord)>> {
    rows.iter()
        .filter(|r| include_training || !r.role.is_training())
        .map(|r| {
            best_matching_unit(model, &r.values)
                .map(|c| (r.id.clone(), c))
                .map_err(|e| CliError::Data(format!("song `{}`: {e}", r.id)))
        })
        .collect()
}

pub fn write_bmus(bmus: &[(String, CellCoord)]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| CliError::Internal(e.to_string());
    w.write_record(["id", "row", "col"]).map_err(internal)?;
    for (id, c) in bmus {
        w.write_record([id.as_str(), &c.row.to_string(), &c.col.to_string()])
            .map_err(internal)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))
}

pub fn parse_bmus(text: &str) -> CliResult<Vec<(String, CellCoord)>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let bad = |m: String| CliError::Data(format!("BMU table: {m}"));
    let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["id", "row", "col"] {
        return Err(bad("header must be `id,row,col`".into()));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |j: usize| {
            rec[j]
                .parse::<usize>()
                .map_err(|_| bad(format!("line {}: `{}` is not a cell index", i + 2, &rec[j])))
        };
        out.push((rec[0].to_string(), CellCoord::new(num(1)?, num(2)?)));
    }
    Ok(out)
}

pub fn cmd_project(args: &ProjectArgs) -> CliResult<()> {
    let kind = FeatureKind::from(args.feature);
    let paths = OutputPaths::new(&args.out.out, kind);
    let model = load_model(&args.model.clone().unwrap_or_else(|| paths.model()), kind)?;
    let rows = load_features(
        &args.features.clone().unwrap_or_else(|| paths.features()),
        kind,
    )?;
    let bmus = project(&model, &rows, args.include_training)?;
    write_file(&paths.bmus(), &write_bmus(&bmus)?)?;
    eprintln!(
        "projected {} songs -> {}",
        bmus.len(),
        paths.bmus().display()
    );
    Ok(())
}

/// One region per group around the BMUs of the group's training songs.
pub fn auto_regions(model: &SomModel, rows: &[FeatureRow]) -> CliResult<Vec<Region>> {
    let mut cells: BTreeMap<&str, Vec<CellCoord>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.role.is_training()) {
        cells
            .entry(&r.group)
            .or_default()
            .push(best_matching_unit(model, &r.values)?);
    }
    cells
        .into_iter()
        .map(|(group, cells)| {
            Ok(auto_region(
                group,
                group,
                &cells,
                model.rows(),
                model.cols(),
            )?)
        })
        .collect()
}

fn projected_songs(
    rows: &[FeatureRow],
    bmus: &[(String, CellCoord)],
) -> CliResult<Vec<ProjectedSong>> {
    let by_id: HashMap<&str, &FeatureRow> = rows.iter().map(|r| (r.id.as_str(), r)).collect();
    bmus.iter()
        .map(|(id, cell)| {
            let r = by_id.get(id.as_str()).ok_or_else(|| {
                CliError::Data(format!(
                    "BMU table names song `{id}` missing from the feature table"
                ))
            })?;
            Ok(ProjectedSong {
                id: id.clone(),
                performer: r.performer.clone(),
                producer: r.producer.clone(),
                role: r.role,
                group: r.group.clone(),
                cell: *cell,
            })
        })
        .collect()
}

pub fn stats(
    model: &SomModel,
    rows: &[FeatureRow],
    bmus: &[(String, CellCoord)],
    regions: &[Region],
) -> CliResult<StatsReport> {
    let songs = projected_songs(rows, bmus)?;
    Ok(stats_report(
        model.feature_kind,
        model.rows(),
        model.cols(),
        &songs,
        regions,
    )?)
}

fn write_stats(paths: &OutputPaths, report: &StatsReport) -> CliResult<()> {
    write_file(&paths.stats_json(), &(report.to_json()? + "\n"))?;
    let text = report.to_text();
    write_file(&paths.stats_text(), &text)?;
    print!("{text}");
    Ok(())
}

fn load_regions(path: &Path) -> CliResult<Vec<Region>> {
    parse_regions(&read_file(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn cmd_stats(args: &StatsArgs) -> CliResult<()> {
    let kind = FeatureKind::from(args.feature);
    let paths = OutputPaths::new(&args.out.out, kind);
    let model = load_model(&args.model.clone().unwrap_or_else(|| paths.model()), kind)?;
    let rows = load_features(
        &args.features.clone().unwrap_or_else(|| paths.features()),
        kind,
    )?;
    let bmus = parse_bmus(&read_file(
        &args.bmus.clone().unwrap_or_else(|| paths.bmus()),
    )?)?;
    let regions = match &args.regions {
        Some(p) => load_regions(p)?,
        None => {
            let regions = auto_regions(&model, &rows)?;
            write_file(&paths.regions(), &format_regions(&regions))?;
            regions
        }
    };
    let report = stats(&model, &rows, &bmus, &regions)?;
    write_stats(&paths, &report)
}

pub fn scene(
    model: &SomModel,
    rows: &[FeatureRow],
    bmus: &[(String, CellCoord)],
    regions: Vec<Region>,
    seed: u64,
) -> CliResult<MapScene> {
    let songs = projected_songs(rows, bmus)?;
    let dots = songs
        .into_iter()
        .map(|s| Dot {
            cell: s.cell,
            group: s.group,
            label: s.id,
            hollow: !s.role.is_training(),
        })
        .collect();
    let title = format!(
        "{} map {}x{}",
        model.feature_kind,
        model.rows(),
        model.cols()
    );
    let scene = MapScene::new(title, u_matrix(model), dots, regions, seed);
    scene.validate()?;
    Ok(scene)
}

fn write_maps(paths: &OutputPaths, scene: &MapScene) -> CliResult<()> {
    write_file(&paths.map_svg(), &render_map_svg(scene)?)?;
    write_file(&paths.map_html(), &render_map_html(scene)?)
}

pub fn cmd_render(args: &RenderArgs, seed: u64) -> CliResult<()> {
    let kind = FeatureKind::from(args.feature);
    let paths = OutputPaths::new(&args.out.out, kind);
    let model = load_model(&args.model.clone().unwrap_or_else(|| paths.model()), kind)?;
    let rows = load_features(
        &args.features.clone().unwrap_or_else(|| paths.features()),
        kind,
    )?;
    let bmus = parse_bmus(&read_file(
        &args.bmus.clone().unwrap_or_else(|| paths.bmus()),
    )?)?;
    let regions = match &args.regions {
        Some(p) => load_regions(p)?,
        None => Vec::new(),
    };
    for r in &regions {
        r.check_within_grid(model.rows(), model.cols())?;
    }
    write_maps(&paths, &scene(&model, &rows, &bmus, regions, seed)?)?;
    eprintln!("rendered {}", paths.map_svg().display());
    Ok(())
}

pub fn cmd_pipeline(args: &PipelineArgs, seed: u64) -> CliResult<()> {
    let config = som_config(args.som.grid, args.som.epochs, seed)?;
    let kinds: Vec<FeatureKind> = match args.feature {
        Some(k) => vec![k.into()],
        None => FeatureKind::ALL.to_vec(),
    };
    let records = load_manifest(&args.manifest)?;
    let extraction = extract(&records, &kinds, args.skip_bad)?;
    extraction.write(&args.out.out)?;
    eprintln!("extracted features for {} songs", extraction.songs.len());

    for (kind, table) in kinds.iter().copied().zip(&extraction.tables) {
        let paths = OutputPaths::new(&args.out.out, kind);
        let rows: Vec<FeatureRow> = table
            .iter()
            .map(|(r, f)| FeatureRow::from_record(r, f))
            .collect();
        let (model, qe, n) = train(kind, &rows, &config)?;
        write_file(&paths.model(), &(model.to_json()? + "\n"))?;
        report_training(kind, &config, n, qe);

        let bmus = project(&model, &rows, true)?;
        write_file(&paths.bmus(), &write_bmus(&bmus)?)?;

        let regions = match &args.regions {
            Some(dir) => load_regions(&dir.join(format!("regions_{kind}.txt")))?,
            None => {
                let regions = auto_regions(&model, &rows)?;
                write_file(&paths.regions(), &format_regions(&regions))?;
                regions
            }
        };
        let report = stats(&model, &rows, &bmus, &regions)?;
        write_stats(&paths, &report)?;
        write_maps(&paths, &scene(&model, &rows, &bmus, regions, seed)?)?;
    }
    eprintln!("pipeline outputs in {}", args.out.out.display());
    Ok(())
}
