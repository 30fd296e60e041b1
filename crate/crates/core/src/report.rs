//! Feature tables, statistics reports and SVG map renderings.
//!
//! Everything here is a pure function of its inputs: no timestamps, no
//! locale-dependent formatting and no hash-map iteration order leaks into the
//! output, so identical inputs give byte-identical documents.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    chi2_gof, containment_count, format_p_value, region_area_fraction, GofResult, Region,
};
use crate::corpus::{Role, SongRecord, ANALYSIS_SECONDS};
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureVector, FEATURE_DIM};
use crate::gonio::{GonioConfig, GRID_SPAN};
use crate::mfcc::MfccConfig;
use crate::som::{CellCoord, GridValues};

const META_COLUMNS: [&str; 5] = ["id", "performer", "producer", "role", "group"];

/// One parsed row of a feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub performer: String,
    pub producer: String,
    pub role: Role,
    pub group: String,
    pub values: Vec<f64>,
}

impl FeatureRow {
    pub fn from_record(record: &SongRecord, feature: &FeatureVector) -> Self {
        Self {
            id: record.id.clone(),
            performer: record.performer.clone(),
            producer: record.producer.clone(),
            role: record.role,
            group: record.group.clone(),
            values: feature.values.clone(),
        }
    }
}

/// Writes the feature CSV: `id,performer,producer,role,group,f0..f5`, row
/// order equal to input order, floats in shortest round-trip form.
pub fn export_features(records: &[(SongRecord, FeatureVector)]) -> Result<String> {
    if let Some((_, first)) = records.first() {
        if let Some((_, odd)) = records.iter().find(|(_, f)| f.kind != first.kind) {
            return Err(Error::FeatureKindMismatch {
                expected: first.kind.to_string(),
                found: odd.kind.to_string(),
            });
        }
    }
    let rows: Vec<FeatureRow> = records
        .iter()
        .map(|(r, f)| FeatureRow::from_record(r, f))
        .collect();
    write_feature_rows(&rows)
}

pub fn write_feature_rows(rows: &[FeatureRow]) -> Result<String> {
    let dim = rows.first().map_or(FEATURE_DIM, |r| r.values.len());
    if let Some(bad) = rows.iter().find(|r| r.values.len() != dim) {
        return Err(Error::FeatureTable(format!(
            "row `{}` has {} values, expected {dim}",
            bad.id,
            bad.values.len()
        )));
    }
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = META_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((0..dim).map(|i| format!("f{i}")))
        .collect();
    wtr.write_record(&header).map_err(table_error)?;
    for r in rows {
        let mut fields = vec![
            r.id.clone(),
            r.performer.clone(),
            r.producer.clone(),
            r.role.to_string(),
            r.group.clone(),
        ];
        fields.extend(r.values.iter().map(|v| v.to_string()));
        wtr.write_record(&fields).map_err(table_error)?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::FeatureTable(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::FeatureTable(e.to_string()))
}

fn table_error(e: csv::Error) -> Error {
    Error::FeatureTable(e.to_string())
}

/// Parses a feature CSV written by [`export_features`].
pub fn parse_features(text: &str) -> Result<Vec<FeatureRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(table_error)?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() <= META_COLUMNS.len()
        || header[..META_COLUMNS.len()] != META_COLUMNS
        || header[META_COLUMNS.len()..]
            .iter()
            .enumerate()
            .any(|(i, h)| *h != format!("f{i}"))
    {
        return Err(Error::FeatureTable(format!(
            "unexpected header `{}`",
            header.join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(table_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let role = rec[3]
            .parse::<Role>()
            .map_err(|v| Error::FeatureTable(format!("line {line}: unknown role `{v}`")))?;
        let values = (META_COLUMNS.len()..rec.len())
            .map(|i| {
                rec[i].parse::<f64>().map_err(|_| {
                    Error::FeatureTable(format!("line {line}: bad number `{}`", &rec[i]))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(FeatureRow {
            id: rec[0].to_string(),
            performer: rec[1].to_string(),
            producer: rec[2].to_string(),
            role,
            group: rec[4].to_string(),
            values,
        });
    }
    Ok(rows)
}

/// Every processing choice in effect during feature extraction, written next
/// to each feature table so outputs are self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSettings {
    pub feature_kind: FeatureKind,
    pub segment_seconds: f64,
    pub segment_placement: String,
    pub short_songs: String,
    pub sample_scaling: String,
    pub gonio: GonioSettings,
    pub mfcc: MfccSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GonioSettings {
    pub bands_hz: Vec<(f64, f64)>,
    pub filter: String,
    pub filter_order: usize,
    pub rotation: String,
    pub grid: usize,
    pub grid_span: f64,
    pub cell_edges: String,
    pub correlation: String,
    pub degenerate_correlation: String,
    pub vector_layout: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfccSettings {
    pub downmix: String,
    pub frame_len: usize,
    pub hop: usize,
    pub window: String,
    pub spectrum: String,
    pub n_filters: usize,
    pub mel_scale: String,
    pub filter_shape: String,
    pub log: String,
    pub log_floor: f64,
    pub dct: String,
    pub coefficients: String,
    pub aggregation: String,
}

impl ExtractionSettings {
    pub fn new(kind: FeatureKind, gonio: &GonioConfig, mfcc: &MfccConfig) -> Self {
        Self {
            feature_kind: kind,
            segment_seconds: ANALYSIS_SECONDS,
            segment_placement: "centered; start = floor((total - window) / 2) samples".into(),
            short_songs: "analyzed whole and flagged truncated".into(),
            sample_scaling: "integer PCM divided by 2^(bits-1); float clamped to [-1, 1]".into(),
            gonio: GonioSettings {
                bands_hz: gonio.bands.clone(),
                filter: "butterworth band-pass, bilinear transform with prewarped edges, causal single pass, zero initial state".into(),
                filter_order: gonio.filter_order,
                rotation: "m = (L+R)/sqrt2, s = (R-L)/sqrt2".into(),
                grid: gonio.grid,
                grid_span: GRID_SPAN,
                cell_edges: "half-open [lo, hi), outermost closed; overshoot clamped to border cells".into(),
                correlation: "pearson over the whole filtered segment".into(),
                degenerate_correlation: "both channels constant -> 1.0; one constant -> 0.0".into(),
                vector_layout: "boxes_low, boxes_mid, boxes_high, corr_low, corr_mid, corr_high".into(),
            },
            mfcc: MfccSettings {
                downmix: "(L+R)/2".into(),
                frame_len: mfcc.frame_len,
                hop: mfcc.hop,
                window: "periodic hann".into(),
                spectrum: "magnitude".into(),
                n_filters: mfcc.n_filters,
                mel_scale: "2595*log10(1 + f/700)".into(),
                filter_shape: "triangular, peak 1, equally spaced in mel from 0 Hz to Nyquist".into(),
                log: "natural log of (energy + floor)".into(),
                log_floor: mfcc.log_floor,
                dct: "orthonormal DCT-II".into(),
                coefficients: format!("c{}..c{}", mfcc.coeff_offset, mfcc.coeff_offset + mfcc.n_coeffs - 1),
                aggregation: "mean over frames".into(),
            },
        }
    }
}

/// A song with its best matching unit, as consumed by the statistics stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedSong {
    pub id: String,
    pub performer: String,
    pub producer: String,
    pub role: Role,
    pub group: String,
    pub cell: CellCoord,
}

/// What a statistics row aggregates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    /// The producer's own training songs: how much of the profile the region captures.
    Training,
    /// Collaborations of one rapper with the region's producer.
    Rapper,
    /// All collaborations with the region's producer.
    Pooled,
    /// One rapper's self-produced songs tested against a producer region.
    SelfProduced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub scope: Scope,
    pub region: String,
    pub group: String,
    /// Rapper for `rapper` and `self-produced` rows.
    pub performer: Option<String>,
    #[serde(flatten)]
    pub result: GofResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub name: String,
    pub group: String,
    pub area_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub feature_kind: FeatureKind,
    pub rows_cols: (usize, usize),
    pub test: String,
    pub regions: Vec<RegionSummary>,
    pub rows: Vec<StatsRow>,
    pub notices: Vec<String>,
}

/// Goodness-of-fit rows for every region.
///
/// Collaboration songs are tested against the region whose group matches
/// their own, per rapper and pooled. Self-produced songs are tested against
/// every region. Groups with no songs, and regions covering none or all of
/// the map, are skipped with a notice.
pub fn stats_report(
    kind: FeatureKind,
    rows: usize,
    cols: usize,
    songs: &[ProjectedSong],
    regions: &[Region],
) -> Result<StatsReport> {
    let mut report = StatsReport {
        feature_kind: kind,
        rows_cols: (rows, cols),
        test: "pearson chi-squared goodness of fit, two cells, df = 1, no continuity correction"
            .into(),
        regions: Vec::new(),
        rows: Vec::new(),
        notices: Vec::new(),
    };
    if let Some(bad) = songs
        .iter()
        .find(|s| s.cell.row >= rows || s.cell.col >= cols)
    {
        return Err(Error::InvalidArgument(format!(
            "song `{}` projects to ({}, {}) outside the {rows}x{cols} map",
            bad.id, bad.cell.row, bad.cell.col
        )));
    }

    let mut self_produced: BTreeMap<&str, Vec<CellCoord>> = BTreeMap::new();
    for s in songs.iter().filter(|s| s.role == Role::RapperSelfproduced) {
        self_produced.entry(&s.performer).or_default().push(s.cell);
    }

    for region in regions {
        region.check_within_grid(rows, cols)?;
        let p = region_area_fraction(region, rows, cols)?;
        report.regions.push(RegionSummary {
            name: region.name.clone(),
            group: region.group.clone(),
            area_fraction: p,
        });
        if !(p > 0.0 && p < 1.0) {
            report.notices.push(format!(
                "region `{}` covers {:.1}% of the map; no test is possible",
                region.name,
                p * 100.0
            ));
            continue;
        }

        let mut push = |scope: Scope,
                        performer: Option<&str>,
                        cells: &[CellCoord],
                        notices: &mut Vec<String>| {
            let label = performer.map_or(String::new(), |p| format!(" / {p}"));
            if cells.is_empty() {
                notices.push(format!(
                    "region `{}`{label} ({scope:?}): no songs, skipped",
                    region.name
                ));
                return Ok(());
            }
            let k = containment_count(cells, region) as u64;
            let result = chi2_gof(k, cells.len() as u64, p)?;
            report.rows.push(StatsRow {
                scope,
                region: region.name.clone(),
                group: region.group.clone(),
                performer: performer.map(str::to_string),
                result,
            });
            Ok::<(), Error>(())
        };

        let own = |role: Role| {
            songs
                .iter()
                .filter(move |s| s.role == role && s.group == region.group)
        };
        let training: Vec<CellCoord> = own(Role::ProducerTrain).map(|s| s.cell).collect();
        push(Scope::Training, None, &training, &mut report.notices)?;

        let mut by_rapper: BTreeMap<&str, Vec<CellCoord>> = BTreeMap::new();
        for s in own(Role::RapperCollab) {
            by_rapper.entry(&s.performer).or_default().push(s.cell);
        }
        for (rapper, cells) in &by_rapper {
            push(Scope::Rapper, Some(rapper), cells, &mut report.notices)?;
        }
        let pooled: Vec<CellCoord> = by_rapper.values().flatten().copied().collect();
        push(Scope::Pooled, None, &pooled, &mut report.notices)?;

        for (rapper, cells) in &self_produced {
            push(
                Scope::SelfProduced,
                Some(rapper),
                cells,
                &mut report.notices,
            )?;
        }
    }
    Ok(report)
}

impl StatsReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Human-readable table of the same rows.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} map ({}x{}): {}",
            self.feature_kind, self.rows_cols.0, self.rows_cols.1, self.test
        );
        for r in &self.regions {
            let _ = writeln!(
                out,
                "region {} [{}]: {:.1}% of map",
                r.name,
                r.group,
                r.area_fraction * 100.0
            );
        }
        let _ = writeln!(
            out,
            "\n{:<14} {:<12} {:<18} {:>4} {:>4} {:>7} {:>9} {:>8}",
            "scope", "region", "performer", "k", "n", "p_exp", "chi2(1)", "p"
        );
        for row in &self.rows {
            let scope = serde_json::to_value(row.scope)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{:<14} {:<12} {:<18} {:>4} {:>4} {:>7.3} {:>9.3} {:>8}",
                scope,
                row.region,
                row.performer.as_deref().unwrap_or("-"),
                row.result.observed_in,
                row.result.total,
                row.result.expected_fraction,
                row.result.statistic,
                format_p_value(row.result.p_value)
            );
        }
        for n in &self.notices {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }
}

/// Fixed legend palette, assigned to groups in sorted order.
pub const PALETTE: [&str; 8] = [
    "#1f4fd1", "#d1321f", "#e0a100", "#2a9d4b", "#8e44ad", "#17a2b8", "#c2185b", "#6d4c41",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Dot {
    pub cell: CellCoord,
    pub group: String,
    pub label: String,
    /// Drawn as a ring instead of a filled disc (projected, not trained on).
    pub hollow: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapScene {
    pub title: String,
    pub background: GridValues,
    pub dots: Vec<Dot>,
    pub overlays: Vec<Region>,
    /// `(group, color)` pairs.
    pub legend: Vec<(String, String)>,
    pub jitter_seed: u64,
}

impl MapScene {
    /// Builds a scene, assigning palette colors to every group that appears
    /// among dots and overlays.
    pub fn new(
        title: impl Into<String>,
        background: GridValues,
        dots: Vec<Dot>,
        overlays: Vec<Region>,
        jitter_seed: u64,
    ) -> Self {
        let groups: std::collections::BTreeSet<&str> = dots
            .iter()
            .map(|d| d.group.as_str())
            .chain(overlays.iter().map(|r| r.group.as_str()))
            .collect();
        let legend = groups
            .into_iter()
            .enumerate()
            .map(|(i, g)| (g.to_string(), PALETTE[i % PALETTE.len()].to_string()))
            .collect();
        Self {
            title: title.into(),
            background,
            dots,
            overlays,
            legend,
            jitter_seed,
        }
    }

    fn color(&self, group: &str) -> Option<&str> {
        self.legend
            .iter()
            .find(|(g, _)| g == group)
            .map(|(_, c)| c.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        let (rows, cols) = (self.background.rows, self.background.cols);
        if self.background.values.len() != rows * cols {
            return Err(Error::InvalidArgument(
                "background size does not match grid".into(),
            ));
        }
        for d in &self.dots {
            if d.cell.row >= rows || d.cell.col >= cols {
                return Err(Error::InvalidArgument(format!(
                    "dot `{}` lies outside the grid",
                    d.label
                )));
            }
            if self.color(&d.group).is_none() {
                return Err(Error::InvalidArgument(format!(
                    "group `{}` has no legend entry",
                    d.group
                )));
            }
        }
        for r in &self.overlays {
            if self.color(&r.group).is_none() {
                return Err(Error::InvalidArgument(format!(
                    "group `{}` has no legend entry",
                    r.group
                )));
            }
        }
        Ok(())
    }
}

const CELL_PX: f64 = 20.0;
const MARGIN_PX: f64 = 10.0;
const LEGEND_PX: f64 = 140.0;

/// 64-bit FNV-1a.
fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    bytes.into_iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Offset in cell units within `[-0.3, 0.3]^2`, derived from the seed and label.
fn jitter(seed: u64, label: &str) -> (f64, f64) {
    let h = fnv1a(seed.to_le_bytes().into_iter().chain(label.bytes()));
    let u = (h >> 32) as f64 / f64::from(u32::MAX);
    let v = (h & 0xffff_ffff) as f64 / f64::from(u32::MAX);
    ((u - 0.5) * 0.6, (v - 0.5) * 0.6)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the scene as a standalone SVG 1.1 document.
///
/// Cells are shaded by U-matrix value normalized to the map's own range
/// (light = similar neighbors, dark = dissimilar), regions are translucent
/// polygons and songs are circles jittered deterministically inside their
/// cell.
pub fn render_map_svg(scene: &MapScene) -> Result<String> {
    scene.validate()?;
    let (rows, cols) = (scene.background.rows, scene.background.cols);
    let map_w = cols as f64 * CELL_PX;
    let map_h = rows as f64 * CELL_PX;
    let width = map_w + 2.0 * MARGIN_PX + LEGEND_PX;
    let height = map_h + 2.0 * MARGIN_PX + 20.0;
    let (ox, oy) = (MARGIN_PX, MARGIN_PX + 20.0);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#
    );
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(svg, "<title>{}</title>", escape(&scene.title));
    let _ = writeln!(
        svg,
        r#"<text x="{ox:.2}" y="{:.2}" font-family="sans-serif" font-size="13">{}</text>"#,
        MARGIN_PX + 12.0,
        escape(&scene.title)
    );

    let (lo, hi) = scene
        .background
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    let _ = writeln!(svg, r#"<g id="cells" stroke="none">"#);
    for r in 0..rows {
        for c in 0..cols {
            let v = scene.background.get(CellCoord::new(r, c));
            let t = if span > 0.0 { (v - lo) / span } else { 0.0 };
            let shade = (245.0 - t * 185.0).round() as u8;
            let _ = writeln!(
                svg,
                r##"<rect x="{:.2}" y="{:.2}" width="{CELL_PX:.2}" height="{CELL_PX:.2}" fill="#{shade:02x}{shade:02x}{shade:02x}"/>"##,
                ox + c as f64 * CELL_PX,
                oy + r as f64 * CELL_PX
            );
        }
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r#"<g id="regions">"#);
    for region in &scene.overlays {
        let color = scene.color(&region.group).unwrap_or("#000000");
        let points: Vec<String> = region
            .polygon
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", ox + x * CELL_PX, oy + y * CELL_PX))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.22" stroke="{color}" stroke-width="2"><title>{}</title></polygon>"#,
            points.join(" "),
            escape(&region.name)
        );
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r#"<g id="dots">"#);
    for dot in &scene.dots {
        let color = scene.color(&dot.group).unwrap_or("#000000");
        let (jx, jy) = jitter(scene.jitter_seed, &dot.label);
        let cx = ox + (dot.cell.col as f64 + 0.5 + jx) * CELL_PX;
        let cy = oy + (dot.cell.row as f64 + 0.5 + jy) * CELL_PX;
        let fill = if dot.hollow { "none" } else { color };
        let _ = writeln!(
            svg,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3.50" fill="{fill}" stroke="{color}" stroke-width="1.50"><title>{}</title></circle>"#,
            escape(&dot.label)
        );
    }
    let _ = writeln!(svg, "</g>");

    let lx = ox + map_w + 15.0;
    let _ = writeln!(
        svg,
        r#"<g id="legend" font-family="sans-serif" font-size="12">"#
    );
    for (i, (group, color)) in scene.legend.iter().enumerate() {
        let y = oy + 10.0 + i as f64 * 18.0;
        let _ = writeln!(
            svg,
            r#"<path d="M{lx:.2},{:.2}h10v10h-10z" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            y - 9.0,
            lx + 15.0,
            y,
            escape(group)
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}

/// The SVG embedded in a minimal HTML page.
pub fn render_map_html(scene: &MapScene) -> Result<String> {
    let svg = render_map_svg(scene)?;
    let body = svg
        .split_once("?>\n")
        .map_or(svg.as_str(), |(_, rest)| rest);
    Ok(format!(
        "<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>{}</title></head>\n<body>\n{body}</body>\n</html>\n",
        escape(&scene.title)
    ))
}
