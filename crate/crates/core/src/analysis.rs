//! Map regions and the chi-squared goodness-of-fit test.
//!
//! Regions are simple polygons in continuous map coordinates measured in cell
//! units: origin at the top-left corner, `x` = column, `y` = row. Cell
//! `(row, col)` belongs to a region when its center `(col + 0.5, row + 0.5)`
//! is inside or on the boundary of the polygon.
//!
//! Region files hold one region per line:
//!
//! ```text
//! # name, group, vertices
//! dre, dre, [(0,0),(12,0),(12,10),(0,10)]
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::som::CellCoord;

const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub group: String,
    pub polygon: Vec<(f64, f64)>,
}

impl Region {
    /// Builds a validated region: at least three vertices, finite
    /// coordinates, non-zero area, no self-intersections.
    pub fn new(
        name: impl Into<String>,
        group: impl Into<String>,
        polygon: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let region = Self {
            name: name.into(),
            group: group.into(),
            polygon,
        };
        region.validate()?;
        Ok(region)
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rect(
        name: impl Into<String>,
        group: impl Into<String>,
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
    ) -> Result<Self> {
        Self::new(name, group, vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
    }

    fn invalid(&self, reason: impl Into<String>) -> Error {
        Error::InvalidRegion {
            name: self.name.clone(),
            reason: reason.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.polygon.len();
        if n < 3 {
            return Err(self.invalid(format!("needs at least 3 vertices, has {n}")));
        }
        if self
            .polygon
            .iter()
            .any(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(self.invalid("non-finite vertex"));
        }
        if self.signed_area().abs() < EDGE_EPS {
            return Err(self.invalid("polygon has zero area"));
        }
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                let (a, b) = (self.polygon[i], self.polygon[(i + 1) % n]);
                let (c, d) = (self.polygon[j], self.polygon[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Err(self.invalid(format!("edges {i} and {j} intersect")));
                }
            }
        }
        Ok(())
    }

    /// Shoelace area, positive for counter-clockwise vertex order in a y-up frame.
    pub fn signed_area(&self) -> f64 {
        let n = self.polygon.len();
        (0..n)
            .map(|i| {
                let (x0, y0) = self.polygon[i];
                let (x1, y1) = self.polygon[(i + 1) % n];
                x0 * y1 - x1 * y0
            })
            .sum::<f64>()
            / 2.0
    }

    /// Even-odd point-in-polygon test; boundary points count as inside.
    pub fn contains_point(&self, p: (f64, f64)) -> bool {
        let n = self.polygon.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.polygon[i];
            let b = self.polygon[(i + 1) % n];
            if on_segment(p, a, b) {
                return true;
            }
            if (a.1 > p.1) != (b.1 > p.1) {
                let x_cross = a.0 + (p.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
                if p.0 < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Checks that every vertex lies within `[0, cols] x [0, rows]`.
    pub fn check_within_grid(&self, rows: usize, cols: usize) -> Result<()> {
        let (w, h) = (cols as f64, rows as f64);
        match self
            .polygon
            .iter()
            .find(|&&(x, y)| x < -EDGE_EPS || y < -EDGE_EPS || x > w + EDGE_EPS || y > h + EDGE_EPS)
        {
            Some(&(x, y)) => Err(self.invalid(format!(
                "vertex ({x}, {y}) lies outside the {rows}x{cols} grid"
            ))),
            None => Ok(()),
        }
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    cross(a, b, p).abs() <= EDGE_EPS * len.max(1.0)
        && p.0 >= a.0.min(b.0) - EDGE_EPS
        && p.0 <= a.0.max(b.0) + EDGE_EPS
        && p.1 >= a.1.min(b.1) - EDGE_EPS
        && p.1 <= a.1.max(b.1) + EDGE_EPS
}

fn segments_intersect(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    on_segment(a, c, d) || on_segment(b, c, d) || on_segment(c, a, b) || on_segment(d, a, b)
}

pub fn cell_center(cell: CellCoord) -> (f64, f64) {
    (cell.col as f64 + 0.5, cell.row as f64 + 0.5)
}

pub fn point_in_region(region: &Region, cell: CellCoord) -> bool {
    region.contains_point(cell_center(cell))
}

/// Fraction of the `rows x cols` cells whose centers fall in the region.
pub fn region_area_fraction(region: &Region, rows: usize, cols: usize) -> Result<f64> {
    region.validate()?;
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("grid must be non-empty".into()));
    }
    let inside = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| CellCoord::new(r, c)))
        .filter(|&cell| point_in_region(region, cell))
        .count();
    Ok(inside as f64 / (rows * cols) as f64)
}

/// Number of BMUs whose cell lies in the region.
pub fn containment_count(bmus: &[CellCoord], region: &Region) -> usize {
    bmus.iter().filter(|&&c| point_in_region(region, c)).count()
}

/// Convex hull of the given cells' centers, grown by one cell in every
/// direction and clipped to the grid. Synthetic stand-in for a hand-drawn
/// producer region.
pub fn auto_region(
    name: impl Into<String>,
    group: impl Into<String>,
    cells: &[CellCoord],
    rows: usize,
    cols: usize,
) -> Result<Region> {
    let name = name.into();
    if cells.is_empty() {
        return Err(Error::InvalidRegion {
            name,
            reason: "no cells to enclose".into(),
        });
    }
    let (w, h) = (cols as f64, rows as f64);
    let mut points: Vec<(f64, f64)> = cells
        .iter()
        .flat_map(|&cell| {
            let (x, y) = cell_center(cell);
            [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
                .map(|(dx, dy)| ((x + dx).clamp(0.0, w), (y + dy).clamp(0.0, h)))
        })
        .collect();
    Region::new(name, group, convex_hull(&mut points))
}

/// Andrew's monotone chain; drops collinear points.
fn convex_hull(points: &mut [(f64, f64)]) -> Vec<(f64, f64)> {
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(points.iter())
        } else {
            Box::new(points.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Outcome of the two-cell goodness-of-fit test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    /// Songs inside the region.
    pub observed_in: u64,
    pub total: u64,
    /// Region area fraction, the chance expectation.
    pub expected_fraction: f64,
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
}

/// Pearson chi-squared test of `k` of `n` songs inside a region covering a
/// fraction `p` of the map, without continuity correction (one degree of
/// freedom).
pub fn chi2_gof(k: u64, n: u64, p: f64) -> Result<GofResult> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "total count must be at least 1".into(),
        ));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "observed count {k} exceeds total {n}"
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "expected fraction must lie strictly between 0 and 1, got {p}"
        )));
    }
    let (k_f, n_f) = (k as f64, n as f64);
    let exp_in = n_f * p;
    let exp_out = n_f * (1.0 - p);
    let statistic = (k_f - exp_in).powi(2) / exp_in + ((n_f - k_f) - exp_out).powi(2) / exp_out;
    let p_value = chi2_sf(statistic, 1)?.max(f64::MIN_POSITIVE);
    Ok(GofResult {
        observed_in: k,
        total: n,
        expected_fraction: p,
        statistic,
        df: 1,
        p_value,
    })
}

/// Upper-tail probability of the chi-squared distribution, `Q(df/2, x/2)`.
pub fn chi2_sf(x: f64, df: u32) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "chi-squared statistic must be non-negative, got {x}"
        )));
    }
    if df == 0 {
        return Err(Error::InvalidArgument(
            "degrees of freedom must be at least 1".into(),
        ));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma_ur(f64::from(df) / 2.0, x / 2.0))
}

/// Three significant figures, or `< 0.001` below that threshold.
pub fn format_p_value(p: f64) -> String {
    if p < 0.001 {
        "< 0.001".to_string()
    } else {
        let digits = (2 - p.log10().floor() as i32).max(0) as usize;
        format!("{p:.digits$}")
    }
}

/// Parses a region file. Blank lines and `#` comments are skipped.
pub fn parse_regions(text: &str) -> Result<Vec<Region>> {
    let mut regions = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: &str| Error::RegionParse {
            line: line_no,
            message: message.to_string(),
        };
        let mut parts = line.splitn(3, ',');
        let name = parts
            .next()
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| err("missing name"))?;
        let group = parts
            .next()
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| err("missing group"))?;
        let rest = parts
            .next()
            .map(str::trim)
            .ok_or_else(|| err("missing vertex list"))?;
        let inner = rest
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| err("vertex list must be enclosed in [ ]"))?;
        let polygon = parse_vertices(inner)
            .ok_or_else(|| err("malformed vertex list; expected (x,y) pairs"))?;
        regions.push(
            Region::new(name, group, polygon).map_err(|e| Error::RegionParse {
                line: line_no,
                message: e.to_string(),
            })?,
        );
    }
    Ok(regions)
}

fn parse_vertices(inner: &str) -> Option<Vec<(f64, f64)>> {
    let mut vertices = Vec::new();
    let mut rest = inner.trim();
    while !rest.is_empty() {
        let body_start = rest.strip_prefix('(')?;
        let close = body_start.find(')')?;
        let (x, y) = body_start[..close].split_once(',')?;
        vertices.push((x.trim().parse().ok()?, y.trim().parse().ok()?));
        rest = body_start[close + 1..].trim_start();
        if let Some(after) = rest.strip_prefix(',') {
            rest = after.trim_start();
        } else if !rest.is_empty() {
            return None;
        }
    }
    Some(vertices)
}

/// Writes regions in the format read by [`parse_regions`].
pub fn format_regions(regions: &[Region]) -> String {
    let mut out = String::from("# name, group, [(x,y),...] in cell units; x = column, y = row\n");
    for r in regions {
        let verts: Vec<String> = r
            .polygon
            .iter()
            .map(|(x, y)| format!("({x},{y})"))
            .collect();
        let _ = writeln!(out, "{}, {}, [{}]", r.name, r.group, verts.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_statistics() {
        let r = chi2_gof(14, 15, 0.48).unwrap();
        assert!((r.statistic - 12.35).abs() < 0.01);
        assert!(r.p_value < 0.001);
        assert!((chi2_gof(9, 12, 0.30).unwrap().statistic - 11.57).abs() < 0.01);
        let r = chi2_gof(6, 11, 0.28).unwrap();
        assert!((r.statistic - 3.84).abs() < 0.01);
        assert!((r.p_value - 0.050).abs() < 0.001);
    }

    #[test]
    fn perfect_fit() {
        let r = chi2_gof(48, 100, 0.48).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gof_preconditions() {
        assert!(chi2_gof(3, 2, 0.5).is_err());
        assert!(chi2_gof(0, 0, 0.5).is_err());
        assert!(chi2_gof(1, 2, 1.0).is_err());
        assert!(chi2_gof(1, 2, 0.0).is_err());
    }

    #[test]
    fn sf_values() {
        assert_eq!(chi2_sf(0.0, 1).unwrap(), 1.0);
        assert!((chi2_sf(5.0, 1).unwrap() - 0.0253).abs() < 0.0005);
        assert!(chi2_sf(-1.0, 1).is_err());
        // df = 2 is an exponential tail
        assert!((chi2_sf(3.0, 2).unwrap() - (-1.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn p_value_formatting() {
        assert_eq!(format_p_value(0.0004), "< 0.001");
        assert_eq!(format_p_value(0.0253), "0.0253");
        assert_eq!(format_p_value(0.5), "0.500");
        assert_eq!(format_p_value(1.0), "1.00");
    }

    #[test]
    fn rect_fractions() {
        let whole = Region::rect("all", "g", 0.0, 0.0, 20.0, 20.0).unwrap();
        assert_eq!(region_area_fraction(&whole, 20, 20).unwrap(), 1.0);
        let block = Region::rect("b", "g", 2.2, 3.2, 8.0, 7.0).unwrap();
        assert_eq!(region_area_fraction(&block, 20, 20).unwrap(), 0.06);
    }

    #[test]
    fn triangle_membership() {
        let tri = Region::new("t", "g", vec![(0.0, 0.0), (6.0, 0.0), (0.0, 6.0)]).unwrap();
        assert!(point_in_region(&tri, CellCoord::new(1, 1)));
        assert!(!point_in_region(&tri, CellCoord::new(5, 5)));
        // center (2.5, 3.5) lies exactly on the hypotenuse x + y = 6
        assert!(point_in_region(&tri, CellCoord::new(3, 2)));
    }

    #[test]
    fn containment_examples() {
        let whole = Region::rect("all", "g", 0.0, 0.0, 4.0, 4.0).unwrap();
        assert_eq!(containment_count(&[], &whole), 0);
        let bmus: Vec<_> = (0..4).map(|i| CellCoord::new(i, 3 - i)).collect();
        assert_eq!(containment_count(&bmus, &whole), 4);
    }

    #[test]
    fn invalid_polygons() {
        assert!(Region::new("a", "g", vec![(0.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(Region::new("a", "g", vec![(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]).is_err());
        // bow tie
        assert!(Region::new(
            "a",
            "g",
            vec![(0.0, 0.0), (2.0, 2.0), (2.0, 0.0), (0.0, 2.0)]
        )
        .is_err());
        let r = Region::rect("a", "g", 0.0, 0.0, 30.0, 5.0).unwrap();
        assert!(r.check_within_grid(10, 20).is_err());
        assert!(r.check_within_grid(10, 30).is_ok());
    }

    #[test]
    fn auto_region_single_cell_is_three_by_three() {
        let r = auto_region("a", "g", &[CellCoord::new(5, 5)], 10, 10).unwrap();
        assert!((region_area_fraction(&r, 10, 10).unwrap() - 0.09).abs() < 1e-12);
        let corner = auto_region("c", "g", &[CellCoord::new(0, 0)], 10, 10).unwrap();
        assert!((region_area_fraction(&corner, 10, 10).unwrap() - 0.04).abs() < 1e-12);
        corner.check_within_grid(10, 10).unwrap();
        assert!(auto_region("e", "g", &[], 10, 10).is_err());
    }

    #[test]
    fn region_file_round_trip() {
        let text = "# comment\n\n dre , dre, [(0,0), (12,0),(12,10.5),(0,10)]\nrr, rr, [(1,1),(3,1),(2,4)]\n";
        let regions = parse_regions(text).unwrap();
        assert_eq!(regions.len(), 2);
        assert_eq!(regions[0].name, "dre");
        assert_eq!(regions[0].polygon[2], (12.0, 10.5));
        assert_eq!(parse_regions(&format_regions(&regions)).unwrap(), regions);
    }

    #[test]
    fn region_file_errors_name_line() {
        for bad in [
            "a, g, (0,0),(1,0),(0,1)",
            "a, g, [(0,0),(1,0)]",
            "a, g, [(0,0),(1,x),(0,1)]",
            "a",
        ] {
            match parse_regions(&format!("# header\n{bad}\n")) {
                Err(Error::RegionParse { line: 2, .. }) => {}
                other => panic!("{bad}: {other:?}"),
            }
        }
    }
}
