//! Planar map points, overlays, and SVG/CSV emission.

use super::SpaceError;
use crate::corpus::{LabelEntry, Overlay};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// What a map point represents: a voiced suggestion, or a final
/// recommendation that passed or failed the supermajority vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Suggestion,
    RecPassed,
    RecFailed,
}

impl PointKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointKind::Suggestion => "suggestion",
            PointKind::RecPassed => "rec_passed",
            PointKind::RecFailed => "rec_failed",
        }
    }
}

/// 2-D projection of suggestions and recommendations with glyph kinds,
/// optional human overlay labels, and the optimization trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarMap {
    pub ids: Vec<String>,
    pub xy: Vec<[f64; 2]>,
    pub kinds: Vec<PointKind>,
    pub overlay: Vec<Overlay>,
    pub kl_trace: Vec<f64>,
}

/// Output format for [`emit_map`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapFormat {
    Svg,
    Csv,
}

impl PlanarMap {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Replace point kinds; panics if the length differs.
    pub fn with_kinds(mut self, kinds: Vec<PointKind>) -> Self {
        assert_eq!(kinds.len(), self.ids.len(), "one kind per point");
        self.kinds = kinds;
        self
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }
}

/// Attach human overlay labels to map points. Unlabeled points keep overlay
/// `none`; a label for an id absent from the map is an error.
pub fn apply_overlay(mut map: PlanarMap, labels: &[LabelEntry]) -> Result<PlanarMap, SpaceError> {
    for label in labels {
        let index = map
            .index_of(&label.suggestion_id)
            .ok_or_else(|| SpaceError::UnknownId(label.suggestion_id.clone()))?;
        map.overlay[index] = label.overlay;
    }
    Ok(map)
}

/// Render a map to SVG or CSV bytes. Deterministic for identical maps.
pub fn emit_map(map: &PlanarMap, format: MapFormat) -> Vec<u8> {
    match format {
        MapFormat::Csv => emit_csv(map),
        MapFormat::Svg => emit_svg(map).into_bytes(),
    }
}

fn emit_csv(map: &PlanarMap) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["id", "x", "y", "kind", "overlay"])
        .expect("write to Vec cannot fail");
    for i in 0..map.len() {
        writer
            .write_record([
                map.ids[i].as_str(),
                &format!("{:.6}", map.xy[i][0]),
                &format!("{:.6}", map.xy[i][1]),
                map.kinds[i].as_str(),
                map.overlay[i].as_str(),
            ])
            .expect("write to Vec cannot fail");
    }
    writer.into_inner().expect("flush to Vec cannot fail")
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 50.0;

const COLOR_SUGGESTION: &str = "#9e9e9e";
const COLOR_FAILED: &str = "#d32f2f";
const COLOR_PASSED: &str = "#2e7d32";
const COLOR_APPROACH: &str = "#ffffff";
const COLOR_CONCRETE: &str = "#f8bbd0";
const COLOR_CONCRETE_VIABLE: &str = "#c2185b";

fn suggestion_fill(overlay: Overlay) -> &'static str {
    match overlay {
        Overlay::Approach => COLOR_APPROACH,
        Overlay::Concrete => COLOR_CONCRETE,
        Overlay::ConcreteViable => COLOR_CONCRETE_VIABLE,
        Overlay::None => COLOR_SUGGESTION,
    }
}

fn emit_svg(map: &PlanarMap) -> String {
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &map.xy {
        min_x = min_x.min(p[0]);
        max_x = max_x.max(p[0]);
        min_y = min_y.min(p[1]);
        max_y = max_y.max(p[1]);
    }
    if map.is_empty() {
        min_x = 0.0;
        max_x = 1.0;
        min_y = 0.0;
        max_y = 1.0;
    }
    let span_x = (max_x - min_x).max(1e-9);
    let span_y = (max_y - min_y).max(1e-9);
    let sx = |x: f64| MARGIN + (x - min_x) / span_x * (WIDTH - 2.0 * MARGIN);
    // SVG y axis points down.
    let sy = |y: f64| HEIGHT - MARGIN - (y - min_y) / span_y * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="#fafafa"/>"##);

    for i in 0..map.len() {
        let x = sx(map.xy[i][0]);
        let y = sy(map.xy[i][1]);
        let id = xml_escape(&map.ids[i]);
        match map.kinds[i] {
            PointKind::Suggestion => {
                let fill = suggestion_fill(map.overlay[i]);
                let _ = writeln!(
                    svg,
                    r##"<circle class="glyph" cx="{x:.2}" cy="{y:.2}" r="4" fill="{fill}" stroke="#616161" stroke-width="0.5"><title>{id}</title></circle>"##
                );
            }
            PointKind::RecFailed => {
                let _ = writeln!(
                    svg,
                    r#"<path class="glyph" d="M {x0:.2} {y0:.2} L {x1:.2} {y1:.2} M {x0:.2} {y1:.2} L {x1:.2} {y0:.2}" stroke="{COLOR_FAILED}" stroke-width="2" fill="none"><title>{id}</title></path>"#,
                    x0 = x - 5.0,
                    y0 = y - 5.0,
                    x1 = x + 5.0,
                    y1 = y + 5.0,
                );
            }
            PointKind::RecPassed => {
                let _ = writeln!(
                    svg,
                    r#"<path class="glyph" d="M {x0:.2} {y:.2} L {x1:.2} {y:.2} M {x:.2} {y0:.2} L {x:.2} {y1:.2}" stroke="{COLOR_PASSED}" stroke-width="2" fill="none"><title>{id}</title></path>"#,
                    x0 = x - 6.0,
                    y0 = y - 6.0,
                    x1 = x + 6.0,
                    y1 = y + 6.0,
                );
            }
        }
    }

    // Legend.
    let mut entries: Vec<(&str, &str, &str)> = vec![
        ("circle", COLOR_SUGGESTION, "suggestion"),
        ("x", COLOR_FAILED, "recommendation (failed)"),
        ("plus", COLOR_PASSED, "recommendation (passed)"),
    ];
    if map.overlay.iter().any(|o| *o != Overlay::None) {
        entries.push(("circle", COLOR_APPROACH, "overlay: approach"));
        entries.push(("circle", COLOR_CONCRETE, "overlay: concrete"));
        entries.push(("circle", COLOR_CONCRETE_VIABLE, "overlay: concrete viable"));
    }
    let _ = writeln!(svg, r#"<g class="legend" font-family="sans-serif" font-size="12">"#);
    for (row, (shape, color, text)) in entries.iter().enumerate() {
        let y = 20.0 + row as f64 * 18.0;
        let x = WIDTH - 210.0;
        match *shape {
            "circle" => {
                let _ = writeln!(
                    svg,
                    r##"<circle class="legend-mark" cx="{x:.2}" cy="{y:.2}" r="4" fill="{color}" stroke="#616161" stroke-width="0.5"/>"##
                );
            }
            "x" => {
                let _ = writeln!(
                    svg,
                    r#"<path class="legend-mark" d="M {x0:.2} {y0:.2} L {x1:.2} {y1:.2} M {x0:.2} {y1:.2} L {x1:.2} {y0:.2}" stroke="{color}" stroke-width="2" fill="none"/>"#,
                    x0 = x - 4.0,
                    y0 = y - 4.0,
                    x1 = x + 4.0,
                    y1 = y + 4.0,
                );
            }
            _ => {
                let _ = writeln!(
                    svg,
                    r#"<path class="legend-mark" d="M {x0:.2} {y:.2} L {x1:.2} {y:.2} M {x:.2} {y0:.2} L {x:.2} {y1:.2}" stroke="{color}" stroke-width="2" fill="none"/>"#,
                    x0 = x - 5.0,
                    y0 = y - 5.0,
                    x1 = x + 5.0,
                    y1 = y + 5.0,
                );
            }
        }
        let _ = writeln!(
            svg,
            r##"<text x="{tx:.2}" y="{ty:.2}" fill="#212121">{text}</text>"##,
            tx = x + 12.0,
            ty = y + 4.0,
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_map() -> PlanarMap {
        PlanarMap {
            ids: vec!["s1".into(), "s2".into(), "r1".into()],
            xy: vec![[0.0, 0.0], [1.0, 1.0], [-1.0, 0.5]],
            kinds: vec![
                PointKind::Suggestion,
                PointKind::Suggestion,
                PointKind::RecPassed,
            ],
            overlay: vec![Overlay::None; 3],
            kl_trace: vec![1.0, 0.5],
        }
    }

    #[test]
    fn svg_has_one_glyph_per_point_with_legend_colors() {
        let svg = String::from_utf8(emit_map(&sample_map(), MapFormat::Svg)).unwrap();
        let circles = svg.matches(r#"<circle class="glyph""#).count();
        let paths = svg.matches(r#"<path class="glyph""#).count();
        assert_eq!(circles, 2);
        assert_eq!(paths, 1);
        assert!(svg.contains(COLOR_SUGGESTION));
        assert!(svg.contains(COLOR_PASSED));
        assert!(svg.contains(COLOR_FAILED)); // legend includes all kinds
        assert!(svg.contains("legend"));
    }

    #[test]
    fn csv_has_header_plus_one_row_per_point() {
        let csv = String::from_utf8(emit_map(&sample_map(), MapFormat::Csv)).unwrap();
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "id,x,y,kind,overlay");
        assert!(lines[3].starts_with("r1,"));
        assert!(lines[3].contains("rec_passed"));
    }

    #[test]
    fn overlay_applies_and_rejects_unknown_ids() {
        let labels = vec![
            LabelEntry {
                suggestion_id: "s1".into(),
                overlay: Overlay::Concrete,
            },
            LabelEntry {
                suggestion_id: "s2".into(),
                overlay: Overlay::Approach,
            },
        ];
        let map = apply_overlay(sample_map(), &labels).unwrap();
        assert_eq!(map.overlay[0], Overlay::Concrete);
        assert_eq!(map.overlay[1], Overlay::Approach);
        assert_eq!(map.overlay[2], Overlay::None);

        let bad = vec![LabelEntry {
            suggestion_id: "nope".into(),
            overlay: Overlay::Concrete,
        }];
        assert!(matches!(
            apply_overlay(sample_map(), &bad),
            Err(SpaceError::UnknownId(_))
        ));
    }

    #[test]
    fn empty_label_file_leaves_all_none() {
        let map = apply_overlay(sample_map(), &[]).unwrap();
        assert!(map.overlay.iter().all(|o| *o == Overlay::None));
    }

    #[test]
    fn emission_is_deterministic() {
        let map = sample_map();
        assert_eq!(emit_map(&map, MapFormat::Svg), emit_map(&map, MapFormat::Svg));
        assert_eq!(emit_map(&map, MapFormat::Csv), emit_map(&map, MapFormat::Csv));
    }
}
