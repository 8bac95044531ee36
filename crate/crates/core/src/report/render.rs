use std::fmt::Write;

use super::{ColorScale, HeatmapSpec};

/// One-decimal rendering of a transformed value; never `-0.0`.
pub fn format_value(v: f64) -> String {
    let s = format!("{v:.1}");
    if s == "-0.0" { "0.0".to_string() } else { s }
}

fn cell_text(v: Option<f64>, missing: &str) -> String {
    v.map_or_else(|| missing.to_string(), format_value)
}

pub(crate) fn csv_of(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv of utf-8 fields")
}

pub(crate) fn markdown_of(header: &[String], right_aligned: &[bool], rows: &[Vec<String>]) -> String {
    let escape = |s: &str| s.replace('|', "\\|");
    let mut out = String::new();
    let line = |cells: &[String]| format!("| {} |\n", cells.iter().map(|c| escape(c)).collect::<Vec<_>>().join(" | "));
    out.push_str(&line(header));
    let rule: Vec<String> = right_aligned
        .iter()
        .map(|r| if *r { "---:".to_string() } else { "---".to_string() })
        .collect();
    out.push_str(&format!("|{}|\n", rule.join("|")));
    for r in rows {
        out.push_str(&line(r));
    }
    out
}

fn table_rows(spec: &HeatmapSpec, missing: &str) -> Vec<Vec<String>> {
    spec.rows
        .iter()
        .zip(spec.rendered())
        .map(|(label, vals)| {
            std::iter::once(label.clone())
                .chain(vals.into_iter().map(|v| cell_text(v, missing)))
                .collect()
        })
        .collect()
}

fn header(spec: &HeatmapSpec) -> Vec<String> {
    std::iter::once("model".to_string()).chain(spec.cols.iter().cloned()).collect()
}

/// Rendered values as comma-separated text; missing cells are empty.
pub fn heatmap_csv(spec: &HeatmapSpec) -> String {
    csv_of(&header(spec), &table_rows(spec, ""))
}

pub fn heatmap_markdown(spec: &HeatmapSpec) -> String {
    let mut align = vec![false];
    align.extend(spec.cols.iter().map(|_| true));
    format!("**{}**\n\n{}", spec.title, markdown_of(&header(spec), &align, &table_rows(spec, "n/a")))
}

fn mix(from: (f64, f64, f64), to: (f64, f64, f64), t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let c = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(from.0, to.0), c(from.1, to.1), c(from.2, to.2))
}

const WHITE: (f64, f64, f64) = (255.0, 255.0, 255.0);
const RED: (f64, f64, f64) = (178.0, 24.0, 43.0);
const BLUE: (f64, f64, f64) = (33.0, 102.0, 172.0);
const NAVY: (f64, f64, f64) = (8.0, 48.0, 107.0);

/// Fill color of a rendered value.
pub(crate) fn color(scale: ColorScale, v: f64) -> String {
    match scale {
        ColorScale::Diverging { bound } if v < 0.0 => mix(WHITE, BLUE, -v / bound),
        ColorScale::Diverging { bound } => mix(WHITE, RED, v / bound),
        ColorScale::Sequential { min, max } => mix(WHITE, NAVY, (v - min) / (max - min)),
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const CELL_W: usize = 96;
const CELL_H: usize = 30;
const LABEL_W: usize = 200;
const HEADER_H: usize = 140;
const TITLE_H: usize = 30;

/// Heatmap as a standalone SVG document with one labelled cell per value.
pub fn heatmap_svg(spec: &HeatmapSpec) -> String {
    let width = LABEL_W + CELL_W * spec.cols.len() + 10;
    let height = TITLE_H + HEADER_H + CELL_H * spec.rows.len() + 10;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##);
    let _ = writeln!(
        s,
        r#"<text x="10" y="20" font-size="14" font-weight="bold">{}</text>"#,
        xml_escape(&spec.title)
    );
    for (j, col) in spec.cols.iter().enumerate() {
        let x = LABEL_W + CELL_W * j + CELL_W / 2;
        let y = TITLE_H + HEADER_H - 6;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" transform="rotate(-45 {x} {y})">{}</text>"#,
            xml_escape(col)
        );
    }
    for (i, (label, vals)) in spec.rows.iter().zip(spec.rendered()).enumerate() {
        let y = TITLE_H + HEADER_H + CELL_H * i;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LABEL_W - 8,
            y + CELL_H / 2 + 4,
            xml_escape(label)
        );
        for (j, v) in vals.into_iter().enumerate() {
            let x = LABEL_W + CELL_W * j;
            let fill = v.map_or_else(|| "#dddddd".to_string(), |v| color(spec.scale, v));
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{fill}" stroke="#ffffff"/>"##
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                x + CELL_W / 2,
                y + CELL_H / 2 + 4,
                cell_text(v, "n/a")
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
